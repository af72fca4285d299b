"""Compare the numba and numpy backends of the hot kernels.

Run ``python benchmarks/bench_kernels.py``. The first numba call of each
kernel compiles (or loads the on-disk cache); timings below exclude it.
"""

import argparse
import time

import numpy as np

from kirchhoff_spectral import _kernels
from kirchhoff_spectral.dynamics import Nonlinearity, integrate
from kirchhoff_spectral.modulus import MollifierKernel, SampledFunction
from kirchhoff_spectral.spectrum import Spectrum, StatePair


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--K", type=int, default=64)
    args = ap.parse_args()

    if not _kernels.JIT_ENABLED:
        print("numba backend disabled (KIRCHHOFF_SPECTRAL_JIT=0 or numba missing); numpy only")
    backends = ["numpy", "jit"] if _kernels.JIT_ENABLED else ["numpy"]

    spec = Spectrum.interval_laplacian(args.K)
    a = np.exp(-spec.lambdas ** 1.5)
    pair = StatePair(spec, a, a)
    nl = Nonlinearity.kirchhoff()
    rng = np.random.default_rng(0)
    f = SampledFunction(rng.random(20001), 1e-3)
    kern = MollifierKernel.make()
    ts = np.linspace(0.0, f.a, 20001)
    logs = rng.normal(size=100_000) * 50

    cases = {
        f"integrate kirchhoff K={args.K} T=5 tol=1e-9":
            lambda b: integrate(spec, nl, pair, 5.0, 1e-9, backend=b),
        f"mollify 20001 points x {kern.order} nodes":
            lambda b: _kernels.mollify_batch(f.samples, f.step, ts, 0.01, kern.nodes, kern.kweights, backend=b),
        "suffix log-sum-exp n=1e5":
            lambda b: _kernels.suffix_logsumexp(logs, backend=b),
    }
    print(f"{'kernel':48s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup")
    for name, fn in cases.items():
        for b in backends:
            fn(b)  # warm-up / compile
        t = [best_of(lambda: fn(b), args.repeat) for b in backends]
        speed = f"{t[0] / t[1]:8.1f}x" if len(t) == 2 else ""
        print(f"{name:48s} " + " ".join(f"{x:9.4f}s" for x in t) + "  " + speed)


if __name__ == "__main__":
    main()
