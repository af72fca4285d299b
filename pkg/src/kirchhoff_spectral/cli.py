"""Command-line front end.

Exit codes: 0 when every reported check passes, 1 when a report contains a
violation, 2 for usage and configuration errors. Data outputs are written
with sorted keys and shortest round-trip floats so that identical configs
give byte-identical files; wall-clock information goes to ``run_meta.json``
only.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

from . import __version__, _kernels
from .certify import certify_strict, certify_weak, summary_text
from .config import build, load_config, resolve_config
from .dynamics import integrate
from .errors import ConfigError, PreconditionError, SequenceExhaustedError
from .gap import decompose
from .modulus import ContinuityModulus, check_modulus_axioms, check_omega_inequalities, default_grid
from .spaces import gevrey_norm_sq, gm_membership, lambda_for_strict, lambda_for_weak

__all__ = ["run", "main"]

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kirchhoff-spectral", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON run description")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed-rho", type=float, help="first term of the gap sequence")
        sp.add_argument("--modes", type=int, help="number of modes K (overrides spectrum.K)")
        sp.add_argument("--quiet", action="store_true", help="suppress the stdout summary")
        return sp

    common(sub.add_parser("simulate", help="integrate and export the trajectory as CSV"))
    common(sub.add_parser("decompose", help="split the data into two gap pairs"))
    common(sub.add_parser("certify-strict", help="strictly hyperbolic estimate replay"))
    common(sub.add_parser("certify-weak", help="weakly hyperbolic estimate replay"))
    common(sub.add_parser("norms", help="weighted norms and membership of the data"))
    common(sub.add_parser("demo", help="decompose, simulate and certify both halves"))
    cm = common(sub.add_parser("check-modulus", help="axiom and inequality suite for ω"),
                config_required=False)
    cm.add_argument("--omega", help="modulus, e.g. lipschitz, hoelder:0.5, log-lipschitz")
    return p


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n")


def _config(args) -> dict:
    cfg = load_config(args.config)
    raw = cfg
    if args.modes is not None or args.seed_rho is not None:
        raw = json.loads(json.dumps(cfg))
        if args.modes is not None:
            if raw["spectrum"]["preset"] == "custom":
                raise ConfigError([("/spectrum/K", "--modes does not apply to a custom spectrum")])
            raw["spectrum"]["K"] = args.modes
        if args.seed_rho is not None:
            raw["run"]["rho_seed"] = args.seed_rho
        raw = resolve_config(raw)
    return raw


def _outdir(args, cfg) -> Path:
    out = Path(args.out if args.out else (cfg["output"]["dir"] if cfg else "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _meta(out: Path, command: str) -> None:
    _dump(out / "run_meta.json", {
        "command": command,
        "version": __version__,
        "backend": _kernels.DEFAULT_BACKEND,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    })


def _decompose(rc):
    r = rc.run
    return decompose(rc.spectrum, rc.pair, rc.phi, r["beta"], rho_seed=r["rho_seed"],
                     grid_step=r["grid_step"], n_max=r["n_max"], parity=r["parity"])


def _with_config(doc: dict, cfg: dict) -> dict:
    doc = dict(doc)
    doc["resolved_config"] = cfg
    return doc


def _cmd_simulate(args, cfg, out, say):
    rc = build(cfg)
    r = rc.run
    traj = integrate(rc.spectrum, rc.nonlinearity, rc.pair, r["T"], r["tol"])
    traj.to_csv(out / "trajectory.csv", modes=cfg["output"]["modes"])
    stats = traj.drift_stats()
    ok = traj.completed and stats["max_rel_drift"] <= 100.0 * r["tol"]
    _dump(out / "manifest.json", _with_config({"drift": stats, "pass": ok}, cfg))
    say(f"simulate: {'PASS' if ok else 'FAIL'}  status={stats['status']}  snapshots={stats['snapshots']}"
        f"  max_rel_drift={stats['max_rel_drift']:.3e}")
    return ok


def _cmd_decompose(args, cfg, out, say):
    d = _decompose(build(cfg))
    _dump(out / "decomposition.json", _with_config(d.to_certificate(), cfg))
    say(f"decompose: {'PASS' if d.certified else 'FAIL'}  rho={d.rho.rhos.tolist()}  exact={d.exact}")
    return d.certified


def _certify_halves(rc, d, cfg, out, say, case, trajs=None):
    r = rc.run
    fn = certify_strict if case == "strict" else certify_weak
    ok = d.certified
    texts = []
    for name, half, seq in (("ubar", d.ubar, d.rho_bar), ("uhat", d.uhat, d.rho_hat)):
        traj = None if trajs is None else trajs[name]
        rep = fn(rc.spectrum, half, rc.nonlinearity, rc.phi, seq, r["T"], r["tol"], beta=r["beta"], traj=traj)
        _dump(out / f"certificate_{name}.json", _with_config(rep, cfg))
        texts.append(f"[{name}] " + summary_text(rep))
        ok = ok and rep["pass"]
    (out / "summary.txt").write_text("\n".join(texts) + "\n")
    for t in texts:
        say(t)
    return ok


def _cmd_certify(case):
    def cmd(args, cfg, out, say):
        rc = build(cfg)
        if case == "strict" and not rc.nonlinearity.strict:
            raise PreconditionError("certify-strict needs a nonlinearity with ν > 0")
        d = _decompose(rc)
        _dump(out / "decomposition.json", _with_config(d.to_certificate(), cfg))
        return _certify_halves(rc, d, cfg, out, say, case)
    return cmd


def _cmd_demo(args, cfg, out, say):
    rc = build(cfg)
    r = rc.run
    d = _decompose(rc)
    _dump(out / "decomposition.json", _with_config(d.to_certificate(), cfg))
    say(f"decompose: {'PASS' if d.certified else 'FAIL'}  rho={d.rho.rhos.tolist()}")
    trajs = {}
    for name, half in (("ubar", d.ubar), ("uhat", d.uhat)):
        traj = integrate(rc.spectrum, rc.nonlinearity, half, r["T"], r["tol"])
        traj.to_csv(out / f"trajectory_{name}.csv", modes=cfg["output"]["modes"])
        trajs[name] = traj
    case = "strict" if rc.strict else "weak"
    return _certify_halves(rc, d, cfg, out, say, case, trajs)


def _cmd_norms(args, cfg, out, say):
    rc = build(cfg)
    r = rc.run
    d = _decompose(rc)
    rows = []
    for n, rn in enumerate(d.rho.rhos):
        rr = float(rn) ** r["beta"]
        rows.append({
            "n": n,
            "rho": float(rn),
            "r": rr,
            "u0_alpha_3_4": gevrey_norm_sq(rc.spectrum, rc.pair.u0, rc.phi, rr, 0.75).to_dict(),
            "u1_alpha_1_4": gevrey_norm_sq(rc.spectrum, rc.pair.u1, rc.phi, rr, 0.25).to_dict(),
        })

    def member(pair, seq):
        return {
            "u0": [m.to_dict() for m in gm_membership(rc.spectrum, pair.u0, rc.phi, seq, 0.75, r["beta"])],
            "u1": [m.to_dict() for m in gm_membership(rc.spectrum, pair.u1, rc.phi, seq, 0.25, r["beta"])],
        }

    def rows_ok(mem):
        return all(m["pass"] for rs in mem.values() for m in rs if not m["vacuous"])

    # arbitrary data need not lie in a single GM space; only the halves are claimed to
    data_mem = member(rc.pair, d.rho)
    halves = {"ubar": member(d.ubar, d.rho_bar), "uhat": member(d.uhat, d.rho_hat)}
    ok = all(rows_ok(m) for m in halves.values())
    ls, lw = lambda_for_strict(rc.omega, rc.phi), lambda_for_weak(rc.omega, rc.phi)
    doc = {"rho": d.rho.to_dict(), "rho_bar": d.rho_bar.to_dict(), "rho_hat": d.rho_hat.to_dict(),
           "norms": rows,
           "data_membership": {"informational": True, "pass": rows_ok(data_mem), "rows": data_mem},
           "halves_membership": halves,
           "Lambda_strict": ls if ls != float("inf") else "inf",
           "Lambda_weak": lw if lw != float("inf") else "inf", "pass": ok}
    _dump(out / "norms.json", _with_config(doc, cfg))
    say(f"norms: {'PASS' if ok else 'FAIL'}  terms={len(d.rho)}  data in one GM space: "
        f"{'yes' if rows_ok(data_mem) else 'no'}  Lambda_strict={ls:.6g}  Lambda_weak={lw:.6g}")
    return ok


def _cmd_check_modulus(args, cfg, out, say):
    text = args.omega or (cfg["omega"] if cfg else None)
    if text is None:
        raise _UsageError("check-modulus needs --omega or a config with an 'omega' entry")
    try:
        omega = ContinuityModulus.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise _UsageError(str(exc)) from None
    ax = check_modulus_axioms(omega, default_grid())
    ineq = check_omega_inequalities(omega)
    ok = ax.passed and ineq.passed
    doc = {"omega": omega.to_dict(), "axioms": ax.to_dict(), "inequalities": ineq.to_dict(), "pass": ok}
    if cfg:
        doc["resolved_config"] = cfg
    _dump(out / "modulus_report.json", doc)
    say(f"check-modulus {omega.label}: {'PASS' if ok else 'FAIL'}"
        f"  axioms={'ok' if ax.passed else 'FAIL'}  inequalities={'ok' if ineq.passed else 'FAIL'}")
    return ok


_COMMANDS = {
    "simulate": _cmd_simulate,
    "decompose": _cmd_decompose,
    "certify-strict": _cmd_certify("strict"),
    "certify-weak": _cmd_certify("weak"),
    "norms": _cmd_norms,
    "demo": _cmd_demo,
    "check-modulus": _cmd_check_modulus,
}


def run(argv=None) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    say = (lambda s: None) if args.quiet else print
    try:
        cfg = _config(args) if args.config else None
        out = _outdir(args, cfg)
        ok = _COMMANDS[args.command](args, cfg, out, say)
        _meta(out, args.command)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (_UsageError, PreconditionError, SequenceExhaustedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_VIOLATION


def main() -> None:
    sys.exit(run())
