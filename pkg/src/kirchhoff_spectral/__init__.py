"""Spectral-Galerkin toolkit for the abstract Kirchhoff equation.

``u'' + m(|A^{1/2}u|²) A u = 0`` on the eigenbasis of a diagonal
operator ``A e_k = λ_k² e_k``: spectra and coefficient vectors, continuity
moduli and mollifiers, Gevrey-type and spectral-gap spaces, the
decomposition of arbitrary data into two gap pairs, adaptive Galerkin
integration, and a numerical replay of the global a-priori estimates.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DimensionError,
    NotApplicableError,
    NumericError,
    PreconditionError,
    SequenceExhaustedError,
)
from .spectrum import Spectrum, StatePair, apply_power, coupling, sobolev_norm_sq  # noqa: E402
from .modulus import (  # noqa: E402
    ContinuityModulus,
    MollifierKernel,
    SampledFunction,
    check_modulus_axioms,
    check_omega_inequalities,
    estimate_gamma0,
    mollifier_report,
    mollify,
    mollify_derivative,
)
from .spaces import (  # noqa: E402
    GapSequence,
    LogValue,
    WeightFunction,
    gevrey_norm_sq,
    gm_membership,
    lambda_for_strict,
    lambda_for_weak,
)
from .gap import Decomposition, build_rho_sequence, decompose, split  # noqa: E402
from .dynamics import Nonlinearity, Trajectory, c_trace, hamiltonian, integrate, rhs  # noqa: E402
from .certify import (  # noqa: E402
    certify_strict,
    certify_weak,
    constants_strict,
    constants_weak,
    h_inverse,
    pick_n,
    threshold_scan,
)
