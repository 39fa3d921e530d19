"""Tucker decomposition of dense real/complex tensors via alternating
orthogonal iteration and alternating subspace iteration, with convergence
diagnostics and a synthetic benchmark harness."""

from .tensor import (
    FlopCounter,
    as_tensor,
    count_madds,
    fold,
    frobenius_norm,
    mode_mul,
    multi_mode_mul,
    scalar_kind,
    unfold,
)
from .io import TensorFormatError, read_raw, read_tensor, write_tensor
from .linalg import (
    HermEig,
    ThinSvd,
    align,
    canonical_angles,
    herm_eig,
    polar_factor,
    sin_theta_dist,
    singular_values,
    spectral_norm_estimate,
    thin_svd,
    top_k_eigvectors,
    trace_norm,
)
from .model import (
    KktReport,
    TuckerFactors,
    approx_error,
    contracted_unfolding,
    core,
    gram,
    kkt_residual,
    objective,
    reconstruct,
    unfolding_spectral_norms,
)
from .solvers import (
    IterationRecord,
    ModeDiagnostics,
    NumericalError,
    SolveResult,
    SolverConfig,
    asi,
    hooi,
    hosvd_init,
    random_init,
    solve,
    sweep_shared_contractions,
)
from .genbench import (
    BenchCell,
    BenchReport,
    SyntheticSpec,
    bench_sweep,
    flop_estimate,
    gen_synthetic,
    paperlike_small_plan,
)

__version__ = "0.1.0"
