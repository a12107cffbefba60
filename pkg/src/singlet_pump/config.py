"""Numerical tolerances and size caps shared across the package.

Values are module-level defaults; callers that need different limits pass
them explicitly (every function that consults one of these accepts an
override keyword).
"""

MAX_DIM = 4096            # cap on total Hilbert-space dimension
HERMITIAN_TOL = 1e-12     # max |rho - rho^dagger| for a density matrix
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
UNITARY_TOL = 1e-10
KRAUS_TOL = 1e-10
CHOI_TOL = 1e-9

EIG_MAX_DIM = 256
EIG_SWEEPS_PER_DIM = 100  # QR iteration cap is this times N
EIG_RESIDUAL_TOL = 1e-9   # relative to ||A||
DEGENERACY_TOL = 1e-9

DENSE_SUPEROP_MAX_D = 16  # largest d for an explicit d^2 x d^2 superoperator
APPLY_DRIFT_TOL = 1e-12   # hermitize / renormalize only above this drift

ODE_RTOL = 1e-8
ODE_ATOL = 1e-10
FOCK_BREACH_TOL = 1e-6
FOCK_HEADROOM_TOL = 1e-10
