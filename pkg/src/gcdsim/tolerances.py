"""Numerical tolerances shared by validators and tests."""

NORM_ATOL = 1e-10          # state normalization after normalizing constructors
HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10           # smallest admissible density-matrix eigenvalue is -PSD_ATOL
UNITARY_ATOL = 1e-10
EXPM_AGREEMENT = 1e-9      # Pade route vs eigendecomposition route
PARTIAL_TRACE_ATOL = 1e-12
FIDELITY_SYMMETRY = 1e-12
WEYL_ATOL = 1e-12

CUTOFF_SAFE_POP = 1e-8     # max population allowed in the top 10% of Fock levels
