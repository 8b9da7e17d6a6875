"""Physical constants in Gaussian-CGS units (CODATA 2018, exact-SI derived)."""

HBAR = 1.054571817e-27  # erg s
KB = 1.380649e-16  # erg / K
C_LIGHT = 2.99792458e10  # cm / s

# CGS -> SI factors used only at the CLI boundary
DYN_TO_N = 1e-5
ERG_S_TO_W = 1e-7
DYN_CM_TO_N_M = 1e-7
M_TO_CM = 1e2
M3_TO_CM3 = 1e6
