"""Default tolerances shared across the library.

Double-precision algebraic identities hold to ~1e-12, so floor-level checks
use ALG_TOL.  Data that went through an ODE integrator or a second-order
finite-difference stencil carries larger errors and is judged against the
FD-limited tolerances instead.
"""

# Exact-arithmetic-grade identities (structure constants, SVD rank cuts).
ALG_TOL = 1e-9

# Inner-membership decisions (log projections, factor search).
INNER_TOL = 1e-6

# Second-order finite differences at the default 33-node grids.
FD_TOL = 1e-4

# Gauge-compatibility residuals on overlaps (FD-limited).
GAUGE_TOL = 1e-4

# Curvature-vs-ad least squares.  Exact-node data passes at 1e-6; once FD
# derivatives participate the budget widens to 1e-4.
ACC_TOL_EXACT = 1e-6
ACC_TOL = 1e-4

# Parallel transport (RK4 with the default 64 steps).
TRANS_TOL = 1e-6

# Default ODE step count for transports along chart rays.
ODE_STEPS = 64
