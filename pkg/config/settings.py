"""
Configuration settings for the quantum Wishart sampler
"""

# Density-matrix validity tolerances
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
BLOCH_RADIUS_TOL = 1e-10

# Wishart parameter checks
RANK_TOL = 1e-10  # second singular value of M relative to the first
PD_TOL = 1e-12    # smallest eigenvalue of Sigma

# Series evaluation of the confluent factor
SERIES_REL_TOL = 1e-15
SERIES_MAX_TERMS = 100_000
SERIES_CHUNK = 256

# Quadrature for qubit normalization constants
QUAD_EPSREL = 1e-8

# Peak placement
MU_BRACKET = (0.0, 20.0)
FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 500
GRADIENT_STEP = 1e-5

# Maximum likelihood
MLE_STARTS = 20
MLE_POSITION_TOL = 1e-5

# Rejection sampling
DEFAULT_UNIFORM_ALPHA = 0.002  # 0.2 percent uniform admixture
DEFAULT_GRID_RESOLUTION = 0.01       # disc grid spacing
DEFAULT_BALL_GRID_RESOLUTION = 0.025  # ball grid spacing; the point count grows as spacing^-3
DEFAULT_SAFETY = 1.05
BOUND_REFINE_TOP = 10
BOUNDARY_LATTICE = 2000  # Fibonacci points on the boundary circle or sphere
UNBOUNDED_FACTOR = 1e6
BATCH_SIZE = 20_000

# Bounded likelihood regions
DEFAULT_LAMBDA_POINTS = 101

# Log of a zero likelihood (p_k = 0 with n_k > 0)
LOG_FLOOR = -1e300

# Random streams (never change silently: stochastic regressions depend on it)
RNG_ALGORITHM = 'PCG64'
DEFAULT_SEED = 20240517

# Output locations
OUTPUT_DIR_ENV = 'WISHART_OUTPUT_DIR'
DEFAULT_OUTPUT_DIR = 'results'
LOG_FILE = 'wishart_sampler.log'

VERSION = '1.0.0'
