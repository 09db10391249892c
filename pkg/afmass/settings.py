"""Settings for the afmass project.

Every numerical default lives here so a quoted number can be reproduced from a
single command line. A few of them can be overridden from the environment.
"""

import os

ROOT_PATH: str = os.path.dirname(__file__)
VERSION_FILE: str = os.path.join(ROOT_PATH, "VERSION.txt")

# Sphere quadrature
DEFAULT_QUADRATURE: int = int(os.getenv("AFMASS_QUADRATURE", "32"))
MAX_SPHERE_NODES: int = int(os.getenv("AFMASS_MAX_SPHERE_NODES", str(2**17)))
MIN_QUADRATURE: int = 4
SPHERE_FD_STEP: float = 1e-3  # angular step for finite differences in phi
LAPLACIAN_FD_STEP: float = 5e-3  # fourth-order stencil of the sphere Laplacian
POLE_TOLERANCE: float = 1e-12

# Vectorized evaluation
CHUNK_SIZE: int = 4096
THREADS: int = int(os.getenv("AFMASS_THREADS", "1"))

# Finite differences in the chart: h = eps**(1/3) * max(1, |x|)
FD_STEP_EXPONENT: float = 1.0 / 3.0

# Extrapolation
DEFAULT_RADII: tuple = (50.0, 100.0, 200.0, 400.0)
FIT_CONDITION_LIMIT: float = 1e8
FIT_MIN_SPREAD: float = 1e-3

# Volume integrals
VOLUME_QUADRATURE: int = 8
RADIAL_ORDER: int = 16
PANELS_PER_DECADE: int = 8
DEFAULT_OUTER_RADIUS: float = 400.0
TAIL_TOLERANCE: float = 5e-2

# Weighted norms
WEIGHTED_RADII_PER_DECADE: int = 64
WEIGHTED_DECADES: int = 3
WEIGHTED_QUADRATURE: int = 8

# Mass inequality check
PENROSE_TOLERANCE: float = 1e-6

# Shells
SHELL_GRID_SIZE: int = 65
SHELL_MIN_NODES: int = 32
SHELL_CELL_ORDER: int = 16

# Windows
WINDOW_L: float = 1.0
WINDOW_RESOLUTION: int = 5

# Cones
DEFAULT_CONE_RADII: tuple = (10.0, 20.0, 40.0, 80.0)
CONE_AGREEMENT_TOLERANCE: float = 1e-6
CONE_RADIAL_ORDER: int = 24

# Reports
DATEFMT: str = "%d/%m/%Y %H:%M:%S"
JSON_INDENT: int = 4
