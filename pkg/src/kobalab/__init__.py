"""Kobayashi-metric laboratory for convex domains in C^d."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BoundarySearchError,
    BudgetExhausted,
    DimensionError,
    KobalabError,
    PreconditionError,
    SingularMapError,
)
from .linalg import AffineMap, apply_affine, cvec, invert_affine  # noqa: E402
from .polynomial import HermitianPolynomial, degree_along, multitype, nondegenerate_check  # noqa: E402
from .domains import (  # noqa: E402
    AffineImage,
    Ball,
    HalfSpace,
    Intersection,
    PolynomialGraph,
    Polydisk,
    boundary_distance,
    closest_boundary_point,
    contains,
    dir_boundary_distance,
    domain_from_json,
    local_hausdorff,
    unit_disk,
    upper_half_plane,
)
from .kobayashi import (  # noqa: E402
    dist_disk,
    dist_halfplane,
    distance_bracket,
    distance_lower,
    distance_upper,
    exact_oracle,
    finsler_bracket,
    quasi_geodesic,
)
from .hyperbolicity import fat_triangle_witness, four_point_scan, gromov_product, thin_triangle_defect  # noqa: E402
from .rescaling import blowup_sequence, distance_continuity_check, gaussier_frame, infinite_type_maps  # noqa: E402
from .finite_type import line_type, m_convexity_constant  # noqa: E402
