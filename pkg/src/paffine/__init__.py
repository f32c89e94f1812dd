"""p-affine surface areas, generalised Santalo bodies and floating bodies."""

from .errors import (CapTooLarge, CenterNotInterior, DenominatorUnderflow, DomainError,
                     IllConditionedFit, IntegralDiverged, InvalidBody, InvalidInput,
                     LevelBelowMinimum, NoConvergence, NotSmooth, NumericalFailure,
                     OutOfSlab, PaffineError, PointNotInterior, PreconditionViolated,
                     SingularMap, SymmetryRequired, ToleranceNotMet, Unsupported)
from .floating import (FloatingProfile, cap_height, cap_volume, floating_polar_excess,
                       theorem8_constant, theorem8_estimate, theorem8_rhs)
from .geometry import (AffineImage, Ball, BinetEllipsoid, ConvexBody, Ellipsoid,
                       FourierBody2D, PolarView, affine_image, binet_ellipsoid, body_from_dict,
                       body_to_dict, boundary_point, centered, chord_length, curvature_function,
                       polar, polar_volume, radial, santalo_point, section_volume, support,
                       volume)
from .oracle import McConfig, McEstimate, mc_phi, mc_polar_volume, mc_volume
from .quadrature import (LimitEstimate, SphereRule, adaptive_1d, beta_fn, default_rule,
                         fit_power_law_limit, sphere_rule, unit_ball_volume)
from .santalo import (LevelSetBody, PhiBeta, covariance_residual, eq1_residual, lemma5,
                      phi, prop4_check, prop7_log_rate, prop7_ratio, santalo_body,
                      santalo_radial, theorem6_estimate, theorem6_rhs, volume_deficit)
from .surface import duality_residual, o_p, tilde_o_minus_n, tilde_o_p

__version__ = "0.1.0"
