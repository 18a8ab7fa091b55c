"""flowbound: certified Gronwall-type separation bounds for vector-field
flows on Riemannian manifolds.

The library estimates the exponent C_T = sup ||nabla X||_g over flowed
tubes, certifies d(p(t), q(t)) <= d(p0, q0) * exp(C_T t) along integral
curves, and detects where the bound fails on incomplete manifolds.
"""

from .catalog import (catalog, field_catalog, make_linear_field, parse_field,
                      resolve_field)
from .errors import (DomainError, FlowboundError, GridMismatch,
                     IncompleteFlow, NoPathFound, NumericalError,
                     StepLimitExceeded, UnknownField, UnknownManifold,
                     UnknownScenario)
from .flow import (CurveFamily, Trajectory, VectorFieldSpec,
                   arclength_resample, curve_length, flow_curve, flow_point,
                   length_evolution, torsion_swap_residual)
from .geodesics import (BvpConfig, GeodesicSegment, distance, distance_value,
                        geodesic_shoot, segment_initial_velocity,
                        slit_plane_distance)
from .gronwall import (CertifyConfig, CTEstimate, GronwallCertificate,
                       RefinementConfig, SamplerConfig, ViolationReport,
                       certify_curve, certify_pair, check_bound,
                       enclosure_radius, estimate_CT_global,
                       estimate_CT_tube)
from .manifolds import (LinearMap, ManifoldSpec, TangentVector, as_point,
                        christoffel, covariant_differential, metric_eval,
                        operator_norm, tangent_norm)
from .rk import USING_EXTENSION, IntegratorConfig

__version__ = "0.1.0"
