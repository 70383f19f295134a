"""Lorentzian geodesic interpolation between oriented hyperplanes and hypersurfaces."""

__version__ = "0.1.0"

from .lorentz import (DualProjectivePoint, HyperplanePoint, MinkowskiVector, lorentz_inner,
                      lorentz_map, nu_inverse, nu_map)
from .geodesics import (ExtrapolationWarning, GeodesicSegment, PoincareElement, dlambda_dtheta,
                        dlambda_dx, geodesic_point, geodesic_velocity0, lambda_fn, lorentzian_distance,
                        mu_fn, poincare_apply, projective_flow_offset, pseudo_rotation_flow,
                        sigma_fn, translation_homothety_flow)
from .envelope import (EnvelopeSample, HyperplaneFamilyPatch, ParameterGrid, cross_product_general,
                       envelope_grid, envelope_point, smoothness_test)
from .frames import (FrameFamily, SectionSample, SkewGenerator, frame_interpolate,
                     frenet_normal_plane_check, parallel_check, parallel_transport_frame)
from .surfaces import SurfacePatch, nested_paraboloids, graph, paraboloid, plane, sphere
from .flow import (Correspondence, FlowProblem, SingularityReport, flow_curve, flow_curves, flow_map,
                   level_surface, nonsingularity_matrix, singularity_scan)
from .config import ExperimentConfig, parse_config
from .run import RunReport, run
