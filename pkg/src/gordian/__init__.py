"""
Computational lab for a thick two-component link whose components are
unlinked yet cannot be pulled apart while keeping thickness and length.

The modules build the link, certify its properties (thickness, knottedness
of the inner arc, dotted components of a spanning cone) and run constrained
relaxations that try to split it.
"""
from .cone import ConeDisk, ConeMetric, DotReport, cone_angle, cone_distance, cone_over, dotted_components
from .construction import (ConstructionReport, GordianSpec, build_link, clasp_link, construct, hopf_link,
                           validate_construction)
from .engine import EngineConfig, ForceSpec, SimState, SplitAttemptReport, attempt_split, separation_margin, step
from .errors import (ConstructionError, GenericityError, GeometryError, GordianError, InvariantViolation,
                     StallError, ValidationError)
from .geom import PolyCurve, ThickLink, curve_length, linking_number
from .isoperimetric import BoundMargin, DiskConfig, sample_and_sweep, verify_n_disk_bound, verify_three_disk_bound
from .knots import certify_knotted, determinant, project_to_diagram
from .thickness import ThicknessReport, is_thick, link_thickness

__version__ = "0.1.0"
