"""flowlab: numerical laboratory for continuous flows on compact surfaces."""

from .atlas import (AtlasKind, ClosedAnnulusAtlas, MappingTorusAtlas, SphereAtlas,
                    SurfaceAtlas, SurfacePoint, TorusAtlas, make_annulus, make_sphere,
                    make_torus)
from .cantor import CantorApprox, StripSet, minkowski_cover_gap, strip_component_scan
from .circlemap import GOLDEN, CircleMap, build_denjoy_map, rigid_rotation, rotation_number
from .fields import FieldSpec, Section
from .integrate import (IntegratorSettings, SectionCrossings, Termination, Trajectory,
                        integrate, poincare_crossings)
from .surgery import (AffinePlacement, CantorStrip, FakeSaddle, GenericBump,
                      PolarPlacement, SingularizeSection, apply_surgery, bump_factor,
                      singularize_section)
from . import catalog

__version__ = "0.1.0"
