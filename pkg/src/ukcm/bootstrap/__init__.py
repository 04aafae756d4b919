"""Bootstrap percolation engine and the spanning, crossing and covering detectors."""
from .config import (AllHealthy, Boundary, Configuration, FrozenSet, Grid, InfectedHalfPlane,
                     centered_box, grid_for, region_box)
from .closure import closure, closure_points, is_closed
from .span import (SpanNode, SpanTree, al_violations, critical_exists, extract_critical,
                   max_disjoint_spanned, span, spanned_scan)
from .crossing import (MODES, BudgetExceeded, RegionProblem, crossing_event, is_locally_infectable,
                       is_u_crossed, local_window)
from .cover import (DropletSet, UnknownCrumb, clusters_of, cover, covered_check, covered_scale_gaps,
                    default_face_set, disjoint_clusters_inside, is_crumb)
