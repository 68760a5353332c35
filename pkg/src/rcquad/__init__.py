"""Random-cluster model toolkit: exact small-graph oracles, cluster Monte
Carlo, crossing-event geometry, strip-density renormalization probes, and
the four-phase classifier."""

from .lattice import SQUARE, Lattice, Region, build_region, dual_of, apply_symmetry
from .measure import (BoundaryCondition, ModelParams, bc_dominates, cluster_count,
                      dual_config, dual_params, heat_bath_prob, induced_bc,
                      log_weight, self_dual_point)
from .oracle import enumerate_measure, exact_prob
from .events import (bridge_event_Aj, crossing, is_crossed,
                     leftmost_vertical_crossing, one_arm, strip_event_Ei)
from .sampler import (ChainState, Estimate, Schedule, chayes_machta_step,
                      estimate_event, glauber_sweep, monotone_pair_run)
from .strips import (StripSpec, check_density_relation, check_power_monotonicity,
                     estimate_density_p, estimate_density_q, pushing_probe,
                     strip_estimate)
from .phases import PhaseVerdict, box_crossing_check, classify, one_arm_scan, pc_scan

__version__ = "0.1.0"
