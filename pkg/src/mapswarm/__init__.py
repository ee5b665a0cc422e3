"""Self-organizing overlay of mobile access points over mobile IoT devices."""
from .association import (ClusterSet, CoverageMatcher, LloydKMeans, Matching, coverage_proportion,
                          lloyd_cluster, match_msds, nearest_center)
from .config import ConfigError, ScenarioConfig, load_config
from .controller import ControlInput, ControlParams, control_input
from .graph import GraphView, build_graph, epidemic_bound, fiedler_value, is_connected, laplacian
from .kernels import KernelParams, bump, phi, psi, sigma_gradient, sigma_norm
from .simulation import MetricsRecord, Scenario, SimulationFault, run_scenario, simulate
from .state import MapState, MsdState

__version__ = "0.1.0"
