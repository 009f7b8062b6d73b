"""CRLB-driven time/bandwidth trade-off design for distributed MIMO radar."""
from .design import DesignBounds, accuracy_from_waveform, budget_from_noise_model, map_alpha
from .errors import (BudgetError, DomainError, GeometryError, SamplingError, SingularFIMError,
                     UnsolvableError, UpradError)
from .fisher import (FisherDecomposition, crlb, decompose, fim, fim_direct, gradient, objective,
                     pair_jacobians, weight_matrix)
from .geometry import PlatformState, Scenario, bistatic_measurements, pair_index, range_rate, slant_range
from .optimizer import (ClusterLabel, LocalConfig, Problem, PSOConfig, SolveResult, classify_cluster,
                        make_problem, solve_local, solve_pso, solve_vertex)

__version__ = "0.1.0"
