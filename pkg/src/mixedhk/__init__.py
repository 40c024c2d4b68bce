"""Mixed stubborn-averaging (Hegselmann-Krause) opinion dynamics toolkit."""

from .dynamics import (
    ModelConfig,
    OpinionState,
    StubbornnessSchedule,
    averaging_matrix,
    neighbor_matrix,
    neighborhoods,
    schedule_alpha,
    step,
)
from .errors import (
    ConfigError,
    IntegrityError,
    MixedHKError,
    NumericalFailure,
    ScheduleExhaustedError,
    SizeLimitError,
)
from .matching import MatchedForm, match_decomposition, verify_decomposition
from .monitors import (
    ContractionVerdict,
    ConvergenceVerdict,
    FloorVerdict,
    MovementBudget,
    StepMetrics,
    check_trajectory,
    component_diameters,
    components_interact,
    compute_step_metrics,
    consensus_envelope_check,
    contraction_check,
    contraction_coefficient,
    displacement_floor_check,
    energy,
    energy_drop_bound,
    first_interaction_times,
    interaction_equivalence,
    movement_budget_terms,
    settling_bounds,
    settling_time,
)
from .profile import (
    EquilibriumVerdict,
    MergeEvent,
    Profile,
    build_profile,
    check_delta_equilibrium,
    detect_merge_events,
    diameter,
    hull_distance,
    is_delta_trivial,
)
from .simulate import simulate
from .spectral import (
    SpectralReport,
    UpdateFactorization,
    check_cheeger,
    cheeger_constant,
    eigh,
    is_generalized_laplacian,
    lambda2_chain_check,
    laplacian,
    update_factorization,
)
from .trajectory import Trajectory
from .batch import batch_run
from .config import config_to_text, parse_config, parse_config_text, read_initial_csv
from .scenarios import SCENARIOS, run_scenario
from .trajio import read_trajectory, write_trajectory

__version__ = "0.1.0"
