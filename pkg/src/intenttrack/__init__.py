"""Hierarchical intention tracking for human-robot collaboration, with a
closed-loop 2D assembly simulator, batch evaluation, and a live session
service."""

from .config import (
    ScenarioConfig,
    default_config,
    figure_scenario,
    VARIANT_COEXIST,
    VARIANT_COOPERATE,
    VARIANT_HIT,
)
from .filtering import (
    FilterConfig,
    IntentionSpace,
    Posterior,
    TransitionModel,
    hierarchical_likelihood,
    link_distribution,
    map_intention,
    predict,
    transition_matrix,
    trajectory_likelihood,
    update,
)
from .metrics import Metrics, compute_metrics, frame_accuracy
from .motion import (
    GilmParams,
    GoalRegion,
    ObservationWindow,
    estimate_speed,
    fr_goal_region,
    gilm_likelihood,
    gilm_rollout,
    gilm_step,
)
from .runner import run_batch, run_trial
from .tracker import (
    HighLevelTracker,
    LowLevelTracker,
    MifConfig,
    ParticleSet,
    TrackerStack,
    high_level_step,
    mif_posterior,
    mif_step,
)
from .triallog import TrialLog, read_log, write_log

__version__ = "0.1.0"
