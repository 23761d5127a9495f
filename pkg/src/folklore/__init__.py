"""FOLKLORE: improper online multiclass logistic regression with logarithmic regret."""

from .bandit import BanditConfig, BanditLearner, default_gamma
from .baselines import OgdState, ogd_step
from .boosting import AdaBoostOLM, BoostingRegressor, WeakLearnerSim, cost_matrix
from .core_math import grad_loss, hessian_loss, log_loss, softmax
from .errors import ConfigError, FolkloreError, InvalidInputError, NumericalError, ProtocolError
from .harness import StreamRecord, StreamSpec, generate_stream, online_to_batch, run_episode
from .learner import FolkloreLearner, FrozenPredictor, LearnerConfig, log_regret_bound
from .pd_state import PdState

__version__ = "0.1.0"

__all__ = [
    "AdaBoostOLM", "BanditConfig", "BanditLearner", "BoostingRegressor", "ConfigError",
    "FolkloreError", "FolkloreLearner", "FrozenPredictor", "InvalidInputError", "LearnerConfig",
    "NumericalError", "OgdState", "PdState", "ProtocolError", "StreamRecord", "StreamSpec",
    "WeakLearnerSim", "cost_matrix", "default_gamma", "generate_stream", "grad_loss",
    "hessian_loss", "log_loss", "ogd_step", "online_to_batch", "run_episode", "softmax",
    "log_regret_bound",
]
