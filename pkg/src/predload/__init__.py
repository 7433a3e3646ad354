"""Online load balancing of temporary jobs with predicted durations."""

from .model import INF, Arrival, Instance, Job, LoadLedger, distortion_params, lp_norm, objective, scale_durations
from .policies import GreedyLp, LinfExp, NaiveBaseline, RoundRobin
from .simulate import build_policy, run_online

__all__ = [
    "INF",
    "Arrival",
    "Instance",
    "Job",
    "LoadLedger",
    "distortion_params",
    "lp_norm",
    "objective",
    "scale_durations",
    "GreedyLp",
    "LinfExp",
    "NaiveBaseline",
    "RoundRobin",
    "build_policy",
    "run_online",
]
