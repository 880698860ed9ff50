"""Experiment layer: plans, run generation, execution, storage, reports."""

from .executor import execute_plan
from .factory import build_environment, load_grid
from .governor import GovernorHost
from .plan import apply_override, load_plan, prepare_plan, resolve_path
from .report import write_reports
from .runs import RunDescriptor, component_seed, generate_runs, run_identity
from .store import ExperimentStore, RunWriter
from .workers import ConductorHost, WorkerHost, params_topic

__all__ = [
    "execute_plan",
    "build_environment",
    "load_grid",
    "GovernorHost",
    "apply_override",
    "load_plan",
    "prepare_plan",
    "resolve_path",
    "write_reports",
    "RunDescriptor",
    "component_seed",
    "generate_runs",
    "run_identity",
    "ExperimentStore",
    "RunWriter",
    "ConductorHost",
    "WorkerHost",
    "params_topic",
]
