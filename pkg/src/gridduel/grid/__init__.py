"""Grid model, AC power flow and synthetic network generation."""

from .model import Bus, GridModel, Injection, Line, Transformer
from .powerflow import BranchFlow, PowerFlowSolution, build_admittance, solve
from .synthetic import generate_city_grid

__all__ = [
    "Bus",
    "GridModel",
    "Injection",
    "Line",
    "Transformer",
    "BranchFlow",
    "PowerFlowSolution",
    "build_admittance",
    "solve",
    "generate_city_grid",
]
