from .engine import SimEngine, SimReport, run_scenario
from .scenario import Scenario, ScenarioError, load_scenario

__all__ = ["Scenario", "ScenarioError", "SimEngine", "SimReport", "load_scenario",
           "run_scenario"]
