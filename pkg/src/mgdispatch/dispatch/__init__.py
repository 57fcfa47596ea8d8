from .bnb import MILPResult, branch_and_bound
from .lp import MixedIntegerProgram
from .milp import (
    BadBigM,
    DispatchModel,
    Infeasible,
    MilpSolution,
    Unbounded,
    build_milp,
    decisions_from_solution,
    required_big_m,
    solve_milp,
)
from .mps import export_model, lp_text, mps_text, parse_lp, parse_mps, read_lp, read_mps, write_lp, write_mps
from .receding import NoIncumbent, RecedingResult, build_window_milp, receding_horizon_run, window_inputs
from .rules import rule_based_step, rule_decision, run_rule_baseline
from .simplex import LPResult, solve_lp
