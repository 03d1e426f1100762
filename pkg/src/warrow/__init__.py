"""Generic fixpoint solving for abstract-interpretation constraint systems.

The package combines widening and narrowing into a single update
operator and ships the solver family built around it: round-robin and
worklist iteration, their structured terminating variants, demand-driven
local solvers with localized widening points and restarting, solvers for
side-effecting systems, a two-phase baseline, and recursive iteration
over weak topological orderings.  An interval-analysis frontend for a
small imperative language makes the behavior observable end to end.
"""

from .equations import (
    Assignment,
    BudgetExhausted,
    Contrib,
    EquationSystem,
    EvalRecord,
    PurityViolation,
    check_admissible,
    eval_rhs,
    infl_from_deps,
    is_box_solution,
    is_post_solution,
    kleene_oracle,
    static_system,
)
from .lattice import (
    BOT,
    DomainOps,
    Env,
    Interval,
    guard,
    interval,
    interval_arith,
    interval_ops,
    natinf_ops,
    env_ops,
    warrow,
)
from .solvers import (
    SolveOutcome,
    SolverConfig,
    Status,
    apply_switch_bound,
    solve_rr,
    solve_srr,
    solve_sw,
    solve_two_phase,
    solve_w,
    solve_rld,
    solve_slr1,
    solve_slr2,
    solve_slr3,
    solve_slr4,
    solve_slr1_plus,
    solve_slr3_plus,
)
from .wto import HierarchicalOrdering, build_wto, check_wto, parse_wto, solve_rec, wto_ops
