"""Constructive preference elicitation with the Choice Perceptron."""

from .domain import (
    Attribute,
    Configuration,
    Context,
    DomainSpec,
    EMPTY_CONTEXT,
    FeatureRow,
    LinearConstraint,
    boolean,
    categorical,
    continuous,
    integer,
)
from .perceptron import (
    ETA_GRID,
    Session,
    SessionState,
    TraceRow,
    UpdateDelta,
    adapt_step_size,
    apply_update,
    compute_delta,
    read_trace,
    replay_weights,
    run_elicitation,
    write_trace,
)
from .query import (
    QuerySelection,
    QuerySet,
    argmax_utility,
    gamma_schedule,
    random_query,
    select_query,
)
from .solver import MilpProblem, SolveOutcome, SolverConfig, Variable, solve
from .users import (
    SimulatedUser,
    UserPopulation,
    choice_distribution,
    check_reasonable,
    expected_utility_gain,
    respond,
    sample_users,
)

__version__ = "0.1.0"
