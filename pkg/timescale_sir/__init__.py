# Time scales
from timescale_sir.calculus.timescale import (
    Interval,
    Point,
    TimeScale,
    GridPoint,
    PointKind,
    canonicalize,
    real_interval,
    integer_range,
    sigma,
    mu,
    grid,
    scattered_points,
    dense_pieces,
    delta_integral,
    cumulative_delta_integral,
)

# Coefficients
from timescale_sir.calculus.coefficients import (
    CoefficientFunction,
    CoefficientKind,
    constant,
    reciprocal,
    log_normal_pdf,
    von_bertalanffy,
    sinusoid,
    tabulated,
)

# Regressivity and the exponential function
from timescale_sir.calculus.exponential import (
    RegressivityReport,
    check_regressive,
    circle_plus,
    circle_minus,
    circle_plus_fn,
    circle_minus_fn,
    ts_exp,
    ts_exp_sigma,
    solve_linear_dynamic,
)

# SIR model
from timescale_sir.sir.model import (
    SirState,
    SirScenario,
    SolutionMethod,
    SolutionSeries,
    make_scenario,
)
from timescale_sir.sir.closed_form import (
    g_function,
    closed_form_timescale,
    closed_form_continuous,
    closed_form_constant_continuous,
    closed_form_discrete,
)
from timescale_sir.sir.recursion import step_recursion, solve

# Long term behavior
from timescale_sir.sir.long_term import (
    EquilibriumPlane,
    LimitOutcome,
    Certificate,
    LimitClassification,
    MonotonicityReport,
    equilibria,
    classify_limit,
    monotonicity_report,
)

# Scenario files and runs
from timescale_sir.transmuters.scenario import (
    ScenarioFile,
    parse_scenario,
    format_scenario,
    load_scenario,
)
from timescale_sir.cli.runner import RunOptions, RunReport, run, sweep, check
