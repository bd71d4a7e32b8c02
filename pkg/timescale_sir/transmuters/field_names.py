# Those are the column names of the CSV files and the keys of scenario files

# Solution series CSV, in column order
SERIES_COLUMNS = ("t", "sigma_t", "mu_t", "x", "y", "z", "method")

# Scenario file keys, in the order format_scenario writes them
SCENARIO_KEYS = (
    "name",
    "timescale",
    "b",
    "c",
    "x0",
    "y0",
    "z0",
    "t0",
    "t_end",
    "h",
    "horizon",
    "method",
    "out",
)

REQUIRED_SCENARIO_KEYS = {"timescale", "b", "c", "x0", "y0"}

NUMERIC_SCENARIO_KEYS = {"x0", "y0", "z0", "t0", "t_end", "h", "horizon"}

# Values of the scenario "method" key
RUN_METHODS = {"closed", "recursion", "both"}

# Scenario fields a sweep may vary
SWEEP_PARAMS = {"b", "c", "x0", "y0", "z0", "h"}

# Sweep aggregate CSV, in column order
SWEEP_COLUMNS = (
    "param",
    "value",
    "t_end",
    "x",
    "y",
    "z",
    "outcome",
    "certificate",
    "alpha_estimate",
    "alpha_lower_bound",
    "conservation_error",
    "oracle_deviation",
)
