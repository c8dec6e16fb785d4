"""Covariate-assisted partial-identification intervals for joint potential-outcome functionals."""

from ._cotpi import (
    ConfigError,
    CotpiError,
    InputError,
    NumericalError,
    SchemaError,
    bures_trace,
    estimate,
    model_oracle,
    plugin_exact_match_estimate,
    psd_sqrt,
    run_benchmark,
    select_cell_constant,
    simulate,
    solve_1d_quantile_ot,
    solve_exact_ot,
    wasserstein1,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CotpiError",
    "InputError",
    "NumericalError",
    "SchemaError",
    "bures_trace",
    "estimate",
    "model_oracle",
    "plugin_exact_match_estimate",
    "psd_sqrt",
    "run_benchmark",
    "select_cell_constant",
    "simulate",
    "solve_1d_quantile_ot",
    "solve_exact_ot",
    "wasserstein1",
]
