"""Online RBF network forecasting experiments."""

from ._orbf import (
    Config,
    ConfigError,
    DataError,
    Ewrls,
    OrbfError,
    RbfNet,
    Result,
    __version__,
    evaluate,
    kmeans,
    load_returns,
    rbf_activation,
    run_experiment,
    select_features,
    set_log_level,
    sign,
    synthesize,
    two_sample_t_test,
    vif,
    wald_test,
)

__all__ = [
    "Config",
    "ConfigError",
    "DataError",
    "Ewrls",
    "OrbfError",
    "RbfNet",
    "Result",
    "__version__",
    "evaluate",
    "kmeans",
    "load_returns",
    "rbf_activation",
    "run_experiment",
    "select_features",
    "set_log_level",
    "sign",
    "synthesize",
    "two_sample_t_test",
    "vif",
    "wald_test",
]
