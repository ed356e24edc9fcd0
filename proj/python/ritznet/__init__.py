"""Neural-network variational PDE solvers.

Thin wrapper over the C++ core: quadrature sampling, network evaluation,
the WAN / deep-Ritz / nested double-Ritz trainers, the instability probe,
and the experiment runner.
"""

from ._core import (
    ConfigError,
    DegenerateTestError,
    default_config,
    eval_network,
    integrate,
    probe_instability,
    problem_ids,
    reproduce,
    run,
    run_to_dir,
    sample_batch,
    sample_beta,
    selftest,
)

__all__ = [
    "ConfigError",
    "DegenerateTestError",
    "default_config",
    "eval_network",
    "integrate",
    "probe_instability",
    "problem_ids",
    "reproduce",
    "run",
    "run_to_dir",
    "sample_batch",
    "sample_beta",
    "selftest",
]
