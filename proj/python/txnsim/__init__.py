"""Python interface to the transaction-network resilience simulator."""

from ._core import (
    SimConfig,
    __version__,
    cell_seed,
    edge_list,
    equivalence_slope,
    find_m0,
    find_r0,
    find_r1,
    fit_boundary,
    fit_erf,
    fit_power_law,
    run_once,
    trace_boundary,
)

__all__ = [
    "SimConfig",
    "__version__",
    "cell_seed",
    "edge_list",
    "equivalence_slope",
    "find_m0",
    "find_r0",
    "find_r1",
    "fit_boundary",
    "fit_erf",
    "fit_power_law",
    "run_once",
    "trace_boundary",
]
