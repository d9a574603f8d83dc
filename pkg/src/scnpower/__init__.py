"""Minimum-power operating points for small-cell networks whose multi-antenna
gateway feeds the small-cell nodes over a broadcast backhaul while the nodes
serve their users over mutually interfering access links."""

from .scenario import (
    CellConfig,
    ChannelRealization,
    ConfigError,
    NetworkScenario,
    UeConfig,
    access_pathloss_db,
    backhaul_pathloss_db,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    load_channels,
    load_scenario,
    sample_channels,
    watts_to_dbm,
)
from .numerics import (
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveDefiniteError,
    NumericsError,
    hpd_inv_sqrt,
    hpd_solve,
    quad_form,
)
from .backhaul import (
    BackhaulSolution,
    PrecoderMismatchError,
    choose_order,
    closed_form_precoders,
    dpc_rates,
    dual_uplink_rates,
    duality_transform,
    solve_backhaul,
    solve_dual_powers,
    zfbf_solve,
)
from .access import (
    AccessSolution,
    build_sinr_system,
    eval_access_rates,
    eval_access_sinr,
    solve_power_control,
)
from .joint import (
    RateRequirements,
    TrialOutcome,
    proportional_ratios,
    solve_instance,
)
from .experiments import (
    SweepRow,
    SweepSpec,
    SweepStatistics,
    emit_results,
    generate_topology,
    load_results_csv,
    load_sweep_spec,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AccessSolution",
    "BackhaulSolution",
    "CellConfig",
    "ChannelRealization",
    "ConfigError",
    "DimensionMismatchError",
    "NetworkScenario",
    "NotHermitianError",
    "NotPositiveDefiniteError",
    "NumericsError",
    "PrecoderMismatchError",
    "RateRequirements",
    "SweepRow",
    "SweepSpec",
    "SweepStatistics",
    "TrialOutcome",
    "UeConfig",
    "access_pathloss_db",
    "backhaul_pathloss_db",
    "build_sinr_system",
    "choose_order",
    "closed_form_precoders",
    "db_to_linear",
    "dbm_to_watts",
    "dpc_rates",
    "dual_uplink_rates",
    "duality_transform",
    "emit_results",
    "eval_access_rates",
    "eval_access_sinr",
    "generate_topology",
    "hpd_inv_sqrt",
    "hpd_solve",
    "linear_to_db",
    "load_channels",
    "load_results_csv",
    "load_scenario",
    "load_sweep_spec",
    "proportional_ratios",
    "quad_form",
    "run_sweep",
    "sample_channels",
    "solve_backhaul",
    "solve_dual_powers",
    "solve_instance",
    "solve_power_control",
    "watts_to_dbm",
    "zfbf_solve",
]
