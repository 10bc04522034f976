"""UAV-assisted coverage simulator for sleeping-cell networks."""

try:
    from . import _core  # wheel layout: the extension sits inside the package
except ImportError:  # pragma: no cover - build-tree layout used by ctest
    import _core

from_core = [
    "RngStream",
    "TrafficConfig",
    "ScheduleMode",
    "ScenarioConfig",
    "World",
    "build_world",
    "ChannelParams",
    "link_distance",
    "sample_channel_gain",
    "compute_sinr",
    "EnergyParams",
    "uav_step_energy",
    "cell_step_power",
    "RewardWeights",
    "EnvParams",
    "Env",
    "Config",
    "load_config_file",
    "config_hash",
    "mlp_init",
    "mlp_forward",
    "SumTree",
    "train",
    "run_eval",
]

for _name in from_core:
    globals()[_name] = getattr(_core, _name)

__all__ = list(from_core)
__version__ = "0.1.0"
