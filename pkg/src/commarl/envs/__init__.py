from .core import ContractViolation, Env, EnvSpec, StepResult
from .hallway import HallwayConfig, HallwayEnv, make_hallway
from .search import SearchConfig, SearchEnv, make_search
from .sensor import SensorConfig, SensorEnv, make_sensor

_ENV_FACTORIES = {
    "sensor": (make_sensor, SensorConfig),
    "hallway": (make_hallway, HallwayConfig),
    "search": (make_search, SearchConfig),
}


def make_env(name: str, **kwargs) -> Env:
    """Construct an environment by name with config-field keyword overrides."""
    if name not in _ENV_FACTORIES:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(_ENV_FACTORIES)}")
    factory, config_cls = _ENV_FACTORIES[name]
    return factory(config_cls(**kwargs))


__all__ = [
    "ContractViolation", "Env", "EnvSpec", "StepResult",
    "HallwayConfig", "HallwayEnv", "make_hallway",
    "SearchConfig", "SearchEnv", "make_search",
    "SensorConfig", "SensorEnv", "make_sensor",
    "make_env",
]
