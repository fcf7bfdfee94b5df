import os
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class EngineSettings:
    closure_cap: int = 1_000_000  # states per section closure
    memo_cap: int = 500_000  # memoized words and sections per backend
    nucleus_budget: int = 10_000  # candidate nucleus elements
    nucleus_rounds: int = 50
    n_max: int = 12  # deepest stability check
    order_cap: int = 10_000
    subgroup_cap: int = 5_000
    arrow_cap: int = 10_000  # arrows per partition part
    partition_budget: int = 100_000  # exhaustive candidates
    replication_cap: int = 3  # Schreier-generator product length
    random_restarts: int = 32
    seed: int = 0
    jobs: int = os.cpu_count() or 1

    @classmethod
    def from_env(cls, prefix: str = "WREATH_") -> "EngineSettings":
        """Defaults overridden by WREATH_<FIELD> environment variables"""
        overrides = {}
        for f in fields(cls):
            value = os.getenv(prefix + f.name.upper())
            if value is not None:
                overrides[f.name] = int(value)
        return cls(**overrides)

    def override(self, **kwargs) -> "EngineSettings":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


DEFAULT_SETTINGS = EngineSettings()
