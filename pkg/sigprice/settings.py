"""Runtime settings read from the environment (``SIGPRICE_*``)."""

from __future__ import annotations

from pydantic import BaseSettings, Field, validator


class RuntimeSettings(BaseSettings):
    """
    Process-wide knobs for the Monte Carlo engine.

    ``SIGPRICE_THREADS`` provides the default for ``--threads``. The chunk
    size fixes how paths are grouped for batched lifting; it is independent
    of the thread count so results do not depend on parallelism.
    """

    threads: int = Field(1, description="Worker threads for path simulation and lifting")
    chunk_size: int = Field(512, description="Paths per batch handed to a worker")
    show_progress: bool = Field(False, description="Show a tqdm progress bar on stderr")

    class Config:
        env_prefix = "SIGPRICE_"

    @validator("threads", "chunk_size")
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"must be >= 1, got {value}")
        return value


def load_settings(**overrides) -> RuntimeSettings:
    """Settings from the environment, with explicit (non-None) overrides applied."""
    clean = {key: value for key, value in overrides.items() if value is not None}
    return RuntimeSettings(**clean)
