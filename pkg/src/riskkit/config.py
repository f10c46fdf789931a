"""Runtime configuration: file-based with environment overrides.

The config file is JSON. Only RISKKIT_PORT and RISKKIT_STORAGE can be
overridden from the environment; everything else is file-or-default so a
deployment's behavior stays reviewable in one place.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .calibration import DEFAULT_T
from .consensus import DEFAULT_EXACT_BOUND
from .pos import DEFAULT_REGION, LikelihoodRegion, region_from_config

__all__ = ["Config", "load_config", "DEFAULT_PORT"]

DEFAULT_PORT = 8322

_KNOWN_KEYS = {"port", "storage_path", "threshold", "exact_bound", "region", "cors_origins"}


@dataclass(frozen=True)
class Config:
    port: int = DEFAULT_PORT
    storage_path: Optional[str] = None  # None keeps workspaces in memory
    threshold: float = DEFAULT_T
    exact_bound: int = DEFAULT_EXACT_BOUND
    region: LikelihoodRegion = field(default_factory=lambda: DEFAULT_REGION)
    # origins allowed to call the API from a browser; empty disables CORS
    cors_origins: tuple = ()

    def __post_init__(self):
        if not (0 < self.port < 65536):
            raise ValueError("port must be in 1..65535")
        if not (0 < self.threshold <= 1):
            raise ValueError("threshold must be in (0, 1]")
        if self.exact_bound < 1:
            raise ValueError("exact_bound must be positive")


def load_config(path: Optional[str] = None, env: Optional[dict] = None) -> Config:
    """Config from an optional JSON file plus environment overrides.

    Unknown file keys are rejected so typos fail loudly instead of being
    silently ignored.
    """
    env = os.environ if env is None else env
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - _KNOWN_KEYS
        if unknown:
            raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))

    port = data.get("port", DEFAULT_PORT)
    storage = data.get("storage_path")
    if "RISKKIT_PORT" in env:
        port = int(env["RISKKIT_PORT"])
    if "RISKKIT_STORAGE" in env:
        storage = env["RISKKIT_STORAGE"]

    region = DEFAULT_REGION
    if "region" in data:
        region = region_from_config(data["region"])

    return Config(
        port=port,
        storage_path=storage,
        threshold=data.get("threshold", DEFAULT_T),
        exact_bound=data.get("exact_bound", DEFAULT_EXACT_BOUND),
        region=region,
        cors_origins=tuple(data.get("cors_origins", ())),
    )
