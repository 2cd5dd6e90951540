"""
Configuration for schrodecay
Environment loading, logging setup, version string and the validated RunConfig
"""
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

from dotenv import load_dotenv

from errors import InputError

VERSION = "0.3.0"

DEFAULT_LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_environment_loaded = False


def load_environment():
    """Load .env once. Only logging settings are read from the environment."""
    global _environment_loaded
    if not _environment_loaded:
        load_dotenv()
        _environment_loaded = True


def setup_logging(level: Optional[str] = None):
    """Configure root logging the same way for every entry point"""
    load_environment()
    level_name = (level or os.getenv("SCHRODECAY_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=os.getenv("SCHRODECAY_LOG_FORMAT", DEFAULT_LOG_FORMAT),
    )


METHODS = ("mollified", "partition")
TARGETS = ("I", "I1", "both")


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a command needs, validated at construction.

    Identical RunConfig (same seed) gives bit-identical documents; out_dir is
    excluded from the hash so a rerun elsewhere reproduces the same hash.
    """
    symbol_path: str
    out_dir: str = "results"
    seed: int = 20240917
    tol: float = 1e-7
    budget: int = 10_000_000
    method: str = "mollified"

    # eval / regions
    t: Optional[float] = None
    x: Tuple[float, ...] = ()
    L: Optional[float] = None
    grid_size: int = 41
    extent: float = 4.0

    # analyze
    sphere_samples: int = 2000
    ellipticity_tol: float = 1e-8
    same_sign_samples: int = 4000

    # scan
    target: str = "both"
    small_points: int = 12
    large_points: int = 8
    t_min: float = 1e-3
    t_max: float = 1e2
    seed_radii: int = 8
    seed_angles: int = 8
    refine_iterations: int = 12
    slack: float = 0.1
    pieces: bool = False

    def __post_init__(self):
        positive = {
            "tol": self.tol,
            "budget": self.budget,
            "grid_size": self.grid_size,
            "extent": self.extent,
            "sphere_samples": self.sphere_samples,
            "ellipticity_tol": self.ellipticity_tol,
            "same_sign_samples": self.same_sign_samples,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "seed_radii": self.seed_radii,
            "seed_angles": self.seed_angles,
            "refine_iterations": self.refine_iterations,
            "slack": self.slack,
        }
        for name, value in positive.items():
            if not (value > 0):
                raise InputError(f"{name} must be positive, got {value}")
        if self.small_points < 3 or self.large_points < 3:
            raise InputError("each t regime needs at least 3 points")
        if not (self.t_min < 1.0 <= self.t_max):
            raise InputError(f"need t_min < 1 <= t_max, got [{self.t_min}, {self.t_max}]")
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.target not in TARGETS:
            raise InputError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.L is not None and not (self.L > 0):
            raise InputError(f"L must be positive, got {self.L}")
        if self.t is not None and self.t == 0:
            raise InputError("t = 0 is not supported (the kernel is a delta)")

    def canonical(self) -> dict:
        data = asdict(self)
        data.pop("out_dir")
        data["symbol_path"] = os.path.basename(self.symbol_path)
        data["x"] = list(self.x)
        return data

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()
