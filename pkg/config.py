"""Configuration for ustlab."""

import json
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

from errors import ValidationError

# Preferences file location (directory created on first write)
PREFS_DIR = Path(os.environ.get("USTLAB_CONFIG_DIR", Path.home() / ".config" / "ustlab"))
PREFS_FILE = PREFS_DIR / "preferences.json"

# Numerical tolerances
QUAD_TOL = 1e-10  # potential-kernel quadrature
DET_CLAMP = 1e-12  # slack before a probability outside [0, 1] is an error
ORACLE_TOL = 1e-9  # agreement between independent computation paths
FD_STEP = 1e-4  # central-difference step for the disk Green's function

# Enumeration guards
MAX_ENUM = 20  # star size for subset sums
MAX_ENUM_JOINT = 24  # total star size for joint degree PMFs
MAX_PERM = 9  # edge count for explicit permutation enumeration
MAX_TREES = 10**6  # spanning trees for brute-force enumeration
MAX_GRASSMANN_PAIRS = 14

# Monte Carlo
SAMPLES = 10**5
MC_STREAMS = 8  # fixed so results do not depend on the thread count

# Scaling-limit ladder
EPS_LADDER = (1 / 8, 1 / 12, 1 / 16, 1 / 24)

# Output
FORMATS = ("json", "csv")
DEFAULT_FORMAT = "json"

THREADS_ENV = "USTLAB_THREADS"
DEFAULT_THREADS = 1

# Keys that may be overridden from the preferences file
_PREF_KEYS = {
    "quad_tol": "QUAD_TOL",
    "det_clamp": "DET_CLAMP",
    "oracle_tol": "ORACLE_TOL",
    "max_enum": "MAX_ENUM",
    "max_enum_joint": "MAX_ENUM_JOINT",
    "max_perm": "MAX_PERM",
    "max_trees": "MAX_TREES",
    "samples": "SAMPLES",
    "format": "DEFAULT_FORMAT",
    "threads": "DEFAULT_THREADS",
}


def _load_prefs() -> dict:
    if PREFS_FILE.exists():
        try:
            with open(PREFS_FILE) as f:
                prefs = json.load(f)
                if isinstance(prefs, dict):
                    return prefs
        except Exception:
            pass
    return {}


def get_preference(key: str):
    """Get a setting, falling back to the module default."""
    if key not in _PREF_KEYS:
        raise ValidationError(f"unknown preference: {key}")
    return _load_prefs().get(key, globals()[_PREF_KEYS[key]])


def set_preference(key: str, value):
    """Persist a setting to the preferences file."""
    if key not in _PREF_KEYS:
        raise ValidationError(f"unknown preference: {key}")

    prefs = _load_prefs()
    prefs[key] = value
    PREFS_DIR.mkdir(parents=True, exist_ok=True)
    with open(PREFS_FILE, "w") as f:
        json.dump(prefs, f, indent=2)


def get_thread_count(flag: Optional[int] = None) -> int:
    """Resolve the worker count: flag, then environment, then preferences, then 1."""
    if flag is not None:
        return flag
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return int(get_preference("threads"))


@dataclass
class RunConfig:
    """Resolved settings for one CLI run."""
    subcommand: str
    seed: Optional[int] = None
    threads: int = 1
    quad_tol: float = field(default_factory=lambda: get_preference("quad_tol"))
    det_clamp: float = field(default_factory=lambda: get_preference("det_clamp"))
    oracle_tol: float = field(default_factory=lambda: get_preference("oracle_tol"))
    max_enum: int = field(default_factory=lambda: get_preference("max_enum"))
    max_enum_joint: int = field(default_factory=lambda: get_preference("max_enum_joint"))
    max_perm: int = field(default_factory=lambda: get_preference("max_perm"))
    max_trees: int = field(default_factory=lambda: get_preference("max_trees"))
    samples: int = field(default_factory=lambda: get_preference("samples"))
    format: str = field(default_factory=lambda: get_preference("format"))
    out: Optional[str] = None

    def validate(self) -> "RunConfig":
        for name in ("threads", "max_enum", "max_enum_joint", "max_perm", "max_trees", "samples"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        for name in ("quad_tol", "det_clamp", "oracle_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValidationError(f"{name} must lie in (0, 1), got {value}")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}")
        return self

    def to_dict(self):
        return asdict(self)
