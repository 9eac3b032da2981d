"""Run configuration with file and command-line overrides.

Config files are plain text, one `dotted.key = value` per line, with `#`
comments and blank lines ignored.  Every key must be known; a typo is an
error rather than a silent default.  Precedence is CLI flag over file
value over built-in default.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError
from .forest import ForestConfig
from .mlp import MlpConfig
from .roi import DEFAULT_PADDING, DEFAULT_SIZE

DEFAULT_SEED = 42
DEFAULT_K_FOLDS = 5


@dataclass(frozen=True)
class SmoteSettings:
    enabled: bool = True
    k_neighbors: int = 5

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ConfigError("smote.k_neighbors must be >= 1")

    def to_dict(self) -> dict:
        return {"enabled": self.enabled, "k_neighbors": self.k_neighbors}


@dataclass(frozen=True)
class RoiSettings:
    padding: int = DEFAULT_PADDING
    size: int = DEFAULT_SIZE

    def __post_init__(self):
        if self.padding < 0:
            raise ConfigError("roi.padding must be >= 0")
        if self.size < 2:
            raise ConfigError("roi.size must be >= 2")

    def to_dict(self) -> dict:
        return {"padding": self.padding, "size": self.size}


@dataclass(frozen=True)
class RunConfig:
    seed: int = DEFAULT_SEED
    k_folds: int = DEFAULT_K_FOLDS
    smote: SmoteSettings = field(default_factory=SmoteSettings)
    forest: ForestConfig = field(default_factory=ForestConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    roi: RoiSettings = field(default_factory=RoiSettings)

    def __post_init__(self):
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "k_folds": self.k_folds,
            "smote": self.smote.to_dict(),
            "forest": self.forest.to_dict(),
            "mlp": self.mlp.to_dict(),
            "roi": self.roi.to_dict(),
        }


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _parse_optional_int(text: str) -> int | None:
    lowered = text.strip().lower()
    if lowered in ("none", "null"):
        return None
    return _parse_int(text)


def _parse_float(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


# dotted key -> (top-level field, nested field or None, parser)
_KEY_TABLE: dict[str, tuple[str, str | None, Callable[[str], Any]]] = {
    "seed": ("seed", None, _parse_int),
    "k_folds": ("k_folds", None, _parse_int),
    "smote.enabled": ("smote", "enabled", _parse_bool),
    "smote.k_neighbors": ("smote", "k_neighbors", _parse_int),
    "forest.n_trees": ("forest", "n_trees", _parse_int),
    "forest.max_depth": ("forest", "max_depth", _parse_optional_int),
    "forest.min_samples_split": ("forest", "min_samples_split", _parse_int),
    "forest.features_per_split": ("forest", "features_per_split", _parse_optional_int),
    "forest.n_threads": ("forest", "n_threads", _parse_optional_int),
    "mlp.hidden": ("mlp", "hidden", _parse_int),
    "mlp.epochs": ("mlp", "epochs", _parse_int),
    "mlp.batch_size": ("mlp", "batch_size", _parse_int),
    "mlp.learning_rate": ("mlp", "learning_rate", _parse_float),
    "roi.padding": ("roi", "padding", _parse_int),
    "roi.size": ("roi", "size", _parse_int),
}

KNOWN_KEYS = tuple(sorted(_KEY_TABLE))


def read_config_file(path: str | Path) -> dict[str, str]:
    """Raw `key = value` pairs from a config file; keys are validated here."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_TABLE:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def build_config(
    file_pairs: dict[str, str] | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """RunConfig from defaults, then file pairs, then typed overrides.

    `file_pairs` holds raw strings (from read_config_file); `overrides`
    holds already-typed values keyed by the same dotted names, as supplied
    by command-line flags.
    """
    values: dict[str, dict[str, Any] | Any] = {
        "seed": DEFAULT_SEED,
        "k_folds": DEFAULT_K_FOLDS,
        "smote": {},
        "forest": {},
        "mlp": {},
        "roi": {},
    }

    def assign(key: str, value: Any) -> None:
        top, nested, _ = _KEY_TABLE[key]
        if nested is None:
            values[top] = value
        else:
            values[top][nested] = value

    for key, text in (file_pairs or {}).items():
        if key not in _KEY_TABLE:
            raise ConfigError(f"unknown key {key!r}")
        assign(key, _KEY_TABLE[key][2](text))
    for key, value in (overrides or {}).items():
        if key not in _KEY_TABLE:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            assign(key, value)

    try:
        return RunConfig(
            seed=values["seed"],
            k_folds=values["k_folds"],
            smote=SmoteSettings(**values["smote"]),
            forest=ForestConfig(**values["forest"]),
            mlp=MlpConfig(**values["mlp"]),
            roi=RoiSettings(**values["roi"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """One-call path: optional file plus optional overrides."""
    pairs = read_config_file(path) if path is not None else None
    return build_config(pairs, overrides)
