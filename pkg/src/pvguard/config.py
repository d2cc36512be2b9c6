"""Pipeline configuration: TOML files with PVG_* environment overrides."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

DEFAULT_INSTRUCTION = "Translate the following case report into English narrative text"

MOCK = "mock"
HTTP = "http"


@dataclass(frozen=True)
class AdapterSettings:
    type: str = MOCK
    profile: str = "separable"       # mock only
    endpoint: str = ""               # http only
    timeout: float = 10.0
    retries: int = 2
    source_language: str = "ja"
    target_language: str = "en"

    def validate(self) -> None:
        if self.type not in (MOCK, HTTP):
            raise ConfigError(f"adapter.type must be 'mock' or 'http', got {self.type!r}")
        if self.type == HTTP and not self.endpoint:
            raise ConfigError("adapter.endpoint is required for the http adapter")
        if self.type == MOCK and self.endpoint:
            raise ConfigError("exactly one adapter must be configured; "
                              "mock adapter cannot carry an endpoint")


@dataclass(frozen=True)
class Seeds:
    adapter: int = 0
    corpus: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    lexicon_path: str = ""
    cache_path: str = ""
    adapter: AdapterSettings = field(default_factory=AdapterSettings)
    k: int = 1
    dluq_threshold: Union[float, str] = "calibrated:0.05"
    tluq_mode: str = "per_document"
    tluq_global_thresholds: Optional[tuple[float, float, float]] = None
    review_entropy_threshold: Optional[float] = None
    instruction: str = DEFAULT_INSTRUCTION
    seeds: Seeds = field(default_factory=Seeds)
    output_dir: str = "out"

    def validate(self, check_paths: bool = True) -> None:
        self.adapter.validate()
        if self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k}")
        if self.tluq_mode not in ("per_document", "global"):
            raise ConfigError(f"tluq_mode must be per_document or global, got {self.tluq_mode!r}")
        if self.tluq_mode == "global" and self.tluq_global_thresholds is None:
            raise ConfigError("tluq_mode=global requires tluq_global_thresholds")
        parse_threshold(self.dluq_threshold)
        if not self.instruction:
            raise ConfigError("instruction must be non-empty")
        if check_paths:
            if self.lexicon_path and not Path(self.lexicon_path).exists():
                raise ConfigError(f"lexicon_path does not exist: {self.lexicon_path}")
            if self.cache_path and not Path(self.cache_path).exists():
                raise ConfigError(f"cache_path does not exist: {self.cache_path}")


def parse_threshold(value: Union[float, str]) -> tuple[Optional[float], Optional[float]]:
    """-> (fixed_threshold, calibration_fpr); exactly one is set."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value), None
    if isinstance(value, str) and value.startswith("calibrated:"):
        try:
            fpr = float(value.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad calibrated threshold {value!r}") from exc
        if not (0.0 < fpr < 1.0):
            raise ConfigError(f"calibration fpr must be in (0, 1), got {fpr}")
        return None, fpr
    raise ConfigError(f"dluq_threshold must be a number or 'calibrated:<fpr>', got {value!r}")


def config_from_dict(obj: Mapping[str, Any]) -> PipelineConfig:
    known = {
        "lexicon_path", "cache_path", "adapter", "k", "dluq_threshold", "tluq_mode",
        "tluq_global_thresholds", "review_entropy_threshold", "instruction",
        "seeds", "output_dir",
    }
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    thresholds = obj.get("tluq_global_thresholds")
    if thresholds is not None:
        thresholds = tuple(float(t) for t in thresholds)
        if len(thresholds) != 3:
            raise ConfigError("tluq_global_thresholds must be three numbers")
    try:
        adapter = obj.get("adapter", {})
        if isinstance(adapter, Mapping):
            adapter = AdapterSettings(**adapter)
        seeds = obj.get("seeds", {})
        if isinstance(seeds, Mapping):
            seeds = Seeds(**seeds)
        return PipelineConfig(
            lexicon_path=obj.get("lexicon_path", ""),
            cache_path=obj.get("cache_path", ""),
            adapter=adapter,
            k=int(obj.get("k", 1)),
            dluq_threshold=obj.get("dluq_threshold", "calibrated:0.05"),
            tluq_mode=obj.get("tluq_mode", "per_document"),
            tluq_global_thresholds=thresholds,
            review_entropy_threshold=(
                None if obj.get("review_entropy_threshold") is None
                else float(obj["review_entropy_threshold"])),
            instruction=obj.get("instruction", DEFAULT_INSTRUCTION),
            seeds=seeds,
            output_dir=obj.get("output_dir", "out"),
        )
    except TypeError as exc:
        raise ConfigError(f"invalid config structure: {exc}") from exc


def config_to_dict(config: PipelineConfig) -> dict:
    out: dict[str, Any] = {
        "lexicon_path": config.lexicon_path,
        "cache_path": config.cache_path,
        "k": config.k,
        "dluq_threshold": config.dluq_threshold,
        "tluq_mode": config.tluq_mode,
        "instruction": config.instruction,
        "output_dir": config.output_dir,
        "adapter": {
            "type": config.adapter.type,
            "profile": config.adapter.profile,
            "endpoint": config.adapter.endpoint,
            "timeout": config.adapter.timeout,
            "retries": config.adapter.retries,
            "source_language": config.adapter.source_language,
            "target_language": config.adapter.target_language,
        },
        "seeds": {"adapter": config.seeds.adapter, "corpus": config.seeds.corpus},
    }
    if config.tluq_global_thresholds is not None:
        out["tluq_global_thresholds"] = list(config.tluq_global_thresholds)
    if config.review_entropy_threshold is not None:
        out["review_entropy_threshold"] = config.review_entropy_threshold
    return out


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot render {type(value).__name__} as TOML")


def dump_toml(config: PipelineConfig) -> str:
    """Render the effective config as TOML; reparses to an equivalent config."""
    obj = config_to_dict(config)
    lines = []
    for key, value in obj.items():
        if not isinstance(value, dict):
            lines.append(f"{key} = {_toml_value(value)}")
    for table in ("adapter", "seeds"):
        lines.append("")
        lines.append(f"[{table}]")
        for key, value in obj[table].items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


_ENV_OVERRIDES = {
    "PVG_LEXICON_PATH": ("lexicon_path", str),
    "PVG_CACHE_PATH": ("cache_path", str),
    "PVG_OUTPUT_DIR": ("output_dir", str),
    "PVG_K": ("k", int),
    "PVG_DLUQ_THRESHOLD": ("dluq_threshold", "threshold"),
    "PVG_TLUQ_MODE": ("tluq_mode", str),
    "PVG_INSTRUCTION": ("instruction", str),
    "PVG_REVIEW_ENTROPY_THRESHOLD": ("review_entropy_threshold", float),
    "PVG_ADAPTER_TYPE": ("adapter.type", str),
    "PVG_ADAPTER_PROFILE": ("adapter.profile", str),
    "PVG_ADAPTER_ENDPOINT": ("adapter.endpoint", str),
    "PVG_ADAPTER_TIMEOUT": ("adapter.timeout", float),
    "PVG_ADAPTER_RETRIES": ("adapter.retries", int),
    "PVG_ADAPTER_SOURCE_LANGUAGE": ("adapter.source_language", str),
    "PVG_ADAPTER_TARGET_LANGUAGE": ("adapter.target_language", str),
    "PVG_SEEDS_ADAPTER": ("seeds.adapter", int),
    "PVG_SEEDS_CORPUS": ("seeds.corpus", int),
}


def _apply_env(obj: dict, env: Mapping[str, str]) -> dict:
    for var, (dotted, cast) in _ENV_OVERRIDES.items():
        if var not in env:
            continue
        raw = env[var]
        if cast == "threshold":
            value: Any = raw if raw.startswith("calibrated:") else float(raw)
        else:
            value = cast(raw)
        target = obj
        *parents, leaf = dotted.split(".")
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = value
    return obj


def load_config(path: Union[str, Path], env: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    try:
        with open(path, "rb") as fh:
            obj = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    obj = _apply_env(dict(obj), os.environ if env is None else env)
    return config_from_dict(obj)
