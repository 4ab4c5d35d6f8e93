"""
Load experiment configurations from configs/*.json (or any JSON file) and apply
command-line overrides on top.
"""

from __future__ import annotations

import json
from pathlib import Path

from pydantic import ValidationError

from cli.models import ExperimentConfig
from core.errors import InvalidConfig

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def list_configs(config_dir: Path | None = None) -> dict[str, Path]:
    """Shipped configurations by name (file stem)."""
    config_dir = CONFIG_DIR if config_dir is None else config_dir
    if not config_dir.is_dir():
        return {}
    return {path.stem: path for path in sorted(config_dir.glob("*.json"))}


def _resolve(source: str | Path) -> Path:
    path = Path(source)
    if path.suffix == "" and not path.exists():
        shipped = list_configs().get(str(source))
        if shipped is not None:
            return shipped
    return path


def _validated(data: dict, origin: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or "config"
        raise InvalidConfig(f"{origin}: {where}: {first['msg']}") from None


def load_config(source: str | Path | None = None) -> ExperimentConfig:
    """
    Defaults when source is None; otherwise a JSON file path or the name of a shipped
    configuration. Unreadable files raise OSError, malformed ones InvalidConfig.
    """
    if source is None:
        return ExperimentConfig()
    path = _resolve(source)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: not valid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path}: top level must be an object")
    return _validated(data, str(path))


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """
    Overlay flag values on a config. Keys with value None are ignored; dotted keys
    ("grid.steps") address nested sections.
    """
    data = config.model_dump()
    for key, value in overrides.items():
        if value is None:
            continue
        target = data
        *parents, leaf = key.split(".")
        for part in parents:
            target = target[part]
        target[leaf] = value
    return _validated(data, "command line")


def save_config(config: ExperimentConfig, path: Path) -> Path:
    path = Path(path)
    path.write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path
