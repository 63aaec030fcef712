"""
Run-configuration loading and result writers.

CSV files open with '#'-prefixed metadata lines; JSON reports carry the same
metadata under a "metadata" key.
"""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from stqubit import __version__
from stqubit.schemas import RunConfig
from stqubit.utils.error_handlers import ConfigError

logger = logging.getLogger(__name__)


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical JSON dump (sorted keys) of a run config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_metadata(command: str, config: RunConfig) -> Dict[str, Any]:
    """Metadata block written into every output file."""
    return {
        "version": __version__,
        "seed": config.seed,
        "config_hash": config_hash(config),
        "command": command,
    }


def load_run_config(path: Optional[str], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Load and validate a JSON run configuration.

    Args:
        path: JSON file; None uses the defaults
        overrides: Top-level keys replacing the file's values (e.g. seed)

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: If the file cannot be read, is not JSON, or fails validation
    """
    data: Dict[str, Any] = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}", details={"path": path})
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config {path} is not valid JSON: {e}", details={"path": path})
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must hold a JSON object", details={"path": path})

    data.update({k: v for k, v in (overrides or {}).items() if v is not None})

    try:
        config = RunConfig.model_validate(data)
    except PydanticValidationError as e:
        errors = [
            {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]} for err in e.errors()
        ]
        raise ConfigError("Invalid run configuration", details={"errors": errors})

    logger.debug(f"Loaded run config {config_hash(config)[:12]} from {path or 'defaults'}")
    return config


def _cell(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Dict[str, Any],
) -> Path:
    """
    Write a CSV with a metadata preamble.

    Args:
        path: Output file (parent directories are created)
        header: Column names
        rows: Row values
        metadata: Key/value pairs written as '# key: value'

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in metadata.items():
            f.write(f"# {key}: {value}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def write_columns(
    path: Path, columns: Dict[str, np.ndarray], metadata: Dict[str, Any]
) -> Path:
    """Write equal-length arrays as CSV columns."""
    header = list(columns)
    rows = zip(*(np.asarray(columns[name]) for name in header))
    return write_csv(path, header, rows, metadata)


def write_json(path: Path, payload: Dict[str, Any], metadata: Dict[str, Any]) -> Path:
    """Write a JSON report with a metadata object."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"metadata": metadata, **payload}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    logger.info(f"Wrote report {path}")
    return path


def read_csv(path: Path) -> Dict[str, list]:
    """Read a CSV written by write_csv into column lists of strings."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    columns: Dict[str, list] = {name: [] for name in header}
    for row in reader:
        for name, value in zip(header, row):
            columns[name].append(value)
    return columns


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")
