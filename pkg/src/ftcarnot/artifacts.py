"""Output files, run manifests and duration strings for the CLI."""

import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from . import __version__
from .params import ParameterError

load_dotenv()

logger = logging.getLogger(__name__)

# Output directory for CLI artifacts (configurable via FTCARNOT_OUT_DIR)
DEFAULT_OUT_DIR = Path(os.getenv("FTCARNOT_OUT_DIR", "results"))

# At least 12 significant digits in every CSV
CSV_FLOAT_FORMAT = "%.14e"

TR_SUFFIX = "tr"


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run."""
    subcommand: str
    params: dict
    integrator: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """First 16 hex digits of the sha256 of the canonical JSON."""
        return hashlib.sha256(canonical_json_bytes(self.to_dict())).hexdigest()[:16]

    def comment(self) -> str:
        return f"ftcarnot {self.version} manifest={self.digest()}"


def _jsonable(value):
    """Plain JSON values: numpy scalars unwrapped, inf as "inf", NaN as null."""
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def canonical_json_bytes(obj) -> bytes:
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, separators=(", ", ": "))
    return (text + "\n").encode("utf-8")


def write_csv(path: Path, frame: pd.DataFrame, manifest: RunManifest) -> Path:
    """Write a comment line with version and manifest digest, then the table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = frame.copy()
    for column in frame.columns:
        if frame[column].dtype == bool:
            frame[column] = frame[column].map({True: "true", False: "false"})
    with open(path, "w", newline="") as f:
        f.write(f"# {manifest.comment()}\n")
        frame.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(path: Path, payload: dict, manifest: RunManifest) -> Path:
    """Write payload as JSON with the version/manifest line as the first member."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"comment": manifest.comment(), **_jsonable(payload)}
    with open(path, "w") as f:
        json.dump(document, f, indent=2)
        f.write("\n")
    logger.debug(f"Wrote {path}")
    return path


def write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    """Write <subcommand>_manifest.json next to the outputs, comment member first."""
    path = Path(out_dir) / f"{manifest.subcommand.replace('-', '_')}_manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(canonical_json_bytes({"comment": manifest.comment(), **manifest.to_dict()}))
    return path


def parse_duration(text: str, t_r: float) -> float:
    """Parse "2tr" as 2 t_r or "0.5" as an absolute duration."""
    raw = str(text).strip().lower()
    scale = 1.0
    if raw.endswith(TR_SUFFIX):
        raw = raw[: -len(TR_SUFFIX)].strip()
        scale = t_r
    try:
        value = float(raw) * scale
    except ValueError:
        raise ParameterError(f"Invalid duration {text!r} (use a number or a multiple like '2tr')")
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"Duration must be positive, got {text!r}")
    return value


def parse_durations(text: str, t_r: float) -> list[float]:
    """Parse a comma-separated list of durations."""
    parts = [part for part in str(text).split(",") if part.strip()]
    if not parts:
        raise ParameterError("At least one duration is required")
    return [parse_duration(part, t_r) for part in parts]
