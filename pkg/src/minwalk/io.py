"""Run configuration, manifests and the CSV/JSON artifacts the CLI writes.

CSV files start with a ``# manifest_sha256=<hash>`` comment line, then a
header row; reals are written with 17 significant digits. The hash covers
the manifest minus its ``createdAt`` timestamp, so identical configs give
byte-identical data files.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from . import __version__
from .errors import MinWalkError
from .verify import Thresholds

SCHEMA_VERSION = 1


class ConfigError(MinWalkError):
    pass


@dataclass
class RunConfig:
    p: float = 0.5
    q: float = 0.5
    s: float = 0.5
    n: int = 1 << 16
    replicas: int = 10_000
    seed: int = 20240601
    checkpoints: Union[str, List[int]] = "pow2"
    engine: str = "reduced"
    thresholds: Dict[str, Any] = field(default_factory=dict)
    out: str = "."

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.check()
        return cfg

    def check(self) -> None:
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if isinstance(self.checkpoints, str):
            if self.checkpoints != "pow2":
                raise ConfigError("checkpoints must be 'pow2' or a list of step counts")
        elif not all(1 <= int(c) <= self.n for c in self.checkpoints):
            raise ConfigError(f"checkpoints must lie in [1, {self.n}]")
        valid = {f.name for f in fields(Thresholds)}
        bad = set(self.thresholds) - valid
        if bad:
            raise ConfigError(f"unknown thresholds: {sorted(bad)}")

    def threshold_object(self) -> Thresholds:
        values = {k: tuple(v) if isinstance(v, list) else v for k, v in self.thresholds.items()}
        return Thresholds(**values)

    def checkpoint_list(self) -> Optional[List[int]]:
        return None if isinstance(self.checkpoints, str) else [int(c) for c in self.checkpoints]


def parse_checkpoints(text: str) -> Union[str, List[int]]:
    text = text.strip()
    if text == "pow2":
        return "pow2"
    try:
        return [int(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise ConfigError(f"bad checkpoint list {text!r}") from None


def load_config_file(path: Union[str, Path]) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} does not hold a mapping")
    return data


def merge_config(file_values: Optional[dict], flag_values: dict, base: Optional[RunConfig] = None) -> RunConfig:
    """Flags override the config file, which overrides ``base`` (defaults)."""
    merged = (base or RunConfig()).to_dict()
    if file_values:
        merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return RunConfig.from_dict(merged)


def emit_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2)


def parse_config(text: str) -> RunConfig:
    return RunConfig.from_dict(json.loads(text))


def build_manifest(command: str, cfg: RunConfig, extra: Optional[dict] = None) -> dict:
    manifest = {
        "schemaVersion": SCHEMA_VERSION,
        "tool": "minwalk",
        "version": __version__,
        "command": command,
        # the output directory is left out so relocated runs hash alike
        "config": {k: v for k, v in cfg.to_dict().items() if k != "out"},
        "seed": cfg.seed,
        "engine": cfg.engine,
    }
    if extra:
        manifest.update(extra)
    manifest["manifestHash"] = manifest_hash(manifest)
    manifest["createdAt"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return manifest


def manifest_hash(manifest: dict) -> str:
    body = {k: v for k, v in manifest.items() if k not in ("createdAt", "manifestHash")}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def fmt_real(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.17g}"


def csv_text(header: Sequence[str], rows: Iterable[Sequence], digest: str) -> str:
    buf = io.StringIO()
    buf.write(f"# manifest_sha256={digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_real(v) for v in row])
    return buf.getvalue()


def read_csv(path: Union[str, Path]) -> List[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path: Union[str, Path], data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    import numpy as np

    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


STATS_HEADER = ("checkpoint", "count", "mean", "var", "m3", "m4", "min", "max")


def stats_rows(stats_by_checkpoint) -> List[tuple]:
    rows = []
    for c in sorted(stats_by_checkpoint):
        st = stats_by_checkpoint[c]
        rows.append(
            (
                c,
                st.count,
                st.mean,
                st.variance,
                st.central_moment(3),
                st.central_moment(4),
                st.minimum,
                st.maximum,
            )
        )
    return rows
