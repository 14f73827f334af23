"""Delimited and JSON artifacts written by the command line tools."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


def _g(v) -> str:
    return format(float(v), ".17g")


def write_trajectory_csv(traj, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("t,theta,x,y,alpha\n")
        for row in traj.rows():
            fh.write(",".join(_g(v) for v in row) + "\n")
    return path


def write_sweep_csv(points, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("R,rho,error_bound,n_periods\n")
        for p in points:
            if p.estimate is None:
                fh.write(f"{_g(p.R)},nan,nan,nan\n")
            else:
                e = p.estimate
                fh.write(f"{_g(p.R)},{_g(e.value)},{_g(e.error_bound)},{e.periods_used}\n")
    return path


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def cusp_report(events) -> list[dict]:
    return [e.to_dict() for e in events]


def config_hash(command: str, curve_spec: dict, params: dict) -> str:
    blob = json.dumps(_clean({"command": command, "curve": curve_spec, "params": params}),
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    curve: dict
    params: dict
    outputs: list = field(default_factory=list)

    @property
    def config_hash(self) -> str:
        return config_hash(self.command, self.curve, self.params)

    def to_dict(self):
        return {"command": self.command, "curve": self.curve, "params": self.params,
                "config_hash": self.config_hash, "outputs": [str(p) for p in self.outputs]}

    def write(self, path) -> Path:
        return write_json(self.to_dict(), path)
