"""On-disk formats for fidelity maps, contours and reports."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .library import sequence_to_dict
from .scan import ContourSet, FidelityMap, ScanGrid

CSV_HEADER = "eps_a,delta,fidelity"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON encoding of ``config``."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def timestamp_metadata() -> dict:
    return {"generated_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")}


def map_to_csv(fmap: FidelityMap) -> str:
    """Row-major CSV with ``eps_a`` varying slowest."""
    eps, delta = fmap.grid.eps_a, fmap.grid.delta
    lines = [CSV_HEADER]
    for i, e in enumerate(eps):
        for j, d in enumerate(delta):
            lines.append(f"{float(e)!r},{float(d)!r},{float(fmap.values[i, j])!r}")
    return "\n".join(lines) + "\n"


def write_map_csv(fmap: FidelityMap, path) -> Path:
    path = Path(path)
    path.write_text(map_to_csv(fmap))
    return path


def read_map_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(eps_a, delta, values)`` with ``values`` shaped ``(n_eps, n_delta)``."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    eps = np.unique(data[:, 0])
    delta = np.unique(data[:, 1])
    return eps, delta, data[:, 2].reshape(eps.size, delta.size)


def map_sidecar(fmap: FidelityMap, cfg_hash: str, extra: Optional[dict] = None,
                metadata: Optional[dict] = None) -> dict:
    model = fmap.model
    out = {
        "grid": fmap.grid.describe(),
        "sequence": sequence_to_dict(model.sequence) if model else {"label": fmap.sequence_id},
        "target_phase": fmap.target_phase,
        "envelope": fmap.envelope.describe(),
        "integrator": ({"method": model.config.method, "steps_per_pulse": model.config.steps_per_pulse}
                       if model and fmap.envelope.kind != "rectangular" else None),
        "config_hash": cfg_hash,
        "summary": {
            "fidelity_min": float(fmap.values.min()),
            "fidelity_max": float(fmap.values.max()),
            "fidelity_at_origin_nearest": fmap.value_near(0.0, 0.0),
        },
    }
    if extra:
        out.update(extra)
    out["metadata"] = metadata if metadata is not None else timestamp_metadata()
    return out


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n")
    return path


def grid_from_sidecar(data: dict) -> ScanGrid:
    g = data["grid"]
    return ScanGrid(tuple(g["eps_a_range"]), tuple(g["delta_range"]), g["n_eps"], g["n_delta"])


def contours_to_json(cset: ContourSet, cfg_hash: Optional[str] = None) -> dict:
    out = cset.to_dict()
    if cfg_hash is not None:
        out["config_hash"] = cfg_hash
    return out
