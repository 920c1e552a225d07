"""Fidelity landscapes over the (amplitude error, detuning) plane."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .design import PhaseSequence, target_gate
from .pulses import (
    IntegratorConfig,
    PulseEnvelope,
    base_pulse_stack,
    cached_base_stack,
    compose_stack,
)
from .su2 import is_unitary

INFIDELITY_FLOOR = 1e-16
DEFAULT_LEVELS = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class ScanGrid:
    eps_a_range: tuple[float, float] = (-0.3, 0.3)
    delta_range: tuple[float, float] = (-0.5, 0.5)
    n_eps: int = 100
    n_delta: int = 100

    def __post_init__(self):
        object.__setattr__(self, "eps_a_range", tuple(float(v) for v in self.eps_a_range))
        object.__setattr__(self, "delta_range", tuple(float(v) for v in self.delta_range))
        if not self.eps_a_range[0] < self.eps_a_range[1]:
            raise ValueError("eps_a_range must be increasing")
        if not self.delta_range[0] < self.delta_range[1]:
            raise ValueError("delta_range must be increasing")
        if self.eps_a_range[0] <= -1.0:
            raise ValueError("eps_a must stay above -1")
        if self.n_eps < 2 or self.n_delta < 2:
            raise ValueError("each axis needs at least two points")

    @property
    def eps_a(self) -> np.ndarray:
        return np.linspace(*self.eps_a_range, self.n_eps)

    @property
    def delta(self) -> np.ndarray:
        return np.linspace(*self.delta_range, self.n_delta)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.eps_a, self.delta, indexing="ij")

    def contains(self, eps_a: float, delta: float) -> bool:
        return (self.eps_a_range[0] <= eps_a <= self.eps_a_range[1]
                and self.delta_range[0] <= delta <= self.delta_range[1])

    def describe(self) -> dict:
        return {"eps_a_range": list(self.eps_a_range), "delta_range": list(self.delta_range),
                "n_eps": self.n_eps, "n_delta": self.n_delta}


@dataclass(frozen=True)
class FidelityModel:
    """Continuous infidelity of one sequence under one pulse model."""

    sequence: PhaseSequence
    envelope: PulseEnvelope = field(default_factory=PulseEnvelope)
    config: IntegratorConfig = field(default_factory=IntegratorConfig)

    def fidelity(self, eps_a, delta) -> np.ndarray:
        base = base_pulse_stack(self.envelope, eps_a, delta, self.config)
        return fidelity_stack(compose_stack(self.sequence.phases, base),
                              target_gate(self.sequence.target_phase))

    def infidelity(self, eps_a, delta) -> np.ndarray:
        return 1.0 - self.fidelity(eps_a, delta)


@dataclass
class FidelityMap:
    """``values[i, j]`` is the fidelity at ``(grid.eps_a[i], grid.delta[j])``."""

    grid: ScanGrid
    values: np.ndarray
    sequence_id: str
    target_phase: float
    envelope: PulseEnvelope
    model: Optional[FidelityModel] = None

    @property
    def infidelity(self) -> np.ndarray:
        return 1.0 - self.values

    def log_infidelity(self) -> np.ndarray:
        return np.log10(np.maximum(self.infidelity, INFIDELITY_FLOOR))

    def value_near(self, eps_a: float, delta: float) -> float:
        i = int(np.argmin(np.abs(self.grid.eps_a - eps_a)))
        j = int(np.argmin(np.abs(self.grid.delta - delta)))
        return float(self.values[i, j])


@dataclass
class ContourSet:
    levels: list
    polylines: dict

    def closed(self, level: float) -> list:
        return [p for p in self.polylines[level] if len(p) > 2 and np.allclose(p[0], p[-1])]

    def to_dict(self) -> dict:
        return {
            "levels": [float(v) for v in self.levels],
            "polylines": {repr(float(v)): [np.asarray(p).tolist() for p in self.polylines[v]]
                          for v in self.levels},
        }


@dataclass
class PlateauMetrics:
    area_fraction: dict
    axis_halfwidths: dict
    axis_intervals: dict

    def to_dict(self) -> dict:
        return {
            "area_fraction": {repr(float(k)): v for k, v in self.area_fraction.items()},
            "axis_halfwidths": {repr(float(k)): v for k, v in self.axis_halfwidths.items()},
            "axis_intervals": {repr(float(k)): {a: list(iv) for a, iv in v.items()}
                               for k, v in self.axis_intervals.items()},
        }


@dataclass
class CrossSection:
    axis: str
    coords: np.ndarray
    infidelity: np.ndarray
    label: str = ""

    def pairs(self) -> list:
        return list(zip(self.coords.tolist(), self.infidelity.tolist()))


def fidelity(actual: np.ndarray, target: np.ndarray) -> float:
    """Global-phase insensitive gate fidelity ``|Tr(target^dag actual)| / 2``."""
    for name, u in (("actual", actual), ("target", target)):
        if not is_unitary(u, 1e-8):
            raise ValueError(f"{name} is not unitary")
    return float(abs(np.trace(np.conj(target).T @ actual)) / 2.0)


def fidelity_stack(actual: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Vectorized :func:`fidelity` for a stack of propagators and one target."""
    t = np.conj(target)
    tr = t[0, 0] * actual[..., 0, 0] + t[1, 0] * actual[..., 1, 0] \
        + t[0, 1] * actual[..., 0, 1] + t[1, 1] * actual[..., 1, 1]
    return np.abs(tr) / 2.0


def _chunks(n: int, parts: int) -> list:
    bounds = np.linspace(0, n, max(1, min(parts, n)) + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def scan(seq: PhaseSequence, grid: Optional[ScanGrid] = None, env: Optional[PulseEnvelope] = None,
         cfg: Optional[IntegratorConfig] = None, threads: int = 1, cache: bool = True) -> FidelityMap:
    """Fidelity of ``seq`` against its target gate at every grid point.

    Single-pulse propagators depend only on the error point, so they are
    computed once per (grid, envelope, integrator) and, with ``cache``,
    reused across sequences. ``threads`` splits the grid by rows; results
    do not depend on it.
    """
    grid = grid or ScanGrid()
    env = env or PulseEnvelope()
    cfg = cfg or IntegratorConfig()
    eps_a, delta = grid.mesh()
    target = target_gate(seq.target_phase)

    if threads <= 1:
        try:
            base = cached_base_stack(env, eps_a, delta, cfg) if cache else base_pulse_stack(env, eps_a, delta, cfg)
        except ValueError as exc:
            raise ValueError(f"scan failed on grid {grid.describe()}: {exc}") from exc
        values = fidelity_stack(compose_stack(seq.phases, base), target)
    else:
        values = np.empty(eps_a.shape, dtype=float)

        def work(rows: slice):
            base = base_pulse_stack(env, eps_a[rows], delta[rows], cfg)
            values[rows] = fidelity_stack(compose_stack(seq.phases, base), target)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, _chunks(grid.n_eps, threads)))

    return FidelityMap(grid=grid, values=values, sequence_id=seq.label, target_phase=seq.target_phase,
                       envelope=env, model=FidelityModel(seq, env, cfg))


def extract_contours(fmap: FidelityMap, levels: Sequence[float] = DEFAULT_LEVELS) -> ContourSet:
    """Iso-infidelity polylines (marching squares, linear edge interpolation).

    Polylines are ``(k, 2)`` arrays of ``(eps_a, delta)`` points; closed loops
    repeat their first point at the end.
    """
    import contourpy

    levels = [float(v) for v in levels]
    for v in levels:
        if not 0.0 < v < 1.0:
            raise ValueError(f"contour levels must lie in (0, 1), got {v}")
    gen = contourpy.contour_generator(
        x=fmap.grid.eps_a, y=fmap.grid.delta, z=fmap.infidelity.T,
        name="serial", line_type=contourpy.LineType.Separate,
    )
    lo = np.array([fmap.grid.eps_a_range[0], fmap.grid.delta_range[0]])
    hi = np.array([fmap.grid.eps_a_range[1], fmap.grid.delta_range[1]])
    # edge interpolation can overshoot the box by an ulp
    return ContourSet(levels=levels,
                      polylines={v: [np.clip(np.asarray(p), lo, hi) for p in gen.lines(v)] for v in levels})


def cross_section(model, axis: str, n_points: int = 201, span: Optional[tuple[float, float]] = None,
                  label: str = "") -> CrossSection:
    """Infidelity along ``eps_a`` (at ``delta = 0``) or along ``delta`` (at ``eps_a = 0``).

    ``model`` is a :class:`FidelityModel` or a :class:`FidelityMap` carrying
    one; points are evaluated directly, never interpolated from a grid.
    """
    model, grid = _model_and_grid(model)
    if axis not in ("eps_a", "delta"):
        raise ValueError("axis must be 'eps_a' or 'delta'")
    if span is None:
        span = grid.eps_a_range if axis == "eps_a" else grid.delta_range
    coords = np.linspace(span[0], span[1], n_points)
    zeros = np.zeros_like(coords)
    infid = model.infidelity(coords, zeros) if axis == "eps_a" else model.infidelity(zeros, coords)
    return CrossSection(axis=axis, coords=coords, infidelity=infid, label=label or model.sequence.label)


def _model_and_grid(obj):
    if isinstance(obj, FidelityMap):
        if obj.model is None:
            raise ValueError("fidelity map carries no model for direct evaluation")
        return obj.model, obj.grid
    if isinstance(obj, FidelityModel):
        return obj, ScanGrid()
    raise TypeError(f"expected FidelityModel or FidelityMap, got {type(obj).__name__}")


def _edge(f: Callable[[float], float], level: float, limit: float, n_scan: int, tol: float) -> float:
    """Distance from 0 towards ``limit`` where ``f`` first reaches ``level``."""
    if f(0.0) >= level:
        return 0.0
    xs = np.linspace(0.0, limit, n_scan + 1)
    vals = f(xs)
    bad = np.nonzero(vals >= level)[0]
    if bad.size == 0:
        return float(limit)
    lo, hi = float(xs[bad[0] - 1]), float(xs[bad[0]])
    # bracket refinement, 16 interior probes per pass (one vectorized model call)
    while hi - lo > tol:
        probes = np.linspace(lo, hi, 18)[1:-1]
        over = np.nonzero(f(probes) >= level)[0]
        if over.size == 0:
            lo = float(probes[-1])
        else:
            k = int(over[0])
            hi = float(probes[k])
            lo = float(probes[k - 1]) if k else lo
    return 0.5 * (lo + hi)


def plateau_metrics(fmap: FidelityMap, levels: Sequence[float] = DEFAULT_LEVELS,
                    n_scan: int = 400, tol: float = 1e-4) -> PlateauMetrics:
    """Area fraction of grid points below each infidelity level, plus the
    width of the sub-level interval through the origin along both axes.

    Widths are bisected on the continuous model to ``tol`` and capped at the
    grid bounds; the half-width is half the interval length.
    """
    model, grid = _model_and_grid(fmap)
    if not grid.contains(0.0, 0.0):
        raise ValueError("the origin must lie inside the grid")
    infid = fmap.infidelity
    area, halfwidths, intervals = {}, {}, {}
    for level in levels:
        level = float(level)
        area[level] = float(np.count_nonzero(infid < level)) / infid.size
        hw, iv = {}, {}
        for axis, (lo_lim, hi_lim) in (("eps_a", grid.eps_a_range), ("delta", grid.delta_range)):
            def along(x, sign, axis=axis):
                x = np.atleast_1d(np.asarray(x, dtype=float)) * sign
                zeros = np.zeros_like(x)
                return model.infidelity(x, zeros) if axis == "eps_a" else model.infidelity(zeros, x)

            right = _edge(lambda x: along(x, 1.0), level, hi_lim, n_scan, tol)
            left = _edge(lambda x: along(x, -1.0), level, -lo_lim, n_scan, tol)
            iv[axis] = (-left, right)
            hw[axis] = 0.5 * (left + right)
        halfwidths[level] = hw
        intervals[level] = iv
    return PlateauMetrics(area_fraction=area, axis_halfwidths=halfwidths, axis_intervals=intervals)


def compare(sequences: Sequence[PhaseSequence], grid: Optional[ScanGrid] = None,
            env: Optional[PulseEnvelope] = None, cfg: Optional[IntegratorConfig] = None,
            levels: Sequence[float] = DEFAULT_LEVELS, threads: int = 1) -> dict:
    """Scan every sequence and tabulate plateau metrics side by side.

    ``differences`` holds each metric of sequence ``i > 0`` minus that of the
    first sequence.
    """
    maps = [scan(s, grid, env, cfg, threads=threads) for s in sequences]
    metrics = [plateau_metrics(m, levels) for m in maps]
    rows = []
    for seq, met in zip(sequences, metrics):
        rows.append({
            "label": seq.label,
            "n_pulses": seq.n_pulses,
            "target_phase": seq.target_phase,
            "metrics": met.to_dict(),
        })
    ref = metrics[0]
    diffs = []
    for seq, met in zip(sequences[1:], metrics[1:]):
        d = {}
        for level in met.area_fraction:
            d[repr(level)] = {
                "area_fraction": met.area_fraction[level] - ref.area_fraction[level],
                "halfwidth_eps_a": met.axis_halfwidths[level]["eps_a"] - ref.axis_halfwidths[level]["eps_a"],
                "halfwidth_delta": met.axis_halfwidths[level]["delta"] - ref.axis_halfwidths[level]["delta"],
            }
        diffs.append({"label": seq.label, "vs": sequences[0].label, "levels": d})
    return {"sequences": rows, "differences": diffs, "maps": maps, "metrics": metrics}
