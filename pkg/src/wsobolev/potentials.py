"""Potential catalog and sample-based certifiers for the growth conditions.

All conditions quantify over the whole space or over ``|x| -> infinity``;
the checkers here only gather evidence on finite samples and say so in the
reports they return.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .discretization import Grid

__all__ = [
    "Potential",
    "ConditionReport",
    "make_constant",
    "make_power",
    "make_exponential",
    "make_oscillating",
    "make_annular_step",
    "potential_from_spec",
    "decaying_weight",
    "check_positive",
    "check_gradV",
    "check_VW_alpha",
    "check_V0",
    "check_V1",
    "check_V2",
    "check_VW_rad",
    "HOLDS",
    "FAILS",
    "GROWS",
]

HOLDS = "holds-on-sample"
FAILS = "fails"
GROWS = "grows-unbounded"

DEFAULT_GROWTH_FACTOR = 1.5
DEFAULT_DECAY_FACTOR = 0.25


def _radius(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=-1))


@dataclass(frozen=True, eq=False)
class Potential:
    """Positive weight ``V``, usually given through a radial profile.

    ``profile(r)`` and ``dprofile(r)`` describe radial potentials; a general
    potential can instead pass ``value`` (and optionally ``grad``) acting on
    ``(..., N)`` point arrays.
    """

    name: str
    v0: float
    radial: bool = True
    coercive: bool = True
    params: dict = field(default_factory=dict)
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dprofile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    value: Optional[Callable[[np.ndarray], np.ndarray]] = None
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    notes: str = ""

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.value is not None:
            return np.asarray(self.value(x), dtype=float)
        return np.asarray(self.profile(_radius(x)), dtype=float) * np.ones(x.shape[:-1])

    @property
    def has_gradient(self) -> bool:
        return self.grad is not None or self.dprofile is not None

    def gradient(self, x) -> tuple[np.ndarray, bool]:
        """Gradient at points ``x``; second item is True for the FD fallback."""
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float), False
        if self.dprofile is not None:
            r = _radius(x)
            dr = np.asarray(self.dprofile(r), dtype=float) * np.ones(r.shape)
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(r[..., None] > 0, x / r[..., None], 0.0)
            return dr[..., None] * unit, False
        # componentwise central difference, step 1e-6 (1 + |x|)
        step = 1e-6 * (1.0 + _radius(x))[..., None]
        out = np.empty_like(x)
        for k in range(x.shape[-1]):
            e = np.zeros(x.shape[-1])
            e[k] = 1.0
            out[..., k] = (self(x + step * e) - self(x - step * e)) / (2 * step[..., 0])
        return out, True

    def radial_value(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.profile is not None:
            return np.asarray(self.profile(r), dtype=float) * np.ones(r.shape)
        pts = np.zeros(r.shape + (1,))
        pts[..., 0] = r
        return self(pts)

    def on(self, grid: Grid) -> np.ndarray:
        return self(grid.points())

    def describe(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "radial": self.radial,
                "coercive": self.coercive, "v0": self.v0, "notes": self.notes}


def make_constant(c: float = 1.0) -> Potential:
    if c <= 0:
        raise ValueError("constant potential must be positive")
    return Potential(
        name="constant", v0=c, coercive=False, params={"c": c},
        profile=lambda r: np.full(np.shape(r), float(c)),
        dprofile=lambda r: np.zeros(np.shape(r)),
    )


def make_power(alpha: float, scale: float = 1.0) -> Potential:
    """``V(x) = 1 + scale * |x|^alpha``."""
    if not alpha > 0:
        raise ValueError("exponent alpha must be positive")

    def dprof(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = scale * alpha * r ** (alpha - 1.0)
        # a.e. condition: the single point r = 0 is irrelevant when alpha < 1
        return np.where(r > 0, d, 0.0)

    return Potential(
        name="power", v0=1.0, params={"alpha": alpha, "scale": scale},
        profile=lambda r: 1.0 + scale * np.asarray(r, dtype=float) ** alpha,
        dprofile=dprof,
    )


def make_exponential(alpha: float) -> Potential:
    """``V(x) = exp(|x|^alpha)``."""
    if not alpha > 0:
        raise ValueError("exponent alpha must be positive")

    def dprof(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = alpha * r ** (alpha - 1.0) * np.exp(r**alpha)
        return np.where(r > 0, d, 0.0)

    return Potential(
        name="exponential", v0=1.0, params={"alpha": alpha},
        profile=lambda r: np.exp(np.asarray(r, dtype=float) ** alpha),
        dprofile=dprof,
    )


def make_oscillating() -> Potential:
    """``V(x) = |x|^2 (sin(e^|x|) + 2) + 1``: coercive, violates the gradient bound."""

    def prof(r):
        r = np.asarray(r, dtype=float)
        return r**2 * (np.sin(np.exp(r)) + 2.0) + 1.0

    def dprof(r):
        r = np.asarray(r, dtype=float)
        e = np.exp(r)
        return 2.0 * r * (np.sin(e) + 2.0) + r**2 * np.cos(e) * e

    return Potential(name="oscillating", v0=1.0, profile=prof, dprofile=dprof)


def _annular_nodes(r_max: float):
    # plateau [n - 1/n, n + 1/n] carries n^2; for n = 1 the plateau would
    # overlap the n = 2 annulus, so it is cut back to [0, 1]
    n_top = int(math.ceil(r_max)) + 2
    knots_r = [0.0, 1.0]
    knots_v = [1.0, 1.0]
    for n in range(2, n_top + 1):
        knots_r += [n - 1.0 / n, n + 1.0 / n]
        knots_v += [float(n * n)] * 2
    return np.array(knots_r), np.array(knots_v)


def make_annular_step() -> Potential:
    """Plateaus ``V = n^2`` on ``n - 1/n <= |x| <= n + 1/n``, linear in between."""

    def prof(r):
        r = np.asarray(r, dtype=float)
        kr, kv = _annular_nodes(float(np.max(r, initial=1.0)))
        return np.interp(r, kr, kv)

    def dprof(r):
        r = np.asarray(r, dtype=float)
        kr, kv = _annular_nodes(float(np.max(r, initial=1.0)))
        slopes = np.diff(kv) / np.diff(kr)
        idx = np.clip(np.searchsorted(kr, r, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    return Potential(
        name="annular_step", v0=1.0, coercive=False, profile=prof, dprofile=dprof,
        notes="linear interpolation in r between annuli; n=1 plateau restricted to r<=1",
    )


def potential_from_spec(spec: dict) -> Potential:
    """Build a catalog potential from a config entry such as ``{"kind": "power", "alpha": 2}``."""
    kind = spec.get("kind")
    if kind == "power":
        return make_power(float(spec["alpha"]), float(spec.get("scale", 1.0)))
    if kind == "exponential":
        return make_exponential(float(spec["alpha"]))
    if kind == "oscillating":
        return make_oscillating()
    if kind == "annular_step":
        return make_annular_step()
    if kind == "constant":
        return make_constant(float(spec.get("c", 1.0)))
    raise ValueError(f"unknown potential kind {kind!r}")


def decaying_weight(power: float) -> Callable[[np.ndarray], np.ndarray]:
    """Radial profile ``r -> (1 + r)^(-power)``."""
    return lambda r: (1.0 + np.asarray(r, dtype=float)) ** (-power)


@dataclass
class ConditionReport:
    condition: str
    constants: dict
    verdict: str
    argmax: Optional[list] = None
    table: list = field(default_factory=list)
    sample: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "verdict": self.verdict,
            "constants": self.constants,
            "argmax": self.argmax,
            "table": self.table,
            "sample": self.sample,
            "flags": self.flags,
        }


def check_positive(V: Potential, g: Grid) -> bool:
    """Lower bound ``V >= v0`` on every node of ``g``."""
    return bool(np.min(V.on(g)) >= V.v0 * (1 - 1e-12))


def _max_with_point(values: np.ndarray, pts: np.ndarray):
    flat = np.asarray(values).reshape(-1)
    i = int(np.argmax(flat))
    return float(flat[i]), pts.reshape(-1, pts.shape[-1])[i].tolist()


def _gradV_constant(V: Potential, g: Grid):
    pts = g.points()
    grad, fd = V.gradient(pts)
    ratio = _radius(grad) / V(pts) ** 1.5
    c, at = _max_with_point(ratio, pts)
    return c, at, fd


def check_gradV(V: Potential, g: Grid, growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ConditionReport:
    """Estimate the constant in ``|grad V| <= C V^{3/2}`` on ``g`` and on a box twice as large."""
    c1, at, fd = _gradV_constant(V, g)
    big = g.enlarge(2)
    c2, at2, _ = _gradV_constant(V, big)
    table = [{"R": g.R, "C_est": c1}, {"R": big.R, "C_est": c2}]
    grows = c2 > growth_factor * c1 if c1 > 0 else c2 > 0
    verdict = GROWS if grows else HOLDS
    return ConditionReport(
        condition="gradV", constants={"C": c1, "growth": c2 / c1 if c1 > 0 else 0.0},
        verdict=verdict, argmax=at2 if grows else at, table=table,
        sample={"grid": g.describe(), "max_radius": big.R * math.sqrt(g.N), "h": g.h},
        flags=["finite-difference-gradient"] if fd else [],
    )


def check_VW_alpha(V: Potential, W: Potential, alpha: float, g: Grid,
                   growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ConditionReport:
    """Estimate ``c <= W <= C V^alpha`` on ``g``; growth of ``C`` is tested on the doubled box."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")

    def constants(grid):
        pts = grid.points()
        w = W(pts)
        ratio = w / V(pts) ** alpha
        C, at = _max_with_point(ratio, pts)
        return float(np.min(w)), C, at

    c, C, at = constants(g)
    _, C2, _ = constants(g.enlarge(2))
    table = [{"R": g.R, "C_est": C}, {"R": 2 * g.R, "C_est": C2}]
    if not (np.isfinite(C) and c > 0):
        verdict = FAILS
    elif C2 > growth_factor * C:
        verdict = GROWS
    else:
        verdict = HOLDS
    return ConditionReport(
        condition="VW_alpha", constants={"c": c, "C": C, "alpha": alpha}, verdict=verdict,
        argmax=at, table=table, sample={"grid": g.describe(), "max_radius": 2 * g.R * math.sqrt(g.N)},
    )


def _ball_cloud(N: int, radius: float, k: int) -> np.ndarray:
    """Tensor lattice points of ``[-radius, radius]^N`` that fall in the closed ball."""
    axis = np.linspace(-radius, radius, k)
    pts = np.stack(np.meshgrid(*([axis] * N), indexing="ij"), axis=-1).reshape(-1, N)
    return pts[_radius(pts) <= radius * (1 + 1e-12)]


def check_V0(V: Potential, centers: Sequence[Sequence[float]], m: float,
             samples_per_axis: int = 41) -> ConditionReport:
    """Per-center ratios ``V / V(x_n)`` over the balls ``B(x_n, m / sqrt(V(x_n)))``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    N = centers.shape[1]
    table = []
    for xc in centers:
        vc = float(V(xc))
        rho = m / math.sqrt(vc)
        pts = xc + _ball_cloud(N, rho, samples_per_axis)
        ratio = V(pts) / vc
        table.append({"center": xc.tolist(), "V_center": vc, "radius": rho,
                      "c1": float(ratio.min()), "c2": float(ratio.max()),
                      "spread": float(ratio.max() / ratio.min())})
    if not table:
        return ConditionReport("V0", {"c1": None, "c2": None, "m": m}, HOLDS)
    c1 = min(row["c1"] for row in table)
    c2 = max(row["c2"] for row in table)
    verdict = HOLDS if c1 > 0 and np.isfinite(c2) else FAILS
    return ConditionReport(
        condition="V0", constants={"c1": c1, "c2": c2, "m": m}, verdict=verdict, table=table,
        sample={"samples_per_axis": samples_per_axis,
                "max_radius": float(_radius(centers).max())},
    )


def _directions(N: int, count: int) -> np.ndarray:
    if N == 1:
        return np.array([[1.0], [-1.0]])
    if N == 2:
        th = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    # octahedron plus cube diagonals
    dirs = [np.eye(3)[i] * s for i in range(3) for s in (1, -1)]
    dirs += [np.array([a, b, c]) / math.sqrt(3) for a in (1, -1) for b in (1, -1) for c in (1, -1)]
    return np.array(dirs)


def _decay_verdict(values: list[float], decay: float, growth: float) -> str:
    first, last = values[0], values[-1]
    if first == 0 and last == 0:
        return HOLDS
    if last < decay * first:
        return HOLDS
    if last > growth * first:
        return GROWS
    return FAILS


def check_V1(V: Potential, m: float, radii: Sequence[float], N: int = 2,
             n_dirs: int = 8, samples_per_axis: int = 15, ladder: int = 40,
             decay: float = DEFAULT_DECAY_FACTOR,
             growth: float = DEFAULT_GROWTH_FACTOR) -> ConditionReport:
    """Table of the local Lipschitz quotient over ``B(y, m / sqrt(V(y)))`` divided by ``V(y)^{3/2}``.

    The sample around ``y`` combines a lattice cloud with a geometric ladder of
    distances along each coordinate and radial direction, so quotients at
    scales far below the lattice spacing are seen as well.
    """
    table = []
    dirs = _directions(N, n_dirs)
    for rad in radii:
        worst = 0.0
        worst_y = None
        for d in dirs:
            y = rad * d
            vy = float(V(y))
            rho = m / math.sqrt(vy)
            cloud = _ball_cloud(N, rho, samples_per_axis)
            steps = rho * 2.0 ** -np.arange(ladder)
            rays = [d] + [np.eye(N)[k] for k in range(N)]
            ladder_pts = np.concatenate([s * np.outer(steps, ray) for ray in rays for s in (1, -1)])
            offsets = np.concatenate([cloud, ladder_pts])
            dist = _radius(offsets)
            keep = dist > 0
            q = np.abs(vy - V(y + offsets[keep])) / dist[keep]
            val = float(q.max()) / vy**1.5
            if val > worst:
                worst, worst_y = val, y.tolist()
        table.append({"radius": float(rad), "ratio": worst, "at": worst_y})
    ratios = [row["ratio"] for row in table]
    verdict = _decay_verdict(ratios, decay, growth) if ratios else HOLDS
    return ConditionReport(
        condition="V1", constants={"m": m, "last_ratio": ratios[-1] if ratios else 0.0},
        verdict=verdict, table=table,
        sample={"directions": len(dirs), "samples_per_axis": samples_per_axis,
                "ladder": ladder, "max_radius": float(max(radii)) if len(radii) else 0.0,
                "decay_factor": decay},
    )


def check_V2(V: Potential, eps: float, radii: Sequence[float], N: int = 2,
             n_dirs: int = 8, samples_per_axis: int = 21,
             decay: float = DEFAULT_DECAY_FACTOR,
             growth: float = DEFAULT_GROWTH_FACTOR) -> ConditionReport:
    """Table of ``sup_{B(y, eps)} |grad V| / V(y)^{3/2}`` over sample points ``|y| = radius``."""
    table = []
    fd_used = False
    dirs = _directions(N, n_dirs)
    cloud = _ball_cloud(N, eps, samples_per_axis)
    for rad in radii:
        worst = 0.0
        for d in dirs:
            y = rad * d
            grad, fd = V.gradient(y + cloud)
            fd_used |= fd
            val = float(_radius(grad).max()) / float(V(y)) ** 1.5
            worst = max(worst, val)
        table.append({"radius": float(rad), "ratio": worst})
    ratios = [row["ratio"] for row in table]
    verdict = _decay_verdict(ratios, decay, growth) if ratios else HOLDS
    return ConditionReport(
        condition="V2", constants={"eps": eps, "last_ratio": ratios[-1] if ratios else 0.0},
        verdict=verdict, table=table,
        sample={"directions": len(dirs), "samples_per_axis": samples_per_axis,
                "max_radius": float(max(radii)) if len(radii) else 0.0, "decay_factor": decay},
        flags=["finite-difference-gradient"] if fd_used else [],
    )


def check_VW_rad(V: Potential, W: Potential, phi: Callable[[np.ndarray], np.ndarray],
                 tau_bar: float, R_tilde: float, g: Grid,
                 growth_factor: float = DEFAULT_GROWTH_FACTOR) -> ConditionReport:
    """Estimate ``C`` in ``W <= C phi V |x|^{(N-1)(tau_bar-2)/2}`` for ``|x| >= R_tilde``.

    ``phi`` is a radial profile ``r -> phi(r)`` and must be positive and
    decreasing to zero on the sampled range.
    """
    if not (V.radial and W.radial):
        raise ValueError("V and W must be radial")
    if not tau_bar > 2:
        raise ValueError("tau_bar must exceed 2")
    N = g.N
    r_max = g.R * math.sqrt(N)
    if r_max <= R_tilde:
        raise ValueError("grid does not reach beyond R_tilde")
    rr = np.linspace(R_tilde, 2 * r_max, 2001)
    ph = np.asarray(phi(rr), dtype=float)
    if np.any(ph <= 0) or np.any(np.diff(ph) > 1e-14 * ph[:-1]) or not ph[-1] < ph[0] * (1 - 1e-9):
        raise ValueError("phi must be positive and decreasing towards zero beyond R_tilde")
    power = (N - 1) * (tau_bar - 2) / 2

    def constant(grid):
        pts = grid.points()
        r = _radius(pts)
        keep = r >= R_tilde
        ratio = W(pts)[keep] / (np.asarray(phi(r[keep])) * V(pts)[keep] * r[keep] ** power)
        return _max_with_point(ratio, pts[keep])

    C, at = constant(g)
    C2, _ = constant(g.enlarge(2))
    table = [{"R": g.R, "C_est": C}, {"R": 2 * g.R, "C_est": C2}]
    if not np.isfinite(C):
        verdict = FAILS
    elif C2 > growth_factor * C:
        verdict = GROWS
    else:
        verdict = HOLDS
    return ConditionReport(
        condition="VW_rad", constants={"C": C, "tau_bar": tau_bar, "R_tilde": R_tilde},
        verdict=verdict, argmax=at, table=table,
        sample={"grid": g.describe(), "max_radius": 2 * r_max},
    )
