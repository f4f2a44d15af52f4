"""Explicit bump sequences witnessing non-embedding (N >= 3) and non-compactness (N = 2).

Each bump is integrated on its own small grid around its center. Supports
are pairwise disjoint, so norms of the sums are sums of per-bump norms and
nothing is lost by never assembling a global field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .discretization import Grid, ScalarField, edge_inner, gradient, integrate
from .norms import h1v_norm, lw_tau_norm
from .potentials import Potential, check_V0, make_annular_step

__all__ = [
    "BumpProfile",
    "BumpSequence",
    "CenterSearchError",
    "smoothstep",
    "build_vnon",
    "build_general",
    "build_annular",
    "certify_norms",
    "weak_null_check",
    "Certification",
    "WeakNullReport",
    "assemble",
    "LOCAL_NODES",
]

LOCAL_NODES = 65
LOCAL_BOX = 1.25
KAPPA_SMOOTHSTEP = 1.5


class CenterSearchError(RuntimeError):
    pass


def smoothstep(t):
    """C^1 cubic ramp ``3t^2 - 2t^3`` clamped to [0, 1]; max slope 3/2 at t = 1/2."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class BumpProfile:
    """Radial plateau bump: ``height`` on ``B(center, r_in)``, zero outside ``B(center, r_out)``."""

    center: tuple
    r_in: float
    r_out: float
    height: float
    V_center: float = float("nan")
    kappa: float = KAPPA_SMOOTHSTEP

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out) or not self.height > 0:
            raise ValueError("need 0 < r_in < r_out and a positive height")

    @property
    def N(self) -> int:
        return len(self.center)

    @property
    def gradient_bound(self) -> float:
        return self.kappa * self.height / (self.r_out - self.r_in)

    def profile(self, dist):
        """Value as a function of the distance to the center."""
        return self.height * smoothstep((self.r_out - np.asarray(dist)) / (self.r_out - self.r_in))

    def __call__(self, x) -> np.ndarray:
        d = np.sqrt(np.sum((np.asarray(x, dtype=float) - np.asarray(self.center)) ** 2, axis=-1))
        return self.profile(d)

    def local_grid(self, nodes: int = LOCAL_NODES) -> Grid:
        return Grid(self.N, LOCAL_BOX * self.r_out, nodes, tuple(self.center))

    def field(self, grid: Optional[Grid] = None) -> ScalarField:
        grid = grid or self.local_grid()
        if grid.center == tuple(self.center):
            # offsets avoid cancellation when the center is far from the origin
            d = np.sqrt(np.sum(grid.offsets() ** 2, axis=-1))
            return ScalarField(grid, self.profile(d))
        return ScalarField(grid, self(grid.points()))


@dataclass
class BumpSequence:
    kind: str
    profiles: list
    scalings: list
    params: dict = field(default_factory=dict)
    nodes: int = LOCAL_NODES

    def __post_init__(self):
        for i, a in enumerate(self.profiles):
            for b in self.profiles[i + 1:]:
                gap = math.dist(a.center, b.center)
                if gap <= a.r_out + b.r_out:
                    raise ValueError(
                        f"bump supports overlap: centers {list(a.center)} and {list(b.center)}")

    def __len__(self):
        return len(self.profiles)

    def grids(self) -> list:
        return [p.local_grid(self.nodes) for p in self.profiles]

    def fields(self) -> list:
        return [p.field(g) for p, g in zip(self.profiles, self.grids())]


def _axis_point(N: int, s: float) -> np.ndarray:
    x = np.zeros(N)
    x[0] = s
    return x


def build_vnon(V: Potential, N: int = 3, tau: float = 4.0, m: float = 1.0, n_max: int = 5,
               nodes: int = LOCAL_NODES) -> BumpSequence:
    """Bumps of height ``V(x_n)^{(N-2)/4}`` with ``V(x_n)^{(N-2)(tau-2)/(4 tau)} >= 2^n``.

    Centers lie on the positive first axis. Each is the smallest abscissa past
    the previous support that meets the ``2^n`` threshold (exponential
    bracketing then bisection), nudged outwards in steps of the current outer
    radius until it clears the previous bump.
    """
    if N < 3:
        raise ValueError("the non-embedding sequence needs N >= 3")
    if not tau > 2:
        raise ValueError("tau must exceed 2")
    beta = (N - 2) * (tau - 2) / (4 * tau)

    def log_v(s):
        with np.errstate(over="ignore"):
            return math.log(float(V(_axis_point(N, s))))

    def r_out(s):
        return m / math.sqrt(float(V(_axis_point(N, s))))

    profiles, scalings = [], []
    start = 0.0
    prev = None
    for n in range(1, n_max + 1):
        target = n * math.log(2.0) / beta
        if log_v(start) >= target:
            s = start
        else:
            lo, step = start, max(1.0, start)
            hi = start + step
            k = 0
            while log_v(hi) < target:
                lo, hi = hi, start + step * 2.0 ** (k + 2)
                k += 1
                if k > 1000 or not math.isfinite(hi):
                    raise CenterSearchError(
                        f"V^{beta:.4g} never reaches 2^{n} along the first axis; V is not coercive there")
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if log_v(mid) >= target:
                    hi = mid
                else:
                    lo = mid
            s = hi
        if prev is not None:
            while s - prev.center[0] <= prev.r_out + r_out(s):
                s += r_out(s)
        vc = float(V(_axis_point(N, s)))
        ro = m / math.sqrt(vc)
        prof = BumpProfile(tuple(_axis_point(N, s)), ro / 2, ro, vc ** ((N - 2) / 4), vc)
        profiles.append(prof)
        scalings.append(vc ** (-beta))
        prev = prof
        start = s + ro
    return BumpSequence("vnon", profiles, scalings,
                        {"N": N, "tau": tau, "m": m, "n_max": n_max, "beta": beta,
                         "potential": V.describe()}, nodes)


def build_general(V: Potential, m: float, centers: Sequence[Sequence[float]],
                  nodes: int = LOCAL_NODES) -> BumpSequence:
    """Plateau-one bumps on ``B(x_n, m / (2 sqrt V(x_n)))``, zero outside ``B(x_n, m / sqrt V(x_n))``."""
    centers = [tuple(float(c) for c in x) for x in centers]
    profiles = []
    for x in centers:
        vc = float(V(np.asarray(x)))
        ro = m / math.sqrt(vc)
        profiles.append(BumpProfile(x, ro / 2, ro, 1.0, vc))
    params = {"m": m, "potential": V.describe()}
    if centers:
        rep = check_V0(V, centers, m)
        params["V0"] = {"c1": rep.constants["c1"], "c2": rep.constants["c2"]}
    return BumpSequence("general", profiles, [1.0] * len(profiles), params, nodes)


def build_annular(n_range: Sequence[int], nodes: int = LOCAL_NODES) -> BumpSequence:
    """Plateau-one bumps centred at ``(n, 0)`` with radii ``1/(2n)`` and ``1/n``."""
    V = make_annular_step()
    profiles = []
    for n in n_range:
        if n < 1:
            raise ValueError("annular indices start at 1")
        profiles.append(BumpProfile((float(n), 0.0), 1.0 / (2 * n), 1.0 / n, 1.0,
                                    float(V(np.array([float(n), 0.0])))))
    return BumpSequence("annular", profiles, [1.0] * len(profiles),
                        {"n_range": [int(n) for n in n_range], "potential": V.describe()}, nodes)


@dataclass
class Certification:
    kind: str
    tau: float
    rows: list
    verdicts: dict
    constants: dict

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {"kind": self.kind, "tau": self.tau, "rows": self.rows,
                "verdicts": self.verdicts, "constants": self.constants}

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]


def certify_norms(seq: BumpSequence, V: Potential, tau: float, band: Optional[float] = None,
                  growth_ratio: float = 1.5, floor: float = 1e-3) -> Certification:
    """Per-bump norm table and the boundedness / unboundedness verdicts for the sequence."""
    if band is None:
        band = 3.0 if seq.kind == "vnon" else 2.0
    rows = []
    for n, (prof, s, u) in enumerate(zip(seq.profiles, seq.scalings, seq.fields()), start=1):
        g = u.grid
        grad_max = float(np.sqrt(gradient(u).norm_squared().values.max()))
        row = {
            "n": n,
            "center_norm": float(np.linalg.norm(prof.center)),
            "V_center": prof.V_center,
            "r_in": prof.r_in,
            "r_out": prof.r_out,
            "height": prof.height,
            "scaling": s,
            "h1v": h1v_norm(u, V),
            "lw_tau": lw_tau_norm(u, V, tau),
            "grad_max": grad_max,
            "grad_bound": prof.gradient_bound * (1 + 5 * g.h / prof.r_out),
        }
        rows.append(row)
    constants = {"band": band}
    verdicts = {}
    if not rows:
        return Certification(seq.kind, tau, rows, verdicts, constants)
    h1 = [r["h1v"] for r in rows]
    lw = [r["lw_tau"] for r in rows]
    verdicts["h1v_bounded"] = max(h1) <= band * min(h1)
    verdicts["gradient_within_bound"] = all(r["grad_max"] <= r["grad_bound"] for r in rows)
    if seq.kind == "vnon":
        N = seq.params["N"]
        C1 = max(h1)
        c1 = check_V0(V, [p.center for p in seq.profiles], seq.params["m"]).constants["c1"]
        constants.update({"C1": C1, "c1": c1})
        v_h1 = [s * h for s, h in zip(seq.scalings, h1)]
        v_tau = [(s * w) ** tau for s, w in zip(seq.scalings, lw)]
        for i, r in enumerate(rows):
            n = r["n"]
            ball = math.pi ** (N / 2) / math.gamma(N / 2 + 1) * r["r_in"] ** N
            r["lw_tau_lower_bound"] = (c1 * r["V_center"] ** (1 + (N - 2) * tau / 4) * ball) ** (1 / tau)
            r["v_h1v"] = v_h1[i]
            r["envelope"] = C1 * 2.0**-n
            r["partial_v_h1v"] = float(sum(v_h1[: i + 1]))
            r["tail_v_h1v"] = float(sum(v_h1[i + 1:]))
            r["v_lw_tau_pow"] = v_tau[i]
            r["partial_v_lw_tau_pow"] = float(sum(v_tau[: i + 1]))
        ratios = [b / a for a, b in zip(lw, lw[1:])]
        constants["min_consecutive_ratio"] = min(ratios) if ratios else None
        verdicts["lw_tau_unbounded"] = all(q > growth_ratio for q in ratios)
        verdicts["lower_bound"] = all(r["lw_tau"] >= r["lw_tau_lower_bound"] for r in rows)
        verdicts["v_geometric"] = all(r["v_h1v"] <= r["envelope"] * (1 + 1e-12) for r in rows)
        verdicts["tail_geometric"] = all(r["tail_v_h1v"] <= r["envelope"] for r in rows)
    else:
        verdicts["bounded_away_from_zero"] = min(lw) > floor * max(lw)
    return Certification(seq.kind, tau, rows, verdicts, constants)


TestField = Union[ScalarField, Callable[[np.ndarray], np.ndarray]]


def _test_on(test: TestField, grid: Grid) -> ScalarField:
    if isinstance(test, ScalarField):
        tg = test.grid
        axes = [np.asarray(tg.axis) + c for c in tg.center]
        interp = RegularGridInterpolator(axes, test.values, bounds_error=False, fill_value=0.0)
        pts = grid.points().reshape(-1, grid.N)
        return ScalarField(grid, interp(pts).reshape(grid.shape))
    return ScalarField(grid, np.broadcast_to(test(grid.points()), grid.shape))


@dataclass
class WeakNullReport:
    tables: dict
    verdicts: dict
    zero_from: dict

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {"tables": self.tables, "verdicts": self.verdicts, "zero_from": self.zero_from}


def weak_null_check(seq: BumpSequence, V: Potential, tests: Sequence[tuple[str, TestField]],
                    decay: float = 0.25) -> WeakNullReport:
    """Inner products ``<u_n, phi>_V`` against fixed test fields.

    A test passes when its table ends in exact zeros, or when the magnitudes
    are non-increasing after their peak and the last one is below ``decay``
    times the peak.
    """
    tables, verdicts, zero_from = {}, {}, {}
    fields = seq.fields()
    for name, test in tests:
        vals = []
        for u in fields:
            phi = _test_on(test, u.grid)
            vals.append(edge_inner(u, phi) + integrate(u * phi * V.on(u.grid)))
        tables[name] = vals
        mags = np.abs(vals)
        if len(vals) == 0 or mags[-1] == 0.0:
            ok = True
        else:
            tail = mags[int(np.argmax(mags)):]
            ok = bool(np.all(np.diff(tail) <= 0) and mags[-1] <= decay * mags.max())
        verdicts[name] = ok
        nz = np.nonzero(mags)[0]
        first_zero = None
        if len(vals) and (len(nz) == 0 or nz[-1] < len(vals) - 1):
            first_zero = int(nz[-1] + 2) if len(nz) else 1
        zero_from[name] = first_zero
    return WeakNullReport(tables, verdicts, zero_from)


def assemble(seq: BumpSequence, grid: Grid, scaled: bool = False) -> ScalarField:
    """Sum of the sequence's bumps sampled on one grid (optionally the scaled ``v_n``)."""
    total = np.zeros(grid.shape)
    pts = grid.points()
    for p, s in zip(seq.profiles, seq.scalings):
        total += (s if scaled else 1.0) * p(pts)
    return ScalarField(grid, total)
