"""Weighted Sobolev / Lebesgue norms and checks of the positive embedding inequalities."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .discretization import Grid, ScalarField, edge_energy, integrate
from .potentials import Potential, check_VW_alpha

__all__ = [
    "NormReport",
    "InequalityReport",
    "h1v_norm",
    "lw_tau_norm",
    "lq_norm",
    "norm_report",
    "holder_chain_check",
    "interpolation_check_1d",
    "embedding_ratio",
    "EmbeddingRatio",
    "random_bump_field",
    "random_battery",
    "gaussian",
    "energy",
    "weighted_mass",
]


def _weights_on(V, grid: Grid) -> np.ndarray:
    if isinstance(V, Potential):
        return V.on(grid)
    if isinstance(V, ScalarField):
        return V.values
    return np.broadcast_to(np.asarray(V, dtype=float), grid.shape)


def energy(u: ScalarField) -> float:
    """``||grad u||_2^2`` over the box, from compact edge differences."""
    return edge_energy(u)


def weighted_mass(u: ScalarField, V) -> float:
    """``int V u^2``."""
    return integrate(u.with_values(_weights_on(V, u.grid) * u.values**2))


def h1v_norm(u: ScalarField, V) -> float:
    return math.sqrt(energy(u) + weighted_mass(u, V))


def lw_tau_norm(u: ScalarField, W, tau: float) -> float:
    if tau < 1:
        raise ValueError("tau must be >= 1")
    w = _weights_on(W, u.grid)
    return integrate(u.with_values(w * np.abs(u.values) ** tau)) ** (1.0 / tau)


def lq_norm(u: ScalarField, q: float) -> float:
    return integrate(u.with_values(np.abs(u.values) ** q)) ** (1.0 / q)


@dataclass
class NormReport:
    energy: float
    weighted_mass: float
    h1v: float
    sup: float
    lw_tau: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> dict:
        row = {k: getattr(self, k) for k in ("energy", "weighted_mass", "h1v", "sup")}
        row.update({f"lw_{k}": v for k, v in sorted(self.lw_tau.items())})
        return row

    @staticmethod
    def to_csv(reports: Sequence["NormReport"]) -> str:
        rows = [r.csv_row() for r in reports]
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        return buf.getvalue()


def norm_report(u: ScalarField, V, pairs: Iterable[tuple[str, Potential, float]] = ()) -> NormReport:
    """Collect the norms of ``u``; ``pairs`` holds ``(label, W, tau)`` triples."""
    e = energy(u)
    m = weighted_mass(u, V)
    lw = {label: lw_tau_norm(u, W, tau) for label, W, tau in pairs}
    return NormReport(energy=e, weighted_mass=m, h1v=math.sqrt(e + m),
                      sup=float(np.max(np.abs(u.values))), lw_tau=lw, grid=u.grid.describe())


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    params: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def violated(self) -> bool:
        return self.lhs > self.rhs + self.tolerance * max(abs(self.lhs), abs(self.rhs))

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "violated": self.violated, "tolerance": self.tolerance, "params": self.params}


def holder_chain_check(u: ScalarField, V: Potential, W: Potential, alpha: float, tau: float,
                       C: Optional[float] = None, tolerance: float = 1e-8) -> InequalityReport:
    """Compare ``||u||_{W,tau}^tau`` with ``C ||u||_V^{2 alpha} ||u||_q^{tau - 2 alpha}``,
    ``q = (tau - 2 alpha) / (1 - alpha)``.

    ``C`` defaults to the sampled constant of ``W <= C V^alpha`` on the field's grid.
    """
    N = u.grid.N
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if tau < 2:
        raise ValueError("tau must be >= 2")
    if N >= 3 and tau > (2 * N - 4 * alpha) / (N - 2):
        raise ValueError(f"tau must not exceed (2N - 4 alpha)/(N - 2) = {(2 * N - 4 * alpha) / (N - 2)}")
    if C is None:
        C = check_VW_alpha(V, W, alpha, u.grid).constants["C"]
    q = (tau - 2 * alpha) / (1 - alpha)
    lhs = lw_tau_norm(u, W, tau) ** tau
    rhs = C * h1v_norm(u, V) ** (2 * alpha) * lq_norm(u, q) ** (tau - 2 * alpha)
    return InequalityReport("holder_chain", lhs, rhs, tolerance,
                            {"alpha": alpha, "tau": tau, "q": q, "C": C})


def interpolation_check_1d(u: ScalarField, V: Potential, tau: float,
                           tolerance: float = 1e-12) -> InequalityReport:
    """``||u||_{V,tau}^tau <= ||u||_inf^{tau-2} ||u||_{V,2}^2`` (pointwise, so exact on the grid)."""
    if not tau > 2:
        raise ValueError("tau must exceed 2")
    lhs = lw_tau_norm(u, V, tau) ** tau
    rhs = float(np.max(np.abs(u.values))) ** (tau - 2) * weighted_mass(u, V)
    return InequalityReport("interpolation_1d", lhs, rhs, tolerance, {"tau": tau})


def gaussian(grid: Grid, center: Sequence[float] = (), width: float = 1.0,
             amplitude: float = 1.0) -> ScalarField:
    """``amplitude * exp(-|x - center|^2 / (2 width^2))``."""
    c = np.asarray(center or (0.0,) * grid.N, dtype=float)
    r2 = np.sum((grid.points() - c) ** 2, axis=-1)
    return ScalarField(grid, amplitude * np.exp(-r2 / (2 * width**2)))


def random_bump_field(grid: Grid, rng: np.random.Generator) -> tuple[ScalarField, str]:
    """Sum of 1-5 Gaussians, centers uniform in the box, widths log-uniform in [4h, R/4]."""
    k = int(rng.integers(1, 6))
    lo, hi = 4 * grid.h, grid.R / 4
    if hi <= lo:
        hi = lo * 1.0001
    pts = grid.offsets()
    values = np.zeros(grid.shape)
    parts = []
    for _ in range(k):
        c = rng.uniform(-grid.R, grid.R, size=grid.N)
        w = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        a = rng.normal()
        values += a * np.exp(-np.sum((pts - c) ** 2, axis=-1) / (2 * w * w))
        parts.append(f"{a:.3f}*G({np.round(c, 3).tolist()},{w:.3f})")
    return ScalarField(grid, values), " + ".join(parts)


def random_battery(grid: Grid, count: int, seed: int = 0):
    """Reproducible list of ``(field, description)`` pairs."""
    rng = np.random.default_rng(seed)
    return [random_bump_field(grid, rng) for _ in range(count)]


@dataclass
class EmbeddingRatio:
    best: float
    best_description: str
    ratios: list

    def to_dict(self) -> dict:
        return {"best": self.best, "best_description": self.best_description, "ratios": self.ratios}


def embedding_ratio(V: Potential, W: Potential, tau: float, trials: int, g: Grid, seed: int = 0,
                    extra_fields: Sequence[tuple[str, ScalarField]] = ()) -> EmbeddingRatio:
    """Lower bound on ``sup ||u||_{W,tau} / ||u||_V`` from a battery of test fields.

    The battery holds seeded random bumps, centred Gaussians of several widths
    and translated Gaussians; ``extra_fields`` (each on its own grid, e.g. the
    counterexample bumps) are appended and reported in order.
    """
    fields = [(desc, u) for u, desc in random_battery(g, trials, seed)]
    for w in (0.25, 0.5, 1.0, 2.0):
        fields.append((f"G(0,{w})", gaussian(g, width=w)))
    for shift in (0.25, 0.5, 0.75):
        c = [shift * g.R] + [0.0] * (g.N - 1)
        fields.append((f"G({c},0.5)", gaussian(g, center=c, width=0.5)))
    fields.extend(extra_fields)
    ratios = []
    for desc, u in fields:
        denom = h1v_norm(u, V)
        ratios.append({"field": desc, "ratio": lw_tau_norm(u, W, tau) / denom if denom > 0 else 0.0})
    i = int(np.argmax([r["ratio"] for r in ratios]))
    return EmbeddingRatio(ratios[i]["ratio"], ratios[i]["field"], ratios)
