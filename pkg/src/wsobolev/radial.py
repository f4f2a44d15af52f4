"""Radial reduction: norms in the ``r^{N-1} dr`` measure, Strauss decay, the radial tail bound,
and the one-dimensional pointwise embedding check."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .discretization import ScalarField
from .norms import NormReport, h1v_norm
from .potentials import Potential, check_gradV

__all__ = [
    "RadialGrid",
    "RadialField",
    "sphere_measure",
    "radial_sample",
    "radial_norms",
    "h1_norm",
    "strauss_check",
    "StraussReport",
    "thrad_tail",
    "TailReport",
    "embed_1d_check",
    "Embed1DReport",
    "random_radial_battery",
]


def sphere_measure(N: int) -> float:
    """Surface measure of the unit sphere in R^N (2 for N = 1, i.e. the even extension)."""
    return 2 * math.pi ** (N / 2) / math.gamma(N / 2)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    N: int
    R: float
    M: int
    r: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("dimension must be >= 1")
        if not self.R > 0 or self.M < 3:
            raise ValueError("need R > 0 and M >= 3")
        r = np.linspace(0.0, self.R, self.M)
        trap = np.full(self.M, self.h)
        trap[0] = trap[-1] = 0.5 * self.h
        w = sphere_measure(self.N) * r ** (self.N - 1) * trap
        if self.N >= 2:
            w[0] = 0.0
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "weights", w)

    @property
    def h(self) -> float:
        return self.R / (self.M - 1)

    def refine(self) -> "RadialGrid":
        return RadialGrid(self.N, self.R, 2 * self.M - 1)

    def describe(self) -> dict:
        return {"N": self.N, "R": self.R, "M": self.M, "h": self.h}


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.r.shape:
            raise ValueError("value count does not match the radial grid")
        if not np.isfinite(v).all():
            raise ValueError("non-finite radial field value")
        object.__setattr__(self, "values", v)

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(self.grid.weights * f))

    def derivative(self) -> np.ndarray:
        return np.gradient(self.values, self.grid.h, edge_order=2)

    def scaled(self, c: float) -> "RadialField":
        return RadialField(self.grid, c * self.values)


def radial_sample(profile: Callable[[np.ndarray], np.ndarray], grid: RadialGrid) -> RadialField:
    return RadialField(grid, np.broadcast_to(profile(grid.r), grid.r.shape))


def _radial_weight(V, r: np.ndarray) -> np.ndarray:
    if isinstance(V, Potential):
        return V.radial_value(r)
    if callable(V):
        return np.asarray(V(r), dtype=float) * np.ones_like(r)
    return np.full_like(r, float(V))


def radial_norms(u: RadialField, V, pairs=()) -> NormReport:
    """Norms of a radial field; ``pairs`` holds ``(label, W, tau)`` triples."""
    r = u.grid.r
    e = u.integrate(u.derivative() ** 2)
    m = u.integrate(_radial_weight(V, r) * u.values**2)
    lw = {label: u.integrate(_radial_weight(W, r) * np.abs(u.values) ** tau) ** (1 / tau)
          for label, W, tau in pairs}
    return NormReport(energy=e, weighted_mass=m, h1v=math.sqrt(e + m),
                      sup=float(np.abs(u.values).max()), lw_tau=lw, grid=u.grid.describe())


def h1_norm(u: RadialField) -> float:
    return radial_norms(u, 1.0).h1v


@dataclass
class StraussReport:
    constant: float
    at_radius: Optional[float]
    reference: float
    refined_constant: Optional[float] = None
    stable: Optional[bool] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _strauss_constant(u: RadialField, r_min: float = 1.0):
    N = u.grid.N
    nrm = h1_norm(u)
    r = u.grid.r
    keep = r >= r_min
    if nrm == 0 or not keep.any():
        return 0.0, None
    q = r[keep] ** ((N - 1) / 2) * np.abs(u.values[keep]) / nrm
    i = int(np.argmax(q))
    return float(q[i]), float(r[keep][i])


def strauss_check(u: RadialField, refined: Optional[RadialField] = None,
                  rtol: float = 1e-2) -> StraussReport:
    """Empirical constant in ``|u(r)| <= C r^{-(N-1)/2} ||u||_{H^1}`` over ``r >= 1``.

    ``reference`` is the elementary bound ``1 / sqrt(|S^{N-1}|)`` obtained by
    integrating ``(r^{N-1} u^2)'`` from ``r`` to infinity.
    """
    if u.grid.N < 2:
        raise ValueError("the radial decay estimate needs N >= 2")
    c, at = _strauss_constant(u)
    rep = StraussReport(c, at, 1.0 / math.sqrt(sphere_measure(u.grid.N)))
    if refined is not None:
        c2, _ = _strauss_constant(refined)
        rep.refined_constant = c2
        rep.stable = abs(c2 - c) <= rtol * max(c, c2, 1e-300)
    return rep


@dataclass
class TailReport:
    lhs: float
    bound: float
    constants: dict

    @property
    def slack(self) -> float:
        return self.bound - self.lhs

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "bound": self.bound, "slack": self.slack, "constants": self.constants}


def thrad_tail(u: RadialField, V, W, phi: Callable[[np.ndarray], np.ndarray], tau: float,
               tau_bar: float, R_cut: float, R_tilde: Optional[float] = None,
               C: Optional[float] = None) -> TailReport:
    """Tail ``int_{|x| >= R_cut} W |u|^tau`` against ``C sup phi (C_S ||u||_{H^1})^{tau-2} int V u^2``.

    ``C`` is the sampled constant of ``W <= C phi V |x|^{(N-1)(tau_bar-2)/2}``
    beyond ``R_tilde`` (default ``R_cut``) and ``C_S`` the empirical Strauss
    constant of ``u`` on ``r >= R_cut``.
    """
    N = u.grid.N
    R_tilde = R_cut if R_tilde is None else R_tilde
    if tau < tau_bar or tau_bar <= 2:
        raise ValueError("need tau >= tau_bar > 2")
    if R_cut < max(1.0, R_tilde):
        raise ValueError("R_cut must be at least max(1, R_tilde)")
    r = u.grid.r
    v = _radial_weight(V, r)
    w = _radial_weight(W, r)
    ph = np.asarray(phi(r), dtype=float) * np.ones_like(r)
    power = (N - 1) * (tau_bar - 2) / 2
    beyond = r >= R_tilde
    if C is None:
        C = float(np.max(w[beyond] / (ph[beyond] * v[beyond] * r[beyond] ** power)))
    tail = r >= R_cut
    lhs = u.integrate(np.where(tail, w * np.abs(u.values) ** tau, 0.0))
    mass = u.integrate(np.where(tail, v * u.values**2, 0.0))
    c_s, _ = _strauss_constant(u, R_cut)
    nrm = h1_norm(u)
    sup_phi = float(ph[tail].max())
    bound = C * sup_phi * (c_s * nrm) ** (tau - 2) * mass
    return TailReport(lhs, bound, {"C": C, "sup_phi": sup_phi, "strauss": c_s, "h1": nrm,
                                   "tail_mass": mass, "R_cut": R_cut, "tau": tau, "tau_bar": tau_bar})


@dataclass
class Embed1DReport:
    empirical: float
    chain_constant: float
    gradient_constant: float
    sup_ratio: float
    at: float

    @property
    def holds(self) -> bool:
        return self.empirical <= self.chain_constant

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["holds"] = self.holds
        return d


def embed_1d_check(u: Union[ScalarField, RadialField], V: Potential,
                   gradient_constant: Optional[float] = None) -> Embed1DReport:
    """Pointwise ``sqrt(V) u^2 <= (1 + C_V / 2) ||u||_V^2`` on the real line.

    ``C_V`` is the constant of ``|V'| <= C_V V^{3/2}``; it is estimated on the
    field's own domain unless supplied.
    """
    if isinstance(u, RadialField):
        if u.grid.N != 1:
            raise ValueError("radial fields must have N = 1 (even extension)")
        x = u.grid.r
        vals = u.values
        norm2 = radial_norms(u, V).h1v ** 2
        if gradient_constant is None:
            dv = np.abs(V.gradient(x[:, None])[0][:, 0])
            gradient_constant = float(np.max(dv / V.radial_value(x) ** 1.5))
        sqrt_v = np.sqrt(V.radial_value(x))
    else:
        if u.grid.N != 1:
            raise ValueError("expected a one-dimensional field")
        x = u.grid.points()[:, 0]
        vals = u.values
        norm2 = h1v_norm(u, V) ** 2
        if gradient_constant is None:
            gradient_constant = check_gradV(V, u.grid).constants["C"]
        sqrt_v = np.sqrt(V.on(u.grid))
    if norm2 == 0:
        return Embed1DReport(0.0, 1 + gradient_constant / 2, gradient_constant, 0.0, 0.0)
    q = sqrt_v * vals**2 / norm2
    i = int(np.argmax(q))
    return Embed1DReport(float(q[i]), 1 + gradient_constant / 2, gradient_constant,
                         float(np.abs(vals).max() / math.sqrt(norm2)), float(x[i]))


def random_radial_battery(grid: RadialGrid, count: int, seed: int = 0,
                          min_width: Optional[float] = None):
    """Seeded radial fields: sums of 1-5 shells ``a exp(-(r - c)^2 / (2 w^2))``.

    Widths are log-uniform in ``[min_width, R/4]`` (default ``min_width = 4h``);
    fixing ``min_width`` reproduces the same fields on a refined grid.
    """
    rng = np.random.default_rng(seed)
    out = []
    lo, hi = (4 * grid.h if min_width is None else min_width), grid.R / 4
    for _ in range(count):
        k = int(rng.integers(1, 6))
        vals = np.zeros_like(grid.r)
        desc = []
        for _ in range(k):
            c = rng.uniform(0, grid.R / 2)
            w = math.exp(rng.uniform(math.log(lo), math.log(hi)))
            a = rng.normal()
            vals += a * np.exp(-((grid.r - c) ** 2) / (2 * w * w))
            desc.append(f"{a:.3f}*S({c:.3f},{w:.3f})")
        out.append((RadialField(grid, vals), " + ".join(desc)))
    return out
