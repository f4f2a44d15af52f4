"""Minimization of ``I(u) = A/2 - B D/(p+1)`` over the Nehari set ``J(u) = 0``.

Here ``A = ||u||_V^2``, ``B = ||u||_2^2`` and ``D = int W |u|^{p+1}`` (``W``
defaults to ``V``). Fields live in the discrete Dirichlet space: the solver
zeroes the box faces, and all functionals are exact discrete quantities so
that the Nehari algebra holds to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.signal import fftconvolve

from .discretization import (Grid, ScalarField, boundary_mask, edge_energy,
                             laplacian, laplacian4, zero_boundary)
from .norms import _weights_on

__all__ = [
    "ProjectionError",
    "NehariState",
    "SolutionPair",
    "SolverOptions",
    "SolverRun",
    "ConcentrationTrace",
    "functional_parts",
    "functional_I",
    "functional_J",
    "gradient_I",
    "nehari_scale",
    "nehari_project",
    "minimize",
    "extract_solution",
    "concentration_trace",
    "default_alpha",
    "nu_density",
]


class ProjectionError(ValueError):
    """Raised when the Nehari projection is undefined (``A``, ``B`` or ``D`` vanishes)."""


def _check_p(p: float):
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p}")


def functional_parts(u: ScalarField, V, p: float, W=None) -> tuple[float, float, float]:
    """``(A, B, D)`` for ``u``."""
    v = _weights_on(V, u.grid)
    w = v if W is None else _weights_on(W, u.grid)
    weights = u.grid.weights
    a = edge_energy(u) + float(np.sum(weights * v * u.values**2))
    b = float(np.sum(weights * u.values**2))
    d = float(np.sum(weights * w * np.abs(u.values) ** (p + 1)))
    return a, b, d


def functional_I(u: ScalarField, V, p: float, W=None) -> float:
    _check_p(p)
    a, b, d = functional_parts(u, V, p, W)
    return 0.5 * a - b * d / (p + 1)


def functional_J(u: ScalarField, V, p: float, W=None) -> float:
    _check_p(p)
    a, b, d = functional_parts(u, V, p, W)
    return a - (p + 3) / (p + 1) * b * d


def _edge_variation(u: np.ndarray, h: float) -> np.ndarray:
    """Half the derivative of :func:`edge_energy` with respect to the node values."""
    out = np.zeros_like(u)
    for ax in range(u.ndim):
        d = np.diff(u, axis=ax)
        lo = [slice(None)] * u.ndim
        hi = [slice(None)] * u.ndim
        lo[ax] = slice(1, None)
        hi[ax] = slice(None, -1)
        out[tuple(lo)] += d
        out[tuple(hi)] -= d
    return out * h ** (u.ndim - 2)


def gradient_I(u: ScalarField, V, p: float, W=None) -> ScalarField:
    """Representative of ``I'(u)`` for the quadrature pairing ``integrate(g * phi)``.

    Away from the faces this is ``-Lap u + V u - 2D/(p+1) u - B W |u|^{p-1} u``
    with the standard stencil; at face nodes the stencil is the exact
    derivative of the in-box edge energy.
    """
    _check_p(p)
    g = u.grid
    v = _weights_on(V, g)
    w = v if W is None else _weights_on(W, g)
    _, b, d = functional_parts(u, V, p, W)
    vals = u.values
    out = _edge_variation(vals, g.h) / g.weights
    out = out + v * vals - (2 * d / (p + 1)) * vals - b * w * np.abs(vals) ** (p - 1) * vals
    return ScalarField(g, out)


def nehari_scale(u: ScalarField, V, p: float, W=None) -> float:
    """The unique ``t > 0`` with ``J(t u) = 0``."""
    _check_p(p)
    a, b, d = functional_parts(u, V, p, W)
    if not (a > 0 and b > 0 and d > 0):
        raise ProjectionError("projection undefined: field vanishes (A, B or D is zero)")
    return ((p + 1) * a / ((p + 3) * b * d)) ** (1.0 / (p + 1))


def nehari_project(u: ScalarField, V, p: float, W=None) -> ScalarField:
    return u * nehari_scale(u, V, p, W)


@dataclass
class NehariState:
    iteration: int
    A: float
    B: float
    D: float
    I: float
    J: float
    grad_norm: float
    u: Optional[ScalarField] = field(default=None, repr=False)

    def record(self) -> dict:
        return {k: getattr(self, k) for k in ("iteration", "A", "B", "D", "I", "J", "grad_norm")}


@dataclass
class SolutionPair:
    u0: ScalarField = field(repr=False)
    ubar: ScalarField = field(repr=False)
    p: float
    mu: float
    lam: float
    residual: float
    discrete_residual: float
    negativity: float
    identity_slack: float
    J_relative: float

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "mu": self.mu, "p": self.p, "residual": self.residual,
                "discrete_residual": self.discrete_residual, "negativity": self.negativity,
                "identity_slack": self.identity_slack, "J_relative": self.J_relative}


def _interior(g: Grid, margin: int) -> tuple:
    return tuple(slice(margin, g.M - margin) for _ in range(g.N))


def extract_solution(u0: ScalarField, V, p: float, W=None, tol: float = 1e-6) -> SolutionPair:
    """Eigenpair ``(ubar, lambda)`` from a point of the Nehari set.

    ``residual`` is ``||-Lap ubar + (V - lambda) ubar - W |ubar|^{p-1} ubar||_2 / ||ubar||_V``
    with a fourth-order Laplacian on nodes at least two steps inside the box,
    so it measures the discretization error rather than the solver's own
    equation; ``discrete_residual`` uses the solver's stencil.
    """
    _check_p(p)
    a, b, d = functional_parts(u0, V, p, W)
    if a <= 0:
        raise ProjectionError("cannot extract a solution from the zero field")
    j_rel = abs(a - (p + 3) / (p + 1) * b * d) / a
    if j_rel > tol:
        raise ValueError(f"field is not on the Nehari set: |J|/A = {j_rel:.3e}")
    g = u0.grid
    mu = b
    lam = 2 * d / (p + 1)
    ubar = u0 * mu ** (1.0 / (p - 1))
    abar, bbar, _ = functional_parts(ubar, V, p, W)
    slack = abs(lam - 2.0 / (p + 3) * abar / bbar) / lam
    v = _weights_on(V, g)
    w = v if W is None else _weights_on(W, g)
    nonlinear = w * np.abs(ubar.values) ** (p - 1) * ubar.values
    core = _interior(g, 2)
    r4 = -laplacian4(ubar).values + (v - lam) * ubar.values - nonlinear
    r2 = -laplacian(ubar).values + (v - lam) * ubar.values - nonlinear
    scale = math.sqrt(abar)
    weights = g.weights
    residual = math.sqrt(float(np.sum(weights[core] * r4[core] ** 2))) / scale
    core1 = _interior(g, 1)
    discrete = math.sqrt(float(np.sum(weights[core1] * r2[core1] ** 2))) / scale
    negativity = float(np.sum(weights * np.minimum(ubar.values, 0.0) ** 2))
    return SolutionPair(u0, ubar, p, mu, lam, residual, discrete, negativity, slack, j_rel)


def _operator(g: Grid, v: np.ndarray) -> sp.csr_matrix:
    """``-Lap + V`` on the interior nodes with homogeneous Dirichlet data."""
    n = g.M - 2
    lap1 = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / g.h**2
    eye = sp.identity(n)
    op = sp.csr_matrix((n**g.N, n**g.N))
    for ax in range(g.N):
        term = None
        for k in range(g.N):
            piece = lap1 if k == ax else eye
            term = piece if term is None else sp.kron(term, piece)
        op = op + term
    return (op + sp.diags(v[_interior(g, 1)].ravel())).tocsr()


class _Preconditioner:
    def __init__(self, g: Grid, v: np.ndarray, method: str, rtol: float):
        self.grid = g
        self.method = method
        self.rtol = rtol
        self.matrix = _operator(g, v)
        self.core = _interior(g, 1)
        self.shape = tuple(g.M - 2 for _ in range(g.N))
        self.lu = spla.splu(self.matrix.tocsc()) if method == "lu" else None
        self.last = None
        self.cg_iterations = 0

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = rhs[self.core].ravel()
        if self.lu is not None:
            x = self.lu.solve(b)
        else:
            count = [0]

            def cb(_):
                count[0] += 1

            x, info = spla.cg(self.matrix, b, x0=self.last, rtol=self.rtol, atol=0.0,
                              maxiter=20 * b.size, callback=cb)
            if info != 0:
                raise RuntimeError(f"conjugate gradients did not converge (info={info})")
            self.cg_iterations += count[0]
            self.last = x
        out = np.zeros(self.grid.shape)
        out[self.core] = x.reshape(self.shape)
        return out


@dataclass
class SolverOptions:
    max_iter: int = 5000
    tol: float = 1e-6
    max_halvings: int = 40
    abs_every: int = 10
    snapshot_every: int = 10
    preconditioner: str = "cg"
    cg_rtol: float = 1e-8

    def __post_init__(self):
        if self.preconditioner not in ("cg", "lu"):
            raise ValueError("preconditioner must be 'cg' or 'lu'")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("need max_iter >= 1 and tol > 0")


@dataclass
class SolverRun:
    trajectory: list
    history: list
    solution: Optional[SolutionPair]
    status: str
    iterations: int
    best: NehariState

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def __iter__(self):
        yield self.trajectory
        yield self.solution


def _state(u: ScalarField, V, p: float, W, it: int, gnorm: float, keep: bool) -> NehariState:
    a, b, d = functional_parts(u, V, p, W)
    return NehariState(it, a, b, d, 0.5 * a - b * d / (p + 1),
                       a - (p + 3) / (p + 1) * b * d, gnorm, u if keep else None)


def minimize(initial: ScalarField, V, p: float, opts: Optional[SolverOptions] = None,
             W=None) -> SolverRun:
    """Preconditioned projected descent on the Nehari set.

    Each step solves ``(-Lap + V) d = I'(u)`` in the Dirichlet space, then
    backtracks ``u <- P(u - s d)`` from ``s = 1`` until ``I`` decreases, where
    ``P`` is the Nehari projection. Stops when ``sqrt(<I'(u), d>) < tol ||u||_V``.
    """
    _check_p(p)
    opts = opts or SolverOptions()
    g = initial.grid
    v = _weights_on(V, g)
    pre = _Preconditioner(g, v, opts.preconditioner, opts.cg_rtol)
    u = nehari_project(zero_boundary(initial), V, p, W)
    mask = boundary_mask(g)
    trajectory: list[NehariState] = []
    history: list[dict] = []
    status = "max_iter"
    state = None
    it = 0
    while True:
        grad = np.where(mask, 0.0, gradient_I(u, V, p, W).values)
        d = pre.solve(grad)
        gnorm = math.sqrt(max(float(np.sum(g.weights * grad * d)), 0.0))
        state = _state(u, V, p, W, it, gnorm, keep=True)
        history.append(state.record())
        snap = it % opts.snapshot_every == 0
        if state.A < 1e-24:
            status = "collapse"
            trajectory.append(state)
            break
        if gnorm < opts.tol * math.sqrt(state.A):
            status = "converged"
            trajectory.append(state)
            break
        if it >= opts.max_iter:
            trajectory.append(state)
            break
        if snap:
            trajectory.append(state)
        else:
            state.u = None
        accepted = False
        s = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = u.values - s * d
            try:
                cand = nehari_project(ScalarField(g, trial), V, p, W)
            except ProjectionError:
                s *= 0.5
                continue
            if functional_I(cand, V, p, W) < state.I:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            status = "stalled"
            state.u = u
            if trajectory[-1] is not state:
                trajectory.append(state)
            break
        u = cand
        it += 1
        if opts.abs_every and it % opts.abs_every == 0:
            # |u| has no larger edge energy, so its projection does not raise I
            u = nehari_project(abs(u), V, p, W)
    best = state
    solution = None
    if status != "collapse":
        solution = extract_solution(best.u, V, p, W, tol=max(1e-6, 10 * abs(best.J) / best.A))
    return SolverRun(trajectory, history, solution, status, it, best)


def default_alpha(p: float) -> float:
    return 0.5 * (1.0 / (p + 3) + 0.5)


def nu_density(u: ScalarField, V, p: float, alpha: float, W=None) -> np.ndarray:
    """Node masses of ``(1/2 - alpha)(|grad u|^2 + V u^2) + (alpha(p+3) - 1)/(p+1) B W |u|^{p+1}``.

    Each edge's squared difference is split evenly between its endpoints, so
    the masses sum to the discrete total exactly.
    """
    if not 1.0 / (p + 3) < alpha < 0.5:
        raise ValueError(f"alpha must lie in (1/(p+3), 1/2) = ({1 / (p + 3):.6g}, 0.5)")
    g = u.grid
    vals = u.values
    edge = np.zeros_like(vals)
    for ax in range(g.N):
        sq = np.diff(vals, axis=ax) ** 2
        lo = [slice(None)] * g.N
        hi = [slice(None)] * g.N
        lo[ax] = slice(1, None)
        hi[ax] = slice(None, -1)
        edge[tuple(lo)] += 0.5 * sq
        edge[tuple(hi)] += 0.5 * sq
    edge *= g.h ** (g.N - 2)
    v = _weights_on(V, g)
    w = v if W is None else _weights_on(W, g)
    b = float(np.sum(g.weights * vals**2))
    dens = (0.5 - alpha) * (edge + g.weights * v * vals**2)
    dens += (alpha * (p + 3) - 1) / (p + 1) * b * g.weights * w * np.abs(vals) ** (p + 1)
    return dens


@dataclass
class ConcentrationTrace:
    radii: list
    iterations: list
    totals: list
    Q: list
    centers: list
    label: str
    details: dict

    def to_dict(self) -> dict:
        return {"radii": self.radii, "iterations": self.iterations, "totals": self.totals,
                "Q": self.Q, "centers": self.centers, "label": self.label, "details": self.details}

    def rows(self) -> list:
        out = []
        for it, tot, qs, cs in zip(self.iterations, self.totals, self.Q, self.centers):
            for r, q, c in zip(self.radii, qs, cs):
                out.append({"iteration": it, "radius": r, "total": tot, "Q": q,
                            "ratio": q / tot if tot > 0 else 0.0,
                            **{f"xi{k}": ck for k, ck in enumerate(c)}})
        return out


def _disk(radius: float, h: float, N: int) -> np.ndarray:
    k = int(math.floor(radius / h + 1e-9))
    ax = np.arange(-k, k + 1) * h
    mesh = np.meshgrid(*([ax] * N), indexing="ij")
    r2 = sum(m**2 for m in mesh)
    return (r2 <= radius**2 * (1 + 1e-12)).astype(float)


def _lattice(g: Grid, stride: int) -> tuple:
    start = g.origin_index[0] % stride
    return tuple(slice(start, None, stride) for _ in range(g.N))


def concentration_function(dens: np.ndarray, g: Grid, radii: Sequence[float], stride: int = 4):
    """``Q(r) = max_xi nu(B_r(xi))`` over lattice centers, with the maximizing centers."""
    lat = _lattice(g, stride)
    pts = g.points()[lat]
    qs, cs = [], []
    prev = 0.0
    total = float(dens.sum())
    for r in radii:
        ball = fftconvolve(dens, _disk(r, g.h, g.N), mode="same")[lat]
        idx = np.unravel_index(int(np.argmax(ball)), ball.shape)
        q = min(max(float(ball[idx]), prev), total)
        qs.append(q)
        cs.append([float(c) for c in pts[idx]])
        prev = q
    return qs, cs


def concentration_trace(trajectory: Sequence, V, p: float, alpha: Optional[float] = None,
                        r_ladder: Optional[Sequence[float]] = None, stride: int = 4, W=None,
                        threshold: float = 0.9, vanish: float = 0.1,
                        center_bound: Optional[float] = None,
                        late_fraction: float = 0.5) -> ConcentrationTrace:
    """Concentration function of the measures ``nu`` along a trajectory and a trichotomy label.

    ``trajectory`` holds :class:`NehariState` snapshots (those without a field
    are skipped) or bare fields. The label looks at the late part of the
    trajectory: ``concentration`` when every late snapshot has ``Q(r) >=
    threshold * nu_total`` for some ladder radius with its maximizing center
    inside ``|xi| <= center_bound`` (default ``R/4``); ``vanishing`` when
    ``Q(max r) <= vanish * nu_total`` there; ``dichotomy`` otherwise.
    """
    alpha = default_alpha(p) if alpha is None else alpha
    fields = []
    for item in trajectory:
        if isinstance(item, ScalarField):
            fields.append((len(fields), item))
        elif item.u is not None:
            fields.append((item.iteration, item.u))
    if not fields:
        raise ValueError("trajectory holds no fields")
    g = fields[0][1].grid
    radii = list(r_ladder) if r_ladder is not None else [g.R / 16, g.R / 8, g.R / 4, g.R / 2]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radius ladder must be increasing")
    bound = g.R / 4 if center_bound is None else center_bound
    its, totals, Q, centers = [], [], [], []
    for it, u in fields:
        dens = nu_density(u, V, p, alpha, W)
        qs, cs = concentration_function(dens, g, radii, stride)
        its.append(it)
        totals.append(float(dens.sum()))
        Q.append(qs)
        centers.append(cs)
    late = range(int(len(fields) * (1 - late_fraction)), len(fields))
    late = late if len(late) else range(len(fields) - 1, len(fields))
    concentrated = True
    max_center = 0.0
    for k in late:
        hits = [j for j, q in enumerate(Q[k]) if q >= threshold * totals[k]]
        if not hits:
            concentrated = False
            break
        c = float(np.linalg.norm(centers[k][hits[0]]))
        max_center = max(max_center, c)
        if c > bound:
            concentrated = False
    if concentrated:
        label = "concentration"
    elif all(Q[k][-1] <= vanish * totals[k] for k in late):
        label = "vanishing"
    else:
        label = "dichotomy"
    details = {"alpha": alpha, "threshold": threshold, "vanish": vanish, "center_bound": bound,
               "late_snapshots": len(late), "max_late_center": max_center, "stride": stride}
    return ConcentrationTrace(radii, its, totals, Q, centers, label, details)
