"""Two-dimensional exterior eigenvalue for smooth convex planar sets.

The exterior of a convex set is parametrised by parallel coordinates
``(s, t) -> gamma(s) + t n(s)`` with ``s`` the arclength and ``t`` the
distance.  The area element is ``F ds dt`` with ``F = 1 + t kappa(s)`` and

    Q[u] = int int (|d_s u|^2 / F + |d_t u|^2 F) ds dt + alpha int |u(s, 0)|^2 ds
    ||u||^2 = int int |u|^2 F ds dt.

Both forms are discretised with bilinear elements, periodic in ``s``, on
``[0, T]`` in ``t`` with Dirichlet (upper bound) or Neumann closure at ``T``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh, splu

from . import ball
from .effective1d import graded_mesh, refine
from .errors import ConvexityError, DomainError, GridError, SolverError
from .geometry import CONVEXITY_TOL, Curve2D, curve_metrics

GAUSS_POINTS = 3
RESIDUAL_TOL = 1e-8
MAX_SHIFT_RETRIES = 3
CSV_COLUMNS = ("n_s", "n_t", "T", "outer_bc", "lambda", "residual", "iterations")


@dataclass(frozen=True)
class GridConfig:
    """One discretisation.  ``T=None`` means ``10 / k`` for the disk of equal perimeter."""

    n_s: int = 256
    n_t: int = 400
    T: float | None = None
    outer_bc: str = "dirichlet"
    t_mesh: tuple | None = None  # explicit nodes override n_t and T

    def __post_init__(self):
        if self.n_s < 3 or self.n_t < 2:
            raise DomainError("need n_s >= 3 and n_t >= 2")
        if self.outer_bc not in ("dirichlet", "neumann"):
            raise DomainError(f"outer_bc must be 'dirichlet' or 'neumann', got {self.outer_bc!r}")
        if self.T is not None and not self.T > 0:
            raise DomainError("T must be positive")


@dataclass(frozen=True)
class ParallelGrid:
    curve: Curve2D
    s_nodes: np.ndarray = field(repr=False)
    t_nodes: np.ndarray = field(repr=False)
    kappa_nodes: np.ndarray = field(repr=False)
    perimeter: float

    @property
    def n_s(self):
        return self.s_nodes.size

    @property
    def n_t(self):
        return self.t_nodes.size - 1

    @property
    def F(self):
        return 1.0 + np.multiply.outer(self.kappa_nodes, self.t_nodes)


@dataclass(frozen=True)
class SparsePair:
    A: sp.csr_matrix = field(repr=False)
    B: sp.csr_matrix = field(repr=False)
    grid: ParallelGrid
    alpha: float
    outer_bc: str

    @property
    def n_free_t(self):
        return self.grid.n_t + (1 if self.outer_bc == "neumann" else 0)


@dataclass(frozen=True)
class Eigenpair:
    eigenvalue: float
    vector: np.ndarray = field(repr=False)
    iterations: int
    residual: float
    shift: float


@dataclass(frozen=True)
class LadderConfig:
    n_s: int = 256
    n_t: int = 400
    T: float | None = None
    T_factors: tuple = (1.0, 1.5)
    outer_bcs: tuple = ("dirichlet", "neumann")


@dataclass(frozen=True)
class ValidationResult:
    lambda_dirichlet: float
    lambda_neumann: float
    refinement_table: list
    lambda_extrapolated: float
    discretization_error: float

    @property
    def bracket(self):
        """Heuristic interval for the exact value (the lower end is not rigorous)."""
        lower = min(self.lambda_neumann, self.lambda_extrapolated) - self.discretization_error
        return lower, self.lambda_dirichlet

    def to_csv(self, fh=None):
        out = fh if fh is not None else io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.refinement_table:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        return out.getvalue() if fh is None else None


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


# ---------------------------------------------------------------------------


def _default_T(curve, alpha):
    R_eq = curve.perimeter / (2.0 * math.pi)
    k = ball.solve(2, R_eq, alpha).k
    return 10.0 / max(k, 1e-12)


def _default_t_mesh(curve, alpha, n_t, T, kappa_max):
    scale = min(1.0 / abs(alpha), 1.0 / kappa_max if kappa_max > 0 else math.inf, T)
    return graded_mesh(T, n_t, h0=scale / 16.0)


def extend_mesh(mesh, T_new):
    """Append cells growing like the last one until ``T_new`` is reached."""
    if T_new <= mesh[-1] * (1.0 + 1e-12):
        return mesh.copy()
    h = mesh[-1] - mesh[-2]
    ratio = h / (mesh[-2] - mesh[-3]) if mesh.size > 2 else 1.0
    extra = []
    t = mesh[-1]
    while t < T_new:
        h *= ratio
        t += h
        extra.append(t)
    extra = np.array(extra)
    # stretch the appended part so it ends exactly at T_new
    start = mesh[-1]
    extra = start + (extra - start) * (T_new - start) / (extra[-1] - start)
    return np.concatenate([mesh, extra])


def build_grid(curve: Curve2D, alpha: float, cfg: GridConfig = GridConfig()) -> ParallelGrid:
    metrics = curve_metrics(curve)
    if metrics.min_curvature < -CONVEXITY_TOL:
        raise ConvexityError(f"curve is not convex: min curvature {metrics.min_curvature:.3e}")
    L = metrics.perimeter
    s = L * np.arange(cfg.n_s) / cfg.n_s
    kappa = curve.curvature(curve.theta_at_arclength(s))
    if cfg.t_mesh is not None:
        t = np.asarray(cfg.t_mesh, dtype=float)
    else:
        T = cfg.T if cfg.T is not None else _default_T(curve, alpha)
        t = _default_t_mesh(curve, alpha, cfg.n_t, T, metrics.max_curvature)
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise GridError("t nodes must start at 0 and increase")
    grid = ParallelGrid(curve, s, t, kappa, L)
    if np.min(grid.F) <= 0.0:
        raise GridError("metric factor F = 1 + t kappa is not positive")
    return grid


def assemble(curve: Curve2D, alpha: float, cfg: GridConfig = GridConfig()) -> SparsePair:
    """Bilinear-element stiffness and mass matrices in parallel coordinates."""
    if not alpha < 0:
        raise DomainError(f"coupling must be negative, got {alpha!r}")
    grid = build_grid(curve, alpha, cfg)
    ns, nt = grid.n_s, grid.n_t
    hs = grid.perimeter / ns
    t = grid.t_nodes
    ht = np.diff(t)

    x, gw = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    xi = 0.5 * (x + 1.0)
    wq = 0.5 * gw
    shape = np.stack([1.0 - xi, xi], axis=1)      # (q, a)
    dshape = np.array([-1.0, 1.0])

    s_q = (np.arange(ns)[:, None] + xi[None, :]) * hs          # (ns, p)
    kappa_q = curve.curvature(curve.theta_at_arclength(s_q.ravel())).reshape(ns, GAUSS_POINTS)
    t_q = t[:-1, None] + ht[:, None] * xi[None, :]               # (nt, q)
    F = 1.0 + kappa_q[:, None, :, None] * t_q[None, :, None, :]  # (ns, nt, p, q)
    if np.min(F) <= 0.0:
        raise GridError("metric factor F = 1 + t kappa is not positive")

    # local matrices indexed (i, j, a, b, c, d): node (a,b) against (c,d)
    G1 = np.einsum("ijpq,p,q,qb,qd->ijbd", 1.0 / F, wq, wq, shape, shape) * (ht / hs)[None, :, None, None]
    G2 = np.einsum("ijpq,p,q,pa,pc->ijac", F, wq, wq, shape, shape) * (hs / ht)[None, :, None, None]
    Gm = np.einsum("ijpq,p,q,pa,pc,qb,qd->ijabcd", F, wq, wq, shape, shape, shape, shape) * (hs * ht)[None, :, None, None, None, None]
    dd = np.outer(dshape, dshape)
    A_loc = (np.einsum("ac,ijbd->ijabcd", dd, G1) + np.einsum("ijac,bd->ijabcd", G2, dd))

    ii, jj = np.meshgrid(np.arange(ns), np.arange(nt), indexing="ij")
    node = np.empty((ns, nt, 2, 2), dtype=np.int64)
    for a in range(2):
        for b in range(2):
            node[:, :, a, b] = ((ii + a) % ns) * (nt + 1) + (jj + b)
    rows = np.broadcast_to(node[:, :, :, :, None, None], A_loc.shape).ravel()
    cols = np.broadcast_to(node[:, :, None, None, :, :], A_loc.shape).ravel()
    N = ns * (nt + 1)
    A = sp.coo_matrix((A_loc.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    B = sp.coo_matrix((Gm.ravel(), (rows, cols)), shape=(N, N)).tocsr()

    # boundary term alpha int |u(s,0)|^2 ds, exact for piecewise-linear traces
    b0 = np.arange(ns) * (nt + 1)
    b1 = ((np.arange(ns) + 1) % ns) * (nt + 1)
    r = np.concatenate([b0, b1, b0, b1])
    c = np.concatenate([b0, b1, b1, b0])
    v = alpha * hs * np.concatenate([np.full(ns, 1 / 3), np.full(ns, 1 / 3), np.full(ns, 1 / 6), np.full(ns, 1 / 6)])
    A = A + sp.coo_matrix((v, (r, c)), shape=(N, N)).tocsr()

    if cfg.outer_bc == "dirichlet":
        keep = np.ones(N, dtype=bool)
        keep[np.arange(ns) * (nt + 1) + nt] = False
        idx = np.flatnonzero(keep)
        A = A[idx][:, idx]
        B = B[idx][:, idx]
    A = ((A + A.T) * 0.5).tocsr()
    B = ((B + B.T) * 0.5).tocsr()
    return SparsePair(A, B, grid, alpha, cfg.outer_bc)


def default_shift(pair: SparsePair) -> float:
    """Shift safely below the spectrum: the trace inequality gives ``lambda >= -alpha^2``."""
    a = pair.alpha
    kappa_max = float(np.max(pair.grid.kappa_nodes))
    return min(1.2 * ball.asym_lambda(2, kappa_max, a), -1.2 * a * a)


class IndefiniteShift(SolverError):
    """The shifted operator has a non-positive direction: the shift is too high."""


def pcg(op, b, diag, tol=1e-12, max_iter=20000):
    """Jacobi-preconditioned conjugate gradients that refuses indefinite operators."""
    x = np.zeros_like(b)
    r = b.copy()
    z = r / diag
    p = z.copy()
    rz = r @ z
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0
    for it in range(1, max_iter + 1):
        Ap = op @ p
        curv = p @ Ap
        if curv <= 0.0:
            raise IndefiniteShift("A - shift B is not positive definite")
        step = rz / curv
        x += step * p
        r -= step * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it
        z = r / diag
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"conjugate gradients did not converge in {max_iter} iterations")


def _inverse_iteration_cg(A, B, sigma, max_outer, tol):
    M = (A - sigma * B).tocsr()
    diag = M.diagonal()
    if np.any(diag <= 0.0):
        raise IndefiniteShift("A - shift B has a non-positive diagonal entry")
    vec = np.ones(A.shape[0])
    vec /= math.sqrt(vec @ (B @ vec))
    lam = float(vec @ (A @ vec))
    total = 0
    for _ in range(max_outer):
        Bv = B @ vec
        if np.linalg.norm(A @ vec - lam * Bv) / np.linalg.norm(Bv) <= tol * max(1.0, abs(lam)):
            break
        vec, its = pcg(M, Bv, diag)
        total += its
        vec /= math.sqrt(vec @ (B @ vec))
        lam = float(vec @ (A @ vec))
    return lam, vec, total, None


def _shift_invert_direct(A, B, sigma):
    n = A.shape[0]
    lu = splu((A - sigma * B).tocsc())
    calls = [0]

    def apply(v):
        calls[0] += 1
        return lu.solve(v)

    op = LinearOperator((n, n), matvec=apply, dtype=float)
    vals, vecs = eigsh(A, k=1, M=B, sigma=sigma, which="LM", OPinv=op, v0=np.ones(n), tol=1e-14)
    return float(vals[0]), vecs[:, 0], calls[0], lu


def lowest_eigenpair(pair: SparsePair, shift: float | None = None, linear_solver: str = "direct",
                     max_outer: int = 2000) -> Eigenpair:
    """Smallest generalized eigenpair by shifted inverse iteration.

    ``linear_solver="direct"`` factorises ``A - shift B`` once and runs
    shift-and-invert Lanczos on it; ``"cg"`` runs plain inverse iteration with
    Jacobi-preconditioned conjugate gradients (slow, for small grids).  If
    the shift turns out not to lie below the spectrum it is moved down and the
    solve repeated, at most ``MAX_SHIFT_RETRIES`` times.
    """
    if linear_solver not in ("direct", "cg"):
        raise DomainError(f"unknown linear solver {linear_solver!r}")
    sigma = default_shift(pair) if shift is None else float(shift)
    A, B = pair.A, pair.B
    for attempt in range(MAX_SHIFT_RETRIES + 1):
        try:
            if linear_solver == "direct":
                lam, vec, calls, lu = _shift_invert_direct(A, B, sigma)
            else:
                lam, vec, calls, lu = _inverse_iteration_cg(A, B, sigma, max_outer, RESIDUAL_TOL)
        except IndefiniteShift:
            lam = sigma
        else:
            if lam > sigma:
                break
        sigma = sigma - 2.0 * abs(lam - sigma) - 1.0 - abs(sigma)
    else:
        raise SolverError("shift stayed above the lowest eigenvalue after retries")
    # polish by inverse iteration with Rayleigh quotients on the same factorisation
    if lu is not None:
        for _ in range(5):
            Bv = B @ vec
            resid = np.linalg.norm(A @ vec - lam * Bv) / np.linalg.norm(Bv)
            if resid <= RESIDUAL_TOL * max(1.0, abs(lam)):
                break
            vec = lu.solve(Bv)
            calls += 1
            vec /= math.sqrt(vec @ (B @ vec))
            lam = float(vec @ (A @ vec))
    Bv = B @ vec
    resid = float(np.linalg.norm(A @ vec - lam * Bv) / np.linalg.norm(Bv))
    vec = vec / math.sqrt(vec @ Bv)
    if vec.sum() < 0:
        vec = -vec
    return Eigenpair(lam, vec, calls, resid, sigma)


def solve(curve: Curve2D, alpha: float, cfg: GridConfig = GridConfig()):
    pair = assemble(curve, alpha, cfg)
    return pair, lowest_eigenpair(pair)


def lambda1_exterior_2d(curve: Curve2D, alpha: float, cfg: LadderConfig = LadderConfig()) -> ValidationResult:
    """Refinement ladder: two nested grids x truncation lengths x outer conditions.

    The finer grid halves both mesh widths of the coarse one and longer
    truncations extend the same t-mesh, so all Dirichlet rungs are nested
    trial spaces.
    """
    if not alpha < 0:
        raise DomainError(f"coupling must be negative, got {alpha!r}")
    T = cfg.T if cfg.T is not None else _default_T(curve, alpha)
    kmax = curve_metrics(curve).max_curvature
    coarse = _default_t_mesh(curve, alpha, max(cfg.n_t // 2, 2), T, kmax)
    rows = []
    best = {}
    for level, n_s in ((0, max(cfg.n_s // 2, 3)), (1, cfg.n_s)):
        for factor in sorted(cfg.T_factors):
            mesh = extend_mesh(coarse, factor * T)
            if level == 1:
                mesh = refine(mesh)
            for bc in cfg.outer_bcs:
                gcfg = GridConfig(n_s=n_s, n_t=mesh.size - 1, outer_bc=bc, t_mesh=tuple(mesh))
                _, eig = solve(curve, alpha, gcfg)
                rows.append({"n_s": n_s, "n_t": mesh.size - 1, "T": float(mesh[-1]), "outer_bc": bc,
                             "lambda": eig.eigenvalue, "residual": eig.residual, "iterations": eig.iterations})
                best[(level, factor, bc)] = eig.eigenvalue
    fmax = max(cfg.T_factors)
    lam_d = best.get((1, fmax, "dirichlet"), math.nan)
    lam_n = best.get((1, fmax, "neumann"), math.nan)
    lam_dc = best.get((0, fmax, "dirichlet"), math.nan)
    err = abs(lam_dc - lam_d) / 3.0
    return ValidationResult(lam_d, lam_n, rows, lam_d - err, err)


def symmetry_defect(pair: SparsePair, vector: np.ndarray) -> float:
    """Mass-norm defect of the eigenvector under the reflection ``s -> -s``.

    Meaningful for curves symmetric about the line through ``gamma(0)`` and
    the centre (e.g. ellipses with ``gamma(0) = (a, 0)``).
    """
    ns = pair.grid.n_s
    m = pair.n_free_t
    v = vector.reshape(ns, m)
    mirrored = v[(-np.arange(ns)) % ns]
    diff = (v - mirrored).ravel()
    return float(math.sqrt(abs(diff @ (pair.B @ diff)) / (vector @ (pair.B @ vector))))


def with_outer(cfg: GridConfig, bc: str) -> GridConfig:
    return replace(cfg, outer_bc=bc)
