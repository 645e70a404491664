"""Numerical algebraic geometry on batches of paths.

Polynomials are compiled into exponent/coefficient arrays and evaluated on many
points at once with numpy.  A :class:`System` maps unknowns U (B, n) and
parameters Q (B, nq) to values and Jacobians; homotopies wrap systems and the
tracker follows all paths of a batch together, each with its own step size.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .ratpoly import MPoly

log = logging.getLogger(__name__)

REGULAR, SINGULAR, DIVERGED, FAILED = "regular", "singular", "diverged", "failed"


class NumericError(RuntimeError):
    pass


class SizeError(NumericError):
    """A start system would need too many paths."""


class SeedError(NumericError):
    pass


class IndeterminateError(NumericError):
    """Every Euler-characteristic trial was degenerate."""


def complex_normal(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# -- compiled polynomials -------------------------------------------------------

class CompiledPolys:
    """A list of polynomials over a fixed variable list, evaluated in batch."""

    def __init__(self, polys: Sequence[MPoly], vars: Sequence[str]):
        self.vars = list(vars)
        self.k = len(polys)
        exps, coefs, rows = [], [], []
        for i, p in enumerate(polys):
            q = p.with_vars(self.vars + [v for v in p.vars if v not in self.vars])
            if len(q.vars) != len(self.vars):
                missing = [v for v in q.used_vars() if v not in self.vars]
                if missing:
                    raise NumericError(f"polynomial uses unknown symbols {missing}")
                q = q.with_vars(self.vars)
            for e, c in q.terms.items():
                if any(k < 0 for k in e):
                    raise NumericError("Laurent polynomials cannot be compiled; shift them first")
                exps.append(e)
                coefs.append(complex(c))
                rows.append(i)
        V = len(self.vars)
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), V)
        self.coefs = np.array(coefs, dtype=complex)
        self.rows = np.array(rows, dtype=np.int64)
        T = len(coefs)
        self.S = np.zeros((T, self.k), dtype=complex)
        self.S[np.arange(T), self.rows] = self.coefs
        self.Sabs = np.abs(self.S)
        self.maxdeg = self.exps.max(axis=0) if T else np.zeros(V, dtype=np.int64)
        self.degrees = [int(p.degree()) if not p.is_zero() else 0 for p in polys]

    def degrees_in(self, idx: Sequence[int]) -> list[int]:
        out = [0] * self.k
        if len(self.coefs):
            d = self.exps[:, list(idx)].sum(axis=1)
            for r, dv in zip(self.rows, d):
                out[r] = max(out[r], int(dv))
        return out

    def evaluate(self, X: np.ndarray, jac: bool = True):
        """Values (B, k), Jacobian (B, k, V) or None, and term magnitudes (B, k)."""
        B, V = X.shape
        T = len(self.coefs)
        if T == 0:
            z = np.zeros((B, self.k), dtype=complex)
            return z, (np.zeros((B, self.k, V), dtype=complex) if jac else None), np.zeros((B, self.k))
        factors = []
        powtabs = []
        for v in range(V):
            D = int(self.maxdeg[v])
            if D == 0:
                factors.append(None)
                powtabs.append(None)
                continue
            P = np.ones((B, D + 1), dtype=complex)
            for d in range(1, D + 1):
                P[:, d] = P[:, d - 1] * X[:, v]
            powtabs.append(P)
            factors.append(P[:, self.exps[:, v]])
        prefix = [np.ones((B, T), dtype=complex)]
        for v in range(V):
            prefix.append(prefix[-1] if factors[v] is None else prefix[-1] * factors[v])
        M = prefix[-1]
        vals = M @ self.S
        mags = np.abs(M) @ self.Sabs
        J = None
        if jac:
            J = np.zeros((B, self.k, V), dtype=complex)
            suffix = np.ones((B, T), dtype=complex)
            for v in range(V - 1, -1, -1):
                if factors[v] is not None:
                    e = self.exps[:, v]
                    dfac = powtabs[v][:, np.maximum(e - 1, 0)] * e
                    J[:, :, v] = (prefix[v] * suffix * dfac) @ self.S
                    suffix = suffix * factors[v]
        return vals, J, mags


# -- systems ------------------------------------------------------------------

class System:
    """Interface: n unknowns, nq parameters, n_eq equations."""

    n: int
    nq: int
    n_eq: int

    def evaluate(self, U: np.ndarray, Q: np.ndarray, jac_q: bool = False):
        raise NotImplementedError

    def residual(self, U: np.ndarray, Q: np.ndarray) -> np.ndarray:
        """Relative residual max_i |f_i| / max(1, sum of term magnitudes of f_i)."""
        raise NotImplementedError

    def degrees(self) -> list[int]:
        raise NotImplementedError


class PolySystem(System):
    def __init__(self, polys: Sequence[MPoly], unknowns: Sequence[str], params: Sequence[str] = ()):
        self.unknowns = list(unknowns)
        self.params = list(params)
        self.polys = list(polys)
        self.comp = CompiledPolys(self.polys, self.unknowns + self.params)
        self.n = len(self.unknowns)
        self.nq = len(self.params)
        self.n_eq = len(self.polys)

    def _X(self, U, Q):
        if self.nq == 0:
            return U
        return np.concatenate([U, Q], axis=1)

    def evaluate(self, U, Q, jac_q=False):
        vals, J, _ = self.comp.evaluate(self._X(U, Q), jac=True)
        Ju = J[:, :, : self.n]
        Jq = J[:, :, self.n:] if jac_q else None
        return vals, Ju, Jq

    def residual(self, U, Q):
        vals, _, mags = self.comp.evaluate(self._X(U, Q), jac=False)
        return np.max(np.abs(vals) / np.maximum(1.0, mags), axis=1)

    def degrees(self):
        return self.comp.degrees_in(range(self.n))


class SquaredSystem(System):
    """Random square-up C @ f of an overdetermined system (C = [I | R])."""

    def __init__(self, base: System, rng: np.random.Generator):
        self.base = base
        self.n, self.nq = base.n, base.nq
        degs = base.degrees()
        order = sorted(range(base.n_eq), key=lambda i: -degs[i])
        m = base.n_eq
        C = np.zeros((self.n, m), dtype=complex)
        for r in range(self.n):
            C[r, order[r]] = 1.0
            for j in order[self.n:]:
                C[r, j] = complex_normal(rng)
        self.C = C
        self.n_eq = self.n
        self._degs = [max([degs[order[r]]] + [degs[j] for j in order[self.n:]]) for r in range(self.n)]

    def evaluate(self, U, Q, jac_q=False):
        F, Ju, Jq = self.base.evaluate(U, Q, jac_q)
        F2 = F @ self.C.T
        Ju2 = np.einsum("rm,bmn->brn", self.C, Ju)
        Jq2 = np.einsum("rm,bmn->brn", self.C, Jq) if jac_q else None
        return F2, Ju2, Jq2

    def residual(self, U, Q):
        return self.base.residual(U, Q)

    def degrees(self):
        return list(self._degs)


def square_up(system: System, rng: np.random.Generator) -> System:
    if system.n_eq == system.n:
        return system
    if system.n_eq < system.n:
        raise NumericError("underdetermined system")
    return SquaredSystem(system, rng)


class LineSystem(System):
    """Restrict a system in (x; z) to x = x0 + N w and z = a + tau*b.

    Unknowns are (w, tau); parameters are the line data (a, b).
    """

    def __init__(self, base: PolySystem, x0: np.ndarray | None = None, N: np.ndarray | None = None):
        self.base = base
        nx, m = base.n, base.nq
        self.x0 = np.zeros(nx, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex)
        self.N = np.eye(nx, dtype=complex) if N is None else np.asarray(N, dtype=complex)
        self.nw = self.N.shape[1]
        self.m = m
        self.n = self.nw + 1
        self.nq = 2 * m
        self.n_eq = base.n_eq

    def _lift(self, U, Q):
        W, tau = U[:, : self.nw], U[:, self.nw]
        X = self.x0[None, :] + W @ self.N.T
        a, b = Q[:, : self.m], Q[:, self.m:]
        Z = a + tau[:, None] * b
        return X, Z, tau, b

    def evaluate(self, U, Q, jac_q=False):
        X, Z, tau, b = self._lift(U, Q)
        F, Jx, Jz = self.base.evaluate(X, Z, jac_q=True)
        Jw = Jx @ self.N
        Jtau = np.einsum("bkm,bm->bk", Jz, b)
        Ju = np.concatenate([Jw, Jtau[:, :, None]], axis=2)
        Jq = np.concatenate([Jz, Jz * tau[:, None, None]], axis=2) if jac_q else None
        return F, Ju, Jq

    def residual(self, U, Q):
        X, Z, _, _ = self._lift(U, Q)
        return self.base.residual(X, Z)

    def degrees(self):
        return self.base.comp.degrees_in(range(self.base.n + self.base.nq))

    def points(self, U, Q):
        X, Z, _, _ = self._lift(U, Q)
        return X, Z


# -- homotopies ----------------------------------------------------------------

class Homotopy:
    n: int

    def eval(self, U, s, rows):
        """H (B, n), dH/dU (B, n, n), dH/ds (B, n) at per-row times s."""
        raise NotImplementedError


class ParameterHomotopy(Homotopy):
    """H(u, s) = F(u; (1 - s) q0 + s q1), row-wise parameters."""

    def __init__(self, system: System, Q0: np.ndarray, Q1: np.ndarray):
        self.system = system
        self.n = system.n
        self.Q0 = np.atleast_2d(np.asarray(Q0, dtype=complex))
        self.Q1 = np.atleast_2d(np.asarray(Q1, dtype=complex))

    def eval(self, U, s, rows):
        q0 = self.Q0[rows] if self.Q0.shape[0] > 1 else np.repeat(self.Q0, len(rows), axis=0)
        q1 = self.Q1[rows] if self.Q1.shape[0] > 1 else np.repeat(self.Q1, len(rows), axis=0)
        dQ = q1 - q0
        Q = q0 + s[:, None] * dQ
        F, Ju, Jq = self.system.evaluate(U, Q, jac_q=True)
        Hs = (Jq @ dQ[:, :, None])[:, :, 0]
        return F, Ju, Hs


class TotalDegreeHomotopy(Homotopy):
    """H(u, s) = (1 - s) * gamma * (u_i^d_i - 1) + s * F(u; q)."""

    def __init__(self, system: System, q: np.ndarray, gamma: complex, degrees: Sequence[int]):
        self.system = system
        self.n = system.n
        self.q = np.asarray(q, dtype=complex).reshape(1, -1)
        self.gamma = gamma
        self.d = np.array(degrees, dtype=np.int64)

    def start_solutions(self) -> np.ndarray:
        roots = [np.exp(2j * np.pi * np.arange(d) / d) for d in self.d]
        grid = np.meshgrid(*roots, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def eval(self, U, s, rows):
        Q = np.repeat(self.q, U.shape[0], axis=0)
        F, Ju, _ = self.system.evaluate(U, Q)
        G = U ** self.d[None, :] - 1
        dG = self.d[None, :] * U ** np.maximum(self.d - 1, 0)[None, :]
        a = (1 - s)[:, None]
        H = a * self.gamma * G + s[:, None] * F
        Hu = s[:, None, None] * Ju
        idx = np.arange(self.n)
        Hu[:, idx, idx] += a * self.gamma * dG
        Hs = F - self.gamma * G
        return H, Hu, Hs


# -- tracker -------------------------------------------------------------------

@dataclass
class TrackerConfig:
    step_init: float = 0.05
    step_max: float = 0.1
    min_step: float = 1e-10
    max_steps: int = 4000
    corrector_tol: float = 1e-9
    newton_tol: float = 1e-13
    max_norm: float = 1e8
    seed: int = 0
    gamma: complex | None = None
    threads: int = 1

    def __post_init__(self):
        if self.step_init <= 0 or self.min_step <= 0 or self.corrector_tol <= 0:
            raise ValueError("tolerances must be positive")

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def gamma_value(self) -> complex:
        if self.gamma is not None:
            return complex(self.gamma)
        theta = self.rng(7919).uniform(0, 2 * np.pi)
        return complex(np.exp(1j * theta))


@dataclass
class TrackedPoint:
    coords: np.ndarray
    residual: float
    sigma_min: float
    sigma_max: float
    status: str

    @property
    def is_regular(self) -> bool:
        return self.status == REGULAR


@dataclass
class TrackResult:
    X: np.ndarray
    status: np.ndarray
    residual: np.ndarray
    sigma_min: np.ndarray
    sigma_max: np.ndarray

    def __len__(self):
        return self.X.shape[0]

    @property
    def regular(self) -> np.ndarray:
        return self.status == REGULAR

    def points(self) -> list[TrackedPoint]:
        return [
            TrackedPoint(self.X[i].copy(), float(self.residual[i]), float(self.sigma_min[i]), float(self.sigma_max[i]), str(self.status[i]))
            for i in range(len(self))
        ]


def _solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched A x = b with a least-squares fallback for singular rows."""
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(b)
        for i in range(A.shape[0]):
            try:
                out[i] = np.linalg.solve(A[i], b[i])
            except np.linalg.LinAlgError:
                out[i] = np.linalg.lstsq(A[i], b[i], rcond=None)[0]
        return out


def _norm(X: np.ndarray) -> np.ndarray:
    return np.max(np.abs(X), axis=1) if X.shape[1] else np.zeros(X.shape[0])


def _track_batch(hom: Homotopy, X0: np.ndarray, cfg: TrackerConfig):
    B, n = X0.shape
    X = np.array(X0, dtype=complex)
    s = np.zeros(B)
    h = np.full(B, cfg.step_init)
    streak = np.zeros(B, dtype=np.int64)
    state = np.zeros(B, dtype=np.int64)  # 0 active, 1 reached, 2 failed, 3 diverged
    rows_all = np.arange(B)
    for _ in range(cfg.max_steps):
        act = np.nonzero(state == 0)[0]
        if not len(act):
            break
        x, sa = X[act], s[act]
        ha = np.minimum(h[act], 1.0 - sa)

        def deriv(xx, ss):
            _, Hu, Hs = hom.eval(xx, ss, rows_all[act])
            return _solve(Hu, -Hs)

        k1 = deriv(x, sa)
        k2 = deriv(x + 0.5 * ha[:, None] * k1, sa + 0.5 * ha)
        k3 = deriv(x + 0.5 * ha[:, None] * k2, sa + 0.5 * ha)
        k4 = deriv(x + ha[:, None] * k3, sa + ha)
        xp = x + (ha / 6)[:, None] * (k1 + 2 * k2 + 2 * k3 + k4)
        s1 = sa + ha
        ok = np.isfinite(xp).all(axis=1)
        xc = np.where(ok[:, None], xp, x)
        conv = np.zeros(len(act), dtype=bool)
        first = None
        for it in range(3):
            H, Hu, _ = hom.eval(xc, s1, rows_all[act])
            dx = _solve(Hu, -H)
            dx = np.where(np.isfinite(dx), dx, np.inf)
            step = _norm(dx)
            if first is None:
                first = step
            xc = xc + np.where(np.isfinite(dx), dx, 0)
            conv |= step < cfg.corrector_tol * (1 + _norm(xc))
            if conv.all():
                break
        scale = 1 + _norm(x)
        good = ok & conv & (first < 0.25 * scale)
        # accept
        gi = act[good]
        X[gi] = xc[good]
        s[gi] = s1[good]
        streak[gi] += 1
        grow = gi[streak[gi] >= 3]
        h[grow] = np.minimum(2 * h[grow], cfg.step_max)
        streak[grow] = 0
        state[gi[s[gi] >= 1.0 - 1e-15]] = 1
        # reject
        bi = act[~good]
        h[bi] = 0.5 * ha[~good]
        streak[bi] = 0
        state[bi[h[bi] < cfg.min_step]] = 2
        big = act[_norm(X[act]) > cfg.max_norm]
        state[big] = 3
    state[state == 0] = 2
    return X, state


def _refine(system: System, Q: np.ndarray, X: np.ndarray, cfg: TrackerConfig, iters: int = 8) -> np.ndarray:
    X = X.copy()
    for _ in range(iters):
        F, Ju, _ = system.evaluate(X, Q)
        dx = _solve(Ju, -F)
        dx = np.where(np.isfinite(dx), dx, 0)
        X = X + dx
        if np.all(_norm(dx) < cfg.newton_tol * (1 + _norm(X))):
            break
    return X


def classify(system: System, X: np.ndarray, Q: np.ndarray, cfg: TrackerConfig, refine: bool = True):
    """Newton-refine endpoints and split them into regular / singular / diverged."""
    Q = np.repeat(np.atleast_2d(Q), X.shape[0], axis=0) if np.atleast_2d(Q).shape[0] == 1 else Q
    finite = np.isfinite(X).all(axis=1) & (_norm(np.nan_to_num(X)) < cfg.max_norm)
    Xf = np.where(finite[:, None], X, 0)
    if refine and len(Xf):
        with np.errstate(all="ignore"):
            Xf = _refine(system, Q, Xf, cfg)
    B = Xf.shape[0]
    with np.errstate(all="ignore"):
        res = system.residual(Xf, Q) if B else np.zeros(0)
        Ju = system.evaluate(Xf, Q)[1] if B else np.zeros((0, system.n, system.n))
    good = np.isfinite(Ju).reshape(B, -1).all(axis=1) & np.isfinite(Xf).all(axis=1)
    smax = np.zeros(B)
    smin = np.zeros(B)
    if good.any():
        sv = np.linalg.svd(Ju[good], compute_uv=False)
        smax[good], smin[good] = sv[:, 0], sv[:, -1]
    finite &= good
    status = np.where(
        ~finite | ~np.isfinite(res) | (_norm(Xf) > cfg.max_norm),
        DIVERGED,
        np.where((res < 1e-10) & (smin > 1e-8 * smax), REGULAR, SINGULAR),
    ).astype(object)
    return TrackResult(Xf, status, res, smin, smax)


def track(hom: Homotopy, X0: np.ndarray, cfg: TrackerConfig):
    """Track every start point from s = 0 to s = 1; returns endpoints and tracker states."""
    X0 = np.atleast_2d(np.asarray(X0, dtype=complex))
    if X0.shape[0] == 0:
        return X0, np.zeros(0, dtype=np.int64)
    if cfg.threads > 1 and X0.shape[0] >= 4 * cfg.threads:
        chunks = np.array_split(np.arange(X0.shape[0]), cfg.threads)

        def work(idx):
            sub = _RowView(hom, idx)
            with np.errstate(all="ignore"):
                return _track_batch(sub, X0[idx], cfg)

        with ThreadPoolExecutor(cfg.threads) as pool:
            parts = list(pool.map(work, chunks))
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    # diverging paths overflow by design; their state records the failure
    with np.errstate(all="ignore"):
        return _track_batch(hom, X0, cfg)


class _RowView(Homotopy):
    """Restrict a row-parameterized homotopy to a subset of its rows."""

    def __init__(self, hom: Homotopy, idx: np.ndarray):
        self.hom, self.idx, self.n = hom, idx, hom.n

    def eval(self, U, s, rows):
        return self.hom.eval(U, s, self.idx[rows])


def track_parameter(system: System, X0, Q0, Q1, cfg: TrackerConfig) -> TrackResult:
    """Parameter homotopy q0 -> q1 (row-wise or shared), endpoints classified at q1."""
    X0 = np.atleast_2d(np.asarray(X0, dtype=complex))
    hom = ParameterHomotopy(system, Q0, Q1)
    X, state = track(hom, X0, cfg)
    Q1 = np.atleast_2d(np.asarray(Q1, dtype=complex))
    Qend = Q1 if Q1.shape[0] == X.shape[0] else np.repeat(Q1, X.shape[0], axis=0)
    res = classify(system, X, Qend, cfg)
    res.status[(state == 2) & (res.status == REGULAR) & (res.residual > 1e-12)] = FAILED
    res.status[state == 3] = DIVERGED
    return res


def bezout_number(degrees: Sequence[int]) -> int:
    return math.prod(max(d, 1) for d in degrees)


def solve_total_degree(system: System, q=None, cfg: TrackerConfig | None = None, max_paths: int = 100_000) -> TrackResult:
    """All isolated solutions via the gamma-trick total-degree homotopy; regular ones deduplicated."""
    cfg = cfg or TrackerConfig()
    if system.n_eq != system.n:
        raise NumericError("total-degree homotopy needs a square system")
    degs = system.degrees()
    if any(d == 0 for d in degs):
        raise NumericError("an equation has degree 0 in the unknowns")
    nb = bezout_number(degs)
    if nb > max_paths:
        raise SizeError(f"Bezout number {nb} exceeds the limit {max_paths}")
    q = np.zeros(system.nq, dtype=complex) if q is None else np.asarray(q, dtype=complex)
    hom = TotalDegreeHomotopy(system, q, cfg.gamma_value(), degs)
    X0 = hom.start_solutions()
    X, state = track(hom, X0, cfg)
    res = classify(system, X, q.reshape(1, -1), cfg)
    res.status[state == 3] = DIVERGED
    return res


def dedup(points: np.ndarray, tol: float = 1e-6) -> list[int]:
    """Indices of representatives under relative max-norm clustering."""
    reps: list[int] = []
    if len(points) == 0:
        return reps
    acc = np.zeros((0, points.shape[1]), dtype=complex)
    for i, p in enumerate(points):
        if len(acc):
            d = np.max(np.abs(acc - p[None, :]), axis=1)
            scale = np.maximum(1.0, np.maximum(np.max(np.abs(acc), axis=1), np.max(np.abs(p))))
            if np.any(d <= tol * scale):
                continue
        reps.append(i)
        acc = np.vstack([acc, p[None, :]])
    return reps


def match(points: np.ndarray, ref: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Index into ``ref`` of the point matching each row of ``points`` (-1 if none)."""
    out = np.full(len(points), -1, dtype=np.int64)
    if len(ref) == 0:
        return out
    for i, p in enumerate(points):
        d = np.max(np.abs(ref - p[None, :]), axis=1)
        scale = np.maximum(1.0, np.maximum(np.max(np.abs(ref), axis=1), np.max(np.abs(p))))
        j = int(np.argmin(d / scale))
        if d[j] <= tol * scale[j]:
            out[i] = j
    return out


# -- monodromy ---------------------------------------------------------------

@dataclass
class MonodromyResult:
    points: np.ndarray
    q0: np.ndarray
    orbits: list[list[int]]
    loops: int


class _DSU:
    def __init__(self):
        self.p: list[int] = []

    def add(self) -> int:
        self.p.append(len(self.p))
        return len(self.p) - 1

    def find(self, a: int) -> int:
        while self.p[a] != a:
            self.p[a] = self.p[self.p[a]]
            a = self.p[a]
        return a

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)


def monodromy_solve(
    system: System,
    seeds: np.ndarray,
    q0: np.ndarray,
    cfg: TrackerConfig | None = None,
    loops: int = 5,
    target: int | None = None,
    moving: np.ndarray | None = None,
    random_params: Callable[[np.random.Generator], np.ndarray] | None = None,
    accept: Callable[[np.ndarray], np.ndarray] | None = None,
    max_loops: int = 200,
    group: bool = False,
) -> MonodromyResult:
    """Close a seed set under monodromy loops q0 -> q1 -> q2 -> q0.

    Stops after ``loops`` consecutive loops without new solutions or when
    ``target`` solutions are known.  ``moving`` masks which parameters are
    randomized; ``accept`` filters endpoints (e.g. torus points only).  With
    ``group`` a loop that merges two orbits also counts as productive.
    """
    cfg = cfg or TrackerConfig()
    rng = cfg.rng(104729)
    q0 = np.asarray(q0, dtype=complex)
    seeds = np.atleast_2d(np.asarray(seeds, dtype=complex))
    base = classify(system, seeds, q0.reshape(1, -1), cfg)
    keep = base.regular
    if accept is not None and keep.any():
        keep &= accept(base.X)
    if not keep.any():
        raise SeedError("no regular seed solution")
    sols = base.X[keep][dedup(base.X[keep])]
    dsu = _DSU()
    for _ in range(len(sols)):
        dsu.add()
    mask = np.ones(system.nq, dtype=bool) if moving is None else np.asarray(moving, dtype=bool)

    def rand_q():
        if random_params is not None:
            return random_params(rng)
        q = q0.copy()
        q[mask] = complex_normal(rng, int(mask.sum()))
        return q

    stale, count = 0, 0
    while stale < loops and count < max_loops:
        if target is not None and len(sols) >= target:
            break
        count += 1
        q1, q2 = rand_q(), rand_q()
        start = sols.copy()
        r1 = track_parameter(system, start, q0, q1, cfg)
        alive = np.nonzero(r1.regular)[0]
        r2 = track_parameter(system, r1.X[alive], q1, q2, cfg)
        alive2 = alive[r2.regular]
        r3 = track_parameter(system, r2.X[r2.regular], q2, q0, cfg)
        ends = r3.X[r3.regular]
        origin = alive2[r3.regular]
        if accept is not None and len(ends):
            ok = accept(ends)
            ends, origin = ends[ok], origin[ok]
        new = merged = 0
        for k in range(len(ends)):
            j = int(match(ends[k:k + 1], sols)[0])
            if j < 0:
                sols = np.vstack([sols, ends[k][None, :]])
                j = dsu.add()
                new += 1
            if dsu.find(int(origin[k])) != dsu.find(j):
                merged += 1
            dsu.union(int(origin[k]), j)
        stale = 0 if new or (group and merged) else stale + 1
        log.debug("monodromy loop %d: %d solutions (+%d)", count, len(sols), new)
    groups: dict[int, list[int]] = {}
    for i in range(len(sols)):
        groups.setdefault(dsu.find(i), []).append(i)
    return MonodromyResult(sols, q0, sorted(groups.values()), count)


# -- Euler characteristics ---------------------------------------------------

@dataclass
class EulerCharConfig:
    trials: int = 10
    seed: int = 0
    method: str = "monodromy"
    loops: int = 5
    tracker: TrackerConfig = field(default_factory=TrackerConfig)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.method not in ("monodromy", "total_degree"):
            raise ValueError(f"unknown method {self.method!r}")


def critical_equations(factors: Sequence[MPoly], vars: Sequence[str], mu: Sequence[str], nu: Sequence[str]) -> list[MPoly]:
    """sum_i mu_i x_j d_j f_i * prod_{l != i} f_l + nu_j * prod_l f_l, one per variable x_j."""
    prod_all = MPoly.const(1)
    for f in factors:
        prod_all = prod_all * f
    others = []
    for i in range(len(factors)):
        o = MPoly.const(1)
        for l, f in enumerate(factors):
            if l != i:
                o = o * f
        others.append(o)
    eqs = []
    for j, x in enumerate(vars):
        xv = MPoly.var(x)
        e = MPoly.var(nu[j]) * prod_all
        for i, f in enumerate(factors):
            e = e + MPoly.var(mu[i]) * xv * f.diff(x) * others[i]
        eqs.append(e)
    return eqs


class LogCriticalSystem(System):
    """Rational critical equations sum_i mu_i x_j d_j f_i / f_i + nu_j = 0.

    Evaluated directly from the supports of the factors, so the cost is that of
    the factors themselves rather than of the expanded polynomial equations.
    Parameters are (kin, mu, nu).
    """

    def __init__(self, factors: Sequence[MPoly], vars: Sequence[str], kin: Sequence[str]):
        self.vars, self.kin = list(vars), list(kin)
        self.r = len(factors)
        self.n = len(self.vars)
        self.nk = len(self.kin)
        self.nq = self.nk + self.r + self.n
        self.n_eq = self.n
        self.parts = []
        for f in factors:
            coeffs: dict[tuple[int, ...], MPoly] = {}
            xi = [f.vars.index(v) if v in f.vars else None for v in self.vars]
            rest = [v for v in f.vars if v not in self.vars]
            for e, c in f.terms.items():
                key = tuple(e[i] if i is not None else 0 for i in xi)
                mono = MPoly(tuple(f.vars), {tuple(0 if v in self.vars else k for v, k in zip(f.vars, e)): c})
                coeffs[key] = coeffs.get(key, MPoly()) + mono
            keys = sorted(coeffs)
            E = np.array(keys, dtype=np.int64).reshape(-1, self.n)
            comp = CompiledPolys([coeffs[k] for k in keys], self.kin)
            EE = (E[:, :, None] * E[:, None, :]).reshape(E.shape[0], -1).astype(complex)
            affine = None
            if all(coeffs[k].degree_in(self.kin) <= 1 for k in keys):
                # coefficients c = C0 + K @ C1 when they are affine in the parameters
                C0 = np.array([complex(coeffs[k].subs({v: 0 for v in self.kin}).constant_value()) for k in keys])
                C1 = np.array(
                    [[complex(coeffs[k].diff(v).constant_value()) if v in coeffs[k].vars else 0j for k in keys] for v in self.kin],
                    dtype=complex,
                ).reshape(self.nk, len(keys))
                affine = (C0, C1)
            self.parts.append((E, comp, bool(rest), EE, affine))

    def _factor(self, part, X, K, want_k):
        E, comp, has_kin, _, affine = part
        B = X.shape[0]
        m = np.ones((B, E.shape[0]), dtype=complex)
        for v in range(self.n):
            col = E[:, v]
            if col.any():
                m = m * X[:, v][:, None] ** col[None, :]
        if affine is not None:
            c = affine[0][None, :] + K @ affine[1]
            dc = np.broadcast_to(affine[1].T[None, :, :], (B, E.shape[0], self.nk)) if want_k else None
        else:
            c, dc, _ = comp.evaluate(K, jac=want_k and has_kin)
            if want_k and not has_kin:
                dc = np.zeros((B, E.shape[0], self.nk), dtype=complex)
        A = c * m
        return E, m, A, dc

    def evaluate(self, U, Q, jac_q=False):
        B = U.shape[0]
        X = U
        K = Q[:, : self.nk]
        mu = Q[:, self.nk: self.nk + self.r]
        nu = Q[:, self.nk + self.r:]
        F = nu.copy()
        Ju = np.zeros((B, self.n, self.n), dtype=complex)
        Jq = np.zeros((B, self.n, self.nq), dtype=complex) if jac_q else None
        with np.errstate(divide="ignore", invalid="ignore"):
            for i, part in enumerate(self.parts):
                E, m, A, dc = self._factor(part, X, K, jac_q)
                f = A.sum(axis=1)
                D = A @ E
                Kj = (A @ part[3]).reshape(B, self.n, self.n)
                g = D / f[:, None]
                dg = (Kj / f[:, None, None] - D[:, :, None] * D[:, None, :] / (f ** 2)[:, None, None]) / X[:, None, :]
                F += mu[:, i][:, None] * g
                Ju += mu[:, i][:, None, None] * dg
                if jac_q:
                    if self.nk:
                        dA = dc * m[:, :, None]
                        dD = np.swapaxes(np.swapaxes(dA, 1, 2) @ E, 1, 2)
                        df = dA.sum(axis=1)
                        Jq[:, :, : self.nk] += mu[:, i][:, None, None] * (
                            dD / f[:, None, None] - D[:, :, None] * df[:, None, :] / (f ** 2)[:, None, None]
                        )
                    Jq[:, :, self.nk + i] = g
            if jac_q:
                idx = np.arange(self.n)
                Jq[:, idx, self.nk + self.r + idx] = 1.0
        return F, Ju, Jq

    def residual(self, U, Q):
        K = Q[:, : self.nk]
        mu = Q[:, self.nk: self.nk + self.r]
        nu = Q[:, self.nk + self.r:]
        F = nu.copy()
        mags = np.abs(nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            for i, part in enumerate(self.parts):
                E, m, A, _ = self._factor(part, U, K, False)
                f = A.sum(axis=1)
                F += mu[:, i][:, None] * (A @ E) / f[:, None]
                mags += np.abs(mu[:, i])[:, None] * (np.abs(A) @ np.abs(E)) / np.abs(f)[:, None]
            out = np.max(np.abs(F) / np.maximum(1.0, mags), axis=1)
        return np.where(np.isfinite(out), out, np.inf)

    def degrees(self):
        raise NumericError("rational critical equations have no total degree")


class CriticalSystem:
    """Critical points of prod f_i^mu_i * x^nu on the torus, parameters (kin, mu, nu)."""

    def __init__(self, factors: Sequence[MPoly], vars: Sequence[str], kin: Sequence[str] = ()):
        self.vars = list(vars)
        self.kin = list(kin)
        self.factors = list(factors)
        self.mu = [f"mu_{i}" for i in range(len(factors))]
        self.nu = [f"nu_{j}" for j in range(len(vars))]
        for name in self.mu + self.nu:
            if any(name in f.vars for f in factors):
                raise NumericError(f"symbol {name} clashes with the input")
        eqs = critical_equations(self.factors, self.vars, self.mu, self.nu)
        self.system = PolySystem(eqs, self.vars, self.kin + self.mu + self.nu)
        self.log_system = LogCriticalSystem(self.factors, self.vars, self.kin)
        self.fcomp = CompiledPolys(self.factors, self.vars + self.kin)
        self.nk = len(self.kin)

    def factor_values(self, X: np.ndarray, kin: np.ndarray):
        K = np.repeat(np.atleast_2d(kin), X.shape[0], axis=0)
        vals, J, mags = self.fcomp.evaluate(np.concatenate([X, K], axis=1) if self.nk else X, jac=True)
        return vals, J[:, :, : len(self.vars)], mags

    def seed(self, kin: np.ndarray, rng: np.random.Generator):
        """A random torus point and (mu, nu) making it critical."""
        x0 = complex_normal(rng, 1, len(self.vars))
        mu = complex_normal(rng, len(self.factors))
        vals, J, mags = self.factor_values(x0, kin)
        if np.any(np.abs(vals[0]) < 1e-8 * np.maximum(1, mags[0])):
            return None
        # nu_j = -sum_i mu_i x_j d_j f_i / f_i
        nu = -np.einsum("i,ij->j", mu, J[0] / vals[0][:, None]) * x0[0]
        q = np.concatenate([np.asarray(kin, dtype=complex).ravel(), mu, nu])
        return x0, q

    def accept(self, kin: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        def ok(X):
            if len(X) == 0:
                return np.zeros(0, dtype=bool)
            vals, _, mags = self.factor_values(X, kin)
            nonzero = np.all(np.abs(vals) > 1e-8 * np.maximum(1, mags), axis=1)
            torus = np.all(np.abs(X) > 1e-8 * np.maximum(1, np.max(np.abs(X), axis=1, keepdims=True)), axis=1)
            return nonzero & torus

        return ok

    def moving_mask(self) -> np.ndarray:
        return np.array([False] * self.nk + [True] * (len(self.mu) + len(self.nu)))


def _kin_vector(kin: Sequence[str], values: Mapping[str, complex] | None) -> np.ndarray:
    values = values or {}
    missing = [k for k in kin if k not in values]
    if missing:
        raise NumericError(f"missing values for parameters {missing}")
    return np.array([complex(values[k]) for k in kin], dtype=complex)


def _as_factors(f) -> list[MPoly]:
    return [f] if isinstance(f, MPoly) else list(f)


def _free_params(factors: Sequence[MPoly], vars: Sequence[str]) -> list[str]:
    names = []
    for f in factors:
        for v in f.used_vars():
            if v not in vars and v not in names:
                names.append(v)
    return names


def count_critical_points(crit: CriticalSystem, kin: np.ndarray, cfg: EulerCharConfig, trial: int) -> int | None:
    """Regular critical points for one random draw of (mu, nu); None when the draw is degenerate."""
    tcfg = TrackerConfig(**{**cfg.tracker.__dict__, "seed": cfg.seed * 1000 + trial})
    rng = np.random.default_rng([cfg.seed, trial, 31])
    accept = crit.accept(kin)
    if cfg.method == "total_degree":
        mu = complex_normal(rng, len(crit.mu))
        nu = complex_normal(rng, len(crit.nu))
        q = np.concatenate([kin, mu, nu])
        res = solve_total_degree(crit.system, q, tcfg)
        pts = res.X[res.regular]
        pts = pts[accept(pts)] if len(pts) else pts
        return len(dedup(pts))
    for _ in range(5):
        s = crit.seed(kin, rng)
        if s is None:
            continue
        x0, q0 = s
        try:
            res = monodromy_solve(crit.log_system, x0, q0, tcfg, loops=cfg.loops, moving=crit.moving_mask(), accept=accept)
        except SeedError:
            continue
        return len(res.points)
    return None


def euler_characteristic(
    f,
    vars: Sequence[str],
    param_values: Mapping[str, complex] | None = None,
    cfg: EulerCharConfig | None = None,
) -> int:
    """Signed Euler characteristic of the complement of {prod f_i = 0} in the torus.

    Counted as regular critical points of the master function, maximized over
    ``cfg.trials`` random exponent draws.
    """
    cfg = cfg or EulerCharConfig()
    factors = _as_factors(f)
    kin_names = _free_params(factors, vars)
    kin = _kin_vector(kin_names, param_values)
    crit = CriticalSystem(factors, vars, kin_names)
    best = None
    for trial in range(cfg.trials):
        c = count_critical_points(crit, kin, cfg, trial)
        if c is not None:
            best = c if best is None else max(best, c)
    if best is None:
        raise IndeterminateError("every trial was degenerate")
    return best


def random_rational_point(names: Sequence[str], rng: np.random.Generator, lo: int = 1, hi: int = 97) -> dict[str, Fraction]:
    return {n: Fraction(int(rng.integers(lo, hi)), int(rng.integers(lo, hi))) for n in names}


# -- rationalization -----------------------------------------------------------

def _simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Smallest-denominator rational in the open interval (lo, hi), lo < hi."""
    if lo < 0 < hi:
        return Fraction(0)
    if hi <= 0:
        return -_simplest_between(-hi, -lo)
    fl = math.floor(lo)
    if fl + 1 < hi:
        return Fraction(fl + 1)
    # lo and hi share the integer part fl (hi may equal fl + 1)
    rest_lo, rest_hi = lo - fl, hi - fl
    if rest_lo == 0:
        # any 1/k with k large enough works; smallest denominator is ceil(1/rest_hi) + ...
        k = math.floor(1 / rest_hi) + 1
        return fl + Fraction(1, k)
    inner = _simplest_between(1 / rest_hi, 1 / rest_lo)
    return fl + 1 / inner


def rationalize(x: float, tol: float = 1e-8) -> Fraction:
    """Minimal-denominator rational q with |x - q| < tol."""
    if not math.isfinite(x):
        raise ValueError("cannot rationalize a non-finite number")
    fx = Fraction(x)
    t = Fraction(tol)
    return _simplest_between(fx - t, fx + t)
