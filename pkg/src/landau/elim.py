"""Principal Landau determinants by face scans and elimination.

For every face Q of the Newton polytope of a polynomial G (usually U + F) the
incidence variety {G_Q = dG_Q = 0} on the torus is projected to parameter
space and its codimension-one part is recorded.  Projections are computed
either symbolically (Buchberger with a block order) or numerically: solve on
a random line in parameter space, drop samples on dominant components, group
the rest by monodromy and interpolate each group's hypersurface from samples
obtained by moving the line.

Initial forms of faces of positive codimension are quasi-homogeneous.  Instead
of cutting the resulting positive-dimensional fibres with extra hyperplanes we
use the torus action to set a complementary set of coordinates to 1, which
leaves dim(Q) free coordinates.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .graphs import DiagramSpec, FeynmanGraph, Symanzik, symanzik
from .numeric import (
    DIVERGED,
    REGULAR,
    CriticalSystem,
    EulerCharConfig,
    IndeterminateError,
    LineSystem,
    NumericError,
    PolySystem,
    SeedError,
    TrackedPoint,
    TrackerConfig,
    classify,
    complex_normal,
    count_critical_points,
    dedup,
    match,
    euler_characteristic,
    monodromy_solve,
    rationalize,
    solve_total_degree,
    square_up,
    track_parameter,
)
from .polytope import (
    FaceDescriptor,
    LatticePolytope,
    f_vector,
    face_weights,
    initial_form,
    int_rank,
    newton_polytope,
    support,
)
from .ratpoly import MPoly, div_exact, divides, gcd, natural_key, poly_prod, poly_sum, sqfree_part

log = logging.getLogger(__name__)

IntVec = tuple[int, ...]


class ElimError(RuntimeError):
    pass


class BudgetError(ElimError):
    """Symbolic elimination exceeded its pair or time budget."""


@dataclass
class ElimConfig:
    seed: int = 0
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    max_samples: int = 10_000
    held_out: int = 20
    extra_samples: int = 10
    gap_threshold: float = 1e8
    rat_tol: float = 1e-8
    max_denominator: int = 1000
    group_loops: int = 6
    max_paths: int = 100_000
    groebner_pairs: int = 4000
    groebner_seconds: float = 20.0

    def tracker_for(self, salt: int) -> TrackerConfig:
        return TrackerConfig(**{**self.tracker.__dict__, "seed": self.tracker.seed * 7919 + salt})


# -- incidence systems ----------------------------------------------------------

def _integer_nullspace(rows: Sequence[Sequence[int]], ncol: int) -> list[list[int]]:
    """Integer vectors spanning {w : <r, w> = 0 for all rows r} over the rationals."""
    m = [[Fraction(x) for x in r] for r in rows if any(r)]
    pivots: list[int] = []
    rank = 0
    for c in range(ncol):
        piv = next((i for i in range(rank, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = 1 / m[rank][c]
        m[rank] = [x * inv for x in m[rank]]
        for i in range(len(m)):
            if i != rank and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[rank])]
        pivots.append(c)
        rank += 1
    out = []
    for f in (c for c in range(ncol) if c not in pivots):
        v = [Fraction(0)] * ncol
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -m[r][f]
        den = math.lcm(*(x.denominator for x in v))
        out.append([int(x * den) for x in v])
    return out


@dataclass
class ReducedFace:
    """A face system after fixing a torus-orbit section: coordinates in ``fixed`` are 1."""

    poly: MPoly
    fixed: tuple[str, ...]
    free: tuple[str, ...]
    equations: list[MPoly]

    def torus_generators(self, y: str = "y") -> list[MPoly]:
        yv = MPoly.var(y)
        mono = poly_prod(MPoly.var(v) for v in self.free) if self.free else MPoly.const(1)
        return self.equations + [yv * mono - 1]


@dataclass
class IncidenceSystem:
    equations: list[MPoly]
    vars: list[str]
    params: list[str]
    face: FaceDescriptor
    initial: MPoly

    def reduced(self) -> ReducedFace:
        alphas = self.vars[:-1]
        pts = support(self.initial, alphas)
        diffs = [[a - b for a, b in zip(p, pts[0])] for p in pts[1:]]
        W = _integer_nullspace(diffs, len(alphas))
        fixed: list[int] = []
        for j in range(len(alphas)):
            if len(fixed) == len(W):
                break
            if int_rank([[w[i] for i in fixed + [j]] for w in W]) == len(fixed) + 1:
                fixed.append(j)
        fixed_names = tuple(alphas[j] for j in fixed)
        free = tuple(v for v in alphas if v not in fixed_names)
        g = self.initial.subs({v: 1 for v in fixed_names})
        g = g.to_polynomial()
        g = g.with_vars(list(free) + [p for p in self.params])
        eqs = [g] + [g.diff(v) for v in free]
        return ReducedFace(g, fixed_names, free, eqs)


def build_incidence(
    gpoly: MPoly,
    face: FaceDescriptor,
    vars: Sequence[str] | None = None,
    params: Sequence[str] | None = None,
    y: str = "y",
) -> IncidenceSystem:
    """Equations G_Q, dG_Q/dx_i and y * prod(x) - 1 of the face with the given weight.

    Without ``vars`` the leading variables of ``gpoly`` are the torus coordinates.
    """
    vars = list(vars) if vars is not None else list(gpoly.vars[: len(face.weight)])
    if params is None:
        params = [v for v in gpoly.used_vars() if v not in vars]
    if len(face.weight) != len(vars):
        raise ElimError(f"weight has length {len(face.weight)}, expected {len(vars)}")
    gq = initial_form(gpoly, face.weight, vars)
    mono = poly_prod(MPoly.var(v) for v in vars)
    eqs = [gq] + [gq.diff(v) for v in vars] + [MPoly.var(y) * mono - 1]
    return IncidenceSystem(eqs, vars + [y], list(params), face, gq)


# -- numerical projection -------------------------------------------------------

@dataclass
class ComponentWitness:
    samples: list[TrackedPoint]
    line: tuple[np.ndarray, np.ndarray]
    hyperplanes: int


@dataclass
class Projection:
    deltas: list[MPoly | None] = field(default_factory=list)
    degrees: list[int] = field(default_factory=list)
    witnesses: list[ComponentWitness] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)
    trusted: list[bool] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    dominant: bool = False
    unresolved: bool = False

    def good(self) -> list[MPoly]:
        return [d for d, t in zip(self.deltas, self.trusted) if d is not None and t]


def _null_basis(C: np.ndarray) -> np.ndarray:
    _, _, vh = np.linalg.svd(C)
    return vh[C.shape[0]:].conj().T


def _dominant(base: PolySystem, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """True where the tangent space of the incidence variety projects onto parameter space."""
    if len(X) == 0:
        return np.zeros(0, dtype=bool)
    _, Jx, Jz = base.evaluate(X, Z, jac_q=True)
    J = np.concatenate([Jx, Jz], axis=2)
    n, s = X.shape[1], Z.shape[1]
    out = np.zeros(len(X), dtype=bool)
    for i in range(len(X)):
        _, sv, vh = np.linalg.svd(J[i])
        r = int(np.sum(sv > 1e-8 * max(sv[0], 1e-300))) if len(sv) else 0
        K = vh[r:].conj().T
        if K.shape[1] == 0:
            continue
        Kz = K[n:]
        out[i] = np.linalg.matrix_rank(Kz, tol=1e-6) == s
    return out


def _monomials(s: int, d: int, homogeneous: bool) -> list[IntVec]:
    degs = [d] if homogeneous else range(d + 1)
    out = []
    for k in degs:
        for combo in itertools.combinations_with_replacement(range(s), k):
            e = [0] * s
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def _vandermonde(Z: np.ndarray, exps: Sequence[IntVec]) -> np.ndarray:
    E = np.array(exps, dtype=np.int64).reshape(len(exps), Z.shape[1])
    V = np.ones((Z.shape[0], len(exps)), dtype=complex)
    for j in range(Z.shape[1]):
        col = E[:, j]
        if col.any():
            V = V * Z[:, j][:, None] ** col[None, :]
    return V


@dataclass
class _Fit:
    coeffs: dict[IntVec, complex]
    degree: int
    gap: float
    holds: bool
    orbit: int

    @property
    def good(self) -> bool:
        return self.holds


def _fit(Z: np.ndarray, degree: int, homogeneous: bool, cfg: ElimConfig, orbit: int) -> _Fit:
    """Complex hypersurface of the given degree through the samples, scaled to max coefficient 1."""
    exps = _monomials(Z.shape[1], degree, homogeneous)
    if homogeneous:
        Z = Z / np.max(np.abs(Z), axis=1, keepdims=True)
    V = _vandermonde(Z, exps)
    n_fit = len(exps) + cfg.extra_samples
    fit, hold = V[:n_fit], V[n_fit:]
    W = fit / np.linalg.norm(fit, axis=1, keepdims=True)
    _, sv, vh = np.linalg.svd(W)
    smallest = sv[-1] if len(sv) >= len(exps) else 0.0
    second = sv[-2] if len(sv) >= 2 else math.inf
    gap = float(second / smallest) if smallest > 0 else math.inf
    c = vh[-1].conj()
    c = c / c[np.argmax(np.abs(c))]
    holds = gap >= cfg.gap_threshold
    if len(hold):
        vals = np.abs(hold @ c)
        mags = np.linalg.norm(hold, axis=1) * np.linalg.norm(c)
        holds = holds and bool(np.all(vals <= 1e-8 * mags))
    coeffs = {e: complex(v) for e, v in zip(exps, c) if abs(v) > 1e-12}
    return _Fit(coeffs, degree, gap, holds, orbit)


def _cmul(p: dict, q: dict) -> dict:
    out: dict = {}
    for e, a in p.items():
        for f, b in q.items():
            k = tuple(x + y for x, y in zip(e, f))
            out[k] = out.get(k, 0) + a * b
    return out


def _rational(coeffs: dict, params: Sequence[str], cfg: ElimConfig) -> MPoly | None:
    """The rational polynomial proportional to the complex coefficients, or None.

    True coefficients are small integers up to scale, so we divide by each of
    the smallest coefficients in turn and demand small denominators.
    """
    vals = list(coeffs.values())
    top = max(abs(v) for v in vals)
    pivots = sorted((v for v in vals if abs(v) > 1e-8 * top), key=abs)[:5]
    for piv in pivots:
        c = {e: v / piv for e, v in coeffs.items()}
        scale = max(abs(v) for v in c.values())
        if max(abs(v.imag) for v in c.values()) > 1e-6 * scale:
            return None
        terms = {}
        for e, v in c.items():
            if abs(v.real) < cfg.rat_tol * scale:
                continue
            q = rationalize(v.real, cfg.rat_tol * max(1.0, abs(v.real)))
            if q:
                terms[e] = q
        if not terms or math.lcm(*(q.denominator for q in terms.values())) > cfg.max_denominator:
            continue
        p = MPoly(tuple(params), terms)
        if p.is_constant():
            return None
        return p.normalized()
    return None


def _combine(fits: list[_Fit], params: Sequence[str], cfg: ElimConfig, max_group: int = 4):
    """Rational polynomials from fits, multiplying Galois-conjugate components together.

    Returns (polys with their source fits, leftover fits).
    """
    out = []
    pending = list(fits)
    for f in list(pending):
        p = _rational(f.coeffs, params, cfg)
        if p is not None:
            out.append((p, [f]))
            pending.remove(f)
    for size in range(2, max_group + 1):
        changed = True
        while changed and len(pending) >= size:
            changed = False
            for combo in itertools.combinations(pending, size):
                prod = combo[0].coeffs
                for f in combo[1:]:
                    prod = _cmul(prod, f.coeffs)
                p = _rational(prod, params, cfg)
                if p is not None:
                    out.append((p, list(combo)))
                    for f in combo:
                        pending.remove(f)
                    changed = True
                    break
    return out, pending


def _known_orbit(w: ComponentWitness, Z: np.ndarray) -> bool:
    """Whether the parameter points Z were already seen in an earlier stage's witness."""
    if not len(Z) or not w.samples:
        return False
    ref = np.array([p.coords[-Z.shape[1]:] for p in w.samples])
    return bool(np.all(match(Z, ref) >= 0))


def _sample_lines(sq, ls: LineSystem, reps: np.ndarray, q: np.ndarray, needed: int, rng, tcfg: TrackerConfig):
    """Track witness points to random new lines until ``needed`` distinct parameter samples exist."""
    d = len(reps)
    s = ls.m
    out: list[np.ndarray] = []
    for _ in range(6):
        missing = needed - sum(len(z) for z in out)
        if missing <= 0:
            break
        L = int(math.ceil(1.15 * missing / d)) + 1
        Q1 = complex_normal(rng, L, 2 * s)
        U0 = np.tile(reps, (L, 1))
        Q1r = np.repeat(Q1, d, axis=0)
        r = track_parameter(sq, U0, q, Q1r, tcfg)
        _, Z = ls.points(r.X, Q1r)
        for line in range(L):
            idx = np.arange(line * d, (line + 1) * d)
            idx = idx[r.regular[idx]]
            if len(idx):
                zl = Z[idx]
                out.append(zl[dedup(zl)])
    Z = np.concatenate(out) if out else np.zeros((0, s), dtype=complex)
    return Z[:needed]


def _fit_stage(out, ls, sq, seeds, q, k, line, homogeneous, cfg, rng, tcfg, in_torus, loops) -> list[_Fit]:
    """Group one stage's witness points by monodromy and fit a hypersurface to each orbit."""
    s = ls.m
    qrep = lambda m: q.reshape(1, -1).repeat(m, axis=0)  # noqa: E731
    try:
        mres = monodromy_solve(
            sq, seeds, q, tcfg, loops=loops, group=True,
            accept=lambda U: in_torus(ls.points(U, qrep(len(U)))[0]),
        )
    except SeedError:
        return []
    fits = []
    for orbit in mres.orbits:
        U = mres.points[orbit]
        X, Z = ls.points(U, qrep(len(U)))
        zi = dedup(Z)
        d = len(zi)
        if any(_known_orbit(w, Z[zi]) for w in out.witnesses):
            continue
        pts = [TrackedPoint(np.concatenate([x, z]), 0.0, 0.0, 0.0, REGULAR) for x, z in zip(X[zi], Z[zi])]
        out.witnesses.append(ComponentWitness(pts, line, k))
        tag = len(out.witnesses) - 1
        n_mon = math.comb(s - 1 + d, d) if homogeneous else math.comb(s + d, d)
        needed = n_mon + cfg.extra_samples + cfg.held_out
        if needed > cfg.max_samples:
            out.notes.append(f"degree {d} component needs {needed} samples; reported by degree only")
            fits.append(_Fit({}, d, math.nan, False, tag))
            continue
        Zs = _sample_lines(sq, ls, U[zi], q, needed, rng, tcfg)
        if len(Zs) < n_mon + cfg.extra_samples:
            out.notes.append(f"only {len(Zs)} samples could be tracked for a degree {d} component")
            fits.append(_Fit({}, d, math.nan, False, tag))
            continue
        fits.append(_fit(Zs, d, homogeneous, cfg, tag))
    return fits


def _rows(q: np.ndarray, m: int) -> np.ndarray:
    return q.reshape(1, -1).repeat(m, axis=0)


def deflate(equations: Sequence[MPoly], vars: Sequence[str], params: Sequence[str], rank: int, rng) -> tuple[list[MPoly], list[str], np.ndarray, np.ndarray]:
    """One isosingular deflation step: append J * (B lam + b0) = 0 with random rational B, b0.

    The Jacobian is taken in all of vars and params; ``rank`` new unknowns
    ``lam`` make a generic affine family of vectors meet its kernel once.
    """
    allv = list(vars) + list(params)
    lam = [f"lam{i}" for i in range(rank)]
    while any(l in e.vars for l in lam for e in equations):
        lam = ["d" + l for l in lam]
    B = rng.integers(-9, 10, size=(len(allv), rank))
    b0 = rng.integers(-9, 10, size=len(allv))
    v = [poly_sum([MPoly.var(l) * int(B[j, i]) for i, l in enumerate(lam)]) + int(b0[j]) for j in range(len(allv))]
    extra = [poly_sum([e.diff(x) * vj for x, vj in zip(allv, v)]) for e in equations]
    return list(equations) + [e for e in extra if not e.is_zero()], list(vars) + lam, B, b0


def _deflated_stages(eqs, vars, params, ls, X, Z, U, q, k, rng, tcfg, in_torus, out):
    """Lift singular endpoints to regular points of deflated systems, grouped by Jacobian rank."""
    base = ls.base
    n, s = len(vars), len(params)
    F, Jx, Jz = base.evaluate(X, Z, jac_q=True)
    J = np.concatenate([Jx, Jz], axis=2)
    ranks = []
    for Ji in J:
        sv = np.linalg.svd(Ji, compute_uv=False)
        ranks.append(int(np.sum(sv > 1e-5 * max(sv[0], 1e-300))) if len(sv) else 0)
    ranks = np.array(ranks)
    for r in sorted(set(ranks.tolist())):
        if r == 0:
            continue
        sel = np.nonzero(ranks == r)[0]
        eqs2, vars2, B, b0 = deflate(eqs, vars, params, r, rng)
        base2 = PolySystem(eqs2, vars2, params)
        x0 = np.concatenate([ls.x0, np.zeros(r, dtype=complex)])
        N = np.zeros((n + r, ls.nw + r), dtype=complex)
        N[:n, : ls.nw] = ls.N
        N[n:, ls.nw:] = np.eye(r)
        ls2 = LineSystem(base2, x0, N)
        if ls2.n_eq < ls2.n:
            continue
        sq2 = square_up(ls2, rng)
        lams = []
        for i in sel:
            A = J[i] @ B
            lams.append(np.linalg.lstsq(A, -(J[i] @ b0), rcond=None)[0])
        U2 = np.concatenate([U[sel, : ls.nw], np.array(lams), U[sel, ls.nw:]], axis=1)
        cl = classify(sq2, U2, q.reshape(1, -1), tcfg)
        X2, Z2 = ls2.points(cl.X, _rows(q, len(cl)))
        good = cl.regular & in_torus(X2[:, :n])
        idx = np.nonzero(good)[0]
        if not len(idx):
            continue
        idx = idx[dedup(cl.X[idx])]
        dom = _dominant(base2, X2[idx], Z2[idx])
        out.dominant = out.dominant or bool(dom.any())
        keep = idx[~dom]
        log.debug("deflation of rank %d lifted %d of %d singular points", r, len(idx), len(sel))
        if len(keep):
            yield (k, ls2, sq2, cl.X[keep]), int(good.sum())
        else:
            yield None, int(good.sum())


def project_codim1(
    equations: Sequence[MPoly],
    params: Sequence[str],
    vars: Sequence[str],
    homogeneous: bool = False,
    cfg: ElimConfig | None = None,
    torus: Sequence[str] = (),
    salt: int = 0,
) -> Projection:
    """Codimension-one part of the projection of {equations = 0} to parameter space.

    ``torus`` lists variables that must be nonzero on the solutions kept.
    """
    cfg = cfg or ElimConfig()
    params, vars = list(params), list(vars)
    rng = np.random.default_rng([cfg.seed, salt, 17])
    tcfg = cfg.tracker_for(salt)
    out = Projection()
    eqs = [e for e in equations if not e.is_zero()]
    for e in eqs:
        if e.is_constant():
            return out
    if not eqs:
        out.dominant = True
        return out
    base = PolySystem(eqs, vars, params)
    n, s = len(vars), len(params)
    tor = np.array([vars.index(v) for v in torus], dtype=np.int64)
    a, b = complex_normal(rng, s), complex_normal(rng, s)
    q = np.concatenate([a, b])

    def in_torus(X):
        if not len(tor) or not len(X):
            return np.ones(len(X), dtype=bool)
        scale = np.maximum(1.0, np.max(np.abs(X), axis=1))
        return np.all(np.abs(X[:, tor]) > 1e-7 * scale[:, None], axis=1)

    stages = []
    for k in range(n + 1):
        x0 = N = None
        if k:
            C = complex_normal(rng, k, n)
            c0 = complex_normal(rng, k)
            x0 = np.linalg.lstsq(C, -c0, rcond=None)[0]
            N = _null_basis(C)
        ls = LineSystem(base, x0, N)
        if ls.n_eq < ls.n:
            continue
        sq = square_up(ls, rng)
        res = solve_total_degree(sq, q, tcfg, cfg.max_paths)
        X, Z = ls.points(res.X, _rows(q, len(res)))
        ok = in_torus(X)
        on = np.isfinite(res.residual) & (res.residual < 1e-6) & (res.status != DIVERGED)
        sing = on & ok & (res.sigma_min <= 1e-6 * np.maximum(res.sigma_max, 1e-300))
        reg = (res.status == REGULAR) & ok & ~sing
        idx = np.nonzero(reg)[0]
        idx = idx[dedup(res.X[idx])] if len(idx) else idx
        dom = _dominant(base, X[idx], Z[idx])
        keep = idx[~dom]
        out.dominant = out.dominant or bool(dom.any())
        log.debug("stage %d: %d paths, %d regular, %d kept, %d singular", k, len(res), len(idx), len(keep), int(sing.sum()))
        if len(keep):
            stages.append((k, ls, sq, res.X[keep]))
        left = int(sing.sum())
        if left:
            for st, lifted in _deflated_stages(eqs, vars, params, ls, X[sing], Z[sing], res.X[sing], q, k, rng, tcfg, in_torus, out):
                if st is not None:
                    stages.append(st)
                left -= lifted
        if left <= 0:
            break
    else:
        out.unresolved = True
        out.notes.append("singular solutions remain after the hyperplane cap")

    fits: list[_Fit] = []
    for k, ls, sq, seeds in stages:
        stage_fits = _fit_stage(out, ls, sq, seeds, q, k, (a, b), homogeneous, cfg, rng, tcfg, in_torus, cfg.group_loops)
        if any(not f.good and f.coeffs for f in stage_fits):
            # a failed fit usually means monodromy stopped before an orbit was complete
            n_w = len(out.witnesses) - len(stage_fits)
            del out.witnesses[n_w:]
            stage_fits = _fit_stage(out, ls, sq, seeds, q, k, (a, b), homogeneous, cfg, rng, tcfg, in_torus, 4 * cfg.group_loops)
        fits.extend(stage_fits)
    good = [f for f in fits if f.good]
    polys, left = _combine(good, params, cfg)
    for p, src in polys:
        if any(p == d for d in out.deltas):
            continue
        out.deltas.append(p)
        out.degrees.append(p.degree())
        out.gaps.append(min(f.gap for f in src))
        out.trusted.append(True)
    for f in left + [f for f in fits if not f.good]:
        out.deltas.append(None)
        out.degrees.append(f.degree)
        out.gaps.append(f.gap)
        out.trusted.append(False)
        if f.coeffs and f.good:
            out.notes.append(f"degree {f.degree} component has no rational model")
        elif f.coeffs:
            out.notes.append(f"degree {f.degree} interpolation failed (gap {f.gap:.3g})")
    return out


# -- symbolic elimination ---------------------------------------------------------

def _block_key(nelim: int):
    def key(e):
        el, pa = e[:nelim], e[nelim:]
        return (sum(el), tuple(-x for x in reversed(el)), sum(pa), tuple(-x for x in reversed(pa)))

    return key


def _lead(p: dict, key) -> tuple:
    return max(p, key=key)


def _divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _reduce(p: dict, basis: list, key) -> dict:
    p = dict(p)
    r: dict = {}
    while p:
        m = _lead(p, key)
        c = p[m]
        for lm, lc, g in basis:
            if _divides(lm, m):
                shift = tuple(x - y for x, y in zip(m, lm))
                f = c / lc
                for e, v in g.items():
                    e2 = tuple(x + y for x, y in zip(e, shift))
                    w = p.get(e2, 0) - f * v
                    if w:
                        p[e2] = w
                    else:
                        p.pop(e2, None)
                break
        else:
            r[m] = c
            del p[m]
    return r


def _monic(p: dict, key) -> tuple:
    lm = _lead(p, key)
    lc = p[lm]
    return lm, Fraction(1), {e: v / lc for e, v in p.items()}


def groebner_basis(
    generators: Sequence[MPoly], elim_vars: Sequence[str], max_pairs: int = 4000, seconds: float = 20.0
) -> tuple[list[str], list[MPoly]]:
    """Reduced Groebner basis for the block order elim_vars >> remaining variables.

    Returns the variable order used and the basis.  Raises BudgetError when the
    pair or time budget runs out.
    """
    elim = list(elim_vars)
    rest: list[str] = []
    for g in generators:
        for v in g.used_vars():
            if v not in elim and v not in rest:
                rest.append(v)
    rest.sort(key=natural_key)
    order = elim + rest
    key = _block_key(len(elim))
    polys = [g.with_vars(order) for g in generators if not g.is_zero()]
    basis: list[tuple] = []
    pairs: list[tuple[int, int]] = []
    start = time.monotonic()

    def lcm(a, b):
        return tuple(max(x, y) for x, y in zip(a, b))

    def add(p: dict):
        lm, lc, g = _monic(p, key)
        h = len(basis)
        # Gebauer-Moeller style pruning of pairs made redundant by the new element
        kept = []
        for i, j in pairs:
            lij = lcm(basis[i][0], basis[j][0])
            if _divides(lm, lij) and lcm(basis[i][0], lm) != lij and lcm(basis[j][0], lm) != lij:
                continue
            kept.append((i, j))
        pairs[:] = kept
        basis.append((lm, lc, g))
        for i in range(h):
            if basis[i] is None:
                continue
            pairs.append((i, h))

    for p in polys:
        r = _reduce(dict(p.terms), [b for b in basis if b is not None], key)
        if r:
            add(r)
    done = 0
    while pairs:
        if done >= max_pairs or time.monotonic() - start > seconds:
            raise BudgetError(f"Groebner budget exhausted after {done} pairs")
        pairs.sort(key=lambda ij: key(lcm(basis[ij[0]][0], basis[ij[1]][0])))
        i, j = pairs.pop(0)
        li, _, gi = basis[i]
        lj, _, gj = basis[j]
        if all(min(x, y) == 0 for x, y in zip(li, lj)):
            continue
        done += 1
        L = lcm(li, lj)
        si = tuple(x - y for x, y in zip(L, li))
        sj = tuple(x - y for x, y in zip(L, lj))
        spol: dict = {}
        for e, v in gi.items():
            spol[tuple(x + y for x, y in zip(e, si))] = v
        for e, v in gj.items():
            e2 = tuple(x + y for x, y in zip(e, sj))
            w = spol.get(e2, 0) - v
            if w:
                spol[e2] = w
            else:
                spol.pop(e2, None)
        r = _reduce(spol, basis, key)
        if r:
            add(r)
    # minimal and reduced basis
    lms = [b[0] for b in basis]
    minimal = []
    for i, b in enumerate(basis):
        if any(k != i and _divides(lms[k], b[0]) and (lms[k] != b[0] or k < i) for k in range(len(basis))):
            continue
        minimal.append(b)
    reduced = []
    for i, b in enumerate(minimal):
        others = [m for k, m in enumerate(minimal) if k != i]
        tail = {e: v for e, v in b[2].items() if e != b[0]}
        r = _reduce(tail, others, key)
        r[b[0]] = Fraction(1)
        reduced.append(MPoly(tuple(order), r))
    reduced.sort(key=lambda p: key(_lead(p.terms, key)))
    return order, reduced


def groebner_eliminate(
    generators: Sequence[MPoly], elim_vars: Sequence[str], max_pairs: int = 4000, seconds: float = 20.0
) -> list[MPoly]:
    """Generators of the elimination ideal (empty list: the ideal is zero)."""
    order, gb = groebner_basis(generators, elim_vars, max_pairs, seconds)
    elim = set(elim_vars)
    out = []
    for g in gb:
        if not (set(g.used_vars()) & elim):
            out.append(g.drop_unused() if g.used_vars() else g)
    return out


def split_known(p: MPoly, known: Sequence[MPoly] = ()) -> list[MPoly]:
    """Peel variable factors and known polynomials off a square-free polynomial."""
    if p.is_constant():
        return []
    rest = p
    out: list[MPoly] = []
    for v in sorted(rest.used_vars(), key=natural_key):
        x = MPoly.var(v)
        if divides(x, rest):
            out.append(x)
            rest = div_exact(rest, x)
    for k in known:
        if k.is_constant() or rest.is_constant():
            continue
        if k.degree() <= rest.degree() and divides(k, rest):
            out.append(k.normalized())
            rest = div_exact(rest, k)
    if not rest.is_constant():
        out.append(rest.normalized())
    return out


# -- faces ----------------------------------------------------------------------

@dataclass
class FaceReport:
    face: FaceDescriptor
    count: int
    deltas: list[MPoly] = field(default_factory=list)
    method: str = ""
    dominant: bool = False
    gaps: list[float] = field(default_factory=list)
    issues: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def partial(self) -> bool:
        return bool(self.issues)

    def line(self) -> str:
        disc = ", ".join(str(d) for d in self.deltas) if self.deltas else "1"
        w = "[" + ", ".join(str(x) for x in self.face.weight) + "]"
        return f"codim: {self.face.codim}, face: {self.face.face_id[1]}/{self.count}, weights: {w}, discriminant: {disc}"


def _coefficients(p: MPoly, vars: Sequence[str]) -> list[MPoly]:
    idx = [p.vars.index(v) if v in p.vars else None for v in vars]
    groups: dict[tuple, dict] = {}
    for e, c in p.terms.items():
        key = tuple(e[i] if i is not None else 0 for i in idx)
        rest = tuple(0 if (v in vars) else k for v, k in zip(p.vars, e))
        groups.setdefault(key, {})[rest] = c
    return [MPoly(p.vars, t).drop_unused() for t in groups.values()]


def _face_salt(face: FaceDescriptor) -> int:
    return face.codim * 100_003 + face.face_id[1]


def process_face(
    gpoly: MPoly,
    face: FaceDescriptor,
    vars: Sequence[str],
    params: Sequence[str],
    method: str = "num",
    homogeneous: bool = False,
    cfg: ElimConfig | None = None,
    known: Sequence[MPoly] = (),
    count: int = 0,
) -> FaceReport:
    """Codimension-one discriminants of a single face."""
    if method not in ("sym", "num", "auto"):
        raise ElimError(f"unknown method {method!r}")
    cfg = cfg or ElimConfig()
    t0 = time.monotonic()
    rep = FaceReport(face, count)
    inc = build_incidence(gpoly, face, vars, params)
    npts = len(support(inc.initial, vars))
    if npts == face.dim + 1:
        # simplex face: the incidence variety is {all coefficients vanish}
        rep.method = "sym"
        coeffs = _coefficients(inc.initial, vars)
        g = coeffs[0]
        for c in coeffs[1:]:
            g = gcd(g, c)
        if not g.is_constant():
            g = sqfree_part(g)
            if g.degree() <= 1 or method == "sym":
                rep.deltas = split_known(g, known)
            else:
                proj = project_codim1(coeffs, params, [], homogeneous, cfg, salt=_face_salt(face))
                _absorb(rep, proj, "num")
        rep.seconds = time.monotonic() - t0
        return rep
    red = inc.reduced()
    if method in ("sym", "auto"):
        try:
            gens = red.torus_generators()
            elim = groebner_eliminate(gens, list(red.free) + ["y"], cfg.groebner_pairs, cfg.groebner_seconds)
            if elim:
                g = elim[0]
                for h in elim[1:]:
                    g = gcd(g, h)
                rep.method = "sym"
                if not g.is_constant():
                    rep.deltas = split_known(sqfree_part(g), known)
                rep.seconds = time.monotonic() - t0
                return rep
            rep.dominant = True
            log.debug("face %s: elimination ideal is zero, switching to the numerical path", face.face_id)
        except BudgetError as exc:
            log.debug("face %s: %s, switching to the numerical path", face.face_id, exc)
    rep.method = "num"
    try:
        proj = project_codim1(red.equations, params, red.free, homogeneous, cfg, torus=red.free, salt=_face_salt(face))
        _absorb(rep, proj, "num")
    except NumericError as exc:
        rep.issues.append(f"numerical failure: {exc}")
    rep.seconds = time.monotonic() - t0
    return rep


def _absorb(rep: FaceReport, proj: Projection, method: str):
    rep.method = method
    rep.dominant = rep.dominant or proj.dominant
    for d, deg, gap, ok in zip(proj.deltas, proj.degrees, proj.gaps, proj.trusted):
        if d is not None and ok:
            if not any(d == e for e in rep.deltas):
                rep.deltas.append(d)
                rep.gaps.append(gap)
        elif d is None:
            rep.issues.append(f"degree {deg} component without polynomial")
        else:
            rep.issues.append(f"untrusted degree {deg} component (gap {gap:.3g}): {d}")
    if proj.unresolved:
        rep.issues.append("fibres not resolved within the hyperplane cap")
    rep.issues.extend(n for n in proj.notes if n and not any(n in i for i in rep.issues))


# -- results --------------------------------------------------------------------

@dataclass
class DiscriminantComponent:
    delta: MPoly
    weights: list[IntVec] = field(default_factory=list)
    methods: list[str] = field(default_factory=list)
    chi: int | None = None
    gap: float | None = None

    @property
    def degree(self) -> int:
        return self.delta.degree()


@dataclass
class PLDResult:
    name: str
    edges: list[list[int]]
    nodes: list[int]
    internal_masses: list[str]
    external_masses: list[str]
    U: MPoly
    F: MPoly
    params: list[str]
    vars: list[str]
    chi_generic: int | None
    f_vector: list[int]
    components: list[DiscriminantComponent]
    faces: list[FaceReport] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return any(f.partial for f in self.faces)

    def deltas(self) -> list[MPoly]:
        return [c.delta for c in self.components]


def _select_faces(
    descs: list[FaceDescriptor],
    poly: MPoly,
    vars: Sequence[str],
    P: LatticePolytope,
    codim_start: int,
    face_start: int,
    single_face: bool,
    single_weight: Sequence[int] | None,
) -> list[FaceDescriptor]:
    if single_weight is not None:
        pts = set(support(initial_form(poly, list(single_weight), vars), vars))
        for d in descs:
            if {P.points[i] for i in d.point_indices} == pts:
                return [d]
        raise ElimError(f"weight {list(single_weight)} does not select a face")
    ordered = sorted(descs, key=lambda d: (-d.codim, d.face_id[1]))
    if codim_start < 0:
        return ordered
    start = next((i for i, d in enumerate(ordered) if d.face_id == (codim_start, face_start)), None)
    if start is None:
        raise ElimError(f"no face {face_start} in codimension {codim_start}")
    return [ordered[start]] if single_face else ordered[start:]


def scan_faces(
    poly: MPoly,
    params: Sequence[str],
    vars: Sequence[str],
    method: str = "num",
    homogeneous: bool = False,
    cfg: ElimConfig | None = None,
    codim_start: int = -1,
    face_start: int = 1,
    single_face: bool = False,
    single_weight: Sequence[int] | None = None,
    echo: Callable[[str], None] | None = None,
) -> tuple[list[DiscriminantComponent], list[FaceReport], LatticePolytope]:
    """Run the face-by-face elimination in order of decreasing codimension."""
    cfg = cfg or ElimConfig()
    P = newton_polytope(poly, vars)
    descs = face_weights(P)
    counts: dict[int, int] = {}
    for d in descs:
        counts[d.codim] = counts.get(d.codim, 0) + 1
    faces = _select_faces(descs, poly, vars, P, codim_start, face_start, single_face, single_weight)
    comps: dict[MPoly, DiscriminantComponent] = {}
    reports = []
    for face in faces:
        known = [c.delta for c in comps.values()]
        rep = process_face(poly, face, vars, params, method, homogeneous, cfg, known, counts[face.codim])
        reports.append(rep)
        for d, *g in itertools.zip_longest(rep.deltas, rep.gaps):
            comp = comps.get(d)
            if comp is None:
                comp = comps[d] = DiscriminantComponent(d)
            comp.weights.append(tuple(face.weight))
            if rep.method not in comp.methods:
                comp.methods.append(rep.method)
            if g and g[0] is not None:
                comp.gap = g[0] if comp.gap is None else min(comp.gap, g[0])
        if echo is not None:
            echo(rep.line())
            for issue in rep.issues:
                echo(f"  warning: {issue}")
    return list(comps.values()), reports, P


def specialized_pad(
    p: MPoly,
    params: Sequence[str],
    vars: Sequence[str],
    method: str = "num",
    homogeneous: bool = False,
    cfg: ElimConfig | None = None,
    **filters,
) -> list[DiscriminantComponent]:
    """Face-scan discriminants of an arbitrary polynomial whose coefficients depend on params."""
    comps, _, _ = scan_faces(p, params, vars, method, homogeneous, cfg, **filters)
    return comps


def get_pld(
    diagram: DiagramSpec | FeynmanGraph,
    internal_masses=None,
    external_masses=None,
    relations: Mapping[str, str] | None = None,
    method: str = "num",
    homogeneous: bool = True,
    cfg: ElimConfig | None = None,
    codim_start: int = -1,
    face_start: int = 1,
    single_face: bool = False,
    single_weight: Sequence[int] | None = None,
    with_chi: bool = False,
    chi_cfg: EulerCharConfig | None = None,
    echo: Callable[[str], None] | None = None,
) -> PLDResult:
    """Principal Landau determinant of a diagram on a kinematic subspace."""
    if isinstance(diagram, FeynmanGraph):
        diagram = DiagramSpec(diagram, internal_masses or "generic", external_masses or "generic", dict(relations or {}))
    else:
        if internal_masses is not None or external_masses is not None or relations:
            diagram = DiagramSpec(
                diagram.graph,
                internal_masses if internal_masses is not None else diagram.internal_masses,
                external_masses if external_masses is not None else diagram.external_masses,
                {**diagram.relations, **dict(relations or {})},
            )
    sy: Symanzik = diagram.symanzik()
    G = sy.G
    comps, reports, P = scan_faces(
        G, sy.params, sy.vars, method, homogeneous, cfg, codim_start, face_start, single_face, single_weight, echo
    )
    chi_generic = None
    if with_chi:
        chi_cfg = chi_cfg or EulerCharConfig()
        rng = np.random.default_rng([chi_cfg.seed, 2024])
        point = {p: complex(v) for p, v in zip(sy.params, complex_normal(rng, len(sy.params)))}
        chi_generic = euler_characteristic(G, sy.vars, point, chi_cfg)
        for c in comps:
            try:
                c.chi = chi_on_hypersurface(G, sy.params, sy.vars, c.delta, chi_cfg)
            except (IndeterminateError, ElimError) as exc:
                log.warning("chi on %s failed: %s", c.delta, exc)
    return PLDResult(
        name=diagram.name,
        edges=[list(e) for e in diagram.graph.edges],
        nodes=list(diagram.graph.nodes),
        internal_masses=[str(m) for m in sy.internal],
        external_masses=[str(m) for m in sy.external],
        U=sy.U,
        F=sy.F,
        params=list(sy.params),
        vars=list(sy.vars),
        chi_generic=chi_generic,
        f_vector=f_vector(P),
        components=comps,
        faces=reports,
    )


# -- Euler discriminant -----------------------------------------------------------

def point_on_hypersurface(
    candidate: MPoly, params: Sequence[str], rng: np.random.Generator
) -> np.ndarray:
    """A random complex point of {candidate = 0}: solve for one parameter, randomize the rest."""
    used = [p for p in params if p in candidate.used_vars()]
    if not used:
        raise ElimError(f"candidate {candidate} does not depend on the parameters")
    order = sorted(used, key=lambda v: (candidate.degree(v), natural_key(v)))
    for v in order:
        for _ in range(3):
            vals = {p: complex(x) for p, x in zip(params, complex_normal(rng, len(params)))}
            coeffs = candidate.coeffs_in(v)
            deg = max(coeffs)
            poly = np.zeros(deg + 1, dtype=complex)
            for k, c in coeffs.items():
                poly[deg - k] = c.eval_complex(vals)
            if abs(poly[0]) < 1e-10 * max(1.0, np.max(np.abs(poly))):
                continue
            roots = np.roots(poly)
            if not len(roots):
                continue
            vals[v] = complex(roots[rng.integers(len(roots))])
            return np.array([vals[p] for p in params], dtype=complex)
    raise ElimError(f"could not sample a point on {candidate} = 0")


def _generic_solutions(crit: CriticalSystem, kin: np.ndarray, cfg: EulerCharConfig):
    """Largest critical-point set over the trials; stops once that count has been seen three times."""
    best = None
    hits = 0
    for trial in range(cfg.trials):
        if hits >= 3:
            break
        tcfg = TrackerConfig(**{**cfg.tracker.__dict__, "seed": cfg.seed * 1000 + trial})
        rng = np.random.default_rng([cfg.seed, trial, 53])
        for _ in range(5):
            s = crit.seed(kin, rng)
            if s is None:
                continue
            x0, q0 = s
            try:
                res = monodromy_solve(
                    crit.log_system, x0, q0, tcfg, loops=cfg.loops, moving=crit.moving_mask(), accept=crit.accept(kin)
                )
            except SeedError:
                continue
            if best is None or len(res.points) > len(best[0]):
                best = (res.points, q0)
                hits = 1
            elif len(res.points) == len(best[0]):
                hits += 1
            break
    if best is None:
        raise IndeterminateError("every trial was degenerate")
    return best


def _count_at(crit: CriticalSystem, sols: np.ndarray, q0: np.ndarray, kin: np.ndarray, rng, tcfg) -> int:
    mu = complex_normal(rng, len(crit.mu))
    nu = complex_normal(rng, len(crit.nu))
    q1 = np.concatenate([kin, mu, nu])
    r = track_parameter(crit.log_system, sols, q0, q1, tcfg)
    pts = r.X[r.regular]
    if len(pts):
        pts = pts[crit.accept(kin)(pts)]
    return len(dedup(pts)) if len(pts) else 0


@dataclass
class CandidateVerdict:
    candidate: MPoly
    is_component: bool
    chi: int
    chi_generic: int
    trials: list[int]


def euler_discriminant_q(
    gpoly: MPoly,
    params: Sequence[str],
    vars: Sequence[str],
    candidates: Sequence[MPoly],
    cfg: EulerCharConfig | None = None,
    chi_generic: int | None = None,
) -> list[CandidateVerdict]:
    """Decide for each candidate whether the Euler characteristic drops on its zero set.

    Generic critical points are found once by monodromy; each trial moves them
    by a parameter homotopy to a random point of the candidate's zero set (with
    fresh exponents) and counts the regular endpoints.  The maximum over trials
    is compared with the generic count.
    """
    cfg = cfg or EulerCharConfig()
    params, vars = list(params), list(vars)
    crit = CriticalSystem([gpoly], vars, params)
    rng = np.random.default_rng([cfg.seed, 881])
    kin0 = complex_normal(rng, len(params))
    sols, q0 = _generic_solutions(crit, kin0, cfg)
    generic = len(sols) if chi_generic is None else chi_generic
    out = []
    for ci, cand in enumerate(candidates):
        counts = []
        crng = np.random.default_rng([cfg.seed, 883, ci])
        for trial in range(cfg.trials):
            tcfg = TrackerConfig(**{**cfg.tracker.__dict__, "seed": cfg.seed * 1000 + 37 * ci + trial})
            kin = point_on_hypersurface(cand, params, crng)
            counts.append(_count_at(crit, sols, q0, kin, crng, tcfg))
        chi = max(counts)
        out.append(CandidateVerdict(cand, chi < generic, chi, generic, counts))
    return out


def chi_on_hypersurface(
    gpoly: MPoly, params: Sequence[str], vars: Sequence[str], delta: MPoly, cfg: EulerCharConfig | None = None
) -> int:
    """Euler characteristic at random points of {delta = 0}, maximized over trials."""
    cfg = cfg or EulerCharConfig()
    params = list(params)
    crit = CriticalSystem([gpoly], list(vars), params)
    rng = np.random.default_rng([cfg.seed, 887])
    best = None
    for trial in range(cfg.trials):
        kin = point_on_hypersurface(delta, params, rng)
        c = count_critical_points(crit, kin, cfg, trial)
        if c is not None:
            best = c if best is None else max(best, c)
    if best is None:
        raise IndeterminateError("every trial was degenerate")
    return best


# -- presentation in masses ---------------------------------------------------------

def root_symbol(name: str) -> str:
    return f"sqrt_{name}"


def threshold_candidates(params: Sequence[str], masses: Sequence[str], max_terms: int = 3) -> list[MPoly]:
    """Dictionary P - (r_i +- r_j +- r_k)^2 over non-mass parameters P and mass roots r."""
    out = []
    roots = [MPoly.var(root_symbol(m)) for m in masses]
    for p in params:
        if p in masses:
            continue
        P = MPoly.var(p)
        for k in range(1, max_terms + 1):
            for idx in itertools.combinations(range(len(roots)), k):
                for signs in itertools.product((1, -1), repeat=k - 1):
                    lin = roots[idx[0]]
                    for sgn, i in zip(signs, idx[1:]):
                        lin = lin + roots[i] * sgn
                    out.append((P - lin * lin).normalized())
    return out


def threshold_presentation(delta: MPoly, params: Sequence[str], masses: Sequence[str]) -> list[MPoly]:
    """Factors of delta after substituting m = sqrt_m^2, split by trial division."""
    masses = [m for m in masses if m in delta.used_vars()]
    if not masses or delta.degree() <= 1:
        return [delta.normalized()]
    sub = delta.subs({m: MPoly.var(root_symbol(m)) ** 2 for m in masses})
    rest = sub
    factors = []
    for cand in threshold_candidates([p for p in params if p in delta.used_vars()], masses):
        while not rest.is_constant() and divides(cand, rest):
            factors.append(cand)
            rest = div_exact(rest, cand)
    if not factors:
        return [delta.normalized()]
    if not rest.is_constant():
        factors.append(rest.normalized())
    return factors
