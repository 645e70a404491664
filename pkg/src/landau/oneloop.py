"""Closed-form principal determinants for one-loop n-gons and banana diagrams.

The one-loop graph polynomial is a quadratic form in (1, alpha_1, ..., alpha_n)
whose symmetric coefficient matrix Z carries all kinematics.  Face discriminants
of its Newton polytope are principal minors of Z, so the whole determinant is a
product of exact Bareiss determinants.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graphs import banana, one_loop, symanzik
from .polytope import newton_polytope
from .ratpoly import MPoly, div_exact, parse, squarefree_product

SUBSPACES = ("generic", "massless-internal", "massless-all", "equal", "massless-external")

# (internal masses, external masses) per subspace
_MASSES = {
    "generic": ("generic", "generic"),
    "massless-internal": ("zero", "generic"),
    "massless-all": ("zero", "zero"),
    "equal": ("equal", "equal"),
    "massless-external": ("generic", "zero"),
}


class OneLoopError(ValueError):
    pass


def _check_n(n: int, lo: int = 2):
    if not isinstance(n, int) or n < lo:
        raise OneLoopError(f"n must be an integer >= {lo}, got {n!r}")


# -- the Z matrix -----------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricZMatrix:
    """Rows and columns indexed 0..n; entry (i, i) is twice the alpha_i^2 coefficient."""

    n: int
    subspace: str
    rows: tuple[tuple[MPoly, ...], ...]
    params: tuple[str, ...]

    def __post_init__(self):
        size = self.n + 1
        if len(self.rows) != size or any(len(r) != size for r in self.rows):
            raise OneLoopError("Z must be square of size n+1")
        for i in range(size):
            for j in range(i):
                if self.rows[i][j] != self.rows[j][i]:
                    raise OneLoopError(f"Z is not symmetric at ({i}, {j})")
        if not self.rows[0][0].is_zero():
            raise OneLoopError("Z[0][0] must vanish")

    def __getitem__(self, ij: tuple[int, int]) -> MPoly:
        i, j = ij
        return self.rows[i][j]

    def sub(self, index: Sequence[int]) -> list[list[MPoly]]:
        return [[self.rows[i][j] for j in index] for i in index]

    def minor(self, index: Sequence[int]) -> MPoly:
        return bareiss_det(self.sub(index))

    def zero_pattern(self) -> set[tuple[int, int]]:
        size = self.n + 1
        return {(i, j) for i in range(size) for j in range(i, size) if self.rows[i][j].is_zero()}

    def __str__(self) -> str:
        cells = [[str(x) for x in r] for r in self.rows]
        width = max(len(c) for r in cells for c in r)
        return "\n".join("  ".join(c.rjust(width) for c in r) for r in cells)


def _align(entries: list[list[MPoly]], names: Sequence[str]) -> tuple[tuple[MPoly, ...], ...]:
    return tuple(tuple(e.with_vars(names) for e in row) for row in entries)


def z_matrix(n: int, subspace: str = "generic") -> SymmetricZMatrix:
    """Coefficient matrix of G = U + F for the n-gon on a kinematic subspace.

    Entries are read off as derivatives: Z[0][i] = dU/da_i, Z[i][j] = d^2F/da_i da_j.
    """
    _check_n(n)
    if subspace not in _MASSES:
        raise OneLoopError(f"unsupported subspace {subspace!r}; choose from {', '.join(SUBSPACES)}")
    internal, external = _MASSES[subspace]
    sy = symanzik(one_loop(n), internal, external)
    a = sy.vars
    params = tuple(sy.params)
    keep = lambda p: p.drop_unused()  # noqa: E731
    rows = [[MPoly() for _ in range(n + 1)] for _ in range(n + 1)]
    for i in range(1, n + 1):
        rows[0][i] = rows[i][0] = keep(sy.U.diff(a[i - 1]))
        for j in range(i, n + 1):
            rows[i][j] = rows[j][i] = keep(sy.F.diff(a[i - 1]).diff(a[j - 1]))
    return SymmetricZMatrix(n, subspace, _align(rows, params), params)


def symbolic_z(n: int, zero_diagonal: bool = False, zero_cyclic: bool = False) -> SymmetricZMatrix:
    """Z with independent symbols z_ij; optional zero patterns of the massless subspaces."""
    _check_n(n)
    names = []
    rows = [[MPoly() for _ in range(n + 1)] for _ in range(n + 1)]
    for i in range(n + 1):
        for j in range(i, n + 1):
            if i == j == 0 or (i == j and zero_diagonal):
                continue
            if zero_cyclic and i >= 1 and (j == i + 1 or (i == 1 and j == n)):
                continue
            name = f"z{i}_{j}"
            names.append(name)
            v = MPoly.var(name)
            rows[i][j] = rows[j][i] = 2 * v if i == j else v
    label = "symbolic" + ("-hat" if zero_cyclic else "-0" if zero_diagonal else "")
    return SymmetricZMatrix(n, label, _align(rows, names), tuple(names))


def bareiss_det(M: Sequence[Sequence[MPoly]]) -> MPoly:
    """Fraction-free determinant; every division is exact in the polynomial ring."""
    k = len(M)
    if k == 0:
        return MPoly.const(1)
    A = [list(r) for r in M]
    sign = 1
    prev = MPoly.const(1)
    for c in range(k - 1):
        if A[c][c].is_zero():
            swap = next((r for r in range(c + 1, k) if not A[r][c].is_zero()), None)
            if swap is None:
                return MPoly()
            A[c], A[swap] = A[swap], A[c]
            sign = -sign
        piv = A[c][c]
        for i in range(c + 1, k):
            for j in range(c + 1, k):
                num = A[i][j] * piv - A[i][c] * A[c][j]
                A[i][j] = num if prev.is_constant() and prev.constant_value() == 1 else div_exact(num, prev)
        prev = piv
    det = A[k - 1][k - 1]
    return -det if sign < 0 else det


# -- principal determinants ----------------------------------------------------------

@dataclass
class PadFactor:
    """One face discriminant: label names the face, index the rows/columns of Z used."""

    label: str
    index: tuple[int, ...]
    poly: MPoly
    exponent: int = 1

    @property
    def degree(self) -> int:
        return 0 if self.poly.is_zero() else self.poly.degree()

    @property
    def vanishes(self) -> bool:
        return self.poly.is_zero()


@dataclass
class OneLoopPAD:
    n: int
    subspace: str
    factors: list[PadFactor]
    params: tuple[str, ...]

    @property
    def degree(self) -> int:
        return sum(f.exponent * f.degree for f in self.factors)

    @property
    def identically_zero(self) -> bool:
        return any(f.vanishes for f in self.factors)

    def factor(self, label: str) -> PadFactor:
        for f in self.factors:
            if f.label == label:
                return f
        raise KeyError(label)

    def radical(self) -> MPoly:
        """Square-free product of the non-constant factors (the zero set)."""
        parts = [f.poly for f in self.factors if not f.vanishes and f.degree > 0]
        if not parts:
            return MPoly.const(1)
        return squarefree_product(parts)

    def table(self) -> list[str]:
        lines = [f"# one-loop n={self.n} subspace={self.subspace} degree={self.degree}"]
        for f in self.factors:
            exp = f"^{f.exponent}" if f.exponent != 1 else ""
            lines.append(f"{f.label}{exp}\tdegree {f.degree}\t{f.poly}")
        return lines


def _subsets(items: Sequence[int], sizes: range):
    for k in sizes:
        yield from itertools.combinations(items, k)


def _label(prefix: str, idx: Sequence[int]) -> str:
    return f"{prefix}({','.join(str(i) for i in idx)})"


def truncated_simplex_factors(Z: SymmetricZMatrix) -> list[PadFactor]:
    """Face discriminants of T([n]): vertices e_i, 2e_i and the faces D(I), T(I), |I| >= 2.

    Simplices S(I) and the edges T({i}) have trivial discriminants and are omitted.
    """
    n = Z.n
    out = [PadFactor(f"z0{i}", (0, i), Z[0, i]) for i in range(1, n + 1)]
    out += [PadFactor(f"z{i}{i}", (i,), Z[i, i] * Fraction(1, 2)) for i in range(1, n + 1)]
    for I in _subsets(range(1, n + 1), range(2, n + 1)):
        out.append(PadFactor(_label("D", I), I, Z.minor(I)))
    for I in _subsets(range(1, n + 1), range(2, n + 1)):
        out.append(PadFactor(_label("T", I), (0,) + I, Z.minor((0,) + I)))
    return out


def hypersimplex_factors(Z: SymmetricZMatrix) -> list[PadFactor]:
    """Zero-diagonal case: z_ij to the power n-1 times det(Z_I) for |I| >= 4."""
    n = Z.n
    out = [
        PadFactor(f"z{i}{j}", (i, j), Z[i, j], n - 1)
        for i, j in itertools.combinations(range(n + 1), 2)
    ]
    for I in _subsets(range(n + 1), range(4, n + 2)):
        out.append(PadFactor(_label("H", I), I, Z.minor(I)))
    return out


def hat_factors(Z: SymmetricZMatrix) -> list[PadFactor]:
    """Candidate product for the fully massless case: det(Z_I) over |I| >= 4."""
    return [PadFactor(_label("H", I), I, Z.minor(I)) for I in _subsets(range(Z.n + 1), range(4, Z.n + 2))]


def oneloop_pad(n: int, subspace: str = "generic", substituted: bool = True) -> OneLoopPAD:
    """Principal determinant of the n-gon as labelled face factors.

    With ``substituted=False`` the factors are polynomials in independent z_ij.
    """
    _check_n(n)
    if subspace not in _MASSES:
        raise OneLoopError(f"unsupported subspace {subspace!r}; choose from {', '.join(SUBSPACES)}")
    if subspace == "massless-internal":
        Z = z_matrix(n, subspace) if substituted else symbolic_z(n, zero_diagonal=True)
        factors = hypersimplex_factors(Z)
    elif subspace == "massless-all":
        Z = z_matrix(n, subspace) if substituted else symbolic_z(n, zero_diagonal=True, zero_cyclic=True)
        factors = hat_factors(Z)
    else:
        Z = z_matrix(n, subspace) if substituted else symbolic_z(n)
        factors = truncated_simplex_factors(Z)
    return OneLoopPAD(n, subspace, factors, Z.params)


def generic_degree(n: int) -> int:
    return (n + 1) * (2**n - 1)


def generic_substituted_degree(n: int) -> int:
    return (n - 1) * 2**n + 1


def hypersimplex_degree(n: int) -> int:
    return (n + 1) * (2**n - 1 - n)


def hypersimplex_substituted_degree(n: int) -> int:
    return (n * (n - 1) ** 2 + (n - 2) * (2**n - 1 - n) + n * (2**n - n * n + n - 2)) // 2


def truncated_simplex_f_vector(n: int) -> list[int]:
    """2n vertices; in dimension k, C(n,k+1) simplices, C(n,k+1) dilated simplices, C(n,k) truncations."""
    return [2 * n] + [2 * math.comb(n, k + 1) + math.comb(n, k) for k in range(1, n)]


def hypersimplex_f_vector(n: int) -> list[int]:
    """f-vector of the hypersimplex {1 <= sum <= 2} in [0,1]^n."""
    return [math.comb(n + 1, 2), math.comb(n + 1, 2) * (n - 1)] + [
        math.comb(n + 1, k + 1) * (n - k + 1) for k in range(2, n)
    ]


def nonvanishing_values(pad: OneLoopPAD, labels_from: int = 2) -> dict[str, Fraction]:
    """Minors with |I| >= labels_from evaluated at zero internal masses and unit invariants."""
    point = {p: (Fraction(0) if p.startswith("m") else Fraction(1)) for p in pad.params}
    out = {}
    for f in pad.factors:
        size = len([i for i in f.index if i != 0])
        if f.label[0] in "DTH" and size >= labels_from:
            out[f.label] = f.poly.evaluate(point)
    return out


# -- Kallen function -----------------------------------------------------------------

def kallen(a, b, c) -> MPoly:
    """a^2 + b^2 + c^2 - 2ab - 2bc - 2ca."""
    a, b, c = (x if isinstance(x, MPoly) else parse(str(x)) for x in (a, b, c))
    return a * a + b * b + c * c - 2 * a * b - 2 * b * c - 2 * c * a


# -- banana diagrams --------------------------------------------------------------------

@dataclass
class BananaStats:
    """|chi| and volume of the generic banana plus the massless ML critical point.

    ``ml_point[e]`` is a pair (numerator, denominator) in the symbols mu, nu1..nuE, s.
    """

    E: int
    chi: int
    vol: int
    ml_point: list[tuple[MPoly, MPoly]]
    verified: bool | None = None
    residuals: list[MPoly] = field(default_factory=list, repr=False)


def banana_ml_point(E: int) -> list[tuple[MPoly, MPoly]]:
    mu = MPoly.var("mu")
    nus = [MPoly.var(f"nu{e}") for e in range(1, E + 1)]
    s = MPoly.var("s")
    total = (E - 1) * mu
    for nu in nus:
        total = total + nu
    return [(-total, s * (mu + nu)) for nu in nus]


def massless_banana_polynomial(E: int) -> tuple[MPoly, list[str]]:
    sy = symanzik(banana(E), "zero", "generic")
    return sy.G, sy.vars


def banana_critical_residuals(E: int) -> list[MPoly]:
    """nu_e G + mu a_e dG/da_e at the closed-form point, with denominators cleared.

    A monomial prod a_e^k_e becomes N^|k| / (s^|k| prod D_e^k_e); multiplying by
    (s prod D_e)^d, d the top degree, keeps everything polynomial.
    """
    G, vars = massless_banana_polynomial(E)
    point = banana_ml_point(E)
    N = point[0][0]
    s = MPoly.var("s")
    mu = MPoly.var("mu")
    D = [mu + MPoly.var(f"nu{e}") for e in range(1, E + 1)]
    out = []
    for e, x in enumerate(vars, start=1):
        eq = MPoly.var(f"nu{e}") * G + mu * MPoly.var(x) * G.diff(x)
        d = eq.degree_in(vars)
        total = MPoly()
        for exps, c in eq.terms.items():
            coef = MPoly.const(c)
            k = 0
            for v, p in zip(eq.vars, exps):
                if v in vars:
                    k += p
                else:
                    coef = coef * MPoly.var(v) ** p
            term = coef * N**k * s ** (d - k)
            for j, v in enumerate(vars):
                kj = exps[eq.vars.index(v)] if v in eq.vars else 0
                term = term * D[j] ** (d - kj)
            total = total + term
        out.append(total)
    return out


def banana_stats(E: int, verify: bool | None = None) -> BananaStats:
    if not isinstance(E, int) or E < 2:
        raise OneLoopError(f"banana needs E >= 2 edges, got {E!r}")
    stats = BananaStats(E, 2**E - 1, math.comb(2 * E - 1, E), banana_ml_point(E))
    if verify if verify is not None else E <= 4:
        stats.residuals = banana_critical_residuals(E)
        stats.verified = all(r.is_zero() for r in stats.residuals)
    return stats


# -- massless conjecture check -----------------------------------------------------------

@dataclass
class A00Report:
    n: int
    facets: list[tuple[tuple[int, ...], int]]
    expected_facets: list[tuple[tuple[int, ...], int]]
    factors: list[tuple[str, MPoly, str]]
    components: list[tuple[MPoly, bool]]

    @property
    def facets_match(self) -> bool:
        return sorted(self.facets) == sorted(self.expected_facets)

    @property
    def agree(self) -> bool:
        return all(v in ("agree", "constant") for _, _, v in self.factors) and all(c for _, c in self.components)

    def lines(self) -> list[str]:
        out = [f"# massless n={self.n}: {len(self.facets)} facets, inequalities match: {self.facets_match}"]
        out += [f"{lab}\t{verdict}\t{p}" for lab, p, verdict in self.factors]
        out += [f"component {p}\t{'covered' if ok else 'uncovered'}" for p, ok in self.components]
        return out


def massless_facets(n: int) -> list[tuple[tuple[int, ...], int]]:
    """The inequality list <w, a> >= c expected for the fully massless n-gon polytope."""
    out = []
    for i in range(n):
        w = [0] * n
        w[i] = 1
        out.append((tuple(w), 0))
        w = [0] * n
        w[i] = w[(i + 1) % n] = -1
        out.append((tuple(w), -1))
    out.append(((1,) * n, 1))
    if n >= 5:
        out.append(((-1,) * n, -2))
    return out


def _relative_value(p: MPoly, point: dict[str, complex]) -> float:
    val = p.eval_complex(point)
    scale = 0.0
    for exps, c in p.terms.items():
        t = abs(complex(c))
        for v, k in zip(p.vars, exps):
            t *= abs(point[v]) ** k
        scale += t
    return abs(val) / scale if scale else abs(val)


def conjecture_a00_check(n: int, points: int = 50, seed: int = 0, tol: float = 1e-7, pld=None) -> A00Report:
    """Compare the candidate minor product on the fully massless subspace with a numeric PLD.

    A factor agrees when it vanishes on every sample of some computed component; a
    component is covered when some candidate factor vanishes on it.
    """
    from .elim import get_pld, point_on_hypersurface

    _check_n(n, 4)
    sy = symanzik(one_loop(n), "zero", "zero")
    P = newton_polytope(sy.G, sy.vars)
    pad = oneloop_pad(n, "massless-all")
    if pld is None:
        pld = get_pld(one_loop(n), "zero", "zero", method="num")
    comps = [c.delta for c in pld.components]
    rng = np.random.default_rng(seed)
    params = list(pld.params)
    samples = []
    for c in comps:
        pts = [point_on_hypersurface(c, params, rng) for _ in range(points)]
        samples.append([dict(zip(params, x)) for x in pts])

    def vanishes_on(p: MPoly, k: int) -> bool:
        return all(_relative_value(p, pt) <= tol for pt in samples[k])

    factors = []
    covered = [False] * len(comps)
    for f in pad.factors:
        if f.vanishes:
            factors.append((f.label, f.poly, "vanishes-identically"))
            continue
        if f.degree == 0:
            factors.append((f.label, f.poly, "constant"))
            continue
        hits = [k for k in range(len(comps)) if vanishes_on(f.poly, k)]
        for k in hits:
            covered[k] = True
        factors.append((f.label, f.poly, "agree" if hits else "disagree"))
    return A00Report(
        n,
        [(tuple(w), c) for w, c in P.facets],
        massless_facets(n),
        factors,
        list(zip(comps, covered)),
    )


__all__ = [
    "SUBSPACES",
    "OneLoopError",
    "SymmetricZMatrix",
    "z_matrix",
    "symbolic_z",
    "bareiss_det",
    "PadFactor",
    "OneLoopPAD",
    "oneloop_pad",
    "truncated_simplex_factors",
    "hypersimplex_factors",
    "hat_factors",
    "generic_degree",
    "generic_substituted_degree",
    "hypersimplex_degree",
    "hypersimplex_substituted_degree",
    "truncated_simplex_f_vector",
    "hypersimplex_f_vector",
    "nonvanishing_values",
    "kallen",
    "BananaStats",
    "banana_ml_point",
    "banana_critical_residuals",
    "banana_stats",
    "A00Report",
    "massless_facets",
    "conjecture_a00_check",
]
