"""Exact lattice polytopes: facets, face lattice, weights, volumes.

Convex hulls use an integer double-description method on the cone over the
points, so all normals and offsets are exact.  Points that span a proper affine
subspace are first written in coordinates of the lattice generated by their
differences (via a Hermite basis); facet normals are lifted back to the ambient
space inside the span of that lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from .ratpoly import MPoly

IntVec = tuple[int, ...]


class PolytopeError(ValueError):
    pass


# -- integer linear algebra -----------------------------------------------------

def _primitive(v: Sequence[int]) -> IntVec:
    g = reduce(math.gcd, (abs(x) for x in v), 0)
    return tuple(x // g for x in v) if g > 1 else tuple(v)


def _frac_primitive(v: Sequence[Fraction]) -> IntVec:
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in v), 1)
    return _primitive([int(x * den) for x in v])


def hermite_basis(vectors: Sequence[Sequence[int]]) -> list[IntVec]:
    """Row-style Hermite basis of the integer span of ``vectors``."""
    rows = [list(v) for v in vectors if any(v)]
    if not rows:
        return []
    ncol = len(rows[0])
    basis: list[list[int]] = []
    col = 0
    while rows and col < ncol:
        nz = [r for r in rows if r[col] != 0]
        if not nz:
            col += 1
            continue
        # Euclid on column entries until one row keeps a nonzero entry
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            piv = nz[0]
            for r in nz[1:]:
                q = r[col] // piv[col]
                for j in range(ncol):
                    r[j] -= q * piv[j]
            nz = [r for r in nz if r[col] != 0]
        piv = nz[0]
        if piv[col] < 0:
            piv[:] = [-x for x in piv]
        basis.append(piv)
        rows = [r for r in rows if r is not piv and any(r)]
        col += 1
    # reduce entries above pivots
    for i, b in enumerate(basis):
        p = next(j for j, x in enumerate(b) if x)
        for a in basis[:i]:
            q = a[p] // b[p]
            if q:
                for j in range(ncol):
                    a[j] -= q * b[j]
    return [tuple(b) for b in basis]


def _coords_in_basis(basis: Sequence[IntVec], v: Sequence[int]) -> IntVec:
    """Integer coordinates of v in an echelon basis; raises if v is outside the lattice."""
    rest = list(v)
    out = []
    for b in basis:
        p = next(j for j, x in enumerate(b) if x)
        if rest[p] % b[p]:
            raise PolytopeError("vector outside the lattice")
        q = rest[p] // b[p]
        out.append(q)
        if q:
            rest = [x - q * y for x, y in zip(rest, b)]
    if any(rest):
        raise PolytopeError("vector outside the lattice")
    return tuple(out)


def int_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free elimination."""
    m = [list(r) for r in rows if any(r)]
    if not m:
        return 0
    rank = 0
    ncol = len(m[0])
    for c in range(ncol):
        piv = next((i for i in range(rank, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pr = m[rank]
        for i in range(rank + 1, len(m)):
            if m[i][c]:
                f, g = m[i][c], pr[c]
                m[i] = [g * x - f * y for x, y in zip(m[i], pr)]
                gg = reduce(math.gcd, (abs(x) for x in m[i]), 0)
                if gg > 1:
                    m[i] = [x // gg for x in m[i]]
        rank += 1
        if rank == len(m):
            break
    return rank


def int_det(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant by Bareiss elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if m[i][k]), None)
            if sw is None:
                return 0
            m[k], m[sw] = m[sw], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def _solve_frac(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for c in range(n):
        piv = next(i for i in range(c, n) if m[i][c] != 0)
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [x * inv for x in m[c]]
        for i in range(n):
            if i != c and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return [m[i][n] for i in range(n)]


# -- double description ---------------------------------------------------------

def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def _dd_facets(hpts: list[IntVec]) -> list[IntVec]:
    """Extreme rays of {a : a.h >= 0 for all h}, for a full-rank list of vectors h."""
    d = len(hpts[0])
    # pick d linearly independent rows for the initial simplex
    chosen: list[int] = []
    for i in range(len(hpts)):
        if int_rank([hpts[j] for j in chosen + [i]]) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == d:
                break
    if len(chosen) < d:
        raise PolytopeError("points are not full-dimensional in their lattice")
    mat = [[Fraction(x) for x in hpts[i]] for i in chosen]
    rays: list[IntVec] = []
    for j in range(d):
        e = [Fraction(int(k == j)) for k in range(d)]
        rays.append(_frac_primitive(_solve_frac(mat, e)))
    order = chosen + [i for i in range(len(hpts)) if i not in chosen]
    zeros = []
    for r in rays:
        z = 0
        for i in chosen:
            if _dot(r, hpts[i]) == 0:
                z |= 1 << i
        zeros.append(z)
    for i in order[d:]:
        h = hpts[i]
        vals = [_dot(r, h) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        if not neg:
            for k, v in enumerate(vals):
                if v == 0:
                    zeros[k] |= 1 << i
            continue
        new_rays, new_zeros = [], []
        for p in pos:
            for n in neg:
                common = zeros[p] & zeros[n]
                if bin(common).count("1") < d - 2:
                    continue
                if any(k != p and k != n and (zeros[k] & common) == common for k in range(len(rays))):
                    continue
                r = _primitive([vals[p] * x - vals[n] * y for x, y in zip(rays[n], rays[p])])
                new_rays.append(r)
                new_zeros.append(common | (1 << i))
        keep = [k for k, v in enumerate(vals) if v >= 0]
        rays = [rays[k] for k in keep] + new_rays
        zeros = [zeros[k] | ((1 << i) if vals[k] == 0 else 0) for k in keep] + new_zeros
    return rays


# -- polytopes ------------------------------------------------------------------

@dataclass
class Face:
    mask: int
    dim: int
    facets: tuple[int, ...]


@dataclass
class LatticePolytope:
    """Convex hull of integer points with exact facets and face lattice.

    Facets are pairs (primitive normal w, offset c) with <w, x> >= c on the polytope.
    """

    points: list[IntVec]
    dim: int
    facets: list[tuple[IntVec, int]]
    vertices: list[int]
    faces: list[Face] = field(repr=False)
    coords: list[IntVec] = field(repr=False)

    @property
    def ambient_dim(self) -> int:
        return len(self.points[0])

    def face_points(self, face: Face) -> list[int]:
        return [i for i in range(len(self.points)) if face.mask >> i & 1]


def _affine_dim(coords: Sequence[IntVec], mask: int) -> int:
    idx = [i for i in range(len(coords)) if mask >> i & 1]
    if not idx:
        return -1
    base = coords[idx[0]]
    return int_rank([[a - b for a, b in zip(coords[i], base)] for i in idx[1:]])


def convex_hull(points: Iterable[Sequence[int]]) -> LatticePolytope:
    pts: list[IntVec] = []
    seen = set()
    for p in points:
        t = tuple(int(x) for x in p)
        if t not in seen:
            seen.add(t)
            pts.append(t)
    if not pts:
        raise PolytopeError("empty point set")
    base = pts[0]
    diffs = [tuple(a - b for a, b in zip(p, base)) for p in pts]
    basis = hermite_basis(diffs)
    k = len(basis)
    coords = [_coords_in_basis(basis, d) for d in diffs]
    npts = len(pts)
    full = (1 << npts) - 1
    if k == 0:
        face = Face(full, 0, ())
        return LatticePolytope(pts, 0, [], [0], [face], coords)
    hpts = [(1,) + c for c in coords]
    rays = _dd_facets(hpts)
    # lift each facet normal a (in lattice coordinates) into the span of the basis
    gram = [[Fraction(_dot(bi, bj)) for bj in basis] for bi in basis]
    facets: list[tuple[IntVec, int]] = []
    facet_masks: list[int] = []
    for r in rays:
        a = r[1:]
        lam = _solve_frac(gram, [Fraction(x) for x in a])
        w = _frac_primitive([sum(l * b[j] for l, b in zip(lam, basis)) for j in range(len(base))])
        c = min(_dot(w, p) for p in pts)
        mask = 0
        for i, p in enumerate(pts):
            if _dot(w, p) == c:
                mask |= 1 << i
        facets.append((w, c))
        facet_masks.append(mask)
    # face lattice by closing facet point sets under intersection
    found: dict[int, tuple[int, ...]] = {full: ()}
    level = {}
    for j, m in enumerate(facet_masks):
        level.setdefault(m, set()).add(j)
    while level:
        nxt = {}
        for m in level:
            cont = tuple(j for j, fm in enumerate(facet_masks) if fm & m == m)
            if m in found:
                continue
            found[m] = cont
            for j, fm in enumerate(facet_masks):
                if fm & m != m:
                    inter = fm & m
                    if inter and inter not in found:
                        nxt.setdefault(inter, set())
        level = nxt
    faces = [Face(m, _affine_dim(coords, m), cont) for m, cont in found.items()]
    faces.sort(key=lambda f: (-f.dim, f.mask))
    vertices = sorted(next(i for i in range(npts) if f.mask >> i & 1) for f in faces if f.dim == 0)
    return LatticePolytope(pts, k, facets, vertices, faces, coords)


def newton_polytope(p: MPoly, vars: Sequence[str] | None = None) -> LatticePolytope:
    """Newton polytope of p with respect to ``vars`` (default: all its variables)."""
    if p.is_zero():
        raise PolytopeError("the zero polynomial has no Newton polytope")
    return convex_hull(support(p, vars))


def support(p: MPoly, vars: Sequence[str] | None = None) -> list[IntVec]:
    vars = list(p.vars) if vars is None else list(vars)
    idx = [p.vars.index(v) if v in p.vars else None for v in vars]
    out, seen = [], set()
    for e in sorted(p.terms):
        t = tuple(e[i] if i is not None else 0 for i in idx)
        if t not in seen:
            seen.add(t)
            out.append(t)
    return sorted(out)


def f_vector(P: LatticePolytope) -> list[int]:
    counts = [0] * P.dim
    for f in P.faces:
        if 0 <= f.dim < P.dim:
            counts[f.dim] += 1
    return counts


# -- weights and initial forms --------------------------------------------------

@dataclass(frozen=True)
class FaceDescriptor:
    weight: IntVec
    codim: int
    point_indices: tuple[int, ...]
    face_id: tuple[int, int]
    dim: int = 0


def face_weights(P: LatticePolytope) -> list[FaceDescriptor]:
    """One descriptor per face, ordered by codim then weight; the dense face has weight 0."""
    amb = P.ambient_dim
    by_codim: dict[int, list[tuple[IntVec, tuple[int, ...], int]]] = {}
    for f in P.faces:
        w = [0] * amb
        for j in f.facets:
            w = [a + b for a, b in zip(w, P.facets[j][0])]
        by_codim.setdefault(P.dim - f.dim, []).append((tuple(w), tuple(P.face_points(f)), f.dim))
    out = []
    for codim in sorted(by_codim):
        for k, (w, pts, dim) in enumerate(sorted(by_codim[codim]), start=1):
            out.append(FaceDescriptor(w, codim, pts, (codim, k), dim))
    return out


def initial_form(p: MPoly, w: Sequence[int], vars: Sequence[str]) -> MPoly:
    """Terms of p minimizing <w, exponent in vars>; other variables are coefficients."""
    if len(w) != len(vars):
        raise PolytopeError(f"weight has length {len(w)}, expected {len(vars)}")
    if p.is_zero():
        return p
    idx = [p.vars.index(v) if v in p.vars else None for v in vars]

    def val(e):
        return sum(wi * e[i] for wi, i in zip(w, idx) if i is not None)

    best = min(val(e) for e in p.terms)
    return MPoly._raw(p.vars, {e: c for e, c in p.terms.items() if val(e) == best})


# -- volume ---------------------------------------------------------------------

def normalized_volume(P: LatticePolytope) -> int:
    """dim! times the Euclidean volume, measured in the lattice spanned by the point differences."""
    if P.dim == 0:
        return 1
    faces_by_mask = {f.mask: f for f in P.faces}
    subfacets: dict[int, list[int]] = {}

    def facets_of(mask: int, dim: int) -> list[int]:
        if mask not in subfacets:
            subfacets[mask] = [
                f.mask for f in P.faces if f.dim == dim - 1 and f.mask & mask == f.mask and f.mask != mask
            ]
        return subfacets[mask]

    vset = set(P.vertices)
    memo: dict[int, list[tuple[int, ...]]] = {}

    def triangulate(mask: int) -> list[tuple[int, ...]]:
        if mask in memo:
            return memo[mask]
        face = faces_by_mask[mask]
        verts = [i for i in range(len(P.points)) if mask >> i & 1 and i in vset]
        if face.dim == 0:
            out = [(verts[0],)]
        else:
            apex = verts[0]
            out = []
            for sub in facets_of(mask, face.dim):
                if not sub >> apex & 1:
                    out.extend((apex,) + s for s in triangulate(sub))
        memo[mask] = out
        return out

    full = max(faces_by_mask, key=lambda m: faces_by_mask[m].dim)
    total = 0
    for simplex in triangulate(full):
        base = P.coords[simplex[0]]
        rows = [[a - b for a, b in zip(P.coords[i], base)] for i in simplex[1:]]
        total += abs(int_det(rows))
    return total
