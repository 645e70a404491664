"""Feynman diagrams, Symanzik polynomials and kinematic subspaces.

A diagram is a list of internal edges (pairs of vertex ids) plus a list of
vertices at which the external momenta p_1, p_2, ... enter.  Edge ``i`` (1-based)
carries the Schwinger parameter ``x{label}`` and the squared mass ``m{label}``.
Subset invariants (sum of momenta)^2 are rewritten in an independent basis of
cyclic Mandelstam invariants by solving for the dot products p_i . p_j.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .ratpoly import MPoly, natural_key, parse, poly_prod, poly_sum

MassChoice = Union[str, Sequence[Union[str, int, MPoly]]]


class GraphError(ValueError):
    """Invalid diagram or mass specification."""


class _UnionFind:
    def __init__(self, items: Iterable):
        self.parent = {v: v for v in items}

    def find(self, v):
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


@dataclass(frozen=True)
class FeynmanGraph:
    """Internal edges, external attachment vertices and persistent edge labels."""

    edges: tuple[tuple[int, int], ...]
    nodes: tuple[int, ...]
    labels: tuple[int, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(1, len(self.edges) + 1)))
        if len(self.labels) != len(self.edges):
            raise GraphError("one label per edge is required")
        if not self.edges:
            raise GraphError("a diagram needs at least one internal edge")
        if not self.is_connected():
            raise GraphError("diagram is disconnected")

    @property
    def vertices(self) -> list[int]:
        vs = {v for e in self.edges for v in e} | set(self.nodes)
        return sorted(vs)

    @property
    def E(self) -> int:
        return len(self.edges)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def loops(self) -> int:
        return self.E - len(self.vertices) + 1

    def is_connected(self) -> bool:
        uf = _UnionFind(self.vertices)
        for a, b in self.edges:
            uf.union(a, b)
        return len({uf.find(v) for v in self.vertices}) == 1

    @property
    def variables(self) -> list[str]:
        return [f"x{k}" for k in self.labels]

    def to_dict(self) -> dict:
        return {"name": self.name, "edges": [list(e) for e in self.edges], "nodes": list(self.nodes)}


# -- tree enumeration ----------------------------------------------------------

def spanning_forests(edges: Sequence[tuple[int, int]], vertices: Sequence[int], components: int):
    """Yield index tuples of acyclic edge subsets with |V| - components edges."""
    size = len(vertices) - components
    if size < 0:
        return
    for subset in itertools.combinations(range(len(edges)), size):
        uf = _UnionFind(vertices)
        if all(uf.union(*edges[i]) for i in subset):
            yield subset


def _complement_monomial(vars: tuple[str, ...], chosen: Iterable[int]) -> tuple[int, ...]:
    chosen = set(chosen)
    return tuple(0 if i in chosen else 1 for i in range(len(vars)))


def first_symanzik(g: FeynmanGraph) -> MPoly:
    """U = sum over spanning trees of the product of the edges not in the tree."""
    vars = tuple(g.variables)
    terms = {}
    for tree in spanning_forests(g.edges, g.vertices, 1):
        terms[_complement_monomial(vars, tree)] = 1
    return MPoly(vars, terms)


def subgraph_u(edges: Sequence[tuple[int, int]], labels: Sequence[int]) -> MPoly:
    """U of a possibly disconnected subgraph: sum over maximal spanning forests."""
    vars = tuple(f"x{k}" for k in labels)
    verts = sorted({v for e in edges for v in e})
    uf = _UnionFind(verts)
    for a, b in edges:
        uf.union(a, b)
    comps = len({uf.find(v) for v in verts})
    terms = {_complement_monomial(vars, f): 1 for f in spanning_forests(edges, verts, comps)}
    return MPoly(vars, terms)


# -- kinematics ---------------------------------------------------------------

def _mass_list(choice: MassChoice, count: int, generic_prefix: str, equal_name: str) -> list[MPoly]:
    if isinstance(choice, str):
        key = choice.lstrip(":").lower()
        if key == "generic":
            return [MPoly.var(f"{generic_prefix}{i}") for i in range(1, count + 1)]
        if key == "equal":
            return [MPoly.var(equal_name)] * count
        if key == "zero":
            return [MPoly()] * count
        raise GraphError(f"unknown mass option {choice!r}")
    items = list(choice)
    if len(items) != count:
        raise GraphError(f"expected {count} masses, got {len(items)}")
    out = []
    for it in items:
        if isinstance(it, MPoly):
            out.append(it)
        elif isinstance(it, (int, Fraction)):
            out.append(MPoly.const(it))
        else:
            out.append(parse(str(it)))
    return out


def cyclic_invariant_name(subset: Sequence[int], n: int) -> str:
    """Basis symbol of the cyclic-consecutive invariant (sum_{i in subset} p_i)^2."""
    if n == 4:
        return "s" if set(subset) in ({1, 2}, {3, 4}) else "t"
    return "s" + "".join(str(i) for i in subset)


def _cyclic_subsets(n: int) -> list[tuple[int, ...]]:
    """Representatives of cyclic-consecutive subsets of size 2..n-2 up to complement.

    The representative is the smaller side; equal sizes go to the smaller start index.
    """
    best: dict[frozenset, tuple[tuple[int, int], tuple[int, ...]]] = {}
    full = frozenset(range(1, n + 1))
    for size in range(2, n - 1):
        for start in range(1, n + 1):
            sub = tuple((start - 1 + k) % n + 1 for k in range(size))
            key = frozenset({frozenset(sub), full - frozenset(sub)})
            rank = (size, start)
            if key not in best or rank < best[key][0]:
                best[key] = (rank, sub)
    return [v[1] for v in sorted(best.values())]


@dataclass
class KinematicSpace:
    """Momentum-invariant algebra for n external legs.

    ``invariant(S)`` returns (sum_{i in S} p_i)^2 as an MPoly in the basis symbols
    and the external squared masses.  Extra ``relations`` (symbol -> value) cut out
    a linear subspace and are applied by :meth:`restrict`.
    """

    n: int
    external: list[MPoly]
    relations: dict[str, MPoly] = field(default_factory=dict)
    _dots: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.n >= 2:
            self._solve()

    def _square(self, i: int) -> MPoly:
        return self.external[i - 1]

    def _solve(self):
        n = self.n
        if n == 2:
            # p_2 = -p_1: a single invariant s, and both legs are on shell at s
            s = MPoly.var("s")
            self.external = [s, s]
            self._dots = {(1, 1): s}
            return
        if n > 9:
            raise GraphError("at most 9 external legs are supported")
        unknowns = [(i, j) for i in range(1, n) for j in range(i + 1, n)]
        idx = {u: k for k, u in enumerate(unknowns)}
        rows: list[tuple[list[Fraction], MPoly]] = []

        def equation(subset: Sequence[int], value: MPoly):
            # (sum p_i)^2 = sum M_i + 2 sum_{i<j} p_i.p_j over a subset without n
            coeffs = [Fraction(0)] * len(unknowns)
            for a, b in itertools.combinations(sorted(subset), 2):
                coeffs[idx[(a, b)]] += 2
            rhs = value - poly_sum(self._square(i) for i in subset)
            rows.append((coeffs, rhs))

        for sub in _cyclic_subsets(n):
            use = sub if n not in sub else tuple(sorted(set(range(1, n + 1)) - set(sub)))
            equation(use, MPoly.var(cyclic_invariant_name(sub, n)))
        equation(tuple(range(1, n)), self._square(n))
        sol = _solve_linear(rows, len(unknowns))
        self._dots = {u: sol[k] for u, k in idx.items()}

    def dot(self, i: int, j: int) -> MPoly:
        if i == j:
            return self._square(i)
        a, b = min(i, j), max(i, j)
        return self._dots[(a, b)]

    def invariant(self, subset: Iterable[int]) -> MPoly:
        sub = sorted(set(subset))
        if self.n < 2 or not sub or len(sub) == self.n:
            return MPoly()
        if self.n == 2:
            return MPoly.var("s")
        if self.n in sub:
            sub = sorted(set(range(1, self.n + 1)) - set(sub))
        out = poly_sum(self._square(i) for i in sub)
        for a, b in itertools.combinations(sub, 2):
            out = out + 2 * self._dots[(a, b)]
        return out

    def restrict(self, p: MPoly) -> MPoly:
        return p.subs(self.relations) if self.relations else p


def _solve_linear(rows: list[tuple[list[Fraction], MPoly]], m: int) -> list[MPoly]:
    """Gauss-Jordan over Q with polynomial right-hand sides; square nonsingular systems."""
    a = [list(r[0]) for r in rows]
    b = [r[1] for r in rows]
    if len(a) != m:
        raise GraphError("kinematic basis does not determine all dot products")
    for col in range(m):
        piv = next((r for r in range(col, m) if a[r][col] != 0), None)
        if piv is None:
            raise GraphError("kinematic basis is degenerate")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        b[col] = b[col] * inv
        for r in range(m):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] = b[r] - b[col] * f
    return b


# -- Symanzik polynomials -----------------------------------------------------

@dataclass
class Symanzik:
    U: MPoly
    F: MPoly
    params: list[str]
    vars: list[str]
    graph: FeynmanGraph
    internal: list[MPoly]
    external: list[MPoly]

    @property
    def G(self) -> MPoly:
        return self.U + self.F


def sort_params(names: Iterable[str]) -> list[str]:
    return sorted(set(names), key=natural_key)


def symanzik(
    g: FeynmanGraph,
    internal_masses: MassChoice = "generic",
    external_masses: MassChoice = "generic",
    relations: Mapping[str, Union[MPoly, int, Fraction, str]] | None = None,
) -> Symanzik:
    """U and F of a diagram on the kinematic subspace cut out by ``relations``.

    F = F_0 - (sum_e m_e x_e) U where F_0 sums, over spanning 2-forests, the
    squared momentum flowing between the two trees times the missing edges.
    """
    internal = _mass_list(internal_masses, g.E, "m", "m")
    if g.n == 2:
        external = [MPoly.var("s")] * 2
    else:
        external = _mass_list(external_masses, g.n, "M", "M")
    rel = {k: (v if isinstance(v, MPoly) else parse(str(v))) for k, v in (relations or {}).items()}
    kin = KinematicSpace(g.n, list(external), rel)
    vars = tuple(g.variables)
    U = first_symanzik(g)
    verts = g.vertices
    at_vertex: dict[int, list[int]] = {}
    for k, v in enumerate(g.nodes, start=1):
        at_vertex.setdefault(v, []).append(k)
    F0 = MPoly(vars)
    for forest in spanning_forests(g.edges, verts, 2):
        uf = _UnionFind(verts)
        for i in forest:
            uf.union(*g.edges[i])
        root = uf.find(verts[0])
        side = [k for v in verts if uf.find(v) == root for k in at_vertex.get(v, [])]
        coeff = kin.invariant(side)
        if coeff:
            F0 = F0 + coeff * MPoly(vars, {_complement_monomial(vars, forest): 1})
    mass_term = poly_sum(m * MPoly.var(x) for m, x in zip(internal, vars))
    F = F0 - mass_term * U
    U = U.with_vars(vars)
    F = kin.restrict(F)
    used = set(F.used_vars()) - set(vars)
    params = sort_params(used)
    order = tuple(vars) + tuple(params)
    return Symanzik(U.with_vars(order), F.with_vars(order), params, list(vars), g, internal, external)


def graph_polynomial(g: FeynmanGraph, **kw) -> MPoly:
    return symanzik(g, **kw).G


# -- contraction and the Feynman representation ------------------------------

def contract(g: FeynmanGraph, subgraph_edges: Iterable[int]) -> FeynmanGraph:
    """Contract the edges with the given 1-based positions; labels are kept."""
    gamma = sorted(set(subgraph_edges))
    if not gamma:
        raise GraphError("contract needs a nonempty edge set")
    if any(not 1 <= i <= g.E for i in gamma):
        raise GraphError("edge index out of range")
    if len(gamma) == g.E:
        raise GraphError("contracting every edge leaves a degenerate graph")
    uf = _UnionFind(g.vertices)
    for i in gamma:
        uf.union(*g.edges[i - 1])
    keep = [i for i in range(1, g.E + 1) if i not in gamma]
    edges = [(uf.find(g.edges[i - 1][0]), uf.find(g.edges[i - 1][1])) for i in keep]
    nodes = [uf.find(v) for v in g.nodes]
    labels = [g.labels[i - 1] for i in keep]
    return FeynmanGraph(tuple(edges), tuple(nodes), tuple(labels), name=f"{g.name}/{gamma}")


def contracted_masses(masses: Sequence[MPoly], subgraph_edges: Iterable[int]) -> list[MPoly]:
    gamma = set(subgraph_edges)
    return [m for i, m in enumerate(masses, start=1) if i not in gamma]


@dataclass
class FeynmanRep:
    Ubar: MPoly
    Fbar: MPoly
    H: MPoly
    y: str


def feynman_rep(U: MPoly, F: MPoly, vars: Sequence[str], y: str = "y") -> FeynmanRep:
    """Dehomogenize at the last Schwinger parameter and form Ubar + y*Fbar."""
    if not U.is_homogeneous(vars) or not F.is_homogeneous(vars):
        raise GraphError("U and F must be homogeneous in the Schwinger parameters")
    if F.degree_in(vars) != U.degree_in(vars) + 1:
        raise GraphError("F must have degree deg(U) + 1")
    last = vars[-1]
    Ubar = U.subs({last: 1})
    Fbar = F.subs({last: 1})
    H = Ubar + MPoly.var(y) * Fbar
    return FeynmanRep(Ubar, Fbar, H, y)


def torus_exponent_matrix(E: int) -> list[list[int]]:
    """Exponent matrix of x_i = y*xbar_i (i < E), x_E = y in coordinates (xbar, y)."""
    rows = []
    for i in range(E):
        row = [0] * E
        if i < E - 1:
            row[i] = 1
        row[E - 1] = 1
        rows.append(row)
    return rows


# -- diagram library ---------------------------------------------------------

def banana(E: int) -> FeynmanGraph:
    if E < 1:
        raise GraphError("banana needs at least one edge")
    return FeynmanGraph(tuple((1, 2) for _ in range(E)), (1, 2), name=f"B{E}")


def one_loop(n: int) -> FeynmanGraph:
    """n-gon with edge i joining vertices i-1 and i; leg p_i enters at vertex i."""
    if n < 2:
        raise GraphError("one-loop diagrams need n >= 2")
    edges = [(n, 1)] + [(i - 1, i) for i in range(2, n + 1)]
    return FeynmanGraph(tuple(edges), tuple(range(1, n + 1)), name=f"A{n}")


def parachute() -> FeynmanGraph:
    return FeynmanGraph(((3, 1), (1, 2), (2, 3), (2, 3)), (1, 1, 2, 3), name="par")


def kite() -> FeynmanGraph:
    return FeynmanGraph(((1, 3), (3, 4), (2, 4), (1, 2), (2, 3)), (1, 1, 4, 4), name="kite")


def outer_dbox() -> FeynmanGraph:
    return FeynmanGraph(((1, 2), (2, 5), (3, 5), (3, 4), (4, 6), (1, 6), (5, 6)), (1, 2, 3, 4), name="outer-dbox")


OUTER_DBOX_MASSES = ["m2"] * 6 + [0]

LIBRARY = {
    "par": (parachute, "generic", "generic"),
    "kite": (kite, "generic", "generic"),
    "outer-dbox": (outer_dbox, OUTER_DBOX_MASSES, "zero"),
    **{f"B{E}": ((lambda E=E: banana(E)), "generic", "generic") for E in range(2, 7)},
    **{f"A{n}": ((lambda n=n: one_loop(n)), "generic", "generic") for n in range(2, 7)},
}


@dataclass
class DiagramSpec:
    """A diagram with mass choices and subspace relations (the JSON spec file)."""

    graph: FeynmanGraph
    internal_masses: MassChoice = "generic"
    external_masses: MassChoice = "generic"
    relations: dict[str, str] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.graph.name

    def symanzik(self) -> Symanzik:
        return symanzik(self.graph, self.internal_masses, self.external_masses, self.relations)

    def to_dict(self) -> dict:
        def enc(m):
            return m if isinstance(m, str) else [str(x) for x in m]

        return {
            "name": self.graph.name,
            "edges": [list(e) for e in self.graph.edges],
            "nodes": list(self.graph.nodes),
            "internal_masses": enc(self.internal_masses),
            "external_masses": enc(self.external_masses),
            "relations": {k: str(v) for k, v in self.relations.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> DiagramSpec:
        for key in ("edges", "nodes"):
            if key not in d:
                raise GraphError(f"diagram spec is missing field {key!r}")
        g = FeynmanGraph(tuple(tuple(e) for e in d["edges"]), tuple(d["nodes"]), name=d.get("name", ""))
        return cls(
            g,
            d.get("internal_masses", "generic"),
            d.get("external_masses", "generic"),
            {k: str(v) for k, v in d.get("relations", {}).items()},
        )

    @classmethod
    def load(cls, path: str) -> DiagramSpec:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GraphError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)


def library_spec(name: str) -> DiagramSpec:
    if name not in LIBRARY:
        raise GraphError(f"unknown diagram {name!r}; known: {', '.join(sorted(LIBRARY))}")
    make, im, em = LIBRARY[name]
    return DiagramSpec(make(), im, em)
