from __future__ import annotations

import itertools

import numpy as np
import pytest

from landau.graphs import (
    LIBRARY,
    DiagramSpec,
    FeynmanGraph,
    GraphError,
    banana,
    contract,
    contracted_masses,
    feynman_rep,
    first_symanzik,
    library_spec,
    one_loop,
    parachute,
    subgraph_u,
    symanzik,
    torus_exponent_matrix,
)
from landau.polytope import initial_form, int_det, support
from landau.ratpoly import MPoly, parse

SMALL = [name for name, (make, _, _) in LIBRARY.items() if make().E <= 5]


def _brute_force_trees(g: FeynmanGraph) -> int:
    verts = g.vertices
    count = 0
    for sub in itertools.combinations(range(g.E), len(verts) - 1):
        parent = {v: v for v in verts}

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        ok = True
        for i in sub:
            a, b = (find(x) for x in g.edges[i])
            if a == b:
                ok = False
                break
            parent[a] = b
        count += ok
    return count


@pytest.mark.parametrize("name", sorted(LIBRARY))
def test_first_symanzik_counts_spanning_trees(name):
    g = LIBRARY[name][0]()
    U = first_symanzik(g)
    assert all(c == 1 for c in U.coefficients())
    assert len(U) == _brute_force_trees(g)


@pytest.mark.parametrize("name", sorted(LIBRARY))
def test_symanzik_degrees_and_homogeneity(name):
    sy = library_spec(name).symanzik()
    L = sy.graph.loops
    assert sy.U.is_homogeneous(sy.vars) and sy.U.degree_in(sy.vars) == L
    assert sy.F.is_homogeneous(sy.vars) and sy.F.degree_in(sy.vars) == L + 1


def test_banana_three_graph_polynomial():
    sy = symanzik(banana(3))
    assert sy.U == parse("x1*x2 + x1*x3 + x2*x3").with_vars(sy.U.vars)
    expected = parse("(1 - m1*x1 - m2*x2 - m3*x3)*(x1*x2 + x1*x3 + x2*x3) + s*x1*x2*x3")
    assert sy.G == expected


def test_parachute_polynomials():
    sy = symanzik(parachute())
    assert sy.U == parse("(x1 + x2)*(x3 + x4) + x3*x4")
    mass = parse("m1*x1 + m2*x2 + m3*x3 + m4*x4")
    F = parse("s*x1*x2*(x3 + x4) + M4*x1*x3*x4 + M3*x2*x3*x4") - mass * sy.U
    assert sy.F == F
    assert sy.params == ["M3", "M4", "m1", "m2", "m3", "m4", "s"]


def test_bubble_polynomials():
    sy = symanzik(one_loop(2))
    assert sy.U == parse("x1 + x2")
    assert sy.F == parse("(s - m1 - m2)*x1*x2 - m1*x1^2 - m2*x2^2")


def test_box_uses_s_and_t():
    sy = symanzik(one_loop(4))
    assert sy.params == ["M1", "M2", "M3", "M4", "m1", "m2", "m3", "m4", "s", "t"]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_zero_external_masses_keep_support(n):
    generic = symanzik(one_loop(n)).G
    zero = symanzik(one_loop(n), "generic", "zero").G
    vars = [f"x{i}" for i in range(1, n + 1)]
    assert support(generic, vars) == support(zero, vars)


def test_vertex_relabelling_does_not_change_f():
    g = parachute()
    perm = {1: 7, 2: 5, 3: 9}
    h = FeynmanGraph(tuple((perm[a], perm[b]) for a, b in g.edges), tuple(perm[v] for v in g.nodes))
    assert symanzik(g).F == symanzik(h).F


@pytest.mark.parametrize("name", SMALL)
def test_single_edge_contraction_is_leading_order(name):
    """Scaling x_e -> eps*x_e: the eps^0 part of G is the graph polynomial of G/e."""
    spec = library_spec(name)
    sy = spec.symanzik()
    g = sy.graph
    for e in range(1, g.E + 1):
        if g.edges[e - 1][0] == g.edges[e - 1][1]:
            continue
        x = sy.vars[e - 1]
        lowest = sy.G.coeffs_in(x)
        leading = lowest[min(lowest)]
        small = contract(g, [e])
        masses = contracted_masses(sy.internal, [e])
        ext = "generic" if g.n == 2 else [str(m) for m in sy.external]
        Gc = symanzik(small, masses, ext).G
        assert leading == Gc, (name, e)


def test_bubble_subdiagram_factorization_on_parachute():
    sy = symanzik(parachute())
    gamma = [3, 4]
    eps = MPoly.var("eps")
    scaled = sy.G.subs({"x3": eps * MPoly.var("y3"), "x4": eps * MPoly.var("y4")})
    coeffs = scaled.coeffs_in("eps")
    lead = coeffs[min(coeffs)].subs({"y3": MPoly.var("x3"), "y4": MPoly.var("x4")})
    Ug = subgraph_u([parachute().edges[e - 1] for e in gamma], gamma)
    Gc = symanzik(contract(parachute(), gamma), contracted_masses(sy.internal, gamma), [str(m) for m in sy.external]).G
    assert lead == Ug * Gc
    assert initial_form(sy.G, [0, 0, 1, 1], sy.vars) == Ug * Gc


def test_banana_u_of_two_edges():
    assert first_symanzik(banana(2)) == parse("x1 + x2")


def test_contract_loop_count():
    g = parachute()
    small = contract(g, [3, 4])
    assert small.loops == g.loops - 1
    with pytest.raises(GraphError):
        contract(g, [1, 2, 3, 4])


def test_feynman_rep_pullback_identity():
    sy = symanzik(banana(3))
    rep = feynman_rep(sy.U, sy.F, sy.vars)
    assert rep.Ubar == parse("x1*x2 + x1 + x2").with_vars(rep.Ubar.vars)
    rng = np.random.default_rng(3)
    L = sy.graph.loops
    for _ in range(20):
        xb = rng.normal(size=2) + 1j * rng.normal(size=2)
        y = complex(rng.normal() + 1j * rng.normal())
        kin = {p: complex(rng.normal() + 1j * rng.normal()) for p in sy.params}
        lhs = sy.G.eval_complex({"x1": y * xb[0], "x2": y * xb[1], "x3": y, **kin})
        rhs = y**L * rep.H.eval_complex({"x1": xb[0], "x2": xb[1], "y": y, **kin})
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@pytest.mark.parametrize("E", [2, 3, 5, 7])
def test_torus_change_is_unimodular(E):
    assert int_det(torus_exponent_matrix(E)) == 1


def test_feynman_rep_rejects_inhomogeneous():
    with pytest.raises(GraphError):
        feynman_rep(parse("x1 + x2^2"), parse("x1*x2"), ["x1", "x2"])


def test_errors():
    with pytest.raises(GraphError):
        FeynmanGraph(((1, 2), (3, 4)), (1, 3))
    with pytest.raises(GraphError):
        symanzik(banana(3), ["m1", "m2"])
    with pytest.raises(GraphError):
        DiagramSpec.from_dict({"edges": [[1, 2]]})


def test_custom_masses_accept_zero_and_repeats():
    spec = library_spec("outer-dbox")
    sy = spec.symanzik()
    assert sy.params == ["m2", "s", "t"]
    assert [str(m) for m in sy.internal] == ["m2"] * 6 + ["0"]


def test_spec_round_trip():
    spec = DiagramSpec(parachute(), "generic", "generic", {"s": "0", "m1": "0"})
    again = DiagramSpec.from_dict(spec.to_dict())
    assert again.symanzik().G == spec.symanzik().G
