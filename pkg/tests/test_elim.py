from __future__ import annotations

import pytest

from landau.elim import (
    ElimError,
    build_incidence,
    chi_on_hypersurface,
    get_pld,
    groebner_eliminate,
    project_codim1,
    specialized_pad,
    split_known,
    threshold_presentation,
)
from landau.graphs import banana, symanzik
from landau.numeric import EulerCharConfig, euler_characteristic
from landau.oneloop import kallen
from landau.polytope import face_weights, newton_polytope
from landau.ratpoly import MPoly, parse


def _normal_set(polys):
    return {str(p.normalized()) for p in polys}


def test_incidence_system_of_dense_face():
    sy = symanzik(banana(3))
    dense = face_weights(newton_polytope(sy.G, sy.vars))[0]
    inc = build_incidence(sy.G, dense)
    assert inc.vars == ["x1", "x2", "x3", "y"]
    assert inc.params == ["m1", "m2", "m3", "s"]
    assert inc.initial == sy.G
    assert len(inc.equations) == 5
    assert inc.equations[1] == sy.G.diff("x1")
    assert inc.equations[-1] == parse("y*x1*x2*x3 - 1")


def test_incidence_of_f_face_is_second_symanzik():
    sy = symanzik(banana(3))
    faces = face_weights(newton_polytope(sy.G, sy.vars))
    f_face = next(f for f in faces if f.weight == (-1, -1, -1))
    assert build_incidence(sy.G, f_face).initial == sy.F


def test_incidence_rejects_wrong_weight_length():
    sy = symanzik(banana(3))
    dense = face_weights(newton_polytope(sy.G, sy.vars))[0]
    with pytest.raises(ElimError):
        build_incidence(sy.G, dense, vars=["x1", "x2"])


def test_nodal_cubic_numeric_and_groebner():
    f = parse("x^3 + z*x + 1")
    pr = project_codim1([f, f.diff("x")], ["z"], ["x"])
    assert pr.deltas == [parse("4*z^3 + 27")] and pr.trusted == [True]
    elim = groebner_eliminate([f, f.diff("x")], ["x"])
    assert _normal_set(elim) == {"4*z^3 + 27"}


def test_quadratic_discriminant():
    g = parse("x^2 + a*x + b")
    pr = project_codim1([g, g.diff("x")], ["a", "b"], ["x"])
    assert _normal_set(pr.good()) == {"a^2 - 4*b"}


def test_projection_of_a_reducible_curve_family():
    q1 = "(z1^2 + z2^2 - 3*al)"
    q2 = "(z1^2 - z2 + 2)"
    fs = [
        f"{q1}*(z1^2*al - 2*z1*z2^2 + 4*z1*z2*al + 2*z1*z2 + z1*al^2 - 3*z1*al - 4*z2^3 - z2^2*al + 6*z2^2"
        f" + 2*z2*al^2 - z2*al - 2*z2 - 2*al^2 + 2*al)*{q2}",
        f"{q1}*z2*(z1 + z2 + al - 1)*{q2}*(z1 - z2 + al - 1)",
        f"{q1}*(z1 + z2 + al - 1)*(z1 - 2)*{q2}*(z1 - z2 + al - 1)",
        f"{q1}*(2*z1^2*al^2 - z1^2*al - 4*z1^2 + 6*z1*z2^2 - 4*z1*z2*al - 10*z1*z2 - 3*z1*al^2 - z1*al + 12*z1"
        f" + 2*z2^2*al^2 + z2^2*al - 6*z2^2 - 4*z2*al^2 + z2*al + 14*z2 - 2*al^2 + 6*al - 8)*{q2}",
    ]
    pr = project_codim1([parse(x) for x in fs], ["z1", "z2"], ["al"])
    assert pr.dominant
    assert _normal_set(pr.good()) == _normal_set(
        [parse("z1^2 + z2^2 - 2*z1 - 2*z2 + 1"), parse("z1^2 + z2^2 - 1"), parse("z1^2 - z2 + 2")]
    )


def test_unit_square_principal_a_determinant():
    p = parse("z1 + z2*x + z3*y + z4*x*y")
    comps = specialized_pad(p, ["z1", "z2", "z3", "z4"], ["x", "y"])
    assert _normal_set(c.delta for c in comps) == {"z1", "z2", "z3", "z4", "z1*z4 - z2*z3"}


def test_single_term_gives_its_coefficient():
    comps = specialized_pad(parse("z*x*y"), ["z"], ["x", "y"])
    assert _normal_set(c.delta for c in comps) == {"z"}


@pytest.mark.parametrize("method", ["num", "sym"])
def test_coefficient_family_with_a_linear_factor(method):
    p = parse("(1 + al1)*(a + b*al1 + c*al2 + d*al1*al2)")
    comps = specialized_pad(p, ["a", "b", "c", "d"], ["al1", "al2"], method=method)
    assert _normal_set(c.delta for c in comps) == {"a", "b", "c", "d", "a - b", "c - d", "a*d - b*c"}


def test_bubble_numeric_and_symbolic_agree():
    num = get_pld(banana(2), method="num")
    sym = get_pld(banana(2), method="sym")
    lam = kallen("s", "m1", "m2")
    assert _normal_set(num.deltas()) == _normal_set(sym.deltas()) == _normal_set(
        [parse("m1"), parse("m2"), parse("s"), lam]
    )
    assert not num.partial and not sym.partial


def test_euler_characteristic_drops_on_each_bubble_component():
    sy = symanzik(banana(2))
    res = get_pld(banana(2))
    cfg = EulerCharConfig(trials=3)
    assert res.chi_generic is None
    generic = euler_characteristic([sy.G], sy.vars, {"m1": 0.7 - 0.2j, "m2": -0.4 + 1.1j, "s": 0.9 + 0.3j}, cfg)
    assert generic == 3
    for d in res.deltas():
        assert chi_on_hypersurface(sy.G, sy.params, sy.vars, d, cfg) < generic


def test_banana_three_with_massless_edge():
    res = get_pld(banana(3), ["0", "m2", "m3"])
    assert _normal_set(res.deltas()) == _normal_set(
        [parse("m2"), parse("m3"), parse("s"), kallen("s", "m2", "m3")]
    )
    face = get_pld(banana(3), ["0", "m2", "m3"], single_weight=(-2, -1, -1))
    assert _normal_set(face.deltas()) == _normal_set([kallen("s", "m2", "m3")])


def test_threshold_presentation_of_kallen():
    lam = kallen("s", "m1", "m2")
    parts = threshold_presentation(lam, ["m1", "m2", "s"], ["m1", "m2"])
    # lambda = (s - (r1 + r2)^2) * (s - (r1 - r2)^2) with m_i = r_i^2
    assert _normal_set(parts) == _normal_set(
        [parse("s - (sqrt_m1 + sqrt_m2)^2"), parse("s - (sqrt_m1 - sqrt_m2)^2")]
    )
    prod = MPoly.const(1)
    for q in parts:
        prod = prod * q
    assert prod == lam.subs({"m1": parse("sqrt_m1^2"), "m2": parse("sqrt_m2^2")})


def test_split_known_peels_variables_and_known_factors():
    p = parse("s*m1*(s - m1 - m2)")
    parts = split_known(p, [parse("s - m1 - m2")])
    assert _normal_set(parts) == _normal_set([parse("s"), parse("m1"), parse("s - m1 - m2")])
