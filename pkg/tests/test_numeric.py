from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from landau.graphs import banana, parachute, symanzik
from landau.numeric import (
    EulerCharConfig,
    NumericError,
    PolySystem,
    SizeError,
    TrackerConfig,
    complex_normal,
    dedup,
    euler_characteristic,
    match,
    monodromy_solve,
    rationalize,
    solve_total_degree,
    track_parameter,
)
from landau.ratpoly import parse

KIN = {"m1": 0.3 + 0.2j, "m2": -0.7 + 0.1j, "m3": 1.1 - 0.4j, "s": 0.45 + 0.9j}


def test_circle_meets_diagonal_twice():
    sys = PolySystem([parse("x^2 + y^2 - 1"), parse("x - y")], ["x", "y"])
    res = solve_total_degree(sys)
    X = res.X[res.regular]
    assert len(X) == 2
    r = 1 / np.sqrt(2)
    got = sorted(X[:, 0].real)
    assert got == pytest.approx([-r, r], abs=1e-10)
    assert np.allclose(X[:, 0], X[:, 1], atol=1e-10)


def test_cubic_roots_satisfy_vieta():
    sys = PolySystem([parse("x^3 + a*x^2 + b*x + c")], ["x"], ["a", "b", "c"])
    q = np.array([1.5 - 0.5j, -2.0 + 1j, 0.25j])
    res = solve_total_degree(sys, q)
    roots = res.X[res.regular][:, 0]
    assert len(roots) == 3
    assert abs(roots.sum() + q[0]) < 1e-10
    assert abs(roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2] - q[1]) < 1e-10
    assert abs(roots.prod() + q[2]) < 1e-10


def test_fixed_seed_is_deterministic():
    sys = PolySystem([parse("x^2 + y^2 - 1 - p"), parse("x*y - 2")], ["x", "y"], ["p"])
    a = solve_total_degree(sys, [0.3], TrackerConfig(seed=5))
    b = solve_total_degree(sys, [0.3], TrackerConfig(seed=5))
    assert np.array_equal(a.X, b.X)


def test_parameter_tracking_follows_roots():
    sys = PolySystem([parse("x^2 - p")], ["x"], ["p"])
    X0 = np.array([[1.0 + 0j], [-1.0 + 0j]])
    res = track_parameter(sys, X0, np.array([1.0 + 0j]), np.array([4.0 + 0j]), TrackerConfig())
    assert res.regular.all()
    assert sorted(res.X[:, 0].real) == pytest.approx([-2.0, 2.0], abs=1e-10)


def test_monodromy_recovers_all_roots_from_one():
    sys = PolySystem([parse("x^4 - p")], ["x"], ["p"])
    out = monodromy_solve(sys, np.array([[1.0 + 0j]]), np.array([1.0 + 0j]), TrackerConfig(seed=2), target=4)
    assert len(out.points) == 4
    assert np.allclose(np.sort_complex(out.points[:, 0] ** 4), 1.0)


def test_dedup_and_match():
    pts = np.array([[1.0, 2.0], [1.0 + 1e-9, 2.0], [3.0, 4.0]], dtype=complex)
    assert dedup(pts) == [0, 2]
    assert list(match(np.array([[3.0, 4.0], [9.0, 9.0]], dtype=complex), pts[[0, 2]])) == [1, -1]


def test_bezout_limit():
    sys = PolySystem([parse("x^9 - 1"), parse("y^9 - 1")], ["x", "y"])
    with pytest.raises(SizeError):
        solve_total_degree(sys, max_paths=10)


def test_non_square_rejected():
    sys = PolySystem([parse("x - y")], ["x", "y"])
    with pytest.raises(NumericError):
        solve_total_degree(sys)


@pytest.mark.parametrize(
    ("x", "tol", "expected"),
    [
        (0.25, 1e-8, Fraction(1, 4)),
        (0.333333333, 1e-8, Fraction(1, 3)),
        (0.1234, 1e-12, Fraction(617, 5000)),
        (-0.24999999997, 1e-8, Fraction(-1, 4)),
        (2.0, 1e-8, Fraction(2)),
    ],
)
def test_rationalize(x, tol, expected):
    assert rationalize(x, tol) == expected


def test_rationalize_rejects_nan():
    with pytest.raises(ValueError):
        rationalize(float("nan"))


def test_euler_characteristic_of_line_complement():
    # C* minus one point
    assert euler_characteristic([parse("x - 2")], ["x"]) == 1
    # (C*)^2 minus a generic line: -chi = 1
    assert euler_characteristic([parse("1 + x + y")], ["x", "y"]) == 1


def test_euler_characteristic_banana_three():
    sy = symanzik(banana(3))
    cfg = EulerCharConfig(trials=3)
    chi_g = euler_characteristic([sy.G], sy.vars, KIN, cfg)
    assert chi_g == 7
    # dehomogenizing x3 = 1: the complement of U*F in one dimension fewer has the same count
    one = {"x3": 1}
    assert euler_characteristic([sy.U.subs(one), sy.F.subs(one)], ["x1", "x2"], KIN, cfg) == chi_g


def test_euler_characteristic_parachute_dehomogenized():
    sy = symanzik(parachute())
    rng = np.random.default_rng(4)
    kin = dict(zip(sy.params, complex_normal(rng, len(sy.params))))
    cfg = EulerCharConfig(trials=3)
    chi_g = euler_characteristic([sy.G], sy.vars, kin, cfg)
    assert chi_g == 19
    one = {"x4": 1}
    assert euler_characteristic([sy.U.subs(one), sy.F.subs(one)], ["x1", "x2", "x3"], kin, cfg) == chi_g


def test_euler_characteristic_drops_on_massless_edge():
    sy = symanzik(banana(3), ["0", "m2", "m3"])
    kin = {k: v for k, v in KIN.items() if k != "m1"}
    assert euler_characteristic([sy.G], sy.vars, kin, EulerCharConfig(trials=3)) == 4


def test_total_degree_and_monodromy_agree():
    G = parse("(1 + x + y)*(x - 2*y + 3) + x*y^2")
    a = euler_characteristic([G], ["x", "y"], cfg=EulerCharConfig(trials=2, method="monodromy"))
    b = euler_characteristic([G], ["x", "y"], cfg=EulerCharConfig(trials=2, method="total_degree"))
    assert a == b


def test_bad_config():
    with pytest.raises(ValueError):
        EulerCharConfig(trials=0)
    with pytest.raises(ValueError):
        EulerCharConfig(method="magic")
