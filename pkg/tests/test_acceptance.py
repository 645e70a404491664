"""Acceptance suite: one pass/fail line per criterion.

Run with pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import functools
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from landau.elim import ElimConfig, euler_discriminant_q, get_pld, project_codim1, specialized_pad, threshold_presentation
from landau.graphs import banana, kite, library_spec, one_loop, parachute, symanzik
from landau.numeric import EulerCharConfig, complex_normal, euler_characteristic
from landau.oneloop import (
    banana_stats,
    generic_degree,
    hypersimplex_f_vector,
    kallen,
    oneloop_pad,
    truncated_simplex_f_vector,
)
from landau.polytope import f_vector, face_weights, newton_polytope, normalized_volume
from landau.ratpoly import MPoly, parse, poly_prod, squarefree_product

RESULTS: dict[int, str] = {}
TRIALS = 10
RAT_TOL = 1e-8


def criterion(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t = time.time()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                RESULTS[number] = f"[FAIL] AC{number} {title}: {type(exc).__name__}: {exc}"
                raise
            note = f" ({detail})" if detail else ""
            RESULTS[number] = f"[PASS] AC{number} {title}{note} [{time.time() - t:.0f}s]"

        return run

    return wrap


def normal_set(polys) -> set[str]:
    return {str(p.normalized()) for p in polys}


def chi(graph, internal="generic", external="generic", seed: int = 0) -> int:
    """Signed Euler characteristic of the graph hypersurface complement at random kinematics."""
    sy = symanzik(graph, internal, external)
    rng = np.random.default_rng(seed)
    values = dict(zip(sy.params, complex_normal(rng, len(sy.params))))
    return euler_characteristic([sy.G], sy.vars, values, EulerCharConfig(trials=TRIALS))


# -- 1 ----------------------------------------------------------------------------

@criterion(1, "B3 generic PLD with threshold presentation")
def test_ac01_banana_three():
    res = get_pld(banana(3))
    assert not res.partial
    parts = []
    for d in res.deltas():
        parts += threshold_presentation(d, res.params, ["m1", "m2", "m3"])
    r = {i: f"sqrt_m{i}" for i in (1, 2, 3)}
    thresholds = [
        parse(f"s - ({r[1]} {a} {r[2]} {b} {r[3]})^2") for a in "+-" for b in "+-"
    ]
    expected = [parse("m1"), parse("m2"), parse("m3"), parse("s")] + thresholds
    assert normal_set(parts) == normal_set(expected), sorted(normal_set(parts))
    return f"{len(parts)} factors"


# -- 2 ----------------------------------------------------------------------------

@criterion(2, "Euler characteristics B3, B3|m1=0, par, kite, A4")
def test_ac02_euler_characteristics():
    got = {
        "B3": chi(banana(3)),
        "B3|m1=0": chi(banana(3), ["0", "m2", "m3"]),
        "par": chi(parachute()),
        "kite": chi(kite()),
        "A4": chi(one_loop(4)),
    }
    expected = {"B3": 7, "B3|m1=0": 4, "par": 19, "kite": 30, "A4": 15}
    assert got == expected, got
    return ", ".join(f"{k}={v}" for k, v in got.items())


# -- 3 ----------------------------------------------------------------------------

@criterion(3, "volumes and f-vectors")
def test_ac03_polytopes():
    sy = symanzik(banana(3))
    assert normalized_volume(newton_polytope(sy.G, sy.vars)) == 10
    for n in range(2, 7):
        sy = symanzik(one_loop(n))
        P = newton_polytope(sy.G, sy.vars)
        assert normalized_volume(P) == 2**n - 1, n
        assert f_vector(P) == truncated_simplex_f_vector(n), n
    for n in range(3, 7):
        sy = symanzik(one_loop(n), "zero")
        P = newton_polytope(sy.G, sy.vars)
        assert normalized_volume(P) == 2**n - 1 - n, n
        assert f_vector(P) == hypersimplex_f_vector(n), n
    sy = symanzik(parachute())
    P = newton_polytope(sy.G, sy.vars)
    assert f_vector(P) == [15, 33, 27, 9]
    assert len(face_weights(P)) == 85
    sy = symanzik(parachute(), relations={"s": "0", "m1": "0", "m2": "0"})
    assert f_vector(newton_polytope(sy.G, sy.vars)) == [11, 23, 19, 7]
    return "T([n]) n=2..6, hypersimplex n=3..6, par, restricted par"


# -- 4 ----------------------------------------------------------------------------

@criterion(4, "projection of a reducible incidence family")
def test_ac04_projection():
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
    pr = project_codim1([parse(x) for x in fs], ["z1", "z2"], ["al"], cfg=ElimConfig(rat_tol=RAT_TOL))
    expected = [parse("z1^2 + z2^2 - 1"), parse("(z1 - 1)^2 + (z2 - 1)^2 - 1"), parse("z2 - z1^2 - 2")]
    assert pr.dominant, "dominant component not detected"
    assert all(pr.trusted)
    assert normal_set(pr.deltas) == normal_set(expected), [str(d) for d in pr.deltas]
    return "3 circles/parabola, dominant excluded"


# -- 5 ----------------------------------------------------------------------------

# leading-face sextic factor in square roots r_i of the internal masses
E_PAR4_FACTOR = (
    "r1^2*M3*s + r3^2*M3*s + r4^2*M3*s + 2*r3*r4*M3*s + r2^2*M4*s + r3^2*M4*s + r4^2*M4*s"
    " + 2*r3*r4*M4*s - r1^4*M3 - r1^2*M3^2 + r2^2*r1^2*M3 + r3^2*r1^2*M3 + r4^2*r1^2*M3"
    " + 2*r3*r4*r1^2*M3 + r2^2*r1^2*M4 - r3^2*r1^2*M4 - r4^2*r1^2*M4 - 2*r3*r4*r1^2*M4"
    " + r1^2*M3*M4 - r2^2*M4^2 - r2^2*r3^2*M3 - r2^2*r4^2*M3 - 2*r2^2*r3*r4*M3 - r2^4*M4"
    " + r2^2*r3^2*M4 + r2^2*r4^2*M4 + 2*r2^2*r3*r4*M4 + r2^2*M3*M4 - r3^2*s^2 - r4^2*s^2"
    " - 2*r3*r4*s^2 - r2^2*r1^2*s + r3^2*r1^2*s + r4^2*r1^2*s + 2*r3*r4*r1^2*s - r3^4*s - r4^4*s"
    " - 4*r3*r4^3*s + r2^2*r3^2*s + r2^2*r4^2*s - 6*r3^2*r4^2*s - 4*r3^3*r4*s + 2*r2^2*r3*r4*s"
    " - M3*M4*s"
)

F_PAR = "s*(M4 - m1)*(M3 - m2) - (m1*M3 - m2*M4)*(m2 - m1 + M4 - M3)"
PAR_POINT = {"M3": 1, "M4": 1, "m1": 2, "m2": 3, "m3": 1, "m4": 2}


def _threshold_quartic(M: str, a: str, b: str, c: str) -> MPoly:
    """prod over signs of (M - (r_a +- r_b +- r_c)^2), rewritten in the squared masses."""
    prod = poly_prod(parse(f"{M} - (r{a} {u} r{b} {v} r{c})^2") for u in "+-" for v in "+-")
    roots = [f"r{x}" for x in (a, b, c)]
    idx = [prod.vars.index(n) for n in roots]
    terms = {}
    for e, coef in prod.terms.items():
        assert all(e[i] % 2 == 0 for i in idx)
        terms[tuple(k // 2 if i in idx else k for i, k in enumerate(e))] = coef
    return MPoly(prod.vars, terms).subs({f"r{x}": MPoly.var(x) for x in (a, b, c)})


@criterion(5, "parachute generic PLD and the Euler-only component")
def test_ac05_parachute():
    res = get_pld(parachute())
    assert not res.partial
    got = normal_set(res.deltas())
    q2 = _threshold_quartic("M4", "m1", "m3", "m4")
    q3 = _threshold_quartic("M3", "m2", "m3", "m4")
    linear = [parse(x) for x in ("m1", "m2", "m3", "m4", "M3", "M4", "s")]
    expected = normal_set(linear + [kallen("s", "m1", "m2"), q2, q3, kallen("s", "M3", "M4")])
    assert expected <= got, sorted(expected - got)
    sextics = [d for d in res.deltas() if d.degree() == 6]
    assert len(sextics) == 1, [str(d) for d in res.deltas()]
    roots = {f"m{i}": parse(f"r{i}^2") for i in range(1, 5)}
    P = parse(E_PAR4_FACTOR)
    flipped = P.subs({"r4": parse("-w")}).subs({"w": parse("r4")})
    assert sextics[0].subs(roots).normalized() == (P * flipped).normalized()
    assert len(got) == len(expected) + 1, sorted(got - expected)

    fpar = parse(F_PAR)
    assert str(fpar.normalized()) not in got
    assert fpar.subs(PAR_POINT).normalized() == parse("2*s + 1").normalized()
    sy = symanzik(parachute())
    G = sy.G.subs(PAR_POINT)
    verdicts = euler_discriminant_q(G, ["s"], sy.vars, [parse("2*s + 1")], EulerCharConfig(trials=TRIALS))
    v = verdicts[0]
    assert v.is_component, (v.chi, v.chi_generic)
    return f"{len(got)} components; 2s+1: chi {v.chi} < {v.chi_generic}"


# -- 6 ----------------------------------------------------------------------------

@criterion(6, "restricted parachute PLD on s = m1 = m2 = 0")
def test_ac06_restricted_parachute():
    res = get_pld(parachute(), relations={"s": "0", "m1": "0", "m2": "0"})
    assert not res.partial
    expected = [parse(x) for x in ("m3", "m4", "M3", "M4", "M3 - M4")]
    expected += [kallen("M3", "m3", "m4"), kallen("M4", "m3", "m4")]
    assert normal_set(res.deltas()) == normal_set(expected), [str(d) for d in res.deltas()]
    return "7 components"


# -- 7 ----------------------------------------------------------------------------

@criterion(7, "specialized PAD of a reducible family")
def test_ac07_specialized_pad():
    p = parse("(1 + al1)*(a + b*al1 + c*al2 + d*al1*al2)")
    comps = specialized_pad(p, ["a", "b", "c", "d"], ["al1", "al2"])
    expected = [parse(x) for x in ("a", "b", "c", "d", "a - b", "c - d", "b*c - a*d")]
    assert normal_set(c.delta for c in comps) == normal_set(expected)
    return "includes bc - ad"


# -- 8 ----------------------------------------------------------------------------

@criterion(8, "one-loop closed forms and cross-engine agreement")
def test_ac08_one_loop():
    for n in range(2, 7):
        assert oneloop_pad(n, substituted=False).degree == (n + 1) * (2**n - 1) == generic_degree(n), n
    assert oneloop_pad(2).degree == 5
    assert oneloop_pad(3).degree == 17
    assert oneloop_pad(4, "equal").degree == 49
    assert oneloop_pad(4, "massless-internal").degree == 33
    assert oneloop_pad(3, "massless-external").factor("T(1,2)").vanishes
    for n in (2, 3):
        res = get_pld(one_loop(n))
        assert not res.partial, n
        rad = squarefree_product(res.deltas())
        assert rad == oneloop_pad(n).radical(), n
    return "degrees n=2..6, radicals n=2,3"


# -- 9 ----------------------------------------------------------------------------

@criterion(9, "banana ML degrees, volumes and critical point")
def test_ac09_banana():
    rows = []
    for E in range(2, 7):
        st = banana_stats(E, verify=E <= 4)
        sy = symanzik(banana(E))
        vol = normalized_volume(newton_polytope(sy.G, sy.vars))
        assert vol == st.vol == math.comb(2 * E - 1, E), (E, vol)
        assert st.chi == 2**E - 1, E
        if E <= 4:
            assert st.verified, E
            assert chi(banana(E), seed=E) == st.chi, E
        rows.append(f"E={E}:({st.chi},{vol})")
    return " ".join(rows)


# -- 10 ---------------------------------------------------------------------------

CAYLEY_FORMS = """X1 + X2 + X3, X1 + X2 + Y2, X1 + X2 - Y2, X1 + X3 - Y1 - Y2, X1 + Y1,
X1 - X3 - Y1 + Y2, X1 - Y1, X1 - Y1 + 2*Y2, X1 - Y1 - 2*Y2, X2 + X3 + Y1,
X2 + X3 - Y1, X2 + Y1 + Y2, X2 + Y1 - Y2, X2 - Y1 + Y2, X2 - Y1 - Y2,
X3 + 2*Y1 - Y2, X3 + Y2, X3 - 2*Y1 - Y2, X3 - Y2, Y1, Y1 + Y2, Y1 - Y2, Y2"""


@criterion(10, "three-chain Cayley configuration")
def test_ac10_cayley():
    P = [
        "X1 + z1 + X2 + z2 + X3 + z3",
        "X1 + z1 + Y1",
        "X3 + z3 + Y2",
        "X2 + z2 + Y1 + Y2",
        "X1 + z1 + X2 + z2 + Y2",
        "X2 + z2 + X3 + z3 + Y1",
    ]
    cayley = parse(P[5])
    for i in range(5):
        cayley = cayley + parse(f"a{i + 1}") * parse(P[i])
    pars = ["X1", "X2", "X3", "Y1", "Y2"]
    vs = ["z1", "z2", "z3", "a1", "a2", "a3", "a4", "a5"]
    comps = specialized_pad(cayley, pars, vs)
    expected = [parse(x) for x in CAYLEY_FORMS.replace("\n", " ").split(",")]
    assert len(expected) == 23
    assert normal_set(c.delta for c in comps) == normal_set(expected)
    return "23 linear forms"


# -- 11 ---------------------------------------------------------------------------

APP_A = """m2
s
t
m2 - s
m2 - 1/2*s
m2 - 1/4*s
m2 - 1/4*t
s + t
s + 2*t
m2*s + m2*t - 1/4*s*t
m2*s + 2*m2*t - 1/2*s*t
m2*t - 1/4*s^2 - 1/4*s*t
m2*t + 1/4*s^2 - 1/4*s*t
m2*t + s^2
m2*s^2 + 4*m2*s*t + 4*m2*t^2 - s*t^2
m2*s^2 + 2*m2*s*t + m2*t^2 - s^2*t
m2^2*s - 2*m2*s*t - 4*m2*t^2 + s*t^2"""

APP_A_ACCEPTED = {
    "m2": 12,
    "s": 6,
    "t": 33,
    "m2 - 1/4*s": 48,
    "m2 - 1/4*t": 63,
    "s + t": 45,
    "m2*s + m2*t - 1/4*s*t": 55,
    "m2^2*s - 2*m2*s*t - 4*m2*t^2 + s*t^2": 62,
}


@criterion(11, "Euler filter on outer-dbox candidates")
def test_ac11_candidate_filter():
    sy = library_spec("outer-dbox").symanzik()
    cands = [parse(c.replace("/", "//")) for c in APP_A.splitlines()]
    assert len(cands) == 17
    verdicts = euler_discriminant_q(sy.G, sy.params, sy.vars, cands, EulerCharConfig(trials=TRIALS))
    assert {v.chi_generic for v in verdicts} == {64}
    accepted = {str(v.candidate.normalized()): v.chi for v in verdicts if v.is_component}
    expected = {str(parse(k.replace("/", "//")).normalized()): x for k, x in APP_A_ACCEPTED.items()}
    assert accepted == expected, accepted
    return f"{len(accepted)} of 17 accepted against 64"


# -- 12 ---------------------------------------------------------------------------

PROPERTY_TESTS = [
    "tests/test_ratpoly.py::test_ring_axioms",
    "tests/test_ratpoly.py::test_leibniz_rule",
    "tests/test_polytope.py::test_face_point_sets_match_initial_form_support",
    "tests/test_polytope.py::test_dense_face_has_zero_weight_and_returns_g",
    "tests/test_graphs.py::test_single_edge_contraction_is_leading_order",
    "tests/test_graphs.py::test_bubble_subdiagram_factorization_on_parachute",
    "tests/test_numeric.py::test_euler_characteristic_banana_three",
    "tests/test_numeric.py::test_euler_characteristic_parachute_dehomogenized",
    "tests/test_numeric.py::test_fixed_seed_is_deterministic",
]


@criterion(12, "property suites standalone")
def test_ac12_property_suites():
    root = Path(__file__).resolve().parent.parent
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_TESTS],
        cwd=root,
        capture_output=True,
        text=True,
    )
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    assert proc.returncode == 0, tail
    return tail


CRITERIA = [
    test_ac01_banana_three,
    test_ac02_euler_characteristics,
    test_ac03_polytopes,
    test_ac04_projection,
    test_ac05_parachute,
    test_ac06_restricted_parachute,
    test_ac07_specialized_pad,
    test_ac08_one_loop,
    test_ac09_banana,
    test_ac10_cayley,
    test_ac11_candidate_filter,
    test_ac12_property_suites,
]


def main() -> int:
    failed = 0
    for fn in CRITERIA:
        try:
            fn()
        except Exception:  # the line is recorded by the decorator
            failed += 1
        print(RESULTS[int(fn.__name__[7:9])], flush=True)
    print(f"{len(CRITERIA) - failed} of {len(CRITERIA)} criteria passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
