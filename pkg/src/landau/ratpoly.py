"""Exact sparse multivariate Laurent polynomials over the rationals.

An :class:`MPoly` stores an ordered tuple of symbol names and a map from
integer exponent vectors to nonzero :class:`fractions.Fraction` coefficients.
Binary operations align operands by symbol name, so ``x + y`` works without
declaring a common ring first.  Values are immutable.

The textual syntax uses ``^`` (or ``**``) for powers, ``*`` for products and
``//`` (or ``/``) between numbers for rationals; printing uses graded-lex
order in the stored variable order and round-trips through :func:`parse`.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence, Union

Number = Union[int, Fraction]
Exponent = tuple[int, ...]

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class PolyError(ValueError):
    """Raised on invalid polynomial operations (cycles, bad division, ...)."""


class EvaluationError(ArithmeticError):
    """Raised when a Laurent monomial is evaluated at a zero coordinate."""


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"expected an exact rational coefficient, got {type(c).__name__}")


class MPoly:
    """Immutable sparse Laurent polynomial with rational coefficients."""

    __slots__ = ("vars", "terms", "_canon", "_hash")

    def __init__(self, vars: Iterable[str] = (), terms: Mapping[Exponent, Number] | None = None):
        vs = tuple(vars)
        if len(set(vs)) != len(vs):
            raise PolyError(f"duplicate variable names in {vs}")
        for v in vs:
            if not _NAME_RE.match(v):
                raise PolyError(f"invalid symbol name {v!r}")
        clean: dict[Exponent, Fraction] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != len(vs):
                raise PolyError(f"exponent {e} does not match {len(vs)} variables")
            c = _frac(c)
            if c:
                clean[e] = clean.get(e, Fraction(0)) + c
                if not clean[e]:
                    del clean[e]
        self.vars = vs
        self.terms = clean
        self._canon = None
        self._hash = None

    # -- construction -------------------------------------------------------

    @classmethod
    def _raw(cls, vars: tuple[str, ...], terms: dict[Exponent, Fraction]) -> MPoly:
        p = object.__new__(cls)
        p.vars = vars
        p.terms = terms
        p._canon = None
        p._hash = None
        return p

    @classmethod
    def var(cls, name: str) -> MPoly:
        return cls((name,), {(1,): 1})

    @classmethod
    def const(cls, c: Number, vars: Iterable[str] = ()) -> MPoly:
        vs = tuple(vars)
        return cls(vs, {(0,) * len(vs): c})

    @classmethod
    def monomial(cls, vars: Iterable[str], exps: Sequence[int], c: Number = 1) -> MPoly:
        vs = tuple(vars)
        return cls(vs, {tuple(exps): c})

    # -- basic queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def used_vars(self) -> tuple[str, ...]:
        used = [False] * len(self.vars)
        for e in self.terms:
            for i, k in enumerate(e):
                if k:
                    used[i] = True
        return tuple(v for v, u in zip(self.vars, used) if u)

    def is_constant(self) -> bool:
        return not self.used_vars()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise PolyError("polynomial is not constant")
        return next(iter(self.terms.values()), Fraction(0))

    def is_laurent(self) -> bool:
        return any(k < 0 for e in self.terms for k in e)

    def degree(self, var: str | None = None) -> int:
        """Total degree, or the degree in ``var``; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e) for e in self.terms)
        if var not in self.vars:
            return 0
        i = self.vars.index(var)
        return max(e[i] for e in self.terms)

    def degree_in(self, vars: Sequence[str]) -> int:
        """Largest total degree in the given subset of variables; -1 for zero."""
        if not self.terms:
            return -1
        idx = [self.vars.index(v) for v in vars if v in self.vars]
        return max(sum(e[i] for i in idx) for e in self.terms)

    def min_degree(self, var: str) -> int:
        if var not in self.vars or not self.terms:
            return 0
        i = self.vars.index(var)
        return min(e[i] for e in self.terms)

    def is_homogeneous(self, vars: Sequence[str] | None = None) -> bool:
        idx = range(len(self.vars)) if vars is None else [self.vars.index(v) for v in vars if v in self.vars]
        degs = {sum(e[i] for i in idx) for e in self.terms}
        return len(degs) <= 1

    def coefficients(self) -> list[Fraction]:
        return list(self.terms.values())

    # -- alignment ----------------------------------------------------------

    def with_vars(self, vars: Sequence[str]) -> MPoly:
        """Re-express over ``vars``; every used variable must be present."""
        vs = tuple(vars)
        if vs == self.vars:
            return self
        pos = {v: i for i, v in enumerate(vs)}
        for v in self.used_vars():
            if v not in pos:
                raise PolyError(f"variable {v} is used but missing from {vs}")
        mapping = [(pos[v], i) for i, v in enumerate(self.vars) if v in pos]
        out: dict[Exponent, Fraction] = {}
        n = len(vs)
        for e, c in self.terms.items():
            ne = [0] * n
            for j, i in mapping:
                ne[j] = e[i]
            out[tuple(ne)] = c
        return MPoly._raw(vs, out)

    def drop_unused(self) -> MPoly:
        return self.with_vars(self.used_vars())

    def _aligned(self, other: MPoly) -> tuple[MPoly, MPoly]:
        if self.vars == other.vars:
            return self, other
        vs = self.vars + tuple(v for v in other.vars if v not in self.vars)
        return self.with_vars(vs), other.with_vars(vs)

    def _coerce(self, other) -> MPoly:
        if isinstance(other, MPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return MPoly.const(other, self.vars)
        return NotImplemented

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self) -> MPoly:
        return MPoly._raw(self.vars, {e: -c for e, c in self.terms.items()})

    def __pos__(self) -> MPoly:
        return self

    def __add__(self, other) -> MPoly:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._aligned(other)
        out = dict(a.terms)
        for e, c in b.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return MPoly._raw(a.vars, out)

    __radd__ = __add__

    def __sub__(self, other) -> MPoly:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> MPoly:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> MPoly:
        if isinstance(other, (int, Fraction)):
            if not other:
                return MPoly._raw(self.vars, {})
            return MPoly._raw(self.vars, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._aligned(other)
        out: dict[Exponent, Fraction] = {}
        for ea, ca in a.terms.items():
            for eb, cb in b.terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                v = out.get(e, 0) + ca * cb
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return MPoly._raw(a.vars, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> MPoly:
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division of a polynomial by zero")
            inv = 1 / Fraction(other)
            return self * inv
        if isinstance(other, MPoly):
            return div_exact(self, other)
        return NotImplemented

    def __pow__(self, k: int) -> MPoly:
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            if len(self.terms) != 1:
                raise PolyError("negative powers are only defined for monomials")
            (e, c), = self.terms.items()
            return MPoly._raw(self.vars, {tuple(x * k for x in e): c ** k})
        result = MPoly.const(1, self.vars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # -- equality and hashing -----------------------------------------------

    def canonical(self) -> dict:
        if self._canon is None:
            canon = {}
            for e, c in self.terms.items():
                key = tuple(sorted((v, k) for v, k in zip(self.vars, e) if k))
                canon[key] = c
            self._canon = canon
        return self._canon

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = MPoly.const(other)
        if not isinstance(other, MPoly):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.canonical().items()))
        return self._hash

    # -- calculus and substitution -----------------------------------------

    def diff(self, var: str) -> MPoly:
        """Partial derivative; the Laurent power rule m*x^(m-1) applies."""
        if var not in self.vars:
            return MPoly._raw(self.vars, {})
        i = self.vars.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return MPoly._raw(self.vars, out)

    def subs(self, mapping: Mapping[str, Union[MPoly, Number]]) -> MPoly:
        """Simultaneous substitution of symbols by polynomials or numbers."""
        repl = {}
        for name, val in mapping.items():
            if isinstance(val, MPoly):
                if name in val.used_vars():
                    raise PolyError(f"substitution cycle: {name} appears in its own replacement")
            else:
                val = MPoly.const(_frac(val))
            if name in self.vars:
                repl[name] = val
        if not repl:
            return self
        keep = [v for v in self.vars if v not in repl]
        kidx = [self.vars.index(v) for v in keep]
        ridx = {v: self.vars.index(v) for v in repl}
        result = MPoly._raw(tuple(keep), {})
        cache: dict[tuple[str, int], MPoly] = {}

        def power(name: str, k: int) -> MPoly:
            key = (name, k)
            if key not in cache:
                cache[key] = repl[name] ** k
            return cache[key]

        for e, c in self.terms.items():
            term = MPoly._raw(tuple(keep), {tuple(e[i] for i in kidx): c})
            for name, i in ridx.items():
                if e[i]:
                    term = term * power(name, e[i])
            result = result + term
        return result

    def evaluate(self, values: Mapping[str, Number]) -> Fraction:
        """Exact evaluation at rational values for all used variables."""
        out = self.subs(values)
        return out.constant_value()

    def eval_complex(self, point) -> complex:
        """Evaluate at a complex point given as a sequence aligned with ``vars`` or a dict."""
        if isinstance(point, Mapping):
            xs = [complex(point[v]) if v in point else None for v in self.vars]
            for v, x in zip(self.vars, xs):
                if x is None and v in self.used_vars():
                    raise EvaluationError(f"no value for {v}")
        else:
            xs = [complex(x) for x in point]
            if len(xs) != len(self.vars):
                raise EvaluationError(f"expected {len(self.vars)} coordinates, got {len(xs)}")
        total = 0j
        for e, c in self.terms.items():
            t = complex(c)
            for x, k in zip(xs, e):
                if k:
                    if k < 0 and x == 0:
                        raise EvaluationError("zero coordinate raised to a negative power")
                    t *= x ** k
            total += t
        return total

    # -- structure ----------------------------------------------------------

    def coeffs_in(self, var: str) -> dict[int, MPoly]:
        """Coefficients with respect to ``var`` (polynomials in the other variables)."""
        if var not in self.vars:
            return {0: self} if self.terms else {}
        i = self.vars.index(var)
        rest = self.vars[:i] + self.vars[i + 1:]
        buckets: dict[int, dict[Exponent, Fraction]] = {}
        for e, c in self.terms.items():
            buckets.setdefault(e[i], {})[e[:i] + e[i + 1:]] = c
        return {k: MPoly._raw(rest, t) for k, t in buckets.items()}

    def monomial_content(self) -> Exponent:
        """Componentwise minimum exponent (the largest monomial dividing every term)."""
        if not self.terms:
            return (0,) * len(self.vars)
        return tuple(min(col) for col in zip(*self.terms))

    def shift(self, exps: Sequence[int]) -> MPoly:
        """Multiply by the Laurent monomial x^exps."""
        return MPoly._raw(self.vars, {tuple(a + b for a, b in zip(e, exps)): c for e, c in self.terms.items()})

    def to_polynomial(self) -> MPoly:
        """Divide out the monomial content so that no exponent is negative."""
        m = self.monomial_content()
        return self.shift([-k for k in m])

    def integer_content(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        nums = reduce(math.gcd, (c.numerator for c in self.terms.values()))
        dens = reduce(lambda a, b: a * b // math.gcd(a, b), (c.denominator for c in self.terms.values()))
        return Fraction(nums, dens)

    def leading_term(self) -> tuple[Exponent, Fraction]:
        """Leading exponent and coefficient in graded-lex order."""
        e = max(self.terms, key=lambda e: (sum(e), e))
        return e, self.terms[e]

    def lex_leading_coefficient(self) -> Fraction:
        e = max(self.terms)
        return self.terms[e]

    def primitive(self) -> MPoly:
        """Integer coefficients with gcd 1 and positive lex-leading coefficient."""
        if not self.terms:
            return self
        c = self.integer_content()
        p = self * (1 / c)
        if p.lex_leading_coefficient() < 0:
            p = -p
        return p

    def monic(self) -> MPoly:
        """Scale so that the graded-lex leading coefficient is 1."""
        if not self.terms:
            return self
        return self * (1 / self.leading_term()[1])

    def normalized(self) -> MPoly:
        """Canonical representative up to scalars: primitive over the used variables, sorted."""
        if not self.terms:
            return self
        used = sorted(self.used_vars(), key=natural_key)
        return self.with_vars(used).primitive()

    # -- printing -----------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(v if k == 1 else f"{v}^{k}" for v, k in zip(self.vars, e) if k)
            mag = abs(c)
            cs = str(mag.numerator) if mag.denominator == 1 else f"{mag.numerator}//{mag.denominator}"
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{cs}*{mono}"
            else:
                body = cs
            parts.append(("-" if c < 0 else "+", body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"MPoly({str(self)!r})"


def natural_key(name: str):
    """Sort key treating digit runs numerically, so m2 < m10."""
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def symbols(names: str | Sequence[str]) -> list[MPoly]:
    if isinstance(names, str):
        names = names.replace(",", " ").split()
    return [MPoly.var(n) for n in names]


def poly_sum(polys: Iterable[MPoly]) -> MPoly:
    return reduce(lambda a, b: a + b, polys, MPoly())


def poly_prod(polys: Iterable[MPoly]) -> MPoly:
    return reduce(lambda a, b: a * b, polys, MPoly.const(1))


# -- parsing -------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9_]*)|(\*\*|//|[-+*/^()]))")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise PolyError(f"unexpected character at position {pos}: {text[pos:pos + 10]!r}")
        out.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


class _Parser:
    def __init__(self, tokens: list[str]):
        self.toks = tokens
        self.i = 0

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise PolyError("unexpected end of input")
        self.i += 1
        return tok

    def expr(self) -> MPoly:
        if self.peek() in ("+", "-"):
            sign = self.take()
            acc = self.term()
            if sign == "-":
                acc = -acc
        else:
            acc = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> MPoly:
        acc = self.factor()
        while self.peek() in ("*", "/", "//"):
            op = self.take()
            rhs = self.factor()
            if op == "*":
                acc = acc * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise PolyError("division is only allowed by nonzero numbers")
                acc = acc * (1 / rhs.constant_value())
        return acc

    def factor(self) -> MPoly:
        if self.peek() == "-":
            self.take()
            return -self.factor()
        if self.peek() == "+":
            self.take()
            return self.factor()
        base = self.primary()
        if self.peek() in ("^", "**"):
            self.take()
            neg = False
            if self.peek() == "-":
                self.take()
                neg = True
            tok = self.take()
            if not tok.isdigit():
                raise PolyError(f"expected integer exponent, got {tok!r}")
            k = int(tok)
            return base ** (-k if neg else k)
        return base

    def primary(self) -> MPoly:
        tok = self.take()
        if tok.isdigit():
            return MPoly.const(int(tok))
        if tok == "(":
            inner = self.expr()
            if self.take() != ")":
                raise PolyError("expected ')'")
            return inner
        if _NAME_RE.match(tok):
            return MPoly.var(tok)
        raise PolyError(f"unexpected token {tok!r}")


def parse(text: str, vars: Sequence[str] | None = None) -> MPoly:
    """Parse a polynomial; ``vars`` fixes the variable order (extra symbols are appended)."""
    p = _Parser(_tokenize(text))
    out = p.expr()
    if p.peek() is not None:
        raise PolyError(f"trailing input at token {p.peek()!r}")
    if vars is not None:
        vs = tuple(vars) + tuple(v for v in out.used_vars() if v not in vars)
        out = out.with_vars(vs)
    else:
        out = out.drop_unused()
    return out


# -- division, gcd, square-free part -------------------------------------------

def div_exact(a: MPoly, b: MPoly) -> MPoly:
    """Exact quotient a/b; raises PolyError if b does not divide a."""
    if b.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    a, b = a._aligned(b)
    if len(b.terms) == 1:
        (eb, cb), = b.terms.items()
        out = {}
        for e, c in a.terms.items():
            q = tuple(x - y for x, y in zip(e, eb))
            out[q] = c / cb
        quot = MPoly._raw(a.vars, out)
        if not a.is_laurent() and not b.is_laurent() and quot.is_laurent():
            raise PolyError("polynomial division is not exact")
        return quot
    lead_b = max(b.terms)
    cb = b.terms[lead_b]
    r = dict(a.terms)
    q: dict[Exponent, Fraction] = {}
    bt = list(b.terms.items())
    while r:
        lead_r = max(r)
        d = tuple(x - y for x, y in zip(lead_r, lead_b))
        if any(k < 0 for k in d) and not a.is_laurent():
            raise PolyError("polynomial division is not exact")
        coef = r[lead_r] / cb
        q[d] = coef
        for e, c in bt:
            k = tuple(x + y for x, y in zip(e, d))
            v = r.get(k, 0) - coef * c
            if v:
                r[k] = v
            else:
                r.pop(k, None)
        if len(q) > 100000:
            raise PolyError("division did not terminate")
    return MPoly._raw(a.vars, q)


def divides(b: MPoly, a: MPoly) -> bool:
    try:
        div_exact(a, b)
        return True
    except PolyError:
        return False


def prem(a: MPoly, b: MPoly, var: str) -> MPoly:
    """Pseudo-remainder of a by b with respect to ``var``."""
    a, b = a._aligned(b)
    db = b.degree(var)
    if db < 0:
        raise ZeroDivisionError("pseudo-remainder by zero")
    cb = b.coeffs_in(var)
    lc = cb[db].with_vars(a.vars) if db in cb else MPoly()
    x = MPoly.var(var)
    r = a
    while not r.is_zero() and r.degree(var) >= db:
        dr = r.degree(var)
        lr = r.coeffs_in(var)[dr].with_vars(a.vars)
        r = r * lc - b * lr * x ** (dr - db)
    return r


def content_in(p: MPoly, var: str) -> MPoly:
    """Gcd of the coefficients of p viewed as a polynomial in ``var``."""
    coeffs = list(p.coeffs_in(var).values())
    g = MPoly()
    for c in coeffs:
        g = gcd(g, c)
        if g.is_constant():
            return MPoly.const(1)
    return g


def gcd(a: MPoly, b: MPoly) -> MPoly:
    """Multivariate gcd over the rationals by recursive primitive PRS.

    The result is normalized to integer coefficients with content 1 and a positive
    lex-leading coefficient; gcd with zero returns the other argument normalized.
    """
    if a.is_laurent() or b.is_laurent():
        raise PolyError("gcd is defined for polynomials, not Laurent polynomials")
    if a.is_zero():
        return b.normalized() if not b.is_zero() else MPoly()
    if b.is_zero():
        return a.normalized()
    a, b = a._aligned(b)
    used_a, used_b = set(a.used_vars()), set(b.used_vars())
    if not used_a or not used_b:
        return MPoly.const(1)
    shared = [v for v in a.vars if v in used_a and v in used_b]
    if not shared:
        # gcd lies in the ring of shared variables only; contents strip the rest
        for v in a.vars:
            if v in used_a:
                return gcd(content_in(a, v), b)
        return MPoly.const(1)
    # strip variables appearing in only one argument via contents
    for v in a.vars:
        if v in used_a and v not in used_b:
            return gcd(content_in(a, v), b)
        if v in used_b and v not in used_a:
            return gcd(a, content_in(b, v))
    x = shared[0]
    ca, cb = content_in(a, x), content_in(b, x)
    pa, pb = div_exact(a, ca), div_exact(b, cb)
    c = gcd(ca, cb)
    if pa.degree(x) < pb.degree(x):
        pa, pb = pb, pa
    while not pb.is_zero() and pb.degree(x) > 0:
        r = prem(pa, pb, x)
        pa = pb
        if r.is_zero():
            pb = r
            break
        pb = div_exact(r, content_in(r, x))
    g = pa if pb.is_zero() else MPoly.const(1)
    if not g.is_constant():
        g = div_exact(g, content_in(g, x))
    return (c * g).normalized()


def sqfree_part(p: MPoly) -> MPoly:
    """Square-free part: product of the distinct irreducible factors of p, normalized."""
    if p.is_zero():
        raise PolyError("square-free part of the zero polynomial")
    if p.is_laurent():
        raise PolyError("shift Laurent input to a polynomial first")
    used = p.used_vars()
    if not used:
        return MPoly.const(1)
    x = used[0]
    cont = content_in(p, x)
    pp = div_exact(p, cont)
    g = gcd(pp, pp.diff(x))
    core = div_exact(pp, g)
    return (sqfree_part(cont) * core).normalized()


def squarefree_product(polys: Iterable[MPoly]) -> MPoly:
    """Square-free part of a product, reducing factor by factor instead of expanding first."""
    kept: list[MPoly] = []
    for p in polys:
        if p.is_constant():
            continue
        q = sqfree_part(p)
        for k in kept:
            if q.is_constant():
                break
            g = gcd(q, k)
            if not g.is_constant():
                q = div_exact(q, g)
        if not q.is_constant():
            kept.append(q)
    return poly_prod(kept).normalized()
