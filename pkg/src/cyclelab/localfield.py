"""Exact models of the valuation ring of a finite extension K/Q_p.

A field is described by its arithmetic shape (p, e, f, zeta_level, precision).
Concrete element arithmetic is available for f = 1 when the spec carries an
Eisenstein relation pi^e = p * U(pi) with U a unit polynomial: elements are
stored as integer polynomials of degree < e in pi with coefficients modulo
p^M.  In that model the valuation of sum_i c_i pi^i is exactly
min_i (e * v_p(c_i) + i) because the candidate valuations are pairwise
distinct mod e, so no cancellation between monomials can occur.

The module also provides the brute-force unit-group oracle: the exact order
of every graded piece U_n^m / U_n^{m+1} of K^x modulo p^n-th powers, computed
either by full enumeration of (O_K/pi^N)^x or by closing up the set of
p^n-th powers of the generators 1 + pi^i.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .errors import (
    BudgetExceeded,
    NonIntegralE0,
    NonIntegralSolution,
    NonUnitInverse,
    PrecisionExhausted,
    ValidationError,
    ZetaRamification,
)

DEFAULT_BUDGET = 1 << 20


class _Infinite:
    """Valuation of zero: a sentinel ordered above every integer."""

    def __gt__(self, other):
        return not isinstance(other, _Infinite)

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, _Infinite)

    def __repr__(self):
        return "INFINITE"


INFINITE = _Infinite()


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class LocalFieldSpec:
    """Arithmetic shape of K: (p, e, f, zeta_level, precision).

    ``zeta_level = n`` asserts that K contains a primitive p^n-th root of
    unity, which forces p^{n-1}(p-1) | e.  ``eisenstein_unit`` holds the
    coefficients of the unit polynomial U in pi^e = p * U(pi); it is only
    required for concrete element arithmetic (f = 1).
    """

    p: int
    e: int
    f: int = 1
    zeta_level: int = 0
    precision: int = 0
    eisenstein_unit: tuple = None

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValidationError(f"p = {self.p} is not prime")
        if self.e < 1 or self.f < 1 or self.precision < 1:
            raise ValidationError("e, f and precision must be >= 1")
        if self.zeta_level < 0:
            raise ValidationError("zeta_level must be >= 0")
        if self.zeta_level >= 1:
            if self.e % (self.p - 1) != 0:
                raise NonIntegralE0(
                    f"zeta_level >= 1 requires (p-1) | e; got p={self.p}, e={self.e}")
            if self.e % (self.p ** (self.zeta_level - 1) * (self.p - 1)) != 0:
                raise ZetaRamification(
                    f"zeta_{{p^{self.zeta_level}}} in K requires "
                    f"p^{self.zeta_level - 1}(p-1) | e; got e={self.e}")
        if self.eisenstein_unit is not None:
            u = self.eisenstein_unit
            if not u or len(u) > self.e or u[0] % self.p == 0:
                raise ValidationError("eisenstein_unit must be a unit polynomial "
                                      "of degree < e")
            if self.e == 1 and tuple(u) != (1,):
                raise ValidationError("for e = 1 the uniformizer is p itself; "
                                      "use eisenstein_unit = (1,)")

    @property
    def e0(self) -> Fraction:
        return Fraction(self.e, self.p - 1)

    def c(self, i: int) -> Fraction:
        """Break level c_i = i*e + e0 of the unit filtration (c_0 = 0)."""
        if i == 0:
            return Fraction(0)
        return i * self.e + self.e0

    @property
    def c_list(self) -> list:
        return [self.c(i) for i in range(self.zeta_level + 1)]

    @property
    def storage_exponent(self) -> int:
        """Coefficients are stored mod p^M with e*M comfortably >= precision."""
        return -(-self.precision // self.e) + 1

    @property
    def has_arithmetic(self) -> bool:
        return self.f == 1 and self.eisenstein_unit is not None

    def zero(self) -> "RingElement":
        return RingElement(self, (0,) * self.e, self.precision)

    def one(self) -> "RingElement":
        return self.from_int(1)

    def from_int(self, k: int, prec: int = None) -> "RingElement":
        self._require_arithmetic()
        coeffs = (k,) + (0,) * (self.e - 1)
        return RingElement(self, coeffs, self.precision if prec is None else prec)

    def pi(self) -> "RingElement":
        self._require_arithmetic()
        if self.e == 1:
            return self.from_int(self.p)
        coeffs = (0, 1) + (0,) * (self.e - 2)
        return RingElement(self, coeffs, self.precision)

    def _require_arithmetic(self):
        if not self.has_arithmetic:
            raise ValidationError("spec carries no Eisenstein relation; "
                                  "element arithmetic unavailable")


def make_field_spec(p, e, f, zeta_level, precision=None,
                    eisenstein_unit=None) -> LocalFieldSpec:
    """Validated spec; default precision c_n + n + 4 (zeta_level = n >= 1)."""
    if precision is None:
        if zeta_level >= 1 and e % (p - 1) == 0:
            precision = zeta_level * e + e // (p - 1) + zeta_level + 4
        else:
            precision = 4 * e + 4
    if eisenstein_unit is None and f == 1 and e == 1:
        eisenstein_unit = (1,)
    return LocalFieldSpec(p, e, f, zeta_level, precision,
                          None if eisenstein_unit is None else tuple(eisenstein_unit))


def qp(p: int, zeta_level: int = 0, precision: int = None) -> LocalFieldSpec:
    """The base field Q_p (zeta_level 1 is legal only for p = 2)."""
    return make_field_spec(p, 1, 1, zeta_level, precision, (1,))


def cyclotomic_spec(p: int, k: int, precision: int = None) -> LocalFieldSpec:
    """Q_p(zeta_{p^k}) with uniformizer pi = zeta_{p^k} - 1.

    The Eisenstein polynomial is Phi_{p^k}(1+x) = sum_j (1+x)^{j*p^{k-1}}
    over 0 <= j < p, whence pi^e = p * U(pi) with U = (x^e - Phi)/p.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    e = p ** (k - 1) * (p - 1)
    coeffs = [0] * (e + 1)
    for j in range(p):
        m = j * p ** (k - 1)
        for i in range(m + 1):
            coeffs[i] += math.comb(m, i)
    assert coeffs[e] == 1 and coeffs[0] == p
    assert all(c % p == 0 for c in coeffs[:e])
    unit = tuple(-c // p for c in coeffs[:e])
    return make_field_spec(p, e, 1, k, precision, unit)


@lru_cache(maxsize=None)
def _unit_inverse(spec: LocalFieldSpec) -> tuple:
    """U^{-1} mod (E(x), p^M), used when dividing by pi."""
    u = spec.eisenstein_unit + (0,) * (spec.e - len(spec.eisenstein_unit))
    mod = spec.p ** spec.storage_exponent
    y = (pow(u[0], -1, spec.p),) + (0,) * (spec.e - 1)
    for _ in range(spec.storage_exponent.bit_length() + spec.e.bit_length() + 2):
        uy = _poly_mul(spec, u, y)
        y = tuple((2 * a - b) % mod for a, b in zip(y, _poly_mul(spec, y, uy)))
    assert _poly_mul(spec, u, y)[0] % mod == 1 % mod
    return y


def _poly_mul(spec: LocalFieldSpec, a: tuple, b: tuple) -> tuple:
    """Product in Z[x]/(x^e - p*U(x), p^M)."""
    e, p = spec.e, spec.p
    mod = p ** spec.storage_exponent
    conv = [0] * (2 * e - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                conv[i + j] += ai * bj
    u = spec.eisenstein_unit
    for d in range(2 * e - 2, e - 1, -1):
        c = conv[d]
        if c:
            cp = c * p
            base = d - e
            for t, ut in enumerate(u):
                conv[base + t] += cp * ut
            conv[d] = 0
    return tuple(c % mod for c in conv[:e])


class RingElement:
    """Element of O_K / pi^prec in the Eisenstein polynomial model.

    ``coeffs`` are the e coefficients mod p^M; ``prec`` is the tracked
    pi-adic precision: the element is only asserted modulo pi^prec, and
    operations that lose significance (division by non-units) shrink it.
    """

    __slots__ = ("spec", "coeffs", "prec")

    def __init__(self, spec: LocalFieldSpec, coeffs, prec: int = None):
        spec._require_arithmetic()
        mod = spec.p ** spec.storage_exponent
        self.spec = spec
        self.coeffs = tuple(c % mod for c in coeffs)
        self.prec = spec.precision if prec is None else min(prec, spec.precision)
        if self.prec <= 0:
            raise PrecisionExhausted("element carries no significant digits")

    def _check(self, other):
        if self.spec is not other.spec and self.spec != other.spec:
            raise ValidationError("elements belong to different field specs")

    def valuation(self):
        """pi-adic valuation; INFINITE when the element vanishes to precision."""
        v = None
        for i, c in enumerate(self.coeffs):
            if c:
                vi = self.spec.e * _vp(c, self.spec.p) + i
                if v is None or vi < v:
                    v = vi
        if v is None or v >= self.prec:
            return INFINITE
        return v

    def is_zero(self) -> bool:
        return self.valuation() is INFINITE

    def residue(self) -> int:
        """Image in the residue field F_p (f = 1)."""
        return self.coeffs[0] % self.spec.p

    def __add__(self, other):
        self._check(other)
        return RingElement(self.spec,
                           tuple(a + b for a, b in zip(self.coeffs, other.coeffs)),
                           min(self.prec, other.prec))

    def __sub__(self, other):
        self._check(other)
        return RingElement(self.spec,
                           tuple(a - b for a, b in zip(self.coeffs, other.coeffs)),
                           min(self.prec, other.prec))

    def __neg__(self):
        return RingElement(self.spec, tuple(-a for a in self.coeffs), self.prec)

    def __mul__(self, other):
        if isinstance(other, int):
            return RingElement(self.spec, tuple(other * a for a in self.coeffs),
                               self.prec)
        self._check(other)
        va, vb = self.valuation(), other.valuation()
        pa, pb = self.prec, other.prec
        cand = [pa + pb]
        cand.append((pa + pb) if vb is INFINITE else pa + vb)
        cand.append((pa + pb) if va is INFINITE else pb + va)
        return RingElement(self.spec, _poly_mul(self.spec, self.coeffs, other.coeffs),
                           min(cand))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = self.spec.one()
        result = RingElement(self.spec, result.coeffs, self.prec)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def key(self) -> tuple:
        """Canonical dictionary key (full storage precision)."""
        return self.coeffs

    def invert(self) -> "RingElement":
        if self.valuation() != 0:
            raise NonUnitInverse("inverse requested for a non-unit")
        spec = self.spec
        mod = spec.p ** spec.storage_exponent
        y = RingElement(spec, (pow(self.coeffs[0] % spec.p, -1, spec.p),) +
                        (0,) * (spec.e - 1), self.prec)
        steps = (spec.e * spec.storage_exponent).bit_length() + 1
        for _ in range(steps):
            two_minus = RingElement(spec, tuple(
                (2 if i == 0 else 0) - c
                for i, c in enumerate(_poly_mul(spec, self.coeffs, y.coeffs))),
                self.prec)
            y = RingElement(spec, _poly_mul(spec, y.coeffs, two_minus.coeffs),
                            self.prec)
        assert (self * y - RingElement(spec, (1,) + (0,) * (spec.e - 1),
                                       self.prec)).is_zero()
        return y

    def shift_down(self, k: int = 1) -> "RingElement":
        """Exact division by pi^k; precision drops by k."""
        x = self
        for _ in range(k):
            x = x._shift_down_once()
        return x

    def _shift_down_once(self) -> "RingElement":
        spec = self.spec
        if self.prec <= 1:
            raise PrecisionExhausted("no precision left to divide by pi")
        c0 = self.coeffs[0] % (spec.p ** spec.storage_exponent)
        if c0 % spec.p != 0:
            raise NonIntegralSolution("element is not divisible by pi")
        b = c0 // spec.p
        tail = list(self.coeffs[1:]) + [0]
        if b:
            uinv = _unit_inverse(spec)
            # c0 = p*b = pi^e * U^{-1} * b, so c0/pi contributes b*U^{-1}*x^{e-1}
            contrib = _poly_mul(spec, uinv, (b,) + (0,) * (spec.e - 1))
            shifted = [0] * spec.e
            for i, c in enumerate(contrib):
                for j, extra in self._times_x_power(c, i + spec.e - 1):
                    shifted[j] += extra
            tail = [t + s for t, s in zip(tail, shifted)]
        return RingElement(spec, tail, self.prec - 1)

    def _times_x_power(self, c: int, k: int):
        """Expand c * x^k in the quotient ring as (index, coefficient) pairs."""
        spec = self.spec
        vec = [0] * spec.e
        if k < spec.e:
            vec[k] = c
        else:
            poly = (c,) + (0,) * (spec.e - 1)
            xk = [0] * spec.e
            xk[1 if spec.e > 1 else 0] = 1
            if spec.e == 1:
                xk[0] = spec.p  # x == p when e == 1
            xk = tuple(xk)
            acc = poly
            for _ in range(k):
                acc = _poly_mul(spec, acc, xk)
            vec = list(acc)
        return list(enumerate(vec))

    def exact_div(self, other: "RingElement") -> "RingElement":
        """self / other when v(self) >= v(other); tracks lost significance."""
        self._check(other)
        vb = other.valuation()
        if vb is INFINITE:
            raise NonUnitInverse("division by an element that is zero to precision")
        va = self.valuation()
        if va is not INFINITE and va < vb:
            raise NonIntegralSolution(
                f"quotient is non-integral: v={va} < v={vb}")
        unit = other.shift_down(vb) if vb else other
        num = self.shift_down(vb) if vb else self
        return num * unit.invert()

    def digits(self, count: int = None) -> list:
        """pi-adic digit expansion in [0, p), for display and enumeration."""
        count = self.prec if count is None else min(count, self.prec)
        out, x = [], self
        for _ in range(count):
            d = x.residue()
            out.append(d)
            x = (x - x.spec.from_int(d, x.prec)) if d else x
            if x.prec <= 1:
                out.extend([0] * (count - len(out)))
                break
            x = x._shift_down_once()
        return out[:count]

    def __repr__(self):
        return f"RingElement({self.coeffs}, prec={self.prec})"


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def oracle_budget(default: int = DEFAULT_BUDGET) -> int:
    raw = os.environ.get("CYCLELAB_BUDGET")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"CYCLELAB_BUDGET is not an integer: {raw!r}")


@dataclass
class UnitGradedOrders:
    """Oracle answer: exact order exponents of gr^m(p^n) for every m."""

    spec: LocalFieldSpec
    n: int
    mode: str
    exponents: dict = field(default_factory=dict)
    modulus_exponent: int = 0

    def exponent(self, m: int) -> int:
        """log_p of the order of U_n^m / U_n^{m+1}."""
        if m in self.exponents:
            return self.exponents[m]
        if m > self.modulus_exponent - 1:
            raise ValidationError(f"oracle modulus too small for m = {m}")
        return self.exponents.get(m, 0)

    def total_exponent(self) -> int:
        return sum(self.exponents.values())

    def support(self) -> list:
        return sorted(m for m, a in self.exponents.items() if a > 0)


def unit_group_presentation(spec: LocalFieldSpec, n: int,
                            budget: int = None) -> UnitGradedOrders:
    """Exact graded orders of K^x/(K^x)^{p^n} along the unit filtration.

    Works inside R = O_K/pi^N with N = e * ceil(precision/e); requires
    N > c_n + n so that the set of p^n-th powers of units of R coincides
    with the image of (O_K^x)^{p^n}.  Below the budget the unit group is
    enumerated outright; above it, the subgroup of p^n-th powers is closed
    up from the p^n-th powers of the filtration generators 1 + pi^i.
    """
    spec._require_arithmetic()
    if n < 1:
        raise ValidationError("n must be >= 1")
    budget = oracle_budget() if budget is None else budget
    p, e = spec.p, spec.e
    mo = -(-spec.precision // e)
    nn = e * mo
    c_n = n * e + Fraction(e, p - 1)
    if not nn > c_n + n:
        raise ValidationError(
            f"oracle needs N > c_n + n = {c_n + n}; modulus gives only {nn}")
    work = replace(spec, precision=nn)
    q = p ** mo
    unit_count = (p - 1) * p ** (e * mo - 1)
    pn = p ** n

    def class_key(x: RingElement) -> tuple:
        # canonical representative of x mod pi^nn: every coefficient mod p^mo
        return tuple(c % q for c in x.coeffs)

    powers = {}
    if unit_count <= budget:
        mode = "enumeration"
        first = [c for c in range(1, q) if c % p != 0]
        rest = range(q)
        for tup in product(first, *([rest] * (e - 1))):
            x = RingElement(work, tup, nn)
            y = x ** pn
            powers.setdefault(class_key(y), y)
    else:
        mode = "presentation"
        one = work.one()
        pi = work.pi()
        gen_elems = {}
        acc = pi
        for i in range(1, nn):
            g = (one + acc) ** pn
            gen_elems.setdefault(class_key(g), g)
            acc = acc * pi
        powers = {class_key(one): one}
        frontier = [one]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gen_elems.values():
                    y = x * g
                    k = class_key(y)
                    if k not in powers:
                        if len(powers) >= budget:
                            raise BudgetExceeded(
                                f"p^n-power subgroup exceeds budget {budget}")
                        powers[k] = y
                        nxt.append(y)
            frontier = nxt

    one = work.one()
    # cnt[m] = #(elements of the p^n-power subgroup lying in 1 + pi^m)
    hist = [0] * (nn + 1)
    for x in powers.values():
        v = (x - one).valuation()
        hist[nn if v is INFINITE else v] += 1
    cnt = [0] * (nn + 2)
    for m in range(nn, 0, -1):
        cnt[m] = cnt[m + 1] + hist[m]
    cnt[0] = len(powers)

    exponents = {0: n}
    for m in range(1, nn):
        ratio = Fraction(cnt[m + 1], cnt[m])  # p-power by the subgroup property
        grade = 1 + _log_p(ratio, p)
        if grade:
            exponents[m] = grade
        else:
            exponents.setdefault(m, 0)
    return UnitGradedOrders(spec, n, mode, exponents, nn)


def _log_p(x: Fraction, p: int) -> int:
    num, den = x.numerator, x.denominator
    v = 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    if num != 1 or den != 1:
        raise ValidationError("oracle count ratio is not a p-power")
    return v
