"""Truncated formal power series over RingElement coefficients.

One-variable series are dense lists indexed by T-degree; two-variable series
are triangular tables in total degree.  Both track a T-adic precision (the
highest degree that is asserted) and inherit a pi-adic precision as the
minimum over their coefficients.  Division by non-units during the
undetermined-coefficients solve shrinks the affected coefficient's tracked
precision instead of silently pretending exactness.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    ConstantTermPresent,
    NonIntegralSolution,
    PrecisionExhausted,
    ValidationError,
)
from .localfield import INFINITE, LocalFieldSpec, RingElement


@dataclass(frozen=True)
class ResidueSeries:
    """Image of a series in k[[T]] (f = 1: coefficients are ints mod p)."""

    p: int
    coeffs: tuple
    t_precision: int

    def support(self) -> list:
        return [k for k, c in enumerate(self.coeffs) if c % self.p != 0]


class TruncSeries:
    """One-variable truncated series sum_{k<=M} a_k T^k over a field spec."""

    __slots__ = ("spec", "coeffs", "t_precision")

    def __init__(self, spec: LocalFieldSpec, coeffs, t_precision: int = None):
        self.spec = spec
        coeffs = list(coeffs)
        self.t_precision = len(coeffs) - 1 if t_precision is None else t_precision
        while len(coeffs) < self.t_precision + 1:
            coeffs.append(spec.zero())
        self.coeffs = tuple(coeffs[: self.t_precision + 1])

    @classmethod
    def from_int_dict(cls, spec, entries: dict, t_precision: int) -> "TruncSeries":
        coeffs = [spec.zero()] * (t_precision + 1)
        for k, v in entries.items():
            if k <= t_precision:
                coeffs[k] = spec.from_int(v)
        return cls(spec, coeffs, t_precision)

    @classmethod
    def identity(cls, spec, t_precision: int) -> "TruncSeries":
        return cls.from_int_dict(spec, {1: 1}, t_precision)

    def coefficient(self, k: int) -> RingElement:
        if k > self.t_precision:
            raise PrecisionExhausted(f"degree {k} above T-precision "
                                     f"{self.t_precision}")
        return self.coeffs[k]

    def D(self) -> RingElement:
        """Linear coefficient a_1."""
        return self.coefficient(1)

    @property
    def pi_precision(self) -> int:
        return min(c.prec for c in self.coeffs)

    def has_constant_term(self) -> bool:
        return not self.coeffs[0].is_zero()

    def truncate(self, m: int) -> "TruncSeries":
        return TruncSeries(self.spec, self.coeffs[: m + 1], min(m, self.t_precision))

    def __add__(self, other):
        m = min(self.t_precision, other.t_precision)
        return TruncSeries(self.spec,
                           [a + b for a, b in zip(self.coeffs, other.coeffs)][: m + 1],
                           m)

    def __sub__(self, other):
        m = min(self.t_precision, other.t_precision)
        return TruncSeries(self.spec,
                           [a - b for a, b in zip(self.coeffs, other.coeffs)][: m + 1],
                           m)

    def __neg__(self):
        return TruncSeries(self.spec, [-a for a in self.coeffs], self.t_precision)

    def scale(self, c) -> "TruncSeries":
        if isinstance(c, int):
            c = self.spec.from_int(c)
        return TruncSeries(self.spec, [a * c for a in self.coeffs], self.t_precision)

    def __mul__(self, other):
        m = min(self.t_precision, other.t_precision)
        out = [self.spec.zero() for _ in range(m + 1)]
        prec = min(self.pi_precision, other.pi_precision)
        for i, a in enumerate(self.coeffs[: m + 1]):
            if a.is_zero():
                continue
            for j in range(m + 1 - i):
                b = other.coeffs[j]
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        out = [RingElement(self.spec, c.coeffs, prec) for c in out]
        return TruncSeries(self.spec, out, m)

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        m = min(self.t_precision, other.t_precision)
        return all((self.coeffs[k] - other.coeffs[k]).is_zero()
                   for k in range(m + 1))

    __hash__ = None

    def evaluate(self, x: RingElement) -> RingElement:
        """Value at a point of positive valuation; precision is honest about
        both the pi-precision of the coefficients and the T-truncation."""
        vx = x.valuation()
        vx_eff = x.prec if vx is INFINITE else vx
        if vx_eff < 1 and not self.coeffs[0].is_zero():
            raise ValidationError("evaluation point must lie in the maximal ideal")
        acc = self.spec.zero()
        for k in range(self.t_precision, 0, -1):
            acc = (acc + self.coeffs[k]) * x
        acc = acc + self.coeffs[0]
        prec = min(self.pi_precision + vx_eff, (self.t_precision + 1) * vx_eff,
                   acc.prec)
        return RingElement(self.spec, acc.coeffs, max(prec, 1))

    def __repr__(self):
        return f"TruncSeries(deg<={self.t_precision}, pi_prec={self.pi_precision})"


def compose(f: TruncSeries, g: TruncSeries) -> TruncSeries:
    """(f o g)(T); g must have zero constant term."""
    if g.has_constant_term():
        raise ConstantTermPresent("inner series has a nonzero constant term")
    m = min(f.t_precision, g.t_precision)
    fm = f.truncate(m)
    gm = g.truncate(m)
    spec = f.spec
    acc = TruncSeries(spec, [spec.zero()] * (m + 1), m)
    for k in range(m, 0, -1):
        acc = acc * gm
        acc = acc + TruncSeries(spec, [fm.coeffs[k]] + [spec.zero()] * m, m)
    acc = acc * gm
    return acc + TruncSeries(spec, [fm.coeffs[0]] + [spec.zero()] * m, m)


def mul_inverse(f: TruncSeries) -> TruncSeries:
    """1/f for a series with unit constant term."""
    if f.coeffs[0].valuation() != 0:
        raise ValidationError("series inverse needs a unit constant term")
    m = f.t_precision
    spec = f.spec
    u0 = f.coeffs[0].invert()
    out = [spec.zero() for _ in range(m + 1)]
    out[0] = u0
    for k in range(1, m + 1):
        s = spec.zero()
        for i in range(1, k + 1):
            if not f.coeffs[i].is_zero():
                s = s + f.coeffs[i] * out[k - i]
        out[k] = -(u0 * s)
    return TruncSeries(spec, out, m)


def reduce_mod_m(f: TruncSeries) -> ResidueSeries:
    """Coefficientwise reduction to the residue field."""
    return ResidueSeries(f.spec.p,
                         tuple(c.residue() for c in f.coeffs),
                         f.t_precision)


class TruncSeries2:
    """Two-variable truncated series, a triangular table in total degree.

    ``pi_floor`` caps the reported pi-precision so that dropping
    coefficients that merely *look* like zero at low precision cannot
    inflate the precision claim.
    """

    __slots__ = ("spec", "table", "t_precision", "pi_floor")

    def __init__(self, spec: LocalFieldSpec, table: dict, t_precision: int,
                 pi_floor: int = None):
        self.spec = spec
        self.t_precision = t_precision
        self.pi_floor = spec.precision if pi_floor is None else pi_floor
        kept = {}
        for ij, c in table.items():
            if ij[0] + ij[1] <= t_precision:
                if c.is_zero():
                    self.pi_floor = min(self.pi_floor, c.prec)
                else:
                    kept[ij] = c
        self.table = kept

    @classmethod
    def from_int_dict(cls, spec, entries: dict, t_precision: int) -> "TruncSeries2":
        return cls(spec, {ij: spec.from_int(v) for ij, v in entries.items()},
                   t_precision)

    def coefficient(self, i: int, j: int) -> RingElement:
        if i + j > self.t_precision:
            raise PrecisionExhausted(f"total degree {i + j} above T-precision")
        return self.table.get((i, j), self.spec.zero())

    @property
    def pi_precision(self) -> int:
        return min([self.pi_floor] + [c.prec for c in self.table.values()])

    def __add__(self, other):
        m = min(self.t_precision, other.t_precision)
        out = dict(self.table)
        for ij, c in other.table.items():
            out[ij] = out[ij] + c if ij in out else c
        return TruncSeries2(self.spec, out, m,
                            min(self.pi_floor, other.pi_floor))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return TruncSeries2(self.spec, {ij: -c for ij, c in self.table.items()},
                            self.t_precision, self.pi_floor)

    def scale(self, c) -> "TruncSeries2":
        if isinstance(c, int):
            c = self.spec.from_int(c)
        return TruncSeries2(self.spec, {ij: a * c for ij, a in self.table.items()},
                            self.t_precision, self.pi_floor)

    def __mul__(self, other):
        m = min(self.t_precision, other.t_precision)
        prec = min(self.pi_precision, other.pi_precision)
        fast = _mul2_fast(self, other, m, prec)
        if fast is not None:
            return fast
        out = {}
        for (i1, j1), a in self.table.items():
            for (i2, j2), b in other.table.items():
                if i1 + i2 + j1 + j2 <= m:
                    ij = (i1 + i2, j1 + j2)
                    prod = a * b
                    out[ij] = out[ij] + prod if ij in out else prod
        out = {ij: RingElement(self.spec, c.coeffs, prec) for ij, c in out.items()}
        return TruncSeries2(self.spec, out, m, prec)

    def __eq__(self, other):
        if not isinstance(other, TruncSeries2):
            return NotImplemented
        m = min(self.t_precision, other.t_precision)
        keys = set(self.table) | set(other.table)
        return all((self.coefficient(*ij) - other.coefficient(*ij)).is_zero()
                   for ij in keys if ij[0] + ij[1] <= m)

    __hash__ = None

    def swap(self) -> "TruncSeries2":
        return TruncSeries2(self.spec, {(j, i): c for (i, j), c in self.table.items()},
                            self.t_precision, self.pi_floor)

    def slice_x(self, i: int) -> TruncSeries:
        """The 1-variable series in Y multiplying X^i."""
        coeffs = [self.spec.zero()] * (self.t_precision + 1)
        for (a, b), c in self.table.items():
            if a == i:
                coeffs[b] = c
        return TruncSeries(self.spec, coeffs, self.t_precision)

    def max_x_degree(self) -> int:
        return max((i for (i, _) in self.table), default=0)

    def substitute(self, g: TruncSeries, h: TruncSeries) -> TruncSeries:
        """F(g(T), h(T)) for constant-free g, h."""
        if g.has_constant_term() or h.has_constant_term():
            raise ConstantTermPresent("substituted series must vanish at 0")
        m = min(self.t_precision, g.t_precision, h.t_precision)
        gm = g.truncate(m)
        acc = TruncSeries(self.spec, [self.spec.zero()], m)
        for i in range(self.max_x_degree(), -1, -1):
            fi = compose(self.slice_x(i).truncate(m), h.truncate(m))
            acc = acc * gm + fi
        return acc

    def evaluate(self, x: RingElement, y: RingElement) -> RingElement:
        vx, vy = x.valuation(), y.valuation()
        vmin = min(x.prec if vx is INFINITE else vx,
                   y.prec if vy is INFINITE else vy)
        if vmin < 1:
            raise ValidationError("evaluation points must lie in the maximal ideal")
        acc = self.spec.zero()
        for (i, j), c in sorted(self.table.items()):
            acc = acc + c * (x ** i) * (y ** j)
        prec = min(self.pi_precision + vmin, (self.t_precision + 1) * vmin, acc.prec)
        return RingElement(self.spec, acc.coeffs, max(prec, 1))

    def __repr__(self):
        return f"TruncSeries2(deg<={self.t_precision}, pi_prec={self.pi_precision})"


def _mul2_fast(a: TruncSeries2, b: TruncSeries2, m: int, prec: int):
    """Kronecker-packed product for e = 1 specs with uniform precision."""
    spec = a.spec
    if spec.e != 1 or not a.table or not b.table:
        return None
    if any(c.prec != prec for c in a.table.values()):
        return None
    if any(c.prec != prec for c in b.table.values()):
        return None
    mod = spec.p ** spec.storage_exponent
    width = a.t_precision + b.t_precision + 1
    nbits = 2 * mod.bit_length() + width.bit_length() + width.bit_length() + 1
    sb = -(-nbits // 8)

    def pack(t: TruncSeries2) -> int:
        buf = bytearray((t.t_precision * width + t.t_precision + 1) * sb)
        for (i, j), c in t.table.items():
            idx = (i * width + j) * sb
            buf[idx: idx + sb] = c.coeffs[0].to_bytes(sb, "little")
        return int.from_bytes(buf, "little")

    n = pack(a) * pack(b)
    total = (a.t_precision + b.t_precision) * width + width
    raw = n.to_bytes(total * sb + sb, "little")
    out = {}
    for i in range(m + 1):
        for j in range(m + 1 - i):
            idx = (i * width + j) * sb
            v = int.from_bytes(raw[idx: idx + sb], "little") % mod
            if v:
                out[(i, j)] = RingElement(spec, (v,), prec)
    return TruncSeries2(spec, out, m, prec)


def solve_undetermined(psi: TruncSeries, law: TruncSeries2) -> TruncSeries2:
    """Solve G(psi(X), psi(Y)) = psi(F(X, Y)) for G by triangular elimination.

    Each total degree divides once more by D(psi), so the tracked precision
    of the solved coefficients shrinks accordingly; running out raises
    PrecisionExhausted, and a division that fails to be integral raises
    NonIntegralSolution (the input kernel was not a subgroup).
    """
    spec = psi.spec
    if psi.has_constant_term():
        raise ConstantTermPresent("psi must vanish at 0")
    d = psi.D()
    if d.is_zero():
        raise ValidationError("psi has vanishing linear coefficient")
    m = min(psi.t_precision, law.t_precision)
    psi = psi.truncate(m)
    rhs = _substitute_into(psi, law, m)

    psipow = [TruncSeries.from_int_dict(spec, {0: 1}, m), psi]
    for _ in range(2, m + 1):
        psipow.append(psipow[-1] * psi)

    g = {}
    floor = min(psi.pi_precision, rhs.pi_precision)
    for total in range(1, m + 1):
        for a in range(total + 1):
            b = total - a
            acc = rhs.coefficient(a, b)
            for (i, j), gij in g.items():
                if i <= a and j <= b:
                    term = gij * psipow[i].coefficient(a) * psipow[j].coefficient(b)
                    acc = acc - term
            denom = d ** total
            try:
                val = acc.exact_div(denom)
            except NonIntegralSolution:
                raise NonIntegralSolution(
                    f"coefficient ({a},{b}) of the quotient law is not integral")
            if not val.is_zero():
                g[(a, b)] = val
            floor = min(floor, val.prec)
    return TruncSeries2(spec, g, m, floor)


def _substitute_into(psi: TruncSeries, law: TruncSeries2, m: int) -> TruncSeries2:
    """psi(F(X, Y)) as a two-variable series of total degree <= m."""
    spec = psi.spec
    lawm = TruncSeries2(spec, law.table, m)
    acc = TruncSeries2(spec, {}, m)
    for k in range(m, 0, -1):
        acc = acc * lawm
        ck = psi.coefficient(k)
        if not ck.is_zero():
            acc = acc + TruncSeries2(spec, {(0, 0): ck}, m)
    return acc * lawm
