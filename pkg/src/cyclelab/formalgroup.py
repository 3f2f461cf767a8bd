"""Formal groups, their isogenies, and canonical-subgroup towers.

Everything is dimension-one and commutative.  A law F(X,Y) is a triangular
two-variable truncated series; multiplication maps, elliptic laws from
Weierstrass data, quotients by finite subgroups (Lubin), kernel valuations
via Newton polygons, and the recursion producing the isogeny invariants
(t_1, ..., t_n) of a supersingular [p^n]-tower all live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .errors import (
    ChainInvariantViolation,
    InsufficientPrecision,
    NonIntegralT,
    NotASubgroup,
    PrecisionExhausted,
    ValidationError,
)
from .localfield import INFINITE, LocalFieldSpec, RingElement
from .series import (
    ResidueSeries,
    TruncSeries,
    TruncSeries2,
    compose,
    mul_inverse,
    reduce_mod_m,
    solve_undetermined,
)


class FormalGroupLaw:
    """A commutative one-dimensional formal group law over O_K."""

    def __init__(self, spec: LocalFieldSpec, law: TruncSeries2,
                 inverse: TruncSeries = None, name: str = ""):
        self.spec = spec
        self.law = law
        self.name = name
        self._inverse = inverse

    @property
    def t_precision(self) -> int:
        return self.law.t_precision

    def add_points(self, x: RingElement, y: RingElement) -> RingElement:
        return self.law.evaluate(x, y)

    def inverse_series(self) -> TruncSeries:
        """The series i(T) with F(T, i(T)) = 0."""
        if self._inverse is None:
            self._inverse = _solve_inverse(self.law)
        return self._inverse

    def negate_point(self, x: RingElement) -> RingElement:
        return self.inverse_series().evaluate(x)

    def x_slice(self, i: int) -> TruncSeries:
        return self.law.slice_x(i)

    def invariant_differential(self) -> TruncSeries:
        """P(T) = 1 / (dF/dX)(0, T), the coefficient series of the
        normalized invariant differential P(T) dT.  Integral, unlike the
        formal logarithm it integrates to."""
        m = self.t_precision
        spec = self.spec
        fx = [spec.zero() for _ in range(m + 1)]
        for (i, j), c in self.law.table.items():
            if i == 1 and j <= m:
                fx[j] = c
        return mul_inverse(TruncSeries(spec, fx, m))

    def axioms_report(self, assoc_degree: int = None, points: int = 4,
                      seed: int = 1, differential_check: bool = True) -> dict:
        """Verify the formal-group axioms.

        The unit law and commutativity are checked symbolically at full
        T-degree.  Associativity is checked three ways: symbolically in
        three variables up to ``assoc_degree``; through the translation
        invariance P(F(X,Y)) * (dF/dX)(X,Y) = P(X) of the normalized
        invariant differential at full T-degree, an integral identity that
        over torsion-free coefficients integrates to
        log F = log X + log Y and hence pins down associativity to the
        full checked precision; and at random points of the maximal ideal.
        """
        m = self.t_precision
        spec = self.spec
        report = {}
        report["unit"] = (self.law.coefficient(1, 0) == spec.one()
                          and self.law.coefficient(0, 1) == spec.one()
                          and all(self.law.coefficient(i, 0).is_zero()
                                  and self.law.coefficient(0, i).is_zero()
                                  for i in [0] + list(range(2, m + 1))))
        report["commutative"] = self.law == self.law.swap()
        d = min(m, 8 if assoc_degree is None else assoc_degree)
        report["assoc_degree"] = d
        report["associative_symbolic"] = _associativity_symbolic(self.law, d)
        if differential_check:
            ok, checked = self._differential_invariance()
            report["differential_invariance"] = ok
            report["differential_pi_precision"] = checked
        if points:
            report["associative_points"] = _associativity_points(
                self, points, seed)
        return report

    def _differential_invariance(self):
        """P(F(X,Y)) * (dF/dX)(X,Y) - P(X) = 0 to total degree M - 1."""
        m = self.t_precision
        spec = self.spec
        p_series = self.invariant_differential()
        fx = {}
        for (i, j), c in self.law.table.items():
            if i >= 1:
                fx[(i - 1, j)] = c * i
        dfdx = TruncSeries2(spec, fx, m - 1, self.law.pi_floor)
        p_tail = TruncSeries(spec, [spec.zero()] + list(p_series.coeffs[1: m]),
                             m - 1)
        pf = _series_of_law(p_tail, self.law, m - 1)
        pf = pf + TruncSeries2(spec, {(0, 0): p_series.coeffs[0]}, m - 1)
        lhs = pf * dfdx
        rhs = TruncSeries2(spec, {(k, 0): c for k, c in
                                  enumerate(p_series.coeffs)
                                  if k <= m - 1 and not c.is_zero()},
                           m - 1, p_series.pi_precision)
        diff = lhs - rhs
        return (not diff.table, diff.pi_precision)

    def __repr__(self):
        return f"FormalGroupLaw({self.name or 'F'}, deg<={self.t_precision})"


def _series_of_law(f: TruncSeries, law: TruncSeries2, m: int) -> TruncSeries2:
    """f(F(X,Y)) by Horner; f has no constant term."""
    spec = f.spec
    lawm = TruncSeries2(spec, law.table, m, law.pi_floor)
    acc = TruncSeries2(spec, {}, m)
    top = min(f.t_precision, m)
    for k in range(top, 0, -1):
        c = f.coeffs[k]
        if acc.table:
            acc = acc * lawm
        if not c.is_zero():
            acc = acc + TruncSeries2(spec, {(0, 0): c}, m)
    return acc * lawm


def _associativity_symbolic(law: TruncSeries2, d: int) -> bool:
    """F(F(X,Y),Z) = F(X,F(Y,Z)) as 3-variable tables up to total degree d."""
    spec = law.spec
    x = {(1, 0, 0): spec.one()}
    y = {(0, 1, 0): spec.one()}
    z = {(0, 0, 1): spec.one()}
    fxy = _law_on3(law, x, y, d)
    fyz = _law_on3(law, y, z, d)
    left = _law_on3(law, fxy, z, d)
    right = _law_on3(law, x, fyz, d)
    keys = set(left) | set(right)
    zero = spec.zero()
    return all((left.get(k, zero) - right.get(k, zero)).is_zero() for k in keys)


def _mul3(a: dict, b: dict, d: int, spec) -> dict:
    out = {}
    for (i1, j1, k1), ca in a.items():
        for (i2, j2, k2), cb in b.items():
            if i1 + i2 + j1 + j2 + k1 + k2 <= d:
                key = (i1 + i2, j1 + j2, k1 + k2)
                prod = ca * cb
                out[key] = out[key] + prod if key in out else prod
    return {k: c for k, c in out.items() if not c.is_zero()}


def _law_on3(law: TruncSeries2, a: dict, b: dict, d: int) -> dict:
    """law(a, b) where a, b are 3-variable tables without constant term."""
    spec = law.spec
    bpow = [{(0, 0, 0): spec.one()}]
    for _ in range(d):
        bpow.append(_mul3(bpow[-1], b, d, spec))
    acc = {}
    for i in range(min(law.max_x_degree(), d), -1, -1):
        acc = _mul3(acc, a, d, spec)
        for j in range(d + 1 - i):
            c = law.table.get((i, j))
            if c is not None:
                for key, cb in bpow[j].items():
                    term = cb * c
                    acc[key] = acc[key] + term if key in acc else term
        acc = {k: v for k, v in acc.items() if not v.is_zero()}
    acc.pop((0, 0, 0), None)
    return acc


def _associativity_points(fg: FormalGroupLaw, count: int, seed: int) -> bool:
    import random

    rng = random.Random(seed)
    spec = fg.spec
    pts = []
    while len(pts) < 3 * count:
        u = spec.from_int(1 + spec.p * rng.randrange(1, spec.p ** 5))
        pts.append(spec.pi() * u)
    for t in range(count):
        x, y, z = pts[3 * t: 3 * t + 3]
        lhs = fg.add_points(fg.add_points(x, y), z)
        rhs = fg.add_points(x, fg.add_points(y, z))
        if not (lhs - rhs).is_zero():
            return False
    return True


def _solve_inverse(law: TruncSeries2) -> TruncSeries:
    """i(T) with F(T, i(T)) = 0, solved degree by degree."""
    spec = law.spec
    m = law.t_precision
    ident = TruncSeries.identity(spec, m)
    coeffs = [spec.zero(), -spec.one()] + [spec.zero()] * (m - 1)
    for k in range(2, m + 1):
        partial = TruncSeries(spec, coeffs, m)
        residue = law.substitute(ident, partial).coefficient(k)
        coeffs[k] = -residue
    inv = TruncSeries(spec, coeffs, m)
    assert all(law.substitute(ident, inv).coefficient(k).is_zero()
               for k in range(1, m + 1))
    return inv


def multiplicative_group(spec: LocalFieldSpec, t_prec: int = None) -> FormalGroupLaw:
    """G_m-hat: F(X,Y) = X + Y + XY, with inverse sum_k (-T)^k."""
    m = spec.precision if t_prec is None else t_prec
    law = TruncSeries2.from_int_dict(spec, {(1, 0): 1, (0, 1): 1, (1, 1): 1}, m)
    inverse = TruncSeries.from_int_dict(
        spec, {k: (-1) ** k for k in range(1, m + 1)}, m)
    return FormalGroupLaw(spec, law, inverse, "Gm")


def elliptic_formal_group(spec: LocalFieldSpec, a_invariants,
                          t_prec: int = None) -> FormalGroupLaw:
    """Expansion of an elliptic curve along the origin in z = -x/y.

    ``a_invariants`` is (a1, a2, a3, a4, a6) with entries in O_K.  The
    default T-degree is 2p^2 + 2, the smallest window exposing both the
    T^p coefficient of [p] and the T^{p^2} term that witnesses height 2.
    """
    p = spec.p
    m = (2 * p * p + 2) if t_prec is None else t_prec
    if spec.precision <= m:
        raise PrecisionExhausted(
            f"need pi-precision > {m} to build a degree-{m} elliptic law")
    a1, a2, a3, a4, a6 = [
        c if isinstance(c, RingElement) else spec.from_int(c)
        for c in a_invariants]
    d = m + 3
    w = _weierstrass_w(spec, (a1, a2, a3, a4, a6), d)

    lam = _lambda_series(spec, w, d)
    w1 = _inject_x(spec, w, d)
    xvar = TruncSeries2.from_int_dict(spec, {(1, 0): 1}, d)
    yvar = TruncSeries2.from_int_dict(spec, {(0, 1): 1}, d)
    nu = w1 - lam * xvar

    one2 = TruncSeries2.from_int_dict(spec, {(0, 0): 1}, d)
    lam2 = lam * lam
    lam3 = lam2 * lam
    alpha = one2 + lam.scale(a2) + lam2.scale(a4) + lam3.scale(a6)
    beta = (lam.scale(a1) + nu.scale(a2) + lam2.scale(a3)
            + (lam * nu).scale(2 * a4) + (lam2 * nu).scale(3 * a6))
    z3 = -(beta * _unit_inverse2(alpha)) - xvar - yvar

    inv = _elliptic_inverse(spec, (a1, a3), w, d)
    law = _compose_1var_2var(inv, z3, m)
    law = TruncSeries2(spec, law.table, m, law.pi_floor)
    if not (law.coefficient(1, 0) == spec.one()
            and law.coefficient(0, 1) == spec.one()):
        raise ValidationError("elliptic law failed the unit normalization")
    return FormalGroupLaw(spec, law, inv, "E-hat")


def _weierstrass_w(spec, a, d):
    a1, a2, a3, a4, a6 = a
    z3 = TruncSeries.from_int_dict(spec, {3: 1}, d)
    zvar = TruncSeries.identity(spec, d)
    w = z3
    for _ in range(d - 2):
        w2 = w * w
        w3 = w2 * w
        w = (z3 + (zvar * w).scale(a1) + (zvar * zvar * w).scale(a2)
             + w2.scale(a3) + (zvar * w2).scale(a4) + w3.scale(a6))
    return w


def _lambda_series(spec, w: TruncSeries, d: int) -> TruncSeries2:
    """(w(Y) - w(X)) / (Y - X) = sum_k A_k sum_{i+j=k-1} X^i Y^j."""
    table = {}
    for k in range(3, d + 1):
        ak = w.coeffs[k]
        if ak.is_zero():
            continue
        for i in range(k):
            j = k - 1 - i
            if i + j <= d:
                key = (i, j)
                table[key] = table[key] + ak if key in table else ak
    return TruncSeries2(spec, table, d, w.pi_precision)


def _inject_x(spec, f: TruncSeries, d: int) -> TruncSeries2:
    return TruncSeries2(spec, {(k, 0): c for k, c in enumerate(f.coeffs)
                               if k and not c.is_zero()}, d, f.pi_precision)


def _unit_inverse2(f: TruncSeries2) -> TruncSeries2:
    """1/f for a two-variable series with unit constant term, by Newton."""
    spec = f.spec
    m = f.t_precision
    c0 = f.coefficient(0, 0)
    if c0.valuation() != 0:
        raise ValidationError("series inverse needs a unit constant term")
    y = TruncSeries2(spec, {(0, 0): c0.invert()}, m)
    two = TruncSeries2(spec, {(0, 0): spec.from_int(2)}, m)
    steps = max(1, (m + 1).bit_length() + 1)
    for _ in range(steps):
        y = y * (two - f * y)
    return y


def _elliptic_inverse(spec, a13, w: TruncSeries, d: int) -> TruncSeries:
    """z(-P) = -z / (1 - a1 z - a3 w(z))."""
    a1, a3 = a13
    zvar = TruncSeries.identity(spec, d)
    denom = (TruncSeries.from_int_dict(spec, {0: 1}, d)
             - zvar.scale(a1) - w.scale(a3))
    return (-zvar) * mul_inverse(denom)


def _compose_1var_2var(f: TruncSeries, g: TruncSeries2, m: int) -> TruncSeries2:
    """f(g(X,Y)) for constant-free f and g, to total degree m."""
    spec = f.spec
    gm = TruncSeries2(spec, g.table, m, g.pi_floor)
    acc = TruncSeries2(spec, {}, m)
    for k in range(min(f.t_precision, m), 1, -1):
        acc = acc + TruncSeries2(spec, {(0, 0): f.coeffs[k]}, m)
        acc = acc * gm
    return (acc + TruncSeries2(spec, {(0, 0): f.coeffs[1]}, m)) * gm


class IsogenyData:
    """An isogeny phi(T) together with its filtration invariants.

    ``t`` is v_K(D(phi)); ``height`` comes from the residue series
    phi mod m = psi(T^{p^h}); ``a_p_residue`` is the residue of the T^p
    coefficient (a unit for height 1, Lemma-type constraint checked by
    callers); ``v_a`` is the valuation of the T^p coefficient, the input
    to the canonical-subgroup recursion for supersingular curves.
    """

    def __init__(self, spec: LocalFieldSpec, series: TruncSeries):
        self.spec = spec
        self.series = series
        self.residues = reduce_mod_m(series)
        support = self.residues.support()
        if not support:
            raise PrecisionExhausted(
                "series vanishes mod m to T-precision; height unreadable")
        k0 = support[0]
        h = 0
        while k0 % spec.p == 0:
            k0 //= spec.p
            h += 1
        if k0 != 1:
            raise ValidationError(
                f"lowest residue degree {support[0]} is not a p-power; "
                "not an isogeny reduction")
        ph = spec.p ** h
        if any(s % ph for s in support):
            raise ValidationError("residue support not contained in p^h * Z")
        self.height = h

    @property
    def t(self):
        """v_K(D(phi)); INFINITE if D vanishes to precision."""
        return self.series.D().valuation()

    @property
    def a_p_residue(self) -> int:
        return self.series.coefficient(self.spec.p).residue()

    @property
    def v_a(self):
        """Valuation of the T^p coefficient (a(E-hat) for [p] maps)."""
        return self.series.coefficient(self.spec.p).valuation()

    def coefficient(self, k: int) -> RingElement:
        return self.series.coefficient(k)

    def __repr__(self):
        return f"IsogenyData(height={self.height}, t={self.t})"


def mult_by(fg: FormalGroupLaw, m: int) -> IsogenyData:
    """The multiplication-by-m map [m](T) on the law."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    spec = fg.spec
    ident = TruncSeries.identity(spec, fg.t_precision)
    acc = ident
    for _ in range(m - 1):
        acc = fg.law.substitute(acc, ident)
    return IsogenyData(spec, acc)


def kernel_valuations(phi: IsogenyData) -> list:
    """Newton-polygon slopes of phi(T)/T, as (valuation, multiplicity) pairs.

    The multiplicities sum to p^h - 1; the polygon is anchored at the unit
    coefficient of T^{p^h}.  Coefficients that vanish to precision must lie
    on or above the hull, else InsufficientPrecision is raised.
    """
    h = phi.height
    if h == 0:
        return []
    p = phi.spec.p
    ph = p ** h
    if phi.series.t_precision < ph:
        raise InsufficientPrecision(
            f"need T-degree >= p^h = {ph} to read the kernel polygon")
    pts, unknown = [], []
    for k in range(1, ph + 1):
        c = phi.series.coefficient(k)
        v = c.valuation()
        if v is INFINITE:
            unknown.append((k - 1, c.prec))
        else:
            pts.append((k - 1, Fraction(v)))
    if not pts or pts[0][0] != 0 and phi.series.D().valuation() is INFINITE:
        raise InsufficientPrecision("D(phi) vanishes to precision")
    if pts[-1][0] != ph - 1 or pts[-1][1] != 0:
        raise ValidationError("T^{p^h} coefficient is not a unit")
    hull = _lower_hull(pts)
    for x, prec in unknown:
        if Fraction(prec) < _hull_value(hull, x):
            raise InsufficientPrecision(
                f"coefficient of T^{x + 1} only known mod pi^{prec}, "
                "below the candidate polygon")
    out = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        out.append((Fraction(y1 - y2, x2 - x1), x2 - x1))
    return out


def _lower_hull(pts):
    hull = []
    for pt in sorted(pts):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def _hull_value(hull, x):
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x1 <= x <= x2:
            return y1 + Fraction(y2 - y1, x2 - x1) * (x - x1)
    return Fraction(0)


def quotient_isogeny(fg: FormalGroupLaw, kernel_points,
                     verify: bool = True):
    """Quotient G = F / (finite subgroup) via Lubin's construction.

    psi(T) = prod over the kernel (0 included) of F(T, x); the quotient law
    solves G(psi(X), psi(Y)) = psi(F(X, Y)).  Raises NotASubgroup when the
    point set is not closed under addition and negation.
    """
    spec = fg.spec
    pts = list(kernel_points)
    full = [spec.zero()] + pts
    for x in pts:
        if x.valuation() is INFINITE:
            raise ValidationError("kernel points must be nonzero")
    for x in full:
        for y in full:
            s = fg.add_points(x, y)
            if not any((s - z).is_zero() for z in full):
                raise NotASubgroup("point set is not closed under addition")
    count = len(full)
    h = 0
    while count % spec.p == 0:
        count //= spec.p
        h += 1
    if count != 1:
        raise NotASubgroup(f"kernel size {len(full)} is not a p-power")

    m = fg.t_precision
    psi = TruncSeries.identity(spec, m)
    for x in pts:
        fx = _law_at_point(fg.law, x, m)
        psi = psi * fx
    psi_data = IsogenyData(spec, psi)
    if psi_data.height != h:
        raise ValidationError(
            f"product isogeny has height {psi_data.height}, kernel gives {h}")
    g_law = solve_undetermined(psi, fg.law)
    quotient = FormalGroupLaw(spec, g_law, name=f"{fg.name}/ker")
    if verify:
        lhs = _series_of_law(psi, fg.law, g_law.t_precision)
        rhs = _psi_pair_into(psi, g_law)
        if (lhs - rhs).table:
            raise ValidationError("quotient law failed the homomorphism check")
    return quotient, psi_data


def _law_at_point(law: TruncSeries2, x: RingElement, m: int) -> TruncSeries:
    """F(T, x) as a one-variable series in T."""
    spec = law.spec
    xpow = [spec.one()]
    for _ in range(m):
        xpow.append(xpow[-1] * x)
    coeffs = [spec.zero() for _ in range(m + 1)]
    for (i, j), c in law.table.items():
        if i <= m:
            coeffs[i] = coeffs[i] + c * xpow[j]
    return TruncSeries(spec, coeffs, m)


def _psi_pair_into(psi: TruncSeries, g_law: TruncSeries2) -> TruncSeries2:
    """G(psi(X), psi(Y)) as a two-variable series."""
    spec = psi.spec
    m = g_law.t_precision
    psix = {(k, 0): c for k, c in enumerate(psi.coeffs) if k and not c.is_zero()}
    psiy = {(0, k): c for k, c in enumerate(psi.coeffs) if k and not c.is_zero()}
    px = TruncSeries2(spec, psix, m, psi.pi_precision)
    py = TruncSeries2(spec, psiy, m, psi.pi_precision)
    xpow = [TruncSeries2.from_int_dict(spec, {(0, 0): 1}, m)]
    ypow = [TruncSeries2.from_int_dict(spec, {(0, 0): 1}, m)]
    for _ in range(m):
        xpow.append(xpow[-1] * px)
        ypow.append(ypow[-1] * py)
    acc = TruncSeries2(spec, {}, m)
    for (i, j), c in g_law.table.items():
        acc = acc + (xpow[i] * ypow[j]).scale(c)
    return acc


@dataclass(frozen=True)
class IsogenyChain:
    """Invariants (t_1, ..., t_n) of a height-n isogeny factored into
    height-1 steps, with the derived break levels c_i(phi)."""

    t: tuple
    p: int
    e: int
    warnings: tuple = ()
    provenance: tuple = ()

    def __post_init__(self):
        for ti in self.t:
            if ti <= 0:
                raise NonIntegralT(f"step invariant t = {ti} must be positive")
            if ti % (self.p - 1):
                raise NonIntegralT(
                    f"t = {ti} is not divisible by p-1; kernel points could "
                    "not be rational")

    @property
    def n(self) -> int:
        return len(self.t)

    def c_phi(self, i: int) -> Fraction:
        """c_i(phi) = t_1 + ... + t_i + t_i/(p-1), with c_0(phi) = 0."""
        if i == 0:
            return Fraction(0)
        return sum(self.t[:i]) + Fraction(self.t[i - 1], self.p - 1)

    @property
    def total_t(self) -> int:
        """v_K(D(phi)) = t_1 + ... + t_n."""
        return sum(self.t)

    def dual(self) -> "IsogenyChain":
        """t-hat_i = e - t_{n-i+1}."""
        return IsogenyChain(tuple(self.e - ti for ti in reversed(self.t)),
                            self.p, self.e, (), ("dual of " + repr(self.t),))

    def lemma_warnings(self) -> list:
        """Monotonicity and p-power divisibility checks (warnings by default)."""
        out = []
        for i in range(self.n - 1):
            if self.t[i] >= self.t[i + 1]:
                out.append(f"t_{i + 1} = {self.t[i]} >= t_{i + 2} = "
                           f"{self.t[i + 1]}: chain is not strictly increasing")
        for i in range(1, self.n):
            if self.t[i - 1] % self.p ** (self.n - i):
                out.append(f"p^{self.n - i} does not divide t_{i} = "
                           f"{self.t[i - 1]}")
        return out


def canonical_chain(v_a, e: int, n: int, p: int,
                    strict: bool = False) -> IsogenyChain:
    """Invariants of the [p^n]-tower of a supersingular formal group with
    v_K(a(E-hat)) = v_a, by the canonical-subgroup case analysis.

    ``v_a`` may be None (or any rational >= pe/(p+1)) to select the
    large-Hasse case outright.  The recursion tracks the current quotient's
    v_a and whether the forced kernel of the next height-1 step is its
    canonical subgroup; the first step picks the maximal-valuation
    generator.  Steps are produced in tower order t_n, t_{n-1}, ..., t_1.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    threshold = Fraction(p * e, p + 1)
    v = None if v_a is None else Fraction(v_a)
    if v is not None and v <= 0:
        raise ValidationError("supersingular reduction needs v_a > 0")
    steps = []
    provenance = []
    canonical = True
    for j in range(n, 0, -1):
        if v is None or v >= threshold:
            kappa = Fraction(e, p * p - 1)
            provenance.append(
                f"step {j}: v_a >= pe/(p+1); kernel valuation e/(p^2-1) = {kappa}")
            v = Fraction(e, p + 1)
            canonical = False
        elif canonical:
            kappa = Fraction(e - v, p - 1)
            if v < Fraction(e, p + 1):
                provenance.append(
                    f"step {j}: canonical kernel, valuation (e-v_a)/(p-1) = "
                    f"{kappa}; next v_a = p*v_a (case a, next kernel canonical)")
                v = p * v
                canonical = True
            elif v == Fraction(e, p + 1):
                provenance.append(
                    f"step {j}: canonical kernel, valuation (e-v_a)/(p-1) = "
                    f"{kappa}; next v_a >= pe/(p+1) (case b)")
                v = None
            else:
                provenance.append(
                    f"step {j}: canonical kernel, valuation (e-v_a)/(p-1) = "
                    f"{kappa}; next v_a = e - v_a (case c, next kernel "
                    "non-canonical)")
                v = e - v
                canonical = False
        else:
            kappa = v / (p * p - p)
            provenance.append(
                f"step {j}: non-canonical kernel, valuation v_a/(p^2-p) = "
                f"{kappa}; next v_a = v_a/p")
            v = v / p
            canonical = False
        t_j = (p - 1) * kappa
        if t_j.denominator != 1:
            raise NonIntegralT(
                f"step {j} gives t/(p-1) = {kappa}, not an integer: "
                "the p^n-torsion cannot be rational at these parameters")
        steps.append(int(t_j))
    chain = IsogenyChain(tuple(reversed(steps)), p, e, (), tuple(provenance))
    warnings = chain.lemma_warnings()
    if warnings and strict:
        raise ChainInvariantViolation("; ".join(warnings))
    return IsogenyChain(chain.t, p, e, tuple(warnings), tuple(provenance))
