"""Order combinatorics of the Hilbert symbol on unit-filtration pieces.

Only orders of pairings matter downstream, never symbol values: the image
of (U_n^s, U_n^t)_n inside mu_{p^n} is the member M^level of the root-of-
unity filtration, where level is s+t, bumped by one exactly when s and t
are both positive and both divisible by p.  A concrete classical oracle
for K = Q_2, n = 1 cross-checks the combinatorics at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import CountMismatch, ValidationError
from .localfield import INFINITE, LocalFieldSpec, RingElement


@dataclass(frozen=True)
class SymbolLevelTable:
    """The filtration M^m on mu_{p^n}: M^0 = mu_{p^n} and M^m = mu_{p^{n-i}}
    for c_i < m <= c_{i+1} (with c_0 = 0, c_{n+1} = infinity)."""

    spec: LocalFieldSpec
    n: int

    def __post_init__(self):
        if self.spec.zeta_level < self.n:
            raise ValidationError(
                f"symbol table at level n={self.n} needs zeta_level >= {self.n}")

    def depth(self, level) -> int:
        """log_p of the order of M^level."""
        if level <= 0:
            return self.n
        for i in range(self.n + 1):
            if level <= self.spec.c(i):
                return self.n - i + 1
        return 0

    def graded_support(self) -> list:
        """gr^m(mu_{p^n}) is Z/p exactly at m = c_i, 1 <= i <= n."""
        return [int(self.spec.c(i)) for i in range(1, self.n + 1)]


def pairing_level(s: int, t: int, p: int) -> int:
    """Filtration level reached by (U_n^s, U_n^t)_n: s+t, plus one when
    s, t > 0 are both divisible by p."""
    if s < 0 or t < 0:
        raise ValidationError("filtration indices must be >= 0")
    if s > 0 and t > 0 and s % p == 0 and t % p == 0:
        return s + t + 1
    return s + t


def symbol_order(s: int, t: int, spec: LocalFieldSpec, n: int) -> int:
    """Exponent alpha with #(U_n^s, U_n^t)_n = p^alpha."""
    level = pairing_level(s, t, spec.p)
    if level == 0:
        return n
    for i in range(n):
        if spec.c(i) < level <= spec.c(i + 1):
            return n - i
    return 0


def r_set(i: int, spec: LocalFieldSpec) -> set:
    """The witness pair set R_i = {(s, c_i - s): 0 < s < c_i, p coprime s}
    together with the boundary pairs (0, c_i) and (c_i, 0)."""
    if i < 1:
        raise ValidationError("i must be >= 1")
    ci = spec.c(i)
    if ci.denominator != 1:
        raise ValidationError(f"c_{i} = {ci} is not an integer")
    ci = int(ci)
    out = {(s, ci - s) for s in range(1, ci) if s % spec.p}
    out.add((0, ci))
    out.add((ci, 0))
    return out


@dataclass
class AlphaReport:
    """Pairing order of two graded supports, with its audit trail."""

    alpha: int
    witness: tuple
    level_hits: dict
    alpha_counted: int


def alpha_count(a_support, b_support, spec: LocalFieldSpec, n: int,
                full_report: bool = False):
    """Exponent of the pairing image of two graded subgroup supports.

    Primary definition: the maximum of symbol_order over support pairs
    (the image is the filtration member at the minimal effective level,
    because subgroups of mu_{p^n} are totally ordered).  The counting form
    #{i : some pair reaches level exactly c_i} is computed alongside and a
    disagreement raises CountMismatch.
    """
    a_set = sorted(set(a_support))
    b_set = sorted(set(b_support))
    p = spec.p
    alpha = 0
    witness = None
    if a_set and b_set:
        b_min_all = b_set[0]
        b_plain = min((t for t in b_set if t == 0 or t % p), default=None)
        b_pdiv = min((t for t in b_set if t > 0 and t % p == 0), default=None)
        best = None
        for s in a_set:
            if s == 0 or s % p:
                cand = [(s + b_min_all, (s, b_min_all))]
            else:
                cand = []
                if b_plain is not None:
                    cand.append((s + b_plain, (s, b_plain)))
                if b_pdiv is not None:
                    cand.append((s + b_pdiv + 1, (s, b_pdiv)))
            for level, pair in cand:
                if best is None or level < best[0]:
                    best = (level, pair)
        level, witness = best
        alpha = symbol_order(*witness, spec, n)

    hits = {}
    b_lookup = set(b_set)
    for i in range(1, n + 1):
        ci = spec.c(i)
        if ci.denominator != 1:
            raise ValidationError(f"c_{i} = {ci} is not an integer")
        ci = int(ci)
        pair = _find_level_hit(a_set, b_lookup, ci, p)
        if pair is not None:
            hits[i] = pair
    alpha_counted = len(hits)
    if alpha != alpha_counted:
        raise CountMismatch(
            f"minimal-level order p^{alpha} disagrees with the graded count "
            f"p^{alpha_counted} on supports {a_set[:8]}.../{b_set[:8]}...")
    if full_report:
        return AlphaReport(alpha, witness, hits, alpha_counted)
    return alpha


def _find_level_hit(a_set, b_lookup, ci: int, p: int):
    """Some (s, t) in A x B with pairing_level(s, t) = ci, if any."""
    for s in a_set:
        if s > ci:
            break
        if s == 0 or s % p:
            t = ci - s
            if t >= 0 and t in b_lookup:
                return (s, t)
        else:
            t = ci - s
            if t >= 0 and t in b_lookup and (t == 0 or t % p):
                return (s, t)
            t = ci - s - 1
            if t > 0 and t % p == 0 and t in b_lookup:
                return (s, t)
    return None


def brute_hilbert_2adic(a, b, spec: LocalFieldSpec = None) -> int:
    """The quadratic Hilbert symbol (a, b)_2 over Q_2, as +1 or -1.

    Classical closed form: for a = 2^alpha u, b = 2^beta v with u, v odd,
    (a, b) = (-1)^(eps(u) eps(v) + alpha omega(v) + beta omega(u)) where
    eps(u) = (u-1)/2 and omega(u) = (u^2-1)/8 mod 2.  Serves purely as the
    desk-scale oracle for symbol_order.
    """
    alpha, u = _two_adic_parts(a)
    beta, v = _two_adic_parts(b)
    eps_u = (u - 1) // 2 % 2
    eps_v = (v - 1) // 2 % 2
    om_u = (u * u - 1) // 8 % 2
    om_v = (v * v - 1) // 8 % 2
    exp = eps_u * eps_v + alpha * om_v + beta * om_u
    return -1 if exp % 2 else 1


def _two_adic_parts(a):
    if isinstance(a, RingElement):
        if a.spec.p != 2 or a.spec.e != 1:
            raise ValidationError("the brute symbol is defined over Q_2 only")
        v = a.valuation()
        if v is INFINITE:
            raise ValidationError("symbol arguments must be nonzero")
        if a.prec < v + 3:
            raise ValidationError("need the unit part mod 8; raise precision")
        unit = a.shift_down(v) if v else a
        digs = unit.digits(3)
        u = digs[0] + 2 * digs[1] + 4 * digs[2]
        return v, u
    if isinstance(a, Fraction):
        av, au = _two_adic_parts(a.numerator)
        bv, bu = _two_adic_parts(a.denominator)
        return av - bv, au * pow(bu, -1, 8) % 8
    a = int(a)
    if a == 0:
        raise ValidationError("symbol arguments must be nonzero")
    v = 0
    while a % 2 == 0:
        a //= 2
        v += 1
    return v, a % 8


def oracle_symbol_order_2adic(s: int, t: int) -> int:
    """Exponent of the subgroup of {+-1} generated by brute symbols of
    representatives of U_1^s x U_1^t over Q_2 (s or t = 0 means all of
    K^x/squares)."""
    reps_s = _filtration_reps(s)
    reps_t = _filtration_reps(t)
    for x in reps_s:
        for y in reps_t:
            if brute_hilbert_2adic(x, y) == -1:
                return 1
    return 0


def _filtration_reps(s: int) -> list:
    if s == 0:
        return [2, -1, 5, 3, 7, 6, 10, 14]
    return [1 + (2 ** s) * j for j in range(1, 16)]
