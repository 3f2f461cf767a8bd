"""Filtration calculus for isogeny cokernels and unit groups.

Graded pieces gr^m(phi) of G(K)/phi F(K) follow the three-way split by the
break levels c_i(phi): residue lines strictly between breaks (killed when
p^{n-i} divides m), a Cartier-type cokernel at each break, zero above the
top break.  The unit filtration of K^x/p^n is the special case t_i = e.
The Kummer map shifts grade m in band i to c_i - c_i(phi) + m, bijectively;
image_support collects the nonzero shifted grades.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NotHeightOne, OutOfRange, PreconditionViolated, ValidationError
from .formalgroup import IsogenyChain, IsogenyData
from .localfield import INFINITE, LocalFieldSpec

QUASI_FINITE = "quasi-finite"
SEPARABLY_CLOSED = "separably-closed"
GENERIC = "generic"


@dataclass(frozen=True)
class GradedPiece:
    """One graded quotient, with enough structure to give its order.

    kind is one of "zero", "residue_line" (the residue field k, order p^f),
    "cyclic_p" (Z/p), "full_cyclic" (Z/p^n, grade 0 only) and
    "cartier_cokernel" (k/(a + a_p C^{-1})k, kept symbolic for a generic
    residue field; collapsed by field class otherwise).
    """

    kind: str
    n: int = 0

    def log_p_order(self, f: int = 1) -> int:
        if self.kind == "zero":
            return 0
        if self.kind == "residue_line":
            return f
        if self.kind == "cyclic_p":
            return 1
        if self.kind == "full_cyclic":
            return self.n
        raise ValidationError(
            "a symbolic Cartier cokernel has no numeric order; pass a "
            "quasi-finite or separably-closed field class")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def descriptor(self) -> str:
        if self.kind == "full_cyclic":
            return f"Z/p^{self.n}"
        return {"zero": "0", "residue_line": "k", "cyclic_p": "Z/p",
                "cartier_cokernel": "k/(a+a_p*C^-1)k"}[self.kind]


ZERO = GradedPiece("zero")
RESIDUE_LINE = GradedPiece("residue_line")
CYCLIC_P = GradedPiece("cyclic_p")
CARTIER = GradedPiece("cartier_cokernel")


def full_cyclic(n: int) -> GradedPiece:
    return GradedPiece("full_cyclic", n)


def collapse_cartier(field_class: str) -> GradedPiece:
    if field_class == QUASI_FINITE:
        return CYCLIC_P
    if field_class == SEPARABLY_CLOSED:
        return ZERO
    if field_class == GENERIC:
        return CARTIER
    raise ValidationError(f"unknown field class {field_class!r}")


@dataclass(frozen=True)
class IndexSet:
    """Sorted filtration indices where a graded image is nonzero."""

    indices: tuple
    bound: Fraction
    provenance: str = ""
    pieces: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(self.indices)))

    def __contains__(self, m) -> bool:
        return m in set(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def piece(self, m) -> GradedPiece:
        return self.pieces.get(m, ZERO)

    def log_order_sum(self, f: int = 1) -> int:
        return sum(self.pieces[m].log_p_order(f) for m in self.indices)


def gr_step_map(phi: IsogenyData, m: int) -> dict:
    """How a height-1 isogeny moves grade m, with the induced residue map.

    Below the break: grade m -> mp via x -> a_p x^p (bijective).  At the
    break m = t/(p-1): grade -> t + t/(p-1) via x -> a x + a_p x^p.  Above:
    grade m -> m + t via x -> a x (bijective), and G^{m+t} lands inside
    phi F^m.
    """
    if phi.height != 1:
        raise NotHeightOne(f"height {phi.height} isogeny passed to gr_step_map")
    if m < 1:
        raise PreconditionViolated("m must be >= 1")
    t = phi.t
    if t is INFINITE:
        raise PreconditionViolated("D(phi) vanishes to working precision")
    p = phi.spec.p
    break_level = Fraction(t, p - 1)
    if m < break_level:
        return {"case": "below", "source_grade": m, "target_grade": m * p,
                "map": "x -> a_p * x^p", "bijective": True}
    if m == break_level:
        return {"case": "break", "source_grade": m,
                "target_grade": t + m,
                "map": "x -> a*x + a_p*x^p", "bijective": False}
    return {"case": "above", "source_grade": m, "target_grade": m + t,
            "map": "x -> a*x", "bijective": True,
            "surjects_onto_filtration": True}


def gr_phi_structure(chain: IsogenyChain, m,
                     field_class: str = QUASI_FINITE) -> GradedPiece:
    """Structure of gr^m(phi) for the factored height-n isogeny.

    Strictly between c_i(phi) and c_{i+1}(phi): the residue field when
    p^{n-i} does not divide m, zero otherwise.  At c_{i+1}(phi): the
    Cartier cokernel, collapsed by the field class.  Above c_n(phi): zero.
    Non-integral grades are zero by convention.
    """
    if m < 1 or Fraction(m).denominator != 1:
        return ZERO
    m = int(m)
    n = chain.n
    p = chain.p
    if m > chain.c_phi(n):
        return ZERO
    for i in range(n):
        if m == chain.c_phi(i + 1):
            return collapse_cartier(field_class)
        if chain.c_phi(i) < m < chain.c_phi(i + 1):
            return ZERO if m % p ** (n - i) == 0 else RESIDUE_LINE
    return ZERO


def units_chain(spec: LocalFieldSpec, n: int) -> IsogenyChain:
    """The [p^n] chain on the multiplicative group: t_i = e for all i."""
    return IsogenyChain((spec.e,) * n, spec.p, spec.e)


def units_grade_structure(spec: LocalFieldSpec, n: int, m,
                          field_class: str = QUASI_FINITE) -> GradedPiece:
    """gr^m of K^x/p^n along the unit filtration; grade 0 is Z/p^n."""
    if spec.zeta_level < n:
        raise ValidationError(
            f"units filtration of K^x/p^{n} needs zeta_level >= {n}")
    if m == 0:
        return full_cyclic(n)
    return gr_phi_structure(units_chain(spec, n), m, field_class)


def kummer_grade_shift(chain: IsogenyChain, m: int, spec: LocalFieldSpec) -> int:
    """Target grade c_i - c_i(phi) + m for m in band i of the chain."""
    n = chain.n
    if spec.zeta_level < n:
        raise ValidationError(f"Kummer shift needs zeta_level >= {n}")
    if m < 1 or m > chain.c_phi(n):
        raise OutOfRange(f"m = {m} outside (0, c_n(phi) = {chain.c_phi(n)}]")
    for i in range(1, n + 1):
        if chain.c_phi(i - 1) < m <= chain.c_phi(i):
            j = spec.c(i) - chain.c_phi(i) + m
            if j.denominator != 1:
                raise ValidationError(f"shifted grade {j} is not an integer")
            return int(j)
    raise OutOfRange(f"m = {m} fits no band of {chain.t}")


def image_support(chain: IsogenyChain, spec: LocalFieldSpec,
                  field_class: str = QUASI_FINITE,
                  provenance: str = "") -> IndexSet:
    """Graded support of the Kummer image: shifted nonzero grades."""
    n = chain.n
    top = chain.c_phi(n)
    if top.denominator != 1:
        raise ValidationError(f"c_n(phi) = {top} is not an integer")
    indices = []
    pieces = {}
    for m in range(1, int(top) + 1):
        piece = gr_phi_structure(chain, m, field_class)
        if not piece.is_zero:
            j = kummer_grade_shift(chain, m, spec)
            indices.append(j)
            pieces[j] = piece
    if len(set(indices)) != len(indices):
        raise ValidationError("Kummer shift failed to be injective")
    return IndexSet(tuple(indices), spec.c(n), provenance, pieces)


def herbrand_jumps(chain: IsogenyChain, m: int) -> dict:
    """Ramification jumps of the splitting field of a grade-m cokernel class.

    Requires 1 <= m < c_1(phi) and p coprime to m.  Upper-numbering jumps
    are c_i(phi) - m; the lower-numbering jumps p^i t_i/(p-1) - m and the
    Herbrand conversion values are exposed alongside.
    """
    p = chain.p
    if not (1 <= m < chain.c_phi(1)):
        raise PreconditionViolated(
            f"m = {m} not in [1, c_1(phi) = {chain.c_phi(1)})")
    if m % p == 0:
        raise PreconditionViolated(f"p | m = {m}")
    upper = []
    lower = []
    for i in range(1, chain.n + 1):
        upper.append(chain.c_phi(i) - m)
        lower.append(Fraction(p ** i * chain.t[i - 1], p - 1) - m)
    return {"upper": upper, "lower": lower,
            "conversion": list(zip(lower, upper))}
