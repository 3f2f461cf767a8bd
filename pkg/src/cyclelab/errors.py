"""Exception hierarchy shared by all cyclelab modules."""


class CyclelabError(Exception):
    """Base class for all package errors."""


class ValidationError(CyclelabError):
    """An input violates a documented invariant."""


class NonIntegralE0(ValidationError):
    """(p-1) does not divide e although a p-th root of unity is claimed."""


class ZetaRamification(ValidationError):
    """p^{n-1}(p-1) does not divide e, so zeta_{p^n} cannot lie in K."""


class NonUnitInverse(CyclelabError):
    """Inversion requested for an element of positive valuation."""


class PrecisionExhausted(CyclelabError):
    """An operation needs more tracked precision than the operands carry."""


class InsufficientPrecision(PrecisionExhausted):
    """A Newton-polygon vertex is ambiguous at the current precision."""


class BudgetExceeded(CyclelabError):
    """A brute-force oracle would exceed the configured size budget."""


class ConstantTermPresent(CyclelabError):
    """Series composition requires the inner series to vanish at 0."""


class NonIntegralSolution(CyclelabError):
    """An undetermined-coefficients solve produced a non-integral series."""


class NotASubgroup(CyclelabError):
    """A point set is not closed under the formal group operations."""


class NotHeightOne(CyclelabError):
    """An operation defined only for height-1 isogenies got another height."""


class NonIntegralT(CyclelabError):
    """A canonical-subgroup chain produced a non-integral invariant t/(p-1),
    so the relevant torsion cannot be rational over the given field."""


class ChainInvariantViolation(CyclelabError):
    """Strict mode: an isogeny chain violates monotonicity/divisibility."""


class PreconditionViolated(CyclelabError):
    """Arguments are outside an operation's stated domain."""


class OutOfRange(CyclelabError):
    """A filtration index lies outside the chain's range."""


class NotClosed(CyclelabError):
    """The Cartier operator was applied to a form that is not closed."""


class CountMismatch(CyclelabError):
    """The two pairing-order definitions (minimal effective level vs. graded
    count) disagree on a support pair; see the hilbert module notes."""


class ParseError(CyclelabError):
    """A descriptor is not syntactically valid."""
