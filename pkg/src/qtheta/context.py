"""Shared precision model and error taxonomy.

Every evaluation in this package runs inside one :class:`PrecisionContext`:
a fixed binary working precision, a truncation threshold for infinite
products, and the default tolerance that turns residuals into verdicts.
No mixed precision is allowed within a single evaluation, which keeps
residuals reproducible across runs and machines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import gmpy2
from gmpy2 import mpc, mpfr

__all__ = [
    "PrecisionContext",
    "DomainError",
    "SingularTermError",
    "NonterminatingSeriesError",
    "DrawRejected",
    "Number",
]

Number = Union[int, float, complex, str, mpfr, mpc]

# Relative magnitude below which a denominator theta makes a sampled draw
# unusable (loses ~6 digits out of 77; nowhere near the verdict tolerance).
NEAR_SINGULAR_REL = 1e-6

# Admits the stock pairing (256 bits, 1e-40): a literal half-precision floor
# would be 2^-128 = 2.9e-39 and reject it.
_TOLERANCE_GUARD_SLACK_BITS = 5


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularTermError(ZeroDivisionError):
    """A theta factor required in a denominator vanished."""

    def __init__(self, message: str, *, parameter=None, index=None):
        super().__init__(message)
        self.parameter = parameter
        self.index = index


class NonterminatingSeriesError(DomainError):
    """The series does not terminate and no explicit cutoff was supplied."""


class DrawRejected(Exception):
    """A sampled parameter set failed a regularity check.

    ``reason`` is a short category string used for rejection bookkeeping
    (e.g. ``"near-singular-theta"``, ``"base-collision"``).
    """

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision, product truncation threshold, and tolerance.

    Invariants enforced at construction:

    * ``precision_bits >= 53``;
    * ``product_cutoff <= 2^-precision_bits`` (tail factors dropped below
      roundoff);
    * ``default_tolerance >= 2^-(precision_bits//2 + 5)`` (never claim more
      accuracy than the arithmetic can deliver).
    """

    precision_bits: int = 256
    product_cutoff: mpfr = None
    default_tolerance: mpfr = None

    def __post_init__(self):
        bits = int(self.precision_bits)
        if bits < 53:
            raise DomainError(f"precision_bits must be >= 53, got {bits}")
        object.__setattr__(self, "precision_bits", bits)
        with self.workspace():
            cutoff_cap = mpfr(2) ** (-bits)
            cutoff = self.product_cutoff
            cutoff = cutoff_cap if cutoff is None else mpfr(cutoff)
            if not (0 < cutoff <= cutoff_cap):
                raise DomainError(
                    f"product_cutoff must lie in (0, 2^-{bits}], got {cutoff}"
                )
            tol_floor = mpfr(2) ** (-(bits // 2 + _TOLERANCE_GUARD_SLACK_BITS))
            tol = self.default_tolerance
            if tol is None:
                tol = mpfr("1e-40")
                if tol < tol_floor:
                    tol = tol_floor
            else:
                tol = mpfr(tol)
            if tol < tol_floor:
                raise DomainError(
                    f"default_tolerance {tol} claims more accuracy than "
                    f"{bits}-bit arithmetic holds (floor {tol_floor})"
                )
            object.__setattr__(self, "product_cutoff", cutoff)
            object.__setattr__(self, "default_tolerance", tol)
            object.__setattr__(
                self, "_zero_threshold", mpfr(2) ** (mpfr("-0.3") * bits)
            )

    def workspace(self):
        """gmpy2 context manager activating this precision."""
        return gmpy2.context(precision=self.precision_bits, allow_complex=True)

    @property
    def zero_threshold(self) -> mpfr:
        """Relative magnitude below which a theta value counts as a true zero
        (distinguishes zeros of the function from mere cancellation)."""
        return self._zero_threshold

    @property
    def decimal_digits(self) -> int:
        """Decimal digits carried by this precision (for printing)."""
        return int(self.precision_bits * 0.30103) + 2

    def to_mpc(self, value: Number) -> mpc:
        """Convert to a complex value at this context's precision."""
        with self.workspace():
            if isinstance(value, mpc):
                return +value
            if isinstance(value, str):
                s = value.strip().replace("i", "j")
                try:
                    return mpc(mpfr(s))
                except ValueError:
                    return mpc(complex(s))
            if isinstance(value, complex):
                return mpc(mpfr(value.real), mpfr(value.imag))
            return mpc(mpfr(value))

    def to_real(self, value) -> mpfr:
        with self.workspace():
            return mpfr(value)


DEFAULT_CONTEXT = PrecisionContext()
