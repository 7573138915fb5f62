"""Terminating theta hypergeometric series in E-form and V-form.

The E-form series with base q and nome p is

    E(a_1..a_{r+1}; b_1..b_r; q, p; z) =
        sum_n (a_1,...,a_{r+1}; q,p)_n / (q, b_1,...,b_r; q,p)_n * z^n,

and the very-well-poised V-form is

    V(a_1; a_6..a_{r+1}; q, p; z) =
        sum_n theta(a_1 q^{2n}; p)/theta(a_1; p)
              * (a_1, a_6,...,a_{r+1}; q,p)_n
                / (q, a_1 q/a_6,...,a_1 q/a_{r+1}; q,p)_n * (q z)^n.

Only terminating (or explicitly truncated) evaluation is supported;
convergence analysis of nonterminating series is out of scope here.
At p = 0 both reduce termwise to their basic-hypergeometric limits,
which :func:`p_to_zero_check` verifies against an independent evaluator
that never touches the theta machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import gmpy2
from gmpy2 import mpc, mpfr

from .context import (
    DomainError,
    DrawRejected,
    NonterminatingSeriesError,
    Number,
    PrecisionContext,
    SingularTermError,
)
from .core import ThetaCache

__all__ = [
    "ESeriesSpec",
    "VSeriesSpec",
    "TerminationInfo",
    "e_series",
    "v_series",
    "e_term",
    "e_sum",
    "e_sum_scaled",
    "v_term",
    "v_sum",
    "v_sum_scaled",
    "detect_termination",
    "is_e_balanced",
    "is_well_poised",
    "is_very_well_poised",
    "v_balance_condition",
    "vwp_embed",
    "vwp_quotient",
    "p_to_zero_check",
]

_TERMINATION_SEARCH_LIMIT = 64


@dataclass(frozen=True)
class ESeriesSpec:
    """r+1 numerator parameters, r denominator parameters, base, nome, argument."""

    numerator: tuple
    denominator: tuple
    q: mpc
    p: mpc
    z: mpc

    def __post_init__(self):
        if len(self.denominator) != len(self.numerator) - 1:
            raise DomainError(
                "E-form needs denominator length = numerator length - 1, got "
                f"{len(self.numerator)} over {len(self.denominator)}"
            )

    @property
    def r(self) -> int:
        return len(self.denominator)


@dataclass(frozen=True)
class VSeriesSpec:
    """Leading parameter a_1 plus the tail a_6..a_{r+1}; argument defaults to 1."""

    a1: mpc
    tail: tuple
    q: mpc
    p: mpc
    z: mpc = 1

    @property
    def r(self) -> int:
        return len(self.tail) + 4


@dataclass(frozen=True)
class TerminationInfo:
    terminating: bool
    order: int = 0
    witness_index: Optional[int] = None


Upper = Union[int, TerminationInfo, None]


def e_series(numerator, denominator, q, p, z, ctx: PrecisionContext) -> ESeriesSpec:
    return ESeriesSpec(
        tuple(ctx.to_mpc(a) for a in numerator),
        tuple(ctx.to_mpc(b) for b in denominator),
        ctx.to_mpc(q),
        ctx.to_mpc(p),
        ctx.to_mpc(z),
    )


def v_series(a1, tail, q, p, z=1, *, ctx: PrecisionContext) -> VSeriesSpec:
    return VSeriesSpec(
        ctx.to_mpc(a1),
        tuple(ctx.to_mpc(a) for a in tail),
        ctx.to_mpc(q),
        ctx.to_mpc(p),
        ctx.to_mpc(z),
    )


def _close(u: mpc, v: mpc, ctx: PrecisionContext) -> bool:
    return abs(u - v) <= ctx.zero_threshold * max(mpfr(1), abs(u), abs(v))


def _denominator_fac(
    cache: ThetaCache, b: mpc, q: mpc, n: int, reject_rel=None
) -> mpc:
    """(b; q, p)_n destined for a denominator; flags the offending factor.

    With ``reject_rel`` set, a factor below that relative magnitude raises
    DrawRejected (the sampling-rejection path) instead of only true zeros
    raising SingularTermError.
    """
    prod = mpc(1)
    y = b
    thr = cache.ctx.zero_threshold
    for k in range(n):
        v, s = cache.theta_scaled(y)
        if reject_rel is not None and abs(v) < reject_rel * max(mpfr(1), s):
            raise DrawRejected("near-singular-theta", f"series denominator ({b})_{k}")
        if abs(v) <= thr * max(mpfr(1), s):
            raise SingularTermError(
                "theta zero in series denominator", parameter=b, index=k
            )
        prod *= v
        y *= q
    return prod


def e_term(
    spec: ESeriesSpec, n: int, ctx: PrecisionContext, cache=None, reject_rel=None
) -> mpc:
    """n-th summand (a_1,..;q,p)_n z^n / (q, b_1,..;q,p)_n."""
    if n < 0:
        raise DomainError("summand index must be nonnegative")
    with ctx.workspace():
        if cache is None:
            cache = ThetaCache(spec.p, ctx)
        num = mpc(1)
        for a in spec.numerator:
            num *= cache.fac(a, spec.q, n)
        den = _denominator_fac(cache, spec.q, spec.q, n, reject_rel)
        for b in spec.denominator:
            den *= _denominator_fac(cache, b, spec.q, n, reject_rel)
        return num / den * spec.z**n


def v_term(
    spec: VSeriesSpec, n: int, ctx: PrecisionContext, cache=None, reject_rel=None
) -> mpc:
    """n-th V-form summand; note the argument enters as (q z)^n."""
    if n < 0:
        raise DomainError("summand index must be nonnegative")
    with ctx.workspace():
        if cache is None:
            cache = ThetaCache(spec.p, ctx)
        va, sa = cache.theta_scaled(spec.a1)
        if reject_rel is not None and abs(va) < reject_rel * max(mpfr(1), sa):
            raise DrawRejected("near-singular-theta", "theta(a_1; p)")
        if abs(va) <= ctx.zero_threshold * max(mpfr(1), sa):
            raise SingularTermError(
                "theta(a_1; p) vanishes", parameter=spec.a1, index=0
            )
        quot = cache.theta(spec.a1 * spec.q ** (2 * n)) / va
        num = cache.fac(spec.a1, spec.q, n)
        for a in spec.tail:
            num *= cache.fac(a, spec.q, n)
        den = _denominator_fac(cache, spec.q, spec.q, n, reject_rel)
        qa1 = spec.q * spec.a1
        for a in spec.tail:
            den *= _denominator_fac(cache, qa1 / a, spec.q, n, reject_rel)
        return quot * num / den * (spec.q * spec.z) ** n


def detect_termination(spec, ctx: PrecisionContext) -> TerminationInfo:
    """Find the smallest n with some numerator parameter equal to q^-n."""
    with ctx.workspace():
        if isinstance(spec, VSeriesSpec):
            params = (spec.a1,) + spec.tail
        else:
            params = spec.numerator
        best = None
        witness = None
        for i, a in enumerate(params):
            y = a
            for n in range(_TERMINATION_SEARCH_LIMIT + 1):
                if _close(y, mpc(1), ctx):
                    if best is None or n < best:
                        best, witness = n, i
                    break
                y *= spec.q
        if best is None:
            return TerminationInfo(False)
        return TerminationInfo(True, best, witness)


def _resolve_upper(spec, upper: Upper, ctx: PrecisionContext) -> int:
    if upper is None:
        upper = detect_termination(spec, ctx)
    if isinstance(upper, TerminationInfo):
        if not upper.terminating:
            raise NonterminatingSeriesError(
                "series does not terminate; supply an explicit cutoff"
            )
        return upper.order
    return int(upper)


def e_sum_scaled(
    spec: ESeriesSpec, upper: Upper = None, *, ctx: PrecisionContext, reject_rel=None
) -> tuple[mpc, mpfr]:
    """(sum of e_term over 0..n, max |term|); the scale feeds residuals."""
    with ctx.workspace():
        n = _resolve_upper(spec, upper, ctx)
        cache = ThetaCache(spec.p, ctx)
        total = mpc(0)
        scale = mpfr(0)
        for k in range(n + 1):
            t = e_term(spec, k, ctx, cache, reject_rel)
            total += t
            a = abs(t)
            if a > scale:
                scale = a
        return total, scale


def e_sum(spec: ESeriesSpec, upper: Upper = None, *, ctx: PrecisionContext) -> mpc:
    return e_sum_scaled(spec, upper, ctx=ctx)[0]


def v_sum_scaled(
    spec: VSeriesSpec, upper: Upper = None, *, ctx: PrecisionContext, reject_rel=None
) -> tuple[mpc, mpfr]:
    with ctx.workspace():
        n = _resolve_upper(spec, upper, ctx)
        cache = ThetaCache(spec.p, ctx)
        total = mpc(0)
        scale = mpfr(0)
        for k in range(n + 1):
            t = v_term(spec, k, ctx, cache, reject_rel)
            total += t
            a = abs(t)
            if a > scale:
                scale = a
        return total, scale


def v_sum(spec: VSeriesSpec, upper: Upper = None, *, ctx: PrecisionContext) -> mpc:
    return v_sum_scaled(spec, upper, ctx=ctx)[0]


def is_e_balanced(spec: ESeriesSpec, ctx: PrecisionContext) -> bool:
    """Elliptic balancing: a_1 a_2 ... a_{r+1} = (b_1 b_2 ... b_r) q."""
    with ctx.workspace():
        num = mpc(1)
        for a in spec.numerator:
            num *= a
        den = spec.q
        for b in spec.denominator:
            den *= b
        return _close(num, den, ctx)


def is_well_poised(spec: ESeriesSpec, ctx: PrecisionContext) -> bool:
    """Well-poised pairing q a_1 = a_2 b_1 = ... = a_{r+1} b_r."""
    with ctx.workspace():
        ref = spec.q * spec.numerator[0]
        return all(
            _close(spec.numerator[i + 1] * spec.denominator[i], ref, ctx)
            for i in range(spec.r)
        )


def _vwp_block(a1: mpc, q: mpc, p: mpc) -> tuple[tuple, tuple]:
    s = gmpy2.sqrt(a1)
    sp = gmpy2.sqrt(p)
    num = (q * s, -q * s, q * s / sp, -q * s * sp)
    den = (s, -s, s * sp, -s / sp)
    return num, den


def is_very_well_poised(spec: ESeriesSpec, ctx: PrecisionContext) -> bool:
    """Well-poised with r >= 4 and a_2..a_5 the four special parameters
    built from the principal square roots of a_1 and p (multiset comparison,
    so the order of a_2..a_5 does not matter)."""
    with ctx.workspace():
        if spec.r < 4 or spec.p == 0:
            return False
        if not is_well_poised(spec, ctx):
            return False
        want = list(_vwp_block(spec.numerator[0], spec.q, spec.p)[0])
        have = list(spec.numerator[1:5])
        for w in want:
            for i, h in enumerate(have):
                if _close(w, h, ctx):
                    del have[i]
                    break
            else:
                return False
        return True


def vwp_embed(v: VSeriesSpec, ctx: PrecisionContext) -> ESeriesSpec:
    """Identify a V-form series with its E-form; the returned spec already
    carries the negated argument, so v_sum(v, n) == e_sum(vwp_embed(v), n)."""
    with ctx.workspace():
        if v.p == 0:
            raise DomainError(
                "the very-well-poised embedding needs p != 0 (p^(1/2) parameters)"
            )
        block_num, block_den = _vwp_block(v.a1, v.q, v.p)
        qa1 = v.q * v.a1
        return ESeriesSpec(
            (v.a1, *block_num, *v.tail),
            (*block_den, *(qa1 / a for a in v.tail)),
            v.q,
            v.p,
            -v.z,
        )


def v_balance_condition(v: VSeriesSpec, ctx: PrecisionContext) -> bool:
    """(a_6^2 ... a_{r+1}^2) q^2 = (a_1 q)^(r-5) for the V-form."""
    with ctx.workspace():
        lhs = v.q**2
        for a in v.tail:
            lhs *= a * a
        rhs = (v.a1 * v.q) ** (v.r - 5)
        return _close(lhs, rhs, ctx)


def vwp_quotient(
    a: Number,
    q: Number,
    p: Number,
    n: int,
    ctx: PrecisionContext,
    route: str = "theta",
) -> mpc:
    """theta(a q^{2n}; p) / theta(a; p), the very-well-poised part.

    route="theta" is canonical; route="factorial" evaluates the equivalent
    eight-parameter shifted-factorial ratio times (-q)^{-n} (needs p != 0).
    At p = 0 the theta route reduces to (1 - a q^{2n}) / (1 - a).
    """
    with ctx.workspace():
        a = ctx.to_mpc(a)
        q = ctx.to_mpc(q)
        p = ctx.to_mpc(p)
        cache = ThetaCache(p, ctx)
        if route == "theta":
            va, sa = cache.theta_scaled(a)
            if abs(va) <= ctx.zero_threshold * max(mpfr(1), sa):
                raise SingularTermError("theta(a; p) vanishes", parameter=a)
            return cache.theta(a * q ** (2 * n)) / va
        if route == "factorial":
            if p == 0:
                raise DomainError("factorial route undefined at p = 0")
            num, den = _vwp_block(a, q, p)
            value = mpc(1)
            for x in num:
                value *= cache.fac(x, q, n)
            for x in den:
                value /= cache.fac(x, q, n)
            return value * (-q) ** (-n)
        raise DomainError(f"unknown route {route!r}")


# --- independent basic-hypergeometric evaluator (no theta machinery) -------


def _basic_fac(a: mpc, q: mpc, n: int) -> mpc:
    prod = mpc(1)
    y = a
    for _ in range(n):
        prod *= 1 - y
        y *= q
    return prod


def _basic_e_value(spec: ESeriesSpec, upper: int) -> mpc:
    total = mpc(0)
    for n in range(upper + 1):
        num = mpc(1)
        for a in spec.numerator:
            num *= _basic_fac(a, spec.q, n)
        den = _basic_fac(spec.q, spec.q, n)
        for b in spec.denominator:
            den *= _basic_fac(b, spec.q, n)
        total += num / den * spec.z**n
    return total


def _basic_w_value(spec: VSeriesSpec, upper: int) -> mpc:
    """Very-well-poised basic series with the (1 - a q^{2n})/(1 - a) part."""
    total = mpc(0)
    for n in range(upper + 1):
        quot = (1 - spec.a1 * spec.q ** (2 * n)) / (1 - spec.a1)
        num = _basic_fac(spec.a1, spec.q, n)
        den = _basic_fac(spec.q, spec.q, n)
        for a in spec.tail:
            num *= _basic_fac(a, spec.q, n)
            den *= _basic_fac(spec.q * spec.a1 / a, spec.q, n)
        total += quot * num / den * (spec.q * spec.z) ** n
    return total


def p_to_zero_check(spec, cutoff: Upper, ctx: PrecisionContext) -> mpfr:
    """Relative residual between the series at p = 0 and an independent
    basic-hypergeometric evaluation (the termwise p -> 0 limit)."""
    with ctx.workspace():
        zero = ctx.to_mpc(0)
        if isinstance(spec, VSeriesSpec):
            at0 = VSeriesSpec(spec.a1, spec.tail, spec.q, zero, spec.z)
            upper = _resolve_upper(at0, cutoff, ctx)
            mine = v_sum(at0, upper, ctx=ctx)
            oracle = _basic_w_value(at0, upper)
        else:
            at0 = ESeriesSpec(spec.numerator, spec.denominator, spec.q, zero, spec.z)
            upper = _resolve_upper(at0, cutoff, ctx)
            mine = e_sum(at0, upper, ctx=ctx)
            oracle = _basic_e_value(at0, upper)
        return abs(mine - oracle) / max(mpfr(1), abs(mine), abs(oracle))
