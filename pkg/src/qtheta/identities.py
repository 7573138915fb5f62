"""Numerically checkable theta hypergeometric identities.

Each ``verify_*`` function instantiates one summation or transformation
formula at concrete parameter values, evaluates the two sides, and returns
a :class:`ResidualReport`.  The catalog covers the Frenkel-Turaev
summation and transformation, their order-one theta forms, indefinite
(telescoping) sums and Warnaar's bibasic sum, six-base indefinite and
Kronecker-delta sums, the bilateral p = 0 form, a compact-deviation
bilateral theta sum, quadratic (base q / q^2) transformations, the
four-base two-nome transformation chain down to the split-poised series,
and the Gasper-style general double-sum transformation.

Residuals are scaled by the largest summand encountered so that
catastrophically cancelling delta sums cannot produce false passes.
Denominator theta values are guarded: a draw whose denominator magnitude
falls below ``NEAR_SINGULAR_REL`` relative to its series scale raises
:class:`DrawRejected`, which the trial runner treats as "redraw", never
as a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import gmpy2
from gmpy2 import mpc, mpfr

from .context import (
    NEAR_SINGULAR_REL,
    DomainError,
    DrawRejected,
    Number,
    PrecisionContext,
)
from .core import ThetaCache, generalized_product, infinite_p_pochhammer
from .series import (
    ESeriesSpec,
    VSeriesSpec,
    e_sum_scaled,
    is_e_balanced,
    v_sum_scaled,
    vwp_embed,
)

__all__ = [
    "ResidualReport",
    "SequenceFamily",
    "QuartetFamily",
    "verify_frenkel_turaev_sum",
    "verify_frenkel_turaev_transform",
    "verify_theta_n1",
    "verify_indefinite_sum",
    "verify_multibasic_indefinite",
    "verify_bilateral_p0",
    "verify_bilateral_theta_compact",
    "verify_csn_sum",
    "verify_delta_sums",
    "verify_m00_sum",
    "verify_general_transform",
    "verify_ex28_chain",
    "verify_quadratic_transforms",
    "quadratic_p0_sides",
]


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one identity instantiation.

    ``residual`` is |lhs - rhs| / max(1, |lhs|, |rhs|, scale), maximized
    with any auxiliary residuals the operation asserts (telescoping
    intermediates, recast agreement, ...); the individual components sit
    in ``details``.  ``passed`` is exactly ``residual < tolerance``.
    """

    identity_id: str
    lhs: mpc
    rhs: mpc
    scale: mpfr
    residual: mpfr
    tolerance: mpfr
    passed: bool
    details: dict = field(default_factory=dict)


def _rel(diff, *mags) -> mpfr:
    den = mpfr(1)
    for m in mags:
        a = abs(m)
        if a > den:
            den = a
    return abs(diff) / den


def _finish(identity_id, lhs, rhs, scale, ctx, tolerance, details=None) -> ResidualReport:
    tol = ctx.default_tolerance if tolerance is None else ctx.to_real(tolerance)
    main = _rel(lhs - rhs, lhs, rhs, scale)
    residual = main
    details = dict(details or {})
    for val in details.values():
        if isinstance(val, bool):
            if not val:
                residual = mpfr("inf")
        elif isinstance(val, (mpfr, float)) and val > residual:
            residual = mpfr(val)
    details["main"] = main
    passed = bool(residual < tol)
    return ResidualReport(identity_id, lhs, rhs, scale, residual, tol, passed, details)


class _W:
    """Single-nome workbench: cached thetas, guarded divisors, term scale."""

    __slots__ = ("ctx", "cache", "scale")

    def __init__(self, ctx: PrecisionContext, p: mpc):
        self.ctx = ctx
        self.cache = ThetaCache(p, ctx)
        self.scale = mpfr(0)

    def note(self, term: mpc) -> mpc:
        a = abs(term)
        if a > self.scale:
            self.scale = a
        return term

    def t(self, *xs) -> mpc:
        prod = mpc(1)
        for x in xs:
            prod *= self.cache.theta(x)
        return prod

    def _guarded(self, x) -> mpc:
        v, s = self.cache.theta_scaled(x)
        if abs(v) < NEAR_SINGULAR_REL * max(mpfr(1), s):
            raise DrawRejected("near-singular-theta", f"theta({x})")
        return v

    def td(self, *xs) -> mpc:
        prod = mpc(1)
        for x in xs:
            prod *= self._guarded(x)
        return prod

    def fac(self, a, base, n: int, divisor: bool = False) -> mpc:
        """(a; base, p)_n; thetas that end up dividing are guarded."""
        n = int(n)
        if n == 0:
            return mpc(1)
        guarded = divisor == (n > 0)
        one = self._guarded if guarded else self.cache.theta
        if n > 0:
            prod = mpc(1)
            y = a
            for _ in range(n):
                prod *= one(y)
                y *= base
            return prod
        prod = mpc(1)
        y = a * base**n
        for _ in range(-n):
            prod *= one(y)
            y *= base
        return 1 / prod

    def f(self, pairs: Sequence[tuple], n: int) -> mpc:
        """Product of (a_i; base_i, p)_n over (a, base) pairs (numerator)."""
        prod = mpc(1)
        for a, base in pairs:
            prod *= self.fac(a, base, n)
        return prod

    def fd(self, pairs: Sequence[tuple], n: int) -> mpc:
        """Same, destined for a denominator."""
        prod = mpc(1)
        for a, base in pairs:
            prod *= self.fac(a, base, n, divisor=True)
        return prod

    def tratio(self, nums: Sequence, dens: Sequence) -> mpc:
        """Quotient of theta products, cancelling exactly-equal arguments.

        The displayed quotients pair numerator and denominator arguments
        that coincide at k = 0 (and wherever a constraint makes them
        equal); cancelling those before evaluation keeps such terms exact
        instead of tripping the near-singular guard on a 0/0.
        """
        nums = list(nums)
        remaining = []
        for d in dens:
            for i, x in enumerate(nums):
                if x == d:
                    del nums[i]
                    break
            else:
                remaining.append(d)
        return self.t(*nums) / self.td(*remaining)

    def bracket(self, nums: Sequence, dens: Sequence) -> mpc:
        """1 - theta(nums)/theta(dens), limit-aware.

        When the numerator product contains a true theta zero the bracket
        is exactly 1 and the denominator is never touched (several sums
        place a vanishing theta(q^0) there at the termination edge, where
        the denominator may degenerate in the same limit).
        """
        prod = mpc(1)
        thr = self.ctx.zero_threshold
        for x in nums:
            v, s = self.cache.theta_scaled(x)
            if abs(v) <= thr * max(mpfr(1), s):
                return mpc(1)
            prod *= v
        return 1 - prod / self.td(*dens)


def _binom2(k: int) -> int:
    return k * (k - 1) // 2


def _as_params(ctx: PrecisionContext, params: Mapping[str, Number], names: str | Sequence[str]):
    out = []
    for name in names:
        if name not in params:
            raise DomainError(f"missing parameter {name!r}")
        out.append(ctx.to_mpc(params[name]))
    return out


def _check_constraint(lhs: mpc, rhs: mpc, what: str, ctx: PrecisionContext) -> None:
    if abs(lhs - rhs) > ctx.zero_threshold * max(mpfr(1), abs(lhs), abs(rhs)):
        raise DomainError(f"constraint violated: {what}")


# --------------------------------------------------------------------------
# Parameter families for the tabulated (sequence-indexed) identities
# --------------------------------------------------------------------------


class SequenceFamily:
    """Seven bilateral sequences a_k..g_k with a_k^3 = b_k c_k d_k e_k f_k g_k.

    Either tabulated on a finite index window or geometric
    (a_k = a w^k, b_k = b q^k, ..., g_k = g v^k with a^3 = bcdefg and
    w^3 = qrstuv).
    """

    NAMES = "abcdefg"

    def __init__(self, getter, window: Optional[range], ctx: PrecisionContext):
        self._get = getter
        self._ctx = ctx
        self.window = window
        with ctx.workspace():
            for k in window if window is not None else range(0, 1):
                vals = self.at(k)
                prod = mpc(1)
                for name in "bcdefg":
                    prod *= vals[name]
                _check_constraint(
                    vals["a"] ** 3, prod, f"a_k^3 = b_k..g_k at k={k}", ctx
                )

    @classmethod
    def tabulated(cls, table: Mapping[int, Mapping[str, Number]], ctx: PrecisionContext):
        conv = {
            int(k): {name: ctx.to_mpc(row[name]) for name in cls.NAMES}
            for k, row in table.items()
        }
        lo, hi = min(conv), max(conv)
        if set(conv) != set(range(lo, hi + 1)):
            raise DomainError("tabulated family window must be contiguous")
        return cls(lambda k: conv[k], range(lo, hi + 1), ctx)

    @classmethod
    def geometric(cls, coeffs: Mapping[str, Number], bases: Mapping[str, Number], ctx: PrecisionContext):
        with ctx.workspace():
            c = {name: ctx.to_mpc(coeffs[name]) for name in cls.NAMES}
            b = {name: ctx.to_mpc(bases[name]) for name in cls.NAMES}
            prod_c = mpc(1)
            prod_b = mpc(1)
            for name in "bcdefg":
                prod_c *= c[name]
                prod_b *= b[name]
            _check_constraint(c["a"] ** 3, prod_c, "a^3 = bcdefg", ctx)
            _check_constraint(b["a"] ** 3, prod_b, "w^3 = qrstuv", ctx)
        return cls(
            lambda k: {name: c[name] * b[name] ** k for name in cls.NAMES},
            None,
            ctx,
        )

    def at(self, k: int) -> dict:
        with self._ctx.workspace():
            return self._get(int(k))


class QuartetFamily:
    """Four free sequences a_k, b_k, c_k, d_k on a finite window."""

    NAMES = "abcd"

    def __init__(self, table: Mapping[int, Mapping[str, Number]], ctx: PrecisionContext):
        self._table = {
            int(k): {name: ctx.to_mpc(row[name]) for name in self.NAMES}
            for k, row in table.items()
        }
        lo, hi = min(self._table), max(self._table)
        if set(self._table) != set(range(lo, hi + 1)):
            raise DomainError("tabulated family window must be contiguous")
        self.window = range(lo, hi + 1)

    def at(self, k: int) -> dict:
        return self._table[int(k)]


# --------------------------------------------------------------------------
# Frenkel-Turaev summation and transformation, and their n = 1 theta forms
# --------------------------------------------------------------------------


def verify_frenkel_turaev_sum(a, b, c, d, n, q, p, ctx, tolerance=None) -> ResidualReport:
    """Terminating 10V9 summation: V(a; b, c, d, e, q^-n; q, p) equals the
    closed factorial ratio, with e resolved from b c d e = a^2 q^(n+1)."""
    with ctx.workspace():
        a, b, c, d, q, p = (ctx.to_mpc(v) for v in (a, b, c, d, q, p))
        n = int(n)
        if b * c * d == 0:
            raise DomainError("constraint resolution needs b c d != 0")
        e = a * a * q ** (n + 1) / (b * c * d)
        spec = VSeriesSpec(a, (b, c, d, e, q**-n), q, p, mpc(1))
        lhs, scale = v_sum_scaled(spec, n, ctx=ctx, reject_rel=NEAR_SINGULAR_REL)
        w = _W(ctx, p)
        w.scale = scale
        aq = a * q
        rhs = w.f(
            [(aq, q), (aq / (b * c), q), (aq / (b * d), q), (aq / (c * d), q)], n
        ) / w.fd([(aq / b, q), (aq / c, q), (aq / d, q), (aq / (b * c * d), q)], n)
        return _finish("ft109", lhs, rhs, scale, ctx, tolerance)


def verify_frenkel_turaev_transform(
    a, b, c, d, e, f, n, q, p, ctx, tolerance=None
) -> ResidualReport:
    """Terminating 12V11 transformation with lambda = q a^2 / (b c d);
    additionally asserts both sides are elliptically balanced."""
    with ctx.workspace():
        a, b, c, d, e, f, q, p = (ctx.to_mpc(v) for v in (a, b, c, d, e, f, q, p))
        n = int(n)
        if b * c * d == 0 or e * f == 0:
            raise DomainError("constraint resolution needs b c d != 0 and e f != 0")
        lam = q * a * a / (b * c * d)
        g7 = lam * a * q ** (n + 1) / (e * f)
        left = VSeriesSpec(a, (b, c, d, e, f, g7, q**-n), q, p, mpc(1))
        right = VSeriesSpec(
            lam, (lam * b / a, lam * c / a, lam * d / a, e, f, g7, q**-n), q, p, mpc(1)
        )
        lv, ls = v_sum_scaled(left, n, ctx=ctx, reject_rel=NEAR_SINGULAR_REL)
        rv, rs = v_sum_scaled(right, n, ctx=ctx, reject_rel=NEAR_SINGULAR_REL)
        w = _W(ctx, p)
        w.scale = max(ls, rs)
        aq, lq = a * q, lam * q
        pref = w.f(
            [(aq, q), (aq / (e * f), q), (lq / e, q), (lq / f, q)], n
        ) / w.fd([(aq / e, q), (aq / f, q), (lq / (e * f), q), (lq, q)], n)
        details = {
            "balanced_lhs": is_e_balanced(vwp_embed(left, ctx), ctx),
            "balanced_rhs": is_e_balanced(vwp_embed(right, ctx), ctx),
        }
        return _finish("ft1211", lv, pref * rv, w.scale, ctx, tolerance, details)


def verify_theta_n1(variant: str, params: Mapping[str, Number], p, ctx, tolerance=None) -> ResidualReport:
    """Order-one theta identities.

    variant="jackson": the four-parameter identity equivalent to the 10V9
    summation at order 1 (parameter a shifted by 1/q).
    variant="bailey": the six-parameter identity with a^3 = b c d e f g
    (g resolved), equivalent to the 12V11 transformation at order 1.
    """
    with ctx.workspace():
        p = ctx.to_mpc(p)
        w = _W(ctx, p)
        if variant == "jackson":
            a, b, c, d = _as_params(ctx, params, "abcd")
            bcd = b * c * d
            lhs = 1 - w.note(
                w.t(b, c, d, a * a / bcd) / w.td(a / b, a / c, a / d, bcd / a)
            )
            rhs = w.note(
                w.t(a, a / (b * c), a / (b * d), a / (c * d))
                / w.td(a / bcd, a / d, a / c, a / b)
            )
            ident = "ft109n1"
        elif variant == "bailey":
            a, b, c, d, e, f = _as_params(ctx, params, "abcdef")
            g = a**3 / (b * c * d * e * f)
            bcd = b * c * d
            lhs = 1 - w.note(
                w.t(b, c, d, e, f, g)
                / w.td(a / b, a / c, a / d, a / e, a / f, a / g)
            )
            pref = w.t(a, a / (e * f), a * a / (bcd * e), a * a / (bcd * f)) / w.td(
                a * a / (bcd * e * f), a * a / bcd, a / f, a / e
            )
            inner = 1 - w.note(
                w.t(a / (b * c), a / (b * d), a / (c * d), e, f, g)
                / w.td(
                    a / d,
                    a / c,
                    a / b,
                    a * a / (bcd * e),
                    a * a / (bcd * f),
                    a * a / (bcd * g),
                )
            )
            rhs = pref * inner
            ident = "ft1211n1"
        else:
            raise DomainError(f"unknown variant {variant!r}")
        w.note(mpc(1))
        return _finish(ident, lhs, rhs, w.scale, ctx, tolerance)


# --------------------------------------------------------------------------
# Indefinite (telescoping) summation and Warnaar's sum
# --------------------------------------------------------------------------


def _z_seven(w: _W, v: Mapping[str, mpc], guard_numerator: bool) -> mpc:
    """U_{k+1} / U_k for the seven-sequence family."""
    num = (v["b"], v["c"], v["d"], v["e"], v["f"], v["g"])
    den = tuple(v["a"] / x for x in num)
    top = w.td(*num) if guard_numerator else w.t(*num)
    return top / w.td(*den)


def verify_indefinite_sum(
    fam, p, m: int, n: int, variant: str = "general", ctx=None, tolerance=None
) -> ResidualReport:
    """Telescoping sum over k in [-m, n].

    variant="general": sum of (U_k - U_{k+1}) in its theta-quotient form
    equals U_{-m} - U_{n+1}; every intermediate partial sum S_j is also
    checked against U_{-m} - U_{j+1} (strictly stronger than the endpoint
    identity).

    variant="warnaar": the m = 0 specialization with a_k = c_k d_k,
    relabelled to four free sequences; the right side is 1 minus a product.
    """
    with ctx.workspace():
        p = ctx.to_mpc(p)
        w = _W(ctx, p)
        m = int(m)
        n = int(n)
        if variant == "warnaar":
            if n < 0 or fam.window.start > 0 or fam.window.stop <= n:
                raise DomainError("warnaar variant needs the family on [0, n]")
            zs = []
            total = mpc(0)
            running = mpc(1)
            for k in range(n + 1):
                v = fam.at(k)
                a, b, c, d = v["a"], v["b"], v["c"], v["d"]
                bcd = b * c * d
                t_k = w.t(a, a / (b * c), a / (b * d), a / (c * d)) / w.td(
                    a / bcd, a / d, a / c, a / b
                )
                total += w.note(t_k * running)
                z_k = w.t(b, c, d, a * a / bcd) / w.td(a / b, a / c, a / d, bcd / a)
                running *= z_k
            rhs = 1 - running
            return _finish("sumf", total, rhs, w.scale, ctx, tolerance)
        if variant != "general":
            raise DomainError(f"unknown variant {variant!r}")
        if fam.window is not None and (
            fam.window.start > -m or fam.window.stop <= n
        ):
            raise DomainError("family window must cover [-m, n]")
        z = {k: _z_seven(w, fam.at(k), guard_numerator=True) for k in range(-m, n + 1)}
        u = {0: mpc(1)}
        for k in range(0, n + 1):
            u[k + 1] = u[k] * z[k]
        for k in range(0, -m, -1):
            u[k - 1] = u[k] / z[k - 1]
        total = mpc(0)
        worst = mpfr(0)
        partials = []
        for k in range(-m, n + 1):
            v = fam.at(k)
            a, e, f = v["a"], v["e"], v["f"]
            bcd = v["b"] * v["c"] * v["d"]
            pref = w.t(
                a * a / (bcd * f), a * a / (bcd * e), a, a / (e * f)
            ) / w.td(a / e, a / f, a * a / (bcd * e * f), a * a / bcd)
            bracket = 1 - w.t(
                a / (v["c"] * v["d"]),
                a / (v["b"] * v["d"]),
                a / (v["b"] * v["c"]),
                e,
                f,
                v["g"],
            ) / w.td(
                a / v["b"],
                a / v["c"],
                a / v["d"],
                a * a / (bcd * e),
                a * a / (bcd * f),
                a * a / (bcd * v["g"]),
            )
            total += w.note(pref * u[k] * bracket)
            partials.append((k, +total))
        rhs = u[-m] - u[n + 1]
        for k, s_k in partials[:-1]:
            r = _rel(s_k - (u[-m] - u[k + 1]), s_k, w.scale, mpfr(1))
            if r > worst:
                worst = r
        return _finish(
            "indefsum", total, rhs, w.scale, ctx, tolerance,
            {"telescoping_max": worst},
        )


# --------------------------------------------------------------------------
# Six-base indefinite sums (geometric families) and their delta reductions
# --------------------------------------------------------------------------

_SIX = tuple(zip("bcdefg", "qrstuv"))


def _six_base_values(ctx, params):
    a, b, c, d, e, f, g = _as_params(ctx, params, "abcdefg")
    q, r, s, t, u, v, wv, p = _as_params(ctx, params, ["q", "r", "s", "t", "u", "v", "w", "p"])
    _check_constraint(a**3, b * c * d * e * f * g, "a^3 = bcdefg", ctx)
    _check_constraint(wv**3, q * r * s * t * u * v, "w^3 = qrstuv", ctx)
    return a, b, c, d, e, f, g, q, r, s, t, u, v, wv, p


def _indm_bracket(w, k, a, b, c, d, e, f, g, q, r, s, t, u, v, wv):
    return w.bracket(
        (
            (a / (c * d)) * (wv / (r * s)) ** k,
            (a / (b * d)) * (wv / (q * s)) ** k,
            (a / (b * c)) * (wv / (q * r)) ** k,
            e * t**k,
            f * u**k,
            g * v**k,
        ),
        (
            (a / b) * (wv / q) ** k,
            (a / c) * (wv / r) ** k,
            (a / d) * (wv / s) ** k,
            (f * g / a) * (u * v / wv) ** k,
            (e * g / a) * (t * v / wv) ** k,
            (e * f / a) * (t * u / wv) ** k,
        ),
    )


def _indm_term(w, k, a, b, c, d, e, f, g, q, r, s, t, u, v, wv):
    th = w.t(
        a * wv**k,
        (a / (e * f)) * (wv / (t * u)) ** k,
        (f * g / a) * (u * v / wv) ** k,
        (e * g / a) * (t * v / wv) ** k,
    ) / w.td(
        (g / a) * (v / wv) ** k,
        (e * f * g / a) * (t * u * v / wv) ** k,
        (a / f) * (wv / u) ** k,
        (a / e) * (wv / t) ** k,
    )
    fac = w.f([(b, q), (c, r), (d, s), (e, t), (f, u), (g, v)], k) / w.fd(
        [
            (a / b, wv / q),
            (a / c, wv / r),
            (a / d, wv / s),
            (a / e, wv / t),
            (a / f, wv / u),
            (a / g, wv / v),
        ],
        k,
    )
    return th * fac * _indm_bracket(w, k, a, b, c, d, e, f, g, q, r, s, t, u, v, wv)


def _m0_term(w, k, a, b, c, d, e, f, g, q, r, s, t, u, v, wv):
    c_a, c_ef, c_fg, c_eg, c_efg = (
        a, a / (e * f), f * g / a, e * g / a, e * f * g / a,
    )
    th = w.tratio(
        (
            c_a * wv**k,
            c_ef * (wv / (t * u)) ** k,
            c_fg * (u * v / wv) ** k,
            c_eg * (t * v / wv) ** k,
            c_efg,
        ),
        (c_a, c_ef, c_fg, c_eg, c_efg * (t * u * v / wv) ** k),
    )
    fac = w.f([(b, q), (c, r), (d, s), (e, t), (f, u), (g, v)], k) / w.fd(
        [
            (a / b, wv / q),
            (a / c, wv / r),
            (a / d, wv / s),
            (a * wv / (e * t), wv / t),
            (a * wv / (f * u), wv / u),
            (a * wv / (g * v), wv / v),
        ],
        k,
    )
    return (
        th
        * fac
        * (wv / v) ** k
        * _indm_bracket(w, k, a, b, c, d, e, f, g, q, r, s, t, u, v, wv)
    )


def _u_tilde(w, n, a, b, c, d, e, f, g, q, r, s, t, u, v, wv):
    """(b;q)_n (c;r)_n ... (g;v)_n over (a/b;w/q)_n ... (a/g;w/v)_n."""
    return w.f([(b, q), (c, r), (d, s), (e, t), (f, u), (g, v)], n) / w.fd(
        [
            (a / b, wv / q),
            (a / c, wv / r),
            (a / d, wv / s),
            (a / e, wv / t),
            (a / f, wv / u),
            (a / g, wv / v),
        ],
        n,
    )


def verify_multibasic_indefinite(
    params: Mapping[str, Number], m: int, n: int, variant: str = "indm", ctx=None, tolerance=None
) -> ResidualReport:
    """Six-base indefinite summation with a^3 = bcdefg and w^3 = qrstuv.

    variant="indm": bilateral order range n, m >= -2 (the inverted-product
    branches); the right side is a difference of two factorial products.

    variant="m0": the patched m = 0 form; additionally asserts the patching
    identity itself and term-by-term agreement with the indm summand.
    """
    with ctx.workspace():
        a, b, c, d, e, f, g, q, r, s, t, u, v, wv, p = _six_base_values(ctx, params)
        w = _W(ctx, p)
        m = int(m)
        n = int(n)
        args = (a, b, c, d, e, f, g, q, r, s, t, u, v, wv)
        if variant == "indm":
            if m < -2 or n < -2:
                raise DomainError("orders below -2 are untested; refusing to guess")
            total = mpc(0)
            for k in range(-m, n + 1):
                total += w.note(_indm_term(w, k, *args))
            first = w.f(
                [
                    (b * wv / (a * q), wv / q),
                    (c * wv / (a * r), wv / r),
                    (d * wv / (a * s), wv / s),
                    (e * wv / (a * t), wv / t),
                    (f * wv / (a * u), wv / u),
                    (g * wv / (a * v), wv / v),
                ],
                m,
            ) / w.fd(
                [(q / b, q), (r / c, r), (s / d, s), (t / e, t), (u / f, u), (v / g, v)],
                m,
            )
            rhs = first - _u_tilde(w, n + 1, *args)
            return _finish("indm", total, rhs, w.scale, ctx, tolerance)
        if variant != "m0":
            raise DomainError(f"unknown variant {variant!r}")
        if m != 0:
            raise DomainError("the patched form is the m = 0 case")
        if n < 0:
            raise DomainError("m0 variant needs n >= 0")
        total = mpc(0)
        termwise = mpfr(0)
        patching = mpfr(0)
        # the patching identity multiplies every indm summand by this ratio
        shift = w.t(a / e, a / f, g / a, e * f * g / a) / w.td(
            e * g / a, f * g / a, a, a / (e * f)
        )
        for k in range(n + 1):
            term = _m0_term(w, k, *args)
            total += w.note(term)
            other = shift * _indm_term(w, k, *args)
            r1 = _rel(term - other, term, other, mpfr(1))
            if r1 > termwise:
                termwise = r1
            lhs_p = w.t(
                (a / e) * (wv / t) ** k,
                (a / f) * (wv / u) ** k,
                (g / a) * (v / wv) ** k,
            ) * w.f([(a / e, wv / t), (a / f, wv / u), (a / g, wv / v)], k)
            rhs_p = (
                w.t(a / e, a / f, g / a)
                * w.f(
                    [
                        (a * wv / (e * t), wv / t),
                        (a * wv / (f * u), wv / u),
                        (a * wv / (g * v), wv / v),
                    ],
                    k,
                )
                * (v / wv) ** k
            )
            r2 = _rel(lhs_p - rhs_p, lhs_p, rhs_p, mpfr(1))
            if r2 > patching:
                patching = r2
        pref = w.t(a / e, a / f, g / a, e * f * g / a) / w.td(
            e * g / a, f * g / a, a, a / (e * f)
        )
        rhs = pref * (1 - _u_tilde(w, n + 1, *args))
        return _finish(
            "m0", total, rhs, w.scale, ctx, tolerance,
            {"termwise_vs_indm_max": termwise, "patching_max": patching},
        )


def verify_csn_sum(params: Mapping[str, Number], n: int, ctx=None, tolerance=None) -> ResidualReport:
    """Six-base terminating summation with a^3 v^n = bcdef and w^3 = qrstuv;
    the right side is a ratio of eight theta values."""
    with ctx.workspace():
        a, b, c, d, e, f = _as_params(ctx, params, "abcdef")
        q, r, s, t, u, v, wv, p = _as_params(
            ctx, params, ["q", "r", "s", "t", "u", "v", "w", "p"]
        )
        n = int(n)
        _check_constraint(a**3 * v**n, b * c * d * e * f, "a^3 v^n = bcdef", ctx)
        _check_constraint(wv**3, q * r * s * t * u * v, "w^3 = qrstuv", ctx)
        w = _W(ctx, p)
        lhs, _ = _csn_lhs(w, n, a, b, c, d, e, f, q, r, s, t, u, v, wv)
        rhs = w.t(a / e, a / f, v**-n / a, (e * f / a) * v**-n) / w.td(
            (e / a) * v**-n, (f / a) * v**-n, a, a / (e * f)
        )
        return _finish("csn", lhs, rhs, w.scale, ctx, tolerance)


def _csn_lhs(w, n, a, b, c, d, e, f, q, r, s, t, u, v, wv):
    bcd = b * c * d
    c_a, c_ef = a, a / (e * f)
    c_e, c_f, c_0 = a * a / (bcd * e), a * a / (bcd * f), a * a / bcd
    total = mpc(0)
    terms = []
    for k in range(n + 1):
        th = w.tratio(
            (
                c_a * wv**k,
                c_ef * (wv / (t * u)) ** k,
                c_e * (u * v / wv) ** k,
                c_f * (t * v / wv) ** k,
                c_0,
            ),
            (c_a, c_ef, c_e, c_f, c_0 * (t * u * v / wv) ** k),
        )
        fac = w.f([(b, q), (c, r), (d, s), (e, t), (f, u), (v**-n, v)], k) / w.fd(
            [
                (a / b, wv / q),
                (a / c, wv / r),
                (a / d, wv / s),
                (a * wv / (e * t), wv / t),
                (a * wv / (f * u), wv / u),
                (a * wv * v ** (n - 1), wv / v),
            ],
            k,
        )
        bracket = w.bracket(
            (
                (a / (c * d)) * (wv / (r * s)) ** k,
                (a / (b * d)) * (wv / (q * s)) ** k,
                (a / (b * c)) * (wv / (q * r)) ** k,
                e * t**k,
                f * u**k,
                v ** (k - n),
            ),
            (
                (a / b) * (wv / q) ** k,
                (a / c) * (wv / r) ** k,
                (a / d) * (wv / s) ** k,
                (f / a) * (u / wv) ** k * v ** (k - n),
                (e / a) * (t / wv) ** k * v ** (k - n),
                (e * f / a) * (t * u / wv) ** k,
            ),
        )
        term = th * fac * (wv / v) ** k * bracket
        total += w.note(term)
        terms.append(term)
    return total, terms


def verify_delta_sums(
    variant: str, params: Mapping[str, Number], n: int, ctx=None, tolerance=None
) -> ResidualReport:
    """Kronecker-delta evaluations: the sum equals delta_{n,0}.

    variant="ftoa":   six-base sum with a^2 v^n = bcde, w^3 = qrstuv.
    variant="dto1":   four-base sum, free parameters a, b and bases q, r, s, t.
    variant="bibasic": the bibasic sum with bases q, r.
    variant="v87":    its r = q reduction, evaluated through the V-series
                      with the printed parameter list (a/b; q/b, a q^{n-1},
                      q^{-n}, q^{-2n}).
    """
    with ctx.workspace():
        n = int(n)
        if n < 0:
            raise DomainError("delta sums need n >= 0")
        if variant == "ftoa":
            lhs, scale = _ftoa_lhs(params, n, ctx)
            return _finish(
                "ftoa", lhs, mpc(1 if n == 0 else 0), scale, ctx, tolerance
            )
        if variant == "dto1":
            a, b = _as_params(ctx, params, "ab")
            q, r, s, t, p = _as_params(ctx, params, ["q", "r", "s", "t", "p"])
            w = _W(ctx, p)
            sn = s**-n
            asb = a * s**n / b
            total = mpc(0)
            for k in range(n + 1):
                th = w.tratio(
                    (
                        a * (r * s * t / q) ** k,
                        b * (r / q) ** k,
                        sn * (s / q) ** k,
                        asb * (t / q) ** k,
                    ),
                    (a, b, sn, asb),
                )
                fac = w.f(
                    [(a, r * s * t / q**2), (b, r), (sn, s), (asb, t)], k
                ) / w.fd(
                    [
                        (q, q),
                        (a * s * t / (b * q), s * t / q),
                        (a * s**n * r * t / q, r * t / q),
                        (b * r * s ** (1 - n) / q, r * s / q),
                    ],
                    k,
                )
                total += w.note(th * fac * q**k)
            return _finish(
                "dto1", total, mpc(1 if n == 0 else 0), w.scale, ctx, tolerance
            )
        if variant == "bibasic":
            a, b = _as_params(ctx, params, "ab")
            q, r, p = _as_params(ctx, params, ["q", "r", "p"])
            w = _W(ctx, p)
            front = w.t(a / r, b / r)
            total = mpc(0)
            for k in range(n + 1):
                num = front * w.f(
                    [(a * q**k, r), (b * q**-k, r)], n - 1
                ) * w.t(a * q ** (2 * k) / b)
                den = (
                    w.fd([(q, q)], k)
                    * w.fd([(q, q)], n - k)
                    * w.fd([(a * q**k / b, q)], n + 1)
                )
                total += w.note(num / den * mpc(-1) ** k * q ** _binom2(k))
            return _finish(
                "bibasic_delta", total, mpc(1 if n == 0 else 0), w.scale, ctx, tolerance
            )
        if variant == "v87":
            # r = q reduction of the bibasic sum: the elliptically balanced
            # 8V7(a/b; q/b, a q^(n-1), q^-n; q, p) = delta_{n,0}; the bibasic
            # summand equals its k-th term times a k-free theta prefactor.
            a, b = _as_params(ctx, params, "ab")
            q, p = _as_params(ctx, params, ["q", "p"])
            spec = VSeriesSpec(
                a / b, (q / b, a * q ** (n - 1), q**-n), q, p, mpc(1)
            )
            lhs, scale = v_sum_scaled(spec, n, ctx=ctx, reject_rel=NEAR_SINGULAR_REL)
            return _finish(
                "v87_delta", lhs, mpc(1 if n == 0 else 0), scale, ctx, tolerance
            )
        raise DomainError(f"unknown variant {variant!r}")


def _ftoa_lhs(params, n, ctx):
    a, b, c, d, e = _as_params(ctx, params, "abcde")
    q, r, s, t, u, v, wv, p = _as_params(
        ctx, params, ["q", "r", "s", "t", "u", "v", "w", "p"]
    )
    _check_constraint(a**2 * v**n, b * c * d * e, "a^2 v^n = bcde", ctx)
    _check_constraint(wv**3, q * r * s * t * u * v, "w^3 = qrstuv", ctx)
    w = _W(ctx, p)
    bcd = b * c * d
    vn = v**-n  # a^2/(bcde) under the constraint; keeps k = n exact
    c_e, c_bcd, c_0 = 1 / e, a / bcd, a * a / bcd
    total = mpc(0)
    for k in range(n + 1):
        th = w.tratio(
            (
                a * wv**k,
                c_e * (wv / (t * u)) ** k,
                vn * (u * v / wv) ** k,
                c_bcd * (t * v / wv) ** k,
                c_0,
            ),
            (a, c_e, vn, c_bcd, c_0 * (t * u * v / wv) ** k),
        )
        fac = w.f([(b, q), (c, r), (d, s), (e, t), (a, u), (vn, v)], k) / w.fd(
            [
                (a / b, wv / q),
                (a / c, wv / r),
                (a / d, wv / s),
                (a * wv / (e * t), wv / t),
                (wv / u, wv / u),
                (a * wv * v ** (n - 1), wv / v),
            ],
            k,
        )
        bracket = w.bracket(
            (
                (a / (c * d)) * (wv / (r * s)) ** k,
                (a / (b * d)) * (wv / (q * s)) ** k,
                (a / (b * c)) * (wv / (q * r)) ** k,
                e * t**k,
                a * u**k,
                v ** (k - n),
            ),
            (
                (a / b) * (wv / q) ** k,
                (a / c) * (wv / r) ** k,
                (a / d) * (wv / s) ** k,
                (u / wv) ** k * v ** (k - n),
                (e / a) * (t / wv) ** k * v ** (k - n),
                e * (t * u / wv) ** k,
            ),
        )
        total += w.note(th * fac * (wv / v) ** k * bracket)
    return total, w.scale


# --------------------------------------------------------------------------
# Bilateral forms
# --------------------------------------------------------------------------


def verify_bilateral_p0(
    params: Mapping[str, Number],
    ctx=None,
    tolerance=None,
    tail_threshold=None,
    depth_override: Optional[tuple] = None,
) -> ResidualReport:
    """Bilateral six-base summation at p = 0, all twelve base magnitudes
    below 1.  The bilateral sum is truncated adaptively: each side extends
    until its last five terms fall below tail_threshold * scale (default:
    the context's product cutoff).  The closed form is a difference of two
    products of infinite q-Pochhammer symbols.

    ``depth_override=(pos, neg)`` forces the exact number of terms per
    side, which the acceptance suite uses to double the truncation depth.
    The default tolerance is 1e-35 (truncation-dominated, looser than the
    exact-identity tolerance).
    """
    with ctx.workspace():
        a, b, c, d, e, f, g = _as_params(ctx, params, "abcdefg")
        q, r, s, t, u, v, wv = _as_params(ctx, params, ["q", "r", "s", "t", "u", "v", "w"])
        _check_constraint(a**3, b * c * d * e * f * g, "a^3 = bcdefg", ctx)
        _check_constraint(wv**3, q * r * s * t * u * v, "w^3 = qrstuv", ctx)
        bases = {
            "q": q, "r": r, "s": s, "t": t, "u": u, "v": v,
            "w/q": wv / q, "w/r": wv / r, "w/s": wv / s,
            "w/t": wv / t, "w/u": wv / u, "w/v": wv / v,
        }
        for name, val in bases.items():
            if abs(val) >= 1:
                raise DomainError(f"|{name}| must be < 1 for the bilateral sum")
        thr = ctx.product_cutoff if tail_threshold is None else ctx.to_real(tail_threshold)

        def one(x):
            return 1 - x

        def term(k: int) -> mpc:
            th = (
                one(a * wv**k)
                * one((a / (e * f)) * (wv / (t * u)) ** k)
                * one((f * g / a) * (u * v / wv) ** k)
                * one((e * g / a) * (t * v / wv) ** k)
            )
            thd = (
                one((g / a) * (v / wv) ** k)
                * one((e * f * g / a) * (t * u * v / wv) ** k)
                * one((a / f) * (wv / u) ** k)
                * one((a / e) * (wv / t) ** k)
            )
            fac = mpc(1)
            for coef, base in (
                (b, q), (c, r), (d, s), (e, t), (f, u), (g, v),
            ):
                fac *= _poch0(coef, base, k)
            for coef, base in (
                (a / b, wv / q), (a / c, wv / r), (a / d, wv / s),
                (a / e, wv / t), (a / f, wv / u), (a / g, wv / v),
            ):
                fac /= _poch0(coef, base, k)
            br = 1 - (
                one((a / (c * d)) * (wv / (r * s)) ** k)
                * one((a / (b * d)) * (wv / (q * s)) ** k)
                * one((a / (b * c)) * (wv / (q * r)) ** k)
                * one(e * t**k)
                * one(f * u**k)
                * one(g * v**k)
            ) / (
                one((a / b) * (wv / q) ** k)
                * one((a / c) * (wv / r) ** k)
                * one((a / d) * (wv / s) ** k)
                * one((f * g / a) * (u * v / wv) ** k)
                * one((e * g / a) * (t * v / wv) ** k)
                * one((e * f / a) * (t * u / wv) ** k)
            )
            if thd == 0:
                raise DrawRejected("near-singular-theta", "bilateral denominator")
            return th / thd * fac * br

        scale = mpfr(0)
        total = mpc(0)

        def run_side(step: int, forced: Optional[int]) -> int:
            nonlocal total, scale
            k = 0 if step > 0 else -1
            small = 0
            count = 0
            while True:
                tv = term(k)
                total += tv
                count += 1
                av = abs(tv)
                if av > scale:
                    scale = av
                if forced is None:
                    if av < thr * max(mpfr(1), scale):
                        small += 1
                        if small >= 5:
                            return count
                    else:
                        small = 0
                    if count > 20000:
                        raise DomainError("bilateral sum failed to decay")
                elif count >= forced:
                    return count
                k += step

        fpos = fneg = None
        if depth_override is not None:
            fpos, fneg = depth_override
        npos = run_side(+1, fpos)
        nneg = run_side(-1, fneg)

        def ipp(x, base):
            val = infinite_p_pochhammer(x, base, ctx)
            return val

        first = mpc(1)
        for coef, base in (
            (b * wv / (a * q), wv / q), (c * wv / (a * r), wv / r),
            (d * wv / (a * s), wv / s), (e * wv / (a * t), wv / t),
            (f * wv / (a * u), wv / u), (g * wv / (a * v), wv / v),
        ):
            first *= ipp(coef, base)
        for coef, base in (
            (q / b, q), (r / c, r), (s / d, s), (t / e, t), (u / f, u), (v / g, v),
        ):
            den = ipp(coef, base)
            if abs(den) < NEAR_SINGULAR_REL:
                raise DrawRejected("near-singular-product", f"({coef}; {base})_inf")
            first /= den
        second = mpc(1)
        for coef, base in (
            (b, q), (c, r), (d, s), (e, t), (f, u), (g, v),
        ):
            second *= ipp(coef, base)
        for coef, base in (
            (a / b, wv / q), (a / c, wv / r), (a / d, wv / s),
            (a / e, wv / t), (a / f, wv / u), (a / g, wv / v),
        ):
            den = ipp(coef, base)
            if abs(den) < NEAR_SINGULAR_REL:
                raise DrawRejected("near-singular-product", f"({coef}; {base})_inf")
            second /= den
        rhs = first - second
        if tolerance is None:
            tolerance = mpfr("1e-35")
        return _finish(
            "indmrat", total, rhs, scale, ctx, tolerance,
            {"depth_pos": npos, "depth_neg": nneg},
        )


def _poch0(coef: mpc, base: mpc, k: int) -> mpc:
    """(coef; base)_k at p = 0 for any integer k (direct products)."""
    if k == 0:
        return mpc(1)
    if k > 0:
        prod = mpc(1)
        y = coef
        for _ in range(k):
            prod *= 1 - y
            y *= base
        return prod
    prod = mpc(1)
    y = coef * base**k
    for _ in range(-k):
        prod *= 1 - y
        y *= base
    if prod == 0:
        raise DrawRejected("near-singular-theta", "p = 0 factorial")
    return 1 / prod


def verify_bilateral_theta_compact(
    fam: SequenceFamily, p, K: int, ctx=None, tolerance=None
) -> ResidualReport:
    """Bilateral theta summation in its compact-deviation specialization.

    Outside the window |k| <= K the family satisfies b_k = ... = f_k =
    a_k^(1/2), which makes every summand vanish (theta(a_k / e_k f_k; p) =
    theta(1; p) = 0) and collapses both infinite products to finite ones;
    the collapsed finite identity is what gets checked.
    """
    with ctx.workspace():
        p = ctx.to_mpc(p)
        K = int(K)
        if fam.window is None or fam.window.start > -K or fam.window.stop <= K:
            raise DomainError("family window must cover [-K, K]")
        w = _W(ctx, p)

        def z(k: int) -> mpc:
            v = fam.at(k)
            a = v["a"]
            bcdef = v["b"] * v["c"] * v["d"] * v["e"] * v["f"]
            num = (v["b"], v["c"], v["d"], v["e"], v["f"], a**3 / bcdef)
            den = tuple(a / x for x in num)
            return w.td(*num) / w.td(*den)

        zvals = {k: z(k) for k in range(-K, K + 1)}
        total = mpc(0)
        for k in range(-K, K + 1):
            v = fam.at(k)
            a, e, f, g = v["a"], v["e"], v["f"], v["g"]
            bcd = v["b"] * v["c"] * v["d"]
            pref = w.t(
                a, a / (e * f), a * a / (bcd * e), a * a / (bcd * f)
            ) / w.td(a * a / (bcd * e * f), a * a / bcd, a / f, a / e)
            upart = generalized_product(lambda j: zvals[j], 0, k - 1)
            bracket = 1 - w.t(
                a / (v["b"] * v["c"]), a / (v["b"] * v["d"]), a / (v["c"] * v["d"])
            ) * w.t(e, f, g) / (
                w.td(a / v["d"], a / v["c"], a / v["b"])
                * w.td(
                    a * a / (bcd * e), a * a / (bcd * f), a * a / (bcd * g)
                )
            )
            total += w.note(pref * upart * bracket)
        left_prod = mpc(1)
        for k in range(-K, 0):
            left_prod /= zvals[k]
        right_prod = mpc(1)
        for k in range(0, K + 1):
            right_prod *= zvals[k]
        rhs = left_prod - right_prod
        return _finish("bilateral_theta", total, rhs, w.scale, ctx, tolerance)


# --------------------------------------------------------------------------
# Four-base single sums (m00) and the two-nome transformation chain
# --------------------------------------------------------------------------


def _m00_term(w, k, a, b, c, d, q, r, s, t):
    c1, c2, c3, c4 = a * d, b / d, c / d, a * d / (b * c)
    th = w.tratio(
        (
            c1 * (r * s * t / q) ** k,
            c2 * (r / q) ** k,
            c3 * (s / q) ** k,
            c4 * (t / q) ** k,
        ),
        (c1, c2, c3, c4),
    )
    fac = w.f(
        [
            (a, r * s * t / q**2),
            (b, r),
            (c, s),
            (a * d * d / (b * c), t),
        ],
        k,
    ) / w.fd(
        [
            (d * q, q),
            (a * d * s * t / (b * q), s * t / q),
            (a * d * r * t / (c * q), r * t / q),
            (b * c * r * s / (d * q), r * s / q),
        ],
        k,
    )
    return th * fac * q**k


def _m00_closed(w, n, a, b, c, d, q, r, s, t):
    """(X, P_n, Y) with sum_{k<=n} term_k = X P_n - Y."""
    x = w.t(a, b, c, a * d * d / (b * c)) / (
        d * w.td(a * d, b / d, c / d, a * d / (b * c))
    )
    y = w.t(d, a * d / b, a * d / c, b * c / d) / (
        d * w.td(a * d, b / d, c / d, a * d / (b * c))
    )
    pn = w.f(
        [
            (a * r * s * t / q**2, r * s * t / q**2),
            (b * r, r),
            (c * s, s),
            (a * d * d * t / (b * c), t),
        ],
        n,
    ) / w.fd(
        [
            (d * q, q),
            (a * d * s * t / (b * q), s * t / q),
            (a * d * r * t / (c * q), r * t / q),
            (b * c * r * s / (d * q), r * s / q),
        ],
        n,
    )
    return x, pn, y


def verify_m00_sum(params: Mapping[str, Number], n: int, ctx=None, tolerance=None) -> ResidualReport:
    """Four-base summation (bases q, r, s, t) whose right side is a
    two-term combination of theta ratios and factorial products."""
    with ctx.workspace():
        a, b, c, d = _as_params(ctx, params, "abcd")
        q, r, s, t, p = _as_params(ctx, params, ["q", "r", "s", "t", "p"])
        n = int(n)
        w = _W(ctx, p)
        total = mpc(0)
        for k in range(n + 1):
            total += w.note(_m00_term(w, k, a, b, c, d, q, r, s, t))
        x, pn, y = _m00_closed(w, n, a, b, c, d, q, r, s, t)
        return _finish("m00", total, x * pn - y, w.scale, ctx, tolerance)


def _quartet_sum_pieces(w: _W, fam: QuartetFamily, n: int):
    """(terms lambda_k, partial products prod_{j<=k} z_j) of the Warnaar sum."""
    lam = []
    zprod = []
    running = mpc(1)
    for k in range(n + 1):
        v = fam.at(k)
        a, b, c, d = v["a"], v["b"], v["c"], v["d"]
        bcd = b * c * d
        t_k = w.t(a, a / (b * c), a / (b * d), a / (c * d)) / w.td(
            a / bcd, a / d, a / c, a / b
        )
        lam.append(t_k * running)
        z_k = w.t(b, c, d, a * a / bcd) / w.td(a / b, a / c, a / d, bcd / a)
        running *= z_k
        zprod.append(+running)
    return lam, zprod


def verify_general_transform(
    fam_lower: QuartetFamily,
    fam_upper: QuartetFamily,
    p,
    P,
    n: int,
    ctx=None,
    tolerance=None,
) -> ResidualReport:
    """Two-nome double-sum transformation built on the Warnaar-sum terms;
    also asserts the sum-interchange lemma on the raw term arrays (pure
    reordering, so it holds to roundoff)."""
    with ctx.workspace():
        n = int(n)
        wl = _W(ctx, ctx.to_mpc(p))
        wu = _W(ctx, ctx.to_mpc(P))
        lam, zl = _quartet_sum_pieces(wl, fam_lower, n)
        big, zu = _quartet_sum_pieces(wu, fam_upper, n)
        lhs = mpc(0)
        rhs = mpc(0)
        for k in range(n + 1):
            lhs += wl.note(lam[k] * (1 - zu[n - k]))
            rhs += wl.note(big[k] * (1 - zl[n - k]))
        i1 = mpc(0)
        i2 = mpc(0)
        for k in range(n + 1):
            s_u = mpc(0)
            s_l = mpc(0)
            for j in range(n - k + 1):
                s_u += big[j]
                s_l += lam[j]
            i1 += lam[k] * s_u
            i2 += big[k] * s_l
        inter = _rel(i1 - i2, i1, i2, wl.scale, mpfr(1))
        return _finish(
            "gtf", lhs, rhs, wl.scale, ctx, tolerance, {"interchange": inter}
        )


def _ex28_bracket_fac(w, k, n, A, B, C, D, Q, R, S, T):
    """k-indexed factorial block multiplying X in the two-term bracket."""
    return w.f(
        [
            (Q**-n / D, Q),
            ((B / (A * D)) * (Q / (S * T)) ** n, S * T / Q),
            ((C / (A * D)) * (Q / (R * T)) ** n, R * T / Q),
            ((D / (B * C)) * (Q / (R * S)) ** n, R * S / Q),
        ],
        k,
    ) / w.fd(
        [
            ((Q**2 / (R * S * T)) ** n / A, R * S * T / Q**2),
            (R**-n / B, R),
            (S**-n / C, S),
            ((B * C / (A * D * D)) * T**-n, T),
        ],
        k,
    )


def verify_ex28_chain(
    variant: str, params: Mapping[str, Number], n: int, ctx=None, tolerance=None
) -> ResidualReport:
    """The two-nome transformation chain.

    variant="ex28":      full four-base, two-nome transformation built from
                         the m00 machinery (lowercase set with nome p,
                         uppercase set with nome P).
    variant="dD1":       its d, D -> 1 case.
    variant="quadbasic": the s=t=q, S=T=Q case of dD1.
    variant="split_poised": the single-base case (R=Q=r=q and P=p);
                         additionally recasts both sides as 12E11 series at
                         argument -1 (principal square-root parameters) and
                         checks the recast against the sum form, guarding
                         the branch convention.
    """
    with ctx.workspace():
        n = int(n)
        if variant == "ex28":
            return _ex28_full(params, n, ctx, tolerance)
        if variant == "dD1":
            return _ex28_dd1(params, n, ctx, tolerance)
        if variant == "quadbasic":
            return _ex28_quadbasic(params, n, ctx, tolerance)
        if variant == "split_poised":
            return _ex28_split_poised(params, n, ctx, tolerance)
        raise DomainError(f"unknown variant {variant!r}")


def _ex28_full(params, n, ctx, tolerance):
    a, b, c, d = _as_params(ctx, params, "abcd")
    q, r, s, t, p = _as_params(ctx, params, ["q", "r", "s", "t", "p"])
    A, B, C, D = _as_params(ctx, params, "ABCD")
    Q, R, S, T, P = _as_params(ctx, params, ["Q", "R", "S", "T", "P"])
    wl = _W(ctx, p)
    wu = _W(ctx, P)
    xl, pl, yl = _m00_closed(wl, n, a, b, c, d, q, r, s, t)
    xu, pu, yu = _m00_closed(wu, n, A, B, C, D, Q, R, S, T)
    lhs = mpc(0)
    rhs = mpc(0)
    for k in range(n + 1):
        lam_k = _m00_term(wl, k, a, b, c, d, q, r, s, t)
        gu_k = _ex28_bracket_fac(wu, k, n, A, B, C, D, Q, R, S, T)
        lhs += wl.note(lam_k * (xu * gu_k - yu / pu))
        big_k = _m00_term(wu, k, A, B, C, D, Q, R, S, T)
        gl_k = _ex28_bracket_fac(wl, k, n, a, b, c, d, q, r, s, t)
        rhs += wl.note(big_k * (xl * gl_k - yl / pl))
    rhs *= pl / pu
    return _finish("ex28", lhs, rhs, wl.scale, ctx, tolerance)


def _dd1_term(w, k, a, b, c, q, r, s, t):
    c4 = a / (b * c)
    th = w.tratio(
        (
            a * (r * s * t / q) ** k,
            b * (r / q) ** k,
            c * (s / q) ** k,
            c4 * (t / q) ** k,
        ),
        (a, b, c, c4),
    )
    fac = w.f(
        [(a, r * s * t / q**2), (b, r), (c, s), (a / (b * c), t)], k
    ) / w.fd(
        [
            (q, q),
            (a * s * t / (b * q), s * t / q),
            (a * r * t / (c * q), r * t / q),
            (b * c * r * s / q, r * s / q),
        ],
        k,
    )
    return th * fac


def _dd1_bracket(w, k, n, A, B, C, Q, R, S, T):
    return w.f(
        [
            (Q**-n, Q),
            ((B / A) * (Q / (S * T)) ** n, S * T / Q),
            ((C / A) * (Q / (R * T)) ** n, R * T / Q),
            ((Q / (R * S)) ** n / (B * C), R * S / Q),
        ],
        k,
    ) / w.fd(
        [
            ((Q**2 / (R * S * T)) ** n / A, R * S * T / Q**2),
            (R**-n / B, R),
            (S**-n / C, S),
            (B * C / (A * T**n), T),
        ],
        k,
    )


def _dd1_p(w, n, a, b, c, q, r, s, t):
    return w.f(
        [
            (a * r * s * t / q**2, r * s * t / q**2),
            (b * r, r),
            (c * s, s),
            (a * t / (b * c), t),
        ],
        n,
    ) / w.fd(
        [
            (q, q),
            (a * s * t / (b * q), s * t / q),
            (a * r * t / (c * q), r * t / q),
            (b * c * r * s / q, r * s / q),
        ],
        n,
    )


def _ex28_dd1(params, n, ctx, tolerance):
    a, b, c = _as_params(ctx, params, "abc")
    q, r, s, t, p = _as_params(ctx, params, ["q", "r", "s", "t", "p"])
    A, B, C = _as_params(ctx, params, "ABC")
    Q, R, S, T, P = _as_params(ctx, params, ["Q", "R", "S", "T", "P"])
    wl = _W(ctx, p)
    wu = _W(ctx, P)
    lhs = mpc(0)
    rhs = mpc(0)
    for k in range(n + 1):
        lhs += wl.note(
            _dd1_term(wl, k, a, b, c, q, r, s, t)
            * _dd1_bracket(wu, k, n, A, B, C, Q, R, S, T)
            * q**k
        )
        rhs += wl.note(
            _dd1_term(wu, k, A, B, C, Q, R, S, T)
            * _dd1_bracket(wl, k, n, a, b, c, q, r, s, t)
            * Q**k
        )
    rhs *= _dd1_p(wl, n, a, b, c, q, r, s, t) / _dd1_p(wu, n, A, B, C, Q, R, S, T)
    return _finish("dD1", lhs, rhs, wl.scale, ctx, tolerance)


def _quadbasic_term(w, k, a, b, c, q, r):
    th = w.tratio((a * r**k * q**k, b * r**k * q**-k), (a, b))
    fac = w.f([(a, r), (b, r), (c, q), (a / (b * c), q)], k) / w.fd(
        [(q, q), (a * q / b, q), (a * r / c, r), (b * c * r, r)], k
    )
    return th * fac


def _quadbasic_bracket(w, k, n, A, B, C, Q, R):
    return w.f(
        [
            (C * R**-n / A, R),
            (R**-n / (B * C), R),
            (Q**-n, Q),
            (B * Q**-n / A, Q),
        ],
        k,
    ) / w.fd(
        [
            (Q**-n / C, Q),
            (B * C * Q**-n / A, Q),
            (R**-n / A, R),
            (R**-n / B, R),
        ],
        k,
    )


def _ex28_quadbasic(params, n, ctx, tolerance):
    a, b, c = _as_params(ctx, params, "abc")
    q, r, p = _as_params(ctx, params, ["q", "r", "p"])
    A, B, C = _as_params(ctx, params, "ABC")
    Q, R, P = _as_params(ctx, params, ["Q", "R", "P"])
    wl = _W(ctx, p)
    wu = _W(ctx, P)
    lhs = mpc(0)
    rhs = mpc(0)
    for k in range(n + 1):
        lhs += wl.note(
            _quadbasic_term(wl, k, a, b, c, q, r)
            * _quadbasic_bracket(wu, k, n, A, B, C, Q, R)
            * q**k
        )
        rhs += wl.note(
            _quadbasic_term(wu, k, A, B, C, Q, R)
            * _quadbasic_bracket(wl, k, n, a, b, c, q, r)
            * Q**k
        )
    pref = (
        wl.f([(a * r, r), (b * r, r), (c * q, q), (a * q / (b * c), q)], n)
        * wu.f([(Q, Q), (A * Q / B, Q), (A * R / C, R), (B * C * R, R)], n)
    ) / (
        wl.fd([(q, q), (a * q / b, q), (a * r / c, r), (b * c * r, r)], n)
        * wu.fd([(A * R, R), (B * R, R), (C * Q, Q), (A * Q / (B * C), Q)], n)
    )
    rhs *= pref
    return _finish("quadbasic", lhs, rhs, wl.scale, ctx, tolerance)


def _split_poised_sum(w, n, a, b, c, A, B, C, q):
    total = mpc(0)
    for k in range(n + 1):
        quot = w.tratio((a * q ** (2 * k),), (a,))
        fac = w.f([(a, q), (b, q), (c, q), (a / (b * c), q)], k) / w.fd(
            [(q, q), (a * q / b, q), (a * q / c, q), (b * c * q, q)], k
        )
        shift = w.f(
            [
                (q**-n, q),
                ((B / A) * q**-n, q),
                ((C / A) * q**-n, q),
                (q**-n / (B * C), q),
            ],
            k,
        ) / w.fd(
            [
                (q**-n / A, q),
                (q**-n / B, q),
                (q**-n / C, q),
                ((B * C / A) * q**-n, q),
            ],
            k,
        )
        total += w.note(quot * fac * shift * q**k)
    return total


def _split_poised_espec(a, b, c, A, B, C, q, p, n) -> ESeriesSpec:
    sa = gmpy2.sqrt(a)
    sp = gmpy2.sqrt(p)
    qn = q**-n
    return ESeriesSpec(
        (
            a, q * sa, -q * sa, q * sa / sp, -q * sa * sp,
            b, c, a / (b * c),
            qn, (B / A) * qn, (C / A) * qn, qn / (B * C),
        ),
        (
            sa, -sa, sa * sp, -sa / sp,
            a * q / b, a * q / c, b * c * q,
            qn / A, qn / B, qn / C, (B * C / A) * qn,
        ),
        q,
        p,
        mpc(-1),
    )


def _ex28_split_poised(params, n, ctx, tolerance):
    a, b, c = _as_params(ctx, params, "abc")
    A, B, C = _as_params(ctx, params, "ABC")
    q, p = _as_params(ctx, params, ["q", "p"])
    w = _W(ctx, p)
    lhs = _split_poised_sum(w, n, a, b, c, A, B, C, q)
    pref = w.f(
        [
            (a * q, q), (b * q, q), (c * q, q), (a * q / (b * c), q),
            (A * q / B, q), (A * q / C, q), (B * C * q, q),
        ],
        n,
    ) / w.fd(
        [
            (A * q, q), (B * q, q), (C * q, q), (A * q / (B * C), q),
            (a * q / b, q), (a * q / c, q), (b * c * q, q),
        ],
        n,
    )
    rhs_sum = _split_poised_sum(w, n, A, B, C, a, b, c, q)
    rhs = pref * rhs_sum
    e_lhs, s1 = e_sum_scaled(
        _split_poised_espec(a, b, c, A, B, C, q, p, n), n, ctx=ctx,
        reject_rel=NEAR_SINGULAR_REL,
    )
    e_rhs, s2 = e_sum_scaled(
        _split_poised_espec(A, B, C, a, b, c, q, p, n), n, ctx=ctx,
        reject_rel=NEAR_SINGULAR_REL,
    )
    details = {
        "recast_lhs": _rel(e_lhs - lhs, lhs, w.scale, mpfr(1)),
        "recast_rhs": _rel(pref * e_rhs - rhs, rhs, w.scale, mpfr(1)),
    }
    return _finish("split_poised", lhs, rhs, w.scale, ctx, tolerance, details)


# --------------------------------------------------------------------------
# Quadratic (base q / base q^2) transformations
# --------------------------------------------------------------------------


def verify_quadratic_transforms(
    variant: str, params: Mapping[str, Number], n: int, ctx=None, tolerance=None
) -> ResidualReport:
    """Mixed base-q / base-q^2 sums transformed to terminating 12V11 series
    in base q^2 (evaluated through the series engine).

    variant="first" sums to n; variant="second" sums to 2n.
    """
    with ctx.workspace():
        n = int(n)
        lhs, rhs, scale = _quad_sides(variant, params, n, ctx, _W(ctx, _as_params(ctx, params, ["p"])[0]))
        ident = "quad1" if variant == "first" else "quad2"
        return _finish(ident, lhs, rhs, scale, ctx, tolerance)


def _quad_sides(variant, params, n, ctx, w):
    p = _as_params(ctx, params, ["p"])[0]
    q = _as_params(ctx, params, ["q"])[0]
    q2 = q * q
    if variant == "first":
        a, b, c, f = _as_params(ctx, params, "abcf")
        ac = a * c
        total = mpc(0)
        for k in range(n + 1):
            quot = w.t(ac * q ** (3 * k)) / w.td(ac)
            fac = w.f(
                [(a, q), (b, q), (c * q / b, q)], k
            ) * w.f(
                [(f, q2), (a**2 * c**2 * q ** (2 * n + 1) / f, q2), (q ** (-2 * n), q2)], k
            ) / (
                w.fd([(c * q2, q2), (ac * q2 / b, q2), (a * b * q, q2)], k)
                * w.fd(
                    [
                        (ac * q / f, q),
                        ((f / ac) * q ** (-2 * n), q),
                        (ac * q ** (2 * n + 1), q),
                    ],
                    k,
                )
            )
            total += w.note(quot * fac * q**k)
        pref = w.f([(ac * q, q)], 2 * n) * w.f(
            [(a * c**2 * q2 / (b * f), q2), (a * b * q / f, q2)], n
        ) / (
            w.fd([(ac * q / f, q)], 2 * n)
            * w.fd([(a * b * q, q2), (a * c**2 * q2 / b, q2)], n)
        )
        vspec = VSeriesSpec(
            a * c**2 / b,
            (
                f, ac / b, c, c * q / b, c * q2 / b,
                a**2 * c**2 * q ** (2 * n + 1) / f, q ** (-2 * n),
            ),
            q2,
            p,
            mpc(1),
        )
        vval, vscale = v_sum_scaled(vspec, n, ctx=ctx, reject_rel=NEAR_SINGULAR_REL)
        return total, pref * vval, max(w.scale, vscale)
    if variant != "second":
        raise DomainError(f"unknown variant {variant!r}")
    a, c, d, f = _as_params(ctx, params, "acdf")
    ac = a * c
    total = mpc(0)
    for k in range(2 * n + 1):
        quot = w.t(ac * q ** (3 * k)) / w.td(ac)
        fac = w.f(
            [(d, q2), (f, q2), (a**2 * c**2 * q / (d * f), q2)], k
        ) * w.f(
            [(a, q), (c * q ** (2 * n + 1), q), (q ** (-2 * n), q)], k
        ) / (
            w.fd([(ac * q / d, q), (ac * q / f, q), (d * f / ac, q)], k)
            * w.fd(
                [(c * q2, q2), (a * q ** (1 - 2 * n), q2), (ac * q ** (2 * n + 2), q2)],
                k,
            )
        )
        total += w.note(quot * fac * q**k)
    pref = w.f([(ac * q, q), (ac * q / (d * f), q)], n) * w.f(
        [(ac * q ** (1 - n) / d, q2), (ac * q ** (1 - n) / f, q2)], n
    ) / (
        w.fd([(ac * q / d, q), (ac * q / f, q)], n)
        * w.fd([(ac * q ** (1 - n), q2), (ac * q ** (1 - n) / (d * f), q2)], n)
    )
    vspec = VSeriesSpec(
        ac * q ** (-2 * n - 1),
        (
            c, d, f, a**2 * c**2 * q / (d * f),
            a * q ** (-2 * n - 1), q ** (1 - 2 * n), q ** (-2 * n),
        ),
        q2,
        p,
        mpc(1),
    )
    vval, vscale = v_sum_scaled(vspec, n, ctx=ctx, reject_rel=NEAR_SINGULAR_REL)
    return total, pref * vval, max(w.scale, vscale)


def quadratic_p0_sides(variant: str, params: Mapping[str, Number], n: int, ctx) -> tuple:
    """Both sides of the quadratic transformation at p = 0, evaluated by an
    independent basic-hypergeometric path (plain products, no theta code)."""

    def bf(coef, base, k):
        prod = mpc(1)
        y = coef
        for _ in range(k):
            prod *= 1 - y
            y *= base
        return prod

    with ctx.workspace():
        q = ctx.to_mpc(params["q"])
        q2 = q * q
        n = int(n)
        if variant == "first":
            a, b, c, f = (ctx.to_mpc(params[k]) for k in "abcf")
            ac = a * c
            lhs = mpc(0)
            for k in range(n + 1):
                quot = (1 - ac * q ** (3 * k)) / (1 - ac)
                num = (
                    bf(a, q, k) * bf(b, q, k) * bf(c * q / b, q, k)
                    * bf(f, q2, k)
                    * bf(a**2 * c**2 * q ** (2 * n + 1) / f, q2, k)
                    * bf(q ** (-2 * n), q2, k)
                )
                den = (
                    bf(c * q2, q2, k) * bf(ac * q2 / b, q2, k) * bf(a * b * q, q2, k)
                    * bf(ac * q / f, q, k)
                    * bf((f / ac) * q ** (-2 * n), q, k)
                    * bf(ac * q ** (2 * n + 1), q, k)
                )
                lhs += quot * num / den * q**k
            pref = (
                bf(ac * q, q, 2 * n)
                * bf(a * c**2 * q2 / (b * f), q2, n) * bf(a * b * q / f, q2, n)
            ) / (
                bf(ac * q / f, q, 2 * n)
                * bf(a * b * q, q2, n) * bf(a * c**2 * q2 / b, q2, n)
            )
            a1 = a * c**2 / b
            tail = (
                f, ac / b, c, c * q / b, c * q2 / b,
                a**2 * c**2 * q ** (2 * n + 1) / f, q ** (-2 * n),
            )
        else:
            a, c, d, f = (ctx.to_mpc(params[k]) for k in "acdf")
            ac = a * c
            lhs = mpc(0)
            for k in range(2 * n + 1):
                quot = (1 - ac * q ** (3 * k)) / (1 - ac)
                num = (
                    bf(d, q2, k) * bf(f, q2, k)
                    * bf(a**2 * c**2 * q / (d * f), q2, k)
                    * bf(a, q, k) * bf(c * q ** (2 * n + 1), q, k)
                    * bf(q ** (-2 * n), q, k)
                )
                den = (
                    bf(ac * q / d, q, k) * bf(ac * q / f, q, k) * bf(d * f / ac, q, k)
                    * bf(c * q2, q2, k) * bf(a * q ** (1 - 2 * n), q2, k)
                    * bf(ac * q ** (2 * n + 2), q2, k)
                )
                lhs += quot * num / den * q**k
            pref = (
                bf(ac * q, q, n) * bf(ac * q / (d * f), q, n)
                * bf(ac * q ** (1 - n) / d, q2, n) * bf(ac * q ** (1 - n) / f, q2, n)
            ) / (
                bf(ac * q / d, q, n) * bf(ac * q / f, q, n)
                * bf(ac * q ** (1 - n), q2, n) * bf(ac * q ** (1 - n) / (d * f), q2, n)
            )
            a1 = ac * q ** (-2 * n - 1)
            tail = (
                c, d, f, a**2 * c**2 * q / (d * f),
                a * q ** (-2 * n - 1), q ** (1 - 2 * n), q ** (-2 * n),
            )
        wsum = mpc(0)
        for k in range(n + 1):
            quot = (1 - a1 * q2 ** (2 * k)) / (1 - a1)
            num = bf(a1, q2, k)
            den = bf(q2, q2, k)
            for x in tail:
                num *= bf(x, q2, k)
                den *= bf(q2 * a1 / x, q2, k)
            wsum += quot * num / den * q2**k
        return lhs, pref * wsum
