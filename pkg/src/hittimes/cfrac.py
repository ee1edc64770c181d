"""Continued fractions, the Gauss map, and renormalization arcs for rotations.

Arithmetic is exact throughout: plain numbers are converted to
``fractions.Fraction`` (a float is taken at its exact binary value, a string
at its exact decimal value), and quadratic irrationals are given symbolically
by an eventually-periodic digit list (:class:`CFAlpha`), e.g. the golden
rotation number ``cf:[1*]``.  Digits use the standard convention
``a_k = floor(1 / H^k(alpha))`` with the Gauss map ``H(x) = frac(1/x)``;
convergents are seeded ``(p, q) = (1, 0), (0, 1)`` so that
``p_{k+1} = a_k p_k + p_{k-1}`` and likewise for ``q``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence, Union

__all__ = [
    "CFAlpha",
    "CFState",
    "NaturalExtensionPoint",
    "CircleArc",
    "GOLDEN",
    "gauss_map",
    "expand",
    "natural_extension",
    "renormalization_interval",
    "parse_alpha",
    "backward_value",
]

OMEGA_PRECISION = Fraction(1, 2 ** 40)

AlphaLike = Union[int, float, str, Fraction, "CFAlpha"]


@dataclass(frozen=True)
class CFAlpha:
    """A number in (0, 1) given by its continued-fraction digits.

    ``prefix`` followed by ``period`` repeated forever; an empty period means
    the digit list is finite and the number is rational.
    """

    prefix: tuple = ()
    period: tuple = ()

    def __post_init__(self):
        for d in self.prefix + self.period:
            if not (isinstance(d, int) and d >= 1):
                raise ValueError(f"continued-fraction digits must be integers >= 1, got {d!r}")
        if not self.prefix and not self.period:
            raise ValueError("empty digit list")

    @property
    def is_rational(self) -> bool:
        return not self.period

    def __len__(self):
        if self.period:
            raise TypeError("infinite digit sequence")
        return len(self.prefix)

    def digit(self, i: int) -> int:
        n = len(self.prefix)
        if i < n:
            return self.prefix[i]
        if not self.period:
            raise IndexError(f"digit {i} of a rational with {n} digits")
        return self.period[(i - n) % len(self.period)]

    def digits(self, n: int) -> tuple:
        if self.is_rational and n > len(self.prefix):
            n = len(self.prefix)
        return tuple(self.digit(i) for i in range(n))

    def tail(self, k: int) -> "CFAlpha":
        """The number whose digit sequence starts at index ``k``."""
        n = len(self.prefix)
        if k < n:
            return CFAlpha(self.prefix[k:], self.period)
        if not self.period:
            raise IndexError("tail beyond the last digit of a rational")
        shift = (k - n) % len(self.period)
        return CFAlpha((), self.period[shift:] + self.period[:shift])

    def value(self, precision: Fraction = OMEGA_PRECISION) -> Fraction:
        """A rational within ``precision`` (exact when the digit list is finite)."""
        word = []
        i = 0
        p0, q0 = 1, 0
        p1, q1 = 0, 1
        while True:
            try:
                d = self.digit(i)
            except IndexError:
                return Fraction(p1, q1)
            p0, q0, p1, q1 = p1, q1, d * p1 + p0, d * q1 + q0
            i += 1
            if not self.is_rational and q0 and Fraction(1, q0 * q1) < precision:
                return Fraction(p1, q1)
            word.append(d)

    def __float__(self):
        return float(self.value(Fraction(1, 2 ** 60)))

    def __str__(self):
        body = ",".join(map(str, self.prefix + self.period))
        return f"cf:[{body}{'*' if self.period else ''}]"


GOLDEN = CFAlpha(period=(1,))

_CF_RE = re.compile(r"^cf:\[([0-9,\s]+)(\*?)\]$")


def parse_alpha(text: str) -> Union[Fraction, CFAlpha]:
    """Parse an alpha spec: a decimal literal or a ``cf:[d1,d2,...]`` digit list.

    A trailing ``*`` makes the whole list the period (repeated forever);
    without it the list is finite and the value rational.
    """
    text = text.strip()
    m = _CF_RE.match(text)
    if m:
        digits = tuple(int(d) for d in m.group(1).replace(" ", "").split(",") if d)
        if m.group(2):
            return CFAlpha(period=digits)
        return CFAlpha(prefix=digits)
    try:
        val = Fraction(text)
    except ValueError as exc:
        raise ValueError(f"cannot parse alpha spec {text!r}") from exc
    if not 0 < val < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {val}")
    return val


def _as_exact(alpha: AlphaLike) -> Union[Fraction, CFAlpha]:
    if isinstance(alpha, CFAlpha):
        return alpha
    if isinstance(alpha, str):
        return parse_alpha(alpha)
    return Fraction(alpha)


def gauss_map(x):
    """``frac(1/x)`` with ``gauss_map(0) = 0``; exact on Fractions."""
    if x == 0:
        return x
    r = 1 / Fraction(x) if isinstance(x, (Fraction, int)) else 1.0 / x
    return r - int(r) if r >= 0 else r - (int(r) - 1)


@dataclass(frozen=True)
class CFState:
    """Digits and convergents of an expansion of order ``n``.

    ``convergents[k] = (p_k, q_k)`` for ``k = 0..n`` with ``(p_0, q_0) = (0, 1)``,
    so ``convergents`` has one more entry than ``digits``.  ``rational`` is set
    when the input was detected rational before ``n`` digits; ``exact`` then
    holds its value and ``digits`` the (truncated) full expansion.
    """

    alpha: Union[Fraction, CFAlpha]
    digits: tuple
    convergents: tuple
    order: int
    rational: bool = False
    exact: Fraction | None = None


def _rational_digits(x: Fraction, n: int):
    """First ``n`` continued-fraction digits of a rational in (0, 1)."""
    num, den = x.numerator, x.denominator
    digits = []
    terminated = False
    # Euclid on (den, num): digit = den // num, remainder continues.
    p, q = num, den
    while len(digits) < n:
        if p == 0:
            terminated = True
            break
        a, r = divmod(q, p)
        digits.append(a)
        p, q = r, p
    else:
        terminated = p == 0
    return digits, terminated


def _convergents(digits: Sequence[int]) -> tuple:
    p0, q0 = 1, 0
    p1, q1 = 0, 1
    out = [(p1, q1)]
    for a in digits:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    return tuple(out)


def expand(alpha: AlphaLike, n: int) -> CFState:
    """Expand ``alpha`` to ``n`` continued-fraction digits with convergents.

    A rational input (every float and decimal string is one) may terminate
    early; the state is then truncated and flagged ``rational`` with the exact
    value.  For digit-literal alphas the digits are read off directly.
    """
    if n < 1:
        raise ValueError("order must be a positive integer")
    exact = _as_exact(alpha)
    if isinstance(exact, CFAlpha):
        if exact.is_rational:
            digits = list(exact.digits(n))
            rational = len(exact.prefix) <= n
            value = exact.value()
            return CFState(exact, tuple(digits), _convergents(digits),
                           len(digits), rational=rational,
                           exact=value if rational else None)
        digits = list(exact.digits(n))
        return CFState(exact, tuple(digits), _convergents(digits), n)
    if not 0 < exact < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {float(exact)}")
    digits, terminated = _rational_digits(exact, n)
    return CFState(exact, tuple(digits), _convergents(digits), len(digits),
                   rational=terminated, exact=exact if terminated else None)


def _require_order(state: CFState, n: int):
    if state.order < n:
        raise ValueError(
            f"alpha is rational ({state.exact}) with only {state.order} digits; "
            f"order {n} requested")


def backward_value(word: Sequence[int],
                   precision: Fraction = OMEGA_PRECISION) -> Fraction:
    """Value of the finite continued fraction ``[0; word]``.

    Evaluation stops early once the truncation error bound ``1/(q_m q_{m+1})``
    drops below ``precision`` (the remaining digits cannot move the value by
    more than that); with few digits the value is exact.
    """
    p0, q0 = 1, 0
    p1, q1 = 0, 1
    for d in word:
        p0, q0, p1, q1 = p1, q1, d * p1 + p0, d * q1 + q0
        if q0 and Fraction(1, q0 * q1) < precision:
            break
    if q1 == 0:
        raise ValueError("empty word")
    return Fraction(p1, q1)


def _h_iterate(alpha: Union[Fraction, CFAlpha], n: int) -> Fraction:
    """``H^n(alpha)`` as a Fraction (within ``OMEGA_PRECISION`` for digit alphas)."""
    if isinstance(alpha, CFAlpha):
        return alpha.tail(n).value(OMEGA_PRECISION)
    x = alpha
    for _ in range(n):
        x = gauss_map(x)
    return x


@dataclass(frozen=True)
class NaturalExtensionPoint:
    """Forward/backward pair at order ``n``: ``(H^n(alpha), backward CF value)``."""

    theta: float
    omega: float
    order: int

    def __post_init__(self):
        if not 0 <= self.theta < 1:
            raise ValueError("theta must lie in [0, 1)")
        if not 0 <= self.omega <= 1:
            raise ValueError("omega must lie in [0, 1]")


def natural_extension(alpha: AlphaLike, beta: AlphaLike, n: int) -> NaturalExtensionPoint:
    """Order-``n`` point of the natural extension of the Gauss map.

    ``theta`` is the n-th Gauss iterate of alpha; ``omega`` is the value of
    the backward word: alpha's first ``n`` digits reversed, continued with
    beta's digits, truncated once the tail cannot move the value by
    ``OMEGA_PRECISION``.  Accumulation points in ``n`` do not depend on beta.
    """
    state = expand(alpha, n)
    _require_order(state, n)
    if isinstance(beta, (int, float, str, Fraction)) and Fraction(beta) == 0:
        beta_digits: tuple = ()
    else:
        beta_exact = _as_exact(beta)
        if isinstance(beta_exact, CFAlpha):
            beta_digits = beta_exact.digits(80)
        else:
            if not 0 <= beta_exact <= 1:
                raise ValueError("beta must lie in [0, 1]")
            if beta_exact == 1:
                beta_digits = (1,)
            else:
                beta_digits = tuple(_rational_digits(beta_exact, 80)[0])
    word = tuple(reversed(state.digits)) + beta_digits
    omega = backward_value(word) if word else Fraction(0)
    theta = _h_iterate(state.alpha, n)
    return NaturalExtensionPoint(theta=float(theta), omega=float(omega), order=n)


@dataclass(frozen=True)
class CircleArc:
    """Closed arc on the unit circle from ``start`` to ``end`` going upward.

    ``wraps`` marks arcs crossing 0; the length is then ``1 - start + end``.
    Endpoints may be Fractions (exact) or floats.
    """

    start: Fraction
    end: Fraction
    wraps: bool = False

    def __post_init__(self):
        if not (0 <= self.start < 1 and 0 <= self.end < 1):
            raise ValueError("arc endpoints must lie in [0, 1)")
        if not 0 < self.length < 1:
            raise ValueError("arc length must lie strictly between 0 and 1")

    @property
    def length(self):
        if self.wraps:
            return 1 - self.start + self.end
        return self.end - self.start

    def contains_real(self, x) -> bool:
        """Closed containment for a coordinate in [0, 1)."""
        if self.wraps:
            return x >= self.start or x <= self.end
        return self.start <= x <= self.end


def _frac_part(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def renormalization_interval(alpha: AlphaLike, z, n: int) -> CircleArc:
    """Closed arc with endpoints ``z + q_{n-1}*alpha`` and ``z + q_n*alpha`` (mod 1).

    The two displacements approximate zero from opposite sides, so the arc
    contains ``z`` and has length ``||q_{n-1} alpha|| + ||q_n alpha||``, which
    shrinks to 0 as ``n`` grows.  Orders below 2 are rejected: with small
    leading digits the first-order arc can degenerate to the full circle.
    """
    if n < 2:
        raise ValueError("renormalization intervals start at order 2")
    state = expand(alpha, n)
    _require_order(state, n)
    exact = state.alpha
    a_val = exact.value(Fraction(1, 2 ** 128)) if isinstance(exact, CFAlpha) else exact
    z_val = _frac_part(Fraction(z))
    p1, q1 = state.convergents[n - 1]
    p2, q2 = state.convergents[n]
    d1 = q1 * a_val - p1
    d2 = q2 * a_val - p2
    lo_disp, hi_disp = (d1, d2) if d1 < d2 else (d2, d1)
    if not (lo_disp < 0 < hi_disp or lo_disp == 0 or hi_disp == 0):
        raise AssertionError("convergent displacements should straddle zero")
    start = _frac_part(z_val + lo_disp)
    end = _frac_part(z_val + hi_disp)
    wraps = start > end
    return CircleArc(start=start, end=end, wraps=wraps)
