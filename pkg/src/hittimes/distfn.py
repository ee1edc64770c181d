"""Calculus of sub-probability distribution functions.

Two representations cover everything this package produces:

* :class:`StepFn` -- right-continuous, nondecreasing step functions on
  ``[0, inf)``.  Return-time laws (empirical and closed-form) live here.
* :class:`PLConcaveFn` -- continuous piecewise-linear functions, used for
  hitting-time laws and interpolants of step functions.

The two families are linked by an integral transform: ``forward_transform``
integrates ``1 - f`` for a step function ``f`` and lands on a concave
piecewise-linear function; ``inverse_transform`` takes ``1 - (right
derivative)`` and goes back.  On exact (rational) inputs both directions are
exact and mutually inverse.

Values may be ``float`` or ``fractions.Fraction``; arithmetic follows the
input types, so fully rational inputs give fully rational outputs.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

__all__ = [
    "StepFn",
    "PLConcaveFn",
    "ClassReport",
    "Violation",
    "LimitLaw",
    "step_eval",
    "pl_eval",
    "forward_transform",
    "inverse_transform",
    "validate_hitting_class",
    "validate_return_class",
    "make_law",
    "sup_distance",
    "derivative_convergence_check",
    "DerivativeConvergenceReport",
    "write_function_csv",
    "read_step_csv",
    "read_pl_csv",
    "DEFAULT_EXP_GRID",
    "DEFAULT_EXP_HORIZON",
]

# Slope comparisons on float data tolerate accumulated rounding up to this;
# exact rational data is unaffected (violations there are either 0 or large).
SLOPE_TIE_TOL = 1e-12

DEFAULT_EXP_GRID = Fraction(1, 1024)
DEFAULT_EXP_HORIZON = 20

Number = Union[int, float, Fraction]


class StepFn:
    """Right-continuous nondecreasing step function, 0 before the first jump.

    ``breakpoints`` is strictly increasing and nonnegative; ``values[i]`` is
    the value attained at and after ``breakpoints[i]``.  Construction
    canonicalizes: jumps that do not change the value are dropped, so two
    instances are ``==`` exactly when they agree at every real point.
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints: Iterable[Number], values: Iterable[Number]):
        bp = tuple(breakpoints)
        vals = tuple(values)
        if len(bp) != len(vals):
            raise ValueError("breakpoints and values must have equal length")
        kept_t = []
        kept_v = []
        prev_t = None
        prev_v: Number = 0
        for t, v in zip(bp, vals):
            if t < 0:
                raise ValueError(f"breakpoint {t} is negative")
            if prev_t is not None and t <= prev_t:
                raise ValueError("breakpoints must be strictly increasing")
            if v < prev_v:
                raise ValueError(f"values must be nondecreasing (at t={t})")
            if not 0 <= v <= 1:
                raise ValueError(f"value {v} outside [0, 1]")
            if v != prev_v:
                kept_t.append(t)
                kept_v.append(v)
            prev_t = t
            prev_v = v
        self.breakpoints = tuple(kept_t)
        self.values = tuple(kept_v)

    def __call__(self, t: Number) -> Number:
        i = bisect_right(self.breakpoints, t) - 1
        return self.values[i] if i >= 0 else 0

    @property
    def final_value(self) -> Number:
        return self.values[-1] if self.values else 0

    def jumps(self):
        """Pairs ``(t, jump size)`` in increasing ``t``."""
        prev: Number = 0
        for t, v in zip(self.breakpoints, self.values):
            yield t, v - prev
            prev = v

    def tail_deficit(self) -> Number:
        """``integral of (1 - f)`` from 0 to the last breakpoint (0 if none)."""
        total: Number = 0
        prev_t: Number = 0
        prev_v: Number = 0
        for t, v in zip(self.breakpoints, self.values):
            total += (1 - prev_v) * (t - prev_t)
            prev_t, prev_v = t, v
        return total

    def __eq__(self, other):
        if not isinstance(other, StepFn):
            return NotImplemented
        return self.breakpoints == other.breakpoints and self.values == other.values

    def __hash__(self):
        return hash((self.breakpoints, self.values))

    def __repr__(self):
        pts = ", ".join(f"{float(t):.6g}:{float(v):.6g}"
                        for t, v in zip(self.breakpoints, self.values))
        return f"StepFn({pts})"


class PLConcaveFn:
    """Continuous piecewise-linear function through ``knots``, starting at (0, 0).

    After the last knot the function continues with slope ``final_slope``
    (0 means a constant tail).  Knot abscissae are strictly increasing and
    ordinates nondecreasing; collinear knots are merged on construction, so
    ``==`` is pointwise equality.  Concavity, the ``f(t) <= t`` bound and the
    ``[0, 1]`` range are *not* enforced here -- empirical interpolants may
    violate them -- they are reported by :func:`validate_hitting_class`.
    """

    __slots__ = ("knots", "final_slope")

    def __init__(self, knots: Iterable[Sequence[Number]], final_slope: Number = 0):
        pts = [(t, y) for t, y in knots]
        if not pts:
            raise ValueError("at least one knot required")
        if pts[0][0] != 0 or pts[0][1] != 0:
            raise ValueError("first knot must be (0, 0)")
        for (t0, y0), (t1, y1) in zip(pts, pts[1:]):
            if t1 <= t0:
                raise ValueError("knot abscissae must be strictly increasing")
            if y1 < y0:
                raise ValueError("knot ordinates must be nondecreasing")
        if final_slope < 0:
            raise ValueError("final slope must be nonnegative")

        def slope(a, b):
            return (b[1] - a[1]) / (b[0] - a[0])

        # Trailing knots collinear with the final ray are redundant.
        while len(pts) >= 2 and slope(pts[-2], pts[-1]) == final_slope:
            pts.pop()
        # Merge interior collinear runs.
        out = [pts[0]]
        for p in pts[1:]:
            if len(out) >= 2 and slope(out[-2], out[-1]) == slope(out[-1], p):
                out[-1] = p
            else:
                out.append(p)
        self.knots = tuple(out)
        self.final_slope = final_slope

    @property
    def _ts(self):
        return tuple(t for t, _ in self.knots)

    def slopes(self) -> tuple:
        """Segment slopes, one per knot interval (empty for a single knot)."""
        return tuple((y1 - y0) / (t1 - t0)
                     for (t0, y0), (t1, y1) in zip(self.knots, self.knots[1:]))

    def __call__(self, t: Number) -> Number:
        if t < 0:
            return 0
        ts = self._ts
        i = bisect_right(ts, t) - 1
        if i < 0:
            return 0
        t0, y0 = self.knots[i]
        if i == len(self.knots) - 1:
            return y0 + self.final_slope * (t - t0)
        t1, y1 = self.knots[i + 1]
        return y0 + (y1 - y0) * (t - t0) / (t1 - t0)

    def right_derivative(self, t: Number) -> Number:
        if t < 0:
            return 0
        i = bisect_right(self._ts, t) - 1
        if i < 0:
            # t in [?, 0): only reachable for t < knots[0]=0, handled above.
            return 0
        seg = self.slopes()
        return seg[i] if i < len(seg) else self.final_slope

    @property
    def final_value(self) -> Number:
        return self.knots[-1][1]

    def __eq__(self, other):
        if not isinstance(other, PLConcaveFn):
            return NotImplemented
        return self.knots == other.knots and self.final_slope == other.final_slope

    def __hash__(self):
        return hash((self.knots, self.final_slope))

    def __repr__(self):
        pts = ", ".join(f"({float(t):.6g},{float(y):.6g})" for t, y in self.knots)
        return f"PLConcaveFn([{pts}], final_slope={float(self.final_slope):.6g})"


FunctionLike = Union[StepFn, PLConcaveFn, Callable[[float], float]]


def step_eval(f: StepFn, t: Number) -> Number:
    """Right-continuous lookup; 0 left of the first breakpoint."""
    return f(t)


def pl_eval(f: PLConcaveFn, t: Number) -> Number:
    """Linear interpolation between knots; 0 for t < 0; ray after the last knot."""
    return f(t)


def forward_transform(ft: StepFn) -> PLConcaveFn:
    """Integrate ``1 - ft`` from 0: the return-law to hitting-law transform.

    The integrand is piecewise constant, so the result is exact: knots sit at
    0 and at ``ft``'s breakpoints, segment slopes are ``1 - value``, hence
    nonincreasing, and the output is concave.  After the last breakpoint the
    function continues with slope ``1 - ft.final_value`` (0 when ``ft``
    saturates at 1).
    """
    knots = [(0, 0)]
    y: Number = 0
    prev_t: Number = 0
    prev_v: Number = 0
    for t, v in zip(ft.breakpoints, ft.values):
        if t > prev_t:
            y = y + (1 - prev_v) * (t - prev_t)
            knots.append((t, y))
        prev_t, prev_v = t, v
    return PLConcaveFn(knots, final_slope=1 - ft.final_value)


def inverse_transform(f: PLConcaveFn) -> StepFn:
    """``1 - (right derivative of f)`` as a right-continuous step function.

    Requires ``f`` concave (slopes nonincreasing within ``SLOPE_TIE_TOL``)
    with slopes at most 1; the value at each slope discontinuity is the one
    from the right.  Inverse of :func:`forward_transform` on its image.
    """
    seg = list(f.slopes()) + [f.final_slope]
    for a, b in zip(seg, seg[1:]):
        if b > a + SLOPE_TIE_TOL:
            raise ValueError(f"input is not concave: slope rises from {a} to {b}")
    bps = []
    vals = []
    for t_knot, s in zip((t for t, _ in f.knots), seg):
        if s > 1 + SLOPE_TIE_TOL:
            raise ValueError(f"slope {s} exceeds 1; result would leave [0, 1]")
        v = 1 - s
        if v < 0:
            v = 0
        bps.append(t_knot)
        vals.append(v)
    return StepFn(bps, vals)


@dataclass(frozen=True)
class Violation:
    rule: str
    where: float
    magnitude: float


@dataclass(frozen=True)
class ClassReport:
    """Membership verdict with per-rule witnesses; empty violations <=> member."""

    member: bool
    violations: tuple = ()
    indeterminate: bool = False


def validate_hitting_class(f: PLConcaveFn) -> ClassReport:
    """Check membership in the hitting-law class.

    Rules: nondecreasing and zero on negatives (structural), concave,
    ``f(t) <= t`` everywhere, range within ``[0, 1]``.  Violations are
    reported, never raised.
    """
    bad = []
    seg = list(f.slopes()) + [f.final_slope]
    for i in range(len(seg) - 1):
        rise = seg[i + 1] - seg[i]
        if rise > SLOPE_TIE_TOL:
            t_at = f.knots[i + 1][0]
            bad.append(Violation("concavity", float(t_at), float(rise)))
    for t, y in f.knots:
        if y > t + SLOPE_TIE_TOL:
            bad.append(Violation("diagonal-bound", float(t), float(y - t)))
        if y > 1 + SLOPE_TIE_TOL:
            bad.append(Violation("range", float(t), float(y - 1)))
    if f.final_slope > 0:
        # positive tail slope makes the function unbounded
        bad.append(Violation("range", float(f.knots[-1][0]), float(f.final_slope)))
    return ClassReport(member=not bad, violations=tuple(bad))


def validate_return_class(f: StepFn, tail_bound: Number | None = None) -> ClassReport:
    """Check membership in the return-law class.

    Monotonicity, right-continuity and vanishing on negatives hold by
    representation; the substantive test is ``integral of (1 - f) <= 1``.
    A function whose final value is below 1 has an infinite literal integral;
    since truncation of an empirical sample is the common cause, the report is
    marked *indeterminate* unless ``tail_bound`` (an upper bound on the unseen
    tail integral) is supplied.
    """
    bad = []
    deficit = f.tail_deficit()
    if f.final_value == 1:
        total = deficit
    elif tail_bound is not None:
        total = deficit + tail_bound
    else:
        bad.append(Violation("integral-indeterminate",
                             float(f.breakpoints[-1]) if f.breakpoints else 0.0,
                             float(1 - f.final_value)))
        return ClassReport(member=False, violations=tuple(bad), indeterminate=True)
    if total > 1 + SLOPE_TIE_TOL:
        where = float(f.breakpoints[-1]) if f.breakpoints else 0.0
        bad.append(Violation("integral-exceeds-one", where, float(total - 1)))
    return ClassReport(member=not bad, violations=tuple(bad))


@dataclass(frozen=True)
class LimitLaw:
    """A named limit law.

    kinds: ``exponential`` | ``uniform-hitting`` | ``cf-hitting`` | ``cf-return``.
    The cf laws are the rotation renormalization laws with parameters
    ``theta > 0`` and ``0 <= omega < 1``.
    """

    kind: str
    theta: Number | None = None
    omega: Number | None = None
    grid: Number | None = None
    horizon: Number | None = None

    _KINDS = ("exponential", "uniform-hitting", "cf-hitting", "cf-return")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown law kind {self.kind!r}")
        if self.kind.startswith("cf-"):
            if self.theta is None or self.omega is None:
                raise ValueError(f"{self.kind} needs theta and omega")
            if not self.theta > 0:
                raise ValueError("theta must be positive")
            if not 0 <= self.omega < 1:
                raise ValueError("omega must lie in [0, 1)")

    @classmethod
    def parse(cls, spec: str) -> "LimitLaw":
        """Parse CLI-facing law specs.

        ``exp[:grid=G,horizon=H]``, ``uniform-hitting``,
        ``cf-hitting:THETA,OMEGA``, ``cf-return:THETA,OMEGA``.
        """
        head, _, rest = spec.partition(":")
        head = head.strip()
        if head in ("exp", "exponential"):
            grid = horizon = None
            if rest:
                for item in rest.split(","):
                    k, _, v = item.partition("=")
                    k = k.strip()
                    if k == "grid":
                        grid = float(v)
                    elif k == "horizon":
                        horizon = float(v)
                    else:
                        raise ValueError(f"unknown exponential option {k!r}")
            return cls("exponential", grid=grid, horizon=horizon)
        if head in ("uniform-hitting", "uniform"):
            return cls("uniform-hitting")
        if head in ("cf-hitting", "cf-return"):
            parts = rest.split(",")
            if len(parts) != 2:
                raise ValueError(f"{head} needs two parameters, got {rest!r}")
            return cls(head, theta=float(parts[0]), omega=float(parts[1]))
        raise ValueError(f"unknown law spec {spec!r}")


def _cf_breakpoints(theta: Number, omega: Number):
    denom = 1 + theta * omega
    a = (1 + theta) * omega / denom
    b = (1 + theta) / denom
    return a, b


def make_law(law: LimitLaw | str,
             grid: Number | None = None,
             horizon: Number | None = None) -> Union[StepFn, PLConcaveFn]:
    """Construct a limit law as a concrete function object.

    * ``exponential`` -> step discretization of ``1 - exp(-t)``: value
      ``1 - exp(-k*grid)`` on ``[k*grid, (k+1)*grid)`` up to ``horizon``.
    * ``uniform-hitting`` -> ``min(t, 1)``.
    * ``cf-hitting(theta, omega)`` -> three linear pieces with breakpoints
      ``(1+theta)*omega/(1+theta*omega)`` and ``(1+theta)/(1+theta*omega)``;
      the middle slope ``1/(1+theta)`` makes the law continuous, concave and
      reach exactly 1 at the second breakpoint for every valid parameter pair.
    * ``cf-return(theta, omega)`` -> the inverse transform of cf-hitting:
      jumps to ``theta/(1+theta)`` and then to 1 at the same breakpoints.
    """
    if isinstance(law, str):
        law = LimitLaw.parse(law)
    if law.kind == "exponential":
        h = grid if grid is not None else (
            law.grid if law.grid is not None else DEFAULT_EXP_GRID)
        top = horizon if horizon is not None else (
            law.horizon if law.horizon is not None else DEFAULT_EXP_HORIZON)
        if h <= 0 or top <= 0:
            raise ValueError("grid and horizon must be positive")
        count = int(math.floor(top / h + 1e-9))
        bps = [k * h for k in range(1, count + 1)]
        vals = [1.0 - math.exp(-float(t)) for t in bps]
        return StepFn(bps, vals)
    if law.kind == "uniform-hitting":
        return PLConcaveFn([(0, 0), (1, 1)])
    a, b = _cf_breakpoints(law.theta, law.omega)
    knots = [(0, 0)]
    if a > 0:
        knots.append((a, a))
    knots.append((b, 1))
    hitting = PLConcaveFn(knots)
    if law.kind == "cf-hitting":
        return hitting
    return inverse_transform(hitting)


def _grid_points(a: FunctionLike, b: FunctionLike, grid: Iterable[Number]):
    pts = list(grid)
    if not pts:
        raise ValueError("evaluation grid must be nonempty")
    if isinstance(a, StepFn) and isinstance(b, StepFn):
        pts.extend(a.breakpoints)
        pts.extend(b.breakpoints)
    return pts


def sup_distance(a: FunctionLike, b: FunctionLike, grid: Iterable[Number]) -> float:
    """Max of ``|a(t) - b(t)|`` over the grid.

    When both arguments are step functions their breakpoints are added to the
    grid, which makes the result the exact supremum distance (both functions
    are constant between consecutive union breakpoints).
    """
    best = 0
    for t in _grid_points(a, b, grid):
        d = abs(a(t) - b(t))
        if d > best:
            best = d
    return best


@dataclass(frozen=True)
class DerivativeConvergenceReport:
    """Right-derivative deviations from a limit, per sequence index and probe."""

    probes: tuple
    deviations: tuple  # deviations[n][j] for sequence index n, probe j
    max_by_index: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "max_by_index",
                           tuple(max(row) if row else 0.0 for row in self.deviations))


def derivative_convergence_check(sequence: Sequence[PLConcaveFn],
                                 limit: PLConcaveFn,
                                 probes: Iterable[Number]) -> DerivativeConvergenceReport:
    """Deviation of right derivatives from the limit's at each probe.

    Probes must avoid the limit's knot abscissae (where the limit's derivative
    jumps); pointwise derivative convergence is only guaranteed off that set.
    """
    ps = tuple(probes)
    knot_ts = set(limit._ts)
    for p in ps:
        if p in knot_ts:
            raise ValueError(f"probe {p} coincides with a knot of the limit")
    rows = []
    for fn in sequence:
        rows.append(tuple(float(abs(fn.right_derivative(p) - limit.right_derivative(p)))
                          for p in ps))
    return DerivativeConvergenceReport(probes=ps, deviations=tuple(rows))


# ---------------------------------------------------------------------------
# CSV serialization: header "t,value", rows in increasing t.  Step rows carry
# the value at (i.e. right of) the breakpoint.  Floats are written with 17
# significant digits, which round-trips exactly.


def _fmt(x: Number) -> str:
    return format(float(x), ".17g")


def write_function_csv(f: Union[StepFn, PLConcaveFn], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        if isinstance(f, StepFn):
            rows = zip(f.breakpoints, f.values)
        else:
            rows = iter(f.knots)
        for t, v in rows:
            w.writerow([_fmt(t), _fmt(v)])


def _read_rows(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:2]] != ["t", "value"]:
            raise ValueError(f"{path}: expected header 't,value'")
        out = []
        for row in r:
            if not row:
                continue
            out.append((float(row[0]), float(row[1])))
    return out


def read_step_csv(path) -> StepFn:
    rows = _read_rows(path)
    return StepFn([t for t, _ in rows], [v for _, v in rows])


def read_pl_csv(path) -> PLConcaveFn:
    rows = _read_rows(path)
    if not rows or rows[0] != (0.0, 0.0):
        rows = [(0.0, 0.0)] + rows
    return PLConcaveFn(rows)
