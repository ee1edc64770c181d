"""Hitting- and return-time statistics.

The central quantity is the first-passage time ``tau(x) = min{k >= 1 :
T^k x in U}`` for a target set ``U``; on starts inside ``U`` it is the return
time.  Everything downstream works with the *normalized* time ``mu(U) * tau``.

Three layers:

* exact: :func:`decompose_exact` enumerates a finite rotation completely and
  yields the rational masses of the level sets ``{return time = k}`` and
  ``{hitting time = k}``; :func:`decomposition_laws` turns these into exact
  distribution functions, and :func:`verify_decomposition_identities` checks
  the interpolant/derivative and sup-gap identities that make the integral
  duality exact at finite scale.
* sampled: :func:`empirical_distributions` runs seeded batches of start
  points through the orbit engines (vectorized, exact fixed-point
  arithmetic) and builds empirical distribution functions; mass that fails
  to hit within the cap stays visible as sub-probability deficit.
* conditional: :func:`direct_return_sample` rejection-samples starts inside
  the target for a sharper return-law estimate when ``mu(U)`` is small.

Batches are processed vectorized and results committed in start-index order,
so output is bit-identical for a given seed regardless of batch geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .distfn import PLConcaveFn, StepFn
from .dynsys import (
    SCALE,
    ArcSet,
    CircleRotation,
    DoublingMap,
    DyadicCell,
    FiniteRotation,
    PrecisionExhausted,
    ResidueSet,
    System,
    TargetSet,
    sample_points,
)

__all__ = [
    "HittingSample",
    "ReturnDecomposition",
    "EmpiricalLaws",
    "IdentityReport",
    "SamplingError",
    "hitting_time",
    "collect_hitting_sample",
    "decompose_exact",
    "decomposition_laws",
    "empirical_distributions",
    "direct_return_sample",
    "verify_decomposition_identities",
]

REJECTION_BUDGET = 10 ** 9
_BATCH = 1 << 20


class SamplingError(RuntimeError):
    """Sampling could not produce the requested data (empty or tiny target)."""


def _next_hit_table(system: FiniteRotation, target: ResidueSet) -> np.ndarray:
    """tau for every residue of a finite rotation, by one walk along the cycle.

    The orbit of 0 visits all residues (shift coprime to size); the hitting
    time of a point is its distance along that cycle to the next target
    element, computed by a single backward sweep over two laps.
    """
    n, r = system.size, system.shift
    in_u = np.zeros(n, dtype=bool)
    in_u[list(target.residues)] = True
    cycle = (np.arange(2 * n, dtype=np.int64) * r) % n
    u_pos = np.nonzero(in_u[cycle])[0]
    idx = np.searchsorted(u_pos, np.arange(n), side="right")
    nxt = u_pos[idx] - np.arange(n)
    taus = np.zeros(n, dtype=np.int64)
    taus[cycle[:n]] = nxt
    if taus.min() < 1 or taus.max() > n:
        raise AssertionError("cycle walk failed to close")
    return taus


@dataclass(frozen=True)
class HittingSample:
    """Raw per-start hitting times; ``tau == 0`` marks starts that never hit.

    ``in_target`` flags the starts lying in the target, whose times are
    return times.  Recorded times satisfy ``1 <= tau <= cap``; the not-hit
    fraction is carried, never dropped.
    """

    mu: Union[Fraction, float]
    taus: np.ndarray
    in_target: np.ndarray
    cap: int
    extended_tail: bool = False

    @property
    def size(self) -> int:
        return int(self.taus.size)

    @property
    def nothit_fraction(self) -> float:
        return float(np.count_nonzero(self.taus == 0) / self.taus.size)


def hitting_time(system: System, target: TargetSet, x: int, cap: int) -> Optional[int]:
    """Least ``k`` in ``[1, cap]`` with ``T^k x`` in the target, else ``None``.

    Counting starts at 1 even when ``x`` itself lies in the target.  For the
    doubling map a start carries 64 bits of orbit; asking beyond that raises
    :class:`~hittimes.dynsys.PrecisionExhausted` with the progress made (the
    sampling engines continue past it by feeding seeded fresh bits).
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    doubling = isinstance(system, DoublingMap)
    y = x
    for k in range(1, cap + 1):
        if doubling and k > 63:
            raise PrecisionExhausted(
                "orbit bits exhausted before any hit", steps_completed=63)
        y = system.step(y)
        if target.contains(y):
            return k
    return None


def _circle_batch(system: CircleRotation, target, starts: np.ndarray, cap: int):
    alpha = np.uint64(system.alpha_fp)
    pos = starts.copy()
    taus = np.zeros(starts.size, dtype=np.int64)
    alive = np.arange(starts.size, dtype=np.int64)
    k = 0
    while alive.size and k < cap:
        k += 1
        pos += alpha
        hit = target.contains_array(pos)
        if hit.any():
            taus[alive[hit]] = k
            keep = ~hit
            pos = pos[keep]
            alive = alive[keep]
    return taus, False


def _doubling_batch(system: DoublingMap, target, starts: np.ndarray, cap: int,
                    rng: np.random.Generator):
    """Doubling orbits with seeded bit refeed once the mantissa runs out.

    Under Lebesgue measure the bits of a random point are independent fair
    coin flips, so replacing exhausted low bits by fresh seeded bits simulates
    the map faithfully for arbitrarily long orbits.  Runs that go past the
    reliable window of the original word are flagged ``extended_tail``.
    """
    one = np.uint64(1)
    pos = starts.copy()
    feed = rng.integers(0, SCALE, size=pos.size, dtype=np.uint64)
    feed_left = 64
    taus = np.zeros(starts.size, dtype=np.int64)
    alive = np.arange(starts.size, dtype=np.int64)
    k = 0
    max_k = 0
    while alive.size and k < cap:
        k += 1
        if feed_left == 0:
            feed = rng.integers(0, SCALE, size=pos.size, dtype=np.uint64)
            feed_left = 64
        pos <<= one
        pos |= feed & one
        feed >>= one
        feed_left -= 1
        hit = target.contains_array(pos)
        if hit.any():
            taus[alive[hit]] = k
            max_k = k
            keep = ~hit
            pos = pos[keep]
            alive = alive[keep]
            feed = feed[keep]
    if alive.size:
        max_k = k
    depth = target.depth if isinstance(target, DyadicCell) else 0
    return taus, max_k > depth + 40


def _batch_taus(system: System, target: TargetSet, starts: np.ndarray, cap: int,
                seed) -> tuple[np.ndarray, bool]:
    if isinstance(system, FiniteRotation):
        table = _next_hit_table(system, target)
        taus = table[starts]
        return np.where(taus <= cap, taus, 0), False
    if isinstance(system, CircleRotation):
        return _circle_batch(system, target, starts, cap)
    rng = np.random.default_rng([seed, 0xfeed])
    return _doubling_batch(system, target, starts, cap, rng)


def _start_membership(target: TargetSet, starts: np.ndarray) -> np.ndarray:
    if isinstance(target, ResidueSet):
        mask = np.zeros(target.modulus, dtype=bool)
        mask[list(target.residues)] = True
        return mask[starts]
    return target.contains_array(starts)


def collect_hitting_sample(system: System, target: TargetSet, m: int, seed,
                           cap_factor: float = 50.0) -> HittingSample:
    """Seeded hitting times for ``m`` starts with cap ``ceil(cap_factor/mu)``."""
    mu = target.measure
    if not mu > 0:
        raise ValueError("target must have positive measure")
    cap = math.ceil(cap_factor / mu)
    starts = sample_points(system, m, seed)
    taus, tail = _batch_taus(system, target, starts, cap, seed)
    return HittingSample(mu=mu, taus=taus, in_target=_start_membership(target, starts),
                         cap=cap, extended_tail=tail)


def _cdf_from_taus(taus: np.ndarray, total: int, mu) -> StepFn:
    """Empirical distribution of ``mu * tau``; weight ``1/total`` per start.

    Not-hit starts (``tau == 0``) contribute to the denominator only, leaving
    the terminal value below 1: truncated mass stays visible.
    """
    hit = taus[taus > 0]
    if hit.size == 0:
        return StepFn([], [])
    counts = np.bincount(hit)
    ks = np.nonzero(counts)[0]
    cum = np.cumsum(counts[ks])
    if isinstance(mu, Fraction):
        bps = [int(k) * mu for k in ks]
        vals = [Fraction(int(c), total) for c in cum]
    else:
        bps = (ks.astype(np.float64) * mu).tolist()
        vals = (cum / total).tolist()
    return StepFn(bps, vals)


def _interpolant_from_taus(taus: np.ndarray, total: int, mu) -> PLConcaveFn:
    """Piecewise-linear interpolant of the hitting CDF through nodes ``k*mu``."""
    hit = taus[taus > 0]
    if hit.size == 0:
        return PLConcaveFn([(0, 0)])
    counts = np.bincount(hit)
    cum = np.cumsum(counts)  # cum[k] = #{tau <= k}, cum[0] = 0
    if isinstance(mu, Fraction):
        knots = [(k * mu, Fraction(int(c), total)) for k, c in enumerate(cum)]
    else:
        ks = np.arange(cum.size, dtype=np.float64)
        knots = list(zip((ks * mu).tolist(), (cum / total).tolist()))
    return PLConcaveFn(knots)


@dataclass(frozen=True)
class EmpiricalLaws:
    """Empirical distributions from one seeded run.

    ``hitting`` and ``interpolant`` are built from all starts; ``returning``
    conditions on the starts that fell inside the target (so its sample size
    is roughly ``m * mu``).  ``kac`` is the mean normalized return time over
    those starts; it should sit near 1.
    """

    hitting: StepFn
    returning: StepFn
    interpolant: PLConcaveFn
    kac: Union[Fraction, float]
    nothit: float
    mu: Union[Fraction, float]
    cap: int
    size: int
    conditional_size: int
    extended_tail: bool = False
    estimator: str = "reuse"


def empirical_distributions(system: System, target: TargetSet, m: int, seed,
                            cap_factor: float = 50.0) -> EmpiricalLaws:
    """Empirical hitting law, return law, and interpolant from ``m`` starts.

    The return law reuses the unconditional sample's in-target starts (see
    :func:`direct_return_sample` for the sharper opt-in estimator).  Raises
    :class:`SamplingError` when no start lands in the target.
    """
    sample = collect_hitting_sample(system, target, m, seed, cap_factor)
    total = sample.size
    cond = sample.taus[sample.in_target]
    m_u = int(cond.size)
    if m_u == 0:
        raise SamplingError(
            "empty conditional sample: no start fell in the target; increase the "
            "sample size or use direct_return_sample")
    hitting = _cdf_from_taus(sample.taus, total, sample.mu)
    returning = _cdf_from_taus(cond, m_u, sample.mu)
    interpolant = _interpolant_from_taus(sample.taus, total, sample.mu)
    cond_hit = cond[cond > 0]
    kac_sum = int(cond_hit.sum())
    kac = (kac_sum * sample.mu / m_u) if isinstance(sample.mu, Fraction) \
        else kac_sum * sample.mu / m_u
    return EmpiricalLaws(
        hitting=hitting, returning=returning, interpolant=interpolant,
        kac=kac, nothit=sample.nothit_fraction, mu=sample.mu, cap=sample.cap,
        size=total, conditional_size=m_u, extended_tail=sample.extended_tail)


def _rejection_starts(system: System, target: TargetSet, m: int, seed) -> np.ndarray:
    rng = np.random.default_rng([seed, 0xacce])
    got = []
    have = 0
    drawn = 0
    while have < m:
        if drawn >= REJECTION_BUDGET:
            raise SamplingError(
                f"set too small for rejection sampling: {drawn} draws yielded "
                f"{have} of {m} requested starts")
        batch = min(_BATCH, REJECTION_BUDGET - drawn)
        cand = rng.integers(0, SCALE, size=batch, dtype=np.uint64)
        drawn += batch
        acc = cand[target.contains_array(cand)]
        if acc.size:
            got.append(acc)
            have += int(acc.size)
    return np.concatenate(got)[:m]


def direct_return_sample(system: System, target: TargetSet, m: int, seed,
                         cap: int) -> StepFn:
    """Return law from ``m`` starts sampled inside the target.

    Finite systems sweep the whole target once ``m`` covers it; circle-phase
    systems draw uniform candidates and keep those in the target (budget
    ``10**9`` draws, then :class:`SamplingError`).
    """
    mu = target.measure
    if not mu > 0:
        raise ValueError("target must have positive measure")
    if isinstance(system, FiniteRotation):
        members = np.array(sorted(target.residues), dtype=np.int64)
        if m < members.size:
            rng = np.random.default_rng([seed, 0xacce])
            members = members[rng.permutation(members.size)[:m]]
        starts = members
    else:
        starts = _rejection_starts(system, target, m, seed)
    taus, _ = _batch_taus(system, target, starts, cap, seed)
    return _cdf_from_taus(taus, int(starts.size), mu)


@dataclass(frozen=True)
class ReturnDecomposition:
    """Exact level-set masses of the return/hitting time of a finite system.

    ``vk[k]`` is the measure of target points returning in exactly ``k``
    steps; ``uk[k]`` the measure of all points hitting in exactly ``k``.
    Construction verifies, in rational arithmetic: the ``vk`` sum to
    ``mu``, each ``uk[k]`` equals the tail sum of the ``vk``, the ``uk``
    partition the space, and the expected return time is exactly 1.
    """

    mu: Fraction
    vk: tuple  # ((k, Fraction), ...) sorted, nonzero masses only
    uk: tuple  # ((k, Fraction), ...) for k = 1..max return time

    def __post_init__(self):
        vk = dict(self.vk)
        uk = dict(self.uk)
        if sum(vk.values(), Fraction(0)) != self.mu:
            raise AssertionError("return-level masses do not sum to mu")
        kmax = max(vk)
        if sorted(uk) != list(range(1, kmax + 1)):
            raise AssertionError("hitting-level masses must cover k = 1..kmax")
        tail = Fraction(0)
        for k in range(kmax, 0, -1):
            tail += vk.get(k, Fraction(0))
            if uk[k] != tail:
                raise AssertionError(f"uk[{k}] is not the tail sum of vk")
        if sum(uk.values(), Fraction(0)) != 1:
            raise AssertionError("hitting-level masses do not partition the space")
        if sum(k * w for k, w in vk.items()) != 1:
            raise AssertionError("expected return time is not 1")

    @cached_property
    def vk_map(self) -> dict:
        return dict(self.vk)

    @cached_property
    def uk_map(self) -> dict:
        return dict(self.uk)

    @property
    def kmax(self) -> int:
        return self.uk[-1][0]


def decompose_exact(system: FiniteRotation, target: ResidueSet) -> ReturnDecomposition:
    """Full enumeration of a finite rotation's return structure, exact rationals."""
    if not isinstance(system, FiniteRotation):
        raise TypeError("exact decomposition needs a finite system")
    if not isinstance(target, ResidueSet):
        raise TypeError("exact decomposition needs a residue subset target")
    n = system.size
    table = _next_hit_table(system, target)
    vk_counts: dict[int, int] = {}
    for x in target.residues:
        k = int(table[x])
        vk_counts[k] = vk_counts.get(k, 0) + 1
    kmax = max(vk_counts)
    vk = tuple((k, Fraction(c, n)) for k, c in sorted(vk_counts.items()))
    uk = []
    tail = Fraction(0)
    for k in range(kmax, 0, -1):
        tail += Fraction(vk_counts.get(k, 0), n)
        uk.append((k, tail))
    uk.reverse()
    return ReturnDecomposition(mu=target.measure, vk=vk, uk=tuple(uk))


def decomposition_laws(d: ReturnDecomposition):
    """Exact ``(hitting, returning, interpolant)`` laws of a decomposition."""
    mu = d.mu
    uk = d.uk_map
    cum_u = Fraction(0)
    h_bps, h_vals = [], []
    knots = [(Fraction(0), Fraction(0))]
    for k in range(1, d.kmax + 1):
        cum_u += uk[k]
        h_bps.append(k * mu)
        h_vals.append(cum_u)
        knots.append((k * mu, cum_u))
    hitting = StepFn(h_bps, h_vals)
    cum_v = Fraction(0)
    r_bps, r_vals = [], []
    for k, w in d.vk:
        cum_v += w
        r_bps.append(k * mu)
        r_vals.append(cum_v / mu)
    returning = StepFn(r_bps, r_vals)
    return hitting, returning, PLConcaveFn(knots)


@dataclass(frozen=True)
class IdentityReport:
    """Exact checks of the interpolant identities of a decomposition.

    On every interval ``[k*mu, (k+1)*mu)`` the interpolant's right derivative
    must equal both ``uk[k+1]/mu`` and ``1 - returning law``; the hitting
    law's jump at ``k*mu`` must be ``uk[k]``; and the sup distance between
    hitting law and interpolant (attained as the largest jump) must be
    bounded by ``mu`` -- it in fact equals ``mu`` because ``uk[1]`` always
    sums the full return mass.  ``max_violation`` is 0 when all hold.
    """

    mu: Fraction
    kmax: int
    sup_gap: Fraction
    bound_holds: bool
    gap_attains_mu: bool
    max_violation: Fraction


def verify_decomposition_identities(d: ReturnDecomposition) -> IdentityReport:
    hitting, returning, interp = decomposition_laws(d)
    mu = d.mu
    uk = d.uk_map
    worst = Fraction(0)
    for k in range(0, d.kmax + 1):
        t = k * mu
        if k < d.kmax:
            slope = interp.right_derivative(t)
            worst = max(worst, abs(slope - uk[k + 1] / mu))
            worst = max(worst, abs(slope - (1 - returning(t))))
        else:
            worst = max(worst, abs(interp.right_derivative(t) - (1 - returning(t))))
        if k >= 1:
            jump = hitting(t) - hitting(t - mu)
            worst = max(worst, abs(jump - uk[k]))
    sup_gap = max(w for _, w in d.uk)
    return IdentityReport(
        mu=mu, kmax=d.kmax, sup_gap=sup_gap,
        bound_holds=sup_gap <= mu,
        gap_attains_mu=sup_gap == mu,
        max_violation=worst)
