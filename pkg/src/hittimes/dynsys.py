"""Ergodic model systems with exact orbit arithmetic.

Three system families:

* ``FiniteRotation(size, shift)`` -- the cyclic shift ``x -> x + shift`` on
  ``Z/size`` with uniform counting measure; the exact small-scale oracle.
* ``CircleRotation(alpha_fp)`` -- rigid rotation on the circle represented in
  unsigned 64-bit fixed point (coordinates ``k / 2**64``), so one step is an
  exact wrapping add and ``n`` steps are a single widened multiply; there is
  no floating-point drift, only the one-time rounding of alpha to the lattice.
* ``DoublingMap()`` -- ``x -> 2x mod 1``, a one-bit left shift of the
  fixed-point word.  A 64-bit point carries 64 bits of orbit; longer orbits
  need the resampling engine in :mod:`hittimes.hitstat`.

Target sets: residue subsets, closed circle arcs (endpoints included, as the
renormalization arcs are closed), and half-open dyadic cells.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Union

import numpy as np

from .cfrac import CircleArc

__all__ = [
    "FiniteRotation",
    "CircleRotation",
    "DoublingMap",
    "ResidueSet",
    "ArcSet",
    "DyadicCell",
    "System",
    "TargetSet",
    "PrecisionExhausted",
    "SCALE",
    "real_to_fixed",
    "fixed_to_real",
    "step",
    "iterate_to",
    "contains",
    "sample_points",
    "parse_system",
    "parse_target",
]

SCALE = 2 ** 64
_MASK = SCALE - 1

# Rational alphas on a lattice this coarse make the rotation visibly periodic.
_COARSE_DENOMINATOR = 2 ** 20


class PrecisionExhausted(RuntimeError):
    """Raised when an orbit consumes all mantissa bits of a fixed-point word."""

    def __init__(self, message: str, steps_completed: int = 0):
        super().__init__(message)
        self.steps_completed = steps_completed


def real_to_fixed(x) -> int:
    """Round a coordinate in [0, 1) to the 2**-64 lattice (exact via Fraction)."""
    return round(Fraction(x) * SCALE) % SCALE


def fixed_to_real(u: int) -> float:
    return u / SCALE


@dataclass(frozen=True)
class FiniteRotation:
    """Shift by ``shift`` on ``Z/size``; requires gcd(shift, size) = 1 (ergodicity)."""

    size: int
    shift: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("size must be positive")
        if gcd(self.shift % self.size, self.size) != 1:
            raise ValueError(
                f"shift {self.shift} is not coprime to {self.size}; the rotation "
                "would not be ergodic")

    def step(self, x: int) -> int:
        return (x + self.shift) % self.size

    def iterate(self, x: int, n: int) -> int:
        return (x + n * self.shift) % self.size


@dataclass(frozen=True)
class CircleRotation:
    """Rotation by ``alpha_fp / 2**64`` in exact wrapping fixed point."""

    alpha_fp: int

    def __post_init__(self):
        if not 0 < self.alpha_fp < SCALE:
            raise ValueError("rotation amount must be a nonzero 64-bit fraction")

    @classmethod
    def from_real(cls, alpha) -> "CircleRotation":
        """Round alpha once onto the lattice; warns when alpha is a coarse rational."""
        frac = Fraction(alpha)
        if frac.denominator <= _COARSE_DENOMINATOR:
            warnings.warn(
                f"alpha = {frac} is rational with a small denominator; orbits on "
                "the fixed-point lattice will be visibly periodic",
                stacklevel=2)
        fp = real_to_fixed(frac % 1)
        if fp == 0:
            raise ValueError("alpha rounds to zero on the fixed-point lattice")
        return cls(fp)

    def step(self, x: int) -> int:
        return (x + self.alpha_fp) & _MASK

    def iterate(self, x: int, n: int) -> int:
        return (x + n * self.alpha_fp) & _MASK


@dataclass(frozen=True)
class DoublingMap:
    """``x -> 2x mod 1``: left shift of the 64-bit word, top bit discarded."""

    def step(self, x: int) -> int:
        return (x << 1) & _MASK

    def iterate(self, x: int, n: int) -> int:
        if n >= 64:
            raise PrecisionExhausted(
                "doubling consumed all 64 mantissa bits", steps_completed=63)
        return (x << n) & _MASK


System = Union[FiniteRotation, CircleRotation, DoublingMap]


@dataclass(frozen=True)
class ResidueSet:
    """A subset of Z/size."""

    residues: frozenset
    modulus: int

    def __post_init__(self):
        if not self.residues:
            raise ValueError("target subset must be nonempty")
        if any(not 0 <= r < self.modulus for r in self.residues):
            raise ValueError("residues out of range")

    @property
    def measure(self) -> Fraction:
        return Fraction(len(self.residues), self.modulus)

    def contains(self, x: int) -> bool:
        return x in self.residues


@dataclass(frozen=True)
class ArcSet:
    """A closed arc target; both endpoints belong to the set."""

    arc: CircleArc

    @property
    def measure(self):
        return self.arc.length

    @cached_property
    def bounds_fp(self):
        lo = real_to_fixed(self.arc.start)
        hi = real_to_fixed(self.arc.end)
        wraps = self.arc.wraps
        if not wraps and lo > hi:
            # arc thinner than one lattice step after rounding
            hi = lo
        return lo, hi, wraps

    def contains(self, x: int) -> bool:
        lo, hi, wraps = self.bounds_fp
        if wraps:
            return x >= lo or x <= hi
        return lo <= x <= hi

    def contains_array(self, xs: np.ndarray) -> np.ndarray:
        lo, hi, wraps = self.bounds_fp
        lo = np.uint64(lo)
        hi = np.uint64(hi)
        if wraps:
            return (xs >= lo) | (xs <= hi)
        return (xs >= lo) & (xs <= hi)


@dataclass(frozen=True)
class DyadicCell:
    """Half-open cell ``[index/2**depth, (index+1)/2**depth)``."""

    depth: int
    index: int

    def __post_init__(self):
        if not 1 <= self.depth <= 63:
            raise ValueError("depth must lie in 1..63")
        if not 0 <= self.index < 2 ** self.depth:
            raise ValueError("index out of range for depth")

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 2 ** self.depth)

    def contains(self, x: int) -> bool:
        return (x >> (64 - self.depth)) == self.index

    def contains_array(self, xs: np.ndarray) -> np.ndarray:
        shift = np.uint64(64 - self.depth)
        return (xs >> shift) == np.uint64(self.index)


TargetSet = Union[ResidueSet, ArcSet, DyadicCell]


def step(system: System, x: int) -> int:
    """One application of the map."""
    return system.step(x)


def iterate_to(system: System, x: int, n: int) -> int:
    """``n``-fold composition; exact single-multiply form for rotations."""
    if n < 0:
        raise ValueError("iteration count must be nonnegative")
    if n == 0:
        return x
    return system.iterate(x, n)


def contains(target: TargetSet, x: int) -> bool:
    """Set membership with closed-arc / half-open-dyadic semantics."""
    return target.contains(x)


def sample_points(system: System, m: int, seed: int):
    """Deterministic measure-distributed start points.

    Finite rotations: all ``size`` residues when ``m >= size`` (exact sweep),
    otherwise the first ``m`` of a seeded shuffle.  Circle-phase systems:
    ``m`` i.i.d. uniform 64-bit lattice points.  Equal seeds give equal output.
    """
    if m < 1:
        raise ValueError("sample size must be positive")
    rng = np.random.default_rng(seed)
    if isinstance(system, FiniteRotation):
        if m >= system.size:
            return np.arange(system.size, dtype=np.int64)
        return rng.permutation(system.size)[:m].astype(np.int64)
    return rng.integers(0, SCALE, size=m, dtype=np.uint64)


# ---------------------------------------------------------------------------
# Textual specs (CLI-facing): systems `finite:N,r` | `rot:<alpha>` | `doubling`;
# sets `subset:0,1,...` | `arc:a,b` | `dyadic:k,i` | `jn:z,n`.


def parse_system(spec: str) -> System:
    spec = spec.strip()
    if spec == "doubling":
        return DoublingMap()
    head, _, rest = spec.partition(":")
    if head == "finite":
        try:
            n_str, r_str = rest.split(",")
            return FiniteRotation(int(n_str), int(r_str))
        except ValueError as exc:
            raise ValueError(f"bad finite system spec {spec!r}") from exc
    if head == "rot":
        from .cfrac import parse_alpha
        alpha = parse_alpha(rest)
        value = alpha if isinstance(alpha, Fraction) else alpha.value(Fraction(1, 2 ** 128))
        return CircleRotation.from_real(value)
    raise ValueError(f"unknown system spec {spec!r}")


def parse_target(spec: str, system: System, alpha=None) -> TargetSet:
    """Parse a set spec; ``jn:z,n`` needs the rotation's alpha (exact form)."""
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    if head == "subset":
        if not isinstance(system, FiniteRotation):
            raise ValueError("subset targets require a finite system")
        residues = frozenset(int(v) for v in rest.split(","))
        return ResidueSet(residues, system.size)
    if head == "arc":
        a_str, b_str = rest.split(",")
        a = Fraction(a_str)
        b = Fraction(b_str)
        return ArcSet(CircleArc(start=a % 1, end=b % 1, wraps=a % 1 > b % 1))
    if head == "dyadic":
        k_str, i_str = rest.split(",")
        return DyadicCell(int(k_str), int(i_str))
    if head == "jn":
        from .cfrac import renormalization_interval
        if alpha is None:
            raise ValueError("jn targets need the rotation's alpha spec")
        z_str, n_str = rest.split(",")
        return ArcSet(renormalization_interval(alpha, Fraction(z_str), int(n_str)))
    raise ValueError(f"unknown target spec {spec!r}")
