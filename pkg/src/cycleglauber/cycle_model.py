"""Ferromagnetic Ising model on the n-cycle.

Vertices are ``0, ..., n-1`` and edge ``i`` joins ``i`` and ``i+1 (mod n)``
with coupling ``J[i] >= 0``. Everything that touches Gibbs weights is kept in
the log domain; the partition function is never formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidCoupling,
    InvalidInput,
    InvalidSize,
)

__all__ = [
    "CouplingVector",
    "SpinConfiguration",
    "new_couplings",
    "log_gibbs_weight",
    "flip_probability",
    "all_spins",
    "log_gibbs_weights",
    "local_fields",
    "scaled_hyperbolics",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CouplingVector:
    """Per-edge couplings with cached ``sinh(2J)`` and ``cosh(2J)``.

    ``s`` and ``c`` overflow to ``inf`` once ``J`` exceeds roughly 355; code
    that must survive that regime goes through :func:`scaled_hyperbolics`.
    """

    j: np.ndarray
    s: np.ndarray
    c: np.ndarray

    @property
    def n(self) -> int:
        return len(self.j)

    @property
    def max_j(self) -> float:
        return float(self.j.max())

    @property
    def min_j(self) -> float:
        return float(self.j.min())

    def all_positive(self) -> bool:
        return bool(np.all(self.j > 0))

    def scaled(self, beta: float) -> "CouplingVector":
        return new_couplings(beta * self.j)

    def shifted(self, t: float) -> "CouplingVector":
        return new_couplings(self.j + t)

    def perturbed(self, site: int, delta: float) -> "CouplingVector":
        j = self.j.copy()
        j[site] += delta
        return new_couplings(j)

    def rolled(self, k: int = 1) -> "CouplingVector":
        return new_couplings(np.roll(self.j, -k))

    def reflected(self) -> "CouplingVector":
        # vertex i -> -i maps edge i onto edge -(i+1)
        return new_couplings(self.j[::-1])

    def tolist(self) -> list[float]:
        return [float(v) for v in self.j]

    def __repr__(self):
        return f"CouplingVector({self.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, CouplingVector) and np.array_equal(self.j, other.j)

    def __hash__(self):
        return hash(self.j.tobytes())


def new_couplings(values: Sequence[float]) -> CouplingVector:
    """Validate ``values`` and build a :class:`CouplingVector`.

    Zero couplings are accepted (the open chain is the case ``J[n-1] = 0``);
    operations that divide by ``sinh(2J)`` reject them on their own.
    """
    try:
        j = np.array(values, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise InvalidCoupling(f"couplings must be real numbers: {values!r}") from exc
    if j.size < 3:
        raise InvalidSize(f"a cycle needs at least 3 edges, got {j.size}")
    if not np.all(np.isfinite(j)):
        raise InvalidCoupling("couplings must be finite")
    if np.any(j < 0):
        raise InvalidCoupling("couplings must be non-negative (ferromagnetic)")
    with np.errstate(over="ignore"):
        s = np.sinh(2 * j)
        c = np.cosh(2 * j)
    return CouplingVector(_frozen(j), _frozen(s), _frozen(c))


def scaled_hyperbolics(j, shift):
    """Return ``(sinh(2j), cosh(2j), exp(-2j))`` each multiplied by ``exp(-2*shift)``.

    With ``shift >= j`` nothing overflows; ``cosh - sinh = exp(-2j)`` is
    returned separately because forming it by subtraction cancels.
    """
    j = np.asarray(j, dtype=float)
    up = np.exp(2 * j - 2 * shift)
    down = np.exp(-2 * j - 2 * shift)
    s = 0.5 * up * -np.expm1(-4 * j)
    c = 0.5 * (up + down)
    return s, c, down


@dataclass(frozen=True)
class SpinConfiguration:
    """Spins in ``{-1, +1}``; bit ``i`` of ``index`` is set iff spin ``i`` is +1."""

    n: int
    spins: tuple
    index: int

    @classmethod
    def from_spins(cls, spins) -> "SpinConfiguration":
        spins = tuple(int(v) for v in spins)
        if any(v not in (-1, 1) for v in spins):
            raise InvalidInput("spins must be -1 or +1")
        index = sum(1 << i for i, v in enumerate(spins) if v == 1)
        return cls(len(spins), spins, index)

    @classmethod
    def from_index(cls, n: int, index: int) -> "SpinConfiguration":
        if not 0 <= index < (1 << n):
            raise IndexOutOfRange(f"index {index} outside [0, 2**{n})")
        spins = tuple(1 if (index >> i) & 1 else -1 for i in range(n))
        return cls(n, spins, index)

    @classmethod
    def all_plus(cls, n: int) -> "SpinConfiguration":
        return cls.from_index(n, (1 << n) - 1)

    def flipped(self, site: int) -> "SpinConfiguration":
        if not 0 <= site < self.n:
            raise IndexOutOfRange(f"site {site} outside [0, {self.n})")
        spins = list(self.spins)
        spins[site] = -spins[site]
        return SpinConfiguration(self.n, tuple(spins), self.index ^ (1 << site))


def _check_sizes(config: SpinConfiguration, couplings: CouplingVector):
    if config.n != couplings.n:
        raise DimensionMismatch(
            f"configuration has {config.n} spins but couplings have {couplings.n} edges"
        )


def log_gibbs_weight(config: SpinConfiguration, couplings: CouplingVector) -> float:
    """``sum_i J_i s_i s_{i+1}``, the log of the unnormalised Gibbs weight."""
    _check_sizes(config, couplings)
    s = config.spins
    n = config.n
    return math.fsum(couplings.j[i] * s[i] * s[(i + 1) % n] for i in range(n))


def flip_probability(config: SpinConfiguration, site: int, couplings: CouplingVector) -> float:
    """Heat-bath probability of flipping ``site``.

    Uses ``(1 - s_x tanh(J_{x-1} s_{x-1} + J_x s_{x+1})) / 2``, which is the
    ratio ``pi(flipped) / (pi + pi(flipped))`` without exponentiating.
    """
    _check_sizes(config, couplings)
    n = config.n
    if not 0 <= site < n:
        raise IndexOutOfRange(f"site {site} outside [0, {n})")
    s = config.spins
    field = couplings.j[site - 1] * s[site - 1] + couplings.j[site] * s[(site + 1) % n]
    return 0.5 * (1.0 - s[site] * math.tanh(field))


# Vectorised forms over all 2**n configurations, used by the oracle.

def all_spins(n: int) -> np.ndarray:
    """``(2**n, n)`` int8 array; row ``k`` is the configuration with index ``k``."""
    k = np.arange(1 << n)[:, None]
    bits = (k >> np.arange(n)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def log_gibbs_weights(couplings: CouplingVector, spins=None) -> np.ndarray:
    if spins is None:
        spins = all_spins(couplings.n)
    spins = np.asarray(spins, dtype=float)
    return (spins * np.roll(spins, -1, axis=1)) @ couplings.j


def local_fields(couplings: CouplingVector, spins) -> np.ndarray:
    """``h[k, x] = J_{x-1} s_{x-1} + J_x s_{x+1}`` for each configuration row."""
    spins = np.asarray(spins, dtype=float)
    j = couplings.j
    return np.roll(j, 1) * np.roll(spins, 1, axis=1) + j * np.roll(spins, -1, axis=1)
