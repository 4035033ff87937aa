"""Monte Carlo heat-bath chain and autocorrelation estimate of the gap.

Random numbers come from Philox4x64-10 keyed by the seed. Single-site
update ``k`` (counting from 0 over the life of a chain) consumes counter
block ``k``: word 0 picks the site, word 1 the acceptance uniform, so any
step can be regenerated from ``(seed, k)`` alone and the bulk kernel and
:func:`step` produce identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np
from numpy.random import Philox

from . import spectral
from .cycle_model import CouplingVector, SpinConfiguration, flip_probability
from .errors import DimensionMismatch, InsufficientData, InvalidInput, ZeroMatrix

__all__ = [
    "GENERATOR",
    "ChainState",
    "AutocorrelationEstimate",
    "new_chain",
    "step",
    "run",
    "estimate_relaxation",
    "pool_estimates",
]

GENERATOR = "philox4x64"
MIN_BLOCKS = 100
MAX_BLOCKS = 256
RHO_CUTOFF = 0.1
_CHUNK = 1 << 18
_TWO53 = 2.0 ** -53


@dataclass(frozen=True)
class ChainState:
    config: SpinConfiguration
    steps: int
    seed: int


@dataclass(frozen=True)
class AutocorrelationEstimate:
    """Estimate of the second eigenvalue from one chain.

    ``mu2_hat`` is per single-site step and ``tau2_hat = 1/(n (1 - mu2_hat))``
    is in sweeps. ``stderr`` refers to ``tau2_hat``.
    """

    mu2_hat: float
    tau2_hat: float
    stderr: float
    mu2_stderr: float
    lags_used: int
    samples: int
    seed: int
    n_batches: int
    observable: str = "eigenfunction"
    generator: str = GENERATOR

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise InvalidInput("seed must be a 64-bit unsigned integer")
    return seed


def new_chain(n: int, seed: int, config: SpinConfiguration | None = None) -> ChainState:
    """Chain at step 0, by default from the all-plus configuration."""
    config = SpinConfiguration.all_plus(n) if config is None else config
    return ChainState(config=config, steps=0, seed=_check_seed(seed))


def _block(seed: int, k: int) -> np.ndarray:
    return Philox(key=seed, counter=k).random_raw(4)


def step(state: ChainState, couplings: CouplingVector) -> ChainState:
    """One heat-bath update, reproducible from ``(seed, steps)``."""
    n = state.config.n
    if couplings.n != n:
        raise DimensionMismatch(f"chain has {n} spins but couplings have {couplings.n} edges")
    w = _block(state.seed, state.steps)
    site = int(((int(w[0]) >> 11) * _TWO53) * n)
    u = (int(w[1]) >> 11) * _TWO53
    config = state.config
    if u < flip_probability(config, site, couplings):
        config = config.flipped(site)
    return replace(state, config=config, steps=state.steps + 1)


@numba.njit(cache=True)
def _kernel(j, spins, raw, first, weights, every, series, nrec, visits, flips):
    # raw holds 4 words per step; records weights . spins after every `every` steps
    n = spins.shape[0]
    nsteps = raw.shape[0] // 4
    index = 0
    for i in range(n):
        if spins[i] > 0:
            index |= 1 << i
    accepted = 0
    for k in range(nsteps):
        w0 = raw[4 * k]
        w1 = raw[4 * k + 1]
        site = int(((w0 >> np.uint64(11)) * 1.1102230246251565e-16) * n)
        u = (w1 >> np.uint64(11)) * 1.1102230246251565e-16
        left = site - 1 if site > 0 else n - 1
        right = site + 1 if site < n - 1 else 0
        field = j[left] * spins[left] + j[site] * spins[right]
        p = 0.5 * (1.0 - spins[site] * math.tanh(field))
        if u < p:
            if flips.shape[0] > 0:
                flips[index, site] += 1
            spins[site] = -spins[site]
            index ^= 1 << site
            accepted += 1
        if (first + k + 1) % every == 0:
            if series.shape[0] > 0:
                acc = 0.0
                for i in range(n):
                    acc += weights[i] * spins[i]
                series[nrec] = acc
                nrec += 1
            if visits.shape[0] > 0:
                visits[index] += 1
    return nrec, accepted


@dataclass
class RunOutput:
    state: ChainState
    series: np.ndarray
    visits: np.ndarray | None
    flips: np.ndarray | None
    accepted: int


def run(state: ChainState, couplings: CouplingVector, steps: int, *,
        weights=None, record_every: int | None = None,
        count_visits: bool = False, count_flips: bool = False) -> RunOutput:
    """Advance the chain ``steps`` single-site updates.

    Parameters
    ----------
    weights
        If given, ``sum_i weights_i s_i`` is recorded every ``record_every``
        steps (default ``n``, i.e. once per sweep).
    count_visits
        Histogram of configuration indices at the recording times.
    count_flips
        ``flips[index, site]`` counts accepted flips out of each configuration.
    """
    n = state.config.n
    if couplings.n != n:
        raise DimensionMismatch(f"chain has {n} spins but couplings have {couplings.n} edges")
    if steps < 0:
        raise InvalidInput("steps must be non-negative")
    every = n if record_every is None else int(record_every)
    if every < 1:
        raise InvalidInput("record_every must be positive")
    w = np.zeros(n) if weights is None else np.asarray(weights, dtype=float)
    first = state.steps
    n_rec = (first + steps) // every - first // every
    series = np.empty(n_rec if weights is not None else 0)
    visits = np.zeros(1 << n if count_visits else 0, dtype=np.int64)
    flips = np.zeros((1 << n, n) if count_flips else (0, n), dtype=np.int64)
    spins = np.array(state.config.spins, dtype=np.float64)
    j = np.ascontiguousarray(couplings.j)
    gen = Philox(key=state.seed, counter=first)
    nrec, accepted, done = 0, 0, 0
    while done < steps:
        size = min(_CHUNK, steps - done)
        raw = gen.random_raw(4 * size)
        nrec, acc = _kernel(j, spins, raw, first + done, w, every, series, nrec, visits, flips)
        accepted += acc
        done += size
    config = SpinConfiguration.from_spins(spins.astype(int))
    new_state = replace(state, config=config, steps=first + steps)
    return RunOutput(new_state, series, visits if count_visits else None,
                     flips if count_flips else None, accepted)


def _lag_products(f: np.ndarray, max_lag: int, block: int, n_blocks: int) -> np.ndarray:
    """``out[b, k] = sum_t f_t f_{t+k}`` over ``t`` in block ``b``."""
    used = block * n_blocks
    out = np.empty((n_blocks, max_lag + 1))
    for k in range(max_lag + 1):
        prod = f[:used - k] * f[k:used]
        prod = np.concatenate([prod, np.zeros(k)])
        out[:, k] = prod.reshape(n_blocks, block).sum(axis=1)
    return out


def _fit(sums: np.ndarray, counts: np.ndarray, n: int):
    rho = (sums[1:] / counts[1:]) / (sums[0] / counts[0])
    if not np.all(rho > 0):
        return math.nan, math.nan
    k = np.arange(1, len(rho) + 1, dtype=float)
    slope = float(np.dot(k, np.log(rho)) / np.dot(k, k))
    # slope is log of the per-sweep decay mu2^n
    mu2 = math.exp(slope / n)
    tau2 = 1.0 / (n * -math.expm1(slope / n))
    return mu2, tau2


def estimate_relaxation(couplings: CouplingVector, sweeps: int, burn_in_sweeps: int | None = None,
                        seed: int = 0, observable: str = "eigenfunction",
                        exact=None) -> AutocorrelationEstimate:
    """Estimate ``mu2`` and ``tau2`` from the autocorrelation of a linear observable.

    The default observable ``f = sum_i w_i s_i`` uses the left Perron vector of
    the reduced matrix, for which ``E[f(s_{t+k}) | s_t] = mu2^k f(s_t)`` exactly,
    so the autocorrelation is geometric. ``f`` is recorded once per sweep and,
    since ``E f = 0`` by spin-flip symmetry, the mean is not estimated.
    ``log rho(k)`` is fitted by a line through the origin over the leading
    lags with ``rho > 0.1``. The standard error is a delete-one-block
    jackknife over at most 256 contiguous batches, each at least
    ``max(50, 20 tau2)`` sweeps long.

    Guidance: ``sweeps >= 1e4 * tau2``. Burn-in defaults to ``50 tau2``
    sweeps with the exact ``tau2``.

    Raises
    ------
    InsufficientData
        If fewer than 100 batches fit in the run, or no lag passes the cutoff.
    """
    seed = _check_seed(seed)
    if observable not in ("eigenfunction", "magnetization"):
        raise InvalidInput(f"unknown observable {observable!r}")
    if sweeps <= 0:
        raise InvalidInput("sweeps must be positive")
    n = couplings.n
    if exact is None:
        try:
            exact = spectral.solve(couplings)
        except ZeroMatrix:
            exact = None
    # free spins relax at rate 1/n per step, one sweep
    tau_exact = float(exact.tau2) if exact is not None else 1.0
    if exact is None or observable == "magnetization":
        weights = np.full(n, 1.0 / math.sqrt(n))
    else:
        weights = np.array([float(v) for v in exact.left])
    if burn_in_sweeps is None:
        burn_in_sweeps = int(math.ceil(50 * tau_exact))

    state = new_chain(n, seed)
    state = run(state, couplings, burn_in_sweeps * n).state
    out = run(state, couplings, sweeps * n, weights=weights)
    f = out.series

    c0 = float(np.dot(f, f)) / len(f)
    if c0 == 0:
        raise InsufficientData("observable is identically zero along the run")
    max_lag = 0
    while max_lag + 1 < len(f) // 2:
        k = max_lag + 1
        rho = float(np.dot(f[:-k], f[k:])) / (len(f) - k) / c0
        if not rho > RHO_CUTOFF:
            break
        max_lag = k
    if max_lag == 0:
        raise InsufficientData("autocorrelation at one sweep is already below the cutoff")

    totals = np.array([float(np.dot(f[:len(f) - k], f[k:])) for k in range(max_lag + 1)])
    counts = np.array([len(f) - k for k in range(max_lag + 1)], dtype=float)
    mu2, tau2 = _fit(totals, counts, n)

    block = max(50, int(math.ceil(20 * max(tau2, tau_exact))), max_lag + 1)
    n_blocks = min(len(f) // block, MAX_BLOCKS)
    if n_blocks < MIN_BLOCKS:
        raise InsufficientData(
            f"only {len(f) // block} batches of {block} sweeps; need {MIN_BLOCKS}"
        )
    block = len(f) // n_blocks
    per_block = _lag_products(f, max_lag, block, n_blocks)
    used = block * n_blocks
    pair_counts = np.array([[block] * (max_lag + 1)] * n_blocks, dtype=float)
    for k in range(1, max_lag + 1):
        pair_counts[-1, k] -= k
    jack_mu, jack_tau = [], []
    tot_b, cnt_b = per_block.sum(axis=0), pair_counts.sum(axis=0)
    for b in range(n_blocks):
        m, t = _fit(tot_b - per_block[b], cnt_b - pair_counts[b], n)
        jack_mu.append(m)
        jack_tau.append(t)
    jack_mu, jack_tau = np.array(jack_mu), np.array(jack_tau)
    if not (np.all(np.isfinite(jack_mu)) and np.all(np.isfinite(jack_tau))):
        raise InsufficientData("a jackknife replicate lost positivity of the autocorrelation")
    scale = (n_blocks - 1) / n_blocks
    stderr = math.sqrt(scale * float(np.sum((jack_tau - jack_tau.mean()) ** 2)))
    mu2_stderr = math.sqrt(scale * float(np.sum((jack_mu - jack_mu.mean()) ** 2)))
    return AutocorrelationEstimate(
        mu2_hat=mu2, tau2_hat=tau2, stderr=stderr, mu2_stderr=mu2_stderr,
        lags_used=max_lag, samples=used, seed=seed, n_batches=n_blocks,
        observable=observable,
    )


def pool_estimates(estimates) -> tuple[float, float]:
    """Inverse-variance weighted ``(tau2, stderr)`` over independent chains."""
    w = np.array([1.0 / e.stderr ** 2 for e in estimates])
    t = np.array([e.tau2_hat for e in estimates])
    return float(np.dot(w, t) / w.sum()), float(1.0 / math.sqrt(w.sum()))
