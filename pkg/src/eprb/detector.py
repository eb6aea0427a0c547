"""Stochastic photodetection.

Detectors turn continuous intensity into discrete events at Poisson times.
This module generates such event streams, counts coincidences between them
through a finite window, and estimates the analytic coincidence rate by
sampling source realizations.

Randomness comes from Philox, a counter-based generator. Work is split into
fixed-size blocks; block ``b`` uses the generator keyed by the seed and
jumped ``b`` times. The result therefore does not depend on how many
workers evaluate the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .correlator import coincidence_amplitudes
from .errors import DomainError
from .experiments import ExperimentPreset

BLOCK = 1 << 16
SEED_MAX = (1 << 64) - 1


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    if not 0 <= seed <= SEED_MAX:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    bitgen = np.random.Philox(key=seed)
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class EventStream:
    detector: int
    times: np.ndarray
    duration: float

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class CoincidenceWindow:
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError(f"coincidence window must be positive, got {self.width}")


def poisson_stream(intensity: float, duration: float, seed: int, detector: int = 0) -> EventStream:
    """Homogeneous Poisson event times with rate ``intensity`` on [0, duration]."""
    if intensity < 0 or not math.isfinite(intensity):
        raise DomainError(f"intensity must be finite and >= 0, got {intensity}")
    if not duration > 0:
        raise DomainError(f"duration must be positive, got {duration}")
    rng = generator(seed, detector)
    if intensity == 0:
        times = np.empty(0)
    else:
        mean = intensity * duration
        chunk = int(mean + 6 * math.sqrt(mean) + 16)
        parts, t = [], 0.0
        while t <= duration:
            gaps = rng.exponential(1.0 / intensity, chunk)
            arrivals = t + np.cumsum(gaps)
            parts.append(arrivals)
            t = arrivals[-1]
        times = np.concatenate(parts)
        times = times[times < duration]
    times.flags.writeable = False
    return EventStream(detector, times, float(duration))


def coincidence_count(streams: Sequence[EventStream], window: CoincidenceWindow) -> int:
    """Greedy k-fold coincidence count.

    Walks the streams in time order, taking the earliest unused event of each
    stream. If their spread is within the window they form a coincidence and
    are all consumed; otherwise the earliest event can never be matched and is
    discarded.
    """
    if len(streams) < 2:
        raise DomainError("need at least two streams")
    durations = {s.duration for s in streams}
    if len(durations) != 1:
        raise DomainError(f"streams have different durations: {sorted(durations)}")
    times = [s.times.tolist() for s in streams]
    heads = [0] * len(times)
    lengths = [len(t) for t in times]
    tau = window.width
    count = 0
    while all(h < n for h, n in zip(heads, lengths)):
        current = [t[h] for t, h in zip(times, heads)]
        lo = min(current)
        if max(current) - lo <= tau:
            count += 1
            heads = [h + 1 for h in heads]
        else:
            heads[current.index(lo)] += 1
    return count


def simulate_coincidences(
    coincidence_intensity: float,
    singles_intensities: Sequence[float],
    duration: float,
    window: CoincidenceWindow,
    seed: int,
) -> int:
    """Count windowed coincidences from jointly detected events plus uncorrelated singles.

    Joint events arrive at Poisson rate ``coincidence_intensity`` and register
    on every detector at the same time; each detector also fires on its own at
    its singles rate. Stream 0 carries the joint events, stream 1 + d the
    singles of detector d.
    """
    joint = poisson_stream(coincidence_intensity, duration, seed, 0).times
    streams = []
    for d, rate in enumerate(singles_intensities):
        own = poisson_stream(rate, duration, seed, 1 + d).times
        streams.append(EventStream(d, np.sort(np.concatenate([joint, own])), duration))
    return coincidence_count(streams, window)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int


def _amplitude_table(ens, network, settings) -> np.ndarray:
    return np.array(
        [coincidence_amplitudes(r, network, settings) for r in ens.realizations]
    ).T


def _pair_products(table: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    # Re(conj(a_i) a_j) summed over rate-level terms; unbiased for |E a|^2
    a, b = table[:, i], table[:, j]
    return (a.real * b.real + a.imag * b.imag).sum(axis=0)


def mc_estimate(
    p: ExperimentPreset,
    settings: Sequence[float] | None,
    trials: int,
    seed: int,
    *source_args: float,
    workers: int = 1,
) -> McEstimate:
    """Monte Carlo estimate of the raw coincidence rate.

    Each trial draws two independent realizations i, j from the source and
    scores Re(conj(a_i) a_j). Its expectation is |sum_r w_r a_r|^2, the
    amplitude-level ensemble average the analytic engine computes. Presets
    with a frequency spread also draw s uniformly per trial.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    settings = p.settings(settings)
    blocks = [(b, min(BLOCK, trials - b * BLOCK)) for b in range(-(-trials // BLOCK))]

    if p.spread is None:
        ens = p.source(*source_args)
        table = _amplitude_table(ens, p.network, settings)
        cum = np.cumsum(ens.weights)
        cum[-1] = 1.0

        def run(block):
            b, n = block
            rng = generator(seed, b)
            i = np.searchsorted(cum, rng.random(n), side="right")
            j = np.searchsorted(cum, rng.random(n), side="right")
            x = _pair_products(table, i, j)
            return x.sum(), (x * x).sum()

    else:
        phi, psi = source_args
        s_max = p.spread.s_max

        def run(block):
            b, n = block
            rng = generator(seed, b)
            s_draws = rng.uniform(-s_max, s_max, n)
            u1, u2 = rng.random(n), rng.random(n)
            total = sq = 0.0
            for s, v1, v2 in zip(s_draws, u1, u2):
                ens = p.source(phi, psi, float(s))
                table = _amplitude_table(ens, p.network, settings)
                cum = np.cumsum(ens.weights)
                cum[-1] = 1.0
                i = np.searchsorted(cum, [v1], side="right")
                j = np.searchsorted(cum, [v2], side="right")
                x = float(_pair_products(table, i, j)[0])
                total += x
                sq += x * x
            return total, sq

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    total = math.fsum(t for t, _ in parts)
    sq = math.fsum(s for _, s in parts)
    mean = total / trials
    if trials == 1:
        return McEstimate(mean, 0.0, 1)
    var = max(sq - trials * mean * mean, 0.0) / (trials - 1)
    return McEstimate(mean, math.sqrt(var / trials), trials)
