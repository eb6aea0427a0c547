"""Coincidence-rate engine.

The coincidence amplitude of one source realization is the product, over
detectors, of the scalar analyzer-output amplitudes. Realizations emitted in
the same pulse are indistinguishable, so the ensemble average is taken at
amplitude level and squared last. Pairing alternatives that are flagged
coherent join that amplitude sum; incoherent (distinguishable) alternatives
add at rate level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateError
from .fields import IDENTITY, dot, norm2, project
from .sources import EmissionRealization, SourceEnsemble, SpreadSpec

# rates below this are treated as exact zeros when normalizing
ZERO_RATE = 1e-24

NORMALIZATIONS = ("raw", "max", "denominator")


@dataclass(frozen=True)
class Port:
    """Input to one detector: sum of ``matrix @ channel`` terms.

    ``gate`` pins the analyzer axis (a time-bin selector); when None the
    detector's axis comes from the analyzer settings.
    """

    terms: tuple[tuple[int, np.ndarray], ...]
    gate: float | None = None

    def field_on(self, channels: Sequence[np.ndarray]) -> np.ndarray:
        (ch, m), *rest = self.terms
        out = m @ channels[ch]
        for ch, m in rest:
            out = out + m @ channels[ch]
        return out

    @cached_property
    def key(self) -> tuple:
        # identity for intensity bookkeeping across alternatives
        return (self.gate, tuple((ch, m.tobytes()) for ch, m in self.terms))


def direct(channel: int, m: np.ndarray = IDENTITY, gate: float | None = None) -> Port:
    return Port(((channel, m),), gate)


@dataclass(frozen=True)
class Alternative:
    ports: tuple[Port, ...]
    coherent: bool = True


@dataclass(frozen=True)
class OpticalNetwork:
    alternatives: tuple[Alternative, ...]

    def __post_init__(self):
        if not self.alternatives:
            raise ConfigurationError("network needs at least one pairing alternative")
        counts = {len(a.ports) for a in self.alternatives}
        if len(counts) != 1:
            raise ConfigurationError(f"alternatives disagree on detector count: {counts}")

    @property
    def n_detectors(self) -> int:
        return len(self.alternatives[0].ports)

    def max_channel(self) -> int:
        return max(ch for a in self.alternatives for p in a.ports for ch, _ in p.terms)

    def permuted(self, order: Sequence[int]) -> OpticalNetwork:
        """Same network with detectors evaluated in ``order``."""
        return OpticalNetwork(
            tuple(replace(a, ports=tuple(a.ports[i] for i in order)) for a in self.alternatives)
        )


@dataclass(frozen=True)
class CoincidenceResult:
    raw: float
    normalization: str = "raw"
    value: float | None = None
    # product of mean detector intensities over the ensemble
    denominator: float = float("nan")

    def __post_init__(self):
        if self.value is None:
            object.__setattr__(self, "value", self.raw)


def _check(ens_channels: int, net: OpticalNetwork, settings: Sequence[float]) -> None:
    if len(settings) != net.n_detectors:
        raise ConfigurationError(
            f"{len(settings)} analyzer settings for {net.n_detectors} detectors"
        )
    if net.max_channel() >= ens_channels:
        raise ConfigurationError(
            f"network references channel {net.max_channel()}, source has {ens_channels}"
        )


def _axis(port: Port, theta: float) -> float:
    return theta if port.gate is None else port.gate


def _projections(
    r: EmissionRealization, net: OpticalNetwork, settings: Sequence[float]
) -> dict[tuple, complex]:
    """Analyzer-output amplitude of every distinct (detector, port) for one realization."""
    out: dict[tuple, complex] = {}
    for a in net.alternatives:
        for i, (port, theta) in enumerate(zip(a.ports, settings)):
            k = (i, port.key)
            if k not in out:
                out[k] = project(port.field_on(r.channels), _axis(port, theta))
    return out


def _amplitude(alt: Alternative, proj: dict[tuple, complex]) -> complex:
    amp = 1.0 + 0.0j
    for i, port in enumerate(alt.ports):
        amp *= proj[(i, port.key)]
    return amp


def _terms(net: OpticalNetwork, proj: dict[tuple, complex]) -> list[complex]:
    coherent = [a for a in net.alternatives if a.coherent]
    terms = []
    if coherent:
        terms.append(sum(_amplitude(a, proj) for a in coherent))
    terms.extend(_amplitude(a, proj) for a in net.alternatives if not a.coherent)
    return terms


def alternative_amplitude(
    r: EmissionRealization, alt: Alternative, settings: Sequence[float]
) -> complex:
    return _amplitude(alt, _projections(r, OpticalNetwork((alt,)), settings))


def coincidence_amplitudes(
    r: EmissionRealization, net: OpticalNetwork, settings: Sequence[float]
) -> list[complex]:
    """Amplitude of every rate-level term for one realization.

    The first entry is the coherent group (if any coherent alternatives
    exist), followed by one entry per incoherent alternative.
    """
    _check(len(r.channels), net, settings)
    return _terms(net, _projections(r, net, settings))


def coincidence_amplitude(
    r: EmissionRealization, net: OpticalNetwork, settings: Sequence[float]
) -> complex:
    """Coincidence amplitude for networks with a single rate-level term."""
    terms = coincidence_amplitudes(r, net, settings)
    if len(terms) != 1:
        raise ConfigurationError(
            "network has incoherent alternatives; use coincidence_amplitudes"
        )
    return terms[0]


def _modsq(z: complex) -> float:
    return z.real * z.real + z.imag * z.imag


def detector_intensities(
    ens: SourceEnsemble, net: OpticalNetwork, settings: Sequence[float]
) -> list[float]:
    """Mean intensity at each detector, summing distinct port inputs across alternatives."""
    _check(ens.n_channels, net, settings)
    out = [0.0] * net.n_detectors
    for r in ens.realizations:
        for (i, _), amp in _projections(r, net, settings).items():
            out[i] += r.weight * _modsq(amp)
    return out


def ensemble_rate(
    ens: SourceEnsemble, net: OpticalNetwork, settings: Sequence[float]
) -> CoincidenceResult:
    """Raw coincidence rate of an ensemble seen through a network."""
    _check(ens.n_channels, net, settings)
    totals = None
    intensities = [0.0] * net.n_detectors
    for r in ens.realizations:
        proj = _projections(r, net, settings)
        terms = _terms(net, proj)
        if totals is None:
            totals = [0j] * len(terms)
        totals = [t + r.weight * a for t, a in zip(totals, terms)]
        for (i, _), amp in proj.items():
            intensities[i] += r.weight * _modsq(amp)
    raw = sum(_modsq(t) for t in totals)
    return CoincidenceResult(raw=raw, denominator=math.prod(intensities))


def franson_rate(ens: SourceEnsemble) -> CoincidenceResult:
    """Direct bilinear evaluation of the two-arm correlation, denominator included.

    rate = (E_r* . E_l*)(E_l . E_r) / ((E_r* . E_r)(E_l* . E_l))
    """
    if len(ens.realizations) != 1 or ens.n_channels != 2:
        raise ConfigurationError("franson_rate needs a single two-channel realization")
    e_l, e_r = ens.realizations[0].channels
    den = norm2(e_r) * norm2(e_l)
    if den == 0.0:
        raise DegenerateError("zero-norm interferometer arm")
    num = dot(e_r.conj(), e_l.conj()) * dot(e_l, e_r)
    return CoincidenceResult(raw=num.real / den, denominator=1.0)


def simpson(values: np.ndarray, h: float) -> float:
    """Composite Simpson rule on an odd number of equally spaced samples."""
    n = len(values)
    if n < 3 or n % 2 == 0:
        raise ConfigurationError(f"Simpson needs an odd number >= 3 of nodes, got {n}")
    return h / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def spread_average(
    evaluate: Callable[[float, float, float], CoincidenceResult],
    phi: float,
    psi: float,
    spec: SpreadSpec,
) -> CoincidenceResult:
    """Average ``evaluate(phi, psi, s)`` over s uniform in [-s_max, s_max]."""
    grid = spec.grid()
    results = [evaluate(phi, psi, float(s)) for s in grid]
    h = 2.0 * spec.s_max / (spec.nodes - 1)
    width = 2.0 * spec.s_max
    raw = simpson(np.array([r.raw for r in results]), h) / width
    den = simpson(np.array([r.denominator for r in results]), h) / width
    return CoincidenceResult(raw=raw, denominator=den)


def e2_direct_oracle(
    ens: SourceEnsemble, net: OpticalNetwork, settings: Sequence[float]
) -> float:
    """Brute-force expansion of the conjugated-times-unconjugated product.

    Builds every detector amplitude by explicit component arithmetic (no
    matrix helpers from this package) and sums the full double series
    sum_{x,y} conj(A_x) A_y over (realization, alternative) index pairs
    within each rate-level group. Meant for small instances only.
    """

    def amp(channels, ports, settings):
        total = 1.0 + 0.0j
        for port, theta in zip(ports, settings):
            ax = theta if port.gate is None else port.gate
            x = y = 0j
            for ch, m in port.terms:
                v = channels[ch]
                x += complex(m[0, 0]) * complex(v[0]) + complex(m[0, 1]) * complex(v[1])
                y += complex(m[1, 0]) * complex(v[0]) + complex(m[1, 1]) * complex(v[1])
            total *= x * math.cos(ax) + y * math.sin(ax)
        return total

    groups = [[a for a in net.alternatives if a.coherent]]
    groups += [[a] for a in net.alternatives if not a.coherent]
    rate = 0.0
    for group in groups:
        terms = [
            (r.weight, amp(r.channels, a.ports, settings))
            for r in ens.realizations
            for a in group
        ]
        for wx, ax in terms:
            for wy, ay in terms:
                rate += (wx * wy * ax.conjugate() * ay).real
    return rate


def normalize(results: Sequence[CoincidenceResult], mode: str) -> list[CoincidenceResult]:
    """Attach normalized values: ``raw``, ``max`` (of the sweep) or ``denominator``."""
    if mode == "raw":
        return [replace(r, normalization="raw", value=r.raw) for r in results]
    if mode in ("max", "max-of-sweep"):
        peak = max((r.raw for r in results), default=0.0)
        if not peak > ZERO_RATE:
            raise DegenerateError("all-zero sweep cannot be max-normalized")
        return [replace(r, normalization="max", value=r.raw / peak) for r in results]
    if mode == "denominator":
        out = []
        for r in results:
            if not r.denominator > ZERO_RATE:
                raise DegenerateError(f"detector intensity product is {r.denominator}")
            out.append(replace(r, normalization="denominator", value=r.raw / r.denominator))
        return out
    raise ConfigurationError(f"unknown normalization {mode!r}; expected one of {NORMALIZATIONS}")
