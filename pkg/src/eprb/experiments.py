"""Preset experiments, closed-form references and sweep generators."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import sources
from .correlator import (
    Alternative,
    CoincidenceResult,
    OpticalNetwork,
    Port,
    direct,
    ensemble_rate,
    normalize,
    spread_average,
)
from .errors import ConfigurationError
from .fields import polarizer
from .sources import SourceEnsemble, SpreadSpec

HALF_PI = math.pi / 2
QUARTER_PI = math.pi / 4

EXPERIMENTS = ("clauser-aspect", "ghz", "franson", "ghosh-mandel", "brendel")

# PBS ports: transmission passes x, reflection passes y with a sign flip
_T = polarizer(0.0)
_R = polarizer(HALF_PI)


def clauser_aspect_network() -> OpticalNetwork:
    return OpticalNetwork((Alternative((direct(0), direct(1))),))


def ghz_network(crosstalk: bool = True) -> OpticalNetwork:
    """Four-detector network behind the polarizing beam splitter.

    Channel order is (A1, A2, B1, B2). Detectors 1 and 4 see A1 and B1
    directly; detectors 2 and 3 sit on the two PBS outputs. With crosstalk
    the transmitted and reflected signals overlap in time and add coherently.
    Without it the two pairings (both transmitted, both reflected) are
    distinguishable and add at rate level.
    """
    a1, a2, b1, b2 = range(4)
    if crosstalk:
        ports = (
            direct(a1),
            Port(((b2, _T), (a2, -_R))),
            Port(((a2, _T), (b2, -_R))),
            direct(b1),
        )
        return OpticalNetwork((Alternative(ports),))
    transmit = Alternative(
        (direct(a1), direct(b2, _T), direct(a2, _T), direct(b1)), coherent=False
    )
    reflect = Alternative(
        (direct(a1), direct(a2, -_R), direct(b2, -_R), direct(b1)), coherent=False
    )
    return OpticalNetwork((transmit, reflect))


def franson_network() -> OpticalNetwork:
    """Long-long and short-short time bins as coherent alternatives.

    Fast coincidence electronics reject long-short pairings, so each detector
    is gated onto one path component per alternative. Summing the two gives
    the bilinear pairing E_l . E_r.
    """
    long_long = Alternative((direct(0, gate=0.0), direct(1, gate=0.0)))
    short_short = Alternative((direct(0, gate=HALF_PI), direct(1, gate=HALF_PI)))
    return OpticalNetwork((long_long, short_short))


@dataclass(frozen=True)
class ExperimentPreset:
    id: str
    source: Callable[..., SourceEnsemble]
    network: OpticalNetwork
    detectors: int
    # analyzer settings used when the experiment has no free analyzers
    default_settings: tuple[float, ...] = ()
    spread: SpreadSpec | None = None

    def settings(self, theta: Sequence[float] | None = None) -> tuple[float, ...]:
        if theta is None:
            return self.default_settings
        if len(theta) != self.detectors:
            raise ConfigurationError(
                f"{self.id}: {len(theta)} analyzer angles for {self.detectors} detectors"
            )
        return tuple(float(t) for t in theta)

    def rate(self, theta: Sequence[float] | None = None, *source_args: float) -> CoincidenceResult:
        settings = self.settings(theta)
        if self.spread is not None:
            phi, psi = source_args
            return spread_average(
                lambda p, q, s: ensemble_rate(self.source(p, q, s), self.network, settings),
                phi,
                psi,
                self.spread,
            )
        return ensemble_rate(self.source(*source_args), self.network, settings)


def preset(
    id: str, *, crosstalk: bool = True, spread: SpreadSpec | None = None
) -> ExperimentPreset:
    if id in ("clauser", "clauser-aspect"):
        return ExperimentPreset(
            "clauser-aspect", sources.clauser_aspect_source, clauser_aspect_network(), 2
        )
    if id == "ghz":
        return ExperimentPreset("ghz", sources.ghz_source, ghz_network(crosstalk), 4)
    if id == "franson":
        return ExperimentPreset(
            "franson", sources.franson_source, franson_network(), 2, (0.0, 0.0)
        )
    if id == "ghosh-mandel":
        return ExperimentPreset(
            "ghosh-mandel", sources.ghosh_mandel_source, franson_network(), 2, (0.0, 0.0)
        )
    if id == "brendel":
        return ExperimentPreset(
            "brendel",
            sources.brendel_source,
            franson_network(),
            2,
            (0.0, 0.0),
            spread or SpreadSpec(0.05),
        )
    raise ConfigurationError(f"unknown experiment {id!r}; expected one of {EXPERIMENTS}")


@dataclass(frozen=True)
class SweepRow:
    params: dict[str, float]
    raw: float
    normalized: float


def _rows(params: Sequence[dict], results: Sequence[CoincidenceResult], mode: str) -> list[SweepRow]:
    return [
        SweepRow(p, r.raw, r.value) for p, r in zip(params, normalize(results, mode))
    ]


# closed forms

def clauser_reference(theta1: float, theta2: float) -> float:
    """Normalized Malus-type law sin^2(theta1 - theta2)."""
    return math.sin(theta1 - theta2) ** 2


def franson_reference(phi: float, psi: float) -> float:
    return (1.0 + math.cos(phi - psi)) / 2.0


def brendel_reference(phi: float, psi: float, s_max: float) -> float:
    """Exact spread average of the Brendel fringe.

    The pair phase difference is (phi - psi) - s (phi + psi); averaging its
    cosine over s in [-s_max, s_max] multiplies the fringe by
    sinc((phi + psi) s_max).
    """
    return (1.0 + math.cos(phi - psi) * np.sinc((phi + psi) * s_max / math.pi)) / 2.0


# experiment entry points

def clauser_aspect(theta1: float, theta2: float) -> CoincidenceResult:
    return preset("clauser-aspect").rate((theta1, theta2))


def clauser_sweep(theta1: float, theta2_grid: Sequence[float], normalization: str = "max") -> list[SweepRow]:
    params = [{"theta1": float(theta1), "theta2": float(t)} for t in theta2_grid]
    results = [clauser_aspect(p["theta1"], p["theta2"]) for p in params]
    return _rows(params, results, normalization)


def ghz_rate(theta: Sequence[float], crosstalk: bool = True) -> CoincidenceResult:
    return preset("ghz", crosstalk=crosstalk).rate(theta)


GHZ_PEAK_REGIME = (0.0, HALF_PI, HALF_PI, 0.0)


def ghz_reference_c() -> float:
    """C: the four-fold rate of the maximal regime {0, pi/2, pi/2, 0} with crosstalk."""
    return ghz_rate(GHZ_PEAK_REGIME).raw


def ghz_regime_table(crosstalk: bool = True, normalization: str = "max") -> list[SweepRow]:
    """All 16 settings with every analyzer at 0 or pi/2."""
    params, results = [], []
    for theta in itertools.product((0.0, HALF_PI), repeat=4):
        params.append({f"theta{i + 1}": t for i, t in enumerate(theta)})
        results.append(ghz_rate(theta, crosstalk))
    return _rows(params, results, normalization)


GHZ_SKEW_START = (HALF_PI, 0.0, 0.0, HALF_PI)


def ghz_skew_settings(epsilon: float, mode: str = "same", skewed: int = 3) -> tuple[float, ...]:
    """Settings skewed from {pi/2, 0, 0, pi/2}.

    ``same`` rotates all four analyzers by epsilon; ``opposite`` rotates the
    analyzer at index ``skewed`` by -epsilon instead.
    """
    if mode not in ("same", "opposite"):
        raise ConfigurationError(f"unknown skew mode {mode!r}")
    return tuple(
        t - epsilon if (mode == "opposite" and i == skewed) else t + epsilon
        for i, t in enumerate(GHZ_SKEW_START)
    )


def ghz_skew_sweep(
    mode: str,
    crosstalk: bool,
    epsilons: Sequence[float],
    normalization: str = "raw",
) -> list[SweepRow]:
    if len(epsilons) == 0:
        raise ConfigurationError("empty epsilon grid")
    params = [{"epsilon": float(e)} for e in epsilons]
    results = [ghz_rate(ghz_skew_settings(p["epsilon"], mode), crosstalk) for p in params]
    return _rows(params, results, normalization)


def franson(phi: float, psi: float) -> CoincidenceResult:
    return preset("franson").rate(None, phi, psi)


def ghosh_mandel(delta1: float, delta2: float) -> CoincidenceResult:
    # identical formulas; path-length phases stand in for time offsets
    return franson(delta1, delta2)


def brendel(phi: float, psi: float, spec: SpreadSpec = SpreadSpec(0.05)) -> CoincidenceResult:
    return preset("brendel", spread=spec).rate(None, phi, psi)


def brendel_sweep(
    phis: Sequence[float], psi: float = 0.0, spec: SpreadSpec = SpreadSpec(0.05), normalization: str = "raw"
) -> list[SweepRow]:
    if len(phis) == 0:
        raise ConfigurationError("empty phase grid")
    params = [{"phi": float(p), "psi": float(psi)} for p in phis]
    results = [brendel(p["phi"], psi, spec) for p in params]
    return _rows(params, results, normalization)


def detection_order_invariance(
    p: ExperimentPreset,
    settings: Sequence[float] | None,
    permutation: Sequence[int],
    *source_args: float,
    tol: float = 1e-12,
) -> bool:
    """True when evaluating the detectors in ``permutation`` order leaves the rate unchanged.

    Each detector's outcome depends only on the fields fixed at the source,
    so the order in which detections are registered cannot matter.
    """
    if sorted(permutation) != list(range(p.detectors)):
        raise ConfigurationError(f"{permutation!r} is not a permutation of {p.detectors} detectors")
    settings = p.settings(settings)
    reordered = ExperimentPreset(
        p.id,
        p.source,
        p.network.permuted(permutation),
        p.detectors,
        tuple(settings[i] for i in permutation),
        p.spread,
    )
    before = p.rate(settings, *source_args).raw
    after = reordered.rate(reordered.default_settings, *source_args).raw
    return abs(before - after) <= tol
