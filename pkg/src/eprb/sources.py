"""Emission models: weighted ensembles of discrete source realizations.

The cascade and down-conversion sources emit orthogonally polarized pairs
whose orientation is fixed by a binary mode index drawn evenly from {0, 1}.
Because the support is tiny, ensembles enumerate every realization with its
exact weight instead of sampling; sampling lives in :mod:`eprb.detector`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigurationError
from .fields import field, phase_arm

WEIGHT_TOL = 1e-12

# exact cos/sin of n*pi/2 for integer n; math.cos(pi/2) is 6e-17, not 0
_QUARTER_COS = (1.0, 0.0, -1.0, 0.0)
_QUARTER_SIN = (0.0, 1.0, 0.0, -1.0)


@dataclass(frozen=True)
class EmissionRealization:
    """One source configuration: the fields on each channel and its probability."""

    channels: tuple[np.ndarray, ...]
    weight: float
    modes: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ConfigurationError(f"weight {self.weight} outside [0, 1]")


@dataclass(frozen=True)
class SpreadSpec:
    """Uniform fractional frequency spread +-s_max, integrated on ``nodes`` Simpson points."""

    s_max: float
    nodes: int = 201

    def __post_init__(self):
        if not 0.0 < self.s_max < 1.0:
            raise ConfigurationError(f"s_max must lie in (0, 1), got {self.s_max}")
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ConfigurationError(f"nodes must be odd and >= 3, got {self.nodes}")

    def grid(self) -> np.ndarray:
        return np.linspace(-self.s_max, self.s_max, self.nodes)


@dataclass(frozen=True)
class SourceEnsemble:
    realizations: tuple[EmissionRealization, ...]
    channel_names: tuple[str, ...]
    spread: SpreadSpec | None = dc_field(default=None)

    def __post_init__(self):
        if not self.realizations:
            raise ConfigurationError("ensemble has no realizations")
        total = math.fsum(r.weight for r in self.realizations)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ConfigurationError(f"realization weights sum to {total}, not 1")
        for r in self.realizations:
            if len(r.channels) != len(self.channel_names):
                raise ConfigurationError(
                    f"realization has {len(r.channels)} channels, "
                    f"expected {len(self.channel_names)}"
                )

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    @property
    def weights(self) -> np.ndarray:
        return np.array([r.weight for r in self.realizations])

    def realization(self, *modes: int) -> EmissionRealization:
        for r in self.realizations:
            if r.modes == modes:
                return r
        raise KeyError(modes)


def anticorrelated_pair(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonally polarized pair for mode index n.

    First member is (cos n pi/2, sin n pi/2), second (sin n pi/2, -cos n pi/2).
    """
    c, s = _QUARTER_COS[n % 4], _QUARTER_SIN[n % 4]
    return field(c, s), field(s, -c)


def clauser_aspect_source() -> SourceEnsemble:
    """Cascade source: channels (S1, S2), n in {0, 1} with weight 1/2 each."""
    reals = tuple(
        EmissionRealization(channels=anticorrelated_pair(n), weight=0.5, modes=(n,))
        for n in (0, 1)
    )
    return SourceEnsemble(reals, ("S1", "S2"))


def ghz_source() -> SourceEnsemble:
    """Two independent down-conversion pairs: channels (A1, A2, B1, B2), (n, m) in {0, 1}^2."""
    reals = []
    for n in (0, 1):
        a1, a2 = anticorrelated_pair(n)
        for m in (0, 1):
            b1, b2 = anticorrelated_pair(m)
            reals.append(
                EmissionRealization(channels=(a1, a2, b1, b2), weight=0.25, modes=(n, m))
            )
    return SourceEnsemble(tuple(reals), ("A1", "A2", "B1", "B2"))


def franson_source(phi: float, psi: float) -> SourceEnsemble:
    """Identical pulses through two unbalanced interferometers.

    Left arm carries ``phase_arm(phi)``. The right arm phase enters with the
    opposite sign, ``phase_arm(-psi)``, so that the bilinear pairing of the two
    arms fringes in phi - psi.
    """
    return SourceEnsemble(
        (EmissionRealization(channels=(phase_arm(phi), phase_arm(-psi)), weight=1.0),),
        ("E_l", "E_r"),
    )


def brendel_source(phi: float, psi: float, s: float) -> SourceEnsemble:
    """Franson source with a phase-matched frequency offset s on the pair.

    The left long-arm phase becomes phi (1 - s) and the right psi (1 + s).
    """
    if not abs(s) < 1.0:
        raise ConfigurationError(f"|s| must be < 1, got {s}")
    return franson_source(phi * (1.0 - s), psi * (1.0 + s))


def ghosh_mandel_source(delta1: float, delta2: float) -> SourceEnsemble:
    """Path-length-difference variant of the Franson source; same formulas."""
    return franson_source(delta1, delta2)
