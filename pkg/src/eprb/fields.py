"""Two-component complex fields and the 2x2 optical elements acting on them.

A field is a length-2 complex array. Its components are the amplitudes along
two orthogonal modes: x/y polarization for the polarization experiments, or
long/short path for the phase-offset (Franson type) experiments. Matrices are
2x2 arrays. Everything returned here is read-only so values can be shared
freely between ensembles, networks and threads.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

SQRT_HALF = math.sqrt(0.5)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def field(c0: complex, c1: complex) -> np.ndarray:
    """Build a read-only two-component complex field."""
    return _frozen(np.array([c0, c1], dtype=np.complex128))


def matrix(m00: complex, m01: complex, m10: complex, m11: complex) -> np.ndarray:
    """Build a read-only 2x2 complex matrix from row-major entries."""
    return _frozen(np.array([[m00, m01], [m10, m11]], dtype=np.complex128))


IDENTITY = matrix(1, 0, 0, 1)


def norm2(e: np.ndarray) -> float:
    """Squared norm |c0|^2 + |c1|^2."""
    return float(e[0].real ** 2 + e[0].imag ** 2 + e[1].real ** 2 + e[1].imag ** 2)


def polarizer(theta: float) -> np.ndarray:
    """Jones matrix of an ideal linear polarizer with transmission axis at ``theta``.

    ``polarizer(0)`` passes x, ``polarizer(pi/2)`` passes y. The matrix is the
    rank-1 projector onto (cos theta, sin theta).
    """
    if not math.isfinite(theta):
        raise ValueError(f"polarizer angle must be finite, got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    return matrix(c * c, c * s, s * c, s * s)


def apply(m: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Matrix-vector product m @ e."""
    return _frozen(m @ e)


def project(e: np.ndarray, theta: float) -> complex:
    """Scalar amplitude transmitted by an analyzer whose axis is at ``theta``.

    Equal to the component of ``apply(polarizer(theta), e)`` along
    (cos theta, sin theta); hence ``abs(project(e, t))**2`` is the transmitted
    intensity.
    """
    return complex(e[0] * math.cos(theta) + e[1] * math.sin(theta))


def inner_conj(a: np.ndarray, b: np.ndarray) -> complex:
    """Conjugate-linear inner product conj(a) . b."""
    return complex(np.vdot(a, b))


def dot(a: np.ndarray, b: np.ndarray) -> complex:
    """Bilinear product a . b with no conjugation."""
    return complex(a[0] * b[0] + a[1] * b[1])


def phase_arm(phi: float) -> np.ndarray:
    """Output of an unbalanced interferometer arm pair with extra long-path phase ``phi``.

    Component 0 is the long path and carries ``exp(i phi)``; component 1 is the
    short path. The common carrier phase is dropped because it cancels in every
    modulus-squared quantity. The result has unit norm.
    """
    if not math.isfinite(phi):
        raise ValueError(f"phase must be finite, got {phi!r}")
    return field(cmath.exp(1j * phi) * SQRT_HALF, SQRT_HALF)
