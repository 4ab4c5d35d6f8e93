"""
Poincaré disc primitives: hyperbolic translations and rotations in closed form,
distances, ideal angles and geodesic arcs.

These are plain functions on complex numbers (or numpy complex arrays) so the
tiling generator can call them in tight loops without building isometry objects.
"""

import cmath
import math

import numpy as np

TWO_PI = 2.0 * math.pi

# Side-of-geodesic and collinearity tolerance for disc coordinates.
COORD_TOL = 1e-9


def translate(c: complex, z):
    """Hyperbolic translation sending 0 to c, applied to z."""
    return (z + c) / (c.conjugate() * z + 1.0)


def translate_inverse(c: complex, z):
    """Inverse of translate(c, .): sends c to 0."""
    return (z - c) / (1.0 - c.conjugate() * z)


def rotate_about(c: complex, phi: float, z):
    """Rotate z by angle phi (counterclockwise) about the disc point c."""
    w = translate_inverse(c, z) * cmath.exp(1j * phi)
    return translate(c, w)


def hyperbolic_distance(z1, z2):
    """Poincaré distance between disc points (vectorized)."""
    num = np.abs(np.asarray(z1) - np.asarray(z2))
    den = np.abs(1.0 - np.conj(z1) * np.asarray(z2))
    return 2.0 * np.arctanh(np.minimum(num / den, 1.0 - 1e-16))


def ccw_offset(start: float, theta: float) -> float:
    """Counterclockwise angular offset from start to theta, in [0, 2*pi)."""
    return (theta - start) % TWO_PI


def geodesic_arc(z1: complex, z2: complex, tol: float = COORD_TOL) -> tuple[complex, float] | None:
    """
    Euclidean circle (center, radius) carrying the geodesic through z1 and z2.

    Returns None when the geodesic is a diameter (z1, z2 and 0 collinear within tol).
    The center c solves Re(z * conj(c)) = (|z|^2 + 1) / 2 at both endpoints, which is
    the condition for a circle through z orthogonal to the unit circle.
    """
    cross = (z1.conjugate() * z2).imag
    if abs(cross) <= tol:
        return None
    r1 = (abs(z1) ** 2 + 1.0) / 2.0
    r2 = (abs(z2) ** 2 + 1.0) / 2.0
    cx = (r1 * z2.imag - r2 * z1.imag) / cross
    cy = (r2 * z1.real - r1 * z2.real) / cross
    center = complex(cx, cy)
    return center, math.sqrt(max(abs(center) ** 2 - 1.0, 0.0))
