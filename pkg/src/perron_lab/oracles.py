"""Closed-form reference values used by scenarios and tests."""
from __future__ import annotations

import math

import numpy as np


def manufactured_u(P: np.ndarray) -> np.ndarray:
    """``sin(pi x) sin(pi y)``, solving ``-Laplace u = 2 pi^2 u`` with zero boundary values."""
    return np.sin(np.pi * P[:, 0]) * np.sin(np.pi * P[:, 1])


def manufactured_f(P: np.ndarray) -> np.ndarray:
    return 2 * np.pi ** 2 * manufactured_u(P)


def square_eigenvalue(m: int, n: int) -> float:
    """Dirichlet eigenvalue of ``-Laplace`` on the unit square."""
    return (m * m + n * n) * math.pi ** 2


def shifted_constant_solution(x: float, y: float, shift: float, n_max: int = 21) -> float:
    """Solution of ``-Laplace u - shift u = 0``, ``u = 1`` on the unit-square boundary.

    Writes ``u = 1 + v`` with ``-Laplace v - shift v = shift`` and expands ``v``
    in the sine basis; the constant 1 has coefficients ``16 / (pi^2 m n)`` for
    odd ``m, n``.  Terms with ``m, n <= n_max`` are kept.
    """
    total = 1.0
    for m in range(1, n_max + 1, 2):
        for n in range(1, n_max + 1, 2):
            b = 16.0 / (math.pi ** 2 * m * n)
            lam = square_eigenvalue(m, n)
            total += shift * b / (lam - shift) * math.sin(m * math.pi * x) * math.sin(n * math.pi * y)
    return total


def annulus_value(r: float, inner: float, value: float, outer: float = 1.0) -> float:
    """Harmonic function on ``inner < |x| < outer`` equal to ``value`` inside and 0 outside."""
    return value * math.log(r / outer) / math.log(inner / outer)


def annulus_capacity(rho: float, R: float) -> float:
    """Capacity of the closed disk of radius ``rho`` relative to the concentric disk of radius ``R``."""
    return 2 * math.pi / math.log(R / rho)


def disk_mode_energy(k: int, amplitude: float = 1.0) -> float:
    """Dirichlet energy of ``amplitude r^k cos(k theta)`` on the unit disk."""
    return math.pi * k * amplitude ** 2
