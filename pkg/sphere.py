"""
Direction sets on the unit sphere S^{n-1}, n in {1, 2, 3}
Regular (deterministic) placements and Halton-driven quasi-uniform samples
"""
import math

import numpy as np
from scipy.stats import qmc

from errors import InputError

SUPPORTED_DIMENSIONS = (1, 2, 3)


def _check_dimension(n: int):
    if n not in SUPPORTED_DIMENSIONS:
        raise InputError(f"dimension n={n} not supported (n must be 1, 2 or 3)")


def sphere_area(n: int) -> float:
    """Surface measure of S^{n-1} (n=1 counts the two points +-1)"""
    _check_dimension(n)
    return {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[n]


def circle_directions(count: int, offset: float = 0.0) -> np.ndarray:
    angles = 2.0 * math.pi * (np.arange(count) + offset) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])


def regular_sphere_directions(count: int) -> np.ndarray:
    """
    Roughly `count` points on S^2, one per patch of equal area
    (latitude bands with longitude counts proportional to sin(theta))
    """
    area = 4.0 * math.pi / count
    d = math.sqrt(area)
    m_theta = max(1, int(round(math.pi / d)))
    d_theta = math.pi / m_theta
    d_phi = area / d_theta
    points = []
    for k in range(m_theta):
        theta = math.pi * (k + 0.5) / m_theta
        m_phi = max(1, int(round(2.0 * math.pi * math.sin(theta) / d_phi)))
        phi = 2.0 * math.pi * np.arange(m_phi) / m_phi
        band = np.column_stack([
            math.sin(theta) * np.cos(phi),
            math.sin(theta) * np.sin(phi),
            np.full(m_phi, math.cos(theta)),
        ])
        points.append(band)
    return np.vstack(points)


def regular_directions(n: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform directions; n=1 always gives {+1, -1}"""
    _check_dimension(n)
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        return circle_directions(count)
    return regular_sphere_directions(count)


def halton_directions(n: int, count: int, seed: int) -> np.ndarray:
    """Scrambled-Halton directions (equal-area map for n=3)"""
    _check_dimension(n)
    if n == 1:
        signs = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)
        return signs[:, None]
    sampler = qmc.Halton(d=n - 1, scramble=True, seed=seed)
    u = sampler.random(count)
    if n == 2:
        angles = 2.0 * math.pi * u[:, 0]
        return np.column_stack([np.cos(angles), np.sin(angles)])
    z = 2.0 * u[:, 0] - 1.0
    phi = 2.0 * math.pi * u[:, 1]
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def halton_shell_points(n: int, count: int, r_lo: float, r_hi: float, seed: int) -> np.ndarray:
    """
    Quasi-uniform points with |xi| in [r_lo, r_hi]; radii log-uniform so every
    scale of the shell is sampled
    """
    _check_dimension(n)
    sampler = qmc.Halton(d=max(n, 2), scramble=True, seed=seed)
    u = sampler.random(count)
    radii = r_lo * (r_hi / r_lo) ** u[:, 0]
    if n == 1:
        directions = np.where(u[:, 1] < 0.5, 1.0, -1.0)[:, None]
    elif n == 2:
        angles = 2.0 * math.pi * u[:, 1]
        directions = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        z = 2.0 * u[:, 1] - 1.0
        phi = 2.0 * math.pi * u[:, 2]
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        directions = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    return radii[:, None] * directions
