from typing import Tuple

import numpy as np

from idslab.models.config import BumpProfile

BSPLINE_OFFSETS = np.arange(-2, 3, dtype=np.int64)
INDICATOR_OFFSETS = np.zeros(1, dtype=np.int64)


def cubic_bspline(u: np.ndarray) -> np.ndarray:
    """Centered cubic B-spline, supported on (-2, 2), integer translates sum to 1."""
    a = np.abs(u)
    inner = 2.0 / 3.0 - a**2 + 0.5 * a**3
    outer = (2.0 - a) ** 3 / 6.0
    return np.where(a < 1.0, inner, np.where(a < 2.0, outer, 0.0))


def bump_stencil(profile: BumpProfile) -> np.ndarray:
    """Cell offsets o (relative to the containing cell) whose bump can be nonzero."""
    if profile == BumpProfile.BSPLINE:
        return BSPLINE_OFFSETS
    return INDICATOR_OFFSETS


def axis_weights(profile: BumpProfile, frac: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One-dimensional bump factors at fractional cell positions.

    Args:
        profile (BumpProfile): Bump family.
        frac (np.ndarray): Positions within their cell, in [0, 1).

    Returns:
        tuple[np.ndarray, np.ndarray]: The stencil offsets and an array of shape
        ``(len(frac), len(offsets))`` with the factor contributed by cell ``c + o``.
    """
    offsets = bump_stencil(profile)
    if profile == BumpProfile.INDICATOR:
        return offsets, np.ones((frac.shape[0], 1))
    # cell g is centered at g + 1/2
    u = frac[:, None] - 0.5 - offsets[None, :].astype(np.float64)
    return offsets, cubic_bspline(u)
