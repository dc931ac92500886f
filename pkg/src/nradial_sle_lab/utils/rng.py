"""
Counter-based random streams.

Each Monte-Carlo path owns a Philox stream keyed by (seed, path_index,
purpose), so a path draws the same numbers no matter which worker runs it or
how paths are batched.
"""

from typing import Optional

import numpy as np

# Stream purposes; a path's main noise and its bridge refinements never share
# a counter space.
MAIN_STREAM = 0
BRIDGE_STREAM = 1
START_STREAM = 2


def path_generator(seed: int, path_index: int, purpose: int = MAIN_STREAM) -> np.random.Generator:
    """
    Build the generator for one path.

    Args:
        seed: Experiment seed (64-bit)
        path_index: Index of the path within the experiment
        purpose: Stream purpose tag

    Returns:
        numpy Generator backed by a Philox bit generator
    """
    if path_index < 0:
        raise ValueError(f"path_index must be non-negative, got {path_index}")

    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(path_index), int(purpose)])
    return np.random.Generator(np.random.Philox(sequence))


def bridge_midpoints(increment: np.ndarray, dt: float,
                     rng: np.random.Generator,
                     normals: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Split Brownian increments over dt into two halves by bridge bisection.

    Given W(t+dt) - W(t) = increment, the midpoint increment is
    increment/2 + sqrt(dt)/2 * Z with Z standard normal.

    Args:
        increment: Increment(s) over the full interval
        dt: Interval length
        rng: Generator supplying Z (ignored when normals is given)
        normals: Optional pre-drawn standard normals of matching shape

    Returns:
        Array of shape (2,) + increment.shape with the two half increments
    """
    increment = np.asarray(increment, dtype=float)
    if normals is None:
        normals = rng.standard_normal(increment.shape)

    first = 0.5 * increment + 0.5 * np.sqrt(dt) * normals
    return np.stack([first, increment - first])
