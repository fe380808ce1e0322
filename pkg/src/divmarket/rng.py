"""Counter-based noise streams.

Every normal increment is addressable by (seed, path, step, coordinate):
each path owns a Philox counter block, and within a path the flat draw
index is step * n_coords + coordinate.  Normals come from the inverse CDF
of counter-indexed uniforms, so any sub-block can be regenerated without
touching the rest of the stream.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

# Each path gets its own 2^128-draw counter block: no overlap between paths.
_PATH_SHIFT = 128

_U_CLIP = 2.0 ** -53


def _bit_generator(seed: int, path: int) -> Philox:
    return Philox(key=np.uint64(seed), counter=int(path) << _PATH_SHIFT)


def normal_block(
    seed: int, path: int, step_start: int, n_steps: int, n_coords: int
) -> np.ndarray:
    """Standard-normal draws, shape (n_steps, n_coords).

    Row k holds the increments consumed at step step_start + k; regenerating
    any window of steps yields bitwise-identical values.
    """
    bg = _bit_generator(seed, path)
    offset = step_start * n_coords
    # Philox.advance counts counter ticks; each tick yields four 64-bit
    # draws and Generator.random consumes one draw per double.
    if offset >= 4:
        bg.advance(offset // 4)
    gen = Generator(bg)
    rem = offset % 4
    if rem:
        gen.random(rem)
    u = gen.random((n_steps, n_coords))
    return ndtri(np.clip(u, _U_CLIP, 1.0 - _U_CLIP))


def normal_chunk(
    seed: int, paths: np.ndarray, step_start: int, n_steps: int, n_coords: int
) -> np.ndarray:
    """Stacked per-path blocks, shape (len(paths), n_steps, n_coords)."""
    return np.stack(
        [normal_block(seed, int(p), step_start, n_steps, n_coords) for p in paths]
    )
