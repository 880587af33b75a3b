"""Splittable per-path random streams.

Each simulated path owns an independent counter-based stream: stream ``p``
is a splitmix64 sequence whose initial state is a 64-bit hash of
``(seed, p)``.  Draws depend only on ``(seed, p, draw index)``, so results
are reproducible and independent of how paths are chunked or scheduled.
Normals come from the Box-Muller transform; within a stream, pairs are
consumed alternately (cos then sin) so one draw advances the state by two
64-bit outputs every second call.

The same construction is inlined in the numba kernels in
:mod:`alphameu.stochastic`; cross-engine agreement is covered by tests.
"""

from __future__ import annotations

import numpy as np

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_STREAM = U64(0xD1B54A32D192ED03)
_INV_2_64 = 1.0 / 18446744073709551616.0
_TWO_PI = 6.283185307179586


def mix64(z: np.ndarray) -> np.ndarray:
    """Finalizing mixer of splitmix64 (stateless, vectorized)."""
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


def path_states(seed: int, n_paths: int, offset: int = 0) -> np.ndarray:
    """Initial splitmix64 states for paths ``offset .. offset+n_paths-1``."""
    idx = np.arange(offset, offset + n_paths, dtype=np.uint64)
    return U64(seed & 0xFFFFFFFFFFFFFFFF) ^ (idx * _STREAM)


def next_u64(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Advance every stream by one step; return (new states, outputs)."""
    states = states + _GOLDEN
    return states, mix64(states)


def normal_pair(states: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two independent standard normals per stream (Box-Muller).

    Advances each state by two outputs. The first uniform is shifted off
    zero so the log is always finite.
    """
    states, u1 = next_u64(states)
    states, u2 = next_u64(states)
    f1 = (u1 + U64(1)).astype(np.float64) * _INV_2_64
    f2 = u2.astype(np.float64) * _INV_2_64
    r = np.sqrt(-2.0 * np.log(f1))
    ang = _TWO_PI * f2
    return states, r * np.cos(ang), r * np.sin(ang)
