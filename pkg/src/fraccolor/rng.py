"""Counter-based random draws.

Every primitive draw of a run is addressed by ``(seed, iteration, color,
kind, slot)`` and hashed to a uniform double in [0, 1). Nothing is consumed
from a stream, so skipping a draw never shifts another one, runs are
reproducible under any parallel split, and single trials can be overridden.

The scalar functions are compiled by numba for the kernels; the ``*_vec``
functions are the numpy twins and agree bit for bit.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53

# draw kinds
ACT = 1
SEL = 2
CLS = 3
MU = 4
ELL = 5
LABEL = 6  # independent-set sampler
RUN = 7  # per-run seed derivation

KIND_NAMES = {"act": ACT, "sel": SEL, "cls": CLS, "mu": MU, "ell": ELL}


@njit(inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def absorb(h, x):
    return mix64((h ^ np.uint64(x)) + GOLDEN)


@njit(inline="always")
def to_unit(h):
    return (h >> _S11) * _TWO_M53


@njit(inline="always")
def seed_state(seed):
    return mix64(np.uint64(seed))


@njit(inline="always")
def uniform(hic, kind, slot):
    """Uniform for an already-absorbed ``(seed, i, c)`` prefix."""
    return to_unit(absorb(absorb(hic, kind), slot))


# numpy twins ---------------------------------------------------------------

def _u64(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=np.uint64))


def mix64_vec(z: np.ndarray) -> np.ndarray:
    z = _u64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def absorb_vec(h, x) -> np.ndarray:
    return mix64_vec((_u64(h) ^ _u64(x)) + GOLDEN)


def to_unit_vec(h: np.ndarray) -> np.ndarray:
    return (h >> _S11).astype(np.float64) * _TWO_M53


def uniform_vec(hic: np.ndarray, kind: int, slot) -> np.ndarray:
    return to_unit_vec(absorb_vec(absorb_vec(hic, kind), slot))


def draw(seed: int, i: int, c: int, kind: int, slot: int = 0) -> float:
    """Single addressed draw, for inspection and tests."""
    h = absorb_vec(absorb_vec(mix64_vec(seed), i), c)
    return float(uniform_vec(h, kind, slot)[0])


def derive_seed(master: int, *path: int) -> int:
    """Child seed for run/rung indices; stable across processes and backends."""
    h = mix64_vec(master)
    h = absorb_vec(h, RUN)
    for x in path:
        h = absorb_vec(h, x)
    return int(h[0])


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed
