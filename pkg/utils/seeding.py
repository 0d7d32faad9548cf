"""
Seed plumbing.

Two kinds of randomness are used across the laboratory:

* per-trial substreams: ``numpy.random.SeedSequence(entropy=master,
  spawn_key=(trial_index, stream))`` fed to ``default_rng``;
* per-pair counter-based draws for matrix entries and graph edges: a
  splitmix64 mix of ``(trial key, i, j, lane)`` with ``i <= j``, so the value
  attached to a pair never depends on traversal order or thread count.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / float(1 << 53)

MAX_INDEX = 1 << 31


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64 finaliser on a uint64 array (wrapping arithmetic)"""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def substream(master: int, trial_index: int, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=(int(trial_index), int(stream)))


def trial_key(master: int, trial_index: int, stream: int = 0) -> int:
    """64-bit key of one trial, used by the counter-based pair draws"""
    return int(substream(master, trial_index, stream).generate_state(1, np.uint64)[0])


def pair_uniforms(key: int, i: np.ndarray, j: np.ndarray, lane: int = 0) -> np.ndarray:
    """
    Uniform(0, 1) draws attached to index pairs.

    Args:
        key: trial key from ``trial_key``
        i, j: index arrays with i <= j (caller orders them)
        lane: distinguishes several draws owned by the same pair

    Returns:
        float64 array in the open interval (0, 1)
    """
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    if i.size and (int(i.max()) >= MAX_INDEX or int(j.max()) >= MAX_INDEX):
        raise ValueError("pair index exceeds 2**31")
    counter = (i << np.uint64(33)) | (j << np.uint64(1)) | np.uint64(lane & 1)
    h = splitmix64(splitmix64(counter) ^ np.uint64(key))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
