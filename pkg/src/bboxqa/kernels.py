"""Hot loops, each with a numba and a pure-numpy implementation.

The two implementations of a kernel return identical integers; dispatch
happens per call through ``_accel.numba_enabled``. All results that feed
reports are integer tallies, so the choice of backend never changes a
report byte.

Bit layout: a flattened boolean vector of length ``N`` packs into
``ceil(N / 64)`` uint64 words, bit ``i`` living in word ``i >> 6`` at
position ``i & 63``. Padding bits are always zero.
"""

from __future__ import annotations

import numpy as np

from ._accel import njit, numba_enabled

U64 = np.uint64
_M1 = U64(0x5555555555555555)
_M2 = U64(0x3333333333333333)
_M4 = U64(0x0F0F0F0F0F0F0F0F)
_H01 = U64(0x0101010101010101)
_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_LO32 = U64(0xFFFFFFFF)
_S1, _S2, _S4, _S27, _S30, _S31, _S32, _S56 = (U64(k) for k in (1, 2, 4, 27, 30, 31, 32, 56))


# -- bit packing (numpy only; already vectorised) ------------------------------


def pack_bits(flat: np.ndarray) -> np.ndarray:
    """Pack a 1-D boolean array into little-endian uint64 words."""
    packed = np.packbits(np.asarray(flat, dtype=bool), bitorder="little")
    pad = (-packed.size) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, np.uint8)])
    return packed.view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    raw = np.ascontiguousarray(words, dtype="<u8").view(np.uint8)
    return np.unpackbits(raw, count=n, bitorder="little").astype(bool)


def gather_bits(words: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Bits of ``words`` at ``indices`` (any leading dims on ``words``)."""
    idx = np.asarray(indices, dtype=np.int64)
    chunks = words[..., idx >> 6]
    return ((chunks >> (idx & 63).astype(np.uint64)) & U64(1)).astype(np.int8)


def range_mask(n_words: int, start: int, stop: int) -> np.ndarray:
    """Words with bits ``[start, stop)`` set."""
    flat = np.zeros(n_words * 64, dtype=bool)
    flat[start:stop] = True
    return pack_bits(flat)


# -- popcount pair counts ----------------------------------------------------


@njit
def _popcount64(x):
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    return (x * _H01) >> _S56


@njit
def _pair_counts_numba(planes, mask):
    n_raters, n_words = planes.shape
    ones = np.zeros(n_raters, np.int64)
    disagree = np.zeros((n_raters, n_raters), np.int64)
    for w in range(n_words):
        m = mask[w]
        if m == 0:
            continue
        for a in range(n_raters):
            pa = planes[a, w] & m
            ones[a] += np.int64(_popcount64(pa))
            for b in range(a + 1, n_raters):
                disagree[a, b] += np.int64(_popcount64(pa ^ (planes[b, w] & m)))
    return ones, disagree


def _pair_counts_numpy(planes, mask):
    masked = planes & mask
    ones = np.bitwise_count(masked).sum(axis=1, dtype=np.int64)
    n = planes.shape[0]
    disagree = np.zeros((n, n), np.int64)
    for a in range(n - 1):
        disagree[a, a + 1 :] = np.bitwise_count(masked[a] ^ masked[a + 1 :]).sum(axis=1, dtype=np.int64)
    return ones, disagree


def pair_counts(planes: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-rater set-bit counts and pairwise disagreement counts under ``mask``.

    Parameters
    ----------
    planes : (R, W) uint64
        One packed binary plane per rater.
    mask : (W,) uint64
        Units to count.

    Returns
    -------
    ones : (R,) int64
        ``popcount(plane[a] & mask)``.
    disagree : (R, R) int64
        Upper triangle holds ``popcount((plane[a] ^ plane[b]) & mask)`` for
        ``a < b``; the rest is zero.
    """
    planes = np.ascontiguousarray(planes, dtype=np.uint64)
    mask = np.ascontiguousarray(mask, dtype=np.uint64)
    if numba_enabled():
        return _pair_counts_numba(planes, mask)
    return _pair_counts_numpy(planes, mask)


# -- coincidence tallies over dense values ------------------------------------


@njit
def _tallies_numba(values, n_categories):
    n_units, n_raters = values.shape
    tallies = np.zeros((n_raters + 1, n_categories, n_categories), np.int64)
    counts = np.zeros(n_categories, np.int64)
    skipped = 0
    for u in range(n_units):
        counts[:] = 0
        m = 0
        for r in range(n_raters):
            v = values[u, r]
            if v >= 0:
                counts[v] += 1
                m += 1
        if m < 2:
            skipped += 1
            continue
        for x in range(n_categories):
            cx = counts[x]
            if cx == 0:
                continue
            tallies[m, x, x] += cx * (cx - 1)
            for y in range(n_categories):
                if y != x:
                    tallies[m, x, y] += cx * counts[y]
    return tallies, skipped


def _tallies_numpy(values, n_categories):
    n_units, n_raters = values.shape
    counts = np.stack([(values == x).sum(axis=1, dtype=np.int64) for x in range(n_categories)], axis=1)
    m = counts.sum(axis=1)
    tallies = np.zeros((n_raters + 1, n_categories, n_categories), np.int64)
    for mv in np.unique(m[m >= 2]):
        c = counts[m == mv]
        tallies[mv] = c.T @ c - np.diag(c.sum(axis=0))
    return tallies, int((m < 2).sum())


def coincidence_tallies(values: np.ndarray, n_categories: int) -> tuple[np.ndarray, int]:
    """Integer coincidence numerators grouped by the number of values per unit.

    ``values`` is a (units, raters) int8 array of category codes with ``-1``
    for missing. Returns ``(tallies, skipped)`` where ``tallies[m, x, y]`` is
    the number of ordered pairs of values ``(x, y)`` from distinct raters
    inside units carrying exactly ``m`` values, and ``skipped`` counts units
    with fewer than two values. Dividing ``tallies[m]`` by ``m - 1`` and
    summing over ``m`` gives the coincidence matrix.
    """
    values = np.ascontiguousarray(values, dtype=np.int8)
    if values.size and values.max() >= n_categories:
        raise ValueError("category code out of range")
    if numba_enabled():
        tallies, skipped = _tallies_numba(values, n_categories)
        return tallies, int(skipped)
    return _tallies_numpy(values, n_categories)


# -- seeded partial Fisher-Yates -----------------------------------------------


@njit
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit
def _mulhi64(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    cross = (lo_lo >> _S32) + (hi_lo & _LO32) + lo_hi
    return a_hi * b_hi + (hi_lo >> _S32) + (cross >> _S32)


@njit
def _fisher_yates_numba(n, k, seed):
    perm = np.arange(n)
    state = seed
    for i in range(k):
        state = state + _GAMMA
        span = U64(n - i)
        j = i + np.int64(_mulhi64(_mix64(state), span))
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return perm[:k].copy()


def _offsets_numpy(n: int, k: int, seed: np.uint64) -> np.ndarray:
    steps = np.arange(1, k + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = seed + _GAMMA * steps
        z = (state ^ (state >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        z = z ^ (z >> _S31)
        span = U64(n) - (steps - U64(1))
        a_lo, a_hi = z & _LO32, z >> _S32
        b_lo, b_hi = span & _LO32, span >> _S32
        lo_lo, hi_lo, lo_hi = a_lo * b_lo, a_hi * b_lo, a_lo * b_hi
        cross = (lo_lo >> _S32) + (hi_lo & _LO32) + lo_hi
        hi = a_hi * b_hi + (hi_lo >> _S32) + (cross >> _S32)
    return hi.astype(np.int64)


def _fisher_yates_numpy(n: int, k: int, seed: np.uint64) -> np.ndarray:
    # Offsets are vectorised; the swaps are inherently sequential, so they run
    # over a sparse map of displaced positions instead of a full permutation.
    offsets = _offsets_numpy(n, k, seed).tolist()
    displaced: dict[int, int] = {}
    out = [0] * k
    get = displaced.get
    for i, off in enumerate(offsets):
        j = i + off
        vi = get(i, i)
        out[i] = get(j, j)
        displaced[j] = vi
    return np.asarray(out, dtype=np.int64)


def fisher_yates_prefix(n: int, k: int, seed: int) -> np.ndarray:
    """First ``k`` entries of a seeded Fisher-Yates shuffle of ``range(n)``.

    Step ``i`` swaps position ``i`` with ``i + floor(r_i * (n - i) / 2**64)``
    where ``r_i`` is the ``i``-th output of a splitmix64 generator started at
    ``seed``. Identical on every platform and on both backends.
    """
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    seed64 = U64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    if k == 0:
        return np.zeros(0, dtype=np.int64)
    if numba_enabled():
        return _fisher_yates_numba(np.int64(n), np.int64(k), seed64)
    return _fisher_yates_numpy(n, k, seed64)
