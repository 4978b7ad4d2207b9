"""Compiled inner loops for batched fingerprinting and tree traversal.

Each kernel mirrors a pure-numpy implementation that is used when numba is
unavailable (or ``MTDD_NO_JIT=1``); both produce identical results.
"""

from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("MTDD_NO_JIT"):
        raise ImportError("JIT disabled")
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

AVAILABLE = njit is not None

if AVAILABLE:
    _S30 = np.uint64(30)
    _S27 = np.uint64(27)
    _S31 = np.uint64(31)
    _M1 = np.uint64(0xBF58476D1CE4E5B9)
    _M2 = np.uint64(0x94D049BB133111EB)
    _GOLDEN = np.uint64(0x9E3779B97F4A7C15)
    _SEED = np.uint64(0x243F6A8885A308D3)

    @njit(cache=True, inline="always")
    def _fmix(x):
        x ^= x >> _S30
        x *= _M1
        x ^= x >> _S27
        x *= _M2
        x ^= x >> _S31
        return x

    @njit(cache=True, inline="always")
    def _step(h, v):
        return _fmix(h ^ _fmix(v + _GOLDEN))

    @njit(cache=True)
    def morgan_rounds(feats, nbr, code, deg, radius):
        """Identifiers per round, shape ``(radius + 1, n_atoms)``."""
        n = feats.shape[0]
        width = nbr.shape[1]
        out = np.empty((radius + 1, n), dtype=np.uint64)
        for i in range(n):
            h = _SEED
            for c in range(feats.shape[1]):
                h = _step(h, feats[i, c])
            out[0, i] = h
        pc = np.empty(width, dtype=np.uint64)
        pid = np.empty(width, dtype=np.uint64)
        for r in range(1, radius + 1):
            prev = out[r - 1]
            for i in range(n):
                d = deg[i]
                if d == 0:
                    out[r, i] = prev[i]
                    continue
                for k in range(d):
                    c = code[i, k]
                    v = prev[nbr[i, k]]
                    # insertion sort on (code, id)
                    j = k
                    while j > 0 and (pc[j - 1] > c or (pc[j - 1] == c and pid[j - 1] > v)):
                        pc[j] = pc[j - 1]
                        pid[j] = pid[j - 1]
                        j -= 1
                    pc[j] = c
                    pid[j] = v
                h = _step(_step(_SEED, np.uint64(r)), prev[i])
                for k in range(d):
                    h = _step(_step(h, pc[k]), pid[k])
                out[r, i] = h
        return out

    @njit(cache=True)
    def traverse(feature, child, leaf, roots, X):
        """Leaf node index for every (row, tree).

        Trees are walked one at a time over groups of eight rows advanced in
        lockstep, which keeps several independent node loads in flight.
        """
        n = X.shape[0]
        t = roots.shape[0]
        width = 8
        out = np.empty((n, t), dtype=np.int64)
        cur = np.empty(width, dtype=np.int64)
        for k in range(t):
            root = roots[k]
            for i0 in range(0, n, width):
                m = min(width, n - i0)
                for j in range(m):
                    cur[j] = root
                live = m
                while live:
                    live = 0
                    for j in range(m):
                        c = cur[j]
                        if not leaf[c]:
                            cur[j] = child[2 * c + X[i0 + j, feature[c]]]
                            live += 1
                for j in range(m):
                    out[i0 + j, k] = cur[j]
        return out
