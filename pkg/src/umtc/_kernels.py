"""Compiled pentagon/hexagon residuals for multiplicity-free data.

F-symbols are packed per quad (a, b, c, d) as a dense square block in
``flat`` starting at ``off[a, b, c, d]``.  The entry F[a,b,c,d][e,f] sits at
``flat[base[a,b,c,d,e] + pos[a,b,c,d,f]]``; both tables are O(n^5) small
integers, built once per category.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _pos_left(N, a, b, c, d, e):
    p = 0
    for x in range(e):
        if N[a, b, x] and N[x, c, d]:
            p += 1
    return p


@njit(cache=True)
def _pos_right(N, a, b, c, d, f):
    p = 0
    for x in range(f):
        if N[b, c, x] and N[a, x, d]:
            p += 1
    return p


@njit(cache=True)
def build_tables(N, off, msz):
    n = N.shape[0]
    base = -np.ones((n, n, n, n, n), dtype=np.int32)
    pos = -np.ones((n, n, n, n, n), dtype=np.int16)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    if off[a, b, c, d] < 0:
                        continue
                    m = msz[a, b, c, d]
                    p = 0
                    for e in range(n):
                        if N[a, b, e] and N[e, c, d]:
                            base[a, b, c, d, e] = off[a, b, c, d] + p * m
                            p += 1
                    p = 0
                    for f in range(n):
                        if N[b, c, f] and N[a, f, d]:
                            pos[a, b, c, d, f] = p
                            p += 1
    return base, pos


@njit(cache=True)
def _F(base, pos, flat, a, b, c, d, e, f):
    return flat[base[a, b, c, d, e] + pos[a, b, c, d, f]]


@njit(cache=True)
def pentagon_residual(N, chptr, chidx, base, pos, flat):
    n = N.shape[0]
    worst = 0.0
    count = 0
    for a in range(n):
        for b in range(n):
            for fi in range(chptr[a, b], chptr[a, b + 1]):
                f = chidx[fi]
                for c in range(n):
                    for gi in range(chptr[f, c], chptr[f, c + 1]):
                        g = chidx[gi]
                        for d in range(n):
                            for ei in range(chptr[g, d], chptr[g, d + 1]):
                                e = chidx[ei]
                                for hi in range(chptr[c, d], chptr[c, d + 1]):
                                    h = chidx[hi]
                                    for ki in range(chptr[b, h], chptr[b, h + 1]):
                                        k = chidx[ki]
                                        if not N[a, k, e]:
                                            continue
                                        lhs = 0j
                                        if N[f, h, e]:
                                            lhs = _F(base, pos, flat, f, c, d, e, g, h) * _F(
                                                base, pos, flat, a, b, h, e, f, k)
                                        rhs = 0j
                                        for li in range(chptr[b, c], chptr[b, c + 1]):
                                            l = chidx[li]
                                            if N[a, l, g] and N[l, d, k]:
                                                rhs += (_F(base, pos, flat, a, b, c, g, f, l)
                                                        * _F(base, pos, flat, a, l, d, e, g, k)
                                                        * _F(base, pos, flat, b, c, d, k, l, h))
                                        r = abs(lhs - rhs)
                                        count += 1
                                        if r > worst:
                                            worst = r
    return worst, count


@njit(cache=True)
def hexagon_residual(N, chptr, chidx, base, pos, flat, R):
    """Max residual of both hexagons for braiding R (R[a, b, c] scalar)."""
    n = N.shape[0]
    worst = 0.0
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    # ε(a, bc) = (1 ⊗ ε(a, c))(ε(a, b) ⊗ 1)
                    for fi in range(chptr[b, c], chptr[b, c + 1]):
                        f = chidx[fi]
                        if not N[a, f, d]:
                            continue
                        for hi in range(chptr[b, c], chptr[b, c + 1]):
                            h = chidx[hi]
                            if not N[h, a, d]:
                                continue
                            s = 0j
                            for ei in range(chptr[a, b], chptr[a, b + 1]):
                                e = chidx[ei]
                                if not N[e, c, d]:
                                    continue
                                for gi in range(chptr[a, c], chptr[a, c + 1]):
                                    g = chidx[gi]
                                    if not N[b, g, d]:
                                        continue
                                    s += (np.conj(_F(base, pos, flat, a, b, c, d, e, f)) * R[a, b, e]
                                          * _F(base, pos, flat, b, a, c, d, e, g) * R[a, c, g]
                                          * np.conj(_F(base, pos, flat, b, c, a, d, h, g)))
                            lhs = R[a, f, d] if h == f else 0j
                            r = abs(lhs - s)
                            if r > worst:
                                worst = r
                    # ε(ab, c) = (ε(a, c) ⊗ 1)(1 ⊗ ε(b, c))
                    for ei in range(chptr[a, b], chptr[a, b + 1]):
                        e = chidx[ei]
                        if not N[e, c, d]:
                            continue
                        for hi in range(chptr[a, b], chptr[a, b + 1]):
                            h = chidx[hi]
                            if not N[c, h, d]:
                                continue
                            s = 0j
                            for fi in range(chptr[b, c], chptr[b, c + 1]):
                                f = chidx[fi]
                                if not N[a, f, d]:
                                    continue
                                for gi in range(chptr[a, c], chptr[a, c + 1]):
                                    g = chidx[gi]
                                    if not N[g, b, d]:
                                        continue
                                    s += (_F(base, pos, flat, a, b, c, d, e, f) * R[b, c, f]
                                          * np.conj(_F(base, pos, flat, a, c, b, d, g, f)) * R[a, c, g]
                                          * _F(base, pos, flat, c, a, b, d, g, h))
                            lhs = R[e, c, d] if h == e else 0j
                            r = abs(lhs - s)
                            if r > worst:
                                worst = r
    return worst


def channel_csr(N: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """CSR layout of fusion channels: ``chidx[chptr[a, b]:chptr[a, b + 1]]``."""
    n = N.shape[0]
    counts = (N > 0).sum(axis=2).reshape(-1)
    ptr = np.zeros(n * n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    idx = np.nonzero(N.reshape(n * n, n) > 0)[1].astype(np.int64)
    chptr = np.empty((n, n + 1), dtype=np.int64)
    for a in range(n):
        chptr[a] = ptr[a * n:(a + 1) * n + 1]
    return chptr, idx
