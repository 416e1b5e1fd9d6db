"""Skeletal unitary modular categories.

Conventions
-----------
F-symbols relate the two bracketings of a splitting tree in Hom(d, a⊗b⊗c)::

    |(ab)_e^α c⟩_d^β = Σ F[a,b,c,d][(e,α,β), (f,γ,δ)] |a(bc)_f^γ⟩_d^δ

with both bases ordered lexicographically.  R-symbols give the braiding on
splitting vertices, ``ε(a,b) v^{ab}_{c,μ} = Σ_ν R[a,b,c][μ,ν] v^{ba}_{c,ν}``.
All data are in a unitary gauge, so every F- and R-block is a unitary matrix.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import DegenerateForm, UnsupportedLevel
from .fusion import (
    DEFAULT_TOL,
    CheckReport,
    FusionRingData,
    ModularData,
    check_modular_data,
    modular_data,
)

MAX_SU2_LEVEL = 24


class BraidSide(Enum):
    Plus = "+"
    Minus = "-"

    @property
    def opposite(self) -> "BraidSide":
        return BraidSide.Minus if self is BraidSide.Plus else BraidSide.Plus


def fbasis_left(N: np.ndarray, a: int, b: int, c: int, d: int) -> list[tuple[int, int, int]]:
    return [(e, al, be) for e in np.nonzero(N[a, b])[0].tolist()
            for al in range(N[a, b, e]) for be in range(N[e, c, d])]


def fbasis_right(N: np.ndarray, a: int, b: int, c: int, d: int) -> list[tuple[int, int, int]]:
    return [(f, ga, de) for f in np.nonzero(N[b, c])[0].tolist()
            for ga in range(N[b, c, f]) for de in range(N[a, f, d])]


def admissible_quads(N: np.ndarray):
    """All (a, b, c, d) with nonempty Hom(d, a⊗b⊗c), in lexicographic order."""
    n = N.shape[0]
    reach = np.einsum("abe,ecd->abcd", N, N)
    for q in zip(*np.nonzero(reach)):
        yield tuple(int(i) for i in q)


class _LazyBlocks(dict):
    """Dict filled on first access by `factory`; used by product categories."""

    def __init__(self, factory: Callable):
        super().__init__()
        self._factory = factory

    def __missing__(self, key):
        val = self._factory(key)
        self[key] = val
        return val


class CategoryData:
    """Fusion ring plus F- and R-symbols.

    ``F`` maps admissible quads (a, b, c, d) to square unitary blocks and ``R``
    maps admissible triples (a, b, c) to square unitary blocks.  Missing keys
    are inadmissible.  Instances are treated as immutable; caches used by the
    morphism calculus live in ``_cache``.
    """

    def __init__(self, ring: FusionRingData, F: dict, R: dict, name: str = "", factors=None):
        self.ring = ring
        self.F = F
        self.R = R
        self.name = name
        self.factors = factors
        self._cache: dict = {}
        self._fbases: dict = {}

    def __repr__(self) -> str:
        return f"CategoryData({self.name or '?'}, rank={self.rank})"

    @property
    def rank(self) -> int:
        return self.ring.rank

    @property
    def N(self) -> np.ndarray:
        return self.ring.N

    @property
    def simples(self) -> tuple[str, ...]:
        return self.ring.simples

    @property
    def dual(self) -> np.ndarray:
        return self.ring.dual

    @property
    def multiplicity_free(self) -> bool:
        return self.ring.multiplicity_free

    def fbases(self, a: int, b: int, c: int, d: int):
        """(left basis, left index, right basis, right index) of an F-block."""
        key = (a, b, c, d)
        got = self._fbases.get(key)
        if got is None:
            L = fbasis_left(self.N, a, b, c, d)
            Rb = fbasis_right(self.N, a, b, c, d)
            got = (L, {t: i for i, t in enumerate(L)}, Rb, {t: i for i, t in enumerate(Rb)})
            self._fbases[key] = got
        return got

    def quads(self):
        return admissible_quads(self.N)

    # derived scalars -----------------------------------------------------
    @cached_property
    def dims(self) -> np.ndarray:
        """Quantum dimensions from ``|F[a, ā, a, a]_{00}|^{-1}``."""
        out = np.empty(self.rank)
        for a in range(self.rank):
            ab = int(self.dual[a])
            L, li, Rb, ri = self.fbases(a, ab, a, a)
            out[a] = 1.0 / abs(self.F[(a, ab, a, a)][li[(0, 0, 0)], ri[(0, 0, 0)]])
        return out

    @cached_property
    def twists(self) -> np.ndarray:
        d = self.dims
        om = np.zeros(self.rank, dtype=complex)
        for a in range(self.rank):
            for c in self.ring.fusion_channels(a, a):
                om[a] += d[c] * np.trace(self.R[(a, a, c)])
            om[a] /= d[a]
        return om

    @cached_property
    def double_braid_Y(self) -> np.ndarray:
        """``Y[a, b] = Σ_c d_c conj tr(R[a,b,c] R[b,a,c])``."""
        n, d = self.rank, self.dims
        Y = np.zeros((n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                for c in self.ring.fusion_channels(a, b):
                    Y[a, b] += d[c] * np.conj(np.trace(self.R[(a, b, c)] @ self.R[(b, a, c)]))
        return Y

    @cached_property
    def md(self) -> ModularData:
        return modular_data(self.ring, self.dims, self.twists, self.double_braid_Y)

    def with_F(self, F: dict) -> "CategoryData":
        return CategoryData(self.ring, F, self.R, self.name + "*", self.factors)

    def with_R(self, R: dict) -> "CategoryData":
        return CategoryData(self.ring, self.F, R, self.name + "*", self.factors)

    def materialize(self) -> "CategoryData":
        """Force evaluation of lazily computed blocks."""
        for q in self.quads():
            self.F[q]
        for a, b in itertools.product(range(self.rank), repeat=2):
            for c in self.ring.fusion_channels(a, b):
                self.R[(a, b, c)]
        return self

    # compiled layout -------------------------------------------------------
    @cached_property
    def _packed(self):
        n = self.rank
        N = np.ascontiguousarray(self.N, dtype=np.int32)
        off = -np.ones((n, n, n, n), dtype=np.int64)
        msz = np.zeros((n, n, n, n), dtype=np.int64)
        chunks = []
        pos = 0
        for q in self.quads():
            blk = np.asarray(self.F[q], dtype=complex)
            off[q] = pos
            msz[q] = blk.shape[0]
            chunks.append(blk.reshape(-1))
            pos += blk.size
        flat = np.concatenate(chunks) if chunks else np.zeros(0, complex)
        R = np.zeros((n, n, n), dtype=complex)
        for a, b in itertools.product(range(n), repeat=2):
            for c in self.ring.fusion_channels(a, b):
                R[a, b, c] = self.R[(a, b, c)][0, 0]
        chptr, chidx = _kernels.channel_csr(N)
        base, pos = _kernels.build_tables(N, off, msz)
        return N, chptr, chidx, base, pos, flat, R


# ---------------------------------------------------------------------------
# axiom checks


def _F_entry(cat: CategoryData, a, b, c, d, left, right) -> complex:
    L, li, Rb, ri = cat.fbases(a, b, c, d)
    if left not in li or right not in ri:
        return 0j
    return complex(cat.F[(a, b, c, d)][li[left], ri[right]])


def pentagon_residual_general(cat: CategoryData) -> float:
    """Pentagon residual with explicit multiplicity indices (pure Python)."""
    N, n = cat.N, cat.rank
    worst = 0.0
    rng = range(n)
    for a, b, c, d in itertools.product(rng, repeat=4):
        for e in rng:
            # left side: ((ab)_f c)_g d -> e over all (f,α), (g,β), γ and (h,δ), (k,ζ), η
            for f in cat.ring.fusion_channels(a, b):
                for g in cat.ring.fusion_channels(f, c):
                    if not N[g, d, e]:
                        continue
                    for h in cat.ring.fusion_channels(c, d):
                        for k in cat.ring.fusion_channels(b, h):
                            if not N[a, k, e]:
                                continue
                            for al, be, ga, de, ze, et in itertools.product(
                                    range(N[a, b, f]), range(N[f, c, g]), range(N[g, d, e]),
                                    range(N[c, d, h]), range(N[b, h, k]), range(N[a, k, e])):
                                lhs = 0j
                                for ep in range(N[f, h, e]):
                                    lhs += (_F_entry(cat, f, c, d, e, (g, be, ga), (h, de, ep))
                                            * _F_entry(cat, a, b, h, e, (f, al, ep), (k, ze, et)))
                                rhs = 0j
                                for l in cat.ring.fusion_channels(b, c):
                                    if not (N[a, l, g] and N[l, d, k]):
                                        continue
                                    for ka, la, mu in itertools.product(
                                            range(N[b, c, l]), range(N[a, l, g]), range(N[l, d, k])):
                                        rhs += (_F_entry(cat, a, b, c, g, (f, al, be), (l, ka, la))
                                                * _F_entry(cat, a, l, d, e, (g, la, ga), (k, mu, et))
                                                * _F_entry(cat, b, c, d, k, (l, ka, mu), (h, de, ze)))
                                worst = max(worst, abs(lhs - rhs))
    return worst


def hexagon_residual_general(cat: CategoryData) -> float:
    """Both hexagons with multiplicities, as matrix identities on vertex spaces."""
    N, n = cat.N, cat.rank
    worst = 0.0
    for a, b, c, d in itertools.product(range(n), repeat=4):
        # first: basis |a (bc)_f^γ⟩_d^δ ; build both sides as maps from (f,γ,δ) of
        # Hom(d, a(bc)) to (h,·,·) of Hom(d, (bc)a) expressed as |(bc)_h a⟩
        Lr = fbasis_right(N, a, b, c, d)  # (f,γ,δ) with f in bc, d in af
        Lt = fbasis_left(N, b, c, a, d)  # (h,κ,λ) with h in bc, d in ha
        if Lr and Lt:
            lhs = np.zeros((len(Lr), len(Lt)), dtype=complex)
            for i, (f, ga, de) in enumerate(Lr):
                for j, (h, ka, la) in enumerate(Lt):
                    if h == f and ka == ga:
                        lhs[i, j] = cat.R[(a, f, d)][de, la]
            rhs = np.zeros_like(lhs)
            for i, (f, ga, de) in enumerate(Lr):
                for j, (h, ka, la) in enumerate(Lt):
                    s = 0j
                    for e in cat.ring.fusion_channels(a, b):
                        for g in cat.ring.fusion_channels(a, c):
                            if not (N[e, c, d] and N[b, g, d]):
                                continue
                            for al, be, al2, ga2, de2 in itertools.product(
                                    range(N[a, b, e]), range(N[e, c, d]), range(N[b, a, e]),
                                    range(N[a, c, g]), range(N[b, g, d])):
                                for ga3 in range(N[c, a, g]):
                                    s += (np.conj(_F_entry(cat, a, b, c, d, (e, al, be), (f, ga, de)))
                                          * cat.R[(a, b, e)][al, al2]
                                          * _F_entry(cat, b, a, c, d, (e, al2, be), (g, ga2, de2))
                                          * cat.R[(a, c, g)][ga2, ga3]
                                          * np.conj(_F_entry(cat, b, c, a, d, (h, ka, la), (g, ga3, de2))))
                    rhs[i, j] = s
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        # second: basis |(ab)_e c⟩_d, target |c (ab)_h⟩_d
        Ll = fbasis_left(N, a, b, c, d)
        Lt2 = fbasis_right(N, c, a, b, d)
        if Ll and Lt2:
            lhs = np.zeros((len(Ll), len(Lt2)), dtype=complex)
            for i, (e, al, be) in enumerate(Ll):
                for j, (h, ka, la) in enumerate(Lt2):
                    if h == e and ka == al:
                        lhs[i, j] = cat.R[(e, c, d)][be, la]
            rhs = np.zeros_like(lhs)
            for i, (e, al, be) in enumerate(Ll):
                for j, (h, ka, la) in enumerate(Lt2):
                    s = 0j
                    for f in cat.ring.fusion_channels(b, c):
                        for g in cat.ring.fusion_channels(a, c):
                            if not (N[a, f, d] and N[g, b, d]):
                                continue
                            for ga, de, ga2, de2, ga3 in itertools.product(
                                    range(N[b, c, f]), range(N[a, f, d]), range(N[c, b, f]),
                                    range(N[g, b, d]), range(N[a, c, g])):
                                for ga4 in range(N[c, a, g]):
                                    s += (_F_entry(cat, a, b, c, d, (e, al, be), (f, ga, de))
                                          * cat.R[(b, c, f)][ga, ga2]
                                          * np.conj(_F_entry(cat, a, c, b, d, (g, ga3, de2), (f, ga2, de)))
                                          * cat.R[(a, c, g)][ga3, ga4]
                                          * _F_entry(cat, c, a, b, d, (g, ga4, de2), (h, ka, la)))
                    rhs[i, j] = s
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def _unitarity_residuals(cat: CategoryData) -> tuple[float, float, float]:
    fu = 0.0
    unit_norm = 0.0
    for q in cat.quads():
        blk = cat.F[q]
        fu = max(fu, float(np.abs(blk @ blk.conj().T - np.eye(blk.shape[0])).max()))
        if 0 in q[:3]:
            unit_norm = max(unit_norm, float(np.abs(blk - np.eye(blk.shape[0])).max()))
    ru = 0.0
    for a, b in itertools.product(range(cat.rank), repeat=2):
        for c in cat.ring.fusion_channels(a, b):
            blk = cat.R[(a, b, c)]
            ru = max(ru, float(np.abs(blk @ blk.conj().T - np.eye(blk.shape[0])).max()))
            if a == 0 or b == 0:
                unit_norm = max(unit_norm, float(np.abs(blk - np.eye(blk.shape[0])).max()))
    return fu, ru, unit_norm


def verify_axioms(cat: CategoryData, tol: float = DEFAULT_TOL, general: bool | None = None) -> CheckReport:
    """Check the coherence equations and the modular relations.

    Gated residuals: F/R unitarity, unit normalization, pentagon, both
    hexagons for the braiding and its inverse, fusion-ring integrality.  The
    relations of :func:`check_modular_data` for the modular data derived from
    F and R go to ``report.info``; the flag ``modular`` is true when they all
    hold.  A braided but degenerate category therefore passes with
    ``modular=False``.
    """
    if general is None:
        general = not cat.multiplicity_free
    fu, ru, un = _unitarity_residuals(cat)
    res = {"F_unitary": fu, "R_unitary": ru, "unit_normalization": un}
    res["fusion_ring"] = float(sum(cat.ring.invariant_residuals().values()))
    if general:
        res["pentagon"] = pentagon_residual_general(cat)
        res["hexagon"] = hexagon_residual_general(cat)
        res["hexagon_inverse"] = hexagon_residual_general(reverse_braiding(cat))
    else:
        N, chptr, chidx, base, pos, flat, R = cat._packed
        res["pentagon"] = float(_kernels.pentagon_residual(N, chptr, chidx, base, pos, flat)[0])
        res["hexagon"] = float(_kernels.hexagon_residual(N, chptr, chidx, base, pos, flat, R))
        Rinv = np.conj(R.transpose(1, 0, 2))
        res["hexagon_inverse"] = float(_kernels.hexagon_residual(N, chptr, chidx, base, pos, flat, Rinv))
    rep = CheckReport(res, tol)
    mod = check_modular_data(cat.ring, cat.md, tol)
    rep.info.update(mod.residuals)
    rep.flags["modular"] = mod.ok
    return rep


# ---------------------------------------------------------------------------
# constructions


def reverse_braiding(cat: CategoryData) -> CategoryData:
    """Same fusion and F, braiding replaced by ε'(a, b) = ε(b, a)*."""
    src = cat.R
    R = _LazyBlocks(lambda key: np.ascontiguousarray(src[(key[1], key[0], key[2])].conj().T))
    if not isinstance(src, _LazyBlocks):
        for (a, b, c) in list(src):
            R[(a, b, c)]
    name = cat.name[4:-1] if cat.name.startswith("rev(") else f"rev({cat.name})"
    factors = None
    if cat.factors is not None:
        factors = tuple(reverse_braiding(f) for f in cat.factors)
    out = CategoryData(cat.ring, cat.F, R, name, factors)
    out._fbases = cat._fbases
    return out


def _product_ring(A: FusionRingData, B: FusionRingData) -> FusionRingData:
    nb = B.rank
    N = np.einsum("ace,bdf->abcdef", A.N, B.N).reshape(A.rank * nb, A.rank * nb, A.rank * nb)
    dual = (A.dual[:, None] * nb + B.dual[None, :]).reshape(-1)
    simples = tuple(f"({x},{y})" for x in A.simples for y in B.simples)
    return FusionRingData(simples, dual, N)


def deligne_product(A: CategoryData, B: CategoryData) -> CategoryData:
    """Deligne product; simple (a, b) sits at index ``a * rank(B) + b``."""
    nb = B.rank
    ring = _product_ring(A.ring, B.ring)
    NB = B.N

    def split(x):
        return divmod(x, nb)

    def make_F(key):
        a, b, c, d = key
        (aA, aB), (bA, bB), (cA, cB), (dA, dB) = map(split, key)
        L = fbasis_left(ring.N, a, b, c, d)
        Rb = fbasis_right(ring.N, a, b, c, d)
        if not L:
            raise KeyError(key)
        LA, liA, RA, riA = A.fbases(aA, bA, cA, dA)
        LB, liB, RB, riB = B.fbases(aB, bB, cB, dB)
        K = np.kron(A.F[(aA, bA, cA, dA)], B.F[(aB, bB, cB, dB)])
        mB_l, mB_r = len(LB), len(RB)
        rows = []
        for e, al, be in L:
            eA, eB = split(e)
            alA, alB = divmod(al, NB[aB, bB, eB])
            beA, beB = divmod(be, NB[eB, cB, dB])
            rows.append(liA[(eA, alA, beA)] * mB_l + liB[(eB, alB, beB)])
        cols = []
        for f, ga, de in Rb:
            fA, fB = split(f)
            gaA, gaB = divmod(ga, NB[bB, cB, fB])
            deA, deB = divmod(de, NB[aB, fB, dB])
            cols.append(riA[(fA, gaA, deA)] * mB_r + riB[(fB, gaB, deB)])
        return K[np.ix_(rows, cols)]

    def make_R(key):
        a, b, c = key
        (aA, aB), (bA, bB), (cA, cB) = map(split, key)
        if not ring.N[a, b, c]:
            raise KeyError(key)
        return np.kron(A.R[(aA, bA, cA)], B.R[(aB, bB, cB)])

    return CategoryData(ring, _LazyBlocks(make_F), _LazyBlocks(make_R),
                        f"{A.name}⊠{B.name}", factors=(A, B))


def subcategory(cat: CategoryData, labels: Sequence[int], names: Sequence[str] | None = None,
                name: str = "") -> CategoryData:
    """Restriction to a fusion-closed set of simples (order as given, unit first)."""
    labels = [int(x) for x in labels]
    pos = {x: i for i, x in enumerate(labels)}
    m = len(labels)
    sub = np.ix_(labels, labels, labels)
    N = cat.N[sub]
    if N.sum() != sum(cat.N[a, b].sum() for a in labels for b in labels):
        raise ValueError("label set is not closed under fusion")
    dual = [pos[int(cat.dual[x])] for x in labels]
    ring = FusionRingData(tuple(names) if names else tuple(cat.simples[x] for x in labels), dual, N)
    F = {}
    for q in admissible_quads(N):
        a, b, c, d = (labels[i] for i in q)
        L, li, Rb, ri = cat.fbases(a, b, c, d)
        Ls = fbasis_left(N, *q)
        Rs = fbasis_right(N, *q)
        rows = [li[(labels[e], al, be)] for e, al, be in Ls]
        cols = [ri[(labels[f], ga, de)] for f, ga, de in Rs]
        F[q] = np.ascontiguousarray(cat.F[(a, b, c, d)][np.ix_(rows, cols)])
    R = {}
    for a, b in itertools.product(range(m), repeat=2):
        for c in np.nonzero(N[a, b])[0]:
            R[(a, b, int(c))] = np.array(cat.R[(labels[a], labels[b], labels[int(c)])])
    return CategoryData(ring, F, R, name or cat.name)


# ---------------------------------------------------------------------------
# builtin families


def trivial_category() -> CategoryData:
    ring = FusionRingData(("1",), [0], np.ones((1, 1, 1), dtype=np.int64))
    return CategoryData(ring, {(0, 0, 0, 0): np.eye(1, dtype=complex)},
                        {(0, 0, 0): np.eye(1, dtype=complex)}, "trivial")


def _mixed_radix(orders: Sequence[int]):
    elems = list(itertools.product(*[range(n) for n in orders]))
    index = {g: i for i, g in enumerate(elems)}
    return elems, index


def pointed(orders: Sequence[int] | int, k: Sequence[int] | None = None,
            cross: np.ndarray | None = None, allow_degenerate: bool = False) -> CategoryData:
    """Pointed category over A = ⊕ Z_{n_i}.

    The quadratic form is ``q(a) = exp(2πi (Σ_i k_i a_i² / (2 n_i) + Σ_{i<j}
    cross[i, j] a_i a_j / gcd(n_i, n_j)))``; each ``k_i n_i`` must be even.
    By default ``k_i = 2`` for odd ``n_i`` and 1 for even ``n_i``.
    """
    if isinstance(orders, (int, np.integer)):
        orders = (int(orders),)
    orders = tuple(int(n) for n in orders)
    r = len(orders)
    if k is None:
        k = tuple(2 if n % 2 else 1 for n in orders)
    k = tuple(int(x) for x in k)
    if any((ki * ni) % 2 for ki, ni in zip(k, orders)):
        raise DegenerateForm("k_i n_i must be even for a well-defined quadratic form")
    cross = np.zeros((r, r), dtype=np.int64) if cross is None else np.asarray(cross, dtype=np.int64)
    elems, index = _mixed_radix(orders)
    n = len(elems)

    def add(g, h):
        return tuple((x + y) % m for x, y, m in zip(g, h, orders))

    def phase_R(g, h):
        t = sum(ki * gi * hi / (2 * ni) for ki, gi, hi, ni in zip(k, g, h, orders))
        for i in range(r):
            for j in range(i + 1, r):
                t += cross[i, j] * g[i] * h[j] / math.gcd(orders[i], orders[j])
        return cmath.exp(2j * math.pi * t)

    def phase_F(g, h, l):
        t = sum(ki * gi * (hi + li - (hi + li) % ni) / ni
                for ki, gi, hi, li, ni in zip(k, g, h, l, orders))
        return cmath.exp(1j * math.pi * t)

    N = np.zeros((n, n, n), dtype=np.int64)
    dual = np.zeros(n, dtype=np.int64)
    for g in elems:
        dual[index[g]] = index[tuple((-x) % m for x, m in zip(g, orders))]
        for h in elems:
            N[index[g], index[h], index[add(g, h)]] = 1
    if r == 1:
        simples = tuple(str(g[0]) for g in elems)
    else:
        simples = tuple("(" + ",".join(map(str, g)) + ")" for g in elems)
    ring = FusionRingData(simples, dual, N)
    F, R = {}, {}
    for g, h, l in itertools.product(elems, repeat=3):
        d = add(add(g, h), l)
        F[(index[g], index[h], index[l], index[d])] = np.array([[phase_F(g, h, l)]])
    for g, h in itertools.product(elems, repeat=2):
        R[(index[g], index[h], index[add(g, h)])] = np.array([[phase_R(g, h)]])
    label = "pointed-" + "x".join(f"z{m}" for m in orders)
    if any(ki not in (1, 2) for ki in k) or cross.any():
        label += f"[k={','.join(map(str, k))}]"
    cat = CategoryData(ring, F, R, label)
    cat.group = (orders, elems, index)
    if not allow_degenerate and not pointed_is_nondegenerate(cat):
        raise DegenerateForm(f"quadratic form of {label} is degenerate")
    return cat


def pointed_is_nondegenerate(cat: CategoryData) -> bool:
    """Discriminant test: the associated bicharacter has trivial radical."""
    n = cat.rank
    b = np.ones((n, n), dtype=complex)
    for g in range(n):
        for h in range(n):
            c = int(np.nonzero(cat.N[g, h])[0][0])
            b[g, h] = cat.R[(g, h, c)][0, 0] * cat.R[(h, g, c)][0, 0]
    radical = [g for g in range(n) if np.allclose(b[g], 1.0, atol=1e-9)]
    return radical == [0]


def ising() -> CategoryData:
    """Ising category with simples 1, sigma, psi and twist e^{iπ/8} on sigma."""
    one, s, p = 0, 1, 2
    N = np.zeros((3, 3, 3), dtype=np.int64)
    rules = {(one, x): [x] for x in range(3)}
    rules.update({(s, s): [one, p], (s, p): [s], (p, s): [s], (p, p): [one]})
    for x in range(3):
        rules[(x, one)] = [x]
    for (a, b), cs in rules.items():
        for c in cs:
            N[a, b, c] = 1
    ring = FusionRingData(("1", "sigma", "psi"), [0, 1, 2], N)
    F = {}
    for q in admissible_quads(N):
        m = len(fbasis_left(N, *q))
        F[q] = np.eye(m, dtype=complex)
    F[(s, s, s, s)] = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    F[(p, s, p, s)] = -np.eye(1, dtype=complex)
    F[(s, p, s, p)] = -np.eye(1, dtype=complex)
    R = {}
    for a, b in itertools.product(range(3), repeat=2):
        for c in np.nonzero(N[a, b])[0]:
            R[(a, b, int(c))] = np.eye(1, dtype=complex)
    R[(s, s, one)] = np.array([[cmath.exp(-1j * math.pi / 8)]])
    R[(s, s, p)] = np.array([[cmath.exp(3j * math.pi / 8)]])
    R[(s, p, s)] = np.array([[-1j]])
    R[(p, s, s)] = np.array([[-1j]])
    R[(p, p, one)] = np.array([[-1.0 + 0j]])
    return CategoryData(ring, F, R, "ising")


def _su2_fusion(k: int) -> np.ndarray:
    n = k + 1
    a, b, c = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    ok = (np.abs(a - b) <= c) & (c <= a + b) & ((a + b + c) % 2 == 0) & (a + b + c <= 2 * k)
    return ok.astype(np.int64)


def su2(k: int) -> CategoryData:
    """SU(2) at level k; simple j is twice the spin, F from the unitary q-6j symbols."""
    if not 1 <= k <= MAX_SU2_LEVEL:
        raise UnsupportedLevel(f"level {k} outside 1..{MAX_SU2_LEVEL}")
    N = _su2_fusion(k)
    n = k + 1
    ring = FusionRingData(tuple(str(j) for j in range(n)), np.arange(n), N)
    x = math.pi / (k + 2)
    qint = np.array([math.sin(m * x) / math.sin(x) for m in range(2 * k + 6)])
    qint[0] = 1.0  # unused; keeps cumulative product well defined
    qfact = np.cumprod(np.concatenate([[1.0], qint[1:]]))

    def fact(m):
        return qfact[m]

    quads = list(admissible_quads(N))
    rows = []
    sizes = []
    for a, b, c, d in quads:
        L = fbasis_left(N, a, b, c, d)
        Rb = fbasis_right(N, a, b, c, d)
        sizes.append(len(L))
        for e, _, _ in L:
            for f, _, _ in Rb:
                rows.append((a, b, c, d, e, f))
    A = np.array(rows, dtype=np.int64)
    a, b, c, d, e, f = A.T

    def delta(p, q_, r):
        return np.sqrt(fact((p + q_ - r) // 2) * fact((p - q_ + r) // 2) * fact((-p + q_ + r) // 2)
                       / fact((p + q_ + r) // 2 + 1))

    al = np.stack([(a + b + e) // 2, (e + c + d) // 2, (b + c + f) // 2, (a + f + d) // 2])
    be = np.stack([(a + b + c + d) // 2, (a + e + c + f) // 2, (b + e + d + f) // 2])
    zmin, zmax = al.max(axis=0), be.min(axis=0)
    total = np.zeros(len(A))
    for z in range(int(zmin.min()), int(zmax.max()) + 1):
        live = (z >= zmin) & (z <= zmax)
        if not live.any():
            continue
        zz = np.where(live, z, zmin)
        den = np.prod(fact(zz[None, :] - al), axis=0) * np.prod(fact(be - zz[None, :]), axis=0)
        term = (-1.0) ** zz * fact(zz + 1) / den
        total += np.where(live, term, 0.0)
    sixj = total * delta(a, b, e) * delta(e, c, d) * delta(b, c, f) * delta(a, f, d)
    vals = (-1.0) ** ((a + b + c + d) // 2) * np.sqrt(qint[e + 1] * qint[f + 1]) * sixj
    F = {}
    pos = 0
    for q, m in zip(quads, sizes):
        F[q] = vals[pos:pos + m * m].reshape(m, m).astype(complex)
        pos += m * m
    R = {}
    for a_, b_ in itertools.product(range(n), repeat=2):
        for c_ in np.nonzero(N[a_, b_])[0]:
            c_ = int(c_)
            ph = (c_ * (c_ + 2) - a_ * (a_ + 2) - b_ * (b_ + 2)) / (4 * (k + 2))
            R[(a_, b_, c_)] = np.array([[(-1) ** ((c_ - a_ - b_) // 2 % 2) * cmath.exp(1j * math.pi * ph)]])
    return CategoryData(ring, F, R, f"su2-{k}")


def fibonacci() -> CategoryData:
    """Integer-spin part of SU(2) level 3: simples 1 and tau."""
    return subcategory(su2(3), [0, 2], names=("1", "tau"), name="fibonacci")


@dataclass(frozen=True)
class BuiltinSpec:
    family: str
    params: tuple


def parse_builtin(spec: str) -> BuiltinSpec:
    """Parse ``builtin:<family>[-<params>]`` (the prefix is optional)."""
    s = spec.strip()
    if s.startswith("builtin:"):
        s = s[len("builtin:"):]
    s = s.lower()
    if s in ("fibonacci", "fib"):
        return BuiltinSpec("fibonacci", ())
    if s == "ising":
        return BuiltinSpec("ising", ())
    if s == "trivial":
        return BuiltinSpec("trivial", ())
    if s.startswith("su2-"):
        return BuiltinSpec("su2", (int(s[4:]),))
    if s.startswith("pointed-"):
        parts = s[len("pointed-"):].split("x")
        if not all(p.startswith("z") and p[1:].isdigit() for p in parts):
            raise ValueError(f"bad pointed spec {spec!r}")
        return BuiltinSpec("pointed", tuple(int(p[1:]) for p in parts))
    raise ValueError(f"unknown builtin category {spec!r}")


_BUILTIN_CACHE: dict[str, CategoryData] = {}


def builtin_category(spec: str) -> CategoryData:
    """Builtin category from its short name, e.g. ``builtin:su2-4`` or ``pointed-z3``."""
    b = parse_builtin(spec)
    key = f"{b.family}{b.params}"
    if key in _BUILTIN_CACHE:
        return _BUILTIN_CACHE[key]
    if b.family == "fibonacci":
        cat = fibonacci()
    elif b.family == "ising":
        cat = ising()
    elif b.family == "trivial":
        cat = trivial_category()
    elif b.family == "su2":
        cat = su2(*b.params)
    else:
        cat = pointed(b.params)
    _BUILTIN_CACHE[key] = cat
    return cat


BUILTIN_NAMES = ("trivial", "fibonacci", "ising", "su2-<k>", "pointed-z<n>[x z<m>...]")


# ---------------------------------------------------------------------------
# file format


def category_to_json(cat: CategoryData) -> dict:
    N = cat.N
    out = {
        "simples": list(cat.simples),
        "dual": [int(x) for x in cat.dual],
        "N": [[int(a), int(b), int(c), int(N[a, b, c])] for a, b, c in zip(*np.nonzero(N))],
        "F": [],
        "R": [],
    }
    for q in cat.quads():
        L, _, Rb, _ = cat.fbases(*q)
        blk = cat.F[q]
        for i, (e, al, be) in enumerate(L):
            for j, (f, ga, de) in enumerate(Rb):
                v = complex(blk[i, j])
                if v != 0:
                    out["F"].append([*q, e, f, al, be, ga, de, v.real, v.imag])
    for a, b in itertools.product(range(cat.rank), repeat=2):
        for c in cat.ring.fusion_channels(a, b):
            blk = cat.R[(a, b, c)]
            for i in range(blk.shape[0]):
                for j in range(blk.shape[1]):
                    v = complex(blk[i, j])
                    if v != 0:
                        out["R"].append([a, b, c, i, j, v.real, v.imag])
    if cat.name:
        out["name"] = cat.name
    return out


def category_from_json(doc: dict) -> CategoryData:
    simples = doc["simples"]
    n = len(simples)
    N = np.zeros((n, n, n), dtype=np.int64)
    for a, b, c, cnt in doc["N"]:
        N[a, b, c] = cnt
    ring = FusionRingData(tuple(simples), doc["dual"], N)
    F = {}
    for q in admissible_quads(N):
        m = len(fbasis_left(N, *q))
        F[q] = np.zeros((m, m), dtype=complex)
    R = {}
    for a, b in itertools.product(range(n), repeat=2):
        for c in np.nonzero(N[a, b])[0]:
            R[(a, b, int(c))] = np.zeros((N[a, b, c], N[a, b, c]), dtype=complex)
    cat = CategoryData(ring, F, R, doc.get("name", ""))
    for a, b, c, d, e, f, al, be, ga, de, re, im in doc["F"]:
        _, li, _, ri = cat.fbases(a, b, c, d)
        F[(a, b, c, d)][li[(e, al, be)], ri[(f, ga, de)]] = complex(re, im)
    for a, b, c, al, be, re, im in doc["R"]:
        R[(a, b, c)][al, be] = complex(re, im)
    return cat
