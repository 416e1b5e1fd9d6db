"""Morphism calculus in tree bases.

An object is a formal direct sum of tensor words; a word is a tuple of simple
labels and the empty word is the unit.  For each simple ``s`` the space
Hom(s, X) gets the basis obtained by concatenating, word by word, the
left-nested splitting trees of that word, each word's trees sorted
lexicographically.  A morphism X -> Y is stored as one matrix per simple,
``blocks[s]`` of shape ``(mult_s(Y), mult_s(X))``, acting on these bases.

Tensor products and braidings are evaluated through the unitary that
re-expresses pairs of trees fused at a vertex in the left-nested basis of the
concatenated word.  Those unitaries are cached per category.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NotAProjection, ShapeMismatch
from .mtc import BraidSide, CategoryData

Word = tuple[int, ...]
Tree = tuple[tuple[int, int], ...]

PROJ_TOL = 1e-6
RANK_TOL = 1e-6


# ---------------------------------------------------------------------------
# trees


def _cache(cat: CategoryData, name: str) -> dict:
    c = cat._cache.get(name)
    if c is None:
        c = cat._cache[name] = {}
    return c


def word_trees(cat: CategoryData, word: Word) -> dict[int, list[Tree]]:
    """Left-nested splitting trees of `word`, grouped by total charge."""
    cache = _cache(cat, "trees")
    got = cache.get(word)
    if got is not None:
        return got
    if len(word) == 0:
        out = {0: [()]}
    elif len(word) == 1:
        out = {word[0]: [()]}
    else:
        prev = word_trees(cat, word[:-1])
        c = word[-1]
        N = cat.N
        acc: dict[int, list[Tree]] = {}
        for e, trees in prev.items():
            for s in np.nonzero(N[e, c])[0].tolist():
                for mu in range(N[e, c, s]):
                    acc.setdefault(s, []).extend(t + ((s, mu),) for t in trees)
        out = {s: sorted(v) for s, v in sorted(acc.items())}
    cache[word] = out
    return out


def tree_index(cat: CategoryData, word: Word) -> dict[int, dict[Tree, int]]:
    cache = _cache(cat, "tindex")
    got = cache.get(word)
    if got is None:
        got = {s: {t: i for i, t in enumerate(ts)} for s, ts in word_trees(cat, word).items()}
        cache[word] = got
    return got


def word_mult(cat: CategoryData, word: Word) -> np.ndarray:
    m = np.zeros(cat.rank, dtype=np.int64)
    for s, ts in word_trees(cat, word).items():
        m[s] = len(ts)
    return m


# ---------------------------------------------------------------------------
# objects


class ObjectExpr:
    """Direct sum of tensor words over a fixed category."""

    __slots__ = ("cat", "words", "_mult", "_offsets")

    def __init__(self, cat: CategoryData, words: Iterable[Sequence[int]]):
        self.cat = cat
        self.words: tuple[Word, ...] = tuple(tuple(int(x) for x in w) for w in words)
        self._mult = None
        self._offsets: dict = {}

    # constructors
    @classmethod
    def unit(cls, cat: CategoryData) -> "ObjectExpr":
        return cls(cat, [()])

    @classmethod
    def simple(cls, cat: CategoryData, a) -> "ObjectExpr":
        a = cat.ring.index(a)
        return cls(cat, [()] if a == 0 else [(a,)])

    @classmethod
    def word(cls, cat: CategoryData, letters: Sequence) -> "ObjectExpr":
        return cls(cat, [tuple(cat.ring.index(x) for x in letters)])

    @classmethod
    def from_mult(cls, cat: CategoryData, mult) -> "ObjectExpr":
        """Canonical object ⊕_s m_s [s], summands sorted by label, unit as ()."""
        words = []
        for s, m in enumerate(mult):
            words.extend([() if s == 0 else (s,)] * int(m))
        return cls(cat, words)

    @classmethod
    def direct_sum(cls, objs: Sequence["ObjectExpr"]) -> "ObjectExpr":
        cat = objs[0].cat
        return cls(cat, [w for o in objs for w in o.words])

    # structure
    @property
    def mult(self) -> np.ndarray:
        if self._mult is None:
            m = np.zeros(self.cat.rank, dtype=np.int64)
            for w in self.words:
                m += word_mult(self.cat, w)
            m.setflags(write=False)
            self._mult = m
        return self._mult

    @property
    def dim(self) -> float:
        return float(self.mult @ self.cat.dims)

    @property
    def is_canonical(self) -> bool:
        return self.words == ObjectExpr.from_mult(self.cat, self.mult).words

    def offsets(self, s: int) -> list[tuple[int, int, int]]:
        """(word position, row offset, count) for the rows of block `s`."""
        got = self._offsets.get(s)
        if got is None:
            got, pos = [], 0
            for p, w in enumerate(self.words):
                k = len(word_trees(self.cat, w).get(s, ()))
                if k:
                    got.append((p, pos, k))
                    pos += k
            self._offsets[s] = got
        return got

    def tensor(self, other: "ObjectExpr") -> "ObjectExpr":
        _same_cat(self, other)
        return ObjectExpr(self.cat, [w + v for w in self.words for v in other.words])

    __matmul__ = tensor

    def __add__(self, other: "ObjectExpr") -> "ObjectExpr":
        _same_cat(self, other)
        return ObjectExpr(self.cat, self.words + other.words)

    def conj(self) -> "ObjectExpr":
        dual = self.cat.dual
        return ObjectExpr(self.cat, [tuple(int(dual[x]) for x in reversed(w)) for w in self.words])

    def __eq__(self, other) -> bool:
        return isinstance(other, ObjectExpr) and other.cat is self.cat and other.words == self.words

    def __hash__(self) -> int:
        return hash((id(self.cat), self.words))

    def __repr__(self) -> str:
        names = self.cat.simples
        parts = ["".join(names[x] if len(w) == 1 else f"{names[x]}." for x in w).rstrip(".") or names[0]
                 for w in self.words]
        return "ObjectExpr(" + " ⊕ ".join(parts) + ")" if parts else "ObjectExpr(0)"

    def label(self) -> str:
        """Readable multiplicity form such as ``1 ⊕ 2·tau``."""
        names = self.cat.simples
        terms = [(f"{m}·" if m > 1 else "") + names[s] for s, m in enumerate(self.mult) if m]
        return " ⊕ ".join(terms) or "0"


def _same_cat(x: ObjectExpr, y: ObjectExpr) -> None:
    if x.cat is not y.cat:
        raise ShapeMismatch("objects live in different categories")


def hom_dim(X: ObjectExpr, Y: ObjectExpr) -> int:
    _same_cat(X, Y)
    return int(X.mult @ Y.mult)


# ---------------------------------------------------------------------------
# morphisms


class Morphism:
    """Family of matrices ``blocks[s]`` in Hom(s, dst) x Hom(s, src)^*."""

    __slots__ = ("src", "dst", "blocks")

    def __init__(self, src: ObjectExpr, dst: ObjectExpr, blocks: dict[int, np.ndarray] | None = None):
        _same_cat(src, dst)
        self.src, self.dst = src, dst
        full = {}
        ms, md = src.mult, dst.mult
        blocks = blocks or {}
        for s in range(src.cat.rank):
            if ms[s] and md[s]:
                b = blocks.get(s)
                if b is None:
                    b = np.zeros((md[s], ms[s]), dtype=complex)
                else:
                    b = np.asarray(b, dtype=complex)
                    if b.shape != (md[s], ms[s]):
                        raise ShapeMismatch(f"block {s} has shape {b.shape}, expected {(md[s], ms[s])}")
                full[s] = b
        self.blocks = full

    @property
    def cat(self) -> CategoryData:
        return self.src.cat

    # constructors
    @classmethod
    def identity(cls, X: ObjectExpr) -> "Morphism":
        return cls(X, X, {s: np.eye(m, dtype=complex) for s, m in enumerate(X.mult) if m})

    @classmethod
    def zero(cls, X: ObjectExpr, Y: ObjectExpr) -> "Morphism":
        return cls(X, Y)

    @classmethod
    def scalar(cls, cat: CategoryData, value: complex) -> "Morphism":
        U = ObjectExpr.unit(cat)
        return cls(U, U, {0: np.array([[value]], dtype=complex)})

    # algebra
    def compose(self, f: "Morphism") -> "Morphism":
        """``self ∘ f``."""
        if f.dst != self.src:
            raise ShapeMismatch(f"cannot compose: {f.dst!r} vs {self.src!r}")
        out = {s: self.blocks[s] @ f.blocks[s] for s in f.blocks if s in self.blocks}
        return Morphism(f.src, self.dst, out)

    __matmul__ = compose

    def adjoint(self) -> "Morphism":
        return Morphism(self.dst, self.src, {s: b.conj().T for s, b in self.blocks.items()})

    @property
    def H(self) -> "Morphism":
        return self.adjoint()

    def tensor(self, g: "Morphism") -> "Morphism":
        return tensor(self, g)

    def _check_like(self, other: "Morphism") -> None:
        if other.src != self.src or other.dst != self.dst:
            raise ShapeMismatch("morphisms have different source or target")

    def __add__(self, other: "Morphism") -> "Morphism":
        self._check_like(other)
        return Morphism(self.src, self.dst, {s: b + other.blocks[s] for s, b in self.blocks.items()})

    def __sub__(self, other: "Morphism") -> "Morphism":
        self._check_like(other)
        return Morphism(self.src, self.dst, {s: b - other.blocks[s] for s, b in self.blocks.items()})

    def __mul__(self, c: complex) -> "Morphism":
        return Morphism(self.src, self.dst, {s: c * b for s, b in self.blocks.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "Morphism":
        return self * -1.0

    def max_abs(self) -> float:
        return max((float(np.abs(b).max()) for b in self.blocks.values() if b.size), default=0.0)

    def distance(self, other: "Morphism") -> float:
        return (self - other).max_abs()

    def trace(self) -> complex:
        """Categorical trace Σ_s d_s tr(f_s) for endomorphisms."""
        if self.src != self.dst:
            raise ShapeMismatch("trace of a non-endomorphism")
        d = self.cat.dims
        return complex(sum(d[s] * np.trace(b) for s, b in self.blocks.items()))

    def value(self) -> complex:
        """Scalar of an endomorphism of the unit."""
        if self.src.mult.sum() != 1 or self.dst.mult.sum() != 1 or 0 not in self.blocks:
            raise ShapeMismatch("not a scalar morphism")
        return complex(self.blocks[0][0, 0])

    def retarget(self, src: ObjectExpr | None = None, dst: ObjectExpr | None = None) -> "Morphism":
        """Same blocks viewed between objects with identical multiplicities."""
        src = src or self.src
        dst = dst or self.dst
        if np.any(src.mult != self.src.mult) or np.any(dst.mult != self.dst.mult):
            raise ShapeMismatch("retarget needs equal multiplicities")
        return Morphism(src, dst, self.blocks)

    def __repr__(self) -> str:
        return f"Morphism({self.src.label()} -> {self.dst.label()})"


def compose(g: Morphism, f: Morphism) -> Morphism:
    return g.compose(f)


def identity(X: ObjectExpr) -> Morphism:
    return Morphism.identity(X)


# ---------------------------------------------------------------------------
# recoupling unitaries


def _pair_unitary(cat: CategoryData, W: Word, V: Word) -> dict[int, tuple[np.ndarray, dict]]:
    """For each s: matrix from split vectors (x, y, μ, i, j) to trees of W+V.

    Column (x, y, μ, i, j) is tree i of W at x and tree j of V at y fused by
    vertex μ into s; rows are the left-nested trees of the word W+V at s.
    """
    cache = _cache(cat, "pairU")
    key = (W, V)
    got = cache.get(key)
    if got is not None:
        return got
    N = cat.N
    tW, tV = word_trees(cat, W), word_trees(cat, V)
    WV = W + V

    def columns(s):
        cols = []
        for x in sorted(tW):
            for y in sorted(tV):
                for mu in range(N[x, y, s]):
                    for i in range(len(tW[x])):
                        for j in range(len(tV[y])):
                            cols.append((x, y, mu, i, j))
        return cols

    out = {}
    targets = word_trees(cat, WV)
    if not V or not W:
        for s, ts in targets.items():
            cols = columns(s)
            out[s] = (np.eye(len(ts), dtype=complex), {c: k for k, c in enumerate(cols)})
        cache[key] = out
        return out

    Vp, c = V[:-1], V[-1]
    prev = _pair_unitary(cat, W, Vp)
    tidx_new = tree_index(cat, WV)
    trees_prev = word_trees(cat, W + Vp)
    tidx_Vp = tree_index(cat, Vp)
    rowmaps: dict = {}

    def rowmap(g, s, beta):
        k = (g, s, beta)
        r = rowmaps.get(k)
        if r is None:
            tix = tidx_new[s]
            r = np.array([tix[t + ((s, beta),)] for t in trees_prev[g]], dtype=np.int64)
            rowmaps[k] = r
        return r

    for s, ts in targets.items():
        cols = columns(s)
        M = np.zeros((len(ts), len(cols)), dtype=complex)
        for col, (x, y, mu, i, j) in enumerate(cols):
            if len(V) == 1:
                f, jp, ga = 0, 0, 0
            else:
                tj = tV[y][j]
                ga = tj[-1][1]
                f = tj[-2][0] if len(V) >= 3 else V[0]
                jp = tidx_Vp[f][tj[:-1]]
            L, li, Rb, ri = cat.fbases(x, f, c, s)
            Fblk = cat.F[(x, f, c, s)]
            rcol = ri[(y, ga, mu)]
            for (g, al, be), lrow in li.items():
                coef = np.conj(Fblk[lrow, rcol])
                if coef == 0:
                    continue
                Pm, pcols = prev[g]
                M[rowmap(g, s, be), col] += coef * Pm[:, pcols[(x, f, al, i, jp)]]
        out[s] = (M, {cc: k for k, cc in enumerate(cols)})
    cache[key] = out
    return out


@dataclass
class _Split:
    """Global split basis of X⊗Y at one simple: U maps it to the tree basis."""

    U: np.ndarray
    base: dict  # (x, y, μ) -> first column
    mX: np.ndarray
    mY: np.ndarray


def _split(X: ObjectExpr, Y: ObjectExpr, s: int) -> _Split:
    cat = X.cat
    cache = _cache(cat, "split")
    key = (X.words, Y.words, s)
    got = cache.get(key)
    if got is not None:
        return got
    N = cat.N
    mX, mY = X.mult, Y.mult
    base, pos = {}, 0
    for x in np.nonzero(mX)[0].tolist():
        for y in np.nonzero(mY)[0].tolist():
            for mu in range(N[x, y, s]):
                base[(x, y, mu)] = pos
                pos += mX[x] * mY[y]
    XY = X.tensor(Y)
    total = int(XY.mult[s])
    U = np.zeros((total, pos), dtype=complex)
    if total:
        offX = {x: {p: o for p, o, _ in X.offsets(x)} for x in np.nonzero(mX)[0].tolist()}
        offY = {y: {q: o for q, o, _ in Y.offsets(y)} for y in np.nonzero(mY)[0].tolist()}
        nY = len(Y.words)
        for p0, r0, cnt in XY.offsets(s):
            p, q = divmod(p0, nY)
            M, cols = _pair_unitary(cat, X.words[p], Y.words[q])[s]
            gcols = np.empty(len(cols), dtype=np.int64)
            for (x, y, mu, i, j), k in cols.items():
                gcols[k] = base[(x, y, mu)] + (offX[x][p] + i) * mY[y] + offY[y][q] + j
            U[r0:r0 + cnt, gcols] = M
    got = _Split(U, base, mX, mY)
    cache[key] = got
    return got


def tensor(f: Morphism, g: Morphism) -> Morphism:
    """Monoidal product of morphisms."""
    _same_cat(f.src, g.src)
    X, Xp, Y, Yp = f.src, f.dst, g.src, g.dst
    src, dst = X.tensor(Y), Xp.tensor(Yp)
    out = {}
    N = f.cat.N
    for s in range(f.cat.rank):
        if not (src.mult[s] and dst.mult[s]):
            continue
        a, b = _split(X, Y, s), _split(Xp, Yp, s)
        Uh = a.U.conj().T
        acc = np.zeros((dst.mult[s], src.mult[s]), dtype=complex)
        for (x, y, mu), c0 in a.base.items():
            r0 = b.base.get((x, y, mu))
            if r0 is None or x not in f.blocks or y not in g.blocks:
                continue
            K = np.kron(f.blocks[x], g.blocks[y])
            acc += b.U[:, r0:r0 + K.shape[0]] @ K @ Uh[c0:c0 + K.shape[1], :]
        out[s] = acc
    return Morphism(src, dst, out)


def tensor_many(*fs: Morphism) -> Morphism:
    out = fs[0]
    for f in fs[1:]:
        out = tensor(out, f)
    return out


def braiding(X: ObjectExpr, Y: ObjectExpr, side: BraidSide = BraidSide.Plus) -> Morphism:
    """ε^±(X, Y) in Hom(X⊗Y, Y⊗X); the minus side is ε(Y, X)*."""
    if side is BraidSide.Minus:
        return braiding(Y, X, BraidSide.Plus).adjoint()
    cat = X.cat
    cache = _cache(cat, "braid")
    key = (X.words, Y.words)
    got = cache.get(key)
    if got is not None:
        return got
    src, dst = X.tensor(Y), Y.tensor(X)
    out = {}
    for s in range(cat.rank):
        if not src.mult[s]:
            continue
        a, b = _split(X, Y, s), _split(Y, X, s)
        mX, mY = a.mX, a.mY
        Rs = np.zeros((b.U.shape[1], a.U.shape[1]), dtype=complex)
        for (x, y, mu), c0 in a.base.items():
            Rblk = cat.R[(x, y, s)]
            ii, jj = np.meshgrid(np.arange(mX[x]), np.arange(mY[y]), indexing="ij")
            src_cols = (c0 + ii * mY[y] + jj).reshape(-1)
            for nu in range(Rblk.shape[1]):
                r0 = b.base[(y, x, nu)]
                dst_cols = (r0 + jj * mX[x] + ii).reshape(-1)
                Rs[dst_cols, src_cols] += Rblk[mu, nu]
        out[s] = b.U @ Rs @ a.U.conj().T
    got = Morphism(src, dst, out)
    cache[key] = got
    return got


# ---------------------------------------------------------------------------
# inclusions, direct sums


def inclusion(X: ObjectExpr, p: int) -> Morphism:
    """Isometry from the p-th word of X into X."""
    Xp = ObjectExpr(X.cat, [X.words[p]])
    blocks = {}
    for s, m in enumerate(Xp.mult):
        if not m:
            continue
        B = np.zeros((X.mult[s], m), dtype=complex)
        for q, off, cnt in X.offsets(s):
            if q == p:
                B[off:off + cnt, :] = np.eye(cnt)
        blocks[s] = B
    return Morphism(Xp, X, blocks)


def block_inclusion(parts: Sequence[ObjectExpr], k: int) -> Morphism:
    """Isometry T_k of the k-th summand into the direct sum of `parts`."""
    total = ObjectExpr.direct_sum(parts)
    start = sum(len(p.words) for p in parts[:k])
    part = parts[k]
    blocks = {}
    for s, m in enumerate(part.mult):
        if not m:
            continue
        B = np.zeros((total.mult[s], m), dtype=complex)
        inner = {q: off for q, off, _ in part.offsets(s)}
        for q, off, cnt in total.offsets(s):
            if start <= q < start + len(part.words):
                o = inner[q - start]
                B[off:off + cnt, o:o + cnt] = np.eye(cnt)
        blocks[s] = B
    return Morphism(part, total, blocks)


def canonical_unitary(X: ObjectExpr) -> Morphism:
    """Unitary X -> ⊕_s m_s [s] with identity blocks."""
    Xc = ObjectExpr.from_mult(X.cat, X.mult)
    return Morphism(X, Xc, {s: np.eye(m, dtype=complex) for s, m in enumerate(X.mult) if m})


# ---------------------------------------------------------------------------
# conjugates


@dataclass
class ConjugateSolution:
    """Standard solution (R, R̄) of the conjugate equations for `object`."""

    object: ObjectExpr
    conj: ObjectExpr
    R: Morphism  # 1 -> X̄ X
    Rbar: Morphism  # 1 -> X X̄
    dim: float

    def zigzag_residuals(self) -> tuple[float, float]:
        X, Xb = self.object, self.conj
        one_X, one_Xb = identity(X), identity(Xb)
        z1 = tensor(self.Rbar.H, one_X) @ tensor(one_X, self.R)
        z2 = tensor(self.R.H, one_Xb) @ tensor(one_Xb, self.Rbar)
        return z1.distance(one_X), z2.distance(one_Xb)


def _simple_conjugate(cat: CategoryData, a: int) -> ConjugateSolution:
    cache = _cache(cat, "conj1")
    got = cache.get(a)
    if got is not None:
        return got
    X = ObjectExpr.simple(cat, a)
    ab = int(cat.dual[a])
    Xb = ObjectExpr.simple(cat, ab)
    U = ObjectExpr.unit(cat)
    d = float(cat.dims[a])
    if a == 0:
        one = Morphism.identity(U)
        got = ConjugateSolution(X, Xb, one, one, 1.0)
    else:
        Rbar = Morphism(U, X.tensor(Xb), {0: np.array([[math.sqrt(d)]], dtype=complex)})
        R1 = Morphism(U, Xb.tensor(X), {0: np.array([[math.sqrt(d)]], dtype=complex)})
        z = (tensor(Rbar.H, identity(X)) @ tensor(identity(X), R1)).blocks[a][0, 0]
        got = ConjugateSolution(X, Xb, R1 * (1.0 / z), Rbar, d)
    cache[a] = got
    return got


def conjugate_solution(X: ObjectExpr) -> ConjugateSolution:
    """Standard solution of the conjugate equations for an arbitrary object."""
    cat = X.cat
    if len(X.words) != 1:
        parts = [conjugate_solution(ObjectExpr(cat, [w])) for w in X.words]
        Xb = X.conj()
        U = ObjectExpr.unit(cat)
        R = Morphism.zero(U, Xb.tensor(X))
        Rbar = Morphism.zero(U, X.tensor(Xb))
        for p, sol in enumerate(parts):
            i, ib = inclusion(X, p), inclusion(Xb, p)
            R = R + tensor(ib, i) @ sol.R.retarget(dst=ib.src.tensor(i.src))
            Rbar = Rbar + tensor(i, ib) @ sol.Rbar.retarget(dst=i.src.tensor(ib.src))
        return ConjugateSolution(X, Xb, R, Rbar, X.dim)
    w = X.words[0]
    if len(w) <= 1:
        return _simple_conjugate(cat, w[0] if w else 0)
    A = ObjectExpr(cat, [w[:1]])
    B = ObjectExpr(cat, [w[1:]])
    sa, sb = _simple_conjugate(cat, w[0]), conjugate_solution(B)
    Ab, Bb = sa.conj, sb.conj
    Rbar = tensor_many(identity(A), sb.Rbar, identity(Ab)) @ sa.Rbar
    R = tensor_many(identity(Bb), sa.R, identity(B)) @ sb.R
    Xb = X.conj()
    Rbar = Rbar.retarget(dst=X.tensor(Xb))
    R = R.retarget(dst=Xb.tensor(X))
    return ConjugateSolution(X, Xb, R, Rbar, X.dim)


# ---------------------------------------------------------------------------
# projections


def _check_idempotent(P: Morphism, tol: float = PROJ_TOL) -> None:
    if P.src != P.dst:
        raise NotAProjection("projection must be an endomorphism")
    if (P @ P).distance(P) > tol:
        raise NotAProjection("P∘P differs from P")


def orthogonalize(E: Morphism) -> Morphism:
    """Orthogonal projection onto the range of an idempotent: e(1+e-e*)^{-1}."""
    out = {}
    for s, e in E.blocks.items():
        out[s] = e @ np.linalg.inv(np.eye(e.shape[0]) + e - e.conj().T)
    return Morphism(E.src, E.dst, out)


def projector_rank(P: Morphism) -> int:
    _check_idempotent(P)
    if P.distance(P.H) > PROJ_TOL:
        raise NotAProjection("P is not self-adjoint")
    return int(round(sum(np.trace(b).real for b in P.blocks.values())))


def split_projection(P: Morphism) -> tuple[Morphism, ObjectExpr]:
    """Isometry s with s s* = P; its source is the canonical object of the ranks."""
    _check_idempotent(P)
    if P.distance(P.H) > 1e-9:
        P = orthogonalize(P)
    X = P.src
    cols = {}
    mult = np.zeros(X.cat.rank, dtype=np.int64)
    for s, b in P.blocks.items():
        h = 0.5 * (b + b.conj().T)
        vals, vecs = np.linalg.eigh(h)
        keep = vals > 0.5
        sv = np.linalg.svd(b, compute_uv=False)
        if int((sv >= RANK_TOL).sum()) != int(keep.sum()):
            raise NotAProjection(f"block {s}: spectrum is not 0/1")
        if keep.all():
            cols[s] = np.eye(len(keep), dtype=complex)
        else:
            # reverse so the order is stable against tiny eigenvalue jitter
            cols[s] = vecs[:, keep][:, ::-1]
        mult[s] = int(keep.sum())
    obj = ObjectExpr.from_mult(X.cat, mult)
    return Morphism(obj, X, {s: c for s, c in cols.items() if c.shape[1]}), obj


# ---------------------------------------------------------------------------
# serialization


def object_to_json(X: ObjectExpr) -> list:
    return [[X.cat.simples[s], int(m)] for s, m in enumerate(X.mult) if m]


def object_from_json(cat: CategoryData, doc) -> ObjectExpr:
    mult = np.zeros(cat.rank, dtype=np.int64)
    for label, m in doc:
        mult[cat.ring.index(label)] += int(m)
    return ObjectExpr.from_mult(cat, mult)


def morphism_to_json(f: Morphism) -> dict:
    cat = f.cat
    out = {"src": object_to_json(f.src), "dst": object_to_json(f.dst), "blocks": []}
    for X, key in ((f.src, "src_words"), (f.dst, "dst_words")):
        if not X.is_canonical:
            out[key] = [[cat.simples[x] for x in w] for w in X.words]
    for s, b in f.blocks.items():
        for r, c in zip(*np.nonzero(b)):
            v = complex(b[r, c])
            out["blocks"].append([cat.simples[s], int(r), int(c), v.real, v.imag])
    return out


def morphism_from_json(cat: CategoryData, doc: dict) -> Morphism:
    def obj(key):
        words = doc.get(key + "_words")
        if words is not None:
            return ObjectExpr(cat, [[cat.ring.index(x) for x in w] for w in words])
        return object_from_json(cat, doc[key])

    src, dst = obj("src"), obj("dst")
    f = Morphism(src, dst)
    for label, r, c, re, im in doc["blocks"]:
        f.blocks[cat.ring.index(label)][r, c] = complex(re, im)
    return f


def random_morphism(X: ObjectExpr, Y: ObjectExpr, rng: np.random.Generator) -> Morphism:
    blocks = {}
    for s in range(X.cat.rank):
        if X.mult[s] and Y.mult[s]:
            shape = (Y.mult[s], X.mult[s])
            blocks[s] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return Morphism(X, Y, blocks)


def all_words(cat: CategoryData, max_len: int) -> list[Word]:
    out = []
    for n in range(max_len + 1):
        out.extend(itertools.product(range(1, cat.rank), repeat=n))
    return out
