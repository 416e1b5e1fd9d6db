"""Q-systems: verification, constructions, centers and equivalence.

A Q-system is stored with isometric unit ``w: 1 -> θ`` and multiplication
``x: θ -> θ⊗θ``; normalization constants live only inside the constructors.
Constructors return Q-systems on canonical objects (⊕ m_s [s]) unless noted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import (HasFixedPoint, IncompatibleProjection, NotAnEquivalence, NotIsotropic,
                     ShapeMismatch, UmtcError)
from .fusion import DEFAULT_TOL, CheckReport
from .homcalc import (Morphism, ObjectExpr, _cache, _split, braiding, block_inclusion,
                      canonical_unitary, conjugate_solution, identity, inclusion,
                      morphism_from_json, morphism_to_json, split_projection, tensor,
                      tensor_many, tree_index, word_trees)
from .mtc import (BraidSide, CategoryData, builtin_category, category_from_json, category_to_json,
                  deligne_product, reverse_braiding)

INT_TOL = 1e-6


class Side(Enum):
    Left = "left"
    Right = "right"


@dataclass(eq=False)
class QSystem:
    """Q-system (θ, w, x) with isometric w and x."""

    theta: ObjectExpr
    w: Morphism
    x: Morphism
    name: str = ""
    flags: dict = field(default_factory=dict)
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        th = self.theta
        U = ObjectExpr.unit(th.cat)
        if self.w.src != U or self.w.dst != th:
            raise ShapeMismatch("w must lie in Hom(1, θ)")
        if self.x.src != th or self.x.dst != th.tensor(th):
            raise ShapeMismatch("x must lie in Hom(θ, θ⊗θ)")

    @property
    def cat(self) -> CategoryData:
        return self.theta.cat

    @property
    def dtheta(self) -> float:
        return self.theta.dim

    @property
    def irreducible(self) -> bool:
        return int(self.theta.mult[0]) == 1

    def label(self) -> str:
        return self.theta.label()

    def __repr__(self) -> str:
        return f"QSystem({self.name or '?'}: {self.label()})"


# ---------------------------------------------------------------------------
# verification


def _commutativity_residual(q: QSystem, side: BraidSide = BraidSide.Plus) -> float:
    return (braiding(q.theta, q.theta, side) @ q.x).distance(q.x)


def is_commutative(q: QSystem, tol: float = DEFAULT_TOL) -> bool:
    return _commutativity_residual(q) < tol


def verify(q: QSystem, tol: float = DEFAULT_TOL) -> CheckReport:
    """Residuals of the Q-system axioms; sets ``q.flags``."""
    th, w, x = q.theta, q.w, q.x
    one = identity(th)
    lam = 1.0 / math.sqrt(q.dtheta)
    xx = tensor(x, one) @ x
    res = {
        "w_isometry": (w.H @ w).distance(identity(w.src)),
        "x_isometry": (x.H @ x).distance(one),
        "associativity": xx.distance(tensor(one, x) @ x),
        "unit_left": (tensor(w.H, one) @ x).distance(one * lam),
        "unit_right": (tensor(one, w.H) @ x).distance(one * lam),
    }
    xxs = x @ x.H
    res["frobenius_left"] = (tensor(x.H, one) @ tensor(one, x)).distance(xxs)
    res["frobenius_right"] = (tensor(one, x.H) @ tensor(x, one)).distance(xxs)
    report = CheckReport(res, tol)
    comm = _commutativity_residual(q)
    report.info["commutativity"] = comm
    report.info["dtheta"] = q.dtheta
    q.flags.update(verified=report.ok, irreducible=q.irreducible, commutative=bool(comm < tol))
    report.flags.update(q.flags)
    return report


# ---------------------------------------------------------------------------
# basic constructors


def _canonical(theta: ObjectExpr, w: Morphism, x: Morphism, name: str) -> QSystem:
    U = canonical_unitary(theta)
    xc = tensor(U, U) @ x @ U.H
    return QSystem(U.dst, U @ w, xc, name)


def canonicalize(q: QSystem) -> QSystem:
    if q.theta.is_canonical:
        return q
    out = _canonical(q.theta, q.w, q.x, q.name)
    out.flags = dict(q.flags)
    return out


def _from_blocks(theta: ObjectExpr, xblocks: dict, name: str) -> QSystem:
    cat = theta.cat
    U = ObjectExpr.unit(cat)
    wb = np.zeros((int(theta.mult[0]), 1), dtype=complex)
    wb[0, 0] = 1.0
    return QSystem(theta, Morphism(U, theta, {0: wb}), Morphism(theta, theta.tensor(theta), xblocks), name)


def trivial_qsystem(cat: CategoryData) -> QSystem:
    U = ObjectExpr.unit(cat)
    q = QSystem(U, identity(U), identity(U), "trivial")
    verify(q)
    return q


def _scalar_F(cat: CategoryData, a: int, b: int, c: int) -> complex:
    d = int(np.nonzero(cat.N[int(np.nonzero(cat.N[a, b])[0][0]), c])[0][0])
    return complex(cat.F[(a, b, c, d)][0, 0])


def isotropic_subgroup_qsystem(cat: CategoryData, H: Sequence) -> QSystem:
    """Twisted group algebra ⊕_{h∈H} h of a cyclic group H of invertible simples with ω_h = 1.

    In a pointed category this is the isotropic-subgroup Q-system; elsewhere it
    is the simple-current extension generated by H.
    """
    H = sorted({cat.ring.index(h) for h in H} | {0})
    omega, d = cat.twists, cat.dims
    if any(abs(d[h] - 1) > INT_TOL for h in H):
        raise UmtcError("H must consist of invertible simples")
    bad = [cat.simples[h] for h in H if abs(omega[h] - 1) > INT_TOL]
    if bad:
        raise NotIsotropic(f"twist is not 1 on {', '.join(bad)}")
    if len(H) == 1:
        return trivial_qsystem(cat)
    N = cat.N
    mul = {(a, b): int(np.nonzero(N[a, b])[0][0]) for a in H for b in H}
    if any(v not in H for v in mul.values()):
        raise UmtcError("H is not closed under fusion")
    gen = next((g for g in H if g and _orbit(mul, g) == H), None)
    if gen is None:
        raise UmtcError("only cyclic isotropic subgroups are supported")
    m = len(H)
    powers = [0]
    for _ in range(m - 1):
        powers.append(mul[(powers[-1], gen)])
    # ψ(a, g^{j+1}) = ψ(a, g^j) F(a, g^j, g) trivializes F on H
    psi = {}
    for a in powers:
        psi[(a, 0)] = 1.0 + 0j
        for j in range(m - 1):
            b = powers[j]
            psi[(a, powers[j + 1])] = psi[(a, b)] * _scalar_F(cat, a, b, gen)
    theta = ObjectExpr.from_mult(cat, np.bincount(H, minlength=cat.rank))
    tt = theta.tensor(theta)
    blocks = {}
    words = [w[0] if w else 0 for w in theta.words]
    for s in H:
        col = np.zeros((int(tt.mult[s]), 1), dtype=complex)
        for p0, off, cnt in tt.offsets(s):
            a, b = words[p0 // len(words)], words[p0 % len(words)]
            col[off, 0] = psi[(a, b)] / math.sqrt(m)
        blocks[s] = col
    q = _from_blocks(theta, blocks, f"isotropic({','.join(cat.simples[h] for h in H)})")
    verify(q)
    return q


def _orbit(mul, g) -> list[int]:
    out, cur = [0], g
    while cur != 0:
        out.append(cur)
        cur = mul[(cur, g)]
    return sorted(out)


# ---------------------------------------------------------------------------
# LR algebra


def center_category(catA: CategoryData, catB: CategoryData | None = None) -> CategoryData:
    """catA ⊠ rev(catB), cached so repeated constructions share one category."""
    catB = catA if catB is None else catB
    c = _cache(catA, "center")
    got = c.get(id(catB))
    if got is None:
        D = deligne_product(catA, reverse_braiding(catB))
        D.center_of = catA
        got = c[id(catB)] = (D, catB)
    return got[0]


def _reverse(cat: CategoryData) -> CategoryData:
    return center_category(cat).factors[1]


def check_braided_bijection(catA: CategoryData, catB: CategoryData, phi, tol: float = 1e-9) -> np.ndarray:
    """Validate a label bijection A -> B preserving N, d, ω, F and R entrywise."""
    n = catA.rank
    phi = np.asarray([catB.ring.index(p) for p in phi], dtype=np.int64)
    if catB.rank != n or sorted(phi.tolist()) != list(range(n)) or phi[0] != 0:
        raise NotAnEquivalence("phi is not a unit-preserving bijection of simples")
    if np.any(catB.N[np.ix_(phi, phi, phi)] != catA.N):
        raise NotAnEquivalence("phi does not preserve fusion")
    if not catA.multiplicity_free:
        raise NotAnEquivalence("phi checks are implemented for multiplicity-free data only")
    if np.abs(catB.dims[phi] - catA.dims).max() > tol or np.abs(catB.twists[phi] - catA.twists).max() > tol:
        raise NotAnEquivalence("phi does not preserve dimensions and twists")
    for key in catA.quads():
        a, b, c, d = key
        L, _, Rb, _ = catA.fbases(*key)
        _, li, _, ri = catB.fbases(*phi[list(key)])
        rows = [li[(int(phi[e]), al, be)] for e, al, be in L]
        cols = [ri[(int(phi[f]), ga, de)] for f, ga, de in Rb]
        if np.abs(catB.F[tuple(int(v) for v in phi[list(key)])][np.ix_(rows, cols)] - catA.F[key]).max() > tol:
            raise NotAnEquivalence(f"phi does not preserve F at {key}")
    for a in range(n):
        for b in range(n):
            for c in np.nonzero(catA.N[a, b])[0]:
                kb = (int(phi[a]), int(phi[b]), int(phi[c]))
                if np.abs(catB.R[kb] - catA.R[(a, b, int(c))]).max() > tol:
                    raise NotAnEquivalence(f"phi does not preserve R at {(a, b, int(c))}")
    return phi


def _conjugate_vertex(rev: CategoryData, lam: int, mu: int, nu: int, sign: BraidSide) -> np.ndarray:
    """Matrix c[α, α'] expressing the conjugate of basis vector e_α of Hom(ν, λ⊗μ)
    in the basis of Hom(ν̄, λ̄⊗μ̄) of the reversed category."""
    dual = rev.dual
    nb, lb, mb = int(dual[nu]), int(dual[lam]), int(dual[mu])
    LM = ObjectExpr(rev, [(lam, mu)])
    V = ObjectExpr.simple(rev, nu)
    Vb = ObjectExpr.simple(rev, nb)
    sol_lm = conjugate_solution(LM)
    sol_v = conjugate_solution(V)
    k = int(rev.N[lam, mu, nu])
    row0 = {t: i for t, i in tree_index(rev, (lam, mu))[nu].items()}
    out = np.zeros((k, k), dtype=complex)
    eps = braiding(ObjectExpr.simple(rev, mb), ObjectExpr.simple(rev, lb), sign)
    for t, r in row0.items():
        e = Morphism(V, LM, {nu: np.eye(k, dtype=complex)[:, [r]]})
        rot = (tensor(sol_v.R.H, identity(sol_lm.conj))
               @ tensor_many(identity(Vb), e.H, identity(sol_lm.conj))
               @ tensor(identity(Vb), sol_lm.Rbar))
        eb = eps @ rot
        col = eb.blocks[nb].reshape(-1)
        out[r, :] = col
    return out


def lr_qsystem(catA: CategoryData, catB: CategoryData | None = None, phi=None,
               sign: BraidSide = BraidSide.Plus) -> QSystem:
    """Canonical LR Q-system on ⊕_ρ ρ ⊠ φ(ρ̄) in catA ⊠ rev(catB)."""
    catB = catA if catB is None else catB
    n = catA.rank
    phi = check_braided_bijection(catA, catB, range(n) if phi is None else phi)
    D = center_category(catA, catB)
    rev = _reverse(catA)
    nB = catB.rank
    dual = catA.dual
    pairs = [(r, int(phi[dual[r]])) for r in range(n)]
    labels = [a * nB + b for a, b in pairs]
    mult = np.zeros(D.rank, dtype=np.int64)
    mult[labels] = 1
    theta = ObjectExpr.from_mult(D, mult)
    tt = theta.tensor(theta)
    dA = catA.dims
    dth = float(np.sum(dA ** 2))
    blocks = {}
    cvert = {}
    NB = catB.N
    for nu in range(n):
        s = labels[nu]
        col = np.zeros((int(tt.mult[s]), 1), dtype=complex)
        for p0, off, cnt in tt.offsets(s):
            ws = tt.words[p0]
            letters = [divmod(x, nB) for x in ws]
            if len(letters) < 2:
                # one factor is the unit
                col[off, 0] = 1.0 / math.sqrt(dth)
                continue
            (lam, lamB), (mu, muB) = letters
            key = (lam, mu, nu)
            if key not in cvert:
                cvert[key] = _conjugate_vertex(rev, lam, mu, nu, sign)
            c = cvert[key]
            coef = math.sqrt(dA[lam] * dA[mu] / (dA[nu] * dth))
            trees = word_trees(D, ws)[s]
            for i, tr in enumerate(trees):
                (_, muD), = tr
                al, alp = divmod(muD, int(NB[lamB, muB, int(phi[dual[nu]])]))
                col[off + i, 0] = coef * c[al, alp]
        blocks[s] = col
    q = _from_blocks(theta, blocks, "LR")
    verify(q)
    return q


# ---------------------------------------------------------------------------
# products, sums, sub-Q-systems


def product_qsystem(q1: QSystem, q2: QSystem, side: BraidSide = BraidSide.Plus) -> QSystem:
    t1, t2 = q1.theta, q2.theta
    if t1.cat is not t2.cat:
        raise ShapeMismatch("Q-systems live in different categories")
    o1, o2 = identity(t1), identity(t2)
    w = tensor(q1.w, q2.w)
    x = (tensor_many(o1, braiding(t1, t2, side), o2)
         @ tensor_many(q1.x, o2, o2)
         @ tensor(o1, q2.x))
    q = _canonical(t1.tensor(t2), w.retarget(src=ObjectExpr.unit(t1.cat)), x, f"({q1.name})∘{side.name}({q2.name})")
    verify(q)
    return q


def direct_sum(qs: Sequence[QSystem]) -> QSystem:
    if not qs:
        raise ValueError("direct_sum needs at least one Q-system")
    if len(qs) == 1:
        return qs[0]
    parts = [q.theta for q in qs]
    total = ObjectExpr.direct_sum(parts)
    dth = total.dim
    U = ObjectExpr.unit(total.cat)
    w = Morphism.zero(U, total)
    x = Morphism.zero(total, total.tensor(total))
    for i, q in enumerate(qs):
        T = block_inclusion(parts, i)
        w = w + T @ q.w * math.sqrt(q.dtheta / dth)
        x = x + tensor(T, T) @ q.x @ T.H
    out = _canonical(total, w, x, " ⊕ ".join(q.name for q in qs))
    verify(out)
    return out


def sub_qsystem(q: QSystem, p: Morphism, tol: float = DEFAULT_TOL) -> QSystem:
    """Q-system on the range of a compatible projection p ∈ End(θ)."""
    th, x = q.theta, q.x
    if p.src != th or p.dst != th:
        raise ShapeMismatch("projection must be an endomorphism of θ")
    if (p @ p).distance(p) > 1e-6 or p.distance(p.H) > 1e-6:
        raise IncompatibleProjection("p is not an orthogonal projection")
    one = identity(th)
    pp = tensor(p, p)
    lhs = [pp @ x @ p, tensor(one, p) @ x @ p, tensor(p, one) @ x @ p, pp @ x]
    if max(lhs[0].distance(m) for m in lhs[1:]) > 1e-6:
        raise IncompatibleProjection("p is not compatible with the multiplication")
    lam2 = (q.w.H @ p @ q.w).value().real
    if lam2 < 1e-12:
        raise IncompatibleProjection("p annihilates the unit")
    s, obj = split_projection(p)
    lam = math.sqrt(lam2)
    w = s.H @ q.w * (1.0 / lam)
    xp = tensor(s.H, s.H) @ x @ s * (lam * math.sqrt(q.dtheta / obj.dim))
    out = QSystem(obj, w, xp, f"sub({q.name})")
    if not verify(out, tol).ok:
        out = _renormalize(out, tol)
    return out


def _renormalize(q: QSystem, tol: float) -> QSystem:
    """Split a Frobenius algebra along the spectrum of the central element x*x
    and reassemble the pieces, each rescaled to isometric x, as a direct sum."""
    z = q.x.H @ q.x
    vals = sorted(np.concatenate([np.linalg.eigvalsh(0.5 * (b + b.conj().T)) for b in z.blocks.values()]))
    levels = [vals[0]]
    for v in vals[1:]:
        if v - levels[-1] > 1e-6:
            levels.append(v)
    if levels[0] < 1e-9:
        raise IncompatibleProjection("multiplication of the sub-algebra is degenerate")
    pieces = []
    for zeta in levels:
        blocks = {}
        for s, b in z.blocks.items():
            ev, vec = np.linalg.eigh(0.5 * (b + b.conj().T))
            V = vec[:, np.abs(ev - zeta) < 1e-6]
            blocks[s] = V @ V.conj().T
        sk, obj = split_projection(Morphism(q.theta, q.theta, blocks))
        wk = sk.H @ q.w
        nrm = math.sqrt(abs((wk.H @ wk).value()))
        piece = QSystem(obj, wk * (1.0 / nrm), tensor(sk.H, sk.H) @ q.x @ sk * (1.0 / math.sqrt(zeta)), q.name)
        if not verify(piece, tol).ok:
            raise IncompatibleProjection("sub-algebra does not normalize to a Q-system")
        pieces.append(piece)
    out = direct_sum(pieces)
    out.name = q.name
    return out


# ---------------------------------------------------------------------------
# centers


def center_projector(q: QSystem, rho: ObjectExpr, side: Side | str = Side.Left) -> Morphism:
    """Projection P^{l/r}(ρ) ∈ End(θ⊗ρ) onto the local part."""
    side = Side(side)
    bs = BraidSide.Plus if side is Side.Left else BraidSide.Minus
    th = q.theta
    ot, orho = identity(th), identity(rho)
    xx = tensor(tensor(q.x, ot) @ q.x, orho)
    b1 = tensor_many(ot, ot, braiding(th, rho, bs))
    b2 = tensor(ot, braiding(th.tensor(rho), th, bs))
    cap = tensor_many((q.w.H @ q.x.H), ot, orho)
    P = (cap.retarget(dst=th.tensor(rho)) @ b2 @ b1 @ xx) * math.sqrt(q.dtheta)
    return P


def left_center(q: QSystem) -> QSystem:
    return _center(q, Side.Left)


def right_center(q: QSystem) -> QSystem:
    return _center(q, Side.Right)


def _center(q: QSystem, side: Side) -> QSystem:
    P = center_projector(q, ObjectExpr.unit(q.cat), side)
    P = P.retarget(src=q.theta, dst=q.theta)
    out = sub_qsystem(q, P)
    out.name = f"C_{side.value[0]}({q.name})"
    return out


def lift(q: QSystem) -> QSystem:
    """Θ ⊠ id in cat ⊠ rev(cat)."""
    cat = q.cat
    D = center_category(cat)
    n = cat.rank

    def obj(X):
        return ObjectExpr(D, [tuple(a * n for a in w) for w in X.words])

    def mor(f):
        return Morphism(obj(f.src), obj(f.dst), {s * n: b for s, b in f.blocks.items()})

    out = QSystem(obj(q.theta), mor(q.w), mor(q.x), f"{q.name}⊠id")
    verify(out)
    return out


def full_center(q: QSystem) -> QSystem:
    """Left center of (Θ⊠id)∘⁺Θ_LR in cat ⊠ rev(cat); memoized on `q`."""
    got = q._memo.get("full_center")
    if got is None:
        lr = lr_qsystem(q.cat)
        got = left_center(product_qsystem(lift(q), lr, BraidSide.Plus))
        got.name = f"Z({q.name})"
        q._memo["full_center"] = got
    return got


@dataclass
class InvariantMatrix:
    Z: np.ndarray
    trace: int

    @classmethod
    def of(cls, Z) -> "InvariantMatrix":
        Z = np.asarray(Z, dtype=np.int64)
        return cls(Z, int(np.trace(Z)))


def _round_int(v: float, what: str) -> int:
    r = round(v)
    if abs(v - r) > INT_TOL:
        raise UmtcError(f"{what} evaluates to non-integer {v:.6g}")
    return int(r)


def invariant_matrix(q: QSystem) -> InvariantMatrix:
    """Z[λ1, λ2] = dim of local intertwiners in Hom(θ⊗λ2, λ1)."""
    cat = q.cat
    n = cat.rank
    Z = np.zeros((n, n), dtype=np.int64)
    for l2 in range(n):
        P = center_projector(q, ObjectExpr.simple(cat, l2), Side.Left)
        for l1, b in P.blocks.items():
            Z[l1, l2] = _round_int(np.trace(b).real, f"local dimension ({l1},{l2})")
    return InvariantMatrix.of(Z)


def boundary_count(q: QSystem) -> int:
    return invariant_matrix(q).trace


# ---------------------------------------------------------------------------
# functor T: cat ⊠ rev(cat) -> cat


def _t_word(D: CategoryData, word) -> tuple:
    nB = D.factors[1].rank
    parts = [divmod(x, nB) for x in word]
    return tuple(a for a, _ in parts) + tuple(b for _, b in parts)


def _t_frame(X: ObjectExpr, s: int):
    """Unitary from the paired D-tree basis of X (grouped by (x, y, μ)) to the tree basis of T(X) at s."""
    D = X.cat
    A = D.factors[0]
    nB = D.factors[1].rank
    NB = D.factors[1].N
    key = (X.words, s)
    cache = _cache(D, "tframe")
    got = cache.get(key)
    if got is not None:
        return got
    TX = ObjectExpr(A, [_t_word(D, w) for w in X.words])
    mD = X.mult
    base, pos = {}, 0
    NA = A.N
    for xy in np.nonzero(mD)[0].tolist():
        x, y = divmod(xy, nB)
        for mu in range(NA[x, y, s]):
            base[(x, y, mu)] = pos
            pos += int(mD[xy])
    total = int(TX.mult[s])
    V = np.zeros((total, pos), dtype=complex)
    for p, r0, cnt in TX.offsets(s):
        w = X.words[p]
        k = len(w)
        Aw, Bw = _t_word(D, w)[:k], _t_word(D, w)[k:]
        XA, XB = ObjectExpr(A, [Aw]), ObjectExpr(A, [Bw])
        sp = _split(XA, XB, s)
        treesA, treesB = word_trees(A, Aw), word_trees(A, Bw)
        dindex = tree_index(D, w)
        offD = {}
        for xy in np.nonzero(mD)[0].tolist():
            for q, off, _ in X.offsets(xy):
                if q == p:
                    offD[xy] = off
        for (x, y, mu), c0 in sp.base.items():
            xy = x * nB + y
            for i, ta in enumerate(treesA[x]):
                for j, tb in enumerate(treesB[y]):
                    dt = _pair_tree(ta, tb, Bw, NB, nB)
                    col = base[(x, y, mu)] + offD[xy] + dindex[xy][dt]
                    V[r0:r0 + cnt, col] = sp.U[:, c0 + i * len(treesB[y]) + j]
    cache[key] = (V, base, TX)
    return V, base, TX


def _pair_tree(ta, tb, Bw, NB, nB) -> tuple:
    if not ta:
        return ()
    out, prevB = [], Bw[0]
    for (sa, ma), (sb, mb), letter in zip(ta, tb, Bw[1:]):
        out.append((sa * nB + sb, ma * int(NB[prevB, letter, sb]) + mb))
        prevB = sb
    return tuple(out)


def functor_T_morphism(f: Morphism) -> Morphism:
    D = f.cat
    A = D.factors[0]
    nB = D.factors[1].rank
    out, src, dst = {}, None, None
    for s in range(A.rank):
        VX, bX, TX = _t_frame(f.src, s)
        VY, bY, TY = _t_frame(f.dst, s)
        src, dst = TX, TY
        if not (VX.shape[0] and VY.shape[0]):
            continue
        M = np.zeros((VY.shape[1], VX.shape[1]), dtype=complex)
        for (x, y, mu), c0 in bX.items():
            r0 = bY.get((x, y, mu))
            blk = f.blocks.get(x * nB + y)
            if r0 is None or blk is None:
                continue
            M[r0:r0 + blk.shape[0], c0:c0 + blk.shape[1]] = blk
        out[s] = VY @ M @ VX.conj().T
    if src is None:
        src = ObjectExpr(A, [_t_word(D, w) for w in f.src.words])
        dst = ObjectExpr(A, [_t_word(D, w) for w in f.dst.words])
    return Morphism(src, dst, out)


def functor_T(q2: QSystem, side: BraidSide = BraidSide.Plus) -> QSystem:
    """Image of a Q-system in cat ⊠ rev(cat) under ρ⊠σ ↦ ρ⊗σ."""
    D = q2.cat
    if D.factors is None:
        raise ShapeMismatch("functor_T needs a Q-system in a Deligne product")
    A = D.factors[0]
    th = q2.theta
    Tw = functor_T_morphism(q2.w)
    Tx = functor_T_morphism(q2.x)
    Tth = Tw.dst
    TT = Tth.tensor(Tth)
    mu = Morphism.zero(Tx.dst, TT)
    nw = len(th.words)
    for p, wp in enumerate(th.words):
        for q_, wq in enumerate(th.words):
            k1, k2 = len(wp), len(wq)
            tp, tq = _t_word(D, wp), _t_word(D, wq)
            Ap, Bp, Aq, Bq = (ObjectExpr(A, [t]) for t in (tp[:k1], tp[k1:], tq[:k2], tq[k2:]))
            m = tensor_many(identity(Ap), braiding(Aq, Bp, side), identity(Bq))
            i_src = inclusion(Tx.dst, p * nw + q_)
            i_dst = inclusion(TT, p * nw + q_)
            mu = mu + i_dst @ m.retarget(src=i_src.src, dst=i_dst.src) @ i_src.H
    x = mu @ Tx
    out = _canonical(Tth, Tw.retarget(src=ObjectExpr.unit(A)), x, f"T({q2.name})")
    verify(out)
    return out


def permutation_qsystem(cat: CategoryData, phi) -> QSystem:
    phi = [cat.ring.index(p) for p in phi]
    fixed = [cat.simples[a] for a in range(1, cat.rank) if phi[a] == a]
    if fixed:
        raise HasFixedPoint(f"phi fixes {', '.join(fixed)}")
    out = functor_T(lr_qsystem(cat, cat, phi))
    out.name = "perm(" + ",".join(cat.simples[p] for p in phi) + ")"
    return out


def charge_conjugation(cat: CategoryData) -> list[int]:
    return [int(x) for x in cat.dual]


# ---------------------------------------------------------------------------
# equivalence


class Verdict(str, Enum):
    Yes = "yes"
    No = "no"
    Unknown = "unknown"


@dataclass
class Equivalence:
    """Outcome of an equivalence test; `witness` maps θ1 to θ2 when the verdict is yes."""

    verdict: Verdict
    witness: Morphism | None = None
    certificate: str = ""
    residual: float = float("nan")
    method: str = ""

    def __bool__(self) -> bool:
        return self.verdict is Verdict.Yes


def equivalence_residual(q1: QSystem, q2: QSystem, u: Morphism) -> float:
    """max of |x2 u - (u⊗u) x1|, |u w1 - w2| and |u* u - 1|."""
    return max((q2.x @ u).distance(tensor(u, u) @ q1.x),
               (u @ q1.w).distance(q2.w),
               (u.H @ u).distance(identity(u.src)))


def _row_words(q: QSystem, s: int) -> list[tuple[int, int]]:
    """Labels (a, b) of the θ⊗θ word behind each row of x at block s."""
    labels = [w[0] if w else 0 for w in q.theta.words]
    tt = q.x.dst
    n = len(labels)
    out = []
    for p0, _, cnt in tt.offsets(s):
        out.extend([(labels[p0 // n], labels[p0 % n])] * cnt)
    return out


def _phase_solve(q1: QSystem, q2: QSystem, tol: float):
    """Phase propagation for multiplicity-free θ; returns (phases or None, exhaustive)."""
    cons = []
    for s, b1 in q1.x.blocks.items():
        b2 = q2.x.blocks[s]
        for (a, b), v1, v2 in zip(_row_words(q1, s), b1[:, 0], b2[:, 0]):
            if abs(v1) > 1e-12:
                cons.append((a, b, s, v1 / v2))
    support = [s for s, m in enumerate(q1.theta.mult) if m]
    start = {0: complex(q2.w.blocks[0][0, 0] / q1.w.blocks[0][0, 0])}
    exhaustive = True

    def propagate(known):
        known = dict(known)
        changed = True
        while changed:
            changed = False
            for a, b, s, r in cons:
                ka, kb, ks = a in known, b in known, s in known
                if ka and kb and not ks:
                    known[s] = known[a] * known[b] * r
                elif ks and ka and not kb:
                    known[b] = known[s] / (known[a] * r)
                elif ks and kb and not ka:
                    known[a] = known[s] / (known[b] * r)
                else:
                    continue
                changed = True
        return known

    def consistent(known):
        return all(abs(known[s] - known[a] * known[b] * r) < 1e-7
                   for a, b, s, r in cons if a in known and b in known and s in known)

    def search(known, depth):
        nonlocal exhaustive
        known = propagate(known)
        if not consistent(known):
            return None
        missing = [s for s in support if s not in known]
        if not missing:
            return known
        # square roots from u_a^2 = u_s / r
        for a, b, s, r in cons:
            if a == b and a not in known and s in known:
                root = np.sqrt(known[s] / r)
                for cand in (root, -root):
                    got = search({**known, a: cand}, depth + 1)
                    if got is not None:
                        return got
                return None
        touched = {a for a, b, s, _ in cons} | {b for a, b, s, _ in cons} | {s for a, b, s, _ in cons}
        free = [s for s in missing if s not in touched]
        if free:
            return search({**known, **{s: 1.0 + 0j for s in free}}, depth + 1)
        exhaustive = False
        return search({**known, missing[0]: 1.0 + 0j}, depth + 1)

    got = search(start, 0)
    return got, exhaustive


def _polar(b: np.ndarray) -> np.ndarray:
    U, _, Vh = np.linalg.svd(b)
    return U @ Vh


def _numeric_solve(q1: QSystem, q2: QSystem, rng: np.random.Generator, tol: float,
                   restarts: int, iters: int):
    th1, th2 = q1.theta, q2.theta
    shapes = [(s, int(m)) for s, m in enumerate(th1.mult) if m]
    sizes = [m * m for _, m in shapes]

    def unpack(v):
        blocks, k = {}, 0
        for (s, m), n in zip(shapes, sizes):
            blocks[s] = (v[k:k + n] + 1j * v[k + n:k + 2 * n]).reshape(m, m)
            k += 2 * n
        return Morphism(th1, th2, blocks)

    def pack(u):
        return np.concatenate([np.concatenate([u.blocks[s].real.ravel(), u.blocks[s].imag.ravel()])
                               for s, _ in shapes])

    def flat(parts):
        return np.concatenate([np.concatenate([b.real.ravel(), b.imag.ravel()])
                               for p in parts for b in p.blocks.values()])

    def fun(v):
        u = unpack(v)
        return flat([(q2.x @ u - tensor(u, u) @ q1.x), (u @ q1.w - q2.w), (u.H @ u - identity(th1))])

    def jac(v):
        # the residual is quadratic in u: differentiate each basis direction exactly
        u = unpack(v)
        cols = []
        for k in range(len(v)):
            e = np.zeros(len(v))
            e[k] = 1.0
            d = unpack(e)
            cols.append(flat([q2.x @ d - (tensor(d, u) + tensor(u, d)) @ q1.x, d @ q1.w,
                              d.H @ u + u.H @ d]))
        return np.stack(cols, axis=1)

    best = (math.inf, None)
    for _ in range(restarts):
        u0 = Morphism(th1, th2, {s: _polar(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
                                 for s, m in shapes})
        v = pack(u0)
        for _polish in range(4):
            sol = least_squares(fun, v, jac=jac, method="lm", max_nfev=iters, xtol=1e-15, ftol=1e-15, gtol=1e-15)
            u = unpack(sol.x)
            u = Morphism(th1, th2, {s: _polar(b) for s, b in u.blocks.items()})
            r = equivalence_residual(q1, q2, u)
            if r < tol * 1e-2 or r > 1e-4:
                break
            v = pack(u)
        if r < best[0]:
            best = (r, u)
        if r < tol:
            break
    return best


def equivalent_qsystems(q1: QSystem, q2: QSystem, tol: float = DEFAULT_TOL, seed: int = 0,
                        restarts: int = 200, iters: int = 500) -> Equivalence:
    """Decide whether a unitary u: θ1 -> θ2 with x2 u = (u⊗u) x1 and u w1 = w2 exists."""
    if q1.cat is not q2.cat:
        raise ShapeMismatch("Q-systems live in different categories")
    q1, q2 = canonicalize(q1), canonicalize(q2)
    m1, m2 = q1.theta.mult, q2.theta.mult
    if np.any(m1 != m2):
        names = q1.cat.simples
        diff = [f"{names[s]}: {a} vs {b}" for s, (a, b) in enumerate(zip(m1, m2)) if a != b]
        return Equivalence(Verdict.No, certificate="multiplicities differ (" + "; ".join(diff) + ")")
    if abs(q1.dtheta - q2.dtheta) > 1e-9:
        return Equivalence(Verdict.No, certificate="dimensions differ")
    if q1.x.distance(q2.x) < tol and q1.w.distance(q2.w) < tol:
        return Equivalence(Verdict.Yes, identity(q1.theta).retarget(dst=q2.theta), residual=0.0,
                           method="identity")
    if int(m1.max()) <= 1:
        for s, b in q1.x.blocks.items():
            if np.abs(np.abs(b) - np.abs(q2.x.blocks[s])).max() > 1e-6:
                return Equivalence(Verdict.No, certificate=f"|x| differs in block {q1.cat.simples[s]}")
        phases, exhaustive = _phase_solve(q1, q2, tol)
        if phases is not None:
            u = Morphism(q1.theta, q2.theta, {s: np.array([[phases[s]]]) for s in q1.x.blocks})
            r = equivalence_residual(q1, q2, u)
            if r < tol:
                return Equivalence(Verdict.Yes, u, residual=r, method="phase propagation")
        elif exhaustive:
            return Equivalence(Verdict.No, certificate="phase propagation is inconsistent")
    rng = np.random.default_rng(seed)
    r, u = _numeric_solve(q1, q2, rng, tol, restarts, iters)
    if r < tol:
        return Equivalence(Verdict.Yes, u, residual=r, method="least squares")
    return Equivalence(Verdict.Unknown, residual=r, method="least squares",
                       certificate=f"no witness below {tol:g} after {restarts} restarts")


@dataclass
class MoritaResult:
    verdict: Verdict
    centers: Equivalence
    invariants: tuple[np.ndarray, np.ndarray]
    pointed_equivalence: Equivalence | None = None

    def __bool__(self) -> bool:
        return self.verdict is Verdict.Yes


def _center_invariant(zq: QSystem) -> np.ndarray:
    """Z[λ, μ] read off from the full-center object ⊕ Z_{λμ} λ⊠μ̄."""
    D = zq.cat
    n = D.factors[1].rank
    dual = D.factors[1].dual
    M = zq.theta.mult.reshape(-1, n)
    return M[:, dual]


def morita_equivalent(q1: QSystem, q2: QSystem, tol: float = DEFAULT_TOL, seed: int = 0) -> MoritaResult:
    """Compare full centers; in pointed categories Morita and plain equivalence coincide."""
    z1, z2 = full_center(q1), full_center(q2)
    inv = (_center_invariant(z1), _center_invariant(z2))
    eq = equivalent_qsystems(z1, z2, tol, seed)
    out = MoritaResult(eq.verdict, eq, inv)
    if getattr(q1.cat, "group", None) is not None:
        out.pointed_equivalence = equivalent_qsystems(q1, q2, tol, seed)
    return out


# ---------------------------------------------------------------------------
# builtin Q-systems and files


def builtin_qsystem(cat: CategoryData, spec: str) -> QSystem:
    """``trivial``, ``lr``, ``perm-C`` or ``isotropic-<label>`` (cyclic group generated by label)."""
    s = spec.strip()
    if s.startswith("builtin:"):
        s = s[len("builtin:"):]
    if s == "trivial":
        return trivial_qsystem(cat)
    if s.lower() == "lr":
        return lr_qsystem(cat)
    if s.lower() in ("perm-c", "perm-conj"):
        return permutation_qsystem(cat, charge_conjugation(cat))
    if s.startswith("isotropic-"):
        g = cat.ring.index(s[len("isotropic-"):])
        H, cur = [0], g
        while cur != 0:
            H.append(cur)
            cur = int(np.nonzero(cat.N[cur, g])[0][0])
        return isotropic_subgroup_qsystem(cat, H)
    raise ValueError(f"unknown builtin Q-system {spec!r}")


def qsystem_to_json(q: QSystem, category=None) -> dict:
    """Serialize; `category` overrides the stored category reference (e.g. a builtin name)."""
    cat = q.cat
    base = getattr(cat, "center_of", None)
    ref = base if base is not None else cat
    doc = {
        "category": category if category is not None else category_to_json(ref),
        "ambient": "center" if base is not None else "base",
        "theta": [int(m) for m in q.theta.mult],
        "w": morphism_to_json(q.w),
        "x": morphism_to_json(q.x),
    }
    if q.name:
        doc["name"] = q.name
    return doc


def qsystem_from_json(doc: dict, resolve=None) -> QSystem:
    """Inverse of :func:`qsystem_to_json`; `resolve` turns a category reference into a category."""
    ref = doc["category"]
    if isinstance(ref, dict):
        cat = category_from_json(ref)
    elif resolve is not None:
        cat = resolve(ref)
    else:
        cat = builtin_category(ref)
    if doc.get("ambient", "base") == "center":
        cat = center_category(cat)
    theta = ObjectExpr.from_mult(cat, doc["theta"])
    w = morphism_from_json(cat, doc["w"])
    x = morphism_from_json(cat, doc["x"])
    if w.dst != theta or x.src != theta:
        raise ShapeMismatch("w and x do not match theta")
    q = QSystem(theta, w, x, doc.get("name", ""))
    verify(q)
    return q
