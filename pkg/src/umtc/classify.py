"""Modular invariants by integer search in the commutant of S and T."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import SearchBudgetExceeded, UnsupportedLevel
from .fusion import ModularData
from .mtc import builtin_category
from .qsystem import InvariantMatrix, builtin_qsystem, invariant_matrix

NULL_TOL = 1e-9
INT_TOL = 1e-6
MAX_LEVEL = 16


@dataclass
class CommutantBasis:
    """Real basis of {Z : ZS = SZ, ZT = TZ} in reduced row-echelon form.

    ``pivots[k]`` is the flat index (row-major) at which ``basis[k]`` is 1 and
    every other basis element vanishes, so the coordinates of an element are its
    entries at the pivots.
    """

    basis: list[np.ndarray]
    pivots: list[int]
    exact: list[list[list[Fraction]]] | None = None

    @property
    def dim(self) -> int:
        return len(self.basis)


def _rref(A: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, list[int]]:
    A = A.copy()
    rows, cols = A.shape
    piv, r = [], 0
    for c in range(cols):
        if r == rows:
            break
        k = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[k, c]) < tol:
            continue
        A[[r, k]] = A[[k, r]]
        A[r] /= A[r, c]
        for i in range(rows):
            if i != r:
                A[i] -= A[i, c] * A[r]
        piv.append(c)
        r += 1
    return A[:r], piv


def _rationalize(x: float) -> Fraction | None:
    f = Fraction(x).limit_denominator(1000)
    return f if abs(float(f) - x) < INT_TOL else None


def commutant_basis(md: ModularData) -> CommutantBasis:
    S, T = np.asarray(md.S), np.asarray(md.T)
    n = S.shape[0]
    eye = np.eye(n)
    # vec(ZA - AZ) = (A^T ⊗ 1 - 1 ⊗ A) vec(Z) in row-major flattening
    blocks = [np.kron(eye, A.T) - np.kron(A, eye) for A in (S, T)]
    M = np.vstack([np.vstack([b.real, b.imag]) for b in blocks])
    _, sv, Vh = np.linalg.svd(M)
    rank = int((sv > NULL_TOL * max(1.0, sv[0])).sum())
    null = Vh[rank:].conj()
    R, piv = _rref(null.real if np.abs(null.imag).max(initial=0) < NULL_TOL else null)
    R[np.abs(R) < 1e-12] = 0.0
    basis = [R[k].real.reshape(n, n) for k in range(len(piv))]
    exact = []
    for B in basis:
        fr = [[_rationalize(v) for v in row] for row in B]
        if any(v is None for row in fr for v in row):
            exact = None
            break
        exact.append(fr)
    if exact is not None:
        basis = [np.array([[float(v) for v in row] for row in fr]) for fr in exact]
    return CommutantBasis(basis, piv, exact)


def _sort_key(Z: np.ndarray) -> tuple:
    # identity first, then lexicographic on the flattened entries
    return (not np.array_equal(Z, np.eye(len(Z), dtype=Z.dtype)), tuple(Z.ravel().tolist()))


def enumerate_invariants(md: ModularData, max_entry: int = 8, budget: int = 10_000_000) -> list[InvariantMatrix]:
    """All Z in the commutant with integer entries in [0, max_entry] and Z[0, 0] = 1."""
    cb = commutant_basis(md)
    n = md.rank
    B = np.array([b.ravel() for b in cb.basis])  # (dim, n*n)
    dim = len(B)
    if dim == 0 or 0 not in cb.pivots:
        return []
    # coordinates are entries of Z; Z00 = 1 fixes the coordinate at pivot 0
    order = list(range(dim))
    fixed = {cb.pivots.index(0): 1}
    free = [k for k in order if k not in fixed]
    base = sum(v * B[k] for k, v in fixed.items())
    # remaining contribution bounds for interval pruning
    pos = np.clip(B, 0, None) * max_entry
    neg = np.clip(B, None, 0) * max_entry
    tail_hi = np.zeros((len(free) + 1, n * n))
    tail_lo = np.zeros((len(free) + 1, n * n))
    for i in range(len(free) - 1, -1, -1):
        tail_hi[i] = tail_hi[i + 1] + pos[free[i]]
        tail_lo[i] = tail_lo[i + 1] + neg[free[i]]
    found = []
    nodes = 0

    def dfs(i, acc):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise SearchBudgetExceeded(f"more than {budget} search nodes", partial=list(found))
        if np.any(acc + tail_hi[i] < -INT_TOL) or np.any(acc + tail_lo[i] > max_entry + INT_TOL):
            return
        if i == len(free):
            Z = np.rint(acc)
            if np.abs(acc - Z).max() < INT_TOL:
                found.append(Z.astype(np.int64).reshape(n, n))
            return
        k = free[i]
        for c in range(max_entry + 1):
            dfs(i + 1, acc + c * B[k])

    dfs(0, base)
    S, T = np.asarray(md.S), np.asarray(md.T)
    out = []
    for Z in sorted(found, key=_sort_key):
        if max(np.abs(Z @ S - S @ Z).max(), np.abs(Z @ T - T @ Z).max()) < INT_TOL:
            out.append(InvariantMatrix.of(Z))
    return out


def commutes_with_ST(Z, md: ModularData) -> float:
    Z = np.asarray(Z, dtype=float)
    S, T = np.asarray(md.S), np.asarray(md.T)
    return float(max(np.abs(Z @ S - S @ Z).max(), np.abs(Z @ T - T @ Z).max()))


# ---------------------------------------------------------------------------
# A-D-E tables for su2(k)


def _is_permutation(Z: np.ndarray) -> bool:
    return bool(np.all((Z == 0) | (Z == 1)) and np.all(Z.sum(0) == 1) and np.all(Z.sum(1) == 1))


@dataclass
class LevelRow:
    level: int
    invariants: list[InvariantMatrix]
    labels: list[str]
    realized_by: list[list[str]] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.invariants)

    @property
    def traces(self) -> list[int]:
        return [z.trace for z in self.invariants]

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "count": self.count,
            "invariants": [
                {"label": lab, "trace": z.trace, "realized_by": real, "Z": z.Z.tolist()}
                for z, lab, real in zip(self.invariants, self.labels, self.realized_by)
            ],
        }


def _realizations(k: int) -> dict[str, np.ndarray]:
    cat = builtin_category(f"su2-{k}")
    out = {"trivial": np.eye(k + 1, dtype=np.int64)}
    if k % 4 == 0 and k > 0:
        out[f"isotropic-{k}"] = invariant_matrix(builtin_qsystem(cat, f"isotropic-{k}")).Z
    return out


def ade_report(levels, max_entry: int = 8) -> list[LevelRow]:
    """Modular invariants of su2(k) per level, labelled by Dynkin type via their trace."""
    rows = []
    for k in levels:
        k = int(k)
        if not 1 <= k <= MAX_LEVEL:
            raise UnsupportedLevel(f"level {k} outside 1..{MAX_LEVEL}")
        md = builtin_category(f"su2-{k}").md
        invs = enumerate_invariants(md, max_entry)
        real = _realizations(k)
        labels, realized = [], []
        for z in invs:
            Z = z.Z
            by = [name for name, R in real.items() if np.array_equal(R, Z)]
            if np.array_equal(Z, np.eye(k + 1, dtype=np.int64)):
                fam = "A"
            elif _is_permutation(Z) or by:
                fam = "D"
            else:
                fam = "E"
            labels.append(f"{fam}{z.trace}")
            realized.append(by)
        rows.append(LevelRow(k, invs, labels, realized))
    return rows


def format_ade_table(rows: list[LevelRow]) -> str:
    head = ("level", "count", "types", "traces", "realized")
    body = []
    for r in rows:
        real = ", ".join(f"{lab}:{'+'.join(by)}" for lab, by in zip(r.labels, r.realized_by) if by)
        body.append((str(r.level), str(r.count), " ".join(r.labels),
                     " ".join(map(str, r.traces)), real or "-"))
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(b, widths)).rstrip() for b in body)
    return "\n".join(lines)
