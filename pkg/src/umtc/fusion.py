"""Fusion rings and modular data.

Everything here works with the fusion coefficients, quantum dimensions and
twists only; no F- or R-symbols are needed.  Labels are addressed by their
position in :attr:`FusionRingData.simples`, position 0 being the unit.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import NonIntegralFusion, NonIntegralIndicator, ShapeMismatch

INT_GUARD = 1e-6
DEFAULT_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FusionRingData:
    """Based ring with unit 0, duality and structure constants ``N[a, b, c]``."""

    simples: tuple[str, ...]
    dual: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        n = len(self.simples)
        N = np.asarray(self.N, dtype=np.int64)
        dual = np.asarray(self.dual, dtype=np.int64)
        if N.shape != (n, n, n) or dual.shape != (n,):
            raise ShapeMismatch(f"fusion data of rank {n} has N {N.shape}, dual {dual.shape}")
        object.__setattr__(self, "simples", tuple(str(s) for s in self.simples))
        object.__setattr__(self, "N", _frozen(N))
        object.__setattr__(self, "dual", _frozen(dual))

    @property
    def rank(self) -> int:
        return len(self.simples)

    @property
    def unit(self) -> int:
        return 0

    @property
    def multiplicity_free(self) -> bool:
        return int(self.N.max(initial=0)) <= 1

    def index(self, label) -> int:
        """Position of `label`, given either as an index or as its name."""
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < self.rank:
                raise KeyError(label)
            return int(label)
        try:
            return self.simples.index(str(label))
        except ValueError:
            raise KeyError(label) from None

    def fusion_channels(self, a: int, b: int) -> list[int]:
        return [int(c) for c in np.nonzero(self.N[a, b])[0]]

    def invariant_residuals(self) -> dict[str, int]:
        """Integer violations of unit, associativity and duality; all zero when valid."""
        N, n, dual = self.N, self.rank, self.dual
        eye = np.eye(n, dtype=np.int64)
        res = {
            "left_unit": int(np.abs(N[0] - eye).max(initial=0)),
            "right_unit": int(np.abs(N[:, 0, :] - eye).max(initial=0)),
            "associativity": int(
                np.abs(np.einsum("abe,ecd->abcd", N, N) - np.einsum("bcf,afd->abcd", N, N)).max(initial=0)
            ),
            "duality": int(np.abs(N[:, :, 0] - eye[dual]).max(initial=0)),
        }
        res["involution"] = int(np.any(dual[dual] != np.arange(n)) or dual[0] != 0)
        return res

    def is_valid(self) -> bool:
        return not any(self.invariant_residuals().values())


@dataclass(frozen=True, eq=False)
class ModularData:
    """Dimensions, twists and the S, T, Y, C matrices of a braided fusion category."""

    d: np.ndarray
    omega: np.ndarray
    S: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    C: np.ndarray
    dim_total: float
    z: complex
    c_mod8: float
    extras: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.d)


def modular_data(ring: FusionRingData, d, omega, Y=None) -> ModularData:
    """Assemble :class:`ModularData` from dimensions and twists.

    If `Y` is not supplied it is obtained from the balancing relation
    ``Y[a, b] = sum_c N[dual a, dual b, c] d_c omega_a omega_b / omega_c``, which
    agrees with the double-braid trace for unitary data.
    """
    d = np.asarray(d, dtype=float)
    omega = np.asarray(omega, dtype=complex)
    n = ring.rank
    dual = ring.dual
    if Y is None:
        Nbar = ring.N[dual][:, dual]
        Y = np.einsum("abc,c->ab", Nbar, d / omega) * np.outer(omega, omega)
    Y = np.asarray(Y, dtype=complex)
    dim_total = float(np.sum(d**2))
    z = complex(np.sum(d**2 * omega))
    c = (4.0 * cmath.phase(z) / np.pi) % 8.0
    if abs(c - 8.0) < 1e-12:
        c = 0.0
    S = Y / np.sqrt(dim_total)
    T = np.diag(np.exp(-1j * np.pi * c / 12.0) * omega)
    C = np.zeros((n, n))
    C[np.arange(n), dual] = 1.0
    return ModularData(
        d=_frozen(d), omega=_frozen(omega), S=_frozen(S), T=_frozen(T), Y=_frozen(Y),
        C=_frozen(C), dim_total=dim_total, z=z, c_mod8=float(c),
    )


def verlinde_fusion(S) -> np.ndarray:
    """Fusion coefficients ``N[a, b, c]`` recovered from a unitary S-matrix."""
    S = np.asarray(S, dtype=complex)
    raw = np.einsum("ax,bx,cx->abc", S, S, S.conj() / S[0][None, :])
    rounded = np.rint(raw.real)
    dev = max(float(np.abs(raw - rounded).max(initial=0.0)), 0.0)
    if dev > INT_GUARD or rounded.min(initial=0) < 0:
        raise NonIntegralFusion(f"Verlinde coefficients deviate from integers by {dev:.3g}")
    return rounded.astype(np.int64)


@dataclass
class CheckReport:
    """Named residuals with a common tolerance."""

    residuals: dict[str, float]
    tol: float
    flags: dict[str, bool] = field(default_factory=dict)
    info: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> dict[str, bool]:
        return {k: bool(v < self.tol) for k, v in self.residuals.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _mx(a) -> float:
    return float(np.abs(a).max(initial=0.0))


def check_modular_data(ring: FusionRingData, md: ModularData, tol: float = DEFAULT_TOL) -> CheckReport:
    """Check the modular group relations and the Verlinde formula.

    The report has one residual per relation; ``report.flags['modular']`` is
    true when every relation holds.
    """
    if md.rank != ring.rank:
        raise ShapeMismatch(f"modular data of rank {md.rank} for ring of rank {ring.rank}")
    S, T, C = md.S, md.T, md.C
    n = ring.rank
    eye = np.eye(n)
    ST = S @ T
    res = {
        "TSTST=S": _mx(T @ S @ T @ S @ T - S),
        "CTC=T": _mx(C @ T @ C - T),
        "CSC=S": _mx(C @ S @ C - S),
        "S_unitary": _mx(S @ S.conj().T - eye),
        "(ST)^3=S^2": _mx(ST @ ST @ ST - S @ S),
        "S^2=C": _mx(S @ S - C),
    }
    try:
        Nv = verlinde_fusion(S)
        res["verlinde"] = float(np.abs(Nv - ring.N).max(initial=0))
    except NonIntegralFusion:
        res["verlinde"] = float("inf")
    report = CheckReport(res, tol)
    report.flags["modular"] = report.ok
    return report


def global_dimension(md: ModularData) -> float:
    return float(np.sum(np.asarray(md.d) ** 2))


def dimension_homomorphism_residual(ring: FusionRingData, d) -> float:
    d = np.asarray(d, dtype=float)
    return _mx(np.outer(d, d) - np.einsum("abc,c->ab", ring.N, d))


def frobenius_schur(md: ModularData, ring: FusionRingData, a) -> int:
    """Frobenius-Schur indicator of the simple `a` (0 unless self-dual)."""
    a = ring.index(a)
    d, om = md.d, md.omega
    ratio = (om[:, None] / om[None, :]) ** 2
    nu = np.sum(ring.N[:, :, a] * np.outer(d, d) * ratio) / md.dim_total
    r = round(nu.real)
    if abs(nu - r) > INT_GUARD or r not in (-1, 0, 1):
        raise NonIntegralIndicator(f"indicator of {ring.simples[a]} evaluates to {nu:.6g}")
    if r != 0 and ring.dual[a] != a:
        raise NonIntegralIndicator(f"nonzero indicator for non-self-dual {ring.simples[a]}")
    return int(r)
