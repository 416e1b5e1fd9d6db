from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import PHI, fib_S, ising_S, su2_dims, su2_fusion, su2_S, su2_twists
from umtc.errors import NonIntegralFusion, NonIntegralIndicator, ShapeMismatch
from umtc.fusion import (
    FusionRingData,
    check_modular_data,
    dimension_homomorphism_residual,
    frobenius_schur,
    global_dimension,
    modular_data,
    verlinde_fusion,
)
from umtc.mtc import builtin_category

BUILTINS = ["trivial", "fibonacci", "ising", "pointed-z2", "pointed-z3", "pointed-z4",
            "pointed-z5", "pointed-z9", "pointed-z2xz2", "su2-1", "su2-2", "su2-3", "su2-4", "su2-10"]


def su2_ring(k):
    n = k + 1
    return FusionRingData(tuple(map(str, range(n))), np.arange(n), su2_fusion(k))


class TestFusionRing:
    def test_su2_ring_is_valid(self):
        for k in range(1, 9):
            assert su2_ring(k).is_valid()

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            FusionRingData(("1", "a"), [0, 1], np.ones((2, 2, 3), dtype=int))

    def test_broken_associativity_is_reported(self):
        N = su2_fusion(2).copy()
        N[2, 2, 2] = 1  # 2⊗2 = 0 ⊕ 2 clashes with 1⊗2 = 1
        res = FusionRingData(("0", "1", "2"), [0, 1, 2], N).invariant_residuals()
        assert res["associativity"] > 0

    def test_broken_duality_is_reported(self):
        N = su2_fusion(2)
        ring = FusionRingData(("0", "1", "2"), [0, 2, 1], N)
        assert not ring.is_valid()

    def test_index_by_name(self, fib):
        assert fib.ring.index("tau") == 1
        assert fib.ring.index(1) == 1
        with pytest.raises(KeyError):
            fib.ring.index("sigma")


class TestVerlinde:
    def test_trivial(self):
        assert verlinde_fusion([[1.0]]).tolist() == [[[1]]]

    def test_fibonacci_closed_form(self):
        N = verlinde_fusion(fib_S())
        assert N[1, 1, 0] == 1 and N[1, 1, 1] == 1

    def test_ising_closed_form(self):
        N = verlinde_fusion(ising_S())
        assert (N[1, 1, 0], N[1, 1, 2], N[1, 1, 1]) == (1, 1, 0)

    def test_ising_builtin(self, ising):
        N = verlinde_fusion(ising.md.S)
        assert (N[1, 1, 0], N[1, 1, 2], N[1, 1, 1]) == (1, 1, 0)

    @pytest.mark.parametrize("k", [1, 2, 5, 8])
    def test_su2_closed_form(self, k):
        assert np.array_equal(verlinde_fusion(su2_S(k)), su2_fusion(k))

    def test_non_integral(self):
        S = fib_S().copy()
        S[1, 1] *= 0.9
        with pytest.raises(NonIntegralFusion):
            verlinde_fusion(S)

    @pytest.mark.parametrize("name", BUILTINS)
    def test_builtin_matches_stored(self, name):
        cat = builtin_category(name)
        assert np.array_equal(verlinde_fusion(cat.md.S), cat.N)


class TestModularData:
    @pytest.mark.parametrize("name", BUILTINS)
    def test_builtin_is_modular(self, name):
        cat = builtin_category(name)
        rep = check_modular_data(cat.ring, cat.md)
        assert rep.flags["modular"], rep.residuals
        assert rep.max_residual() < 1e-9

    def test_fibonacci_from_dims_and_twists(self):
        ring = builtin_category("fibonacci").ring
        md = modular_data(ring, [1, PHI], [1, np.exp(4j * np.pi / 5)])
        assert np.allclose(md.S, fib_S(), atol=1e-12)
        assert check_modular_data(ring, md).flags["modular"]
        assert md.c_mod8 == pytest.approx(14 / 5)

    def test_fibonacci_without_twist_fails(self, fib):
        md = fib.md
        bad = modular_data(fib.ring, md.d, md.omega, md.Y)
        object.__setattr__(bad, "T", np.eye(2, dtype=complex))
        rep = check_modular_data(fib.ring, bad)
        assert not rep.passed["TSTST=S"]
        assert not rep.flags["modular"]

    def test_z3(self, z3):
        rep = check_modular_data(z3.ring, z3.md)
        assert rep.flags["modular"]
        assert np.allclose(z3.md.omega, np.exp(2j * np.pi * np.arange(3) ** 2 / 3))

    def test_rank_mismatch(self, fib, z3):
        with pytest.raises(ShapeMismatch):
            check_modular_data(fib.ring, z3.md)

    def test_first_row(self, su2_4):
        md = su2_4.md
        assert np.allclose(md.S[0], md.d / math.sqrt(md.dim_total))

    def test_charge_conjugation_involution(self, z5):
        C = z5.md.C
        assert np.array_equal(C @ C, np.eye(5))
        assert C[1, 4] == 1

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 6, 10, 16])
    def test_su2_closed_forms(self, k):
        md = builtin_category(f"su2-{k}").md
        assert np.abs(md.d - su2_dims(k)).max() < 1e-9
        assert np.abs(md.omega - su2_twists(k)).max() < 1e-9
        assert np.abs(md.S - su2_S(k)).max() < 1e-9
        assert md.c_mod8 == pytest.approx((3 * k / (k + 2)) % 8, abs=1e-9)


class TestGlobalDimension:
    def test_trivial(self):
        assert global_dimension(builtin_category("trivial").md) == 1

    @pytest.mark.parametrize("n", [2, 3, 5, 9])
    def test_pointed(self, n):
        assert global_dimension(builtin_category(f"pointed-z{n}").md) == pytest.approx(n)

    def test_fibonacci(self, fib):
        assert global_dimension(fib.md) == pytest.approx(1 + PHI**2, abs=1e-9)
        assert global_dimension(fib.md) == pytest.approx(3.6180339887, abs=1e-9)

    @pytest.mark.parametrize("k", [1, 4, 10])
    def test_su2(self, k):
        expected = (k + 2) / (2 * math.sin(math.pi / (k + 2)) ** 2)
        assert global_dimension(builtin_category(f"su2-{k}").md) == pytest.approx(expected)


class TestFrobeniusSchur:
    def test_unit(self, fib):
        assert frobenius_schur(fib.md, fib.ring, 0) == 1

    def test_ising(self, ising):
        assert frobenius_schur(ising.md, ising.ring, "psi") == 1
        assert frobenius_schur(ising.md, ising.ring, "sigma") == 1

    def test_not_self_dual(self, z3):
        assert frobenius_schur(z3.md, z3.ring, 1) == 0

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_su2_alternates(self, k):
        cat = builtin_category(f"su2-{k}")
        assert [frobenius_schur(cat.md, cat.ring, j) for j in range(k + 1)] == [(-1) ** j for j in range(k + 1)]

    def test_garbage_twists(self, fib):
        md = modular_data(fib.ring, fib.md.d, [1, np.exp(0.3j)])
        with pytest.raises(NonIntegralIndicator):
            frobenius_schur(md, fib.ring, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16))
def test_dimension_homomorphism(k):
    assert dimension_homomorphism_residual(builtin_category(f"su2-{k}").ring, su2_dims(k)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16))
def test_partial_modular_relations(k):
    md = builtin_category(f"su2-{k}").md
    S, T, C = md.S, md.T, md.C
    assert np.abs(T @ S @ T @ S @ T - S).max() < 1e-9
    assert np.abs(C @ T @ C - T).max() < 1e-9
    assert np.abs(C @ S @ C - S).max() < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(1, 11))
def test_cyclic_modular_iff_coprime(n, k):
    # q(a) = exp(πi k a²/n) on Z_n is nondegenerate exactly when gcd(k, n) = 1
    if (k * n) % 2:
        k += 1
    a = np.arange(n)
    omega = np.exp(1j * math.pi * k * a**2 / n)
    N = np.zeros((n, n, n), dtype=np.int64)
    for x in range(n):
        for y in range(n):
            N[x, y, (x + y) % n] = 1
    ring = FusionRingData(tuple(map(str, a)), (-a) % n, N)
    md = modular_data(ring, np.ones(n), omega)
    assert check_modular_data(ring, md).flags["modular"] == (math.gcd(k, n) == 1)
