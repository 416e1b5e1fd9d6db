from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import CORPUS, LR_CORPUS, center, invariant, qsys
from oracles import PHI
from umtc.classify import commutes_with_ST
from umtc.errors import HasFixedPoint, IncompatibleProjection, NotAnEquivalence, NotIsotropic
from umtc.homcalc import Morphism, ObjectExpr, hom_dim, identity, projector_rank, tensor
from umtc.mtc import BraidSide, builtin_category, reverse_braiding
from umtc.qsystem import (
    QSystem,
    Side,
    Verdict,
    boundary_count,
    center_category,
    center_projector,
    charge_conjugation,
    check_braided_bijection,
    direct_sum,
    equivalence_residual,
    equivalent_qsystems,
    full_center,
    functor_T,
    invariant_matrix,
    is_commutative,
    isotropic_subgroup_qsystem,
    left_center,
    lift,
    lr_qsystem,
    morita_equivalent,
    permutation_qsystem,
    product_qsystem,
    qsystem_from_json,
    qsystem_to_json,
    right_center,
    sub_qsystem,
    trivial_qsystem,
    verify,
)

TOL = 1e-9


def perturbed(q: QSystem, scale: float) -> QSystem:
    x = Morphism(q.x.src, q.x.dst, {s: b * scale for s, b in q.x.blocks.items()})
    return QSystem(q.theta, q.w, x, q.name + "~")


@pytest.fixture(scope="module")
def lr_fib(fib):
    return lr_qsystem(fib)


@pytest.fixture(scope="module")
def lr_z3(z3):
    return lr_qsystem(z3)


@pytest.fixture(scope="module")
def lr_z3_conj(z3):
    return lr_qsystem(z3, z3, charge_conjugation(z3))


@pytest.fixture(scope="module")
def fib_product(lr_fib):
    return product_qsystem(lr_fib, lr_fib, BraidSide.Plus)


class TestVerify:
    def test_trivial(self, fib):
        q = trivial_qsystem(fib)
        rep = verify(q)
        assert rep.ok and rep.max_residual() == 0
        assert q.dtheta == 1
        assert q.flags == {"verified": True, "irreducible": True, "commutative": True}

    def test_lr_fib(self, lr_fib):
        rep = verify(lr_fib)
        assert rep.ok, rep.residuals
        assert rep.residuals["frobenius_left"] < TOL and rep.residuals["frobenius_right"] < TOL

    def test_scaled_x_fails(self, lr_fib):
        rep = verify(perturbed(lr_fib, 1.01))
        assert not rep.passed["x_isometry"]
        assert not rep.passed["unit_left"] and not rep.passed["unit_right"]

    @pytest.mark.parametrize("cat,spec", CORPUS)
    def test_corpus_verified(self, cat, spec):
        rep = verify(qsys(cat, spec))
        assert rep.ok, rep.residuals
        assert qsys(cat, spec).irreducible


class TestTrivial:
    @pytest.mark.parametrize("name", ["fibonacci", "pointed-z3", "su2-4"])
    def test_dimension(self, name):
        q = trivial_qsystem(builtin_category(name))
        assert q.dtheta == 1 and q.flags["verified"]


class TestIsotropic:
    def test_trivial_subgroup(self, z9):
        q = isotropic_subgroup_qsystem(z9, [0])
        assert equivalent_qsystems(q, trivial_qsystem(z9))

    def test_z9(self, z9):
        assert np.allclose(z9.md.omega[[3, 6]], 1)
        q = isotropic_subgroup_qsystem(z9, [0, 3, 6])
        assert verify(q).ok
        assert q.flags["commutative"] and q.irreducible
        assert q.dtheta == pytest.approx(3)
        assert q.dtheta**2 == pytest.approx(z9.md.dim_total)

    def test_not_isotropic(self, z3):
        with pytest.raises(NotIsotropic):
            isotropic_subgroup_qsystem(z3, [0, 1, 2])

    def test_su2_simple_current(self, su2_4):
        q = isotropic_subgroup_qsystem(su2_4, [0, 4])
        assert verify(q).ok and q.flags["commutative"]
        assert q.dtheta == pytest.approx(2)


class TestLR:
    def test_fib(self, fib, lr_fib):
        D = lr_fib.cat
        assert lr_fib.theta.mult.tolist() == [1, 0, 0, 1]
        assert D.simples[3] == "(tau,tau)"
        assert lr_fib.dtheta == pytest.approx(1 + PHI**2)
        assert lr_fib.flags["commutative"]

    def test_z3(self, z3, lr_z3):
        assert lr_z3.dtheta == pytest.approx(3)
        assert lr_z3.flags["commutative"] and lr_z3.irreducible
        # θ = ⊕ ρ ⊠ ρ̄ with index ρ·3 + dual(ρ)
        assert np.nonzero(lr_z3.theta.mult)[0].tolist() == [0, 5, 7]

    def test_z3_charge_conjugation(self, lr_z3_conj):
        rep = verify(lr_z3_conj)
        assert rep.ok and lr_z3_conj.flags["commutative"]
        assert np.nonzero(lr_z3_conj.theta.mult)[0].tolist() == [0, 4, 8]

    @pytest.mark.parametrize("name", LR_CORPUS)
    def test_dimension_is_global(self, name):
        cat = builtin_category(name)
        q = lr_qsystem(cat)
        assert q.dtheta == pytest.approx(cat.md.dim_total)
        assert q.flags["verified"] and q.flags["commutative"] and q.irreducible

    def test_non_braided_bijection(self, z5):
        phi = [0, 2, 4, 1, 3]  # doubling: preserves fusion, not the twist
        with pytest.raises(NotAnEquivalence):
            lr_qsystem(z5, z5, phi)

    def test_non_bijection(self, z3):
        with pytest.raises(NotAnEquivalence):
            check_braided_bijection(z3, z3, [0, 1, 1])

    def test_reverse_is_not_equivalent(self, fib):
        with pytest.raises(NotAnEquivalence):
            check_braided_bijection(fib, reverse_braiding(fib), [0, 1])


class TestProduct:
    @pytest.mark.parametrize("side", [BraidSide.Plus, BraidSide.Minus])
    def test_with_trivial(self, lr_fib, side):
        one = trivial_qsystem(lr_fib.cat)
        for p in (product_qsystem(one, lr_fib, side), product_qsystem(lr_fib, one, side)):
            assert verify(p).ok
            assert equivalent_qsystems(p, lr_fib)

    def test_lr_squared(self, lr_fib, fib_product):
        assert verify(fib_product).ok
        assert fib_product.dtheta == pytest.approx(lr_fib.dtheta**2)
        assert not is_commutative(fib_product)

    def test_minus_side(self, lr_fib):
        p = product_qsystem(lr_fib, lr_fib, BraidSide.Minus)
        assert verify(p).ok


class TestDirectSum:
    def test_single(self, lr_fib):
        assert equivalent_qsystems(direct_sum([lr_fib]), lr_fib).method == "identity"

    def test_trivial_pair(self, fib):
        one = trivial_qsystem(fib)
        q = direct_sum([one, one])
        assert verify(q).ok
        assert q.dtheta == pytest.approx(2)
        assert hom_dim(ObjectExpr.unit(fib), q.theta) == 2
        assert not q.irreducible

    def test_lr_plus_trivial(self, lr_fib):
        q = direct_sum([lr_fib, trivial_qsystem(lr_fib.cat)])
        assert verify(q).ok
        assert not q.irreducible


class TestSubQSystem:
    def test_identity(self, lr_fib):
        q = sub_qsystem(lr_fib, identity(lr_fib.theta))
        assert equivalent_qsystems(q, lr_fib)

    @pytest.mark.parametrize("spec", ["lr", "perm-C"])
    def test_unit_subalgebra(self, z3, spec):
        q = lr_qsystem(z3) if spec == "lr" else qsys("pointed-z3", "perm-C")
        sub = sub_qsystem(q, q.w @ q.w.H)
        assert sub.theta == ObjectExpr.unit(q.cat)
        assert verify(sub).ok
        assert equivalent_qsystems(trivial_qsystem(q.cat), sub)

    def test_center_projector_gives_left_center(self, fib_product):
        P = center_projector(fib_product, ObjectExpr.unit(fib_product.cat), Side.Left)
        a = sub_qsystem(fib_product, P)
        b = left_center(fib_product)
        assert equivalent_qsystems(a, b)

    def test_incompatible(self, lr_fib):
        blocks = {s: (np.zeros_like(b) if s == 0 else np.eye(b.shape[0])) for s, b in identity(lr_fib.theta).blocks.items()}
        with pytest.raises(IncompatibleProjection):
            sub_qsystem(lr_fib, Morphism(lr_fib.theta, lr_fib.theta, blocks))


class TestCenterProjector:
    def test_commutative_unit(self, lr_fib):
        U = ObjectExpr.unit(lr_fib.cat)
        P = center_projector(lr_fib, U, Side.Left)
        assert P.distance(identity(lr_fib.theta.tensor(U))) < TOL

    def test_trivial_any_rho(self, su2_4):
        q = trivial_qsystem(su2_4)
        for rho in range(su2_4.rank):
            R = ObjectExpr.simple(su2_4, rho)
            for side in Side:
                assert center_projector(q, R, side).distance(identity(q.theta.tensor(R))) < TOL

    def test_product_rank_drops(self, fib_product):
        U = ObjectExpr.unit(fib_product.cat)
        P = center_projector(fib_product, U, Side.Left)
        assert projector_rank(P) < hom_dim(fib_product.theta, fib_product.theta)
        assert projector_rank(P) < int(fib_product.theta.mult.sum())

    @pytest.mark.parametrize("cat,spec", [("pointed-z3", "perm-C"), ("ising", "trivial"), ("su2-4", "isotropic-4")])
    def test_projection(self, cat, spec):
        q = qsys(cat, spec)
        for rho in range(q.cat.rank):
            for side in Side:
                P = center_projector(q, ObjectExpr.simple(q.cat, rho), side)
                assert (P @ P).distance(P) < TOL
                assert P.distance(P.H) < TOL

    def test_projection_in_product(self, fib_product):
        for rho in range(fib_product.cat.rank):
            P = center_projector(fib_product, ObjectExpr.simple(fib_product.cat, rho), Side.Right)
            assert (P @ P).distance(P) < TOL and P.distance(P.H) < TOL


class TestCenters:
    def test_commutative_is_own_center(self, lr_fib):
        assert equivalent_qsystems(left_center(lr_fib), lr_fib)
        assert equivalent_qsystems(right_center(lr_fib), lr_fib)

    def test_trivial(self, ising):
        q = trivial_qsystem(ising)
        assert equivalent_qsystems(left_center(q), q)

    def test_product_centers(self, fib_product):
        for c in (left_center(fib_product), right_center(fib_product)):
            assert verify(c).ok
            assert c.flags["commutative"]
            assert c.dtheta < fib_product.dtheta

    def test_idempotent(self, fib_product):
        c = left_center(fib_product)
        assert equivalent_qsystems(left_center(c), c)


class TestFullCenter:
    @pytest.mark.parametrize("name", ["fibonacci", "ising", "pointed-z3"])
    def test_trivial_gives_lr(self, name):
        cat = builtin_category(name)
        z = center(name, "trivial")
        eq = equivalent_qsystems(z, lr_qsystem(cat))
        assert eq and eq.residual < TOL

    def test_z3_permutation(self, z3):
        assert np.array_equal(invariant("pointed-z3", "perm-C").Z, z3.md.C.astype(int))
        z = center("pointed-z3", "perm-C")
        assert np.nonzero(z.theta.mult)[0].tolist() == [0, 4, 8]

    def test_z9_isotropic(self, z9):
        z = center("pointed-z9", "isotropic-3")
        assert z.dtheta == pytest.approx(9)
        assert z.dtheta == pytest.approx(z9.md.dim_total)

    @pytest.mark.parametrize("cat,spec", CORPUS)
    def test_properties(self, cat, spec):
        z = center(cat, spec)
        base = builtin_category(cat)
        assert verify(z).ok
        assert z.flags["commutative"] and z.irreducible
        assert z.dtheta == pytest.approx(base.md.dim_total, abs=1e-6)

    def test_lift(self, fib):
        q = lift(trivial_qsystem(fib))
        assert q.cat is center_category(fib)
        assert verify(q).ok


class TestInvariantMatrix:
    @pytest.mark.parametrize("name", ["fibonacci", "ising", "pointed-z3", "su2-4"])
    def test_trivial_identity(self, name):
        Z = invariant(name, "trivial").Z
        assert np.array_equal(Z, np.eye(len(Z), dtype=int))

    def test_z3_permutation(self):
        assert invariant("pointed-z3", "perm-C").Z.tolist() == [[1, 0, 0], [0, 0, 1], [0, 1, 0]]

    def test_z9_isotropic(self, z9):
        inv = invariant("pointed-z9", "isotropic-3")
        Z = inv.Z
        assert Z.shape == (9, 9) and Z[0, 0] == 1 and inv.trace >= 1
        assert commutes_with_ST(Z, z9.md) < 1e-6
        ones = np.zeros((9, 9), dtype=int)
        ones[np.ix_([0, 3, 6], [0, 3, 6])] = 1
        assert np.array_equal(Z, ones)

    def test_su2_4_d_type(self, su2_4):
        Z = invariant("su2-4", "isotropic-4").Z
        assert Z.trace() == 4
        assert Z[0].tolist() == [1, 0, 0, 0, 1]
        assert Z[2, 2] == 2

    @pytest.mark.parametrize("cat,spec", CORPUS)
    def test_matches_center_object(self, cat, spec):
        from umtc.qsystem import _center_invariant

        assert np.array_equal(invariant(cat, spec).Z, _center_invariant(center(cat, spec)))

    @pytest.mark.parametrize("cat,spec", CORPUS)
    def test_modular_invariant(self, cat, spec):
        inv = invariant(cat, spec)
        assert inv.Z[0, 0] == 1
        assert commutes_with_ST(inv.Z, builtin_category(cat).md) < 1e-6


class TestBoundaryCount:
    def test_fib(self, fib):
        assert boundary_count(trivial_qsystem(fib)) == 2

    def test_z3_permutation(self):
        assert boundary_count(qsys("pointed-z3", "perm-C")) == 1

    def test_su2_4(self, su2_4):
        assert boundary_count(trivial_qsystem(su2_4)) == 5


class TestFunctorT:
    def test_conj_lr(self, z3, lr_z3_conj):
        t = functor_T(lr_z3_conj)
        assert t.theta.mult.tolist() == [1, 1, 1]
        assert t.irreducible and t.flags["verified"]

    def test_identity_lr(self, z3, lr_z3):
        t = functor_T(lr_z3)
        assert t.theta.mult.tolist() == [3, 0, 0]
        assert not t.irreducible and t.flags["verified"]

    def test_object_identity_fib(self, fib):
        z = center("fibonacci", "trivial")
        t = functor_T(z)
        Z = invariant("fibonacci", "trivial").Z
        expected = np.zeros(fib.rank, dtype=int)
        for lam in range(fib.rank):
            for mu in range(fib.rank):
                expected += Z[lam, mu] * ObjectExpr.word(fib, [lam, int(fib.dual[mu])]).mult
        assert t.theta.mult.tolist() == expected.tolist()

    def test_lr_su2(self):
        cat = builtin_category("su2-2")
        t = functor_T(lr_qsystem(cat))
        # ⊕ ρ⊗ρ̄ = (1 ⊕ ... ) with ⟨1, ρρ̄⟩ = 1 for each ρ
        assert t.theta.mult[0] == cat.rank
        assert verify(t).ok


class TestPermutation:
    def test_z3(self, z3):
        q = permutation_qsystem(z3, charge_conjugation(z3))
        assert q.theta.mult.tolist() == [1, 1, 1]
        assert invariant_matrix(q).Z.tolist() == z3.md.C.astype(int).tolist()

    def test_z5(self, z5):
        q = qsys("pointed-z5", "perm-C")
        assert q.theta.mult.tolist() == [1] * 5
        assert np.array_equal(invariant("pointed-z5", "perm-C").Z, z5.md.C.astype(int))

    def test_fixed_point(self, fib):
        with pytest.raises(HasFixedPoint):
            permutation_qsystem(fib, charge_conjugation(fib))


class TestEquivalence:
    @pytest.mark.parametrize("cat,spec", CORPUS)
    def test_self(self, cat, spec):
        q = qsys(cat, spec)
        eq = equivalent_qsystems(q, q)
        assert eq.verdict is Verdict.Yes
        assert eq.witness.distance(identity(q.theta)) < TOL

    def test_lr_id_vs_conj(self, lr_z3, lr_z3_conj):
        eq = equivalent_qsystems(lr_z3, lr_z3_conj)
        assert eq.verdict is Verdict.No
        assert "multiplicities" in eq.certificate

    def test_unit_subalgebra_of_lr(self, lr_fib):
        sub = sub_qsystem(lr_fib, lr_fib.w @ lr_fib.w.H)
        eq = equivalent_qsystems(trivial_qsystem(lr_fib.cat), sub)
        assert eq and eq.residual < TOL

    def test_gauge_transformed_copy(self, z5):
        q = qsys("pointed-z5", "perm-C")
        rng = np.random.default_rng(3)
        phases = {s: np.exp(1j * rng.uniform(0, 2 * np.pi, (1, 1))) for s in range(1, 5)}
        phases[0] = np.ones((1, 1))
        u = Morphism(q.theta, q.theta, phases)
        q2 = QSystem(q.theta, u @ q.w, tensor(u, u) @ q.x @ u.H, "gauged")
        assert verify(q2).ok
        eq = equivalent_qsystems(q, q2)
        assert eq and equivalence_residual(q, q2, eq.witness) < TOL

    def test_least_squares_path(self, z3):
        one = trivial_qsystem(z3)
        three = direct_sum([one, one, one])
        rng = np.random.default_rng(5)
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        U, _ = np.linalg.qr(A)
        u = Morphism(three.theta, three.theta, {0: U})
        q2 = QSystem(three.theta, u @ three.w, tensor(u, u) @ three.x @ u.H, "rotated")
        eq = equivalent_qsystems(three, q2, seed=1)
        assert eq.verdict is Verdict.Yes
        assert equivalence_residual(three, q2, eq.witness) < TOL

    def test_deterministic_with_seed(self, z3):
        one = trivial_qsystem(z3)
        a = functor_T(center("pointed-z3", "trivial"))
        b = direct_sum([one, one, one])
        e1, e2 = equivalent_qsystems(a, b, seed=4), equivalent_qsystems(a, b, seed=4)
        assert e1.verdict is e2.verdict is Verdict.Yes
        assert e1.witness.distance(e2.witness) == 0


class TestMorita:
    @pytest.mark.parametrize("cat,spec", CORPUS)
    def test_self(self, cat, spec):
        q = qsys(cat, spec)
        assert morita_equivalent(q, q).verdict is Verdict.Yes

    def test_trivial_vs_permutation(self, z3):
        res = morita_equivalent(trivial_qsystem(z3), qsys("pointed-z3", "perm-C"))
        assert res.verdict is Verdict.No
        assert not np.array_equal(*res.invariants)
        assert res.pointed_equivalence.verdict is Verdict.No

    def test_pointed_consistency(self, z3):
        a = qsys("pointed-z3", "perm-C")
        b = permutation_qsystem(z3, charge_conjugation(z3))
        res = morita_equivalent(a, b)
        assert res.verdict is Verdict.Yes
        assert res.pointed_equivalence.verdict is Verdict.Yes


class TestPointedDecomposition:
    @pytest.mark.parametrize("spec", ["trivial", "perm-C"])
    def test_z3(self, z3, spec):
        q = qsys("pointed-z3", spec)
        t = functor_T(center("pointed-z3", spec))
        copies = direct_sum([q] * invariant("pointed-z3", spec).trace)
        assert equivalent_qsystems(t, copies, seed=0).verdict is Verdict.Yes


class TestJson:
    @pytest.mark.parametrize("cat,spec", [("fibonacci", "trivial"), ("pointed-z3", "perm-C"), ("su2-4", "isotropic-4")])
    def test_round_trip(self, cat, spec):
        q = qsys(cat, spec)
        doc = json.loads(json.dumps(qsystem_to_json(q, category=cat)))
        back = qsystem_from_json(doc)
        assert back.flags["verified"]
        assert equivalent_qsystems(q, back).method == "identity"

    def test_center_round_trip(self, lr_fib):
        doc = json.loads(json.dumps(qsystem_to_json(lr_fib)))
        assert doc["ambient"] == "center"
        back = qsystem_from_json(doc)
        assert back.flags["verified"] and back.flags["commutative"]
        assert back.theta.mult.tolist() == lr_fib.theta.mult.tolist()


@pytest.mark.parametrize("cat,spec", CORPUS)
def test_dimension_bound(cat, spec):
    q = qsys(cat, spec)
    if q.flags.get("commutative"):
        assert q.dtheta <= math.sqrt(q.cat.md.dim_total) + 1e-6


def test_dimension_bound_saturated():
    q = qsys("pointed-z9", "isotropic-3")
    assert q.dtheta == pytest.approx(math.sqrt(q.cat.md.dim_total), abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(CORPUS + [("fibonacci", "lr"), ("pointed-z3", "lr")]),
       st.integers(0, 2**32 - 1))
def test_perturbation_breaks_axioms(case, seed):
    q = qsys(*case)
    rng = np.random.default_rng(seed)
    noise = {s: b * (1 + 0.01 * np.exp(2j * np.pi * rng.uniform(size=b.shape))) for s, b in q.x.blocks.items()}
    bad = QSystem(q.theta, q.w, Morphism(q.x.src, q.x.dst, noise), "noisy")
    assert verify(bad).max_residual() > 1e-6
