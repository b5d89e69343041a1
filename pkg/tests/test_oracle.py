"""Dense-oracle tests: literal unitaries, the four-product channel, and
fast-path equivalence."""

import numpy as np
import pytest

from ico_hbac.hbac_core import two_sort
from ico_hbac.oracle import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    CompareReport,
    compare,
    conjugate,
    dense_from_diagonal,
    dense_reset,
    density_defects,
    materialize,
    offdiagonal_magnitude,
    spec_families,
    switch_channel,
    unitarity_defect,
)
from ico_hbac.register import DiagonalState, ReducedState, make_thermal_params, reset
from ico_hbac.switch import MINUS, PLUS, ideal_pair, k_pair, standard_pair, switch_branches, tree_pair


class TestPauliAlgebra:
    def test_anticommuting_product_identities(self):
        # the cancellation engine: sigma_y sigma_z = i sigma_x and the reverse
        assert np.abs(SIGMA_Y @ SIGMA_Z - 1j * SIGMA_X).max() < 1e-15
        assert np.abs(SIGMA_Z @ SIGMA_Y + 1j * SIGMA_X).max() < 1e-15

    def test_symmetrized_products_vanish_per_block(self):
        assert np.abs(SIGMA_Y @ SIGMA_Z + SIGMA_Z @ SIGMA_Y).max() < 1e-15


class TestMaterialize:
    def test_standard_pair_role_a_literal(self):
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 0] = 1.0
        expected[1:3, 1:3] = SIGMA_Y
        expected[3, 3] = 1.0
        assert np.array_equal(materialize(standard_pair(1), "A"), expected)

    def test_two_sort_role_literal(self):
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 0] = expected[3, 3] = 1.0
        expected[1:3, 1:3] = SIGMA_X
        assert np.array_equal(materialize(standard_pair(1), "two-sort"), expected)

    @pytest.mark.parametrize("n", range(1, 5))
    def test_unitarity_all_families(self, n):
        for _label, spec in spec_families(n):
            for which in ("A", "B", "two-sort"):
                assert unitarity_defect(materialize(spec, which)) < 1e-12

    def test_cap(self):
        with pytest.raises(ValueError):
            materialize(standard_pair(7), "A")
        materialize(standard_pair(7), "A", max_exponent=7)

    def test_bad_role(self):
        with pytest.raises(ValueError):
            materialize(standard_pair(1), "C")

    @pytest.mark.parametrize("n", range(1, 4))
    def test_both_orders_induce_the_sort_permutation(self, n):
        # conjugating a diagonal state by either ordered product permutes
        # populations exactly like the plain sorting unitary
        spec = standard_pair(n)
        u_a = materialize(spec, "A")
        u_b = materialize(spec, "B")
        u_sort = materialize(spec, "two-sort")
        rng = np.random.default_rng(n)
        vec = rng.random(2 ** (n + 1))
        vec /= vec.sum()
        rho = np.diag(vec).astype(complex)
        sorted_fast = two_sort(DiagonalState.from_vector(vec)).populations
        for product in (u_a @ u_b, u_b @ u_a, u_sort):
            out = conjugate(product, rho)
            assert np.abs(np.diag(out).real - sorted_fast).max() < 1e-14
            assert offdiagonal_magnitude(out) < 1e-14


class TestSwitchChannel:
    def test_frozen_example(self):
        rho = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
        spec = standard_pair(1)
        plus = switch_channel(rho, spec, spec, PLUS)
        assert np.trace(plus).real == pytest.approx(0.5, abs=1e-15)
        assert np.abs(np.diag(plus).real - [0.4, 0.0, 0.0, 0.1]).max() < 1e-15
        minus = switch_channel(rho, spec, spec, MINUS)
        assert np.abs(np.diag(minus).real - [0.0, 0.2, 0.3, 0.0]).max() < 1e-15

    def test_ground_state_is_plus_deterministic(self):
        vec = np.zeros(8)
        vec[0] = 1.0
        rho = np.diag(vec).astype(complex)
        spec = standard_pair(2)
        plus = switch_channel(rho, spec, spec, PLUS)
        minus = switch_channel(rho, spec, spec, MINUS)
        assert np.abs(plus - rho).max() < 1e-15
        assert np.abs(minus).max() < 1e-15

    @pytest.mark.parametrize("n", range(1, 4))
    def test_trace_preservation_and_positivity(self, n):
        rng = np.random.default_rng(21 + n)
        for _label, spec in spec_families(n):
            vec = rng.random(2 ** (n + 1))
            vec /= vec.sum()
            rho = np.diag(vec).astype(complex)
            plus = switch_channel(rho, spec, spec, PLUS)
            minus = switch_channel(rho, spec, spec, MINUS)
            assert (np.trace(plus) + np.trace(minus)).real == pytest.approx(1.0, abs=1e-13)
            for branch, probability in ((plus, np.trace(plus).real), (minus, np.trace(minus).real)):
                defects = density_defects(branch, norm=probability)
                assert defects["hermiticity"] < 1e-13
                assert defects["trace"] < 1e-13
                assert defects["min_eigenvalue"] > -1e-10

    def test_dimension_mismatch(self):
        rho = np.eye(4, dtype=complex) / 4.0
        with pytest.raises(ValueError):
            switch_channel(rho, standard_pair(2), standard_pair(2), PLUS)
        with pytest.raises(ValueError):
            switch_channel(np.eye(8, dtype=complex) / 8.0, standard_pair(2), standard_pair(1), PLUS)

    def test_bad_sign(self):
        rho = np.eye(4, dtype=complex) / 4.0
        with pytest.raises(ValueError):
            switch_channel(rho, standard_pair(1), standard_pair(1), "0")


class TestDenseReset:
    @pytest.mark.parametrize("n", range(1, 4))
    @pytest.mark.parametrize("eps", (0.1, 0.5, 1.0))
    def test_matches_fast_reset_on_diagonal_states(self, n, eps):
        params = make_thermal_params(eps)
        rng = np.random.default_rng(31 + n)
        vec = rng.random(2 ** (n + 1))
        vec /= vec.sum()
        rho = np.diag(vec).astype(complex)
        dense = dense_reset(rho, params)
        reduced = ReducedState.from_vector(vec[0::2] + vec[1::2])
        fast = reset(reduced, params)
        assert np.abs(np.diag(dense).real - fast.populations).max() < 1e-13
        assert offdiagonal_magnitude(dense) < 1e-15

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            dense_reset(np.ones((3, 3), dtype=complex), make_thermal_params(0.5))


class TestCompare:
    def test_small_sweep_is_tight_and_deterministic(self):
        report = compare(nmax=2, trials=20, seed=5)
        assert isinstance(report, CompareReport)
        assert report.max_abs_deviation < 1e-12
        assert report.max_offdiagonal < 1e-12
        again = compare(nmax=2, trials=20, seed=5)
        assert again.max_abs_deviation == report.max_abs_deviation
        assert again.by_case == report.by_case

    def test_reports_every_family_and_sign(self):
        report = compare(nmax=2, trials=5, seed=9)
        labels = {label for label, _sign in report.by_case}
        assert {"standard", "ideal", "k=1", "k=2", "tree level=0", "tree level=1"} <= labels
        signs = {sign for _label, sign in report.by_case}
        assert signs == {PLUS, MINUS}

    def test_nmax_guard(self):
        with pytest.raises(ValueError):
            compare(nmax=7)


class TestDiagonalHelpers:
    def test_dense_from_diagonal(self):
        state = DiagonalState.from_vector([0.4, 0.3, 0.2, 0.1])
        rho = dense_from_diagonal(state)
        assert rho.dtype == complex
        assert np.abs(np.diag(rho).real - state.populations).max() == 0.0

    def test_fast_and_dense_branches_agree_on_specific_state(self):
        spec = ideal_pair(2)
        vec = np.array([0.3, 0.25, 0.2, 0.1, 0.05, 0.05, 0.03, 0.02])
        state = DiagonalState.from_vector(vec)
        plus, minus = switch_branches(state, spec)
        for outcome in (plus, minus):
            dense = switch_channel(np.diag(vec).astype(complex), spec, spec, outcome.sign)
            assert np.abs(np.diag(dense).real - outcome.state.populations).max() < 1e-14

    def test_k_and_tree_specs_cover_expected_scalars(self):
        assert int(k_pair(3, 2).one_mask.sum()) == 4
        assert int(tree_pair(3, 0).one_mask.sum()) == 8
