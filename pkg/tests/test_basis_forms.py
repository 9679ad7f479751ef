"""Tests for the basis 2-forms and their iterated residues."""

import numpy as np
import pytest

from src.rw_integrals.basis_forms import (
    dual,
    ell,
    evaluate,
    evaluate_all,
    expected_residue_table,
    form_multiplier,
    g_corner,
    g_corner_raw,
    g_point,
    g_row_pm,
    intersection_matrix,
    m_inverse,
    raw_corner_residues,
    residue_matrix,
    residue_pattern,
    residue_table,
)
from src.rw_integrals.config import PeriodShift, derive_lambda, psi_index_set
from src.rw_integrals.elliptic_kernel import s_func
from src.rw_integrals.models.exceptions import ValidationError
from src.rw_integrals.models.problem import BasisIndex

# generic point away from every hyperplane of both sample configurations
U1, U2 = 0.63 + 0.81j, 0.27 + 0.58j


class TestCoefficients:
    """Closed forms of the coefficient functions."""

    def test_point_form(self, cfg_2x2):
        lam1, lam2 = derive_lambda(cfg_2x2)
        tau = cfg_2x2.tau_value
        expected = s_func(U1 - cfg_2x2.t1[1], lam1, tau) * s_func(U2 - cfg_2x2.t2[0], lam2, tau)
        assert g_point(2, 1, U1, U2, cfg_2x2) == pytest.approx(expected, rel=1e-14)

    def test_row_form_signs(self, cfg_1x1):
        lam1, lam2 = derive_lambda(cfg_1x1)
        tau = cfg_1x1.tau_value
        minus = -s_func(U1 - cfg_1x1.t1[0], lam1 + lam2, tau) * s_func(U1 - U2, -lam2, tau)
        assert g_row_pm(1, -1, U1, U2, cfg_1x1) == pytest.approx(minus, rel=1e-14)

    def test_out_of_range_indices(self, cfg_1x1):
        with pytest.raises(ValidationError, match="i must be in 1..1"):
            g_point(2, 1, U1, U2, cfg_1x1)
        with pytest.raises(ValidationError, match="sign must be"):
            g_row_pm(1, 0, U1, U2, cfg_1x1)
        with pytest.raises(ValidationError, match="m must be in 1..4"):
            g_corner_raw(5, U1, U2, cfg_1x1)

    def test_evaluate_all_matches_single_forms(self, cfg_2x2):
        u1 = np.array([U1, U1 + 0.05, U1 - 0.1j])
        u2 = np.array([U2, U2 + 0.03j, U2 - 0.07])
        stacked = evaluate_all(u1, u2, cfg_2x2)
        indices = psi_index_set(cfg_2x2)
        assert stacked.shape == (len(indices), 3)
        for position, index in enumerate(indices):
            expected = evaluate(index, u1, u2, cfg_2x2)
            assert np.allclose(stacked[position], expected, rtol=1e-13, atol=0)

    def test_evaluate_all_broadcasts(self, cfg_1x1):
        u1 = np.array([U1, U1 + 0.05])[:, None]
        u2 = np.array([U2, U2 + 0.03j, U2 - 0.07])[None, :]
        assert evaluate_all(u1, u2, cfg_1x1).shape == (9, 2, 3)

    def test_dual_evaluator(self, cfg_1x1):
        """The dual form is the same coefficient with lambda -> -lambda."""
        dual_point = dual(lambda u1, u2, cfg: g_point(1, 1, u1, u2, cfg), cfg_1x1)
        lam1, lam2 = derive_lambda(cfg_1x1)
        tau = cfg_1x1.tau_value
        expected = s_func(U1 - cfg_1x1.t1[0], -lam1, tau) * s_func(U2 - cfg_1x1.t2[0], -lam2, tau)
        assert dual_point(U1, U2) == pytest.approx(expected, rel=1e-12)


class TestCornerForms:
    """The quarter residue matrix M and the corner combinations."""

    def test_inverse(self, cfg_2x2):
        product = residue_matrix(cfg_2x2).entries @ m_inverse(cfg_2x2)
        assert np.allclose(product, np.eye(4), atol=1e-13)

    def test_corner_forms_use_residue_matrix_inverse(self, cfg_1x1):
        matrix = residue_matrix(cfg_1x1)
        assert np.array_equal(m_inverse(cfg_1x1), matrix.inverse())
        assert np.allclose(matrix.inverse() @ matrix.entries, np.eye(4), atol=1e-13)

    def test_ell(self, cfg_1x1):
        lam1, lam2 = derive_lambda(cfg_1x1)
        assert ell(cfg_1x1) == pytest.approx(np.exp(1j * np.pi * (lam1 + lam2)))
        assert residue_matrix(cfg_1x1).ell == ell(cfg_1x1)

    def test_raw_residues_match_closed_form(self, cfg_1x1, cfg_2x2):
        for cfg in (cfg_1x1, cfg_2x2):
            numeric = raw_corner_residues(cfg)
            assert np.allclose(numeric, residue_matrix(cfg).entries, atol=1e-5)

    def test_corner_is_combination_of_raw_forms(self, cfg_1x1):
        inverse = m_inverse(cfg_1x1)
        raw = np.array([g_corner_raw(n, U1, U2, cfg_1x1) for n in range(1, 5)])
        for m in range(1, 5):
            assert g_corner(m, U1, U2, cfg_1x1) == pytest.approx(raw @ inverse[:, m - 1], rel=1e-13)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_residue_table(self, m, cfg_2x2):
        along_plus, along_minus = residue_table(m, cfg_2x2)
        first, second = expected_residue_table(m, cfg_2x2)
        assert abs(along_plus - first) < 1e-6
        assert abs(along_minus - second) < 1e-6


class TestResidues:
    """Iterated residues at the designated intersection points."""

    def test_pattern_is_identity_1x1(self, cfg_1x1):
        values = residue_pattern(cfg_1x1)["values"]
        assert values.shape == (9, 9)
        assert np.allclose(values, np.eye(9), atol=1e-5)

    def test_pattern_is_identity_2x2(self, cfg_2x2):
        pattern = residue_pattern(cfg_2x2)
        assert np.allclose(pattern["values"], np.eye(16), atol=1e-5)
        assert list(pattern["labels"][:4]) == ["1,1", "1,2", "2,1", "2,2"]


class TestMultipliers:
    """Behaviour of the forms under the period shifts."""

    @pytest.mark.parametrize("shift", list(PeriodShift))
    def test_numeric_multiplier(self, shift, cfg_2x2):
        tau = cfg_2x2.tau_value
        d1, d2 = shift.offsets(tau)
        for index in psi_index_set(cfg_2x2):
            ratio = evaluate(index, U1 + d1, U2 + d2, cfg_2x2) / evaluate(index, U1, U2, cfg_2x2)
            assert ratio == pytest.approx(form_multiplier(index, cfg_2x2, shift), rel=1e-9)

    def test_one_shifts_are_trivial(self, cfg_1x1):
        for index in psi_index_set(cfg_1x1):
            assert form_multiplier(index, cfg_1x1, PeriodShift.U1_ONE) == 1
            assert form_multiplier(index, cfg_1x1, PeriodShift.U2_ONE) == 1


class TestIntersectionMatrix:
    """Self-intersection numbers of the basis."""

    def test_diagonal(self, cfg_1x1):
        matrix = intersection_matrix(cfg_1x1)
        two_pi_i_sq = (2j * np.pi) ** 2
        assert matrix.shape == (9, 9)
        assert np.count_nonzero(matrix - np.diag(np.diag(matrix))) == 0
        assert matrix[0, 0] == pytest.approx(two_pi_i_sq / (cfg_1x1.c1[0] * cfg_1x1.c2[0]))
        assert matrix[1, 1] == pytest.approx(two_pi_i_sq / (cfg_1x1.c1[0] * cfg_1x1.c))
        assert matrix[8, 8] == pytest.approx(two_pi_i_sq / cfg_1x1.c ** 2)

    def test_corner_multiplier_is_shared(self, cfg_1x1):
        """Corner multipliers come from the raw forms, which all agree."""
        value = form_multiplier(BasisIndex.corner(2), cfg_1x1, PeriodShift.U2_TAU)
        assert np.isfinite(value)
