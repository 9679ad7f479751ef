"""Tests for configuration validation, derived lambdas and problem-file I/O."""

import json
from dataclasses import replace

import numpy as np
import pytest

from src.rw_integrals.config import (
    PeriodShift,
    config_digest,
    count_intersection_points,
    derive_lambda,
    dual,
    euler_characteristic,
    half_periods,
    load_problem_file,
    parse_problem,
    period_multiplier,
    problem_to_dict,
    psi_index_set,
    random_config,
    read_json,
    reciprocal,
    shift_point,
    swapped,
    validate,
    varpi,
    with_point,
)
from src.rw_integrals.models.exceptions import ParseError, ValidationError
from src.rw_integrals.models.problem import BasisIndex, IndexKind, ProblemConfig


def _grid_config(n1: int, n2: int) -> ProblemConfig:
    """Structurally valid configuration with n1 + n2 points; exponents need not be admissible."""
    return ProblemConfig(
        tau=1j,
        t1=[0.05 + 0.1j * (i + 1) for i in range(n1)],
        t2=[0.55 + 0.1j * (j + 1) for j in range(n2)],
        c=0.2, c10=0, c20=0,
        c1=[0.1] * n1, c2=[0.1] * n2,
        c1_inf=0.3, c2_inf=0.4,
    )


class TestValidate:
    """Standing assumptions of a configuration."""

    def test_samples_are_valid(self, cfg_1x1, cfg_2x2):
        assert validate(cfg_1x1) == []
        assert validate(cfg_2x2) == []

    def test_sample_lambdas(self, cfg_1x1):
        lam1, lam2 = derive_lambda(cfg_1x1)
        assert lam1 == pytest.approx(0.31 + 0.27j, abs=1e-12)
        assert lam2 == pytest.approx(0.58 + 0.14j, abs=1e-12)

    def test_integer_exponent(self, cfg_1x1):
        cfg = replace(cfg_1x1, c=1.0, c1=(-2.0,), c2=(-2.0,))
        conditions = {violation.condition for violation in validate(cfg)}
        assert "exponent_integer" in conditions
        assert "sum_condition" not in conditions

    def test_sum_condition(self, cfg_1x1):
        cfg = replace(cfg_1x1, c1=(cfg_1x1.c1[0] + 0.1,))
        violations = validate(cfg)
        assert [v.condition for v in violations] == ["sum_condition"]
        assert "variable 1" in violations[0].message

    def test_repeated_points(self, cfg_2x2):
        cfg = replace(cfg_2x2, t2=(cfg_2x2.t2[0], cfg_2x2.t2[0] + 1 + cfg_2x2.tau_value))
        conditions = [violation.condition for violation in validate(cfg)]
        assert "distinct_points" in conditions

    def test_antipodal_points(self, cfg_1x1):
        cfg = replace(cfg_1x1, t2=(-cfg_1x1.t1[0] + 1,))
        assert "antipodal_points" in {v.condition for v in validate(cfg)}

    def test_half_period_point(self, cfg_1x1):
        cfg = replace(cfg_1x1, t1=(0.5 + 0.5j,))
        assert "half_period_point" in {v.condition for v in validate(cfg)}

    def test_lambda_in_lattice(self, cfg_1x1):
        """Moving c1_inf so that lambda1 = 0 is reported, not raised."""
        lam1, _ = derive_lambda(cfg_1x1)
        cfg = replace(cfg_1x1, c1_inf=cfg_1x1.c1_inf + lam1)
        violations = validate(cfg)
        assert any(v.condition == "lambda_lattice" and "lambda1 " in v.message for v in violations)

    def test_violation_to_dict(self, cfg_1x1):
        cfg = replace(cfg_1x1, t1=(0.5 + 0.5j,))
        data = [v.to_dict() for v in validate(cfg)][0]
        assert data["condition"] == "half_period_point"
        assert data["values"]["t1[1]"] == [0.5, 0.5]


class TestDerivedQuantities:
    """Lambdas, counts and related configurations."""

    def test_lambda_formula(self, cfg_2x2):
        tau = cfg_2x2.tau_value
        lam1, lam2 = derive_lambda(cfg_2x2)
        expected1 = -cfg_2x2.c1_inf - cfg_2x2.c10 * tau - sum(c * t for c, t in zip(cfg_2x2.c1, cfg_2x2.t1))
        expected2 = -cfg_2x2.c2_inf - cfg_2x2.c20 * tau - sum(c * t for c, t in zip(cfg_2x2.c2, cfg_2x2.t2))
        assert lam1 == pytest.approx(expected1)
        assert lam2 == pytest.approx(expected2)

    def test_lambda_co_varies_with_points(self, cfg_2x2):
        delta = 1e-3 + 2e-3j
        moved = shift_point(cfg_2x2, 1, 2, delta)
        lam1, lam2 = derive_lambda(cfg_2x2)
        moved1, moved2 = derive_lambda(moved)
        assert moved1 == pytest.approx(lam1 - cfg_2x2.c1[1] * delta, abs=1e-14)
        assert moved2 == pytest.approx(lam2, abs=1e-14)
        assert moved.c1_inf == cfg_2x2.c1_inf

    def test_with_point(self, cfg_2x2):
        moved = with_point(cfg_2x2, 2, 1, 0.4 + 0.3j)
        assert moved.t2 == (0.4 + 0.3j, cfg_2x2.t2[1])
        assert moved.t1 == cfg_2x2.t1
        assert moved.c2_inf == cfg_2x2.c2_inf

    @pytest.mark.parametrize("n1", [1, 2, 3, 4, 5])
    @pytest.mark.parametrize("n2", [1, 2, 3, 4, 5])
    def test_basis_size_is_euler_characteristic(self, n1, n2):
        cfg = _grid_config(n1, n2)
        indices = psi_index_set(cfg)
        assert len(indices) == euler_characteristic(n1, n2) == n1 * n2 + 2 * n1 + 2 * n2 + 4
        assert count_intersection_points(n1, n2) == len(indices)
        assert len(set(indices)) == len(indices)

    def test_index_order(self):
        labels = [index.label for index in psi_index_set(_grid_config(2, 1))]
        assert labels == ["1,1", "2,1", "1,+", "1,-", "2,+", "2,-", "+,1", "-,1",
                          "+-,1", "+-,2", "+-,3", "+-,4"]

    def test_euler_characteristic_rejects_empty(self):
        with pytest.raises(ValidationError, match="must be >= 1"):
            euler_characteristic(0, 2)

    def test_dual_and_reciprocal_negate_lambda(self, cfg_2x2):
        lam = np.array(derive_lambda(cfg_2x2))
        assert np.array(derive_lambda(dual(cfg_2x2))) == pytest.approx(-lam)
        assert np.array(derive_lambda(reciprocal(cfg_2x2))) == pytest.approx(-lam)
        assert validate(reciprocal(cfg_2x2)) == []

    def test_swapped_is_an_involution(self, cfg_2x2):
        once = swapped(cfg_2x2)
        assert once.t1 == cfg_2x2.t2
        assert derive_lambda(once) == pytest.approx(derive_lambda(cfg_2x2)[::-1])
        assert swapped(once) == cfg_2x2

    def test_half_periods_and_varpi(self):
        tau = 0.3 + 1.2j
        assert half_periods(tau) == (0j, 0.5 + 0j, tau / 2, (1 + tau) / 2)
        assert [varpi(m) for m in (1, 2, 3, 4)] == [0j, 0j, -1j * np.pi, -1j * np.pi]
        with pytest.raises(ValidationError, match="Corner index"):
            varpi(5)

    def test_period_multipliers(self, cfg_1x1):
        expected = {
            PeriodShift.U1_ONE: np.exp(2j * np.pi * cfg_1x1.c10),
            PeriodShift.U1_TAU: np.exp(-2j * np.pi * cfg_1x1.c1_inf),
            PeriodShift.U2_ONE: np.exp(2j * np.pi * (cfg_1x1.c20 - cfg_1x1.c)),
            PeriodShift.U2_TAU: np.exp(-2j * np.pi * (cfg_1x1.c2_inf - cfg_1x1.c)),
        }
        for shift, value in expected.items():
            assert period_multiplier(cfg_1x1, shift) == pytest.approx(value)

    def test_period_shift_offsets(self):
        tau = 0.2 + 1.1j
        assert PeriodShift.U1_TAU.offsets(tau) == (tau, 0j)
        assert PeriodShift.U2_ONE.offsets(tau) == (0j, 1.0)
        assert PeriodShift.U2_TAU.variable == 2 and PeriodShift.U2_TAU.is_tau


class TestRandomConfig:
    """Seeded random configurations."""

    @pytest.mark.parametrize("placement", ["generic", "separated"])
    @pytest.mark.parametrize("shape", [(1, 1), (2, 2), (3, 2)])
    def test_valid(self, placement, shape):
        cfg = random_config(np.random.default_rng(11), *shape, placement=placement)
        assert (cfg.n1, cfg.n2) == shape
        assert validate(cfg) == []

    def test_separated_ranges(self):
        cfg = random_config(np.random.default_rng(3), 2, 2, placement="separated")
        tau = cfg.tau_value
        for points, low, high in ((cfg.t1, 0.05, 0.17), (cfg.t2, 0.33, 0.45)):
            for t in points:
                y = t.imag / tau.imag
                x = t.real - y * tau.real
                assert low <= x <= high and low <= y <= high

    def test_seeded(self):
        first = random_config(np.random.default_rng(5), 2, 2)
        second = random_config(np.random.default_rng(5), 2, 2)
        assert first == second

    def test_unknown_placement(self):
        with pytest.raises(ValidationError, match="Unknown placement"):
            random_config(np.random.default_rng(0), 1, 1, placement="clustered")


class TestProblemFiles:
    """Parsing and serialization of problem files."""

    def test_load_sample(self, sample_1x1_path):
        cfg, cycle = load_problem_file(sample_1x1_path)
        assert (cfg.n1, cfg.n2) == (1, 1)
        assert cfg.tau_value == 1j
        assert cycle == {"gamma1": "0", "gamma2": "0", "radius": 0.05}

    def test_serialization_preserves_config(self, cfg_2x2):
        data = json.loads(json.dumps(problem_to_dict(cfg_2x2)))
        assert parse_problem(data) == cfg_2x2

    def test_missing_keys(self, cfg_1x1):
        data = problem_to_dict(cfg_1x1)
        del data["c20"]
        with pytest.raises(ValidationError, match="missing keys") as exc_info:
            parse_problem(data)
        assert exc_info.value.details["field"] == "c20"

    def test_bad_pair(self, cfg_1x1):
        data = problem_to_dict(cfg_1x1)
        data["tau"] = [0, "1"]
        with pytest.raises(ValidationError, match=r"tau must be an \[re, im\] pair"):
            parse_problem(data)

    def test_mismatched_exponents(self, cfg_2x2):
        data = problem_to_dict(cfg_2x2)
        data["c1"] = data["c1"][:1]
        with pytest.raises(ValidationError, match="c1 has 1 entries but t1 has 2"):
            parse_problem(data)

    def test_not_an_object(self):
        with pytest.raises(ValidationError, match="JSON object"):
            parse_problem([1, 2])

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "tau": [0, 1],\n  "t1": [[0.1, 0.1]\n}\n', encoding="utf-8")
        with pytest.raises(ParseError, match="Malformed JSON") as exc_info:
            read_json(path)
        assert exc_info.value.details["line"] == 4
        assert exc_info.value.details["path"] == str(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="Cannot read"):
            read_json(tmp_path / "absent.json")

    def test_digest_ignores_name(self, cfg_1x1):
        assert config_digest(cfg_1x1) == config_digest(replace(cfg_1x1, name="renamed"))
        assert config_digest(cfg_1x1) != config_digest(shift_point(cfg_1x1, 1, 1, 1e-9))
        assert len(config_digest(cfg_1x1)) == 64


class TestBasisIndex:
    """Basis index validation and labels."""

    def test_labels(self):
        assert BasisIndex.point(1, 2).label == "1,2"
        assert BasisIndex.row_pm(1, 1).label == "1,+"
        assert BasisIndex.col_pm(-1, 2).label == "-,2"
        assert BasisIndex.corner(3).label == "+-,3"

    def test_malformed(self):
        with pytest.raises(ValidationError, match="Malformed basis index"):
            BasisIndex(IndexKind.ROW_PM, i=1, sign=2)
        with pytest.raises(ValidationError, match="Malformed basis index"):
            BasisIndex.corner(5)
        with pytest.raises(ValidationError, match="must be >= 1"):
            BasisIndex.point(0, 1)
