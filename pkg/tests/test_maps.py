"""Map family: evaluation, singular values, inverse branches."""

import cmath

import numpy as np
import pytest

from raysep.curves import ParamCurve
from raysep.errors import OnCut, Overflow
from raysep.maps import (
    BranchLabel,
    CutGeometry,
    ExpAffine,
    MapSpec,
    branch_log,
    exp_map,
    inverse_branch,
    parse_complex,
    parse_map,
)


def negative_real_cut(reach: float = 1e6) -> ParamCurve:
    s = np.geomspace(1.0, reach, 256)
    return ParamCurve(s, -s + 0j)


class TestEvaluate:
    def test_basic_value_and_derivative(self):
        spec = exp_map(0.3)
        value, deriv = spec.evaluate(0.0, 1)
        assert value == pytest.approx(0.3)
        assert deriv == pytest.approx(0.3)

    def test_parabolic_identity(self):
        spec = parse_map("exp(1/e)")
        value, deriv = spec.evaluate(1.0, 1)
        assert value == pytest.approx(1.0, abs=1e-15)
        assert deriv == pytest.approx(1.0, abs=1e-15)

    def test_fixed_point_from_bisection(self):
        from scipy.optimize import brentq
        x = brentq(lambda t: 0.3 * np.exp(t) - t, 0, 1, xtol=1e-14)
        spec = exp_map(0.3)
        value, deriv = spec.evaluate(x, 1)
        assert value == pytest.approx(x, abs=1e-12)
        assert deriv == pytest.approx(x, abs=1e-12)   # multiplier equals the point

    def test_iterate_chain_rule(self):
        spec = exp_map(0.3)
        z = 0.2 + 0.1j
        v1, d1 = spec.evaluate(z, 1)
        v2, d2 = spec.evaluate(v1, 1)
        vp, dp = spec.evaluate(z, 2)
        assert vp == pytest.approx(v2)
        assert dp == pytest.approx(d1 * d2)

    def test_overflow_reported(self):
        spec = exp_map(1.0)
        with pytest.raises(Overflow):
            spec.evaluate(800.0, 1)
        with pytest.raises(Overflow):
            spec.evaluate(20.0, 3)  # tower escapes through 1e300

    def test_array_matches_scalar(self):
        spec = parse_map("exp(1,1)*exp(1,0)")
        zs = np.array([0.1 + 0.2j, -1.0 + 0.5j, 2.0 - 1.0j])
        vals = spec.evaluate_array(zs, 2)
        for z, v in zip(zs, vals):
            assert v == pytest.approx(spec.evaluate(z, 2)[0])

    def test_derivative_against_finite_differences(self):
        rng = np.random.default_rng(5)
        spec = parse_map("exp(0.4,0.2)*exp(0.9,-0.1)")
        h = 1e-6
        for _ in range(1000):
            z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            _, deriv = spec.evaluate(z, 1)
            numeric = (spec.evaluate(z + h, 1)[0] - spec.evaluate(z - h, 1)[0]) / (2 * h)
            assert abs(deriv - numeric) <= 1e-5 * max(1.0, abs(deriv))


class TestSingularValues:
    def test_single_factor(self):
        assert exp_map(0.3).singular_values() == [0.0]

    def test_composition_pushforward(self):
        spec = parse_map("exp(1,1)*exp(1,0)")   # e^{e^z} + 1
        values = spec.singular_values()
        assert values == [pytest.approx(1.0), pytest.approx(2.0)]

    def test_random_affine(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a = complex(rng.uniform(0.1, 2), rng.uniform(-1, 1))
            b = complex(rng.uniform(-2, 2), rng.uniform(-1, 1))
            values = exp_map(a, b).singular_values()
            assert len(values) == 1
            assert values[0] == pytest.approx(b)

    def test_bounded_singular_set(self):
        spec = parse_map("exp(0.5,0.2)*exp(2,0.1)*exp(1,-0.3)")
        values = spec.singular_values()
        assert len(values) <= 3
        assert all(np.isfinite(abs(v)) for v in values)


class TestInverseBranch:
    def test_principal_branch(self):
        spec = exp_map(0.3)
        z = inverse_branch(spec, 3.0, BranchLabel(0, 0), negative_real_cut())
        assert z == pytest.approx(np.log(10.0))

    def test_band_shift(self):
        spec = exp_map(0.3)
        z = inverse_branch(spec, 3.0, BranchLabel(0, 1), negative_real_cut())
        assert z == pytest.approx(np.log(10.0) + 2j * np.pi)

    def test_pullback_iteration_converges_to_repelling_point(self):
        from scipy.optimize import brentq
        spec = exp_map(0.3)
        cut = negative_real_cut()
        z = 3.0 + 0j
        for _ in range(200):
            z = inverse_branch(spec, z, BranchLabel(0, 0), cut)
        target = brentq(lambda t: 0.3 * np.exp(t) - t, 1, 2, xtol=1e-14)
        assert z == pytest.approx(target, abs=1e-12)

    def test_on_cut_rejected(self):
        spec = exp_map(0.3)
        with pytest.raises(OnCut):
            inverse_branch(spec, -5.0 + 0j, BranchLabel(0, 0), negative_real_cut())

    def test_inside_disk_rejected(self):
        spec = exp_map(0.3)
        with pytest.raises(OnCut):
            inverse_branch(spec, 0.5 + 0.1j, BranchLabel(0, 0), negative_real_cut())

    def test_round_trip(self):
        rng = np.random.default_rng(13)
        spec = exp_map(0.3)
        cut = negative_real_cut()
        for _ in range(200):
            w = complex(rng.uniform(-8, 8), rng.uniform(-8, 8))
            if abs(w) < 1.1 or abs(w.imag) < 1e-3 and w.real < 0:
                continue
            for j in (-1, 0, 2):
                z = inverse_branch(spec, w, BranchLabel(0, j), cut)
                value, _ = spec.evaluate(z, 1)
                assert abs(value - w) < 1e-9

    def test_round_trip_composition(self):
        rng = np.random.default_rng(17)
        spec = parse_map("exp(1,1)*exp(1,0)")
        cut = negative_real_cut()
        for _ in range(100):
            w = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
            if abs(w - 1) < 0.5 or abs(w - 2) < 0.5 or abs(w) < 2.3:
                continue
            if abs(w.imag) < 1e-3 and w.real < 0:
                continue
            label = BranchLabel(0, 1, inner=(int(rng.integers(-1, 2)),))
            z = inverse_branch(spec, w, label, cut)
            value, _ = spec.evaluate(z, 1)
            assert abs(value - w) < 1e-9

    def test_branch_disjointness(self):
        rng = np.random.default_rng(19)
        spec = exp_map(0.3)
        cut = negative_real_cut()
        for _ in range(100):
            w = complex(rng.uniform(1.5, 8), rng.uniform(-8, 8))
            images = [inverse_branch(spec, w, BranchLabel(0, j), cut)
                      for j in range(-2, 3)]
            for i in range(len(images)):
                for k in range(i + 1, len(images)):
                    assert abs(images[i] - images[k]) > 1e-6


class TestBranchLog:
    def test_half_open_band_assignment(self):
        cut = CutGeometry.principal()
        # the cut itself (negative reals) belongs to the band below
        z = branch_log(-2.0 + 0j, 0, cut)
        assert z.imag == pytest.approx(np.pi)
        z = branch_log(-2.0 - 1e-12j, 0, cut)
        assert z.imag == pytest.approx(-np.pi, abs=1e-11)

    def test_array_input(self):
        cut = CutGeometry.principal()
        v = np.array([1.0, 1j, -1j])
        z = branch_log(v, 0, cut)
        assert np.allclose(np.exp(z), v)


class TestParsing:
    def test_parse_complex_forms(self):
        assert parse_complex("0.3") == pytest.approx(0.3)
        assert parse_complex("-5") == pytest.approx(-5.0)
        assert parse_complex("1/e") == pytest.approx(1 / cmath.e)
        assert parse_complex("e") == pytest.approx(cmath.e)
        assert parse_complex("2+3i") == pytest.approx(2 + 3j)
        assert parse_complex("pi") == pytest.approx(np.pi)

    def test_parse_map_shorthand(self):
        spec = parse_map("exp(0.3)")
        assert spec.factors == (ExpAffine(0.3 + 0j, 0j),)
        spec = parse_map("exp(1,1)*exp(1,0)")
        assert len(spec.factors) == 2
        assert spec.factors[0].b == 1

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError):
            parse_map("sin(1)")

    def test_json_round_trip(self):
        spec = parse_map("exp(0.4,0.2)*exp(0.9,-0.1)")
        again = MapSpec.from_json(spec.to_json())
        assert again.factors == spec.factors

    def test_zero_coefficient_rejected(self):
        with pytest.raises(ValueError):
            ExpAffine(0.0, 1.0)
