"""Index machinery: winding numbers, subtraction curves, root counting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raysep.curves import (
    IndexValue,
    ParamCurve,
    argument_principle_count,
    concat,
    is_simple,
    multiplicity_at,
    refine_for_argument,
    subtraction_index,
    winding_number,
)
from raysep.errors import (
    CurveHitsPoint,
    CurvesCollide,
    InconsistentRadius,
    NonFiniteInput,
    NotClosed,
    NotCounterclockwise,
    NotSimple,
    ZeroOnContour,
)
from raysep.maps import exp_map, parse_map


# -- independent oracle: crossing counting along a horizontal ray ------------------


def crossing_count_winding(z: np.ndarray, p: complex) -> int:
    """Signed crossings of the ray from p to +infinity along the real axis."""
    x = z.real - p.real
    y = z.imag - p.imag
    total = 0
    for i in range(1, len(x)):
        y0, y1 = y[i - 1], y[i]
        if (y0 >= 0) == (y1 >= 0):
            continue
        x_cross = x[i - 1] + (x[i] - x[i - 1]) * (0 - y0) / (y1 - y0)
        if x_cross > 0:
            total += 1 if y1 > y0 else -1
    return total


def random_closed_polyline(rng: np.random.Generator, n_max: int = 40) -> ParamCurve:
    n = int(rng.integers(4, n_max))
    radii = rng.uniform(0.3, 3.0, n)
    jitter = rng.uniform(-0.25, 0.25, n)
    theta = np.sort(rng.uniform(0, 2 * np.pi, n)) + jitter * 0
    turns = int(rng.integers(1, 4))
    angles = np.concatenate([theta + 2 * np.pi * k for k in range(turns)])
    z = radii.tolist() * turns * np.exp(1j * angles)
    center = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    z = center + np.concatenate([z, z[:1]])
    return ParamCurve(np.arange(len(z), dtype=float), z, closed=True)


class TestWindingNumber:
    def test_unit_circle(self):
        circle = ParamCurve.circle(0, 1.0, n=256)
        idx = winding_number(circle, 0)
        assert idx.integer_snap == 1

    def test_point_outside(self):
        circle = ParamCurve.circle(0, 1.0, n=256)
        assert winding_number(circle, 3 + 0j).integer_snap == 0

    def test_half_turn_open_arc(self):
        s = np.linspace(0, 1, 129)
        arc = ParamCurve(s, np.exp(1j * np.pi * s))
        idx = winding_number(arc, 0)
        assert idx.value == pytest.approx(0.5, abs=1e-12)

    def test_double_traversal(self):
        circle = ParamCurve.circle(0, 1.0, n=128, turns=2)
        assert winding_number(circle, 0).integer_snap == 2

    def test_point_on_curve_rejected(self):
        circle = ParamCurve.circle(0, 1.0, n=64)
        with pytest.raises(CurveHitsPoint):
            winding_number(circle, 1 + 0j)

    def test_non_finite_rejected(self):
        circle = ParamCurve.circle(0, 1.0, n=32)
        with pytest.raises(NonFiniteInput):
            winding_number(circle, complex(np.inf, 0))

    def test_crossing_oracle_agreement(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            curve = random_closed_polyline(rng)
            p = complex(rng.uniform(-4, 4), rng.uniform(-4, 4))
            try:
                idx = winding_number(curve, p)
            except CurveHitsPoint:
                continue
            assert idx.integer_snap is not None
            assert idx.integer_snap == crossing_count_winding(curve.z, p)

    def test_concatenation_additivity(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            pts = rng.uniform(-2, 2, 7) + 1j * rng.uniform(-2, 2, 7)
            first = ParamCurve.from_points(pts[:4])
            second = ParamCurve.from_points(pts[3:])
            p = complex(rng.uniform(3, 5), rng.uniform(3, 5))
            whole = concat(first, second)
            total = winding_number(whole, p).value
            parts = winding_number(first, p).value + winding_number(second, p).value
            assert total == pytest.approx(parts, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 3))
    def test_closed_curve_integrality(self, seed, turns):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 24))
        radii = rng.uniform(0.4, 2.5, n)
        theta = np.sort(rng.uniform(0, 2 * np.pi, n))
        z = np.tile(radii, turns) * np.exp(
            1j * np.concatenate([theta + 2 * np.pi * k for k in range(turns)]))
        z = np.concatenate([z, z[:1]])
        curve = ParamCurve(np.arange(len(z), dtype=float), z, closed=True)
        try:
            idx = winding_number(curve, 0.05 + 0.02j)
        except CurveHitsPoint:
            return
        assert idx.integer_snap is not None


class TestSubtractionIndex:
    def test_circle_minus_constant(self):
        sigma = ParamCurve.circle(0, 2.0, n=128)
        gamma = ParamCurve(np.linspace(0, 1, 128), np.zeros(128, dtype=complex) + 0.0)
        assert subtraction_index(gamma, sigma).integer_snap == 1

    def test_constant_two_minus_circle(self):
        sigma = ParamCurve(np.linspace(0, 1, 128), np.full(128, 2.0 + 0j))
        gamma = ParamCurve.circle(0, 1.0, n=128)
        assert subtraction_index(gamma, sigma).integer_snap == 0

    def test_double_circle_vs_segment_against_dense_oracle(self):
        # sigma traverses the circle of radius 3 (through P = 3) twice
        sigma = ParamCurve.circle(0, 3.0, n=256, turns=2)
        gamma = ParamCurve.segment(1.0, 1j, n=64)
        got = subtraction_index(gamma, sigma).value
        expect = winding_number(gamma, 3.0).value + 2
        assert got == pytest.approx(expect, abs=1e-9)
        # dense-sampling oracle on the difference curve
        s = np.linspace(0, 1, 100_001)
        diff = 3.0 * np.exp(4j * np.pi * s) - (1.0 + (1j - 1.0) * s)
        oracle = np.sum(np.angle(diff[1:] / diff[:-1])) / (2 * np.pi)
        assert got == pytest.approx(oracle, abs=1e-6)

    def test_collision_detected(self):
        sigma = ParamCurve.segment(-1, 1, n=33)
        gamma = ParamCurve.segment(1, -1, n=33)
        with pytest.raises(CurvesCollide):
            subtraction_index(gamma, sigma)

    def test_index_invariance_under_midpoint_perturbations(self):
        # deforming gamma without creating collisions keeps the integer part
        rng = np.random.default_rng(3)
        sigma = ParamCurve.circle(0, 2.0, n=256)
        base = np.linspace(-0.5 - 0.5j, 0.5 + 0.3j, 41)
        gamma = ParamCurve(np.arange(41, dtype=float), base)
        before = subtraction_index(gamma, sigma).value
        for _ in range(20):
            bumped = base.copy()
            k = int(rng.integers(1, 40))
            bumped[k] += complex(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1))
            deformed = ParamCurve(np.arange(41, dtype=float), bumped)
            after = subtraction_index(deformed, sigma).value
            assert round(before) == round(after)


class TestArgumentPrinciple:
    def test_cubic_zeros(self):
        circle = ParamCurve.circle(0, 1.0, n=256)
        assert argument_principle_count(lambda z: z ** 3, circle, "zeros") == 3

    def test_square_fixed_points(self):
        circle = ParamCurve.circle(0, 1.5, n=256)
        assert argument_principle_count(lambda z: z * z, circle, "fixed_points") == 2

    def test_parabolic_double_point(self):
        circle = ParamCurve.circle(0, 0.1, n=256)
        assert argument_principle_count(lambda z: z + z * z, circle,
                                        "fixed_points") == 2

    def test_exponential_rectangle(self):
        from scipy.optimize import brentq
        spec = exp_map(0.3)
        rect = ParamCurve.rectangle(-1, 3, -2, 2)
        count = argument_principle_count(spec, rect, "fixed_points")
        r1 = brentq(lambda x: 0.3 * np.exp(x) - x, 0, 1)
        r2 = brentq(lambda x: 0.3 * np.exp(x) - x, 1, 2)
        assert count == 2
        assert -1 < r1 < 3 and -1 < r2 < 3

    def test_open_contour_rejected(self):
        arc = ParamCurve.segment(0, 1j, n=16)
        with pytest.raises(NotClosed):
            argument_principle_count(lambda z: z, arc, "zeros")

    def test_clockwise_rejected(self):
        circle = ParamCurve.circle(0, 1.0, n=64)
        flipped = ParamCurve(circle.t, circle.z[::-1].copy(), closed=True)
        with pytest.raises(NotCounterclockwise):
            argument_principle_count(lambda z: z, flipped, "zeros")

    def test_self_intersection_rejected(self):
        z = np.array([0, 2 + 2j, 2, 0 + 2j, 0], dtype=complex)
        bowtie = ParamCurve(np.arange(5, dtype=float), z, closed=True)
        with pytest.raises(NotSimple):
            argument_principle_count(lambda z: z - (1 + 1j), bowtie, "zeros")

    def test_zero_on_contour_rejected(self):
        circle = ParamCurve.circle(0, 1.0, n=128)
        with pytest.raises(ZeroOnContour):
            argument_principle_count(lambda z: z - 1, circle, "zeros")

    def test_planted_polynomial_roots(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            deg = int(rng.integers(1, 7))
            roots = rng.uniform(-2, 2, deg) + 1j * rng.uniform(-2, 2, deg)
            center = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            radius = rng.uniform(0.5, 2.5)
            if np.min(np.abs(roots - center) - radius) ** 2 < 1e-4:
                continue
            if np.any(np.abs(np.abs(roots - center) - radius) < 1e-3):
                continue
            poly = np.poly(roots)
            fn = lambda z, c=poly: np.polyval(c, z)
            circle = ParamCurve.circle(center, radius, n=256)
            inside = int(np.sum(np.abs(roots - center) < radius))
            assert argument_principle_count(fn, circle, "zeros") == inside


class TestRefineForArgument:
    def test_square_contour_refined_to_winding_one(self):
        z = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j, 1 + 1j])
        square = ParamCurve(np.arange(5, dtype=float), z, closed=True)
        refined = refine_for_argument(square, lambda w: w, np.pi / 4)
        assert winding_number(refined, 0).integer_snap == 1
        # original samples survive
        for orig in z:
            assert np.min(np.abs(refined.z - orig)) < 1e-14

    def test_no_winding_needs_no_refinement(self):
        circle = ParamCurve.circle(0, 1.0, n=256)
        refined = refine_for_argument(circle, lambda w: w - 5, np.pi / 4)
        assert len(refined) <= len(circle) + 8
        assert winding_number(ParamCurve(refined.t, refined.z - 5), 0).integer_snap == 0

    def test_near_zero_contour(self):
        circle = ParamCurve.circle(1e-3, 0.01, n=8)
        refined = refine_for_argument(circle, lambda w: w, np.pi / 4)
        assert winding_number(refined, 0).integer_snap == 1

    def test_bad_max_step_rejected(self):
        circle = ParamCurve.circle(0, 1.0, n=16)
        with pytest.raises(ValueError):
            refine_for_argument(circle, lambda w: w, np.pi)


class TestMultiplicity:
    def test_simple_linear(self):
        assert multiplicity_at(lambda z: 2 * z, 0, 0.1) == 1

    def test_parabolic_quadratic(self):
        assert multiplicity_at(lambda z: z + z * z, 0, 0.1) == 2

    def test_exponential_parabolic(self):
        assert multiplicity_at(parse_map("exp(1/e)"), 1.0, 0.2) == 2

    def test_inconsistent_radius(self):
        # radius straddles a second fixed point of z^2 (z = 1)
        with pytest.raises(InconsistentRadius):
            multiplicity_at(lambda z: z * z, 0, 1.5)

    def test_not_fixed_rejected(self):
        with pytest.raises(ValueError):
            multiplicity_at(lambda z: 2 * z, 1.0, 0.1)


class TestCurveValidation:
    def test_non_monotone_parameters(self):
        with pytest.raises(ValueError):
            ParamCurve([0, 1, 1], [0, 1j, 2j])

    def test_closed_needs_matching_endpoints(self):
        with pytest.raises(ValueError):
            ParamCurve([0, 1, 2], [0, 1j, 2j], closed=True)

    def test_minimum_samples(self):
        with pytest.raises(ValueError):
            ParamCurve([0.0], [0j])

    def test_simplicity_detector(self):
        square = ParamCurve.rectangle(0, 1, 0, 1)
        assert is_simple(square)
        z = np.array([0, 2 + 2j, 2, 0 + 2j, 0], dtype=complex)
        assert not is_simple(ParamCurve(np.arange(5, dtype=float), z, closed=True))

    def test_snap_rule(self):
        assert IndexValue.from_turns(1.0000001).integer_snap == 1
        assert IndexValue.from_turns(1.001).integer_snap is None
