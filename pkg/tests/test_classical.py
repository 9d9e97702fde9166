"""Classical layer: spec validation, the map itself, symbolic covers,
escape volumes, and thermodynamics.

Volume and pressure claims are cross-checked against independent oracles:
a vectorized Monte Carlo escape estimate, closed forms evaluated inline,
and the transfer-operator route.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oqmap import (
    BakerSpec,
    Word,
    admissible_words,
    cantor_dimension,
    escape_report,
    escape_time,
    pressure,
    spec_digest,
    step,
    symmetric_spec,
    thermo_report,
    trapped_cover,
    validate_spec,
    word_interval,
)
from oqmap.errors import (
    EmptyOrFullKeepSet,
    EndpointMismatch,
    HorizonTooLarge,
    NonMonotonePartition,
    OutOfDomain,
)

from conftest import random_rational_spec

LOG2 = math.log(2.0)
LOG3 = math.log(3.0)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

class TestValidation:
    def test_symmetric_spec_basic(self, spec3):
        assert spec3.branch_count == 3
        assert spec3.lengths == (Fraction(1, 3),) * 3
        assert spec3.kept_lengths == (Fraction(1, 3), Fraction(1, 3))
        assert spec3.survival_fraction == Fraction(2, 3)
        assert spec3.symmetric()
        assert spec3.reflection_symmetric()

    def test_five_branch_spec(self, spec5):
        assert spec5.branch_count == 5
        assert spec5.survival_fraction == Fraction(2, 5)
        assert spec5.reflection_symmetric()

    def test_asym_spec(self, asym_spec):
        assert asym_spec.lengths == (
            Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
        assert not asym_spec.symmetric()
        assert not asym_spec.reflection_symmetric()

    def test_nonmonotone_partition(self):
        with pytest.raises(NonMonotonePartition):
            validate_spec((0, Fraction(2, 3), Fraction(1, 3), 1), (0,))

    def test_endpoint_mismatch(self):
        with pytest.raises(EndpointMismatch):
            validate_spec((0, Fraction(1, 3), Fraction(1, 2)), (0,))

    def test_keep_set_must_be_proper(self):
        with pytest.raises(EmptyOrFullKeepSet):
            symmetric_spec(3, ())
        with pytest.raises(EmptyOrFullKeepSet):
            symmetric_spec(3, (0, 1, 2))
        with pytest.raises(EmptyOrFullKeepSet):
            symmetric_spec(3, (0, 5))
        # the boundary normalizes order and duplicates; only direct
        # dataclass construction insists on canonical form
        assert symmetric_spec(3, (2, 0, 2)) == symmetric_spec(3, (0, 2))
        with pytest.raises(EmptyOrFullKeepSet):
            BakerSpec(partition=symmetric_spec(3, (0, 2)).partition,
                      keep=(2, 0))

    def test_float_partition_rejected(self):
        with pytest.raises(TypeError):
            validate_spec((0, 1 / 3, 2 / 3, 1), (0, 2))

    def test_frozen_dataclass_validates_directly(self):
        with pytest.raises(EmptyOrFullKeepSet):
            BakerSpec((Fraction(0), Fraction(1, 2), Fraction(1)), ())

    def test_digest_is_stable_and_discriminating(self, spec3, spec5):
        d3 = spec_digest(spec3)
        assert len(d3) == 16
        assert all(c in "0123456789abcdef" for c in d3)
        assert d3 == spec_digest(symmetric_spec(3, (0, 2)))
        assert d3 != spec_digest(spec5)
        assert d3 != spec_digest(symmetric_spec(3, (0, 1)))


# ---------------------------------------------------------------------------
# the map
# ---------------------------------------------------------------------------

class TestStep:
    def test_forward_float_example(self, spec3):
        out = step(spec3, (0.1, 0.2))
        assert out is not None
        assert out[0] == pytest.approx(0.3, abs=1e-15)
        assert out[1] == pytest.approx(0.2 / 3, abs=1e-15)

    def test_forward_escape(self, spec3):
        assert step(spec3, (0.5, 0.2)) is None

    def test_forward_exact_asym(self, asym_spec):
        out = step(asym_spec, (Fraction(1, 4), Fraction(0)))
        assert out == (Fraction(1, 2), Fraction(0))
        assert isinstance(out[0], Fraction)

    def test_backward_keyed_on_xi(self, spec3):
        # xi in the removed middle third: the backward orbit escapes even
        # though x sits in a kept rectangle
        assert step(spec3, (Fraction(0), Fraction(1, 2)), "backward") is None
        out = step(spec3, (Fraction(1, 2), Fraction(1, 9)), "backward")
        assert out == (Fraction(1, 6), Fraction(1, 3))

    def test_roundtrip_exact(self, spec3, asym_spec):
        for spec in (spec3, asym_spec):
            for pt in ((Fraction(1, 7), Fraction(2, 7)),
                       (Fraction(0), Fraction(0)),
                       (Fraction(9, 10), Fraction(1, 5))):
                fwd = step(spec, pt)
                if fwd is None:
                    continue
                assert step(spec, fwd, "backward") == pt

    def test_roundtrip_float(self, spec3):
        pt = (0.12, 0.91)
        fwd = step(spec3, pt)
        back = step(spec3, fwd, "backward")
        assert back[0] == pytest.approx(pt[0], abs=1e-14)
        assert back[1] == pytest.approx(pt[1], abs=1e-14)

    def test_out_of_domain(self, spec3):
        for bad in ((1.0, 0.0), (0.0, 1.2), (-0.1, 0.5)):
            with pytest.raises(OutOfDomain):
                step(spec3, bad)

    def test_bad_direction(self, spec3):
        with pytest.raises(ValueError):
            step(spec3, (0.1, 0.1), "sideways")


class TestEscapeTime:
    def test_in_hole_is_zero(self, spec3):
        assert escape_time(spec3, (Fraction(1, 2), Fraction(0)), 10) == 0

    def test_one_step(self, spec3):
        # 1/9 -> 1/3 lands exactly on the left edge of the hole
        assert escape_time(spec3, (Fraction(1, 9), Fraction(0)), 10) == 1

    def test_alive_returns_none(self, spec3):
        assert escape_time(spec3, (Fraction(0), Fraction(0)), 50) is None

    def test_matches_symbolic_interval(self, spec3):
        # points sharing the level-3 itinerary (0,2,0) survive 3 steps
        lo, hi = word_interval(spec3, Word((0, 2, 0)))
        mid = (lo + hi) / 2
        assert escape_time(spec3, (mid, Fraction(0)), 3) is None


# ---------------------------------------------------------------------------
# words and covers
# ---------------------------------------------------------------------------

class TestWords:
    def test_single_symbol_interval(self, spec3):
        assert word_interval(spec3, Word((0,))) == (Fraction(0), Fraction(1, 3))
        assert word_interval(spec3, Word((2,))) == (Fraction(2, 3), Fraction(1))

    def test_nested_interval(self, spec3):
        assert word_interval(spec3, Word((0, 2))) == (
            Fraction(2, 9), Fraction(1, 3))

    def test_empty_word_is_unit_interval(self, spec3):
        assert word_interval(spec3, Word(())) == (Fraction(0), Fraction(1))

    def test_rejects_removed_symbol(self, spec3):
        with pytest.raises(ValueError):
            word_interval(spec3, Word((0, 1)))

    def test_admissible_enumeration(self, spec3):
        words = list(admissible_words(spec3, 2))
        assert [w.symbols for w in words] == [(0, 0), (0, 2), (2, 0), (2, 2)]

    def test_word_direction_validation(self):
        with pytest.raises(ValueError):
            Word((0,), "diagonal")


class TestTrappedCover:
    def test_level1_product_cover(self, spec3):
        cover = trapped_cover(spec3, 1, "K")
        rects = list(cover.rectangles())
        assert len(rects) == 4
        for (xlo, xhi), (ylo, yhi) in rects:
            assert xhi - xlo == Fraction(1, 3)
            assert yhi - ylo == Fraction(1, 3)
        assert cover.measure == Fraction(4, 9)

    def test_level2_backward_strips(self, spec3):
        cover = trapped_cover(spec3, 2, "K_minus")
        assert cover.xi_intervals is None
        assert len(cover.x_intervals) == 4
        assert all(hi - lo == Fraction(1, 9) for lo, hi in cover.x_intervals)
        assert cover.measure == Fraction(4, 9)

    def test_single_branch_refinement(self):
        spec = validate_spec((0, Fraction(1, 2), 1), (0,))
        cover = trapped_cover(spec, 3, "K_minus")
        assert cover.x_intervals == ((Fraction(0), Fraction(1, 8)),)
        assert cover.measure == Fraction(1, 8)

    def test_forward_strips_live_in_xi(self, spec3):
        cover = trapped_cover(spec3, 1, "K_plus")
        assert cover.x_intervals is None
        assert cover.xi_intervals == (
            (Fraction(0), Fraction(1, 3)), (Fraction(2, 3), Fraction(1)))

    def test_rectangles_only_for_full_tail(self, spec3):
        with pytest.raises(ValueError):
            list(trapped_cover(spec3, 1, "K_minus").rectangles())

    def test_validation(self, spec3):
        with pytest.raises(ValueError):
            trapped_cover(spec3, 0, "K")
        with pytest.raises(ValueError):
            trapped_cover(spec3, 1, "K_sideways")

    def test_cover_guard(self, spec3):
        with pytest.raises(HorizonTooLarge):
            trapped_cover(spec3, 12, "K")  # 2^24 rectangles


# ---------------------------------------------------------------------------
# escape volumes
# ---------------------------------------------------------------------------

class TestEscapeReport:
    def test_one_step_volume(self, spec3):
        report = escape_report(spec3, 1)
        assert report.escaped_volumes == (Fraction(1, 3),)
        assert report.survivor_volume == Fraction(2, 3)
        assert report.survivor_intervals == (
            (Fraction(0), Fraction(1, 3)), (Fraction(2, 3), Fraction(1)))

    def test_four_step_volume(self, spec3):
        report = escape_report(spec3, 4)
        assert report.survivor_volume == Fraction(16, 81)
        assert report.escaped_volumes[-1] == Fraction(65, 81)

    def test_asym_two_steps(self, asym_spec):
        assert escape_report(asym_spec, 2).survivor_volume == Fraction(9, 16)

    def test_escaped_mass_monotone(self, spec5):
        vols = escape_report(spec5, 6).escaped_volumes
        assert all(a <= b for a, b in zip(vols, vols[1:]))

    def test_survivors_match_trapped_cover(self, spec3, asym_spec):
        for spec in (spec3, asym_spec):
            for m in (1, 2, 3):
                assert (escape_report(spec, m).survivor_intervals
                        == trapped_cover(spec, m, "K_minus").x_intervals)

    def test_horizon_validation(self, spec3):
        with pytest.raises(ValueError):
            escape_report(spec3, 0)
        with pytest.raises(HorizonTooLarge):
            escape_report(spec3, 24)  # 2^24 intervals > interval guard

    def test_monte_carlo_oracle(self, spec3, asym_spec):
        # independent pointwise check of the interval-refinement volumes:
        # iterate the map on 10^6 uniform seeds in plain float arithmetic
        rng = np.random.default_rng(7011)
        for spec, horizon in ((spec3, 4), (asym_spec, 2)):
            cuts = np.array([float(p) for p in spec.partition])
            lengths = np.diff(cuts)
            kept = np.zeros(spec.branch_count, dtype=bool)
            kept[list(spec.keep)] = True

            x = rng.random(1_000_000)
            alive = np.ones(x.shape, dtype=bool)
            for _ in range(horizon):
                idx = np.clip(np.searchsorted(cuts, x, side="right") - 1,
                              0, spec.branch_count - 1)
                alive &= kept[idx]
                x = np.where(alive, (x - cuts[idx]) / lengths[idx], x)
            p_hat = alive.mean()

            p = float(escape_report(spec, horizon).survivor_volume)
            sigma = math.sqrt(p * (1 - p) / x.size)
            assert abs(p_hat - p) <= 3 * sigma


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_survivor_volume_closed_form(seed, horizon):
    # interval refinement must reproduce (sum ell)^n exactly, any spec
    spec = random_rational_spec(np.random.default_rng(seed), max_keep=3)
    report = escape_report(spec, horizon)
    assert report.survivor_volume == spec.survival_fraction ** horizon


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_step_roundtrip_property(seed):
    rng = np.random.default_rng(seed)
    spec = random_rational_spec(rng)
    den = int(rng.integers(2, 100))
    pt = (Fraction(int(rng.integers(0, den)), den),
          Fraction(int(rng.integers(0, den)), den))
    fwd = step(spec, pt)
    if fwd is not None:
        assert step(spec, fwd, "backward") == pt


# ---------------------------------------------------------------------------
# thermodynamics
# ---------------------------------------------------------------------------

class TestPressure:
    def test_topological_entropy_at_zero(self, spec3):
        assert pressure(spec3, 0.0) == pytest.approx(LOG2, abs=1e-14)

    def test_half_pressure_value(self, spec3):
        want = LOG2 - 0.5 * LOG3
        assert pressure(spec3, 0.5) == pytest.approx(want, abs=1e-12)
        assert want == pytest.approx(0.14384103622589, abs=1e-12)

    def test_symmetric_closed_form(self, spec5):
        # equal widths 1/D collapse the pressure to log n - s log D
        for s in (-1.0, 0.0, 0.7, 2.5):
            want = LOG2 - s * math.log(5.0)
            assert pressure(spec5, s) == pytest.approx(want, abs=1e-12)

    def test_transfer_operator_route_agrees(self, spec3, asym_spec, rng):
        specs = [spec3, asym_spec] + [random_rational_spec(rng)
                                      for _ in range(8)]
        for spec in specs:
            for s in (0.0, 0.31, 0.5, 1.0, 2.0):
                closed = pressure(spec, s, method="closed_form")
                markov = pressure(spec, s, method="markov")
                assert abs(closed - markov) <= 1e-10

    def test_unknown_method(self, spec3):
        with pytest.raises(ValueError):
            pressure(spec3, 0.5, method="oracle")

    def test_monotone_decreasing_in_s(self, asym_spec):
        grid = np.linspace(-1.0, 3.0, 50)
        values = [pressure(asym_spec, s) for s in grid]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestDimension:
    def test_middle_thirds_dimension(self, spec3):
        assert cantor_dimension(spec3) == pytest.approx(LOG2 / LOG3, abs=1e-12)

    def test_golden_mean_dimension(self, asym_spec):
        # kept widths 1/2 and 1/4: 2^-s + 4^-s = 1 has the exact solution
        # s = log(phi)/log(2) with phi the golden ratio
        phi = (1 + math.sqrt(5)) / 2
        nu = cantor_dimension(asym_spec)
        assert nu == pytest.approx(math.log(phi) / LOG2, abs=1e-12)
        assert abs(0.5 ** nu + 0.25 ** nu - 1.0) <= 1e-12

    def test_single_branch_dimension_is_zero(self):
        spec = validate_spec((0, Fraction(1, 2), 1), (0,))
        assert cantor_dimension(spec) == 0.0

    def test_pressure_root_consistency(self, rng):
        for _ in range(10):
            spec = random_rational_spec(rng)
            assert abs(pressure(spec, cantor_dimension(spec))) <= 1e-10


class TestThermoReport:
    def test_middle_thirds_report(self, spec3):
        report = thermo_report(spec3)
        assert report.nu == pytest.approx(0.6309297535714574, abs=1e-12)
        assert report.gamma_cl == pytest.approx(math.log(1.5), abs=1e-12)
        assert report.h_top == pytest.approx(LOG2, abs=1e-12)
        assert report.g_half == pytest.approx(2 / math.sqrt(3), abs=1e-12)
        assert report.g_cl == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
        assert report.convexity_ok
        assert len(report.s_grid) == 50
        assert len(report.values) == 50

    def test_five_branch_report(self, spec5):
        report = thermo_report(spec5)
        assert report.nu == pytest.approx(LOG2 / math.log(5), abs=1e-12)
        assert report.gamma_cl == pytest.approx(math.log(2.5), abs=1e-12)
        assert report.g_half == pytest.approx(2 / math.sqrt(5), abs=1e-12)
        assert report.g_cl == pytest.approx(math.sqrt(0.4), abs=1e-12)

    def test_single_branch_report(self):
        spec = validate_spec((0, Fraction(1, 2), 1), (0,))
        report = thermo_report(spec)
        assert report.nu == 0.0
        assert report.gamma_cl == pytest.approx(LOG2, abs=1e-14)
        assert report.h_top == 0.0

    def test_convexity_chain_random(self, rng):
        # -gamma_cl/2 <= P(1/2) <= (h_top - gamma_cl)/2 pointwise
        for _ in range(10):
            spec = random_rational_spec(rng)
            report = thermo_report(spec)
            assert report.convexity_ok
            p_half = pressure(spec, 0.5)
            assert -report.gamma_cl / 2 - 1e-12 <= p_half
            assert p_half <= (report.h_top - report.gamma_cl) / 2 + 1e-12

    def test_custom_grid(self, spec3):
        grid = np.linspace(0.0, 1.0, 11)
        report = thermo_report(spec3, grid)
        assert np.allclose(report.s_grid, grid)
        assert report.values[0] == pytest.approx(LOG2, abs=1e-14)
