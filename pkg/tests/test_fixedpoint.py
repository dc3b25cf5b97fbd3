import math
from fractions import Fraction

import numpy as np
import pytest

from jetpipe.fixedpoint import (
    Q12_12,
    Q16_16,
    FixedSpec,
    FixedVal,
    downcast,
    downcast_array,
    fx_acc,
    fx_acc_array,
    fx_mul,
    fx_mul_array,
    quantize,
    quantize_array,
    to_float,
)


def oracle_rne_to_int(x: Fraction) -> int:
    """Round a rational to the nearest integer, ties to even."""
    fl = math.floor(x)
    frac = x - fl
    if frac > Fraction(1, 2):
        return fl + 1
    if frac < Fraction(1, 2):
        return fl
    return fl if fl % 2 == 0 else fl + 1


def oracle_mul(a_raw: int, b_raw: int, a_spec, b_spec, out_spec) -> int:
    """Arbitrary-precision route: exact rational product, RNE, clamp."""
    exact = Fraction(a_raw * b_raw, 2 ** (a_spec.frac_bits + b_spec.frac_bits))
    q = oracle_rne_to_int(exact * 2 ** out_spec.frac_bits)
    return max(out_spec.raw_min, min(out_spec.raw_max, q))


def oracle_acc(a_raw: int, b_raw: int, spec) -> int:
    return max(spec.raw_min, min(spec.raw_max, a_raw + b_raw))


class TestFixedSpec:
    def test_parse_datapath(self):
        s = FixedSpec.parse("Q12.12")
        assert (s.total_bits, s.int_bits, s.frac_bits) == (24, 12, 12)
        assert s == Q12_12

    def test_parse_accumulator(self):
        s = FixedSpec.parse("Q16.16")
        assert (s.total_bits, s.int_bits) == (32, 16)
        assert s == Q16_16

    def test_str_roundtrip(self):
        for text in ("Q12.12", "Q16.16", "Q2.0", "Q12.20"):
            assert str(FixedSpec.parse(text)) == text

    @pytest.mark.parametrize("bad", ["12.12", "Q12", "Qx.y", "Q-1.2", ""])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            FixedSpec.parse(bad)

    def test_range(self):
        assert Q12_12.max_value == 2 ** 11 - 2 ** -12
        assert Q12_12.min_value == -(2 ** 11)
        assert Q12_12.resolution == 2 ** -12
        assert Q16_16.max_value == pytest.approx(32767.9999847, abs=1e-6)

    def test_bad_specs(self):
        with pytest.raises(ValueError):
            FixedSpec(40, 12)
        with pytest.raises(ValueError):
            FixedSpec(24, 0)
        with pytest.raises(ValueError):
            FixedSpec(24, 25)


class TestQuantize:
    def test_one_point_five(self):
        assert quantize(1.5, Q12_12).raw == 6144  # 1.5 * 4096

    def test_zero(self):
        assert quantize(0.0, Q12_12).raw == 0
        assert quantize(0.0, Q16_16).raw == 0

    def test_saturates_high(self):
        assert quantize(5000.0, Q12_12).raw == 2 ** 23 - 1

    def test_saturates_low(self):
        assert quantize(-5000.0, Q12_12).raw == -(2 ** 23)

    def test_rejects_non_finite(self):
        for bad in (float("nan"), float("inf"), float("-inf")):
            with pytest.raises(ValueError):
                quantize(bad, Q12_12)

    def test_roundtrip_exact_values(self):
        rng = np.random.default_rng(11)
        raws = rng.integers(Q12_12.raw_min, Q12_12.raw_max + 1, size=1000)
        xs = to_float(raws, Q12_12)
        assert np.array_equal(quantize_array(xs, Q12_12), raws)

    def test_error_bound_half_ulp(self):
        rng = np.random.default_rng(12)
        xs = rng.uniform(Q12_12.min_value, Q12_12.max_value, size=5000)
        err = np.abs(to_float(quantize_array(xs, Q12_12), Q12_12) - xs)
        assert err.max() <= 2 ** -13 + 1e-15

    def test_monotone(self):
        rng = np.random.default_rng(13)
        xs = np.sort(rng.uniform(-3000, 3000, size=5000))
        raws = quantize_array(xs, Q12_12)
        assert (np.diff(raws) >= 0).all()


class TestMul:
    def test_exact_product(self):
        a = quantize(1.5, Q12_12)
        b = quantize(2.0, Q12_12)
        out = fx_mul(a, b)
        assert out.spec == Q16_16
        assert out.raw == 196608  # 3.0 * 2**16
        assert out.value == 3.0

    def test_tiny_product_rounds_to_zero(self):
        # 2**-12 * 2**-12 = 2**-24, far below the 2**-16 accumulator ulp
        a = FixedVal(1, Q12_12)
        out = fx_mul(a, a)
        assert out.raw == 0

    def test_half_ulp_tie_goes_even(self):
        # raw product 384 is 1.5 accumulator ulps -> 2 (even)
        assert fx_mul(FixedVal(3, Q12_12), FixedVal(128, Q12_12)).raw == 2
        # raw product 128 is 0.5 ulp -> 0 (even)
        assert fx_mul(FixedVal(1, Q12_12), FixedVal(128, Q12_12)).raw == 0

    def test_in_range_product_does_not_saturate(self):
        # 150 * 150 = 22500 sits below the Q16.16 bound of 2**15
        a = quantize(150.0, Q12_12)
        out = fx_mul(a, a)
        assert out.value == 22500.0

    def test_saturates_beyond_bound(self):
        a = quantize(200.0, Q12_12)
        out = fx_mul(a, a)  # 40000 > 32767.9999847
        assert out.raw == Q16_16.raw_max
        assert out.value == pytest.approx(Q16_16.max_value)

    def test_matches_integer_oracle(self):
        rng = np.random.default_rng(14)
        a = rng.integers(Q12_12.raw_min, Q12_12.raw_max + 1, size=100_000)
        b = rng.integers(Q12_12.raw_min, Q12_12.raw_max + 1, size=100_000)
        got = fx_mul_array(a, Q12_12, b, Q12_12, Q16_16)
        want = [oracle_mul(int(x), int(y), Q12_12, Q12_12, Q16_16)
                for x, y in zip(a, b)]
        assert np.array_equal(got, np.array(want))


class TestAcc:
    def test_identity(self):
        x = quantize(2.25, Q16_16)
        z = FixedVal(0, Q16_16)
        assert fx_acc(z, x).raw == x.raw

    def test_saturates_at_max(self):
        top = FixedVal(Q16_16.raw_max, Q16_16)
        eps = FixedVal(1, Q16_16)
        assert fx_acc(top, eps).raw == Q16_16.raw_max

    def test_thousand_halves(self):
        half = quantize(0.5, Q16_16)
        acc = FixedVal(0, Q16_16)
        for _ in range(1000):
            acc = fx_acc(acc, half)
        # exact integer-raw summation: 1000 * 0.5 * 2**16
        assert acc.raw == 1000 * (1 << 15)
        assert acc.value == 500.0

    def test_spec_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fx_acc(FixedVal(0, Q16_16), FixedVal(0, Q12_12))

    def test_matches_integer_oracle(self):
        rng = np.random.default_rng(15)
        a = rng.integers(Q16_16.raw_min, Q16_16.raw_max + 1, size=100_000)
        b = rng.integers(Q16_16.raw_min, Q16_16.raw_max + 1, size=100_000)
        got = fx_acc_array(a, b, Q16_16)
        want = [oracle_acc(int(x), int(y), Q16_16) for x, y in zip(a, b)]
        assert np.array_equal(got, np.array(want))


class TestDowncast:
    def test_zero(self):
        assert downcast(FixedVal(0, Q16_16), Q12_12).raw == 0

    def test_exact_value(self):
        v = quantize(1.5, Q16_16)
        out = downcast(v, Q12_12)
        assert out.raw == 6144 and out.value == 1.5

    def test_saturating_value(self):
        v = quantize(22500.0, Q16_16)
        out = downcast(v, Q12_12)
        assert out.raw == Q12_12.raw_max

    def test_widening_is_exact(self):
        rng = np.random.default_rng(16)
        raws = rng.integers(Q12_12.raw_min, Q12_12.raw_max + 1, size=1000)
        wide = downcast_array(raws, Q12_12, Q16_16)
        back = downcast_array(wide, Q16_16, Q12_12)
        assert np.array_equal(back, raws)

    def test_rne_on_narrowing(self):
        # 2.5 datapath ulps in the accumulator -> 2 (even); 3.5 -> 4
        assert int(downcast_array(np.int64(40), Q16_16, Q12_12)) == 2
        assert int(downcast_array(np.int64(56), Q16_16, Q12_12)) == 4
