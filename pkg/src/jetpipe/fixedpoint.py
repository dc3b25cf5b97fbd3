"""Parameterized Q-format fixed-point arithmetic.

A Q<I>.<F> number has I integer bits (sign included) and F fractional
bits; the stored integer "raw" represents raw * 2**-F. The datapath
convention is Q12.12 (24 bits total) with Q16.16 (32 bits) accumulators,
so a multiply produces an accumulator-format value and running sums stay
in the wide format until they are cast back down.

Policy, applied everywhere: round to nearest, ties to even; overflow
saturates. Saturation rather than wraparound keeps a precision sweep
meaningful, and RNE avoids a directional bias. Truncation at the
multiplier output would be a one-line change in ``_rne_shift``.

Array functions operate on int64 raws (scalars or numpy arrays); the
FixedVal wrapper carries a single raw with its spec for scalar use.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_SPEC_RE = re.compile(r"^Q(\d+)\.(\d+)$")

# int64 holds any product of two raws as long as each fits in 32 bits
_MAX_TOTAL_BITS = 32


@dataclass(frozen=True)
class FixedSpec:
    """Q-format: ``total_bits`` wide, ``int_bits`` integer bits incl. sign."""

    total_bits: int
    int_bits: int

    def __post_init__(self):
        if not 1 <= self.total_bits <= _MAX_TOTAL_BITS:
            raise ValueError(f"total bits must be in [1, {_MAX_TOTAL_BITS}], got {self.total_bits}")
        if not 1 <= self.int_bits <= self.total_bits:
            raise ValueError(f"int bits must be in [1, {self.total_bits}], got {self.int_bits}")

    @property
    def frac_bits(self) -> int:
        return self.total_bits - self.int_bits

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def min_value(self) -> float:
        return self.raw_min * self.resolution

    @property
    def max_value(self) -> float:
        return self.raw_max * self.resolution

    @classmethod
    def parse(cls, text: str) -> "FixedSpec":
        """Parse a "Q<I>.<F>" string, e.g. "Q12.12"."""
        m = _SPEC_RE.match(text.strip())
        if not m:
            raise ValueError(f"bad fixed-point format {text!r}; expected Q<I>.<F>")
        i, f = int(m.group(1)), int(m.group(2))
        return cls(total_bits=i + f, int_bits=i)

    def __str__(self) -> str:
        return f"Q{self.int_bits}.{self.frac_bits}"


#: 24-bit datapath: 1 sign + 11 integer + 12 fractional bits.
Q12_12 = FixedSpec(24, 12)
#: 32-bit accumulator: 1 sign + 15 integer + 16 fractional bits.
Q16_16 = FixedSpec(32, 16)


def _rne_shift(v, shift: int):
    """Divide raws by 2**shift, round-to-nearest-even (shift<0 widens exactly)."""
    if shift == 0:
        return v
    if shift < 0:
        return v << (-shift)
    q = v >> shift                    # floor division
    r = v - (q << shift)              # remainder in [0, 2**shift)
    half = 1 << (shift - 1)
    round_up = (r > half) | ((r == half) & ((q & 1) == 1))
    return q + round_up


def saturate(raw, spec: FixedSpec):
    """Clamp raws into the two's-complement range of ``spec``."""
    return np.clip(raw, spec.raw_min, spec.raw_max)


def to_float(raw, spec: FixedSpec):
    return raw * spec.resolution


def quantize_array(x, spec: FixedSpec):
    """Real values -> int64 raws; saturating, RNE, rejects non-finite input."""
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError("cannot quantize non-finite values")
    clamped = np.clip(x, spec.min_value, spec.max_value)
    raw = np.round(clamped * 2.0 ** spec.frac_bits).astype(np.int64)
    return saturate(raw, spec)


def fx_mul_array(a_raw, a_spec: FixedSpec, b_raw, b_spec: FixedSpec,
                 out_spec: FixedSpec = Q16_16):
    """Exact raw product rescaled into ``out_spec`` (RNE), then saturated."""
    prod = np.asarray(a_raw, dtype=np.int64) * np.asarray(b_raw, dtype=np.int64)
    shift = a_spec.frac_bits + b_spec.frac_bits - out_spec.frac_bits
    return saturate(_rne_shift(prod, shift), out_spec)


def fx_acc_array(acc_raw, term_raw, spec: FixedSpec = Q16_16):
    """Saturating addition of same-format raws."""
    s = np.asarray(acc_raw, dtype=np.int64) + np.asarray(term_raw, dtype=np.int64)
    return saturate(s, spec)


def downcast_array(raw, src: FixedSpec, dst: FixedSpec):
    """Re-format raws from ``src`` to ``dst``: RNE rescale then saturate."""
    return saturate(_rne_shift(np.asarray(raw, dtype=np.int64), src.frac_bits - dst.frac_bits), dst)


@dataclass(frozen=True)
class FixedVal:
    """A single fixed-point value: integer raw plus its format."""

    raw: int
    spec: FixedSpec

    def __post_init__(self):
        if not self.spec.raw_min <= self.raw <= self.spec.raw_max:
            raise ValueError(f"raw {self.raw} outside {self.spec} range")

    @property
    def value(self) -> float:
        return self.raw * self.spec.resolution


def quantize(x: float, spec: FixedSpec) -> FixedVal:
    return FixedVal(int(quantize_array(x, spec)), spec)


def fx_mul(a: FixedVal, b: FixedVal, out_spec: FixedSpec = Q16_16) -> FixedVal:
    return FixedVal(int(fx_mul_array(a.raw, a.spec, b.raw, b.spec, out_spec)), out_spec)


def fx_acc(acc: FixedVal, term: FixedVal) -> FixedVal:
    if acc.spec != term.spec:
        raise ValueError(f"accumulate across formats: {acc.spec} vs {term.spec}")
    return FixedVal(int(fx_acc_array(acc.raw, term.raw, acc.spec)), acc.spec)


def downcast(v: FixedVal, to: FixedSpec) -> FixedVal:
    return FixedVal(int(downcast_array(v.raw, v.spec, to)), to)
