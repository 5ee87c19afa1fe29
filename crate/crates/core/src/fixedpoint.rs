//! Saturating Q7.16 fixed-point arithmetic and shared-exponent weight
//! quantization, matching the integer datapath of a graded-spike
//! neuromorphic core.
//!
//! Values are raw `i32` counts of 2^-16, restricted to the 24-bit two's
//! complement range `[-2^23, 2^23 - 1]`. Every rounding step is
//! round-to-nearest with ties to even, and every overflow saturates to the
//! range edge and is reported through a counter, never wrapped.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Fractional bits of the value format: one raw unit is 2^-16.
pub const FRAC_BITS: u32 = 16;
/// Smallest representable raw count.
pub const RAW_MIN: i32 = -(1 << 23);
/// Largest representable raw count.
pub const RAW_MAX: i32 = (1 << 23) - 1;
/// Largest mantissa magnitude a quantized weight may take.
pub const MANTISSA_MAX: i32 = 127;

/// Largest real value the format represents, `(2^23 - 1) * 2^-16`.
pub fn max_real() -> f64 {
    RAW_MAX as f64 / (1u32 << FRAC_BITS) as f64
}

/// Rounds `n / 2^k` to the nearest integer, ties to even.
///
/// Implemented on the binary representation: truncate toward negative
/// infinity with an arithmetic shift, then correct from the discarded
/// remainder. `k` must be below 127; callers in this crate never exceed the
/// accumulator width.
pub fn div_pow2_rne(n: i128, k: u32) -> i128 {
    if k == 0 {
        return n;
    }
    debug_assert!(k < 127, "shift exponent out of range");
    let q = n >> k;
    let r = n - (q << k);
    let half = 1i128 << (k - 1);
    if r > half || (r == half && (q & 1) != 0) {
        q + 1
    } else {
        q
    }
}

/// A Q7.16 value. Wrapper over the raw count so the saturating, correctly
/// rounded operations are the only way to combine values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct FxValue(i32);

impl FxValue {
    pub const ZERO: FxValue = FxValue(0);
    /// One least significant bit, the smallest positive value.
    pub const LSB: FxValue = FxValue(1);
    pub const MAX: FxValue = FxValue(RAW_MAX);
    pub const MIN: FxValue = FxValue(RAW_MIN);

    /// Wraps a raw count, saturating into the representable range.
    pub fn from_raw_clamped(raw: i64) -> FxValue {
        FxValue(raw.clamp(RAW_MIN as i64, RAW_MAX as i64) as i32)
    }

    pub fn raw(self) -> i32 {
        self.0
    }

    /// Converts a real number, rounding ties to even and saturating.
    /// NaN maps to zero; the emulation never produces NaN inputs, so this is
    /// a defensive choice rather than a semantic one.
    pub fn from_real(x: f64) -> FxValue {
        if x.is_nan() {
            return FxValue::ZERO;
        }
        let scaled = (x * (1u32 << FRAC_BITS) as f64).round_ties_even();
        if scaled >= RAW_MAX as f64 {
            FxValue::MAX
        } else if scaled <= RAW_MIN as f64 {
            FxValue::MIN
        } else {
            FxValue(scaled as i32)
        }
    }

    pub fn to_real(self) -> f64 {
        self.0 as f64 / (1u32 << FRAC_BITS) as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Sum that saturates at the range edges, bumping `saturations` when it
    /// does.
    pub fn add_counting(self, rhs: FxValue, saturations: &mut u64) -> FxValue {
        let sum = self.0 as i64 + rhs.0 as i64;
        if sum < RAW_MIN as i64 || sum > RAW_MAX as i64 {
            *saturations += 1;
        }
        FxValue::from_raw_clamped(sum)
    }

    /// Difference that saturates at the range edges, bumping `saturations`
    /// when it does.
    pub fn sub_counting(self, rhs: FxValue, saturations: &mut u64) -> FxValue {
        let diff = self.0 as i64 - rhs.0 as i64;
        if diff < RAW_MIN as i64 || diff > RAW_MAX as i64 {
            *saturations += 1;
        }
        FxValue::from_raw_clamped(diff)
    }

    pub fn saturating_add(self, rhs: FxValue) -> FxValue {
        let mut ignored = 0;
        self.add_counting(rhs, &mut ignored)
    }

    /// One leak step: `u * (1 - 2^-tau_exp)`, computed as the raw count
    /// minus its correctly rounded `2^-tau_exp` fraction. Never saturates:
    /// the magnitude of the result is bounded by the input's.
    pub fn decay(self, tau_exp: u32) -> FxValue {
        let step = div_pow2_rne(self.0 as i128, tau_exp);
        FxValue((self.0 as i128 - step) as i32)
    }

    /// The complementary fraction of [`FxValue::decay`]: `u * 2^-tau_exp`,
    /// correctly rounded. `decay(t) + tau_scale(t)` recovers the input
    /// exactly.
    pub fn tau_scale(self, tau_exp: u32) -> FxValue {
        FxValue(div_pow2_rne(self.0 as i128, tau_exp) as i32)
    }

    /// One-sided shrink: `u - lambda` when `u > lambda`, else zero.
    /// `lambda` is expected to be nonnegative.
    pub fn soft_threshold(self, lambda: FxValue) -> FxValue {
        if self.0 > lambda.0 {
            FxValue(self.0 - lambda.0)
        } else {
            FxValue::ZERO
        }
    }

    /// Whether `|self| >= |threshold|`.
    pub fn magnitude_at_least(self, threshold: FxValue) -> bool {
        self.0.unsigned_abs() >= threshold.0.unsigned_abs()
    }
}

/// A weight matrix quantized to signed 8-bit mantissas sharing one
/// power-of-two exponent: entry `(r, c)` has value
/// `mantissa[r, c] * 2^exponent`.
///
/// The exponent is the smallest one for which every rounded mantissa fits in
/// `[-127, 127]`; -128 is never produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedWeights {
    rows: usize,
    cols: usize,
    exponent: i32,
    /// Column-major, `rows * cols` entries.
    mantissas: Vec<i8>,
}

impl QuantizedWeights {
    /// Quantizes a real matrix. Fails on non-finite entries; an all-zero
    /// matrix quantizes to zero mantissas with exponent 0.
    pub fn quantize(weights: &Mat<f64>) -> Result<QuantizedWeights> {
        if !weights.is_finite() {
            return Err(Error::NonFinite {
                context: "weight matrix",
            });
        }
        let all_zero = weights.as_slice().iter().all(|&w| w == 0.0);
        if all_zero {
            return Ok(QuantizedWeights {
                rows: weights.rows(),
                cols: weights.cols(),
                exponent: 0,
                mantissas: vec![0; weights.rows() * weights.cols()],
            });
        }

        let fits = |k: i32| -> Option<Vec<i8>> {
            let scale = 2f64.powi(k);
            let mut out = Vec::with_capacity(weights.as_slice().len());
            for &w in weights.as_slice() {
                let m = (w / scale).round_ties_even();
                if !m.is_finite() || m.abs() > MANTISSA_MAX as f64 {
                    return None;
                }
                out.push(m as i8);
            }
            Some(out)
        };

        // Start near the magnitude-based estimate, then walk to the smallest
        // exponent that still fits every entry.
        let max_abs = weights
            .as_slice()
            .iter()
            .fold(0f64, |acc, &w| acc.max(w.abs()));
        let mut k = (max_abs / MANTISSA_MAX as f64).log2().ceil() as i32;
        let mut mantissas = loop {
            match fits(k) {
                Some(m) => break m,
                None => k += 1,
            }
        };
        while let Some(m) = fits(k - 1) {
            mantissas = m;
            k -= 1;
        }

        Ok(QuantizedWeights {
            rows: weights.rows(),
            cols: weights.cols(),
            exponent: k,
            mantissas,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    pub fn mantissa(&self, r: usize, c: usize) -> i8 {
        self.mantissas[c * self.rows + r]
    }

    /// The real-valued matrix this quantization represents.
    pub fn dequantize(&self) -> Mat<f64> {
        let scale = 2f64.powi(self.exponent);
        Mat::from_fn(self.rows, self.cols, |r, c| {
            self.mantissa(r, c) as f64 * scale
        })
    }

    /// Applies the weights to a sparse vector of `(index, value)` spikes.
    ///
    /// Products and the per-row sums are exact in a wide integer
    /// accumulator; only the single final rescale by `2^exponent` rounds
    /// (ties to even) and saturates, bumping `saturations` per clamped
    /// output.
    pub fn apply_sparse(
        &self,
        entries: &[(usize, FxValue)],
        saturations: &mut u64,
    ) -> Result<Vec<FxValue>> {
        let mut acc = vec![0i64; self.rows];
        for &(c, v) in entries {
            if c >= self.cols {
                return Err(Error::SpikeIndexOutOfRange {
                    index: c,
                    input_dim: self.cols,
                });
            }
            let raw = v.raw() as i64;
            if raw == 0 {
                continue;
            }
            let col = &self.mantissas[c * self.rows..(c + 1) * self.rows];
            for (a, &m) in acc.iter_mut().zip(col) {
                *a += m as i64 * raw;
            }
        }

        let mut out = Vec::with_capacity(self.rows);
        for &a in &acc {
            // Weight value m * 2^k times input raw * 2^-16 gives
            // acc * 2^(k - 16); the output raw count is acc * 2^k.
            let scaled: i128 = if self.exponent >= 0 {
                if self.exponent >= 24 && a != 0 {
                    // Any nonzero sum shifted this far exceeds the range.
                    if a > 0 {
                        RAW_MAX as i128 + 1
                    } else {
                        RAW_MIN as i128 - 1
                    }
                } else {
                    (a as i128) << self.exponent.min(24)
                }
            } else {
                div_pow2_rne(a as i128, (-self.exponent) as u32)
            };
            if scaled < RAW_MIN as i128 || scaled > RAW_MAX as i128 {
                *saturations += 1;
            }
            out.push(FxValue(
                scaled.clamp(RAW_MIN as i128, RAW_MAX as i128) as i32
            ));
        }
        Ok(out)
    }
}
