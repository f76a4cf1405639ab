//! Two's-complement fixed-point arithmetic with per-stage formats.
//!
//! Every quantity on the accelerator datapath is an 18-bit word, but each
//! pipeline stage places the binary point differently. A [`QFormat`] names
//! one such placement; a [`Fixed`] is a raw integer tagged with its format.
//!
//! All operations compute the exact result in wide integer arithmetic, then
//! perform a single rescale into the output format: round half away from
//! zero, then saturate. Nothing ever wraps.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// A signed fixed-point format: `total_bits` wide, of which `int_bits`
/// (sign bit included) sit left of the binary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QFormat {
    total_bits: u32,
    int_bits: u32,
}

impl QFormat {
    pub const MAX_BITS: u32 = 64;

    const fn raw(total_bits: u32, int_bits: u32) -> Self {
        assert!(int_bits >= 1 && int_bits <= total_bits && total_bits <= Self::MAX_BITS);
        QFormat {
            total_bits,
            int_bits,
        }
    }

    pub fn new(total_bits: u32, int_bits: u32) -> Result<Self> {
        if int_bits == 0 || int_bits > total_bits || total_bits > Self::MAX_BITS {
            return Err(Error::config(format!(
                "invalid fixed-point format ({total_bits},{int_bits}): need 1 <= m <= n <= 64"
            )));
        }
        Ok(QFormat {
            total_bits,
            int_bits,
        })
    }

    pub const fn total_bits(self) -> u32 {
        self.total_bits
    }

    pub const fn int_bits(self) -> u32 {
        self.int_bits
    }

    pub const fn frac_bits(self) -> u32 {
        self.total_bits - self.int_bits
    }

    pub const fn max_raw(self) -> i64 {
        ((1i128 << (self.total_bits - 1)) - 1) as i64
    }

    pub const fn min_raw(self) -> i64 {
        (-(1i128 << (self.total_bits - 1))) as i64
    }

    /// Weight of one least-significant bit.
    pub fn resolution(self) -> f64 {
        pow2(-(self.frac_bits() as i32))
    }

    pub fn max_value(self) -> f64 {
        self.max_raw() as f64 * self.resolution()
    }

    pub fn min_value(self) -> f64 {
        self.min_raw() as f64 * self.resolution()
    }

    pub fn contains_raw(self, raw: i64) -> bool {
        (self.min_raw()..=self.max_raw()).contains(&raw)
    }

    fn saturate(self, v: i128) -> (i64, bool) {
        let (lo, hi) = (self.min_raw() as i128, self.max_raw() as i128);
        if v > hi {
            (hi as i64, true)
        } else if v < lo {
            (lo as i64, true)
        } else {
            (v as i64, false)
        }
    }
}

impl std::fmt::Display for QFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.total_bits, self.int_bits)
    }
}

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// A raw two's-complement value interpreted in `fmt`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fixed {
    raw: i64,
    fmt: QFormat,
}

impl Fixed {
    pub fn from_raw(raw: i64, fmt: QFormat) -> Result<Self> {
        if !fmt.contains_raw(raw) {
            return Err(Error::Numeric(format!("raw value {raw} does not fit in {fmt}")));
        }
        Ok(Fixed { raw, fmt })
    }

    pub const fn zero(fmt: QFormat) -> Self {
        Fixed { raw: 0, fmt }
    }

    pub fn max(fmt: QFormat) -> Self {
        Fixed {
            raw: fmt.max_raw(),
            fmt,
        }
    }

    pub fn min(fmt: QFormat) -> Self {
        Fixed {
            raw: fmt.min_raw(),
            fmt,
        }
    }

    pub const fn raw(self) -> i64 {
        self.raw
    }

    pub const fn format(self) -> QFormat {
        self.fmt
    }

    pub fn to_f64(self) -> f64 {
        dequantize(self)
    }
}

/// Divide by `2^shift`, rounding half away from zero.
fn round_shift(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    if shift >= 127 {
        // |v| <= 2^127, so only exact half-way magnitudes round up.
        let mag = v.unsigned_abs();
        let q: i128 = if shift == 127 && mag >= (1u128 << 126) { 1 } else { 0 };
        return if v < 0 { -q } else { q };
    }
    // mag <= 2^127 and half <= 2^125, so the sum cannot overflow.
    let mag = v.unsigned_abs();
    let r = ((mag + (1u128 << (shift - 1))) >> shift) as i128;
    if v < 0 {
        -r
    } else {
        r
    }
}

/// Move an exact value with `from_frac` fractional bits into `out`.
/// Returns the raw result and whether saturation occurred.
fn rescale(v: i128, from_frac: u32, out: QFormat) -> (i64, bool) {
    let to_frac = out.frac_bits();
    if to_frac >= from_frac {
        let s = to_frac - from_frac;
        if v == 0 {
            return (0, false);
        }
        if s >= 127 || v.unsigned_abs() > (i128::MAX >> s) as u128 {
            return out.saturate(if v > 0 { i128::MAX } else { i128::MIN });
        }
        out.saturate(v << s)
    } else {
        out.saturate(round_shift(v, from_frac - to_frac))
    }
}

/// Quantize a real number: round half away from zero at the format's
/// resolution, then saturate. Also reports whether saturation occurred.
pub fn quantize_overflowing(x: f64, fmt: QFormat) -> Result<(Fixed, bool)> {
    if !x.is_finite() {
        return Err(Error::Numeric(format!("cannot quantize non-finite value {x}")));
    }
    let scaled = (x * pow2(fmt.frac_bits() as i32)).round();
    let (hi, lo) = (fmt.max_raw(), fmt.min_raw());
    let (raw, sat) = if scaled >= hi as f64 {
        (hi, scaled > hi as f64)
    } else if scaled <= lo as f64 {
        (lo, scaled < lo as f64)
    } else {
        (scaled as i64, false)
    };
    Ok((Fixed { raw, fmt }, sat))
}

pub fn quantize(x: f64, fmt: QFormat) -> Result<Fixed> {
    quantize_overflowing(x, fmt).map(|(v, _)| v)
}

pub fn dequantize(v: Fixed) -> f64 {
    v.raw as f64 * v.fmt.resolution()
}

/// Re-express `v` in another format.
pub fn requantize(v: Fixed, out: QFormat) -> Fixed {
    let (raw, _) = rescale(v.raw as i128, v.fmt.frac_bits(), out);
    Fixed { raw, fmt: out }
}

pub fn fx_add_overflowing(a: Fixed, b: Fixed, out: QFormat) -> (Fixed, bool) {
    let (fa, fb) = (a.fmt.frac_bits(), b.fmt.frac_bits());
    let f = fa.max(fb);
    // Inputs are at most 64 bits and f <= 63, so the aligned operands fit in i128.
    let sum = ((a.raw as i128) << (f - fa)) + ((b.raw as i128) << (f - fb));
    let (raw, sat) = rescale(sum, f, out);
    (Fixed { raw, fmt: out }, sat)
}

pub fn fx_add(a: Fixed, b: Fixed, out: QFormat) -> Fixed {
    fx_add_overflowing(a, b, out).0
}

pub fn fx_mul_overflowing(a: Fixed, b: Fixed, out: QFormat) -> (Fixed, bool) {
    let product = a.raw as i128 * b.raw as i128;
    let (raw, sat) = rescale(product, a.fmt.frac_bits() + b.fmt.frac_bits(), out);
    (Fixed { raw, fmt: out }, sat)
}

pub fn fx_mul(a: Fixed, b: Fixed, out: QFormat) -> Fixed {
    fx_mul_overflowing(a, b, out).0
}

/// Multiply by an unsigned integer count (a counter word with no fraction).
pub fn fx_mul_count(a: Fixed, count: u64, out: QFormat) -> Fixed {
    let (raw, _) = rescale(a.raw as i128 * count as i128, a.fmt.frac_bits(), out);
    Fixed { raw, fmt: out }
}

/// Divide by a counter value through the reciprocal table: `a * lut[n]`,
/// rescaled into `out`.
pub fn fx_div_by_counter(a: Fixed, n: u64, lut: &ReciprocalLut, out: QFormat) -> Result<Fixed> {
    let recip = lut.reciprocal(n)?;
    let (raw, _) = rescale(
        a.raw as i128 * recip as i128,
        a.fmt.frac_bits() + lut.format().frac_bits(),
        out,
    );
    Ok(Fixed { raw, fmt: out })
}

/// Squared Euclidean distance between two raw vectors sharing `input`'s
/// scale. The sum of squares is accumulated exactly and rounded once.
pub fn fx_sq_distance_overflowing(x: &[i32], y: &[i32], input: QFormat, out: QFormat) -> (Fixed, bool) {
    debug_assert_eq!(x.len(), y.len());
    let acc: i128 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = a as i64 - b as i64;
            (d * d) as i128
        })
        .sum();
    let (raw, sat) = rescale(acc, 2 * input.frac_bits(), out);
    (Fixed { raw, fmt: out }, sat)
}

pub fn fx_sq_distance(x: &[i32], y: &[i32], input: QFormat, out: QFormat) -> Fixed {
    fx_sq_distance_overflowing(x, y, input, out).0
}

/// The quantization budget of each pipeline stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageFormats {
    pub feature_anchor: QFormat,
    pub distance: QFormat,
    pub address_counter: QFormat,
    pub distance_times_counter: QFormat,
    pub anchor_times_counter: QFormat,
    pub anchor_plus_feature: QFormat,
}

impl StageFormats {
    pub const PAPER: StageFormats = StageFormats {
        feature_anchor: QFormat::raw(18, 5),
        distance: QFormat::raw(18, 10),
        address_counter: QFormat::raw(18, 18),
        distance_times_counter: QFormat::raw(18, 16),
        anchor_times_counter: QFormat::raw(18, 10),
        anchor_plus_feature: QFormat::raw(18, 10),
    };

    /// Stage formats in a fixed order, as written into machine snapshots.
    pub fn as_table(&self) -> [QFormat; 6] {
        [
            self.feature_anchor,
            self.distance,
            self.address_counter,
            self.distance_times_counter,
            self.anchor_times_counter,
            self.anchor_plus_feature,
        ]
    }

    pub fn from_table(t: [QFormat; 6]) -> Self {
        StageFormats {
            feature_anchor: t[0],
            distance: t[1],
            address_counter: t[2],
            distance_times_counter: t[3],
            anchor_times_counter: t[4],
            anchor_plus_feature: t[5],
        }
    }

    /// Largest value an unsigned address/counter word can hold.
    pub fn counter_max(&self) -> u64 {
        (1u64 << self.address_counter.total_bits().min(63)) - 1
    }
}

impl Default for StageFormats {
    fn default() -> Self {
        Self::PAPER
    }
}

/// Table of quantized reciprocals `1/n` for `n` in `1..=depth`.
///
/// Entries are unsigned magnitudes with `format().frac_bits()` fractional
/// bits, so the default (18,1) table holds `1/1` exactly as `2^17`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReciprocalLut {
    fmt: QFormat,
    entries: Vec<i32>,
}

impl ReciprocalLut {
    pub const MAGIC: &'static [u8; 4] = b"TLUT";
    pub const DEFAULT_DEPTH: usize = 1 << 18;
    pub const DEFAULT_FORMAT: QFormat = QFormat::raw(18, 1);

    pub fn new(depth: usize, fmt: QFormat) -> Result<Self> {
        Self::check_format(fmt)?;
        if depth == 0 || depth > u32::MAX as usize {
            return Err(Error::config(format!("reciprocal table depth {depth} out of range")));
        }
        let f = fmt.frac_bits();
        let cap = (1u64 << fmt.total_bits()) - 1;
        let entries = (1..=depth as u64)
            .map(|n| {
                // round(2^f / n), half away from zero, in integers.
                let r = ((1u64 << (f + 1)) + n) / (2 * n);
                r.min(cap) as i32
            })
            .collect();
        Ok(ReciprocalLut { fmt, entries })
    }

    fn check_format(fmt: QFormat) -> Result<()> {
        if fmt.total_bits() > 31 {
            return Err(Error::config(format!(
                "reciprocal format {fmt} does not fit 32-bit table entries"
            )));
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    pub fn format(&self) -> QFormat {
        self.fmt
    }

    pub fn entries(&self) -> &[i32] {
        &self.entries
    }

    /// Raw reciprocal of `n`.
    pub fn reciprocal(&self, n: u64) -> Result<i64> {
        if n == 0 {
            return Err(Error::DivisionDomain);
        }
        self.entries
            .get((n - 1) as usize)
            .map(|&e| e as i64)
            .ok_or(Error::Capacity {
                value: n,
                depth: self.depth(),
            })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.entries.len() * 4);
        for e in &self.entries {
            buf.extend_from_slice(&e.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Load a table dumped by [`ReciprocalLut::write_to`]. The file does not
    /// carry the entry format; the caller supplies it.
    pub fn read_from<R: Read>(mut r: R, fmt: QFormat) -> Result<Self> {
        Self::check_format(fmt)?;
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::format("reciprocal table", "bad magic"));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let depth = u32::from_le_bytes(word) as usize;
        if depth == 0 {
            return Err(Error::format("reciprocal table", "zero depth"));
        }
        let mut bytes = vec![0u8; depth * 4];
        r.read_exact(&mut bytes)?;
        let entries = bytes
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(ReciprocalLut { fmt, entries })
    }
}

impl Default for ReciprocalLut {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DEPTH, Self::DEFAULT_FORMAT).expect("default table is valid")
    }
}
