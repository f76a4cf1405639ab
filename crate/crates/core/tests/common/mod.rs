//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;

use tilda::{Fixed, QFormat};

pub fn exact(v: Fixed) -> BigRational {
    BigRational::new(BigInt::from(v.raw()), BigInt::from(1) << v.format().frac_bits())
}

pub fn exact_raw(raw: i64, fmt: QFormat) -> BigRational {
    BigRational::new(BigInt::from(raw), BigInt::from(1) << fmt.frac_bits())
}

/// Round an exact value onto `out`'s grid, half away from zero, then clamp.
/// Returns the raw result and whether the clamp was needed.
pub fn oracle_quantize(x: &BigRational, out: QFormat) -> (i64, bool) {
    let scaled = x * BigRational::from_integer(BigInt::from(1) << out.frac_bits());
    let abs = scaled.abs();
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let mag = (abs + half).floor().to_integer();
    let rounded = if scaled.is_negative() { -mag } else { mag };
    if rounded > BigInt::from(out.max_raw()) {
        (out.max_raw(), true)
    } else if rounded < BigInt::from(out.min_raw()) {
        (out.min_raw(), true)
    } else {
        (rounded.to_i64().expect("in range"), false)
    }
}

/// `round(2^17 / n)` half away from zero.
pub fn oracle_reciprocal(n: u64) -> i64 {
    let (raw, _) = oracle_quantize(
        &BigRational::new(BigInt::from(1), BigInt::from(n)),
        QFormat::new(64, 47).unwrap(),
    );
    raw
}

pub fn is_zero(x: &BigRational) -> bool {
    x.is_zero()
}

/// A raw value of `fmt`: uniform over the full range half of the time,
/// otherwise small enough that products and sums usually stay in range.
pub fn random_raw(rng: &mut impl Rng, fmt: QFormat) -> i64 {
    if rng.random_bool(0.5) {
        rng.random_range(fmt.min_raw()..=fmt.max_raw())
    } else {
        let half = (fmt.total_bits() / 2).max(1);
        let lim = (1i64 << half).min(fmt.max_raw());
        rng.random_range(-lim..=lim)
    }
}

pub fn random_format(rng: &mut impl Rng) -> QFormat {
    let n = rng.random_range(2..=32u32);
    let m = rng.random_range(1..=n);
    QFormat::new(n, m).unwrap()
}

/// First index holding the largest count.
pub fn histogram_argmax(votes: &[usize], classes: usize) -> (usize, Vec<u32>) {
    let mut h = vec![0u32; classes];
    for &v in votes {
        h[v] += 1;
    }
    let mut best = 0;
    for c in 1..classes {
        if h[c] > h[best] {
            best = c;
        }
    }
    (best, h)
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
