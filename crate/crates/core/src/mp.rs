//! Thin helpers over MPFR floats.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

pub type Mpf = Float;

#[inline]
pub fn f(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

#[inline]
pub fn zero(prec: u32) -> Float {
    Float::new(prec)
}

#[inline]
pub fn int(prec: u32, n: i64) -> Float {
    Float::with_val(prec, n)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn sqrt_pi(prec: u32) -> Float {
    pi(prec).sqrt()
}

pub fn powi(x: &Float, n: i32) -> Float {
    Float::with_val(x.prec(), x.pow(n))
}

pub fn ln_abs(x: &Float) -> f64 {
    Float::with_val(x.prec(), x.abs_ref()).ln().to_f64()
}

/// Sum of a slice of products `a[i] * b[k - i]`, the Cauchy convolution term.
pub fn conv(a: &[Float], b: &[Float], k: usize, prec: u32) -> Float {
    let mut acc = Float::new(prec);
    for i in 0..=k {
        acc += Float::with_val(prec, &a[i] * &b[k - i]);
    }
    acc
}

/// Precision large enough to absorb a relative amplification `amp` on top of
/// `bits` (both expressed in bits).
pub fn guarded(bits: u32, extra_bits: f64) -> u32 {
    bits + extra_bits.max(0.0).ceil() as u32 + 32
}
