//! Scalar special functions and quadrature primitives.
//!
//! Everything here is pure. The `*_mp` variants take a target precision in
//! bits and return MPFR floats; the plain variants return `f64` and are what
//! the double-precision routes use.

use num_complex::Complex64;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mp;
use crate::types::PrecisionConfig;

/// Which integral an [`IncompleteMomentKey`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentTail {
    /// `I_a(t) = int_{-inf}^t (t - x)^a e^{-x^2} dx`.
    LeftIncomplete,
    /// `int_R (t - x)^a e^{-x^2} dx` for real `t` (integer `a` only).
    FullLineReal,
    /// `int_R (t - i x)^a e^{-x^2} dx = sqrt(pi) 2^{-a} H_a(t)` (integer `a`).
    FullLineRotated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncompleteMomentKey {
    pub exponent: f64,
    pub endpoint: f64,
    pub tail: MomentTail,
}

impl IncompleteMomentKey {
    pub fn left(exponent: f64, endpoint: f64) -> Self {
        IncompleteMomentKey {
            exponent,
            endpoint,
            tail: MomentTail::LeftIncomplete,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.exponent;
        match self.tail {
            MomentTail::LeftIncomplete => {
                if a <= -1.0 {
                    return domain(format!("exponent {a} must exceed -1"));
                }
            }
            MomentTail::FullLineReal | MomentTail::FullLineRotated => {
                if a < 0.0 || a.fract() != 0.0 {
                    return domain(format!(
                        "real full-line moments need a non-negative integer exponent, got {a}"
                    ));
                }
            }
        }
        if !self.endpoint.is_finite() {
            return domain("endpoint must be finite");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Hermite polynomials
// ---------------------------------------------------------------------------

/// Physicists' Hermite polynomial `H_p(t)` by the three-term recurrence.
pub fn hermite(p: usize, t: f64) -> f64 {
    let mut h0 = 1.0;
    if p == 0 {
        return h0;
    }
    let mut h1 = 2.0 * t;
    for k in 1..p {
        let h2 = 2.0 * t * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `H_0(t), ..., H_{pmax}(t)`.
pub fn hermite_all(pmax: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(pmax + 1);
    out.push(1.0);
    if pmax >= 1 {
        out.push(2.0 * t);
    }
    for k in 1..pmax {
        let next = 2.0 * t * out[k] - 2.0 * k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

pub fn hermite_all_mp(pmax: usize, t: &Float) -> Vec<Float> {
    let prec = t.prec();
    let mut out = Vec::with_capacity(pmax + 1);
    out.push(mp::f(prec, 1.0));
    if pmax >= 1 {
        out.push(Float::with_val(prec, t * 2u32));
    }
    for k in 1..pmax {
        let a = Float::with_val(prec, t * &out[k]) * 2u32;
        let b = Float::with_val(prec, &out[k - 1] * (2 * k as u32));
        out.push(a - b);
    }
    out
}

/// `H_p(z)` for complex argument.
pub fn hermite_complex(p: usize, z: Complex64) -> Complex64 {
    let mut h0 = Complex64::new(1.0, 0.0);
    if p == 0 {
        return h0;
    }
    let mut h1 = 2.0 * z;
    for k in 1..p {
        let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

// ---------------------------------------------------------------------------
// Airy function
// ---------------------------------------------------------------------------

/// Abscissa beyond which the asymptotic expansions are accurate to
/// `2^-bits`: the optimally truncated remainder is about `e^{-2 xi}`.
pub fn airy_switch(bits: u32) -> f64 {
    let xi = 0.5 * bits as f64 * std::f64::consts::LN_2 + 2.0;
    (1.5 * xi).powf(2.0 / 3.0).max(8.0)
}

fn airy_maclaurin(x: &Float, bits: u32) -> (Float, Float) {
    let xa = x.to_f64().abs();
    let xi = 2.0 / 3.0 * xa.powf(1.5);
    let prec = mp::guarded(bits, 2.0 * xi / std::f64::consts::LN_2 + 8.0);
    let x = Float::with_val(prec, x);
    let x3 = Float::with_val(prec, x.clone().pow(3u32));
    let third = Float::with_val(prec, 1) / 3u32;
    let two_thirds = Float::with_val(prec, 2) / 3u32;
    // c1 = Ai(0) = 3^{-2/3}/Gamma(2/3), c2 = -Ai'(0) = 3^{-1/3}/Gamma(1/3)
    let three = Float::with_val(prec, 3);
    let neg_two_thirds = Float::with_val(prec, -&two_thirds);
    let neg_third = Float::with_val(prec, -&third);
    let c1 = Float::with_val(prec, (&three).pow(&neg_two_thirds)) / two_thirds.clone().gamma();
    let c2 = Float::with_val(prec, (&three).pow(&neg_third)) / third.clone().gamma();

    let mut fsum = Float::with_val(prec, 1);
    let mut gsum = x.clone();
    let mut fdsum = Float::new(prec);
    let mut gdsum = Float::with_val(prec, 1);
    let mut ft = Float::with_val(prec, 1);
    let mut gt = x.clone();
    let mut fdt = Float::with_val(prec, &x * &x) / 2u32;
    let mut gdt = Float::with_val(prec, 1);
    fdsum += &fdt;
    let tiny = Float::with_val(prec, Float::i_exp(1, -(prec as i32) - 8));
    let mut k: u64 = 0;
    loop {
        let kf = k as u32;
        ft *= &x3;
        ft /= (3 * kf + 2) * (3 * kf + 3);
        gt *= &x3;
        gt /= (3 * kf + 3) * (3 * kf + 4);
        gdt *= &x3;
        gdt /= (3 * kf + 1) * (3 * kf + 3);
        fsum += &ft;
        gsum += &gt;
        gdsum += &gdt;
        if k >= 1 {
            fdt *= &x3;
            fdt /= (3 * kf) * (3 * kf + 2);
            fdsum += &fdt;
        }
        k += 1;
        let small = |t: &Float| Float::with_val(prec, t.abs_ref()) <= tiny;
        if k > 2 && small(&ft) && small(&gt) && small(&fdt) && small(&gdt) {
            break;
        }
        if k > 100_000 {
            break;
        }
    }
    let ai = Float::with_val(prec, &c1 * &fsum) - Float::with_val(prec, &c2 * &gsum);
    let aip = Float::with_val(prec, &c1 * &fdsum) - Float::with_val(prec, &c2 * &gdsum);
    (Float::with_val(bits, ai), Float::with_val(bits, aip))
}

fn airy_u_coeffs(n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    let mut u = vec![Float::with_val(prec, 1)];
    let mut v = vec![Float::with_val(prec, 1)];
    for k in 1..=n {
        let kk = k as u64;
        let num = (6 * kk - 5) * (6 * kk - 3) * (6 * kk - 1);
        let den = (2 * kk - 1) * 216 * kk;
        let uk = Float::with_val(prec, &u[k - 1] * num) / den;
        let vk = -Float::with_val(prec, &uk * (6 * kk + 1)) / (6 * kk - 1);
        u.push(uk);
        v.push(vk);
    }
    (u, v)
}

fn airy_asymptotic(x: &Float, bits: u32, max_terms: usize) -> Result<(Float, Float)> {
    let prec = bits + 32;
    let x = Float::with_val(prec, x);
    let ax = Float::with_val(prec, x.abs_ref());
    let xi = Float::with_val(prec, ax.clone().pow(1.5f64)) * 2u32 / 3u32;
    let (u, v) = airy_u_coeffs(max_terms, prec);
    let target = 2f64.powi(-(bits as i32));
    let sqrt_pi = mp::sqrt_pi(prec);
    let quarter = Float::with_val(prec, ax.clone().pow(0.25f64));
    // Partial sums S(u) = sum (-1)^k u_k / xi^k, split by parity for x < 0.
    let mut terms_u = Vec::new();
    let mut terms_v = Vec::new();
    let mut xik = Float::with_val(prec, 1);
    let mut last = f64::INFINITY;
    let mut achieved = f64::INFINITY;
    for k in 0..=max_terms {
        let tu = Float::with_val(prec, &u[k] / &xik);
        let tv = Float::with_val(prec, &v[k] / &xik);
        let mag = tu.to_f64().abs().max(tv.to_f64().abs());
        if k > 0 && mag > last {
            break;
        }
        terms_u.push(tu);
        terms_v.push(tv);
        last = mag;
        achieved = mag;
        if mag < target * 1e-3 {
            break;
        }
        xik *= &xi;
    }
    if achieved > target * 16.0 {
        return Err(Error::Accuracy {
            what: format!("Airy asymptotic expansion at x = {}", x.to_f64()),
            achieved,
            wanted: target,
        });
    }
    if x.is_sign_positive() {
        let mut su = Float::new(prec);
        let mut sv = Float::new(prec);
        for (k, (tu, tv)) in terms_u.iter().zip(&terms_v).enumerate() {
            if k % 2 == 0 {
                su += tu;
                sv += tv;
            } else {
                su -= tu;
                sv -= tv;
            }
        }
        let e = Float::with_val(prec, -&xi).exp();
        let ai = Float::with_val(prec, &e * &su) / (Float::with_val(prec, &sqrt_pi * &quarter) * 2u32);
        let aip = -Float::with_val(prec, &e * &sv) * &quarter / (Float::with_val(prec, &sqrt_pi * 2u32));
        Ok((Float::with_val(bits, ai), Float::with_val(bits, aip)))
    } else {
        // Ai(-z) = pi^{-1/2} z^{-1/4} [sin(xi + pi/4) P - cos(xi + pi/4) Q]
        let mut pu = Float::new(prec);
        let mut qu = Float::new(prec);
        let mut pv = Float::new(prec);
        let mut qv = Float::new(prec);
        for (k, (tu, tv)) in terms_u.iter().zip(&terms_v).enumerate() {
            let sign_neg = (k / 2) % 2 == 1;
            let (tu, tv) = if sign_neg {
                (-tu.clone(), -tv.clone())
            } else {
                (tu.clone(), tv.clone())
            };
            if k % 2 == 0 {
                pu += tu;
                pv += tv;
            } else {
                qu += tu;
                qv += tv;
            }
        }
        let phase = Float::with_val(prec, &xi + mp::pi(prec) / 4u32);
        let (s, c) = phase.sin_cos(Float::new(prec));
        let ai = (Float::with_val(prec, &s * &pu) - Float::with_val(prec, &c * &qu))
            / Float::with_val(prec, &sqrt_pi * &quarter);
        let aip = -(Float::with_val(prec, &c * &pv) + Float::with_val(prec, &s * &qv)) * &quarter
            / &sqrt_pi;
        Ok((Float::with_val(bits, ai), Float::with_val(bits, aip)))
    }
}

/// `Ai(x)` and `Ai'(x)` at `bits` of relative accuracy.
pub fn airy_pair_mp(x: &Float, bits: u32) -> Result<(Float, Float)> {
    let xs = x.to_f64();
    if xs.abs() <= airy_switch(bits) {
        Ok(airy_maclaurin(x, bits))
    } else {
        airy_asymptotic(x, bits, 4 * bits as usize + 64)
    }
}

/// Extends `(Ai, Ai')` to `Ai, Ai', ..., Ai^{(m)}` with
/// `Ai^{(n+2)} = x Ai^{(n)} + n Ai^{(n-1)}`.
fn airy_extend(x: &Float, ai: Float, aip: Float, m: usize) -> Vec<Float> {
    let prec = ai.prec();
    let mut d = vec![ai, aip];
    for n in 0..m.saturating_sub(1) {
        let mut next = Float::with_val(prec, x * &d[n]);
        if n >= 1 {
            next += Float::with_val(prec, &d[n - 1] * n as u32);
        }
        d.push(next);
    }
    d.truncate(m + 1);
    d
}

pub fn airy_derivs_mp(x: &Float, m: usize, bits: u32) -> Result<Vec<Float>> {
    let (ai, aip) = airy_pair_mp(x, bits + 16)?;
    let xx = Float::with_val(bits + 16, x);
    Ok(airy_extend(&xx, ai, aip, m)
        .into_iter()
        .map(|v| Float::with_val(bits, v))
        .collect())
}

/// `Ai(s), Ai'(s), ..., Ai^{(m)}(s)`.
pub fn airy_derivs(s: f64, m: usize, cfg: &PrecisionConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !s.is_finite() {
        return domain("Airy argument must be finite");
    }
    let bits = cfg.working_precision.max(64);
    let x = Float::with_val(bits + 16, s);
    Ok(airy_derivs_mp(&x, m, bits)?
        .iter()
        .map(|v| v.to_f64())
        .collect())
}

/// The expansion `e^{-xi} / (2 sqrt(pi) x^{1/4}) sum_{k<=kmax} (-1)^k u_k / xi^k`
/// truncated at `kmax`; exposed for checking the asymptotic branch.
pub fn airy_asymptotic_truncated(x: f64, kmax: usize) -> f64 {
    assert!(x > 0.0);
    let xi = 2.0 / 3.0 * x.powf(1.5);
    let (u, _) = airy_u_coeffs(kmax, 64);
    let mut s = 0.0;
    for (k, uk) in u.iter().enumerate() {
        let t = uk.to_f64() / xi.powi(k as i32);
        s += if k % 2 == 0 { t } else { -t };
    }
    (-xi).exp() / (2.0 * std::f64::consts::PI.sqrt() * x.powf(0.25)) * s
}

/// Coefficients `u_k` of the Airy asymptotic expansion.
pub fn airy_u(k: usize) -> f64 {
    airy_u_coeffs(k, 64).0[k].to_f64()
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

const GK15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK15_WK[7];
    let mut g = fc * GK15_WG[3];
    for j in 0..7 {
        let x = h * GK15_X[j];
        let s = f(c - x) + f(c + x);
        k += GK15_WK[j] * s;
        if j % 2 == 1 {
            g += GK15_WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
pub fn adaptive_gk15<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..5000 {
        let total: f64 = panels.iter().map(|p| p.2 .0).sum();
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap())
            .unwrap();
        let (lo, hi, _) = panels.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        panels.push((lo, mid, gk15(&f, lo, mid)));
        panels.push((mid, hi, gk15(&f, mid, hi)));
    }
    let total: f64 = panels.iter().map(|p| p.2 .0).sum();
    let err: f64 = panels.iter().map(|p| p.2 .1).sum();
    if err <= 1e3 * abs_tol.max(rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(Error::Accuracy {
            what: "adaptive quadrature did not converge".into(),
            achieved: err,
            wanted: abs_tol.max(rel_tol * total.abs()),
        })
    }
}

/// Gauss-Hermite nodes and weights for the weight `e^{-x^2}`, ascending.
pub fn gauss_hermite_nodes(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return domain("Gauss-Hermite rule needs at least one node");
    }
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let n = m as f64;
    let half = m.div_ceil(2);
    let mut z = 0.0;
    for i in 0..half {
        z = match i {
            0 => (2.0 * n + 1.0).sqrt() - 1.85575 * (2.0 * n + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * n.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..m {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Accuracy {
                what: format!("Gauss-Hermite node {i} of {m}"),
                achieved: f64::NAN,
                wanted: 1e-15,
            });
        }
        x[i] = z;
        x[m - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[m - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    Ok((x, w))
}

// ---------------------------------------------------------------------------
// Incomplete Gaussian moments
// ---------------------------------------------------------------------------

/// `int_0^inf u^a e^{-(u - t)^2} du`, which equals `I_a(t)`.
fn moment_quadrature(a: f64, t: f64) -> Result<f64> {
    if a <= -1.0 {
        return domain("exponent must exceed -1");
    }
    let upper = t.max(0.0) + 9.5;
    let g = |u: f64| (-(u - t) * (u - t)).exp();
    // Graded substitution u = w^{1/(a+1)} on [0, 1] removes the endpoint
    // singularity for a < 0; the rest of the half line is smooth.
    let split = 1.0f64.min(upper);
    let p = 1.0 / (a + 1.0);
    let head = adaptive_gk15(
        |w: f64| g(w.powf(p)),
        0.0,
        split.powf(a + 1.0),
        1e-15,
        0.0,
    )? / (a + 1.0);
    let tail = if upper > split {
        adaptive_gk15(|u: f64| u.powf(a) * g(u), split, upper, 1e-15, 0.0)?
    } else {
        0.0
    };
    Ok(head + tail)
}

/// Direct quadrature of `I_a(t)`, independent of any recurrence.
pub fn incomplete_moment_direct(a: f64, t: f64) -> Result<f64> {
    moment_quadrature(a, t)
}

/// `I_{a0}, I_{a0+1}, ..., I_{a0+count-1}` at `t` in double precision.
///
/// Base cases come from quadrature. For `t >= 0` the recurrence is run
/// upward; for `t < 0` the upward direction amplifies rounding by roughly
/// `(2|t|)^k k!`-type factors, so the two highest orders are computed
/// directly and the recurrence is run downward instead.
pub fn incomplete_moment_ladder(a0: f64, count: usize, t: f64) -> Result<Vec<f64>> {
    if a0 <= -1.0 {
        return domain(format!("exponent {a0} must exceed -1"));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut out = vec![0.0; count];
    let gauss = (-t * t).exp();
    if t >= 0.0 {
        out[0] = moment_quadrature(a0, t)?;
        if count == 1 {
            return Ok(out);
        }
        out[1] = if a0 == 0.0 {
            t * out[0] + 0.5 * gauss
        } else if a0 >= 0.5 {
            t * out[0] + 0.5 * a0 * moment_quadrature(a0 - 1.0, t)?
        } else {
            moment_quadrature(a0 + 1.0, t)?
        };
        for k in 2..count {
            let c = a0 + k as f64;
            out[k] = t * out[k - 1] + 0.5 * (c - 1.0) * out[k - 2];
        }
    } else {
        let top = a0 + (count - 1) as f64;
        out[count - 1] = moment_quadrature(top, t)?;
        if count >= 2 {
            out[count - 2] = moment_quadrature(top - 1.0, t)?;
        }
        for k in (0..count.saturating_sub(2)).rev() {
            let c = a0 + (k + 2) as f64;
            out[k] = 2.0 * (out[k + 2] - t * out[k + 1]) / (c - 1.0);
        }
    }
    Ok(out)
}

/// `int_R (t - x)^p e^{-x^2} dx` for integer `p`, by the binomial expansion
/// against the Gaussian moments `Gamma((j+1)/2)` (even `j`).
pub fn full_line_moment(p: usize, t: f64) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut gm = std::f64::consts::PI.sqrt(); // Gamma(1/2)
    for j in 0..=p {
        if j > 0 {
            binom *= (p - j + 1) as f64 / j as f64;
        }
        if j % 2 == 0 {
            if j > 0 {
                gm *= (j - 1) as f64 / 2.0;
            }
            sum += binom * t.powi((p - j) as i32) * gm;
        }
    }
    sum
}

/// `int_R (lambda - x)^a e^{-x^2} dx` for complex `lambda` with positive
/// imaginary part (principal branch), or integer `a` anywhere.
pub fn full_line_moment_complex(a: f64, lambda: Complex64) -> Result<Complex64> {
    if a.fract() == 0.0 && a >= 0.0 {
        let p = a as usize;
        // Binomial expansion is exact for integer powers.
        let mut sum = Complex64::new(0.0, 0.0);
        let mut binom = 1.0;
        let mut gm = std::f64::consts::PI.sqrt();
        for j in 0..=p {
            if j > 0 {
                binom *= (p - j + 1) as f64 / j as f64;
            }
            if j % 2 == 0 {
                if j > 0 {
                    gm *= (j - 1) as f64 / 2.0;
                }
                sum += binom * lambda.powi((p - j) as i32) * gm;
            }
        }
        return Ok(sum);
    }
    if lambda.im <= 0.0 {
        return domain("non-integer exponents need Im(lambda) > 0");
    }
    let (x, w) = gauss_hermite_nodes(160)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (xi, wi) in x.iter().zip(&w) {
        sum += wi * (lambda - xi).powf(a);
    }
    Ok(sum)
}

/// The moment named by `key`, in double precision.
pub fn incomplete_moment(key: IncompleteMomentKey, cfg: &PrecisionConfig) -> Result<f64> {
    key.validate()?;
    cfg.validate()?;
    let a = key.exponent;
    let t = key.endpoint;
    match key.tail {
        MomentTail::LeftIncomplete => {
            if cfg.is_extended() {
                return Ok(incomplete_moment_mp(a, &mp::f(64, t), cfg.working_precision).to_f64());
            }
            // Ladder from the base exponent: 0 for integers, a - ceil(a) in
            // (-1, 0) otherwise.
            let b = if a.fract() == 0.0 { 0.0 } else { a - a.ceil() };
            let steps = (a - b).round() as usize;
            let ladder = incomplete_moment_ladder(b, steps + 1, t)?;
            Ok(ladder[steps])
        }
        MomentTail::FullLineReal => Ok(full_line_moment(a as usize, t)),
        MomentTail::FullLineRotated => {
            let p = a as usize;
            Ok(std::f64::consts::PI.sqrt() * 2f64.powi(-(p as i32)) * hermite(p, t))
        }
    }
}

/// `I_a(t)` at `bits` of precision from the entire series
/// `e^{-t^2} sum_k (2t)^k / k! Gamma((a+k+1)/2) / 2`.
pub fn incomplete_moment_mp(a: f64, t: &Float, bits: u32) -> Float {
    let tf = t.to_f64();
    let guard = tf * tf * std::f64::consts::LOG2_E
        + (2.0 * a.abs() + 4.0) * (2.0 + tf.abs()).log2();
    let prec = mp::guarded(bits, guard);
    let t = Float::with_val(prec, t);
    let two_t = Float::with_val(prec, &t * 2u32);
    let a_mp = Float::with_val(prec, a);
    // Gamma((a+1)/2 + j) and Gamma((a+2)/2 + j) chains.
    let mut g_even = Float::with_val(prec, Float::with_val(prec, &a_mp + 1u32) / 2u32).gamma();
    let mut g_odd = Float::with_val(prec, Float::with_val(prec, &a_mp + 2u32) / 2u32).gamma();
    let mut pw = Float::with_val(prec, 1); // (2t)^k / k!
    let mut sum = Float::new(prec);
    let mut maxterm = Float::new(prec);
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32)));
    let kmin = (4.0 * tf * tf + 8.0) as usize;
    let mut k = 0usize;
    loop {
        let term = if k % 2 == 0 {
            Float::with_val(prec, &pw * &g_even)
        } else {
            Float::with_val(prec, &pw * &g_odd)
        };
        let mag = Float::with_val(prec, term.abs_ref());
        if mag > maxterm {
            maxterm = mag.clone();
        }
        sum += &term;
        if k % 2 == 0 {
            // advance Gamma((a+1)/2 + k/2) -> Gamma((a+1)/2 + k/2 + 1)
            let arg = Float::with_val(prec, &a_mp + 1u32) / 2u32 + (k / 2) as u32;
            g_even *= arg;
        } else {
            let arg = Float::with_val(prec, &a_mp + 2u32) / 2u32 + (k / 2) as u32;
            g_odd *= arg;
        }
        k += 1;
        pw *= &two_t;
        pw /= k as u32;
        if k > kmin && mag <= Float::with_val(prec, &maxterm * &eps) {
            break;
        }
        if k > 200_000 {
            break;
        }
    }
    let gauss = Float::with_val(prec, -Float::with_val(prec, &t * &t)).exp();
    Float::with_val(bits, sum * gauss / 2u32)
}

/// Real full-line moment for integer `p` in MPFR.
pub fn full_line_moment_mp(p: usize, t: &Float) -> Float {
    let prec = t.prec();
    let mut sum = Float::new(prec);
    let mut binom = Float::with_val(prec, 1);
    let mut gm = mp::sqrt_pi(prec);
    for j in 0..=p {
        if j > 0 {
            binom *= (p - j + 1) as u32;
            binom /= j as u32;
        }
        if j % 2 == 0 {
            if j > 0 {
                gm *= (j - 1) as u32;
                gm /= 2u32;
            }
            let tp = Float::with_val(prec, t.pow((p - j) as u32));
            sum += Float::with_val(prec, &binom * &tp) * &gm;
        }
    }
    sum
}

// ---------------------------------------------------------------------------
// Barnes G and friends
// ---------------------------------------------------------------------------

/// `log G(n)` for integer `n >= 1`, as a sum of log-factorials.
pub fn log_barnes_g(n: u32) -> Result<f64> {
    if n == 0 {
        return domain("Barnes G needs n >= 1");
    }
    let mut acc = 0.0;
    let mut log_fact = 0.0;
    for k in 1..n.saturating_sub(1) {
        log_fact += (k as f64).ln();
        acc += log_fact;
    }
    Ok(acc)
}

pub fn log_barnes_g_mp(n: u32, prec: u32) -> Float {
    let mut acc = Float::new(prec);
    let mut log_fact = Float::new(prec);
    for k in 1..n.saturating_sub(1) {
        log_fact += Float::with_val(prec, k).ln();
        acc += &log_fact;
    }
    acc
}

/// `log c(N)` with `c(N) = 2^{-N^2/2} (2 pi)^{N/2} G(N+2)`, the full-line
/// Hankel determinant of the Gaussian moments divided by `1/N!`.
pub fn log_gue_norm(n: u32) -> f64 {
    let nf = n as f64;
    -0.5 * nf * nf * std::f64::consts::LN_2
        + 0.5 * nf * (2.0 * std::f64::consts::PI).ln()
        + log_barnes_g(n + 2).unwrap()
}

pub fn log_gue_norm_mp(n: u32, prec: u32) -> Float {
    let nf = n as i64;
    let ln2 = Float::with_val(prec, rug::float::Constant::Log2);
    let two_pi_ln = Float::with_val(prec, mp::pi(prec) * 2u32).ln();
    let a = -Float::with_val(prec, &ln2 * (nf * nf)) / 2u32;
    let b = Float::with_val(prec, &two_pi_ln * nf) / 2u32;
    a + b + log_barnes_g_mp(n + 2, prec)
}

pub fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `erf` via MPFR (used for closed-form anchors).
pub fn erf(x: f64) -> f64 {
    Float::with_val(80, x).erf().to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> PrecisionConfig {
        PrecisionConfig::default()
    }

    #[test]
    fn hermite_base_cases() {
        assert_eq!(hermite(0, 1.7), 1.0);
        assert_eq!(hermite(2, 1.0), 2.0);
        assert_eq!(hermite(3, 0.5), 8.0 * 0.125 - 12.0 * 0.5);
    }

    #[test]
    fn hermite_matches_rotated_integral() {
        // sqrt(pi)^{-1} 2^p int (t - ix)^p e^{-x^2} dx by Gauss-Hermite.
        let (x, w) = gauss_hermite_nodes(40).unwrap();
        for p in 0..=20usize {
            for &t in &[-3.0, -1.3, 0.3, 2.2, 3.0] {
                let mut s = Complex64::new(0.0, 0.0);
                for (xi, wi) in x.iter().zip(&w) {
                    s += wi * Complex64::new(t, -xi).powi(p as i32);
                }
                let quad = s.re * 2f64.powi(p as i32) / PI.sqrt();
                let h = hermite(p, t);
                assert!(
                    (quad - h).abs() <= 1e-9 * h.abs().max(1.0),
                    "p={p} t={t} quad={quad} h={h}"
                );
            }
        }
    }

    #[test]
    fn airy_at_zero_matches_closed_form() {
        let d = airy_derivs(0.0, 1, &cfg()).unwrap();
        // 3^{-2/3}/Gamma(2/3) and -3^{-1/3}/Gamma(1/3)
        assert!((d[0] - 0.355_028_053_887_817_2).abs() < 1e-15);
        assert!((d[1] + 0.258_819_403_792_806_8).abs() < 1e-15);
    }

    #[test]
    fn airy_satisfies_its_equation() {
        for i in -16..=16 {
            let s = i as f64 * 0.5;
            let d = airy_derivs(s, 3, &cfg()).unwrap();
            assert!((d[2] - s * d[0]).abs() < 1e-11, "s={s}");
            assert!((d[3] - d[0] - s * d[1]).abs() < 1e-11, "s={s}");
        }
    }

    #[test]
    fn airy_branches_agree_with_mpfr() {
        for &s in &[-12.0, -9.5, -7.0, -3.3, 0.7, 5.9, 8.5, 9.5, 14.0] {
            let d = airy_derivs(s, 0, &cfg()).unwrap()[0];
            let exact = Float::with_val(128, s).ai().to_f64();
            assert!((d - exact).abs() <= 1e-13 * exact.abs().max(1e-300) + 1e-15, "s={s}");
        }
    }

    #[test]
    fn airy_asymptotic_truncation_at_ten() {
        let d = airy_derivs(10.0, 0, &cfg()).unwrap()[0];
        let xi: f64 = 2.0 / 3.0 * 10f64.powf(1.5);
        let k3 = airy_asymptotic_truncated(10.0, 3);
        let bound = airy_u(4) / xi.powi(4);
        assert!(((k3 - d) / d).abs() <= 1.01 * bound);
        let k8 = airy_asymptotic_truncated(10.0, 8);
        assert!(((k8 - d) / d).abs() < 1e-10);
    }

    #[test]
    fn airy_switch_grows_with_precision() {
        assert!(airy_switch(53) >= 8.0);
        assert!(airy_switch(200) > airy_switch(53));
    }

    #[test]
    fn moment_base_values() {
        let c = cfg();
        let i0 = incomplete_moment(IncompleteMomentKey::left(0.0, 0.0), &c).unwrap();
        assert!((i0 - PI.sqrt() / 2.0).abs() < 1e-14);
        let i1 = incomplete_moment(IncompleteMomentKey::left(1.0, 0.0), &c).unwrap();
        assert!((i1 - 0.5).abs() < 1e-14);
        let key = IncompleteMomentKey {
            exponent: 2.0,
            endpoint: 0.0,
            tail: MomentTail::FullLineReal,
        };
        assert!((incomplete_moment(key, &c).unwrap() - PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn moment_rejects_bad_exponent() {
        let r = incomplete_moment(IncompleteMomentKey::left(-1.0, 0.0), &cfg());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn a_equals_one_keeps_boundary_term() {
        for &t in &[-2.0, -0.5, 0.0, 0.7, 3.0] {
            let i0 = incomplete_moment_direct(0.0, t).unwrap();
            let i1 = incomplete_moment_direct(1.0, t).unwrap();
            assert!((i1 - (t * i0 + 0.5 * (-t * t).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn recurrence_agrees_with_quadrature() {
        for a in 2..=12 {
            for i in 0..=16 {
                let t = -4.0 + 0.5 * i as f64;
                let rec = incomplete_moment(IncompleteMomentKey::left(a as f64, t), &cfg()).unwrap();
                let direct = incomplete_moment_direct(a as f64, t).unwrap();
                assert!(
                    ((rec - direct) / direct).abs() < 1e-9,
                    "a={a} t={t} rec={rec} direct={direct}"
                );
            }
        }
    }

    #[test]
    fn fractional_exponents_recur() {
        for &a in &[-0.7, -0.3, 0.4, 1.5, 2.3, 4.75] {
            for &t in &[-2.0, 0.0, 1.5] {
                let rec = incomplete_moment(IncompleteMomentKey::left(a, t), &cfg()).unwrap();
                let direct = incomplete_moment_direct(a, t).unwrap();
                assert!(((rec - direct) / direct).abs() < 1e-10, "a={a} t={t}");
            }
        }
    }

    #[test]
    fn derivative_identity() {
        let h = 1e-4;
        for &a in &[0.5, 1.0, 2.0, 3.5] {
            for &t in &[-1.5, 0.2, 1.8] {
                let m = |x: f64| incomplete_moment(IncompleteMomentKey::left(a, x), &cfg()).unwrap();
                let fd = (m(t + h) - m(t - h)) / (2.0 * h);
                let rhs = a * m_lower(a - 1.0, t);
                assert!((fd - rhs).abs() < 1e-6 * rhs.abs().max(1.0), "a={a} t={t}");
            }
        }
        fn m_lower(a: f64, t: f64) -> f64 {
            incomplete_moment_direct(a, t).unwrap()
        }
    }

    #[test]
    fn series_matches_double_path() {
        for &a in &[0.0, 0.5, 3.0, 7.0] {
            for &t in &[-5.0, -1.0, 0.0, 2.5, 6.0] {
                let s = incomplete_moment_mp(a, &mp::f(64, t), 80).to_f64();
                let d = incomplete_moment_direct(a, t).unwrap();
                assert!(((s - d) / d).abs() < 1e-12, "a={a} t={t} s={s} d={d}");
            }
        }
    }

    #[test]
    fn barnes_g_values() {
        assert_eq!(log_barnes_g(1).unwrap(), 0.0);
        assert_eq!(log_barnes_g(2).unwrap(), 0.0);
        assert!((log_barnes_g(4).unwrap() - 2f64.ln()).abs() < 1e-15);
        // 1! 2! 3! 4! = 288
        assert!((log_barnes_g(6).unwrap() - 288f64.ln()).abs() < 1e-13);
        assert!((log_gue_norm(1) - PI.sqrt().ln()).abs() < 1e-14);
        assert!((log_gue_norm(2) - PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn gauss_hermite_small_rules() {
        let (x, w) = gauss_hermite_nodes(1).unwrap();
        assert!(x[0].abs() < 1e-15 && (w[0] - PI.sqrt()).abs() < 1e-14);
        let (x, w) = gauss_hermite_nodes(2).unwrap();
        assert!((x[1] - 0.5f64.sqrt()).abs() < 1e-14 && (x[0] + 0.5f64.sqrt()).abs() < 1e-14);
        assert!((w[0] - PI.sqrt() / 2.0).abs() < 1e-14);
        for m in [3, 10, 40, 100] {
            let (x, w) = gauss_hermite_nodes(m).unwrap();
            let total: f64 = w.iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-14, "m={m}");
            // exact on x^{2m-2}
            let p = 2 * m - 2;
            let approx: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(p as i32)).sum();
            let exact = full_line_moment(p, 0.0);
            assert!(((approx - exact) / exact).abs() < 1e-11, "m={m}");
        }
    }

    #[test]
    fn full_line_complex_matches_real_for_integers() {
        for p in 0..6 {
            let z = full_line_moment_complex(p as f64, Complex64::new(0.8, 0.0)).unwrap();
            assert!((z.re - full_line_moment(p, 0.8)).abs() < 1e-13);
        }
        assert!(full_line_moment_complex(0.5, Complex64::new(1.0, 0.0)).is_err());
    }
}
