//! Right-hand starting data for the sigma integrations and the precision
//! they need.
//!
//! Every solution is integrated from the right toward the left. Linearised
//! about the physical solution, the finite-N forms have modes `e^{+-t^2}`
//! and the soft-edge forms `e^{+-(4/3)s^{3/2}}` (right) and
//! `e^{+-(2 sqrt2/3)|s|^{3/2}}` (left). The working precision absorbs the
//! amplification along the path, and the anchor is placed far enough right
//! that any error in the starting data stays below tolerance after it.

use rug::Float;

use super::systems::derivatives_123;
use super::transcendent::{hm_trajectory, soft_data, SoftSeed};
use super::SigmaKind;
use crate::error::{domain, Error, Result};
use crate::hankel_tau::{log_airy_det_mp, log_etilde_mp, log_f_det_mp};
use crate::special_fn::{adaptive_gk15, hermite_all, hermite_all_mp, ln_factorial};

const LN2: f64 = std::f64::consts::LN_2;

/// Kind and parameters of one sigma function.
#[derive(Debug, Clone, Copy)]
pub(super) struct Problem {
    pub kind: SigmaKind,
    pub n: usize,
    pub a: f64,
}

impl Problem {
    /// `(alpha1, alpha2)` of the sigma-PIV form.
    pub fn piv_alphas(&self) -> (f64, f64) {
        (-self.a, -(self.n as f64))
    }
}

/// Data at the anchor: `(value, d1, d2)` at `t0`, the precision to integrate
/// with, and for the resolvents the integral from `t0` to infinity.
pub(super) struct Start {
    pub t0: f64,
    pub y: [Float; 3],
    pub bits: u32,
    pub tail: Option<f64>,
}

pub(super) fn bits_for(log_amp: f64, tol: f64) -> u32 {
    ((log_amp + (1.0 / tol).ln() + 20.0) / LN2).ceil() as u32 + 64
}

/// Growth of the unwanted mode when integrating leftward from `t0` to `lo`
/// (natural log).
pub(super) fn log_amplification(kind: SigmaKind, t0: f64, lo: f64) -> f64 {
    if kind.is_soft() {
        4.0 / 3.0 * t0.max(0.0).powf(1.5) + soft_left(lo)
    } else {
        t0.max(0.0).powi(2) + (-lo).max(0.0).powi(2)
    }
}

/// `(2 sqrt2 / 3) |s|^{3/2}` for `s < 0`.
pub(super) fn soft_left(s: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 / 3.0 * (-s).max(0.0).powf(1.5)
}

/// `ln Ai(x)` for `x >= 2` from the leading asymptotic term.
pub(super) fn ln_airy(x: f64) -> f64 {
    -2.0 / 3.0 * x.powf(1.5) - 0.25 * x.ln() - (2.0 * std::f64::consts::PI.sqrt()).ln()
}

/// Finite-N one-point density `e^{-t^2} (H_N^2 - H_{N+1} H_{N-1}) / (2^N (N-1)! sqrt(pi))`.
pub(super) fn density(n: usize, t: f64) -> f64 {
    let h = hermite_all(n + 1, t);
    let log_c = n as f64 * LN2 + ln_factorial(n as u32 - 1) + 0.5 * std::f64::consts::PI.ln();
    (-t * t - log_c).exp() * (h[n] * h[n] - h[n + 1] * h[n - 1])
}

/// `rho`, `rho'` and `rho''` in MPFR, using `rho' = -2 e^{-t^2} H_N H_{N-1} / c`
/// and `rho'' = -2 e^{-t^2} (2N H_{N-1}^2 - H_N^2) / c`.
fn density_jet(n: usize, t: f64, prec: u32) -> [Float; 3] {
    let x = Float::with_val(prec, t);
    let h = hermite_all_mp(n + 1, &x);
    let mut c = Float::with_val(prec, Float::factorial(n as u32 - 1));
    c *= crate::mp::sqrt_pi(prec);
    c <<= n as u32;
    let w = Float::with_val(prec, -Float::with_val(prec, &x * &x)).exp() / c;
    let hn2 = Float::with_val(prec, &h[n] * &h[n]);
    let value = Float::with_val(prec, &hn2 - Float::with_val(prec, &h[n + 1] * &h[n - 1])) * &w;
    let d1 = Float::with_val(prec, &h[n] * &h[n - 1]) * &w * -2i32;
    let hm2 = Float::with_val(prec, &h[n - 1] * &h[n - 1]) * (2 * n as u32);
    let d2 = Float::with_val(prec, hm2 - hn2) * &w * -2i32;
    [value, d1, d2]
}

fn scan<F: Fn(f64) -> bool>(from: f64, ok: F, what: &str) -> Result<f64> {
    let mut t = from;
    while t <= 40.0 + from.max(0.0) {
        if ok(t) {
            return Ok(t);
        }
        t += 0.25;
    }
    Err(Error::Anchoring(format!("{what}: no anchor within reach of the requested tolerance")))
}

/// Determinant-based log derivatives at `t0`, computed with enough headroom
/// that the stencil error stays below `2^{-bits}`.
fn logdet_jet<F>(f: F, t0: f64, bits: u32, n: usize) -> Result<[Float; 3]>
where
    F: Fn(&Float, u32) -> Result<Float>,
{
    let prec = bits * 3 / 2 + 32 + 16 * n as u32;
    let d = derivatives_123(|x| f(x, prec), t0, prec)?;
    Ok(d.map(|v| Float::with_val(bits, v)))
}

pub(super) fn start(p: Problem, lo: f64, hi: f64, tol: f64) -> Result<Start> {
    let n = p.n;
    match p.kind {
        SigmaKind::Resolvent => {
            // R ~ rho with an error of order rho * int rho ~ rho^2 / (2t).
            let t0 = scan(
                (hi + 0.5).max(1.0),
                |t| {
                    let r = density(n, t).abs().max(f64::MIN_POSITIVE);
                    2.0 * r.ln() - (2.0 * t).ln() + log_amplification(p.kind, t, lo) < (1e-3 * tol).ln()
                },
                "density anchor",
            )?;
            let bits = bits_for(log_amplification(p.kind, t0, lo), tol);
            let tail = adaptive_gk15(|t| density(n, t), t0, t0 + 12.0, 1e-12, 0.0)?;
            Ok(Start { t0, y: density_jet(n, t0, bits), bits, tail: Some(tail) })
        }
        SigmaKind::Etilde => {
            let t0 = hi + 0.5;
            let bits = bits_for(log_amplification(p.kind, t0, lo), tol);
            let a = p.a;
            let y = logdet_jet(|x, prec| log_etilde_mp(n, a, x, prec), t0, bits, n)?;
            Ok(Start { t0, y, bits, tail: None })
        }
        SigmaKind::CharPoly => {
            let t0 = hi + 0.5;
            let bits = bits_for(log_amplification(p.kind, t0, lo), tol);
            let a = p.a as usize;
            let y = if a == 0 {
                [Float::new(bits), Float::new(bits), Float::new(bits)]
            } else {
                logdet_jet(|x, prec| log_f_det_mp(n, a, x, prec).map(|r| r.1), t0, bits, n)?
            };
            Ok(Start { t0, y, bits, tail: None })
        }
        SigmaKind::SoftResolvent | SigmaKind::SoftEtilde => {
            let t0 = hi + 0.5;
            let bits = bits_for(log_amplification(p.kind, t0, lo), tol);
            let seed = SoftSeed::for_parameter(p.a)?;
            let hm = hm_trajectory(seed, t0, t0, log_amplification(p.kind, t0, lo), tol, bits)?;
            let y = soft_data(seed, p.a, &Float::with_val(bits, t0), &hm)?;
            let tail = if p.kind == SigmaKind::SoftResolvent || p.a == 0.0 {
                Some(hm.tail_from(t0)?)
            } else {
                None
            };
            Ok(Start { t0, y: y.map(|v| Float::with_val(bits, v)), bits, tail })
        }
        SigmaKind::SoftCharPoly => {
            let t0 = hi + 0.5;
            let bits = bits_for(log_amplification(p.kind, t0, lo), tol);
            if p.a.fract() == 0.0 {
                let a = p.a as usize;
                let y = if a == 0 {
                    [Float::new(bits), Float::new(bits), Float::new(bits)]
                } else {
                    logdet_jet(|x, prec| log_airy_det_mp(a, x, prec).map(|r| r.1), t0, bits, a)?
                };
                return Ok(Start { t0, y, bits, tail: None });
            }
            // Half-odd a: no determinant. u(.; a) differs from v(.; a) by a
            // multiple of Ai^2, which must already be negligible at `lo`.
            if lo < 2.0 || 2.0 * ln_airy(lo) > (1e-3 * tol).ln() {
                return domain(format!(
                    "v(s; {}) is available only where Ai(s)^2 is below tolerance (s >= {:.2})",
                    p.a,
                    scan(2.0, |s| 2.0 * ln_airy(s) < (1e-3 * tol).ln(), "v range")?
                ));
            }
            let seed = SoftSeed::for_parameter(p.a)?;
            let hm = hm_trajectory(seed, t0, t0, log_amplification(p.kind, t0, lo), tol, bits)?;
            let y = soft_data(seed, p.a, &Float::with_val(bits, t0), &hm)?;
            Ok(Start { t0, y: y.map(|v| Float::with_val(bits, v)), bits, tail: None })
        }
    }
}

/// The sigma form evaluated in MPFR.
pub(super) fn residual_mp(p: Problem, t: &Float, h: &Float, h1: &Float, h2: &Float) -> Float {
    let prec = h.prec();
    let sq = Float::with_val(prec, h2 * h2);
    if p.kind.is_soft() {
        let inner = Float::with_val(prec, h1 * h1) - Float::with_val(prec, t * h1) + h;
        let prod = Float::with_val(prec, h1 * &inner) * 4u32;
        sq + prod - p.a * p.a
    } else {
        let (a1, a2) = p.piv_alphas();
        let g = Float::with_val(prec, t * h1) - h;
        let g2 = Float::with_val(prec, &g * &g) * 4u32;
        let f1 = Float::with_val(prec, h1 + 2.0 * a1);
        let f2 = Float::with_val(prec, h1 - 2.0 * a2);
        let prod = Float::with_val(prec, h1 * &f1) * &f2 * 4u32;
        sq - g2 + prod
    }
}
