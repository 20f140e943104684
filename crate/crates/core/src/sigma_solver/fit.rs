//! Least-squares recovery of boundary-expansion coefficients from numerical
//! solutions.
//!
//! The tails being fitted are small next to the leading behaviour (at
//! `s = -12` the `s^{-4}` term of `u` is about `1e-7` of the value), and a
//! dense inverse-power basis is badly conditioned. Both the solution samples
//! and the normal equations are therefore carried in MPFR.

use rug::Float;
use serde::{Deserialize, Serialize};

use super::anchor::{self, Problem};
use super::systems::SigmaPii;
use super::SigmaKind;
use crate::error::{domain, Error, Result};
use crate::ode::{taylor, TaylorSettings};

/// Fitted coefficients `c` of `sum c_k t^{e_k}` over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub window: (f64, f64),
    /// Largest pointwise misfit of the fitted sum.
    pub max_misfit: f64,
}

impl TailFit {
    /// Coefficient of `t^e`, if `e` is in the basis.
    pub fn coefficient(&self, e: f64) -> Option<f64> {
        self.exponents.iter().position(|x| (x - e).abs() < 1e-12).map(|i| self.coefficients[i])
    }
}

/// Samples of a soft-edge sigma function on `points` equispaced abscissae,
/// integrated at data tolerance `tol`.
fn soft_samples(kind: SigmaKind, a: f64, window: (f64, f64), points: usize, tol: f64) -> Result<(Vec<Float>, Vec<Float>)> {
    let (lo, hi) = window;
    let p = Problem { kind, n: 0, a };
    let start = anchor::start(p, lo, hi, tol)?;
    let bits = start.bits;
    let mut y0: Vec<Float> = start.y.to_vec();
    y0.push(Float::new(bits));
    let traj = taylor(&SigmaPii, start.t0, &y0, lo, TaylorSettings::for_bits(bits))?;
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let t = Float::with_val(bits, lo + (hi - lo) * i as f64 / (points - 1) as f64);
        let y = traj
            .eval_mp(0, &t, 0)
            .ok_or_else(|| Error::Domain(format!("{} outside the integration", t.to_f64())))?;
        xs.push(t);
        ys.push(y);
    }
    Ok((xs, ys))
}

/// Solve the least-squares problem `min |A c - y|` by the normal equations.
fn least_squares(rows: &[Vec<Float>], y: &[Float], prec: u32) -> Result<Vec<Float>> {
    let k = rows[0].len();
    let mut m = vec![vec![Float::new(prec); k + 1]; k];
    for (row, yi) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                m[i][j] += Float::with_val(prec, &row[i] * &row[j]);
            }
            m[i][k] += Float::with_val(prec, &row[i] * yi);
        }
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| m[x][col].clone().abs().partial_cmp(&m[y][col].clone().abs()).unwrap())
            .unwrap();
        if m[piv][col].is_zero() {
            return Err(Error::Singular("least-squares basis is degenerate on the window".into()));
        }
        m.swap(col, piv);
        for r in col + 1..k {
            let f = Float::with_val(prec, &m[r][col] / &m[col][col]);
            for c in col..=k {
                let d = Float::with_val(prec, &f * &m[col][c]);
                m[r][c] -= d;
            }
        }
    }
    let mut c = vec![Float::new(prec); k];
    for i in (0..k).rev() {
        let mut acc = m[i][k].clone();
        for j in i + 1..k {
            acc -= Float::with_val(prec, &m[i][j] * &c[j]);
        }
        c[i] = acc / &m[i][i];
    }
    Ok(c)
}

fn fit(xs: &[Float], ys: &[Float], exponents: &[f64], window: (f64, f64)) -> Result<TailFit> {
    let prec = 2 * xs[0].prec() + 64;
    // Columns are scaled to unit size at the window edge nearest zero.
    let edge = window.0.abs().min(window.1.abs());
    let column = |x: &Float, e: f64| -> Float {
        let r = Float::with_val(prec, x / edge).abs();
        let v = Float::with_val(prec, r.ln() * e).exp();
        if x.is_sign_negative() && e.fract() == 0.0 && (e as i64) % 2 != 0 {
            -v
        } else {
            v
        }
    };
    let rows: Vec<Vec<Float>> = xs.iter().map(|x| exponents.iter().map(|&e| column(x, e)).collect()).collect();
    let y: Vec<Float> = ys.iter().map(|v| Float::with_val(prec, v)).collect();
    let c = least_squares(&rows, &y, prec)?;
    let mut max_misfit = 0.0f64;
    for (row, yi) in rows.iter().zip(&y) {
        let mut acc = Float::new(prec);
        for (rc, cc) in row.iter().zip(&c) {
            acc += Float::with_val(prec, rc * cc);
        }
        max_misfit = max_misfit.max((acc - yi).to_f64().abs());
    }
    let coefficients = exponents
        .iter()
        .zip(&c)
        .map(|(&e, ci)| (Float::with_val(prec, ci) / Float::with_val(prec, Float::with_val(prec, edge).ln() * e).exp()).to_f64())
        .collect();
    Ok(TailFit { exponents: exponents.to_vec(), coefficients, window, max_misfit })
}

/// Fit `u(s; a) - s^2/4 = sum_j c_j s^{-j}` on `window` (both ends
/// negative) from a sigma integration carried to `tol`. The basis is dense
/// for `j <= 6`, so that the vanishing `c_2`, `c_3`, `c_5`, `c_6` are
/// measured, and continues with `j = 7, 10, 13, ...` (the only powers the
/// expansion populates) up to `terms` functions in all.
pub fn fit_soft_u_tail(a: f64, window: (f64, f64), terms: usize, tol: f64) -> Result<TailFit> {
    let exponents: Vec<f64> = (1..=6).chain((7..).step_by(3)).take(terms).map(|j| -(j as f64)).collect();
    fit_soft_u_basis(a, window, &exponents, tol)
}

pub(crate) fn fit_soft_u_basis(a: f64, window: (f64, f64), exponents: &[f64], tol: f64) -> Result<TailFit> {
    if !(window.0 < window.1 && window.1 < 0.0) {
        return domain("the u fit needs a window on the negative axis");
    }
    if exponents.is_empty() {
        return domain("need at least one fitted term");
    }
    let points = 4 * exponents.len() + 40;
    let (xs, ys) = soft_samples(SigmaKind::SoftEtilde, a, window, points, tol)?;
    let ys: Vec<Float> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - Float::with_val(x.prec(), x * x) / 4u32)
        .collect();
    fit(&xs, &ys, exponents, window)
}

/// Fit `v(t; a) = sum_{k<terms} c_k t^{1/2 - 3k/2}` on `window` (positive
/// axis), the exponents carried by the expansion at `+inf`.
pub fn fit_soft_v_tail(a: f64, window: (f64, f64), terms: usize, tol: f64) -> Result<TailFit> {
    if !(window.0 > 0.0 && window.0 < window.1) {
        return domain("the v fit needs a window on the positive axis");
    }
    if terms == 0 {
        return domain("need at least one fitted term");
    }
    let points = 8 * terms + 40;
    let (xs, ys) = soft_samples(SigmaKind::SoftCharPoly, a, window, points, tol)?;
    let exponents: Vec<f64> = (0..terms).map(|k| 0.5 - 1.5 * k as f64).collect();
    fit(&xs, &ys, &exponents, window)
}
