//! Tabulation and sampling commands.

use anyhow::{bail, ensure, Result};
use serde::Serialize;

use gue_painleve::discrete_painleve::log_etilde_recurrence;
use gue_painleve::hankel_tau::{airy_det, f_det, log_etilde};
use gue_painleve::oracle_mc::{mc_estimate, McConfig, Statistic};
use gue_painleve::sigma_solver::{assemble_quantity, solve_sigma, Quantity, SigmaKind, SigmaSolution};
use gue_painleve::{Complex64, GridSpec, PrecisionConfig};

use crate::output::Table;
use crate::{Global, GridArgs, Method, MomentKind, SampleQuantity, SoftQuantity};

/// Grid points `s_min + k step` up to `s_max`. Points within rounding of a
/// multiple of `step` are snapped onto it, so a grid through zero has an
/// exact zero row.
pub fn abscissae(g: &GridArgs) -> Result<Vec<f64>> {
    ensure!(g.s_min.is_finite() && g.s_max.is_finite(), "grid ends must be finite");
    ensure!(g.s_min < g.s_max, "need s_min < s_max");
    ensure!(g.step > 0.0, "need step > 0");
    let count = ((g.s_max - g.s_min) / g.step * (1.0 + 1e-12)).floor() as usize + 1;
    ensure!(count <= 1_000_000, "grid has too many points");
    Ok((0..count)
        .map(|k| {
            let s = g.s_min + g.step * k as f64;
            let m = (s / g.step).round();
            if (s / g.step - m).abs() < 1e-9 {
                m * g.step
            } else {
                s
            }
        })
        .collect())
}

fn cfg(g: &Global) -> Result<PrecisionConfig> {
    let c = PrecisionConfig::with_bits(g.precision_bits);
    c.validate()?;
    Ok(c)
}

/// Integration spacing of the ODE routes; table values are read off by
/// Hermite interpolation, so the user's step does not limit accuracy.
const ODE_SPACING: f64 = 0.05;

fn sigma(kind: SigmaKind, n: usize, a: f64, xs: &[f64], tol: f64) -> Result<SigmaSolution> {
    let (lo, hi) = (xs[0], *xs.last().unwrap());
    let points = ((hi - lo) / ODE_SPACING).ceil() as usize + 1;
    let spec = GridSpec::new(lo, hi, points.max(2));
    Ok(solve_sigma(kind, n, a, &spec, tol)?)
}

pub fn gap(n: usize, grid: &GridArgs, method: Method, g: &Global) -> Result<Table> {
    let xs = abscissae(grid)?;
    let mut t = Table::new(&["s", "E_N", "log_E_N"]);
    match method {
        Method::Det => {
            let c = cfg(g)?;
            for &s in &xs {
                let l = log_etilde(n, 0.0, s, &c)?.log_abs;
                t.push(vec![s, l.exp(), l]);
            }
        }
        Method::Ode => {
            let sol = sigma(SigmaKind::Resolvent, n, 0.0, &xs, g.tol)?;
            for &s in &xs {
                let e = assemble_quantity(Quantity::GapProbability, &sol, s, None)?;
                t.push(vec![s, e, e.ln()]);
            }
        }
        Method::Toda => {
            for &s in &xs {
                let l = log_etilde_recurrence(n, 0.0, s)?;
                t.push(vec![s, l.exp(), l]);
            }
        }
    }
    Ok(t)
}

/// Signed log of the moment at one point by the determinant route.
fn moment_det(kind: MomentKind, n: usize, a: f64, s: f64, c: &PrecisionConfig) -> Result<(f64, f64)> {
    Ok(match kind {
        MomentKind::Etilde => {
            let r = log_etilde(n, a, s, c)?;
            (r.sign as f64, r.log_abs)
        }
        MomentKind::F => {
            let v = f_det(n, a, Complex64::new(s, 0.0), c)?.re;
            (v.signum(), v.abs().ln())
        }
    })
}

/// Columns `s, value, log|value|`. The ODE route fixes the shape; its scale
/// comes from the determinant at the right end of the grid.
pub fn moment(kind: MomentKind, n: usize, a: f64, grid: &GridArgs, method: Method, g: &Global) -> Result<Table> {
    let xs = abscissae(grid)?;
    let c = cfg(g)?;
    let mut t = Table::new(&["s", "value", "log_abs_value"]);
    match method {
        Method::Det => {
            for &s in &xs {
                let (sign, l) = moment_det(kind, n, a, s, &c)?;
                t.push(vec![s, sign * l.exp(), l]);
            }
        }
        Method::Ode => {
            let sk = match kind {
                MomentKind::Etilde => SigmaKind::Etilde,
                MomentKind::F => SigmaKind::CharPoly,
            };
            if a == 0.0 && kind == MomentKind::F {
                for &s in &xs {
                    t.push(vec![s, 1.0, 0.0]);
                }
                return Ok(t);
            }
            let sol = sigma(sk, n, a, &xs, g.tol)?;
            let s_ref = *xs.last().unwrap();
            let (sign, l_ref) = moment_det(kind, n, a, s_ref, &c)?;
            let i_ref = sol.integral_to(s_ref)?;
            for &s in &xs {
                let l = l_ref + sol.integral_to(s)? - i_ref;
                t.push(vec![s, sign * l.exp(), l]);
            }
        }
        Method::Toda => {
            if kind != MomentKind::Etilde {
                bail!("the recurrence route tabulates Etilde only");
            }
            for &s in &xs {
                let l = log_etilde_recurrence(n, a, s)?;
                t.push(vec![s, l.exp(), l]);
            }
        }
    }
    Ok(t)
}

pub fn softedge(q: SoftQuantity, a: f64, grid: &GridArgs, s0: Option<f64>, g: &Global) -> Result<Table> {
    let xs = abscissae(grid)?;
    let s_ref = s0.unwrap_or(*xs.last().unwrap());
    Ok(match q {
        SoftQuantity::E => {
            let sol = sigma(SigmaKind::SoftResolvent, 0, 0.0, &xs, g.tol)?;
            let mut t = Table::new(&["s", "E_soft", "log_E_soft"]);
            for &s in &xs {
                let e = assemble_quantity(Quantity::SoftGapProbability, &sol, s, None)?;
                t.push(vec![s, e, e.ln()]);
            }
            t
        }
        SoftQuantity::PmaxRatio => {
            let lo = xs[0].min(s_ref);
            let hi = xs.last().unwrap().max(s_ref);
            let sol = sigma(SigmaKind::SoftEtilde, 0, 2.0, &[lo, hi], g.tol)?;
            let mut t = Table::new(&["s", "pmax_ratio"]);
            for &s in &xs {
                t.push(vec![s, assemble_quantity(Quantity::PmaxSoftRatio, &sol, s, Some(s_ref))?]);
            }
            t
        }
        SoftQuantity::U | SoftQuantity::V => {
            let (kind, name) = if q == SoftQuantity::U { (SigmaKind::SoftEtilde, "u") } else { (SigmaKind::SoftCharPoly, "v") };
            let sol = sigma(kind, 0, a, &xs, g.tol)?;
            let mut t = Table::new(&["s", name]);
            for &s in &xs {
                t.push(vec![s, sol.value_at(s)?]);
            }
            t
        }
        SoftQuantity::FAiry => {
            ensure!(a >= 0.0 && a.fract() == 0.0, "F_airy needs a non-negative integer a");
            let c = cfg(g)?;
            let mut t = Table::new(&["s", "F_soft"]);
            for &s in &xs {
                t.push(vec![s, airy_det(a as usize, s, &c)?]);
            }
            t
        }
    })
}

#[derive(Debug, Serialize)]
pub struct SampleBody {
    pub quantity: SampleQuantity,
    pub n: usize,
    pub point: f64,
    pub a: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Determinant value of the same average, for comparison.
    pub reference: f64,
    pub z_score: f64,
}

pub fn sample(n: usize, samples: usize, seed: u64, q: SampleQuantity, point: f64, a: f64) -> Result<SampleBody> {
    let c = PrecisionConfig::default();
    let (stat, reference) = match q {
        SampleQuantity::Gap => (Statistic::Gap { s: point }, log_etilde(n, 0.0, point, &c)?.value()),
        SampleQuantity::Etilde => (Statistic::Etilde { s: point, a }, log_etilde(n, a, point, &c)?.value()),
        SampleQuantity::F => {
            ensure!(a >= 0.0 && a.fract() == 0.0, "F sampling needs a non-negative integer a");
            (Statistic::CharPoly { lambda: point, a: a as u32 }, f_det(n, a, Complex64::new(point, 0.0), &c)?.re)
        }
    };
    let est = mc_estimate(&stat, &McConfig::new(n, samples, seed)?)?;
    Ok(SampleBody {
        quantity: q,
        n,
        point,
        a,
        estimate: est.estimate,
        std_error: est.std_error,
        samples: est.samples,
        reference,
        z_score: est.z_score(reference),
    })
}
