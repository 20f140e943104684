//! Sigma-form route to the gap probabilities and moments.
//!
//! The log-derivatives
//!
//! | kind | function | form |
//! |------|----------|------|
//! | `R_N` | `(log E_N((t, inf)))'` | sigma-PIV, `a = 0` |
//! | `U_N` | `(log Etilde_N(t; a))'` | sigma-PIV |
//! | `V_N` | `(log F_N(t; a))'` | sigma-PIV |
//! | `r`, `u`, `v` | soft-edge limits | sigma-PII |
//!
//! are integrated from right-hand data toward the left in MPFR Taylor
//! arithmetic, using the once-differentiated form so that no square-root
//! branch has to be chosen. The form itself is then re-evaluated at every
//! grid point as an integrity check.

mod anchor;
mod fit;
mod series;
mod systems;
mod transcendent;

use std::fmt;

use rug::Float;
use serde::{Deserialize, Serialize};

pub use fit::{fit_soft_u_tail, fit_soft_v_tail, TailFit};
pub use series::{AsymptoticSeries, Direction};
pub use transcendent::{transcendent_route_pii, transcendent_route_piv};

use crate::error::{domain, Error, Result};
use crate::hankel_tau::{log_airy_det_mp, log_etilde_mp, log_f_det_mp};
use crate::ode::{taylor, TaylorSettings};
use crate::special_fn::airy_derivs;
use crate::types::{GridFunction, GridSpec, PrecisionConfig};
use anchor::{bits_for, Problem};
use series::{solve_tail, Form};
use systems::{derivatives_123, SigmaPii, SigmaPiv};

/// Which log-derivative a solution represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigmaKind {
    /// `R_N`, the log-derivative of the gap probability.
    Resolvent,
    /// `U_N`, the log-derivative of `Etilde_N(.; a)`.
    Etilde,
    /// `V_N`, the log-derivative of `F_N(.; a)`.
    CharPoly,
    /// `r`.
    SoftResolvent,
    /// `u`.
    SoftEtilde,
    /// `v`.
    SoftCharPoly,
}

impl SigmaKind {
    pub fn is_soft(self) -> bool {
        matches!(self, SigmaKind::SoftResolvent | SigmaKind::SoftEtilde | SigmaKind::SoftCharPoly)
    }

    /// The side the solution is anchored on.
    pub fn anchor_direction(self) -> Direction {
        match self {
            SigmaKind::Etilde | SigmaKind::SoftEtilde => Direction::MinusInfinity,
            _ => Direction::PlusInfinity,
        }
    }
}

impl fmt::Display for SigmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SigmaKind::Resolvent => "R_N",
            SigmaKind::Etilde => "U_N",
            SigmaKind::CharPoly => "V_N",
            SigmaKind::SoftResolvent => "r",
            SigmaKind::SoftEtilde => "u",
            SigmaKind::SoftCharPoly => "v",
        })
    }
}

/// How a solution was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    SigmaOde,
    Transcendent,
    DeterminantLogDeriv,
}

/// Value and two derivatives at the point where an integration starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAnchor {
    pub t0: f64,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    /// Size of the first omitted term of whatever expansion supplied the data.
    pub truncation_error: f64,
}

/// A sigma function tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSolution {
    pub kind: SigmaKind,
    pub n: usize,
    pub a: f64,
    pub route: Route,
    /// `integral` runs from the left end of the grid.
    pub grid: GridFunction,
    pub tol: f64,
    /// Largest sigma-form residual seen on the grid.
    pub max_residual: f64,
    pub anchor: BoundaryAnchor,
    /// Integral from the right end of the grid to `+inf`, for the resolvents.
    pub tail_integral: Option<f64>,
    /// Working precision of the integration.
    pub bits: u32,
}

impl SigmaSolution {
    /// `int_{grid[0]}^t` of the solution, exact at the nodes and by quintic
    /// Hermite interpolation in between.
    pub fn integral_to(&self, t: f64) -> Result<f64> {
        let g = &self.grid;
        let n = g.len();
        let (lo, hi) = (g.grid[0], g.grid[n - 1]);
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(t >= lo - slack && t <= hi + slack) {
            return domain(format!("{t} lies outside the tabulated range [{lo}, {hi}] of {}", self.kind));
        }
        if n == 1 {
            return Ok(0.0);
        }
        let t = t.clamp(lo, hi);
        let i = g.grid.partition_point(|x| *x <= t).clamp(1, n - 1) - 1;
        let h = g.grid[i + 1] - g.grid[i];
        let w = (t - g.grid[i]) / h;
        let ends = [g.value[i], g.d1[i] * h, g.d2[i] * h * h, g.value[i + 1], g.d1[i + 1] * h, g.d2[i + 1] * h * h];
        Ok(g.integral[i] + h * quintic_integral(&ends, w))
    }

    /// Value at `t` by quintic Hermite interpolation.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let g = &self.grid;
        let n = g.len();
        let (lo, hi) = (g.grid[0], g.grid[n - 1]);
        if !(t >= lo && t <= hi) {
            return domain(format!("{t} lies outside the tabulated range [{lo}, {hi}] of {}", self.kind));
        }
        if n == 1 {
            return Ok(g.value[0]);
        }
        let i = g.grid.partition_point(|x| *x <= t).clamp(1, n - 1) - 1;
        let h = g.grid[i + 1] - g.grid[i];
        let w = (t - g.grid[i]) / h;
        let b = quintic_basis(w);
        let ends = [g.value[i], g.d1[i] * h, g.d2[i] * h * h, g.value[i + 1], g.d1[i + 1] * h, g.d2[i + 1] * h * h];
        Ok(b.iter().zip(&ends).map(|(x, y)| x * y).sum())
    }
}

/// Quintic Hermite basis on `[0, 1]`, ordered as
/// `(f0, h f0', h^2 f0'', f1, h f1', h^2 f1'')`.
fn quintic_basis(u: f64) -> [f64; 6] {
    let (u2, u3, u4, u5) = (u * u, u * u * u, u * u * u * u, u * u * u * u * u);
    [
        1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5,
        u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5,
        0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5,
        10.0 * u3 - 15.0 * u4 + 6.0 * u5,
        -4.0 * u3 + 7.0 * u4 - 3.0 * u5,
        0.5 * u3 - u4 + 0.5 * u5,
    ]
}

/// `int_0^w` of the quintic Hermite interpolant in the unit variable.
fn quintic_integral(ends: &[f64; 6], w: f64) -> f64 {
    let p = |c: [f64; 6]| c.iter().enumerate().map(|(k, c)| c * w.powi(k as i32 + 1) / (k as f64 + 1.0)).sum::<f64>();
    let basis = [
        p([1.0, 0.0, 0.0, -10.0, 15.0, -6.0]),
        p([0.0, 1.0, 0.0, -6.0, 8.0, -3.0]),
        p([0.0, 0.0, 0.5, -1.5, 1.5, -0.5]),
        p([0.0, 0.0, 0.0, 10.0, -15.0, 6.0]),
        p([0.0, 0.0, 0.0, -4.0, 7.0, -3.0]),
        p([0.0, 0.0, 0.0, 0.5, -1.0, 0.5]),
    ];
    basis.iter().zip(ends).map(|(b, e)| b * e).sum()
}

/// Running integral from the left end using the two-point rule that is exact
/// for quintics: `h/2 (f0 + f1) + h^2/10 (f0' - f1') + h^3/120 (f0'' + f1'')`.
pub(crate) fn hermite_running_integral(g: &GridFunction) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..g.len() {
        let h = g.grid[i] - g.grid[i - 1];
        acc += h / 2.0 * (g.value[i - 1] + g.value[i]) + h * h / 10.0 * (g.d1[i - 1] - g.d1[i])
            + h * h * h / 120.0 * (g.d2[i - 1] + g.d2[i]);
        out.push(acc);
    }
    out
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return domain(format!("tolerance {tol} must lie in (0, 1)"));
    }
    Ok(())
}

pub(crate) fn check_params(kind: SigmaKind, n: usize, a: f64) -> Result<()> {
    if !a.is_finite() || a < 0.0 {
        return domain(format!("parameter a = {a} must be finite and non-negative"));
    }
    match kind {
        SigmaKind::Resolvent | SigmaKind::Etilde | SigmaKind::CharPoly => {
            if n == 0 || n > 40 {
                return domain(format!("N = {n} must lie in 1..=40"));
            }
            if kind == SigmaKind::Resolvent && a != 0.0 {
                return domain("R_N carries no parameter; pass a = 0");
            }
            if kind == SigmaKind::CharPoly && a.fract() != 0.0 {
                return domain(format!("F_N(t; {a}) is not real for t inside the spectrum; V_N needs integer a"));
            }
        }
        SigmaKind::SoftResolvent => {
            if a != 0.0 {
                return domain("r carries no parameter; pass a = 0");
            }
        }
        SigmaKind::SoftEtilde | SigmaKind::SoftCharPoly => {
            transcendent::SoftSeed::for_parameter(a)?;
        }
    }
    Ok(())
}

/// The sigma form evaluated at `(t, h, h', h'')`; zero along a solution.
pub fn sigma_residual(kind: SigmaKind, n: usize, a: f64, t: f64, h: f64, h1: f64, h2: f64) -> f64 {
    if kind.is_soft() {
        h2 * h2 + 4.0 * h1 * (h1 * h1 - t * h1 + h) - a * a
    } else {
        let g = t * h1 - h;
        h2 * h2 - 4.0 * g * g + 4.0 * h1 * (h1 - 2.0 * a) * (h1 + 2.0 * n as f64)
    }
}

/// Formal expansion of a sigma function at one end of the line, with
/// `terms` tail coefficients.
pub fn asymptotic_series(kind: SigmaKind, n: usize, a: f64, direction: Direction, terms: usize) -> Result<AsymptoticSeries> {
    check_params(kind, n, a)?;
    let nf = n as f64;
    let piv = Form::Piv { alpha1: -a, alpha2: -nf };
    let pii = Form::Pii { a };
    use Direction::*;
    use SigmaKind::*;
    Ok(match (kind, direction) {
        (Resolvent | Etilde, MinusInfinity) => solve_tail(piv, direction, vec![0.0, -2.0 * nf], 1.0, &[-nf * (a + nf)], terms),
        (Etilde | CharPoly, PlusInfinity) => solve_tail(piv, direction, vec![], 1.0, &[nf * a], terms),
        (SoftResolvent | SoftEtilde, MinusInfinity) => solve_tail(pii, direction, vec![0.0, 0.0, 0.25], 1.0, &[], terms),
        (SoftCharPoly, PlusInfinity) => solve_tail(pii, direction, vec![0.0, -a], 0.5, &[], terms),
        _ => {
            return domain(format!(
                "{kind} has no power-series expansion at {direction:?} (it is exponentially small or carries an unknown phase there)"
            ))
        }
    })
}

/// Starting data for `kind` taken from its boundary behaviour: the density
/// for the resolvents at `+inf` and the optimally truncated series
/// otherwise. `t0` is the first point (in steps of 1/4 from `|t| = 2`)
/// where the truncation error drops below `tol`.
pub fn boundary_anchor(kind: SigmaKind, n: usize, a: f64, tol: f64) -> Result<BoundaryAnchor> {
    check_tol(tol)?;
    check_params(kind, n, a)?;
    let mut mag = 2.0;
    while mag <= 40.0 {
        match kind {
            SigmaKind::Resolvent => {
                let t = mag;
                let rho = anchor::density(n, t);
                let err = rho * rho / (2.0 * t);
                if err < tol {
                    let h = 1e-4;
                    let d1 = (anchor::density(n, t + h) - anchor::density(n, t - h)) / (2.0 * h);
                    let d2 = (anchor::density(n, t + h) - 2.0 * rho + anchor::density(n, t - h)) / (h * h);
                    return Ok(BoundaryAnchor { t0: t, value: rho, d1, d2, truncation_error: err });
                }
            }
            SigmaKind::SoftResolvent => {
                let s = mag;
                let ai = airy_derivs(s, 1, &PrecisionConfig::default())?;
                let rho = ai[1] * ai[1] - s * ai[0] * ai[0];
                let err = rho * rho / (2.0 * s.sqrt()).max(1.0);
                if err < tol {
                    // rho' = -Ai^2 and rho'' = -2 Ai Ai'.
                    let value = rho;
                    let d1 = -ai[0] * ai[0];
                    let d2 = -2.0 * ai[0] * ai[1];
                    return Ok(BoundaryAnchor { t0: s, value, d1, d2, truncation_error: err });
                }
            }
            _ => {
                let dir = kind.anchor_direction();
                let t = if dir == Direction::MinusInfinity { -mag } else { mag };
                let ser = asymptotic_series(kind, n, a, dir, 40)?;
                let (keep, err) = ser.truncation(t);
                // The series fixes the function only up to the exponentially
                // small solution of the linearised form.
                let err = err.max(hidden_mode(kind, t));
                if err < tol {
                    let [value, d1, d2] = ser.eval(t, keep);
                    return Ok(BoundaryAnchor { t0: t, value, d1, d2, truncation_error: err });
                }
            }
        }
        mag += 0.25;
    }
    Err(Error::Anchoring(format!("the boundary expansion of {kind} never reaches {tol:e} within |t| <= 40")))
}

/// Size of the exponentially small mode a power series cannot see.
fn hidden_mode(kind: SigmaKind, t: f64) -> f64 {
    let m = t.abs();
    match kind {
        SigmaKind::SoftCharPoly => (-4.0 / 3.0 * m.powf(1.5)).exp(),
        k if k.is_soft() => (-2.0 * std::f64::consts::SQRT_2 / 3.0 * m.powf(1.5)).exp(),
        _ => (-m * m).exp(),
    }
}

fn validated_grid(grid: &GridSpec) -> Result<Vec<f64>> {
    if !(grid.start.is_finite() && grid.end.is_finite()) || grid.end < grid.start || grid.points == 0 {
        return domain("grid must be finite, ordered and non-empty");
    }
    if grid.points > 1 && grid.end == grid.start {
        return domain("a grid with several points needs positive width");
    }
    Ok(grid.abscissae())
}

/// Integrate the sigma form for `kind` over the grid.
pub fn solve_sigma(kind: SigmaKind, n: usize, a: f64, grid: &GridSpec, tol: f64) -> Result<SigmaSolution> {
    check_tol(tol)?;
    check_params(kind, n, a)?;
    let xs = validated_grid(grid)?;
    let (lo, hi) = (xs[0], *xs.last().unwrap());
    let p = Problem { kind, n, a };
    let start = anchor::start(p, lo, hi, tol)?;
    let bits = start.bits;
    let mut y0: Vec<Float> = start.y.iter().map(|v| Float::with_val(bits, v)).collect();
    y0.push(Float::new(bits));
    let settings = TaylorSettings::for_bits(bits);
    let traj = if kind.is_soft() {
        taylor(&SigmaPii, start.t0, &y0, lo, settings)?
    } else {
        let (alpha1, alpha2) = p.piv_alphas();
        taylor(&SigmaPiv { alpha1, alpha2 }, start.t0, &y0, lo, settings)?
    };
    let limit = 100.0 * tol;
    let mut g = GridFunction { grid: xs.clone(), value: vec![], d1: vec![], d2: vec![], integral: vec![] };
    let mut max_residual = 0.0f64;
    let missing = |t: f64| Error::Domain(format!("t = {t} is not covered by the integration"));
    let base = traj.eval(3, lo, 0).ok_or_else(|| missing(lo))?;
    for &t in &xs {
        let y: Vec<Float> = (0..3).map(|m| traj.eval(0, t, m).ok_or_else(|| missing(t))).collect::<Result<_>>()?;
        let tm = Float::with_val(bits, t);
        let res = anchor::residual_mp(p, &tm, &y[0], &y[1], &y[2]).to_f64().abs();
        if !(res <= limit) {
            return Err(Error::Integrity { t, residual: res, limit });
        }
        max_residual = max_residual.max(res);
        g.value.push(y[0].to_f64());
        g.d1.push(y[1].to_f64());
        g.d2.push(y[2].to_f64());
        let i = traj.eval(3, t, 0).ok_or_else(|| missing(t))?;
        g.integral.push(Float::with_val(bits, &i - &base).to_f64());
    }
    // The trajectory's integral is measured from t0, so the piece from the
    // right end of the grid back to t0 is minus its value there.
    let tail_integral = match start.tail {
        Some(tail) => Some(tail - traj.eval_f64(3, hi, 0).ok_or_else(|| missing(hi))?),
        None => None,
    };
    let [v, d1, d2] = &start.y;
    Ok(SigmaSolution {
        kind,
        n,
        a,
        route: Route::SigmaOde,
        grid: g,
        tol,
        max_residual,
        anchor: BoundaryAnchor { t0: start.t0, value: v.to_f64(), d1: d1.to_f64(), d2: d2.to_f64(), truncation_error: 0.0 },
        tail_integral,
        bits,
    })
}

/// Log-derivatives read off the determinants by high-order central
/// differences in MPFR. Available for `R_N`, `U_N`, `V_N` (integer `a`) and
/// integer-`a` `v`.
pub fn determinant_route(kind: SigmaKind, n: usize, a: f64, grid: &GridSpec, tol: f64) -> Result<SigmaSolution> {
    check_tol(tol)?;
    check_params(kind, n, a)?;
    let xs = validated_grid(grid)?;
    let bits = bits_for(0.0, tol);
    let prec = bits * 3 / 2 + 32 + 16 * n as u32;
    let logdet = |x: &Float| -> Result<Float> {
        match kind {
            SigmaKind::Resolvent | SigmaKind::Etilde => log_etilde_mp(n, a, x, prec),
            SigmaKind::CharPoly => log_f_det_mp(n, a as usize, x, prec).map(|r| r.1),
            SigmaKind::SoftCharPoly if a.fract() == 0.0 => log_airy_det_mp(a as usize, x, prec).map(|r| r.1),
            _ => domain(format!("{kind} with a = {a} has no determinant formula")),
        }
    };
    let mut g = GridFunction { grid: xs.clone(), value: vec![], d1: vec![], d2: vec![], integral: vec![] };
    let mut max_residual = 0.0f64;
    let base = logdet(&Float::with_val(prec, xs[0]))?;
    for &t in &xs {
        let [v, d1, d2] = derivatives_123(logdet, t, prec)?;
        let (v, d1, d2) = (v.to_f64(), d1.to_f64(), d2.to_f64());
        max_residual = max_residual.max(sigma_residual(kind, n, a, t, v, d1, d2).abs());
        g.value.push(v);
        g.d1.push(d1);
        g.d2.push(d2);
        let here = logdet(&Float::with_val(prec, t))?;
        g.integral.push(Float::with_val(prec, &here - &base).to_f64());
    }
    let anchor = BoundaryAnchor { t0: xs[0], value: g.value[0], d1: g.d1[0], d2: g.d2[0], truncation_error: 0.0 };
    Ok(SigmaSolution {
        kind,
        n,
        a,
        route: Route::DeterminantLogDeriv,
        grid: g,
        tol,
        max_residual,
        anchor,
        tail_integral: None,
        bits: prec,
    })
}

/// Quantities assembled from a sigma solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    /// `E_N((s, inf)) = exp(-int_s^inf R_N)`.
    GapProbability,
    /// `Etilde_N(s; a) / Etilde_N(s0; a)`.
    EtildeRatio,
    /// `F_N(s; a) / F_N(s0; a)`.
    FRatio,
    /// Ratio of the largest-eigenvalue density of the `(N+1) x (N+1)` GUE,
    /// `e^{-(s^2 - s0^2)} Etilde_N(s; 2) / Etilde_N(s0; 2)`.
    PmaxRatio,
    /// Ratio of the one-point density, `e^{-(s^2 - s0^2)} F_N(s; 2) / F_N(s0; 2)`.
    RhoRatio,
    /// `E^soft((s, inf)) = exp(-int_s^inf r)`.
    SoftGapProbability,
    EtildeSoftRatio,
    FSoftRatio,
    /// `Etilde^soft(s; 2) / Etilde^soft(s0; 2)`.
    PmaxSoftRatio,
}

impl Quantity {
    fn needs(self) -> (SigmaKind, Option<f64>) {
        match self {
            Quantity::GapProbability => (SigmaKind::Resolvent, None),
            Quantity::EtildeRatio => (SigmaKind::Etilde, None),
            Quantity::FRatio => (SigmaKind::CharPoly, None),
            Quantity::PmaxRatio => (SigmaKind::Etilde, Some(2.0)),
            Quantity::RhoRatio => (SigmaKind::CharPoly, Some(2.0)),
            Quantity::SoftGapProbability => (SigmaKind::SoftResolvent, None),
            Quantity::EtildeSoftRatio => (SigmaKind::SoftEtilde, None),
            Quantity::FSoftRatio => (SigmaKind::SoftCharPoly, None),
            Quantity::PmaxSoftRatio => (SigmaKind::SoftEtilde, Some(2.0)),
        }
    }

    pub fn is_ratio(self) -> bool {
        !matches!(self, Quantity::GapProbability | Quantity::SoftGapProbability)
    }
}

/// Evaluate `quantity` at `s` (and the reference point `s0` for ratios).
pub fn assemble_quantity(quantity: Quantity, solution: &SigmaSolution, s: f64, s0: Option<f64>) -> Result<f64> {
    let (kind, a) = quantity.needs();
    if solution.kind != kind {
        return domain(format!("{quantity:?} is built from {kind}, not {}", solution.kind));
    }
    if let Some(a) = a {
        if solution.a != a {
            return domain(format!("{quantity:?} needs a = {a}, the solution has a = {}", solution.a));
        }
    }
    if quantity.is_ratio() {
        let s0 = s0.ok_or_else(|| Error::Domain(format!("{quantity:?} needs a reference point s0")))?;
        let log = solution.integral_to(s)? - solution.integral_to(s0)?;
        let shift = match quantity {
            Quantity::PmaxRatio | Quantity::RhoRatio => -(s * s - s0 * s0),
            _ => 0.0,
        };
        Ok((log + shift).exp())
    } else {
        let tail = solution
            .tail_integral
            .ok_or_else(|| Error::Domain("solution carries no tail integral".into()))?;
        let hi = *solution.grid.grid.last().unwrap();
        let to_hi = solution.integral_to(hi)? - solution.integral_to(s)?;
        Ok((-(to_hi + tail)).exp())
    }
}

fn range_grid(range: (f64, f64)) -> Result<GridSpec> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return domain("range must be finite and ordered");
    }
    let points = ((hi - lo) / 0.05).ceil() as usize + 1;
    Ok(GridSpec::new(lo, hi, points.max(2)))
}

/// Largest defect of `U_N(t; 2) = 2t + R_{N+1} + R'_{N+1} / R_{N+1}` over
/// `t_range`, both sides from the sigma integrations.
pub fn identity_prop23_residual(n: usize, t_range: (f64, f64), tol: f64) -> Result<f64> {
    if t_range.0 == t_range.1 {
        return Ok(0.0);
    }
    let grid = range_grid(t_range)?;
    let u = solve_sigma(SigmaKind::Etilde, n, 2.0, &grid, tol)?;
    let r = solve_sigma(SigmaKind::Resolvent, n + 1, 0.0, &grid, tol)?;
    let mut worst = 0.0f64;
    for i in 0..grid.points {
        let t = u.grid.grid[i];
        let (rv, rd) = (r.grid.value[i], r.grid.d1[i]);
        if !(rv > 0.0) {
            return domain(format!("R_{} vanishes near t = {t}", n + 1));
        }
        worst = worst.max((u.grid.value[i] - 2.0 * t - rv - rd / rv).abs());
    }
    Ok(worst)
}

/// Largest defect of `u(s; 2) = r'/r + r` over `s_range`, with `u` from the
/// sigma integration and `r` from the Hastings-McLeod transcendent.
pub fn identity_prop26_residual(s_range: (f64, f64), tol: f64) -> Result<f64> {
    if s_range.0 == s_range.1 {
        return Ok(0.0);
    }
    let grid = range_grid(s_range)?;
    let u = solve_sigma(SigmaKind::SoftEtilde, 0, 2.0, &grid, tol)?;
    let r = transcendent_route_pii(0.0, &grid, tol)?;
    let mut worst = 0.0f64;
    for i in 0..grid.points {
        let (rv, rd) = (r.grid.value[i], r.grid.d1[i]);
        if !(rv > 0.0) {
            return domain(format!("r vanishes near s = {}", r.grid.grid[i]));
        }
        worst = worst.max((u.grid.value[i] - rd / rv - rv).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
