//! Transcendent routes: the sigma functions assembled from Painleve
//! transcendents instead of integrated directly.
//!
//! Soft edge. With `t = -2^{1/3} s` and the PII Hamiltonian
//! `H = p^2/2 - p(q^2 + t/2) - alpha1 q`, `alpha1 = a`,
//!
//! ```text
//! u(s) = -2^{1/3} H(t),   u'(s) = -2^{-1/3} p,   u''(s) = 2qp + a.
//! ```
//!
//! Every `(q, p)` needed comes from one Hastings-McLeod trajectory `Q`
//! (`Q'' = 2Q^3 + xQ`, `Q ~ Ai` at `+inf`) followed by the parameter raising
//! map `alpha1 -> alpha1 + 1`:
//!
//! ```text
//! q -> -q - alpha1/p,   p -> 2q^2 + t - p + 4 alpha1 q/p + 2 alpha1^2/p^2.
//! ```
//!
//! Integer `a` start from `alpha1 = 0` with `q = -Q'/(2^{1/3} Q)`,
//! `p = 2^{1/3} Q^2` in the variable `s`; half-odd `a` start from
//! `alpha1 = 1/2` with `q(t) = -Q(t)` and `p = q' + q^2 + t/2`.
//!
//! Finite N. The PIV Hamiltonian `H = (2p - q - 2t)pq - 2 a1 p - a2 q` with
//! `(a1, a2) = (-a, -N)` reproduces `U_N` or `V_N` once `(q, p)` are fitted
//! to the determinant data at the anchor.

use rug::Float;
use serde::{Deserialize, Serialize};

use super::anchor::{self, bits_for, ln_airy, soft_left, Problem};
use super::systems::{PainleveII, PivHamiltonian};
use super::{hermite_running_integral, BoundaryAnchor, Route, SigmaKind, SigmaSolution};
use crate::error::{domain, Error, Result};
use crate::ode::{taylor, TaylorSettings, TaylorTrajectory};
use crate::special_fn::airy_pair_mp;
use crate::types::{GridFunction, GridSpec};

const LN2: f64 = std::f64::consts::LN_2;

fn cbrt2(prec: u32) -> Float {
    Float::with_val(prec, 2).cbrt()
}

/// Which seed solution a soft-edge parameter is reached from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub(super) enum SoftSeed {
    Integer,
    HalfOdd,
}

impl SoftSeed {
    pub fn for_parameter(a: f64) -> Result<Self> {
        if !(0.0..=24.0).contains(&a) {
            return domain(format!("soft-edge parameter a = {a} must lie in [0, 24]"));
        }
        if a.fract() == 0.0 {
            Ok(SoftSeed::Integer)
        } else if (2.0 * a).fract() == 0.0 {
            Ok(SoftSeed::HalfOdd)
        } else {
            domain(format!("soft-edge parameter a = {a} must be an integer or half an odd integer"))
        }
    }

    /// `(x_lo, x_hi)` of the Hastings-McLeod variable covering `[s_lo, s_hi]`.
    fn x_range(self, s_lo: f64, s_hi: f64) -> (f64, f64) {
        match self {
            SoftSeed::Integer => (s_lo, s_hi),
            SoftSeed::HalfOdd => {
                let c = 2f64.cbrt();
                (-c * s_hi, -c * s_lo)
            }
        }
    }
}

/// The Hastings-McLeod solution on a stretch of its own variable.
pub(super) struct HmTrajectory {
    pub traj: TaylorTrajectory,
    pub x0: f64,
    /// `int_{x0}^inf (Q'^2 - xQ^2)` with `Q = Ai`, whose error is `O(Ai^4)`.
    pub tail0: Float,
    pub bits: u32,
}

impl HmTrajectory {
    /// `int_x^inf (Q'^2 - xQ^2 - Q^4)`, which is `int r` for the integer seed.
    pub fn tail_from(&self, x: f64) -> Result<f64> {
        let i3 = self.traj.eval(2, x, 0).ok_or_else(|| Error::Domain(format!("{x} outside the trajectory")))?;
        Ok((Float::with_val(self.bits, &self.tail0 - i3)).to_f64())
    }
}

/// Integrate Hastings-McLeod leftward over the variable range that covers
/// `[s_lo, s_hi]`. The Airy starting point is pushed right until the
/// neglected `Ai^2` relative correction, grown by `extra_amp` plus the
/// amplification on the trajectory itself, is below tolerance.
pub(super) fn hm_trajectory(
    seed: SoftSeed,
    s_lo: f64,
    s_hi: f64,
    extra_amp: f64,
    tol: f64,
    bits_target: u32,
) -> Result<HmTrajectory> {
    let (x_lo, x_hi) = seed.x_range(s_lo, s_hi);
    let amp = soft_left(x_lo);
    let target = (1e-3 * tol).ln();
    let mut x0 = (x_hi + 0.5).max(2.0);
    while 2.0 * ln_airy(x0) + amp + extra_amp >= target {
        x0 += 0.25;
        if x0 > 200.0 {
            return Err(Error::Anchoring("Hastings-McLeod start beyond reach".into()));
        }
    }
    let bits = bits_target + ((amp + 4.0 / 3.0 * x0.powf(1.5)) / LN2).ceil() as u32 + 32;
    let x = Float::with_val(bits, x0);
    let (ai, aip) = airy_pair_mp(&x, bits)?;
    let ai2 = Float::with_val(bits, &ai * &ai);
    let aip2 = Float::with_val(bits, &aip * &aip);
    let tail0 = (Float::with_val(bits, &ai2 * &x) * &x * 2u32 - Float::with_val(bits, &aip2 * &x) * 2u32
        - Float::with_val(bits, &ai * &aip))
        / 3u32;
    let traj = taylor(&PainleveII, x0, &[ai, aip, Float::new(bits)], x_lo, TaylorSettings::for_bits(bits))?;
    Ok(HmTrajectory { traj, x0, tail0, bits })
}

/// `(u, u', u'')` at `s` for parameter `a`, from the seed and the raising map.
pub(super) fn soft_data(seed: SoftSeed, a: f64, s: &Float, hm: &HmTrajectory) -> Result<[Float; 3]> {
    let prec = hm.bits;
    let c = cbrt2(prec);
    let t = Float::with_val(prec, -Float::with_val(prec, &c * s));
    let missing = || Error::Domain(format!("s = {} outside the transcendent trajectory", s.to_f64()));
    let (mut q, mut p, mut alpha1) = match seed {
        SoftSeed::Integer => {
            let big_q = hm.traj.eval_mp(0, s, 0).ok_or_else(missing)?;
            let big_qp = hm.traj.eval_mp(1, s, 0).ok_or_else(missing)?;
            let q = -Float::with_val(prec, &big_qp / &big_q) / &c;
            let p = Float::with_val(prec, &big_q * &big_q) * &c;
            (q, p, 0.0)
        }
        SoftSeed::HalfOdd => {
            let q = -hm.traj.eval_mp(0, &t, 0).ok_or_else(missing)?;
            let dq = -hm.traj.eval_mp(1, &t, 0).ok_or_else(missing)?;
            let p = dq + Float::with_val(prec, &q * &q) + Float::with_val(prec, &t / 2u32);
            (q, p, 0.5)
        }
    };
    while alpha1 < a - 0.25 {
        if p.is_zero() {
            return Err(Error::Singular(format!("raising map at s = {} divides by p = 0", s.to_f64())));
        }
        let r = Float::with_val(prec, alpha1 / &p);
        let q2 = Float::with_val(prec, &q * &q);
        let p_new = Float::with_val(prec, &q2 * 2u32) + &t - &p
            + Float::with_val(prec, &q * &r) * 4u32
            + Float::with_val(prec, &r * &r) * 2u32;
        q = -q - &r;
        p = p_new;
        alpha1 += 1.0;
    }
    let q2 = Float::with_val(prec, &q * &q);
    let h = Float::with_val(prec, &p * &p) / 2u32
        - Float::with_val(prec, &p * Float::with_val(prec, &q2 + Float::with_val(prec, &t / 2u32)))
        - Float::with_val(prec, &q * a);
    let u = -Float::with_val(prec, &c * &h);
    let u1 = -Float::with_val(prec, &p / &c);
    let u2 = Float::with_val(prec, &q * &p) * 2u32 + a;
    Ok([u, u1, u2])
}

fn grid_of(grid: &GridSpec) -> Result<(Vec<f64>, f64, f64)> {
    let xs = grid.abscissae();
    if xs.is_empty() || !xs.iter().all(|x| x.is_finite()) || grid.end < grid.start {
        return domain("grid must be finite and ordered");
    }
    Ok((xs.clone(), xs[0], *xs.last().unwrap()))
}

/// `u(.; a)` from the Hastings-McLeod trajectory. At `a = 0` this is `r`.
pub fn transcendent_route_pii(a: f64, grid: &GridSpec, tol: f64) -> Result<SigmaSolution> {
    transcendent_pii_kind(SigmaKind::SoftEtilde, a, grid, tol)
}

pub(super) fn transcendent_pii_kind(kind: SigmaKind, a: f64, grid: &GridSpec, tol: f64) -> Result<SigmaSolution> {
    match kind {
        SigmaKind::SoftResolvent if a == 0.0 => {}
        SigmaKind::SoftEtilde => {}
        _ => return domain(format!("the PII transcendent route produces r and u, not {kind} with a = {a}")),
    }
    super::check_tol(tol)?;
    let (xs, lo, hi) = grid_of(grid)?;
    let seed = SoftSeed::for_parameter(a)?;
    let hm = hm_trajectory(seed, lo, hi, 0.0, tol, bits_for(0.0, tol))?;
    let p = Problem { kind, n: 0, a };
    let mut g = GridFunction { grid: xs.clone(), value: vec![], d1: vec![], d2: vec![], integral: vec![] };
    let mut max_residual = 0.0f64;
    for &s in &xs {
        let sm = Float::with_val(hm.bits, s);
        let [u, u1, u2] = soft_data(seed, a, &sm, &hm)?;
        let res = anchor::residual_mp(p, &sm, &u, &u1, &u2).to_f64().abs();
        if res > 100.0 * tol {
            return Err(Error::Integrity { t: s, residual: res, limit: 100.0 * tol });
        }
        max_residual = max_residual.max(res);
        g.value.push(u.to_f64());
        g.d1.push(u1.to_f64());
        g.d2.push(u2.to_f64());
    }
    let exact_integral = seed == SoftSeed::Integer && a == 0.0;
    g.integral = if exact_integral {
        let base = hm.traj.eval_f64(2, lo, 0).unwrap_or(0.0);
        xs.iter().map(|&s| hm.traj.eval_f64(2, s, 0).unwrap_or(0.0) - base).collect()
    } else {
        hermite_running_integral(&g)
    };
    let tail_integral = if exact_integral { Some(hm.tail_from(hi)?) } else { None };
    let x0 = hm.x0;
    let s0 = match seed {
        SoftSeed::Integer => x0,
        SoftSeed::HalfOdd => -x0 / 2f64.cbrt(),
    };
    let [v0, v1, v2] = soft_data(seed, a, &Float::with_val(hm.bits, s0), &hm)?;
    Ok(SigmaSolution {
        kind,
        n: 0,
        a,
        route: Route::Transcendent,
        grid: g,
        tol,
        max_residual,
        anchor: BoundaryAnchor { t0: s0, value: v0.to_f64(), d1: v1.to_f64(), d2: v2.to_f64(), truncation_error: 0.0 },
        tail_integral,
        bits: hm.bits,
    })
}

/// Fit `(q, p)` of the PIV Hamiltonian to `(H, H', H'')` at `t`: with
/// `m = pq = -H'/2`, `p` solves
/// `(2m - 2 a1) p^2 - (H + 2tm) p - (m^2 + a2 m) = 0`, and the root whose
/// `H'' = -2(p'q + pq')` matches the data is kept.
pub(super) fn fit_piv(t: f64, y: &[Float; 3], a1: f64, a2: f64) -> Result<(Float, Float)> {
    let prec = y[0].prec();
    let tm = Float::with_val(prec, t);
    let m = -Float::with_val(prec, &y[1] / 2u32);
    let qa = Float::with_val(prec, &m * 2u32) - 2.0 * a1;
    let qb = -(Float::with_val(prec, &y[0] + Float::with_val(prec, &tm * &m) * 2u32));
    let qc = -(Float::with_val(prec, &m * &m) + Float::with_val(prec, &m * a2));
    let mut roots = Vec::new();
    if qa.is_zero() {
        roots.push(-Float::with_val(prec, &qc / &qb));
    } else {
        let disc = Float::with_val(prec, &qb * &qb) - Float::with_val(prec, &qa * &qc) * 4u32;
        if disc.is_sign_negative() {
            return Err(Error::Anchoring(format!("no real PIV data fits the anchor at t = {t}")));
        }
        let sq = disc.sqrt();
        let w = if qb.is_sign_negative() {
            Float::with_val(prec, &sq - &qb) / 2u32
        } else {
            -Float::with_val(prec, &qb + &sq) / 2u32
        };
        roots.push(Float::with_val(prec, &w / &qa));
        if !w.is_zero() {
            roots.push(Float::with_val(prec, &qc / &w));
        }
    }
    let mut best: Option<(f64, Float, Float)> = None;
    for p in roots {
        if p.is_zero() || !p.is_finite() {
            continue;
        }
        let q = Float::with_val(prec, &m / &p);
        let pq = Float::with_val(prec, &p * &q);
        let dq = Float::with_val(prec, &pq * 4u32)
            - Float::with_val(prec, &q * &q)
            - Float::with_val(prec, &tm * &q) * 2u32
            - 2.0 * a1;
        let dp = -Float::with_val(prec, &p * &p) * 2u32
            + Float::with_val(prec, &pq * 2u32)
            + Float::with_val(prec, &tm * &p) * 2u32
            + a2;
        let h2 = -(Float::with_val(prec, &dp * &q) + Float::with_val(prec, &p * &dq)) * 2u32;
        let err = Float::with_val(prec, &h2 - &y[2]).abs().to_f64();
        if best.as_ref().map_or(true, |b| err < b.0) {
            best = Some((err, q, p));
        }
    }
    let (err, q, p) = best.ok_or_else(|| Error::Anchoring(format!("degenerate PIV fit at t = {t}")))?;
    let scale = y[2].to_f64().abs().max(1.0);
    if err > 1e-20 * scale {
        return Err(Error::Anchoring(format!("PIV fit misses H'' by {err:e} at t = {t}")));
    }
    Ok((q, p))
}

/// `(H, H', H'')` of the PIV Hamiltonian at a state.
pub(super) fn piv_jet(t: &Float, q: &Float, p: &Float, a1: f64, a2: f64) -> [Float; 3] {
    let prec = q.prec();
    let pq = Float::with_val(prec, p * q);
    let two_p = Float::with_val(prec, p * 2u32);
    let h = (Float::with_val(prec, &two_p - q) - Float::with_val(prec, t * 2u32)) * &pq
        - Float::with_val(prec, p * (2.0 * a1))
        - Float::with_val(prec, q * a2);
    let dq = Float::with_val(prec, &pq * 4u32) - Float::with_val(prec, q * q) - Float::with_val(prec, t * q) * 2u32 - 2.0 * a1;
    let dp = -Float::with_val(prec, p * p) * 2u32 + Float::with_val(prec, &pq * 2u32) + Float::with_val(prec, t * p) * 2u32 + a2;
    let h1 = -Float::with_val(prec, &pq * 2u32);
    let h2 = -(Float::with_val(prec, &dp * q) + Float::with_val(prec, p * &dq)) * 2u32;
    [h, h1, h2]
}

/// Points on a PIV trajectory: `(q, p, q'')` for the PIV equation check.
pub(super) struct PivTrace {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

/// `U_N` or `V_N` from the PIV Hamiltonian system, with the state fitted to
/// the determinant data at the right-hand anchor.
pub fn transcendent_route_piv(kind: SigmaKind, n: usize, a: f64, grid: &GridSpec, tol: f64) -> Result<SigmaSolution> {
    transcendent_piv_traced(kind, n, a, grid, tol).map(|r| r.0)
}

pub(super) fn transcendent_piv_traced(
    kind: SigmaKind,
    n: usize,
    a: f64,
    grid: &GridSpec,
    tol: f64,
) -> Result<(SigmaSolution, PivTrace)> {
    if !matches!(kind, SigmaKind::Etilde | SigmaKind::CharPoly) {
        return domain(format!("the PIV transcendent route produces U_N and V_N, not {kind}"));
    }
    if a < 0.0 {
        return domain("the PIV transcendent route needs a >= 0");
    }
    super::check_params(kind, n, a)?;
    super::check_tol(tol)?;
    let (xs, lo, hi) = grid_of(grid)?;
    let p = Problem { kind, n, a };
    let start = anchor::start(p, lo, hi, tol)?;
    let (a1, a2) = p.piv_alphas();
    let bits = start.bits + 32;
    let y: [Float; 3] = start.y.clone().map(|v| Float::with_val(bits, v));
    let (q0, p0) = fit_piv(start.t0, &y, a1, a2)?;
    let sys = PivHamiltonian { alpha1: a1, alpha2: a2 };
    let traj = taylor(&sys, start.t0, &[q0, p0, Float::new(bits)], lo, TaylorSettings::for_bits(bits))?;
    let mut g = GridFunction { grid: xs.clone(), value: vec![], d1: vec![], d2: vec![], integral: vec![] };
    let mut trace = PivTrace { q: vec![], p: vec![], q1: vec![], q2: vec![] };
    let mut max_residual = 0.0f64;
    let base = traj.eval_f64(2, lo, 0).unwrap_or(0.0);
    for &t in &xs {
        let missing = || Error::Domain(format!("t = {t} outside the PIV trajectory"));
        let q = traj.eval(0, t, 0).ok_or_else(missing)?;
        let pp = traj.eval(1, t, 0).ok_or_else(missing)?;
        let tm = Float::with_val(bits, t);
        let [h, h1, h2] = piv_jet(&tm, &q, &pp, a1, a2);
        let res = anchor::residual_mp(p, &tm, &h, &h1, &h2).to_f64().abs();
        if res > 100.0 * tol {
            return Err(Error::Integrity { t, residual: res, limit: 100.0 * tol });
        }
        max_residual = max_residual.max(res);
        g.value.push(h.to_f64());
        g.d1.push(h1.to_f64());
        g.d2.push(h2.to_f64());
        g.integral.push(traj.eval_f64(2, t, 0).unwrap_or(0.0) - base);
        trace.q.push(q.to_f64());
        trace.p.push(pp.to_f64());
        trace.q1.push(traj.eval_f64(0, t, 1).unwrap_or(f64::NAN));
        trace.q2.push(traj.eval_f64(0, t, 2).unwrap_or(f64::NAN));
    }
    let [v0, v1, v2] = &start.y;
    let sol = SigmaSolution {
        kind,
        n,
        a,
        route: Route::Transcendent,
        grid: g,
        tol,
        max_residual,
        anchor: BoundaryAnchor { t0: start.t0, value: v0.to_f64(), d1: v1.to_f64(), d2: v2.to_f64(), truncation_error: 0.0 },
        tail_integral: None,
        bits,
    };
    Ok((sol, trace))
}
