//! Recurrences in the lattice index: dPI and a-dPI, the Hamiltonian and tau
//! difference equations, and the Baecklund shift maps that step a chain.
//!
//! Three chains are built from determinants at a fixed `t`.
//!
//! * T3 chain, parameters `(alpha0 + n, alpha1, -n)` with `alpha0 = 1 - alpha1`
//!   and `alpha1 = -a`: `tau[n] = 2^{n(n-1)} det[I_{a+i+j}(t)]`, so
//!   `H[n] = U_n(t; a)`, `q[n] = H[n+1] - H[n]`.
//! * T1 chain, parameters `(alpha0 + n, -n, alpha2)` with `alpha2 = -N`:
//!   `H[n] = U_N(t; n)` and `2p[n] = H[n+1] - H[n]`.
//! * PII chain, parameters `(alpha0 + n, alpha1 - n)` from the Airy seed:
//!   `tau[n] = det[d^{i+j} Ai(-2^{-1/3} t)]`, `p[n] = -2 tau[n+1] tau[n-1] / tau[n]^2`.
//!
//! Canonical variables follow `painleve_sym`: `q = -f1`, `p = f2 / 2`.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::hankel_tau::{log_etilde, toda_log_sigma, TodaFamily};
use crate::special_fn::{incomplete_moment_mp, ln_factorial, log_gue_norm};
use crate::types::PrecisionConfig;

/// Which Baecklund orbit a sequence follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainFamily {
    T3,
    T1,
    Pii,
}

/// One rung of a chain. Fields that the construction cannot supply are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatticeEntry {
    pub n: i64,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub f0: Option<f64>,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub h: Option<f64>,
    /// `(sign, log |tau|)`.
    pub log_tau: Option<(i8, f64)>,
}

/// A contiguous run of rungs at a fixed `t`.
///
/// `alpha` is the base parameter vector (`n = 0`): `(alpha0, alpha1, alpha2)`
/// for PIV chains and `(alpha0, alpha1, 0)` for the PII chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSequence {
    pub family: ChainFamily,
    pub t: f64,
    pub alpha: [f64; 3],
    pub entries: Vec<LatticeEntry>,
}

/// Eighth-order central first and second derivatives with step `h`.
fn stencil<F: Fn(f64) -> Result<f64>>(f: F, t: f64, h: f64) -> Result<(f64, f64)> {
    const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    const D2: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
    let mut d1 = 0.0;
    let mut d2 = D2[0] * f(t)?;
    for k in 1..=4 {
        let (fp, fm) = (f(t + k as f64 * h)?, f(t - k as f64 * h)?);
        d1 += D1[k - 1] * (fp - fm);
        d2 += D2[k] * (fp + fm);
    }
    Ok((d1 / h, d2 / (h * h)))
}

fn cfg() -> PrecisionConfig {
    PrecisionConfig::with_bits(160)
}

const STEP: f64 = 1.0 / 64.0;

impl LatticeSequence {
    /// Level `alpha0 + alpha1 + alpha2` of a PIV chain.
    pub fn level(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn get(&self, n: i64) -> Option<&LatticeEntry> {
        let first = self.entries.first()?.n;
        let i = usize::try_from(n - first).ok()?;
        self.entries.get(i)
    }

    fn field(&self, n: i64, what: &str, pick: impl Fn(&LatticeEntry) -> Option<f64>) -> Result<f64> {
        self.get(n)
            .and_then(pick)
            .ok_or_else(|| Error::Domain(format!("{what}[{n}] is not present in the sequence")))
    }

    /// Checks contiguity and, for PIV chains, `f0 + f1 + f2 = 2 level t`.
    pub fn validate(&self) -> Result<()> {
        if self.entries.windows(2).any(|w| w[1].n != w[0].n + 1) {
            return domain("lattice indices must be contiguous");
        }
        if self.family != ChainFamily::Pii {
            let target = 2.0 * self.level() * self.t;
            for e in &self.entries {
                if let (Some(a), Some(b), Some(c)) = (e.f0, e.f1, e.f2) {
                    if (a + b + c - target).abs() > 1e-9 * (1.0 + target.abs() + a.abs() + b.abs() + c.abs()) {
                        return domain(format!("rung {} violates the constraint f0 + f1 + f2 = 2t", e.n));
                    }
                }
            }
        }
        Ok(())
    }

    /// The T3 chain of `Etilde_n(t; a)`, `n = 0..=n_max`. The last rung
    /// carries only `H` and `tau`.
    pub fn t3_classical(a: f64, t: f64, n_max: usize) -> Result<Self> {
        if a <= -1.0 || !t.is_finite() {
            return domain("T3 chain needs a > -1 and finite t");
        }
        let cfg = cfg();
        let log_tau = |n: usize, x: f64| -> Result<(i8, f64)> {
            let r = toda_log_sigma(TodaFamily::T3Incomplete, n, a, x, &cfg)?;
            Ok((r.sign, r.log_abs - n as f64 * x * x))
        };
        let mut h = Vec::new();
        let mut taus = Vec::new();
        for n in 0..=n_max + 1 {
            let lt = log_tau(n, t)?;
            if lt.0 <= 0 && n > 0 {
                return Err(Error::Singular(format!("tau[{n}] is not positive at t = {t}")));
            }
            let (d1, d2) = if n == 0 { (0.0, 0.0) } else { stencil(|x| log_tau(n, x).map(|v| v.1), t, STEP)? };
            h.push((d1, d2));
            taus.push(lt);
        }
        let alpha1 = -a;
        let mut entries = Vec::new();
        for n in 0..=n_max + 1 {
            let mut e = LatticeEntry { n: n as i64, h: Some(h[n].0), log_tau: Some(taus[n]), ..Default::default() };
            if n <= n_max {
                let q = h[n + 1].0 - h[n].0;
                let dq = h[n + 1].1 - h[n].1;
                e.q = Some(q);
                if q != 0.0 {
                    let p = (dq + q * q + 2.0 * t * q + 2.0 * alpha1) / (4.0 * q);
                    e.p = Some(p);
                    e.f1 = Some(-q);
                    e.f2 = Some(2.0 * p);
                    e.f0 = Some(2.0 * t + q - 2.0 * p);
                }
            }
            entries.push(e);
        }
        Ok(LatticeSequence { family: ChainFamily::T3, t, alpha: [1.0 - alpha1, alpha1, 0.0], entries })
    }

    /// The T1 chain of `Etilde_N(t; n)` for integer `n = 0..=n_max` at fixed `N`.
    pub fn t1_classical(big_n: usize, t: f64, n_max: usize) -> Result<Self> {
        if big_n == 0 || !t.is_finite() {
            return domain("T1 chain needs N >= 1 and finite t");
        }
        let cfg = cfg();
        let log_e = |a: usize, x: f64| -> Result<f64> {
            let r = log_etilde(big_n, a as f64, x, &cfg)?;
            if r.sign <= 0 {
                return Err(Error::Singular(format!("Etilde vanishes at t = {x}")));
            }
            Ok(r.log_abs)
        };
        let mut h = Vec::new();
        for a in 0..=n_max + 1 {
            h.push(stencil(|x| log_e(a, x), t, STEP)?);
        }
        let nf = big_n as f64;
        let mut entries = Vec::new();
        for n in 0..=n_max + 1 {
            let mut e = LatticeEntry { n: n as i64, h: Some(h[n].0), ..Default::default() };
            if n <= n_max {
                let p = (h[n + 1].0 - h[n].0) / 2.0;
                let dp = (h[n + 1].1 - h[n].1) / 2.0;
                e.p = Some(p);
                if p != 0.0 {
                    // p' = -2p^2 + 2pq + 2tp + alpha2 with alpha2 = -N.
                    let q = (dp + 2.0 * p * p - 2.0 * t * p + nf) / (2.0 * p);
                    e.q = Some(q);
                    e.f1 = Some(-q);
                    e.f2 = Some(2.0 * p);
                    e.f0 = Some(2.0 * t + q - 2.0 * p);
                }
            }
            entries.push(e);
        }
        Ok(LatticeSequence { family: ChainFamily::T1, t, alpha: [1.0 + nf, 0.0, -nf], entries })
    }

    /// The PII chain from the Airy seed (`alpha1 = 0`, `p[0] = 0`), `n = 0..=n_max`.
    pub fn pii_airy(t: f64, n_max: usize) -> Result<Self> {
        if !t.is_finite() {
            return domain("PII chain needs finite t");
        }
        let cfg = cfg();
        let log_tau = |n: usize, x: f64| -> Result<(i8, f64)> {
            let r = toda_log_sigma(TodaFamily::PiiAiry, n, 0.0, x, &cfg)?;
            if r.sign == 0 {
                return Err(Error::Singular(format!("tau[{n}] vanishes at t = {x}")));
            }
            Ok((r.sign, r.log_abs))
        };
        let mut taus = Vec::new();
        let mut h = Vec::new();
        for n in 0..=n_max + 1 {
            taus.push(log_tau(n, t)?);
            h.push(if n == 0 { 0.0 } else { stencil(|x| log_tau(n, x).map(|v| v.1), t, STEP)?.0 });
        }
        let mut entries = Vec::new();
        for n in 0..=n_max + 1 {
            let mut e = LatticeEntry { n: n as i64, h: Some(h[n]), log_tau: Some(taus[n]), ..Default::default() };
            if n <= n_max {
                e.q = Some(h[n + 1] - h[n]);
                e.p = Some(if n == 0 {
                    0.0
                } else {
                    let s = (taus[n + 1].0 * taus[n - 1].0) as f64;
                    -2.0 * s * (taus[n + 1].1 + taus[n - 1].1 - 2.0 * taus[n].1).exp()
                });
            }
            entries.push(e);
        }
        Ok(LatticeSequence { family: ChainFamily::Pii, t, alpha: [1.0, 0.0, 0.0], entries })
    }

    /// The image under the diagram automorphism `omega`:
    /// `(f0, f1, f2) -> (-f0, -f2, -f1)`, `(a0, a1, a2) -> (-a0, -a2, -a1)`.
    /// A T3 chain becomes a T1-type chain at level -1 and vice versa; `H`,
    /// `tau` and the rung labels are kept.
    pub fn omega(&self) -> Result<Self> {
        let family = match self.family {
            ChainFamily::T3 => ChainFamily::T1,
            ChainFamily::T1 => ChainFamily::T3,
            ChainFamily::Pii => return domain("omega acts on PIV chains only"),
        };
        let [a0, a1, a2] = self.alpha;
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let f0 = e.f0.map(|v| -v);
                let f1 = e.f2.map(|v| -v);
                let f2 = e.f1.map(|v| -v);
                LatticeEntry { q: f1.map(|v| -v), p: f2.map(|v| v / 2.0), f0, f1, f2, ..*e }
            })
            .collect();
        Ok(LatticeSequence { family, t: self.t, alpha: [-a0, -a2, -a1], entries })
    }

    /// `chi_k` of the T3 chain: `chi_{2n+1} = f2[n]`, `chi_{2n+2} = f0[n]`.
    pub fn chi(&self, k: i64) -> Result<f64> {
        if k < 1 {
            return domain("chi is indexed from 1");
        }
        let n = (k - 1) / 2;
        if k % 2 == 1 {
            self.field(n, "f2", |e| e.f2)
        } else {
            self.field(n, "f0", |e| e.f0)
        }
    }

    /// `eta_k` of the T1 chain: `eta_{2n+1} = f1[n]`, `eta_{2n+2} = f0[n]`.
    pub fn eta(&self, k: i64) -> Result<f64> {
        if k < 1 {
            return domain("eta is indexed from 1");
        }
        let n = (k - 1) / 2;
        if k % 2 == 1 {
            self.field(n, "f1", |e| e.f1)
        } else {
            self.field(n, "f0", |e| e.f0)
        }
    }
}

/// `log tau[n]`, `n = 0..=n_max`, of the T3 chain generated without
/// determinants: the classical seed `q[0] = I_a'(t) / I_a(t)`, `p[0] = 0` is
/// stepped with the shift map of [`qp_shift_t3`] and
/// `tau[n+1] tau[n-1] / tau[n]^2 = 2n - 2 p[n] q[n]` supplies the tau
/// functions from `tau[0] = 1`, `tau[1] = I_a(t)`.
///
/// Stepping upward is unstable for negative `t` (each rung loses about
/// seven bits at `t = -3`), so the recurrence runs in MPFR with precision
/// growing with `n_max`.
pub fn t3_generated_log_tau(a: f64, t: f64, n_max: usize) -> Result<Vec<f64>> {
    if a < 0.0 || !t.is_finite() {
        return domain("the generated chain needs a >= 0 and finite t");
    }
    let bits = 96 + 16 * n_max as u32 + (2.0 * t.abs().powi(2)) as u32;
    let tf = Float::with_val(bits, t);
    let i_a = incomplete_moment_mp(a, &tf, bits);
    if !i_a.is_sign_positive() || i_a.is_zero() {
        return Err(Error::Singular(format!("I_a({t}) vanishes")));
    }
    let di = if a == 0.0 {
        Float::with_val(bits, -Float::with_val(bits, &tf * &tf)).exp()
    } else {
        incomplete_moment_mp(a - 1.0, &tf, bits) * a
    };
    let (a0, a1) = (Float::with_val(bits, 1.0 + a), Float::with_val(bits, -a));
    let mut q = Float::with_val(bits, &di / &i_a);
    let mut p = Float::new(bits);
    let mut logs = vec![Float::new(bits), Float::with_val(bits, i_a.ln_ref())];
    for n in 0..n_max.saturating_sub(1) {
        // (q, p) at rung n -> rung n + 1.
        let w = Float::with_val(bits, &tf * 2u32) + &q - Float::with_val(bits, &p * 2u32);
        let qw = Float::with_val(bits, &q * &w);
        let den = Float::with_val(bits, &a0 + n as u32) * 2u32 - &qw;
        if den.is_zero() || w.is_zero() {
            return Err(Error::Singular(format!("shift map degenerates at n = {n}")));
        }
        let q1 = Float::with_val(bits, &qw + Float::with_val(bits, &a1 * 2u32)) * &w / &den;
        let p1 = Float::with_val(bits, &q * -0.5f64) + Float::with_val(bits, &a0 + n as u32) / &w;
        q = q1;
        p = p1;
        let k = n + 1;
        let ratio = Float::with_val(bits, 2 * k as u32) - Float::with_val(bits, &p * &q) * 2u32;
        if !ratio.is_sign_positive() || ratio.is_zero() {
            return Err(Error::Singular(format!("tau ratio at n = {k} is not positive")));
        }
        let next = Float::with_val(bits, &logs[k] * 2u32) - &logs[k - 1] + ratio.ln();
        logs.push(next);
    }
    logs.truncate(n_max + 1);
    Ok(logs.iter().map(Float::to_f64).collect())
}

/// `log Etilde_N(s; a)` from the generated chain, normalised as the
/// determinant route (`Etilde_N ~ s^{Na}` for large `s`).
pub fn log_etilde_recurrence(n: usize, a: f64, s: f64) -> Result<f64> {
    let tau = t3_generated_log_tau(a, s, n)?;
    let nf = n as f64;
    Ok(tau[n] - nf * (nf - 1.0) * std::f64::consts::LN_2 - log_gue_norm(n as u32) + ln_factorial(n as u32))
}

fn need(seq: &LatticeSequence, family: ChainFamily) -> Result<()> {
    if seq.family != family {
        return domain(format!("expected a {family:?} chain, got {:?}", seq.family));
    }
    Ok(())
}

/// `|chi_{k+1} + chi_k + chi_{k-1} - 2t - (k - (1/2 + a1) + (-1)^k (1/2 - a1)) / chi_k|`.
pub fn dpi_residual_t3(seq: &LatticeSequence, k: i64) -> Result<f64> {
    need(seq, ChainFamily::T3)?;
    if k < 2 {
        return domain("the dPI residual needs k >= 2 (chi_{k-1} must exist)");
    }
    let a1 = seq.alpha[1];
    let c = seq.chi(k)?;
    if c == 0.0 {
        return Err(Error::Singular(format!("chi_{k} vanishes")));
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let force = k as f64 - (0.5 + a1) + sign * (0.5 - a1);
    Ok((seq.chi(k + 1)? + c + seq.chi(k - 1)? - 2.0 * seq.t - force / c).abs())
}

/// The T1 form `eta_{k+1} + eta_k + eta_{k-1} = 2 l t - (l k - (1 + (-1)^k) a2 - (l/2)(1 - (-1)^k)) / eta_k`
/// at level `l` (the published form is `l = 1`; `omega` images have `l = -1`).
pub fn dpi_residual_t1(seq: &LatticeSequence, k: i64) -> Result<f64> {
    need(seq, ChainFamily::T1)?;
    if k < 2 {
        return domain("the dPI residual needs k >= 2 (eta_{k-1} must exist)");
    }
    let l = seq.level();
    let a2 = seq.alpha[2];
    let e = seq.eta(k)?;
    if e == 0.0 {
        return Err(Error::Singular(format!("eta_{k} vanishes")));
    }
    let even = k % 2 == 0;
    let force = l * k as f64 - if even { 2.0 * a2 } else { l };
    Ok((seq.eta(k + 1)? + e + seq.eta(k - 1)? - 2.0 * l * seq.t + force / e).abs())
}

/// Base parameters `(alpha0, alpha1)` of a T3 chain `(alpha0 + n, alpha1, -n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T3Params {
    pub alpha0: f64,
    pub alpha1: f64,
}

fn nonzero(x: f64, what: &str) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Singular(format!("shift map divides by {what} = {x}")));
    }
    Ok(x)
}

/// Okamoto's shift of `(q, p)` from rung `n` to `n + direction` along the T3 chain.
pub fn qp_shift_t3(direction: i32, n: i64, q: f64, p: f64, t: f64, params: T3Params) -> Result<(f64, f64)> {
    let (a0, a1) = (params.alpha0, params.alpha1);
    let nf = n as f64;
    match direction {
        1 => {
            let w = 2.0 * t + q - 2.0 * p;
            let qw = q * w;
            let den = nonzero(2.0 * (nf + a0) - qw, "2(n + alpha0) - q(2t + q - 2p)")?;
            let w = nonzero(w, "2t + q - 2p")?;
            Ok((w * (qw + 2.0 * a1) / den, -0.5 * q + (a0 + nf) / w))
        }
        -1 => {
            let m = q * p;
            let den = nonzero(m - nf, "qp - n")?;
            let p = nonzero(p, "p")?;
            let r = (m - a1) / den;
            Ok((-2.0 * p * r, t + (m - nf) / (2.0 * p) - p * r))
        }
        _ => domain("direction must be +1 or -1"),
    }
}

/// Defect of the third-order recurrence in `N` for `U_N` (also satisfied by
/// `V_N`), with `u = [U_{N-1}, U_N, U_{N+1}, U_{N+2}]`.
pub fn hdiff_residual_t3(u: [f64; 4], n: usize, t: f64, a: f64) -> f64 {
    let [um, u0, u1, u2] = u;
    let nf = n as f64;
    let d0 = u1 - u0;
    let lead = (nf + 1.0) * (u2 - u1) - nf * (u0 - um);
    let first = -nf * d0 * (u0 - um) * (4.0 * t + u2 + u1 - u0 - um).powi(2);
    let b1 = lead - 0.5 * (2.0 * t + u2 - u0) * (-2.0 * a + d0 * (2.0 * t + u1 - u0));
    let b2 = lead - 0.5 * (2.0 * t + u1 - um) * (2.0 * a + d0 * (2.0 * t + u2 - um));
    (first + 2.0 * b1 * b2).abs()
}

/// Five consecutive `tau[n-2..=n+2]` as signed logs, brought to order one
/// by a gauge `tau[k] -> c d^k tau[k]` that leaves the homogeneous tau
/// equations invariant.
fn gauged(log_tau: &[(i8, f64); 5]) -> Result<[f64; 5]> {
    if log_tau.iter().any(|(s, l)| *s == 0 || !l.is_finite()) {
        return domain("tau values must be non-zero and finite");
    }
    let c = log_tau[2].1;
    let d = (log_tau[3].1 - log_tau[1].1) / 2.0;
    let mut out = [0.0; 5];
    for (k, (s, l)) in log_tau.iter().enumerate() {
        let e = l - c - d * (k as f64 - 2.0);
        if e.abs() > 600.0 {
            return Err(Error::Accuracy { what: "tau sequence overflows after rescaling".into(), achieved: e, wanted: 600.0 });
        }
        out[k] = *s as f64 * e.exp();
    }
    Ok(out)
}

/// Relative defect of the fourth-order tau equation of the T3 chain, for
/// `tau[n-2..=n+2]` given as `(sign, log |tau|)`.
///
/// The equation has the form `L = B^2`. The defect is `|L - B^2|` divided by
/// `|B|` times the summed size of the monomials of `B`, which reads as the
/// error in `B` relative to its terms. It stays first order in an error of
/// the input even at `t = 0`, where `L` and `B` both vanish.
pub fn taudiff_residual_t3(log_tau: [(i8, f64); 5], n: usize, t: f64, alpha1: f64) -> Result<f64> {
    let [tm2, tm1, t0, t1, t2] = gauged(&log_tau)?;
    let nf = n as f64;
    let b = alpha1 - nf;
    // Each factor as its list of monomials.
    let factors: [Vec<f64>; 4] = [
        vec![2.0 * nf * t0 * t0, -t1 * tm1],
        vec![2.0 * (nf - alpha1) * t0 * t0, -t1 * tm1],
        vec![tm2 * t1 * t0, 2.0 * tm1 * tm1 * t1, 4.0 * nf * b * t0 * t0 * tm1],
        vec![t2 * tm1 * t0, -2.0 * t1 * t1 * tm1, 4.0 * nf * b * t0 * t0 * t1],
    ];
    let brace = [
        t2 * tm2 * t0.powi(3),
        -16.0 * nf * nf * b * b * t0.powi(5),
        16.0 * nf * b * (alpha1 - 2.0 * nf) * t0.powi(3) * t1 * tm1,
        -4.0 * (2.0 * nf * nf - 2.0 * alpha1 * nf + 1.0) * t0 * t1 * t1 * tm1 * tm1,
        t2 * tm1 * tm1 * t1 * tm1,
        2.0 * (alpha1 + 1.0 - 2.0 * nf) * t2 * tm1 * tm1 * t0 * t0,
        tm2 * t1 * t1 * t1 * tm1,
        2.0 * (alpha1 - 1.0 - 2.0 * nf) * tm2 * t1 * t1 * t0 * t0,
    ];
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let size = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let lhs = 4.0 * t * t * factors.iter().map(|f| sum(f)).product::<f64>();
    let b_sum = sum(&brace);
    let scale = size(&brace) * b_sum.abs().max(lhs.abs().sqrt());
    let defect = (lhs - b_sum * b_sum).abs();
    Ok(if defect == 0.0 { 0.0 } else { defect / scale })
}

/// Which PII lattice equation [`adpi_residual_pii`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PiiLatticeEquation {
    /// a-dPI in `q[n-1], q[n], q[n+1]` (three values).
    AdPi,
    /// Third-order equation in `H[n-1..=n+2]` (four values).
    Hamiltonian,
    /// The `a`-ladder for `u(s; a-1..=a+2)` (four values, index = `a`).
    ULadder,
}

/// Defect of a PII lattice equation. `alpha` is the PII parameter with
/// `alpha_n = alpha + 1/2 - n`; for the `u` ladder `index` is `a` and `t` is `s`.
pub fn adpi_residual_pii(equation: PiiLatticeEquation, values: &[f64], index: i64, t: f64, alpha: f64) -> Result<f64> {
    let nf = index as f64;
    let den = |x: f64, what: &str| -> Result<f64> {
        if x == 0.0 {
            return Err(Error::Singular(format!("difference {what} vanishes")));
        }
        Ok(x)
    };
    let want = match equation {
        PiiLatticeEquation::AdPi => 3,
        _ => 4,
    };
    if values.len() != want {
        return domain(format!("{equation:?} needs {want} consecutive values, got {}", values.len()));
    }
    let v = values;
    Ok(match equation {
        PiiLatticeEquation::AdPi => {
            let lhs = (alpha + 0.5 - nf) / den(v[1] + v[0], "q[n] + q[n-1]")?
                + (alpha - 0.5 - nf) / den(v[2] + v[1], "q[n+1] + q[n]")?;
            (lhs + 2.0 * v[1] * v[1] + t).abs()
        }
        PiiLatticeEquation::Hamiltonian => {
            let lhs = (alpha + 0.5 - nf) / den(v[2] - v[0], "H[n+1] - H[n-1]")?
                + (alpha - 0.5 - nf) / den(v[3] - v[1], "H[n+2] - H[n]")?;
            (lhs + 2.0 * (v[2] - v[1]).powi(2) + t).abs()
        }
        PiiLatticeEquation::ULadder => {
            let lhs = nf / den(v[2] - v[0], "u(a+1) - u(a-1)")? + (nf + 1.0) / den(v[3] - v[1], "u(a+2) - u(a)")?;
            (lhs - t + (v[2] - v[1]).powi(2)).abs()
        }
    })
}

/// Baecklund step of the PII chain, parameters `(alpha0 + n, alpha1 - n)`
/// with `alpha_n = alpha + 1/2 - n`.
pub fn pii_qp_shift(direction: i32, n: i64, q: f64, p: f64, t: f64, alpha: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    match direction {
        1 => {
            let den = nonzero(p - 2.0 * q * q - t, "p - 2q^2 - t")?;
            Ok((-q + (alpha - 0.5 - nf) / den, -p + 2.0 * q * q + t))
        }
        -1 => {
            let p0 = nonzero(p, "p")?;
            let r = q + (alpha + 0.5 - nf) / p0;
            Ok((-q - (alpha + 0.5 - nf) / p0, t - p + 2.0 * r * r))
        }
        _ => domain("direction must be +1 or -1"),
    }
}

/// Defect of the second-order equation for `p[n-1], p[n], p[n+1]`.
pub fn bh_residual_pii(p: [f64; 3], n: i64, t: f64, alpha: f64) -> Result<f64> {
    let an = alpha + 0.5 - n as f64;
    if an == 0.0 {
        return domain("alpha_n = 0 makes the p equation degenerate");
    }
    let [pm, p0, pp] = p;
    if p0 == 0.0 {
        return Err(Error::Singular("p[n] vanishes".into()));
    }
    Ok((p0 * p0 * (pp - pm).powi(2) / (4.0 * an * an) + an * an / (p0 * p0) - 2.0 * p0 - pp - pm + 2.0 * t).abs())
}

/// Relative defect of the fourth-order tau equation of the PII chain,
/// obtained by putting `p[n] = -2 tau[n+1] tau[n-1] / tau[n]^2` into the
/// second-order `p` equation. The squared bracket carries `2 / alpha_n^2`.
pub fn tau4_residual_pii(log_tau: [(i8, f64); 5], n: i64, t: f64, alpha: f64) -> Result<f64> {
    let an = alpha + 0.5 - n as f64;
    if an == 0.0 {
        return domain("alpha_n = 0 makes the 1/alpha_n^2 prefactor undefined");
    }
    let [tm2, tm1, t0, t1, t2] = gauged(&log_tau)?;
    let a = tm2 * t1 * t1 - t2 * tm1 * tm1;
    let pos = [
        2.0 * a * a / (an * an),
        an * an * t0.powi(6) / 8.0,
        tm2 * t0.powi(3) * t1 * t1,
        t2 * t0.powi(3) * tm1 * tm1,
        2.0 * tm1.powi(3) * t1.powi(3),
        t * t0 * t0 * tm1 * tm1 * t1 * t1,
    ];
    let sum: f64 = pos.iter().sum();
    let scale = pos.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(if scale == 0.0 { 0.0 } else { sum.abs() / scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::painleve_sym::{hamiltonian_iv_qp, PivParams};
    use crate::sigma_solver::{determinant_route, solve_sigma, SigmaKind};
    use crate::types::GridSpec;

    fn taus(seq: &LatticeSequence, n: i64) -> [(i8, f64); 5] {
        let mut out = [(0, 0.0); 5];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = seq.get(n - 2 + k as i64).unwrap().log_tau.unwrap();
        }
        out
    }

    #[test]
    fn t3_chain_satisfies_dpi() {
        let seq = LatticeSequence::t3_classical(0.5, 0.7, 5).unwrap();
        seq.validate().unwrap();
        for k in 2..=10 {
            let r = dpi_residual_t3(&seq, k).unwrap();
            assert!(r < 1e-6, "k={k}: {r}");
        }
        // chi_1 = f2[0] = 2p[0] vanishes on the wall.
        assert!(seq.chi(1).unwrap().abs() < 1e-8);
        assert!(matches!(dpi_residual_t3(&seq, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn dpi_forcing_at_alpha1_zero() {
        // With alpha1 = 0 and k even the forcing is k / chi_k; shifting t
        // moves only the 2t term.
        let mut seq = LatticeSequence {
            family: ChainFamily::T3,
            t: 0.0,
            alpha: [1.0, 0.0, 0.0],
            entries: vec![
                LatticeEntry { n: 0, f0: Some(2.0), f2: Some(1.0), ..Default::default() },
                LatticeEntry { n: 1, f2: Some(3.0), ..Default::default() },
            ],
        };
        let base = dpi_residual_t3(&seq, 2).unwrap();
        assert!((base - (1.0 + 2.0 + 3.0 - 2.0 / 2.0)).abs() < 1e-15);
        seq.t = 0.25;
        assert!((dpi_residual_t3(&seq, 2).unwrap() - (base - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn validators_accept_determinant_sequences() {
        for t in [-1.0, 0.3, 1.2] {
            for a in [0.0, 0.5, 1.0] {
                let seq = LatticeSequence::t3_classical(a, t, 5).unwrap();
                for k in 2..=10 {
                    assert!(dpi_residual_t3(&seq, k).unwrap() < 1e-5, "t={t} a={a} k={k}");
                }
                for n in 2..=4 {
                    assert!(taudiff_residual_t3(taus(&seq, n), n as usize, t, -a).unwrap() < 1e-5, "t={t} a={a} n={n}");
                }
            }
            let t1 = LatticeSequence::t1_classical(2, t, 5).unwrap();
            t1.validate().unwrap();
            for k in 2..=10 {
                assert!(dpi_residual_t1(&t1, k).unwrap() < 1e-5, "t={t} k={k}");
            }
            let pii = LatticeSequence::pii_airy(t, 5).unwrap();
            for n in 2..=4 {
                assert!(tau4_residual_pii(taus(&pii, n), n, t, -0.5).unwrap() < 1e-5, "t={t} n={n}");
                let h: Vec<f64> = (n - 1..=n + 2).map(|k| pii.get(k).unwrap().h.unwrap()).collect();
                assert!(adpi_residual_pii(PiiLatticeEquation::Hamiltonian, &h, n, t, -0.5).unwrap() < 1e-5);
                let q: Vec<f64> = (n - 1..=n + 1).map(|k| pii.get(k).unwrap().q.unwrap()).collect();
                assert!(adpi_residual_pii(PiiLatticeEquation::AdPi, &q, n, t, -0.5).unwrap() < 1e-5);
            }
        }
    }

    #[test]
    fn tau_equation_examples() {
        let seq = LatticeSequence::t3_classical(0.5, 0.5, 4).unwrap();
        let r = taudiff_residual_t3(taus(&seq, 2), 2, 0.5, -0.5).unwrap();
        assert!(r < 1e-6, "{r}");
        let gap = LatticeSequence::t3_classical(0.0, 0.5, 4).unwrap();
        assert!(taudiff_residual_t3(taus(&gap, 2), 2, 0.5, 0.0).unwrap() < 1e-6);
        // tau[k] -> 2^k tau[k] leaves the defect unchanged.
        let mut scaled = taus(&seq, 2);
        for (k, v) in scaled.iter_mut().enumerate() {
            v.1 += k as f64 * std::f64::consts::LN_2;
        }
        let r2 = taudiff_residual_t3(scaled, 2, 0.5, -0.5).unwrap();
        assert!((r - r2).abs() < 1e-9);
        // A 1% error in one tau is caught, also at t = 0 where both sides
        // of the equation vanish.
        for t in [0.0, 0.5] {
            let seq = LatticeSequence::t3_classical(1.0, t, 4).unwrap();
            let mut bad = taus(&seq, 2);
            assert!(taudiff_residual_t3(bad, 2, t, -1.0).unwrap() < 1e-12);
            bad[4].1 += 1e-2;
            let r = taudiff_residual_t3(bad, 2, t, -1.0).unwrap();
            assert!(r > 1e-5, "t = {t}: {r}");
        }
        let airy = LatticeSequence::pii_airy(0.5, 4).unwrap();
        assert!(tau4_residual_pii(taus(&airy, 2), 2, 0.5, -0.5).unwrap() < 1e-6);
        assert!(matches!(tau4_residual_pii(taus(&airy, 2), 2, 0.5, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn t3_shift_roundtrip_and_hamiltonian_steps() {
        let params = T3Params { alpha0: 1.3, alpha1: -0.3 };
        for (n, q, p, t) in [(2, 0.7, -0.4, 0.3), (1, -1.1, 0.25, -0.8), (4, 0.2, 1.7, 1.1)] {
            let (q1, p1) = qp_shift_t3(1, n, q, p, t, params).unwrap();
            let (q0, p0) = qp_shift_t3(-1, n + 1, q1, p1, t, params).unwrap();
            assert!((q0 - q).abs() < 1e-9 && (p0 - p).abs() < 1e-9);
            let h = |n: i64, q: f64, p: f64| {
                hamiltonian_iv_qp(t, q, p, &PivParams::new(params.alpha0 + n as f64, params.alpha1, -(n as f64)).unwrap())
            };
            // H[n+1] - H[n] = -f1[n] = q[n].
            assert!((h(n + 1, q1, p1) - h(n, q, p) - q).abs() < 1e-9);
        }
        assert!(matches!(qp_shift_t3(-1, 1, 1.0, 1.0, 0.0, params), Err(Error::Singular(_))));
    }

    #[test]
    fn t3_chain_is_generated_from_a_determinant_seed() {
        let a = 1.0;
        let t = 0.4;
        let seq = LatticeSequence::t3_classical(a, t, 5).unwrap();
        let params = T3Params { alpha0: 1.0 + a, alpha1: -a };
        for n in 1..=4 {
            let e = seq.get(n).unwrap();
            let (q, p) = qp_shift_t3(1, n, e.q.unwrap(), e.p.unwrap(), t, params).unwrap();
            let next = seq.get(n + 1).unwrap();
            assert!((q - next.q.unwrap()).abs() < 1e-6, "n={n}");
            assert!((p - next.p.unwrap()).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn omega_maps_the_t3_equation_to_the_t1_equation() {
        let seq = LatticeSequence::t3_classical(0.5, 0.3, 5).unwrap();
        let dual = seq.omega().unwrap();
        assert_eq!(dual.family, ChainFamily::T1);
        assert_eq!(dual.level(), -1.0);
        dual.validate().unwrap();
        for k in 2..=10 {
            let a = dpi_residual_t3(&seq, k).unwrap();
            let b = dpi_residual_t1(&dual, k).unwrap();
            assert!((a - b).abs() < 1e-12, "k={k}");
            assert!((dual.eta(k).unwrap() + seq.chi(k).unwrap()).abs() < 1e-15);
        }
        assert_eq!(dual.omega().unwrap(), seq);
    }

    #[test]
    fn u_recurrence_in_n() {
        let grid = GridSpec::new(-1.0, -1.0, 1);
        let u: Vec<f64> = (1..=4)
            .map(|n| solve_sigma(SigmaKind::Etilde, n, 1.0, &grid, 1e-10).unwrap().grid.value[0])
            .collect();
        assert!(hdiff_residual_t3([u[0], u[1], u[2], u[3]], 2, -1.0, 1.0) < 1e-5);
        let mut with_zero = vec![0.0];
        with_zero.extend(&u[..3]);
        assert!(hdiff_residual_t3([with_zero[0], with_zero[1], with_zero[2], with_zero[3]], 1, -1.0, 1.0) < 1e-5);
        let grid = GridSpec::new(2.0, 2.0, 1);
        let v: Vec<f64> = (1..=4)
            .map(|n| determinant_route(SigmaKind::CharPoly, n, 1.0, &grid, 1e-10).unwrap().grid.value[0])
            .collect();
        assert!(hdiff_residual_t3([v[0], v[1], v[2], v[3]], 2, 2.0, 1.0) < 1e-5);
        assert_eq!(hdiff_residual_t3([0.7; 4], 3, 0.4, 0.0), 0.0);
    }

    #[test]
    fn u_ladder_in_a() {
        let grid = GridSpec::new(-2.0, -2.0, 1);
        let u: Vec<f64> = (0..=3)
            .map(|a| solve_sigma(SigmaKind::SoftEtilde, 0, a as f64, &grid, 1e-10).unwrap().grid.value[0])
            .collect();
        let r = adpi_residual_pii(PiiLatticeEquation::ULadder, &u, 1, -2.0, 0.0).unwrap();
        assert!(r < 1e-5, "{r}");
    }

    #[test]
    fn pii_shift_roundtrip_and_airy_seed() {
        for (n, q, p, t) in [(1, 0.3, -0.7, 0.2), (3, -1.2, 0.9, -1.4)] {
            let (q1, p1) = pii_qp_shift(1, n, q, p, t, 0.2).unwrap();
            let (q0, p0) = pii_qp_shift(-1, n + 1, q1, p1, t, 0.2).unwrap();
            assert!((q0 - q).abs() < 1e-10 && (p0 - p).abs() < 1e-10);
        }
        let t = 0.6;
        let seq = LatticeSequence::pii_airy(t, 4).unwrap();
        let e0 = seq.get(0).unwrap();
        let (q1, p1) = pii_qp_shift(1, 0, e0.q.unwrap(), 0.0, t, -0.5).unwrap();
        let want = seq.get(1).unwrap();
        assert!((p1 - want.p.unwrap()).abs() < 1e-8, "{p1} {:?}", want.p);
        assert!((q1 - want.q.unwrap()).abs() < 1e-6);
        let mut ps = vec![0.0, p1];
        let (mut q, mut p) = (q1, p1);
        for n in 1..4 {
            let next = pii_qp_shift(1, n, q, p, t, -0.5).unwrap();
            q = next.0;
            p = next.1;
            ps.push(p);
        }
        for n in 1..4 {
            let r = bh_residual_pii([ps[n - 1], ps[n], ps[n + 1]], n as i64, t, -0.5).unwrap();
            assert!(r < 1e-6, "n={n}: {r}");
        }
        assert!(matches!(pii_qp_shift(-1, 0, 1.0, 0.0, 0.0, 0.0), Err(Error::Singular(_))));
    }

    #[test]
    fn generated_chain_reproduces_determinants() {
        let cfg = PrecisionConfig::with_bits(160);
        let mut worst = 0.0f64;
        for a in [0.0, 0.5, 1.0, 2.0] {
            for s in [-3.0, -1.5, 0.0, 1.0, 3.0] {
                for n in 1..=6 {
                    let want = log_etilde(n, a, s, &cfg).unwrap().log_abs;
                    let got = log_etilde_recurrence(n, a, s).unwrap();
                    worst = worst.max((got - want).abs());
                }
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(tau4_residual_pii([(1, 0.0); 5], 1, 0.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(taudiff_residual_t3([(0, 0.0); 5], 2, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(adpi_residual_pii(PiiLatticeEquation::AdPi, &[1.0, 2.0], 1, 0.0, 0.0).is_err());
        assert!(matches!(
            adpi_residual_pii(PiiLatticeEquation::AdPi, &[1.0, -1.0, 0.5], 1, 0.0, 0.0),
            Err(Error::Singular(_))
        ));
    }
}
