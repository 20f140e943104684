//! Small-scale ground truth: GUE sampling and direct quadrature of the
//! defining multiple integrals.
//!
//! Matrices follow the convention with joint eigenvalue density proportional
//! to `prod e^{-x_j^2} prod_{j<k} (x_k - x_j)^2`: diagonal entries are
//! `N[0, 1/sqrt 2]`, off-diagonal entries `N[0, 1/2] + i N[0, 1/2]`.
//!
//! Sampling is split into fixed chunks of [`CHUNK`] draws. Chunk `k` uses the
//! ChaCha20 stream `k` of the seeded generator, so the estimate does not
//! depend on how many threads run the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special_fn::{adaptive_gk15, log_gue_norm};

/// Draws per independent stream.
pub const CHUNK: usize = 4096;

const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(n: usize, samples: usize, seed: u64) -> Result<Self> {
        let c = McConfig { n, samples, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return domain("matrix dimension must be at least 1");
        }
        if self.n > 64 {
            return domain("sampling is limited to N <= 64");
        }
        if self.samples == 0 {
            return domain("need at least one sample");
        }
        Ok(())
    }

    fn chunks(&self) -> usize {
        self.samples.div_ceil(CHUNK)
    }

    fn chunk_len(&self, k: usize) -> usize {
        CHUNK.min(self.samples - k * CHUNK)
    }
}

/// The statistic whose GUE average is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Statistic {
    /// `E_N(0; (s, inf))`: no eigenvalue above `s`.
    Gap { s: f64 },
    /// `Ẽ_N(s; a)`: indicator of no eigenvalue above `s` times `prod (s - x_l)^a`.
    Etilde { s: f64, a: f64 },
    /// `F_N(lambda; a) = < prod (lambda - x_l)^a >` for integer `a >= 0`.
    CharPoly { lambda: f64, a: u32 },
}

impl Statistic {
    fn validate(&self) -> Result<()> {
        match *self {
            Statistic::Gap { s } if !s.is_finite() => domain("s must be finite"),
            Statistic::Etilde { s, a } if !s.is_finite() || !(a >= 0.0) => {
                domain("Etilde needs finite s and a >= 0")
            }
            Statistic::CharPoly { lambda, .. } if !lambda.is_finite() => domain("lambda must be finite"),
            _ => Ok(()),
        }
    }

    /// Value of the statistic on one configuration (any order).
    pub fn eval(&self, xs: &[f64]) -> f64 {
        match *self {
            Statistic::Gap { s } => {
                if xs.iter().all(|&x| x <= s) {
                    1.0
                } else {
                    0.0
                }
            }
            Statistic::Etilde { s, a } => {
                if xs.iter().all(|&x| x <= s) {
                    xs.iter().map(|&x| (s - x).powf(a)).product()
                } else {
                    0.0
                }
            }
            Statistic::CharPoly { lambda, a } => {
                xs.iter().map(|&x| (lambda - x).powi(a as i32)).product()
            }
        }
    }
}

/// Eigenvalues of a real symmetric matrix (row-major, `n x n`) by cyclic Jacobi
/// sweeps until the off-diagonal Frobenius norm is below `1e-12` relative.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let total: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= JACOBI_TOL * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// One GUE draw's sorted eigenvalues. The Hermitian `A + iB` is embedded as
/// the real symmetric `[[A, -B], [B, A]]`, whose spectrum is that of `A + iB`
/// with every eigenvalue doubled.
fn draw(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let diag = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let off = Normal::new(0.0, 0.5).unwrap();
    let m = 2 * n;
    let mut big = vec![0.0; m * m];
    for i in 0..n {
        let d = diag.sample(rng);
        big[i * m + i] = d;
        big[(i + n) * m + i + n] = d;
        for j in i + 1..n {
            let (re, im) = (off.sample(rng), off.sample(rng));
            for (r, c, v) in [
                (i, j, re),
                (j, i, re),
                (i + n, j + n, re),
                (j + n, i + n, re),
                // B is antisymmetric with B[i][j] = im for the entry A[i][j] + i B[i][j].
                (i + n, j, im),
                (j + n, i, -im),
                (i, j + n, -im),
                (j, i + n, im),
            ] {
                big[r * m + c] = v;
            }
        }
    }
    jacobi_eigenvalues(big, m).into_iter().step_by(2).collect()
}

fn stream(seed: u64, k: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// All sorted eigenvalue tuples of `cfg.samples` draws, in stream order.
pub fn sample_gue_eigs(cfg: &McConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.samples);
    for k in 0..cfg.chunks() {
        let mut rng = stream(cfg.seed, k);
        for _ in 0..cfg.chunk_len(k) {
            out.push(draw(cfg.n, &mut rng));
        }
    }
    Ok(out)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// `|estimate - value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.estimate - value).abs() / self.std_error.max(f64::MIN_POSITIVE)
    }
}

fn chunk_sums(stat: &Statistic, cfg: &McConfig, k: usize) -> (f64, f64) {
    let mut rng = stream(cfg.seed, k);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..cfg.chunk_len(k) {
        let v = stat.eval(&draw(cfg.n, &mut rng));
        s1 += v;
        s2 += v * v;
    }
    (s1, s2)
}

/// Monte-Carlo estimate of the GUE average of `stat`. Chunks run on scoped
/// threads and are merged in chunk order.
pub fn mc_estimate(stat: &Statistic, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    stat.validate()?;
    let chunks = cfg.chunks();
    let workers = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).min(chunks);
    let mut sums = vec![(0.0, 0.0); chunks];
    std::thread::scope(|scope| {
        for (w, slots) in sums.chunks_mut(chunks.div_ceil(workers)).enumerate() {
            let first = w * chunks.div_ceil(workers);
            scope.spawn(move || {
                for (i, slot) in slots.iter_mut().enumerate() {
                    *slot = chunk_sums(stat, cfg, first + i);
                }
            });
        }
    });
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    let m = cfg.samples as f64;
    let mean = s1 / m;
    let var = if cfg.samples > 1 { ((s2 - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate { estimate: mean, std_error: (var / m).sqrt(), samples: cfg.samples })
}

/// Tolerance target for [`quadrature_oracle`].
pub const QUADRATURE_REL_TOL: f64 = 1e-8;

fn nested(
    depth: usize,
    prefix: &mut Vec<f64>,
    lo: f64,
    hi: f64,
    integrand: &dyn Fn(&[f64]) -> f64,
    rel: f64,
) -> Result<f64> {
    if depth == 0 {
        return Ok(integrand(prefix));
    }
    let failure = std::cell::Cell::new(None);
    let inner = std::cell::RefCell::new(prefix.clone());
    let v = adaptive_gk15(
        |x| {
            let mut p = inner.borrow_mut();
            p.push(x);
            let r = nested(depth - 1, &mut p, lo, hi, integrand, rel);
            p.pop();
            r.unwrap_or_else(|e| {
                failure.set(Some(e));
                0.0
            })
        },
        lo,
        hi,
        rel,
        1e-300,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(v)
}

/// Direct `N`-fold quadrature (`N <= 3`) of the defining integral
/// `(1/c(N)) int prod e^{-x_j^2} stat(x) prod_{j<k} (x_k - x_j)^2 dx`.
pub fn quadrature_oracle(stat: &Statistic, n: usize) -> Result<f64> {
    stat.validate()?;
    if n == 0 || n > 3 {
        return domain("quadrature oracle supports 1 <= N <= 3");
    }
    let (lo, hi) = match *stat {
        Statistic::Gap { s } | Statistic::Etilde { s, .. } => (s.min(0.0) - 10.0, s.min(10.0)),
        Statistic::CharPoly { lambda, .. } => (-10.0 - lambda.abs().min(2.0), 10.0 + lambda.abs().min(2.0)),
    };
    if hi <= lo {
        return Ok(0.0);
    }
    let weight = |xs: &[f64]| -> f64 {
        let mut w: f64 = xs.iter().map(|x| (-x * x).exp()).product();
        for j in 0..xs.len() {
            for k in j + 1..xs.len() {
                w *= (xs[k] - xs[j]) * (xs[k] - xs[j]);
            }
        }
        // Inside the box the indicator is 1; only the product survives.
        let body = match *stat {
            Statistic::Gap { .. } => 1.0,
            _ => stat.eval(xs),
        };
        w * body
    };
    let raw = nested(n, &mut Vec::new(), lo, hi, &weight, 1e-11)?;
    let value = raw / log_gue_norm(n as u32).exp();
    if !value.is_finite() {
        return Err(Error::Accuracy { what: "quadrature oracle".into(), achieved: f64::NAN, wanted: QUADRATURE_REL_TOL });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel_tau::{etilde_det, f_det, gap_det};
    use crate::types::PrecisionConfig;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn jacobi_on_known_spectrum() {
        let a = vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0];
        let ev = jacobi_eigenvalues(a, 3);
        let r2 = 2f64.sqrt();
        for (x, y) in ev.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn one_by_one_variance_and_symmetry() {
        let cfg = McConfig::new(1, 100_000, 7).unwrap();
        let xs = sample_gue_eigs(&cfg).unwrap();
        let m = xs.len() as f64;
        let mean = xs.iter().map(|v| v[0]).sum::<f64>() / m;
        let var = xs.iter().map(|v| (v[0] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        // Var of the sample variance for a Gaussian is 2 sigma^4 / m.
        assert!((var - 0.5).abs() < 3.0 * (2.0 * 0.25 / m).sqrt());
        let cfg = McConfig::new(4, 20_000, 11).unwrap();
        let sums: Vec<f64> = sample_gue_eigs(&cfg).unwrap().iter().map(|v| v.iter().sum()).collect();
        let m = sums.len() as f64;
        let mean = sums.iter().sum::<f64>() / m;
        // Trace is N[0, sqrt(N/2)].
        assert!(mean.abs() < 3.0 * (2.0 / m).sqrt());
    }

    #[test]
    fn spectrum_edge_and_sorting() {
        let cfg = McConfig::new(20, 200, 3).unwrap();
        let draws = sample_gue_eigs(&cfg).unwrap();
        assert!(draws.iter().all(|v| v.windows(2).all(|w| w[0] <= w[1])));
        let mean_max = draws.iter().map(|v| v[19]).sum::<f64>() / draws.len() as f64;
        // Edge at sqrt(2N), shifted by the Tracy-Widom mean -1.7711 on the
        // scale 2^{-1/2} N^{-1/6}.
        let edge = 40f64.sqrt() - 1.7711 * std::f64::consts::FRAC_1_SQRT_2 * 20f64.powf(-1.0 / 6.0);
        assert!((mean_max - edge).abs() < 0.1, "{mean_max}");
        assert!(draws.iter().all(|v| v[19] < 40f64.sqrt() + 2.0));
    }

    #[test]
    fn estimates_against_analytic_values() {
        let cfg = McConfig::new(2, 100_000, 2024).unwrap();
        let e2 = mc_estimate(&Statistic::Gap { s: 0.0 }, &cfg).unwrap();
        assert!(e2.z_score(0.25 - 0.5 / PI) < 4.0);
        let cfg1 = McConfig::new(1, 100_000, 99).unwrap();
        let f1 = mc_estimate(&Statistic::CharPoly { lambda: 0.0, a: 2 }, &cfg1).unwrap();
        assert!(f1.z_score(0.5) < 4.0);
        let et = mc_estimate(&Statistic::Etilde { s: 0.0, a: 0.0 }, &cfg).unwrap();
        assert_eq!(et, e2);
    }

    #[test]
    fn seed_determinism() {
        let cfg = McConfig::new(3, 9000, 5).unwrap();
        let st = Statistic::Etilde { s: 0.5, a: 1.0 };
        assert_eq!(mc_estimate(&st, &cfg).unwrap(), mc_estimate(&st, &cfg).unwrap());
        let serial: f64 = sample_gue_eigs(&cfg).unwrap().iter().map(|x| st.eval(x)).sum::<f64>() / 9000.0;
        assert!((serial - mc_estimate(&st, &cfg).unwrap().estimate).abs() < 1e-12);
        assert!(McConfig::new(0, 10, 1).is_err() && McConfig::new(2, 0, 1).is_err());
    }

    #[test]
    fn quadrature_matches_determinants() {
        let c = PrecisionConfig::default();
        let q = quadrature_oracle(&Statistic::Gap { s: 0.0 }, 2).unwrap();
        assert!((q - (0.25 - 0.5 / PI)).abs() < 1e-8);
        let q = quadrature_oracle(&Statistic::Etilde { s: 1.0, a: 1.0 }, 1).unwrap();
        assert!((q - etilde_det(1, 1.0, 1.0, &c).unwrap()).abs() < 1e-8);
        let q = quadrature_oracle(&Statistic::Gap { s: 8.0 }, 3).unwrap();
        assert!((q - 1.0).abs() < 1e-7);
        for n in 1..=2 {
            let q = quadrature_oracle(&Statistic::Etilde { s: -0.4, a: 2.0 }, n).unwrap();
            assert!((q - etilde_det(n, 2.0, -0.4, &c).unwrap()).abs() < 1e-7);
            let q = quadrature_oracle(&Statistic::CharPoly { lambda: 0.7, a: 2 }, n).unwrap();
            let f = f_det(n, 2.0, Complex64::new(0.7, 0.0), &c).unwrap().re;
            assert!((q - f).abs() < 1e-7);
            let q = quadrature_oracle(&Statistic::Gap { s: 0.5 }, n).unwrap();
            assert!((q - gap_det(n, 0.5, &c).unwrap()).abs() < 1e-7);
        }
        assert!(quadrature_oracle(&Statistic::Gap { s: 0.0 }, 4).is_err());
    }
}
