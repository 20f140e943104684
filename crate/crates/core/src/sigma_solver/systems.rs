//! Polynomial vector fields for the MPFR Taylor integrator, plus the
//! high-order difference weights used to read anchors off determinants.

use rug::Float;

use crate::mp::conv;
use crate::ode::TaylorSystem;

/// `(t x)_k` for the jet of `x` about `tc`.
fn times_t(tc: &Float, x: &[Float], k: usize) -> Float {
    let mut v = Float::with_val(tc.prec(), tc * &x[k]);
    if k >= 1 {
        v += &x[k - 1];
    }
    v
}

fn reset(aux: &mut Vec<Vec<Float>>, k: usize, slots: usize) {
    if k == 0 {
        aux.clear();
        aux.resize(slots, Vec::new());
    }
}

/// Once-differentiated sigma-PIV form,
/// `s''' = 4t(t s' - s) - 2(3 s'^2 + 4(a1 - a2) s' - 4 a1 a2)`,
/// carried as `(s, s', s'', int s)`.
pub(crate) struct SigmaPiv {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl TaylorSystem for SigmaPiv {
    fn dim(&self) -> usize {
        4
    }

    fn rhs_coeff(&self, k: usize, tc: &Float, y: &[Vec<Float>], aux: &mut Vec<Vec<Float>>, out: &mut [Float]) {
        let prec = tc.prec();
        reset(aux, k, 1);
        let g = times_t(tc, &y[1], k) - &y[0][k];
        aux[0].push(Float::with_val(prec, g));
        let tg = times_t(tc, &aux[0], k);
        let sq = conv(&y[1], &y[1], k, prec);
        let lin = Float::with_val(prec, &y[1][k] * (4.0 * (self.alpha1 - self.alpha2)));
        let mut third = Float::with_val(prec, tg * 4u32) - Float::with_val(prec, sq * 6u32) - lin * 2u32;
        if k == 0 {
            third += 8.0 * self.alpha1 * self.alpha2;
        }
        out[0] = y[1][k].clone();
        out[1] = y[2][k].clone();
        out[2] = third;
        out[3] = y[0][k].clone();
    }
}

/// Once-differentiated sigma-PII form, `u''' = -2(3u'^2 - 2s u' + u)`, as
/// `(u, u', u'', int u)`. The parameter only enters through the data.
pub(crate) struct SigmaPii;

impl TaylorSystem for SigmaPii {
    fn dim(&self) -> usize {
        4
    }

    fn rhs_coeff(&self, k: usize, tc: &Float, y: &[Vec<Float>], _aux: &mut Vec<Vec<Float>>, out: &mut [Float]) {
        let prec = tc.prec();
        let sq = conv(&y[1], &y[1], k, prec);
        let su = times_t(tc, &y[1], k);
        let inner = Float::with_val(prec, sq * 3u32) - Float::with_val(prec, su * 2u32) + &y[0][k];
        out[0] = y[1][k].clone();
        out[1] = y[2][k].clone();
        out[2] = -Float::with_val(prec, inner * 2u32);
        out[3] = y[0][k].clone();
    }
}

/// Canonical PIV system for `H = (2p - q - 2t)pq - 2 a1 p - a2 q`:
/// `q' = 4pq - q^2 - 2tq - 2a1`, `p' = -2p^2 + 2pq + 2tp + a2`, with the
/// running integral of `H` as a third component.
pub(crate) struct PivHamiltonian {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl TaylorSystem for PivHamiltonian {
    fn dim(&self) -> usize {
        3
    }

    fn rhs_coeff(&self, k: usize, tc: &Float, y: &[Vec<Float>], aux: &mut Vec<Vec<Float>>, out: &mut [Float]) {
        let prec = tc.prec();
        let (q, p) = (&y[0], &y[1]);
        reset(aux, k, 1);
        aux[0].push(conv(p, q, k, prec));
        let m = &aux[0];
        let qq = conv(q, q, k, prec);
        let pp = conv(p, p, k, prec);
        let tq = times_t(tc, q, k);
        let tp = times_t(tc, p, k);
        let tm = times_t(tc, m, k);
        let mut dq = Float::with_val(prec, &m[k] * 4u32) - qq - Float::with_val(prec, tq * 2u32);
        let mut dp = Float::with_val(prec, &m[k] * 2u32) - Float::with_val(prec, pp * 2u32) + Float::with_val(prec, tp * 2u32);
        if k == 0 {
            dq -= 2.0 * self.alpha1;
            dp += self.alpha2;
        }
        let h = Float::with_val(prec, conv(p, m, k, prec) * 2u32)
            - conv(q, m, k, prec)
            - Float::with_val(prec, tm * 2u32)
            - Float::with_val(prec, &p[k] * (2.0 * self.alpha1))
            - Float::with_val(prec, &q[k] * self.alpha2);
        out[0] = dq;
        out[1] = dp;
        out[2] = h;
    }
}

/// `Q'' = 2Q^3 + sQ` as `(Q, Q')`, plus the running integral of
/// `Q'^2 - sQ^2 - Q^4` (the soft-edge resolvent when `Q` is Hastings-McLeod).
pub(crate) struct PainleveII;

impl TaylorSystem for PainleveII {
    fn dim(&self) -> usize {
        3
    }

    fn rhs_coeff(&self, k: usize, tc: &Float, y: &[Vec<Float>], aux: &mut Vec<Vec<Float>>, out: &mut [Float]) {
        let prec = tc.prec();
        reset(aux, k, 1);
        aux[0].push(conv(&y[0], &y[0], k, prec));
        let cube = conv(&aux[0], &y[0], k, prec);
        let sq = times_t(tc, &y[0], k);
        let sq2 = times_t(tc, &aux[0], k);
        let pp = conv(&y[1], &y[1], k, prec);
        let q4 = conv(&aux[0], &aux[0], k, prec);
        out[0] = y[1][k].clone();
        out[1] = Float::with_val(prec, cube * 2u32) + sq;
        out[2] = pp - sq2 - q4;
    }
}

/// Weights `w[d][j]` of the central stencil on `-m..=m` (unit spacing) for
/// the derivatives `d = 0..=3`, by Fornberg's recursion in MPFR.
pub(crate) fn central_weights(m: usize, prec: u32) -> Vec<Vec<Float>> {
    let npts = 2 * m + 1;
    let max_d = 3;
    let x: Vec<Float> = (0..npts).map(|j| Float::with_val(prec, j as i64 - m as i64)).collect();
    let zero = || Float::new(prec);
    let mut c = vec![vec![vec![zero(); npts]; npts]; max_d + 1];
    c[0][0][0] = Float::with_val(prec, 1);
    let mut c1 = Float::with_val(prec, 1);
    for n in 1..npts {
        let mut c2 = Float::with_val(prec, 1);
        for v in 0..n {
            let c3 = Float::with_val(prec, &x[n] - &x[v]);
            c2 *= &c3;
            for d in 0..=max_d.min(n) {
                let prev = c[d][n - 1][v].clone();
                let lower = if d > 0 { c[d - 1][n - 1][v].clone() } else { zero() };
                c[d][n][v] = (Float::with_val(prec, &x[n] * &prev) - Float::with_val(prec, lower * d as u32)) / &c3;
            }
        }
        for d in 0..=max_d.min(n) {
            let lower = if d > 0 { c[d - 1][n - 1][n - 1].clone() } else { zero() };
            let prev = c[d][n - 1][n - 1].clone();
            let num = Float::with_val(prec, lower * d as u32) - Float::with_val(prec, &x[n - 1] * &prev);
            c[d][n][n] = Float::with_val(prec, &c1 / &c2) * num;
        }
        c1 = c2;
    }
    (0..=max_d).map(|d| c[d][npts - 1].clone()).collect()
}

/// First three derivatives of `f` at `t0` from a 13-point central stencil,
/// with `f` evaluated at `prec` bits. The step is `2^{-prec/14}`, which keeps
/// both truncation and cancellation near `2^{-0.7 prec}`.
pub(crate) fn derivatives_123<F>(f: F, t0: f64, prec: u32) -> crate::error::Result<[Float; 3]>
where
    F: Fn(&Float) -> crate::error::Result<Float>,
{
    let m = 6;
    let w = central_weights(m, prec);
    let h = Float::with_val(prec, Float::i_exp(1, -((prec / 14) as i32)));
    let centre = Float::with_val(prec, t0);
    let mut vals = Vec::with_capacity(2 * m + 1);
    for j in 0..=2 * m {
        let x = Float::with_val(prec, &centre + Float::with_val(prec, &h * (j as i64 - m as i64)));
        vals.push(f(&x)?);
    }
    let mut out = [Float::new(prec), Float::new(prec), Float::new(prec)];
    let mut hp = Float::with_val(prec, 1);
    for (d, slot) in out.iter_mut().enumerate() {
        hp *= &h;
        let mut acc = Float::new(prec);
        for (wj, vj) in w[d + 1].iter().zip(&vals) {
            acc += Float::with_val(prec, wj * vj);
        }
        *slot = acc / &hp;
    }
    Ok(out)
}
