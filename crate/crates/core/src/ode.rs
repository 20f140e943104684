//! ODE integrators.
//!
//! Two engines. [`dopri`] is a classical embedded Dormand-Prince 5(4) pair in
//! `f64`, used for the symmetric Painleve systems over short windows.
//! [`taylor`] is a variable-step Taylor series method in MPFR arithmetic for
//! right-hand sides that are polynomial in the state. The sigma-form routes
//! use it because their unwanted solution modes grow like `e^{t^2}` and only
//! extra working precision keeps them in check.

use rug::Float;

use crate::error::{Error, Result};

/// Result of a `dopri` run: accepted abscissae and states.
#[derive(Debug, Clone)]
pub struct DopriTrajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand-Prince 5(4) from `t0` to `t1` (either direction) with
/// mixed absolute/relative local tolerance `tol`. Every accepted step is
/// recorded. Step underflow is reported as a pole.
pub fn dopri<F>(f: F, t0: f64, y0: &[f64], t1: f64, tol: f64) -> Result<DopriTrajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut out = DopriTrajectory {
        t: vec![t0],
        y: vec![y.clone()],
    };
    if t0 == t1 {
        return Ok(out);
    }
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut h = dir * (1e-3f64).min((t1 - t0).abs());
    f(t, &y, &mut k[0]);
    let mut steps = 0usize;
    while dir * (t1 - t) > 0.0 {
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::Pole { last_good_t: t });
        }
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }
        let stage = |k: &Vec<Vec<f64>>, coeffs: &[(usize, f64)], tmp: &mut Vec<f64>| {
            for i in 0..n {
                let mut s = y[i];
                for &(j, a) in coeffs {
                    s += h * a * k[j][i];
                }
                tmp[i] = s;
            }
        };
        stage(&k, &[(0, A21)], &mut tmp);
        f(t + C2 * h, &tmp, &mut k[1]);
        stage(&k, &[(0, A31), (1, A32)], &mut tmp);
        f(t + C3 * h, &tmp, &mut k[2]);
        stage(&k, &[(0, A41), (1, A42), (2, A43)], &mut tmp);
        f(t + C4 * h, &tmp, &mut k[3]);
        stage(&k, &[(0, A51), (1, A52), (2, A53), (3, A54)], &mut tmp);
        f(t + C5 * h, &tmp, &mut k[4]);
        stage(&k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &mut tmp);
        f(t + h, &tmp, &mut k[5]);
        let mut ynew = vec![0.0; n];
        for i in 0..n {
            ynew[i] =
                y[i] + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        f(t + h, &ynew, &mut k[6]);
        let mut err = 0.0f64;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = tol * (1.0 + y[i].abs().max(ynew[i].abs()));
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.25;
            if h.abs() < 1e-13 * (1.0 + t.abs()) {
                return Err(Error::Pole { last_good_t: t });
            }
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = ynew;
            k.swap(0, 6);
            out.t.push(t);
            out.y.push(y.clone());
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h.abs() < 1e-13 * (1.0 + t.abs()) {
            return Err(Error::Pole { last_good_t: t });
        }
    }
    Ok(out)
}

/// A polynomial vector field `y' = f(t, y)` that can produce Taylor
/// coefficients of `f` order by order.
pub trait TaylorSystem {
    fn dim(&self) -> usize;

    /// Write the `k`-th Taylor coefficient of `f` about `tc` into `out`,
    /// given the state coefficients `y[i][0..=k]`. `aux` holds per-step
    /// scratch jets; the system may push and extend them and they are cleared
    /// at the start of every step.
    fn rhs_coeff(&self, k: usize, tc: &Float, y: &[Vec<Float>], aux: &mut Vec<Vec<Float>>, out: &mut [Float]);
}

/// One accepted Taylor step: the expansion about `tc` valid on `[tc, tc+h]`.
#[derive(Debug, Clone)]
pub struct TaylorStep {
    pub tc: f64,
    pub h: f64,
    pub coeffs: Vec<Vec<Float>>,
}

#[derive(Debug, Clone)]
pub struct TaylorTrajectory {
    pub prec: u32,
    pub steps: Vec<TaylorStep>,
    pub t_end: f64,
    pub y_end: Vec<Float>,
}

#[derive(Debug, Clone, Copy)]
pub struct TaylorSettings {
    pub prec: u32,
    pub order: usize,
    /// log2 of the local relative tolerance.
    pub tol_log2: i32,
    pub h_max: f64,
}

impl TaylorSettings {
    pub fn for_bits(prec: u32) -> Self {
        let tol_log2 = -(prec as i32) + 8;
        let digits = (-tol_log2) as f64 * std::f64::consts::LN_2;
        TaylorSettings {
            prec,
            order: (digits / 2.0).ceil() as usize + 2,
            tol_log2,
            h_max: 0.5,
        }
    }
}

fn max_abs(v: &[Float]) -> f64 {
    v.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

/// Compute Taylor coefficients of the solution through `y0` at `tc` up to
/// `order`.
pub fn taylor_coeffs<S: TaylorSystem>(sys: &S, tc: &Float, y0: &[Float], order: usize) -> Vec<Vec<Float>> {
    let n = sys.dim();
    let prec = tc.prec();
    let mut y: Vec<Vec<Float>> = y0.iter().map(|v| vec![Float::with_val(prec, v)]).collect();
    let mut aux = Vec::new();
    let mut out = vec![Float::new(prec); n];
    for k in 0..order {
        sys.rhs_coeff(k, tc, &y, &mut aux, &mut out);
        for i in 0..n {
            y[i].push(Float::with_val(prec, &out[i] / (k as u32 + 1)));
        }
    }
    y
}

/// Integrate from `t0` to `t1`, keeping every step for dense evaluation.
pub fn taylor<S: TaylorSystem>(
    sys: &S,
    t0: f64,
    y0: &[Float],
    t1: f64,
    settings: TaylorSettings,
) -> Result<TaylorTrajectory> {
    let prec = settings.prec;
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y: Vec<Float> = y0.iter().map(|v| Float::with_val(prec, v)).collect();
    let mut steps = Vec::new();
    let tol = 2f64.powi(settings.tol_log2);
    let order = settings.order;
    while dir * (t1 - t) > 0.0 {
        let tc = Float::with_val(prec, t);
        let c = taylor_coeffs(sys, &tc, &y, order);
        let scale = max_abs(&y).max(1.0);
        let mut h = settings.h_max;
        for j in [order - 1, order] {
            let cj: Vec<Float> = c.iter().map(|ci| ci[j].clone()).collect();
            let m = max_abs(&cj);
            if m > 0.0 && m.is_finite() {
                h = h.min((tol * scale / m).powf(1.0 / j as f64));
            }
        }
        h *= 0.7;
        if !h.is_finite() || h < 1e-10 * (1.0 + t.abs()) {
            return Err(Error::Pole { last_good_t: t });
        }
        if h > (t1 - t).abs() {
            h = (t1 - t).abs();
        }
        let mut t_new = t + dir * h;
        if (t1 - t_new).abs() < 1e-15 * (1.0 + t1.abs()) || dir * (t_new - t1) > 0.0 {
            t_new = t1;
        }
        // Evaluate at the exactly representable new abscissa so that the
        // next expansion point and the propagated state agree to the bit.
        let hf = Float::with_val(prec, t_new) - Float::with_val(prec, t);
        let hs = t_new - t;
        let ynew: Vec<Float> = c.iter().map(|ci| horner(ci, &hf)).collect();
        if ynew.iter().any(|v| !v.is_finite()) {
            return Err(Error::Pole { last_good_t: t });
        }
        steps.push(TaylorStep {
            tc: t,
            h: hs,
            coeffs: c,
        });
        t = t_new;
        y = ynew;
    }
    Ok(TaylorTrajectory {
        prec,
        steps,
        t_end: t,
        y_end: y,
    })
}

fn horner(c: &[Float], x: &Float) -> Float {
    let prec = x.prec();
    let mut acc = Float::new(prec);
    for ck in c.iter().rev() {
        acc *= x;
        acc += ck;
    }
    acc
}

/// `d^m/dtau^m` of the polynomial with coefficients `c` at `x`.
fn horner_deriv(c: &[Float], x: &Float, m: usize) -> Float {
    let prec = x.prec();
    let mut acc = Float::new(prec);
    for k in (m..c.len()).rev() {
        let mut fall: u64 = 1;
        for j in 0..m {
            fall *= (k - j) as u64;
        }
        acc *= x;
        acc += Float::with_val(prec, &c[k] * fall);
    }
    acc
}

impl TaylorTrajectory {
    fn locate(&self, t: f64) -> Option<&TaylorStep> {
        let slack = 1e-12;
        self.steps.iter().find(|s| {
            let (a, b) = if s.h >= 0.0 { (s.tc, s.tc + s.h) } else { (s.tc + s.h, s.tc) };
            t >= a - slack * (1.0 + a.abs()) && t <= b + slack * (1.0 + b.abs())
        })
    }

    pub fn covers(&self, t: f64) -> bool {
        self.locate(t).is_some()
    }

    /// Component `i` of the solution (or its `m`-th derivative) at `t`.
    pub fn eval(&self, i: usize, t: f64, m: usize) -> Option<Float> {
        let s = self.locate(t)?;
        let x = Float::with_val(self.prec, t) - s.tc;
        Some(horner_deriv(&s.coeffs[i], &x, m))
    }

    /// As [`eval`](Self::eval) at an abscissa carried in MPFR.
    pub fn eval_mp(&self, i: usize, t: &Float, m: usize) -> Option<Float> {
        let s = self.locate(t.to_f64())?;
        let x = Float::with_val(self.prec, t - s.tc);
        Some(horner_deriv(&s.coeffs[i], &x, m))
    }

    pub fn eval_f64(&self, i: usize, t: f64, m: usize) -> Option<f64> {
        self.eval(i, t, m).map(|v| v.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp;

    #[test]
    fn dopri_exponential() {
        let tr = dopri(|_t, y, d| d[0] = -y[0], 0.0, &[1.0], 3.0, 1e-10).unwrap();
        let y = tr.y.last().unwrap()[0];
        assert!((y - (-3.0f64).exp()).abs() < 1e-9);
        let back = dopri(|_t, y, d| d[0] = -y[0], 3.0, &[y], 0.0, 1e-10).unwrap();
        assert!((back.y.last().unwrap()[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dopri_reports_pole() {
        // y' = y^2, y(0) = 1 blows up at t = 1.
        let r = dopri(|_t, y, d| d[0] = y[0] * y[0], 0.0, &[1.0], 2.0, 1e-10);
        match r {
            Err(Error::Pole { last_good_t }) => assert!((last_good_t - 1.0).abs() < 1e-2),
            other => panic!("expected pole, got {other:?}"),
        }
    }

    struct Harmonic;
    impl TaylorSystem for Harmonic {
        fn dim(&self) -> usize {
            2
        }
        fn rhs_coeff(&self, k: usize, _tc: &Float, y: &[Vec<Float>], _aux: &mut Vec<Vec<Float>>, out: &mut [Float]) {
            out[0] = y[1][k].clone();
            out[1] = -y[0][k].clone();
        }
    }

    /// y' = t y, solution e^{t^2/2}: exercises the time jet.
    struct Gauss;
    impl TaylorSystem for Gauss {
        fn dim(&self) -> usize {
            1
        }
        fn rhs_coeff(&self, k: usize, tc: &Float, y: &[Vec<Float>], _aux: &mut Vec<Vec<Float>>, out: &mut [Float]) {
            let mut v = Float::with_val(tc.prec(), tc * &y[0][k]);
            if k >= 1 {
                v += &y[0][k - 1];
            }
            out[0] = v;
        }
    }

    #[test]
    fn taylor_high_precision_sine() {
        let prec = 160;
        let s = TaylorSettings::for_bits(prec);
        let tr = taylor(&Harmonic, 0.0, &[mp::f(prec, 0.0), mp::f(prec, 1.0)], 10.0, s).unwrap();
        let exact = Float::with_val(prec, 10).sin();
        let err = Float::with_val(prec, &tr.y_end[0] - &exact).abs().to_f64();
        assert!(err < 1e-40, "err={err}");
        let mid = tr.eval(0, 3.3, 1).unwrap();
        let d = Float::with_val(prec, &mid - Float::with_val(prec, 3.3f64).cos()).abs();
        assert!(d.to_f64() < 1e-40);
    }

    #[test]
    fn taylor_time_dependent_backward() {
        let prec = 128;
        let s = TaylorSettings::for_bits(prec);
        let y0 = Float::with_val(prec, 2.0f64).exp(); // e^{4/2}
        let tr = taylor(&Gauss, 2.0, &[y0], -1.0, s).unwrap();
        let exact = Float::with_val(prec, 0.5f64).exp();
        let err = Float::with_val(prec, &tr.y_end[0] - &exact).abs().to_f64();
        assert!(err < 1e-30, "err={err}");
    }
}
