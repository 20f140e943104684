//! Formal asymptotic series for the sigma forms.
//!
//! A series is a finite sum of monomials `c_n t^{n h}` with `h` the exponent
//! step (1 or 1/2). The leading terms are supplied, the tail is generated by
//! substituting into the sigma form and cancelling the dominant residual
//! order one coefficient at a time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// End of the real line a series describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    PlusInfinity,
    MinusInfinity,
}

/// `sum_j polynomial_part[j] t^{j h} + sum_k tail_coefficients[k-1] t^{-k h}`,
/// `h = tail_exponent_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSeries {
    pub direction: Direction,
    pub polynomial_part: Vec<f64>,
    pub tail_exponent_step: f64,
    pub tail_coefficients: Vec<f64>,
}

/// Which sigma form a series is substituted into.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Form {
    /// `(s'')^2 - 4(t s' - s)^2 + 4 s'(s' + 2 a1)(s' - 2 a2)`.
    Piv { alpha1: f64, alpha2: f64 },
    /// `(u'')^2 + 4u'((u')^2 - t u' + u) - a^2`.
    Pii { a: f64 },
}

type Ser = BTreeMap<i32, f64>;

struct Algebra {
    /// Index shift of one power of `t` (1 / step).
    r: i32,
    step: f64,
    floor: i32,
}

impl Algebra {
    fn mul(&self, a: &Ser, b: &Ser) -> Ser {
        let mut out = Ser::new();
        for (&i, &x) in a {
            for (&j, &y) in b {
                if i + j >= self.floor {
                    *out.entry(i + j).or_insert(0.0) += x * y;
                }
            }
        }
        out
    }

    fn add(&self, a: &Ser, b: &Ser, cb: f64) -> Ser {
        let mut out = a.clone();
        for (&j, &y) in b {
            *out.entry(j).or_insert(0.0) += cb * y;
        }
        out
    }

    fn constant(&self, c: f64) -> Ser {
        Ser::from([(0, c)])
    }

    fn times_t(&self, a: &Ser) -> Ser {
        a.iter().map(|(&i, &x)| (i + self.r, x)).collect()
    }

    fn deriv(&self, a: &Ser) -> Ser {
        a.iter()
            .filter(|(&i, _)| i != 0)
            .map(|(&i, &x)| (i - self.r, x * i as f64 * self.step))
            .filter(|(i, _)| *i >= self.floor)
            .collect()
    }

    fn residual(&self, form: Form, s: &Ser) -> Ser {
        let d1 = self.deriv(s);
        let d2 = self.deriv(&d1);
        let sq2 = self.mul(&d2, &d2);
        match form {
            Form::Piv { alpha1, alpha2 } => {
                let g = self.add(&self.times_t(&d1), s, -1.0);
                let g2 = self.mul(&g, &g);
                let f1 = self.add(&d1, &self.constant(2.0 * alpha1), 1.0);
                let f2 = self.add(&d1, &self.constant(-2.0 * alpha2), 1.0);
                let prod = self.mul(&d1, &self.mul(&f1, &f2));
                self.add(&self.add(&sq2, &g2, -4.0), &prod, 4.0)
            }
            Form::Pii { a } => {
                let inner = self.add(&self.add(&self.mul(&d1, &d1), &self.times_t(&d1), -1.0), s, 1.0);
                let prod = self.mul(&d1, &inner);
                self.add(&self.add(&sq2, &prod, 4.0), &self.constant(-a * a), 1.0)
            }
        }
    }

    /// Exact expansion `F(s + c m) = F(s) + c L + c^2 Q + c^3 C` for a
    /// monomial `m = t^{idx h}`, returned as `[L, Q, C]`. Working with the
    /// partial derivatives of the form avoids differencing residuals whose
    /// deep orders are factorially large.
    fn expansion(&self, form: Form, s: &Ser, idx: i32) -> [Ser; 3] {
        let d1 = self.deriv(s);
        let d2 = self.deriv(&d1);
        let m0 = Ser::from([(idx, 1.0)]);
        let m1 = self.deriv(&m0);
        let m2 = self.deriv(&m1);
        let t = Ser::from([(self.r, 1.0)]);
        let scaled = |a: &Ser, k: f64| -> Ser { a.iter().map(|(&i, &x)| (i, k * x)).collect() };
        let sum = |parts: &[Ser]| parts.iter().fold(Ser::new(), |acc, p| self.add(&acc, p, 1.0));
        let m1sq = self.mul(&m1, &m1);
        let cubic = scaled(&self.mul(&m1sq, &m1), 4.0);
        match form {
            Form::Piv { alpha1, alpha2 } => {
                let g = self.add(&self.times_t(&d1), s, -1.0);
                let f1 = self.add(&d1, &self.constant(2.0 * alpha1), 1.0);
                let f2 = self.add(&d1, &self.constant(-2.0 * alpha2), 1.0);
                // dF/dh2 = 2h2, dF/dh1 = -8tg + 4(f1 f2 + h1 f2 + h1 f1), dF/dh = 8g.
                let fh1 = sum(&[
                    scaled(&self.mul(&t, &g), -8.0),
                    scaled(&self.mul(&f1, &f2), 4.0),
                    scaled(&self.mul(&d1, &f2), 4.0),
                    scaled(&self.mul(&d1, &f1), 4.0),
                ]);
                let lin = sum(&[
                    scaled(&self.mul(&d2, &m2), 2.0),
                    self.mul(&fh1, &m1),
                    scaled(&self.mul(&g, &m0), 8.0),
                ]);
                let gm = self.add(&self.times_t(&m1), &m0, -1.0);
                let w = sum(&[f1.clone(), f2.clone(), d1.clone()]);
                let quad = sum(&[
                    self.mul(&m2, &m2),
                    scaled(&self.mul(&gm, &gm), -4.0),
                    scaled(&self.mul(&w, &m1sq), 4.0),
                ]);
                [lin, quad, cubic]
            }
            Form::Pii { .. } => {
                // F = h2^2 + 4h1^3 - 4t h1^2 + 4h1 h - a^2.
                let h1sq = self.mul(&d1, &d1);
                let fh1 = sum(&[scaled(&h1sq, 12.0), scaled(&self.mul(&t, &d1), -8.0), scaled(s, 4.0)]);
                let lin = sum(&[
                    scaled(&self.mul(&d2, &m2), 2.0),
                    self.mul(&fh1, &m1),
                    scaled(&self.mul(&d1, &m0), 4.0),
                ]);
                let w = self.add(&scaled(&d1, 12.0), &t, -4.0);
                let quad = sum(&[self.mul(&m2, &m2), self.mul(&w, &m1sq), scaled(&self.mul(&m1, &m0), 4.0)]);
                [lin, quad, cubic]
            }
        }
    }
}

/// Root of `c0 + b c + q c^2 + k c^3` continuing the linear root `-c0 / b`.
fn continue_root(c0: f64, b: f64, q: f64, k: f64) -> f64 {
    let linear = -c0 / b;
    if k == 0.0 {
        if q.abs() <= 1e-14 * b.abs() {
            return linear;
        }
        // Stable pair of roots: w / q and c0 / w.
        let disc = (b * b - 4.0 * q * c0).max(0.0).sqrt();
        let w = -0.5 * (b + b.signum() * disc);
        let roots = [w / q, c0 / w];
        return if (roots[0] - linear).abs() < (roots[1] - linear).abs() { roots[0] } else { roots[1] };
    }
    let mut c = linear;
    for _ in 0..60 {
        let f = c0 + c * (b + c * (q + c * k));
        let df = b + c * (2.0 * q + 3.0 * c * k);
        let step = f / df;
        c -= step;
        if step.abs() <= 1e-16 * c.abs() {
            break;
        }
    }
    c
}

/// Fill in `terms` tail coefficients after the given leading part. `known`
/// holds the first tail coefficients when the form fixes them only up to a
/// choice of root (the `N a / t`-type terms); the rest are solved for.
pub(crate) fn solve_tail(
    form: Form,
    direction: Direction,
    polynomial_part: Vec<f64>,
    step: f64,
    known: &[f64],
    terms: usize,
) -> AsymptoticSeries {
    let r = (1.0 / step).round() as i32;
    let alg = Algebra { r, step, floor: -(terms as i32 + 4) * r - 40 };
    let mut s = Ser::new();
    for (j, &c) in polynomial_part.iter().enumerate() {
        if c != 0.0 {
            s.insert(j as i32, c);
        }
    }
    let mut tail = Vec::with_capacity(terms);
    for (k, &c) in known.iter().enumerate() {
        s.insert(-(k as i32 + 1), c);
        tail.push(c);
    }
    for k in known.len() + 1..=terms {
        let idx = -(k as i32);
        let r0 = alg.residual(form, &s);
        let [lin, quad, cubic] = alg.expansion(form, &s, idx);
        let at = |m: &Ser, i: i32| m.get(&i).copied().unwrap_or(0.0);
        // The highest order the new coefficient reaches fixes it.
        let c = match lin.iter().rev().find(|(_, v)| **v != 0.0) {
            None => 0.0,
            Some((&n, &b)) => continue_root(at(&r0, n), b, at(&quad, n), at(&cubic, n)),
        };
        if c != 0.0 {
            s.insert(idx, c);
        }
        tail.push(c);
    }
    AsymptoticSeries { direction, polynomial_part, tail_exponent_step: step, tail_coefficients: tail }
}

impl AsymptoticSeries {
    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = self.tail_exponent_step;
        self.polynomial_part
            .iter()
            .enumerate()
            .map(move |(j, &c)| (c, j as f64 * h))
            .chain(self.tail_coefficients.iter().enumerate().map(move |(k, &c)| (c, -((k + 1) as f64) * h)))
    }

    fn monomial(c: f64, e: f64, t: f64, m: usize) -> f64 {
        if c == 0.0 {
            return 0.0;
        }
        let mut coef = c;
        for j in 0..m {
            coef *= e - j as f64;
        }
        if coef == 0.0 {
            return 0.0;
        }
        let p = e - m as f64;
        if p.fract() == 0.0 {
            coef * t.powi(p as i32)
        } else {
            coef * t.powf(p)
        }
    }

    /// Value and first two derivatives of the series truncated after `tail_terms`.
    pub fn eval(&self, t: f64, tail_terms: usize) -> [f64; 3] {
        let keep = self.polynomial_part.len() + tail_terms.min(self.tail_coefficients.len());
        let mut out = [0.0; 3];
        for (c, e) in self.terms().take(keep) {
            for (m, slot) in out.iter_mut().enumerate() {
                *slot += Self::monomial(c, e, t, m);
            }
        }
        out
    }

    /// Optimal truncation at `t`: the number of tail terms summed (all terms
    /// before the smallest one) and the size of the first omitted term. The
    /// term sizes must decrease up to the cut.
    pub fn truncation(&self, t: f64) -> (usize, f64) {
        let sizes: Vec<f64> = self.terms().skip(self.polynomial_part.len()).map(|(c, e)| Self::monomial(c, e, t, 0).abs()).collect();
        let nonzero: Vec<(usize, f64)> = sizes.iter().copied().enumerate().filter(|(_, v)| *v > 0.0).collect();
        if nonzero.is_empty() {
            return (0, 0.0);
        }
        let mut cut = nonzero.len() - 1;
        for w in 0..nonzero.len() - 1 {
            if nonzero[w + 1].1 >= nonzero[w].1 {
                cut = w;
                break;
            }
        }
        // When the sizes never turn around, the last computed term stands in
        // for the error.
        nonzero[cut]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft_u(a: f64) -> AsymptoticSeries {
        solve_tail(Form::Pii { a }, Direction::MinusInfinity, vec![0.0, 0.0, 0.25], 1.0, &[], 12)
    }

    #[test]
    fn soft_edge_u_coefficients() {
        for a in [0.0, 0.5, 1.0, 2.0, 0.3] {
            let s = soft_u(a);
            let b = 4.0 * a * a;
            let c = &s.tail_coefficients;
            assert!((c[0] - (b - 1.0) / 8.0).abs() < 1e-12, "a={a}: {c:?}");
            assert!(c[1].abs() < 1e-12 && c[2].abs() < 1e-12);
            assert!((c[3] - (b - 1.0) * (b - 9.0) / 64.0).abs() < 1e-12);
        }
        assert!(soft_u(0.5).tail_coefficients.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn soft_edge_v_coefficients() {
        for a in [0.5, 1.0, 2.0] {
            let s = solve_tail(Form::Pii { a }, Direction::PlusInfinity, vec![0.0, -a], 0.5, &[], 10);
            let c = &s.tail_coefficients;
            assert!(c[0].abs() < 1e-12, "{c:?}");
            assert!((c[1] + a * a / 4.0).abs() < 1e-12, "{c:?}");
            assert!(c[2].abs() < 1e-12 && c[3].abs() < 1e-12);
            assert!((c[4] - a * (4.0 * a * a + 1.0) / 32.0).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn piv_series_satisfy_the_form() {
        for (n, a) in [(1.0, 0.0), (2.0, 1.0), (3.0, 2.5)] {
            let form = Form::Piv { alpha1: -a, alpha2: -n };
            let residual = |ser: &AsymptoticSeries, t: f64, terms: usize| {
                let [h, h1, h2] = ser.eval(t, terms);
                let th = t * h1 - h;
                (h2 * h2 - 4.0 * th * th + 4.0 * h1 * (h1 - 2.0 * a) * (h1 + 2.0 * n)).abs()
            };
            let mut last = (f64::INFINITY, f64::INFINITY);
            for terms in [4, 8, 12, 16] {
                let u = solve_tail(form, Direction::MinusInfinity, vec![0.0, -2.0 * n], 1.0, &[-n * (a + n)], terms);
                let v = solve_tail(form, Direction::PlusInfinity, vec![], 1.0, &[n * a], terms);
                let now = (residual(&u, -9.0, terms), residual(&v, 9.0, terms));
                assert!(now.0 < last.0 && now.1 <= last.1, "n={n} a={a} terms={terms}: {now:?}");
                last = now;
            }
            assert!(last.0 < 1e-4 && last.1 < 1e-10, "n={n} a={a}: {last:?}");
        }
    }

    #[test]
    fn truncation_of_terminating_series() {
        let s = soft_u(0.5);
        assert_eq!(s.truncation(-3.0).1, 0.0);
        let [v, d1, d2] = s.eval(-3.0, 12);
        assert_eq!([v, d1, d2], [2.25, -1.5, 0.5]);
    }
}
