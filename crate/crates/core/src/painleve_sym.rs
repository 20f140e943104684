//! Symmetric forms of PIV and PII.
//!
//! The PIV system is carried in the Noumi-Yamada variables `f0, f1, f2` with
//! `f0 + f1 + f2 = 2kt`, where `k = alpha0 + alpha1 + alpha2` (normally 1; the
//! sign-reversing map `omega` sends it to -1). The PII system is carried in
//! canonical `(q, p)` with `f1 = p`, `f0 = 2q^2 + t - p`.
//!
//! Group words are applied leftmost generator first, both to the parameters
//! and to the fields, so `[Pi, S2, S1]` is `T1`. Every generator maps a
//! solution of the system at some parameters to a solution at the image
//! parameters, which is what the tests check numerically.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ode::dopri;
use crate::special_fn::airy_derivs;
use crate::types::{GridFunction, PrecisionConfig};

const PARAM_TOL: f64 = 1e-12;
const CONSTRAINT_TOL: f64 = 1e-10;

/// Which symmetric system a parameter set, state or word belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    IV,
    II,
}

/// Simple roots of the `A_2^(1)` system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PivParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl PivParams {
    pub fn new(alpha0: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        let p = PivParams { alpha0, alpha1, alpha2 };
        p.validate()?;
        Ok(p)
    }

    /// The roots sum to `+1`, or to `-1` after an odd number of `omega` maps.
    pub fn validate(&self) -> Result<()> {
        let k = self.level();
        if !(self.alpha0.is_finite() && self.alpha1.is_finite() && self.alpha2.is_finite()) {
            return domain("PIV parameters must be finite");
        }
        if (k.abs() - 1.0).abs() > PARAM_TOL * (1.0 + self.scale()) {
            return domain(format!("PIV roots sum to {k}, expected 1"));
        }
        Ok(())
    }

    /// `alpha0 + alpha1 + alpha2`.
    pub fn level(&self) -> f64 {
        self.alpha0 + self.alpha1 + self.alpha2
    }

    fn scale(&self) -> f64 {
        self.alpha0.abs().max(self.alpha1.abs()).max(self.alpha2.abs())
    }

    fn get(&self, j: usize) -> f64 {
        [self.alpha0, self.alpha1, self.alpha2][j % 3]
    }

    fn from_array(a: [f64; 3]) -> Self {
        PivParams { alpha0: a[0], alpha1: a[1], alpha2: a[2] }
    }

    /// Constants of the scalar equation `y'' = ... + 2(t^2 - alpha) y + beta / y`.
    pub fn classical(&self) -> (f64, f64) {
        (self.alpha0 - self.alpha2, -2.0 * self.alpha1 * self.alpha1)
    }

    pub fn approx_eq(&self, other: &PivParams, tol: f64) -> bool {
        (self.alpha0 - other.alpha0).abs() <= tol
            && (self.alpha1 - other.alpha1).abs() <= tol
            && (self.alpha2 - other.alpha2).abs() <= tol
    }
}

/// Simple roots of the `A_1^(1)` system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiiParams {
    pub alpha0: f64,
    pub alpha1: f64,
}

impl PiiParams {
    pub fn new(alpha0: f64, alpha1: f64) -> Result<Self> {
        let p = PiiParams { alpha0, alpha1 };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for `y'' = 2y^3 + ty + alpha`.
    pub fn from_alpha(alpha: f64) -> Self {
        PiiParams { alpha0: 0.5 - alpha, alpha1: alpha + 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0.is_finite() && self.alpha1.is_finite()) {
            return domain("PII parameters must be finite");
        }
        let k = self.alpha0 + self.alpha1;
        if (k - 1.0).abs() > PARAM_TOL * (1.0 + self.alpha0.abs().max(self.alpha1.abs())) {
            return domain(format!("PII roots sum to {k}, expected 1"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha1 - 0.5
    }

    pub fn approx_eq(&self, other: &PiiParams, tol: f64) -> bool {
        (self.alpha0 - other.alpha0).abs() <= tol && (self.alpha1 - other.alpha1).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Params {
    IV(PivParams),
    II(PiiParams),
}

impl Params {
    pub fn kind(&self) -> SystemKind {
        match self {
            Params::IV(_) => SystemKind::IV,
            Params::II(_) => SystemKind::II,
        }
    }
}

/// A point of the PIV flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricStateIV {
    pub t: f64,
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
}

impl SymmetricStateIV {
    /// Builds the state from `f1, f2`, fixing `f0` by the constraint at level 1.
    pub fn from_f1_f2(t: f64, f1: f64, f2: f64) -> Self {
        SymmetricStateIV { t, f0: 2.0 * t - f1 - f2, f1, f2 }
    }

    /// Canonical pair `q = -f1`, `p = f2 / 2`.
    pub fn from_qp(t: f64, q: f64, p: f64) -> Self {
        Self::from_f1_f2(t, -q, 2.0 * p)
    }

    pub fn q(&self) -> f64 {
        -self.f1
    }

    pub fn p(&self) -> f64 {
        0.5 * self.f2
    }

    fn get(&self, j: usize) -> f64 {
        [self.f0, self.f1, self.f2][j % 3]
    }

    /// `f0 + f1 + f2 - 2 k t` for level `k`.
    pub fn constraint_defect(&self, level: f64) -> f64 {
        self.f0 + self.f1 + self.f2 - 2.0 * level * self.t
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.constraint_defect(1.0);
        if d.abs() > CONSTRAINT_TOL * (1.0 + self.t.abs()) {
            return domain(format!("PIV state violates f0 + f1 + f2 = 2t by {d:e}"));
        }
        Ok(())
    }
}

/// A point of the PII flow in canonical variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricStateII {
    pub t: f64,
    pub q: f64,
    pub p: f64,
}

impl SymmetricStateII {
    pub fn f1(&self) -> f64 {
        self.p
    }

    pub fn f0(&self) -> f64 {
        2.0 * self.q * self.q + self.t - self.p
    }

    fn from_fields(t: f64, f0: f64, f1: f64, q: f64) -> Result<Self> {
        let st = SymmetricStateII { t, q, p: f1 };
        let d = f0 - st.f0();
        if d.abs() > CONSTRAINT_TOL * (1.0 + f0.abs() + f1.abs()) {
            return domain(format!("PII fields violate f0 + f1 = 2q^2 + t by {d:e}"));
        }
        Ok(st)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SymmetricState {
    IV(SymmetricStateIV),
    II(SymmetricStateII),
}

impl SymmetricState {
    pub fn t(&self) -> f64 {
        match self {
            SymmetricState::IV(s) => s.t,
            SymmetricState::II(s) => s.t,
        }
    }

    pub fn q(&self) -> f64 {
        match self {
            SymmetricState::IV(s) => s.q(),
            SymmetricState::II(s) => s.q,
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            SymmetricState::IV(s) => s.p(),
            SymmetricState::II(s) => s.p,
        }
    }
}

/// Generators of the extended affine Weyl groups and the shift operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    S0,
    S1,
    S2,
    Pi,
    PiInv,
    T1,
    T2,
    T3,
    T1Inv,
    T2Inv,
    T3Inv,
    Omega,
}

impl Generator {
    pub const ALL: [Generator; 12] = [
        Generator::S0,
        Generator::S1,
        Generator::S2,
        Generator::Pi,
        Generator::PiInv,
        Generator::T1,
        Generator::T2,
        Generator::T3,
        Generator::T1Inv,
        Generator::T2Inv,
        Generator::T3Inv,
        Generator::Omega,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Generator::S0 => "s0",
            Generator::S1 => "s1",
            Generator::S2 => "s2",
            Generator::Pi => "pi",
            Generator::PiInv => "pi_inv",
            Generator::T1 => "T1",
            Generator::T2 => "T2",
            Generator::T3 => "T3",
            Generator::T1Inv => "T1_inv",
            Generator::T2Inv => "T2_inv",
            Generator::T3Inv => "T3_inv",
            Generator::Omega => "omega",
        }
    }

    pub fn valid_for(&self, kind: SystemKind) -> bool {
        match kind {
            SystemKind::IV => true,
            SystemKind::II => !matches!(
                self,
                Generator::S2 | Generator::T3 | Generator::T3Inv | Generator::Omega
            ),
        }
    }

    /// Expansion into the primitive letters `s_j`, `pi`, `pi^{-1}`, `omega`.
    fn expand(&self, kind: SystemKind) -> Vec<Generator> {
        use Generator::*;
        match (kind, self) {
            (SystemKind::IV, T1) => vec![Pi, S2, S1],
            (SystemKind::IV, T2) => vec![S1, Pi, S2],
            (SystemKind::IV, T3) => vec![S2, S1, Pi],
            (SystemKind::IV, T1Inv) => vec![S1, S2, PiInv],
            (SystemKind::IV, T2Inv) => vec![S2, PiInv, S1],
            (SystemKind::IV, T3Inv) => vec![PiInv, S1, S2],
            (SystemKind::II, T1) | (SystemKind::II, T2Inv) => vec![Pi, S1],
            (SystemKind::II, T2) | (SystemKind::II, T1Inv) => vec![S1, Pi],
            (SystemKind::II, PiInv) => vec![Pi],
            (_, g) => vec![*g],
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .iter()
            .copied()
            .find(|g| g.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Domain(format!("unknown generator '{s}'")))
    }
}

/// A word in the generators of one system, applied leftmost first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupElement {
    pub system: SystemKind,
    pub word: Vec<Generator>,
}

impl GroupElement {
    pub fn new(system: SystemKind, word: Vec<Generator>) -> Result<Self> {
        if let Some(g) = word.iter().find(|g| !g.valid_for(system)) {
            return domain(format!("generator {g} is not defined for the PII system"));
        }
        Ok(GroupElement { system, word })
    }

    pub fn identity(system: SystemKind) -> Self {
        GroupElement { system, word: Vec::new() }
    }

    /// Parses words like `"T1 omega s0"` or `"pi*s1*s2"`.
    pub fn parse(system: SystemKind, text: &str) -> Result<Self> {
        let word = text
            .split(|c: char| c.is_whitespace() || c == '*' || c == ',' || c == '.')
            .filter(|s| !s.is_empty())
            .map(Generator::from_str)
            .collect::<Result<Vec<_>>>()?;
        Self::new(system, word)
    }

    /// The word followed by `other`.
    pub fn then(&self, other: &GroupElement) -> Result<Self> {
        if self.system != other.system {
            return domain("cannot compose words of different systems");
        }
        let mut word = self.word.clone();
        word.extend_from_slice(&other.word);
        Ok(GroupElement { system: self.system, word })
    }

    fn letters(&self) -> Vec<Generator> {
        self.word.iter().flat_map(|g| g.expand(self.system)).collect()
    }
}

fn letter_on_piv(g: Generator, a: &PivParams) -> PivParams {
    let v = [a.alpha0, a.alpha1, a.alpha2];
    let reflect = |i: usize| {
        let mut out = [0.0; 3];
        for (j, o) in out.iter_mut().enumerate() {
            *o = if j == i { -v[i] } else { v[j] + v[i] };
        }
        PivParams::from_array(out)
    };
    match g {
        Generator::S0 => reflect(0),
        Generator::S1 => reflect(1),
        Generator::S2 => reflect(2),
        Generator::Pi => PivParams::from_array([v[1], v[2], v[0]]),
        Generator::PiInv => PivParams::from_array([v[2], v[0], v[1]]),
        Generator::Omega => PivParams::from_array([-v[0], -v[2], -v[1]]),
        _ => unreachable!("composite generators are expanded"),
    }
}

fn letter_on_pii(g: Generator, a: &PiiParams) -> PiiParams {
    match g {
        Generator::S0 => PiiParams { alpha0: -a.alpha0, alpha1: a.alpha1 + 2.0 * a.alpha0 },
        Generator::S1 => PiiParams { alpha0: a.alpha0 + 2.0 * a.alpha1, alpha1: -a.alpha1 },
        Generator::Pi => PiiParams { alpha0: a.alpha1, alpha1: a.alpha0 },
        _ => unreachable!("composite generators are expanded"),
    }
}

fn check_system(g: &GroupElement, kind: SystemKind) -> Result<()> {
    if g.system != kind {
        return domain(format!("word for {:?} applied to {:?} data", g.system, kind));
    }
    Ok(())
}

/// Image of the parameters under `g`.
pub fn act_on_params(g: &GroupElement, p: &Params) -> Result<Params> {
    check_system(g, p.kind())?;
    let letters = g.letters();
    Ok(match p {
        Params::IV(a) => Params::IV(letters.iter().fold(*a, |acc, &l| letter_on_piv(l, &acc))),
        Params::II(a) => Params::II(letters.iter().fold(*a, |acc, &l| letter_on_pii(l, &acc))),
    })
}

fn divisor(value: f64, g: Generator) -> Result<f64> {
    if value == 0.0 || !value.is_finite() {
        return Err(Error::SingularTransformation { generator: g.name().to_string() });
    }
    Ok(value)
}

fn letter_on_iv(
    g: Generator,
    st: &SymmetricStateIV,
    a: &PivParams,
) -> Result<(SymmetricStateIV, PivParams)> {
    let f = [st.f0, st.f1, st.f2];
    let new = |v: [f64; 3]| SymmetricStateIV { t: st.t, f0: v[0], f1: v[1], f2: v[2] };
    let out = match g {
        Generator::S0 | Generator::S1 | Generator::S2 => {
            let i = match g {
                Generator::S0 => 0,
                Generator::S1 => 1,
                _ => 2,
            };
            let c = 2.0 * a.get(i) / divisor(st.get(i), g)?;
            // Orientation matrix: +1 on the successor, -1 on the predecessor.
            let mut v = f;
            v[(i + 1) % 3] += c;
            v[(i + 2) % 3] -= c;
            new(v)
        }
        Generator::Pi => new([f[1], f[2], f[0]]),
        Generator::PiInv => new([f[2], f[0], f[1]]),
        Generator::Omega => new([-f[0], -f[2], -f[1]]),
        _ => unreachable!("composite generators are expanded"),
    };
    Ok((out, letter_on_piv(g, a)))
}

fn letter_on_ii(
    g: Generator,
    st: &SymmetricStateII,
    a: &PiiParams,
) -> Result<(SymmetricStateII, PiiParams)> {
    let (f0, f1, q) = (st.f0(), st.f1(), st.q);
    let (g0, g1, gq) = match g {
        Generator::S0 => {
            let d = divisor(f0, g)?;
            let r = a.alpha0 / d;
            (f0, f1 - 4.0 * q * r + 2.0 * r * r, q - r)
        }
        Generator::S1 => {
            let d = divisor(f1, g)?;
            let r = a.alpha1 / d;
            (f0 + 4.0 * q * r + 2.0 * r * r, f1, q + r)
        }
        Generator::Pi => (f1, f0, -q),
        _ => unreachable!("composite generators are expanded"),
    };
    Ok((SymmetricStateII::from_fields(st.t, g0, g1, gq)?, letter_on_pii(g, a)))
}

/// Image of a state and its parameters under `g`.
pub fn act_on_state(
    g: &GroupElement,
    st: &SymmetricState,
    p: &Params,
) -> Result<(SymmetricState, Params)> {
    check_system(g, p.kind())?;
    match (st, p) {
        (SymmetricState::IV(s), Params::IV(a)) => {
            let (mut s, mut a) = (*s, *a);
            for l in g.letters() {
                (s, a) = letter_on_iv(l, &s, &a)?;
            }
            Ok((SymmetricState::IV(s), Params::IV(a)))
        }
        (SymmetricState::II(s), Params::II(a)) => {
            let (mut s, mut a) = (*s, *a);
            for l in g.letters() {
                (s, a) = letter_on_ii(l, &s, &a)?;
            }
            Ok((SymmetricState::II(s), Params::II(a)))
        }
        _ => domain("state and parameters belong to different systems"),
    }
}

/// `H = f0 f1 f2 / 2 + alpha2 f1 - alpha1 f2`.
pub fn hamiltonian_iv(st: &SymmetricStateIV, a: &PivParams) -> f64 {
    0.5 * st.f0 * st.f1 * st.f2 + a.alpha2 * st.f1 - a.alpha1 * st.f2
}

/// The same Hamiltonian in canonical form `(2p - q - 2t) p q - 2 alpha1 p - alpha2 q`.
pub fn hamiltonian_iv_qp(t: f64, q: f64, p: f64, a: &PivParams) -> f64 {
    (2.0 * p - q - 2.0 * t) * p * q - 2.0 * a.alpha1 * p - a.alpha2 * q
}

/// `H = -f0 f1 / 2 - alpha1 q`.
pub fn hamiltonian_ii(st: &SymmetricStateII, a: &PiiParams) -> f64 {
    -0.5 * st.f0() * st.f1() - a.alpha1 * st.q
}

pub fn hamiltonian(st: &SymmetricState, p: &Params) -> Result<f64> {
    match (st, p) {
        (SymmetricState::IV(s), Params::IV(a)) => Ok(hamiltonian_iv(s, a)),
        (SymmetricState::II(s), Params::II(a)) => Ok(hamiltonian_ii(s, a)),
        _ => domain("state and parameters belong to different systems"),
    }
}

/// `(f0', f1', f2')` of the PIV system.
pub fn vector_field_iv(f: [f64; 3], a: &PivParams) -> [f64; 3] {
    [
        f[0] * (f[1] - f[2]) + 2.0 * a.alpha0,
        f[1] * (f[2] - f[0]) + 2.0 * a.alpha1,
        f[2] * (f[0] - f[1]) + 2.0 * a.alpha2,
    ]
}

/// `(q', p')` of the PII Hamiltonian system.
pub fn vector_field_ii(t: f64, q: f64, p: f64, a: &PiiParams) -> [f64; 2] {
    [p - q * q - 0.5 * t, 2.0 * q * p + a.alpha1]
}

/// The momentum `p` recovered from `q` and `q'` along a PIV solution.
pub fn momentum_from_q(t: f64, q: f64, dq: f64, a: &PivParams) -> Result<f64> {
    if q == 0.0 {
        return domain("momentum reconstruction needs q != 0");
    }
    Ok((dq + q * q + 2.0 * t * q + 2.0 * a.alpha1) / (4.0 * q))
}

/// Sampled solution of a symmetric system.
#[derive(Debug, Clone)]
pub struct SystemTrajectory {
    pub params: Params,
    pub states: Vec<SymmetricState>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `H` with `H'`, `H''` from the equations of motion and the running integral.
    pub hamiltonian: GridFunction,
    /// Largest constraint defect seen at the sample points.
    pub max_constraint_drift: f64,
}

impl SystemTrajectory {
    pub fn grid(&self) -> &[f64] {
        &self.hamiltonian.grid
    }
}

fn hermite_integral(grid: &[f64], v: &[f64], d: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        let h = grid[i] - grid[i - 1];
        out[i] = out[i - 1] + 0.5 * h * (v[i - 1] + v[i]) + h * h / 12.0 * (d[i - 1] - d[i]);
    }
    out
}

fn check_grid(t0: f64, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return domain("empty sample grid");
    }
    if (grid[0] - t0).abs() > 1e-14 * (1.0 + t0.abs()) {
        return domain("sample grid must start at the initial time");
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return domain("sample grid must be finite");
    }
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if grid.len() > 1 && !(up || down) {
        return domain("sample grid must be strictly monotone");
    }
    Ok(())
}

/// Integrates the system from `st0` through the sample points `grid`
/// (`grid[0] == st0.t`, monotone in either direction) with local tolerance `tol`.
pub fn integrate_system(
    params: &Params,
    st0: &SymmetricState,
    grid: &[f64],
    tol: f64,
) -> Result<SystemTrajectory> {
    check_grid(st0.t(), grid)?;
    match (params, st0) {
        (Params::IV(a), SymmetricState::IV(s)) => integrate_iv(a, s, grid, tol),
        (Params::II(a), SymmetricState::II(s)) => integrate_ii(a, s, grid, tol),
        _ => domain("state and parameters belong to different systems"),
    }
}

fn march<F>(f: F, y0: &[f64], grid: &[f64], tol: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64], &mut [f64]) + Copy,
{
    let mut out = vec![y0.to_vec()];
    for w in grid.windows(2) {
        let run = dopri(f, w[0], out.last().unwrap(), w[1], tol)?;
        out.push(run.y.last().cloned().unwrap());
    }
    Ok(out)
}

fn integrate_iv(
    a: &PivParams,
    s: &SymmetricStateIV,
    grid: &[f64],
    tol: f64,
) -> Result<SystemTrajectory> {
    a.validate()?;
    let level = a.level();
    let d0 = s.constraint_defect(level);
    if d0.abs() > CONSTRAINT_TOL * (1.0 + s.t.abs()) {
        return domain(format!("initial PIV state violates the constraint by {d0:e}"));
    }
    let a = *a;
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy.copy_from_slice(&vector_field_iv([y[0], y[1], y[2]], &a));
    };
    let ys = march(rhs, &[s.f0, s.f1, s.f2], grid, tol)?;
    let n = grid.len();
    let (mut states, mut q, mut p) = (Vec::with_capacity(n), vec![0.0; n], vec![0.0; n]);
    let (mut h, mut h1, mut h2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut drift: f64 = 0.0;
    for (i, (&t, y)) in grid.iter().zip(&ys).enumerate() {
        let st = SymmetricStateIV { t, f0: y[0], f1: y[1], f2: y[2] };
        let df = vector_field_iv([y[0], y[1], y[2]], &a);
        drift = drift.max(st.constraint_defect(level).abs());
        q[i] = st.q();
        p[i] = st.p();
        h[i] = hamiltonian_iv(&st, &a);
        h1[i] = st.f1 * st.f2;
        h2[i] = df[1] * st.f2 + st.f1 * df[2];
        states.push(SymmetricState::IV(st));
    }
    let integral = hermite_integral(grid, &h, &h1);
    Ok(SystemTrajectory {
        params: Params::IV(a),
        states,
        q,
        p,
        hamiltonian: GridFunction { grid: grid.to_vec(), value: h, d1: h1, d2: h2, integral },
        max_constraint_drift: drift,
    })
}

fn integrate_ii(
    a: &PiiParams,
    s: &SymmetricStateII,
    grid: &[f64],
    tol: f64,
) -> Result<SystemTrajectory> {
    a.validate()?;
    let a = *a;
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        dy.copy_from_slice(&vector_field_ii(t, y[0], y[1], &a));
    };
    let ys = march(rhs, &[s.q, s.p], grid, tol)?;
    let n = grid.len();
    let (mut states, mut q, mut p) = (Vec::with_capacity(n), vec![0.0; n], vec![0.0; n]);
    let (mut h, mut h1, mut h2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (i, (&t, y)) in grid.iter().zip(&ys).enumerate() {
        let st = SymmetricStateII { t, q: y[0], p: y[1] };
        q[i] = st.q;
        p[i] = st.p;
        h[i] = hamiltonian_ii(&st, &a);
        h1[i] = -0.5 * st.p;
        h2[i] = -0.5 * (2.0 * st.q * st.p + a.alpha1);
        states.push(SymmetricState::II(st));
    }
    let integral = hermite_integral(grid, &h, &h1);
    Ok(SystemTrajectory {
        params: Params::II(a),
        states,
        q,
        p,
        hamiltonian: GridFunction { grid: grid.to_vec(), value: h, d1: h1, d2: h2, integral },
        // The PII constraint is built into the (q, p) parametrisation.
        max_constraint_drift: 0.0,
    })
}

/// Left-hand side of the sigma form; zero on exact solutions.
pub fn sigma_residual(h: f64, h1: f64, h2: f64, t: f64, p: &Params) -> f64 {
    match p {
        Params::IV(a) => {
            let th = t * h1 - h;
            h2 * h2 - 4.0 * th * th
                + 4.0 * h1 * (h1 + 2.0 * a.alpha1) * (h1 - 2.0 * a.alpha2)
        }
        Params::II(a) => {
            h2 * h2 + 4.0 * h1 * h1 * h1 + 2.0 * h1 * (t * h1 - h) - 0.25 * a.alpha1 * a.alpha1
        }
    }
}

/// Parameters and initial data of the PIV system that coalesce onto PII
/// with parameter `alpha` as `eps -> 0`, for a PII point `(t, q, p)`.
pub fn coalescence_map(alpha: f64, eps: f64, pii: &SymmetricStateII) -> (PivParams, SymmetricStateIV) {
    let e6 = eps.powi(-6);
    let a = PivParams { alpha0: alpha + 1.5 + 0.5 * e6, alpha1: -alpha - 0.5, alpha2: -0.5 * e6 };
    let (c13, c23) = (2f64.powf(1.0 / 3.0), 2f64.powf(2.0 / 3.0));
    let t = eps.powi(-3) - eps * pii.t / c23;
    let q = c13 * eps * pii.p;
    let p = 0.5 * (eps.powi(-3) + c23 * pii.q / eps);
    (a, SymmetricStateIV::from_qp(t, q, p))
}

/// The PII Hamiltonian predicted from a PIV state under the coalescence scaling.
pub fn coalescence_hamiltonian(eps: f64, st: &SymmetricStateIV, a: &PivParams) -> f64 {
    let hq = hamiltonian_iv_qp(st.t, st.q(), st.p(), a);
    -(hq + a.alpha1 * st.t) * eps / 2f64.powf(2.0 / 3.0)
}

/// Deviations of the coalesced Hamiltonian from the PII one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceReport {
    pub params: PivParams,
    pub deviation: f64,
    pub deviation_half: f64,
}

/// Seed for the coalescence comparison: a regular point of a generic PII solution.
const COALESCENCE_SEED: (f64, f64) = (0.3, -0.2);
const COALESCENCE_WINDOW: f64 = 0.5;

/// The PII system reached by the scaling of [`coalescence_map`]. To leading
/// order the scaled PIV flow is the PII Hamiltonian flow in the pair
/// `(-q_II, p_II)` with `alpha1 = -alpha_II - 1/2`, the value PIV carries in
/// its own `alpha1`; the Hamiltonians then match under the scaling.
pub fn coalescence_limit(alpha: f64) -> PiiParams {
    let a1 = -alpha - 0.5;
    PiiParams { alpha0: 1.0 - a1, alpha1: a1 }
}

fn coalescence_deviation(alpha: f64, eps: f64, t_ii: f64) -> Result<(PivParams, f64)> {
    let seed = SymmetricStateII { t: t_ii, q: COALESCENCE_SEED.0, p: COALESCENCE_SEED.1 };
    let limit = SymmetricStateII { q: -seed.q, ..seed };
    let b = coalescence_limit(alpha);
    let grid: Vec<f64> = (0..=20).map(|k| t_ii + COALESCENCE_WINDOW * k as f64 / 20.0).collect();
    let two = integrate_system(&Params::II(b), &SymmetricState::II(limit), &grid, 1e-12)?;
    let (a, st4) = coalescence_map(alpha, eps, &seed);
    let grid4: Vec<f64> = grid.iter().map(|&t| eps.powi(-3) - eps * t / 2f64.powf(2.0 / 3.0)).collect();
    let four = integrate_system(&Params::IV(a), &SymmetricState::IV(st4), &grid4, 1e-13)?;
    let mut dev: f64 = 0.0;
    for (s4, h2) in four.states.iter().zip(&two.hamiltonian.value) {
        if let SymmetricState::IV(s4) = s4 {
            dev = dev.max((coalescence_hamiltonian(eps, s4, &a) - h2).abs());
        }
    }
    Ok((a, dev))
}

/// Integrates PII and the coalescing PIV system side by side over a short
/// window starting at `t_ii`, at `eps` and at `eps / 2`.
pub fn coalescence_check(alpha: f64, eps: f64, t_ii: f64) -> Result<CoalescenceReport> {
    if !(eps > 0.0 && eps <= 0.3) {
        return domain("coalescence parameter must lie in (0, 0.3]");
    }
    let (params, deviation) = coalescence_deviation(alpha, eps, t_ii)?;
    let (_, deviation_half) = coalescence_deviation(alpha, 0.5 * eps, t_ii)?;
    Ok(CoalescenceReport { params, deviation, deviation_half })
}

/// Right-hand anchor for the double-precision Hastings-McLeod solution.
const HM_ANCHOR: f64 = 8.0;

/// Hastings-McLeod solution of `q'' = 2q^3 + sq` (`q ~ Ai(s)` as `s -> inf`)
/// sampled on `grid` (every point at most `8`). Returns `(q, q')` pairs.
/// Integrated from the right, where the Airy function fixes the solution.
pub fn hastings_mcleod(grid: &[f64], tol: f64) -> Result<Vec<[f64; 2]>> {
    if grid.iter().any(|&s| !(s <= HM_ANCHOR)) {
        return domain(format!("Hastings-McLeod sampling limited to s <= {HM_ANCHOR}"));
    }
    let ai = airy_derivs(HM_ANCHOR, 1, &PrecisionConfig::default())?;
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = 2.0 * y[0] * y[0] * y[0] + s * y[0];
    };
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| grid[j].partial_cmp(&grid[i]).unwrap());
    let mut out = vec![[0.0; 2]; grid.len()];
    let (mut s, mut y) = (HM_ANCHOR, vec![ai[0], ai[1]]);
    for i in order {
        if grid[i] < s {
            let run = dopri(rhs, s, &y, grid[i], tol)?;
            y = run.y.last().cloned().unwrap();
            s = grid[i];
        }
        out[i] = [y[0], y[1]];
    }
    Ok(out)
}

/// Largest defect in the two identities tying `q(s, 0)` to `q(t, eps/2)`,
/// `t = -2^{1/3} s`, over `s` in `[s_lo, s_hi]`, for both `eps = +1, -1`.
///
/// `q(t, eps/2)` is produced by integrating PII at `alpha = eps/2` from data
/// built out of the Hastings-McLeod solution at `s_lo`; the identities are
/// then checked along the whole window.
pub fn pii_endpoint_residual(s_lo: f64, s_hi: f64, tol: f64) -> Result<f64> {
    if !(s_lo <= s_hi) {
        return domain("endpoint window must satisfy s_lo <= s_hi");
    }
    if s_lo == s_hi {
        return Ok(0.0);
    }
    let m = 64;
    let sgrid: Vec<f64> = (0..=m).map(|k| s_lo + (s_hi - s_lo) * k as f64 / m as f64).collect();
    let hm = hastings_mcleod(&sgrid, tol)?;
    if hm.iter().any(|v| v[0] <= 0.0) {
        return domain("q(s, 0) vanishes on the window");
    }
    let c13 = 2f64.powf(1.0 / 3.0);
    let mut worst: f64 = 0.0;
    for eps in [1.0, -1.0] {
        let tgrid: Vec<f64> = sgrid.iter().map(|s| -c13 * s).collect();
        let q_of = |v: &[f64; 2]| eps * v[1] / (c13 * v[0]);
        let dq_of = |t: f64, v: &[f64; 2], q: f64| {
            eps * q * q + 0.5 * eps * t - eps * c13 * v[0] * v[0]
        };
        let q0 = q_of(&hm[0]);
        let y0 = [q0, dq_of(tgrid[0], &hm[0], q0)];
        let alpha = 0.5 * eps;
        let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = 2.0 * y[0] * y[0] * y[0] + t * y[0] + alpha;
        };
        let ys = march(rhs, &y0, &tgrid, tol)?;
        for ((t, v), y) in tgrid.iter().zip(&hm).zip(&ys) {
            let second = (y[0] - q_of(v)).abs();
            let first = (y[1] - dq_of(*t, v, y[0])).abs();
            worst = worst.max(first).max(second);
        }
    }
    Ok(worst)
}

/// A group relation `lhs = rhs` and the largest discrepancy between the two
/// words on a generic parameter set and state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub relation: String,
    pub defect: f64,
}

fn word_image(system: SystemKind, word: &[Generator]) -> Result<Vec<f64>> {
    let g = GroupElement::new(system, word.to_vec())?;
    let (st, p) = match system {
        SystemKind::IV => (
            SymmetricState::IV(SymmetricStateIV::from_f1_f2(0.3, -0.7, 0.9)),
            Params::IV(PivParams::new(0.37, 0.21, 0.42)?),
        ),
        SystemKind::II => (
            SymmetricState::II(SymmetricStateII { t: -0.4, q: 0.55, p: 0.8 }),
            Params::II(PiiParams::new(0.3, 0.7)?),
        ),
    };
    let (st, p) = act_on_state(&g, &st, &p)?;
    Ok(match (st, p) {
        (SymmetricState::IV(s), Params::IV(a)) => vec![s.f0, s.f1, s.f2, a.alpha0, a.alpha1, a.alpha2],
        (SymmetricState::II(s), Params::II(a)) => vec![s.q, s.p, a.alpha0, a.alpha1],
        _ => unreachable!("actions preserve the system"),
    })
}

/// Defining relations of both extended affine Weyl groups, each evaluated
/// on parameters and on a state.
pub fn weyl_relation_defects() -> Result<Vec<RelationCheck>> {
    use Generator::*;
    let mut rel: Vec<(SystemKind, String, Vec<Generator>, Vec<Generator>)> = Vec::new();
    let s = [S0, S1, S2];
    for j in 0..3 {
        let (x, y) = (s[j], s[(j + 1) % 3]);
        rel.push((SystemKind::IV, format!("{x}^2 = 1"), vec![x, x], vec![]));
        rel.push((SystemKind::IV, format!("({x} {y})^3 = 1"), vec![x, y, x, y, x, y], vec![]));
        rel.push((SystemKind::IV, format!("pi {x} = {y} pi"), vec![Pi, x], vec![y, Pi]));
    }
    rel.push((SystemKind::IV, "pi^3 = 1".into(), vec![Pi, Pi, Pi], vec![]));
    rel.push((SystemKind::IV, "omega^2 = 1".into(), vec![Omega, Omega], vec![]));
    rel.push((SystemKind::IV, "omega T1 omega = T3^-1".into(), vec![Omega, T1, Omega], vec![T3Inv]));
    for (g, gi) in [(T1, T1Inv), (T2, T2Inv), (T3, T3Inv)] {
        rel.push((SystemKind::IV, format!("{g} {gi} = 1"), vec![g, gi], vec![]));
    }
    rel.push((SystemKind::II, "s0^2 = 1".into(), vec![S0, S0], vec![]));
    rel.push((SystemKind::II, "s1^2 = 1".into(), vec![S1, S1], vec![]));
    rel.push((SystemKind::II, "pi^2 = 1".into(), vec![Pi, Pi], vec![]));
    rel.push((SystemKind::II, "pi s0 = s1 pi".into(), vec![Pi, S0], vec![S1, Pi]));
    rel.push((SystemKind::II, "T1 T2 = 1".into(), vec![T1, T2], vec![]));
    rel.into_iter()
        .map(|(sys, relation, l, r)| {
            let (a, b) = (word_image(sys, &l)?, word_image(sys, &r)?);
            let defect = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            Ok(RelationCheck { relation, defect })
        })
        .collect()
}

/// Largest `|d/dt (g f) - v(g f)|` over a short trajectory from `st0`, for
/// every PIV generator `g`, where `v` is the vector field at the image
/// parameters. The derivative is a sixth-order difference with step `1e-3`.
pub fn backlund_covariance(params: &PivParams, st0: &SymmetricStateIV, tol: f64) -> Result<Vec<(Generator, f64)>> {
    let dt = 1e-3;
    let grid: Vec<f64> = (0..=40).map(|k| st0.t + dt * k as f64).collect();
    let a = Params::IV(*params);
    let tr = integrate_system(&a, &SymmetricState::IV(*st0), &grid, tol)?;
    let d6 = |v: &[f64], i: usize| {
        (-v[i - 3] + 9.0 * v[i - 2] - 45.0 * v[i - 1] + 45.0 * v[i + 1] - 9.0 * v[i + 2] + v[i + 3]) / (60.0 * dt)
    };
    let mut out = Vec::new();
    for g in Generator::ALL {
        let el = GroupElement::new(SystemKind::IV, vec![g])?;
        let mut comps = vec![Vec::with_capacity(grid.len()); 3];
        let mut image = *params;
        for s in &tr.states {
            if let (SymmetricState::IV(s), Params::IV(b)) = act_on_state(&el, s, &a)? {
                comps[0].push(s.f0);
                comps[1].push(s.f1);
                comps[2].push(s.f2);
                image = b;
            }
        }
        let mut worst = 0.0f64;
        for i in 3..grid.len() - 3 {
            let v = vector_field_iv([comps[0][i], comps[1][i], comps[2][i]], &image);
            for c in 0..3 {
                worst = worst.max((d6(&comps[c], i) - v[c]).abs());
            }
        }
        out.push((g, worst));
    }
    Ok(out)
}
