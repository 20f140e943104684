//! Value types shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Numerical knobs threaded through the library.
///
/// `working_precision` is the significand length in bits. 53 selects the
/// native `f64` paths; anything larger switches the determinant and ODE
/// routes to MPFR arithmetic at that precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionConfig {
    pub working_precision: u32,
    pub quad_order: usize,
    pub series_terms: usize,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            working_precision: 53,
            quad_order: 15,
            series_terms: 400,
        }
    }
}

impl PrecisionConfig {
    pub fn new(working_precision: u32, quad_order: usize, series_terms: usize) -> Result<Self> {
        let cfg = PrecisionConfig {
            working_precision,
            quad_order,
            series_terms,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_bits(bits: u32) -> Self {
        PrecisionConfig {
            working_precision: bits.max(53),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.working_precision < 53 {
            return domain("working_precision must be at least 53 bits");
        }
        if self.quad_order < 2 {
            return domain("quad_order must be at least 2");
        }
        if self.series_terms < 1 {
            return domain("series_terms must be at least 1");
        }
        Ok(())
    }

    pub fn is_extended(&self) -> bool {
        self.working_precision > 53
    }

    /// Relative accuracy the configuration can promise.
    pub fn epsilon(&self) -> f64 {
        2f64.powi(-(self.working_precision as i32).min(1000))
    }
}

/// Signed logarithm of a determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDetResult {
    /// +1, -1, or 0 for an exactly singular matrix.
    pub sign: i8,
    /// log |det|; `f64::NEG_INFINITY` when `sign == 0`.
    pub log_abs: f64,
    /// Ratio of largest to smallest pivot magnitude after scaling.
    pub condition_estimate: f64,
}

impl LogDetResult {
    pub fn singular() -> Self {
        LogDetResult {
            sign: 0,
            log_abs: f64::NEG_INFINITY,
            condition_estimate: f64::INFINITY,
        }
    }

    pub fn value(&self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }
}

/// Samples of a function on a monotone grid together with its first two
/// derivatives and a running integral measured from `grid[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub integral: Vec<f64>,
}

impl GridFunction {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.grid.windows(2).all(|w| w[1] > w[0])
    }

    /// Index of the grid point nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, g) in self.grid.iter().enumerate() {
            if (g - t).abs() < (self.grid[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Cubic Hermite interpolation of the value using the stored derivative.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let n = self.grid.len();
        if n == 0 || t < self.grid[0] || t > self.grid[n - 1] {
            return None;
        }
        let i = match self.grid.partition_point(|g| *g <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        if n == 1 {
            return Some(self.value[0]);
        }
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let s = (t - x0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Some(
            h00 * self.value[i]
                + h10 * h * self.d1[i]
                + h01 * self.value[i + 1]
                + h11 * h * self.d1[i + 1],
        )
    }
}

/// Uniform grid description used by tabulation and ODE sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(start: f64, end: f64, points: usize) -> Self {
        GridSpec { start, end, points }
    }

    pub fn abscissae(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.start];
        }
        let h = (self.end - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + h * i as f64).collect()
    }
}
