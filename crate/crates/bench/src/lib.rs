//! Shared workloads for the route benchmarks in `benches/`.

use gue_painleve::GridSpec;

/// Matrix sizes timed for every route.
pub const SIZES: [usize; 3] = [2, 6, 12];

/// Evaluation points spanning the bulk and both tails.
pub const POINTS: [f64; 3] = [-2.0, 0.0, 2.0];

/// Grid of the ODE route, covering the same span as [`POINTS`].
pub fn ode_grid() -> GridSpec {
    GridSpec::new(POINTS[0], POINTS[POINTS.len() - 1], 81)
}
