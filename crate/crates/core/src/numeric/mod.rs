//! Numerical oracle: box sampling, fixed-step RK4 and trajectory comparison.

mod rk4;
mod sample;

pub use rk4::{
    compare_trajectories, integrate_rk4, tabulate, time_grid, IntegrationError, Rk4Options, StateFunction, Trajectory,
};
pub use sample::{sample_box, SampleError};

/// Central finite difference of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Five-point stencil derivative of equally spaced samples at index `i`.
pub fn five_point_derivative(values: &[f64], i: usize, h: f64) -> Option<f64> {
    if i < 2 || i + 2 >= values.len() {
        return None;
    }
    Some((-values[i + 2] + 8.0 * values[i + 1] - 8.0 * values[i - 1] + values[i - 2]) / (12.0 * h))
}
