//! Transmit beampatterns `g(θ) = a(θ)ᴴ V a(θ)` on a uniform angular grid.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::steering;

/// Grid size used for reported beampatterns.
pub const GRID_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeampatternRecord {
    /// Departure angle (rad).
    pub theta: f64,
    /// Power normalized to the pattern maximum.
    pub gain: f64,
}

/// Cell centres of `n` equal cells covering `(−π/2, π/2)`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    let step = PI / n as f64;
    (0..n).map(|i| -PI / 2.0 + (i as f64 + 0.5) * step).collect()
}

/// Unnormalized `a(θ)ᴴ V a(θ)`.
pub fn radiated_power(v: &DMatrix<Complex64>, theta: f64) -> f64 {
    let a = steering(theta, v.nrows());
    (a.adjoint() * v * &a)[(0, 0)].re
}

/// Normalized beampattern of `v` on an `n`-point grid. An all-zero pattern is
/// returned unnormalized.
pub fn beampattern(v: &DMatrix<Complex64>, n: usize) -> Vec<BeampatternRecord> {
    let raw: Vec<(f64, f64)> = angle_grid(n)
        .into_iter()
        .map(|t| (t, radiated_power(v, t).max(0.0)))
        .collect();
    let peak = raw.iter().map(|p| p.1).fold(0.0_f64, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    raw.into_iter()
        .map(|(theta, g)| BeampatternRecord {
            theta,
            gain: g * scale,
        })
        .collect()
}

/// Indices of interior strict-left local maxima (`g[i-1] < g[i] ≥ g[i+1]`).
pub fn local_maxima(pattern: &[BeampatternRecord]) -> Vec<usize> {
    (1..pattern.len().saturating_sub(1))
        .filter(|&i| {
            pattern[i - 1].gain < pattern[i].gain && pattern[i].gain >= pattern[i + 1].gain
        })
        .collect()
}

/// Grid index closest to `theta`.
pub fn nearest_index(pattern: &[BeampatternRecord], theta: f64) -> usize {
    pattern
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.theta - theta).abs().total_cmp(&(b.1.theta - theta).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Sum of the pattern over `|θ − center| ≤ half_width`.
pub fn cone_power(pattern: &[BeampatternRecord], center: f64, half_width: f64) -> f64 {
    pattern
        .iter()
        .filter(|p| (p.theta - center).abs() <= half_width)
        .map(|p| p.gain)
        .sum()
}
