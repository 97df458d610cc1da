//! Reference designs without the privacy coupling.
//!
//! Benchmark I minimizes Bob's CRB over all covariances; Benchmark II loads
//! power onto a codebook of steering beams and their angular derivatives. Both
//! then scale the transmit power down until Eve's CRB meets the threshold,
//! using `CRB(cV) = CRB(V)/c`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{geometry_to_params, steering, steering_derivative};
use crate::design::{CovarianceModel, DesignError, DesignProblem};
use crate::fim::FimBundle;
use crate::scenario::{watt_to_dbm, Link, Scenario};

/// Outcome of a benchmark after power backoff.
#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    /// Covariance after scaling (W).
    pub v: DMatrix<Complex64>,
    /// Decision vector after scaling.
    pub x: Vec<f64>,
    /// Total transmit power (W).
    pub power_used: f64,
    pub bob_crb: f64,
    pub eve_crb: f64,
    pub scale: f64,
}

impl BenchmarkResult {
    pub fn power_dbm(&self) -> f64 {
        watt_to_dbm(self.power_used)
    }
}

/// Unconstrained minimizer of Bob's CRB.
#[derive(Debug, Clone, Serialize)]
pub struct CrbMinimum {
    pub x: Vec<f64>,
    /// Optimal `tr(U⁻¹)` converted to m².
    pub objective: f64,
    pub bob_crb: f64,
}

/// Minimizes Bob's CRB over the problem's covariance model.
pub fn crb_min_unconstrained(problem: &DesignProblem) -> Result<CrbMinimum, DesignError> {
    let sol = problem.solve_vu(None)?;
    Ok(CrbMinimum {
        objective: sol.trace_inv_u * problem.bob.pos_scale2,
        bob_crb: problem.bob_crb(&sol.x)?,
        x: sol.x,
    })
}

/// Scales `x` by `min(1, CRB_E/γ)` so Eve's CRB reaches `gamma` (m²).
pub fn power_backoff(
    problem: &DesignProblem,
    x: &[f64],
    gamma: f64,
) -> Result<BenchmarkResult, DesignError> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(DesignError::Invalid(format!(
            "gamma must be finite and nonnegative, got {gamma}"
        )));
    }
    let eve = problem.eve_crb(x)?;
    if !(eve > 0.0 && eve.is_finite()) {
        return Err(DesignError::Invalid(format!(
            "Eve CRB {eve} cannot be matched by power scaling"
        )));
    }
    let scale = if gamma > 0.0 { (eve / gamma).min(1.0) } else { 1.0 };
    let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
    let v = problem.covariance(&xs);
    Ok(BenchmarkResult {
        power_used: problem.total_power(&v),
        bob_crb: problem.bob_crb(x)? / scale,
        eve_crb: eve / scale,
        scale,
        x: xs,
        v,
    })
}

/// Steering beams toward every Bob path and their angular derivatives, the
/// latter rescaled to the steering norm `√M_A`.
pub fn codebook(s: &Scenario) -> Result<Vec<DVector<Complex64>>, DesignError> {
    let params = geometry_to_params(s, Link::Bob).map_err(crate::fim::FimError::from)?;
    let norm = (s.m_a as f64).sqrt();
    let mut beams = Vec::with_capacity(2 * params.theta_a.len());
    for &th in &params.theta_a {
        beams.push(steering(th, s.m_a));
    }
    for &th in &params.theta_a {
        let d = steering_derivative(th, s.m_a);
        beams.push(&d * Complex64::new(norm / d.norm(), 0.0));
    }
    Ok(beams)
}

/// Benchmark II design problem over the codebook of [`codebook`].
pub fn codebook_problem(s: &Scenario) -> Result<DesignProblem, DesignError> {
    let model = CovarianceModel::Codebook(codebook(s)?);
    DesignProblem::from_bundles(
        s,
        model,
        FimBundle::new(s, Link::Bob)?,
        FimBundle::new(s, Link::Eve)?,
    )
}

/// Optimal nonnegative beam powers (fractions of `P/M` per unit beam energy).
pub fn codebook_power_allocation(problem: &DesignProblem) -> Result<CrbMinimum, DesignError> {
    if !matches!(problem.model, CovarianceModel::Codebook(_)) {
        return Err(DesignError::Invalid("expected a codebook covariance model".into()));
    }
    crb_min_unconstrained(problem)
}

pub fn benchmark_one(problem: &DesignProblem, gamma: f64) -> Result<BenchmarkResult, DesignError> {
    let opt = crb_min_unconstrained(problem)?;
    power_backoff(problem, &opt.x, gamma)
}

pub fn benchmark_two(problem: &DesignProblem, gamma: f64) -> Result<BenchmarkResult, DesignError> {
    let opt = codebook_power_allocation(problem)?;
    power_backoff(problem, &opt.x, gamma)
}
