//! Privacy-constrained covariance design by penalty dual decomposition.
//!
//! The lifted problem minimizes Bob's CRB over `(V, U, Φ)` with the coupling
//! `F_E(V) Φ = I` relaxed into an augmented Lagrangian. The inner loop
//! alternates exact minimization over `(V, U)` and over `Φ`; the outer loop
//! either takes a dual step on `Θ` or grows the penalty `ρ`.
//!
//! All matrices handed to the subproblems live in the reparametrized
//! coordinates of [`crate::design`]. The violation `h` and the multiplier `Θ`
//! are therefore measured in those (dimensionless) coordinates, and the privacy
//! threshold becomes `γ' = γ / s_E²`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{trace_inverse_2x2, DesignError, DesignProblem};
use crate::fim::{schur_complement, FimError, PositionFim};
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum PddError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("outer iteration {iteration}, inner iteration {inner}: {source}")]
    Subproblem {
        iteration: usize,
        inner: usize,
        #[source]
        source: DesignError,
    },
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Fim(#[from] FimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PddConfig {
    pub rho0: f64,
    pub delta: f64,
    pub q: f64,
    pub inner_tol: f64,
    pub inner_max: usize,
    pub outer_tol: f64,
    pub outer_max: usize,
    pub solver_tol: f64,
}

impl Default for PddConfig {
    fn default() -> Self {
        Self {
            rho0: 1e-3,
            delta: 2.0,
            q: 0.7,
            inner_tol: 1e-6,
            inner_max: 30,
            outer_tol: 1e-5,
            outer_max: 60,
            solver_tol: 1e-8,
        }
    }
}

impl PddConfig {
    pub fn validate(&self) -> Result<(), PddError> {
        let positive = [
            ("rho0", self.rho0),
            ("inner_tol", self.inner_tol),
            ("outer_tol", self.outer_tol),
            ("solver_tol", self.solver_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PddError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.delta.is_finite() && self.delta > 1.0) {
            return Err(PddError::Config(format!("delta must exceed 1, got {}", self.delta)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(PddError::Config(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if self.inner_max == 0 || self.outer_max == 0 {
            return Err(PddError::Config("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PddStatus {
    Converged,
    MaxIterations,
    /// A subproblem solve failed after the first outer iteration; the
    /// least-violating iterate so far is returned.
    SolverStalled,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterRecord {
    pub k: usize,
    /// Augmented Lagrangian at the end of the inner loop.
    pub objective: f64,
    pub h: f64,
    /// Penalty used during this iteration's inner loop.
    pub rho: f64,
    pub bob_crb: f64,
    pub eve_crb: f64,
    pub dual_step: bool,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct LiftedSolution {
    /// Covariance `W W^H` (W).
    pub v: DMatrix<Complex64>,
    /// Decision vector in the covariance model's basis.
    pub x: Vec<f64>,
    /// Auxiliary `U` in m⁻² units (`tr U⁻¹` bounds Bob's CRB).
    pub u: DMatrix<f64>,
    /// `Φ` in the original position-domain parameter units.
    pub phi: DMatrix<f64>,
    /// Multiplier in reparametrized coordinates.
    pub theta: DMatrix<f64>,
    pub rho: f64,
    pub h: f64,
    pub bob_crb: f64,
    pub eve_crb: f64,
    pub trace: Vec<OuterRecord>,
    /// Augmented Lagrangian after every half step, per outer iteration.
    pub inner_objectives: Vec<Vec<f64>>,
    pub status: PddStatus,
    /// Subproblem failure that ended the run early, if any.
    pub failure: Option<String>,
}

impl LiftedSolution {
    pub fn converged(&self) -> bool {
        self.status == PddStatus::Converged
    }
}

/// `max_ij |(F Φ − I)_ij|`.
pub fn violation(f: &DMatrix<f64>, phi: &DMatrix<f64>) -> f64 {
    let r = f * phi;
    let mut h = 0.0_f64;
    for j in 0..r.ncols() {
        for i in 0..r.nrows() {
            let e = r[(i, j)] - if i == j { 1.0 } else { 0.0 };
            h = h.max(e.abs());
        }
    }
    h
}

fn penalty_value(f: &DMatrix<f64>, phi: &DMatrix<f64>, theta: &DMatrix<f64>, rho: f64) -> f64 {
    let d = f.nrows();
    let r = f * phi - DMatrix::identity(d, d) + theta / rho;
    0.5 * rho * r.norm_squared()
}

struct Iterate {
    x: Vec<f64>,
    u: DMatrix<f64>,
    phi: DMatrix<f64>,
    theta: DMatrix<f64>,
    rho: f64,
    h: f64,
}

/// Runs the privacy-constrained design for threshold `gamma` (m²).
pub fn run_pdd(s: &Scenario, gamma: f64, cfg: &PddConfig) -> Result<LiftedSolution, PddError> {
    let problem = DesignProblem::full_covariance(s)?;
    run_pdd_with(&problem, gamma, cfg)
}

/// [`run_pdd`] on a prebuilt problem, so sweeps reuse the FIM maps.
pub fn run_pdd_with(
    problem: &DesignProblem,
    gamma: f64,
    cfg: &PddConfig,
) -> Result<LiftedSolution, PddError> {
    run_pdd_observed(problem, gamma, cfg, |_| {})
}

/// [`run_pdd_with`], calling `observe` after every outer iteration.
pub fn run_pdd_observed(
    problem: &DesignProblem,
    gamma: f64,
    cfg: &PddConfig,
    mut observe: impl FnMut(&OuterRecord),
) -> Result<LiftedSolution, PddError> {
    cfg.validate()?;
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(PddError::Config(format!("gamma must be finite and nonnegative, got {gamma}")));
    }
    let mut problem = problem.clone();
    problem.settings.tol = cfg.solver_tol;
    let x0 = problem.isotropic_x().ok_or_else(|| {
        PddError::Config("the privacy-constrained design needs a full covariance model".into())
    })?;
    let gamma_scaled = gamma / problem.eve.pos_scale2;
    let d = problem.eve.dim();

    let mut x = x0;
    let mut u = schur_complement(&PositionFim {
        full: problem.bob.eval(&x),
    })?;
    let mut trace_inv_u = trace_inverse_2x2(&u);
    let mut theta = DMatrix::zeros(d, d);
    // The penalty Hessian grows like (γ')², so the starting weight shrinks with γ'.
    let mut rho = cfg.rho0 / gamma_scaled.max(1.0);
    // Start from a feasible Φ so that every half step decreases the objective.
    let mut phi = problem
        .solve_phi(&problem.eve.eval(&x), &theta, rho, gamma_scaled)
        .map_err(|source| PddError::Subproblem {
            iteration: 0,
            inner: 0,
            source,
        })?;
    let mut h_accepted = f64::INFINITY;
    let mut trace = Vec::new();
    let mut inner_objectives = Vec::new();
    let mut best: Option<Iterate> = None;
    let mut converged = false;
    let mut failure = None;

    'outer: for k in 1..=cfg.outer_max {
        let mut objectives = Vec::new();
        let mut alp = trace_inv_u + penalty_value(&problem.eve.eval(&x), &phi, &theta, rho);
        let mut inner = 0;
        while inner < cfg.inner_max {
            inner += 1;
            let start = alp;
            let pen = crate::design::Penalty {
                phi: &phi,
                theta: &theta,
                rho,
            };
            let step = problem.solve_vu(Some(&pen)).and_then(|vu| {
                let fe = problem.eve.eval(&vu.x);
                let cand = vu.trace_inv_u + penalty_value(&fe, &phi, &theta, rho);
                // An inexact solve can miss descent; the previous block is kept then.
                let (fe, vu) = if cand <= alp {
                    alp = cand;
                    (fe, Some(vu))
                } else {
                    (problem.eve.eval(&x), None)
                };
                let phi_next = problem.solve_phi(&fe, &theta, rho, gamma_scaled)?;
                Ok((vu, fe, phi_next))
            });
            let (vu, fe, phi_next) = match step {
                Ok(r) => r,
                Err(source) => {
                    let err = PddError::Subproblem {
                        iteration: k,
                        inner,
                        source,
                    };
                    if best.is_none() {
                        return Err(err);
                    }
                    failure = Some(err.to_string());
                    break 'outer;
                }
            };
            if let Some(vu) = vu {
                x = vu.x;
                u = vu.u;
                trace_inv_u = vu.trace_inv_u;
            }
            objectives.push(alp);
            let cand = trace_inv_u + penalty_value(&fe, &phi_next, &theta, rho);
            if cand <= alp {
                phi = phi_next;
                alp = cand;
            }
            objectives.push(alp);
            if start - alp < cfg.inner_tol * alp.abs().max(1.0) {
                break;
            }
        }
        let fe = problem.eve.eval(&x);
        let h = violation(&fe, &phi);
        let dual_step = h <= cfg.q * h_accepted;
        trace.push(OuterRecord {
            k,
            objective: alp,
            h,
            rho,
            bob_crb: problem.bob_crb(&x)?,
            eve_crb: problem.eve.crb(&x).unwrap_or(f64::INFINITY),
            dual_step,
            inner_iterations: inner,
        });
        observe(trace.last().expect("record pushed above"));
        inner_objectives.push(objectives);
        if best.as_ref().is_none_or(|b| h < b.h) {
            best = Some(Iterate {
                x: x.clone(),
                u: u.clone(),
                phi: phi.clone(),
                theta: theta.clone(),
                rho,
                h,
            });
        }
        if h < cfg.outer_tol {
            converged = true;
            best = Some(Iterate {
                x: x.clone(),
                u: u.clone(),
                phi: phi.clone(),
                theta: theta.clone(),
                rho,
                h,
            });
            break;
        }
        if dual_step {
            theta += (&fe * &phi - DMatrix::identity(d, d)) * rho;
            h_accepted = h;
        } else {
            rho *= cfg.delta;
        }
    }

    let it = best.expect("at least one outer iteration runs");
    let t_e = &problem.eve.transform;
    Ok(LiftedSolution {
        v: problem.covariance(&it.x),
        bob_crb: problem.bob_crb(&it.x)?,
        eve_crb: problem.eve.crb(&it.x).unwrap_or(f64::INFINITY),
        u: &it.u / problem.bob.pos_scale2,
        phi: t_e * &it.phi * t_e.transpose(),
        x: it.x,
        theta: it.theta,
        rho: it.rho,
        h: it.h,
        trace,
        inner_objectives,
        status: if converged {
            PddStatus::Converged
        } else if failure.is_some() {
            PddStatus::SolverStalled
        } else {
            PddStatus::MaxIterations
        },
        failure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtractionMode {
    /// Top-`L` eigenpairs.
    Decomposition,
    /// Gaussian rounding over `candidates` draws, scored by Bob's CRB among
    /// candidates meeting Eve's threshold `gamma`.
    Randomization { seed: u64, candidates: usize, gamma: f64 },
}

#[derive(Debug, Clone)]
pub struct Beamformers {
    pub w: DMatrix<Complex64>,
    /// `‖W Wᴴ − V‖_F / ‖V‖_F`.
    pub reconstruction_error: f64,
}

fn relative_error(w: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> f64 {
    let vn = v.norm();
    let e = (w * w.adjoint() - v).norm();
    if vn > 0.0 {
        e / vn
    } else {
        e
    }
}

/// Makes the largest-modulus entry of every column real and positive.
fn normalize_phase(w: &mut DMatrix<Complex64>) {
    for mut col in w.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or_default();
        if pivot.norm() > 0.0 {
            let rot = pivot.conj() / pivot.norm();
            col.iter_mut().for_each(|c| *c *= rot);
        }
    }
}

fn hermitian_eigen(v: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let h = (v + v.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    (vals, vecs)
}

/// Factors `V ≈ W Wᴴ` with `W` of `l` columns.
///
/// Randomization scores candidates with `problem`; decomposition ignores it.
pub fn extract_beamformers(
    v: &DMatrix<Complex64>,
    l: usize,
    mode: ExtractionMode,
    problem: Option<&DesignProblem>,
) -> Result<Beamformers, PddError> {
    let n = v.nrows();
    if l == 0 || v.ncols() != n {
        return Err(PddError::Config(format!(
            "need a square covariance and at least one beam, got {}x{} with L = {l}",
            n,
            v.ncols()
        )));
    }
    let (vals, vecs) = hermitian_eigen(v);
    match mode {
        ExtractionMode::Decomposition => {
            let mut w = DMatrix::zeros(n, l);
            for c in 0..l.min(n) {
                let s = Complex64::new(vals[c].max(0.0).sqrt(), 0.0);
                w.set_column(c, &(vecs.column(c) * s));
            }
            normalize_phase(&mut w);
            Ok(Beamformers {
                reconstruction_error: relative_error(&w, v),
                w,
            })
        }
        ExtractionMode::Randomization {
            seed,
            candidates,
            gamma,
        } => {
            let problem = problem.ok_or_else(|| {
                PddError::Config("randomized extraction needs the design problem".into())
            })?;
            let root = &vecs
                * DMatrix::from_diagonal(&DVector::from_iterator(
                    n,
                    vals.iter().map(|&e| Complex64::new(e.max(0.0).sqrt(), 0.0)),
                ));
            let power = v.trace().re;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = (0.5 / l as f64).sqrt();
            // (feasible, score, W): feasible candidates win, then lower score.
            let mut best: Option<(bool, f64, DMatrix<Complex64>)> = None;
            for _ in 0..candidates.max(1) {
                let g = DMatrix::from_fn(n, l, |_, _| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re * scale, im * scale)
                });
                let mut w = &root * g;
                let p = w.norm_squared();
                if p > 0.0 {
                    w *= Complex64::new((power / p).sqrt(), 0.0);
                }
                let cov = &w * w.adjoint();
                let eve = problem.eve.crb_covariance(&cov).unwrap_or(f64::INFINITY);
                let feasible = eve >= gamma;
                let score = if feasible {
                    problem.bob.crb_covariance(&cov).unwrap_or(f64::INFINITY)
                } else {
                    gamma - eve
                };
                let better = match &best {
                    None => true,
                    Some((bf, bs, _)) => (feasible && !bf) || (feasible == *bf && score < *bs),
                };
                if better {
                    best = Some((feasible, score, w));
                }
            }
            let (_, _, w) = best.expect("at least one candidate");
            Ok(Beamformers {
                reconstruction_error: relative_error(&w, v),
                w,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violation_examples() {
        let f = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let inv = f.clone().try_inverse().unwrap();
        assert!(violation(&f, &inv) < 1e-15);
        let mut phi = DMatrix::<f64>::identity(3, 3);
        phi[(1, 2)] = 0.25;
        assert_eq!(violation(&DMatrix::identity(3, 3), &phi), 0.25);
    }

    #[test]
    fn config_validation() {
        assert!(PddConfig::default().validate().is_ok());
        for bad in [
            PddConfig { delta: 1.0, ..Default::default() },
            PddConfig { q: 1.0, ..Default::default() },
            PddConfig { q: 0.0, ..Default::default() },
            PddConfig { outer_tol: 0.0, ..Default::default() },
            PddConfig { inner_max: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn rank_one_decomposition() {
        let a = DVector::from_fn(4, |i, _| Complex64::new(i as f64 + 1.0, 0.5 - i as f64));
        let v = &a * a.adjoint();
        let b = extract_beamformers(&v, 1, ExtractionMode::Decomposition, None).unwrap();
        assert!(b.reconstruction_error < 1e-10);
        let col = b.w.column(0);
        let pivot = col.iter().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
        assert!(pivot.im.abs() < 1e-12 && pivot.re > 0.0);
    }

    #[test]
    fn truncated_decomposition_reports_error() {
        let v = DMatrix::<Complex64>::identity(3, 3);
        let b = extract_beamformers(&v, 1, ExtractionMode::Decomposition, None).unwrap();
        assert!((b.reconstruction_error - (2.0_f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
