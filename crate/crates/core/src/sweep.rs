//! Threshold sweeps comparing the proposed design with both benchmarks.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmarks::{self, codebook_problem, crb_min_unconstrained, power_backoff, CrbMinimum};
use crate::design::{DesignError, DesignProblem};
use crate::pdd::{run_pdd_observed, LiftedSolution, OuterRecord, PddConfig, PddError};
use crate::scenario::{watt_to_dbm, Scenario};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Pdd(#[from] PddError),
    #[error("unknown method {0:?} (expected proposed, bench1 or bench2)")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Bench1,
    Bench2,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::Bench1, Method::Bench2];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::Bench1 => "bench1",
            Method::Bench2 => "bench2",
        })
    }
}

impl FromStr for Method {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "proposed" => Ok(Method::Proposed),
            "bench1" => Ok(Method::Bench1),
            "bench2" => Ok(Method::Bench2),
            other => Err(SweepError::UnknownMethod(other.to_string())),
        }
    }
}

/// One `(threshold, method)` result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    /// `√γ` (m).
    pub sqrt_gamma: f64,
    pub method: Method,
    pub bob_sqrt_crb: f64,
    pub eve_sqrt_crb: f64,
    pub power_dbm: f64,
    pub converged: bool,
    /// Outer iterations for the proposed design, conic solves otherwise.
    pub iterations: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub record: SweepRecord,
    /// Covariance that produced the record (W).
    pub v: DMatrix<Complex64>,
    pub lifted: Option<LiftedSolution>,
}

/// Problems and cached benchmark optima shared by every point of a sweep.
#[derive(Debug)]
pub struct Sweeper {
    pub scenario: Scenario,
    pub full: DesignProblem,
    pub pdd: PddConfig,
    codebook: OnceLock<DesignProblem>,
    bench1: OnceLock<CrbMinimum>,
    bench2: OnceLock<CrbMinimum>,
}

fn cached<T: Clone>(
    cell: &OnceLock<T>,
    init: impl FnOnce() -> Result<T, DesignError>,
) -> Result<&T, DesignError> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = init()?;
    Ok(cell.get_or_init(|| v))
}

impl Sweeper {
    pub fn new(scenario: &Scenario, pdd: PddConfig) -> Result<Self, SweepError> {
        pdd.validate()?;
        let mut full = DesignProblem::full_covariance(scenario)?;
        full.settings.tol = pdd.solver_tol;
        Ok(Self {
            scenario: scenario.clone(),
            full,
            pdd,
            codebook: OnceLock::new(),
            bench1: OnceLock::new(),
            bench2: OnceLock::new(),
        })
    }

    pub fn codebook_problem(&self) -> Result<&DesignProblem, DesignError> {
        cached(&self.codebook, || {
            let mut p = codebook_problem(&self.scenario)?;
            p.settings.tol = self.pdd.solver_tol;
            Ok(p)
        })
    }

    /// Benchmark I optimum before power backoff.
    pub fn bench1_optimum(&self) -> Result<&CrbMinimum, DesignError> {
        cached(&self.bench1, || crb_min_unconstrained(&self.full))
    }

    /// Benchmark II optimum before power backoff.
    pub fn bench2_optimum(&self) -> Result<&CrbMinimum, DesignError> {
        let problem = self.codebook_problem()?;
        cached(&self.bench2, || benchmarks::codebook_power_allocation(problem))
    }

    pub fn solve(&self, method: Method, sqrt_gamma: f64) -> Result<Solved, SweepError> {
        self.solve_observed(method, sqrt_gamma, |_| {})
    }

    /// [`Sweeper::solve`], forwarding proposed-design outer iterations to `observe`.
    pub fn solve_observed(
        &self,
        method: Method,
        sqrt_gamma: f64,
        observe: impl FnMut(&OuterRecord),
    ) -> Result<Solved, SweepError> {
        if !(sqrt_gamma.is_finite() && sqrt_gamma >= 0.0) {
            return Err(DesignError::Invalid(format!(
                "sqrt_gamma must be finite and nonnegative, got {sqrt_gamma}"
            ))
            .into());
        }
        let gamma = sqrt_gamma * sqrt_gamma;
        let start = Instant::now();
        let solved = match method {
            Method::Proposed => {
                let sol = run_pdd_observed(&self.full, gamma, &self.pdd, observe)?;
                Solved {
                    record: SweepRecord {
                        sqrt_gamma,
                        method,
                        bob_sqrt_crb: sol.bob_crb.sqrt(),
                        eve_sqrt_crb: sol.eve_crb.sqrt(),
                        power_dbm: watt_to_dbm(self.full.total_power(&sol.v)),
                        converged: sol.converged(),
                        iterations: sol.trace.len(),
                        wall_time_s: 0.0,
                    },
                    v: sol.v.clone(),
                    lifted: Some(sol),
                }
            }
            Method::Bench1 | Method::Bench2 => {
                let (problem, opt) = if method == Method::Bench1 {
                    (&self.full, self.bench1_optimum()?)
                } else {
                    (self.codebook_problem()?, self.bench2_optimum()?)
                };
                let r = power_backoff(problem, &opt.x, gamma)?;
                Solved {
                    record: SweepRecord {
                        sqrt_gamma,
                        method,
                        bob_sqrt_crb: r.bob_crb.sqrt(),
                        eve_sqrt_crb: r.eve_crb.sqrt(),
                        power_dbm: r.power_dbm(),
                        converged: true,
                        iterations: 1,
                        wall_time_s: 0.0,
                    },
                    v: r.v,
                    lifted: None,
                }
            }
        };
        let mut solved = solved;
        solved.record.wall_time_s = start.elapsed().as_secs_f64();
        Ok(solved)
    }
}
