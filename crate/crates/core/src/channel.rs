//! Multipath MIMO channel model and its analytic parameter derivatives.
//!
//! Every node carries a half-wavelength uniform linear array with steering
//! vector `a(θ)_q = exp(jπ q sin θ)`, `q = 0..n-1`. Receiver arrays are aligned
//! with the global frame; the transmitter's orientation enters only through
//! the departure angles, referenced as selected by
//! [`AodFrame`](crate::scenario::AodFrame).
//!
//! Channel-domain parameters of a link with `K` scatterers are laid out as
//! `ξ = [θ_tx (K+1), θ_rx (K+1), τ (K+1), Re α (K+1), Im α (K+1)]`, path 0 being
//! the line-of-sight path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::scenario::{
    derive_constants, distance, draw_path_phases, Link, Scenario, ScenarioError, SPEED_OF_LIGHT,
};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("subcarrier index {m} outside 1..={max}")]
    Subcarrier { m: usize, max: usize },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
}

/// Kind of a channel-domain parameter, in the order of the `ξ` layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Aod,
    Aoa,
    Delay,
    GainRe,
    GainIm,
}

impl ParamKind {
    pub const ALL: [ParamKind; 5] = [
        ParamKind::Aod,
        ParamKind::Aoa,
        ParamKind::Delay,
        ParamKind::GainRe,
        ParamKind::GainIm,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

/// Channel-domain parameters `ξ` of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub link: Link,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Departure angles at the transmitter (rad).
    pub theta_a: Vec<f64>,
    /// Arrival angles at the receiver (rad).
    pub theta_r: Vec<f64>,
    /// Path delays including clock bias (s).
    pub tau: Vec<f64>,
    pub alpha_re: Vec<f64>,
    pub alpha_im: Vec<f64>,
}

impl LinkParams {
    pub fn num_paths(&self) -> usize {
        self.tau.len()
    }

    /// Length of `ξ`, i.e. `5(K+1)`.
    pub fn num_params(&self) -> usize {
        5 * self.num_paths()
    }

    pub fn index(&self, kind: ParamKind, path: usize) -> usize {
        kind.slot() * self.num_paths() + path
    }

    pub fn alpha(&self, k: usize) -> Complex64 {
        Complex64::new(self.alpha_re[k], self.alpha_im[k])
    }

    pub fn set_alpha(&mut self, k: usize, a: Complex64) {
        self.alpha_re[k] = a.re;
        self.alpha_im[k] = a.im;
    }

    /// Flattened `ξ`.
    pub fn to_vec(&self) -> Vec<f64> {
        [
            &self.theta_a,
            &self.theta_r,
            &self.tau,
            &self.alpha_re,
            &self.alpha_im,
        ]
        .iter()
        .flat_map(|v| v.iter().copied())
        .collect()
    }

    /// Overwrites the parameters from a flattened `ξ` of matching length.
    pub fn set_from_slice(&mut self, xi: &[f64]) {
        let p = self.num_paths();
        assert_eq!(xi.len(), 5 * p, "parameter vector length");
        self.theta_a.copy_from_slice(&xi[0..p]);
        self.theta_r.copy_from_slice(&xi[p..2 * p]);
        self.tau.copy_from_slice(&xi[2 * p..3 * p]);
        self.alpha_re.copy_from_slice(&xi[3 * p..4 * p]);
        self.alpha_im.copy_from_slice(&xi[4 * p..5 * p]);
    }
}

pub fn steering(theta: f64, n: usize) -> DVector<Complex64> {
    let u = PI * theta.sin();
    DVector::from_iterator(n, (0..n).map(|q| Complex64::from_polar(1.0, u * q as f64)))
}

/// `∂a(θ)/∂θ`.
pub fn steering_derivative(theta: f64, n: usize) -> DVector<Complex64> {
    let u = PI * theta.sin();
    let du = PI * theta.cos();
    DVector::from_iterator(
        n,
        (0..n).map(|q| {
            let q = q as f64;
            Complex64::new(0.0, du * q) * Complex64::from_polar(1.0, u * q)
        }),
    )
}

fn bearing(from: &[f64; 2], to: &[f64; 2]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0])
}

/// Angles and delays of a link as a function of geometry alone.
pub(crate) struct PathGeometry {
    pub theta_a: Vec<f64>,
    pub theta_r: Vec<f64>,
    pub tau: Vec<f64>,
    /// Distances transmitter→(scatterer)→receiver, one or two hops per path.
    pub hops: Vec<(f64, Option<f64>)>,
}

pub(crate) fn path_geometry(s: &Scenario, link: Link) -> Result<PathGeometry, ChannelError> {
    let p_r = s.receiver_position(link);
    let phi = s.departure_orientation(link);
    let dt = s.clock_bias(link);
    let d0 = distance(&s.p_a, &p_r);
    if d0 <= 1e-9 {
        return Err(ChannelError::Degenerate(format!(
            "transmitter coincides with {link} receiver"
        )));
    }
    let mut g = PathGeometry {
        theta_a: vec![bearing(&s.p_a, &p_r) - phi],
        theta_r: vec![bearing(&p_r, &s.p_a)],
        tau: vec![d0 / SPEED_OF_LIGHT + dt],
        hops: vec![(d0, None)],
    };
    for p_k in &s.scatterers {
        let d1 = distance(&s.p_a, p_k);
        let d2 = distance(p_k, &p_r);
        if d1 <= 1e-9 || d2 <= 1e-9 {
            return Err(ChannelError::Degenerate(format!(
                "scatterer {p_k:?} coincides with a node"
            )));
        }
        g.theta_a.push(bearing(&s.p_a, p_k) - phi);
        g.theta_r.push(bearing(&p_r, p_k));
        g.tau.push((d1 + d2) / SPEED_OF_LIGHT + dt);
        g.hops.push((d1, Some(d2)));
    }
    Ok(g)
}

/// Maps the scenario geometry of `link` to its channel-domain parameters, with
/// free-space gains and the seeded random phases.
pub fn geometry_to_params(s: &Scenario, link: Link) -> Result<LinkParams, ChannelError> {
    s.validate()?;
    let c = derive_constants(s)?;
    let g = path_geometry(s, link)?;
    let phases = draw_path_phases(s, link);
    let (alpha_re, alpha_im) = g
        .hops
        .iter()
        .zip(&phases)
        .map(|(&(d1, d2), &w)| {
            let mag = match d2 {
                None => c.lambda / (4.0 * PI * d1),
                Some(d2) => s.sigma_rcs * c.lambda / ((4.0 * PI).powf(1.5) * d1 * d2),
            };
            let a = Complex64::from_polar(mag, w);
            (a.re, a.im)
        })
        .unzip();
    Ok(LinkParams {
        link,
        n_tx: s.m_a,
        n_rx: s.receiver_antennas(link),
        theta_a: g.theta_a,
        theta_r: g.theta_r,
        tau: g.tau,
        alpha_re,
        alpha_im,
    })
}

fn delay_phase(m: usize, delta_f: f64, tau: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * m as f64 * delta_f * tau)
}

/// `H[m] = Σ_k α_k e^{-j2π m Δf τ_k} a_rx(θ_rx,k) a_tx(θ_tx,k)^H`, `m` in `1..=M`.
pub fn channel_matrix(
    params: &LinkParams,
    m: usize,
    s: &Scenario,
) -> Result<DMatrix<Complex64>, ChannelError> {
    if m == 0 || m > s.subcarriers {
        return Err(ChannelError::Subcarrier {
            m,
            max: s.subcarriers,
        });
    }
    let delta_f = derive_constants(s)?.delta_f;
    let mut h = DMatrix::zeros(params.n_rx, params.n_tx);
    for k in 0..params.num_paths() {
        let coef = params.alpha(k) * delay_phase(m, delta_f, params.tau[k]);
        let a_r = steering(params.theta_r[k], params.n_rx);
        let a_t = steering(params.theta_a[k], params.n_tx);
        h += (a_r * a_t.adjoint()) * coef;
    }
    Ok(h)
}

/// One rank-one derivative `∂H[m]/∂ξ_i = gain[m-1] · rx · tx^H`.
#[derive(Debug, Clone)]
pub struct DerivativeFactor {
    pub rx: DVector<Complex64>,
    pub tx: DVector<Complex64>,
    /// Scalar factor per subcarrier, index `m - 1`.
    pub gain: Vec<Complex64>,
}

impl DerivativeFactor {
    pub fn matrix(&self, m: usize) -> DMatrix<Complex64> {
        (&self.rx * self.tx.adjoint()) * self.gain[m - 1]
    }
}

/// `∂H[m]/∂ξ_i` for every parameter and subcarrier, kept in factored form since
/// each derivative touches a single path and is therefore rank one.
#[derive(Debug, Clone)]
pub struct ChannelDerivatives {
    pub n_rx: usize,
    pub n_tx: usize,
    pub subcarriers: usize,
    pub factors: Vec<DerivativeFactor>,
}

impl ChannelDerivatives {
    pub fn num_params(&self) -> usize {
        self.factors.len()
    }

    /// Dense `D_i[m]`, `m` in `1..=M`.
    pub fn matrix(&self, i: usize, m: usize) -> DMatrix<Complex64> {
        self.factors[i].matrix(m)
    }
}

pub fn channel_derivatives(
    params: &LinkParams,
    s: &Scenario,
) -> Result<ChannelDerivatives, ChannelError> {
    let delta_f = derive_constants(s)?.delta_f;
    let paths = params.num_paths();
    let big_m = s.subcarriers;
    let mut factors = Vec::with_capacity(5 * paths);
    for kind in ParamKind::ALL {
        for k in 0..paths {
            let alpha = params.alpha(k);
            let phase: Vec<Complex64> = (1..=big_m)
                .map(|m| delay_phase(m, delta_f, params.tau[k]))
                .collect();
            let a_r = steering(params.theta_r[k], params.n_rx);
            let a_t = steering(params.theta_a[k], params.n_tx);
            let (rx, tx, gain): (_, _, Vec<Complex64>) = match kind {
                ParamKind::Aod => (
                    a_r,
                    steering_derivative(params.theta_a[k], params.n_tx),
                    phase.iter().map(|e| alpha * e).collect(),
                ),
                ParamKind::Aoa => (
                    steering_derivative(params.theta_r[k], params.n_rx),
                    a_t,
                    phase.iter().map(|e| alpha * e).collect(),
                ),
                ParamKind::Delay => (
                    a_r,
                    a_t,
                    phase
                        .iter()
                        .enumerate()
                        .map(|(i, e)| {
                            Complex64::new(0.0, -2.0 * PI * (i + 1) as f64 * delta_f) * alpha * e
                        })
                        .collect(),
                ),
                ParamKind::GainRe => (a_r, a_t, phase),
                ParamKind::GainIm => (
                    a_r,
                    a_t,
                    phase.iter().map(|e| Complex64::i() * e).collect(),
                ),
            };
            factors.push(DerivativeFactor { rx, tx, gain });
        }
    }
    Ok(ChannelDerivatives {
        n_rx: params.n_rx,
        n_tx: params.n_tx,
        subcarriers: big_m,
        factors,
    })
}
