//! Fisher information: channel-domain FIM as a linear map of the transmit
//! covariance, the geometry Jacobian, the position-domain FIM and the CRB.
//!
//! Position-domain parameters of a link are laid out as
//! `η = [p_tx (2), φ, p_1 .. p_K (2K), Δt, Re α (K+1), Im α (K+1)]`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{
    channel_derivatives, geometry_to_params, path_geometry, ChannelDerivatives, ChannelError,
    LinkParams, ParamKind,
};
use crate::scenario::{derive_constants, Link, Scenario, SPEED_OF_LIGHT};

/// Condition-number ceiling for the nuisance block and the Schur complement.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative Hermitian tolerance accepted by [`FimLinearMap::eval`].
const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FimError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("covariance is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("position unidentifiable: {block} block {detail}")]
    Unidentifiable { block: &'static str, detail: String },
}

/// `[F_c(V)]_{ij} = scale · Σ_m Re tr(D_i[m]^H D_j[m] V)`, stored as the
/// coefficient matrices `C_ij = Σ_m D_i[m]^H D_j[m]` and `scale = 2N/σ²`.
#[derive(Debug, Clone)]
pub struct FimLinearMap {
    n_params: usize,
    n_tx: usize,
    coeffs: Vec<DMatrix<Complex64>>,
    pub scale: f64,
}

impl FimLinearMap {
    pub fn num_params(&self) -> usize {
        self.n_params
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn coeff(&self, i: usize, j: usize) -> &DMatrix<Complex64> {
        &self.coeffs[i * self.n_params + j]
    }

    /// Evaluates the map at a Hermitian covariance without checks.
    pub(crate) fn eval_unchecked(&self, v: &DMatrix<Complex64>) -> DMatrix<f64> {
        let n = self.n_params;
        let vt = v.transpose();
        let mut f = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                // Re tr(C V) = Re Σ_ab C[a,b] V[b,a]
                let c = self.coeff(i, j);
                let re: f64 = c.iter().zip(vt.iter()).map(|(x, y)| (x * y).re).sum();
                f[(i, j)] = re * self.scale;
                f[(j, i)] = re * self.scale;
            }
        }
        f
    }

    /// Channel-domain FIM at covariance `v`.
    pub fn eval(&self, v: &DMatrix<Complex64>) -> Result<DMatrix<f64>, FimError> {
        if v.nrows() != self.n_tx || v.ncols() != self.n_tx {
            return Err(FimError::Dimension(format!(
                "covariance is {}x{}, expected {}x{}",
                v.nrows(),
                v.ncols(),
                self.n_tx,
                self.n_tx
            )));
        }
        let asym = (v - v.adjoint()).norm();
        let size = v.norm();
        if asym > HERMITIAN_TOL * size {
            return Err(FimError::NotHermitian(asym / size));
        }
        let f = self.eval_unchecked(v);
        Ok((&f + f.transpose()) * 0.5)
    }
}

/// Builds the coefficient matrices from factored derivatives:
/// `D_i^H D_j = conj(g_i) g_j (r_i^H r_j) t_i t_j^H`.
pub fn build_fim_map(derivs: &ChannelDerivatives, s: &Scenario) -> Result<FimLinearMap, FimError> {
    let c = derive_constants(s).map_err(ChannelError::from)?;
    let n = derivs.num_params();
    let mut coeffs = vec![DMatrix::zeros(derivs.n_tx, derivs.n_tx); n * n];
    for i in 0..n {
        let fi = &derivs.factors[i];
        for j in i..n {
            let fj = &derivs.factors[j];
            let gain: Complex64 = fi
                .gain
                .iter()
                .zip(&fj.gain)
                .map(|(a, b)| a.conj() * b)
                .sum();
            let rx = fi.rx.dotc(&fj.rx);
            let cij = (&fi.tx * fj.tx.adjoint()) * (gain * rx);
            coeffs[j * n + i] = cij.adjoint();
            coeffs[i * n + j] = cij;
        }
    }
    Ok(FimLinearMap {
        n_params: n,
        n_tx: derivs.n_tx,
        coeffs,
        scale: 2.0 * s.pilots_per_slot as f64 / c.sigma2,
    })
}

/// `∂ξ/∂η`, `(5K+5) × (4K+6)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian(pub DMatrix<f64>);

/// Index helpers for the `η` layout.
pub mod eta {
    pub const POS_X: usize = 0;
    pub const POS_Y: usize = 1;
    pub const ORIENTATION: usize = 2;

    pub fn scatterer(k: usize) -> usize {
        3 + 2 * k
    }

    pub fn clock_bias(num_scatterers: usize) -> usize {
        3 + 2 * num_scatterers
    }

    pub fn gain_re(num_scatterers: usize, path: usize) -> usize {
        4 + 2 * num_scatterers + path
    }

    pub fn gain_im(num_scatterers: usize, path: usize) -> usize {
        5 + 3 * num_scatterers + path
    }

    pub fn len(num_scatterers: usize) -> usize {
        4 * num_scatterers + 6
    }
}

fn bearing_gradient(d: [f64; 2]) -> [f64; 2] {
    let r2 = d[0] * d[0] + d[1] * d[1];
    [-d[1] / r2, d[0] / r2]
}

fn unit(from: &[f64; 2], to: &[f64; 2]) -> [f64; 2] {
    let d = [to[0] - from[0], to[1] - from[1]];
    let n = d[0].hypot(d[1]);
    [d[0] / n, d[1] / n]
}

pub fn build_jacobian(s: &Scenario, params: &LinkParams, link: Link) -> Result<Jacobian, FimError> {
    // Degenerate geometry is reported by the geometry pass.
    path_geometry(s, link)?;
    let k_sc = s.num_scatterers();
    if params.num_paths() != k_sc + 1 {
        return Err(FimError::Dimension(format!(
            "{} paths for {} scatterers",
            params.num_paths(),
            k_sc
        )));
    }
    let p_r = s.receiver_position(link);
    let mut j = DMatrix::zeros(params.num_params(), eta::len(k_sc));
    let mut set2 = |row: usize, col: usize, v: [f64; 2]| {
        j[(row, col)] += v[0];
        j[(row, col + 1)] += v[1];
    };
    for k in 0..=k_sc {
        let target = if k == 0 { p_r } else { s.scatterers[k - 1] };
        let aod = params.index(ParamKind::Aod, k);
        let aoa = params.index(ParamKind::Aoa, k);
        let del = params.index(ParamKind::Delay, k);

        let g = bearing_gradient([target[0] - s.p_a[0], target[1] - s.p_a[1]]);
        set2(aod, eta::POS_X, [-g[0], -g[1]]);
        if k > 0 {
            set2(aod, eta::scatterer(k - 1), g);
        }

        let source = if k == 0 { s.p_a } else { s.scatterers[k - 1] };
        let g = bearing_gradient([source[0] - p_r[0], source[1] - p_r[1]]);
        if k == 0 {
            set2(aoa, eta::POS_X, g);
        } else {
            set2(aoa, eta::scatterer(k - 1), g);
        }

        if k == 0 {
            let u = unit(&p_r, &s.p_a);
            set2(del, eta::POS_X, [u[0] / SPEED_OF_LIGHT, u[1] / SPEED_OF_LIGHT]);
        } else {
            let p_k = s.scatterers[k - 1];
            let u1 = unit(&p_k, &s.p_a);
            set2(del, eta::POS_X, [u1[0] / SPEED_OF_LIGHT, u1[1] / SPEED_OF_LIGHT]);
            let u2 = unit(&s.p_a, &p_k);
            let u3 = unit(&p_r, &p_k);
            set2(
                del,
                eta::scatterer(k - 1),
                [
                    (u2[0] + u3[0]) / SPEED_OF_LIGHT,
                    (u2[1] + u3[1]) / SPEED_OF_LIGHT,
                ],
            );
        }
    }
    for k in 0..=k_sc {
        j[(params.index(ParamKind::Aod, k), eta::ORIENTATION)] = -1.0;
        j[(params.index(ParamKind::Delay, k), eta::clock_bias(k_sc))] = 1.0;
        j[(params.index(ParamKind::GainRe, k), eta::gain_re(k_sc, k))] = 1.0;
        j[(params.index(ParamKind::GainIm, k), eta::gain_im(k_sc, k))] = 1.0;
    }
    Ok(Jacobian(j))
}

/// Position-domain FIM with its `[Q G; Gᵀ Z]` partition (position first).
#[derive(Debug, Clone)]
pub struct PositionFim {
    pub full: DMatrix<f64>,
}

impl PositionFim {
    pub fn dim(&self) -> usize {
        self.full.nrows()
    }

    pub fn q(&self) -> DMatrix<f64> {
        self.full.view((0, 0), (2, 2)).into_owned()
    }

    pub fn g(&self) -> DMatrix<f64> {
        self.full.view((0, 2), (2, self.dim() - 2)).into_owned()
    }

    pub fn z(&self) -> DMatrix<f64> {
        let n = self.dim() - 2;
        self.full.view((2, 2), (n, n)).into_owned()
    }
}

/// `F_p = Jᵀ F_c J`.
pub fn position_fim(f_c: &DMatrix<f64>, jac: &Jacobian) -> Result<PositionFim, FimError> {
    let j = &jac.0;
    if f_c.nrows() != j.nrows() || f_c.ncols() != j.nrows() {
        return Err(FimError::Dimension(format!(
            "channel FIM {}x{} vs Jacobian {}x{}",
            f_c.nrows(),
            f_c.ncols(),
            j.nrows(),
            j.ncols()
        )));
    }
    let f = j.transpose() * f_c * j;
    Ok(PositionFim {
        full: (&f + f.transpose()) * 0.5,
    })
}

/// Jacobi scaling `d_i = 1/sqrt(A_ii)`; fails on a non-positive diagonal.
pub(crate) fn jacobi_scaling(a: &DMatrix<f64>, block: &'static str) -> Result<Vec<f64>, FimError> {
    a.diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 && d.is_finite() {
                Ok(1.0 / d.sqrt())
            } else {
                Err(FimError::Unidentifiable {
                    block,
                    detail: format!("has non-positive diagonal entry {i} ({d:.3e})"),
                })
            }
        })
        .collect()
}

fn scaled(a: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i] * d[j])
}

/// Condition number of a symmetric matrix after Jacobi scaling; raw FIM entries
/// span many decades purely through the choice of units.
pub(crate) fn scaled_condition(a: &DMatrix<f64>, block: &'static str) -> Result<f64, FimError> {
    let d = jacobi_scaling(a, block)?;
    let eig = SymmetricEigen::new(scaled(a, &d)).eigenvalues;
    let min = eig.min();
    let max = eig.max();
    if !(min > 0.0) {
        return Err(FimError::Unidentifiable {
            block,
            detail: format!("is not positive definite (min eigenvalue {min:.3e})"),
        });
    }
    Ok(max / min)
}

fn check_condition(a: &DMatrix<f64>, block: &'static str) -> Result<(), FimError> {
    let cond = scaled_condition(a, block)?;
    if cond > MAX_CONDITION {
        return Err(FimError::Unidentifiable {
            block,
            detail: format!("condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}"),
        });
    }
    Ok(())
}

/// Equivalent FIM of the position, `Q − G Z⁻¹ Gᵀ`.
pub fn schur_complement(fp: &PositionFim) -> Result<DMatrix<f64>, FimError> {
    let z = fp.z();
    check_condition(&z, "Z")?;
    let d = jacobi_scaling(&z, "Z")?;
    let chol = Cholesky::new(scaled(&z, &d)).ok_or_else(|| FimError::Unidentifiable {
        block: "Z",
        detail: "Cholesky factorization failed".into(),
    })?;
    let g = fp.g();
    let gd = DMatrix::from_fn(2, g.ncols(), |i, j| g[(i, j)] * d[j]);
    let s = fp.q() - &gd * chol.solve(&gd.transpose());
    Ok((&s + s.transpose()) * 0.5)
}

/// `tr([F_p⁻¹]_{1:2,1:2})` through the Schur complement of the nuisance block.
pub fn crb_position(fp: &PositionFim) -> Result<f64, FimError> {
    let s = schur_complement(fp)?;
    check_condition(&s, "Schur complement")?;
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    Ok((s[(0, 0)] + s[(1, 1)]) / det)
}

/// Same bound through a full inverse; an independent route used for cross-checks.
pub fn crb_full_inverse(fp: &PositionFim) -> Result<f64, FimError> {
    let d = jacobi_scaling(&fp.full, "F_p")?;
    let inv = scaled(&fp.full, &d)
        .try_inverse()
        .ok_or_else(|| FimError::Unidentifiable {
            block: "F_p",
            detail: "is singular".into(),
        })?;
    Ok(inv[(0, 0)] * d[0] * d[0] + inv[(1, 1)] * d[1] * d[1])
}

/// Everything needed to evaluate one link's CRB at any covariance.
#[derive(Debug, Clone)]
pub struct FimBundle {
    pub link: Link,
    pub params: LinkParams,
    pub map: FimLinearMap,
    pub jacobian: Jacobian,
}

impl FimBundle {
    pub fn new(s: &Scenario, link: Link) -> Result<Self, FimError> {
        let params = geometry_to_params(s, link)?;
        let derivs = channel_derivatives(&params, s)?;
        let map = build_fim_map(&derivs, s)?;
        let jacobian = build_jacobian(s, &params, link)?;
        Ok(Self {
            link,
            params,
            map,
            jacobian,
        })
    }

    pub fn position_fim(&self, v: &DMatrix<Complex64>) -> Result<PositionFim, FimError> {
        position_fim(&self.map.eval(v)?, &self.jacobian)
    }

    pub fn crb(&self, v: &DMatrix<Complex64>) -> Result<f64, FimError> {
        crb_position(&self.position_fim(v)?)
    }
}
