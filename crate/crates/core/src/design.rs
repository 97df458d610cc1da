//! Lifted covariance design problems shared by the privacy-constrained solver
//! and the benchmarks.
//!
//! The covariance is `V = P/M · Σ_k x_k E_k` for a fixed basis `{E_k}` (the full
//! Hermitian basis, or rank-one codebook beams), so every position-domain FIM
//! is linear in the real vector `x` and `tr V ≤ P/M` becomes `Σ_k x_k tr E_k ≤ 1`.
//!
//! Raw FIM entries span tens of decades (metres, seconds and gain units mix),
//! far beyond what an interior-point method resolves. Each link therefore works
//! in reparametrized coordinates `η = T η'` with
//!
//! ```text
//! T = [ s·I    0  ]
//!     [ s·B   W_z ]      B = −Z₀⁻¹G₀ᵀ,  W_zᵀ Z₀ W_z = I,  s² = CRB₀ / 2
//! ```
//!
//! built from the FIM at the isotropic covariance. The lower block row only
//! mixes nuisance parameters, so the position block of `F⁻¹` is unchanged up to
//! the factor `s²`: `CRB = s² · CRB'`. At the reference point `F'` is block
//! diagonal with a unit-scale nuisance block.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::conic::{
    self, epigraph_frobenius, epigraph_trace_inverse, hermitian_basis, AffineExpr, AffineMatrix,
    BlockId, ConicError, ConicProgram, SolveStatus, SolverSettings,
};
use crate::fim::{self, FimBundle, FimError, FimLinearMap, PositionFim};
use crate::scenario::{derive_constants, Link, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Fim(#[from] FimError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("{stage} subproblem ended with status {status:?}")]
    Solver {
        stage: &'static str,
        status: SolveStatus,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// How the covariance is parameterized by the decision vector.
#[derive(Debug, Clone)]
pub enum CovarianceModel {
    /// `V = Q X Qᴴ` for Hermitian PSD `X`, where `Q` has orthonormal columns.
    /// `Q = I` admits every covariance.
    Full(DMatrix<Complex64>),
    /// Nonnegative power loading of fixed beams, `V ∝ Σ p_i b_i b_iᴴ`.
    Codebook(Vec<DVector<Complex64>>),
}

/// Relative eigenvalue floor below which a direction carries no information.
const RANGE_TOL: f64 = 1e-12;

impl CovarianceModel {
    pub fn full(n: usize) -> Self {
        CovarianceModel::Full(DMatrix::identity(n, n))
    }

    /// Full model restricted to the transmit directions the FIMs can see.
    ///
    /// Every FIM entry has the form `Re tr(C V)` with `C` a coefficient matrix
    /// of either map, so projecting `V` onto the joint range of the `C`s keeps
    /// both FIMs unchanged and never increases the trace. Optimizing over the
    /// range therefore loses nothing.
    pub fn informative(maps: &[&FimLinearMap]) -> Self {
        let n = maps[0].n_tx();
        let mut gram = DMatrix::<Complex64>::zeros(n, n);
        for map in maps {
            for i in 0..map.num_params() {
                for j in 0..map.num_params() {
                    let c = map.coeff(i, j);
                    let cn = c.norm();
                    if cn > 0.0 {
                        gram += c * c.adjoint() / Complex64::new(cn * cn, 0.0);
                    }
                }
            }
        }
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.max();
        let cols: Vec<DVector<Complex64>> = (0..n)
            .filter(|&k| eig.eigenvalues[k] > RANGE_TOL * top)
            .map(|k| eig.eigenvectors.column(k).into_owned())
            .collect();
        CovarianceModel::Full(DMatrix::from_columns(&cols))
    }

    pub fn basis(&self) -> Vec<DMatrix<Complex64>> {
        match self {
            CovarianceModel::Full(q) => hermitian_basis(q.ncols())
                .iter()
                .map(|h| q * h * q.adjoint())
                .collect(),
            CovarianceModel::Codebook(beams) => beams.iter().map(|b| b * b.adjoint()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CovarianceModel::Full(q) => q.ncols() * q.ncols(),
            CovarianceModel::Codebook(beams) => beams.len(),
        }
    }

    pub fn n_tx(&self) -> usize {
        match self {
            CovarianceModel::Full(q) => q.nrows(),
            CovarianceModel::Codebook(beams) => beams[0].len(),
        }
    }

    fn trace_weights(&self) -> Vec<f64> {
        match self {
            CovarianceModel::Full(q) => {
                let r = q.ncols();
                (0..r * r).map(|k| if k < r { 1.0 } else { 0.0 }).collect()
            }
            CovarianceModel::Codebook(beams) => beams.iter().map(|b| b.norm_squared()).collect(),
        }
    }

    fn add_block(&self, p: &mut ConicProgram) -> BlockId {
        match self {
            CovarianceModel::Full(q) => p.add_hermitian("V", q.ncols()),
            CovarianceModel::Codebook(beams) => {
                let id = p.add_vector("p", beams.len());
                let rows = (0..beams.len()).map(|i| AffineExpr::var(p.var(id, i))).collect();
                p.add_nonneg("beam powers", rows);
                id
            }
        }
    }
}

/// Position-domain FIM of one link as a linear function of `x`, in the
/// reparametrized coordinates described in the module docs.
#[derive(Debug, Clone)]
pub struct LinkFimModel {
    pub link: Link,
    basis: Vec<DMatrix<f64>>,
    /// `η = transform · η'`.
    pub transform: DMatrix<f64>,
    /// `CRB (m²) = pos_scale2 · CRB'`.
    pub pos_scale2: f64,
    /// Jacobian composed with the reparametrization, `∂ξ/∂η'`.
    jt: DMatrix<f64>,
    map: FimLinearMap,
    power_cap: f64,
}

fn reparametrization(f0: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64), FimError> {
    let d = f0.nrows();
    let nz = d - 2;
    let z0 = f0.view((2, 2), (nz, nz)).into_owned();
    let g0 = f0.view((0, 2), (2, nz)).into_owned();
    let dz = fim::jacobi_scaling(&z0, "Z")?;
    let zs = DMatrix::from_fn(nz, nz, |i, j| z0[(i, j)] * dz[i] * dz[j]);
    let chol = Cholesky::new(zs).ok_or_else(|| FimError::Unidentifiable {
        block: "Z",
        detail: "is not positive definite at the reference covariance".into(),
    })?;
    let linv_t = chol
        .l()
        .try_inverse()
        .ok_or_else(|| FimError::Unidentifiable {
            block: "Z",
            detail: "Cholesky factor is singular".into(),
        })?
        .transpose();
    let dmat = DMatrix::from_diagonal(&DVector::from_vec(dz));
    let w_z = &dmat * linv_t;
    // B = −Z₀⁻¹ G₀ᵀ
    let b = -(&dmat * chol.solve(&(&dmat * g0.transpose())));
    let fp0 = PositionFim { full: f0.clone() };
    let crb0 = fim::crb_position(&fp0)?;
    let s = (crb0 / 2.0).sqrt();
    let mut t = DMatrix::zeros(d, d);
    t[(0, 0)] = s;
    t[(1, 1)] = s;
    t.view_mut((2, 0), (nz, 2)).copy_from(&(b * s));
    t.view_mut((2, 2), (nz, nz)).copy_from(&w_z);
    Ok((t, s * s))
}

impl LinkFimModel {
    /// `reference` is the covariance (W) at which the coordinates are whitened.
    pub fn new(
        bundle: &FimBundle,
        model: &CovarianceModel,
        power_cap: f64,
        reference: &DMatrix<Complex64>,
    ) -> Result<Self, DesignError> {
        let f0 = bundle.position_fim(reference)?.full;
        let (transform, pos_scale2) = reparametrization(&f0)?;
        let jt = &bundle.jacobian.0 * &transform;
        let basis = model
            .basis()
            .iter()
            .map(|e| {
                let fc = bundle.map.eval_unchecked(e) * power_cap;
                let f = jt.transpose() * fc * &jt;
                (&f + f.transpose()) * 0.5
            })
            .collect();
        Ok(Self {
            link: bundle.link,
            basis,
            transform,
            pos_scale2,
            jt,
            map: bundle.map.clone(),
            power_cap,
        })
    }

    pub fn dim(&self) -> usize {
        self.transform.nrows()
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// Reparametrized position FIM at `x`.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut f = DMatrix::zeros(d, d);
        for (b, &xk) in self.basis.iter().zip(x) {
            if xk != 0.0 {
                f += b * xk;
            }
        }
        f
    }

    /// Reparametrized position FIM of an arbitrary covariance (W).
    pub fn eval_covariance(&self, v: &DMatrix<Complex64>) -> Result<DMatrix<f64>, FimError> {
        let fc = self.map.eval(v)?;
        let f = self.jt.transpose() * fc * &self.jt;
        Ok((&f + f.transpose()) * 0.5)
    }

    /// CRB in m² of an arbitrary covariance (W).
    pub fn crb_covariance(&self, v: &DMatrix<Complex64>) -> Result<f64, FimError> {
        let full = self.eval_covariance(v)?;
        Ok(self.pos_scale2 * fim::crb_position(&PositionFim { full })?)
    }

    /// Power cap `P/M` (W) used to normalize the decision vector.
    pub fn power_cap(&self) -> f64 {
        self.power_cap
    }

    /// CRB in m² at `x`.
    pub fn crb(&self, x: &[f64]) -> Result<f64, FimError> {
        Ok(self.pos_scale2 * fim::crb_position(&PositionFim { full: self.eval(x) })?)
    }

    fn affine(&self, p: &ConicProgram, block: BlockId) -> AffineMatrix {
        let d = self.dim();
        let off = p.block(block).offset;
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let mut e = AffineExpr::default();
                        for (k, b) in self.basis.iter().enumerate() {
                            e.add_term(off + k, b[(i, j)]);
                        }
                        e
                    })
                    .collect()
            })
            .collect()
    }
}

/// Fixed part of the augmented-Lagrangian penalty `‖F_E Φ − I + Θ/ρ‖²_F`.
#[derive(Debug, Clone)]
pub struct Penalty<'a> {
    pub phi: &'a DMatrix<f64>,
    pub theta: &'a DMatrix<f64>,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct VuSolution {
    pub x: Vec<f64>,
    /// Auxiliary `U` in reparametrized units.
    pub u: DMatrix<f64>,
    /// `tr(U⁻¹)` in reparametrized units.
    pub trace_inv_u: f64,
    pub status: SolveStatus,
}

/// Data shared by every subproblem of one scenario.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub model: CovarianceModel,
    pub bob: LinkFimModel,
    pub eve: LinkFimModel,
    pub bob_bundle: FimBundle,
    pub eve_bundle: FimBundle,
    pub power_cap: f64,
    /// Subcarrier count `M`; total transmit power is `M·tr(V)`.
    pub subcarriers: usize,
    pub settings: SolverSettings,
}

pub fn trace_inverse_2x2(u: &DMatrix<f64>) -> f64 {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    (u[(0, 0)] + u[(1, 1)]) / det
}

/// Isotropic full-power covariance `P/(M·M_A) · I`.
pub fn isotropic_covariance(n_tx: usize, power_cap: f64) -> DMatrix<Complex64> {
    DMatrix::identity(n_tx, n_tx) * Complex64::new(power_cap / n_tx as f64, 0.0)
}

impl DesignProblem {
    pub fn new(s: &Scenario, model: CovarianceModel) -> Result<Self, DesignError> {
        let bob_bundle = FimBundle::new(s, Link::Bob)?;
        let eve_bundle = FimBundle::new(s, Link::Eve)?;
        Self::from_bundles(s, model, bob_bundle, eve_bundle)
    }

    /// Full covariance design over the informative transmit subspace.
    pub fn full_covariance(s: &Scenario) -> Result<Self, DesignError> {
        let bob_bundle = FimBundle::new(s, Link::Bob)?;
        let eve_bundle = FimBundle::new(s, Link::Eve)?;
        let model = CovarianceModel::informative(&[&bob_bundle.map, &eve_bundle.map]);
        Self::from_bundles(s, model, bob_bundle, eve_bundle)
    }

    pub fn from_bundles(
        s: &Scenario,
        model: CovarianceModel,
        bob_bundle: FimBundle,
        eve_bundle: FimBundle,
    ) -> Result<Self, DesignError> {
        if model.n_tx() != s.m_a {
            return Err(DesignError::Invalid(format!(
                "covariance order {} does not match {} transmit antennas",
                model.n_tx(),
                s.m_a
            )));
        }
        let power_cap = derive_constants(s)?.power_cap;
        let v0 = isotropic_covariance(s.m_a, power_cap);
        let bob = LinkFimModel::new(&bob_bundle, &model, power_cap, &v0)?;
        let eve = LinkFimModel::new(&eve_bundle, &model, power_cap, &v0)?;
        Ok(Self {
            model,
            bob,
            eve,
            bob_bundle,
            eve_bundle,
            power_cap,
            subcarriers: s.subcarriers,
            settings: SolverSettings::default(),
        })
    }

    /// Decision vector of the isotropic full-power covariance, when representable.
    pub fn isotropic_x(&self) -> Option<Vec<f64>> {
        match &self.model {
            CovarianceModel::Full(q) => {
                // Projection of the isotropic covariance: same FIMs, and full
                // power when the range is the whole space.
                let (n, r) = (q.nrows(), q.ncols());
                let mut x = vec![0.0; r * r];
                x[..r].iter_mut().for_each(|v| *v = 1.0 / n as f64);
                Some(x)
            }
            CovarianceModel::Codebook(_) => None,
        }
    }

    /// Covariance (W) for a decision vector.
    pub fn covariance(&self, x: &[f64]) -> DMatrix<Complex64> {
        let n = self.model.n_tx();
        let mut v = DMatrix::zeros(n, n);
        for (e, &xk) in self.model.basis().iter().zip(x) {
            v += e * Complex64::new(xk * self.power_cap, 0.0);
        }
        v
    }

    /// Total transmit power (W) of a covariance.
    pub fn total_power(&self, v: &DMatrix<Complex64>) -> f64 {
        v.trace().re * self.subcarriers as f64
    }

    pub fn bob_crb(&self, x: &[f64]) -> Result<f64, FimError> {
        self.bob.crb(x)
    }

    pub fn eve_crb(&self, x: &[f64]) -> Result<f64, FimError> {
        self.eve.crb(x)
    }

    /// Minimizes `tr(U⁻¹)` (plus the penalty, if given) subject to the Schur
    /// LMI, `U ⪰ 0`, `V ⪰ 0` and the power cap.
    pub fn solve_vu(&self, penalty: Option<&Penalty>) -> Result<VuSolution, DesignError> {
        let mut p = ConicProgram::new();
        let xb = self.model.add_block(&mut p);
        let off = p.block(xb).offset;

        let mut power = AffineExpr::constant(1.0);
        for (k, w) in self.model.trace_weights().into_iter().enumerate() {
            power.add_term(off + k, -w);
        }
        p.add_nonneg("power cap", vec![power]);

        let ub = p.add_symmetric("U", 2);
        epigraph_trace_inverse(&mut p, ub, 1.0);
        let ue = p.symmetric_expr(ub);
        let mut lmi = self.bob.affine(&p, xb);
        for i in 0..2 {
            for j in 0..2 {
                lmi[i][j] = lmi[i][j].clone().sub(&ue[i][j]);
            }
        }
        p.add_psd("schur lmi", &lmi);

        if let Some(pen) = penalty {
            // (ρ/2)‖A x − c‖² with A_k = vec(F_k Φ), c = vec(I − Θ/ρ).
            let d = self.eve.dim();
            let cols: Vec<DVector<f64>> = self
                .eve
                .basis()
                .iter()
                .map(|b| DVector::from_column_slice((b * pen.phi).as_slice()))
                .collect();
            let a = DMatrix::from_columns(&cols);
            let c = DVector::from_column_slice(
                (DMatrix::identity(d, d) - pen.theta / pen.rho).as_slice(),
            );
            // ‖A x − c‖² = ‖R x − b‖² + const with RᵀR = AᵀA, so the cone
            // has one row per decision variable instead of one per entry.
            let ata = a.transpose() * &a;
            let eig = SymmetricEigen::new((&ata + ata.transpose()) * 0.5);
            let atc = a.transpose() * c;
            let floor = eig.eigenvalues.amax() * 1e-14;
            let n = self.model.dim();
            let mut rows = Vec::new();
            for (i, &lam) in eig.eigenvalues.iter().enumerate() {
                if lam <= floor {
                    continue;
                }
                let qi = eig.eigenvectors.column(i);
                let sl = lam.sqrt();
                let mut e = AffineExpr::constant(-qi.dot(&atc) / sl);
                for k in 0..n {
                    e.add_term(off + k, sl * qi[k]);
                }
                rows.push(e);
            }
            let tb = p.add_vector("penalty norm", 1);
            let t = p.var(tb, 0);
            p.add_quadratic(t, pen.rho);
            p.add_soc("penalty", AffineExpr::var(t), rows);
        }

        let r = conic::solve(&p, &self.settings)?;
        if !r.status.has_solution() {
            return Err(DesignError::Solver {
                stage: "(V, U)",
                status: r.status,
            });
        }
        let mut x = p.vector_value(&r.x, xb);
        if let CovarianceModel::Codebook(_) = self.model {
            x.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let u = p.symmetric_value(&r.x, ub);
        Ok(VuSolution {
            trace_inv_u: trace_inverse_2x2(&u),
            x,
            u,
            status: r.status,
        })
    }

    /// Minimizes `‖F Φ − I + Θ/ρ‖_F` over symmetric `Φ ⪰ 0` with
    /// `Φ₁₁ + Φ₂₂ ≥ γ'` (reparametrized units).
    pub fn solve_phi(
        &self,
        f: &DMatrix<f64>,
        theta: &DMatrix<f64>,
        rho: f64,
        gamma_scaled: f64,
    ) -> Result<DMatrix<f64>, DesignError> {
        let d = f.nrows();
        let target = DMatrix::identity(d, d) - theta / rho;
        // Closed form whenever Φ ⪰ 0 is inactive at the optimum.
        if let Some(phi) = trace_constrained_least_squares(f, &target, gamma_scaled) {
            if phi.clone().symmetric_eigenvalues().min() >= 0.0 {
                return Ok(phi);
            }
        }
        let mut p = ConicProgram::new();
        let pb = p.add_symmetric("Phi", d);
        let pe = p.symmetric_expr(pb);
        p.add_nonneg(
            "privacy",
            vec![pe[0][0]
                .clone()
                .add(&pe[1][1])
                .sub(&AffineExpr::constant(gamma_scaled))],
        );
        let mut entries = Vec::with_capacity(d * d);
        for j in 0..d {
            for i in 0..d {
                let mut e = AffineExpr::constant(-target[(i, j)]);
                for r in 0..d {
                    for &(v, c) in &pe[r][j].terms {
                        e.add_term(v, c * f[(i, r)]);
                    }
                }
                entries.push(e);
            }
        }
        epigraph_frobenius(&mut p, entries, 1.0, false);
        let r = conic::solve(&p, &self.settings)?;
        if !r.status.has_solution() {
            return Err(DesignError::Solver {
                stage: "Phi",
                status: r.status,
            });
        }
        Ok(p.symmetric_value(&r.x, pb))
    }
}

/// Inverse of `X ↦ F²X + XF²` on symmetric matrices, for `F ≻ 0`.
struct SylvesterInverse {
    q: DMatrix<f64>,
    lam2: DVector<f64>,
}

impl SylvesterInverse {
    fn new(f: &DMatrix<f64>) -> Option<Self> {
        let eig = SymmetricEigen::new(f.clone());
        if eig.eigenvalues.min() <= 0.0 {
            return None;
        }
        Some(Self {
            lam2: eig.eigenvalues.map(|l| l * l),
            q: eig.eigenvectors,
        })
    }

    fn apply(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let r = self.q.transpose() * rhs * &self.q;
        let n = r.nrows();
        let y = DMatrix::from_fn(n, n, |i, j| r[(i, j)] / (self.lam2[i] + self.lam2[j]));
        let x = &self.q * y * self.q.transpose();
        (&x + x.transpose()) * 0.5
    }
}

/// Unconstrained `argmin_{Φ = Φᵀ} ‖F Φ − C‖_F` for symmetric positive definite
/// `F`: solves `F²Φ + ΦF² = F C + Cᵀ F` in the eigenbasis of `F`.
pub fn symmetric_least_squares(f: &DMatrix<f64>, c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = SylvesterInverse::new(f)?;
    Some(inv.apply(&(f * c + c.transpose() * f)))
}

/// `argmin_{Φ = Φᵀ} ‖F Φ − C‖_F` subject to `Φ₁₁ + Φ₂₂ ≥ γ`, ignoring `Φ ⪰ 0`.
///
/// When the bound is active the optimality condition is
/// `F²Φ + ΦF² = F C + Cᵀ F + μE`, `E = diag(1, 1, 0, …)`, which is linear in
/// the multiplier `μ ≥ 0`.
pub fn trace_constrained_least_squares(
    f: &DMatrix<f64>,
    c: &DMatrix<f64>,
    gamma: f64,
) -> Option<DMatrix<f64>> {
    let inv = SylvesterInverse::new(f)?;
    let phi0 = inv.apply(&(f * c + c.transpose() * f));
    let slack = phi0[(0, 0)] + phi0[(1, 1)] - gamma;
    if slack >= 0.0 {
        return Some(phi0);
    }
    let mut e = DMatrix::zeros(f.nrows(), f.ncols());
    e[(0, 0)] = 1.0;
    e[(1, 1)] = 1.0;
    let phi_e = inv.apply(&e);
    let mu = -slack / (phi_e[(0, 0)] + phi_e[(1, 1)]);
    Some(phi0 + phi_e * mu)
}
