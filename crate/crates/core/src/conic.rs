//! Standard-form conic programs and the solver adapter.
//!
//! A [`ConicProgram`] has a flat real decision vector split into named blocks,
//! an objective `cᵀz + ½ zᵀPz` and a list of affine cone memberships
//! (zero, nonnegative, second-order, PSD). Matrix blocks are PSD by
//! construction: a symmetric block stores its upper triangle, a Hermitian
//! block of order `n` stores `n²` reals (diagonal, then `(Re, Im)` of each
//! upper entry, column-major) and is constrained through its realification.
//!
//! The program is handed to Clarabel; Clarabel's PSD cone acts on the scaled
//! upper triangle (`√2` on off-diagonals) in column-major order.
//!
//! # Debug dump format
//!
//! [`ConicProgram::write_sparse_text`] emits one record per line:
//!
//! ```text
//! block <name> <kind> <offset> <len>
//! obj <var> <coef>                 linear objective term
//! quad <i> <j> <value>             upper-triangular entry of P
//! cone <name> <zero|nonneg|soc|psd> <dim>
//! row <cone-row> <var> <coef>      affine expression coefficient
//! const <cone-row> <value>         affine expression constant
//! ```
//!
//! Cone rows are numbered globally in declaration order; PSD rows follow the
//! unscaled column-major upper triangle.

use std::io::{self, Write};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Default solver accuracy.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("solver failed: {0}")]
    Solver(String),
}

/// Sparse affine scalar `constant + Σ coef·z_var`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= c);
        self.constant *= c;
        self
    }

    pub fn add(mut self, other: &AffineExpr) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn sub(self, other: &AffineExpr) -> Self {
        self.add(&other.clone().scaled(-1.0))
    }

    pub fn add_term(&mut self, var: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * z[i]).sum::<f64>()
    }
}

/// Square matrix of affine expressions; symmetric by contract when used in a
/// PSD membership (only the upper triangle is read).
pub type AffineMatrix = Vec<Vec<AffineExpr>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Vector,
    Symmetric(usize),
    Hermitian(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarBlock {
    pub name: String,
    pub kind: BlockKind,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Zero,
    Nonneg,
    SecondOrder,
    Psd(usize),
}

#[derive(Debug, Clone)]
pub struct ConeConstraint {
    pub name: String,
    pub cone: Cone,
    /// For `Psd(n)`: the column-major upper triangle, unscaled.
    pub rows: Vec<AffineExpr>,
}

#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub blocks: Vec<VarBlock>,
    pub num_vars: usize,
    pub objective: Vec<(usize, f64)>,
    /// Upper-triangular entries `(i, j, P_ij)` of the objective's `½ zᵀPz`.
    pub quadratic: Vec<(usize, usize, f64)>,
    pub constraints: Vec<ConeConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Inaccurate,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Inaccurate)
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub status: SolveStatus,
    /// Primal decision vector; index blocks with the program's accessors.
    pub x: Vec<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: u32,
}

/// Largest relative gap or residual at which a stalled solve is still usable.
const STALL_ACCEPT: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: u32,
    /// Prints the solver's iteration log.
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: 200,
            verbose: false,
        }
    }
}

/// Index of `(i, j)`, `i ≤ j`, in a column-major upper triangle.
pub fn triu_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

fn hermitian_offdiag_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    n + 2 * (j * (j - 1) / 2 + i)
}

/// Basis matrices `E_k` with `H = Σ z_k E_k` for the Hermitian block layout.
pub fn hermitian_basis(n: usize) -> Vec<DMatrix<Complex64>> {
    let mut out = vec![DMatrix::zeros(n, n); n * n];
    let one = Complex64::new(1.0, 0.0);
    let j1 = Complex64::new(0.0, 1.0);
    for a in 0..n {
        out[a][(a, a)] = one;
    }
    for j in 1..n {
        for i in 0..j {
            let k = hermitian_offdiag_index(n, i, j);
            out[k][(i, j)] = one;
            out[k][(j, i)] = one;
            out[k + 1][(i, j)] = j1;
            out[k + 1][(j, i)] = -j1;
        }
    }
    out
}

/// Hermitian block layout of `h`, the inverse of summing [`hermitian_basis`].
pub fn hermitian_to_vec(h: &DMatrix<Complex64>) -> Vec<f64> {
    let n = h.nrows();
    let mut v = vec![0.0; n * n];
    for a in 0..n {
        v[a] = h[(a, a)].re;
    }
    for j in 1..n {
        for i in 0..j {
            let k = hermitian_offdiag_index(n, i, j);
            v[k] = h[(i, j)].re;
            v[k + 1] = h[(i, j)].im;
        }
    }
    v
}

pub fn hermitian_from_vec(n: usize, v: &[f64]) -> DMatrix<Complex64> {
    let mut h = DMatrix::zeros(n, n);
    for a in 0..n {
        h[(a, a)] = Complex64::new(v[a], 0.0);
    }
    for j in 1..n {
        for i in 0..j {
            let k = hermitian_offdiag_index(n, i, j);
            h[(i, j)] = Complex64::new(v[k], v[k + 1]);
            h[(j, i)] = Complex64::new(v[k], -v[k + 1]);
        }
    }
    h
}

/// `[[Re H, −Im H], [Im H, Re H]]`.
pub fn realify(h: &DMatrix<Complex64>) -> Result<DMatrix<f64>, ConicError> {
    let asym = (h - h.adjoint()).norm();
    if asym > 1e-12 * h.norm().max(1.0) {
        return Err(ConicError::NotHermitian(asym));
    }
    let n = h.nrows();
    Ok(DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

pub fn derealify(r: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = r.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| Complex64::new(r[(i, j)], r[(i + n, j)]))
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    fn push_block(&mut self, name: &str, kind: BlockKind, len: usize) -> BlockId {
        self.blocks.push(VarBlock {
            name: name.to_string(),
            kind,
            offset: self.num_vars,
            len,
        });
        self.num_vars += len;
        BlockId(self.blocks.len() - 1)
    }

    pub fn block(&self, id: BlockId) -> &VarBlock {
        &self.blocks[id.0]
    }

    pub fn add_vector(&mut self, name: &str, len: usize) -> BlockId {
        self.push_block(name, BlockKind::Vector, len)
    }

    /// Real symmetric PSD block of order `n`.
    pub fn add_symmetric(&mut self, name: &str, n: usize) -> BlockId {
        let id = self.push_block(name, BlockKind::Symmetric(n), n * (n + 1) / 2);
        let m = self.symmetric_expr(id);
        self.add_psd(&format!("{name} psd"), &m);
        id
    }

    /// Hermitian PSD block of order `n`, constrained through its realification.
    pub fn add_hermitian(&mut self, name: &str, n: usize) -> BlockId {
        let id = self.push_block(name, BlockKind::Hermitian(n), n * n);
        let (re, im) = self.hermitian_expr(id);
        let real = (0..2 * n)
            .map(|r| {
                (0..2 * n)
                    .map(|c| {
                        let (i, j) = (r % n, c % n);
                        match (r < n, c < n) {
                            (true, true) | (false, false) => re[i][j].clone(),
                            (true, false) => im[i][j].clone().scaled(-1.0),
                            (false, true) => im[i][j].clone(),
                        }
                    })
                    .collect()
            })
            .collect::<AffineMatrix>();
        self.add_psd(&format!("{name} realified psd"), &real);
        id
    }

    pub fn var(&self, id: BlockId, i: usize) -> usize {
        let b = self.block(id);
        assert!(i < b.len, "index {i} outside block {}", b.name);
        b.offset + i
    }

    pub fn symmetric_expr(&self, id: BlockId) -> AffineMatrix {
        let b = self.block(id);
        let BlockKind::Symmetric(n) = b.kind else {
            panic!("block {} is not symmetric", b.name)
        };
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| AffineExpr::var(b.offset + triu_index(i, j)))
                    .collect()
            })
            .collect()
    }

    /// Real and imaginary parts of every entry of a Hermitian block.
    pub fn hermitian_expr(&self, id: BlockId) -> (AffineMatrix, AffineMatrix) {
        let b = self.block(id);
        let BlockKind::Hermitian(n) = b.kind else {
            panic!("block {} is not Hermitian", b.name)
        };
        let mut re = vec![vec![AffineExpr::default(); n]; n];
        let mut im = vec![vec![AffineExpr::default(); n]; n];
        for a in 0..n {
            re[a][a] = AffineExpr::var(b.offset + a);
        }
        for j in 1..n {
            for i in 0..j {
                let k = b.offset + hermitian_offdiag_index(n, i, j);
                re[i][j] = AffineExpr::var(k);
                re[j][i] = AffineExpr::var(k);
                im[i][j] = AffineExpr::var(k + 1);
                im[j][i] = AffineExpr::var(k + 1).scaled(-1.0);
            }
        }
        (re, im)
    }

    pub fn add_objective(&mut self, var: usize, coef: f64) {
        self.objective.push((var, coef));
    }

    /// Adds `½·weight·z_var²` to the objective.
    pub fn add_quadratic(&mut self, var: usize, weight: f64) {
        self.quadratic.push((var, var, weight));
    }

    /// Adds `½·yᵀ H y` with `y_a = z_{vars[a]}`; `vars` must be distinct and
    /// `h` symmetric.
    pub fn add_quadratic_form(&mut self, vars: &[usize], h: &DMatrix<f64>) {
        for b in 0..vars.len() {
            for a in 0..=b {
                let c = h[(a, b)];
                if c != 0.0 {
                    let (i, j) = (vars[a].min(vars[b]), vars[a].max(vars[b]));
                    self.quadratic.push((i, j, c));
                }
            }
        }
    }

    pub fn add_zero(&mut self, name: &str, rows: Vec<AffineExpr>) {
        self.push_constraint(name, Cone::Zero, rows);
    }

    pub fn add_nonneg(&mut self, name: &str, rows: Vec<AffineExpr>) {
        self.push_constraint(name, Cone::Nonneg, rows);
    }

    /// `‖rest‖₂ ≤ t`.
    pub fn add_soc(&mut self, name: &str, t: AffineExpr, rest: Vec<AffineExpr>) {
        let mut rows = Vec::with_capacity(rest.len() + 1);
        rows.push(t);
        rows.extend(rest);
        self.push_constraint(name, Cone::SecondOrder, rows);
    }

    pub fn add_psd(&mut self, name: &str, m: &AffineMatrix) {
        let n = m.len();
        let mut rows = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in 0..=j {
                rows.push(m[i][j].clone());
            }
        }
        self.push_constraint(name, Cone::Psd(n), rows);
    }

    fn push_constraint(&mut self, name: &str, cone: Cone, rows: Vec<AffineExpr>) {
        self.constraints.push(ConeConstraint {
            name: name.to_string(),
            cone,
            rows,
        });
    }

    pub fn vector_value(&self, z: &[f64], id: BlockId) -> Vec<f64> {
        let b = self.block(id);
        z[b.offset..b.offset + b.len].to_vec()
    }

    pub fn symmetric_value(&self, z: &[f64], id: BlockId) -> DMatrix<f64> {
        let b = self.block(id);
        let BlockKind::Symmetric(n) = b.kind else {
            panic!("block {} is not symmetric", b.name)
        };
        DMatrix::from_fn(n, n, |i, j| z[b.offset + triu_index(i, j)])
    }

    pub fn hermitian_value(&self, z: &[f64], id: BlockId) -> DMatrix<Complex64> {
        let b = self.block(id);
        let BlockKind::Hermitian(n) = b.kind else {
            panic!("block {} is not Hermitian", b.name)
        };
        hermitian_from_vec(n, &z[b.offset..b.offset + b.len])
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * z[i]).sum::<f64>()
            + self
                .quadratic
                .iter()
                .map(|&(i, j, w)| if i == j { 0.5 * w * z[i] * z[i] } else { w * z[i] * z[j] })
                .sum::<f64>()
    }

    /// Largest violation of any cone membership at `z` (negative eigenvalue,
    /// norm excess, or absolute residual).
    pub fn max_cone_violation(&self, z: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let vals: Vec<f64> = c.rows.iter().map(|r| r.eval(z)).collect();
                match c.cone {
                    Cone::Zero => vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                    Cone::Nonneg => vals.iter().fold(0.0_f64, |m, v| m.max(-v)),
                    Cone::SecondOrder => {
                        let norm = vals[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                        (norm - vals[0]).max(0.0)
                    }
                    Cone::Psd(n) => {
                        let m = DMatrix::from_fn(n, n, |i, j| vals[triu_index(i, j)]);
                        (-m.symmetric_eigenvalues().min()).max(0.0)
                    }
                }
            })
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<(), ConicError> {
        for c in &self.constraints {
            let want = match c.cone {
                Cone::Psd(n) => n * (n + 1) / 2,
                Cone::SecondOrder if c.rows.is_empty() => {
                    return Err(ConicError::Malformed(format!("empty cone {}", c.name)))
                }
                _ => c.rows.len(),
            };
            if c.rows.len() != want {
                return Err(ConicError::Malformed(format!(
                    "cone {} has {} rows, expected {want}",
                    c.name,
                    c.rows.len()
                )));
            }
            for r in &c.rows {
                if let Some(&(v, _)) = r.terms.iter().find(|t| t.0 >= self.num_vars) {
                    return Err(ConicError::Malformed(format!(
                        "cone {} references variable {v} of {}",
                        c.name, self.num_vars
                    )));
                }
                if !r.constant.is_finite() || r.terms.iter().any(|t| !t.1.is_finite()) {
                    return Err(ConicError::Malformed(format!(
                        "cone {} has non-finite data",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write_sparse_text(&self, w: &mut impl Write) -> io::Result<()> {
        for b in &self.blocks {
            let kind = match b.kind {
                BlockKind::Vector => "vector".to_string(),
                BlockKind::Symmetric(n) => format!("symmetric{n}"),
                BlockKind::Hermitian(n) => format!("hermitian{n}"),
            };
            writeln!(w, "block {} {kind} {} {}", b.name.replace(' ', "_"), b.offset, b.len)?;
        }
        for &(i, c) in &self.objective {
            writeln!(w, "obj {i} {c:e}")?;
        }
        for &(i, j, c) in &self.quadratic {
            writeln!(w, "quad {i} {j} {c:e}")?;
        }
        let mut row = 0;
        for c in &self.constraints {
            let (kind, dim) = match c.cone {
                Cone::Zero => ("zero", c.rows.len()),
                Cone::Nonneg => ("nonneg", c.rows.len()),
                Cone::SecondOrder => ("soc", c.rows.len()),
                Cone::Psd(n) => ("psd", n),
            };
            writeln!(w, "cone {} {kind} {dim}", c.name.replace(' ', "_"))?;
            for r in &c.rows {
                for &(v, coef) in &r.terms {
                    writeln!(w, "row {row} {v} {coef:e}")?;
                }
                if r.constant != 0.0 {
                    writeln!(w, "const {row} {:e}", r.constant)?;
                }
                row += 1;
            }
        }
        Ok(())
    }
}

/// Solves `p` with Clarabel. Each call owns its solver instance.
pub fn solve(p: &ConicProgram, settings: &SolverSettings) -> Result<SolverReport, ConicError> {
    p.validate()?;
    let n = p.num_vars;
    let mut q = vec![0.0; n];
    for &(i, c) in &p.objective {
        q[i] += c;
    }
    let pmat = CscMatrix::new_from_triplets(
        n,
        n,
        p.quadratic.iter().map(|t| t.0).collect(),
        p.quadratic.iter().map(|t| t.1).collect(),
        p.quadratic.iter().map(|t| t.2).collect(),
    );

    // Clarabel form: A z + s = b, s ∈ K, with s = expr = const + G z.
    let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut cones = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let sqrt2 = std::f64::consts::SQRT_2;
        for (k, r) in c.rows.iter().enumerate() {
            let scale = match c.cone {
                Cone::Psd(_) => {
                    let j = ((((8 * k + 1) as f64).sqrt() - 1.0) / 2.0).floor() as usize;
                    let i = k - j * (j + 1) / 2;
                    if i == j {
                        1.0
                    } else {
                        sqrt2
                    }
                }
                _ => 1.0,
            };
            let row = b.len();
            for &(v, coef) in &r.terms {
                ai.push(row);
                aj.push(v);
                av.push(-coef * scale);
            }
            b.push(r.constant * scale);
        }
        cones.push(match c.cone {
            Cone::Zero => SupportedConeT::ZeroConeT(c.rows.len()),
            Cone::Nonneg => SupportedConeT::NonnegativeConeT(c.rows.len()),
            Cone::SecondOrder => SupportedConeT::SecondOrderConeT(c.rows.len()),
            Cone::Psd(n) => SupportedConeT::PSDTriangleConeT(n),
        });
    }
    let amat = CscMatrix::new_from_triplets(b.len(), n, ai, aj, av);

    // Stalled factorizations are retried with heavier regularization, then
    // without equilibration. If every attempt stalls, the best stalled iterate
    // is kept when it is within STALL_ACCEPT of optimality.
    let mut last_failure = String::new();
    let mut stalled: Option<(f64, SolverReport)> = None;
    for attempt in 0..3 {
        let mut builder = DefaultSettingsBuilder::default();
        builder
            .verbose(settings.verbose)
            .tol_feas(settings.tol)
            .tol_gap_abs(settings.tol)
            .tol_gap_rel(settings.tol)
            .max_iter(settings.max_iter);
        if attempt >= 1 {
            builder
                .max_step_fraction(0.95)
                .static_regularization_constant(1e-7);
        }
        if attempt >= 2 {
            builder.equilibrate_enable(false);
        }
        let clarabel_settings = builder
            .build()
            .map_err(|e| ConicError::Solver(format!("{e:?}")))?;
        let mut solver = DefaultSolver::new(&pmat, &q, &amat, &b, &cones, clarabel_settings)
            .map_err(|e| ConicError::Solver(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved | SolverStatus::InsufficientProgress => {
                SolveStatus::Inaccurate
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
            other => {
                last_failure = format!("{other:?}");
                let gap = (sol.obj_val - sol.obj_val_dual).abs() / sol.obj_val.abs().max(1.0);
                let score = gap.max(sol.r_prim).max(sol.r_dual);
                if score.is_finite() && stalled.as_ref().is_none_or(|(best, _)| score < *best) {
                    let report = SolverReport {
                        status: SolveStatus::Inaccurate,
                        x: sol.x.clone(),
                        objective: p.objective_value(&sol.x),
                        primal_residual: sol.r_prim,
                        dual_residual: sol.r_dual,
                        iterations: sol.iterations,
                    };
                    stalled = Some((score, report));
                }
                continue;
            }
        };
        return Ok(SolverReport {
            status,
            x: sol.x.clone(),
            objective: p.objective_value(&sol.x),
            primal_residual: sol.r_prim,
            dual_residual: sol.r_dual,
            iterations: sol.iterations,
        });
    }
    match stalled {
        Some((score, report)) if score <= STALL_ACCEPT => Ok(report),
        _ => Err(ConicError::Solver(last_failure)),
    }
}

/// Epigraph of `tr(U⁻¹)` for a 2×2 symmetric block `u`: adds `T` with
/// `[[T, I], [I, U]] ⪰ 0` and `weight·tr(T)` to the objective.
pub fn epigraph_trace_inverse(p: &mut ConicProgram, u: BlockId, weight: f64) -> BlockId {
    let t = p.add_symmetric("T", 2);
    let te = p.symmetric_expr(t);
    let ue = p.symmetric_expr(u);
    let eye = |i: usize, j: usize| AffineExpr::constant(if i == j { 1.0 } else { 0.0 });
    let m: AffineMatrix = (0..4)
        .map(|r| {
            (0..4)
                .map(|c| match (r < 2, c < 2) {
                    (true, true) => te[r][c].clone(),
                    (false, false) => ue[r - 2][c - 2].clone(),
                    (true, false) => eye(r, c - 2),
                    (false, true) => eye(r - 2, c),
                })
                .collect()
        })
        .collect();
    p.add_psd("trace-inverse epigraph", &m);
    for i in 0..2 {
        p.add_objective(p.var(t, triu_index(i, i)), weight);
    }
    t
}

/// Epigraph of a Frobenius norm: adds scalar `t ≥ ‖entries‖₂`. With `squared`
/// the objective gains `weight·t²`, otherwise `weight·t`.
pub fn epigraph_frobenius(
    p: &mut ConicProgram,
    entries: Vec<AffineExpr>,
    weight: f64,
    squared: bool,
) -> usize {
    let t = p.add_vector("frobenius epigraph", 1);
    let tv = p.var(t, 0);
    p.add_soc("frobenius cone", AffineExpr::var(tv), entries);
    if squared {
        p.add_quadratic(tv, 2.0 * weight);
    } else {
        p.add_objective(tv, weight);
    }
    tv
}
