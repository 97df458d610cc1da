#![allow(dead_code)]

pub mod finite_diff;

use locpriv::scenario::{default_scenario, AodFrame, Scenario};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default geometry with small arrays and few subcarriers.
pub fn small_scenario() -> Scenario {
    let mut s = default_scenario();
    s.m_a = 4;
    s.m_b = 4;
    s.m_e = 4;
    s.subcarriers = 16;
    s
}

/// Random non-degenerate geometry with `k` scatterers and small arrays.
pub fn random_scenario(seed: u64, k: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = default_scenario();
    let point = |rng: &mut ChaCha8Rng| [rng.random_range(-15.0..15.0), rng.random_range(8.0..30.0)];
    s.p_a = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
    s.p_b = point(&mut rng);
    s.p_e = point(&mut rng);
    s.scatterers = (0..k).map(|_| point(&mut rng)).collect();
    s.m_a = rng.random_range(3..=6);
    s.m_b = rng.random_range(2..=5);
    s.m_e = rng.random_range(2..=5);
    s.subcarriers = 12;
    s.phi_b = rng.random_range(0.0..std::f64::consts::TAU);
    s.phi_e = rng.random_range(0.0..std::f64::consts::TAU);
    s.dt_b = rng.random_range(1e-7..2e-6);
    s.dt_e = rng.random_range(1e-7..2e-6);
    s.seed = rng.random();
    s.aod_frame = if seed % 2 == 0 {
        AodFrame::Shared
    } else {
        AodFrame::PerLink
    };
    s
}

/// Random Hermitian PSD matrix of order `n` with rank `rank`.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, rank, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    &a * a.adjoint()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Random well-conditioned symmetric positive definite matrix with
/// heterogeneous diagonal scales, as produced by mixed physical units.
pub fn random_fim(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d + 3, |_, _| rng.random_range(-1.0..1.0));
    let base = &a * a.transpose() + DMatrix::identity(d, d) * 0.1;
    let scales: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
    DMatrix::from_fn(d, d, |i, j| base[(i, j)] * scales[i] * scales[j])
}
