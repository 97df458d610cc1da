mod common;

use common::{random_psd, rel_diff, small_scenario};
use locpriv::benchmarks::crb_min_unconstrained;
use locpriv::design::DesignProblem;
use locpriv::pdd::{extract_beamformers, ExtractionMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn decomposition_is_exact_at_the_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n, r) in [(6, 1), (8, 3), (16, 5), (16, 16)] {
        let v = random_psd(&mut rng, n, r);
        let b = extract_beamformers(&v, r, ExtractionMode::Decomposition, None).unwrap();
        assert_eq!(b.w.shape(), (n, r));
        assert!(b.reconstruction_error < 1e-9, "n {n} r {r}: {}", b.reconstruction_error);
        let direct = (&b.w * b.w.adjoint() - &v).norm() / v.norm();
        assert!((direct - b.reconstruction_error).abs() < 1e-15);
    }
}

#[test]
fn extra_beams_are_zero_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let v = random_psd(&mut rng, 6, 2);
    let b = extract_beamformers(&v, 6, ExtractionMode::Decomposition, None).unwrap();
    assert!(b.reconstruction_error < 1e-10);
    for c in 2..6 {
        assert!(b.w.column(c).norm() < 1e-6 * b.w.column(0).norm());
    }
}

#[test]
fn decomposed_beams_reproduce_both_crbs() {
    let p = DesignProblem::full_covariance(&small_scenario()).unwrap();
    let opt = crb_min_unconstrained(&p).unwrap();
    let v = p.covariance(&opt.x);
    let b = extract_beamformers(&v, v.nrows(), ExtractionMode::Decomposition, None).unwrap();
    let ww = &b.w * b.w.adjoint();
    assert!(rel_diff(p.bob_bundle.crb(&ww).unwrap(), p.bob_bundle.crb(&v).unwrap()) < 1e-6);
    assert!(rel_diff(p.eve_bundle.crb(&ww).unwrap(), p.eve_bundle.crb(&v).unwrap()) < 1e-6);
}

#[test]
fn randomization_keeps_power_and_is_seeded() {
    let p = DesignProblem::full_covariance(&small_scenario()).unwrap();
    let opt = crb_min_unconstrained(&p).unwrap();
    let v = p.covariance(&opt.x);
    let mode = ExtractionMode::Randomization {
        seed: 9,
        candidates: 50,
        gamma: 0.0,
    };
    let a = extract_beamformers(&v, 2, mode, Some(&p)).unwrap();
    let b = extract_beamformers(&v, 2, mode, Some(&p)).unwrap();
    assert_eq!(a.w, b.w);
    assert!(rel_diff(a.w.norm_squared(), v.trace().re) < 1e-12);
    let other = ExtractionMode::Randomization {
        seed: 10,
        candidates: 50,
        gamma: 0.0,
    };
    let c = extract_beamformers(&v, 2, other, Some(&p)).unwrap();
    assert_ne!(a.w, c.w);
    // Randomization cannot beat the relaxation it samples from.
    let bob = p.bob_bundle.crb(&(&a.w * a.w.adjoint())).unwrap();
    assert!(bob >= opt.bob_crb * (1.0 - 1e-6));
}

#[test]
fn randomization_requires_the_problem() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let v = random_psd(&mut rng, 4, 2);
    let mode = ExtractionMode::Randomization {
        seed: 0,
        candidates: 4,
        gamma: 0.0,
    };
    assert!(extract_beamformers(&v, 1, mode, None).is_err());
    assert!(extract_beamformers(&v, 0, ExtractionMode::Decomposition, None).is_err());
}
