//! Central finite-difference oracles for the channel derivatives and the
//! geometry Jacobian. Each returns the worst relative error and where it
//! occurred.

use locpriv::channel::{channel_derivatives, channel_matrix, geometry_to_params, ParamKind};
use locpriv::fim::{build_jacobian, eta};
use locpriv::scenario::{Link, Scenario};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub const LINKS: [Link; 2] = [Link::Bob, Link::Eve];

#[derive(Debug, Clone, Default)]
pub struct Worst {
    pub error: f64,
    pub at: String,
}

impl Worst {
    fn record(&mut self, error: f64, at: impl FnOnce() -> String) {
        if error > self.error || error.is_nan() {
            self.error = error;
            self.at = at();
        }
    }
}

/// `∂H[m]/∂ξ_i` against central differences at `m ∈ {1, M/2, M}`.
pub fn channel_derivative_error(s: &Scenario) -> Worst {
    let mut worst = Worst::default();
    for link in LINKS {
        let params = geometry_to_params(s, link).unwrap();
        let derivs = channel_derivatives(&params, s).unwrap();
        let paths = params.num_paths();
        let xi = params.to_vec();
        for i in 0..xi.len() {
            let step = match ParamKind::ALL[i / paths] {
                ParamKind::Delay => 1e-12,
                ParamKind::Aod | ParamKind::Aoa => 1e-6,
                ParamKind::GainRe | ParamKind::GainIm => 1e-6 * params.alpha(i % paths).norm(),
            };
            let at = |delta: f64| {
                let mut p = params.clone();
                let mut x = xi.clone();
                x[i] += delta;
                p.set_from_slice(&x);
                p
            };
            let (plus, minus) = (at(step), at(-step));
            for m in [1, s.subcarriers / 2, s.subcarriers] {
                let fd: DMatrix<Complex64> = (channel_matrix(&plus, m, s).unwrap()
                    - channel_matrix(&minus, m, s).unwrap())
                    / Complex64::new(2.0 * step, 0.0);
                let exact = derivs.matrix(i, m);
                let err = (&fd - &exact).norm() / exact.norm();
                worst.record(err, || format!("{link} xi[{i}] m {m}"));
            }
        }
    }
    worst
}

/// Moves the η coordinate `j` of `link` by `delta` in the scenario itself.
pub fn perturb(s: &Scenario, link: Link, j: usize, delta: f64) -> Scenario {
    let mut t = s.clone();
    let k = s.num_scatterers();
    match j {
        eta::POS_X => t.p_a[0] += delta,
        eta::POS_Y => t.p_a[1] += delta,
        // Both orientations move so the check is independent of the AOD frame.
        eta::ORIENTATION => {
            t.phi_b += delta;
            t.phi_e += delta;
        }
        j if j == eta::clock_bias(k) => match link {
            Link::Bob => t.dt_b += delta,
            Link::Eve => t.dt_e += delta,
        },
        j => {
            let rel = j - eta::scatterer(0);
            t.scatterers[rel / 2][rel % 2] += delta;
        }
    }
    t
}

/// Geometric rows of `∂ξ/∂η` against central differences of the geometry map,
/// scaled by each row's largest entry. Gain rows must be exact unit rows; a
/// violation is reported as an infinite error.
pub fn jacobian_error(s: &Scenario) -> Worst {
    let mut worst = Worst::default();
    let k = s.num_scatterers();
    for link in LINKS {
        let params = geometry_to_params(s, link).unwrap();
        let jac = build_jacobian(s, &params, link).unwrap().0;
        let paths = params.num_paths();
        let geometric = 3 * paths;
        for j in 0..eta::gain_re(k, 0) {
            let step = match j {
                eta::ORIENTATION => 1e-7,
                j if j == eta::clock_bias(k) => 1e-9,
                _ => 1e-5,
            };
            let plus = geometry_to_params(&perturb(s, link, j, step), link).unwrap().to_vec();
            let minus = geometry_to_params(&perturb(s, link, j, -step), link).unwrap().to_vec();
            for i in 0..geometric {
                let fd = (plus[i] - minus[i]) / (2.0 * step);
                let exact = jac[(i, j)];
                let err = (fd - exact).abs() / jac.row(i).amax();
                worst.record(err, || format!("{link} d xi[{i}] / d eta[{j}]: fd {fd:e} exact {exact:e}"));
            }
        }
        for p in 0..paths {
            for (row, col) in [
                (params.index(ParamKind::GainRe, p), eta::gain_re(k, p)),
                (params.index(ParamKind::GainIm, p), eta::gain_im(k, p)),
            ] {
                let r = jac.row(row);
                let unit = r[col] == 1.0 && r.iter().filter(|v| **v != 0.0).count() == 1;
                if !unit {
                    worst.record(f64::INFINITY, || format!("{link} gain row {row}"));
                }
            }
        }
    }
    worst
}
