use std::f64::consts::{FRAC_PI_4, PI};

use etpl_core::dynamics::classical_mixture;
use etpl_core::hilbert::{annihilation, cat_state, coherent_state, creation};
use etpl_core::phase_space::{
    default_axis, linspace, photon_distribution, position_density, wigner, wigner_point, PhaseSpaceError,
};
use etpl_core::{Complex64, DensityMatrix, FockDim, StateVector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dim(n: usize) -> FockDim {
    FockDim::new(n).unwrap()
}

fn random_state(d: usize, a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> DensityMatrix {
    let make = |v: &[(f64, f64)]| {
        let v = DVector::from_iterator(d, v.iter().map(|&(re, im)| Complex64::new(re, im)));
        let n = v.norm();
        DensityMatrix::from_pure(&StateVector::from_amplitudes(dim(d), v / Complex64::new(n, 0.0)))
    };
    DensityMatrix::mixture(p, &make(a), &make(b)).unwrap()
}

fn amps(d: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-2)
}

/// `W(α) = tr[ρ D(α) Π D(α)†] / π`, with the displacement built by matrix
/// exponential in a larger basis and then cut back to `d` levels.
fn displaced_parity(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let d = rho.dim().get();
    let big = dim(d + 60);
    let alpha = Complex64::new(x, p) / 2.0f64.sqrt();
    let gen = creation(big).matrix() * alpha - annihilation(big).matrix() * alpha.conj();
    let disp = gen.exp();
    let parity = DMatrix::from_fn(d + 60, d + 60, |m, n| {
        if m != n {
            Complex64::new(0.0, 0.0)
        } else if m % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        }
    });
    let full = &disp * parity * disp.adjoint();
    let block = full.view((0, 0), (d, d));
    (rho.matrix() * block).trace().re / PI
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recurrence_matches_the_displaced_parity_oracle(
        a in amps(8), b in amps(8), w in 0.0f64..1.0, x in -2.5f64..2.5, p in -2.5f64..2.5,
    ) {
        let rho = random_state(8, &a, &b, w);
        let fast = wigner_point(&rho, x, p);
        let slow = displaced_parity(&rho, x, p);
        prop_assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
    }

    #[test]
    fn p_integral_is_the_position_density(a in amps(8), b in amps(8), w in 0.0f64..1.0) {
        let rho = random_state(8, &a, &b, w);
        let xs = linspace(-3.0, 3.0, 31);
        let ps = linspace(-9.0, 9.0, 721);
        let grid = wigner(&rho, &xs, &ps).unwrap();
        for (x, m) in xs.iter().zip(grid.x_marginal()) {
            let exact = position_density(&rho, *x);
            prop_assert!((m - exact).abs() < 1e-8, "x = {x}: {m} vs {exact}");
        }
    }

    #[test]
    fn photon_numbers_sum_to_one(a in amps(12), b in amps(12), w in 0.0f64..1.0) {
        let rho = random_state(12, &a, &b, w);
        let dist = photon_distribution(&rho);
        prop_assert!((dist.total() - 1.0).abs() < 1e-12);
        prop_assert!(dist.probabilities.iter().all(|&q| q >= 0.0));
    }
}

#[test]
fn coherent_state_is_poissonian_and_gaussian() {
    let d = dim(40);
    let alpha = Complex64::new(1.0, -0.5);
    let rho = DensityMatrix::from_pure(&coherent_state(alpha, d).unwrap());
    let dist = photon_distribution(&rho);
    let n = alpha.norm_sqr();
    let mut poisson = (-n).exp();
    for (k, &q) in dist.probabilities.iter().enumerate().take(15) {
        assert!((q - poisson).abs() < 1e-12, "p_{k}");
        poisson *= n / (k + 1) as f64;
    }
    let (x0, p0) = (2.0f64.sqrt() * alpha.re, 2.0f64.sqrt() * alpha.im);
    for (x, p) in [(0.0, 0.0), (1.0, 1.0), (x0, p0), (x0 + 0.5, p0 - 0.3)] {
        let exact = (-(x - x0).powi(2) - (p - p0).powi(2)).exp() / PI;
        assert!((wigner_point(&rho, x, p) - exact).abs() < 1e-12);
    }
}

#[test]
fn two_photon_loss_lobes_lie_on_the_diagonal() {
    let d = dim(40);
    let alpha = Complex64::from_polar(2.0, -FRAC_PI_4);
    let axis = default_axis();
    for rho in [
        classical_mixture(alpha, d).unwrap(),
        DensityMatrix::from_pure(&cat_state(alpha, 1, d).unwrap()),
    ] {
        let grid = wigner(&rho, &axis, &axis).unwrap();
        let angle = grid.lobe_angle(1.5).unwrap();
        assert!((angle + FRAC_PI_4).abs() < 0.05, "lobe angle {angle}");
        // The lobes leak past the default window, so normalise on a wider one.
        let wide = linspace(-7.0, 7.0, 169);
        let total = wigner(&rho, &wide, &wide).unwrap().integral();
        assert!((total - 1.0).abs() < 1e-6, "integral {total}");
    }
}

#[test]
fn odd_cat_is_negative_at_the_origin() {
    let d = dim(30);
    let rho = DensityMatrix::from_pure(&cat_state(Complex64::new(1.5, 0.0), -1, d).unwrap());
    assert!((PI * wigner_point(&rho, 0.0, 0.0) + 1.0).abs() < 1e-10);
    assert!((photon_distribution(&rho).odd_population() - 1.0).abs() < 1e-12);
}

#[test]
fn coarse_grids_are_refused() {
    let rho = DensityMatrix::vacuum(dim(60));
    let coarse = linspace(-5.0, 5.0, 41);
    assert!(matches!(
        wigner(&rho, &coarse, &coarse),
        Err(PhaseSpaceError::Aliasing { .. })
    ));
}
