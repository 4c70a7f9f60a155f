use lpnls::spectral::{fourier, free_propagate, inverse_fourier, lp_norm, relative_l2_distance};
use lpnls::{Field, GridSpec};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

/// `dx/√(2π) Σ_j f(x_j) e^{-iξx_j}`, straight from the definition.
fn naive_transform(f: &Field, xi: f64) -> Complex64 {
    let g = f.grid();
    let s: Complex64 = f
        .samples()
        .iter()
        .enumerate()
        .map(|(j, z)| z * Complex64::from_polar(1.0, -xi * g.x(j)))
        .sum();
    s * g.dx() / (2.0 * PI).sqrt()
}

fn field(grid: GridSpec, coeffs: &[(f64, f64)]) -> Field {
    Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let c = (k as f64 - 3.0) * 0.8;
                Complex64::new(a, b) * (-(x - c) * (x - c)).exp() * Complex64::from_polar(1.0, 0.5 * k as f64 * x)
            })
            .sum()
    })
    .unwrap()
}

#[test]
fn fft_matches_definition() {
    let g = GridSpec::new(64, 10.0).unwrap();
    let f = field(g, &[(1.0, 0.2), (-0.3, 0.5), (0.7, -0.1), (0.2, 0.9)]);
    let spec = fourier(&f).unwrap();
    for k in 0..64 {
        let d = (spec.samples()[k] - naive_transform(&f, g.xi(k))).norm();
        assert!(d < 1e-12, "mode {k}: {d}");
    }
}

#[test]
fn propagator_matches_definition() {
    // U(t)f = F⁻¹[e^{-itξ²} f̂] evaluated by direct sums.
    let g = GridSpec::new(64, 10.0).unwrap();
    let f = field(g, &[(0.4, 0.0), (0.0, 1.0), (0.3, 0.3)]);
    let t = 0.37;
    let u = free_propagate(&f, t).unwrap();
    let hat: Vec<Complex64> = (0..64)
        .map(|k| naive_transform(&f, g.xi(k)) * Complex64::from_polar(1.0, -t * g.xi(k) * g.xi(k)))
        .collect();
    for j in 0..64 {
        let x = g.x(j);
        let s: Complex64 = (0..64).map(|k| hat[k] * Complex64::from_polar(1.0, g.xi(k) * x)).sum();
        let expect = s * g.dxi() / (2.0 * PI).sqrt();
        assert!((u.samples()[j] - expect).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spectral_identities(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6),
        t in -2.0f64..2.0,
        s in -2.0f64..2.0,
    ) {
        let g = GridSpec::new(512, 40.0).unwrap();
        let f = field(g, &coeffs);
        let n = f.l2_norm();
        prop_assume!(n > 1e-3);
        let spec = fourier(&f).unwrap();
        let spec_l2 = (spec.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.dxi()).sqrt();
        prop_assert!((spec_l2 - n).abs() < 1e-10 * n);
        prop_assert!(relative_l2_distance(&inverse_fourier(&spec).unwrap(), &f).unwrap() < 1e-10);

        let ut = free_propagate(&f, t).unwrap();
        prop_assert!((ut.l2_norm() - n).abs() < 1e-10 * n);
        let group = relative_l2_distance(&free_propagate(&ut, s).unwrap(), &free_propagate(&f, t + s).unwrap()).unwrap();
        prop_assert!(group < 1e-10);
        prop_assert!(relative_l2_distance(&free_propagate(&ut, -t).unwrap(), &f).unwrap() < 1e-10);
    }

    #[test]
    fn lp_norm_is_homogeneous(c in 0.1f64..10.0, p in 1.0f64..8.0) {
        let g = GridSpec::new(256, 20.0).unwrap();
        let f = field(g, &[(1.0, 0.0), (0.2, -0.4)]);
        let a = lp_norm(&f.scale(Complex64::new(c, 0.0)), p).unwrap();
        let b = c * lp_norm(&f, p).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * b);
    }
}
