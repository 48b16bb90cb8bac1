mod common;

use common::{convolution_oracle, max_diff};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsns::spectral::{
    nonlinear_term, Complex64, Lattice, RawSpectrum, Sobolev, SpectralField,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn field(lat: &Lattice, seed: u64, decay: f64) -> SpectralField {
    SpectralField::random(lat, &mut ChaCha8Rng::seed_from_u64(seed), decay, 1.0)
}

fn raw(lat: &Lattice, seed: u64) -> RawSpectrum {
    RawSpectrum::random(lat, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn lattice_n8() -> Lattice {
    Lattice::periodic(8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn leray_is_idempotent_and_solenoidal(seed in any::<u64>()) {
        let lat = lattice_n8();
        let p1 = raw(&lat, seed).leray_project();
        let p2 = p1.to_raw().leray_project();
        prop_assert!(max_diff(&p1, &p2) <= 1e-12 * p1.norm());
        prop_assert!(p1.divergence_residual() <= 1e-12 * p1.norm());
    }

    #[test]
    fn leray_is_self_adjoint(s1 in any::<u64>(), s2 in any::<u64>()) {
        let lat = lattice_n8();
        let (r, q) = (raw(&lat, s1), raw(&lat, s2));
        let lhs = r.leray_project().to_raw().inner(&q);
        let rhs = r.inner(&q.leray_project().to_raw());
        let scale = r.inner(&r).sqrt() * q.inner(&q).sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn fractional_powers_form_a_semigroup(seed in any::<u64>(), a in 0.0f64..2.0, b in 0.0f64..2.0, len in 1.0f64..10.0) {
        let lat = Lattice::new(len, 8, 2.0 / 3.0).unwrap();
        let u = field(&lat, seed, 1.0);
        let lhs = u.fractional_power(b).fractional_power(a);
        let rhs = u.fractional_power(a + b);
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-10 * rhs.norm());
    }

    #[test]
    fn poincare_inequality(seed in any::<u64>(), len in 1.0f64..10.0) {
        let lat = Lattice::new(len, 8, 2.0 / 3.0).unwrap();
        let l1 = lat.lambda1().powf(1.25);
        let u = field(&lat, seed, 0.5);
        let lhs = u.sobolev_norm(Sobolev::H54).powi(2);
        let rhs = l1 * u.norm().powi(2);
        prop_assert!(lhs > rhs * (1.0 + 1e-10));

        // equality on the |j| = 1 shell
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = RawSpectrum::zeros(&lat);
        for j in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            let v = RawSpectrum::random(&lat, &mut rng).get(j);
            r.set(j, v);
        }
        let w = r.leray_project();
        let lhs = w.sobolev_norm(Sobolev::H54).powi(2);
        let rhs = l1 * w.norm().powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn advection_is_skew(seed in any::<u64>()) {
        let lat = lattice_n8();
        let u = field(&lat, seed, 1.0);
        let b = nonlinear_term(&u, &u).unwrap();
        let buu = b.inner(&u);
        prop_assert!(buu.abs() <= 1e-10 * b.norm() * u.norm(), "(B(u,u),u) = {buu}");
        prop_assert!(b.divergence_residual() <= 1e-12 * b.norm());
    }

    #[test]
    fn parseval_on_the_grid(seed in any::<u64>(), decay in 0.0f64..2.0) {
        let lat = lattice_n8();
        let u = field(&lat, seed, decay);
        let phys = u.to_grid(lat.grid());
        let pts = phys[0].len() as f64;
        let mean_sq: f64 = (0..phys[0].len()).map(|p| (0..3).map(|i| phys[i][p].powi(2)).sum::<f64>()).sum::<f64>() / pts;
        prop_assert!((mean_sq - u.norm().powi(2)).abs() <= 1e-12 * mean_sq);
    }

    #[test]
    fn nonlinear_term_matches_convolution(n in 1usize..=4, s1 in any::<u64>(), s2 in any::<u64>()) {
        let lat = Lattice::periodic(n).unwrap();
        let (u, v) = (field(&lat, s1, 0.5), field(&lat, s2, 0.5));
        let fast = nonlinear_term(&u, &v).unwrap();
        let slow = convolution_oracle(&u, &v);
        let scale = slow.coeffs().iter().flat_map(|x| x.iter().map(|z| z.norm())).fold(0.0, f64::max);
        prop_assert!(max_diff(&fast, &slow) <= 1e-12 * scale, "{} vs scale {}", max_diff(&fast, &slow), scale);
    }
}

#[test]
fn convolution_oracle_on_every_small_lattice() {
    for n in 1..=4 {
        let lat = Lattice::periodic(n).unwrap();
        for seed in 0..3 {
            let (u, v) = (field(&lat, seed, 0.0), field(&lat, seed + 100, 0.0));
            let fast = nonlinear_term(&u, &v).unwrap();
            let slow = convolution_oracle(&u, &v);
            let scale = slow.coeffs().iter().flat_map(|x| x.iter().map(|z| z.norm())).fold(0.0, f64::max);
            assert!(max_diff(&fast, &slow) <= 1e-12 * scale, "N={n} seed={seed}");
        }
    }
}

#[test]
fn single_pair_products_hit_sum_and_difference_modes() {
    let lat = Lattice::periodic(4).unwrap();
    let z = c(0.0, 0.0);
    let (j1, j2) = ([1, 0, 0], [0, 1, 1]);
    let u = SpectralField::single_pair(&lat, j1, [z, c(0.3, -0.2), z]);
    let v = SpectralField::single_pair(&lat, j2, [c(0.5, 0.1), z, z]);
    let b = nonlinear_term(&u, &v).unwrap();
    let allowed = [[1, 1, 1], [-1, -1, -1], [1, -1, -1], [-1, 1, 1]];
    for (j, x) in lat.modes().iter().zip(b.coeffs()) {
        if !allowed.contains(j) {
            assert!(x.iter().all(|z| z.norm() < 1e-15), "unexpected mode {j:?}");
        }
    }
    assert!(max_diff(&b, &convolution_oracle(&u, &v)) < 1e-15);
    assert!(b.norm() > 0.0);
}

#[test]
fn bilinear_zero() {
    let lat = Lattice::periodic(3).unwrap();
    let u = field(&lat, 1, 1.0);
    let zero = SpectralField::zeros(&lat);
    assert_eq!(nonlinear_term(&u, &zero).unwrap().norm(), 0.0);
    assert_eq!(nonlinear_term(&zero, &u).unwrap().norm(), 0.0);
}

#[test]
fn multiplier_arithmetic() {
    let lat = Lattice::periodic(4).unwrap();
    let z = c(0.0, 0.0);
    let a = 0.7;
    // |c|² = a²/2 per conjugate partner gives total mass a²
    let u = SpectralField::single_pair(&lat, [0, 2, 0], [c(a / 2f64.sqrt(), 0.0), z, z]);
    assert!((u.norm() - a).abs() < 1e-15);
    let s52 = u.sobolev_norm(Sobolev::H52);
    assert!((s52 - a * 4f64.powf(1.25)).abs() < 1e-14);
    assert!((s52 / a - 5.656854).abs() < 1e-6);
    let w = SpectralField::single_pair(&lat, [1, 0, 0], [z, c(0.0, a / 2f64.sqrt()), z]);
    assert!((w.sobolev_norm(Sobolev::H52) - a).abs() < 1e-15);
    assert_eq!(SpectralField::zeros(&lat).sobolev_norm(Sobolev(3.0)), 0.0);
}
