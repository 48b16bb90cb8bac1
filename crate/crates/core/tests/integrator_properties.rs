use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsns::integrator::{step_deterministic_pde, step_random_pde, Integrator, SimParams};
use tsns::noise::{ou_trajectory, sample_two_sided_wiener, OuTrajectory};
use tsns::spectral::{nonlinear_self, Complex64, Lattice, Sobolev, SpectralField};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random(lat: &Lattice, seed: u64, radius: f64) -> SpectralField {
    SpectralField::random(lat, &mut ChaCha8Rng::seed_from_u64(seed), 1.0, radius)
}

fn kolmogorov(lat: &Lattice, amp: f64) -> SpectralField {
    let z = c(0.0, 0.0);
    SpectralField::single_pair(lat, [0, 1, 0], [c(0.0, -amp / 2.0), z, z])
}

fn shear(lat: &Lattice, j: [i32; 3], amp: f64) -> SpectralField {
    let z = c(0.0, 0.0);
    SpectralField::single_pair(lat, j, [z, c(0.0, -amp / 2.0), z])
}

fn run_det(p: &SimParams, u0: &SpectralField, t: f64) -> SpectralField {
    let it = Integrator::new(p).unwrap();
    it.run_deterministic(it.steps_in(t).unwrap(), u0, None).unwrap()
}

/// `∫_{t0}^{t1} e^{−a (T − s)} ℓ(s) ds` with `ℓ` linear between `z0` and `z1`,
/// by composite Simpson.
fn simpson_segment(a: f64, big_t: f64, t0: f64, t1: f64, z0: f64, z1: f64) -> f64 {
    let m = 200;
    let h = (t1 - t0) / m as f64;
    let g = |s: f64| (-a * (big_t - s)).exp() * (z0 + (z1 - z0) * (s - t0) / (t1 - t0));
    let mut acc = g(t0) + g(t1);
    for k in 1..m {
        acc += g(t0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn noise_driven_modes_follow_duhamel_quadrature() {
    let lat = Lattice::periodic(4).unwrap();
    for (nu, j) in [(1.0, [2, 0, 0]), (0.5, [0, 0, 3])] {
        let z = c(0.0, 0.0);
        // a shear flow: the velocity is orthogonal to its wavevector, so B vanishes
        let h = if j[0] != 0 {
            shear(&lat, j, 0.1)
        } else {
            SpectralField::single_pair(&lat, j, [c(0.0, -0.05), z, z])
        };
        let dt = 0.01;
        let p = SimParams::new(nu, &lat, dt).with_noise(h.clone());
        let traj = ou_trajectory(&sample_two_sided_wiener(3, 0.0, 1.0, dt).unwrap());
        let it = Integrator::new(&p).unwrap();
        let v = it.run(&traj, 0, 100, &SpectralField::zeros(&lat), None).unwrap();

        let mu = lat.wavevector(j).iter().map(|k| k * k).sum::<f64>();
        let a = nu * mu.powf(1.25);
        let mut integral = 0.0;
        for k in 0..100 {
            let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
            integral += simpson_segment(a, 1.0, t0, t1, traj.at_index(k), traj.at_index(k + 1));
        }
        let hj = h.coeff(j);
        let got = v.coeff(j);
        for i in 0..3 {
            let want = hj[i] * (1.0 - a) * integral;
            let err = (got[i] - want).norm();
            assert!(err <= 1e-6 * want.norm() + 1e-300, "nu={nu} j={j:?} component {i}: {} vs {}", got[i], want);
        }
        // all other modes stay at zero
        assert!((v.norm() - v.coeff(j).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() * 2f64.sqrt()).abs() < 1e-14);
    }
}

#[test]
fn deterministic_run_is_second_order() {
    let lat = Lattice::periodic(8).unwrap();
    let p = SimParams::new(1.0, &lat, 0.02).with_forcing(kolmogorov(&lat, 2.0));
    let u0 = random(&lat, 5, 2.0);
    let t = 0.5;
    let reference = run_det(&p.clone().with_dt(0.01 / 8.0), &u0, t);
    let e1 = (&run_det(&p.clone().with_dt(0.02), &u0, t) - &reference).norm();
    let e2 = (&run_det(&p.clone().with_dt(0.01), &u0, t) - &reference).norm();
    let order = (e1 / e2).log2();
    println!("errors {e1:e} {e2:e}, order {order:.3}");
    assert!((order - 2.0).abs() <= 0.2, "measured order {order}");
}

#[test]
fn linear_part_is_exact_for_any_dt() {
    let lat = Lattice::periodic(8).unwrap();
    let f = random(&lat, 11, 0.5);
    let u0 = random(&lat, 12, 1.0);
    for dt in [0.3, 0.05] {
        let mut p = SimParams::new(0.7, &lat, dt).with_forcing(f.clone());
        p.advection = false;
        let u = run_det(&p, &u0, 0.6);
        for ((j, got), (a0, fj)) in lat.modes().iter().zip(u.coeffs()).zip(u0.coeffs().iter().zip(f.coeffs())) {
            let mu: f64 = lat.wavevector(*j).iter().map(|k| k * k).sum();
            let a = 0.7 * mu.powf(1.25);
            let e = (-a * 0.6).exp();
            for i in 0..3 {
                let want = a0[i] * e + fj[i] * ((1.0 - e) / a);
                assert!((got[i] - want).norm() <= 1e-12 * (a0[i].norm() + fj[i].norm() / a).max(1e-300) + 1e-300,
                    "dt={dt} j={j:?}");
            }
        }
    }
}

#[test]
fn unforced_energy_never_increases() {
    let lat = Lattice::periodic(8).unwrap();
    let p = SimParams::new(1.0, &lat, 0.01);
    let it = Integrator::new(&p).unwrap();
    let mut u = random(&lat, 21, 5.0);
    for _ in 0..200 {
        let next = it.step(&u, 0.0, 0.0);
        assert!(next.norm() <= u.norm() * (1.0 + 1e-10));
        assert!(next.divergence_residual() <= 1e-12 * next.norm().max(1e-300));
        u = next;
    }
}

/// Largest per-step excess of `‖u_{n+1}‖² − ‖u_n‖²` over
/// `2dt(f, u_n) − 2dt ν‖A^{5/8}u_n‖²`, and its largest absolute value.
fn energy_residual(p: &SimParams, u0: &SpectralField, t: f64) -> (f64, f64) {
    let it = Integrator::new(p).unwrap();
    let mut u = u0.clone();
    let (mut excess, mut worst) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..it.steps_in(t).unwrap() {
        let next = it.step(&u, 0.0, 0.0);
        let lhs = next.norm().powi(2) - u.norm().powi(2);
        let rhs = 2.0 * p.dt * p.forcing.inner(&u) - 2.0 * p.dt * p.nu * u.sobolev_norm(Sobolev::H54).powi(2);
        excess = excess.max(lhs - rhs);
        worst = worst.max((lhs - rhs).abs());
        u = next;
    }
    (excess, worst)
}

/// `max |E''|` along a fine reference run, `E' = 2(f, u) − 2ν‖A^{5/8}u‖²`,
/// by differencing `E'`.
fn max_energy_curvature(p: &SimParams, u0: &SpectralField, t: f64, fine: f64) -> f64 {
    let q = p.clone().with_dt(fine);
    let it = Integrator::new(&q).unwrap();
    let rate = |u: &SpectralField| 2.0 * q.forcing.inner(u) - 2.0 * q.nu * u.sobolev_norm(Sobolev::H54).powi(2);
    let mut u = u0.clone();
    let mut rates = vec![rate(&u)];
    for _ in 0..it.steps_in(t).unwrap() {
        u = it.step(&u, 0.0, 0.0);
        rates.push(rate(&u));
    }
    rates.windows(2).map(|w| ((w[1] - w[0]) / fine).abs()).fold(0.0, f64::max)
}

#[test]
fn energy_balance_holds_to_second_order() {
    let lat = Lattice::periodic(8).unwrap();
    let p = SimParams::new(1.0, &lat, 0.01).with_forcing(kolmogorov(&lat, 2.0));
    // smooth data: spectrum (1 + |j|²)^{-3}
    let u0 = SpectralField::random(&lat, &mut ChaCha8Rng::seed_from_u64(31), 3.0, 2.0);
    let t = 0.4;
    let curvature = max_energy_curvature(&p, &u0, t, 0.0005);
    let (x1, r1) = energy_residual(&p, &u0, t);
    let (x2, r2) = energy_residual(&p.clone().with_dt(0.005), &u0, t);
    println!("excess {x1:e} {x2:e}; |residual| {r1:e} {r2:e}; max|E''| {curvature:e}");
    // Taylor remainder of ‖u‖² over one step
    for (r, dt) in [(r1, 0.01), (r2, 0.005)] {
        let bound = 0.5 * dt * dt * curvature;
        assert!(r <= bound, "residual {r:e} above dt²/2·max|E''| = {bound:e}");
    }
    assert!(r1 / r2 >= 3.0, "residual shrank by only {}", r1 / r2);
}

#[test]
fn random_step_without_noise_equals_deterministic_step() {
    let lat = Lattice::periodic(4).unwrap();
    let z = c(0.0, 0.0);
    let u = SpectralField::single_pair(&lat, [1, 1, 0], [c(0.3, 0.1), c(-0.3, -0.1), z]);
    let p = SimParams::new(1.0, &lat, 0.05).with_forcing(kolmogorov(&lat, 1.0));
    let a = step_deterministic_pde(&u, &p).unwrap();
    let b = step_random_pde(&u, 0.4, -1.2, &p).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_pair_without_forcing_decays_exactly() {
    let lat = Lattice::periodic(4).unwrap();
    let z = c(0.0, 0.0);
    let u0 = SpectralField::single_pair(&lat, [0, 0, 1], [c(0.2, 0.1), z, z]);
    let p = SimParams::new(1.0, &lat, 0.05);
    let u = run_det(&p, &u0, 2.0);
    let want = (-2.0f64).exp();
    assert!((u.coeff([0, 0, 1])[0] - u0.coeff([0, 0, 1])[0] * want).norm() <= 1e-12 * want);
}

#[test]
fn noise_dependence_of_pullback() {
    let lat = Lattice::periodic(4).unwrap();
    let v0 = random(&lat, 1, 1.0);
    let base = SimParams::new(1.0, &lat, 0.02).with_forcing(kolmogorov(&lat, 1.0));
    let solve = |p: &SimParams, seed: u64| {
        let traj = ou_trajectory(&sample_two_sided_wiener(seed, -1.0, 0.0, 0.02).unwrap());
        tsns::integrator::pullback_solve(p, &traj, 1.0, &v0).unwrap()
    };
    let noisy = base.clone().with_noise(shear(&lat, [1, 0, 0], 0.3));
    assert!((&solve(&noisy, 1) - &solve(&noisy, 2)).norm() > 1e-6);
    assert_eq!(solve(&base, 1), solve(&base, 2));
    assert_eq!(solve(&noisy, 1), v0_stable(&noisy, &v0));

    fn v0_stable(p: &SimParams, v0: &SpectralField) -> SpectralField {
        let traj = ou_trajectory(&sample_two_sided_wiener(1, -1.0, 0.0, 0.02).unwrap());
        tsns::integrator::pullback_solve(p, &traj, 1.0, v0).unwrap()
    }
}

/// Conjugated run on the grid `k·stride` of a fine z path; returns `‖u‖` at
/// every coarse time, `u = v + z h`.
fn conjugated_norms(p: &SimParams, z: &[f64], stride: usize, u0: &SpectralField) -> Vec<f64> {
    let it = Integrator::new(p).unwrap();
    let mut v = u0.clone();
    v.axpy(-z[0], &p.noise);
    let report = |v: &SpectralField, zk: f64| {
        let mut u = v.clone();
        u.axpy(zk, &p.noise);
        u.norm()
    };
    let mut out = vec![report(&v, z[0])];
    for k in (0..z.len() - 1).step_by(stride) {
        v = it.step(&v, z[k], z[k + stride]);
        out.push(report(&v, z[k + stride]));
    }
    out
}

/// Euler-Maruyama for `du = (−νA^{5/4}u − B(u) + f) dt + h dω` on the fine
/// grid, with `dω` recovered from the same z path through `dz = −z dt + dω`.
fn euler_maruyama_norms(p: &SimParams, z: &[f64], fine_dt: f64, stride: usize, u0: &SpectralField) -> Vec<f64> {
    let mut u = u0.clone();
    let mut out = vec![u.norm()];
    for k in 0..z.len() - 1 {
        let dw = z[k + 1] - z[k] + z[k] * fine_dt;
        let mut drift = u.fractional_power(1.25) * -p.nu;
        drift.axpy(-1.0, &nonlinear_self(&u));
        drift.axpy(1.0, &p.forcing);
        u.axpy(fine_dt, &drift);
        u.axpy(dw, &p.noise);
        if (k + 1) % stride == 0 {
            out.push(u.norm());
        }
    }
    out
}

fn fine_z(seed: u64, t: f64, dt: f64) -> OuTrajectory {
    ou_trajectory(&sample_two_sided_wiener(seed, 0.0, t, dt).unwrap())
}

#[test]
fn conjugation_agrees_with_euler_maruyama() {
    let lat = Lattice::periodic(4).unwrap();
    let dt = 0.01;
    let fine = dt / 20.0;
    let t = 1.0;
    let traj = fine_z(17, t, fine);
    let z = traj.values();
    let p = SimParams::new(1.0, &lat, dt)
        .with_forcing(kolmogorov(&lat, 1.0))
        .with_noise(shear(&lat, [1, 0, 0], 0.5));
    let u0 = random(&lat, 4, 1.0);

    // coarse conjugated run at dt, its step-halved twin at dt/2
    let a = conjugated_norms(&p, z, 20, &u0);
    let a_half = conjugated_norms(&p.clone().with_dt(dt / 2.0), z, 10, &u0);
    // Euler-Maruyama at dt/10 and dt/20
    let em = euler_maruyama_norms(&p, z, fine, 20, &u0);
    let em_coarse = {
        let zc: Vec<f64> = z.iter().step_by(2).copied().collect();
        euler_maruyama_norms(&p, &zc, 2.0 * fine, 10, &u0)
    };
    let sup = |x: &[f64], y: &[f64], sx: usize, sy: usize| {
        (0..a.len()).map(|k| (x[k * sx] - y[k * sy]).abs()).fold(0.0, f64::max)
    };
    let tol_conj = sup(&a, &a_half, 1, 2);
    let tol_em = sup(&em_coarse, &em, 1, 1);
    let tol = tol_conj.max(tol_em);
    let diff = sup(&a, &em, 1, 1);
    println!("conjugated vs EM {diff:e}; tolerances conj {tol_conj:e}, EM {tol_em:e}");
    assert!(diff <= 2.0 * tol, "difference {diff:e} exceeds twice the integrator tolerance {tol:e}");
}
