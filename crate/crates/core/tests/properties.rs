use fastsweep::match2d::segment_normal;
use fastsweep::numerics::fd_jacobian;
use fastsweep::shock1d::{self, jump};
use fastsweep::sweep1d::Grid1D;
use fastsweep::sweep2d::godunov_flux;
use fastsweep::systems::*;
use nalgebra::{dvector, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rh_ok(model: &dyn Model1D, um: &StateVector, up: &StateVector) -> bool {
    let fm = model.flux(um);
    let scale = 1.0 + fm.amax();
    (model.flux(up) - fm).amax() <= 1e-10 * scale
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cases(1000))]

    #[test]
    fn burgers_jump_invariants(v in 0.05f64..5.0) {
        let m = Scalar1D::burgers_hj();
        let u = dvector![v];
        let j = jump(&m, &u).unwrap();
        prop_assert!(j.entropy_ok);
        prop_assert!(rh_ok(&m, &u, &j.u_plus));
        prop_assert!((j.u_plus[0] + v).abs() < 1e-8 * (1.0 + v));
    }

    #[test]
    fn isentropic_jump_invariants(rho in 0.2f64..5.0, mach in 1.05f64..4.0) {
        let m = IsentropicDuct::single();
        let u = dvector![rho, rho * mach * m.sound_speed(rho)];
        let j = jump(&m, &u).unwrap();
        prop_assert!(j.entropy_ok);
        prop_assert!(j.field == 0);
        prop_assert!(rh_ok(&m, &u, &j.u_plus));
        prop_assert!(j.u_plus[0] > rho);
    }

    #[test]
    fn nozzle_jump_invariants(rho in 0.2f64..3.0, p in 0.2f64..3.0, mach in 1.05f64..4.0, x in 0.0f64..3.0) {
        let m = Nozzle::standard();
        let c = (m.gamma * p / rho).sqrt();
        let u = m.from_primitive(rho, mach * c, p, x);
        let j = jump(&m, &u).unwrap();
        prop_assert!(j.entropy_ok);
        prop_assert!(rh_ok(&m, &u, &j.u_plus));
        let lp = m.eigenvalues(&j.u_plus).unwrap();
        prop_assert!(lp[0] < 0.0 && lp[1] > 0.0);
    }

    // Scalar 2D jumps: the normal annihilates the flux jump and orients the
    // characteristics into the curve from both sides.
    #[test]
    fn scalar2d_normal_invariants(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let m = Scalar2D::burgers();
        if let Some(n) = segment_normal(&m, a, b) {
            let fj = m.flux_f(&dvector![b])[0] - m.flux_f(&dvector![a])[0];
            let gj = m.flux_g(&dvector![b])[0] - m.flux_g(&dvector![a])[0];
            prop_assert!((n.0 * fj + n.1 * gj).abs() <= 1e-12 * (1.0 + fj.abs() + gj.abs()));
            let speed = |u: f64| {
                let e = 1e-6;
                let up = dvector![u + e];
                let um = dvector![u - e];
                (
                    (m.flux_f(&up)[0] - m.flux_f(&um)[0]) / (2.0 * e),
                    (m.flux_g(&up)[0] - m.flux_g(&um)[0]) / (2.0 * e),
                )
            };
            let (cm, cp) = (speed(a), speed(b));
            prop_assert!(n.0 * cm.0 + n.1 * cm.1 > -1e-9);
            prop_assert!(n.0 * cp.0 + n.1 * cp.1 < 1e-9);
        }
    }
}

fn fluxes() -> Vec<ScalarFlux> {
    vec![ScalarFlux::quadratic(0.5), ScalarFlux::linear(), ScalarFlux::cubic()]
}

proptest! {
    #![proptest_config(cases(10_000))]

    #[test]
    fn godunov_consistent_and_monotone(ul in -4.0f64..4.0, ur in -4.0f64..4.0, d in 0.0f64..1.0) {
        for f in fluxes() {
            let v = godunov_flux(&f, ul, ul);
            prop_assert!((v - f.eval(ul)).abs() <= 1e-14 * (1.0 + v.abs()));
            let base = godunov_flux(&f, ul, ur);
            let tol = 1e-12 * (1.0 + base.abs());
            prop_assert!(godunov_flux(&f, ul + d, ur) >= base - tol);
            prop_assert!(godunov_flux(&f, ul, ur + d) <= base + tol);
        }
    }
}

fn assert_close(a: &Matrix, b: &Matrix, what: &str) {
    let scale = 1.0 + a.amax();
    assert!((a - b).amax() <= 1e-5 * scale, "{what}: {a} vs {b}");
}

#[test]
fn jacobians_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ones: Vec<Box<dyn Model1D>> = vec![
        Box::new(Scalar1D::burgers_hj()),
        Box::new(IsentropicDuct::single()),
        Box::new(IsentropicDuct::multi()),
        Box::new(Nozzle::standard()),
    ];
    for _ in 0..50 {
        let rho = rng.random_range(0.3..3.0);
        let vel = rng.random_range(-2.0..2.0);
        let p = rng.random_range(0.3..3.0);
        for m in &ones {
            let u: StateVector = match m.size() {
                1 => dvector![vel],
                2 => dvector![rho, rho * vel],
                _ => dvector![rho, rho * vel, p / 0.4 + 0.5 * rho * vel * vel],
            };
            let fd = fd_jacobian(|w| m.flux(w), &u, 1e-7);
            assert_close(&m.jacobian(&u), &fd, m.id());
        }
        let e = Euler2D::standard();
        let w = Primitive2D {
            rho,
            u: vel + 3.0,
            v: rng.random_range(-1.0..1.0),
            p,
        }
        .to_conserved(e.gamma);
        assert_close(&e.jacobian_f(&w), &fd_jacobian(|w| e.flux_f(w), &w, 1e-7), "euler f");
        assert_close(&e.jacobian_g(&w), &fd_jacobian(|w| e.flux_g(w), &w, 1e-7), "euler g");
        for f in fluxes() {
            let u = rng.random_range(-3.0..3.0);
            let d = (f.eval(u + 1e-6) - f.eval(u - 1e-6)) / 2e-6;
            assert!((f.deriv(u) - d).abs() <= 1e-6 * (1.0 + d.abs()));
        }
    }
}

fn restart_agreement(model: &dyn Model1D, n: usize, seed: u64) {
    let grid = Grid1D::for_model(model, n).unwrap();
    let left = shock1d::left_branch(model, &[], &grid).unwrap();
    let reference = shock1d::solve_shock_on_branch(model, &left, &[], (grid.x_left, grid.x_right), None).unwrap();
    let xs = reference.shock.as_ref().unwrap().x_s;
    let h = grid.h();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let lo = rng.random_range(grid.x_left..xs - 2.0 * h);
        let hi = rng.random_range(xs + 2.0 * h..grid.x_right);
        let s = shock1d::solve_shock_on_branch(model, &left, &[], (lo, hi), None).unwrap();
        let x = s.shock.unwrap().x_s;
        assert!((x - xs).abs() <= h, "{}: bracket ({lo}, {hi}) gave {x}, expected {xs}", model.id());
    }
}

#[test]
fn restarts_from_random_brackets_agree() {
    restart_agreement(&Scalar1D::burgers_hj(), 257, 11);
    restart_agreement(&IsentropicDuct::single(), 257, 12);
}

#[test]
fn fd_jacobian_of_linear_map_is_exact() {
    let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
    let x = DVector::from_vec(vec![0.3, -0.7]);
    let j = fd_jacobian(|v| &a * v, &x, 1e-7);
    assert_close(&a, &j, "linear");
}
