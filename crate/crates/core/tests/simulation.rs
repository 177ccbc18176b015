use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sof_core::sim::IntegratorOptions;
use sof_core::{
    decay_check, integrate, optimal_decay, synthesize, verify_sof, Matrix, Nonlinearity, Options, Plant, System, Vector,
};

fn example_system() -> System {
    let plant = Plant::new(
        Matrix::from_row_slice(2, 2, &[-0.1, 1.0, 0.0, -0.1]),
        Matrix::from_row_slice(2, 1, &[1.0, 1.0]),
        Matrix::from_row_slice(1, 2, &[1.0, 2.0]),
    )
    .unwrap();
    let nl =
        Nonlinearity::new(vec![Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), Matrix::zeros(2, 2)]).unwrap();
    System::new(plant, Some(nl)).unwrap()
}

fn random_starts(seed: u64, count: usize, radius: f64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v = Vector::from_fn(2, |_, _| StandardNormal.sample(&mut rng));
            v.normalize() * radius
        })
        .collect()
}

/// Any certified gain makes `||x||^2` decay at least at the certified rate,
/// whatever the initial state.
fn assert_certificate_holds(sys: &System, k: &Matrix, epsilon: f64) {
    assert!(verify_sof(&sys.plant, k, epsilon).unwrap().valid);
    let opts = IntegratorOptions { dt: 1e-3, t_final: 5.0, escape_radius: 1e3 };
    for (i, x0) in random_starts(21, 50, 3.0).iter().enumerate() {
        let traj = integrate(sys, Some(k), x0, &opts).unwrap();
        assert!(!traj.diverged, "start {i}");
        assert!(decay_check(&traj, epsilon, 1e-6).unwrap(), "start {i}: {x0:?}");
        assert!(traj.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "start {i}");
    }
}

#[test]
fn synthesized_gain_decays_as_certified() {
    let sys = example_system();
    let opts = Options { epsilon: 0.05, ..Default::default() };
    let r = synthesize(&sys.plant, &opts).unwrap();
    assert_certificate_holds(&sys, &r.gain.unwrap().k, opts.epsilon);
}

#[test]
fn fastest_gain_decays_at_its_rate() {
    let sys = example_system();
    let bound = optimal_decay(&sys.plant, &Options::default()).unwrap();
    assert_certificate_holds(&sys, &bound.k, bound.epsilon_star * (1.0 - 1e-6));
}

#[test]
fn uncertified_gain_can_grow() {
    // K = 0 leaves the indefinite open-loop energy rate; the start along the
    // top eigenvector of A + A^T gains energy initially.
    let sys = example_system();
    let k = Matrix::zeros(1, 1);
    assert!(!verify_sof(&sys.plant, &k, 1e-6).unwrap().valid);
    let x0 = Vector::from_column_slice(&[0.1, 0.1]);
    let opts = IntegratorOptions { dt: 1e-3, t_final: 0.5, escape_radius: 10.0 };
    let traj = integrate(&sys, Some(&k), &x0, &opts).unwrap();
    assert!(traj.norms[100] > traj.norms[0]);
    assert!(!decay_check(&traj, 1e-6, 1e-3).unwrap());
}

#[test]
fn fourth_order_convergence_on_a_linear_system() {
    // Rotation with damping has the closed form exp(-t/10) R(t) x0.
    let plant =
        Plant::new(Matrix::from_row_slice(2, 2, &[-0.1, 1.0, -1.0, -0.1]), Matrix::zeros(2, 1), Matrix::zeros(1, 2))
            .unwrap();
    let sys = System::linear(plant);
    let x0 = Vector::from_column_slice(&[1.0, 0.0]);
    let t: f64 = 3.0;
    let exact = Vector::from_column_slice(&[t.cos(), -t.sin()]) * (-0.1 * t).exp();
    let err = |dt: f64| {
        let opts = IntegratorOptions { dt, t_final: t, escape_radius: 10.0 };
        (integrate(&sys, None, &x0, &opts).unwrap().final_state().unwrap() - &exact).norm()
    };
    let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
    for ratio in [e1 / e2, e2 / e3] {
        assert!((14.0..=18.0).contains(&ratio), "{e1} {e2} {e3}");
    }
}
