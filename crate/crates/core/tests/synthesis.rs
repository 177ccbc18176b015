use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sof_core::{
    closed_loop_sym, lambda_max_sym, projection_conditions, synthesize, verify_open_loop, verify_sof, Matrix, Options,
    Plant, SynthesisStatus,
};

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_plant(rng: &mut ChaCha8Rng) -> Plant {
    let n = rng.random_range(1..=3);
    let q = rng.random_range(1..=n);
    let p = rng.random_range(1..=n);
    let shift = rng.random_range(0.0..2.0);
    let a = gaussian(rng, n, n) - Matrix::identity(n, n) * shift;
    Plant::new(a, gaussian(rng, n, q), gaussian(rng, p, n)).unwrap()
}

/// Plants whose null-space conditions hold with at least 0.1 to spare and
/// whose open loop is not already certified.
fn comfortably_feasible(seed: u64, count: usize) -> Vec<Plant> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let plant = random_plant(&mut rng);
        let r = projection_conditions(&plant);
        if r.lambda_b.max(r.lambda_c) <= -0.1 && !verify_open_loop(&plant, 1e-6).unwrap().valid {
            out.push(plant);
        }
    }
    out
}

fn f(plant: &Plant, k: &Matrix) -> f64 {
    lambda_max_sym(&closed_loop_sym(plant, k).unwrap()).unwrap().0
}

#[test]
fn certifies_almost_every_comfortably_feasible_plant() {
    let plants = comfortably_feasible(11, 200);
    let opts = Options::default();
    let mut certified = 0;
    let mut iterations = 0;
    for plant in &plants {
        let r = synthesize(plant, &opts).unwrap();
        iterations += r.iterations_used;
        if r.status == SynthesisStatus::Certified {
            certified += 1;
        }
    }
    assert!(certified >= 198, "certified {certified}/200");
    assert!(iterations >= 200);
}

#[test]
fn every_certified_gain_verifies() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let opts = Options { max_iters: 1000, num_restarts: 2, ..Default::default() };
    let mut checked = 0;
    for _ in 0..100 {
        let plant = random_plant(&mut rng);
        let r = synthesize(&plant, &opts).unwrap();
        match r.status {
            SynthesisStatus::Certified => {
                let gain = r.gain.unwrap();
                let cert = verify_sof(&plant, &gain.k, opts.epsilon).unwrap();
                assert!(cert.valid, "{gain:?}");
                assert!((cert.lambda_max_reduced - gain.achieved_lambda).abs() <= 1e-12);
                checked += 1;
            }
            SynthesisStatus::Infeasible => {
                assert!(!r.feasibility.feasible);
                assert!(r.gain.is_none());
            }
            SynthesisStatus::MaxIterations => assert!(r.feasibility.feasible),
        }
    }
    assert!(checked > 0);
}

#[test]
fn same_seed_same_result() {
    for plant in comfortably_feasible(13, 10) {
        let opts = Options { seed: 99, epsilon: 0.5, max_iters: 400, ..Default::default() };
        let a = synthesize(&plant, &opts).unwrap();
        let b = synthesize(&plant, &opts).unwrap();
        assert_eq!(a, b);
    }
}

proptest! {
    #[test]
    fn top_eigenvalue_is_convex_in_the_gain(seed in 0u64..1000, theta in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plant = random_plant(&mut rng);
        let k1 = gaussian(&mut rng, plant.q(), plant.p()) * 3.0;
        let k2 = gaussian(&mut rng, plant.q(), plant.p()) * 3.0;
        let mid = &k1 * theta + &k2 * (1.0 - theta);
        let chord = theta * f(&plant, &k1) + (1.0 - theta) * f(&plant, &k2);
        prop_assert!(f(&plant, &mid) <= chord + 1e-9 * (1.0 + chord.abs()));
    }
}
