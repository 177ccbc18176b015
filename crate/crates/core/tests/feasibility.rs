use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sof_core::{projection_conditions, Matrix, Plant};

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_plant(rng: &mut ChaCha8Rng) -> Plant {
    let n = rng.random_range(1..=4);
    let q = rng.random_range(1..=n);
    let p = rng.random_range(1..=n);
    Plant::new(gaussian(rng, n, n), gaussian(rng, n, q), gaussian(rng, p, n)).unwrap()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    gaussian(rng, n, n).qr().q()
}

fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-9 * (1.0 + a.abs())
}

proptest! {
    /// Orthogonal changes of state coordinates leave both conditions unchanged.
    #[test]
    fn invariant_under_orthogonal_state_change(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plant = random_plant(&mut rng);
        let t = random_orthogonal(&mut rng, plant.n());
        let rotated = Plant::new(
            t.transpose() * plant.a() * &t,
            t.transpose() * plant.b(),
            plant.c() * &t,
        ).unwrap();
        let r0 = projection_conditions(&plant);
        let r1 = projection_conditions(&rotated);
        prop_assert!(close(r0.lambda_b, r1.lambda_b), "{} vs {}", r0.lambda_b, r1.lambda_b);
        prop_assert!(close(r0.lambda_c, r1.lambda_c), "{} vs {}", r0.lambda_c, r1.lambda_c);
        prop_assert_eq!(r0.m_b(), r1.m_b());
        prop_assert_eq!(r0.m_c(), r1.m_c());
    }

    /// Input and output transformations change the bases but not their spans.
    #[test]
    fn invariant_under_input_output_mixing(seed in 0u64..5000, alpha in 0.01f64..100.0, beta in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plant = random_plant(&mut rng);
        let mix_in = random_orthogonal(&mut rng, plant.q()) * alpha;
        let mix_out = random_orthogonal(&mut rng, plant.p()) * beta;
        let mixed = Plant::new(plant.a().clone(), plant.b() * mix_in, mix_out * plant.c()).unwrap();
        let r0 = projection_conditions(&plant);
        let r1 = projection_conditions(&mixed);
        prop_assert!(close(r0.lambda_b, r1.lambda_b));
        prop_assert!(close(r0.lambda_c, r1.lambda_c));
        prop_assert_eq!(r0.feasible, r1.feasible);
    }

    /// Scaling `A` by a positive factor scales both eigenvalues by it.
    #[test]
    fn homogeneous_in_a(seed in 0u64..5000, s in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plant = random_plant(&mut rng);
        let scaled = Plant::new(plant.a() * s, plant.b().clone(), plant.c().clone()).unwrap();
        let r0 = projection_conditions(&plant);
        let r1 = projection_conditions(&scaled);
        prop_assert!(close(s * r0.lambda_b, r1.lambda_b));
        prop_assert!(close(s * r0.lambda_c, r1.lambda_c));
    }
}
