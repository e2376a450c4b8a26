use qmci_core::qae::{job_rng, mlqae_with_rng, schedule_for_precision, AmplitudeProblem, Backend};
use rayon::prelude::*;

fn empirical_rmse(a: f64, eps: f64, reps: u64, seed: u64) -> f64 {
    let s = schedule_for_precision(eps).unwrap();
    let p = AmplitudeProblem::analytic(a).unwrap();
    let se: f64 = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = job_rng(seed, r);
            let e = mlqae_with_rng(&p, &s, Backend::Analytic, &mut rng).unwrap();
            (e.estimate - a).powi(2)
        })
        .sum();
    (se / reps as f64).sqrt()
}

#[test]
fn calibrated_schedule_meets_requested_rmse() {
    for eps in [0.05, 0.01, 0.003] {
        for (i, a) in [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().enumerate() {
            let rmse = empirical_rmse(a, eps, 400, 11 + i as u64);
            assert!(rmse <= eps, "a {a} eps {eps}: rmse {rmse}");
        }
    }
}

#[test]
fn bound_is_not_grossly_loose() {
    // Mid-range amplitudes sit close to the calibration constant.
    let eps = 0.01;
    let rmse = empirical_rmse(0.5, eps, 400, 3);
    assert!(rmse >= 0.3 * eps, "rmse {rmse}");
}
