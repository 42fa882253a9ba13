use approx::assert_relative_eq;
use femtherm::ewm::{alpha_from, dynamicize, ewm_series, span, EwmParams};
use femtherm::models::Coefficients;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Explicit weighted sum over the full history, weights computed per term.
fn weighted_sum(x: &[f64], alpha: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..x.len()).map(|i| (1.0 - alpha).powi(i as i32)).collect();
    (0..x.len())
        .map(|t| {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, w) in weights.iter().take(t + 1).enumerate() {
                if *w == 0.0 {
                    break;
                }
                num += x[t - i] * w;
                den += w;
            }
            num / den
        })
        .collect()
}

#[test]
fn recursion_matches_weighted_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<f64> = (0..10_000).map(|_| rng.random_range(-50.0..1200.0)).collect();
    for alpha in [0.01, 0.1, 0.6321, 1.0] {
        let fast = ewm_series(&x, alpha).unwrap();
        let slow = weighted_sum(&x, alpha);
        let worst = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "alpha {alpha}: max deviation {worst}");
    }
}

#[test]
fn constant_series_is_a_fixed_point() {
    for alpha in [0.01, 0.1, 0.6321, 1.0] {
        let x = vec![812.37; 5000];
        assert!(ewm_series(&x, alpha).unwrap().iter().all(|&v| v == 812.37));
    }
}

#[test]
fn step_response_after_one_time_constant() {
    let (tau, dt) = (360.0, 6.0);
    let p = EwmParams::new(tau, dt).unwrap();
    let history = 5000;
    let n = (tau / dt) as usize;
    let mut g = vec![0.0; history];
    g.extend(vec![1000.0; 2 * n]);
    let ws = vec![0.0; g.len()];
    let model = Coefficients::Ross { k: 0.03 };
    let out = dynamicize(&model, &g, &ws, &p).unwrap().t_over;
    let expected = 0.03 * 1000.0 * (1.0 - (-1.0f64).exp());
    assert!((out[history - 1 + n] - expected).abs() < 1e-6, "{}", out[history - 1 + n]);
}

#[test]
fn span_approaches_twice_tau_over_dt() {
    let (tau, dt) = (600.0, 6.0);
    let s = span(alpha_from(tau, dt).unwrap());
    assert_relative_eq!(s, 2.0 * tau / dt, max_relative = 0.01);
}

#[test]
fn gap_outputs_missing_and_state_carries() {
    let x = [10.0, f64::NAN, f64::NAN, 20.0];
    let y = ewm_series(&x, 0.5).unwrap();
    assert!(y[1].is_nan() && y[2].is_nan());
    // weights 1 and 0.125 for the two valid samples
    assert_relative_eq!(y[3], (20.0 + 10.0 * 0.125) / 1.125, epsilon = 1e-12);
}

proptest! {
    #[test]
    fn output_stays_within_input_range(
        x in prop::collection::vec(-100.0f64..1500.0, 1..300),
        alpha in 0.001f64..=1.0,
    ) {
        let y = ewm_series(&x, alpha).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (v, m) in x.iter().zip(&y) {
            lo = lo.min(*v);
            hi = hi.max(*v);
            prop_assert!(*m >= lo - 1e-9 && *m <= hi + 1e-9);
        }
    }

    #[test]
    fn alpha_one_is_identity(x in prop::collection::vec(-100.0f64..1500.0, 1..200)) {
        prop_assert_eq!(ewm_series(&x, 1.0).unwrap(), x);
    }
}
