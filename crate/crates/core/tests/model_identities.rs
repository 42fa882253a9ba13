use femtherm::models::{predict_series, sandia_to_wm1, wm1_to_sandia, Coefficients};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn wm1_equals_sandia_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let a = rng.random_range(-4.5..-2.5);
        let b = rng.random_range(-0.2..-0.01);
        let g = rng.random_range(0.0..1400.0);
        let ws = rng.random_range(0.0..20.0);
        let (k, d) = sandia_to_wm1(a, b).unwrap();
        let sandia = Coefficients::Sandia { a, b }.predict(g, ws);
        let wm1 = Coefficients::Wm1 { k, d }.predict(g, ws);
        worst = worst.max(rel_diff(sandia, wm1));
    }
    assert!(worst <= 1e-12, "worst relative difference {worst}");
}

#[test]
fn wind_models_reduce_to_ross_without_wind() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100_000 {
        let g = rng.random_range(0.0..1400.0);
        let a: f64 = rng.random_range(-4.5..-2.5);
        let u0: f64 = rng.random_range(10.0..50.0);
        let k: f64 = rng.random_range(0.01..0.06);
        let cases = [
            (Coefficients::Sandia { a, b: -0.07 }, a.exp()),
            (Coefficients::Faiman { u0, u1: 5.0 }, 1.0 / u0),
            (Coefficients::Wm1 { k, d: 15.0 }, k),
            (Coefficients::Wm2 { k, k_w: 0.002, ws_cap: 8.0 }, k),
        ];
        for (c, k_ross) in cases {
            let ross = Coefficients::Ross { k: k_ross }.predict(g, 0.0);
            assert!(rel_diff(c.predict(g, 0.0), ross) <= 1e-12, "{c:?} at G={g}");
        }
    }
}

#[test]
fn series_prediction_matches_pointwise() {
    let g = [0.0, 250.0, 800.0, 1100.0];
    let ws = [0.0, 1.5, 9.0, 3.0];
    let c = Coefficients::Wm2 { k: 0.035, k_w: 0.0018, ws_cap: 8.0 };
    let s = predict_series(&c, &g, &ws).unwrap();
    for i in 0..g.len() {
        assert_eq!(s[i], c.predict(g[i], ws[i]));
    }
}

proptest! {
    #[test]
    fn sandia_wm1_round_trip(a in -5.0f64..-1.0, b in -0.3f64..-0.001) {
        let (k, d) = sandia_to_wm1(a, b).unwrap();
        let (a2, b2) = wm1_to_sandia(k, d).unwrap();
        prop_assert!((a - a2).abs() <= 1e-12 * a.abs());
        prop_assert!((b - b2).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn wind_never_heats(g in 0.0f64..1400.0, ws1 in 0.0f64..15.0, extra in 0.0f64..10.0) {
        let models = [
            Coefficients::Sandia { a: -3.47, b: -0.0594 },
            Coefficients::Faiman { u0: 25.0, u1: 6.84 },
            Coefficients::Wm1 { k: 0.0348, d: 16.8 },
            Coefficients::Wm2 { k: 0.035, k_w: 0.0018, ws_cap: 8.0 },
        ];
        for c in models {
            prop_assert!(c.predict(g, ws1 + extra) <= c.predict(g, ws1) + 1e-12);
        }
    }
}
