use cvdquant_core::linalg::least_squares_3;
use cvdquant_core::{fit_linear, rgb_to_lab, ConfusionDataset, ConfusionEvent, FitOptions, Rgb24};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Solves `(AᵀA) M = AᵀB` column by column with Cramer's rule.
fn normal_equations(a: &[[f64; 3]], b: &[[f64; 3]]) -> [[f64; 3]; 3] {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [[0.0; 3]; 3];
    for (ra, rb) in a.iter().zip(b) {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += ra[i] * ra[j];
                atb[i][j] += ra[i] * rb[j];
            }
        }
    }
    let d = det3(ata);
    let mut m = [[0.0; 3]; 3];
    for col in 0..3 {
        for k in 0..3 {
            let mut t = ata;
            for r in 0..3 {
                t[r][k] = atb[r][col];
            }
            m[k][col] = det3(t) / d;
        }
    }
    m
}

fn rel_err(x: [[f64; 3]; 3], y: [[f64; 3]; 3]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            num += (x[i][j] - y[i][j]).powi(2);
            den += y[i][j].powi(2);
        }
    }
    (num / den).sqrt()
}

fn random_lab(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.random_range(0.0..100.0), rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0)]
}

#[test]
fn doubled_targets_give_twice_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a: Vec<[f64; 3]> = (0..40).map(|_| random_lab(&mut rng)).collect();
    let b: Vec<[f64; 3]> = a.iter().map(|r| r.map(|v| 2.0 * v)).collect();
    let m = least_squares_3(&a, &b).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 2.0 } else { 0.0 };
            assert!((m[i][j] - want).abs() < 1e-10, "{m:?}");
        }
    }
}

#[test]
fn noisy_map_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m0 = [[0.9, 0.1, -0.2], [0.05, 0.3, 0.0], [0.2, -0.1, 1.1]];
    let a: Vec<[f64; 3]> = (0..500).map(|_| random_lab(&mut rng)).collect();
    let b: Vec<[f64; 3]> = a
        .iter()
        .map(|r| {
            let mut o = [0.0; 3];
            for j in 0..3 {
                o[j] = (0..3).map(|k| r[k] * m0[k][j]).sum::<f64>() + rng.random_range(-2.0..2.0);
            }
            o
        })
        .collect();
    let m = least_squares_3(&a, &b).unwrap();
    assert!(rel_err(m, normal_equations(&a, &b)) <= 1e-6);
    assert!(rel_err(m, m0) < 0.05);
}

#[test]
fn fit_linear_matches_normal_equations_on_histories() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.random_range(10..300);
        let events: Vec<ConfusionEvent> = (0..n)
            .map(|i| {
                let t = Rgb24::new(rng.random(), rng.random(), rng.random());
                let s = if rng.random_bool(0.5) { t } else { Rgb24::new(rng.random(), rng.random(), rng.random()) };
                ConfusionEvent::new(i as u64, t, s)
            })
            .collect();
        let a: Vec<[f64; 3]> = events.iter().map(|e| rgb_to_lab(e.target).to_array()).collect();
        let b: Vec<[f64; 3]> = events.iter().map(|e| rgb_to_lab(e.selected).to_array()).collect();
        let d = ConfusionDataset::new("u", events).unwrap();
        let m = fit_linear(&d, FitOptions::default()).unwrap();
        let e = rel_err(m.m, normal_equations(&a, &b));
        assert!(e <= 1e-6, "relative error {e}");
    }
}
