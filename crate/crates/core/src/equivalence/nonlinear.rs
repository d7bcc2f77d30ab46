//! Full-batch training of the one-hidden-layer transform.
//!
//! Inputs and targets are standardized per channel for training; the scaling
//! is folded back into the stored weights so the fitted network consumes raw
//! LAB coordinates. Optimizer: Adam with a constant step size.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{lab_rows, FitOptions, NonLinearTransform};
use crate::confusion::ConfusionDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonLinearConfig {
    pub hidden: usize,
    pub seed: u64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub options: FitOptions,
}

impl Default for NonLinearConfig {
    fn default() -> Self {
        Self {
            hidden: 100,
            seed: 0,
            iterations: 200,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            options: FitOptions::default(),
        }
    }
}

impl NonLinearConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Per-channel mean and standard deviation; a zero spread becomes 1.
fn standardizer(rows: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let n = rows.len() as f64;
    let mut mean = [0.0; 3];
    for r in rows {
        for j in 0..3 {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; 3];
    for r in rows {
        for j in 0..3 {
            let d = r[j] - mean[j];
            var[j] += d * d;
        }
    }
    let std = var.map(|v| {
        let s = libm::sqrt(v / n);
        if s > 1e-12 {
            s
        } else {
            1.0
        }
    });
    (mean, std)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    t: i32,
}

impl Adam {
    fn new(len: usize, cfg: &NonLinearConfig) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_epsilon,
            lr: cfg.learning_rate,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.t));
        let step = self.lr * libm::sqrt(c2) / c1;
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= step * self.m[i] / (libm::sqrt(self.v[i]) + self.eps);
        }
    }
}

/// Trains `relu(v W1 + b1) W2 + b2` to map target LAB rows onto selection LAB
/// rows under mean squared error. Identical inputs give bit-identical weights.
pub fn fit_nonlinear(d: &ConfusionDataset, cfg: &NonLinearConfig) -> Result<NonLinearTransform> {
    if cfg.hidden == 0 {
        return Err(Error::InvalidParameter("hidden must be positive".into()));
    }
    if cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 {
        return Err(Error::InvalidParameter(
            "learning_rate must be positive".into(),
        ));
    }
    let (x_raw, y_raw) = lab_rows(d, cfg.options);
    if x_raw.len() < 2 {
        return Err(Error::InvalidParameter(alloc::format!(
            "non-linear fit needs at least 2 events, got {}",
            x_raw.len()
        )));
    }
    let (x_mean, x_std) = standardizer(&x_raw);
    let (y_mean, y_std) = standardizer(&y_raw);
    let xs: Vec<[f64; 3]> = x_raw
        .iter()
        .map(|r| core::array::from_fn(|j| (r[j] - x_mean[j]) / x_std[j]))
        .collect();
    let ys: Vec<[f64; 3]> = y_raw
        .iter()
        .map(|r| core::array::from_fn(|j| (r[j] - y_mean[j]) / y_std[j]))
        .collect();

    let h = cfg.hidden;
    // Parameter layout: W1 (3 x h), b1 (h), W2 (h x 3), b2 (3).
    let (w1_at, b1_at, w2_at, b2_at) = (0, 3 * h, 4 * h, 7 * h);
    let len = 7 * h + 3;
    let mut params = vec![0.0; len];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound1 = libm::sqrt(6.0 / (3 + h) as f64);
    let bound2 = libm::sqrt(6.0 / (h + 3) as f64);
    for p in &mut params[w1_at..w2_at] {
        *p = rng.random_range(-bound1..bound1);
    }
    for p in &mut params[w2_at..] {
        *p = rng.random_range(-bound2..bound2);
    }

    let n = xs.len() as f64;
    let mut grads = vec![0.0; len];
    let mut hidden = vec![0.0; h];
    let mut adam = Adam::new(len, cfg);
    for iter in 0..cfg.iterations {
        grads.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let (w1, rest) = params.split_at(b1_at);
            let (b1, rest) = rest.split_at(h);
            let (w2, b2) = rest.split_at(3 * h);
            let mut out = [b2[0], b2[1], b2[2]];
            for k in 0..h {
                let pre = b1[k] + x[0] * w1[k] + x[1] * w1[h + k] + x[2] * w1[2 * h + k];
                let a = if pre > 0.0 { pre } else { 0.0 };
                hidden[k] = a;
                out[0] += a * w2[3 * k];
                out[1] += a * w2[3 * k + 1];
                out[2] += a * w2[3 * k + 2];
            }
            let err: [f64; 3] = core::array::from_fn(|j| out[j] - y[j]);
            loss += err[0] * err[0] + err[1] * err[1] + err[2] * err[2];
            let g_out = err.map(|e| e / n);
            for j in 0..3 {
                grads[b2_at + j] += g_out[j];
            }
            for k in 0..h {
                let a = hidden[k];
                if a <= 0.0 {
                    continue;
                }
                let wk = &w2[3 * k..3 * k + 3];
                let g_h = g_out[0] * wk[0] + g_out[1] * wk[1] + g_out[2] * wk[2];
                grads[w2_at + 3 * k] += a * g_out[0];
                grads[w2_at + 3 * k + 1] += a * g_out[1];
                grads[w2_at + 3 * k + 2] += a * g_out[2];
                grads[b1_at + k] += g_h;
                grads[w1_at + k] += x[0] * g_h;
                grads[w1_at + h + k] += x[1] * g_h;
                grads[w1_at + 2 * h + k] += x[2] * g_h;
            }
        }
        let loss = loss / (2.0 * n);
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss(iter));
        }
        adam.step(&mut params, &grads);
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteLoss(cfg.iterations));
    }

    // Fold the standardization into the weights.
    let mut w1 = vec![0.0; 3 * h];
    let mut b1 = params[b1_at..w2_at].to_vec();
    for i in 0..3 {
        for k in 0..h {
            let w = params[w1_at + i * h + k] / x_std[i];
            w1[i * h + k] = w;
            b1[k] -= x_mean[i] * w;
        }
    }
    let mut w2 = vec![0.0; 3 * h];
    for k in 0..h {
        for j in 0..3 {
            w2[3 * k + j] = params[w2_at + 3 * k + j] * y_std[j];
        }
    }
    let b2: [f64; 3] = core::array::from_fn(|j| params[b2_at + j] * y_std[j] + y_mean[j]);
    NonLinearTransform::new(w1, b1, w2, b2, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{rgb_to_lab, Rgb24};
    use crate::confusion::{synthesize_observer, ConfusionEvent};
    use crate::equivalence::fit_linear;

    fn random_colors(n: usize, seed: u64) -> Vec<Rgb24> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Rgb24::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    fn mse(f: impl Fn([f64; 3]) -> [f64; 3], rows: &[([f64; 3], [f64; 3])]) -> f64 {
        let total: f64 = rows
            .iter()
            .map(|(x, y)| {
                let p = f(*x);
                (0..3).map(|j| (p[j] - y[j]).powi(2)).sum::<f64>()
            })
            .sum();
        total / rows.len() as f64
    }

    #[test]
    fn identity_data_beats_constant_predictor() {
        let colors = random_colors(200, 1);
        let events = colors
            .iter()
            .enumerate()
            .map(|(i, &c)| ConfusionEvent::new(i as u64, c, c))
            .collect();
        let d = ConfusionDataset::new("id", events).unwrap();
        let net = fit_nonlinear(&d, &NonLinearConfig::with_seed(5)).unwrap();
        let rows: Vec<_> = colors
            .iter()
            .map(|&c| (rgb_to_lab(c).to_array(), rgb_to_lab(c).to_array()))
            .collect();
        let mut mean = [0.0; 3];
        for (_, y) in &rows {
            for j in 0..3 {
                mean[j] += y[j] / rows.len() as f64;
            }
        }
        let fitted = mse(|x| net.apply(x), &rows);
        let constant = mse(|_| mean, &rows);
        assert!(fitted < constant, "{fitted} vs {constant}");
        assert!(fitted < 0.05 * constant, "{fitted} vs {constant}");
    }

    #[test]
    fn deterministic_given_seed() {
        let d = synthesize_observer("deutan", 300, 2, 0.6).unwrap();
        let cfg = NonLinearConfig {
            hidden: 16,
            ..NonLinearConfig::with_seed(9)
        };
        let a = fit_nonlinear(&d, &cfg).unwrap();
        let b = fit_nonlinear(&d, &cfg).unwrap();
        assert_eq!(a, b);
        let c = fit_nonlinear(&d, &NonLinearConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_few_events_rejected() {
        let d = ConfusionDataset::new(
            "u",
            alloc::vec![ConfusionEvent::new(0, Rgb24::WHITE, Rgb24::WHITE)],
        )
        .unwrap();
        assert!(fit_nonlinear(&d, &NonLinearConfig::default()).is_err());
    }

    #[test]
    fn divergent_step_reports_non_finite_loss() {
        let d = synthesize_observer("protan", 50, 2, 0.6).unwrap();
        let cfg = NonLinearConfig {
            hidden: 4,
            learning_rate: 1e300,
            iterations: 50,
            ..NonLinearConfig::default()
        };
        assert!(matches!(
            fit_nonlinear(&d, &cfg),
            Err(Error::NonFiniteLoss(_))
        ));
    }

    #[test]
    fn piecewise_target_favors_network() {
        // Selections follow a two-regime map of lightness: dark colors are
        // perceived darker, light colors untouched. The selection is the gray
        // of the mapped lightness so it is representable as Rgb24.
        let regime = |c: Rgb24| {
            let l = rgb_to_lab(c).l;
            let v = if l < 50.0 {
                (f64::from(c.r.max(c.g).max(c.b)) * 0.3) as u8
            } else {
                c.r.max(c.g).max(c.b)
            };
            Rgb24::new(v, v, v)
        };
        let train: Vec<_> = random_colors(1500, 3).into_iter().collect();
        let test = random_colors(500, 4);
        let events = train
            .iter()
            .enumerate()
            .map(|(i, &c)| ConfusionEvent::new(i as u64, c, regime(c)))
            .collect();
        let d = ConfusionDataset::new("pw", events).unwrap();
        let cfg = NonLinearConfig::with_seed(1);
        let net = fit_nonlinear(&d, &cfg).unwrap();
        let lin = fit_linear(&d, FitOptions::default()).unwrap();
        let rows: Vec<_> = test
            .iter()
            .map(|&c| (rgb_to_lab(c).to_array(), rgb_to_lab(regime(c)).to_array()))
            .collect();
        let nl = mse(|x| net.apply(x), &rows);
        let li = mse(|x| lin.apply(x), &rows);
        assert!(nl < li, "non-linear {nl} vs linear {li}");
    }
}
