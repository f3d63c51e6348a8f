//! Softmax policy gradient with a running-mean baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::qlearning::{dot, DIVERGENCE_LIMIT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinforceParams {
    /// One row of logit weights per action.
    pub weights: Vec<Vec<f64>>,
    pub alpha: f64,
    pub gamma: f64,
    pub baseline: f64,
    /// Step size of the baseline's moving average of episode returns.
    pub baseline_rate: f64,
}

impl ReinforceParams {
    pub fn zeros(actions: usize, dim: usize, alpha: f64, gamma: f64) -> Self {
        ReinforceParams { weights: vec![vec![0.0; dim]; actions], alpha, gamma, baseline: 0.0, baseline_rate: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub features: Vec<f64>,
    pub action: usize,
    pub reward: f64,
}

pub fn softmax_policy(weights: &[Vec<f64>], features: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = weights.iter().map(|w| dot(w, features)).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn sample_action<R: Rng>(params: &ReinforceParams, features: &[f64], rng: &mut R) -> usize {
    let probs = softmax_policy(&params.weights, features);
    let mut u = rng.gen::<f64>();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

/// Discounted return from every step.
pub fn returns(steps: &[Step], gamma: f64) -> Vec<f64> {
    let mut g = 0.0;
    let mut out = vec![0.0; steps.len()];
    for (i, s) in steps.iter().enumerate().rev() {
        g = s.reward + gamma * g;
        out[i] = g;
    }
    out
}

/// `sum_t (G_t - b) * grad log pi(a_t | s_t)` with respect to the logit weights.
pub fn reinforce_gradient(weights: &[Vec<f64>], steps: &[Step], gamma: f64, baseline: f64) -> Vec<Vec<f64>> {
    let mut grad = vec![vec![0.0; weights.first().map_or(0, Vec::len)]; weights.len()];
    for (step, g) in steps.iter().zip(returns(steps, gamma)) {
        let adv = g - baseline;
        if adv == 0.0 {
            continue;
        }
        let probs = softmax_policy(weights, &step.features);
        for (a, row) in grad.iter_mut().enumerate() {
            let coeff = adv * (f64::from(u8::from(a == step.action)) - probs[a]);
            for (gw, x) in row.iter_mut().zip(&step.features) {
                *gw += coeff * x;
            }
        }
    }
    grad
}

/// Gradient ascent on one finished episode, then a baseline update.
pub fn reinforce_update(params: &mut ReinforceParams, steps: &[Step]) -> Result<()> {
    let grad = reinforce_gradient(&params.weights, steps, params.gamma, params.baseline);
    let mut max_abs: f64 = 0.0;
    for (row, grow) in params.weights.iter_mut().zip(&grad) {
        for (w, g) in row.iter_mut().zip(grow) {
            *w += params.alpha * g;
            max_abs = max_abs.max(w.abs());
        }
    }
    if let Some(g0) = returns(steps, params.gamma).first() {
        params.baseline += params.baseline_rate * (g0 - params.baseline);
    }
    if !max_abs.is_finite() || max_abs > DIVERGENCE_LIMIT {
        return Err(Error::DivergenceDetected { max_abs });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_steps() -> Vec<Step> {
        vec![
            Step { features: vec![1.0, 0.0, 1.0], action: 2, reward: -1.0 },
            Step { features: vec![0.0, 1.0, 1.0], action: 0, reward: -1.0 },
            Step { features: vec![1.0, 1.0, 1.0], action: 1, reward: 5.0 },
        ]
    }

    // Written out independently of the module: log-softmax by hand.
    fn objective(w: &[Vec<f64>], steps: &[Step], gamma: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for t in 0..steps.len() {
            let g: f64 = steps[t..].iter().enumerate().map(|(k, s)| gamma.powi(k as i32) * s.reward).sum();
            let z: Vec<f64> = w.iter().map(|row| row.iter().zip(&steps[t].features).map(|(a, x)| a * x).sum()).collect();
            let lse = z.iter().map(|v| v.exp()).sum::<f64>().ln();
            total += (g - b) * (z[steps[t].action] - lse);
        }
        total
    }

    #[test]
    fn gradient_matches_central_differences() {
        let w = vec![vec![0.1, -0.2, 0.3], vec![-0.4, 0.5, 0.0], vec![0.2, 0.1, -0.3]];
        let steps = toy_steps();
        let (gamma, b) = (0.9, 0.7);
        let grad = reinforce_gradient(&w, &steps, gamma, b);
        let h = 1e-5;
        for a in 0..3 {
            for j in 0..3 {
                let mut plus = w.clone();
                let mut minus = w.clone();
                plus[a][j] += h;
                minus[a][j] -= h;
                let fd = (objective(&plus, &steps, gamma, b) - objective(&minus, &steps, gamma, b)) / (2.0 * h);
                let rel = (fd - grad[a][j]).abs() / fd.abs().max(grad[a][j].abs()).max(1e-8);
                assert!(rel < 1e-4, "({a},{j}) analytic {} fd {fd}", grad[a][j]);
            }
        }
    }

    #[test]
    fn zero_advantage_leaves_weights() {
        let mut p = ReinforceParams::zeros(3, 3, 0.5, 1.0);
        p.weights[0][0] = 0.3;
        let steps = vec![Step { features: vec![1.0, 0.0, 1.0], action: 1, reward: 2.0 }];
        p.baseline = 2.0;
        let before = p.weights.clone();
        reinforce_update(&mut p, &steps).unwrap();
        assert_eq!(p.weights, before);
    }

    #[test]
    fn bandit_converges() {
        let mut p = ReinforceParams::zeros(2, 1, 0.1, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let a = sample_action(&p, &[1.0], &mut rng);
            let r = if a == 1 { 1.0 } else { 0.0 };
            reinforce_update(&mut p, &[Step { features: vec![1.0], action: a, reward: r }]).unwrap();
        }
        assert!(softmax_policy(&p.weights, &[1.0])[1] > 0.9);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let w = vec![vec![100.0], vec![-100.0], vec![3.0]];
        let p = softmax_policy(&w, &[1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| v.is_finite()));
    }
}
