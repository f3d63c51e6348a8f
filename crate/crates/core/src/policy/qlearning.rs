//! Linear Q-learning with an epsilon-greedy behaviour policy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest weight magnitude tolerated before training is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QParams {
    /// One row of feature weights per action.
    pub weights: Vec<Vec<f64>>,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl QParams {
    pub fn zeros(actions: usize, dim: usize, alpha: f64, gamma: f64) -> Self {
        QParams { weights: vec![vec![0.0; dim]; actions], alpha, gamma, epsilon: 1.0 }
    }

    pub fn q(&self, features: &[f64], action: usize) -> f64 {
        dot(&self.weights[action], features)
    }

    pub fn q_values(&self, features: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| dot(w, features)).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Linear decay from `start` to `end` over the first `fraction` of `total` episodes.
pub fn epsilon_schedule(episode: usize, total: usize, start: f64, end: f64, fraction: f64) -> f64 {
    let horizon = (total as f64 * fraction).max(1.0);
    let t = (episode as f64 / horizon).min(1.0);
    start + (end - start) * t
}

pub fn act_epsilon_greedy<R: Rng>(params: &QParams, features: &[f64], rng: &mut R) -> usize {
    if rng.gen::<f64>() < params.epsilon {
        rng.gen_range(0..params.weights.len())
    } else {
        argmax(&params.q_values(features))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub features: &'a [f64],
    pub action: usize,
    pub reward: f64,
    /// Features of the next state; `None` when the episode ended.
    pub next: Option<&'a [f64]>,
}

/// `w_a += alpha * (r + gamma * max_a' Q(s', a') - Q(s, a)) * s`.
pub fn q_update(params: &mut QParams, t: &Transition) -> Result<()> {
    let bootstrap = t.next.map_or(0.0, |next| {
        params.q_values(next).into_iter().fold(f64::NEG_INFINITY, f64::max)
    });
    let td = t.reward + params.gamma * bootstrap - params.q(t.features, t.action);
    let step = params.alpha * td;
    let row = &mut params.weights[t.action];
    let mut max_abs: f64 = 0.0;
    for (w, x) in row.iter_mut().zip(t.features) {
        *w += step * x;
        max_abs = max_abs.max(w.abs());
    }
    if !max_abs.is_finite() || max_abs > DIVERGENCE_LIMIT {
        return Err(Error::DivergenceDetected { max_abs });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params_with_row(values: &[f64]) -> QParams {
        let mut p = QParams::zeros(values.len(), 1, 0.1, 0.9);
        for (i, v) in values.iter().enumerate() {
            p.weights[i][0] = *v;
        }
        p.epsilon = 0.0;
        p
    }

    #[test]
    fn greedy_picks_max() {
        let p = params_with_row(&[0.0, 1.0, 2.0, 5.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(act_epsilon_greedy(&p, &[1.0], &mut rng), 3);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let p = params_with_row(&[0.0, 1.0, 7.0, 3.0, 3.0, 7.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(act_epsilon_greedy(&p, &[1.0], &mut rng), 2);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut p = QParams::zeros(4, 1, 0.1, 0.9);
        p.epsilon = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[act_epsilon_greedy(&p, &[1.0], &mut rng)] += 1;
        }
        let mean = n as f64 / 4.0;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut p = params_with_row(&[0.5, -0.5]);
        p.alpha = 0.0;
        let before = p.clone();
        q_update(&mut p, &Transition { features: &[1.0], action: 0, reward: 3.0, next: Some(&[1.0]) }).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn zero_td_error_is_a_no_op() {
        let mut p = QParams::zeros(2, 3, 0.5, 0.9);
        let before = p.clone();
        q_update(&mut p, &Transition { features: &[1.0, 0.0, 1.0], action: 1, reward: 0.0, next: None }).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn only_the_taken_row_moves() {
        let mut p = QParams::zeros(3, 2, 0.5, 0.9);
        q_update(&mut p, &Transition { features: &[1.0, 1.0], action: 1, reward: 2.0, next: None }).unwrap();
        assert_eq!(p.weights[0], vec![0.0, 0.0]);
        assert_eq!(p.weights[1], vec![1.0, 1.0]);
        assert_eq!(p.weights[2], vec![0.0, 0.0]);
    }

    #[test]
    fn bandit_converges_to_rewarding_arm() {
        let mut p = QParams::zeros(2, 1, 0.1, 0.0);
        p.epsilon = 0.2;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = act_epsilon_greedy(&p, &[1.0], &mut rng);
            let r = if a == 1 { 1.0 } else { 0.0 };
            q_update(&mut p, &Transition { features: &[1.0], action: a, reward: r, next: None }).unwrap();
        }
        assert_eq!(argmax(&p.q_values(&[1.0])), 1);
        assert!((p.q(&[1.0], 1) - 1.0).abs() < 0.05);
    }

    #[test]
    fn divergence_is_reported() {
        let mut p = QParams::zeros(1, 1, 1.0, 0.0);
        let err = q_update(&mut p, &Transition { features: &[1.0], action: 0, reward: 1e7, next: None });
        assert!(matches!(err, Err(Error::DivergenceDetected { .. })));
    }

    #[test]
    fn schedule_endpoints() {
        assert_eq!(epsilon_schedule(0, 1000, 1.0, 0.05, 0.5), 1.0);
        assert!((epsilon_schedule(250, 1000, 1.0, 0.05, 0.5) - 0.525).abs() < 1e-12);
        assert!((epsilon_schedule(500, 1000, 1.0, 0.05, 0.5) - 0.05).abs() < 1e-12);
        assert!((epsilon_schedule(999, 1000, 1.0, 0.05, 0.5) - 0.05).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn fixed_point_when_q_equals_target(w in prop::collection::vec(-5.0f64..5.0, 3), x in prop::collection::vec(0u8..2, 3)) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let mut p = QParams { weights: vec![w], alpha: 0.3, gamma: 0.9, epsilon: 0.0 };
            let r = p.q(&x, 0);
            let before = p.clone();
            q_update(&mut p, &Transition { features: &x, action: 0, reward: r, next: None }).unwrap();
            prop_assert_eq!(p, before);
        }

        #[test]
        fn greedy_choice_is_scale_invariant(
            w in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..6),
            c in 0.01f64..100.0,
        ) {
            let x = [1.0, 0.5];
            let p = QParams { weights: w.clone(), alpha: 0.1, gamma: 0.9, epsilon: 0.0 };
            let scaled = QParams { weights: w.iter().map(|r| r.iter().map(|v| v * c).collect()).collect(), ..p.clone() };
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            prop_assert_eq!(act_epsilon_greedy(&p, &x, &mut rng), act_epsilon_greedy(&scaled, &x, &mut rng));
        }
    }
}
