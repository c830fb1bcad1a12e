use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::net::bce;
use super::{Model, ModelError};
use crate::paths::PathSample;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean loss per epoch, measured during the epoch.
    pub epoch_loss: Vec<f64>,
    pub steps: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

impl Model {
    /// Loss and gradient of one sample.
    pub fn loss_and_gradient(&self, sample: &PathSample) -> Result<(f64, Vec<f64>), ModelError> {
        let cache = self.forward(&sample.paths, sample.relation)?;
        Ok((
            bce(cache.probability, sample.label),
            self.backward(&cache, sample.label),
        ))
    }

    /// Mini-batch Adam on binary cross-entropy for `cfg.epochs` epochs,
    /// reshuffling each epoch from the seed. Per-sample gradients are
    /// computed in parallel and summed in batch order, so the result does
    /// not depend on the thread count.
    pub fn train(&mut self, samples: &[PathSample]) -> Result<TrainReport, ModelError> {
        self.train_with(samples, |_, _| {})
    }

    /// [`Model::train`], calling `on_epoch(epoch, mean_loss)` after each
    /// epoch.
    pub fn train_with(
        &mut self,
        samples: &[PathSample],
        mut on_epoch: impl FnMut(usize, f64),
    ) -> Result<TrainReport, ModelError> {
        for s in samples {
            self.check(&s.paths, s.relation)?;
        }
        let mut adam = Adam {
            m: vec![0.0; self.layout.total],
            v: vec![0.0; self.layout.total],
            t: 0,
        };
        let mut report = TrainReport {
            epoch_loss: Vec::with_capacity(self.cfg.epochs),
            steps: 0,
        };
        let mut order: Vec<usize> = (0..samples.len()).collect();
        for epoch in 0..self.cfg.epochs {
            let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
            rng.set_stream(epoch as u64 + 1);
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for (batch, idx) in order.chunks(self.cfg.batch_size).enumerate() {
                let parts: Vec<(f64, Vec<f64>)> = idx
                    .par_iter()
                    .map(|&i| self.loss_and_gradient(&samples[i]))
                    .collect::<Result<_, _>>()?;
                let mut grad = vec![0.0; self.layout.total];
                let mut loss = 0.0;
                for (l, g) in &parts {
                    loss += l;
                    grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
                }
                if !loss.is_finite() {
                    return Err(ModelError::NonFiniteLoss { epoch, batch });
                }
                let scale = 1.0 / idx.len() as f64;
                grad.iter_mut().for_each(|g| *g *= scale);
                adam.step(&mut self.params, &grad, self.cfg.learning_rate);
                if !self.is_finite() {
                    return Err(ModelError::NonFiniteParameter { epoch, batch });
                }
                total += loss;
                report.steps += 1;
            }
            let mean = if samples.is_empty() {
                0.0
            } else {
                total / samples.len() as f64
            };
            on_epoch(epoch, mean);
            report.epoch_loss.push(mean);
        }
        Ok(report)
    }

    /// Scores in input order.
    pub fn predict(&self, samples: &[PathSample]) -> Result<Vec<f64>, ModelError> {
        samples.par_iter().map(|s| self.score(s)).collect()
    }

    /// Mean loss over `samples` without updating.
    pub fn mean_loss(&self, samples: &[PathSample]) -> Result<f64, ModelError> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let losses: Vec<f64> = samples
            .par_iter()
            .map(|s| Ok(bce(self.score(s)?, s.label)))
            .collect::<Result<_, ModelError>>()?;
        Ok(losses.iter().sum::<f64>() / samples.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_relative_error: f64,
    /// Parameter index where it occurs.
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares the analytic gradient of one sample's loss with central
/// differences of step `eps` at every parameter coordinate. Errors are
/// relative, with magnitudes below `floor` treated as `floor`.
pub fn gradient_check(
    model: &Model,
    sample: &PathSample,
    eps: f64,
    floor: f64,
) -> Result<GradientCheck, ModelError> {
    let (_, analytic) = model.loss_and_gradient(sample)?;
    let loss_at = |params: &[f64]| -> Result<f64, ModelError> {
        let c = model.forward_with(params, &sample.paths, sample.relation)?;
        Ok(bce(c.probability, sample.label))
    };
    let mut params = model.params.clone();
    let mut out = GradientCheck {
        max_relative_error: 0.0,
        worst_index: 0,
        checked: params.len(),
    };
    for i in 0..params.len() {
        let x = params[i];
        params[i] = x + eps;
        let up = loss_at(&params)?;
        params[i] = x - eps;
        let down = loss_at(&params)?;
        params[i] = x;
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        if rel > out.max_relative_error {
            out.max_relative_error = rel;
            out.worst_index = i;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siamese::ModelConfig;

    fn tiny(seed: u64) -> Model {
        let mut cfg = ModelConfig::new(10, 4);
        cfg.embed_dim = 4;
        cfg.hidden_dim = 4;
        cfg.layers = 1;
        cfg.fusion_dim = 4;
        cfg.seed = seed;
        Model::new(cfg).unwrap()
    }

    fn sample(label: u8) -> PathSample {
        PathSample {
            paths: vec![vec![2, 5, 7, 0], vec![3, 0, 0, 0], vec![9, 9, 4, 8]],
            relation: 2,
            label,
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            for label in [0, 1] {
                let g = gradient_check(&tiny(seed), &sample(label), 1e-4, 1e-6).unwrap();
                assert!(g.max_relative_error <= 1e-3, "{seed}/{label}: {g:?}");
            }
        }
        // Two stacked layers exercise the inter-layer path. A non-zero
        // fusion bias keeps |p| away from 0, where the cosine's curvature
        // swamps central differences.
        let mut cfg = tiny(5).cfg;
        cfg.layers = 2;
        let mut m = Model::new(cfg).unwrap();
        m.tensor_mut("fusion.b")
            .unwrap()
            .copy_from_slice(&[0.3, -0.2, 0.1, 0.4]);
        let g = gradient_check(&m, &sample(1), 1e-4, 1e-6).unwrap();
        assert!(g.max_relative_error <= 1e-3, "{g:?}");
    }

    #[test]
    fn overfits_one_sample() {
        let mut m = tiny(1);
        m.cfg.learning_rate = 1e-3;
        m.cfg.epochs = 1;
        m.cfg.batch_size = 1;
        let s = vec![sample(1); 10];
        let mut losses = Vec::new();
        for _ in 0..10 {
            losses.push(m.mean_loss(&s[..1]).unwrap());
            m.train(&s[..1]).unwrap();
        }
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut m = tiny(2);
        m.cfg.learning_rate = 0.0;
        let before = m.params.clone();
        let r = m.train(&[sample(1), sample(0)]).unwrap();
        assert_eq!(m.params, before);
        assert!(r.epoch_loss.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<PathSample> = (0..40).map(|i| sample((i % 2) as u8)).collect();
        let run = || {
            let mut m = tiny(4);
            m.cfg.batch_size = 8;
            m.train(&data).unwrap();
            m.params
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn predict_preserves_order() {
        let m = tiny(1);
        assert!(m.predict(&[]).unwrap().is_empty());
        let s = [sample(1), sample(0)];
        let scores = m.predict(&s).unwrap();
        assert_eq!(scores[0], m.score(&s[0]).unwrap());
        assert_eq!(scores, m.predict(&s).unwrap());
    }
}
