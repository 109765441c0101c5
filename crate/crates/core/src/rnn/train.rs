//! Per-sample RMSprop training.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cell::{loss_and_gradient, Tape};
use super::{loss, CellState, RmsProp, RnnModel};
use crate::error::{Error, Result};
use crate::grammars::{encode, StringLabel};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Mean training loss must fall below this, alongside perfect accuracy.
    pub loss_threshold: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, decay: 0.9, epsilon: 1e-8, max_epochs: 2000, loss_threshold: 1e-3, shuffle_seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning rate must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(Error::InvalidConfig("decay must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Frozen-weight evaluation at the end of an epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: RnnModel,
    pub history: Vec<EpochStats>,
    pub converged: bool,
}

impl TrainOutcome {
    pub fn epochs(&self) -> usize {
        self.history.len()
    }

    pub fn final_stats(&self) -> Option<EpochStats> {
        self.history.last().copied()
    }
}

pub fn train(model: RnnModel, data: &[StringLabel], config: &TrainConfig, h0: &[f64]) -> Result<TrainOutcome> {
    train_with(model, data, config, h0, |_| {})
}

/// Like [`train`], calling `on_epoch` after every evaluation.
pub fn train_with(
    mut model: RnnModel,
    data: &[StringLabel],
    config: &TrainConfig,
    h0: &[f64],
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if h0.len() != model.hidden_size() {
        return Err(Error::DimensionMismatch { expected: model.hidden_size(), got: h0.len() });
    }
    let samples: Vec<(Vec<u8>, bool)> = data
        .iter()
        .map(|s| Ok((encode(&s.string)?.symbols().to_vec(), s.label)))
        .collect::<Result<_>>()?;
    // evaluation weights each distinct example by its multiplicity
    let mut distinct: BTreeMap<(&[u8], bool), usize> = BTreeMap::new();
    for (s, y) in &samples {
        *distinct.entry((s.as_slice(), *y)).or_insert(0) += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut opt = RmsProp::new(model.params().len(), config.learning_rate, config.decay, config.epsilon);
    let mut grad = vec![0.0; model.params().len()];
    let mut tape = Tape::default();
    let mut history = Vec::new();
    let mut converged = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (symbols, label) = &samples[i];
            grad.iter_mut().for_each(|g| *g = 0.0);
            loss_and_gradient(&model, symbols, *label, h0, &mut tape, &mut grad);
            opt.step(model.params_mut(), &grad)?;
        }

        let (mut total_loss, mut correct) = (0.0, 0usize);
        for (&(symbols, label), &count) in &distinct {
            let mut state = CellState::initial(&model, h0);
            for &k in symbols {
                state = model.step(&state, k);
            }
            let response = model.response_of(&state);
            total_loss += count as f64 * loss(response, label);
            if (response >= 0.5) == label {
                correct += count;
            }
        }
        let stats = EpochStats {
            epoch,
            mean_loss: total_loss / samples.len() as f64,
            accuracy: correct as f64 / samples.len() as f64,
        };
        on_epoch(&stats);
        history.push(stats);
        if !stats.mean_loss.is_finite() {
            break;
        }
        if correct == samples.len() && stats.mean_loss < config.loss_threshold {
            converged = true;
            break;
        }
    }
    Ok(TrainOutcome { model, history, converged })
}

#[cfg(test)]
mod tests {
    use super::super::{initial_hidden, Architecture, ModelConfig};
    use super::*;

    #[test]
    fn single_sample_converges_monotonically() {
        let cfg = ModelConfig::new(Architecture::SecondOrder, None, 4, 3).unwrap();
        let h0 = initial_hidden(&cfg, 9);
        let data = [StringLabel { string: vec![1, 0, 1], label: true }];
        let tc = TrainConfig { learning_rate: 1e-2, ..TrainConfig::default() };
        let out = train(RnnModel::init(cfg).unwrap(), &data, &tc, &h0).unwrap();
        assert!(out.converged);
        assert!(out.final_stats().unwrap().mean_loss < 1e-3);
        for w in out.history.windows(2) {
            assert!(w[1].mean_loss <= w[0].mean_loss);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = ModelConfig::new(Architecture::Gru, None, 3, 5).unwrap();
        let h0 = initial_hidden(&cfg, 1);
        let data = [
            StringLabel { string: vec![1, 1], label: true },
            StringLabel { string: vec![0], label: false },
            StringLabel { string: vec![1, 0], label: false },
        ];
        let tc = TrainConfig { max_epochs: 5, shuffle_seed: 7, ..TrainConfig::default() };
        let a = train(RnnModel::init(cfg.clone()).unwrap(), &data, &tc, &h0).unwrap();
        let b = train(RnnModel::init(cfg).unwrap(), &data, &tc, &h0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.epochs(), 5);
        assert!(!a.converged);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = ModelConfig::new(Architecture::Elman, None, 3, 5).unwrap();
        let m = RnnModel::init(cfg).unwrap();
        let tc = TrainConfig::default();
        assert!(train(m.clone(), &[], &tc, &[0.5; 3]).is_err());
        let data = [StringLabel { string: vec![1], label: true }];
        assert!(train(m.clone(), &data, &tc, &[0.5; 2]).is_err());
        let bad = TrainConfig { learning_rate: 0.0, ..tc.clone() };
        assert!(train(m.clone(), &data, &bad, &[0.5; 3]).is_err());
        let bad = TrainConfig { max_epochs: 0, ..tc };
        assert!(train(m, &data, &bad, &[0.5; 3]).is_err());
    }
}
