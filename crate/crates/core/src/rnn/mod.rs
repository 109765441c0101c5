//! Recurrent networks with a designated response neuron.
//!
//! Five cells are supported: Elman, second-order, multiplicative
//! integration (MI-RNN), LSTM and GRU. All weights live in one flat buffer;
//! [`TensorSpec`] records each tensor's name, shape and position so
//! gradients, optimizer state and checkpoints share one layout.

mod cell;
mod optim;
mod train;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grammars::{encode, EncodedSequence, StringLabel, INPUT_SIZE};

pub use cell::CellState;
pub use optim::RmsProp;
pub use train::{train, train_with, EpochStats, TrainConfig, TrainOutcome};

/// Half-width of the uniform weight initialization interval.
pub const INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    Elman,
    SecondOrder,
    MiRnn,
    Lstm,
    Gru,
}

impl Architecture {
    pub const ALL: [Architecture; 5] =
        [Architecture::Elman, Architecture::SecondOrder, Architecture::MiRnn, Architecture::Lstm, Architecture::Gru];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Elman => "elman",
            Architecture::SecondOrder => "second_order",
            Architecture::MiRnn => "mi_rnn",
            Architecture::Lstm => "lstm",
            Architecture::Gru => "gru",
        }
    }

    /// Whether the hidden activation can be chosen; the gated and
    /// multiplicative cells have tanh-ranged outputs by construction.
    pub fn has_selectable_activation(self) -> bool {
        matches!(self, Architecture::Elman | Architecture::SecondOrder)
    }

    pub fn default_activation(self) -> Activation {
        if self.has_selectable_activation() {
            Activation::Sigmoid
        } else {
            Activation::Tanh
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        Ok(match s {
            "elman" => Architecture::Elman,
            "second_order" | "second-order" | "2nd" => Architecture::SecondOrder,
            "mi_rnn" | "mi-rnn" | "mi" => Architecture::MiRnn,
            "lstm" => Architecture::Lstm,
            "gru" => Architecture::Gru,
            other => return Err(alloc::format!("unknown architecture `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    pub fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }

    /// Open interval of attainable outputs.
    pub fn range(self) -> (f64, f64) {
        match self {
            Activation::Sigmoid => (0.0, 1.0),
            Activation::Tanh => (-1.0, 1.0),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(alloc::format!("unknown activation `{other}`")),
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// Hidden activation; always `Tanh` for MI-RNN, LSTM and GRU, whose
    /// outputs are tanh-ranged.
    pub activation: Activation,
    pub hidden_size: usize,
    pub input_size: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// A configuration with the three-symbol input layer. `activation`
    /// defaults to the architecture's default.
    pub fn new(architecture: Architecture, activation: Option<Activation>, hidden_size: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            architecture,
            activation: activation.unwrap_or(architecture.default_activation()),
            hidden_size,
            input_size: INPUT_SIZE,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_size < 2 {
            return Err(Error::InvalidConfig("hidden_size must be at least 2"));
        }
        if self.input_size == 0 {
            return Err(Error::InvalidConfig("input_size must be positive"));
        }
        if !self.architecture.has_selectable_activation() && self.activation != Activation::Tanh {
            return Err(Error::UnsupportedActivation(self.activation.as_str()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        param_count(self.architecture, self.hidden_size, self.input_size)
    }

    /// Maps the raw response neuron onto `(0, 1)`.
    #[inline]
    pub fn response_from_raw(&self, raw: f64) -> f64 {
        match self.activation {
            Activation::Sigmoid => raw,
            Activation::Tanh => 0.5 * (raw + 1.0),
        }
    }

    /// d(response) / d(raw neuron).
    #[inline]
    pub(crate) fn response_slope(&self) -> f64 {
        match self.activation {
            Activation::Sigmoid => 1.0,
            Activation::Tanh => 0.5,
        }
    }
}

/// Name, shape and position of one weight tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Tensor layout of an architecture, in parameter-list order.
pub fn tensor_specs(architecture: Architecture, hidden: usize, input: usize) -> Vec<TensorSpec> {
    let (u, w, v) = (vec![hidden, input], vec![hidden, hidden], vec![hidden]);
    let list: Vec<(&'static str, Vec<usize>)> = match architecture {
        Architecture::Elman => vec![("U", u), ("W", w), ("b", v)],
        Architecture::SecondOrder => vec![("W", vec![hidden, hidden, input])],
        Architecture::MiRnn => vec![
            ("U", u),
            ("W", w),
            ("alpha", v.clone()),
            ("beta1", v.clone()),
            ("beta2", v.clone()),
            ("b", v),
        ],
        Architecture::Lstm => vec![
            ("U_i", u.clone()),
            ("W_i", w.clone()),
            ("U_f", u.clone()),
            ("W_f", w.clone()),
            ("U_o", u.clone()),
            ("W_o", w.clone()),
            ("U_g", u),
            ("W_g", w),
        ],
        Architecture::Gru => vec![
            ("U_z", u.clone()),
            ("W_z", w.clone()),
            ("U_r", u.clone()),
            ("W_r", w.clone()),
            ("U_h", u),
            ("W_h", w),
        ],
    };
    let mut offset = 0;
    list.into_iter()
        .map(|(name, shape)| {
            let spec = TensorSpec { name, shape, offset };
            offset += spec.len();
            spec
        })
        .collect()
}

/// Number of trainable scalars.
pub fn param_count(architecture: Architecture, hidden: usize, input: usize) -> usize {
    tensor_specs(architecture, hidden, input).iter().map(TensorSpec::len).sum()
}

/// Hidden width whose parameter count is closest to `target` (ties go to
/// the smaller width). Widths start at 2.
pub fn budget_hidden_size(architecture: Architecture, target: usize, input: usize) -> usize {
    let mut best = (usize::MAX, 2);
    let mut hidden = 2;
    loop {
        let count = param_count(architecture, hidden, input);
        let gap = count.abs_diff(target);
        if gap < best.0 {
            best = (gap, hidden);
        }
        if count > target {
            break;
        }
        hidden += 1;
    }
    best.1
}

/// Parameter budget for a grammar: 30100 for grammar 5, 10502 for grammar
/// 6, and 1220 otherwise.
pub fn grammar_param_budget(grammar: crate::Grammar) -> usize {
    match grammar.index() {
        5 => 30100,
        6 => 10502,
        _ => 1220,
    }
}

/// A recurrent network with flat weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    config: ModelConfig,
    specs: Vec<TensorSpec>,
    params: Vec<f64>,
}

impl RnnModel {
    /// Weights drawn i.i.d. from `U[-0.1, 0.1]` with the config's seed.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let specs = tensor_specs(config.architecture, config.hidden_size, config.input_size);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = (0..config.param_count()).map(|_| rng.gen_range(-INIT_SCALE..=INIT_SCALE)).collect();
        Ok(Self { config, specs, params })
    }

    /// Rebuilds a model from stored weights.
    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let expected = config.param_count();
        if params.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("weights must be finite"));
        }
        let specs = tensor_specs(config.architecture, config.hidden_size, config.input_size);
        Ok(Self { config, specs, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.specs.iter().find(|s| s.name == name).map(|s| &self.params[s.range()])
    }

    pub fn hidden_size(&self) -> usize {
        self.config.hidden_size
    }

    fn check_h0(&self, h0: &[f64]) -> Result<()> {
        if h0.len() != self.config.hidden_size {
            return Err(Error::DimensionMismatch { expected: self.config.hidden_size, got: h0.len() });
        }
        Ok(())
    }

    /// Runs every step of `sequence`, stop symbol included.
    pub fn forward(&self, sequence: &EncodedSequence, h0: &[f64]) -> Result<StateTrace> {
        self.check_h0(h0)?;
        let mut state = CellState::initial(self, h0);
        let mut hidden = Vec::with_capacity(sequence.len() + 1);
        hidden.push(state.hidden.clone());
        for &s in sequence.symbols() {
            state = self.step(&state, s);
            hidden.push(state.hidden.clone());
        }
        Ok(StateTrace {
            hidden,
            symbols: sequence.symbols().to_vec(),
            response: self.config.response_from_raw(state.hidden[0]),
        })
    }

    /// Response after consuming `sequence`, without keeping the trace.
    pub fn response(&self, sequence: &EncodedSequence, h0: &[f64]) -> Result<f64> {
        self.check_h0(h0)?;
        let mut state = CellState::initial(self, h0);
        for &s in sequence.symbols() {
            state = self.step(&state, s);
        }
        Ok(self.config.response_from_raw(state.hidden[0]))
    }

    /// One update of the hidden layer on input symbol `symbol`.
    pub fn step(&self, state: &CellState, symbol: u8) -> CellState {
        cell::step(self, state, symbol as usize)
    }

    /// Response neuron of a state, mapped to `(0, 1)`.
    pub fn response_of(&self, state: &CellState) -> f64 {
        self.config.response_from_raw(state.hidden[0])
    }

    /// Loss and exact gradient of every weight by backpropagation through
    /// time over the whole sequence.
    pub fn gradient(&self, sequence: &EncodedSequence, label: bool, h0: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_h0(h0)?;
        let mut tape = cell::Tape::default();
        let mut grad = vec![0.0; self.params.len()];
        let loss = cell::loss_and_gradient(self, sequence.symbols(), label, h0, &mut tape, &mut grad);
        Ok((loss, grad))
    }

    /// Predicts membership: positive iff the response is at least 0.5.
    pub fn predict(&self, sequence: &EncodedSequence, h0: &[f64]) -> Result<bool> {
        Ok(self.response(sequence, h0)? >= 0.5)
    }
}

/// Hidden vectors of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrace {
    /// Initial vector followed by one vector per consumed symbol.
    pub hidden: Vec<Vec<f64>>,
    /// Consumed symbols, stop symbol last.
    pub symbols: Vec<u8>,
    /// Final response neuron mapped to `(0, 1)`.
    pub response: f64,
}

/// `(1/2)(y - response)^2`.
pub fn loss(response: f64, label: bool) -> f64 {
    let y = if label { 1.0 } else { 0.0 };
    0.5 * (y - response) * (y - response)
}

/// Fraction of strings classified correctly at threshold 0.5.
pub fn accuracy(model: &RnnModel, split: &[StringLabel], h0: &[f64]) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut correct = 0usize;
    for s in split {
        if model.predict(&encode(&s.string)?, h0)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / split.len() as f64)
}

/// Random initial hidden vector, uniform over the activation's range.
pub fn initial_hidden(config: &ModelConfig, seed: u64) -> Vec<f64> {
    let (lo, hi) = config.activation.range();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..config.hidden_size).map(|_| rng.gen_range(lo..=hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_word;
    use crate::Grammar;

    fn cfg(arch: Architecture, act: Option<Activation>, n: usize) -> ModelConfig {
        ModelConfig::new(arch, act, n, 1).unwrap()
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(param_count(Architecture::Elman, 33, 3), 1221);
        assert_eq!(param_count(Architecture::SecondOrder, 20, 3), 1200);
        assert_eq!(param_count(Architecture::Lstm, 16, 3), 1216);
        assert_eq!(param_count(Architecture::Gru, 19, 3), 3 * (19 * 19 + 19 * 3));
        assert_eq!(param_count(Architecture::MiRnn, 32, 3), 32 * 32 + 32 * 3 + 4 * 32);
    }

    #[test]
    fn budgets() {
        assert_eq!(budget_hidden_size(Architecture::SecondOrder, 1220, 3), 20);
        assert_eq!(budget_hidden_size(Architecture::SecondOrder, 30100, 3), 100);
        assert_eq!(budget_hidden_size(Architecture::Elman, 1220, 3), 33);
    }

    #[test]
    fn budgets_within_five_percent_for_every_grammar() {
        for g in Grammar::all() {
            let target = grammar_param_budget(g);
            for arch in Architecture::ALL {
                let n = budget_hidden_size(arch, target, 3);
                let got = param_count(arch, n, 3);
                let rel = got.abs_diff(target) as f64 / target as f64;
                assert!(rel <= 0.05, "{g} {arch}: {got} vs {target}");
            }
        }
    }

    #[test]
    fn activation_restrictions() {
        assert!(ModelConfig::new(Architecture::Lstm, Some(Activation::Sigmoid), 4, 0).is_err());
        assert!(ModelConfig::new(Architecture::Elman, Some(Activation::Tanh), 4, 0).is_ok());
        assert!(ModelConfig::new(Architecture::Elman, None, 1, 0).is_err());
        assert_eq!(cfg(Architecture::Gru, None, 3).activation, Activation::Tanh);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = RnnModel::init(cfg(Architecture::Lstm, None, 6)).unwrap();
        let b = RnnModel::init(cfg(Architecture::Lstm, None, 6)).unwrap();
        assert_eq!(a, b);
        let c = RnnModel::init(ModelConfig { seed: 2, ..a.config().clone() }).unwrap();
        assert_ne!(a.params(), c.params());
        assert!(a.params().iter().all(|w| w.abs() <= INIT_SCALE));
    }

    #[test]
    fn tensor_shapes() {
        let m = RnnModel::init(cfg(Architecture::SecondOrder, None, 5)).unwrap();
        assert_eq!(m.specs()[0].shape, vec![5, 5, 3]);
        let m = RnnModel::init(cfg(Architecture::Gru, None, 4)).unwrap();
        let names: Vec<_> = m.specs().iter().map(|s| s.name).collect();
        assert_eq!(names, ["U_z", "W_z", "U_r", "W_r", "U_h", "W_h"]);
        assert_eq!(m.tensor("W_h").unwrap().len(), 16);
    }

    #[test]
    fn zero_weights_give_activation_at_zero() {
        let seq = encode(&parse_word("0110").unwrap()).unwrap();
        for (arch, act, expected) in [
            (Architecture::Elman, Activation::Sigmoid, 0.5),
            (Architecture::SecondOrder, Activation::Sigmoid, 0.5),
            (Architecture::SecondOrder, Activation::Tanh, 0.0),
        ] {
            let c = cfg(arch, Some(act), 4);
            let m = RnnModel::from_params(c.clone(), vec![0.0; c.param_count()]).unwrap();
            let trace = m.forward(&seq, &[0.3, -0.2, 0.9, 0.1]).unwrap();
            assert_eq!(trace.hidden.len(), seq.len() + 1);
            for h in &trace.hidden[1..] {
                assert!(h.iter().all(|&x| x == expected));
            }
        }
    }

    #[test]
    fn traces_stay_in_range() {
        let seq = encode(&parse_word("1101001").unwrap()).unwrap();
        for arch in Architecture::ALL {
            for act in [Activation::Sigmoid, Activation::Tanh] {
                let Ok(c) = ModelConfig::new(arch, Some(act), 5, 3) else { continue };
                let mut m = RnnModel::init(c.clone()).unwrap();
                m.params_mut().iter_mut().for_each(|w| *w *= 20.0);
                let h0 = initial_hidden(&c, 4);
                let trace = m.forward(&seq, &h0).unwrap();
                assert_eq!(trace.hidden.len(), seq.len() + 1);
                let (lo, hi) = act.range();
                for h in &trace.hidden[1..] {
                    assert!(h.iter().all(|&x| x >= lo && x <= hi), "{arch} {act}");
                }
                assert!((0.0..=1.0).contains(&trace.response));
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = RnnModel::init(cfg(Architecture::Elman, None, 4)).unwrap();
        let seq = encode(&[1]).unwrap();
        assert!(matches!(m.forward(&seq, &[0.0; 3]), Err(Error::DimensionMismatch { .. })));
        assert!(RnnModel::from_params(m.config().clone(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn loss_values() {
        assert_eq!(loss(0.5, true), 0.125);
        assert_eq!(loss(1.0, true), 0.0);
        assert_eq!(loss(0.0, true), 0.5);
    }

    #[test]
    fn constant_half_response_predicts_positive() {
        let c = cfg(Architecture::SecondOrder, Some(Activation::Sigmoid), 3);
        let m = RnnModel::from_params(c.clone(), vec![0.0; c.param_count()]).unwrap();
        let split = [
            StringLabel { string: vec![1, 1], label: true },
            StringLabel { string: vec![0], label: false },
        ];
        assert_eq!(accuracy(&m, &split, &[0.5; 3]).unwrap(), 0.5);
        assert!(accuracy(&m, &[], &[0.5; 3]).is_err());
    }

    #[test]
    fn initial_hidden_ranges() {
        let s = cfg(Architecture::SecondOrder, Some(Activation::Sigmoid), 50);
        assert!(initial_hidden(&s, 1).iter().all(|x| (0.0..=1.0).contains(x)));
        let t = cfg(Architecture::Lstm, None, 50);
        let h = initial_hidden(&t, 1);
        assert!(h.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert!(h.iter().any(|&x| x < 0.0));
    }
}
