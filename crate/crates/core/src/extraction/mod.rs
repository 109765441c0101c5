//! Compositional DFA extraction from a trained network.
//!
//! Hidden vectors are collected along every string, quantized with k-means,
//! and the observed cluster-to-cluster moves are reduced to one transition
//! per (cluster, symbol) by majority vote. The diagram is then labeled,
//! completed with a dead state and minimized.

mod diagram;
mod kmeans;
pub mod synthetic;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::automata::Dfa;
use crate::error::{Error, Result};
use crate::grammars::{StringLabel, STOP};
use crate::rnn::{CellState, RnnModel};

pub use diagram::{build_transition_diagram, Diagram, TransitionCounts};
pub use kmeans::{kmeans, kmeans_weighted, Clustering, MAX_ITERATIONS};

/// One hidden vector observed while reading a string.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePoint {
    pub vector: Vec<f64>,
    pub string_id: usize,
    /// Number of symbols consumed; `|s| + 1` for the stop-symbol point.
    pub step: usize,
    /// Symbol consumed to reach this point; `None` for the initial point.
    pub symbol: Option<u8>,
    /// Response neuron of this vector, mapped to `(0, 1)`.
    pub response: f64,
    /// Response after feeding the stop symbol from this vector.
    pub stop_response: f64,
    /// Set on the point reached after the last binary symbol.
    pub is_end: bool,
}

/// Points of one string: the initial vector, one per binary symbol, and the
/// stop-symbol point kept apart because it never becomes a DFA edge.
#[derive(Debug, Clone, PartialEq)]
pub struct StringTrace {
    pub points: Vec<StatePoint>,
    pub stop: StatePoint,
}

impl StringTrace {
    /// The point after the last binary symbol.
    pub fn end(&self) -> &StatePoint {
        self.points.last().expect("a trace holds at least its initial point")
    }
}

/// Runs the frozen model over every string of `split`.
pub fn collect_states(model: &RnnModel, split: &[StringLabel], h0: &[f64]) -> Result<Vec<StringTrace>> {
    if h0.len() != model.hidden_size() {
        return Err(Error::DimensionMismatch { expected: model.hidden_size(), got: h0.len() });
    }
    let mut traces = Vec::with_capacity(split.len());
    for (id, s) in split.iter().enumerate() {
        if let Some(&bad) = s.string.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidSymbol(bad));
        }
        let point = |state: &CellState, step: usize, symbol: Option<u8>, stop: &CellState| StatePoint {
            vector: state.hidden.clone(),
            string_id: id,
            step,
            symbol,
            response: model.response_of(state),
            stop_response: model.response_of(stop),
            is_end: step == s.string.len(),
        };
        let mut state = CellState::initial(model, h0);
        let mut points = Vec::with_capacity(s.string.len() + 1);
        let mut symbol = None;
        for step in 0..=s.string.len() {
            let stopped = model.step(&state, STOP);
            points.push(point(&state, step, symbol, &stopped));
            if step < s.string.len() {
                let a = s.string[step];
                state = model.step(&state, a);
                symbol = Some(a);
            } else {
                let mut stop = point(&stopped, step + 1, Some(STOP), &stopped);
                stop.is_end = false;
                traces.push(StringTrace { points, stop });
                break;
            }
        }
    }
    Ok(traces)
}

/// Which response decides whether a cluster accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LabelSource {
    /// Response after the stop symbol, the quantity the loss supervises.
    #[default]
    StopStep,
    /// Response of the vector after the last binary symbol.
    LastSymbol,
}

/// How to label reachable clusters that hold no end-of-string point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum UnobservedLabel {
    /// Choose the labels giving the smallest minimal automaton among those
    /// that contradict the network's verdicts on the traced strings no more
    /// often than the stop-probe labels do; ties go to the stop-probe labels,
    /// then to the first combination found.
    #[default]
    Minimal,
    /// Mean stop-probe response of all member points.
    StopProbe,
    /// Always rejecting.
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ExtractionOptions {
    pub label_source: LabelSource,
    pub unobserved: UnobservedLabel,
}

/// Result of one extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Completed and minimized automaton.
    pub dfa: Dfa,
    /// Live clusters, i.e. states of the diagram before minimization.
    pub live_states: usize,
    pub diagram: Diagram,
}

/// Reusable extraction over fixed traces: the points are deduplicated once
/// and clustered for any number of (K, seed) pairs.
#[derive(Debug, Clone)]
pub struct Extractor<'a> {
    traces: &'a [StringTrace],
    options: ExtractionOptions,
    unique: Vec<Vec<f64>>,
    weights: Vec<usize>,
    /// Unique-vector index of every binary-step point, trace-major.
    flat: Vec<usize>,
}

impl<'a> Extractor<'a> {
    pub fn new(traces: &'a [StringTrace], options: ExtractionOptions) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let (mut unique, mut weights, mut flat) = (Vec::new(), Vec::new(), Vec::new());
        for p in traces.iter().flat_map(|t| &t.points) {
            let key: Vec<u64> = p.vector.iter().map(|x| x.to_bits()).collect();
            let id = *index.entry(key).or_insert_with(|| {
                unique.push(p.vector.clone());
                weights.push(0);
                unique.len() - 1
            });
            weights[id] += 1;
            flat.push(id);
        }
        Ok(Self { traces, options, unique, weights, flat })
    }

    pub fn distinct_points(&self) -> usize {
        self.unique.len()
    }

    pub fn cluster(&self, k: usize, seed: u64) -> Result<Clustering> {
        let c = kmeans_weighted(&self.unique, &self.weights, k, seed)?;
        let assignments = self.flat.iter().map(|&u| c.assignments[u]).collect();
        Ok(Clustering { assignments, ..c })
    }

    pub fn extract(&self, k: usize, seed: u64) -> Result<Extraction> {
        let clustering = self.cluster(k, seed)?;
        let diagram = build_transition_diagram(&clustering, self.traces, self.options)?;
        let dfa = diagram.dfa.complete().minimize()?;
        Ok(Extraction { dfa, live_states: clustering.live(), diagram })
    }
}

/// Collect, cluster, build, complete and minimize in one call.
pub fn extract_dfa(
    model: &RnnModel,
    split: &[StringLabel],
    k: usize,
    seed: u64,
    h0: &[f64],
    options: ExtractionOptions,
) -> Result<Extraction> {
    let traces = collect_states(model, split, h0)?;
    Extractor::new(&traces, options)?.extract(k, seed)
}

/// Fraction of strings whose verdict under `dfa` matches the label.
pub fn evaluate_dfa(dfa: &Dfa, split: &[StringLabel]) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut correct = 0usize;
    for s in split {
        if dfa.run(&s.string)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / split.len() as f64)
}
