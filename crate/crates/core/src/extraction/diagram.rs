//! Transition diagrams over clusters.

use alloc::vec;
use alloc::vec::Vec;

use super::{Clustering, ExtractionOptions, LabelSource, StringTrace, UnobservedLabel};
use crate::automata::{Dfa, ALPHABET};
use crate::error::{Error, Result};

/// Largest number of unlabeled clusters searched exhaustively.
const MAX_LABEL_SEARCH: usize = 10;

/// Observed moves between clusters, per (cluster, symbol, target).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCounts {
    clusters: usize,
    counts: Vec<usize>,
}

impl TransitionCounts {
    pub fn new(clusters: usize) -> Self {
        Self { clusters, counts: vec![0; clusters * ALPHABET * clusters] }
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    #[inline]
    fn slot(&self, from: usize, symbol: u8) -> usize {
        (from * ALPHABET + symbol as usize) * self.clusters
    }

    pub fn record(&mut self, from: usize, symbol: u8, to: usize) {
        let s = self.slot(from, symbol);
        self.counts[s + to] += 1;
    }

    pub fn get(&self, from: usize, symbol: u8, to: usize) -> usize {
        self.counts[self.slot(from, symbol) + to]
    }

    pub fn targets(&self, from: usize, symbol: u8) -> &[usize] {
        let s = self.slot(from, symbol);
        &self.counts[s..s + self.clusters]
    }

    pub fn total(&self, from: usize, symbol: u8) -> usize {
        self.targets(from, symbol).iter().sum()
    }

    /// Most frequent target; ties go to the lowest index. `None` if unobserved.
    pub fn majority(&self, from: usize, symbol: u8) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (to, &n) in self.targets(from, symbol).iter().enumerate() {
            if n > 0 && best.map_or(true, |(_, m)| n > m) {
                best = Some((to, n));
            }
        }
        best.map(|(to, _)| to)
    }
}

/// A labeled, possibly partial diagram with one state per live cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    pub dfa: Dfa,
    pub counts: TransitionCounts,
    /// Accept verdict from end-of-string evidence; `None` where a cluster
    /// holds no end-of-string point.
    pub observed_labels: Vec<Option<bool>>,
}

/// Builds the majority-vote diagram. `clustering.assignments` must list the
/// binary-step points of `traces` in order, trace by trace.
pub fn build_transition_diagram(clustering: &Clustering, traces: &[StringTrace], options: ExtractionOptions) -> Result<Diagram> {
    let expected: usize = traces.iter().map(|t| t.points.len()).sum();
    if clustering.assignments.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: clustering.assignments.len() });
    }
    if traces.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = clustering.live();
    let mut counts = TransitionCounts::new(k);
    let mut end_sum = vec![0.0; k];
    let mut end_n = vec![0usize; k];
    let mut probe_sum = vec![0.0; k];
    let mut probe_n = vec![0usize; k];

    let mut verdicts = Vec::with_capacity(traces.len());
    let mut cursor = 0;
    for t in traces {
        let ids = &clustering.assignments[cursor..cursor + t.points.len()];
        cursor += t.points.len();
        for (i, p) in t.points.iter().enumerate() {
            let c = ids[i];
            if c >= k {
                return Err(Error::InvalidDfa("assignment outside the live clusters"));
            }
            if let Some(a) = p.symbol {
                counts.record(ids[i - 1], a, c);
            }
            probe_sum[c] += p.stop_response;
            probe_n[c] += 1;
            if p.is_end {
                let r = match options.label_source {
                    LabelSource::StopStep => p.stop_response,
                    LabelSource::LastSymbol => p.response,
                };
                end_sum[c] += r;
                end_n[c] += 1;
                verdicts.push(r >= 0.5);
            }
        }
    }

    let start = clustering.assignments[0];
    let delta: Vec<[Option<usize>; ALPHABET]> =
        (0..k).map(|c| [counts.majority(c, 0), counts.majority(c, 1)]).collect();
    let observed_labels: Vec<Option<bool>> =
        (0..k).map(|c| (end_n[c] > 0).then(|| end_sum[c] / end_n[c] as f64 >= 0.5)).collect();
    let probe: Vec<bool> = (0..k).map(|c| probe_n[c] > 0 && probe_sum[c] / probe_n[c] as f64 >= 0.5).collect();

    let mut labels: Vec<bool> = (0..k)
        .map(|c| {
            observed_labels[c].unwrap_or(match options.unobserved {
                UnobservedLabel::Reject => false,
                _ => probe[c],
            })
        })
        .collect();

    let build = |labels: &[bool]| {
        Dfa::new(start, (0..k).filter(|&c| labels[c]), delta.clone()).expect("targets are live clusters")
    };

    if options.unobserved == UnobservedLabel::Minimal {
        let reachable = build(&labels).bfs_order();
        let open: Vec<usize> = reachable.into_iter().filter(|&c| observed_labels[c].is_none()).collect();
        if !open.is_empty() && open.len() <= MAX_LABEL_SEARCH {
            // where each traced string ends in the diagram, which does not
            // depend on the labels
            let ends: Vec<Option<usize>> = traces
                .iter()
                .map(|t| {
                    t.points.iter().skip(1).try_fold(start, |q, p| delta[q][usize::from(p.symbol.unwrap_or(0))])
                })
                .collect();
            let cost = |labels: &[bool]| -> Result<(usize, usize)> {
                let misses = ends
                    .iter()
                    .zip(&verdicts)
                    .filter(|(e, &v)| e.is_some_and(|c| labels[c]) != v)
                    .count();
                Ok((misses, build(labels).complete().minimize()?.state_count()))
            };
            let (base_misses, base_size) = cost(&labels)?;
            let mut best = ((base_size, base_misses), labels.clone());
            for mask in 0u32..(1 << open.len()) {
                let mut trial = labels.clone();
                for (bit, &c) in open.iter().enumerate() {
                    trial[c] = mask >> bit & 1 == 1;
                }
                let (misses, size) = cost(&trial)?;
                if misses <= base_misses && (size, misses) < best.0 {
                    best = ((size, misses), trial);
                }
            }
            labels = best.1;
        }
    }

    Ok(Diagram { dfa: build(&labels), counts, observed_labels })
}
