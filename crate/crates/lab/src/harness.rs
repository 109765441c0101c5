//! Trial grids: train one network per trial, extract at every K, and
//! summarize accuracy and success rate.

use std::collections::BTreeMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tomita_core::extraction::{collect_states, evaluate_dfa, ExtractionOptions, Extractor};
use tomita_core::grammars::{build_dataset, DatasetConfig, LabeledDataset};
use tomita_core::rnn::{
    accuracy, budget_hidden_size, grammar_param_budget, initial_hidden, train, Activation, Architecture, ModelConfig,
    RnnModel,
};
use tomita_core::{Dfa, Grammar};

use crate::io::{write_file, DatasetConfigFile, DfaJson, JsonlAppender, TrainConfigFile};
use crate::plots;

/// Independent seed streams derived from one trial seed.
pub mod stream {
    pub const WEIGHTS: u64 = 1;
    pub const HIDDEN: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const KMEANS: u64 = 4;
}

/// SplitMix64 of `seed` mixed with a stream tag.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn default_trials() -> usize {
    10
}
fn default_k_min() -> usize {
    3
}
fn default_k_max() -> usize {
    15
}

/// One experiment: a grammar, a network family, and the trial x K grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub grammar: u8,
    pub architecture: String,
    /// Defaults to sigmoid for Elman and second-order, tanh otherwise.
    #[serde(default)]
    pub activation: Option<String>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Defaults to the grammar's table settings seeded with `base_seed`.
    #[serde(default)]
    pub dataset: Option<DatasetConfigFile>,
    #[serde(default)]
    pub train: TrainConfigFile,
    /// Defaults to the width closest to the grammar's parameter budget.
    #[serde(default)]
    pub hidden_size: Option<usize>,
    #[serde(default)]
    pub base_seed: u64,
}

impl ExperimentSpec {
    pub fn new(grammar: u8, architecture: Architecture, activation: Option<Activation>) -> Self {
        Self {
            grammar,
            architecture: architecture.as_str().to_string(),
            activation: activation.map(|a| a.as_str().to_string()),
            trials: default_trials(),
            k_min: default_k_min(),
            k_max: default_k_max(),
            dataset: None,
            train: TrainConfigFile::default(),
            hidden_size: None,
            base_seed: 0,
        }
    }

    pub fn grammar(&self) -> Result<Grammar> {
        Ok(Grammar::new(self.grammar)?)
    }

    pub fn k_range(&self) -> RangeInclusive<usize> {
        self.k_min..=self.k_max
    }

    pub fn grid_size(&self) -> usize {
        self.trials * self.k_range().count()
    }

    pub fn dataset_config(&self) -> Result<DatasetConfig> {
        match &self.dataset {
            Some(d) => {
                let c = d.to_config()?;
                ensure!(c.grammar.index() == self.grammar, "dataset grammar differs from experiment grammar");
                Ok(c)
            }
            None => Ok(DatasetConfig::table_defaults(self.grammar()?, self.base_seed)),
        }
    }

    /// Model configuration of one trial.
    pub fn model_config(&self, trial_seed: u64) -> Result<ModelConfig> {
        let arch: Architecture = self.architecture.parse().map_err(anyhow::Error::msg)?;
        let activation = self
            .activation
            .as_deref()
            .map(|a| a.parse::<Activation>().map_err(anyhow::Error::msg))
            .transpose()?;
        let hidden = match self.hidden_size {
            Some(n) => n,
            None => budget_hidden_size(arch, grammar_param_budget(self.grammar()?), 3),
        };
        Ok(ModelConfig::new(arch, activation, hidden, derive_seed(trial_seed, stream::WEIGHTS))?)
    }

    pub fn validate(&self) -> Result<()> {
        self.grammar()?;
        ensure!(self.trials >= 1, "trials must be at least 1");
        ensure!(self.k_min >= 1 && self.k_min <= self.k_max, "K range must be non-empty and start at 1 or more");
        self.dataset_config()?;
        self.train.to_config(0)?;
        self.model_config(self.base_seed)?;
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }
}

/// Outcome of one (trial, K) extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub grammar: u8,
    pub architecture: String,
    pub activation: String,
    pub trial: usize,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub converged: bool,
    pub epochs: usize,
    pub train_accuracy: f64,
    /// Test accuracy of the extracted automaton.
    pub accuracy: f64,
    pub is_ground_truth: bool,
    /// Clusters left after k-means, i.e. states before minimization.
    pub live_states: usize,
    pub dfa: DfaJson,
    /// Not persisted, so that record files are reproducible byte for byte.
    #[serde(skip)]
    pub wall_ms: u64,
}

impl RunRecord {
    pub fn dfa(&self) -> Result<Dfa> {
        Dfa::try_from(&self.dfa)
    }
}

/// Train one trial's network and extract at every K.
pub fn run_trial(spec: &ExperimentSpec, data: &LabeledDataset, trial: usize) -> Result<Vec<RunRecord>> {
    let start = Instant::now();
    let grammar = spec.grammar()?;
    let seed = spec.trial_seed(trial);
    let config = spec.model_config(seed)?;
    let h0 = initial_hidden(&config, derive_seed(seed, stream::HIDDEN));
    let train_config = spec.train.to_config(derive_seed(seed, stream::SHUFFLE))?;
    let outcome = train(RnnModel::init(config.clone())?, &data.train, &train_config, &h0)?;
    let train_accuracy = accuracy(&outcome.model, &data.train, &h0)?;
    let train_wall = start.elapsed();

    let distinct = data.train_distinct();
    let traces = collect_states(&outcome.model, &distinct, &h0)?;
    let extractor = Extractor::new(&traces, ExtractionOptions::default())?;
    let truth = grammar.dfa();
    let mut records = Vec::new();
    for k in spec.k_range() {
        let t = Instant::now();
        let e = extractor.extract(k, derive_seed(seed, stream::KMEANS ^ ((k as u64) << 8)))?;
        records.push(RunRecord {
            grammar: grammar.index(),
            architecture: config.architecture.as_str().to_string(),
            activation: config.activation.as_str().to_string(),
            trial,
            seed,
            k,
            converged: outcome.converged,
            epochs: outcome.epochs(),
            train_accuracy,
            accuracy: evaluate_dfa(&e.dfa, &data.test)?,
            is_ground_truth: e.dfa.is_isomorphic(&truth)?,
            live_states: e.live_states,
            dfa: DfaJson::from(&e.dfa),
            wall_ms: (train_wall + t.elapsed()).as_millis() as u64,
        });
    }
    Ok(records)
}

fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        (a.grammar, &a.architecture, &a.activation, a.trial, a.k).cmp(&(b.grammar, &b.architecture, &b.activation, b.trial, b.k))
    });
}

/// Runs the whole grid. With `out_dir`, records are appended to
/// `records.partial.jsonl` as trials finish and rewritten sorted by trial
/// and K into `records.jsonl` at the end.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let data = build_dataset(&spec.dataset_config()?).context("building the dataset")?;
    let partial = out_dir.map(|d| d.join("records.partial.jsonl"));
    let appender = match &partial {
        Some(p) => Some(Mutex::new(JsonlAppender::create(p)?)),
        None => None,
    };
    let results: Vec<Result<Vec<RunRecord>>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let records = run_trial(spec, &data, trial)?;
            if let Some(app) = &appender {
                let mut app = app.lock().expect("appender lock");
                for r in &records {
                    app.append(r)?;
                }
            }
            Ok(records)
        })
        .collect();
    let mut records = Vec::with_capacity(spec.grid_size());
    for r in results {
        records.extend(r?);
    }
    sort_records(&mut records);
    if let (Some(dir), Some(partial)) = (out_dir, partial) {
        write_records(&dir.join("records.jsonl"), &records)?;
        drop(appender);
        fs::remove_file(&partial).with_context(|| format!("removing {}", partial.display()))?;
    }
    Ok(records)
}

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerK {
    #[serde(rename = "K")]
    pub k: usize,
    pub runs: usize,
    pub mean_acc: f64,
    /// Sample variance over trials (zero for a single trial).
    pub var_acc: f64,
}

/// Aggregates of one (grammar, architecture, activation) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub grammar: u8,
    pub architecture: String,
    pub activation: String,
    /// `all` or `converged`.
    pub subset: String,
    pub runs: usize,
    pub per_k: Vec<PerK>,
    pub overall_acc: f64,
    pub success_rate: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

fn summarize(key: &(u8, String, String), subset: &str, records: &[&RunRecord]) -> ExperimentSummary {
    let mut by_k: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_k.entry(r.k).or_default().push(r.accuracy);
    }
    let per_k = by_k
        .into_iter()
        .map(|(k, xs)| {
            let (mean_acc, var_acc) = mean_var(&xs);
            PerK { k, runs: xs.len(), mean_acc, var_acc }
        })
        .collect();
    let accs: Vec<f64> = records.iter().map(|r| r.accuracy).collect();
    ExperimentSummary {
        grammar: key.0,
        architecture: key.1.clone(),
        activation: key.2.clone(),
        subset: subset.to_string(),
        runs: records.len(),
        per_k,
        overall_acc: mean_var(&accs).0,
        success_rate: records.iter().filter(|r| r.is_ground_truth).count() as f64 / records.len() as f64,
    }
}

/// Summaries per (grammar, architecture, activation), over all runs and
/// over runs whose network converged (omitted when there are none).
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<ExperimentSummary>> {
    ensure!(!records.is_empty(), "no records to aggregate");
    let mut groups: BTreeMap<(u8, String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.grammar, r.architecture.clone(), r.activation.clone())).or_default().push(r);
    }
    let mut out = Vec::new();
    for (key, rs) in &groups {
        out.push(summarize(key, "all", rs));
        let conv: Vec<&RunRecord> = rs.iter().copied().filter(|r| r.converged).collect();
        if !conv.is_empty() {
            out.push(summarize(key, "converged", &conv));
        }
    }
    Ok(out)
}

/// Best extraction of a grammar: highest accuracy, then ground truth, then
/// fewest states, then earliest (trial, K).
pub fn best_record(records: &[RunRecord], grammar: u8) -> Option<&RunRecord> {
    records.iter().filter(|r| r.grammar == grammar).min_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(b.is_ground_truth.cmp(&a.is_ground_truth))
            .then(a.dfa.states.cmp(&b.dfa.states))
            .then((&a.architecture, &a.activation, a.trial, a.k).cmp(&(&b.architecture, &b.activation, b.trial, b.k)))
    })
}

/// Writes `records.jsonl`, `per_k.csv`, `summary.csv`, one
/// `best_g<N>.dot` per grammar and the chart documents. Returns the paths.
pub fn export(summaries: &[ExperimentSummary], records: &[RunRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure!(!records.is_empty(), "no records to export");
    let mut records = records.to_vec();
    sort_records(&mut records);
    let mut written = Vec::new();

    let path = out_dir.join("records.jsonl");
    write_records(&path, &records)?;
    written.push(path);

    let mut per_k = String::from("grammar,architecture,activation,subset,K,runs,mean_acc,var_acc\n");
    let mut summary = String::from("grammar,architecture,activation,subset,runs,overall_acc,success_rate\n");
    for s in summaries {
        for p in &s.per_k {
            per_k.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.grammar, s.architecture, s.activation, s.subset, p.k, p.runs, p.mean_acc, p.var_acc
            ));
        }
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.grammar, s.architecture, s.activation, s.subset, s.runs, s.overall_acc, s.success_rate
        ));
    }
    for (name, text) in [("per_k.csv", per_k), ("summary.csv", summary)] {
        let path = out_dir.join(name);
        write_file(&path, text.as_bytes())?;
        written.push(path);
    }

    let grammars: std::collections::BTreeSet<u8> = records.iter().map(|r| r.grammar).collect();
    for g in grammars {
        let best = best_record(&records, g).expect("grammar has records");
        let path = out_dir.join(format!("best_g{g}.dot"));
        write_file(&path, best.dfa()?.to_dot().as_bytes())?;
        written.push(path);
    }

    for (name, doc) in plots::experiment_charts(summaries) {
        let path = out_dir.join(name);
        crate::io::write_json(&path, &doc)?;
        written.push(path);
    }
    Ok(written)
}
