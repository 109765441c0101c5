//! File formats: automata as JSON, datasets as JSON lines, configuration
//! documents, and binary model checkpoints.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use tomita_core::automata::{format_word, parse_word};
use tomita_core::grammars::{DatasetConfig, LabeledDataset, StringLabel};
use tomita_core::rnn::{Activation, Architecture, ModelConfig, RnnModel, TrainConfig};
use tomita_core::{Dfa, Grammar};

/// `{"states", "start", "accepting", "delta"}` with `-1` for a missing edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfaJson {
    pub states: usize,
    pub start: usize,
    pub accepting: Vec<usize>,
    pub delta: Vec<[i64; 2]>,
}

impl From<&Dfa> for DfaJson {
    fn from(dfa: &Dfa) -> Self {
        Self {
            states: dfa.state_count(),
            start: dfa.start(),
            accepting: dfa.accepting_states().collect(),
            delta: dfa.transitions().iter().map(|row| row.map(|t| t.map_or(-1, |t| t as i64))).collect(),
        }
    }
}

impl TryFrom<&DfaJson> for Dfa {
    type Error = anyhow::Error;

    fn try_from(j: &DfaJson) -> Result<Dfa> {
        ensure!(j.delta.len() == j.states, "delta has {} rows for {} states", j.delta.len(), j.states);
        let delta = j
            .delta
            .iter()
            .map(|row| {
                let edge = |t: i64| -> Result<Option<usize>> {
                    match t {
                        -1 => Ok(None),
                        t if t >= 0 => Ok(Some(t as usize)),
                        t => bail!("invalid transition target {t}"),
                    }
                };
                Ok([edge(row[0])?, edge(row[1])?])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dfa::new(j.start, j.accepting.iter().copied(), delta)?)
    }
}

pub fn write_dfa_json(path: &Path, dfa: &Dfa) -> Result<()> {
    write_json(path, &DfaJson::from(dfa))
}

pub fn read_dfa_json(path: &Path) -> Result<Dfa> {
    let j: DfaJson = read_json(path)?;
    Dfa::try_from(&j).with_context(|| format!("invalid automaton in {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Dataset configuration as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfigFile {
    pub grammar: u8,
    pub min_length: usize,
    pub max_length: usize,
    pub train_fraction: f64,
    pub oversample_positives: bool,
    #[serde(default)]
    pub negative_count: Option<usize>,
    pub seed: u64,
}

impl From<&DatasetConfig> for DatasetConfigFile {
    fn from(c: &DatasetConfig) -> Self {
        Self {
            grammar: c.grammar.index(),
            min_length: c.min_length,
            max_length: c.max_length,
            train_fraction: c.train_fraction,
            oversample_positives: c.oversample_positives,
            negative_count: c.negative_count,
            seed: c.seed,
        }
    }
}

impl DatasetConfigFile {
    pub fn to_config(&self) -> Result<DatasetConfig> {
        let c = DatasetConfig {
            grammar: Grammar::new(self.grammar)?,
            min_length: self.min_length,
            max_length: self.max_length,
            train_fraction: self.train_fraction,
            oversample_positives: self.oversample_positives,
            negative_count: self.negative_count,
            seed: self.seed,
        };
        c.validate()?;
        Ok(c)
    }
}

/// Training hyperparameters as stored on disk; absent fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfigFile {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub loss_threshold: f64,
}

impl Default for TrainConfigFile {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            learning_rate: d.learning_rate,
            decay: d.decay,
            epsilon: d.epsilon,
            max_epochs: d.max_epochs,
            loss_threshold: d.loss_threshold,
        }
    }
}

impl TrainConfigFile {
    pub fn to_config(&self, shuffle_seed: u64) -> Result<TrainConfig> {
        let c = TrainConfig {
            learning_rate: self.learning_rate,
            decay: self.decay,
            epsilon: self.epsilon,
            max_epochs: self.max_epochs,
            loss_threshold: self.loss_threshold,
            shuffle_seed,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfigFile {
    pub architecture: String,
    pub activation: String,
    pub hidden_size: usize,
    pub input_size: usize,
    pub seed: u64,
}

impl From<&ModelConfig> for ModelConfigFile {
    fn from(c: &ModelConfig) -> Self {
        Self {
            architecture: c.architecture.as_str().to_string(),
            activation: c.activation.as_str().to_string(),
            hidden_size: c.hidden_size,
            input_size: c.input_size,
            seed: c.seed,
        }
    }
}

impl ModelConfigFile {
    pub fn to_config(&self) -> Result<ModelConfig> {
        let c = ModelConfig {
            architecture: self.architecture.parse::<Architecture>().map_err(anyhow::Error::msg)?,
            activation: self.activation.parse::<Activation>().map_err(anyhow::Error::msg)?,
            hidden_size: self.hidden_size,
            input_size: self.input_size,
            seed: self.seed,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DatasetLine {
    s: String,
    y: u8,
    split: String,
}

/// Writes `config.json` and `dataset.jsonl` (one `{"s","y","split"}` object
/// per training entry, duplicates included, then per test string).
pub fn write_dataset(dir: &Path, data: &LabeledDataset) -> Result<()> {
    write_json(&dir.join("config.json"), &DatasetConfigFile::from(&data.config))?;
    let path = dir.join("dataset.jsonl");
    let mut out = String::new();
    for (split, rows) in [("train", &data.train), ("test", &data.test)] {
        for r in rows.iter() {
            let line = DatasetLine { s: format_word(&r.string), y: r.label as u8, split: split.to_string() };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
    }
    write_file(&path, out.as_bytes())
}

pub fn read_dataset(dir: &Path) -> Result<LabeledDataset> {
    let config = read_json::<DatasetConfigFile>(&dir.join("config.json"))?.to_config()?;
    let path = dir.join("dataset.jsonl");
    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: DatasetLine =
            serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?;
        ensure!(row.y <= 1, "{}:{}: label must be 0 or 1", path.display(), n + 1);
        let entry = StringLabel { string: parse_word(&row.s)?, label: row.y == 1 };
        match row.split.as_str() {
            "train" => train.push(entry),
            "test" => test.push(entry),
            other => bail!("{}:{}: unknown split `{other}`", path.display(), n + 1),
        }
    }
    Ok(LabeledDataset { config, train, test })
}

const CHECKPOINT_FORMAT: &str = "tomita-checkpoint-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

/// Header line of a checkpoint; the weights follow as little-endian f64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub model: ModelConfigFile,
    pub h0: Vec<f64>,
    pub dataset: Option<DatasetConfigFile>,
    pub converged: bool,
    pub epochs: usize,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: RnnModel,
    pub h0: Vec<f64>,
    pub dataset: Option<DatasetConfig>,
    pub converged: bool,
    pub epochs: usize,
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.to_string(),
        model: ModelConfigFile::from(ckpt.model.config()),
        h0: ckpt.h0.clone(),
        dataset: ckpt.dataset.as_ref().map(DatasetConfigFile::from),
        converged: ckpt.converged,
        epochs: ckpt.epochs,
        tensors: ckpt
            .model
            .specs()
            .iter()
            .map(|s| TensorEntry { name: s.name.to_string(), shape: s.shape.clone() })
            .collect(),
    };
    let mut bytes = serde_json::to_vec(&header)?;
    bytes.push(b'\n');
    for w in ckpt.model.params() {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    write_file(path, &bytes)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let ctx = || format!("reading checkpoint {}", path.display());
    let mut reader = BufReader::new(File::open(path).with_context(ctx)?);
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line).with_context(ctx)?;
    let header: CheckpointHeader = serde_json::from_slice(&line).with_context(ctx)?;
    ensure!(header.format == CHECKPOINT_FORMAT, "{}: unknown format `{}`", path.display(), header.format);
    let config = header.model.to_config().with_context(ctx)?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload).with_context(ctx)?;
    ensure!(payload.len() == 8 * config.param_count(), "{}: expected {} weights, found {} bytes", path.display(), config.param_count(), payload.len());
    let params = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let model = RnnModel::from_params(config, params).with_context(ctx)?;
    let listed: Vec<(&str, &[usize])> = header.tensors.iter().map(|t| (t.name.as_str(), t.shape.as_slice())).collect();
    let expected: Vec<(&str, &[usize])> = model.specs().iter().map(|s| (s.name, s.shape.as_slice())).collect();
    ensure!(listed == expected, "{}: tensor list does not match the architecture", path.display());
    ensure!(header.h0.len() == model.hidden_size(), "{}: h0 has the wrong width", path.display());
    let dataset = header.dataset.as_ref().map(DatasetConfigFile::to_config).transpose()?;
    Ok(Checkpoint { model, h0: header.h0, dataset, converged: header.converged, epochs: header.epochs })
}

/// Line-buffered appender for JSON-lines output.
pub struct JsonlAppender {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl JsonlAppender {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { out: BufWriter::new(file), path: path.to_path_buf() })
    }

    pub fn append<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let ctx = || format!("writing {}", self.path.display());
        serde_json::to_writer(&mut self.out, value).with_context(ctx)?;
        self.out.write_all(b"\n").with_context(ctx)?;
        self.out.flush().with_context(ctx)
    }
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tomita_core::grammars::build_dataset;

    #[test]
    fn dfa_round_trip_with_missing_edges() {
        let d = Dfa::new(0, [1], vec![[Some(1), None], [None, Some(0)]]).unwrap();
        let j = DfaJson::from(&d);
        assert_eq!(j.delta, vec![[1, -1], [-1, 0]]);
        assert_eq!(Dfa::try_from(&j).unwrap(), d);
        let bad = DfaJson { delta: vec![[1, -2], [0, 0]], ..j };
        assert!(Dfa::try_from(&bad).is_err());
    }

    #[test]
    fn dataset_and_checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = DatasetConfig::table_defaults(Grammar::new(2).unwrap(), 5);
        let data = build_dataset(&cfg).unwrap();
        write_dataset(dir.path(), &data).unwrap();
        assert_eq!(read_dataset(dir.path()).unwrap(), data);

        let mc = ModelConfig::new(Architecture::Gru, None, 3, 1).unwrap();
        let ckpt = Checkpoint {
            model: RnnModel::init(mc).unwrap(),
            h0: vec![0.25, -0.5, 1.0 / 3.0],
            dataset: Some(cfg),
            converged: false,
            epochs: 7,
        };
        let path = dir.path().join("m.ckpt");
        write_checkpoint(&path, &ckpt).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), ckpt);

        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        assert!(read_checkpoint(&path).is_err());
    }
}
