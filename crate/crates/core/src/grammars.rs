//! Labeled string enumeration, dataset generation and input encoding.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automata::{word_from_index, Grammar, Symbol};
use crate::error::{Error, Result};

/// Longest length [`enumerate_labeled`] will expand exhaustively.
pub const MAX_ENUMERATION_LENGTH: usize = 24;

/// Input-layer width: symbols `0`, `1` and the stop symbol.
pub const INPUT_SIZE: usize = 3;

/// Index of the stop symbol in the one-hot encoding.
pub const STOP: Symbol = 2;

/// A binary string with its ground-truth membership.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StringLabel {
    pub string: Vec<Symbol>,
    pub label: bool,
}

/// All `2^len` strings of one length in lexicographic order, labeled by the
/// grammar's automaton.
pub fn enumerate_labeled(grammar: Grammar, len: usize) -> Result<Vec<StringLabel>> {
    if len > MAX_ENUMERATION_LENGTH {
        return Err(Error::LengthTooLarge { len, limit: MAX_ENUMERATION_LENGTH });
    }
    let dfa = grammar.dfa();
    Ok((0..1u64 << len)
        .map(|i| {
            let string = word_from_index(i, len);
            let label = dfa.run(&string).expect("ground truth is complete");
            StringLabel { string, label }
        })
        .collect())
}

/// Parameters of one grammar's dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub grammar: Grammar,
    pub min_length: usize,
    pub max_length: usize,
    /// Fraction of each class placed in the training split; the rest is test.
    pub train_fraction: f64,
    /// Duplicate training positives until both classes are equally frequent.
    pub oversample_positives: bool,
    /// `None` uses every negative string in the length window; `Some(n)`
    /// draws `n` distinct negatives from the random oracle instead.
    pub negative_count: Option<usize>,
    pub seed: u64,
}

impl DatasetConfig {
    /// The per-grammar defaults: length window, training fraction, and
    /// positive oversampling for the sparse grammars 1, 2 and 7.
    pub fn table_defaults(grammar: Grammar, seed: u64) -> Self {
        let (min_length, max_length, train_fraction) = match grammar.index() {
            1 => (1, 14, 0.078),
            2 => (2, 14, 0.065),
            3 => (4, 12, 0.367),
            4 => (3, 12, 0.367),
            5 => (4, 12, 0.367),
            6 => (3, 12, 0.367),
            _ => (1, 16, 0.089),
        };
        Self {
            grammar,
            min_length,
            max_length,
            train_fraction,
            oversample_positives: matches!(grammar.index(), 1 | 2 | 7),
            negative_count: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_length == 0 || self.min_length > self.max_length {
            return Err(Error::InvalidConfig("length window must satisfy 0 < min <= max"));
        }
        if self.max_length > MAX_ENUMERATION_LENGTH {
            return Err(Error::LengthTooLarge { len: self.max_length, limit: MAX_ENUMERATION_LENGTH });
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("train fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    fn window_size(&self) -> u64 {
        (self.min_length..=self.max_length).map(|l| 1u64 << l).sum()
    }
}

/// Train and test splits of one grammar.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub config: DatasetConfig,
    /// Shuffled; contains oversampled duplicates when enabled.
    pub train: Vec<StringLabel>,
    /// Distinct, disjoint from `train`, ordered by length then lexicographically.
    pub test: Vec<StringLabel>,
}

impl LabeledDataset {
    /// Training strings with oversampled duplicates removed, in first-seen order.
    pub fn train_distinct(&self) -> Vec<StringLabel> {
        let mut seen = BTreeSet::new();
        self.train.iter().filter(|s| seen.insert(&s.string)).cloned().collect()
    }
}

/// Generates the dataset described by `config`.
///
/// Positives are every accepted string in the window. Negatives come from the
/// random oracle (uniform length, then uniform bits) and are kept only when
/// the automaton rejects them; with `negative_count == None` the whole
/// rejected set of the window is used. Both classes are deduplicated, then
/// each is split by `train_fraction` (rounded up, so the training split always
/// holds at least one string of each non-empty class).
pub fn build_dataset(config: &DatasetConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let dfa = config.grammar.dfa();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut positives = Vec::new();
    let mut all_negatives = Vec::new();
    for len in config.min_length..=config.max_length {
        for i in 0..1u64 << len {
            let w = word_from_index(i, len);
            if dfa.run(&w).expect("complete") {
                positives.push(w);
            } else if config.negative_count.is_none() {
                all_negatives.push(w);
            }
        }
    }
    if positives.is_empty() {
        return Err(Error::NoPositives {
            grammar: config.grammar.index(),
            min: config.min_length,
            max: config.max_length,
        });
    }

    let mut negatives = match config.negative_count {
        None => all_negatives,
        Some(target) => {
            let available = config.window_size() - positives.len() as u64;
            if target as u64 > available {
                return Err(Error::InvalidConfig("negative_count exceeds the negatives in the window"));
            }
            let mut seen = BTreeSet::new();
            let mut drawn = Vec::with_capacity(target);
            while drawn.len() < target {
                let len = rng.gen_range(config.min_length..=config.max_length);
                let w: Vec<Symbol> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
                if !dfa.run(&w).expect("complete") && seen.insert(w.clone()) {
                    drawn.push(w);
                }
            }
            drawn
        }
    };

    positives.shuffle(&mut rng);
    negatives.shuffle(&mut rng);
    let split = |n: usize| -> usize { libm::ceil(n as f64 * config.train_fraction) as usize };
    let (train_pos, test_pos) = positives.split_at(split(positives.len()).min(positives.len()));
    let (train_neg, test_neg) = negatives.split_at(split(negatives.len()).min(negatives.len()));

    fn label(words: &[Vec<Symbol>], label: bool) -> impl Iterator<Item = StringLabel> + '_ {
        words.iter().map(move |w| StringLabel { string: w.clone(), label })
    }
    let mut train: Vec<StringLabel> = label(train_pos, true).chain(label(train_neg, false)).collect();
    if config.oversample_positives && train_pos.len() < train_neg.len() {
        for _ in 0..train_neg.len() - train_pos.len() {
            let w = &train_pos[rng.gen_range(0..train_pos.len())];
            train.push(StringLabel { string: w.clone(), label: true });
        }
    }
    train.shuffle(&mut rng);

    let mut test: Vec<StringLabel> = label(test_pos, true).chain(label(test_neg, false)).collect();
    test.sort_by(|a, b| a.string.len().cmp(&b.string.len()).then_with(|| a.string.cmp(&b.string)));

    Ok(LabeledDataset { config: config.clone(), train, test })
}

/// A string prepared for a network: one symbol index per step, ending with
/// the stop symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    symbols: Vec<Symbol>,
}

impl EncodedSequence {
    /// Symbol indices including the trailing stop symbol.
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// One-hot rows of width [`INPUT_SIZE`].
    pub fn one_hot(&self) -> impl Iterator<Item = [f64; INPUT_SIZE]> + '_ {
        self.symbols.iter().map(|&s| {
            let mut row = [0.0; INPUT_SIZE];
            row[s as usize] = 1.0;
            row
        })
    }
}

/// Encodes a non-empty binary string and appends the stop symbol.
pub fn encode(string: &[Symbol]) -> Result<EncodedSequence> {
    if string.is_empty() {
        return Err(Error::EmptyString);
    }
    if let Some(&bad) = string.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidSymbol(bad));
    }
    let mut symbols = Vec::with_capacity(string.len() + 1);
    symbols.extend_from_slice(string);
    symbols.push(STOP);
    Ok(EncodedSequence { symbols })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{count_accepted, format_word, parse_word};
    use alloc::vec;
    use num_bigint::BigUint;

    fn g(i: u8) -> Grammar {
        Grammar::new(i).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let g2 = enumerate_labeled(g(2), 2).unwrap();
        let pos: Vec<_> = g2.iter().filter(|s| s.label).map(|s| format_word(&s.string)).collect();
        assert_eq!(pos, ["10"]);
        assert_eq!(enumerate_labeled(g(5), 7).unwrap().iter().filter(|s| s.label).count(), 0);
        assert_eq!(enumerate_labeled(g(7), 8).unwrap().iter().filter(|s| s.label).count(), 93);
        let g1 = enumerate_labeled(g(1), 3).unwrap();
        assert_eq!(format_word(&g1[1].string), "001");
        assert!(enumerate_labeled(g(1), 25).is_err());
    }

    #[test]
    fn encode_examples() {
        let e = encode(&parse_word("10").unwrap()).unwrap();
        let rows: Vec<_> = e.one_hot().collect();
        assert_eq!(rows, vec![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        let rows: Vec<_> = encode(&[0]).unwrap().one_hot().collect();
        assert_eq!(rows, vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(encode(&[]), Err(Error::EmptyString));
    }

    #[test]
    fn labels_and_windows_are_sound() {
        for grammar in Grammar::all() {
            let cfg = DatasetConfig::table_defaults(grammar, 11);
            let ds = build_dataset(&cfg).unwrap();
            let dfa = grammar.dfa();
            for s in ds.train.iter().chain(&ds.test) {
                assert_eq!(s.label, dfa.run(&s.string).unwrap());
                assert!((cfg.min_length..=cfg.max_length).contains(&s.string.len()));
            }
            let train: BTreeSet<_> = ds.train.iter().map(|s| &s.string).collect();
            let test: BTreeSet<_> = ds.test.iter().map(|s| &s.string).collect();
            assert_eq!(test.len(), ds.test.len(), "test split has duplicates");
            assert!(train.is_disjoint(&test));
            // exhaustive pool: positives per length match the transfer-matrix count
            for len in cfg.min_length..=cfg.max_length {
                let n = train
                    .iter()
                    .chain(test.iter())
                    .filter(|w| w.len() == len && dfa.run(w).unwrap())
                    .count();
                assert_eq!(BigUint::from(n), count_accepted(&dfa, len));
            }
        }
    }

    #[test]
    fn grammar_one_without_oversampling() {
        let mut cfg = DatasetConfig::table_defaults(g(1), 3);
        cfg.oversample_positives = false;
        let ds = build_dataset(&cfg).unwrap();
        let pos = ds.train.iter().filter(|s| s.label).count();
        assert!((1..=14).contains(&pos));
    }

    #[test]
    fn oversampling_balances_training_split() {
        for i in [1, 2, 7] {
            let ds = build_dataset(&DatasetConfig::table_defaults(g(i), 5)).unwrap();
            let pos = ds.train.iter().filter(|s| s.label).count() as f64;
            let ratio = pos / ds.train.len() as f64;
            assert!((0.45..=0.55).contains(&ratio), "G{i}: {ratio}");
            assert!(ds.test.len() > ds.train_distinct().len());
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = DatasetConfig::table_defaults(g(4), 42);
        assert_eq!(build_dataset(&cfg).unwrap(), build_dataset(&cfg).unwrap());
        let other = DatasetConfig { seed: 43, ..cfg.clone() };
        assert_ne!(build_dataset(&cfg).unwrap().train, build_dataset(&other).unwrap().train);
    }

    #[test]
    fn sampled_negatives_are_distinct_and_rejected() {
        let cfg = DatasetConfig { negative_count: Some(500), ..DatasetConfig::table_defaults(g(4), 9) };
        let ds = build_dataset(&cfg).unwrap();
        let negs = ds.train.iter().chain(&ds.test).filter(|s| !s.label).count();
        assert_eq!(negs, 500);
        let too_many = DatasetConfig { negative_count: Some(1 << 20), ..cfg };
        assert!(build_dataset(&too_many).is_err());
    }

    #[test]
    fn window_without_positives_is_an_error() {
        let cfg = DatasetConfig { min_length: 3, max_length: 3, ..DatasetConfig::table_defaults(g(2), 1) };
        assert!(matches!(build_dataset(&cfg), Err(Error::NoPositives { .. })));
        let bad = DatasetConfig { min_length: 0, ..cfg.clone() };
        assert!(build_dataset(&bad).is_err());
        let bad = DatasetConfig { train_fraction: 1.0, ..cfg };
        assert!(build_dataset(&bad).is_err());
    }
}
