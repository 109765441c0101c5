use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tomita_core::complexity::ring_plot_data;
use tomita_core::extraction::{collect_states, evaluate_dfa, ExtractionOptions, Extractor, LabelSource, UnobservedLabel};
use tomita_core::grammars::{build_dataset, DatasetConfig, LabeledDataset};
use tomita_core::rnn::{
    accuracy, budget_hidden_size, grammar_param_budget, initial_hidden, train_with, Activation, Architecture,
    ModelConfig, RnnModel,
};
use tomita_core::Grammar;
use tomita_lab::harness::{aggregate, derive_seed, export, run_experiment, stream, ExperimentSpec, RunRecord};
use tomita_lab::io::{
    read_checkpoint, read_dataset, read_json, read_jsonl, write_checkpoint, write_dataset, write_dfa_json, write_file,
    write_json, Checkpoint, DatasetConfigFile, DfaJson, TrainConfigFile,
};
use tomita_lab::{plots, tables};

#[derive(Parser)]
#[command(name = "tomita", version, about = "Train recurrent networks on Tomita grammars and extract automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a labeled dataset and write it as JSON lines.
    Generate(GenerateArgs),
    /// Train one network and write a checkpoint.
    Train(TrainArgs),
    /// Extract an automaton from a checkpoint at one K.
    Extract(ExtractArgs),
    /// Entropy and average edit distance per grammar and length.
    Metrics(MetricsArgs),
    /// Ring-plot data of strings by length.
    Rings(RingsArgs),
    /// Run the full trial x K grid for one grammar and network.
    Experiment(ExperimentArgs),
    /// Aggregate record files and export tables, automata and charts.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    grammar: Option<u8>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset configuration JSON; overrides --grammar and --seed.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    arch: Architecture,
    #[arg(long)]
    activation: Option<Activation>,
    /// Hidden width; defaults to the grammar's parameter budget.
    #[arg(long)]
    hidden: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    grammar: u8,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset directory from `generate`; by default the grammar's table
    /// dataset is built with --data-seed.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Training configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long = "K")]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset directory; by default the dataset recorded in the checkpoint.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Read accept labels from the last binary symbol instead of the stop step.
    #[arg(long)]
    last_symbol_labels: bool,
    #[arg(long, value_parser = ["minimal", "stop-probe", "reject"], default_value = "minimal")]
    unobserved: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Single grammar; all seven by default.
    #[arg(long)]
    grammar: Option<u8>,
    #[arg(long, value_delimiter = ',', default_values_t = tables::TABLE_LENGTHS)]
    lengths: Vec<usize>,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RingsArgs {
    #[arg(long)]
    grammar: u8,
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment description JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    grammar: Option<u8>,
    #[arg(long)]
    arch: Option<Architecture>,
    #[arg(long)]
    activation: Option<Activation>,
    #[arg(long)]
    trials: Option<usize>,
    /// A single K or an inclusive range such as `3-15`.
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Record files (JSON lines) or directories holding `records.jsonl`.
    #[arg(long = "input", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn grammar(index: u8) -> Result<Grammar> {
    Ok(Grammar::new(index)?)
}

fn generate(args: GenerateArgs) -> Result<()> {
    let config = match (&args.config, args.grammar) {
        (Some(path), _) => read_json::<DatasetConfigFile>(path)?.to_config()?,
        (None, Some(g)) => DatasetConfig::table_defaults(grammar(g)?, args.seed),
        (None, None) => bail!("either --grammar or --config is required"),
    };
    let data = build_dataset(&config)?;
    write_dataset(&args.out, &data)?;
    eprintln!("train {} (distinct {}), test {}", data.train.len(), data.train_distinct().len(), data.test.len());
    Ok(())
}

fn load_data(dir: Option<&Path>, fallback: Option<DatasetConfig>) -> Result<LabeledDataset> {
    match (dir, fallback) {
        (Some(d), _) => read_dataset(d),
        (None, Some(c)) => Ok(build_dataset(&c)?),
        (None, None) => bail!("no dataset given and none recorded"),
    }
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let g = grammar(args.grammar)?;
    let data = load_data(args.data.as_deref(), Some(DatasetConfig::table_defaults(g, args.data_seed)))?;
    let hidden = args.model.hidden.unwrap_or_else(|| budget_hidden_size(args.model.arch, grammar_param_budget(g), 3));
    let config = ModelConfig::new(args.model.arch, args.model.activation, hidden, derive_seed(args.seed, stream::WEIGHTS))?;
    let h0 = initial_hidden(&config, derive_seed(args.seed, stream::HIDDEN));
    let mut tc_file = match &args.config {
        Some(p) => read_json::<TrainConfigFile>(p)?,
        None => TrainConfigFile::default(),
    };
    if let Some(e) = args.epochs {
        tc_file.max_epochs = e;
    }
    let tc = tc_file.to_config(derive_seed(args.seed, stream::SHUFFLE))?;
    let mut history = String::from("epoch,mean_loss,accuracy\n");
    let outcome = train_with(RnnModel::init(config)?, &data.train, &tc, &h0, |s| {
        history.push_str(&format!("{},{},{}\n", s.epoch, s.mean_loss, s.accuracy));
    })?;
    let test_acc = accuracy(&outcome.model, &data.test, &h0)?;
    eprintln!("converged: {}, epochs: {}, test accuracy: {test_acc}", outcome.converged, outcome.epochs());
    write_file(&args.out.join("history.csv"), history.as_bytes())?;
    let epochs = outcome.epochs();
    write_checkpoint(
        &args.out.join("model.ckpt"),
        &Checkpoint {
            model: outcome.model,
            h0,
            dataset: Some(data.config.clone()),
            converged: outcome.converged,
            epochs,
        },
    )
}

fn extract_cmd(args: ExtractArgs) -> Result<()> {
    let ckpt = read_checkpoint(&args.checkpoint)?;
    let data = load_data(args.data.as_deref(), ckpt.dataset.clone())?;
    let options = ExtractionOptions {
        label_source: if args.last_symbol_labels { LabelSource::LastSymbol } else { LabelSource::StopStep },
        unobserved: match args.unobserved.as_str() {
            "stop-probe" => UnobservedLabel::StopProbe,
            "reject" => UnobservedLabel::Reject,
            _ => UnobservedLabel::Minimal,
        },
    };
    let traces = collect_states(&ckpt.model, &data.train_distinct(), &ckpt.h0)?;
    let e = Extractor::new(&traces, options)?.extract(args.k, args.seed)?;
    let g = data.config.grammar;
    let config = ckpt.model.config();
    let record = RunRecord {
        grammar: g.index(),
        architecture: config.architecture.as_str().to_string(),
        activation: config.activation.as_str().to_string(),
        trial: 0,
        seed: args.seed,
        k: args.k,
        converged: ckpt.converged,
        epochs: ckpt.epochs,
        train_accuracy: accuracy(&ckpt.model, &data.train, &ckpt.h0)?,
        accuracy: evaluate_dfa(&e.dfa, &data.test)?,
        is_ground_truth: e.dfa.is_isomorphic(&g.dfa())?,
        live_states: e.live_states,
        dfa: DfaJson::from(&e.dfa),
        wall_ms: 0,
    };
    eprintln!(
        "live clusters {}, states {}, test accuracy {}, ground truth {}",
        record.live_states, e.dfa.state_count(), record.accuracy, record.is_ground_truth
    );
    write_dfa_json(&args.out.join("dfa.json"), &e.dfa)?;
    write_file(&args.out.join("dfa.dot"), e.dfa.to_dot().as_bytes())?;
    write_json(&args.out.join("record.json"), &record)
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let grammars: Vec<Grammar> = match args.grammar {
        Some(g) => vec![grammar(g)?],
        None => Grammar::all().collect(),
    };
    let csv = tables::metrics_csv(&grammars, &args.lengths)?;
    match &args.out {
        Some(path) => write_file(path, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn rings(args: RingsArgs) -> Result<()> {
    let g = grammar(args.grammar)?;
    let data = ring_plot_data(g, args.max_len)?;
    let mut csv = String::from("length,index,string,label\n");
    for (r, ring) in data.iter().enumerate() {
        let len = r + 1;
        for (i, &label) in ring.iter().enumerate() {
            let word = tomita_core::automata::format_word(&tomita_core::automata::word_from_index(i as u64, len));
            csv.push_str(&format!("{len},{i},{word},{}\n", label as u8));
        }
    }
    write_file(&args.out.join(format!("rings_g{}.csv", g.index())), csv.as_bytes())?;
    write_json(&args.out.join(format!("rings_g{}.vl.json", g.index())), &plots::ring_chart(g, &data))
}

fn parse_k_range(text: &str) -> Result<(usize, usize)> {
    let parse = |s: &str| s.trim().parse::<usize>().with_context(|| format!("invalid K `{s}`"));
    match text.split_once(['-', ':']).or_else(|| text.split_once("..")) {
        Some((a, b)) => Ok((parse(a)?, parse(b.trim_start_matches('='))?)),
        None => {
            let k = parse(text)?;
            Ok((k, k))
        }
    }
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut spec = match (&args.config, args.grammar, args.arch) {
        (Some(p), _, _) => read_json::<ExperimentSpec>(p)?,
        (None, Some(g), Some(a)) => ExperimentSpec::new(g, a, None),
        _ => bail!("either --config or both --grammar and --arch are required"),
    };
    if let Some(g) = args.grammar {
        spec.grammar = g;
    }
    if let Some(a) = args.arch {
        spec.architecture = a.as_str().to_string();
    }
    if let Some(a) = args.activation {
        spec.activation = Some(a.as_str().to_string());
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(k) = &args.k {
        (spec.k_min, spec.k_max) = parse_k_range(k)?;
    }
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if let Some(e) = args.epochs {
        spec.train.max_epochs = e;
    }
    spec.validate()?;
    write_json(&args.out.join("spec.json"), &spec)?;
    let started = std::time::Instant::now();
    let records = run_experiment(&spec, Some(&args.out))?;
    let summaries = aggregate(&records)?;
    for s in &summaries {
        eprintln!(
            "G{} {}-{} [{}]: runs {}, mean accuracy {:.4}, success rate {:.4}",
            s.grammar, s.architecture, s.activation, s.subset, s.runs, s.overall_acc, s.success_rate
        );
    }
    eprintln!("finished {} runs in {:.1} s", records.len(), started.elapsed().as_secs_f64());
    export(&summaries, &records, &args.out)?;
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let mut records: Vec<RunRecord> = Vec::new();
    for input in &args.inputs {
        let path = if input.is_dir() { input.join("records.jsonl") } else { input.clone() };
        records.extend(read_jsonl::<RunRecord>(&path)?);
    }
    let summaries = aggregate(&records)?;
    for path in export(&summaries, &records, &args.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train_cmd(a),
        Command::Extract(a) => extract_cmd(a),
        Command::Metrics(a) => metrics(a),
        Command::Rings(a) => rings(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
