//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when inputs fail validation or a file cannot
//! be read or written, 2 on usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use effiara_core::distribution::{allocate_samples_for, default_annotator_ids, verify_plan};
use effiara_core::features::FeatureHasher;
use effiara_core::graph::{export_dot, ReliabilityConfig, ReliabilityMode};
use effiara_core::labeling::{extract_gold_set, label_samples, uniform_reliabilities, LabelMapping};
use effiara_core::simulator::{simulate_campaign, SimScenario};
use effiara_core::trainer::{LabelMode, ReliabilitySource, TrainConfig, Weighting};
use effiara_core::{AnnotationStore, CampaignParams, LabelSet};

use crate::error::{Error, Result};
use crate::files::{emit, read};
use crate::formats::{self, EvalJson, PlanJson, ReliabilityReport, ScenarioJson};
use crate::pipeline;
use crate::tables;

#[derive(Debug, Parser)]
#[command(
    name = "effiara",
    version,
    about = "Plan annotation campaigns, score annotators and train on reliability-weighted labels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assign samples to single, double and re-annotation projects.
    Distribute(DistributeArgs),
    /// Score annotators from inter- and intra-annotator agreement.
    Reliability(ReliabilityArgs),
    /// Render the annotator graph as DOT.
    Graph(GraphArgs),
    /// Turn annotations into soft and hard labels.
    Labels(LabelsArgs),
    /// Extract the high-agreement gold samples.
    Gold(GoldArgs),
    /// Train on non-gold labels and evaluate on gold labels.
    Train(TrainArgs),
    /// Generate a synthetic campaign with known annotator accuracies.
    Simulate(SimulateArgs),
    /// Correlate reliability scores with true simulated accuracies.
    Recover(RecoverArgs),
}

#[derive(Debug, Args)]
pub struct AnnotationInput {
    /// Annotation CSV.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Label names in index order.
    #[arg(long, value_delimiter = ',', default_value = "misinfo,debunk,other")]
    pub labels: Vec<String>,
    /// Largest confidence score.
    #[arg(long, default_value_t = 5)]
    pub max_confidence: u32,
}

impl AnnotationInput {
    fn load(&self) -> Result<AnnotationStore> {
        let label_set = LabelSet::new(self.labels.iter().cloned())?;
        tables::parse_annotations(&read(&self.annotations)?, label_set, self.max_confidence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Single,
    Iterative,
}

#[derive(Debug, Args)]
pub struct ReliabilityFlags {
    /// Weight on intra-annotator agreement, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Single)]
    pub mode: ModeArg,
    /// Weight each neighbour's agreement by its reliability.
    #[arg(long)]
    pub weighted_inter: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
}

impl ReliabilityFlags {
    fn config(&self) -> ReliabilityConfig {
        ReliabilityConfig {
            lambda: self.lambda,
            mode: match self.mode {
                ModeArg::Single => ReliabilityMode::SinglePass,
                ModeArg::Iterative => ReliabilityMode::Iterative,
            },
            use_weighted_inter: self.weighted_inter,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Args)]
pub struct DistributeArgs {
    /// Samples CSV providing the pool of sample ids.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub annotators: usize,
    /// Hours available per annotator.
    #[arg(long)]
    pub hours: f64,
    /// Annotations per hour.
    #[arg(long)]
    pub rate: f64,
    /// Proportion of samples annotated twice.
    #[arg(long)]
    pub double_prop: f64,
    /// Proportion of single-annotated samples re-annotated.
    #[arg(long)]
    pub reanno_prop: f64,
    /// Annotator ids in ring order; defaults to a1..an.
    #[arg(long, value_delimiter = ',')]
    pub annotator_ids: Option<Vec<String>>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReliabilityArgs {
    #[command(flatten)]
    pub input: AnnotationInput,
    #[command(flatten)]
    pub flags: ReliabilityFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub input: AnnotationInput,
    #[command(flatten)]
    pub flags: ReliabilityFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelsArgs {
    #[command(flatten)]
    pub input: AnnotationInput,
    /// Reliability report used to weight double annotations; equal weights
    /// when omitted.
    #[arg(long)]
    pub reliability: Option<PathBuf>,
    /// Fold one label into another, e.g. `debunk=other`. Repeatable.
    #[arg(long = "merge", value_parser = parse_merge)]
    pub merges: Vec<(String, String)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GoldArgs {
    #[command(flatten)]
    pub input: AnnotationInput,
    #[arg(long = "merge", value_parser = parse_merge)]
    pub merges: Vec<(String, String)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelModeArg {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    None,
    Reliability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Inter,
    Intra,
    InterIntra,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled JSONL; gold samples form the test split.
    #[arg(long)]
    pub labeled: PathBuf,
    /// Samples CSV with claim and post texts.
    #[arg(long)]
    pub samples: PathBuf,
    /// Reliability report, required for `--weighting reliability`.
    #[arg(long)]
    pub reliability: Option<PathBuf>,
    /// Label names in index order, matching the labeled file.
    #[arg(long, value_delimiter = ',', default_value = "misinfo,debunk,other")]
    pub labels: Vec<String>,
    #[arg(long, value_enum, default_value_t = LabelModeArg::Soft)]
    pub label_mode: LabelModeArg,
    #[arg(long, value_enum, default_value_t = WeightingArg::None)]
    pub weighting: WeightingArg,
    #[arg(long, value_enum, default_value_t = SourceArg::InterIntra)]
    pub reliability_source: SourceArg,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long)]
    pub seed: u64,
    /// Eval report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training trace CSV (`epoch,loss`).
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON; the built-in standard scenario when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub annotations_out: PathBuf,
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
    #[arg(long)]
    pub plan_out: Option<PathBuf>,
    /// Writes the scenario actually used, as JSON.
    #[arg(long)]
    pub scenario_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Reliability report computed on this scenario's simulated annotations.
    /// Without it the campaign is simulated and scored here.
    #[arg(long)]
    pub reliability: Option<PathBuf>,
    #[command(flatten)]
    pub flags: ReliabilityFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_merge(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((from, to)) if !from.is_empty() && !to.is_empty() => Ok((from.to_string(), to.to_string())),
        _ => Err(format!("expected FROM=TO, got `{s}`")),
    }
}

fn load_scenario(path: Option<&Path>, seed: u64) -> Result<SimScenario> {
    let mut scenario = match path {
        Some(p) => SimScenario::try_from(&formats::from_json::<ScenarioJson>(&read(p)?)?)?,
        None => SimScenario::standard(seed),
    };
    scenario.seed = seed;
    Ok(scenario)
}

fn merged(store: AnnotationStore, merges: &[(String, String)]) -> Result<AnnotationStore> {
    if merges.is_empty() {
        return Ok(store);
    }
    let mapping = LabelMapping::from_merges(store.label_set(), merges)?;
    Ok(mapping.merge_store(&store)?)
}

fn distribute(args: &DistributeArgs) -> Result<()> {
    let params = CampaignParams::new(
        args.annotators,
        args.hours,
        args.rate,
        args.double_prop,
        args.reanno_prop,
    )?;
    let samples = tables::parse_samples(&read(&args.samples)?)?;
    let ids: Vec<String> = samples.into_iter().map(|s| s.sample_id).collect();
    let annotator_ids = args
        .annotator_ids
        .clone()
        .unwrap_or_else(|| default_annotator_ids(args.annotators));
    let plan = allocate_samples_for(&ids, &annotator_ids, &params, args.seed)?;
    let audit = verify_plan(&plan);
    if !audit.passed() {
        return Err(Error::Invalid(format!(
            "plan failed its audit: {}",
            audit.violations.join("; ")
        )));
    }
    emit(args.out.as_deref(), &formats::to_json(&PlanJson::from(&plan))?)
}

fn reliability(args: &ReliabilityArgs) -> Result<()> {
    let store = args.input.load()?;
    let (_, report) = pipeline::assess(&store, &args.flags.config())?;
    if !report.converged && args.flags.mode == ModeArg::Iterative {
        log::warn!("reliability scores did not converge; reporting the last iterate");
    }
    emit(args.out.as_deref(), &formats::to_json(&report)?)
}

fn graph(args: &GraphArgs) -> Result<()> {
    let store = args.input.load()?;
    let (graph, _) = pipeline::assess(&store, &args.flags.config())?;
    emit(args.out.as_deref(), export_dot(&graph).as_bytes())
}

fn labels(args: &LabelsArgs) -> Result<()> {
    let store = args.input.load()?;
    let reliabilities = match &args.reliability {
        Some(path) => formats::from_json::<ReliabilityReport>(&read(path)?)?.reliabilities(),
        None => uniform_reliabilities(&store),
    };
    let store = merged(store, &args.merges)?;
    let labeled = label_samples(&store, &reliabilities)?;
    emit(args.out.as_deref(), &formats::write_jsonl(&labeled)?)
}

fn gold(args: &GoldArgs) -> Result<()> {
    let store = merged(args.input.load()?, &args.merges)?;
    emit(args.out.as_deref(), &formats::write_jsonl(&extract_gold_set(&store)?)?)
}

fn train(args: &TrainArgs) -> Result<()> {
    let label_set = LabelSet::new(args.labels.iter().cloned())?;
    let labeled = formats::parse_jsonl(&read(&args.labeled)?, &label_set)?;
    let samples = tables::parse_samples(&read(&args.samples)?)?;
    let config = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        l2: args.l2,
        seed: args.seed,
        label_mode: match args.label_mode {
            LabelModeArg::Hard => LabelMode::Hard,
            LabelModeArg::Soft => LabelMode::Soft,
        },
        weighting: match args.weighting {
            WeightingArg::None => Weighting::None,
            WeightingArg::Reliability => Weighting::Reliability,
        },
        reliability_source: match args.reliability_source {
            SourceArg::Inter => ReliabilitySource::Inter,
            SourceArg::Intra => ReliabilitySource::Intra,
            SourceArg::InterIntra => ReliabilitySource::InterIntra,
        },
    };
    let reliabilities = match (&args.reliability, config.weighting) {
        (Some(path), _) => {
            formats::from_json::<ReliabilityReport>(&read(path)?)?.reliabilities_for(config.reliability_source)?
        }
        (None, Weighting::None) => Default::default(),
        (None, Weighting::Reliability) => {
            return Err(Error::Invalid("--weighting reliability needs --reliability".into()))
        }
    };
    let features = pipeline::hash_samples(&samples, &FeatureHasher::default());
    let outcome = pipeline::train_and_evaluate(&labeled, &label_set, &features, &reliabilities, &config)?;
    log::info!(
        "trained on {} samples, evaluated on {}",
        outcome.n_train,
        outcome.report.n_test
    );
    if let Some(path) = &args.trace_out {
        emit(Some(path), &tables::write_trace(&outcome.trained.loss_trace)?)?;
    }
    emit(
        args.out.as_deref(),
        &formats::to_json(&EvalJson::new(&outcome.report, &label_set))?,
    )
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let scenario = load_scenario(args.scenario.as_deref(), args.seed)?;
    let out = simulate_campaign(&scenario)?;
    emit(Some(&args.annotations_out), &tables::write_annotations(&out.store)?)?;
    if let Some(path) = &args.truth_out {
        emit(Some(path), &tables::write_ground_truth(&out.ground_truth)?)?;
    }
    if let Some(path) = &args.samples_out {
        emit(Some(path), &tables::write_samples(&out.samples)?)?;
    }
    if let Some(path) = &args.plan_out {
        emit(Some(path), &formats::to_json(&PlanJson::from(&out.plan))?)?;
    }
    if let Some(path) = &args.scenario_out {
        emit(Some(path), &formats::to_json(&ScenarioJson::from(&scenario))?)?;
    }
    Ok(())
}

fn recover(args: &RecoverArgs) -> Result<()> {
    let scenario = load_scenario(args.scenario.as_deref(), args.seed)?;
    let recovery = match &args.reliability {
        Some(path) => {
            let report: ReliabilityReport = formats::from_json(&read(path)?)?;
            pipeline::recovery_from_report(&scenario, &report)?
        }
        None => pipeline::recover(&scenario, &args.flags.config())?,
    };
    emit(args.out.as_deref(), &formats::to_json(&recovery)?)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Distribute(a) => distribute(a),
        Command::Reliability(a) => reliability(a),
        Command::Graph(a) => graph(a),
        Command::Labels(a) => labels(a),
        Command::Gold(a) => gold(a),
        Command::Train(a) => train(a),
        Command::Simulate(a) => simulate(a),
        Command::Recover(a) => recover(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn merge_flag_parsing() {
        assert_eq!(parse_merge("debunk=other"), Ok(("debunk".into(), "other".into())));
        assert!(parse_merge("debunk").is_err());
        assert!(parse_merge("=other").is_err());
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(run(["effiara", "frobnicate"]), 2);
        assert_eq!(run(["effiara", "reliability", "--bogus"]), 2);
        assert_eq!(run(["effiara", "simulate", "--annotations-out", "x.csv"]), 2);
        assert_eq!(run(["effiara", "--help"]), 0);
    }

    #[test]
    fn validation_errors_exit_with_one() {
        assert_eq!(run(["effiara", "reliability", "--annotations", "/nonexistent.csv"]), 1);
    }
}
