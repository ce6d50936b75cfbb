//! `tsreason` front-end: gen | trace | advantage | eval | render.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 invariant violation.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::ScanParams;
use crate::domain::{AnomalyClass, LabeledInstance};
use crate::error::{Error, Result};
use crate::expcot::{audit, generate_expcot, ExpCotTrace};
use crate::io::{read_instances, read_jsonl, write_atomic, write_jsonl};
use crate::metrics::{evaluate, parse_response, Prediction, PredictionRecord};
use crate::render::{render_png, render_svg};
use crate::synth::{generate_dataset, DatasetConfig};
use crate::timerpo::{
    group_advantages_for, whitespace_tokens, AdvantageConfig, AdvantageReport, GroundTruth, GroupReport,
    ToyEmbedder, TokenEmbeddingSequence,
};

/// Largest trace/recomputation difference the audit accepts.
pub const AUDIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "tsreason", version, about = "Synthetic anomaly corpora, expert traces, advantages, evaluation and plots")]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SharedArgs {
    /// Input file (instances, responses or predictions depending on the subcommand)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file, or directory for `render`
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Corpus seed [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML or JSON file with [gen], [analysis], [advantage], [eval] and [render] tables
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic corpus as JSONL
    Gen(GenArgs),
    /// Write one expert trace per instance
    Trace(TraceArgs),
    /// Compute group advantages for sampled responses
    Advantage(AdvantageArgs),
    /// Score predictions against ground truth
    Eval(EvalArgs),
    /// Plot each instance as an 805x124 image
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of instances [default: 100]
    #[arg(long)]
    pub n: Option<usize>,
    /// Class fractions, e.g. `seasonal=0.5,global_point=0.5` [default: uniform over the five anomaly classes]
    #[arg(long)]
    pub mix: Option<String>,
    /// Series length [default: 1000]
    #[arg(long)]
    pub length: Option<usize>,
    /// Base period [default: 50]
    #[arg(long)]
    pub period: Option<f64>,
    /// Base amplitude [default: 1]
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Gaussian noise std [default: 0.05]
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Linear trend slope [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    pub trend_slope: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalysisOverrides {
    /// Envelope and gradient multiplier k [default: 3]
    #[arg(long)]
    pub k: Option<f64>,
    /// Smoothing window for gradients [default: 21]
    #[arg(long)]
    pub smooth_window: Option<usize>,
    /// Matrix-profile window m [default: 50]
    #[arg(long)]
    pub mp_window: Option<usize>,
    /// Sliding period window W [default: 120]
    #[arg(long)]
    pub period_window: Option<usize>,
    /// Sliding period stride [default: 20]
    #[arg(long)]
    pub period_stride: Option<usize>,
    /// Period band multiplier k_band [default: 3]
    #[arg(long)]
    pub k_band: Option<f64>,
    /// Discord z-score threshold [default: 3.5]
    #[arg(long)]
    pub discord_threshold: Option<f64>,
    /// HBOS histogram bins [default: 10]
    #[arg(long)]
    pub hbos_bins: Option<usize>,
    /// Peak-to-median power ratio for a clear period [default: 15]
    #[arg(long)]
    pub peak_ratio: Option<f64>,
}

impl AnalysisOverrides {
    fn apply(&self, p: &mut ScanParams) {
        set(&mut p.k, self.k);
        set(&mut p.smooth_window, self.smooth_window);
        set(&mut p.mp_window, self.mp_window);
        set(&mut p.period_window, self.period_window);
        set(&mut p.period_stride, self.period_stride);
        set(&mut p.k_band, self.k_band);
        set(&mut p.discord_threshold, self.discord_threshold);
        set(&mut p.hbos_bins, self.hbos_bins);
        set(&mut p.peak_ratio, self.peak_ratio);
    }
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub analysis: AnalysisOverrides,
    /// Recompute every trace and report the largest numeric deviation
    #[arg(long)]
    pub audit: bool,
    /// Audit an existing trace JSONL against --input instead of generating
    #[arg(long, conflicts_with = "audit")]
    pub check: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdvantageArgs {
    /// Expert trace JSONL (from `trace`)
    #[arg(long)]
    pub traces: PathBuf,
    /// Embedding JSONL; expert rows use the group id, responses `<id>/<k>`.
    /// Without it, whitespace tokens go through the toy embedder
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Toy embedder dimension [default: 32]
    #[arg(long, default_value_t = 32)]
    pub embed_dim: usize,
    /// Reasoning advantage weight α [default: 0.3]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Reasoning temperature τ [default: 1.0]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Normalizer guard ε [default: 1e-8]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sinkhorn regularization [default: 0.05]
    #[arg(long)]
    pub reg: Option<f64>,
    /// Sinkhorn marginal tolerance [default: 1e-6]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sinkhorn iteration cap [default: 1000]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Format reward weight λ_fmt [default: 0.1]
    #[arg(long)]
    pub w_format: Option<f64>,
    /// Class reward weight λ_cls [default: 0.2]
    #[arg(long)]
    pub w_class: Option<f64>,
    /// Location reward weight λ_loc [default: 0.7]
    #[arg(long)]
    pub w_location: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth instance JSONL
    #[arg(long)]
    pub truth: PathBuf,
    /// Affinity window w [default: max(1, round(0.01·T)) per instance]
    #[arg(long)]
    pub window: Option<usize>,
    /// Also write the text table here (it is printed to stdout otherwise)
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    #[default]
    Png,
    Svg,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Image format [default: png]
    #[arg(long, value_enum)]
    pub format: Option<ImageFormat>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub format: ImageFormat,
}

/// Everything a run can be configured with; file values are overridden by flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub gen: DatasetConfig,
    pub analysis: ScanParams,
    pub advantage: AdvantageConfig,
    pub eval: EvalConfig,
    pub render: RenderConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gen.base.validate()?;
        for inj in self.gen.injections.values() {
            inj.validate()?;
        }
        self.analysis.validate()?;
        self.advantage.validate()?;
        if self.eval.window == Some(0) {
            return Err(Error::config("eval window must be >= 1"));
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Parse `class=fraction` pairs; `_` and `-` stand for spaces in class names.
pub fn parse_mix(text: &str) -> Result<BTreeMap<AnomalyClass, f64>> {
    let mut mix = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, frac) = part
            .split_once('=')
            .ok_or_else(|| Error::config(format!("mix entry {part:?} is not class=fraction")))?;
        let class = AnomalyClass::parse_normalized(&name.replace(['_', '-'], " "))
            .ok_or_else(|| Error::config(format!("unknown class {name:?} in mix")))?;
        let f: f64 = frac
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad fraction {frac:?} in mix")))?;
        if mix.insert(class, f).is_some() {
            return Err(Error::config(format!("class {class} repeated in mix")));
        }
    }
    Ok(mix)
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required for this subcommand")))
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tsreason: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let mut config = match &cli.shared.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut config.seed, cli.shared.seed.map(Some));
    set(&mut config.jobs, cli.shared.jobs.map(Some));
    apply_overrides(&mut config, &cli.command)?;
    config.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Gen(_) => cmd_gen(&cli.shared, &config),
        Command::Trace(a) => match &a.check {
            Some(p) => cmd_check(&cli.shared, p),
            None => cmd_trace(&cli.shared, &config, a.audit),
        },
        Command::Advantage(a) => cmd_advantage(&cli.shared, &config, a),
        Command::Eval(a) => cmd_eval(&cli.shared, &config, a),
        Command::Render(_) => cmd_render(&cli.shared, &config),
    })
}

fn apply_overrides(config: &mut RunConfig, command: &Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => {
            let g = &mut config.gen;
            set(&mut g.n, a.n);
            if let Some(m) = &a.mix {
                g.mix = parse_mix(m)?;
            }
            set(&mut g.base.length, a.length);
            set(&mut g.base.period, a.period);
            set(&mut g.base.amplitude, a.amplitude);
            set(&mut g.base.noise_std, a.noise_std);
            set(&mut g.base.trend_slope, a.trend_slope);
            if let Some(s) = config.seed {
                g.seed = s;
            }
        }
        Command::Trace(a) => a.analysis.apply(&mut config.analysis),
        Command::Advantage(a) => {
            let c = &mut config.advantage;
            set(&mut c.alpha, a.alpha);
            set(&mut c.tau, a.tau);
            set(&mut c.eps, a.eps);
            set(&mut c.sinkhorn.reg, a.reg);
            set(&mut c.sinkhorn.tol, a.tol);
            set(&mut c.sinkhorn.max_iter, a.max_iter);
            set(&mut c.weights.format, a.w_format);
            set(&mut c.weights.class, a.w_class);
            set(&mut c.weights.location, a.w_location);
        }
        Command::Eval(a) => {
            if a.window.is_some() {
                config.eval.window = a.window;
            }
        }
        Command::Render(a) => set(&mut config.render.format, a.format),
    }
    Ok(())
}

fn cmd_gen(shared: &SharedArgs, config: &RunConfig) -> CliResult<()> {
    let out = required(&shared.output, "output")?;
    let instances = generate_dataset(&config.gen)?;
    write_jsonl(out, &instances)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct AuditSummary {
    traces: usize,
    max_deviation: f64,
    failures: Vec<String>,
}

fn audit_all(traces: &[ExpCotTrace], instances: &[LabeledInstance]) -> CliResult<()> {
    let by_id: HashMap<&str, &LabeledInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let results = traces
        .par_iter()
        .map(|t| {
            let inst = by_id
                .get(t.id.as_str())
                .ok_or_else(|| Error::input(format!("trace {} has no matching instance", t.id)))?;
            audit(t, inst).map(|a| (t.id.clone(), a))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = AuditSummary {
        traces: results.len(),
        max_deviation: results.iter().map(|(_, a)| a.max_deviation).fold(0.0, f64::max),
        failures: results
            .iter()
            .filter(|(_, a)| !a.passed(AUDIT_TOLERANCE))
            .map(|(id, _)| id.clone())
            .collect(),
    };
    println!("{}", serde_json::to_string(&summary).map_err(Error::from)?);
    if !summary.failures.is_empty() {
        return Err(CliError::Invariant(format!(
            "{} trace(s) failed the audit",
            summary.failures.len()
        )));
    }
    Ok(())
}

fn cmd_trace(shared: &SharedArgs, config: &RunConfig, run_audit: bool) -> CliResult<()> {
    let input = required(&shared.input, "input")?;
    let out = required(&shared.output, "output")?;
    let instances = read_instances(input)?;
    let traces = instances
        .par_iter()
        .map(|inst| generate_expcot(inst, &config.analysis))
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(out, &traces)?;
    if run_audit {
        audit_all(&traces, &instances)?;
    }
    Ok(())
}

fn cmd_check(shared: &SharedArgs, traces: &Path) -> CliResult<()> {
    let input = required(&shared.input, "input")?;
    let instances = read_instances(input)?;
    let traces: Vec<ExpCotTrace> = read_jsonl(traces)?;
    audit_all(&traces, &instances)
}

/// One group of sampled responses for an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseGroup {
    pub id: String,
    pub responses: Vec<String>,
}

/// Wire form of an embedding sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRecord {
    pub id: String,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub vectors: Vec<Vec<f64>>,
}

fn cmd_advantage(shared: &SharedArgs, config: &RunConfig, args: &AdvantageArgs) -> CliResult<()> {
    let input = required(&shared.input, "input")?;
    let out = required(&shared.output, "output")?;
    let groups: Vec<ResponseGroup> = read_jsonl(input)?;
    let traces: Vec<ExpCotTrace> = read_jsonl(&args.traces)?;
    let traces: HashMap<&str, &ExpCotTrace> = traces.iter().map(|t| (t.id.as_str(), t)).collect();
    let table: Option<HashMap<String, TokenEmbeddingSequence>> = match &args.embeddings {
        Some(p) => {
            let recs: Vec<EmbeddingRecord> = read_jsonl(p)?;
            let mut m = HashMap::new();
            for r in recs {
                let seq = TokenEmbeddingSequence::new(r.tokens, r.vectors, r.weights)?;
                m.insert(r.id, seq);
            }
            Some(m)
        }
        None => None,
    };
    let toy = ToyEmbedder::new(args.embed_dim)?;
    let lookup = |key: &str, text: &str| -> Result<TokenEmbeddingSequence> {
        match &table {
            Some(m) => m
                .get(key)
                .cloned()
                .ok_or_else(|| Error::input(format!("no embedding record with id {key}"))),
            None => {
                let mut tokens = whitespace_tokens(text);
                if tokens.is_empty() {
                    tokens.push(String::new());
                }
                toy.embed(&tokens)
            }
        }
    };

    let reports = groups
        .par_iter()
        .map(|g| -> Result<GroupReport> {
            let trace = traces
                .get(g.id.as_str())
                .ok_or_else(|| Error::input(format!("no expert trace for group {}", g.id)))?;
            let expert = lookup(&g.id, &trace.flat_text)?;
            let parsed: Vec<_> = g.responses.iter().map(|r| parse_response(r)).collect();
            let embeddings = g
                .responses
                .iter()
                .enumerate()
                .map(|(k, r)| lookup(&format!("{}/{k}", g.id), r))
                .collect::<Result<Vec<_>>>()?;
            let adv = group_advantages_for(&parsed, &GroundTruth::from(*trace), &expert, &embeddings, &config.advantage)?;
            Ok(GroupReport::new(g.id.clone(), &adv))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = AdvantageReport {
        config: config.advantage,
        groups: reports,
    };
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(Error::from)?;
    bytes.push(b'\n');
    write_atomic(out, &bytes)?;
    Ok(())
}

fn cmd_eval(shared: &SharedArgs, config: &RunConfig, args: &EvalArgs) -> CliResult<()> {
    let input = required(&shared.input, "input")?;
    let out = required(&shared.output, "output")?;
    let gts: Vec<LabeledInstance> = read_instances(&args.truth)?;
    let records: Vec<PredictionRecord> = read_jsonl(input)?;
    let preds: Vec<Prediction> = records.iter().map(Prediction::from).collect();
    let report = evaluate(&preds, &gts, config.eval.window)?;
    if !report.missing.is_empty() {
        eprintln!(
            "warning: {} instance(s) without a prediction were scored as normal",
            report.missing.len()
        );
    }
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(Error::from)?;
    bytes.push(b'\n');
    write_atomic(out, &bytes)?;
    let table = report.to_table();
    match &args.table {
        Some(p) => write_atomic(p, table.as_bytes())?,
        None => print!("{table}"),
    }
    Ok(())
}

/// File-name-safe form of an instance id.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn cmd_render(shared: &SharedArgs, config: &RunConfig) -> CliResult<()> {
    let input = required(&shared.input, "input")?;
    let out = required(&shared.output, "output")?;
    let instances = read_instances(input)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let format = config.render.format;
    instances.par_iter().try_for_each(|inst| -> Result<()> {
        let stem = file_stem(&inst.id);
        match format {
            ImageFormat::Png => {
                let bytes = render_png(inst.series.values())?;
                write_atomic(&out.join(format!("{stem}.png")), &bytes)
            }
            ImageFormat::Svg => {
                let svg = render_svg(inst.series.values())?;
                write_atomic(&out.join(format!("{stem}.svg")), svg.as_bytes())
            }
        }
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_parsing() {
        let m = parse_mix("seasonal=0.5, global_point=0.25,contextual-point=0.25").unwrap();
        assert_eq!(m[&AnomalyClass::Seasonal], 0.5);
        assert_eq!(m[&AnomalyClass::GlobalPoint], 0.25);
        assert!(parse_mix("wobbly=1").is_err());
        assert!(parse_mix("trend").is_err());
        assert!(parse_mix("trend=1,trend=0").is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok: RunConfig = toml::from_str("[analysis]\nk = 2.5\n[advantage]\nalpha = 0.5\n").unwrap();
        assert_eq!(ok.analysis.k, 2.5);
        assert_eq!(ok.advantage.alpha, 0.5);
        assert_eq!(ok.analysis.mp_window, 50);
        assert!(toml::from_str::<RunConfig>("[analysis]\nkk = 2.5\n").is_err());
        assert!(toml::from_str::<RunConfig>("bogus = 1\n").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["tsreason", "frobnicate"]), 1);
        assert_eq!(run(["tsreason", "gen"]), 1);
        assert_eq!(run(["tsreason", "gen", "--output", "/tmp/x.jsonl", "--mix", "wobbly=1"]), 1);
    }
}
