//! Command-line front end.
//!
//! Settings come from three layers, later layers winning:
//!
//! 1. a config file given with `--config`: one `key = value` per line, `#`
//!    starts a comment, blank lines are ignored;
//! 2. environment variables `LEADLAG_<KEY>` (key upper-cased, e.g.
//!    `LEADLAG_LAG_COUNT=4`);
//! 3. command-line flags `--<key>` with underscores written as dashes.
//!
//! Keys: `corpus`, `tags`, `tag`, `labels`, `region`, `cities` (comma
//! separated), `lag_count`, `boundary` (YYYY-MM-DD), `solver` (`ols|nnls`),
//! `ridge`, `active_set` (`target|union`), `filter_stage` (`pre|post`),
//! `intercept` (`true|false`), `output_dir`, `jobs`.
//!
//! Exit codes: 0 success, 2 input error, 3 every city failed.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::chart_store::{artists_with_tag, build_artist_index, parse_chart_csv, parse_tag_csv, write_chart_csv, ChartSeries};
use crate::design::{build_design, default_boundary, temporal_split, ActiveSetRule, HistoryScope, LagConfig, DEFAULT_LAG_COUNT};
use crate::error::Error;
use crate::evaluate::{build_report, evaluate_city, parse_labels, CityFailure, EvalSettings, RegionReport, ReportMetadata, Role};
use crate::preprocess::{to_listeners_matrices, velocities_from_series, FilterStage, CHART_DEPTH};
use crate::solver::{fit, write_coefficients_csv, SolverVariant};
use crate::synth::{fingerprint, generate_planted, PlantSpec, SynthSidecar};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ANALYSIS: i32 = 3;
pub const ENV_PREFIX: &str = "LEADLAG_";

const KEYS: &[&str] = &[
    "corpus",
    "tags",
    "tag",
    "labels",
    "region",
    "cities",
    "lag_count",
    "boundary",
    "solver",
    "ridge",
    "active_set",
    "filter_stage",
    "intercept",
    "output_dir",
    "jobs",
];

#[derive(Debug)]
enum Failure {
    Input(String),
    Analysis(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "leadlag", version, about = "Lead-lag analysis of weekly city music charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a corpus and print a summary.
    Validate(RunArgs),
    /// Fit own-history and all-history models for every city and write a report.
    Evaluate(RunArgs),
    /// Generate a synthetic corpus from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        /// Output chart CSV; the sidecar JSON is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one city's design matrix and fitted coefficients as CSV.
    DumpDesign {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        city: String,
        #[arg(long, default_value = "all")]
        scope: String,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    tags: Option<String>,
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    cities: Option<String>,
    #[arg(long)]
    lag_count: Option<String>,
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
    #[arg(long)]
    active_set: Option<String>,
    #[arg(long)]
    filter_stage: Option<String>,
    #[arg(long)]
    intercept: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
}

impl RunArgs {
    fn flags(&self) -> BTreeMap<&'static str, String> {
        let pairs = [
            ("corpus", &self.corpus),
            ("tags", &self.tags),
            ("tag", &self.tag),
            ("labels", &self.labels),
            ("region", &self.region),
            ("cities", &self.cities),
            ("lag_count", &self.lag_count),
            ("boundary", &self.boundary),
            ("solver", &self.solver),
            ("ridge", &self.ridge),
            ("active_set", &self.active_set),
            ("filter_stage", &self.filter_stage),
            ("intercept", &self.intercept),
            ("output_dir", &self.output_dir),
            ("jobs", &self.jobs),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect()
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub tags_path: Option<PathBuf>,
    pub tag: Option<String>,
    pub labels_path: Option<PathBuf>,
    pub region_label: Option<String>,
    pub cities_included: Vec<String>,
    pub lag_count: usize,
    pub boundary: Option<NaiveDate>,
    pub solver: SolverVariant,
    pub ridge: f64,
    pub active_set: ActiveSetRule,
    pub filter_stage: FilterStage,
    pub intercept: bool,
    pub output_dir: PathBuf,
    pub jobs: usize,
}

/// Parses the flat `key = value` config grammar.
pub fn parse_config_text(text: &str) -> crate::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: i as u64 + 1,
                message: format!("expected key = value, found {line:?}"),
            });
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Parse {
                line: i as u64 + 1,
                message: format!("unknown key {key:?}"),
            });
        }
        out.insert(key, v.trim().to_owned());
    }
    Ok(out)
}

impl RunConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> crate::Result<Self> {
        let get = |k: &str| map.get(k).map(String::as_str).filter(|v| !v.is_empty());
        let bad = |k: &str, v: &str| Error::Config(format!("invalid {k} {v:?}"));
        let corpus_path = get("corpus")
            .ok_or_else(|| Error::Config("no corpus given (set corpus or --corpus)".into()))?
            .into();
        let lag_count = match get("lag_count") {
            Some(v) => v.parse().ok().filter(|&n: &usize| n >= 1).ok_or_else(|| bad("lag_count", v))?,
            None => DEFAULT_LAG_COUNT,
        };
        let boundary = get("boundary")
            .map(|v| NaiveDate::parse_from_str(v, "%Y-%m-%d").map_err(|_| bad("boundary", v)))
            .transpose()?;
        let solver = get("solver").map(str::parse).transpose()?.unwrap_or_default();
        let ridge = match get("ridge") {
            Some(v) => v.parse().ok().filter(|r: &f64| *r >= 0.0 && r.is_finite()).ok_or_else(|| bad("ridge", v))?,
            None => 0.0,
        };
        let active_set = match get("active_set") {
            None | Some("target") => ActiveSetRule::Target,
            Some("union") => ActiveSetRule::Union,
            Some(v) => return Err(bad("active_set", v)),
        };
        let filter_stage = match get("filter_stage") {
            None | Some("pre") => FilterStage::Pre,
            Some("post") => FilterStage::Post,
            Some(v) => return Err(bad("filter_stage", v)),
        };
        let intercept = match get("intercept") {
            None | Some("false") => false,
            Some("true") => true,
            Some(v) => return Err(bad("intercept", v)),
        };
        let jobs = match get("jobs") {
            Some(v) => v.parse().ok().filter(|&n: &usize| n >= 1).ok_or_else(|| bad("jobs", v))?,
            None => 1,
        };
        let cities_included = get("cities")
            .map(|v| v.split(',').map(|c| c.trim().to_owned()).filter(|c| !c.is_empty()).collect())
            .unwrap_or_default();
        let config = RunConfig {
            corpus_path,
            tags_path: get("tags").map(PathBuf::from),
            tag: get("tag").map(str::to_owned),
            labels_path: get("labels").map(PathBuf::from),
            region_label: get("region").map(str::to_owned),
            cities_included,
            lag_count,
            boundary,
            solver,
            ridge,
            active_set,
            filter_stage,
            intercept,
            output_dir: get("output_dir").unwrap_or(".").into(),
            jobs,
        };
        if config.tag.is_some() != config.tags_path.is_some() {
            return Err(Error::Config("tag and tags must be given together".into()));
        }
        Ok(config)
    }

    fn lag_config(&self) -> LagConfig {
        LagConfig {
            lag_count: self.lag_count,
            scope: HistoryScope::AllHistory,
            cities_included: self.cities_included.clone(),
            active: self.active_set,
            intercept: self.intercept,
        }
    }
}

fn resolve_config(args: &RunArgs, env: &dyn Fn(&str) -> Option<String>) -> CliResult<RunConfig> {
    let mut map = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    for key in KEYS {
        if let Some(v) = env(&format!("{ENV_PREFIX}{}", key.to_uppercase())) {
            map.insert(key.to_string(), v);
        }
    }
    for (k, v) in args.flags() {
        map.insert(k.to_owned(), v);
    }
    Ok(RunConfig::from_map(&map)?)
}

fn load_corpus(config: &RunConfig) -> CliResult<ChartSeries> {
    let series = parse_chart_csv(&config.corpus_path)
        .map_err(|e| Failure::Input(format!("{}: {e}", config.corpus_path.display())))?;
    Ok(match &config.region_label {
        Some(label) => series.with_region_label(label.clone()),
        None => series,
    })
}

fn load_tags(config: &RunConfig) -> CliResult<Option<BTreeSet<String>>> {
    match (&config.tags_path, &config.tag) {
        (Some(path), Some(tag)) => {
            let pairs = parse_tag_csv(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            Ok(Some(artists_with_tag(&pairs, tag)))
        }
        _ => Ok(None),
    }
}

fn load_labels(config: &RunConfig) -> CliResult<BTreeMap<String, Role>> {
    match &config.labels_path {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            parse_labels(file).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
        None => Ok(BTreeMap::new()),
    }
}

fn resolve_boundary(config: &RunConfig, series: &ChartSeries) -> CliResult<NaiveDate> {
    let weeks = series.weeks();
    let (Some(&first), Some(&last)) = (weeks.first(), weeks.last()) else {
        return Err(Failure::Input("corpus has no weeks".into()));
    };
    match config.boundary {
        Some(b) if b <= first || b > last => Err(Failure::Input(format!(
            "boundary {b} lies outside the corpus weeks {first} .. {last}"
        ))),
        Some(b) => Ok(b),
        None => Ok(default_boundary(weeks).expect("non-empty weeks")),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_validate(config: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let series = load_corpus(config)?;
    let index = build_artist_index(&series);
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(|e| Failure::Input(e.to_string()));
    w(out, format!("region: {}", series.region_label))?;
    w(out, format!("records: {}", series.records().len()))?;
    match (series.weeks().first(), series.weeks().last()) {
        (Some(a), Some(b)) => w(out, format!("weeks: {} ({a} .. {b})", series.weeks().len()))?,
        _ => w(out, "weeks: 0".into())?,
    }
    w(out, format!("cities: {}", series.cities().len()))?;
    w(out, format!("artists: {}", index.size()))?;
    let gaps = series.gaps();
    w(out, format!("gaps: {}", gaps.len()))?;
    for (a, b) in gaps {
        w(out, format!("  gap {a} -> {b} ({} days)", (b - a).num_days()))?;
    }
    for m in to_listeners_matrices(&series, &index)? {
        for city in m.over_depth(CHART_DEPTH) {
            w(out, format!("  warning: {city} has more than {CHART_DEPTH} artists in week {}", m.week_start))?;
        }
    }
    w(out, format!("fingerprint: {}", fingerprint(&series)))?;
    Ok(())
}

/// Evaluates every included city and writes `report.csv` and `report.json`.
fn cmd_evaluate(config: &RunConfig, out: &mut dyn Write) -> CliResult<RegionReport> {
    let series = load_corpus(config)?;
    let tags = load_tags(config)?;
    let labels = load_labels(config)?;
    let boundary = resolve_boundary(config, &series)?;
    let velocities = velocities_from_series(&series, tags.as_ref().map(|t| (t, config.filter_stage)))?;
    let cities: Vec<String> = if config.cities_included.is_empty() {
        velocities.axes.cities.clone()
    } else {
        config.cities_included.clone()
    };
    let settings = EvalSettings {
        lags: config.lag_config(),
        boundary,
        solver: config.solver,
        ridge: config.ridge,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Failure::Input(e.to_string()))?;
    let outcomes: Vec<_> = pool.install(|| {
        cities
            .par_iter()
            .map(|city| (city.clone(), evaluate_city(&velocities, city, &settings)))
            .collect()
    });
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (city, outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => failures.push(CityFailure {
                city,
                reason: e.to_string(),
            }),
        }
    }

    let genre = config.tag.clone().unwrap_or_else(|| "all".into());
    let report = build_report(&results, &labels, &series.region_label, &genre).with_failures(failures);
    let metadata = ReportMetadata {
        region: series.region_label.clone(),
        genre,
        boundary,
        lag_count: config.lag_count,
        solver: config.solver,
        ridge: config.ridge,
        corpus_fingerprint: fingerprint(&series),
    };
    create_dir(&config.output_dir)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(&config.output_dir.join("report.csv"), &csv)?;
    let mut json = report.to_json(&metadata)?;
    json.push('\n');
    write_file(&config.output_dir.join("report.json"), json.as_bytes())?;
    write!(out, "{}", report.render_table()).map_err(|e| Failure::Input(e.to_string()))?;
    for f in &report.failures {
        writeln!(out, "failed: {}: {}", f.city, f.reason).map_err(|e| Failure::Input(e.to_string()))?;
    }

    if report.rows.is_empty() {
        return Err(Failure::Analysis("every city failed".into()));
    }
    Ok(report)
}

fn cmd_synth(spec_path: &Path, out_path: &Path, out: &mut dyn Write) -> CliResult<()> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| Failure::Input(format!("cannot read spec {}: {e}", spec_path.display())))?;
    let spec: PlantSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", spec_path.display())))?;
    let series = generate_planted(&spec)?;
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut csv = Vec::new();
    write_chart_csv(&series, &mut csv)?;
    write_file(out_path, &csv)?;
    let sidecar = SynthSidecar {
        fingerprint: fingerprint(&series),
        records: series.records().len(),
        spec: spec.clone(),
    };
    let mut json = serde_json::to_string_pretty(&sidecar).map_err(|e| Failure::Input(e.to_string()))?;
    json.push('\n');
    write_file(&out_path.with_extension("json"), json.as_bytes())?;
    let labeled: Vec<_> = spec.cities.iter().filter(|c| c.role != Role::Unlabeled).collect();
    if !labeled.is_empty() {
        let mut labels = String::from("city,role\n");
        for c in labeled {
            labels.push_str(&format!("{},{}\n", c.name, c.role));
        }
        let stem = out_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        write_file(&out_path.with_file_name(format!("{stem}_labels.csv")), labels.as_bytes())?;
    }
    writeln!(out, "wrote {} records to {} (fingerprint {})", series.records().len(), out_path.display(), sidecar.fingerprint)
        .map_err(|e| Failure::Input(e.to_string()))?;
    Ok(())
}

fn cmd_dump_design(config: &RunConfig, city: &str, scope: &str, out: &mut dyn Write) -> CliResult<()> {
    let scope = match scope {
        "own" => HistoryScope::OwnHistory,
        "all" => HistoryScope::AllHistory,
        other => return Err(Failure::Input(format!("scope must be own or all, got {other:?}"))),
    };
    let series = load_corpus(config)?;
    let tags = load_tags(config)?;
    let boundary = resolve_boundary(config, &series)?;
    let velocities = velocities_from_series(&series, tags.as_ref().map(|t| (t, config.filter_stage)))?;
    let design = build_design(&velocities, city, &config.lag_config().with_scope(scope))?;
    let split = temporal_split(&design, boundary)?;
    let coefficients = fit(split.train.x.view(), split.train.y.view(), config.solver, config.ridge)?;

    let tag = match scope {
        HistoryScope::OwnHistory => "own",
        HistoryScope::AllHistory => "all",
    };
    let safe: String = city.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
    create_dir(&config.output_dir)?;
    let mut buf = Vec::new();
    design.write_csv(&mut buf)?;
    let design_path = config.output_dir.join(format!("design_{safe}_{tag}.csv"));
    write_file(&design_path, &buf)?;
    let mut buf = Vec::new();
    write_coefficients_csv(&design.col_meta, &coefficients, &mut buf)?;
    let coef_path = config.output_dir.join(format!("coefficients_{safe}_{tag}.csv"));
    write_file(&coef_path, &buf)?;
    writeln!(
        out,
        "{} rows x {} columns -> {}; coefficients -> {}",
        design.rows(),
        design.col_meta.len(),
        design_path.display(),
        coef_path.display()
    )
    .map_err(|e| Failure::Input(e.to_string()))?;
    Ok(())
}

/// Runs the CLI with explicit streams and environment lookup; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, env: &dyn Fn(&str) -> Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Validate(args) => resolve_config(args, env).and_then(|c| cmd_validate(&c, out)),
        Command::Evaluate(args) => resolve_config(args, env).and_then(|c| cmd_evaluate(&c, out).map(|_| ())),
        Command::Synth { spec, out: path } => cmd_synth(spec, path, out),
        Command::DumpDesign { run, city, scope } => {
            resolve_config(run, env).and_then(|c| cmd_dump_design(&c, city, scope, out))
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Analysis(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ANALYSIS
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock(), &|k| std::env::var(k).ok())
}
