//! Holdout scoring against the zero-velocity baseline, and region reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDate;
use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::design::{build_design, temporal_split, ColumnMeta, HistoryScope, LagConfig};
use crate::error::{Error, Result};
use crate::preprocess::VelocitySeries;
use crate::solver::{fit, predict, Coefficients, SolverVariant};

pub fn rmse(actual: ArrayView1<f64>, predicted: ArrayView1<f64>) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::Dimension(format!(
            "actual has {} values, predicted has {}",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Dimension("rmse of an empty vector".into()));
    }
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok((sse / actual.len() as f64).sqrt())
}

/// RMSE of the model that predicts no change.
pub fn baseline_rmse(actual: ArrayView1<f64>) -> Result<f64> {
    if actual.is_empty() {
        return Err(Error::Dimension("baseline rmse of an empty vector".into()));
    }
    Ok((actual.iter().map(|a| a * a).sum::<f64>() / actual.len() as f64).sqrt())
}

pub fn percent_of_baseline(model_rmse: f64, baseline: f64) -> Result<f64> {
    if baseline <= 0.0 {
        return Err(Error::UndefinedBaseline);
    }
    Ok(100.0 * model_rmse / baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Leader,
    Follower,
    Unlabeled,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Leader => "leader",
            Role::Follower => "follower",
            Role::Unlabeled => "",
        })
    }
}

/// Reads a `city,role` label file; roles are `leader` or `follower`.
pub fn parse_labels<R: Read>(reader: R) -> Result<BTreeMap<String, Role>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    if headers.iter().collect::<Vec<_>>() != ["city", "role"] {
        return Err(Error::Parse {
            line: 1,
            message: "expected header city,role".into(),
        });
    }
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let role = match &row[1] {
            "leader" => Role::Leader,
            "follower" => Role::Follower,
            other => {
                return Err(Error::Value {
                    line,
                    message: format!("unknown role {other:?}"),
                })
            }
        };
        out.insert(row[0].to_owned(), role);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityResult {
    pub city: String,
    pub self_history_pct: f64,
    pub all_history_pct: f64,
    /// `self_history_pct - all_history_pct`.
    pub difference: f64,
    /// (train rows, test rows).
    pub sample_counts: (usize, usize),
    /// OLS rank deficiency for (own history, all history).
    pub rank_flags: (bool, bool),
}

impl CityResult {
    pub fn new(city: impl Into<String>, self_history_pct: f64, all_history_pct: f64) -> Self {
        CityResult {
            city: city.into(),
            self_history_pct,
            all_history_pct,
            difference: self_history_pct - all_history_pct,
            sample_counts: (0, 0),
            rank_flags: (false, false),
        }
    }

    /// A row copied from a published table, where the difference column was
    /// computed before the percentages were rounded.
    pub fn transcribed(city: impl Into<String>, self_pct: f64, all_pct: f64, difference: f64) -> Self {
        CityResult {
            difference,
            ..Self::new(city, self_pct, all_pct)
        }
    }
}

impl fmt::Display for CityResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, {:.1}, {:.1}, {:.1}",
            self.city, self.self_history_pct, self.all_history_pct, self.difference
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityFailure {
    pub city: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct EvalSettings {
    /// Lag window, included cities and sample rule; the scope field is ignored.
    pub lags: LagConfig,
    pub boundary: NaiveDate,
    pub solver: SolverVariant,
    pub ridge: f64,
}

/// A scored city plus the fitted models behind it.
#[derive(Debug, Clone)]
pub struct CityEvaluation {
    pub result: CityResult,
    pub own: Coefficients,
    pub all: Coefficients,
    pub own_columns: Vec<ColumnMeta>,
    pub all_columns: Vec<ColumnMeta>,
    pub baseline_train_rmse: f64,
    pub baseline_test_rmse: f64,
    pub own_test_rmse: f64,
    pub all_test_rmse: f64,
}

impl CityEvaluation {
    pub fn all_coefficient(&self, city: &str, lag: usize) -> Option<f64> {
        let meta = ColumnMeta::Lagged { city: city.to_owned(), lag };
        let pos = self.all_columns.iter().position(|c| *c == meta)?;
        Some(self.all.values[pos])
    }

    /// Column of the largest-magnitude all-history coefficient.
    pub fn dominant_all_column(&self) -> &ColumnMeta {
        let pos = self
            .all
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .expect("at least one column");
        &self.all_columns[pos]
    }
}

pub fn evaluate_city(velocities: &VelocitySeries, target_city: &str, settings: &EvalSettings) -> Result<CityResult> {
    evaluate_city_detailed(velocities, target_city, settings).map(|e| e.result)
}

pub fn evaluate_city_detailed(
    velocities: &VelocitySeries,
    target_city: &str,
    settings: &EvalSettings,
) -> Result<CityEvaluation> {
    let own_design = build_design(velocities, target_city, &settings.lags.with_scope(HistoryScope::OwnHistory))?;
    let all_design = build_design(velocities, target_city, &settings.lags.with_scope(HistoryScope::AllHistory))?;
    debug_assert_eq!(own_design.row_meta, all_design.row_meta);
    let own_split = temporal_split(&own_design, settings.boundary)?;
    let all_split = temporal_split(&all_design, settings.boundary)?;

    let own = fit(own_split.train.x.view(), own_split.train.y.view(), settings.solver, settings.ridge)?;
    let all = fit(all_split.train.x.view(), all_split.train.y.view(), settings.solver, settings.ridge)?;

    let y_test = own_split.test.y.view();
    let baseline_test_rmse = baseline_rmse(y_test)?;
    let own_test_rmse = rmse(y_test, predict(own_split.test.x.view(), &own)?.view())?;
    let all_test_rmse = rmse(y_test, predict(all_split.test.x.view(), &all)?.view())?;
    let self_pct = percent_of_baseline(own_test_rmse, baseline_test_rmse)?;
    let all_pct = percent_of_baseline(all_test_rmse, baseline_test_rmse)?;

    let mut result = CityResult::new(target_city, self_pct, all_pct);
    result.sample_counts = (own_split.train.rows(), own_split.test.rows());
    result.rank_flags = (own.rank_deficient, all.rank_deficient);
    Ok(CityEvaluation {
        result,
        baseline_train_rmse: baseline_rmse(own_split.train.y.view())?,
        own,
        all,
        own_columns: own_design.col_meta,
        all_columns: all_design.col_meta,
        baseline_test_rmse,
        own_test_rmse,
        all_test_rmse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub self_pct: f64,
    pub all_pct: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub region_label: String,
    pub genre_label: String,
    /// Sorted ascending by all-history percentage, then city name.
    pub rows: Vec<CityResult>,
    pub failures: Vec<CityFailure>,
    pub avg_all: Option<Averages>,
    pub avg_leaders: Option<f64>,
    pub avg_followers: Option<f64>,
    pub labels: BTreeMap<String, Role>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn build_report(
    results: &[CityResult],
    labels: &BTreeMap<String, Role>,
    region_label: &str,
    genre_label: &str,
) -> RegionReport {
    let mut rows = results.to_vec();
    rows.sort_by(|a, b| {
        a.all_history_pct
            .total_cmp(&b.all_history_pct)
            .then_with(|| a.city.cmp(&b.city))
    });
    let avg_all = (!rows.is_empty()).then(|| Averages {
        self_pct: mean(rows.iter().map(|r| r.self_history_pct)).unwrap(),
        all_pct: mean(rows.iter().map(|r| r.all_history_pct)).unwrap(),
        difference: mean(rows.iter().map(|r| r.difference)).unwrap(),
    });
    let group = |role: Role| {
        mean(
            rows.iter()
                .filter(|r| labels.get(&r.city) == Some(&role))
                .map(|r| r.difference),
        )
    };
    RegionReport {
        region_label: region_label.to_owned(),
        genre_label: genre_label.to_owned(),
        avg_leaders: group(Role::Leader),
        avg_followers: group(Role::Follower),
        avg_all,
        rows,
        failures: Vec::new(),
        labels: labels.clone(),
    }
}

/// Run parameters recorded alongside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub region: String,
    pub genre: String,
    pub boundary: NaiveDate,
    pub lag_count: usize,
    pub solver: SolverVariant,
    pub ridge: f64,
    pub corpus_fingerprint: String,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    city: &'a str,
    self_pct: Option<f64>,
    all_pct: Option<f64>,
    difference: Option<f64>,
    role: Role,
    status: &'a str,
    train_rows: Option<usize>,
    test_rows: Option<usize>,
    rank_deficient_own: Option<bool>,
    rank_deficient_all: Option<bool>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    metadata: &'a ReportMetadata,
    rows: Vec<JsonRow<'a>>,
    avg_all: Option<Averages>,
    avg_leaders: Option<f64>,
    avg_followers: Option<f64>,
}

impl RegionReport {
    pub fn with_failures(mut self, mut failures: Vec<CityFailure>) -> Self {
        failures.sort_by(|a, b| a.city.cmp(&b.city));
        self.failures = failures;
        self
    }

    pub fn role(&self, city: &str) -> Role {
        self.labels.get(city).copied().unwrap_or(Role::Unlabeled)
    }

    /// Table rows as `city, self, all, difference` with one decimal.
    pub fn render_table(&self) -> String {
        let mut out = String::from("City, Self history, All history, Difference\n");
        for r in &self.rows {
            out.push_str(&format!("{r}\n"));
        }
        if let Some(a) = &self.avg_all {
            out.push_str(&format!(
                "Avg. all, {:.1}, {:.1}, {:.1}\n",
                a.self_pct, a.all_pct, a.difference
            ));
        }
        if let Some(v) = self.avg_leaders {
            out.push_str(&format!("Avg. leaders, , , {v:.1}\n"));
        }
        if let Some(v) = self.avg_followers {
            out.push_str(&format!("Avg. followers, , , {v:.1}\n"));
        }
        out
    }

    /// CSV with columns `city,self_pct,all_pct,difference,role,status`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Dimension(e.to_string());
        let one = |v: f64| format!("{v:.1}");
        wtr.write_record(["city", "self_pct", "all_pct", "difference", "role", "status"])
            .map_err(err)?;
        for r in &self.rows {
            wtr.write_record([
                r.city.clone(),
                one(r.self_history_pct),
                one(r.all_history_pct),
                one(r.difference),
                self.role(&r.city).to_string(),
                "ok".into(),
            ])
            .map_err(err)?;
        }
        for f in &self.failures {
            wtr.write_record([
                f.city.clone(),
                String::new(),
                String::new(),
                String::new(),
                self.role(&f.city).to_string(),
                format!("failed: {}", f.reason),
            ])
            .map_err(err)?;
        }
        if let Some(a) = &self.avg_all {
            wtr.write_record(["Avg. all".into(), one(a.self_pct), one(a.all_pct), one(a.difference), String::new(), "average".into()])
                .map_err(err)?;
        }
        if let Some(v) = self.avg_leaders {
            wtr.write_record(["Avg. leaders", "", "", &one(v), "leader", "average"]).map_err(err)?;
        }
        if let Some(v) = self.avg_followers {
            wtr.write_record(["Avg. followers", "", "", &one(v), "follower", "average"]).map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("<report writer>", e))?;
        Ok(())
    }

    /// Full-precision JSON document with run metadata.
    pub fn to_json(&self, metadata: &ReportMetadata) -> Result<String> {
        let mut rows: Vec<JsonRow> = self
            .rows
            .iter()
            .map(|r| JsonRow {
                city: &r.city,
                self_pct: Some(r.self_history_pct),
                all_pct: Some(r.all_history_pct),
                difference: Some(r.difference),
                role: self.role(&r.city),
                status: "ok",
                train_rows: Some(r.sample_counts.0),
                test_rows: Some(r.sample_counts.1),
                rank_deficient_own: Some(r.rank_flags.0),
                rank_deficient_all: Some(r.rank_flags.1),
            })
            .collect();
        rows.extend(self.failures.iter().map(|f| JsonRow {
            city: &f.city,
            self_pct: None,
            all_pct: None,
            difference: None,
            role: self.role(&f.city),
            status: &f.reason,
            train_rows: None,
            test_rows: None,
            rank_deficient_own: None,
            rank_deficient_all: None,
        }));
        let doc = JsonReport {
            metadata,
            rows,
            avg_all: self.avg_all,
            avg_leaders: self.avg_leaders,
            avg_followers: self.avg_followers,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))
    }
}
