//! Lagged design matrices for one target city.
//!
//! A sample row is an `(artist, week)` pair. Its target is the target city's
//! velocity for that artist at that week; its predictors are velocities of
//! the same artist `1..=lag_count` weeks earlier, one column per
//! `(city, lag)` pair.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use chrono::{Days, NaiveDate};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{SparseRow, VelocitySeries};

pub const DEFAULT_LAG_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryScope {
    OwnHistory,
    AllHistory,
}

/// Which artists become samples for a target week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActiveSetRule {
    /// Artist charted in the target city at week t or t-1.
    #[default]
    Target,
    /// Artist charted in any included city anywhere in the lag window.
    Union,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagConfig {
    pub lag_count: usize,
    pub scope: HistoryScope,
    /// Cities whose histories feed an all-history design. Empty means every
    /// corpus city. Also defines the union active set for both scopes.
    pub cities_included: Vec<String>,
    pub active: ActiveSetRule,
    pub intercept: bool,
}

impl LagConfig {
    pub fn own_history(lag_count: usize) -> Self {
        LagConfig {
            lag_count,
            scope: HistoryScope::OwnHistory,
            cities_included: Vec::new(),
            active: ActiveSetRule::Target,
            intercept: false,
        }
    }

    pub fn all_history(lag_count: usize) -> Self {
        LagConfig {
            scope: HistoryScope::AllHistory,
            ..Self::own_history(lag_count)
        }
    }

    pub fn with_scope(&self, scope: HistoryScope) -> Self {
        LagConfig {
            scope,
            ..self.clone()
        }
    }
}

impl Default for LagConfig {
    fn default() -> Self {
        Self::all_history(DEFAULT_LAG_COUNT)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnMeta {
    Lagged { city: String, lag: usize },
    Intercept,
}

impl fmt::Display for ColumnMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnMeta::Lagged { city, lag } => write!(f, "{city}@lag{lag}"),
            ColumnMeta::Intercept => f.write_str("intercept"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowMeta {
    pub artist: String,
    pub week: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDesign {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub row_meta: Vec<RowMeta>,
    pub col_meta: Vec<ColumnMeta>,
    pub target_city: String,
}

impl LabeledDesign {
    pub fn rows(&self) -> usize {
        self.y.len()
    }

    pub fn column_position(&self, meta: &ColumnMeta) -> Option<usize> {
        self.col_meta.iter().position(|c| c == meta)
    }

    pub fn select_rows(&self, rows: &[usize]) -> LabeledDesign {
        LabeledDesign {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            row_meta: rows.iter().map(|&r| self.row_meta[r].clone()).collect(),
            col_meta: self.col_meta.clone(),
            target_city: self.target_city.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> LabeledDesign {
        LabeledDesign {
            x: self.x.select(Axis(1), cols),
            y: self.y.clone(),
            row_meta: self.row_meta.clone(),
            col_meta: cols.iter().map(|&c| self.col_meta[c].clone()).collect(),
            target_city: self.target_city.clone(),
        }
    }

    /// Debug dump as `artist,week,y,<city>@lag<k>...`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Dimension(e.to_string());
        let mut header = vec!["artist".to_string(), "week".into(), "y".into()];
        header.extend(self.col_meta.iter().map(ToString::to_string));
        wtr.write_record(&header).map_err(err)?;
        for (i, meta) in self.row_meta.iter().enumerate() {
            let mut rec = vec![meta.artist.clone(), meta.week.to_string(), self.y[i].to_string()];
            rec.extend(self.x.row(i).iter().map(f64::to_string));
            wtr.write_record(&rec).map_err(err)?;
        }
        wtr.flush().map_err(|e| Error::io("<design writer>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDesign {
    pub train: LabeledDesign,
    pub test: LabeledDesign,
    pub boundary: NaiveDate,
}

fn weeks_before(week: NaiveDate, lag: usize) -> Option<NaiveDate> {
    week.checked_sub_days(Days::new(7 * lag as u64))
}

pub fn build_design(
    velocities: &VelocitySeries,
    target_city: &str,
    config: &LagConfig,
) -> Result<LabeledDesign> {
    let axes = &velocities.axes;
    let target = axes
        .city_position(target_city)
        .ok_or_else(|| Error::UnknownCity(target_city.to_owned()))?;
    if config.lag_count == 0 {
        return Err(Error::Config("lag_count must be at least 1".into()));
    }
    if config.lag_count >= velocities.matrices.len() {
        return Err(Error::InsufficientData(format!(
            "lag_count {} needs more than {} velocity weeks",
            config.lag_count,
            velocities.matrices.len()
        )));
    }

    let included: Vec<usize> = if config.cities_included.is_empty() {
        (0..axes.cities.len()).collect()
    } else {
        config
            .cities_included
            .iter()
            .map(|c| axes.city_position(c).ok_or_else(|| Error::UnknownCity(c.clone())))
            .collect::<Result<_>>()?
    };
    let column_cities = match config.scope {
        HistoryScope::OwnHistory => vec![target],
        HistoryScope::AllHistory => {
            if !included.contains(&target) {
                return Err(Error::Config(format!(
                    "target city {target_city:?} is not among the included cities"
                )));
            }
            included.clone()
        }
    };

    let mut col_meta: Vec<ColumnMeta> = column_cities
        .iter()
        .flat_map(|&c| {
            (1..=config.lag_count).map(move |lag| ColumnMeta::Lagged {
                city: axes.cities[c].clone(),
                lag,
            })
        })
        .collect();
    if config.intercept {
        col_meta.push(ColumnMeta::Intercept);
    }
    let ncols = col_meta.len();

    let mut x: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    let mut row_meta = Vec::new();
    let empty = SparseRow::default();

    for (t, matrix) in velocities.matrices.iter().enumerate() {
        let Some(target_row) = matrix.rows[target].as_ref() else {
            continue;
        };
        // Positions of weeks t-1 .. t-lag_count; all must have a defined target row.
        let lagged: Option<Vec<usize>> = (1..=config.lag_count)
            .map(|lag| {
                let w = weeks_before(matrix.week_start, lag)?;
                let pos = velocities.week_position(w)?;
                velocities.is_defined(pos, target).then_some(pos)
            })
            .collect();
        let Some(lagged) = lagged else {
            continue;
        };

        let active: Vec<usize> = match config.active {
            ActiveSetRule::Target => target_row.columns().collect(),
            ActiveSetRule::Union => {
                let mut set = BTreeSet::new();
                for &pos in std::iter::once(&t).chain(&lagged) {
                    for &c in &included {
                        if let Some(row) = &velocities.matrices[pos].rows[c] {
                            set.extend(row.columns());
                        }
                    }
                }
                set.into_iter().collect()
            }
        };

        for artist in active {
            y.push(target_row.get(artist));
            for &c in &column_cities {
                for &pos in &lagged {
                    let row = velocities.matrices[pos].rows[c].as_ref().unwrap_or(&empty);
                    x.push(row.get(artist));
                }
            }
            if config.intercept {
                x.push(1.0);
            }
            row_meta.push(RowMeta {
                artist: axes.artists[artist].clone(),
                week: matrix.week_start,
            });
        }
    }

    if y.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no eligible samples for {target_city:?} with {} lags",
            config.lag_count
        )));
    }
    let x = Array2::from_shape_vec((y.len(), ncols), x).expect("row-major fill matches shape");
    Ok(LabeledDesign {
        x,
        y: Array1::from(y),
        row_meta,
        col_meta,
        target_city: target_city.to_owned(),
    })
}

pub fn temporal_split(design: &LabeledDesign, boundary: NaiveDate) -> Result<SplitDesign> {
    let (train, test): (Vec<usize>, Vec<usize>) =
        (0..design.rows()).partition(|&i| design.row_meta[i].week < boundary);
    if train.is_empty() || test.is_empty() {
        return Err(Error::DegenerateSplit {
            boundary,
            train: train.len(),
            test: test.len(),
        });
    }
    Ok(SplitDesign {
        train: design.select_rows(&train),
        test: design.select_rows(&test),
        boundary,
    })
}

/// Two thirds of the way through the corpus week span, on the weekly grid.
pub fn default_boundary(weeks: &[NaiveDate]) -> Option<NaiveDate> {
    let (first, last) = (weeks.first()?, weeks.last()?);
    let span_weeks = (*last - *first).num_days() / 7;
    first.checked_add_days(Days::new((7 * (span_weeks * 2 / 3)) as u64))
}
