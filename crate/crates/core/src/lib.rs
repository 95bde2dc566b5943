//! Lead-lag analysis of weekly city music charts.
//!
//! The pipeline embeds each city-week chart as a unit-norm point in artist
//! space, differences consecutive weeks into velocities, and asks whether a
//! linear model over every city's lagged velocities predicts a target city's
//! next velocity better than a model over the target's own history alone.
//! Both are scored on a temporal holdout as a percentage of the RMSE of the
//! no-change baseline.
//!
//! ```no_run
//! use leadlag::prelude::*;
//!
//! let series = parse_chart_csv("charts.csv")?;
//! let velocities = velocities_from_series(&series, None)?;
//! let settings = EvalSettings {
//!     lags: LagConfig::all_history(8),
//!     boundary: default_boundary(series.weeks()).unwrap(),
//!     solver: SolverVariant::Ols,
//!     ridge: 0.0,
//! };
//! let row = evaluate_city(&velocities, "Toronto", &settings)?;
//! println!("{row}");
//! # Ok::<(), leadlag::Error>(())
//! ```

pub mod chart_store;
pub mod cli;
pub mod design;
pub mod error;
pub mod evaluate;
mod linalg;
pub mod preprocess;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::chart_store::{
        artists_with_tag, build_artist_index, filter_by_tag, parse_chart_csv, parse_chart_reader,
        parse_tag_csv, write_chart_csv, ArtistIndex, ChartRecord, ChartSeries,
    };
    pub use crate::design::{
        build_design, default_boundary, temporal_split, ActiveSetRule, ColumnMeta, HistoryScope,
        LabeledDesign, LagConfig, SplitDesign,
    };
    pub use crate::error::{Error, Result};
    pub use crate::evaluate::{
        baseline_rmse, build_report, evaluate_city, evaluate_city_detailed, parse_labels,
        percent_of_baseline, rmse, CityResult, EvalSettings, RegionReport, Role,
    };
    pub use crate::preprocess::{
        compute_velocities, normalize_rows, to_listeners_matrices, velocities_from_series,
        FilterStage, NormalizedMatrix, VelocitySeries,
    };
    pub use crate::solver::{fit, fit_nnls, fit_ols, predict, Coefficients, SolverVariant};
    pub use crate::synth::{fingerprint, generate_planted, PlantSpec};
}
