#![allow(dead_code)]

use leadlag::prelude::*;
use leadlag::synth::XorShift64Star;
use ndarray::{Array1, Array2};

pub fn settings_for(series: &ChartSeries, lag_count: usize, solver: SolverVariant) -> EvalSettings {
    EvalSettings {
        lags: LagConfig::all_history(lag_count),
        boundary: default_boundary(series.weeks()).expect("corpus has weeks"),
        solver,
        ridge: 0.0,
    }
}

/// Pure noise: four independent cities, three years, 200 artists.
pub fn pure_noise_spec() -> PlantSpec {
    let mut spec = PlantSpec::independent(&["Austin", "Boston", "Denver", "Seattle"], 157, 200, 77);
    spec.popularity_exponent = 0.25;
    spec.region_label = "noise".into();
    spec
}

/// Dense Gaussian fixture with `rows x cols` entries and a target mixing
/// signal from `beta` with unit-scale noise.
pub fn gaussian_fixture(rng: &mut XorShift64Star, rows: usize, cols: usize) -> (Array2<f64>, Array1<f64>) {
    let x = Array2::from_shape_fn((rows, cols), |_| rng.next_normal());
    let beta = Array1::from_shape_fn(cols, |_| rng.next_normal());
    let noise = Array1::from_shape_fn(rows, |_| 0.3 * rng.next_normal());
    let y = x.dot(&beta) + noise;
    (x, y)
}

pub fn inf_norm_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
