mod common;

use std::collections::BTreeSet;

use common::{pure_noise_spec, settings_for};
use leadlag::design::ColumnMeta;
use leadlag::prelude::*;
use leadlag::synth::{Influence, PlantCity};

fn copy_spec(lag: usize) -> PlantSpec {
    let mut spec = PlantSpec::independent(&["Leader", "Follower"], 60, 30, 11);
    spec.cities[0] = PlantCity::new("Leader", Role::Leader);
    spec.cities[1] = PlantCity::new("Follower", Role::Follower);
    spec.influence = vec![Influence {
        leader: "Leader".into(),
        follower: "Follower".into(),
        lag,
        strength: 1.0,
    }];
    spec.noise_sigma = 0.0;
    spec.reversion = 1.0;
    spec
}

#[test]
fn noiseless_full_strength_edge_copies_the_leader() {
    let lag = 3;
    let series = generate_planted(&copy_spec(lag)).unwrap();
    let v = velocities_from_series(&series, None).unwrap();
    let (l, f) = (v.axes.city_position("Leader").unwrap(), v.axes.city_position("Follower").unwrap());
    for t in lag..v.matrices.len() {
        let follower = v.matrices[t].rows[f].as_ref().unwrap();
        let leader = v.matrices[t - lag].rows[l].as_ref().unwrap();
        assert_eq!(follower, leader, "week {t}");
    }
    let e = evaluate_city_detailed(&v, "Follower", &settings_for(&series, 4, SolverVariant::Ols)).unwrap();
    assert!(e.all_test_rmse < 1e-9, "{}", e.all_test_rmse);
    assert!(e.result.all_history_pct < 1e-6);
    assert!((e.all_coefficient("Leader", lag).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn planted_fit_isolates_the_lead_column() {
    let series = generate_planted(&PlantSpec::reference()).unwrap();
    let v = velocities_from_series(&series, None).unwrap();
    for solver in [SolverVariant::Ols, SolverVariant::Nnls] {
        let e = evaluate_city_detailed(&v, "Toronto", &settings_for(&series, 8, solver)).unwrap();
        let lead = ColumnMeta::Lagged { city: "Montreal".into(), lag: 2 };
        for (meta, &c) in e.all_columns.iter().zip(&e.all.values) {
            if *meta == lead {
                assert!((c - 0.8).abs() <= 0.05, "{solver} lead {c}");
            } else {
                assert!(c.abs() <= 0.05, "{solver} {meta} = {c}");
            }
        }
    }
}

#[test]
fn null_corpus_shows_no_gain() {
    let series = generate_planted(&PlantSpec::null_reference()).unwrap();
    let v = velocities_from_series(&series, None).unwrap();
    let settings = settings_for(&series, 8, SolverVariant::Ols);
    for city in series.cities() {
        let r = evaluate_city(&v, city, &settings).unwrap();
        assert!(r.difference.abs() <= 2.0, "{r}");
    }
}

#[test]
fn pure_noise_scores_near_baseline() {
    let series = generate_planted(&pure_noise_spec()).unwrap();
    let v = velocities_from_series(&series, None).unwrap();
    let r = evaluate_city(&v, "Austin", &settings_for(&series, 8, SolverVariant::Nnls)).unwrap();
    assert!((r.all_history_pct - 100.0).abs() <= 10.0 && (r.self_history_pct - 100.0).abs() <= 10.0);
    assert!(r.sample_counts.1 >= 2000);
}

#[test]
fn charts_are_truncated_to_chart_size() {
    let mut spec = PlantSpec::independent(&["Austin", "Boston"], 30, 600, 4);
    spec.chart_size = 500;
    let series = generate_planted(&spec).unwrap();
    for week in series.weeks() {
        for city in series.cities() {
            let n = series.records().iter().filter(|r| r.week_start == *week && &r.city == city).count();
            assert_eq!(n, 500);
        }
    }
    let small = generate_planted(&PlantSpec::independent(&["Austin"], 30, 40, 4)).unwrap();
    assert_eq!(small.records().len(), 30 * 40);
}

#[test]
fn dropped_week_shrinks_the_sample() {
    let series = generate_planted(&PlantSpec::reference()).unwrap();
    let gap_week = series.weeks()[70];
    let gapped = ChartSeries::from_records(
        series.records().iter().filter(|r| r.week_start != gap_week).cloned(),
        "gapped",
    )
    .unwrap();
    assert_eq!(gapped.gaps().len(), 1);
    let settings = settings_for(&series, 8, SolverVariant::Ols);
    let full = evaluate_city(&velocities_from_series(&series, None).unwrap(), "Toronto", &settings).unwrap();
    let cut = evaluate_city(&velocities_from_series(&gapped, None).unwrap(), "Toronto", &settings).unwrap();
    assert!(cut.sample_counts.0 < full.sample_counts.0);
    assert_eq!(cut.sample_counts.1, full.sample_counts.1);
    assert!(cut.difference > 5.0);
}

#[test]
fn filter_stages_differ_only_in_normalization() {
    let series = generate_planted(&PlantSpec::reference()).unwrap();
    let keep: BTreeSet<String> = (0..200).step_by(2).map(|a| format!("artist{a:04}")).collect();
    let pre = velocities_from_series(&series, Some((&keep, FilterStage::Pre))).unwrap();
    let post = velocities_from_series(&series, Some((&keep, FilterStage::Post))).unwrap();
    assert_eq!(pre.axes.artists.len(), keep.len());
    assert_eq!(post.axes.artists, pre.axes.artists);
    let settings = settings_for(&series, 8, SolverVariant::Ols);
    for v in [&pre, &post] {
        let r = evaluate_city(v, "Toronto", &settings).unwrap();
        assert!(r.difference > 5.0, "{r}");
    }
}
