//! Scores every city of a synthetic region and prints the report table and
//! its CSV form.
//!
//! cargo run --release --example region_report

use std::collections::BTreeMap;

use leadlag::prelude::*;

pub fn run_example() -> leadlag::Result<()> {
    let spec = PlantSpec::reference();
    let series = generate_planted(&spec)?;
    let velocities = velocities_from_series(&series, None)?;
    let settings = EvalSettings {
        lags: LagConfig::all_history(8),
        boundary: default_boundary(series.weeks()).expect("corpus has weeks"),
        solver: SolverVariant::Nnls,
        ridge: 0.0,
    };
    let results = series
        .cities()
        .iter()
        .map(|city| evaluate_city(&velocities, city, &settings))
        .collect::<leadlag::Result<Vec<_>>>()?;
    let labels: BTreeMap<String, Role> = spec.cities.iter().map(|c| (c.name.clone(), c.role)).collect();

    let report = build_report(&results, &labels, &series.region_label, "all");
    print!("{}", report.render_table());
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    assert_eq!(report.rows[0].city, "Toronto");
    Ok(())
}

#[allow(dead_code)]
fn main() -> leadlag::Result<()> {
    run_example()
}
