//! Builds own-history and all-history lagged designs for one city and splits
//! them at the default temporal boundary.
//!
//! cargo run --release --example design_matrix

use leadlag::prelude::*;

pub fn run_example() -> leadlag::Result<()> {
    let series = generate_planted(&PlantSpec::reference())?;
    let velocities = velocities_from_series(&series, None)?;
    let boundary = default_boundary(series.weeks()).expect("corpus has weeks");

    for config in [LagConfig::own_history(8), LagConfig::all_history(8)] {
        let design = build_design(&velocities, "Toronto", &config)?;
        let split = temporal_split(&design, boundary)?;
        let labels: Vec<String> = design.col_meta.iter().take(3).map(ToString::to_string).collect();
        println!(
            "{:?}: {} rows x {} columns (first {labels:?}); train {} / test {} at {boundary}",
            config.scope,
            design.rows(),
            design.col_meta.len(),
            split.train.rows(),
            split.test.rows()
        );
    }

    let mut union = LagConfig::all_history(8);
    union.active = ActiveSetRule::Union;
    let wider = build_design(&velocities, "Toronto", &union)?;
    println!("union active set: {} rows", wider.rows());
    Ok(())
}

#[allow(dead_code)]
fn main() -> leadlag::Result<()> {
    run_example()
}
