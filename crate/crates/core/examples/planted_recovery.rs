//! Plants a two-week lead from Montreal to Toronto in a synthetic corpus and
//! checks that the all-history model finds it.
//!
//! cargo run --release --example planted_recovery

use leadlag::design::ColumnMeta;
use leadlag::prelude::*;

pub fn run_example() -> leadlag::Result<()> {
    for (name, spec) in [("planted", PlantSpec::reference()), ("null", PlantSpec::null_reference())] {
        let series = generate_planted(&spec)?;
        let velocities = velocities_from_series(&series, None)?;
        let settings = EvalSettings {
            lags: LagConfig::all_history(8),
            boundary: default_boundary(series.weeks()).expect("corpus has weeks"),
            solver: SolverVariant::Ols,
            ridge: 0.0,
        };
        let eval = evaluate_city_detailed(&velocities, "Toronto", &settings)?;
        let lead = eval.all_coefficient("Montreal", 2).expect("Montreal is included");
        println!("{name}: {}", eval.result);
        println!(
            "  Montreal@lag2 = {lead:.3}, largest |coefficient| at {}, samples train/test = {:?}",
            eval.dominant_all_column(),
            eval.result.sample_counts
        );
        if name == "planted" {
            assert_eq!(
                eval.dominant_all_column(),
                &ColumnMeta::Lagged { city: "Montreal".into(), lag: 2 }
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> leadlag::Result<()> {
    run_example()
}
