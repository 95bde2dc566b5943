//! Embeds each city-week chart on the unit sphere and differences
//! consecutive weeks into velocities.
//!
//! cargo run --example velocities

use leadlag::prelude::*;

pub fn run_example() -> leadlag::Result<()> {
    let spec = PlantSpec::independent(&["Austin", "Boston", "Denver"], 40, 60, 5);
    let series = generate_planted(&spec)?;
    let index = build_artist_index(&series);
    let normalized: Vec<NormalizedMatrix> = to_listeners_matrices(&series, &index)?
        .iter()
        .map(normalize_rows)
        .collect();

    let norms: Vec<f64> = normalized[0].rows.iter().map(|r| r.norm()).collect();
    println!("week {} row norms {norms:.12?}", normalized[0].week_start);

    let velocities = compute_velocities(&normalized)?;
    println!("{} charts give {} velocity weeks", normalized.len(), velocities.matrices.len());
    let v = &velocities.matrices[0];
    for (city, row) in velocities.axes.cities.iter().zip(&v.rows) {
        let row = row.as_ref().expect("consecutive weeks");
        let (col, top) = row
            .entries()
            .iter()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .copied()
            .unwrap_or((0, 0.0));
        println!(
            "{city}: |V| = {:.4}, {} moving artists, largest move {} {top:+.4}",
            row.norm(),
            row.nnz(),
            velocities.axes.artists[col]
        );
        assert!(row.norm() <= 2.0);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> leadlag::Result<()> {
    run_example()
}
