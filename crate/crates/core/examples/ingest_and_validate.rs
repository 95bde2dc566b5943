//! Parses a small chart file, reports its shape and shows how malformed
//! input is rejected with the offending line.
//!
//! cargo run --example ingest_and_validate

use leadlag::prelude::*;

const CHARTS: &str = "\
week_start,city,artist,listeners
2012-01-01,Boston,Beach House,120
2012-01-01,Boston,Grimes,80
2012-01-01,Denver,Grimes,40
2012-01-08,Boston,Beach House,90
2012-01-08,Denver,Beach House,10
2012-01-08,Denver,Grimes,55
2012-01-22,Boston,Grimes,70
";

const TAGS: &str = "artist,tag\nBeach House,dream pop\nGrimes,electronic\n";

pub fn run_example() -> leadlag::Result<()> {
    let series = parse_chart_reader(CHARTS.as_bytes(), "demo")?;
    let index = build_artist_index(&series);
    println!(
        "{}: {} records, {} weeks, cities {:?}, artists {:?}",
        series.region_label,
        series.records().len(),
        series.weeks().len(),
        series.cities(),
        index.artists()
    );
    for (from, to) in series.gaps() {
        println!("gap between {from} and {to}");
    }
    assert_eq!(series.gaps().len(), 1);

    let tags = leadlag::chart_store::parse_tag_reader(TAGS.as_bytes())?;
    let dream = filter_by_tag(&series, &artists_with_tag(&tags, "dream pop"));
    println!("dream pop keeps {} of {} records", dream.records().len(), series.records().len());

    let broken = "week_start,city,artist,listeners\n2012-01-01,Boston,Grimes,-4\n";
    match parse_chart_reader(broken.as_bytes(), "broken") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("negative counts are invalid"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> leadlag::Result<()> {
    run_example()
}
