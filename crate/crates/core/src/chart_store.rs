//! Weekly chart ingestion.
//!
//! A corpus is a set of `(week_start, city, artist, listeners)` observations.
//! Records are held in canonical `(week, city, artist)` order so two corpora
//! with the same content compare equal regardless of file row order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHART_HEADER: [&str; 4] = ["week_start", "city", "artist", "listeners"];
pub const TAG_HEADER: [&str; 2] = ["artist", "tag"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChartRecord {
    pub week_start: NaiveDate,
    pub city: String,
    pub artist: String,
    pub listeners: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChartSeries {
    records: Vec<ChartRecord>,
    weeks: Vec<NaiveDate>,
    cities: Vec<String>,
    pub region_label: String,
}

impl ChartSeries {
    /// Builds a corpus from arbitrary-order records, enforcing key uniqueness,
    /// dropping zero-listener rows and checking weekly spacing.
    pub fn from_records(
        records: impl IntoIterator<Item = ChartRecord>,
        region_label: impl Into<String>,
    ) -> Result<Self> {
        let mut records: Vec<ChartRecord> =
            records.into_iter().filter(|r| r.listeners > 0).collect();
        records.sort();
        for (i, pair) in records.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if a.week_start == b.week_start && a.city == b.city && a.artist == b.artist {
                return Err(Error::DuplicateKey {
                    line: (i + 2) as u64,
                    week: b.week_start,
                    city: b.city.clone(),
                    artist: b.artist.clone(),
                });
            }
        }
        let series = Self::assemble(records, region_label.into());
        series.check_spacing(|_| 0)?;
        Ok(series)
    }

    fn assemble(records: Vec<ChartRecord>, region_label: String) -> Self {
        let weeks: BTreeSet<NaiveDate> = records.iter().map(|r| r.week_start).collect();
        let cities: BTreeSet<&str> = records.iter().map(|r| r.city.as_str()).collect();
        let cities = cities.into_iter().map(str::to_owned).collect();
        ChartSeries {
            weeks: weeks.into_iter().collect(),
            cities,
            records,
            region_label,
        }
    }

    fn check_spacing(&self, line_of: impl Fn(NaiveDate) -> u64) -> Result<()> {
        let Some(&first) = self.weeks.first() else {
            return Ok(());
        };
        for &w in &self.weeks[1..] {
            if (w - first).num_days() % 7 != 0 {
                return Err(Error::Value {
                    line: line_of(w),
                    message: format!(
                        "week {w} is not a whole number of weeks after the first week {first}"
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn records(&self) -> &[ChartRecord] {
        &self.records
    }

    pub fn weeks(&self) -> &[NaiveDate] {
        &self.weeks
    }

    pub fn cities(&self) -> &[String] {
        &self.cities
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn city_position(&self, city: &str) -> Option<usize> {
        self.cities.binary_search_by(|c| c.as_str().cmp(city)).ok()
    }

    /// Pairs of consecutive corpus weeks more than seven days apart.
    pub fn gaps(&self) -> Vec<(NaiveDate, NaiveDate)> {
        self.weeks
            .windows(2)
            .filter(|w| (w[1] - w[0]).num_days() != 7)
            .map(|w| (w[0], w[1]))
            .collect()
    }

    pub fn with_region_label(mut self, label: impl Into<String>) -> Self {
        self.region_label = label.into();
        self
    }
}

/// Dense column ordinals for the artists of one corpus, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArtistIndex {
    artists: Vec<String>,
    artist_to_column: HashMap<String, usize>,
}

impl ArtistIndex {
    pub fn from_artists<I, S>(artists: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = artists.into_iter().map(Into::into).collect();
        let artists: Vec<String> = set.into_iter().collect();
        let artist_to_column = artists
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        ArtistIndex {
            artists,
            artist_to_column,
        }
    }

    pub fn size(&self) -> usize {
        self.artists.len()
    }

    pub fn column(&self, artist: &str) -> Option<usize> {
        self.artist_to_column.get(artist).copied()
    }

    pub fn artist(&self, column: usize) -> &str {
        &self.artists[column]
    }

    pub fn artists(&self) -> &[String] {
        &self.artists
    }
}

pub fn build_artist_index(series: &ChartSeries) -> ArtistIndex {
    ArtistIndex::from_artists(series.records.iter().map(|r| r.artist.as_str()))
}

/// Keeps only the records of artists in `tagged_artists`.
pub fn filter_by_tag(series: &ChartSeries, tagged_artists: &BTreeSet<String>) -> ChartSeries {
    let kept = series
        .records
        .iter()
        .filter(|r| tagged_artists.contains(&r.artist))
        .cloned()
        .collect();
    ChartSeries::assemble(kept, series.region_label.clone())
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}, found {:?}", expected.join(","), found.join(",")),
        });
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn parse_chart_csv(path: impl AsRef<Path>) -> Result<ChartSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_chart_reader(file, label)
}

pub fn parse_chart_reader<R: Read>(reader: R, region_label: impl Into<String>) -> Result<ChartSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    check_header(rdr.headers().map_err(csv_error)?, &CHART_HEADER)?;

    let mut seen: HashMap<(NaiveDate, String, String), u64> = HashMap::new();
    let mut first_line: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != CHART_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", CHART_HEADER.len(), row.len()),
            });
        }
        let week_start = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date {:?}: {e}", &row[0]),
        })?;
        let listeners: i64 = row[3].parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad listener count {:?}: {e}", &row[3]),
        })?;
        if listeners < 0 {
            return Err(Error::Value {
                line,
                message: format!("negative listener count {listeners}"),
            });
        }
        let key = (week_start, row[1].to_owned(), row[2].to_owned());
        if seen.contains_key(&key) {
            return Err(Error::DuplicateKey {
                line,
                week: key.0,
                city: key.1,
                artist: key.2,
            });
        }
        first_line.entry(week_start).or_insert(line);
        if listeners == 0 {
            seen.insert(key, line);
            continue;
        }
        let (week_start, city, artist) = key.clone();
        seen.insert(key, line);
        records.push(ChartRecord {
            week_start,
            city,
            artist,
            listeners: listeners as u64,
        });
    }
    records.sort();
    let series = ChartSeries::assemble(records, region_label.into());
    series.check_spacing(|w| first_line.get(&w).copied().unwrap_or(0))?;
    Ok(series)
}

pub fn write_chart_csv<W: Write>(series: &ChartSeries, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Parse {
        line: 0,
        message: e.to_string(),
    };
    wtr.write_record(CHART_HEADER).map_err(io)?;
    for r in &series.records {
        wtr.write_record([
            r.week_start.format("%Y-%m-%d").to_string(),
            r.city.clone(),
            r.artist.clone(),
            r.listeners.to_string(),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io("<chart writer>", e))?;
    Ok(())
}

/// Reads `artist,tag` pairs.
pub fn parse_tag_reader<R: Read>(reader: R) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(rdr.headers().map_err(csv_error)?, &TAG_HEADER)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        out.push((row[0].to_owned(), row[1].to_owned()));
    }
    Ok(out)
}

pub fn parse_tag_csv(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tag_reader(file)
}

/// The set of artists carrying `tag`.
pub fn artists_with_tag(pairs: &[(String, String)], tag: &str) -> BTreeSet<String> {
    pairs
        .iter()
        .filter(|(_, t)| t == tag)
        .map(|(a, _)| a.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ChartSeries> {
        parse_chart_reader(text.as_bytes(), "test")
    }

    #[test]
    fn two_records_one_week_two_cities() {
        let s = parse(
            "week_start,city,artist,listeners\n\
             2007-01-07,montreal,arcade fire,320\n\
             2007-01-07,toronto,arcade fire,210\n",
        )
        .unwrap();
        assert_eq!(s.records().len(), 2);
        assert_eq!(s.weeks().len(), 1);
        assert_eq!(s.cities(), ["montreal", "toronto"]);
    }

    #[test]
    fn header_only_is_empty() {
        let s = parse("week_start,city,artist,listeners\n").unwrap();
        assert!(s.is_empty());
        assert!(s.weeks().is_empty());
        assert!(s.cities().is_empty());
    }

    #[test]
    fn negative_listeners_is_value_error_with_line() {
        let err = parse(
            "week_start,city,artist,listeners\n\
             2007-01-07,a,x,5\n\
             2007-01-07,a,y,-3\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Value { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn malformed_rows_report_lines() {
        let err = parse("week_start,city,artist,listeners\n2007-01-07,a,x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse("week_start,city,artist,listeners\n2007-01-07,a,x,1\n2007-13-07,a,x,1\n")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse("week_start,city,artist,listeners\n2007-01-07,a,x,many\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn wrong_header_rejected() {
        let err = parse("week,city,artist,listeners\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = parse(
            "week_start,city,artist,listeners\n\
             2007-01-07,a,x,5\n\
             2007-01-07,a,x,6\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateKey { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn zero_listener_rows_dropped() {
        let s = parse(
            "week_start,city,artist,listeners\n\
             2007-01-07,a,x,0\n\
             2007-01-07,a,y,4\n",
        )
        .unwrap();
        assert_eq!(s.records().len(), 1);
        assert_eq!(s.records()[0].artist, "y");
    }

    #[test]
    fn off_grid_week_rejected() {
        let err = parse(
            "week_start,city,artist,listeners\n\
             2007-01-07,a,x,1\n\
             2007-01-10,a,x,1\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Value { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn gaps_reported() {
        let s = parse(
            "week_start,city,artist,listeners\n\
             2007-01-07,a,x,1\n\
             2007-01-14,a,x,1\n\
             2007-01-28,a,x,1\n",
        )
        .unwrap();
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        assert_eq!(s.gaps(), vec![(d("2007-01-14"), d("2007-01-28"))]);
    }

    #[test]
    fn quoted_fields_with_commas() {
        let s = parse(
            "week_start,city,artist,listeners\n\
             2007-01-07,a,\"crosby, stills & nash\",7\n",
        )
        .unwrap();
        assert_eq!(s.records()[0].artist, "crosby, stills & nash");
    }

    fn rec(city: &str, artist: &str) -> ChartRecord {
        ChartRecord {
            week_start: NaiveDate::from_ymd_opt(2007, 1, 7).unwrap(),
            city: city.into(),
            artist: artist.into(),
            listeners: 1,
        }
    }

    #[test]
    fn artist_index_is_lexicographic() {
        let s = ChartSeries::from_records([rec("c", "b"), rec("c", "a"), rec("c", "c")], "r").unwrap();
        let idx = build_artist_index(&s);
        assert_eq!(idx.size(), 3);
        assert_eq!(idx.column("a"), Some(0));
        assert_eq!(idx.column("b"), Some(1));
        assert_eq!(idx.column("c"), Some(2));
        assert_eq!(build_artist_index(&ChartSeries::default()).size(), 0);
    }

    #[test]
    fn artist_counted_once_across_weeks() {
        let records = (0..40).map(|w| ChartRecord {
            week_start: NaiveDate::from_ymd_opt(2007, 1, 7).unwrap() + chrono::Days::new(7 * w),
            city: "c".into(),
            artist: "a".into(),
            listeners: 3,
        });
        let s = ChartSeries::from_records(records, "r").unwrap();
        assert_eq!(s.weeks().len(), 40);
        assert_eq!(build_artist_index(&s).size(), 1);
    }

    #[test]
    fn tag_filtering() {
        let s = ChartSeries::from_records([rec("c", "x"), rec("d", "y")], "r").unwrap();
        let all: BTreeSet<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        assert_eq!(filter_by_tag(&s, &all), s);
        let none: BTreeSet<String> = ["z".to_string()].into();
        let empty = filter_by_tag(&s, &none);
        assert!(empty.is_empty() && empty.weeks().is_empty() && empty.cities().is_empty());
        let only_x: BTreeSet<String> = ["x".to_string()].into();
        let fx = filter_by_tag(&s, &only_x);
        assert_eq!(fx.records().len(), 1);
        assert_eq!(fx.cities(), ["c"]);
    }

    #[test]
    fn tag_file_parsing() {
        let pairs = parse_tag_reader("artist,tag\nx,indie\ny,pop\nz,indie\n".as_bytes()).unwrap();
        let indie = artists_with_tag(&pairs, "indie");
        assert_eq!(indie.into_iter().collect::<Vec<_>>(), ["x", "z"]);
    }
}
