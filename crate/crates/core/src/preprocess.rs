//! Listeners matrices, unit-norm rows and week-over-week velocities.
//!
//! Every matrix is stored as one sparse row per corpus city. Rows are sorted
//! by artist column. Cities and artists are shared through [`Axes`].

use std::collections::BTreeSet;
use std::io::Write;
use std::sync::Arc;

use chrono::NaiveDate;

use crate::chart_store::{ArtistIndex, ChartSeries};
use crate::error::{Error, Result};

/// Chart truncation depth of the source charts.
pub const CHART_DEPTH: usize = 500;

/// Row and column labels shared by a family of matrices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Axes {
    pub cities: Vec<String>,
    pub artists: Vec<String>,
}

impl Axes {
    pub fn city_position(&self, city: &str) -> Option<usize> {
        self.cities.iter().position(|c| c == city)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    /// Entries must be sorted by column with no repeats.
    pub fn from_sorted(entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        SparseRow { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, col: usize) -> f64 {
        match self.entries.binary_search_by_key(&col, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn contains(&self, col: usize) -> bool {
        self.entries.binary_search_by_key(&col, |e| e.0).is_ok()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// `self - other` over the union of both supports. Columns present in
    /// either operand stay stored even when the difference is exactly zero.
    pub fn difference(&self, other: &SparseRow) -> SparseRow {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push((b[j].0, -b[j].1));
                j += 1;
            } else {
                out.push((a[i].0, a[i].1 - b[j].1));
                i += 1;
                j += 1;
            }
        }
        SparseRow { entries: out }
    }
}

/// Raw listener counts for one week (`L_t`).
#[derive(Debug, Clone, PartialEq)]
pub struct ListenersMatrix {
    pub week_start: NaiveDate,
    pub axes: Arc<Axes>,
    pub rows: Vec<SparseRow>,
}

impl ListenersMatrix {
    /// Cities whose row has more non-zeros than the chart depth allows.
    pub fn over_depth(&self, depth: usize) -> Vec<&str> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.nnz() > depth)
            .map(|(c, _)| self.axes.cities[c].as_str())
            .collect()
    }
}

/// Listener counts with every non-empty city row scaled to unit length (`L'_t`).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub week_start: NaiveDate,
    pub axes: Arc<Axes>,
    pub rows: Vec<SparseRow>,
}

/// One velocity matrix `V_t = L'_t - L'_{t-1}`; `None` rows are undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityMatrix {
    pub week_start: NaiveDate,
    pub rows: Vec<Option<SparseRow>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySeries {
    pub axes: Arc<Axes>,
    pub matrices: Vec<VelocityMatrix>,
}

impl VelocitySeries {
    pub fn is_defined(&self, week: usize, city: usize) -> bool {
        self.matrices[week].rows[city].is_some()
    }

    pub fn week_position(&self, week: NaiveDate) -> Option<usize> {
        self.matrices
            .binary_search_by_key(&week, |m| m.week_start)
            .ok()
    }

    pub fn weeks(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.matrices.iter().map(|m| m.week_start)
    }

    /// Drops every artist not in `keep`, re-indexing the remaining columns.
    /// Values are not renormalized: the result is the velocity of the kept
    /// artists inside the full normalized space.
    pub fn restrict_artists(&self, keep: &BTreeSet<String>) -> VelocitySeries {
        let mut remap = vec![None; self.axes.artists.len()];
        let mut artists = Vec::new();
        for (old, name) in self.axes.artists.iter().enumerate() {
            if keep.contains(name) {
                remap[old] = Some(artists.len());
                artists.push(name.clone());
            }
        }
        let axes = Arc::new(Axes {
            cities: self.axes.cities.clone(),
            artists,
        });
        let matrices = self
            .matrices
            .iter()
            .map(|m| VelocityMatrix {
                week_start: m.week_start,
                rows: m
                    .rows
                    .iter()
                    .map(|row| {
                        row.as_ref().map(|r| {
                            SparseRow::from_sorted(
                                r.entries()
                                    .iter()
                                    .filter_map(|&(c, v)| remap[c].map(|n| (n, v)))
                                    .collect(),
                            )
                        })
                    })
                    .collect(),
            })
            .collect();
        VelocitySeries { axes, matrices }
    }
}

pub fn to_listeners_matrices(series: &ChartSeries, index: &ArtistIndex) -> Result<Vec<ListenersMatrix>> {
    let axes = Arc::new(Axes {
        cities: series.cities().to_vec(),
        artists: index.artists().to_vec(),
    });
    let mut out: Vec<ListenersMatrix> = series
        .weeks()
        .iter()
        .map(|&week_start| ListenersMatrix {
            week_start,
            axes: Arc::clone(&axes),
            rows: vec![SparseRow::default(); axes.cities.len()],
        })
        .collect();
    let mut buckets: Vec<Vec<Vec<(usize, f64)>>> =
        vec![vec![Vec::new(); axes.cities.len()]; series.weeks().len()];
    for r in series.records() {
        let col = index
            .column(&r.artist)
            .ok_or_else(|| Error::MissingArtist(r.artist.clone()))?;
        let w = series
            .weeks()
            .binary_search(&r.week_start)
            .expect("record week is a corpus week");
        let c = series.city_position(&r.city).expect("record city is a corpus city");
        buckets[w][c].push((col, r.listeners as f64));
    }
    for (m, week) in out.iter_mut().zip(buckets) {
        for (row, mut entries) in m.rows.iter_mut().zip(week) {
            entries.sort_by_key(|e| e.0);
            *row = SparseRow::from_sorted(entries);
        }
    }
    Ok(out)
}

pub fn normalize_rows(matrix: &ListenersMatrix) -> NormalizedMatrix {
    let rows = matrix
        .rows
        .iter()
        .map(|row| {
            let norm = row.norm();
            if norm == 0.0 {
                return SparseRow::default();
            }
            SparseRow::from_sorted(row.entries().iter().map(|&(c, v)| (c, v / norm)).collect())
        })
        .collect();
    NormalizedMatrix {
        week_start: matrix.week_start,
        axes: Arc::clone(&matrix.axes),
        rows,
    }
}

/// One velocity matrix per consecutive pair of input weeks. Pairs that are not
/// exactly seven days apart yield a matrix whose rows are all undefined.
pub fn compute_velocities(normalized: &[NormalizedMatrix]) -> Result<VelocitySeries> {
    if normalized.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "velocities need at least 2 weeks, got {}",
            normalized.len()
        )));
    }
    let axes = Arc::clone(&normalized[0].axes);
    let mut matrices = Vec::with_capacity(normalized.len() - 1);
    for pair in normalized.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.week_start <= prev.week_start {
            return Err(Error::Config(format!(
                "normalized matrices out of order: {} then {}",
                prev.week_start, cur.week_start
            )));
        }
        if *cur.axes != *axes || *prev.axes != *axes {
            return Err(Error::Dimension("matrices do not share axes".into()));
        }
        let consecutive = (cur.week_start - prev.week_start).num_days() == 7;
        let rows = cur
            .rows
            .iter()
            .zip(&prev.rows)
            .map(|(now, before)| {
                (consecutive && !now.is_empty() && !before.is_empty()).then(|| now.difference(before))
            })
            .collect();
        matrices.push(VelocityMatrix {
            week_start: cur.week_start,
            rows,
        });
    }
    Ok(VelocitySeries { axes, matrices })
}

/// Where a genre filter is applied relative to normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterStage {
    /// Drop untagged artists before building matrices (within-genre normalization).
    #[default]
    Pre,
    /// Normalize over all artists, then keep only tagged artists' velocities.
    Post,
}

/// Corpus to velocities in one call, with an optional artist filter.
pub fn velocities_from_series(
    series: &ChartSeries,
    filter: Option<(&BTreeSet<String>, FilterStage)>,
) -> Result<VelocitySeries> {
    let filtered;
    let source = match filter {
        Some((tags, FilterStage::Pre)) => {
            filtered = crate::chart_store::filter_by_tag(series, tags);
            &filtered
        }
        _ => series,
    };
    let index = crate::chart_store::build_artist_index(source);
    let normalized: Vec<NormalizedMatrix> = to_listeners_matrices(source, &index)?
        .iter()
        .map(normalize_rows)
        .collect();
    let velocities = compute_velocities(&normalized)?;
    Ok(match filter {
        Some((tags, FilterStage::Post)) => velocities.restrict_artists(tags),
        _ => velocities,
    })
}

/// Debug dump of one matrix as `city,artist,value`.
pub fn write_matrix_csv<W: Write>(axes: &Axes, rows: &[SparseRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Dimension(e.to_string());
    wtr.write_record(["city", "artist", "value"]).map_err(err)?;
    for (c, row) in rows.iter().enumerate() {
        for &(a, v) in row.entries() {
            wtr.write_record([axes.cities[c].as_str(), axes.artists[a].as_str(), &v.to_string()])
                .map_err(err)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<matrix writer>", e))?;
    Ok(())
}
