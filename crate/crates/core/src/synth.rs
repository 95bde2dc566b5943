//! Synthetic chart corpora with planted lead-lag structure.
//!
//! # Generator
//!
//! Every city holds a latent log-popularity `u[c][a]` per artist, starting at
//! zero and evolving for `burn_in + weeks` steps:
//!
//! ```text
//! u[s] = reversion * u[s-1] + d[s]
//! d[s][c][a] = sum over edges (l -> c, k, alpha) of alpha * d[s-k][l][a]   (0 when s-k < 1)
//!            + sigma_c * e[s][c][a]
//! ```
//!
//! where `sigma_c` is `walk_sigma` for cities without incoming edges and
//! `noise_sigma` otherwise, and `e` are standard normal draws. Only the last
//! `weeks` steps are emitted. Listener counts are
//! `round(city_size * exp(mu[a] + u))` with `mu[a] = -popularity_exponent * ln(a + 1)`,
//! truncated per city-week to the `chart_size` largest counts (ties broken by
//! artist ordinal); zero counts are dropped.
//!
//! # Random numbers
//!
//! [`XorShift64Star`] seeded through one SplitMix64 step. Normal draws use
//! Box–Muller: `sqrt(-2 ln u1) * cos(2π u2)` with `u1 = ((x >> 11) + 1) / 2^53`
//! and `u2 = (x' >> 11) / 2^53` from two consecutive outputs. Draws are
//! consumed in `(step, city, artist)` order, one normal per triple, whatever
//! the city's sigma.

use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chart_store::{ChartRecord, ChartSeries};
use crate::design::DEFAULT_LAG_COUNT;
use crate::error::{Error, Result};
use crate::evaluate::Role;

/// SHA-256 of zero bytes; the fingerprint of an empty corpus.
pub const EMPTY_FINGERPRINT: &str = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";

/// Marsaglia xorshift with a multiplicative output scramble (xorshift64*).
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        // One SplitMix64 step so nearby seeds give unrelated streams.
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        XorShift64Star {
            state: if z == 0 { 0x2545_F491_4F6C_DD1D } else { z },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn next_normal(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * SCALE;
        let u2 = (self.next_u64() >> 11) as f64 * SCALE;
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantCity {
    pub name: String,
    #[serde(default = "unlabeled")]
    pub role: Role,
    /// Overrides the spec-wide `city_size`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
}

fn unlabeled() -> Role {
    Role::Unlabeled
}

impl PlantCity {
    pub fn new(name: impl Into<String>, role: Role) -> Self {
        PlantCity {
            name: name.into(),
            role,
            size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Influence {
    pub leader: String,
    pub follower: String,
    pub lag: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub cities: Vec<PlantCity>,
    #[serde(default)]
    pub influence: Vec<Influence>,
    pub weeks: usize,
    pub artists: usize,
    #[serde(default = "defaults::chart_size")]
    pub chart_size: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    #[serde(default = "defaults::walk_sigma")]
    pub walk_sigma: f64,
    #[serde(default = "defaults::reversion")]
    pub reversion: f64,
    #[serde(default = "defaults::popularity_exponent")]
    pub popularity_exponent: f64,
    #[serde(default = "defaults::city_size")]
    pub city_size: f64,
    #[serde(default = "defaults::burn_in")]
    pub burn_in: usize,
    #[serde(default = "defaults::start")]
    pub start: NaiveDate,
    /// Lag window the corpus must support.
    #[serde(default = "defaults::lag_count")]
    pub lag_count: usize,
    #[serde(default = "defaults::region")]
    pub region_label: String,
}

mod defaults {
    use chrono::NaiveDate;

    pub fn chart_size() -> usize {
        500
    }
    pub fn walk_sigma() -> f64 {
        0.04
    }
    pub fn reversion() -> f64 {
        0.95
    }
    pub fn popularity_exponent() -> f64 {
        0.5
    }
    pub fn city_size() -> f64 {
        10_000.0
    }
    pub fn burn_in() -> usize {
        200
    }
    pub fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2007, 1, 7).expect("valid date")
    }
    pub fn lag_count() -> usize {
        super::DEFAULT_LAG_COUNT
    }
    pub fn region() -> String {
        "synthetic".into()
    }
}

impl PlantSpec {
    /// A spec with no influence edges and generator defaults.
    pub fn independent(cities: &[&str], weeks: usize, artists: usize, seed: u64) -> Self {
        PlantSpec {
            cities: cities.iter().map(|c| PlantCity::new(*c, Role::Unlabeled)).collect(),
            influence: Vec::new(),
            weeks,
            artists,
            chart_size: defaults::chart_size(),
            noise_sigma: defaults::walk_sigma(),
            seed,
            walk_sigma: defaults::walk_sigma(),
            reversion: defaults::reversion(),
            popularity_exponent: defaults::popularity_exponent(),
            city_size: defaults::city_size(),
            burn_in: defaults::burn_in(),
            start: defaults::start(),
            lag_count: defaults::lag_count(),
            region_label: defaults::region(),
        }
    }

    /// Four cities and 200 artists over three years; Toronto follows
    /// Montreal two weeks later with strength 0.8 and own noise equal to the
    /// walk noise. Popularity is flatter than the default so that no handful
    /// of artists dominates the pooled regression.
    pub fn reference() -> Self {
        let mut spec = Self::independent(&["Boston", "Denver", "Montreal", "Toronto"], 157, 200, 20_120_501);
        spec.popularity_exponent = 0.25;
        spec.cities[2].role = Role::Leader;
        spec.cities[3].role = Role::Follower;
        spec.influence.push(Influence {
            leader: "Montreal".into(),
            follower: "Toronto".into(),
            lag: 2,
            strength: 0.8,
        });
        spec.region_label = "reference".into();
        spec
    }

    /// [`PlantSpec::reference`] with the edge strength set to zero.
    pub fn null_reference() -> Self {
        let mut spec = Self::reference();
        spec.influence[0].strength = 0.0;
        spec.region_label = "null".into();
        spec
    }

    pub fn max_lag(&self) -> usize {
        self.influence.iter().map(|e| e.lag).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.cities.is_empty() {
            return bad("spec has no cities".into());
        }
        let names: BTreeSet<&str> = self.cities.iter().map(|c| c.name.as_str()).collect();
        if names.len() != self.cities.len() {
            return bad("duplicate city names".into());
        }
        if self.artists == 0 || self.chart_size == 0 {
            return bad("artists and chart_size must be positive".into());
        }
        for e in &self.influence {
            if !names.contains(e.leader.as_str()) || !names.contains(e.follower.as_str()) {
                return bad(format!("edge {} -> {} names an unknown city", e.leader, e.follower));
            }
            if e.leader == e.follower {
                return bad(format!("edge {0} -> {0} is a self loop", e.leader));
            }
            if e.lag == 0 {
                return bad(format!("edge {} -> {} has lag 0", e.leader, e.follower));
            }
            if !(0.0..=1.0).contains(&e.strength) {
                return bad(format!("edge strength {} outside [0, 1]", e.strength));
            }
        }
        let needed = self.max_lag() + self.lag_count + 10;
        if self.weeks <= needed {
            return bad(format!("weeks must exceed {needed} (max lag + lag count + 10), got {}", self.weeks));
        }
        if self.burn_in < self.max_lag() {
            return bad("burn_in must be at least the largest lag".into());
        }
        for (name, v) in [("noise_sigma", self.noise_sigma), ("walk_sigma", self.walk_sigma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        if !(self.reversion > 0.0 && self.reversion <= 1.0) {
            return bad("reversion must lie in (0, 1]".into());
        }
        if !(self.city_size > 0.0 && self.city_size.is_finite())
            || self.cities.iter().any(|c| c.size.is_some_and(|s| !(s > 0.0 && s.is_finite())))
        {
            return bad("city sizes must be positive".into());
        }
        Ok(())
    }

    pub fn artist_name(&self, a: usize) -> String {
        let width = (self.artists.saturating_sub(1)).to_string().len().max(4);
        format!("artist{a:0width$}")
    }
}

pub fn generate_planted(spec: &PlantSpec) -> Result<ChartSeries> {
    spec.validate()?;
    let n_cities = spec.cities.len();
    let n_artists = spec.artists;
    let city_of = |name: &str| spec.cities.iter().position(|c| c.name == name).unwrap();
    // Incoming edges per city as (leader, lag, strength).
    let mut incoming: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n_cities];
    for e in &spec.influence {
        incoming[city_of(&e.follower)].push((city_of(&e.leader), e.lag, e.strength));
    }
    let sigma: Vec<f64> = incoming
        .iter()
        .map(|inc| if inc.is_empty() { spec.walk_sigma } else { spec.noise_sigma })
        .collect();
    let mu: Vec<f64> = (0..n_artists)
        .map(|a| -spec.popularity_exponent * ((a + 1) as f64).ln())
        .collect();
    let names: Vec<String> = (0..n_artists).map(|a| spec.artist_name(a)).collect();

    let mut rng = XorShift64Star::new(spec.seed);
    let depth = spec.max_lag() + 1;
    // ring[s % depth] holds the increments of step s.
    let mut ring = vec![vec![0.0f64; n_cities * n_artists]; depth];
    let mut u = vec![0.0f64; n_cities * n_artists];
    let total = spec.burn_in + spec.weeks;
    let mut records = Vec::with_capacity(spec.weeks * n_cities * spec.chart_size.min(n_artists));
    let mut counts: Vec<(u64, usize)> = Vec::with_capacity(n_artists);

    for s in 1..total {
        let mut d = std::mem::take(&mut ring[s % depth]);
        for c in 0..n_cities {
            for a in 0..n_artists {
                let mut inc = 0.0;
                for &(leader, lag, strength) in &incoming[c] {
                    if s > lag {
                        inc += strength * ring[(s - lag) % depth][leader * n_artists + a];
                    }
                }
                d[c * n_artists + a] = inc + sigma[c] * rng.next_normal();
            }
        }
        for (ui, di) in u.iter_mut().zip(&d) {
            *ui = spec.reversion * *ui + di;
        }
        ring[s % depth] = d;

        if s < total - spec.weeks {
            continue;
        }
        let week = spec.start + Days::new(7 * (s - (total - spec.weeks)) as u64);
        for (c, city) in spec.cities.iter().enumerate() {
            let size = city.size.unwrap_or(spec.city_size);
            counts.clear();
            counts.extend((0..n_artists).map(|a| {
                let v = (size * (mu[a] + u[c * n_artists + a]).exp()).round();
                (v as u64, a)
            }));
            counts.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
            for &(n, a) in counts.iter().take(spec.chart_size) {
                if n > 0 {
                    records.push(ChartRecord {
                        week_start: week,
                        city: city.name.clone(),
                        artist: names[a].clone(),
                        listeners: n,
                    });
                }
            }
        }
    }
    ChartSeries::from_records(records, spec.region_label.clone())
}

/// Order-independent SHA-256 over the corpus content. Records are taken in
/// canonical order; each field is written as its UTF-8 length (u64 LE)
/// followed by its bytes, with the date as `YYYY-MM-DD` and the count as
/// decimal text.
pub fn fingerprint(series: &ChartSeries) -> String {
    let mut h = Sha256::new();
    for r in series.records() {
        let week = r.week_start.format("%Y-%m-%d").to_string();
        let n = r.listeners.to_string();
        for field in [week.as_str(), &r.city, &r.artist, &n] {
            h.update((field.len() as u64).to_le_bytes());
            h.update(field.as_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Sidecar document written next to a generated corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSidecar {
    pub spec: PlantSpec,
    pub fingerprint: String,
    pub records: usize,
}
