//! Capture–recapture data with time-varying (or constant) survival and
//! capture probabilities, analysed through the first recapture after each
//! release.
//!
//! Cohort `i` (0-based) is released at occasion `i + 1`; column `c` counts
//! first recaptures at occasion `c + 2`, so only `c ≥ i` is possible.
//! `phi[i]` is survival from occasion `i + 1` to `i + 2` and `p[c]` the
//! capture probability at occasion `c + 2`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{sample_multinomial, StreamRng};

mod mcmc;
mod model;

pub use mcmc::{logit, sample_posterior_mh, ChainConfig, ChainOutput};
pub use model::{cppp_dipper, ppp_dipper, DipperModel, FreemanTukey};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecaptureData {
    /// Calendar label of the first release occasion.
    pub first_year: i32,
    pub releases: Vec<u64>,
    /// `recaptures[i][c]`, zero for `c < i`.
    pub recaptures: Vec<Vec<u64>>,
}

impl RecaptureData {
    pub fn new(first_year: i32, releases: Vec<u64>, recaptures: Vec<Vec<u64>>) -> Result<Self> {
        let data = RecaptureData {
            first_year,
            releases,
            recaptures,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.releases.len();
        if k == 0 {
            return Err(Error::Data("no release cohorts".into()));
        }
        if self.recaptures.len() != k || self.recaptures.iter().any(|r| r.len() != k) {
            return Err(Error::Data(format!("recapture table must be {k}×{k}")));
        }
        for (i, row) in self.recaptures.iter().enumerate() {
            if row[..i].iter().any(|&y| y != 0) {
                return Err(Error::Data(format!("cohort {i} has recaptures before its release")));
            }
            let total: u64 = row.iter().sum();
            if total > self.releases[i] {
                return Err(Error::Data(format!(
                    "cohort {i}: {total} recaptures exceed {} releases",
                    self.releases[i]
                )));
            }
        }
        Ok(())
    }

    pub fn cohorts(&self) -> usize {
        self.releases.len()
    }

    /// Released animals never seen again, per cohort.
    pub fn never_recaptured(&self) -> Vec<u64> {
        self.releases
            .iter()
            .zip(&self.recaptures)
            .map(|(r, row)| r - row.iter().sum::<u64>())
            .collect()
    }

    /// Reads `release_year,released,<recapture years...>` rows; cells before
    /// the first possible recapture may be blank.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let width = rdr.headers()?.len();
        if width < 3 {
            return Err(Error::Data("expected release_year, released and recapture columns".into()));
        }
        let k = width - 2;
        let mut first_year = None;
        let mut releases = Vec::new();
        let mut recaptures = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |j: usize| record.get(j).unwrap_or("");
            let parse = |s: &str, what: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| Error::Data(format!("row {}: bad {what} '{s}'", line + 1)))
            };
            let year: i32 = field(0)
                .parse()
                .map_err(|_| Error::Data(format!("row {}: bad release year '{}'", line + 1, field(0))))?;
            first_year.get_or_insert(year);
            releases.push(parse(field(1), "release count")?);
            let row = (0..k)
                .map(|c| match field(c + 2) {
                    "" | "-" => Ok(0),
                    s => parse(s, "recapture count"),
                })
                .collect::<Result<Vec<_>>>()?;
            recaptures.push(row);
        }
        if releases.len() != k {
            return Err(Error::Data(format!(
                "{} release rows but {k} recapture columns",
                releases.len()
            )));
        }
        RecaptureData::new(first_year.unwrap_or(0), releases, recaptures)
    }

    /// European dipper recaptures, releases 1981–1986.
    pub fn dipper() -> Self {
        RecaptureData::from_csv(include_str!("../../fixtures/dipper.csv").as_bytes())
            .expect("bundled dipper table parses")
    }
}

/// Time-varying (T/T) or constant (C/C) survival and capture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Tt,
    Cc,
}

impl Variant {
    pub fn free_parameters(self, cohorts: usize) -> usize {
        match self {
            Variant::Tt => 2 * cohorts,
            Variant::Cc => 2,
        }
    }

    /// Survival then capture probabilities, broadcast for C/C.
    pub fn expand(self, free: &[f64], cohorts: usize) -> CjsParams {
        match self {
            Variant::Tt => CjsParams {
                phi: free[..cohorts].to_vec(),
                p: free[cohorts..2 * cohorts].to_vec(),
            },
            Variant::Cc => CjsParams {
                phi: vec![free[0]; cohorts],
                p: vec![free[1]; cohorts],
            },
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tt" | "t/t" => Ok(Variant::Tt),
            "cc" | "c/c" => Ok(Variant::Cc),
            other => Err(Error::domain(format!("unknown variant '{other}' (expected tt or cc)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CjsParams {
    pub phi: Vec<f64>,
    pub p: Vec<f64>,
}

impl CjsParams {
    pub fn constant(phi: f64, p: f64, cohorts: usize) -> Self {
        CjsParams {
            phi: vec![phi; cohorts],
            p: vec![p; cohorts],
        }
    }

    pub fn cohorts(&self) -> usize {
        self.phi.len()
    }

    /// Probability that an animal released in cohort `i` is first seen
    /// again at column `c`: `φ_i p_c Π_{i<k≤c} φ_k(1 − p_{k−1})`.
    pub fn cell_probability(&self, i: usize, c: usize) -> f64 {
        if c < i {
            return 0.0;
        }
        let mut prob = self.phi[i] * self.p[c];
        for k in i + 1..=c {
            prob *= self.phi[k] * (1.0 - self.p[k - 1]);
        }
        prob
    }

    /// `χ_i`: probability of never being recaptured.
    pub fn never_recaptured_probability(&self, i: usize) -> f64 {
        let seen: f64 = (i..self.cohorts()).map(|c| self.cell_probability(i, c)).sum();
        (1.0 - seen).max(0.0)
    }

    /// Cell probabilities of cohort `i` followed by `χ_i`.
    pub fn row_probabilities(&self, i: usize) -> Vec<f64> {
        let mut row: Vec<f64> = (i..self.cohorts()).map(|c| self.cell_probability(i, c)).collect();
        row.push(self.never_recaptured_probability(i));
        row
    }

    fn check(&self, data: &RecaptureData) -> Result<()> {
        if self.phi.len() != data.cohorts() || self.p.len() != data.cohorts() {
            return Err(Error::domain("parameter vectors do not match the number of cohorts"));
        }
        Ok(())
    }
}

/// `Σ y log cell + Σ (R − Σy) log χ`, without the multinomial coefficient.
/// Impossible data give −∞.
pub fn log_likelihood(params: &CjsParams, data: &RecaptureData) -> Result<f64> {
    params.check(data)?;
    let mut total = 0.0;
    for i in 0..data.cohorts() {
        let row = params.row_probabilities(i);
        let never = data.releases[i] - data.recaptures[i].iter().sum::<u64>();
        let counts = data.recaptures[i][i..].iter().copied().chain(std::iter::once(never));
        for (y, prob) in counts.zip(row) {
            if y > 0 {
                if prob <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                total += y as f64 * prob.ln();
            }
        }
    }
    Ok(total)
}

/// `e_{i,c} = R_i · cell(i, c)`.
pub fn expected_counts(params: &CjsParams, releases: &[u64]) -> Vec<Vec<f64>> {
    let k = releases.len();
    (0..k)
        .map(|i| (0..k).map(|c| releases[i] as f64 * params.cell_probability(i, c)).collect())
        .collect()
}

/// `Σ_{c ≥ i} (√y_{i,c} − √e_{i,c})²`.
pub fn freeman_tukey_discrepancy(y: &[Vec<u64>], e: &[Vec<f64>]) -> f64 {
    let mut d = 0.0;
    for (i, (yr, er)) in y.iter().zip(e).enumerate() {
        for c in i..yr.len() {
            d += ((yr[c] as f64).sqrt() - er[c].sqrt()).powi(2);
        }
    }
    d
}

/// Recapture table drawn cohort by cohort from multinomials with the
/// observed release numbers.
pub fn sample_recaptures(params: &CjsParams, releases: &[u64], rng: &mut StreamRng) -> Vec<Vec<u64>> {
    let k = releases.len();
    (0..k)
        .map(|i| {
            let counts = sample_multinomial(releases[i], &params.row_probabilities(i), rng);
            let mut row = vec![0; k];
            row[i..].copy_from_slice(&counts[..k - i]);
            row
        })
        .collect()
}
