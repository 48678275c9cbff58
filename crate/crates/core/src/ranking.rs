//! Expected rankings of clusters from their three corridor counts.
//!
//! Each model maps the corridor counts of a triple (A,B,C) to a score:
//!
//! | model | score                                   |
//! |-------|-----------------------------------------|
//! | R1    | fAB + fAC + fBC                         |
//! | R2    | fAB · fAC · fBC                         |
//! | R3    | min(fAB, fAC, fBC)                      |
//! | R4    | min(fAB, fAC, fBC) · mean(fAB, fAC, fBC)|
//!
//! Triples are ranked by score (expected rank) and by observed count (actual
//! rank), both descending with average ranks for ties. The rank delta is
//! `expected_rank - actual_rank`, so a positive delta marks a cluster that is
//! more frequent than its corridors predict.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::{kendall_tau, spearman_rho, Correlation};
use crate::counting::{pair_complete_triples, PairFrequencyTable, TripleFrequencyTable, TripleKey};
use crate::error::{Error, Result};
use crate::ingest::CountryCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RankingModel {
    R1,
    R2,
    R3,
    R4,
}

impl RankingModel {
    pub const ALL: [RankingModel; 4] = [
        RankingModel::R1,
        RankingModel::R2,
        RankingModel::R3,
        RankingModel::R4,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RankingModel::R1 => "R1",
            RankingModel::R2 => "R2",
            RankingModel::R3 => "R3",
            RankingModel::R4 => "R4",
        }
    }

    pub fn score(self, f_ab: u64, f_ac: u64, f_bc: u64) -> f64 {
        score_triple(self, f_ab, f_ac, f_bc)
    }
}

impl fmt::Display for RankingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankingModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r1" | "1" => Ok(RankingModel::R1),
            "r2" | "2" => Ok(RankingModel::R2),
            "r3" | "3" => Ok(RankingModel::R3),
            "r4" | "4" => Ok(RankingModel::R4),
            other => Err(format!("unknown ranking model {other:?} (expected r1..r4)")),
        }
    }
}

/// Scores a triple from its corridor counts.
///
/// Sums and products are formed exactly in integer arithmetic before the
/// single conversion to `f64`, so the score does not depend on argument
/// order.
pub fn score_triple(model: RankingModel, f_ab: u64, f_ac: u64, f_bc: u64) -> f64 {
    let (a, b, c) = (f_ab as u128, f_ac as u128, f_bc as u128);
    let sum = a + b + c;
    let min = a.min(b).min(c);
    match model {
        RankingModel::R1 => sum as f64,
        RankingModel::R2 => match a.checked_mul(b).and_then(|ab| ab.checked_mul(c)) {
            Some(p) => p as f64,
            None => a as f64 * b as f64 * c as f64,
        },
        RankingModel::R3 => min as f64,
        RankingModel::R4 => match min.checked_mul(sum) {
            Some(p) => p as f64 / 3.0,
            None => min as f64 * (sum as f64 / 3.0),
        },
    }
}

/// Fractional ranks in descending order: the largest score gets rank 1 and
/// tied scores share the mean of the positions they span.
pub fn rank_with_ties(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyRanking);
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NanScore(i));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    Ok(ranks)
}

/// Which triples enter the ranking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UniverseMode {
    /// Triples observed at least once.
    #[default]
    Observed,
    /// Every triple whose three corridors were observed, including triples
    /// with a zero count.
    PairsPresent,
}

impl FromStr for UniverseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "observed" => Ok(UniverseMode::Observed),
            "pairs" | "pairs-present" | "all-pairs-present" => Ok(UniverseMode::PairsPresent),
            other => Err(format!(
                "unknown universe {other:?} (expected observed or pairs)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedTriple {
    pub key: TripleKey,
    pub actual_count: u64,
    pub actual_rank: f64,
    pub model_score: f64,
    pub expected_rank: f64,
    pub delta: f64,
}

fn universe_keys(
    pairs: &PairFrequencyTable,
    triples: &TripleFrequencyTable,
    mode: UniverseMode,
) -> Vec<TripleKey> {
    match mode {
        UniverseMode::Observed => {
            let mut keys: Vec<TripleKey> = triples.keys().copied().collect();
            keys.sort_unstable();
            keys
        }
        UniverseMode::PairsPresent => {
            // observed triples always have their pairs, but keep any that don't
            // so the missing-pair error still fires
            let mut keys = pair_complete_triples(pairs);
            keys.extend(triples.keys().copied());
            keys.sort_unstable();
            keys.dedup();
            keys
        }
    }
}

/// Ranks every triple in the universe under `model`. The result is sorted by key.
pub fn rank_universe(
    model: RankingModel,
    pairs: &PairFrequencyTable,
    triples: &TripleFrequencyTable,
    mode: UniverseMode,
) -> Result<Vec<RankedTriple>> {
    let keys = universe_keys(pairs, triples, mode);
    if keys.is_empty() {
        return Ok(Vec::new());
    }
    let mut scores = Vec::with_capacity(keys.len());
    for key in &keys {
        let mut f = [0u64; 3];
        for (slot, pair) in f.iter_mut().zip(key.pairs()) {
            *slot = pairs.get(&pair);
            if *slot == 0 {
                let [a, b] = pair.countries();
                return Err(Error::MissingPair { triple: *key, a, b });
            }
        }
        scores.push(score_triple(model, f[0], f[1], f[2]));
    }
    let counts: Vec<u64> = keys.iter().map(|k| triples.get(k)).collect();
    let count_scores: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let expected = rank_with_ties(&scores)?;
    let actual = rank_with_ties(&count_scores)?;

    Ok(keys
        .into_iter()
        .enumerate()
        .map(|(i, key)| RankedTriple {
            key,
            actual_count: counts[i],
            actual_rank: actual[i],
            model_score: scores[i],
            expected_rank: expected[i],
            delta: expected[i] - actual[i],
        })
        .collect())
}

/// Delta descending, then key ascending.
pub fn delta_order(a: &RankedTriple, b: &RankedTriple) -> Ordering {
    b.delta.total_cmp(&a.delta).then(a.key.cmp(&b.key))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelEvaluation {
    pub model: RankingModel,
    pub kendall: Correlation,
    pub spearman: Correlation,
    /// Highest coefficient under both measures.
    pub best: bool,
}

/// Correlates each model's expected ranking with the actual ranking.
/// Rows come back ordered R1..R4.
pub fn evaluate_models(
    pairs: &PairFrequencyTable,
    triples: &TripleFrequencyTable,
    mode: UniverseMode,
) -> Result<Vec<ModelEvaluation>> {
    let mut rows = Vec::with_capacity(4);
    for model in RankingModel::ALL {
        let ranked = rank_universe(model, pairs, triples, mode)?;
        if ranked.is_empty() {
            return Err(Error::EmptyRanking);
        }
        let expected: Vec<f64> = ranked.iter().map(|r| r.expected_rank).collect();
        let actual: Vec<f64> = ranked.iter().map(|r| r.actual_rank).collect();
        rows.push(ModelEvaluation {
            model,
            kendall: kendall_tau(&expected, &actual)?,
            spearman: spearman_rho(&expected, &actual)?,
            best: false,
        });
    }
    let max_of = |f: fn(&ModelEvaluation) -> Correlation| {
        rows.iter()
            .filter_map(|r| f(r).value())
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let best_k = max_of(|r| r.kendall);
    let best_s = max_of(|r| r.spearman);
    for row in &mut rows {
        row.best = row.kendall.value().is_some()
            && row.kendall.value() == best_k
            && row.spearman.value() == best_s;
    }
    Ok(rows)
}

/// Writes ranked triples sorted by delta descending (key ascending on ties).
pub fn write_ranked<W: Write>(writer: W, ranked: &[RankedTriple]) -> Result<()> {
    let mut rows: Vec<&RankedTriple> = ranked.iter().collect();
    rows.sort_by(|a, b| delta_order(a, b));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "country_a",
        "country_b",
        "country_c",
        "actual_count",
        "actual_rank",
        "model_score",
        "expected_rank",
        "delta",
    ])?;
    for r in rows {
        let [a, b, c] = r.key.countries();
        w.write_record([
            a.to_string(),
            b.to_string(),
            c.to_string(),
            r.actual_count.to_string(),
            r.actual_rank.to_string(),
            r.model_score.to_string(),
            r.expected_rank.to_string(),
            r.delta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            path: String::new(),
            line,
            message: format!("bad or missing field {}", i + 1),
        })
}

/// Reads the format written by [`write_ranked`].
pub fn read_ranked<R: Read>(reader: R) -> Result<Vec<RankedTriple>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let a: CountryCode = field(&rec, 0, line)?;
        let b: CountryCode = field(&rec, 1, line)?;
        let c: CountryCode = field(&rec, 2, line)?;
        out.push(RankedTriple {
            key: TripleKey::new(a, b, c)?,
            actual_count: field(&rec, 3, line)?,
            actual_rank: field(&rec, 4, line)?,
            model_score: field(&rec, 5, line)?,
            expected_rank: field(&rec, 6, line)?,
            delta: field(&rec, 7, line)?,
        });
    }
    Ok(out)
}

/// Writes `model,kendall,spearman`.
pub fn write_evaluation<W: Write>(writer: W, rows: &[ModelEvaluation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "kendall", "spearman"])?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            r.kendall.to_string(),
            r.spearman.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
