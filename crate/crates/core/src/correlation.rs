//! Rank correlation coefficients with tie handling.
//!
//! Kendall's tau-b uses Knight's O(n log n) merge-sort formulation.
//! Spearman's rho is the Pearson correlation of fractional ranks.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Outcome of a correlation. `Degenerate` means one side has zero variance
/// and the coefficient is undefined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Correlation {
    Value(f64),
    Degenerate,
}

impl Correlation {
    pub fn value(self) -> Option<f64> {
        match self {
            Correlation::Value(v) => Some(v),
            Correlation::Degenerate => None,
        }
    }
}

impl fmt::Display for Correlation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Correlation::Value(v) => write!(f, "{v}"),
            Correlation::Degenerate => f.write_str("degenerate"),
        }
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::EmptyRanking);
    }
    if let Some(i) = x.iter().chain(y).position(|v| v.is_nan()) {
        return Err(Error::NanScore(i % x.len()));
    }
    Ok(())
}

// -0.0 and 0.0 must compare equal under total_cmp as well.
fn norm(v: f64) -> f64 {
    v + 0.0
}

fn tie_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` ascending and returns the number of inversions removed.
fn sort_counting_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], buf);
    swaps += sort_counting_swaps(&mut v[mid..], buf);

    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            // v[j] jumps ahead of every remaining left element
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b between two equally long sequences.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_lengths(x, y)?;
    let n = x.len() as u64;
    let mut pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (norm(*a), norm(*b))).collect();
    pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = n * (n - 1) / 2;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let n1 = tie_pairs(&xs);
    let n3 = tie_pairs(&pts);

    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = sort_counting_swaps(&mut ys, &mut buf);
    let n2 = tie_pairs(&ys);

    let (dx, dy) = (n0 - n1, n0 - n2);
    if dx == 0 || dy == 0 {
        return Ok(Correlation::Degenerate);
    }
    let numerator = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * swaps as i128;
    let denom = ((dx as u128 * dy as u128) as f64).sqrt();
    Ok(Correlation::Value(
        (numerator as f64 / denom).clamp(-1.0, 1.0),
    ))
}

/// Fractional (average) ranks in ascending order: smallest value gets rank 1.
pub fn fractional_ranks_ascending(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| norm(values[a]).total_cmp(&norm(values[b])));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && norm(values[idx[end]]) == norm(values[idx[start]]) {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Correlation {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Correlation::Degenerate;
    }
    Correlation::Value((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of the fractional ranks of `x` and `y`.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_lengths(x, y)?;
    Ok(pearson(
        &fractional_ranks_ascending(x),
        &fractional_ranks_ascending(y),
    ))
}
