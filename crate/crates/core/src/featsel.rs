//! Feature importance for separating the three named deviance classes,
//! scored by information gain and the χ² statistic of the feature-by-class
//! contingency table.

use std::collections::BTreeMap;
use std::io::Write;

use crate::classify::DevianceClass;
use crate::error::{Error, Result};
use crate::features::{Feature, FeatureRow};

/// Equal-frequency binning. Values are sorted and position `i` of `n` goes to
/// bin `floor(i * bins / n)`; equal values share the bin of their first
/// position. Bin labels are compacted to `0..k`, so a constant input yields a
/// single bin.
pub fn discretize(values: &[f64], bins: usize) -> Result<Vec<usize>> {
    if bins < 2 {
        return Err(Error::TooFewBins(bins));
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut labels = vec![0usize; n];
    let mut next_label = 0;
    let mut last_raw: Option<usize> = None;
    let mut first = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && values[i] != values[order[pos - 1]] {
            first = pos;
        }
        let raw = first * bins / n;
        if last_raw.is_some_and(|r| r != raw) {
            next_label += 1;
        }
        last_raw = Some(raw);
        labels[i] = next_label;
    }
    Ok(labels)
}

fn entropy_of_counts<'a, I>(counts: I, total: u64) -> f64
where
    I: IntoIterator<Item = &'a u64>,
{
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .into_iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    if h <= 0.0 {
        0.0
    } else {
        h
    }
}

/// Shannon entropy in bits of a label sequence.
pub fn entropy<L: Ord>(labels: &[L]) -> f64 {
    let mut counts: BTreeMap<&L, u64> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    entropy_of_counts(counts.values(), labels.len() as u64)
}

fn label_index<L: Ord>(labels: &[L]) -> BTreeMap<&L, usize> {
    let mut m: BTreeMap<&L, usize> = labels.iter().map(|l| (l, 0)).collect();
    for (i, v) in m.values_mut().enumerate() {
        *v = i;
    }
    m
}

/// Rows are feature bins, columns are classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    cells: Vec<Vec<u64>>,
    row_totals: Vec<u64>,
    col_totals: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds a table from raw cell counts. All rows must be equally long.
    pub fn from_cells(cells: Vec<Vec<u64>>) -> Result<Self> {
        let width = cells.first().map_or(0, Vec::len);
        if let Some(bad) = cells.iter().find(|r| r.len() != width) {
            return Err(Error::LengthMismatch(width, bad.len()));
        }
        let row_totals: Vec<u64> = cells.iter().map(|r| r.iter().sum()).collect();
        let col_totals: Vec<u64> = (0..width)
            .map(|j| cells.iter().map(|r| r[j]).sum())
            .collect();
        let total = row_totals.iter().sum();
        Ok(Self {
            cells,
            row_totals,
            col_totals,
            total,
        })
    }

    /// Cross-tabulates paired labels; rows and columns follow label order.
    pub fn from_labels<R: Ord, C: Ord>(rows: &[R], cols: &[C]) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::LengthMismatch(rows.len(), cols.len()));
        }
        let ri = label_index(rows);
        let ci = label_index(cols);
        let mut cells = vec![vec![0u64; ci.len()]; ri.len()];
        for (r, c) in rows.iter().zip(cols) {
            cells[ri[r]][ci[c]] += 1;
        }
        Self::from_cells(cells)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    /// Entropy of the column (class) margin in bits.
    pub fn class_entropy(&self) -> f64 {
        entropy_of_counts(&self.col_totals, self.total)
    }

    /// H(class) − H(class | row), clamped to `[0, H(class)]`.
    pub fn information_gain(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let h = self.class_entropy();
        let n = self.total as f64;
        let conditional: f64 = self
            .cells
            .iter()
            .zip(&self.row_totals)
            .filter(|(_, &rt)| rt > 0)
            .map(|(row, &rt)| rt as f64 / n * entropy_of_counts(row, rt))
            .sum();
        (h - conditional).clamp(0.0, h)
    }

    /// Pearson χ² against row/column-margin independence. Cells whose
    /// expected count is zero are skipped.
    pub fn chi_squared(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        let mut chi2 = 0.0;
        for (row, &rt) in self.cells.iter().zip(&self.row_totals) {
            for (&obs, &ct) in row.iter().zip(&self.col_totals) {
                let expected = rt as f64 * ct as f64 / n;
                if expected > 0.0 {
                    let d = obs as f64 - expected;
                    chi2 += d * d / expected;
                }
            }
        }
        chi2
    }
}

pub fn information_gain<R: Ord, C: Ord>(bins: &[R], classes: &[C]) -> Result<f64> {
    Ok(ContingencyTable::from_labels(bins, classes)?.information_gain())
}

pub fn chi_squared<R: Ord, C: Ord>(bins: &[R], classes: &[C]) -> Result<f64> {
    Ok(ContingencyTable::from_labels(bins, classes)?.chi_squared())
}

/// Raw values of one feature, one entry per triple.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureColumn {
    /// Binned by [`discretize`] before scoring.
    Continuous(Vec<f64>),
    /// Used as-is.
    Categorical(Vec<usize>),
}

impl FeatureColumn {
    fn len(&self) -> usize {
        match self {
            FeatureColumn::Continuous(v) => v.len(),
            FeatureColumn::Categorical(v) => v.len(),
        }
    }

    fn subset(&self, keep: &[bool]) -> FeatureColumn {
        fn pick<T: Copy>(v: &[T], keep: &[bool]) -> Vec<T> {
            v.iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(x, _)| *x)
                .collect()
        }
        match self {
            FeatureColumn::Continuous(v) => FeatureColumn::Continuous(pick(v, keep)),
            FeatureColumn::Categorical(v) => FeatureColumn::Categorical(pick(v, keep)),
        }
    }

    fn labels(&self, bins: usize) -> Result<Vec<usize>> {
        match self {
            FeatureColumn::Continuous(v) => discretize(v, bins),
            FeatureColumn::Categorical(v) => Ok(v.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureImportance {
    pub feature: String,
    pub ig_value: f64,
    pub ig_rank: usize,
    pub chi2_value: f64,
    pub chi2_rank: usize,
}

/// Importance rows sorted by IG rank.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImportanceReport {
    pub rows: Vec<FeatureImportance>,
}

impl ImportanceReport {
    pub fn get(&self, feature: &str) -> Option<&FeatureImportance> {
        self.rows.iter().find(|r| r.feature == feature)
    }
}

fn assign_ranks(
    rows: &mut [FeatureImportance],
    value: fn(&FeatureImportance) -> f64,
    set: fn(&mut FeatureImportance, usize),
) {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        value(&rows[b])
            .total_cmp(&value(&rows[a]))
            .then_with(|| rows[a].feature.cmp(&rows[b].feature))
    });
    for (rank, i) in order.into_iter().enumerate() {
        set(&mut rows[i], rank + 1);
    }
}

/// Scores every column against the class labels. Only triples in the three
/// named classes take part. Ranks run from 1 (largest value) with ties
/// broken by feature name.
pub fn rank_feature_columns(
    columns: &[(String, FeatureColumn)],
    classes: &[DevianceClass],
    bins: usize,
) -> Result<ImportanceReport> {
    if columns.len() < 2 {
        return Err(Error::TooFewFeatures(columns.len()));
    }
    if bins < 2 {
        return Err(Error::TooFewBins(bins));
    }
    for class in DevianceClass::NAMED {
        if !classes.contains(&class) {
            return Err(Error::MissingClass(class.as_str()));
        }
    }
    let keep: Vec<bool> = classes.iter().map(DevianceClass::is_named).collect();
    let kept_classes: Vec<DevianceClass> =
        classes.iter().copied().filter(|c| c.is_named()).collect();

    let mut rows = Vec::with_capacity(columns.len());
    for (name, column) in columns {
        if column.len() != classes.len() {
            return Err(Error::LengthMismatch(column.len(), classes.len()));
        }
        let labels = column.subset(&keep).labels(bins)?;
        let table = ContingencyTable::from_labels(&labels, &kept_classes)?;
        rows.push(FeatureImportance {
            feature: name.clone(),
            ig_value: table.information_gain(),
            ig_rank: 0,
            chi2_value: table.chi_squared(),
            chi2_rank: 0,
        });
    }
    assign_ranks(&mut rows, |r| r.ig_value, |r, k| r.ig_rank = k);
    assign_ranks(&mut rows, |r| r.chi2_value, |r, k| r.chi2_rank = k);
    rows.sort_by_key(|r| r.ig_rank);
    Ok(ImportanceReport { rows })
}

/// Ranks the eleven triad features.
pub fn rank_features(rows: &[FeatureRow], bins: usize) -> Result<ImportanceReport> {
    let columns: Vec<(String, FeatureColumn)> = Feature::ALL
        .iter()
        .map(|&f| {
            let column = if f.is_categorical() {
                FeatureColumn::Categorical(
                    rows.iter().map(|r| r.features.get(f) as usize).collect(),
                )
            } else {
                FeatureColumn::Continuous(rows.iter().map(|r| r.features.get(f)).collect())
            };
            (f.name().to_string(), column)
        })
        .collect();
    let classes: Vec<DevianceClass> = rows.iter().map(|r| r.class).collect();
    rank_feature_columns(&columns, &classes, bins)
}

/// Writes `feature,ig_rank,ig_value,chi2_rank,chi2_value` sorted by IG rank.
pub fn write_importance<W: Write>(writer: W, report: &ImportanceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["feature", "ig_rank", "ig_value", "chi2_rank", "chi2_value"])?;
    for r in &report.rows {
        w.write_record([
            r.feature.clone(),
            r.ig_rank.to_string(),
            r.ig_value.to_string(),
            r.chi2_rank.to_string(),
            r.chi2_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
