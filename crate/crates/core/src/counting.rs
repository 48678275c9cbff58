//! Corridor (pair) and cluster (triple) frequency tables.
//!
//! Every migrant contributes once to each pair and each triple of countries
//! in their set, so a record with `k` countries adds `C(k,2)` pair counts and
//! `C(k,3)` triple counts. Tables merge by pointwise sum, which lets disjoint
//! record partitions be counted independently.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{CountryCode, MigrantRecord};

/// A migration corridor: two distinct countries in canonical order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PairKey([CountryCode; 2]);

/// A migration cluster: three distinct countries in canonical order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TripleKey([CountryCode; 3]);

impl PairKey {
    pub fn new(x: CountryCode, y: CountryCode) -> Result<Self> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Ok(Self([x, y])),
            std::cmp::Ordering::Greater => Ok(Self([y, x])),
            std::cmp::Ordering::Equal => Err(Error::RepeatedCountry(x)),
        }
    }

    pub fn countries(&self) -> [CountryCode; 2] {
        self.0
    }
}

impl TripleKey {
    pub fn new(x: CountryCode, y: CountryCode, z: CountryCode) -> Result<Self> {
        let mut k = [x, y, z];
        k.sort_unstable();
        if k[0] == k[1] || k[1] == k[2] {
            return Err(Error::RepeatedCountry(k[1]));
        }
        Ok(Self(k))
    }

    pub fn countries(&self) -> [CountryCode; 3] {
        self.0
    }

    /// The three constituent corridors: (a,b), (a,c), (b,c).
    pub fn pairs(&self) -> [PairKey; 3] {
        let [a, b, c] = self.0;
        [PairKey([a, b]), PairKey([a, c]), PairKey([b, c])]
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0[0], self.0[1])
    }
}

impl fmt::Display for TripleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.0[0], self.0[1], self.0[2])
    }
}

pub fn canonical_pair(x: CountryCode, y: CountryCode) -> Result<PairKey> {
    PairKey::new(x, y)
}

pub fn canonical_triple(x: CountryCode, y: CountryCode, z: CountryCode) -> Result<TripleKey> {
    TripleKey::new(x, y, z)
}

/// Count map keyed by pairs or triples. Only keys with a positive count are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyTable<K: Eq + Hash> {
    counts: HashMap<K, u64>,
}

pub type PairFrequencyTable = FrequencyTable<PairKey>;
pub type TripleFrequencyTable = FrequencyTable<TripleKey>;

impl<K: Eq + Hash> Default for FrequencyTable<K> {
    fn default() -> Self {
        Self {
            counts: HashMap::new(),
        }
    }
}

impl<K: Copy + Eq + Hash + Ord> FrequencyTable<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: K, n: u64) {
        if n > 0 {
            *self.counts.entry(key).or_insert(0) += n;
        }
    }

    /// Zero for keys never observed.
    pub fn get(&self, key: &K) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn contains(&self, key: &K) -> bool {
        self.counts.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Entries sorted ascending by key.
    pub fn sorted(&self) -> Vec<(K, u64)> {
        let mut v: Vec<(K, u64)> = self.counts.iter().map(|(k, n)| (*k, *n)).collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> + '_ {
        self.counts.keys()
    }

    /// Pointwise sum.
    pub fn merge(mut self, other: Self) -> Self {
        let (mut big, small) = if self.counts.len() >= other.counts.len() {
            (std::mem::take(&mut self.counts), other.counts)
        } else {
            (other.counts, std::mem::take(&mut self.counts))
        };
        for (k, n) in small {
            *big.entry(k).or_insert(0) += n;
        }
        Self { counts: big }
    }
}

impl<K: Copy + Eq + Hash + Ord> FromIterator<(K, u64)> for FrequencyTable<K> {
    fn from_iter<I: IntoIterator<Item = (K, u64)>>(iter: I) -> Self {
        let mut t = Self::new();
        for (k, n) in iter {
            t.add(k, n);
        }
        t
    }
}

pub fn merge_tables<K: Copy + Eq + Hash + Ord>(
    t1: FrequencyTable<K>,
    t2: FrequencyTable<K>,
) -> FrequencyTable<K> {
    t1.merge(t2)
}

fn sorted_codes(record: &MigrantRecord) -> Vec<CountryCode> {
    // BTreeSet iteration is already ascending
    record.countries.iter().copied().collect()
}

fn add_pairs(codes: &[CountryCode], table: &mut PairFrequencyTable) {
    for (i, &a) in codes.iter().enumerate() {
        for &b in &codes[i + 1..] {
            table.add(PairKey([a, b]), 1);
        }
    }
}

fn add_triples(codes: &[CountryCode], table: &mut TripleFrequencyTable) {
    for (i, &a) in codes.iter().enumerate() {
        for (j, &b) in codes.iter().enumerate().skip(i + 1) {
            for &c in &codes[j + 1..] {
                table.add(TripleKey([a, b, c]), 1);
            }
        }
    }
}

pub fn count_corridors(records: &[MigrantRecord]) -> PairFrequencyTable {
    let mut t = PairFrequencyTable::new();
    for r in records {
        add_pairs(&sorted_codes(r), &mut t);
    }
    t
}

pub fn count_clusters(records: &[MigrantRecord]) -> TripleFrequencyTable {
    let mut t = TripleFrequencyTable::new();
    for r in records {
        add_triples(&sorted_codes(r), &mut t);
    }
    t
}

/// Both tables in one pass over the records.
pub fn count_tables(records: &[MigrantRecord]) -> (PairFrequencyTable, TripleFrequencyTable) {
    let mut pairs = PairFrequencyTable::new();
    let mut triples = TripleFrequencyTable::new();
    for r in records {
        let codes = sorted_codes(r);
        add_pairs(&codes, &mut pairs);
        add_triples(&codes, &mut triples);
    }
    (pairs, triples)
}

/// Counts `records` split into `workers` contiguous shards on a dedicated
/// thread pool, then merges the shard tables. The result does not depend on
/// the worker count.
pub fn count_parallel(
    records: &[MigrantRecord],
    workers: usize,
) -> Result<(PairFrequencyTable, TripleFrequencyTable)> {
    let workers = workers.max(1);
    if workers == 1 || records.len() < 2 {
        return Ok(count_tables(records));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let shard = records.len().div_ceil(workers);
    Ok(pool.install(|| {
        records.par_chunks(shard).map(count_tables).reduce(
            || (PairFrequencyTable::new(), TripleFrequencyTable::new()),
            |(p1, t1), (p2, t2)| (p1.merge(p2), t1.merge(t2)),
        )
    }))
}

/// Every triple whose three corridors all have a positive count, whether or
/// not the triple itself was observed. Sorted ascending.
pub fn pair_complete_triples(pairs: &PairFrequencyTable) -> Vec<TripleKey> {
    let mut adj: BTreeMap<CountryCode, BTreeSet<CountryCode>> = BTreeMap::new();
    for PairKey([a, b]) in pairs.keys().copied() {
        // forward adjacency only: a < b
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default();
    }
    let mut out = Vec::new();
    for (&a, higher) in &adj {
        for &b in higher {
            let Some(b_higher) = adj.get(&b) else {
                continue;
            };
            for &c in higher.range(b..).skip(1) {
                if b_higher.contains(&c) {
                    out.push(TripleKey([a, b, c]));
                }
            }
        }
    }
    out
}

/// Writes `country_a,country_b,count` sorted ascending by key.
pub fn write_pair_table<W: Write>(writer: W, table: &PairFrequencyTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["country_a", "country_b", "count"])?;
    for (PairKey([a, b]), n) in table.sorted() {
        w.write_record([a.as_str(), b.as_str(), &n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `country_a,country_b,country_c,count` sorted ascending by key.
pub fn write_triple_table<W: Write>(writer: W, table: &TripleFrequencyTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["country_a", "country_b", "country_c", "count"])?;
    for (TripleKey([a, b, c]), n) in table.sorted() {
        w.write_record([a.as_str(), b.as_str(), c.as_str(), &n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: String::new(),
        line,
        message: message.into(),
    }
}

fn read_rows<R: Read, const N: usize>(reader: R) -> Result<Vec<([CountryCode; N], u64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != N + 1 {
            return Err(parse_error(
                line,
                format!("expected {} fields, got {}", N + 1, rec.len()),
            ));
        }
        let mut codes = [CountryCode::new("AA")?; N];
        for (slot, field) in codes.iter_mut().zip(rec.iter()) {
            *slot = CountryCode::new(field).map_err(|e| parse_error(line, e.to_string()))?;
        }
        let n: u64 = rec[N]
            .parse()
            .map_err(|_| parse_error(line, format!("bad count {:?}", &rec[N])))?;
        out.push((codes, n));
    }
    Ok(out)
}

pub fn read_pair_table<R: Read>(reader: R) -> Result<PairFrequencyTable> {
    let mut t = PairFrequencyTable::new();
    for ([a, b], n) in read_rows::<_, 2>(reader)? {
        t.add(PairKey::new(a, b)?, n);
    }
    Ok(t)
}

pub fn read_triple_table<R: Read>(reader: R) -> Result<TripleFrequencyTable> {
    let mut t = TripleFrequencyTable::new();
    for ([a, b, c], n) in read_rows::<_, 3>(reader)? {
        t.add(TripleKey::new(a, b, c)?, n);
    }
    Ok(t)
}
