//! Deviance classes from the delta ordering.
//!
//! Triples are sorted by delta descending and cut into five positional
//! fifths. The first fifth is HIGHER, the middle fifth EXPECTED, the last
//! fifth LOWER; the two fifths in between are left UNASSIGNED.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::counting::TripleKey;
use crate::error::{Error, Result};
use crate::ingest::CountryCode;
use crate::ranking::{delta_order, RankedTriple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DevianceClass {
    Higher,
    Expected,
    Lower,
    Unassigned,
}

impl DevianceClass {
    pub const NAMED: [DevianceClass; 3] = [
        DevianceClass::Higher,
        DevianceClass::Expected,
        DevianceClass::Lower,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DevianceClass::Higher => "HIGHER",
            DevianceClass::Expected => "EXPECTED",
            DevianceClass::Lower => "LOWER",
            DevianceClass::Unassigned => "UNASSIGNED",
        }
    }

    pub fn is_named(&self) -> bool {
        *self != DevianceClass::Unassigned
    }
}

impl fmt::Display for DevianceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DevianceClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HIGHER" => Ok(DevianceClass::Higher),
            "EXPECTED" => Ok(DevianceClass::Expected),
            "LOWER" => Ok(DevianceClass::Lower),
            "UNASSIGNED" => Ok(DevianceClass::Unassigned),
            other => Err(format!("unknown class {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedTriple {
    pub key: TripleKey,
    pub delta: f64,
    pub class: DevianceClass,
}

/// Class for position `pos` (0-based) in a delta-descending list of `n`.
pub fn class_at(pos: usize, n: usize) -> DevianceClass {
    let fifth = n / 5;
    let center = 2 * n / 5;
    if pos < fifth {
        DevianceClass::Higher
    } else if pos >= n - fifth {
        DevianceClass::Lower
    } else if (center..center + fifth).contains(&pos) {
        DevianceClass::Expected
    } else {
        DevianceClass::Unassigned
    }
}

/// Assigns classes. Output is in delta-descending order, ties broken by key.
pub fn stratify(ranked: &[RankedTriple]) -> Result<Vec<ClassifiedTriple>> {
    let n = ranked.len();
    if n < 5 {
        return Err(Error::TooFewTriples(n));
    }
    let mut sorted: Vec<&RankedTriple> = ranked.iter().collect();
    sorted.sort_by(|a, b| delta_order(a, b));
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(pos, r)| ClassifiedTriple {
            key: r.key,
            delta: r.delta,
            class: class_at(pos, n),
        })
        .collect())
}

/// Writes `country_a,country_b,country_c,delta,class` in the given order.
pub fn write_classes<W: Write>(writer: W, classes: &[ClassifiedTriple]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["country_a", "country_b", "country_c", "delta", "class"])?;
    for c in classes {
        let [a, b, cc] = c.key.countries();
        w.write_record([
            a.as_str(),
            b.as_str(),
            cc.as_str(),
            &c.delta.to_string(),
            c.class.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_classes<R: Read>(reader: R) -> Result<Vec<ClassifiedTriple>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Parse {
            path: String::new(),
            line,
            message: format!("bad {what}"),
        };
        if rec.len() != 5 {
            return Err(bad("field count"));
        }
        let code = |i: usize| CountryCode::new(&rec[i]).map_err(|_| bad("country code"));
        out.push(ClassifiedTriple {
            key: TripleKey::new(code(0)?, code(1)?, code(2)?)?,
            delta: rec[3].parse().map_err(|_| bad("delta"))?,
            class: rec[4].parse().map_err(|_| bad("class"))?,
        });
    }
    Ok(out)
}
