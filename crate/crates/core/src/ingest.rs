//! Migrant records, country metadata, and the eligibility filters that turn
//! raw inputs into an analysis universe.
//!
//! Migrant records are line-delimited JSON objects:
//!
//! ```text
//! {"user_id": "u1", "countries": ["BR", "FR", "HU"]}
//! ```
//!
//! Country metadata is a comma-separated table with the header
//! `code,lat,lon,region,languages,civilization,gdp,colonial_links,visa_free`.
//! Multi-valued columns separate entries with `|`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// ISO-3166-1 alpha-2 country code, stored upper-case.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self> {
        match code.as_bytes() {
            [a, b] if a.is_ascii_alphabetic() && b.is_ascii_alphabetic() => {
                Ok(Self([a.to_ascii_uppercase(), b.to_ascii_uppercase()]))
            }
            _ => Err(Error::InvalidCode(code.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        // Both bytes are ASCII letters by construction.
        std::str::from_utf8(&self.0).expect("ascii country code")
    }
}

impl FromStr for CountryCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s.trim())
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CountryCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        CountryCode::new(&s).map_err(serde::de::Error::custom)
    }
}

/// One user's de-duplicated set of countries lived in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrantRecord {
    pub user_id: String,
    pub countries: BTreeSet<CountryCode>,
}

impl MigrantRecord {
    pub fn new<I>(user_id: impl Into<String>, countries: I) -> Self
    where
        I: IntoIterator<Item = CountryCode>,
    {
        Self {
            user_id: user_id.into(),
            countries: countries.into_iter().collect(),
        }
    }

    pub fn is_migrant(&self) -> bool {
        self.countries.len() >= 2
    }
}

/// A problem tied to one line of a record stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ParsedRecords {
    pub records: Vec<MigrantRecord>,
    /// Lines that could not be decoded at all; no record was produced.
    pub malformed: Vec<LineError>,
    /// Codes dropped from otherwise valid lines.
    pub invalid_codes: Vec<LineError>,
}

#[derive(Deserialize)]
struct RawRecord {
    user_id: String,
    countries: Vec<String>,
}

enum LineOutcome {
    Blank,
    Record(MigrantRecord, Vec<String>),
    Malformed(String),
}

fn parse_line(text: &str) -> LineOutcome {
    if text.trim().is_empty() {
        return LineOutcome::Blank;
    }
    let raw: RawRecord = match serde_json::from_str(text) {
        Ok(raw) => raw,
        Err(e) => return LineOutcome::Malformed(e.to_string()),
    };
    let mut countries = BTreeSet::new();
    let mut rejected = Vec::new();
    for code in &raw.countries {
        match CountryCode::new(code.trim()) {
            Ok(c) => {
                countries.insert(c);
            }
            Err(_) => rejected.push(code.clone()),
        }
    }
    LineOutcome::Record(
        MigrantRecord {
            user_id: raw.user_id,
            countries,
        },
        rejected,
    )
}

/// Parses a line-delimited record stream.
///
/// Lines are decoded in parallel and merged back in input order. Blank lines
/// are skipped. A duplicate `user_id` anywhere in the stream is a hard error.
pub fn parse_migrant_records<R: BufRead>(reader: R) -> Result<ParsedRecords> {
    let lines = reader.lines().collect::<std::io::Result<Vec<_>>>()?;
    let outcomes: Vec<LineOutcome> = lines.par_iter().map(|l| parse_line(l)).collect();

    let mut parsed = ParsedRecords::default();
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        let line = idx as u64 + 1;
        match outcome {
            LineOutcome::Blank => {}
            LineOutcome::Malformed(message) => parsed.malformed.push(LineError { line, message }),
            LineOutcome::Record(record, rejected) => {
                for code in rejected {
                    parsed.invalid_codes.push(LineError {
                        line,
                        message: format!("invalid country code {code:?} dropped"),
                    });
                }
                parsed.records.push(record);
            }
        }
    }

    let mut seen = HashMap::with_capacity(parsed.records.len());
    let mut dups = BTreeSet::new();
    for r in &parsed.records {
        if seen.insert(r.user_id.as_str(), ()).is_some() {
            dups.insert(r.user_id.clone());
        }
    }
    if !dups.is_empty() {
        return Err(Error::DuplicateUsers(dups.into_iter().collect()));
    }
    Ok(parsed)
}

/// Writes records in the same line-delimited format `parse_migrant_records` reads.
pub fn write_migrant_records<W: Write>(mut writer: W, records: &[MigrantRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Metadata(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Metadata(format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        Ok(Self { lat, lon })
    }
}

/// The eight civilization labels used for the common-civilization feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Civilization {
    African,
    Hindu,
    Islamic,
    Japanese,
    LatinAmerican,
    Orthodox,
    Sinic,
    Western,
}

impl Civilization {
    pub const ALL: [Civilization; 8] = [
        Civilization::African,
        Civilization::Hindu,
        Civilization::Islamic,
        Civilization::Japanese,
        Civilization::LatinAmerican,
        Civilization::Orthodox,
        Civilization::Sinic,
        Civilization::Western,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Civilization::African => "african",
            Civilization::Hindu => "hindu",
            Civilization::Islamic => "islamic",
            Civilization::Japanese => "japanese",
            Civilization::LatinAmerican => "latin_american",
            Civilization::Orthodox => "orthodox",
            Civilization::Sinic => "sinic",
            Civilization::Western => "western",
        }
    }
}

impl FromStr for Civilization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Civilization::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| Error::Metadata(format!("unknown civilization {s:?}")))
    }
}

impl fmt::Display for Civilization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountryInfo {
    pub centroid: LatLon,
    pub region: String,
    pub languages: BTreeSet<String>,
    pub civilization: Civilization,
    /// Hundreds of billions of USD.
    pub gdp: f64,
    pub colonial_links: BTreeSet<CountryCode>,
    pub visa_free: BTreeSet<CountryCode>,
    /// Users who listed this country; zero until `filter_universe` runs.
    pub resident_count: u64,
}

/// Per-country metadata. Immutable once loaded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CountryRegistry {
    countries: BTreeMap<CountryCode, CountryInfo>,
}

impl CountryRegistry {
    /// Builds a registry from already-validated entries, symmetrizing
    /// relations the same way `load_country_registry` does. Relation entries
    /// naming unknown codes are dropped silently.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (CountryCode, CountryInfo)>,
    {
        let mut diagnostics = Vec::new();
        Self::symmetrized(entries.into_iter().collect(), &mut diagnostics)
    }

    fn symmetrized(
        mut countries: BTreeMap<CountryCode, CountryInfo>,
        diagnostics: &mut Vec<String>,
    ) -> Self {
        let known: BTreeSet<CountryCode> = countries.keys().copied().collect();
        for (code, info) in countries.iter_mut() {
            for (name, set) in [
                ("colonial link", &mut info.colonial_links),
                ("visa-free partner", &mut info.visa_free),
            ] {
                set.retain(|p| {
                    let keep = known.contains(p) && p != code;
                    if !keep {
                        diagnostics.push(format!("{code}: dropped {name} {p}"));
                    }
                    keep
                });
            }
        }

        // colonial links: union of both directions
        let mut colonial: Vec<(CountryCode, CountryCode)> = Vec::new();
        for (code, info) in &countries {
            for p in &info.colonial_links {
                colonial.push((*p, *code));
            }
        }
        for (a, b) in colonial {
            if let Some(info) = countries.get_mut(&a) {
                info.colonial_links.insert(b);
            }
        }

        // visa-free: only keep partners that list us back
        let visa: BTreeMap<CountryCode, BTreeSet<CountryCode>> = countries
            .iter()
            .map(|(c, i)| (*c, i.visa_free.clone()))
            .collect();
        for (code, info) in countries.iter_mut() {
            info.visa_free
                .retain(|p| visa.get(p).is_some_and(|back| back.contains(code)));
        }

        Self { countries }
    }

    pub fn get(&self, code: CountryCode) -> Option<&CountryInfo> {
        self.countries.get(&code)
    }

    pub fn try_get(&self, code: CountryCode) -> Result<&CountryInfo> {
        self.get(code).ok_or(Error::UnknownCountry(code))
    }

    pub fn contains(&self, code: CountryCode) -> bool {
        self.countries.contains_key(&code)
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn codes(&self) -> impl Iterator<Item = CountryCode> + '_ {
        self.countries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CountryCode, &CountryInfo)> + '_ {
        self.countries.iter().map(|(c, i)| (*c, i))
    }
}

#[derive(Debug)]
pub struct RegistryLoad {
    pub registry: CountryRegistry,
    /// Rejected rows and dropped relation entries, in file order.
    pub diagnostics: Vec<String>,
}

const METADATA_COLUMNS: [&str; 9] = [
    "code",
    "lat",
    "lon",
    "region",
    "languages",
    "civilization",
    "gdp",
    "colonial_links",
    "visa_free",
];

#[derive(Deserialize)]
struct RawCountryRow {
    code: String,
    lat: String,
    lon: String,
    region: String,
    languages: String,
    civilization: String,
    gdp: String,
    colonial_links: String,
    visa_free: String,
}

fn split_multi(field: &str) -> impl Iterator<Item = &str> {
    field.split('|').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_float(name: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Metadata(format!("{name} {value:?} is not a finite number")))
}

fn parse_country_row(
    row: RawCountryRow,
    diagnostics: &mut Vec<String>,
) -> Result<(CountryCode, CountryInfo)> {
    let code = CountryCode::new(row.code.trim())?;
    let centroid = LatLon::new(parse_float("lat", &row.lat)?, parse_float("lon", &row.lon)?)?;
    let gdp = parse_float("gdp", &row.gdp)?;
    if gdp < 0.0 {
        return Err(Error::Metadata(format!("negative gdp {gdp}")));
    }
    let civilization = row.civilization.parse()?;
    let mut relation = |field: &str, name: &str| -> BTreeSet<CountryCode> {
        split_multi(field)
            .filter_map(|p| match CountryCode::new(p) {
                Ok(c) => Some(c),
                Err(_) => {
                    diagnostics.push(format!("{code}: dropped malformed {name} {p:?}"));
                    None
                }
            })
            .collect()
    };
    let colonial_links = relation(&row.colonial_links, "colonial link");
    let visa_free = relation(&row.visa_free, "visa-free partner");
    Ok((
        code,
        CountryInfo {
            centroid,
            region: row.region.trim().to_string(),
            languages: split_multi(&row.languages)
                .map(|l| l.to_ascii_lowercase())
                .collect(),
            civilization,
            gdp,
            colonial_links,
            visa_free,
            resident_count: 0,
        },
    ))
}

/// Loads the country metadata table.
///
/// Rows with out-of-range coordinates, negative GDP, an unknown civilization
/// label, or a repeated code are rejected with a diagnostic. Relation entries
/// that name codes absent from the table are dropped with a diagnostic.
/// Colonial links are stored on both sides; visa-free status is kept only
/// where both countries list each other.
pub fn load_country_registry<R: Read>(reader: R) -> Result<RegistryLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?;
    let missing: Vec<&str> = METADATA_COLUMNS
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Metadata(format!(
            "missing columns: {}",
            missing.join(", ")
        )));
    }
    let mut countries = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for (idx, row) in rdr.deserialize::<RawCountryRow>().enumerate() {
        let row_no = idx + 2;
        let row = match row {
            Ok(row) => row,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => {
                diagnostics.push(format!("row {row_no}: rejected: {e}"));
                continue;
            }
        };
        match parse_country_row(row, &mut diagnostics) {
            Ok((code, info)) => match countries.entry(code) {
                Entry::Occupied(_) => {
                    diagnostics.push(format!("row {row_no}: rejected: duplicate code {code}"))
                }
                Entry::Vacant(slot) => {
                    slot.insert(info);
                }
            },
            Err(e) => diagnostics.push(format!("row {row_no}: rejected: {e}")),
        }
    }
    let registry = CountryRegistry::symmetrized(countries, &mut diagnostics);
    Ok(RegistryLoad {
        registry,
        diagnostics,
    })
}

/// Writes the registry in the format `load_country_registry` reads, sorted by code.
pub fn write_country_registry<W: Write>(writer: W, registry: &CountryRegistry) -> Result<()> {
    let join =
        |set: &BTreeSet<CountryCode>| set.iter().map(|c| c.as_str()).collect::<Vec<_>>().join("|");
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METADATA_COLUMNS)?;
    for (code, info) in registry.iter() {
        w.write_record([
            code.to_string(),
            info.centroid.lat.to_string(),
            info.centroid.lon.to_string(),
            info.region.clone(),
            info.languages.iter().cloned().collect::<Vec<_>>().join("|"),
            info.civilization.to_string(),
            info.gdp.to_string(),
            join(&info.colonial_links),
            join(&info.visa_free),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of applying the eligibility filters.
#[derive(Clone, Debug, PartialEq)]
pub struct Universe {
    pub records: Vec<MigrantRecord>,
    /// Countries at or above the threshold, with `resident_count` filled in.
    pub registry: CountryRegistry,
    /// Residents per country over the unfiltered corpus, including codes the
    /// registry does not know.
    pub resident_counts: BTreeMap<CountryCode, u64>,
}

/// Counts, per country, how many records list it.
pub fn resident_counts(records: &[MigrantRecord]) -> BTreeMap<CountryCode, u64> {
    let mut counts = BTreeMap::new();
    for r in records {
        for &c in &r.countries {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    counts
}

/// Applies the residence threshold and the two-country migrant rule.
///
/// Resident counts are taken once over the input corpus; countries below
/// `min_residents` (or missing from the registry) are removed from the
/// registry and from every record, and records left with fewer than two
/// countries are dropped.
pub fn filter_universe(
    records: &[MigrantRecord],
    registry: &CountryRegistry,
    min_residents: u64,
) -> Result<Universe> {
    let counts = resident_counts(records);
    filter_with_counts(records, registry, counts, min_residents)
}

/// Same as [`filter_universe`] but with resident counts supplied by the
/// caller. Re-running it on its own output with the same counts is a no-op.
pub fn filter_with_counts(
    records: &[MigrantRecord],
    registry: &CountryRegistry,
    counts: BTreeMap<CountryCode, u64>,
    min_residents: u64,
) -> Result<Universe> {
    if min_residents == 0 {
        return Err(Error::ZeroThreshold);
    }
    let retained: BTreeMap<CountryCode, CountryInfo> = registry
        .iter()
        .filter_map(|(code, info)| {
            let n = counts.get(&code).copied().unwrap_or(0);
            (n >= min_residents).then(|| {
                let mut info = info.clone();
                info.resident_count = n;
                (code, info)
            })
        })
        .collect();
    let mut diagnostics = Vec::new();
    let registry = CountryRegistry::symmetrized(retained, &mut diagnostics);

    let records = records
        .iter()
        .filter_map(|r| {
            let countries: BTreeSet<CountryCode> = r
                .countries
                .iter()
                .copied()
                .filter(|c| registry.contains(*c))
                .collect();
            (countries.len() >= 2).then(|| MigrantRecord {
                user_id: r.user_id.clone(),
                countries,
            })
        })
        .collect();

    Ok(Universe {
        records,
        registry,
        resident_counts: counts,
    })
}
