//! Per-triad features: geodesic distance and GDP statistics, plus 0/2/3
//! scores for shared civilization, region, language, colonial link and
//! visa-free status.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::classify::DevianceClass;
use crate::counting::TripleKey;
use crate::error::{Error, Result};
use crate::ingest::{CountryCode, CountryInfo, CountryRegistry, LatLon};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance in kilometres on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km(p1: LatLon, p2: LatLon) -> f64 {
    let (phi1, phi2) = (p1.lat.to_radians(), p2.lat.to_radians());
    let dphi = (p2.lat - p1.lat).to_radians();
    let dlambda = (p2.lon - p1.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
}

impl Stats {
    fn of(values: [f64; 3]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // rounding in the mean can step outside [min, max] for equal inputs
        let avg = (values.iter().sum::<f64>() / 3.0).clamp(min, max);
        Stats { min, max, avg }
    }
}

fn members(key: TripleKey, registry: &CountryRegistry) -> Result<[&CountryInfo; 3]> {
    let [a, b, c] = key.countries();
    Ok([
        registry.try_get(a)?,
        registry.try_get(b)?,
        registry.try_get(c)?,
    ])
}

/// Min, max and mean of the three pairwise centroid distances.
pub fn distance_stats(key: TripleKey, registry: &CountryRegistry) -> Result<Stats> {
    let [a, b, c] = members(key, registry)?;
    Ok(Stats::of([
        haversine_km(a.centroid, b.centroid),
        haversine_km(a.centroid, c.centroid),
        haversine_km(b.centroid, c.centroid),
    ]))
}

/// Min, max and mean over the three member GDPs. The min (max) over pairs of
/// the pair min (max) is the same as over countries, and the mean of the
/// three pair means is the country mean.
pub fn gdp_stats(key: TripleKey, registry: &CountryRegistry) -> Result<Stats> {
    let [a, b, c] = members(key, registry)?;
    Ok(Stats::of([a.gdp, b.gdp, c.gdp]))
}

/// 3 when every pair satisfies `related`, 0 when none does, 2 otherwise.
pub fn common_score<F>(key: TripleKey, mut related: F) -> u8
where
    F: FnMut(CountryCode, CountryCode) -> bool,
{
    let hits = key
        .pairs()
        .iter()
        .filter(|p| {
            let [x, y] = p.countries();
            related(x, y)
        })
        .count();
    match hits {
        0 => 0,
        3 => 3,
        _ => 2,
    }
}

/// The pairwise predicates behind each common-attribute score.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Civilization,
    Region,
    Language,
    ColonialLink,
    VisaFree,
}

impl Relation {
    pub fn holds(
        self,
        x: &CountryInfo,
        x_code: CountryCode,
        y: &CountryInfo,
        y_code: CountryCode,
    ) -> bool {
        match self {
            Relation::Civilization => x.civilization == y.civilization,
            Relation::Region => x.region == y.region,
            Relation::Language => !x.languages.is_disjoint(&y.languages),
            Relation::ColonialLink => {
                x.colonial_links.contains(&y_code) || y.colonial_links.contains(&x_code)
            }
            Relation::VisaFree => x.visa_free.contains(&y_code) && y.visa_free.contains(&x_code),
        }
    }
}

fn relation_score(key: TripleKey, registry: &CountryRegistry, rel: Relation) -> u8 {
    common_score(key, |x, y| match (registry.get(x), registry.get(y)) {
        (Some(xi), Some(yi)) => rel.holds(xi, x, yi, y),
        _ => false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    MinDistance,
    MaxDistance,
    AvgDistance,
    MinGdp,
    MaxGdp,
    AvgGdp,
    CommonCivilization,
    CommonRegion,
    CommonLanguage,
    CommonColonialLink,
    CommonVisa,
}

impl Feature {
    pub const ALL: [Feature; 11] = [
        Feature::MinDistance,
        Feature::MaxDistance,
        Feature::AvgDistance,
        Feature::MinGdp,
        Feature::MaxGdp,
        Feature::AvgGdp,
        Feature::CommonCivilization,
        Feature::CommonRegion,
        Feature::CommonLanguage,
        Feature::CommonColonialLink,
        Feature::CommonVisa,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Feature::MinDistance => "min_distance_km",
            Feature::MaxDistance => "max_distance_km",
            Feature::AvgDistance => "avg_distance_km",
            Feature::MinGdp => "min_gdp",
            Feature::MaxGdp => "max_gdp",
            Feature::AvgGdp => "avg_gdp",
            Feature::CommonCivilization => "common_civilization",
            Feature::CommonRegion => "common_region",
            Feature::CommonLanguage => "common_language",
            Feature::CommonColonialLink => "common_colonial_link",
            Feature::CommonVisa => "common_visa",
        }
    }

    /// Common-attribute scores take only the values 0, 2 and 3.
    pub fn is_categorical(&self) -> bool {
        matches!(
            self,
            Feature::CommonCivilization
                | Feature::CommonRegion
                | Feature::CommonLanguage
                | Feature::CommonColonialLink
                | Feature::CommonVisa
        )
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub min_distance_km: f64,
    pub max_distance_km: f64,
    pub avg_distance_km: f64,
    pub min_gdp: f64,
    pub max_gdp: f64,
    pub avg_gdp: f64,
    pub common_civilization: u8,
    pub common_region: u8,
    pub common_language: u8,
    pub common_colonial_link: u8,
    pub common_visa: u8,
}

impl FeatureVector {
    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::MinDistance => self.min_distance_km,
            Feature::MaxDistance => self.max_distance_km,
            Feature::AvgDistance => self.avg_distance_km,
            Feature::MinGdp => self.min_gdp,
            Feature::MaxGdp => self.max_gdp,
            Feature::AvgGdp => self.avg_gdp,
            Feature::CommonCivilization => self.common_civilization as f64,
            Feature::CommonRegion => self.common_region as f64,
            Feature::CommonLanguage => self.common_language as f64,
            Feature::CommonColonialLink => self.common_colonial_link as f64,
            Feature::CommonVisa => self.common_visa as f64,
        }
    }
}

pub fn feature_vector(key: TripleKey, registry: &CountryRegistry) -> Result<FeatureVector> {
    let d = distance_stats(key, registry)?;
    let g = gdp_stats(key, registry)?;
    Ok(FeatureVector {
        min_distance_km: d.min,
        max_distance_km: d.max,
        avg_distance_km: d.avg,
        min_gdp: g.min,
        max_gdp: g.max,
        avg_gdp: g.avg,
        common_civilization: relation_score(key, registry, Relation::Civilization),
        common_region: relation_score(key, registry, Relation::Region),
        common_language: relation_score(key, registry, Relation::Language),
        common_colonial_link: relation_score(key, registry, Relation::ColonialLink),
        common_visa: relation_score(key, registry, Relation::VisaFree),
    })
}

/// One row of the feature export.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub key: TripleKey,
    pub features: FeatureVector,
    pub class: DevianceClass,
}

/// Empirical CDF as (value, cumulative fraction) points with strictly
/// increasing values. Repeated values collapse onto one point carrying the
/// fraction at or below that value.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => points.push((*v, frac)),
        }
    }
    if let Some(last) = points.last_mut() {
        last.1 = 1.0;
    }
    points
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassCdf {
    pub curves: BTreeMap<DevianceClass, Vec<(f64, f64)>>,
    /// Named classes with no members; they are left out of `curves`.
    pub empty_classes: Vec<DevianceClass>,
}

/// Per-class CDF of one feature over the three named classes.
pub fn class_cdf(rows: &[FeatureRow], feature: Feature) -> ClassCdf {
    let mut out = ClassCdf::default();
    for class in DevianceClass::NAMED {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| r.class == class)
            .map(|r| r.features.get(feature))
            .collect();
        if values.is_empty() {
            out.empty_classes.push(class);
        } else {
            out.curves.insert(class, empirical_cdf(&values));
        }
    }
    out
}

/// Writes `class,feature,value,cumulative_fraction`.
pub fn write_cdfs<W: Write>(writer: W, cdfs: &[(Feature, ClassCdf)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["class", "feature", "value", "cumulative_fraction"])?;
    for (feature, cdf) in cdfs {
        for (class, points) in &cdf.curves {
            for (v, frac) in points {
                w.write_record([
                    class.as_str(),
                    feature.name(),
                    &v.to_string(),
                    &frac.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per triple: the key, all eleven features and the class.
pub fn write_features<W: Write>(writer: W, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["country_a", "country_b", "country_c"];
    header.extend(Feature::ALL.iter().map(|f| f.name()));
    header.push("class");
    w.write_record(&header)?;
    for row in rows {
        let [a, b, c] = row.key.countries();
        let mut rec = vec![a.to_string(), b.to_string(), c.to_string()];
        rec.extend(
            Feature::ALL
                .iter()
                .map(|f| row.features.get(*f).to_string()),
        );
        rec.push(row.class.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features<R: Read>(reader: R) -> Result<Vec<FeatureRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: String| Error::Parse {
            path: String::new(),
            line,
            message: what,
        };
        if rec.len() != 3 + Feature::ALL.len() + 1 {
            return Err(bad(format!("expected 15 fields, got {}", rec.len())));
        }
        let code = |i: usize| CountryCode::new(&rec[i]).map_err(|e| bad(e.to_string()));
        let key = TripleKey::new(code(0)?, code(1)?, code(2)?)?;
        let mut v = [0.0f64; 11];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = rec[3 + i]
                .parse()
                .map_err(|_| bad(format!("bad value for {}", Feature::ALL[i])))?;
        }
        let score = |x: f64| -> Result<u8> {
            if x == 0.0 || x == 2.0 || x == 3.0 {
                Ok(x as u8)
            } else {
                Err(bad(format!("common score {x} not in {{0, 2, 3}}")))
            }
        };
        out.push(FeatureRow {
            key,
            features: FeatureVector {
                min_distance_km: v[0],
                max_distance_km: v[1],
                avg_distance_km: v[2],
                min_gdp: v[3],
                max_gdp: v[4],
                avg_gdp: v[5],
                common_civilization: score(v[6])?,
                common_region: score(v[7])?,
                common_language: score(v[8])?,
                common_colonial_link: score(v[9])?,
                common_visa: score(v[10])?,
            },
            class: rec[14].parse().map_err(bad)?,
        });
    }
    Ok(out)
}
