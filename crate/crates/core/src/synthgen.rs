//! Seeded synthetic corpora, the two four-migrant toy scenarios, and a naive
//! counting oracle.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`. Uniform draws
//! are `(next_u64() >> 11) * 2^-53`; weighted choices take the first index
//! whose cumulative weight exceeds `u * total`. Each user, in order:
//!
//! 1. draws a corridor with probability proportional to its propensity;
//! 2. for each planted triad containing that corridor (in config order),
//!    draws `u` and adds the third country if `u < boost`, stopping at the
//!    first success;
//! 3. while `u < extra_country_rate`, adds one more country drawn from the
//!    extra-country weights (resampling countries already present).

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counting::{PairKey, TripleKey};
use crate::error::{Error, Result};
use crate::features::haversine_km;
use crate::ingest::{
    Civilization, CountryCode, CountryInfo, CountryRegistry, LatLon, MigrantRecord,
};

/// Largest number of distinct generated codes (`AA`..`ZZ`).
pub const MAX_COUNTRIES: usize = 26 * 26;

/// Code for generated country `i`: `AA`, `AB`, ..., `AZ`, `BA`, ...
pub fn synthetic_code(i: usize) -> CountryCode {
    assert!(i < MAX_COUNTRIES, "country index {i} out of range");
    let s = [b'A' + (i / 26) as u8, b'A' + (i % 26) as u8];
    CountryCode::new(std::str::from_utf8(&s).expect("ascii")).expect("valid code")
}

#[derive(Clone, Debug, PartialEq)]
pub enum PairPropensity {
    /// Same probability for every corridor.
    Uniform(f64),
    /// Corridor weight `m_i * m_j`; extra countries are drawn by mass too.
    Gravity(Vec<f64>),
    /// Per-corridor probabilities; missing corridors get zero. An extra
    /// country is drawn in proportion to the product of its propensities
    /// with every country already in the set.
    Explicit(BTreeMap<PairKey, f64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantedTriad {
    pub key: TripleKey,
    pub boost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_countries: usize,
    pub n_users: usize,
    pub pair_propensity: PairPropensity,
    pub planted_triads: Vec<PlantedTriad>,
    pub extra_country_rate: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn uniform(n_countries: usize, n_users: usize, seed: u64) -> Self {
        Self {
            n_countries,
            n_users,
            pair_propensity: PairPropensity::Uniform(1.0),
            planted_triads: Vec::new(),
            extra_country_rate: 0.3,
            seed,
        }
    }

    pub fn codes(&self) -> Vec<CountryCode> {
        (0..self.n_countries).map(synthetic_code).collect()
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::SynthConfig(format!("{name} {p} outside [0, 1]")));
    }
    Ok(())
}

struct Sampler {
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(weights: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = weights
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        (acc > 0.0).then_some(Self { cumulative })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("nonempty");
        let target = unit(rng) * total;
        let i = self.cumulative.partition_point(|&c| c <= target);
        i.min(self.cumulative.len() - 1)
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Generates a corpus. Identical configs give identical corpora.
pub fn generate(config: &SynthConfig) -> Result<Vec<MigrantRecord>> {
    let n = config.n_countries;
    if !(2..=MAX_COUNTRIES).contains(&n) {
        return Err(Error::SynthConfig(format!(
            "n_countries must be in 2..={MAX_COUNTRIES}, got {n}"
        )));
    }
    check_probability("extra_country_rate", config.extra_country_rate)?;
    if config.extra_country_rate >= 1.0 {
        return Err(Error::SynthConfig(
            "extra_country_rate must be below 1".into(),
        ));
    }
    let codes = config.codes();
    let index: BTreeMap<CountryCode, usize> =
        codes.iter().enumerate().map(|(i, c)| (*c, i)).collect();

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut affinity: Option<Vec<f64>> = None;
    let (pair_weights, extra_weights): (Vec<f64>, Vec<f64>) = match &config.pair_propensity {
        PairPropensity::Uniform(p) => {
            check_probability("pair propensity", *p)?;
            (vec![*p; pairs.len()], vec![1.0; n])
        }
        PairPropensity::Gravity(masses) => {
            if masses.len() != n {
                return Err(Error::SynthConfig(format!(
                    "{} masses for {n} countries",
                    masses.len()
                )));
            }
            if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(Error::SynthConfig(
                    "masses must be finite and nonnegative".into(),
                ));
            }
            (
                pairs.iter().map(|&(i, j)| masses[i] * masses[j]).collect(),
                masses.clone(),
            )
        }
        PairPropensity::Explicit(map) => {
            let mut w = vec![0.0; pairs.len()];
            let mut matrix = vec![0.0; n * n];
            for (key, &p) in map {
                check_probability("pair propensity", p)?;
                let [a, b] = key.countries();
                let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) else {
                    return Err(Error::SynthConfig(format!("corridor {key} not generated")));
                };
                // pairs are laid out row-major over i < j
                let pos = i * n - i * (i + 1) / 2 + (j - i - 1);
                w[pos] = p;
                matrix[i * n + j] = p;
                matrix[j * n + i] = p;
            }
            affinity = Some(matrix);
            (w, vec![1.0; n])
        }
    };
    let pair_sampler = Sampler::new(pair_weights)
        .ok_or_else(|| Error::SynthConfig("no positive corridor propensity".into()))?;
    let extra_sampler = Sampler::new(extra_weights);

    let mut planted: Vec<([usize; 3], f64)> = Vec::new();
    for t in &config.planted_triads {
        check_probability("boost", t.boost)?;
        let mut idx = [0usize; 3];
        for (slot, c) in idx.iter_mut().zip(t.key.countries()) {
            *slot = *index.get(&c).ok_or_else(|| {
                Error::SynthConfig(format!("planted triad {} uses unknown {c}", t.key))
            })?;
        }
        planted.push((idx, t.boost));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.n_users);
    for u in 0..config.n_users {
        let (i, j) = pairs[pair_sampler.draw(&mut rng)];
        let mut set = BTreeSet::from([i, j]);
        for (triad, boost) in &planted {
            if triad.contains(&i) && triad.contains(&j) && unit(&mut rng) < *boost {
                set.extend(triad.iter().copied());
                break;
            }
        }
        if let Some(matrix) = &affinity {
            while set.len() < n && unit(&mut rng) < config.extra_country_rate {
                let weights = (0..n).map(|c| {
                    if set.contains(&c) {
                        0.0
                    } else {
                        set.iter().map(|&x| matrix[x * n + c]).product()
                    }
                });
                match Sampler::new(weights) {
                    Some(s) => {
                        set.insert(s.draw(&mut rng));
                    }
                    None => break,
                }
            }
        } else if let Some(extra) = &extra_sampler {
            while set.len() < n && unit(&mut rng) < config.extra_country_rate {
                // bounded resampling in case the remaining countries carry no weight
                for _ in 0..64 {
                    if set.insert(extra.draw(&mut rng)) {
                        break;
                    }
                }
            }
        }
        out.push(MigrantRecord::new(
            format!("u{u:07}"),
            set.into_iter().map(|k| codes[k]),
        ));
    }
    Ok(out)
}

/// The two four-migrant scenarios. Countries A, B, C, D are encoded as
/// `AA`, `BB`, `CC`, `DD` so that canonical order is preserved.
pub fn toy_scenarios() -> [Vec<MigrantRecord>; 2] {
    let code = |c: char| CountryCode::new(&format!("{c}{c}")).expect("valid code");
    let scenario = |sets: [&str; 4]| -> Vec<MigrantRecord> {
        sets.iter()
            .enumerate()
            .map(|(i, s)| MigrantRecord::new(format!("M{}", i + 1), s.chars().map(code)))
            .collect()
    };
    [
        scenario(["ABC", "AD", "BD", "CD"]),
        scenario(["BCD", "AB", "AC", "AD"]),
    ]
}

/// Metadata for the toy countries: all at distinct points, otherwise bland.
pub fn toy_registry() -> CountryRegistry {
    CountryRegistry::from_entries(["AA", "BB", "CC", "DD"].iter().enumerate().map(|(i, c)| {
        (
            CountryCode::new(c).expect("valid code"),
            CountryInfo {
                centroid: LatLon {
                    lat: 0.0,
                    lon: 10.0 * i as f64,
                },
                region: "toy".into(),
                languages: BTreeSet::from(["xx".to_string()]),
                civilization: Civilization::Western,
                gdp: 1.0,
                colonial_links: BTreeSet::new(),
                visa_free: BTreeSet::new(),
                resident_count: 0,
            },
        )
    }))
}

/// Pair and triple counts from naive per-record enumeration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleTables {
    pub pairs: BTreeMap<[CountryCode; 2], u64>,
    pub triples: BTreeMap<[CountryCode; 3], u64>,
}

/// Reference counter sharing no code with the `counting` module.
pub fn oracle_count(records: &[MigrantRecord]) -> OracleTables {
    let mut out = OracleTables::default();
    for r in records {
        let mut v: Vec<CountryCode> = r.countries.iter().copied().collect();
        v.sort();
        v.dedup();
        let k = v.len();
        for i in 0..k {
            for j in 0..k {
                if i < j {
                    *out.pairs.entry([v[i], v[j]]).or_insert(0) += 1;
                }
                for l in 0..k {
                    if i < j && j < l {
                        *out.triples.entry([v[i], v[j], v[l]]).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    out
}

const REGIONS: [(&str, f64, f64, Civilization, &str); 8] = [
    ("western_europe", 48.0, 5.0, Civilization::Western, "fr"),
    ("eastern_europe", 52.0, 30.0, Civilization::Orthodox, "ru"),
    ("middle_east", 28.0, 45.0, Civilization::Islamic, "ar"),
    ("south_asia", 20.0, 78.0, Civilization::Hindu, "hi"),
    ("east_asia", 33.0, 115.0, Civilization::Sinic, "zh"),
    ("africa", 2.0, 20.0, Civilization::African, "sw"),
    (
        "latin_america",
        -12.0,
        -62.0,
        Civilization::LatinAmerican,
        "es",
    ),
    ("north_america", 42.0, -95.0, Civilization::Western, "en"),
];

/// A reproducible metadata table for `n_countries` generated countries,
/// spread over eight regions with region-typical civilization and language.
pub fn synthetic_registry(n_countries: usize, seed: u64) -> Result<CountryRegistry> {
    if !(3..=MAX_COUNTRIES).contains(&n_countries) {
        return Err(Error::SynthConfig(format!(
            "n_countries must be in 3..={MAX_COUNTRIES}, got {n_countries}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fc0_ffee);
    let mut entries = Vec::with_capacity(n_countries);
    for i in 0..n_countries {
        let (region, lat0, lon0, civ, lang) = REGIONS[i % REGIONS.len()];
        let lat = (lat0 + (unit(&mut rng) - 0.5) * 24.0).clamp(-89.0, 89.0);
        let lon = lon0 + (unit(&mut rng) - 0.5) * 36.0;
        let lon = if lon > 180.0 {
            lon - 360.0
        } else if lon < -180.0 {
            lon + 360.0
        } else {
            lon
        };
        let mut languages = BTreeSet::from([lang.to_string()]);
        if unit(&mut rng) < 0.3 {
            languages.insert(
                ["en", "fr", "es", "ar", "pt"][(unit(&mut rng) * 5.0) as usize % 5].to_string(),
            );
        }
        let civilization = if unit(&mut rng) < 0.85 {
            civ
        } else {
            Civilization::ALL[(unit(&mut rng) * 8.0) as usize % 8]
        };
        // heavy-tailed, in hundreds of billions of USD
        let gdp = (0.05 * (unit(&mut rng) * 6.0).exp() * 100.0).round() / 100.0;
        entries.push((
            synthetic_code(i),
            CountryInfo {
                centroid: LatLon { lat, lon },
                region: region.to_string(),
                languages,
                civilization,
                gdp,
                colonial_links: BTreeSet::new(),
                visa_free: BTreeSet::new(),
                resident_count: 0,
            },
        ));
    }
    for i in 0..n_countries {
        for j in i + 1..n_countries {
            let same_region = i % REGIONS.len() == j % REGIONS.len();
            if unit(&mut rng) < 0.04 {
                let b = entries[j].0;
                entries[i].1.colonial_links.insert(b);
            }
            if unit(&mut rng) < if same_region { 0.7 } else { 0.1 } {
                let (a, b) = (entries[i].0, entries[j].0);
                entries[i].1.visa_free.insert(b);
                entries[j].1.visa_free.insert(a);
            }
        }
    }
    Ok(CountryRegistry::from_entries(entries))
}

/// Corridor propensities that grow with both GDPs and fall with distance,
/// scaled so the largest is 1.
pub fn geographic_propensity(registry: &CountryRegistry) -> BTreeMap<PairKey, f64> {
    let countries: Vec<(CountryCode, &CountryInfo)> = registry.iter().collect();
    let mut raw = BTreeMap::new();
    for (i, (a, ai)) in countries.iter().enumerate() {
        for (b, bi) in &countries[i + 1..] {
            let d = haversine_km(ai.centroid, bi.centroid);
            let w = (ai.gdp + 0.1) * (bi.gdp + 0.1) / (1.0 + d / 1000.0).powi(2);
            raw.insert(PairKey::new(*a, *b).expect("distinct codes"), w);
        }
    }
    let max = raw.values().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for w in raw.values_mut() {
            *w /= max;
        }
    }
    raw
}

/// The bundled demonstration corpus: 60 countries, geographic corridor
/// propensities, and a handful of planted regional triads.
pub fn bundled_preset(n_users: usize, seed: u64) -> Result<(SynthConfig, CountryRegistry)> {
    let n_countries = 60;
    let registry = synthetic_registry(n_countries, seed)?;
    let planted = [
        (0, 8, 16),
        (3, 11, 19),
        (4, 12, 28),
        (6, 14, 22),
        (1, 9, 33),
        (5, 13, 21),
    ]
    .iter()
    .map(|&(a, b, c)| PlantedTriad {
        key: TripleKey::new(synthetic_code(a), synthetic_code(b), synthetic_code(c))
            .expect("distinct codes"),
        boost: 0.6,
    })
    .collect();
    let config = SynthConfig {
        n_countries,
        n_users,
        pair_propensity: PairPropensity::Explicit(geographic_propensity(&registry)),
        planted_triads: planted,
        extra_country_rate: 0.35,
        seed,
    };
    Ok((config, registry))
}
