//! Corridor and cluster statistics for multi-country residence histories.
//!
//! The pipeline runs: [`ingest`] (records, metadata, residence threshold),
//! [`counting`] (pair and triple tables), [`ranking`] (expected vs actual
//! rankings and model evaluation), [`classify`] (deviance classes),
//! [`features`] (per-triad features and CDFs) and [`featsel`] (information
//! gain and χ² importance). [`synthgen`] builds reproducible test corpora.

pub mod classify;
pub mod correlation;
pub mod counting;
pub mod error;
pub mod featsel;
pub mod features;
pub mod ingest;
pub mod ranking;
pub mod synthgen;

pub use classify::{stratify, ClassifiedTriple, DevianceClass};
pub use correlation::{kendall_tau, spearman_rho, Correlation};
pub use counting::{
    canonical_pair, canonical_triple, count_clusters, count_corridors, count_parallel,
    count_tables, merge_tables, PairFrequencyTable, PairKey, TripleFrequencyTable, TripleKey,
};
pub use error::{Error, Result};
pub use featsel::{rank_features, ImportanceReport};
pub use features::{feature_vector, haversine_km, Feature, FeatureRow, FeatureVector};
pub use ingest::{
    filter_universe, load_country_registry, parse_migrant_records, CountryCode, CountryRegistry,
    LatLon, MigrantRecord, Universe,
};
pub use ranking::{
    evaluate_models, rank_universe, score_triple, ModelEvaluation, RankedTriple, RankingModel,
    UniverseMode,
};
