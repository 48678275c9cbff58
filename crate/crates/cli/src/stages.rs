use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use migtriad::classify::{read_classes, write_classes};
use migtriad::counting::{
    read_pair_table, read_triple_table, write_pair_table, write_triple_table,
};
use migtriad::featsel::write_importance;
use migtriad::features::{class_cdf, read_features, write_cdfs, write_features};
use migtriad::ingest::{write_country_registry, write_migrant_records};
use migtriad::ranking::{delta_order, read_ranked, write_evaluation, write_ranked};
use migtriad::synthgen::{bundled_preset, generate, toy_registry, toy_scenarios};
use migtriad::{
    count_parallel, evaluate_models, feature_vector, filter_universe, load_country_registry,
    parse_migrant_records, rank_features, rank_universe, stratify, ClassifiedTriple,
    CountryRegistry, DevianceClass, Feature, FeatureRow, ImportanceReport, ModelEvaluation,
    RankedTriple, RankingModel, UniverseMode,
};

pub const RESIDENTS: &str = "residents.csv";
pub const CORRIDORS: &str = "corridors.csv";
pub const CLUSTERS: &str = "clusters.csv";
pub const RANKED: &str = "ranked.csv";
pub const EVALUATION: &str = "model_evaluation.csv";
pub const CLASSES: &str = "classes.csv";
pub const FEATURES: &str = "features.csv";
pub const CDF: &str = "cdf.csv";
pub const IMPORTANCE: &str = "importance.csv";
pub const SUMMARY: &str = "summary.txt";

const MAX_DIAGNOSTICS: usize = 10;

#[derive(Debug)]
pub struct Config {
    pub records: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub out: PathBuf,
    pub min_residents: u64,
    pub model: RankingModel,
    pub bins: usize,
    pub universe: UniverseMode,
    pub seed: u64,
    pub workers: usize,
}

impl Config {
    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn input(&self, name: &str, upstream: &str) -> Result<PathBuf> {
        let path = self.out_file(name);
        ensure!(
            path.is_file(),
            "missing input {} (run `migtriad {upstream}` first)",
            path.display()
        );
        Ok(path)
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let Some(path) = path else {
        bail!("--{flag} is required");
    };
    ensure!(
        path.is_file(),
        "missing input {} (--{flag})",
        path.display()
    );
    Ok(path)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn prepare_out(config: &Config) -> Result<()> {
    fs::create_dir_all(&config.out)
        .with_context(|| format!("cannot create output directory {}", config.out.display()))
}

fn report_diagnostics<D: std::fmt::Display>(source: &Path, what: &str, items: &[D]) {
    if items.is_empty() {
        return;
    }
    eprintln!("warning: {}: {} {what}", source.display(), items.len());
    for item in items.iter().take(MAX_DIAGNOSTICS) {
        eprintln!("  {item}");
    }
    if items.len() > MAX_DIAGNOSTICS {
        eprintln!("  ... {} more", items.len() - MAX_DIAGNOSTICS);
    }
}

fn load_registry(path: &Path) -> Result<CountryRegistry> {
    let load = load_country_registry(open(path)?)
        .with_context(|| format!("ingest: reading metadata {}", path.display()))?;
    report_diagnostics(path, "metadata problems", &load.diagnostics);
    Ok(load.registry)
}

#[derive(Debug)]
pub struct CountOutcome {
    pub records_read: usize,
    pub malformed_lines: usize,
    pub migrants: usize,
    pub countries: usize,
    pub corridors: usize,
    pub clusters: usize,
}

pub fn count(config: &Config) -> Result<CountOutcome> {
    let records_path = required(&config.records, "records")?;
    let meta_path = required(&config.meta, "meta")?;
    prepare_out(config)?;

    let registry = load_registry(meta_path)?;
    let parsed = parse_migrant_records(open(records_path)?)
        .with_context(|| format!("ingest: reading records {}", records_path.display()))?;
    report_diagnostics(records_path, "malformed lines skipped", &parsed.malformed);
    report_diagnostics(
        records_path,
        "invalid country codes dropped",
        &parsed.invalid_codes,
    );

    let universe =
        filter_universe(&parsed.records, &registry, config.min_residents).context("ingest")?;
    let (pairs, triples) = count_parallel(&universe.records, config.workers).context("counting")?;

    let mut w = create(&config.out_file(RESIDENTS))?;
    writeln!(w, "country,residents,retained")?;
    for (code, n) in &universe.resident_counts {
        writeln!(w, "{code},{n},{}", universe.registry.contains(*code))?;
    }
    w.flush()?;
    write_pair_table(create(&config.out_file(CORRIDORS))?, &pairs).context("counting")?;
    write_triple_table(create(&config.out_file(CLUSTERS))?, &triples).context("counting")?;

    Ok(CountOutcome {
        records_read: parsed.records.len(),
        malformed_lines: parsed.malformed.len(),
        migrants: universe.records.len(),
        countries: universe.registry.len(),
        corridors: pairs.len(),
        clusters: triples.len(),
    })
}

pub struct RankOutcome {
    pub ranked: Vec<RankedTriple>,
    pub evaluation: Vec<ModelEvaluation>,
}

pub fn rank(config: &Config) -> Result<RankOutcome> {
    let corridors = config.input(CORRIDORS, "count")?;
    let clusters = config.input(CLUSTERS, "count")?;
    let pairs = read_pair_table(open(&corridors)?)
        .with_context(|| format!("counting: reading {}", corridors.display()))?;
    let triples = read_triple_table(open(&clusters)?)
        .with_context(|| format!("counting: reading {}", clusters.display()))?;

    let mut ranked =
        rank_universe(config.model, &pairs, &triples, config.universe).context("ranking")?;
    ensure!(
        !ranked.is_empty(),
        "ranking: no triples to rank in {}",
        clusters.display()
    );
    let evaluation = evaluate_models(&pairs, &triples, config.universe).context("ranking")?;
    ranked.sort_by(delta_order);

    write_ranked(create(&config.out_file(RANKED))?, &ranked).context("ranking")?;
    write_evaluation(create(&config.out_file(EVALUATION))?, &evaluation).context("ranking")?;
    Ok(RankOutcome { ranked, evaluation })
}

pub fn classify(config: &Config) -> Result<Vec<ClassifiedTriple>> {
    let path = config.input(RANKED, "rank")?;
    let ranked = read_ranked(open(&path)?)
        .with_context(|| format!("ranking: reading {}", path.display()))?;
    let classes = stratify(&ranked).context("classify")?;
    write_classes(create(&config.out_file(CLASSES))?, &classes).context("classify")?;
    Ok(classes)
}

pub fn features(config: &Config) -> Result<Vec<FeatureRow>> {
    let path = config.input(CLASSES, "classify")?;
    let meta_path = required(&config.meta, "meta")?;
    let registry = load_registry(meta_path)?;
    let classes = read_classes(open(&path)?)
        .with_context(|| format!("classify: reading {}", path.display()))?;

    let rows = classes
        .iter()
        .map(|c| {
            let features = feature_vector(c.key, &registry)
                .with_context(|| format!("features: triple {}", c.key))?;
            Ok(FeatureRow {
                key: c.key,
                features,
                class: c.class,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cdfs: Vec<_> = Feature::ALL
        .iter()
        .map(|&f| (f, class_cdf(&rows, f)))
        .collect();
    for (feature, cdf) in &cdfs {
        for class in &cdf.empty_classes {
            eprintln!(
                "warning: features: class {} is empty, no CDF for {}",
                class.as_str(),
                feature.name()
            );
        }
    }

    write_features(create(&config.out_file(FEATURES))?, &rows).context("features")?;
    write_cdfs(create(&config.out_file(CDF))?, &cdfs).context("features")?;
    Ok(rows)
}

pub fn select(config: &Config) -> Result<ImportanceReport> {
    let path = config.input(FEATURES, "features")?;
    let rows = read_features(open(&path)?)
        .with_context(|| format!("features: reading {}", path.display()))?;
    let report = rank_features(&rows, config.bins).context("featsel")?;
    write_importance(create(&config.out_file(IMPORTANCE))?, &report).context("featsel")?;
    Ok(report)
}

/// Runs every stage through the same files the individual subcommands use,
/// then writes `summary.txt`.
pub fn report(config: &Config) -> Result<()> {
    required(&config.records, "records")?;
    required(&config.meta, "meta")?;
    let counts = count(config)?;
    let ranking = rank(config)?;
    let classes = classify(config)?;
    let rows = features(config)?;
    let importance = select(config)?;

    let mut w = create(&config.out_file(SUMMARY))?;
    writeln!(w, "records read: {}", counts.records_read)?;
    writeln!(w, "malformed lines: {}", counts.malformed_lines)?;
    writeln!(w, "min residents: {}", config.min_residents)?;
    writeln!(w, "countries retained: {}", counts.countries)?;
    writeln!(w, "migrants retained: {}", counts.migrants)?;
    writeln!(w, "corridors: {}", counts.corridors)?;
    writeln!(w, "clusters: {}", counts.clusters)?;
    writeln!(
        w,
        "universe: {:?} ({} triples)",
        config.universe,
        ranking.ranked.len()
    )?;
    writeln!(w)?;
    writeln!(w, "model  {:>10}  {:>10}", "kendall", "spearman")?;
    for e in &ranking.evaluation {
        let best = if e.best { "  best" } else { "" };
        writeln!(
            w,
            "{:<5}  {:>10}  {:>10}{best}",
            e.model.as_str(),
            fmt_corr(e.kendall),
            fmt_corr(e.spearman)
        )?;
    }
    writeln!(w)?;
    writeln!(w, "classes under {}:", config.model.as_str())?;
    for class in [
        DevianceClass::Higher,
        DevianceClass::Expected,
        DevianceClass::Lower,
        DevianceClass::Unassigned,
    ] {
        let n = classes.iter().filter(|c| c.class == class).count();
        writeln!(w, "  {:<10} {n}", class.as_str())?;
    }
    writeln!(w, "feature rows: {}", rows.len())?;
    writeln!(w)?;
    writeln!(
        w,
        "feature                 ig_rank  ig        chi2_rank  chi2"
    )?;
    for r in &importance.rows {
        writeln!(
            w,
            "{:<22}  {:>7}  {:.6}  {:>9}  {:.3}",
            r.feature, r.ig_rank, r.ig_value, r.chi2_rank, r.chi2_value
        )?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_corr(c: migtriad::Correlation) -> String {
    match c.value() {
        Some(v) => format!("{v:.4}"),
        None => "degenerate".to_owned(),
    }
}

pub fn synth(config: &Config, toy: Option<u8>, users: usize) -> Result<()> {
    prepare_out(config)?;
    let (records, registry) = match toy {
        Some(n) => {
            let [s1, s2] = toy_scenarios();
            (if n == 1 { s1 } else { s2 }, toy_registry())
        }
        None => {
            let (synth_config, registry) =
                bundled_preset(users, config.seed).context("synthgen")?;
            (generate(&synth_config).context("synthgen")?, registry)
        }
    };
    write_migrant_records(create(&config.out_file("records.jsonl"))?, &records)
        .context("synthgen")?;
    write_country_registry(create(&config.out_file("meta.csv"))?, &registry).context("synthgen")?;
    Ok(())
}
