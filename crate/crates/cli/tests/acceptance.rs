//! Acceptance checks. Run with
//! `cargo test -p migtriad-cli --test acceptance` and read the PASS/FAIL lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use migtriad::classify::class_at;
use migtriad::featsel::{rank_feature_columns, ContingencyTable, FeatureColumn};
use migtriad::synthgen::{
    bundled_preset, generate, oracle_count, toy_scenarios, PairPropensity, PlantedTriad,
    SynthConfig,
};
use migtriad::{
    count_parallel, count_tables, evaluate_models, haversine_km, kendall_tau, rank_universe,
    score_triple, spearman_rho, stratify, Correlation, CountryCode, DevianceClass, LatLon,
    PairFrequencyTable, PairKey, RankedTriple, RankingModel, TripleFrequencyTable, TripleKey,
    UniverseMode,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = fn() -> Check;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn code(i: usize) -> CountryCode {
    migtriad::synthgen::synthetic_code(i)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}

fn toy_tables() -> Check {
    let start = Instant::now();
    let expected_triples = [["AA", "BB", "CC"], ["BB", "CC", "DD"]];
    for (records, triple) in toy_scenarios().iter().zip(expected_triples) {
        let (pairs, triples) = count_tables(records);
        ensure!(pairs.len() == 6, "{} corridors", pairs.len());
        ensure!(
            pairs.sorted().iter().all(|(_, n)| *n == 1),
            "corridor count other than 1"
        );
        let want = TripleKey::new(
            CountryCode::new(triple[0]).unwrap(),
            CountryCode::new(triple[1]).unwrap(),
            CountryCode::new(triple[2]).unwrap(),
        )
        .unwrap();
        ensure!(
            triples.sorted() == vec![(want, 1)],
            "triples {:?}",
            triples.sorted()
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "six corridors of count 1, clusters AA-BB-CC and BB-CC-DD, {elapsed:?}"
    ))
}

fn random_config(rng: &mut ChaCha8Rng, seed: u64) -> SynthConfig {
    let n_countries = rng.random_range(3..=30);
    let n_users = rng.random_range(0..=10_000);
    let mut config = SynthConfig::uniform(n_countries, n_users, seed);
    config.extra_country_rate = rng.random_range(0.0..0.7);
    if rng.random_bool(0.5) {
        config.pair_propensity = PairPropensity::Gravity(
            (0..n_countries)
                .map(|_| rng.random_range(0.01..5.0))
                .collect(),
        );
    }
    for _ in 0..rng.random_range(0..3) {
        let mut idx: Vec<usize> = (0..n_countries).collect();
        idx.shuffle(rng);
        config.planted_triads.push(PlantedTriad {
            key: TripleKey::new(code(idx[0]), code(idx[1]), code(idx[2])).unwrap(),
            boost: rng.random_range(0.0..=1.0),
        });
    }
    config
}

fn bound_and_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut users = 0usize;
    for trial in 0..1000u64 {
        let config = random_config(&mut rng, trial);
        let records = generate(&config).map_err(|e| e.to_string())?;
        users += records.len();
        let workers = 1 + (trial % 4) as usize;
        let (pairs, triples) = count_parallel(&records, workers).map_err(|e| e.to_string())?;
        for (t, n) in triples.sorted() {
            let bound = t.pairs().iter().map(|p| pairs.get(p)).min().unwrap();
            ensure!(
                n <= bound,
                "trial {trial}: {t} count {n} exceeds pair minimum {bound}"
            );
        }
        let oracle = oracle_count(&records);
        let pair_map: BTreeMap<[CountryCode; 2], u64> = pairs
            .sorted()
            .into_iter()
            .map(|(k, n)| (k.countries(), n))
            .collect();
        let triple_map: BTreeMap<[CountryCode; 3], u64> = triples
            .sorted()
            .into_iter()
            .map(|(k, n)| (k.countries(), n))
            .collect();
        ensure!(
            pair_map == oracle.pairs,
            "trial {trial}: corridor tables differ from oracle"
        );
        ensure!(
            triple_map == oracle.triples,
            "trial {trial}: cluster tables differ from oracle"
        );
    }
    Ok(format!("1000 corpora, {users} users in total"))
}

fn ranking_formulas() -> Check {
    let (ab, ac, bc) = (5552, 6642, 7242);
    let cases = [
        (RankingModel::R1, 19_436.0),
        (RankingModel::R2, 5552.0 * 6642.0 * 7242.0),
        (RankingModel::R3, 5552.0),
        (RankingModel::R4, 5552.0 * 19_436.0 / 3.0),
    ];
    for (model, want) in cases {
        let got = score_triple(model, ab, ac, bc);
        ensure!(
            rel_close(got, want, 1e-9),
            "{} gave {got}, want {want}",
            model.as_str()
        );
    }
    let r4 = score_triple(RankingModel::R4, ab, ac, bc);
    ensure!((3.5969e7..3.5970e7).contains(&r4), "R4 {r4}");

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100_000 {
        let max = if rng.random_bool(0.5) { 50 } else { 10_000_000 };
        let f = [
            rng.random_range(0..=max),
            rng.random_range(0..=max),
            rng.random_range(0..=max),
        ];
        for model in RankingModel::ALL {
            let base = score_triple(model, f[0], f[1], f[2]);
            for [i, j, k] in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let s = score_triple(model, f[i], f[j], f[k]);
                ensure!(s == base, "{} not symmetric on {f:?}", model.as_str());
            }
            let slot = rng.random_range(0..3);
            let mut g = f;
            g[slot] += rng.random_range(1..=1000);
            let bumped = score_triple(model, g[0], g[1], g[2]);
            ensure!(
                bumped >= base,
                "{} decreased from {f:?} to {g:?}",
                model.as_str()
            );
        }
    }
    Ok(format!(
        "R1 19436, R3 5552, R4 {r4:.1}; 1e5 symmetry and monotonicity draws"
    ))
}

fn brute_tau(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut conc, mut disc, mut tx, mut ty) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
            let dy = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
            match (dx == 0.0, dy == 0.0) {
                (true, true) => {}
                (true, false) => tx += 1.0,
                (false, true) => ty += 1.0,
                (false, false) if dx == dy => conc += 1.0,
                (false, false) => disc += 1.0,
            }
        }
    }
    let denom = ((conc + disc + tx) * (conc + disc + ty)).sqrt();
    (denom > 0.0).then(|| (conc - disc) / denom)
}

fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let below = v.iter().filter(|b| *b < a).count() as f64;
            let equal = v.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_rho(x: &[f64], y: &[f64]) -> Option<f64> {
    let (rx, ry) = (brute_ranks(x), brute_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn matches(got: Correlation, want: Option<f64>) -> bool {
    match (got.value(), want) {
        (Some(g), Some(w)) => (g - w).abs() <= 1e-12,
        (None, None) => true,
        _ => false,
    }
}

fn rank_correlations() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut tied = 0;
    for trial in 0..500 {
        let n = rng.random_range(2..=200);
        let levels = rng.random_range(1..=n as u32 + 5);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let (x, y) = (brute_ranks(&x), brute_ranks(&y));
        if x.iter()
            .zip(&y)
            .any(|(a, _)| x.iter().filter(|b| *b == a).count() > 1)
        {
            tied += 1;
        }
        let tau = kendall_tau(&x, &y).map_err(|e| e.to_string())?;
        let rho = spearman_rho(&x, &y).map_err(|e| e.to_string())?;
        ensure!(
            matches(tau, brute_tau(&x, &y)),
            "trial {trial}: tau {tau} vs {:?}",
            brute_tau(&x, &y)
        );
        ensure!(
            matches(rho, brute_rho(&x, &y)),
            "trial {trial}: rho {rho} vs {:?}",
            brute_rho(&x, &y)
        );
    }
    for n in [2usize, 3, 10, 200] {
        let up: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let down: Vec<f64> = up.iter().rev().copied().collect();
        for (other, want) in [(&up, 1.0), (&down, -1.0)] {
            let tau = kendall_tau(&up, other).map_err(|e| e.to_string())?;
            let rho = spearman_rho(&up, other).map_err(|e| e.to_string())?;
            ensure!(
                tau == Correlation::Value(want),
                "n={n}: tau {tau}, want {want}"
            );
            ensure!(
                rho == Correlation::Value(want),
                "n={n}: rho {rho}, want {want}"
            );
        }
    }
    Ok(format!(
        "500 pairs ({tied} with ties) within 1e-12; identity +1 and reversal -1 exact"
    ))
}

fn coefficients(rows: &[migtriad::ModelEvaluation], model: RankingModel) -> (f64, f64) {
    let row = rows
        .iter()
        .find(|r| r.model == model)
        .expect("all models evaluated");
    (
        row.kendall.value().unwrap_or(f64::NAN),
        row.spearman.value().unwrap_or(f64::NAN),
    )
}

fn monotone_in_r4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 14;
    let mut counts: Vec<u64> = (10_000..10_000_000).step_by(997).collect();
    counts.shuffle(&mut rng);
    let mut counts = counts.into_iter();
    let mut pairs = PairFrequencyTable::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.add(
                PairKey::new(code(i), code(j)).unwrap(),
                counts.next().unwrap(),
            );
        }
    }
    let mut scored: Vec<(f64, TripleKey)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let t = TripleKey::new(code(i), code(j), code(k)).unwrap();
                let [ab, ac, bc] = t.pairs().map(|p| pairs.get(&p));
                scored.push((score_triple(RankingModel::R4, ab, ac, bc), t));
            }
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    ensure!(
        scored.windows(2).all(|w| w[0].0 < w[1].0),
        "R4 scores not distinct; pick another seed"
    );
    // counts 1..m in R4 order stay below every corridor count
    let triples: TripleFrequencyTable = scored
        .iter()
        .enumerate()
        .map(|(i, (_, t))| (*t, i as u64 + 1))
        .collect();

    let rows =
        evaluate_models(&pairs, &triples, UniverseMode::Observed).map_err(|e| e.to_string())?;
    let (t4, r4) = coefficients(&rows, RankingModel::R4);
    let (t1, r1) = coefficients(&rows, RankingModel::R1);
    ensure!(t4 == 1.0 && r4 == 1.0, "R4 gave tau {t4}, rho {r4}");
    ensure!(t1 < 1.0 && r1 < 1.0, "R1 gave tau {t1}, rho {r1}");
    Ok(format!(
        "{} triples: R4 tau=rho=1, R1 tau {t1:.4} rho {r1:.4}",
        triples.len()
    ))
}

fn multiplicative_corpora() -> Check {
    let mut lines = Vec::new();
    let mut corpora: Vec<(String, SynthConfig)> = Vec::new();
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        // heavy-tailed masses
        let masses: Vec<f64> = (0..40)
            .map(|_| (-rng.random::<f64>().ln()).powi(2) + 0.05)
            .collect();
        let mut config = SynthConfig::uniform(40, 60_000, seed);
        config.pair_propensity = PairPropensity::Gravity(masses);
        config.extra_country_rate = 0.4;
        corpora.push((format!("gravity seed {seed}"), config));
    }
    let (bundled, _) = bundled_preset(100_000, 42).map_err(|e| e.to_string())?;
    corpora.push(("bundled preset".into(), bundled));

    for (name, config) in corpora {
        let records = generate(&config).map_err(|e| e.to_string())?;
        let (pairs, triples) = count_tables(&records);
        let rows =
            evaluate_models(&pairs, &triples, UniverseMode::Observed).map_err(|e| e.to_string())?;
        let (t1, r1) = coefficients(&rows, RankingModel::R1);
        for model in [RankingModel::R2, RankingModel::R4] {
            let (t, r) = coefficients(&rows, model);
            ensure!(
                t > t1 && r > r1,
                "{name}: {} tau {t:.4} rho {r:.4} vs R1 tau {t1:.4} rho {r1:.4}",
                model.as_str()
            );
        }
        let (t2, r2) = coefficients(&rows, RankingModel::R2);
        let (t4, r4) = coefficients(&rows, RankingModel::R4);
        lines.push(format!(
            "{name}: R1 {t1:.3}/{r1:.3} R2 {t2:.3}/{r2:.3} R4 {t4:.3}/{r4:.3}"
        ));
    }
    Ok(lines.join("; "))
}

fn ranked_with_delta(i: usize, delta: f64) -> RankedTriple {
    RankedTriple {
        key: TripleKey::new(code(i / 100), code(100 + (i / 10) % 10), code(200 + i % 10)).unwrap(),
        actual_count: 1,
        actual_rank: 0.0,
        model_score: 0.0,
        expected_rank: delta,
        delta,
    }
}

fn sign_fixture(
    rng: &mut ChaCha8Rng,
    expected: usize,
    actual: usize,
) -> Result<RankedTriple, String> {
    // 20 countries with distinct corridor counts give 1140 triples with distinct R4 scores
    let n = 20;
    let mut counts: Vec<u64> = (1000..1000 + (n * (n - 1) / 2) as u64).collect();
    counts.shuffle(rng);
    let mut pairs = PairFrequencyTable::new();
    let mut next = counts.into_iter();
    for i in 0..n {
        for j in i + 1..n {
            pairs.add(
                PairKey::new(code(i), code(j)).unwrap(),
                next.next().unwrap(),
            );
        }
    }
    let mut by_score: Vec<(f64, TripleKey)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let t = TripleKey::new(code(i), code(j), code(k)).unwrap();
                let [ab, ac, bc] = t.pairs().map(|p| pairs.get(&p));
                by_score.push((score_triple(RankingModel::R4, ab, ac, bc), t));
            }
        }
    }
    by_score.sort_by(|a, b| b.0.total_cmp(&a.0));
    let m = by_score.len() as u64;
    let target = by_score[expected - 1].1;

    // distinct counts; the target's count puts it at `actual` in descending order
    let mut free: Vec<u64> = (1..=m).filter(|&c| c != m + 1 - actual as u64).collect();
    free.shuffle(rng);
    let mut triples = TripleFrequencyTable::new();
    let mut free = free.into_iter();
    for (_, t) in &by_score {
        let c = if *t == target {
            m + 1 - actual as u64
        } else {
            free.next().unwrap()
        };
        triples.add(*t, c);
    }
    let ranked = rank_universe(RankingModel::R4, &pairs, &triples, UniverseMode::Observed)
        .map_err(|e| e.to_string())?;
    ranked
        .into_iter()
        .find(|r| r.key == target)
        .ok_or_else(|| "fixture triple not ranked".to_string())
}

fn classification() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut deltas: Vec<f64> = (0..1000).map(|i| i as f64 * 1.5 - 700.0).collect();
    deltas.shuffle(&mut rng);
    let ranked: Vec<RankedTriple> = deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| ranked_with_delta(i, d))
        .collect();
    let classes = stratify(&ranked).map_err(|e| e.to_string())?;
    for class in DevianceClass::NAMED {
        let n = classes.iter().filter(|c| c.class == class).count();
        ensure!(n == 200, "{} has {n} members", class.as_str());
    }
    let mut sorted = deltas.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sorted[199];
    let higher_ok = classes
        .iter()
        .all(|c| (c.class == DevianceClass::Higher) == (c.delta >= cutoff));
    ensure!(higher_ok, "HIGHER is not the top 200 deltas");
    ensure!(
        class_at(0, 1000) == DevianceClass::Higher,
        "first position not HIGHER"
    );

    let up = sign_fixture(&mut rng, 682, 200)?;
    let down = sign_fixture(&mut rng, 12, 80)?;
    ensure!(
        up.expected_rank == 682.0 && up.actual_rank == 200.0 && up.delta > 0.0,
        "(682, 200) fixture gave expected {} actual {} delta {}",
        up.expected_rank,
        up.actual_rank,
        up.delta
    );
    ensure!(
        down.expected_rank == 12.0 && down.actual_rank == 80.0 && down.delta < 0.0,
        "(12, 80) fixture gave expected {} actual {} delta {}",
        down.expected_rank,
        down.actual_rank,
        down.delta
    );
    Ok(format!(
        "200 per named class; fixture deltas {} and {}",
        up.delta, down.delta
    ))
}

fn geodesy() -> Check {
    let p = |lat, lon| LatLon::new(lat, lon).unwrap();
    let antipodal = haversine_km(p(0.0, 0.0), p(0.0, 180.0));
    let quarter = haversine_km(p(0.0, 0.0), p(0.0, 90.0));
    ensure!(
        (antipodal - 20_015.09).abs() <= 0.01,
        "antipodal {antipodal}"
    );
    ensure!(
        (quarter - 10_007.54).abs() <= 0.01,
        "quarter circle {quarter}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut point = || {
        p(
            rng.random_range(-90.0..=90.0),
            rng.random_range(-180.0..=180.0),
        )
    };
    for _ in 0..10_000 {
        let (a, b, c) = (point(), point(), point());
        let (ab, ba) = (haversine_km(a, b), haversine_km(b, a));
        ensure!(ab == ba, "asymmetric: {ab} vs {ba}");
        let (ac, bc) = (haversine_km(a, c), haversine_km(b, c));
        ensure!(
            ac <= ab + bc + 1e-9,
            "triangle violated: {ac} > {ab} + {bc}"
        );
    }
    Ok(format!(
        "antipodal {antipodal:.4} km, quarter {quarter:.4} km, 1e4 random triples"
    ))
}

fn oracle_ig(cells: &[Vec<u64>]) -> f64 {
    let n: f64 = cells.iter().flatten().sum::<u64>() as f64;
    let mut ig = 0.0;
    // mutual information in bits, summed cell by cell
    for row in cells {
        let pr: f64 = row.iter().sum::<u64>() as f64 / n;
        for (c, &o) in row.iter().enumerate() {
            if o == 0 {
                continue;
            }
            let pc: f64 = cells.iter().map(|r| r[c]).sum::<u64>() as f64 / n;
            let pj = o as f64 / n;
            ig += pj * (pj / (pr * pc)).log2();
        }
    }
    ig
}

fn oracle_chi2(cells: &[Vec<u64>]) -> f64 {
    let n: f64 = cells.iter().flatten().sum::<u64>() as f64;
    let mut chi = 0.0;
    for row in cells {
        let rt: f64 = row.iter().sum::<u64>() as f64;
        for (c, &o) in row.iter().enumerate() {
            let ct: f64 = cells.iter().map(|r| r[c]).sum::<u64>() as f64;
            let e = rt * ct / n;
            if e > 0.0 {
                chi += (o as f64 - e).powi(2) / e;
            }
        }
    }
    chi
}

fn feature_selection() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut tables = 0;
    while tables < 2000 {
        let rows = rng.random_range(1..=10);
        let cols = rng.random_range(2..=3);
        let sparse = rng.random_bool(0.3);
        let cells: Vec<Vec<u64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        if sparse && rng.random_bool(0.4) {
                            0
                        } else {
                            rng.random_range(0..60)
                        }
                    })
                    .collect()
            })
            .collect();
        if cells.iter().flatten().sum::<u64>() == 0 {
            continue;
        }
        tables += 1;
        let table = ContingencyTable::from_cells(cells.clone()).map_err(|e| e.to_string())?;
        let (ig, want_ig) = (table.information_gain(), oracle_ig(&cells).max(0.0));
        let (chi, want_chi) = (table.chi_squared(), oracle_chi2(&cells));
        ensure!(
            (ig - want_ig).abs() <= 1e-10,
            "IG {ig} vs {want_ig} on {cells:?}"
        );
        ensure!(
            (chi - want_chi).abs() <= 1e-10 * want_chi.max(1.0),
            "chi2 {chi} vs {want_chi} on {cells:?}"
        );
    }

    let mut constant_ok = true;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + trial);
        let n = 300;
        let classes: Vec<DevianceClass> = (0..n)
            .map(|_| {
                let i = rng.random_range(0..5);
                [
                    DevianceClass::Higher,
                    DevianceClass::Expected,
                    DevianceClass::Lower,
                    DevianceClass::Unassigned,
                    DevianceClass::Unassigned,
                ][i]
            })
            .collect();
        let planted: Vec<usize> = classes.iter().map(|c| *c as usize).collect();
        let mut columns = vec![("planted".to_string(), FeatureColumn::Categorical(planted))];
        for f in 0..8 {
            let column = if f % 2 == 0 {
                FeatureColumn::Continuous((0..n).map(|_| rng.random::<f64>() * 1e4).collect())
            } else {
                FeatureColumn::Categorical(
                    (0..n).map(|_| [0, 2, 3][rng.random_range(0..3)]).collect(),
                )
            };
            columns.push((format!("noise_{f}"), column));
        }
        columns.push((
            "constant".to_string(),
            FeatureColumn::Continuous(vec![42.0; n]),
        ));
        let report = rank_feature_columns(&columns, &classes, 10)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        let top = report.get("planted").unwrap();
        ensure!(
            top.ig_rank == 1 && top.chi2_rank == 1,
            "trial {trial}: planted feature ranked {} / {}",
            top.ig_rank,
            top.chi2_rank
        );
        let flat = report.get("constant").unwrap();
        constant_ok &= flat.ig_value == 0.0 && flat.chi2_value == 0.0;
    }
    ensure!(constant_ok, "a constant feature scored above zero");
    Ok("2000 random tables within 1e-10; planted feature first in 100/100; constant scores exactly 0".into())
}

fn bundled(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(file)
}

fn run_report(out: &Path, workers: usize) -> Result<Duration, String> {
    let _ = fs::remove_dir_all(out);
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_migtriad"))
        .arg("report")
        .arg("--records")
        .arg(bundled("records.jsonl"))
        .arg("--meta")
        .arg(bundled("meta.csv"))
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .env_remove("MIGTRIAD_MIN_RESIDENTS")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(
        status.status.success(),
        "report failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    Ok(elapsed)
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let bytes = fs::read(entry.path()).map_err(|e| e.to_string())?;
        files.insert(entry.file_name().to_string_lossy().into_owned(), bytes);
    }
    Ok(files)
}

fn end_to_end() -> Check {
    let base = std::env::temp_dir().join(format!("migtriad-acceptance-{}", std::process::id()));
    let runs = [
        (base.join("w1a"), 1),
        (base.join("w1b"), 1),
        (base.join("w8"), 8),
    ];
    let mut times = Vec::new();
    for (dir, workers) in &runs {
        let t = run_report(dir, *workers)?;
        ensure!(
            t < Duration::from_secs(60),
            "report with {workers} workers took {t:?}"
        );
        times.push(t);
    }
    let first = snapshot(&runs[0].0)?;
    ensure!(
        first.len() == 10,
        "expected 10 outputs, found {:?}",
        first.keys().collect::<Vec<_>>()
    );
    for (dir, workers) in &runs[1..] {
        let other = snapshot(dir)?;
        for (name, bytes) in &first {
            ensure!(
                other.get(name) == Some(bytes),
                "{name} differs with {workers} workers"
            );
        }
        ensure!(other.len() == first.len(), "output sets differ");
    }
    let _ = fs::remove_dir_all(&base);
    Ok(format!(
        "10 files identical across runs and worker counts; slowest run {:?}",
        times.iter().max().unwrap()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("1 toy scenario tables", toy_tables),
        ("2 cluster bound and oracle equivalence", bound_and_oracle),
        (
            "3 ranking formulas, symmetry, monotonicity",
            ranking_formulas,
        ),
        ("4 rank correlations against brute force", rank_correlations),
        ("5a counts monotone in R4 give perfect R4", monotone_in_r4),
        (
            "5b multiplicative corpora favour R2 and R4 over R1",
            multiplicative_corpora,
        ),
        ("6 deviance classes and delta sign", classification),
        ("7 great-circle distances", geodesy),
        ("8 information gain and chi-squared", feature_selection),
        ("9 end-to-end report determinism and runtime", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
