//! Acceptance suite. Prints one line per criterion.
//!
//! Criteria that need the benchmark datasets look for `data/<name>.csv`
//! (override the directory with `QTREE_DATA`) and report SKIP when a file is
//! missing. Criteria with a documented, known failure print FAIL but do not
//! fail the run; any other FAIL does.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use qtree::eval::{compare_methods, evaluate_file, sweep_quantiles, DEFAULT_WINDOW};
use qtree::leaf::{ClassDistPair, ElementLayout, LeafElement, SplitPoint};
use qtree::quantile::QuantileSet;
use qtree::schema::{AttributeSpec, DatasetSchema, Sample};
use qtree::split::{gain_from_quality, gini, gini_reduction, hoeffding_bound, split_quality};
use qtree::synth::{write_csv, SynthKind};
use qtree::{Fixed30, GaussianStats, HoeffdingTree, NumericBackend, TreeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::*;

struct Criterion {
    id: &'static str,
    title: &'static str,
    run: fn() -> Outcome,
    /// Reason the criterion is expected to fail as stated.
    known_failure: Option<&'static str>,
}

fn data_dir() -> PathBuf {
    std::env::var_os("QTREE_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// Schema and CSV path of a benchmark dataset, or the path that is missing.
fn dataset(name: &str) -> Result<(DatasetSchema, PathBuf), String> {
    let dir = data_dir();
    let csv = dir.join(format!("{name}.csv"));
    if !csv.is_file() {
        return Err(format!("{} not found", csv.display()));
    }
    let schema = DatasetSchema::from_path(dir.join(format!("{name}.json"))).map_err(|e| e.to_string())?;
    Ok((schema, csv))
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn table1() -> Outcome {
    let targets = [
        ("electricity", 0.750),
        ("bank", 0.870),
        ("covertype", 0.700),
        ("telescope", 0.730),
        ("person", 0.460),
    ];
    let mut parts = Vec::new();
    let (mut failed, mut missing) = (false, false);
    for (name, floor) in targets {
        let (schema, csv) = match dataset(name) {
            Ok(d) => d,
            Err(e) => {
                missing = true;
                parts.push(format!("{name}: {e}"));
                continue;
            }
        };
        let start = Instant::now();
        let (m, _) = match evaluate_file(&csv, &schema, &TreeConfig::default(), DEFAULT_WINDOW) {
            Ok(r) => r,
            Err(e) => return Fail(format!("{name}: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        let ok = m.accuracy >= floor && secs < 60.0;
        failed |= !ok;
        parts.push(format!("{name} {} (>= {}) in {secs:.1} s", pct(m.accuracy), pct(floor)));
    }
    let detail = parts.join("; ");
    match (failed, missing) {
        (true, _) => Fail(detail),
        (false, true) => Skip(detail),
        (false, false) => Pass(detail),
    }
}

fn person_gap() -> Outcome {
    let (schema, csv) = match dataset("person") {
        Ok(d) => d,
        Err(e) => return Skip(e),
    };
    match compare_methods(&csv, &schema, &TreeConfig::default()) {
        Ok(c) => {
            let detail = format!(
                "quantile {} gaussian {} gap {:+.2} points (>= +5.00)",
                pct(c.quantile.accuracy),
                pct(c.gaussian.accuracy),
                100.0 * c.gap()
            );
            if c.gap() >= 0.05 {
                Pass(detail)
            } else {
                Fail(detail)
            }
        }
        Err(e) => Fail(e.to_string()),
    }
}

fn person_sweep() -> Outcome {
    let (schema, csv) = match dataset("person") {
        Ok(d) => d,
        Err(e) => return Skip(e),
    };
    let counts = [2, 8, 16, 24, 512];
    let rows = match sweep_quantiles(&csv, &schema, &counts, &TreeConfig::default()) {
        Ok(r) => r,
        Err(e) => return Fail(e.to_string()),
    };
    let acc = |q: usize| rows.iter().find(|r| r.quantiles == q).unwrap().accuracy;
    let ok = [8, 16, 24].iter().all(|&q| acc(q) > acc(2) && acc(q) > acc(512));
    let detail = rows
        .iter()
        .map(|r| format!("|Q|={} {}", r.quantiles, pct(r.accuracy)))
        .collect::<Vec<_>>()
        .join(", ");
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

/// Largest target deviation after one uniform and one truncated normal
/// stream of `n` samples each, and the time spent updating.
fn convergence_run(seed: u64, n: usize) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let normal = Normal::new(0.0, 0.25).unwrap();
    let truncated: Vec<f64> = std::iter::repeat_with(|| normal.sample(&mut rng))
        .filter(|x: &f64| (-1.0..=1.0).contains(x))
        .take(n)
        .collect();

    let start = Instant::now();
    let mut qu = QuantileSet::with_count(8);
    for &x in &uniform {
        qu.update(x, 0.01);
    }
    let mut qn = QuantileSet::with_count(8);
    for &x in &truncated {
        qn.update(x, 0.01);
    }
    let secs = start.elapsed().as_secs_f64();

    // Uniform(0, 1): the true CDF is the identity.
    let err_u = qu
        .values()
        .iter()
        .zip(qu.targets())
        .map(|(v, a)| (v - a).abs())
        .fold(0.0, f64::max);
    let mut sorted = truncated;
    sorted.sort_by(f64::total_cmp);
    let ecdf = |x: f64| sorted.partition_point(|&s| s <= x) as f64 / sorted.len() as f64;
    let err_n = qn
        .values()
        .iter()
        .zip(qn.targets())
        .map(|(v, a)| (ecdf(*v) - a).abs())
        .fold(0.0, f64::max);
    (err_u, err_n, secs)
}

fn tracker_convergence() -> Outcome {
    let (err_u, err_n, secs) = convergence_run(2024, 200_000);
    let seeds = 100;
    let passing = (0..seeds)
        .filter(|&s| {
            let (u, n, _) = convergence_run(s, 200_000);
            u <= 0.05 && n <= 0.05
        })
        .count();
    let detail = format!(
        "uniform max err {err_u:.4}, truncated normal max err {err_n:.4} (<= 0.05), {secs:.3} s (< 1 s); \
         both within 0.05 for {passing} of {seeds} seeds"
    );
    if err_u <= 0.05 && err_n <= 0.05 && secs < 1.0 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn welford_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_mean: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=10_000usize);
        let offset = rng.random_range(-100.0..100.0);
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let xs: Vec<f64> = (0..len).map(|_| offset + scale * rng.random_range(-1.0..1.0)).collect();
        let mut g = GaussianStats::default();
        for &x in &xs {
            g.update(x, 1.0);
        }
        let mean = xs.iter().sum::<f64>() / len as f64;
        // Relative to the data's magnitude, so a mean near zero is not divided by ~0.
        let spread = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / len as f64).sqrt();
        worst_mean = worst_mean.max((g.mean() - mean).abs() / mean.abs().max(spread));
        if len > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1) as f64;
            worst_var = worst_var.max((g.variance().unwrap() - var).abs() / var);
        }
    }
    let detail = format!("worst relative error: mean {worst_mean:.2e}, variance {worst_var:.2e} (<= 1e-9)");
    if worst_mean <= 1e-9 && worst_var <= 1e-9 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn quality_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (groups, per_group) = (10_000, 10);
    let mut worst: f64 = 0.0;
    let mut inversions = 0;
    for _ in 0..groups {
        let classes = rng.random_range(2..=6);
        let totals: Vec<u64> = (0..classes).map(|_| rng.random_range(0..=500)).collect();
        if totals.iter().sum::<u64>() == 0 {
            continue;
        }
        let total_f: Vec<f64> = totals.iter().map(|&t| t as f64).collect();
        let n: f64 = total_f.iter().sum();
        let scored: Vec<(f64, f64)> = (0..per_group)
            .map(|_| {
                let left = totals.iter().map(|&t| rng.random_range(0..=t) as f64).collect();
                let pair = ClassDistPair::from_left(left, &totals, SplitPoint::Threshold(0.0));
                let q = split_quality(&pair);
                let direct = gini_reduction(&total_f, &pair);
                worst = worst.max((direct - gain_from_quality(q, n, gini(&total_f))).abs());
                (q, direct)
            })
            .collect();
        for a in &scored {
            for b in &scored {
                // Orderings must agree wherever quality separates the candidates.
                if (a.0 - b.0) / n > 1e-9 && a.1 <= b.1 {
                    inversions += 1;
                }
            }
        }
    }
    let detail = format!(
        "{} partitions, max |G - G(quality)| {worst:.2e} (<= 1e-9), {inversions} ranking inversions",
        groups * per_group
    );
    if worst <= 1e-9 && inversions == 0 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn hoeffding_spot_value() -> Outcome {
    let eps = hoeffding_bound(1.0, 1e-3, 200);
    let detail = format!("hoeffding_bound(1, 1e-3, 200) = {eps:.10}, expected 0.131415 +/- 1e-6");
    if (eps - 0.131415).abs() <= 1e-6 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn partition_oracle() -> Outcome {
    let schema = DatasetSchema::new(vec![AttributeSpec::numeric("x", -1.0, 1.0)], 2).unwrap();
    let config = TreeConfig::default();
    let q = config.quantile_count as f64;
    let layout = Arc::new(ElementLayout::new(&schema, &config));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut checked, mut violations) = (0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=500);
        let mut el = LeafElement::new(Arc::clone(&layout));
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let label = rng.random_range(0..2usize);
            let x: f64 = if label == 0 {
                rng.random_range(-1.0..0.5)
            } else {
                rng.random_range(-0.5..1.0)
            };
            el.observe(&Sample::new(vec![x], label));
            xs.push((x, label));
        }
        for pt in el.split_points(0, config.split_points) {
            let pair = el.deduce_partitions(0, pt);
            for j in 0..2 {
                let exact = xs.iter().filter(|&&(x, l)| l == j && x <= pt).count() as f64;
                let n_fj = el.class_counts()[j] as f64;
                let err = (pair.left[j] - exact).abs();
                checked += 1;
                if err > n_fj / q + 0.05 * n_fj {
                    violations += 1;
                }
                if n_fj > 0.0 {
                    worst = worst.max(err / n_fj);
                }
            }
        }
    }
    let detail = format!(
        "{violations} of {checked} class counts exceed n_fj/|Q| + 0.05 n_fj (worst error {worst:.3} n_fj, bound {:.3} n_fj)",
        1.0 / q + 0.05
    );
    if violations == 0 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn structural_fuzzing() -> Outcome {
    let schema = DatasetSchema::new(
        vec![
            AttributeSpec::numeric("x0", -1.0, 1.0),
            AttributeSpec::numeric("x1", -1.0, 1.0),
            AttributeSpec::categorical("c", 5),
            AttributeSpec::numeric("x2", -1.0, 1.0),
        ],
        4,
    )
    .unwrap();
    let config = TreeConfig {
        n_min: 20,
        ..TreeConfig::default()
    };
    let (max_leaves, max_depth) = (config.max_leaves, config.max_depth);
    let mut tree = HoeffdingTree::new(&schema, config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let calls = 1_000_000;
    let (mut peak_leaves, mut peak_depth) = (0, 0);
    for i in 1..=calls {
        let x0: f64 = rng.random_range(-1.0..1.0);
        let x1: f64 = rng.random_range(-1.0..1.0);
        let c = rng.random_range(0..5usize);
        let x2: f64 = rng.random_range(-1.0..1.0);
        // A checkerboard with categorical shifts and 10% noise keeps leaves splitting.
        let mut label = (((x0 * 6.0).floor() + (x1 * 6.0).floor()) as i64 + c as i64).rem_euclid(4) as usize;
        if rng.random_bool(0.1) {
            label = rng.random_range(0..4);
        }
        tree.train_one(&Sample::new(vec![x0, x1, c as f64, x2], label));
        peak_leaves = peak_leaves.max(tree.leaf_count());
        peak_depth = peak_depth.max(tree.depth());
        if tree.leaf_count() > max_leaves || tree.depth() > max_depth {
            return Fail(format!("limit exceeded after {i} calls"));
        }
        if i % 10_000 == 0 || i == calls {
            if let Err(e) = tree.check_invariants() {
                return Fail(format!("after {i} calls: {e}"));
            }
        }
    }
    Pass(format!(
        "{calls} calls, peak {peak_leaves} leaves (<= {max_leaves}), depth {peak_depth} (<= {max_depth}), {} frozen leaves",
        tree.counters().frozen_leaves
    ))
}

fn fixed_electricity() -> Outcome {
    let (schema, csv) = match dataset("electricity") {
        Ok(d) => d,
        Err(e) => return Skip(e),
    };
    let run = |backend| {
        let config = TreeConfig {
            numeric_backend: backend,
            ..TreeConfig::default()
        };
        evaluate_file(&csv, &schema, &config, DEFAULT_WINDOW).map(|(m, _)| m.accuracy)
    };
    match (run(NumericBackend::Float), run(NumericBackend::Fixed)) {
        (Ok(f), Ok(q)) => {
            let detail = format!("float {} fixed {} diff {:.2} points (<= 1.00)", pct(f), pct(q), 100.0 * (f - q).abs());
            if (f - q).abs() <= 0.01 {
                Pass(detail)
            } else {
                Fail(detail)
            }
        }
        (Err(e), _) | (_, Err(e)) => Fail(e.to_string()),
    }
}

fn fixed_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let max = Fixed30::MAX.to_f64();
    let worst = (0..1_000_000)
        .map(|_| {
            let x = rng.random_range(-2.0..=max);
            (Fixed30::from_f64(x).to_f64() - x).abs()
        })
        .fold(0.0, f64::max);
    let detail = format!("10^6 round trips, max error {worst:.3e} (<= 2^-31 = {:.3e})", 2f64.powi(-31));
    if worst <= 2f64.powi(-31) {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mixed.csv");
    write_csv(SynthKind::Mixed, 100_000, 11, std::fs::File::create(&csv).unwrap()).unwrap();
    let schema = SynthKind::Mixed.schema();
    let run = || evaluate_file(&csv, &schema, &TreeConfig::default(), DEFAULT_WINDOW).unwrap();
    let (m1, t1) = run();
    let (m2, t2) = run();
    let same = m1.accuracy == m2.accuracy
        && m1.splits_taken == m2.splits_taken
        && m1.without_timing() == m2.without_timing()
        && t1.snapshot() == t2.snapshot();
    let detail = format!(
        "accuracy {} / {}, splits {} / {}, snapshots {} bytes, identical: {same}",
        pct(m1.accuracy),
        pct(m2.accuracy),
        m1.splits_taken,
        m2.splits_taken,
        t1.snapshot().len()
    );
    if same {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: "1",
        title: "benchmark accuracy at |Q|=8",
        run: table1,
        known_failure: None,
    },
    Criterion {
        id: "2",
        title: "quantile vs gaussian gap on person",
        run: person_gap,
        known_failure: None,
    },
    Criterion {
        id: "3",
        title: "quantile sweep shape on person",
        run: person_sweep,
        known_failure: None,
    },
    Criterion {
        id: "4",
        title: "quantile tracker convergence",
        run: tracker_convergence,
        known_failure: Some("a constant step leaves stationary jitter of about sqrt(lambda/8) = 0.035 per quantile, so the maximum over 8 quantiles exceeds 0.05 in about half of all runs"),
    },
    Criterion {
        id: "5",
        title: "incremental mean/variance oracle",
        run: welford_oracle,
        known_failure: None,
    },
    Criterion {
        id: "6",
        title: "gini reduction vs split quality",
        run: quality_consistency,
        known_failure: None,
    },
    Criterion {
        id: "7",
        title: "hoeffding bound spot value",
        run: hoeffding_spot_value,
        known_failure: Some("the stated value is off by 2e-6; sqrt(ln(1000)/400) = 0.1314130442"),
    },
    Criterion {
        id: "8",
        title: "partition oracle on short streams",
        run: partition_oracle,
        known_failure: Some("with at most 500 samples the tracked quantiles have not converged to within 0.05"),
    },
    Criterion {
        id: "9",
        title: "structural invariants under fuzzing",
        run: structural_fuzzing,
        known_failure: None,
    },
    Criterion {
        id: "10a",
        title: "fixed vs float accuracy on electricity",
        run: fixed_electricity,
        known_failure: None,
    },
    Criterion {
        id: "10b",
        title: "fixed-point round trip",
        run: fixed_round_trip,
        known_failure: None,
    },
    Criterion {
        id: "11",
        title: "determinism of complete runs",
        run: determinism,
        known_failure: None,
    },
];

fn main() -> ExitCode {
    // Positional arguments filter by criterion id; libtest flags are ignored.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    let (mut pass, mut fail, mut skip) = (0, 0, 0);
    for c in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| f == c.id) {
            continue;
        }
        let label = format!("criterion {:<3} {:<40}", c.id, c.title);
        match (c.run)() {
            Pass(d) => {
                pass += 1;
                println!("{label} PASS  {d}");
            }
            Skip(d) => {
                skip += 1;
                println!("{label} SKIP  {d}");
            }
            Fail(d) => {
                fail += 1;
                match c.known_failure {
                    Some(why) => println!("{label} FAIL  {d} [known: {why}]"),
                    None => {
                        unexpected += 1;
                        println!("{label} FAIL  {d}");
                    }
                }
            }
        }
    }
    println!("acceptance: {pass} passed, {fail} failed ({unexpected} unexpected), {skip} skipped");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
