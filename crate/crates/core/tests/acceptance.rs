//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use tempus_harness::aggregate::{clipped_ratio, skill_score, win_rate, ErrorPivot};
use tempus_harness::forecasters::{default_grid, fit_forecast, HyperAssignment, HyperGrid, ModelId, ParamValue};
use tempus_harness::io::generated_to_csv;
use tempus_harness::metrics::MetricId;
use tempus_harness::pipeline::{check_leakage, evaluate, run_benchmark, tune, AuditRole, BenchConfig, ModelEntry};
use tempus_harness::synth::{generate, Family, GenSpec};
use tempus_harness::{plan_windows, Matrix64, SeriesFrame, TaskSpec};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

// Criterion 1 ---------------------------------------------------------------

fn oracle(metric: MetricId, f: &[Vec<f64>], y: &[Vec<f64>], c: &[Vec<f64>]) -> Option<f64> {
    let n = f.len();
    let h = f[0].len();
    let count = (n * h) as f64;
    let mut total = 0.0;
    for i in 0..n {
        let scale = if metric == MetricId::Mase {
            let l = c[i].len();
            if l < 2 {
                return None;
            }
            let mut d = 0.0;
            for t in 1..l {
                d += (c[i][t] - c[i][t - 1]).abs();
            }
            let d = d / (l - 1) as f64;
            if d == 0.0 {
                return None;
            }
            d
        } else {
            1.0
        };
        for t in 0..h {
            let e = f[i][t] - y[i][t];
            total += match metric {
                MetricId::Mae => e.abs(),
                MetricId::Mse | MetricId::Rmse => e * e,
                MetricId::Mape => {
                    if y[i][t] == 0.0 {
                        return None;
                    }
                    100.0 * e.abs() / y[i][t].abs()
                }
                MetricId::Mase => e.abs() / scale,
            };
        }
    }
    let mean = total / count;
    Some(if metric == MetricId::Rmse { mean.sqrt() } else { mean })
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..len).map(|_| rng.gen_range(-100.0..100.0)).collect())
        .collect()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut undefined = BTreeMap::<MetricId, usize>::new();
    for case in 0..200 {
        let n = rng.gen_range(1..=3);
        let h = rng.gen_range(1..=8);
        let l = rng.gen_range(1..=12);
        let f = random_rows(&mut rng, n, h);
        let mut y = random_rows(&mut rng, n, h);
        let mut c = random_rows(&mut rng, n, l);
        if case % 7 == 0 {
            y[rng.gen_range(0..n)][rng.gen_range(0..h)] = 0.0;
        }
        if case % 5 == 0 {
            let row = rng.gen_range(0..n);
            let v = c[row][0];
            c[row].iter_mut().for_each(|x| *x = v);
        }
        let (fm, ym, cm) = (
            Matrix64::from_rows(&f).unwrap(),
            Matrix64::from_rows(&y).unwrap(),
            Matrix64::from_rows(&c).unwrap(),
        );
        for metric in MetricId::ALL {
            let got = metric.compute(&fm, &ym, &cm).ok();
            let want = oracle(metric, &f, &y, &c);
            match (got, want) {
                (Some(a), Some(b)) => ensure!(rel_close(a, b, 1e-12), "case {case} {metric}: {a} vs oracle {b}"),
                (None, None) => *undefined.entry(metric).or_default() += 1,
                _ => return Err(format!("case {case} {metric}: defined {got:?} vs oracle {want:?}")),
            }
        }
    }
    ensure!(
        undefined.get(&MetricId::Mape).copied().unwrap_or(0) > 0 && undefined.get(&MetricId::Mase).copied().unwrap_or(0) > 0,
        "no undefined cases exercised"
    );
    Ok(format!(
        "200 triples; undefined MAPE {} / MASE {} flagged identically",
        undefined[&MetricId::Mape], undefined[&MetricId::Mase]
    ))
}

// Criterion 2 ---------------------------------------------------------------

fn random_pivot(rng: &mut ChaCha8Rng) -> ErrorPivot {
    let (m, b) = (5, 6);
    let mut cells: Vec<Vec<Option<f64>>> = (0..m)
        .map(|_| (0..b).map(|_| Some(rng.gen_range(0.0..10.0))).collect())
        .collect();
    for row in 0..m {
        for col in 0..b {
            let roll: f64 = rng.gen();
            if roll < 0.05 {
                let other = (row + rng.gen_range(1..m)) % m;
                cells[row][col] = cells[other][col];
            } else if roll < 0.15 {
                cells[row][col] = None;
            }
        }
    }
    ErrorPivot::new(
        MetricId::Mae,
        (0..m).map(|i| format!("m{i}")).collect(),
        (0..b).map(|i| format!("t{i}")).collect(),
        cells,
    )
    .unwrap()
}

fn brute_win_rate(p: &ErrorPivot, m: usize) -> Option<f64> {
    let mut score = 0.0;
    let mut count = 0usize;
    for other in 0..p.models.len() {
        if other == m {
            continue;
        }
        for b in 0..p.tasks.len() {
            if let (Some(x), Some(y)) = (p.cells[m][b], p.cells[other][b]) {
                count += 1;
                score += if x < y {
                    1.0
                } else if x == y {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    (count > 0).then(|| score / count as f64)
}

fn brute_skill(p: &ErrorPivot, m: usize, base: usize) -> Option<f64> {
    let mut product = 1.0f64;
    let mut count = 0;
    for b in 0..p.tasks.len() {
        if let (Some(e), Some(eb)) = (p.cells[m][b], p.cells[base][b]) {
            let r = if eb == 0.0 {
                if e == 0.0 {
                    1.0
                } else {
                    100.0
                }
            } else {
                (e / eb).clamp(0.01, 100.0)
            };
            product *= r;
            count += 1;
        }
    }
    (count > 0).then(|| 1.0 - product.powf(1.0 / count as f64))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..100 {
        let p = random_pivot(&mut rng);
        for (i, name) in p.models.iter().enumerate() {
            let (got, want) = (win_rate(&p, name).unwrap(), brute_win_rate(&p, i));
            ensure!(
                got.map(f64::to_bits) == want.map(f64::to_bits),
                "case {case} win rate {name}: {got:?} vs {want:?}"
            );
            let (got, want) = (skill_score(&p, name, "m0").unwrap(), brute_skill(&p, i, 0));
            match (got, want) {
                // Relative error measured on 1 − S, the geometric mean.
                (Some(a), Some(b)) => ensure!(rel_close(1.0 - a, 1.0 - b, 1e-12), "case {case} skill {name}: {a} vs {b}"),
                (None, None) => {}
                _ => return Err(format!("case {case} skill {name}: {got:?} vs {want:?}")),
            }
        }
        let own = skill_score(&p, "m0", "m0").unwrap();
        ensure!(own.is_none_or(|s| s.to_bits() == 0.0f64.to_bits()), "case {case}: baseline self-skill {own:?}");
    }
    Ok("100 pivots 5x6; win rate bitwise, skill within 1e-12, self-skill 0".into())
}

// Criterion 3 ---------------------------------------------------------------

fn criterion_3() -> Outcome {
    ensure!(clipped_ratio(4.0, 0.0) == 100.0, "zero baseline ratio {}", clipped_ratio(4.0, 0.0));
    ensure!(clipped_ratio(0.0, 0.0) == 1.0, "0/0 ratio");
    ensure!(clipped_ratio(1e-5, 1.0) == 0.01, "low clip {}", clipped_ratio(1e-5, 1.0));
    ensure!(clipped_ratio(0.0, 3.0) == 0.01, "zero model error clip");
    ensure!(clipped_ratio(1e6, 1.0) == 100.0, "high clip");
    let pivot = ErrorPivot::new(
        MetricId::Mae,
        vec!["base".into(), "m".into(), "good".into()],
        vec!["t".into()],
        vec![vec![Some(0.0)], vec![Some(2.5)], vec![Some(0.0)]],
    )
    .unwrap();
    let s = skill_score(&pivot, "m", "base").unwrap().unwrap();
    ensure!(rel_close(s, -99.0, 1e-12), "single zero-baseline task gives S = {s}");
    let s = skill_score(&pivot, "good", "base").unwrap().unwrap();
    ensure!(s == 0.0, "0/0 task gives S = {s}");
    let low = ErrorPivot::new(
        MetricId::Mae,
        vec!["base".into(), "m".into()],
        vec!["t".into()],
        vec![vec![Some(1000.0)], vec![Some(1.0)]],
    )
    .unwrap();
    let s = skill_score(&low, "m", "base").unwrap().unwrap();
    ensure!(rel_close(s, 0.99, 1e-12), "ratio 0.001 clipped gives S = {s}");
    Ok("E_b=0,E_m>0 -> 100; ratio < 0.01 -> 0.01; S in {-99, 0.99}".into())
}

// Criterion 4 ---------------------------------------------------------------

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut spec = GenSpec::new(Family::Periodic, 600);
    spec.period = Some(24.0);
    let out = generate(&spec).map_err(|e| e.to_string())?;
    let task = TaskSpec::new("periodic24", 96, 24, SeriesFrame::univariate(out.y));
    let plan = plan_windows(600, 96, 24, 3, 3).map_err(|e| e.to_string())?;
    let grid = HyperGrid::new(
        ModelId::SeasonalNaive,
        [7, 12, 24, 30]
            .iter()
            .map(|&p| HyperAssignment::new(ModelId::SeasonalNaive, [("L", ParamValue::Int(p))]))
            .collect(),
    );
    let tuned = tune(&task, &grid, &plan).map_err(|e| e.to_string())?;
    let chosen = grid.assignments.iter().find(|a| a.params == tuned.chosen).unwrap();
    let result = evaluate(&task, chosen, &plan);
    let mae = result.metrics[&MetricId::Mae].ok_or("test MAE missing")?;
    let elapsed = start.elapsed();
    ensure!(tuned.chosen["L"] == ParamValue::Int(24), "chose {}", chosen.label());
    ensure!(mae < 1e-9, "test MAE {mae:e}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("L=24, test MAE {mae:.3e}, {:.3}s", elapsed.as_secs_f64()))
}

// Criterion 5 ---------------------------------------------------------------

fn synth_task(id: &str, family: Family, seed: u64, l: usize, h: usize) -> TaskSpec {
    let mut spec = GenSpec::new(family, 300);
    spec.noise_scale = 0.5;
    spec.seed = seed;
    if family == Family::Periodic {
        spec.period = Some(12.0);
    }
    TaskSpec::new(id, l, h, SeriesFrame::univariate(generate(&spec).unwrap().y))
}

fn criterion_5() -> Outcome {
    let tasks = vec![
        synth_task("add", Family::AdditiveRandom, 5, 48, 12),
        synth_task("mul", Family::MultiplicativeFixed, 6, 36, 8),
        synth_task("per", Family::Periodic, 7, 60, 12),
    ];
    let models = [ModelId::SeasonalNaive, ModelId::Ses, ModelId::HoltWintersAdd, ModelId::Theta]
        .map(ModelEntry::Native)
        .to_vec();
    let out = run_benchmark(&tasks, &models, &BenchConfig::default());
    let violations = check_leakage(&out.audit);
    ensure!(violations.is_empty(), "{violations:?}");
    for t in &tasks {
        for m in &models {
            let name = m.name();
            let roles: Vec<AuditRole> = out
                .audit
                .iter()
                .filter(|r| r.task_id == t.id && r.model == name)
                .map(|r| r.role)
                .collect();
            ensure!(roles.contains(&AuditRole::Tune), "{}/{name}: no tuning records", t.id);
            ensure!(roles.contains(&AuditRole::Test), "{}/{name}: no test records", t.id);
        }
    }
    Ok(format!("12 cells, {} audit records, 0 violations", out.audit.len()))
}

// Criterion 6 ---------------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut checked = 0;
    let mut zero_mean = 0;
    for c in [0.5, 3.0, 17.25, 1000.0] {
        let series = vec![c; 60];
        let task = TaskSpec::new("const", 60, 9, SeriesFrame::univariate(series.clone()));
        let context = Matrix64::row_vector(series);
        for model in ModelId::ALL {
            let exact = !matches!(model, ModelId::HoltWintersAdd | ModelId::HoltWintersMul | ModelId::Arima);
            for a in &default_grid(model, &task).assignments {
                // A zero-mean stationary ARIMA cannot represent a level.
                if model == ModelId::Arima && a.get_usize("d").unwrap() == 0 && !a.get_bool("with_constant").unwrap() {
                    zero_mean += 1;
                    continue;
                }
                let f = fit_forecast(&context, 9, a).map_err(|e| format!("{model} {} on c={c}: {e}", a.label()))?;
                for &v in f.row(0) {
                    if exact {
                        ensure!(v == c, "{model} {} on c={c}: {v}", a.label());
                    } else {
                        ensure!((v - c).abs() <= 1e-9 * c.max(1.0), "{model} {} on c={c}: {v}", a.label());
                    }
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} model/assignment/constant combinations; {zero_mean} zero-mean ARIMA fits not applicable"
    ))
}

// Criterion 7 ---------------------------------------------------------------

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..50 {
        let n = rng.gen_range(1..=3);
        let h = rng.gen_range(1..=8);
        let l = rng.gen_range(2..=12);
        let mut gen = |len| -> Matrix64 {
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..len).map(|_| rng.gen_range(0.1..100.0)).collect()).collect();
            Matrix64::from_rows(&rows).unwrap()
        };
        let (f, y, c) = (gen(h), gen(h), gen(l));
        for k in [0.5, 3.0, 1000.0] {
            let s = |m: &Matrix64| m.map(|v| v * k);
            let (fs, ys, cs) = (s(&f), s(&y), s(&c));
            for (metric, power) in [(MetricId::Mase, 0), (MetricId::Mape, 0), (MetricId::Mae, 1), (MetricId::Rmse, 1)] {
                let base = metric.compute(&f, &y, &c).map_err(|e| e.to_string())?;
                let scaled = metric.compute(&fs, &ys, &cs).map_err(|e| e.to_string())?;
                let want = base * k.powi(power);
                ensure!(rel_close(scaled, want, 1e-9), "case {case} {metric} c={k}: {scaled} vs {want}");
            }
        }
    }
    Ok("50 instances x c in {0.5, 3, 1000}".into())
}

// Criterion 8 ---------------------------------------------------------------

fn criterion_8() -> Outcome {
    let mut spec = GenSpec::new(Family::AdditiveFixed, 10_000);
    spec.noise_scale = 2.0;
    spec.seed = 8;
    let out = generate(&spec).map_err(|e| e.to_string())?;
    let resid: Vec<f64> = out.y.iter().zip(&out.y_base).map(|(y, b)| y - b).collect();
    ensure!(resid.iter().all(|&r| r >= 0.0), "negative residual");
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    ensure!((1.9..=2.1).contains(&mean), "mean {mean}");
    ensure!((3.6..=4.4).contains(&var), "variance {var}");

    let mut clean = spec.clone();
    clean.noise_scale = 0.0;
    let clean = generate(&clean).map_err(|e| e.to_string())?;
    ensure!(
        clean.y.iter().zip(&clean.y_base).all(|(a, b)| a.to_bits() == b.to_bits()),
        "beta=0 differs from base"
    );
    let a = generated_to_csv(&generate(&spec).unwrap(), true).map_err(|e| e.to_string())?;
    let b = generated_to_csv(&generate(&spec).unwrap(), true).map_err(|e| e.to_string())?;
    ensure!(a == b, "CSV differs between runs");
    Ok(format!("mean {mean:.4}, variance {var:.4}, beta=0 bitwise, CSV identical"))
}

// Criterion 9 ---------------------------------------------------------------

fn run_tempus(dir: &Path, args: &[&str]) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tempus"))
        .args(args)
        .current_dir(dir)
        .env_remove("TEMPUS_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    let code = out.status.code().unwrap_or(-1);
    if code != 0 {
        return Err(format!("tempus {args:?} exited {code}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(code)
}

fn bundle_hash(dir: &Path) -> Result<(String, usize), String> {
    let mut names: Vec<_> = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut hasher = Sha256::new();
    for name in &names {
        hasher.update(name.as_encoded_bytes());
        hasher.update(fs::read(dir.join(name)).map_err(|e| e.to_string())?);
    }
    Ok((hasher.finalize().iter().map(|b| format!("{b:02x}")).collect(), names.len()))
}

fn end_to_end(dir: &Path) -> Result<(String, usize), String> {
    let gen_a = json!({"family": "periodic", "num_points": 480, "period": 24, "noise_scale": 0.3, "seed": 21});
    let gen_b = json!({"family": "multiplicative_fixed", "num_points": 400, "noise_scale": 1.0, "seed": 22});
    fs::write(dir.join("a.json"), gen_a.to_string()).unwrap();
    fs::write(dir.join("b.json"), gen_b.to_string()).unwrap();
    run_tempus(dir, &["generate", "a.json", "a.csv"])?;
    run_tempus(dir, &["generate", "b.json", "b.csv"])?;
    let manifest = json!({
        "run_id": "e2e",
        "seed": 99,
        "output_dir": "run",
        "tasks": [
            {"id": "periodic", "csv": "a.csv", "context_len": 96, "horizon": 24},
            {"id": "mult", "csv": "b.csv", "context_len": 60, "horizon": 12},
            {"id": "add_fixed", "generator": {"family": "additive_fixed", "num_points": 360, "noise_scale": 0.5}, "context_len": 72, "horizon": 12},
            {"id": "add_random", "generator": {"family": "additive_random", "num_points": 360, "noise_scale": 0.5}, "context_len": 72, "horizon": 12}
        ],
        "models": [
            {"model": "seasonal_naive"}, {"model": "ses"}, {"model": "holt_winters_add"},
            {"model": "theta"}, {"model": "arima"}, {"model": "drift"}
        ]
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    run_tempus(dir, &["eval", "manifest.json"])?;
    for m in ["MAE", "MASE"] {
        let pivot = format!("run/pivot_{m}.csv");
        let out = format!("run/aggregate_{m}.csv");
        run_tempus(dir, &["aggregate", &pivot, "--baseline", "seasonal_naive", "--out", &out])?;
    }
    bundle_hash(&dir.join("run"))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let first = tempfile::tempdir().map_err(|e| e.to_string())?;
    let second = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (h1, files) = end_to_end(first.path())?;
    let t1 = start.elapsed();
    let (h2, _) = end_to_end(second.path())?;
    ensure!(h1 == h2, "bundle hashes differ: {h1} vs {h2}");
    ensure!(t1 < Duration::from_secs(60), "one run took {t1:?}");
    Ok(format!("4 tasks x 6 models, {files} files, sha256 {}.., {:.2}s per run", &h1[..12], t1.as_secs_f64()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("metric oracle equivalence", criterion_1),
        ("aggregator brute-force equivalence", criterion_2),
        ("clip semantics", criterion_3),
        ("tuner correctness", criterion_4),
        ("leakage audit", criterion_5),
        ("fixed-point suite", criterion_6),
        ("scale-property suite", criterion_7),
        ("generator statistics", criterion_8),
        ("end-to-end determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
