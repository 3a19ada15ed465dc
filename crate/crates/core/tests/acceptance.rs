//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p hasqoe --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use hasqoe::binning::DownSwitchBin;
use hasqoe::evaluation::fit_compensation;
use hasqoe::fitting::extract_all;
use hasqoe::model::unclamped_score;
use hasqoe::weights::REFERENCE_WEIGHTS_JSON;
use hasqoe::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const ALPHA: [f64; 5] = [1.11, 2.20, 3.20, 4.00, 4.50];
const BETA: [((u8, i8), f64); 10] = [
    ((5, -1), 0.01),
    ((4, -1), 0.01),
    ((3, -1), 3.93),
    ((2, -1), 7.89),
    ((5, -2), 3.93),
    ((4, -2), 4.13),
    ((3, -2), 14.36),
    ((5, -3), 18.69),
    ((4, -3), 18.99),
    ((5, -4), 24.76),
];
const GAMMA: [f64; 6] = [0.0, 8.42, 16.15, 24.16, 45.58, 50.65];

fn stall(after: usize, seconds: f64) -> InterruptionEvent {
    InterruptionEvent::new(after, seconds)
}

fn bundled_weights() -> Outcome {
    let w = ModelWeights::reference();
    ensure!(w.alpha == ALPHA, "alpha {:?}", w.alpha);
    for ((i, j), value) in BETA {
        ensure!(
            w.beta_at(i, j) == Some(value),
            "beta({i},{j}) = {:?}",
            w.beta_at(i, j)
        );
    }
    ensure!(w.beta_um == 0.0, "beta_um {}", w.beta_um);
    ensure!(w.gamma == GAMMA, "gamma {:?}", w.gamma);
    ensure!(
        ModelWeights::from_json(REFERENCE_WEIGHTS_JSON).unwrap() == w,
        "bundled file differs"
    );
    let again = ModelWeights::from_json(&w.to_json()).map_err(|e| e.to_string())?;
    ensure!(again == w, "weights do not survive a JSON round trip");
    Ok("22 values exact, JSON round trip exact".into())
}

fn worked_predictions() -> Outcome {
    let w = ModelWeights::reference();
    let cfg = BinningConfig::default();
    let p = |t: &SessionTrace| predict(t, &w, &cfg).unwrap();

    let top = SessionTrace::constant(5.0, 10).unwrap();
    ensure!(
        (p(&top) - 4.50).abs() < 1e-9,
        "constant top quality gave {}",
        p(&top)
    );

    // 20 boundaries plus one long stall: one event in 21 is in the last bin
    let long_stall = SessionTrace::new(vec![5.0; 21], vec![stall(10, 4.0)]).unwrap();
    let expected = 4.5 - 50.65 / 21.0;
    ensure!(
        (p(&long_stall) - expected).abs() < 1e-9,
        "long stall gave {}",
        p(&long_stall)
    );
    ensure!(
        format!("{:.4}", p(&long_stall)) == "2.0881",
        "long stall gave {}",
        p(&long_stall)
    );

    let floor = SessionTrace::new(vec![1.0, 1.0], vec![stall(1, 2.5)]).unwrap();
    ensure!(p(&floor) == 1.0, "floored session gave {}", p(&floor));

    Ok(format!("4.5000, {:.4}, 1.0000", p(&long_stall)))
}

fn partition_of_unity() -> Outcome {
    let start = Instant::now();
    let config = GeneratorConfig {
        rng_seed: 2024,
        ..Default::default()
    };
    let sessions = generate_sessions(&config, 1000).map_err(|e| e.to_string())?;
    let features = extract_all(&sessions, &BinningConfig::default()).map_err(|e| e.to_string())?;
    let mut zero_event = 0;
    for (s, f) in sessions.iter().zip(&features) {
        ensure!(
            (f.quality_sum() - 1.0).abs() <= 1e-12,
            "quality sum {}",
            f.quality_sum()
        );
        if s.n_boundaries() + s.interruptions().len() == 0 {
            zero_event += 1;
            ensure!(
                f.event_sum() == 0.0,
                "zero-event session has event mass {}",
                f.event_sum()
            );
        } else {
            ensure!(
                (f.event_sum() - 1.0).abs() <= 1e-12,
                "event sum {}",
                f.event_sum()
            );
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "1000 sessions ({zero_event} without events) in {elapsed:.2?}"
    ))
}

fn monotone_weights() -> Outcome {
    let w = ModelWeights::reference();
    // (a) longer stalls cost more
    ensure!(
        w.gamma.windows(2).all(|g| g[0] <= g[1]),
        "gamma not monotone"
    );
    for bin in DownSwitchBin::ALL {
        // (b) deeper drops from the same start cost more
        if let Some(deeper) = DownSwitchBin::new(bin.start(), bin.amplitude() - 1) {
            ensure!(
                w.beta(deeper) >= w.beta(bin),
                "{deeper:?} cheaper than {bin:?}"
            );
        }
        // (c) equal drops from a lower start cost more
        if let Some(lower) = DownSwitchBin::new(bin.start() - 1, bin.amplitude()) {
            ensure!(
                w.beta(lower) >= w.beta(bin),
                "{lower:?} cheaper than {bin:?}"
            );
        }
    }
    // (d) a one-step drop to the bottom costs more than a two-step drop from the top
    ensure!(
        w.beta_at(2, -1) > w.beta_at(5, -2),
        "beta(2,-1) <= beta(5,-2)"
    );

    // the same orderings hold for predicted scores on generated sessions
    let cfg = BinningConfig::default();
    let config = GeneratorConfig {
        rng_seed: 77,
        ..Default::default()
    };
    let sessions = generate_sessions(&config, 500).map_err(|e| e.to_string())?;
    let edges = cfg.interruption_edges;
    let mut checked = 0;
    for s in &sessions {
        let base = predict(s, &w, &cfg).unwrap();
        for (k, ev) in s.interruptions().iter().enumerate() {
            let bin = cfg.bin_interruption(ev.duration_s).unwrap();
            if bin == 6 {
                continue;
            }
            let mut stalls = s.interruptions().to_vec();
            stalls[k].duration_s = if bin == 5 {
                edges[4] + 1.0
            } else {
                0.5 * (edges[bin - 1] + edges[bin])
            };
            let longer = SessionTrace::new(s.segments().to_vec(), stalls).unwrap();
            ensure!(
                predict(&longer, &w, &cfg).unwrap() <= base,
                "longer stall raised the score"
            );
            checked += 1;
        }
        let f = extract_features(s, &cfg).unwrap();
        for bin in DownSwitchBin::ALL {
            let mass = f.downswitch(bin);
            if mass == 0.0 {
                continue;
            }
            let moves = [
                DownSwitchBin::new(bin.start(), bin.amplitude() - 1),
                DownSwitchBin::new(bin.start() - 1, bin.amplitude()),
            ];
            for target in moves.into_iter().flatten() {
                let mut g = f;
                g.f_downswitch[bin.index()] = 0.0;
                g.f_downswitch[target.index()] += mass;
                ensure!(
                    predict_features(&g, &w) <= predict_features(&f, &w) + 1e-12,
                    "{bin:?} -> {target:?} raised the score"
                );
                checked += 1;
            }
        }
    }
    Ok(format!(
        "weight orderings hold, {checked} session perturbations non-increasing"
    ))
}

fn recovery() -> Outcome {
    let start = Instant::now();
    let config = GeneratorConfig {
        rng_seed: 5,
        ..Default::default()
    };
    let options = LabelOptions {
        reject_clamped: true,
        ..Default::default()
    };
    let truth = ModelWeights::reference();
    let ds = generate_labeled_dataset(&config, 500, &truth, &options).map_err(|e| e.to_string())?;
    let cfg = BinningConfig::default();
    let features = extract_all(ds.sessions(), &cfg).unwrap();
    let mut covered = [false; N_FEATURES];
    for f in &features {
        ensure!(unclamped_score(f, &truth) >= 1.0, "clamped label kept");
        for (c, x) in covered.iter_mut().zip(f.design_row()) {
            *c |= x != 0.0;
        }
    }
    ensure!(covered.iter().all(|&c| c), "uncovered bins: {covered:?}");

    let report = fit(&ds, &cfg).map_err(|e| e.to_string())?;
    let err = report
        .weights()
        .to_vector()
        .iter()
        .zip(truth.to_vector())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(err <= 1e-6, "max weight error {err:e}");

    let eval = run_split_protocol(
        &ds,
        &SplitProtocol::standard(0),
        &FittedHistogram::default(),
        Compensation::None,
    )
    .map_err(|e| e.to_string())?;
    ensure!(eval.pcc >= 0.999, "split PCC {}", eval.pcc);
    ensure!(eval.rmse <= 0.02, "split RMSE {}", eval.rmse);
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "max weight error {err:.1e}; 50 splits PCC {:.6} RMSE {:.2e}; {elapsed:.2?}",
        eval.pcc, eval.rmse
    ))
}

fn oracle_pcc(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn oracle_rmse(x: &[f64], y: &[f64]) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    (sq / x.len() as f64).sqrt()
}

/// Slope and intercept from the 2x2 normal equations.
fn oracle_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let det = n * sxx - sx * sx;
    ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
}

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cases = 200;
    for case in 0..cases {
        let n = rng.random_range(5..120);
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
        let p: Vec<f64> = t
            .iter()
            .map(|y| 0.7 * y + rng.random_range(-1.0..1.0) + 0.5)
            .collect();
        let r = pcc(&p, &t).unwrap();
        ensure!(
            (r - oracle_pcc(&p, &t)).abs() <= 1e-9,
            "case {case}: pcc {r}"
        );
        let e = rmse(&p, &t).unwrap();
        ensure!(
            (e - oracle_rmse(&p, &t)).abs() <= 1e-12,
            "case {case}: rmse {e}"
        );

        let (slope, intercept) = oracle_line(&p, &t);
        let map = fit_compensation(&p, &t).unwrap();
        ensure!(
            (map.slope - slope).abs() <= 1e-9 && (map.intercept - intercept).abs() <= 1e-9,
            "case {case}: map {map:?} vs ({slope}, {intercept})"
        );
        let compensated = linear_compensate(&p, &t).unwrap().adjusted;
        let residual: Vec<f64> = p.iter().map(|x| slope * x + intercept).collect();
        let ec = rmse(&compensated, &t).unwrap();
        ensure!(
            (ec - oracle_rmse(&residual, &t)).abs() <= 1e-9,
            "case {case}: compensated rmse"
        );
        ensure!(ec <= e + 1e-12, "case {case}: compensation raised RMSE");

        let a = rng.random_range(0.1..5.0);
        let b = rng.random_range(-3.0..3.0);
        let mapped: Vec<f64> = p.iter().map(|x| a * x + b).collect();
        ensure!(
            (pcc(&mapped, &t).unwrap() - r).abs() <= 1e-12,
            "case {case}: affine map changed PCC"
        );
    }
    Ok(format!(
        "{cases} random prediction sets match brute-force oracles"
    ))
}

fn external_dataset() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // an external dataset: labels from perturbed weights, stored as NDJSON
    // with explicit tags and ids, as a third party would supply it
    let labeler = ModelWeights::reference().scaled(0.9);
    let config = GeneratorConfig {
        rng_seed: 31,
        ..Default::default()
    };
    let ds = generate_labeled_dataset(&config, 400, &labeler, &LabelOptions::default())
        .map_err(|e| e.to_string())?;
    let ndjson: String = ds
        .sessions()
        .iter()
        .map(|s| serde_json::to_string(&s.to_record()).unwrap() + "\n")
        .collect();
    let path = dir.path().join("external.ndjson");
    std::fs::write(&path, ndjson).map_err(|e| e.to_string())?;

    let out = dir.path().join("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_qoe"))
        .args([
            "evaluate",
            "--fit",
            "--splits",
            "50",
            "--test-size",
            "90",
            "--input",
        ])
        .arg(&path)
        .arg("--output")
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "evaluate exited with {status}");
    let report: EvaluationReport =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).map_err(|e| e.to_string())?;
    let splits = report.per_split.as_ref().map_or(0, Vec::len);
    ensure!(splits == 50, "{splits} splits in report");
    ensure!(
        report.pcc.is_finite() && report.rmse.is_finite(),
        "non-finite metrics"
    );

    // the library path over the same file gives the same numbers
    let parsed =
        parse_sessions(&std::fs::read_to_string(&path).unwrap()).map_err(|e| e.to_string())?;
    let direct = run_split_protocol(
        &LabeledDataset::new(parsed).unwrap(),
        &SplitProtocol::standard(0),
        &FittedHistogram::default(),
        Compensation::Training,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        direct.pcc == report.pcc && direct.rmse == report.rmse,
        "CLI and library disagree"
    );
    Ok(format!(
        "400-session external file, 50 splits, PCC {:.4} RMSE {:.4} (no published data to reproduce)",
        report.pcc, report.rmse
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("bundled weight table", bundled_weights),
        ("worked predictions", worked_predictions),
        ("histogram partition of unity", partition_of_unity),
        ("monotone penalties", monotone_weights),
        ("plant-and-recover fit", recovery),
        ("metric and compensation oracles", metrics),
        ("external dataset protocol", external_dataset),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {}: {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {}: {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
