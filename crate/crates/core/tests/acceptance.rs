//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. The experiment criteria share one synthetic benchmark.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crossrumour::corpus::{split_dataset, synth_bilingual, Label, SynthConfig};
use crossrumour::eval::{
    compute_metrics, render_ablation, render_matrix, render_sweep, run_ablation, run_matrix, run_semi_supervised_sweep,
    ExperimentResult, ExperimentSettings, PreparedDirection, Variant,
};
use crossrumour::model::{
    grad_check, init_params, train_weighted, Dims, FreezePolicy, Prediction, TrainConfig, TrainExample,
};
use crossrumour::selftrain::{balance_classes, filter_by_confidence};
use crossrumour::tokenizer::{TokenSequence, CLS, NUM_SPECIAL, PAD};

const SEEDS: [u64; 3] = [1, 2, 3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn random_seq(rng: &mut ChaCha8Rng, vocab: usize, max_len: usize) -> TokenSequence {
    let len = rng.gen_range(2..=max_len);
    let mut ids = vec![CLS];
    ids.extend((1..len).map(|_| rng.gen_range(NUM_SPECIAL as u32..vocab as u32)));
    ids.resize(max_len, PAD);
    TokenSequence {
        ids,
        attention_len: len,
        segment_boundaries: vec![0],
    }
}

fn c1_gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for draw in 0..20 {
        let dims = Dims {
            vocab: rng.gen_range(12..40),
            hidden: rng.gen_range(3..9),
            layers: rng.gen_range(1..5),
        };
        let mut params = init_params(dims, rng.gen()).expect("init");
        // move away from the initialisation scale so every layer matters
        for v in params.values_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
        let seq = random_seq(&mut rng, dims.vocab, 12);
        let label = if rng.gen_bool(0.5) {
            Label::Rumour
        } else {
            Label::NonRumour
        };
        for freeze in [
            FreezePolicy::None,
            FreezePolicy::EmbeddingsOnly,
            FreezePolicy::first_layers_default(dims.layers),
        ] {
            let report = grad_check(&params, (&seq, label), freeze, draw).expect("grad check");
            worst = worst.max(report.max_relative_error);
            checks += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-4 && secs < 30.0,
        format!("{checks} checks, max relative error {worst:.2e} (< 1e-4), {secs:.1}s (< 30s)"),
    )
}

/// Exhaustive search: largest balanced subset, then highest total
/// confidence, then lexicographically smallest ids. Confidences are
/// multiples of 1/64 so sums are exact.
fn oracle_balance(items: &[(String, Prediction)]) -> Vec<usize> {
    let n = items.len();
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    for mask in 0u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let rumours = chosen.iter().filter(|&&i| items[i].1.label == Label::Rumour).count();
        if rumours * 2 != chosen.len() {
            continue;
        }
        let conf: f64 = chosen.iter().map(|&i| items[i].1.confidence).sum();
        let mut ids: Vec<usize> = chosen.clone();
        ids.sort_by(|&a, &b| items[a].0.cmp(&items[b].0));
        let better = match &best {
            None => true,
            Some((size, c, bids)) => {
                let bid_names: Vec<&String> = bids.iter().map(|&i| &items[i].0).collect();
                let id_names: Vec<&String> = ids.iter().map(|&i| &items[i].0).collect();
                (chosen.len(), conf) > (*size, *c) || ((chosen.len(), conf) == (*size, *c) && id_names < bid_names)
            }
        };
        if better {
            best = Some((chosen.len(), conf, ids));
        }
    }
    let mut picked = best.map(|b| b.2).unwrap_or_default();
    picked.sort_unstable();
    picked
}

fn c2_filter_balance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut failures = 0;
    for case in 0..500 {
        let n = rng.gen_range(0..=12);
        let mut ids: Vec<usize> = (0..40).collect();
        ids.shuffle(&mut rng);
        let preds: Vec<(String, Prediction)> = ids[..n]
            .iter()
            .map(|&id| {
                let conf = rng.gen_range(32..=64) as f64 / 64.0;
                let rumour = rng.gen_bool(0.5);
                let probs = if rumour { [1.0 - conf, conf] } else { [conf, 1.0 - conf] };
                let mut p = Prediction::from_probs(probs);
                if conf == 0.5 {
                    p.label = if rumour { Label::Rumour } else { Label::NonRumour };
                }
                (format!("t{id:02}"), p)
            })
            .collect();
        let p = rng.gen_range(32..=64) as f64 / 64.0;
        let filtered = filter_by_confidence(&preds, p);
        let naive: Vec<(String, Prediction)> = preds.iter().filter(|x| x.1.confidence >= p).cloned().collect();
        let balanced = balance_classes(&filtered);
        let expected: Vec<(String, Prediction)> = oracle_balance(&filtered)
            .into_iter()
            .map(|i| filtered[i].clone())
            .collect();
        if filtered != naive || balanced != expected {
            failures += 1;
            if failures == 1 {
                eprintln!(
                    "case {case}: filter {:?} balance {:?} expected {:?}",
                    filtered, balanced, expected
                );
            }
        }
    }
    outcome(failures == 0, format!("500 cases, {failures} mismatches"))
}

fn c3_freezing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let dims = Dims {
        vocab: 50,
        hidden: 8,
        layers: 2,
    };
    let params = init_params(dims, 3).expect("init");
    let seqs: Vec<(TokenSequence, Label)> = (0..64)
        .map(|i| {
            (
                random_seq(&mut rng, dims.vocab, 16),
                if i % 2 == 0 { Label::Rumour } else { Label::NonRumour },
            )
        })
        .collect();
    let examples: Vec<TrainExample<'_>> = seqs
        .iter()
        .map(|(s, l)| TrainExample {
            seq: s,
            label: *l,
            weight: 1.0,
        })
        .collect();
    let cfg = TrainConfig {
        epochs: 3,
        freeze: FreezePolicy::EmbeddingsOnly,
        ..TrainConfig::default()
    };
    let trained = train_weighted(&params, &examples, &cfg).expect("training");
    let same = trained
        .embeddings()
        .iter()
        .zip(params.embeddings())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let moved = trained.values() != params.values();
    outcome(
        same && moved,
        format!("embeddings bit-identical: {same}, other parameters updated: {moved}"),
    )
}

struct Bench {
    settings: ExperimentSettings,
    dir: PreparedDirection,
}

fn bench() -> Bench {
    let settings = ExperimentSettings::default();
    let corpus = synth_bilingual(&SynthConfig::default()).expect("synthetic corpus");
    let source = split_dataset(&corpus.source, 1).expect("split");
    let target = split_dataset(&corpus.target, 2).expect("split");
    let dir = PreparedDirection::new("synthA", "synthB", &source, &target, &settings).expect("prepare");
    Bench { settings, dir }
}

fn row(results: &[ExperimentResult], v: Variant) -> &ExperimentResult {
    results.iter().find(|r| r.variant == v).expect("variant present")
}

fn run_accuracies(r: &ExperimentResult, source: bool) -> Vec<f64> {
    r.runs
        .iter()
        .map(|run| {
            let m = if source {
                &run.source_metrics
            } else {
                &run.target_metrics
            };
            m.as_ref().map(|m| m.accuracy).unwrap_or(f64::NAN)
        })
        .collect()
}

fn c4_gain(results: &[ExperimentResult]) -> Outcome {
    let st = row(results, Variant::St);
    let best = run_accuracies(st, false);
    let zero: Vec<f64> = st
        .runs
        .iter()
        .map(|r| r.trajectory.first().map_or(f64::NAN, |p| p.target_test_accuracy))
        .collect();
    let gain = 100.0 * (mean(&best) - mean(&zero));
    outcome(
        gain >= 5.0,
        format!(
            "iteration 0 {:.1}%, best iteration {:.1}%, gain {gain:+.1} points (>= 5)",
            100.0 * mean(&zero),
            100.0 * mean(&best)
        ),
    )
}

fn c5_forgetting(results: &[ExperimentResult]) -> Outcome {
    let gl = 100.0 * mean(&run_accuracies(row(results, Variant::StGl), true));
    let st = 100.0 * mean(&run_accuracies(row(results, Variant::St), true));
    let sup = 100.0 * mean(&run_accuracies(row(results, Variant::SupervisedSource), true));
    outcome(
        gl >= st + 10.0 && (gl - sup).abs() <= 3.0,
        format!(
            "source accuracy: ST_GL {gl:.1}%, ST {st:.1}% (need >= +10), source-supervised {sup:.1}% (need within 3)"
        ),
    )
}

fn c6_ablation(b: &Bench) -> Outcome {
    let cells = run_ablation(std::slice::from_ref(&b.dir), &SEEDS, &b.settings).expect("ablation");
    print!("{}", render_ablation(&cells));
    let score = |c: &crossrumour::eval::AblationCell| c.summary.as_ref().map_or(f64::NAN, |s| s.mean);
    let winner = cells
        .iter()
        .max_by(|a, b| score(a).total_cmp(&score(b)))
        .expect("cells");
    let top = winner.adaptive_pretrain && winner.freeze == FreezePolicy::EmbeddingsOnly;
    let mut monotone = true;
    let mut pairs = Vec::new();
    for on in cells.iter().filter(|c| c.adaptive_pretrain) {
        let off = cells
            .iter()
            .find(|c| !c.adaptive_pretrain && c.freeze == on.freeze)
            .expect("paired cell");
        monotone &= score(on) >= score(off);
        pairs.push(format!(
            "{} {:.1}/{:.1}",
            on.freeze.label(),
            100.0 * score(off),
            100.0 * score(on)
        ));
    }
    outcome(
        top && monotone,
        format!(
            "best cell pretrain={} freeze={} ({:.1}%); off/on: {}",
            winner.adaptive_pretrain,
            winner.freeze.label(),
            100.0 * score(winner),
            pairs.join(", ")
        ),
    )
}

fn c7_sweep(b: &Bench) -> Outcome {
    let fractions = [0.0, 0.2, 0.4, 0.6, 0.8];
    let rows = run_semi_supervised_sweep(&fractions, std::slice::from_ref(&b.dir), &SEEDS, &b.settings).expect("sweep");
    print!("{}", render_sweep(&rows));
    let zs: Vec<f64> = rows
        .iter()
        .map(|r| r.zero_shot_summary.as_ref().map_or(f64::NAN, |s| s.mean))
        .collect();
    let sup: Vec<f64> = rows
        .iter()
        .map(|r| r.supervised_summary.as_ref().map_or(f64::NAN, |s| s.mean))
        .collect();
    let nondecreasing = zs.windows(2).all(|w| w[1] >= w[0]);
    let beats = zs[1] > sup[1];
    let fmt = |xs: &[f64]| {
        xs.iter()
            .map(|x| format!("{:.1}", 100.0 * x))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        nondecreasing && beats,
        format!(
            "framework [{}] nondecreasing: {nondecreasing}; supervised [{}]; 0.2 beats supervised: {beats}",
            fmt(&zs),
            fmt(&sup)
        ),
    )
}

fn c8_trajectory(results: &[ExperimentResult]) -> Outcome {
    let runs = &row(results, Variant::StGl).runs;
    let len = runs.iter().map(|r| r.trajectory.len()).min().unwrap_or(0);
    let curve: Vec<f64> = (0..len)
        .map(|k| {
            mean(
                &runs
                    .iter()
                    .map(|r| r.trajectory[k].record.target_val_accuracy)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let best = (0..len).fold(0, |b, k| if curve[k] > curve[b] { k } else { b });
    let ma: Vec<f64> = (2..len).map(|k| mean(&curve[k - 2..=k])).collect();
    // moving averages ending at iterations 2..=best
    let through = best.saturating_sub(1).min(ma.len());
    let nondecreasing = ma[..through].windows(2).all(|w| w[1] >= w[0]);
    let per_seed: Vec<String> = runs.iter().map(|r| format!("{:?}", r.best_iteration)).collect();
    outcome(
        nondecreasing && best <= 7,
        format!(
            "mean validation curve [{}]; best iteration {best} (<= 7), moving average nondecreasing through it: {nondecreasing}; per-seed best {}",
            curve.iter().map(|x| format!("{:.1}", 100.0 * x)).collect::<Vec<_>>().join(" "),
            per_seed.join(" ")
        ),
    )
}

fn cli(args: &[&str]) -> u8 {
    let code = crossrumour::cli::run(std::iter::once("crossrumour").chain(args.iter().copied()));
    if code == std::process::ExitCode::SUCCESS {
        0
    } else {
        1
    }
}

fn tree_bytes(dir: &Path, prefix: &str, out: &mut Vec<(String, Vec<u8>)>) {
    for e in fs::read_dir(dir).expect("output dir") {
        let e = e.expect("entry");
        let name = format!("{prefix}/{}", e.file_name().to_string_lossy());
        if e.path().is_dir() {
            tree_bytes(&e.path(), &name, out);
        } else {
            out.push((name, fs::read(e.path()).expect("read")));
        }
    }
}

/// Runs every command into `root/run`; returns the commands that failed.
fn cli_round(root: &Path) -> Vec<String> {
    let run = root.join("run");
    let p = |s: &str| run.join(s).to_string_lossy().into_owned();
    let (data, src, tgt) = (p("data"), p("data/source.jsonl"), p("data/target.jsonl"));
    let small = [
        "--vocab-size",
        "150",
        "--max-seq-len",
        "48",
        "--hidden",
        "6",
        "--layers",
        "2",
        "--iters",
        "2",
        "--epochs",
        "1",
        "--pretrain-epochs",
        "1",
        "--p",
        "0.6",
    ];
    let mut commands: Vec<Vec<String>> = vec![[
        "synth",
        "--out",
        &data,
        "--n",
        "60",
        "--vocab-size",
        "40",
        "--seed",
        "5",
    ]
    .map(String::from)
    .to_vec()];
    for cmd in ["transfer", "matrix", "ablate", "sweep"] {
        let mut v: Vec<String> = [cmd, "--source", &src, "--target", &tgt, "--out", &p(cmd)]
            .map(String::from)
            .to_vec();
        v.extend(small.map(String::from));
        match cmd {
            "transfer" => v.extend(["--gl", "--seed", "4"].map(String::from)),
            "sweep" => v.extend(["--parallel", "2", "--fractions", "0,0.5"].map(String::from)),
            _ => v.extend(["--parallel", "2"].map(String::from)),
        }
        commands.push(v);
    }
    commands.push(
        [
            "eval",
            "--checkpoint",
            &p("transfer/checkpoint.bin"),
            "--vocab",
            &p("transfer/vocab.txt"),
            "--data",
            &tgt,
            "--max-seq-len",
            "48",
            "--out",
            &p("eval.json"),
        ]
        .map(String::from)
        .to_vec(),
    );
    commands
        .iter()
        .filter(|args| cli(&args.iter().map(String::as_str).collect::<Vec<_>>()) != 0)
        .map(|args| args[0].clone())
        .collect()
}

fn c9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let root = tmp.path();
    let mut failures = cli_round(root);
    let mut first = Vec::new();
    tree_bytes(&root.join("run"), "", &mut first);
    fs::remove_dir_all(root.join("run")).expect("clean");
    failures.extend(cli_round(root));
    let mut second = Vec::new();
    tree_bytes(&root.join("run"), "", &mut second);
    first.sort();
    second.sort();
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let same_set = first.iter().map(|f| &f.0).eq(second.iter().map(|f| &f.0));
    outcome(
        failures.is_empty() && same_set && differing.is_empty() && !first.is_empty(),
        format!(
            "synth, transfer, eval, matrix, ablate, sweep run twice: {} files, failed commands {:?}, differing files {:?}",
            first.len(),
            failures,
            differing
        ),
    )
}

fn c10_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut failures = 0;
    for case in 0..500u64 {
        let n = rng.gen_range(1..=20);
        let gold: Vec<Label> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Label::Rumour
                } else {
                    Label::NonRumour
                }
            })
            .collect();
        let preds: Vec<Prediction> = (0..n)
            .map(|_| {
                let q = rng.gen_range(0.0..1.0);
                Prediction::from_probs([1.0 - q, q])
            })
            .collect();
        let m = compute_metrics(&preds, &gold, case).expect("metrics");
        let correct = preds.iter().zip(&gold).filter(|(p, g)| p.label == **g).count();
        let mut ok = m.accuracy == correct as f64 / n as f64 && m.n == n && m.seed == case;
        for c in Label::ALL {
            let tp = preds
                .iter()
                .zip(&gold)
                .filter(|(p, g)| p.label == c && **g == c)
                .count();
            let pred_c = preds.iter().filter(|p| p.label == c).count();
            let gold_c = gold.iter().filter(|g| **g == c).count();
            let precision = if pred_c == 0 { 0.0 } else { tp as f64 / pred_c as f64 };
            let recall = if gold_c == 0 { 0.0 } else { tp as f64 / gold_c as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            let s = &m.per_class[&c];
            ok &= s.precision == precision && s.recall == recall && s.f1 == f1 && s.support == gold_c;
        }
        if !ok {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("500 cases, {failures} mismatches"))
}

fn main() {
    let start = Instant::now();
    let mut lines: Vec<(u32, &str, Outcome)> = vec![
        (1, "gradient correctness", c1_gradients()),
        (2, "filter/balance oracle", c2_filter_balance()),
        (3, "freezing exactness", c3_freezing()),
        (10, "metrics oracle", c10_metrics()),
        (9, "CLI determinism", c9_determinism()),
    ];

    let b = bench();
    let variants = [Variant::ZeroShot, Variant::St, Variant::StGl, Variant::SupervisedSource];
    let results = run_matrix(std::slice::from_ref(&b.dir), &variants, &SEEDS, &b.settings).expect("matrix");
    print!("{}", render_matrix(&results));
    for r in &results {
        for run in &r.runs {
            if let Some(e) = &run.error {
                println!("run {} seed {} failed: {e}", r.variant.name(), run.seed);
            }
        }
    }
    lines.push((4, "self-training gain", c4_gain(&results)));
    lines.push((5, "forgetting rescue", c5_forgetting(&results)));
    lines.push((8, "trajectory shape", c8_trajectory(&results)));
    lines.push((6, "ablation trend", c6_ablation(&b)));
    lines.push((7, "semi-supervised trend", c7_sweep(&b)));

    lines.sort_by_key(|l| l.0);
    println!();
    for (n, name, o) in &lines {
        println!(
            "{} criterion {n:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed = lines.iter().filter(|l| !l.2.pass).count();
    println!(
        "{} of {} criteria passed in {:.0}s",
        lines.len() - failed,
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
