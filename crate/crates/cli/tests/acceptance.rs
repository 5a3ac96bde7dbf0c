//! Acceptance criteria, one PASS/FAIL line each. Runs under `cargo test`
//! with a custom harness so the lines are always printed.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use hatecascade::augmentation::{
    augment, regate, AugmentationConfig, IdentityTranslator, PerturbTranslator, TableTranslator,
};
use hatecascade::classifiers::{self, registry, MockBackend, TrainingConfig};
use hatecascade::corpus::{stats, Corpus, Label, Lang, Sample, Split};
use hatecascade::embeddings::{HashEmbedder, LookupEmbedder, Pooling};
use hatecascade::ensemble::{cascade_branch, cascade_predict, ensemble_run, CascadeSpec};
use hatecascade::metrics::{compute_metrics, confusion, render_report, Averaging, Column, MetricRow};
use hatecascade::predictions::{write_predictions, Branch, PredictionSet};
use hatecascade::synthetic::{synthetic_corpus, synthetic_pair, EVAL_CELLS, TRAIN_CELLS};

type Outcome = Result<String, String>;

/// Model id, prediction file bytes, model metadata bytes.
type Artifacts = Vec<(String, Vec<u8>, Vec<u8>)>;

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lab(b: bool) -> Label {
    Label::from_bool(b)
}

// 1. Cascade truth table -------------------------------------------------

fn cascade_truth_table() -> Outcome {
    for bits in 0u8..8 {
        let (p, s, f) = (bits & 4 != 0, bits & 2 != 0, bits & 1 != 0);
        let piecewise = match (p, s) {
            (true, _) => true,
            (false, true) => true,
            (false, false) => f,
        };
        let got = cascade_predict(lab(p), lab(s), lab(f));
        ensure(got == lab(piecewise), || {
            format!("({p},{s},{f}) -> {got:?}, piecewise {piecewise}")
        })?;
        ensure(got == lab(p || s || f), || format!("({p},{s},{f}) differs from OR"))?;
        let (_, branch) = cascade_branch(lab(p), lab(s), lab(f));
        let want = if p {
            Branch::Primary
        } else if s {
            Branch::Secondary
        } else {
            Branch::Fallback
        };
        ensure(branch == want, || format!("({p},{s},{f}) branch {branch:?}"))?;
    }
    Ok("8/8 combinations".into())
}

// 2. Recall dominance ----------------------------------------------------

fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<Label> {
    let rate: f64 = rng.gen_range(0.0..1.0);
    (0..n).map(|_| lab(rng.gen_bool(rate))).collect()
}

fn prediction_set(id: &str, labels: &[Label]) -> PredictionSet {
    PredictionSet::from_labels(id, labels.iter().enumerate().map(|(i, &l)| (i as u64, l))).unwrap()
}

fn gold_corpus(labels: &[Label]) -> Corpus {
    let samples = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| Sample::labeled(i as u64, format!("sample {i}"), l, None))
        .collect();
    Corpus::new(Split::Evaluation, samples).unwrap()
}

fn recall_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = CascadeSpec::default();
    for case in 0..100 {
        let gold = random_labels(&mut rng, 200);
        let members: Vec<PredictionSet> = spec
            .ids()
            .iter()
            .map(|id| prediction_set(id, &random_labels(&mut rng, 200)))
            .collect();
        let ens = ensemble_run(&spec, &members[0], &members[1], &members[2]).map_err(|e| e.to_string())?;
        let g = gold_corpus(&gold);
        let recall = |ps: &PredictionSet| compute_metrics(&confusion(ps, &g).unwrap(), Averaging::PositiveClass).recall;
        let re = recall(&ens);
        for m in &members {
            ensure(re >= recall(m), || {
                format!("case {case}: ensemble {re} < {} {}", m.model_id(), recall(m))
            })?;
        }
    }
    // The published recalls respect the same ordering.
    let (ens, m7, m3, m1) = (0.7762, 0.7381, 0.6877, 0.6335);
    ensure(ens >= m7 && m7 >= m3 && m7 >= m1, || {
        "published recalls out of order".into()
    })?;
    Ok("100 triples, n = 200".into())
}

// 3. Metrics oracle ------------------------------------------------------

/// Per-class counting straight from the label vectors.
fn oracle(gold: &[Label], pred: &[Label], averaging: Averaging) -> [f64; 4] {
    let n = gold.len() as f64;
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let per_class = |c: Label| {
        let mut tp = 0;
        let mut predicted = 0;
        let mut actual = 0;
        for (g, p) in gold.iter().zip(pred) {
            if *p == c {
                predicted += 1;
            }
            if *g == c {
                actual += 1;
                if *p == c {
                    tp += 1;
                }
            }
        }
        let p = div(tp, predicted);
        let r = div(tp, actual);
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        (p, r, f, actual, tp)
    };
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    let accuracy = correct as f64 / n;
    let hate = per_class(Label::Hate);
    let non = per_class(Label::NonHate);
    let (p, r, f) = match averaging {
        Averaging::PositiveClass => (hate.0, hate.1, hate.2),
        Averaging::Macro => ((hate.0 + non.0) / 2.0, (hate.1 + non.1) / 2.0, (hate.2 + non.2) / 2.0),
        Averaging::Micro => {
            // Pooled over both classes: every sample is predicted exactly once.
            let tp = hate.4 + non.4;
            let pp = div(tp, gold.len());
            let rr = div(tp, hate.3 + non.3);
            let ff = if pp + rr == 0.0 { 0.0 } else { 2.0 * pp * rr / (pp + rr) };
            (pp, rr, ff)
        }
        Averaging::Weighted => {
            let (wh, wn) = (hate.3 as f64 / n, non.3 as f64 / n);
            (
                wh * hate.0 + wn * non.0,
                wh * hate.1 + wn * non.1,
                wh * hate.2 + wn * non.2,
            )
        }
    };
    [r, p, f, accuracy]
}

fn metrics_oracle() -> Outcome {
    let hand_gold = [Label::Hate, Label::Hate, Label::NonHate, Label::NonHate];
    let hand_pred = [Label::Hate, Label::NonHate, Label::Hate, Label::NonHate];
    let row = compute_metrics(
        &confusion(&prediction_set("M1", &hand_pred), &gold_corpus(&hand_gold)).unwrap(),
        Averaging::PositiveClass,
    );
    ensure([row.recall, row.precision, row.f1, row.accuracy] == [0.5; 4], || {
        format!("hand case gave {row:?}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checks = 0;
    for case in 0..200 {
        let n = rng.gen_range(1..=50);
        let gold = random_labels(&mut rng, n);
        let pred = random_labels(&mut rng, n);
        let cm = confusion(&prediction_set("M1", &pred), &gold_corpus(&gold)).map_err(|e| e.to_string())?;
        for a in Averaging::ALL {
            let r = compute_metrics(&cm, a);
            let got = [r.recall, r.precision, r.f1, r.accuracy];
            let want = oracle(&gold, &pred, a);
            for (k, (x, y)) in got.iter().zip(want).enumerate() {
                ensure((x - y).abs() <= 1e-12, || {
                    format!("case {case} {a} metric {k}: {x} vs {y}")
                })?;
                checks += 1;
            }
        }
    }
    Ok(format!("200 cases, {checks} values within 1e-12"))
}

// 4. Augmentation size identity ------------------------------------------

/// 10 samples, 4 hate (ids 2, 4, 7, 9).
fn ten_four() -> Corpus {
    let rows = [
        (1, "यह अच्छा दिन है", false, Lang::Hi),
        (2, "तुम बेकार गंदे हो", true, Lang::Hi),
        (3, "नमस्ते साथी", false, Lang::Ne),
        (4, "फोहोरी मान्छे भाग", true, Lang::Ne),
        (5, "सुंदर मौसम आज", false, Lang::Hi),
        (6, "आज बाजार जाना है", false, Lang::Hi),
        (7, "गंदे लोग भगाओ", true, Lang::Hi),
        (8, "राम्रो चिया", false, Lang::Ne),
        (9, "घृणा फैलाउने गद्दार", true, Lang::Ne),
        (10, "किताब पढ़ी", false, Lang::Hi),
    ];
    let samples = rows
        .iter()
        .map(|&(id, t, h, l)| Sample::labeled(id, t, lab(h), Some(l)))
        .collect();
    Corpus::new(Split::Train, samples).unwrap()
}

/// Maps each positive to a fixed variant and both to vectors at the given
/// cosine similarity.
fn scripted(corpus: &Corpus, sims: [f64; 4]) -> (TableTranslator, LookupEmbedder) {
    let positives: Vec<&Sample> = corpus.iter().filter(|s| s.is_hate()).collect();
    let mut emb = LookupEmbedder::new("scripted", 4);
    let mut pairs = Vec::new();
    for (s, sim) in positives.iter().zip(sims) {
        let variant = format!("{} (variant)", s.text);
        emb.insert(s.text.clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let v = if sim == 0.9 {
            // cos((1,0,0,0), (9,3,3,1)) = 9 / 10 exactly
            vec![9.0, 3.0, 3.0, 1.0]
        } else {
            vec![sim, (1.0 - sim * sim).sqrt(), 0.0, 0.0]
        };
        emb.insert(variant.clone(), v).unwrap();
        pairs.push((s.text.clone(), variant));
    }
    (TableTranslator::new(pairs), emb)
}

fn size_identity() -> Outcome {
    let c = ten_four();
    let cfg = AugmentationConfig::default();
    let hash = HashEmbedder::new(64, Pooling::Mean, 0).unwrap();

    let all = augment(&c, &cfg, &IdentityTranslator, &hash).map_err(|e| e.to_string())?;
    ensure(all.summary.identity_line() == "18 = 10 + 4 + 4", || {
        all.summary.identity_line()
    })?;

    let (tr, emb) = scripted(&c, [0.0, 0.1, -0.5, 0.3]);
    let none = augment(&c, &cfg, &tr, &emb).map_err(|e| e.to_string())?;
    ensure(none.summary.identity_line() == "14 = 10 + 0 + 4", || {
        none.summary.identity_line()
    })?;

    let (tr, emb) = scripted(&c, [0.9, 0.9 + 1e-9, 0.95, 0.3]);
    let mixed = augment(&c, &cfg, &tr, &emb).map_err(|e| e.to_string())?;
    let verdicts: Vec<(f64, bool)> = mixed.records.iter().map(|r| (r.similarity, r.accepted)).collect();
    ensure(verdicts[0] == (0.9, false), || {
        format!("similarity 0.9 gave {:?}", verdicts[0])
    })?;
    ensure(verdicts[1].1 && verdicts[1].0 > 0.9, || {
        format!("0.9 + 1e-9 gave {:?}", verdicts[1])
    })?;
    ensure(mixed.summary.identity_line() == "16 = 10 + 2 + 4", || {
        mixed.summary.identity_line()
    })?;

    for o in [&all, &none, &mixed] {
        ensure(o.summary.identity_holds() && o.corpus.len() == o.summary.output, || {
            format!("{:?}", o.summary)
        })?;
    }
    Ok("all-accept 18, all-reject 14, mixed 16; 0.9 rejected, 0.9+1e-9 accepted".into())
}

// 5. Threshold monotonicity ----------------------------------------------

fn threshold_monotonicity() -> Outcome {
    let (train, _) = synthetic_pair(400, 9).map_err(|e| e.to_string())?;
    let emb = HashEmbedder::new(64, Pooling::Mean, 9).unwrap();
    let out = augment(
        &train,
        &AugmentationConfig::default(),
        &PerturbTranslator::new(9, "en"),
        &emb,
    )
    .map_err(|e| e.to_string())?;
    let audit = out.records;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ts: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
    ts.sort_by(f64::total_cmp);
    let counts: Vec<usize> = ts
        .iter()
        .map(|&t| regate(&audit, t).iter().filter(|r| r.accepted).count())
        .collect();
    for i in 1..counts.len() {
        ensure(counts[i] <= counts[i - 1], || {
            format!(
                "threshold {} accepts {} > {} at {}",
                ts[i],
                counts[i],
                counts[i - 1],
                ts[i - 1]
            )
        })?;
    }
    ensure(counts[0] > *counts.last().unwrap(), || {
        "audit trail has no spread".into()
    })?;
    Ok(format!(
        "50 thresholds over {} records, accepted {}..{}",
        audit.len(),
        counts.last().unwrap(),
        counts[0]
    ))
}

// 6. Registry completeness -----------------------------------------------

fn train_all(train: &Corpus, eval: &Corpus) -> Result<Artifacts, String> {
    let backend = MockBackend::new();
    let cfg = TrainingConfig::new(1, 11);
    registry()
        .iter()
        .map(|spec| {
            let m = classifiers::train(spec, train, &cfg, &backend).map_err(|e| format!("{}: {e}", spec.id))?;
            let preds = classifiers::predict(&m, eval).map_err(|e| format!("{}: {e}", spec.id))?;
            ensure(preds.ids().copied().eq(eval.ids()), || {
                format!("{}: not total over the corpus", spec.id)
            })?;
            let mut bytes = Vec::new();
            write_predictions(&preds, &mut bytes).unwrap();
            let meta = serde_json::to_vec(&m.metadata()).unwrap();
            Ok((spec.id.clone(), bytes, meta))
        })
        .collect()
}

fn registry_completeness() -> Outcome {
    let (train, eval) = synthetic_pair(200, 4).map_err(|e| e.to_string())?;
    let a = train_all(&train, &eval)?;
    let b = train_all(&train, &eval)?;
    ensure(a.len() == 8, || format!("{} specs", a.len()))?;
    for (x, y) in a.iter().zip(&b) {
        ensure(x == y, || format!("{} differs between same-seed runs", x.0))?;
        let text = String::from_utf8_lossy(&x.1);
        for line in text.lines() {
            let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
            ensure(matches!(v["prediction"].as_u64(), Some(0 | 1)), || {
                format!("{}: {line}", x.0)
            })?;
        }
    }
    Ok("M1..M8 trained and predicted, byte-identical reruns".into())
}

// 7. End-to-end ----------------------------------------------------------

fn cli(dir: &Path, args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_hatecascade"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

const PUBLISHED: [(&str, [f64; 4]); 9] = [
    ("M1", [0.6335, 0.7572, 0.6681, 0.8950]),
    ("M2", [0.6296, 0.5874, 0.5984, 0.7927]),
    ("M3", [0.6877, 0.6934, 0.6904, 0.8744]),
    ("M4", [0.5934, 0.5915, 0.5924, 0.8305]),
    ("M5", [0.6455, 0.5618, 0.5207, 0.6271]),
    ("M6", [0.6504, 0.6596, 0.6548, 0.8619]),
    ("M7", [0.7381, 0.6696, 0.6933, 0.8472]),
    ("M8", [0.5320, 0.5400, 0.5346, 0.8270]),
    ("ensemble(M7,M3,M1)", [0.7762, 0.6639, 0.6914, 0.8258]),
];

fn published_report_layout() -> Result<(), String> {
    // Feed rows in scrambled order; the formatter must restore M1..M8, ensemble.
    let rows = PUBLISHED.iter().rev().map(|(id, [r, p, f, a])| {
        (
            id.to_string(),
            MetricRow {
                recall: *r,
                precision: *p,
                f1: *f,
                accuracy: *a,
                averaging: Averaging::PositiveClass,
                degenerate_flags: vec![],
            },
        )
    });
    let report = render_report(rows);
    let order: Vec<&str> = report.rows().iter().map(|(id, _)| id.as_str()).collect();
    let want: Vec<&str> = PUBLISHED.iter().map(|(id, _)| *id).collect();
    ensure(order == want, || format!("row order {order:?}"))?;

    let ens = "ensemble(M7,M3,M1)";
    for (col, best, worst) in [
        (Column::Recall, ens, "M8"),
        (Column::Precision, "M1", "M8"),
        (Column::F1, "M7", "M5"),
        (Column::Accuracy, "M1", "M5"),
    ] {
        ensure(report.best(col) == [best], || {
            format!("best {col:?}: {:?}", report.best(col))
        })?;
        ensure(report.worst(col) == [worst], || {
            format!("worst {col:?}: {:?}", report.worst(col))
        })?;
    }

    let text = report.text();
    let line = |prefix: &str| {
        text.lines()
            .find(|l| l.trim_start().starts_with(prefix))
            .unwrap_or("")
            .to_string()
    };
    let e = line("Ensemble (M7, M3, M1)");
    ensure(
        e.contains("0.7762+") && e.contains("0.6639") && e.contains("0.6914") && e.contains("0.8258"),
        || e.clone(),
    )?;
    let m8 = line("M8");
    ensure(m8.contains("0.5320-") && m8.contains("0.5400-"), || m8.clone())?;
    for (id, vals) in PUBLISHED.iter().take(8) {
        let l = line(id);
        for v in vals {
            ensure(l.contains(&format!("{v:.4}")), || {
                format!("{id}: {v:.4} missing from `{l}`")
            })?;
        }
    }
    ensure(
        text.contains("Recall") && text.contains("Precision") && text.contains("F1 Score") && text.contains("Accuracy"),
        || "missing column header".into(),
    )?;
    Ok(())
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    cli(dir, &["-q", "synth", "data", "--train-size", "200", "--seed", "7"])?;
    fs::write(
        dir.join("run.toml"),
        "seed = 7\noutput_dir = \"out\"\n[data]\ntrain = \"data/train.csv\"\nevaluation = \"data/evaluation.csv\"\n\
         [training]\nepochs = 3\n",
    )
    .map_err(|e| e.to_string())?;
    let started = Instant::now();
    let stages = [
        "ingest", "augment", "train", "predict", "ensemble", "evaluate", "report",
    ];
    let mut last = String::new();
    for stage in stages {
        last = cli(dir, &["--config", "run.toml", "-q", stage])?;
    }
    let elapsed = started.elapsed();

    // Submission format: one {index, prediction} per evaluation sample.
    let eval_ids: Vec<u64> = fs::read_to_string(dir.join("out/corpus/evaluation.jsonl"))
        .map_err(|e| e.to_string())?
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["id"].as_u64().unwrap())
        .collect();
    let sub = fs::read_to_string(dir.join("out/predictions/ensemble.jsonl")).map_err(|e| e.to_string())?;
    let mut ids = Vec::new();
    for l in sub.lines() {
        let v: Value = serde_json::from_str(l).map_err(|e| format!("{l}: {e}"))?;
        ensure(matches!(v["prediction"].as_u64(), Some(0 | 1)), || l.to_string())?;
        ids.push(v["index"].as_u64().ok_or("missing index")?);
    }
    ensure(ids == eval_ids, || {
        "submission ids differ from the evaluation split".into()
    })?;

    // Report shape: M1..M8 then the ensemble row.
    let order: Vec<&str> = last
        .lines()
        .filter_map(|l| l.split_whitespace().next())
        .filter(|w| w.starts_with('M') && w.len() == 2 || *w == "Ensemble")
        .collect();
    let want = ["M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8", "Ensemble"];
    ensure(order == want, || format!("report rows {order:?}"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;

    published_report_layout()?;
    Ok(format!(
        "200-sample workflow in {:.2}s; published-table layout and flags reproduced",
        elapsed.as_secs_f64()
    ))
}

// 8. Dataset accounting --------------------------------------------------

fn dataset_accounting() -> Outcome {
    let train = synthetic_corpus(Split::Train, &TRAIN_CELLS, 0, 1).map_err(|e| e.to_string())?;
    let eval = synthetic_corpus(Split::Evaluation, &EVAL_CELLS, 100_000, 2).map_err(|e| e.to_string())?;
    let (st, se) = (stats(&train), stats(&eval));
    ensure(st.total() == 19019, || format!("train total {}", st.total()))?;
    ensure(se.total() == 4076, || format!("evaluation total {}", se.total()))?;
    for (cells, s) in [(&TRAIN_CELLS, &st), (&EVAL_CELLS, &se)] {
        for &(lang, label, n) in cells.iter() {
            ensure(s.count(Some(lang), Some(label)) == n, || {
                format!("{lang:?}/{label:?} != {n}")
            })?;
        }
    }
    // Same numbers through the command-line path.
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    cli(dir, &["-q", "synth", "data"])?;
    let out = cli(dir, &["stats", "data/train.csv"])?;
    ensure(out.lines().last().is_some_and(|l| l.ends_with(" 19019")), || {
        out.clone()
    })?;
    let out = cli(dir, &["stats", "--split", "evaluation", "data/evaluation.csv"])?;
    ensure(out.lines().last().is_some_and(|l| l.ends_with(" 4076")), || out.clone())?;
    Ok("train 19019, evaluation 4076".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("cascade truth table", cascade_truth_table, Some(Duration::from_secs(1))),
        ("recall dominance", recall_dominance, Some(Duration::from_secs(5))),
        ("metrics oracle", metrics_oracle, Some(Duration::from_secs(5))),
        ("augmentation size identity", size_identity, None),
        ("threshold monotonicity", threshold_monotonicity, None),
        ("registry completeness", registry_completeness, None),
        ("end-to-end workflow", end_to_end, Some(Duration::from_secs(60))),
        ("dataset accounting", dataset_accounting, None),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = f();
        let took = start.elapsed();
        if let (Ok(_), Some(limit)) = (&result, limit) {
            if took > *limit {
                result = Err(format!("took {took:?}, limit {limit:?}"));
            }
        }
        match result {
            Ok(detail) => println!(
                "criterion {} {name}: PASS ({:.1} ms) {detail}",
                i + 1,
                took.as_secs_f64() * 1e3
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {} {name}: FAIL ({:.1} ms) {why}",
                    i + 1,
                    took.as_secs_f64() * 1e3
                );
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
