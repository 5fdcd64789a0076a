//! End-to-end acceptance checks on the default configuration. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use compeval::encoders::*;
use compeval::event::*;
use compeval::optim::relative_error;
use compeval::pipeline::*;
use compeval::prober::{FeatureMode, Mlp, ProbeReport};
use compeval::realizer::Realizer;
use compeval::taskforge::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn feats(voice: Voice, tense: Tense, aspect: Aspect, polarity: Polarity) -> SyntacticFeatures {
    SyntacticFeatures { voice, tense, aspect, polarity, adverbs: Vec::new() }
}

fn reference_sentences(v: &Vocabulary) -> Vec<(EventRepresentation, &'static str)> {
    let arg = |noun: &str, number, role| ArgumentSlot::new(v.id(noun), number, role);
    let men = ClauseFrame::intransitive(
        v.id("sleep"),
        arg("man", Number::Plural, Role::Agent),
        feats(Voice::Active, Tense::Past, Aspect::Progressive, Polarity::Positive),
    );
    let meeting = ClauseFrame::transitive(
        v.id("meet"),
        arg("student", Number::Singular, Role::Agent),
        arg("lawyer", Number::Singular, Role::Patient),
        feats(Voice::Active, Tense::Present, Aspect::Progressive, Polarity::Positive),
    );
    let following = ClauseFrame::transitive(
        v.id("follow"),
        arg("woman", Number::Singular, Role::Agent),
        arg("lawyer", Number::Singular, Role::Patient).with_relative(Gap::Object, meeting),
        feats(Voice::Active, Tense::Past, Aspect::Simple, Polarity::Positive),
    );
    let sleeping = ClauseFrame::intransitive(
        v.id("sleep"),
        arg("student", Number::Singular, Role::Agent),
        feats(Voice::Active, Tense::Present, Aspect::Progressive, Polarity::Positive),
    );
    let helped = ClauseFrame::transitive(
        v.id("help"),
        arg("professor", Number::Singular, Role::Agent),
        arg("student", Number::Singular, Role::Patient).with_relative(Gap::Subject, sleeping),
        feats(Voice::Passive, Tense::Past, Aspect::Simple, Polarity::Negative),
    );
    vec![
        (EventRepresentation::new(0, men), "the men were sleeping"),
        (EventRepresentation::new(1, following), "the woman followed the lawyer that the student is meeting"),
        (EventRepresentation::new(2, helped), "the student that is sleeping was not helped by the professor"),
    ]
}

fn realizer_reference() -> Outcome {
    let start = Instant::now();
    let vocab = Vocabulary::default_english();
    let realizer = Realizer::new(&vocab).unwrap();
    let mut wrong = Vec::new();
    for (event, expected) in reference_sentences(&vocab) {
        let got = realizer.realize(&event).map(|s| s.text()).unwrap_or_else(|e| e.to_string());
        if got != expected {
            wrong.push(format!("{got:?} != {expected:?}"));
        }
    }
    let elapsed = start.elapsed();
    check(wrong.is_empty() && elapsed < Duration::from_secs(1), format!("3 sentences in {elapsed:.2?} {wrong:?}"))
}

fn oracle_agreement(datasets: &[TaskDataset]) -> Outcome {
    let start = Instant::now();
    let realizer = Realizer::new(&Vocabulary::default_english()).unwrap();
    let (mut surface, mut gold, mut disagree) = (0usize, 0usize, 0usize);
    for ds in datasets {
        for (_, inst) in ds.instances() {
            let Some(s) = ds.sentence(inst.sentence_id) else {
                disagree += 1;
                continue;
            };
            if gold_label(ds.task, s, &inst.probes) != Some(inst.label) {
                disagree += 1;
            }
            gold += 1;
            if matches!(ds.task, TaskKind::Content1Probe | TaskKind::Content2Probe | TaskKind::Order) {
                surface += 1;
                if surface_oracle_label(ds.task, &s.tokens, &inst.probes, realizer.lexicon()) != Ok(inst.label) {
                    disagree += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        disagree == 0 && surface >= 10_000 && elapsed < Duration::from_secs(60),
        format!("{surface} surface-oracle and {gold} gold recomputations, {disagree} disagreements, {elapsed:.1?}"),
    )
}

fn splits_clean(datasets: &[TaskDataset], policy: &SplitPolicy) -> Outcome {
    let mut bad = Vec::new();
    for ds in datasets {
        let verdict = verify_split(ds, policy);
        if !verdict.passed() {
            bad.push(format!("{}: {:?}", ds.task, verdict.failures.first()));
        }
    }
    check(datasets.len() == 5 && bad.is_empty(), format!("{} datasets verified {bad:?}", datasets.len()))
}

fn pct(report: &ProbeReport, encoder: &str, task: TaskKind, mode: FeatureMode) -> f64 {
    report.percent(encoder, task, mode).unwrap_or(f64::NAN)
}

fn bow_row(report: &ProbeReport, elapsed: Duration) -> Outcome {
    let p = |t| pct(report, BOW, t, FeatureMode::OnehotProbe);
    let (c1, c2, ord, sem, neg) =
        (p(TaskKind::Content1Probe), p(TaskKind::Content2Probe), p(TaskKind::Order), p(TaskKind::SemRole), p(TaskKind::Negation));
    let ok = c1 >= 99.0
        && c2 >= 90.0
        && ord <= 57.0
        && (sem - 50.0).abs() <= 3.0
        && (neg - 50.0).abs() <= 3.0
        && elapsed <= Duration::from_secs(600);
    check(
        ok,
        format!(
            "Content1 {c1:.1}, Content2 {c2:.1}, Order {ord:.1}, SemRole {sem:.1}, Negation {neg:.1}; \
             full pipeline (bounds the BOW path) {:.0}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn sequence_row(report: &ProbeReport, reconstruction: f64, elapsed: Duration) -> Outcome {
    let p = |e, t| pct(report, e, t, FeatureMode::OnehotProbe);
    let order = (p(SEQ, TaskKind::Order), p(BOW, TaskKind::Order));
    let neg = (p(SEQ, TaskKind::Negation), p(BOW, TaskKind::Negation));
    let sem = p(SEQ, TaskKind::SemRole);
    let ok = order.0 >= order.1 + 15.0
        && neg.0 >= neg.1 + 20.0
        && reconstruction >= 0.9
        && elapsed <= Duration::from_secs(1800);
    check(
        ok,
        format!(
            "Order {:.1} (BOW {:.1}), Negation {:.1} (BOW {:.1}), SemRole {sem:.1}, reconstruction {reconstruction:.3}, {:.0}s",
            order.0,
            order.1,
            neg.0,
            neg.1,
            elapsed.as_secs_f64()
        ),
    )
}

fn controls(report: &ProbeReport) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    let mut bad = Vec::new();
    for c in &report.cells {
        if !matches!(c.mode, FeatureMode::RandomSentence | FeatureMode::RandomProbe) {
            continue;
        }
        cells += 1;
        let acc = if c.succeeded() { 100.0 * c.mean } else { f64::NAN };
        let dev = (acc - 50.0).abs();
        worst = worst.max(dev);
        if dev.is_nan() || dev > 4.0 {
            bad.push(format!("{} {} {} {acc:.1}", c.encoder, c.task, c.mode));
        }
    }
    check(cells == 20 && bad.is_empty(), format!("{cells} cells, max |acc - 50| {worst:.1} {bad:?}"))
}

fn mlp_gradients() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Array2::from_shape_fn((16, 6), |_| StandardNormal.sample(&mut rng));
    let y: Vec<u8> = (0..16).map(|i| (i % 2) as u8).collect();
    let mut mlp = Mlp::<f64>::with_hidden(6, 9, 2);
    for p in mlp.params.iter_mut() {
        p.mapv_inplace(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + 0.3 * z
        });
    }
    let (_, grads) = mlp.loss_and_grads(&x, &y);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for pi in 0..grads.len() {
        for idx in 0..grads[pi].len() {
            let (r, c) = (idx / grads[pi].ncols(), idx % grads[pi].ncols());
            let orig = mlp.params[pi][[r, c]];
            mlp.params[pi][[r, c]] = orig + eps;
            let up = mlp.loss(&x, &y);
            mlp.params[pi][[r, c]] = orig - eps;
            let down = mlp.loss(&x, &y);
            mlp.params[pi][[r, c]] = orig;
            let num = (up - down) / (2.0 * eps);
            if grads[pi][[r, c]].abs().max(num.abs()) > 1e-6 {
                worst = worst.max(relative_error(grads[pi][[r, c]], num));
            }
        }
    }
    worst
}

fn skipgram_gradients() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (v, d) = (6, 5);
    let w_in = Array2::from_shape_fn((v, d), |_| rng.random_range(-0.5..0.5f64));
    let w_out = Array2::from_shape_fn((v, d), |_| rng.random_range(-0.5..0.5f64));
    let negs = [3usize, 4, 5];
    let loss = |wi: &Array2<f64>, wo: &Array2<f64>| {
        let mut a = vec![0.0; d];
        let mut b = Array2::zeros((negs.len() + 1, d));
        sgns_pair_loss_and_grad(wi.view(), wo.view(), 1, 2, &negs, &mut a, &mut b)
    };
    let mut g_in = vec![0.0; d];
    let mut g_out = Array2::zeros((negs.len() + 1, d));
    sgns_pair_loss_and_grad(w_in.view(), w_out.view(), 1, 2, &negs, &mut g_in, &mut g_out);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..d {
        let (mut p, mut m) = (w_in.clone(), w_in.clone());
        p[[1, k]] += eps;
        m[[1, k]] -= eps;
        worst = worst.max(relative_error(g_in[k], (loss(&p, &w_out) - loss(&m, &w_out)) / (2.0 * eps)));
        for (j, row) in [2usize, 3, 4, 5].iter().enumerate() {
            let (mut p, mut m) = (w_out.clone(), w_out.clone());
            p[[*row, k]] += eps;
            m[[*row, k]] -= eps;
            worst = worst.max(relative_error(g_out[[j, k]], (loss(&w_in, &p) - loss(&w_in, &m)) / (2.0 * eps)));
        }
    }
    worst
}

fn autoencoder_gradients() -> f64 {
    let toks = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
    // equal-length targets, as in the length-bucketed training batches
    let corpus = vec![toks("the men were sleeping"), toks("the woman was dancing"), toks("was the men not")];
    let mut model = SeqAutoencoder::<f64>::new(&corpus, 4, 5, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in model.params.iter_mut() {
        p.mapv_inplace(|_| rng.random_range(-1.0..1.0));
    }
    let ids: Vec<Vec<usize>> = corpus.iter().map(|s| model.ids(s).unwrap()).collect();
    let batch = Batch { inputs: vec![ids[0].clone(), ids[1][..3].to_vec(), ids[2][..2].to_vec()], targets: ids.clone() };
    let (_, grads) = model.loss_and_grads(&batch);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for (pi, g) in grads.iter().enumerate() {
        for idx in 0..g.len() {
            let (r, c) = (idx / g.ncols(), idx % g.ncols());
            let mut plus = model.clone();
            plus.params[pi][[r, c]] += eps;
            let mut minus = model.clone();
            minus.params[pi][[r, c]] -= eps;
            let num = (plus.loss_and_grads(&batch).0 - minus.loss_and_grads(&batch).0) / (2.0 * eps);
            if g[[r, c]].abs().max(num.abs()) > 1e-6 {
                worst = worst.max(relative_error(g[[r, c]], num));
            }
        }
    }
    worst
}

fn bow_permutations() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let forms: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let table = EmbeddingTable::new(forms.clone(), Array2::from_shape_fn((12, 16), |_| rng.random_range(-1.0..1.0f32)));
    let mut tokens: Vec<String> = (0..11).map(|_| forms[rng.random_range(0..12)].clone()).collect();
    let reference = bow_encode(&tokens, &table).unwrap();
    (0..1000).all(|_| {
        tokens.shuffle(&mut rng);
        bow_encode(&tokens, &table).unwrap() == reference
    })
}

fn gradients() -> Outcome {
    let (mlp, sg, ae) = (mlp_gradients(), skipgram_gradients(), autoencoder_gradients());
    let perm = bow_permutations();
    check(
        mlp <= 1e-4 && sg <= 1e-4 && ae <= 1e-4 && perm,
        format!("max rel err mlp {mlp:.1e}, skip-gram {sg:.1e}, autoencoder {ae:.1e}; bow invariant over 1000 permutations: {perm}"),
    )
}

fn probe_ablation(report: &ProbeReport) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for enc in [BOW, SEQ] {
        for task in [TaskKind::Content1Probe, TaskKind::Content2Probe] {
            let d = (pct(report, enc, task, FeatureMode::OnehotProbe) - pct(report, enc, task, FeatureMode::EmbeddingProbe))
                .abs();
            worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
            parts.push(format!("{enc} {task} {d:.1}"));
        }
    }
    check(worst <= 3.0, format!("|onehot - embedding|: {}", parts.join(", ")))
}

struct Run {
    _dir: tempfile::TempDir,
    ws: Workspace,
    elapsed: Duration,
}

fn full_run(cfg: &PipelineConfig) -> Result<Run, PipelineError> {
    let dir = tempfile::tempdir().expect("temp dir");
    let ws = Workspace::new(dir.path());
    let mut elapsed = Duration::ZERO;
    for stage in Stage::ALL {
        let outcome = run_stage(stage, cfg, &ws)?;
        eprintln!("  {stage}: {:.1}s", outcome.elapsed.as_secs_f64());
        elapsed += outcome.elapsed;
    }
    Ok(Run { _dir: dir, ws, elapsed })
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 realizer reference sentences", realizer_reference()));
    results.push(("7 gradients and bow invariance", gradients()));

    let cfg = PipelineConfig::default();
    eprintln!("acceptance: full pipeline run 1");
    let first = match full_run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL pipeline run: {e}");
            return ExitCode::FAILURE;
        }
    };
    let vocab = cfg.vocabulary().unwrap();
    let datasets = load_datasets(&first.ws, &vocab).unwrap();
    let report: ProbeReport = serde_json::from_str(&first.ws.read(PROBE_REPORT).unwrap()).unwrap();
    let ae: AutoencoderReport = serde_json::from_str(&first.ws.read(AUTOENCODER_REPORT).unwrap()).unwrap();

    results.push(("2 label oracle agreement", oracle_agreement(&datasets)));
    results.push(("3 split verification", splits_clean(&datasets, &cfg.split_policy(&vocab))));
    results.push(("4 BOW row", bow_row(&report, first.elapsed)));
    results.push(("5 sequence autoencoder row", sequence_row(&report, ae.reconstruction_accuracy, first.elapsed)));
    results.push(("6 random-vector controls", controls(&report)));
    results.push(("9 probe ablation", probe_ablation(&report)));

    eprintln!("acceptance: full pipeline run 2");
    let rerun = match full_run(&cfg) {
        Ok(second) => {
            let same = |rel: &str| first.ws.read(rel).ok().is_some_and(|a| second.ws.read(rel).ok() == Some(a));
            let identical = same(FINAL_REPORT) && same(PROBE_RECORDS);
            check(identical, format!("final report and probe records identical: {identical}"))
        }
        Err(e) => check(false, format!("rerun failed: {e}")),
    };
    results.push(("8 deterministic rerun", rerun));

    results.sort_by_key(|(name, _)| name.split(' ').next().and_then(|n| n.parse::<u32>().ok()));
    let mut all = true;
    for (name, o) in &results {
        all &= o.passed;
        println!("{} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
