//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Full run: roughly 45 minutes on one core. Criterion numbers passed after
//! `--` run a subset, e.g. `cargo test --test acceptance -- 5 7`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ndarray::Array2;
use neuralkit::{
    grad_check, softmax_cross_entropy_batch, DenseNet, GradCheckConfig, GruMasks, GruNet, Parameterized,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dronebeam::dataset::{build_sequences, split_flights, split_train_test, SensingSample, SequenceSample};
use dronebeam::eval::{
    confusion_matrix, joint_topk_accuracy, r2_power_score, resource_tradeoff, topk_accuracy, TradeoffEntry,
};
use dronebeam::phy::{
    beam_sweep, build_channel, downsample_power, make_codebook, steering_from_cosine, ChannelState, OfdmConfig,
    PathComponent, UlaArray,
};
use dronebeam::pipeline::{run, summary_without_timestamp, usable_segments, ExperimentConfig, Stage};
use dronebeam::predict::{evaluate_topk, train_predictor, training_subset, Modality, PredictorConfig};
use dronebeam::scenario::synthesize_dataset;
use dronebeam::track::{
    per_step_accuracy, recursive_rollout_batch, sensed_rollout_batch, tracking_rankings, train_tracker, BeamTracker,
    RolloutSchedule, TrackerConfig, TrackerModality,
};

const TRACKER_EPOCHS: usize = 60;
const TRACKER_DECAY: [usize; 2] = [12, 36];
const SEEDS: [u64; 3] = [1, 2, 3];

struct Outcome {
    pass: bool,
    detail: String,
    /// Runtime charged to the criterion when it differs from wall time of
    /// its own closure (shared training).
    charged: Option<Duration>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            charged: None,
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean over 1-based inclusive steps `a..=b`.
fn window(curve: &[f64], a: usize, b: usize) -> f64 {
    mean(&curve[a - 1..b])
}

fn random_batch(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

fn gradient_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mlp = DenseNet::<f64>::new(&[4, 512, 512, 32], &mut rng);
    let x = random_batch(&mut rng, 16, 4);
    let y: Vec<usize> = (0..16).map(|_| rng.random_range(0..32)).collect();
    let loss = |n: &DenseNet<f64>| softmax_cross_entropy_batch(&n.forward(&x.view()).unwrap().0, &y).unwrap().0;
    let grad = |n: &DenseNet<f64>| {
        let (logits, cache) = n.forward(&x.view()).unwrap();
        n.backward(&cache, &softmax_cross_entropy_batch(&logits, &y).unwrap().1)
    };
    let mlp_report = grad_check(&mut mlp, loss, grad, GradCheckConfig::default(), &mut rng);
    let mlp_fault = grad_check(
        &mut mlp,
        loss,
        |n| grad(n).into_iter().map(|g| g * 2.0).collect(),
        GradCheckConfig::default(),
        &mut rng,
    );

    let batch = 4;
    let mut gru = GruNet::<f64>::new(20, 128, 2, 3, 32, 0.5, &mut rng);
    let seq: Vec<Array2<f64>> = (0..8).map(|_| random_batch(&mut rng, batch, 20)).collect();
    let labels: Vec<Vec<usize>> = (0..3).map(|_| (0..batch).map(|_| rng.random_range(0..32)).collect()).collect();
    let masks = GruMasks::sample(&gru, 8, batch, &mut rng);
    let forward = |n: &GruNet<f64>| {
        let (logits, cache) = n.forward(&seq, Some(masks.clone())).unwrap();
        let mut total = 0.0;
        let mut d = Vec::new();
        for (l, y) in logits.iter().zip(&labels) {
            let (v, g) = softmax_cross_entropy_batch(l, y).unwrap();
            total += v;
            d.push(g);
        }
        (total, cache, d)
    };
    let gru_loss = |n: &GruNet<f64>| forward(n).0;
    let gru_grad = |n: &GruNet<f64>| {
        let (_, cache, d) = forward(n);
        n.backward(&cache, &d).unwrap()
    };
    let cfg = GradCheckConfig {
        samples: 400,
        ..Default::default()
    };
    let gru_report = grad_check(&mut gru, gru_loss, gru_grad, cfg, &mut rng);
    let gru_fault = grad_check(
        &mut gru,
        gru_loss,
        |n| gru_grad(n).into_iter().map(|g| g * 2.0).collect(),
        cfg,
        &mut rng,
    );
    let pass = mlp_report.within(1e-4)
        && gru_report.within(1e-4)
        && !mlp_fault.within(1e-4)
        && !gru_fault.within(1e-4);
    Outcome::new(
        pass,
        format!(
            "MLP max rel {:.2e} over {} coords ({} params), GRU max rel {:.2e} over {} coords ({} params); planted x2 fault: MLP {:.2}, GRU {:.2}",
            mlp_report.max_rel_error,
            mlp_report.checked,
            mlp.num_params(),
            gru_report.max_rel_error,
            gru_report.checked,
            gru.num_params(),
            mlp_fault.max_rel_error,
            gru_fault.max_rel_error
        ),
    )
}

fn phy_oracles() -> Outcome {
    let m = 16;
    let spacing = 0.5;
    let cfg = OfdmConfig::default();
    let cb64 = make_codebook(m, 64, spacing).unwrap();

    let norm_err = cb64
        .beams
        .iter()
        .map(|f| (f.iter().map(|v| v.norm_sqr()).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);

    let dft = make_codebook(m, m, spacing).unwrap();
    let mut ortho_err: f64 = 0.0;
    for (i, a) in dft.beams.iter().enumerate() {
        for (j, b) in dft.beams.iter().enumerate() {
            let g: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            ortho_err = ortho_err.max((g - want).norm());
        }
    }

    let array = UlaArray {
        num_antennas: m,
        element_spacing: spacing,
    };
    let mut aligned = 0;
    let mut exact_downsample = true;
    for (q, &u) in cb64.grid.iter().enumerate() {
        let path = PathComponent {
            gain: Complex64::new(1e-6, 0.0),
            delay: 0.0,
            azimuth: u.acos(),
            elevation: 0.0,
        };
        let h = build_channel(&[path], &cfg, &array).unwrap();
        let p64 = beam_sweep(&h, &cb64, &cfg).unwrap();
        aligned += usize::from(p64.best_index == q);
        let flat = ChannelState::flat(steering_from_cosine(u, m, spacing));
        let p = beam_sweep(&flat, &cb64, &cfg).unwrap();
        let p32 = downsample_power(&p).unwrap();
        exact_downsample &= (0..32).all(|i| p32.powers[i] == p.powers[2 * i]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_db: f64 = 0.0;
    for _ in 0..1000 {
        let path = PathComponent {
            gain: Complex64::from_polar(rng.random_range(1e-7..1e-5), rng.random_range(0.0..std::f64::consts::TAU)),
            delay: rng.random_range(0.0..cfg.max_delay() * 0.5),
            azimuth: rng.random_range(0.0..std::f64::consts::PI),
            elevation: rng.random_range(-1.2..1.2),
        };
        let h = build_channel(&[path], &cfg, &array).unwrap();
        let p64 = beam_sweep(&h, &cb64, &cfg).unwrap();
        let p32 = downsample_power(&p64).unwrap();
        worst_db = worst_db.max(10.0 * (p64.best_power() / p32.best_power()).log10());
    }
    let pass = norm_err <= 1e-12 && ortho_err <= 1e-12 && aligned == 64 && exact_downsample && worst_db <= 1.0;
    Outcome::new(
        pass,
        format!(
            "norm err {norm_err:.1e}, DFT Gram err {ortho_err:.1e}, grid argmax {aligned}/64, downsample exact {exact_downsample}, worst 32-vs-64 loss {worst_db:.3} dB over 1000 channels"
        ),
    )
}

fn metric_identities() -> Outcome {
    let uniform = Array2::<f64>::zeros((5, 32));
    let (loss, _) = softmax_cross_entropy_batch(&uniform, &[0, 3, 7, 19, 31]).unwrap();
    let loss_err = (loss - 32f64.ln()).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut monotone = true;
    let mut conserved = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let rankings: Vec<Vec<Vec<usize>>> = (0..n)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let mut r: Vec<usize> = (0..32).collect();
                        // biased toward low indices so hits are common
                        for i in 0..32 {
                            let j = rng.random_range(i..32.min(i + 4));
                            r.swap(i, j);
                        }
                        r
                    })
                    .collect()
            })
            .collect();
        let truths: Vec<Vec<usize>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(0..6)).collect()).collect();
        let first: Vec<Vec<usize>> = rankings.iter().map(|r| r[0].clone()).collect();
        let t0: Vec<usize> = truths.iter().map(|t| t[0]).collect();
        let topk: Vec<f64> = (1..=32).map(|k| topk_accuracy(&first, &t0, k).unwrap()).collect();
        monotone &= topk.windows(2).all(|w| w[0] <= w[1]) && topk[31] == 100.0;
        for k in [1, 3, 5] {
            let joint: Vec<f64> = (1..=3).map(|h| joint_topk_accuracy(&rankings, &truths, h, k).unwrap()).collect();
            monotone &= joint.windows(2).all(|w| w[0] >= w[1]);
        }
        let predicted: Vec<usize> = first.iter().map(|r| r[0]).collect();
        let cm = confusion_matrix(&t0, &predicted, 32).unwrap();
        let mut by_truth = vec![0; 32];
        for &t in &t0 {
            by_truth[t] += 1;
        }
        conserved &= cm.total() == n && cm.row_sums() == by_truth;
    }

    let optimal: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..10.0)).collect();
    let mu = mean(&optimal);
    let perfect = r2_power_score(&optimal, &optimal).unwrap();
    let mean_pred = r2_power_score(&vec![mu; optimal.len()], &optimal).unwrap();
    let r2_ok = perfect == Some(1.0) && mean_pred.is_some_and(|v| v.abs() <= 1e-12);

    let pass = loss_err <= 1e-9 && monotone && conserved && r2_ok;
    Outcome::new(
        pass,
        format!(
            "|loss - ln 32| {loss_err:.1e}, monotone over 1000 sets {monotone}, R2 perfect {perfect:?} mean {mean_pred:?}, confusion conserved {conserved}"
        ),
    )
}

struct Corpus {
    train: Vec<SensingSample>,
    test: Vec<SensingSample>,
    visible: usize,
}

fn corpus(cfg: &ExperimentConfig) -> Corpus {
    let samples = synthesize_dataset(&cfg.scenario, cfg.scenario.seed).unwrap().sensing_samples();
    let visible = samples.iter().filter(|s| s.visual.visible).count();
    let (train, test) = split_train_test(&samples, cfg.dataset.split_ratio, cfg.dataset.split_seed).unwrap();
    Corpus { train, test, visible }
}

fn predictor_cfg(cfg: &ExperimentConfig, m: Modality) -> PredictorConfig {
    cfg.predictors.iter().find(|p| p.modality == m).unwrap().clone()
}

fn top1(train: &[SensingSample], test: &[SensingSample], p: &PredictorConfig) -> f64 {
    let (model, _) = train_predictor(train, p, p.seed).unwrap();
    evaluate_topk(&model, test).0[0]
}

fn synthetic_prediction() -> Outcome {
    let mut clean = ExperimentConfig::default();
    clean.scenario.gps.noise_std = 0.0;
    let c = corpus(&clean);
    let hd = top1(&c.train, &c.test, &predictor_cfg(&clean, Modality::PositionHd));
    let vis = top1(&c.train, &c.test, &predictor_cfg(&clean, Modality::Vision));
    let mut pass = c.visible >= 12_000 && hd >= 90.0 && vis >= 90.0;
    let mut detail = format!(
        "sigma 0: {} visible samples, position_hd {hd:.2}%, vision {vis:.2}%; sigma 5 (position / position_hd / vision):",
        c.visible
    );
    for seed in SEEDS {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_seed_override(seed);
        cfg.scenario.gps.noise_std = 5.0;
        let corpus = corpus(&cfg);
        let acc = Modality::ALL.map(|m| top1(&corpus.train, &corpus.test, &predictor_cfg(&cfg, m)));
        let ordered = acc[2] >= acc[0] && acc[1] >= acc[0];
        pass &= ordered;
        detail += &format!(" seed {seed} {:.2} / {:.2} / {:.2}{};", acc[0], acc[1], acc[2], if ordered { "" } else { " (misordered)" });
    }
    Outcome::new(pass, detail)
}

fn fraction_plateau() -> Outcome {
    let mut pass = true;
    let mut detail = String::from("default corpus, top-1 at 40% / 100%:");
    for seed in SEEDS {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_seed_override(seed);
        let c = corpus(&cfg);
        detail += &format!(" seed {seed}");
        for m in Modality::ALL {
            let p = predictor_cfg(&cfg, m);
            let full = top1(&c.train, &c.test, &p);
            let part = top1(&training_subset(&c.train, 0.4, p.seed), &c.test, &p);
            pass &= (full - part).abs() <= 3.0;
            detail += &format!(" {} {part:.2}/{full:.2}", m.name());
        }
        detail.push(';');
    }
    Outcome::new(pass, detail)
}

struct Trackers {
    models: Vec<BeamTracker>,
    train_time: Vec<Duration>,
    test: Vec<SequenceSample>,
}

fn train_trackers() -> Trackers {
    let cfg = ExperimentConfig::default();
    let samples = synthesize_dataset(&cfg.scenario, cfg.scenario.seed).unwrap().sensing_samples();
    let flights = split_flights(&samples, cfg.dataset.split_ratio, cfg.dataset.split_seed).unwrap();
    let (tr, te): (Vec<SensingSample>, Vec<SensingSample>) =
        samples.into_iter().partition(|s| flights.contains(&s.flight_id));
    let train = build_sequences(&tr, cfg.dataset.r, cfg.dataset.r_prime);
    let test = build_sequences(&te, cfg.dataset.r, cfg.dataset.r_prime);
    let mut models = Vec::new();
    let mut train_time = Vec::new();
    for t in &cfg.trackers {
        let c = TrackerConfig {
            epochs: TRACKER_EPOCHS,
            decay_epochs: TRACKER_DECAY.to_vec(),
            ..t.clone()
        };
        let start = Instant::now();
        let (model, _) = train_tracker(&train, &c, c.seed).unwrap();
        train_time.push(start.elapsed());
        models.push(model);
    }
    Trackers {
        models,
        train_time,
        test,
    }
}

fn tracking_degradation(t: &Trackers) -> Outcome {
    let mut pass = true;
    let mut detail = format!("joint top-3 future 1/2/3 ({} epochs, {} test sequences):", TRACKER_EPOCHS, t.test.len());
    for model in &t.models {
        let (rk, truths) = tracking_rankings(model, &t.test).unwrap();
        let acc: Vec<f64> = (1..=3).map(|h| joint_topk_accuracy(&rk, &truths, h, 3).unwrap()).collect();
        pass &= acc[0] >= acc[1] && acc[1] >= acc[2];
        detail += &format!(" {} {:.2}/{:.2}/{:.2};", model.modality().name(), acc[0], acc[1], acc[2]);
    }
    Outcome::new(pass, detail)
}

struct RolloutCurves {
    segments: usize,
    per_step: Vec<f64>,
    intermittent: Vec<f64>,
    initial_only: Vec<f64>,
    position: Vec<f64>,
    vision: Vec<f64>,
    schedules: [RolloutSchedule; 3],
}

fn rollout_curves(t: &Trackers) -> RolloutCurves {
    let cfg = ExperimentConfig::default();
    let rc = &cfg.eval.rollout;
    let mut scenario = cfg.scenario.clone();
    scenario.seed = rc.corpus_seed;
    scenario.target_samples = Some(rc.corpus_samples);
    let samples = synthesize_dataset(&scenario, scenario.seed).unwrap().sensing_samples();
    let segs = usable_segments(&samples, rc.horizon + cfg.dataset.r, rc.max_segments);
    let by = |m: TrackerModality| t.models.iter().find(|x| x.modality() == m).unwrap();
    let beam = by(TrackerModality::BeamOnly);
    let schedules = [
        RolloutSchedule::parse(rc.horizon, cfg.dataset.r, &["1-50".to_string()]).unwrap(),
        RolloutSchedule::intermittent(),
        RolloutSchedule::initial_only(rc.horizon, cfg.dataset.r),
    ];
    let curve = |s: &RolloutSchedule| per_step_accuracy(&recursive_rollout_batch(beam, &segs, s).unwrap(), 3);
    let sensed = |m| per_step_accuracy(&sensed_rollout_batch(by(m), &segs, rc.horizon).unwrap(), 3);
    RolloutCurves {
        segments: segs.len(),
        per_step: curve(&schedules[0]),
        intermittent: curve(&schedules[1]),
        initial_only: curve(&schedules[2]),
        position: sensed(TrackerModality::Position),
        vision: sensed(TrackerModality::Vision),
        schedules,
    }
}

fn rollout_study(r: &RolloutCurves) -> Outcome {
    let init = &r.initial_only;
    let drop = window(init, 1, 8) - window(init, 41, 50);
    let spread = r.vision.iter().cloned().fold(f64::MIN, f64::max) - r.vision.iter().cloned().fold(f64::MAX, f64::min);
    let it = &r.intermittent;
    let recovery = window(it, 13, 20) > window(init, 13, 20)
        && window(it, 33, 40) > window(init, 33, 40)
        && window(it, 33, 40) > window(it, 21, 32);
    let decay = window(it, 21, 32) < window(it, 13, 20) && window(it, 41, 50) < window(it, 33, 40);
    let pass = r.segments >= 200 && drop >= 20.0 && spread <= 10.0 && recovery && decay;
    Outcome::new(
        pass,
        format!(
            "{} segments; initial-only top-3 steps 1-8 {:.2} vs 41-50 {:.2} (drop {drop:.2}); vision spread {spread:.2}; intermittent 13-20 {:.2} (initial-only {:.2}), 21-32 {:.2}, 33-40 {:.2} (initial-only {:.2}), 41-50 {:.2}",
            r.segments,
            window(init, 1, 8),
            window(init, 41, 50),
            window(it, 13, 20),
            window(init, 13, 20),
            window(it, 21, 32),
            window(it, 33, 40),
            window(init, 33, 40),
            window(it, 41, 50)
        ),
    )
}

fn tradeoff_table(r: &RolloutCurves) -> Outcome {
    let entry = |approach: &str, steps: usize, curve: &[f64]| TradeoffEntry {
        approach: approach.into(),
        beam_training_steps: steps,
        accuracy: vec![mean(curve)],
    };
    let entries = [
        entry("per_step", r.schedules[0].beam_training_steps(), &r.per_step),
        entry("intermittent", r.schedules[1].beam_training_steps(), &r.intermittent),
        entry("initial_only", r.schedules[2].beam_training_steps(), &r.initial_only),
        entry("vision", 0, &r.vision),
        entry("position", 0, &r.position),
    ];
    let rows = resource_tradeoff(&entries, 50);
    let pct: Vec<f64> = rows.iter().map(|x| x.beam_training_pct).collect();
    let pass = pct[..4] == [100.0, 48.0, 16.0, 0.0] && rows.iter().all(|x| x.accuracy[0].is_finite());
    let detail = rows
        .iter()
        .map(|x| format!("{} {}% -> top-3 {:.2}", x.approach, x.beam_training_pct, x.accuracy[0]))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome::new(pass, detail)
}

fn reduced_config(out: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.scenario.target_samples = Some(3000);
    c.eval.rollout.corpus_samples = 3000;
    c.eval.fraction_sweep = vec![0.4, 1.0];
    for p in &mut c.predictors {
        p.hidden = vec![64, 64];
        p.epochs = 4;
    }
    for t in &mut c.trackers {
        t.hidden = 32;
        t.epochs = 3;
    }
    c.output_dir = out.to_path_buf();
    c
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(Stage::All, &reduced_config(a.path())).unwrap();
    run(Stage::All, &reduced_config(b.path())).unwrap();
    let read = |d: &std::path::Path| {
        summary_without_timestamp(&std::fs::read_to_string(d.join("reports/summary.json")).unwrap()).unwrap()
    };
    let same_summary = read(a.path()) == read(b.path());
    let mut same_reports = true;
    for f in ["eval_report.json", "rollout_report.json"] {
        same_reports &= std::fs::read(a.path().join("reports").join(f)).unwrap()
            == std::fs::read(b.path().join("reports").join(f)).unwrap();
    }
    Outcome::new(
        same_summary && same_reports,
        format!("summary equal without timestamp {same_summary}, eval/rollout reports byte-identical {same_reports}"),
    )
}

fn main() {
    // criterion numbers given as arguments select a subset
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut failures = 0;
    let mut report = |n: usize, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(n) {
            return;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let elapsed = outcome.charged.unwrap_or_else(|| start.elapsed());
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = outcome.pass && in_time;
        if !pass {
            failures += 1;
        }
        let limit_note = limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
        println!(
            "criterion {n} {name}: {} ({:.1} s{limit_note}) {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            outcome.detail
        );
    };
    let min = |m: u64| Some(Duration::from_secs(60 * m));

    report(1, "gradient fidelity", Some(Duration::from_secs(30)), &mut gradient_fidelity);
    report(2, "phy oracles", min(1), &mut phy_oracles);
    report(3, "metric identities", min(1), &mut metric_identities);
    report(4, "synthetic prediction", min(20), &mut synthetic_prediction);
    report(5, "training-fraction plateau", min(30), &mut fraction_plateau);

    if [6, 7, 8].into_iter().any(wanted) {
        let shared = catch_unwind(|| {
            let trackers = train_trackers();
            let start = Instant::now();
            let curves = rollout_curves(&trackers);
            (trackers, curves, start.elapsed())
        });
        match shared {
            Ok((trackers, curves, rollout_time)) => {
                report(6, "tracking degradation", None, &mut || tracking_degradation(&trackers));
                // beam-only and vision training plus the rollouts themselves
                let charged = trackers.train_time[0] + trackers.train_time[2] + rollout_time;
                report(7, "rollout study", min(15), &mut || Outcome {
                    charged: Some(charged),
                    ..rollout_study(&curves)
                });
                report(8, "resource trade-off", None, &mut || tradeoff_table(&curves));
            }
            Err(_) => {
                for (n, name) in [(6, "tracking degradation"), (7, "rollout study"), (8, "resource trade-off")] {
                    report(n, name, None, &mut || Outcome::new(false, "tracker training panicked".into()));
                }
            }
        }
    }
    report(9, "determinism", None, &mut determinism);

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all selected criteria passed");
}
