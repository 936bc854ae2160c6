//! Release gate: ten numbered end-to-end checks covering the chaos
//! estimators, masking, gradients, binning, causality, statistics, and the
//! full pipeline. Each check prints exactly one PASS or FAIL line (visible
//! with `--nocapture`) and fails the build when its bound is missed.

use std::time::Instant;

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use cmg_core::chaos::{
    correlation_dimension, default_radii, default_scales, dfa, entropy_of_psd,
    lyapunov_rosenstein, spectral_entropy, EmbeddingSpec,
};
use cmg_core::dataset::{make_windows, EventSample, SequenceWindow};
use cmg_core::eval::evaluate_daybreak;
use cmg_core::model::{
    causal_mask, decode, encode, init_params, max_gradient_error, transposed_causal_mask,
    ModelConfig,
};
use cmg_core::ohlc::Candle;
use cmg_core::pipeline::{
    build_dataset, compare, majority_direction, write_artifacts, DatasetBundle,
    PipelineSettings, MODEL_BINARY_LR, MODEL_CMG, MODEL_GNB, MODEL_MULTI_LR,
};
use cmg_core::stats::{paired_t_test, student_t_sf, wilcoxon_signed_rank};
use cmg_core::synth::synth_generate;
use cmg_core::target::{expanding_standardize, gaussian_bin, BinningSpec};

// Numeric bounds for every check, kept in one place so the gate is auditable.
const LYAPUNOV_RANGE: (f64, f64) = (0.64, 0.75);
const LYAPUNOV_BUDGET_SECS: f64 = 10.0;
const D2_RANGE: (f64, f64) = (1.10, 1.35);
const DFA_WHITE_RANGE: (f64, f64) = (0.4, 0.6);
const DFA_WALK_RANGE: (f64, f64) = (1.35, 1.65);
const DFA_TRIALS: usize = 50;
const DFA_MIN_IN_RANGE: usize = 45; // 90% of the trials
const FLAT_SPECTRUM_TOL: f64 = 1e-9;
const WHITE_ENTROPY_REL_TOL: f64 = 0.05;
const MASK_TRIALS: usize = 100;
const GRAD_SEEDS: u64 = 5;
const GRAD_MAX_REL_ERR: f64 = 1e-4;
const BIN_DRAWS: usize = 1_000_000;
const BIN_MASS_TOL: f64 = 0.01;
const BIN_GRID_STEP: f64 = 1e-3;
const LEAK_MUTATIONS: usize = 50;
const T_EXAMPLE_TOL: f64 = 1e-4;
const T_SF_TOL: f64 = 1e-9;
const WILCOXON_TRIALS: usize = 100;
const WILCOXON_MAX_N: usize = 12;
const SMOKE_BUDGET_SECS: f64 = 300.0;
const SMOKE_ACCURACY_SLACK: f64 = 0.02;

/// Prints the single gate line for check `n` and panics on failure.
fn verdict(n: u32, what: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("[{n:02}] PASS {what}"),
        Err(e) => {
            println!("[{n:02}] FAIL {what}: {e}");
            panic!("check {n:02} failed: {e}");
        }
    }
}

macro_rules! check {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn fallible<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Logistic-map orbit at r = 4 after a burn-in, seeded start point.
fn logistic_orbit(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut x: f64 = rng.random_range(0.05..0.95);
    for _ in 0..200 {
        x = 4.0 * x * (1.0 - x);
    }
    (0..n)
        .map(|_| {
            x = 4.0 * x * (1.0 - x);
            x
        })
        .collect()
}

/// Henon-map x coordinate (a = 1.4, b = 0.3) after a 500-step transient.
fn henon_orbit(n: usize) -> Vec<f64> {
    let (a, b) = (1.4, 0.3);
    let (mut x, mut y) = (0.1f64, 0.1f64);
    let step = |x: &mut f64, y: &mut f64| {
        let nx = 1.0 - a * *x * *x + *y;
        *y = b * *x;
        *x = nx;
    };
    for _ in 0..500 {
        step(&mut x, &mut y);
    }
    (0..n)
        .map(|_| {
            step(&mut x, &mut y);
            x
        })
        .collect()
}

fn gaussian_vec(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn c01_logistic_map_lyapunov_exponent() {
    verdict(
        1,
        "logistic-map Lyapunov exponent lands in [0.64, 0.75] within 10 s",
        (|| {
            let t0 = Instant::now();
            let x = logistic_orbit(11, 5000);
            let spec = EmbeddingSpec::new(2, 1).map_err(fallible)?;
            let lambda = lyapunov_rosenstein(&x, &spec, 1, (1, 7)).map_err(fallible)?;
            let secs = t0.elapsed().as_secs_f64();
            check!(
                (LYAPUNOV_RANGE.0..=LYAPUNOV_RANGE.1).contains(&lambda),
                "lambda = {lambda:.4}, want [{}, {}]",
                LYAPUNOV_RANGE.0,
                LYAPUNOV_RANGE.1
            );
            check!(
                secs < LYAPUNOV_BUDGET_SECS,
                "took {secs:.2} s, budget {LYAPUNOV_BUDGET_SECS} s"
            );
            Ok(())
        })(),
    );
}

#[test]
fn c02_dimension_and_dfa_oracles() {
    verdict(
        2,
        "Henon D2 in [1.10, 1.35]; DFA separates white noise from a random walk in >= 90% of trials",
        (|| {
            let x = henon_orbit(5000);
            let spec = EmbeddingSpec::new(2, 1).map_err(fallible)?;
            let radii = default_radii(&x, 24).map_err(fallible)?;
            let d2 = correlation_dimension(&x, &spec, 1, &radii).map_err(fallible)?;
            check!(
                (D2_RANGE.0..=D2_RANGE.1).contains(&d2),
                "d2 = {d2:.4}, want [{}, {}]",
                D2_RANGE.0,
                D2_RANGE.1
            );

            let n = 2048;
            let scales = default_scales(n, 12).map_err(fallible)?;
            let mut white_ok = 0usize;
            let mut walk_ok = 0usize;
            for trial in 0..DFA_TRIALS {
                let mut rng = ChaCha20Rng::seed_from_u64(2000 + trial as u64);
                let noise = gaussian_vec(&mut rng, n);
                let alpha_w = dfa(&noise, &scales).map_err(fallible)?;
                if (DFA_WHITE_RANGE.0..=DFA_WHITE_RANGE.1).contains(&alpha_w) {
                    white_ok += 1;
                }
                let mut acc = 0.0;
                let walk: Vec<f64> = noise
                    .iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect();
                let alpha_rw = dfa(&walk, &scales).map_err(fallible)?;
                if (DFA_WALK_RANGE.0..=DFA_WALK_RANGE.1).contains(&alpha_rw) {
                    walk_ok += 1;
                }
            }
            check!(
                white_ok >= DFA_MIN_IN_RANGE,
                "white-noise alpha in range only {white_ok}/{DFA_TRIALS} times"
            );
            check!(
                walk_ok >= DFA_MIN_IN_RANGE,
                "random-walk alpha in range only {walk_ok}/{DFA_TRIALS} times"
            );
            Ok(())
        })(),
    );
}

#[test]
fn c03_spectral_entropy_oracles() {
    verdict(
        3,
        "flat spectrum gives H = ln K exactly; white-noise entropy within 5% of ln 1024",
        (|| {
            for k in [4usize, 64, 1024] {
                let h = entropy_of_psd(&vec![0.37; k]).map_err(fallible)?;
                let want = (k as f64).ln();
                check!(
                    (h - want).abs() <= FLAT_SPECTRUM_TOL,
                    "flat K={k}: H = {h:.12}, want ln K = {want:.12}"
                );
            }
            let mut rng = ChaCha20Rng::seed_from_u64(3);
            let x = gaussian_vec(&mut rng, 2048);
            let h = spectral_entropy(&x).map_err(fallible)?;
            let want = 1024f64.ln();
            check!(
                (h - want).abs() <= WHITE_ENTROPY_REL_TOL * want,
                "white noise: H = {h:.4}, want within 5% of {want:.4}"
            );
            Ok(())
        })(),
    );
}

/// One window of random event states and labels, for probing the network.
fn random_window(rng: &mut ChaCha20Rng, l: usize, n_features: usize) -> SequenceWindow {
    const LABELS: [i8; 6] = [-3, -2, -1, 1, 2, 3];
    let samples: Vec<EventSample> = (0..l)
        .map(|i| EventSample {
            features: gaussian_vec(rng, n_features),
            label: LABELS[rng.random_range(0..LABELS.len())],
            day_id: i,
            bar_index: 3 * i,
            outcome_bar_index: 3 * i + 3,
        })
        .collect();
    make_windows(&samples, l).unwrap().pop().unwrap()
}

fn row_bits(a: &Array2<f64>, i: usize) -> Vec<u64> {
    a.row(i).iter().map(|v| v.to_bits()).collect()
}

#[test]
fn c04_future_only_mask_blocks_past_encoder_rows() {
    verdict(
        4,
        "perturbing encoder rows j < i never reaches decoder row i; a causal mask does",
        (|| {
            let l = 8;
            for trial in 0..MASK_TRIALS {
                let mut rng = ChaCha20Rng::seed_from_u64(4000 + trial as u64);
                let config = ModelConfig {
                    d_model: 16,
                    n_heads: 2,
                    d_ff: 32,
                    lstm_hidden: 8,
                    window: l,
                    n_features: 6,
                    n_classes: 6,
                    seed: 4000 + trial as u64,
                };
                let params = init_params(config).map_err(fallible)?;
                let w = random_window(&mut rng, l, 6);
                let memory = encode(&params, w.encoder_input()).map_err(fallible)?;
                let future_mask = transposed_causal_mask(l);
                let past_mask = causal_mask(l);
                let base_future =
                    decode(&params, w.decoder_input(), &memory, &future_mask).map_err(fallible)?;
                let base_causal =
                    decode(&params, w.decoder_input(), &memory, &past_mask).map_err(fallible)?;
                for i in 1..l {
                    let mut bumped = memory.clone();
                    for j in 0..i {
                        for v in bumped.row_mut(j) {
                            *v += 0.5;
                        }
                    }
                    let got_future = decode(&params, w.decoder_input(), &bumped, &future_mask)
                        .map_err(fallible)?;
                    check!(
                        row_bits(&got_future, i) == row_bits(&base_future, i),
                        "trial {trial}: perturbing rows < {i} leaked into row {i} logits"
                    );
                    let got_causal = decode(&params, w.decoder_input(), &bumped, &past_mask)
                        .map_err(fallible)?;
                    check!(
                        row_bits(&got_causal, i) != row_bits(&base_causal, i),
                        "trial {trial}: causal control left row {i} logits unchanged"
                    );
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn c05_analytic_gradients_match_finite_differences() {
    verdict(
        5,
        "max relative gradient error below 1e-4 on every tensor, 5 seeds",
        (|| {
            let l = 4;
            for seed in 0..GRAD_SEEDS {
                let config = ModelConfig {
                    d_model: 8,
                    n_heads: 2,
                    d_ff: 16,
                    lstm_hidden: 8,
                    window: l,
                    n_features: 5,
                    n_classes: 6,
                    seed: 500 + seed,
                };
                let params = init_params(config).map_err(fallible)?;
                let mut rng = ChaCha20Rng::seed_from_u64(900 + seed);
                let w1 = random_window(&mut rng, l, 5);
                let w2 = random_window(&mut rng, l, 5);
                let (err, tensor) =
                    max_gradient_error(&params, &[&w1, &w2], 1e-4).map_err(fallible)?;
                check!(
                    err < GRAD_MAX_REL_ERR,
                    "seed {seed}: relative error {err:.3e} on {tensor}"
                );
            }
            Ok(())
        })(),
    );
}

#[test]
fn c06_gaussian_binning_masses_and_shape() {
    verdict(
        6,
        "six-class bin masses match 25/12.5/12.5% per side; bins monotone and antisymmetric",
        (|| {
            let spec = BinningSpec::default();
            let mut rng = ChaCha20Rng::seed_from_u64(6);
            let mut counts = [0usize; 7]; // index by label + 3, slot 3 unused
            for _ in 0..BIN_DRAWS {
                let z: f64 = rng.sample(StandardNormal);
                let label = gaussian_bin(z, &spec).map_err(fallible)?;
                counts[(label + 3) as usize] += 1;
            }
            let expected = [0.125, 0.125, 0.25, 0.0, 0.25, 0.125, 0.125];
            for (slot, want) in expected.iter().enumerate() {
                if slot == 3 {
                    continue;
                }
                let got = counts[slot] as f64 / BIN_DRAWS as f64;
                check!(
                    (got - want).abs() <= BIN_MASS_TOL,
                    "label {}: mass {got:.4}, want {want} +/- {BIN_MASS_TOL}",
                    slot as i32 - 3
                );
            }

            let steps = (8.0 / BIN_GRID_STEP) as usize;
            let mut prev = i8::MIN;
            for k in 0..=steps {
                let z = -4.0 + k as f64 * BIN_GRID_STEP;
                let label = gaussian_bin(z, &spec).map_err(fallible)?;
                check!(
                    label >= prev,
                    "bin labels not monotone at z = {z}: {prev} then {label}"
                );
                prev = label;
                if z > 0.0 {
                    let mirrored = gaussian_bin(-z, &spec).map_err(fallible)?;
                    check!(
                        mirrored == -label,
                        "antisymmetry broken at z = {z}: {label} vs {mirrored}"
                    );
                }
            }
            Ok(())
        })(),
    );
}

/// Every train-side bit build_dataset produces: split boundary, samples,
/// and windowed tensors.
fn train_fingerprint(bundle: &DatasetBundle, window: usize) -> Result<Vec<u64>, String> {
    let mut bits = vec![bundle.split.first_test_day as u64];
    for s in &bundle.split.train {
        bits.push(s.day_id as u64);
        bits.push(s.bar_index as u64);
        bits.push(s.outcome_bar_index as u64);
        bits.push(s.label as i64 as u64);
        bits.extend(s.features.iter().map(|v| v.to_bits()));
    }
    for w in make_windows(&bundle.split.train, window).map_err(fallible)? {
        bits.extend(w.encoder_input().iter().map(|v| v.to_bits()));
        bits.extend(w.labels.iter().map(|&l| l as u64));
    }
    Ok(bits)
}

#[test]
fn c07_test_data_never_reaches_training_tensors() {
    verdict(
        7,
        "test-day mutations leave train tensors bit-identical; truncation preserves z prefix",
        (|| {
            let settings = PipelineSettings::default();
            let series = synth_generate(21, 60, 48, 3.9, 0.004).map_err(fallible)?;
            let bundle = build_dataset(&series, &settings).map_err(fallible)?;
            let baseline = train_fingerprint(&bundle, settings.window)?;
            let first_test_day = bundle.split.first_test_day;
            let test_bars: Vec<usize> = bundle
                .days
                .iter()
                .filter(|d| d.day_id >= first_test_day)
                .flat_map(|d| d.start_index..=d.end_index)
                .collect();
            check!(!test_bars.is_empty(), "no test-period bars to mutate");

            let mut rng = ChaCha20Rng::seed_from_u64(7);
            for trial in 0..LEAK_MUTATIONS {
                let mut mutated = series.clone();
                let at = test_bars[rng.random_range(0..test_bars.len())];
                let p = mutated.candles[at].close * rng.random_range(0.6..1.8);
                let ts = mutated.candles[at].timestamp;
                mutated.candles[at] = Candle { timestamp: ts, open: p, high: p, low: p, close: p };
                let rebuilt = build_dataset(&mutated, &settings).map_err(fallible)?;
                let got = train_fingerprint(&rebuilt, settings.window)?;
                check!(
                    got == baseline,
                    "mutation {trial} at bar {at} changed the train tensors"
                );
            }

            let mut rng = ChaCha20Rng::seed_from_u64(77);
            let y = gaussian_vec(&mut rng, 300);
            let (z_full, _) = expanding_standardize(&y, 20);
            for _ in 0..LEAK_MUTATIONS {
                let cut = rng.random_range(1..y.len());
                let (z_cut, _) = expanding_standardize(&y[..cut], 20);
                let same = z_cut
                    .iter()
                    .zip(&z_full[..cut])
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                check!(same, "truncation at {cut} changed the standardized prefix");
            }
            Ok(())
        })(),
    );
}

/// Average midranks of `abs`, 1-based, ties averaged.
fn average_ranks(abs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[a].partial_cmp(&abs[b]).unwrap());
    let mut ranks = vec![0.0; abs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && abs[order[j + 1]] == abs[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[test]
fn c08_statistics_against_independent_oracles() {
    verdict(
        8,
        "paired t frozen example; Wilcoxon p equals 2^n enumeration; t SF matches closed forms",
        (|| {
            let t = paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).map_err(fallible)?;
            check!(
                (t.t - 3.4641).abs() <= T_EXAMPLE_TOL,
                "t = {:.6}, want 3.4641 +/- {T_EXAMPLE_TOL}",
                t.t
            );
            check!(
                (t.p - 0.0742).abs() <= T_EXAMPLE_TOL,
                "p = {:.6}, want 0.0742 +/- {T_EXAMPLE_TOL}",
                t.p
            );

            let mut k = -6.0f64;
            while k <= 6.0 {
                let sf1 = student_t_sf(k, 1.0).map_err(fallible)?;
                let want1 = 0.5 - k.atan() / std::f64::consts::PI;
                check!(
                    (sf1 - want1).abs() <= T_SF_TOL,
                    "df=1 SF({k}) = {sf1:.12}, closed form {want1:.12}"
                );
                let sf2 = student_t_sf(k, 2.0).map_err(fallible)?;
                let want2 = 0.5 * (1.0 - k / (k * k + 2.0).sqrt());
                check!(
                    (sf2 - want2).abs() <= T_SF_TOL,
                    "df=2 SF({k}) = {sf2:.12}, closed form {want2:.12}"
                );
                k += 0.25;
            }

            let mut rng = ChaCha20Rng::seed_from_u64(8);
            let mut done = 0;
            while done < WILCOXON_TRIALS {
                let n = rng.random_range(2..=WILCOXON_MAX_N);
                let d: Vec<f64> =
                    (0..n).map(|_| rng.random_range(-4i64..=4) as f64).collect();
                if d.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let zeros = vec![0.0; n];
                let got = wilcoxon_signed_rank(&d, &zeros).map_err(fallible)?;

                let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
                let ranks = average_ranks(&nz.iter().map(|v| v.abs()).collect::<Vec<_>>());
                let total: f64 = ranks.iter().sum();
                let w_plus: f64 = nz
                    .iter()
                    .zip(&ranks)
                    .filter(|(v, _)| **v > 0.0)
                    .map(|(_, r)| *r)
                    .sum();
                let w_obs = w_plus.min(total - w_plus);
                let m = nz.len();
                let hits = (0..1u64 << m)
                    .filter(|mask| {
                        let w: f64 = ranks
                            .iter()
                            .enumerate()
                            .filter(|(b, _)| mask >> b & 1 == 1)
                            .map(|(_, r)| *r)
                            .sum();
                        w <= w_obs + 1e-9
                    })
                    .count();
                let p_enum = (2.0 * hits as f64 / (1u64 << m) as f64).min(1.0);
                check!(
                    (got.w - w_obs).abs() <= 1e-9,
                    "W = {}, enumeration says {w_obs} for d = {d:?}",
                    got.w
                );
                check!(
                    (got.p - p_enum).abs() <= 1e-12,
                    "p = {:.12}, enumeration says {p_enum:.12} for d = {d:?}",
                    got.p
                );
                done += 1;
            }
            Ok(())
        })(),
    );
}

#[test]
fn c09_full_comparison_beats_the_clock_and_the_constant_baseline() {
    verdict(
        9,
        "360-day comparison finishes under 5 min with a full report and competitive accuracy",
        (|| {
            let mut settings = PipelineSettings::default();
            settings.seed = 4242;
            settings.train.max_epochs = 60;
            let series = synth_generate(4242, 360, 96, 3.9, 0.005).map_err(fallible)?;

            let t0 = Instant::now();
            let result =
                compare(&[("SYNTH".to_string(), series.clone())], &settings).map_err(fallible)?;
            let secs = t0.elapsed().as_secs_f64();
            check!(
                secs < SMOKE_BUDGET_SECS,
                "comparison took {secs:.0} s, budget {SMOKE_BUDGET_SECS} s"
            );

            let bundle = build_dataset(&series, &settings).map_err(fallible)?;
            check!(bundle.days.len() == 360, "expected 360 days, got {}", bundle.days.len());
            check!(
                bundle.split.first_test_day == 252,
                "first test day {} but the last 108 days should be held out",
                bundle.split.first_test_day
            );

            check!(result.report.models.len() == 4, "expected 4 models in the report");
            for name in [MODEL_CMG, MODEL_BINARY_LR, MODEL_MULTI_LR, MODEL_GNB] {
                check!(
                    result.report.models.iter().any(|m| m.name == name),
                    "model {name} missing from the report"
                );
            }
            check!(result.report.tests.len() == 3, "expected 3 pairwise test rows");
            for heading in [
                "## Average Daybreak Sentiment Prediction Accuracy",
                "## Paired t-test (CMG vs baseline)",
                "## Wilcoxon signed-rank (CMG vs baseline)",
            ] {
                check!(result.markdown.contains(heading), "report is missing {heading:?}");
            }
            check!(result.csv.starts_with("section,model,key,value"), "csv header changed");

            let outcome = &result.indices[0];
            let cmg_acc = outcome
                .accuracy(MODEL_CMG)
                .ok_or_else(|| "no CMG accuracy".to_string())?;
            let constant = majority_direction(&bundle.split.train);
            let preds: Vec<(usize, _)> =
                outcome.scored_days.iter().map(|&d| (d, constant)).collect();
            let floor = evaluate_daybreak(&series, &bundle.days, &preds)
                .map_err(fallible)?
                .accuracy;
            check!(
                cmg_acc >= floor - SMOKE_ACCURACY_SLACK,
                "CMG accuracy {cmg_acc:.4} below constant-direction floor {floor:.4} - {SMOKE_ACCURACY_SLACK}"
            );
            Ok(())
        })(),
    );
}

#[test]
fn c10_identical_runs_are_byte_identical() {
    verdict(
        10,
        "two identical pipeline runs write byte-identical reports and checkpoints",
        (|| {
            let mut settings = PipelineSettings::default();
            settings.seed = 10;
            settings.window = 6;
            settings.d_model = 16;
            settings.d_ff = 32;
            settings.lstm_hidden = 16;
            settings.train.max_epochs = 8;
            settings.train.patience = 4;
            let series = synth_generate(10, 120, 48, 3.9, 0.004).map_err(fallible)?;
            let inputs = vec![("SYNTH".to_string(), series)];

            let first = compare(&inputs, &settings).map_err(fallible)?;
            let second = compare(&inputs, &settings).map_err(fallible)?;
            check!(first.markdown == second.markdown, "markdown reports differ");
            check!(first.csv == second.csv, "csv reports differ");

            let dir_a = tempfile::tempdir().map_err(fallible)?;
            let dir_b = tempfile::tempdir().map_err(fallible)?;
            let paths_a = write_artifacts(&first, dir_a.path()).map_err(fallible)?;
            let paths_b = write_artifacts(&second, dir_b.path()).map_err(fallible)?;
            check!(
                paths_a.len() == paths_b.len(),
                "artifact counts differ: {} vs {}",
                paths_a.len(),
                paths_b.len()
            );
            for (a, b) in paths_a.iter().zip(&paths_b) {
                let rel_a = a.strip_prefix(dir_a.path()).map_err(fallible)?;
                let rel_b = b.strip_prefix(dir_b.path()).map_err(fallible)?;
                check!(rel_a == rel_b, "artifact layout differs: {rel_a:?} vs {rel_b:?}");
                let bytes_a = std::fs::read(a).map_err(fallible)?;
                let bytes_b = std::fs::read(b).map_err(fallible)?;
                check!(bytes_a == bytes_b, "{rel_a:?} differs between identical runs");
            }
            Ok(())
        })(),
    );
}
