// Calibration diagnostics: score dynamics around drift events and the
// policy/replacement orderings on the benchmark entries.
use driftrack::bench::{run_experiment, ExperimentConfig, ABLATION_RANDOM_P};
use driftrack::simulator::{gen_stream, suite_entry, StreamConfig};
use driftrack::tracker::{ReplacementKind, TrackerConfig, TrackerState, UpdatePolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn tcfg() -> TrackerConfig {
    TrackerConfig {
        train_steps: std::env::var("STEPS").ok().and_then(|v| v.parse().ok()).unwrap_or(60),
        init_train_steps: 60,
        ..TrackerConfig::default()
    }
}

fn policy_sweep(suite: &str, seeds: usize) {
    println!("--- {suite} ({seeds} seeds) ---");
    let random = format!("random:{ABLATION_RANDOM_P}");
    for policy in ["on_change", "every_frame", "periodic:5", "periodic:10", "periodic:15", random.as_str()] {
        let cfg = ExperimentConfig {
            suite: suite.into(),
            update_policy: policy.to_string(),
            tracker: tcfg(),
            ..ExperimentConfig::default()
        }
        .with_seed_count(seeds);
        let r = run_experiment(&cfg).unwrap();
        let a = &r.aggregate;
        println!(
            "{policy:>22}: acc {:.4} (se {:.4})  score {:.3}  updates {:>6.1}  delay {:?}  falses {}  recov {:?}",
            a.accuracy.mean,
            a.accuracy.standard_error(seeds),
            a.mean_max_score.mean,
            a.updates_performed.mean,
            a.detection_delay_mean.map(|d| (d * 10.0).round() / 10.0),
            a.false_alarms_total,
            a.post_return_recovery_accuracy.map(|s| (s.mean * 1000.0).round() / 1000.0),
        );
    }
}

fn replacement_sweep(suite: &str, seeds: usize) {
    println!("--- {suite} replacement sweep, on_change ({seeds} seeds) ---");
    for repl in [
        ReplacementKind::Off,
        ReplacementKind::Random,
        ReplacementKind::Density,
        ReplacementKind::ScoreDiscretized,
    ] {
        let mut cfg = ExperimentConfig {
            suite: suite.into(),
            update_policy: "on_change".into(),
            tracker: tcfg(),
            ..ExperimentConfig::default()
        }
        .with_seed_count(seeds);
        cfg.tracker.replacement = repl;
        let r = run_experiment(&cfg).unwrap();
        let a = &r.aggregate;
        println!(
            "{:>28}: acc {:.4} (se {:.4})  recovery {:.4} (se {:.4})",
            format!("{repl:?}"),
            a.accuracy.mean,
            a.accuracy.standard_error(seeds),
            a.post_return_recovery_accuracy.map(|s| s.mean).unwrap_or(f64::NAN),
            a.post_return_recovery_accuracy.map(|s| s.standard_error(seeds)).unwrap_or(f64::NAN),
        );
    }
}

fn drift_trace(suite: &str) {
    // Single-seed trace of scores around the first two drift events.
    let entry = suite_entry(suite).unwrap();
    let stream = StreamConfig { seed: 0, ..entry.stream };
    let (frames, events) = gen_stream(&entry.schedule, &stream).unwrap();
    let cfg = tcfg();
    let mut state =
        TrackerState::init_with_policy(&frames[0], &cfg, UpdatePolicy::OnChange(cfg.detector()))
            .unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(0 ^ 0x9e37_79b9_7f4a_7c15);
    println!(
        "--- {suite} score trace around first events {:?} ---",
        &events.iter().take(2).map(|e| e.frame_index).collect::<Vec<_>>()
    );
    let show: Vec<usize> = events
        .iter()
        .take(2)
        .flat_map(|e| (e.frame_index.saturating_sub(3))..(e.frame_index + 12))
        .collect();
    for f in &frames[1..] {
        let r = state.step(f, &mut rng).unwrap();
        if show.contains(&f.frame_index) {
            println!(
                "  frame {:>4}: max {:.3} chosen={} true={} {}{}{}",
                f.frame_index,
                r.max_score,
                r.chosen_index,
                f.true_index,
                if r.chosen_index == f.true_index { "" } else { "MISS " },
                if r.alarm { "ALARM " } else { "" },
                if r.retrained { "RETRAIN" } else { "" },
            );
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(|s| s.as_str()).unwrap_or("all");
    match what {
        "trace" => {
            drift_trace("abrupt3");
            drift_trace("recurrent5");
        }
        "stationary" => policy_sweep("stationary", 5),
        "quick" => {
            policy_sweep("abrupt3", 6);
            policy_sweep("recurrent5", 6);
        }
        "repl" => replacement_sweep("recurrent5", 8),
        _ => {
            policy_sweep("stationary", 5);
            drift_trace("abrupt3");
            policy_sweep("abrupt3", 6);
            policy_sweep("recurrent5", 6);
            replacement_sweep("recurrent5", 6);
        }
    }
}
