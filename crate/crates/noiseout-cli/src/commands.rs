//! One function per subcommand. All artifact writing happens here; the
//! library stays filesystem-free except for datasets and model files.

use crate::config::Config;
use crate::report::{self, Summary, SweepRow};
use crate::UsageError;
use anyhow::{Context, Result};
use noiseout::net::{backward, generate_noise_targets, sgd_step};
use noiseout::pruner::collect_activations;
use noiseout::{Matrix, Network, NoiseKind};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Train with pruning, write `model.nout`, `history.csv`, `prune_events.csv`
/// and `summary.json` into the output directory.
pub fn cmd_run(cfg: &Config) -> Result<Summary> {
    let seed = cfg.seed()?;
    let train = cfg.train_dataset()?;
    let test = cfg.test_dataset(&train)?;
    let nc = cfg.noise_config()?;
    let net = cfg.build_network(&train, &nc, seed)?;
    let tc = cfg.train_config(train.len())?;
    let steps_per_epoch = train.len().div_ceil(tc.batch_size);
    let pc = cfg.prune_config(steps_per_epoch)?;

    let hidden_initial = net.hidden_widths();
    let original_params = net.strip_noise_outputs().count_parameters();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (pruned, history) =
        noiseout::noiseout_train(net, &train.x, &train.y, &tc, &nc, &pc, &mut rng)?;

    let (train_accuracy, train_loss) = pruned.evaluate(&train.x, &train.y)?;
    let (test_accuracy, test_loss) = pruned.evaluate(&test.x, &test.y)?;
    let final_params = pruned.count_parameters();

    let out = cfg.out_dir();
    std::fs::create_dir_all(&out)?;
    pruned.save_model(&out.join("model.nout"))?;
    report::write_history_csv(&out.join("history.csv"), &history.iterations)?;
    report::write_events_csv(&out.join("prune_events.csv"), &history.events)?;

    let summary = Summary {
        seed,
        dataset: train.name.clone(),
        hidden_initial,
        hidden_final: pruned.hidden_widths(),
        original_params,
        final_params,
        removed_fraction: 1.0 - final_params as f64 / original_params as f64,
        compression_rate: original_params as f64 / final_params as f64,
        iterations: history.iterations.len(),
        prune_checks: history.checks.len(),
        merges_committed: history.events.iter().filter(|e| e.committed).count(),
        train_accuracy,
        train_loss,
        test_accuracy,
        test_loss,
        config: cfg.resolved().clone(),
    };
    report::write_summary_json(&out.join("summary.json"), &summary)?;
    println!(
        "{}: params {} -> {} ({:.1}% removed, {:.2}x), train acc {:.4}, test acc {:.4}",
        summary.dataset,
        summary.original_params,
        summary.final_params,
        100.0 * summary.removed_fraction,
        summary.compression_rate,
        summary.train_accuracy,
        summary.test_accuracy,
    );
    Ok(summary)
}

/// One `cmd_run` per threshold (same base seed), plus `sweep.csv`.
pub fn cmd_sweep(cfg: &Config, thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(UsageError("sweep needs at least one --threshold".into()).into());
    }
    let out = cfg.out_dir();
    let mut rows = Vec::new();
    for &t in thresholds {
        let mut sub = cfg.clone();
        sub.set("prune.accuracy_threshold", &format!("{t}"))?;
        sub.set("run.out", &out.join(format!("threshold-{t}")).to_string_lossy())?;
        let summary = cmd_run(&sub)?;
        rows.push(SweepRow {
            threshold: t,
            final_params: summary.final_params,
            train_acc: summary.train_accuracy,
            test_acc: summary.test_accuracy,
        });
    }
    report::write_sweep_csv(&out.join("sweep.csv"), &rows)
}

const CORRELATE_KINDS: [NoiseKind; 4] = [
    NoiseKind::None,
    NoiseKind::Gaussian,
    NoiseKind::Binomial,
    NoiseKind::Constant,
];

/// Track |r| of the probe pair (the first two neurons of the probe layer)
/// while training without pruning, once per noise kind and seed. Writes
/// `corr_mean.csv` and `corr_final.csv`.
pub fn cmd_correlate(cfg: &Config, runs: usize) -> Result<()> {
    if runs == 0 {
        return Err(UsageError("correlate needs at least one run".into()).into());
    }
    let train = cfg.train_dataset()?;
    let probe_layer = cfg.get_usize("correlate.probe_layer")?;
    let record_interval = cfg.get_usize("correlate.record_interval")?;
    if record_interval == 0 {
        return Err(UsageError("correlate.record_interval must be at least 1".into()).into());
    }
    let widths = cfg.hidden_widths()?;
    if probe_layer >= widths.len() || widths[probe_layer] < 2 {
        return Err(UsageError(format!(
            "correlate.probe_layer {probe_layer} needs width >= 2 in arch.hidden"
        ))
        .into());
    }
    let tc = cfg.train_config(train.len())?;
    let base_seed = cfg.seed()?;

    // iteration -> kind -> sum of |r| over runs; all runs share the grid.
    let mut sums: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
    let mut finals: Vec<(String, u64, f64)> = Vec::new();
    for kind in CORRELATE_KINDS {
        let nc = cfg.noise_config_of_kind(kind)?;
        for run in 0..runs {
            let seed = base_seed.wrapping_add(run as u64);
            let mut net = cfg.build_network(&train, &nc, seed)?;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let record = |step: usize, net: &Network, sums: &mut BTreeMap<_, _>| -> Result<f64> {
                let r = probe_abs_r(net, &train.x, probe_layer)?;
                *sums
                    .entry(step)
                    .or_insert_with(BTreeMap::new)
                    .entry(kind.name().to_string())
                    .or_insert(0.0) += r;
                Ok(r)
            };
            record(0, &net, &mut sums)?;
            let mut last_r = 0.0;
            let mut step = 0;
            'train: for epoch in 0u64.. {
                for (bx, by) in noiseout::data::batches(&train, tc.batch_size, seed, epoch) {
                    if step == tc.iterations {
                        break 'train;
                    }
                    let targets = if nc.kind != NoiseKind::None {
                        Some(generate_noise_targets(&nc, bx.rows(), &mut rng)?)
                    } else {
                        None
                    };
                    let trace = net.forward(&bx)?;
                    let grads = backward(&net, &trace, &by, targets.as_ref(), nc.loss_weight)?;
                    net = sgd_step(net, &grads, tc.learning_rate)?;
                    step += 1;
                    if step % record_interval == 0 || step == tc.iterations {
                        last_r = record(step, &net, &mut sums)?;
                    }
                }
            }
            finals.push((kind.name().to_string(), seed, last_r));
        }
    }

    let means: BTreeMap<usize, BTreeMap<String, f64>> = sums
        .into_iter()
        .map(|(step, by_kind)| {
            let by_kind = by_kind
                .into_iter()
                .map(|(k, sum)| (k, sum / runs as f64))
                .collect();
            (step, by_kind)
        })
        .collect();

    let out = cfg.out_dir();
    let kind_names: Vec<&str> = CORRELATE_KINDS.iter().map(|k| k.name()).collect();
    report::write_corr_mean_csv(&out.join("corr_mean.csv"), &kind_names, &means)?;
    report::write_corr_final_csv(&out.join("corr_final.csv"), &finals)
}

/// |Pearson r| between the first two neurons of `layer` over all of `x`.
fn probe_abs_r(net: &Network, x: &Matrix, layer: usize) -> Result<f64> {
    // Full-sample collection is deterministic; the rng goes unused.
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let acts = collect_activations(net, x, layer, x.rows(), &mut rng)?;
    let (corr, _) = noiseout::pruner::correlation_matrix(&acts)?;
    Ok(corr.get(0, 1).abs())
}

#[derive(Serialize)]
struct EvalReport {
    accuracy: f64,
    mean_loss: f64,
    parameters: usize,
}

/// Score a saved model on the configured dataset; JSON on stdout.
pub fn cmd_eval(model: &Path, cfg: &Config) -> Result<()> {
    let net = Network::load_model(model)
        .with_context(|| format!("loading model {}", model.display()))?;
    let ds = cfg.train_dataset()?;
    let (accuracy, mean_loss) = net.evaluate(&ds.x, &ds.y)?;
    let report = EvalReport {
        accuracy,
        mean_loss,
        parameters: net.count_parameters(),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct LayerReport {
    width: usize,
    activation: &'static str,
}

#[derive(Serialize)]
struct InspectReport {
    input_dim: usize,
    hidden: Vec<LayerReport>,
    task_outputs: usize,
    task_activation: &'static str,
    noise_outputs: Option<usize>,
    parameters: usize,
}

/// Describe a saved model file; JSON on stdout.
pub fn cmd_inspect(model: &Path) -> Result<()> {
    let net = Network::load_model(model)
        .with_context(|| format!("loading model {}", model.display()))?;
    let report = InspectReport {
        input_dim: net.input_dim(),
        hidden: net
            .hidden
            .iter()
            .map(|l| LayerReport {
                width: l.out_dim(),
                activation: l.activation.name(),
            })
            .collect(),
        task_outputs: net.task_head.out_dim(),
        task_activation: net.task_head.activation.name(),
        noise_outputs: net.noise_head.as_ref().map(|l| l.out_dim()),
        parameters: net.count_parameters(),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
