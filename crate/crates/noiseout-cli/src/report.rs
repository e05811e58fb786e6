//! CSV and JSON artifacts. Every writer builds the whole file in memory and
//! writes it once, so reruns with the same inputs are byte-identical.

use anyhow::{Context, Result};
use noiseout::pruner::IterationRecord;
use noiseout::PruneEvent;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Final report of one `run` invocation, also reused per sweep point.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub dataset: String,
    pub hidden_initial: Vec<usize>,
    pub hidden_final: Vec<usize>,
    pub original_params: usize,
    pub final_params: usize,
    pub removed_fraction: f64,
    pub compression_rate: f64,
    pub iterations: usize,
    pub prune_checks: usize,
    pub merges_committed: usize,
    pub train_accuracy: f64,
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub test_loss: f64,
    pub config: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub threshold: f64,
    pub final_params: usize,
    pub train_acc: f64,
    pub test_acc: f64,
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    write_file(path, &text)
}

pub fn write_history_csv(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut out = String::from("iteration,task_loss,noise_loss,train_acc,val_acc\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, r.task_loss, r.noise_loss, r.train_acc, r.val_acc
        )?;
    }
    write_file(path, &out)
}

pub fn write_events_csv(path: &Path, events: &[PruneEvent]) -> Result<()> {
    let mut out = String::from("step,layer,a,b,abs_r,alpha,beta,accuracy_after,committed\n");
    for e in events {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.step, e.layer, e.a, e.b, e.abs_r, e.alpha, e.beta, e.accuracy_after, e.committed
        )?;
    }
    write_file(path, &out)
}

/// Rows are written in descending threshold order: reading down the file
/// follows the loosening gate.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.threshold.total_cmp(&a.threshold));
    let mut out = String::from("threshold,final_params,train_acc,test_acc\n");
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{}",
            r.threshold, r.final_params, r.train_acc, r.test_acc
        )?;
    }
    write_file(path, &out)
}

/// `series` maps iteration -> (kind name -> mean |r|); kinds come out in the
/// caller's declared order.
pub fn write_corr_mean_csv(
    path: &Path,
    kinds: &[&str],
    series: &BTreeMap<usize, BTreeMap<String, f64>>,
) -> Result<()> {
    let mut out = String::from("iteration,kind,mean_abs_r\n");
    for (iteration, by_kind) in series {
        for &kind in kinds {
            if let Some(r) = by_kind.get(kind) {
                writeln!(out, "{iteration},{kind},{r}")?;
            }
        }
    }
    write_file(path, &out)
}

pub fn write_corr_final_csv(path: &Path, rows: &[(String, u64, f64)]) -> Result<()> {
    let mut out = String::from("kind,seed,final_abs_r\n");
    for (kind, seed, r) in rows {
        writeln!(out, "{kind},{seed},{r}")?;
    }
    write_file(path, &out)
}
