use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{evaluate_examples, metrics, train_examples, ConfusionMatrix, Example, MetricsReport, TrainConfig};
use super::{TrainOutcome, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::models::ModelKind;

/// Results for one successfully trained model.
#[derive(Clone, Debug)]
pub struct BenchmarkRow {
    pub test: ConfusionMatrix,
    pub test_metrics: MetricsReport,
    pub train: ConfusionMatrix,
    pub train_metrics: MetricsReport,
    pub outcome: TrainOutcome,
}

#[derive(Debug)]
pub struct BenchmarkRun {
    pub config: TrainConfig,
    pub result: Result<BenchmarkRow>,
}

#[derive(Debug)]
pub struct BenchmarkReport {
    pub runs: Vec<BenchmarkRun>,
}

/// One line of the machine-readable benchmark output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RunRecord {
    Ok {
        kind: ModelKind,
        tp: u64,
        fp: u64,
        tn: u64,
        #[serde(rename = "fn")]
        fn_: u64,
        se: f64,
        sp: f64,
        acc: f64,
        mcc: f64,
        seed: u64,
        train_acc: f64,
        final_loss: f64,
    },
    Failed {
        kind: ModelKind,
        seed: u64,
        error: String,
    },
}

/// Trains and evaluates each configuration on the same examples. A failing
/// model is reported in its row and does not stop the others.
pub fn benchmark(
    train: &[Example],
    test: &[Example],
    configs: &[TrainConfig],
    mut on_epoch: impl FnMut(ModelKind, usize, f64),
) -> BenchmarkReport {
    let runs = configs
        .iter()
        .map(|cfg| {
            let result = (|| {
                let outcome = train_examples(train, cfg, |e, l| on_epoch(cfg.kind, e, l))?;
                let test_cm = evaluate_examples(&outcome.model, test, DEFAULT_THRESHOLD)?;
                let train_cm = evaluate_examples(&outcome.model, train, DEFAULT_THRESHOLD)?;
                Ok(BenchmarkRow {
                    test: test_cm,
                    test_metrics: metrics(&test_cm)?,
                    train: train_cm,
                    train_metrics: metrics(&train_cm)?,
                    outcome,
                })
            })();
            BenchmarkRun { config: *cfg, result }
        })
        .collect();
    BenchmarkReport { runs }
}

impl BenchmarkRun {
    pub fn record(&self) -> RunRecord {
        let (kind, seed) = (self.config.kind, self.config.seed);
        match &self.result {
            Ok(row) => RunRecord::Ok {
                kind,
                tp: row.test.tp,
                fp: row.test.fp,
                tn: row.test.tn,
                fn_: row.test.fn_,
                se: row.test_metrics.sensitivity,
                sp: row.test_metrics.specificity,
                acc: row.test_metrics.accuracy,
                mcc: row.test_metrics.mcc,
                seed,
                train_acc: row.train_metrics.accuracy,
                final_loss: row.outcome.meta.final_loss,
            },
            Err(e) => RunRecord::Failed { kind, seed, error: e.to_string() },
        }
    }
}

impl BenchmarkReport {
    /// Line-delimited JSON, one record per model.
    pub fn records_jsonl(&self) -> String {
        self.runs
            .iter()
            .map(|r| serde_json::to_string(&r.record()).expect("records serialize") + "\n")
            .collect()
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<6} {:>4} {:>4} {:>4} {:>4} {:>6} {:>6} {:>6} {:>7} {:>9}\n",
            "model", "tp", "fp", "tn", "fn", "se", "sp", "acc", "mcc", "train_acc"
        );
        for run in &self.runs {
            let _ = match &run.result {
                Ok(r) => writeln!(
                    out,
                    "{:<6} {:>4} {:>4} {:>4} {:>4} {:>6.3} {:>6.3} {:>6.3} {:>7.3} {:>9.3}",
                    run.config.kind.name(),
                    r.test.tp,
                    r.test.fp,
                    r.test.tn,
                    r.test.fn_,
                    r.test_metrics.sensitivity,
                    r.test_metrics.specificity,
                    r.test_metrics.accuracy,
                    r.test_metrics.mcc,
                    r.train_metrics.accuracy,
                ),
                Err(e) => writeln!(out, "{:<6} failed: {e}", run.config.kind.name()),
            };
        }
        out
    }

    pub fn first_error(&self) -> Option<&Error> {
        self.runs.iter().find_map(|r| r.result.as_ref().err())
    }
}
