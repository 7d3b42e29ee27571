use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::{CvConfig, FoldReport};
use super::metrics::{ConfusionMatrix, MetricSet};
use super::profile::{MemoryMethod, Measurement};
use super::roc::RocCurve;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub fingerprint: String,
    pub rows: usize,
    pub dim: usize,
    pub positives: usize,
}

/// Mean and population standard deviation over the folds where a metric is
/// defined. `n` counts those folds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

impl MeanStd {
    pub fn from_values(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let xs: Vec<f64> = values.into_iter().flatten().collect();
        if xs.is_empty() {
            return Self::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean: Some(mean), std: Some(var.sqrt()), n: xs.len() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub auc: MeanStd,
}

impl MetricSummary {
    pub fn from_folds<'a>(folds: impl IntoIterator<Item = &'a MetricSet>) -> Self {
        let sets: Vec<&MetricSet> = folds.into_iter().collect();
        let col = |k: usize| MeanStd::from_values(sets.iter().map(|m| m.values()[k]));
        Self { accuracy: col(0), precision: col(1), recall: col(2), f1: col(3), auc: col(4) }
    }

    pub fn values(&self) -> [MeanStd; 5] {
        [self.accuracy, self.precision, self.recall, self.f1, self.auc]
    }
}

/// Metrics over all folds' validation predictions taken together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pooled {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub roc: RocCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub dataset: DatasetInfo,
    pub config: CvConfig,
    pub memory_method: MemoryMethod,
    pub fold_mean: MetricSummary,
    pub pooled: Pooled,
    pub folds: Vec<FoldReport>,
}

impl RunReport {
    /// Copy with every timing and memory field cleared, for comparing runs.
    pub fn strip_measurements(&self) -> Self {
        let mut out = self.clone();
        for fold in &mut out.folds {
            fold.timings.train = Measurement::default();
            fold.timings.inference = Measurement::default();
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("report: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Metric table with fold mean ± std and pooled values.
    pub fn headline(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>18} {:>10}", "metric", "mean ± std", "pooled");
        for ((name, summary), pooled) in
            MetricSet::NAMES.iter().zip(self.fold_mean.values()).zip(self.pooled.metrics.values())
        {
            let ms = match (summary.mean, summary.std) {
                (Some(m), Some(s)) => format!("{m:.4} ± {s:.4}"),
                _ => "undefined".to_owned(),
            };
            let _ = writeln!(out, "{name:<10} {ms:>18} {:>10}", fmt_opt(pooled));
        }
        let c = &self.pooled.confusion;
        let _ = writeln!(out, "confusion  TN={} FP={} FN={} TP={}", c.tn, c.fp, c.fn_, c.tp);
        out
    }

    /// Writes `report.json` and the companion CSVs into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()? + "\n")?;
        self.write_roc_csv(std::fs::File::create(dir.join("roc_points.csv"))?)?;
        self.write_fold_metrics_csv(std::fs::File::create(dir.join("fold_metrics.csv"))?)?;
        self.write_confusion_csv(std::fs::File::create(dir.join("confusion.csv"))?)?;
        self.write_timings_csv(std::fs::File::create(dir.join("timings.csv"))?)?;
        self.write_loss_csv(std::fs::File::create(dir.join("loss_trace.csv"))?)?;
        Ok(())
    }

    pub fn write_roc_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["threshold", "fpr", "tpr"])?;
        for p in &self.pooled.roc.points {
            let t = p.threshold.map_or_else(|| "inf".to_owned(), |t| t.to_string());
            out.write_record([t, p.fpr.to_string(), p.tpr.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_fold_metrics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["fold"];
        header.extend(MetricSet::NAMES);
        out.write_record(&header)?;
        for f in &self.folds {
            let mut row = vec![f.fold.to_string()];
            row.extend(f.metrics.values().iter().map(|v| fmt_csv(*v)));
            out.write_record(&row)?;
        }
        for (label, pick) in [("mean", 0), ("std", 1)] {
            let mut row = vec![label.to_owned()];
            row.extend(self.fold_mean.values().iter().map(|m| fmt_csv(if pick == 0 { m.mean } else { m.std })));
            out.write_record(&row)?;
        }
        let mut row = vec!["pooled".to_owned()];
        row.extend(self.pooled.metrics.values().iter().map(|v| fmt_csv(*v)));
        out.write_record(&row)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_confusion_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["fold", "tp", "tn", "fp", "fn"])?;
        let rows = self.folds.iter().map(|f| (f.fold.to_string(), f.confusion));
        for (name, c) in rows.chain(std::iter::once(("total".to_owned(), self.pooled.confusion))) {
            out.write_record([name, c.tp.to_string(), c.tn.to_string(), c.fp.to_string(), c.fn_.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_timings_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["fold", "train_s", "inference_s", "train_peak_bytes", "inference_peak_bytes", "memory_method"])?;
        let method = serde_json::to_value(self.memory_method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        for f in &self.folds {
            let t = &f.timings;
            out.write_record([
                f.fold.to_string(),
                t.train.seconds.to_string(),
                t.inference.seconds.to_string(),
                t.train.peak_bytes.map_or_else(String::new, |b| b.to_string()),
                t.inference.peak_bytes.map_or_else(String::new, |b| b.to_string()),
                method.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_loss_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["fold", "epoch", "mean_loss", "lr"])?;
        for f in &self.folds {
            for e in &f.loss_trace {
                out.write_record([f.fold.to_string(), e.epoch.to_string(), e.mean_loss.to_string(), e.lr.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_owned(), |x| format!("{x:.4}"))
}

fn fmt_csv(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One metric compared between two runs. `scope` is a fold index, `mean`
/// (fold average) or `pooled`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub scope: String,
    pub metric: String,
    pub baseline: Option<f64>,
    pub candidate: Option<f64>,
    pub delta: Option<f64>,
}

/// Metric deltas (candidate minus baseline) per fold, for the fold mean and
/// for the pooled predictions. Refuses reports built from different data.
pub fn compare_reports(baseline: &RunReport, candidate: &RunReport) -> Result<Vec<DeltaRow>> {
    if baseline.dataset.fingerprint != candidate.dataset.fingerprint {
        return Err(Error::Format(format!(
            "reports were produced from different datasets (fingerprints {} and {})",
            baseline.dataset.fingerprint, candidate.dataset.fingerprint
        )));
    }
    if baseline.folds.len() != candidate.folds.len() {
        return Err(Error::Format(format!(
            "fold counts differ: {} vs {}",
            baseline.folds.len(),
            candidate.folds.len()
        )));
    }
    let mut rows = Vec::new();
    let mut push = |scope: String, b: [Option<f64>; 5], c: [Option<f64>; 5]| {
        for (k, name) in MetricSet::NAMES.iter().enumerate() {
            let delta = match (b[k], c[k]) {
                (Some(x), Some(y)) => Some(y - x),
                _ => None,
            };
            rows.push(DeltaRow {
                scope: scope.clone(),
                metric: (*name).to_owned(),
                baseline: b[k],
                candidate: c[k],
                delta,
            });
        }
    };
    for (b, c) in baseline.folds.iter().zip(&candidate.folds) {
        push(b.fold.to_string(), b.metrics.values(), c.metrics.values());
    }
    let means = |s: &MetricSummary| s.values().map(|m| m.mean);
    push("mean".into(), means(&baseline.fold_mean), means(&candidate.fold_mean));
    push("pooled".into(), baseline.pooled.metrics.values(), candidate.pooled.metrics.values());
    Ok(rows)
}

pub fn render_comparison(rows: &[DeltaRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<7} {:<10} {:>10} {:>10} {:>10}", "scope", "metric", "baseline", "candidate", "delta");
    for r in rows {
        let delta = r.delta.map_or_else(|| "undefined".to_owned(), |d| format!("{d:+.4}"));
        let _ = writeln!(
            out,
            "{:<7} {:<10} {:>10} {:>10} {:>10}",
            r.scope,
            r.metric,
            fmt_opt(r.baseline),
            fmt_opt(r.candidate),
            delta
        );
    }
    out
}

pub fn write_comparison_csv<W: Write>(rows: &[DeltaRow], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["scope", "metric", "baseline", "candidate", "delta"])?;
    for r in rows {
        out.write_record([r.scope.clone(), r.metric.clone(), fmt_csv(r.baseline), fmt_csv(r.candidate), fmt_csv(r.delta)])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_is_population() {
        let m = MeanStd::from_values([Some(1.0), Some(3.0), None]);
        assert_eq!(m.mean, Some(2.0));
        assert_eq!(m.std, Some(1.0));
        assert_eq!(m.n, 2);
    }

    #[test]
    fn all_undefined_gives_none() {
        let m = MeanStd::from_values([None, None]);
        assert_eq!(m.mean, None);
        assert_eq!(m.n, 0);
    }
}
