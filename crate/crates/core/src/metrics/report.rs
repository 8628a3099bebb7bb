use std::fmt::Write as _;

use super::auc::roc_auc;
use super::correlation::{corr_matrix, CorrelationMatrix};
use super::prediction::{LabelSet, PredictionSet};
use crate::error::Result;

pub const HISTOGRAM_BINS: usize = 20;

/// Count of scores in each of 20 equal-width bins over `[0, 1]`; a score of
/// exactly 1 falls in the last bin.
pub fn score_histogram(scores: &[f64]) -> [usize; HISTOGRAM_BINS] {
    let mut bins = [0; HISTOGRAM_BINS];
    for &s in scores {
        let b = ((s * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

/// Side-by-side view of several models' predictions: accuracy (when labels
/// are known), pairwise correlation and score distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct DiversityReport {
    pub names: Vec<String>,
    pub sizes: Vec<usize>,
    pub aucs: Option<Vec<f64>>,
    pub correlation: CorrelationMatrix,
    pub histograms: Vec<[usize; HISTOGRAM_BINS]>,
}

pub fn diversity_report(
    sets: &[PredictionSet],
    labels: Option<&LabelSet>,
) -> Result<DiversityReport> {
    let correlation = corr_matrix(sets)?;
    let aucs = labels
        .map(|l| {
            sets.iter()
                .map(|s| roc_auc(s, l))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(DiversityReport {
        names: sets.iter().map(|s| s.name().to_string()).collect(),
        sizes: sets.iter().map(PredictionSet::len).collect(),
        aucs,
        correlation,
        histograms: sets.iter().map(|s| score_histogram(s.scores())).collect(),
    })
}

fn bin_label(i: usize) -> String {
    let w = 1.0 / HISTOGRAM_BINS as f64;
    format!("{:.2}-{:.2}", i as f64 * w, (i + 1) as f64 * w)
}

impl DiversityReport {
    /// Plain-text rendering with one block per section.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let width = self.names.iter().map(String::len).max().unwrap_or(0).max(8);
        writeln!(out, "models: {}", self.names.len()).unwrap();
        writeln!(out, "shared pairs: {}", self.correlation.support).unwrap();

        out.push_str("\n== per-model summary ==\n");
        write!(out, "{:<width$}  {:>8}", "model", "pairs").unwrap();
        if self.aucs.is_some() {
            write!(out, "  {:>8}", "auc").unwrap();
        }
        writeln!(out, "  {:>9}", "mean_corr").unwrap();
        let mean_corr = self.correlation.mean_off_diagonal();
        for (i, name) in self.names.iter().enumerate() {
            write!(out, "{name:<width$}  {:>8}", self.sizes[i]).unwrap();
            if let Some(aucs) = &self.aucs {
                write!(out, "  {:>8.6}", aucs[i]).unwrap();
            }
            writeln!(out, "  {:>9.6}", mean_corr[i]).unwrap();
        }
        if let Some(i) = self.correlation.least_correlated() {
            writeln!(out, "least correlated: {}", self.names[i]).unwrap();
        }

        out.push_str("\n== correlation matrix (pearson) ==\n");
        out.push_str(&matrix_text(&self.correlation));

        out.push_str("\n== score histogram (20 bins over [0,1]) ==\n");
        write!(out, "{:<11}", "bin").unwrap();
        for name in &self.names {
            write!(out, "  {name:>width$}").unwrap();
        }
        out.push('\n');
        for b in 0..HISTOGRAM_BINS {
            write!(out, "{:<11}", bin_label(b)).unwrap();
            for h in &self.histograms {
                write!(out, "  {:>width$}", h[b]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Long-form CSV: `section,model,key,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,model,key,value\n");
        let mean_corr = self.correlation.mean_off_diagonal();
        for (i, name) in self.names.iter().enumerate() {
            writeln!(out, "summary,{name},pairs,{}", self.sizes[i]).unwrap();
            if let Some(aucs) = &self.aucs {
                writeln!(out, "summary,{name},auc,{:.6}", aucs[i]).unwrap();
            }
            writeln!(out, "summary,{name},mean_corr,{:.6}", mean_corr[i]).unwrap();
        }
        for (i, name) in self.names.iter().enumerate() {
            for (j, other) in self.names.iter().enumerate() {
                writeln!(
                    out,
                    "correlation,{name},{other},{:.6}",
                    self.correlation.values[i][j]
                )
                .unwrap();
            }
        }
        for (name, h) in self.names.iter().zip(&self.histograms) {
            for (b, count) in h.iter().enumerate() {
                writeln!(out, "histogram,{name},{},{count}", bin_label(b)).unwrap();
            }
        }
        out
    }
}

/// Square matrix with row and column headers plus a mean off-diagonal column.
pub fn matrix_text(m: &CorrelationMatrix) -> String {
    let width = m.names.iter().map(String::len).max().unwrap_or(0).max(9);
    let mut out = String::new();
    write!(out, "{:<width$}", "").unwrap();
    for n in &m.names {
        write!(out, "  {n:>width$}").unwrap();
    }
    writeln!(out, "  {:>width$}", "mean_off").unwrap();
    for ((name, row), mean) in m.names.iter().zip(&m.values).zip(m.mean_off_diagonal()) {
        write!(out, "{name:<width$}").unwrap();
        for v in row {
            write!(out, "  {v:>width$.6}").unwrap();
        }
        writeln!(out, "  {mean:>width$.6}").unwrap();
    }
    out
}

/// Matrix as CSV with a header row of model names and a trailing
/// `mean_off_diagonal` column.
pub fn matrix_csv(m: &CorrelationMatrix) -> String {
    let mut out = String::from("model");
    for n in &m.names {
        write!(out, ",{n}").unwrap();
    }
    out.push_str(",mean_off_diagonal\n");
    for ((name, row), mean) in m.names.iter().zip(&m.values).zip(m.mean_off_diagonal()) {
        out.push_str(name);
        for v in row {
            write!(out, ",{v:.6}").unwrap();
        }
        writeln!(out, ",{mean:.6}").unwrap();
    }
    out
}
