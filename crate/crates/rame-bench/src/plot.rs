//! Columnar plot-data emission: one row per logged iteration, one column per
//! trace, tab-separated with a '#'-prefixed header of run labels.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::trace_io::{read_trace, TraceLine};
use rame::core::TraceMeta;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Loss,
    GradL2,
    ValMetric,
}

impl Metric {
    pub fn parse(name: &str) -> rame::Result<Self> {
        match name {
            "loss" => Ok(Metric::Loss),
            "grad_l2" => Ok(Metric::GradL2),
            "val_metric" => Ok(Metric::ValMetric),
            other => Err(rame::Error::config(format!(
                "unknown metric '{other}' (expected loss, grad_l2 or val_metric)"
            ))),
        }
    }

    fn extract(&self, line: &TraceLine) -> Option<f64> {
        match self {
            Metric::Loss => Some(line.loss),
            Metric::GradL2 => Some(line.grad_l2),
            Metric::ValMetric => line.val_acc,
        }
    }
}

fn label(meta: &TraceMeta) -> String {
    let alpha = meta
        .params
        .get("alpha")
        .cloned()
        .unwrap_or_else(|| "-".to_string());
    format!("{}:{}@a={}", meta.optimizer, meta.problem, alpha)
}

/// Merge traces column-wise into `out`. Shorter traces are padded with
/// blanks (with a warning on stderr); the first column is the iteration
/// index of the longest trace.
pub fn emit_plot_data(trace_paths: &[PathBuf], metric: Metric, out: &Path) -> anyhow::Result<()> {
    if trace_paths.is_empty() {
        return Err(rame::Error::config("plot-data needs at least one trace").into());
    }
    let mut labels = Vec::new();
    let mut columns: Vec<Vec<TraceLine>> = Vec::new();
    for path in trace_paths {
        let (meta, lines) = read_trace(path)?;
        labels.push(label(&meta));
        columns.push(lines);
    }
    let rows = columns.iter().map(|c| c.len()).max().unwrap_or(0);
    if columns.iter().any(|c| c.len() != rows) {
        eprintln!("warning: traces have differing lengths; padding short columns with blanks");
    }
    let t_column = columns
        .iter()
        .max_by_key(|c| c.len())
        .expect("at least one trace");

    let file = std::fs::File::create(out)
        .with_context(|| format!("cannot create plot file {}", out.display()))?;
    let mut w = std::io::BufWriter::new(file);
    write!(w, "#t")?;
    for l in &labels {
        write!(w, "\t{l}")?;
    }
    writeln!(w)?;
    for row in 0..rows {
        write!(w, "{}", t_column[row].t)?;
        for column in &columns {
            match column.get(row).and_then(|line| metric.extract(line)) {
                Some(value) => write!(w, "\t{value}")?,
                None => write!(w, "\t")?,
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
