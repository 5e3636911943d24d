//! Line-delimited trace files.
//!
//! Line 1 carries the run metadata; every following line is one logged
//! iteration with a fixed key order. Reals are rendered as shortest
//! round-trip decimals, so identical runs produce byte-identical files.

use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use rame::core::{StepRecord, Trace, TraceMeta};

#[derive(Serialize)]
struct MetaLineRef<'a> {
    meta: &'a TraceMeta,
}

#[derive(Deserialize)]
struct MetaLine {
    meta: TraceMeta,
}

/// One serialized iteration. Vector-valued fields appear only when the trace
/// was written with full state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceLine {
    pub t: u64,
    pub loss: f64,
    pub grad_l2: f64,
    pub grad_linf: f64,
    pub step_l2: f64,
    pub alpha: f64,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
}

impl TraceLine {
    fn from_record(record: &StepRecord, full_state: bool) -> Self {
        Self {
            t: record.t,
            loss: record.loss,
            grad_l2: record.grad_l2,
            grad_linf: record.grad_linf,
            step_l2: record.step_l2,
            alpha: record.alpha_used,
            eta: record.eta_used,
            val_acc: record.val_metric,
            x: full_state.then(|| record.x_after.clone()),
            g: full_state.then(|| record.g.clone()),
            m: full_state.then(|| record.m.clone()),
            v: if full_state { record.v.clone() } else { None },
        }
    }
}

pub fn write_trace(path: &Path, trace: &Trace, full_state: bool) -> anyhow::Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("cannot create trace file {}", path.display()))?;
    let mut out = std::io::BufWriter::new(file);
    serde_json::to_writer(&mut out, &MetaLineRef { meta: &trace.meta })?;
    out.write_all(b"\n")?;
    for record in trace.records() {
        serde_json::to_writer(&mut out, &TraceLine::from_record(record, full_state))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> anyhow::Result<(TraceMeta, Vec<TraceLine>)> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open trace file {}", path.display()))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => bail!("trace file {} is empty", path.display()),
    };
    let meta: MetaLine = serde_json::from_str(&header)
        .with_context(|| format!("trace file {} has no metadata line", path.display()))?;
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok((meta.meta, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rame::core::{ParamVector, RngHandle};
    use rame::optimizers::{run_optimizer, Method, RunSettings, Schedule};
    use rame::problems::make_pseudo_huber;

    fn small_trace() -> Trace {
        let p = make_pseudo_huber(2).unwrap();
        let method = Method::Shb {
            schedule: Schedule::constant(0.1, 0.9, 1.0).unwrap(),
        };
        run_optimizer(
            &p,
            &ParamVector::new(vec![1.0, -2.0]).unwrap(),
            &method,
            &RunSettings::new(5),
            &RngHandle::new(3, "io-test"),
        )
        .unwrap()
    }

    #[test]
    fn write_then_read_back() {
        let trace = small_trace();
        let dir = std::env::temp_dir().join("rame-trace-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.jsonl");
        write_trace(&path, &trace, false).unwrap();
        let (meta, lines) = read_trace(&path).unwrap();
        assert_eq!(meta, trace.meta);
        assert_eq!(lines.len(), trace.len());
        assert_eq!(lines[0].t, 1);
        assert!(lines[0].x.is_none());

        write_trace(&path, &trace, true).unwrap();
        let (_, lines) = read_trace(&path).unwrap();
        assert!(lines[0].x.is_some());
        assert_eq!(lines[0].m.as_ref().unwrap().len(), 2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn key_order_is_stable() {
        let trace = small_trace();
        let dir = std::env::temp_dir().join("rame-trace-io-order");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.jsonl");
        write_trace(&path, &trace, false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let second_line = text.lines().nth(1).unwrap();
        assert!(second_line.starts_with("{\"t\":1,\"loss\":"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
