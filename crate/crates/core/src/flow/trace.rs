use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const TRACE_HEADER: &str = "t,E,V,VminusE,eta,hmin,hmax,wminus,wplus,mineig,residual,dt";

/// One accepted step. `dt` is the size of the step that produced the row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub energy: f64,
    pub volume: f64,
    pub lyapunov: f64,
    pub eta: f64,
    pub hmin: f64,
    pub hmax: f64,
    pub wminus: f64,
    pub wplus: f64,
    pub min_eigenvalue: f64,
    pub residual: f64,
    pub dt: f64,
}

impl TraceRow {
    fn fields(&self) -> [f64; 12] {
        [
            self.t,
            self.energy,
            self.volume,
            self.lyapunov,
            self.eta,
            self.hmin,
            self.hmax,
            self.wminus,
            self.wplus,
            self.min_eigenvalue,
            self.residual,
            self.dt,
        ]
    }
}

/// Rows in strictly increasing `t`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowTrace {
    rows: Vec<TraceRow>,
}

impl FlowTrace {
    pub(crate) fn push(&mut self, row: TraceRow) {
        debug_assert!(self.rows.last().is_none_or(|r| r.t < row.t));
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn first(&self) -> Option<&TraceRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends `other`, dropping rows not later than the current end.
    pub fn extend(&mut self, other: &FlowTrace) {
        let t_end = self.rows.last().map_or(f64::NEG_INFINITY, |r| r.t);
        self.rows.extend(other.rows.iter().filter(|r| r.t > t_end).copied());
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            let line: Vec<String> = r.fields().iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("trace output is ASCII")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }
}
