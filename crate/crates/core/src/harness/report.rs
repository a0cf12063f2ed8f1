//! Experiment reports and their frozen CSV layout.

use std::fmt::Write as _;
use std::path::Path;

use super::config::Scenario;
use crate::error::{Error, Result};

pub const SCHEMA_LINE: &str = "schema=1";
pub const LEVEL_COLUMNS: &str = "level,r,h,sup_grad_inner,affine_dev,energy,v_min,newton_iters,status";
pub const ANGLE_COLUMNS: &str = "n,theta,in_U,threshold,margin,C_theta,script_B";

/// One solved level.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub level: usize,
    pub r: f64,
    pub h: f64,
    pub sup_grad_inner: f64,
    pub affine_dev: f64,
    pub energy: f64,
    pub v_min: f64,
    pub newton_iters: usize,
    pub status: String,
}

/// Fitted constants of the gradient bound `exp(C1 + C2 t + C3 t^2) / (1 - |cos|)`, `t = M / r`.
#[derive(Clone, Debug, PartialEq)]
pub struct FitSummary {
    pub c: [f64; 3],
    /// The samples did not determine all three constants; only `C1` was fitted.
    pub degenerate: bool,
    /// Largest least-squares residual before `C1` was shifted to make the bound an envelope.
    pub max_residual: f64,
    /// `|C(h) - C(h/2)| / |C(h/2)|`.
    pub stability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub rows: Vec<ReportRow>,
    /// Scenario-specific scalar per row (conormal residual, stationarity slope, ...).
    pub diagnostics: Vec<f64>,
    pub fit: Option<FitSummary>,
    /// Failed checks; empty when the experiment's assertions hold.
    pub violations: Vec<String>,
}

impl ExperimentReport {
    pub fn new(scenario: Scenario) -> Self {
        ExperimentReport { scenario, rows: Vec::new(), diagnostics: Vec::new(), fit: None, violations: Vec::new() }
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.status == "converged")
    }

    pub fn to_csv(&self) -> String {
        let rows = self.rows.iter().map(|r| {
            vec![
                r.level.to_string(),
                r.r.to_string(),
                r.h.to_string(),
                r.sup_grad_inner.to_string(),
                r.affine_dev.to_string(),
                r.energy.to_string(),
                r.v_min.to_string(),
                r.newton_iters.to_string(),
                r.status.clone(),
            ]
        });
        write_csv(LEVEL_COLUMNS, rows)
    }

    pub fn summary(&self) -> String {
        let mut out = format!("scenario {}: {} level(s)\n", self.scenario, self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(
                out,
                "  level {} r={} h={} sup|Du|={:.6e} dev={:.3e} v_min={:.6} iters={} {}",
                r.level, r.r, r.h, r.sup_grad_inner, r.affine_dev, r.v_min, r.newton_iters, r.status
            );
            if let Some(d) = self.diagnostics.get(i) {
                let _ = write!(out, " diag={d:.3e}");
            }
            out.push('\n');
        }
        if let Some(fit) = &self.fit {
            let _ = writeln!(
                out,
                "  fit C=({:.4}, {:.4}, {:.4}){} residual={:.3e} stability={:.3}",
                fit.c[0],
                fit.c[1],
                fit.c[2],
                if fit.degenerate { " [degenerate: C1 only]" } else { "" },
                fit.max_residual,
                fit.stability
            );
        }
        for v in &self.violations {
            let _ = writeln!(out, "  VIOLATION: {v}");
        }
        out
    }
}

/// A row of the admissible-angle table.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleRow {
    pub n: usize,
    pub theta: f64,
    pub in_u: bool,
    pub threshold: f64,
    pub margin: f64,
    pub c_theta: f64,
    /// Lower bound of the coefficient chain at the chosen `eps0` (or at `eps0 = 0` if none exists).
    pub script_b: f64,
}

pub fn angle_rows_to_csv(rows: &[AngleRow]) -> String {
    let records = rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            r.theta.to_string(),
            r.in_u.to_string(),
            r.threshold.to_string(),
            r.margin.to_string(),
            r.c_theta.to_string(),
            r.script_b.to_string(),
        ]
    });
    write_csv(ANGLE_COLUMNS, records)
}

/// The schema line, the header, then one record per row.
fn write_csv(columns: &str, rows: impl Iterator<Item = Vec<String>>) -> String {
    let bytes = try_write_csv(columns, rows).expect("writing CSV to memory cannot fail");
    String::from_utf8(bytes).expect("CSV fields are ASCII")
}

fn try_write_csv(columns: &str, rows: impl Iterator<Item = Vec<String>>) -> csv::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([SCHEMA_LINE])?;
    w.write_record(columns.split(','))?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// A CSV produced by this crate, read back for summarizing.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |e: csv::Error| Error::Config(format!("malformed CSV: {e}"));
        let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
        let mut records = reader.records();
        let mut next = || records.next().transpose().map_err(bad);
        match next()? {
            Some(r) if r.len() == 1 && &r[0] == SCHEMA_LINE => {}
            _ => return Err(Error::Config(format!("missing `{SCHEMA_LINE}` header"))),
        }
        let header = next()?.ok_or_else(|| Error::Config("missing column header".into()))?;
        let columns: Vec<String> = header.iter().map(str::to_owned).collect();
        let joined = columns.join(",");
        if joined != LEVEL_COLUMNS && joined != ANGLE_COLUMNS {
            return Err(Error::Config(format!("unrecognized columns `{joined}`")));
        }
        let mut rows = Vec::new();
        while let Some(record) = next()? {
            if record.len() != columns.len() {
                return Err(Error::Config(format!(
                    "row {} has {} cells, expected {}",
                    rows.len() + 1,
                    record.len(),
                    columns.len()
                )));
            }
            rows.push(record.iter().map(str::to_owned).collect());
        }
        Ok(CsvTable { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}
