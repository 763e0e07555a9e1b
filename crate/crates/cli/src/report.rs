//! CSV and JSON writers. Every output starts with the program version.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use hfbgeo::checks::{CheckSummary, Sweep};
use serde::Serialize;

use crate::Failure;

pub const VERSION: &str = concat!("hfbgeo ", env!("CARGO_PKG_VERSION"));

fn open(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match out {
        None => Ok(Box::new(io::stdout())),
        Some(p) => File::create(p)
            .map(|f| Box::new(f) as Box<dyn Write>)
            .map_err(|e| Failure::Config(format!("cannot create {}: {e}", p.display()))),
    }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes. Independent of locale.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

struct CsvOut {
    w: csv::Writer<Box<dyn Write>>,
}

impl CsvOut {
    fn new(out: Option<&Path>, header: &str, columns: &[String]) -> Result<Self, Failure> {
        let mut raw = open(out)?;
        writeln!(raw, "# {VERSION} {header}").map_err(io_failure)?;
        let mut w = csv::Writer::from_writer(raw);
        w.write_record(columns).map_err(io_failure)?;
        w.flush().map_err(io_failure)?;
        Ok(Self { w })
    }

    fn row(&mut self, fields: Vec<String>) -> Result<(), Failure> {
        self.w.write_record(&fields).map_err(io_failure)?;
        self.w.flush().map_err(io_failure)
    }
}

/// One row per trial: index, trial seed, the sweep's columns and the error
/// message of a trial that failed outright.
pub fn write_sweep(out: Option<&Path>, header: &str, sweep: &Sweep) -> Result<(), Failure> {
    let mut columns = vec!["trial".to_string(), "seed".to_string()];
    columns.extend(sweep.columns.iter().cloned());
    columns.push("error".into());
    let mut csv = CsvOut::new(out, header, &columns)?;
    for r in &sweep.rows {
        let mut fields = vec![r.trial.to_string(), r.seed.to_string()];
        fields.extend(r.values.iter().map(|&x| fmt_f64(x)));
        fields.push(r.error.clone().unwrap_or_default());
        csv.row(fields)?;
    }
    Ok(())
}

pub fn write_summary_table(out: Option<&Path>, header: &str, summaries: &[CheckSummary]) -> Result<(), Failure> {
    let columns: Vec<String> =
        ["check", "trials", "max_residual", "tolerance", "passed", "worst_seed"].map(String::from).into();
    let mut csv = CsvOut::new(out, header, &columns)?;
    for s in summaries {
        csv.row(vec![
            s.check.clone(),
            s.trials.to_string(),
            fmt_f64(s.max_residual),
            fmt_f64(s.tolerance),
            if s.passed { "pass" } else { "fail" }.into(),
            s.worst_seed.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    version: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(out: Option<&Path>, body: &T) -> Result<(), Failure> {
    let mut w = open(out)?;
    serde_json::to_writer_pretty(&mut w, &Versioned { version: VERSION, body }).map_err(io_failure)?;
    writeln!(w).map_err(io_failure)?;
    w.flush().map_err(io_failure)
}

/// Print one line per summary to stderr (failures only unless `verbose`)
/// and report whether all passed. Failures name the check, the worst
/// trial's seed and the run seed.
pub fn report(summaries: &[CheckSummary], sweep: Option<&Sweep>, run_seed: u64, verbose: bool) -> bool {
    let mut ok = true;
    for s in summaries {
        if s.passed {
            if !verbose {
                continue;
            }
            eprintln!("PASS {}: max {} (tol {})", s.check, fmt_f64(s.max_residual), fmt_f64(s.tolerance));
        } else {
            ok = false;
            let seed = s.worst_seed.map(|x| format!("; trial seed {x}")).unwrap_or_default();
            eprintln!(
                "FAIL {}: max {} exceeds tol {}{seed} (run seed {run_seed})",
                s.check,
                fmt_f64(s.max_residual),
                fmt_f64(s.tolerance)
            );
        }
    }
    if !verbose {
        let passed = summaries.iter().filter(|s| s.passed).count();
        eprintln!("{passed} of {} checks passed", summaries.len());
    }
    if let Some(sw) = sweep {
        for r in sw.rows.iter().filter(|r| r.error.is_some()).take(5) {
            eprintln!("trial {} (seed {}) failed: {}", r.trial, r.seed, r.error.as_deref().unwrap_or(""));
        }
    }
    ok
}
