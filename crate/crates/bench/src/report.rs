use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::experiment::{DiagnosticRow, ExperimentOutput, GapRecord, RunRecord};

pub const CSV_HEADER: &str = "function,method,seed,gap,y_first,y_best,y_opt,budget,wall_time_s";

/// Where the histories and diagnostics of a CSV at `csv` are written.
pub fn companion_paths(csv: &Path) -> (PathBuf, PathBuf) {
    (csv.with_extension("histories.json"), csv.with_extension("diagnostics.csv"))
}

fn rows_to_csv<T: Serialize, W: Write>(rows: &[T], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Gap records as CSV; the header is written even with no rows.
pub fn write_records<W: Write>(records: &[GapRecord], mut sink: W) -> Result<()> {
    if records.is_empty() {
        writeln!(sink, "{CSV_HEADER}").map_err(csv::Error::from)?;
        return Ok(());
    }
    rows_to_csv(records, sink)
}

pub fn read_records(path: &Path) -> Result<Vec<GapRecord>> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(BenchError::config(format!("{} does not have the gap-record header", path.display())));
    }
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_diagnostics<W: Write>(rows: &[DiagnosticRow], mut sink: W) -> Result<()> {
    if rows.is_empty() {
        writeln!(sink, "function,method,seed,iteration,failed,message").map_err(csv::Error::from)?;
        return Ok(());
    }
    rows_to_csv(rows, sink)
}

pub fn write_runs<W: Write>(runs: &[RunRecord], sink: W) -> Result<()> {
    serde_json::to_writer_pretty(sink, runs)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| BenchError::io(path, e))?))
}

/// The CSV at `csv` plus its JSON histories and diagnostics alongside.
pub fn write_output(output: &ExperimentOutput, csv: &Path) -> Result<()> {
    let (runs, diagnostics) = companion_paths(csv);
    write_records(&output.records, create(csv)?)?;
    let mut sink = create(&runs)?;
    write_runs(&output.runs, &mut sink)?;
    sink.flush().map_err(|e| BenchError::io(&runs, e))?;
    write_diagnostics(&output.diagnostics, create(&diagnostics)?)
}
