use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::args::{Cli, Format};

pub const SCHEMA: &str = matchlab::verify::SCHEMA;

/// Rows for CSV output. Rows may be shorter than the header (ragged tables).
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Command result: a JSON value and its CSV rendering.
pub struct Report {
    pub result: Value,
    pub table: Table,
    /// Print the result without the schema/config envelope.
    pub raw: bool,
}

impl Report {
    pub fn new(result: impl Serialize, table: Table) -> Result<Self> {
        Ok(Self {
            result: serde_json::to_value(result)?,
            table,
            raw: false,
        })
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'static str,
    config: &'a Cli,
    result: &'a Value,
}

pub fn render(cli: &Cli, report: &Report, out: &mut impl Write) -> Result<()> {
    match cli.format {
        Format::Json => {
            if report.raw {
                serde_json::to_writer_pretty(&mut *out, &report.result)?;
            } else {
                let envelope = Envelope {
                    schema: SCHEMA,
                    config: cli,
                    result: &report.result,
                };
                serde_json::to_writer_pretty(&mut *out, &envelope)?;
            }
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
            w.write_record(&report.table.header)?;
            for row in &report.table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
