//! Reports: a JSON document with `config`, `result` and `timing_ms`
//! sections, or a flat CSV table with one column pair per block.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use clap::ValueEnum;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// One CSV row: a named quantity with a scalar value, per-block values, or both.
#[derive(Clone, Debug)]
pub struct Row {
    pub quantity: String,
    pub value: Option<f64>,
    pub blocks: Vec<Complex64>,
}

impl Row {
    pub fn scalar(quantity: impl Into<String>, value: f64) -> Self {
        Self { quantity: quantity.into(), value: Some(value), blocks: Vec::new() }
    }

    pub fn blocks(quantity: impl Into<String>, blocks: &[Complex64]) -> Self {
        Self { quantity: quantity.into(), value: None, blocks: blocks.to_vec() }
    }

    pub fn real_blocks(quantity: impl Into<String>, values: &[f64]) -> Self {
        Self { quantity: quantity.into(), value: None, blocks: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn flag(quantity: impl Into<String>, flag: bool) -> Self {
        Self::scalar(quantity, if flag { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub result: Value,
    pub timing_ms: BTreeMap<String, f64>,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            result: Value::Null,
            timing_ms: BTreeMap::new(),
            rows: Vec::new(),
        }
    }

    /// Run `f`, recording its wall time under `name`.
    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timing_ms.insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    pub fn write(&self, format: OutputFormat, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            OutputFormat::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            OutputFormat::Csv => self.write_csv(out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let width = self.rows.iter().map(|r| r.blocks.len()).max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["quantity".to_string(), "value".to_string()];
        for i in 0..width {
            header.push(format!("block_{i}_re"));
            header.push(format!("block_{i}_im"));
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.quantity.clone(), row.value.map(|v| v.to_string()).unwrap_or_default()];
            for i in 0..width {
                match row.blocks.get(i) {
                    Some(z) => {
                        record.push(z.re.to_string());
                        record.push(z.im.to_string());
                    }
                    None => {
                        record.push(String::new());
                        record.push(String::new());
                    }
                }
            }
            w.write_record(&record)?;
        }
        w.flush()
    }
}
