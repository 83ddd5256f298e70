//! Sampled channel data and its on-disk CSV form.
//!
//! The CSV layout is a two-line header (column names, then units) followed
//! by one `x,value` row per sample. Values are written with the shortest
//! round-trip decimal representation, so re-parsing an emitted file yields
//! bit-identical samples and two runs with the same seed produce
//! byte-identical bodies.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Provenance attached to a series (carried in the run manifest, not the CSV).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesMeta {
    /// Hash of the resolved configuration that produced the data.
    pub config_hash: String,
    /// RNG seed of the run.
    pub seed: u64,
    /// Artifact version.
    pub version: String,
    /// Generation timestamp (RFC 3339); excluded from hashed content.
    pub generated_utc: String,
}

/// Uniformly or explicitly sampled channel: (x, value) pairs with units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<F> {
    /// Independent-variable name, e.g. `time` or `position`.
    pub x_name: String,
    /// Independent-variable unit: `s` or `mm`.
    pub x_unit: String,
    /// Channel name, e.g. `spcm_rate`.
    pub value_name: String,
    /// Channel unit, e.g. `counts_per_s`, `V`, `normalized`.
    pub value_unit: String,
    pub samples: Vec<(F, F)>,
    pub meta: SeriesMeta,
}

impl<F: Real> TimeSeries<F> {
    /// Build a validated series: x strictly increasing, all entries finite.
    pub fn new(
        x_name: impl Into<String>,
        x_unit: impl Into<String>,
        value_name: impl Into<String>,
        value_unit: impl Into<String>,
        samples: Vec<(F, F)>,
    ) -> Result<Self> {
        for (i, (x, v)) in samples.iter().enumerate() {
            if !x.is_finite() || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "series sample {i} is not finite"
                )));
            }
            if i > 0 && samples[i - 1].0 >= *x {
                return Err(Error::InvalidInput(format!(
                    "series x values must be strictly increasing at index {i}"
                )));
            }
        }
        Ok(TimeSeries {
            x_name: x_name.into(),
            x_unit: x_unit.into(),
            value_name: value_name.into(),
            value_unit: value_unit.into(),
            samples,
            meta: SeriesMeta::default(),
        })
    }

    pub fn xs(&self) -> Vec<F> {
        self.samples.iter().map(|&(x, _)| x).collect()
    }

    pub fn values(&self) -> Vec<F> {
        self.samples.iter().map(|&(_, v)| v).collect()
    }

    /// Write the two-line header and sample rows.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{},{}", self.x_name, self.value_name)?;
        writeln!(out, "{},{}", self.x_unit, self.value_unit)?;
        for (x, v) in &self.samples {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }

    /// CSV body as a string.
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV body is UTF-8")
    }

    /// Parse a series written by [`TimeSeries::write_csv`].
    pub fn read_csv(input: &mut impl BufRead) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::SeriesParse(format!("line {}: {e}", i + 1)))?;
            if !line.trim().is_empty() {
                lines.push(line);
            }
        }
        if lines.len() < 2 {
            return Err(Error::SeriesParse(
                "expected a two-line header (names, units)".into(),
            ));
        }
        let split_two = |line: &str, what: &str| -> Result<(String, String)> {
            let mut it = line.splitn(2, ',');
            match (it.next(), it.next()) {
                (Some(a), Some(b)) => Ok((a.trim().to_string(), b.trim().to_string())),
                _ => Err(Error::SeriesParse(format!("{what} line needs two fields"))),
            }
        };
        let (x_name, value_name) = split_two(&lines[0], "name")?;
        let (x_unit, value_unit) = split_two(&lines[1], "unit")?;
        let mut samples = Vec::with_capacity(lines.len() - 2);
        for (i, line) in lines[2..].iter().enumerate() {
            let (xs, vs) = split_two(line, "data")?;
            let x = F::parse_repr(&xs)
                .ok_or_else(|| Error::SeriesParse(format!("row {}: bad x `{xs}`", i + 1)))?;
            let v = F::parse_repr(&vs)
                .ok_or_else(|| Error::SeriesParse(format!("row {}: bad value `{vs}`", i + 1)))?;
            samples.push((x, v));
        }
        TimeSeries::new(x_name, x_unit, value_name, value_unit, samples)
    }

    pub fn read_csv_str(s: &str) -> Result<Self> {
        Self::read_csv(&mut s.as_bytes())
    }
}
