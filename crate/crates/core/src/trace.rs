//! Time-indexed traffic intensity series and the flat text exchange format.
//!
//! A trace file is one header line `slot_width=<float>` followed by one
//! intensity value per line, decimal text, six fractional digits.

use std::fs;
use std::path::Path;

use crate::error::TraceError;

/// A sequence of nonnegative traffic intensities at a fixed slot width.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSeries {
    slot_width: f64,
    values: Vec<f64>,
}

impl TraceSeries {
    /// Build a series, rejecting empty inputs, non-finite or negative values
    /// and a non-positive slot width.
    pub fn new(slot_width: f64, values: Vec<f64>) -> Result<Self, TraceError> {
        if !(slot_width.is_finite() && slot_width > 0.0) {
            return Err(TraceError::BadSlotWidth(slot_width));
        }
        if values.is_empty() {
            return Err(TraceError::Empty);
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(TraceError::Format {
                    line: i + 2, // header is line 1
                    msg: format!("intensity must be finite and nonnegative, got {v}"),
                });
            }
        }
        Ok(Self { slot_width, values })
    }

    pub fn slot_width(&self) -> f64 {
        self.slot_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Arithmetic mean.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population standard deviation (divisor n).
    pub fn std_pop(&self) -> f64 {
        let m = self.mean();
        let var = self
            .values
            .iter()
            .map(|v| {
                let d = v - m;
                d * d
            })
            .sum::<f64>()
            / self.values.len() as f64;
        var.sqrt()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 12 + 24);
        out.push_str(&format!("slot_width={:.6}\n", self.slot_width));
        for v in &self.values {
            out.push_str(&format!("{v:.6}\n"));
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<(), TraceError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn parse_text(text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(TraceError::Empty)?;
        let slot_width = header
            .strip_prefix("slot_width=")
            .ok_or_else(|| TraceError::Format {
                line: 1,
                msg: format!("expected 'slot_width=<float>' header, got '{header}'"),
            })?
            .trim()
            .parse::<f64>()
            .map_err(|e| TraceError::Format {
                line: 1,
                msg: format!("bad slot width: {e}"),
            })?;
        let mut values = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|e| TraceError::Format {
                line: idx + 1,
                msg: format!("bad intensity value '{line}': {e}"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(TraceError::Format {
                    line: idx + 1,
                    msg: format!("intensity must be finite and nonnegative, got {v}"),
                });
            }
            values.push(v);
        }
        Self::new(slot_width, values)
    }

    pub fn read_file(path: &Path) -> Result<Self, TraceError> {
        let text = fs::read_to_string(path)?;
        Self::parse_text(&text)
    }
}
