use std::io::Write;

use crate::data::csv_io;
use crate::error::{Error, Result};

/// Diagnostics for the averaged play after one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    /// err of the Learner's average play.
    pub error: f64,
    /// α·β of the most violated group found, measured exactly.
    pub max_violation: f64,
    /// Φ of that group and sign.
    pub phi: f64,
    /// Registry id of that group, or −1 when no constraint is violated.
    pub group_id: i64,
    /// Learner regret to date (no-regret dynamics only).
    pub regret: Option<f64>,
    pub gap_l: f64,
    pub gap_a: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    records: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; round indices must strictly increase.
    pub fn push(&mut self, record: RoundRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.t <= last.t {
                return Err(Error::Contract(format!(
                    "trace round {} after round {}",
                    record.t, last.t
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&RoundRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes `t,error,max_violation,phi,group_id,gapL,gapA`, full precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "error", "max_violation", "phi", "group_id", "gapL", "gapA"])
            .map_err(csv_io)?;
        for r in &self.records {
            w.write_record([
                r.t.to_string(),
                format!("{:.17e}", r.error),
                format!("{:.17e}", r.max_violation),
                format!("{:.17e}", r.phi),
                r.group_id.to_string(),
                format!("{:.17e}", r.gap_l),
                format!("{:.17e}", r.gap_a),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: usize) -> RoundRecord {
        RoundRecord {
            t,
            error: 0.25,
            max_violation: 0.0,
            phi: -0.1,
            group_id: -1,
            regret: None,
            gap_l: 0.0,
            gap_a: 0.0,
        }
    }

    #[test]
    fn rounds_must_increase() {
        let mut tr = RunTrace::new();
        tr.push(rec(1)).unwrap();
        assert!(tr.push(rec(1)).is_err());
        tr.push(rec(3)).unwrap();
        assert_eq!(tr.len(), 2);
    }

    #[test]
    fn csv_header_and_rows() {
        let mut tr = RunTrace::new();
        tr.push(rec(1)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,error,max_violation,phi,group_id,gapL,gapA"));
        assert!(lines.next().unwrap().starts_with("1,2.5"));
    }
}
