use std::path::Path;

use chrono::NaiveDate;

use super::{PredictionRecord, RecordStatus};
use crate::error::{Error, Result};
use crate::marketdata::{minute_label, parse_minute_label};

const HEADER: [&str; 8] = ["date", "minute", "model", "predictor_set", "y_true", "y_hat", "y_naive", "status"];

/// Writes records in the given order. Floats use the shortest round-trip
/// representation, so a write/read cycle is lossless.
pub fn write_predictions(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.day.format("%Y-%m-%d").to_string(),
            minute_label(r.minute),
            r.model.clone(),
            r.predictor_set.clone(),
            r.y_true.to_string(),
            r.y_hat.to_string(),
            r.y_naive.to_string(),
            r.status.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    if rdr.headers()? != HEADER.as_slice() {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse { line, message };
        if rec.len() != HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", HEADER.len(), rec.len())));
        }
        let day = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| bad(format!("date {:?}: {e}", &rec[0])))?;
        let minute = parse_minute_label(&rec[1]).ok_or_else(|| bad(format!("minute {:?}", &rec[1])))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(format!("{} {:?}: {e}", HEADER[i], &rec[i])));
        out.push(PredictionRecord {
            day,
            minute,
            model: rec[2].to_string(),
            predictor_set: rec[3].to_string(),
            y_true: num(4)?,
            y_hat: num(5)?,
            y_naive: num(6)?,
            status: rec[7].parse::<RecordStatus>().map_err(|e| bad(e.to_string()))?,
        });
    }
    Ok(out)
}
