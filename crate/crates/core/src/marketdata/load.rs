use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::{
    minute_label, validate_bar, DaySeries, Minute, MinuteBar, OPEN_CLOCK, SESSION_END,
};
use crate::error::{Error, Result};

/// Days with fewer session bars than this are dropped on load.
pub const MIN_USABLE_MINUTES: usize = 40;

const HEADER: [&str; 4] = ["date", "time", "spy_price", "vix"];

#[derive(Debug, Clone, Default)]
pub struct LoadedBars {
    pub days: Vec<DaySeries>,
    /// Days dropped for having too few session bars, with their bar count.
    pub dropped_days: Vec<(NaiveDate, usize)>,
    /// Rows outside 09:30..=15:50, ignored.
    pub out_of_session: usize,
}

/// Parses `HH:MM` into minutes since midnight.
pub fn parse_time(s: &str) -> Option<u32> {
    let (h, m) = s.trim().split_once(':')?;
    if h.is_empty() || h.len() > 2 || m.len() != 2 {
        return None;
    }
    let h: u32 = h.parse().ok()?;
    let m: u32 = m.parse().ok()?;
    (h < 24 && m < 60).then_some(h * 60 + m)
}

struct RawRow {
    day: NaiveDate,
    clock: u32,
    spy_price: f64,
    vix: f64,
}

impl RawRow {
    fn minute(&self) -> Option<Minute> {
        let off = self.clock.checked_sub(OPEN_CLOCK)?;
        (off <= u32::from(SESSION_END)).then_some(off as Minute)
    }

    fn label(&self) -> String {
        format!("{} {:02}:{:02}", self.day, self.clock / 60, self.clock % 60)
    }
}

fn parse_record(rec: &csv::StringRecord) -> std::result::Result<RawRow, String> {
    if rec.len() != 4 {
        return Err(format!("expected 4 fields, found {}", rec.len()));
    }
    let day = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
        .map_err(|e| format!("bad date {:?}: {e}", &rec[0]))?;
    let clock = parse_time(&rec[1]).ok_or_else(|| format!("bad time {:?}", &rec[1]))?;
    let spy_price: f64 = rec[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad price {:?}", &rec[2]))?;
    let vix: f64 = rec[3]
        .trim()
        .parse()
        .map_err(|_| format!("bad vix {:?}", &rec[3]))?;
    Ok(RawRow {
        day,
        clock,
        spy_price,
        vix,
    })
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn check_header(reader: &mut csv::Reader<File>) -> std::result::Result<bool, String> {
    let header = reader.headers().map_err(|e| e.to_string())?;
    if header.is_empty() {
        return Ok(false);
    }
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != HEADER {
        return Err(format!("expected header {:?}, found {:?}", HEADER.join(","), got.join(",")));
    }
    Ok(true)
}

/// Reads a `date,time,spy_price,vix` file, keeps 09:30..=15:50 (the first ten
/// minutes only as lag history), groups by day and drops days with fewer than
/// [`MIN_USABLE_MINUTES`] session bars.
pub fn load_minute_bars(path: impl AsRef<Path>) -> Result<LoadedBars> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    match check_header(&mut reader) {
        Ok(true) => {}
        Ok(false) => return Ok(LoadedBars::default()),
        Err(message) => return Err(Error::Parse { line: 1, message }),
    }

    let mut by_day: BTreeMap<NaiveDate, (Option<u32>, Vec<MinuteBar>)> = BTreeMap::new();
    let mut out_of_session = 0;
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = parse_record(&rec).map_err(|message| Error::Parse { line, message })?;

        let entry = by_day.entry(row.day).or_insert((None, Vec::new()));
        if let Some(prev) = entry.0 {
            if row.clock == prev {
                return Err(Error::Data {
                    day: row.day,
                    message: format!("duplicate bar at {} (line {line})", row.label()),
                });
            }
            if row.clock < prev {
                return Err(Error::Data {
                    day: row.day,
                    message: format!("timestamps not increasing at {} (line {line})", row.label()),
                });
            }
        }
        entry.0 = Some(row.clock);

        match row.minute() {
            Some(minute) => {
                let bar = MinuteBar {
                    day: row.day,
                    minute,
                    spy_price: row.spy_price,
                    vix_annual: row.vix,
                };
                validate_bar(&bar)?;
                entry.1.push(bar);
            }
            None => out_of_session += 1,
        }
    }

    let mut out = LoadedBars {
        out_of_session,
        ..Default::default()
    };
    for (day, (_, bars)) in by_day {
        let (series, _) = DaySeries::from_bars(day, bars)?;
        if series.bars.len() < MIN_USABLE_MINUTES {
            log::warn!(
                "dropping {day}: {} session bars (< {MIN_USABLE_MINUTES})",
                series.bars.len()
            );
            out.dropped_days.push((day, series.bars.len()));
        } else {
            out.days.push(series);
        }
    }
    Ok(out)
}

/// Writes days (warm-up history then session bars) in the loader's format.
pub fn write_minute_bars(path: impl AsRef<Path>, days: &[DaySeries]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", HEADER.join(",")).map_err(io)?;
    for day in days {
        for bar in day.all_bars() {
            writeln!(
                w,
                "{},{},{},{}",
                bar.day.format("%Y-%m-%d"),
                minute_label(bar.minute),
                bar.spy_price,
                bar.vix_annual
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayDiagnostics {
    pub day: NaiveDate,
    pub session_bars: usize,
    pub warmup_bars: usize,
    pub gaps: Vec<Minute>,
}

/// Findings of a full scan. Unlike the loader, the scan never stops at the
/// first problem.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BarDiagnostics {
    pub rows: usize,
    pub days: Vec<DayDiagnostics>,
    pub parse_errors: Vec<String>,
    pub duplicates: Vec<String>,
    pub non_monotone: Vec<String>,
    pub invalid_values: Vec<String>,
    /// Rows outside 09:30..=15:50; ignored downstream.
    pub out_of_session: Vec<String>,
    /// Rows within 09:30..=09:39; used only as lag history.
    pub pre_session_rows: usize,
    pub short_days: Vec<(NaiveDate, usize)>,
}

impl BarDiagnostics {
    pub fn issue_count(&self) -> usize {
        self.parse_errors.len() + self.duplicates.len() + self.non_monotone.len() + self.invalid_values.len()
    }

    pub fn is_clean(&self) -> bool {
        self.issue_count() == 0
    }
}

pub fn inspect_minute_bars(path: impl AsRef<Path>) -> Result<BarDiagnostics> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let mut diag = BarDiagnostics::default();
    match check_header(&mut reader) {
        Ok(true) => {}
        Ok(false) => return Ok(diag),
        Err(message) => {
            diag.parse_errors.push(format!("line 1: {message}"));
            return Ok(diag);
        }
    }

    let mut last: BTreeMap<NaiveDate, u32> = BTreeMap::new();
    let mut minutes: BTreeMap<NaiveDate, Vec<Minute>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                diag.parse_errors.push(e.to_string());
                continue;
            }
        };
        diag.rows += 1;
        let line = rec.position().map_or(0, |p| p.line());
        let row = match parse_record(&rec) {
            Ok(r) => r,
            Err(msg) => {
                diag.parse_errors.push(format!("line {line}: {msg}"));
                continue;
            }
        };
        if let Some(&prev) = last.get(&row.day) {
            if row.clock == prev {
                diag.duplicates.push(format!("line {line}: duplicate {}", row.label()));
                continue;
            }
            if row.clock < prev {
                diag.non_monotone.push(format!("line {line}: {} out of order", row.label()));
                continue;
            }
        }
        last.insert(row.day, row.clock);
        if !(row.spy_price.is_finite() && row.spy_price > 0.0) || !(row.vix.is_finite() && row.vix >= 0.0) {
            diag.invalid_values.push(format!("line {line}: invalid values at {}", row.label()));
            continue;
        }
        match row.minute() {
            Some(m) => {
                if m < super::SESSION_START {
                    diag.pre_session_rows += 1;
                }
                minutes.entry(row.day).or_default().push(m);
            }
            None => diag.out_of_session.push(format!("line {line}: {} outside session", row.label())),
        }
    }

    for (day, ms) in minutes {
        let bars: Vec<MinuteBar> = ms
            .iter()
            .map(|&minute| MinuteBar {
                day,
                minute,
                spy_price: 1.0,
                vix_annual: 0.0,
            })
            .collect();
        // Ordering and value problems were already filtered out above.
        let (series, _) = DaySeries::from_bars(day, bars)?;
        if series.bars.len() < MIN_USABLE_MINUTES {
            diag.short_days.push((day, series.bars.len()));
        }
        diag.days.push(DayDiagnostics {
            day,
            session_bars: series.bars.len(),
            warmup_bars: series.warmup.len(),
            gaps: series.session_gaps(),
        });
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_synthetic_days, SynthParams, SESSION_START};
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn full_day(date: &str, skip: &[&str], extra: &[&str]) -> String {
        let mut s = String::new();
        for clock in (9 * 60 + 30)..=(15 * 60 + 50) {
            let t = format!("{:02}:{:02}", clock / 60, clock % 60);
            if skip.contains(&t.as_str()) {
                continue;
            }
            s.push_str(&format!("{date},{t},100.5,20.25\n"));
            for e in extra {
                if e.starts_with(&t) {
                    s.push_str(&format!("{date},{e}\n"));
                }
            }
        }
        s
    }

    #[test]
    fn time_parsing() {
        assert_eq!(parse_time("09:40"), Some(580));
        assert_eq!(parse_time("9:40"), Some(580));
        assert_eq!(parse_time("24:00"), None);
        assert_eq!(parse_time("09:4"), None);
        assert_eq!(parse_time("0940"), None);
    }

    #[test]
    fn three_days_load() {
        let mut content = String::from("date,time,spy_price,vix\n");
        for d in ["2010-01-04", "2010-01-05", "2010-01-06"] {
            content.push_str(&full_day(d, &[], &[]));
        }
        let f = write_tmp(&content);
        let loaded = load_minute_bars(f.path()).unwrap();
        assert_eq!(loaded.days.len(), 3);
        for d in &loaded.days {
            assert_eq!(d.bars.len(), 371);
            assert_eq!(d.warmup.len(), 10);
            assert!(d.bars.iter().all(|b| (SESSION_START..=SESSION_END).contains(&b.minute)));
        }
    }

    #[test]
    fn pre_session_bar_not_in_session_output() {
        let content = format!("date,time,spy_price,vix\n{}", full_day("2010-01-04", &[], &[]));
        let f = write_tmp(&content);
        let d = &load_minute_bars(f.path()).unwrap().days[0];
        assert!(d.bars.iter().all(|b| b.minute != 5));
        assert!(d.warmup.iter().any(|b| b.minute == 5));
    }

    #[test]
    fn rows_outside_day_are_ignored() {
        let content = "date,time,spy_price,vix\n2010-01-04,09:20,100,20\n".to_string()
            + &full_day("2010-01-04", &[], &[])
            + "2010-01-04,15:59,100,20\n";
        let f = write_tmp(&content);
        let loaded = load_minute_bars(f.path()).unwrap();
        assert_eq!(loaded.out_of_session, 2);
        assert_eq!(loaded.days[0].bars.len(), 371);
    }

    #[test]
    fn duplicate_is_data_error() {
        let content = format!(
            "date,time,spy_price,vix\n{}",
            full_day("2010-01-04", &[], &["12:00,100.1,20.0"])
        );
        let f = write_tmp(&content);
        let err = load_minute_bars(f.path()).unwrap_err();
        assert!(matches!(err, Error::Data { .. }));
        assert!(err.to_string().contains("duplicate bar at 2010-01-04 12:00"), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write_tmp("date,time,spy_price,vix\n2010-01-04,09:40,100,20\n2010-01-04,09:41,abc,20\n");
        match load_minute_bars(f.path()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("price"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn non_monotone_is_data_error() {
        let f = write_tmp("date,time,spy_price,vix\n2010-01-04,09:42,100,20\n2010-01-04,09:41,100,20\n");
        let err = load_minute_bars(f.path()).unwrap_err();
        assert!(err.to_string().contains("not increasing"), "{err}");
    }

    #[test]
    fn empty_file_is_empty_result() {
        let f = write_tmp("");
        assert!(load_minute_bars(f.path()).unwrap().days.is_empty());
        let f = write_tmp("date,time,spy_price,vix\n");
        assert!(load_minute_bars(f.path()).unwrap().days.is_empty());
    }

    #[test]
    fn short_day_dropped_and_reported() {
        let mut content = String::from("date,time,spy_price,vix\n");
        for m in 0..30 {
            content.push_str(&format!("2010-01-04,10:{:02},100,20\n", m));
        }
        content.push_str(&full_day("2010-01-05", &[], &[]));
        let f = write_tmp(&content);
        let loaded = load_minute_bars(f.path()).unwrap();
        assert_eq!(loaded.days.len(), 1);
        assert_eq!(loaded.dropped_days, vec![(NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), 30)]);
    }

    #[test]
    fn wrong_header_rejected() {
        let f = write_tmp("day,time,price,vix\n2010-01-04,09:40,100,20\n");
        assert!(matches!(load_minute_bars(f.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn write_then_load_round_trips() {
        let params = SynthParams {
            n_days: 2,
            ..SynthParams::default()
        };
        let days = generate_synthetic_days(&params, NaiveDate::from_ymd_opt(2012, 5, 1).unwrap()).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_minute_bars(f.path(), &days).unwrap();
        let loaded = load_minute_bars(f.path()).unwrap();
        assert_eq!(loaded.days, days);
    }

    #[test]
    fn inspection_counts_problems_without_stopping() {
        let content = format!(
            "date,time,spy_price,vix\n{}2010-01-04,xx:00,1,1\n",
            full_day("2010-01-04", &["11:00"], &["12:00,100.1,20.0"])
        );
        let f = write_tmp(&content);
        let diag = inspect_minute_bars(f.path()).unwrap();
        assert_eq!(diag.duplicates.len(), 1);
        assert_eq!(diag.parse_errors.len(), 1);
        assert_eq!(diag.pre_session_rows, 10);
        assert_eq!(diag.days[0].gaps, vec![90]);
        assert!(!diag.is_clean());
    }
}
