//! Daily case series: CSV ingestion, validation and cumulative/incremental
//! transforms.
//!
//! `day_id` is the only time axis. Dates are carried for presentation and
//! never enter a computation.

use std::collections::HashMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns of the daily series, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Column {
    DayId,
    Date,
    AllCases,
    NewCases,
    NewDeaths,
    Recovered,
    Icu,
    ActiveCases,
    Tests,
}

impl Column {
    pub const ALL: [Column; 9] = [
        Column::DayId,
        Column::Date,
        Column::AllCases,
        Column::NewCases,
        Column::NewDeaths,
        Column::Recovered,
        Column::Icu,
        Column::ActiveCases,
        Column::Tests,
    ];

    /// Canonical header name.
    pub fn header(self) -> &'static str {
        match self {
            Column::DayId => "Day_ID",
            Column::Date => "Date",
            Column::AllCases => "All_Cases",
            Column::NewCases => "New_Cases",
            Column::NewDeaths => "New_Deaths",
            Column::Recovered => "Recovered",
            Column::Icu => "ICU",
            Column::ActiveCases => "Active_Cases",
            Column::Tests => "Tests",
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.header())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub day_id: i64,
    pub date: Option<NaiveDate>,
    pub all_cases: u64,
    pub new_cases: u64,
    pub new_deaths: u64,
    pub recovered: u64,
    pub icu: u64,
    pub active_cases_delta: i64,
    pub tests: u64,
}

impl DailyRecord {
    /// A record carrying only the day and the cumulative count.
    pub fn new(day_id: i64, all_cases: u64, new_cases: u64) -> Self {
        Self {
            day_id,
            date: None,
            all_cases,
            new_cases,
            new_deaths: 0,
            recovered: 0,
            icu: 0,
            active_cases_delta: 0,
            tests: 0,
        }
    }
}

/// An ordered daily series. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSeries {
    records: Vec<DailyRecord>,
    label: String,
}

impl ObservationSeries {
    /// Wraps records as given. Use [`validate`] to check the invariants.
    pub fn new(records: Vec<DailyRecord>, label: impl Into<String>) -> Self {
        Self {
            records,
            label: label.into(),
        }
    }

    /// Builds a series from cumulative totals, deriving `new_cases` by
    /// differencing (the first increment equals the first total).
    pub fn from_cumulative(first_day: i64, cumulative: &[u64], label: impl Into<String>) -> Self {
        let records = cumulative
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let prev = if i == 0 { 0 } else { cumulative[i - 1] };
                DailyRecord::new(first_day + i as i64, c, c.saturating_sub(prev))
            })
            .collect();
        Self::new(records, label)
    }

    pub fn records(&self) -> &[DailyRecord] {
        &self.records
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn day_ids(&self) -> Vec<i64> {
        self.records.iter().map(|r| r.day_id).collect()
    }

    pub fn cumulative(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.all_cases).collect()
    }

    pub fn new_cases(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.new_cases).collect()
    }

    /// Records whose day lies in `[start, start + n)`.
    pub fn window(&self, start: i64, n: usize) -> Self {
        let end = start + n as i64;
        let records = self
            .records
            .iter()
            .filter(|r| r.day_id >= start && r.day_id < end)
            .cloned()
            .collect();
        Self::new(records, self.label.clone())
    }

    /// Serializes every column with canonical headers.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = Column::ALL.iter().map(|c| c.header()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in &self.records {
            let date = r.date.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.day_id,
                date,
                r.all_cases,
                r.new_cases,
                r.new_deaths,
                r.recovered,
                r.icu,
                r.active_cases_delta,
                r.tests
            ));
        }
        out
    }
}

/// Which optional columns were filled in by the parser.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    /// Absent columns set to zero (or left empty, for `Date`).
    pub zero_filled: Vec<Column>,
    /// Absent columns computed from other columns.
    pub derived: Vec<Column>,
}

/// Parses a comma-separated series with a header row.
///
/// Header names are matched case-insensitively against the canonical names,
/// or against `header_map` overrides (canonical column -> header in the file).
/// The result is sorted by `day_id`.
pub fn parse_csv(
    text: &str,
    header_map: Option<&HashMap<Column, String>>,
) -> Result<(ObservationSeries, ParseReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            row: 1,
            message: e.to_string(),
        })?
        .clone();

    let mut index: HashMap<Column, usize> = HashMap::new();
    for col in Column::ALL {
        let wanted = header_map
            .and_then(|m| m.get(&col))
            .map(String::as_str)
            .unwrap_or(col.header());
        if let Some(pos) = headers.iter().position(|h| h.eq_ignore_ascii_case(wanted)) {
            index.insert(col, pos);
        }
    }
    for required in [Column::DayId, Column::AllCases] {
        if !index.contains_key(&required) {
            return Err(Error::MissingColumn(required.header().to_string()));
        }
    }

    let mut rows: Vec<(usize, DailyRecord)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        // Header is line 1.
        let line = i + 2;
        let rec = rec.map_err(|e| Error::MalformedRow {
            row: line,
            message: e.to_string(),
        })?;
        let field = |col: Column| index.get(&col).and_then(|&p| rec.get(p));
        let malformed = |col: Column, raw: &str| Error::MalformedRow {
            row: line,
            message: format!("cannot parse {col} value {raw:?}"),
        };

        let day_raw = field(Column::DayId).unwrap_or("");
        let day_id: i64 = day_raw.parse().map_err(|_| malformed(Column::DayId, day_raw))?;

        let date = match field(Column::Date) {
            None | Some("") => None,
            Some(raw) => Some(
                NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| malformed(Column::Date, raw))?,
            ),
        };

        let count = |col: Column| -> Result<u64> {
            match field(col) {
                None => Ok(0),
                Some(raw) => {
                    let v: i64 = raw.parse().map_err(|_| malformed(col, raw))?;
                    if v < 0 {
                        return Err(Error::NegativeCount {
                            column: col.header().to_string(),
                            day_id,
                        });
                    }
                    Ok(v as u64)
                }
            }
        };

        let active_cases_delta = match field(Column::ActiveCases) {
            None => 0,
            Some(raw) => raw.parse().map_err(|_| malformed(Column::ActiveCases, raw))?,
        };

        let record = DailyRecord {
            day_id,
            date,
            all_cases: count(Column::AllCases)?,
            new_cases: count(Column::NewCases)?,
            new_deaths: count(Column::NewDeaths)?,
            recovered: count(Column::Recovered)?,
            icu: count(Column::Icu)?,
            active_cases_delta,
            tests: count(Column::Tests)?,
        };
        rows.push((line, record));
    }

    rows.sort_by_key(|(_, r)| r.day_id);
    for pair in rows.windows(2) {
        let (_, prev) = &pair[0];
        let (line, cur) = &pair[1];
        if cur.day_id != prev.day_id + 1 {
            return Err(Error::NonMonotoneDay {
                row: *line,
                day_id: cur.day_id,
            });
        }
    }

    let mut records: Vec<DailyRecord> = rows.into_iter().map(|(_, r)| r).collect();
    let mut report = ParseReport::default();
    if !index.contains_key(&Column::NewCases) {
        let mut prev = 0u64;
        for r in &mut records {
            r.new_cases = r.all_cases.saturating_sub(prev);
            prev = r.all_cases;
        }
        report.derived.push(Column::NewCases);
    }
    for col in [
        Column::Date,
        Column::NewDeaths,
        Column::Recovered,
        Column::Icu,
        Column::ActiveCases,
        Column::Tests,
    ] {
        if !index.contains_key(&col) {
            report.zero_filled.push(col);
        }
    }

    Ok((ObservationSeries::new(records, "csv"), report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub day_id: i64,
    pub rule: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<ValidationIssue>,
}

pub const RULE_DAY_SEQUENCE: &str = "day sequence";
pub const RULE_MONOTONICITY: &str = "monotonicity";
pub const RULE_DIFFERENCE: &str = "difference mismatch";
pub const RULE_EMPTY: &str = "empty";

/// Reports every violated series invariant. Never fails and never mutates.
pub fn validate(series: &ObservationSeries) -> ValidationReport {
    let mut issues = Vec::new();
    let records = series.records();
    if records.is_empty() {
        issues.push(ValidationIssue {
            day_id: 0,
            rule: RULE_EMPTY.into(),
            message: "series has no records".into(),
        });
    }
    for pair in records.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.day_id != prev.day_id + 1 {
            issues.push(ValidationIssue {
                day_id: cur.day_id,
                rule: RULE_DAY_SEQUENCE.into(),
                message: format!("day {} follows day {}", cur.day_id, prev.day_id),
            });
        }
        if cur.all_cases < prev.all_cases {
            issues.push(ValidationIssue {
                day_id: cur.day_id,
                rule: RULE_MONOTONICITY.into(),
                message: format!(
                    "cumulative count falls from {} to {}",
                    prev.all_cases, cur.all_cases
                ),
            });
        }
        let diff = cur.all_cases as i128 - prev.all_cases as i128;
        if diff != cur.new_cases as i128 {
            issues.push(ValidationIssue {
                day_id: cur.day_id,
                rule: RULE_DIFFERENCE.into(),
                message: format!(
                    "{} - {} = {} but new_cases = {}",
                    cur.all_cases, prev.all_cases, diff, cur.new_cases
                ),
            });
        }
    }
    ValidationReport {
        ok: issues.is_empty(),
        issues,
    }
}

/// First differences of a cumulative series; element 0 is kept as is.
pub fn to_incremental(cumulative: &[u64]) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(cumulative.len());
    for (i, &c) in cumulative.iter().enumerate() {
        if i == 0 {
            out.push(c);
            continue;
        }
        let prev = cumulative[i - 1];
        if c < prev {
            return Err(Error::NotMonotone { index: i });
        }
        out.push(c - prev);
    }
    Ok(out)
}

/// Inverse of [`to_incremental`]: the first total is `initial`, and every
/// later total adds the matching increment. `increments[0]` is not used.
pub fn to_cumulative(increments: &[u64], initial: u64) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(increments.len());
    let mut acc = initial;
    for (i, &d) in increments.iter().enumerate() {
        if i > 0 {
            acc = acc
                .checked_add(d)
                .ok_or_else(|| Error::Domain(format!("cumulative overflow at index {i}")))?;
        }
        out.push(acc);
    }
    Ok(out)
}
