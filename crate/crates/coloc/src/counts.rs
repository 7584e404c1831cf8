//! Prevalence matrices: ingestion and validation of location × activity counts.
//!
//! A [`CountMatrix`] holds nonnegative integer counts `q_ci` of units of
//! activity (persons, plants, dollars) per location `c` and activity `i`,
//! together with the row totals `q_c`, column totals `q_i` and grand total
//! `q`. Label order is first appearance in the input and is carried through
//! all downstream outputs, so ordering is never semantic.

use std::collections::HashMap;
use std::io::Read;

use thiserror::Error;

/// Errors from building or ingesting a count matrix.
#[derive(Debug, Error)]
pub enum CountsError {
    #[error("empty input: no data rows")]
    EmptyInput,

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate entry for ({location}, {activity}) at line {line}")]
    Duplicate {
        line: u64,
        location: String,
        activity: String,
    },

    #[error("duplicate {kind} label: {label}")]
    DuplicateLabel { kind: &'static str, label: String },

    #[error("total count is zero; at least one positive count is required")]
    ZeroTotal,

    #[error("count overflow: {0}")]
    Overflow(String),

    #[error("invalid rescale factor k = {0}; k must be >= 1")]
    BadScale(u64),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Location × activity grid of nonnegative integer counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    locations: Vec<String>,
    activities: Vec<String>,
    counts: Vec<u64>, // row-major, locations × activities
}

/// Summary of degenerate rows/columns in a count matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Locations whose row sum is exactly zero.
    pub empty_locations: Vec<String>,
    /// Activities whose column sum is exactly zero.
    pub empty_activities: Vec<String>,
    /// Grand total `q`.
    pub total: u64,
    /// `(N_c, N_i)`.
    pub dimensions: (usize, usize),
}

impl CountMatrix {
    /// Build from labels and a row-major count grid.
    ///
    /// Labels must be unique per axis and the grand total must be positive.
    pub fn new(
        locations: Vec<String>,
        activities: Vec<String>,
        counts: Vec<u64>,
    ) -> Result<Self, CountsError> {
        if counts.len() != locations.len() * activities.len() {
            return Err(CountsError::Shape(format!(
                "{} locations x {} activities needs {} cells, got {}",
                locations.len(),
                activities.len(),
                locations.len() * activities.len(),
                counts.len()
            )));
        }
        check_unique(&locations, "location")?;
        check_unique(&activities, "activity")?;
        let mut total: u64 = 0;
        for &q in &counts {
            total = total
                .checked_add(q)
                .ok_or_else(|| CountsError::Overflow("grand total exceeds u64".into()))?;
        }
        if total == 0 {
            return Err(CountsError::ZeroTotal);
        }
        Ok(Self {
            locations,
            activities,
            counts,
        })
    }

    /// Convenience constructor from rows of counts.
    pub fn from_rows(
        locations: &[&str],
        activities: &[&str],
        rows: &[&[u64]],
    ) -> Result<Self, CountsError> {
        let mut counts = Vec::with_capacity(locations.len() * activities.len());
        for row in rows {
            counts.extend_from_slice(row);
        }
        Self::new(
            locations.iter().map(|s| s.to_string()).collect(),
            activities.iter().map(|s| s.to_string()).collect(),
            counts,
        )
    }

    pub fn n_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn n_activities(&self) -> usize {
        self.activities.len()
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn count(&self, c: usize, i: usize) -> u64 {
        self.counts[c * self.activities.len() + i]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Row total `q_c`.
    pub fn location_total(&self, c: usize) -> u64 {
        let ni = self.activities.len();
        self.counts[c * ni..(c + 1) * ni].iter().sum()
    }

    /// Column total `q_i`.
    pub fn activity_total(&self, i: usize) -> u64 {
        let ni = self.activities.len();
        self.counts.iter().skip(i).step_by(ni).sum()
    }

    /// Grand total `q`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// List zero-sum rows and columns. Never mutates the matrix.
    pub fn validate(&self) -> ValidationReport {
        let empty_locations = (0..self.locations.len())
            .filter(|&c| self.location_total(c) == 0)
            .map(|c| self.locations[c].clone())
            .collect();
        let empty_activities = (0..self.activities.len())
            .filter(|&i| self.activity_total(i) == 0)
            .map(|i| self.activities[i].clone())
            .collect();
        ValidationReport {
            empty_locations,
            empty_activities,
            total: self.total(),
            dimensions: (self.locations.len(), self.activities.len()),
        }
    }

    /// Multiply every cell by `k`, as when changing the unit of measurement.
    pub fn rescale(&self, k: u64) -> Result<Self, CountsError> {
        if k < 1 {
            return Err(CountsError::BadScale(k));
        }
        let counts = self
            .counts
            .iter()
            .map(|&q| {
                q.checked_mul(k)
                    .ok_or_else(|| CountsError::Overflow(format!("{q} * {k} exceeds u64")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            locations: self.locations.clone(),
            activities: self.activities.clone(),
            counts,
        })
    }

    /// Serialize to long-form CSV (`location,activity,count`), all cells
    /// including zeros, so that parsing the output reproduces the matrix
    /// exactly, label order included.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("location,activity,count\n");
        for (c, loc) in self.locations.iter().enumerate() {
            for (i, act) in self.activities.iter().enumerate() {
                out.push_str(&csv_field(loc));
                out.push(',');
                out.push_str(&csv_field(act));
                out.push(',');
                out.push_str(&self.count(c, i).to_string());
                out.push('\n');
            }
        }
        out
    }
}

fn check_unique(labels: &[String], kind: &'static str) -> Result<(), CountsError> {
    let mut seen = HashMap::new();
    for l in labels {
        if seen.insert(l.as_str(), ()).is_some() {
            return Err(CountsError::DuplicateLabel {
                kind,
                label: l.clone(),
            });
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Parse long-form CSV with header `location,activity,count`.
///
/// Cells absent from the file are zero; duplicate (location, activity)
/// pairs are an error. Label order is first appearance.
pub fn parse_long_csv<R: Read>(reader: R) -> Result<CountMatrix, CountsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect::<Vec<_>>();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(CountsError::EmptyInput);
    }
    if headers != ["location", "activity", "count"] {
        return Err(CountsError::Parse {
            line: 1,
            message: format!(
                "expected header `location,activity,count`, got `{}`",
                headers.join(",")
            ),
        });
    }

    let mut locations: Vec<String> = Vec::new();
    let mut activities: Vec<String> = Vec::new();
    let mut loc_index: HashMap<String, usize> = HashMap::new();
    let mut act_index: HashMap<String, usize> = HashMap::new();
    let mut entries: HashMap<(usize, usize), u64> = HashMap::new();
    let mut first_line: HashMap<(usize, usize), u64> = HashMap::new();

    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue; // blank line
        }
        if record.len() != 3 {
            return Err(CountsError::Parse {
                line,
                message: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let loc = record[0].to_string();
        let act = record[1].to_string();
        let count = parse_count(record[2].trim(), line)?;

        let c = *loc_index.entry(loc.clone()).or_insert_with(|| {
            locations.push(loc);
            locations.len() - 1
        });
        let i = *act_index.entry(act.clone()).or_insert_with(|| {
            activities.push(act);
            activities.len() - 1
        });
        if entries.insert((c, i), count).is_some() {
            return Err(CountsError::Duplicate {
                line,
                location: locations[c].clone(),
                activity: activities[i].clone(),
            });
        }
        first_line.insert((c, i), line);
    }

    if entries.is_empty() {
        return Err(CountsError::EmptyInput);
    }

    let ni = activities.len();
    let mut counts = vec![0u64; locations.len() * ni];
    for ((c, i), q) in entries {
        counts[c * ni + i] = q;
    }
    CountMatrix::new(locations, activities, counts)
}

/// Parse wide-matrix CSV: first column holds location labels, remaining
/// header cells are activity labels, cells are nonnegative integers.
pub fn parse_wide_csv<R: Read>(reader: R) -> Result<CountMatrix, CountsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if headers.len() < 2 {
        return Err(CountsError::EmptyInput);
    }
    let activities: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();

    let mut locations = Vec::new();
    let mut counts = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(CountsError::Parse {
                line,
                message: format!(
                    "expected {} fields, got {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        locations.push(record[0].to_string());
        for field in record.iter().skip(1) {
            counts.push(parse_count(field.trim(), line)?);
        }
    }
    if locations.is_empty() {
        return Err(CountsError::EmptyInput);
    }
    CountMatrix::new(locations, activities, counts)
}

fn parse_count(field: &str, line: u64) -> Result<u64, CountsError> {
    if field.starts_with('-') {
        return Err(CountsError::Parse {
            line,
            message: format!("negative count `{field}`"),
        });
    }
    field.parse::<u64>().map_err(|_| CountsError::Parse {
        line,
        message: format!("`{field}` is not a nonnegative integer"),
    })
}

fn csv_error(e: csv::Error, fallback_line: u64) -> CountsError {
    let line = match e.position() {
        Some(p) => p.line(),
        None => fallback_line,
    };
    CountsError::Parse {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_basic_long() {
        let m = parse_long_csv("location,activity,count\nA,x,3\nA,y,1\nB,y,4".as_bytes()).unwrap();
        assert_eq!(m.locations(), &["A", "B"]);
        assert_eq!(m.activities(), &["x", "y"]);
        assert_eq!(m.counts(), &[3, 1, 0, 4]);
        assert_eq!(m.total(), 8);
    }

    #[test]
    fn duplicate_key_reports_line() {
        let err = parse_long_csv("location,activity,count\nA,x,3\nA,x,5".as_bytes()).unwrap_err();
        match err {
            CountsError::Duplicate { line, .. } => assert_eq!(line, 3),
            other => panic!("expected duplicate error, got {other}"),
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            parse_long_csv("".as_bytes()),
            Err(CountsError::EmptyInput)
        ));
        assert!(matches!(
            parse_long_csv("location,activity,count\n".as_bytes()),
            Err(CountsError::EmptyInput)
        ));
    }

    #[test]
    fn malformed_rows() {
        let err =
            parse_long_csv("location,activity,count\nA,x,3\nB,y".as_bytes()).unwrap_err();
        match err {
            CountsError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        assert!(parse_long_csv("location,activity,count\nA,x,-1".as_bytes()).is_err());
        assert!(parse_long_csv("location,activity,count\nA,x,1.5".as_bytes()).is_err());
        assert!(parse_long_csv("loc,act,n\nA,x,1".as_bytes()).is_err());
    }

    #[test]
    fn crlf_accepted() {
        let m =
            parse_long_csv("location,activity,count\r\nA,x,3\r\nB,y,4\r\n".as_bytes()).unwrap();
        assert_eq!(m.total(), 7);
    }

    #[test]
    fn wide_matches_long() {
        let wide = parse_wide_csv("location,x,y\nA,3,1\nB,0,4".as_bytes()).unwrap();
        let long = parse_long_csv("location,activity,count\nA,x,3\nA,y,1\nB,y,4".as_bytes())
            .unwrap();
        assert_eq!(wide, long);
    }

    #[test]
    fn validate_flags_empty_rows_and_cols() {
        let m = CountMatrix::from_rows(&["A", "B"], &["x", "y"], &[&[0, 0], &[1, 2]]).unwrap();
        let r = m.validate();
        assert_eq!(r.empty_locations, vec!["A"]);
        assert!(r.empty_activities.is_empty());
        assert_eq!(r.total, 3);

        let m = CountMatrix::from_rows(&["A", "B"], &["x", "y"], &[&[1, 0], &[2, 0]]).unwrap();
        let r = m.validate();
        assert_eq!(r.empty_activities, vec!["y"]);
        assert_eq!(r.dimensions, (2, 2));
    }

    #[test]
    fn validate_no_empty() {
        let m = CountMatrix::from_rows(&["A", "B"], &["x", "y"], &[&[3, 1], &[0, 4]]).unwrap();
        let r = m.validate();
        assert!(r.empty_locations.is_empty());
        assert!(r.empty_activities.is_empty());
        assert_eq!(r.total, 8);
    }

    #[test]
    fn rescale_multiplies_cells() {
        let m = CountMatrix::from_rows(&["A", "B"], &["x", "y"], &[&[3, 1], &[0, 4]]).unwrap();
        let r = m.rescale(10).unwrap();
        assert_eq!(r.counts(), &[30, 10, 0, 40]);
        assert_eq!(r.total(), 10 * m.total());
        assert_eq!(m.rescale(1).unwrap(), m);
        assert!(matches!(m.rescale(0), Err(CountsError::BadScale(0))));
    }

    #[test]
    fn rescale_overflow() {
        let m = CountMatrix::from_rows(&["A"], &["x"], &[&[u64::MAX / 2]]).unwrap();
        assert!(matches!(m.rescale(3), Err(CountsError::Overflow(_))));
    }

    #[test]
    fn zero_total_rejected() {
        assert!(matches!(
            CountMatrix::from_rows(&["A"], &["x"], &[&[0]]),
            Err(CountsError::ZeroTotal)
        ));
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(matches!(
            CountMatrix::from_rows(&["A", "A"], &["x"], &[&[1], &[2]]),
            Err(CountsError::DuplicateLabel { kind: "location", .. })
        ));
    }

    #[test]
    fn quoted_labels_roundtrip() {
        let m = CountMatrix::from_rows(&["Abilene, TX", "B\"q\""], &["x, y ", "z"], &[
            &[1, 2],
            &[3, 4],
        ])
        .unwrap();
        let back = parse_long_csv(m.to_long_csv().as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn csv_roundtrip(rows in 1usize..5, cols in 1usize..5, seed in 0u64..1000) {
            let mut counts = Vec::new();
            let mut s = seed;
            for _ in 0..rows * cols {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                counts.push(s >> 59); // small counts, zeros included
            }
            if counts.iter().all(|&c| c == 0) {
                counts[0] = 1;
            }
            let locations: Vec<String> = (0..rows).map(|r| format!("loc{r}")).collect();
            let activities: Vec<String> = (0..cols).map(|c| format!("act{c}")).collect();
            let m = CountMatrix::new(locations, activities, counts).unwrap();
            let back = parse_long_csv(m.to_long_csv().as_bytes()).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn rescale_total_is_k_times(k in 1u64..1000) {
            let m = CountMatrix::from_rows(&["A", "B"], &["x", "y"], &[&[3, 1], &[0, 4]]).unwrap();
            let r = m.rescale(k).unwrap();
            prop_assert_eq!(r.total(), k * m.total());
        }
    }
}
