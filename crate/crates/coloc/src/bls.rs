//! Adapter for BLS Occupational Employment Statistics MSA spreadsheets.
//!
//! Takes the CSV export of an OES metropolitan-area file (one row per
//! area × occupation) and reduces it to a location × activity count matrix
//! of employment in the 22 two-digit SOC major groups. Rows whose
//! employment is suppressed (`**`) are treated as absent: the cell stays at
//! zero and only the prior contributes downstream.
//!
//! Column names are matched case-insensitively against the observed OES
//! schema: `AREA`, `AREA_NAME`, `OCC_CODE`, `OCC_TITLE`, `OCC_GROUP` (or
//! `GROUP` in some vintages) and `TOT_EMP`. When no group column exists,
//! major groups are recognized by their `XX-0000` occupation codes.

use std::collections::HashMap;
use std::io::Read;

use thiserror::Error;

use crate::counts::{CountMatrix, CountsError};

#[derive(Debug, Error)]
pub enum BlsError {
    #[error("missing required column `{0}` in BLS export")]
    MissingColumn(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate area/occupation pair at line {line}: {area} / {occ}")]
    Duplicate { line: u64, area: String, occ: String },

    #[error("no major-group employment rows found")]
    Empty,

    #[error(transparent)]
    Counts(#[from] CountsError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

struct Columns {
    area: Option<usize>,
    area_name: usize,
    occ_code: usize,
    occ_title: usize,
    occ_group: Option<usize>,
    tot_emp: usize,
}

fn locate_columns(headers: &csv::StringRecord) -> Result<Columns, BlsError> {
    let find = |names: &[&str]| -> Option<usize> {
        headers.iter().position(|h| {
            let h = h.trim().to_ascii_uppercase();
            names.iter().any(|n| h == *n)
        })
    };
    Ok(Columns {
        area: find(&["AREA"]),
        area_name: find(&["AREA_NAME", "AREA_TITLE"]).ok_or(BlsError::MissingColumn("AREA_NAME"))?,
        occ_code: find(&["OCC_CODE"]).ok_or(BlsError::MissingColumn("OCC_CODE"))?,
        occ_title: find(&["OCC_TITLE"]).ok_or(BlsError::MissingColumn("OCC_TITLE"))?,
        occ_group: find(&["OCC_GROUP", "GROUP"]),
        tot_emp: find(&["TOT_EMP"]).ok_or(BlsError::MissingColumn("TOT_EMP"))?,
    })
}

fn is_major_code(code: &str) -> bool {
    let code = code.trim();
    code.len() == 7
        && code != "00-0000"
        && code.ends_with("-0000")
        && code[..2].chars().all(|c| c.is_ascii_digit())
}

/// `**` marks suppressed employment; `*` and `#` mark suppressed/odd wage
/// fields that occasionally leak into exports.
fn parse_employment(field: &str) -> Option<Result<u64, String>> {
    let cleaned: String = field.trim().chars().filter(|c| *c != ',' && *c != '"').collect();
    if cleaned.is_empty() || cleaned == "**" || cleaned == "*" || cleaned == "#" {
        return None;
    }
    let cleaned = cleaned.strip_suffix(".0").unwrap_or(&cleaned);
    Some(
        cleaned
            .parse::<u64>()
            .map_err(|_| format!("`{field}` is not a nonnegative integer employment count")),
    )
}

/// Reduce an OES MSA export to a major-group count matrix.
pub fn parse_bls_oes_csv<R: Read>(reader: R) -> Result<CountMatrix, BlsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| BlsError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let cols = locate_columns(&headers)?;

    struct Row {
        area_key: String,
        area_name: String,
        occ_title: String,
        count: u64,
        line: u64,
    }
    let mut rows: Vec<Row> = Vec::new();
    let mut seen: HashMap<(String, String), u64> = HashMap::new();
    let mut name_areas: HashMap<String, Vec<String>> = HashMap::new();

    for record in rdr.records() {
        let record = record.map_err(|e| BlsError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let get = |idx: usize| record.get(idx).unwrap_or("").trim().to_string();

        let occ_code = get(cols.occ_code);
        let is_major = match cols.occ_group {
            Some(g) => get(g).eq_ignore_ascii_case("major"),
            None => is_major_code(&occ_code),
        };
        if !is_major {
            continue;
        }
        let count = match record.get(cols.tot_emp).and_then(parse_employment) {
            None => continue, // suppressed: absent, prior-only cell
            Some(Err(message)) => return Err(BlsError::Parse { line, message }),
            Some(Ok(v)) => v,
        };
        let area_name = get(cols.area_name);
        let area_key = cols.area.map(|a| get(a)).unwrap_or_else(|| area_name.clone());
        let occ_title = get(cols.occ_title);

        if let Some(prev) = seen.insert((area_key.clone(), occ_code.clone()), line) {
            return Err(BlsError::Duplicate {
                line,
                area: format!("{area_name} (first at line {prev})"),
                occ: occ_code,
            });
        }
        let areas = name_areas.entry(area_name.clone()).or_default();
        if !areas.contains(&area_key) {
            areas.push(area_key.clone());
        }
        rows.push(Row {
            area_key,
            area_name,
            occ_title,
            count,
            line,
        });
    }
    if rows.is_empty() {
        return Err(BlsError::Empty);
    }

    // first-appearance label order; area names shared by several area codes
    // get the code appended so location labels stay unique
    let mut locations: Vec<String> = Vec::new();
    let mut activities: Vec<String> = Vec::new();
    let mut loc_index: HashMap<String, usize> = HashMap::new();
    let mut act_index: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<(usize, usize, u64, u64)> = Vec::new();
    for row in &rows {
        let label = if name_areas[&row.area_name].len() > 1 {
            format!("{} [{}]", row.area_name, row.area_key)
        } else {
            row.area_name.clone()
        };
        let c = *loc_index.entry(label.clone()).or_insert_with(|| {
            locations.push(label);
            locations.len() - 1
        });
        let i = *act_index.entry(row.occ_title.clone()).or_insert_with(|| {
            activities.push(row.occ_title.clone());
            activities.len() - 1
        });
        entries.push((c, i, row.count, row.line));
    }

    let ni = activities.len();
    let mut counts = vec![0u64; locations.len() * ni];
    for (c, i, v, line) in entries {
        if counts[c * ni + i] != 0 {
            return Err(BlsError::Parse {
                line,
                message: format!(
                    "distinct occupation codes share the title `{}` within one area",
                    activities[i]
                ),
            });
        }
        counts[c * ni + i] = v;
    }
    Ok(CountMatrix::new(locations, activities, counts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
AREA,AREA_NAME,OCC_CODE,OCC_TITLE,OCC_GROUP,TOT_EMP,H_MEAN
10180,\"Abilene, TX\",00-0000,All Occupations,total,67150,20.43
10180,\"Abilene, TX\",11-0000,Management Occupations,major,\"2,780\",44.72
10180,\"Abilene, TX\",45-0000,\"Farming, Fishing, and Forestry Occupations\",major,160,15.25
10180,\"Abilene, TX\",11-1011,Chief Executives,detailed,60,90.1
10420,\"Akron, OH\",11-0000,Management Occupations,major,\"14,710\",52.73
10420,\"Akron, OH\",45-0000,\"Farming, Fishing, and Forestry Occupations\",major,**,*
10420,\"Akron, OH\",51-0000,Production Occupations,major,24180,18.66
";

    #[test]
    fn reduces_to_major_groups() {
        let m = parse_bls_oes_csv(SAMPLE.as_bytes()).unwrap();
        assert_eq!(m.locations(), &["Abilene, TX", "Akron, OH"]);
        assert_eq!(m.activities(), &[
            "Management Occupations",
            "Farming, Fishing, and Forestry Occupations",
            "Production Occupations",
        ]);
        assert_eq!(m.count(0, 0), 2780, "thousands separator stripped");
        assert_eq!(m.count(0, 1), 160);
        assert_eq!(m.count(1, 1), 0, "suppressed cell is absent");
        assert_eq!(m.count(1, 2), 24180);
    }

    #[test]
    fn falls_back_to_code_pattern_without_group_column() {
        let csv = "\
AREA,AREA_NAME,OCC_CODE,OCC_TITLE,TOT_EMP
1,CityA,00-0000,All,100
1,CityA,11-0000,Management,40
1,CityA,11-1011,Chief Executives,10
1,CityA,53-0000,Transportation,60
";
        let m = parse_bls_oes_csv(csv.as_bytes()).unwrap();
        assert_eq!(m.activities(), &["Management", "Transportation"]);
        assert_eq!(m.total(), 100);
    }

    #[test]
    fn missing_columns_reported() {
        let csv = "AREA,OCC_CODE,TOT_EMP\n1,11-0000,5\n";
        assert!(matches!(
            parse_bls_oes_csv(csv.as_bytes()),
            Err(BlsError::MissingColumn("AREA_NAME"))
        ));
    }

    #[test]
    fn duplicate_area_occupation_rejected() {
        let csv = "\
AREA,AREA_NAME,OCC_CODE,OCC_TITLE,OCC_GROUP,TOT_EMP
1,CityA,11-0000,Management,major,5
1,CityA,11-0000,Management,major,6
";
        assert!(matches!(
            parse_bls_oes_csv(csv.as_bytes()),
            Err(BlsError::Duplicate { line: 3, .. })
        ));
    }

    #[test]
    fn ambiguous_area_names_disambiguated() {
        let csv = "\
AREA,AREA_NAME,OCC_CODE,OCC_TITLE,OCC_GROUP,TOT_EMP
1,Springfield,11-0000,Management,major,5
2,Springfield,11-0000,Management,major,7
";
        let m = parse_bls_oes_csv(csv.as_bytes()).unwrap();
        assert_eq!(m.locations(), &["Springfield [1]", "Springfield [2]"]);
    }

    #[test]
    fn bad_employment_is_an_error_not_suppression() {
        let csv = "\
AREA,AREA_NAME,OCC_CODE,OCC_TITLE,OCC_GROUP,TOT_EMP
1,CityA,11-0000,Management,major,abc
";
        assert!(matches!(
            parse_bls_oes_csv(csv.as_bytes()),
            Err(BlsError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn all_suppressed_is_empty() {
        let csv = "\
AREA,AREA_NAME,OCC_CODE,OCC_TITLE,OCC_GROUP,TOT_EMP
1,CityA,11-0000,Management,major,**
";
        assert!(matches!(parse_bls_oes_csv(csv.as_bytes()), Err(BlsError::Empty)));
    }
}
