//! Shared association types: per-cell estimates and labelled matrices.

use serde::Serialize;

use crate::numfmt::{fmt, round_sig, OUTPUT_SIG_DIGITS};

/// Logarithm base for information measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Natural logarithm. All reference values in the test suite are in nats.
    Nats,
    /// Base-2 logarithm.
    Bits,
}

impl LogBase {
    /// Multiplier converting a value in nats to this base.
    pub fn from_nats(self) -> f64 {
        match self {
            LogBase::Nats => 1.0,
            LogBase::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Nats => "nats",
            LogBase::Bits => "bits",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nats" | "nat" => Ok(LogBase::Nats),
            "bits" | "bit" => Ok(LogBase::Bits),
            other => Err(format!("unknown log base `{other}` (expected nats or bits)")),
        }
    }
}

/// One estimated association value.
///
/// `point` is the measure evaluated at the posterior-mean probabilities,
/// `mean` the bias-corrected posterior mean, and `sd` the posterior
/// standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssocCell {
    pub point: f64,
    pub mean: f64,
    pub sd: f64,
    pub log_base: LogBase,
}

impl AssocCell {
    /// Build from values in nats, converting to the requested base.
    pub fn from_nats(point: f64, mean: f64, sd: f64, base: LogBase) -> Self {
        let k = base.from_nats();
        AssocCell {
            point: k * point,
            mean: k * mean,
            sd: k * sd,
            log_base: base,
        }
    }
}

/// What an [`AssocMatrix`] contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssocKind {
    /// Rows are locations, columns are activities: `PMI(p_ci)`.
    LocationActivity,
    /// Symmetric activity × activity co-location matrix: `PMI(p_ij)`.
    /// Diagonal cells are self-associations (geographic concentration).
    Colocation,
}

/// Labelled grid of [`AssocCell`] with estimator metadata.
#[derive(Debug, Clone)]
pub struct AssocMatrix {
    pub kind: AssocKind,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Row-major `row_labels.len() × col_labels.len()`.
    pub cells: Vec<AssocCell>,
    pub log_base: LogBase,
    /// Prior used for the posterior, e.g. `uniform(1)`.
    pub prior: String,
    /// Which `Var[p_ij]` estimator produced the uncertainties
    /// (`exact` or `approx`); only set for co-location matrices.
    pub variance_method: Option<String>,
}

impl AssocMatrix {
    pub fn cell(&self, r: usize, c: usize) -> &AssocCell {
        &self.cells[r * self.col_labels.len() + c]
    }

    /// `row_label,col_label,point,mean,sd` with one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row_label,col_label,point,mean,sd\n");
        for (r, rl) in self.row_labels.iter().enumerate() {
            for (c, cl) in self.col_labels.iter().enumerate() {
                let cell = self.cell(r, c);
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_field(rl),
                    csv_field(cl),
                    fmt(cell.point),
                    fmt(cell.mean),
                    fmt(cell.sd),
                ));
            }
        }
        out
    }

    /// Self-describing JSON document embedding labels, prior and log base.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct CellOut {
            row: usize,
            col: usize,
            point: f64,
            mean: f64,
            sd: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            self_association: Option<bool>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            kind: AssocKind,
            log_base: &'a str,
            prior: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            variance_method: Option<&'a str>,
            #[serde(skip_serializing_if = "Option::is_none")]
            diagonal_note: Option<&'a str>,
            row_labels: &'a [String],
            col_labels: &'a [String],
            cells: Vec<CellOut>,
        }
        let coloc = self.kind == AssocKind::Colocation;
        let cells = (0..self.row_labels.len())
            .flat_map(|r| {
                (0..self.col_labels.len()).map(move |c| (r, c))
            })
            .map(|(r, c)| {
                let cell = self.cell(r, c);
                CellOut {
                    row: r,
                    col: c,
                    point: round_sig(cell.point, OUTPUT_SIG_DIGITS),
                    mean: round_sig(cell.mean, OUTPUT_SIG_DIGITS),
                    sd: round_sig(cell.sd, OUTPUT_SIG_DIGITS),
                    self_association: if coloc && r == c { Some(true) } else { None },
                }
            })
            .collect();
        let doc = Doc {
            kind: self.kind,
            log_base: self.log_base.name(),
            prior: &self.prior,
            variance_method: self.variance_method.as_deref(),
            diagonal_note: coloc
                .then_some("diagonal cells are self-association / geographic concentration"),
            row_labels: &self.row_labels,
            col_labels: &self.col_labels,
            cells,
        };
        serde_json::to_string_pretty(&doc).expect("serializable document")
    }

    /// True when every point, mean and sd is finite.
    pub fn all_finite(&self) -> bool {
        self.cells
            .iter()
            .all(|c| c.point.is_finite() && c.mean.is_finite() && c.sd.is_finite())
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
