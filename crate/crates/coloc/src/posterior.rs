//! Dirichlet-multinomial posterior over the joint location-activity distribution.
//!
//! Counts are modelled as a multinomial sample from probabilities `p_ci`;
//! with a Dirichlet prior `Dir(alpha)` the posterior is `Dir(Q + alpha)`.
//! The smoothed counts `q~_ci = q_ci + alpha_ci` and their marginals are
//! cached here, and every downstream module reads the same [`Posterior`] so
//! that point estimates, variances and Monte Carlo draws are all consistent.

use thiserror::Error;

use crate::counts::CountMatrix;

#[derive(Debug, Error)]
pub enum PosteriorError {
    #[error("prior shape ({0}, {1}) does not match counts shape ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("pseudocount alpha[{c}][{i}] = {value} must be > 0")]
    NonPositivePseudocount { c: usize, i: usize, value: f64 },

    #[error("index ({0}, {1}) out of range for ({2}, {3})")]
    IndexOutOfRange(usize, usize, usize, usize),

    #[error("total count is zero")]
    ZeroTotal,
}

/// Dirichlet prior pseudocounts `alpha_ci`.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    /// `alpha_ci = a` for every cell.
    Uniform(f64),
    /// Explicit pseudocount grid, row-major locations × activities.
    Cells {
        pseudocounts: Vec<f64>,
        n_locations: usize,
        n_activities: usize,
    },
}

impl PriorSpec {
    /// The paper's default: one pseudo-observation per cell.
    pub fn uniform(a: f64) -> Self {
        PriorSpec::Uniform(a)
    }

    /// Human-readable description recorded in output metadata.
    pub fn describe(&self) -> String {
        match self {
            PriorSpec::Uniform(a) => format!("uniform({})", crate::numfmt::fmt(*a)),
            PriorSpec::Cells { .. } => "matrix".to_string(),
        }
    }

    fn value(&self, c: usize, i: usize, n_activities: usize) -> f64 {
        match self {
            PriorSpec::Uniform(a) => *a,
            PriorSpec::Cells {
                pseudocounts,
                n_activities: na,
                ..
            } => {
                debug_assert_eq!(*na, n_activities);
                pseudocounts[c * n_activities + i]
            }
        }
    }

    fn check_shape(&self, nc: usize, ni: usize) -> Result<(), PosteriorError> {
        match self {
            PriorSpec::Uniform(a) => {
                if *a <= 0.0 || !a.is_finite() {
                    return Err(PosteriorError::NonPositivePseudocount {
                        c: 0,
                        i: 0,
                        value: *a,
                    });
                }
            }
            PriorSpec::Cells {
                pseudocounts,
                n_locations,
                n_activities,
            } => {
                if *n_locations != nc || *n_activities != ni {
                    return Err(PosteriorError::ShapeMismatch(
                        *n_locations,
                        *n_activities,
                        nc,
                        ni,
                    ));
                }
                for c in 0..nc {
                    for i in 0..ni {
                        let v = pseudocounts[c * ni + i];
                        if v <= 0.0 || !v.is_finite() {
                            return Err(PosteriorError::NonPositivePseudocount { c, i, value: v });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Smoothed counts `q~_ci = q_ci + alpha_ci` with cached marginals.
///
/// Immutable after construction; shareable across threads.
#[derive(Debug, Clone)]
pub struct Posterior {
    smoothed: Vec<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
    total: f64,
    locations: Vec<String>,
    activities: Vec<String>,
    prior_description: String,
}

impl Posterior {
    /// `P(p | Q, alpha) = Dir(Q + alpha)`.
    pub fn new(m: &CountMatrix, prior: &PriorSpec) -> Result<Self, PosteriorError> {
        let (nc, ni) = (m.n_locations(), m.n_activities());
        prior.check_shape(nc, ni)?;
        let mut smoothed = vec![0.0; nc * ni];
        for c in 0..nc {
            for i in 0..ni {
                smoothed[c * ni + i] = m.count(c, i) as f64 + prior.value(c, i, ni);
            }
        }
        let mut row_marginals = vec![0.0; nc];
        let mut col_marginals = vec![0.0; ni];
        let mut total = 0.0;
        for c in 0..nc {
            for i in 0..ni {
                let v = smoothed[c * ni + i];
                row_marginals[c] += v;
                col_marginals[i] += v;
                total += v;
            }
        }
        Ok(Self {
            smoothed,
            row_marginals,
            col_marginals,
            total,
            locations: m.locations().to_vec(),
            activities: m.activities().to_vec(),
            prior_description: prior.describe(),
        })
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

    pub fn prior_description(&self) -> &str {
        &self.prior_description
    }

    /// `q~_ci`.
    pub fn smoothed(&self, c: usize, i: usize) -> f64 {
        self.smoothed[c * self.activities.len() + i]
    }

    pub fn smoothed_cells(&self) -> &[f64] {
        &self.smoothed
    }

    /// `q~_c`.
    pub fn location_marginal(&self, c: usize) -> f64 {
        self.row_marginals[c]
    }

    /// `q~_i`.
    pub fn activity_marginal(&self, i: usize) -> f64 {
        self.col_marginals[i]
    }

    /// `q~ = q + alpha`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn check_index(&self, c: usize, i: usize) -> Result<(), PosteriorError> {
        if c >= self.n_locations() || i >= self.n_activities() {
            return Err(PosteriorError::IndexOutOfRange(
                c,
                i,
                self.n_locations(),
                self.n_activities(),
            ));
        }
        Ok(())
    }

    /// Posterior variance of `p_ci`:
    /// `Var[p_ci] = (q~_ci/q~)(1 - q~_ci/q~) / (q~ + 1)`.
    pub fn cell_variance(&self, c: usize, i: usize) -> Result<f64, PosteriorError> {
        self.check_index(c, i)?;
        let p = self.smoothed(c, i) / self.total;
        Ok(p * (1.0 - p) / (self.total + 1.0))
    }

    /// Posterior-mean probabilities `p^_ci = q~_ci/q~` with marginals.
    pub fn point_estimates(&self) -> JointProbEstimate {
        let q = self.total;
        JointProbEstimate {
            p: self.smoothed.iter().map(|&v| v / q).collect(),
            row: self.row_marginals.iter().map(|&v| v / q).collect(),
            col: self.col_marginals.iter().map(|&v| v / q).collect(),
            locations: self.locations.clone(),
            activities: self.activities.clone(),
        }
    }
}

/// A joint probability grid with cached marginals.
///
/// Produced either from a [`Posterior`] (all entries strictly positive) or
/// as a maximum-likelihood estimate from raw counts (zero cells allowed).
#[derive(Debug, Clone)]
pub struct JointProbEstimate {
    p: Vec<f64>,
    row: Vec<f64>,
    col: Vec<f64>,
    locations: Vec<String>,
    activities: Vec<String>,
}

impl JointProbEstimate {
    /// Maximum-likelihood estimates `p^_ci = q_ci / q` (no pseudocounts).
    ///
    /// Zero counts give zero probabilities; the PMI of such cells is
    /// `-inf`, which is why the Bayesian path is the default.
    pub fn ml(m: &CountMatrix) -> Result<Self, PosteriorError> {
        let q = m.total();
        if q == 0 {
            return Err(PosteriorError::ZeroTotal);
        }
        let q = q as f64;
        let (nc, ni) = (m.n_locations(), m.n_activities());
        let p: Vec<f64> = m.counts().iter().map(|&v| v as f64 / q).collect();
        let mut row = vec![0.0; nc];
        let mut col = vec![0.0; ni];
        for c in 0..nc {
            for i in 0..ni {
                row[c] += p[c * ni + i];
                col[i] += p[c * ni + i];
            }
        }
        Ok(Self {
            p,
            row,
            col,
            locations: m.locations().to_vec(),
            activities: m.activities().to_vec(),
        })
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

    /// `p_ci`.
    pub fn p(&self, c: usize, i: usize) -> f64 {
        self.p[c * self.activities.len() + i]
    }

    pub fn cells(&self) -> &[f64] {
        &self.p
    }

    /// `p_c`.
    pub fn p_location(&self, c: usize) -> f64 {
        self.row[c]
    }

    /// `p_i`.
    pub fn p_activity(&self, i: usize) -> f64 {
        self.col[i]
    }

    pub fn check_index(&self, c: usize, i: usize) -> Result<(), PosteriorError> {
        if c >= self.n_locations() || i >= self.n_activities() {
            return Err(PosteriorError::IndexOutOfRange(
                c,
                i,
                self.n_locations(),
                self.n_activities(),
            ));
        }
        Ok(())
    }
}
