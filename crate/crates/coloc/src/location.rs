//! Location-activity association: `PMI(p_ci)` with posterior uncertainty,
//! and the revealed-comparative-advantage index it generalizes.
//!
//! The posterior mean corrects the plug-in estimate for Jensen bias via a
//! second-order Taylor expansion around `p^_ci`, and the standard deviation
//! comes from the delta method, both treating the cell probability as the
//! random input with its marginals co-moving:
//!
//! ```text
//! E[PMI]   ~= PMI(p^) + Var[p_ci]/2 * (-1/p^_ci^2 + 1/p^_c^2 + 1/p^_i^2)
//! Var[PMI] ~= Var[p_ci] * (1/p^_ci - 1/p^_c - 1/p^_i)^2
//! ```

use thiserror::Error;

use crate::assoc::{AssocCell, AssocKind, AssocMatrix, LogBase};
use crate::counts::CountMatrix;
use crate::posterior::{JointProbEstimate, Posterior, PosteriorError};

#[derive(Debug, Error)]
pub enum AssocError {
    #[error(transparent)]
    Posterior(#[from] PosteriorError),

    #[error("RCA undefined: zero marginal for ({what} index {index})")]
    UndefinedRca { what: &'static str, index: usize },

    #[error("zero {what} marginal at index {index}: conditional distribution undefined")]
    ZeroMarginal { what: &'static str, index: usize },

    #[error("degenerate geography: a single effective location leaves 1 - sum p_c^2 = 0")]
    DegenerateGeography,
}

/// `PMI(p_ci) = log(p_ci / (p_c p_i))` in nats, on the given estimates.
///
/// Returns `-inf` for zero cells of a maximum-likelihood estimate; always
/// finite on posterior-derived estimates.
pub fn pmi_point(j: &JointProbEstimate, c: usize, i: usize) -> Result<f64, AssocError> {
    j.check_index(c, i)?;
    Ok(pmi_nats(j.p(c, i), j.p_location(c), j.p_activity(i)))
}

pub(crate) fn pmi_nats(p: f64, pc: f64, pi: f64) -> f64 {
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    p.ln() - pc.ln() - pi.ln()
}

/// Bias-corrected posterior mean of `PMI(p_ci)` in nats.
pub fn pmi_posterior_mean(post: &Posterior, c: usize, i: usize) -> Result<f64, AssocError> {
    post.check_index(c, i)?;
    let (p, pc, pi) = cell_probs(post, c, i);
    let var = post.cell_variance(c, i)?;
    let curvature = -1.0 / (p * p) + 1.0 / (pc * pc) + 1.0 / (pi * pi);
    Ok(pmi_nats(p, pc, pi) + 0.5 * var * curvature)
}

/// Posterior standard deviation of `PMI(p_ci)` in nats (delta method).
pub fn pmi_posterior_sd(post: &Posterior, c: usize, i: usize) -> Result<f64, AssocError> {
    post.check_index(c, i)?;
    let (p, pc, pi) = cell_probs(post, c, i);
    let var = post.cell_variance(c, i)?;
    let slope = 1.0 / p - 1.0 / pc - 1.0 / pi;
    Ok((var * slope * slope).sqrt())
}

fn cell_probs(post: &Posterior, c: usize, i: usize) -> (f64, f64, f64) {
    let q = post.total();
    (
        post.smoothed(c, i) / q,
        post.location_marginal(c) / q,
        post.activity_marginal(i) / q,
    )
}

/// Balassa revealed comparative advantage `(q_ci/q_c) / (q_i/q)` on raw
/// counts. Its logarithm equals the maximum-likelihood `PMI(p_ci)` whenever
/// `q_ci > 0`.
pub fn rca(m: &CountMatrix, c: usize, i: usize) -> Result<f64, AssocError> {
    if c >= m.n_locations() || i >= m.n_activities() {
        return Err(PosteriorError::IndexOutOfRange(c, i, m.n_locations(), m.n_activities()).into());
    }
    let qc = m.location_total(c);
    let qi = m.activity_total(i);
    if qc == 0 {
        return Err(AssocError::UndefinedRca {
            what: "location",
            index: c,
        });
    }
    if qi == 0 {
        return Err(AssocError::UndefinedRca {
            what: "activity",
            index: i,
        });
    }
    let q = m.total() as f64;
    Ok((m.count(c, i) as f64 / qc as f64) / (qi as f64 / q))
}

/// Assemble the full `N_c × N_i` association matrix with uncertainties.
pub fn location_association_matrix(post: &Posterior, base: LogBase) -> AssocMatrix {
    let (nc, ni) = (post.n_locations(), post.n_activities());
    let mut cells = Vec::with_capacity(nc * ni);
    for c in 0..nc {
        for i in 0..ni {
            let (p, pc, pi) = cell_probs(post, c, i);
            let var = post.cell_variance(c, i).expect("in-range index");
            let point = pmi_nats(p, pc, pi);
            let curvature = -1.0 / (p * p) + 1.0 / (pc * pc) + 1.0 / (pi * pi);
            let slope = 1.0 / p - 1.0 / pc - 1.0 / pi;
            cells.push(AssocCell::from_nats(
                point,
                point + 0.5 * var * curvature,
                (var * slope * slope).sqrt(),
                base,
            ));
        }
    }
    AssocMatrix {
        kind: AssocKind::LocationActivity,
        row_labels: post.locations().to_vec(),
        col_labels: post.activities().to_vec(),
        cells,
        log_base: base,
        prior: post.prior_description().to_string(),
        variance_method: None,
    }
}
