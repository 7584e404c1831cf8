//! Co-location distribution `p_ij` and pairwise association `PMI(p_ij)`.
//!
//! `p_ij` is the probability that two units sampled from the same (random)
//! location have activity types `i` and `j`:
//!
//! ```text
//! p_ij = sum_c p_{i|c} p_{j|c} p_c
//! ```
//!
//! Under the Dirichlet posterior the within-location conditionals are
//! independent of the location sizes, so the posterior mean and variance of
//! `p_ij` have closed forms built from Dirichlet product moments. The exact
//! variance keeps the location-size uncertainty and the cross-location
//! covariances `Cov[p_c, p_c'] = -p^_c p^_c' / (q~+1)`; the approximate
//! variance treats `p_c` as known, which is cheaper conceptually but only
//! adequate when no single location dominates an activity.

use crate::assoc::{AssocCell, AssocKind, AssocMatrix, LogBase};
use crate::location::{pmi_nats, AssocError};
use crate::posterior::{JointProbEstimate, Posterior};

/// Which `Var[p_ij]` estimator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMethod {
    Exact,
    Approximate,
}

impl VarianceMethod {
    /// Exact up to `threshold` posterior cells, approximate beyond.
    pub fn auto(post: &Posterior, threshold: usize) -> Self {
        if post.n_locations() * post.n_activities() <= threshold {
            VarianceMethod::Exact
        } else {
            VarianceMethod::Approximate
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VarianceMethod::Exact => "exact",
            VarianceMethod::Approximate => "approx",
        }
    }
}

/// Default cell-count threshold for switching to the approximate variance.
pub const DEFAULT_APPROX_THRESHOLD: usize = 10_000;

/// Symmetric activity × activity co-location probabilities.
#[derive(Debug, Clone)]
pub struct ColocDistribution {
    p: Vec<f64>, // row-major N_i × N_i, exactly symmetric
    marginals: Vec<f64>,
    activities: Vec<String>,
}

impl ColocDistribution {
    /// `p_ij`.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.activities.len() + j]
    }

    /// `p_i` (also the row/column sums of the grid).
    pub fn marginal(&self, i: usize) -> f64 {
        self.marginals[i]
    }

    pub fn n_activities(&self) -> usize {
        self.activities.len()
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn cells(&self) -> &[f64] {
        &self.p
    }

    /// `PMI(p_ij)` in nats on this grid; `-inf` where `p_ij = 0`.
    pub fn pmi_point(&self, i: usize, j: usize) -> f64 {
        pmi_nats(self.p(i, j), self.marginals[i], self.marginals[j])
    }
}

/// Plug-in co-location distribution from a joint estimate (Eq. `p_ij`),
/// one evaluation per unordered pair.
pub fn coloc_distribution(j: &JointProbEstimate) -> ColocDistribution {
    let (nc, ni) = (j.n_locations(), j.n_activities());
    let mut p = vec![0.0; ni * ni];
    for a in 0..ni {
        for b in a..ni {
            let mut s = 0.0;
            for c in 0..nc {
                let rc = j.p_location(c);
                if rc > 0.0 {
                    s += j.p(c, a) * j.p(c, b) / rc;
                }
            }
            p[a * ni + b] = s;
            p[b * ni + a] = s;
        }
    }
    let marginals = (0..ni).map(|i| j.p_activity(i)).collect();
    ColocDistribution {
        p,
        marginals,
        activities: j.activities().to_vec(),
    }
}

/// Posterior mean of `p_ij` via Dirichlet product moments:
/// `E[p_ij] = sum_c E[p_{i|c} p_{j|c}] E[p_c]` with
/// `E[p_{i|c}p_{j|c}] = q~_ci q~_cj / (q~_c (q~_c+1))` for `i != j` and
/// `q~_ci (q~_ci+1) / (q~_c (q~_c+1))` on the diagonal.
pub fn coloc_posterior_mean(post: &Posterior) -> ColocDistribution {
    let (nc, ni) = (post.n_locations(), post.n_activities());
    let q = post.total();
    let mut p = vec![0.0; ni * ni];
    for a in 0..ni {
        for b in a..ni {
            let mut s = 0.0;
            for c in 0..nc {
                let rc = post.location_marginal(c);
                s += pair_moment(post.smoothed(c, a), post.smoothed(c, b), rc, a == b)
                    * (rc / q);
            }
            p[a * ni + b] = s;
            p[b * ni + a] = s;
        }
    }
    let marginals = (0..ni).map(|i| post.activity_marginal(i) / q).collect();
    ColocDistribution {
        p,
        marginals,
        activities: post.activities().to_vec(),
    }
}

/// `E[p_{i|c} p_{j|c}]`.
fn pair_moment(ai: f64, aj: f64, s: f64, diagonal: bool) -> f64 {
    if diagonal {
        ai * (ai + 1.0) / (s * (s + 1.0))
    } else {
        ai * aj / (s * (s + 1.0))
    }
}

/// `E[p_{i|c}^2 p_{j|c}^2]` (fourth Beta moment on the diagonal).
fn pair_moment2(ai: f64, aj: f64, s: f64, diagonal: bool) -> f64 {
    let denom = s * (s + 1.0) * (s + 2.0) * (s + 3.0);
    if diagonal {
        ai * (ai + 1.0) * (ai + 2.0) * (ai + 3.0) / denom
    } else {
        ai * (ai + 1.0) * aj * (aj + 1.0) / denom
    }
}

/// Exact posterior variance of `p_ij` (product-moment formula, Dirichlet
/// covariances across locations, fourth-moment diagonal branch).
pub fn var_pij_exact(post: &Posterior, i: usize, j: usize) -> Result<f64, AssocError> {
    post.check_index(0, i)?;
    post.check_index(0, j)?;
    // canonical pair order keeps the result bit-identical under (i, j) swap
    let (i, j) = (i.min(j), i.max(j));
    let q = post.total();
    let diag = i == j;
    let mut e_pij = 0.0;
    let mut independent_terms = 0.0;
    let mut sum_sq = 0.0; // sum_c (M_c E[p_c])^2
    for c in 0..post.n_locations() {
        let s = post.location_marginal(c);
        let (ai, aj) = (post.smoothed(c, i), post.smoothed(c, j));
        let m = pair_moment(ai, aj, s, diag);
        let var_a = pair_moment2(ai, aj, s, diag) - m * m;
        let e_pc = s / q;
        let var_pc = e_pc * (1.0 - e_pc) / (q + 1.0);
        e_pij += m * e_pc;
        independent_terms += var_a * e_pc * e_pc + var_pc * m * m + var_a * var_pc;
        sum_sq += (m * e_pc) * (m * e_pc);
    }
    // sum_{c != c'} M_c M_c' Cov[p_c, p_c'] with Cov = -p^_c p^_c' / (q~+1)
    let cross = -(e_pij * e_pij - sum_sq) / (q + 1.0);
    Ok((independent_terms + cross).max(0.0))
}

/// Approximate posterior variance of `p_ij`, treating the location sizes as
/// known: `Var[p_ij] ~= sum_c p^_c^2 Var[p_{i|c} p_{j|c}]`.
pub fn var_pij_approx(post: &Posterior, i: usize, j: usize) -> Result<f64, AssocError> {
    post.check_index(0, i)?;
    post.check_index(0, j)?;
    let (i, j) = (i.min(j), i.max(j));
    let q = post.total();
    let diag = i == j;
    let mut var = 0.0;
    for c in 0..post.n_locations() {
        let s = post.location_marginal(c);
        let (ai, aj) = (post.smoothed(c, i), post.smoothed(c, j));
        let m = pair_moment(ai, aj, s, diag);
        let var_a = pair_moment2(ai, aj, s, diag) - m * m;
        let e_pc = s / q;
        var += e_pc * e_pc * var_a;
    }
    Ok(var.max(0.0))
}

/// `PMI(p_ij)` with posterior mean and sd.
///
/// The point estimate applies the PMI to the plug-in distribution of the
/// posterior-mean probabilities (so independence cases are exactly zero);
/// the bias-corrected mean and the delta-method sd expand around the
/// product-moment posterior mean `E[p_ij]`, which is where the posterior
/// of `p_ij` is actually centered.
pub fn coloc_pmi(post: &Posterior, i: usize, j: usize) -> Result<AssocCell, AssocError> {
    coloc_pmi_with(post, i, j, VarianceMethod::auto(post, DEFAULT_APPROX_THRESHOLD), LogBase::Nats)
}

pub fn coloc_pmi_with(
    post: &Posterior,
    i: usize,
    j: usize,
    method: VarianceMethod,
    base: LogBase,
) -> Result<AssocCell, AssocError> {
    post.check_index(0, i)?;
    post.check_index(0, j)?;
    let plugin = coloc_distribution(&post.point_estimates());
    let center = coloc_posterior_mean(post);
    Ok(coloc_cell(post, &plugin, &center, i, j, method, base))
}

fn coloc_cell(
    post: &Posterior,
    plugin: &ColocDistribution,
    center: &ColocDistribution,
    i: usize,
    j: usize,
    method: VarianceMethod,
    base: LogBase,
) -> AssocCell {
    // canonical order: bit-identical results under (i, j) swap
    let (i, j) = (i.min(j), i.max(j));
    let var = match method {
        VarianceMethod::Exact => var_pij_exact(post, i, j),
        VarianceMethod::Approximate => var_pij_approx(post, i, j),
    }
    .expect("in-range index");
    let point = plugin.pmi_point(i, j);
    let p = center.p(i, j);
    let (pi, pj) = (center.marginal(i), center.marginal(j));
    let curvature = -1.0 / (p * p) + 1.0 / (pi * pi) + 1.0 / (pj * pj);
    let slope = 1.0 / p - 1.0 / pi - 1.0 / pj;
    let mean = pmi_nats(p, pi, pj) + 0.5 * var * curvature;
    AssocCell::from_nats(point, mean, (var * slope * slope).sqrt(), base)
}

/// Full symmetric co-location association matrix.
pub fn coloc_association_matrix(
    post: &Posterior,
    base: LogBase,
    method: VarianceMethod,
) -> AssocMatrix {
    let ni = post.n_activities();
    let plugin = coloc_distribution(&post.point_estimates());
    let center = coloc_posterior_mean(post);
    let mut cells = vec![
        AssocCell {
            point: 0.0,
            mean: 0.0,
            sd: 0.0,
            log_base: base
        };
        ni * ni
    ];
    for i in 0..ni {
        for j in i..ni {
            let cell = coloc_cell(post, &plugin, &center, i, j, method, base);
            cells[i * ni + j] = cell;
            cells[j * ni + i] = cell;
        }
    }
    AssocMatrix {
        kind: AssocKind::Colocation,
        row_labels: post.activities().to_vec(),
        col_labels: post.activities().to_vec(),
        cells,
        log_base: base,
        prior: post.prior_description().to_string(),
        variance_method: Some(method.name().to_string()),
    }
}

/// Ellison-Glaeser pairwise co-agglomeration index
/// `gamma_ij = sum_c (p_{c|i} - p_c)(p_{c|j} - p_c) / (1 - sum_c p_c^2)`,
/// with total-activity shares `p_c` as the reference distribution.
///
/// The diagonal approximates the single-activity agglomeration index.
pub fn eg_coagglomeration(
    j: &JointProbEstimate,
    i: usize,
    j2: usize,
) -> Result<f64, AssocError> {
    j.check_index(0, i)?;
    j.check_index(0, j2)?;
    let nc = j.n_locations();
    let mut denom = 1.0;
    for c in 0..nc {
        denom -= j.p_location(c) * j.p_location(c);
    }
    if denom <= 0.0 {
        return Err(AssocError::DegenerateGeography);
    }
    let (pi, pj) = (j.p_activity(i), j.p_activity(j2));
    if pi == 0.0 || pj == 0.0 {
        return Err(AssocError::ZeroMarginal {
            what: "activity",
            index: if pi == 0.0 { i } else { j2 },
        });
    }
    let mut num = 0.0;
    for c in 0..nc {
        let pc = j.p_location(c);
        num += (j.p(c, i) / pi - pc) * (j.p(c, j2) / pj - pc);
    }
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::CountMatrix;
    use crate::posterior::PriorSpec;

    fn two_block() -> CountMatrix {
        CountMatrix::from_rows(&["A", "B"], &["x", "y"], &[&[10, 0], &[0, 10]]).unwrap()
    }

    fn posterior(m: &CountMatrix) -> Posterior {
        Posterior::new(m, &PriorSpec::uniform(1.0)).unwrap()
    }

    #[test]
    fn plugin_two_block_ml() {
        let j = JointProbEstimate::ml(&two_block()).unwrap();
        let d = coloc_distribution(&j);
        assert_eq!(d.p(0, 0), 0.5);
        assert_eq!(d.p(0, 1), 0.0);
        assert_eq!(d.p(1, 1), 0.5);
        assert!((d.pmi_point(0, 0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(d.pmi_point(0, 1), f64::NEG_INFINITY);
    }

    #[test]
    fn single_location_factorizes() {
        let m = CountMatrix::from_rows(&["A"], &["x", "y", "z"], &[&[5, 3, 2]]).unwrap();
        let j = JointProbEstimate::ml(&m).unwrap();
        let d = coloc_distribution(&j);
        for i in 0..3 {
            for k in 0..3 {
                assert!((d.p(i, k) - j.p_activity(i) * j.p_activity(k)).abs() < 1e-15);
                assert!(d.pmi_point(i, k).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bayesian_distribution_invariants() {
        let post = posterior(&two_block());
        for d in [coloc_distribution(&post.point_estimates()), coloc_posterior_mean(&post)] {
            let ni = d.n_activities();
            let total: f64 = d.cells().iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            for i in 0..ni {
                let row: f64 = (0..ni).map(|k| d.p(i, k)).sum();
                assert!((row - d.marginal(i)).abs() < 1e-12);
                assert!(d.p(i, i) >= d.marginal(i) * d.marginal(i) - 1e-12);
                for k in 0..ni {
                    assert!(d.p(i, k) > 0.0);
                    assert_eq!(d.p(i, k), d.p(k, i));
                }
            }
        }
    }

    #[test]
    fn product_moment_mean_two_block() {
        // E[p_11] = sum_c E[p_{1|c}^2] E[p_c], frozen: 0.42948717948717946
        let post = posterior(&two_block());
        let d = coloc_posterior_mean(&post);
        assert!((d.p(0, 0) - 0.4294871794871795).abs() < 1e-14);
        // plug-in differs: (11/12)^2/2 + (1/12)^2/2
        let plug = coloc_distribution(&post.point_estimates());
        assert!((plug.p(0, 0) - 0.4236111111111111).abs() < 1e-14);
    }

    #[test]
    fn coloc_pmi_symmetry_and_diagonal_sign() {
        let m = CountMatrix::from_rows(&["A", "B", "C"], &["x", "y", "z"], &[
            &[9, 1, 4],
            &[2, 8, 3],
            &[5, 5, 7],
        ])
        .unwrap();
        let post = posterior(&m);
        for i in 0..3 {
            for j in 0..3 {
                let a = coloc_pmi(&post, i, j).unwrap();
                let b = coloc_pmi(&post, j, i).unwrap();
                assert_eq!(a, b);
            }
            let diag = coloc_pmi(&post, i, i).unwrap();
            assert!(diag.point >= -1e-12, "self-association must be nonnegative");
        }
        assert!(coloc_pmi(&post, 0, 3).is_err());
    }

    #[test]
    fn single_location_pmi_zero() {
        let m = CountMatrix::from_rows(&["A"], &["x", "y"], &[&[5, 3]]).unwrap();
        let post = posterior(&m);
        for i in 0..2 {
            for j in 0..2 {
                assert!(coloc_pmi(&post, i, j).unwrap().point.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_posterior_variance_zero() {
        // single cell: p_{i|c} = 1 and p_c = 1 with no uncertainty
        let m = CountMatrix::from_rows(&["A"], &["x"], &[&[9]]).unwrap();
        let post = posterior(&m);
        assert!(var_pij_exact(&post, 0, 0).unwrap() < 1e-30);
        assert!(var_pij_approx(&post, 0, 0).unwrap() < 1e-30);
    }

    #[test]
    fn variances_nonnegative_small_fixture() {
        let m = CountMatrix::from_rows(&["A", "B"], &["x", "y", "z"], &[
            &[7, 1, 2],
            &[3, 4, 3],
        ])
        .unwrap();
        let post = posterior(&m);
        for i in 0..3 {
            for j in 0..3 {
                assert!(var_pij_exact(&post, i, j).unwrap() >= 0.0);
                assert!(var_pij_approx(&post, i, j).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn approx_near_exact_at_large_q() {
        // evenly spread counts, q ~ 2e4: location-size uncertainty is minor
        let mut rows: Vec<Vec<u64>> = Vec::new();
        let mut s = 12345u64;
        for _ in 0..5 {
            let mut row = Vec::new();
            for _ in 0..5 {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                row.push(500 + (s >> 54)); // 500..=1523
            }
            rows.push(row);
        }
        let refs: Vec<&[u64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = CountMatrix::from_rows(
            &["A", "B", "C", "D", "E"],
            &["v", "w", "x", "y", "z"],
            &refs,
        )
        .unwrap();
        assert!(m.total() >= 10_000);
        let post = posterior(&m);
        for i in 0..5 {
            for j in 0..5 {
                let exact = var_pij_exact(&post, i, j).unwrap();
                let approx = var_pij_approx(&post, i, j).unwrap();
                assert!(
                    (approx / exact - 1.0).abs() < 0.1,
                    "approx/exact = {} at ({i},{j})",
                    approx / exact
                );
            }
        }
    }

    #[test]
    fn variance_method_switch() {
        let post = posterior(&two_block());
        assert_eq!(VarianceMethod::auto(&post, 10_000), VarianceMethod::Exact);
        assert_eq!(VarianceMethod::auto(&post, 3), VarianceMethod::Approximate);
    }

    #[test]
    fn eg_two_block_ml() {
        let j = JointProbEstimate::ml(&two_block()).unwrap();
        assert!((eg_coagglomeration(&j, 0, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((eg_coagglomeration(&j, 0, 1).unwrap() - (-1.0)).abs() < 1e-15);
        assert_eq!(
            eg_coagglomeration(&j, 0, 1).unwrap(),
            eg_coagglomeration(&j, 1, 0).unwrap()
        );
    }

    #[test]
    fn eg_zero_for_proportional_activity() {
        // activity y distributed exactly proportional to location sizes
        let m = CountMatrix::from_rows(&["A", "B"], &["x", "y"], &[&[6, 4], &[9, 6]]).unwrap();
        let j = JointProbEstimate::ml(&m).unwrap();
        assert!(eg_coagglomeration(&j, 1, 1).unwrap().abs() < 1e-12);
        assert!(eg_coagglomeration(&j, 0, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn eg_single_location_degenerate() {
        let m = CountMatrix::from_rows(&["A"], &["x", "y"], &[&[5, 3]]).unwrap();
        let j = JointProbEstimate::ml(&m).unwrap();
        assert!(matches!(
            eg_coagglomeration(&j, 0, 1),
            Err(AssocError::DegenerateGeography)
        ));
    }

    #[test]
    fn matrix_is_symmetric_and_flags_variance_method() {
        let post = posterior(&two_block());
        let m = coloc_association_matrix(&post, LogBase::Nats, VarianceMethod::Exact);
        assert_eq!(m.variance_method.as_deref(), Some("exact"));
        assert_eq!(m.cell(0, 1), m.cell(1, 0));
        assert!(m.all_finite());
    }
}
