//! Monte Carlo posterior-sampling oracle.
//!
//! The posterior is an exact Dirichlet, so independent draws from
//! `Dir(q~)` sample it directly; no Markov chain is needed and the draws
//! carry no autocorrelation. Each draw gets its own counter-derived RNG
//! stream, so the draw sequence depends only on `(seed, draw index)` and
//! evaluation order or thread count can never change the results.
//!
//! Every functional is evaluated exactly (not via the Taylor
//! approximations) on each sampled grid; comparing the resulting means and
//! standard deviations against the analytical estimates is the replication
//! of the paper's simulation check, and the tolerance policies encode its
//! findings (the analytical `PMI(p_ij)` sd may sit slightly above the
//! sampled one).

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use thiserror::Error;

use crate::assoc::{AssocCell, LogBase};
use crate::numfmt::round_sig;
use crate::posterior::Posterior;

#[derive(Debug, Error)]
pub enum McError {
    #[error("n_draws = {0} is below the minimum of {MIN_DRAWS}")]
    TooFewDraws(usize),

    #[error("{count} of {total} draws produced non-finite functional values")]
    NonFiniteDraws { count: usize, total: usize },

    #[error("target out of range: {0}")]
    BadTarget(String),
}

/// Minimum number of draws accepted by [`McConfig`].
pub const MIN_DRAWS: usize = 100;

/// Default number of posterior draws.
pub const DEFAULT_DRAWS: usize = 100_000;

/// Functional evaluated on each posterior draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// Joint probability `p_ci` of one cell.
    Pci,
    /// `PMI(p_ci)` of one cell.
    PmiCell,
    /// Co-location probability `p_ij` of one pair.
    Pij,
    /// `PMI(p_ij)` of one pair.
    PmiPair,
    /// Co-dependence `KL(p_{j|i}|p_j)` of one activity.
    KlCodependence,
}

/// Which cell/pair/activity the functional targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Cell { c: usize, i: usize },
    Pair { i: usize, j: usize },
    Activity { i: usize },
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_draws: usize,
    pub seed: u64,
    pub functional: Functional,
}

impl McConfig {
    pub fn new(n_draws: usize, seed: u64, functional: Functional) -> Result<Self, McError> {
        if n_draws < MIN_DRAWS {
            return Err(McError::TooFewDraws(n_draws));
        }
        Ok(McConfig {
            n_draws,
            seed,
            functional,
        })
    }
}

/// Summary statistics of a functional over posterior draws.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McSummary {
    pub mean: f64,
    pub sd: f64,
    /// `sd / sqrt(n_draws)`.
    pub standard_error_of_mean: f64,
    pub n_draws: usize,
}

/// One posterior draw: a strictly positive probability grid.
#[derive(Debug, Clone)]
pub struct Draw {
    p: Vec<f64>,
    row: Vec<f64>,
    col: Vec<f64>,
    ni: usize,
}

impl Draw {
    pub fn p(&self, c: usize, i: usize) -> f64 {
        self.p[c * self.ni + i]
    }

    pub fn p_location(&self, c: usize) -> f64 {
        self.row[c]
    }

    pub fn p_activity(&self, i: usize) -> f64 {
        self.col[i]
    }

    pub fn cells(&self) -> &[f64] {
        &self.p
    }

    /// `p_ij = sum_c p_ci p_cj / p_c` on this draw.
    pub fn coloc(&self, i: usize, j: usize) -> f64 {
        let mut s = 0.0;
        for c in 0..self.row.len() {
            s += self.p(c, i) * self.p(c, j) / self.row[c];
        }
        s
    }
}

/// Sample draw number `index` of the stream `(seed, n_draws)`.
///
/// A Dirichlet draw is a vector of independent Gamma(q~_ci, 1) samples
/// normalized by their sum; the per-draw ChaCha stream makes the result a
/// pure function of `(posterior, seed, index)`.
pub fn sample_draw(post: &Posterior, seed: u64, index: u64) -> Draw {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let (nc, ni) = (post.n_locations(), post.n_activities());
    let mut p = Vec::with_capacity(nc * ni);
    let mut sum = 0.0;
    for cell in post.smoothed_cells() {
        let g = Gamma::new(*cell, 1.0).expect("positive shape");
        let v: f64 = g.sample(&mut rng);
        sum += v;
        p.push(v);
    }
    for v in &mut p {
        *v /= sum;
    }
    let mut row = vec![0.0; nc];
    let mut col = vec![0.0; ni];
    for c in 0..nc {
        for i in 0..ni {
            row[c] += p[c * ni + i];
            col[i] += p[c * ni + i];
        }
    }
    Draw { p, row, col, ni }
}

/// Iterator over the reproducible draw stream.
pub fn sample_posterior<'a>(
    post: &'a Posterior,
    cfg: &McConfig,
) -> impl Iterator<Item = Draw> + 'a {
    let seed = cfg.seed;
    (0..cfg.n_draws as u64).map(move |k| sample_draw(post, seed, k))
}

fn evaluate(draw: &Draw, functional: Functional, target: Target) -> f64 {
    match (functional, target) {
        (Functional::Pci, Target::Cell { c, i }) => draw.p(c, i),
        (Functional::PmiCell, Target::Cell { c, i }) => {
            (draw.p(c, i) / (draw.p_location(c) * draw.p_activity(i))).ln()
        }
        (Functional::Pij, Target::Pair { i, j }) => draw.coloc(i, j),
        (Functional::PmiPair, Target::Pair { i, j }) => {
            (draw.coloc(i, j) / (draw.p_activity(i) * draw.p_activity(j))).ln()
        }
        (Functional::KlCodependence, Target::Activity { i }) => {
            let ni = draw.ni;
            let pi = draw.p_activity(i);
            let mut kl = 0.0;
            for j in 0..ni {
                let pij = draw.coloc(i, j);
                kl += pij / pi * (pij / (pi * draw.p_activity(j))).ln();
            }
            kl
        }
        _ => f64::NAN, // mismatched functional/target, caught by validity check
    }
}

fn check_target(post: &Posterior, functional: Functional, target: Target) -> Result<(), McError> {
    let (nc, ni) = (post.n_locations(), post.n_activities());
    let ok = match (functional, target) {
        (Functional::Pci | Functional::PmiCell, Target::Cell { c, i }) => c < nc && i < ni,
        (Functional::Pij | Functional::PmiPair, Target::Pair { i, j }) => i < ni && j < ni,
        (Functional::KlCodependence, Target::Activity { i }) => i < ni,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(McError::BadTarget(format!("{functional:?} at {target:?}")))
    }
}

/// Mean/sd of the exact functional over `cfg.n_draws` posterior draws.
pub fn mc_statistics(
    post: &Posterior,
    cfg: &McConfig,
    target: Target,
) -> Result<McSummary, McError> {
    check_target(post, cfg.functional, target)?;
    let values: Vec<f64> = sample_posterior(post, cfg)
        .map(|d| evaluate(&d, cfg.functional, target))
        .collect();
    summarize(&values)
}

/// One pass over the draw stream evaluating a functional at many targets.
///
/// Shares the identical draws across targets, which is what the
/// whole-matrix validation wants and far cheaper than per-target streams.
pub fn mc_statistics_batch(
    post: &Posterior,
    cfg: &McConfig,
    targets: &[Target],
) -> Result<Vec<McSummary>, McError> {
    for t in targets {
        check_target(post, cfg.functional, *t)?;
    }
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.n_draws); targets.len()];
    for draw in sample_posterior(post, cfg) {
        for (k, t) in targets.iter().enumerate() {
            values[k].push(evaluate(&draw, cfg.functional, *t));
        }
    }
    values.iter().map(|v| summarize(v)).collect()
}

fn summarize(values: &[f64]) -> Result<McSummary, McError> {
    let n = values.len();
    let non_finite = values.iter().filter(|v| !v.is_finite()).count();
    // strictly positive draws make non-finite values impossible in theory;
    // the guard catches numerical underflow on extreme grids
    if non_finite * 1000 > n {
        return Err(McError::NonFiniteDraws {
            count: non_finite,
            total: n,
        });
    }
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n_used = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n_used;
    let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n_used;
    let sd = var.sqrt();
    Ok(McSummary {
        mean,
        sd,
        standard_error_of_mean: sd / n_used.sqrt(),
        n_draws: n,
    })
}

/// Accept/reject bands for one analytical-vs-MC comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TolerancePolicy {
    /// Maximum |analytical mean - MC mean| in MC standard errors.
    pub max_mean_z: f64,
    /// Allowed band for analytical sd / MC sd, if the sd is checked.
    pub sd_ratio_range: Option<(f64, f64)>,
}

impl TolerancePolicy {
    /// Replication bands: means agree within 3 standard errors; the
    /// location-activity sd tracks MC closely while the co-location sd may
    /// overestimate.
    pub fn for_functional(f: Functional) -> Self {
        match f {
            Functional::Pci => TolerancePolicy {
                max_mean_z: 4.0,
                sd_ratio_range: Some((0.9, 1.1)),
            },
            Functional::PmiCell => TolerancePolicy {
                max_mean_z: 3.0,
                sd_ratio_range: Some((0.8, 1.25)),
            },
            Functional::Pij => TolerancePolicy {
                max_mean_z: 3.0,
                sd_ratio_range: Some(((0.95f64).sqrt(), (1.05f64).sqrt())),
            },
            Functional::PmiPair => TolerancePolicy {
                max_mean_z: 3.0,
                sd_ratio_range: Some((0.9, 1.5)),
            },
            Functional::KlCodependence => TolerancePolicy {
                max_mean_z: 3.0,
                sd_ratio_range: Some((0.7, 1.5)),
            },
        }
    }
}

/// Result of comparing an analytical estimate against the MC oracle.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    /// `(analytical mean - MC mean) / SE(MC mean)`.
    pub mean_z: f64,
    /// analytical sd / MC sd; NaN when the MC sd is zero.
    pub sd_ratio: f64,
    pub pass: bool,
}

/// Compare an analytical cell against an MC summary under a policy.
pub fn compare(analytical: &AssocCell, mc: &McSummary, policy: &TolerancePolicy) -> CompareReport {
    let se = mc.standard_error_of_mean;
    let mean_z = if se > 0.0 {
        (analytical.mean - mc.mean) / se
    } else if analytical.mean == mc.mean {
        0.0
    } else {
        f64::INFINITY
    };
    let sd_ratio = analytical.sd / mc.sd;
    let mut pass = mean_z.abs() <= policy.max_mean_z;
    if let Some((lo, hi)) = policy.sd_ratio_range {
        pass &= sd_ratio >= lo && sd_ratio <= hi;
    }
    CompareReport {
        mean_z,
        sd_ratio,
        pass,
    }
}
