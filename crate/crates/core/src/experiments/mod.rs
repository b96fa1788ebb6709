//! Rare-event probability estimation over an ε-grid, slope and ratio studies, and result
//! persistence.

pub mod config;
pub mod output;

pub use config::{ConfigMap, ExperimentConfig, Thresholds};
pub use output::{write_outputs, OutputPaths};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cadlag::uniform_distance;
use crate::cluster::{estimate_cjk_tilde, ClusterBracket, ClusterSampleSpec};
use crate::error::{domain, Error, Result};
use crate::levy::{ScaledPathSampler, TailModel};
use crate::rate::{argmin_jk, inf_rate_over_set, search_oracle, Witness};
use crate::sets::SetOracle;
use crate::solution::{apply_f, euler_solve_sde};
use crate::stats::{weighted_line_fit, Proportion};

/// Version of the JSON result layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Samples per parallel task.
const CHUNK: u64 = 256;

/// Largest tolerated fraction of audited paths on which the two integrators disagree.
const MAX_AUDIT_DISAGREEMENT: f64 = 0.005;

/// Estimate of `P(Y^ε ∈ A)` for one ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub eps: f64,
    pub n: u64,
    pub inner: Proportion,
    pub outer: Proportion,
    /// Samples outside the declared ball of the set.
    pub out_of_ball: u64,
    pub audited: u64,
    pub disagreements: u64,
    pub max_audit_gap: f64,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    inner: u64,
    outer: u64,
    out_of_ball: u64,
    audited: u64,
    disagreements: u64,
    max_gap: f64,
}

impl Counts {
    fn merge(self, o: Self) -> Self {
        Self {
            inner: self.inner + o.inner,
            outer: self.outer + o.outer,
            out_of_ball: self.out_of_ball + o.out_of_ball,
            audited: self.audited + o.audited,
            disagreements: self.disagreements + o.disagreements,
            max_gap: self.max_gap.max(o.max_gap),
        }
    }
}

/// Samples `n` noise paths at `eps`, solves the SDE with the Euler integrator and counts hits of
/// `A°` and `Ā`. A deterministic `audit_fraction` of the samples is also solved with `F` and
/// compared in the uniform norm.
pub fn estimate_probability(
    cfg: &ExperimentConfig,
    set: &dyn SetOracle,
    eps: f64,
    n: u64,
) -> Result<ProbabilityEstimate> {
    if n == 0 {
        return domain("at least one sample is required");
    }
    let sampler = ScaledPathSampler::new(&cfg.model, &cfg.sim_for(eps))?;
    let audit_every = if cfg.audit_fraction > 0.0 {
        (1.0 / cfg.audit_fraction).round().max(1.0) as u64
    } else {
        u64::MAX
    };
    let drift = &cfg.drift;
    let counts = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<Counts> {
            let mut t = Counts::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let noise = sampler.sample(i);
                let y = if drift.is_zero() { noise.clone() } else { euler_solve_sde(drift, &noise, cfg.euler_step)? };
                if set.contains_inner(&y) {
                    t.inner += 1;
                }
                if set.contains_outer(&y) {
                    t.outer += 1;
                }
                if set.outside_declared_ball(&y) {
                    t.out_of_ball += 1;
                }
                if i % audit_every == 0 {
                    let f = apply_f(drift, &noise, &cfg.solver)?;
                    let gap = uniform_distance(&f, &y);
                    t.audited += 1;
                    t.max_gap = t.max_gap.max(gap);
                    if gap > cfg.audit_tol {
                        t.disagreements += 1;
                    }
                }
            }
            Ok(t)
        })
        .try_reduce(Counts::default, |a, b| Ok(a.merge(b)))?;
    if counts.audited > 0 && counts.disagreements as f64 > MAX_AUDIT_DISAGREEMENT * counts.audited as f64 {
        return Err(Error::IntegratorInconsistency {
            disagreements: counts.disagreements as usize,
            audited: counts.audited as usize,
        });
    }
    Ok(ProbabilityEstimate {
        eps,
        n,
        inner: Proportion::new(counts.inner, n),
        outer: Proportion::new(counts.outer, n),
        out_of_ball: counts.out_of_ball,
        audited: counts.audited,
        disagreements: counts.disagreements,
        max_audit_gap: counts.max_gap,
    })
}

/// One row of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub eps: f64,
    pub n: u64,
    pub hits_inner: u64,
    pub hits_outer: u64,
    pub p_inner: f64,
    pub p_outer: f64,
    /// Lower Wilson end for `A°` and upper Wilson end for `Ā`.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ratio: Option<f64>,
    pub normalizer: Option<f64>,
    pub out_of_ball: u64,
    pub audited: u64,
    pub disagreements: u64,
    pub max_audit_gap: f64,
}

impl From<&ProbabilityEstimate> for PointRecord {
    fn from(e: &ProbabilityEstimate) -> Self {
        Self {
            eps: e.eps,
            n: e.n,
            hits_inner: e.inner.hits,
            hits_outer: e.outer.hits,
            p_inner: e.inner.p_hat,
            p_outer: e.outer.p_hat,
            ci_lo: e.inner.ci95.0,
            ci_hi: e.outer.ci95.1,
            ratio: None,
            normalizer: None,
            out_of_ball: e.out_of_ball,
            audited: e.audited,
            disagreements: e.disagreements,
            max_audit_gap: e.max_audit_gap,
        }
    }
}

/// Outcome of the slope study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub slope: f64,
    pub slope_se: f64,
    pub slope_ci95: (f64, f64),
    pub intercept: f64,
    pub theory_slope: f64,
    pub accepted: (f64, f64),
    /// Epsilons left out of the fit for having too few hits.
    pub excluded_eps: Vec<f64>,
    pub witness: Option<Witness>,
}

/// Outcome of the ratio study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    /// `bracket` when the argmin exists, `vanishing` otherwise.
    pub branch: String,
    pub j: usize,
    pub k: usize,
    pub ratios: Vec<f64>,
    /// Relative changes between the last three ratios.
    pub trend: Vec<f64>,
    /// `c₊^j c₋^k` scaling the cluster bracket onto the ratio scale.
    pub bracket_scale: f64,
    /// `[lower CI end for A°, upper CI end for Ā]` on the ratio scale.
    pub bracket: Option<(f64, f64)>,
    pub bracket_values: Option<(f64, f64)>,
    pub cluster: Option<ClusterBracket>,
    pub final_ratio_ci: (f64, f64),
    pub argmin_ties: usize,
}

/// Persisted result of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub kind: String,
    pub name: String,
    pub model: crate::levy::TailParams,
    pub drift: String,
    pub drift_params: Vec<f64>,
    pub set: String,
    pub seed: u64,
    pub points: Vec<PointRecord>,
    pub slope: Option<SlopeSummary>,
    pub ratio: Option<RatioSummary>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl ResultRecord {
    fn new(cfg: &ExperimentConfig, kind: &str, points: Vec<PointRecord>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            name: cfg.name.clone(),
            model: cfg.model.params(),
            drift: cfg.drift.name().to_string(),
            drift_params: cfg.drift.params().to_vec(),
            set: cfg.set.to_string(),
            seed: cfg.seed,
            points,
            slope: None,
            ratio: None,
            pass: false,
            notes: Vec::new(),
        }
    }
}

/// Estimates over the whole ε-grid.
pub fn estimate_grid(cfg: &ExperimentConfig) -> Result<Vec<ProbabilityEstimate>> {
    cfg.epsilons
        .iter()
        .zip(&cfg.n_samples)
        .map(|(&eps, &n)| estimate_probability(cfg, &cfg.set, eps, n))
        .collect()
}

/// Probability table without derived statistics.
pub fn run_probability_table(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let points = estimate_grid(cfg)?.iter().map(PointRecord::from).collect();
    let mut record = ResultRecord::new(cfg, "probability", points);
    record.pass = true;
    Ok(record)
}

/// Fits `log p̂` against `log(1/ε)` on points with enough hits. Weights are inverse
/// delta-method variances `n p̂ / (1 − p̂)`, with `1 − p̂` floored at `1/n`.
pub fn fit_slope(points: &[PointRecord], min_hits: u64) -> (Option<crate::stats::LineFit>, Vec<f64>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut excluded = Vec::new();
    for p in points {
        if p.hits_inner < min_hits {
            excluded.push(p.eps);
            continue;
        }
        x.push((1.0 / p.eps).ln());
        y.push(p.p_inner.ln());
        w.push(p.n as f64 * p.p_inner / (1.0 - p.p_inner).max(1.0 / p.n as f64));
    }
    (weighted_line_fit(&x, &y, &w), excluded)
}

/// Slope of `log P(Y^ε ∈ A)` against `log(1/ε)` versus `−inf_A Ĩ`.
pub fn run_slope_experiment(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let alpha = cfg.model.alpha;
    let beta = cfg.model.beta;
    let infimum = inf_rate_over_set(&cfg.set, &cfg.drift, alpha, beta, &cfg.search)?;
    let points: Vec<PointRecord> = estimate_grid(cfg)?.iter().map(PointRecord::from).collect();
    let mut record = ResultRecord::new(cfg, "slope", points);
    if infimum.bound_reached {
        record.notes.push(format!("no witness up to cost {}; theory slope unknown", infimum.cost_bound));
    }
    let theory = -infimum.value;
    let accepted = (
        cfg.thresholds.slope_lo.unwrap_or(theory - cfg.thresholds.slope_tol),
        cfg.thresholds.slope_hi.unwrap_or(theory + cfg.thresholds.slope_tol),
    );
    let (fit, excluded) = fit_slope(&record.points, cfg.thresholds.min_hits);
    for eps in &excluded {
        record.notes.push(format!("eps={eps}: fewer than {} hits, excluded from fit", cfg.thresholds.min_hits));
    }
    let Some(fit) = fit else {
        record.notes.push("fewer than two usable points; slope not fitted".into());
        return Ok(record);
    };
    let half = crate::stats::Z95 * fit.slope_se;
    record.pass = fit.slope >= accepted.0 && fit.slope <= accepted.1;
    record.slope = Some(SlopeSummary {
        slope: fit.slope,
        slope_se: fit.slope_se,
        slope_ci95: (fit.slope - half, fit.slope + half),
        intercept: fit.intercept,
        theory_slope: theory,
        accepted,
        excluded_eps: excluded,
        witness: infimum.witness,
    });
    Ok(record)
}

/// `(n ν[n,∞)/c₊)^j (n ν(−∞,−n]/c₋)^k` with `n = 1/ε`.
///
/// The tail constants are moved onto the cluster bracket, which is scaled by `c₊^j c₋^k`.
pub fn ratio_normalizer(model: &TailModel, eps: f64, j: usize, k: usize) -> Result<f64> {
    let n = 1.0 / eps;
    let mut v = 1.0;
    if j > 0 {
        if model.c_plus == 0.0 {
            return domain("upward normalizer needs a positive upper tail constant");
        }
        v *= (n * model.tail_upper(n)? / model.c_plus).powi(j as i32);
    }
    if k > 0 {
        if model.c_minus == 0.0 {
            return domain("downward normalizer needs a positive lower tail constant");
        }
        v *= (n * model.tail_lower(n)? / model.c_minus).powi(k as i32);
    }
    Ok(v)
}

fn trend(r: &[f64]) -> Vec<f64> {
    let tail = &r[r.len().saturating_sub(3)..];
    tail.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] - 1.0 } else { f64::NAN }).collect()
}

/// Ratio of `P(Y^ε ∈ A)` to its normalizer, compared with the cluster bracket
/// `[C̃(A°), C̃(Ā)]`, or checked to vanish when the argmin is empty.
pub fn run_ratio_experiment(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let alpha = cfg.model.alpha;
    let beta = cfg.model.beta;
    let bound = match cfg.ratio_lm {
        Some((l, m)) => crate::rate::cost_jk(l, m, alpha, beta),
        None => cfg.search.cost_bound,
    };
    let argmin = argmin_jk(search_oracle(&cfg.set, &cfg.drift, alpha, beta, &cfg.search), alpha, beta, bound);
    let (branch, j, k, ties) = match &argmin {
        Ok(a) => ("bracket", a.first().j, a.first().k, a.pairs.len()),
        Err(Error::ArgminEmpty { .. }) => {
            let (l, m) = cfg.ratio_lm.ok_or_else(|| Error::MissingKey("ratio.l".into()))?;
            ("vanishing", l, m, 0)
        }
        Err(_) => return Err(argmin.unwrap_err()),
    };
    let mut points: Vec<PointRecord> = estimate_grid(cfg)?.iter().map(PointRecord::from).collect();
    let mut ratios = Vec::with_capacity(points.len());
    for p in &mut points {
        let norm = ratio_normalizer(&cfg.model, p.eps, j, k)?;
        p.normalizer = Some(norm);
        p.ratio = Some(p.p_inner / norm);
        ratios.push(p.p_inner / norm);
    }
    let last = points.last().expect("eps grid is non-empty");
    let norm = last.normalizer.unwrap_or(1.0);
    let final_ci = (last.ci_lo / norm, last.ci_hi / norm);
    let mut record = ResultRecord::new(cfg, "ratio", points);
    if ties > 1 {
        record.notes.push(format!("argmin has {ties} tied pairs; using ({j},{k})"));
    }
    let scale = cfg.model.c_plus.powi(j as i32) * cfg.model.c_minus.powi(k as i32);
    let mut summary = RatioSummary {
        branch: branch.to_string(),
        j,
        k,
        trend: trend(&ratios),
        ratios: ratios.clone(),
        bracket_scale: scale,
        bracket: None,
        bracket_values: None,
        cluster: None,
        final_ratio_ci: final_ci,
        argmin_ties: ties,
    };
    if branch == "bracket" {
        let floor = if cfg.set.margin > 0.0 { 0.5 * cfg.set.margin } else { cfg.cluster_floor };
        let spec = ClusterSampleSpec::new(j, k, alpha, beta, floor, cfg.cluster_n, cfg.seed);
        let cluster = estimate_cjk_tilde(&cfg.set, &cfg.drift, &spec, &cfg.solver)?;
        if cluster.inner.floor_leakage_flag || cluster.outer.floor_leakage_flag {
            record.notes.push("cluster estimate accepted jumps near the floor; bounded-away premise doubtful".into());
        }
        let bracket = (scale * cluster.inner.ci95.0, scale * cluster.outer.ci95.1);
        summary.bracket = Some(bracket);
        summary.bracket_values = Some((scale * cluster.inner.value, scale * cluster.outer.value));
        summary.cluster = Some(cluster);
        record.pass = final_ci.0 <= bracket.1 && bracket.0 <= final_ci.1;
    } else {
        let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
        let small = ratios.last().copied().unwrap_or(f64::NAN)
            < cfg.thresholds.vanish_factor * ratios[0];
        record.pass = decreasing && small;
        if !decreasing {
            record.notes.push("ratios are not monotonically decreasing".into());
        }
    }
    for p in &record.points {
        if let (Some(r), Some((lo, hi))) = (p.ratio, summary.bracket_values) {
            if p.eps >= 0.5 && (r > 3.0 * hi || r < lo / 3.0) {
                record.notes.push(format!("eps={}: preasymptotic ratio {r} far from bracket", p.eps));
            }
        }
    }
    record.ratio = Some(summary);
    Ok(record)
}

/// Runs `f` on a dedicated pool with `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> ExperimentConfig {
        let text = format!(
            "eps = 0.25, 0.125\nn = 2000\nseed = 3\nmodel.preset = stable\nmodel.alpha = 1.5\n\
             set.name = sup_exceed\nset.c = 1.0\nsim.grid_delta = 2^-7\n{extra}"
        );
        ExperimentConfig::from_map(&ConfigMap::parse(&text).unwrap()).unwrap()
    }

    #[test]
    fn whole_and_empty_sets() {
        let c = cfg("set.name = whole");
        let e = estimate_probability(&c, &c.set, 0.25, 1000).unwrap();
        assert_eq!((e.inner.p_hat, e.outer.p_hat), (1.0, 1.0));
        let c = cfg("set.name = empty");
        let e = estimate_probability(&c, &c.set, 0.25, 1000).unwrap();
        assert_eq!((e.inner.hits, e.outer.hits), (0, 0));
    }

    #[test]
    fn inner_never_exceeds_outer_and_audit_runs() {
        let c = cfg("drift.name = cos_scaled\ndrift.a = 0.2");
        let e = estimate_probability(&c, &c.set, 0.25, 3000).unwrap();
        assert!(e.inner.hits <= e.outer.hits);
        assert_eq!(e.audited, 30);
        assert_eq!(e.disagreements, 0, "max gap {}", e.max_audit_gap);
    }

    #[test]
    fn thread_count_does_not_change_estimates() {
        let c = cfg("drift.name = cos_scaled\ndrift.a = 0.2");
        let a = with_threads(Some(1), || estimate_probability(&c, &c.set, 0.125, 3000)).unwrap().unwrap();
        let b = with_threads(Some(3), || estimate_probability(&c, &c.set, 0.125, 3000)).unwrap().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn normalizer_is_a_pure_power_for_constant_tails() {
        let c = cfg("");
        let v = ratio_normalizer(&c.model, 0.01, 1, 0).unwrap();
        assert!((v - 100f64.powf(-0.5)).abs() < 1e-15);
        let one_sided = crate::levy::TailModel::new(1.5, 1.5, 1.0, 0.0, 0.0).unwrap();
        assert!(ratio_normalizer(&one_sided, 0.1, 0, 1).is_err());
    }

    #[test]
    fn slope_fit_excludes_sparse_points() {
        let mk = |eps: f64, hits: u64| PointRecord {
            eps,
            n: 10_000,
            hits_inner: hits,
            hits_outer: hits,
            p_inner: hits as f64 / 1e4,
            p_outer: hits as f64 / 1e4,
            ci_lo: 0.0,
            ci_hi: 1.0,
            ratio: None,
            normalizer: None,
            out_of_ball: 0,
            audited: 0,
            disagreements: 0,
            max_audit_gap: 0.0,
        };
        let pts = [mk(0.25, 1000), mk(0.0625, 500), mk(0.015625, 10)];
        let (fit, excluded) = fit_slope(&pts, 30);
        assert_eq!(excluded, vec![0.015625]);
        assert!((fit.unwrap().slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_drift_whole_space_slope_is_zero() {
        let c = cfg("set.name = whole\nsearch.starts = 2");
        let r = run_slope_experiment(&c).unwrap();
        let s = r.slope.unwrap();
        assert_eq!(s.theory_slope, 0.0);
        assert!(r.pass);
    }
}
