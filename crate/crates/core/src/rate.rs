//! Rate functions `I` and `Ĩ = I∘F⁻¹`, the jump cost `(α−1)j + (β−1)k`, the cost-ordered
//! argmin over jump profiles, and the largest-jump map `π` with its induced rate.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cadlag::{largest_jumps, CadlagPath, JumpEvent, DEFAULT_JUMP_FLOOR};
use crate::error::{domain, Error, Result};
use crate::rng::stream_rng;
use crate::sets::SetOracle;
use crate::solution::{apply_f, apply_f_inverse, DriftSpec, SolverConfig};

/// Default tolerance deciding whether a continuous part vanishes.
pub const DEFAULT_TOL_STEP: f64 = 1e-6;

/// Relative tolerance under which two costs are reported as tied.
const TIE_TOL: f64 = 1e-12;

/// Numbers of upward and downward jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpProfile {
    pub up_count: usize,
    pub down_count: usize,
}

/// A jump profile `(j, k)` with its cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPair {
    pub j: usize,
    pub k: usize,
    pub cost: f64,
}

fn check_indices(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 1.0 && beta > 1.0) {
        return domain(format!("tail indices must exceed 1 (alpha={alpha}, beta={beta})"));
    }
    Ok(())
}

/// Counts registry jumps with `size > eta` and `size < −eta`.
pub fn jump_counts(path: &CadlagPath, eta: f64) -> JumpProfile {
    let up_count = path.jumps().iter().filter(|j| j.size > eta).count();
    let down_count = path.jumps().iter().filter(|j| j.size < -eta).count();
    JumpProfile { up_count, down_count }
}

/// `I(ξ)`: jump cost for step paths starting at 0, `+∞` otherwise.
///
/// A path counts as a step path when its continuous part and initial value are within
/// `tol_step` of zero.
pub fn rate_i(path: &CadlagPath, alpha: f64, beta: f64, tol_step: f64, eta: f64) -> Result<f64> {
    check_indices(alpha, beta)?;
    if path.cont_sup_variation() > tol_step || path.initial_value().abs() > tol_step {
        return Ok(f64::INFINITY);
    }
    let p = jump_counts(path, eta);
    Ok(cost_jk(p.up_count, p.down_count, alpha, beta))
}

/// `Ĩ(ξ) = I(F⁻¹(ξ))`.
pub fn rate_i_tilde(
    path: &CadlagPath,
    drift: &DriftSpec,
    alpha: f64,
    beta: f64,
    tol_step: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let g = apply_f_inverse(drift, path, cfg)?;
    rate_i(&g, alpha, beta, tol_step, 0.0)
}

/// `(α−1)j + (β−1)k`.
pub fn cost_jk(j: usize, k: usize, alpha: f64, beta: f64) -> f64 {
    (alpha - 1.0) * j as f64 + (beta - 1.0) * k as f64
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// All `(j, k)` with cost at most `cost_bound`, by increasing cost. Within a tie the order is
/// by `k`, then `j`.
pub fn enumerate_cost_order(alpha: f64, beta: f64, cost_bound: f64) -> Result<Vec<CostPair>> {
    check_indices(alpha, beta)?;
    if !(cost_bound >= 0.0) || !cost_bound.is_finite() {
        return domain(format!("cost bound {cost_bound} must be finite and non-negative"));
    }
    let jmax = (cost_bound / (alpha - 1.0) * (1.0 + TIE_TOL)).floor() as usize;
    let kmax = (cost_bound / (beta - 1.0) * (1.0 + TIE_TOL)).floor() as usize;
    let mut out = Vec::new();
    for j in 0..=jmax {
        for k in 0..=kmax {
            let cost = cost_jk(j, k, alpha, beta);
            if cost <= cost_bound || tied(cost, cost_bound) {
                out.push(CostPair { j, k, cost });
            }
        }
    }
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost).then((a.k, a.j).cmp(&(b.k, b.j))));
    // Re-sort inside groups whose costs differ only by rounding.
    let levels = group_levels(out);
    Ok(levels.into_iter().flatten().collect())
}

fn group_levels(sorted: Vec<CostPair>) -> Vec<Vec<CostPair>> {
    let mut levels: Vec<Vec<CostPair>> = Vec::new();
    for p in sorted {
        match levels.last_mut() {
            Some(level) if tied(level[0].cost, p.cost) => level.push(p),
            _ => levels.push(vec![p]),
        }
    }
    for level in &mut levels {
        level.sort_by_key(|p| (p.k, p.j));
    }
    levels
}

/// Cost levels: pairs grouped by (tied) cost, levels in increasing order.
pub fn cost_levels(alpha: f64, beta: f64, cost_bound: f64) -> Result<Vec<Vec<CostPair>>> {
    Ok(group_levels(enumerate_cost_order(alpha, beta, cost_bound)?))
}

/// Step path `η ∈ 𝔻_{j,k}` with `F(η) ∈ A`, kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub j: usize,
    pub k: usize,
    pub cost: f64,
    pub noise: CadlagPath,
    pub set: String,
    pub inner: bool,
    pub outer: bool,
}

impl Witness {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Verdict of a feasibility oracle for one jump profile.
#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible(Option<Witness>),
    /// No witness found. This is not a proof of infeasibility.
    NotFound,
}

/// Result of [`argmin_jk`].
#[derive(Debug, Clone)]
pub struct Argmin {
    pub cost: f64,
    /// All feasible pairs at the minimal level; more than one means a tie.
    pub pairs: Vec<(CostPair, Option<Witness>)>,
}

impl Argmin {
    pub fn is_unique(&self) -> bool {
        self.pairs.len() == 1
    }

    pub fn first(&self) -> CostPair {
        self.pairs[0].0
    }
}

/// Scans pairs in cost order and returns every feasible pair of the first feasible level.
pub fn argmin_jk(
    mut oracle: impl FnMut(usize, usize) -> Result<Feasibility>,
    alpha: f64,
    beta: f64,
    cost_bound: f64,
) -> Result<Argmin> {
    for level in cost_levels(alpha, beta, cost_bound)? {
        let mut pairs = Vec::new();
        for p in &level {
            if let Feasibility::Feasible(w) = oracle(p.j, p.k)? {
                pairs.push((*p, w));
            }
        }
        if !pairs.is_empty() {
            return Ok(Argmin { cost: level[0].cost, pairs });
        }
    }
    Err(Error::ArgminEmpty { bound: cost_bound })
}

/// Settings of the automated witness search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessSearchConfig {
    pub starts: usize,
    pub max_evals: usize,
    pub seed: u64,
    /// Initial jump sizes are drawn log-uniformly from `[0.05, size_scale]`.
    pub size_scale: f64,
    /// Grid step of the trial paths during the search.
    pub search_delta: f64,
    /// Solver used to certify a found witness.
    pub solver: SolverConfig,
    pub cost_bound: f64,
}

impl Default for WitnessSearchConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            max_evals: 1000,
            seed: 0x5EA5C4,
            size_scale: 4.0,
            search_delta: 1.0 / 64.0,
            solver: SolverConfig::default(),
            cost_bound: 6.0,
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Decodes `(times, log sizes)` into a step path with `j` up and `k` down jumps.
fn decode(x: &[f64], j: usize, k: usize, delta: f64) -> Result<CadlagPath> {
    let n = j + k;
    let jumps = (0..n)
        .map(|i| {
            let t = logistic(x[i]).clamp(1e-9, 1.0);
            let s = x[n + i].exp();
            JumpEvent::new(t, if i < j { s } else { -s })
        })
        .collect();
    CadlagPath::step(0.0, jumps, delta)
}

struct WitnessProblem<'a> {
    set: &'a dyn SetOracle,
    drift: &'a DriftSpec,
    j: usize,
    k: usize,
    delta: f64,
    solver: SolverConfig,
    evals: std::sync::atomic::AtomicUsize,
    max_evals: usize,
}

const BUDGET_EXHAUSTED: &str = "witness search budget exhausted";

impl CostFunction for WitnessProblem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let used = self.evals.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        if used >= self.max_evals {
            return Err(argmin::core::Error::msg(BUDGET_EXHAUSTED));
        }
        let Ok(eta) = decode(x, self.j, self.k, self.delta) else {
            return Ok(1e6);
        };
        let profile = jump_counts(&eta, DEFAULT_JUMP_FLOOR);
        let penalty = if profile == (JumpProfile { up_count: self.j, down_count: self.k }) { 0.0 } else { 1.0 };
        let f = match apply_f(self.drift, &eta, &self.solver) {
            Ok(f) => f,
            Err(_) => return Ok(1e6),
        };
        Ok(self.set.violation(&f) + penalty)
    }
}

/// Certifies a candidate step path at full resolution.
pub fn check_witness(
    set: &dyn SetOracle,
    drift: &DriftSpec,
    eta: &CadlagPath,
    alpha: f64,
    beta: f64,
    solver: &SolverConfig,
) -> Result<Option<Witness>> {
    if !eta.is_step() || eta.initial_value() != 0.0 {
        return Ok(None);
    }
    let profile = jump_counts(eta, 0.0);
    let f = apply_f(drift, eta, solver)?;
    let inner = set.contains_inner(&f);
    if !inner {
        return Ok(None);
    }
    Ok(Some(Witness {
        j: profile.up_count,
        k: profile.down_count,
        cost: cost_jk(profile.up_count, profile.down_count, alpha, beta),
        noise: eta.clone(),
        set: set.name(),
        inner,
        outer: set.contains_outer(&f),
    }))
}

/// Multistart Nelder–Mead search for `η ∈ 𝔻_{j,k}` with `F(η) ∈ A°`.
///
/// Parameters are the logits of the jump times and the logarithms of the jump sizes. The
/// objective is the set's violation score of `F(η)` on a coarse grid; candidates reaching zero
/// are re-checked at full resolution.
pub fn search_witness(
    set: &dyn SetOracle,
    drift: &DriftSpec,
    j: usize,
    k: usize,
    alpha: f64,
    beta: f64,
    cfg: &WitnessSearchConfig,
) -> Result<Option<Witness>> {
    let fine = |eta: &CadlagPath| -> Result<Option<Witness>> {
        let refined = CadlagPath::step(0.0, eta.jumps().to_vec(), crate::cadlag::DEFAULT_DELTA)?;
        check_witness(set, drift, &refined, alpha, beta, &cfg.solver)
    };
    if j + k == 0 {
        return fine(&CadlagPath::zero(cfg.search_delta)?);
    }
    let n = 2 * (j + k);
    let coarse = SolverConfig { step: cfg.search_delta, picard_tol: 1e-7, ..cfg.solver };
    let size_hi = cfg.size_scale.max(0.1);
    let run = |start: usize| -> Result<Option<Witness>> {
        let mut rng = stream_rng(cfg.seed, (j as u64) << 32 | k as u64, start as u64);
        let x0: Vec<f64> = (0..n)
            .map(|i| {
                if i < j + k {
                    logit(rng.random_range(0.05..0.95))
                } else {
                    rng.random_range(0.05f64.ln()..size_hi.ln())
                }
            })
            .collect();
        let simplex: Vec<Vec<f64>> = std::iter::once(x0.clone())
            .chain((0..n).map(|i| {
                let mut v = x0.clone();
                v[i] += 0.5;
                v
            }))
            .collect();
        let problem = WitnessProblem {
            set,
            drift,
            j,
            k,
            delta: cfg.search_delta,
            solver: coarse,
            evals: 0.into(),
            max_evals: cfg.max_evals,
        };
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-10)
            .map_err(|e| Error::Domain(e.to_string()))?;
        let result = Executor::new(problem, solver)
            .configure(|s| s.max_iters(cfg.max_evals as u64).target_cost(0.0))
            .run();
        let best = match result {
            Ok(r) => r.state.get_best_param().cloned().filter(|_| r.state.get_best_cost() == 0.0),
            Err(_) => None,
        };
        match best {
            Some(x) => fine(&decode(&x, j, k, cfg.search_delta)?),
            None => Ok(None),
        }
    };
    (0..cfg.starts)
        .into_par_iter()
        .map(run)
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        })
        .transpose()
        .map(Option::flatten)
}

/// Feasibility oracle that accepts user-supplied step paths.
pub fn witness_oracle<'a>(
    set: &'a dyn SetOracle,
    drift: &'a DriftSpec,
    candidates: &'a [CadlagPath],
    alpha: f64,
    beta: f64,
    solver: &'a SolverConfig,
) -> impl FnMut(usize, usize) -> Result<Feasibility> + 'a {
    move |j, k| {
        for eta in candidates {
            if jump_counts(eta, 0.0) != (JumpProfile { up_count: j, down_count: k }) {
                continue;
            }
            if let Some(w) = check_witness(set, drift, eta, alpha, beta, solver)? {
                return Ok(Feasibility::Feasible(Some(w)));
            }
        }
        Ok(Feasibility::NotFound)
    }
}

/// Feasibility oracle backed by [`search_witness`].
pub fn search_oracle<'a>(
    set: &'a dyn SetOracle,
    drift: &'a DriftSpec,
    alpha: f64,
    beta: f64,
    cfg: &'a WitnessSearchConfig,
) -> impl FnMut(usize, usize) -> Result<Feasibility> + 'a {
    move |j, k| {
        Ok(match search_witness(set, drift, j, k, alpha, beta, cfg)? {
            Some(w) => Feasibility::Feasible(Some(w)),
            None => Feasibility::NotFound,
        })
    }
}

/// `π(ξ)`: largest upward and largest downward jump sizes, 0 when absent.
pub fn largest_jumps_pi(path: &CadlagPath) -> (f64, f64) {
    largest_jumps(path)
}

/// Induced rate `inf{I(ξ) : π(ξ) = y}`.
pub fn rate_pi_induced(y: (f64, f64), alpha: f64, beta: f64) -> Result<f64> {
    check_indices(alpha, beta)?;
    if !(y.0 >= 0.0 && y.1 >= 0.0) {
        return domain(format!("largest-jump components must be non-negative, got {y:?}"));
    }
    Ok(cost_jk(usize::from(y.0 > 0.0), usize::from(y.1 > 0.0), alpha, beta))
}

/// Outcome of [`inf_rate_over_set`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateInfimum {
    /// `inf_A Ĩ`; `+∞` when nothing was found within the bound.
    pub value: f64,
    pub witness: Option<Witness>,
    /// Set when no witness exists up to `cost_bound`.
    pub bound_reached: bool,
    pub cost_bound: f64,
}

/// `inf_{ξ∈A} Ĩ(ξ)` by the cost-ordered witness search.
pub fn inf_rate_over_set(
    set: &dyn SetOracle,
    drift: &DriftSpec,
    alpha: f64,
    beta: f64,
    cfg: &WitnessSearchConfig,
) -> Result<RateInfimum> {
    match argmin_jk(search_oracle(set, drift, alpha, beta, cfg), alpha, beta, cfg.cost_bound) {
        Ok(a) => Ok(RateInfimum {
            value: a.cost,
            witness: a.pairs.into_iter().next().and_then(|p| p.1),
            bound_reached: false,
            cost_bound: cfg.cost_bound,
        }),
        Err(Error::ArgminEmpty { bound }) => Ok(RateInfimum {
            value: f64::INFINITY,
            witness: None,
            bound_reached: true,
            cost_bound: bound,
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{PathSet, SetShape};

    fn step(j: &[(f64, f64)]) -> CadlagPath {
        CadlagPath::step_from_jumps(j).unwrap()
    }

    #[test]
    fn jump_count_examples() {
        let p = step(&[(0.3, 2.0), (0.6, -1.0), (0.8, 0.5)]);
        assert_eq!(jump_counts(&p, 0.1), JumpProfile { up_count: 2, down_count: 1 });
        assert_eq!(jump_counts(&p, 1.5), JumpProfile { up_count: 1, down_count: 0 });
        let ramp = CadlagPath::from_fn(1.0 / 64.0, |t| 0.2 * t).unwrap();
        assert_eq!(jump_counts(&ramp, 0.0), JumpProfile { up_count: 0, down_count: 0 });
        assert_eq!(largest_jumps_pi(&p), (2.0, 1.0));
        assert_eq!(largest_jumps_pi(&ramp), (0.0, 0.0));
    }

    #[test]
    fn rate_i_examples() {
        let zero = CadlagPath::zero(1.0 / 64.0).unwrap();
        assert_eq!(rate_i(&zero, 1.5, 2.0, DEFAULT_TOL_STEP, 0.0).unwrap(), 0.0);
        let p = step(&[(0.3, 1.0), (0.7, -2.0)]);
        assert_eq!(rate_i(&p, 1.5, 2.0, DEFAULT_TOL_STEP, 0.0).unwrap(), 1.5);
        let ramp = CadlagPath::from_fn(1.0 / 64.0, |t| 0.2 * t).unwrap();
        assert_eq!(rate_i(&ramp, 1.5, 2.0, DEFAULT_TOL_STEP, 0.0).unwrap(), f64::INFINITY);
        assert!(rate_i(&zero, 1.0, 2.0, DEFAULT_TOL_STEP, 0.0).is_err());
    }

    #[test]
    fn rate_i_tilde_examples() {
        let cfg = SolverConfig::default();
        let eta = step(&[(0.3, 1.0), (0.7, -2.0)]);
        let drift = DriftSpec::cos_scaled(0.2).unwrap();
        let f = apply_f(&drift, &eta, &cfg).unwrap();
        assert_eq!(rate_i_tilde(&f, &drift, 1.5, 2.0, DEFAULT_TOL_STEP, &cfg).unwrap(), 1.5);
        let zero = DriftSpec::zero();
        assert_eq!(rate_i_tilde(&eta, &zero, 1.5, 2.0, DEFAULT_TOL_STEP, &cfg).unwrap(), 1.5);
        // A ramp is the image of a step path only under the matching constant drift.
        let ramp = CadlagPath::from_fn(1.0 / 4096.0, |t| 0.2 * t).unwrap();
        assert_eq!(rate_i_tilde(&ramp, &drift, 1.5, 2.0, DEFAULT_TOL_STEP, &cfg).unwrap(), f64::INFINITY);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost_jk(1, 1, 1.5, 2.0), 1.5);
        assert_eq!(cost_jk(0, 0, 1.5, 2.0), 0.0);
        assert_eq!(cost_jk(2, 0, 1.5, 2.0), 1.0);
    }

    #[test]
    fn cost_order_examples() {
        let order = enumerate_cost_order(1.5, 2.0, 1.0).unwrap();
        let pairs: Vec<(usize, usize, f64)> = order.iter().map(|p| (p.j, p.k, p.cost)).collect();
        assert_eq!(pairs, vec![(0, 0, 0.0), (1, 0, 0.5), (2, 0, 1.0), (0, 1, 1.0)]);
        let levels = cost_levels(1.5, 2.0, 1.0).unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[2].len(), 2);
        assert_eq!(enumerate_cost_order(1.5, 2.0, 0.0).unwrap().len(), 1);
        let sym = cost_levels(1.5, 1.5, 1.0).unwrap();
        assert_eq!(sym[2].iter().map(|p| (p.j, p.k)).collect::<Vec<_>>(), vec![(2, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn pi_induced_rate() {
        assert_eq!(rate_pi_induced((0.0, 0.0), 1.5, 2.0).unwrap(), 0.0);
        assert_eq!(rate_pi_induced((2.0, 0.0), 1.5, 2.0).unwrap(), 0.5);
        assert_eq!(rate_pi_induced((2.0, 1.0), 1.5, 2.0).unwrap(), 1.5);
        assert!(rate_pi_induced((-1.0, 0.0), 1.5, 2.0).is_err());
    }

    #[test]
    fn argmin_sup_exceed_is_one_up_jump() {
        let set = PathSet::new(SetShape::SupExceed { c: 1.0 });
        let drift = DriftSpec::cos_scaled(0.2).unwrap();
        let cfg = WitnessSearchConfig::default();
        let a = argmin_jk(search_oracle(&set, &drift, 1.5, 2.0, &cfg), 1.5, 2.0, 3.0).unwrap();
        assert!(a.is_unique());
        assert_eq!((a.first().j, a.first().k), (1, 0));
        let w = a.pairs[0].1.as_ref().unwrap();
        assert!(w.inner);
        assert!(w.noise.jumps()[0].size > 0.8);
        let json = w.to_json().unwrap();
        let back: Witness = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, w);
    }

    #[test]
    fn argmin_two_sided_is_one_up_one_down() {
        let set = PathSet::new(SetShape::TwoSided { c: 1.0, c_down: 1.0 });
        let drift = DriftSpec::cos_scaled(0.2).unwrap();
        let cfg = WitnessSearchConfig::default();
        let a = argmin_jk(search_oracle(&set, &drift, 1.5, 2.0, &cfg), 1.5, 2.0, 3.0).unwrap();
        assert_eq!((a.first().j, a.first().k), (1, 1));
    }

    #[test]
    fn argmin_zero_and_empty() {
        let drift = DriftSpec::cos_scaled(0.2).unwrap();
        let cfg = WitnessSearchConfig::default();
        let whole = PathSet::new(SetShape::Whole);
        let a = argmin_jk(search_oracle(&whole, &drift, 1.5, 2.0, &cfg), 1.5, 2.0, 1.0).unwrap();
        assert_eq!((a.first().j, a.first().k, a.cost), (0, 0, 0.0));
        let three = PathSet::new(SetShape::UpJumpCount { count: 3, size: 1.0 });
        let fast = WitnessSearchConfig { starts: 4, max_evals: 200, ..cfg };
        let err = argmin_jk(search_oracle(&three, &DriftSpec::zero(), 1.5, 2.0, &fast), 1.5, 2.0, 1.0);
        assert!(matches!(err, Err(Error::ArgminEmpty { .. })));
    }

    #[test]
    fn user_witness_oracle() {
        let set = PathSet::new(SetShape::SupExceed { c: 1.0 });
        let drift = DriftSpec::cos_scaled(0.2).unwrap();
        let solver = SolverConfig::default();
        let cands = vec![step(&[(0.5, 0.5)]), step(&[(0.5, 1.5)])];
        let a = argmin_jk(witness_oracle(&set, &drift, &cands, 1.5, 2.0, &solver), 1.5, 2.0, 2.0).unwrap();
        assert_eq!((a.first().j, a.first().k), (1, 0));
    }

    #[test]
    fn inf_rate_examples() {
        let drift = DriftSpec::cos_scaled(0.2).unwrap();
        let cfg = WitnessSearchConfig::default();
        let sup = PathSet::new(SetShape::SupExceed { c: 1.0 });
        assert_eq!(inf_rate_over_set(&sup, &drift, 1.5, 2.0, &cfg).unwrap().value, 0.5);
        let whole = PathSet::new(SetShape::Whole);
        assert_eq!(inf_rate_over_set(&whole, &drift, 1.5, 2.0, &cfg).unwrap().value, 0.0);
        let low = PathSet::new(SetShape::Terminal { a: f64::NEG_INFINITY, b: -1.0 });
        let r = inf_rate_over_set(&low, &drift, 1.5, 2.0, &cfg).unwrap();
        assert_eq!(r.value, 1.0);
        let w = r.witness.unwrap();
        assert_eq!((w.j, w.k), (0, 1));
        let empty = PathSet::new(SetShape::Empty);
        let small = WitnessSearchConfig { starts: 2, max_evals: 50, cost_bound: 1.0, ..cfg };
        let r = inf_rate_over_set(&empty, &drift, 1.5, 2.0, &small).unwrap();
        assert!(r.bound_reached && r.value.is_infinite());
    }
}
