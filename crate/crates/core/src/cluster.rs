//! Monte Carlo estimates of the cluster measures `C_{j,k}` and their images
//! `C̃_{j,k} = C_{j,k}∘F⁻¹`.
//!
//! `C_{j,k}` puts `j` Pareto(α) up-jumps and `k` Pareto(β) down-jumps at uniform times. The
//! measures have infinite mass near zero, so sizes are drawn conditionally above floors
//! `δ₊, δ₋` and the acceptance rate is multiplied by `δ₊^{−αj} δ₋^{−βk}`. This is exact for sets
//! whose members only use jumps above the floors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cadlag::{CadlagPath, JumpEvent};
use crate::error::{domain, Error, Result};
use crate::rng::stream_rng;
use crate::sets::SetOracle;
use crate::solution::{apply_f, DriftSpec, SolverConfig};
use crate::stats::{wilson, Z95};

/// Samples drawn per RNG sub-stream.
const CHUNK: u64 = 1024;

/// Accepted jumps closer than this factor to their floor raise the leakage flag.
const LEAKAGE_FACTOR: f64 = 1.1;

/// Largest tolerated fraction of solver failures.
const MAX_FAILURE_RATE: f64 = 1e-3;

/// What to sample for a cluster-measure estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSampleSpec {
    pub j: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub floor_up: f64,
    pub floor_down: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Grid step of the sampled step paths.
    pub grid_delta: f64,
}

impl ClusterSampleSpec {
    pub fn new(j: usize, k: usize, alpha: f64, beta: f64, floor: f64, n_samples: u64, seed: u64) -> Self {
        Self {
            j,
            k,
            alpha,
            beta,
            floor_up: floor,
            floor_down: floor,
            n_samples,
            seed,
            grid_delta: 1.0 / 64.0,
        }
    }

    /// Floors at half the declared bounded-away margin.
    pub fn from_margin(j: usize, k: usize, alpha: f64, beta: f64, margin: f64, n_samples: u64, seed: u64) -> Self {
        Self::new(j, k, alpha, beta, 0.5 * margin, n_samples, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.floor_up > 0.0 && self.floor_down > 0.0) {
            return domain("cluster floors must be positive");
        }
        if !(self.alpha > 1.0 && self.beta > 1.0) {
            return domain("tail indices must exceed 1");
        }
        if self.n_samples == 0 && self.j + self.k > 0 {
            return domain("at least one sample is required");
        }
        Ok(())
    }

    /// `δ₊^{−αj} δ₋^{−βk}`.
    pub fn mass_factor(&self) -> f64 {
        self.floor_up.powf(-self.alpha * self.j as f64) * self.floor_down.powf(-self.beta * self.k as f64)
    }
}

/// Scaled acceptance rate with its interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub floor_leakage_flag: bool,
    pub hits: u64,
    pub n: u64,
}

impl MeasureEstimate {
    fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, ci95: (value, value), floor_leakage_flag: false, hits: value as u64, n: 1 }
    }

    fn from_counts(hits: u64, n: u64, mass: f64, leakage: bool) -> Self {
        let p = hits as f64 / n as f64;
        let (lo, hi) = wilson(hits, n, Z95);
        Self {
            value: mass * p,
            std_error: mass * (p * (1.0 - p) / n as f64).sqrt(),
            ci95: (mass * lo, mass * hi),
            floor_leakage_flag: leakage,
            hits,
            n,
        }
    }
}

/// Estimates for the interior and the closure of a set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterBracket {
    pub spec: ClusterSampleSpec,
    pub inner: MeasureEstimate,
    pub outer: MeasureEstimate,
    pub solver_failures: u64,
}

impl ClusterBracket {
    /// `[lower CI end of the interior, upper CI end of the closure]`.
    pub fn ci_span(&self) -> (f64, f64) {
        (self.inner.ci95.0, self.outer.ci95.1)
    }

    /// JSON record `{j,k,floors,N,value,se,ci95,leakage}` for both ends.
    pub fn to_json_value(&self) -> serde_json::Value {
        let one = |m: &MeasureEstimate| {
            serde_json::json!({
                "value": m.value,
                "se": m.std_error,
                "ci95": [m.ci95.0, m.ci95.1],
                "leakage": m.floor_leakage_flag,
                "hits": m.hits,
            })
        };
        serde_json::json!({
            "j": self.spec.j,
            "k": self.spec.k,
            "floors": [self.spec.floor_up, self.spec.floor_down],
            "N": self.spec.n_samples,
            "inner": one(&self.inner),
            "outer": one(&self.outer),
            "solver_failures": self.solver_failures,
        })
    }
}

fn distinct_time<R: Rng + ?Sized>(rng: &mut R, taken: &[f64]) -> f64 {
    loop {
        let t = 1.0 - rng.random::<f64>();
        if !taken.contains(&t) {
            return t;
        }
    }
}

/// One step path from `C_{j,k}` restricted to jumps above the floors.
pub fn sample_djk_path<R: Rng + ?Sized>(spec: &ClusterSampleSpec, rng: &mut R) -> Result<CadlagPath> {
    let mut times = Vec::with_capacity(spec.j + spec.k);
    let mut jumps = Vec::with_capacity(spec.j + spec.k);
    for i in 0..spec.j + spec.k {
        let t = distinct_time(rng, &times);
        times.push(t);
        let u = 1.0 - rng.random::<f64>();
        let size = if i < spec.j {
            spec.floor_up * u.powf(-1.0 / spec.alpha)
        } else {
            -spec.floor_down * u.powf(-1.0 / spec.beta)
        };
        jumps.push(JumpEvent::new(t, size));
    }
    CadlagPath::step(0.0, jumps, spec.grid_delta)
}

fn near_floor(spec: &ClusterSampleSpec, p: &CadlagPath) -> bool {
    p.jumps().iter().any(|j| {
        let floor = if j.size > 0.0 { spec.floor_up } else { spec.floor_down };
        j.size.abs() < LEAKAGE_FACTOR * floor
    })
}

#[derive(Default, Clone, Copy)]
struct Tally {
    inner: u64,
    outer: u64,
    leak_inner: bool,
    leak_outer: bool,
    failures: u64,
}

impl Tally {
    fn merge(self, o: Self) -> Self {
        Self {
            inner: self.inner + o.inner,
            outer: self.outer + o.outer,
            leak_inner: self.leak_inner || o.leak_inner,
            leak_outer: self.leak_outer || o.leak_outer,
            failures: self.failures + o.failures,
        }
    }
}

fn run(
    set: &dyn SetOracle,
    spec: &ClusterSampleSpec,
    map: &(dyn Fn(&CadlagPath) -> Result<CadlagPath> + Sync),
) -> Result<ClusterBracket> {
    spec.validate()?;
    let mass = spec.mass_factor();
    if spec.j + spec.k == 0 {
        let image = map(&CadlagPath::zero(spec.grid_delta)?)?;
        let v = |b: bool| MeasureEstimate::exact(if b { 1.0 } else { 0.0 });
        return Ok(ClusterBracket {
            spec: *spec,
            inner: v(set.contains_inner(&image)),
            outer: v(set.contains_outer(&image)),
            solver_failures: 0,
        });
    }
    let stream = (spec.j as u64) << 32 | spec.k as u64;
    let chunks = spec.n_samples.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Tally> {
            let mut rng = stream_rng(spec.seed, stream, c);
            let mut t = Tally::default();
            for _ in c * CHUNK..((c + 1) * CHUNK).min(spec.n_samples) {
                let eta = sample_djk_path(spec, &mut rng)?;
                let Ok(image) = map(&eta) else {
                    t.failures += 1;
                    continue;
                };
                let leak = near_floor(spec, &eta);
                if set.contains_inner(&image) {
                    t.inner += 1;
                    t.leak_inner |= leak;
                }
                if set.contains_outer(&image) {
                    t.outer += 1;
                    t.leak_outer |= leak;
                }
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    if tally.failures as f64 > MAX_FAILURE_RATE * spec.n_samples as f64 {
        return Err(Error::SolverFailures { failures: tally.failures, n: spec.n_samples });
    }
    Ok(ClusterBracket {
        spec: *spec,
        inner: MeasureEstimate::from_counts(tally.inner, spec.n_samples, mass, tally.leak_inner),
        outer: MeasureEstimate::from_counts(tally.outer, spec.n_samples, mass, tally.leak_outer),
        solver_failures: tally.failures,
    })
}

/// `C_{j,k}(A°)` and `C_{j,k}(Ā)`.
pub fn estimate_cjk(set: &dyn SetOracle, spec: &ClusterSampleSpec) -> Result<ClusterBracket> {
    run(set, spec, &|p| Ok(p.clone()))
}

/// `C̃_{j,k}(A°)` and `C̃_{j,k}(Ā)`: membership is tested on `F(η)`.
pub fn estimate_cjk_tilde(
    set: &dyn SetOracle,
    drift: &DriftSpec,
    spec: &ClusterSampleSpec,
    solver: &SolverConfig,
) -> Result<ClusterBracket> {
    run(set, spec, &|p| apply_f(drift, p, solver))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{PathSet, SetShape};

    #[test]
    fn zero_profile_is_exact() {
        let spec = ClusterSampleSpec::new(0, 0, 1.5, 2.0, 1.0, 0, 1);
        let whole = estimate_cjk(&PathSet::new(SetShape::Whole), &spec).unwrap();
        assert_eq!((whole.inner.value, whole.inner.std_error), (1.0, 0.0));
        let sup = estimate_cjk(&PathSet::new(SetShape::SupExceed { c: 1.0 }), &spec).unwrap();
        assert_eq!(sup.outer.value, 0.0);
        let mut rng = stream_rng(1, 2, 3);
        assert!(sample_djk_path(&spec, &mut rng).unwrap().jumps().is_empty());
    }

    #[test]
    fn single_jump_sizes_follow_pareto() {
        let spec = ClusterSampleSpec::new(1, 0, 1.5, 2.0, 1.0, 0, 7);
        let mut rng = stream_rng(7, 0, 0);
        let n = 20_000;
        let mut sizes: Vec<f64> = (0..n)
            .map(|_| sample_djk_path(&spec, &mut rng).unwrap().jumps()[0].size)
            .collect();
        sizes.sort_by(f64::total_cmp);
        let ks = sizes
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let cdf = 1.0 - x.powf(-1.5);
                (cdf - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - cdf).abs())
            })
            .fold(0.0, f64::max);
        // Critical value at level 0.01 is 1.63/√n.
        assert!(ks < 1.63 / (n as f64).sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn tilde_sandwich_from_drift_bound() {
        let drift = DriftSpec::cos_scaled(0.2).unwrap();
        let spec = ClusterSampleSpec::new(1, 0, 1.5, 2.0, 0.5, 20_000, 3);
        let set = PathSet::new(SetShape::SupExceed { c: 1.0 });
        let solver = SolverConfig { step: 1.0 / 64.0, ..SolverConfig::default() };
        let est = estimate_cjk_tilde(&set, &drift, &spec, &solver).unwrap();
        let hi = 0.8f64.powf(-1.5);
        let lo = 1.2f64.powf(-1.5);
        assert!(est.inner.ci95.1 >= lo && est.outer.ci95.0 <= hi, "{est:?}");
        assert!(est.inner.value <= est.outer.value);
        assert!(!est.inner.floor_leakage_flag);
    }

    #[test]
    fn zero_drift_tilde_matches_plain() {
        let spec = ClusterSampleSpec::new(1, 1, 1.5, 2.0, 1.0, 10_000, 11);
        let set = PathSet::new(SetShape::LargestJumps { a: 2.0, b: 2.0 });
        let a = estimate_cjk(&set, &spec).unwrap();
        let b = estimate_cjk_tilde(&set, &DriftSpec::zero(), &spec, &SolverConfig::default()).unwrap();
        assert_eq!(a.inner, b.inner);
        let json = a.to_json_value();
        assert_eq!(json["N"], 10_000);
        assert_eq!(json["floors"][0], 1.0);
    }

    #[test]
    fn leakage_flag_detects_small_floors() {
        let spec = ClusterSampleSpec::new(1, 0, 1.5, 2.0, 1.0, 5_000, 5);
        let est = estimate_cjk(&PathSet::new(SetShape::SupExceed { c: 0.5 }), &spec).unwrap();
        assert!(est.inner.floor_leakage_flag);
    }
}
