//! The solution map `F: g ↦ f` with `f(t) = ∫_0^t b(f(s)) ds + g(t)`, its inverse, and a direct
//! Euler integrator for the SDE `dY = b(Y) dt + ε dL^ε`.
//!
//! Integration runs on the merged grid (grid nodes plus jump times) so the jump registry of the
//! input passes through untouched.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cadlag::CadlagPath;
use crate::error::{domain, Error, Result};
use crate::rng::stream_rng;

type DriftFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bounded Lipschitz drift `b` with its declared bound and Lipschitz constant.
#[derive(Clone)]
pub struct DriftSpec {
    b: DriftFn,
    bound: f64,
    lipschitz: f64,
    name: String,
    params: Vec<f64>,
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("bound", &self.bound)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl DriftSpec {
    /// User drift. The declared constants are spot-checked on 10⁴ random pairs.
    pub fn custom(
        name: impl Into<String>,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bound: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        let spec = Self::unchecked(name.into(), Arc::new(b), bound, lipschitz, Vec::new())?;
        spec.spot_check()?;
        Ok(spec)
    }

    fn unchecked(name: String, b: DriftFn, bound: f64, lipschitz: f64, params: Vec<f64>) -> Result<Self> {
        if !(bound >= 0.0 && lipschitz >= 0.0) || !bound.is_finite() || !lipschitz.is_finite() {
            return domain(format!("drift constants must be finite and non-negative ({bound}, {lipschitz})"));
        }
        Ok(Self { b, bound, lipschitz, name, params })
    }

    fn spot_check(&self) -> Result<()> {
        let mut rng = stream_rng(0xD21F7, 0, 0);
        let slack = 1e-9;
        for _ in 0..10_000 {
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            let x = rng.random_range(-1.0..1.0) * scale;
            let y = x + rng.random_range(-1.0..1.0) * scale.min(1.0);
            let (bx, by) = ((self.b)(x), (self.b)(y));
            if !(bx.abs() <= self.bound * (1.0 + slack) + slack) {
                return domain(format!("drift `{}` exceeds bound {} at {x}", self.name, self.bound));
            }
            if (bx - by).abs() > self.lipschitz * (x - y).abs() * (1.0 + slack) + slack {
                return domain(format!(
                    "drift `{}` violates Lipschitz constant {} near {x}",
                    self.name, self.lipschitz
                ));
            }
        }
        Ok(())
    }

    pub fn zero() -> Self {
        Self::unchecked("zero".into(), Arc::new(|_| 0.0), 0.0, 0.0, vec![]).unwrap()
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::unchecked("const".into(), Arc::new(move |_| c), c.abs(), 0.0, vec![c])
    }

    /// `y ↦ a·cos(y)`.
    pub fn cos_scaled(a: f64) -> Result<Self> {
        Self::unchecked("cos_scaled".into(), Arc::new(move |y: f64| a * y.cos()), a.abs(), a.abs(), vec![a])
    }

    /// `y ↦ a·tanh(y)`.
    pub fn tanh_scaled(a: f64) -> Result<Self> {
        Self::unchecked("tanh_scaled".into(), Arc::new(move |y: f64| a * y.tanh()), a.abs(), a.abs(), vec![a])
    }

    /// Looks up a built-in drift by name.
    pub fn from_registry(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |p: Option<f64>| {
            p.ok_or_else(|| Error::Config(format!("drift `{name}` needs a parameter")))
        };
        match name {
            "zero" => Ok(Self::zero()),
            "const" => Self::constant(need(param)?),
            "cos_scaled" => Self::cos_scaled(need(param)?),
            "tanh_scaled" => Self::tanh_scaled(need(param)?),
            other => Err(Error::Config(format!("unknown drift `{other}`"))),
        }
    }

    /// Names accepted by [`DriftSpec::from_registry`].
    pub const REGISTRY: [&'static str; 4] = ["zero", "const", "cos_scaled", "tanh_scaled"];

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        (self.b)(y)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn is_zero(&self) -> bool {
        self.name == "zero"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Euler,
    /// Plain fixed-point iteration started from the input path.
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub step: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { scheme: Scheme::Rk4, step: 1.0 / 4096.0, picard_tol: 1e-8, picard_max_iter: 60 }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.picard_tol > 0.0) {
            return domain("solver step and tolerance must be positive");
        }
        Ok(())
    }
}

/// Outcome of [`apply_f_report`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub path: CadlagPath,
    /// `sup |f − ∫b(f) − g|` over the merged grid (trapezoid quadrature).
    pub residual: f64,
    pub picard_iterations: usize,
}

/// Merged grid of a path: times, left and right values, and which nodes are grid nodes.
struct Merged {
    times: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    node_index: Vec<Option<usize>>,
}

fn merged_grid(p: &CadlagPath, step: f64) -> Merged {
    let sub = ((p.delta() / step).ceil() as usize).max(1);
    let jumps = p.jumps();
    let mut times = Vec::with_capacity(p.cells() * sub + jumps.len() + 1);
    let mut node_index = Vec::with_capacity(times.capacity());
    let mut k = 0;
    for i in 0..p.cells() {
        let (a, b) = (p.node_time(i), p.node_time(i + 1));
        times.push(a);
        node_index.push(Some(i));
        for s in 1..sub {
            let t = a + (b - a) * s as f64 / sub as f64;
            while k < jumps.len() && jumps[k].time < t {
                if jumps[k].time > *times.last().unwrap() {
                    times.push(jumps[k].time);
                    node_index.push(None);
                }
                k += 1;
            }
            times.push(t);
            node_index.push(None);
        }
        while k < jumps.len() && jumps[k].time < b {
            if jumps[k].time > *times.last().unwrap() {
                times.push(jumps[k].time);
                node_index.push(None);
            }
            k += 1;
        }
    }
    times.push(1.0);
    node_index.push(Some(p.cells()));
    let left = times.iter().map(|&t| p.value_left(t)).collect();
    let right = times.iter().map(|&t| p.value_at(t)).collect();
    Merged { times, left, right, node_index }
}

fn rk4_step(b: &DriftSpec, f: f64, h: f64, slope: f64, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Euler => f + h * (b.eval(f) + slope),
        Scheme::Rk4 => {
            let k1 = b.eval(f) + slope;
            let k2 = b.eval(f + 0.5 * h * k1) + slope;
            let k3 = b.eval(f + 0.5 * h * k2) + slope;
            let k4 = b.eval(f + h * k3) + slope;
            f + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        }
        Scheme::Picard => f + h * slope,
    }
}

/// `F(g)`.
pub fn apply_f(drift: &DriftSpec, g: &CadlagPath, cfg: &SolverConfig) -> Result<CadlagPath> {
    Ok(apply_f_report(drift, g, cfg)?.path)
}

/// `F(g)` with the fixed-point residual.
///
/// The scheme provides a first approximation between jump times; fixed-point sweeps
/// `f ← g + ∫b(f)` (trapezoid rule on the merged grid) then polish it until successive sweeps
/// change by at most `picard_tol`.
pub fn apply_f_report(drift: &DriftSpec, g: &CadlagPath, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    if drift.is_zero() {
        return Ok(Solution { path: g.clone(), residual: 0.0, picard_iterations: 0 });
    }
    let m = merged_grid(g, cfg.step);
    let n = m.times.len();
    let mut fl = Vec::with_capacity(n);
    let mut fr = Vec::with_capacity(n);
    fl.push(m.left[0]);
    fr.push(m.right[0]);
    for k in 1..n {
        let h = m.times[k] - m.times[k - 1];
        // continuous part of g is linear between merged points
        let slope = (m.left[k] - m.right[k - 1]) / h;
        let f = rk4_step(drift, fr[k - 1], h, slope, cfg.scheme);
        fl.push(f);
        fr.push(f + (m.right[k] - m.left[k]));
    }

    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < cfg.picard_max_iter {
        iterations += 1;
        change = picard_sweep(drift, &m, &mut fl, &mut fr);
        if change <= cfg.picard_tol {
            break;
        }
    }
    let residual = fixed_point_residual(drift, &m, &fl, &fr);
    if !(change <= cfg.picard_tol) || !(residual <= cfg.picard_tol) {
        return Err(Error::Convergence { residual: residual.max(change), iterations });
    }

    let path = rebuild(g, &m, &fr);
    Ok(Solution { path, residual, picard_iterations: iterations })
}

fn picard_sweep(drift: &DriftSpec, m: &Merged, fl: &mut [f64], fr: &mut [f64]) -> f64 {
    let mut integral = 0.0;
    let mut prev_b = drift.eval(fr[0]);
    let mut change = 0.0_f64;
    for k in 1..m.times.len() {
        let h = m.times[k] - m.times[k - 1];
        let bl = drift.eval(fl[k]);
        integral += 0.5 * h * (prev_b + bl);
        let new_l = m.left[k] + integral;
        let new_r = m.right[k] + integral;
        change = change.max((new_l - fl[k]).abs());
        fl[k] = new_l;
        fr[k] = new_r;
        prev_b = drift.eval(new_r);
    }
    change
}

fn fixed_point_residual(drift: &DriftSpec, m: &Merged, fl: &[f64], fr: &[f64]) -> f64 {
    let mut integral = 0.0;
    let mut worst = (fr[0] - m.right[0]).abs();
    for k in 1..m.times.len() {
        let h = m.times[k] - m.times[k - 1];
        integral += 0.5 * h * (drift.eval(fr[k - 1]) + drift.eval(fl[k]));
        worst = worst.max((fl[k] - integral - m.left[k]).abs());
        worst = worst.max((fr[k] - integral - m.right[k]).abs());
    }
    worst
}

/// Path on the grid of `template` with values `right` on the merged grid and the jump registry
/// of `template`.
fn rebuild(template: &CadlagPath, m: &Merged, right: &[f64]) -> CadlagPath {
    let x0 = template.initial_value();
    let mut grid = vec![0.0; template.cells() + 1];
    for (k, idx) in m.node_index.iter().enumerate() {
        if let Some(i) = idx {
            let t = m.times[k];
            grid[*i] = right[k] - x0 - template.jump_part(t);
        }
    }
    CadlagPath::from_raw(x0, template.delta(), grid, template.jumps().to_vec())
}

/// `F⁻¹(f)`: `g(t) = f(t) − ∫_0^t b(f(s)) ds` by trapezoid quadrature on the merged grid.
pub fn apply_f_inverse(drift: &DriftSpec, f: &CadlagPath, cfg: &SolverConfig) -> Result<CadlagPath> {
    cfg.validate()?;
    if drift.is_zero() {
        return Ok(f.clone());
    }
    let m = merged_grid(f, cfg.step);
    let mut integral = 0.0;
    let mut g = Vec::with_capacity(m.times.len());
    g.push(m.right[0]);
    for k in 1..m.times.len() {
        let h = m.times[k] - m.times[k - 1];
        integral += 0.5 * h * (drift.eval(m.right[k - 1]) + drift.eval(m.left[k]));
        g.push(m.right[k] - integral);
    }
    if g.iter().any(|v| !v.is_finite()) {
        return domain("quadrature produced a non-finite value");
    }
    Ok(rebuild(f, &m, &g))
}

/// Forward Euler for `dY = b(Y) dt + dN` where `N` is the given noise path, with steps split at
/// jump times and jumps applied atomically. The output lives on the noise grid.
pub fn euler_solve_sde(drift: &DriftSpec, noise: &CadlagPath, step: f64) -> Result<CadlagPath> {
    if !(step > 0.0) {
        return domain(format!("step {step} must be positive"));
    }
    if drift.is_zero() {
        return Ok(noise.clone());
    }
    let sub = ((noise.delta() / step).ceil() as usize).max(1);
    let jumps = noise.jumps();
    let x0 = noise.initial_value();
    let cont = noise.grid_values();
    let mut grid = Vec::with_capacity(noise.cells() + 1);
    let mut y = x0 + cont[0];
    grid.push(cont[0]);
    let mut k = 0;
    let mut jump_acc = 0.0;
    for i in 0..noise.cells() {
        let (a, b) = (noise.node_time(i), noise.node_time(i + 1));
        let slope = (cont[i + 1] - cont[i]) / (b - a);
        let h = (b - a) / sub as f64;
        let mut t = a;
        for s in 1..=sub {
            let end = if s == sub { b } else { a + h * s as f64 };
            while k < jumps.len() && jumps[k].time <= end {
                let tj = jumps[k].time;
                if tj > t {
                    y += (tj - t) * (drift.eval(y) + slope);
                    t = tj;
                }
                y += jumps[k].size;
                jump_acc += jumps[k].size;
                k += 1;
            }
            if end > t {
                y += (end - t) * (drift.eval(y) + slope);
                t = end;
            }
        }
        grid.push(y - x0 - jump_acc);
    }
    Ok(CadlagPath::from_raw(x0, noise.delta(), grid, jumps.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cadlag::{uniform_distance, JumpEvent};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn zero_drift_is_identity() {
        let g = CadlagPath::step_from_jumps(&[(0.3, 1.0), (0.6, -2.0)]).unwrap();
        let f = apply_f(&DriftSpec::zero(), &g, &cfg()).unwrap();
        assert_eq!(f, g);
        assert_eq!(apply_f_inverse(&DriftSpec::zero(), &g, &cfg()).unwrap(), g);
        assert_eq!(euler_solve_sde(&DriftSpec::zero(), &g, 1e-3).unwrap(), g);
    }

    #[test]
    fn constant_drift_from_zero_path() {
        let g = CadlagPath::zero(1.0 / 4096.0).unwrap();
        let f = apply_f(&DriftSpec::constant(0.5).unwrap(), &g, &cfg()).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            assert!((f.eval(t).unwrap() - 0.5 * t).abs() < 1e-12);
        }
        let y = euler_solve_sde(&DriftSpec::constant(0.5).unwrap(), &g, 1.0 / 4096.0).unwrap();
        assert!((y.terminal_value() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_drift_decouples_from_jump() {
        let b = DriftSpec::constant(1.0).unwrap();
        let g = CadlagPath::step_from_jumps(&[(0.5, 1.0)]).unwrap();
        let f = apply_f(&b, &g, &cfg()).unwrap();
        let expected = CadlagPath::from_fn(1.0 / 4096.0, |t| t)
            .unwrap()
            .with_jumps(vec![JumpEvent::new(0.5, 1.0)])
            .unwrap();
        assert!(uniform_distance(&f, &expected) < 1e-12);
        let back = apply_f_inverse(&b, &expected, &cfg()).unwrap();
        assert!(uniform_distance(&back, &g) < 1e-12);
    }

    #[test]
    fn matches_fine_euler_reference() {
        // reference: forward Euler at step 2^-20 (< 1e-6) with the jump applied at t = 0.5
        let a = 0.2;
        let mut y = 0.0_f64;
        let n = 4096 * 256;
        let h = 1.0 / n as f64;
        let mut reference = vec![0.0; 4097];
        for i in 0..n {
            y += h * a * y.cos();
            if i + 1 == n / 2 {
                y += 1.0;
            }
            if (i + 1) % 256 == 0 {
                reference[(i + 1) / 256] = y;
            }
        }
        let g = CadlagPath::step_from_jumps(&[(0.5, 1.0)]).unwrap();
        let f = apply_f(&DriftSpec::cos_scaled(a).unwrap(), &g, &cfg()).unwrap();
        let worst = (0..=4096).map(|i| (f.node_value(i) - reference[i]).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-4, "worst gap {worst}");
    }

    #[test]
    fn all_schemes_reach_the_same_fixed_point() {
        let g = CadlagPath::step_from_jumps(&[(0.2, 1.5), (0.7, -2.5)]).unwrap();
        let b = DriftSpec::tanh_scaled(1.0).unwrap();
        let base = apply_f(&b, &g, &cfg()).unwrap();
        for scheme in [Scheme::Euler, Scheme::Picard] {
            let f = apply_f(&b, &g, &SolverConfig { scheme, ..cfg() }).unwrap();
            assert!(uniform_distance(&f, &base) < 1e-7);
        }
    }

    #[test]
    fn convergence_failure_is_reported() {
        let g = CadlagPath::step_from_jumps(&[(0.2, 1.5)]).unwrap();
        let b = DriftSpec::tanh_scaled(3.0).unwrap();
        let bad = SolverConfig { scheme: Scheme::Picard, picard_max_iter: 1, ..cfg() };
        assert!(matches!(apply_f(&b, &g, &bad), Err(Error::Convergence { .. })));
    }

    #[test]
    fn registry_and_custom_drifts() {
        for name in DriftSpec::REGISTRY {
            let d = DriftSpec::from_registry(name, Some(0.3)).unwrap();
            assert_eq!(d.name(), name);
        }
        assert!(DriftSpec::from_registry("cos_scaled", None).is_err());
        assert!(DriftSpec::from_registry("sin", Some(1.0)).is_err());
        assert!(DriftSpec::custom("sin", |y: f64| 0.5 * y.sin(), 0.5, 0.5).is_ok());
        assert!(DriftSpec::custom("linear", |y: f64| y, 1.0, 1.0).is_err());
        assert!(DriftSpec::custom("steep", |y: f64| (3.0 * y).sin(), 1.0, 1.0).is_err());
    }

    #[test]
    fn euler_tracks_fixed_point_solution() {
        let g = CadlagPath::step_from_jumps(&[(0.3, 1.0), (0.55, -0.5)]).unwrap();
        let b = DriftSpec::cos_scaled(0.2).unwrap();
        let f = apply_f(&b, &g, &cfg()).unwrap();
        let y = euler_solve_sde(&b, &g, 1.0 / 4096.0).unwrap();
        assert_eq!(y.jumps(), g.jumps());
        assert!(uniform_distance(&f, &y) < 0.2 / 4096.0 * 4.0);
    }
}
