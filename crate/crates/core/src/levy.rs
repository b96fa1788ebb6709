//! Regularly varying Lévy measures and sampling of the scaled driving path `εL^ε`.
//!
//! The tails are `ν([x, ∞)) = c₊ L₊(x) x^{−α}` and `ν((−∞, −x]) = c₋ L₋(x) x^{−β}`. Jumps with
//! `|z| > τ` are simulated exactly as a compound Poisson process; the compensated small jumps
//! are either dropped or replaced by a Brownian motion of matched variance.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cadlag::{CadlagPath, JumpEvent, DEFAULT_DELTA};
use crate::error::{domain, Error, Result};
use crate::rng::stream_rng;

/// Largest expected number of simulated jumps per path before the sampler refuses.
pub const MAX_EXPECTED_JUMPS: f64 = 1e8;

/// Target for `ε ∫_{|z|≤τ} z² ν(dz)` used by [`default_truncation`].
pub const SMALL_JUMP_VARIANCE_TARGET: f64 = 1e-4;

/// Slowly varying factor of a tail.
#[derive(Clone, Default)]
pub enum SlowlyVarying {
    #[default]
    Unit,
    /// User function that must be constant on `[x_star, ∞)`.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, x_star: f64 },
}

impl SlowlyVarying {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, x_star: f64) -> Self {
        Self::Custom { f: Arc::new(f), x_star }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Unit => 1.0,
            Self::Custom { f, x_star } => f(x.min(*x_star)),
        }
    }

    /// Value on the constant region `[x_star, ∞)`; errors if `tau` is below it.
    fn constant_beyond(&self, tau: f64) -> Result<f64> {
        match self {
            Self::Unit => Ok(1.0),
            Self::Custom { f, x_star } => {
                if tau < *x_star {
                    return domain(format!(
                        "truncation {tau} below x* = {x_star}: slowly varying factor is not constant there"
                    ));
                }
                Ok(f(*x_star))
            }
        }
    }

    fn is_unit(&self) -> bool {
        matches!(self, Self::Unit)
    }
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Unit => write!(f, "Unit"),
            Self::Custom { x_star, .. } => write!(f, "Custom {{ x_star: {x_star} }}"),
        }
    }
}

/// Which tail a jump comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Up,
    Down,
}

/// Two-sided regularly varying Lévy measure plus a Brownian coefficient.
#[derive(Debug, Clone)]
pub struct TailModel {
    pub alpha: f64,
    pub beta: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub l_plus: SlowlyVarying,
    pub l_minus: SlowlyVarying,
    pub sigma: f64,
}

/// Serializable part of a [`TailModel`] (slowly varying factors are unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub alpha: f64,
    pub beta: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub sigma: f64,
}

impl TailModel {
    pub fn new(alpha: f64, beta: f64, c_plus: f64, c_minus: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 1.0 && beta > 1.0) || !alpha.is_finite() || !beta.is_finite() {
            return domain(format!("tail indices must exceed 1 (alpha={alpha}, beta={beta})"));
        }
        if !(c_plus >= 0.0 && c_minus >= 0.0 && sigma >= 0.0) {
            return domain("tail constants and sigma must be non-negative");
        }
        Ok(Self {
            alpha,
            beta,
            c_plus,
            c_minus,
            l_plus: SlowlyVarying::Unit,
            l_minus: SlowlyVarying::Unit,
            sigma,
        })
    }

    pub fn from_params(p: TailParams) -> Result<Self> {
        Self::new(p.alpha, p.beta, p.c_plus, p.c_minus, p.sigma)
    }

    pub fn params(&self) -> TailParams {
        TailParams {
            alpha: self.alpha,
            beta: self.beta,
            c_plus: self.c_plus,
            c_minus: self.c_minus,
            sigma: self.sigma,
        }
    }

    pub fn with_slowly_varying(mut self, l_plus: SlowlyVarying, l_minus: SlowlyVarying) -> Self {
        self.l_plus = l_plus;
        self.l_minus = l_minus;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        self.alpha == self.beta
            && self.c_plus == self.c_minus
            && self.l_plus.is_unit()
            && self.l_minus.is_unit()
    }

    /// `ν([x, ∞))`.
    pub fn tail_upper(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return domain(format!("tail evaluated at non-positive x = {x}"));
        }
        Ok(self.c_plus * self.l_plus.eval(x) * x.powf(-self.alpha))
    }

    /// `ν((−∞, −x])`.
    pub fn tail_lower(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return domain(format!("tail evaluated at non-positive x = {x}"));
        }
        Ok(self.c_minus * self.l_minus.eval(x) * x.powf(-self.beta))
    }

    fn index(&self, side: Side) -> f64 {
        match side {
            Side::Up => self.alpha,
            Side::Down => self.beta,
        }
    }

    /// Effective tail constants `c·L(τ)` on `|z| > τ`.
    fn constants_beyond(&self, tau: f64) -> Result<(f64, f64)> {
        Ok((
            self.c_plus * self.l_plus.constant_beyond(tau)?,
            self.c_minus * self.l_minus.constant_beyond(tau)?,
        ))
    }

    /// `ν(|z| > τ)`.
    pub fn mass_beyond(&self, tau: f64) -> Result<f64> {
        let (cp, cm) = self.constants_beyond(tau)?;
        Ok(cp * tau.powf(-self.alpha) + cm * tau.powf(-self.beta))
    }

    /// `∫_{|z|>τ} z ν(dz)`.
    pub fn mean_beyond(&self, tau: f64) -> Result<f64> {
        let (cp, cm) = self.constants_beyond(tau)?;
        let up = cp * self.alpha / (self.alpha - 1.0) * tau.powf(1.0 - self.alpha);
        let down = cm * self.beta / (self.beta - 1.0) * tau.powf(1.0 - self.beta);
        Ok(up - down)
    }

    /// `∫_{|z|≤τ} z² ν(dz)`; infinite when an index is at least 2 and its constant is positive.
    pub fn small_jump_variance(&self, tau: f64) -> f64 {
        let side = |c: f64, idx: f64, l: &SlowlyVarying| -> f64 {
            if c == 0.0 {
                return 0.0;
            }
            if idx >= 2.0 {
                return f64::INFINITY;
            }
            match l {
                SlowlyVarying::Unit => c * idx * tau.powf(2.0 - idx) / (2.0 - idx),
                SlowlyVarying::Custom { .. } => {
                    // ∫_0^τ z² ν(dz) = −τ² T(τ) + 2∫_0^τ z T(z) dz with z = τ e^{−u}
                    let tail = |z: f64| c * l.eval(z) * z.powf(-idx);
                    let upper = 60.0 / (2.0 - idx);
                    let steps = 20_000;
                    let h = upper / steps as f64;
                    let g = |u: f64| 2.0 * tau * tau * (-2.0 * u).exp() * tail(tau * (-u).exp());
                    let mut acc = 0.5 * (g(0.0) + g(upper));
                    for i in 1..steps {
                        acc += g(i as f64 * h);
                    }
                    acc * h - tau * tau * tail(tau)
                }
            }
        };
        side(self.c_plus, self.alpha, &self.l_plus) + side(self.c_minus, self.beta, &self.l_minus)
    }
}

/// Symmetric α-stable Lévy measure `ν(dz) = |z|^{−1−α} dz`.
pub fn stable_preset(alpha: f64) -> Result<TailModel> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return domain(format!("stable index {alpha} outside (1,2)"));
    }
    TailModel::new(alpha, alpha, 1.0 / alpha, 1.0 / alpha, 0.0)
}

/// Pareto inverse CDF: size `≥ floor` with `P(size > x) = (x/floor)^{−index}`.
pub fn sample_jump_size(model: &TailModel, side: Side, floor: f64, u: f64) -> Result<f64> {
    if !(floor > 0.0) {
        return domain(format!("jump floor {floor} must be positive"));
    }
    if !(u > 0.0 && u <= 1.0) {
        return domain(format!("uniform variate {u} outside (0,1]"));
    }
    Ok(pareto(floor, model.index(side), u))
}

#[inline]
pub(crate) fn pareto(floor: f64, index: f64, u: f64) -> f64 {
    floor * u.powf(-1.0 / index)
}

/// Simulation settings for one scaled path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub epsilon: f64,
    /// Small-jump truncation `τ` in the unscaled jump variable.
    pub trunc_tau: f64,
    pub gaussian_smalljump: bool,
    pub grid_delta: f64,
    pub seed: u64,
    pub stream_id: u64,
}

impl SimConfig {
    pub fn new(epsilon: f64, trunc_tau: f64) -> Self {
        Self {
            epsilon,
            trunc_tau,
            gaussian_smalljump: false,
            grid_delta: DEFAULT_DELTA,
            seed: 0,
            stream_id: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return domain(format!("epsilon {} outside (0,1]", self.epsilon));
        }
        if !(self.trunc_tau > 0.0) {
            return domain(format!("truncation {} must be positive", self.trunc_tau));
        }
        crate::cadlag::CadlagPath::zero(self.grid_delta).map(|_| ())
    }
}

/// Smallest power-of-two truncation with `ε ∫_{|z|≤τ} z² ν ≤ 10⁻⁴`.
pub fn default_truncation(model: &TailModel, epsilon: f64) -> Result<f64> {
    let mut tau: f64 = 1.0;
    let var = |t: f64| epsilon * model.small_jump_variance(t);
    if !var(tau).is_finite() {
        return domain("small-jump variance is infinite for this model; set the truncation explicitly");
    }
    while var(tau) > SMALL_JUMP_VARIANCE_TARGET && tau > 1e-300 {
        tau *= 0.5;
    }
    while var(tau * 2.0) <= SMALL_JUMP_VARIANCE_TARGET && tau < 1e300 {
        tau *= 2.0;
    }
    Ok(tau)
}

/// Expected number of simulated jumps `ε⁻¹ ν(|z| > τ)`.
pub fn expected_jump_count(model: &TailModel, cfg: &SimConfig) -> Result<f64> {
    Ok(model.mass_beyond(cfg.trunc_tau)? / cfg.epsilon)
}

/// Precomputed sampler for many paths with one model and configuration.
#[derive(Debug, Clone)]
pub struct ScaledPathSampler {
    cfg: SimConfig,
    alpha: f64,
    beta: f64,
    rate: f64,
    p_up: f64,
    drift: f64,
    diffusion_sd: f64,
    cells: usize,
    poisson: Option<Poisson<f64>>,
}

impl ScaledPathSampler {
    pub fn new(model: &TailModel, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let cells = crate::cadlag::CadlagPath::zero(cfg.grid_delta)?.cells();
        let tau = cfg.trunc_tau;
        let eps = cfg.epsilon;
        let (cp, cm) = model.constants_beyond(tau)?;
        let up_mass = cp * tau.powf(-model.alpha);
        let down_mass = cm * tau.powf(-model.beta);
        let rate = (up_mass + down_mass) / eps;
        if rate > MAX_EXPECTED_JUMPS {
            return Err(Error::TruncationTooSmall { expected: rate, limit: MAX_EXPECTED_JUMPS });
        }
        let mut var = model.sigma * model.sigma * eps;
        if cfg.gaussian_smalljump {
            let v = model.small_jump_variance(tau);
            if !v.is_finite() {
                return domain("small-jump variance is infinite; disable gaussian_smalljump");
            }
            var += eps * v;
        }
        let poisson = if rate > 0.0 {
            Some(Poisson::new(rate).map_err(|e| Error::Domain(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            cfg: *cfg,
            alpha: model.alpha,
            beta: model.beta,
            rate,
            p_up: if rate > 0.0 { up_mass / (up_mass + down_mass) } else { 0.0 },
            drift: -model.mean_beyond(tau)?,
            diffusion_sd: (var * cfg.grid_delta).sqrt(),
            cells,
            poisson,
        })
    }

    pub fn expected_jumps(&self) -> f64 {
        self.rate
    }

    /// Deterministic compensator slope of the continuous part.
    pub fn compensator_drift(&self) -> f64 {
        self.drift
    }

    /// Path for sub-stream `index` of the configured `(seed, stream_id)`.
    pub fn sample(&self, index: u64) -> CadlagPath {
        let mut rng = stream_rng(self.cfg.seed, self.cfg.stream_id, index);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> CadlagPath {
        let eps = self.cfg.epsilon;
        let tau = self.cfg.trunc_tau;
        let count = match &self.poisson {
            Some(p) => p.sample(rng) as usize,
            None => 0,
        };
        let mut jumps = Vec::with_capacity(count);
        for _ in 0..count {
            let t: f64 = 1.0 - rng.random::<f64>();
            let side_u: f64 = rng.random();
            let u: f64 = 1.0 - rng.random::<f64>();
            let size = if side_u < self.p_up {
                eps * pareto(tau, self.alpha, u)
            } else {
                -eps * pareto(tau, self.beta, u)
            };
            jumps.push(JumpEvent::new(t, size));
        }
        let h = self.cfg.grid_delta;
        let mut grid = Vec::with_capacity(self.cells + 1);
        let mut acc = 0.0;
        grid.push(0.0);
        for _ in 0..self.cells {
            acc += self.drift * h;
            if self.diffusion_sd > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                acc += self.diffusion_sd * z;
            }
            grid.push(acc);
        }
        CadlagPath::new(0.0, h, grid, jumps, 0.0).expect("sampler produces valid paths")
    }
}

/// One sample path of `εL^ε` on `[0, 1]`.
pub fn sample_scaled_path(model: &TailModel, cfg: &SimConfig) -> Result<CadlagPath> {
    Ok(ScaledPathSampler::new(model, cfg)?.sample(0))
}
