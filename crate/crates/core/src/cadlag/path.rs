use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Default grid step for the continuous part.
pub const DEFAULT_DELTA: f64 = 1.0 / 4096.0;

/// Default jump-resolution floor for constructed paths.
pub const DEFAULT_JUMP_FLOOR: f64 = 1e-9;

/// A single jump of a càdlàg path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    #[serde(rename = "t")]
    pub time: f64,
    pub size: f64,
}

impl JumpEvent {
    pub fn new(time: f64, size: f64) -> Self {
        Self { time, size }
    }
}

/// A càdlàg function on `[0, 1]`.
///
/// The value at `t` is `initial_value + cont(t) + sum of jump sizes at times <= t`, where
/// `cont` linearly interpolates `grid_values` on a uniform grid of step `delta`. Jumps are kept
/// in an explicit registry so that counts and sizes survive every transformation exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    initial_value: f64,
    delta: f64,
    cells: usize,
    grid_values: Vec<f64>,
    jumps: Vec<JumpEvent>,
    // cumulative[i] = sum of sizes of jumps[..i]
    cumulative: Vec<f64>,
}

impl CadlagPath {
    /// Builds a path, folding jumps smaller than `jump_floor` into the continuous part and
    /// merging jumps that share a time.
    pub fn new(
        initial_value: f64,
        delta: f64,
        grid_values: Vec<f64>,
        jumps: Vec<JumpEvent>,
        jump_floor: f64,
    ) -> Result<Self> {
        let cells = cells_for_delta(delta)?;
        if grid_values.len() != cells + 1 {
            return domain(format!(
                "grid has {} values, expected {} for delta {delta}",
                grid_values.len(),
                cells + 1
            ));
        }
        if !initial_value.is_finite() || grid_values.iter().any(|v| !v.is_finite()) {
            return domain("non-finite path value");
        }
        let mut jumps = jumps;
        for j in &jumps {
            if !(j.time > 0.0 && j.time <= 1.0) || !j.size.is_finite() {
                return domain(format!("jump at {} with size {} outside (0,1]", j.time, j.size));
            }
        }
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut merged: Vec<JumpEvent> = Vec::with_capacity(jumps.len());
        for j in jumps {
            match merged.last_mut() {
                Some(last) if last.time == j.time => last.size += j.size,
                _ => merged.push(j),
            }
        }
        let mut grid_values = grid_values;
        let mut kept = Vec::with_capacity(merged.len());
        for j in merged {
            if j.size.abs() >= jump_floor && j.size != 0.0 {
                kept.push(j);
            } else if j.size != 0.0 {
                // Fold: the tiny step becomes a steep linear ramp inside the containing cell.
                let first = (j.time / delta).ceil() as usize;
                for v in grid_values.iter_mut().skip(first.min(cells + 1)) {
                    *v += j.size;
                }
            }
        }
        Ok(Self::from_parts(initial_value, delta, cells, grid_values, kept))
    }

    fn from_parts(
        initial_value: f64,
        delta: f64,
        cells: usize,
        grid_values: Vec<f64>,
        jumps: Vec<JumpEvent>,
    ) -> Self {
        let mut cumulative = Vec::with_capacity(jumps.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for j in &jumps {
            acc += j.size;
            cumulative.push(acc);
        }
        Self { initial_value, delta, cells, grid_values, jumps, cumulative }
    }

    /// Pure step path with zero continuous part on the given grid.
    pub fn step(initial_value: f64, jumps: Vec<JumpEvent>, delta: f64) -> Result<Self> {
        let cells = cells_for_delta(delta)?;
        Self::new(initial_value, delta, vec![0.0; cells + 1], jumps, DEFAULT_JUMP_FLOOR)
    }

    /// Step path on the default grid, vanishing at the origin.
    pub fn step_from_jumps(jumps: &[(f64, f64)]) -> Result<Self> {
        let jumps = jumps.iter().map(|&(t, s)| JumpEvent::new(t, s)).collect();
        Self::step(0.0, jumps, DEFAULT_DELTA)
    }

    pub fn zero(delta: f64) -> Result<Self> {
        Self::step(0.0, Vec::new(), delta)
    }

    /// Continuous path sampled from `f` on the grid (no jumps).
    pub fn from_fn(delta: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let cells = cells_for_delta(delta)?;
        let grid = (0..=cells).map(|i| f(i as f64 * delta)).collect();
        Self::new(0.0, delta, grid, Vec::new(), DEFAULT_JUMP_FLOOR)
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.grid_values
    }

    pub fn jumps(&self) -> &[JumpEvent] {
        &self.jumps
    }

    /// Grid time of node `i`.
    #[inline]
    pub fn node_time(&self, i: usize) -> f64 {
        if i == self.cells {
            1.0
        } else {
            i as f64 * self.delta
        }
    }

    /// Continuous part at `t` (linear interpolation of the grid).
    #[inline]
    pub fn cont(&self, t: f64) -> f64 {
        let pos = t / self.delta;
        let mut idx = pos.floor() as usize;
        if idx >= self.cells {
            idx = self.cells - 1;
        }
        let frac = (pos - idx as f64).clamp(0.0, 1.0);
        let a = self.grid_values[idx];
        let b = self.grid_values[idx + 1];
        a + (b - a) * frac
    }

    /// Sum of jump sizes at times `<= t`.
    #[inline]
    pub fn jump_part(&self, t: f64) -> f64 {
        let n = self.jumps.partition_point(|j| j.time <= t);
        self.cumulative[n]
    }

    /// Sum of jump sizes at times `< t`.
    #[inline]
    pub fn jump_part_left(&self, t: f64) -> f64 {
        let n = self.jumps.partition_point(|j| j.time < t);
        self.cumulative[n]
    }

    /// Right-continuous value at `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.value_at(t))
    }

    /// Left limit at `t`; at `t = 0` this is the value at the origin.
    pub fn eval_left(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.value_left(t))
    }

    #[inline]
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        self.initial_value + self.cont(t) + self.jump_part(t)
    }

    #[inline]
    pub(crate) fn value_left(&self, t: f64) -> f64 {
        self.initial_value + self.cont(t) + self.jump_part_left(t)
    }

    /// Value at grid node `i` (right-continuous).
    pub fn node_value(&self, i: usize) -> f64 {
        self.initial_value + self.grid_values[i] + self.jump_part(self.node_time(i))
    }

    pub fn terminal_value(&self) -> f64 {
        self.value_at(1.0)
    }

    /// Sorted, deduplicated breakpoints: grid nodes and jump times.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..=self.cells).map(|i| self.node_time(i)).collect();
        pts.extend(self.jumps.iter().map(|j| j.time));
        sort_dedup(&mut pts);
        pts
    }

    /// `(sup, inf)` over `[0, 1]`, including left limits.
    pub fn sup_inf(&self) -> (f64, f64) {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        let mut acc = 0.0;
        let mut next_jump = 0;
        for i in 0..=self.cells {
            let t = self.node_time(i);
            while next_jump < self.jumps.len() && self.jumps[next_jump].time <= t {
                let j = self.jumps[next_jump];
                let base = self.initial_value + self.cont(j.time) + acc;
                hi = hi.max(base).max(base + j.size);
                lo = lo.min(base).min(base + j.size);
                acc += j.size;
                next_jump += 1;
            }
            let v = self.initial_value + self.grid_values[i] + acc;
            hi = hi.max(v);
            lo = lo.min(v);
        }
        (hi, lo)
    }

    pub fn sup(&self) -> f64 {
        self.sup_inf().0
    }

    pub fn inf(&self) -> f64 {
        self.sup_inf().1
    }

    /// Uniform norm of the path.
    pub fn sup_norm(&self) -> f64 {
        let (hi, lo) = self.sup_inf();
        hi.abs().max(lo.abs())
    }

    /// Largest deviation of the continuous part from zero.
    pub fn cont_sup_variation(&self) -> f64 {
        self.grid_values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// True when the continuous part is identically zero.
    pub fn is_step(&self) -> bool {
        self.grid_values.iter().all(|v| *v == 0.0)
    }

    /// Values `X_0, X_1, ...` taken by a step path after each jump.
    pub(crate) fn step_levels(&self) -> Vec<f64> {
        self.cumulative.iter().map(|c| self.initial_value + c).collect()
    }

    /// Same path with jumps replaced; the continuous part is unchanged.
    pub fn with_jumps(&self, jumps: Vec<JumpEvent>) -> Result<Self> {
        Self::new(self.initial_value, self.delta, self.grid_values.clone(), jumps, 0.0)
    }

    /// Rebuild on a new grid; keeps the jump registry verbatim.
    pub(crate) fn from_raw(
        initial_value: f64,
        delta: f64,
        grid_values: Vec<f64>,
        jumps: Vec<JumpEvent>,
    ) -> Self {
        let cells = grid_values.len() - 1;
        Self::from_parts(initial_value, delta, cells, grid_values, jumps)
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        domain(format!("time {t} outside [0,1]"))
    }
}

pub(crate) fn cells_for_delta(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return domain(format!("grid step {delta} outside (0,1]"));
    }
    let cells = (1.0 / delta).round();
    if (cells * delta - 1.0).abs() > 1e-9 {
        return domain(format!("grid step {delta} does not divide [0,1]"));
    }
    Ok(cells as usize)
}

pub(crate) fn sort_dedup(pts: &mut Vec<f64>) {
    pts.sort_by(f64::total_cmp);
    pts.dedup();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator(a: f64, h: f64) -> CadlagPath {
        CadlagPath::step_from_jumps(&[(a, h)]).unwrap()
    }

    #[test]
    fn eval_is_right_continuous() {
        let p = indicator(0.5, 2.0);
        assert_eq!(p.eval(0.5).unwrap(), 2.0);
        assert_eq!(p.eval(0.499).unwrap(), 0.0);
        assert_eq!(p.eval_left(0.5).unwrap(), 0.0);
        assert_eq!(p.eval(1.0).unwrap(), 2.0);
    }

    #[test]
    fn eval_rejects_outside_unit_interval() {
        let p = indicator(0.5, 2.0);
        assert!(p.eval(-0.1).is_err());
        assert!(p.eval(1.1).is_err());
        assert!(p.eval_left(1.5).is_err());
    }

    #[test]
    fn tiny_jumps_fold_into_continuous_part() {
        let p = CadlagPath::step(0.0, vec![JumpEvent::new(0.5, 1e-12), JumpEvent::new(0.7, 1.0)], 0.25)
            .unwrap();
        assert_eq!(p.jumps().len(), 1);
        assert!((p.terminal_value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn coincident_jumps_merge() {
        let p = CadlagPath::step_from_jumps(&[(0.3, 1.0), (0.3, 0.5)]).unwrap();
        assert_eq!(p.jumps(), &[JumpEvent::new(0.3, 1.5)]);
    }

    #[test]
    fn rejects_jump_at_origin_and_bad_grid() {
        assert!(CadlagPath::step_from_jumps(&[(0.0, 1.0)]).is_err());
        assert!(CadlagPath::step(0.0, vec![], 0.3).is_err());
        assert!(CadlagPath::new(0.0, 0.5, vec![0.0, 1.0], vec![], 0.0).is_err());
    }

    #[test]
    fn sup_inf_sees_left_limits() {
        let p = CadlagPath::step_from_jumps(&[(0.3, 2.0), (0.6, -3.0)]).unwrap();
        assert_eq!(p.sup_inf(), (2.0, -1.0));
        let ramp = CadlagPath::from_fn(0.25, |t| 0.2 * t).unwrap();
        assert!((ramp.sup() - 0.2).abs() < 1e-15);
        assert_eq!(ramp.inf(), 0.0);
    }
}
