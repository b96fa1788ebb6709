use crate::error::{domain, Result};

use super::path::{sort_dedup, CadlagPath};

/// Increasing piecewise-linear bijection of `[0, 1]` given by its knots.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    // (s, lambda(s)), starting at (0,0) and ending at (1,1)
    knots: Vec<(f64, f64)>,
}

impl TimeChange {
    pub fn identity() -> Self {
        Self { knots: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    /// Interior knots `(s, lambda(s))`; the endpoints are added automatically.
    pub fn new(interior: &[(f64, f64)]) -> Result<Self> {
        let mut knots = Vec::with_capacity(interior.len() + 2);
        knots.push((0.0, 0.0));
        knots.extend_from_slice(interior);
        knots.push((1.0, 1.0));
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return domain(format!(
                    "time change knots not strictly increasing: {:?} -> {:?}",
                    w[0], w[1]
                ));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// `lambda(s)`.
    pub fn apply(&self, s: f64) -> f64 {
        interp(&self.knots, s, |k| k.0, |k| k.1)
    }

    /// `lambda^{-1}(u)`.
    pub fn inverse(&self, u: f64) -> f64 {
        interp(&self.knots, u, |k| k.1, |k| k.0)
    }

    /// `sup_s |lambda(s) - s|`, attained at a knot.
    pub fn displacement(&self) -> f64 {
        self.knots.iter().fold(0.0_f64, |m, (s, l)| m.max((l - s).abs()))
    }

    pub fn is_identity(&self) -> bool {
        self.knots.iter().all(|(s, l)| s == l)
    }
}

fn interp(knots: &[(f64, f64)], x: f64, key: impl Fn(&(f64, f64)) -> f64, val: impl Fn(&(f64, f64)) -> f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let i = knots.partition_point(|k| key(k) <= x).clamp(1, knots.len() - 1);
    let (a, b) = (&knots[i - 1], &knots[i]);
    let (ka, kb) = (key(a), key(b));
    let w = (x - ka) / (kb - ka);
    val(a) + (val(b) - val(a)) * w
}

/// `x ∘ lambda` as a path: jumps relocated to `lambda^{-1}(time)` with identical sizes and the
/// continuous part resampled on the same grid.
pub fn compose_time_change(x: &CadlagPath, lambda: &TimeChange) -> CadlagPath {
    if lambda.is_identity() {
        return x.clone();
    }
    let grid = (0..=x.cells())
        .map(|i| x.cont(lambda.apply(x.node_time(i))))
        .collect();
    let jumps = x
        .jumps()
        .iter()
        .map(|j| super::JumpEvent::new(lambda.inverse(j.time), j.size))
        .collect();
    CadlagPath::from_raw(x.initial_value(), x.delta(), grid, jumps)
}

/// Exact view of `x ∘ lambda` used by the distance computations: the continuous part is
/// evaluated through `lambda` (no resampling) and jump times are mapped once so that the
/// relocated jumps sit exactly at the breakpoints.
pub(crate) struct Composed<'a> {
    x: &'a CadlagPath,
    lambda: &'a TimeChange,
    jump_times: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<'a> Composed<'a> {
    pub(crate) fn new(x: &'a CadlagPath, lambda: &'a TimeChange) -> Self {
        let jump_times: Vec<f64> = x.jumps().iter().map(|j| lambda.inverse(j.time)).collect();
        let mut cumulative = vec![0.0];
        let mut acc = 0.0;
        for j in x.jumps() {
            acc += j.size;
            cumulative.push(acc);
        }
        Self { x, lambda, jump_times, cumulative }
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        let n = self.jump_times.partition_point(|&s| s <= t);
        self.x.initial_value() + self.x.cont(self.lambda.apply(t)) + self.cumulative[n]
    }

    pub(crate) fn value_left(&self, t: f64) -> f64 {
        let n = self.jump_times.partition_point(|&s| s < t);
        self.x.initial_value() + self.x.cont(self.lambda.apply(t)) + self.cumulative[n]
    }

    /// Breakpoints in the outer time variable.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.lambda.knots().iter().map(|k| k.0).collect();
        if !self.x.grid_values().iter().all(|v| *v == self.x.grid_values()[0]) {
            pts.extend((0..=self.x.cells()).map(|i| self.lambda.inverse(self.x.node_time(i))));
        }
        pts.extend_from_slice(&self.jump_times);
        pts.push(0.0);
        pts.push(1.0);
        sort_dedup(&mut pts);
        pts
    }
}

/// Evaluates both one-sided values of `a - b` at every merged breakpoint and reports the sup of
/// the absolute difference; both sides are linear between breakpoints so this is exact.
pub(crate) fn sup_abs_difference(
    pts: &[f64],
    a: impl Fn(f64) -> (f64, f64),
    b: impl Fn(f64) -> (f64, f64),
) -> f64 {
    let mut m = 0.0_f64;
    for &t in pts {
        let (ar, al) = a(t);
        let (br, bl) = b(t);
        m = m.max((ar - br).abs()).max((al - bl).abs());
    }
    m
}

/// `‖x ∘ lambda − y‖` computed exactly on the merged breakpoints.
pub fn sup_distance_composed(x: &CadlagPath, lambda: &TimeChange, y: &CadlagPath) -> f64 {
    let c = Composed::new(x, lambda);
    let mut pts = c.breakpoints();
    pts.extend(y.breakpoints());
    sort_dedup(&mut pts);
    sup_abs_difference(
        &pts,
        |t| (c.value(t), c.value_left(t)),
        |t| (y.value_at(t), y.value_left(t)),
    )
}

/// `∫_0^1 |x(lambda(s)) − y(s)| ds`, exact for piecewise-linear integrands.
pub fn l1_distance_composed(x: &CadlagPath, lambda: &TimeChange, y: &CadlagPath) -> f64 {
    let c = Composed::new(x, lambda);
    let mut pts = c.breakpoints();
    pts.extend(y.breakpoints());
    sort_dedup(&mut pts);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // right value at a, left limit at b: the difference is linear on (a, b)
        let da = c.value(a) - y.value_at(a);
        let db = c.value_left(b) - y.value_left(b);
        total += abs_linear_integral(da, db, b - a);
    }
    total
}

/// Integral of `|l(s)|` over an interval of length `h` where `l` is linear from `a` to `b`.
fn abs_linear_integral(a: f64, b: f64, h: f64) -> f64 {
    if a * b >= 0.0 {
        0.5 * h * (a.abs() + b.abs())
    } else {
        0.5 * h * (a * a + b * b) / (a.abs() + b.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_leaves_path_unchanged() {
        let x = CadlagPath::step_from_jumps(&[(0.5, 1.0)]).unwrap();
        assert_eq!(compose_time_change(&x, &TimeChange::identity()), x);
    }

    #[test]
    fn relocates_jump_through_knot() {
        let x = CadlagPath::step_from_jumps(&[(0.5, 1.0)]).unwrap();
        let lambda = TimeChange::new(&[(0.6, 0.5)]).unwrap();
        assert!((lambda.displacement() - 0.1).abs() < 1e-15);
        let moved = compose_time_change(&x, &lambda);
        let expected = CadlagPath::step_from_jumps(&[(0.6, 1.0)]).unwrap();
        assert_eq!(moved.jumps().len(), 1);
        assert!((moved.jumps()[0].time - 0.6).abs() < 1e-15);
        assert!(sup_distance_composed(&x, &lambda, &expected) < 1e-15);
    }

    #[test]
    fn inverse_round_trips() {
        let lambda = TimeChange::new(&[(0.2, 0.3), (0.7, 0.65)]).unwrap();
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            assert!((lambda.inverse(lambda.apply(s)) - s).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_monotone_knots() {
        assert!(TimeChange::new(&[(0.5, 0.5), (0.4, 0.6)]).is_err());
        assert!(TimeChange::new(&[(0.5, 1.0)]).is_err());
    }

    #[test]
    fn l1_of_shifted_indicator() {
        let x = CadlagPath::step_from_jumps(&[(0.5, 2.0)]).unwrap();
        let lambda = TimeChange::new(&[(0.6, 0.5)]).unwrap();
        // x∘λ jumps at 0.6; differs from x by 2 on [0.5, 0.6)
        assert!((l1_distance_composed(&x, &lambda, &x) - 0.2).abs() < 1e-12);
    }
}
