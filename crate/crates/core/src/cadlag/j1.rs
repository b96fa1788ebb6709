//! Skorokhod J1 distance.
//!
//! `d(x, y) = inf over time changes λ of max(‖λ − e‖, ‖x∘λ − y‖)`. For two step paths the
//! infimum is a finite combinatorial problem over monotone jump matchings and is solved exactly.
//! Otherwise the result is a certified bracket: the upper end is attained by an explicit
//! piecewise-linear λ, the lower end comes from necessary conditions any λ must satisfy.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

use super::path::{sort_dedup, CadlagPath};
use super::time_change::{sup_distance_composed, TimeChange};

/// Certified enclosure of a J1 distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct J1Bracket {
    pub lower: f64,
    pub upper: f64,
    /// `upper - lower <= tol` was reached.
    pub converged: bool,
    /// The value was computed exactly (both inputs were step paths).
    pub exact: bool,
}

impl J1Bracket {
    fn exact(v: f64) -> Self {
        Self { lower: v, upper: v, converged: true, exact: true }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.lower - slack && v <= self.upper + slack
    }
}

/// Uniform distance `sup_t |x(t) − y(t)|`, exact on the merged breakpoints.
pub fn uniform_distance(x: &CadlagPath, y: &CadlagPath) -> f64 {
    sup_distance_composed(x, &TimeChange::identity(), y)
}

/// Objective `max(‖λ − e‖, ‖x∘λ − y‖)` for a given time change.
pub fn j1_objective(x: &CadlagPath, lambda: &TimeChange, y: &CadlagPath) -> f64 {
    lambda.displacement().max(sup_distance_composed(x, lambda, y))
}

/// J1 distance bracket.
pub fn j1_distance(x: &CadlagPath, y: &CadlagPath, tol: f64) -> Result<J1Bracket> {
    if !(tol > 0.0) {
        return domain(format!("tolerance {tol} must be positive"));
    }
    if x.is_step() && y.is_step() {
        return Ok(J1Bracket::exact(step_j1_exact(x, y)));
    }
    let (upper, _) = best_time_change(x, y);
    let lower = lower_bound(x, y, upper, tol).min(upper);
    Ok(J1Bracket { lower, upper, converged: upper - lower <= tol, exact: false })
}

/// Exact J1 distance between two step paths (continuous parts identically zero).
///
/// The answer is one of finitely many candidate radii (level differences and jump-time
/// differences); a binary search over them drives the matching feasibility check.
pub fn step_j1_exact(x: &CadlagPath, y: &CadlagPath) -> f64 {
    let xl = x.step_levels();
    let yl = y.step_levels();
    let xs: Vec<f64> = x.jumps().iter().map(|j| j.time).collect();
    let ys: Vec<f64> = y.jumps().iter().map(|j| j.time).collect();

    let mut cands = vec![0.0];
    for a in &xl {
        for b in &yl {
            cands.push((a - b).abs());
        }
    }
    for s in &xs {
        for t in &ys {
            cands.push((s - t).abs());
        }
    }
    sort_dedup(&mut cands);

    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    if matching_feasible(&xl, &xs, &yl, &ys, cands[lo]) {
        return cands[lo];
    }
    debug_assert!(matching_feasible(&xl, &xs, &yl, &ys, cands[hi]));
    // invariant: cands[lo] infeasible, cands[hi] feasible
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if matching_feasible(&xl, &xs, &yl, &ys, cands[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    cands[hi]
}

/// Is there a monotone relocation of the jumps of `x`, each moved by at most `r`, such that the
/// relocated step path stays within `r` of `y`?
///
/// The search walks the lattice of states `(a, b)` = (jumps of x done, jumps of y done),
/// allowing an x-jump, a y-jump, or both at once. For each state it keeps the earliest time at
/// which it can be entered; earlier is never worse since all remaining constraints are upper
/// bounds on placement times.
fn matching_feasible(xl: &[f64], xs: &[f64], yl: &[f64], ys: &[f64], r: f64) -> bool {
    let n = xs.len();
    let m = ys.len();
    let ok = |a: usize, b: usize| (xl[a] - yl[b]).abs() <= r;
    if !ok(0, 0) {
        return false;
    }
    let w = m + 1;
    let mut best = vec![f64::INFINITY; (n + 1) * w];
    best[0] = 0.0;
    for a in 0..=n {
        for b in 0..=m {
            let now = best[a * w + b];
            if now.is_infinite() {
                continue;
            }
            let next_y = if b < m { ys[b] } else { 1.0 };
            if a < n && ok(a + 1, b) {
                let s = xs[a];
                let lo = if s >= 1.0 { 1.0 } else { now.max(s - r).max(0.0) };
                let hi = (s + r).min(1.0).min(next_y);
                if lo <= hi {
                    let cell = &mut best[(a + 1) * w + b];
                    *cell = cell.min(lo);
                }
            }
            if b < m && now <= ys[b] && ok(a, b + 1) {
                let cell = &mut best[a * w + b + 1];
                *cell = cell.min(ys[b]);
            }
            if a < n && b < m && ok(a + 1, b + 1) {
                let (s, t) = (xs[a], ys[b]);
                let pinned = s < 1.0 || t >= 1.0;
                if now <= t && (s - t).abs() <= r && pinned {
                    let cell = &mut best[(a + 1) * w + b + 1];
                    *cell = cell.min(t);
                }
            }
        }
    }
    best[n * w + m].is_finite()
}

/// Greedy monotone matching of the jumps of `x` to jumps of `y` of the same sign within
/// `radius`. Returns knots `(t_y, s_x)` of a time change with `λ(t_y) = s_x`.
fn greedy_matching(x: &CadlagPath, y: &CadlagPath, radius: f64) -> Vec<(f64, f64)> {
    let mut knots = Vec::new();
    let mut next_y = 0usize;
    let yj = y.jumps();
    for xj in x.jumps() {
        if xj.time >= 1.0 {
            continue;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for (idx, c) in yj.iter().enumerate().skip(next_y) {
            if c.time >= 1.0 || c.size.signum() != xj.size.signum() {
                continue;
            }
            let dt = (c.time - xj.time).abs();
            if dt > radius {
                if c.time > xj.time {
                    break;
                }
                continue;
            }
            let dsize = (c.size - xj.size).abs();
            let better = match best {
                None => true,
                Some((_, bdt, bds)) => dt < bdt || (dt == bdt && dsize < bds),
            };
            if better {
                best = Some((idx, dt, dsize));
            }
        }
        if let Some((idx, _, _)) = best {
            knots.push((yj[idx].time, xj.time));
            next_y = idx + 1;
        }
    }
    knots
}

/// Best explicit time change found by greedy matching over several radii followed by
/// coordinate descent on the knot positions. Returns the attained objective and the time change.
pub fn best_time_change(x: &CadlagPath, y: &CadlagPath) -> (f64, TimeChange) {
    let identity = TimeChange::identity();
    let mut best_val = j1_objective(x, &identity, y);
    let mut best_lambda = identity;
    if x.jumps().is_empty() || y.jumps().is_empty() {
        return (best_val, best_lambda);
    }

    let mut radii: Vec<f64> = Vec::new();
    for a in x.jumps() {
        for b in y.jumps() {
            let d = (a.time - b.time).abs();
            if d < best_val {
                radii.push(d);
            }
        }
    }
    sort_dedup(&mut radii);
    // Keep the search bounded on paths with many jumps.
    if radii.len() > 24 {
        let stride = radii.len() as f64 / 24.0;
        radii = (0..24).map(|i| radii[(i as f64 * stride) as usize]).collect();
    }
    radii.push(best_val);

    let mut seen: Vec<Vec<(f64, f64)>> = Vec::new();
    for r in radii {
        let knots = greedy_matching(x, y, r);
        if knots.is_empty() || seen.contains(&knots) {
            continue;
        }
        seen.push(knots.clone());
        let (val, lambda) = refine_knots(x, y, knots, best_val);
        if val < best_val {
            best_val = val;
            best_lambda = lambda;
        }
    }
    (best_val, best_lambda)
}

fn refine_knots(
    x: &CadlagPath,
    y: &CadlagPath,
    mut knots: Vec<(f64, f64)>,
    _incumbent: f64,
) -> (f64, TimeChange) {
    let eval = |k: &[(f64, f64)]| -> Option<(f64, TimeChange)> {
        let lambda = TimeChange::new(k).ok()?;
        Some((j1_objective(x, &lambda, y), lambda))
    };
    let Some((mut val, mut lambda)) = eval(&knots) else {
        return (f64::INFINITY, TimeChange::identity());
    };
    let mut budget = 400usize;
    let mut step = knots
        .iter()
        .fold(0.0_f64, |m, (u, s)| m.max((u - s).abs()))
        .max(1e-3)
        * 0.5;
    while step > 1e-6 && budget > 0 {
        let mut improved = false;
        for k in 0..knots.len() {
            for dir in [-1.0, 1.0] {
                if budget == 0 {
                    break;
                }
                let mut trial = knots.clone();
                trial[k].0 += dir * step;
                if trial[k].0 <= 0.0 || trial[k].0 >= 1.0 {
                    continue;
                }
                budget -= 1;
                if let Some((v, l)) = eval(&trial) {
                    if v < val {
                        val = v;
                        lambda = l;
                        knots = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (val, lambda)
}

/// Largest upward and downward jump sizes.
pub(crate) fn largest_jumps(p: &CadlagPath) -> (f64, f64) {
    p.jumps().iter().fold((0.0_f64, 0.0_f64), |(u, d), j| {
        if j.size > 0.0 {
            (u.max(j.size), d)
        } else {
            (u, d.max(-j.size))
        }
    })
}

/// Necessary-condition lower bound on `d(x, y)`, refined by bisection up to `hi`.
fn lower_bound(x: &CadlagPath, y: &CadlagPath, hi: f64, tol: f64) -> f64 {
    let (sx, ix) = x.sup_inf();
    let (sy, iy) = y.sup_inf();
    let (px, qx) = largest_jumps(x);
    let (py, qy) = largest_jumps(y);
    let simple = [
        (x.value_at(0.0) - y.value_at(0.0)).abs(),
        (x.value_at(1.0) - y.value_at(1.0)).abs(),
        (sx - sy).abs(),
        (ix - iy).abs(),
        0.5 * (px - py).abs(),
        0.5 * (qx - qy).abs(),
    ];
    let mut lo = simple.iter().cloned().fold(0.0, f64::max);
    if lo >= hi {
        return lo;
    }
    let rx = RangeIndex::new(x);
    let ry = RangeIndex::new(y);
    let ptsx = x.breakpoints();
    let ptsy = y.breakpoints();
    let feasible = |r: f64| local_range_ok(&rx, y, &ptsy, r) && local_range_ok(&ry, x, &ptsx, r);
    if feasible(lo) {
        return lo;
    }
    let mut up = hi;
    for _ in 0..60 {
        if up - lo <= 0.25 * tol {
            break;
        }
        let mid = 0.5 * (lo + up);
        if feasible(mid) {
            up = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Every value of `y` must lie within `r` of the values `x` takes in the time window
/// `[t − r, t + r]`, because `x∘λ(t)` is such a value whenever `‖λ − e‖ <= r`.
fn local_range_ok(rx: &RangeIndex<'_>, y: &CadlagPath, pts: &[f64], r: f64) -> bool {
    for &t in pts {
        let a = (t - r).max(0.0);
        let b = (t + r).min(1.0);
        for v in [y.value_at(t), y.value_left(t)] {
            if rx.distance_to_range(a, b, v) > r {
                return false;
            }
        }
    }
    true
}

/// Sparse tables for range min/max of the continuous part, split at jump times.
struct RangeIndex<'a> {
    p: &'a CadlagPath,
    mins: Vec<Vec<f64>>,
    maxs: Vec<Vec<f64>>,
}

impl<'a> RangeIndex<'a> {
    fn new(p: &'a CadlagPath) -> Self {
        let base = p.grid_values().to_vec();
        let mut mins = vec![base.clone()];
        let mut maxs = vec![base];
        let n = p.grid_values().len();
        let mut width = 1;
        while 2 * width <= n {
            let (pm, px) = (mins.last().unwrap(), maxs.last().unwrap());
            let len = n - 2 * width + 1;
            let nm: Vec<f64> = (0..len).map(|i| pm[i].min(pm[i + width])).collect();
            let nx: Vec<f64> = (0..len).map(|i| px[i].max(px[i + width])).collect();
            mins.push(nm);
            maxs.push(nx);
            width *= 2;
        }
        Self { p, mins, maxs }
    }

    fn node_range(&self, i: usize, j: usize) -> (f64, f64) {
        let len = j - i + 1;
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let w = 1 << k;
        (
            self.mins[k][i].min(self.mins[k][j + 1 - w]),
            self.maxs[k][i].max(self.maxs[k][j + 1 - w]),
        )
    }

    /// Range of the continuous part on the closed interval `[a, b]`.
    fn cont_range(&self, a: f64, b: f64) -> (f64, f64) {
        let (ca, cb) = (self.p.cont(a), self.p.cont(b));
        let mut lo = ca.min(cb);
        let mut hi = ca.max(cb);
        let d = self.p.delta();
        let i = (a / d).ceil() as usize;
        let j = ((b / d).floor() as usize).min(self.p.cells());
        if i <= j {
            let (m, x) = self.node_range(i, j);
            lo = lo.min(m);
            hi = hi.max(x);
        }
        (lo, hi)
    }

    fn distance_to_range(&self, a: f64, b: f64, v: f64) -> f64 {
        let jumps = self.p.jumps();
        let x0 = self.p.initial_value();
        // a jump exactly at `a` opens a degenerate segment holding the left limit
        let mut k = jumps.partition_point(|j| j.time < a);
        let mut offset: f64 = x0 + jumps[..k].iter().map(|j| j.size).sum::<f64>();
        let mut start = a;
        let mut best = f64::INFINITY;
        loop {
            let more = k < jumps.len() && jumps[k].time <= b;
            let end = if more { jumps[k].time } else { b };
            let (lo, hi) = self.cont_range(start, end);
            best = best.min((lo + offset - v).max(v - hi - offset).max(0.0));
            if !more || best == 0.0 {
                break;
            }
            offset += jumps[k].size;
            start = jumps[k].time;
            k += 1;
        }
        best
    }
}

/// Bracket on the J1 distance from `x` to the union of step classes `D_{l,m}` listed in `class`.
pub fn distance_to_step_class(
    x: &CadlagPath,
    class: &[(usize, usize)],
    tol: f64,
) -> Result<J1Bracket> {
    if class.is_empty() {
        return domain("empty step class");
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance {tol} must be positive"));
    }
    let mut ups: Vec<_> = x.jumps().iter().filter(|j| j.size > 0.0).copied().collect();
    let mut downs: Vec<_> = x.jumps().iter().filter(|j| j.size < 0.0).copied().collect();
    ups.sort_by(|a, b| b.size.total_cmp(&a.size));
    downs.sort_by(|a, b| a.size.total_cmp(&b.size));
    let (sup, inf) = x.sup_inf();
    let x0 = x.value_at(0.0);

    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut exact = true;
    for &(l, m) in class {
        // Elements of D_{l,m} vanish at 0, have at most l up and m down jumps, and take both
        // signs only if they have jumps of that sign.
        let jl = ups.get(l).map_or(0.0, |j| j.size);
        let jm = downs.get(m).map_or(0.0, |j| -j.size);
        let mut lb = x0.abs().max(0.5 * jl).max(0.5 * jm).max(inf).max(-sup);
        if l == 0 {
            lb = lb.max(sup);
        }
        if m == 0 {
            lb = lb.max(-inf);
        }
        lower = lower.min(lb);

        let mut proj: Vec<_> = ups.iter().take(l).chain(downs.iter().take(m)).copied().collect();
        proj.sort_by(|a, b| a.time.total_cmp(&b.time));
        let step = CadlagPath::step(0.0, proj, x.delta())?;
        let b = j1_distance(x, &step, tol)?;
        exact &= b.exact;
        upper = upper.min(b.upper);
    }
    let lower = lower.min(upper);
    Ok(J1Bracket { lower, upper, converged: upper - lower <= tol, exact: exact && lower == upper })
}
