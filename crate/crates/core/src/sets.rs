//! Path sets `A` used by rate infima, cluster measures and probability estimates.
//!
//! Each set exposes an inner (open-type) and an outer (closed-type) membership test, plus a
//! graded violation used by witness searches: zero exactly when the inner test passes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cadlag::{j1_distance, largest_jumps, CadlagPath};
use crate::error::{Error, Result};

/// Margin by which witness searches overshoot strict inequalities.
const WITNESS_MARGIN: f64 = 1e-6;

/// Membership oracle for a path set.
pub trait SetOracle: Send + Sync {
    fn name(&self) -> String;

    /// Test for the interior `A°`.
    fn contains_inner(&self, p: &CadlagPath) -> bool;

    /// Test for the closure `Ā`.
    fn contains_outer(&self, p: &CadlagPath) -> bool;

    /// Non-negative score, zero iff `contains_inner`. Defaults to a 0/1 score.
    fn violation(&self, p: &CadlagPath) -> f64 {
        if self.contains_inner(p) {
            0.0
        } else {
            1.0
        }
    }

    /// Declared `sup_{x∈A} d(x, 0)`.
    fn declared_bound(&self) -> f64 {
        f64::INFINITY
    }

    /// Declared bounded-away distance from the lower-cost step classes.
    fn declared_margin(&self) -> f64 {
        0.0
    }

    /// True when `p` lies outside the declared ball `‖ξ‖ ≤ M`.
    fn outside_declared_ball(&self, p: &CadlagPath) -> bool {
        p.sup_norm() > self.declared_bound()
    }
}

/// Built-in set shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetShape {
    Whole,
    Empty,
    /// `sup ξ > c`.
    SupExceed { c: f64 },
    /// `inf ξ < −c`.
    InfBelow { c: f64 },
    /// `sup ξ > c` and `inf ξ < −c_down`.
    TwoSided { c: f64, c_down: f64 },
    /// `ξ(1) ∈ (a, b)`.
    Terminal { a: f64, b: f64 },
    /// Largest up jump `> a` and largest down jump `> b` (either may be 0 to disable).
    LargestJumps { a: f64, b: f64 },
    /// At least `count` upward jumps larger than `size`.
    UpJumpCount { count: usize, size: f64 },
    /// J1 tube `d(ξ, reference) < r`.
    Tube {
        #[serde(skip)]
        reference: Option<Arc<CadlagPath>>,
        r: f64,
        tol: f64,
    },
}

/// A built-in shape, optionally intersected with the ball `‖ξ‖ ≤ M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub shape: SetShape,
    pub ball_radius: Option<f64>,
    pub margin: f64,
}

impl PathSet {
    pub fn new(shape: SetShape) -> Self {
        Self { shape, ball_radius: None, margin: 0.0 }
    }

    pub fn within_ball(mut self, radius: f64) -> Self {
        self.ball_radius = Some(radius);
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn tube(reference: CadlagPath, r: f64, tol: f64) -> Self {
        Self::new(SetShape::Tube { reference: Some(Arc::new(reference)), r, tol })
    }

    /// Parses a registry name with its parameters (`c`, `c_down`, `a`, `b`, `count`, `size`).
    pub fn from_registry(name: &str, param: impl Fn(&str) -> Option<f64>) -> Result<Self> {
        let need = |k: &str| {
            param(k).ok_or_else(|| Error::MissingKey(format!("set.{k}")))
        };
        let shape = match name {
            "whole" => SetShape::Whole,
            "empty" => SetShape::Empty,
            "sup_exceed" => SetShape::SupExceed { c: need("c")? },
            "inf_below" => SetShape::InfBelow { c: need("c")? },
            "two_sided" => SetShape::TwoSided { c: need("c")?, c_down: param("c_down").unwrap_or(need("c")?) },
            "terminal" => SetShape::Terminal { a: need("a")?, b: need("b")? },
            "largest_jumps" => SetShape::LargestJumps { a: need("a")?, b: param("b").unwrap_or(0.0) },
            "up_jump_count" => {
                SetShape::UpJumpCount { count: need("count")? as usize, size: need("size")? }
            }
            other => return Err(Error::Config(format!("unknown set `{other}`"))),
        };
        Ok(Self::new(shape))
    }

    /// True when the path lies outside the declared ball.
    pub fn outside_ball(&self, p: &CadlagPath) -> bool {
        self.ball_radius.is_some_and(|m| p.sup_norm() > m)
    }

    fn ball_ok(&self, p: &CadlagPath) -> bool {
        !self.outside_ball(p)
    }
}

fn up_sizes_desc(p: &CadlagPath) -> Vec<f64> {
    let mut v: Vec<f64> = p.jumps().iter().filter(|j| j.size > 0.0).map(|j| j.size).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

impl SetOracle for PathSet {
    fn name(&self) -> String {
        match &self.shape {
            SetShape::Whole => "whole".into(),
            SetShape::Empty => "empty".into(),
            SetShape::SupExceed { c } => format!("sup_exceed(c={c})"),
            SetShape::InfBelow { c } => format!("inf_below(c={c})"),
            SetShape::TwoSided { c, c_down } => format!("two_sided(c={c},c_down={c_down})"),
            SetShape::Terminal { a, b } => format!("terminal(a={a},b={b})"),
            SetShape::LargestJumps { a, b } => format!("largest_jumps(a={a},b={b})"),
            SetShape::UpJumpCount { count, size } => format!("up_jump_count(count={count},size={size})"),
            SetShape::Tube { r, .. } => format!("tube(r={r})"),
        }
    }

    fn contains_inner(&self, p: &CadlagPath) -> bool {
        if !self.ball_ok(p) {
            return false;
        }
        match &self.shape {
            SetShape::Whole => true,
            SetShape::Empty => false,
            SetShape::SupExceed { c } => p.sup() > *c,
            SetShape::InfBelow { c } => p.inf() < -c,
            SetShape::TwoSided { c, c_down } => {
                let (s, i) = p.sup_inf();
                s > *c && i < -c_down
            }
            SetShape::Terminal { a, b } => {
                let v = p.terminal_value();
                v > *a && v < *b
            }
            SetShape::LargestJumps { a, b } => {
                let (u, d) = largest_jumps(p);
                (u > *a || *a == 0.0) && (d > *b || *b == 0.0)
            }
            SetShape::UpJumpCount { count, size } => {
                p.jumps().iter().filter(|j| j.size > *size).count() >= *count
            }
            SetShape::Tube { reference, r, tol } => match reference {
                Some(reference) => j1_distance(p, reference, *tol).is_ok_and(|b| b.upper < *r),
                None => false,
            },
        }
    }

    fn contains_outer(&self, p: &CadlagPath) -> bool {
        if !self.ball_ok(p) {
            return false;
        }
        match &self.shape {
            SetShape::Whole => true,
            SetShape::Empty => false,
            SetShape::SupExceed { c } => p.sup() >= *c,
            SetShape::InfBelow { c } => p.inf() <= -c,
            SetShape::TwoSided { c, c_down } => {
                let (s, i) = p.sup_inf();
                s >= *c && i <= -c_down
            }
            SetShape::Terminal { a, b } => {
                let v = p.terminal_value();
                v >= *a && v <= *b
            }
            SetShape::LargestJumps { a, b } => {
                let (u, d) = largest_jumps(p);
                u >= *a && d >= *b
            }
            SetShape::UpJumpCount { count, size } => {
                p.jumps().iter().filter(|j| j.size >= *size).count() >= *count
            }
            SetShape::Tube { reference, r, tol } => match reference {
                Some(reference) => j1_distance(p, reference, *tol).is_ok_and(|b| b.lower <= *r),
                None => false,
            },
        }
    }

    fn violation(&self, p: &CadlagPath) -> f64 {
        let m = WITNESS_MARGIN;
        let ball = self
            .ball_radius
            .map_or(0.0, |r| (p.sup_norm() - r + m).max(0.0));
        let core = match &self.shape {
            SetShape::Whole => 0.0,
            SetShape::Empty => 1.0,
            SetShape::SupExceed { c } => (c + m - p.sup()).max(0.0),
            SetShape::InfBelow { c } => (p.inf() + c + m).max(0.0),
            SetShape::TwoSided { c, c_down } => {
                let (s, i) = p.sup_inf();
                (c + m - s).max(0.0) + (i + c_down + m).max(0.0)
            }
            SetShape::Terminal { a, b } => {
                let v = p.terminal_value();
                (a + m - v).max(0.0) + (v - b + m).max(0.0)
            }
            SetShape::LargestJumps { a, b } => {
                let (u, d) = largest_jumps(p);
                let up = if *a > 0.0 { (a + m - u).max(0.0) } else { 0.0 };
                let down = if *b > 0.0 { (b + m - d).max(0.0) } else { 0.0 };
                up + down
            }
            SetShape::UpJumpCount { count, size } => {
                let ups = up_sizes_desc(p);
                (0..*count)
                    .map(|i| ups.get(i).map_or(size + m, |s| (size + m - s).max(0.0)))
                    .sum()
            }
            SetShape::Tube { reference, r, tol } => match reference {
                Some(reference) => j1_distance(p, reference, *tol)
                    .map_or(1.0, |b| (b.upper - r + m).max(0.0)),
                None => 1.0,
            },
        };
        let v = core + ball;
        if v == 0.0 && !self.contains_inner(p) {
            m
        } else {
            v
        }
    }

    fn declared_bound(&self) -> f64 {
        self.ball_radius.unwrap_or(f64::INFINITY)
    }

    fn declared_margin(&self) -> f64 {
        self.margin
    }
}

/// Set given by closures, for ad-hoc use in tests and the library API.
pub struct FnSet<I, O> {
    pub name: String,
    pub inner: I,
    pub outer: O,
}

impl<I, O> SetOracle for FnSet<I, O>
where
    I: Fn(&CadlagPath) -> bool + Send + Sync,
    O: Fn(&CadlagPath) -> bool + Send + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn contains_inner(&self, p: &CadlagPath) -> bool {
        (self.inner)(p)
    }

    fn contains_outer(&self, p: &CadlagPath) -> bool {
        (self.outer)(p)
    }
}

impl fmt::Display for PathSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        if let Some(m) = self.ball_radius {
            write!(f, " ∩ ball({m})")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(j: &[(f64, f64)]) -> CadlagPath {
        CadlagPath::step_from_jumps(j).unwrap()
    }

    #[test]
    fn inner_implies_outer_on_boundary_cases() {
        let sets = [
            PathSet::new(SetShape::SupExceed { c: 1.0 }),
            PathSet::new(SetShape::InfBelow { c: 1.0 }),
            PathSet::new(SetShape::TwoSided { c: 1.0, c_down: 1.0 }),
            PathSet::new(SetShape::Terminal { a: 0.5, b: 1.5 }),
            PathSet::new(SetShape::LargestJumps { a: 1.0, b: 1.0 }),
            PathSet::new(SetShape::UpJumpCount { count: 2, size: 1.0 }),
        ];
        let paths = [
            step(&[(0.5, 1.0)]),
            step(&[(0.5, 1.5)]),
            step(&[(0.2, 1.0), (0.6, -2.0)]),
            step(&[(0.2, 1.5), (0.4, 1.2), (0.6, -2.5)]),
            step(&[]),
        ];
        for s in &sets {
            for p in &paths {
                if s.contains_inner(p) {
                    assert!(s.contains_outer(p), "{} on {:?}", s.name(), p.jumps());
                    assert_eq!(s.violation(p), 0.0);
                } else {
                    assert!(s.violation(p) > 0.0);
                }
            }
        }
    }

    #[test]
    fn boundary_is_outer_only() {
        let s = PathSet::new(SetShape::SupExceed { c: 1.0 });
        let p = step(&[(0.5, 1.0)]);
        assert!(!s.contains_inner(&p));
        assert!(s.contains_outer(&p));
    }

    #[test]
    fn ball_excludes_large_paths() {
        let s = PathSet::new(SetShape::SupExceed { c: 1.0 }).within_ball(3.0);
        assert!(s.contains_inner(&step(&[(0.5, 2.0)])));
        assert!(!s.contains_inner(&step(&[(0.5, 4.0)])));
        assert!(s.outside_ball(&step(&[(0.5, 4.0)])));
        assert!(s.violation(&step(&[(0.5, 4.0)])) > 0.0);
    }

    #[test]
    fn tube_uses_conservative_bracket_ends() {
        let reference = step(&[(0.5, 1.0)]);
        let s = PathSet::tube(reference, 0.2, 1e-6);
        assert!(s.contains_inner(&step(&[(0.55, 1.05)])));
        assert!(!s.contains_outer(&step(&[(0.9, 1.0)])));
    }

    #[test]
    fn registry_parsing() {
        let params = |k: &str| match k {
            "c" => Some(1.0),
            "count" => Some(3.0),
            "size" => Some(0.5),
            _ => None,
        };
        assert_eq!(
            PathSet::from_registry("two_sided", params).unwrap().shape,
            SetShape::TwoSided { c: 1.0, c_down: 1.0 }
        );
        assert_eq!(
            PathSet::from_registry("up_jump_count", params).unwrap().shape,
            SetShape::UpJumpCount { count: 3, size: 0.5 }
        );
        assert!(matches!(PathSet::from_registry("terminal", params), Err(Error::MissingKey(k)) if k == "set.a"));
        assert!(PathSet::from_registry("donut", params).is_err());
    }
}
