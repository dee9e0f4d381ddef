//! Upper/lower bracket recursion on limit constants.
//!
//! Each step freezes the current lower and upper constants, solves the four
//! scalar `v` equations for their long-time limits and then recovers the `u`
//! components from the conserved combinations.

use crate::equilibrium::{ConservedQuantities, EquilibriumPoint};
use crate::error::{Error, Result};
use crate::model::{Params, State};

/// Coefficients of `z_t = Δz − a·min{z, b} − c·z + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarLimitInput {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ScalarLimitInput {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let ok = a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite();
        if !ok || a < 0.0 || b < 0.0 || d < 0.0 || c <= 0.0 {
            return Err(Error::InvalidScalarInput(format!(
                "need a, b, d >= 0 and c > 0, got a={a}, b={b}, c={c}, d={d}"
            )));
        }
        Ok(ScalarLimitInput { a, b, c, d })
    }
}

/// Long-time constant limit of the scalar equation described by `input`.
pub fn scalar_limit(input: &ScalarLimitInput) -> f64 {
    let ScalarLimitInput { a, b, c, d } = *input;
    let unsaturated = d / (a + c);
    if unsaturated <= b {
        unsaturated
    } else {
        (d - a * b) / c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketPair {
    pub lower: [f64; 6],
    pub upper: [f64; 6],
    /// 1 for the initial pair.
    pub iteration: usize,
}

impl BracketPair {
    pub fn gap(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_ordered(&self, tol: f64) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .all(|(l, u)| *l <= u + tol)
    }

    /// Largest distance of either bound from `w`.
    pub fn distance_to(&self, w: &[f64; 6]) -> f64 {
        let dist = |v: &[f64; 6]| {
            v.iter()
                .zip(w)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        dist(&self.lower).max(dist(&self.upper))
    }

    fn scale(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(1.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Margin factors applied to the extreme node ratios.
pub const LOWER_MARGIN: f64 = 0.5;
pub const UPPER_MARGIN: f64 = 2.0;

/// Components of `w*` at or below this value are treated as zero.
pub const ZERO_COMPONENT_TOL: f64 = 1e-12;

/// Initial pair `(K1 w*, K2 w*)` that sandwiches `state0` at every node.
pub fn init_bracket(w_star: &EquilibriumPoint, state0: &State) -> Result<BracketPair> {
    for (component, &value) in crate::model::Component::ALL.iter().zip(&w_star.w) {
        if !(value > ZERO_COMPONENT_TOL) {
            return Err(Error::ZeroEquilibriumComponent {
                component: *component,
                value,
            });
        }
    }
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0_f64;
    for (field, w) in state0.fields().iter().zip(&w_star.w) {
        min_ratio = min_ratio.min(field.min() / w);
        max_ratio = max_ratio.max(field.max() / w);
    }
    let k1 = LOWER_MARGIN * min_ratio;
    let k2 = UPPER_MARGIN * max_ratio;
    Ok(BracketPair {
        lower: w_star.w.map(|v| k1 * v),
        upper: w_star.w.map(|v| k2 * v),
        iteration: 1,
    })
}

fn limit(a: f64, b: f64, c: f64, d: f64) -> f64 {
    scalar_limit(&ScalarLimitInput {
        a,
        b: b.max(0.0),
        c,
        d: d.max(0.0),
    })
}

/// One application of the recursion without any order checks.
pub fn bracket_map(pair: &BracketPair, p: &Params, cq: &ConservedQuantities) -> BracketPair {
    let [lu1, lu2, lv1, lv2, lv3, lv4] = pair.lower;
    let [uu1, uu2, uv1, uv2, uv3, uv4] = pair.upper;

    let lower_v = [
        limit(p.a1, uu1, p.c1, p.c2 * lv2),
        (p.c1 * lv1 + p.a2 * lu2.min(lv4)) / p.c2,
        (p.c4 * lv4 + p.a1 * lu1.min(lv1)) / p.c3,
        limit(p.a2, uu2, p.c4, p.c3 * lv3),
    ];
    let upper_v = [
        limit(p.a1, lu1, p.c1, p.c2 * uv2),
        (p.c1 * uv1 + p.a2 * uu2.min(uv4)) / p.c2,
        (p.c4 * uv4 + p.a1 * uu1.min(uv1)) / p.c3,
        limit(p.a2, lu2, p.c4, p.c3 * uv3),
    ];
    let with_u = |v: [f64; 4]| {
        [
            (v[0] + v[1] - cq.w1).max(0.0),
            (v[2] + v[3] - cq.w2).max(0.0),
            v[0],
            v[1],
            v[2],
            v[3],
        ]
    };
    BracketPair {
        lower: with_u(lower_v),
        upper: with_u(upper_v),
        iteration: pair.iteration + 1,
    }
}

/// Relative slack allowed in the order and monotonicity checks.
pub const ORDER_TOL: f64 = 1e-12;

/// One checked step of the recursion.
///
/// Fails with `OrderViolation` when the new pair is not ordered or when
/// either bound moved the wrong way relative to `pair`.
pub fn bracket_update(
    pair: &BracketPair,
    params: &Params,
    cq: &ConservedQuantities,
) -> Result<BracketPair> {
    let next = bracket_map(pair, params, cq);
    let tol = ORDER_TOL * pair.scale().max(next.scale());
    let names = ["u1", "u2", "v1", "v2", "v3", "v4"];
    for (i, name) in names.iter().enumerate() {
        if next.lower[i] > next.upper[i] + tol {
            return Err(Error::OrderViolation {
                iteration: pair.iteration,
                detail: format!(
                    "lower {} = {} exceeds upper {}",
                    name, next.lower[i], next.upper[i]
                ),
            });
        }
        if next.lower[i] < pair.lower[i] - tol {
            return Err(Error::OrderViolation {
                iteration: pair.iteration,
                detail: format!(
                    "lower {} decreased from {} to {}",
                    name, pair.lower[i], next.lower[i]
                ),
            });
        }
        if next.upper[i] > pair.upper[i] + tol {
            return Err(Error::OrderViolation {
                iteration: pair.iteration,
                detail: format!(
                    "upper {} increased from {} to {}",
                    name, pair.upper[i], next.upper[i]
                ),
            });
        }
    }
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct FixedPointRun {
    pub final_pair: BracketPair,
    /// Number of updates applied.
    pub iterations: usize,
    /// Gap below `tol` and both bounds within `tol` of `w*`.
    pub converged: bool,
    /// Every pair visited, starting with the initial one.
    pub history: Vec<BracketPair>,
}

/// Repeats [`bracket_update`] from the initial pair until the gap drops
/// below `tol` or `max_iter` updates have been applied.
///
/// Running out of iterations is reported through `converged = false`;
/// order violations are returned as errors.
pub fn iterate_from(
    start: BracketPair,
    params: &Params,
    cq: &ConservedQuantities,
    w_star: &EquilibriumPoint,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointRun> {
    let mut pair = start;
    let mut history = vec![pair];
    let mut iterations = 0;
    while pair.gap() >= tol && iterations < max_iter {
        pair = bracket_update(&pair, params, cq)?;
        history.push(pair);
        iterations += 1;
    }
    Ok(FixedPointRun {
        final_pair: pair,
        iterations,
        converged: pair.gap() < tol && pair.distance_to(&w_star.w) < tol,
        history,
    })
}

pub fn iterate_to_fixed_point(
    params: &Params,
    cq: &ConservedQuantities,
    w_star: &EquilibriumPoint,
    state0: &State,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointRun> {
    let start = init_bracket(w_star, state0)?;
    iterate_from(start, params, cq, w_star, tol, max_iter)
}
