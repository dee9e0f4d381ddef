//! Conserved means, regime conditions and the closed-form constant equilibrium.
//!
//! With unit diffusion and no-flux walls the combinations `u1 + u2`,
//! `Σ v`, `v1 + v2 − u1` and `v3 + v4 − u2` each obey a pure heat equation,
//! so their spatial means `(M0, N0, W1, W2)` are fixed by the initial data.
//! At a constant equilibrium each `min` picks one argument; the four branch
//! patterns give four linear systems `Q_i w = 0` whose solutions, under the
//! linear constraints fixed by the conserved means, have closed forms.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Component, Grid1D, Params, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedQuantities {
    pub m0: f64,
    pub n0: f64,
    pub w1: f64,
    pub w2: f64,
}

impl ConservedQuantities {
    /// Conserved means of a spatially constant state `w`.
    pub fn of_constant(w: [f64; 6]) -> Self {
        let [u1, u2, v1, v2, v3, v4] = w;
        ConservedQuantities {
            m0: u1 + u2,
            n0: v1 + v2 + v3 + v4,
            w1: v1 + v2 - u1,
            w2: v3 + v4 - u2,
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        ConservedQuantities {
            m0: lambda * self.m0,
            n0: lambda * self.n0,
            w1: lambda * self.w1,
            w2: lambda * self.w2,
        }
    }

    fn scale(&self) -> f64 {
        [self.m0, self.n0, self.w1, self.w2]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Midpoint-rule means of the four conserved combinations.
pub fn compute_conserved(state: &State, grid: &Grid1D) -> ConservedQuantities {
    let m: [f64; 6] = Component::ALL.map(|c| grid.mean(state.field(c).values()));
    ConservedQuantities::of_constant(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegimeTag {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 4] = [RegimeTag::Q1, RegimeTag::Q2, RegimeTag::Q3, RegimeTag::Q4];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Regime selected by the branch pattern of a point: `Q1` is
    /// `u1 < v1, u2 < v4`; `Q4` is `u1 ≥ v1, u2 ≥ v4`.
    pub fn from_pattern(w: &[f64; 6]) -> Self {
        match (w[0] < w[2], w[1] < w[5]) {
            (true, true) => RegimeTag::Q1,
            (true, false) => RegimeTag::Q2,
            (false, true) => RegimeTag::Q3,
            (false, false) => RegimeTag::Q4,
        }
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.index() + 1)
    }
}

/// One regime condition `lhs < rhs` and its complement `lhs ≥ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub lhs: f64,
    pub rhs: f64,
}

impl Condition {
    /// Relative width of the band around `lhs = rhs` treated as a tie.
    pub const TIE_TOL: f64 = 1e-12;

    pub fn holds(&self) -> bool {
        self.lhs < self.rhs
    }

    pub fn complement_holds(&self) -> bool {
        self.lhs >= self.rhs
    }

    pub fn near_boundary(&self) -> bool {
        (self.lhs - self.rhs).abs() <= Self::TIE_TOL * self.lhs.abs().max(self.rhs.abs())
    }

    /// Truth values this condition can take under either tie resolution.
    fn possible(&self, value: bool) -> bool {
        self.holds() == value || self.near_boundary()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub params: Params,
    pub conserved: ConservedQuantities,
    /// `I1..I4` in order.
    pub conditions: [Condition; 4],
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl ConditionReport {
    pub fn condition(&self, i: usize) -> &Condition {
        &self.conditions[i - 1]
    }

    /// Whether the defining condition pair of `tag` holds as printed.
    pub fn pair_holds(&self, tag: RegimeTag) -> bool {
        self.pair_matches(tag, |c, v| c.holds() == v)
    }

    fn pair_possible(&self, tag: RegimeTag) -> bool {
        self.pair_matches(tag, |c, v| c.possible(v))
    }

    fn pair_matches(&self, tag: RegimeTag, test: impl Fn(&Condition, bool) -> bool) -> bool {
        let [i1, i2, i3, i4] = &self.conditions;
        match tag {
            RegimeTag::Q1 => test(i1, true) && test(i2, true),
            RegimeTag::Q2 => test(i3, true) && test(i2, false),
            RegimeTag::Q3 => test(i4, true) && test(i1, false),
            RegimeTag::Q4 => test(i3, false) && test(i4, false),
        }
    }
}

pub fn d_constants(p: &Params) -> (f64, f64, f64) {
    let Params {
        a1,
        a2,
        c1,
        c2,
        c3,
        c4,
    } = *p;
    let d1 = a1 * c2 * (a2 + c4) + a2 * c3 * (a1 + c1) + c2 * c3 * (a1 + a2);
    let d2 = a1 * (a2 + c3 + c4) + a2 * c3;
    let d3 = a2 * (a1 + c1 + c2) + a1 * c2;
    (d1, d2, d3)
}

pub fn condition_values(params: &Params, cq: &ConservedQuantities) -> ConditionReport {
    let Params {
        a1,
        a2,
        c1,
        c2,
        c3,
        c4,
    } = *params;
    let ConservedQuantities { m0, n0, w1, w2 } = *cq;
    let (d1, d2, d3) = d_constants(params);
    let conditions = [
        Condition {
            lhs: a2 * (a1 + c1) * m0,
            rhs: c2 * (a1 + a2) * w1,
        },
        Condition {
            lhs: a1 * (a2 + c4) * m0,
            rhs: c3 * (a1 + a2) * w2,
        },
        Condition {
            lhs: a2 * c3 * (a1 + c1) * n0,
            rhs: d1 * w1,
        },
        Condition {
            lhs: a1 * c2 * (a2 + c4) * n0,
            rhs: d1 * w2,
        },
    ];
    ConditionReport {
        params: *params,
        conserved: *cq,
        conditions,
        d1,
        d2,
        d3,
    }
}

/// Picks the regime whose condition pair holds.
///
/// Inputs within [`Condition::TIE_TOL`] of a condition boundary admit every
/// regime reachable under either resolution of the tie; those are tried in
/// order `Q1..Q4` and the first whose closed form is self-consistent wins.
pub fn classify_regime(report: &ConditionReport) -> Result<RegimeTag> {
    let candidates: Vec<RegimeTag> = RegimeTag::ALL
        .into_iter()
        .filter(|t| report.pair_possible(*t))
        .collect();
    match candidates.as_slice() {
        [] => Err(Error::NoRegime),
        [only] => Ok(*only),
        many => {
            let mut first_err = None;
            for &tag in many {
                match equilibrium_for_regime(tag, &report.params, &report.conserved) {
                    Ok(point) => {
                        let tol = RESIDUAL_TOL * report.conserved.scale().max(1.0);
                        if residual_norm(&point.w, &report.params, &report.conserved) <= tol {
                            return Ok(tag);
                        }
                    }
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            Err(first_err.unwrap_or(Error::NoRegime))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    /// `(u1*, u2*, v1*, v2*, v3*, v4*)`.
    pub w: [f64; 6],
    pub regime: RegimeTag,
}

impl EquilibriumPoint {
    pub fn get(&self, c: Component) -> f64 {
        self.w[c.index()]
    }
}

/// Relative tolerance for indicator and sign checks on closed-form points.
pub const INDICATOR_TOL: f64 = 1e-10;

/// Relative residual accepted when resolving boundary ties.
const RESIDUAL_TOL: f64 = 1e-10;

fn closed_form(tag: RegimeTag, p: &Params, cq: &ConservedQuantities) -> [f64; 6] {
    let Params {
        a1,
        a2,
        c1,
        c2,
        c3,
        c4,
    } = *p;
    let ConservedQuantities { m0, n0, w1, w2 } = *cq;
    let (d1, d2, d3) = d_constants(p);
    match tag {
        RegimeTag::Q1 => {
            let s = a1 + a2;
            [
                m0 * a2 / s,
                m0 * a1 / s,
                (a2 * (c2 - a1) * m0 + c2 * s * w1) / (s * (c1 + c2)),
                (a2 * (a1 + c1) * m0 + c1 * s * w1) / (s * (c1 + c2)),
                (a2 * (a1 - c4) * m0 + c4 * s * (n0 - w1)) / (s * (c3 + c4)),
                (-a2 * (a1 + c3) * m0 + c3 * s * (n0 - w1)) / (s * (c3 + c4)),
            ]
        }
        RegimeTag::Q2 => {
            let g = a2 * c3 / d2;
            let x = m0 + w2;
            [
                g * x,
                (1.0 - g) * m0 - g * w2,
                c2 / (c1 + c2) * n0
                    - (a1 * c2 * (a2 + c3 + c4) + a1 * a2 * c3) / (d2 * (c1 + c2)) * x,
                c1 / (c1 + c2) * n0
                    - (a1 * c1 * (a2 + c3 + c4) - a1 * a2 * c3) / (d2 * (c1 + c2)) * x,
                a1 * (a2 + c4) / d2 * x,
                a1 * c3 / d2 * x,
            ]
        }
        RegimeTag::Q3 => {
            let h = a1 * c2 / d3;
            let y = m0 + w1;
            [
                (1.0 - h) * m0 - h * w1,
                h * y,
                a2 * c2 / d3 * y,
                a2 * (a1 + c1) / d3 * y,
                c4 / (c3 + c4) * n0
                    - (a2 * c4 * (a1 + c1 + c2) - a1 * a2 * c2) / (d3 * (c3 + c4)) * y,
                c3 / (c3 + c4) * n0
                    - (a2 * c3 * (a1 + c1 + c2) + a1 * a2 * c2) / (d3 * (c3 + c4)) * y,
            ]
        }
        RegimeTag::Q4 => {
            let k = a2 * c3 * (a1 + c1 + c2) / d1;
            [
                k * n0 - w1,
                m0 + w1 - k * n0,
                a2 * c2 * c3 / d1 * n0,
                a2 * c3 * (a1 + c1) / d1 * n0,
                a1 * c2 * (a2 + c4) / d1 * n0,
                a1 * c2 * c3 / d1 * n0,
            ]
        }
    }
}

/// Evaluates the closed-form equilibrium of `tag` and checks that it lies in
/// that regime (boundary equalities allowed within [`INDICATOR_TOL`]).
pub fn equilibrium_for_regime(
    tag: RegimeTag,
    params: &Params,
    cq: &ConservedQuantities,
) -> Result<EquilibriumPoint> {
    let w = closed_form(tag, params, cq);
    let tol = INDICATOR_TOL * cq.scale().max(f64::MIN_POSITIVE);
    let [u1, u2, v1, _, _, v4] = w;
    let (first_below, second_below) = match tag {
        RegimeTag::Q1 => (true, true),
        RegimeTag::Q2 => (true, false),
        RegimeTag::Q3 => (false, true),
        RegimeTag::Q4 => (false, false),
    };
    let check = |below: bool, u: f64, v: f64, names: &str| -> Result<()> {
        let ok = if below { u <= v + tol } else { u >= v - tol };
        if ok {
            Ok(())
        } else {
            Err(Error::IndicatorViolation {
                regime: tag.to_string(),
                detail: format!(
                    "expected {names} {} but got {u} vs {v}",
                    if below { "<" } else { ">=" }
                ),
            })
        }
    };
    check(first_below, u1, v1, "u1, v1")?;
    check(second_below, u2, v4, "u2, v4")?;
    if let Some(c) = Component::ALL.into_iter().find(|c| w[c.index()] < -tol) {
        return Err(Error::NegativeComponent {
            regime: tag.to_string(),
            component: c,
            value: w[c.index()],
        });
    }
    Ok(EquilibriumPoint { w, regime: tag })
}

/// 6×6 matrix of the linear system governing one branch pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeMatrix(pub [[f64; 6]; 6]);

impl RegimeMatrix {
    pub fn apply(&self, w: &[f64; 6]) -> [f64; 6] {
        self.0
            .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        self.0.iter().map(|row| row[j]).sum()
    }
}

pub fn build_q(tag: RegimeTag, p: &Params) -> RegimeMatrix {
    let Params {
        a1,
        a2,
        c1,
        c2,
        c3,
        c4,
    } = *p;
    let z = 0.0;
    RegimeMatrix(match tag {
        RegimeTag::Q1 => [
            [-a1, a2, z, z, z, z],
            [a1, -a2, z, z, z, z],
            [-a1, z, -c1, c2, z, z],
            [z, a2, c1, -c2, z, z],
            [a1, z, z, z, -c3, c4],
            [z, -a2, z, z, c3, -c4],
        ],
        RegimeTag::Q2 => [
            [-a1, z, z, z, z, a2],
            [a1, z, z, z, z, -a2],
            [-a1, z, -c1, c2, z, z],
            [z, z, c1, -c2, z, a2],
            [a1, z, z, z, -c3, c4],
            [z, z, z, z, c3, -(c4 + a2)],
        ],
        RegimeTag::Q3 => [
            [z, a2, -a1, z, z, z],
            [z, -a2, a1, z, z, z],
            [z, z, -a1 - c1, c2, z, z],
            [z, a2, c1, -c2, z, z],
            [z, z, a1, z, -c3, c4],
            [z, -a2, z, z, c3, -c4],
        ],
        RegimeTag::Q4 => [
            [z, z, -a1, z, z, a2],
            [z, z, a1, z, z, -a2],
            [z, z, -a1 - c1, c2, z, z],
            [z, z, c1, -c2, z, a2],
            [z, z, a1, z, -c3, c4],
            [z, z, z, z, c3, -a2 - c4],
        ],
    })
}

/// Max-norm of the ten equilibrium residuals: the branch-selected `Q w`
/// (six entries) and the four conserved-mean constraints.
pub fn residual_norm(point: &[f64; 6], params: &Params, cq: &ConservedQuantities) -> f64 {
    let q = build_q(RegimeTag::from_pattern(point), params);
    let reaction = q.apply(point);
    let have = ConservedQuantities::of_constant(*point);
    let constraints = [
        have.m0 - cq.m0,
        have.n0 - cq.n0,
        have.w1 - cq.w1,
        have.w2 - cq.w2,
    ];
    reaction
        .iter()
        .chain(constraints.iter())
        .fold(0.0_f64, |m, r| m.max(r.abs()))
}

/// Conditions, regime and closed-form point in one call.
pub fn solve_equilibrium(params: &Params, cq: &ConservedQuantities) -> Result<EquilibriumPoint> {
    let report = condition_values(params, cq);
    let tag = classify_regime(&report)?;
    equilibrium_for_regime(tag, params, cq)
}
