//! Norms, conservation monitors, decay-rate fitting and branch-lock detection.

use std::fmt;
use std::fmt::Write as _;

use crate::equilibrium::ConservedQuantities;
use crate::error::{Error, Result};
use crate::model::{Component, Grid1D, State};

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest node-wise distance between `state` and the constant vector `w`.
pub fn sup_distance(state: &State, w: &[f64; 6]) -> f64 {
    state
        .fields()
        .iter()
        .zip(w)
        .flat_map(|(f, c)| f.values().iter().map(move |v| (v - c).abs()))
        .fold(0.0, f64::max)
}

/// How one `min{u, v}` pair resolves across the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `u < v` at every node.
    Below,
    /// `u ≥ v` at every node.
    AtOrAbove,
    Mixed,
}

impl Branch {
    pub fn of(u: &[f64], v: &[f64]) -> Branch {
        let below = u.iter().zip(v).filter(|(a, b)| a < b).count();
        if below == u.len() {
            Branch::Below
        } else if below == 0 {
            Branch::AtOrAbove
        } else {
            Branch::Mixed
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Branch::Below => 'L',
            Branch::AtOrAbove => 'G',
            Branch::Mixed => 'M',
        }
    }
}

/// Branch of `(u1, v1)` followed by branch of `(u2, v4)`; printed as e.g. `GG`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BranchPattern(pub [Branch; 2]);

impl BranchPattern {
    pub fn of(state: &State) -> Self {
        let f = |c: Component| state.field(c).values();
        BranchPattern([
            Branch::of(f(Component::U1), f(Component::V1)),
            Branch::of(f(Component::U2), f(Component::V4)),
        ])
    }

    pub fn is_uniform(&self) -> bool {
        !self.0.contains(&Branch::Mixed)
    }
}

impl fmt::Display for BranchPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0[0].symbol(), self.0[1].symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub sup_dist_to_eq: f64,
    /// Integrals of `u1 + u2` and of `Σ v`.
    pub mass_u: f64,
    pub mass_v: f64,
    /// Means of `v1 + v2 − u1` and `v3 + v4 − u2`.
    pub combo1: f64,
    pub combo2: f64,
    /// Sup-norm deviations of the two combinations from `W1`, `W2`.
    pub combo1_sup_dev: f64,
    pub combo2_sup_dev: f64,
    /// Mean of the sum of all six fields.
    pub total_mass: f64,
    pub min_field_value: f64,
    pub max_u: f64,
    pub max_v: f64,
    pub sup_norms: [f64; 6],
    pub branch_pattern: BranchPattern,
}

pub const TRACE_HEADER: &str =
    "t,sup_dist_to_equilibrium,mass_u,mass_v,combo1_drift,combo2_drift,min_field_value,branch_pattern";

impl TraceRow {
    /// One `trace.csv` line; the drift columns are `combo − W` for the
    /// conserved means `cq`.
    pub fn csv_line(&self, cq: &ConservedQuantities) -> String {
        format!(
            "{:.9e},{:.9e},{:.15e},{:.15e},{:.6e},{:.6e},{:.9e},{}",
            self.t,
            self.sup_dist_to_eq,
            self.mass_u,
            self.mass_v,
            self.combo1 - cq.w1,
            self.combo2 - cq.w2,
            self.min_field_value,
            self.branch_pattern
        )
    }
}

pub fn trace_row(
    state: &State,
    grid: &Grid1D,
    target: &[f64; 6],
    cq: &ConservedQuantities,
) -> TraceRow {
    let combo1 = state.combination([-1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    let combo2 = state.combination([0.0, -1.0, 0.0, 0.0, 1.0, 1.0]);
    let dev = |values: &[f64], w: f64| values.iter().fold(0.0_f64, |m, v| m.max((v - w).abs()));
    let field_max = |cs: &[Component]| {
        cs.iter()
            .map(|c| state.field(*c).max())
            .fold(f64::MIN, f64::max)
    };
    TraceRow {
        t: state.time,
        sup_dist_to_eq: sup_distance(state, target),
        mass_u: grid.integrate(&state.combination([1.0, 1.0, 0.0, 0.0, 0.0, 0.0])),
        mass_v: grid.integrate(&state.combination([0.0, 0.0, 1.0, 1.0, 1.0, 1.0])),
        combo1: grid.mean(&combo1),
        combo2: grid.mean(&combo2),
        combo1_sup_dev: dev(&combo1, cq.w1),
        combo2_sup_dev: dev(&combo2, cq.w2),
        total_mass: grid.mean(&state.combination([1.0; 6])),
        min_field_value: state.min_value(),
        max_u: field_max(&[Component::U1, Component::U2]),
        max_v: field_max(&[Component::V1, Component::V2, Component::V3, Component::V4]),
        sup_norms: Component::ALL.map(|c| sup_norm(state.field(c).values())),
        branch_pattern: BranchPattern::of(state),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Fraction of the admissible samples, counted from the end, used by
/// [`decay_rate_fit`].
pub const FIT_FRACTION: f64 = 0.5;
/// Samples at or below this multiple of `f64::EPSILON` times the largest
/// value (exact zeros included) are treated as round-off floor and dropped.
pub const FIT_FLOOR_FACTOR: f64 = 100.0;
pub const MIN_FIT_SAMPLES: usize = 3;

/// Noise level below which samples are not used by the fit.
///
/// Starts from `base`. If the series ever drops to `base`, everything after
/// that first crossing is round-off plateau; the floor is then raised to ten
/// times the largest value seen on the plateau.
fn noise_floor(series: &[(f64, f64)], base: f64) -> f64 {
    match series.iter().position(|(_, v)| *v <= base) {
        Some(first) => {
            let plateau = series[first..].iter().fold(0.0_f64, |m, (_, v)| m.max(*v));
            base.max(PLATEAU_MARGIN * plateau)
        }
        None => base,
    }
}

/// Factor between the largest plateau value and the effective fit floor.
pub const PLATEAU_MARGIN: f64 = 10.0;

/// Exponential rate `λ` in `value ≈ C e^{−λ t}` by least squares on
/// `log(value)` over the late half of the series.
pub fn decay_rate_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    decay_rate_fit_with(series, FIT_FRACTION)
}

pub fn decay_rate_fit_with(series: &[(f64, f64)], fraction: f64) -> Result<DecayFit> {
    if let Some(&(time, value)) = series.iter().find(|(_, v)| !(*v >= 0.0)) {
        return Err(Error::NonPositiveValues { time, value });
    }
    let peak = series.iter().fold(0.0_f64, |m, (_, v)| m.max(*v));
    if peak == 0.0 {
        return Err(Error::NonPositiveValues {
            time: series.first().map_or(0.0, |(t, _)| *t),
            value: 0.0,
        });
    }
    let floor = noise_floor(series, FIT_FLOOR_FACTOR * f64::EPSILON * peak);
    let usable: Vec<(f64, f64)> = series.iter().copied().filter(|(_, v)| *v > floor).collect();
    let take = ((usable.len() as f64) * fraction).ceil() as usize;
    if take < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooShort {
            available: take,
            required: MIN_FIT_SAMPLES,
        });
    }
    let window = &usable[usable.len() - take..];
    let n = window.len() as f64;
    let mean_t = window.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_y = window.iter().map(|(_, v)| v.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in window {
        let dt = t - mean_t;
        let dy = v.ln() - mean_y;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::WindowTooShort {
            available: 1,
            required: MIN_FIT_SAMPLES,
        });
    }
    let slope = sty / stt;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sty * sty / (stt * syy)
    };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        samples: window.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchLock {
    pub locked: bool,
    /// Start of the final stretch of identical uniform patterns.
    pub lock_time: Option<f64>,
    pub pattern: Option<BranchPattern>,
}

/// Earliest trace time after which the branch pattern is uniform over the
/// grid and never changes again.
pub fn detect_branch_lock(trace: &[TraceRow]) -> BranchLock {
    let unlocked = BranchLock {
        locked: false,
        lock_time: None,
        pattern: None,
    };
    let Some(last) = trace.last() else {
        return unlocked;
    };
    let pattern = last.branch_pattern;
    if !pattern.is_uniform() {
        return unlocked;
    }
    let start = trace
        .iter()
        .rposition(|r| r.branch_pattern != pattern)
        .map_or(0, |i| i + 1);
    BranchLock {
        locked: true,
        lock_time: Some(trace[start].t),
        pattern: Some(pattern),
    }
}

/// Largest relative change of each monitored quantity against the first row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationDrift {
    pub mass_u: f64,
    pub mass_v: f64,
    pub combo1: f64,
    pub combo2: f64,
}

impl ConservationDrift {
    pub fn max(&self) -> f64 {
        self.mass_u
            .max(self.mass_v)
            .max(self.combo1)
            .max(self.combo2)
    }
}

/// Drift of each quantity relative to its first value; a zero first value
/// falls back to the absolute change.
pub fn conservation_drift(trace: &[TraceRow]) -> ConservationDrift {
    let drift = |get: fn(&TraceRow) -> f64| {
        let Some(first) = trace.first() else {
            return 0.0;
        };
        let v0 = get(first);
        let denom = if v0 == 0.0 { 1.0 } else { v0.abs() };
        trace
            .iter()
            .map(|r| (get(r) - v0).abs() / denom)
            .fold(0.0, f64::max)
    };
    ConservationDrift {
        mass_u: drift(|r| r.mass_u),
        mass_v: drift(|r| r.mass_v),
        combo1: drift(|r| r.combo1),
        combo2: drift(|r| r.combo2),
    }
}

/// Ordered `key=value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn write_to(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Field;
    use std::f64::consts::PI;

    #[test]
    fn sup_norm_basics() {
        assert_eq!(sup_norm(&[0.0; 5]), 0.0);
        assert_eq!(sup_norm(&[-3.5; 4]), 3.5);
        let g = Grid1D::new(PI, 64).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * x).cos());
        let s = sup_norm(f.values());
        assert!(s <= 1.0 && s >= g.spacing().cos());
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let series: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.01;
                (t, 3.0 * (-4.0 * t).exp())
            })
            .collect();
        let fit = decay_rate_fit(&series).unwrap();
        assert!((fit.rate - 4.0).abs() < 1e-6);
        assert!(fit.r_squared > 0.9999);
        assert_eq!(fit.samples, 100);
    }

    #[test]
    fn fit_prefers_slowest_mode_late() {
        let series: Vec<(f64, f64)> = (0..400)
            .map(|i| {
                let t = i as f64 * 0.02;
                (t, (-t).exp() + 5.0 * (-9.0 * t).exp())
            })
            .collect();
        let fit = decay_rate_fit(&series).unwrap();
        assert!((fit.rate - 1.0).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn fit_drops_round_off_floor() {
        let mut series: Vec<(f64, f64)> =
            (0..50).map(|i| (i as f64, (-(i as f64)).exp())).collect();
        series.extend((50..100).map(|i| (i as f64, if i % 2 == 0 { 1e-18 } else { 0.0 })));
        let fit = decay_rate_fit(&series).unwrap();
        assert!((fit.rate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_ignores_noisy_plateau() {
        // Round-off noise of a few 1e-14 on top of a decaying mode, as seen
        // in long explicit runs.
        let series: Vec<(f64, f64)> = (0..2000)
            .map(|i| {
                let t = i as f64 * 0.005;
                let noise = 1e-13 * (((i * 7919) % 101) as f64 / 101.0);
                (t, (3.0 * (-4.0 * t).exp() - 1e-13).abs() + noise)
            })
            .collect();
        let fit = decay_rate_fit(&series).unwrap();
        assert!((fit.rate - 4.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            decay_rate_fit(&[(0.0, 1.0), (1.0, -1e-3)]),
            Err(Error::NonPositiveValues { .. })
        ));
        assert!(matches!(
            decay_rate_fit(&[(0.0, 0.0), (1.0, 0.0)]),
            Err(Error::NonPositiveValues { .. })
        ));
        assert!(matches!(
            decay_rate_fit(&[(0.0, 1.0), (1.0, 0.5)]),
            Err(Error::WindowTooShort { .. })
        ));
    }

    fn row(t: f64, pattern: BranchPattern, mass_u: f64) -> TraceRow {
        TraceRow {
            t,
            sup_dist_to_eq: 0.0,
            mass_u,
            mass_v: 1.0,
            combo1: 2.0,
            combo2: 3.0,
            combo1_sup_dev: 0.0,
            combo2_sup_dev: 0.0,
            total_mass: 0.0,
            min_field_value: 0.0,
            max_u: 0.0,
            max_v: 0.0,
            sup_norms: [0.0; 6],
            branch_pattern: pattern,
        }
    }

    #[test]
    fn branch_lock_finds_last_switch() {
        use Branch::*;
        let gg = BranchPattern([AtOrAbove, AtOrAbove]);
        let mg = BranchPattern([Mixed, AtOrAbove]);
        let trace = vec![
            row(0.0, gg, 1.0),
            row(1.0, mg, 1.0),
            row(2.0, gg, 1.0),
            row(3.0, gg, 1.0),
        ];
        let lock = detect_branch_lock(&trace);
        assert!(lock.locked);
        assert_eq!(lock.lock_time, Some(2.0));
        assert_eq!(lock.pattern.unwrap().to_string(), "GG");

        let mixed = vec![row(0.0, gg, 1.0), row(1.0, mg, 1.0)];
        assert!(!detect_branch_lock(&mixed).locked);
        assert_eq!(
            detect_branch_lock(&[row(0.0, gg, 1.0)]).lock_time,
            Some(0.0)
        );
    }

    #[test]
    fn branch_of_pairs() {
        assert_eq!(Branch::of(&[1.0, 2.0], &[3.0, 3.0]), Branch::Below);
        assert_eq!(Branch::of(&[3.0, 4.0], &[3.0, 3.0]), Branch::AtOrAbove);
        assert_eq!(Branch::of(&[1.0, 4.0], &[3.0, 3.0]), Branch::Mixed);
    }

    #[test]
    fn drift_reports_relative_change() {
        let gg = BranchPattern([Branch::AtOrAbove; 2]);
        let d = conservation_drift(&[row(0.0, gg, 2.0), row(1.0, gg, 2.5), row(2.0, gg, 1.9)]);
        assert!((d.mass_u - 0.25).abs() < 1e-15);
        assert_eq!(d.mass_v, 0.0);
        assert_eq!(d.max(), d.mass_u);
    }

    #[test]
    fn summary_renders_in_order() {
        let mut s = Summary::new();
        s.push("regime", "Q4");
        s.push("u1", 1.5);
        assert_eq!(s.render(), "regime=Q4\nu1=1.5\n");
        assert_eq!(s.get("u1"), Some("1.5"));
    }
}
