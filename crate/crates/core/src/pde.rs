//! Finite-difference discretisation and explicit time stepping.

use serde::{Deserialize, Serialize};

use crate::config::{DtSetting, RunConfig};
use crate::diagnostics::{trace_row, TraceRow};
use crate::equilibrium::{compute_conserved, solve_equilibrium, ConservedQuantities};
use crate::error::{Error, Result};
use crate::initial::evaluate_initial;
use crate::model::{Component, Field, Grid1D, Params, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Zero normal derivative (no flux through the walls).
    #[default]
    Neumann,
    /// Homogeneous Dirichlet: every field vanishes on the walls.
    Dirichlet,
}

/// Second difference with ghost cells: mirrored for Neumann, negated for
/// Dirichlet (so the value on the cell face is zero).
pub fn laplacian_into(values: &[f64], grid: &Grid1D, boundary: Boundary, out: &mut [f64]) {
    let n = values.len();
    debug_assert_eq!(out.len(), n);
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let (left, right) = match boundary {
        Boundary::Neumann => (values[0], values[n - 1]),
        Boundary::Dirichlet => (-values[0], -values[n - 1]),
    };
    for i in 0..n {
        let l = if i == 0 { left } else { values[i - 1] };
        let r = if i + 1 == n { right } else { values[i + 1] };
        // Written as a difference of face fluxes so the Neumann sum telescopes.
        out[i] = ((r - values[i]) - (values[i] - l)) * inv_h2;
    }
}

pub fn laplacian(field: &Field, grid: &Grid1D, boundary: Boundary) -> Field {
    let mut out = vec![0.0; field.len()];
    laplacian_into(field.values(), grid, boundary, &mut out);
    Field::new(out)
}

/// Reaction terms at one node.
///
/// Written as four transfer rates so that every rate appears once with each
/// sign; the six outputs then sum to zero up to one rounding per term.
#[inline]
pub fn reaction(p: &Params, w: &[f64; 6]) -> [f64; 6] {
    let [u1, u2, v1, v2, v3, v4] = *w;
    let bind1 = p.a1 * u1.min(v1);
    let bind2 = p.a2 * u2.min(v4);
    let swap12 = p.c1 * v1 - p.c2 * v2;
    let swap34 = p.c3 * v3 - p.c4 * v4;
    [
        bind2 - bind1,
        bind1 - bind2,
        -bind1 - swap12,
        swap12 + bind2,
        bind1 - swap34,
        swap34 - bind2,
    ]
}

pub fn reaction_rhs(state: &State, params: &Params) -> [Field; 6] {
    let n = state.n_nodes();
    let mut out: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::with_capacity(n));
    for i in 0..n {
        let r = reaction(params, &state.at(i));
        for (o, v) in out.iter_mut().zip(r) {
            o.push(v);
        }
    }
    out.map(Field::new)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ExplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub stability_factor: f64,
}

impl StepperConfig {
    pub const AUTO_FACTOR: f64 = 0.9;

    /// Largest admissible step for explicit Euler: `min(h²/2, 1/L)` for
    /// Neumann walls and `min(h²/3, 1/L)` for Dirichlet walls, where `L` is
    /// the sum of the rate constants.
    ///
    /// The Dirichlet ghost cell puts `−3/h²` on the diagonal of the wall
    /// cells; `h²/3` keeps that update a convex combination.
    pub fn stability_bound(grid: &Grid1D, params: &Params, boundary: Boundary) -> f64 {
        let h2 = grid.spacing().powi(2);
        let diffusive = match boundary {
            Boundary::Neumann => h2 / 2.0,
            Boundary::Dirichlet => h2 / 3.0,
        };
        diffusive.min(1.0 / params.lipschitz())
    }

    pub fn auto(grid: &Grid1D, params: &Params, boundary: Boundary) -> Self {
        StepperConfig {
            dt: Self::AUTO_FACTOR * Self::stability_bound(grid, params, boundary),
            scheme: Scheme::ExplicitEuler,
            stability_factor: Self::AUTO_FACTOR,
        }
    }

    pub fn fixed(dt: f64) -> Self {
        StepperConfig {
            dt,
            scheme: Scheme::ExplicitEuler,
            stability_factor: 1.0,
        }
    }

    pub fn from_setting(
        setting: DtSetting,
        grid: &Grid1D,
        params: &Params,
        boundary: Boundary,
    ) -> Self {
        match setting {
            DtSetting::Auto => Self::auto(grid, params, boundary),
            DtSetting::Fixed(dt) => Self::fixed(dt),
        }
    }

    pub fn validate(&self, grid: &Grid1D, params: &Params, boundary: Boundary) -> Result<()> {
        let bound = self.stability_factor * Self::stability_bound(grid, params, boundary);
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::StabilityViolation { dt: self.dt, bound });
        }
        Ok(())
    }
}

/// Explicit Euler integrator with reusable scratch buffers.
pub struct Stepper {
    grid: Grid1D,
    params: Params,
    boundary: Boundary,
    dt: f64,
    rate: [Vec<f64>; 6],
}

impl Stepper {
    pub fn new(
        grid: Grid1D,
        params: Params,
        cfg: StepperConfig,
        boundary: Boundary,
    ) -> Result<Self> {
        cfg.validate(&grid, &params, boundary)?;
        let n = grid.n_cells();
        Ok(Stepper {
            grid,
            params,
            boundary,
            dt: cfg.dt,
            rate: std::array::from_fn(|_| vec![0.0; n]),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Fills the internal buffer with `Δw + R(w)` and returns its sup-norm.
    pub fn evaluate_rate(&mut self, state: &State) -> f64 {
        for (c, out) in self.rate.iter_mut().enumerate() {
            laplacian_into(state.fields()[c].values(), &self.grid, self.boundary, out);
        }
        let mut sup = 0.0_f64;
        for i in 0..state.n_nodes() {
            let r = reaction(&self.params, &state.at(i));
            for (out, v) in self.rate.iter_mut().zip(r) {
                out[i] += v;
                sup = sup.max(out[i].abs());
            }
        }
        sup
    }

    /// Advances `state` by one step. Returns the sup-norm of the time
    /// derivative at the state before the step.
    pub fn advance(&mut self, state: &mut State) -> Result<f64> {
        let sup = self.evaluate_rate(state);
        let dt = self.dt;
        let mut finite = true;
        for (field, rate) in state.fields_mut().iter_mut().zip(&self.rate) {
            for (v, r) in field.values_mut().iter_mut().zip(rate) {
                *v += dt * r;
                finite &= v.is_finite();
            }
        }
        state.time += dt;
        if !finite {
            state.check_finite()?;
        }
        Ok(sup)
    }
}

/// One explicit Euler step `w ← w + dt (Δw + R(w))`.
pub fn step(
    state: &State,
    grid: &Grid1D,
    params: &Params,
    cfg: &StepperConfig,
    boundary: Boundary,
) -> Result<State> {
    let mut stepper = Stepper::new(*grid, *params, *cfg, boundary)?;
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct SteadyRun {
    pub final_state: State,
    pub trace: Vec<TraceRow>,
    /// First time the steady criterion held, `None` if `t_max` was reached.
    pub steady_time: Option<f64>,
    pub conserved: ConservedQuantities,
    /// Point the trace measures distance to: the closed-form equilibrium for
    /// Neumann walls, zero for Dirichlet walls.
    pub target: [f64; 6],
    pub dt: f64,
    /// `(requested time, state)` for each configured snapshot time reached.
    pub snapshots: Vec<(f64, State)>,
}

impl SteadyRun {
    pub fn converged(&self) -> bool {
        self.steady_time.is_some()
    }
}

/// Steps between evaluations of the steady criterion (`Δ_check = 100 dt`).
pub const CHECK_INTERVAL: usize = 100;

/// Integrates until the steady criterion holds or `t_max` is reached.
///
/// Steady means both `‖Δw + R(w)‖∞ < steady_tol` and
/// `‖w(t) − w(t − Δ_check)‖∞ / Δ_check < steady_tol`. At `t = 0` there is
/// no history and the residual test alone decides.
pub fn run_to_steady(cfg: &RunConfig) -> Result<SteadyRun> {
    let grid = cfg.grid;
    let params = cfg.params;
    let state0 = evaluate_initial(&cfg.initial, &grid)?;
    let conserved = compute_conserved(&state0, &grid);
    let target = match cfg.boundary {
        Boundary::Neumann => solve_equilibrium(&params, &conserved)?.w,
        Boundary::Dirichlet => [0.0; 6],
    };
    let stepper_cfg = StepperConfig::from_setting(cfg.dt, &grid, &params, cfg.boundary);
    let mut stepper = Stepper::new(grid, params, stepper_cfg, cfg.boundary)?;
    let dt = stepper.dt();

    let mut snapshot_times: Vec<f64> = cfg.snapshot_times.clone();
    snapshot_times.sort_by(f64::total_cmp);
    let mut pending = snapshot_times.into_iter().peekable();
    let mut snapshots = Vec::new();

    let mut state = state0;
    let mut trace = vec![trace_row(&state, &grid, &target, &conserved)];
    let mut take_snapshots = |state: &State, snapshots: &mut Vec<(f64, State)>| {
        while let Some(&t) = pending.peek() {
            if state.time + 1e-9 * dt < t {
                break;
            }
            snapshots.push((t, state.clone()));
            pending.next();
        }
    };
    take_snapshots(&state, &mut snapshots);

    let mut steady_time = None;
    if stepper.evaluate_rate(&state) < cfg.steady_tol {
        steady_time = Some(0.0);
    }

    let max_steps = (cfg.t_max / dt).ceil() as usize;
    let window = CHECK_INTERVAL as f64 * dt;
    let mut previous = state.clone();
    let mut steps = 0;
    while steady_time.is_none() && steps < max_steps {
        stepper.advance(&mut state)?;
        steps += 1;
        state.time = steps as f64 * dt;
        take_snapshots(&state, &mut snapshots);

        let mut recorded = false;
        if steps % cfg.trace_stride == 0 {
            trace.push(trace_row(&state, &grid, &target, &conserved));
            recorded = true;
        }
        if steps % CHECK_INTERVAL == 0 {
            let residual = stepper.evaluate_rate(&state);
            let drift = max_change(&state, &previous) / window;
            previous.clone_from(&state);
            if residual < cfg.steady_tol && drift < cfg.steady_tol {
                steady_time = Some(state.time);
                if !recorded {
                    trace.push(trace_row(&state, &grid, &target, &conserved));
                }
            }
        }
    }
    if steady_time.is_none() && trace.last().map(|r| r.t) != Some(state.time) {
        trace.push(trace_row(&state, &grid, &target, &conserved));
    }

    Ok(SteadyRun {
        final_state: state,
        trace,
        steady_time,
        conserved,
        target,
        dt,
        snapshots,
    })
}

fn max_change(a: &State, b: &State) -> f64 {
    a.fields()
        .iter()
        .zip(b.fields())
        .flat_map(|(fa, fb)| {
            fa.values()
                .iter()
                .zip(fb.values())
                .map(|(x, y)| (x - y).abs())
        })
        .fold(0.0, f64::max)
}

/// Integrates a single scalar equation `z_t = Δz + f(z)` to `t_end`.
///
/// `dt` must satisfy the diffusive bound of `boundary` and be small against
/// the Lipschitz constant of `f`; the caller is responsible for the latter.
pub fn integrate_scalar(
    grid: &Grid1D,
    boundary: Boundary,
    initial: &Field,
    dt: f64,
    t_end: f64,
    reaction: impl Fn(f64) -> f64,
) -> Result<Field> {
    let h2 = grid.spacing().powi(2);
    let bound = match boundary {
        Boundary::Neumann => h2 / 2.0,
        Boundary::Dirichlet => h2 / 3.0,
    };
    if !(dt > 0.0) || dt > bound {
        return Err(Error::StabilityViolation { dt, bound });
    }
    let mut z = initial.values().to_vec();
    let mut lap = vec![0.0; z.len()];
    let steps = (t_end / dt).ceil() as usize;
    for _ in 0..steps {
        laplacian_into(&z, grid, boundary, &mut lap);
        for (v, l) in z.iter_mut().zip(&lap) {
            *v += dt * (l + reaction(*v));
        }
    }
    let out = Field::new(z);
    if !out.is_finite() {
        return Err(Error::NaNDetected {
            component: Component::U1,
            time: t_end,
        });
    }
    Ok(out)
}
