use std::f64::consts::PI;

use conserved_rd::config::{reference_config, reference_params, DtSetting, RunConfig};
use conserved_rd::diagnostics::{conservation_drift, detect_branch_lock, sup_distance};
use conserved_rd::initial::{
    evaluate_initial, shift_initial, shift_vector, FieldSpec, InitialSpec,
};
use conserved_rd::model::{Component, Field, Grid1D, Params};
use conserved_rd::pde::{integrate_scalar, run_to_steady, step, Boundary, StepperConfig};

fn load(name: &str) -> RunConfig {
    let path = format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
    RunConfig::load(path).unwrap()
}

#[test]
fn shipped_reference_config_matches_builtin() {
    let mut cfg = load("reference_q4.json");
    cfg.snapshot_times.clear();
    assert_eq!(cfg, reference_config(128));
}

#[test]
fn equilibrium_start_is_steady_at_time_zero() {
    let cfg = load("at_equilibrium.json");
    let run = run_to_steady(&cfg).unwrap();
    assert_eq!(run.steady_time, Some(0.0));
    assert_eq!(run.trace.len(), 1);
    let lock = detect_branch_lock(&run.trace);
    assert_eq!(lock.lock_time, Some(0.0));
    assert_eq!(lock.pattern.unwrap().to_string(), "GG");
}

#[test]
fn unit_rate_run_locks_to_the_lower_branches() {
    let cfg = load("q1_unit_rates.json");
    let run = run_to_steady(&cfg).unwrap();
    assert!(run.converged());
    let expected = [0.5, 0.5, 1.0, 1.5, 1.5, 1.0];
    for (t, e) in run.target.iter().zip(expected) {
        assert!((t - e).abs() < 1e-12);
    }
    assert!(sup_distance(&run.final_state, &expected) < 1e-4);
    let lock = detect_branch_lock(&run.trace);
    assert!(lock.locked);
    assert_eq!(lock.pattern.unwrap().to_string(), "LL");
    assert!(conservation_drift(&run.trace).max() < 1e-12);
}

#[test]
fn distance_to_equilibrium_shrinks_after_lock() {
    let mut cfg = reference_config(64);
    cfg.trace_stride = 50;
    let run = run_to_steady(&cfg).unwrap();
    let lock = detect_branch_lock(&run.trace);
    let t_lock = lock.lock_time.unwrap();
    let tail: Vec<f64> = run
        .trace
        .iter()
        .filter(|r| r.t >= t_lock)
        .map(|r| r.sup_dist_to_eq)
        .collect();
    for w in tail.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-13, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn dirichlet_run_stays_nonnegative_and_decays() {
    let mut cfg = reference_config(32);
    cfg.boundary = Boundary::Dirichlet;
    cfg.t_max = 30.0;
    let run = run_to_steady(&cfg).unwrap();
    assert!(run.converged());
    assert!(run.trace.iter().all(|r| r.min_field_value >= 0.0));
    assert!(run.final_state.max_value() < 1e-5);
    let first = run.trace.first().unwrap();
    let last = run.trace.last().unwrap();
    assert!(last.mass_u < 1e-5 * first.mass_u);
}

#[test]
fn shifted_initial_data_gives_shifted_solution() {
    let p = reference_params();
    let grid = Grid1D::new(PI, 32).unwrap();
    let base = InitialSpec::from_fields([
        FieldSpec::cosine(2.0, 1, 1.0),
        FieldSpec::cosine(3.0, 2, -1.0),
        FieldSpec::cosine(2.5, 1, -1.0),
        FieldSpec::constant(1.0),
        FieldSpec::cosine(2.0, 3, 0.5),
        FieldSpec::cosine(3.0, 1, 1.0),
    ]);
    let delta = 0.75;
    let shifted = shift_initial(&base, &p, delta).unwrap();
    let cfg = StepperConfig::auto(&grid, &p, Boundary::Neumann);
    let mut a = evaluate_initial(&base, &grid).unwrap();
    let mut b = evaluate_initial(&shifted, &grid).unwrap();
    for _ in 0..2000 {
        a = step(&a, &grid, &p, &cfg, Boundary::Neumann).unwrap();
        b = step(&b, &grid, &p, &cfg, Boundary::Neumann).unwrap();
    }
    let s = shift_vector(&p);
    for c in Component::ALL {
        for (x, y) in a.field(c).values().iter().zip(b.field(c).values()) {
            assert!((y - x - delta * s[c.index()]).abs() < 1e-11);
        }
    }
}

#[test]
fn fixed_dt_above_bound_is_rejected() {
    let mut cfg = reference_config(64);
    let h = cfg.grid.spacing();
    cfg.dt = DtSetting::Fixed(h * h);
    assert!(matches!(
        run_to_steady(&cfg),
        Err(conserved_rd::Error::StabilityViolation { .. })
    ));
}

/// Heat-mode decay on a sequence of grids: with `dt ∝ h²` the error at a
/// fixed time is second order in `h`.
#[test]
fn heat_mode_error_is_second_order() {
    let t_end = 0.25;
    let error = |n: usize| {
        let grid = Grid1D::new(PI, n).unwrap();
        let init = Field::from_fn(&grid, |x| 1.0 + (2.0 * x).cos());
        let dt = 0.4 * grid.spacing().powi(2);
        let steps = (t_end / dt).ceil();
        let dt = t_end / steps;
        let z = integrate_scalar(&grid, Boundary::Neumann, &init, dt, t_end, |_| 0.0).unwrap();
        grid.nodes()
            .zip(z.values())
            .map(|(x, v)| (v - 1.0 - (-4.0 * t_end).exp() * (2.0 * x).cos()).abs())
            .fold(0.0, f64::max)
    };
    let e1 = error(32);
    let e2 = error(64);
    let e3 = error(128);
    let r1 = e1 / e2;
    let r2 = e2 / e3;
    assert!((3.6..4.4).contains(&r1), "ratio {r1}");
    assert!((3.6..4.4).contains(&r2), "ratio {r2}");
}

#[test]
fn dirichlet_step_bound_keeps_wall_cells_nonnegative() {
    // A single positive spike in a wall cell: at the largest admissible
    // Dirichlet step every value stays nonnegative.
    let grid = Grid1D::new(1.0, 16).unwrap();
    let p = Params::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let mut fields: [Field; 6] = std::array::from_fn(|_| Field::constant(&grid, 0.0));
    fields[0].values_mut()[0] = 1.0;
    let state = conserved_rd::State::new(fields, 0.0).unwrap();
    let cfg = StepperConfig::fixed(StepperConfig::stability_bound(
        &grid,
        &p,
        Boundary::Dirichlet,
    ));
    let next = step(&state, &grid, &p, &cfg, Boundary::Dirichlet).unwrap();
    assert!(next.min_value() >= 0.0);
}
