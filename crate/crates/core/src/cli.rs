//! Command-line front end and parameter sweeps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::diagnostics::{
    conservation_drift, detect_branch_lock, Branch, BranchPattern, Summary, TRACE_HEADER,
};
use crate::equilibrium::{
    classify_regime, condition_values, equilibrium_for_regime, residual_norm, ConditionReport,
    ConservedQuantities, EquilibriumPoint, RegimeTag,
};
use crate::error::{Error, Result};
use crate::initial::evaluate_initial;
use crate::model::{Component, Params, State};
use crate::monotone::{bracket_update, init_bracket, BracketPair};
use crate::pde::{run_to_steady, Boundary, SteadyRun};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "conserved-rd",
    version,
    about = "Conservative six-component reaction-diffusion solver"
)]
pub struct Cli {
    /// Directory for CSV and summary output [default: ./out, or the
    /// config's output_dir]
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the regime and print the closed-form equilibrium
    Equilibrium {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate to steady state and write trace.csv and snapshots
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the upper/lower bracket recursion
    Iterate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        /// Also write bracket.csv
        #[arg(long)]
        csv: bool,
    },
    /// Run every check that applies to the config
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify many random parameter sets
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        rate_min: f64,
        #[arg(long, default_value_t = 10.0)]
        rate_max: f64,
        /// Initial constants are drawn from (0, const_max]
        #[arg(long, default_value_t = 20.0)]
        const_max: f64,
        /// Use the base config's rates and constant levels for every sample
        #[arg(long)]
        collapse: bool,
        /// Also run the bracket recursion for each sample
        #[arg(long)]
        iterate: bool,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::OrderViolation { .. }
        | Error::NaNDetected { .. }
        | Error::NoRegime
        | Error::IndicatorViolation { .. }
        | Error::NegativeComponent { .. } => EXIT_CHECK_FAILED,
        _ => EXIT_USAGE,
    }
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cli
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Equilibrium { config } => {
            let cfg = RunConfig::load(config)?;
            let dir = output_dir(cli, &cfg)?;
            let summary = equilibrium_command(&cfg, out)?;
            summary.write_to(dir.join("summary.txt"))?;
            Ok(EXIT_OK)
        }
        Command::Simulate { config } => {
            let cfg = RunConfig::load(config)?;
            let dir = output_dir(cli, &cfg)?;
            let run = run_to_steady(&cfg)?;
            write_run_outputs(&cfg, &run, &dir)?;
            let summary = simulation_summary(&cfg, &run);
            summary.write_to(dir.join("summary.txt"))?;
            write!(out, "{}", summary.render())?;
            Ok(if run.converged() {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            })
        }
        Command::Iterate {
            config,
            tol,
            max_iter,
            csv,
        } => {
            let cfg = RunConfig::load(config)?;
            let dir = output_dir(cli, &cfg)?;
            let report = iterate_command(&cfg, *tol, *max_iter)?;
            write!(out, "{}", report.table())?;
            writeln!(out, "verdict: {}", report.verdict())?;
            if *csv {
                fs::write(dir.join("bracket.csv"), report.csv())?;
            }
            report.summary().write_to(dir.join("summary.txt"))?;
            Ok(match &report.outcome {
                BracketOutcome::Converged => EXIT_OK,
                BracketOutcome::NotConverged => EXIT_NOT_CONVERGED,
                BracketOutcome::Violation(_) => EXIT_CHECK_FAILED,
            })
        }
        Command::Verify { config } => {
            let cfg = RunConfig::load(config)?;
            let dir = output_dir(cli, &cfg)?;
            let checks = verify(&cfg)?;
            let mut summary = Summary::new();
            for c in &checks {
                writeln!(
                    out,
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )?;
                summary.push(c.name.clone(), if c.passed { "pass" } else { "fail" });
            }
            let passed = checks.iter().all(|c| c.passed);
            summary.push("all_passed", passed);
            summary.write_to(dir.join("summary.txt"))?;
            Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Sweep {
            config,
            samples,
            seed,
            rate_min,
            rate_max,
            const_max,
            collapse,
            iterate,
        } => {
            let base = RunConfig::load(config)?;
            let dir = output_dir(cli, &base)?;
            let mut spec = if *collapse {
                SweepSpec::collapsed(base, *samples, *seed)?
            } else {
                let mut s = SweepSpec::new(base, *samples, *seed);
                s.rate_ranges = [(*rate_min, *rate_max); 6];
                s.constant_ranges = [(0.0, *const_max); 6];
                s
            };
            spec.iterate_check = *iterate;
            let result = run_sweep(&spec)?;
            let summary = result.summary(&spec);
            summary.write_to(dir.join("summary.txt"))?;
            write!(out, "{}", summary.render())?;
            Ok(if result.no_regime == 0 && result.residual_failures == 0 {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
    }
}

/// Regime, conditions and equilibrium for a configuration.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub conserved: ConservedQuantities,
    pub conditions: ConditionReport,
    pub point: EquilibriumPoint,
    pub residual: f64,
    pub initial: State,
}

pub fn equilibrium_report(cfg: &RunConfig) -> Result<EquilibriumReport> {
    let initial = evaluate_initial(&cfg.initial, &cfg.grid)?;
    let conserved = ConservedQuantities::of_constant(cfg.initial.means());
    let conditions = condition_values(&cfg.params, &conserved);
    let regime = classify_regime(&conditions)?;
    let point = equilibrium_for_regime(regime, &cfg.params, &conserved)?;
    let residual = residual_norm(&point.w, &cfg.params, &conserved);
    Ok(EquilibriumReport {
        conserved,
        conditions,
        point,
        residual,
        initial,
    })
}

fn equilibrium_command(cfg: &RunConfig, out: &mut dyn Write) -> Result<Summary> {
    let r = equilibrium_report(cfg)?;
    let cq = r.conserved;
    writeln!(
        out,
        "conserved: M0={} N0={} W1={} W2={}",
        cq.m0, cq.n0, cq.w1, cq.w2
    )?;
    writeln!(
        out,
        "constants: D1={} D2={} D3={}",
        r.conditions.d1, r.conditions.d2, r.conditions.d3
    )?;
    for (i, c) in r.conditions.conditions.iter().enumerate() {
        let (name, rel) = if c.holds() {
            (format!("I{}", i + 1), "<")
        } else {
            (format!("I{}c", i + 1), ">=")
        };
        writeln!(out, "{name:<4} {} {rel} {}", c.lhs, c.rhs)?;
    }
    writeln!(out, "regime: {}", r.point.regime)?;
    if cfg.boundary == Boundary::Dirichlet {
        writeln!(out, "note: with dirichlet walls every field decays to zero")?;
    }
    for c in Component::ALL {
        writeln!(out, "{:<3} {:.10}", c.name(), r.point.get(c))?;
    }
    writeln!(out, "residual: {:e}", r.residual)?;

    let mut s = Summary::new();
    s.push("regime", r.point.regime);
    for (k, v) in [("m0", cq.m0), ("n0", cq.n0), ("w1", cq.w1), ("w2", cq.w2)] {
        s.push(k, v);
    }
    s.push("d1", r.conditions.d1);
    s.push("d2", r.conditions.d2);
    s.push("d3", r.conditions.d3);
    for (i, c) in r.conditions.conditions.iter().enumerate() {
        s.push(format!("i{}_lhs", i + 1), c.lhs);
        s.push(format!("i{}_rhs", i + 1), c.rhs);
        s.push(format!("i{}_holds", i + 1), c.holds());
    }
    for c in Component::ALL {
        s.push(c.name(), r.point.get(c));
    }
    s.push("residual", format!("{:e}", r.residual));
    Ok(s)
}

fn write_run_outputs(cfg: &RunConfig, run: &SteadyRun, dir: &Path) -> Result<()> {
    let mut trace = String::with_capacity(run.trace.len() * 160);
    trace.push_str(TRACE_HEADER);
    trace.push('\n');
    for row in &run.trace {
        trace.push_str(&row.csv_line(&run.conserved));
        trace.push('\n');
    }
    fs::write(dir.join("trace.csv"), trace)?;
    for (t, state) in &run.snapshots {
        fs::write(
            dir.join(format!("snapshot_{t}.csv")),
            snapshot_csv(cfg, state),
        )?;
    }
    Ok(())
}

pub fn snapshot_csv(cfg: &RunConfig, state: &State) -> String {
    let mut s = String::from("x,u1,u2,v1,v2,v3,v4\n");
    for (i, x) in cfg.grid.nodes().enumerate() {
        let w = state.at(i);
        s.push_str(&format!(
            "{x:.9e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
            w[0], w[1], w[2], w[3], w[4], w[5]
        ));
    }
    s
}

fn simulation_summary(cfg: &RunConfig, run: &SteadyRun) -> Summary {
    let mut s = Summary::new();
    s.push(
        "boundary",
        match cfg.boundary {
            Boundary::Neumann => "neumann",
            Boundary::Dirichlet => "dirichlet",
        },
    );
    s.push("dt", format!("{:e}", run.dt));
    s.push("steady", run.converged());
    s.push(
        "steady_time",
        run.steady_time
            .map_or("none".to_string(), |t| t.to_string()),
    );
    s.push("final_time", run.final_state.time);
    let last = run.trace.last().expect("trace has the initial row");
    s.push("final_sup_dist", format!("{:e}", last.sup_dist_to_eq));
    let drift = conservation_drift(&run.trace);
    s.push("drift_mass_u", format!("{:e}", drift.mass_u));
    s.push("drift_mass_v", format!("{:e}", drift.mass_v));
    s.push("drift_combo1", format!("{:e}", drift.combo1));
    s.push("drift_combo2", format!("{:e}", drift.combo2));
    let lock = detect_branch_lock(&run.trace);
    s.push("branch_locked", lock.locked);
    if let (Some(t), Some(p)) = (lock.lock_time, lock.pattern) {
        s.push("branch_lock_time", t);
        s.push("branch_pattern", p);
    }
    s.push(
        "min_field_value",
        run.trace
            .iter()
            .map(|r| r.min_field_value)
            .fold(f64::INFINITY, f64::min),
    );
    s
}

#[derive(Debug)]
pub enum BracketOutcome {
    Converged,
    NotConverged,
    Violation(Error),
}

#[derive(Debug)]
pub struct BracketReport {
    pub history: Vec<BracketPair>,
    pub outcome: BracketOutcome,
    pub w_star: EquilibriumPoint,
    pub tol: f64,
}

impl BracketReport {
    pub fn table(&self) -> String {
        let fmt = |v: &[f64; 6]| {
            v.iter()
                .map(|x| format!("{x:>12.6}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = format!(
            "{:>6}  {:<77}  {:<77}  {:>12}\n",
            "m", "lower", "upper", "gap"
        );
        for p in &self.history {
            s.push_str(&format!(
                "{:>6}  {}  {}  {:>12.4e}\n",
                p.iteration,
                fmt(&p.lower),
                fmt(&p.upper),
                p.gap()
            ));
        }
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from(
            "m,lower_u1,lower_u2,lower_v1,lower_v2,lower_v3,lower_v4,\
             upper_u1,upper_u2,upper_v1,upper_v2,upper_v3,upper_v4,gap\n",
        );
        for p in &self.history {
            let vals: Vec<String> = p
                .lower
                .iter()
                .chain(&p.upper)
                .map(|v| format!("{v:.15e}"))
                .collect();
            s.push_str(&format!(
                "{},{},{:.6e}\n",
                p.iteration,
                vals.join(","),
                p.gap()
            ));
        }
        s
    }

    pub fn verdict(&self) -> String {
        let last = self
            .history
            .last()
            .expect("history starts with the initial pair");
        match &self.outcome {
            BracketOutcome::Converged => format!(
                "converged after {} updates, gap {:e}",
                self.history.len() - 1,
                last.gap()
            ),
            BracketOutcome::NotConverged => format!(
                "not converged after {} updates, gap {:e}",
                self.history.len() - 1,
                last.gap()
            ),
            BracketOutcome::Violation(e) => format!("stopped: {e}"),
        }
    }

    pub fn summary(&self) -> Summary {
        let last = self
            .history
            .last()
            .expect("history starts with the initial pair");
        let mut s = Summary::new();
        s.push(
            "outcome",
            match self.outcome {
                BracketOutcome::Converged => "converged",
                BracketOutcome::NotConverged => "not_converged",
                BracketOutcome::Violation(_) => "order_violation",
            },
        );
        s.push("updates", self.history.len() - 1);
        s.push("gap", format!("{:e}", last.gap()));
        s.push(
            "distance_to_equilibrium",
            format!("{:e}", last.distance_to(&self.w_star.w)),
        );
        s
    }
}

/// Runs the checked recursion from the scaled initial pair, keeping the
/// trajectory up to the first order violation.
pub fn iterate_command(cfg: &RunConfig, tol: f64, max_iter: usize) -> Result<BracketReport> {
    let eq = equilibrium_report(cfg)?;
    let mut pair = init_bracket(&eq.point, &eq.initial)?;
    let mut history = vec![pair];
    let mut outcome = BracketOutcome::NotConverged;
    for _ in 0..=max_iter {
        if pair.gap() < tol {
            outcome = if pair.distance_to(&eq.point.w) < tol {
                BracketOutcome::Converged
            } else {
                BracketOutcome::NotConverged
            };
            break;
        }
        if history.len() > max_iter {
            break;
        }
        match bracket_update(&pair, &cfg.params, &eq.conserved) {
            Ok(next) => {
                pair = next;
                history.push(pair);
            }
            Err(e) => {
                outcome = BracketOutcome::Violation(e);
                break;
            }
        }
    }
    Ok(BracketReport {
        history,
        outcome,
        w_star: eq.point,
        tol,
    })
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Pattern that a locked run must settle into for regime `tag`.
pub fn regime_pattern(tag: RegimeTag) -> BranchPattern {
    let b = |below: bool| {
        if below {
            Branch::Below
        } else {
            Branch::AtOrAbove
        }
    };
    match tag {
        RegimeTag::Q1 => BranchPattern([b(true), b(true)]),
        RegimeTag::Q2 => BranchPattern([b(true), b(false)]),
        RegimeTag::Q3 => BranchPattern([b(false), b(true)]),
        RegimeTag::Q4 => BranchPattern([b(false), b(false)]),
    }
}

/// Full battery: equilibrium, simulation, conservation, positivity,
/// branch lock and the bracket recursion.
pub fn verify(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let eq = equilibrium_report(cfg)?;
    checks.push(Check::new(
        "equilibrium_residual",
        eq.residual < 1e-10,
        format!("{} residual {:e}", eq.point.regime, eq.residual),
    ));

    let run = run_to_steady(cfg)?;
    let last = run.trace.last().expect("trace has the initial row");
    let caps = initial_caps(&eq.initial);
    match cfg.boundary {
        Boundary::Neumann => {
            checks.push(Check::new(
                "steady_state",
                run.converged() && last.sup_dist_to_eq < 1e-3,
                format!(
                    "steady_time {:?}, sup distance to equilibrium {:e}",
                    run.steady_time, last.sup_dist_to_eq
                ),
            ));
            let drift = conservation_drift(&run.trace);
            checks.push(Check::new(
                "conservation",
                drift.max() < 1e-12,
                format!("max relative drift {:e}", drift.max()),
            ));
            let lock = detect_branch_lock(&run.trace);
            let expected = regime_pattern(eq.point.regime);
            checks.push(Check::new(
                "branch_lock",
                lock.locked && lock.pattern == Some(expected),
                format!(
                    "lock {:?} at {:?}, expected {expected}",
                    lock.pattern.map(|p| p.to_string()),
                    lock.lock_time
                ),
            ));
        }
        Boundary::Dirichlet => {
            let sup = last.sup_norms.iter().fold(0.0_f64, |m, v| m.max(*v));
            checks.push(Check::new(
                "decay_to_zero",
                run.converged(),
                format!("final time {}, largest sup-norm {sup:e}", last.t),
            ));
        }
    }
    let min_value = run
        .trace
        .iter()
        .map(|r| r.min_field_value)
        .fold(f64::INFINITY, f64::min);
    let bounded = run
        .trace
        .iter()
        .all(|r| r.max_u <= 2.0 * caps.0 && r.max_v <= 2.0 * caps.1);
    checks.push(Check::new(
        "positivity_boundedness",
        min_value >= 0.0 && bounded,
        format!("min value {min_value:e}, caps u {} v {}", caps.0, caps.1),
    ));

    let bracket = iterate_command(cfg, 1e-8, 10_000)?;
    checks.push(Check::new(
        "bracket_convergence",
        matches!(bracket.outcome, BracketOutcome::Converged),
        bracket.verdict(),
    ));
    Ok(checks)
}

/// Initial sup-norms of `u1 + u2` and of `Σ v`, which bound every `u` and
/// every `v` field of a nonnegative solution with no-flux walls.
pub fn initial_caps(initial: &State) -> (f64, f64) {
    let sup = |coeffs| {
        initial
            .combination(coeffs)
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    };
    (
        sup([1.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
        sup([0.0, 0.0, 1.0, 1.0, 1.0, 1.0]),
    )
}

/// Randomized regime-coverage experiment.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: RunConfig,
    /// Log-uniform bounds for `(a1, a2, c1, c2, c3, c4)`.
    pub rate_ranges: [(f64, f64); 6],
    /// Each initial constant is drawn uniformly from `(lo, hi]`.
    pub constant_ranges: [(f64, f64); 6],
    pub samples: usize,
    pub seed: u64,
    pub iterate_check: bool,
}

impl SweepSpec {
    pub fn new(base: RunConfig, samples: usize, seed: u64) -> Self {
        SweepSpec {
            base,
            rate_ranges: [(0.1, 10.0); 6],
            constant_ranges: [(0.0, 20.0); 6],
            samples,
            seed,
            iterate_check: false,
        }
    }

    /// Ranges shrunk to the base rates and to the constant part of each
    /// base initial field.
    pub fn collapsed(base: RunConfig, samples: usize, seed: u64) -> Result<Self> {
        let rates = base.params.to_array();
        let levels = base.initial.means();
        let mut spec = SweepSpec::new(base, samples, seed);
        spec.rate_ranges = rates.map(|r| (r, r));
        spec.constant_ranges = levels.map(|l| (l, l));
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        for (lo, hi) in self.rate_ranges {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Config(format!("invalid rate range [{lo}, {hi}]")));
            }
        }
        for (lo, hi) in self.constant_ranges {
            if !(lo >= 0.0 && hi > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "invalid constant range ({lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Parameters and initial constants of sample `index`.
    pub fn draw(&self, index: u64) -> (Params, [f64; 6]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let rates: [f64; 6] = self.rate_ranges.map(|(lo, hi)| {
            let u: f64 = rng.gen();
            (lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(lo, hi)
        });
        let constants: [f64; 6] = self.constant_ranges.map(|(lo, hi)| {
            let u: f64 = rng.gen();
            hi - (hi - lo) * u
        });
        let params = Params::from_array(rates).expect("rates drawn from positive ranges");
        (params, constants)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub regime: Option<RegimeTag>,
    pub residual: f64,
    /// Either `I1 ∧ I2ᶜ ∧ I3ᶜ ∧ I4` or `I1ᶜ ∧ I2 ∧ I3 ∧ I4ᶜ` holds.
    pub exclusion_hit: bool,
    pub bracket_converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub histogram: [usize; 4],
    pub no_regime: usize,
    pub max_residual: f64,
    pub residual_failures: usize,
    pub exclusion_hits: usize,
    pub bracket_converged: usize,
    pub outcomes: Vec<SampleOutcome>,
}

pub const SWEEP_RESIDUAL_TOL: f64 = 1e-10;

impl SweepResult {
    pub fn summary(&self, spec: &SweepSpec) -> Summary {
        let mut s = Summary::new();
        s.push("samples", spec.samples);
        s.push("seed", spec.seed);
        for tag in RegimeTag::ALL {
            s.push(format!("regime_{tag}"), self.histogram[tag.index()]);
        }
        s.push("no_regime", self.no_regime);
        s.push("max_residual", format!("{:e}", self.max_residual));
        s.push("residual_failures", self.residual_failures);
        s.push("exclusion_hits", self.exclusion_hits);
        if spec.iterate_check {
            s.push("bracket_converged", self.bracket_converged);
        }
        s
    }
}

fn sample(spec: &SweepSpec, index: u64) -> SampleOutcome {
    let (params, constants) = spec.draw(index);
    let cq = ConservedQuantities::of_constant(constants);
    let report = condition_values(&params, &cq);
    let [i1, i2, i3, i4] = report.conditions;
    let exclusion_hit =
        (i1.holds() && i2.complement_holds() && i3.complement_holds() && i4.holds())
            || (i1.complement_holds() && i2.holds() && i3.holds() && i4.complement_holds());
    let point = classify_regime(&report).and_then(|tag| equilibrium_for_regime(tag, &params, &cq));
    match point {
        Ok(point) => {
            let bracket_converged = spec.iterate_check.then(|| {
                let grid = spec.base.grid;
                let state = State::uniform(&grid, constants, 0.0);
                init_bracket(&point, &state)
                    .and_then(|start| {
                        crate::monotone::iterate_from(start, &params, &cq, &point, 1e-8, 10_000)
                    })
                    .map(|r| r.converged)
                    .unwrap_or(false)
            });
            SampleOutcome {
                regime: Some(point.regime),
                residual: residual_norm(&point.w, &params, &cq),
                exclusion_hit,
                bracket_converged,
            }
        }
        Err(_) => SampleOutcome {
            regime: None,
            residual: f64::NAN,
            exclusion_hit,
            bracket_converged: None,
        },
    }
}

/// Draws every sample in parallel and reduces in sample order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let outcomes: Vec<SampleOutcome> = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| sample(spec, i))
        .collect();
    let mut result = SweepResult {
        histogram: [0; 4],
        no_regime: 0,
        max_residual: 0.0,
        residual_failures: 0,
        exclusion_hits: 0,
        bracket_converged: 0,
        outcomes: Vec::new(),
    };
    for o in &outcomes {
        match o.regime {
            Some(tag) => {
                result.histogram[tag.index()] += 1;
                result.max_residual = result.max_residual.max(o.residual);
                if !(o.residual < SWEEP_RESIDUAL_TOL) {
                    result.residual_failures += 1;
                }
            }
            None => result.no_regime += 1,
        }
        result.exclusion_hits += o.exclusion_hit as usize;
        result.bracket_converged += (o.bracket_converged == Some(true)) as usize;
    }
    result.outcomes = outcomes;
    Ok(result)
}
