use std::f64::consts::PI;
use std::io::Write;

use qems_core::device::{
    anharmonic_linewidth, chi, lamb_dicke, sql_displacement, thermal_occupation, zero_point_length, LAMB_DICKE_WARN,
};
use qems_core::full::{evolve_detailed, EvolveOptions, JointSpace, NBAR_GUARDRAIL};
use qems_core::moments::{evolve_moments_with, exchange_frequency, exchange_time, propagate, MomentState};
use qems_core::ode::StepControl;
use qems_core::protocols::{
    cool_continuous, cool_dump_ion, cool_iterative, cool_single_exchange, cool_two_traps, force_sensitivity, monitoring_load,
    run_measurement_protocol, single_ion_monitoring_feasible, ProtocolResult, Scheme,
};
use qems_core::readout::{
    estimate_nbar, nbar_from_ratio, sideband_excitation_probability, simulate_shots, PhononDistribution, Sideband, SidebandDrive,
};
use rayon::prelude::*;

use crate::cli::{Command, GridArgs, SchemeArg, VaryArg};
use crate::config::{resolve, FileConfig, Grid, ParamSet, Resolved};
use crate::error::CliError;
use crate::output::{Cell, Table};
use crate::units::{parse_frequency, parse_number, parse_time, UnitError};

/// Tail mass left out when sizing the Fock spaces for `evolve`.
const EVOLVE_TAIL_BOUND: f64 = 1e-6;
const DEFAULT_SHOTS: u64 = 100_000;

/// Everything a command needs after config resolution.
#[derive(Debug, Clone)]
pub struct Context {
    pub params: ParamSet,
    pub file: FileConfig,
    pub resolved: Resolved,
    pub seed: u64,
}

fn config_err(e: UnitError) -> CliError {
    CliError::Config(e.to_string())
}

fn moment_control() -> StepControl {
    StepControl::with_tolerances(1e-10, 1e-10)
}

pub fn execute(command: &Command, ctx: &Context, log: &mut dyn Write) -> Result<Table, CliError> {
    match command {
        Command::Params => Ok(params_table(&ctx.resolved)),
        Command::Exchange { grid } => exchange(ctx, grid),
        Command::Evolve { grid, levels_a, levels_b, allow_large } => evolve(ctx, grid, *levels_a, *levels_b, *allow_large, log),
        Command::Readout { nbar, tau, shots, g, pulse } => readout(ctx, *nbar, tau.as_deref(), *shots, g.as_deref(), pulse.as_deref()),
        Command::Cool { scheme, cycles, recool, ion_damping } => cool(ctx, *scheme, *cycles, recool, ion_damping),
        Command::Force { force } => force_table(ctx, force),
        Command::Sweep { vary, from, to, points, log: log_spacing, jobs } => sweep(ctx, *vary, from, to, *points, *log_spacing, *jobs),
    }
}

fn params_table(r: &Resolved) -> Table {
    let mut t = Table::new(&["name", "value", "unit"]);
    let mut row = |name: &str, value: f64, unit: &str| t.push(vec![name.into(), value.into(), unit.into()]);
    for e in r.table() {
        row(e.name, e.value, e.unit);
    }
    let s = &r.system;
    let d = &r.experiment.device;
    if let Ok(n) = thermal_occupation(r.temperature, d.omega) {
        row("nbar_thermal", n, "");
    }
    if let (Ok(w), Ok(tau)) = (exchange_frequency(s.kappa, s.gamma_a), exchange_time(s.kappa, s.gamma_a)) {
        row("exchange_frequency", w, "rad/s");
        row("tau_star", tau, "s");
        if let Ok(r) = cool_single_exchange(&r.experiment) {
            row("nbar_a_at_tau_star", r.final_nbar_a, "");
        }
    }
    if let Ok(ld) = lamb_dicke(d) {
        row("eta", ld.eta, "");
        row("sideband_coupling", ld.eta * d.rabi_frequency, "rad/s");
        let (occ, _) = ld.occupancy_check(s.nbar_a0);
        row("lamb_dicke_occupancy", occ, "");
        row("lamb_dicke_warn", LAMB_DICKE_WARN, "");
    }
    if let Ok(lw) = anharmonic_linewidth(d.nu, s.nbar_a0, d.ion_mass, d.trap_dimension) {
        row("anharmonic_linewidth", lw, "rad/s");
    }
    if let Ok(c) = chi(d) {
        row("chi", c, "N/m");
    }
    row("x_zp_a", zero_point_length(d.cantilever_mass, d.omega), "m");
    row("x_zp_b", zero_point_length(d.ion_mass, d.nu), "m");
    if let Ok(x) = sql_displacement(d.cantilever_mass, d.omega) {
        row("x_sql", x, "m");
    }
    if s.kappa > 0.0 {
        row("monitoring_load", monitoring_load(s.nbar_a0, s.kappa, s.gamma_a), "");
        row("monitoring_feasible", if single_ion_monitoring_feasible(s.nbar_a0, s.kappa, s.gamma_a) { 1.0 } else { 0.0 }, "");
    }
    if let Ok(f) = force_sensitivity(d, 0.0) {
        row("f_min", f.f_min, "N");
    }
    t
}

fn grid_for(ctx: &Context, args: &GridArgs, default_t_max: f64, default_points: usize) -> Result<Grid, CliError> {
    let t_max = args.t_max.as_deref().or(ctx.file.t_max.as_deref());
    Grid::parse(t_max, args.points.or(ctx.file.points), default_t_max, default_points)
}

const TRAJECTORY_COLUMNS: [&str; 5] = ["t_s", "nbar_a", "nbar_b", "re_c", "im_c"];

fn exchange(ctx: &Context, args: &GridArgs) -> Result<Table, CliError> {
    let grid = grid_for(ctx, args, 50e-6, 5001)?;
    let exp = &ctx.resolved.experiment;
    let m0 = MomentState::thermal(exp.nbar_a0, exp.nbar_b0);
    let traj = evolve_moments_with(&m0, &ctx.resolved.system, &grid.times(), &moment_control())?;
    let mut t = Table::new(&TRAJECTORY_COLUMNS);
    for (time, s) in traj.iter() {
        t.push(vec![time.into(), s.nbar_a.into(), s.nbar_b.into(), s.cross.re.into(), s.cross.im.into()]);
    }
    Ok(t)
}

fn evolve(ctx: &Context, args: &GridArgs, levels_a: Option<usize>, levels_b: Option<usize>, allow_large: bool, log: &mut dyn Write) -> Result<Table, CliError> {
    let s = &ctx.resolved.system;
    let exp = &ctx.resolved.experiment;
    let default_t_max = exchange_frequency(s.kappa, s.gamma_a).map_or(50e-6, |w| PI / w);
    let grid = grid_for(ctx, args, default_t_max, 201)?;
    let auto = JointSpace::for_thermal(exp.nbar_a0, exp.nbar_b0.max(exp.nbar_a0), EVOLVE_TAIL_BOUND)?;
    let space = JointSpace::new(levels_a.unwrap_or(auto.n_a), levels_b.unwrap_or(auto.n_b))?;
    if exp.nbar_a0 > NBAR_GUARDRAIL {
        if !allow_large {
            return Err(CliError::Config(format!(
                "nbar_a0 = {} exceeds the full master-equation limit of {NBAR_GUARDRAIL}; use `exchange`, or pass --allow-large",
                exp.nbar_a0
            )));
        }
        let c = space.cost();
        writeln!(
            log,
            "estimated cost: {}x{} levels, density matrix dimension {}, ~{:.3e} bytes working memory, ~{:.3e} flops per derivative evaluation",
            space.n_a, space.n_b, c.dim, c.working_bytes, c.flops_per_rhs
        )?;
    }
    let r0 = space.thermal_product(exp.nbar_a0, exp.nbar_b0)?;
    let options = EvolveOptions { allow_large, ..EvolveOptions::default() };
    let run = evolve_detailed(&r0, s, space, &grid.times(), &options)?;
    let mut t = Table::new(&["t_s", "nbar_a", "nbar_b", "re_c", "im_c", "trace_error"]);
    for (time, s) in run.trajectory.iter() {
        t.push(vec![time.into(), s.nbar_a.into(), s.nbar_b.into(), s.cross.re.into(), s.cross.im.into(), s.trace_error.into()]);
    }
    Ok(t)
}

fn drive_for(ctx: &Context, g: Option<&str>, pulse: Option<&str>) -> Result<SidebandDrive, CliError> {
    let g = match g {
        Some(s) => parse_frequency(s).map_err(config_err)?,
        None => ctx.resolved.experiment.device.sideband_coupling()?,
    };
    let duration = match pulse {
        Some(s) => parse_time(s).map_err(config_err)?,
        None if g > 0.0 => PI / (2.0 * 2f64.sqrt() * g),
        None => return Err(CliError::Config("sideband coupling is zero; give --g".into())),
    };
    Ok(SidebandDrive::new(g, duration, Sideband::Red)?)
}

fn readout(ctx: &Context, nbar: Option<f64>, tau: Option<&str>, shots: Option<u64>, g: Option<&str>, pulse: Option<&str>) -> Result<Table, CliError> {
    let drive = drive_for(ctx, g, pulse)?;
    if let Some(nbar) = nbar {
        let dist = PhononDistribution::thermal(nbar)?;
        let p_red = sideband_excitation_probability(&dist, &drive.with_sideband(Sideband::Red));
        let p_blue = sideband_excitation_probability(&dist, &drive.with_sideband(Sideband::Blue));
        let ratio = p_red / p_blue;
        let mut header = vec!["nbar", "g_rad_s", "pulse_s", "p_red", "p_blue", "ratio_re", "nbar_from_ratio"];
        let mut row: Vec<Cell> = vec![
            nbar.into(),
            drive.g.into(),
            drive.duration.into(),
            p_red.into(),
            p_blue.into(),
            ratio.into(),
            nbar_from_ratio(ratio)?.nbar.into(),
        ];
        if let Some(shots) = shots {
            let record = simulate_shots(p_red, p_blue, shots, ctx.seed)?;
            let est = estimate_nbar(&record)?;
            header.extend(["shots", "excited_red", "excited_blue", "nbar_est", "nbar_lower", "nbar_upper"]);
            row.extend([shots.into(), record.excited_red.into(), record.excited_blue.into(), est.nbar.into(), est.lower.into(), est.upper.into()]);
        }
        let mut t = Table::new(&header);
        t.push(row);
        return Ok(t);
    }

    let exp = &ctx.resolved.experiment;
    let s = &ctx.resolved.system;
    let tau = match tau {
        Some(v) => parse_time(v).map_err(config_err)?,
        None if s.kappa > 0.0 && exp.nbar_a0 > 0.0 => 1.0 / (s.kappa * exp.nbar_a0.sqrt()),
        None => return Err(CliError::Config("no design point without coupling and occupation; give --tau".into())),
    };
    let shots = shots.unwrap_or(DEFAULT_SHOTS);
    let r = run_measurement_protocol(exp, tau, &drive, shots, ctx.seed)?;
    let est = r.estimate.expect("measurement protocol always reports an estimate");
    let (a0, lo, hi) = match est.nbar_a0 {
        Some(e) => (Some(e.nbar), Some(e.lower), Some(e.upper)),
        None => (None, None, None),
    };
    let mut t = Table::new(&[
        "tau_s",
        "nbar_b",
        "p_red",
        "p_blue",
        "shots",
        "excited_red",
        "excited_blue",
        "nbar_b_est",
        "nbar_b_lower",
        "nbar_b_upper",
        "nbar_a0_est",
        "nbar_a0_lower",
        "nbar_a0_upper",
        "reliable",
    ]);
    t.push(vec![
        tau.into(),
        r.final_nbar_b.into(),
        est.p_red.into(),
        est.p_blue.into(),
        shots.into(),
        est.record.excited_red.into(),
        est.record.excited_blue.into(),
        est.ion.nbar.into(),
        est.ion.lower.into(),
        est.ion.upper.into(),
        a0.into(),
        lo.into(),
        hi.into(),
        (est.ion.reliable as u64).into(),
    ]);
    Ok(t)
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Measurement => "measurement",
        Scheme::SingleExchange => "single",
        Scheme::DumpIon => "dump",
        Scheme::TwoTraps => "two-traps",
        Scheme::Iterative => "iterative",
        Scheme::Continuous => "continuous",
    }
}

fn cool(ctx: &Context, scheme: SchemeArg, cycles: usize, recool: &str, ion_damping: &str) -> Result<Table, CliError> {
    let exp = &ctx.resolved.experiment;
    let recool = parse_time(recool).map_err(config_err)?;
    let damping = parse_frequency(ion_damping).map_err(config_err)?;
    let run = |s: SchemeArg| -> Result<ProtocolResult, CliError> {
        Ok(match s {
            SchemeArg::Single | SchemeArg::All => cool_single_exchange(exp)?,
            SchemeArg::Dump => cool_dump_ion(exp)?,
            SchemeArg::TwoTraps => cool_two_traps(exp)?,
            SchemeArg::Iterative => cool_iterative(exp, cycles, recool)?,
            SchemeArg::Continuous => cool_continuous(exp, damping)?,
        })
    };
    let schemes = match scheme {
        SchemeArg::All => vec![SchemeArg::Single, SchemeArg::Dump, SchemeArg::TwoTraps, SchemeArg::Iterative, SchemeArg::Continuous],
        s => vec![s],
    };
    let mut t = Table::new(&["scheme", "cycle", "nbar_a", "nbar_b", "elapsed_s", "fixed_point"]);
    for s in schemes {
        let r = run(s)?;
        let name = scheme_name(r.scheme);
        if r.scheme == Scheme::Iterative {
            let per_cycle: f64 = r.timeline.iter().take(3).map(|p| p.duration).sum();
            for (i, n) in r.history.iter().enumerate() {
                t.push(vec![name.into(), (i + 1).into(), (*n).into(), r.final_nbar_b.into(), (per_cycle * (i + 1) as f64).into(), r.fixed_point.into()]);
            }
        } else {
            t.push(vec![name.into(), 1usize.into(), r.final_nbar_a.into(), r.final_nbar_b.into(), r.total_duration().into(), r.fixed_point.into()]);
        }
    }
    Ok(t)
}

fn force_table(ctx: &Context, forces: &[f64]) -> Result<Table, CliError> {
    let device = &ctx.resolved.experiment.device;
    let forces = if forces.is_empty() { vec![force_sensitivity(device, 0.0)?.f_min] } else { forces.to_vec() };
    let mut t = Table::new(&["force_n", "delta_nbar", "f_min_n", "x_sql_m"]);
    for f in forces {
        let r = force_sensitivity(device, f)?;
        t.push(vec![f.into(), r.delta_nbar.into(), r.f_min.into(), r.x_sql.into()]);
    }
    Ok(t)
}

fn parse_vary(vary: VaryArg, s: &str) -> Result<f64, CliError> {
    match vary {
        VaryArg::Kappa | VaryArg::GammaA | VaryArg::Delta | VaryArg::Frequency => parse_frequency(s),
        VaryArg::Q | VaryArg::NbarA0 => parse_number(s),
    }
    .map_err(config_err)
}

/// Sweep values, linear or logarithmic, including both ends.
pub fn sweep_values(from: f64, to: f64, points: usize, log: bool) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(CliError::Config(format!("sweep needs at least 2 points, got {points}")));
    }
    if log && !(from > 0.0 && to > 0.0) {
        return Err(CliError::Config("logarithmic sweep needs positive bounds".into()));
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = i as f64 / n;
            if i == points - 1 {
                to
            } else if log {
                from * (to / from).powf(x)
            } else {
                from + (to - from) * x
            }
        })
        .collect())
}

fn with_value(base: &ParamSet, vary: VaryArg, v: f64) -> ParamSet {
    let mut p = base.clone();
    let s = Some(format!("{v:e}"));
    match vary {
        VaryArg::Kappa => p.kappa = s,
        VaryArg::Q => {
            p.q = s;
            p.gamma_a = None;
        }
        VaryArg::GammaA => {
            p.gamma_a = s;
            p.q = None;
        }
        VaryArg::NbarA0 => p.nbar_a0 = s,
        VaryArg::Delta => p.delta = s,
        VaryArg::Frequency => p.frequency = s,
    }
    p
}

/// `(τ*, n̄_a(τ*), n̄_b(τ*))` from the moment equations.
pub fn exchange_point(r: &Resolved) -> Result<(f64, f64, f64), CliError> {
    let s = &r.system;
    let tau = exchange_time(s.kappa, s.gamma_a)?;
    let m = propagate(&MomentState::thermal(r.experiment.nbar_a0, r.experiment.nbar_b0), s, tau, &moment_control())?;
    Ok((tau, m.n_a, m.n_b))
}

/// Sweep value with `(τ*, n̄_a(τ*), n̄_b(τ*))`.
type SweepRow = (f64, (f64, f64, f64));

fn sweep(ctx: &Context, vary: VaryArg, from: &str, to: &str, points: usize, log: bool, jobs: Option<usize>) -> Result<Table, CliError> {
    let values = sweep_values(parse_vary(vary, from)?, parse_vary(vary, to)?, points, log)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", jobs.unwrap_or(0))))?;
    let results: Vec<Result<SweepRow, CliError>> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let r = resolve(&with_value(&ctx.params, vary, v))?;
                Ok((r.system.kappa, exchange_point(&r)?))
            })
            .collect()
    });

    let mut header = vec!["point", vary.column()];
    if vary != VaryArg::Kappa {
        header.push("kappa_rad_s");
    }
    header.extend(["tau_star_s", "nbar_a_at_tau_star", "nbar_b_at_tau_star"]);
    let mut t = Table::new(&header);
    for (i, (v, res)) in values.iter().zip(results).enumerate() {
        let (kappa, (tau, n_a, n_b)) = res?;
        let mut row: Vec<Cell> = vec![i.into(), (*v).into()];
        if vary != VaryArg::Kappa {
            row.push(kappa.into());
        }
        row.extend([tau.into(), n_a.into(), n_b.into()]);
        t.push(row);
    }
    Ok(t)
}
