use std::fmt::Display;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use eta_gap::sim::{self, write_trajectory_csv, MetricsRow};
use eta_gap::{
    apply_eta_error_buffer, write_gap_table, BoundKind, GapTableRow, Mode, SimResult,
    TrajectoryBound,
};
use rayon::prelude::*;

use crate::scenario::ScenarioFile;
use crate::{CliError, Command, CommonArgs, GapArgs, SimulateArgs, SweepArgs};

pub(crate) fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Gap(args) => cmd_gap(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn file_error(path: &Path, e: impl Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| file_error(path, e))
}

/// Scenario with command-line overrides applied.
fn load(common: &CommonArgs) -> Result<ScenarioFile, CliError> {
    let mut s = match &common.scenario {
        Some(path) => ScenarioFile::load(path)?,
        None => ScenarioFile::reference(),
    };
    if !common.safe_d.is_empty() {
        s.solver.safe_d_list = common.safe_d.clone();
    }
    if let Some(eps) = common.epsilon {
        s.solver.epsilon_s = eps;
    }
    if let Some(out) = &common.out {
        s.output = out.clone();
    }
    Ok(s)
}

fn safe_d_list(s: &ScenarioFile) -> Result<Vec<f64>, CliError> {
    let list = &s.solver.safe_d_list;
    if list.is_empty() {
        return Err(CliError::Config(
            "safe_d_list is empty: pass --safe-d or set solver.safe_d_list".into(),
        ));
    }
    if let Some(bad) = list.iter().find(|d| !d.is_finite() || **d < 0.0) {
        return Err(CliError::Config(format!(
            "safe distance {bad} m must be finite and >= 0"
        )));
    }
    Ok(list.clone())
}

fn output_dir(s: &ScenarioFile) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&s.output).map_err(|e| file_error(&s.output, e))?;
    Ok(s.output.clone())
}

/// Solves every safe distance in `safe_ds`, widening each gap by the
/// scenario's ETA error buffer.
pub fn gap_rows(s: &ScenarioFile, safe_ds: &[f64]) -> Result<Vec<GapTableRow>, CliError> {
    let base = s.corridor()?;
    let solver = s.solver()?;
    safe_ds
        .iter()
        .map(|&d| {
            let spec = base.with_safe_d(d)?;
            let started = Instant::now();
            let sol = solver.solve(&spec, d)?;
            let sol = apply_eta_error_buffer(&spec, &sol, s.solver.epsilon_s)?;
            let solve_time_s = started.elapsed().as_secs_f64();
            Ok(GapTableRow {
                safe_d_m: d,
                gap_s: sol.gap_s,
                continuous_gap_s: sol.continuous_gap_s,
                trivial_bound_s: spec.total_travel_time_s(),
                solve_time_s,
            })
        })
        .collect()
}

fn cmd_gap(args: &GapArgs) -> Result<(), CliError> {
    let s = load(&args.common)?;
    let safe_ds = safe_d_list(&s)?;
    let rows = gap_rows(&s, &safe_ds)?;
    let out = output_dir(&s)?;

    let path = out.join("gap_table.csv");
    write_gap_table(&rows, create(&path)?).map_err(|e| file_error(&path, e))?;
    for r in &rows {
        println!(
            "safe_d {:>7.1} m  gap {:>5.1} s  trivial bound {:.1} s",
            r.safe_d_m, r.gap_s, r.trivial_bound_s
        );
    }

    if args.bounds {
        let spec = s.corridor()?;
        let sched = spec.schedule_for(0.0);
        for (kind, name) in [(BoundKind::Lower, "lower"), (BoundKind::Upper, "upper")] {
            let bound = TrajectoryBound::build(&spec, &sched, kind)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let path = out.join(format!("bounds_{name}.csv"));
            bound
                .write_csv(create(&path)?)
                .map_err(|e| file_error(&path, e))?;
        }
    }
    if args.dump_config {
        let path = out.join("scenario.json");
        std::fs::write(&path, s.to_json() + "\n").map_err(|e| file_error(&path, e))?;
    }
    Ok(())
}

/// One finished simulation run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub safe_d_m: f64,
    pub result: SimResult,
}

impl RunOutput {
    pub fn metrics(&self) -> MetricsRow {
        MetricsRow::from_result(self.safe_d_m, &self.result)
    }
}

/// Runs every (safe distance, mode) pair in parallel. ETA runs use the
/// solved (and buffered) gap. Results come back in input order, safe
/// distance major.
pub fn simulate_runs(
    s: &ScenarioFile,
    safe_ds: &[f64],
    modes: &[Mode],
    record_trajectories: bool,
) -> Result<Vec<RunOutput>, CliError> {
    let base = s.corridor()?;
    let gaps = gap_rows(s, safe_ds)?;
    let jobs: Vec<(f64, f64, Mode)> = gaps
        .iter()
        .flat_map(|g| modes.iter().map(move |&m| (g.safe_d_m, g.gap_s, m)))
        .collect();
    jobs.into_par_iter()
        .map(|(d, gap, mode)| {
            let spec = base.with_safe_d(d)?;
            let mut cfg = s.sim_config(mode, d)?;
            cfg.record_trajectories = record_trajectories;
            let result = sim::run(cfg, &spec, Some(gap))?;
            Ok(RunOutput {
                safe_d_m: d,
                result,
            })
        })
        .collect()
}

fn print_run(run: &RunOutput) {
    let r = &run.result;
    let gap = r.gap_s.map_or("-".to_string(), |g| format!("{g:.1} s"));
    let min_sep = r
        .min_pairwise_separation_m
        .map_or("-".to_string(), |m| format!("{m:.1} m"));
    println!(
        "{:<6} safe_d {:>7.1} m  gap {:>7}  entered {:>3}  arrived {:>3}  collisions {:>2}  min sep {}{}",
        r.mode.as_str(),
        run.safe_d_m,
        gap,
        r.entered,
        r.safe_arrivals,
        r.collisions(),
        min_sep,
        if r.incomplete { "  (horizon reached)" } else { "" }
    );
}

fn trajectory_path(out: &Path, run: &RunOutput) -> PathBuf {
    out.join(format!(
        "traj_{}_{}.csv",
        run.result.mode.as_str(),
        run.safe_d_m
    ))
}

fn write_trajectories(out: &Path, run: &RunOutput) -> Result<(), CliError> {
    if let Some(rows) = &run.result.trajectories {
        let path = trajectory_path(out, run);
        write_trajectory_csv(rows, create(&path)?).map_err(|e| file_error(&path, e))?;
    }
    Ok(())
}

fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<(), CliError> {
    MetricsRow::write_csv(rows, create(path)?).map_err(|e| file_error(path, e))
}

fn apply_count_by(s: &mut ScenarioFile, count_by: Option<f64>) {
    if count_by.is_some() {
        s.sim.count_by_s = count_by;
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut s = load(&args.common)?;
    apply_count_by(&mut s, args.count_by);
    let safe_ds = safe_d_list(&s)?;
    let runs = simulate_runs(&s, &safe_ds, &args.mode.modes(), true)?;
    let out = output_dir(&s)?;
    for run in &runs {
        write_trajectories(&out, run)?;
        print_run(run);
    }
    let rows: Vec<MetricsRow> = runs.iter().map(RunOutput::metrics).collect();
    write_metrics(&out.join("metrics.csv"), &rows)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut s = load(&args.common)?;
    apply_count_by(&mut s, args.count_by);
    let safe_ds = safe_d_list(&s)?;
    let out = output_dir(&s)?;
    let runs_dir = out.join("runs");
    std::fs::create_dir_all(&runs_dir).map_err(|e| file_error(&runs_dir, e))?;

    let gaps = gap_rows(&s, &safe_ds)?;
    let runs = simulate_runs(&s, &safe_ds, &[Mode::Eta, Mode::NoEta], args.trajectories)?;
    // Per-run files from the workers; the merged tables from here only.
    runs.par_iter().try_for_each(|run| {
        let name = format!("{}_{}.csv", run.result.mode.as_str(), run.safe_d_m);
        write_metrics(&runs_dir.join(name), &[run.metrics()])?;
        write_trajectories(&runs_dir, run)
    })?;

    let path = out.join("gap_table.csv");
    write_gap_table(&gaps, create(&path)?).map_err(|e| file_error(&path, e))?;
    let rows: Vec<MetricsRow> = runs.iter().map(RunOutput::metrics).collect();
    write_metrics(&out.join("metrics.csv"), &rows)?;
    for run in &runs {
        print_run(run);
    }
    Ok(())
}

fn cmd_validate(args: &CommonArgs) -> Result<(), CliError> {
    let s = load(args)?;
    let spec = s.corridor()?;
    s.solver()?;
    for &d in &s.solver.safe_d_list {
        s.sim_config(Mode::Eta, d)?;
        spec.with_safe_d(d)?;
    }
    println!(
        "corridor ok: {} sections, {:.1} m, trivial bound {:.1} s",
        spec.num_sections(),
        spec.total_length_m(),
        spec.total_travel_time_s()
    );
    for (j, sec) in spec.sections().iter().enumerate() {
        println!(
            "  section {j}: {:.1} m in [{:.1}, {:.1}] m/s, travel time {:.1} s",
            sec.length_m,
            sec.v_min,
            sec.v_max,
            spec.travel_time(j)
        );
    }
    Ok(())
}
