//! Time loop: output-instant dt clipping, frame output and the run report.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::case::Case;
use crate::diagnostics::Warning;
use crate::error::{Error, Result};
use crate::io::vtk::{frame_file_name, write_vtk, Format, ResultFrame};
use crate::numfmt::fmt_f64;
use crate::workspace::Workspace;

/// Name of the variable that, when defined, drives the output schedule.
pub const PRINT_INTERVAL: &str = "print_interval";

/// Steps landing within this fraction of dt from an output instant are
/// snapped onto it instead of leaving a sliver step behind.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    pub simulated_time: f64,
    pub print_interval: f64,
    /// Set when a workspace variable named `print_interval` exists; it wins
    /// over the literal and is re-read after each frame.
    pub print_interval_variable: bool,
}

impl ParameterSpace {
    pub fn new(simulated_time: f64, print_interval: f64, workspace: &Workspace) -> Result<Self> {
        if !(simulated_time > 0.0 && simulated_time.is_finite()) {
            return Err(Error::assembly(format!(
                "simulated_time must be positive, got {}",
                fmt_f64(simulated_time)
            )));
        }
        if !(print_interval > 0.0 && print_interval.is_finite()) {
            return Err(Error::assembly(format!(
                "print_interval must be positive, got {}",
                fmt_f64(print_interval)
            )));
        }
        let bound = match workspace.variable(PRINT_INTERVAL) {
            Some(v) if v.is_scalar() => true,
            Some(_) => return Err(Error::assembly("variable `print_interval` must be a scalar")),
            None => false,
        };
        Ok(ParameterSpace {
            simulated_time,
            print_interval,
            print_interval_variable: bound,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Frames and the report go here; `None` keeps everything in memory.
    pub outdir: Option<PathBuf>,
    pub format: Format,
    /// Keep every frame in the report (tests, small decks).
    pub keep_frames: bool,
}

#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub index: usize,
    pub time: f64,
    pub step: u64,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub case: String,
    pub steps: u64,
    pub cell_builds: usize,
    pub frames: Vec<FrameRecord>,
    pub kept: Vec<ResultFrame>,
    pub final_time: f64,
    pub threads: usize,
    pub seed: u64,
    pub warnings: Vec<(Warning, usize)>,
    pub wall_time: Duration,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "case: {}", self.case)?;
        writeln!(f, "steps: {}", self.steps)?;
        writeln!(f, "cell_builds: {}", self.cell_builds)?;
        writeln!(f, "frames: {}", self.frames.len())?;
        writeln!(f, "final_time: {}", fmt_f64(self.final_time))?;
        writeln!(f, "threads: {}", self.threads)?;
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(f, "wall_time_s: {:.3}", self.wall_time.as_secs_f64())?;
        let warnings: Vec<String> = self.warnings.iter().map(|(w, n)| format!("{}={n}", w.name())).collect();
        writeln!(f, "warnings: {}", warnings.join(" "))?;
        for r in &self.frames {
            writeln!(f, "frame {} t={} step={}", r.index, fmt_f64(r.time), r.step)?;
        }
        Ok(())
    }
}

enum Schedule {
    /// Instants `k * interval`.
    Literal { interval: f64, k: u64 },
    Variable { next: f64 },
}

impl Schedule {
    fn new(case: &Case) -> Result<Schedule> {
        let t = case.clock.time;
        let params = case.params();
        if params.print_interval_variable {
            Ok(Schedule::Variable {
                next: t + print_interval_variable(case)?,
            })
        } else {
            let interval = params.print_interval;
            let k = (t / interval + SNAP).floor() as u64 + 1;
            Ok(Schedule::Literal { interval, k })
        }
    }

    fn next(&self) -> f64 {
        match self {
            Schedule::Literal { interval, k } => *k as f64 * interval,
            Schedule::Variable { next } => *next,
        }
    }

    fn advance(&mut self, case: &Case, t_frame: f64) -> Result<()> {
        match self {
            Schedule::Literal { k, .. } => *k += 1,
            Schedule::Variable { next } => *next = t_frame + print_interval_variable(case)?,
        }
        Ok(())
    }
}

fn print_interval_variable(case: &Case) -> Result<f64> {
    let v = case.scalar_variable(PRINT_INTERVAL).unwrap_or(f64::NAN);
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::runtime(format!(
            "variable `print_interval` must stay positive, got {}",
            fmt_f64(v)
        )));
    }
    Ok(v)
}

fn emit(case: &mut Case, options: &RunOptions, report: &mut RunReport) -> Result<()> {
    let frame = case.snapshot();
    let mut path = None;
    if let Some(dir) = &options.outdir {
        let p = dir.join(frame_file_name(frame.frame));
        write_vtk(&frame, &p, options.format)?;
        path = Some(p);
    }
    report.frames.push(FrameRecord {
        index: frame.frame,
        time: frame.time,
        step: frame.step,
        path,
    });
    if options.keep_frames {
        report.kept.push(frame);
    }
    case.clock.next_frame += 1;
    Ok(())
}

pub fn run(case: &mut Case, options: &RunOptions) -> Result<RunReport> {
    run_with(case, options, |_| {})
}

/// Like [`run`], calling `on_step` after every completed step.
pub fn run_with(case: &mut Case, options: &RunOptions, mut on_step: impl FnMut(&Case)) -> Result<RunReport> {
    let started = Instant::now();
    if let Some(dir) = &options.outdir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut report = RunReport {
        case: case.name.clone(),
        steps: 0,
        cell_builds: 0,
        frames: Vec::new(),
        kept: Vec::new(),
        final_time: case.clock.time,
        threads: case.executor().threads(),
        seed: case.seed(),
        warnings: Vec::new(),
        wall_time: Duration::ZERO,
    };
    if !case.is_hot_started() {
        emit(case, options, &mut report)?;
    }

    let t_end = case.params().simulated_time;
    let end_tol = 1e-12 * t_end;
    let writes_dt = case.writes("dt");
    let mut schedule = Schedule::new(case)?;
    // compensated summation keeps long runs from leaving sliver steps
    let mut carry = 0.0;
    while case.clock.time < t_end - end_tol {
        let t = case.clock.time;
        let next = schedule.next();
        let target = if next >= t_end - end_tol { t_end } else { next };
        let dt = case.scalar_variable("dt").unwrap_or(f64::NAN);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::runtime(format!(
                "dt must be positive and finite, got {} at t={}",
                fmt_f64(dt),
                fmt_f64(t)
            )));
        }
        let remaining = target - t;
        let clipped = remaining <= dt || remaining - dt <= SNAP * dt;
        let step_dt = if clipped { remaining } else { dt };
        if step_dt != dt {
            case.set_scalar_variable("dt", step_dt);
        }
        case.solve_step()?;
        case.clock.step += 1;
        report.steps += 1;
        if clipped {
            case.clock.time = target;
            carry = 0.0;
        } else {
            let y = step_dt - carry;
            let sum = t + y;
            carry = (sum - t) - y;
            case.clock.time = sum;
        }
        if clipped && step_dt != dt && !writes_dt {
            case.set_scalar_variable("dt", dt);
        }
        on_step(case);
        if clipped {
            emit(case, options, &mut report)?;
            if target < t_end {
                schedule.advance(case, target)?;
            }
        }
    }

    report.final_time = case.clock.time;
    report.cell_builds = case.particles().build_count();
    report.warnings = case.diagnostics().snapshot();
    report.wall_time = started.elapsed();
    if let Some(dir) = &options.outdir {
        write_report(&report, &dir.join("run_report.txt"))?;
    }
    Ok(report)
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_string()).map_err(|e| Error::io(path, e))
}
