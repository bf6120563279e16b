//! Simulation, sweep and conversion drivers.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{ConfigError, RunConfig, SweepConfig};
use super::energy_log::EnergyLog;
use super::snapshot::{read_snapshot, snapshot_to_csv, write_snapshot};
use super::{random_initial_field, IoError};
use crate::diagnostics::{audit_step_bcp, audit_step_ns, AuditMode, LedgerSummary, StepDiagnostics};
use crate::error::{StepError, SweepError};
use crate::harness::presets::SchemeKind;
use crate::harness::sweep::{run_convergence, ConvergenceTable};
use crate::model::{BcpState, NsState};
use crate::scheme_bcp::{step, BcpScheme};
use crate::scheme_ns::NsStepper;
use crate::spectral::{Grid2D, ScalarField};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step {step} (t = {time}) failed: {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: StepError,
    },
    #[error(transparent)]
    Sweep(SweepError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl RunError {
    /// 2 for configuration problems, 3 for solver failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Sweep(SweepError::Invalid(_)) => 2,
            RunError::Step { .. } | RunError::Sweep(SweepError::Step { .. }) => 3,
            RunError::Io(_) => 4,
        }
    }
}

/// Result of one trajectory.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    pub ledger: LedgerSummary,
    pub final_phi: ScalarField,
    pub log: EnergyLog,
    /// Files written, in order.
    pub files: Vec<PathBuf>,
}

fn step_count(t_end: f64, dt: f64) -> usize {
    ((t_end / dt).round() as usize).max(1)
}

fn audit_mode(cfg: &RunConfig) -> AuditMode {
    if cfg.scheme == SchemeKind::CnElectric && cfg.params.beta > 0.0 {
        AuditMode::Electric
    } else {
        AuditMode::Dissipative
    }
}

struct Writer<'a> {
    dir: Option<&'a Path>,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn snapshot(&mut self, name: &str, k: usize, time: f64, field: &ScalarField) -> Result<(), IoError> {
        if let Some(dir) = self.dir {
            let path = dir.join(format!("{name}_{k:08}.bcps"));
            write_snapshot(&path, name, time, field)?;
            self.files.push(path);
        }
        Ok(())
    }
}

/// Run one trajectory of `cfg` with step `dt`, writing snapshots and the
/// energy log into `dir` when given.
pub fn run_single(cfg: &RunConfig, dt: f64, dir: Option<&Path>) -> Result<RunOutcome, RunError> {
    let grid = Grid2D::square(cfg.n).map_err(|e| ConfigError {
        line: None,
        key: "n".into(),
        message: e.to_string(),
    })?;
    if let Some(d) = dir {
        fs::create_dir_all(d).map_err(|e| IoError::at(d, e))?;
    }
    let n_steps = step_count(cfg.t_end, dt);
    let mut snaps = BTreeSet::new();
    for t in &cfg.snapshot_times {
        snaps.insert(((t / dt).round() as usize).min(n_steps));
    }
    let phi0 = random_initial_field(&grid, cfg.phi_mean, cfg.amplitude, cfg.seed);
    let mode = audit_mode(cfg);
    let mut ledger = crate::diagnostics::run_ledger(mode, []);
    let mut out = Writer { dir, files: vec![] };
    let mut last: Option<StepDiagnostics> = None;
    let fail = |k: usize, source| RunError::Step {
        step: k,
        time: k as f64 * dt,
        source,
    };

    let (log, final_phi) = if cfg.scheme == SchemeKind::Ns {
        let mut state = NsState::at_rest(phi0, 0.0);
        let mut log = EnergyLog::new(true, 0.0, state.energy(&cfg.params, dt), state.phase.phi_n.mean());
        let mut stepper = NsStepper::new(cfg.params, dt, cfg.opts);
        let write = |w: &mut Writer, k: usize, s: &NsState| -> Result<(), IoError> {
            w.snapshot("phi", k, s.time(), &s.phase.phi_n)?;
            w.snapshot("u", k, s.time(), &s.velocity_n.x)?;
            w.snapshot("v", k, s.time(), &s.velocity_n.y)?;
            w.snapshot("p", k, s.time(), &s.pressure_n)
        };
        if snaps.contains(&0) {
            write(&mut out, 0, &state)?;
        }
        for k in 1..=n_steps {
            let o = stepper.step(&state, None).map_err(|e| fail(k, e))?;
            let d = audit_step_ns(&state, &o, mode);
            o.commit(&mut state);
            state.phase.time = k as f64 * dt;
            ledger = ledger.push(&d);
            if k % cfg.log_stride == 0 || k == n_steps {
                log.push(&d);
            }
            if snaps.contains(&k) {
                write(&mut out, k, &state)?;
            }
            last = Some(d);
        }
        (log, state.phase.phi_n)
    } else {
        let scheme = match cfg.scheme {
            SchemeKind::Bdf2 => BcpScheme::Bdf2,
            _ => BcpScheme::CrankNicolson,
        };
        let mut state = BcpState::initial(phi0, 0.0);
        let mut log = EnergyLog::new(false, 0.0, state.energy(&cfg.params), state.mass());
        if snaps.contains(&0) {
            out.snapshot("phi", 0, 0.0, &state.phi_n)?;
        }
        for k in 1..=n_steps {
            let used = if state.has_history() { scheme } else { BcpScheme::FirstOrder };
            let o = step(scheme, &state, &cfg.params, dt, None, &cfg.opts).map_err(|e| fail(k, e))?;
            let d = audit_step_bcp(&state, &o, used, &cfg.params, mode);
            o.commit(&mut state);
            state.time = k as f64 * dt;
            ledger = ledger.push(&d);
            if k % cfg.log_stride == 0 || k == n_steps {
                log.push(&d);
            }
            if snaps.contains(&k) {
                out.snapshot("phi", k, state.time, &state.phi_n)?;
            }
            last = Some(d);
        }
        (log, state.phi_n)
    };

    if let Some(d) = dir {
        let path = d.join("energy.csv");
        fs::write(&path, log.as_str()).map_err(|e| IoError::at(&path, e))?;
        out.files.push(path);
    }
    if let Some(d) = last {
        log::info!(
            "{} dt = {dt:e}: {n_steps} steps, E = {:e}, mass drift {:e}, max iterations {}",
            cfg.scheme,
            d.energy,
            ledger.total_mass_drift,
            ledger.max_iterations
        );
    }
    Ok(RunOutcome {
        dt,
        steps: n_steps,
        final_time: n_steps as f64 * dt,
        ledger,
        final_phi,
        log,
        files: out.files,
    })
}

/// Run every time step of `cfg`. With several steps each run gets its own
/// `dt_<dt>` subdirectory.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<RunOutcome>, RunError> {
    let multi = cfg.dts.len() > 1;
    cfg.dts
        .iter()
        .map(|&dt| {
            let dir = if multi {
                cfg.output_dir.join(format!("dt_{dt:e}"))
            } else {
                cfg.output_dir.clone()
            };
            run_single(cfg, dt, Some(&dir))
        })
        .collect()
}

/// Run a sweep and write its CSV table to the configured output, if any.
pub fn convergence(cfg: &SweepConfig) -> Result<ConvergenceTable, RunError> {
    let table = run_convergence(&cfg.spec).map_err(RunError::Sweep)?;
    if let Some(path) = &cfg.output {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| IoError::at(parent, e))?;
        }
        fs::write(path, table.to_csv()).map_err(|e| IoError::at(path, e))?;
    }
    Ok(table)
}

/// Convert a snapshot to a CSV grid; returns the CSV path.
pub fn convert(input: &Path, output: Option<&Path>) -> Result<PathBuf, RunError> {
    let snap = read_snapshot(input)?;
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| input.with_extension("csv"));
    fs::write(&path, snapshot_to_csv(&snap)).map_err(|e| IoError::at(&path, e))?;
    Ok(path)
}
