//! Temporal convergence sweeps against a closed-form or fine-step reference.

use rayon::prelude::*;

use super::exact::{mms_source_bcp, mms_source_ns, ExactSolutionBcp, ExactSolutionNs};
use crate::error::SweepError;
use crate::model::{BcpState, ModelParams, NsState};
use crate::scheme_bcp::{integrate, BcpScheme, SchemeOptions};
use crate::scheme_ns::{NsForcing, NsStepper};
use crate::spectral::{Grid2D, ScalarField};

/// Relative slack when checking that a time is a whole number of steps.
const STEP_FIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScheme {
    Cn,
    Bdf2,
    Ns,
}

impl SweepScheme {
    pub fn name(self) -> &'static str {
        match self {
            SweepScheme::Cn => "cn",
            SweepScheme::Bdf2 => "bdf2",
            SweepScheme::Ns => "ns",
        }
    }

    fn bcp(self) -> Option<BcpScheme> {
        match self {
            SweepScheme::Cn => Some(BcpScheme::CrankNicolson),
            SweepScheme::Bdf2 => Some(BcpScheme::Bdf2),
            SweepScheme::Ns => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Forced run compared with the manufactured solution.
    Exact,
    /// Unforced run from the exact profile at t = 0, compared with a
    /// Crank–Nicolson trajectory at step `dt`.
    Benchmark { dt: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scheme: SweepScheme,
    /// Strictly decreasing.
    pub dts: Vec<f64>,
    pub t_end: f64,
    pub n: usize,
    pub params: ModelParams,
    pub reference: Reference,
    pub opts: SchemeOptions,
}

fn halvings(start: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start / f64::powi(2.0, i as i32)).collect()
}

fn steps_to(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

fn fits(t: f64, dt: f64) -> bool {
    let n = (t / dt).round();
    n >= 1.0 && (n * dt - t).abs() <= STEP_FIT_TOL * t
}

impl SweepSpec {
    /// MMS sweep of a phase-field scheme on 128², t = 0.1.
    pub fn table1(scheme: SweepScheme) -> Self {
        SweepSpec {
            scheme,
            dts: halvings(2e-2, 8),
            t_end: 0.1,
            n: 128,
            params: ModelParams::default(),
            reference: Reference::Exact,
            opts: SchemeOptions::default().with_tol(1e-12),
        }
    }

    /// MMS sweep of the coupled scheme, δt = 8e-3 … 5e-4, t = 0.1.
    pub fn table2() -> Self {
        SweepSpec {
            scheme: SweepScheme::Ns,
            dts: halvings(8e-3, 5),
            t_end: 0.1,
            n: 128,
            params: ModelParams::default(),
            reference: Reference::Exact,
            opts: SchemeOptions::default().with_tol(1e-12),
        }
    }

    /// Self-convergence at t = 1 against a δt = 1e-5 benchmark.
    pub fn table3(scheme: SweepScheme) -> Self {
        SweepSpec {
            scheme,
            dts: halvings(2e-2, 8),
            t_end: 1.0,
            n: 128,
            params: ModelParams::default(),
            reference: Reference::Benchmark { dt: 1e-5 },
            opts: SchemeOptions::default().with_tol(1e-12),
        }
    }

    pub fn with_dts(mut self, dts: Vec<f64>) -> Self {
        self.dts = dts;
        self
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// Closed-form references accept any δt and compare at n·δt with
    /// n = round(t_end/δt); a benchmark needs every δt to fit exactly.
    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::Invalid(m));
        if self.dts.is_empty() {
            return bad("empty time-step list".into());
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("final time must be positive, got {}", self.t_end));
        }
        if let Some(dt) = self.dts.iter().find(|d| !(d.is_finite() && **d > 0.0 && **d <= self.t_end)) {
            return bad(format!("time step {dt} outside (0, {}]", self.t_end));
        }
        if self.dts.windows(2).any(|w| w[1] >= w[0]) {
            return bad("time steps must be strictly decreasing".into());
        }
        self.params.validate().map_err(|e| SweepError::Invalid(e.to_string()))?;
        Grid2D::square(self.n).map_err(|e| SweepError::Invalid(e.to_string()))?;
        if let Reference::Benchmark { dt } = self.reference {
            if self.scheme == SweepScheme::Ns {
                return bad("benchmark references are only defined for the phase-field schemes".into());
            }
            if let Some(d) = std::iter::once(&dt).chain(&self.dts).find(|d| !fits(self.t_end, **d)) {
                return bad(format!("final time {} is not a multiple of time step {d}", self.t_end));
            }
        }
        Ok(())
    }

    pub fn components(&self) -> &'static [&'static str] {
        match self.scheme {
            SweepScheme::Ns => &["u", "v", "p", "phi"],
            _ => &["phi"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// Time the errors were measured at.
    pub time: f64,
    pub errors: Vec<f64>,
    /// Observed order against the previous row; `None` in the first row.
    pub orders: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub components: Vec<&'static str>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    fn from_errors(components: &[&'static str], raw: Vec<(f64, f64, Vec<f64>)>) -> Self {
        let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(raw.len());
        for (dt, time, errors) in raw {
            let orders = match rows.last() {
                None => vec![None; errors.len()],
                Some(prev) => prev
                    .errors
                    .iter()
                    .zip(&errors)
                    .map(|(e0, e1)| Some((e0 / e1).ln() / (prev.dt / dt).ln()))
                    .collect(),
            };
            rows.push(ConvergenceRow {
                dt,
                time,
                errors,
                orders,
            });
        }
        ConvergenceTable {
            components: components.to_vec(),
            rows,
        }
    }

    /// Errors of one component down the rows.
    pub fn column(&self, component: &str) -> Option<Vec<f64>> {
        let c = self.components.iter().position(|n| *n == component)?;
        Some(self.rows.iter().map(|r| r.errors[c]).collect())
    }

    /// Orders of one component, skipping the first row.
    pub fn orders(&self, component: &str) -> Option<Vec<f64>> {
        let c = self.components.iter().position(|n| *n == component)?;
        Some(self.rows.iter().filter_map(|r| r.orders[c]).collect())
    }

    /// `dt,error,order` for one component, otherwise
    /// `dt,<c>,<c>_order,...`; the first row has empty order cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dt");
        if let [_] = self.components[..] {
            out.push_str(",error,order");
        } else {
            for c in &self.components {
                out.push_str(&format!(",{c},{c}_order"));
            }
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{:e}", r.dt));
            for (e, o) in r.errors.iter().zip(&r.orders) {
                match o {
                    Some(o) => out.push_str(&format!(",{e:e},{o:.4}")),
                    None => out.push_str(&format!(",{e:e},")),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Unforced Crank–Nicolson trajectory from the exact profile, `n_steps` of `dt`.
pub fn benchmark_solution(
    grid: &Grid2D,
    params: &ModelParams,
    dt: f64,
    n_steps: usize,
    opts: &SchemeOptions,
) -> Result<ScalarField, SweepError> {
    run_bcp(BcpScheme::CrankNicolson, grid, params, dt, n_steps, false, opts)
}

fn run_bcp(
    scheme: BcpScheme,
    grid: &Grid2D,
    params: &ModelParams,
    dt: f64,
    n_steps: usize,
    forced: bool,
    opts: &SchemeOptions,
) -> Result<ScalarField, SweepError> {
    let src = |t: f64| mms_source_bcp(t, params, grid);
    let forcing: Option<&dyn Fn(f64) -> ScalarField> = if forced { Some(&src) } else { None };
    let mut state = BcpState::initial(ExactSolutionBcp.initial(grid), 0.0);
    integrate(scheme, &mut state, params, dt, n_steps, forcing, opts, |_, _| {})
        .map_err(|source| SweepError::Step { dt, source })?;
    Ok(state.phi_n)
}

fn run_ns(grid: &Grid2D, params: &ModelParams, dt: f64, n_steps: usize, opts: &SchemeOptions) -> Result<NsState, SweepError> {
    let phase = |t: f64| mms_source_ns(t, params, grid).0;
    let momentum = |t: f64| mms_source_ns(t, params, grid).1;
    let forcing = NsForcing {
        phase: &phase,
        momentum: &momentum,
    };
    let mut state = NsState::at_rest(ExactSolutionBcp.initial(grid), 0.0);
    NsStepper::new(*params, dt, *opts)
        .integrate(&mut state, n_steps, Some(&forcing), |_, _| {})
        .map_err(|source| SweepError::Step { dt, source })?;
    Ok(state)
}

fn row_errors(spec: &SweepSpec, grid: &Grid2D, dt: f64, benchmark: Option<&ScalarField>) -> Result<(f64, Vec<f64>), SweepError> {
    let n_steps = steps_to(spec.t_end, dt);
    let time = n_steps as f64 * dt;
    match (spec.scheme.bcp(), benchmark) {
        (Some(scheme), Some(reference)) => {
            let phi = run_bcp(scheme, grid, &spec.params, dt, n_steps, false, &spec.opts)?;
            Ok((time, vec![(&phi - reference).l2_norm()]))
        }
        (Some(scheme), None) => {
            let phi = run_bcp(scheme, grid, &spec.params, dt, n_steps, true, &spec.opts)?;
            Ok((time, vec![(&phi - &ExactSolutionBcp.phi(grid, time)).l2_norm()]))
        }
        (None, _) => {
            let ex = ExactSolutionNs::default();
            let s = run_ns(grid, &spec.params, dt, n_steps, &spec.opts)?;
            let du = &s.velocity_n - &ex.velocity(grid, time);
            Ok((
                time,
                vec![
                    du.x.l2_norm(),
                    du.y.l2_norm(),
                    (&s.pressure_n - &ex.pressure(grid, time)).l2_norm(),
                    (&s.phase.phi_n - &ex.phi(grid, time)).l2_norm(),
                ],
            ))
        }
    }
}

/// Run every row of `spec` (rows in parallel) and tabulate errors and
/// observed orders.
pub fn run_convergence(spec: &SweepSpec) -> Result<ConvergenceTable, SweepError> {
    spec.validate()?;
    let grid = Grid2D::square(spec.n).map_err(|e| SweepError::Invalid(e.to_string()))?;
    let benchmark = match spec.reference {
        Reference::Benchmark { dt } => {
            log::info!("computing benchmark: dt = {dt:e}, {} steps", steps_to(spec.t_end, dt));
            Some(benchmark_solution(&grid, &spec.params, dt, steps_to(spec.t_end, dt), &spec.opts)?)
        }
        Reference::Exact => None,
    };
    run_convergence_with(spec, &grid, benchmark.as_ref())
}

/// As [`run_convergence`] with a precomputed benchmark field, so several
/// sweeps can share one expensive reference run.
pub fn run_convergence_with(
    spec: &SweepSpec,
    grid: &Grid2D,
    benchmark: Option<&ScalarField>,
) -> Result<ConvergenceTable, SweepError> {
    spec.validate()?;
    if matches!(spec.reference, Reference::Benchmark { .. }) != benchmark.is_some() {
        return Err(SweepError::Invalid("benchmark field must be given exactly when the reference is a benchmark".into()));
    }
    let raw = spec
        .dts
        .par_iter()
        .map(|&dt| {
            let (time, errors) = row_errors(spec, grid, dt, benchmark)?;
            log::info!("{} dt = {dt:e}: errors {errors:?}", spec.scheme.name());
            Ok((dt, time, errors))
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    Ok(ConvergenceTable::from_errors(spec.components(), raw))
}
