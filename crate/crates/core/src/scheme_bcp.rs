//! Linear, energy-stable IEQ time steppers for the copolymer model.
//!
//! Each stepper eliminates the chemical potential and the auxiliary field,
//! leaving one symmetric positive definite system for the new phase field
//! (see [`ReducedPhaseOperator`]). The mean of that system decouples and is
//! fixed by mass balance, so the solution mean is exact rather than
//! approximate.

use crate::error::StepError;
use crate::model::{energy_quadratized, BcpState, ModelParams};
use crate::solvers::{solve_from_guess, KrylovMethod, LinearOperator, PhaseCoefficients, PhasePreconditioner, SolveReport};
use crate::spectral::{Grid2D, Products, ScalarField};

/// A time-dependent source term added to the phase equation.
pub type Forcing<'a> = Option<&'a dyn Fn(f64) -> ScalarField>;

/// Krylov settings shared by all steppers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub products: Products,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            products: Products::Nodal,
        }
    }
}

impl SchemeOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Result of one step. The new level is returned by value; commit it with
/// [`StepOutput::commit`] (or [`BcpState::advance`]) after any auditing.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub phi_next: ScalarField,
    pub u_aux_next: ScalarField,
    /// w^{n+½} for Crank–Nicolson, w^{n+1} for BDF2 and backward Euler.
    pub chemical_potential: ScalarField,
    pub solve_report: SolveReport,
    pub energy_before: f64,
    pub energy_after: f64,
    /// −δt·M‖∇w‖².
    pub dissipation_rhs: f64,
    pub dt: f64,
}

impl StepOutput {
    pub fn commit(self, state: &mut BcpState) {
        state.advance(self.phi_next, self.u_aux_next, self.dt);
    }
}

/// Which stepper drives a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcpScheme {
    /// Crank–Nicolson IEQ; picks up the electric term when β > 0.
    CrankNicolson,
    Bdf2,
    FirstOrder,
}

impl BcpScheme {
    pub fn name(self) -> &'static str {
        match self {
            BcpScheme::CrankNicolson => "cn",
            BcpScheme::Bdf2 => "bdf2",
            BcpScheme::FirstOrder => "euler",
        }
    }
}

/// Reduced operator
/// `a(−Δ)⁻¹x − eΔx + s·P(σ(x − x̄)) + b·(kx²/|k|²)x + γx̄`
/// with σ = (φ*)² and P the mean-removing projection.
pub struct ReducedPhaseOperator {
    grid: Grid2D,
    coeffs: PhaseCoefficients,
    diag: Vec<f64>,
    sigma: ScalarField,
    sigma_bar: f64,
    products: Products,
}

impl ReducedPhaseOperator {
    pub fn new(coeffs: PhaseCoefficients, phi_star: &ScalarField, products: Products) -> Self {
        let grid = phi_star.grid().clone();
        let c = phi_star.mean();
        let sigma_bar = c * c;
        let gamma = coeffs.zero_mode(sigma_bar);
        let diag = grid.symbol_table(|kx, ky| {
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                gamma
            } else {
                (coeffs.inverse_laplacian + coeffs.electric * kx * kx) / k2 + coeffs.stiffness * k2
            }
        });
        Self {
            sigma: products.mul(phi_star, phi_star),
            grid,
            coeffs,
            diag,
            sigma_bar,
            products,
        }
    }

    /// Weight of the decoupled mean equation.
    pub fn zero_mode(&self) -> f64 {
        self.coeffs.zero_mode(self.sigma_bar)
    }

    pub fn sigma(&self) -> &ScalarField {
        &self.sigma
    }

    /// The constant-coefficient inverse obtained by freezing σ at its
    /// mean-square surrogate.
    pub fn preconditioner(&self) -> PhasePreconditioner {
        PhasePreconditioner::new(&self.grid, self.coeffs, self.sigma_bar)
    }
}

impl LinearOperator for ReducedPhaseOperator {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut spec = self.grid.forward(x);
        self.grid.scale_by_table(&mut spec, &self.diag);
        y.copy_from_slice(&self.grid.inverse(spec));
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let shifted = ScalarField::from_vec(&self.grid, x.iter().map(|v| v - m).collect());
        let t = self.products.mul(&self.sigma, &shifted);
        let tm = t.mean();
        let w = self.coeffs.potential;
        for (yi, ti) in y.iter_mut().zip(t.values()) {
            *yi += w * (ti - tm);
        }
    }
}

/// Everything a reduced solve needs besides the operator.
struct PhaseSystem<'a> {
    /// Spectral part of the right side, applied to `history`.
    history: &'a ScalarField,
    history_symbol: &'a dyn Fn(f64, f64) -> f64,
    /// Weight on `(−Δ)⁻¹s`.
    source_weight: f64,
    source: Option<&'a ScalarField>,
    /// Nodal part; its mean is discarded.
    nodal: ScalarField,
    /// Prescribed mean of the solution.
    mean: f64,
}

fn solve_phase(
    op: &ReducedPhaseOperator,
    sys: PhaseSystem<'_>,
    guess: &ScalarField,
    opts: &SchemeOptions,
) -> Result<(ScalarField, SolveReport), StepError> {
    let g = &op.grid;
    let sym = sys.history_symbol;
    let mut rhs = g.apply_symbol(sys.history.values(), |kx, ky| {
        if kx == 0.0 && ky == 0.0 {
            0.0
        } else {
            sym(kx, ky)
        }
    });
    if let Some(s) = sys.source {
        let w = sys.source_weight;
        let ls = g.apply_symbol(s.values(), |kx, ky| {
            let k2 = kx * kx + ky * ky;
            if k2 > 0.0 {
                w / k2
            } else {
                0.0
            }
        });
        for (r, v) in rhs.iter_mut().zip(ls) {
            *r += v;
        }
    }
    let nodal_mean = sys.nodal.mean();
    let shift = op.zero_mode() * sys.mean - nodal_mean;
    for (r, v) in rhs.iter_mut().zip(sys.nodal.values()) {
        *r += v + shift;
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(StepError::NonFinite("right-hand side"));
    }

    let precond = op.preconditioner();
    let (x, report) = solve_from_guess(KrylovMethod::Pcg, op, &rhs, &precond, opts.tol, opts.max_iter, guess.values())?;
    if !report.converged {
        return Err(StepError::NotConverged(report));
    }
    let mut x = ScalarField::from_vec(g, x);
    let drift = sys.mean - x.mean();
    for v in x.values_mut() {
        *v += drift;
    }
    if !x.is_finite() {
        return Err(StepError::NonFinite("phase field"));
    }
    Ok((x, report))
}

fn check_inputs(params: &ModelParams, dt: f64) -> Result<(), StepError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(StepError::BadTimeStep(dt));
    }
    params.validate()?;
    Ok(())
}

/// Crank–Nicolson IEQ step (no electric term regardless of `params.beta`).
pub fn step_cn(
    state: &BcpState,
    params: &ModelParams,
    dt: f64,
    forcing: Forcing<'_>,
    opts: &SchemeOptions,
) -> Result<StepOutput, StepError> {
    cn_impl(state, params, dt, forcing, opts, 0.0)
}

/// Crank–Nicolson IEQ step with the implicit β∂xx term of the field-driven
/// model. With β = 0 this is exactly [`step_cn`].
pub fn step_cn_electric(
    state: &BcpState,
    params: &ModelParams,
    dt: f64,
    forcing: Forcing<'_>,
    opts: &SchemeOptions,
) -> Result<StepOutput, StepError> {
    cn_impl(state, params, dt, forcing, opts, params.beta)
}

fn cn_impl(
    state: &BcpState,
    params: &ModelParams,
    dt: f64,
    forcing: Forcing<'_>,
    opts: &SchemeOptions,
    beta: f64,
) -> Result<StepOutput, StepError> {
    check_inputs(params, dt)?;
    if !state.has_history() {
        return Err(StepError::MissingHistory);
    }
    let mob = params.mobility;
    let eps2 = params.epsilon * params.epsilon;
    let alpha = params.alpha;
    let pr = opts.products;
    let phi_n = &state.phi_n;
    let u_n = &state.u_aux_n;

    let phi_star = phi_n.zip_map(&state.phi_nm1, |a, b| 1.5 * a - 0.5 * b);
    let coeffs = PhaseCoefficients {
        electric: beta / mob,
        ..PhaseCoefficients::crank_nicolson(params, dt)
    };
    let op = ReducedPhaseOperator::new(coeffs, &phi_star, pr);

    let source = forcing.map(|f| f(state.time + 0.5 * dt));
    let mean = phi_n.mean() + dt * source.as_ref().map_or(0.0, |s| s.mean());

    let sym = move |kx: f64, ky: f64| {
        let k2 = kx * kx + ky * ky;
        (2.0 / (mob * dt) - alpha - beta / mob * kx * kx) / k2 - eps2 * k2
    };
    let star_u = pr.mul(&phi_star, u_n);
    let sigma_phi = pr.mul(op.sigma(), &phi_n.map(|p| p - mean));
    let nodal = sigma_phi.zip_map(&star_u, |a, b| 2.0 * a - 2.0 * b);

    let guess = phi_n.zip_map(&state.phi_nm1, |a, b| 2.0 * a - b);
    let (x, report) = solve_phase(
        &op,
        PhaseSystem {
            history: phi_n,
            history_symbol: &sym,
            source_weight: 2.0 / mob,
            source: source.as_ref(),
            nodal,
            mean,
        },
        &guess,
        opts,
    )?;

    let dphi = &x - phi_n;
    let u_next = &pr.mul(&phi_star, &dphi) * 2.0;
    let u_next = &u_next + u_n;
    let phi_half = &(&x + phi_n) * 0.5;
    let u_half = &(&u_next + u_n) * 0.5;
    let lin = phi_half.grid().apply_symbol(phi_half.values(), |kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 > 0.0 {
            eps2 * k2 + alpha / k2
        } else {
            0.0
        }
    });
    let mut w = pr.mul(&phi_star, &u_half);
    for (wi, l) in w.values_mut().iter_mut().zip(lin) {
        *wi += l;
    }
    finish(state, params, dt, x, u_next, w, report)
}

fn finish(
    state: &BcpState,
    params: &ModelParams,
    dt: f64,
    phi_next: ScalarField,
    u_aux_next: ScalarField,
    w: ScalarField,
    report: SolveReport,
) -> Result<StepOutput, StepError> {
    if !u_aux_next.is_finite() || !w.is_finite() {
        return Err(StepError::NonFinite("auxiliary field"));
    }
    let energy_before = energy_quadratized(&state.phi_n, &state.u_aux_n, params);
    let energy_after = energy_quadratized(&phi_next, &u_aux_next, params);
    let dissipation_rhs = -dt * params.mobility * w.spectral_sums().h1_sq;
    Ok(StepOutput {
        phi_next,
        u_aux_next,
        chemical_potential: w,
        solve_report: report,
        energy_before,
        energy_after,
        dissipation_rhs,
        dt,
    })
}

/// w = −ε²Δx + αψ(x) + φ̂·U, the fully implicit chemical potential.
fn implicit_potential(x: &ScalarField, phi_hat: &ScalarField, u: &ScalarField, params: &ModelParams, pr: Products) -> ScalarField {
    let eps2 = params.epsilon * params.epsilon;
    let alpha = params.alpha;
    let lin = x.grid().apply_symbol(x.values(), |kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 > 0.0 {
            eps2 * k2 + alpha / k2
        } else {
            0.0
        }
    });
    let mut w = pr.mul(phi_hat, u);
    for (wi, l) in w.values_mut().iter_mut().zip(lin) {
        *wi += l;
    }
    w
}

/// BDF2 IEQ step with extrapolation φ† = 2φⁿ − φⁿ⁻¹.
pub fn step_bdf2(
    state: &BcpState,
    params: &ModelParams,
    dt: f64,
    forcing: Forcing<'_>,
    opts: &SchemeOptions,
) -> Result<StepOutput, StepError> {
    check_inputs(params, dt)?;
    if !state.has_history() {
        return Err(StepError::MissingHistory);
    }
    let mob = params.mobility;
    let pr = opts.products;

    let phi_dag = state.phi_n.zip_map(&state.phi_nm1, |a, b| 2.0 * a - b);
    let hist = state.phi_n.zip_map(&state.phi_nm1, |a, b| 4.0 * a - b);
    let u_hist = &state.u_aux_n.zip_map(&state.u_aux_nm1, |a, b| 4.0 * a - b) * (1.0 / 3.0);
    let op = ReducedPhaseOperator::new(PhaseCoefficients::bdf2(params, dt), &phi_dag, pr);

    let source = forcing.map(|f| f(state.time + dt));
    let mean = (hist.mean() + 2.0 * dt * source.as_ref().map_or(0.0, |s| s.mean())) / 3.0;

    let sym = move |kx: f64, ky: f64| 1.0 / (2.0 * mob * dt * (kx * kx + ky * ky));
    let dag_u = pr.mul(&phi_dag, &u_hist);
    let sigma_part = pr.mul(op.sigma(), &hist.map(|h| 2.0 / 3.0 * h - 2.0 * mean));
    let nodal = &sigma_part - &dag_u;

    let (x, report) = solve_phase(
        &op,
        PhaseSystem {
            history: &hist,
            history_symbol: &sym,
            source_weight: 1.0 / mob,
            source: source.as_ref(),
            nodal,
            mean,
        },
        &phi_dag,
        opts,
    )?;

    let incr = x.zip_map(&hist, |a, h| 3.0 * a - h);
    let u_next = &(&pr.mul(&phi_dag, &incr) * (2.0 / 3.0)) + &u_hist;
    let w = implicit_potential(&x, &phi_dag, &u_next, params, pr);
    finish(state, params, dt, x, u_next, w, report)
}

/// First-order IEQ step (backward Euler with φⁿ as the explicit factor).
/// Used to create the second history level.
pub fn step_first_order(
    state: &BcpState,
    params: &ModelParams,
    dt: f64,
    forcing: Forcing<'_>,
    opts: &SchemeOptions,
) -> Result<StepOutput, StepError> {
    check_inputs(params, dt)?;
    let mob = params.mobility;
    let pr = opts.products;
    let phi_n = &state.phi_n;
    let op = ReducedPhaseOperator::new(PhaseCoefficients::backward_euler(params, dt), phi_n, pr);

    let source = forcing.map(|f| f(state.time + dt));
    let mean = phi_n.mean() + dt * source.as_ref().map_or(0.0, |s| s.mean());

    let sym = move |kx: f64, ky: f64| 1.0 / (mob * dt * (kx * kx + ky * ky));
    let sigma_part = pr.mul(op.sigma(), &phi_n.map(|p| 2.0 * (p - mean)));
    let nodal = &sigma_part - &pr.mul(phi_n, &state.u_aux_n);

    let (x, report) = solve_phase(
        &op,
        PhaseSystem {
            history: phi_n,
            history_symbol: &sym,
            source_weight: 1.0 / mob,
            source: source.as_ref(),
            nodal,
            mean,
        },
        phi_n,
        opts,
    )?;

    let dphi = &x - phi_n;
    let u_next = &(&pr.mul(phi_n, &dphi) * 2.0) + &state.u_aux_n;
    let w = implicit_potential(&x, phi_n, &u_next, params, pr);
    finish(state, params, dt, x, u_next, w, report)
}

/// One step of `scheme`, taking the first-order bootstrap step when the
/// state has no history yet.
pub fn step(
    scheme: BcpScheme,
    state: &BcpState,
    params: &ModelParams,
    dt: f64,
    forcing: Forcing<'_>,
    opts: &SchemeOptions,
) -> Result<StepOutput, StepError> {
    if scheme == BcpScheme::FirstOrder || !state.has_history() {
        return step_first_order(state, params, dt, forcing, opts);
    }
    match scheme {
        BcpScheme::CrankNicolson if params.beta > 0.0 => step_cn_electric(state, params, dt, forcing, opts),
        BcpScheme::CrankNicolson => step_cn(state, params, dt, forcing, opts),
        BcpScheme::Bdf2 => step_bdf2(state, params, dt, forcing, opts),
        BcpScheme::FirstOrder => unreachable!(),
    }
}

/// Advance `state` by `n_steps` steps, calling `observe` with the pre-step
/// state and each step's output before it is committed.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    scheme: BcpScheme,
    state: &mut BcpState,
    params: &ModelParams,
    dt: f64,
    n_steps: usize,
    forcing: Forcing<'_>,
    opts: &SchemeOptions,
    mut observe: impl FnMut(&BcpState, &StepOutput),
) -> Result<(), StepError> {
    for _ in 0..n_steps {
        let out = step(scheme, state, params, dt, forcing, opts)?;
        observe(state, &out);
        out.commit(state);
    }
    Ok(())
}
