//! Second-order IEQ / pressure-correction scheme for the flow-coupled model.
//!
//! Step 1 solves the phase field and an intermediate velocity together as one
//! stacked system `[φ, ũ, ṽ]`. Step 2 projects the intermediate velocity onto
//! divergence-free fields and updates the pressure.

use log::info;

use crate::error::StepError;
use crate::model::{energy_coupled, ModelParams, NsState};
use crate::scheme_bcp::{ReducedPhaseOperator, SchemeOptions};
use crate::solvers::{
    ns_block_preconditioner, solve_from_guess, symmetry_defect, KrylovMethod, LinearOperator, PhaseCoefficients,
    SolveReport,
};
use crate::spectral::{Grid2D, Products, ScalarField, VectorField};

/// Relative symmetry defect above which the coupled solve uses GMRES.
pub const SYMMETRY_THRESHOLD: f64 = 1e-8;
const GMRES_RESTART: usize = 60;

/// Manufactured sources for the phase and momentum equations.
pub struct NsForcing<'a> {
    pub phase: &'a dyn Fn(f64) -> ScalarField,
    pub momentum: &'a dyn Fn(f64) -> VectorField,
}

/// B(u, v) = ½[(u·∇)v + ∇·(u ⊗ v)], whose inner product with v vanishes
/// identically on the grid. Equal to (u·∇)v + ½(∇·u)v for smooth fields.
pub fn skew_advection(u: &VectorField, v: &VectorField, products: Products) -> VectorField {
    let comp = |vi: &ScalarField| {
        let g = vi.gradient();
        let conv = &products.mul(&u.x, &g.x) + &products.mul(&u.y, &g.y);
        let flux = VectorField {
            x: products.mul(&u.x, vi),
            y: products.mul(&u.y, vi),
        };
        &(&conv + &flux.divergence()) * 0.5
    };
    VectorField {
        x: comp(&v.x),
        y: comp(&v.y),
    }
}

/// Pressure correction: Δq = (2/δt)∇·ũ with mean(q) = 0, then
/// u = ũ − (δt/2)∇q and p = pⁿ + q.
///
/// The Poisson solve uses the first-derivative wavenumbers, so the returned
/// velocity is discretely divergence-free to rounding.
pub fn step2_projection(u_tilde: &VectorField, pressure_n: &ScalarField, dt: f64) -> (VectorField, ScalarField) {
    let g = u_tilde.grid();
    let div = u_tilde.divergence();
    let (kxd, kyd) = derivative_tables(g);
    let mut spec = g.forward(div.values());
    let ny = g.ny();
    for (i, &kx) in kxd.iter().enumerate() {
        for (j, &ky) in kyd.iter().enumerate() {
            let k2 = kx * kx + ky * ky;
            let c = &mut spec[i * ny + j];
            *c = if k2 > 0.0 { *c * (-2.0 / (dt * k2)) } else { Default::default() };
        }
    }
    let q = ScalarField::from_vec(g, g.inverse(spec));
    let mut velocity = u_tilde.clone();
    velocity.axpy(-0.5 * dt, &q.gradient());
    let pressure = (pressure_n + &q).mean_free();
    (velocity, pressure)
}

fn derivative_tables(g: &Grid2D) -> (Vec<f64>, Vec<f64>) {
    let strip = |k: &[f64]| {
        let mut k = k.to_vec();
        let n = k.len();
        k[n / 2] = 0.0;
        k
    };
    (strip(g.kx()), strip(g.ky()))
}

/// Extrapolated coefficients of one coupled step.
struct Explicit {
    phi_star: ScalarField,
    u_star: VectorField,
}

impl Explicit {
    fn new(state: &NsState) -> Self {
        if state.has_history() {
            Self {
                phi_star: state.phase.phi_n.zip_map(&state.phase.phi_nm1, |a, b| 1.5 * a - 0.5 * b),
                u_star: VectorField {
                    x: state.velocity_n.x.zip_map(&state.velocity_nm1.x, |a, b| 1.5 * a - 0.5 * b),
                    y: state.velocity_n.y.zip_map(&state.velocity_nm1.y, |a, b| 1.5 * a - 0.5 * b),
                },
            }
        } else {
            Self {
                phi_star: state.phase.phi_n.clone(),
                u_star: state.velocity_n.clone(),
            }
        }
    }
}

/// Matrix-free operator of the stacked Step-1 system, with the momentum
/// equation scaled by 2:
///
/// φ-row: the reduced phase operator plus (1/M)(−Δ)⁻¹∇·(φ*ũ);
/// u-row: (2/δt)ũ + B(u*, ũ) − νΔũ + 2λφ*∇(−ε²/2Δφ + σφ + α/2 ψ(φ)).
pub struct CoupledOperator {
    grid: Grid2D,
    phase: ReducedPhaseOperator,
    phi_star: ScalarField,
    u_star: VectorField,
    potential_table: Vec<f64>,
    mobility: f64,
    lambda: f64,
    nu: f64,
    dt: f64,
    products: Products,
}

impl CoupledOperator {
    fn new(params: &ModelParams, dt: f64, ex: &Explicit, products: Products) -> Self {
        let grid = ex.phi_star.grid().clone();
        let eps2 = params.epsilon * params.epsilon;
        let alpha = params.alpha;
        Self {
            phase: ReducedPhaseOperator::new(PhaseCoefficients::coupled(params, dt), &ex.phi_star, products),
            potential_table: linear_potential_table(&grid, eps2, alpha),
            grid,
            phi_star: ex.phi_star.clone(),
            u_star: ex.u_star.clone(),
            mobility: params.mobility,
            lambda: params.lambda,
            nu: params.nu,
            dt,
            products,
        }
    }

    /// Build the operator a step from `state` would solve with.
    pub fn for_state(state: &NsState, params: &ModelParams, dt: f64, products: Products) -> Self {
        Self::new(params, dt, &Explicit::new(state), products)
    }

    fn field(&self, v: &[f64]) -> ScalarField {
        ScalarField::from_vec(&self.grid, v.to_vec())
    }

    /// (1/M)(−Δ)⁻¹∇·(φ*u).
    fn phase_transport(&self, u: &VectorField) -> ScalarField {
        let flux = VectorField {
            x: self.products.mul(&self.phi_star, &u.x),
            y: self.products.mul(&self.phi_star, &u.y),
        };
        &flux.divergence().inverse_laplacian() * (1.0 / self.mobility)
    }

    /// −ε²/2Δx + α/2ψ(x) + σx.
    fn half_potential(&self, x: &ScalarField) -> ScalarField {
        let mut spec = self.grid.forward(x.values());
        self.grid.scale_by_table(&mut spec, &self.potential_table);
        let lin = ScalarField::from_vec(&self.grid, self.grid.inverse(spec));
        &lin + &self.products.mul(self.phase.sigma(), x)
    }

    /// (2/δt)u + B(u*, u) − νΔu.
    fn momentum(&self, u: &VectorField) -> VectorField {
        let mut out = u.scaled(2.0 / self.dt);
        out.axpy(1.0, &skew_advection(&self.u_star, u, self.products));
        out.axpy(-self.nu, &u.laplacian());
        out
    }

    /// 2λφ*∇h.
    fn capillary(&self, h: &ScalarField) -> VectorField {
        let gh = h.gradient();
        let s = 2.0 * self.lambda;
        VectorField {
            x: &self.products.mul(&self.phi_star, &gh.x) * s,
            y: &self.products.mul(&self.phi_star, &gh.y) * s,
        }
    }
}

fn linear_potential_table(grid: &Grid2D, eps2: f64, alpha: f64) -> Vec<f64> {
    grid.symbol_table(|kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 > 0.0 {
            0.5 * eps2 * k2 + 0.5 * alpha / k2
        } else {
            0.0
        }
    })
}

impl LinearOperator for CoupledOperator {
    fn dim(&self) -> usize {
        3 * self.grid.len()
    }

    fn apply(&self, z: &[f64], y: &mut [f64]) {
        let n = self.grid.len();
        let x = self.field(&z[..n]);
        let u = VectorField {
            x: self.field(&z[n..2 * n]),
            y: self.field(&z[2 * n..]),
        };
        self.phase.apply(x.values(), &mut y[..n]);
        for (yi, t) in y[..n].iter_mut().zip(self.phase_transport(&u).values()) {
            *yi += t;
        }
        let mut m = self.momentum(&u);
        m.axpy(1.0, &self.capillary(&self.half_potential(&x)));
        y[n..2 * n].copy_from_slice(m.x.values());
        y[2 * n..].copy_from_slice(m.y.values());
    }
}

/// Decide the Krylov method for a coupled operator: PCG if it passes the
/// symmetry audit, GMRES otherwise.
pub fn choose_method(op: &CoupledOperator) -> (KrylovMethod, f64) {
    let defect = symmetry_defect(op, 10, 0x5eed);
    if defect <= SYMMETRY_THRESHOLD {
        (KrylovMethod::Pcg, defect)
    } else {
        info!("coupled operator symmetry defect {defect:.3e} exceeds {SYMMETRY_THRESHOLD:e}; using GMRES");
        (KrylovMethod::Gmres { restart: GMRES_RESTART }, defect)
    }
}

/// Output of the coupled Step-1 solve.
#[derive(Debug, Clone)]
pub struct Step1Output {
    pub phi_next: ScalarField,
    pub u_aux_next: ScalarField,
    pub u_tilde: VectorField,
    /// w^{n+½}, including the λ factor.
    pub w_half: ScalarField,
    pub solve_report: SolveReport,
}

/// Step 1: coupled phase / intermediate-velocity solve. Without history the
/// extrapolations fall back to the current level.
pub fn step1_coupled(
    state: &NsState,
    params: &ModelParams,
    dt: f64,
    forcing: Option<&NsForcing<'_>>,
    opts: &SchemeOptions,
    method: KrylovMethod,
) -> Result<Step1Output, StepError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(StepError::BadTimeStep(dt));
    }
    params.validate()?;
    let ex = Explicit::new(state);
    let op = CoupledOperator::new(params, dt, &ex, opts.products);
    let g = op.grid.clone();
    let n = g.len();
    let pr = opts.products;
    let (mob, lam) = (params.mobility, params.lambda);
    let eps2 = params.epsilon * params.epsilon;
    let alpha = params.alpha;
    let phi_n = &state.phase.phi_n;
    let u_aux_n = &state.phase.u_aux_n;
    let vel_n = &state.velocity_n;
    let t_half = state.time() + 0.5 * dt;

    let s_phi = forcing.map(|f| (f.phase)(t_half));
    let s_u = forcing.map(|f| (f.momentum)(t_half));
    let mean = phi_n.mean() + dt * s_phi.as_ref().map_or(0.0, |s| s.mean());

    // g = −ε²/2Δφⁿ + α/2ψⁿ + φ*Uⁿ − σφⁿ
    let mut gpot = op.half_potential(phi_n);
    gpot.axpy(-2.0, &pr.mul(op.phase.sigma(), phi_n));
    gpot += &pr.mul(&ex.phi_star, u_aux_n);

    // φ-row
    let mut rhs_phi = g.apply_symbol(phi_n.values(), |kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 > 0.0 {
            2.0 / (mob * dt * k2)
        } else {
            0.0
        }
    });
    let transport = op.phase_transport(vel_n);
    let sigma_m = op.phase.sigma() * mean;
    let mut nodal = &(&gpot + &sigma_m) * (-2.0 * lam);
    nodal -= &transport;
    if let Some(s) = &s_phi {
        nodal += &(&s.inverse_laplacian() * (2.0 / mob));
    }
    let shift = op.phase.zero_mode() * mean - nodal.mean();
    for (r, v) in rhs_phi.iter_mut().zip(nodal.values()) {
        *r += v + shift;
    }

    // u-row
    let mut rhs_u = vel_n.scaled(2.0 / dt);
    rhs_u.axpy(-1.0, &skew_advection(&ex.u_star, vel_n, pr));
    rhs_u.axpy(params.nu, &vel_n.laplacian());
    rhs_u.axpy(-2.0, &state.pressure_n.gradient());
    rhs_u.axpy(-1.0, &op.capillary(&gpot));
    if let Some(s) = &s_u {
        rhs_u.axpy(2.0, s);
    }

    let mut rhs = rhs_phi;
    rhs.extend_from_slice(rhs_u.x.values());
    rhs.extend_from_slice(rhs_u.y.values());
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(StepError::NonFinite("right-hand side"));
    }

    let guess: Vec<f64> = if state.has_history() {
        let ext = |a: &ScalarField, b: &ScalarField| a.zip_map(b, |p, q| 2.0 * p - q).into_values();
        let mut v = ext(phi_n, &state.phase.phi_nm1);
        v.extend(ext(&vel_n.x, &state.velocity_nm1.x));
        v.extend(ext(&vel_n.y, &state.velocity_nm1.y));
        v
    } else {
        [phi_n.values(), vel_n.x.values(), vel_n.y.values()].concat()
    };

    let precond = ns_block_preconditioner(params, dt, &ex.phi_star);
    let (z, report) = solve_from_guess(method, &op, &rhs, &precond, opts.tol, opts.max_iter, &guess)?;
    if !report.converged {
        return Err(StepError::NotConverged(report));
    }

    let mut x = ScalarField::from_vec(&g, z[..n].to_vec());
    let drift = mean - x.mean();
    for v in x.values_mut() {
        *v += drift;
    }
    let u_tilde = VectorField {
        x: ScalarField::from_vec(&g, z[n..2 * n].to_vec()),
        y: ScalarField::from_vec(&g, z[2 * n..].to_vec()),
    };
    if !x.is_finite() || !u_tilde.is_finite() {
        return Err(StepError::NonFinite("coupled solution"));
    }

    let dphi = &x - phi_n;
    let u_aux_next = &(&pr.mul(&ex.phi_star, &dphi) * 2.0) + u_aux_n;
    let phi_half = &(&x + phi_n) * 0.5;
    let u_half = &(&u_aux_next + u_aux_n) * 0.5;
    let lin = g.apply_symbol(phi_half.values(), |kx, ky| {
        let k2 = kx * kx + ky * ky;
        if k2 > 0.0 {
            eps2 * k2 + alpha / k2
        } else {
            0.0
        }
    });
    let mut w = pr.mul(&ex.phi_star, &u_half);
    for (wi, l) in w.values_mut().iter_mut().zip(lin) {
        *wi = lam * (*wi + l);
    }
    Ok(Step1Output {
        phi_next: x,
        u_aux_next,
        u_tilde,
        w_half: w,
        solve_report: report,
    })
}

/// Result of one full coupled step.
#[derive(Debug, Clone)]
pub struct NsStepOutput {
    pub phi_next: ScalarField,
    pub u_aux_next: ScalarField,
    pub velocity_next: VectorField,
    pub pressure_next: ScalarField,
    /// ũⁿ⁺¹.
    pub intermediate_velocity: VectorField,
    /// w^{n+½}.
    pub chemical_potential: ScalarField,
    pub solve_report: SolveReport,
    pub energy_before: f64,
    pub energy_after: f64,
    /// −δt(M‖∇w‖² + ν‖∇ũ^{n+½}‖²) with ũ^{n+½} = (ũⁿ⁺¹ + uⁿ)/2.
    pub dissipation_rhs: f64,
    pub dt: f64,
}

impl NsStepOutput {
    pub fn commit(self, state: &mut NsState) {
        state.advance(self.phi_next, self.u_aux_next, self.velocity_next, self.pressure_next, self.dt);
    }
}

/// Coupled energy ½‖u‖² + λE_q + δt²/8‖∇p‖².
fn modified_energy(phase: (&ScalarField, &ScalarField), u: &VectorField, p: &ScalarField, params: &ModelParams, dt: f64) -> f64 {
    energy_coupled(u, phase.0, phase.1, params) + dt * dt / 8.0 * p.spectral_sums().grad_sq
}

/// Both stages of one coupled step.
pub fn step_ns(
    state: &NsState,
    params: &ModelParams,
    dt: f64,
    forcing: Option<&NsForcing<'_>>,
    opts: &SchemeOptions,
    method: KrylovMethod,
) -> Result<NsStepOutput, StepError> {
    let s1 = step1_coupled(state, params, dt, forcing, opts, method)?;
    let (velocity_next, pressure_next) = step2_projection(&s1.u_tilde, &state.pressure_n, dt);
    let u_half = &(&s1.u_tilde + &state.velocity_n).scaled(0.5);
    let dissipation_rhs =
        -dt * (params.mobility * s1.w_half.spectral_sums().h1_sq + params.nu * u_half.h1_seminorm().powi(2));
    let energy_before = modified_energy(
        (&state.phase.phi_n, &state.phase.u_aux_n),
        &state.velocity_n,
        &state.pressure_n,
        params,
        dt,
    );
    let energy_after = modified_energy((&s1.phi_next, &s1.u_aux_next), &velocity_next, &pressure_next, params, dt);
    Ok(NsStepOutput {
        phi_next: s1.phi_next,
        u_aux_next: s1.u_aux_next,
        velocity_next,
        pressure_next,
        intermediate_velocity: s1.u_tilde,
        chemical_potential: s1.w_half,
        solve_report: s1.solve_report,
        energy_before,
        energy_after,
        dissipation_rhs,
        dt,
    })
}

/// Drives a coupled trajectory. The Krylov method is fixed by a symmetry
/// audit of the first step's operator and reused afterwards.
#[derive(Debug, Clone)]
pub struct NsStepper {
    pub params: ModelParams,
    pub dt: f64,
    pub opts: SchemeOptions,
    method: Option<KrylovMethod>,
}

impl NsStepper {
    pub fn new(params: ModelParams, dt: f64, opts: SchemeOptions) -> Self {
        Self {
            params,
            dt,
            opts,
            method: None,
        }
    }

    /// Skip the audit and use `method` for every step.
    pub fn with_method(mut self, method: KrylovMethod) -> Self {
        self.method = Some(method);
        self
    }

    pub fn method(&self) -> Option<KrylovMethod> {
        self.method
    }

    pub fn step(&mut self, state: &NsState, forcing: Option<&NsForcing<'_>>) -> Result<NsStepOutput, StepError> {
        let method = match self.method {
            Some(m) => m,
            None => {
                let op = CoupledOperator::for_state(state, &self.params, self.dt, self.opts.products);
                let (m, _) = choose_method(&op);
                self.method = Some(m);
                m
            }
        };
        step_ns(state, &self.params, self.dt, forcing, &self.opts, method)
    }

    /// Advance `n_steps`, calling `observe` before each commit.
    pub fn integrate(
        &mut self,
        state: &mut NsState,
        n_steps: usize,
        forcing: Option<&NsForcing<'_>>,
        mut observe: impl FnMut(&NsState, &NsStepOutput),
    ) -> Result<(), StepError> {
        for _ in 0..n_steps {
            let out = self.step(state, forcing)?;
            observe(state, &out);
            out.commit(state);
        }
        Ok(())
    }
}
