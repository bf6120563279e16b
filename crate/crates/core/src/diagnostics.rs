//! Per-step verification quantities and their aggregation over a run.

use crate::model::{energy_quadratized, BcpState, ModelParams, NsState};
use crate::spectral::ScalarField;
use crate::scheme_bcp::{BcpScheme, StepOutput};
use crate::scheme_ns::NsStepOutput;

/// Relative tolerance for the discrete energy identities, scaled by
/// max(1, |E|).
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

/// What the audit may assume about a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AuditMode {
    /// Unforced gradient flow: the energy identity and monotonicity apply.
    #[default]
    Dissipative,
    /// Manufactured sources inject energy: only mass bookkeeping applies,
    /// and mass is expected to follow the source.
    Forced,
    /// Field-driven model: no energy law, mass is still conserved.
    Electric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// Time after the step.
    pub time: f64,
    /// Quadratized (or coupled) energy after the step.
    pub energy: f64,
    /// Energy change across the step.
    pub energy_change: f64,
    /// |ΔE/δt − rhs/δt| for the scheme's own identity; `None` when no
    /// identity applies.
    pub energy_identity_residual: Option<f64>,
    /// mean(φ) after the step.
    pub mass: f64,
    /// mean(φⁿ⁺¹) − mean(φⁿ).
    pub mass_drift: f64,
    /// ‖∇w‖².
    pub grad_w_norm_sq: f64,
    /// ‖∇ũ^{n+½}‖² (coupled runs).
    pub grad_u_norm_sq: Option<f64>,
    /// max |∇·uⁿ⁺¹| (coupled runs).
    pub div_u_norm: Option<f64>,
    pub solver_iterations: usize,
}

/// Audit one phase-field step.
///
/// The identity checked depends on the scheme:
/// * Crank–Nicolson: E(n+1) − E(n) = −δtM‖∇w‖²;
/// * BDF2: Ê(n+1) − Ê(n) + ½E(xⁿ⁺¹ − 2xⁿ + xⁿ⁻¹) = −δtM‖∇w‖², where
///   Ê(n+1) = ½[E(xⁿ⁺¹) + E(2xⁿ⁺¹ − xⁿ)] and x = (φ, U);
/// * first order: E(n+1) − E(n) + E(xⁿ⁺¹ − xⁿ) = −δtM‖∇w‖².
///
/// `scheme` is the stepper that actually produced `after` (bootstrap steps
/// are first order).
pub fn audit_step_bcp(
    before: &BcpState,
    after: &StepOutput,
    scheme: BcpScheme,
    params: &ModelParams,
    mode: AuditMode,
) -> StepDiagnostics {
    let dt = after.dt;
    let grad_w_norm_sq = -after.dissipation_rhs / (dt * params.mobility);
    let e = |phi: &ScalarField, u: &ScalarField| energy_quadratized(phi, u, params);
    let residual = (mode == AuditMode::Dissipative).then(|| {
        let (p1, u1) = (&after.phi_next, &after.u_aux_next);
        let (p0, u0) = (&before.phi_n, &before.u_aux_n);
        let lhs = match scheme {
            BcpScheme::CrankNicolson => after.energy_after - after.energy_before,
            BcpScheme::FirstOrder => after.energy_after - after.energy_before + e(&(p1 - p0), &(u1 - u0)),
            BcpScheme::Bdf2 => {
                let (pm, um) = (&before.phi_nm1, &before.u_aux_nm1);
                let ext = |a: &ScalarField, b: &ScalarField| a.zip_map(b, |x, y| 2.0 * x - y);
                let second = |a: &ScalarField, b: &ScalarField, c: &ScalarField| {
                    a.zip_map(b, |x, y| x - 2.0 * y).zip_map(c, |x, z| x + z)
                };
                let hat_new = 0.5 * (after.energy_after + e(&ext(p1, p0), &ext(u1, u0)));
                let hat_old = 0.5 * (after.energy_before + e(&ext(p0, pm), &ext(u0, um)));
                hat_new - hat_old + 0.5 * e(&second(p1, p0, pm), &second(u1, u0, um))
            }
        };
        (lhs - after.dissipation_rhs).abs() / dt
    });
    let mass = after.phi_next.mean();
    StepDiagnostics {
        time: before.time + dt,
        energy: after.energy_after,
        energy_change: after.energy_after - after.energy_before,
        energy_identity_residual: residual,
        mass,
        mass_drift: mass - before.phi_n.mean(),
        grad_w_norm_sq,
        grad_u_norm_sq: None,
        div_u_norm: None,
        solver_iterations: after.solve_report.iterations,
    }
}

/// Audit one coupled step against
/// E(n+1) − E(n) = −δt(M‖∇w‖² + ν‖∇ũ^{n+½}‖²), E including δt²/8‖∇p‖².
pub fn audit_step_ns(before: &NsState, after: &NsStepOutput, mode: AuditMode) -> StepDiagnostics {
    let dt = after.dt;
    let grad_w_norm_sq = after.chemical_potential.spectral_sums().h1_sq;
    let u_half = (&after.intermediate_velocity + &before.velocity_n).scaled(0.5);
    let grad_u_norm_sq = u_half.h1_seminorm().powi(2);
    let residual = (mode == AuditMode::Dissipative)
        .then(|| ((after.energy_after - after.energy_before) - after.dissipation_rhs).abs() / dt);
    let mass = after.phi_next.mean();
    StepDiagnostics {
        time: before.time() + dt,
        energy: after.energy_after,
        energy_change: after.energy_after - after.energy_before,
        energy_identity_residual: residual,
        mass,
        mass_drift: mass - before.phase.phi_n.mean(),
        grad_w_norm_sq,
        grad_u_norm_sq: Some(grad_u_norm_sq),
        div_u_norm: Some(after.velocity_next.divergence().max_abs()),
        solver_iterations: after.solve_report.iterations,
    }
}

/// Aggregate of a run's step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSummary {
    pub mode: AuditMode,
    pub steps: usize,
    /// Steps whose energy rose by more than the identity tolerance. Only
    /// counted for dissipative runs.
    pub monotonicity_violations: usize,
    pub max_identity_residual: Option<f64>,
    /// Σ mass_drift.
    pub total_mass_drift: f64,
    pub max_abs_mass_drift: f64,
    pub max_div_u: Option<f64>,
    pub max_iterations: usize,
}

impl LedgerSummary {
    fn empty(mode: AuditMode) -> Self {
        Self {
            mode,
            steps: 0,
            monotonicity_violations: 0,
            max_identity_residual: None,
            total_mass_drift: 0.0,
            max_abs_mass_drift: 0.0,
            max_div_u: None,
            max_iterations: 0,
        }
    }

    /// Fold one more step into the summary.
    pub fn push(mut self, d: &StepDiagnostics) -> Self {
        self.steps += 1;
        if self.mode == AuditMode::Dissipative && d.energy_change > IDENTITY_TOLERANCE * d.energy.abs().max(1.0) {
            self.monotonicity_violations += 1;
        }
        let opt_max = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, None) => x,
            (None, y) => y,
        };
        self.max_identity_residual = opt_max(self.max_identity_residual, d.energy_identity_residual);
        self.max_div_u = opt_max(self.max_div_u, d.div_u_norm);
        self.total_mass_drift += d.mass_drift;
        self.max_abs_mass_drift = self.max_abs_mass_drift.max(d.mass_drift.abs());
        self.max_iterations = self.max_iterations.max(d.solver_iterations);
        self
    }

    pub fn is_forced(&self) -> bool {
        self.mode == AuditMode::Forced
    }
}

/// Summarize a sequence of step diagnostics.
pub fn run_ledger<'a>(mode: AuditMode, steps: impl IntoIterator<Item = &'a StepDiagnostics>) -> LedgerSummary {
    steps.into_iter().fold(LedgerSummary::empty(mode), LedgerSummary::push)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme_bcp::{step, SchemeOptions};
    use crate::scheme_ns::NsStepper;
    use crate::spectral::Grid2D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_phi(g: &Grid2D, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ScalarField::from_fn(g, |_, _| rng.random_range(-1.0..1.0));
        f.mean_free().map(|v| 0.05 + 0.7 * v)
    }

    fn run(scheme: BcpScheme, phi0: ScalarField, p: &ModelParams, dt: f64, n: usize, tol: f64) -> Vec<StepDiagnostics> {
        let opts = SchemeOptions::default().with_tol(tol);
        let mut s = BcpState::initial(phi0, 0.0);
        let mut out = Vec::new();
        for _ in 0..n {
            let used = if s.has_history() { scheme } else { BcpScheme::FirstOrder };
            let o = step(scheme, &s, p, dt, None, &opts).unwrap();
            out.push(audit_step_bcp(&s, &o, used, p, AuditMode::Dissipative));
            o.commit(&mut s);
        }
        out
    }

    #[test]
    fn constant_state_has_zero_residual_and_drift() {
        let g = Grid2D::square(8).unwrap();
        let p = ModelParams::default();
        let d = run(BcpScheme::CrankNicolson, ScalarField::constant(&g, -0.2), &p, 0.1, 4, 1e-10);
        let l = run_ledger(AuditMode::Dissipative, &d);
        assert_eq!(l.monotonicity_violations, 0);
        assert!(l.max_identity_residual.unwrap() < 1e-14);
        assert!(l.total_mass_drift.abs() < 1e-15);
    }

    #[test]
    fn identities_hold_for_every_scheme() {
        let g = Grid2D::square(16).unwrap();
        let p = ModelParams::default();
        for scheme in [BcpScheme::CrankNicolson, BcpScheme::Bdf2, BcpScheme::FirstOrder] {
            for dt in [1e-3, 1e-1, 1.0] {
                let d = run(scheme, random_phi(&g, 17), &p, dt, 4, 1e-12);
                for x in &d {
                    let r = x.energy_identity_residual.unwrap();
                    assert!(r <= 1e-9 * x.energy.abs().max(1.0), "{scheme:?} dt={dt} r={r}");
                }
            }
        }
    }

    #[test]
    fn residual_tracks_solver_tolerance() {
        let g = Grid2D::square(16).unwrap();
        let p = ModelParams::default();
        let worst = |tol: f64| {
            let d = run(BcpScheme::CrankNicolson, random_phi(&g, 23), &p, 1e-2, 4, tol);
            run_ledger(AuditMode::Dissipative, &d).max_identity_residual.unwrap()
        };
        let (a, b) = (worst(1e-8), worst(1e-12));
        assert!(b < a, "{a} {b}");
    }

    #[test]
    fn ns_identity_and_divergence() {
        let g = Grid2D::square(16).unwrap();
        let p = ModelParams::default();
        let mut s = NsState::at_rest(random_phi(&g, 31), 0.0);
        let mut stepper = NsStepper::new(p, 1e-2, SchemeOptions::default().with_tol(1e-12));
        let mut diags = Vec::new();
        stepper
            .integrate(&mut s, 4, None, |b, o| diags.push(audit_step_ns(b, o, AuditMode::Dissipative)))
            .unwrap();
        let l = run_ledger(AuditMode::Dissipative, &diags);
        assert!(l.max_identity_residual.unwrap() < 1e-8);
        assert!(l.max_div_u.unwrap() < 1e-11);
        assert_eq!(l.monotonicity_violations, 0);
    }

    #[test]
    fn quiescent_uniform_ns_state_is_clean() {
        let g = Grid2D::square(8).unwrap();
        let p = ModelParams::default();
        let mut s = NsState::at_rest(ScalarField::constant(&g, 0.1), 0.0);
        let mut stepper = NsStepper::new(p, 1e-2, SchemeOptions::default());
        let mut diags = Vec::new();
        stepper
            .integrate(&mut s, 2, None, |b, o| diags.push(audit_step_ns(b, o, AuditMode::Dissipative)))
            .unwrap();
        for d in diags {
            assert!(d.energy_identity_residual.unwrap() < 1e-12);
            assert!(d.grad_u_norm_sq.unwrap() < 1e-24);
            assert!(d.div_u_norm.unwrap() < 1e-13);
        }
    }

    #[test]
    fn forced_ledger_skips_monotonicity() {
        let d = StepDiagnostics {
            time: 1.0,
            energy: 1.0,
            energy_change: 0.5,
            energy_identity_residual: None,
            mass: 0.0,
            mass_drift: 0.0,
            grad_w_norm_sq: 0.0,
            grad_u_norm_sq: None,
            div_u_norm: None,
            solver_iterations: 3,
        };
        let forced = run_ledger(AuditMode::Forced, [&d, &d]);
        assert!(forced.is_forced());
        assert_eq!(forced.monotonicity_violations, 0);
        assert_eq!(run_ledger(AuditMode::Dissipative, [&d]).monotonicity_violations, 1);
        assert_eq!(forced.max_iterations, 3);
    }
}
