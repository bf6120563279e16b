use rustfft::num_complex::Complex64;

use super::LinearOperator;
use crate::model::ModelParams;
use crate::spectral::{Grid2D, ScalarField};

/// Coefficients of the reduced phase equation shared by every IEQ stepper:
///
/// `a (−Δ)⁻¹x − e Δx + s·P(σ (x − x̄)) + b (−Δ)⁻¹(−∂xx) x + γ x̄ = h`
///
/// where σ is the squared extrapolated phase and P removes the mean. The
/// zero mode decouples and is pinned through `γ x̄ = γ m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCoefficients {
    /// `a`: τ/(Mδt) + (λ)α.
    pub inverse_laplacian: f64,
    /// `e`: (λ)ε².
    pub stiffness: f64,
    /// `s`: weight of the σ-multiplication (2, or 2λ in the coupled model).
    pub potential: f64,
    /// `b`: β/M for the electric-field variant, else 0.
    pub electric: f64,
}

impl PhaseCoefficients {
    fn new(tau: f64, params: &ModelParams, dt: f64, weight: f64) -> Self {
        Self {
            inverse_laplacian: tau / (params.mobility * dt) + weight * params.alpha,
            stiffness: weight * params.epsilon * params.epsilon,
            potential: 2.0 * weight,
            electric: 0.0,
        }
    }

    /// Crank–Nicolson IEQ step.
    pub fn crank_nicolson(params: &ModelParams, dt: f64) -> Self {
        Self::new(2.0, params, dt, 1.0)
    }

    /// Crank–Nicolson step with the implicit β∂xx term.
    pub fn crank_nicolson_electric(params: &ModelParams, dt: f64) -> Self {
        Self {
            electric: params.beta / params.mobility,
            ..Self::crank_nicolson(params, dt)
        }
    }

    /// BDF2 IEQ step.
    pub fn bdf2(params: &ModelParams, dt: f64) -> Self {
        Self::new(1.5, params, dt, 1.0)
    }

    /// First-order (backward Euler) IEQ step.
    pub fn backward_euler(params: &ModelParams, dt: f64) -> Self {
        Self::new(1.0, params, dt, 1.0)
    }

    /// φ-block of the flow-coupled Crank–Nicolson step (λ-weighted).
    pub fn coupled(params: &ModelParams, dt: f64) -> Self {
        Self::new(2.0, params, dt, params.lambda)
    }

    /// Nonzero-mode symbol with σ replaced by the constant `sigma`.
    pub fn symbol(&self, kx: f64, ky: f64, sigma: f64) -> f64 {
        let k2 = kx * kx + ky * ky;
        (self.inverse_laplacian + self.electric * kx * kx) / k2 + self.stiffness * k2 + self.potential * sigma
    }

    /// γ, the weight of the decoupled mean equation.
    pub fn zero_mode(&self, sigma: f64) -> f64 {
        self.inverse_laplacian + self.potential * sigma
    }
}

/// Exact inverse of the reduced phase operator with σ frozen to a constant.
#[derive(Debug, Clone)]
pub struct PhasePreconditioner {
    grid: Grid2D,
    coeffs: PhaseCoefficients,
    sigma: f64,
}

impl PhasePreconditioner {
    /// `sigma` is the constant standing in for (φ*)².
    pub fn new(grid: &Grid2D, coeffs: PhaseCoefficients, sigma: f64) -> Self {
        Self {
            grid: grid.clone(),
            coeffs,
            sigma,
        }
    }

    /// Freeze σ to c² with c = mean(φ*).
    pub fn from_phi_star(coeffs: PhaseCoefficients, phi_star: &ScalarField) -> Self {
        let c = phi_star.mean();
        Self::new(phi_star.grid(), coeffs, c * c)
    }

    pub fn coefficients(&self) -> &PhaseCoefficients {
        &self.coeffs
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub(crate) fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let mut spec = self.grid.forward(x);
        self.scale(&mut spec);
        y.copy_from_slice(&self.grid.inverse(spec));
    }

    fn scale(&self, spec: &mut [Complex64]) {
        let c = self.coeffs;
        let sigma = self.sigma;
        let gamma = c.zero_mode(sigma);
        self.grid.scale_modes(spec, |kx, ky| {
            if kx == 0.0 && ky == 0.0 {
                1.0 / gamma
            } else {
                1.0 / c.symbol(kx, ky, sigma)
            }
        });
    }
}

impl LinearOperator for PhasePreconditioner {
    fn dim(&self) -> usize {
        self.grid.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y)
    }
}

/// Preconditioner for the Crank–Nicolson phase step: inverse of
/// (2/(Mδt)+α)(−Δ)⁻¹ − ε²Δ + 2c² with c = mean(φ*).
pub fn bcp_step_preconditioner(params: &ModelParams, dt: f64, phi_star: &ScalarField) -> PhasePreconditioner {
    let coeffs = if params.beta > 0.0 {
        PhaseCoefficients::crank_nicolson_electric(params, dt)
    } else {
        PhaseCoefficients::crank_nicolson(params, dt)
    };
    PhasePreconditioner::from_phi_star(coeffs, phi_star)
}

/// Block-diagonal preconditioner for the stacked `[φ, ũ, ṽ]` system: the
/// frozen-coefficient phase inverse and (2/δt − νΔ)⁻¹ on each velocity
/// component.
#[derive(Debug, Clone)]
pub struct NsBlockPreconditioner {
    phase: PhasePreconditioner,
    velocity_mass: f64,
    nu: f64,
}

impl NsBlockPreconditioner {
    pub fn phase_block(&self) -> &PhasePreconditioner {
        &self.phase
    }

    /// Solve (2/δt − νΔ)ũ = f for one velocity component.
    pub fn velocity_block(&self, f: &[f64], out: &mut [f64]) {
        let g = &self.phase.grid;
        let mut spec = g.forward(f);
        let (m, nu) = (self.velocity_mass, self.nu);
        g.scale_modes(&mut spec, |kx, ky| 1.0 / (m + nu * (kx * kx + ky * ky)));
        out.copy_from_slice(&g.inverse(spec));
    }
}

impl LinearOperator for NsBlockPreconditioner {
    fn dim(&self) -> usize {
        3 * self.phase.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.phase.dim();
        self.phase.apply_into(&x[..n], &mut y[..n]);
        self.velocity_block(&x[n..2 * n], &mut y[n..2 * n]);
        self.velocity_block(&x[2 * n..], &mut y[2 * n..]);
    }
}

pub fn ns_block_preconditioner(params: &ModelParams, dt: f64, phi_star: &ScalarField) -> NsBlockPreconditioner {
    NsBlockPreconditioner {
        phase: PhasePreconditioner::from_phi_star(PhaseCoefficients::coupled(params, dt), phi_star),
        velocity_mass: 2.0 / dt,
        nu: params.nu,
    }
}
