//! Closed-form manufactured solutions and the sources that make them exact.

use crate::model::{double_well_deriv, ModelParams};
use crate::spectral::{Grid2D, ScalarField, VectorField};

/// φᵉ(x, y, t) = (sin 2x sin 2y / 4 + 0.48)(1 − sin²t / 2).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactSolutionBcp;

impl ExactSolutionBcp {
    pub fn profile(x: f64, y: f64) -> f64 {
        (2.0 * x).sin() * (2.0 * y).sin() / 4.0 + 0.48
    }

    pub fn time_factor(t: f64) -> f64 {
        1.0 - 0.5 * t.sin().powi(2)
    }

    /// d/dt of [`ExactSolutionBcp::time_factor`].
    pub fn time_factor_rate(t: f64) -> f64 {
        -t.sin() * t.cos()
    }

    pub fn phi(&self, grid: &Grid2D, t: f64) -> ScalarField {
        let a = Self::time_factor(t);
        ScalarField::from_fn(grid, |x, y| a * Self::profile(x, y))
    }

    pub fn phi_t(&self, grid: &Grid2D, t: f64) -> ScalarField {
        let a = Self::time_factor_rate(t);
        ScalarField::from_fn(grid, |x, y| a * Self::profile(x, y))
    }

    /// The initial profile, also used as the self-convergence start.
    pub fn initial(&self, grid: &Grid2D) -> ScalarField {
        ScalarField::from_fn(grid, Self::profile)
    }
}

/// φᵉ as above with uᵉ = sin 2y sin²x sin t, vᵉ = −sin 2x sin²y sin t and
/// pᵉ = cos x sin y sin t.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactSolutionNs {
    pub phase: ExactSolutionBcp,
}

impl ExactSolutionNs {
    fn velocity_shape(grid: &Grid2D) -> VectorField {
        VectorField::from_fns(
            grid,
            |x, y| (2.0 * y).sin() * x.sin().powi(2),
            |x, y| -(2.0 * x).sin() * y.sin().powi(2),
        )
    }

    pub fn phi(&self, grid: &Grid2D, t: f64) -> ScalarField {
        self.phase.phi(grid, t)
    }

    pub fn velocity(&self, grid: &Grid2D, t: f64) -> VectorField {
        Self::velocity_shape(grid).scaled(t.sin())
    }

    pub fn velocity_t(&self, grid: &Grid2D, t: f64) -> VectorField {
        Self::velocity_shape(grid).scaled(t.cos())
    }

    pub fn pressure(&self, grid: &Grid2D, t: f64) -> ScalarField {
        let s = t.sin();
        ScalarField::from_fn(grid, |x, y| s * x.cos() * y.sin())
    }
}

/// −ε²Δφ + f(φ).
fn local_potential(phi: &ScalarField, params: &ModelParams) -> ScalarField {
    let mut mu = &phi.laplacian() * (-params.epsilon * params.epsilon);
    mu += &phi.map(double_well_deriv);
    mu
}

/// Source s = φᵉₜ − M(Δμᵉ − α(φᵉ − φ̄ᵉ)), μᵉ = −ε²Δφᵉ + f(φᵉ), that makes
/// φᵉ an exact solution of the forced phase equation.
pub fn mms_source_bcp(t: f64, params: &ModelParams, grid: &Grid2D) -> ScalarField {
    let ex = ExactSolutionBcp;
    let phi = ex.phi(grid, t);
    let mut drive = local_potential(&phi, params).laplacian();
    drive.axpy(-params.alpha, &phi.mean_free());
    let mut s = ex.phi_t(grid, t);
    s.axpy(-params.mobility, &drive);
    s
}

/// Sources for the coupled system:
/// phase: φᵉₜ + ∇·(uᵉφᵉ) − MΔwᵉ with wᵉ = λ(−ε²Δφᵉ + f(φᵉ) + αψᵉ);
/// momentum: uᵉₜ + (uᵉ·∇)uᵉ + ∇pᵉ − νΔuᵉ + φᵉ∇wᵉ.
pub fn mms_source_ns(t: f64, params: &ModelParams, grid: &Grid2D) -> (ScalarField, VectorField) {
    let ex = ExactSolutionNs::default();
    let phi = ex.phi(grid, t);
    let u = ex.velocity(grid, t);

    let mut w = local_potential(&phi, params);
    w.axpy(params.alpha, &phi.inverse_laplacian());
    let w = &w * params.lambda;

    let flux = VectorField {
        x: u.x.mul_nodal(&phi),
        y: u.y.mul_nodal(&phi),
    };
    let mut s_phi = ex.phase.phi_t(grid, t);
    s_phi += &flux.divergence();
    s_phi.axpy(-params.mobility, &w.laplacian());

    let conv = |c: &ScalarField| {
        let g = c.gradient();
        &u.x.mul_nodal(&g.x) + &u.y.mul_nodal(&g.y)
    };
    let gw = w.gradient();
    let mut s_u = ex.velocity_t(grid, t);
    s_u.axpy(
        1.0,
        &VectorField {
            x: conv(&u.x),
            y: conv(&u.y),
        },
    );
    s_u.axpy(1.0, &ex.pressure(grid, t).gradient());
    s_u.axpy(-params.nu, &u.laplacian());
    s_u.axpy(
        1.0,
        &VectorField {
            x: phi.mul_nodal(&gw.x),
            y: phi.mul_nodal(&gw.y),
        },
    );
    (s_phi, s_u)
}
