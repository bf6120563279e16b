//! Model constants, the double-well potential, auxiliary fields and the
//! energy functionals of the diblock copolymer model.

use std::mem;

use crate::error::ParamError;
use crate::spectral::{ScalarField, VectorField};

/// Physical constants of the phase-field copolymer model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Interface width coefficient ε.
    pub epsilon: f64,
    /// Nonlocal (Ohta–Kawasaki) strength α.
    pub alpha: f64,
    /// Mobility M.
    pub mobility: f64,
    /// Free-energy magnitude λ (coupled model only).
    pub lambda: f64,
    /// Viscosity ν (coupled model only).
    pub nu: f64,
    /// Imposed electric-field magnitude β.
    pub beta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            epsilon: 0.06,
            alpha: 0.001,
            mobility: 1.0,
            lambda: 1.0,
            nu: 1.0,
            beta: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("epsilon", self.epsilon),
            ("mobility", self.mobility),
            ("lambda", self.lambda),
            ("nu", self.nu),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamError {
                    name,
                    value,
                    reason: "must be non-negative and finite",
                });
            }
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// F(φ) = ¼(φ² − 1)².
pub fn double_well(phi: f64) -> f64 {
    let s = phi * phi - 1.0;
    0.25 * s * s
}

/// f(φ) = F′(φ) = φ(φ² − 1).
pub fn double_well_deriv(phi: f64) -> f64 {
    phi * (phi * phi - 1.0)
}

/// ψ = (−Δ)⁻¹(φ − φ̄).
pub fn psi_from_phi(phi: &ScalarField) -> ScalarField {
    phi.inverse_laplacian()
}

/// Original free energy ∫ ε²/2|∇φ|² + F(φ) + α/2|∇ψ|².
pub fn energy_bcp(phi: &ScalarField, params: &ModelParams) -> f64 {
    let sums = phi.spectral_sums();
    let well: f64 = phi.values().iter().map(|&p| double_well(p)).sum::<f64>() * phi.grid().cell_area();
    0.5 * params.epsilon.powi(2) * sums.h1_sq + well + 0.5 * params.alpha * sums.inverse_laplacian_sq
}

/// Quadratized energy ∫ ε²/2|∇φ|² + ¼U² + α/2|∇ψ|².
pub fn energy_quadratized(phi: &ScalarField, u_aux: &ScalarField, params: &ModelParams) -> f64 {
    let sums = phi.spectral_sums();
    0.5 * params.epsilon.powi(2) * sums.h1_sq
        + 0.25 * u_aux.inner_product(u_aux)
        + 0.5 * params.alpha * sums.inverse_laplacian_sq
}

/// ½‖u‖² + λ·(quadratized free energy).
pub fn energy_coupled(velocity: &VectorField, phi: &ScalarField, u_aux: &ScalarField, params: &ModelParams) -> f64 {
    0.5 * velocity.inner_product(velocity) + params.lambda * energy_quadratized(phi, u_aux, params)
}

/// Discrete functional dissipated by the Crank–Nicolson IEQ scheme.
///
/// On the collocation grid this coincides with [`energy_quadratized`]; the
/// gradient norms are the Laplacian-consistent ones.
pub fn discrete_energy_cn(phi: &ScalarField, u_aux: &ScalarField, params: &ModelParams) -> f64 {
    energy_quadratized(phi, u_aux, params)
}

/// Discrete functional dissipated by the coupled projection scheme, including
/// the δt²/8‖∇p‖² pressure term (first-derivative gradient, matching the
/// projection step).
pub fn discrete_energy_ns(state: &NsState, params: &ModelParams, dt: f64) -> f64 {
    let p = state.pressure_n.spectral_sums().grad_sq;
    energy_coupled(&state.velocity_n, &state.phase.phi_n, &state.phase.u_aux_n, params) + dt * dt / 8.0 * p
}

/// Two-level history of the phase variable and its IEQ auxiliary field.
#[derive(Debug, Clone, PartialEq)]
pub struct BcpState {
    pub phi_n: ScalarField,
    pub phi_nm1: ScalarField,
    pub u_aux_n: ScalarField,
    pub u_aux_nm1: ScalarField,
    pub time: f64,
    pub step_index: usize,
}

impl BcpState {
    /// Step-0 state with U⁰ = (φ⁰)² − 1. The previous level mirrors the
    /// current one until a bootstrap step has been taken.
    pub fn initial(phi0: ScalarField, time: f64) -> Self {
        let u0 = phi0.map(|p| p * p - 1.0);
        Self {
            phi_nm1: phi0.clone(),
            u_aux_nm1: u0.clone(),
            phi_n: phi0,
            u_aux_n: u0,
            time,
            step_index: 0,
        }
    }

    pub fn has_history(&self) -> bool {
        self.step_index >= 1
    }

    /// Rotate history: level n becomes n−1 and the new fields become level n.
    pub fn advance(&mut self, phi_next: ScalarField, u_aux_next: ScalarField, dt: f64) {
        self.phi_nm1 = mem::replace(&mut self.phi_n, phi_next);
        self.u_aux_nm1 = mem::replace(&mut self.u_aux_n, u_aux_next);
        self.time += dt;
        self.step_index += 1;
    }

    pub fn energy(&self, params: &ModelParams) -> f64 {
        discrete_energy_cn(&self.phi_n, &self.u_aux_n, params)
    }

    pub fn mass(&self) -> f64 {
        self.phi_n.mean()
    }
}

/// History for the flow-coupled scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct NsState {
    pub phase: BcpState,
    pub velocity_n: VectorField,
    pub velocity_nm1: VectorField,
    /// Mean-zero pressure pⁿ.
    pub pressure_n: ScalarField,
}

impl NsState {
    pub fn initial(phi0: ScalarField, velocity0: VectorField, pressure0: ScalarField, time: f64) -> Self {
        let pressure0 = pressure0.mean_free();
        Self {
            phase: BcpState::initial(phi0, time),
            velocity_nm1: velocity0.clone(),
            velocity_n: velocity0,
            pressure_n: pressure0,
        }
    }

    /// Quiescent flow with zero pressure.
    pub fn at_rest(phi0: ScalarField, time: f64) -> Self {
        let g = phi0.grid().clone();
        Self::initial(phi0, VectorField::zeros(&g), ScalarField::zeros(&g), time)
    }

    pub fn has_history(&self) -> bool {
        self.phase.has_history()
    }

    pub fn time(&self) -> f64 {
        self.phase.time
    }

    pub fn advance(
        &mut self,
        phi_next: ScalarField,
        u_aux_next: ScalarField,
        velocity_next: VectorField,
        pressure_next: ScalarField,
        dt: f64,
    ) {
        self.phase.advance(phi_next, u_aux_next, dt);
        self.velocity_nm1 = mem::replace(&mut self.velocity_n, velocity_next);
        self.pressure_n = pressure_next;
    }

    pub fn energy(&self, params: &ModelParams, dt: f64) -> f64 {
        discrete_energy_ns(self, params, dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid2D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid2D {
        Grid2D::square(32).unwrap()
    }

    #[test]
    fn potential_values() {
        assert_eq!(double_well(1.0), 0.0);
        assert_eq!(double_well(-1.0), 0.0);
        assert_eq!(double_well_deriv(1.0), 0.0);
        assert_eq!(double_well_deriv(-1.0), 0.0);
        assert_eq!(double_well(0.0), 0.25);
        assert_eq!(double_well_deriv(0.0), 0.0);
        assert_eq!(double_well_deriv(2.0), 6.0);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::default().validate().is_ok());
        let bad = ModelParams { mobility: 0.0, ..Default::default() };
        assert_eq!(bad.validate().unwrap_err().name, "mobility");
        let bad = ModelParams { alpha: -1.0, ..Default::default() };
        assert_eq!(bad.validate().unwrap_err().name, "alpha");
    }

    #[test]
    fn psi_examples() {
        let g = grid();
        assert!(psi_from_phi(&ScalarField::constant(&g, 0.7)).max_abs() < 1e-15);
        let phi = ScalarField::from_fn(&g, |x, _| x.cos() + 0.3);
        let psi = psi_from_phi(&phi);
        assert!((&psi - &ScalarField::from_fn(&g, |x, _| x.cos())).max_abs() < 1e-14);
        let phi = ScalarField::from_fn(&g, |x, y| (2.0 * x).sin() * (2.0 * y).sin());
        assert!((&psi_from_phi(&phi) - &(&phi * 0.125)).max_abs() < 1e-14);
    }

    #[test]
    fn psi_well_posed_on_random_data() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = ScalarField::from_fn(&g, |_, _| rng.random_range(-1.0..1.0));
        let psi = psi_from_phi(&phi);
        assert!(psi.mean().abs() < 1e-14);
        let resid = &(-&psi.laplacian()) - &phi.mean_free();
        assert!(resid.max_abs() < 1e-12);
    }

    #[test]
    fn energy_constants() {
        let g = grid();
        let p = ModelParams::default();
        assert!((energy_bcp(&ScalarField::zeros(&g), &p) - PI * PI).abs() < 1e-12);
        assert!(energy_bcp(&ScalarField::constant(&g, 1.0), &p).abs() < 1e-15);
        let zero = ScalarField::zeros(&g);
        let minus_one = ScalarField::constant(&g, -1.0);
        assert!((energy_quadratized(&zero, &minus_one, &p) - PI * PI).abs() < 1e-12);
        assert!(energy_quadratized(&ScalarField::constant(&g, 1.0), &zero, &p).abs() < 1e-15);
    }

    #[test]
    fn energy_of_small_cosine_matches_closed_form() {
        let g = grid();
        let p = ModelParams {
            epsilon: 0.06,
            alpha: 0.001,
            ..Default::default()
        };
        let a = 0.01;
        let phi = ScalarField::from_fn(&g, |x, _| a * x.cos());
        // ∫|∇φ|² = a²·2π², ∫φ² = a²·2π², ∫φ⁴ = a⁴·3π²/2, ∫|∇ψ|² = a²·2π².
        let pi2 = PI * PI;
        let grad = a * a * 2.0 * pi2;
        let well = 0.25 * (4.0 * pi2 - 2.0 * a * a * 2.0 * pi2 + a.powi(4) * 1.5 * pi2);
        let expected = 0.5 * p.epsilon.powi(2) * grad + well + 0.5 * p.alpha * grad;
        assert!((energy_bcp(&phi, &p) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn coupled_energy() {
        let g = grid();
        let p = ModelParams::default();
        let one = ScalarField::constant(&g, 1.0);
        let zero = ScalarField::zeros(&g);
        let u = VectorField::new(one.clone(), zero.clone()).unwrap();
        assert!((energy_coupled(&u, &one, &zero, &p) - 2.0 * PI * PI).abs() < 1e-12);

        let phi = ScalarField::from_fn(&g, |x, y| 0.2 * x.sin() * y.cos());
        let ua = phi.map(|v| v * v - 1.0);
        let p = ModelParams { lambda: 2.5, ..p };
        let e = energy_coupled(&VectorField::zeros(&g), &phi, &ua, &p);
        assert!((e - 2.5 * energy_quadratized(&phi, &ua, &p)).abs() < 1e-12);
    }

    #[test]
    fn ns_energy_reduces_without_flow() {
        let g = grid();
        let p = ModelParams { lambda: 0.5, ..Default::default() };
        let phi = ScalarField::from_fn(&g, |x, _| 0.1 * x.sin());
        let s = NsState::at_rest(phi, 0.0);
        let e = discrete_energy_ns(&s, &p, 0.1);
        assert!((e - 0.5 * s.phase.energy(&p)).abs() < 1e-13);
        assert!((discrete_energy_cn(&ScalarField::zeros(&g), &ScalarField::constant(&g, -1.0), &p) - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn history_rotation() {
        let g = grid();
        let mut s = BcpState::initial(ScalarField::constant(&g, 0.5), 0.0);
        assert!(!s.has_history());
        assert_eq!(s.u_aux_n.values()[0], -0.75);
        s.advance(ScalarField::constant(&g, 0.4), ScalarField::constant(&g, 0.1), 0.25);
        assert_eq!(s.phi_nm1.values()[0], 0.5);
        assert_eq!(s.phi_n.values()[0], 0.4);
        assert_eq!(s.u_aux_nm1.values()[0], -0.75);
        assert_eq!(s.time, 0.25);
        assert!(s.has_history());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn quadratization_consistency(seed in any::<u64>(), amp in 0.01f64..2.0, alpha in 0.0f64..10.0) {
                let g = Grid2D::square(16).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let phi = ScalarField::from_fn(&g, |_, _| amp * rng.random_range(-1.0..1.0));
                let ua = phi.map(|v| v * v - 1.0);
                let p = ModelParams { alpha, ..Default::default() };
                let e0 = energy_bcp(&phi, &p);
                let e1 = energy_quadratized(&phi, &ua, &p);
                prop_assert!(e0 >= 0.0 && e1 >= 0.0);
                prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1.0));
            }
        }
    }
}
