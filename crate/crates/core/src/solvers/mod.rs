//! Matrix-free Krylov solvers and the Fourier-diagonal preconditioners used by
//! the time steppers.
//!
//! Operators act on flat `f64` slices. Scalar problems use one field's nodal
//! values; the coupled flow problem stacks `[φ, u, v]` end to end.

mod krylov;
mod precond;

pub use krylov::{gmres_solve, pcg_solve, positivity_margin, solve_from_guess, symmetry_defect, KrylovMethod, SolveReport};
pub use precond::{bcp_step_preconditioner, ns_block_preconditioner, NsBlockPreconditioner, PhaseCoefficients, PhasePreconditioner};

/// A linear map `y = A x` on vectors of length [`LinearOperator::dim`].
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

/// Wrap a closure as an operator.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}
