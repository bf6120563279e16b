use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LinearOperator;
use crate::error::KrylovError;
use crate::spectral::dot;

/// Outcome of one Krylov solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual ‖b − A x‖ / ‖b‖ of the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
}

impl SolveReport {
    fn trivial() -> Self {
        Self {
            iterations: 0,
            final_residual: 0.0,
            converged: true,
        }
    }
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after {} iterations (relative residual {:.3e})",
            if self.converged { "converged" } else { "not converged" },
            self.iterations,
            self.final_residual
        )
    }
}

/// Which Krylov method a stepper uses for its coupled solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovMethod {
    Pcg,
    /// Restarted GMRES with right preconditioning.
    Gmres { restart: usize },
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn check_dims(op: &dyn LinearOperator, v: &[f64]) -> Result<(), KrylovError> {
    if v.len() != op.dim() {
        return Err(KrylovError::DimensionMismatch {
            expected: op.dim(),
            found: v.len(),
        });
    }
    Ok(())
}

fn residual(op: &dyn LinearOperator, rhs: &[f64], x: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
}

/// Preconditioned conjugate gradients for a self-adjoint positive definite
/// `op` and preconditioner.
///
/// Exhausting `max_iter` is not an error: the best iterate comes back with
/// `converged = false`. Non-finite arithmetic aborts.
pub fn pcg_solve(
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    initial_guess: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport), KrylovError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(KrylovError::BadTolerance(tol));
    }
    check_dims(op, rhs)?;
    check_dims(precond, rhs)?;
    let n = rhs.len();
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveReport::trivial()));
    }
    if !b_norm.is_finite() {
        return Err(KrylovError::NonFinite { iteration: 0 });
    }
    let mut x = match initial_guess {
        Some(x0) => {
            check_dims(op, x0)?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    residual(op, rhs, &x, &mut r);
    let mut rel = norm(&r) / b_norm;
    if rel <= tol {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                final_residual: rel,
                converged: true,
            },
        ));
    }

    let mut z = precond.apply_vec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rz.is_finite() {
            return Err(KrylovError::NonFinite { iteration: iterations });
        }
        if pap <= 0.0 {
            // Breakdown: the operator is not positive on this direction.
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        rel = norm(&r) / b_norm;
        if !rel.is_finite() {
            return Err(KrylovError::NonFinite { iteration: iterations });
        }
        if rel <= tol {
            // Guard against drift of the recursive residual.
            residual(op, rhs, &x, &mut r);
            rel = norm(&r) / b_norm;
            if rel <= tol {
                return Ok((
                    x,
                    SolveReport {
                        iterations,
                        final_residual: rel,
                        converged: true,
                    },
                ));
            }
            precond.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    residual(op, rhs, &x, &mut r);
    rel = norm(&r) / b_norm;
    Ok((
        x,
        SolveReport {
            iterations,
            final_residual: rel,
            converged: rel <= tol,
        },
    ))
}

/// Multiple of machine epsilon·‖b‖ below which a residual is rounding noise.
const ROUNDOFF_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Solve `op x = rhs` as a correction to `guess`: A δ = rhs − A·guess from a
/// zero start, with `tol` relative to the initial residual. The effective
/// tolerance never drops below the rounding level of ‖rhs‖.
pub fn solve_from_guess(
    method: KrylovMethod,
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    guess: &[f64],
) -> Result<(Vec<f64>, SolveReport), KrylovError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(KrylovError::BadTolerance(tol));
    }
    check_dims(op, rhs)?;
    check_dims(op, guess)?;
    let mut r0 = vec![0.0; rhs.len()];
    residual(op, rhs, guess, &mut r0);
    let (b_norm, r_norm) = (norm(rhs), norm(&r0));
    if !(b_norm.is_finite() && r_norm.is_finite()) {
        return Err(KrylovError::NonFinite { iteration: 0 });
    }
    let tol_eff = tol.max(ROUNDOFF_FLOOR * b_norm / r_norm);
    if r_norm == 0.0 || tol_eff >= 1.0 {
        return Ok((
            guess.to_vec(),
            SolveReport {
                iterations: 0,
                final_residual: if b_norm > 0.0 { r_norm / b_norm } else { 0.0 },
                converged: true,
            },
        ));
    }
    let (delta, report) = match method {
        KrylovMethod::Pcg => pcg_solve(op, &r0, precond, tol_eff, max_iter, None)?,
        KrylovMethod::Gmres { restart } => gmres_solve(op, &r0, precond, tol_eff, max_iter, restart, None)?,
    };
    let x = guess.iter().zip(&delta).map(|(g, d)| g + d).collect();
    Ok((x, report))
}

/// Restarted GMRES with right preconditioning; minimizes the true residual
/// over each Krylov cycle. `max_iter` counts inner iterations.
pub fn gmres_solve(
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    restart: usize,
    initial_guess: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport), KrylovError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(KrylovError::BadTolerance(tol));
    }
    check_dims(op, rhs)?;
    check_dims(precond, rhs)?;
    let n = rhs.len();
    let m = restart.max(1);
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveReport::trivial()));
    }
    if !b_norm.is_finite() {
        return Err(KrylovError::NonFinite { iteration: 0 });
    }
    let mut x = match initial_guess {
        Some(x0) => {
            check_dims(op, x0)?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    let mut iterations = 0;
    let mut w = vec![0.0; n];

    loop {
        residual(op, rhs, &x, &mut r);
        let beta = norm(&r);
        let rel = beta / b_norm;
        if !rel.is_finite() {
            return Err(KrylovError::NonFinite { iteration: iterations });
        }
        if rel <= tol || iterations >= max_iter {
            return Ok((
                x,
                SolveReport {
                    iterations,
                    final_residual: rel,
                    converged: rel <= tol,
                },
            ));
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns after Givens rotation (upper triangular).
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < max_iter {
            iterations += 1;
            let z = precond.apply_vec(&basis[k]);
            op.apply(&z, &mut w);
            let mut col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                col[i] = hij;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hij * vi;
                }
            }
            let h_next = norm(&w);
            col[k + 1] = h_next;
            if !h_next.is_finite() {
                return Err(KrylovError::NonFinite { iteration: iterations });
            }
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[k] / denom, col[k + 1] / denom) };
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            k += 1;
            if h_next == 0.0 || g[k].abs() / b_norm <= tol {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }
        // Back substitution for the cycle's coefficients.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in (i + 1)..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (u, vi) in update.iter_mut().zip(v) {
                *u += yi * vi;
            }
        }
        let dz = precond.apply_vec(&update);
        for (xi, d) in x.iter_mut().zip(&dz) {
            *xi += d;
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Largest relative asymmetry |(Ax, y) − (x, Ay)| / (‖Ax‖‖y‖) over `pairs`
/// seeded random vector pairs.
pub fn symmetry_defect(op: &dyn LinearOperator, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x = random_vector(&mut rng, n);
        let y = random_vector(&mut rng, n);
        let ax = op.apply_vec(&x);
        let ay = op.apply_vec(&y);
        let scale = (norm(&ax) * norm(&y)).max(norm(&ay) * norm(&x));
        if scale > 0.0 {
            worst = worst.max((dot(&ax, &y) - dot(&x, &ay)).abs() / scale);
        }
    }
    worst
}

/// Smallest Rayleigh quotient (Ax, x)/(x, x) over `samples` seeded random vectors.
pub fn positivity_margin(op: &dyn LinearOperator, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.dim();
    (0..samples)
        .map(|_| {
            let x = random_vector(&mut rng, n);
            dot(&op.apply_vec(&x), &x) / dot(&x, &x)
        })
        .fold(f64::INFINITY, f64::min)
}
