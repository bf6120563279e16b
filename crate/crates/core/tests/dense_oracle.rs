//! Every stepper against a direct dense solve of its unreduced linear system.
//!
//! Differentiation matrices are built from explicit trigonometric sums, not
//! from the FFT, and the systems keep the auxiliary unknowns (w, U and, for
//! the coupled scheme, the intermediate velocity) that the steppers
//! eliminate.

use nalgebra::{DMatrix, DVector};
use pfbcp::scheme_bcp::{step_bdf2, step_cn, step_cn_electric, step_first_order, SchemeOptions, StepOutput};
use pfbcp::scheme_ns::{step2_projection, NsForcing, NsStepper};
use pfbcp::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-8;

struct Ops {
    n: usize,
    lap: DMatrix<f64>,
    inv_lap: DMatrix<f64>,
    dx: DMatrix<f64>,
    dy: DMatrix<f64>,
    dxx: DMatrix<f64>,
}

/// Dense matrix of the translation-invariant operator with Fourier symbol
/// `re + i·im` on an n×n grid over [0, 2π)², nodal index j·n + i.
fn from_symbol(n: usize, symbol: impl Fn(i64, i64) -> (f64, f64)) -> DMatrix<f64> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let half = n as i64 / 2;
    let modes: Vec<i64> = (-half..half).collect();
    let mut kernel = vec![0.0; n * n];
    for dj in 0..n {
        for di in 0..n {
            let mut acc = 0.0;
            for &my in &modes {
                for &mx in &modes {
                    let (re, im) = symbol(mx, my);
                    let theta = h * (mx as f64 * di as f64 + my as f64 * dj as f64);
                    acc += re * theta.cos() - im * theta.sin();
                }
            }
            kernel[dj * n + di] = acc / (n * n) as f64;
        }
    }
    DMatrix::from_fn(n * n, n * n, |r, c| {
        let (ri, rj) = (r % n, r / n);
        let (ci, cj) = (c % n, c / n);
        kernel[((rj + n - cj) % n) * n + (ri + n - ci) % n]
    })
}

impl Ops {
    fn new(n: usize) -> Self {
        let nyq = n as i64 / 2;
        let first = |m: i64| if m.abs() == nyq { 0.0 } else { m as f64 };
        Ops {
            n,
            lap: from_symbol(n, |a, b| (-((a * a + b * b) as f64), 0.0)),
            inv_lap: from_symbol(n, |a, b| {
                let k2 = (a * a + b * b) as f64;
                (if k2 > 0.0 { 1.0 / k2 } else { 0.0 }, 0.0)
            }),
            dx: from_symbol(n, |a, _| (0.0, first(a))),
            dy: from_symbol(n, |_, b| (0.0, first(b))),
            dxx: from_symbol(n, |a, _| (-((a * a) as f64), 0.0)),
        }
    }

    fn size(&self) -> usize {
        self.n * self.n
    }
}

fn diag(f: &ScalarField) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(f.values()))
}

fn vecf(f: &ScalarField) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

fn smooth_field(g: &Grid2D, rng: &mut ChaCha8Rng, mean: f64, amp: f64) -> ScalarField {
    let kmax = (g.nx() / 2 - 1).min(3) as i32;
    let mut terms = vec![];
    for a in -kmax..=kmax {
        for b in 0..=kmax {
            terms.push((a as f64, b as f64, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    let scale = amp / (terms.len() as f64).sqrt();
    ScalarField::from_fn(g, |x, y| {
        mean + scale * terms.iter().map(|(a, b, c, s)| c * (a * x + b * y).cos() + s * (a * x + b * y).sin()).sum::<f64>()
    })
}

fn rel_err(a: &DVector<f64>, b: &[f64]) -> f64 {
    let b = DVector::from_column_slice(b);
    (a - &b).norm() / a.norm().max(1e-300)
}

fn params() -> ModelParams {
    ModelParams {
        epsilon: 0.2,
        alpha: 0.7,
        mobility: 0.5,
        lambda: 1.3,
        nu: 0.4,
        beta: 0.0,
    }
}

/// Place `m` into block (r, c) of a square block matrix with block size `s`.
fn put(big: &mut DMatrix<f64>, r: usize, c: usize, s: usize, m: &DMatrix<f64>) {
    let mut view = big.view_mut((r * s, c * s), (s, s));
    view += m;
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Cn,
    Electric,
    Bdf2,
    FirstOrder,
}

/// Direct solve of the three-field (φ, w, U) system of one phase-field step.
fn dense_bcp(ops: &Ops, kind: Kind, st: &BcpState, p: &ModelParams, dt: f64, src: &ScalarField) -> DVector<f64> {
    let s = ops.size();
    let id = DMatrix::<f64>::identity(s, s);
    let (phi_n, phi_m) = (vecf(&st.phi_n), vecf(&st.phi_nm1));
    let (u_n, u_m) = (vecf(&st.u_aux_n), vecf(&st.u_aux_nm1));
    let eps2 = p.epsilon * p.epsilon;
    let mut a = DMatrix::<f64>::zeros(3 * s, 3 * s);
    let mut b = DVector::<f64>::zeros(3 * s);
    let lin = &ops.lap * (-eps2) + &ops.inv_lap * p.alpha;
    match kind {
        Kind::Cn | Kind::Electric => {
            let beta = if matches!(kind, Kind::Electric) { p.beta } else { 0.0 };
            let star = st.phi_n.zip_map(&st.phi_nm1, |a, b| 1.5 * a - 0.5 * b);
            let ds = diag(&star);
            // (φ − φⁿ)/δt − MΔw − β∂xx(φ + φⁿ)/2 = s
            put(&mut a, 0, 0, s, &(&id / dt - &ops.dxx * (beta / 2.0)));
            put(&mut a, 0, 1, s, &(&ops.lap * -p.mobility));
            b.rows_mut(0, s).copy_from(&(&phi_n / dt + &ops.dxx * &phi_n * (beta / 2.0) + vecf(src)));
            // w − lin(φ)/2 − φ*U/2 = lin(φⁿ)/2 + φ*Uⁿ/2
            put(&mut a, 1, 0, s, &(&lin * -0.5));
            put(&mut a, 1, 1, s, &id);
            put(&mut a, 1, 2, s, &(&ds * -0.5));
            b.rows_mut(s, s).copy_from(&((&lin * &phi_n + &ds * &u_n) * 0.5));
            // U − 2φ*φ = Uⁿ − 2φ*φⁿ
            put(&mut a, 2, 0, s, &(&ds * -2.0));
            put(&mut a, 2, 2, s, &id);
            b.rows_mut(2 * s, s).copy_from(&(&u_n - &ds * &phi_n * 2.0));
        }
        Kind::Bdf2 => {
            let dag = st.phi_n.zip_map(&st.phi_nm1, |a, b| 2.0 * a - b);
            let dd = diag(&dag);
            let hist = &phi_n * 4.0 - &phi_m;
            put(&mut a, 0, 0, s, &(&id * (1.5 / dt)));
            put(&mut a, 0, 1, s, &(&ops.lap * -p.mobility));
            b.rows_mut(0, s).copy_from(&(&hist / (2.0 * dt) + vecf(src)));
            put(&mut a, 1, 0, s, &(-&lin));
            put(&mut a, 1, 1, s, &id);
            put(&mut a, 1, 2, s, &(-&dd));
            put(&mut a, 2, 0, s, &(&dd * -6.0));
            put(&mut a, 2, 2, s, &(&id * 3.0));
            b.rows_mut(2 * s, s).copy_from(&(&u_n * 4.0 - &u_m - &dd * &hist * 2.0));
        }
        Kind::FirstOrder => {
            let dn = diag(&st.phi_n);
            put(&mut a, 0, 0, s, &(&id / dt));
            put(&mut a, 0, 1, s, &(&ops.lap * -p.mobility));
            b.rows_mut(0, s).copy_from(&(&phi_n / dt + vecf(src)));
            put(&mut a, 1, 0, s, &(-&lin));
            put(&mut a, 1, 1, s, &id);
            put(&mut a, 1, 2, s, &(-&dn));
            put(&mut a, 2, 0, s, &(&dn * -2.0));
            put(&mut a, 2, 2, s, &id);
            b.rows_mut(2 * s, s).copy_from(&(&u_n - &dn * &phi_n * 2.0));
        }
    }
    a.lu().solve(&b).expect("dense system is nonsingular")
}

fn check_bcp(n: usize, kind: Kind, seed: u64) -> f64 {
    let g = Grid2D::square(n).unwrap();
    let ops = Ops::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = ModelParams {
        beta: if matches!(kind, Kind::Electric) { 0.3 } else { 0.0 },
        ..params()
    };
    let dt = 0.05;
    let opts = SchemeOptions::default().with_tol(1e-13);
    let mut st = BcpState::initial(smooth_field(&g, &mut rng, 0.1, 0.8), 0.0);
    if !matches!(kind, Kind::FirstOrder) {
        step_first_order(&st, &p, dt, None, &opts).unwrap().commit(&mut st);
    }
    let src = smooth_field(&g, &mut rng, 0.05, 0.5);
    let source = |_t: f64| src.clone();
    let f: Option<&dyn Fn(f64) -> ScalarField> = Some(&source);
    let out: StepOutput = match kind {
        Kind::Cn => step_cn(&st, &p, dt, f, &opts),
        Kind::Electric => step_cn_electric(&st, &p, dt, f, &opts),
        Kind::Bdf2 => step_bdf2(&st, &p, dt, f, &opts),
        Kind::FirstOrder => step_first_order(&st, &p, dt, f, &opts),
    }
    .unwrap();
    let x = dense_bcp(&ops, kind, &st, &p, dt, &src);
    let s = ops.size();
    let e_phi = rel_err(&x.rows(0, s).into(), out.phi_next.values());
    let e_w = rel_err(&x.rows(s, s).into(), out.chemical_potential.values());
    let e_u = rel_err(&x.rows(2 * s, s).into(), out.u_aux_next.values());
    e_phi.max(e_w).max(e_u)
}

/// Block of the skew advection operator v ↦ B(a, v) on one component.
fn advection_block(ops: &Ops, a: &VectorField) -> DMatrix<f64> {
    let (ax, ay) = (diag(&a.x), diag(&a.y));
    (&ax * &ops.dx + &ay * &ops.dy + &ops.dx * &ax + &ops.dy * &ay) * 0.5
}

/// Direct solve of the five-field (φ, w, U, ũx, ũy) coupled step.
fn dense_ns(ops: &Ops, st: &NsState, p: &ModelParams, dt: f64, s_phi: &ScalarField, s_u: &VectorField) -> DVector<f64> {
    let s = ops.size();
    let id = DMatrix::<f64>::identity(s, s);
    let ph = &st.phase;
    let star = ph.phi_n.zip_map(&ph.phi_nm1, |a, b| 1.5 * a - 0.5 * b);
    let ustar = VectorField {
        x: st.velocity_n.x.zip_map(&st.velocity_nm1.x, |a, b| 1.5 * a - 0.5 * b),
        y: st.velocity_n.y.zip_map(&st.velocity_nm1.y, |a, b| 1.5 * a - 0.5 * b),
    };
    let ds = diag(&star);
    let (phi_n, u_n) = (vecf(&ph.phi_n), vecf(&ph.u_aux_n));
    let (vx, vy) = (vecf(&st.velocity_n.x), vecf(&st.velocity_n.y));
    let (px, py) = (&ops.dx * vecf(&st.pressure_n), &ops.dy * vecf(&st.pressure_n));
    let lin = (&ops.lap * (-p.epsilon * p.epsilon) + &ops.inv_lap * p.alpha) * p.lambda;
    let adv = advection_block(ops, &ustar);
    let visc = &id / dt + &adv * 0.5 - &ops.lap * (p.nu / 2.0);
    let visc_rhs = &id / dt - &adv * 0.5 + &ops.lap * (p.nu / 2.0);
    let (fx, fy) = (&ops.dx * &ds * 0.5, &ops.dy * &ds * 0.5);

    let mut a = DMatrix::<f64>::zeros(5 * s, 5 * s);
    let mut b = DVector::<f64>::zeros(5 * s);
    // (φ − φⁿ)/δt + ∇·(φ* ũ^{½}) − MΔw = s_φ
    put(&mut a, 0, 0, s, &(&id / dt));
    put(&mut a, 0, 1, s, &(&ops.lap * -p.mobility));
    put(&mut a, 0, 3, s, &fx);
    put(&mut a, 0, 4, s, &fy);
    b.rows_mut(0, s).copy_from(&(&phi_n / dt - &fx * &vx - &fy * &vy + vecf(s_phi)));
    // w − λ[lin(φ)/2 + φ*U/2] = λ[lin(φⁿ)/2 + φ*Uⁿ/2]
    put(&mut a, 1, 0, s, &(&lin * -0.5));
    put(&mut a, 1, 1, s, &id);
    put(&mut a, 1, 2, s, &(&ds * (-0.5 * p.lambda)));
    b.rows_mut(s, s).copy_from(&((&lin * &phi_n + &ds * &u_n * p.lambda) * 0.5));
    put(&mut a, 2, 0, s, &(&ds * -2.0));
    put(&mut a, 2, 2, s, &id);
    b.rows_mut(2 * s, s).copy_from(&(&u_n - &ds * &phi_n * 2.0));
    // ũ/δt + B(u*, ũ)/2 − νΔũ/2 + φ*∇w = (...)uⁿ − ∇pⁿ + s_u
    put(&mut a, 3, 3, s, &visc);
    put(&mut a, 3, 1, s, &(&ds * &ops.dx));
    b.rows_mut(3 * s, s).copy_from(&(&visc_rhs * &vx - &px + vecf(&s_u.x)));
    put(&mut a, 4, 4, s, &visc);
    put(&mut a, 4, 1, s, &(&ds * &ops.dy));
    b.rows_mut(4 * s, s).copy_from(&(&visc_rhs * &vy - &py + vecf(&s_u.y)));
    a.lu().solve(&b).expect("dense coupled system is nonsingular")
}

fn check_ns(n: usize, seed: u64) -> f64 {
    let g = Grid2D::square(n).unwrap();
    let ops = Ops::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params();
    let dt = 0.05;
    let opts = SchemeOptions::default().with_tol(1e-13);
    let vel = VectorField {
        x: smooth_field(&g, &mut rng, 0.0, 0.5),
        y: smooth_field(&g, &mut rng, 0.0, 0.5),
    };
    let (vel, _) = step2_projection(&vel, &ScalarField::zeros(&g), 1.0);
    let pres = smooth_field(&g, &mut rng, 0.0, 0.3);
    let mut st = NsState::initial(smooth_field(&g, &mut rng, 0.1, 0.8), vel, pres, 0.0);
    let mut stepper = NsStepper::new(p, dt, opts);
    stepper.step(&st, None).unwrap().commit(&mut st);

    let s_phi = smooth_field(&g, &mut rng, 0.02, 0.3);
    let s_u = VectorField {
        x: smooth_field(&g, &mut rng, 0.1, 0.3),
        y: smooth_field(&g, &mut rng, -0.1, 0.3),
    };
    let (fp, fu) = (|_t: f64| s_phi.clone(), |_t: f64| s_u.clone());
    let forcing = NsForcing {
        phase: &fp,
        momentum: &fu,
    };
    let out = stepper.step(&st, Some(&forcing)).unwrap();
    let x = dense_ns(&ops, &st, &p, dt, &s_phi, &s_u);
    let s = ops.size();
    let errs = [
        rel_err(&x.rows(0, s).into(), out.phi_next.values()),
        rel_err(&x.rows(s, s).into(), out.chemical_potential.values()),
        rel_err(&x.rows(2 * s, s).into(), out.u_aux_next.values()),
        rel_err(&x.rows(3 * s, s).into(), out.intermediate_velocity.x.values()),
        rel_err(&x.rows(4 * s, s).into(), out.intermediate_velocity.y.values()),
    ];

    // Projection: Δ̃q = (2/δt)∇·ũ, Δ̃ = Dx² + Dy², with q free of the
    // kernel of Δ̃, the modes where both derivative symbols vanish.
    let ut = (x.rows(3 * s, s).into_owned(), x.rows(4 * s, s).into_owned());
    let div = &ops.dx * &ut.0 + &ops.dy * &ut.1;
    let nyq = n as i64 / 2;
    let kernel = from_symbol(n, |a, b| {
        let null = (a == 0 || a.abs() == nyq) && (b == 0 || b.abs() == nyq);
        (if null { 1.0 } else { 0.0 }, 0.0)
    });
    let lap_t = &ops.dx * &ops.dx + &ops.dy * &ops.dy + kernel;
    let q = lap_t.lu().solve(&(div * (2.0 / dt))).unwrap();
    let u_next = &ut.0 - &ops.dx * &q * (dt / 2.0);
    let v_next = &ut.1 - &ops.dy * &q * (dt / 2.0);
    let p_next = vecf(&st.pressure_n) + &q;
    let proj = [
        rel_err(&u_next, out.velocity_next.x.values()),
        rel_err(&v_next, out.velocity_next.y.values()),
        rel_err(&p_next, out.pressure_next.values()),
    ];
    errs.iter().chain(&proj).fold(0.0, |m, e| m.max(*e))
}

/// Largest relative deviation over every stepper on an n×n grid.
pub fn worst_error(n: usize) -> f64 {
    let kinds = [Kind::Cn, Kind::Electric, Kind::Bdf2, Kind::FirstOrder];
    let phase = kinds.iter().flat_map(|&k| [1, 2].map(|seed| check_bcp(n, k, seed)));
    phase.chain([check_ns(n, 11)]).fold(0.0, f64::max)
}

#[test]
fn symbol_matrices_match_spectral_operators() {
    let g = Grid2D::square(8).unwrap();
    let ops = Ops::new(8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = ScalarField::from_fn(&g, |_, _| rng.random_range(-1.0..1.0));
    let v = vecf(&f);
    assert!(rel_err(&(&ops.lap * &v), f.laplacian().values()) < 1e-12);
    assert!(rel_err(&(&ops.inv_lap * &v), f.inverse_laplacian().values()) < 1e-12);
    assert!(rel_err(&(&ops.dx * &v), f.partial_x().values()) < 1e-12);
    assert!(rel_err(&(&ops.dy * &v), f.partial_y().values()) < 1e-12);
    assert!(rel_err(&(&ops.dxx * &v), f.partial_xx().values()) < 1e-12);
}

#[test]
fn phase_steppers_match_dense_solve() {
    for n in [8, 16] {
        for kind in [Kind::Cn, Kind::Electric, Kind::Bdf2, Kind::FirstOrder] {
            for seed in [1, 2] {
                let e = check_bcp(n, kind, seed);
                assert!(e < TOL, "{kind:?} n = {n} seed {seed}: relative error {e:e}");
            }
        }
    }
}

#[test]
fn coupled_step_matches_dense_solve() {
    for n in [8, 16] {
        let e = check_ns(n, 11);
        assert!(e < TOL, "coupled n = {n}: relative error {e:e}");
    }
}
