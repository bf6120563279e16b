//! Fourier-pseudospectral operators on a uniform doubly periodic grid.
//!
//! Nodal samples are stored row-major with `y` as the outer index and `x` as
//! the inner index, so sample `(i, j)` sits at `j * nx + i`. Spectra produced
//! by [`Grid2D::forward`] are stored transposed (`i * ny + j`): only diagonal
//! multipliers ever act on them, so the layout never leaks out of this module.
//!
//! Wavenumber conventions:
//! * second-order symbols (`laplacian`, `inverse_laplacian`, `partial_xx`) use
//!   the full table, Nyquist included;
//! * first-order symbols (`gradient`, `divergence`) zero the Nyquist column and
//!   row so the derivative matrices are real and skew-symmetric.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::GridError;

/// Periodic collocation grid with cached FFT plans.
///
/// Cloning is cheap: the wavenumber tables and plans are shared.
#[derive(Clone)]
pub struct Grid2D {
    inner: Arc<GridInner>,
}

struct GridInner {
    nx: usize,
    ny: usize,
    length_x: f64,
    length_y: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kx_deriv: Vec<f64>,
    ky_deriv: Vec<f64>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let scale = 2.0 * PI / length;
    (0..n)
        .map(|j| {
            let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            k * scale
        })
        .collect()
}

impl Grid2D {
    /// Grid on `[0, 2π]²`.
    pub fn new(nx: usize, ny: usize) -> Result<Self, GridError> {
        Self::with_extent(nx, ny, 2.0 * PI, 2.0 * PI)
    }

    pub fn square(n: usize) -> Result<Self, GridError> {
        Self::new(n, n)
    }

    pub fn with_extent(nx: usize, ny: usize, length_x: f64, length_y: f64) -> Result<Self, GridError> {
        for n in [nx, ny] {
            if n < 4 || n % 2 != 0 {
                return Err(GridError::BadSize(n));
            }
        }
        for l in [length_x, length_y] {
            if !(l.is_finite() && l > 0.0) {
                return Err(GridError::BadExtent(l));
            }
        }
        let kx = wavenumbers(nx, length_x);
        let ky = wavenumbers(ny, length_y);
        let mut kx_deriv = kx.clone();
        kx_deriv[nx / 2] = 0.0;
        let mut ky_deriv = ky.clone();
        ky_deriv[ny / 2] = 0.0;

        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(nx);
        let ifft_x = planner.plan_fft_inverse(nx);
        let fft_y = planner.plan_fft_forward(ny);
        let ifft_y = planner.plan_fft_inverse(ny);
        let scratch_len = [&fft_x, &ifft_x, &fft_y, &ifft_y]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);

        Ok(Self {
            inner: Arc::new(GridInner {
                nx,
                ny,
                length_x,
                length_y,
                kx,
                ky,
                kx_deriv,
                ky_deriv,
                fft_x,
                ifft_x,
                fft_y,
                ifft_y,
                scratch_len,
            }),
        })
    }

    pub fn nx(&self) -> usize {
        self.inner.nx
    }

    pub fn ny(&self) -> usize {
        self.inner.ny
    }

    pub fn length_x(&self) -> f64 {
        self.inner.length_x
    }

    pub fn length_y(&self) -> f64 {
        self.inner.length_y
    }

    /// Number of collocation points.
    pub fn len(&self) -> usize {
        self.inner.nx * self.inner.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// |Ω|.
    pub fn area(&self) -> f64 {
        self.inner.length_x * self.inner.length_y
    }

    /// Quadrature weight of one node.
    pub fn cell_area(&self) -> f64 {
        self.area() / self.len() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.inner.length_x / self.inner.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.inner.length_y / self.inner.ny as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.inner.nx + i
    }

    /// Wavenumber table in x (Nyquist entry kept).
    pub fn kx(&self) -> &[f64] {
        &self.inner.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.inner.ky
    }

    /// Same grid shape and extent.
    pub fn same_as(&self, other: &Grid2D) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.nx == other.inner.nx
                && self.inner.ny == other.inner.ny
                && self.inner.length_x == other.inner.length_x
                && self.inner.length_y == other.inner.length_y)
    }

    /// Unnormalized forward transform into the transposed spectral layout.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let g = &*self.inner;
        assert_eq!(values.len(), self.len(), "field length does not match grid");
        let mut rows: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch = vec![Complex64::default(); g.scratch_len];
        g.fft_x.process_with_scratch(&mut rows, &mut scratch);
        let mut cols = vec![Complex64::default(); rows.len()];
        transpose(&rows, &mut cols, g.ny, g.nx);
        g.fft_y.process_with_scratch(&mut cols, &mut scratch);
        cols
    }

    /// Inverse of [`Grid2D::forward`], including the `1/N` normalization.
    /// The imaginary part is discarded.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        let g = &*self.inner;
        assert_eq!(spectrum.len(), self.len(), "spectrum length does not match grid");
        let mut scratch = vec![Complex64::default(); g.scratch_len];
        g.ifft_y.process_with_scratch(&mut spectrum, &mut scratch);
        let mut rows = vec![Complex64::default(); spectrum.len()];
        transpose(&spectrum, &mut rows, g.nx, g.ny);
        g.ifft_x.process_with_scratch(&mut rows, &mut scratch);
        let norm = 1.0 / self.len() as f64;
        rows.into_iter().map(|c| c.re * norm).collect()
    }

    /// Multiply every mode of `spectrum` by `symbol(kx, ky)` using the full
    /// (Nyquist-kept) wavenumbers.
    pub fn scale_modes(&self, spectrum: &mut [Complex64], symbol: impl Fn(f64, f64) -> f64) {
        let g = &*self.inner;
        for (i, &kx) in g.kx.iter().enumerate() {
            let row = &mut spectrum[i * g.ny..(i + 1) * g.ny];
            for (c, &ky) in row.iter_mut().zip(g.ky.iter()) {
                *c *= symbol(kx, ky);
            }
        }
    }

    /// Tabulate `symbol(kx, ky)` in spectral layout for repeated use with
    /// [`Grid2D::scale_by_table`].
    pub fn symbol_table(&self, symbol: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let g = &*self.inner;
        let mut out = Vec::with_capacity(self.len());
        for &kx in &g.kx {
            for &ky in &g.ky {
                out.push(symbol(kx, ky));
            }
        }
        out
    }

    pub fn scale_by_table(&self, spectrum: &mut [Complex64], table: &[f64]) {
        for (c, &s) in spectrum.iter_mut().zip(table) {
            *c *= s;
        }
    }

    /// Apply a real even Fourier multiplier to nodal values.
    pub fn apply_symbol(&self, values: &[f64], symbol: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut spec = self.forward(values);
        self.scale_modes(&mut spec, symbol);
        self.inverse(spec)
    }

    fn derivative_spectrum(&self, spectrum: &[Complex64], axis: Axis) -> Vec<Complex64> {
        let g = &*self.inner;
        let mut out = spectrum.to_vec();
        for i in 0..g.nx {
            for j in 0..g.ny {
                let k = match axis {
                    Axis::X => g.kx_deriv[i],
                    Axis::Y => g.ky_deriv[j],
                };
                let c = &mut out[i * g.ny + j];
                *c = Complex64::new(-k * c.im, k * c.re);
            }
        }
        out
    }

    /// Spectral quadratic forms of one field, computed from a single transform.
    pub fn spectral_sums(&self, values: &[f64]) -> SpectralSums {
        let g = &*self.inner;
        let spec = self.forward(values);
        let scale = self.area() / (self.len() as f64).powi(2);
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        let mut hm1 = 0.0;
        let mut grad = 0.0;
        for i in 0..g.nx {
            for j in 0..g.ny {
                let p = spec[i * g.ny + j].norm_sqr();
                let k2 = g.kx[i] * g.kx[i] + g.ky[j] * g.ky[j];
                let kd2 = g.kx_deriv[i] * g.kx_deriv[i] + g.ky_deriv[j] * g.ky_deriv[j];
                l2 += p;
                h1 += k2 * p;
                grad += kd2 * p;
                if k2 > 0.0 {
                    hm1 += p / k2;
                }
            }
        }
        SpectralSums {
            l2_sq: l2 * scale,
            h1_sq: h1 * scale,
            grad_sq: grad * scale,
            inverse_laplacian_sq: hm1 * scale,
        }
    }
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("nx", &self.inner.nx)
            .field("ny", &self.inner.ny)
            .field("length_x", &self.inner.length_x)
            .field("length_y", &self.inner.length_y)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

/// Quadratic forms evaluated in Fourier space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSums {
    /// ‖f‖².
    pub l2_sq: f64,
    /// (−Δf, f), Nyquist kept: the seminorm paired with [`ScalarField::laplacian`].
    pub h1_sq: f64,
    /// ‖∇f‖² with the first-derivative (Nyquist-free) gradient.
    pub grad_sq: f64,
    /// ‖∇(−Δ)⁻¹(f − f̄)‖² = ((−Δ)⁻¹f, f).
    pub inverse_laplacian_sq: f64,
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Real nodal field on a [`Grid2D`].
#[derive(Clone)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("grid", &self.grid)
            .field("mean", &self.mean())
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl ScalarField {
    pub fn new(grid: &Grid2D, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(pos));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    /// Build without the finiteness scan; callers guarantee the length.
    pub(crate) fn from_vec(grid: &Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid2D, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.len()])
    }

    /// Sample `f(x, y)` at the collocation points.
    pub fn from_fn(grid: &Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        Self::from_vec(grid, values)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        self.check_grid(other);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_vec(&self.grid, values)
    }

    /// Pointwise product.
    pub fn mul_nodal(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &ScalarField) {
        self.check_grid(x);
        for (s, &v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    fn check_grid(&self, other: &ScalarField) {
        assert!(self.grid.same_as(&other.grid), "fields live on different grids");
    }

    fn with_symbol(&self, symbol: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_vec(&self.grid, self.grid.apply_symbol(&self.values, symbol))
    }

    /// Δf: coefficient k multiplied by −|k|².
    pub fn laplacian(&self) -> Self {
        self.with_symbol(|kx, ky| -(kx * kx + ky * ky))
    }

    /// Mean-zero solution v of −Δv = f − f̄.
    pub fn inverse_laplacian(&self) -> Self {
        self.with_symbol(|kx, ky| {
            let k2 = kx * kx + ky * ky;
            if k2 > 0.0 {
                1.0 / k2
            } else {
                0.0
            }
        })
    }

    pub fn partial_xx(&self) -> Self {
        self.with_symbol(|kx, _| -kx * kx)
    }

    pub fn gradient(&self) -> VectorField {
        let spec = self.grid.forward(&self.values);
        let dx = self.grid.derivative_spectrum(&spec, Axis::X);
        let dy = self.grid.derivative_spectrum(&spec, Axis::Y);
        VectorField {
            x: Self::from_vec(&self.grid, self.grid.inverse(dx)),
            y: Self::from_vec(&self.grid, self.grid.inverse(dy)),
        }
    }

    pub fn partial_x(&self) -> Self {
        let spec = self.grid.forward(&self.values);
        Self::from_vec(&self.grid, self.grid.inverse(self.grid.derivative_spectrum(&spec, Axis::X)))
    }

    pub fn partial_y(&self) -> Self {
        let spec = self.grid.forward(&self.values);
        Self::from_vec(&self.grid, self.grid.inverse(self.grid.derivative_spectrum(&spec, Axis::Y)))
    }

    /// Arithmetic mean with compensated summation.
    pub fn mean(&self) -> f64 {
        compensated_sum(&self.values) / self.values.len() as f64
    }

    /// f − f̄.
    pub fn mean_free(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// (f, g) with the uniform quadrature weight.
    ///
    /// # Panics
    /// If the fields live on different grids.
    pub fn inner_product(&self, other: &ScalarField) -> f64 {
        self.check_grid(other);
        dot(&self.values, &other.values) * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner_product(self).sqrt()
    }

    /// ‖∇f‖ with the Laplacian-consistent symbol, so ‖∇f‖² = (−Δf, f).
    pub fn h1_seminorm(&self) -> f64 {
        self.grid.spectral_sums(&self.values).h1_sq.max(0.0).sqrt()
    }

    pub fn spectral_sums(&self) -> SpectralSums {
        self.grid.spectral_sums(&self.values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

impl<'a> Add<&'a ScalarField> for &'a ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &'a ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a ScalarField> for &'a ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &'a ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|v| v * rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|v| -v)
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&ScalarField> for ScalarField {
    fn sub_assign(&mut self, rhs: &ScalarField) {
        self.axpy(-1.0, rhs);
    }
}

/// Pair of scalar fields on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self, GridError> {
        if !x.grid.same_as(&y.grid) {
            return Err(GridError::ComponentMismatch);
        }
        Ok(Self { x, y })
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn from_fns(grid: &Grid2D, fx: impl Fn(f64, f64) -> f64, fy: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            x: ScalarField::from_fn(grid, fx),
            y: ScalarField::from_fn(grid, fy),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.x.grid()
    }

    pub fn divergence(&self) -> ScalarField {
        let g = self.grid();
        let sx = g.derivative_spectrum(&g.forward(self.x.values()), Axis::X);
        let mut sy = g.derivative_spectrum(&g.forward(self.y.values()), Axis::Y);
        for (a, b) in sy.iter_mut().zip(sx) {
            *a += b;
        }
        ScalarField::from_vec(g, g.inverse(sy))
    }

    pub fn laplacian(&self) -> Self {
        Self {
            x: self.x.laplacian(),
            y: self.y.laplacian(),
        }
    }

    pub fn inner_product(&self, other: &VectorField) -> f64 {
        self.x.inner_product(&other.x) + self.y.inner_product(&other.y)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner_product(self).sqrt()
    }

    /// Laplacian-consistent ‖∇u‖, summed over components.
    pub fn h1_seminorm(&self) -> f64 {
        let sx = self.x.spectral_sums().h1_sq;
        let sy = self.y.spectral_sums().h1_sq;
        (sx + sy).max(0.0).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        self.x.axpy(a, &other.x);
        self.y.axpy(a, &other.y);
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            x: &self.x * a,
            y: &self.y * a,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }
}

impl<'a> Add<&'a VectorField> for &'a VectorField {
    type Output = VectorField;
    fn add(self, rhs: &'a VectorField) -> VectorField {
        VectorField {
            x: &self.x + &rhs.x,
            y: &self.y + &rhs.y,
        }
    }
}

impl<'a> Sub<&'a VectorField> for &'a VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &'a VectorField) -> VectorField {
        VectorField {
            x: &self.x - &rhs.x,
            y: &self.y - &rhs.y,
        }
    }
}

/// How nodal products are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Products {
    /// Plain collocation products.
    #[default]
    Nodal,
    /// 3/2-rule zero padding. Nyquist content of the factors is dropped
    /// and the result carries none, which keeps `(a∘b, c)` symmetric in all
    /// three arguments.
    Dealiased,
}

impl Products {
    pub fn mul(self, a: &ScalarField, b: &ScalarField) -> ScalarField {
        match self {
            Products::Nodal => a.mul_nodal(b),
            Products::Dealiased => dealiased_product(a, b),
        }
    }
}

fn dealiased_product(a: &ScalarField, b: &ScalarField) -> ScalarField {
    a.check_grid(b);
    let g = a.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (mx, my) = (3 * nx / 2, 3 * ny / 2);
    // Padded grids are always even since nx, ny are.
    let fine = Grid2D::with_extent(mx, my, g.length_x(), g.length_y()).expect("padded grid is valid");

    let pad = |values: &[f64]| -> Vec<f64> {
        let spec = g.forward(values);
        let mut out = vec![Complex64::default(); mx * my];
        for i in 0..nx {
            if i == nx / 2 {
                continue;
            }
            let fi = if i < nx / 2 { i } else { mx - (nx - i) };
            for j in 0..ny {
                if j == ny / 2 {
                    continue;
                }
                let fj = if j < ny / 2 { j } else { my - (ny - j) };
                out[fi * my + fj] = spec[i * ny + j];
            }
        }
        // Coarse coefficients carry a 1/N normalization on inverse; rescale to the fine grid.
        let s = (mx * my) as f64 / (nx * ny) as f64;
        for c in &mut out {
            *c *= s;
        }
        fine.inverse(out)
    };
    let fa = pad(a.values());
    let fb = pad(b.values());
    let prod: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let spec = fine.forward(&prod);
    let mut out = vec![Complex64::default(); nx * ny];
    let s = (nx * ny) as f64 / (mx * my) as f64;
    for i in 0..nx {
        if i == nx / 2 {
            continue;
        }
        let fi = if i < nx / 2 { i } else { mx - (nx - i) };
        for j in 0..ny {
            if j == ny / 2 {
                continue;
            }
            let fj = if j < ny / 2 { j } else { my - (ny - j) };
            out[i * ny + j] = spec[fi * my + fj] * s;
        }
    }
    ScalarField::from_vec(g, g.inverse(out))
}
