//! Periodic uniform grids, complex grid functions and Fourier multipliers.
//!
//! The domain is the box `[-L, L)^n` with `N` points per axis. Values are
//! stored row-major with the last axis fastest. The discrete transform is
//! scaled so that `Σ|f|² hⁿ = Σ|f̂|²` holds exactly, which makes every
//! quadratic form below a plain sum over the spectral coefficients.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("points per axis must be even and at least 8, got {0}")]
    Points(usize),
    #[error("half-width must be positive and finite, got {0}")]
    HalfWidth(f64),
    #[error("expected {expected} values for the grid, got {found}")]
    Size { expected: usize, found: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    SpecMismatch,
    #[error("multiplier is not finite at lattice frequency index {0}")]
    NonFiniteMultiplier(usize),
    #[error("operator order must be positive, got {0}")]
    Order(f64),
    #[error("propagator order must lie in (0, 1], got {0}")]
    FlowOrder(f64),
}

/// Periodic uniform grid on `[-L, L)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if points < 8 || !points.is_multiple_of(2) {
            return Err(GridError::Points(points));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(GridError::HalfWidth(half_width));
        }
        Ok(Self {
            dim,
            points,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Total number of grid points `Nⁿ`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of grid index `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Signed frequency index of FFT slot `k`: `0, 1, …, N/2-1, -N/2, …, -1`.
    pub fn signed_mode(&self, k: usize) -> i64 {
        let n = self.points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Angular wavenumber `πk/L` of FFT slot `k`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        PI * self.signed_mode(k) as f64 / self.half_width
    }

    /// Per-axis indices of a flat index (unused axes are zero).
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.points, flat % self.points],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.points + idx[1],
        }
    }

    /// Position of a flat index (unused axes are zero).
    pub fn position(&self, flat: usize) -> [f64; 2] {
        let idx = self.multi_index(flat);
        match self.dim {
            1 => [self.coordinate(idx[0]), 0.0],
            _ => [self.coordinate(idx[0]), self.coordinate(idx[1])],
        }
    }

    pub fn radius(&self, flat: usize) -> f64 {
        let p = self.position(flat);
        p[0].hypot(p[1])
    }

    /// Frequency vector of a flat spectral index (unused axes are zero).
    pub fn frequency(&self, flat: usize) -> [f64; 2] {
        let idx = self.multi_index(flat);
        match self.dim {
            1 => [self.wavenumber(idx[0]), 0.0],
            _ => [self.wavenumber(idx[0]), self.wavenumber(idx[1])],
        }
    }

    /// `|ξ|²` for every spectral slot, in storage order.
    pub fn frequency_norm_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let xi = self.frequency(k);
                xi[0] * xi[0] + xi[1] * xi[1]
            })
            .collect()
    }

    /// Scale applied to the raw FFT so that Parseval holds with weight `hⁿ`.
    fn spectral_scale(&self) -> f64 {
        (self.spacing() / self.points as f64).powf(self.dim as f64 / 2.0)
    }
}

/// Complex-valued grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != spec.len() {
            return Err(GridError::Size {
                expected: spec.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|z| !z.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { spec, values })
    }

    /// Skips the finiteness scan; callers guarantee the length.
    pub(crate) fn from_parts(spec: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::from_parts(spec, vec![Complex64::new(0.0, 0.0); spec.len()])
    }

    pub fn constant(spec: GridSpec, c: Complex64) -> Self {
        Self::from_parts(spec, vec![c; spec.len()])
    }

    /// Samples `f` at every grid point; the closure receives `[x, y]`
    /// (with `y = 0` in one dimension).
    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 2]) -> Complex64) -> Result<Self, GridError> {
        let values = (0..spec.len()).map(|i| f(spec.position(i))).collect();
        Self::new(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Self::from_parts(self.spec, self.values.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| z * c)
    }

    pub fn scale_real(&self, c: f64) -> Field {
        self.map(|z| z * c)
    }

    fn check_spec(&self, other: &Field) -> Result<(), GridError> {
        if self.spec != other.spec {
            return Err(GridError::SpecMismatch);
        }
        Ok(())
    }

    /// `self + alpha·other`.
    pub fn add_scaled(&self, alpha: Complex64, other: &Field) -> Result<Field, GridError> {
        self.check_spec(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a + alpha * b)
            .collect();
        Ok(Self::from_parts(self.spec, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field, GridError> {
        self.add_scaled(Complex64::new(-1.0, 0.0), other)
    }

    /// Discrete `L²` inner product `Σ f ḡ hⁿ`.
    pub fn inner_l2(&self, other: &Field) -> Result<Complex64, GridError> {
        self.check_spec(other)?;
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b.conj())
            .sum();
        Ok(sum * self.spec.cell_volume())
    }

    pub fn norm_l2_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spec.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest amplitude on the faces `x_d = -L` and `x_d = L - h`,
    /// relative to the global maximum (zero for the zero field).
    pub fn boundary_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let last = self.spec.points - 1;
        let edge = (0..self.spec.len())
            .filter(|&i| {
                let idx = self.spec.multi_index(i);
                idx[..self.spec.dim].iter().any(|&k| k == 0 || k == last)
            })
            .map(|i| self.values[i].norm())
            .fold(0.0, f64::max);
        edge / max
    }

    /// Lattice translate `u(· - y)` with `y` given in grid steps per axis.
    pub fn shifted(&self, shift: [i64; 2]) -> Field {
        let n = self.spec.points as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            let idx = self.spec.multi_index(i);
            let mut src = [0usize; 2];
            for d in 0..self.spec.dim {
                src[d] = (idx[d] as i64 - shift[d]).rem_euclid(n) as usize;
            }
            *slot = self.values[self.spec.flat_index(src)];
        }
        Self::from_parts(self.spec, out)
    }

    /// Fraction of spectral energy carried by modes with `|k_d| ≥ N/4` on
    /// some axis. Large values mean the field is not resolved.
    pub fn spectral_tail_fraction(&self) -> f64 {
        let spectrum = forward_transform(self);
        let quarter = (self.spec.points / 4) as i64;
        let mut tail = 0.0;
        let mut total = 0.0;
        for (k, c) in spectrum.coeffs.iter().enumerate() {
            let idx = self.spec.multi_index(k);
            let w = c.norm_sqr();
            total += w;
            if idx[..self.spec.dim]
                .iter()
                .any(|&j| self.spec.signed_mode(j).abs() >= quarter)
            {
                tail += w;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

/// Spectral coefficients in FFT storage order, scaled for exact Parseval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    spec: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(spec: GridSpec, coeffs: Vec<Complex64>) -> Result<Self, GridError> {
        if coeffs.len() != spec.len() {
            return Err(GridError::Size {
                expected: spec.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self { spec, coeffs })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ w(ξ)|f̂(ξ)|²` for a real weight table in storage order.
    pub fn weighted_energy(&self, weight: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .zip(weight)
            .map(|(c, w)| w * c.norm_sqr())
            .sum()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place FFT over every axis of the grid.
fn fft_in_place(spec: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = spec.points;
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    // contiguous last axis
    plan.process(data);
    if spec.dim == 2 {
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                column[i] = data[i * n + j];
            }
            plan.process(&mut column);
            for i in 0..n {
                data[i * n + j] = column[i];
            }
        }
    }
}

pub fn forward_transform(f: &Field) -> SpectralField {
    let mut data = f.values.clone();
    fft_in_place(&f.spec, &mut data, false);
    let scale = f.spec.spectral_scale();
    for c in &mut data {
        *c *= scale;
    }
    SpectralField {
        spec: f.spec,
        coeffs: data,
    }
}

pub fn inverse_transform(f: &SpectralField) -> Field {
    let mut data = f.coeffs.clone();
    fft_in_place(&f.spec, &mut data, true);
    let scale = 1.0 / (f.spec.spectral_scale() * f.spec.len() as f64);
    for c in &mut data {
        *c *= scale;
    }
    Field::from_parts(f.spec, data)
}

/// `Σ_k c_k e^{2πi k·m/N}` for every lattice index `m`, i.e. the raw
/// inverse DFT without normalization. Evaluates spectral correlation sums
/// at all lattice shifts at once.
pub fn modal_sum(spec: &GridSpec, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut data = coeffs.to_vec();
    fft_in_place(spec, &mut data, true);
    data
}

/// Periodic convolution `(a ⊛ b)(m) = Σ_j a(j) b(m - j)` over lattice indices.
pub fn circular_convolution(a: &Field, b: &Field) -> Result<Field, GridError> {
    a.check_spec(b)?;
    let mut fa = a.values.clone();
    let mut fb = b.values.clone();
    fft_in_place(&a.spec, &mut fa, false);
    fft_in_place(&a.spec, &mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_in_place(&a.spec, &mut fa, true);
    let inv = 1.0 / a.spec.len() as f64;
    Ok(Field::from_parts(
        a.spec,
        fa.into_iter().map(|z| z * inv).collect(),
    ))
}

/// A Fourier multiplier tabulated on the frequency lattice of one grid.
#[derive(Debug, Clone)]
pub struct Multiplier {
    spec: GridSpec,
    symbol: Vec<Complex64>,
}

impl Multiplier {
    /// Tabulates `m(ξ)`; the closure receives `[ξ₁, ξ₂]`.
    pub fn new(spec: GridSpec, m: impl Fn([f64; 2]) -> Complex64) -> Result<Self, GridError> {
        let symbol: Vec<Complex64> = (0..spec.len()).map(|k| m(spec.frequency(k))).collect();
        if let Some(k) = symbol.iter().position(|z| !z.is_finite()) {
            return Err(GridError::NonFiniteMultiplier(k));
        }
        Ok(Self { spec, symbol })
    }

    /// Real symbol given as a function of `|ξ|²`.
    pub fn radial(spec: GridSpec, m: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(spec, |xi| {
            Complex64::new(m(xi[0] * xi[0] + xi[1] * xi[1]), 0.0)
        })
    }

    /// `|ξ|^{2σ}`.
    pub fn fractional_laplacian(spec: GridSpec, order: f64) -> Result<Self, GridError> {
        if !(order > 0.0 && order.is_finite()) {
            return Err(GridError::Order(order));
        }
        Self::radial(spec, |k2| k2.powf(order))
    }

    /// `e^{it|ξ|^{2s}}`.
    pub fn linear_flow(spec: GridSpec, order: f64, time: f64) -> Result<Self, GridError> {
        if !(order > 0.0 && order <= 1.0) {
            return Err(GridError::FlowOrder(order));
        }
        Self::new(spec, |xi| {
            let k2 = xi[0] * xi[0] + xi[1] * xi[1];
            Complex64::from_polar(1.0, time * k2.powf(order))
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn apply_spectral(&self, f: &SpectralField) -> Result<SpectralField, GridError> {
        if f.spec != self.spec {
            return Err(GridError::SpecMismatch);
        }
        let coeffs = f
            .coeffs
            .iter()
            .zip(&self.symbol)
            .map(|(&c, &m)| c * m)
            .collect();
        Ok(SpectralField {
            spec: self.spec,
            coeffs,
        })
    }

    pub fn apply(&self, f: &Field) -> Result<Field, GridError> {
        let spectrum = forward_transform(f);
        Ok(inverse_transform(&self.apply_spectral(&spectrum)?))
    }
}

/// `F⁻¹[m(ξ) F f]`.
pub fn apply_multiplier(f: &Field, m: impl Fn([f64; 2]) -> Complex64) -> Result<Field, GridError> {
    Multiplier::new(f.spec, m)?.apply(f)
}

/// `(-Δ)^σ f`, i.e. the multiplier `|ξ|^{2σ}`.
pub fn fractional_laplacian(f: &Field, order: f64) -> Result<Field, GridError> {
    Multiplier::fractional_laplacian(f.spec, order)?.apply(f)
}

/// Free propagator `e^{it(-Δ)^s} f`.
pub fn linear_flow(f: &Field, order: f64, time: f64) -> Result<Field, GridError> {
    Multiplier::linear_flow(f.spec, order, time)?.apply(f)
}

/// `H^s` weight `(1+|ξ|²)^s` in storage order.
pub fn sobolev_weight(spec: &GridSpec, order: f64) -> Vec<f64> {
    spec.frequency_norm_sq()
        .into_iter()
        .map(|k2| (1.0 + k2).powf(order))
        .collect()
}

/// `Σ (1+|ξ|²)^s f̂ conj(ĝ)`.
pub fn sobolev_inner(f: &Field, g: &Field, order: f64) -> Result<Complex64, GridError> {
    if f.spec != g.spec {
        return Err(GridError::SpecMismatch);
    }
    let fh = forward_transform(f);
    let gh = forward_transform(g);
    let weight = sobolev_weight(&f.spec, order);
    Ok(fh
        .coeffs
        .iter()
        .zip(&gh.coeffs)
        .zip(&weight)
        .map(|((&a, &b), &w)| a * b.conj() * w)
        .sum())
}

pub fn sobolev_norm(f: &Field, order: f64) -> f64 {
    let weight = sobolev_weight(&f.spec, order);
    forward_transform(f).weighted_energy(&weight).sqrt()
}
