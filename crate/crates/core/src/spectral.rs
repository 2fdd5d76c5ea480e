//! Doubly periodic collocation grid and Fourier multipliers.
//!
//! Nodes are `x_j = -L + j h`, `h = 2L/N`, in both directions. Modal
//! coefficients are normalized so that `coeff(0)` is the grid mean and are
//! phase-referenced to the physical coordinate (not the node index), i.e.
//!
//! ```text
//! coeff(k) = N⁻² Σ_{j,l} f(x_j, y_l) exp(-i (k̃_x x_j + k̃_y y_l)),   k̃ = (π/L) k
//! ```
//!
//! Storage is row-major with the x index as the row. Modal arrays use the
//! usual FFT ordering, index `i` holding wavenumber `i` for `i < N/2` and
//! `i - N` otherwise.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const PAR_THRESHOLD: usize = 128;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// `N × N` collocation grid on `(-L, L)²` together with its FFT plans.
#[derive(Clone)]
pub struct Grid2D {
    n: usize,
    half_width: f64,
    plans: Arc<Plans>,
    /// `k̃` for every FFT index.
    ktilde: Arc<[f64]>,
    /// `k̃` with the Nyquist entry zeroed, for odd-order multipliers.
    ktilde_odd: Arc<[f64]>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

impl Grid2D {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Domain(format!(
                "half-width L must be positive, got {half_width}"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "N must be even and at least 8, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        let scale = PI / half_width;
        let ktilde: Vec<f64> = (0..n).map(|i| scale * wavenumber(i, n) as f64).collect();
        let mut ktilde_odd = ktilde.clone();
        ktilde_odd[n / 2] = 0.0;
        Ok(Self {
            n,
            half_width,
            plans: Arc::new(plans),
            ktilde: ktilde.into(),
            ktilde_odd: ktilde_odd.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node coordinate `-L + j h` (same in both directions).
    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Index of the node `-x_j`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Integer wavenumber stored at FFT index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        wavenumber(i, self.n)
    }

    /// FFT index holding integer wavenumber `k`, if it is resolved.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else {
            Some(k.rem_euclid(self.n as i64) as usize)
        }
    }

    pub fn ktilde(&self) -> &[f64] {
        &self.ktilde
    }

    pub fn ktilde_odd(&self) -> &[f64] {
        &self.ktilde_odd
    }

    pub(crate) fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "N={} L={} vs N={} L={}",
                self.n, self.half_width, other.n, other.half_width
            )))
        }
    }

    /// In-place unnormalized forward 2D DFT over node indices.
    pub(crate) fn fft2(&self, data: &mut [Complex64]) {
        self.transform(data, &self.plans.forward);
    }

    /// In-place unnormalized inverse 2D DFT over node indices.
    pub(crate) fn ifft2(&self, data: &mut [Complex64]) {
        self.transform(data, &self.plans.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        if n >= PAR_THRESHOLD && rayon::current_num_threads() > 1 {
            let mut buf = vec![Complex64::default(); n * n];
            par_rows(data, n, plan);
            par_transpose(data, &mut buf, n);
            par_rows(&mut buf, n, plan);
            par_transpose(&buf, data, n);
        } else {
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(data, &mut scratch);
            columns(data, n, plan, &mut scratch);
        }
    }

    /// Physical samples to mean-normalized, coordinate-phased coefficients.
    pub(crate) fn to_modal(&self, values: &[f64], out: &mut [Complex64]) {
        for (o, &v) in out.iter_mut().zip(values) {
            *o = Complex64::new(v, 0.0);
        }
        self.fft2(out);
        let n = self.n;
        let scale = 1.0 / (n * n) as f64;
        apply_phase(out, n, scale);
    }

    /// Inverse of [`Grid2D::to_modal`]; returns the largest discarded imaginary part.
    pub(crate) fn to_physical(&self, coeffs: &[Complex64], work: &mut [Complex64], out: &mut [f64]) -> f64 {
        work.copy_from_slice(coeffs);
        apply_phase(work, self.n, 1.0);
        self.ifft2(work);
        let mut imag = 0.0f64;
        for (o, w) in out.iter_mut().zip(work.iter()) {
            *o = w.re;
            imag = imag.max(w.im.abs());
        }
        imag
    }
}

impl Grid2D {
    /// Two real fields through one complex inverse transform: `out_a` gets
    /// the real part of `ifft(a + i b)`, `out_b` the imaginary part.
    pub(crate) fn to_physical_pair(
        &self,
        a: &[Complex64],
        b: &[Complex64],
        work: &mut [Complex64],
        out_a: &mut [f64],
        out_b: &mut [f64],
    ) {
        let n = self.n;
        for (i, ((w, ra), rb)) in work.chunks_exact_mut(n).zip(a.chunks_exact(n)).zip(b.chunks_exact(n)).enumerate() {
            let mut sign = phase_sign(i, 1.0);
            for ((w, x), y) in w.iter_mut().zip(ra).zip(rb) {
                *w = Complex64::new(x.re - y.im, x.im + y.re) * sign;
                sign = -sign;
            }
        }
        self.ifft2(work);
        for ((w, oa), ob) in work.iter().zip(out_a.iter_mut()).zip(out_b.iter_mut()) {
            *oa = w.re;
            *ob = w.im;
        }
    }

    /// Modal coefficients of two real fields from one forward transform,
    /// split by conjugate symmetry. `work` is overwritten.
    pub(crate) fn to_modal_pair(
        &self,
        a: &[f64],
        b: &[f64],
        work: &mut [Complex64],
        out_a: &mut [Complex64],
        out_b: &mut [Complex64],
    ) {
        let n = self.n;
        for ((w, &x), &y) in work.iter_mut().zip(a).zip(b) {
            *w = Complex64::new(x, y);
        }
        self.fft2(work);
        let scale = 0.5 / (n * n) as f64;
        for r in 0..n {
            let rm = if r == 0 { 0 } else { n - r };
            let (row, mirror) = (&work[r * n..(r + 1) * n], &work[rm * n..(rm + 1) * n]);
            let (oa, ob) = (&mut out_a[r * n..(r + 1) * n], &mut out_b[r * n..(r + 1) * n]);
            let mut sign = phase_sign(r, scale);
            for c in 0..n {
                let z = row[c];
                let zm = mirror[if c == 0 { 0 } else { n - c }].conj();
                let (sum, diff) = (z + zm, z - zm);
                oa[c] = sum * sign;
                // (z - zm) / 2i
                ob[c] = Complex64::new(diff.im, -diff.re) * sign;
                sign = -sign;
            }
        }
    }
}

fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Multiply by `scale · (-1)^(i+j)`, the factor `exp(i k̃·L)` that moves the
/// phase origin from node 0 to the coordinate origin (N even).
fn apply_phase(data: &mut [Complex64], n: usize, scale: f64) {
    for (i, row) in data.chunks_exact_mut(n).enumerate() {
        let first = phase_sign(i, scale);
        for pair in row.chunks_exact_mut(2) {
            pair[0] *= first;
            pair[1] *= -first;
        }
    }
}

/// `scale · (-1)^i`.
fn phase_sign(i: usize, scale: f64) -> f64 {
    if i.is_multiple_of(2) {
        scale
    } else {
        -scale
    }
}

fn par_rows(data: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    let scratch_len = plan.get_inplace_scratch_len();
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

fn par_transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    dst.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = src[i * n + j];
        }
    });
}

/// Transform every column in place, a few columns at a time through a
/// contiguous buffer.
fn columns(data: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>, scratch: &mut [Complex64]) {
    const BATCH: usize = 8;
    let width = BATCH.min(n);
    let mut buf = vec![Complex64::default(); width * n];
    for c0 in (0..n).step_by(width) {
        let w = width.min(n - c0);
        for r in 0..n {
            for (dc, v) in data[r * n + c0..r * n + c0 + w].iter().enumerate() {
                buf[dc * n + r] = *v;
            }
        }
        plan.process_with_scratch(&mut buf[..w * n], scratch);
        for r in 0..n {
            for (dc, v) in data[r * n + c0..r * n + c0 + w].iter_mut().enumerate() {
                *v = buf[dc * n + r];
            }
        }
    }
}

/// Real samples on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid2D, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    /// Sample `f(x, y)` at every node.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let nodes = grid.nodes();
        let mut values = Vec::with_capacity(grid.len());
        for &x in &nodes {
            for &y in &nodes {
                values.push(f(x, y));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for an {}x{} grid",
                values.len(),
                grid.n(),
                grid.n()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample {v}")));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Skips the finiteness check; used where non-finite values are
    /// detected downstream (e.g. a diverging integration).
    pub(crate) fn from_values_unchecked(grid: &Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
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

    /// Sample at node `(j, l)`: `j` along x, `l` along y.
    pub fn at(&self, j: usize, l: usize) -> f64 {
        self.values[j * self.grid.n() + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid average, summed with Neumaier compensation.
    pub fn mean(&self) -> f64 {
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for &v in &self.values {
            let t = sum + v;
            carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
            sum = t;
        }
        (sum + carry) / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Modal amplitudes of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub(crate) fn from_coeffs(grid: &Grid2D, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Coefficients in FFT order, row index = x wavenumber.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Amplitude of integer mode `(kx, ky)`, zero if unresolved.
    pub fn mode(&self, kx: i64, ky: i64) -> Complex64 {
        match (self.grid.index_of(kx), self.grid.index_of(ky)) {
            (Some(i), Some(j)) => self.coeffs[i * self.grid.n() + j],
            _ => Complex64::default(),
        }
    }

    pub fn set_mode(&mut self, kx: i64, ky: i64, value: Complex64) -> Result<()> {
        match (self.grid.index_of(kx), self.grid.index_of(ky)) {
            (Some(i), Some(j)) => {
                let n = self.grid.n();
                self.coeffs[i * n + j] = value;
                Ok(())
            }
            _ => Err(Error::Domain(format!(
                "mode ({kx}, {ky}) not resolved on N={}",
                self.grid.n()
            ))),
        }
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest violation of `coeff(-k) = conj(coeff(k))`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mi = (n - i) % n;
                let mj = (n - j) % n;
                let d = self.coeffs[i * n + j] - self.coeffs[mi * n + mj].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

pub fn forward(f: &RealField) -> SpectralField {
    let grid = &f.grid;
    let mut coeffs = vec![Complex64::default(); grid.len()];
    grid.to_modal(&f.values, &mut coeffs);
    SpectralField::from_coeffs(grid, coeffs)
}

pub fn inverse(spec: &SpectralField) -> RealField {
    inverse_with_residue(spec).0
}

/// Inverse transform, also returning the largest imaginary part dropped when
/// storing the result as real samples.
pub fn inverse_with_residue(spec: &SpectralField) -> (RealField, f64) {
    let grid = &spec.grid;
    let mut work = vec![Complex64::default(); grid.len()];
    let mut values = vec![0.0; grid.len()];
    let residue = grid.to_physical(&spec.coeffs, &mut work, &mut values);
    (
        RealField {
            grid: grid.clone(),
            values,
        },
        residue,
    )
}

/// Apply the modal multiplier `symbol(kx_index, ky_index)` to `f`.
fn apply_multiplier(f: &RealField, symbol: impl Fn(usize, usize) -> Complex64) -> RealField {
    let mut spec = forward(f);
    let n = f.grid.n();
    for (i, row) in spec.coeffs.chunks_mut(n).enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c *= symbol(i, j);
        }
    }
    inverse(&spec)
}

pub fn partial_x(f: &RealField) -> RealField {
    let k = f.grid.ktilde_odd().to_vec();
    apply_multiplier(f, |i, _| Complex64::new(0.0, k[i]))
}

pub fn partial_y(f: &RealField) -> RealField {
    let k = f.grid.ktilde_odd().to_vec();
    apply_multiplier(f, |_, j| Complex64::new(0.0, k[j]))
}

pub fn laplacian(f: &RealField) -> RealField {
    let k = f.grid.ktilde().to_vec();
    apply_multiplier(f, |i, j| Complex64::new(-(k[i] * k[i] + k[j] * k[j]), 0.0))
}

pub fn gradient(f: &RealField) -> (RealField, RealField) {
    (partial_x(f), partial_y(f))
}

pub fn divergence(v1: &RealField, v2: &RealField) -> Result<RealField> {
    v1.grid.check_same(&v2.grid)?;
    let (dx, dy) = (partial_x(v1), partial_y(v2));
    dx.zip_with(&dy, |a, b| a + b)
}

/// `(I - αΔ)⁻¹ f`.
pub fn helmholtz_solve(alpha: f64, f: &RealField) -> Result<RealField> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Domain(format!(
            "Helmholtz coefficient must be >= 0, got {alpha}"
        )));
    }
    let k = f.grid.ktilde().to_vec();
    Ok(apply_multiplier(f, |i, j| {
        Complex64::new(1.0 / (1.0 + alpha * (k[i] * k[i] + k[j] * k[j])), 0.0)
    }))
}

/// Spectral translation `f(x - dx, y - dy)`. The Nyquist rows keep only the
/// real part of their shift factor so the output stays real.
pub fn translate(f: &RealField, dx: f64, dy: f64) -> RealField {
    let k = f.grid.ktilde().to_vec();
    let nyq = f.grid.n() / 2;
    let factor = move |i: usize, d: f64| {
        let ph = Complex64::from_polar(1.0, -k[i] * d);
        if i == nyq {
            Complex64::new(ph.re, 0.0)
        } else {
            ph
        }
    };
    apply_multiplier(f, |i, j| factor(i, dx) * factor(j, dy))
}

/// 2/3-rule truncation: zero every mode with `max(|kx|, |ky|) > N/3`.
pub fn dealias_23(spec: &SpectralField) -> SpectralField {
    let mut out = spec.clone();
    dealias_in_place(&spec.grid, &mut out.coeffs);
    out
}

pub(crate) fn dealias_in_place(grid: &Grid2D, coeffs: &mut [Complex64]) {
    let n = grid.n();
    // |k| > N/3  <=>  3|k| > N
    let keep = |i: usize| 3 * grid.wavenumber(i).unsigned_abs() as usize <= n;
    for (i, row) in coeffs.chunks_mut(n).enumerate() {
        let row_keep = keep(i);
        for (j, c) in row.iter_mut().enumerate() {
            if !(row_keep && keep(j)) {
                *c = Complex64::default();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(16.0, n).unwrap()
    }

    /// Smooth periodic field built from a handful of random modes.
    fn random_field(g: &Grid2D, seed: &[f64]) -> RealField {
        let l = g.half_width();
        RealField::from_fn(g, |x, y| {
            seed.chunks(4)
                .enumerate()
                .map(|(m, s)| {
                    let kx = (m % 3) as f64 + 1.0;
                    let ky = (m % 2) as f64;
                    s[0] * (PI * (kx * x + ky * y) / l + s[1]).sin()
                        + s[2] * (PI * (ky * x + kx * y) / l).cos() * s[3]
                })
                .sum()
        })
    }

    #[test]
    fn mean_survives_cancellation() {
        let g = Grid2D::new(1.0, 8).unwrap();
        let mut v = vec![0.0; 64];
        v[..4].copy_from_slice(&[1e16, 32.0, -1e16, 32.0]);
        assert_eq!(RealField::from_values(&g, v).unwrap().mean(), 1.0);
        assert_eq!(RealField::constant(&grid(64), 0.1).mean(), 0.1);
    }

    #[test]
    fn paired_transforms_match_single_ones() {
        let g = grid(32);
        let a = random_field(&g, &[0.3, 0.1, -0.7, 0.2, 0.5, -0.4, 0.9, 0.6]);
        let b = RealField::from_fn(&g, |x, y| (-(x * x + 2.0 * y * y) / 9.0).exp() + 0.1 * x);
        let (fa, fb) = (forward(&a), forward(&b));
        let len = g.len();
        let mut work = vec![Complex64::default(); len];
        let (mut ma, mut mb) = (vec![Complex64::default(); len], vec![Complex64::default(); len]);
        g.to_modal_pair(a.values(), b.values(), &mut work, &mut ma, &mut mb);
        let worst = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).norm()));
        assert!(worst(&ma, fa.coeffs()) < 1e-15);
        assert!(worst(&mb, fb.coeffs()) < 1e-15);
        let (mut pa, mut pb) = (vec![0.0; len], vec![0.0; len]);
        g.to_physical_pair(fa.coeffs(), fb.coeffs(), &mut work, &mut pa, &mut pb);
        assert!(pa.iter().zip(a.values()).all(|(p, q)| (p - q).abs() < 1e-13));
        assert!(pb.iter().zip(b.values()).all(|(p, q)| (p - q).abs() < 1e-13));
    }

    fn seeds() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 16)
    }

    fn max_diff(a: &RealField, b: &RealField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid2D::new(16.0, 7).is_err());
        assert!(Grid2D::new(16.0, 6).is_err());
        assert!(Grid2D::new(0.0, 16).is_err());
    }

    #[test]
    fn grid_geometry() {
        let g = grid(32);
        assert_eq!(g.spacing() * 32.0, 32.0);
        for j in 1..32 {
            assert!((g.node(j) + g.node(g.mirror(j))).abs() < 1e-12);
        }
        assert_eq!(g.node(16), 0.0);
        assert_eq!(g.mirror(0), 0);
    }

    #[test]
    fn constant_is_mean_mode() {
        let g = grid(16);
        let spec = forward(&RealField::constant(&g, 1.0));
        assert!((spec.mode(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let others: f64 = spec.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(others < 1e-14);
    }

    #[test]
    fn cosine_splits_into_two_modes() {
        let g = grid(16);
        let f = RealField::from_fn(&g, |x, _| (PI * x / 16.0).cos());
        let spec = forward(&f);
        assert!((spec.mode(1, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((spec.mode(-1, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(spec.energy() - 0.5 < 1e-15);
    }

    #[test]
    fn sine_derivative_is_exact() {
        let g = grid(32);
        let f = RealField::from_fn(&g, |x, _| (PI * x / 16.0).sin());
        let exact = RealField::from_fn(&g, |x, _| PI / 16.0 * (PI * x / 16.0).cos());
        assert!(max_diff(&partial_x(&f), &exact) < 1e-12);
        assert!(partial_y(&f).max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = grid(16);
        assert!(laplacian(&RealField::constant(&g, 3.5)).max_abs() < 1e-13);
    }

    #[test]
    fn helmholtz_scales_single_mode() {
        let g = grid(32);
        let f = RealField::from_fn(&g, |x, y| (PI * (2.0 * x + 3.0 * y) / 16.0).cos());
        assert!(max_diff(&helmholtz_solve(0.0, &f).unwrap(), &f) < 1e-14);
        let alpha = 0.3;
        let k2 = (PI / 16.0).powi(2) * 13.0;
        let out = helmholtz_solve(alpha, &f).unwrap();
        assert!(max_diff(&out, &f.map(|v| v / (1.0 + alpha * k2))) < 1e-14);
        assert!(matches!(helmholtz_solve(-0.1, &f), Err(Error::Domain(_))));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = RealField::zeros(&grid(16));
        let b = RealField::zeros(&grid(32));
        assert!(matches!(divergence(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn spectral_decay_of_smooth_periodic_function() {
        let err = |n: usize| {
            let g = Grid2D::new(1.0, n).unwrap();
            let f = |x: f64, y: f64| (PI * x).sin().exp() * (PI * y).cos().exp();
            let spec = forward(&RealField::from_fn(&g, f));
            // Evaluate the trigonometric interpolant off the nodes.
            let mut worst = 0.0f64;
            for p in 0..7 {
                let (x, y) = (-0.93 + 0.27 * p as f64, 0.41 - 0.19 * p as f64);
                let mut s = Complex64::default();
                for i in 0..n {
                    for j in 0..n {
                        let ph = g.ktilde()[i] * x + g.ktilde()[j] * y;
                        s += spec.coeffs()[i * n + j] * Complex64::from_polar(1.0, ph);
                    }
                }
                worst = worst.max((s.re - f(x, y)).abs());
            }
            worst
        };
        let (e16, e64) = (err(16), err(64));
        let ratio_needed = 4f64.powi(8);
        assert!(e16 / e64.max(1e-300) > ratio_needed || e64 < 1e-14, "{e16} {e64}");
    }

    #[test]
    fn dealias_mask() {
        let g = grid(24);
        let f = random_field(&g, &[0.3; 16]);
        let mut spec = forward(&f);
        for c in spec.coeffs_mut() {
            *c = Complex64::new(1.0, 0.0);
        }
        let out = dealias_23(&spec);
        for i in 0..24 {
            for j in 0..24 {
                let (kx, ky) = (g.wavenumber(i), g.wavenumber(j));
                let kept = kx.abs().max(ky.abs()) <= 8;
                assert_eq!(out.coeffs()[i * 24 + j].re, if kept { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(dealias_23(&out), out);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip(seed in seeds(), noise in prop::collection::vec(-1.0f64..1.0, 256)) {
            let g = grid(16);
            let f = RealField::from_values(&g, noise.clone()).unwrap();
            prop_assert!(max_diff(&inverse(&forward(&f)), &f) <= 1e-12);
            let f = random_field(&g, &seed);
            prop_assert!(max_diff(&inverse(&forward(&f)), &f) <= 1e-12);
        }

        #[test]
        fn parseval_and_realness(noise in prop::collection::vec(-1.0f64..1.0, 1024)) {
            let g = grid(32);
            let f = RealField::from_values(&g, noise).unwrap();
            let spec = forward(&f);
            let h = g.spacing();
            let lhs = h * h * f.values().iter().map(|v| v * v).sum::<f64>();
            let rhs = (2.0 * g.half_width()).powi(2) * spec.energy();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
            prop_assert!(spec.conjugate_symmetry_defect() <= 1e-12);
            prop_assert!(inverse_with_residue(&spec).1 <= 1e-12);
        }

        #[test]
        fn operator_identities(seed in seeds()) {
            let g = grid(32);
            let f = random_field(&g, &seed);
            let (fx, fy) = gradient(&f);
            let div = divergence(&fx, &fy).unwrap();
            prop_assert!(max_diff(&div, &laplacian(&f)) <= 1e-12);
            for out in [&fx, &fy, &laplacian(&f)] {
                prop_assert!(forward(out).mode(0, 0).norm() <= 1e-15);
            }
            let alpha = 0.7;
            let lap = laplacian(&f);
            let rhs = f.zip_with(&lap, |a, b| a - alpha * b).unwrap();
            prop_assert!(max_diff(&helmholtz_solve(alpha, &rhs).unwrap(), &f) <= 1e-12);
        }

        #[test]
        fn operators_are_real(noise in prop::collection::vec(-1.0f64..1.0, 1024)) {
            let g = grid(32);
            let f = RealField::from_values(&g, noise).unwrap();
            let mut spec = forward(&f);
            let k = g.ktilde_odd().to_vec();
            for (i, row) in spec.coeffs_mut().chunks_mut(32).enumerate() {
                for c in row.iter_mut() {
                    *c *= Complex64::new(0.0, k[i]);
                }
            }
            prop_assert!(inverse_with_residue(&spec).1 <= 1e-12);
        }

        #[test]
        fn dealias_never_adds_energy(noise in prop::collection::vec(-1.0f64..1.0, 576)) {
            let g = grid(24);
            let spec = forward(&RealField::from_values(&g, noise).unwrap());
            let out = dealias_23(&spec);
            prop_assert!(out.energy() <= spec.energy());
            prop_assert_eq!(dealias_23(&out), out);
        }
    }
}
