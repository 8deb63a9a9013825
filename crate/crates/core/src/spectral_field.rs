//! Complex fields on the periodic box `[-L, L)ⁿ` with `N` points per axis,
//! Fourier transforms, and the multiplier operators built on the symbol
//! engine.
//!
//! Grid point `x_j = -L + j·dx` (`dx = 2L/N`) is the centre of its cell.
//! The discrete transform relates to the continuous one by
//! `ĝ(ξ_k) ≈ dxⁿ (-1)^{Σk} FFT(g)_k` with `ξ_k = πk/L`, `k ∈ [-N/2, N/2)`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol_engine::{SymbolFamily, SymbolSlice};

/// Largest `|α|` accepted by [`derivative_field`].
pub const MAX_ALPHA: usize = 8;

/// Damping exponent the top third of frequencies must reach.
pub const ALIASING_EXPONENT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half-width L = {half_width} must be positive"
            )));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N = {points} must be a power of two >= 16")));
        }
        Ok(Self {
            dim,
            half_width,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Total number of grid points `Nⁿ`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn axis_points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.points).map(|j| -self.half_width + j as f64 * dx).collect()
    }

    /// Signed frequency index of FFT slot `k`.
    pub fn signed_index(&self, k: usize) -> i64 {
        let n = self.points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Frequencies `πk/L` in FFT storage order.
    pub fn axis_freqs(&self) -> Vec<f64> {
        let scale = std::f64::consts::PI / self.half_width;
        (0..self.points).map(|k| self.signed_index(k) as f64 * scale).collect()
    }

    /// Multi-index of flat position `idx` (axis 0 slowest).
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = idx % self.points;
            idx /= self.points;
        }
    }

    /// Physical coordinates for every grid point, flattened row-major.
    pub fn coordinates(&self) -> Vec<f64> {
        let axis = self.axis_points();
        let mut out = Vec::with_capacity(self.len() * self.dim);
        let mut multi = [0usize; 3];
        for idx in 0..self.len() {
            self.unravel(idx, &mut multi[..self.dim]);
            out.extend(multi[..self.dim].iter().map(|&j| axis[j]));
        }
        out
    }

    /// Frequencies for every FFT slot, flattened row-major.
    pub fn frequencies(&self) -> Vec<f64> {
        let axis = self.axis_freqs();
        let mut out = Vec::with_capacity(self.len() * self.dim);
        let mut multi = [0usize; 3];
        for idx in 0..self.len() {
            self.unravel(idx, &mut multi[..self.dim]);
            out.extend(multi[..self.dim].iter().map(|&k| axis[k]));
        }
        out
    }

    /// `(-1)^{Σk}` for every FFT slot.
    pub fn phase_signs(&self) -> Vec<f64> {
        let mut multi = [0usize; 3];
        (0..self.len())
            .map(|idx| {
                self.unravel(idx, &mut multi[..self.dim]);
                let s: i64 = multi[..self.dim].iter().map(|&k| self.signed_index(k)).sum();
                if s.rem_euclid(2) == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }

    /// `{0,1}` indicator sampled at the cell centres.
    pub fn mask<F: Fn(&[f64]) -> bool + Sync>(&self, indicator: F) -> Vec<f64> {
        let coords = self.coordinates();
        coords
            .par_chunks(self.dim)
            .map(|x| if indicator(x) { 1.0 } else { 0.0 })
            .collect()
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Unnormalized n-dimensional FFT in place, one axis at a time. Every line is
/// transformed independently, so the result does not depend on scheduling.
fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let fft = plan(n, inverse);
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(n).for_each(|line| fft.process(line));
            continue;
        }
        let block = n * stride;
        data.par_chunks_mut(block).for_each(|chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for inner in 0..stride {
                for j in 0..n {
                    line[j] = chunk[j * stride + inner];
                }
                fft.process(&mut line);
                for j in 0..n {
                    chunk[j * stride + inner] = line[j];
                }
            }
        });
    }
}

/// Forward FFT of raw row-major data on `grid`, in place.
pub(crate) fn forward_in_place(grid: &GridSpec, data: &mut [Complex64]) {
    fft_nd(data, grid.dim, grid.points, false);
}

/// Normalized inverse FFT of raw data on `grid`, in place.
pub(crate) fn inverse_in_place(grid: &GridSpec, data: &mut [Complex64]) {
    fft_nd(data, grid.dim, grid.points, true);
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|v| *v *= scale);
}

/// A complex field in physical space with a lazily cached spectrum.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: GridSpec,
    values: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl SpectralField {
    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64 + Sync>(grid: GridSpec, f: F) -> Self {
        let values = grid.coordinates().par_chunks(grid.dim).map(&f).collect();
        Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_real_fn<F: Fn(&[f64]) -> f64 + Sync>(grid: GridSpec, f: F) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Field whose discrete spectrum (unnormalized FFT, storage order) is `spectrum`.
    pub fn from_spectrum(grid: GridSpec, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {} points",
                spectrum.len(),
                grid.len()
            )));
        }
        let mut values = spectrum.clone();
        fft_nd(&mut values, grid.dim, grid.points, true);
        let scale = 1.0 / grid.len() as f64;
        values.par_iter_mut().for_each(|v| *v *= scale);
        let spectrum_cache = OnceLock::new();
        let _ = spectrum_cache.set(spectrum);
        Ok(Self {
            grid,
            values,
            spectrum: spectrum_cache,
        })
    }

    /// Field sampled from a continuous Fourier transform `ĝ(ξ)`.
    pub fn from_continuous_transform<F: Fn(&[f64]) -> Complex64 + Sync>(grid: GridSpec, g_hat: F) -> Result<Self> {
        let freqs = grid.frequencies();
        let signs = grid.phase_signs();
        let inv_vol = 1.0 / grid.cell_volume();
        let spectrum = freqs
            .par_chunks(grid.dim)
            .zip(signs.par_iter())
            .map(|(xi, s)| g_hat(xi) * (s * inv_vol))
            .collect();
        Self::from_spectrum(grid, spectrum)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Unnormalized forward FFT of the values (cached).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut s = self.values.clone();
            fft_nd(&mut s, self.grid.dim, self.grid.points, false);
            s
        })
    }

    /// `∫|g|²` as a cell-volume weighted sum.
    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Same norm computed from the spectrum.
    pub fn spectral_norm_sq(&self) -> f64 {
        self.grid.cell_volume() / self.grid.len() as f64 * self.spectrum().iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// `⟨f, g⟩ = ∫ f ḡ`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            spectrum: OnceLock::new(),
        }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b * c).collect(),
            spectrum: OnceLock::new(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Multiplies the spectrum by `mult(flat_index, ξ)`.
    pub fn map_spectrum<F: Fn(usize, &[f64]) -> Complex64 + Sync>(&self, mult: F) -> Self {
        let freqs = self.grid.frequencies();
        let spec: Vec<Complex64> = self
            .spectrum()
            .par_iter()
            .zip(freqs.par_chunks(self.grid.dim))
            .enumerate()
            .map(|(i, (c, xi))| c * mult(i, xi))
            .collect();
        Self::from_spectrum(self.grid, spec).expect("same grid")
    }

    /// Pointwise product with a precomputed weight (typically a {0,1} mask).
    pub fn multiply_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.values.len() {
            return Err(Error::GridMismatch("mask length differs from field".into()));
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(weights).map(|(v, w)| v * w).collect(),
            spectrum: OnceLock::new(),
        })
    }

    /// `Σ w |g|² dxⁿ`.
    pub fn weighted_norm_sq(&self, weights: &[f64]) -> f64 {
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(weights)
                .map(|(v, w)| w * v.norm_sqr())
                .sum::<f64>()
    }

    /// Binary container: magic, version, n, N, L, endianness tag, then
    /// interleaved little-endian real/imaginary doubles in row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 16 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.grid.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.grid.points as u64).to_le_bytes());
        out.extend_from_slice(&self.grid.half_width.to_le_bytes());
        out.push(b'L');
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = MAGIC.len() + 4 + 4 + 8 + 8 + 1;
        if bytes.len() < header || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Container("missing field header".into()));
        }
        let mut pos = MAGIC.len();
        let mut take = |k: usize| {
            let s = &bytes[pos..pos + k];
            pos += k;
            s
        };
        let version = u32::from_le_bytes(take(4).try_into().expect("4 bytes"));
        if version != CONTAINER_VERSION {
            return Err(Error::Container(format!("unsupported version {version}")));
        }
        let dim = u32::from_le_bytes(take(4).try_into().expect("4 bytes")) as usize;
        let points = u64::from_le_bytes(take(8).try_into().expect("8 bytes")) as usize;
        let half_width = f64::from_le_bytes(take(8).try_into().expect("8 bytes"));
        let tag = take(1)[0];
        if tag != b'L' {
            return Err(Error::Container(format!("unsupported endianness tag {tag:#x}")));
        }
        let grid = GridSpec::new(dim, half_width, points).map_err(|e| Error::Container(e.to_string()))?;
        let payload = &bytes[header..];
        if payload.len() != 16 * grid.len() {
            return Err(Error::Container(format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                16 * grid.len()
            )));
        }
        let values = payload
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::Container(e.to_string()))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::Container(e.to_string()))
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::Container(e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    /// `x,re,im` rows for a 1-D field.
    pub fn to_csv(&self) -> Result<String> {
        if self.grid.dim != 1 {
            return Err(Error::InvalidArgument(
                "CSV export is only defined for 1-D fields".into(),
            ));
        }
        let mut out = String::from("x,re,im\n");
        for (x, v) in self.grid.axis_points().iter().zip(&self.values) {
            out.push_str(&format!("{x},{},{}\n", v.re, v.im));
        }
        Ok(out)
    }
}

const MAGIC: &[u8; 8] = b"HYPFIELD";
const CONTAINER_VERSION: u32 = 1;

fn check_family(fam: &SymbolFamily, grid: &GridSpec) -> Result<()> {
    if fam.dim() != grid.dim {
        return Err(Error::GridMismatch(format!(
            "family dimension {} vs grid dimension {}",
            fam.dim(),
            grid.dim
        )));
    }
    Ok(())
}

/// `U(T,t)g`: spectrum multiplied by `e^{-A_t(ξ)}`.
pub fn apply_propagator(fam: &SymbolFamily, t: f64, g: &SpectralField) -> Result<SpectralField> {
    check_family(fam, &g.grid)?;
    let slice = fam.slice(t, 0)?;
    Ok(apply_slice(&slice, g))
}

pub(crate) fn apply_slice(slice: &SymbolSlice, g: &SpectralField) -> SpectralField {
    g.map_spectrum(|_, xi| Complex64::new(slice.multiplier(xi), 0.0))
}

/// Spectrum multiplied by `(iξ)^α ∂ₜᵐ e^{-A_t(ξ)}`.
pub fn derivative_field(
    fam: &SymbolFamily,
    t: f64,
    g: &SpectralField,
    m: usize,
    alpha: &[usize],
) -> Result<SpectralField> {
    check_family(fam, &g.grid)?;
    if alpha.len() != g.grid.dim {
        return Err(Error::InvalidArgument(format!(
            "multi-index has length {}, grid dimension is {}",
            alpha.len(),
            g.grid.dim
        )));
    }
    let order: usize = alpha.iter().sum();
    if order > MAX_ALPHA {
        return Err(Error::InvalidArgument(format!("|alpha| = {order} exceeds {MAX_ALPHA}")));
    }
    let slice = fam.slice(t, m)?;
    let i_pow = Complex64::i().powi(order as i32);
    Ok(g.map_spectrum(|_, xi| {
        let mono: f64 = xi.iter().zip(alpha).map(|(x, &a)| x.powi(a as i32)).product();
        i_pow * (mono * slice.multiplier_derivative(xi, m))
    }))
}

/// Pointwise product with the indicator sampled at cell centres.
pub fn mask_multiply<F: Fn(&[f64]) -> bool + Sync>(g: &SpectralField, indicator: F) -> SpectralField {
    let mask = g.grid.mask(indicator);
    g.multiply_weights(&mask).expect("mask built on the same grid")
}

/// Cell-centred Riemann sum of `|g|²` over the indicator region.
pub fn windowed_l2<F: Fn(&[f64]) -> bool + Sync>(g: &SpectralField, indicator: F) -> f64 {
    let mask = g.grid.mask(indicator);
    g.weighted_norm_sq(&mask)
}

/// Recorded when the highest third of the frequency box is not damped to
/// `e^{-30}` at the earliest time a propagator is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationWarning {
    pub earliest_time: f64,
    pub min_exponent: f64,
    pub required: f64,
}

pub fn truncation_check(fam: &SymbolFamily, grid: &GridSpec, t_earliest: f64) -> Result<Option<TruncationWarning>> {
    check_family(fam, grid)?;
    let slice = fam.slice(t_earliest, 0)?;
    let cutoff = grid.points as i64 / 3;
    let freqs = grid.frequencies();
    let mut multi = [0usize; 3];
    let mut min_exponent = f64::INFINITY;
    for (idx, xi) in freqs.chunks(grid.dim).enumerate() {
        grid.unravel(idx, &mut multi[..grid.dim]);
        let top = multi[..grid.dim].iter().any(|&k| grid.signed_index(k).abs() >= cutoff);
        if top {
            min_exponent = min_exponent.min(slice.value(xi));
        }
    }
    Ok((min_exponent < ALIASING_EXPONENT).then_some(TruncationWarning {
        earliest_time: t_earliest,
        min_exponent,
        required: ALIASING_EXPONENT,
    }))
}

/// `L²`-normalized Gaussian `c·exp(-|x - x0|²/(2σ²))`.
pub fn normalized_gaussian(grid: GridSpec, center: &[f64], sigma: f64) -> Result<SpectralField> {
    if center.len() != grid.dim {
        return Err(Error::InvalidArgument(format!(
            "centre has dimension {}, grid has {}",
            center.len(),
            grid.dim
        )));
    }
    let raw = SpectralField::from_real_fn(grid, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-r2 / (2.0 * sigma * sigma)).exp()
    });
    let norm = raw.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("Gaussian vanishes on the grid".into()));
    }
    Ok(raw.scale(1.0 / norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1() -> GridSpec {
        GridSpec::new(1, 8.0, 64).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(4, 1.0, 16).is_err());
        assert!(GridSpec::new(1, 1.0, 24).is_err());
        assert!(GridSpec::new(1, 1.0, 8).is_err());
        assert!(GridSpec::new(1, 0.0, 16).is_err());
    }

    #[test]
    fn frequencies_follow_fft_order() {
        let g = grid1();
        let f = g.axis_freqs();
        let step = std::f64::consts::PI / 8.0;
        assert_eq!(f[1], step);
        assert_eq!(f[32], -32.0 * step);
        assert_eq!(f[63], -step);
    }

    #[test]
    fn single_mode_spectrum() {
        let g = grid1();
        let xi0 = g.axis_freqs()[3];
        let f = SpectralField::from_fn(g, |x| Complex64::from_polar(1.0, xi0 * x[0]));
        let s = f.spectrum();
        for (k, c) in s.iter().enumerate() {
            if k == 3 {
                assert!((c.norm() - 64.0).abs() < 1e-10);
            } else {
                assert!(c.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn round_trip_2d() {
        let g = GridSpec::new(2, 3.0, 16).unwrap();
        let f = SpectralField::from_fn(g, |x| Complex64::new(x[0].sin() * x[1], x[0] - x[1] * x[1]));
        let back = SpectralField::from_spectrum(g, f.spectrum().to_vec()).unwrap();
        let err: f64 = f
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert!(err.sqrt() <= 1e-13 * f.norm() / g.cell_volume().sqrt());
        assert!((f.norm_sq() - f.spectral_norm_sq()).abs() <= 1e-12 * f.norm_sq());
    }

    #[test]
    fn container_round_trip() {
        let g = GridSpec::new(2, 2.5, 16).unwrap();
        let f = SpectralField::from_fn(g, |x| Complex64::new(x[0], -x[1]));
        let back = SpectralField::from_bytes(&f.to_bytes()).unwrap();
        assert_eq!(f, back);
        let mut bad = f.to_bytes();
        bad.pop();
        assert!(SpectralField::from_bytes(&bad).is_err());
    }

    #[test]
    fn csv_only_in_one_dimension() {
        let f = SpectralField::zeros(grid1());
        let csv = f.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 65);
        assert!(SpectralField::zeros(GridSpec::new(2, 1.0, 16).unwrap())
            .to_csv()
            .is_err());
    }

    #[test]
    fn continuous_transform_of_gaussian() {
        // g(x) = exp(-x²/2) has ĝ(ξ) = √(2π) exp(-ξ²/2)
        let g = GridSpec::new(1, 10.0, 128).unwrap();
        let f = SpectralField::from_continuous_transform(g, |xi| {
            Complex64::new((2.0 * std::f64::consts::PI).sqrt() * (-xi[0] * xi[0] / 2.0).exp(), 0.0)
        })
        .unwrap();
        for (x, v) in g.axis_points().iter().zip(f.values()) {
            assert!((v - Complex64::new((-x * x / 2.0).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn truncation_warning_triggers_for_short_times() {
        let fam = SymbolFamily::heat(1, 1.0).unwrap();
        let g = GridSpec::new(1, 8.0, 256).unwrap();
        assert!(truncation_check(&fam, &g, 0.0).unwrap().is_none());
        assert!(truncation_check(&fam, &g, 0.9999).unwrap().is_some());
    }
}
