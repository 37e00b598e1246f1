//! Uniform periodic grids, the discrete Fourier-series transform, Fourier
//! multipliers and the discrete norms used by the solvers and diagnostics.
//!
//! Coefficients are normalized as Fourier-series amplitudes,
//! `f(x_j) = Σ_m c_m e^{iξ_m x_j}`, so a unit plane wave has exactly one unit
//! coefficient and the Wiener norm `Σ|c_m|` is insensitive to dilations.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, BufRead, Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Domain length used by all numerical experiments, `30π`.
pub const DOMAIN_LENGTH: f64 = 30.0 * PI;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

/// Uniform grid on `[0, L)` with `N` nodes (a power of two) and the
/// wavenumbers `ξ_m = 2πm/L`, `m ∈ [-N/2, N/2)`, stored in FFT order.
#[derive(Clone)]
pub struct PeriodicGrid {
    length: f64,
    n: usize,
    plans: Arc<Plans>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl PeriodicGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid length must be positive, got {length}"
            )));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 2, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            length,
            n,
            plans: Arc::new(Plans {
                forward,
                inverse,
                scratch_len,
            }),
        })
    }

    /// `[0, 30π)` with `n` nodes.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(DOMAIN_LENGTH, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Wavenumber spacing `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest resolved wavenumber `πN/L`.
    pub fn kmax(&self) -> f64 {
        0.5 * self.n as f64 * self.dk()
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed mode number of FFT slot `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT slot holding signed mode `m`.
    pub fn slot(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n / 2
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.mode(idx) as f64 * self.dk()
    }

    /// All wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn transformer(&self) -> Transformer {
        Transformer {
            grid: self.clone(),
            scratch: vec![Complex64::new(0.0, 0.0); self.plans.scratch_len],
        }
    }
}

/// Reusable in-place transform with its own scratch space, for hot loops.
pub struct Transformer {
    grid: PeriodicGrid,
    scratch: Vec<Complex64>,
}

impl Transformer {
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Samples to normalized Fourier-series coefficients.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.grid.n);
        self.grid
            .plans
            .forward
            .process_with_scratch(buf, &mut self.scratch);
        let s = 1.0 / self.grid.n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
    }

    /// Coefficients back to samples.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.grid.n);
        self.grid
            .plans
            .inverse
            .process_with_scratch(buf, &mut self.scratch);
    }
}

/// Whether a [`Field`] holds point samples or Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Spectral,
}

impl Space {
    fn name(self) -> &'static str {
        match self {
            Space::Physical => "physical",
            Space::Spectral => "spectral",
        }
    }
}

/// Complex samples or coefficients on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<Complex64>,
    space: Space,
}

impl Field {
    pub fn new(grid: &PeriodicGrid, values: Vec<Complex64>, space: Space) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::SizeMismatch {
                expected: grid.n(),
                found: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            space,
        })
    }

    pub fn zeros(grid: &PeriodicGrid, space: Space) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
            space,
        }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.node(j))).collect();
        Self {
            grid: grid.clone(),
            values,
            space: Space::Physical,
        }
    }

    pub fn from_real(grid: &PeriodicGrid, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
            Space::Physical,
        )
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    fn expect(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::WrongSpace {
                expected: space.name(),
                found: self.space.name(),
            });
        }
        Ok(())
    }

    /// Physical samples to Fourier coefficients.
    pub fn forward(&self) -> Result<Field> {
        self.expect(Space::Physical)?;
        let mut out = self.clone();
        self.grid.transformer().forward(&mut out.values);
        out.space = Space::Spectral;
        Ok(out)
    }

    /// Fourier coefficients to physical samples.
    pub fn inverse(&self) -> Result<Field> {
        self.expect(Space::Spectral)?;
        let mut out = self.clone();
        self.grid.transformer().inverse(&mut out.values);
        out.space = Space::Physical;
        Ok(out)
    }

    pub fn to_spectral(&self) -> Field {
        match self.space {
            Space::Spectral => self.clone(),
            Space::Physical => self.forward().expect("physical field"),
        }
    }

    pub fn to_physical(&self) -> Field {
        match self.space {
            Space::Physical => self.clone(),
            Space::Spectral => self.inverse().expect("spectral field"),
        }
    }

    /// Multiplies coefficient `m` by `symbol[m]` (FFT order). The result is
    /// returned in the same space as `self`.
    pub fn apply_multiplier(&self, symbol: &[Complex64]) -> Result<Field> {
        if symbol.len() != self.grid.n() {
            return Err(Error::SizeMismatch {
                expected: self.grid.n(),
                found: symbol.len(),
            });
        }
        if symbol
            .iter()
            .any(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "non-finite multiplier sample".into(),
            ));
        }
        let mut spec = self.to_spectral();
        spec.values
            .iter_mut()
            .zip(symbol)
            .for_each(|(c, s)| *c *= s);
        Ok(match self.space {
            Space::Spectral => spec,
            Space::Physical => spec.inverse()?,
        })
    }

    /// Samples `symbol(ξ)` on the grid wavenumbers and applies it.
    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> Complex64) -> Result<Field> {
        let s: Vec<Complex64> = self.grid.wavenumbers().into_iter().map(symbol).collect();
        self.apply_multiplier(&s)
    }

    /// `∂x^order`, with the Nyquist mode dropped for odd orders.
    pub fn derivative(&self, order: u32) -> Result<Field> {
        let nyq = self.grid.nyquist_slot();
        let s: Vec<Complex64> = (0..self.grid.n())
            .map(|i| {
                if order % 2 == 1 && i == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, self.grid.wavenumber(i)).powu(order)
                }
            })
            .collect();
        self.apply_multiplier(&s)
    }

    /// `Σ_m |c_m|`.
    pub fn wiener_norm(&self) -> f64 {
        self.to_spectral().values.iter().map(|c| c.norm()).sum()
    }

    /// Discrete `L²` norm with quadrature weight `L/N`.
    pub fn l2_norm(&self) -> f64 {
        let phys = self.to_physical();
        (self.grid.dx() * phys.values.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.to_physical()
            .values
            .iter()
            .fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `(L², L∞)`.
    pub fn norms(&self) -> (f64, f64) {
        let phys = self.to_physical();
        (phys.l2_norm(), phys.linf_norm())
    }

    /// Largest `|Im|` of the physical samples.
    pub fn max_imag(&self) -> f64 {
        self.to_physical()
            .values
            .iter()
            .fold(0.0, |m, c| m.max(c.im.abs()))
    }

    /// Pointwise product of two physical fields on the same grid.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
        Ok(Field {
            grid: self.grid.clone(),
            values,
            space: Space::Physical,
        })
    }

    /// `self - other` in physical space.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let a = self.to_physical();
        let b = other.to_physical();
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
        Ok(Field {
            grid: self.grid.clone(),
            values,
            space: Space::Physical,
        })
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::SizeMismatch {
                expected: self.grid.n(),
                found: other.grid.n(),
            });
        }
        Ok(())
    }

    /// Trigonometric interpolation onto another grid of the same length by
    /// zero-padding or truncating the spectrum. The Nyquist coefficient is
    /// split evenly between `±N/2` when padding.
    pub fn resample(&self, grid: &PeriodicGrid) -> Result<Field> {
        if grid.length() != self.grid.length() {
            return Err(Error::InvalidParameter(
                "resampling requires equal domain lengths".into(),
            ));
        }
        if *grid == self.grid {
            return Ok(self.clone());
        }
        let src = self.to_spectral();
        let (ns, nd) = (self.grid.n() as i64, grid.n() as i64);
        let mut out = vec![Complex64::new(0.0, 0.0); grid.n()];
        if nd > ns {
            for m in (-ns / 2 + 1)..(ns / 2) {
                out[grid.slot(m)] = src.values[self.grid.slot(m)];
            }
            let half = 0.5 * src.values[self.grid.slot(-ns / 2)];
            out[grid.slot(-ns / 2)] = half;
            out[grid.slot(ns / 2)] = half;
        } else {
            for m in (-nd / 2 + 1)..(nd / 2) {
                out[grid.slot(m)] = src.values[self.grid.slot(m)];
            }
            out[grid.slot(-nd / 2)] =
                src.values[self.grid.slot(-nd / 2)] + src.values[self.grid.slot(nd / 2)];
        }
        let spec = Field {
            grid: grid.clone(),
            values: out,
            space: Space::Spectral,
        };
        Ok(match self.space {
            Space::Spectral => spec,
            Space::Physical => spec.inverse()?,
        })
    }

    /// Writes `x,re,im` rows of the physical samples.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let phys = self.to_physical();
        writeln!(w, "x,re,im")?;
        for (j, c) in phys.values.iter().enumerate() {
            writeln!(w, "{:.12e},{:.12e},{:.12e}", self.grid.node(j), c.re, c.im)?;
        }
        Ok(())
    }

    /// Reads rows written by [`Field::write_csv`] onto `grid`.
    pub fn read_csv<R: BufRead>(grid: &PeriodicGrid, r: R) -> Result<Field> {
        let mut values = Vec::with_capacity(grid.n());
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected 3 columns",
                    lineno + 1
                )));
            }
            let p = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            values.push(Complex64::new(p(cols[1])?, p(cols[2])?));
        }
        Field::new(grid, values, Space::Physical)
    }

    /// Little-endian `u64` sample count followed by `2N` doubles `(re, im)`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        let phys = self.to_physical();
        w.write_all(&(phys.values.len() as u64).to_le_bytes())?;
        for c in &phys.values {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(grid: &PeriodicGrid, mut r: R) -> Result<Field> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        if n != grid.n() {
            return Err(Error::SizeMismatch {
                expected: grid.n(),
                found: n,
            });
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            values.push(Complex64::new(re, im));
        }
        Field::new(grid, values, Space::Physical)
    }
}
