//! Strang-split time integrators for the exact Klein-Gordon system, the
//! vector envelope equation and the three scalar envelope models, plus the
//! carrier reconstruction that maps envelopes back to the oscillating field.
//!
//! Every integrator advances `S_L(Δt/2) S_NL(Δt) S_L(Δt/2)`. Linear substeps
//! are exact Fourier multipliers; nonlinear substeps are exact where a
//! closed form exists (phase or rigid rotations) and explicit midpoint
//! steps otherwise.

use std::fmt;
use std::str::FromStr;

use log::warn;
use num_complex::Complex64;

use crate::dispersion::{CarrierPoint, KgParams, PadeCoefficients, SymbolModel};
use crate::error::{Error, Result};
use crate::pulses::InitialData;
use crate::spectral::{Field, PeriodicGrid, Space, Transformer};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    ExactKg,
    Envelope,
    FullDispersion,
    Nls,
    ImprovedNls,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        Self::ExactKg,
        Self::Envelope,
        Self::FullDispersion,
        Self::Nls,
        Self::ImprovedNls,
    ];

    /// The three scalar approximations compared in the sweeps, in the order
    /// `j = 1, 2, 3`.
    pub const SCALAR: [ModelKind; 3] = [Self::FullDispersion, Self::Nls, Self::ImprovedNls];

    pub fn name(self) -> &'static str {
        match self {
            Self::ExactKg => "exact",
            Self::Envelope => "envelope",
            Self::FullDispersion => "fd",
            Self::Nls => "nls",
            Self::ImprovedNls => "improved",
        }
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, Self::FullDispersion | Self::Nls | Self::ImprovedNls)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" | "exactkg" | "kg" => Ok(Self::ExactKg),
            "envelope" | "env" => Ok(Self::Envelope),
            "fd" | "full" | "fulldispersion" => Ok(Self::FullDispersion),
            "nls" | "schrodinger" => Ok(Self::Nls),
            "improved" | "improvednls" | "pade" => Ok(Self::ImprovedNls),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// Polarization used by the full-dispersion model to couple the second
/// component and to project the cubic term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Polarization {
    /// Fixed carrier eigenvector `π₁(k̄)`.
    #[default]
    Carrier,
    /// Mode-dependent eigenvector `π₁(k̄ + εξ)`.
    Shifted,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Carrier => "carrier",
            Self::Shifted => "shifted",
        })
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "carrier" => Ok(Self::Carrier),
            "shifted" => Ok(Self::Shifted),
            other => Err(Error::InvalidParameter(format!(
                "unknown polarization '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: KgParams,
    pub eps: f64,
    pub dt: f64,
    pub t_final: f64,
    pub grid: PeriodicGrid,
    /// Time between recorded snapshots; `None` records only the endpoints.
    pub snapshot_interval: Option<f64>,
    /// Truncate modes with `|m| > N/3` after each nonlinear substep.
    pub dealias: bool,
    /// Switch for the cubic terms.
    pub nonlinear: bool,
    /// Only read by the full-dispersion model.
    pub polarization: Polarization,
}

impl SolverConfig {
    /// Toy carrier, `t_final = 1/ε`, snapshots every `1/(100ε)`.
    pub fn new(grid: PeriodicGrid, eps: f64, dt: f64) -> Self {
        Self {
            params: KgParams::toy(),
            eps,
            dt,
            t_final: 1.0 / eps,
            grid,
            snapshot_interval: Some(0.01 / eps),
            dealias: false,
            nonlinear: true,
            polarization: Polarization::Carrier,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be >= 0, got {}",
                self.t_final
            )));
        }
        if let Some(s) = self.snapshot_interval {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "snapshot interval must be positive, got {s}"
                )));
            }
        }
        KgParams::new(self.params.v, self.params.kbar)?;
        Ok(())
    }
}

/// Real fields `(f, g)` of the two-component system.
#[derive(Debug, Clone, PartialEq)]
pub struct KgState {
    pub f: Field,
    pub g: Field,
}

impl KgState {
    /// `∫ (|f|² + |g|²) dx`.
    pub fn energy(&self) -> f64 {
        self.f.l2_norm().powi(2) + self.g.l2_norm().powi(2)
    }
}

/// Two-component complex envelope of the vector envelope equation.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorEnvelope {
    pub u1: Field,
    pub u2: Field,
}

impl VectorEnvelope {
    pub fn from_initial(data: &InitialData) -> Self {
        let (u1, u2) = data.polarized();
        Self { u1, u2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Kg(KgState),
    Vector(VectorEnvelope),
    Scalar(Field),
}

impl ModelState {
    pub fn grid(&self) -> &PeriodicGrid {
        match self {
            Self::Kg(s) => s.f.grid(),
            Self::Vector(s) => s.u1.grid(),
            Self::Scalar(f) => f.grid(),
        }
    }

    /// The quantity each model conserves: `∫|f|²+|g|²` for the exact system,
    /// `∫|U|²` for envelopes.
    pub fn l2_squared(&self) -> f64 {
        match self {
            Self::Kg(s) => s.energy(),
            Self::Vector(s) => s.u1.l2_norm().powi(2) + s.u2.l2_norm().powi(2),
            Self::Scalar(f) => f.l2_norm().powi(2),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Self::Kg(_) => "two-component real state",
            Self::Vector(_) => "vector envelope",
            Self::Scalar(_) => "scalar envelope",
        }
    }
}

/// Per-mode data of the exact linear KG flow `exp(-tM(ξ))`,
/// `M = [[0, iξ - v/ε], [iξ + v/ε, 0]]`, `M² = -(ξ² + v²/ε²)`.
struct KgKernel {
    f: Vec<Complex64>,
    g: Vec<Complex64>,
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
    mu: Vec<f64>,
    cos: Vec<f64>,
    sinc: Vec<f64>,
}

/// Per-mode data of `exp(-i(t/ε)(H(k̄+εξ) - ω̄))`,
/// `H(k) = [[0, k + iv], [k - iv, 0]]`.
struct VectorKernel {
    u1: Vec<Complex64>,
    u2: Vec<Complex64>,
    w1: Vec<Complex64>,
    w2: Vec<Complex64>,
    diag: Vec<Complex64>,
    p12: Vec<Complex64>,
    p21: Vec<Complex64>,
}

struct ScalarKernel {
    f: Vec<Complex64>,
    symbol: Vec<f64>,
    phase: Vec<Complex64>,
    /// `R(ξ) = 1/(1 + εbξ + ε²Bξ²)` for the improved model.
    smoothing: Option<Vec<f64>>,
    /// Second component `y(ξ)` of the eigenvector at `k̄ + εξ`.
    coupling: Option<Vec<Complex64>>,
    work: Vec<Complex64>,
    k: Vec<Complex64>,
    second: Vec<Complex64>,
}

enum Kernel {
    Kg(KgKernel),
    Vector(VectorKernel),
    Scalar(ScalarKernel),
}

/// A model advanced in time; its state lives in Fourier space between steps.
pub struct Solver {
    model: ModelKind,
    cfg: SolverConfig,
    carrier: CarrierPoint,
    time: f64,
    steps: usize,
    half_step: f64,
    kernel: Kernel,
    tr: Transformer,
    dealias_mask: Option<Vec<bool>>,
}

fn spectral_copy(field: &Field, grid: &PeriodicGrid) -> Result<Vec<Complex64>> {
    if field.grid() != grid {
        return Err(Error::SizeMismatch {
            expected: grid.n(),
            found: field.grid().n(),
        });
    }
    Ok(field.to_spectral().into_values())
}

fn nyquist_safe_ik(grid: &PeriodicGrid, i: usize) -> f64 {
    if i == grid.nyquist_slot() {
        0.0
    } else {
        grid.wavenumber(i)
    }
}

impl Solver {
    pub fn new(model: ModelKind, initial: &ModelState, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = &cfg.grid;
        let n = grid.n();
        let eps = cfg.eps;
        let KgParams { v, kbar } = cfg.params;
        let carrier = CarrierPoint::kg(cfg.params);
        let mismatch = || {
            Error::InvalidParameter(format!(
                "model {model} cannot start from a {}",
                initial.kind_name()
            ))
        };
        let kernel = match model {
            ModelKind::ExactKg => {
                let ModelState::Kg(s) = initial else {
                    return Err(mismatch());
                };
                let mut upper = Vec::with_capacity(n);
                let mut lower = Vec::with_capacity(n);
                let mut mu = Vec::with_capacity(n);
                for i in 0..n {
                    let xi = nyquist_safe_ik(grid, i);
                    upper.push(Complex64::new(-v / eps, xi));
                    lower.push(Complex64::new(v / eps, xi));
                    mu.push((xi * xi + v * v / (eps * eps)).sqrt());
                }
                let mut f = spectral_copy(&s.f, grid)?;
                let mut g = spectral_copy(&s.g, grid)?;
                symmetrize(&mut f);
                symmetrize(&mut g);
                Kernel::Kg(KgKernel {
                    f,
                    g,
                    upper,
                    lower,
                    mu,
                    cos: vec![],
                    sinc: vec![],
                })
            }
            ModelKind::Envelope => {
                let ModelState::Vector(s) = initial else {
                    return Err(mismatch());
                };
                Kernel::Vector(VectorKernel {
                    u1: spectral_copy(&s.u1, grid)?,
                    u2: spectral_copy(&s.u2, grid)?,
                    w1: vec![ZERO; n],
                    w2: vec![ZERO; n],
                    diag: vec![],
                    p12: vec![],
                    p21: vec![],
                })
            }
            ModelKind::FullDispersion | ModelKind::Nls | ModelKind::ImprovedNls => {
                let ModelState::Scalar(f) = initial else {
                    return Err(mismatch());
                };
                let (sym, smoothing) = match model {
                    ModelKind::FullDispersion => (SymbolModel::exact(carrier), None),
                    ModelKind::Nls => (SymbolModel::taylor2(carrier), None),
                    _ => {
                        let pade = PadeCoefficients::kg(cfg.params)?;
                        let r = grid
                            .wavenumbers()
                            .into_iter()
                            .map(|xi| 1.0 / pade.denominator(xi, eps))
                            .collect();
                        (SymbolModel::pade32(carrier, pade), Some(r))
                    }
                };
                let symbol = grid
                    .wavenumbers()
                    .into_iter()
                    .map(|xi| sym.eval(xi, eps))
                    .collect();
                let shifted =
                    model == ModelKind::FullDispersion && cfg.polarization == Polarization::Shifted;
                let coupling = shifted.then(|| {
                    grid.wavenumbers()
                        .into_iter()
                        .map(|xi| {
                            let k = kbar + eps * xi;
                            Complex64::new(k, -v) / k.hypot(v)
                        })
                        .collect()
                });
                Kernel::Scalar(ScalarKernel {
                    f: spectral_copy(f, grid)?,
                    symbol,
                    phase: vec![],
                    smoothing,
                    coupling,
                    work: vec![ZERO; n],
                    k: vec![ZERO; n],
                    second: if shifted { vec![ZERO; n] } else { vec![] },
                })
            }
        };
        let dealias_mask = cfg.dealias.then(|| {
            (0..n)
                .map(|i| (grid.mode(i).unsigned_abs() as usize) * 3 <= n)
                .collect()
        });
        Ok(Self {
            model,
            cfg: cfg.clone(),
            carrier,
            time: 0.0,
            steps: 0,
            half_step: f64::NAN,
            kernel,
            tr: grid.transformer(),
            dealias_mask,
        })
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn prepare_linear(&mut self, h: f64) {
        if self.half_step.to_bits() == h.to_bits() {
            return;
        }
        self.half_step = h;
        let eps = self.cfg.eps;
        let grid = &self.cfg.grid;
        match &mut self.kernel {
            Kernel::Kg(k) => {
                k.cos = k.mu.iter().map(|m| (m * h).cos()).collect();
                k.sinc = k.mu.iter().map(|m| (m * h).sin() / m).collect();
            }
            Kernel::Vector(k) => {
                let KgParams { v, kbar } = self.cfg.params;
                let rot = Complex64::from_polar(1.0, self.carrier.omega * h / eps);
                let n = grid.n();
                k.diag = Vec::with_capacity(n);
                k.p12 = Vec::with_capacity(n);
                k.p21 = Vec::with_capacity(n);
                for i in 0..n {
                    let kk = kbar + eps * grid.wavenumber(i);
                    let mu = kk.hypot(v);
                    let phi = mu * h / eps;
                    let s = -I * rot * (phi.sin() / mu);
                    k.diag.push(rot * phi.cos());
                    k.p12.push(s * Complex64::new(kk, v));
                    k.p21.push(s * Complex64::new(kk, -v));
                }
            }
            Kernel::Scalar(k) => {
                k.phase = k
                    .symbol
                    .iter()
                    .map(|m| Complex64::from_polar(1.0, -m * h))
                    .collect();
            }
        }
    }

    fn linear(&mut self) {
        match &mut self.kernel {
            Kernel::Kg(k) => {
                for i in 0..k.f.len() {
                    let (f, g) = (k.f[i], k.g[i]);
                    let (c, s) = (k.cos[i], k.sinc[i]);
                    k.f[i] = c * f - s * k.upper[i] * g;
                    k.g[i] = c * g - s * k.lower[i] * f;
                }
            }
            Kernel::Vector(k) => {
                for i in 0..k.u1.len() {
                    let (a, b) = (k.u1[i], k.u2[i]);
                    k.u1[i] = k.diag[i] * a + k.p12[i] * b;
                    k.u2[i] = k.p21[i] * a + k.diag[i] * b;
                }
            }
            Kernel::Scalar(k) => {
                k.f.iter_mut().zip(&k.phase).for_each(|(c, p)| *c *= p);
            }
        }
    }

    fn nonlinear(&mut self, h: f64) -> Result<()> {
        let eps = self.cfg.eps;
        let v = self.cfg.params.v;
        let gamma = self.cfg.params.cubic_coefficient();
        let mut finite = true;
        match &mut self.kernel {
            Kernel::Kg(k) => {
                // f and g are real, so f + ig carries both in one transform.
                let z = &mut k.f;
                for (zi, gi) in z.iter_mut().zip(&k.g) {
                    *zi += I * gi;
                }
                self.tr.inverse(z);
                for zi in z.iter_mut() {
                    let (f, g) = (zi.re, zi.im);
                    let theta = eps * v * (f * f + g * g) * h;
                    finite &= theta.is_finite();
                    let (s, c) = sin_cos(theta);
                    *zi = Complex64::new(c * f - s * g, s * f + c * g);
                }
                self.tr.forward(z);
                unpack_real_pair(z, &mut k.g);
            }
            Kernel::Vector(k) => {
                k.w1.copy_from_slice(&k.u1);
                k.w2.copy_from_slice(&k.u2);
                self.tr.inverse(&mut k.w1);
                self.tr.inverse(&mut k.w2);
                for (a, b) in k.w1.iter_mut().zip(k.w2.iter_mut()) {
                    let rhs = |p: Complex64, q: Complex64| {
                        let mass = 2.0 * (p.norm_sqr() + q.norm_sqr());
                        let dot = p * p + q * q;
                        let (ep, eq) = (-v * q, v * p);
                        let (ebp, ebq) = (-v * q.conj(), v * p.conj());
                        (eps * (mass * ep + dot * ebp), eps * (mass * eq + dot * ebq))
                    };
                    let (p, q) = (*a, *b);
                    let (k1p, k1q) = rhs(p, q);
                    let (k2p, k2q) = rhs(p + 0.5 * h * k1p, q + 0.5 * h * k1q);
                    *a = p + h * k2p;
                    *b = q + h * k2q;
                    finite &= a.re.is_finite()
                        && a.im.is_finite()
                        && b.re.is_finite()
                        && b.im.is_finite();
                }
                self.tr.forward(&mut k.w1);
                self.tr.forward(&mut k.w2);
                k.u1.copy_from_slice(&k.w1);
                k.u2.copy_from_slice(&k.w2);
            }
            Kernel::Scalar(k) if k.smoothing.is_none() && k.coupling.is_none() => {
                self.tr.inverse(&mut k.f);
                for c in k.f.iter_mut() {
                    let theta = gamma * eps * c.norm_sqr() * h;
                    finite &= theta.is_finite();
                    let (s, co) = sin_cos(theta);
                    *c *= Complex64::new(co, s);
                }
                self.tr.forward(&mut k.f);
            }
            Kernel::Scalar(k) => {
                // explicit midpoint on f' = R(D)(iγε|f|²f), or on the projected
                // vector cubic term when the polarization follows the mode
                let smoothing = k.smoothing.as_deref();
                let coupling = k.coupling.as_deref();
                let second = &mut k.second;
                let mut rhs =
                    |buf: &mut Vec<Complex64>, tr: &mut Transformer, finite: &mut bool| {
                        if let Some(y) = coupling {
                            second
                                .iter_mut()
                                .zip(buf.iter())
                                .zip(y)
                                .for_each(|((s, f), yi)| *s = f * yi);
                            tr.inverse(buf);
                            tr.inverse(second);
                            for (p, q) in buf.iter_mut().zip(second.iter_mut()) {
                                let [a, b] = envelope_cubic([*p, *q], v);
                                *p = eps * a;
                                *q = eps * b;
                                *finite &= p.re.is_finite()
                                    && p.im.is_finite()
                                    && q.re.is_finite()
                                    && q.im.is_finite();
                            }
                            tr.forward(buf);
                            tr.forward(second);
                            for ((c, s), yi) in buf.iter_mut().zip(second.iter()).zip(y) {
                                *c = 0.5 * (*c + yi.conj() * s);
                            }
                        } else {
                            tr.inverse(buf);
                            for c in buf.iter_mut() {
                                *c = I * (gamma * eps * c.norm_sqr()) * *c;
                                *finite &= c.re.is_finite() && c.im.is_finite();
                            }
                            tr.forward(buf);
                        }
                        if let Some(r) = smoothing {
                            buf.iter_mut().zip(r).for_each(|(c, ri)| *c *= ri);
                        }
                    };
                k.work.copy_from_slice(&k.f);
                rhs(&mut k.work, &mut self.tr, &mut finite);
                for ((m, f), k1) in k.k.iter_mut().zip(&k.f).zip(&k.work) {
                    *m = f + 0.5 * h * k1;
                }
                rhs(&mut k.k, &mut self.tr, &mut finite);
                for (f, k2) in k.f.iter_mut().zip(&k.k) {
                    *f += h * k2;
                }
            }
        }
        if !finite {
            return Err(Error::NonFinite {
                what: "nonlinear substep",
                time: self.time,
            });
        }
        if let Some(mask) = &self.dealias_mask {
            let apply = |buf: &mut [Complex64]| {
                buf.iter_mut()
                    .zip(mask)
                    .filter(|(_, &keep)| !keep)
                    .for_each(|(c, _)| *c = ZERO)
            };
            match &mut self.kernel {
                Kernel::Kg(k) => {
                    apply(&mut k.f);
                    apply(&mut k.g);
                }
                Kernel::Vector(k) => {
                    apply(&mut k.u1);
                    apply(&mut k.u2);
                }
                Kernel::Scalar(k) => apply(&mut k.f),
            }
        }
        Ok(())
    }

    /// One Strang step `S_L(dt/2) S_NL(dt) S_L(dt/2)`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        self.prepare_linear(0.5 * dt);
        self.linear();
        if self.cfg.nonlinear {
            self.nonlinear(dt)?;
        }
        self.linear();
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    /// Advances to `target` with equal steps no longer than the configured
    /// `dt`.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        let span = target - self.time;
        if span <= 0.0 {
            return Ok(());
        }
        let n = ((span / self.cfg.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = span / n as f64;
        for _ in 0..n {
            self.step(dt)?;
        }
        self.time = target;
        Ok(())
    }

    /// Current state in physical space.
    pub fn state(&self) -> ModelState {
        let grid = &self.cfg.grid;
        let phys = |v: &[Complex64]| {
            Field::new(grid, v.to_vec(), Space::Spectral)
                .expect("grid-sized buffer")
                .to_physical()
        };
        match &self.kernel {
            Kernel::Kg(k) => {
                let mut f = phys(&k.f);
                let mut g = phys(&k.g);
                // exact realness: drop round-off imaginary parts
                f.values_mut().iter_mut().for_each(|c| c.im = 0.0);
                g.values_mut().iter_mut().for_each(|c| c.im = 0.0);
                ModelState::Kg(KgState { f, g })
            }
            Kernel::Vector(k) => ModelState::Vector(VectorEnvelope {
                u1: phys(&k.u1),
                u2: phys(&k.u2),
            }),
            Kernel::Scalar(k) => ModelState::Scalar(phys(&k.f)),
        }
    }

    /// Conserved `L²`-type quantity evaluated from the Fourier coefficients.
    pub fn l2_squared(&self) -> f64 {
        let l = self.cfg.grid.length();
        let sum = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
        match &self.kernel {
            Kernel::Kg(k) => l * (sum(&k.f) + sum(&k.g)),
            Kernel::Vector(k) => l * (sum(&k.u1) + sum(&k.u2)),
            Kernel::Scalar(k) => l * sum(&k.f),
        }
    }
}

/// `(sin θ, cos θ)`; truncated series below `|θ| < 0.05`, where the
/// remainder is under 1e-17.
#[inline]
fn sin_cos(theta: f64) -> (f64, f64) {
    if theta.abs() < 0.05 {
        let t2 = theta * theta;
        let s = theta * (1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0)));
        let c = 1.0 - t2 / 2.0 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0 * (1.0 - t2 / 56.0)));
        (s, c)
    } else {
        theta.sin_cos()
    }
}

/// Enforces `c(-m) = conj(c(m))` so the field is exactly real.
fn symmetrize(c: &mut [Complex64]) {
    let n = c.len();
    for i in 0..=n / 2 {
        let j = (n - i) % n;
        let avg = 0.5 * (c[i] + c[j].conj());
        c[i] = avg;
        c[j] = avg.conj();
    }
}

/// Splits the spectrum `z` of `f + ig` (f, g real) into `f̂` (left in `z`)
/// and `ĝ`.
fn unpack_real_pair(z: &mut [Complex64], g: &mut [Complex64]) {
    let n = z.len();
    for i in 0..=n / 2 {
        let j = (n - i) % n;
        let (a, b) = (z[i], z[j].conj());
        let fi = 0.5 * (a + b);
        let gi = -0.5 * I * (a - b);
        z[i] = fi;
        g[i] = gi;
        z[j] = fi.conj();
        g[j] = gi.conj();
    }
}

/// One Strang step of the exact system.
pub fn step_exact_kg(state: &KgState, dt: f64, cfg: &SolverConfig) -> Result<KgState> {
    let mut s = Solver::new(ModelKind::ExactKg, &ModelState::Kg(state.clone()), cfg)?;
    s.step(dt)?;
    match s.state() {
        ModelState::Kg(k) => Ok(k),
        _ => unreachable!(),
    }
}

/// One Strang step of the vector envelope equation.
pub fn step_envelope(
    state: &VectorEnvelope,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<VectorEnvelope> {
    let mut s = Solver::new(ModelKind::Envelope, &ModelState::Vector(state.clone()), cfg)?;
    s.step(dt)?;
    match s.state() {
        ModelState::Vector(v) => Ok(v),
        _ => unreachable!(),
    }
}

/// One Strang step of a scalar model.
pub fn step_scalar(state: &Field, dt: f64, model: ModelKind, cfg: &SolverConfig) -> Result<Field> {
    if !model.is_scalar() {
        return Err(Error::InvalidParameter(format!(
            "{model} is not a scalar model"
        )));
    }
    let mut s = Solver::new(model, &ModelState::Scalar(state.clone()), cfg)?;
    s.step(dt)?;
    match s.state() {
        ModelState::Scalar(f) => Ok(f),
        _ => unreachable!(),
    }
}

/// The cubic envelope term `𝒯(U) = 2|U|²EU + (U·U)EŪ` of the KG example at
/// one point, with `E = [[0, -v], [v, 0]]`.
pub fn envelope_cubic(u: [Complex64; 2], v: f64) -> [Complex64; 2] {
    let [p, q] = u;
    let mass = 2.0 * (p.norm_sqr() + q.norm_sqr());
    let dot = p * p + q * q;
    [
        mass * (-v * q) + dot * (-v * q.conj()),
        mass * (v * p) + dot * (v * p.conj()),
    ]
}

/// Minimum number of nodes per carrier wavelength before a warning.
pub const CARRIER_POINTS: f64 = 8.0;

/// Lab-frame fields `U e^{i(k̄x - ω̄t)/ε} + c.c.` of an envelope state, on
/// `grid` (the envelope is spectrally interpolated when grids differ).
pub fn reconstruct(
    state: &ModelState,
    t: f64,
    eps: f64,
    params: KgParams,
    grid: &PeriodicGrid,
) -> Result<KgState> {
    let carrier_k = params.kbar.abs() / eps;
    if (grid.n() as f64) < CARRIER_POINTS * grid.length() * carrier_k / (2.0 * std::f64::consts::PI)
    {
        warn!(
            "carrier wavenumber {carrier_k:.1} under-resolved on N = {} (fewer than {CARRIER_POINTS} points per wavelength)",
            grid.n()
        );
    }
    let (u1, u2) = match state {
        ModelState::Kg(s) => {
            return Ok(KgState {
                f: s.f.resample(grid)?,
                g: s.g.resample(grid)?,
            })
        }
        ModelState::Vector(s) => (s.u1.resample(grid)?, s.u2.resample(grid)?),
        ModelState::Scalar(f) => {
            let f = f.resample(grid)?;
            let y = params.polarization();
            let mut g = f.clone();
            g.values_mut().iter_mut().for_each(|c| *c *= y);
            (f, g)
        }
    };
    let omega = params.omega1(params.kbar);
    let mut f = Vec::with_capacity(grid.n());
    let mut g = Vec::with_capacity(grid.n());
    for j in 0..grid.n() {
        let e = Complex64::from_polar(1.0, (params.kbar * grid.node(j) - omega * t) / eps);
        f.push(2.0 * (u1.values()[j] * e).re);
        g.push(2.0 * (u2.values()[j] * e).re);
    }
    Ok(KgState {
        f: Field::from_real(grid, &f)?,
        g: Field::from_real(grid, &g)?,
    })
}

/// Recovers the envelope of a real field by demodulating with
/// `e^{-i(k̄x - ω̄t)/ε}` and keeping `|ξ| < k̄/ε`, then resampling to
/// `envelope_grid`.
pub fn demodulate(
    f: &Field,
    t: f64,
    eps: f64,
    params: KgParams,
    envelope_grid: &PeriodicGrid,
) -> Result<Field> {
    let grid = f.grid().clone();
    let omega = params.omega1(params.kbar);
    let phys = f.to_physical();
    let vals = phys
        .values()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            c * Complex64::from_polar(1.0, -(params.kbar * grid.node(j) - omega * t) / eps)
        })
        .collect();
    let shifted = Field::new(&grid, vals, Space::Physical)?;
    let cut = params.kbar.abs() / eps;
    let low = shifted.apply_symbol(|xi| {
        if xi.abs() < cut {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })?;
    low.resample(envelope_grid)
}

/// Recorded states of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model: ModelKind,
    pub eps: f64,
    pub params: KgParams,
    pub times: Vec<f64>,
    pub states: Vec<ModelState>,
    pub steps: usize,
}

impl Trajectory {
    /// Lab-frame `f` at snapshot `i` on `grid`.
    pub fn lab_f(&self, i: usize, grid: &PeriodicGrid) -> Result<Field> {
        Ok(reconstruct(&self.states[i], self.times[i], self.eps, self.params, grid)?.f)
    }
}

/// Snapshot times `0, s, 2s, …` up to `t_final` (always included).
pub fn snapshot_times(t_final: f64, interval: Option<f64>) -> Vec<f64> {
    let mut times = vec![0.0];
    if let Some(s) = interval {
        let n = (t_final / s * (1.0 + 1e-12)).floor() as usize;
        times.extend((1..=n).map(|k| k as f64 * s));
    }
    if let Some(&last) = times.last() {
        if t_final - last > 1e-9 * t_final.max(1.0) {
            times.push(t_final);
        } else if let Some(l) = times.last_mut() {
            *l = t_final;
        }
    }
    times
}

/// Advances `initial` to `cfg.t_final`, recording the state at each snapshot
/// time.
pub fn run(model: ModelKind, initial: &ModelState, cfg: &SolverConfig) -> Result<Trajectory> {
    let mut solver = Solver::new(model, initial, cfg)?;
    let times = snapshot_times(cfg.t_final, cfg.snapshot_interval);
    let mut states = Vec::with_capacity(times.len());
    for &t in &times {
        solver.advance_to(t)?;
        states.push(solver.state());
    }
    Ok(Trajectory {
        model,
        eps: cfg.eps,
        params: cfg.params,
        times,
        states,
        steps: solver.steps(),
    })
}

/// Starting state of `model` built from a scalar envelope. For the exact
/// system `grid` must resolve the carrier.
pub fn initial_state(
    model: ModelKind,
    data: &InitialData,
    eps: f64,
    grid: &PeriodicGrid,
) -> Result<ModelState> {
    let env = data.envelope.resample(grid)?;
    let data = InitialData::new(env, data.params);
    Ok(match model {
        ModelKind::ExactKg => ModelState::Kg(crate::pulses::assemble_exact_ic(
            &data.envelope,
            eps,
            data.params,
        )?),
        ModelKind::Envelope => ModelState::Vector(VectorEnvelope::from_initial(&data)),
        _ => ModelState::Scalar(data.envelope),
    })
}
