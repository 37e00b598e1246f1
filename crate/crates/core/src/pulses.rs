//! Initial envelopes for short and chirped pulses, their polarized lift to
//! the two-component system and the slowly-varying-envelope validity
//! diagnostic.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::dispersion::KgParams;
use crate::error::{Error, Result};
use crate::models::KgState;
use crate::spectral::{Field, PeriodicGrid};

/// A named real envelope profile `G`.
#[derive(Clone, Copy)]
pub struct Profile {
    pub name: &'static str,
    pub eval: fn(f64) -> f64,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile({})", self.name)
    }
}

impl PartialEq for Profile {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

fn gaussian(x: f64) -> f64 {
    (-x * x).exp()
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

fn super_gaussian(x: f64) -> f64 {
    (-x.powi(4)).exp()
}

const PROFILES: &[Profile] = &[
    Profile {
        name: "gaussian",
        eval: gaussian,
    },
    Profile {
        name: "sech",
        eval: sech,
    },
    Profile {
        name: "supergaussian",
        eval: super_gaussian,
    },
];

impl Profile {
    pub fn gaussian() -> Self {
        PROFILES[0]
    }

    pub fn by_name(name: &str) -> Result<Self> {
        PROFILES
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown profile '{name}'")))
    }

    pub fn names() -> impl Iterator<Item = &'static str> {
        PROFILES.iter().map(|p| p.name)
    }
}

impl Default for Profile {
    fn default() -> Self {
        Self::gaussian()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseKind {
    /// `G((x - x₀)/β)`.
    Short,
    /// `G(x - x₀) cos(cos((x - x₀)/β)/β)`.
    Chirped,
}

impl FromStr for PulseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "short" => Ok(Self::Short),
            "chirped" => Ok(Self::Chirped),
            other => Err(Error::InvalidParameter(format!(
                "unknown pulse kind '{other}'"
            ))),
        }
    }
}

impl fmt::Display for PulseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Short => "short",
            Self::Chirped => "chirped",
        })
    }
}

/// Default pulse center.
pub const DEFAULT_X0: f64 = 15.0;

/// Relative amplitude allowed at the domain boundary.
const BOUNDARY_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub kind: PulseKind,
    pub beta: f64,
    pub x0: f64,
    pub profile: Profile,
}

impl PulseSpec {
    pub fn new(kind: PulseKind, beta: f64, x0: f64, profile: Profile) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite".into()));
        }
        Ok(Self {
            kind,
            beta,
            x0,
            profile,
        })
    }

    pub fn short(beta: f64) -> Result<Self> {
        Self::new(PulseKind::Short, beta, DEFAULT_X0, Profile::gaussian())
    }

    pub fn chirped(beta: f64) -> Result<Self> {
        Self::new(PulseKind::Chirped, beta, DEFAULT_X0, Profile::gaussian())
    }

    /// Pointwise value of the envelope.
    pub fn value(&self, x: f64) -> f64 {
        let y = x - self.x0;
        match self.kind {
            PulseKind::Short => (self.profile.eval)(y / self.beta),
            PulseKind::Chirped => {
                (self.profile.eval)(y) * ((y / self.beta).cos() / self.beta).cos()
            }
        }
    }

    /// Samples the envelope and checks that it has decayed at the boundary.
    pub fn envelope(&self, grid: &PeriodicGrid) -> Result<Field> {
        let f = Field::from_fn(grid, |x| Complex64::new(self.value(x), 0.0));
        let peak = f.linf_norm();
        let edge = self.value(0.0).abs().max(self.value(grid.length()).abs());
        if peak > 0.0 && edge > BOUNDARY_TAIL * peak {
            return Err(Error::InvalidParameter(format!(
                "pulse not contained in the domain: boundary amplitude {edge:e}"
            )));
        }
        Ok(f)
    }
}

/// Short-pulse envelope `G((x - x₀)/β)` on `grid`.
pub fn build_short(grid: &PeriodicGrid, beta: f64, x0: f64, profile: Profile) -> Result<Field> {
    PulseSpec::new(PulseKind::Short, beta, x0, profile)?.envelope(grid)
}

/// Chirped envelope `G(x - x₀) cos(cos((x - x₀)/β)/β)` on `grid`.
pub fn build_chirped(grid: &PeriodicGrid, beta: f64, x0: f64, profile: Profile) -> Result<Field> {
    PulseSpec::new(PulseKind::Chirped, beta, x0, profile)?.envelope(grid)
}

/// A scalar envelope together with its carrier data.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub envelope: Field,
    pub params: KgParams,
}

impl InitialData {
    pub fn new(envelope: Field, params: KgParams) -> Self {
        Self {
            envelope: envelope.to_physical(),
            params,
        }
    }

    /// Polarized vector envelope `(f⁰, y f⁰)` lying in the range of `π₁(k̄)`.
    pub fn polarized(&self) -> (Field, Field) {
        let y = self.params.polarization();
        let mut g = self.envelope.clone();
        g.values_mut().iter_mut().for_each(|c| *c *= y);
        (self.envelope.clone(), g)
    }
}

/// Real fields `f = f⁰e^{ik̄x/ε} + c.c.`, `g = y f⁰e^{ik̄x/ε} + c.c.`.
pub fn assemble_exact_ic(envelope: &Field, eps: f64, params: KgParams) -> Result<KgState> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let env = envelope.to_physical();
    let grid = env.grid().clone();
    let y = params.polarization();
    let mut f = Vec::with_capacity(grid.n());
    let mut g = Vec::with_capacity(grid.n());
    for (j, a) in env.values().iter().enumerate() {
        let w = a * Complex64::from_polar(1.0, params.kbar * grid.node(j) / eps);
        f.push(2.0 * w.re);
        g.push(2.0 * (y * w).re);
    }
    Ok(KgState {
        f: Field::from_real(&grid, &f)?,
        g: Field::from_real(&grid, &g)?,
    })
}

/// Threshold above which the envelope is flagged as too steep for the SVEA.
pub const PRACTICAL_RULE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PracticalRule {
    /// `ε |∂x U⁰|_W`.
    pub value: f64,
    pub flagged: bool,
}

/// `ε |∂x U⁰|_W`, flagged when it reaches `threshold`.
pub fn practical_rule(envelope: &Field, eps: f64, threshold: f64) -> Result<PracticalRule> {
    let value = eps * envelope.derivative(1)?.wiener_norm();
    Ok(PracticalRule {
        value,
        flagged: value >= threshold,
    })
}

/// Root-mean-square wavenumber `(Σ ξ²|c|² / Σ|c|²)^{1/2}` of a field.
pub fn rms_bandwidth(field: &Field) -> f64 {
    let spec = field.to_spectral();
    let grid = spec.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, c) in spec.values().iter().enumerate() {
        let w = c.norm_sqr();
        let xi = grid.wavenumber(i);
        num += xi * xi * w;
        den += w;
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Largest `|ξ|` whose coefficient exceeds `tol` times the peak coefficient.
pub fn spectral_extent(field: &Field, tol: f64) -> f64 {
    let spec = field.to_spectral();
    let peak = spec.values().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    spec.values()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > tol * peak)
        .map(|(i, _)| spec.grid().wavenumber(i).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fwhm(f: &Field) -> f64 {
        let g = f.grid();
        let v: Vec<f64> = f.values().iter().map(|c| c.re).collect();
        let peak = v.iter().cloned().fold(f64::MIN, f64::max);
        let half = peak / 2.0;
        let above: Vec<usize> = (0..v.len()).filter(|&j| v[j] >= half).collect();
        let (a, b) = (above[0], *above.last().unwrap());
        // linear interpolation at both crossings
        let left = g.node(a - 1) + (half - v[a - 1]) / (v[a] - v[a - 1]) * g.dx();
        let right = g.node(b) + (v[b] - half) / (v[b] - v[b + 1]) * g.dx();
        right - left
    }

    #[test]
    fn short_pulse_peak_and_width() {
        let grid = PeriodicGrid::standard(8192).unwrap();
        let x0 = grid.node(1300);
        let wide = build_short(&grid, 1.0, x0, Profile::gaussian()).unwrap();
        assert!((wide.values()[1300].re - 1.0).abs() < 1e-15);
        let narrow = build_short(&grid, 0.1, x0, Profile::gaussian()).unwrap();
        let ratio = fwhm(&wide) / fwhm(&narrow);
        assert!((ratio - 10.0).abs() < 0.1, "FWHM ratio {ratio}");
    }

    #[test]
    fn chirped_values() {
        let grid = PeriodicGrid::standard(4096).unwrap();
        let x0 = grid.node(700);
        let beta = 0.3;
        let f = build_chirped(&grid, beta, x0, Profile::gaussian()).unwrap();
        assert!((f.values()[700].re - (1.0 / beta).cos()).abs() < 1e-15);
        let one = PulseSpec::chirped(1.0).unwrap();
        for x in [14.0, 15.3, 16.9] {
            let want = (-(x - 15.0f64).powi(2)).exp() * (x - 15.0f64).cos().cos();
            assert!((one.value(x) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn chirp_broadens_spectrum() {
        let grid = PeriodicGrid::standard(8192).unwrap();
        let wide = build_chirped(&grid, 1.0, 15.0, Profile::gaussian()).unwrap();
        let narrow = build_chirped(&grid, 0.1, 15.0, Profile::gaussian()).unwrap();
        assert!(rms_bandwidth(&narrow) >= 5.0 * rms_bandwidth(&wide));
    }

    #[test]
    fn spec_validation() {
        assert!(PulseSpec::short(0.0).is_err());
        assert!(PulseSpec::short(1.5).is_err());
        assert!(PulseSpec::short(1.0).is_ok());
        let grid = PeriodicGrid::standard(256).unwrap();
        // centered at the boundary: not contained
        assert!(build_short(&grid, 1.0, 0.5, Profile::gaussian()).is_err());
        assert!(Profile::by_name("nope").is_err());
        assert_eq!(Profile::by_name("Gaussian").unwrap(), Profile::gaussian());
        assert_eq!("chirped".parse::<PulseKind>().unwrap(), PulseKind::Chirped);
    }

    #[test]
    fn exact_ic_is_real_and_polarized() {
        let grid = PeriodicGrid::standard(4096).unwrap();
        let eps = 0.05;
        let env = build_short(&grid, 0.5, 15.0, Profile::gaussian()).unwrap();
        let st = assemble_exact_ic(&env, eps, KgParams::toy()).unwrap();
        assert_eq!(st.f.max_imag(), 0.0);
        assert_eq!(st.g.max_imag(), 0.0);
        for j in [100, 1000, 1500, 1632] {
            let x = grid.node(j);
            let want = 2.0 * (env.values()[j] * Complex64::from_polar(1.0, x / eps)).re;
            assert!((st.f.values()[j].re - want).abs() < 1e-14);
        }
        let zero = Field::zeros(&grid, crate::spectral::Space::Physical);
        let st0 = assemble_exact_ic(&zero, eps, KgParams::toy()).unwrap();
        assert_eq!(st0.f.linf_norm() + st0.g.linf_norm(), 0.0);
    }

    #[test]
    fn practical_rule_values() {
        let grid = PeriodicGrid::standard(256).unwrap();
        let zero = Field::zeros(&grid, crate::spectral::Space::Physical);
        assert_eq!(practical_rule(&zero, 0.01, 0.3).unwrap().value, 0.0);
        let k = 3.0 * grid.dk();
        let pw = Field::from_fn(&grid, |x| Complex64::from_polar(1.0, k * x));
        let r = practical_rule(&pw, 0.01, 0.3).unwrap();
        assert!((r.value - 0.01 * k).abs() < 1e-14);
        assert!(!r.flagged);
        assert!(practical_rule(&pw, 2.0, 0.3).unwrap().flagged);
    }
}
