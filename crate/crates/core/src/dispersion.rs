//! Dispersion relations of the Klein-Gordon and Maxwell-Lorentz example
//! systems, carrier-point expansions, the [3,2] Padé coefficients and the
//! symbol-error functions of the Schrödinger-type approximations.
//!
//! Symbols follow the convention that the linear part of a scalar envelope
//! model reads `∂t U + i m(D) U = 0` with `D = -i ∂x`, so a real symbol
//! gives a unitary flow.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `ω₁(k) = √(k² + v²)`, the upper branch of the Klein-Gordon dispersion
/// relation (the lower branch is its negative).
pub fn kg_omega1(k: f64, v: f64) -> f64 {
    k.hypot(v)
}

/// Parameters of the one-dimensional Klein-Gordon toy system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KgParams {
    /// Coupling `v` (the vector 𝐯 in one dimension).
    pub v: f64,
    /// Carrier wavenumber `k̄`.
    pub kbar: f64,
}

impl KgParams {
    pub fn new(v: f64, kbar: f64) -> Result<Self> {
        if !(v.is_finite() && v != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "v must be finite and nonzero, got {v}"
            )));
        }
        if !(kbar.is_finite() && kbar != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "carrier wavenumber must be finite and nonzero, got {kbar}"
            )));
        }
        Ok(Self { v, kbar })
    }

    /// The configuration used by all numerical experiments: `v = k̄ = 1`.
    pub fn toy() -> Self {
        Self { v: 1.0, kbar: 1.0 }
    }

    pub fn omega1(&self, k: f64) -> f64 {
        kg_omega1(k, self.v)
    }

    /// Second component of the carrier eigenvector `(1, y)` of
    /// `A(k̄) + E/i` for the eigenvalue `ω̄`; `y = (k̄ - iv)/ω̄`, unimodular.
    pub fn polarization(&self) -> Complex64 {
        let w = self.omega1(self.kbar);
        Complex64::new(self.kbar / w, -self.v / w)
    }

    /// Coefficient `γ` of the projected cubic term `π₁(k̄)𝒯(f e) = iγ|f|²f e`
    /// along the carrier eigenvector `e = (1, y)`; equals `4v²/ω̄`.
    pub fn cubic_coefficient(&self) -> f64 {
        4.0 * self.v * self.v / self.omega1(self.kbar)
    }
}

/// The seven Maxwell-Lorentz branches at `|k|`, sorted descending.
pub fn maxwell_omegas(k: f64) -> [f64; 7] {
    let k = k.abs();
    let plus = (2.0 * (1.0 + k) + k * k).sqrt();
    let minus = (2.0 * (1.0 - k) + k * k).sqrt();
    let w1 = 0.5 * (plus + minus);
    let w2 = std::f64::consts::SQRT_2;
    let w3 = 0.5 * (plus - minus);
    [w1, w2, w3, 0.0, -w3, -w2, -w1]
}

/// Which example system to assemble for the eigenvalue oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum ExampleSystem {
    /// Klein-Gordon with coupling vector `v ∈ ℝᵈ` (`n = 1 + d`).
    KleinGordon { v: Vec<f64> },
    /// Maxwell-Lorentz in three dimensions (`n = 12`).
    Maxwell,
}

/// Constant-coefficient matrices `A_1..A_d` and `E` of `∂t u + A(∂)u + E u/ε`.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub a: Vec<DMatrix<f64>>,
    pub e: DMatrix<f64>,
}

impl SystemMatrices {
    pub fn assemble(system: &ExampleSystem) -> Self {
        match system {
            ExampleSystem::KleinGordon { v } => {
                let d = v.len();
                let n = d + 1;
                let a = (0..d)
                    .map(|j| {
                        let mut m = DMatrix::zeros(n, n);
                        m[(0, j + 1)] = 1.0;
                        m[(j + 1, 0)] = 1.0;
                        m
                    })
                    .collect();
                let mut e = DMatrix::zeros(n, n);
                for (j, &vj) in v.iter().enumerate() {
                    e[(0, j + 1)] = -vj;
                    e[(j + 1, 0)] = vj;
                }
                Self { a, e }
            }
            ExampleSystem::Maxwell => {
                let d = 3;
                let n = 4 * d;
                // (curl)_j has entries (C_j)_{ac} = ε_{a j c}.
                let a = (0..d)
                    .map(|j| {
                        let mut m = DMatrix::zeros(n, n);
                        for ai in 0..d {
                            for c in 0..d {
                                let s = levi_civita(ai, j, c);
                                if s != 0.0 {
                                    m[(ai, d + c)] = s;
                                    m[(d + ai, c)] = -s;
                                }
                            }
                        }
                        m
                    })
                    .collect();
                let mut e = DMatrix::zeros(n, n);
                for i in 0..d {
                    e[(d + i, 2 * d + i)] = 1.0;
                    e[(2 * d + i, d + i)] = -1.0;
                    e[(2 * d + i, 3 * d + i)] = 1.0;
                    e[(3 * d + i, 2 * d + i)] = -1.0;
                }
                Self { a, e }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Checks symmetric `A_j` and skew-symmetric `E`.
    pub fn check_symmetric_hyperbolic(&self) -> Result<()> {
        const TOL: f64 = 1e-14;
        for (j, aj) in self.a.iter().enumerate() {
            if (aj - aj.transpose()).amax() > TOL {
                return Err(Error::AssumptionViolated(format!(
                    "A_{} is not symmetric",
                    j + 1
                )));
            }
        }
        if (&self.e + self.e.transpose()).amax() > TOL {
            return Err(Error::AssumptionViolated("E is not skew-symmetric".into()));
        }
        Ok(())
    }

    /// The hermitian matrix `A(k) + E/i`.
    pub fn hermitian_symbol(&self, k: &[f64]) -> Result<DMatrix<Complex64>> {
        if k.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                found: k.len(),
            });
        }
        let n = self.e.nrows();
        let mut h = DMatrix::from_fn(n, n, |r, c| Complex64::new(0.0, -self.e[(r, c)]));
        for (aj, &kj) in self.a.iter().zip(k) {
            h += aj.map(|x| Complex64::new(x * kj, 0.0));
        }
        Ok(h)
    }
}

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Numerically computed spectrum of `A(k) + E/i`, sorted descending.
///
/// Serves as ground truth for the closed-form branch formulas. Fails when the
/// assembled matrices break the symmetric-hyperbolic structure.
pub fn eigen_oracle(system: &ExampleSystem, k: &[f64]) -> Result<Vec<f64>> {
    let mats = SystemMatrices::assemble(system);
    mats.check_symmetric_hyperbolic()?;
    eigen_of(&mats, k)
}

pub(crate) fn eigen_of(mats: &SystemMatrices, k: &[f64]) -> Result<Vec<f64>> {
    let h = mats.hermitian_symbol(k)?;
    let eig = h.symmetric_eigenvalues();
    let mut out: Vec<f64> = eig.iter().copied().collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Derivatives of `ω₁` at the carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierPoint {
    pub params: KgParams,
    pub kbar: f64,
    /// `ω̄ = ω₁(k̄)`.
    pub omega: f64,
    /// Group velocity `ω₁'(k̄)`.
    pub cg: f64,
    /// `ω₁''(k̄)`.
    pub hess: f64,
    /// `ω₁'''(k̄)`.
    pub third: f64,
}

impl CarrierPoint {
    pub fn kg(params: KgParams) -> Self {
        let KgParams { v, kbar } = params;
        let w = params.omega1(kbar);
        let v2 = v * v;
        Self {
            params,
            kbar,
            omega: w,
            cg: kbar / w,
            hess: v2 / w.powi(3),
            third: -3.0 * kbar * v2 / w.powi(5),
        }
    }
}

/// Outcome of the runtime checks on the carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub omega: f64,
    /// `min_j |ω_j(3k̄) - 3ω̄|`; zero means a third-harmonic resonance.
    pub third_harmonic_gap: f64,
    /// `c₀ = inf_k |ω̄ - ω₂(k)| = ω̄ + |v|`.
    pub spectral_gap: f64,
    pub violations: Vec<String>,
}

impl AssumptionReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the non-resonance and spectral-gap conditions for the KG carrier.
pub fn assumption_checks(params: KgParams) -> AssumptionReport {
    let omega = params.omega1(params.kbar);
    let w3 = params.omega1(3.0 * params.kbar);
    let branches = [("omega_1", w3), ("omega_2", -w3)];
    let mut violations = Vec::new();
    let mut gap = f64::INFINITY;
    for (name, w) in branches {
        let d = (w - 3.0 * omega).abs();
        gap = gap.min(d);
        if d <= 1e-12 * omega.abs().max(1.0) {
            violations.push(format!(
                "third harmonic resonance on {name}: omega(3k) = 3*omega_bar"
            ));
        }
    }
    let spectral_gap = omega + params.v.abs();
    if spectral_gap <= 0.0 {
        violations.push("no spectral gap between omega_bar and omega_2".into());
    }
    AssumptionReport {
        omega,
        third_harmonic_gap: gap,
        spectral_gap,
        violations,
    }
}

/// Coefficients `(b, B, C)` of the improved Schrödinger model in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PadeCoefficients {
    pub b: f64,
    pub big_b: f64,
    pub c: f64,
}

impl PadeCoefficients {
    /// Validates `B > 0` and `4 - b²/B > 0`, which make
    /// `1 + εbξ + ε²Bξ²` positive for all real `ξ`.
    pub fn new(b: f64, big_b: f64, c: f64) -> Result<Self> {
        let p = Self { b, big_b, c };
        p.check()?;
        Ok(p)
    }

    /// The [3,2] Padé fit of the exact KG symbol at the carrier.
    pub fn kg(params: KgParams) -> Result<Self> {
        let KgParams { v, kbar } = params;
        let s = v * v + kbar * kbar;
        Self::new(
            2.0 * kbar / s,
            (v * v + 4.0 * kbar * kbar) / (4.0 * s * s),
            kbar * (3.0 * v * v + 4.0 * kbar * kbar) / (4.0 * s.powf(2.5)),
        )
    }

    /// `4 - b²/B`.
    pub fn discriminant_margin(&self) -> f64 {
        4.0 - self.b * self.b / self.big_b
    }

    pub fn check(&self) -> Result<()> {
        if !(self.b.is_finite() && self.big_b.is_finite() && self.c.is_finite()) {
            return Err(Error::AssumptionViolated(
                "non-finite Padé coefficient".into(),
            ));
        }
        if self.big_b <= 0.0 {
            return Err(Error::AssumptionViolated(format!(
                "B must be positive, got {}",
                self.big_b
            )));
        }
        if self.discriminant_margin() <= 0.0 {
            return Err(Error::AssumptionViolated(format!(
                "4 - b^2/B must be positive, got {}",
                self.discriminant_margin()
            )));
        }
        Ok(())
    }

    /// Smoothing denominator `1 + εbξ + ε²Bξ²`.
    pub fn denominator(&self, xi: f64, eps: f64) -> f64 {
        let s = eps * xi;
        1.0 + self.b * s + self.big_b * s * s
    }
}

/// Which approximation of `(ω₁(k̄+εξ) - ω̄)/ε` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Exact,
    Taylor2,
    Pade32,
}

/// A real Fourier symbol of one of the scalar envelope models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolModel {
    pub kind: SymbolKind,
    pub carrier: CarrierPoint,
    pub pade: Option<PadeCoefficients>,
}

impl SymbolModel {
    pub fn exact(carrier: CarrierPoint) -> Self {
        Self {
            kind: SymbolKind::Exact,
            carrier,
            pade: None,
        }
    }

    pub fn taylor2(carrier: CarrierPoint) -> Self {
        Self {
            kind: SymbolKind::Taylor2,
            carrier,
            pade: None,
        }
    }

    pub fn pade32(carrier: CarrierPoint, pade: PadeCoefficients) -> Self {
        Self {
            kind: SymbolKind::Pade32,
            carrier,
            pade: Some(pade),
        }
    }

    pub fn eval(&self, xi: f64, eps: f64) -> f64 {
        match self.kind {
            SymbolKind::Exact => m_exact(&self.carrier, xi, eps),
            SymbolKind::Taylor2 => m_taylor2(&self.carrier, xi, eps),
            SymbolKind::Pade32 => {
                let pade = self.pade.expect("Pade32 symbol without coefficients");
                m_pade(&self.carrier, &pade, xi, eps)
            }
        }
    }
}

/// `(ω₁(k̄+εξ) - ω̄)/ε` in the rationalized form
/// `(2k̄ξ + εξ²) / (ω₁(k̄+εξ) + ω̄)`, free of cancellation as `εξ → 0`.
pub fn m_exact(carrier: &CarrierPoint, xi: f64, eps: f64) -> f64 {
    let k = carrier.kbar + eps * xi;
    (2.0 * carrier.kbar * xi + eps * xi * xi) / (carrier.params.omega1(k) + carrier.omega)
}

/// Quadratic Taylor truncation `cg ξ + (ε/2) ω₁'' ξ²`.
pub fn m_taylor2(carrier: &CarrierPoint, xi: f64, eps: f64) -> f64 {
    carrier.cg * xi + 0.5 * eps * carrier.hess * xi * xi
}

/// Rational symbol
/// `(cg ξ + ε(ω₁''/2 + cg b)ξ² + ε²Cξ³) / (1 + εbξ + ε²Bξ²)`, the [3,2]
/// Padé approximant of [`m_exact`] in `εξ`.
pub fn m_pade(carrier: &CarrierPoint, pade: &PadeCoefficients, xi: f64, eps: f64) -> f64 {
    let num = carrier.cg * xi
        + eps * (0.5 * carrier.hess + carrier.cg * pade.b) * xi * xi
        + eps * eps * pade.c * xi * xi * xi;
    num / pade.denominator(xi, eps)
}

fn weight(xi: f64, eps: f64) -> f64 {
    eps * eps * eps * (1.0 + xi.abs().powi(3))
}

/// Symbol error of the Schrödinger model:
/// `(ω₁(k̄+εξ) - ω̄ - εcgξ - ε²ω₁''ξ²/2) / (ε³(1+|ξ|³))`.
pub fn c_schrod(xi: f64, eps: f64, carrier: &CarrierPoint) -> f64 {
    eps * (m_exact(carrier, xi, eps) - m_taylor2(carrier, xi, eps)) / weight(xi, eps)
}

/// Symbol error of the improved Schrödinger model, same normalization as
/// [`c_schrod`].
pub fn c_improved(xi: f64, eps: f64, carrier: &CarrierPoint, pade: &PadeCoefficients) -> f64 {
    eps * (m_exact(carrier, xi, eps) - m_pade(carrier, pade, xi, eps)) / weight(xi, eps)
}

/// One row of the `symbols` table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolRow {
    pub xi: f64,
    pub m_exact: f64,
    pub m_taylor2: f64,
    pub m_pade: f64,
    pub c_schrod: f64,
    pub c_improved: f64,
    pub ratio: f64,
}

/// Samples all symbols on `samples` equispaced points of `[lo, hi]`.
pub fn symbol_table(
    params: KgParams,
    eps: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<SymbolRow>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if samples < 2 || !(hi > lo) {
        return Err(Error::InvalidParameter(
            "symbol window needs hi > lo and >= 2 samples".into(),
        ));
    }
    let carrier = CarrierPoint::kg(params);
    let pade = PadeCoefficients::kg(params)?;
    let step = (hi - lo) / (samples - 1) as f64;
    Ok((0..samples)
        .map(|i| {
            let xi = lo + step * i as f64;
            let cs = c_schrod(xi, eps, &carrier);
            let ci = c_improved(xi, eps, &carrier, &pade);
            SymbolRow {
                xi,
                m_exact: m_exact(&carrier, xi, eps),
                m_taylor2: m_taylor2(&carrier, xi, eps),
                m_pade: m_pade(&carrier, &pade, xi, eps),
                c_schrod: cs,
                c_improved: ci,
                ratio: if cs == 0.0 { 0.0 } else { ci / cs },
            }
        })
        .collect())
}

/// Default evaluation window for the symbol table.
pub const SYMBOL_WINDOW: (f64, f64, usize) = (-50.0, 50.0, 2001);

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn toy() -> CarrierPoint {
        CarrierPoint::kg(KgParams::toy())
    }

    // Fourth-order central differences of ω₁, independent of the closed forms.
    fn fd_derivs(k: f64, v: f64) -> (f64, f64, f64) {
        let h = 1e-3;
        let f = |x: f64| (x * x + v * v).sqrt();
        let d1 = (f(k - 2.0 * h) - 8.0 * f(k - h) + 8.0 * f(k + h) - f(k + 2.0 * h)) / (12.0 * h);
        let d2 = (-f(k - 2.0 * h) + 16.0 * f(k - h) - 30.0 * f(k) + 16.0 * f(k + h)
            - f(k + 2.0 * h))
            / (12.0 * h * h);
        let d3 = (f(k - 3.0 * h) - 8.0 * f(k - 2.0 * h) + 13.0 * f(k - h) - 13.0 * f(k + h)
            + 8.0 * f(k + 2.0 * h)
            - f(k + 3.0 * h))
            / (8.0 * h * h * h);
        (d1, d2, d3)
    }

    #[test]
    fn kg_branch_values() {
        assert!((kg_omega1(1.0, 1.0) - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(kg_omega1(0.0, 1.0), 1.0);
        assert_eq!(kg_omega1(3.0, 4.0), 5.0);
    }

    #[test]
    fn maxwell_branches_at_zero_and_one() {
        let w = maxwell_omegas(0.0);
        let want = [SQRT_2, SQRT_2, 0.0, 0.0, 0.0, -SQRT_2, -SQRT_2];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = maxwell_omegas(1.0);
        let r5 = 5f64.sqrt();
        assert!((w[0] - 0.5 * (r5 + 1.0)).abs() < 1e-15);
        assert!((w[2] - 0.5 * (r5 - 1.0)).abs() < 1e-15);
        for k in [0.1, 0.7, 2.0, 13.0] {
            let w = maxwell_omegas(k);
            assert_eq!(w[1], SQRT_2);
            assert!(w.windows(2).all(|p| p[0] >= p[1]));
        }
    }

    #[test]
    fn kg_oracle_small_cases() {
        let sys = ExampleSystem::KleinGordon { v: vec![1.0] };
        let e = eigen_oracle(&sys, &[1.0]).unwrap();
        assert!((e[0] - SQRT_2).abs() < 1e-12 && (e[1] + SQRT_2).abs() < 1e-12);
        let sys = ExampleSystem::KleinGordon { v: vec![-2.5] };
        let e = eigen_oracle(&sys, &[0.0]).unwrap();
        assert!((e[0] - 2.5).abs() < 1e-12 && (e[1] + 2.5).abs() < 1e-12);
    }

    #[test]
    fn kg_oracle_higher_dimension() {
        // d = 2: eigenvalues ±√(|k|²+|v|²) and 0.
        let sys = ExampleSystem::KleinGordon { v: vec![0.5, -1.0] };
        let e = eigen_oracle(&sys, &[0.3, 2.0]).unwrap();
        let w = (0.09f64 + 4.0 + 0.25 + 1.0).sqrt();
        assert!((e[0] - w).abs() < 1e-12);
        assert!(e[1].abs() < 1e-12);
        assert!((e[2] + w).abs() < 1e-12);
    }

    #[test]
    fn oracle_rejects_broken_structure() {
        let mut m = SystemMatrices::assemble(&ExampleSystem::Maxwell);
        m.e[(0, 1)] = 1.0;
        assert!(matches!(
            m.check_symmetric_hyperbolic(),
            Err(Error::AssumptionViolated(_))
        ));
        let mut m = SystemMatrices::assemble(&ExampleSystem::KleinGordon { v: vec![1.0] });
        m.a[0][(0, 1)] = 2.0;
        assert!(m.check_symmetric_hyperbolic().is_err());
        assert!(eigen_oracle(&ExampleSystem::Maxwell, &[1.0]).is_err());
    }

    #[test]
    fn carrier_derivatives_match_finite_differences() {
        for (k, v) in [(1.0, 1.0), (0.4, 2.0), (-1.5, 0.3)] {
            let c = CarrierPoint::kg(KgParams::new(v, k).unwrap());
            let (d1, d2, d3) = fd_derivs(k, v);
            assert!((c.cg - d1).abs() < 1e-10, "cg {} vs {}", c.cg, d1);
            assert!((c.hess - d2).abs() < 1e-7, "hess {} vs {}", c.hess, d2);
            assert!((c.third - d3).abs() < 1e-5, "third {} vs {}", c.third, d3);
        }
    }

    #[test]
    fn assumption_report_for_toy() {
        let r = assumption_checks(KgParams::toy());
        assert!(r.ok());
        assert!((r.omega - SQRT_2).abs() < 1e-15);
        assert!((r.third_harmonic_gap - (3.0 * SQRT_2 - 10f64.sqrt())).abs() < 1e-12);
        assert!((r.spectral_gap - (SQRT_2 + 1.0)).abs() < 1e-15);
        assert_eq!(r.omega, toy().omega);
    }

    #[test]
    fn params_reject_zero() {
        assert!(KgParams::new(0.0, 1.0).is_err());
        assert!(KgParams::new(1.0, 0.0).is_err());
        assert!(KgParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn pade_toy_coefficients() {
        let p = PadeCoefficients::kg(KgParams::toy()).unwrap();
        assert_eq!(p.b, 1.0);
        assert_eq!(p.big_b, 5.0 / 16.0);
        assert!((p.c - 7.0 / (16.0 * SQRT_2)).abs() < 1e-16);
        assert!((p.discriminant_margin() - 0.8).abs() < 1e-15);
        let small = PadeCoefficients::kg(KgParams::new(1.0, 1e-9).unwrap()).unwrap();
        assert!(small.b.abs() < 1e-8);
    }

    #[test]
    fn pade_matches_series_through_fifth_order() {
        // With m = m1 ξ + m2 ξ² + ... (powers of ε absorbed), the [3,2] fit
        // needs C = m3 + b m2 + B m1 and the ξ⁴, ξ⁵ coefficients of
        // D·m - N to vanish.
        for &(kbar, v) in &[(1.0, 1.0), (0.3, 2.0), (4.0, 0.7), (1.5, 9.0)] {
            let params = KgParams::new(v, kbar).unwrap();
            let c = CarrierPoint::kg(params);
            let p = PadeCoefficients::kg(params).unwrap();
            let w = params.omega1(kbar);
            let fourth = 3.0 * v * v * (4.0 * kbar * kbar - v * v) / w.powi(7);
            let fifth = 15.0 * v * v * kbar * (3.0 * v * v - 4.0 * kbar * kbar) / w.powi(9);
            let (m1, m2, m3, m4, m5) = (
                c.cg,
                c.hess / 2.0,
                c.third / 6.0,
                fourth / 24.0,
                fifth / 120.0,
            );
            let scale = m1.abs() + m2.abs() + m3.abs() + m4.abs() + m5.abs();
            assert!((p.c - (m3 + p.b * m2 + p.big_b * m1)).abs() < 1e-14 * scale);
            assert!((m4 + p.b * m3 + p.big_b * m2).abs() < 1e-14 * scale);
            assert!(
                (m5 + p.b * m4 + p.big_b * m3).abs() < 1e-14 * scale,
                "kbar={kbar} v={v}"
            );
        }
    }

    #[test]
    fn pade_rejects_bad_constraints() {
        assert!(PadeCoefficients::new(1.0, -0.1, 0.0).is_err());
        assert!(PadeCoefficients::new(2.0, 0.25, 0.0).is_err());
        assert!(PadeCoefficients::new(1.0, 0.3125, 0.0).is_ok());
    }

    #[test]
    fn symbols_basic_values() {
        let c = toy();
        let pade = PadeCoefficients::kg(KgParams::toy()).unwrap();
        assert_eq!(m_exact(&c, 0.0, 0.1), 0.0);
        assert_eq!(m_pade(&c, &pade, 0.0, 0.1), 0.0);
        assert!((m_taylor2(&c, 1.0, 1e-12) - 1.0 / SQRT_2).abs() < 1e-12);
        // ε/(4√2) curvature for the toy carrier.
        assert!((0.5 * c.hess - 1.0 / (4.0 * SQRT_2)).abs() < 1e-16);
        assert_eq!(c_schrod(0.0, 0.01, &c), 0.0);
    }

    #[test]
    fn rationalized_exact_symbol_matches_naive_difference() {
        let c = toy();
        for &eps in &[0.1, 0.01] {
            for i in -50..=50 {
                let xi = 0.37 * i as f64;
                if (eps * xi).abs() < 1e-4 {
                    continue;
                }
                let naive = (c.params.omega1(1.0 + eps * xi) - c.omega) / eps;
                let m = m_exact(&c, xi, eps);
                assert!((m - naive).abs() <= 1e-12 * m.abs(), "xi={xi} eps={eps}");
            }
        }
        // Far below, the rationalized form still matches the linear term.
        let xi = 1e-3;
        let eps = 1e-12;
        assert!((m_exact(&c, xi, eps) - c.cg * xi).abs() < 1e-18);
    }

    #[test]
    fn schrodinger_symbol_error_is_cubic() {
        // Compare against the series value ω₁'''(εξ)³/6 divided by ε³(1+|ξ|³).
        let c = toy();
        let eps = 1e-3;
        for xi in [0.5, 1.0, 2.0] {
            let want = c.third / 6.0 * xi * xi * xi / (1.0 + xi * xi * xi);
            let got = c_schrod(xi, eps, &c);
            assert!((got - want).abs() < 2e-3 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn symbol_table_shape() {
        let rows = symbol_table(KgParams::toy(), 0.01, -50.0, 50.0, 2001).unwrap();
        assert_eq!(rows.len(), 2001);
        assert_eq!(rows[1000].xi, 0.0);
        assert!(symbol_table(KgParams::toy(), 0.0, -1.0, 1.0, 3).is_err());
    }
}
