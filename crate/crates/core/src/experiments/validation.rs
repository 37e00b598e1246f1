//! Invariant and oracle checks run by `svea validate`.

use std::f64::consts::SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use twofloat::TwoFloat;

use crate::dispersion::{
    c_improved, c_schrod, eigen_oracle, kg_omega1, m_exact, m_pade, m_taylor2, maxwell_omegas,
    CarrierPoint, ExampleSystem, KgParams, PadeCoefficients,
};
use crate::error::Result;
use crate::models::{initial_state, ModelKind, ModelState, Solver, SolverConfig};
use crate::pulses::{practical_rule, InitialData, PulseSpec, PRACTICAL_RULE_THRESHOLD};
use crate::spectral::{Field, PeriodicGrid};

use super::{evaluate_point, Overrides, SweepPlan};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Closed-form branches against the numerical spectrum of `A(k) + E/i`:
/// `n_kg` random one-dimensional KG points and `n_maxwell` random Maxwell
/// wave vectors.
pub fn dispersion_oracles(n_kg: usize, n_maxwell: usize, seed: u64) -> Check {
    let run = || -> Result<(bool, String)> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n_kg {
            let v = rng.gen_range(0.1..10.0);
            let k = rng.gen_range(-50.0..50.0);
            let eig = eigen_oracle(&ExampleSystem::KleinGordon { v: vec![v] }, &[k])?;
            let w = kg_omega1(k, v);
            worst = worst.max((eig[0] - w).abs()).max((eig[1] + w).abs());
        }
        let kg_worst = worst;
        worst = 0.0;
        const MULT: [usize; 7] = [2, 1, 2, 2, 2, 1, 2];
        for _ in 0..n_maxwell {
            let k: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let norm = k.iter().map(|c| c * c).sum::<f64>().sqrt();
            let mut expected: Vec<f64> = maxwell_omegas(norm)
                .iter()
                .zip(MULT)
                .flat_map(|(&w, m)| std::iter::repeat_n(w, m))
                .collect();
            expected.sort_by(|a, b| b.total_cmp(a));
            let eig = eigen_oracle(&ExampleSystem::Maxwell, &k)?;
            for (a, b) in eig.iter().zip(&expected) {
                worst = worst.max((a - b).abs());
            }
        }
        let passed = kg_worst <= 1e-10 && worst <= 1e-10;
        Ok((
            passed,
            format!(
                "max |diff| KG {kg_worst:.2e} ({n_kg} pts), Maxwell {worst:.2e} ({n_maxwell} pts)"
            ),
        ))
    };
    Check::from_result("dispersion oracles", run())
}

/// Toy Padé coefficients and the positivity constraint.
pub fn pade_coefficients() -> Check {
    let run = || -> Result<(bool, String)> {
        let p = PadeCoefficients::kg(KgParams::toy())?;
        let c_ok = (p.c - 7.0 / (16.0 * SQRT_2)).abs() <= 4.0 * f64::EPSILON * p.c;
        let printed_ok = (p.c * SQRT_2 - 7.0 / 16.0).abs() <= 4.0 * f64::EPSILON;
        let margin_ok = (p.discriminant_margin() - 0.8).abs() <= 4.0 * f64::EPSILON;
        let passed = p.b == 1.0 && p.big_b == 5.0 / 16.0 && c_ok && printed_ok && margin_ok;
        Ok((
            passed,
            format!(
                "b={} B={} C*sqrt2={} 4-b^2/B={}",
                p.b,
                p.big_b,
                p.c * SQRT_2,
                p.discriminant_margin()
            ),
        ))
    };
    Check::from_result("pade coefficients", run())
}

/// `(m_taylor2 - m_exact, m_pade - m_exact)` evaluated in double-double
/// arithmetic, carrier and Padé coefficients included. The Padé gap is far
/// below double rounding for small `εξ`, so the order fit needs this.
pub fn symbol_gaps_extended(params: KgParams, xi: f64, eps: f64) -> (f64, f64) {
    let t = TwoFloat::from;
    // twofloat's quotient is only double accurate; one Newton correction
    // restores full precision.
    let div = |a: TwoFloat, b: TwoFloat| {
        let q = a / b;
        q + t((a - q * b).hi() / b.hi())
    };
    let (v, kb, e, x) = (t(params.v), t(params.kbar), t(eps), t(xi));
    let s = v * v + kb * kb;
    let w = s.sqrt();
    let k = kb + e * x;
    let exact = div((k * k + v * v).sqrt() - w, e);
    let cg = div(kb, w);
    let hess = div(v * v, w * w * w);
    let b = div(t(2.0) * kb, s);
    let big_b = div(v * v + t(4.0) * kb * kb, t(4.0) * s * s);
    let c = div(kb * (t(3.0) * v * v + t(4.0) * kb * kb), t(4.0) * s * s * w);
    let taylor = cg * x + t(0.5) * e * hess * x * x;
    let num = cg * x + e * (t(0.5) * hess + cg * b) * x * x + e * e * c * x * x * x;
    let den = t(1.0) + e * b * x + e * e * big_b * x * x;
    ((taylor - exact).hi(), (div(num, den) - exact).hi())
}

/// Fitted `ξ`-slopes of the Taylor and Padé symbol gaps on `[0.05, 0.5]`.
pub fn symbol_gap_slopes(eps: f64) -> (f64, f64) {
    let xi = logspace(0.05, 0.5, 40);
    let gaps: Vec<(f64, f64)> = xi
        .iter()
        .map(|&x| symbol_gaps_extended(KgParams::toy(), x, eps))
        .collect();
    let taylor: Vec<f64> = gaps.iter().map(|g| g.0.abs()).collect();
    let pade: Vec<f64> = gaps.iter().map(|g| g.1.abs()).collect();
    (loglog_slope(&xi, &taylor), loglog_slope(&xi, &pade))
}

/// Slope of the Padé symbol gap: the [3,2] fit agrees with the exact symbol
/// through `(εξ)⁵`.
pub const PADE_GAP_ORDER: f64 = 6.0;

/// Orders of the Taylor and Padé symbol gaps (3 ± 0.2 and `pade_order` ±
/// 0.3) and the gain ratio on `[1, 30]`.
pub fn symbol_orders(eps: f64, pade_order: f64) -> Check {
    let run = || -> Result<(bool, String)> {
        let carrier = CarrierPoint::kg(KgParams::toy());
        let pade = PadeCoefficients::kg(KgParams::toy())?;
        // the double-double symbols must be the ones the solvers use
        let mut agree: f64 = 0.0;
        for x in logspace(0.05, 50.0, 30) {
            let (gt, gp) = symbol_gaps_extended(KgParams::toy(), x, eps);
            let ex = m_exact(&carrier, x, eps);
            let scale = ex.abs().max(1e-300);
            agree = agree
                .max((m_taylor2(&carrier, x, eps) - ex - gt).abs() / scale)
                .max((m_pade(&carrier, &pade, x, eps) - ex - gp).abs() / scale);
        }
        let (s_taylor, s_pade) = symbol_gap_slopes(eps);
        let samples = 291;
        let good = (0..samples)
            .map(|i| 1.0 + 29.0 * i as f64 / (samples - 1) as f64)
            .filter(|&x| {
                (c_improved(x, eps, &carrier, &pade) / c_schrod(x, eps, &carrier)).abs() < 0.05
            })
            .count();
        let frac = good as f64 / samples as f64;
        let passed = (s_taylor - 3.0).abs() <= 0.2
            && (s_pade - pade_order).abs() <= 0.3
            && frac >= 0.9
            && agree < 1e-14;
        Ok((
            passed,
            format!(
                "slopes taylor {s_taylor:.3} (want 3), pade {s_pade:.3} (want {pade_order}); ratio<0.05 on {:.1}% of [1,30]; f64 vs extended {agree:.0e}",
                100.0 * frac
            ),
        ))
    };
    Check::from_result("symbol orders", run())
}

fn short_pulse_data(beta: f64, amplitude: f64, grid: &PeriodicGrid) -> Result<InitialData> {
    let mut env = PulseSpec::short(beta)?.envelope(grid)?;
    env.values_mut().iter_mut().for_each(|c| *c *= amplitude);
    Ok(InitialData::new(env, KgParams::toy()))
}

fn solver(model: ModelKind, data: &InitialData, eps: f64, dt: f64) -> Result<Solver> {
    let grid = data.envelope.grid().clone();
    let cfg = SolverConfig {
        snapshot_interval: None,
        ..SolverConfig::new(grid.clone(), eps, dt)
    };
    Solver::new(model, &initial_state(model, data, eps, &grid)?, &cfg)
}

/// Largest per-step relative change of the conserved quantity of the exact
/// system, FD and NLS over `steps` steps.
pub fn conservation(steps: usize) -> Check {
    let run = || -> Result<(bool, String)> {
        let eps = 0.01;
        let mut details = Vec::new();
        let mut passed = true;
        for (model, n) in [
            (ModelKind::ExactKg, 4096),
            (ModelKind::FullDispersion, 512),
            (ModelKind::Nls, 512),
        ] {
            let grid = PeriodicGrid::standard(n)?;
            let data = short_pulse_data(0.5, 1.0, &grid)?;
            let mut s = solver(model, &data, eps, 0.005)?;
            let q0 = s.l2_squared();
            let mut prev = q0;
            let mut worst: f64 = 0.0;
            for _ in 0..steps {
                s.step(0.005)?;
                let q = s.l2_squared();
                worst = worst.max((q - prev).abs() / q0);
                prev = q;
            }
            passed &= worst <= 1e-12;
            details.push(format!(
                "{model} {worst:.1e} (total {:.1e})",
                (prev - q0).abs() / q0
            ));
        }
        Ok((
            passed,
            format!(
                "max per-step drift over {steps} steps: {}",
                details.join(", ")
            ),
        ))
    };
    Check::from_result("conservation", run())
}

fn state_distance(a: &ModelState, b: &ModelState) -> Result<f64> {
    Ok(match (a, b) {
        (ModelState::Kg(x), ModelState::Kg(y)) => {
            x.f.sub(&y.f)?.l2_norm().hypot(x.g.sub(&y.g)?.l2_norm())
        }
        (ModelState::Vector(x), ModelState::Vector(y)) => {
            x.u1.sub(&y.u1)?.l2_norm().hypot(x.u2.sub(&y.u2)?.l2_norm())
        }
        (ModelState::Scalar(x), ModelState::Scalar(y)) => x.sub(y)?.l2_norm(),
        _ => f64::NAN,
    })
}

/// Self-convergence ratio `|u_h - u_{h/2}| / |u_{h/2} - u_{h/4}|` of one
/// integrator on a strongly nonlinear smooth pulse.
pub fn splitting_ratio(model: ModelKind, eps: f64, t: f64, h: f64, amplitude: f64) -> Result<f64> {
    let n = if model == ModelKind::ExactKg {
        2048
    } else {
        256
    };
    let grid = PeriodicGrid::standard(n)?;
    let data = short_pulse_data(1.0, amplitude, &grid)?;
    let mut states = Vec::new();
    for k in 0..3 {
        let dt = h / f64::from(1u32 << k);
        let mut s = solver(model, &data, eps, dt)?;
        s.advance_to(t)?;
        states.push(s.state());
    }
    Ok(state_distance(&states[0], &states[1])? / state_distance(&states[1], &states[2])?)
}

/// Parameters of the splitting-order check: `(ε, T, h, amplitude)`.
pub const ORDER_SETUP: (f64, f64, f64, f64) = (0.1, 1.0, 0.01, 2.0);

/// Observed order of all five integrators.
pub fn splitting_order() -> Check {
    let run = || -> Result<(bool, String)> {
        let (eps, t, h, amp) = ORDER_SETUP;
        let mut passed = true;
        let mut parts = Vec::new();
        for model in ModelKind::ALL {
            let r = splitting_ratio(model, eps, t, h, amp)?;
            passed &= (3.4..=4.6).contains(&r);
            parts.push(format!("{model} {r:.3}"));
        }
        Ok((
            passed,
            format!("error ratio dt->dt/2: {}", parts.join(", ")),
        ))
    };
    Check::from_result("splitting order", run())
}

/// Dilation invariance of the Wiener norm, `1/β` scaling of the derivative
/// norm and the practical-rule ratio.
pub fn wiener_diagnostics() -> Check {
    let run = || -> Result<(bool, String)> {
        let grid = PeriodicGrid::standard(8192)?;
        let env = |b: f64| PulseSpec::short(b)?.envelope(&grid);
        let base = env(1.0)?;
        let w1 = base.wiener_norm();
        let d1 = base.derivative(1)?.wiener_norm();
        let (mut dil, mut der): (f64, f64) = (0.0, 0.0);
        for b in [0.05, 0.1, 0.5, 1.0] {
            let f = env(b)?;
            dil = dil.max((f.wiener_norm() - w1).abs() / w1);
            der = der.max((b * f.derivative(1)?.wiener_norm() - d1).abs() / d1);
        }
        let r = practical_rule(&env(0.1)?, 0.01, PRACTICAL_RULE_THRESHOLD)?.value
            / practical_rule(&base, 0.01, PRACTICAL_RULE_THRESHOLD)?.value;
        let passed = dil <= 1e-3 && der <= 0.02 && (r / 10.0 - 1.0).abs() <= 0.02;
        Ok((
            passed,
            format!(
                "dilation {dil:.1e}, derivative scaling {der:.1e}, practical-rule ratio {r:.4}"
            ),
        ))
    };
    Check::from_result("wiener diagnostics", run())
}

/// Sweep errors with the default steps against halved steps at a cheap
/// point; each error must move by less than 1% of itself.
pub fn halving_dt() -> Check {
    let run = || -> Result<(bool, String)> {
        let (eps, beta) = (0.05, 0.5);
        let mut plan = SweepPlan::custom(
            "halving",
            crate::pulses::PulseKind::Short,
            vec![(eps, beta)],
        );
        let base = evaluate_point(&plan, eps, beta)?;
        let r = base.resolution;
        plan.overrides = Overrides {
            dt: Some(r.dt_envelope / 2.0),
            dt_exact: Some(r.dt_exact / 2.0),
            ..Default::default()
        };
        let fine = evaluate_point(&plan, eps, beta)?;
        let mut worst: f64 = 0.0;
        for (a, b) in base.records.iter().zip(&fine.records) {
            worst = worst.max((a.error - b.error).abs() / b.error);
        }
        Ok((
            worst <= 0.01,
            format!("max |E(dt) - E(dt/2)| / E(dt/2) = {worst:.1e}"),
        ))
    };
    Check::from_result("halving dt", run())
}

/// Scalar models with the cubic term off against the analytic multiplier
/// `exp(-i t m(ξ))`.
pub fn linear_propagation() -> Check {
    let run = || -> Result<(bool, String)> {
        let grid = PeriodicGrid::standard(512)?;
        let data = short_pulse_data(0.3, 1.0, &grid)?;
        let eps = 0.02;
        let t = 7.3;
        let carrier = CarrierPoint::kg(KgParams::toy());
        let pade = PadeCoefficients::kg(KgParams::toy())?;
        let mut worst: f64 = 0.0;
        for model in ModelKind::SCALAR {
            let mut cfg = SolverConfig::new(grid.clone(), eps, 0.37);
            cfg.nonlinear = false;
            let mut s = Solver::new(model, &ModelState::Scalar(data.envelope.clone()), &cfg)?;
            s.advance_to(t)?;
            let m = |xi: f64| match model {
                ModelKind::FullDispersion => m_exact(&carrier, xi, eps),
                ModelKind::Nls => m_taylor2(&carrier, xi, eps),
                _ => m_pade(&carrier, &pade, xi, eps),
            };
            let want = data
                .envelope
                .apply_symbol(|xi| Complex64::from_polar(1.0, -t * m(xi)))?;
            let ModelState::Scalar(got) = s.state() else {
                unreachable!()
            };
            worst = worst.max(got.sub(&want)?.linf_norm());
        }
        Ok((worst <= 1e-10, format!("max |f - analytic| = {worst:.1e}")))
    };
    Check::from_result("linear propagation", run())
}

/// Exact-system realness along a run.
pub fn realness() -> Check {
    let run = || -> Result<(bool, String)> {
        let grid = PeriodicGrid::standard(4096)?;
        let data = short_pulse_data(0.2, 1.0, &grid)?;
        let init = initial_state(ModelKind::ExactKg, &data, 0.02, &grid)?;
        let ModelState::Kg(k0) = &init else {
            unreachable!()
        };
        // imaginary parts of the spectral reconstruction before clipping
        let mut s = solver(ModelKind::ExactKg, &data, 0.02, 0.01)?;
        s.advance_to(5.0)?;
        let ModelState::Kg(k) = s.state() else {
            unreachable!()
        };
        let f: Field = k.f.to_spectral();
        let n = f.values().len();
        let mut asym: f64 = 0.0;
        for i in 1..n / 2 {
            asym = asym.max((f.values()[i] - f.values()[n - i].conj()).norm());
        }
        let passed = asym <= 1e-10 && k0.f.max_imag() == 0.0;
        Ok((passed, format!("max |c(m) - conj c(-m)| = {asym:.1e}")))
    };
    Check::from_result("realness", run())
}

/// Every check; `quick` skips the sweep-based ones.
pub fn run_all(quick: bool) -> Vec<Check> {
    let mut checks = vec![
        dispersion_oracles(100, 20, 7),
        pade_coefficients(),
        symbol_orders(0.01, PADE_GAP_ORDER),
        conservation(10_000),
        splitting_order(),
        wiener_diagnostics(),
        linear_propagation(),
        realness(),
    ];
    if !quick {
        checks.push(halving_dt());
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = logspace(0.1, 10.0, 9);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powi(3)).collect();
        assert!((loglog_slope(&x, &y) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cheap_checks_pass() {
        for c in [
            pade_coefficients(),
            dispersion_oracles(10, 3, 1),
            linear_propagation(),
        ] {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn symbol_gap_orders() {
        // Taylor misses the cubic term; the [3,2] fit agrees through the
        // fifth power, so its first gap term is sixth order.
        let (t, p) = symbol_gap_slopes(0.01);
        assert!((t - 3.0).abs() < 0.05, "{t}");
        assert!((p - 6.0).abs() < 0.05, "{p}");
    }
}
