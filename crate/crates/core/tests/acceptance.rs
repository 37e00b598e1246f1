//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 1 2 3`.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use svea::experiments::validation::{
    conservation, dispersion_oracles, loglog_slope, pade_coefficients, splitting_order,
    symbol_orders, wiener_diagnostics, Check,
};
use svea::experiments::{evaluate_point, SweepPlan};
use svea::models::ModelKind;
use svea::pulses::PulseKind;

const FD: ModelKind = ModelKind::FullDispersion;
const NLS: ModelKind = ModelKind::Nls;
const IMPROVED: ModelKind = ModelKind::ImprovedNls;

const TEST1_EPS: [f64; 4] = [0.002, 0.005, 0.01, 0.02];
const TEST3_BETA: [f64; 9] = [0.03, 0.05, 0.075, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0];
const CHIRPED_BETA: [f64; 5] = [0.1, 0.2, 0.4, 0.7, 1.0];

type Verdict = Result<(bool, String), String>;
type Criterion<'a> = (u32, &'a str, &'a dyn Fn(&mut Errors) -> Verdict);

/// Sweep errors keyed by point, so points shared between criteria run once.
#[derive(Default)]
struct Errors {
    cache: HashMap<(PulseKind, u64, u64), [f64; 3]>,
}

impl Errors {
    fn get(&mut self, pulse: PulseKind, eps: f64, beta: f64) -> Result<[f64; 3], String> {
        let key = (pulse, eps.to_bits(), beta.to_bits());
        if let Some(e) = self.cache.get(&key) {
            return Ok(*e);
        }
        let plan = SweepPlan::custom("acceptance", pulse, vec![(eps, beta)]);
        let t = Instant::now();
        let r = evaluate_point(&plan, eps, beta)
            .map_err(|e| format!("{pulse} eps={eps} beta={beta}: {e}"))?;
        let pick = |m| r.error(m).ok_or_else(|| format!("no {m} record"));
        let e = [pick(FD)?, pick(NLS)?, pick(IMPROVED)?];
        eprintln!(
            "  {pulse} eps={eps} beta={beta}: E = {:.4} / {:.4} / {:.4} (N {} / {}, {:.0}s)",
            e[0],
            e[1],
            e[2],
            r.resolution.n_exact,
            r.resolution.n_envelope,
            t.elapsed().as_secs_f64()
        );
        self.cache.insert(key, e);
        Ok(e)
    }
}

fn from_check(c: Check) -> Verdict {
    Ok((c.passed, c.detail))
}

fn timed(limit_s: f64, f: impl FnOnce() -> Check) -> Verdict {
    let t = Instant::now();
    let c = f();
    let s = t.elapsed().as_secs_f64();
    Ok((
        c.passed && s < limit_s,
        format!("{}; {s:.2}s (limit {limit_s}s)", c.detail),
    ))
}

fn test1(errors: &mut Errors) -> Verdict {
    let rows: Vec<[f64; 3]> = TEST1_EPS
        .iter()
        .map(|&e| errors.get(PulseKind::Short, e, 1.0))
        .collect::<Result<_, _>>()?;
    let at = TEST1_EPS.iter().position(|&e| e == 0.01).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for (j, m) in [FD, NLS, IMPROVED].into_iter().enumerate() {
        let e: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let slope = loglog_slope(&TEST1_EPS, &e);
        let ok = e[at] <= 0.05 && (slope - 1.0).abs() <= 0.3;
        passed &= ok;
        parts.push(format!(
            "{m} E(0.01)={:.4} slope {slope:.3}{}",
            e[at],
            if ok { "" } else { " (!)" }
        ));
    }
    Ok((
        passed,
        format!("want E(0.01) <= 0.05, slope 1 +- 0.3: {}", parts.join(", ")),
    ))
}

fn test2(errors: &mut Errors) -> Verdict {
    let [fd, nls, imp] = errors.get(PulseKind::Short, 0.01, 0.1)?;
    let ratio = nls / fd.max(imp);
    Ok((ratio >= 5.0, format!("E fd {fd:.4}, nls {nls:.4}, improved {imp:.4}; nls / max(fd, improved) = {ratio:.1} (want >= 5)")))
}

/// Smallest sampled `β` from which every larger sampled `β` satisfies `ok`.
fn onset(betas: &[f64], ok: &[bool]) -> Option<f64> {
    let mut from = None;
    for (&b, &good) in betas.iter().zip(ok).rev() {
        if !good {
            break;
        }
        from = Some(b);
    }
    from
}

fn describe(b: Option<f64>) -> String {
    b.map_or_else(|| "none".to_string(), |b| b.to_string())
}

fn test3(errors: &mut Errors) -> Verdict {
    let rows: Vec<[f64; 3]> = TEST3_BETA
        .iter()
        .map(|&b| errors.get(PulseKind::Short, 0.01, b))
        .collect::<Result<_, _>>()?;
    let fd_ok: Vec<bool> = rows.iter().map(|r| r[0] <= 0.2).collect();
    let fd_from = onset(&TEST3_BETA, &fd_ok);
    let nls_low: Vec<(f64, f64)> = TEST3_BETA
        .iter()
        .zip(&rows)
        .filter(|(&b, _)| b <= 0.1)
        .map(|(&b, r)| (b, r[1]))
        .collect();
    let nls_min =
        nls_low.iter().copied().fold(
            (f64::INFINITY, 0.0),
            |a, x| if x.1 < a.0 { (x.1, x.0) } else { a },
        );
    let passed = fd_from.is_some_and(|b| b <= 2.0 * 0.03) && nls_min.0 > 0.2;
    Ok((
        passed,
        format!(
            "fd E <= 0.2 from beta={} (want <= 0.06, factor 2 of 0.03; E(0.03)={:.4}); min nls E over beta <= 0.1 is {:.4} at beta={} (want > 0.2)",
            describe(fd_from),
            rows[0][0],
            nls_min.0,
            nls_min.1
        ),
    ))
}

fn chirped2(errors: &mut Errors) -> Verdict {
    let rows: Vec<[f64; 3]> = CHIRPED_BETA
        .iter()
        .map(|&b| errors.get(PulseKind::Chirped, 0.01, b))
        .collect::<Result<_, _>>()?;
    let ok: Vec<bool> = rows.iter().map(|r| r[0] <= 0.2 && r[2] <= 0.2).collect();
    let from = onset(&CHIRPED_BETA, &ok);
    let nls = rows[CHIRPED_BETA.iter().position(|&b| b == 0.2).unwrap()][1];
    let passed = from.is_some_and(|b| b <= 2.0 * 0.1) && nls > 0.2;
    Ok((
        passed,
        format!(
            "fd and improved E <= 0.2 from beta={} (want <= 0.2, factor 2 of 0.1; at beta=0.1 fd {:.4}, improved {:.4}); nls E at beta=0.2 is {nls:.4} (want > 0.2)",
            describe(from),
            rows[0][0],
            rows[0][2]
        ),
    ))
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut errors = Errors::default();
    let mut failed = 0;

    let criteria: [Criterion; 10] = [
        (1, "dispersion oracles", &|_| {
            timed(5.0, || dispersion_oracles(100, 20, 7))
        }),
        (2, "pade coefficients", &|_| from_check(pade_coefficients())),
        (3, "symbol orders", &|_| {
            from_check(symbol_orders(0.01, 5.0))
        }),
        (4, "conservation", &|_| from_check(conservation(10_000))),
        (5, "splitting order", &|_| timed(120.0, splitting_order)),
        (6, "short pulse, beta = 1", &test1),
        (7, "short pulse, beta = 0.1", &test2),
        (8, "short pulse, beta sweep", &test3),
        (9, "chirped pulse, beta sweep", &chirped2),
        (10, "wiener diagnostics", &|_| {
            from_check(wiener_diagnostics())
        }),
    ];
    for (n, name, run) in criteria {
        if !want(n) {
            continue;
        }
        let t = Instant::now();
        let (passed, detail) = run(&mut errors).unwrap_or_else(|e| (false, format!("error: {e}")));
        let tag = if passed { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {n} ({name}): {detail} [{:.1}s]",
            t.elapsed().as_secs_f64()
        );
        failed += usize::from(!passed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
