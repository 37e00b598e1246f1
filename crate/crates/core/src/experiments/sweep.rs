use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::mpsc;
use std::time::Instant;

use log::{info, warn};

use crate::dispersion::{assumption_checks, KgParams};
use crate::error::{Error, Result};
use crate::models::{
    initial_state, reconstruct, snapshot_times, ModelKind, ModelState, Polarization, Solver,
    SolverConfig, Trajectory, CARRIER_POINTS,
};
use crate::pulses::{spectral_extent, InitialData, Profile, PulseKind, PulseSpec, DEFAULT_X0};
use crate::spectral::{Field, PeriodicGrid, DOMAIN_LENGTH};

use super::Manifest;

pub const CSV_HEADER: &str = "model,epsilon,beta,error,N,dt,runtime_s";

/// Samples of the error metric per unit of `1/ε`.
pub const SAMPLES_PER_HORIZON: usize = 100;

/// Relative spectral level below which the envelope counts as band-limited.
pub const EXTENT_TOL: f64 = 1e-10;

/// Largest grid the automatic policy will choose.
pub const MAX_N: usize = 1 << 20;

const MIN_N_ENVELOPE: usize = 512;
const MIN_N_EXACT: usize = 2048;

/// `|f|_∞` below which a sample is skipped by the error metric.
const DEGENERATE_NORM: f64 = 1e-12;

/// `ε` values of the ε-sweeps.
pub const EPS_LIST: [f64; 7] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1];

/// `β` values of the β-sweeps.
pub const BETA_LIST: [f64; 11] = [0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0];

/// Formats like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}").to_lowercase();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').unwrap();
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

/// Largest wavenumber carrying more than `tol` of the peak coefficient of
/// the pulse envelope, measured on a grid fine enough to contain it.
pub fn envelope_extent(pulse: &PulseSpec, tol: f64) -> Result<f64> {
    let mut n = 1024;
    loop {
        let grid = PeriodicGrid::standard(n)?;
        let ext = spectral_extent(&pulse.envelope(&grid)?, tol);
        if ext <= 0.6 * grid.kmax() {
            return Ok(ext);
        }
        n *= 2;
        if n > MAX_N {
            return Err(Error::InvalidParameter(format!(
                "{} pulse with beta={} is not resolvable with N <= {MAX_N}",
                pulse.kind, pulse.beta
            )));
        }
    }
}

/// Smallest exact grid holding the carrier plus the inner half of the band
/// of an envelope grid of `n_envelope` nodes.
fn exact_n_for(n_envelope: usize, eps: f64, params: KgParams) -> Result<usize> {
    let band = 0.5 * PeriodicGrid::standard(n_envelope)?.kmax();
    pow2_for(params.kbar.abs() / eps + band, MIN_N_EXACT)
}

fn pow2_for(kmax: f64, min_n: usize) -> Result<usize> {
    let mut n = min_n;
    while std::f64::consts::PI * n as f64 / DOMAIN_LENGTH < kmax {
        n *= 2;
        if n > MAX_N {
            return Err(Error::InvalidParameter(format!(
                "resolving wavenumber {kmax:.1} needs N > {MAX_N}"
            )));
        }
    }
    Ok(n)
}

/// Grid sizes and time steps for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub n_exact: usize,
    pub n_envelope: usize,
    pub dt_exact: f64,
    pub dt_envelope: f64,
}

impl Resolution {
    /// Envelope grids hold the envelope spectrum with 25% headroom; the
    /// exact grid additionally holds the carrier `k̄/ε`. Steps are
    /// `ε/2` for the exact system and `ε/4` for envelope models.
    pub fn auto(eps: f64, pulse: &PulseSpec, params: KgParams) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {eps}"
            )));
        }
        let ext = envelope_extent(pulse, EXTENT_TOL)?;
        let margin = 1.25 * ext + 4.0;
        Ok(Self {
            n_exact: pow2_for(params.kbar.abs() / eps + margin, MIN_N_EXACT)?,
            n_envelope: pow2_for(margin, MIN_N_ENVELOPE)?,
            dt_exact: 0.5 * eps,
            dt_envelope: 0.25 * eps,
        })
    }

    pub fn n_for(&self, model: ModelKind) -> usize {
        if model == ModelKind::ExactKg {
            self.n_exact
        } else {
            self.n_envelope
        }
    }

    pub fn dt_for(&self, model: ModelKind) -> f64 {
        if model == ModelKind::ExactKg {
            self.dt_exact
        } else {
            self.dt_envelope
        }
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(n) = o.n {
            self.n_envelope = n;
        }
        if let Some(n) = o.n_exact {
            self.n_exact = n;
        }
        if let Some(dt) = o.dt {
            self.dt_envelope = dt;
        }
        if let Some(dt) = o.dt_exact {
            self.dt_exact = dt;
        }
        self
    }
}

/// User choices that replace the automatic resolution policy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    /// Grid of the envelope models.
    pub n: Option<usize>,
    /// Step of the envelope models.
    pub dt: Option<f64>,
    pub n_exact: Option<usize>,
    pub dt_exact: Option<f64>,
    /// Final time; defaults to `1/ε`.
    pub t_final: Option<f64>,
    pub dealias: bool,
    /// Polarization of the full-dispersion model.
    pub polarization: Polarization,
}

/// Running `sup_t |f - f_approx|_∞ / |f|_∞`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorAccumulator {
    pub sup: f64,
    pub samples: usize,
    /// Times skipped because `|f|_∞` was degenerate.
    pub skipped: Vec<f64>,
}

impl ErrorAccumulator {
    pub fn push(&mut self, t: f64, exact: &Field, approx: &Field) -> Result<()> {
        let denom = exact.linf_norm();
        if denom < DEGENERATE_NORM {
            warn!("|f|_inf = {denom:e} at t = {t}; sample skipped");
            self.skipped.push(t);
            return Ok(());
        }
        let r = exact.sub(approx)?.linf_norm() / denom;
        if !(r <= self.sup) {
            self.sup = r;
        }
        self.samples += 1;
        Ok(())
    }
}

/// Relative sup-in-time error between two trajectories sampled at the same
/// times, both reconstructed in the lab frame on `grid`.
pub fn error_metric(exact: &Trajectory, approx: &Trajectory, grid: &PeriodicGrid) -> Result<f64> {
    if exact.times.len() != approx.times.len() {
        return Err(Error::SizeMismatch {
            expected: exact.times.len(),
            found: approx.times.len(),
        });
    }
    let mut acc = ErrorAccumulator::default();
    for (i, (&a, &b)) in exact.times.iter().zip(&approx.times).enumerate() {
        if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "sample times differ: {a} vs {b}"
            )));
        }
        acc.push(a, &exact.lab_f(i, grid)?, &approx.lab_f(i, grid)?)?;
    }
    Ok(acc.sup)
}

/// A named or custom collection of parameter points.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub name: String,
    pub pulse: PulseKind,
    pub x0: f64,
    pub profile: Profile,
    pub models: Vec<ModelKind>,
    /// `(ε, β)` pairs, evaluated and written in this order.
    pub points: Vec<(f64, f64)>,
    pub params: KgParams,
    pub overrides: Overrides,
    /// Error-metric samples per `1/ε` time units.
    pub samples: usize,
}

/// The five sweeps of the numerical study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedTest {
    Short1,
    Short2,
    Short3,
    Chirped1,
    Chirped2,
}

impl NamedTest {
    pub const ALL: [NamedTest; 5] = [
        Self::Short1,
        Self::Short2,
        Self::Short3,
        Self::Chirped1,
        Self::Chirped2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Short1 => "short-1",
            Self::Short2 => "short-2",
            Self::Short3 => "short-3",
            Self::Chirped1 => "chirped-1",
            Self::Chirped2 => "chirped-2",
        }
    }
}

impl fmt::Display for NamedTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown test '{s}'")))
    }
}

impl SweepPlan {
    /// `ε` varies at fixed `β`.
    pub fn eps_sweep(name: &str, pulse: PulseKind, beta: f64, eps: &[f64]) -> Self {
        Self::custom(name, pulse, eps.iter().map(|&e| (e, beta)).collect())
    }

    /// `β` varies at fixed `ε`.
    pub fn beta_sweep(name: &str, pulse: PulseKind, eps: f64, betas: &[f64]) -> Self {
        Self::custom(name, pulse, betas.iter().map(|&b| (eps, b)).collect())
    }

    pub fn custom(name: &str, pulse: PulseKind, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.to_string(),
            pulse,
            x0: DEFAULT_X0,
            profile: Profile::gaussian(),
            models: ModelKind::SCALAR.to_vec(),
            points,
            params: KgParams::toy(),
            overrides: Overrides::default(),
            samples: SAMPLES_PER_HORIZON,
        }
    }

    pub fn named(test: NamedTest) -> Self {
        let name = test.name();
        match test {
            NamedTest::Short1 => Self::eps_sweep(name, PulseKind::Short, 1.0, &EPS_LIST),
            NamedTest::Short2 => Self::eps_sweep(name, PulseKind::Short, 0.1, &EPS_LIST),
            NamedTest::Short3 => Self::beta_sweep(name, PulseKind::Short, 0.01, &BETA_LIST),
            NamedTest::Chirped1 => Self::eps_sweep(name, PulseKind::Chirped, 0.1, &EPS_LIST),
            NamedTest::Chirped2 => Self::beta_sweep(name, PulseKind::Chirped, 0.01, &BETA_LIST),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs at least one model".into(),
            ));
        }
        if let Some(m) = self.models.iter().find(|m| !m.is_scalar()) {
            return Err(Error::InvalidParameter(format!(
                "sweeps compare scalar models only, got {m}"
            )));
        }
        if self.points.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep has no parameter points".into(),
            ));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be positive".into()));
        }
        for &(eps, beta) in &self.points {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "eps must be positive, got {eps}"
                )));
            }
            PulseSpec::new(self.pulse, beta, self.x0, self.profile)?;
            if !(0.001..=0.1).contains(&eps) {
                warn!("eps = {eps} lies outside the studied window [0.001, 0.1]");
            }
        }
        let report = assumption_checks(self.params);
        if !report.ok() {
            return Err(Error::AssumptionViolated(report.violations.join("; ")));
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub model: ModelKind,
    pub eps: f64,
    pub beta: f64,
    pub error: f64,
    pub n: usize,
    pub dt: f64,
    pub runtime_s: f64,
}

impl SweepRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.model,
            sig12(self.eps),
            sig12(self.beta),
            sig12(self.error),
            self.n,
            sig12(self.dt),
            sig12(self.runtime_s)
        )
    }

    pub fn parse_row(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Parse(format!(
                "expected 7 columns, got {}",
                cols.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("'{s}': {e}")))
        };
        Ok(Self {
            model: cols[0].parse()?,
            eps: num(cols[1])?,
            beta: num(cols[2])?,
            error: num(cols[3])?,
            n: cols[4]
                .parse()
                .map_err(|e| Error::Parse(format!("'{}': {e}", cols[4])))?,
            dt: num(cols[5])?,
            runtime_s: num(cols[6])?,
        })
    }
}

/// A parameter point that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub eps: f64,
    pub beta: f64,
    pub message: String,
    pub numerical: bool,
}

/// Errors of the three approximations at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub records: Vec<SweepRecord>,
    pub resolution: Resolution,
    pub exact_runtime_s: f64,
    pub exact_drift: f64,
}

impl PointResult {
    pub fn error(&self, model: ModelKind) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.model == model)
            .map(|r| r.error)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<PointFailure>,
}

impl SweepOutcome {
    pub fn has_numerical_failure(&self) -> bool {
        self.failures.iter().any(|f| f.numerical)
    }

    pub fn error(&self, model: ModelKind, eps: f64, beta: f64) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.model == model && r.eps == eps && r.beta == beta)
            .map(|r| r.error)
    }
}

struct Timed {
    model: ModelKind,
    solver: Solver,
    seconds: f64,
    acc: ErrorAccumulator,
    n: usize,
    dt: f64,
}

impl Timed {
    fn advance(&mut self, t: f64) -> Result<()> {
        let start = Instant::now();
        self.solver.advance_to(t)?;
        self.seconds += start.elapsed().as_secs_f64();
        Ok(())
    }
}

fn solver_for(
    model: ModelKind,
    data: &InitialData,
    eps: f64,
    n: usize,
    dt: f64,
    t_final: f64,
    o: &Overrides,
) -> Result<Solver> {
    let grid = PeriodicGrid::standard(n)?;
    let cfg = SolverConfig {
        params: data.params,
        eps,
        dt,
        t_final,
        grid: grid.clone(),
        snapshot_interval: None,
        dealias: o.dealias,
        nonlinear: true,
        polarization: o.polarization,
    };
    Solver::new(model, &initial_state(model, data, eps, &grid)?, &cfg)
}

fn envelope_data(pulse: &PulseSpec, params: KgParams, n: usize) -> Result<InitialData> {
    let grid = PeriodicGrid::standard(n)?;
    Ok(InitialData::new(pulse.envelope(&grid)?, params))
}

/// Largest coefficient in the outer quarter of the band between `center`
/// and the grid edge, relative to the largest coefficient of the state.
pub fn spectral_tail(state: &ModelState, center: f64) -> f64 {
    let fields: Vec<&Field> = match state {
        ModelState::Kg(s) => vec![&s.f, &s.g],
        ModelState::Vector(s) => vec![&s.u1, &s.u2],
        ModelState::Scalar(f) => vec![f],
    };
    let (mut peak, mut tail): (f64, f64) = (0.0, 0.0);
    for f in fields {
        let spec = f.to_spectral();
        let grid = spec.grid();
        let edge = grid.kmax() - 0.25 * (grid.kmax() - center);
        for (i, c) in spec.values().iter().enumerate() {
            let a = c.norm();
            peak = peak.max(a);
            if grid.wavenumber(i).abs() >= edge {
                tail = tail.max(a);
            }
        }
    }
    if peak > 0.0 {
        tail / peak
    } else {
        0.0
    }
}

/// Envelope tail level that triggers a grid doubling during a sweep point.
pub const TAIL_TOL: f64 = 1e-4;

/// Grid on which the error metric is taken: at least the exact grid and
/// [`CARRIER_POINTS`] nodes per carrier wavelength.
pub fn measure_n(n_exact: usize, eps: f64, params: KgParams) -> Result<usize> {
    let wanted = CARRIER_POINTS * params.kbar.abs() / eps / 2.0;
    Ok(pow2_for(wanted, n_exact)?.max(n_exact))
}

enum Attempt {
    Done(PointResult),
    Refine,
}

/// Runs the exact system once and every model of `plan` alongside it,
/// accumulating the error metric at each sample time. When an envelope
/// spectrum reaches [`TAIL_TOL`] near the grid edge (nonlinear focusing
/// broadens it) the envelope grid is doubled, the exact grid follows, and
/// the point restarts; grids fixed by the plan are kept.
pub fn evaluate_point(plan: &SweepPlan, eps: f64, beta: f64) -> Result<PointResult> {
    let pulse = PulseSpec::new(plan.pulse, beta, plan.x0, plan.profile)?;
    let mut res = Resolution::auto(eps, &pulse, plan.params)?.apply(&plan.overrides);
    loop {
        match attempt_point(plan, &pulse, eps, res)? {
            Attempt::Done(r) => return Ok(r),
            Attempt::Refine => {
                if 2 * res.n_envelope > MAX_N {
                    return Err(Error::InvalidParameter(format!(
                        "eps={eps} beta={beta}: envelope grid needs N > {MAX_N}"
                    )));
                }
                res.n_envelope *= 2;
                if plan.overrides.n_exact.is_none() {
                    res.n_exact = res
                        .n_exact
                        .max(exact_n_for(res.n_envelope, eps, plan.params)?);
                }
                info!(
                    "eps={eps} beta={beta}: envelope spectrum reached the grid edge, N -> {}, exact N -> {}",
                    res.n_envelope, res.n_exact
                );
            }
        }
    }
}

fn attempt_point(
    plan: &SweepPlan,
    pulse: &PulseSpec,
    eps: f64,
    res: Resolution,
) -> Result<Attempt> {
    let beta = pulse.beta;
    let t_final = plan.overrides.t_final.unwrap_or(1.0 / eps);
    let times = snapshot_times(t_final, Some(1.0 / (plan.samples as f64 * eps)));
    // Sample the envelope on the finer grid so both sides see the same data.
    let data = envelope_data(pulse, plan.params, res.n_exact.max(res.n_envelope))?;
    let refine = plan.overrides.n.is_none();
    let measure = PeriodicGrid::standard(measure_n(res.n_exact, eps, plan.params)?)?;

    let mut exact = Timed {
        model: ModelKind::ExactKg,
        solver: solver_for(
            ModelKind::ExactKg,
            &data,
            eps,
            res.n_exact,
            res.dt_exact,
            t_final,
            &plan.overrides,
        )?,
        seconds: 0.0,
        acc: ErrorAccumulator::default(),
        n: res.n_exact,
        dt: res.dt_exact,
    };
    let l2_start = exact.solver.l2_squared();
    let mut approx = plan
        .models
        .iter()
        .map(|&m| {
            Ok(Timed {
                model: m,
                solver: solver_for(
                    m,
                    &data,
                    eps,
                    res.n_envelope,
                    res.dt_envelope,
                    t_final,
                    &plan.overrides,
                )?,
                seconds: 0.0,
                acc: ErrorAccumulator::default(),
                n: res.n_envelope,
                dt: res.dt_envelope,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tail: f64 = 0.0;
    for &t in &times {
        exact.advance(t)?;
        let ModelState::Kg(s) = exact.solver.state() else {
            unreachable!()
        };
        let f = s.f.resample(&measure)?;
        for a in &mut approx {
            a.advance(t)?;
            let st = a.solver.state();
            tail = tail.max(spectral_tail(&st, 0.0));
            let lab = reconstruct(&st, t, eps, plan.params, &measure)?;
            a.acc.push(t, &f, &lab.f)?;
        }
        if refine && tail > TAIL_TOL {
            return Ok(Attempt::Refine);
        }
    }
    if tail > TAIL_TOL {
        warn!("eps={eps} beta={beta}: envelope spectral tail {tail:.1e} on a fixed grid");
    }
    let exact_drift =
        (exact.solver.l2_squared() - l2_start).abs() / l2_start.max(f64::MIN_POSITIVE);
    info!(
        "eps={eps} beta={beta}: exact N={} dt={} {:.1}s, drift {exact_drift:.1e}",
        exact.n, exact.dt, exact.seconds
    );
    let records = approx
        .into_iter()
        .map(|a| SweepRecord {
            model: a.model,
            eps,
            beta,
            error: a.acc.sup,
            n: a.n,
            dt: a.dt,
            runtime_s: a.seconds,
        })
        .collect();
    Ok(Attempt::Done(PointResult {
        records,
        resolution: res,
        exact_runtime_s: exact.seconds,
        exact_drift,
    }))
}

/// Evaluates every point of `plan` on a pool of `threads` workers. Rows are
/// written to `sink` in plan order as soon as they are available; failed
/// points are collected and the sweep goes on. With `timing` off the
/// runtime column is written as 0 so reruns are byte-identical.
pub fn run_sweep(
    plan: &SweepPlan,
    threads: usize,
    mut sink: Option<&mut dyn Write>,
    timing: bool,
) -> Result<SweepOutcome> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    if let Some(w) = sink.as_deref_mut() {
        writeln!(w, "{CSV_HEADER}")?;
        w.flush()?;
    }
    let mut outcome = SweepOutcome::default();
    let mut io_error = None;
    let (tx, rx) = mpsc::channel();
    pool.in_place_scope(|scope| {
        for (idx, &(eps, beta)) in plan.points.iter().enumerate() {
            let tx = tx.clone();
            scope.spawn(move |_| {
                let _ = tx.send((idx, evaluate_point(plan, eps, beta)));
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (idx, result) in rx {
            pending.insert(idx, result);
            while let Some(result) = pending.remove(&next) {
                let (eps, beta) = plan.points[next];
                next += 1;
                match result {
                    Ok(point) => {
                        for mut rec in point.records {
                            if !timing {
                                rec.runtime_s = 0.0;
                            }
                            if let (Some(w), None) = (sink.as_deref_mut(), &io_error) {
                                if let Err(e) =
                                    writeln!(w, "{}", rec.csv_row()).and_then(|_| w.flush())
                                {
                                    io_error = Some(e);
                                }
                            }
                            outcome.records.push(rec);
                        }
                    }
                    Err(e) => {
                        warn!("point eps={eps} beta={beta} failed: {e}");
                        outcome.failures.push(PointFailure {
                            eps,
                            beta,
                            numerical: matches!(e, Error::NonFinite { .. }),
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
    });
    match io_error {
        Some(e) => Err(e.into()),
        None => Ok(outcome),
    }
}

/// The exact field and the three differences at one time.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub time: f64,
    pub exact: Field,
    pub diffs: Vec<(ModelKind, Field)>,
}

impl Comparison {
    pub fn diff(&self, model: ModelKind) -> Option<&Field> {
        self.diffs.iter().find(|(m, _)| *m == model).map(|(_, f)| f)
    }

    /// Columns `x,exact,diff_<model>...` of the real fields.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "x,exact")?;
        for (m, _) in &self.diffs {
            write!(w, ",diff_{m}")?;
        }
        writeln!(w)?;
        let grid = self.exact.grid();
        for j in 0..grid.n() {
            write!(
                w,
                "{},{}",
                sig12(grid.node(j)),
                sig12(self.exact.values()[j].re)
            )?;
            for (_, d) in &self.diffs {
                write!(w, ",{}", sig12(d.values()[j].re))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Exact solution at time `t` and its differences with the reconstructed
/// scalar models, on a carrier-resolving grid. Envelope grids are doubled
/// while their spectra reach the grid edge, as in [`evaluate_point`].
pub fn snapshot_compare(
    pulse: &PulseSpec,
    eps: f64,
    t: f64,
    params: KgParams,
    overrides: &Overrides,
) -> Result<Comparison> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time must be >= 0, got {t}"
        )));
    }
    const CHECKPOINTS: usize = 20;
    let mut res = Resolution::auto(eps, pulse, params)?.apply(overrides);
    'attempt: loop {
        let data = envelope_data(pulse, params, res.n_exact.max(res.n_envelope))?;
        let mut models = ModelKind::SCALAR
            .iter()
            .map(|&m| solver_for(m, &data, eps, res.n_envelope, res.dt_envelope, t, overrides))
            .collect::<Result<Vec<_>>>()?;
        for i in 1..=CHECKPOINTS {
            let ti = t * i as f64 / CHECKPOINTS as f64;
            let mut tail: f64 = 0.0;
            for m in &mut models {
                m.advance_to(ti)?;
                tail = tail.max(spectral_tail(&m.state(), 0.0));
            }
            if tail > TAIL_TOL && overrides.n.is_none() && 2 * res.n_envelope <= MAX_N {
                res.n_envelope *= 2;
                if overrides.n_exact.is_none() {
                    res.n_exact = res.n_exact.max(exact_n_for(res.n_envelope, eps, params)?);
                }
                continue 'attempt;
            }
        }
        let mut exact = solver_for(
            ModelKind::ExactKg,
            &data,
            eps,
            res.n_exact,
            res.dt_exact,
            t,
            overrides,
        )?;
        exact.advance_to(t)?;
        let ModelState::Kg(s) = exact.state() else {
            unreachable!()
        };
        let grid = PeriodicGrid::standard(measure_n(res.n_exact, eps, params)?)?;
        let f = s.f.resample(&grid)?;
        let mut diffs = Vec::new();
        for m in &models {
            let lab = reconstruct(&m.state(), t, eps, params, &grid)?;
            diffs.push((m.model(), f.sub(&lab.f)?));
        }
        return Ok(Comparison {
            time: t,
            exact: f,
            diffs,
        });
    }
}

/// One model advanced from a pulse to its final time.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub model: ModelKind,
    pub pulse: PulseSpec,
    pub eps: f64,
    pub params: KgParams,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub runtime_s: f64,
    pub initial: ModelState,
    pub last: ModelState,
    /// Relative change of the conserved `L²` quantity.
    pub l2_drift: f64,
    pub polarization: Polarization,
}

impl Simulation {
    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::new();
        m.set("model", self.model)
            .set("pulse", self.pulse.kind)
            .set("profile", self.pulse.profile.name)
            .set("epsilon", sig12(self.eps))
            .set("beta", sig12(self.pulse.beta))
            .set("x0", sig12(self.pulse.x0))
            .set("N", self.n)
            .set("dt", sig12(self.dt))
            .set("T", sig12(self.t_final))
            .set("L", sig12(DOMAIN_LENGTH))
            .set("v", sig12(self.params.v))
            .set("kbar", sig12(self.params.kbar))
            .set("polarization", self.polarization)
            .set("seed", "none")
            .set("steps", self.steps)
            .set("l2_drift", sig12(self.l2_drift))
            .set("runtime_s", sig12(self.runtime_s));
        m
    }
}

pub fn simulate(
    model: ModelKind,
    pulse: &PulseSpec,
    eps: f64,
    params: KgParams,
    overrides: &Overrides,
) -> Result<Simulation> {
    let res = Resolution::auto(eps, pulse, params)?;
    // For a single run the generic overrides address the model being run.
    let (n, dt) = if model == ModelKind::ExactKg {
        (
            overrides.n.or(overrides.n_exact).unwrap_or(res.n_exact),
            overrides.dt.or(overrides.dt_exact).unwrap_or(res.dt_exact),
        )
    } else {
        (
            overrides.n.unwrap_or(res.n_envelope),
            overrides.dt.unwrap_or(res.dt_envelope),
        )
    };
    let t_final = overrides.t_final.unwrap_or(1.0 / eps);
    let data = envelope_data(pulse, params, n)?;
    let mut solver = solver_for(model, &data, eps, n, dt, t_final, overrides)?;
    let initial = solver.state();
    let l2_start = solver.l2_squared();
    let start = Instant::now();
    solver.advance_to(t_final)?;
    let runtime_s = start.elapsed().as_secs_f64();
    let l2_drift = (solver.l2_squared() - l2_start).abs() / l2_start.max(f64::MIN_POSITIVE);
    Ok(Simulation {
        model,
        pulse: *pulse,
        eps,
        params,
        n,
        dt,
        t_final,
        steps: solver.steps(),
        runtime_s,
        initial,
        last: solver.state(),
        l2_drift,
        polarization: overrides.polarization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_formats() {
        assert_eq!(sig12(0.01), "0.01");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(16384.0), "16384");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(2.5e-9), "2.5e-9");
        assert_eq!(sig12(-123.456), "-123.456");
        assert_eq!(sig12(0.0), "0");
        for x in [0.1234567890123, 9.87654321e-7, 3.0e15, 0.075] {
            let back: f64 = sig12(x).parse().unwrap();
            assert!((back - x).abs() <= 1e-11 * x.abs());
        }
    }

    #[test]
    fn record_round_trip() {
        let r = SweepRecord {
            model: ModelKind::ImprovedNls,
            eps: 0.01,
            beta: 0.075,
            error: 0.0123456789012345,
            n: 2048,
            dt: 0.0025,
            runtime_s: 1.5,
        };
        let back = SweepRecord::parse_row(&r.csv_row()).unwrap();
        assert_eq!(back.model, r.model);
        assert_eq!(back.n, 2048);
        assert!((back.error - r.error).abs() < 1e-13);
    }

    #[test]
    fn accumulator_identity_and_zero() {
        let grid = PeriodicGrid::standard(64).unwrap();
        let f = Field::from_fn(&grid, |x| num_complex::Complex64::new(x.sin(), 0.0));
        let zero = Field::zeros(&grid, crate::spectral::Space::Physical);
        let mut a = ErrorAccumulator::default();
        a.push(0.0, &f, &f).unwrap();
        assert_eq!(a.sup, 0.0);
        a.push(1.0, &f, &zero).unwrap();
        assert!((a.sup - 1.0).abs() < 1e-15);
        a.push(2.0, &zero, &f).unwrap();
        assert_eq!(a.skipped, vec![2.0]);
        assert_eq!(a.samples, 2);
    }

    #[test]
    fn resolution_policy() {
        let short = PulseSpec::short(1.0).unwrap();
        let r = Resolution::auto(0.01, &short, KgParams::toy()).unwrap();
        let kmax = |n: usize| PeriodicGrid::standard(n).unwrap().kmax();
        assert!(kmax(r.n_exact) >= 100.0);
        assert!(r.n_envelope >= MIN_N_ENVELOPE && r.n_envelope <= r.n_exact);
        assert_eq!(r.dt_exact, 0.005);
        let narrow =
            Resolution::auto(0.01, &PulseSpec::short(0.1).unwrap(), KgParams::toy()).unwrap();
        assert!(narrow.n_envelope > r.n_envelope);
        let o = Overrides {
            n: Some(1024),
            dt_exact: Some(1e-4),
            ..Default::default()
        };
        let r2 = r.apply(&o);
        assert_eq!(
            (r2.n_envelope, r2.dt_exact, r2.n_exact),
            (1024, 1e-4, r.n_exact)
        );
        assert!(envelope_extent(&PulseSpec::chirped(0.01).unwrap(), 1e-300).is_err());
    }

    #[test]
    fn named_plans() {
        for t in NamedTest::ALL {
            let p = SweepPlan::named(t);
            assert_eq!(p.name.parse::<NamedTest>().unwrap(), t);
            p.validate().unwrap();
        }
        let mut bad = SweepPlan::named(NamedTest::Short1);
        bad.models.push(ModelKind::ExactKg);
        assert!(bad.validate().is_err());
        assert!("short-9".parse::<NamedTest>().is_err());
    }
}
