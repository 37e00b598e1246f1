use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use svea::dispersion::{symbol_table, KgParams, SYMBOL_WINDOW};
use svea::experiments::validation::run_all;
use svea::experiments::{
    parse_config, run_sweep, sig12, simulate, snapshot_compare, Manifest, NamedTest, Overrides,
    SweepPlan, SAMPLES_PER_HORIZON,
};
use svea::models::{ModelKind, ModelState, Polarization};
use svea::pulses::{Profile, PulseKind, PulseSpec, DEFAULT_X0};
use svea::spectral::{Field, DOMAIN_LENGTH};
use svea::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "svea",
    version,
    about = "Envelope-model solvers and error sweeps for a dispersive Klein-Gordon medium"
)]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file supplying flag defaults; flags on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log progress (repeat for debug output)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one model at one parameter point
    Simulate(SimulateArgs),
    /// Error sweep over (eps, beta) points
    Sweep(SweepArgs),
    /// Dispersion symbols and their gaps as CSV
    Symbols(SymbolsArgs),
    /// Exact solution and model differences at one time
    Compare(CompareArgs),
    /// Invariant and oracle checks
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct PulseArgs {
    #[arg(long, default_value = "short")]
    pulse: PulseKind,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_X0)]
    x0: f64,
    #[arg(long, default_value = "gaussian")]
    profile: String,
}

impl PulseArgs {
    fn spec(&self) -> svea::Result<PulseSpec> {
        PulseSpec::new(
            self.pulse,
            self.beta,
            self.x0,
            Profile::by_name(&self.profile)?,
        )
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid size of the model run (envelope models in sweeps)
    #[arg(long = "N", value_name = "N")]
    n: Option<usize>,
    /// Time step of the model run (envelope models in sweeps)
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "N-exact", value_name = "N")]
    n_exact: Option<usize>,
    #[arg(long)]
    dt_exact: Option<f64>,
    /// Final time, default 1/eps
    #[arg(long = "T", value_name = "T")]
    t_final: Option<f64>,
    /// Truncate the upper third of the spectrum after each nonlinear step
    #[arg(long)]
    dealias: bool,
    /// Polarization of the full-dispersion model: carrier or shifted
    #[arg(long, default_value = "carrier")]
    polarization: Polarization,
}

impl GridArgs {
    fn overrides(&self) -> svea::Result<Overrides> {
        for (name, n) in [("N", self.n), ("N-exact", self.n_exact)] {
            if let Some(n) = n {
                if n < 4 || !n.is_power_of_two() {
                    return Err(Error::InvalidParameter(format!(
                        "--{name} must be a power of two >= 4, got {n}"
                    )));
                }
            }
        }
        Ok(Overrides {
            n: self.n,
            dt: self.dt,
            n_exact: self.n_exact,
            dt_exact: self.dt_exact,
            t_final: self.t_final,
            dealias: self.dealias,
            polarization: self.polarization,
        })
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value = "fd")]
    model: ModelKind,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[command(flatten)]
    pulse: PulseArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Also write the final state as raw binary
    #[arg(long)]
    binary: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Named plan: short-1, short-2, short-3, chirped-1 or chirped-2
    #[arg(long)]
    test: Option<NamedTest>,
    #[arg(long)]
    pulse: Option<PulseKind>,
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    models: Vec<ModelKind>,
    #[arg(long, default_value_t = DEFAULT_X0)]
    x0: f64,
    #[arg(long, default_value = "gaussian")]
    profile: String,
    /// Error samples per 1/eps
    #[arg(long, default_value_t = SAMPLES_PER_HORIZON)]
    samples: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write 0 in the runtime column so reruns are byte-identical
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SymbolsArgs {
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = SYMBOL_WINDOW.0, allow_negative_numbers = true)]
    xi_min: f64,
    #[arg(long, default_value_t = SYMBOL_WINDOW.1, allow_negative_numbers = true)]
    xi_max: f64,
    #[arg(long, default_value_t = SYMBOL_WINDOW.2)]
    samples: usize,
    /// Output file; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[command(flatten)]
    pulse: PulseArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Skip the slower self-checks
    #[arg(long)]
    quick: bool,
}

/// Splices `--config` entries in front of the subcommand's own arguments so
/// that later command-line occurrences override them.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    rest.extend(it.next());
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let map = parse_config(&text).map_err(|e| format!("{path}: {e}"))?;
    let Some(sub) = rest
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|p| p + 1)
    else {
        return Ok(rest);
    };
    let mut injected = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.trim_start_matches('-'));
        match value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" => injected.push(flag),
            "false" | "no" | "off" => {}
            _ => injected.push(format!("{flag}={value}")),
        }
    }
    rest.splice(sub + 1..sub + 1, injected);
    Ok(rest)
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::NonFinite { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn create(path: &Path) -> svea::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_field(dir: &Path, stem: &str, field: &Field, binary: bool) -> svea::Result<()> {
    let phys = field.to_physical();
    let mut w = create(&dir.join(format!("{stem}.csv")))?;
    phys.write_csv(&mut w)?;
    w.flush()?;
    if binary {
        let mut w = create(&dir.join(format!("{stem}.bin")))?;
        phys.write_binary(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn write_state(dir: &Path, prefix: &str, state: &ModelState, binary: bool) -> svea::Result<()> {
    match state {
        ModelState::Kg(s) => {
            write_field(dir, &format!("{prefix}_f"), &s.f, binary)?;
            write_field(dir, &format!("{prefix}_g"), &s.g, binary)
        }
        ModelState::Vector(s) => {
            write_field(dir, &format!("{prefix}_u1"), &s.u1, binary)?;
            write_field(dir, &format!("{prefix}_u2"), &s.u2, binary)
        }
        ModelState::Scalar(f) => write_field(dir, &format!("{prefix}_f"), f, binary),
    }
}

fn cmd_simulate(a: &SimulateArgs) -> svea::Result<u8> {
    let pulse = a.pulse.spec()?;
    let sim = simulate(
        a.model,
        &pulse,
        a.eps,
        KgParams::toy(),
        &a.grid.overrides()?,
    )?;
    fs::create_dir_all(&a.out)?;
    write_state(&a.out, "initial", &sim.initial, a.binary)?;
    write_state(&a.out, "final", &sim.last, a.binary)?;
    sim.manifest().write(&a.out.join("manifest.txt"))?;
    println!(
        "{} eps={} beta={} N={} dt={} T={}: {} steps, L2 drift {:.1e}, {:.2}s",
        sim.model,
        sig12(sim.eps),
        sig12(pulse.beta),
        sim.n,
        sig12(sim.dt),
        sig12(sim.t_final),
        sim.steps,
        sim.l2_drift,
        sim.runtime_s
    );
    Ok(0)
}

fn sweep_plan(a: &SweepArgs) -> svea::Result<SweepPlan> {
    let mut plan = match a.test {
        Some(test) => {
            if !a.eps.is_empty() || !a.beta.is_empty() || a.pulse.is_some() {
                return Err(Error::InvalidParameter(
                    "--test fixes the pulse and the points; drop --pulse/--eps/--beta".into(),
                ));
            }
            SweepPlan::named(test)
        }
        None => {
            if a.eps.is_empty() || a.beta.is_empty() {
                return Err(Error::InvalidParameter(
                    "a custom sweep needs --eps and --beta lists (or use --test)".into(),
                ));
            }
            let points = a
                .eps
                .iter()
                .flat_map(|&e| a.beta.iter().map(move |&b| (e, b)))
                .collect();
            SweepPlan::custom("custom", a.pulse.unwrap_or(PulseKind::Short), points)
        }
    };
    if !a.models.is_empty() {
        plan.models = a.models.clone();
    }
    plan.x0 = a.x0;
    plan.profile = Profile::by_name(&a.profile)?;
    plan.samples = a.samples;
    plan.overrides = a.grid.overrides()?;
    plan.validate()?;
    Ok(plan)
}

fn cmd_sweep(a: &SweepArgs) -> svea::Result<u8> {
    let plan = sweep_plan(a)?;
    fs::create_dir_all(&a.out)?;
    let mut manifest = Manifest::new();
    manifest
        .set("plan", &plan.name)
        .set("pulse", plan.pulse)
        .set("profile", plan.profile.name)
        .set("x0", sig12(plan.x0))
        .set(
            "models",
            plan.models
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .set("points", plan.points.len())
        .set("samples", plan.samples)
        .set("L", sig12(DOMAIN_LENGTH))
        .set("v", sig12(plan.params.v))
        .set("kbar", sig12(plan.params.kbar))
        .set("polarization", plan.overrides.polarization)
        .set("dealias", plan.overrides.dealias)
        .set("seed", "none");
    let opt = |v: Option<f64>| v.map(sig12).unwrap_or_else(|| "auto".into());
    manifest
        .set(
            "N",
            plan.overrides
                .n
                .map(|n| n.to_string())
                .unwrap_or_else(|| "auto".into()),
        )
        .set("dt", opt(plan.overrides.dt))
        .set(
            "N_exact",
            plan.overrides
                .n_exact
                .map(|n| n.to_string())
                .unwrap_or_else(|| "auto".into()),
        )
        .set("dt_exact", opt(plan.overrides.dt_exact))
        .set("T", opt(plan.overrides.t_final));
    manifest.write(&a.out.join("manifest.txt"))?;

    let csv_path = a.out.join(format!("{}.csv", plan.name));
    let mut csv = create(&csv_path)?;
    let outcome = run_sweep(&plan, a.threads, Some(&mut csv), !a.no_timing)?;
    csv.flush()?;
    let failures_path = a.out.join("failures.txt");
    if outcome.failures.is_empty() {
        if failures_path.exists() {
            fs::remove_file(&failures_path)?;
        }
    } else {
        let mut w = create(&failures_path)?;
        for f in &outcome.failures {
            writeln!(
                w,
                "epsilon={} beta={}: {}",
                sig12(f.eps),
                sig12(f.beta),
                f.message
            )?;
        }
        w.flush()?;
        eprintln!(
            "{} point(s) failed, see {}",
            outcome.failures.len(),
            failures_path.display()
        );
    }
    println!(
        "{} rows written to {}",
        outcome.records.len(),
        csv_path.display()
    );
    Ok(if outcome.has_numerical_failure() {
        EXIT_NUMERICAL
    } else if outcome.failures.is_empty() {
        0
    } else {
        EXIT_USAGE
    })
}

fn cmd_symbols(a: &SymbolsArgs) -> svea::Result<u8> {
    let rows = symbol_table(KgParams::toy(), a.eps, a.xi_min, a.xi_max, a.samples)?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(out, "xi,m_exact,m_taylor2,m_pade,c_schrod,c_improved,ratio")?;
    for r in rows {
        let cols = [
            r.xi,
            r.m_exact,
            r.m_taylor2,
            r.m_pade,
            r.c_schrod,
            r.c_improved,
            r.ratio,
        ];
        writeln!(out, "{}", cols.map(sig12).join(","))?;
    }
    out.flush()?;
    Ok(0)
}

fn cmd_compare(a: &CompareArgs) -> svea::Result<u8> {
    let pulse = a.pulse.spec()?;
    let overrides = a.grid.overrides()?;
    let t = overrides.t_final.unwrap_or(1.0 / a.eps);
    let cmp = snapshot_compare(&pulse, a.eps, t, KgParams::toy(), &overrides)?;
    fs::create_dir_all(&a.out)?;
    let mut w = create(&a.out.join("compare.csv"))?;
    cmp.write_csv(&mut w)?;
    w.flush()?;
    let mut m = Manifest::new();
    m.set("pulse", pulse.kind)
        .set("profile", pulse.profile.name)
        .set("epsilon", sig12(a.eps))
        .set("beta", sig12(pulse.beta))
        .set("x0", sig12(pulse.x0))
        .set("T", sig12(t))
        .set("N", cmp.exact.grid().n())
        .set("L", sig12(DOMAIN_LENGTH))
        .set("polarization", overrides.polarization)
        .set("seed", "none");
    m.write(&a.out.join("manifest.txt"))?;
    let peak = cmp.exact.linf_norm().max(f64::MIN_POSITIVE);
    for (model, d) in &cmp.diffs {
        println!(
            "{model}: max |f - f_{model}| / max |f| = {:.3e}",
            d.linf_norm() / peak
        );
    }
    Ok(0)
}

fn cmd_validate(a: &ValidateArgs) -> svea::Result<u8> {
    let checks = run_all(a.quick);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    Ok(if failed == 0 { 0 } else { EXIT_NUMERICAL })
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Symbols(a) => cmd_symbols(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
