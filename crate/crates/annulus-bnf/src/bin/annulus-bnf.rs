use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use annulus_bnf::bnf::{bnf_direct, bnf_quantified, DEFAULT_PRE_STEPS};
use annulus_bnf::divisors::{locate_resonances, zones_to_csv, ResonanceZone};
use annulus_bnf::kam::{default_schedule, kam_iterate, KamState, ScheduleEntry, SCHEDULE_ENVELOPE_A};
use annulus_bnf::maps::{GeneratingMap, MapFile, PhasePoint};
use annulus_bnf::measure::{
    build_counterexample, classify_orbit, find_periodic_orbit, measure_scan, ClassifierConfig, PeriodicOrbit,
};
use annulus_bnf::potential::{harmonic_measure_mc, jensen_bound, jensen_bound_global, HoleDomain, Target};
use annulus_bnf::resonance::hole::DEFAULT_NODES;
use annulus_bnf::resonance::{flatness_bound, pendulum_reduce, residue_check};
use annulus_bnf::selftest::{run_selftest, GOLDEN};
use annulus_bnf::series::{FourierTaylorSeries, RadialSeries, SeriesFile, StripParams};
use annulus_bnf::Error;

#[derive(Parser, Debug)]
#[command(name = "annulus-bnf", version, about = "Normal forms and invariant-circle experiments for analytic twist maps")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads (falls back to ANNULUS_BNF_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate or measure a stored series.
    #[command(subcommand)]
    Series(SeriesCmd),
    /// Build maps or evaluate them.
    #[command(subcommand)]
    Map(MapCmd),
    /// Birkhoff normal form.
    #[command(subcommand)]
    Bnf(BnfCmd),
    /// KAM iteration under a schedule.
    #[command(subcommand)]
    Kam(KamCmd),
    /// Resonant pendulum reduction and zone listing.
    #[command(subcommand)]
    Resonance(ResonanceCmd),
    /// Two-constants bound and harmonic measure.
    #[command(subcommand)]
    Jensen(JensenCmd),
    /// Non-regular area of bands around r = 0.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Resonant counterexample maps.
    #[command(subcommand)]
    Counterexample(CounterexampleCmd),
    /// Single-orbit diagnostics.
    #[command(subcommand)]
    Orbit(OrbitCmd),
    /// Run the acceptance checks.
    Selftest,
}

#[derive(Subcommand, Debug)]
enum SeriesCmd {
    Eval {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        r: f64,
    },
    Norm {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        rho: f64,
    },
}

#[derive(Subcommand, Debug)]
enum MapCmd {
    /// `Ω = r²/2`, `F = K/(4π²) cos 2πθ`.
    Standard {
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 16)]
        nr: usize,
        #[arg(long, default_value_t = 32)]
        nk: usize,
    },
    /// `Ω = ω₀ r + c r²/2` with no perturbation.
    Integrable {
        #[arg(long, value_parser = parse_frequency)]
        omega0: f64,
        #[arg(long, default_value_t = 1.0)]
        curvature: f64,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
    },
    Eval {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        x: (f64, f64),
        #[arg(long, default_value_t = 1)]
        iterate: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Engine {
    Direct,
    Quantified,
}

#[derive(Subcommand, Debug)]
enum BnfCmd {
    Compute {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum, default_value_t = Engine::Quantified)]
        engine: Engine,
        #[arg(long, default_value_t = DEFAULT_PRE_STEPS)]
        pre_steps: usize,
    },
}

#[derive(Subcommand, Debug)]
enum KamCmd {
    Run {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        steps: usize,
        /// JSON list of {n, k, delta, eps_bar}; default schedule otherwise.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        n0: usize,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
    },
}

#[derive(Subcommand, Debug)]
enum ResonanceCmd {
    Analyze {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        /// Half-width of the resonance zone in r.
        #[arg(long, default_value_t = 0.02)]
        radius: f64,
        /// Exponent parameter of the flatness bound.
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
    },
    /// CSV p,q,center,radius of the zones up to order n.
    Zones {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long = "k-const", default_value_t = 100.0)]
        k_const: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        interval: (f64, f64),
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TargetArg {
    Inner,
    Outer,
}

#[derive(Subcommand, Debug)]
enum JensenCmd {
    Bound {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        m: f64,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        z: (f64, f64),
        /// Use the variant valid for every hole distance.
        #[arg(long)]
        global: bool,
    },
    Mc {
        /// Hole-free unit disk when omitted.
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, value_parser = parse_pair, default_value = "0.5,0", allow_hyphen_values = true)]
        z: (f64, f64),
        #[arg(long, value_enum, default_value_t = TargetArg::Inner)]
        target: TargetArg,
        /// Index of a hole to use as target instead.
        #[arg(long)]
        hole: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        walks: usize,
    },
}

#[derive(Args, Debug)]
struct ClassifierArgs {
    #[arg(long, default_value_t = 100_000)]
    iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

impl ClassifierArgs {
    fn config(&self) -> ClassifierConfig {
        ClassifierConfig { iterations: self.iters, tol: self.tol, ..Default::default() }
    }
}

#[derive(Subcommand, Debug)]
enum MeasureCmd {
    Scan {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long, value_parser = parse_grid, default_value = "64x64")]
        grid: (usize, usize),
        #[command(flatten)]
        classifier: ClassifierArgs,
    },
}

#[derive(Subcommand, Debug)]
enum CounterexampleCmd {
    Build {
        #[arg(long, value_parser = parse_frequency, default_value = "golden")]
        omega0: f64,
        /// Number of consecutive convergents, starting at `--first`.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        first: usize,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
    },
}

#[derive(Subcommand, Debug)]
enum OrbitCmd {
    Classify {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        x: (f64, f64),
        #[command(flatten)]
        classifier: ClassifierArgs,
    },
    Periodic {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        x: (f64, f64),
    },
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or("expected NxM")?;
    Ok((a.parse().map_err(|e| format!("{e}"))?, b.parse().map_err(|e| format!("{e}"))?))
}

fn parse_frequency(s: &str) -> Result<f64, String> {
    if s == "golden" {
        Ok(GOLDEN)
    } else {
        s.parse().map_err(|e| format!("{e}"))
    }
}

enum Failure {
    Usage(String),
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_map(path: &Path) -> CliResult<GeneratingMap> {
    Ok(GeneratingMap::from_file(&read_json::<MapFile>(path)?)?)
}

/// What a subcommand produces: the report body and a one-line summary.
enum Output {
    Json(Value),
    Text(String),
}

fn run(cli: &Cli) -> CliResult<(Output, String, bool)> {
    let ok = |out: Output, summary: String| Ok((out, summary, true));
    match &cli.command {
        Command::Series(SeriesCmd::Eval { file, theta, r }) => {
            let s = FourierTaylorSeries::from_file(&read_json::<SeriesFile>(file)?)?;
            let v = s.eval(*theta, *r);
            ok(Output::Json(json!({"theta": theta, "r": r, "value": v})), format!("value {v}"))
        }
        Command::Series(SeriesCmd::Norm { file, h, rho }) => {
            let s = FourierTaylorSeries::from_file(&read_json::<SeriesFile>(file)?)?;
            let v = s.weighted_norm(StripParams::new(*h, *rho)?);
            ok(Output::Json(json!({"h": h, "rho": rho, "weighted_norm": v})), format!("norm {v}"))
        }
        Command::Map(MapCmd::Standard { k, nr, nk }) => {
            let m = GeneratingMap::standard_map(*k, *nr, *nk);
            ok(Output::Json(serde_json::to_value(m.to_file()).expect("map file serialises")), format!("standard map K = {k}"))
        }
        Command::Map(MapCmd::Integrable { omega0, curvature, h, rho }) => {
            let m = GeneratingMap::integrable(RadialSeries::twist(*omega0, *curvature, 2), 2, StripParams::new(*h, *rho)?);
            ok(Output::Json(serde_json::to_value(m.to_file()).expect("map file serialises")), format!("twist with frequency {omega0}"))
        }
        Command::Map(MapCmd::Eval { map, x, iterate }) => {
            let m = load_map(map)?;
            let y = m.iterate(PhasePoint::new(x.0, x.1), *iterate)?;
            ok(Output::Json(json!({"x": [x.0, x.1], "iterate": iterate, "image": [y.theta, y.r]})), format!("image ({}, {})", y.theta, y.r))
        }
        Command::Bnf(BnfCmd::Compute { map, order, engine, pre_steps }) => {
            let m = load_map(map)?;
            let res = match engine {
                Engine::Direct => bnf_direct(&m, *order)?,
                Engine::Quantified => bnf_quantified(&m, *order, *pre_steps)?,
            };
            let summary = format!("{} coefficients", res.xi.coeffs().len());
            ok(
                Output::Json(json!({
                    "xi": res.xi.coeffs(),
                    "step_norms": res.step_norms,
                    "valuations": res.valuations,
                    "config": {"map": map, "order": order, "engine": format!("{engine:?}").to_lowercase(), "pre_steps": pre_steps},
                })),
                summary,
            )
        }
        Command::Kam(KamCmd::Run { map, steps, schedule, n0, tau }) => {
            let m = load_map(map)?;
            let sched: Vec<ScheduleEntry> = match schedule {
                Some(path) => read_json::<Vec<ScheduleEntry>>(path)?.into_iter().take(*steps).collect(),
                None => default_schedule(*n0, *steps, m.strip().h, SCHEDULE_ENVELOPE_A),
            };
            let hist = kam_iterate(&KamState::from_map(&m, *tau), &sched)?;
            let rows: Vec<Value> = hist.states[1..]
                .iter()
                .map(|s| json!({"norm": s.norms.last(), "zones": s.excluded}))
                .collect();
            let summary = format!("{} of {} steps, stop reason {:?}", rows.len(), sched.len(), hist.terminal_error);
            ok(
                Output::Json(json!({
                    "steps": rows,
                    "envelope": hist.envelope,
                    "terminal_error": hist.terminal_error,
                    "config": {"map": map, "schedule": sched, "tau": tau},
                })),
                summary,
            )
        }
        Command::Resonance(ResonanceCmd::Analyze { map, p, q, radius, nu }) => {
            let m = load_map(map)?;
            let target = *p as f64 / *q as f64;
            let center = resonant_radius(&m, target)?;
            let zone = ResonanceZone { p: *p, q: *q, center, radius: *radius };
            let red = pendulum_reduce(&m, &zone)?;
            let e0_sup = red.e0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let e1_sup = red.e1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let t = if red.lambda > 0.0 { red.lambda } else { 0.5 * red.rho_q };
            let check = residue_check(&red, t, DEFAULT_NODES)?;
            let bound = flatness_bound(*nu, &red, m.strip().h)?;
            ok(
                Output::Json(json!({
                    "e0_sup": e0_sup,
                    "e1_sup": e1_sup,
                    "residue_contour": [check.contour.re, check.contour.im],
                    "residue_formula": check.formula,
                    "bound": bound,
                    "lambda": red.lambda,
                    "contour_radius": t,
                    "config": {"map": map, "zone": zone, "nu": nu},
                })),
                format!("e1 sup {e1_sup}, contour {} vs {}", check.contour.re, check.formula),
            )
        }
        Command::Resonance(ResonanceCmd::Zones { map, n, k_const, tau, interval }) => {
            let m = load_map(map)?;
            let zones = locate_resonances(m.omega(), *n, *k_const, *tau, *interval)?;
            ok(Output::Text(zones_to_csv(&zones)), format!("{} zones", zones.len()))
        }
        Command::Jensen(JensenCmd::Bound { domain, sigma, m, z, global }) => {
            let dom = load_domain(domain)?;
            let point = Complex64::new(z.0, z.1);
            let b = if *global { jensen_bound_global(&dom, *sigma, *m, point)? } else { jensen_bound(&dom, *sigma, *m, point)? };
            ok(
                Output::Json(json!({"log_bound": b, "bound": b.exp(), "config": {"domain": dom, "sigma": sigma, "m": m, "z": [z.0, z.1], "global": global}})),
                format!("ln bound {b}"),
            )
        }
        Command::Jensen(JensenCmd::Mc { domain, sigma, z, target, hole, walks }) => {
            let dom = match domain {
                Some(path) => load_domain(path)?,
                None => HoleDomain::disk(1.0),
            };
            let tgt = match (hole, target) {
                (Some(j), _) => Target::Hole(*j),
                (None, TargetArg::Inner) => Target::Inner,
                (None, TargetArg::Outer) => Target::Outer,
            };
            let est = harmonic_measure_mc(&dom, *sigma, Complex64::new(z.0, z.1), tgt, *walks, cli.seed)?;
            let mut report = json!({"estimate": est.estimate, "stderr": est.stderr, "walks": est.walks,
                "config": {"sigma": sigma, "z": [z.0, z.1], "target": format!("{tgt:?}"), "seed": cli.seed}});
            if domain.is_none() && matches!(tgt, Target::Inner) {
                report["exact"] = json!((z.0.hypot(z.1)).ln() / sigma.ln());
            }
            ok(Output::Json(report), format!("harmonic measure {} ± {}", est.estimate, est.stderr))
        }
        Command::Measure(MeasureCmd::Scan { map, t, grid, classifier }) => {
            let m = load_map(map)?;
            let rep = measure_scan(&m, t, *grid, &classifier.config())?;
            let summary = format!("m estimates {:?}", rep.m_estimates);
            ok(Output::Text(rep.to_csv()), summary)
        }
        Command::Counterexample(CounterexampleCmd::Build { omega0, levels, first, h }) => {
            let base = GeneratingMap::integrable(RadialSeries::twist(*omega0, 1.0, 2), 2, StripParams::new(*h, 1.0)?);
            let k_list: Vec<usize> = (*first..*first + *levels).collect();
            let ce = build_counterexample(*omega0, &base, &k_list, *h)?;
            let summary = ce.terms.iter().map(|t| format!("{}/{}", t.p, t.q)).collect::<Vec<_>>().join(" ");
            let map_json = serde_json::to_value(ce.map.to_file()).expect("map file serialises");
            // The map file stays loadable by --map; the term table goes to stderr.
            eprintln!("{}", json!({"terms": ce.terms}));
            ok(Output::Json(map_json), format!("resonances {summary}"))
        }
        Command::Orbit(OrbitCmd::Classify { map, x, classifier }) => {
            let m = load_map(map)?;
            let d = classify_orbit(&m, PhasePoint::new(x.0, x.1), &classifier.config());
            let summary = format!("{:?} ({})", d.classification, d.reason);
            ok(Output::Json(serde_json::to_value(&d).expect("diagnostics serialise")), summary)
        }
        Command::Orbit(OrbitCmd::Periodic { map, p, q, x }) => {
            let m = load_map(map)?;
            let orb = find_periodic_orbit(&m, *p, *q, PhasePoint::new(x.0, x.1))?;
            let summary = match &orb {
                PeriodicOrbit::Hyperbolic(o) => format!("hyperbolic, eigenvalues {:?}", o.eigenvalues),
                PeriodicOrbit::Elliptic(o) => format!("elliptic, trace {}", o.trace),
            };
            ok(Output::Json(serde_json::to_value(&orb).expect("orbit serialises")), summary)
        }
        Command::Selftest => {
            let (report, times) = run_selftest(cli.seed);
            for (c, t) in report.criteria.iter().zip(&times) {
                eprintln!("criterion {:>2} {:<28} {} ({t:.2} s)", c.id, c.name, if c.passed { "PASS" } else { "FAIL" });
            }
            let passed = report.all_passed();
            let n_pass = report.criteria.iter().filter(|c| c.passed).count();
            Ok((Output::Json(serde_json::to_value(&report).expect("report serialises")), format!("{n_pass}/10 criteria passed"), passed))
        }
    }
}

fn resonant_radius(m: &GeneratingMap, target: f64) -> CliResult<f64> {
    let mut r = 0.0;
    for _ in 0..50 {
        let twist = m.twist_at(r);
        if !(twist > 0.0) {
            return Err(Error::NoTwist.into());
        }
        let step = (m.frequency(r) - target) / twist;
        r -= step;
        if step.abs() < 1e-15 {
            return Ok(r);
        }
    }
    Err(Error::NewtonDiverged { residual: (m.frequency(r) - target).abs() }.into())
}

fn load_domain(path: &Path) -> CliResult<HoleDomain> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(HoleDomain::from_json(&text)?)
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("ANNULUS_BNF_THREADS") {
        Ok(v) => v.parse().map(Some).map_err(|_| format!("ANNULUS_BNF_THREADS={v} is not a thread count")),
        Err(_) => Ok(None),
    }
}

fn write_output(out: &Output, path: Option<&Path>) -> std::io::Result<()> {
    let body = match out {
        Output::Json(v) => serde_json::to_string_pretty(v).expect("json value serialises") + "\n",
        Output::Text(s) => s.clone(),
    };
    match path {
        Some(p) => std::fs::write(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn usage_failure(msg: &str) -> ExitCode {
    eprintln!("{}", json!({"error": "usage", "message": msg}));
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match thread_count(cli.threads) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                return usage_failure(&e.to_string());
            }
        }
        Ok(None) => {}
        Err(msg) => return usage_failure(&msg),
    }
    match run(&cli) {
        Ok((out, summary, passed)) => {
            if let Err(e) = write_output(&out, cli.out.as_deref()) {
                return usage_failure(&e.to_string());
            }
            eprintln!("{summary}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(Failure::Usage(msg)) => usage_failure(&msg),
        Err(Failure::Numerical(e)) => {
            eprintln!("{}", json!({"error": e.tag(), "message": e.to_string()}));
            ExitCode::from(2)
        }
    }
}
