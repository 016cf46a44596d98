use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use coupled_crn::analysis::{exit_time_experiment, hypoexponential_cdf, pure_birth_exit_cdf};
use coupled_crn::ensemble::{couple_ensemble, simulate_ensemble};
use coupled_crn::output;
use coupled_crn::sensitivity::{epsilon_scan, fd_estimate, gap_moment, EnsembleConfig, Observable, ScanSpec};
use coupled_crn::{
    compute_growth_profile, coupling_ratio_bound, load_model, Bounds, Config, CrnError, Engine, Model, Params,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{CheckArgs, Command, ModelArgs, OracleCommand, Overrides};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_MODEL: u8 = 3;
pub const EXIT_TRUNCATED: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CrnError),
}

impl From<CrnError> for CliError {
    fn from(e: CrnError) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(CrnError::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                CrnError::Model(_) => EXIT_MODEL,
                CrnError::Truncated { .. } | CrnError::CoupledTruncated { .. } => EXIT_TRUNCATED,
                CrnError::Dimension { .. }
                | CrnError::Index { .. }
                | CrnError::Parameter(_)
                | CrnError::Argument(_)
                | CrnError::Unsupported(_) => EXIT_USAGE,
                CrnError::UndefinedRatio | CrnError::Degenerate(_) | CrnError::Io(_) => EXIT_INTERNAL,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Everything needed to repeat a run bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub model: Option<String>,
    /// The command with every default filled in.
    pub command: Command,
    /// Values resolved at run time: parameters, initial state, engine, observable.
    pub resolved: Value,
    pub master_seed: u64,
    pub workers: usize,
    pub version: String,
    pub runtime_seconds: f64,
}

/// Settings shared by every subcommand.
pub struct Globals {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

pub fn slopes_path(out: &Path) -> PathBuf {
    out.with_extension("slopes.csv")
}

pub fn run(command: Command, globals: Globals) -> CliResult<()> {
    match command {
        Command::Replay(args) => {
            let text = std::fs::read_to_string(&args.manifest)?;
            let manifest: RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", args.manifest.display())))?;
            if matches!(manifest.command, Command::Replay(_)) {
                return Err(CliError::Usage("a manifest cannot record a replay".into()));
            }
            let globals = Globals {
                workers: globals.workers.or(Some(manifest.workers)),
                seed: Some(manifest.master_seed),
                out: globals.out,
            };
            run(manifest.command, globals)
        }
        Command::Check(args) => check(&args),
        command => {
            let workers = globals
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            if workers == 0 {
                return Err(CliError::Usage("--workers must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| CliError::Core(CrnError::Io(io::Error::other(e))))?;
            let seed = globals.seed.unwrap_or(0);
            let start = Instant::now();
            let (tables, resolved) = pool.install(|| execute(&command, seed))?;
            let manifest = RunManifest {
                subcommand: command.name().to_string(),
                model: model_args(&command).map(|m| m.model.clone()),
                command,
                resolved,
                master_seed: seed,
                workers,
                version: env!("CARGO_PKG_VERSION").to_string(),
                runtime_seconds: start.elapsed().as_secs_f64(),
            };
            emit(&tables, &manifest, globals.out.as_deref())
        }
    }
}

/// CSV tables of a run: the main table and, for scans, the fitted slopes.
struct Tables {
    main: Vec<u8>,
    slopes: Option<Vec<u8>>,
}

fn emit(tables: &Tables, manifest: &RunManifest, out: Option<&Path>) -> CliResult<()> {
    let manifest_json = serde_json::to_string_pretty(manifest).map_err(|e| CrnError::Io(e.into()))?;
    match out {
        Some(path) => {
            write_file(path, &tables.main)?;
            if let Some(slopes) = &tables.slopes {
                write_file(&slopes_path(path), slopes)?;
            }
            write_file(&manifest_path(path), format!("{manifest_json}\n").as_bytes())?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(&tables.main)?;
            if let Some(slopes) = &tables.slopes {
                stdout.write_all(b"\n")?;
                stdout.write_all(slopes)?;
            }
            stdout.flush()?;
            eprintln!("{manifest_json}");
        }
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

fn model_args(command: &Command) -> Option<&ModelArgs> {
    match command {
        Command::Simulate(a) => Some(&a.model),
        Command::Couple(a) => Some(&a.model),
        Command::Estimate(a) => Some(&a.model),
        Command::Scan(a) => Some(&a.model),
        Command::ExitTime(a) => Some(&a.model),
        _ => None,
    }
}

/// The model with `--theta`, `--theta-file` and `--x0` applied.
fn resolve_model(spec: &str, overrides: &Overrides) -> CliResult<Model> {
    let mut model = load_model(spec)?;
    let theta = match (&overrides.theta, &overrides.theta_file) {
        (Some(t), _) => Some(t.clone()),
        (None, Some(path)) => Some(read_theta_file(path)?),
        (None, None) => None,
    };
    if let Some(theta) = theta {
        if theta.len() != model.network.n_params() {
            return Err(CliError::Usage(format!(
                "--theta has {} values, model has {} parameters",
                theta.len(),
                model.network.n_params()
            )));
        }
        model.theta = Params::new(theta)?;
    }
    if let Some(x0) = &overrides.x0 {
        model.network.check_state(x0)?;
        model.x0 = x0.clone();
    }
    Ok(model)
}

fn read_theta_file(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(v);
    }
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{}: '{s}' is not a number", path.display())))
        })
        .collect()
}

/// Parses `"j:delta,k:delta"` into a full-length vector; indices are zero based.
pub fn parse_eps(text: &str, n_params: usize) -> CliResult<Vec<f64>> {
    let mut eps = vec![0.0; n_params];
    let mut seen = vec![false; n_params];
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (j, d) = item
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("perturbation entry '{item}' is not of the form index:delta")))?;
        let j: usize = j
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("'{j}' is not a parameter index")))?;
        let d: f64 = d
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("'{d}' is not a number")))?;
        if j >= n_params {
            return Err(CliError::Usage(format!(
                "parameter index {j} out of range; the model has {n_params} parameters (zero based)"
            )));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(CliError::Usage(format!("parameter index {j} given twice")));
        }
        eps[j] = d;
    }
    if !seen.iter().any(|s| *s) {
        return Err(CliError::Usage("empty perturbation".into()));
    }
    Ok(eps)
}

/// `"total"`, a species name, or `"A:1,B:-0.5"` weights.
pub fn parse_observable(text: &str, species: &[String]) -> CliResult<Observable<f64>> {
    let text = text.trim();
    if text == "total" {
        return Ok(Observable::TotalCount);
    }
    let index = |name: &str| {
        species
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| CliError::Usage(format!("unknown species '{name}' in observable")))
    };
    if !text.contains(':') {
        return Ok(Observable::SpeciesCount(index(text)?));
    }
    let mut w = vec![0.0; species.len()];
    for item in text.split(',').map(str::trim) {
        let (name, c) = item
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("observable entry '{item}' is not of the form species:weight")))?;
        w[index(name.trim())?] += c
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("'{c}' is not a number")))?;
    }
    Ok(Observable::LinearCombination(w))
}

fn observable_json(f: &Observable<f64>, species: &[String]) -> Value {
    match f {
        Observable::TotalCount => json!("total"),
        Observable::SpeciesCount(i) => json!(species[*i]),
        Observable::LinearCombination(w) => json!(species.iter().zip(w).collect::<Vec<_>>()),
    }
}

fn model_json(m: &Model) -> Value {
    json!({
        "name": m.name,
        "species": m.network.species(),
        "parameters": m.parameter_names,
        "theta": &*m.theta,
        "x0": m.x0,
    })
}

fn csv<F: FnOnce(&mut Vec<u8>) -> coupled_crn::Result<()>>(f: F) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn execute(command: &Command, seed: u64) -> CliResult<(Tables, Value)> {
    let single = |main| Tables { main, slopes: None };
    match command {
        Command::Simulate(a) => {
            let m = resolve_model(&a.model.model, &a.model.overrides)?;
            let engine = a.engine.unwrap_or_else(|| Engine::for_network(&m.network));
            let mut cfg = Config::new(a.t_end);
            if let Some(r) = a.exit_radius {
                cfg = cfg.with_exit_radius(r);
            }
            if let Some(n) = a.max_events {
                cfg = cfg.with_max_events(n);
            }
            if a.summary {
                cfg = cfg.summary();
            }
            let paths = simulate_ensemble(engine, &m.network, &m.theta, &m.x0, &cfg, seed, a.paths)?;
            let main = csv(|w| output::write_trajectories(w, m.network.species(), &paths))?;
            let resolved = json!({"model": model_json(&m), "engine": engine, "max_events": cfg.max_events});
            Ok((single(main), resolved))
        }
        Command::Couple(a) => {
            let m = resolve_model(&a.model.model, &a.model.overrides)?;
            let eps = parse_eps(&a.eps, m.network.n_params())?;
            let mut cfg = Config::new(a.t_end).summary();
            if let Some(r) = a.exit_radius {
                cfg = cfg.with_exit_radius(r);
            }
            if let Some(n) = a.max_events {
                cfg = cfg.with_max_events(n);
            }
            let pairs = couple_ensemble(a.method, &m.network, &m.theta, &eps, &m.x0, &cfg, seed, a.paths)?;
            let main = csv(|w| output::write_pairs(w, m.network.species(), &pairs))?;
            let resolved = json!({"model": model_json(&m), "epsilon": eps, "max_events": cfg.max_events});
            Ok((single(main), resolved))
        }
        Command::Estimate(a) => {
            let m = resolve_model(&a.model.model, &a.model.overrides)?;
            let eps = parse_eps(&a.eps, m.network.n_params())?;
            let f = parse_observable(&a.f, m.network.species())?;
            let cfg = ensemble_config(a.t_end, a.paths, seed, a.max_events);
            let mut reports = Vec::new();
            for &method in &a.methods {
                reports.push(("derivative".to_string(), fd_estimate(method, &m.network, &m.theta, &eps, &m.x0, &f, &cfg)?));
            }
            for &r in &a.r {
                reports.push((format!("gap_moment_{r}"), gap_moment(&m.network, &m.theta, &eps, r, &m.x0, &cfg)?));
            }
            let main = csv(|w| output::write_estimates(w, &reports))?;
            let resolved = json!({
                "model": model_json(&m),
                "epsilon": eps,
                "observable": observable_json(&f, m.network.species()),
                "max_events": cfg.max_events,
            });
            Ok((single(main), resolved))
        }
        Command::Scan(a) => {
            let m = resolve_model(&a.model.model, &a.model.overrides)?;
            let direction = parse_eps(&a.direction, m.network.n_params())?;
            let f = parse_observable(&a.f, m.network.species())?;
            let cfg = ensemble_config(a.t_end, a.paths, seed, a.max_events);
            let spec = ScanSpec {
                direction: direction.clone(),
                grid: a.grid.clone(),
                moments: a.r.clone(),
            };
            let reports = epsilon_scan(&a.methods, &m.network, &m.theta, &m.x0, &f, &spec, &cfg)?;
            let main = csv(|w| output::write_scan(w, &reports))?;
            let slopes = csv(|w| output::write_scan_slopes(w, &reports))?;
            let resolved = json!({
                "model": model_json(&m),
                "direction": direction,
                "observable": observable_json(&f, m.network.species()),
                "max_events": cfg.max_events,
            });
            Ok((Tables { main, slopes: Some(slopes) }, resolved))
        }
        Command::ExitTime(a) => {
            let m = resolve_model(&a.model.model, &a.model.overrides)?;
            let experiment =
                exit_time_experiment(&m.network, &m.theta, &m.x0, &a.m_grid, a.t, a.paths, seed, a.max_events)?;
            let main = csv(|w| output::write_exit_times(w, &experiment))?;
            let resolved = json!({"model": model_json(&m), "constants": experiment.constants});
            Ok((single(main), resolved))
        }
        Command::Oracle(OracleCommand::PureBirth(a)) => {
            let rows = a
                .t
                .iter()
                .map(|&t| {
                    let p = pure_birth_exit_cdf(a.kappa, a.m, t)?;
                    Ok(vec![a.kappa.to_string(), a.m.to_string(), t.to_string(), p.to_string()])
                })
                .collect::<CliResult<Vec<_>>>()?;
            let main = csv(|w| output::write_table(w, &["kappa", "M", "t", "cdf"], &rows))?;
            Ok((single(main), Value::Null))
        }
        Command::Oracle(OracleCommand::Hypoexp(a)) => {
            let rates = a.rates.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
            let rows = a
                .t
                .iter()
                .map(|&t| Ok(vec![rates.clone(), t.to_string(), hypoexponential_cdf(&a.rates, t)?.to_string()]))
                .collect::<CliResult<Vec<_>>>()?;
            let main = csv(|w| output::write_table(w, &["rates", "t", "cdf"], &rows))?;
            Ok((single(main), Value::Null))
        }
        Command::Check(_) | Command::Replay(_) => unreachable!("handled before dispatch"),
    }
}

fn ensemble_config(t_end: f64, paths: u64, seed: u64, max_events: Option<u64>) -> EnsembleConfig<f64> {
    let cfg = EnsembleConfig::new(t_end, paths, seed);
    match max_events {
        Some(n) => cfg.with_max_events(n),
        None => cfg,
    }
}

fn fmt_indices(v: &[usize]) -> String {
    v.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn check(args: &CheckArgs) -> CliResult<()> {
    let m = resolve_model(&args.model, &args.overrides)?;
    let net = &m.network;
    let profile = compute_growth_profile(net, &Bounds::point(&m.theta))?;
    let mut report = String::new();
    let line = |s: &mut String, text: String| {
        s.push_str(&text);
        s.push('\n');
    };
    line(
        &mut report,
        format!(
            "model {}: {} species, {} reactions, {} parameters",
            m.name,
            net.dim(),
            net.n_reactions(),
            net.n_params()
        ),
    );
    line(&mut report, format!("theta = {:?}", &*m.theta));
    let status = match profile.violation() {
        None => "compliant".to_string(),
        Some(reason) => format!("non-compliant: {reason}"),
    };
    line(
        &mut report,
        format!("{status}, P_set={{{}}}, p={}", fmt_indices(&profile.gain_set), profile.order),
    );
    line(
        &mut report,
        format!(
            "Cbar = {}, max gain = {}, max jump = {}",
            profile.cbar, profile.max_gain, profile.max_jump
        ),
    );
    let eps = match &args.eps {
        Some(text) => parse_eps(text, net.n_params())?,
        None => m.theta.iter().map(|v| 0.01 * v).collect(),
    };
    match coupling_ratio_bound(net, &m.theta, &eps) {
        Ok(b) => line(&mut report, format!("coupling ratio bound at eps = {eps:?}: {b}")),
        Err(CrnError::Unsupported(reason)) => line(&mut report, format!("coupling ratio bound unavailable: {reason}")),
        Err(e) => return Err(e.into()),
    }
    print!("{report}");
    Ok(())
}
