//! Batch driver for the Liouville pipeline: harmonic extension, critical
//! points and degrees, the reduced solve, and soliton post-processing.
//!
//! Configuration is a flat `key=value` file overridden by CLI flags; the
//! effective configuration is embedded in every JSON output. Exit codes:
//! 0 success, 2 validation failure, 3 numerical failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use liouville::bubbles::BubbleParams;
use liouville::conformal::HalfPlanePoint;
use liouville::critical;
use liouville::extension::ExtensionEvaluator;
use liouville::halflap::{self, QuadSpec, TailClass};
use liouville::profiles::{self, KappaProfile};
use liouville::reduction::{self, SolveReport, SolverConfig};
use liouville::soliton;

#[derive(Parser)]
#[command(name = "liouville", about = "nonlocal Liouville equation toolkit", version)]
struct Cli {
    /// Flat key=value config file; CLI flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Catalog key (k1 | k2 | kNa:N=..,a=.. | disk-poly:g1|g2|g3 | const:c | csv:path)
    #[arg(long)]
    profile: Option<String>,
    /// Weight exponent sigma in (0,1)
    #[arg(long)]
    sigma: Option<f64>,
    /// Solver grid nodes
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Grid half-width
    #[arg(long)]
    xmax: Option<f64>,
    /// Contour / search-box scale
    #[arg(long = "R")]
    r: Option<f64>,
    /// Output directory for CSV/JSON dumps
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the built-in profile catalog.
    Catalog,
    /// Evaluate the harmonic extension (field dump, point values, asymptotics).
    Extend {
        #[command(flatten)]
        common: Common,
        /// Evaluate at a single point "xi,mu"
        #[arg(long)]
        at: Option<String>,
        /// Run the small-mu asymptotic check
        #[arg(long)]
        asymptotic: bool,
        /// Boundary point for the asymptotic check
        #[arg(long)]
        xi: Option<f64>,
    },
    /// Locate and classify the critical points of the extension.
    Critical {
        #[command(flatten)]
        common: Common,
    },
    /// Brouwer degree by winding number plus the count formula.
    Degree {
        #[command(flatten)]
        common: Common,
    },
    /// Lyapunov-Schmidt solve for one or more epsilon values.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Comma-separated epsilon list
        #[arg(long)]
        eps: Option<String>,
        /// Seed "xi,mu" (default: every certified critical point)
        #[arg(long = "seed-point")]
        seed_point: Option<String>,
        /// Fit the log-log slope of sup|phi| against eps
        #[arg(long)]
        scaling: bool,
    },
    /// Assemble the Calogero-Moser soliton from a solve report.
    Soliton {
        #[command(flatten)]
        common: Common,
        /// Path to a solve report JSON
        #[arg(long)]
        from: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &anyhow::Error) -> u8 {
    use liouville::Error::*;
    if let Some(le) = e.downcast_ref::<liouville::Error>() {
        return match le {
            NonFiniteEval { .. } | UnknownProfile(_) | ProfileData(_) | Domain(_)
            | GridParam(_) | OpenContour | NotApplicable(_) | MissingTail | Io(_) | Json(_) => 2,
            _ => 3,
        };
    }
    2
}

struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(p) = path {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| anyhow!("bad config line `{line}` (want key=value)"))?;
                file.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self { file })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, flag: Option<T>, default: T) -> anyhow::Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| anyhow!("config key `{key}` = `{raw}`: {e}")),
            None => Ok(default),
        }
    }

    fn get_opt_string(&self, key: &str, flag: Option<String>) -> Option<String> {
        flag.or_else(|| self.file.get(key).cloned())
    }
}

fn load_profile(key: &str) -> anyhow::Result<KappaProfile> {
    if let Some(path) = key.strip_prefix("csv:") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        return Ok(profiles::from_csv(&text)?);
    }
    Ok(profiles::builtin(key)?)
}

fn parse_point(s: &str) -> anyhow::Result<HalfPlanePoint> {
    let (a, b) = s.split_once(',').ok_or_else(|| anyhow!("expected `xi,mu`, got `{s}`"))?;
    Ok(HalfPlanePoint::new(a.trim().parse()?, b.trim().parse()?))
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn effective_config(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn write_out(dir: &Path, name: &str, content: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Catalog => {
            for (key, desc) in profiles::catalog() {
                println!("{key:28} {desc}");
            }
            Ok(())
        }
        Cmd::Extend { common, at, asymptotic, xi } => cmd_extend(&settings, common, at, asymptotic, xi),
        Cmd::Critical { common } => cmd_critical(&settings, common),
        Cmd::Degree { common } => cmd_degree(&settings, common),
        Cmd::Solve { common, eps, seed_point, scaling } => {
            cmd_solve(&settings, common, eps, seed_point, scaling)
        }
        Cmd::Soliton { common, from } => cmd_soliton(&settings, common, from),
    }
}

fn cmd_extend(
    settings: &Settings,
    common: Common,
    at: Option<String>,
    asymptotic: bool,
    xi: Option<f64>,
) -> anyhow::Result<()> {
    let key = settings
        .get_opt_string("profile", common.profile)
        .ok_or_else(|| anyhow!("--profile is required"))?;
    let profile = load_profile(&key)?;
    let ev = ExtensionEvaluator::new(profile);
    if let Some(s) = at {
        let p = parse_point(&s)?;
        let value = ev.gamma(p)?;
        if p.mu > 0.0 {
            let g = ev.grad_gamma(p)?;
            println!("Gamma({}, {}) = {:.12}", p.xi, p.mu, value);
            println!("grad Gamma = ({:.12e}, {:.12e})", g[0], g[1]);
        } else {
            println!("Gamma({}, 0) = kappa({}) = {:.12}", p.xi, p.xi, value);
        }
        return Ok(());
    }
    if asymptotic {
        let x0 = settings.get("xi", xi, 0.0)?;
        let mus = [1e-1, 3.16e-2, 1e-2, 3.16e-3, 1e-3];
        let rep = ev.asymptotic_check(x0, &mus)?;
        println!("{}", serde_json::to_string_pretty(&rep)?);
        return Ok(());
    }
    // field dump over a box
    let r = settings.get("R", common.r, 4.0)?;
    let out = common
        .out
        .or_else(|| settings.file.get("out").map(PathBuf::from))
        .ok_or_else(|| anyhow!("--out or --at or --asymptotic is required for extend"))?;
    let mut csv = String::from("xi,mu,Gamma,dGamma_dxi,dGamma_dmu\n");
    for i in 0..81 {
        let x = -r + 2.0 * r * i as f64 / 80.0;
        for j in 0..41 {
            let mu = (1.0 / r) * (r * r).powf(j as f64 / 40.0);
            let p = HalfPlanePoint::new(x, mu);
            let v = ev.gamma(p)?;
            let g = ev.grad_gamma(p)?;
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(x),
                fmt17(mu),
                fmt17(v),
                fmt17(g[0]),
                fmt17(g[1])
            ));
        }
    }
    let path = write_out(&out, "extend.csv", &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_critical(settings: &Settings, common: Common) -> anyhow::Result<()> {
    let key = settings
        .get_opt_string("profile", common.profile)
        .ok_or_else(|| anyhow!("--profile is required"))?;
    let profile = load_profile(&key)?;
    let r = settings.get("R", common.r, 8.0)?;
    let ev = ExtensionEvaluator::new(profile);
    let points = critical::multistart_search(&ev, r, 40)?;
    let doc = serde_json::json!({
        "config": effective_config(&[("profile", key.clone()), ("R", r.to_string())]),
        "points": points,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    if let Some(dir) = common.out {
        let path = write_out(&dir, "critical.json", &text)?;
        println!("wrote {}", path.display());
    } else {
        println!("{text}");
    }
    Ok(())
}

fn cmd_degree(settings: &Settings, common: Common) -> anyhow::Result<()> {
    let key = settings
        .get_opt_string("profile", common.profile)
        .ok_or_else(|| anyhow!("--profile is required"))?;
    let profile = load_profile(&key)?;
    let r = settings.get("R", common.r, 8.0)?;
    let ev = ExtensionEvaluator::new(profile);
    let report = critical::degree_auto(&ev, r)?;
    let count = critical::exact_count_check(&report);
    let doc = serde_json::json!({
        "config": effective_config(&[("profile", key.clone()), ("R", r.to_string())]),
        "report": report,
        "exact_count": count,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    if let Some(dir) = common.out {
        let path = write_out(&dir, "degree.json", &text)?;
        println!("wrote {}", path.display());
    } else {
        println!("{text}");
    }
    Ok(())
}

fn solver_config(settings: &Settings, common: &Common) -> anyhow::Result<SolverConfig> {
    let defaults = SolverConfig::default();
    Ok(SolverConfig {
        sigma: settings.get("sigma", common.sigma, defaults.sigma)?,
        x_max: settings.get("xmax", common.xmax, defaults.x_max)?,
        n: settings.get("grid-n", common.grid_n, defaults.n)?,
        ..defaults
    })
}

fn cmd_solve(
    settings: &Settings,
    common: Common,
    eps: Option<String>,
    seed_point: Option<String>,
    scaling: bool,
) -> anyhow::Result<()> {
    let key = settings
        .get_opt_string("profile", common.profile.clone())
        .ok_or_else(|| anyhow!("--profile is required"))?;
    let profile = load_profile(&key)?;
    let cfg = solver_config(settings, &common)?;
    let eps_text = settings
        .get_opt_string("eps", eps)
        .ok_or_else(|| anyhow!("--eps is required (comma-separated list)"))?;
    let eps_list: Vec<f64> = eps_text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad eps `{s}`: {e}")))
        .collect::<anyhow::Result<_>>()?;

    let ev = ExtensionEvaluator::new(profile.clone());
    let seeds: Vec<HalfPlanePoint> = match settings.get_opt_string("seed-point", seed_point) {
        Some(s) => vec![parse_point(&s)?],
        None => {
            let r = settings.get("R", common.r, 8.0)?;
            let report = critical::degree_auto(&ev, r)?;
            if report.critical_points.is_empty() {
                return Err(anyhow!(
                    "no non-degenerate critical points found (degree {}, formula rhs {})",
                    report.degree,
                    report.formula_rhs
                ));
            }
            report.critical_points.iter().map(|c| c.location()).collect()
        }
    };

    let mut reports: Vec<SolveReport> = Vec::new();
    for (si, seed) in seeds.iter().enumerate() {
        for &e in &eps_list {
            let mut rep = reduction::outer_solve(&ev, e, *seed, &cfg)?;
            rep.profile_key = Some(key.clone());
            println!(
                "seed {si} ({:+.4}, {:.4})  eps {:>9.3e}:  (xi,mu) = ({:+.6}, {:.6})  |d| = {:.2e}  phi_sup = {:.3e}  residual = {:.3e}  certified = {}",
                seed.xi,
                seed.mu,
                e,
                rep.xi_eps,
                rep.mu_eps,
                rep.d0.abs().max(rep.d1.abs()),
                rep.phi_sup,
                rep.pde_residual,
                rep.certified
            );
            reports.push(rep);
        }
    }

    if scaling {
        // slope of log sup|phi| against log eps, per seed
        for (si, _) in seeds.iter().enumerate() {
            let pts: Vec<(f64, f64)> = reports
                .iter()
                .filter(|r| r.profile_key.as_deref() == Some(key.as_str()))
                .skip(si * eps_list.len())
                .take(eps_list.len())
                .map(|r| (r.eps.ln(), r.phi_sup.ln()))
                .collect();
            if pts.len() >= 2 {
                let n = pts.len() as f64;
                let (sx, sy): (f64, f64) =
                    pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
                let (sxx, sxy): (f64, f64) =
                    pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + x * y));
                let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                println!("seed {si}: phi-scaling slope = {slope:.4}");
            }
        }
    }

    if let Some(dir) = common.out {
        for (i, rep) in reports.iter().enumerate() {
            let doc = serde_json::json!({
                "config": effective_config(&[
                    ("profile", key.clone()),
                    ("sigma", cfg.sigma.to_string()),
                    ("grid-n", cfg.n.to_string()),
                    ("xmax", cfg.x_max.to_string()),
                    ("eps", rep.eps.to_string()),
                ]),
                "report": rep,
            });
            write_out(&dir, &format!("solve_{i}.json"), &serde_json::to_string_pretty(&doc)?)?;
            write_out(&dir, &format!("solve_{i}.csv"), &solution_csv(rep, &profile)?)?;
        }
        println!("wrote {} report(s) to {}", reports.len(), dir.display());
    }
    Ok(())
}

/// CSV dump (x, phi, u, residual) for a solve report.
fn solution_csv(rep: &SolveReport, profile: &KappaProfile) -> anyhow::Result<String> {
    let params = BubbleParams::new(rep.mu_eps, rep.xi_eps)?;
    let phi = rep.phi_field()?;
    let phi_eval = phi.evaluator()?;
    let mut csv = String::from("x,phi,u,residual\n");
    for (&x, &p) in rep.nodes.iter().zip(&rep.phi) {
        let quad = QuadSpec { tol: 1e-9, scale: phi.grid.local_scale(x).min(1.0), probe: false };
        let hl = halflap::half_laplacian_point(&*phi_eval, x, &quad, TailClass::Algebraic {
            limit: 0.0,
        })?;
        let u = params.u(x) + p;
        let r = params.exp_u(x) + hl - (1.0 + rep.eps * profile.eval(x)) * u.exp();
        csv.push_str(&format!("{},{},{},{}\n", fmt17(x), fmt17(p), fmt17(u), fmt17(r)));
    }
    Ok(csv)
}

fn cmd_soliton(settings: &Settings, common: Common, from: PathBuf) -> anyhow::Result<()> {
    let text = fs::read_to_string(&from).with_context(|| format!("reading {}", from.display()))?;
    // accept either a bare report or the CLI wrapper with a config echo
    let rep: SolveReport = match serde_json::from_str::<serde_json::Value>(&text)? {
        serde_json::Value::Object(map) if map.contains_key("report") => {
            serde_json::from_value(map["report"].clone())?
        }
        v => serde_json::from_value(v)?,
    };
    let key = settings
        .get_opt_string("profile", common.profile)
        .or_else(|| rep.profile_key.clone())
        .ok_or_else(|| anyhow!("profile key missing: pass --profile or use a report with one"))?;
    let profile = load_profile(&key)?;
    let sol = soliton::assemble_soliton(&rep, &profile)?;
    let poh = soliton::pohozaev_check(&rep, &profile)?;
    let doc = serde_json::json!({
        "config": effective_config(&[("profile", key.clone()), ("from", from.display().to_string())]),
        "lambda": sol.lambda,
        "identities": poh,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    if let Some(dir) = common.out {
        let mut csv = String::from("x,psi,V\n");
        for ((x, psi), v) in sol.nodes.iter().zip(&sol.psi).zip(&sol.potential) {
            csv.push_str(&format!("{},{},{}\n", fmt17(*x), fmt17(*psi), fmt17(*v)));
        }
        let path = write_out(&dir, "soliton.csv", &csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
