use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lplimit::confidence::{confidence_set, map_region, RegionJson};
use lplimit::experiments::{build_min_cost_flow, build_ot_2x2, run_coverage, run_limit_comparison, BSamplerJson, ConfigJson, ExperimentConfig};
use lplimit::geometry::{grid_hausdorff, hausdorff};
use lplimit::limits::{aux_lp_directional, distance_statistic, sample_unique_limit, DirectionalLimit, GSampler};
use lplimit::lp_core::{LpJson, Tolerances};
use lplimit::rng::stream;
use lplimit::stability::{find_slater_point, stability_report};
use lplimit::{optimal_vertices, solve, Grid, Lp, Mat, Poly};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

/// Limit laws and confidence sets for linear programs with a random right-hand side.
#[derive(Debug, Parser)]
#[command(name = "lplimit", version)]
struct Cli {
    /// Worker threads for replicate and draw loops (output does not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for the numerical tolerances; unset flags keep the defaults.
#[derive(Debug, Args)]
struct TolArgs {
    /// Relative pivot threshold (default 1e-10).
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    /// Feasibility tolerance on basic coordinates (default 1e-9).
    #[arg(long, global = true)]
    feas_tol: Option<f64>,
    /// Relative objective tolerance for optimal-vertex ties (default 1e-8).
    #[arg(long, global = true)]
    obj_tol: Option<f64>,
    /// Vertex merge distance (default 1e-8).
    #[arg(long, global = true)]
    dedup_tol: Option<f64>,
    /// Relative KKT residual tolerance (default 1e-7).
    #[arg(long, global = true)]
    kkt_tol: Option<f64>,
    /// Support-function tie threshold (default 1e-9).
    #[arg(long, global = true)]
    tie_tol: Option<f64>,
    /// Min-norm-point duality-gap target (default 1e-9).
    #[arg(long, global = true)]
    wolfe_tol: Option<f64>,
    /// Cap on subsets visited by any enumeration (default 1000000).
    #[arg(long, global = true)]
    enum_cap: Option<u128>,
}

impl TolArgs {
    fn tolerances(&self) -> Tolerances<f64> {
        let mut t = Tolerances::default();
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut t.rank_rel, self.rank_tol);
        set(&mut t.feas, self.feas_tol);
        set(&mut t.obj_rel, self.obj_tol);
        set(&mut t.dedup, self.dedup_tol);
        set(&mut t.kkt_rel, self.kkt_tol);
        set(&mut t.tie, self.tie_tol);
        set(&mut t.wolfe, self.wolfe_tol);
        if let Some(cap) = self.enum_cap {
            t.enum_cap = cap;
        }
        t
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a standard-form program and print x̂, the basis and the objective as JSON.
    Solve {
        /// Problem file `{"A": [[..]], "b": [..], "c": [..]}`.
        #[arg(long)]
        lp: PathBuf,
        /// Write the parsed program back out in canonical JSON.
        #[arg(long)]
        emit_lp: Option<PathBuf>,
    },
    /// Print the stability radii and Lipschitz constants as JSON.
    Stability {
        /// Problem file.
        #[arg(long)]
        lp: PathBuf,
        /// JSON array with a strictly positive feasible point; found by an LP when omitted.
        #[arg(long)]
        slater: Option<PathBuf>,
    },
    /// Draw from the limit law and write per-draw and per-direction CSV rows.
    LimitSample {
        /// Problem file at the true right-hand side.
        #[arg(long)]
        lp: PathBuf,
        /// Sampler file: `{"kind":"gaussian","cov":[[..]]}` or `{"kind":"multinomial","p":[..]}`.
        #[arg(long)]
        sampler: PathBuf,
        /// Number of limit draws.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Random seed (decimal or 0x-hex).
        #[arg(long, default_value = "0x5EED", value_parser = parse_seed)]
        seed: u64,
        /// Directions on the unit sphere for support values; 0 skips them.
        #[arg(long, default_value_t = 0)]
        grid_resolution: usize,
        /// Per-draw CSV (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-(draw, direction) support-value CSV.
        #[arg(long)]
        support_out: Option<PathBuf>,
    },
    /// Build the confidence set at the program's right-hand side and print coordinate intervals as CSV.
    Confidence {
        /// Program whose `b` is the estimate, or the truth when `--b-sampler` is given.
        #[arg(long)]
        lp: PathBuf,
        /// Region file, e.g. `{"kind":"ellipsoid","sigma":[[..]],"level":0.95}`.
        #[arg(long)]
        region: PathBuf,
        /// Sample size; the rate is `n^rate_exponent`.
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.5)]
        rate_exponent: f64,
        /// Draw the estimate from this sampler around `b` instead of using `b` directly.
        #[arg(long)]
        b_sampler: Option<PathBuf>,
        /// Random seed for `--b-sampler` (decimal or 0x-hex).
        #[arg(long, default_value = "0x5EED", value_parser = parse_seed)]
        seed: u64,
        /// Interval CSV (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Basis, inverse and quadratic form of the mapped region as JSON.
        #[arg(long)]
        form_out: Option<PathBuf>,
    },
    /// Monte Carlo coverage of the confidence sets.
    Coverage {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Replicates per sample size.
        #[arg(long)]
        replicates: Option<usize>,
        /// Comma-separated sample sizes replacing the experiment's list.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
        /// Coverage CSV (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-replicate CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Compare the finite-sample statistic with draws from its limit law.
    LimitCompare {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Sample size of the finite-sample statistic.
        #[arg(long)]
        n: u64,
        /// Draws from each of the two laws.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Grid size for the support-function supremum when the target is not unique.
        #[arg(long, default_value_t = 256)]
        grid_resolution: usize,
        /// Both samples as CSV; the summary goes to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hausdorff distance between two vertex lists.
    Hausdorff {
        /// JSON array of vertices.
        #[arg(long)]
        p1: PathBuf,
        /// JSON array of vertices of the same dimension.
        #[arg(long)]
        p2: PathBuf,
        /// Also report the support-function supremum over a grid of this size.
        #[arg(long)]
        grid_resolution: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Ot2x2,
    Mcf,
    Custom,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Built-in instance, or `custom` with a configuration path.
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// Configuration file for `--experiment custom`.
    config: Option<PathBuf>,
    /// Random seed (decimal or 0x-hex); defaults to the experiment's own, 0x5EED unless configured.
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
}

impl ExperimentArgs {
    fn load(&self, tol: Tolerances<f64>) -> Result<ExperimentConfig> {
        let mut config = match (self.experiment, &self.config) {
            (Experiment::Ot2x2, None) => build_ot_2x2()?,
            (Experiment::Mcf, None) => build_min_cost_flow()?,
            (Experiment::Custom, Some(path)) => read_json::<ConfigJson>(path)?.to_config()?,
            (Experiment::Custom, None) => bail!("--experiment custom needs a configuration path"),
            (_, Some(_)) => bail!("a configuration path is only accepted with --experiment custom"),
        };
        config.lp.set_tolerances(tol);
        if let Some(seed) = self.seed {
            config = config.with_seed(seed);
        }
        Ok(config)
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SamplerJson {
    Gaussian { cov: Vec<Vec<f64>> },
    /// Centered multinomial fluctuations on the first `p.len()` rows.
    Multinomial { p: Vec<f64> },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_lp(path: &Path, tol: Tolerances<f64>) -> Result<Lp> {
    let raw: LpJson = read_json(path)?;
    let mut lp: Lp = raw.to_lp().with_context(|| format!("building the program in {}", path.display()))?;
    lp.set_tolerances(tol);
    Ok(lp)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn cmd_solve(lp_path: &Path, emit_lp: Option<&Path>, tol: Tolerances<f64>) -> Result<()> {
    let lp = read_lp(lp_path, tol)?;
    if let Some(p) = emit_lp {
        emit(Some(p), &(lp.to_json() + "\n"))?;
    }
    let r = solve(&lp)?;
    let out = json!({
        "status": "optimal",
        "x_hat": r.x_hat,
        "basis": r.basis.indices(),
        "objective": r.objective,
        "dual": r.dual,
    });
    emit(None, &pretty(&out))
}

fn cmd_stability(lp_path: &Path, slater: Option<&Path>, tol: Tolerances<f64>) -> Result<()> {
    let lp = read_lp(lp_path, tol)?;
    let point = match slater {
        Some(p) => read_json::<Vec<f64>>(p)?,
        None => find_slater_point(&lp)?,
    };
    let report = stability_report(&lp, &point)?;
    emit(None, &pretty(&serde_json::to_value(report.to_json())?))
}

struct LimitSampleArgs<'a> {
    lp: &'a Path,
    sampler: &'a Path,
    draws: usize,
    seed: u64,
    grid_resolution: usize,
    out: Option<&'a Path>,
    support_out: Option<&'a Path>,
}

fn cmd_limit_sample(a: LimitSampleArgs, tol: Tolerances<f64>) -> Result<()> {
    let lp = read_lp(a.lp, tol)?;
    let sampler = match read_json::<SamplerJson>(a.sampler)? {
        SamplerJson::Gaussian { cov } => GSampler::gaussian(&Mat::from_rows(&cov)?, a.seed)?,
        SamplerJson::Multinomial { p } => GSampler::multinomial_clt(p, lp.k(), a.seed)?,
    };
    if sampler.dim() != lp.k() {
        bail!("sampler has dimension {} but the program has {} rows", sampler.dim(), lp.k());
    }
    let targets = optimal_vertices(&lp)?.polytope;
    let k = lp.k();

    // Per draw: g, the auxiliary optimal value, and the distance (unique
    // target) or grid-sup |Ĥ_g| (otherwise) statistic.
    let directional = if a.grid_resolution > 0 || targets.len() > 1 {
        Some(DirectionalLimit::with_targets(&lp, targets.clone(), Grid::new(lp.m(), a.grid_resolution.max(64))?)?)
    } else {
        None
    };
    let rows: Vec<(Vec<f64>, f64, f64, Vec<Option<f64>>)> = if targets.len() == 1 {
        let samples = sample_unique_limit(&lp, &targets.vertices()[0], &sampler, a.draws)?;
        samples
            .par_iter()
            .map(|s| {
                let support = match &directional {
                    Some(d) if a.grid_resolution > 0 => d.evaluate(&s.g)?,
                    _ => Vec::new(),
                };
                Ok((s.g.clone(), s.objective, distance_statistic(s)?, support))
            })
            .collect::<lplimit::Result<_>>()?
    } else {
        let d = directional.as_ref().expect("built for non-unique targets");
        let v0 = &targets.vertices()[0];
        (0..a.draws as u64)
            .into_par_iter()
            .map(|i| {
                let g = sampler.draw(i);
                let (_, obj) = aux_lp_directional(&lp, v0, &g)?.solve()?;
                let support = d.evaluate(&g)?;
                let stat = support.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
                Ok((g, obj, stat, if a.grid_resolution > 0 { support } else { Vec::new() }))
            })
            .collect::<lplimit::Result<_>>()?
    };

    let mut csv = String::from("draw,");
    for i in 0..k {
        write!(csv, "g{i},").unwrap();
    }
    csv.push_str("objective,statistic\n");
    for (i, (g, obj, stat, _)) in rows.iter().enumerate() {
        write!(csv, "{i},").unwrap();
        for v in g {
            write!(csv, "{v},").unwrap();
        }
        writeln!(csv, "{obj},{stat}").unwrap();
    }
    emit(a.out, &csv)?;

    if let (Some(path), Some(d)) = (a.support_out, &directional) {
        if a.grid_resolution == 0 {
            bail!("--support-out needs --grid-resolution > 0");
        }
        let mut csv = String::from("draw,direction,");
        for j in 0..lp.m() {
            write!(csv, "alpha{j},").unwrap();
        }
        csv.push_str("value\n");
        for (i, (_, _, _, support)) in rows.iter().enumerate() {
            for (j, (alpha, v)) in d.grid().directions().iter().zip(support).enumerate() {
                let Some(v) = v else { continue };
                write!(csv, "{i},{j},").unwrap();
                for x in alpha.as_slice() {
                    write!(csv, "{x},").unwrap();
                }
                writeln!(csv, "{v}").unwrap();
            }
        }
        emit(Some(path), &csv)?;
        eprintln!("excluded direction fraction: {}", d.excluded_fraction());
    }
    Ok(())
}

struct ConfidenceArgs<'a> {
    lp: &'a Path,
    region: &'a Path,
    n: u64,
    rate_exponent: f64,
    b_sampler: Option<&'a Path>,
    seed: u64,
    out: Option<&'a Path>,
    form_out: Option<&'a Path>,
}

fn cmd_confidence(a: ConfidenceArgs, tol: Tolerances<f64>) -> Result<()> {
    if a.n == 0 {
        bail!("--n must be positive");
    }
    let lp = read_lp(a.lp, tol)?;
    let region_json: RegionJson = read_json(a.region)?;
    let region = region_json.to_region()?;
    let rate = (a.n as f64).powf(a.rate_exponent);
    let estimate = match a.b_sampler {
        Some(path) => {
            let config = ConfigJson {
                name: "confidence".into(),
                lp: LpJson::from_lp(&lp),
                rate_exponent: a.rate_exponent,
                b_sampler: read_json::<BSamplerJson>(path)?,
                region: region_json,
                n_values: vec![a.n],
                replicates: 1,
                seed: a.seed,
            }
            .to_config()?;
            let b = config.sample_b(a.n, &mut stream(a.seed, &[a.n, 0]))?;
            lp.with_rhs(b)?
        }
        None => lp,
    };
    let r = solve(&estimate)?;
    let mapped = map_region(&estimate, &r.basis, &region)?;
    let form = mapped.quadratic_form();
    let cs = confidence_set(&r, rate, mapped)?;

    let mut csv = String::from("coordinate,estimate,lower,upper\n");
    for (i, (lo, hi)) in cs.intervals().into_iter().enumerate() {
        writeln!(csv, "{i},{},{lo},{hi}", cs.center[i]).unwrap();
    }
    emit(a.out, &csv)?;
    if let Some(path) = a.form_out {
        let out = json!({
            "b": estimate.b(),
            "rate": rate,
            "center": cs.center,
            "basis": cs.mapped.basis.indices(),
            "basis_inverse": cs.mapped.a_inv.to_rows(),
            "quadratic_form": form.map(|m| m.to_rows()),
        });
        emit(Some(path), &pretty(&out))?;
    }
    Ok(())
}

fn cmd_coverage(e: &ExperimentArgs, replicates: Option<usize>, n: Option<Vec<u64>>, out: Option<&Path>, log: Option<&Path>, tol: Tolerances<f64>) -> Result<()> {
    let mut config = e.load(tol)?;
    if let Some(r) = replicates {
        config.replicates = r;
    }
    if let Some(n) = n {
        config.n_values = n;
    }
    let report = run_coverage(&config)?;
    emit(out, &report.to_csv())?;
    if let Some(p) = log {
        emit(Some(p), &report.log_csv())?;
    }
    Ok(())
}

fn cmd_limit_compare(e: &ExperimentArgs, n: u64, draws: usize, grid_resolution: usize, out: Option<&Path>, tol: Tolerances<f64>) -> Result<()> {
    let config = e.load(tol)?;
    let r = run_limit_comparison(&config, n, draws, grid_resolution)?;
    if let Some(p) = out {
        let mut csv = String::from("draw,finite,limit\n");
        for (i, (f, l)) in r.finite.iter().zip(&r.limit).enumerate() {
            writeln!(csv, "{i},{f},{l}").unwrap();
        }
        emit(Some(p), &csv)?;
    }
    let summary = json!({
        "experiment": config.name,
        "n": n,
        "draws": draws,
        "statistic": r.statistic,
        "ks_distance": r.ks_distance,
    });
    emit(None, &pretty(&summary))
}

fn cmd_hausdorff(p1: &Path, p2: &Path, grid_resolution: Option<usize>, tol: Tolerances<f64>) -> Result<()> {
    let a = Poly::new(read_json(p1)?, tol.dedup)?;
    let b = Poly::new(read_json(p2)?, tol.dedup)?;
    if a.dim() != b.dim() {
        bail!("vertex lists live in dimensions {} and {}", a.dim(), b.dim());
    }
    let mut out = json!({ "hausdorff": hausdorff(&a, &b, tol.wolfe)? });
    if let Some(res) = grid_resolution {
        out["grid"] = json!(grid_hausdorff(&a, &b, &Grid::new(a.dim(), res)?)?);
    }
    emit(None, &pretty(&out))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let tol = cli.tol.tolerances();
    match &cli.command {
        Command::Solve { lp, emit_lp } => cmd_solve(lp, emit_lp.as_deref(), tol),
        Command::Stability { lp, slater } => cmd_stability(lp, slater.as_deref(), tol),
        Command::LimitSample { lp, sampler, draws, seed, grid_resolution, out, support_out } => cmd_limit_sample(
            LimitSampleArgs {
                lp,
                sampler,
                draws: *draws,
                seed: *seed,
                grid_resolution: *grid_resolution,
                out: out.as_deref(),
                support_out: support_out.as_deref(),
            },
            tol,
        ),
        Command::Confidence { lp, region, n, rate_exponent, b_sampler, seed, out, form_out } => cmd_confidence(
            ConfidenceArgs {
                lp,
                region,
                n: *n,
                rate_exponent: *rate_exponent,
                b_sampler: b_sampler.as_deref(),
                seed: *seed,
                out: out.as_deref(),
                form_out: form_out.as_deref(),
            },
            tol,
        ),
        Command::Coverage { experiment, replicates, n, out, log } => cmd_coverage(experiment, *replicates, n.clone(), out.as_deref(), log.as_deref(), tol),
        Command::LimitCompare { experiment, n, draws, grid_resolution, out } => cmd_limit_compare(experiment, *n, *draws, *grid_resolution, out.as_deref(), tol),
        Command::Hausdorff { p1, p2, grid_resolution } => cmd_hausdorff(p1, p2, *grid_resolution, tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Solver outcomes get 1; bad input and everything else gets 2.
            let status = e.chain().find_map(|c| c.downcast_ref::<lplimit::Error>()).and_then(|e| e.lp_status());
            ExitCode::from(if status.is_some() { 1 } else { 2 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lplimit::rng::DEFAULT_SEED;

    #[test]
    fn seeds_parse_in_hex_and_decimal() {
        assert_eq!(parse_seed("0x5EED").unwrap(), DEFAULT_SEED);
        assert_eq!(parse_seed("24301").unwrap(), DEFAULT_SEED);
        assert!(parse_seed("seed").is_err());
    }

    #[test]
    fn flags_are_checked() {
        Cli::command_for_test().debug_assert();
        assert!(Cli::try_parse_from(["lplimit", "solve", "--lp", "a.json", "--bogus"]).is_err());
    }

    impl Cli {
        fn command_for_test() -> clap::Command {
            <Self as clap::CommandFactory>::command()
        }
    }
}
