//! Command-line experiments: forward DtN solves, disk identification, ε-sweeps
//! and precomposition benches. Every run writes CSV/JSON files plus a
//! `manifest.json` echoing its configuration.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use disktomo::conformal::{theodorsen_first_order, theodorsen_solve, ConformalOptions};
use disktomo::dtn::{concentric_dtn, dtn_domain, dtn_error_row, Conductivities, DtnMeta, DtnOptions, DtnResult};
use disktomo::fit::{loglog_fit, LinearFit};
use disktomo::geometry::{symmetric_difference_area, DiskSpec, Domain, DomainSpec, PerturbedDiskSpec, Region};
use disktomo::identify::{fit_disk, recover_disk_exact, IdentificationResult, stability_fit, stability_row, FitOptions};
use disktomo::moebius::MoebiusMap;
use disktomo::oracle::{fd_solve, OracleOptions};
use disktomo::precompose::{
    composition_error, distortion_bench, doubling_constant, norm_symmetry_check, quasisymmetric_bound,
};
use disktomo::{CircleMap, Error, FourierSeries};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use output::{mode_rows, read_mode_csv, OutDir};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Parser)]
#[command(name = "disktomo", version, about = "Inclusion identification experiments on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Neumann data of a single inclusion.
    Dtn(DtnArgs),
    /// Fit a disk to Neumann data of the measurement cos θ.
    Identify(IdentifyArgs),
    /// ε-sweeps: DtN error, identification stability, Theodorsen remainder.
    Sweep(SweepArgs),
    /// Precomposition benches for a circle map.
    Precomp(PrecompArgs),
}

#[derive(Args, Serialize)]
struct Material {
    #[arg(long, default_value_t = 1.0)]
    sigma1: f64,
    #[arg(long, default_value_t = 2.0)]
    sigma2: f64,
}

impl Material {
    fn conductivities(&self) -> CliResult<Conductivities> {
        Conductivities::new(self.sigma1, self.sigma2).map_err(|e| config(e.to_string()))
    }
}

#[derive(Args)]
struct OutArg {
    /// Output directory; defaults to `$DISKTOMO_OUT/<command>` or `out/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArg {
    fn resolve(&self, command: &str) -> PathBuf {
        match (&self.out, std::env::var_os("DISKTOMO_OUT")) {
            (Some(p), _) => p.clone(),
            (None, Some(root)) => PathBuf::from(root).join(command),
            (None, None) => PathBuf::from("out").join(command),
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DtnMethodArg {
    Closed,
    Transplant,
    Oracle,
}

#[derive(Args, Serialize)]
struct DtnArgs {
    /// Inclusion spec (JSON: center, radius, delta, eps).
    spec: PathBuf,
    #[command(flatten)]
    material: Material,
    #[arg(long, default_value_t = 128)]
    n_modes: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, value_enum, default_value = "transplant")]
    method: DtnMethodArg,
    /// Dirichlet data `cos:k` or `sin:k`.
    #[arg(long, default_value = "cos:1")]
    f: String,
    /// Cells per side for the finite-difference oracle.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Also write the oracle potential as `u.bin` + `u.json`.
    #[arg(long)]
    dump: bool,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum IdentifyMethod {
    Exact,
    Fit,
}

#[derive(Args, Serialize)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["data", "synthetic"])))]
struct IdentifyArgs {
    /// Neumann coefficients as a `mode,re,im` CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Inclusion spec whose data are synthesized first.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[command(flatten)]
    material: Material,
    #[arg(long, default_value_t = 64)]
    n_modes: usize,
    #[arg(long, value_enum, default_value = "exact")]
    method: IdentifyMethod,
    /// Starting disk `cx,cy,r` for `--method fit`.
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SweepKind {
    DtnError,
    Stability,
    Theodorsen,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_enum)]
    what: SweepKind,
    /// Boundary perturbation `cos:k` or `sin:k`.
    #[arg(long, default_value = "cos:3")]
    delta_shape: String,
    #[arg(long, default_value_t = 0.4)]
    radius: f64,
    /// Comma-separated ε values.
    #[arg(long, default_value = "0.004,0.008,0.016,0.032")]
    eps_list: String,
    #[command(flatten)]
    material: Material,
    #[arg(long, default_value_t = 128)]
    n_modes: usize,
    #[arg(long, default_value_t = 1)]
    #[serde(skip)]
    jobs: usize,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

#[derive(Args, Serialize)]
struct PrecompArgs {
    /// `identity`, `rotation:a`, `sine:a` or `moebius:re,im`.
    #[arg(long, default_value = "sine:0.05")]
    map_spec: String,
    #[arg(long, default_value_t = 128)]
    n_max: i64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Truncation for the operator norms.
    #[arg(long, default_value_t = 256)]
    n_modes: usize,
    /// ε values for `‖cos∘ξ_ε - cos‖` with `ξ_ε = Id + ε sin θ`.
    #[arg(long, default_value = "0.005,0.01,0.02,0.04")]
    eps_list: String,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArg,
}

fn parse_trig(spec: &str) -> CliResult<FourierSeries> {
    let bad = || config(format!("expected cos:k or sin:k, got {spec:?}"));
    let (kind, k) = spec.split_once(':').ok_or_else(bad)?;
    let k: u32 = k.trim().parse().map_err(|_| bad())?;
    if k == 0 {
        return Err(bad());
    }
    match kind.trim() {
        "cos" => Ok(FourierSeries::cosine(k, 1.0)),
        "sin" => Ok(FourierSeries::sine(k, 1.0)),
        _ => Err(bad()),
    }
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    let values = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| config(format!("not a number: {t:?}"))))
        .collect::<CliResult<Vec<_>>>()?;
    if values.is_empty() {
        return Err(config("empty ε list"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(config("ε values must be positive"));
    }
    Ok(values)
}

fn parse_map(spec: &str) -> CliResult<CircleMap> {
    let bad = |why: String| config(format!("map spec {spec:?}: {why}"));
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(format!("not a number: {t:?}")));
    match kind.trim() {
        "identity" => Ok(CircleMap::identity()),
        "rotation" => Ok(CircleMap::rotation(num(rest)?)),
        "sine" => CircleMap::sine_perturbation(1, num(rest)?).map_err(|e| bad(e.to_string())),
        "moebius" => {
            let (re, im) = rest.split_once(',').ok_or_else(|| bad("expected moebius:re,im".into()))?;
            let m = MoebiusMap::new(Complex64::new(num(re)?, num(im)?)).map_err(|e| bad(e.to_string()))?;
            Ok(m.boundary_phase())
        }
        other => Err(bad(format!("unknown map kind {other:?}"))),
    }
}

fn read_spec(path: &Path) -> CliResult<(serde_json::Value, Domain)> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let spec: DomainSpec =
        serde_json::from_value(value.clone()).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let domain = spec.to_domain().map_err(|e| config(format!("{}: {e}", path.display())))?;
    Ok((value, domain))
}

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| config(e.to_string()))
}

#[derive(Serialize)]
struct Echo<'a, A> {
    #[serde(flatten)]
    args: &'a A,
    #[serde(skip_serializing_if = "Option::is_none")]
    inclusion: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct FitSummary {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

impl From<LinearFit> for FitSummary {
    fn from(f: LinearFit) -> Self {
        Self {
            slope: f.slope,
            intercept: f.intercept,
            r_squared: f.r_squared,
        }
    }
}

fn cmd_dtn(args: &DtnArgs) -> CliResult<()> {
    let (spec, domain) = read_spec(&args.spec)?;
    let cond = args.material.conductivities()?;
    let f = parse_trig(&args.f)?;
    if args.n_modes == 0 {
        return Err(config("--n-modes must be positive"));
    }
    let eps = domain.inclusion.eps();
    let result = match args.method {
        DtnMethodArg::Closed => {
            if eps != 0.0 {
                return Err(config(format!("closed form needs an unperturbed disk, spec has eps = {eps}")));
            }
            if domain.shift.is_identity() {
                concentric_dtn(&f.resized(args.n_modes), domain.inclusion.radius(), &cond)?
            } else {
                dtn_domain(&domain, &f, &cond, &DtnOptions::with_degree(args.n_modes))?
            }
        }
        DtnMethodArg::Transplant => {
            let opts = DtnOptions {
                tol: args.tol,
                ..DtnOptions::with_degree(args.n_modes)
            };
            dtn_domain(&domain, &f, &cond, &opts)?
        }
        DtnMethodArg::Oracle => {
            let sol = fd_solve(&domain, &cond, &f, args.grid, &OracleOptions::default())?;
            let mut dir = OutDir::create(&args.out.resolve("dtn"))?;
            if args.dump {
                sol.write_raw(&dir.path("u"))
                    .map_err(|e| config(format!("cannot write potential dump: {e}")))?;
                dir.record("u.bin");
                dir.record("u.json");
            }
            if let Some(trace) = &sol.interface_trace {
                dir.csv("trace.csv", &mode_rows(trace))?;
            }
            let result = DtnResult {
                neumann: sol.neumann.resized(args.n_modes.min(sol.neumann.degree())),
                meta: DtnMeta::oracle(sol.residual, sol.iterations),
            };
            return write_dtn(dir, args, spec, &result);
        }
    };
    let dir = OutDir::create(&args.out.resolve("dtn"))?;
    write_dtn(dir, args, spec, &result)
}

fn write_dtn(mut dir: OutDir, args: &DtnArgs, spec: serde_json::Value, result: &DtnResult) -> CliResult<()> {
    dir.csv("neumann.csv", &mode_rows(&result.neumann))?;
    dir.json("meta.json", &result.meta)?;
    dir.finish(
        "dtn",
        &Echo {
            args,
            inclusion: Some(spec),
        },
    )
}

fn parse_init(s: &str) -> CliResult<(Complex64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| config(format!("--init: not a number: {t:?}"))))
        .collect::<CliResult<_>>()?;
    match parts[..] {
        [x, y, r] => Ok((Complex64::new(x, y), r)),
        _ => Err(config("--init expects cx,cy,r")),
    }
}

fn truth_region(domain: &Domain) -> Option<Region> {
    if domain.shift.is_identity() {
        Some(Region::Perturbed(domain.inclusion.clone()))
    } else if domain.inclusion.eps() == 0.0 {
        Some(Region::Disk(domain.base_disk()))
    } else {
        None
    }
}

fn cmd_identify(args: &IdentifyArgs) -> CliResult<()> {
    let cond = args.material.conductivities()?;
    let init = args.init.as_deref().map(parse_init).transpose()?;
    let mut dir = OutDir::create(&args.out.resolve("identify"))?;
    let (g, truth, spec) = match (&args.data, &args.synthetic) {
        (Some(path), _) => (read_mode_csv(path)?, None, None),
        (None, Some(path)) => {
            let (spec, domain) = read_spec(path)?;
            let g = dtn_domain(&domain, &FourierSeries::cosine(1, 1.0), &cond, &DtnOptions::with_degree(args.n_modes))?
                .neumann;
            dir.csv("data.csv", &mode_rows(&g))?;
            (g, truth_region(&domain), Some(spec))
        }
        (None, None) => return Err(config("either --data or --synthetic is required")),
    };
    let opts = FitOptions::default();
    let outcome = match args.method {
        IdentifyMethod::Exact => recover_disk_exact(&g, &cond, &opts),
        IdentifyMethod::Fit => init
            .map(|(c, r)| DiskSpec::new(c, r))
            .transpose()
            .and_then(|start| fit_disk(&g, &cond, start.as_ref(), &opts)),
    };
    let mut result = match outcome {
        Ok(r) => r,
        Err(e) => {
            #[derive(Serialize)]
            struct Failure {
                error: String,
                trace: Vec<f64>,
                candidate: Option<IdentificationResult>,
            }
            let (trace, candidate) = match &e {
                Error::OptimizationFailure { trace, .. } => (trace.clone(), None),
                Error::NoDiskFound { candidate, .. } => {
                    let mut c = (**candidate).clone();
                    if let Some(region) = &truth {
                        c.symdiff_to_truth = symmetric_difference_area(region, &Region::Disk(c.disk)).ok();
                    }
                    (Vec::new(), Some(c))
                }
                _ => (Vec::new(), None),
            };
            dir.json(
                "failure.json",
                &Failure {
                    error: e.to_string(),
                    trace,
                    candidate,
                },
            )?;
            return Err(e.into());
        }
    };
    if let Some(region) = truth {
        result.symdiff_to_truth = symmetric_difference_area(&region, &Region::Disk(result.disk)).ok();
    }
    dir.json("result.json", &result)?;
    dir.finish("identify", &Echo { args, inclusion: spec })
}

#[derive(Serialize)]
struct TheodorsenRow {
    eps: f64,
    remainder: f64,
}

fn theodorsen_remainder(shape: &FourierSeries, radius: f64, eps: f64) -> disktomo::Result<f64> {
    let d = PerturbedDiskSpec::new(radius, shape.clone(), eps)?;
    let exact = theodorsen_solve(&d, &ConformalOptions::default())?;
    let first = theodorsen_first_order(&d)?;
    let diff = exact.displacement() - first.displacement();
    Ok(diff.real_samples(2048).iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let eps = parse_list(&args.eps_list)?;
    let shape = parse_trig(&args.delta_shape)?;
    let cond = args.material.conductivities()?;
    PerturbedDiskSpec::new(args.radius, shape.clone(), 0.0).map_err(|e| config(e.to_string()))?;
    let opts = DtnOptions::with_degree(args.n_modes);
    let pool = pool(args.jobs)?;
    let mut dir = OutDir::create(&args.out.resolve("sweep"))?;
    let f = FourierSeries::cosine(1, 1.0);
    match args.what {
        SweepKind::DtnError => {
            let base = PerturbedDiskSpec::new(args.radius, shape, 0.0)?;
            let rows = pool.install(|| {
                eps.par_iter()
                    .map(|&e| dtn_error_row(&base, e, &f, &cond, &opts))
                    .collect::<disktomo::Result<Vec<_>>>()
            })?;
            let errors: Vec<f64> = rows.iter().map(|r| r.error_hminushalf).collect();
            let ratios: Vec<f64> = rows.iter().map(|r| r.xi_w1inf / r.eps).collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            #[derive(Serialize)]
            struct Summary {
                fit: Option<FitSummary>,
                xi_over_eps_min: f64,
                xi_over_eps_max: f64,
                xi_over_eps_variation: f64,
            }
            dir.csv("sweep.csv", &rows)?;
            dir.json(
                "summary.json",
                &Summary {
                    fit: loglog_fit(&eps, &errors).ok().map(Into::into),
                    xi_over_eps_min: lo,
                    xi_over_eps_max: hi,
                    xi_over_eps_variation: (hi - lo) / lo,
                },
            )?;
        }
        SweepKind::Stability => {
            let fit_opts = FitOptions::default();
            let rows = pool.install(|| {
                eps.par_iter()
                    .map(|&e| stability_row(&shape, args.radius, e, &cond, &opts, &fit_opts))
                    .collect::<disktomo::Result<Vec<_>>>()
            })?;
            let fit = stability_fit(&rows);
            // smallest C with symdiff <= C ε^α at the fitted exponent
            let envelope = fit.map(|l| rows.iter().map(|r| r.symdiff / r.eps.powf(l.slope)).fold(0.0, f64::max));
            let mut sorted = rows.clone();
            sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
            #[derive(Serialize)]
            struct Summary {
                fit: Option<FitSummary>,
                envelope_constant: Option<f64>,
                monotone: bool,
            }
            dir.csv("stability.csv", &rows)?;
            dir.json(
                "summary.json",
                &Summary {
                    fit: fit.map(Into::into),
                    envelope_constant: envelope,
                    monotone: sorted.windows(2).all(|w| w[0].symdiff <= w[1].symdiff),
                },
            )?;
        }
        SweepKind::Theodorsen => {
            let rows = pool.install(|| {
                eps.par_iter()
                    .map(|&e| theodorsen_remainder(&shape, args.radius, e).map(|remainder| TheodorsenRow { eps: e, remainder }))
                    .collect::<disktomo::Result<Vec<_>>>()
            })?;
            let y: Vec<f64> = rows.iter().map(|r| r.remainder).collect();
            dir.csv("theodorsen.csv", &rows)?;
            dir.json("summary.json", &loglog_fit(&eps, &y).ok().map(FitSummary::from))?;
        }
    }
    dir.finish("sweep", &Echo { args, inclusion: None })
}

#[derive(Serialize)]
struct CompositionRow {
    eps: f64,
    error: f64,
    bound: f64,
}

fn cmd_precomp(args: &PrecompArgs) -> CliResult<()> {
    let xi = parse_map(&args.map_spec)?;
    let eps = parse_list(&args.eps_list)?;
    if args.n_max < 1 {
        return Err(config("--n-max must be positive"));
    }
    if !(args.delta > 0.0 && args.delta < 0.5) {
        return Err(config("--delta must lie in (0, 1/2)"));
    }
    if args.n_modes < 4 {
        return Err(config("--n-modes must be at least 4"));
    }
    let mut dir = OutDir::create(&args.out.resolve("precomp"))?;
    dir.csv("distortion.csv", &distortion_bench(&xi, args.delta, args.n_max)?)?;
    let u = FourierSeries::cosine(1, 1.0);
    let rows = eps
        .iter()
        .map(|&e| {
            let map = CircleMap::sine_perturbation(1, e)?;
            let c = composition_error(&u, &map, args.delta)?;
            Ok(CompositionRow {
                eps: e,
                error: c.error,
                bound: c.bound,
            })
        })
        .collect::<disktomo::Result<Vec<_>>>()?;
    dir.csv("composition.csv", &rows)?;
    let (norm, inverse_norm) = norm_symmetry_check(&xi, args.n_modes)?;
    let doubling = doubling_constant(&xi, 100);
    #[derive(Serialize)]
    struct Norms {
        distance_to_identity: f64,
        operator_norm: f64,
        inverse_operator_norm: f64,
        doubling_constant: f64,
        quasisymmetric_bound: f64,
        composition_fit: Option<FitSummary>,
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    dir.json(
        "norms.json",
        &Norms {
            distance_to_identity: xi.distance_to_identity(),
            operator_norm: norm,
            inverse_operator_norm: inverse_norm,
            doubling_constant: doubling,
            quasisymmetric_bound: quasisymmetric_bound(doubling),
            composition_fit: loglog_fit(&eps, &errors).ok().map(Into::into),
        },
    )?;
    dir.finish("precomp", &Echo { args, inclusion: None })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Dtn(a) => cmd_dtn(a),
        Command::Identify(a) => cmd_identify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Precomp(a) => cmd_precomp(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(msg) => eprintln!("error: {msg}"),
                CliError::Numerical(err) => {
                    eprintln!("error: {err}");
                    if let Error::OptimizationFailure { trace, .. } = err {
                        eprintln!("objective trace: {trace:?}");
                    }
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_specs() {
        assert_eq!(parse_trig("cos:3").unwrap(), FourierSeries::cosine(3, 1.0));
        assert_eq!(parse_trig("sin:2").unwrap(), FourierSeries::sine(2, 1.0));
        for bad in ["cos", "cos:0", "tan:1", "cos:x"] {
            assert!(parse_trig(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn eps_lists() {
        assert_eq!(parse_list("0.1, 0.2,").unwrap(), vec![0.1, 0.2]);
        assert!(parse_list("").is_err());
        assert!(parse_list("0.1,-0.2").is_err());
    }

    #[test]
    fn map_specs() {
        assert_eq!(parse_map("identity").unwrap().distance_to_identity(), 0.0);
        assert!((parse_map("rotation:0.1").unwrap().sup_displacement() - 0.1).abs() < 1e-12);
        assert!(parse_map("sine:0.05").unwrap().distance_to_identity() > 0.04);
        assert!(parse_map("moebius:0.3,0.1").unwrap().min_derivative() > 0.0);
        assert!(parse_map("moebius:0.3").is_err());
        assert!(parse_map("spiral:1").is_err());
    }

    #[test]
    fn init_parsing() {
        assert_eq!(parse_init("0.1,-0.2,0.3").unwrap(), (Complex64::new(0.1, -0.2), 0.3));
        assert!(parse_init("0.1,0.2").is_err());
    }
}
