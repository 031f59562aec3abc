use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use collarkit::acceptance::{run_all, AcceptanceOptions};
use collarkit::collar::{collar_width, collar_width_by_quadrature, dz2_l1_by_quadrature, dz2_norms, half_extent, rho};
use collarkit::config::{parse_grid, RunConfig};
use collarkit::dualbasis::{dual_sweep, epsilon_report, model_at, tilde_basis, DualBasisSet, DUAL_QUANTITIES};
use collarkit::hexagon::{
    fd_rates, q_distance, q_distance_extended, rates_csv, solve_hexagon, DistanceForm, HexQuantity, Side,
};
use collarkit::modelspace::build_generators;
use collarkit::qdiff::LinfGrid;
use collarkit::quadrature::QuadratureSpec;
use collarkit::verify::{config_hash, fit_rate, write_atomic, RateFit};
use collarkit::{Error, Result};

// Like println!, but a closed stdout (e.g. piped into head) is not fatal.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Collar geometry, hexagon rates and dual-basis verification.
#[derive(Debug, Parser)]
#[command(name = "collarkit", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration (see docs/schema.md).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", env = "COLLARKIT_OUT_DIR", default_value = "collarkit-out")]
    out: PathBuf,
    /// Seed for every pseudo-random draw; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated ℓ grid, e.g. "0.4,0.2,0.1"; overrides the configuration.
    #[arg(long, global = true, value_name = "a,b,c")]
    grid: Option<String>,
    /// Multiplies every acceptance tolerance.
    #[arg(long, global = true, value_name = "X")]
    tolerance_scale: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed forms and quadrature residuals of the standard collar per ℓ.
    CollarTable,
    /// Difference derivatives and fitted slopes of the hexagon quantities.
    HexagonRates,
    /// Dual bases of the model space: residuals, asymptotics, ε report.
    DualBasis,
    /// Runs every acceptance criterion and writes summary.json.
    VerifyAll,
}

struct Run {
    cfg: RunConfig,
    grid_override: Option<Vec<f64>>,
    hash: String,
    out: PathBuf,
}

impl Run {
    fn new(common: &Common) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg = cfg.with_seed(common.seed);
        let grid_override = common.grid.as_deref().map(parse_grid).transpose()?;
        if let Some(g) = &grid_override {
            cfg.grid = g.clone();
        }
        if let Some(s) = common.tolerance_scale {
            cfg.tolerance_scale = s;
        }
        cfg.validate()?;
        Ok(Self {
            hash: config_hash(cfg.canonical_json().as_bytes()),
            cfg,
            grid_override,
            out: common.out.clone(),
        })
    }

    fn seed(&self) -> u64 {
        self.cfg.seed()
    }

    fn header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.hash, self.seed())
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_atomic(&path, body.as_bytes())?;
        say!("wrote {}", path.display());
        Ok(path)
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Serde(e.to_string())
}

fn csv_body(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(csv_err)?;
    s.push('\n');
    Ok(s)
}

fn collar_table(run: &Run) -> Result<()> {
    let spec = QuadratureSpec::default().with_rel_error(1e-12);
    let rows = run
        .cfg
        .grid
        .iter()
        .map(|&ell| {
            let n = dz2_norms(ell, &spec)?;
            let l1_res = ((dz2_l1_by_quadrature(ell, &spec)? - n.l1) / n.l1).abs();
            let w = collar_width(ell)?;
            let w_res = ((collar_width_by_quadrature(ell, &spec)? - w) / w).abs();
            Ok([ell, half_extent(ell)?, w, rho(ell, 0.0)?, n.l1, n.l2, n.linf, l1_res, w_res]
                .iter()
                .map(f64::to_string)
                .collect())
        })
        .collect::<Result<Vec<Vec<String>>>>()?;
    let header = [
        "ell",
        "half_extent",
        "width",
        "rho0",
        "l1",
        "l2",
        "linf",
        "l1_residual",
        "width_residual",
    ];
    run.write("collar_table.csv", &(run.header() + &csv_body(&header, &rows)?))?;
    Ok(())
}

/// Half-lengths `c` at which naive and stable distances are compared.
const DIGIT_LOSS_C: [f64; 6] = [0.05, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

fn hexagon_rates(run: &Run) -> Result<()> {
    let hex = &run.cfg.hexagon;
    let grid = run.grid_override.clone().unwrap_or_else(|| hex.grid.clone());
    let base = hex.config_at(grid.iter().copied().fold(0.0, f64::max))?;
    let rates = HexQuantity::ALL
        .iter()
        .map(|&q| fd_rates(&base, q, &grid))
        .collect::<Result<Vec<_>>>()?;
    run.write("hexagon_rates.csv", &(run.header() + &rates_csv(&rates)?))?;

    let mut rows = Vec::new();
    for c in DIGIT_LOSS_C {
        let cfg = hex.config_at(2.0 * c)?;
        let sol = solve_hexagon(&cfg)?;
        for side in Side::ALL {
            let exact = q_distance_extended(&cfg, side, 512);
            let naive = q_distance(&sol, side, DistanceForm::Naive)?;
            let stable = q_distance(&sol, side, DistanceForm::Stable)?;
            let (p, q) = side.q_pair();
            rows.push(vec![
                c.to_string(),
                format!("dist(q{p},q{})", q),
                naive.to_string(),
                stable.to_string(),
                exact.to_string(),
                ((naive - exact) / exact).abs().to_string(),
                ((stable - exact) / exact).abs().to_string(),
            ]);
        }
    }
    let header = ["c", "distance", "naive", "stable", "extended", "naive_rel_error", "stable_rel_error"];
    run.write("hexagon_distances.csv", &(run.header() + &csv_body(&header, &rows)?))?;

    for r in &rates {
        say!(
            "{:<14} slope {:>8.4}  r2 {:.4}",
            r.quantity.name(),
            r.fit.slope,
            r.fit.r_squared
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct DualReport<'a> {
    schema: u32,
    config_hash: &'a str,
    seed: u64,
    model: &'a collarkit::modelspace::ModelSurface,
    basis: DualBasisSet,
    tilde: Vec<collarkit::dualbasis::TildeEntry>,
    epsilon: Vec<collarkit::dualbasis::EpsilonBucket>,
    swept: usize,
    /// `None` where the quantity vanishes identically along the sweep.
    sweep_fits: BTreeMap<&'static str, Option<RateFit>>,
    reference: BTreeMap<&'static str, f64>,
}

fn dual_basis(run: &Run) -> Result<()> {
    let spec = QuadratureSpec::default();
    let d = &run.cfg.dual;
    let model = &d.model;
    let gens = build_generators(model, &spec)?;
    let basis = DualBasisSet::compute(&gens, model.seed)?;
    let short = model.short_indices();
    let tilde = if short.is_empty() { Vec::new() } else { tilde_basis(&gens, &short, &spec)? };

    let grid = &run.cfg.grid;
    let sweep_models = grid
        .iter()
        .map(|&ell| model_at(model, d.swept, ell))
        .collect::<Result<Vec<_>>>()?;
    let mut epsilon_models = vec![model.clone()];
    epsilon_models.extend(sweep_models);
    let epsilon = epsilon_report(&epsilon_models, &d.epsilon_buckets, &spec)?;

    let table = dual_sweep(model, d.swept, grid, &spec, LinfGrid::default())?;
    let sweep_fits = DUAL_QUANTITIES
        .iter()
        .map(|&q| (q, fit_rate(&table.series(q)).ok()))
        .collect();
    let mut csv = table.to_csv()?;
    csv.replace_range(..csv.find('\n').map_or(0, |i| i + 1), &run.header());
    run.write("dual_sweep.csv", &csv)?;

    let j = d.swept;
    let reference = BTreeMap::from([
        ("theta_norm_sq_leading", 32.0 * PI / gens.ell(j)),
        ("psi_norm_leading", 8.0 * PI / gens.dz2_l2(j)),
    ]);
    let report = DualReport {
        schema: 1,
        config_hash: &run.hash,
        seed: run.seed(),
        model,
        basis,
        tilde,
        epsilon,
        swept: j,
        sweep_fits,
        reference,
    };
    say!(
        "Θ duality residual {:.3e}, Ψ pairing residual {:.3e}",
        report.basis.theta_duality_residual, report.basis.psi_pairing_residual
    );
    run.write("dual_basis.json", &json(&report)?)?;
    Ok(())
}

fn verify_all(run: &Run) -> Result<bool> {
    let summary = run_all(&AcceptanceOptions::from_config(&run.cfg));
    for c in &summary.criteria {
        say!("{}", c.line());
    }
    run.write("summary.json", &summary.to_json())?;
    Ok(!summary.failed())
}

fn execute(cli: &Cli) -> Result<bool> {
    let run = Run::new(&cli.common)?;
    match cli.command {
        Command::CollarTable => collar_table(&run).map(|_| true),
        Command::HexagonRates => hexagon_rates(&run).map(|_| true),
        Command::DualBasis => dual_basis(&run).map(|_| true),
        Command::VerifyAll => verify_all(&run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
