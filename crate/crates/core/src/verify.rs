//! Log-log rate fitting and deterministic parameter sweeps.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Below this `r²` a rate test is reported inconclusive rather than failed.
pub const MIN_R_SQUARED: f64 = 0.98;

/// Default `ℓ` grid for asymptotic claims.
pub const DEFAULT_GRID: [f64; 6] = [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125];

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    /// Natural log of the fitted constant.
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    pub fn inconclusive(&self) -> bool {
        !(self.r_squared >= MIN_R_SQUARED)
    }

    pub fn slope_within(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol
    }

    /// `max(x)/min(x)` expressed in decades.
    pub fn decades(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
        (hi / lo).log10()
    }
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("rate fit needs at least 3 points, got {}", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::Domain(format!("rate fit needs positive finite data, got ({x}, {y})")));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("rate fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}

/// Hex-encoded SHA-256 of a canonical configuration rendering.
pub fn config_hash(canonical: &[u8]) -> String {
    hex::encode(Sha256::digest(canonical))
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

type Extractor<'a> = Box<dyn Fn(f64) -> Result<f64> + Send + Sync + 'a>;

/// A named scalar evaluated at every grid point.
pub struct SweepQuantity<'a> {
    pub name: String,
    eval: Extractor<'a>,
}

impl<'a> SweepQuantity<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(f64) -> Result<f64> + Send + Sync + 'a) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }
}

pub struct SweepPlan<'a> {
    pub grid: Vec<f64>,
    pub quantities: Vec<SweepQuantity<'a>>,
    pub config_hash: String,
    pub seed: u64,
    /// Written only when set.
    pub output: Option<PathBuf>,
}

impl SweepPlan<'_> {
    fn validate(&self) -> Result<()> {
        if self.grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Config("sweep grid values must be positive".into()));
        }
        let increasing = self.grid.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.grid.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(Error::Config("sweep grid must be strictly monotone".into()));
        }
        Ok(())
    }
}

/// Long-format sweep result, in grid order and then quantity order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub ell: f64,
    pub quantity: String,
    pub value: f64,
}

impl SweepTable {
    /// `(ℓ, value)` pairs of one quantity.
    pub fn series(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .map(|r| (r.ell, r.value))
            .collect()
    }

    pub fn fit(&self, quantity: &str) -> Result<RateFit> {
        fit_rate(&self.series(quantity))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "# config_hash={} seed={}", self.config_hash, self.seed);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["ell", "quantity", "value"]).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([r.ell.to_string(), r.quantity.clone(), r.value.to_string()])
                .map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        out.push_str(&String::from_utf8_lossy(&body));
        Ok(out)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serde(e.to_string())
}

/// Evaluates every quantity at every grid point (in parallel), assembles the
/// table in grid order and writes it atomically if an output path is set.
pub fn run_sweep(plan: &SweepPlan<'_>) -> Result<SweepTable> {
    plan.validate()?;
    let per_point: Vec<Vec<SweepRow>> = plan
        .grid
        .par_iter()
        .map(|&ell| {
            plan.quantities
                .iter()
                .map(|q| {
                    Ok(SweepRow {
                        ell,
                        quantity: q.name.clone(),
                        value: (q.eval)(ell)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let table = SweepTable {
        config_hash: plan.config_hash.clone(),
        seed: plan.seed,
        rows: per_point.into_iter().flatten().collect(),
    };
    if let Some(path) = &plan.output {
        write_atomic(path, table.to_csv()?.as_bytes())?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<_> = [0.1, 0.2, 0.4, 0.8, 1.6].iter().map(|&x: &f64| (x, x.powf(1.5))).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-12);
        let pts: Vec<_> = [0.1, 0.2, 0.4].iter().map(|&x| (x, 3.0 * x)).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(!f.inconclusive());
    }

    #[test]
    fn perturbed_power_law() {
        let pts: Vec<_> = (0..12)
            .map(|k| {
                let x = 1e-3 * 2f64.powi(k);
                (x, x * x * (1.0 + 0.01 * x.ln().sin()))
            })
            .collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_data() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
    }

    #[test]
    fn sweep_keeps_grid_order() {
        let plan = SweepPlan {
            grid: vec![0.4, 0.2, 0.1, 0.05],
            quantities: vec![SweepQuantity::new("sq", |x| Ok(x * x)), SweepQuantity::new("id", Ok)],
            config_hash: config_hash(b"test"),
            seed: 7,
            output: None,
        };
        let t = run_sweep(&plan).unwrap();
        let ells: Vec<f64> = t.rows.iter().map(|r| r.ell).collect();
        assert_eq!(ells, vec![0.4, 0.4, 0.2, 0.2, 0.1, 0.1, 0.05, 0.05]);
        assert_eq!(t.series("sq")[2], (0.1, 0.1 * 0.1));
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("# config_hash="));
        assert_eq!(csv.lines().nth(1), Some("ell,quantity,value"));
        let bad = SweepPlan {
            grid: vec![0.1, 0.3, 0.2],
            quantities: vec![],
            config_hash: String::new(),
            seed: 0,
            output: None,
        };
        assert!(run_sweep(&bad).is_err());
    }
}
