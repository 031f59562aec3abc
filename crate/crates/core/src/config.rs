//! Run configuration read from TOML. All lengths are hyperbolic lengths
//! (dimensionless). Unknown keys are rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexagon::{geometric_grid, HexagonConfig, HexagonMode};
use crate::modelspace::ModelSurface;
use crate::verify::DEFAULT_GRID;

pub const CONFIG_VERSION: u32 = 1;

/// Default base lengths of the two-pants hexagon family.
pub const DEFAULT_HEX_A: f64 = 0.8;
pub const DEFAULT_HEX_B: f64 = 0.9;

fn default_l_bar() -> f64 {
    2.0
}

fn default_hex_a() -> f64 {
    DEFAULT_HEX_A
}

fn default_hex_b() -> f64 {
    DEFAULT_HEX_B
}

fn default_mode() -> HexagonMode {
    HexagonMode::TwoPants
}

fn default_model() -> ModelSurface {
    ModelSurface::with_collars(vec![0.1, 0.3, 0.5])
}

fn default_one() -> f64 {
    1.0
}

/// `ℓ` grid for the derivative rates: 9 points from `1e-1` down to `1e-3`.
pub fn default_hex_grid() -> Vec<f64> {
    geometric_grid(1e-1, 1e-3, 9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HexagonSection {
    #[serde(default = "default_mode")]
    pub mode: HexagonMode,
    #[serde(default = "default_hex_a")]
    pub a: f64,
    /// Ignored by the one-pant family.
    #[serde(default = "default_hex_b")]
    pub b: f64,
    #[serde(default = "default_l_bar")]
    pub l_bar: f64,
    #[serde(default = "default_hex_grid")]
    pub grid: Vec<f64>,
}

impl Default for HexagonSection {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            a: DEFAULT_HEX_A,
            b: DEFAULT_HEX_B,
            l_bar: default_l_bar(),
            grid: default_hex_grid(),
        }
    }
}

impl HexagonSection {
    /// Family member at `ℓ`.
    pub fn config_at(&self, ell: f64) -> Result<HexagonConfig> {
        match self.mode {
            HexagonMode::TwoPants => HexagonConfig::two_pants(self.a, self.b, ell, self.l_bar),
            HexagonMode::OnePant => HexagonConfig::one_pant(self.a, ell, self.l_bar),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSection {
    #[serde(default = "default_model")]
    pub model: ModelSurface,
    /// Index of the collar whose length is swept.
    #[serde(default)]
    pub swept: usize,
    /// Lower bounds `ℓ_j ≥ ell_min` of the ε report buckets.
    #[serde(default = "default_buckets")]
    pub epsilon_buckets: Vec<f64>,
}

fn default_buckets() -> Vec<f64> {
    vec![0.0125, 0.05, 0.2]
}

impl Default for DualSection {
    fn default() -> Self {
        Self {
            model: default_model(),
            swept: 0,
            epsilon_buckets: default_buckets(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Overrides every seed in the file when present.
    #[serde(default)]
    pub seed: Option<u64>,
    /// `ℓ` grid for collar tables and dual-basis sweeps.
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default = "default_one")]
    pub tolerance_scale: f64,
    #[serde(default)]
    pub hexagon: HexagonSection,
    #[serde(default)]
    pub dual: DualSection,
}

fn default_grid() -> Vec<f64> {
    DEFAULT_GRID.to_vec()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: None,
            grid: default_grid(),
            tolerance_scale: 1.0,
            hexagon: HexagonSection::default(),
            dual: DualSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !(self.tolerance_scale >= 0.0 && self.tolerance_scale.is_finite()) {
            return Err(Error::Config(format!(
                "tolerance_scale must be non-negative, got {}",
                self.tolerance_scale
            )));
        }
        check_grid("grid", &self.grid)?;
        check_grid("hexagon.grid", &self.hexagon.grid)?;
        self.hexagon.config_at(self.hexagon.grid.iter().copied().fold(0.0, f64::max).max(1e-3))?;
        self.dual.model.validate()?;
        if self.dual.swept >= self.dual.model.k() {
            return Err(Error::Config(format!(
                "dual.swept = {} out of range for {} collars",
                self.dual.swept,
                self.dual.model.k()
            )));
        }
        Ok(())
    }

    /// Effective seed: the explicit override, else the model's own seed.
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.dual.model.seed)
    }

    /// Copy with the seed override applied to the model.
    pub fn with_seed(&self, seed: Option<u64>) -> Self {
        let mut out = self.clone();
        if let Some(s) = seed.or(self.seed) {
            out.seed = Some(s);
            out.dual.model.seed = s;
        }
        out
    }

    /// Deterministic rendering used for the configuration hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("run config serializes")
    }
}

/// Empty grids are allowed (they give header-only tables); otherwise values
/// must be positive and strictly monotone.
pub fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Config(format!("{name}: lengths must be positive")));
    }
    let inc = grid.windows(2).all(|w| w[0] < w[1]);
    let dec = grid.windows(2).all(|w| w[0] > w[1]);
    if !(inc || dec) {
        return Err(Error::Config(format!("{name}: grid must be strictly monotone")));
    }
    Ok(())
}

/// Parses `"a,b,c"`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    let grid = trimmed
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("grid value {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    check_grid("--grid", &grid)?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelspace::DEFAULT_SEED;

    #[test]
    fn minimal_file_uses_defaults() {
        let c = RunConfig::from_toml("version = 1\n").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.seed(), DEFAULT_SEED);
    }

    #[test]
    fn strict_schema() {
        assert!(RunConfig::from_toml("version = 1\nextra = 2\n").is_err());
        assert!(RunConfig::from_toml("version = 1\n[hexagon]\nc = 0.1\n").is_err());
        assert!(RunConfig::from_toml("version = 1\n[dual.model]\ncollars = [0.1]\nfoo = 1\n").is_err());
        assert!(RunConfig::from_toml("version = 2\n").is_err());
        assert!(RunConfig::from_toml("").is_err());
        assert!(RunConfig::from_toml("version = 1\n[dual]\nswept = 5\n").is_err());
    }

    #[test]
    fn full_file() {
        let text = r#"
version = 1
seed = 7
grid = [0.4, 0.1, 0.05]
tolerance_scale = 2.0

[hexagon]
mode = "one-pant"
a = 0.7
l_bar = 2.0
grid = [0.1, 0.01, 0.001]

[dual]
swept = 1
epsilon_buckets = [0.1]

[dual.model]
collars = [0.3, 0.05]
decay_scale = 0.5
"#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.hexagon.mode, HexagonMode::OnePant);
        let seeded = c.with_seed(None);
        assert_eq!(seeded.dual.model.seed, 7);
        assert_eq!(c.with_seed(Some(9)).seed(), 9);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.4, 0.2,0.1").unwrap(), vec![0.4, 0.2, 0.1]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("0.1,0.2,0.15").is_err());
        assert!(parse_grid("0.1,x").is_err());
        assert!(parse_grid("-1,0.5").is_err());
    }
}
