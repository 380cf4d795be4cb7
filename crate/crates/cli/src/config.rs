use bdi_core::ensembles::{FieldCoeffs, MatrixField};
use bdi_core::kernels::{Kernel3Route, KernelContext};
use bdi_core::oracle::Scheme;
use bdi_core::quad::QuadConfig;
use bdi_core::winding::MIN_GRID;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Everything a run depends on. Serialized verbatim into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub field: FieldCoeffs,
    /// Fixed SO(2) rotation applied to v(p).
    pub rotation: f64,
    pub seed: u64,
    pub samples: usize,
    pub grid: usize,
    pub quad: QuadConfig,
    pub out: PathBuf,
    pub route: Kernel3Route,
    pub scheme: Scheme,
    /// Momenta for `z`.
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// Whether `z` also runs the Monte Carlo estimate.
    pub mc: bool,
    /// Truncated validation budget.
    pub smoke: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 4,
            field: FieldCoeffs::Trig,
            rotation: 0.0,
            seed: 20240501,
            samples: 100_000,
            grid: 256,
            quad: QuadConfig::default(),
            out: PathBuf::from("bdi-out"),
            route: Kernel3Route::Reduced,
            scheme: Scheme::MedianOfMeans,
            q: vec![1.1],
            p: vec![0.3],
            mc: true,
            smoke: false,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 2 || self.n % 2 != 0 {
            return Err(ConfigError(format!(
                "n = {} rejected: the off-diagonal block dimension N must be even (odd N forces a zero mode)",
                self.n
            )));
        }
        if self.samples == 0 {
            return Err(ConfigError("samples must be at least 1".into()));
        }
        if self.grid < MIN_GRID {
            return Err(ConfigError(format!("grid must be at least {MIN_GRID}, got {}", self.grid)));
        }
        if !self.rotation.is_finite() {
            return Err(ConfigError("rotation must be finite".into()));
        }
        self.quad.validate().map_err(|e| ConfigError(e.to_string()))?;
        self.field().map(|_| ())
    }

    pub fn field(&self) -> Result<MatrixField, ConfigError> {
        MatrixField::new(self.n, self.field.clone())
            .map(|f| f.with_rotation(self.rotation))
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn kernel_context(&self) -> Result<KernelContext, ConfigError> {
        KernelContext::new(self.n, self.quad).map_err(|e| ConfigError(e.to_string()))
    }
}
