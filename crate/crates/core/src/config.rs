//! JSON run configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::initial::{FieldSpec, InitialSpec};
use crate::model::{Grid1D, Params};
use crate::pde::Boundary;

/// Time step: a fixed value or `"auto"` (0.9 of the stability bound).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DtSetting {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for DtSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DtSetting::Auto => s.serialize_str("auto"),
            DtSetting::Fixed(dt) => s.serialize_f64(*dt),
        }
    }
}

impl<'de> Deserialize<'de> for DtSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(dt) if dt.is_finite() && dt > 0.0 => Ok(DtSetting::Fixed(dt)),
            Raw::Number(dt) => Err(serde::de::Error::custom(format!(
                "dt must be positive, got {dt}"
            ))),
            Raw::Text(t) if t == "auto" => Ok(DtSetting::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "dt must be a number or \"auto\", got {t:?}"
            ))),
        }
    }
}

fn default_trace_stride() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Params,
    pub grid: Grid1D,
    pub initial: InitialSpec,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub dt: DtSetting,
    pub t_max: f64,
    pub steady_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Steps between recorded trace rows.
    #[serde(default = "default_trace_stride")]
    pub trace_stride: usize,
    /// Times at which `snapshot_<t>.csv` files are written.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::Config(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.steady_tol.is_finite() && self.steady_tol > 0.0) {
            return Err(Error::Config(format!(
                "steady_tol must be positive, got {}",
                self.steady_tol
            )));
        }
        if self.trace_stride == 0 {
            return Err(Error::Config("trace_stride must be at least 1".into()));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(t.is_finite() && **t >= 0.0))
        {
            return Err(Error::Config(format!("invalid snapshot time {t}")));
        }
        Ok(())
    }
}

/// Rate constants `(a1, a2, c1, c2, c3, c4) = (1, 2, 3, 4, 5, 6)` of the
/// reference experiment.
pub fn reference_params() -> Params {
    Params::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0).expect("valid constants")
}

/// Reference initial data on `[0, π]`.
///
/// The source lists the last three `v` fields all under one subscript; they
/// are read as `v2 = 8 − 2cos 2x`, `v3 = 10 + 2cos 2x`, `v4 = 5 − 2cos 2x`,
/// which is the only reading consistent with the stated means
/// `N0 = 29` and `W2 = 5`.
pub fn reference_initial() -> InitialSpec {
    InitialSpec {
        u1: FieldSpec::cosine(10.0, 2, -3.0),
        u2: FieldSpec::cosine(10.0, 2, 3.0),
        v1: FieldSpec::cosine(6.0, 2, 2.0),
        v2: FieldSpec::cosine(8.0, 2, -2.0),
        v3: FieldSpec::cosine(10.0, 2, 2.0),
        v4: FieldSpec::cosine(5.0, 2, -2.0),
    }
}

/// The reference run: Neumann boundary on `[0, π]` with `n_cells` cells.
pub fn reference_config(n_cells: usize) -> RunConfig {
    RunConfig {
        params: reference_params(),
        grid: Grid1D::new(PI, n_cells).expect("valid grid"),
        initial: reference_initial(),
        boundary: Boundary::Neumann,
        dt: DtSetting::Auto,
        t_max: 20.0,
        steady_tol: 1e-6,
        output_dir: None,
        trace_stride: default_trace_stride(),
        snapshot_times: Vec::new(),
    }
}
