//! TOML experiment configuration.
//!
//! Parsing and schema errors carry the line of the offending key; semantic
//! checks run in [`ExperimentConfig::validate`] before any computation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Lti,
    ReactionDiffusion,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: SystemKind,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a_matrix: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b_matrix: Option<Vec<Vec<f64>>>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k_matrix: Option<Vec<Vec<f64>>>,
    #[serde(rename = "K_im", default, skip_serializing_if = "Option::is_none")]
    pub k_im: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles_im: Option<Vec<f64>>,
    /// Diffusivity of the reaction–diffusion family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues_im: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_coeffs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_coeffs_im: Option<Vec<Vec<f64>>>,
}

fn default_kappa() -> f64 {
    0.2
}

fn default_tol() -> f64 {
    delaycert::lmi::DEFAULT_DELTA_TOL
}

fn default_eps_pd() -> f64 {
    delaycert::lmi::DEFAULT_EPS_PD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificationConfig {
    #[serde(rename = "D0")]
    pub d0: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_eps_pd")]
    pub eps_pd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    Constant,
    Sinusoid,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    pub kind: DelayKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
    /// `[[t, D(t)], …]` for `kind = "table"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Zero,
    Mode,
    Polynomial,
    Coefficients,
}

/// Initial PDE profile `X0(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    /// `kind = "mode"`: `X0 = amplitude·φ_n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// `kind = "polynomial"`: `X0 = scale·Π(x − r_i·L)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots_over_length: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// `kind = "coefficients"`: modal coefficients `c_1(0), …`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

fn default_t0() -> f64 {
    0.5
}

fn default_record_every() -> usize {
    1
}

fn default_field_points() -> usize {
    delaycert::pde::DEFAULT_FIELD_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(rename = "X0", default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_field_points")]
    pub field_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Explicit grid; otherwise `D0_max·j/count` for `j = 1..=count`.
    #[serde(rename = "D0", default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(rename = "D0_max", default, skip_serializing_if = "Option::is_none")]
    pub d0_max: Option<f64>,
}

fn default_ledger() -> String {
    "ledger.jsonl".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Ledger file name, relative to the output directory.
    #[serde(default = "default_ledger")]
    pub ledger: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            ledger: default_ledger(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub certification: CertificationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<DelayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Source text kept for line lookups in diagnostics.
pub struct Source<'a> {
    text: &'a str,
}

impl<'a> Source<'a> {
    fn line_of_offset(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    /// Line of `key = …` inside `[section]`, or of the section header when the key is absent.
    pub fn line_of(&self, section: &str, key: Option<&str>) -> Option<usize> {
        let mut current = String::new();
        let mut header = None;
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
                current = name.trim().to_string();
                if current == section {
                    header = Some(i + 1);
                }
                continue;
            }
            if current != section {
                continue;
            }
            if let (Some(key), Some((lhs, _))) = (key, line.split_once('=')) {
                if lhs.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
        header
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let src = Source { text };
        let config: Self = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| src.line_of_offset(s.start)),
            message: e.message().trim().to_string(),
        })?;
        config.validate(&src)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Canonical TOML rendering; parses back to an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    fn validate(&self, src: &Source) -> Result<(), ConfigError> {
        let err = |section: &str, key: &str, message: String| ConfigError {
            line: src.line_of(section, Some(key)),
            message: format!("[{section}] {key}: {message}"),
        };
        let positive = |section: &str, key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(err(section, key, format!("must be positive, got {v}")))
            }
        };

        let c = &self.certification;
        positive("certification", "D0", c.d0)?;
        positive("certification", "tol", c.tol)?;
        positive("certification", "eps_pd", c.eps_pd)?;
        if !(c.kappa >= 0.0 && c.kappa.is_finite()) {
            return Err(err("certification", "kappa", format!("must be >= 0, got {}", c.kappa)));
        }
        if c.tol >= c.d0 {
            return Err(err("certification", "tol", "must be smaller than D0".into()));
        }

        self.validate_system(src)?;

        if let Some(d) = &self.delay {
            if !(d.amplitude >= 0.0 && d.amplitude < c.d0) {
                return Err(err("delay", "amplitude", format!("must lie in [0, D0), got {}", d.amplitude)));
            }
            if d.kind == DelayKind::Table && d.table.as_ref().map_or(true, |t| t.len() < 2) {
                return Err(err("delay", "table", "a table delay needs at least two [t, D] rows".into()));
            }
        }

        if let Some(s) = &self.simulation {
            positive("simulation", "t0", s.t0)?;
            positive("simulation", "T", s.t_end)?;
            if let Some(h) = s.h {
                positive("simulation", "h", h)?;
            }
            if s.record_every == 0 {
                return Err(err("simulation", "record_every", "must be at least 1".into()));
            }
            if s.field_points < 2 {
                return Err(err("simulation", "field_points", "must be at least 2".into()));
            }
            if let Some([lo, hi]) = s.fit_window {
                if !(lo >= 0.0 && hi > lo && hi <= s.t_end) {
                    return Err(err("simulation", "fit_window", format!("[{lo}, {hi}] must lie inside [0, T]")));
                }
            }
            match self.system.kind {
                SystemKind::Lti => {
                    let n = self.system.a_matrix.as_ref().map_or(0, |a| a.len());
                    match &s.x0 {
                        Some(x0) if x0.len() == n => {}
                        Some(x0) => {
                            return Err(err("simulation", "x0", format!("has {} entries, state has {n}", x0.len())))
                        }
                        None => return Err(err("simulation", "x0", "required for an lti system".into())),
                    }
                }
                _ => {
                    let Some(p) = &s.profile else {
                        return Err(err("simulation", "X0", "required for a modal system".into()));
                    };
                    let ok = match p.kind {
                        ProfileKind::Zero => true,
                        ProfileKind::Mode => p.n.is_some_and(|n| n >= 1),
                        ProfileKind::Polynomial => p.roots_over_length.is_some(),
                        ProfileKind::Coefficients => p.values.is_some(),
                    };
                    if !ok {
                        return Err(err(
                            "simulation",
                            "X0",
                            format!("kind {:?} is missing its parameters", p.kind),
                        ));
                    }
                    if p.kind != ProfileKind::Zero && p.kind != ProfileKind::Coefficients && self.system.kind == SystemKind::Spectral {
                        return Err(err("simulation", "X0", "spectral systems take kind = \"coefficients\" or \"zero\"".into()));
                    }
                }
            }
        }

        if let Some(sw) = &self.sweep {
            match (&sw.d0, sw.count, sw.d0_max) {
                (Some(grid), None, None) => {
                    if grid.is_empty() {
                        return Err(err("sweep", "D0", "grid is empty".into()));
                    }
                    if let Some(bad) = grid.iter().find(|&&d| !(d > 0.0 && d <= 5.0)) {
                        return Err(err("sweep", "D0", format!("value {bad} outside (0, 5]")));
                    }
                }
                (None, Some(count), Some(max)) => {
                    if count == 0 {
                        return Err(err("sweep", "count", "grid is empty".into()));
                    }
                    if !(max > 0.0 && max <= 5.0) {
                        return Err(err("sweep", "D0_max", format!("{max} outside (0, 5]")));
                    }
                }
                _ => {
                    return Err(ConfigError {
                        line: src.line_of("sweep", None),
                        message: "[sweep] give either D0 = [..] or both count and D0_max".into(),
                    })
                }
            }
        }
        Ok(())
    }

    fn validate_system(&self, src: &Source) -> Result<(), ConfigError> {
        let s = &self.system;
        let err = |key: &str, message: String| ConfigError {
            line: src.line_of("system", Some(key)),
            message: format!("[system] {key}: {message}"),
        };
        let rect = |key: &str, m: &[Vec<f64>], rows: Option<usize>, cols: Option<usize>| {
            let r = m.len();
            let c = m.first().map_or(0, |row| row.len());
            if r == 0 || c == 0 || m.iter().any(|row| row.len() != c) {
                return Err(err(key, "must be a non-empty rectangular array of rows".into()));
            }
            if rows.is_some_and(|want| want != r) || cols.is_some_and(|want| want != c) {
                return Err(err(
                    key,
                    format!("is {r}x{c}, expected {}x{}", fmt_dim(rows), fmt_dim(cols)),
                ));
            }
            Ok((r, c))
        };
        let gain_or_poles = |n: usize, m: usize| -> Result<(), ConfigError> {
            match (&s.k_matrix, &s.poles) {
                (Some(k), None) => {
                    rect("K", k, Some(m), Some(n))?;
                    if let Some(ki) = &s.k_im {
                        rect("K_im", ki, Some(m), Some(n))?;
                    }
                    Ok(())
                }
                (None, Some(p)) => {
                    if p.len() != n {
                        return Err(err("poles", format!("{} poles for {n} controlled states", p.len())));
                    }
                    if s.poles_im.as_ref().is_some_and(|im| im.len() != n) {
                        return Err(err("poles_im", "must match the length of poles".into()));
                    }
                    Ok(())
                }
                _ => Err(ConfigError {
                    line: src.line_of("system", None),
                    message: "[system] give exactly one of K or poles".into(),
                }),
            }
        };
        let forbid = |present: bool, key: &str| {
            if present {
                Err(err(key, format!("not used by kind {:?}", s.kind)))
            } else {
                Ok(())
            }
        };
        match s.kind {
            SystemKind::Lti => {
                for (present, key) in [
                    (s.a.is_some(), "a"),
                    (s.c.is_some(), "c"),
                    (s.length.is_some(), "length"),
                    (s.n0.is_some(), "n0"),
                    (s.n_sim.is_some(), "n_sim"),
                    (s.eigenvalues.is_some(), "eigenvalues"),
                    (s.input_coeffs.is_some(), "input_coeffs"),
                    (s.k_im.is_some(), "K_im"),
                ] {
                    forbid(present, key)?;
                }
                let a = s.a_matrix.as_ref().ok_or_else(|| err("A", "required".into()))?;
                let (n, _) = rect("A", a, None, Some(a.len()))?;
                let b = s.b_matrix.as_ref().ok_or_else(|| err("B", "required".into()))?;
                let (_, m) = rect("B", b, Some(n), None)?;
                gain_or_poles(n, m)
            }
            SystemKind::ReactionDiffusion => {
                for (present, key) in [
                    (s.a_matrix.is_some(), "A"),
                    (s.b_matrix.is_some(), "B"),
                    (s.eigenvalues.is_some(), "eigenvalues"),
                    (s.input_coeffs.is_some(), "input_coeffs"),
                    (s.k_im.is_some(), "K_im"),
                ] {
                    forbid(present, key)?;
                }
                for (key, v) in [("a", s.a), ("c", s.c), ("length", s.length)] {
                    match v {
                        Some(v) if v > 0.0 && v.is_finite() => {}
                        Some(v) => return Err(err(key, format!("must be positive, got {v}"))),
                        None => return Err(err(key, "required".into())),
                    }
                }
                let n0 = s.n0.unwrap_or(3);
                if n0 == 0 {
                    return Err(err("n0", "must be at least 1".into()));
                }
                if s.n_sim.is_some_and(|ns| ns < n0) {
                    return Err(err("n_sim", "must be at least n0".into()));
                }
                gain_or_poles(n0, 2)
            }
            SystemKind::Spectral => {
                for (present, key) in [
                    (s.a_matrix.is_some(), "A"),
                    (s.b_matrix.is_some(), "B"),
                    (s.a.is_some(), "a"),
                    (s.c.is_some(), "c"),
                    (s.length.is_some(), "length"),
                ] {
                    forbid(present, key)?;
                }
                let eigs = s.eigenvalues.as_ref().ok_or_else(|| err("eigenvalues", "required".into()))?;
                if s.eigenvalues_im.as_ref().is_some_and(|im| im.len() != eigs.len()) {
                    return Err(err("eigenvalues_im", "must match the length of eigenvalues".into()));
                }
                let coeffs = s.input_coeffs.as_ref().ok_or_else(|| err("input_coeffs", "required".into()))?;
                let (_, m) = rect("input_coeffs", coeffs, Some(eigs.len()), None)?;
                if let Some(im) = &s.input_coeffs_im {
                    rect("input_coeffs_im", im, Some(eigs.len()), Some(m))?;
                }
                let n0 = s.n0.ok_or_else(|| err("n0", "required for a spectral system".into()))?;
                let n_sim = s.n_sim.unwrap_or(n0);
                if n0 == 0 || n_sim < n0 || eigs.len() < n_sim.max(n0 + 1) {
                    return Err(err(
                        "n0",
                        format!(
                            "need 1 <= n0 <= n_sim and at least max(n_sim, n0 + 1) = {} eigenvalues",
                            n_sim.max(n0 + 1)
                        ),
                    ));
                }
                gain_or_poles(n0, m)
            }
        }
    }
}

fn fmt_dim(d: Option<usize>) -> String {
    d.map_or("*".into(), |v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHIPPED: [&str; 3] = [
        include_str!("../configs/example1.toml"),
        include_str!("../configs/example2.toml"),
        include_str!("../configs/reaction_diffusion.toml"),
    ];

    #[test]
    fn shipped_configs_round_trip() {
        for text in SHIPPED {
            let cfg = ExperimentConfig::parse(text).unwrap();
            let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, again);
            assert_eq!(cfg.to_toml(), again.to_toml());
        }
    }

    #[test]
    fn defaults_fill_optional_keys() {
        let cfg = ExperimentConfig::parse(
            "[system]\nkind = \"lti\"\nA = [[-1.0]]\nB = [[1.0]]\nK = [[0.0]]\n[certification]\nD0 = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.certification.kappa, 0.2);
        assert_eq!(cfg.certification.tol, 1e-4);
        assert_eq!(cfg.output.ledger, "ledger.jsonl");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = "[system]\nkind = \"lti\"\nA = [[-1.0]]\nB = [[1.0]]\nK = [[0.0]]\n[certification]\nD0 = 1.0\nkapa = 0.3\n";
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert_eq!(e.line, Some(8), "{e}");
    }

    #[test]
    fn invalid_value_reports_its_line() {
        let text = "[system]\nkind = \"lti\"\nA = [[-1.0]]\nB = [[1.0]]\nK = [[0.0]]\n[certification]\nD0 = 1.0\ntol = -1e-4\n";
        let e = ExperimentConfig::parse(text).unwrap_err();
        assert_eq!(e.line, Some(8), "{e}");
        assert!(e.to_string().starts_with("line 8:"));
    }
}
