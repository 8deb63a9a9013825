//! Scenario files: TOML schema, validation and construction of the core
//! objects they describe.

use std::path::PathBuf;

use hypoctl_core::flows_kalman::MatrixPair;
use hypoctl_core::spectral_field::{normalized_gaussian, GridSpec, SpectralField};
use hypoctl_core::support_geometry::{FlowOrientation, MovingSupport, Region, SupportKind};
use hypoctl_core::symbol_engine::SymbolFamily;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub equation: EquationDecl,
    pub grid: Option<GridDecl>,
    pub support: Option<SupportDecl>,
    pub experiment: ExperimentDecl,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EquationDecl {
    Heat {
        dim: usize,
        horizon: f64,
    },
    Constant {
        q: Vec<Vec<f64>>,
        horizon: f64,
    },
    /// `coeffs[i][j][k]` multiplies `t^k` in entry `(i, j)`.
    Polynomial {
        coeffs: Vec<Vec<Vec<f64>>>,
        horizon: f64,
    },
    Ou {
        q: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        horizon: f64,
    },
    Fractional {
        s: f64,
        dim: usize,
        horizon: f64,
    },
}

impl EquationDecl {
    pub fn horizon(&self) -> f64 {
        match self {
            Self::Heat { horizon, .. }
            | Self::Constant { horizon, .. }
            | Self::Polynomial { horizon, .. }
            | Self::Ou { horizon, .. }
            | Self::Fractional { horizon, .. } => *horizon,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Heat { dim, .. } | Self::Fractional { dim, .. } => *dim,
            Self::Constant { q, .. } | Self::Ou { q, .. } => q.len(),
            Self::Polynomial { coeffs, .. } => coeffs.len(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDecl {
    pub half_width: f64,
    pub points: usize,
}

/// Region syntax of the config files: the core regions plus cone shorthands
/// given by their opening angle.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionDecl {
    All,
    Empty,
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Wedge {
        slope_min: f64,
        slope_max: f64,
    },
    TranslationCone {
        theta0: f64,
    },
    RotationCone {
        theta0: f64,
    },
    PeriodicIntervals {
        period: f64,
        #[serde(default)]
        offset: f64,
        width: f64,
        #[serde(default)]
        axis: usize,
    },
    QuadraticIntervals {
        #[serde(default)]
        axis: usize,
    },
    Intervals {
        bounds: Vec<[f64; 2]>,
        #[serde(default)]
        axis: usize,
    },
    Translated {
        shift: Vec<f64>,
        inner: Box<RegionDecl>,
    },
    Not {
        inner: Box<RegionDecl>,
    },
    And {
        parts: Vec<RegionDecl>,
    },
    Or {
        parts: Vec<RegionDecl>,
    },
}

impl RegionDecl {
    pub fn build(&self) -> Region {
        match self {
            Self::All => Region::All,
            Self::Empty => Region::Empty,
            Self::HalfSpace { normal, offset } => Region::HalfSpace {
                normal: normal.clone(),
                offset: *offset,
            },
            Self::Ball { center, radius } => Region::Ball {
                center: center.clone(),
                radius: *radius,
            },
            Self::Wedge { slope_min, slope_max } => Region::Wedge {
                slope_min: *slope_min,
                slope_max: *slope_max,
            },
            Self::TranslationCone { theta0 } => Region::translation_cone(*theta0),
            Self::RotationCone { theta0 } => Region::rotation_cone(*theta0),
            Self::PeriodicIntervals {
                period,
                offset,
                width,
                axis,
            } => Region::PeriodicIntervals {
                period: *period,
                offset: *offset,
                width: *width,
                axis: *axis,
            },
            Self::QuadraticIntervals { axis } => Region::QuadraticIntervals { axis: *axis },
            Self::Intervals { bounds, axis } => Region::Intervals {
                bounds: bounds.clone(),
                axis: *axis,
            },
            Self::Translated { shift, inner } => Region::Translated {
                shift: shift.clone(),
                inner: Box::new(inner.build()),
            },
            Self::Not { inner } => Region::Not {
                inner: Box::new(inner.build()),
            },
            Self::And { parts } => Region::And {
                parts: parts.iter().map(RegionDecl::build).collect(),
            },
            Self::Or { parts } => Region::Or {
                parts: parts.iter().map(RegionDecl::build).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SupportDecl {
    Fixed {
        base: RegionDecl,
    },
    Flow {
        base: RegionDecl,
        drift: Vec<Vec<f64>>,
        orientation: FlowOrientation,
    },
    Dilating {
        base: RegionDecl,
        mu: f64,
    },
    Explicit {
        ends: Vec<f64>,
        pieces: Vec<RegionDecl>,
    },
}

impl SupportDecl {
    fn kind(&self) -> SupportKind {
        match self {
            Self::Fixed { base } => SupportKind::Fixed { base: base.build() },
            Self::Flow {
                base,
                drift,
                orientation,
            } => SupportKind::FlowPushforward {
                base: base.build(),
                drift: drift.clone(),
                orientation: *orientation,
            },
            Self::Dilating { base, mu } => SupportKind::Dilating {
                base: base.build(),
                mu: *mu,
            },
            Self::Explicit { ends, pieces } => SupportKind::ExplicitFamily {
                ends: ends.clone(),
                pieces: pieces.iter().map(RegionDecl::build).collect(),
            },
        }
    }
}

/// Centre schedule: explicit points, a ring plus square lattice, and
/// equally spaced points along a ray, concatenated in that order.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CentersDecl {
    pub points: Vec<Vec<f64>>,
    pub ring: usize,
    pub ring_distance: f64,
    pub lattice: usize,
    pub lattice_extent: f64,
    /// `k·ray_step` for `k = 1..=ray_count`.
    pub ray_step: Vec<f64>,
    pub ray_count: usize,
}

impl CentersDecl {
    pub fn build(&self) -> Vec<Vec<f64>> {
        let mut out = self.points.clone();
        if self.ring > 0 || self.lattice > 0 {
            out.extend(hypoctl_core::support_geometry::ring_and_lattice(
                self.ring,
                self.ring_distance,
                self.lattice,
                self.lattice_extent,
            ));
        }
        for k in 1..=self.ray_count {
            out.push(self.ray_step.iter().map(|v| v * k as f64).collect());
        }
        out
    }
}

/// Normalized Gaussian, optionally modulated by `e^{i wave·x}`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DatumDecl {
    pub center: Vec<f64>,
    pub sigma: f64,
    #[serde(default)]
    pub wave: Option<Vec<f64>>,
}

impl DatumDecl {
    pub fn build(&self, grid: GridSpec) -> hypoctl_core::Result<SpectralField> {
        let g = normalized_gaussian(grid, &self.center, self.sigma)?;
        match &self.wave {
            None => Ok(g),
            Some(k) => {
                if k.len() != grid.dim() {
                    return Err(hypoctl_core::Error::InvalidArgument(format!(
                        "wave vector has dimension {}, grid has {}",
                        k.len(),
                        grid.dim()
                    )));
                }
                let phase = SpectralField::from_fn(grid, |x| {
                    Complex64::from_polar(1.0, x.iter().zip(k).map(|(a, b)| a * b).sum())
                });
                let values = g.values().iter().zip(phase.values()).map(|(a, b)| a * b).collect();
                SpectralField::from_values(grid, values)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentDecl {
    Kalman(KalmanParams),
    Thickness(ThicknessParams),
    Threshold(ThresholdParams),
    Synthesize(SynthesizeParams),
    Certify(CertifyParams),
    Necessity(NecessityParams),
    Bernstein(BernsteinParams),
    Cylinders(CylinderParams),
    Fdb(FdbParams),
}

impl ExperimentDecl {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Kalman(_) => "kalman",
            Self::Thickness(_) => "thickness",
            Self::Threshold(_) => "threshold",
            Self::Synthesize(_) => "synthesize",
            Self::Certify(_) => "certify",
            Self::Necessity(_) => "necessity",
            Self::Bernstein(_) => "bernstein",
            Self::Cylinders(_) => "cylinders",
            Self::Fdb(_) => "fdb",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanParams {
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    pub sphere_samples: usize,
}

impl Default for KalmanParams {
    fn default() -> Self {
        Self {
            tau_min: 1e-3,
            tau_max: 1e-1,
            points: 9,
            sphere_samples: 200,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThicknessParams {
    pub r: f64,
    pub samples: usize,
    pub centers: CentersDecl,
}

impl Default for ThicknessParams {
    fn default() -> Self {
        Self {
            r: 5.0,
            samples: 100_000,
            centers: CentersDecl::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdParams {
    pub r: f64,
    pub gamma_floor: f64,
    pub samples: usize,
    pub bracket: [f64; 2],
    pub tol: f64,
    pub centers: CentersDecl,
    /// Range the threshold is expected in; outside it the verdict is negative.
    pub expected: Option<[f64; 2]>,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        Self {
            r: 5.0,
            gamma_floor: 0.01,
            samples: 100_000,
            bracket: [1.0, 4.0],
            tol: 1e-2,
            centers: CentersDecl::default(),
            expected: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeParams {
    pub epsilon: f64,
    pub cost: f64,
    pub nodes: usize,
    pub cg_tol: f64,
    pub max_iter: usize,
    pub duality_probes: usize,
    pub datum: Option<DatumDecl>,
}

impl Default for SynthesizeParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            cost: 1.0,
            nodes: 64,
            cg_tol: 1e-10,
            max_iter: 200,
            duality_probes: 8,
            datum: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyParams {
    pub epsilons: Vec<f64>,
    pub nodes: usize,
    pub cg_tol: f64,
    pub max_iter: usize,
    pub cap_exponent: i32,
    pub datum: Option<DatumDecl>,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1],
            nodes: 64,
            cg_tol: 1e-8,
            max_iter: 200,
            cap_exponent: hypoctl_core::hum_synthesizer::COST_CAP_EXPONENT,
            datum: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct NecessityParams {
    pub l: f64,
    pub r: f64,
    pub nodes: usize,
    pub centers: CentersDecl,
}

impl Default for NecessityParams {
    fn default() -> Self {
        Self {
            l: 2.0,
            r: 5.0,
            nodes: 32,
            centers: CentersDecl::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BernsteinParams {
    /// `T - t` runs over a log grid on `[tau_min, tau_max]`.
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    pub m_max: usize,
    pub alpha_max: usize,
    pub k: Option<f64>,
    pub datum: Option<DatumDecl>,
}

impl Default for BernsteinParams {
    fn default() -> Self {
        Self {
            tau_min: 0.05,
            tau_max: 1.0,
            points: 8,
            m_max: 4,
            alpha_max: 4,
            k: None,
            datum: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CylinderParams {
    pub epsilons: Vec<f64>,
    pub r: f64,
    pub extent: f64,
    /// Measured from the support thickness on the cylinder lattice when absent.
    pub gamma: Option<f64>,
    pub samples: usize,
    pub m_cap: usize,
    pub alpha_cap: usize,
    pub nodes: usize,
    pub audit_points: usize,
    pub datum: Option<DatumDecl>,
}

impl Default for CylinderParams {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-2, 1e-4],
            r: 2.0,
            extent: 8.0,
            gamma: None,
            samples: 100_000,
            m_cap: 4,
            alpha_cap: 4,
            nodes: 32,
            audit_points: 8,
            datum: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdbParams {
    pub m_max: usize,
    pub a_max: i64,
}

impl Default for FdbParams {
    fn default() -> Self {
        Self { m_max: 12, a_max: 8 }
    }
}

/// A parsed scenario together with the text it came from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub source_name: String,
    pub source: String,
}

/// 1-based line of a byte offset.
fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Line on which the dotted `path` is assigned, or the header of its table.
pub fn locate(source: &str, path: &str) -> Option<usize> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let key = parts.pop()?;
    let table = parts.join(".");
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == table || (table.is_empty() && current == key) {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current == table {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}

fn unknown_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("unknown field `")?;
    rest.split('`').next()
}

/// First line at or after `start` assigning `key`, before the next table header.
fn key_line_after(source: &str, start: usize, key: &str) -> Option<usize> {
    for (i, raw) in source.lines().enumerate().skip(start - 1) {
        let line = raw.trim();
        if i + 1 > start && line.starts_with('[') {
            return None;
        }
        if let Some(rest) = line.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    None
}

impl LoadedScenario {
    pub fn parse(source_name: &str, source: &str) -> Result<Self, CliError> {
        let scenario: Scenario = toml::from_str(source).map_err(|e| {
            let mut line = e.span().map(|s| line_of(source, s.start));
            // tagged tables report the table span; point at the offending key instead
            if let (Some(start), Some(key)) = (line, unknown_field(e.message())) {
                line = key_line_after(source, start, key).or(line);
            }
            let field = line
                .and_then(|l| source.lines().nth(l - 1))
                .map(|text| {
                    let text = text.trim();
                    text.split('=').next().unwrap_or(text).trim().to_string()
                })
                .unwrap_or_default();
            CliError::Config {
                source_name: source_name.to_string(),
                line,
                field,
                message: e.message().trim().to_string(),
            }
        })?;
        let loaded = Self {
            scenario,
            source_name: source_name.to_string(),
            source: source.to_string(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn config_error(&self, field: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            source_name: self.source_name.clone(),
            line: locate(&self.source, field),
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.source.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn validate(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        if s.name.is_empty()
            || !s
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(self.config_error("name", "must be a non-empty identifier of [A-Za-z0-9_-]"));
        }
        let t = s.equation.horizon();
        if !(t > 0.0 && t.is_finite()) {
            return Err(self.config_error("equation.horizon", format!("horizon must be positive, got {t}")));
        }
        let dim = s.equation.dim();
        if !(1..=3).contains(&dim) {
            return Err(self.config_error("equation", format!("dimension {dim} not in 1..=3")));
        }
        let check_positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(self.config_error(field, format!("must be positive, got {v}")))
            }
        };
        let check_eps = |field: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(self.config_error(field, format!("must lie in (0, 1), got {v}")))
            }
        };
        match &s.experiment {
            ExperimentDecl::Kalman(p) => {
                if !matches!(s.equation, EquationDecl::Ou { .. }) {
                    return Err(self.config_error("experiment.kind", "kalman needs an `ou` equation"));
                }
                check_positive("experiment.tau_min", p.tau_min)?;
                if !(p.tau_max > p.tau_min) || p.points < 2 {
                    return Err(self.config_error("experiment.tau_max", "need tau_max > tau_min and points >= 2"));
                }
            }
            ExperimentDecl::Thickness(p) => {
                check_positive("experiment.r", p.r)?;
                self.require_support()?;
                self.require_centers(&p.centers)?;
            }
            ExperimentDecl::Threshold(p) => {
                check_positive("experiment.r", p.r)?;
                check_positive("experiment.tol", p.tol)?;
                if !(p.bracket[0] >= 0.0 && p.bracket[1] > p.bracket[0]) {
                    return Err(self.config_error("experiment.bracket", "bracket must satisfy 0 <= lo < hi"));
                }
                self.require_support()?;
                self.require_centers(&p.centers)?;
            }
            ExperimentDecl::Synthesize(p) => {
                check_eps("experiment.epsilon", p.epsilon)?;
                check_positive("experiment.cost", p.cost)?;
                self.require_hum(p.datum.as_ref())?;
            }
            ExperimentDecl::Certify(p) => {
                if p.epsilons.is_empty() {
                    return Err(self.config_error("experiment.epsilons", "at least one rate is required"));
                }
                for &e in &p.epsilons {
                    check_eps("experiment.epsilons", e)?;
                }
                self.require_hum(p.datum.as_ref())?;
            }
            ExperimentDecl::Necessity(p) => {
                check_positive("experiment.l", p.l)?;
                check_positive("experiment.r", p.r)?;
                self.require_support()?;
                self.require_grid()?;
                self.require_centers(&p.centers)?;
            }
            ExperimentDecl::Bernstein(p) => {
                check_positive("experiment.tau_min", p.tau_min)?;
                if !(p.tau_max > p.tau_min && p.tau_max <= t) {
                    return Err(self.config_error("experiment.tau_max", "need tau_min < tau_max <= horizon"));
                }
                self.require_grid()?;
                self.require_datum(p.datum.as_ref())?;
            }
            ExperimentDecl::Cylinders(p) => {
                check_positive("experiment.r", p.r)?;
                for &e in &p.epsilons {
                    check_positive("experiment.epsilons", e)?;
                }
                if let Some(g) = p.gamma {
                    if !(g > 0.0 && g <= 1.0) {
                        return Err(self.config_error("experiment.gamma", "gamma must lie in (0, 1]"));
                    }
                } else {
                    self.require_support()?;
                }
                self.require_grid()?;
                self.require_datum(p.datum.as_ref())?;
            }
            ExperimentDecl::Fdb(p) => {
                if p.m_max == 0 || p.a_max < 1 {
                    return Err(self.config_error("experiment.m_max", "need m_max >= 1 and a_max >= 1"));
                }
            }
        }
        Ok(())
    }

    fn require_support(&self) -> Result<(), CliError> {
        match self.scenario.support {
            Some(_) => Ok(()),
            None => Err(self.config_error("support", "this experiment needs a [support] table")),
        }
    }

    fn require_grid(&self) -> Result<(), CliError> {
        match self.scenario.grid {
            Some(_) => Ok(()),
            None => Err(self.config_error("grid", "this experiment needs a [grid] table")),
        }
    }

    fn require_datum(&self, datum: Option<&DatumDecl>) -> Result<(), CliError> {
        match datum {
            Some(d) if d.center.len() == self.scenario.equation.dim() && d.sigma > 0.0 => Ok(()),
            Some(_) => Err(self.config_error("experiment.datum", "datum centre must match the dimension, sigma > 0")),
            None => Err(self.config_error("experiment.datum", "this experiment needs an initial datum")),
        }
    }

    fn require_hum(&self, datum: Option<&DatumDecl>) -> Result<(), CliError> {
        self.require_support()?;
        self.require_grid()?;
        self.require_datum(datum)
    }

    fn require_centers(&self, centers: &CentersDecl) -> Result<(), CliError> {
        let built = centers.build();
        let dim = self.scenario.equation.dim();
        if built.is_empty() {
            return Err(self.config_error("experiment.centers", "centre schedule is empty"));
        }
        if built.iter().any(|c| c.len() != dim) {
            return Err(self.config_error("experiment.centers", format!("every centre needs {dim} coordinates")));
        }
        Ok(())
    }

    /// Core error raised while building the object declared at `field`.
    fn wrap(&self, field: &str, e: hypoctl_core::Error) -> CliError {
        self.config_error(field, e.to_string())
    }

    pub fn family(&self, horizon: f64) -> Result<SymbolFamily, CliError> {
        let built = match &self.scenario.equation {
            EquationDecl::Heat { dim, .. } => SymbolFamily::heat(*dim, horizon),
            EquationDecl::Constant { q, .. } => {
                hypoctl_core::flows_kalman::MatrixPair::from_rows(q, &vec![vec![0.0; q.len()]; q.len()])
                    .and_then(|p| SymbolFamily::constant(p.q().clone(), horizon))
            }
            EquationDecl::Polynomial { coeffs, .. } => SymbolFamily::polynomial(coeffs.clone(), horizon),
            EquationDecl::Ou { q, b, .. } => MatrixPair::from_rows(q, b).and_then(|p| SymbolFamily::ou(p, horizon)),
            EquationDecl::Fractional { s, dim, .. } => SymbolFamily::fractional(*s, *dim, horizon),
        };
        built.map_err(|e| self.wrap("equation", e))
    }

    pub fn pair(&self) -> Result<MatrixPair, CliError> {
        match &self.scenario.equation {
            EquationDecl::Ou { q, b, .. } => MatrixPair::from_rows(q, b).map_err(|e| self.wrap("equation", e)),
            _ => Err(self.config_error("equation.kind", "a matrix pair needs an `ou` equation")),
        }
    }

    pub fn support(&self, horizon: f64) -> Result<MovingSupport, CliError> {
        let decl = self
            .scenario
            .support
            .as_ref()
            .ok_or_else(|| self.config_error("support", "missing"))?;
        MovingSupport::new(decl.kind(), horizon, self.scenario.equation.dim()).map_err(|e| self.wrap("support", e))
    }

    pub fn grid(&self) -> Result<GridSpec, CliError> {
        let g = self
            .scenario
            .grid
            .as_ref()
            .ok_or_else(|| self.config_error("grid", "missing"))?;
        GridSpec::new(self.scenario.equation.dim(), g.half_width, g.points).map_err(|e| self.wrap("grid", e))
    }

    pub fn datum(&self, decl: Option<&DatumDecl>, grid: GridSpec) -> Result<SpectralField, CliError> {
        let d = decl.ok_or_else(|| self.config_error("experiment.datum", "missing"))?;
        d.build(grid).map_err(|e| self.wrap("experiment.datum", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"

[equation]
kind = "heat"
dim = 1
horizon = 1.0

[experiment]
kind = "fdb"
"#;

    #[test]
    fn minimal_scenario_parses() {
        let s = LoadedScenario::parse("mem", MINIMAL).unwrap();
        assert_eq!(s.scenario.experiment.name(), "fdb");
        assert_eq!(s.config_hash().len(), 64);
    }

    #[test]
    fn negative_horizon_points_at_its_line() {
        let src = MINIMAL.replace("horizon = 1.0", "horizon = -2.0");
        match LoadedScenario::parse("mem", &src) {
            Err(CliError::Config { line, field, .. }) => {
                assert_eq!(field, "equation.horizon");
                assert_eq!(line, Some(7));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let src = MINIMAL.replace("dim = 1", "dim = 1\nhorizn = 3.0");
        match LoadedScenario::parse("mem", &src) {
            Err(CliError::Config { line, message, .. }) => {
                assert!(line.is_some());
                assert!(message.contains("horizn"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn locate_finds_keys_and_headers() {
        assert_eq!(locate(MINIMAL, "equation.dim"), Some(6));
        assert_eq!(locate(MINIMAL, "name"), Some(2));
        assert_eq!(locate(MINIMAL, "experiment.missing"), Some(9));
    }

    #[test]
    fn centres_concatenate() {
        let c = CentersDecl {
            points: vec![vec![1.0, 1.0]],
            ring: 4,
            ring_distance: 2.0,
            lattice: 2,
            lattice_extent: 1.0,
            ray_step: vec![1.0, 0.5],
            ray_count: 3,
        };
        let built = c.build();
        assert_eq!(built.len(), 1 + 4 + 4 + 3);
        assert_eq!(built.last().unwrap(), &vec![3.0, 1.5]);
    }
}
