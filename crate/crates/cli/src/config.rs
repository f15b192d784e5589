//! Experiment configuration: strict JSON, layered as scenario defaults < file < overrides.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SCHEMA: &str = include_str!("../schema/config.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Quantization,
    KuboVsCurvatureBulk,
    KuboVsCurvatureTraverse,
    KuboVsCurvatureDeformed,
    AdiabaticVsKubo,
    Emf,
    GaugeInvariance,
    LimitCommutation,
    Locality,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Quantization,
        Scenario::KuboVsCurvatureBulk,
        Scenario::KuboVsCurvatureTraverse,
        Scenario::KuboVsCurvatureDeformed,
        Scenario::AdiabaticVsKubo,
        Scenario::Emf,
        Scenario::GaugeInvariance,
        Scenario::LimitCommutation,
        Scenario::Locality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Quantization => "quantization",
            Scenario::KuboVsCurvatureBulk => "kubo-vs-curvature-bulk",
            Scenario::KuboVsCurvatureTraverse => "kubo-vs-curvature-traverse",
            Scenario::KuboVsCurvatureDeformed => "kubo-vs-curvature-deformed",
            Scenario::AdiabaticVsKubo => "adiabatic-vs-kubo",
            Scenario::Emf => "emf",
            Scenario::GaugeInvariance => "gauge-invariance",
            Scenario::LimitCommutation => "limit-commutation",
            Scenario::Locality => "locality",
        }
    }

    pub fn from_name(name: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.name() == name)
    }

    /// The statement the scenario instantiates.
    pub fn statement(self) -> &'static str {
        match self {
            Scenario::Quantization => "Hall conductance quantization: 2πκ approaches the Chern integer of the filled bands",
            Scenario::KuboVsCurvatureBulk => {
                "Bulk Hall response: the Kubo response of a bulk current to a uniform field equals κ up to O(1/d)"
            }
            Scenario::KuboVsCurvatureTraverse => {
                "Traversing Hall response: the Kubo response of a current crossing a potential step equals κ·Δv"
            }
            Scenario::KuboVsCurvatureDeformed => {
                "Deformation invariance: bending the current path away from the step leaves the Hall response unchanged"
            }
            Scenario::AdiabaticVsKubo => {
                "Adiabatic response equals the static Kubo response for a globally exact drive"
            }
            Scenario::Emf => "Adiabatic current driven by an emf equals κ times the emf",
            Scenario::GaugeInvariance => "Gauge invariance of the adiabatic curvature under exact shifts of the twist forms",
            Scenario::LimitCommutation => {
                "Regularized Kubo response converges linearly in ε and the ε → 0 limit commutes with the volume"
            }
            Scenario::Locality => "Locality of the Kubo response: truncating the perturbation far from the current costs O(r^−∞)",
        }
    }

    /// Keys (dotted) that the scenario reads; echoed into the report.
    pub fn relevant_keys(self) -> &'static [&'static str] {
        match self {
            Scenario::Quantization => &["model", "numerics.sizes", "numerics.family", "numerics.filled_bands", "numerics.band_grid", "numerics.chern_grid", "numerics.tolerances.quantization"],
            Scenario::KuboVsCurvatureBulk => &["model", "geometry.e", "numerics.d_values", "numerics.tolerances.halving_factor"],
            Scenario::KuboVsCurvatureTraverse => &["model", "geometry.e", "geometry.ell", "geometry.r", "numerics.sizes", "numerics.family", "numerics.filled_bands", "numerics.tolerances.traverse"],
            Scenario::KuboVsCurvatureDeformed => &["model", "geometry.e", "geometry.ell", "geometry.r", "geometry.bump", "numerics.sizes", "numerics.family", "numerics.filled_bands", "numerics.tolerances.deformed", "numerics.tolerances.spectral"],
            Scenario::AdiabaticVsKubo => &["model", "geometry.path", "geometry.drive", "numerics.eps_ladder", "numerics.refined_ladder", "numerics.seed", "numerics.dynamics", "numerics.tolerances.spectral"],
            Scenario::Emf => &["model", "geometry.path", "geometry.drive", "geometry.r", "numerics.eps_ladder", "numerics.seed", "numerics.dynamics", "numerics.tolerances.emf"],
            Scenario::GaugeInvariance => &["model", "numerics.many_body_sizes", "numerics.sizes", "numerics.family", "numerics.filled_bands", "numerics.samples", "numerics.theta_amplitude", "numerics.seed", "numerics.tolerances.exact"],
            Scenario::LimitCommutation => &["model", "geometry.e", "geometry.ell", "geometry.d", "numerics.many_body_sizes", "numerics.family", "numerics.filled_bands", "numerics.gap_fractions", "numerics.seed", "numerics.tolerances.constant_spread"],
            Scenario::Locality => &["model", "geometry.e", "geometry.ell", "geometry.d", "numerics.radii", "numerics.tolerances.noise_floor", "numerics.tolerances.exact"],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub l: usize,
    pub n: usize,
    pub t: f64,
    pub flux: Flux,
    pub u: f64,
    pub mu: f64,
    pub disorder: Disorder,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            l: 4,
            n: 4,
            t: 1.0,
            flux: Flux { p: 1, q: 4 },
            u: 0.0,
            mu: 0.0,
            disorder: Disorder::default(),
        }
    }
}

/// Flux `2πp/q` per plaquette.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flux {
    pub p: i64,
    pub q: usize,
}

/// Seeded on-site potential, uniform in `[-amplitude/2, amplitude/2]`; part of the physical model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Disorder {
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Field strength of the strip potentials.
    pub e: f64,
    pub ell: usize,
    pub d: usize,
    pub r: usize,
    pub bump: Bump,
    pub path: PathSpec,
    pub drive: DriveSpec,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            e: 1.0,
            ell: 1,
            d: 1,
            r: 1,
            bump: Bump::default(),
            path: PathSpec::Segment { d: 1 },
            drive: DriveSpec::RandomExact { amplitude: 0.4 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bump {
    pub half_width: usize,
    pub height: usize,
}

impl Default for Bump {
    fn default() -> Self {
        Bump { half_width: 0, height: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathSpec {
    /// `γ_d`: `2d` East steps from the dual vertex `(−d, 0)`.
    Segment { d: usize },
    /// First loop of the boundary of `{x₁ ≤ 0}`.
    HalfTorusBoundary {},
    /// Steps over `E`, `N`, `W`, `S` from the dual vertex `start`.
    Steps { start: [i64; 2], steps: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriveSpec {
    /// `A = dθ` with `θ(x)` uniform in `[−amplitude, amplitude]`, drawn from `numerics.seed`.
    RandomExact { amplitude: f64 },
    /// `A = strength · ξ_direction`.
    Flux { direction: u8, strength: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Flux `p/q` from the model block, `N = filled_bands · L²/q`.
    FixedDensity,
    /// Flux `1/L`, `N = filled_bands · L`.
    SingleFluxQuantum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Free-fermion sweep sizes.
    pub sizes: Vec<usize>,
    /// Many-body sweep sizes.
    pub many_body_sizes: Vec<usize>,
    pub family: Family,
    pub filled_bands: usize,
    /// Magnetic Brillouin-zone grid of the band Chern oracle.
    pub band_grid: usize,
    /// Flux-torus grid of the many-body Chern number; 0 skips it.
    pub chern_grid: usize,
    pub d_values: Vec<usize>,
    pub eps_ladder: Vec<f64>,
    pub refined_ladder: Vec<f64>,
    /// Kubo regulators as fractions of the gap.
    pub gap_fractions: Vec<f64>,
    pub radii: Vec<f64>,
    pub samples: usize,
    pub theta_amplitude: f64,
    pub gap_floor: f64,
    /// Largest sector dimension that may be built.
    pub basis_cap: usize,
    /// Largest dimension decomposed densely.
    pub dense_cap: usize,
    /// Drives the randomized inputs only.
    pub seed: u64,
    pub dynamics: DynamicsConfig,
    pub tolerances: Tolerances,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            sizes: vec![4, 8, 12],
            many_body_sizes: vec![3, 4],
            family: Family::FixedDensity,
            filled_bands: 1,
            band_grid: 24,
            chern_grid: 0,
            d_values: vec![1, 2, 4],
            eps_ladder: vec![0.05, 0.025, 0.0125, 0.00625],
            refined_ladder: vec![0.025, 0.0125, 0.00625, 0.003125],
            gap_fractions: vec![0.25, 0.125, 0.0625],
            radii: vec![0.0, 1.0, 2.0],
            samples: 6,
            theta_amplitude: 0.1,
            gap_floor: 1e-6,
            basis_cap: 200_000,
            dense_cap: 4000,
            seed: 7,
            dynamics: DynamicsConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub switching_width: f64,
    /// Time step as a fraction of `1/‖H‖`.
    pub dt_scale: f64,
    pub krylov_dim: usize,
    pub norm_bound: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            switching_width: 1.0,
            dt_scale: 0.05,
            krylov_dim: 24,
            norm_bound: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Bound on `|2πκ − n|`.
    pub quantization: f64,
    /// Bound on the relative traversing discrepancy.
    pub traverse: f64,
    /// Bound on the relative deformed-path discrepancy.
    pub deformed: f64,
    /// Discrepancy ratio under doubling must lie in `[2/f, 2f]`.
    pub halving_factor: f64,
    /// Bound on `max C / min C` for `|χ(ε) − χ(0)| ≤ Cε`.
    pub constant_spread: f64,
    /// Bound on the relative emf discrepancy.
    pub emf: f64,
    /// Identities expected to hold to rounding.
    pub exact: f64,
    /// Identities evaluated through separate spectral decompositions.
    pub spectral: f64,
    /// Allowed increase between consecutive entries of a decaying sequence.
    pub noise_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quantization: 0.15,
            traverse: 0.30,
            deformed: 0.05,
            halving_factor: 2.0,
            constant_spread: 2.0,
            emf: 0.1,
            exact: 1e-12,
            spectral: 1e-10,
            noise_floor: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub plots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigError {
    /// Dotted path of the offending key, when one can be named.
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        ConfigError {
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{k}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Scenario defaults layered under the file; only keys that differ from the struct defaults.
pub fn scenario_defaults(s: Scenario) -> Value {
    use serde_json::json;
    match s {
        Scenario::Quantization => json!({
            "model": {"l": 4, "n": 4, "flux": {"p": 1, "q": 4}},
            "numerics": {"sizes": [4, 8, 12], "family": "fixed-density", "chern_grid": 0}
        }),
        Scenario::KuboVsCurvatureBulk => json!({
            "model": {"l": 32, "n": 256, "flux": {"p": 1, "q": 4}},
            "numerics": {"d_values": [1, 2, 4]}
        }),
        Scenario::KuboVsCurvatureTraverse => json!({
            "model": {"l": 4, "n": 4, "flux": {"p": 1, "q": 4}},
            "geometry": {"ell": 1, "r": 1},
            "numerics": {"sizes": [8, 12, 16, 20, 24]}
        }),
        Scenario::KuboVsCurvatureDeformed => json!({
            "model": {"l": 4, "n": 4, "flux": {"p": 1, "q": 4}},
            "geometry": {"ell": 1, "r": 3, "bump": {"half_width": 0, "height": 2}},
            "numerics": {"sizes": [8, 12, 16, 20, 24]}
        }),
        Scenario::AdiabaticVsKubo => json!({
            "model": {"l": 3, "n": 2, "flux": {"p": 1, "q": 3}, "u": 0.5, "disorder": {"amplitude": 2.0, "seed": 9}},
            "geometry": {"path": {"kind": "segment", "d": 1}, "drive": {"kind": "random-exact", "amplitude": 0.4}},
            "numerics": {"seed": 7}
        }),
        Scenario::Emf => json!({
            "model": {"l": 3, "n": 3, "flux": {"p": 1, "q": 3}, "u": 0.5, "disorder": {"amplitude": 0.5, "seed": 1}},
            "geometry": {"r": 0, "path": {"kind": "half-torus-boundary"}, "drive": {"kind": "flux", "direction": 2, "strength": 0.3}},
            "numerics": {"eps_ladder": [0.1, 0.05, 0.025, 0.0125]}
        }),
        Scenario::GaugeInvariance => json!({
            "model": {"l": 3, "n": 3, "flux": {"p": 1, "q": 3}, "u": 0.5, "disorder": {"amplitude": 0.5, "seed": 1}},
            "numerics": {"many_body_sizes": [3, 4], "sizes": [3, 4, 5, 6, 7, 8], "family": "single-flux-quantum"}
        }),
        Scenario::LimitCommutation => json!({
            "model": {"l": 3, "n": 3, "flux": {"p": 1, "q": 3}, "u": 0.5, "disorder": {"amplitude": 0.5, "seed": 1}},
            "geometry": {"ell": 1, "d": 1},
            "numerics": {"many_body_sizes": [3, 4], "family": "single-flux-quantum"}
        }),
        Scenario::Locality => json!({
            "model": {"l": 6, "n": 12, "flux": {"p": 1, "q": 3}},
            "geometry": {"ell": 2, "d": 1},
            "numerics": {"radii": [0.0, 1.0, 2.0]}
        }),
    }
}

/// Deep merge: objects merge key-wise, everything else is replaced.
pub fn merge(base: &mut Value, top: &Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() && !is_tagged(v) => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, t) => *b = t.clone(),
    }
}

/// Tagged unions are replaced whole so a new `kind` does not inherit stale fields.
fn is_tagged(v: &Value) -> bool {
    v.get("kind").is_some()
}

/// Parses `key=value`; the value is JSON when it parses as JSON, a string otherwise.
pub fn parse_override(spec: &str) -> Result<(String, Value), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::general(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::general(format!("override `{spec}` has an empty key segment")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

pub fn apply_override(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::at(parts[..i].join("."), "override descends into a non-object"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("override keys have at least one segment")
}

/// Resolved configuration and the merged JSON it came from.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub merged: Value,
}

pub fn load_file(path: &Path, overrides: &[(String, Value)]) -> Result<Loaded, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
    load_str(&text, overrides)
}

pub fn load_str(text: &str, overrides: &[(String, Value)]) -> Result<Loaded, ConfigError> {
    let file: Value = serde_json::from_str(text).map_err(|e| ConfigError::general(format!("invalid JSON: {e}")))?;
    load_value(file, overrides)
}

pub fn load_value(file: Value, overrides: &[(String, Value)]) -> Result<Loaded, ConfigError> {
    let mut layered = file;
    if !layered.is_object() {
        return Err(ConfigError::general("configuration must be a JSON object"));
    }
    for (k, v) in overrides {
        apply_override(&mut layered, k, v.clone())?;
    }
    let scenario = match layered.get("scenario") {
        None => return Err(ConfigError::at("scenario", "missing required key")),
        Some(Value::String(s)) => Scenario::from_name(s).ok_or_else(|| {
            let known: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
            ConfigError::at("scenario", format!("unknown scenario `{s}`; expected one of {}", known.join(", ")))
        })?,
        Some(other) => return Err(ConfigError::at("scenario", format!("expected a string, got {other}"))),
    };
    let mut merged = scenario_defaults(scenario);
    merge(&mut merged, &layered);
    let config: ExperimentConfig = serde_path_to_error::deserialize(&merged).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let key = unknown_field_key(&path, &inner).unwrap_or(path);
        ConfigError::at(key, inner)
    })?;
    validate(&config)?;
    Ok(Loaded { config, merged })
}

/// Names the unknown field itself; the reported path may stop at its parent.
fn unknown_field_key(path: &str, message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    let field = &rest[..rest.find('`')?];
    Some(if path == "." || path.is_empty() {
        field.to_string()
    } else if path.rsplit('.').next() == Some(field) {
        path.to_string()
    } else {
        format!("{path}.{field}")
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_ladder(key: &str, eps: &[f64]) -> Result<(), ConfigError> {
    hall_core::response::validate_ladder(eps).map_err(|e| ConfigError::at(key, e.to_string()))
}

fn check_positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(key, format!("must be positive and finite, got {v}")))
    }
}

fn check_finite(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(key, "must be finite"))
    }
}

/// Semantic checks the type system cannot express.
pub fn validate(c: &ExperimentConfig) -> Result<(), ConfigError> {
    let m = &c.model;
    if m.l < 2 {
        return Err(ConfigError::at("model.l", format!("lattice side must be at least 2, got {}", m.l)));
    }
    if m.n > m.l * m.l {
        return Err(ConfigError::at("model.n", format!("N = {} exceeds the {} sites", m.n, m.l * m.l)));
    }
    if m.flux.q == 0 || gcd(m.flux.p.unsigned_abs(), m.flux.q as u64) != 1 {
        return Err(ConfigError::at("model.flux", format!("flux {}/{} must be a reduced fraction with q ≥ 1", m.flux.p, m.flux.q)));
    }
    if m.t == 0.0 {
        return Err(ConfigError::at("model.t", "hopping must be nonzero"));
    }
    check_finite("model.t", m.t)?;
    check_finite("model.u", m.u)?;
    check_finite("model.mu", m.mu)?;
    if !(m.disorder.amplitude >= 0.0) || !m.disorder.amplitude.is_finite() {
        return Err(ConfigError::at("model.disorder.amplitude", "must be non-negative and finite"));
    }
    let g = &c.geometry;
    check_positive("geometry.e", g.e)?;
    if g.bump.height == 0 {
        return Err(ConfigError::at("geometry.bump.height", "bump height must be at least 1"));
    }
    if let PathSpec::Segment { d } = g.path {
        if d == 0 {
            return Err(ConfigError::at("geometry.path.d", "segment half-length must be at least 1"));
        }
    }
    if let PathSpec::Steps { steps, .. } = &g.path {
        if steps.is_empty() || steps.chars().any(|ch| !"ENWS".contains(ch)) {
            return Err(ConfigError::at("geometry.path.steps", "steps must be a non-empty string over E, N, W, S"));
        }
    }
    match g.drive {
        DriveSpec::RandomExact { amplitude } => check_finite("geometry.drive.amplitude", amplitude)?,
        DriveSpec::Flux { direction, strength } => {
            if direction != 1 && direction != 2 {
                return Err(ConfigError::at("geometry.drive.direction", format!("must be 1 or 2, got {direction}")));
            }
            check_finite("geometry.drive.strength", strength)?;
        }
    }
    let n = &c.numerics;
    for (i, &l) in n.sizes.iter().chain(&n.many_body_sizes).enumerate() {
        if l < 2 {
            let key = if i < n.sizes.len() { "numerics.sizes" } else { "numerics.many_body_sizes" };
            return Err(ConfigError::at(key, format!("lattice sides must be at least 2, got {l}")));
        }
    }
    if n.filled_bands == 0 {
        return Err(ConfigError::at("numerics.filled_bands", "must be at least 1"));
    }
    if n.band_grid < 2 {
        return Err(ConfigError::at("numerics.band_grid", "must be at least 2"));
    }
    if n.chern_grid == 1 {
        return Err(ConfigError::at("numerics.chern_grid", "must be 0 (skip) or at least 2"));
    }
    if n.d_values.contains(&0) {
        return Err(ConfigError::at("numerics.d_values", "entries must be at least 1"));
    }
    check_ladder("numerics.eps_ladder", &n.eps_ladder)?;
    check_ladder("numerics.refined_ladder", &n.refined_ladder)?;
    check_ladder("numerics.gap_fractions", &n.gap_fractions)?;
    if n.gap_fractions.iter().any(|&f| f > 1.0) {
        return Err(ConfigError::at("numerics.gap_fractions", "regulators must satisfy ε ≤ g"));
    }
    if n.radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(ConfigError::at("numerics.radii", "radii must be non-negative and finite"));
    }
    if n.samples == 0 {
        return Err(ConfigError::at("numerics.samples", "must be at least 1"));
    }
    check_positive("numerics.theta_amplitude", n.theta_amplitude)?;
    check_positive("numerics.gap_floor", n.gap_floor)?;
    if n.basis_cap == 0 {
        return Err(ConfigError::at("numerics.basis_cap", "must be positive"));
    }
    let d = &n.dynamics;
    if !(d.switching_width > 0.0 && d.switching_width <= 1.0) {
        return Err(ConfigError::at("numerics.dynamics.switching_width", "must lie in (0, 1]"));
    }
    check_positive("numerics.dynamics.dt_scale", d.dt_scale)?;
    check_positive("numerics.dynamics.norm_bound", d.norm_bound)?;
    if d.krylov_dim < 2 {
        return Err(ConfigError::at("numerics.dynamics.krylov_dim", "must be at least 2"));
    }
    let t = &n.tolerances;
    for (k, v) in [
        ("quantization", t.quantization),
        ("traverse", t.traverse),
        ("deformed", t.deformed),
        ("constant_spread", t.constant_spread),
        ("emf", t.emf),
        ("exact", t.exact),
        ("spectral", t.spectral),
    ] {
        check_positive(&format!("numerics.tolerances.{k}"), v)?;
    }
    if !(t.halving_factor >= 1.0) {
        return Err(ConfigError::at("numerics.tolerances.halving_factor", "must be at least 1"));
    }
    if !(t.noise_floor >= 0.0) {
        return Err(ConfigError::at("numerics.tolerances.noise_floor", "must be non-negative"));
    }
    Ok(())
}

/// Sub-tree of the merged configuration at a dotted key.
pub fn lookup<'a>(v: &'a Value, key: &str) -> Option<&'a Value> {
    key.split('.').try_fold(v, |node, part| node.get(part))
}

/// Inputs echo: the resolved values of the keys a scenario reads.
pub fn inputs_echo(c: &ExperimentConfig) -> Value {
    let full = serde_json::to_value(c).expect("configuration serializes");
    let mut out = Value::Object(Map::new());
    for key in c.scenario.relevant_keys() {
        if let Some(v) = lookup(&full, key) {
            apply_override(&mut out, key, v.clone()).expect("echo tree is an object");
        }
    }
    out
}
