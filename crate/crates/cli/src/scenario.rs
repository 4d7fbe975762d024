//! Scenario files: TOML with a few fixed sections, validated into [`Scenario`].
//!
//! ```toml
//! mode = "canonical4d"          # canonical4d | gauge4d | reference3d | compare | quantum
//! dt = 1e-3
//! n_steps = 1000
//! output = "trajectory.csv"
//!
//! [units]                       # optional; defaults c = 1, hbar = 1
//! c = 1.0
//! hbar = 1.0
//!
//! [model]                       # free_nonrel | relativistic | charged_canonical | optics_ray
//! name = "free_nonrel"
//! mass = 1.0                    # default 1
//! charge = 1.0                  # default 1
//!
//! [potential]                   # zero | uniform | linear | harmonic | driven | ramp
//! kind = "harmonic"
//! stiffness = 1.0
//!
//! [initial]
//! t0 = 0.0
//! r = [1.0, 0.0, 0.0]
//! p = [0.0, 0.0, 0.0]
//! ```
//!
//! `[field]` (uniform_e | uniform_b | crossed | ramp_e) is required by
//! `gauge4d` and by the `charged_canonical` model; `[index]`
//! (uniform | linear_gradient) by `optics_ray`; `[packet]` and optional
//! `[grid]` by `quantum`.

use std::fmt;
use std::path::PathBuf;

use hamflow::quantum::Stencil;
use hamflow::{FieldConfig, IndexField, Potential, Vec3};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Canonical4d,
    Gauge4d,
    Reference3d,
    Compare,
    Quantum,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Canonical4d => "canonical4d",
            Self::Gauge4d => "gauge4d",
            Self::Reference3d => "reference3d",
            Self::Compare => "compare",
            Self::Quantum => "quantum",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "canonical4d" => Self::Canonical4d,
            "gauge4d" => Self::Gauge4d,
            "reference3d" => Self::Reference3d,
            "compare" => Self::Compare,
            "quantum" => Self::Quantum,
            _ => return None,
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const MODEL_NAMES: [&str; 4] = ["free_nonrel", "relativistic", "charged_canonical", "optics_ray"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    FreeNonRel,
    Relativistic,
    ChargedCanonical,
    OpticsRay,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FreeNonRel => "free_nonrel",
            Self::Relativistic => "relativistic",
            Self::ChargedCanonical => "charged_canonical",
            Self::OpticsRay => "optics_ray",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "free_nonrel" => Self::FreeNonRel,
            "relativistic" => Self::Relativistic,
            "charged_canonical" => Self::ChargedCanonical,
            "optics_ray" => Self::OpticsRay,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Initial {
    pub t0: f64,
    pub r: Vec3,
    pub p: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub x0: f64,
    pub k0: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub stencil: Stencil,
}

impl Default for Grid {
    fn default() -> Self {
        Self { points: 2048, x_min: -40.0, x_max: 40.0, stencil: Stencil::default() }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub mode: Mode,
    pub model: ModelKind,
    pub c: f64,
    pub hbar: f64,
    pub mass: f64,
    pub charge: f64,
    pub potential: Potential,
    pub index: Option<IndexField>,
    pub field: Option<FieldConfig>,
    pub initial: Option<Initial>,
    pub packet: Option<Packet>,
    pub grid: Grid,
    pub dt: f64,
    pub n_steps: usize,
    pub output: PathBuf,
    /// Deviation bound checked in `compare` mode.
    pub tolerance: f64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

impl ScenarioError {
    pub fn messages(&self) -> Vec<String> {
        match self {
            Self::Syntax(m) => vec![m.clone()],
            Self::Invalid(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    mode: Option<String>,
    dt: Option<f64>,
    n_steps: Option<i64>,
    output: Option<PathBuf>,
    tolerance: Option<f64>,
    units: Option<RawUnits>,
    model: Option<RawModel>,
    potential: Option<RawPotential>,
    index: Option<RawIndex>,
    field: Option<RawField>,
    initial: Option<RawInitial>,
    packet: Option<RawPacket>,
    grid: Option<RawGrid>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnits {
    c: Option<f64>,
    hbar: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: Option<String>,
    mass: Option<f64>,
    charge: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    kind: String,
    value: Option<f64>,
    force: Option<[f64; 3]>,
    stiffness: Option<f64>,
    amplitude: Option<f64>,
    omega: Option<f64>,
    rate: Option<f64>,
    direction: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndex {
    kind: String,
    n0: Option<f64>,
    alpha: Option<f64>,
    direction: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    kind: String,
    e: Option<[f64; 3]>,
    b: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    t0: Option<f64>,
    r: Option<[f64; 3]>,
    p: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPacket {
    x0: Option<f64>,
    k0: Option<f64>,
    sigma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    points: Option<i64>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    stencil: Option<u32>,
}

/// Collects validation messages.
#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn require<T>(&mut self, v: Option<T>, what: &str) -> Option<T> {
        if v.is_none() {
            self.push(format!("missing required field `{what}`"));
        }
        v
    }

    fn finite(&mut self, v: f64, what: &str) -> f64 {
        if !v.is_finite() {
            self.push(format!("`{what}` must be finite"));
        }
        v
    }

    fn positive(&mut self, v: f64, what: &str) -> f64 {
        if !(v > 0.0 && v.is_finite()) {
            self.push(format!("`{what}` must be positive"));
        }
        v
    }

    fn vec3(&mut self, v: [f64; 3], what: &str) -> Vec3 {
        if v.iter().any(|c| !c.is_finite()) {
            self.push(format!("`{what}` must have finite components"));
        }
        Vec3::from(v)
    }
}

fn unit_direction(p: &mut Problems, d: Option<[f64; 3]>, what: &str) -> Vec3 {
    let v = p.vec3(d.unwrap_or([1.0, 0.0, 0.0]), what);
    let n = v.norm();
    if !(n > 0.0) {
        p.push(format!("`{what}` must be non-zero"));
        return Vec3::x();
    }
    v / n
}

fn potential(p: &mut Problems, raw: &RawPotential) -> Potential {
    let need = |p: &mut Problems, v: Option<f64>, key: &str| -> f64 {
        p.require(v, &format!("potential.{key}")).map(|v| p.finite(v, &format!("potential.{key}"))).unwrap_or(0.0)
    };
    match raw.kind.as_str() {
        "zero" => Potential::Zero,
        "uniform" => Potential::Uniform(need(p, raw.value, "value")),
        "linear" => match p.require(raw.force, "potential.force") {
            Some(f) => Potential::Linear { force: p.vec3(f, "potential.force") },
            None => Potential::Zero,
        },
        "harmonic" => Potential::Harmonic { stiffness: need(p, raw.stiffness, "stiffness") },
        "driven" => Potential::Driven {
            amplitude: need(p, raw.amplitude, "amplitude"),
            omega: need(p, raw.omega, "omega"),
            direction: unit_direction(p, raw.direction, "potential.direction"),
        },
        "ramp" => Potential::Ramp {
            rate: need(p, raw.rate, "rate"),
            direction: unit_direction(p, raw.direction, "potential.direction"),
        },
        other => {
            p.push(format!(
                "unknown potential kind `{other}` (expected zero, uniform, linear, harmonic, driven, ramp)"
            ));
            Potential::Zero
        }
    }
}

fn index(p: &mut Problems, raw: &RawIndex) -> IndexField {
    match raw.kind.as_str() {
        "uniform" => IndexField::Uniform(
            p.require(raw.n0, "index.n0").map(|v| p.positive(v, "index.n0")).unwrap_or(1.0),
        ),
        "linear_gradient" => IndexField::LinearGradient {
            n0: p.require(raw.n0, "index.n0").map(|v| p.positive(v, "index.n0")).unwrap_or(1.0),
            alpha: p.require(raw.alpha, "index.alpha").map(|v| p.finite(v, "index.alpha")).unwrap_or(0.0),
            direction: unit_direction(p, raw.direction, "index.direction"),
        },
        other => {
            p.push(format!("unknown index kind `{other}` (expected uniform, linear_gradient)"));
            IndexField::Uniform(1.0)
        }
    }
}

fn field(p: &mut Problems, raw: &RawField) -> FieldConfig {
    let mut vec = |v: Option<[f64; 3]>, key: &str| -> Vec3 {
        p.require(v, &format!("field.{key}")).map(|v| p.vec3(v, &format!("field.{key}"))).unwrap_or_default()
    };
    match raw.kind.as_str() {
        "uniform_e" => FieldConfig::UniformE(vec(raw.e, "e")),
        "uniform_b" => FieldConfig::UniformB(vec(raw.b, "b")),
        "crossed" => {
            let electric = vec(raw.e, "e");
            let magnetic = vec(raw.b, "b");
            FieldConfig::Crossed { electric, magnetic }
        }
        "ramp_e" => FieldConfig::RampE(vec(raw.e, "e")),
        other => {
            p.push(format!("unknown field kind `{other}` (expected uniform_e, uniform_b, crossed, ramp_e)"));
            FieldConfig::UniformE(Vec3::zeros())
        }
    }
}

/// Parses and validates a scenario, reporting every problem found.
pub fn parse_scenario(text: &[u8]) -> Result<Scenario, ScenarioError> {
    let text = std::str::from_utf8(text).map_err(|e| ScenarioError::Syntax(format!("not UTF-8: {e}")))?;
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    let mut p = Problems::default();

    let mode = match p.require(raw.mode.as_deref(), "mode") {
        Some(m) => Mode::parse(m).or_else(|| {
            p.push(format!("unknown mode `{m}` (expected canonical4d, gauge4d, reference3d, compare, quantum)"));
            None
        }),
        None => None,
    };

    let dt = match p.require(raw.dt, "dt") {
        Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
            p.push("dt must be positive");
            dt
        }
        Some(dt) => dt,
        None => 0.0,
    };
    let n_steps = match p.require(raw.n_steps, "n_steps") {
        Some(n) if n < 1 => {
            p.push("n_steps must be at least 1");
            0
        }
        Some(n) => n as usize,
        None => 0,
    };
    let output = p.require(raw.output, "output").unwrap_or_default();
    let tolerance = raw.tolerance.map(|t| p.positive(t, "tolerance")).unwrap_or(1e-10);

    let (c, hbar) = match &raw.units {
        Some(u) => (
            u.c.map(|v| p.positive(v, "units.c")).unwrap_or(1.0),
            u.hbar.map(|v| p.positive(v, "units.hbar")).unwrap_or(1.0),
        ),
        None => (1.0, 1.0),
    };

    let (model_name, mass, charge) = match &raw.model {
        Some(m) => (
            m.name.clone(),
            m.mass.map(|v| p.finite(v, "model.mass")).unwrap_or(1.0),
            m.charge.map(|v| p.finite(v, "model.charge")).unwrap_or(1.0),
        ),
        None => (None, 1.0, 1.0),
    };
    let model = match (mode, model_name) {
        (_, Some(name)) => ModelKind::parse(&name).unwrap_or_else(|| {
            p.push(format!("unknown model `{name}` (expected one of {})", MODEL_NAMES.join(", ")));
            ModelKind::FreeNonRel
        }),
        (Some(Mode::Quantum), None) => ModelKind::FreeNonRel,
        (_, None) => {
            p.push("missing required field `model.name`");
            ModelKind::FreeNonRel
        }
    };
    if !(mass > 0.0) && model != ModelKind::OpticsRay {
        p.push("`model.mass` must be positive");
    }

    let potential = raw.potential.as_ref().map(|r| potential(&mut p, r)).unwrap_or_default();
    let index = raw.index.as_ref().map(|r| index(&mut p, r));
    let field = raw.field.as_ref().map(|r| field(&mut p, r));
    let initial = raw.initial.as_ref().map(|r| Initial {
        t0: r.t0.map(|v| p.finite(v, "initial.t0")).unwrap_or(0.0),
        r: p.require(r.r, "initial.r").map(|v| p.vec3(v, "initial.r")).unwrap_or_default(),
        p: p.require(r.p, "initial.p").map(|v| p.vec3(v, "initial.p")).unwrap_or_default(),
    });
    let packet = raw.packet.as_ref().map(|r| Packet {
        x0: p.require(r.x0, "packet.x0").map(|v| p.finite(v, "packet.x0")).unwrap_or(0.0),
        k0: p.require(r.k0, "packet.k0").map(|v| p.finite(v, "packet.k0")).unwrap_or(0.0),
        sigma: p.require(r.sigma, "packet.sigma").map(|v| p.positive(v, "packet.sigma")).unwrap_or(1.0),
    });
    let grid = match &raw.grid {
        None => Grid::default(),
        Some(g) => {
            let d = Grid::default();
            let points = match g.points {
                Some(n) if n < 16 => {
                    p.push("grid.points must be at least 16");
                    d.points
                }
                Some(n) => n as usize,
                None => d.points,
            };
            let x_min = g.x_min.map(|v| p.finite(v, "grid.x_min")).unwrap_or(d.x_min);
            let x_max = g.x_max.map(|v| p.finite(v, "grid.x_max")).unwrap_or(d.x_max);
            if !(x_max > x_min) {
                p.push("grid.x_max must exceed grid.x_min");
            }
            let stencil = match g.stencil {
                None | Some(6) => Stencil::Sixth,
                Some(4) => Stencil::Fourth,
                Some(o) => {
                    p.push(format!("grid.stencil must be 4 or 6, got {o}"));
                    Stencil::Sixth
                }
            };
            Grid { points, x_min, x_max, stencil }
        }
    };

    if let Some(mode) = mode {
        match mode {
            Mode::Quantum => {
                if packet.is_none() {
                    p.push("mode `quantum` requires a [packet] section");
                }
                if model != ModelKind::FreeNonRel {
                    p.push("mode `quantum` supports only model `free_nonrel`");
                }
            }
            _ => {
                if initial.is_none() {
                    p.push(format!("mode `{mode}` requires an [initial] section"));
                }
            }
        }
        if mode == Mode::Gauge4d {
            if field.is_none() {
                p.push("mode `gauge4d` requires a [field] section");
            }
            if !matches!(model, ModelKind::FreeNonRel | ModelKind::Relativistic) {
                p.push("mode `gauge4d` needs a kinetic model (`free_nonrel` or `relativistic`)");
            }
            if !matches!(potential, Potential::Zero) {
                p.push("mode `gauge4d` needs a potential-free model; remove [potential]");
            }
        }
    }
    if model == ModelKind::ChargedCanonical && field.is_none() {
        p.push("model `charged_canonical` requires a [field] section");
    }
    if model == ModelKind::OpticsRay && index.is_none() {
        p.push("model `optics_ray` requires an [index] section");
    }

    if !p.0.is_empty() {
        return Err(ScenarioError::Invalid(p.0));
    }
    Ok(Scenario {
        mode: mode.expect("validated"),
        model,
        c,
        hbar,
        mass,
        charge,
        potential,
        index,
        field,
        initial,
        packet,
        grid,
        dt,
        n_steps,
        output,
        tolerance,
    })
}
