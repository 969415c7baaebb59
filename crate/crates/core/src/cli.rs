//! Scenario runner.
//!
//! A scenario is a TOML file with a `[profile]` block, a `[quadrature]`
//! block, named `[fields.*]` test fields and a `[[studies]]` list. Studies
//! run in a fixed order by kind, config order within a kind, and each one
//! contributes a section of `report.json` and one or more CSV tables.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::geometry::{causally_separated, CausalRelation, Point4};
use crate::pairing::{huyghens_defects, limit_t_study, linear_fit, pairing_defects, ProbeKind, QuadratureSpec};
use crate::photon::{inner_product, PhotonWaveFunction, WaveFn};
use crate::profiles::{
    difference_norm_squared, pairwise_angular_factor, pairwise_shell_norm, shell_norm_squared, velocity_angular_factor,
    DressingParams, ProfileKind,
};
use crate::testfields::{photon_wavefunction, Channel, TestFieldPair};
use crate::wavecheck::{
    bj_support_check, lemma_a2_radius_check, outside_mass_fraction, symplectic_time_invariance, GridSpec, WaveSolution,
};
use crate::weyl::{
    adjoint, compose_difference, multiply, phase_distance, phase_shifts, CoherentAutomorphism, Label, LabelSpace,
    WeylElement,
};

pub const DEFAULT_CONFIG: &str = include_str!("../scenarios/default.toml");

/// Overrides `output_dir` when set.
pub const OUT_DIR_ENV: &str = "LIGHTCONE_OUT_DIR";

pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StudyKind {
    #[serde(rename = "ir-divergence")]
    IrDivergence,
    #[serde(rename = "superselection-slope")]
    SuperselectionSlope,
    #[serde(rename = "difference-norm")]
    DifferenceNorm,
    #[serde(rename = "huyghens")]
    Huyghens,
    #[serde(rename = "limit-T")]
    LimitT,
    #[serde(rename = "weyl-laws")]
    WeylLaws,
    #[serde(rename = "locality")]
    Locality,
    #[serde(rename = "wave-appendix")]
    WaveAppendix,
}

impl StudyKind {
    /// Execution order.
    pub const ALL: [StudyKind; 8] = [
        StudyKind::IrDivergence,
        StudyKind::SuperselectionSlope,
        StudyKind::DifferenceNorm,
        StudyKind::Huyghens,
        StudyKind::LimitT,
        StudyKind::WeylLaws,
        StudyKind::Locality,
        StudyKind::WaveAppendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::IrDivergence => "ir-divergence",
            StudyKind::SuperselectionSlope => "superselection-slope",
            StudyKind::DifferenceNorm => "difference-norm",
            StudyKind::Huyghens => "huyghens",
            StudyKind::LimitT => "limit-T",
            StudyKind::WeylLaws => "weyl-laws",
            StudyKind::Locality => "locality",
            StudyKind::WaveAppendix => "wave-appendix",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            StudyKind::IrDivergence => "shell norm of the limiting dressing against ln(1/sigma_lo), slope vs alpha*A(|w|)",
            StudyKind::SuperselectionSlope => "shell norm of v_w - v_w' against ln(1/sigma_lo), slope vs the angular integral",
            StudyKind::DifferenceNorm => "norm of v - v_hat above sigma_probe; convergent for g(0) = 1, growing otherwise",
            StudyKind::Huyghens => "Re<v_hat_T, f> for f in the forward cone of the origin",
            StudyKind::LimitT => "v_hat_T = v_hat + term2 + term3 paired with f for growing T",
            StudyKind::WeylLaws => "group law, involution, cocycle and automorphism identities on random labels",
            StudyKind::Locality => "sigma(f1, f2) for spacelike and timelike separated test fields",
            StudyKind::WaveAppendix => "wave solutions, symplectic invariance, magnetic support and localization radius",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub channel: Channel,
    pub direction: [f64; 3],
    /// `(t, x, y, z)`.
    pub center: [f64; 4],
    pub time_halfwidth: f64,
    pub space_radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl FieldConfig {
    pub fn build(&self) -> Result<TestFieldPair> {
        let [t, x, y, z] = self.center;
        TestFieldPair::single(
            self.channel,
            self.direction,
            Point4::new(t, [x, y, z]),
            self.time_halfwidth,
            self.space_radius,
            self.amplitude,
        )
    }
}

/// `count` values from `from` to `to`, evenly spaced in `ln`.
pub fn ln_spaced(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![from];
    }
    let (a, b) = (from.ln(), to.ln());
    let mut out: Vec<f64> = (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect();
    out[0] = from;
    out[count - 1] = to;
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrDivergence {
    pub name: Option<String>,
    pub velocity: [f64; 3],
    pub sigma_lo: Vec<f64>,
    pub tolerance: f64,
}

impl Default for IrDivergence {
    fn default() -> Self {
        Self { name: None, velocity: [0.0, 0.0, 0.3], sigma_lo: ln_spaced(1e-2, 1e-6, 9), tolerance: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuperselectionSlope {
    pub name: Option<String>,
    pub w: [f64; 3],
    pub w_prime: [f64; 3],
    pub sigma_lo: Vec<f64>,
    pub tolerance: f64,
}

impl Default for SuperselectionSlope {
    fn default() -> Self {
        Self {
            name: None,
            w: [0.0, 0.0, 0.3],
            w_prime: [0.2, 0.0, 0.1],
            sigma_lo: ln_spaced(1e-2, 1e-6, 9),
            tolerance: 0.02,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Convergent,
    Divergent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DifferenceNorm {
    pub name: Option<String>,
    pub sigma_probe: Vec<f64>,
    /// Replaces the profile's `bump_norm`.
    pub bump_norm: Option<f64>,
    pub expect: Expectation,
    pub tolerance: f64,
}

impl Default for DifferenceNorm {
    fn default() -> Self {
        Self {
            name: None,
            sigma_probe: vec![1e-2, 1e-4, 1e-6],
            bump_norm: None,
            expect: Expectation::Convergent,
            tolerance: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Huyghens {
    pub name: Option<String>,
    pub field: String,
    pub t_list: Vec<f64>,
    /// Also pair with `v̂` itself.
    pub include_limit: bool,
    pub tolerance: f64,
    /// Fields reported without a threshold; need not lie in the forward cone.
    pub contrast: Vec<String>,
}

impl Default for Huyghens {
    fn default() -> Self {
        Self {
            name: None,
            field: String::new(),
            t_list: vec![1.0, 10.0, 100.0],
            include_limit: true,
            tolerance: 1e-5,
            contrast: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitT {
    pub name: Option<String>,
    pub field: String,
    pub t_list: Vec<f64>,
    pub row_tolerance: f64,
    /// `[T_lo, T_hi]` over which `T |term3|` must stay within `term3_spread`.
    pub term3_window: [f64; 2],
    pub term3_spread: f64,
    /// Bound on `|term2(100)| / |term2(1)|`, checked when both are in `t_list`.
    pub term2_ratio: f64,
    /// `T` of the integration-region outline.
    pub region_t: f64,
}

impl Default for LimitT {
    fn default() -> Self {
        Self {
            name: None,
            field: String::new(),
            t_list: vec![1.0, 10.0, 30.0, 100.0, 300.0, 1000.0],
            row_tolerance: 1e-10,
            term3_window: [10.0, 1000.0],
            term3_spread: 10.0,
            term2_ratio: 0.05,
            region_t: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylLaws {
    pub name: Option<String>,
    pub basis: Vec<String>,
    /// Velocities of the two coherent automorphisms.
    pub velocities: [[f64; 3]; 2],
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for WeylLaws {
    fn default() -> Self {
        Self {
            name: None,
            basis: Vec::new(),
            velocities: [[0.0, 0.0, 0.3], [0.2, 0.0, 0.1]],
            samples: 100,
            seed: 7,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Locality {
    pub name: Option<String>,
    pub pairs: Vec<[String; 2]>,
    pub tolerance: f64,
}

impl Default for Locality {
    fn default() -> Self {
        Self { name: None, pairs: Vec::new(), tolerance: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub radius: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub time_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub field: String,
    pub t: f64,
    /// Replaces the profile velocity.
    #[serde(default)]
    pub velocity: Option<[f64; 3]>,
    #[serde(default = "lemma_tolerance")]
    pub tolerance: f64,
}

fn lemma_tolerance() -> f64 {
    1e-5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveAppendix {
    pub name: Option<String>,
    pub solution: WaveConfig,
    pub partner: WaveConfig,
    pub times: Vec<f64>,
    /// Bound on `|t + t₀| + ρ` for the spectral evaluation.
    pub reach: f64,
    pub drift_tolerance: f64,
    pub outside_tolerance: f64,
    /// Magnetic field at time 0 for the support check.
    pub support_field: Option<String>,
    /// `(probe radius / support radius, bound on the outside fraction)`.
    pub support_thresholds: Vec<[f64; 2]>,
    pub lemma: Option<LemmaConfig>,
}

impl Default for WaveAppendix {
    fn default() -> Self {
        Self {
            name: None,
            solution: WaveConfig { radius: 1.0, amplitude: 1.0, time_offset: 0.0 },
            partner: WaveConfig { radius: 0.7, amplitude: -0.5, time_offset: 0.3 },
            times: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            reach: 16.0,
            drift_tolerance: 1e-6,
            outside_tolerance: 1e-6,
            support_field: None,
            support_thresholds: vec![[1.0, 1e-4], [2.0, 1e-6]],
            lemma: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study")]
pub enum StudyConfig {
    #[serde(rename = "ir-divergence")]
    IrDivergence(IrDivergence),
    #[serde(rename = "superselection-slope")]
    SuperselectionSlope(SuperselectionSlope),
    #[serde(rename = "difference-norm")]
    DifferenceNorm(DifferenceNorm),
    #[serde(rename = "huyghens")]
    Huyghens(Huyghens),
    #[serde(rename = "limit-T")]
    LimitT(LimitT),
    #[serde(rename = "weyl-laws")]
    WeylLaws(WeylLaws),
    #[serde(rename = "locality")]
    Locality(Locality),
    #[serde(rename = "wave-appendix")]
    WaveAppendix(WaveAppendix),
}

impl StudyConfig {
    pub fn kind(&self) -> StudyKind {
        match self {
            StudyConfig::IrDivergence(_) => StudyKind::IrDivergence,
            StudyConfig::SuperselectionSlope(_) => StudyKind::SuperselectionSlope,
            StudyConfig::DifferenceNorm(_) => StudyKind::DifferenceNorm,
            StudyConfig::Huyghens(_) => StudyKind::Huyghens,
            StudyConfig::LimitT(_) => StudyKind::LimitT,
            StudyConfig::WeylLaws(_) => StudyKind::WeylLaws,
            StudyConfig::Locality(_) => StudyKind::Locality,
            StudyConfig::WaveAppendix(_) => StudyKind::WaveAppendix,
        }
    }

    fn explicit_name(&self) -> Option<&str> {
        match self {
            StudyConfig::IrDivergence(s) => s.name.as_deref(),
            StudyConfig::SuperselectionSlope(s) => s.name.as_deref(),
            StudyConfig::DifferenceNorm(s) => s.name.as_deref(),
            StudyConfig::Huyghens(s) => s.name.as_deref(),
            StudyConfig::LimitT(s) => s.name.as_deref(),
            StudyConfig::WeylLaws(s) => s.name.as_deref(),
            StudyConfig::Locality(s) => s.name.as_deref(),
            StudyConfig::WaveAppendix(s) => s.name.as_deref(),
        }
    }

    /// The explicit name, or the kind's name.
    pub fn name(&self) -> &str {
        self.explicit_name().unwrap_or(self.kind().name())
    }

    fn field_refs(&self) -> Vec<&str> {
        match self {
            StudyConfig::Huyghens(s) => {
                std::iter::once(s.field.as_str()).chain(s.contrast.iter().map(String::as_str)).collect()
            }
            StudyConfig::LimitT(s) => vec![s.field.as_str()],
            StudyConfig::WeylLaws(s) => s.basis.iter().map(String::as_str).collect(),
            StudyConfig::Locality(s) => s.pairs.iter().flat_map(|p| [p[0].as_str(), p[1].as_str()]).collect(),
            StudyConfig::WaveAppendix(s) => {
                s.support_field.iter().chain(s.lemma.iter().map(|l| &l.field)).map(String::as_str).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Velocities the study substitutes into the profile.
    fn velocities(&self) -> Vec<[f64; 3]> {
        match self {
            StudyConfig::IrDivergence(s) => vec![s.velocity],
            StudyConfig::SuperselectionSlope(s) => vec![s.w, s.w_prime],
            StudyConfig::WeylLaws(s) => s.velocities.to_vec(),
            StudyConfig::WaveAppendix(s) => s.lemma.iter().filter_map(|l| l.velocity).collect(),
            _ => Vec::new(),
        }
    }

    fn validate(&self, params: &DressingParams) -> std::result::Result<(), String> {
        for w in self.velocities() {
            params.with_velocity(w).validate().map_err(|e| e.to_string())?;
        }
        let positive = |name: &str, xs: &[f64]| {
            if xs.iter().all(|x| *x > 0.0 && x.is_finite()) {
                Ok(())
            } else {
                Err(format!("{name} entries must be positive"))
            }
        };
        let shell = |xs: &[f64]| {
            if xs.len() < 2 {
                return Err("sigma_lo needs at least two values".to_string());
            }
            if xs.iter().all(|s| *s > 0.0 && *s < params.uv_cutoff) {
                Ok(())
            } else {
                Err(format!("sigma_lo entries must lie in (0, uv_cutoff = {})", params.uv_cutoff))
            }
        };
        match self {
            StudyConfig::IrDivergence(s) => shell(&s.sigma_lo),
            StudyConfig::SuperselectionSlope(s) => shell(&s.sigma_lo),
            StudyConfig::DifferenceNorm(s) => {
                if s.sigma_probe.len() < 2 {
                    return Err("sigma_probe needs at least two values".into());
                }
                positive("sigma_probe", &s.sigma_probe)
            }
            StudyConfig::Huyghens(s) => positive("t_list", &s.t_list),
            StudyConfig::LimitT(s) => {
                positive("t_list", &s.t_list)?;
                if s.t_list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("t_list must be strictly ascending".into());
                }
                if !(s.region_t > 0.0) {
                    return Err("region_t must be positive".into());
                }
                Ok(())
            }
            StudyConfig::WeylLaws(s) => {
                if s.basis.is_empty() {
                    return Err("weyl-laws needs at least one basis field".into());
                }
                Ok(())
            }
            StudyConfig::Locality(_) => Ok(()),
            StudyConfig::WaveAppendix(s) => {
                if s.times.is_empty() {
                    return Err("times must not be empty".into());
                }
                Ok(())
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    profile: Option<Spanned<DressingParams>>,
    #[serde(default)]
    quadrature: Option<Spanned<QuadratureSpec>>,
    #[serde(default)]
    fields: BTreeMap<String, Spanned<FieldConfig>>,
    #[serde(default)]
    studies: Vec<Spanned<StudyConfig>>,
}

/// A parsed and validated scenario.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub output_dir: PathBuf,
    pub profile: DressingParams,
    pub quadrature: QuadratureSpec,
    pub fields: BTreeMap<String, FieldConfig>,
    pub studies: Vec<StudyConfig>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn at_line(text: &str, span: std::ops::Range<usize>, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {}: {msg}", line_of(text, span.start)))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let profile = match raw.profile {
            Some(p) => {
                let span = p.span();
                let p = p.into_inner();
                p.validate().map_err(|e| at_line(text, span, format!("[profile]: {e}")))?;
                p
            }
            None => DressingParams::default(),
        };
        let quadrature = match raw.quadrature {
            Some(q) => {
                let span = q.span();
                let q = q.into_inner();
                q.validate().map_err(|e| at_line(text, span, format!("[quadrature]: {e}")))?;
                q
            }
            None => QuadratureSpec::default(),
        };
        let mut fields = BTreeMap::new();
        for (name, f) in raw.fields {
            let span = f.span();
            let f = f.into_inner();
            f.build().map_err(|e| at_line(text, span, format!("field {name}: {e}")))?;
            fields.insert(name, f);
        }
        let mut names = BTreeSet::new();
        let mut studies = Vec::new();
        for s in raw.studies {
            let span = s.span();
            let s = s.into_inner();
            let name = s.name().to_string();
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(at_line(text, span, format!("invalid study name {name:?}")));
            }
            if !names.insert(name.clone()) {
                return Err(at_line(text, span, format!("duplicate study name {name:?}; set `name` to tell them apart")));
            }
            for f in s.field_refs() {
                if !fields.contains_key(f) {
                    return Err(at_line(text, span, format!("study {name}: undefined field {f:?}")));
                }
            }
            s.validate(&profile).map_err(|e| at_line(text, span, format!("study {name}: {e}")))?;
            studies.push(s);
        }
        Ok(Self {
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("lightcone-out")),
            profile,
            quadrature,
            fields,
            studies,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("bundled config is valid")
    }

    fn field(&self, name: &str) -> Result<TestFieldPair> {
        self.fields.get(name).ok_or_else(|| Error::Config(format!("undefined field {name:?}")))?.build()
    }

    /// Studies in execution order.
    pub fn ordered_studies(&self) -> Vec<&StudyConfig> {
        let mut s: Vec<&StudyConfig> = self.studies.iter().collect();
        s.sort_by_key(|s| s.kind());
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Above => ">",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = match comparison {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
            Comparison::Above => value > threshold,
        };
        Self { name: name.into(), value, comparison, threshold, passed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(fmt_num(*x)),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Shortest round-trip form; integers without exponent.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(file_name: String, columns: &[&'static str]) -> Self {
        Self { file_name, columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect()))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub name: String,
    pub study: StudyKind,
    pub input: Value,
    /// Per table file name, the rows as objects keyed by column.
    pub rows: BTreeMap<String, Value>,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub error: Option<String>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub profile: DressingParams,
    pub quadrature: QuadratureSpec,
    pub studies: Vec<StudyReport>,
    pub passed: bool,
}

impl Report {
    pub fn study(&self, name: &str) -> Option<&StudyReport> {
        self.studies.iter().find(|s| s.name == name)
    }
}

#[derive(Default)]
struct Outcome {
    tables: Vec<Table>,
    summary: Value,
    checks: Vec<Check>,
    notes: Vec<String>,
}

/// Runs every study and returns the report with its tables.
pub fn execute(config: &ScenarioConfig) -> (Report, Vec<Table>) {
    let mut studies = Vec::new();
    let mut tables = Vec::new();
    for study in config.ordered_studies() {
        let start = Instant::now();
        let name = study.name().to_string();
        let result = run_study(config, study);
        let elapsed = start.elapsed().as_secs_f64();
        let input = serde_json::to_value(study).unwrap_or(Value::Null);
        let report = match result {
            Ok(out) => {
                let passed = out.checks.iter().all(|c| c.passed);
                let rows = out.tables.iter().map(|t| (t.file_name.clone(), t.json_rows())).collect();
                tables.extend(out.tables);
                StudyReport {
                    name,
                    study: study.kind(),
                    input,
                    rows,
                    summary: out.summary,
                    checks: out.checks,
                    notes: out.notes,
                    error: None,
                    passed,
                    wall_clock_seconds: elapsed,
                }
            }
            Err(e) => StudyReport {
                name,
                study: study.kind(),
                input,
                rows: BTreeMap::new(),
                summary: Value::Null,
                checks: Vec::new(),
                notes: Vec::new(),
                error: Some(e.to_string()),
                passed: false,
                wall_clock_seconds: elapsed,
            },
        };
        studies.push(report);
    }
    let passed = studies.iter().all(|s| s.passed);
    let report =
        Report { profile: config.profile.clone(), quadrature: config.quadrature.clone(), studies, passed };
    (report, tables)
}

/// Writes `report.json` and the tables into `dir`.
pub fn write_outputs(dir: &Path, report: &Report, tables: &[Table]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for t in tables {
        fs::write(dir.join(&t.file_name), t.to_csv())?;
    }
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.into()))?;
    fs::write(dir.join(REPORT_FILE), json + "\n")?;
    Ok(())
}

/// The output directory after the environment override.
pub fn resolve_output_dir(config: &ScenarioConfig) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => config.output_dir.clone(),
    }
}

/// Loads, runs and writes a scenario; the report's `passed` decides the exit status.
pub fn run(config_path: &Path) -> Result<Report> {
    let config = ScenarioConfig::load(config_path)?;
    let (report, tables) = execute(&config);
    write_outputs(&resolve_output_dir(&config), &report, &tables)?;
    Ok(report)
}

pub fn list_studies() -> String {
    let mut out = String::new();
    for k in StudyKind::ALL {
        let _ = writeln!(out, "{:<22}{}", k.name(), k.summary());
    }
    out
}

fn run_study(config: &ScenarioConfig, study: &StudyConfig) -> Result<Outcome> {
    let p = &config.profile;
    let q = &config.quadrature;
    let name = study.name();
    match study {
        StudyConfig::IrDivergence(s) => ir_divergence(name, s, p, q),
        StudyConfig::SuperselectionSlope(s) => superselection_slope(name, s, p, q),
        StudyConfig::DifferenceNorm(s) => difference_norm(name, s, p, q),
        StudyConfig::Huyghens(s) => huyghens(name, s, config),
        StudyConfig::LimitT(s) => limit_t(name, s, config),
        StudyConfig::WeylLaws(s) => weyl_laws(name, s, config),
        StudyConfig::Locality(s) => locality(name, s, config),
        StudyConfig::WaveAppendix(s) => wave_appendix(name, s, config),
    }
}

fn slope_against_log(sigmas: &[f64], values: &[f64]) -> f64 {
    let x: Vec<f64> = sigmas.iter().map(|s| (1.0 / s).ln()).collect();
    linear_fit(&x, values).0
}

fn ir_divergence(name: &str, s: &IrDivergence, params: &DressingParams, q: &QuadratureSpec) -> Result<Outcome> {
    let p = params.with_velocity(s.velocity);
    let mut table = Table::new(format!("{name}.csv"), &["sigma_lo", "shell_norm", "err"]);
    let mut values = Vec::new();
    for &sigma in &s.sigma_lo {
        let r = shell_norm_squared(&p, sigma, q)?;
        values.push(r.value.re);
        table.push(vec![sigma.into(), r.value.re.into(), r.error_estimate.into()]);
    }
    let slope = slope_against_log(&s.sigma_lo, &values);
    let speed = p.w().norm();
    let expected = p.coupling * velocity_angular_factor(speed);
    let check = if speed == 0.0 {
        Check::new("slope_magnitude", slope.abs(), Comparison::AtMost, 0.0)
    } else {
        Check::new("slope_relative_error", (slope - expected).abs() / expected, Comparison::AtMost, s.tolerance)
    };
    Ok(Outcome {
        tables: vec![table],
        summary: json!({ "slope": slope, "expected_slope": expected, "speed": speed }),
        checks: vec![check],
        notes: Vec::new(),
    })
}

fn superselection_slope(
    name: &str,
    s: &SuperselectionSlope,
    params: &DressingParams,
    q: &QuadratureSpec,
) -> Result<Outcome> {
    let mut table = Table::new(format!("{name}.csv"), &["sigma_lo", "shell_norm", "err"]);
    let mut values = Vec::new();
    for &sigma in &s.sigma_lo {
        let r = pairwise_shell_norm(params, s.w, s.w_prime, sigma, q)?;
        values.push(r.value.re);
        table.push(vec![sigma.into(), r.value.re.into(), r.error_estimate.into()]);
    }
    let slope = slope_against_log(&s.sigma_lo, &values);
    let expected = params.coupling * pairwise_angular_factor(s.w, s.w_prime);
    let checks = if s.w == s.w_prime {
        vec![Check::new("slope_magnitude", slope.abs(), Comparison::AtMost, 0.0)]
    } else {
        vec![
            Check::new("slope_positive", slope, Comparison::Above, 0.0),
            Check::new("slope_relative_error", (slope - expected).abs() / expected, Comparison::AtMost, s.tolerance),
        ]
    };
    Ok(Outcome {
        tables: vec![table],
        summary: json!({ "slope": slope, "expected_slope": expected }),
        checks,
        notes: Vec::new(),
    })
}

fn difference_norm(name: &str, s: &DifferenceNorm, params: &DressingParams, q: &QuadratureSpec) -> Result<Outcome> {
    let p = DressingParams { bump_norm: s.bump_norm.unwrap_or(params.bump_norm), ..params.clone() };
    let mut table = Table::new(format!("{name}.csv"), &["sigma_probe", "norm_squared", "err"]);
    let mut values = Vec::new();
    for &sigma in &s.sigma_probe {
        let r = difference_norm_squared(&p, sigma, q)?;
        values.push(r.value.re);
        table.push(vec![sigma.into(), r.value.re.into(), r.error_estimate.into()]);
    }
    let last = *values.last().expect("validated non-empty");
    let spread = values.iter().map(|v| (v - last).abs()).fold(0.0, f64::max) / last.abs();
    let slope = slope_against_log(&s.sigma_probe, &values);
    let check = match s.expect {
        Expectation::Convergent => Check::new("relative_spread", spread, Comparison::AtMost, s.tolerance),
        Expectation::Divergent => Check::new("log_slope", slope, Comparison::Above, 0.0),
    };
    Ok(Outcome {
        tables: vec![table],
        summary: json!({ "bump_norm": p.bump_norm, "relative_spread": spread, "log_slope": slope }),
        checks: vec![check],
        notes: Vec::new(),
    })
}

fn probe_label(kind: ProbeKind) -> (&'static str, Cell) {
    match kind {
        ProbeKind::VHat => ("vhat", Cell::Text("inf".into())),
        ProbeKind::VHatT { t } => ("vhat_T", Cell::Num(t)),
    }
}

fn huyghens(name: &str, s: &Huyghens, config: &ScenarioConfig) -> Result<Outcome> {
    let mut kinds: Vec<ProbeKind> = s.t_list.iter().map(|&t| ProbeKind::VHatT { t }).collect();
    if s.include_limit {
        kinds.push(ProbeKind::VHat);
    }
    let mut table =
        Table::new(format!("{name}.csv"), &["field", "probe", "T", "defect", "scale", "err", "relative"]);
    let mut checks = Vec::new();
    let f = config.field(&s.field)?;
    let results = huyghens_defects(&config.profile, &f, &kinds, &config.quadrature)?;
    for (kind, d) in kinds.iter().zip(&results) {
        let (probe, t) = probe_label(*kind);
        let rel = d.defect.abs() / d.scale;
        checks.push(Check::new(format!("{probe}[T={}]", t.csv()), rel, Comparison::AtMost, s.tolerance));
        table.push(vec![
            s.field.as_str().into(),
            probe.into(),
            t,
            d.defect.into(),
            d.scale.into(),
            d.error_estimate.into(),
            rel.into(),
        ]);
    }
    let mut notes = Vec::new();
    for c in &s.contrast {
        let g = config.field(c)?;
        notes.push(format!("{c}: contrast field, reported without threshold"));
        for (kind, d) in kinds.iter().zip(pairing_defects(&config.profile, &g, &kinds, &config.quadrature)?) {
            let (probe, t) = probe_label(*kind);
            table.push(vec![
                c.as_str().into(),
                probe.into(),
                t,
                d.defect.into(),
                d.scale.into(),
                d.error_estimate.into(),
                (d.defect.abs() / d.scale).into(),
            ]);
        }
    }
    Ok(Outcome { tables: vec![table], summary: Value::Null, checks, notes })
}

fn limit_t(name: &str, s: &LimitT, config: &ScenarioConfig) -> Result<Outcome> {
    let f = config.field(&s.field)?;
    let rows = limit_t_study(&config.profile, &f, &s.t_list, &config.quadrature)?;
    let mut table = Table::new(
        format!("{name}.csv"),
        &["T", "total_re", "total_im", "vhat_re", "vhat_im", "term2_abs", "term3_abs", "err"],
    );
    let mut identity: f64 = 0.0;
    for r in &rows {
        identity = identity.max((r.total - (r.vhat + r.term2 + r.term3)).norm() / r.scale);
        table.push(vec![
            r.t.into(),
            r.total.re.into(),
            r.total.im.into(),
            r.vhat.re.into(),
            r.vhat.im.into(),
            r.term2.norm().into(),
            r.term3.norm().into(),
            r.err.into(),
        ]);
    }
    let mut checks = vec![Check::new("row_identity", identity, Comparison::AtMost, s.row_tolerance)];
    let mut notes = Vec::new();
    let [lo, hi] = s.term3_window;
    let scaled: Vec<f64> =
        rows.iter().filter(|r| r.t >= lo && r.t <= hi).map(|r| r.t * r.term3.norm()).collect();
    if scaled.len() >= 2 {
        let max = scaled.iter().cloned().fold(0.0, f64::max);
        let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        checks.push(Check::new("term3_T_spread", max / min, Comparison::AtMost, s.term3_spread));
    } else {
        notes.push(format!("fewer than two T in [{lo}, {hi}]; term3_T_spread not checked"));
    }
    let at = |t: f64| rows.iter().find(|r| r.t == t).map(|r| r.term2.norm());
    match (at(1.0), at(100.0)) {
        (Some(a), Some(b)) => checks.push(Check::new("term2_ratio_100_1", b / a, Comparison::AtMost, s.term2_ratio)),
        _ => notes.push("T = 1 and T = 100 not both present; term2_ratio_100_1 not checked".into()),
    }
    let t = s.region_t;
    let mut region = Table::new(format!("{name}-region.csv"), &["t", "tau"]);
    for (a, b) in [(0.0, 0.0), (0.0, t), (t, t)] {
        region.push(vec![a.into(), b.into()]);
    }
    Ok(Outcome {
        tables: vec![table, region],
        summary: json!({ "region_T": t, "u": config.profile.time_shift }),
        checks,
        notes,
    })
}

fn random_label(space: &LabelSpace, rng: &mut ChaCha8Rng) -> Result<Label> {
    space.label((0..space.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
}

fn label_gap(a: &Label, b: &Label) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn weyl_laws(name: &str, s: &WeylLaws, config: &ScenarioConfig) -> Result<Outcome> {
    let fields = s.basis.iter().map(|f| config.field(f)).collect::<Result<Vec<_>>>()?;
    let space = LabelSpace::from_fields(&fields, &config.quadrature)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut errors: BTreeMap<&str, f64> = BTreeMap::new();
    let mut bump = |k: &'static str, e: f64| {
        let slot = errors.entry(k).or_insert(0.0);
        *slot = slot.max(e);
    };
    let mut shift_labels = Vec::with_capacity(3 * s.samples);
    for _ in 0..s.samples {
        let (fa, fb, fc) = (random_label(&space, &mut rng)?, random_label(&space, &mut rng)?, random_label(&space, &mut rng)?);
        let a = WeylElement::new(fa.clone(), rng.gen_range(0.0..TAU));
        let b = WeylElement::new(fb.clone(), rng.gen_range(0.0..TAU));
        let c = WeylElement::new(fc.clone(), rng.gen_range(0.0..TAU));

        let left = multiply(&space, &multiply(&space, &a, &b)?, &c)?;
        let right = multiply(&space, &a, &multiply(&space, &b, &c)?)?;
        bump("associativity", phase_distance(left.phase(), right.phase()).max(label_gap(&left.label, &right.label)));

        let unit = multiply(&space, &a, &adjoint(&a))?;
        bump("inverse", phase_distance(unit.phase(), 0.0).max(label_gap(&unit.label, &space.zero())));

        let twice = adjoint(&adjoint(&a));
        bump("involution", phase_distance(twice.phase(), a.phase()).max(label_gap(&twice.label, &a.label)));
        let ab_star = adjoint(&multiply(&space, &a, &b)?);
        let b_star_a_star = multiply(&space, &adjoint(&b), &adjoint(&a))?;
        bump("product_adjoint", phase_distance(ab_star.phase(), b_star_a_star.phase()));

        let sig = |x: &Label, y: &Label| space.sigma(x, y);
        let cocycle = sig(&fa, &fb)? + sig(&fa.add(&fb), &fc)? - sig(&fa, &fb.add(&fc))? - sig(&fb, &fc)?;
        bump("cocycle", cocycle.abs());

        let ab = multiply(&space, &a, &b)?;
        let ba = multiply(&space, &b, &a)?;
        bump("commutation", phase_distance(ab.phase() - ba.phase(), -2.0 * sig(&fa, &fb)?));

        shift_labels.extend([fa.clone(), fb.clone(), fa.add(&fb)]);
    }
    let alphas = s
        .velocities
        .iter()
        .map(|w| CoherentAutomorphism::from_profile(&config.profile.with_velocity(*w), ProfileKind::VLimit))
        .collect::<Result<Vec<_>>>()?;
    let diff = compose_difference(&alphas[0], &alphas[1]);
    let shifts = phase_shifts(&space, &[&alphas[0], &alphas[1], &diff], &shift_labels)?;
    for i in 0..s.samples {
        let j = 3 * i;
        for row in &shifts {
            bump("automorphism_product", phase_distance(row[j + 2], row[j] + row[j + 1]));
        }
        for k in j..j + 3 {
            bump("automorphism_difference", phase_distance(shifts[2][k], shifts[0][k] - shifts[1][k]));
        }
    }
    let mut table = Table::new(format!("{name}.csv"), &["check", "samples", "max_error", "err"]);
    let mut checks = Vec::new();
    for (k, e) in &errors {
        table.push(vec![(*k).into(), (s.samples as f64).into(), (*e).into(), space.gram_error().into()]);
        checks.push(Check::new(*k, *e, Comparison::AtMost, s.tolerance));
    }
    Ok(Outcome {
        tables: vec![table],
        summary: json!({ "dimension": space.dim(), "gram_error": space.gram_error() }),
        checks,
        notes: Vec::new(),
    })
}

fn locality(name: &str, s: &Locality, config: &ScenarioConfig) -> Result<Outcome> {
    let q = &config.quadrature;
    let mut waves: BTreeMap<&str, (TestFieldPair, WaveFn, f64)> = BTreeMap::new();
    for pair in &s.pairs {
        for f in pair {
            if !waves.contains_key(f.as_str()) {
                let field = config.field(f)?;
                let w: WaveFn = Arc::new(photon_wavefunction(&field));
                let norm = inner_product(w.as_ref(), w.as_ref(), q)?.value.re;
                waves.insert(f.as_str(), (field, w, norm));
            }
        }
    }
    let mut table = Table::new(
        format!("{name}.csv"),
        &["field_a", "field_b", "relation", "sigma", "norm_product", "relative", "err"],
    );
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for [a, b] in &s.pairs {
        let (fa, wa, na) = &waves[a.as_str()];
        let (fb, wb, nb) = &waves[b.as_str()];
        let relation = causally_separated(fa.support(), fb.support());
        let r = inner_product(wa.as_ref() as &dyn PhotonWaveFunction, wb.as_ref(), q)?;
        let norm_product = (na * nb).sqrt();
        let rel = r.value.im.abs() / norm_product;
        let rel_name = match relation {
            CausalRelation::Spacelike => "spacelike",
            CausalRelation::Timelike => "timelike",
            CausalRelation::Neither => "neither",
        };
        if relation == CausalRelation::Neither {
            notes.push(format!("{a}/{b}: not causally separated, reported without threshold"));
        } else {
            checks.push(Check::new(format!("{a}/{b}"), rel, Comparison::AtMost, s.tolerance));
        }
        table.push(vec![
            a.as_str().into(),
            b.as_str().into(),
            rel_name.into(),
            r.value.im.into(),
            norm_product.into(),
            rel.into(),
            (r.error_estimate / norm_product).into(),
        ]);
    }
    Ok(Outcome { tables: vec![table], summary: Value::Null, checks, notes })
}

fn wave_appendix(name: &str, s: &WaveAppendix, config: &ScenarioConfig) -> Result<Outcome> {
    let make = |w: &WaveConfig| WaveSolution::new(w.radius, w.amplitude, w.time_offset, s.reach);
    let ws = make(&s.solution)?;
    let partner = make(&s.partner)?;
    let mut table = Table::new(format!("{name}.csv"), &["check", "value", "threshold", "err"]);
    let mut checks = Vec::new();
    let mut record = |table: &mut Table, c: Check, err: f64| {
        table.push(vec![c.name.clone().into(), c.value.into(), c.threshold.into(), err.into()]);
        checks.push(c);
    };

    // Initial data at t = 0: exact vanishing, velocity from the spectral sum.
    let r = s.solution.radius;
    let rhos: Vec<f64> = (0..=64).map(|i| 1.5 * r * i as f64 / 64.0).collect();
    let value0 = rhos.iter().map(|&x| ws.value(0.0, x).abs()).fold(0.0, f64::max);
    record(&mut table, Check::new("initial_value", value0, Comparison::AtMost, 0.0), value0);
    let vel0 = rhos.iter().map(|&x| (ws.time_derivative(0.0, x) - ws.initial_velocity(x)).abs()).fold(0.0, f64::max);
    record(&mut table, Check::new("initial_velocity", vel0, Comparison::AtMost, 1e-8), vel0);
    let rho = 0.4 * r;
    let fd = |dt: f64| ((ws.value(dt, rho) - ws.value(-dt, rho)) / (2.0 * dt) - ws.initial_velocity(rho)).abs();
    let order = (fd(1e-2) / fd(5e-3)).log2();
    record(&mut table, Check::new("difference_order", order, Comparison::AtLeast, 1.9), (order - 2.0).abs());

    let t_max = s.times.iter().fold(0.0, |a: f64, t| a.max(t.abs()));
    let grid = GridSpec::default_for(s.solution.radius.min(s.partner.radius), t_max);
    let mut outside: f64 = 0.0;
    let mut outside_fine: f64 = 0.0;
    for w in [&ws, &partner] {
        for &t in &s.times {
            outside = outside.max(outside_mass_fraction(w, &grid, t)?);
            outside_fine = outside_fine.max(outside_mass_fraction(w, &grid.halved(), t)?);
        }
    }
    record(&mut table, Check::new("outside_mass", outside, Comparison::AtMost, s.outside_tolerance), outside_fine);

    let coarse = symplectic_time_invariance(&ws, &partner, &s.times, &grid)?;
    let fine = symplectic_time_invariance(&ws, &partner, &s.times, &grid.halved())?;
    record(
        &mut table,
        Check::new("symplectic_drift", coarse.relative_drift, Comparison::AtMost, s.drift_tolerance),
        fine.relative_drift,
    );
    let gain = if fine.max_drift == 0.0 { f64::INFINITY } else { coarse.max_drift / fine.max_drift };
    record(&mut table, Check::new("halving_gain", gain, Comparison::AtLeast, 4.0), fine.relative_drift);

    let mut notes = Vec::new();
    if let Some(f) = &s.support_field {
        let field = config.field(f)?;
        let radius = field.support().radius;
        for [factor, bound] in &s.support_thresholds {
            let rep = bj_support_check(&field, factor * radius)?;
            let label = format!("support_outside[{}r]", fmt_num(*factor));
            record(&mut table, Check::new(label, rep.outside_fraction, Comparison::AtMost, *bound), rep.outside_fraction);
        }
    } else {
        notes.push("no support_field; magnetic support check skipped".into());
    }
    if let Some(l) = &s.lemma {
        let field = config.field(&l.field)?;
        let params = match l.velocity {
            Some(w) => config.profile.with_velocity(w),
            None => config.profile.clone(),
        };
        let d = lemma_a2_radius_check(&params, l.t, &field, &config.quadrature)?;
        let rel = d.defect / d.scale;
        record(
            &mut table,
            Check::new(format!("localization_radius[T={}]", fmt_num(l.t)), rel, Comparison::AtMost, l.tolerance),
            d.error_estimate / d.scale,
        );
    }
    Ok(Outcome {
        tables: vec![table],
        summary: json!({ "grid": grid, "symplectic_values": coarse.values, "smeared": coarse.smeared }),
        checks,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_parses_and_covers_every_study() {
        let c = ScenarioConfig::bundled();
        for k in StudyKind::ALL {
            assert!(c.studies.iter().any(|s| s.kind() == k), "{}", k.name());
        }
        let order: Vec<StudyKind> = c.ordered_studies().iter().map(|s| s.kind()).collect();
        assert!(order.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn empty_study_list_gives_empty_passing_report() {
        let c = ScenarioConfig::parse("").unwrap();
        let (report, tables) = execute(&c);
        assert!(report.studies.is_empty() && tables.is_empty() && report.passed);
    }

    #[test]
    fn velocity_at_light_speed_is_rejected_with_line() {
        let text = "output_dir = \"x\"\n\n[profile]\nvelocity = [0.0, 0.0, 1.0]\n";
        let err = ScenarioConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("v_max"), "{err}");
        let text = "[[studies]]\nstudy = \"ir-divergence\"\nvelocity = [0.0, 0.95, 0.0]\n";
        let err = ScenarioConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 1") && err.contains("v_max"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = ScenarioConfig::parse("[profile]\ncoupling = = 1\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = ScenarioConfig::parse("[profile]\ncuopling = 1.0\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("cuopling"), "{err}");
    }

    #[test]
    fn references_and_names_are_checked() {
        let text = "[[studies]]\nstudy = \"limit-T\"\nfield = \"nowhere\"\n";
        assert!(ScenarioConfig::parse(text).unwrap_err().to_string().contains("nowhere"));
        let text = "[[studies]]\nstudy = \"ir-divergence\"\n\n[[studies]]\nstudy = \"ir-divergence\"\n";
        let err = ScenarioConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("duplicate"), "{err}");
    }

    #[test]
    fn region_outline_is_the_cutoff_triangle() {
        let text = "[profile]\ntime_shift = 2.0\n[fields.f]\nchannel = \"electric\"\ndirection = [0.0, 0.0, 1.0]\n\
                    center = [5.0, 0.0, 0.0, 0.0]\ntime_halfwidth = 0.5\nspace_radius = 0.5\n\
                    [[studies]]\nstudy = \"limit-T\"\nfield = \"f\"\nt_list = [1.0]\nregion_t = 3.0\n";
        let c = ScenarioConfig::parse(text).unwrap();
        let (report, tables) = execute(&c);
        let region = tables.iter().find(|t| t.file_name == "limit-T-region.csv").unwrap();
        assert_eq!(region.to_csv(), "t,tau\n0,0\n0,3\n3,3\n");
        let main = tables.iter().find(|t| t.file_name == "limit-T.csv").unwrap();
        assert_eq!(main.columns.join(","), "T,total_re,total_im,vhat_re,vhat_im,term2_abs,term3_abs,err");
        assert_eq!(report.studies.len(), 1);
    }

    #[test]
    fn ir_table_schema_and_zero_velocity_slope() {
        let text = "[[studies]]\nstudy = \"ir-divergence\"\nvelocity = [0.0, 0.0, 0.0]\nsigma_lo = [1e-2, 1e-3, 1e-4]\n";
        let (report, tables) = execute(&ScenarioConfig::parse(text).unwrap());
        assert_eq!(tables[0].columns.join(","), "sigma_lo,shell_norm,err");
        assert!(report.passed, "{report:?}");
        assert_eq!(report.studies[0].summary["slope"], json!(0.0));
    }

    #[test]
    fn numerical_failure_is_recorded_not_fatal() {
        let text = "[fields.back]\nchannel = \"electric\"\ndirection = [0.0, 0.0, 1.0]\n\
                    center = [-5.0, 0.0, 0.0, 0.0]\ntime_halfwidth = 0.5\nspace_radius = 0.5\n\
                    [[studies]]\nstudy = \"huyghens\"\nfield = \"back\"\n\
                    [[studies]]\nstudy = \"ir-divergence\"\nsigma_lo = [1e-2, 1e-3]\n";
        let (report, _) = execute(&ScenarioConfig::parse(text).unwrap());
        assert_eq!(report.studies.len(), 2);
        let h = report.study("huyghens").unwrap();
        assert!(!h.passed && h.error.as_deref().unwrap().contains("forward lightcone"));
        assert!(report.study("ir-divergence").unwrap().passed);
        assert!(!report.passed);
    }

    #[test]
    fn ln_spacing() {
        let s = ln_spaced(1e-2, 1e-6, 5);
        assert_eq!(s.len(), 5);
        for (a, b) in s.iter().zip([1e-2, 1e-3, 1e-4, 1e-5, 1e-6]) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 3.0, -2.0, 1e-6, 0.1 + 0.2, 1.234e20, f64::MIN_POSITIVE] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(3.0), "3");
    }
}
