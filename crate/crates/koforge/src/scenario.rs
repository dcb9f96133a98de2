//! Scenario files: JSON with every block spelled out, unknown keys rejected.

use std::fmt;
use std::path::Path;

use koforge_core::function::{FunctionSpec, Hints};
use koforge_core::geometry::ModelManifold;
use koforge_core::structural::{RegimeKind, StructuralProfile};
use koforge_core::transforms::{Kernel, KoVariant};
use koforge_core::LogGrid;
use serde::{Deserialize, Serialize};

/// Largest grid any numeric override may ask for.
pub const MAX_GRID: usize = 1_000_000;

#[derive(Debug)]
pub enum ScenarioError {
    Io(String),
    /// serde_json message, which carries line and column.
    Parse(String),
    Invalid(String),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io(m) => write!(f, "cannot read scenario: {m}"),
            ScenarioError::Parse(m) => write!(f, "scenario parse error: {m}"),
            ScenarioError::Invalid(m) => write!(f, "invalid scenario: {m}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

/// A function family with its parameters, e.g. `{"family": "power", "c": 1, "a": 2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnSpec {
    Power { c: f64, a: f64 },
    PowerLog { c: f64, a: f64, beta: f64 },
    MeanCurvature,
    ExpPower,
    Constant { c: f64 },
    Exponential { c: f64, k: f64 },
    Sine { c: f64, k: f64 },
    Sinh { c: f64, k: f64 },
    LogOnePlusPow { c: f64, a: f64 },
    InvOnePlusPow { c: f64, a: f64 },
    Table {
        t: Vec<f64>,
        v: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin_exponent: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_exponent: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_log_exponent: Option<f64>,
    },
    Sum { terms: Vec<FnSpec> },
    Product { factors: Vec<FnSpec> },
}

impl FnSpec {
    pub fn power(c: f64, a: f64) -> Self {
        FnSpec::Power { c, a }
    }

    pub fn constant(c: f64) -> Self {
        FnSpec::Constant { c }
    }

    pub fn to_core(&self) -> Result<FunctionSpec, ScenarioError> {
        Ok(match self {
            FnSpec::Power { c, a } => FunctionSpec::power(*c, *a),
            FnSpec::PowerLog { c, a, beta } => FunctionSpec::power_log(*c, *a, *beta),
            FnSpec::MeanCurvature => FunctionSpec::mean_curvature(),
            FnSpec::ExpPower => FunctionSpec::exp_power(),
            FnSpec::Constant { c } => FunctionSpec::constant(*c),
            FnSpec::Exponential { c, k } => FunctionSpec::exponential(*c, *k),
            FnSpec::Sine { c, k } => FunctionSpec::sine(*c, *k),
            FnSpec::Sinh { c, k } => FunctionSpec::sinh(*c, *k),
            FnSpec::LogOnePlusPow { c, a } => FunctionSpec::log_one_plus_pow(*c, *a),
            FnSpec::InvOnePlusPow { c, a } => FunctionSpec::inv_one_plus_pow(*c, *a),
            FnSpec::Table { t, v, origin_exponent, tail_exponent, tail_log_exponent } => {
                if t.len() > MAX_GRID {
                    return invalid("table longer than 1e6 points");
                }
                FunctionSpec::table(t.clone(), v.clone())
                    .map_err(|e| ScenarioError::Invalid(format!("table: {e}")))?
                    .with_hints(Hints {
                        origin_exponent: *origin_exponent,
                        tail_exponent: *tail_exponent,
                        tail_log_exponent: *tail_log_exponent,
                    })
            }
            FnSpec::Sum { terms } => FunctionSpec::sum(terms.iter().map(|f| f.to_core()).collect::<Result<_, _>>()?),
            FnSpec::Product { factors } => {
                FunctionSpec::product(factors.iter().map(|f| f.to_core()).collect::<Result<_, _>>()?)
            }
        })
    }
}

fn default_lambda() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    -2.0
}

fn default_omega() -> f64 {
    2.0
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// Data of the operator and the scalars of the structural hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileBlock {
    pub phi: FnSpec,
    pub ell: FnSpec,
    pub f: FnSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_tilde: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub theta: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub mu: f64,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

impl ProfileBlock {
    /// `phi`, `ell`, `f` with every scalar at its default.
    pub fn new(phi: FnSpec, ell: FnSpec, f: FnSpec) -> Self {
        ProfileBlock {
            phi,
            ell,
            f,
            b_tilde: None,
            rho: None,
            g: None,
            h: None,
            theta: 0.0,
            lambda: 1.0,
            beta: -2.0,
            mu: 0.0,
            a_bound: None,
            delta: None,
            chi: None,
            omega: 2.0,
        }
    }

    /// Core profile plus the warnings of its validation.
    pub fn to_core(&self, numeric: &NumericBlock) -> Result<(StructuralProfile, Vec<String>), ScenarioError> {
        let mut p = StructuralProfile::new(self.phi.to_core()?, self.ell.to_core()?, self.f.to_core()?);
        if let Some(b) = &self.b_tilde {
            p.b_tilde = b.to_core()?;
        }
        p.rho = self.rho.as_ref().map(|f| f.to_core()).transpose()?;
        p.g_fn = self.g.as_ref().map(|f| f.to_core()).transpose()?;
        p.h_fn = self.h.as_ref().map(|f| f.to_core()).transpose()?;
        p.theta = self.theta;
        p.lambda_b = self.lambda;
        p.beta = self.beta;
        p.mu = self.mu;
        p.a_bound = self.a_bound;
        p.delta = self.delta;
        p.chi = self.chi;
        p.omega = self.omega;
        p.c_increasing_tolerance = numeric.c_increasing_tolerance;
        if let Some(g) = &numeric.c_grid {
            p.grid = LogGrid::new(g.lo, g.hi, g.n).map_err(|e| ScenarioError::Invalid(format!("numeric.c_grid: {e}")))?;
        }
        let warnings = p.validate().map_err(|e| ScenarioError::Invalid(format!("profile: {e}")))?;
        Ok((p, warnings))
    }
}

fn default_warp() -> FnSpec {
    FnSpec::power(1.0, 1.0)
}

fn zero_fn() -> FnSpec {
    FnSpec::constant(0.0)
}

/// Radial model `dr^2 + warp(r)^2 g_sphere` with weight `e^{log_weight}`
/// and reference curvature function `G`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub m: usize,
    pub n: f64,
    #[serde(default = "default_warp")]
    pub warp: FnSpec,
    #[serde(default = "zero_fn")]
    pub log_weight: FnSpec,
    #[serde(rename = "G", default = "zero_fn")]
    pub g: FnSpec,
}

impl ModelBlock {
    pub fn to_core(&self) -> Result<(ModelManifold, FunctionSpec), ScenarioError> {
        let model = ModelManifold::new(self.m, self.n, self.warp.to_core()?, self.log_weight.to_core()?)
            .map_err(|e| ScenarioError::Invalid(format!("model: {e}")))?;
        Ok((model, self.g.to_core()?))
    }
}

/// `n` points from `lo` to `hi` (linear or logarithmic, per use).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec { lo, hi, n }
    }

    fn check(&self, what: &str) -> Result<(), ScenarioError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.n < 2 {
            return invalid(format!("{what}: need lo < hi and n >= 2"));
        }
        if self.n > MAX_GRID {
            return invalid(format!("{what}: n = {} exceeds 1e6", self.n));
        }
        Ok(())
    }

    pub fn linear(&self) -> Vec<f64> {
        koforge_core::grid::linspace(self.lo, self.hi, self.n)
    }
}

fn default_grid_points() -> usize {
    koforge_core::supersolution::GRID_POINTS
}

fn default_c_tol() -> f64 {
    1e-9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericBlock {
    /// Points of built radial profiles.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Log grid for sampled structural estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<GridSpec>,
    #[serde(default = "default_c_tol")]
    pub c_increasing_tolerance: f64,
    /// Classify integral conditions from tail samples even when exact
    /// exponents are available.
    #[serde(default)]
    pub force_numeric: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NumericBlock {
    fn default() -> Self {
        NumericBlock {
            grid_points: default_grid_points(),
            c_grid: None,
            c_increasing_tolerance: default_c_tol(),
            force_numeric: false,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Phi,
    GradEll,
    Theta,
    PhiEll,
    F,
    BTilde,
    Rho,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::Phi,
        CheckName::GradEll,
        CheckName::Theta,
        CheckName::PhiEll,
        CheckName::F,
        CheckName::BTilde,
        CheckName::Rho,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    Thetabetamu,
    ThetabetamuPrime,
    Eq38,
    CorA1,
    CorA2,
    Eq66,
}

impl RegimeName {
    pub fn kind(self) -> RegimeKind {
        match self {
            RegimeName::Thetabetamu => RegimeKind::Thetabetamu,
            RegimeName::ThetabetamuPrime => RegimeKind::ThetabetamuPrime,
            RegimeName::Eq38 => RegimeKind::Eq38,
            RegimeName::CorA1 => RegimeKind::CorA1,
            RegimeName::CorA2 => RegimeKind::CorA2,
            RegimeName::Eq66 => RegimeKind::Eq66,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantName {
    #[serde(rename = "KO")]
    Ko,
    #[serde(rename = "Khat_O")]
    KhatO,
    #[serde(rename = "rhoKO")]
    RhoKo,
    #[serde(rename = "rhoKhatO")]
    RhoKhatO,
}

impl VariantName {
    pub fn variant(self) -> KoVariant {
        match self {
            VariantName::Ko => KoVariant::Ko,
            VariantName::KhatO => KoVariant::KhatO,
            VariantName::RhoKo => KoVariant::RhoKo,
            VariantName::RhoKhatO => KoVariant::RhoKhatO,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelName {
    K,
    Khat,
}

impl KernelName {
    pub fn kernel(self) -> Kernel {
        match self {
            KernelName::K => Kernel::K,
            KernelName::Khat => Kernel::Khat,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeName {
    #[serde(rename = "KO")]
    Ko,
    #[serde(rename = "negKO")]
    NegKo,
}

fn all_checks() -> Vec<CheckName> {
    CheckName::ALL.to_vec()
}

fn default_variants() -> Vec<VariantName> {
    vec![VariantName::Ko]
}

fn default_sigmas() -> Vec<f64> {
    vec![1.0]
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsTask {
    #[serde(default = "all_checks")]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub regimes: Vec<RegimeName>,
    /// Replaces the scenario profile for this task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KoTask {
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantName>,
    /// Scalings of `F` to classify; every verdict is reported.
    #[serde(default = "default_sigmas")]
    pub sigma: Vec<f64>,
    /// Overrides `numeric.force_numeric` for this task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_numeric: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileBlock>,
}

fn default_mode() -> ModeName {
    ModeName::Ko
}

fn default_kernel() -> KernelName {
    KernelName::K
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupersolutionTask {
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_kernel")]
    pub kernel: KernelName,
    #[serde(default, skip_serializing_if = "is_false")]
    pub rho: bool,
    pub epsilon: f64,
    pub eta: f64,
    pub t0: f64,
    pub t1: f64,
    #[serde(rename = "A_geom", default, skip_serializing_if = "is_zero")]
    pub a_geom: f64,
    /// Exponent of `t^{beta/2}`; the profile's `beta` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Build at this sigma instead of searching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileBlock>,
}

fn default_inner() -> usize {
    200
}

fn default_outer() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleTask {
    pub p: f64,
    pub m: usize,
    /// Outer radius; `t_bar + 10` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default = "default_inner")]
    pub n_inner: usize,
    #[serde(default = "default_outer")]
    pub n_outer: usize,
    /// Rebuild this many times with `r_max` doubled to watch `max u` grow.
    #[serde(default)]
    pub doublings: usize,
    /// Extra glue points `lambda` to probe and report.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probe_lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PetersenSpec {
    pub p: f64,
    pub r0: f64,
    #[serde(rename = "R")]
    pub r_big: f64,
    /// Radii for `vol_D B_R e^{-(n-1) B R}` with `G = B^2` constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GridSpec>,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryTask {
    /// Radii of the volume table (linear).
    pub radii: GridSpec,
    #[serde(default = "default_true")]
    pub riccati: bool,
    /// Radial test function for the Bochner identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bochner: Option<FnSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub petersen: Option<PetersenSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessSpec {
    pub p: f64,
    pub m: usize,
    pub radii: GridSpec,
    /// Radius for `u / r^{p'}`; the last radius when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_hat_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxprinTask {
    /// Growth exponent; needs `delta`, `chi` and `A` in the profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Volume growth liminf; taken from the model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(default = "default_true")]
    pub f_liminf_positive: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub u_star_finite: bool,
    /// Log-spaced radii for the model volume quotient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_radii: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<SharpnessSpec>,
    /// Random dyadic parameter draws checked against the branch formulas.
    #[serde(default)]
    pub draws: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    Conditions(ConditionsTask),
    Ko(KoTask),
    Supersolution(SupersolutionTask),
    Counterexample(CounterexampleTask),
    Geometry(GeometryTask),
    Maxprin(MaxprinTask),
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Conditions(_) => "conditions",
            Task::Ko(_) => "ko",
            Task::Supersolution(_) => "supersolution",
            Task::Counterexample(_) => "counterexample",
            Task::Geometry(_) => "geometry",
            Task::Maxprin(_) => "maxprin",
        }
    }

    fn own_profile(&self) -> bool {
        match self {
            Task::Conditions(t) => t.profile.is_some(),
            Task::Ko(t) => t.profile.is_some(),
            Task::Supersolution(t) => t.profile.is_some(),
            Task::Counterexample(t) => t.profile.is_some(),
            Task::Geometry(_) | Task::Maxprin(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub numeric: NumericBlock,
    /// Output directory; the command line `--out` wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Static checks: bounded numeric overrides and declared prerequisites.
    pub fn check(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty() {
            return invalid("name must not be empty");
        }
        let n = &self.numeric;
        if n.grid_points < 2 || n.grid_points > MAX_GRID {
            return invalid(format!("numeric.grid_points = {} outside [2, 1e6]", n.grid_points));
        }
        if let Some(g) = &n.c_grid {
            g.check("numeric.c_grid")?;
        }
        if !(n.c_increasing_tolerance > 0.0) {
            return invalid("numeric.c_increasing_tolerance must be positive");
        }
        for (i, task) in self.tasks.iter().enumerate() {
            let at = format!("tasks[{i}] ({})", task.kind());
            let needs_profile = !matches!(task, Task::Geometry(_) | Task::Maxprin(_));
            if needs_profile && !task.own_profile() && self.profile.is_none() {
                return invalid(format!("{at} needs the profile block"));
            }
            match task {
                Task::Geometry(g) => {
                    if g.model.is_none() && self.model.is_none() {
                        return invalid(format!("{at} needs the model block"));
                    }
                    g.radii.check(&format!("{at} radii"))?;
                    if let Some(pg) = g.petersen.as_ref().and_then(|p| p.growth.as_ref()) {
                        pg.check(&format!("{at} petersen.growth"))?;
                    }
                }
                Task::Maxprin(m) => {
                    if m.sigma.is_some() {
                        let Some(p) = &self.profile else {
                            return invalid(format!("{at} with sigma needs the profile block"));
                        };
                        for (key, v) in [("delta", p.delta), ("chi", p.chi), ("A", p.a_bound)] {
                            if v.is_none() {
                                return invalid(format!("{at} needs profile.{key}"));
                            }
                        }
                        if m.d0.is_none() && (m.volume_radii.is_none() || self.model.is_none()) {
                            return invalid(format!("{at} needs d0, or volume_radii with the model block"));
                        }
                    }
                    if let Some(r) = &m.volume_radii {
                        r.check(&format!("{at} volume_radii"))?;
                    }
                    if let Some(s) = &m.sharpness {
                        s.radii.check(&format!("{at} sharpness.radii"))?;
                    }
                    if m.draws > MAX_GRID {
                        return invalid(format!("{at} draws exceed 1e6"));
                    }
                }
                Task::Counterexample(c) => {
                    if c.n_inner > MAX_GRID || c.n_outer > MAX_GRID || c.doublings > 20 {
                        return invalid(format!("{at} grid or doublings out of range"));
                    }
                }
                Task::Supersolution(s) => {
                    if s.rho && s.profile.as_ref().or(self.profile.as_ref()).is_some_and(|p| p.rho.is_none()) {
                        return invalid(format!("{at} in rho mode needs profile.rho"));
                    }
                }
                Task::Ko(k) => {
                    let uses_rho = k.variants.iter().any(|v| v.variant().uses_rho());
                    if uses_rho && k.profile.as_ref().or(self.profile.as_ref()).is_some_and(|p| p.rho.is_none()) {
                        return invalid(format!("{at} rho variants need profile.rho"));
                    }
                }
                Task::Conditions(_) => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "minimal",
        "profile": {
            "phi": {"family": "power", "c": 1, "a": 1},
            "ell": {"family": "constant", "c": 1},
            "f": {"family": "power", "c": 1, "a": 2}
        },
        "tasks": [{"task": "ko"}]
    }"#;

    #[test]
    fn parses_minimal_and_round_trips() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.tasks.len(), 1);
        assert_eq!(s.numeric.grid_points, 4096);
        let back = Scenario::from_json(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let bad = MINIMAL.replace("\"tasks\"", "\"taskz\"");
        let e = Scenario::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("unknown field") && e.contains("line"), "{e}");
        let bad = MINIMAL.replace("\"c\": 1, \"a\": 2", "\"c\": 1, \"a\": 2, \"b\": 0");
        assert!(Scenario::from_json(&bad).is_err());
        let bad = MINIMAL.replace("{\"task\": \"ko\"}", "{\"task\": \"ko\", \"sigmas\": [1]}");
        assert!(Scenario::from_json(&bad).is_err());
    }

    #[test]
    fn prerequisites_name_the_missing_block() {
        let s = r#"{"name": "g", "tasks": [{"task": "geometry", "radii": {"lo": 0.1, "hi": 1, "n": 4}}]}"#;
        let e = Scenario::from_json(s).unwrap_err().to_string();
        assert!(e.contains("model block"), "{e}");
        let s = r#"{"name": "k", "tasks": [{"task": "ko"}]}"#;
        assert!(Scenario::from_json(s).unwrap_err().to_string().contains("profile block"));
        let s = MINIMAL.replace("{\"task\": \"ko\"}", "{\"task\": \"maxprin\", \"sigma\": 1, \"d0\": 1}");
        assert!(Scenario::from_json(&s).unwrap_err().to_string().contains("profile.delta"));
    }

    #[test]
    fn grid_overrides_are_bounded() {
        let s = MINIMAL.replace("\"tasks\"", "\"numeric\": {\"grid_points\": 2000000}, \"tasks\"");
        assert!(Scenario::from_json(&s).unwrap_err().to_string().contains("1e6"));
    }
}
