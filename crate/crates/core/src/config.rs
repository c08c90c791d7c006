//! Scenario descriptions: model parameters, groups, simulation horizon and
//! output schedule.
//!
//! Scenarios are TOML documents (see `docs/scenario-schema.md`). Every key is
//! optional; anything left out takes the reference value listed in
//! [`ContactParams::default`] and friends. Parsing always validates, so a
//! [`ScenarioConfig`] obtained from [`parse_scenario`] or [`preset`] satisfies
//! every invariant checked by [`ScenarioConfig::validate`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the sum of group fractions.
pub const FRACTION_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid `{field}`: {message}")]
    Invariant { field: String, message: String },
    #[error("group fractions sum to {sum}, expected 1 (tolerance {FRACTION_SUM_TOL:e})")]
    FractionSum { sum: f64 },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

impl ConfigError {
    fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invariant {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Contact (popularity) dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactParams {
    /// Interaction strength.
    pub beta: f64,
    /// Asymmetry of the value function, in `[0, 1)`.
    pub mu: f64,
    /// Reference contact level.
    pub c_bar: f64,
    /// Strength of the opinion penalty.
    pub theta: f64,
    /// Opinion tolerance radius of the penalty.
    pub delta_phi: f64,
    /// Standard deviation of the contact noise (before the `sqrt(epsilon)` scaling).
    pub nu: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            mu: 0.0,
            c_bar: 200.0,
            theta: 2.0,
            delta_phi: 0.1,
            nu: 0.1,
        }
    }
}

/// Parameters of the contact feedback control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactControlParams {
    pub lambda: f64,
    pub gamma_c: f64,
    pub alpha_r: f64,
    pub alpha_h: f64,
    pub c_min: f64,
    /// Radius of the local opinion mass.
    pub r: f64,
    pub rho_star: f64,
}

impl Default for ContactControlParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma_c: 1.0,
            alpha_r: 0.1,
            alpha_h: 0.1,
            c_min: 100.0,
            r: 0.7,
            rho_star: 0.5,
        }
    }
}

/// Binary opinion interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpinionParams {
    pub alpha: f64,
    /// Bounded-confidence radius.
    pub delta: f64,
    /// Exponent of the connectivity weight.
    pub p: f64,
    pub sigma: f64,
}

impl Default for OpinionParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            delta: 0.8,
            p: 3.0,
            sigma: 0.1,
        }
    }
}

/// Activation factor of the opinion control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// Constant 1.
    One,
    /// `1 / (1 + exp(-steepness * (x - threshold)))`; a negative steepness
    /// gives a decreasing switch.
    Sigmoid { threshold: f64, steepness: f64 },
}

/// What the opinion-side activation `H_v` is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationArgument {
    /// Local opinion mass around the agent.
    Rho,
    /// The agent's opinion itself.
    Opinion,
}

/// Per-group opinion control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpinionControlParams {
    pub gamma_v: f64,
    pub v_target: f64,
    /// Activation in the number of contacts.
    pub rv: Activation,
    /// Activation in the opinion region.
    pub hv: Activation,
    pub hv_argument: ActivationArgument,
}

impl Default for OpinionControlParams {
    fn default() -> Self {
        Self {
            gamma_v: 10.0,
            v_target: 0.5,
            rv: Activation::One,
            hv: Activation::One,
            hv_argument: ActivationArgument::Rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OpinionControlOverride {
    gamma_v: Option<f64>,
    v_target: Option<f64>,
    rv: Option<Activation>,
    hv: Option<Activation>,
    hv_argument: Option<ActivationArgument>,
}

impl OpinionControlOverride {
    fn apply(&self, base: &OpinionControlParams) -> OpinionControlParams {
        OpinionControlParams {
            gamma_v: self.gamma_v.unwrap_or(base.gamma_v),
            v_target: self.v_target.unwrap_or(base.v_target),
            rv: self.rv.unwrap_or(base.rv),
            hv: self.hv.unwrap_or(base.hv),
            hv_argument: self.hv_argument.unwrap_or(base.hv_argument),
        }
    }
}

/// A sub-population with its own initial rectangle and control authority.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSpec {
    pub name: String,
    pub fraction: f64,
    /// `[lo, hi]` for the uniform initial contacts.
    pub init_c_range: [f64; 2],
    /// `[lo, hi]` for the uniform initial opinions.
    pub init_v_range: [f64; 2],
    pub contact_control_enabled: bool,
    pub opinion_control_enabled: bool,
    pub opinion_control: OpinionControlParams,
}

impl GroupSpec {
    pub fn new(name: &str, fraction: f64, init_c_range: [f64; 2], init_v_range: [f64; 2]) -> Self {
        Self {
            name: name.to_string(),
            fraction,
            init_c_range,
            init_v_range,
            contact_control_enabled: false,
            opinion_control_enabled: false,
            opinion_control: OpinionControlParams::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupDoc {
    name: String,
    fraction: f64,
    init_c_range: [f64; 2],
    init_v_range: [f64; 2],
    #[serde(default)]
    contact_control_enabled: bool,
    #[serde(default)]
    opinion_control_enabled: bool,
    #[serde(default)]
    opinion_control: OpinionControlOverride,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MvMode {
    /// Mean opinion recomputed from the whole ensemble at every step.
    Instantaneous,
    /// Mean opinion of the initial ensemble, held fixed.
    FrozenAtInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpinionBoundary {
    Clamp,
    Reflect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryPolicy {
    pub opinion: OpinionBoundary,
    /// How many times the contact noise is redrawn when an update would make
    /// `c` non-positive.
    pub contact_resample_limit: u32,
    /// Contacts that are still non-positive after resampling are set to
    /// `contact_floor_fraction * c_bar`.
    pub contact_floor_fraction: f64,
}

impl Default for BoundaryPolicy {
    fn default() -> Self {
        Self {
            opinion: OpinionBoundary::Clamp,
            contact_resample_limit: 8,
            contact_floor_fraction: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    TruncatedGaussian,
    SymmetricTwoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub eta: NoiseFamily,
    pub xi: NoiseFamily,
    /// Symmetric truncation of the Gaussian family, in standard deviations.
    pub truncation: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            eta: NoiseFamily::TruncatedGaussian,
            xi: NoiseFamily::TruncatedGaussian,
            truncation: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Interaction scale, also used as the time step.
    pub epsilon: f64,
    pub t_final: f64,
    pub n_particles: usize,
    pub seed: u64,
    /// Times at which full snapshots (means and histograms) are taken.
    /// `t = 0` and `t = t_final` are always recorded in addition.
    pub snapshot_times: Vec<f64>,
    /// Spacing of the means-only trace; absent means snapshot times only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<f64>,
    pub mv_mode: MvMode,
    pub boundary: BoundaryPolicy,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            t_final: 50.0,
            n_particles: 10_000,
            seed: 1,
            snapshot_times: Vec::new(),
            trace_every: None,
            mv_mode: MvMode::Instantaneous,
            boundary: BoundaryPolicy::default(),
        }
    }
}

impl SimParams {
    /// Number of steps, `round(t_final / epsilon)`.
    pub fn n_steps(&self) -> u64 {
        (self.t_final / self.epsilon).round() as u64
    }

    /// Step index at which a time `t` is reached.
    pub fn step_of(&self, t: f64) -> u64 {
        (t / self.epsilon).round() as u64
    }
}

/// Histogram layout for snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputParams {
    pub bins_v: usize,
    pub bins_c: usize,
    /// Log-spaced contact bins cover `[lo, hi]`; one underflow and one
    /// overflow bin sit outside.
    pub c_range: [f64; 2],
}

impl Default for OutputParams {
    fn default() -> Self {
        Self {
            bins_v: 100,
            bins_c: 70,
            c_range: [1e-2, 1e5],
        }
    }
}

/// A complete, validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub contacts: ContactParams,
    pub contact_control: ContactControlParams,
    pub opinions: OpinionParams,
    /// Defaults for every group's opinion control.
    pub opinion_control: OpinionControlParams,
    pub noise: NoiseConfig,
    pub sim: SimParams,
    pub output: OutputParams,
    #[serde(rename = "group")]
    pub groups: Vec<GroupSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioDoc {
    name: Option<String>,
    contacts: ContactParams,
    contact_control: ContactControlParams,
    opinions: OpinionParams,
    opinion_control: OpinionControlParams,
    noise: NoiseConfig,
    sim: SimParams,
    output: OutputParams,
    group: Vec<GroupDoc>,
}

fn default_group() -> GroupSpec {
    GroupSpec::new("population", 1.0, [100.0, 300.0], [-1.0, 1.0])
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".to_string(),
            contacts: ContactParams::default(),
            contact_control: ContactControlParams::default(),
            opinions: OpinionParams::default(),
            opinion_control: OpinionControlParams::default(),
            noise: NoiseConfig::default(),
            sim: SimParams::default(),
            output: OutputParams::default(),
            groups: vec![default_group()],
        }
    }
}

impl From<ScenarioDoc> for ScenarioConfig {
    fn from(doc: ScenarioDoc) -> Self {
        let groups = if doc.group.is_empty() {
            vec![GroupSpec {
                opinion_control: doc.opinion_control.clone(),
                ..default_group()
            }]
        } else {
            doc.group
                .into_iter()
                .map(|g| GroupSpec {
                    opinion_control: g.opinion_control.apply(&doc.opinion_control),
                    name: g.name,
                    fraction: g.fraction,
                    init_c_range: g.init_c_range,
                    init_v_range: g.init_v_range,
                    contact_control_enabled: g.contact_control_enabled,
                    opinion_control_enabled: g.opinion_control_enabled,
                })
                .collect()
        };
        ScenarioConfig {
            name: doc.name.unwrap_or_else(|| "default".to_string()),
            contacts: doc.contacts,
            contact_control: doc.contact_control,
            opinions: doc.opinions,
            opinion_control: doc.opinion_control,
            noise: doc.noise,
            sim: doc.sim,
            output: doc.output,
            groups,
        }
    }
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
    let config = ScenarioConfig::from(doc);
    config.validate()?;
    Ok(config)
}

fn check(ok: bool, field: &str, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::invariant(field, message))
    }
}

fn check_finite(values: &[(&str, f64)]) -> Result<(), ConfigError> {
    for (field, x) in values {
        check(x.is_finite(), field, "must be a finite number")?;
    }
    Ok(())
}

fn validate_activation(a: &Activation, field: &str) -> Result<(), ConfigError> {
    if let Activation::Sigmoid { threshold, steepness } = a {
        check(threshold.is_finite(), field, "sigmoid threshold must be finite")?;
        check(
            steepness.is_finite() && *steepness != 0.0,
            field,
            "sigmoid steepness must be finite and nonzero",
        )?;
    }
    Ok(())
}

fn validate_opinion_control(p: &OpinionControlParams, prefix: &str) -> Result<(), ConfigError> {
    check_finite(&[
        (&format!("{prefix}.gamma_v"), p.gamma_v),
        (&format!("{prefix}.v_target"), p.v_target),
    ])?;
    check(p.gamma_v > 0.0, &format!("{prefix}.gamma_v"), "must be > 0")?;
    check(
        p.v_target.abs() <= 1.0,
        &format!("{prefix}.v_target"),
        "must lie in [-1, 1]",
    )?;
    validate_activation(&p.rv, &format!("{prefix}.rv"))?;
    validate_activation(&p.hv, &format!("{prefix}.hv"))
}

impl ScenarioConfig {
    /// Check every invariant of the scenario.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.contacts;
        check_finite(&[
            ("contacts.beta", c.beta),
            ("contacts.mu", c.mu),
            ("contacts.c_bar", c.c_bar),
            ("contacts.theta", c.theta),
            ("contacts.delta_phi", c.delta_phi),
            ("contacts.nu", c.nu),
        ])?;
        check(c.beta > 0.0, "contacts.beta", "must be > 0")?;
        check(c.mu >= 0.0 && c.mu < 1.0, "contacts.mu", "must satisfy 0 <= mu < 1")?;
        check(c.c_bar > 0.0, "contacts.c_bar", "must be > 0")?;
        check(c.theta >= 0.0, "contacts.theta", "must be >= 0")?;
        check(
            (0.0..=2.0).contains(&c.delta_phi),
            "contacts.delta_phi",
            "must lie in [0, 2]",
        )?;
        check(c.nu >= 0.0, "contacts.nu", "must be >= 0")?;

        let k = &self.contact_control;
        check_finite(&[
            ("contact_control.lambda", k.lambda),
            ("contact_control.gamma_c", k.gamma_c),
            ("contact_control.alpha_r", k.alpha_r),
            ("contact_control.alpha_h", k.alpha_h),
            ("contact_control.c_min", k.c_min),
            ("contact_control.r", k.r),
            ("contact_control.rho_star", k.rho_star),
        ])?;
        check(k.lambda >= 0.0, "contact_control.lambda", "must be >= 0")?;
        check(k.gamma_c > 0.0, "contact_control.gamma_c", "must be > 0")?;
        check(k.alpha_r > 0.0, "contact_control.alpha_r", "must be > 0")?;
        check(k.alpha_h > 0.0, "contact_control.alpha_h", "must be > 0")?;
        check(k.r > 0.0, "contact_control.r", "must be > 0")?;
        check(
            (0.0..=1.0).contains(&k.rho_star),
            "contact_control.rho_star",
            "must lie in [0, 1]",
        )?;

        let o = &self.opinions;
        check_finite(&[
            ("opinions.alpha", o.alpha),
            ("opinions.delta", o.delta),
            ("opinions.p", o.p),
            ("opinions.sigma", o.sigma),
        ])?;
        check(o.alpha >= 0.0, "opinions.alpha", "must be >= 0")?;
        check(o.delta > 0.0 && o.delta <= 2.0, "opinions.delta", "must lie in (0, 2]")?;
        check(o.p >= 0.0, "opinions.p", "must be >= 0")?;
        check(o.sigma >= 0.0, "opinions.sigma", "must be >= 0")?;

        validate_opinion_control(&self.opinion_control, "opinion_control")?;

        check(
            self.noise.truncation.is_finite() && self.noise.truncation > 0.0,
            "noise.truncation",
            "must be finite and > 0",
        )?;

        let s = &self.sim;
        check_finite(&[("sim.epsilon", s.epsilon), ("sim.t_final", s.t_final)])?;
        check(
            s.epsilon > 0.0 && s.epsilon < 1.0,
            "sim.epsilon",
            "must satisfy 0 < epsilon < 1",
        )?;
        check(s.t_final >= 0.0, "sim.t_final", "must be >= 0")?;
        check(s.n_particles >= 2, "sim.n_particles", "must be >= 2")?;
        check(
            s.seed <= i64::MAX as u64,
            "sim.seed",
            "must fit in a signed 64-bit integer",
        )?;
        for (i, t) in s.snapshot_times.iter().enumerate() {
            check(
                t.is_finite() && *t >= 0.0 && *t <= s.t_final,
                "sim.snapshot_times",
                "every time must lie in [0, t_final]",
            )?;
            if i > 0 {
                check(
                    s.snapshot_times[i - 1] < *t,
                    "sim.snapshot_times",
                    "must be sorted and unique",
                )?;
            }
        }
        if let Some(every) = s.trace_every {
            check(
                every.is_finite() && every > 0.0,
                "sim.trace_every",
                "must be finite and > 0",
            )?;
        }
        check(
            s.boundary.contact_floor_fraction.is_finite() && s.boundary.contact_floor_fraction > 0.0,
            "sim.boundary.contact_floor_fraction",
            "must be finite and > 0",
        )?;

        let out = &self.output;
        check(out.bins_v >= 1, "output.bins_v", "must be >= 1")?;
        check(out.bins_c >= 1, "output.bins_c", "must be >= 1")?;
        check(
            out.c_range[0] > 0.0 && out.c_range[0] < out.c_range[1] && out.c_range[1].is_finite(),
            "output.c_range",
            "must satisfy 0 < lo < hi < inf",
        )?;

        check(!self.groups.is_empty(), "group", "at least one group is required")?;
        check(
            self.groups.len() <= u16::MAX as usize,
            "group",
            "too many groups",
        )?;
        for (i, g) in self.groups.iter().enumerate() {
            let field = |name: &str| format!("group[{i}].{name}");
            check(!g.name.is_empty(), &field("name"), "must not be empty")?;
            check(
                !self.groups[..i].iter().any(|h| h.name == g.name),
                &field("name"),
                "group names must be unique",
            )?;
            check(
                g.fraction.is_finite() && g.fraction > 0.0 && g.fraction <= 1.0,
                &field("fraction"),
                "must lie in (0, 1]",
            )?;
            let [clo, chi] = g.init_c_range;
            check(
                clo.is_finite() && chi.is_finite() && clo > 0.0,
                &field("init_c_range"),
                "bounds must be finite and > 0",
            )?;
            check(clo <= chi, &field("init_c_range"), "inverted bounds")?;
            let [vlo, vhi] = g.init_v_range;
            check(
                vlo >= -1.0 && vhi <= 1.0,
                &field("init_v_range"),
                "must lie within [-1, 1]",
            )?;
            check(vlo <= vhi, &field("init_v_range"), "inverted bounds")?;
            validate_opinion_control(&g.opinion_control, &field("opinion_control"))?;
        }
        let sum: f64 = self.groups.iter().map(|g| g.fraction).sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(ConfigError::FractionSum { sum });
        }
        let sizes = self.group_sizes();
        check(
            sizes.iter().all(|&n| n >= 1),
            "sim.n_particles",
            "too few particles: every group needs at least one agent",
        )?;
        Ok(())
    }

    /// Agents per group: `round(fraction * N)` (ties to even), with the last
    /// group taking the remainder. A group may come out empty or negative
    /// for tiny `N`; those are reported as 0 and rejected by `validate`.
    pub fn group_sizes(&self) -> Vec<usize> {
        let n = self.sim.n_particles as i64;
        let mut sizes = Vec::with_capacity(self.groups.len());
        let mut used = 0i64;
        for g in &self.groups[..self.groups.len().saturating_sub(1)] {
            let k = (g.fraction * n as f64).round_ties_even() as i64;
            sizes.push(k.max(0));
            used += k;
        }
        if !self.groups.is_empty() {
            sizes.push((n - used).max(0));
        }
        sizes.into_iter().map(|k| k as usize).collect()
    }

    /// Serialize to the scenario document format. Group opinion controls are
    /// written in full, so re-parsing does not depend on top-level defaults.
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Schema(e.to_string()))
    }

    /// Whether any group uses the contact control.
    pub fn any_contact_control(&self) -> bool {
        self.groups.iter().any(|g| g.contact_control_enabled)
    }

    /// Whether the local opinion mass is needed to evaluate the controls.
    pub fn needs_local_mass(&self) -> bool {
        self.groups.iter().any(|g| {
            g.contact_control_enabled
                || (g.opinion_control_enabled
                    && g.opinion_control.hv_argument == ActivationArgument::Rho
                    && matches!(g.opinion_control.hv, Activation::Sigmoid { .. }))
        })
    }

    /// Times that get a full snapshot: `0`, the configured schedule and `t_final`.
    pub fn snapshot_schedule(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        times.extend(self.sim.snapshot_times.iter().copied());
        times.push(self.sim.t_final);
        let mut steps: Vec<(u64, f64)> = times.iter().map(|&t| (self.sim.step_of(t), t)).collect();
        steps.sort_by(|a, b| a.0.cmp(&b.0));
        steps.dedup_by_key(|s| s.0);
        steps.into_iter().map(|(_, t)| t).collect()
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 10] = [
    "test1_a", "test1_b", "test1_c", "test1_d", "test2_a", "test2_b", "test2_c", "test3_a",
    "test3_b", "test3_c",
];

/// Particle count the presets use unless asked otherwise.
pub const PRESET_PARTICLES: usize = 10_000;
/// Particle count of the original experiments.
pub const PAPER_SCALE_PARTICLES: usize = 1_000_000;

fn with_opinion_control(mut g: GroupSpec, gamma_v: f64, v_target: f64) -> GroupSpec {
    g.opinion_control.gamma_v = gamma_v;
    g.opinion_control.v_target = v_target;
    g
}

fn leader_mass_base(name: &str, t_final: f64, snapshots: &[f64]) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        sim: SimParams {
            epsilon: 1e-3,
            t_final,
            n_particles: PRESET_PARTICLES,
            seed: 1,
            snapshot_times: snapshots.to_vec(),
            trace_every: Some(0.5),
            ..SimParams::default()
        },
        ..ScenarioConfig::default()
    }
}

/// Built-in scenarios reproducing the three leader/follower experiments.
///
/// * `test1_*`: 25% leaders in `[150,200] x [0.4,0.6]`, 75% mass in
///   `[10,90] x [-0.9,-0.1]`, `T = 50`. Letters: (a) no control, (b) contact
///   control on leaders, (c) opinion control on leaders, (d) both.
/// * `test2_*`: leaders A/B in `[200,250] x [-0.6,-0.4]` / `[0.4,0.6]` with
///   targets `-0.5` / `0.5`, mass in `[50,100] x [-0.8,0.8]`, 25/25/50%,
///   `T = 50`. (a) no control, (b) opinion control with `gamma_v = 1` on both,
///   (c) `gamma_v = 100` on A and `1` on B.
/// * `test3_*`: as test 2 but mass in `[50,100] x [0.1,0.6]`, `T = 150`,
///   `gamma_c = gamma_v = 1`. (a) opinion control on A and B, (b) plus
///   contact control on A, (c) both controls on both.
pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let config = match name {
        "test1_a" | "test1_b" | "test1_c" | "test1_d" => {
            let mut cfg = leader_mass_base(name, 50.0, &[1.0, 5.0, 50.0]);
            let mut leaders = GroupSpec::new("leaders", 0.25, [150.0, 200.0], [0.4, 0.6]);
            let mass = GroupSpec::new("mass", 0.75, [10.0, 90.0], [-0.9, -0.1]);
            leaders.contact_control_enabled = matches!(name, "test1_b" | "test1_d");
            leaders.opinion_control_enabled = matches!(name, "test1_c" | "test1_d");
            cfg.groups = vec![leaders, mass];
            cfg
        }
        "test2_a" | "test2_b" | "test2_c" => {
            let mut cfg = leader_mass_base(name, 50.0, &[1.0, 5.0, 10.0, 15.0, 20.0, 50.0]);
            let gamma_a = if name == "test2_c" { 100.0 } else { 1.0 };
            let mut a = with_opinion_control(
                GroupSpec::new("A", 0.25, [200.0, 250.0], [-0.6, -0.4]),
                gamma_a,
                -0.5,
            );
            let mut b = with_opinion_control(
                GroupSpec::new("B", 0.25, [200.0, 250.0], [0.4, 0.6]),
                1.0,
                0.5,
            );
            let mass = GroupSpec::new("mass", 0.5, [50.0, 100.0], [-0.8, 0.8]);
            let controlled = name != "test2_a";
            a.opinion_control_enabled = controlled;
            b.opinion_control_enabled = controlled;
            cfg.groups = vec![a, b, mass];
            cfg
        }
        "test3_a" | "test3_b" | "test3_c" => {
            let mut cfg = leader_mass_base(name, 150.0, &[1.0, 10.0, 50.0, 100.0, 150.0]);
            cfg.contact_control.gamma_c = 1.0;
            cfg.opinion_control.gamma_v = 1.0;
            let mut a = with_opinion_control(
                GroupSpec::new("A", 0.25, [200.0, 250.0], [-0.6, -0.4]),
                1.0,
                -0.5,
            );
            let mut b = with_opinion_control(
                GroupSpec::new("B", 0.25, [200.0, 250.0], [0.4, 0.6]),
                1.0,
                0.5,
            );
            let mut mass = GroupSpec::new("mass", 0.5, [50.0, 100.0], [0.1, 0.6]);
            mass.opinion_control.gamma_v = 1.0;
            a.opinion_control_enabled = true;
            b.opinion_control_enabled = true;
            a.contact_control_enabled = matches!(name, "test3_b" | "test3_c");
            b.contact_control_enabled = name == "test3_c";
            cfg.groups = vec![a, b, mass];
            cfg
        }
        _ => return Err(ConfigError::UnknownPreset(name.to_string())),
    };
    config.validate()?;
    Ok(config)
}
