//! Independent checks of the simulator.
//!
//! - a closed-form stationary law for log-contacts with opinions frozen;
//! - brute-force minimization of the one-step control costs;
//! - an O(n^2) local opinion mass;
//! - convergence of the scaled rules to their small-increment limits.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{
    Activation, ActivationArgument, ContactControlParams, ContactParams, GroupSpec, NoiseFamily,
    OpinionControlParams, OpinionParams, ScenarioConfig,
};
use crate::control::{contact_control, opinion_control_full, opinion_control_limit, AgentState};
use crate::engine::{self, update_contacts, update_opinions_pair, EngineError};
use crate::model::{limit_value_function, scaled_value_function, ModelError, NoiseSpec};
use crate::rng::{CounterRng, Domain};
use crate::stats::Ensemble;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no mean reversion without a value-function curvature (mu = 0)")]
    NoMeanReversion,
    #[error("epsilon list must be strictly decreasing and positive")]
    EpsilonOrder,
    #[error("empty grid")]
    EmptyGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// Stationary moments of `ln c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyStatePrediction {
    pub mean_log_c: f64,
    pub var_log_c: f64,
}

/// Stationary law of `y = ln c` with the opinion penalty and the contact
/// control frozen at `phi0` and `kappa0`.
///
/// In the small-increment limit the contacts follow
/// `dc = -c [ (mu/2) ln(c/c_bar) + beta (phi0 - kappa0) ] dt + nu c dW`,
/// so by Ito `y` is an Ornstein-Uhlenbeck process with rate `mu/2`,
/// long-run mean `ln c_bar - (2/mu) (beta (phi0 - kappa0) + nu^2/2)` and
/// variance `nu^2 / mu`.
pub fn predict_log_contact_steady_state(
    params: &ContactParams,
    phi0: f64,
    kappa0: f64,
) -> Result<SteadyStatePrediction, OracleError> {
    let ContactParams { beta, mu, c_bar, nu, .. } = *params;
    if !(mu > 0.0) {
        return Err(OracleError::NoMeanReversion);
    }
    Ok(SteadyStatePrediction {
        mean_log_c: c_bar.ln() - (2.0 / mu) * (beta * (phi0 - kappa0) + 0.5 * nu * nu),
        var_log_c: nu * nu / mu,
    })
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

/// Uniform grid of `points` values on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn noise_draws(spec: &NoiseSpec, count: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = CounterRng::new(seed, Domain::Oracle, stream, 0);
    (0..count).map(|_| spec.sample(&mut rng).0).collect()
}

/// Contact-side inputs of the one-step cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactCostCase {
    pub agent: AgentState,
    pub m_v: f64,
    pub epsilon: f64,
    pub contacts: ContactParams,
    pub control: ContactControlParams,
}

/// Grid minimizer of the one-step contact cost
/// `E[ -lambda (c' - c)/c R_c(c) H_c(rho) ] + (eps gamma_c / 2) kappa^2`,
/// with `c'` from the scaled contact rule and `noise_draws` contact-noise
/// samples shared across grid points.
pub fn brute_force_contact_cost(
    case: &ContactCostCase,
    kappa_grid: &[f64],
    noise_draws_count: usize,
    seed: u64,
) -> Result<f64, OracleError> {
    if kappa_grid.is_empty() {
        return Err(OracleError::EmptyGrid);
    }
    let ContactCostCase {
        agent,
        m_v,
        epsilon,
        ref contacts,
        ref control,
    } = *case;
    let eta = NoiseSpec::new(NoiseFamily::TruncatedGaussian, epsilon.sqrt() * contacts.nu, 6.0);
    let draws = noise_draws(&eta, noise_draws_count, seed, 0);
    let activation = crate::model::sigmoid_rc(agent.c, control) * crate::model::sigmoid_hc(agent.rho, control);
    let costs: Vec<f64> = kappa_grid
        .par_iter()
        .map(|&kappa| {
            let gain: f64 = draws
                .iter()
                .map(|&x| (update_contacts(agent.c, agent.v, kappa, m_v, epsilon, contacts, x) - agent.c) / agent.c)
                .sum::<f64>()
                / draws.len() as f64;
            -control.lambda * gain * activation + 0.5 * epsilon * control.gamma_c * kappa * kappa
        })
        .collect();
    Ok(kappa_grid[argmin(&costs)])
}

/// Opinion-side inputs of the one-step cost.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionCostCase {
    pub agent: AgentState,
    pub partner: AgentState,
    pub epsilon: f64,
    pub opinions: OpinionParams,
    pub control: OpinionControlParams,
}

/// Grid minimizer of the one-step opinion cost
/// `E[ (1/2) (v' - v_target)^2 R_v H_v ] + (eps gamma_v alpha / 2) u^2`,
/// with `v'` from the scaled binary rule.
pub fn brute_force_opinion_cost(
    case: &OpinionCostCase,
    u_grid: &[f64],
    noise_draws_count: usize,
    seed: u64,
) -> Result<f64, OracleError> {
    if u_grid.is_empty() {
        return Err(OracleError::EmptyGrid);
    }
    let OpinionCostCase {
        agent,
        partner,
        epsilon,
        ref opinions,
        ref control,
    } = *case;
    let xi = NoiseSpec::new(NoiseFamily::TruncatedGaussian, 1.0, 6.0);
    let draws = noise_draws(&xi, noise_draws_count, seed, 1);
    let weight = crate::control::opinion_activation(control, &agent);
    let costs: Vec<f64> = u_grid
        .par_iter()
        .map(|&u| {
            let spread: f64 = draws
                .iter()
                .map(|&x| {
                    let (v_next, _) = update_opinions_pair(
                        agent.v,
                        partner.v,
                        agent.c,
                        partner.c,
                        u,
                        0.0,
                        epsilon,
                        opinions,
                        x,
                        0.0,
                    );
                    let d = v_next - control.v_target;
                    0.5 * d * d
                })
                .sum::<f64>()
                / draws.len() as f64;
            spread * weight + 0.5 * epsilon * control.gamma_v * opinions.alpha * u * u
        })
        .collect();
    Ok(u_grid[argmin(&costs)])
}

/// Local opinion mass by direct pairwise comparison.
pub fn brute_force_rho(e: &Ensemble, r: f64) -> Vec<f64> {
    let n = e.v.len() as f64;
    e.v.iter()
        .map(|&vi| e.v.iter().filter(|&&w| (w - vi).abs() <= r).count() as f64 / n)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub psi_error: f64,
    pub u_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln error` against `ln eps`; `None` when the
    /// errors vanish.
    pub psi_order: Option<f64>,
    pub u_order: Option<f64>,
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Max-norm distance of the scaled value function and the full opinion
/// control from their small-increment limits, per `eps`.
pub fn scaling_consistency_report(
    s_grid: &[f64],
    epsilon_list: &[f64],
    contacts: &ContactParams,
    control_states: &[(AgentState, AgentState)],
    control: &OpinionControlParams,
    opinions: &OpinionParams,
) -> Result<ScalingReport, OracleError> {
    if epsilon_list.is_empty() || epsilon_list.iter().any(|&e| !(e > 0.0)) {
        return Err(OracleError::EpsilonOrder);
    }
    if epsilon_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(OracleError::EpsilonOrder);
    }
    let mut rows = Vec::with_capacity(epsilon_list.len());
    for &eps in epsilon_list {
        let mut psi_error: f64 = 0.0;
        for &s in s_grid {
            let scaled = scaled_value_function(s, eps, contacts)?;
            let limit = if contacts.mu == 0.0 {
                0.0
            } else {
                limit_value_function(s, contacts)?
            };
            psi_error = psi_error.max((scaled - limit).abs());
        }
        let u_error = control_states.iter().fold(0.0f64, |acc, (a, b)| {
            let full = opinion_control_full(a, b, eps, control, opinions, true);
            acc.max((full - opinion_control_limit(a, control, true)).abs())
        });
        rows.push(ScalingRow {
            epsilon: eps,
            psi_error,
            u_error,
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let psi: Vec<f64> = rows.iter().map(|r| r.psi_error).collect();
    let u: Vec<f64> = rows.iter().map(|r| r.u_error).collect();
    Ok(ScalingReport {
        psi_order: loglog_slope(&eps, &psi),
        u_order: loglog_slope(&eps, &u),
        rows,
    })
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub check: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn within(suite: &str, check: impl Into<String>, expected: f64, observed: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.to_string(),
            check: check.into(),
            expected,
            observed,
            tolerance,
            pass: (observed - expected).abs() <= tolerance,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: observed {:.6} expected {:.6} tol {:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.check,
            self.observed,
            self.expected,
            self.tolerance
        )
    }
}

/// Write check results as CSV.
pub fn write_checks_csv(path: &Path, checks: &[CheckResult]) -> Result<(), OracleError> {
    let p = path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|source| OracleError::Csv { path: p.clone(), source })?;
    for c in checks {
        w.serialize(c).map_err(|source| OracleError::Csv { path: p.clone(), source })?;
    }
    w.flush().map_err(|source| OracleError::Io { path: p, source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    SteadyState,
    Minimizers,
    Scaling,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "steady-state" => Ok(Suite::SteadyState),
            "minimizers" => Ok(Suite::Minimizers),
            "scaling" => Ok(Suite::Scaling),
            "all" => Ok(Suite::All),
            other => Err(format!(
                "unknown suite '{other}' (expected steady-state, minimizers, scaling or all)"
            )),
        }
    }
}

// ---------------------------------------------------------------- steady state

/// Tolerances of the steady-state check.
pub const STEADY_MEAN_TOL: f64 = 0.05;
pub const STEADY_VAR_REL_TOL: f64 = 0.10;

/// Frozen-opinion scenario for the steady-state check.
pub fn steady_state_scenario(n_particles: usize, t_final: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.name = "steady-state".to_string();
    cfg.contacts = ContactParams {
        beta: 1.0,
        mu: 0.1,
        c_bar: 200.0,
        theta: 0.0,
        nu: 0.1,
        ..ContactParams::default()
    };
    cfg.opinions.alpha = 0.0;
    cfg.opinions.sigma = 0.0;
    cfg.groups = vec![GroupSpec::new("population", 1.0, [100.0, 300.0], [-1.0, 1.0])];
    cfg.sim.epsilon = 1e-2;
    cfg.sim.t_final = t_final;
    cfg.sim.n_particles = n_particles;
    cfg.sim.trace_every = None;
    cfg
}

/// Empirical mean and variance of `ln c` over an ensemble.
pub fn log_contact_moments(e: &Ensemble) -> (f64, f64) {
    let n = e.c.len() as f64;
    let logs: Vec<f64> = e.c.iter().map(|c| c.ln()).collect();
    let mean = crate::stats::pairwise_sum(&logs) / n;
    let dev: Vec<f64> = logs.iter().map(|y| (y - mean) * (y - mean)).collect();
    (mean, crate::stats::pairwise_sum(&dev) / n)
}

/// Run a frozen-opinion scenario and compare `ln c` with the prediction.
pub fn steady_state_checks(cfg: &ScenarioConfig) -> Result<Vec<CheckResult>, OracleError> {
    let prediction = predict_log_contact_steady_state(&cfg.contacts, 0.0, 0.0)?;
    let res = engine::run(cfg)?;
    let (mean, var) = log_contact_moments(&res.final_ensemble);
    Ok(vec![
        CheckResult::within("steady-state", "mean_log_c", prediction.mean_log_c, mean, STEADY_MEAN_TOL),
        CheckResult::within(
            "steady-state",
            "var_log_c",
            prediction.var_log_c,
            var,
            STEADY_VAR_REL_TOL * prediction.var_log_c,
        ),
    ])
}

// ---------------------------------------------------------------- minimizers

pub const GRID_POINTS: usize = 201;
pub const MINIMIZER_DRAWS: usize = 100_000;
pub const MINIMIZER_STATES: usize = 50;

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Random contact-cost case number `k`.
pub fn random_contact_case(seed: u64, k: u64) -> ContactCostCase {
    let mut rng = CounterRng::new(seed, Domain::Oracle, 1_000 + k, 0);
    let contacts = ContactParams {
        beta: uniform(&mut rng, 0.5, 2.0),
        mu: uniform(&mut rng, 0.0, 0.9),
        c_bar: uniform(&mut rng, 50.0, 400.0),
        theta: uniform(&mut rng, 0.0, 3.0),
        delta_phi: uniform(&mut rng, 0.0, 0.5),
        nu: uniform(&mut rng, 0.0, 0.3),
    };
    let control = ContactControlParams {
        lambda: uniform(&mut rng, 0.2, 2.0),
        gamma_c: uniform(&mut rng, 0.5, 5.0),
        alpha_r: uniform(&mut rng, 0.01, 1.0),
        alpha_h: uniform(&mut rng, 0.1, 20.0),
        c_min: uniform(&mut rng, 20.0, 300.0),
        r: uniform(&mut rng, 0.1, 1.0),
        rho_star: uniform(&mut rng, 0.2, 0.8),
    };
    ContactCostCase {
        agent: AgentState {
            v: uniform(&mut rng, -1.0, 1.0),
            c: log_uniform(&mut rng, 1.0, 1000.0),
            rho: rng.random(),
        },
        m_v: uniform(&mut rng, -0.5, 0.5),
        epsilon: log_uniform(&mut rng, 1e-3, 1e-1),
        contacts,
        control,
    }
}

fn random_activation<R: Rng>(rng: &mut R, lo: f64, hi: f64, steep: [f64; 2]) -> Activation {
    if rng.random::<bool>() {
        Activation::One
    } else {
        Activation::Sigmoid {
            threshold: uniform(rng, lo, hi),
            steepness: uniform(rng, steep[0], steep[1]),
        }
    }
}

/// Random opinion-cost case number `k`.
pub fn random_opinion_case(seed: u64, k: u64) -> OpinionCostCase {
    let mut rng = CounterRng::new(seed, Domain::Oracle, 2_000 + k, 0);
    let opinions = OpinionParams {
        alpha: uniform(&mut rng, 0.5, 2.0),
        delta: uniform(&mut rng, 0.2, 2.0),
        p: [1.0, 2.0, 3.0][rng.random_range(0..3)],
        sigma: uniform(&mut rng, 0.0, 0.3),
    };
    let control = OpinionControlParams {
        gamma_v: log_uniform(&mut rng, 0.5, 20.0),
        v_target: uniform(&mut rng, -1.0, 1.0),
        rv: random_activation(&mut rng, 20.0, 300.0, [0.01, 0.5]),
        hv: random_activation(&mut rng, 0.2, 0.8, [1.0, 20.0]),
        hv_argument: ActivationArgument::Rho,
    };
    let mut agent = || AgentState {
        v: uniform(&mut rng, -1.0, 1.0),
        c: log_uniform(&mut rng, 1.0, 1000.0),
        rho: rng.random(),
    };
    let (agent, partner) = (agent(), agent());
    OpinionCostCase {
        agent,
        partner,
        epsilon: log_uniform(&mut rng, 1e-3, 1e-1),
        opinions,
        control,
    }
}

/// Grid used for a contact case: `[0, 2 lambda beta / gamma_c]`.
pub fn kappa_grid(case: &ContactCostCase, points: usize) -> Vec<f64> {
    let hi = 2.0 * case.control.lambda * case.contacts.beta / case.control.gamma_c;
    uniform_grid(0.0, hi, points)
}

/// Grid used for an opinion case: symmetric around zero, wide enough to
/// contain every possible minimizer.
pub fn u_grid(case: &OpinionCostCase, points: usize) -> Vec<f64> {
    let ea = case.epsilon * case.opinions.alpha;
    let bound = 1.25 * (2.0 + 2.0 * ea) / case.control.gamma_v;
    uniform_grid(-bound, bound, points)
}

/// Closed-form controls against grid minimizers on random states.
pub fn minimizer_checks(states: usize, draws: usize, seed: u64) -> Result<Vec<CheckResult>, OracleError> {
    let mut out = Vec::with_capacity(2 * states);
    for k in 0..states as u64 {
        let case = random_contact_case(seed, k);
        let grid = kappa_grid(&case, GRID_POINTS);
        let cell = grid[1] - grid[0];
        let closed = contact_control(case.agent.c, case.agent.rho, &case.control, &case.contacts, true);
        let brute = brute_force_contact_cost(&case, &grid, draws, seed ^ k)?;
        out.push(CheckResult::within("minimizers", format!("kappa_{k}"), closed, brute, cell));
    }
    for k in 0..states as u64 {
        let case = random_opinion_case(seed, k);
        let grid = u_grid(&case, GRID_POINTS);
        let cell = grid[1] - grid[0];
        let closed = opinion_control_full(
            &case.agent,
            &case.partner,
            case.epsilon,
            &case.control,
            &case.opinions,
            true,
        );
        let brute = brute_force_opinion_cost(&case, &grid, draws, seed ^ k)?;
        out.push(CheckResult::within("minimizers", format!("u_{k}"), closed, brute, cell));
    }
    Ok(out)
}

// ---------------------------------------------------------------- scaling

pub const SCALING_EPSILONS: [f64; 7] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3];
pub const ORDER_TOL: f64 = 0.4;

/// Fixed grid of opinion-control states for the scaling check.
pub fn scaling_states() -> Vec<(AgentState, AgentState)> {
    let mut out = Vec::new();
    for &v in &[-0.8, -0.2, 0.3, 0.9] {
        for &vs in &[-0.6, 0.1, 0.7] {
            for &(c, cs) in &[(20.0, 150.0), (150.0, 20.0), (80.0, 80.0)] {
                out.push((AgentState { v, c, rho: 0.4 }, AgentState { v: vs, c: cs, rho: 0.6 }));
            }
        }
    }
    out
}

pub fn default_scaling_report() -> Result<ScalingReport, OracleError> {
    let contacts = ContactParams {
        mu: 0.5,
        ..ContactParams::default()
    };
    let s_grid = [0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0];
    let opinions = OpinionParams {
        delta: 2.0,
        ..OpinionParams::default()
    };
    let control = OpinionControlParams {
        gamma_v: 1.0,
        ..OpinionControlParams::default()
    };
    scaling_consistency_report(&s_grid, &SCALING_EPSILONS, &contacts, &scaling_states(), &control, &opinions)
}

pub fn scaling_checks() -> Result<Vec<CheckResult>, OracleError> {
    Ok(scaling_checks_for(&default_scaling_report()?))
}

/// Order checks for a report. Vanishing errors pass as exact agreement.
pub fn scaling_checks_for(report: &ScalingReport) -> Vec<CheckResult> {
    let check = |name: &str, order: Option<f64>, errors: Vec<f64>| match order {
        Some(o) => CheckResult::within("scaling", name, 1.0, o, ORDER_TOL),
        None => {
            let worst = errors.into_iter().fold(0.0, f64::max);
            CheckResult::within("scaling", format!("{name}_max_error"), 0.0, worst, 0.0)
        }
    };
    vec![
        check(
            "psi_order",
            report.psi_order,
            report.rows.iter().map(|r| r.psi_error).collect(),
        ),
        check("u_order", report.u_order, report.rows.iter().map(|r| r.u_error).collect()),
    ]
}

/// Run a suite with its default sizes.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckResult>, OracleError> {
    let mut out = Vec::new();
    if matches!(suite, Suite::SteadyState | Suite::All) {
        out.extend(steady_state_checks(&steady_state_scenario(100_000, 200.0))?);
    }
    if matches!(suite, Suite::Minimizers | Suite::All) {
        out.extend(minimizer_checks(MINIMIZER_STATES, MINIMIZER_DRAWS, seed)?);
    }
    if matches!(suite, Suite::Scaling | Suite::All) {
        out.extend(scaling_checks()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::local_opinion_mass_all;
    use proptest::prelude::*;

    #[test]
    fn steady_state_examples() {
        let p = ContactParams {
            mu: 0.1,
            ..ContactParams::default()
        };
        let pred = predict_log_contact_steady_state(&p, 0.0, 0.0).unwrap();
        assert!((pred.var_log_c - 0.1).abs() < 1e-15);
        assert!((pred.mean_log_c - (200f64.ln() - 0.1)).abs() < 1e-12);

        let quiet = ContactParams { nu: 0.0, ..p };
        let pred = predict_log_contact_steady_state(&quiet, 0.3, 0.3).unwrap();
        assert_eq!(pred.mean_log_c, 200f64.ln());
        assert_eq!(pred.var_log_c, 0.0);

        let up = predict_log_contact_steady_state(&p, 0.0, 0.2).unwrap();
        assert!(up.mean_log_c > 200f64.ln() - 0.1);

        assert!(matches!(
            predict_log_contact_steady_state(&ContactParams::default(), 0.0, 0.0),
            Err(OracleError::NoMeanReversion)
        ));
    }

    #[test]
    fn steady_state_small_run() {
        // short, small version of the full check
        let cfg = steady_state_scenario(4_000, 100.0);
        let checks = steady_state_checks(&cfg).unwrap();
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
    }

    fn saturated_case() -> ContactCostCase {
        ContactCostCase {
            agent: AgentState {
                v: 0.0,
                c: 1.0,
                rho: 1.0,
            },
            m_v: 0.0,
            epsilon: 1e-2,
            contacts: ContactParams::default(),
            control: ContactControlParams {
                alpha_r: 50.0,
                alpha_h: 200.0,
                rho_star: 0.0,
                ..ContactControlParams::default()
            },
        }
    }

    #[test]
    fn contact_minimizer_examples() {
        let case = saturated_case();
        let grid = kappa_grid(&case, GRID_POINTS);
        let k = brute_force_contact_cost(&case, &grid, 10_000, 3).unwrap();
        assert!((k - 1.0).abs() <= grid[1] - grid[0]);

        let mut off = case.clone();
        off.control.lambda = 0.0;
        let grid0 = uniform_grid(0.0, 2.0, GRID_POINTS);
        assert_eq!(brute_force_contact_cost(&off, &grid0, 1_000, 3).unwrap(), 0.0);

        let mut heavy = case;
        heavy.control.gamma_c = 1e6;
        assert_eq!(brute_force_contact_cost(&heavy, &grid0, 1_000, 3).unwrap(), 0.0);
    }

    #[test]
    fn opinion_minimizer_examples() {
        let case = OpinionCostCase {
            agent: AgentState {
                v: 0.0,
                c: 100.0,
                rho: 0.5,
            },
            partner: AgentState {
                v: 0.95,
                c: 100.0,
                rho: 0.5,
            },
            epsilon: 1e-3,
            opinions: OpinionParams::default(),
            control: OpinionControlParams::default(),
        };
        let grid = u_grid(&case, GRID_POINTS);
        let cell = grid[1] - grid[0];
        let closed = opinion_control_full(&case.agent, &case.partner, 1e-3, &case.control, &case.opinions, true);
        let brute = brute_force_opinion_cost(&case, &grid, 10_000, 5).unwrap();
        assert!((brute - closed).abs() <= cell);

        let mut at_target = case.clone();
        at_target.agent.v = at_target.control.v_target;
        at_target.partner.v = at_target.control.v_target;
        let brute = brute_force_opinion_cost(&at_target, &grid, 10_000, 5).unwrap();
        assert!(brute.abs() <= cell);

        let mut off = case;
        off.control.rv = Activation::Sigmoid {
            threshold: 1e9,
            steepness: 1.0,
        };
        assert_eq!(brute_force_opinion_cost(&off, &grid, 1_000, 5).unwrap().abs(), 0.0);
    }

    #[test]
    fn minimizers_on_a_few_random_states() {
        let checks = minimizer_checks(5, 20_000, 11).unwrap();
        assert!(checks.iter().all(|c| c.pass), "{checks:#?}");
    }

    #[test]
    fn brute_rho_examples() {
        let e = Ensemble {
            v: vec![-1.0, 0.0, 1.0],
            c: vec![1.0; 3],
            group: vec![0; 3],
        };
        assert_eq!(brute_force_rho(&e, 0.5), vec![1.0 / 3.0; 3]);
        assert_eq!(brute_force_rho(&e, 1.0), vec![2.0 / 3.0, 1.0, 2.0 / 3.0]);
    }

    #[test]
    fn scaling_examples() {
        let report = default_scaling_report().unwrap();
        let psi = report.psi_order.unwrap();
        let u = report.u_order.unwrap();
        assert!((psi - 1.0).abs() < ORDER_TOL && (u - 1.0).abs() < ORDER_TOL, "{psi} {u}");
        let last = &report.rows[report.rows.len() - 2..];
        let ratio = last[0].psi_error / last[1].psi_error;
        assert!((1.6..=2.4).contains(&ratio), "{ratio}");

        let flat = scaling_consistency_report(
            &[0.5, 1.0, 3.0],
            &SCALING_EPSILONS,
            &ContactParams::default(),
            &[],
            &OpinionControlParams::default(),
            &OpinionParams::default(),
        )
        .unwrap();
        assert!(flat.rows.iter().all(|r| r.psi_error == 0.0));
        assert_eq!(flat.psi_order, None);
        assert!(scaling_checks_for(&flat).iter().all(|c| c.pass));

        let unit = scaling_consistency_report(
            &[1.0],
            &SCALING_EPSILONS,
            &ContactParams {
                mu: 0.4,
                ..ContactParams::default()
            },
            &[],
            &OpinionControlParams::default(),
            &OpinionParams::default(),
        )
        .unwrap();
        assert!(unit.rows.iter().all(|r| r.psi_error == 0.0));

        assert!(matches!(
            scaling_consistency_report(
                &[1.0],
                &[1e-3, 1e-2],
                &ContactParams::default(),
                &[],
                &OpinionControlParams::default(),
                &OpinionParams::default()
            ),
            Err(OracleError::EpsilonOrder)
        ));
    }

    #[test]
    fn suite_names() {
        assert_eq!("steady-state".parse::<Suite>(), Ok(Suite::SteadyState));
        assert_eq!("all".parse::<Suite>(), Ok(Suite::All));
        assert!("fast".parse::<Suite>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn fast_rho_matches_brute_force(
            v in proptest::collection::vec(-1.0f64..=1.0, 1..200),
            r in 0.0f64..2.0,
        ) {
            let n = v.len();
            let e = Ensemble { v, c: vec![1.0; n], group: vec![0; n] };
            prop_assert_eq!(local_opinion_mass_all(&e.v, r), brute_force_rho(&e, r));
        }
    }
}
