//! Asymptotic Nanbu-type particle scheme.
//!
//! With the interaction scale equal to the time step, every selected pair
//! interacts at every step. A step:
//!
//! 1. freezes the step context: mean opinion and (when a control needs it)
//!    the local opinion mass of every agent;
//! 2. draws a uniform random pairing of `floor(N/2)` disjoint pairs;
//! 3. updates contacts and opinions of both members of each pair from the
//!    frozen pre-step state;
//! 4. applies the boundary policy.
//!
//! Randomness comes from counter-based streams keyed by
//! `(seed, step, agent)`, and pair updates write disjoint slots, so the
//! post-step ensemble is bit-identical for any number of worker threads.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{
    ConfigError, ContactParams, MvMode, OpinionBoundary, OpinionControlParams, OpinionParams, ScenarioConfig,
};
use crate::control::{contact_control, opinion_control_given_weight, AgentState};
use crate::model::{
    compromise_unchecked, diffusion_weight, exp_m1_fast, scaled_eta_lower_bound, NoiseSpec,
};
use crate::rng::{stream_key, CounterRng, Domain};
use crate::stats::{self, Ensemble, HistogramSpec, Means, Observables, StatsError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("pairing needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("{0} noise: the admissibility floor {1} leaves no usable support")]
    InadmissibleNoise(&'static str, f64),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Counters of boundary-policy interventions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    /// Opinions pulled back into `[-1, 1]`.
    pub opinion_clamps: u64,
    /// Contact-noise redraws after a non-positive update.
    pub contact_resamples: u64,
    /// Contacts set to the floor after exhausting the redraws.
    pub contact_clamps: u64,
    /// Noise draws rejected by truncation or by the admissibility floor.
    pub noise_rejections: u64,
    /// Interacting pairs whose opinions were too far apart to compromise.
    pub out_of_confidence_pairs: u64,
    /// Agent-steps spent unpaired (odd population).
    pub idle_agent_steps: u64,
}

impl Diagnostics {
    fn add(&mut self, o: &Diagnostics) {
        self.opinion_clamps += o.opinion_clamps;
        self.contact_resamples += o.contact_resamples;
        self.contact_clamps += o.contact_clamps;
        self.noise_rejections += o.noise_rejections;
        self.out_of_confidence_pairs += o.out_of_confidence_pairs;
        self.idle_agent_steps += o.idle_agent_steps;
    }

    /// Total number of boundary clamps of either variable.
    pub fn clamps(&self) -> u64 {
        self.opinion_clamps + self.contact_clamps
    }
}

/// Quantities frozen at the start of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepContext {
    pub step: u64,
    pub epsilon: f64,
    pub m_v: f64,
    /// Local opinion mass per agent; empty when no control uses it.
    pub rho: Vec<f64>,
    contact_key: u64,
    opinion_key: u64,
}

/// Outcome of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    /// Full snapshots at `0`, every configured time, and `t_final`.
    pub snapshots: Vec<Observables>,
    /// Means at `0`, every `trace_every`, every snapshot time and `t_final`.
    pub trace: Vec<Means>,
    pub final_ensemble: Ensemble,
    pub diagnostics: Diagnostics,
    pub steps: u64,
}

impl RunResult {
    pub fn snapshot_at(&self, t: f64) -> Option<&Observables> {
        self.snapshots.iter().find(|s| (s.t() - t).abs() < 1e-9)
    }

    pub fn final_snapshot(&self) -> &Observables {
        self.snapshots.last().expect("a run always has a snapshot")
    }
}

/// Sample the initial ensemble: contiguous blocks per group, each agent
/// uniform on its group's rectangle.
pub fn initialize(config: &ScenarioConfig) -> Result<Ensemble, EngineError> {
    config.validate()?;
    let sizes = config.group_sizes();
    let n: usize = sizes.iter().sum();
    let mut e = Ensemble {
        v: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        group: Vec::with_capacity(n),
    };
    for (g, (spec, &size)) in config.groups.iter().zip(&sizes).enumerate() {
        let [clo, chi] = spec.init_c_range;
        let [vlo, vhi] = spec.init_v_range;
        for _ in 0..size {
            let i = e.v.len() as u64;
            let mut rng = CounterRng::new(config.sim.seed, Domain::Init, 0, i);
            let uc: f64 = rng.random();
            let uv: f64 = rng.random();
            e.c.push(clo + (chi - clo) * uc);
            e.v.push(vlo + (vhi - vlo) * uv);
            e.group.push(g as u16);
        }
    }
    Ok(e)
}

/// Number of pairs per step. `round(n/2)` with ties to even where that is
/// attainable without repeating an agent, i.e. `floor(n/2)`.
pub fn pair_count(n: usize) -> usize {
    n / 2
}

/// Uniform random disjoint pairs: shuffle, then split into consecutive pairs.
pub fn sample_pairs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<(u32, u32)>, EngineError> {
    let mut perm = Vec::new();
    let mut pairs = Vec::new();
    sample_pairs_into(n, rng, &mut perm, &mut pairs)?;
    Ok(pairs)
}

fn sample_pairs_into<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    perm: &mut Vec<u32>,
    pairs: &mut Vec<(u32, u32)>,
) -> Result<(), EngineError> {
    if n < 2 {
        return Err(EngineError::TooFewAgents(n));
    }
    perm.clear();
    perm.extend(0..n as u32);
    perm.shuffle(rng);
    pairs.clear();
    pairs.extend(perm.chunks_exact(2).take(pair_count(n)).map(|p| (p[0], p[1])));
    Ok(())
}

/// Scaled contact rule before any boundary handling:
/// `c (1 - eps beta (Psi_eps(c/c_bar) + Phi(v) - kappa) + eta)`.
#[inline]
pub fn update_contacts(c: f64, v: f64, kappa: f64, m_v: f64, epsilon: f64, params: &ContactParams, eta: f64) -> f64 {
    let drift = ContactKernel::new(params, epsilon).drift(c, v, kappa, m_v);
    c * (1.0 - drift + eta)
}

/// Constants of the contact drift for fixed parameters and step.
#[derive(Debug, Clone, Copy)]
struct ContactKernel {
    inv_c_bar: f64,
    epsilon: f64,
    /// `mu / (1 - mu)`
    asymmetry: f64,
    /// `(1 + mu) / (1 - mu)`
    ratio: f64,
    eps_beta: f64,
    theta: f64,
    delta_phi_sq: f64,
}

impl ContactKernel {
    fn new(params: &ContactParams, epsilon: f64) -> Self {
        let mu = params.mu;
        Self {
            inv_c_bar: 1.0 / params.c_bar,
            epsilon,
            asymmetry: mu / (1.0 - mu),
            ratio: (1.0 + mu) / (1.0 - mu),
            eps_beta: epsilon * params.beta,
            theta: params.theta,
            delta_phi_sq: params.delta_phi * params.delta_phi,
        }
    }

    /// `eps beta (Psi_eps + Phi - kappa)`. The `1/(beta eps)` of the value
    /// function cancels against the step factor.
    #[inline]
    fn drift(&self, c: f64, v: f64, kappa: f64, m_v: f64) -> f64 {
        let value = if self.asymmetry == 0.0 {
            0.0
        } else {
            let em1 = exp_m1_fast(self.epsilon * (c * self.inv_c_bar).ln());
            self.asymmetry * em1 / (self.ratio * (em1 + 1.0) + 1.0)
        };
        let d = v - m_v;
        value + self.eps_beta * (self.theta * (d * d - self.delta_phi_sq) - kappa)
    }
}

/// Scaled binary opinion rule before any boundary handling. `xi` and
/// `xi_star` are unit-variance draws; they are scaled by
/// `sqrt(eps) sigma D(v)` here.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn update_opinions_pair(
    v: f64,
    v_star: f64,
    c: f64,
    c_star: f64,
    u: f64,
    u_star: f64,
    epsilon: f64,
    params: &OpinionParams,
    xi: f64,
    xi_star: f64,
) -> (f64, f64) {
    let ea = epsilon * params.alpha;
    let noise = epsilon.sqrt() * params.sigma;
    let p = compromise_unchecked(v, v_star, c, c_star, params);
    let p_star = compromise_unchecked(v_star, v, c_star, c, params);
    (
        v + ea * (p * (v_star - v) + u) + noise * diffusion_weight(v) * xi,
        v_star + ea * (p_star * (v - v_star) + u_star) + noise * diffusion_weight(v_star) * xi_star,
    )
}

#[derive(Debug, Clone)]
struct GroupRuntime {
    contact_control: bool,
    opinion_control: bool,
    opinion_params: OpinionControlParams,
}

/// Stepper holding the ensemble and reusable buffers.
#[derive(Debug, Clone)]
pub struct Engine {
    config: ScenarioConfig,
    groups: Vec<GroupRuntime>,
    ensemble: Ensemble,
    step: u64,
    m_v_init: f64,
    eta: NoiseSpec,
    xi: NoiseSpec,
    kernel: ContactKernel,
    c_floor: f64,
    needs_rho: bool,
    any_contact_control: bool,
    frozen_opinions: bool,
    diagnostics: Diagnostics,
    perm: Vec<u32>,
    pairs: Vec<(u32, u32)>,
    c_next: Vec<f64>,
    opinions: Vec<(f64, f64)>,
    order: Vec<(f64, u32)>,
}

impl Engine {
    pub fn new(config: &ScenarioConfig) -> Result<Self, EngineError> {
        let ensemble = initialize(config)?;
        Self::with_ensemble(config, ensemble)
    }

    /// Start from a given ensemble instead of sampling one.
    pub fn with_ensemble(config: &ScenarioConfig, ensemble: Ensemble) -> Result<Self, EngineError> {
        config.validate()?;
        if ensemble.len() < 2 {
            return Err(EngineError::TooFewAgents(ensemble.len()));
        }
        let eps = config.sim.epsilon;
        let eta = NoiseSpec::new(
            config.noise.eta,
            eps.sqrt() * config.contacts.nu,
            config.noise.truncation,
        )
        .with_lower_bound(scaled_eta_lower_bound(&config.contacts, eps));
        if !eta.has_support() {
            return Err(EngineError::InadmissibleNoise("contact", eta.lower_bound));
        }
        let xi = NoiseSpec::new(config.noise.xi, 1.0, config.noise.truncation);
        let groups = config
            .groups
            .iter()
            .map(|g| GroupRuntime {
                contact_control: g.contact_control_enabled,
                opinion_control: g.opinion_control_enabled,
                opinion_params: g.opinion_control.clone(),
            })
            .collect();
        let m_v_init = stats::mean(&ensemble.v)?;
        let n = ensemble.len();
        Ok(Self {
            config: config.clone(),
            groups,
            m_v_init,
            eta,
            xi,
            kernel: ContactKernel::new(&config.contacts, eps),
            c_floor: config.sim.boundary.contact_floor_fraction * config.contacts.c_bar,
            needs_rho: config.needs_local_mass(),
            any_contact_control: config.any_contact_control(),
            frozen_opinions: config.opinions.alpha == 0.0 && config.opinions.sigma == 0.0,
            diagnostics: Diagnostics::default(),
            perm: Vec::with_capacity(n),
            pairs: Vec::with_capacity(n / 2),
            c_next: Vec::with_capacity(n),
            opinions: Vec::with_capacity(n / 2),
            order: (0..n as u32).map(|i| (0.0, i)).collect(),
            ensemble,
            step: 0,
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn into_ensemble(self) -> Ensemble {
        self.ensemble
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.sim.epsilon
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    /// Freeze the mean opinion and local opinion masses of the current state.
    pub fn context(&mut self) -> StepContext {
        let m_v = match self.config.sim.mv_mode {
            MvMode::Instantaneous => stats::pairwise_sum(&self.ensemble.v) / self.ensemble.len() as f64,
            MvMode::FrozenAtInit => self.m_v_init,
        };
        let rho = if self.needs_rho {
            self.local_mass()
        } else {
            Vec::new()
        };
        StepContext {
            step: self.step,
            epsilon: self.config.sim.epsilon,
            m_v,
            rho,
            contact_key: stream_key(self.config.sim.seed, Domain::ContactNoise, self.step),
            opinion_key: stream_key(self.config.sim.seed, Domain::OpinionNoise, self.step),
        }
    }

    /// Local opinion mass with a two-pointer sweep over the agents sorted by
    /// opinion. The sort order from the previous step is reused, which is
    /// nearly sorted already.
    fn local_mass(&mut self) -> Vec<f64> {
        let v = &self.ensemble.v;
        let r = self.config.contact_control.r;
        for entry in self.order.iter_mut() {
            entry.0 = v[entry.1 as usize];
        }
        self.order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let sorted = &self.order;
        let n = v.len();
        let mut rho = vec![0.0; n];
        let (mut lo, mut hi) = (0usize, 0usize);
        for &(vi, i) in sorted {
            while lo < n && sorted[lo].0 - vi < -r {
                lo += 1;
            }
            hi = hi.max(lo);
            while hi < n && sorted[hi].0 - vi <= r {
                hi += 1;
            }
            rho[i as usize] = (hi - lo) as f64 / n as f64;
        }
        rho
    }

    #[inline(always)]
    fn sample_eta(&self, rng: &mut CounterRng, diag: &mut Diagnostics) -> f64 {
        let (x, rejected) = self.eta.sample(rng);
        diag.noise_rejections += rejected as u64;
        x
    }

    /// New contacts of `agent`, with the resample-then-floor policy.
    #[inline(always)]
    fn agent_contacts(&self, ctx: &StepContext, agent: usize, c: f64, v: f64, kappa: f64, diag: &mut Diagnostics) -> f64 {
        let drift = self.kernel.drift(c, v, kappa, ctx.m_v);
        let mut rng = CounterRng::at(ctx.contact_key, agent as u64);
        let mut next = c * (1.0 - drift + self.sample_eta(&mut rng, diag));
        let mut redraws = 0;
        while !(next > 0.0) && redraws < self.config.sim.boundary.contact_resample_limit {
            redraws += 1;
            diag.contact_resamples += 1;
            next = c * (1.0 - drift + self.sample_eta(&mut rng, diag));
        }
        if !(next > 0.0) {
            diag.contact_clamps += 1;
            next = self.c_floor;
        }
        next
    }

    #[inline]
    fn xi(&self, ctx: &StepContext, agent: usize, diag: &mut Diagnostics) -> f64 {
        if self.config.opinions.sigma == 0.0 {
            return 0.0;
        }
        let mut rng = CounterRng::at(ctx.opinion_key, agent as u64);
        let (x, rejected) = self.xi.sample(&mut rng);
        diag.noise_rejections += rejected as u64;
        x
    }

    #[inline]
    fn enforce_opinion(&self, v: f64, diag: &mut Diagnostics) -> f64 {
        if (-1.0..=1.0).contains(&v) {
            return v;
        }
        diag.opinion_clamps += 1;
        match self.config.sim.boundary.opinion {
            OpinionBoundary::Clamp => v.clamp(-1.0, 1.0),
            OpinionBoundary::Reflect => {
                let r = if v > 1.0 { 2.0 - v } else { -2.0 - v };
                r.clamp(-1.0, 1.0)
            }
        }
    }

    fn agent_state(&self, ctx: &StepContext, i: usize) -> AgentState {
        AgentState {
            v: self.ensemble.v[i],
            c: self.ensemble.c[i],
            rho: if ctx.rho.is_empty() { f64::NAN } else { ctx.rho[i] },
        }
    }

    /// New contacts of one agent. Depends only on the agent and the frozen
    /// context, never on the partner.
    #[inline]
    fn contact_update(&self, ctx: &StepContext, i: usize, diag: &mut Diagnostics) -> f64 {
        let e = &self.ensemble;
        let (c, v) = (e.c[i], e.v[i]);
        let kappa = if self.groups[e.group[i] as usize].contact_control {
            let rho = if ctx.rho.is_empty() { f64::NAN } else { ctx.rho[i] };
            contact_control(c, rho, &self.config.contact_control, &self.config.contacts, true)
        } else {
            0.0
        };
        self.agent_contacts(ctx, i, c, v, kappa, diag)
    }

    /// [`Self::contact_update`] over the agents `base..base + out.len()`.
    fn contact_block(&self, ctx: &StepContext, base: usize, out: &mut [f64], idle: Option<usize>) -> Diagnostics {
        let mut d = Diagnostics::default();
        let e = &self.ensemble;
        let end = base + out.len();
        if self.any_contact_control {
            for (off, slot) in out.iter_mut().enumerate() {
                let i = base + off;
                *slot = if idle == Some(i) { e.c[i] } else { self.contact_update(ctx, i, &mut d) };
            }
        } else {
            let states = e.c[base..end].iter().zip(&e.v[base..end]);
            for (off, (slot, (&c, &v))) in out.iter_mut().zip(states).enumerate() {
                let i = base + off;
                *slot = if idle == Some(i) { c } else { self.agent_contacts(ctx, i, c, v, 0.0, &mut d) };
            }
        }
        d
    }

    fn opinion_update(&self, ctx: &StepContext, i: usize, j: usize, diag: &mut Diagnostics) -> (f64, f64) {
        let op = &self.config.opinions;
        let si = self.agent_state(ctx, i);
        let sj = self.agent_state(ctx, j);
        let gi = &self.groups[self.ensemble.group[i] as usize];
        let gj = &self.groups[self.ensemble.group[j] as usize];
        if (si.v - sj.v).abs() >= op.delta {
            diag.out_of_confidence_pairs += 1;
        }
        let ea = ctx.epsilon * op.alpha;
        let p_ij = compromise_unchecked(si.v, sj.v, si.c, sj.c, op);
        let p_ji = compromise_unchecked(sj.v, si.v, sj.c, si.c, op);
        let u_i = if gi.opinion_control {
            opinion_control_given_weight(&si, sj.v, p_ij, ea, &gi.opinion_params)
        } else {
            0.0
        };
        let u_j = if gj.opinion_control {
            opinion_control_given_weight(&sj, si.v, p_ji, ea, &gj.opinion_params)
        } else {
            0.0
        };
        let noise = ctx.epsilon.sqrt() * op.sigma;
        let xi_i = self.xi(ctx, i, diag);
        let xi_j = self.xi(ctx, j, diag);
        let vi = si.v + ea * (p_ij * (sj.v - si.v) + u_i) + noise * diffusion_weight(si.v) * xi_i;
        let vj = sj.v + ea * (p_ji * (si.v - sj.v) + u_j) + noise * diffusion_weight(sj.v) * xi_j;
        (self.enforce_opinion(vi, diag), self.enforce_opinion(vj, diag))
    }

    /// Advance the ensemble by one time step.
    pub fn step(&mut self) -> Result<(), EngineError> {
        const CHUNK: usize = 1024;
        let n = self.ensemble.len();
        let ctx = self.context();
        let mut perm = std::mem::take(&mut self.perm);
        let mut pairs = std::mem::take(&mut self.pairs);
        // frozen opinions only need the pairing to know who sits out
        let idle = if self.frozen_opinions && n % 2 == 0 {
            pairs.clear();
            None
        } else {
            let mut pair_rng = CounterRng::new(self.config.sim.seed, Domain::Pairing, self.step, 0);
            sample_pairs_into(n, &mut pair_rng, &mut perm, &mut pairs)?;
            (n % 2 == 1).then(|| perm[n - 1] as usize)
        };

        let mut c_next = std::mem::take(&mut self.c_next);
        c_next.resize(n, 0.0);
        let mut opinions = std::mem::take(&mut self.opinions);
        let this = &*self;
        let merge = |mut a: Diagnostics, b: Diagnostics| {
            a.add(&b);
            a
        };
        let mut diag = c_next
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(k, out)| this.contact_block(&ctx, k * CHUNK, out, idle))
            .reduce(Diagnostics::default, merge);
        if !this.frozen_opinions {
            opinions.resize(pairs.len(), (0.0, 0.0));
            let d = pairs
                .par_chunks(CHUNK)
                .zip(opinions.par_chunks_mut(CHUNK))
                .map(|(pc, oc)| {
                    let mut d = Diagnostics::default();
                    for (&(i, j), o) in pc.iter().zip(oc) {
                        *o = this.opinion_update(&ctx, i as usize, j as usize, &mut d);
                    }
                    d
                })
                .reduce(Diagnostics::default, merge);
            diag.add(&d);
        }
        diag.idle_agent_steps += idle.is_some() as u64;

        let e = &mut self.ensemble;
        if !self.frozen_opinions {
            for (&(i, j), &(vi, vj)) in pairs.iter().zip(&opinions) {
                e.v[i as usize] = vi;
                e.v[j as usize] = vj;
            }
        }
        std::mem::swap(&mut e.c, &mut c_next);
        self.diagnostics.add(&diag);
        self.perm = perm;
        self.pairs = pairs;
        self.c_next = c_next;
        self.opinions = opinions;
        self.step += 1;
        Ok(())
    }

    fn histogram_spec(&self) -> HistogramSpec {
        let out = &self.config.output;
        HistogramSpec {
            bins_v: out.bins_v,
            bins_c: out.bins_c,
            c_lo: out.c_range[0],
            c_hi: out.c_range[1],
        }
    }

    pub fn observe(&self) -> Result<Observables, EngineError> {
        Ok(stats::observe(
            &self.ensemble,
            self.groups.len(),
            self.time(),
            self.histogram_spec(),
        )?)
    }

    pub fn means(&self) -> Result<Means, EngineError> {
        Ok(stats::means(&self.ensemble, self.groups.len(), self.time())?)
    }

    /// Run to `t_final`, recording snapshots and the means trace.
    pub fn run_to_end(mut self) -> Result<RunResult, EngineError> {
        let sim = self.config.sim.clone();
        let n_steps = sim.n_steps();
        let snapshot_steps: Vec<u64> = self
            .config
            .snapshot_schedule()
            .iter()
            .map(|&t| sim.step_of(t).min(n_steps))
            .collect();
        let stride = sim.trace_every.map(|dt| ((dt / sim.epsilon).round() as u64).max(1));
        let mut snapshots = Vec::with_capacity(snapshot_steps.len());
        let mut trace = Vec::new();
        let mut next_snapshot = 0usize;
        loop {
            let k = self.step;
            let is_snapshot = next_snapshot < snapshot_steps.len() && snapshot_steps[next_snapshot] == k;
            if is_snapshot {
                let obs = self.observe()?;
                trace.push(obs.means.clone());
                snapshots.push(obs);
                next_snapshot += 1;
            } else if k == n_steps || stride.is_some_and(|s| k % s == 0) {
                trace.push(self.means()?);
            }
            if k >= n_steps {
                break;
            }
            self.step()?;
        }
        Ok(RunResult {
            snapshots,
            trace,
            diagnostics: self.diagnostics,
            steps: self.step,
            final_ensemble: self.ensemble,
        })
    }
}

/// Initialize and run a scenario on the current rayon pool.
pub fn run(config: &ScenarioConfig) -> Result<RunResult, EngineError> {
    Engine::new(config)?.run_to_end()
}

/// As [`run`], on a dedicated pool of `threads` workers.
pub fn run_with_threads(config: &ScenarioConfig, threads: usize) -> Result<RunResult, EngineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| EngineError::ThreadPool(e.to_string()))?;
    pool.install(|| run(config))
}
