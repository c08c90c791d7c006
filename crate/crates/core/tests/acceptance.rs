//! End-to-end acceptance checks at desk scale.
//!
//! Prints one `PASS`/`FAIL` line per criterion followed by a summary. The
//! process exits non-zero on failures only when `POPNET_ACCEPTANCE_STRICT=1`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use popnet::config::{preset, ScenarioConfig, PRESETS};
use popnet::engine::{run_with_threads, RunResult};
use popnet::oracles::{self, CheckResult};
use popnet::output::write_timeseries;
use popnet::stats::{local_maxima, smooth, Histograms};

const SEED: u64 = 1;

const STEADY_PARTICLES: usize = 100_000;
const STEADY_HORIZON: f64 = 200.0;
const STEADY_BUDGET: Duration = Duration::from_secs(120);
const MINIMIZER_BUDGET: Duration = Duration::from_secs(300);
const SCALING_BUDGET: Duration = Duration::from_secs(10);
const TEST1_BUDGET: Duration = Duration::from_secs(600);

/// Batches of the conservation run.
const CONSERVATION_BATCHES: usize = 20;
const CONSERVATION_HORIZON: f64 = 10.0;
const CONSERVATION_SIGMA: f64 = 0.05;
const CONSERVATION_STD_ERRORS: f64 = 4.0;

const TARGET_OPINION_TOL: f64 = 0.15;
const FOLLOWED_TARGET: f64 = 0.3;
/// Half-width of the moving average applied before peak search.
const PEAK_SMOOTHING: usize = 2;
const NEGATIVE_POLE: (f64, f64) = (-0.7, -0.3);
const POSITIVE_POLE: (f64, f64) = (0.3, 0.7);
const CENTRE: (f64, f64) = (-0.2, 0.2);
const DETERMINISM_THREADS: usize = 8;

struct Outcome {
    criterion: &'static str,
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(criterion: &'static str, pass: bool, detail: String) -> Self {
        Self { criterion, pass, detail }
    }

    fn errored(criterion: &'static str, e: impl std::fmt::Display) -> Self {
        Self::new(criterion, false, format!("error: {e}"))
    }
}

struct PresetRun {
    result: RunResult,
    wall: Duration,
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn report_checks(checks: &[CheckResult]) -> bool {
    for c in checks {
        println!("    {c}");
    }
    checks.iter().all(|c| c.pass)
}

fn steady_state() -> Outcome {
    let cfg = oracles::steady_state_scenario(STEADY_PARTICLES, STEADY_HORIZON);
    let (checks, wall) = timed(|| oracles::steady_state_checks(&cfg));
    match checks {
        Ok(checks) => {
            let ok = report_checks(&checks);
            let in_time = wall <= STEADY_BUDGET;
            Outcome::new(
                "1 steady state",
                ok && in_time,
                format!("{} checks, {:.1}s (budget {}s)", checks.len(), wall.as_secs_f64(), STEADY_BUDGET.as_secs()),
            )
        }
        Err(e) => Outcome::errored("1 steady state", e),
    }
}

fn minimizers() -> Outcome {
    let (checks, wall) = timed(|| {
        oracles::minimizer_checks(oracles::MINIMIZER_STATES, oracles::MINIMIZER_DRAWS, SEED)
    });
    match checks {
        Ok(checks) => {
            let failed: Vec<&CheckResult> = checks.iter().filter(|c| !c.pass).collect();
            for c in &failed {
                println!("    {c}");
            }
            let worst = checks
                .iter()
                .map(|c| (c.observed - c.expected).abs() / c.tolerance)
                .fold(0.0, f64::max);
            let in_time = wall <= MINIMIZER_BUDGET;
            Outcome::new(
                "2 minimizers",
                failed.is_empty() && in_time,
                format!(
                    "{} states, worst gap {:.2} grid cells, {:.1}s (budget {}s)",
                    checks.len(),
                    worst,
                    wall.as_secs_f64(),
                    MINIMIZER_BUDGET.as_secs()
                ),
            )
        }
        Err(e) => Outcome::errored("2 minimizers", e),
    }
}

fn scaling() -> Outcome {
    let (checks, wall) = timed(oracles::scaling_checks);
    match checks {
        Ok(checks) => {
            let ok = report_checks(&checks);
            let in_time = wall <= SCALING_BUDGET;
            Outcome::new(
                "3 scaling",
                ok && in_time,
                format!("{:.2}s (budget {}s)", wall.as_secs_f64(), SCALING_BUDGET.as_secs()),
            )
        }
        Err(e) => Outcome::errored("3 scaling", e),
    }
}

fn conservation_scenario() -> ScenarioConfig {
    let mut cfg = preset("test1_a").expect("preset");
    cfg.name = "conservation".into();
    for g in &mut cfg.groups {
        g.contact_control_enabled = false;
        g.opinion_control_enabled = false;
    }
    cfg.opinions.p = 0.0;
    cfg.opinions.delta = 2.0;
    cfg.opinions.sigma = CONSERVATION_SIGMA;
    cfg.sim.seed = SEED;
    cfg.sim.t_final = CONSERVATION_HORIZON;
    cfg.sim.snapshot_times.clear();
    cfg.sim.trace_every = Some(CONSERVATION_HORIZON / CONSERVATION_BATCHES as f64);
    cfg
}

fn bounds_and_conservation(runs: &BTreeMap<&str, PresetRun>) -> Outcome {
    let mut violations = Vec::new();
    let mut snapshots = 0;
    for (name, run) in runs {
        for s in &run.result.snapshots {
            snapshots += 1;
            if !s.extrema.in_domain() {
                violations.push(format!("{name} t={} {:?}", s.t(), s.extrema));
            }
        }
    }
    for v in &violations {
        println!("    out of domain: {v}");
    }

    let cfg = conservation_scenario();
    let res = match run_with_threads(&cfg, threads()) {
        Ok(r) => r,
        Err(e) => return Outcome::errored("4 conservation and bounds", e),
    };
    let m: Vec<f64> = res.trace.iter().map(|r| r.m_v_global).collect();
    let increments: Vec<f64> = m.windows(2).map(|w| w[1] - w[0]).collect();
    let k = increments.len() as f64;
    let mean = increments.iter().sum::<f64>() / k;
    let var = increments.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let drift = m[m.len() - 1] - m[0];
    let std_error = (k * var).sqrt();
    let limit = CONSERVATION_STD_ERRORS * std_error;
    let clamps = res.diagnostics.clamps();
    println!(
        "    m_v(0) {:.6} m_v(T) {:.6} drift {:.3e} limit {:.3e} batches {} clamps {}",
        m[0],
        m[m.len() - 1],
        drift,
        limit,
        increments.len(),
        clamps
    );
    let ok = violations.is_empty()
        && snapshots > 0
        && increments.len() == CONSERVATION_BATCHES
        && drift.abs() <= limit
        && clamps == 0;
    Outcome::new(
        "4 conservation and bounds",
        ok,
        format!(
            "{snapshots} snapshots in domain: {}; |drift| {:.2} std errors; clamps {clamps}",
            violations.is_empty(),
            drift.abs() / std_error
        ),
    )
}

fn test1(runs: &BTreeMap<&str, PresetRun>) -> Outcome {
    let get = |n: &str| &runs[n].result;
    let (a, b, c, d) = (get("test1_a"), get("test1_b"), get("test1_c"), get("test1_d"));
    let leaders = 0;
    let first = &a.snapshots[0].means;
    let last = &a.final_snapshot().means;
    let loses_contacts = last.m_c_by_group[leaders] < first.m_c_by_group[leaders];
    let absorbed = last.m_v_global < 0.0;
    let final_mc = |r: &RunResult| r.final_snapshot().means.m_c_global;
    let growth = final_mc(b).min(final_mc(d)) > final_mc(a).max(final_mc(c));
    let m_v_d = d.final_snapshot().means.m_v_global;
    let reaches_target = (m_v_d - 0.5).abs() < TARGET_OPINION_TOL;
    let wall: Duration = ["test1_a", "test1_b", "test1_c", "test1_d"].iter().map(|n| runs[n].wall).sum();
    let in_time = wall <= TEST1_BUDGET;
    println!(
        "    (a) leader m_c {:.2} -> {:.2}, m_v(T) {:.4}",
        first.m_c_by_group[leaders], last.m_c_by_group[leaders], last.m_v_global
    );
    println!(
        "    m_c(T): a {:.2} b {:.2} c {:.2} d {:.2}; (d) m_v(T) {:.4}",
        final_mc(a),
        final_mc(b),
        final_mc(c),
        final_mc(d),
        m_v_d
    );
    Outcome::new(
        "5 test 1",
        loses_contacts && absorbed && growth && reaches_target && in_time,
        format!(
            "(i) {} (ii) {} (iii) {}; {:.0}s (budget {}s)",
            loses_contacts && absorbed,
            growth,
            reaches_target,
            wall.as_secs_f64(),
            TEST1_BUDGET.as_secs()
        ),
    )
}

/// Centres of the local maxima of the smoothed opinion marginal.
fn opinion_modes(h: &Histograms) -> Vec<f64> {
    let smoothed = smooth(&h.v, PEAK_SMOOTHING);
    // a mode must rise above the uniform level
    let floor = 1.0 / h.spec.bins_v as f64;
    local_maxima(&smoothed, floor)
        .into_iter()
        .map(|b| {
            let (lo, hi) = h.spec.v_edges(b);
            0.5 * (lo + hi)
        })
        .collect()
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

fn has_both_poles(modes: &[f64]) -> bool {
    modes.iter().any(|&m| within(m, NEGATIVE_POLE)) && modes.iter().any(|&m| within(m, POSITIVE_POLE))
}

fn test2(runs: &BTreeMap<&str, PresetRun>) -> Outcome {
    let sym = runs["test2_b"].result.final_snapshot();
    let modes = opinion_modes(&sym.hist);
    let polarized = has_both_poles(&modes);
    let m_v_c = runs["test2_c"].result.final_snapshot().means.m_v_global;
    let followed = m_v_c > FOLLOWED_TARGET;
    println!("    (b) modes at {modes:.3?}; group m_v {:.4?}", sym.means.m_v_by_group);
    println!("    (c) m_v(T) {m_v_c:.4}");
    Outcome::new("6 test 2", polarized && followed, format!("(i) {polarized} (ii) {followed}"))
}

fn test3(runs: &BTreeMap<&str, PresetRun>) -> Outcome {
    let run = &runs["test3_c"].result;
    let modes = opinion_modes(&run.final_snapshot().hist);
    let anchored = has_both_poles(&modes);
    let v = &run.final_ensemble.v;
    let central = v.iter().filter(|&&x| within(x, CENTRE)).count() as f64 / v.len() as f64;
    println!(
        "    modes at {modes:.3?}; central mass {central:.4}; group m_v {:.4?}",
        run.final_snapshot().means.m_v_by_group
    );
    Outcome::new(
        "7 test 3",
        anchored && central > 0.0,
        format!("two anchored modes {anchored}, central mass {central:.4}"),
    )
}

fn timeseries_bytes(cfg: &ScenarioConfig, r: &RunResult) -> Vec<u8> {
    let names: Vec<String> = cfg.groups.iter().map(|g| g.name.clone()).collect();
    let mut buf = Vec::new();
    write_timeseries(&mut buf, &names, &r.trace).expect("in-memory write");
    buf
}

fn determinism(runs: &BTreeMap<&str, PresetRun>) -> Outcome {
    let name = "test1_a";
    let cfg = preset(name).expect("preset");
    let reference = &runs[name].result;
    let single = match run_with_threads(&cfg, 1) {
        Ok(r) => r,
        Err(e) => return Outcome::errored("8 determinism", e),
    };
    let many = match run_with_threads(&cfg, DETERMINISM_THREADS) {
        Ok(r) => r,
        Err(e) => return Outcome::errored("8 determinism", e),
    };
    let same_csv = timeseries_bytes(&cfg, reference) == timeseries_bytes(&cfg, &single);
    let same_final = single.final_ensemble == many.final_ensemble;
    Outcome::new(
        "8 determinism",
        same_csv && same_final,
        format!("{name}: timeseries identical {same_csv}; 1 vs {DETERMINISM_THREADS} threads identical {same_final}"),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut outcomes: Vec<bool> = Vec::new();
    let mut emit = |o: Outcome| {
        println!("{} criterion {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.criterion, o.detail);
        outcomes.push(o.pass);
    };

    emit(steady_state());
    emit(minimizers());
    emit(scaling());

    let mut runs = BTreeMap::new();
    let mut failed_runs = Vec::new();
    for &name in PRESETS.iter() {
        let cfg = preset(name).expect("preset");
        let (res, wall) = timed(|| run_with_threads(&cfg, threads()));
        match res {
            Ok(result) => {
                println!("    ran {name} in {:.1}s", wall.as_secs_f64());
                runs.insert(name, PresetRun { result, wall });
            }
            Err(e) => failed_runs.push(format!("{name}: {e}")),
        }
    }

    if failed_runs.is_empty() {
        emit(bounds_and_conservation(&runs));
        emit(test1(&runs));
        emit(test2(&runs));
        emit(test3(&runs));
        emit(determinism(&runs));
    } else {
        let why = format!("preset runs failed: {}", failed_runs.join("; "));
        for c in ["4 conservation and bounds", "5 test 1", "6 test 2", "7 test 3", "8 determinism"] {
            emit(Outcome::new(c, false, why.clone()));
        }
    }
    drop(emit);

    let failed = outcomes.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} passed, {} failed in {:.0}s",
        outcomes.len() - failed,
        failed,
        started.elapsed().as_secs_f64()
    );
    let strict = std::env::var("POPNET_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
