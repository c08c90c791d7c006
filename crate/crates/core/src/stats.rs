//! Ensemble state and the observables computed from it.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty ensemble")]
    Empty,
    #[error("group {0} has no agents")]
    EmptyGroup(usize),
    #[error("group index {index} out of range for {n_groups} groups")]
    GroupOutOfRange { index: usize, n_groups: usize },
}

/// Particle population in structure-of-arrays layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    /// Opinions, each in `[-1, 1]`.
    pub v: Vec<f64>,
    /// Contacts, each `> 0`.
    pub c: Vec<f64>,
    /// Group index of each agent.
    pub group: Vec<u16>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Check the array lengths and the state bounds.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.v.len();
        if self.c.len() != n || self.group.len() != n {
            return Err("array lengths differ".into());
        }
        if let Some(i) = self.v.iter().position(|v| !(-1.0..=1.0).contains(v)) {
            return Err(format!("opinion of agent {i} is {} (outside [-1, 1])", self.v[i]));
        }
        if let Some(i) = self.c.iter().position(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(format!("contacts of agent {i} are {} (not > 0)", self.c[i]));
        }
        Ok(())
    }
}

/// Pairwise (cascade) summation; the result does not depend on how callers
/// split work across threads.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if xs.len() <= BLOCK {
        let mut acc = [0.0f64; 4];
        let chunks = xs.chunks_exact(4);
        let rest = chunks.remainder();
        for ch in chunks {
            acc[0] += ch[0];
            acc[1] += ch[1];
            acc[2] += ch[2];
            acc[3] += ch[3];
        }
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for x in rest {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn mean(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(pairwise_sum(xs) / xs.len() as f64)
}

/// Mean opinion over all agents of all groups.
pub fn mean_opinion(e: &Ensemble) -> Result<f64, StatsError> {
    mean(&e.v)
}

/// Local opinion mass of every agent: the fraction of agents `j` (the agent
/// itself included) with `|v_j - v_i| <= r`.
///
/// Sorts a copy of the opinions once and finds both ends of each window by
/// binary search. The predicates are monotone in the sorted value, so the
/// counts match a direct double loop exactly.
pub fn local_opinion_mass_all(v: &[f64], r: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    local_opinion_mass_sorted(v, &sorted, r)
}

/// As [`local_opinion_mass_all`], reusing an already sorted copy of `v`.
pub fn local_opinion_mass_sorted(v: &[f64], sorted: &[f64], r: f64) -> Vec<f64> {
    let n = v.len() as f64;
    v.iter()
        .map(|&vi| {
            let lo = sorted.partition_point(|&w| w - vi < -r);
            let hi = sorted.partition_point(|&w| w - vi <= r);
            (hi - lo) as f64 / n
        })
        .collect()
}

/// Per-group means of opinions and contacts.
pub fn group_means(e: &Ensemble, n_groups: usize) -> Result<(Vec<f64>, Vec<f64>), StatsError> {
    let mut v_by: Vec<Vec<f64>> = vec![Vec::new(); n_groups];
    let mut c_by: Vec<Vec<f64>> = vec![Vec::new(); n_groups];
    for i in 0..e.len() {
        let g = e.group[i] as usize;
        if g >= n_groups {
            return Err(StatsError::GroupOutOfRange { index: g, n_groups });
        }
        v_by[g].push(e.v[i]);
        c_by[g].push(e.c[i]);
    }
    let mut mv = Vec::with_capacity(n_groups);
    let mut mc = Vec::with_capacity(n_groups);
    for g in 0..n_groups {
        if v_by[g].is_empty() {
            return Err(StatsError::EmptyGroup(g));
        }
        mv.push(mean(&v_by[g])?);
        mc.push(mean(&c_by[g])?);
    }
    Ok((mv, mc))
}

/// Binning used for snapshot histograms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramSpec {
    pub bins_v: usize,
    /// Number of log-spaced bins inside `[c_lo, c_hi]`. The contact
    /// histogram has `bins_c + 2` entries: underflow first, overflow last.
    pub bins_c: usize,
    pub c_lo: f64,
    pub c_hi: f64,
}

impl HistogramSpec {
    pub fn v_bin(&self, v: f64) -> usize {
        let x = ((v + 1.0) / 2.0 * self.bins_v as f64).floor();
        (x.max(0.0) as usize).min(self.bins_v - 1)
    }

    /// Index into the contact histogram (0 = underflow, `bins_c + 1` = overflow).
    pub fn c_bin(&self, c: f64) -> usize {
        if c < self.c_lo {
            return 0;
        }
        if c >= self.c_hi {
            return self.bins_c + 1;
        }
        let x = ((c / self.c_lo).ln() / (self.c_hi / self.c_lo).ln() * self.bins_c as f64).floor();
        1 + (x.max(0.0) as usize).min(self.bins_c - 1)
    }

    /// `[lo, hi)` of an opinion bin.
    pub fn v_edges(&self, bin: usize) -> (f64, f64) {
        let w = 2.0 / self.bins_v as f64;
        (-1.0 + bin as f64 * w, -1.0 + (bin + 1) as f64 * w)
    }

    /// `[lo, hi)` of a contact-histogram entry; the outer entries are
    /// `[0, c_lo)` and `[c_hi, inf)`.
    pub fn c_edges(&self, bin: usize) -> (f64, f64) {
        if bin == 0 {
            return (0.0, self.c_lo);
        }
        if bin == self.bins_c + 1 {
            return (self.c_hi, f64::INFINITY);
        }
        let ratio = self.c_hi / self.c_lo;
        let f = |k: usize| {
            if k == self.bins_c {
                self.c_hi
            } else {
                self.c_lo * ratio.powf(k as f64 / self.bins_c as f64)
            }
        };
        (f(bin - 1), f(bin))
    }

    pub fn c_entries(&self) -> usize {
        self.bins_c + 2
    }
}

/// Normalized histograms of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histograms {
    pub spec: HistogramSpec,
    pub v: Vec<f64>,
    pub c: Vec<f64>,
    /// Row-major, `bins_v` rows by `bins_c + 2` columns.
    pub joint: Vec<f64>,
}

impl Histograms {
    pub fn joint_at(&self, iv: usize, ic: usize) -> f64 {
        self.joint[iv * self.spec.c_entries() + ic]
    }

    /// Mass of opinion bins whose centres fall inside `[lo, hi]`.
    pub fn v_mass_between(&self, lo: f64, hi: f64) -> f64 {
        (0..self.spec.bins_v)
            .filter(|&b| {
                let (a, z) = self.spec.v_edges(b);
                let mid = 0.5 * (a + z);
                mid >= lo && mid <= hi
            })
            .map(|b| self.v[b])
            .sum()
    }
}

/// Frequency histograms of opinions, contacts and the joint distribution.
pub fn build_histograms(e: &Ensemble, spec: HistogramSpec) -> Histograms {
    let cn = spec.c_entries();
    let mut hv = vec![0u64; spec.bins_v];
    let mut hc = vec![0u64; cn];
    let mut hj = vec![0u64; spec.bins_v * cn];
    for (&v, &c) in e.v.iter().zip(&e.c) {
        let iv = spec.v_bin(v);
        let ic = spec.c_bin(c);
        hv[iv] += 1;
        hc[ic] += 1;
        hj[iv * cn + ic] += 1;
    }
    let n = e.len().max(1) as f64;
    let norm = |h: Vec<u64>| h.into_iter().map(|k| k as f64 / n).collect::<Vec<_>>();
    Histograms {
        spec,
        v: norm(hv),
        c: norm(hc),
        joint: norm(hj),
    }
}

/// Population and per-group means at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Means {
    pub t: f64,
    pub m_v_global: f64,
    pub m_c_global: f64,
    pub m_v_by_group: Vec<f64>,
    pub m_c_by_group: Vec<f64>,
}

pub fn means(e: &Ensemble, n_groups: usize, t: f64) -> Result<Means, StatsError> {
    let (m_v_by_group, m_c_by_group) = group_means(e, n_groups)?;
    Ok(Means {
        t,
        m_v_global: mean(&e.v)?,
        m_c_global: mean(&e.c)?,
        m_v_by_group,
        m_c_by_group,
    })
}

/// Full snapshot record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observables {
    pub means: Means,
    pub hist: Histograms,
    pub extrema: Extrema,
}

/// Range of the particle states at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrema {
    pub v_min: f64,
    pub v_max: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl Extrema {
    pub fn of(e: &Ensemble) -> Self {
        let fold = |xs: &[f64]| {
            xs.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
        };
        let (v_min, v_max) = fold(&e.v);
        let (c_min, c_max) = fold(&e.c);
        Self { v_min, v_max, c_min, c_max }
    }

    /// `v` in `[-1, 1]` and `c > 0` for every agent.
    pub fn in_domain(&self) -> bool {
        self.v_min >= -1.0 && self.v_max <= 1.0 && self.c_min > 0.0 && self.c_max.is_finite()
    }
}

impl Observables {
    pub fn t(&self) -> f64 {
        self.means.t
    }
}

pub fn observe(e: &Ensemble, n_groups: usize, t: f64, spec: HistogramSpec) -> Result<Observables, StatsError> {
    Ok(Observables {
        means: means(e, n_groups, t)?,
        hist: build_histograms(e, spec),
        extrema: Extrema::of(e),
    })
}

/// Centred moving average with a window of `2 * half + 1` bins, shrinking
/// at the edges.
pub fn smooth(h: &[f64], half: usize) -> Vec<f64> {
    (0..h.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(h.len());
            h[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Positions of strict local maxima of a histogram, as bin indices. Plateaus
/// count once, at their first bin. Entries below `min_height` are ignored.
pub fn local_maxima(h: &[f64], min_height: f64) -> Vec<usize> {
    let mut peaks = Vec::new();
    let n = h.len();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && h[j + 1] == h[i] {
            j += 1;
        }
        let left_lower = i == 0 || h[i - 1] < h[i];
        let right_lower = j + 1 == n || h[j + 1] < h[i];
        if left_lower && right_lower && h[i] >= min_height && h[i] > 0.0 {
            peaks.push(i);
        }
        i = j + 1;
    }
    peaks
}
