//! Elementary functions of the contact and opinion dynamics.
//!
//! Everything here is pure. The engine calls these in its inner loop, so the
//! infallible ones return plain `f64`; the few with a restricted domain return
//! [`ModelError`].

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::config::{ContactControlParams, ContactParams, NoiseFamily, OpinionParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{function}: argument {value} outside its domain ({domain})")]
    Domain {
        function: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("connectivity weight undefined for c = c_star = 0 with p > 0")]
    UndefinedWeight,
}

/// Value function of the contact ratio `s = c / c_bar`.
///
/// Increasing, zero at `s = 1`, bounded by `-(mu/(1-mu))/beta` and
/// `(mu/(1+mu))/beta`.
pub fn value_function(s: f64, params: &ContactParams) -> f64 {
    let ContactParams { beta, mu, .. } = *params;
    let ratio = (1.0 + mu) / (1.0 - mu);
    (mu / (1.0 - mu)) * (s - 1.0) / (ratio * s + 1.0) / beta
}

#[inline]
pub(crate) fn scaled_value_function_unchecked(s: f64, epsilon: f64, params: &ContactParams) -> f64 {
    let ContactParams { beta, mu, .. } = *params;
    if mu == 0.0 {
        return 0.0;
    }
    // s^eps - 1 without cancellation
    let em1 = (epsilon * s.ln()).exp_m1();
    let ratio = (1.0 + mu) / (1.0 - mu);
    (mu / (1.0 - mu)) * em1 / (ratio * (em1 + 1.0) + 1.0) / (beta * epsilon)
}

/// `exp(x) - 1`. Small arguments, the common case under the small-increment
/// scaling, use the Taylor series through `x^9`, whose remainder is below
/// `1e-18` relative for `|x| < 1/32`.
#[inline]
pub(crate) fn exp_m1_fast(x: f64) -> f64 {
    if x.abs() < 0.031_25 {
        let tail = 1.0 / 40_320.0 + x / 362_880.0;
        let tail = 1.0 / 5_040.0 + x * tail;
        let tail = 1.0 / 720.0 + x * tail;
        let tail = 1.0 / 120.0 + x * tail;
        let tail = 1.0 / 24.0 + x * tail;
        let tail = 1.0 / 6.0 + x * tail;
        let tail = 0.5 + x * tail;
        x * (1.0 + x * tail)
    } else {
        x.exp_m1()
    }
}

/// Value function under the small-increment scaling, `s^eps` in place of `s`
/// and an overall `1/eps`. Defined at `s = 0` by continuity of `s^eps`.
pub fn scaled_value_function(s: f64, epsilon: f64, params: &ContactParams) -> Result<f64, ModelError> {
    if !(s >= 0.0) {
        return Err(ModelError::Domain {
            function: "scaled_value_function",
            value: s,
            domain: "s >= 0",
        });
    }
    if !(epsilon > 0.0) {
        return Err(ModelError::Domain {
            function: "scaled_value_function",
            value: epsilon,
            domain: "epsilon > 0",
        });
    }
    Ok(scaled_value_function_unchecked(s, epsilon, params))
}

/// Pointwise limit of [`scaled_value_function`] as `eps -> 0`:
/// `mu / (2 beta) * ln s`.
pub fn limit_value_function(s: f64, params: &ContactParams) -> Result<f64, ModelError> {
    if !(s > 0.0) {
        return Err(ModelError::Domain {
            function: "limit_value_function",
            value: s,
            domain: "s > 0",
        });
    }
    if params.mu == 0.0 {
        return Ok(0.0);
    }
    Ok(params.mu / (2.0 * params.beta) * s.ln())
}

/// Penalty for holding an opinion away from the population mean:
/// `theta ((v - m_v)^2 - delta_phi^2)`.
#[inline]
pub fn opinion_penalty(v: f64, m_v: f64, params: &ContactParams) -> f64 {
    let d = v - m_v;
    params.theta * (d * d - params.delta_phi * params.delta_phi)
}

/// `1 - v^2`, vanishing at the ends of the opinion interval.
#[inline]
pub fn diffusion_weight(v: f64) -> f64 {
    1.0 - v * v
}

/// Bounded-confidence gate, strict: `1` iff `|v - v_star| < delta`.
#[inline]
pub fn bounded_confidence(v: f64, v_star: f64, delta: f64) -> f64 {
    if (v - v_star).abs() < delta {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn connectivity_weight_unchecked(c: f64, c_star: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 0.5;
    }
    let x = c / c_star;
    let xp = if p == 3.0 {
        x * x * x
    } else if p.fract() == 0.0 && p <= 32.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    };
    1.0 / (1.0 + xp)
}

/// Relative influence of the partner's connectivity, `c_star^p / (c^p + c_star^p)`.
///
/// Evaluated as `1 / (1 + (c/c_star)^p)` so that very small or very large
/// contact counts do not underflow into `0/0`.
pub fn connectivity_weight(c: f64, c_star: f64, p: f64) -> Result<f64, ModelError> {
    if p == 0.0 {
        return Ok(0.5);
    }
    if c == 0.0 && c_star == 0.0 {
        return Err(ModelError::UndefinedWeight);
    }
    if !(c >= 0.0 && c_star >= 0.0) {
        return Err(ModelError::Domain {
            function: "connectivity_weight",
            value: c.min(c_star),
            domain: "contacts >= 0",
        });
    }
    Ok(connectivity_weight_unchecked(c, c_star, p))
}

#[inline]
pub(crate) fn compromise_unchecked(v: f64, v_star: f64, c: f64, c_star: f64, params: &OpinionParams) -> f64 {
    let h = bounded_confidence(v, v_star, params.delta);
    if h == 0.0 {
        0.0
    } else {
        connectivity_weight_unchecked(c, c_star, params.p)
    }
}

/// Compromise function `H(v, v_star) K(c, c_star)`.
pub fn compromise(v: f64, v_star: f64, c: f64, c_star: f64, params: &OpinionParams) -> Result<f64, ModelError> {
    let k = connectivity_weight(c, c_star, params.p)?;
    Ok(bounded_confidence(v, v_star, params.delta) * k)
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Contact activation, close to 1 below `c_min` and decaying above it.
#[inline]
pub fn sigmoid_rc(c: f64, params: &ContactControlParams) -> f64 {
    logistic(params.alpha_r * (params.c_min - c))
}

/// Social-reinforcement activation in the local opinion mass.
#[inline]
pub fn sigmoid_hc(rho: f64, params: &ContactControlParams) -> f64 {
    logistic(params.alpha_h * (rho - params.rho_star))
}

/// Lower bound on the unscaled contact noise that keeps `c' > 0` for every
/// admissible state: `(beta theta (4 - delta_phi^2)(1 + mu) - 1) / (1 + mu)`.
pub fn eta_lower_bound(params: &ContactParams) -> f64 {
    let ContactParams {
        beta,
        mu,
        theta,
        delta_phi,
        ..
    } = *params;
    (beta * theta * (4.0 - delta_phi * delta_phi) * (1.0 + mu) - 1.0) / (1.0 + mu)
}

/// The same bound for the scaled contact rule, where the drift carries a
/// factor `eps`. Equals [`eta_lower_bound`] at `eps = 1`.
pub fn scaled_eta_lower_bound(params: &ContactParams, epsilon: f64) -> f64 {
    let ContactParams {
        beta,
        mu,
        theta,
        delta_phi,
        ..
    } = *params;
    (epsilon * beta * theta * (4.0 - delta_phi * delta_phi) * (1.0 + mu) - 1.0) / (1.0 + mu)
}

/// Zero-mean noise with a given standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub std: f64,
    /// Draws below this value are rejected.
    pub lower_bound: f64,
    /// Gaussian draws beyond `truncation * std` are rejected.
    pub truncation: f64,
}

const MAX_REJECTIONS: u32 = 10_000;

impl NoiseSpec {
    pub fn new(family: NoiseFamily, std: f64, truncation: f64) -> Self {
        Self {
            family,
            std,
            lower_bound: f64::NEG_INFINITY,
            truncation,
        }
    }

    pub fn with_lower_bound(mut self, lower_bound: f64) -> Self {
        self.lower_bound = lower_bound;
        self
    }

    /// Whether the floor leaves a usable part of the support. With the
    /// default noise the floor sits far below the truncation point.
    pub fn is_admissible(&self) -> bool {
        if self.std == 0.0 {
            return self.lower_bound <= 0.0;
        }
        match self.family {
            NoiseFamily::TruncatedGaussian => self.lower_bound <= -self.truncation * self.std,
            NoiseFamily::SymmetricTwoPoint => self.lower_bound <= -self.std,
        }
    }

    /// Whether any part of the support lies at or above the lower bound.
    pub fn has_support(&self) -> bool {
        match self.family {
            _ if self.std == 0.0 => self.lower_bound <= 0.0,
            NoiseFamily::TruncatedGaussian => self.lower_bound <= self.truncation * self.std,
            NoiseFamily::SymmetricTwoPoint => self.lower_bound <= self.std,
        }
    }

    /// Draw one value. Returns the sample and the number of rejected draws.
    #[inline(always)]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u32) {
        if self.std == 0.0 {
            return (0.0, 0);
        }
        let mut rejected = 0;
        loop {
            let x = match self.family {
                NoiseFamily::TruncatedGaussian => {
                    let z: f64 = rng.sample(StandardNormal);
                    if z.abs() > self.truncation {
                        rejected += 1;
                        if rejected >= MAX_REJECTIONS {
                            return (0.0, rejected);
                        }
                        continue;
                    }
                    self.std * z
                }
                NoiseFamily::SymmetricTwoPoint => {
                    if rng.random::<bool>() {
                        self.std
                    } else {
                        -self.std
                    }
                }
            };
            if x >= self.lower_bound {
                return (x, rejected);
            }
            rejected += 1;
            if rejected >= MAX_REJECTIONS {
                return (self.lower_bound.max(0.0), rejected);
            }
        }
    }
}
