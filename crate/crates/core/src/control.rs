//! Instantaneous feedback controls on contacts and opinions.
//!
//! Both laws minimize a one-step expected cost in closed form; disabled
//! controls evaluate to exactly zero.

use crate::config::{
    Activation, ActivationArgument, ContactControlParams, ContactParams, OpinionControlParams, OpinionParams,
};
use crate::model::{compromise_unchecked, logistic, sigmoid_hc, sigmoid_rc};

/// State of one agent as seen by the control laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub v: f64,
    pub c: f64,
    /// Local opinion mass, frozen at the start of the step.
    pub rho: f64,
}

/// Contact control `lambda (beta / gamma_c) R_c(c) H_c(rho)`.
#[inline]
pub fn contact_control(
    c: f64,
    rho: f64,
    params: &ContactControlParams,
    contact_params: &ContactParams,
    enabled: bool,
) -> f64 {
    if !enabled {
        return 0.0;
    }
    params.lambda * (contact_params.beta / params.gamma_c) * sigmoid_rc(c, params) * sigmoid_hc(rho, params)
}

#[inline]
fn activation_value(a: &Activation, x: f64) -> f64 {
    match *a {
        Activation::One => 1.0,
        Activation::Sigmoid { threshold, steepness } => logistic(steepness * (x - threshold)),
    }
}

/// Product `R_v(c) H_v(.)` weighting the opinion control.
#[inline]
pub fn opinion_activation(params: &OpinionControlParams, agent: &AgentState) -> f64 {
    let h_arg = match params.hv_argument {
        ActivationArgument::Rho => agent.rho,
        ActivationArgument::Opinion => agent.v,
    };
    activation_value(&params.rv, agent.c) * activation_value(&params.hv, h_arg)
}

/// Opinion control for `agent` interacting with `partner` under the scaled
/// binary rule (interaction strength `eps * alpha`):
///
/// `u = -A [v + eps alpha P (v_star - v) - v_target] / (gamma_v + eps alpha A)`
///
/// where `A = R_v H_v`.
#[inline]
pub fn opinion_control_full(
    agent: &AgentState,
    partner: &AgentState,
    epsilon: f64,
    params: &OpinionControlParams,
    op: &OpinionParams,
    enabled: bool,
) -> f64 {
    if !enabled {
        return 0.0;
    }
    let p = compromise_unchecked(agent.v, partner.v, agent.c, partner.c, op);
    opinion_control_given_weight(agent, partner.v, p, epsilon * op.alpha, params)
}

/// [`opinion_control_full`] with the compromise weight `p` and the
/// interaction strength `ea = eps * alpha` already evaluated.
#[inline]
pub(crate) fn opinion_control_given_weight(
    agent: &AgentState,
    partner_v: f64,
    p: f64,
    ea: f64,
    params: &OpinionControlParams,
) -> f64 {
    let a = opinion_activation(params, agent);
    if a == 0.0 {
        return 0.0;
    }
    -a * (agent.v + ea * p * (partner_v - agent.v) - params.v_target) / (params.gamma_v + ea * a)
}

/// Small-increment limit of [`opinion_control_full`]: `-A (v - v_target) / gamma_v`.
pub fn opinion_control_limit(agent: &AgentState, params: &OpinionControlParams, enabled: bool) -> f64 {
    if !enabled {
        return 0.0;
    }
    let a = opinion_activation(params, agent);
    -a * (agent.v - params.v_target) / params.gamma_v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn agent(v: f64, c: f64) -> AgentState {
        AgentState { v, c, rho: 0.5 }
    }

    #[test]
    fn contact_control_examples() {
        let cp = ContactParams::default();
        let k = ContactControlParams::default();
        // saturated activations
        let sat = ContactControlParams {
            alpha_r: 50.0,
            alpha_h: 200.0,
            rho_star: 0.0,
            ..k.clone()
        };
        assert!((contact_control(1.0, 1.0, &sat, &cp, true) - 1.0).abs() < 1e-12);
        assert_eq!(contact_control(k.c_min, k.rho_star, &k, &cp, true), 0.25);
        assert_eq!(contact_control(10.0, 0.9, &k, &cp, false), 0.0);
    }

    #[test]
    fn opinion_control_examples() {
        let params = OpinionControlParams::default();
        let op = OpinionParams::default();
        // at the target with no interaction pull
        let at_target = agent(0.5, 100.0);
        let far = agent(-0.9, 100.0);
        assert_eq!(opinion_control_full(&at_target, &far, 1e-3, &params, &op, true), 0.0);

        // v = 0, target 0.5, no interaction (partner outside the confidence radius)
        let zero = agent(0.0, 100.0);
        let u = opinion_control_full(&zero, &agent(0.95, 100.0), 1e-3, &params, &op, true);
        assert!((u - 0.05 / (1.0 + 1e-3 / 10.0)).abs() < 1e-15);
        assert!((u - 0.04999).abs() < 1e-5);
        assert_eq!(opinion_control_full(&zero, &far, 1e-3, &params, &op, false), 0.0);
    }

    #[test]
    fn limit_control_examples() {
        let params = OpinionControlParams::default();
        assert_eq!(opinion_control_limit(&agent(0.5, 10.0), &params, true), 0.0);
        assert!((opinion_control_limit(&agent(0.0, 10.0), &params, true) - 0.05).abs() < 1e-15);
        let gated = OpinionControlParams {
            rv: Activation::Sigmoid {
                threshold: 1e6,
                steepness: 1.0,
            },
            ..params
        };
        assert_eq!(opinion_control_limit(&agent(0.0, 10.0), &gated, true), 0.0);
    }

    #[test]
    fn full_control_approaches_limit_linearly() {
        let params = OpinionControlParams::default();
        let op = OpinionParams::default();
        let a = agent(-0.2, 80.0);
        let b = agent(0.3, 150.0);
        let lim = opinion_control_limit(&a, &params, true);
        let gap = |eps: f64| (opinion_control_full(&a, &b, eps, &params, &op, true) - lim).abs();
        let ratio = gap(0.02) / gap(0.01);
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn control_points_toward_target(v in -1.0f64..1.0, target in -1.0f64..1.0, gamma in 0.1f64..100.0) {
            let params = OpinionControlParams { gamma_v: gamma, v_target: target, ..OpinionControlParams::default() };
            let op = OpinionParams::default();
            let me = agent(v, 50.0);
            // partner at the same opinion: P-term vanishes
            let u = opinion_control_full(&me, &me, 1e-3, &params, &op, true);
            prop_assert_eq!(u.signum() * (target - v).signum() >= 0.0, true);
            if (target - v).abs() > 1e-12 {
                prop_assert!(u.signum() == (target - v).signum());
            }
        }

        #[test]
        fn contact_control_bounded(c in 0.0f64..1e4, rho in 0.0f64..=1.0) {
            let cp = ContactParams::default();
            let k = ContactControlParams::default();
            let kappa = contact_control(c, rho, &k, &cp, true);
            prop_assert!(kappa >= 0.0 && kappa <= k.lambda * cp.beta / k.gamma_c);
        }
    }
}
