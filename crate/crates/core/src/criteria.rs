//! Scalar design criteria: expected power, probability of success and the
//! marginal probability to reject with its three-way decomposition.

use serde::{Deserialize, Serialize};

use crate::design::TestSetup;
use crate::error::{Error, Result};
use crate::gauss::{std_norm_pdf, TruncatedNormalPrior};
use crate::quadrature::Integrator;
use crate::scalar::Scalar;

/// Components of `PoS'(n)`: rejection with `Θ ≤ θ0` (type I), with
/// `θ0 < Θ < mcid` (irrelevant effect) and with `Θ ≥ mcid` (= `PoS(n)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosDecomposition<T> {
    pub type1: T,
    pub irrelevant: T,
    pub relevant: T,
}

impl<T: Scalar> PosDecomposition<T> {
    pub fn total(&self) -> T {
        self.type1 + self.irrelevant + self.relevant
    }
}

/// `∫_a^b weight(θ) law.pdf(θ) dθ` with the interval clipped to where the
/// density is representable and split at the prior mode and the steepest
/// point of the power curve.
fn integrate_over<T: Scalar, W: Fn(T) -> T>(
    setup: &TestSetup<T>,
    law: &TruncatedNormalPrior<T>,
    n: T,
    a: T,
    b: T,
    weight: W,
) -> T {
    let (s_lo, s_hi) = law.effective_support();
    let a = a.max(s_lo);
    let b = b.min(s_hi);
    if !(b > a) {
        return T::zero();
    }
    let half_power = setup.theta0() + setup.sigma() * setup.critical_value() / n.sqrt();
    let breaks = [law.mu(), half_power];
    Integrator::default()
        .integrate(|t| weight(t) * law.pdf(t), a, b, &breaks)
        .value
}

pub(crate) fn pos_at<T: Scalar>(setup: &TestSetup<T>, prior: &TruncatedNormalPrior<T>, n: T) -> T {
    let a = setup.mcid().max(prior.lo());
    integrate_over(setup, prior, n, a, prior.hi(), |t| {
        setup.prob_reject_at(n, t)
    })
    .max(T::zero())
    .min(T::one())
}

pub(crate) fn expected_power_at<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    n: T,
) -> Result<T> {
    let cond = prior.condition_on(setup.mcid())?;
    let law = cond.as_truncated();
    let ep = integrate_over(setup, law, n, law.lo(), law.hi(), |t| {
        setup.prob_reject_at(n, t)
    });
    Ok(ep.max(T::zero()).min(T::one()))
}

/// Derivative of `PoS` with respect to a real-valued `n`.
pub(crate) fn pos_derivative_at<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    n: T,
) -> T {
    let a = setup.mcid().max(prior.lo());
    let scale = T::lit(2.0) * setup.sigma() * n.sqrt();
    let z = setup.critical_value();
    integrate_over(setup, prior, n, a, prior.hi(), |t| {
        std_norm_pdf(setup.drift(n, t) - z) * (t - setup.theta0()) / scale
    })
}

/// `EP(n)`: the probability to reject averaged under the prior conditional
/// on a relevant effect.
pub fn expected_power<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    n: u64,
) -> Result<T> {
    expected_power_at(setup, prior, T::from_count(n))
}

/// `PoS(n) = Pr[reject, Θ ≥ mcid]`.
pub fn pos<T: Scalar>(setup: &TestSetup<T>, prior: &TruncatedNormalPrior<T>, n: u64) -> T {
    pos_at(setup, prior, T::from_count(n))
}

/// `PoS'(n)` split into its type I, irrelevant and relevant parts.
pub fn pos_prime<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    n: u64,
) -> PosDecomposition<T> {
    let nf = T::from_count(n);
    let power = |t| setup.prob_reject_at(nf, t);
    let (lo, hi) = (prior.lo(), prior.hi());
    let theta0 = setup.theta0().max(lo).min(hi);
    PosDecomposition {
        type1: integrate_over(setup, prior, nf, lo, theta0, power),
        irrelevant: integrate_over(
            setup,
            prior,
            nf,
            theta0,
            setup.mcid().max(lo).min(hi),
            power,
        ),
        relevant: pos_at(setup, prior, nf),
    }
}

/// Analytic `dPoS/dn` at integer `n`.
pub fn pos_derivative<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    n: u64,
) -> T {
    pos_derivative_at(setup, prior, T::from_count(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdDirection {
    /// Expected power threshold to probability of success threshold.
    EpToPos,
    /// Probability of success threshold to expected power threshold.
    PosToEp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConversion<T> {
    pub value: T,
    /// False when the converted EP threshold is not below one.
    pub feasible: bool,
}

/// Converts between `EP(n) ≥ t` and `PoS(n) ≥ t · Pr[Θ ≥ mcid]`.
pub fn ep_pos_threshold<T: Scalar>(
    threshold: T,
    mass_relevant: T,
    direction: ThresholdDirection,
) -> Result<ThresholdConversion<T>> {
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(Error::invalid(
            "threshold",
            format!("need 0 < threshold < 1, got {threshold}"),
        ));
    }
    if !(mass_relevant > T::zero() && mass_relevant <= T::one()) {
        return Err(Error::invalid(
            "mass_relevant",
            format!("need 0 < mass <= 1, got {mass_relevant}"),
        ));
    }
    Ok(match direction {
        ThresholdDirection::EpToPos => ThresholdConversion {
            value: threshold * mass_relevant,
            feasible: true,
        },
        ThresholdDirection::PosToEp => {
            let value = threshold / mass_relevant;
            ThresholdConversion {
                value,
                feasible: value < T::one(),
            }
        }
    })
}

/// Percentage points of power at `theta_a` that compensate a one point loss
/// at `theta_b` with expected power held fixed: `φ(θ_a) / φ(θ_b)`.
pub fn ep_tradeoff_ratio<T: Scalar>(
    prior: &TruncatedNormalPrior<T>,
    mcid: T,
    theta_a: T,
    theta_b: T,
) -> Result<T> {
    for (name, theta) in [("theta_a", theta_a), ("theta_b", theta_b)] {
        if !(theta >= mcid) {
            return Err(Error::invalid(
                name,
                format!("{theta} lies outside the relevance region theta >= {mcid}"),
            ));
        }
    }
    if !(theta_a >= prior.lo() && theta_a <= prior.hi()) {
        return Err(Error::invalid("theta_a", "outside the prior support"));
    }
    if !(theta_b >= prior.lo() && theta_b <= prior.hi()) {
        return Err(Error::invalid("theta_b", "prior density is zero there"));
    }
    // truncation constants cancel; stay in log space so narrow priors do not underflow
    let two_var = T::lit(2.0) * prior.tau() * prior.tau();
    let da = theta_a - prior.mu();
    let db = theta_b - prior.mu();
    Ok(((db * db - da * da) / two_var).exp())
}
