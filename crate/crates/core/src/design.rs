//! One-arm Z-test frame and the a priori distribution of the rejection
//! probability.
//!
//! All distribution functions are closed form: the probability to reject is
//! strictly increasing in the effect, so events about `RPR(n)` or `RPow(n)`
//! translate into events about `Θ` directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{std_norm_cdf, std_norm_quantile, ConditionalPrior, TruncatedNormalPrior};
use crate::scalar::Scalar;

/// Null boundary `theta0`, known `sigma`, one-sided level `alpha` and the
/// minimal clinically important difference `mcid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSetup<T> {
    theta0: T,
    sigma: T,
    alpha: T,
    mcid: T,
    z_crit: T,
}

impl<T: Scalar> TestSetup<T> {
    pub fn new(theta0: T, sigma: T, alpha: T, mcid: T) -> Result<Self> {
        if !theta0.is_finite() {
            return Err(Error::invalid("theta0", "must be finite"));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::invalid(
                "sigma",
                format!("must be positive, got {sigma}"),
            ));
        }
        if !(alpha > T::zero() && alpha < T::lit(0.5)) {
            return Err(Error::invalid(
                "alpha",
                format!("need 0 < alpha < 0.5, got {alpha}"),
            ));
        }
        if !mcid.is_finite() || mcid < theta0 {
            return Err(Error::invalid(
                "mcid",
                format!("need theta0 <= mcid, got mcid = {mcid} < {theta0}"),
            ));
        }
        let z_crit = -std_norm_quantile(alpha)?;
        Ok(Self {
            theta0,
            sigma,
            alpha,
            mcid,
            z_crit,
        })
    }

    /// Standardised effects: `theta0 = 0`, `sigma = 1`.
    pub fn standardized(alpha: T, mcid: T) -> Result<Self> {
        Self::new(T::zero(), T::one(), alpha, mcid)
    }

    pub fn theta0(&self) -> T {
        self.theta0
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn mcid(&self) -> T {
        self.mcid
    }

    /// The critical value `z_{1-alpha}`.
    pub fn critical_value(&self) -> T {
        self.z_crit
    }

    /// Drift of the test statistic, `sqrt(n) (theta - theta0) / sigma`.
    #[inline]
    pub(crate) fn drift(&self, n: T, theta: T) -> T {
        n.sqrt() * (theta - self.theta0) / self.sigma
    }

    /// Probability to reject at a real-valued sample size.
    #[inline]
    pub(crate) fn prob_reject_at(&self, n: T, theta: T) -> T {
        std_norm_cdf(self.drift(n, theta) - self.z_crit)
    }

    /// `Pr_theta[Z_n > z_{1-alpha}] = Φ(sqrt(n)(theta - theta0)/sigma - z_{1-alpha})`.
    pub fn prob_reject(&self, n: u64, theta: T) -> T {
        self.prob_reject_at(T::from_count(n), theta)
    }

    pub(crate) fn threshold_theta_at(&self, n: T, x: T) -> Result<T> {
        let zx = std_norm_quantile(x)?;
        Ok(self.theta0 + self.sigma * (self.z_crit + zx) / n.sqrt())
    }

    /// Smallest effect at which the probability to reject reaches `x`.
    pub fn threshold_theta(&self, n: u64, x: T) -> Result<T> {
        self.threshold_theta_at(T::from_count(n), x)
    }
}

/// Probability to reject for sample size `n` at effect `theta`.
pub fn prob_reject<T: Scalar>(setup: &TestSetup<T>, n: u64, theta: T) -> T {
    setup.prob_reject(n, theta)
}

/// `theta_x` with `prob_reject(setup, n, theta_x) = x`.
pub fn power_exceed_threshold_theta<T: Scalar>(setup: &TestSetup<T>, n: u64, x: T) -> Result<T> {
    setup.threshold_theta(n, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin<T> {
    pub lo: T,
    pub hi: T,
    pub mass: T,
}

/// A priori law of the rejection probability at a fixed `n`: random power
/// (`conditional`, given `Θ ≥ mcid`) or the unconditional random
/// probability to reject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDistribution<T> {
    setup: TestSetup<T>,
    prior: TruncatedNormalPrior<T>,
    n: u64,
    conditional: Option<ConditionalPrior<T>>,
}

impl<T: Scalar> PowerDistribution<T> {
    pub fn new(
        setup: TestSetup<T>,
        prior: TruncatedNormalPrior<T>,
        n: u64,
        conditional: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "sample size must be at least 1"));
        }
        let conditional = if conditional {
            Some(prior.condition_on(setup.mcid())?)
        } else {
            None
        };
        Ok(Self {
            setup,
            prior,
            n,
            conditional,
        })
    }

    /// Random power `RPow(n)`.
    pub fn random_power(
        setup: TestSetup<T>,
        prior: TruncatedNormalPrior<T>,
        n: u64,
    ) -> Result<Self> {
        Self::new(setup, prior, n, true)
    }

    /// Random probability to reject `RPR(n)`.
    pub fn random_prob_reject(
        setup: TestSetup<T>,
        prior: TruncatedNormalPrior<T>,
        n: u64,
    ) -> Result<Self> {
        Self::new(setup, prior, n, false)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_conditional(&self) -> bool {
        self.conditional.is_some()
    }

    pub fn setup(&self) -> &TestSetup<T> {
        &self.setup
    }

    /// Law of `Θ` that drives this distribution.
    pub fn effect_law(&self) -> &TruncatedNormalPrior<T> {
        match &self.conditional {
            Some(c) => c.as_truncated(),
            None => &self.prior,
        }
    }

    /// `Pr[X ≥ x]` where `X` is the random rejection probability.
    pub fn survival(&self, x: T) -> T {
        if x <= T::zero() {
            return T::one();
        }
        if x >= T::one() {
            return T::zero();
        }
        let theta_x = self
            .setup
            .threshold_theta(self.n, x)
            .expect("x lies in (0, 1)");
        self.effect_law().sf(theta_x)
    }

    /// `Pr[X < x]`.
    pub fn cdf(&self, x: T) -> T {
        T::one() - self.survival(x)
    }

    /// The `p`-quantile of the rejection probability, `p` in `[0, 1]`.
    pub fn quantile(&self, p: T) -> Result<T> {
        let theta = self.effect_law().quantile(p)?;
        Ok(self.setup.prob_reject(self.n, theta))
    }

    /// Equal-width histogram on `[0, 1]` from survival differences.
    pub fn histogram(&self, bins: usize) -> Result<Vec<HistogramBin<T>>> {
        if bins == 0 {
            return Err(Error::invalid("bins", "need at least one bin"));
        }
        let width = T::one() / T::from_count(bins as u64);
        let edge = |i: usize| {
            if i == bins {
                T::one()
            } else {
                T::from_count(i as u64) * width
            }
        };
        Ok((0..bins)
            .map(|i| {
                let (lo, hi) = (edge(i), edge(i + 1));
                let mass = (self.survival(lo) - self.survival(hi)).max(T::zero());
                HistogramBin { lo, hi, mass }
            })
            .collect())
    }
}

pub fn power_dist_survival<T: Scalar>(dist: &PowerDistribution<T>, x: T) -> T {
    dist.survival(x)
}

pub fn power_dist_quantile<T: Scalar>(dist: &PowerDistribution<T>, p: T) -> Result<T> {
    dist.quantile(p)
}

pub fn power_dist_histogram<T: Scalar>(
    dist: &PowerDistribution<T>,
    bins: usize,
) -> Result<Vec<HistogramBin<T>>> {
    dist.histogram(bins)
}
