//! Integer sample-size search, utility maximisation and the implied reward.

use std::cell::RefCell;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{expected_power_at, pos, pos_at, pos_derivative_at};
use crate::design::TestSetup;
use crate::error::{Error, Result};
use crate::gauss::TruncatedNormalPrior;
use crate::scalar::Scalar;

pub const DEFAULT_N_MAX: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Rule<T> {
    /// Power at a fixed alternative `theta_alt`.
    PointAlternative {
        theta_alt: T,
    },
    /// The `(1 - gamma)` quantile of random power; `gamma = 1` powers at the
    /// lower edge of the relevance region.
    PriorQuantile {
        gamma: T,
    },
    ExpectedPower,
    ProbabilityOfSuccess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criterion<T> {
    #[serde(flatten)]
    pub rule: Rule<T>,
    pub target: T,
}

impl<T: Scalar> Criterion<T> {
    pub fn new(rule: Rule<T>, target: T) -> Result<Self> {
        if !(target > T::zero() && target < T::one()) {
            return Err(Error::invalid(
                "target",
                format!("need 0 < target < 1, got {target}"),
            ));
        }
        match rule {
            Rule::PriorQuantile { gamma } if !(gamma > T::zero() && gamma <= T::one()) => {
                return Err(Error::invalid(
                    "gamma",
                    format!("need 0 < gamma <= 1, got {gamma}"),
                ));
            }
            Rule::PointAlternative { theta_alt } if !theta_alt.is_finite() => {
                return Err(Error::invalid("theta_alt", "must be finite"));
            }
            _ => {}
        }
        Ok(Self { rule, target })
    }

    pub fn point_alternative(theta_alt: T, target: T) -> Result<Self> {
        Self::new(Rule::PointAlternative { theta_alt }, target)
    }

    pub fn prior_quantile(gamma: T, target: T) -> Result<Self> {
        Self::new(Rule::PriorQuantile { gamma }, target)
    }

    pub fn expected_power(target: T) -> Result<Self> {
        Self::new(Rule::ExpectedPower, target)
    }

    pub fn probability_of_success(target: T) -> Result<Self> {
        Self::new(Rule::ProbabilityOfSuccess, target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeResult<T> {
    pub n: u64,
    /// Criterion value at `n`.
    pub achieved: T,
    /// Criterion value at `n - 1`; absent when `n = 1`.
    pub achieved_below: Option<T>,
    pub criterion: Criterion<T>,
    /// Effect size the design is powered at, for the point and quantile rules.
    pub theta_alt: Option<T>,
    /// Number of criterion evaluations spent by the search.
    pub evaluations: u32,
}

/// Smallest `n` in `[1, n_max]` with `f(n) >= target` for nondecreasing `f`.
fn monotone_search<T: Scalar>(
    f: impl Fn(u64) -> T,
    target: T,
    n_max: u64,
) -> Result<(u64, T, Option<T>, u32)> {
    let mut evals = 0u32;
    let mut eval = |n: u64| {
        evals += 1;
        f(n)
    };
    let first = eval(1);
    if first >= target {
        return Ok((1, first, None, evals));
    }
    // invariant: f(lo) < target <= f(hi)
    let mut lo = 1u64;
    let mut hi = 2u64.min(n_max);
    let mut f_hi = eval(hi);
    while f_hi < target {
        if hi == n_max {
            return Err(Error::ExceedsNMax {
                n_max,
                achieved: f_hi.as_f64(),
            });
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(n_max);
        f_hi = eval(hi);
    }
    let mut f_lo = None;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = eval(mid);
        if v >= target {
            hi = mid;
            f_hi = v;
        } else {
            lo = mid;
            f_lo = Some(v);
        }
    }
    let below = match f_lo {
        Some(v) => v,
        None => eval(lo),
    };
    Ok((hi, f_hi, Some(below), evals))
}

/// The minimal `n <= n_max` meeting `criterion`, with the criterion value at
/// `n - 1` as a certificate of minimality.
pub fn solve_sample_size<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    criterion: &Criterion<T>,
    n_max: u64,
) -> Result<SampleSizeResult<T>> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let target = criterion.target;
    let finish = |(n, achieved, achieved_below, evaluations): (u64, T, Option<T>, u32),
                  theta_alt: Option<T>| SampleSizeResult {
        n,
        achieved,
        achieved_below,
        criterion: *criterion,
        theta_alt,
        evaluations,
    };
    match criterion.rule {
        Rule::PointAlternative { theta_alt } => {
            if !(theta_alt > setup.theta0()) {
                return Err(Error::invalid(
                    "theta_alt",
                    format!("must exceed theta0 = {}", setup.theta0()),
                ));
            }
            point_search(setup, theta_alt, target, n_max).map(|r| finish(r, Some(theta_alt)))
        }
        Rule::PriorQuantile { gamma } => {
            let cond = prior.condition_on(setup.mcid())?;
            let theta = cond.quantile(T::one() - gamma)?;
            if !(theta > setup.theta0()) {
                // power at the null never leaves alpha
                return Err(Error::Infeasible {
                    target: target.as_f64(),
                    bound: setup.alpha().as_f64(),
                });
            }
            point_search(setup, theta, target, n_max).map(|r| finish(r, Some(theta)))
        }
        Rule::ExpectedPower => {
            prior.condition_on(setup.mcid())?;
            let ep = |n: u64| expected_power_at(setup, prior, T::from_count(n)).unwrap_or(T::nan());
            monotone_search(ep, target, n_max).map(|r| finish(r, None))
        }
        Rule::ProbabilityOfSuccess => {
            let bound = prior.mass_relevant(setup.mcid());
            if target >= bound {
                return Err(Error::Infeasible {
                    target: target.as_f64(),
                    bound: bound.as_f64(),
                });
            }
            monotone_search(|n| pos(setup, prior, n), target, n_max).map(|r| finish(r, None))
        }
    }
}

fn point_search<T: Scalar>(
    setup: &TestSetup<T>,
    theta: T,
    target: T,
    n_max: u64,
) -> Result<(u64, T, Option<T>, u32)> {
    monotone_search(|n| setup.prob_reject(n, theta), target, n_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams<T> {
    /// Reward for a correct rejection, in units of the average per-patient cost.
    pub lambda: T,
}

impl<T: Scalar> UtilityParams<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::invalid(
                "lambda",
                format!("must be finite and non-negative, got {lambda}"),
            ));
        }
        Ok(Self { lambda })
    }
}

/// `U(n) = λ PoS(n) - n`.
pub fn utility<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    n: u64,
    params: UtilityParams<T>,
) -> T {
    params.lambda * pos(setup, prior, n) - T::from_count(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityMethod {
    /// Located from the sign changes of the marginal utility.
    Marginal,
    /// Full scan over the admissible range.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityOptimum<T> {
    pub n_opt: u64,
    pub utility: T,
    /// `None` when no prior mass lies in the relevance region.
    pub ep_at_opt: Option<T>,
    pub pos_at_opt: T,
    pub method: UtilityMethod,
}

/// Integer maximiser of `U(n)` over `[1, n_max]`, ties broken toward the
/// smaller `n`.
pub fn solve_utility<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    params: UtilityParams<T>,
    n_max: u64,
) -> Result<UtilityOptimum<T>> {
    let params = UtilityParams::new(params.lambda)?;
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let lambda = params.lambda;
    let mass = prior.mass_relevant(setup.mcid());
    // U(n) <= λ·mass - n < -1 <= U(1) beyond this point
    let reach = (lambda * mass).floor().as_f64();
    let bound = if reach >= (n_max - 1) as f64 {
        n_max
    } else {
        reach as u64 + 1
    };

    let cache: RefCell<HashMap<u64, T>> = RefCell::new(HashMap::new());
    let pos_n = |n: u64| {
        *cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| pos(setup, prior, n))
    };
    let marginal = |n: u64| lambda * (pos_n(n + 1) - pos_n(n)) - T::one();
    let u = |n: u64| lambda * pos_n(n) - T::from_count(n);

    if bound == n_max && marginal(n_max) > T::zero() {
        return Err(Error::ExceedsNMax {
            n_max,
            achieved: u(n_max).as_f64(),
        });
    }

    let grid = geometric_grid(bound);
    let signs: Vec<bool> = grid.iter().map(|&n| marginal(n) > T::zero()).collect();
    // a single run of positive marginals means at most one interior maximum
    let runs = signs.windows(2).filter(|w| !w[0] && w[1]).count() + usize::from(signs[0]);

    let (n_opt, method) = if runs <= 1 {
        let mut candidates = vec![1u64];
        for (i, w) in signs.windows(2).enumerate() {
            if w[0] && !w[1] {
                // first n in (grid[i], grid[i+1]] where the marginal turns non-positive
                let (mut lo, mut hi) = (grid[i], grid[i + 1]);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if marginal(mid) > T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                candidates.push(hi);
            }
        }
        if *signs.last().expect("non-empty grid") {
            candidates.push(bound);
        }
        let best = candidates
            .into_iter()
            .map(|n| (n, u(n)))
            .fold(None, |acc: Option<(u64, T)>, (n, v)| match acc {
                Some((bn, bv)) if bv > v || (bv == v && bn < n) => Some((bn, bv)),
                _ => Some((n, v)),
            })
            .expect("at least one candidate")
            .0;
        (best, UtilityMethod::Marginal)
    } else {
        let values: Vec<T> = (1..=bound)
            .into_par_iter()
            .map(|n| params.lambda * pos(setup, prior, n) - T::from_count(n))
            .collect();
        let mut best = 0usize;
        for (i, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = i;
            }
        }
        (best as u64 + 1, UtilityMethod::Exhaustive)
    };

    let pos_at_opt = pos_n(n_opt);
    let ep_at_opt = prior
        .condition_on(setup.mcid())
        .ok()
        .and_then(|_| expected_power_at(setup, prior, T::from_count(n_opt)).ok());
    Ok(UtilityOptimum {
        n_opt,
        utility: lambda * pos_at_opt - T::from_count(n_opt),
        ep_at_opt,
        pos_at_opt,
        method,
    })
}

/// Integers `1 = g_0 < g_1 < ... = bound` growing by roughly a quarter.
fn geometric_grid(bound: u64) -> Vec<u64> {
    let mut grid = vec![1u64];
    let mut x = 1.0f64;
    while *grid.last().expect("non-empty") < bound {
        x *= 1.25;
        let next = (x.ceil() as u64)
            .max(grid.last().expect("non-empty") + 1)
            .min(bound);
        grid.push(next);
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedReward<T> {
    pub lambda: T,
    /// Real-valued sample size at which expected power equals the target.
    pub n_continuous: T,
    /// Smallest integer sample size meeting the target.
    pub n_integer: u64,
}

/// The reward `λ` for which `n ↦ λ PoS(n) - n` is stationary at the real
/// sample size where expected power reaches `ep_target`: `λ = 1 / PoS'(n)`.
pub fn implied_reward<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    ep_target: T,
    n_max: u64,
) -> Result<ImpliedReward<T>> {
    let criterion = Criterion::expected_power(ep_target)?;
    let solved = solve_sample_size(setup, prior, &criterion, n_max)?;
    let ep = |n: T| expected_power_at(setup, prior, n);
    // EP(n) -> alpha-ish as n -> 0, so the root lies in (n - 1, n]
    let mut hi = T::from_count(solved.n);
    let mut lo = if solved.n > 1 {
        T::from_count(solved.n - 1)
    } else {
        T::lit(1e-9)
    };
    if ep(lo)? >= ep_target {
        hi = lo;
    } else {
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if !(mid > lo && mid < hi) {
                break;
            }
            if ep(mid)? >= ep_target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let slope = pos_derivative_at(setup, prior, hi);
    if !(slope > T::zero()) {
        return Err(Error::Infeasible {
            target: ep_target.as_f64(),
            bound: pos_at(setup, prior, hi).as_f64(),
        });
    }
    Ok(ImpliedReward {
        lambda: T::one() / slope,
        n_continuous: hi,
        n_integer: solved.n,
    })
}
