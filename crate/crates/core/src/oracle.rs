//! Brute-force Monte-Carlo estimates of the criteria, for cross-checking the
//! quadrature path.
//!
//! Draws are split into fixed chunks; chunk `c` uses a ChaCha8 generator
//! seeded with `seed` on stream `c`, so an estimate depends only on
//! `(seed, draws)` and not on the number of worker threads.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::TestSetup;
use crate::error::{Error, Result};
use crate::gauss::TruncatedNormalPrior;
use crate::scalar::Scalar;

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub draws: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McCriterion {
    ExpectedPower,
    Pos,
    PosPrime,
    Decomposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum McOutcome<T> {
    Single(McEstimate<T>),
    Decomposition {
        type1: McEstimate<T>,
        irrelevant: McEstimate<T>,
        relevant: McEstimate<T>,
    },
}

impl<T: Copy> McOutcome<T> {
    /// The scalar estimate, or `None` for a decomposition.
    pub fn single(&self) -> Option<McEstimate<T>> {
        match self {
            McOutcome::Single(e) => Some(*e),
            McOutcome::Decomposition { .. } => None,
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.count == 0.0 {
            return self;
        }
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }

    fn estimate<T: Scalar>(&self, draws: u64, seed: u64) -> McEstimate<T> {
        let var = if self.count > 1.0 {
            self.m2 / (self.count - 1.0)
        } else {
            0.0
        };
        McEstimate {
            value: T::lit(self.mean),
            std_error: T::lit((var.max(0.0) / self.count).sqrt()),
            draws,
            seed,
        }
    }
}

/// Uniform on the open unit interval from the top 53 bits.
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Feeds `K` statistics computed from each prior draw into per-chunk moments
/// and merges them in chunk order.
fn simulate<T: Scalar, const K: usize>(
    law: &TruncatedNormalPrior<T>,
    draws: u64,
    seed: u64,
    stat: impl Fn(T) -> [f64; K] + Sync,
) -> Result<[Moments; K]> {
    if draws == 0 {
        return Err(Error::invalid("draws", "need at least one draw"));
    }
    let chunks = draws.div_ceil(CHUNK);
    let top = T::one() - T::epsilon();
    let per_chunk: Vec<[Moments; K]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let len = CHUNK.min(draws - c * CHUNK);
            let mut acc = [Moments::default(); K];
            for _ in 0..len {
                let u = T::lit(open_uniform(&mut rng)).max(T::epsilon()).min(top);
                let theta = law.sample(u).expect("u lies strictly inside (0, 1)");
                for (m, x) in acc.iter_mut().zip(stat(theta)) {
                    m.push(x);
                }
            }
            acc
        })
        .collect();
    Ok(per_chunk
        .into_iter()
        .fold([Moments::default(); K], |acc, chunk| {
            let mut out = acc;
            for (o, c) in out.iter_mut().zip(chunk) {
                *o = o.merge(c);
            }
            out
        }))
}

/// Averages the probability to reject over prior draws: under the
/// conditional prior for expected power, restricted to the relevance region
/// for PoS, unrestricted for `PoS'`, or split by region for the
/// decomposition.
pub fn mc_criterion<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    n: u64,
    which: McCriterion,
    draws: u64,
    seed: u64,
) -> Result<McOutcome<T>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let power = |t: T| setup.prob_reject(n, t).as_f64();
    let (theta0, mcid) = (setup.theta0(), setup.mcid());
    let outcome = match which {
        McCriterion::ExpectedPower => {
            let cond = prior.condition_on(mcid)?;
            let [m] = simulate(cond.as_truncated(), draws, seed, |t| [power(t)])?;
            McOutcome::Single(m.estimate(draws, seed))
        }
        McCriterion::Pos => {
            let [m] = simulate(prior, draws, seed, |t| {
                [if t >= mcid { power(t) } else { 0.0 }]
            })?;
            McOutcome::Single(m.estimate(draws, seed))
        }
        McCriterion::PosPrime => {
            let [m] = simulate(prior, draws, seed, |t| [power(t)])?;
            McOutcome::Single(m.estimate(draws, seed))
        }
        McCriterion::Decomposition => {
            let [a, b, c] = simulate(prior, draws, seed, |t| {
                let p = power(t);
                if t <= theta0 {
                    [p, 0.0, 0.0]
                } else if t < mcid {
                    [0.0, p, 0.0]
                } else {
                    [0.0, 0.0, p]
                }
            })?;
            McOutcome::Decomposition {
                type1: a.estimate(draws, seed),
                irrelevant: b.estimate(draws, seed),
                relevant: c.estimate(draws, seed),
            }
        }
    };
    Ok(outcome)
}

/// Fraction of draws whose probability to reject is at least `x`; draws come
/// from the conditional prior when `conditional` is set.
pub fn mc_power_survival<T: Scalar>(
    setup: &TestSetup<T>,
    prior: &TruncatedNormalPrior<T>,
    n: u64,
    x: T,
    conditional: bool,
    draws: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::invalid("x", format!("need 0 <= x <= 1, got {x}")));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let cond;
    let law = if conditional {
        cond = prior.condition_on(setup.mcid())?;
        cond.as_truncated()
    } else {
        prior
    };
    let [m] = simulate(law, draws, seed, |t| {
        [if setup.prob_reject(n, t) >= x {
            1.0
        } else {
            0.0
        }]
    })?;
    Ok(m.estimate(draws, seed))
}
