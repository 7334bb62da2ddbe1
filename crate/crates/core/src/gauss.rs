//! Standard-normal and truncated-normal primitives.
//!
//! The complementary error function is a port of the FreeBSD `s_erf.c`
//! rational approximations (|error| below 1 ulp on `f64`); the normal
//! quantile starts from Acklam's rational approximation and is polished
//! with one Halley step against the cdf.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Density of the standard normal distribution.
#[inline]
pub fn std_norm_pdf<T: Scalar>(x: T) -> T {
    let inv_sqrt_2pi = T::lit(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-(x * x) * T::lit(0.5)).exp()
}

/// Cumulative distribution function of the standard normal distribution.
#[inline]
pub fn std_norm_cdf<T: Scalar>(x: T) -> T {
    T::lit(0.5) * erfc(-x * T::FRAC_1_SQRT_2())
}

/// Upper tail `1 - Φ(x)`, accurate for large positive `x`.
#[inline]
pub fn std_norm_sf<T: Scalar>(x: T) -> T {
    std_norm_cdf(-x)
}

/// `Pr[a < Z < b]` for a standard normal `Z`, evaluated in whichever tail
/// keeps the subtraction free of cancellation.
pub fn std_norm_interval<T: Scalar>(a: T, b: T) -> T {
    if b <= a {
        return T::zero();
    }
    if a >= T::zero() {
        std_norm_cdf(-a) - std_norm_cdf(-b)
    } else if b <= T::zero() {
        std_norm_cdf(b) - std_norm_cdf(a)
    } else {
        T::one() - std_norm_cdf(a) - std_norm_cdf(-b)
    }
}

/// Quantile function of the standard normal distribution.
pub fn std_norm_quantile<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::invalid(
            "p",
            format!("normal quantile requires 0 < p < 1, got {p}"),
        ));
    }
    if p > T::lit(0.5) {
        // 1 - p is exact for p in [0.5, 1)
        return Ok(-lower_quantile(T::one() - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile<T: Scalar>(p: T) -> T {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let l = T::lit;

    let x = if p < l(0.02425) {
        let q = (l(-2.0) * p.ln()).sqrt();
        (((((l(C[0]) * q + l(C[1])) * q + l(C[2])) * q + l(C[3])) * q + l(C[4])) * q + l(C[5]))
            / ((((l(D[0]) * q + l(D[1])) * q + l(D[2])) * q + l(D[3])) * q + T::one())
    } else {
        let q = p - l(0.5);
        let r = q * q;
        (((((l(A[0]) * r + l(A[1])) * r + l(A[2])) * r + l(A[3])) * r + l(A[4])) * r + l(A[5])) * q
            / (((((l(B[0]) * r + l(B[1])) * r + l(B[2])) * r + l(B[3])) * r + l(B[4])) * r
                + T::one())
    };

    let density = std_norm_pdf(x);
    if density < T::min_positive_value() {
        return x;
    }
    // Halley step on Φ(x) - p
    let u = (std_norm_cdf(x) - p) / density;
    x - u / (T::one() + x * u * l(0.5))
}

/// Complementary error function.
pub fn erfc<T: Scalar>(x: T) -> T {
    const ERX: f64 = 8.45062911510467529297e-01;
    const PP: [f64; 5] = [
        1.28379167095512558561e-01,
        -3.25042107247001499370e-01,
        -2.84817495755985104766e-02,
        -5.77027029648944159157e-03,
        -2.37630166566501626084e-05,
    ];
    const QQ: [f64; 5] = [
        3.97917223959155352819e-01,
        6.50222499887672944485e-02,
        5.08130628187576562776e-03,
        1.32494738004321644526e-04,
        -3.96022827877536812320e-06,
    ];
    const PA: [f64; 7] = [
        -2.36211856075265944077e-03,
        4.14856118683748331666e-01,
        -3.72207876035701323847e-01,
        3.18346619901161753674e-01,
        -1.10894694282396677476e-01,
        3.54783043256182359371e-02,
        -2.16637559486879084300e-03,
    ];
    const QA: [f64; 6] = [
        1.06420880400844228286e-01,
        5.40397917702171048937e-01,
        7.18286544141962662868e-02,
        1.26171219808761642112e-01,
        1.36370839120290507362e-02,
        1.19844998467991074170e-02,
    ];
    const RA: [f64; 8] = [
        -9.86494403484714822705e-03,
        -6.93858572707181764372e-01,
        -1.05586262253232909814e+01,
        -6.23753324503260060396e+01,
        -1.62396669462573470355e+02,
        -1.84605092906711035994e+02,
        -8.12874355063065934246e+01,
        -9.81432934416914548592e+00,
    ];
    const SA: [f64; 8] = [
        1.96512716674392571292e+01,
        1.37657754143519042600e+02,
        4.34565877475229228821e+02,
        6.45387271733267880336e+02,
        4.29008140027567833386e+02,
        1.08635005541779435134e+02,
        6.57024977031928170135e+00,
        -6.04244152148580987438e-02,
    ];
    const RB: [f64; 7] = [
        -9.86494292470009928597e-03,
        -7.99283237680523006574e-01,
        -1.77579549177547519889e+01,
        -1.60636384855821916062e+02,
        -6.37566443368389627722e+02,
        -1.02509513161107724954e+03,
        -4.83519191608651397019e+02,
    ];
    const SB: [f64; 7] = [
        3.03380607434824582924e+01,
        3.25792512996573918826e+02,
        1.53672958608443695994e+03,
        3.19985821950859553908e+03,
        2.55305040643316442583e+03,
        4.74528541206955367215e+02,
        -2.24409524465858183362e+01,
    ];

    // Horner with an implicit leading coefficient of `lead`.
    fn poly<T: Scalar>(coeffs: &[f64], lead: Option<T>, s: T) -> T {
        let mut acc = T::zero();
        for &c in coeffs.iter().rev() {
            acc = acc * s + T::lit(c);
        }
        match lead {
            Some(one) => one + s * acc,
            None => acc,
        }
    }

    if x.is_nan() {
        return x;
    }
    let one = T::one();
    let two = T::lit(2.0);
    let negative = x < T::zero();
    let ax = x.abs();

    if ax < T::lit(0.84375) {
        if ax < T::lit(1.387_778_780_781_445_7e-17) {
            return one - x;
        }
        let z = x * x;
        let y = poly(&PP, None, z) / poly(&QQ, Some(one), z);
        return if x < T::lit(0.25) {
            one - (x + x * y)
        } else {
            T::lit(0.5) - (x * y + (x - T::lit(0.5)))
        };
    }
    if ax < T::lit(1.25) {
        let s = ax - one;
        let ratio = poly(&PA, None, s) / poly(&QA, Some(one), s);
        return if negative {
            one + T::lit(ERX) + ratio
        } else {
            one - T::lit(ERX) - ratio
        };
    }
    if ax >= T::lit(28.0) {
        return if negative { two } else { T::zero() };
    }
    if negative && ax > T::lit(6.0) {
        return two;
    }
    let s = one / (ax * ax);
    let (r, q) = if ax < T::lit(1.0 / 0.35) {
        (poly(&RA, None, s), poly(&SA, Some(one), s))
    } else {
        (poly(&RB, None, s), poly(&SB, Some(one), s))
    };
    // split ax so that hi * hi is exact and -ax² = -hi² + (hi - ax)(hi + ax)
    let scale = T::lit(1_048_576.0);
    let hi = (ax * scale).trunc() / scale;
    let tail = (-hi * hi - T::lit(0.5625)).exp() * ((hi - ax) * (hi + ax) + r / q).exp() / ax;
    if negative {
        two - tail
    } else {
        tail
    }
}

/// Normal distribution with pre-truncation mean `mu` and standard deviation
/// `tau`, restricted and renormalised to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormalPrior<T> {
    mu: T,
    tau: T,
    lo: T,
    hi: T,
    // standardised bounds and normalising mass
    alpha: T,
    beta: T,
    mass: T,
}

impl<T: Scalar> TruncatedNormalPrior<T> {
    pub fn new(mu: T, tau: T, lo: T, hi: T) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mean", "must be finite"));
        }
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::invalid(
                "sd",
                format!("must be positive and finite, got {tau}"),
            ));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("lo", "truncation bounds must be finite"));
        }
        if !(lo < hi) {
            return Err(Error::invalid(
                "hi",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        let alpha = (lo - mu) / tau;
        let beta = (hi - mu) / tau;
        let mass = std_norm_interval(alpha, beta);
        if !(mass > T::zero()) {
            return Err(Error::invalid(
                "mean",
                format!("normal({mu}, {tau}) has no representable mass on [{lo}, {hi}]"),
            ));
        }
        Ok(Self {
            mu,
            tau,
            lo,
            hi,
            alpha,
            beta,
            mass,
        })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    #[inline]
    fn standardise(&self, x: T) -> T {
        (x - self.mu) / self.tau
    }

    pub fn pdf(&self, x: T) -> T {
        if x < self.lo || x > self.hi {
            return T::zero();
        }
        std_norm_pdf(self.standardise(x)) / (self.tau * self.mass)
    }

    /// `Pr[Θ ≤ x]`.
    pub fn cdf(&self, x: T) -> T {
        if x <= self.lo {
            return T::zero();
        }
        if x >= self.hi {
            return T::one();
        }
        let v = std_norm_interval(self.alpha, self.standardise(x)) / self.mass;
        v.min(T::one())
    }

    /// `Pr[Θ ≥ x]`, computed directly rather than as `1 - cdf`.
    pub fn sf(&self, x: T) -> T {
        if x <= self.lo {
            return T::one();
        }
        if x >= self.hi {
            return T::zero();
        }
        let v = std_norm_interval(self.standardise(x), self.beta) / self.mass;
        v.min(T::one())
    }

    /// Quantile on the closed interval: `p = 0` gives `lo`, `p = 1` gives `hi`.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::invalid("p", format!("need 0 <= p <= 1, got {p}")));
        }
        if p == T::zero() {
            return Ok(self.lo);
        }
        if p == T::one() {
            return Ok(self.hi);
        }
        let lower_target = std_norm_cdf(self.alpha) + p * self.mass;
        let use_upper =
            self.alpha >= T::zero() || (self.beta > T::zero() && lower_target > T::lit(0.5));
        let z = if use_upper {
            let upper_target = std_norm_cdf(-self.beta) + (T::one() - p) * self.mass;
            -clamped_quantile(upper_target)
        } else {
            clamped_quantile(lower_target)
        };
        Ok((self.mu + self.tau * z).max(self.lo).min(self.hi))
    }

    /// Inversion sampler: maps `u ~ Uniform(0, 1)` to a prior draw.
    pub fn sample(&self, u: T) -> Result<T> {
        if !(u > T::zero() && u < T::one()) {
            return Err(Error::invalid("u", format!("need 0 < u < 1, got {u}")));
        }
        self.quantile(u)
    }

    pub fn mean(&self) -> T {
        self.mu + self.tau * (std_norm_pdf(self.alpha) - std_norm_pdf(self.beta)) / self.mass
    }

    /// `Pr[Θ ≥ mcid]`, the a priori probability of a relevant effect.
    pub fn mass_relevant(&self, mcid: T) -> T {
        self.sf(mcid)
    }

    /// The prior conditioned on `Θ ≥ cut`.
    pub fn condition_on(&self, cut: T) -> Result<ConditionalPrior<T>> {
        ConditionalPrior::new(*self, cut)
    }

    /// The interval outside of which the density underflows to zero.
    pub(crate) fn effective_support(&self) -> (T, T) {
        let width = T::lit(38.5) * self.tau;
        (self.lo.max(self.mu - width), self.hi.min(self.mu + width))
    }
}

fn clamped_quantile<T: Scalar>(p: T) -> T {
    let tiny = T::min_positive_value();
    let p = p.max(tiny).min(T::one() - T::epsilon());
    std_norm_quantile(p).unwrap_or(T::zero())
}

/// `Pr[Θ ≥ mcid]` for the given prior.
pub fn prior_mass_relevant<T: Scalar>(prior: &TruncatedNormalPrior<T>, mcid: T) -> T {
    prior.mass_relevant(mcid)
}

/// Below this mass a conditional prior is treated as degenerate.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// Prior of `Θ` conditional on `Θ ≥ cut`; itself a truncated normal on
/// `[max(cut, lo), hi]` with the same pre-truncation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalPrior<T> {
    base: TruncatedNormalPrior<T>,
    cut: T,
    restricted: TruncatedNormalPrior<T>,
    mass: T,
}

impl<T: Scalar> ConditionalPrior<T> {
    pub fn new(base: TruncatedNormalPrior<T>, cut: T) -> Result<Self> {
        let degenerate = |mass: T| Error::DegenerateConditional {
            cut: cut.as_f64(),
            mass: mass.as_f64(),
        };
        if !cut.is_finite() {
            return Err(Error::invalid("mcid", "must be finite"));
        }
        if cut >= base.hi {
            return Err(degenerate(T::zero()));
        }
        let mass = base.sf(cut);
        if !(mass > T::lit(DEGENERATE_MASS)) {
            return Err(degenerate(mass));
        }
        let restricted = TruncatedNormalPrior::new(base.mu, base.tau, cut.max(base.lo), base.hi)
            .map_err(|_| degenerate(mass))?;
        Ok(Self {
            base,
            cut,
            restricted,
            mass,
        })
    }

    pub fn base(&self) -> &TruncatedNormalPrior<T> {
        &self.base
    }

    pub fn cut(&self) -> T {
        self.cut
    }

    /// `Pr[Θ ≥ cut]` under the unconditional prior.
    pub fn mass(&self) -> T {
        self.mass
    }

    /// The conditional law as a truncated normal on the relevance region.
    pub fn as_truncated(&self) -> &TruncatedNormalPrior<T> {
        &self.restricted
    }

    pub fn lower(&self) -> T {
        self.restricted.lo
    }

    pub fn pdf(&self, x: T) -> T {
        self.restricted.pdf(x)
    }

    pub fn cdf(&self, x: T) -> T {
        self.restricted.cdf(x)
    }

    pub fn sf(&self, x: T) -> T {
        self.restricted.sf(x)
    }

    /// Conditional quantile; `p = 0` gives `max(cut, lo)`, `p = 1` gives `hi`.
    pub fn quantile(&self, p: T) -> Result<T> {
        self.restricted.quantile(p)
    }

    pub fn sample(&self, u: T) -> Result<T> {
        self.restricted.sample(u)
    }
}

/// The `p`-quantile of `Θ | Θ ≥ cut`.
pub fn conditional_quantile<T: Scalar>(cond: &ConditionalPrior<T>, p: T) -> Result<T> {
    cond.quantile(p)
}
