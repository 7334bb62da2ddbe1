//! Randomised invariants over priors, test setups and sample sizes.

use hybridpower::criteria::{expected_power, pos, pos_derivative, pos_prime};
use hybridpower::design::{PowerDistribution, TestSetup};
use hybridpower::gauss::TruncatedNormalPrior;
use hybridpower::quadrature::{Integrator, Tolerance};
use hybridpower::solver::{
    solve_sample_size, solve_utility, utility, Criterion, UtilityMethod, UtilityParams,
};
use hybridpower::Error;
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
struct Scenario {
    setup: TestSetup<f64>,
    prior: TruncatedNormalPrior<f64>,
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        -0.5f64..1.0,  // prior mean
        0.02f64..1.0,  // prior sd
        -1.0f64..0.2,  // lo
        0.3f64..2.0,   // width
        0.005f64..0.1, // alpha
        0.0f64..0.3,   // mcid - theta0
        -0.5f64..0.5,  // theta0
        0.3f64..3.0,   // sigma
    )
        .prop_filter_map(
            "relevance region carries too little mass",
            |(mu, tau, lo, w, alpha, gap, theta0, sigma)| {
                let prior =
                    TruncatedNormalPrior::new(mu + theta0, tau, lo + theta0, lo + w + theta0)
                        .ok()?;
                let setup = TestSetup::new(theta0, sigma, alpha, theta0 + gap).ok()?;
                (prior.mass_relevant(setup.mcid()) > 1e-4).then_some(Scenario { setup, prior })
            },
        )
}

/// `PoS'` by a single integral over the whole support with a different rule.
fn pos_prime_direct(s: &Scenario, n: u64) -> f64 {
    let q = Integrator::new(
        21,
        Tolerance {
            relative: 1e-13,
            absolute: 1e-16,
            max_panels: 100_000,
        },
    );
    let p = &s.prior;
    q.integrate(
        |t| s.setup.prob_reject(n, t) * p.pdf(t),
        p.lo(),
        p.hi(),
        &[],
    )
    .value
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn pos_equals_ep_times_mass(s in scenario(), n in 1u64..5000) {
        let mass = s.prior.mass_relevant(s.setup.mcid());
        let ep = expected_power(&s.setup, &s.prior, n).unwrap();
        let p = pos(&s.setup, &s.prior, n);
        prop_assert!((p - ep * mass).abs() <= 1e-8, "pos {p} ep {ep} mass {mass}");
        prop_assert!((0.0..=1.0).contains(&ep));
    }

    #[test]
    fn decomposition_sums_to_marginal(s in scenario(), n in 1u64..5000) {
        let d = pos_prime(&s.setup, &s.prior, n);
        let direct = pos_prime_direct(&s, n);
        prop_assert!((d.total() - direct).abs() <= 1e-8, "{d:?} vs {direct}");
        prop_assert!(d.type1 <= s.setup.alpha() + 1e-12);
        prop_assert!(d.type1 >= 0.0 && d.irrelevant >= 0.0);
        prop_assert_eq!(d.relevant, pos(&s.setup, &s.prior, n));
    }

    #[test]
    fn criteria_increase_with_n(s in scenario(), n in 1u64..5000, step in 1u64..500) {
        let m = n + step;
        let ep = |k| expected_power(&s.setup, &s.prior, k).unwrap();
        prop_assert!(ep(m) >= ep(n) - 1e-12);
        prop_assert!(pos(&s.setup, &s.prior, m) >= pos(&s.setup, &s.prior, n) - 1e-12);
        let theta = s.setup.mcid().max(s.setup.theta0() + 0.01);
        prop_assert!(s.setup.prob_reject(m, theta) >= s.setup.prob_reject(n, theta));
        let a = PowerDistribution::random_power(s.setup, s.prior, n).unwrap();
        let b = PowerDistribution::random_power(s.setup, s.prior, m).unwrap();
        prop_assert!(b.quantile(0.5).unwrap() >= a.quantile(0.5).unwrap() - 1e-12);
    }

    #[test]
    fn quantile_rule_is_point_rule(s in scenario(), gamma in 0.05f64..=1.0, target in 0.5f64..0.95) {
        let cond = s.prior.condition_on(s.setup.mcid()).unwrap();
        let theta = cond.quantile(1.0 - gamma).unwrap();
        let q = solve_sample_size(&s.setup, &s.prior, &Criterion::prior_quantile(gamma, target).unwrap(), 1_000_000_000);
        if theta > s.setup.theta0() {
            let p = solve_sample_size(&s.setup, &s.prior, &Criterion::point_alternative(theta, target).unwrap(), 1_000_000_000);
            match (q, p) {
                (Ok(q), Ok(p)) => {
                    prop_assert_eq!(q.n, p.n);
                    prop_assert_eq!(q.achieved, p.achieved);
                }
                (q, p) => prop_assert_eq!(q.unwrap_err(), p.unwrap_err()),
            }
        } else {
            prop_assert!(q.is_err());
        }
    }

    #[test]
    fn cdf_and_quantile_are_inverse(s in scenario(), p in 0.001f64..0.999) {
        let x = s.prior.quantile(p).unwrap();
        prop_assert!((s.prior.cdf(x) - p).abs() <= 1e-8);
        let cond = s.prior.condition_on(s.setup.mcid()).unwrap();
        let y = cond.quantile(p).unwrap();
        prop_assert!((cond.cdf(y) - p).abs() <= 1e-8);
        let dist = PowerDistribution::new(s.setup, s.prior, 100, true).unwrap();
        let r = dist.quantile(p).unwrap();
        // the power curve flattens near 0 and 1, where inversion loses digits
        if r > 1e-6 && r < 1.0 - 1e-6 {
            prop_assert!((dist.cdf(r) - p).abs() <= 1e-8, "rpow quantile {r}");
        }
    }

    #[test]
    fn ep_solution_is_minimal_and_below_point_rule(s in scenario(), target in 0.5f64..0.9) {
        let ep = solve_sample_size(&s.setup, &s.prior, &Criterion::expected_power(target).unwrap(), 1_000_000_000);
        let Ok(ep) = ep else { return Ok(()) };
        prop_assert!(ep.achieved >= target);
        if let Some(below) = ep.achieved_below {
            prop_assert!(below < target);
        } else {
            prop_assert_eq!(ep.n, 1);
        }
        let edge = s.setup.mcid().max(s.prior.lo());
        if edge > s.setup.theta0() {
            let point = solve_sample_size(&s.setup, &s.prior, &Criterion::point_alternative(edge, target).unwrap(), 1_000_000_000);
            match point {
                Ok(point) => prop_assert!(ep.n <= point.n),
                Err(e) => prop_assert!(matches!(e, Error::ExceedsNMax { .. }), "{e}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn utility_optimum_matches_full_scan(s in scenario(), lambda in 0.0f64..1500.0) {
        let params = UtilityParams::new(lambda).unwrap();
        let opt = solve_utility(&s.setup, &s.prior, params, 100_000).unwrap();
        let bound = (lambda * s.prior.mass_relevant(s.setup.mcid())).floor() as u64 + 1;
        let mut best = (1u64, utility(&s.setup, &s.prior, 1, params));
        for n in 2..=bound.max(2) {
            let u = utility(&s.setup, &s.prior, n, params);
            if u > best.1 {
                best = (n, u);
            }
        }
        prop_assert_eq!(opt.n_opt, best.0, "method {:?}", opt.method);
        prop_assert!(matches!(opt.method, UtilityMethod::Marginal | UtilityMethod::Exhaustive));
    }

    #[test]
    // the h = 1 difference carries an O(1/n^2) truncation error, so stay clear of tiny n
    fn derivative_matches_central_difference(s in scenario(), n in 100u64..3000) {
        let analytic = pos_derivative(&s.setup, &s.prior, n);
        let fd = (pos(&s.setup, &s.prior, n + 1) - pos(&s.setup, &s.prior, n - 1)) / 2.0;
        if analytic > 1e-9 {
            prop_assert!((fd / analytic - 1.0).abs() <= 1e-3, "analytic {analytic} fd {fd}");
        }
    }
}

#[test]
fn single_precision_instantiation() {
    let setup = TestSetup::<f32>::standardized(0.025, 0.05).unwrap();
    let prior = TruncatedNormalPrior::<f32>::new(0.2, 0.2, -0.3, 0.7).unwrap();
    let ep = expected_power(&setup, &prior, 218).unwrap();
    assert!((ep - 0.800_194).abs() < 1e-4, "{ep}");
    let c = Criterion::<f32>::point_alternative(0.05, 0.8).unwrap();
    let n = solve_sample_size(&setup, &prior, &c, 10_000).unwrap().n;
    assert!(n.abs_diff(3140) <= 2, "{n}");
}
