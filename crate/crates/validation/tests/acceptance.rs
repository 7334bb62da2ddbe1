//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::mem::discriminant;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hybridpower::criteria::{
    ep_pos_threshold, expected_power, pos, pos_derivative, pos_prime, ThresholdDirection,
};
use hybridpower::oracle::{mc_criterion, mc_power_survival, McCriterion, McEstimate};
use hybridpower::solver::{
    implied_reward, solve_sample_size, solve_utility, Criterion, UtilityParams, DEFAULT_N_MAX,
};
use hybridpower::{Error, PowerDist, Prior, Setup};
use hybridpower_cli::figures::{generate, write_files, FigureId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn clinical() -> (Setup, Prior) {
    (
        Setup::new(0.0, 1.0, 0.025, 0.05).unwrap(),
        Prior::new(0.2, 0.2, -0.3, 0.7).unwrap(),
    )
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn size(setup: &Setup, prior: &Prior, c: Criterion<f64>) -> Result<u64, Error> {
    solve_sample_size(setup, prior, &c, DEFAULT_N_MAX).map(|r| r.n)
}

fn point_rule_at_mcid() -> Outcome {
    let (setup, prior) = clinical();
    let c = Criterion::point_alternative(0.05, 0.8).unwrap();
    let (r, t) = timed(|| size(&setup, &prior, c));
    let n = r.map_err(|e| e.to_string())?;
    verdict(
        n == 3140 && t < Duration::from_millis(10),
        format!("n = {n} in {t:?}"),
    )
}

fn prior_quantile_rule() -> Outcome {
    let (setup, prior) = clinical();
    let solve = |gamma| {
        solve_sample_size(
            &setup,
            &prior,
            &Criterion::prior_quantile(gamma, 0.8).unwrap(),
            DEFAULT_N_MAX,
        )
        .map_err(|e| e.to_string())
    };
    let (hi, lo) = (solve(0.9)?, solve(0.5)?);
    let (q90, q50) = (
        hi.theta_alt.unwrap_or(f64::NAN),
        lo.theta_alt.unwrap_or(f64::NAN),
    );
    verdict(
        hi.n == 834 && lo.n == 120 && within(q90, 0.10, 0.005) && within(q50, 0.26, 0.005),
        format!("n = {} / {}, quantiles {q90:.4} / {q50:.4}", hi.n, lo.n),
    )
}

fn expected_power_rule() -> Outcome {
    let (setup, prior) = clinical();
    let n =
        size(&setup, &prior, Criterion::expected_power(0.8).unwrap()).map_err(|e| e.to_string())?;
    let below = expected_power(&setup, &prior, n - 1).map_err(|e| e.to_string())?;
    let at = expected_power(&setup, &prior, n).map_err(|e| e.to_string())?;
    verdict(
        n == 218 && below < 0.8 && at >= 0.8,
        format!("n = {n}, EP({}) = {below:.6}, EP({n}) = {at:.6}", n - 1),
    )
}

fn distribution_panels() -> Outcome {
    let panels = [(-0.25, 0.4, 854), (0.3, 0.125, 126), (0.5, 0.05, 32)];
    let solve = |mcid: f64| -> Result<Vec<u64>, String> {
        let setup = Setup::new(0.0, 1.0, 0.025, mcid).unwrap();
        panels
            .iter()
            .map(|&(mu, tau, _)| {
                let prior = Prior::new(mu, tau, -0.3, 0.7).unwrap();
                size(&setup, &prior, Criterion::expected_power(0.8).unwrap())
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    let ns = solve(0.0)?;
    let alt = solve(0.1)?;
    let ok = ns.iter().zip(&panels).all(|(&n, p)| n.abs_diff(p.2) <= 1);
    verdict(
        ok,
        format!("n = {ns:?} with mcid 0 (mcid 0.1 gives {alt:?})"),
    )
}

fn threshold_conversion() -> Outcome {
    let conv = |t, m, d| ep_pos_threshold(t, m, d).map_err(|e| e.to_string());
    let a = conv(0.8, 0.683, ThresholdDirection::EpToPos)?.value;
    let b = conv(0.5, 0.51, ThresholdDirection::PosToEp)?;
    let c = conv(0.8, 0.51, ThresholdDirection::EpToPos)?.value;
    let d = conv(0.9, 0.51, ThresholdDirection::EpToPos)?.value;
    verdict(
        format!("{a:.4}") == "0.5464"
            && b.value >= 0.98
            && b.feasible
            && within(c, 0.408, 0.001)
            && within(d, 0.459, 0.001),
        format!("{a:.4}, EP >= {:.4}, {c:.4} / {d:.4}", b.value),
    )
}

fn infeasible_pos() -> Outcome {
    let (setup, prior) = clinical();
    match size(
        &setup,
        &prior,
        Criterion::probability_of_success(0.8).unwrap(),
    ) {
        Err(Error::Infeasible { bound, .. }) => Ok(format!("infeasible, bound {bound:.6}")),
        other => Err(format!("got {other:?}")),
    }
}

fn utility_and_reward() -> Outcome {
    let (setup, prior) = clinical();
    let params = UtilityParams::new(3333.0).map_err(|e| e.to_string())?;
    let (opt, t_opt) = timed(|| solve_utility(&setup, &prior, params, DEFAULT_N_MAX));
    let opt = opt.map_err(|e| e.to_string())?;
    let ep = opt.ep_at_opt.unwrap_or(f64::NAN);
    let (r8, t8) = timed(|| implied_reward(&setup, &prior, 0.8, DEFAULT_N_MAX));
    let (r9, t9) = timed(|| implied_reward(&setup, &prior, 0.9, DEFAULT_N_MAX));
    let (l8, l9) = (
        r8.map_err(|e| e.to_string())?.lambda,
        r9.map_err(|e| e.to_string())?.lambda,
    );
    let second = Duration::from_secs(1);
    verdict(
        opt.n_opt.abs_diff(329) <= 1
            && within(ep, 0.86, 0.01)
            && (l8 / 1732.0 - 1.0).abs() <= 0.05
            && (l9 / 6006.0 - 1.0).abs() <= 0.05
            && t_opt < second
            && t8 < second
            && t9 < second,
        format!(
            "n_opt = {}, EP = {ep:.4}, lambda = {l8:.1} / {l9:.1}, slowest {:?}",
            opt.n_opt,
            t_opt.max(t8).max(t9)
        ),
    )
}

fn random_power_distribution() -> Outcome {
    let (setup, prior) = clinical();
    let d = PowerDist::random_power(setup, prior, 218).map_err(|e| e.to_string())?;
    let (high, low) = (d.survival(0.8), d.cdf(0.5));
    verdict(
        within(high, 0.75, 0.02) && within(low, 0.20, 0.02),
        format!("Pr[RPow >= 0.8] = {high:.4}, Pr[RPow < 0.5] = {low:.4}"),
    )
}

/// Integral of `f` over `[a, b]` by composite Simpson with `m` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m)
        .map(|i| f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut scenarios = 0;
    let mut failures = Vec::new();
    let mut worst_identity: f64 = 0.0;
    let mut worst_decomposition: f64 = 0.0;
    while scenarios < 256 {
        let theta0 = rng.random_range(-0.5..0.5);
        let lo = theta0 + rng.random_range(-1.0..0.2);
        let hi = lo + rng.random_range(0.3..2.0);
        let prior = match Prior::new(
            theta0 + rng.random_range(-0.5..1.0),
            rng.random_range(0.02..1.0),
            lo,
            hi,
        ) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let alpha = rng.random_range(0.005..0.1);
        let sigma = rng.random_range(0.3..3.0);
        let setup = Setup::new(theta0, sigma, alpha, theta0 + rng.random_range(0.0..0.3)).unwrap();
        let mass = prior.mass_relevant(setup.mcid());
        if mass <= 1e-4 {
            continue;
        }
        scenarios += 1;
        let n = rng.random_range(1..5000u64);
        let mut fail = |what: String| failures.push(format!("scenario {scenarios}: {what}"));

        let ep = expected_power(&setup, &prior, n).unwrap();
        let identity = (pos(&setup, &prior, n) - ep * mass).abs();
        worst_identity = worst_identity.max(identity);
        if identity > 1e-8 {
            fail(format!("identity off by {identity:e}"));
        }

        let dec = pos_prime(&setup, &prior, n);
        let direct = simpson(
            |t| setup.prob_reject(n, t) * prior.pdf(t),
            prior.lo(),
            prior.hi(),
            200_000,
        );
        let gap = (dec.total() - direct).abs();
        worst_decomposition = worst_decomposition.max(gap);
        if gap > 1e-8 || dec.type1 > alpha + 1e-12 {
            fail(format!("decomposition gap {gap:e}, type1 {}", dec.type1));
        }

        let theta_alt = setup.mcid().max(theta0 + 0.01);
        let mut last = [f64::NEG_INFINITY; 3];
        for m in [1u64, 2, 5, 10, 30, 100, 300, 1000, 3000, 10_000] {
            let now = [
                expected_power(&setup, &prior, m).unwrap(),
                pos(&setup, &prior, m),
                setup.prob_reject(m, theta_alt),
            ];
            if now.iter().zip(&last).any(|(a, b)| *a < *b - 1e-12) {
                fail(format!("not monotone at n = {m}"));
            }
            last = now;
        }

        let gamma = rng.random_range(0.05..0.95);
        let cond = prior.condition_on(setup.mcid()).unwrap();
        let q = cond.quantile(1.0 - gamma).unwrap();
        let by_quantile = solve_sample_size(
            &setup,
            &prior,
            &Criterion::prior_quantile(gamma, 0.8).unwrap(),
            DEFAULT_N_MAX,
        );
        if q > theta0 {
            let by_point = solve_sample_size(
                &setup,
                &prior,
                &Criterion::point_alternative(q, 0.8).unwrap(),
                DEFAULT_N_MAX,
            );
            let same = match (&by_quantile, &by_point) {
                (Ok(a), Ok(b)) => a.n == b.n,
                (Err(a), Err(b)) => discriminant(a) == discriminant(b),
                _ => false,
            };
            if !same {
                fail(format!(
                    "quantile rule {by_quantile:?} vs point rule {by_point:?}"
                ));
            }
        }

        for p in [1e-6, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0 - 1e-6] {
            let a = prior.cdf(prior.quantile(p).unwrap());
            let b = cond.cdf(cond.quantile(p).unwrap());
            if (a - p).abs() > 1e-8 || (b - p).abs() > 1e-8 {
                fail(format!("cdf/quantile at p = {p}: {a} / {b}"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{scenarios} scenarios, worst identity {worst_identity:.1e}, worst decomposition {worst_decomposition:.1e}{}",
            failures.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn oracle_agreement() -> Outcome {
    const DRAWS: u64 = 1_000_000;
    let setup = Setup::new(0.0, 1.0, 0.025, 0.05).unwrap();
    let n = 218;
    let mut checks = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let start = Instant::now();
    for (i, mu) in [-0.1, 0.05, 0.2, 0.35, 0.5].into_iter().enumerate() {
        for (j, tau) in [0.05, 0.1, 0.2, 0.3, 0.5].into_iter().enumerate() {
            let prior = Prior::new(mu, tau, -0.3, 0.7).unwrap();
            let seed = 1000 + 10 * i as u64 + j as u64;
            let mc = |which| {
                mc_criterion(&setup, &prior, n, which, DRAWS, seed)
                    .ok()
                    .and_then(|o| o.single())
                    .expect("scalar estimate")
            };
            let dist = PowerDist::random_power(setup, prior, n).unwrap();
            let mut pairs: Vec<(&str, f64, McEstimate<f64>)> = vec![
                (
                    "EP",
                    expected_power(&setup, &prior, n).unwrap(),
                    mc(McCriterion::ExpectedPower),
                ),
                ("PoS", pos(&setup, &prior, n), mc(McCriterion::Pos)),
                (
                    "PoS'",
                    pos_prime(&setup, &prior, n).total(),
                    mc(McCriterion::PosPrime),
                ),
            ];
            for x in [0.5, 0.8] {
                let mut est = mc_power_survival(&setup, &prior, n, x, true, DRAWS, seed).unwrap();
                let exact = dist.survival(x);
                // a proportion whose draws all agree has zero sample spread;
                // use the binomial error at the exact value instead
                let binomial = (exact * (1.0 - exact) / DRAWS as f64).sqrt();
                est.std_error = est.std_error.max(binomial);
                pairs.push(("survival", exact, est));
            }
            for (name, exact, est) in pairs {
                checks += 1;
                let z = (exact - est.value).abs() / est.std_error.max(f64::MIN_POSITIVE);
                worst = worst.max(z);
                if (exact - est.value).abs() > 3.0 * est.std_error + 1e-12 {
                    failures.push(format!(
                        "{name} at mu {mu}, tau {tau}: {exact} vs {} ({z:.2} SE)",
                        est.value
                    ));
                }
            }
        }
    }
    let t = start.elapsed();
    verdict(
        failures.is_empty() && t < Duration::from_secs(300),
        format!(
            "{checks} checks, worst {worst:.2} SE, {t:.1?}{}",
            failures
                .first()
                .map(|f| format!("; {f}"))
                .unwrap_or_default()
        ),
    )
}

fn derivative_check() -> Outcome {
    let (setup, _) = clinical();
    let priors = [(0.2, 0.2), (-0.1, 0.3), (0.4, 0.1), (0.1, 0.05), (0.3, 0.5)];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (mu, tau) in priors {
        let prior = Prior::new(mu, tau, -0.3, 0.7).unwrap();
        for n in [100u64, 218, 500, 1500] {
            count += 1;
            let fd = (pos(&setup, &prior, n + 1) - pos(&setup, &prior, n - 1)) / 2.0;
            let exact = pos_derivative(&setup, &prior, n);
            worst = worst.max((exact - fd).abs() / fd.abs());
        }
    }
    verdict(
        worst <= 1e-3,
        format!("{count} scenarios, worst relative error {worst:.2e}"),
    )
}

fn figures_reproducible() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let files = generate(FigureId::All).map_err(|e| e.to_string())?;
        write_files(&files, d.path()).map_err(|e| e.to_string())?;
    }
    let read = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let (a, b) = (read(dirs[0].path()), read(dirs[1].path()));
    let figures_present = (2..=7).all(|k| {
        a.iter()
            .any(|(name, _)| name.starts_with(&format!("fig{k}")))
    });
    verdict(
        a == b && figures_present,
        format!(
            "{} files, {} bytes",
            a.len(),
            a.iter().map(|f| f.1.len()).sum::<usize>()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "point rule at mcid", point_rule_at_mcid),
        (2, "prior quantile rule", prior_quantile_rule),
        (3, "expected power rule", expected_power_rule),
        (4, "random power panels", distribution_panels),
        (5, "threshold conversion", threshold_conversion),
        (6, "infeasible probability of success", infeasible_pos),
        (7, "utility and implied reward", utility_and_reward),
        (8, "random power distribution", random_power_distribution),
        (9, "property suite", property_suite),
        (10, "Monte Carlo oracle", oracle_agreement),
        (11, "derivative check", derivative_check),
        (12, "figure reproducibility", figures_reproducible),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let (label, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {id:>2} {label}  {name}: {detail}");
    }
    println!("{} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
