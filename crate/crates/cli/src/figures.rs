//! Data behind the figures: deterministic CSV tables, one or more per figure.
//!
//! Grid points are evaluated in parallel and written in grid order.

use std::io;
use std::path::Path;

use clap::ValueEnum;
use hybridpower::criteria::pos_prime;
use hybridpower::design::{PowerDistribution, TestSetup};
use hybridpower::gauss::TruncatedNormalPrior;
use hybridpower::solver::{implied_reward, solve_sample_size, Criterion};
use hybridpower::{Error, Result};
use rayon::prelude::*;

use crate::format::sig10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvFile {
    pub name: String,
    pub content: String,
}

struct Table {
    name: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Self {
            name,
            header,
            rows: Vec::new(),
        }
    }

    fn finish(self) -> CsvFile {
        let mut content = self.header.join(",");
        content.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            content.push_str(&row.join(","));
            content.push('\n');
        }
        CsvFile {
            name: format!("{}.csv", self.name),
            content,
        }
    }
}

const LO: f64 = -0.3;
const HI: f64 = 0.7;
const ALPHA: f64 = 0.025;
const THETA_POINTS: usize = 201;
const HIST_BINS: usize = 25;

fn prior(mean: f64, sd: f64) -> Result<TruncatedNormalPrior<f64>> {
    TruncatedNormalPrior::new(mean, sd, LO, HI)
}

fn theta_grid() -> Vec<f64> {
    let last = (THETA_POINTS - 1) as f64;
    (0..THETA_POINTS)
        .map(|i| LO + (HI - LO) * (i as f64 / last))
        .collect()
}

fn n_or_na(r: Result<u64>) -> Result<String> {
    match r {
        Ok(n) => Ok(n.to_string()),
        Err(
            Error::Infeasible { .. }
            | Error::ExceedsNMax { .. }
            | Error::DegenerateConditional { .. },
        ) => Ok("NA".to_owned()),
        Err(e) => Err(e),
    }
}

/// Required sample size over a grid of prior means and standard deviations.
fn fig2() -> Result<Vec<CsvFile>> {
    let setup = TestSetup::standardized(ALPHA, 0.1)?;
    let n_max = 1000;
    let target = 0.8;
    let methods: [(&str, Criterion<f64>); 4] = [
        ("EP", Criterion::expected_power(target)?),
        ("PoS", Criterion::probability_of_success(target)?),
        ("quantile_0.5", Criterion::prior_quantile(0.5, target)?),
        ("quantile_0.9", Criterion::prior_quantile(0.9, target)?),
    ];
    let cells: Vec<(f64, f64)> = (-2..=10)
        .flat_map(|m| (1..=10).map(move |s| (m as f64 / 20.0, s as f64 / 20.0)))
        .collect();
    let rows: Vec<Vec<Vec<String>>> = cells
        .par_iter()
        .map(|&(mean, sd)| {
            let p = prior(mean, sd)?;
            methods
                .iter()
                .map(|(label, c)| {
                    let n = n_or_na(solve_sample_size(&setup, &p, c, n_max).map(|r| r.n))?;
                    Ok(vec![sig10(mean), sig10(sd), label.to_string(), n])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new("fig2", &["prior_mean", "prior_sd", "method", "n"]);
    t.rows = rows.into_iter().flatten().collect();
    Ok(vec![t.finish()])
}

/// Shares of type I, irrelevant and relevant rejections in `PoS'` at n = 150.
fn fig3() -> Result<Vec<CsvFile>> {
    let setup = TestSetup::standardized(ALPHA, 0.1)?;
    let n = 150;
    let sds = [0.025, 0.05, 0.1, 0.2, 0.4];
    let cells: Vec<(f64, f64)> = (-2..=5)
        .flat_map(|m| sds.iter().map(move |&s| (m as f64 / 10.0, s)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(mean, sd)| {
            let d = pos_prime(&setup, &prior(mean, sd)?, n);
            let total = d.total();
            Ok(vec![
                sig10(mean),
                sig10(sd),
                sig10(d.type1 / total),
                sig10(d.irrelevant / total),
                sig10(d.relevant / total),
                sig10(total),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "fig3",
        &[
            "prior_mean",
            "prior_sd",
            "share_A",
            "share_B",
            "share_C",
            "pos_prime",
        ],
    );
    t.rows = rows;
    Ok(vec![t.finish()])
}

struct Panel {
    prior: TruncatedNormalPrior<f64>,
    setup: TestSetup<f64>,
    n: u64,
    /// Leading columns of the panel summary row.
    summary: Vec<String>,
    /// Power level whose exceedance probabilities are reported.
    threshold: f64,
}

/// Prior densities, power curves, histograms and a per-panel summary for a
/// list of designs.
fn distribution_tables(
    names: [&'static str; 3],
    summary_header: &'static [&'static str],
    panels: &[Panel],
) -> Result<Vec<CsvFile>> {
    let grid = theta_grid();
    let mut curves = Table::new(
        names[0],
        &["panel", "theta", "pdf_cond", "pdf_uncond", "power"],
    );
    let mut hist = Table::new(
        names[1],
        &["panel", "distribution", "bin_lo", "bin_hi", "mass"],
    );
    let mut summary = Table::new(names[2], summary_header);
    for (i, p) in panels.iter().enumerate() {
        let id = (i + 1).to_string();
        let cond = p.prior.condition_on(p.setup.mcid())?;
        for &t in &grid {
            curves.rows.push(vec![
                id.clone(),
                sig10(t),
                sig10(cond.pdf(t)),
                sig10(p.prior.pdf(t)),
                sig10(p.setup.prob_reject(p.n, t)),
            ]);
        }
        let rpow = PowerDistribution::random_power(p.setup, p.prior, p.n)?;
        let rpr = PowerDistribution::random_prob_reject(p.setup, p.prior, p.n)?;
        for (label, dist) in [("rpow", &rpow), ("rpr", &rpr)] {
            for bin in dist.histogram(HIST_BINS)? {
                hist.rows.push(vec![
                    id.clone(),
                    label.to_owned(),
                    sig10(bin.lo),
                    sig10(bin.hi),
                    sig10(bin.mass),
                ]);
            }
        }
        let mut row = vec![id];
        row.extend(p.summary.iter().cloned());
        row.push(p.n.to_string());
        row.push(sig10(rpow.survival(p.threshold)));
        row.push(sig10(rpr.survival(p.threshold)));
        summary.rows.push(row);
    }
    Ok(vec![curves.finish(), hist.finish(), summary.finish()])
}

/// Random power under expected-power designs for three priors.
fn fig4() -> Result<Vec<CsvFile>> {
    // relevance threshold at the null; see the README for the choice
    let setup = TestSetup::standardized(ALPHA, 0.0)?;
    let criterion = Criterion::expected_power(0.8)?;
    let panels = [(-0.25, 0.4), (0.3, 0.125), (0.5, 0.05)]
        .into_iter()
        .map(|(mean, sd)| {
            let p = prior(mean, sd)?;
            let n = solve_sample_size(&setup, &p, &criterion, 1_000_000)?.n;
            Ok(Panel {
                prior: p,
                setup,
                n,
                summary: vec![sig10(mean), sig10(sd), sig10(setup.mcid())],
                threshold: 0.8,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    distribution_tables(
        ["fig4_curves", "fig4_hist", "fig4_panels"],
        &[
            "panel",
            "prior_mean",
            "prior_sd",
            "mcid",
            "n",
            "rpow_exceeds_target",
            "rpr_exceeds_target",
        ],
        &panels,
    )
}

/// Random power under prior-quantile designs for a single prior.
fn fig5() -> Result<Vec<CsvFile>> {
    let setup = TestSetup::standardized(ALPHA, 0.1)?;
    let p = prior(0.3, 0.2)?;
    let panels = [(0.5, 0.7), (0.5, 0.8), (0.9, 0.7), (0.9, 0.8)]
        .into_iter()
        .map(|(gamma, target)| {
            let r = solve_sample_size(
                &setup,
                &p,
                &Criterion::prior_quantile(gamma, target)?,
                1_000_000,
            )?;
            Ok(Panel {
                prior: p,
                setup,
                n: r.n,
                summary: vec![
                    sig10(gamma),
                    sig10(target),
                    sig10(r.theta_alt.expect("quantile rule resolves an alternative")),
                ],
                threshold: target,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    distribution_tables(
        ["fig5_curves", "fig5_hist", "fig5_panels"],
        &[
            "panel",
            "gamma",
            "target",
            "theta_alt",
            "n",
            "rpow_exceeds_target",
            "rpr_exceeds_target",
        ],
        &panels,
    )
}

fn clinical() -> Result<(TestSetup<f64>, TruncatedNormalPrior<f64>)> {
    Ok((TestSetup::standardized(ALPHA, 0.05)?, prior(0.2, 0.2)?))
}

/// The worked clinical example: priors, power curves and random power CDFs
/// of four designs.
fn fig6() -> Result<Vec<CsvFile>> {
    let (setup, p) = clinical()?;
    let cond = p.condition_on(setup.mcid())?;
    let grid = theta_grid();

    let mut prior_t = Table::new("fig6_prior", &["theta", "pdf", "pdf_cond"]);
    for &t in &grid {
        prior_t
            .rows
            .push(vec![sig10(t), sig10(p.pdf(t)), sig10(cond.pdf(t))]);
    }

    let target = 0.8;
    let designs: [(&str, Criterion<f64>); 4] = [
        ("EP", Criterion::expected_power(target)?),
        ("MCID", Criterion::point_alternative(setup.mcid(), target)?),
        ("quantile_0.5", Criterion::prior_quantile(0.5, target)?),
        ("quantile_0.9", Criterion::prior_quantile(0.9, target)?),
    ];
    let mut power_t = Table::new("fig6_power", &["method", "theta", "power"]);
    let mut cdf_t = Table::new("fig6_cdf", &["method", "x", "cdf"]);
    for (label, c) in &designs {
        let n = solve_sample_size(&setup, &p, c, 1_000_000)?.n;
        for &t in &grid {
            power_t.rows.push(vec![
                label.to_string(),
                sig10(t),
                sig10(setup.prob_reject(n, t)),
            ]);
        }
        let dist = PowerDistribution::random_power(setup, p, n)?;
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            cdf_t
                .rows
                .push(vec![label.to_string(), sig10(x), sig10(dist.cdf(x))]);
        }
    }
    Ok(vec![prior_t.finish(), power_t.finish(), cdf_t.finish()])
}

/// Implied reward against the expected power target.
fn fig7() -> Result<Vec<CsvFile>> {
    let (setup, p) = clinical()?;
    let rows = (50..=95)
        .collect::<Vec<u32>>()
        .par_iter()
        .map(|&k| {
            let target = k as f64 / 100.0;
            let r = implied_reward(&setup, &p, target, 1_000_000)?;
            Ok(vec![sig10(target), sig10(r.lambda)])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("fig7", &["ep_target", "lambda"]);
    t.rows = rows;
    Ok(vec![t.finish()])
}

pub fn generate(id: FigureId) -> Result<Vec<CsvFile>> {
    match id {
        FigureId::Fig2 => fig2(),
        FigureId::Fig3 => fig3(),
        FigureId::Fig4 => fig4(),
        FigureId::Fig5 => fig5(),
        FigureId::Fig6 => fig6(),
        FigureId::Fig7 => fig7(),
        FigureId::All => {
            let mut files = Vec::new();
            for f in [fig2, fig3, fig4, fig5, fig6, fig7] {
                files.extend(f()?);
            }
            Ok(files)
        }
    }
}

pub fn write_files(files: &[CsvFile], dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for f in files {
        std::fs::write(dir.join(&f.name), &f.content)?;
    }
    Ok(())
}
