//! JSON request and response types shared by the command line and HTTP
//! front ends, with the handlers that map a scenario to a response.
//!
//! Everything here is `f64`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::criteria::{expected_power, pos, pos_prime, PosDecomposition};
use crate::design::{PowerDistribution, TestSetup};
use crate::error::Error;
use crate::gauss::TruncatedNormalPrior;
use crate::solver::{
    implied_reward as solve_implied_reward, solve_sample_size, solve_utility, Criterion, Rule,
    UtilityMethod, UtilityParams, DEFAULT_N_MAX,
};

/// Largest grid a single request may ask for.
pub const MAX_GRID_POINTS: usize = 10_000;
/// Largest `n_max` a single request may ask for.
pub const MAX_N_MAX: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupSpec {
    pub alpha: f64,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    pub mcid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    PointAlternative,
    PriorQuantile,
    ExpectedPower,
    ProbabilityOfSuccess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    #[serde(rename = "type")]
    pub kind: CriterionKind,
    pub target: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_alt: Option<f64>,
}

/// Evaluation grid; omitted fields take the endpoint's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl GridSpec {
    pub fn new(from: f64, to: f64, points: usize) -> Self {
        GridSpec {
            from: Some(from),
            to: Some(to),
            points: Some(points),
        }
    }
}

/// `points` equally spaced values from `from` to `to`, both included.
pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![from];
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                to
            } else {
                from + (to - from) * (i as f64 / last)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiScenario {
    pub prior: PriorSpec,
    pub setup: SetupSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditional: Option<bool>,
}

/// Error body returned for every rejected request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn bad_request(code: &str, message: impl Into<String>, field_path: Option<String>) -> Self {
        Self {
            status: 400,
            code: code.to_owned(),
            message: message.into(),
            field_path,
            detail: None,
        }
    }

    fn missing(field: &str) -> Self {
        Self::bad_request(
            "missing_field",
            format!("`{field}` is required for this operation"),
            Some(field.to_owned()),
        )
    }

    fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::bad_request("invalid_parameter", message, Some(field.to_owned()))
    }

    /// Maps a library error; `section` prefixes the field path of parameter
    /// errors.
    fn from_core(err: Error, section: Option<&str>) -> Self {
        let message = err.to_string();
        let unprocessable = |code: &str, detail: Value| Self {
            status: 422,
            code: code.to_owned(),
            message: message.clone(),
            field_path: None,
            detail: Some(detail),
        };
        match err {
            Error::InvalidParameter { name, .. } => {
                let path = match section {
                    Some(s) => format!("{s}.{name}"),
                    None => name.to_owned(),
                };
                Self::bad_request("invalid_parameter", message, Some(path))
            }
            Error::DegenerateConditional { cut, mass } => unprocessable(
                "degenerate_conditional",
                serde_json::json!({ "mcid": cut, "mass_relevant": mass }),
            ),
            Error::Infeasible { target, bound } => unprocessable(
                "infeasible",
                serde_json::json!({ "target": target, "bound": bound }),
            ),
            Error::ExceedsNMax { n_max, achieved } => unprocessable(
                "exceeds_n_max",
                serde_json::json!({ "n_max": n_max, "achieved": achieved }),
            ),
        }
    }

    /// Process exit status used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self.code.as_str() {
            "infeasible" => 3,
            "exceeds_n_max" => 4,
            _ => 2,
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.field_path {
            Some(p) => write!(f, "{} at `{}`: {}", self.code, p, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl std::error::Error for ApiError {}

fn schema_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> ApiError {
    let path = err.path().to_string();
    let field_path = (path != ".").then_some(path);
    ApiError::bad_request("invalid_schema", err.inner().to_string(), field_path)
}

/// Parses a request body, reporting the JSON path of the first offending field.
pub fn parse_scenario(body: &str) -> Result<ApiScenario, ApiError> {
    let mut de = serde_json::Deserializer::from_str(body);
    let scenario = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
    de.end()
        .map_err(|e| ApiError::bad_request("invalid_schema", e.to_string(), None))?;
    Ok(scenario)
}

pub fn scenario_from_value(value: Value) -> Result<ApiScenario, ApiError> {
    serde_path_to_error::deserialize(value).map_err(schema_error)
}

/// Validated library objects built from a scenario.
struct Model {
    setup: TestSetup<f64>,
    prior: TruncatedNormalPrior<f64>,
    n_max: u64,
}

fn model(s: &ApiScenario) -> Result<Model, ApiError> {
    let p = &s.prior;
    let prior = TruncatedNormalPrior::new(p.mean, p.sd, p.lo, p.hi)
        .map_err(|e| ApiError::from_core(e, Some("prior")))?;
    let t = &s.setup;
    for (name, v) in [
        ("alpha", t.alpha),
        ("theta0", t.theta0),
        ("sigma", t.sigma),
        ("mcid", t.mcid),
    ] {
        if !v.is_finite() {
            return Err(ApiError::invalid(
                &format!("setup.{name}"),
                "must be finite",
            ));
        }
    }
    let setup = TestSetup::new(t.theta0, t.sigma, t.alpha, t.mcid)
        .map_err(|e| ApiError::from_core(e, Some("setup")))?;
    let n_max = s.n_max.unwrap_or(DEFAULT_N_MAX);
    if n_max == 0 || n_max > MAX_N_MAX {
        return Err(ApiError::invalid(
            "n_max",
            format!("need 1 <= n_max <= {MAX_N_MAX}, got {n_max}"),
        ));
    }
    Ok(Model {
        setup,
        prior,
        n_max,
    })
}

fn require_n(s: &ApiScenario) -> Result<u64, ApiError> {
    match s.n {
        None => Err(ApiError::missing("n")),
        Some(0) => Err(ApiError::invalid("n", "must be at least 1")),
        Some(n) => Ok(n),
    }
}

fn grid_or(
    s: &ApiScenario,
    default: (f64, f64, usize),
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>, ApiError> {
    let g = s.grid.clone().unwrap_or_default();
    let from = g.from.unwrap_or(default.0);
    let to = g.to.unwrap_or(default.1);
    let points = g.points.unwrap_or(default.2);
    if points == 0 || points > MAX_GRID_POINTS {
        return Err(ApiError::invalid(
            "grid.points",
            format!("need 1 <= points <= {MAX_GRID_POINTS}, got {points}"),
        ));
    }
    if !(from >= lo && from <= hi) {
        return Err(ApiError::invalid(
            "grid.from",
            format!("must lie in [{lo}, {hi}]"),
        ));
    }
    if !(to >= from && to <= hi) {
        return Err(ApiError::invalid(
            "grid.to",
            format!("must lie in [from, {hi}]"),
        ));
    }
    Ok(linspace(from, to, points))
}

pub fn criterion_from_spec(c: &CriterionSpec) -> Result<Criterion<f64>, ApiError> {
    let rule = match c.kind {
        CriterionKind::PointAlternative => Rule::PointAlternative {
            theta_alt: c
                .theta_alt
                .ok_or_else(|| ApiError::missing("criterion.theta_alt"))?,
        },
        CriterionKind::PriorQuantile => Rule::PriorQuantile {
            gamma: c
                .gamma
                .ok_or_else(|| ApiError::missing("criterion.gamma"))?,
        },
        CriterionKind::ExpectedPower => Rule::ExpectedPower,
        CriterionKind::ProbabilityOfSuccess => Rule::ProbabilityOfSuccess,
    };
    Criterion::new(rule, c.target).map_err(|e| ApiError::from_core(e, Some("criterion")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub n: u64,
    pub ep: f64,
    pub pos: f64,
    pub pos_prime: f64,
    pub decomposition: PosDecomposition<f64>,
    pub mass_relevant: f64,
    pub power_at_mcid: f64,
}

pub fn evaluate(s: &ApiScenario) -> Result<EvaluateResponse, ApiError> {
    let m = model(s)?;
    let n = require_n(s)?;
    let ep = expected_power(&m.setup, &m.prior, n).map_err(|e| ApiError::from_core(e, None))?;
    let decomposition = pos_prime(&m.setup, &m.prior, n);
    Ok(EvaluateResponse {
        n,
        ep,
        pos: pos(&m.setup, &m.prior, n),
        pos_prime: decomposition.total(),
        decomposition,
        mass_relevant: m.prior.mass_relevant(m.setup.mcid()),
        power_at_mcid: m.setup.prob_reject(n, m.setup.mcid()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeResponse {
    pub n: u64,
    pub achieved: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_below: Option<f64>,
    pub criterion: CriterionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_alt: Option<f64>,
    pub evaluations: u32,
}

pub fn sample_size(s: &ApiScenario) -> Result<SampleSizeResponse, ApiError> {
    let m = model(s)?;
    let spec = s
        .criterion
        .as_ref()
        .ok_or_else(|| ApiError::missing("criterion"))?;
    let criterion = criterion_from_spec(spec)?;
    let r = solve_sample_size(&m.setup, &m.prior, &criterion, m.n_max)
        .map_err(|e| ApiError::from_core(e, Some("criterion")))?;
    Ok(SampleSizeResponse {
        n: r.n,
        achieved: r.achieved,
        achieved_below: r.achieved_below,
        criterion: spec.clone(),
        theta_alt: r.theta_alt,
        evaluations: r.evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDistributionResponse {
    pub n: u64,
    pub conditional: bool,
    pub x: Vec<f64>,
    pub survival: Vec<f64>,
    pub quantiles: Quantiles,
}

/// Survival curve and quantiles of random power (or, with
/// `conditional: false`, of the unconditional random probability to reject).
pub fn power_distribution(s: &ApiScenario) -> Result<PowerDistributionResponse, ApiError> {
    let m = model(s)?;
    let n = require_n(s)?;
    let conditional = s.conditional.unwrap_or(true);
    let x = grid_or(s, (0.0, 1.0, 101), 0.0, 1.0)?;
    let dist = PowerDistribution::new(m.setup, m.prior, n, conditional)
        .map_err(|e| ApiError::from_core(e, None))?;
    let survival = x.iter().map(|&v| dist.survival(v)).collect();
    let q = |p: f64| dist.quantile(p).map_err(|e| ApiError::from_core(e, None));
    Ok(PowerDistributionResponse {
        n,
        conditional,
        quantiles: Quantiles {
            p10: q(0.1)?,
            p25: q(0.25)?,
            p50: q(0.5)?,
            p75: q(0.75)?,
            p90: q(0.9)?,
        },
        x,
        survival,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityResponse {
    pub lambda: f64,
    pub n_opt: u64,
    pub utility: f64,
    pub ep_at_opt: Option<f64>,
    pub pos_at_opt: f64,
    pub method: UtilityMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn utility(s: &ApiScenario) -> Result<UtilityResponse, ApiError> {
    let m = model(s)?;
    let lambda = s.lambda.ok_or_else(|| ApiError::missing("lambda"))?;
    let params = UtilityParams::new(lambda).map_err(|e| ApiError::from_core(e, None))?;
    let opt = solve_utility(&m.setup, &m.prior, params, m.n_max)
        .map_err(|e| ApiError::from_core(e, None))?;
    let warning = (lambda == 0.0).then(|| {
        "lambda = 0 makes every additional patient a pure cost; the optimum is the smallest trial"
            .to_owned()
    });
    Ok(UtilityResponse {
        lambda,
        n_opt: opt.n_opt,
        utility: opt.utility,
        ep_at_opt: opt.ep_at_opt,
        pos_at_opt: opt.pos_at_opt,
        method: opt.method,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedRewardResponse {
    pub ep_target: Vec<f64>,
    pub lambda: Vec<f64>,
    pub n_continuous: Vec<f64>,
}

/// Implied reward over a grid of expected power targets (default 0.50 to
/// 0.95 in steps of 0.01).
pub fn implied_reward(s: &ApiScenario) -> Result<ImpliedRewardResponse, ApiError> {
    let m = model(s)?;
    let targets = grid_or(s, (0.5, 0.95, 46), 0.0, 1.0)?;
    if let Some(bad) = targets.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(ApiError::invalid(
            "grid",
            format!("expected power targets must lie strictly inside (0, 1), got {bad}"),
        ));
    }
    let mut lambda = Vec::with_capacity(targets.len());
    let mut n_continuous = Vec::with_capacity(targets.len());
    for &t in &targets {
        let r = solve_implied_reward(&m.setup, &m.prior, t, m.n_max)
            .map_err(|e| ApiError::from_core(e, None))?;
        lambda.push(r.lambda);
        n_continuous.push(r.n_continuous);
    }
    Ok(ImpliedRewardResponse {
        ep_target: targets,
        lambda,
        n_continuous,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLINICAL: &str = r#"{
        "prior": {"mean": 0.2, "sd": 0.2, "lo": -0.3, "hi": 0.7},
        "setup": {"alpha": 0.025, "mcid": 0.05}
    }"#;

    fn clinical() -> ApiScenario {
        parse_scenario(CLINICAL).unwrap()
    }

    #[test]
    fn defaults_are_filled() {
        let s = clinical();
        assert_eq!((s.setup.theta0, s.setup.sigma), (0.0, 1.0));
        assert_eq!(s.n, None);
    }

    #[test]
    fn schema_errors_carry_paths() {
        let e = parse_scenario(r#"{"prior": {"mean": 0.2, "sd": "x", "lo": 0, "hi": 1}, "setup": {"alpha": 0.025, "mcid": 0}}"#)
            .unwrap_err();
        assert_eq!(e.status, 400);
        assert_eq!(e.field_path.as_deref(), Some("prior.sd"));
        let e = parse_scenario(r#"{"prior": {"mean": 0.2, "sd": 1, "lo": 0, "hi": 1, "mode": 3}, "setup": {"alpha": 0.025, "mcid": 0}}"#)
            .unwrap_err();
        assert!(e.message.contains("mode"));
        assert_eq!(e.field_path.as_deref(), Some("prior.mode"));
        assert!(parse_scenario("{").is_err());
    }

    #[test]
    fn range_errors_carry_paths() {
        let mut s = clinical();
        s.prior.sd = -1.0;
        s.n = Some(10);
        let e = evaluate(&s).unwrap_err();
        assert_eq!(e.field_path.as_deref(), Some("prior.sd"));
        let mut s = clinical();
        s.setup.alpha = 0.7;
        s.n = Some(10);
        assert_eq!(
            evaluate(&s).unwrap_err().field_path.as_deref(),
            Some("setup.alpha")
        );
        let mut s = clinical();
        assert_eq!(evaluate(&s).unwrap_err().code, "missing_field");
        s.n = Some(10);
        s.grid = Some(GridSpec::new(0.0, 1.0, 20_000));
        assert_eq!(
            power_distribution(&s).unwrap_err().field_path.as_deref(),
            Some("grid.points")
        );
    }

    #[test]
    fn evaluate_clinical() {
        let mut s = clinical();
        s.n = Some(218);
        let r = evaluate(&s).unwrap();
        assert!((r.ep - 0.8002).abs() < 1e-4);
        assert!((r.pos_prime - r.decomposition.total()).abs() == 0.0);
    }

    #[test]
    fn sample_size_endpoints() {
        let mut s = clinical();
        s.criterion = Some(CriterionSpec {
            kind: CriterionKind::PriorQuantile,
            target: 0.8,
            gamma: Some(0.9),
            theta_alt: None,
        });
        assert_eq!(sample_size(&s).unwrap().n, 834);
        s.criterion = Some(CriterionSpec {
            kind: CriterionKind::ProbabilityOfSuccess,
            target: 0.8,
            gamma: None,
            theta_alt: None,
        });
        let e = sample_size(&s).unwrap_err();
        assert_eq!(
            (e.status, e.code.as_str(), e.exit_code()),
            (422, "infeasible", 3)
        );
        let body = serde_json::to_value(&e).unwrap();
        assert!(body.get("status").is_none());
        assert!(body["detail"]["bound"].as_f64().unwrap() < 0.8);
    }

    #[test]
    fn utility_warning_at_zero() {
        let mut s = clinical();
        s.lambda = Some(0.0);
        let r = utility(&s).unwrap();
        assert_eq!(r.n_opt, 1);
        assert!(r.warning.is_some());
        s.lambda = Some(3333.0);
        let r = utility(&s).unwrap();
        assert_eq!(r.n_opt, 329);
        assert!(r.warning.is_none());
    }

    #[test]
    fn power_distribution_shape() {
        let mut s = clinical();
        s.n = Some(218);
        let r = power_distribution(&s).unwrap();
        assert_eq!(r.x.len(), 101);
        assert_eq!(r.survival[0], 1.0);
        assert!(r.survival.windows(2).all(|w| w[1] <= w[0]));
        let q = &r.quantiles;
        assert!(q.p10 <= q.p25 && q.p25 <= q.p50 && q.p50 <= q.p75 && q.p75 <= q.p90);
    }

    #[test]
    fn grid_values_hit_both_ends() {
        let v = linspace(0.5, 0.95, 46);
        assert_eq!((v[0], v[45]), (0.5, 0.95));
        assert!((v[30] - 0.8).abs() < 1e-15);
    }
}
