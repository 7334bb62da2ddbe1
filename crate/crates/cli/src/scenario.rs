//! Builds a request scenario from an optional JSON file and command line
//! flags, with flags taking precedence.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use hybridpower::api::{scenario_from_value, ApiError, ApiScenario};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    #[value(alias = "point")]
    PointAlternative,
    #[value(alias = "quantile")]
    PriorQuantile,
    #[value(alias = "ep")]
    ExpectedPower,
    #[value(alias = "pos")]
    ProbabilityOfSuccess,
}

impl CriterionArg {
    fn wire_name(self) -> &'static str {
        match self {
            CriterionArg::PointAlternative => "point_alternative",
            CriterionArg::PriorQuantile => "prior_quantile",
            CriterionArg::ExpectedPower => "expected_power",
            CriterionArg::ProbabilityOfSuccess => "probability_of_success",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// JSON scenario file in the service request format.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Prior mean before truncation.
    #[arg(long, allow_negative_numbers = true)]
    pub prior_mean: Option<f64>,
    /// Prior standard deviation before truncation.
    #[arg(long)]
    pub prior_sd: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub prior_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub prior_hi: Option<f64>,
    /// One-sided significance level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Null hypothesis boundary (default 0).
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: Option<f64>,
    /// Per-observation standard deviation (default 1).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Minimal clinically important difference.
    #[arg(long, allow_negative_numbers = true)]
    pub mcid: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    /// Power (or probability of success) the design must reach.
    #[arg(long)]
    pub target: Option<f64>,
    /// Probability of exceeding the target, for the prior-quantile rule.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_alt: Option<f64>,
    /// Reward for a correct rejection, in per-patient costs.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub grid_from: Option<f64>,
    #[arg(long)]
    pub grid_to: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Use the unconditional prior instead of conditioning on a relevant effect.
    #[arg(long)]
    pub unconditional: bool,
}

#[derive(Debug)]
pub enum ScenarioError {
    Io(std::io::Error, PathBuf),
    Invalid(ApiError),
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioError::Io(e, p) => write!(f, "cannot read {}: {e}", p.display()),
            ScenarioError::Invalid(e) => e.fmt(f),
        }
    }
}

fn set(root: &mut Map<String, Value>, path: &[&str], value: Value) {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = root;
    for key in parents {
        let entry = node
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if !entry.is_object() {
            *entry = Value::Object(Map::new());
        }
        node = entry.as_object_mut().expect("object just ensured");
    }
    node.insert(last.to_string(), value);
}

impl ScenarioArgs {
    /// The JSON document after applying flags on top of the file contents.
    pub fn merged(&self) -> Result<Value, ScenarioError> {
        let mut root = match &self.scenario {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ScenarioError::Io(e, path.clone()))?;
                let value: Value = serde_json::from_str(&text).map_err(|e| {
                    ScenarioError::Invalid(ApiError::bad_request(
                        "invalid_schema",
                        e.to_string(),
                        None,
                    ))
                })?;
                match value {
                    Value::Object(map) => map,
                    _ => {
                        return Err(ScenarioError::Invalid(ApiError::bad_request(
                            "invalid_schema",
                            "scenario file must contain a JSON object",
                            None,
                        )))
                    }
                }
            }
            None => Map::new(),
        };
        let floats: [(&[&str], Option<f64>); 14] = [
            (&["prior", "mean"], self.prior_mean),
            (&["prior", "sd"], self.prior_sd),
            (&["prior", "lo"], self.prior_lo),
            (&["prior", "hi"], self.prior_hi),
            (&["setup", "alpha"], self.alpha),
            (&["setup", "theta0"], self.theta0),
            (&["setup", "sigma"], self.sigma),
            (&["setup", "mcid"], self.mcid),
            (&["criterion", "target"], self.target),
            (&["criterion", "gamma"], self.gamma),
            (&["criterion", "theta_alt"], self.theta_alt),
            (&["lambda"], self.lambda),
            (&["grid", "from"], self.grid_from),
            (&["grid", "to"], self.grid_to),
        ];
        for (path, v) in floats {
            if let Some(v) = v {
                set(&mut root, path, Value::from(v));
            }
        }
        if let Some(c) = self.criterion {
            set(
                &mut root,
                &["criterion", "type"],
                Value::from(c.wire_name()),
            );
        }
        if let Some(n) = self.n {
            set(&mut root, &["n"], Value::from(n));
        }
        if let Some(n) = self.n_max {
            set(&mut root, &["n_max"], Value::from(n));
        }
        if let Some(p) = self.grid_points {
            set(&mut root, &["grid", "points"], Value::from(p));
        }
        if self.unconditional {
            set(&mut root, &["conditional"], Value::from(false));
        }
        Ok(Value::Object(root))
    }

    pub fn build(&self) -> Result<ApiScenario, ScenarioError> {
        scenario_from_value(self.merged()?).map_err(ScenarioError::Invalid)
    }
}
