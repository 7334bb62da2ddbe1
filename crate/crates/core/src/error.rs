use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor or operation received an argument outside its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The conditional prior given a relevant effect carries no mass.
    #[error("conditional prior is degenerate: Pr[theta >= {cut}] = {mass:e}")]
    DegenerateConditional { cut: f64, mass: f64 },

    /// The criterion cannot be met by any sample size.
    #[error("criterion infeasible: target {target} is not below the attainable bound {bound}")]
    Infeasible { target: f64, bound: f64 },

    /// The criterion is still unmet at the largest admissible sample size.
    #[error("criterion unmet at n_max = {n_max} (achieved {achieved})")]
    ExceedsNMax { n_max: u64, achieved: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
