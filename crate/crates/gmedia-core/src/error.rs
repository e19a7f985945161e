//! Crate-wide error type.

use alloc::string::String;
use alloc::vec::Vec;

use crate::action::Violation;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two grids (or a grid and a mask/tensor) do not share dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A scalar argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An action parameter vector failed validation; every violated
    /// invariant is listed.
    #[error("invalid action: {}", format_violations(.0))]
    InvalidAction(Vec<Violation>),

    /// Rejection sampling exhausted its budget without a valid draw.
    #[error("sampling error: no valid sample after {attempts} rejections")]
    Sampling { attempts: usize },

    /// A dataset or weight blob is structurally unusable.
    #[error("data error: {0}")]
    Data(String),
}

fn format_violations(violations: &[Violation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, v) in violations.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{v}");
    }
    out
}
