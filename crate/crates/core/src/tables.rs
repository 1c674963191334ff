//! Named closed forms for `f` and `g` tables, and the compact
//! `name:param[:param]` grammar used on the command line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ClosedForm {
    /// `1 - exp(-epsilon t)`.
    Exp { epsilon: f64 },
    /// `max(0, 1 - epsilon t)` below `cutoff`, 0 from `cutoff` on.
    TruncatedLinear { epsilon: f64, cutoff: u64 },
    /// `slope * t`.
    Linear { slope: f64 },
    /// `value` everywhere.
    Const { value: f64 },
    /// 0 everywhere.
    Zero,
}

impl ClosedForm {
    pub fn eval(&self, t: u64) -> f64 {
        let x = t as f64;
        match self {
            ClosedForm::Exp { epsilon } => -(-epsilon * x).exp_m1(),
            ClosedForm::TruncatedLinear { epsilon, cutoff } => {
                if t < *cutoff {
                    (1.0 - epsilon * x).max(0.0)
                } else {
                    0.0
                }
            }
            ClosedForm::Linear { slope } => slope * x,
            ClosedForm::Const { value } => *value,
            ClosedForm::Zero => 0.0,
        }
    }

    /// Values at `0..len`.
    pub fn tabulate(&self, len: usize) -> Vec<f64> {
        (0..len as u64).map(|t| self.eval(t)).collect()
    }

    /// Parses `exp:0.01`, `truncated-linear:0.01:100`, `linear:0.3`,
    /// `const:0.7` or `zero`.
    pub fn parse(spec: &str) -> Result<ClosedForm> {
        let mut parts = spec.split(':');
        let name = parts.next().unwrap_or_default();
        let params: Vec<&str> = parts.collect();
        let real = |i: usize| -> Result<f64> {
            let raw = params
                .get(i)
                .ok_or_else(|| Error::InvalidParameter(format!("`{spec}`: missing parameter {}", i + 1)))?;
            raw.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("`{spec}`: `{raw}` is not a number")))
        };
        let arity = |k: usize| -> Result<()> {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("`{spec}`: `{name}` takes {k} parameter(s)")))
            }
        };
        let form = match name {
            "exp" => {
                arity(1)?;
                ClosedForm::Exp { epsilon: real(0)? }
            }
            "truncated-linear" => {
                arity(2)?;
                let cutoff = params[1].parse::<u64>().map_err(|_| {
                    Error::InvalidParameter(format!("`{spec}`: cutoff must be a non-negative integer"))
                })?;
                ClosedForm::TruncatedLinear { epsilon: real(0)?, cutoff }
            }
            "linear" => {
                arity(1)?;
                ClosedForm::Linear { slope: real(0)? }
            }
            "const" => {
                arity(1)?;
                ClosedForm::Const { value: real(0)? }
            }
            "zero" => {
                arity(0)?;
                ClosedForm::Zero
            }
            _ => return Err(Error::InvalidParameter(format!("unknown closed form `{name}`"))),
        };
        Ok(form)
    }
}

/// A table given either explicitly or by a closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableSource {
    Values(Vec<f64>),
    Closed(ClosedForm),
}

impl TableSource {
    /// Accepts the compact grammar, a JSON closed-form object, or a JSON array.
    pub fn parse(text: &str) -> Result<TableSource> {
        let t = text.trim();
        if t.starts_with('[') || t.starts_with('{') {
            serde_json::from_str(t).map_err(|e| Error::InvalidParameter(format!("malformed table JSON: {e}")))
        } else {
            ClosedForm::parse(t).map(TableSource::Closed)
        }
    }

    /// Table of length `len`; explicit values must already have that length.
    pub fn materialize(&self, len: usize) -> Result<Vec<f64>> {
        match self {
            TableSource::Values(v) if v.len() == len => Ok(v.clone()),
            TableSource::Values(v) => {
                Err(Error::InvalidParameter(format!("table has {} entries, expected {len}", v.len())))
            }
            TableSource::Closed(c) => Ok(c.tabulate(len)),
        }
    }

    pub fn explicit_len(&self) -> Option<usize> {
        match self {
            TableSource::Values(v) => Some(v.len()),
            TableSource::Closed(_) => None,
        }
    }
}
