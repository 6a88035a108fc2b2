use std::path::Path;

use conformable_core::{AlphaOrder, Error, Expr, InitialCondition, SequentialFde, SolveOptions};
use serde::Deserialize;

use crate::CliError;

/// On-disk problem description. `p[i]` multiplies `T^i y`, so `p[0]` is the
/// constant term.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub alpha: f64,
    pub order: usize,
    pub p: Vec<String>,
    pub q: String,
    pub domain: [f64; 2],
    pub t0: f64,
    pub init: Vec<f64>,
    pub span: [f64; 2],
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub fde: SequentialFde,
    pub ic: InitialCondition,
    pub span: (f64, f64),
    pub options: SolveOptions,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Input(format!("{}: {}", field.into(), message.into()))
}

fn expression(field: String, source: &str) -> Result<Expr, CliError> {
    Expr::parse(source).map_err(|e| invalid(field, e.to_string()))
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<ProblemFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self, defaults: &SolveOptions) -> Result<Problem, CliError> {
        let alpha = AlphaOrder::new(self.alpha).map_err(|e| invalid("alpha", e.to_string()))?;
        if self.order == 0 {
            return Err(invalid("order", "must be at least 1"));
        }
        if self.p.len() != self.order {
            return Err(invalid(
                "p",
                format!(
                    "expected {} coefficients (order), got {}",
                    self.order,
                    self.p.len()
                ),
            ));
        }
        let p = self
            .p
            .iter()
            .enumerate()
            .map(|(i, s)| expression(format!("p[{i}]"), s))
            .collect::<Result<Vec<_>, _>>()?;
        let q = expression("q".into(), &self.q)?;
        let [a, b] = self.domain;
        let fde = SequentialFde::new(alpha, p, q, (a, b)).map_err(|e| match e {
            Error::Invalid { field, message } => invalid(field, message),
            other => CliError::Input(other.to_string()),
        })?;
        if self.init.len() != self.order {
            return Err(invalid(
                "init",
                format!(
                    "expected {} values (order), got {}",
                    self.order,
                    self.init.len()
                ),
            ));
        }
        if let Some(i) = self.init.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("init[{i}]"), "must be finite"));
        }
        let ic = InitialCondition::new(self.t0, self.init.clone());
        fde.check_initial_condition(&ic).map_err(|e| match e {
            Error::Invalid { field, message } => invalid(field, message),
            other => CliError::Input(other.to_string()),
        })?;
        let [lo, hi] = self.span;
        if !(lo <= self.t0 && self.t0 <= hi && lo < hi) {
            return Err(invalid(
                "span",
                format!(
                    "[{lo}, {hi}] must be increasing and contain t0 = {}",
                    self.t0
                ),
            ));
        }
        if !(fde.contains(lo) && fde.contains(hi)) {
            return Err(invalid(
                "span",
                format!("[{lo}, {hi}] must lie inside the open domain ({a}, {b})"),
            ));
        }
        let mut options = *defaults;
        if let Some(tol) = self.tolerances {
            if !(tol.rel > 0.0 && tol.rel.is_finite()) {
                return Err(invalid("tolerances.rel", "must be positive"));
            }
            if !(tol.abs > 0.0 && tol.abs.is_finite()) {
                return Err(invalid("tolerances.abs", "must be positive"));
            }
            options.rtol = tol.rel;
            options.atol = tol.abs;
        }
        Ok(Problem {
            fde,
            ic,
            span: (lo, hi),
            options,
        })
    }
}
