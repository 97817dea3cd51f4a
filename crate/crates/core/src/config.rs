//! Serde descriptions of convex functions, entropy pairs, and initial data,
//! shared by TOML scenario files and JSON reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convexfn::{ConvexFun, QuadPiece};
use crate::entropypair::{EntropyPair, PairError};
use crate::solvers::{InitialData, SolverError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    BadFunction(String),
    #[error("unknown named function `{0}`")]
    UnknownName(String),
    #[error("named function `{name}` requires parameter `{param}`")]
    MissingParameter { name: String, param: &'static str },
    #[error("{0}")]
    BadPair(#[from] PairError),
    #[error("{0}")]
    BadInitial(#[from] SolverError),
}

/// Function spec as it appears in config files: explicit quadratic pieces or
/// a named function with parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunSpec {
    QuadraticPieces {
        breakpoints: Vec<f64>,
        /// `[a, c, d]` per piece, meaning `a u^2 + c u + d`.
        pieces: Vec<[f64; 3]>,
        /// Strictness claim; inferred (`all a > 0`) when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        strict: Option<bool>,
    },
    Named {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_tilde: Option<f64>,
    },
}

impl FunSpec {
    pub fn named(name: &str) -> Self {
        FunSpec::Named { name: name.into(), alpha: None, alpha_tilde: None }
    }

    pub fn build(&self) -> Result<ConvexFun, ConfigError> {
        match self {
            FunSpec::QuadraticPieces { breakpoints, pieces, strict } => {
                let quads: Vec<QuadPiece> =
                    pieces.iter().map(|p| QuadPiece { a: p[0], c: p[1], d: p[2] }).collect();
                let strict = strict.unwrap_or_else(|| quads.iter().all(|p| p.a > 0.0));
                ConvexFun::piecewise_quadratic(breakpoints.clone(), quads, strict)
                    .map_err(|e| ConfigError::BadFunction(e.to_string()))
            }
            FunSpec::Named { name, alpha, alpha_tilde } => {
                let need = |param: &'static str| ConfigError::MissingParameter {
                    name: name.clone(),
                    param,
                };
                match name.as_str() {
                    "burgers" | "square" => Ok(ConvexFun::burgers()),
                    "abs" => Ok(ConvexFun::absolute()),
                    "plateau" => Ok(ConvexFun::plateau()),
                    "quadratic" => ConvexFun::quadratic(alpha.ok_or_else(|| need("alpha"))?)
                        .map_err(|e| ConfigError::BadFunction(e.to_string())),
                    "power" => ConvexFun::power(alpha.ok_or_else(|| need("alpha"))?)
                        .map_err(|e| ConfigError::BadFunction(e.to_string())),
                    "power_sublinear" => {
                        ConvexFun::power_sublinear(alpha_tilde.ok_or_else(|| need("alpha_tilde"))?)
                            .map_err(|e| ConfigError::BadFunction(e.to_string()))
                    }
                    "log_entropy" => Ok(ConvexFun::log_entropy()),
                    "exp_flux" => Ok(ConvexFun::exp_flux()),
                    other => Err(ConfigError::UnknownName(other.to_string())),
                }
            }
        }
    }

    /// Round-trippable description for exact functions; analytic functions
    /// are described by their label (good enough for repro records).
    pub fn describe(fun: &ConvexFun) -> Option<FunSpec> {
        match fun.exact() {
            Some(pw) => Some(FunSpec::QuadraticPieces {
                breakpoints: pw.breakpoints().to_vec(),
                pieces: pw.pieces().iter().map(|p| [p.a, p.c, p.d]).collect(),
                strict: Some(fun.strict_flag()),
            }),
            None => Some(FunSpec::Named {
                name: format!("{fun:?}"),
                alpha: None,
                alpha_tilde: None,
            }),
        }
    }
}

/// `{flux, entropy}` pair spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PairSpec {
    pub flux: FunSpec,
    pub entropy: FunSpec,
}

impl PairSpec {
    pub fn build(&self) -> Result<EntropyPair, ConfigError> {
        Ok(EntropyPair::new(self.flux.build()?, self.entropy.build()?)?)
    }
}

/// Initial-data spec. `window` is supplied separately by the solver config.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Riemann {
        left: f64,
        right: f64,
        #[serde(default)]
        x0: f64,
    },
    PiecewiseConstant {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// `u0(x) = min(|x|^-exponent, floor^-exponent)`: the truncated-singular
    /// profile used for unbounded-data Hölder runs.
    TruncatedPower {
        exponent: f64,
        floor: f64,
    },
}

impl InitialSpec {
    pub fn build(&self, window: (f64, f64)) -> Result<InitialData, ConfigError> {
        match self {
            InitialSpec::Riemann { left, right, x0 } => {
                Ok(InitialData::riemann(*left, *right, *x0, window)?)
            }
            InitialSpec::PiecewiseConstant { breaks, values } => {
                Ok(InitialData::piecewise_constant(breaks.clone(), values.clone(), window)?)
            }
            InitialSpec::TruncatedPower { exponent, floor } => {
                let (e, fl) = (*exponent, *floor);
                if !(e > 0.0 && fl > 0.0) {
                    return Err(ConfigError::BadFunction(
                        "truncated_power requires exponent > 0 and floor > 0".into(),
                    ));
                }
                let cap = fl.powf(-e);
                Ok(InitialData::sampled(
                    move |x: f64| if x.abs() <= fl { cap } else { x.abs().powf(-e) },
                    window,
                )?)
            }
        }
    }
}
