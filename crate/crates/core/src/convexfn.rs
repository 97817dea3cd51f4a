//! Convex, locally Lipschitz scalar functions with exact one-sided calculus.
//!
//! Two backends:
//! - `Exact`: piecewise quadratic with closed-form derivatives, Legendre
//!   conjugates, and degeneracy intervals. The derivative is piecewise linear
//!   and nondecreasing, so every downstream quantity stays in closed form.
//! - `Analytic`: black-box value/derivative rules with a declared asymptotic
//!   shape, for growth experiments where `|u|` runs up to `1e6` and piecewise
//!   fitting is pointless.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Which one-sided limit of the derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Declared asymptotic shape of the derivative as `u -> ±inf`.
///
/// `Power { exponent: p, sublinear: Some(s) }` means
/// `g'(u) ~ sgn(u)(1 - m|u|^-s)` scaled by `|u|^p`; for the shapes shipped
/// here the sublinear correction only occurs with `p = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptotics {
    Power { exponent: f64, sublinear: Option<f64> },
    Log,
    Exp,
}

#[derive(Debug, Error)]
pub enum ConvexFunError {
    #[error("breakpoints must be strictly increasing (index {0})")]
    BreakpointsNotIncreasing(usize),
    #[error("expected {expected} pieces for {breaks} breakpoints, got {got}")]
    PieceCountMismatch { breaks: usize, expected: usize, got: usize },
    #[error("non-finite coefficient in piece {0}")]
    NonFiniteCoefficient(usize),
    #[error("pieces {index} and {} disagree at breakpoint {breakpoint} (gap {gap:e})", index + 1)]
    DiscontinuousAtBreakpoint { index: usize, breakpoint: f64, gap: f64 },
    #[error("parameter out of range: {0}")]
    BadParameter(&'static str),
}

/// One quadratic piece `a u^2 + c u + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPiece {
    pub a: f64,
    pub c: f64,
    pub d: f64,
}

impl QuadPiece {
    fn eval(&self, u: f64) -> f64 {
        (self.a * u + self.c) * u + self.d
    }

    fn deriv(&self, u: f64) -> f64 {
        2.0 * self.a * u + self.c
    }
}

/// Piecewise quadratic with the first/last piece extended to -inf/+inf.
/// `pieces.len() == breakpoints.len() + 1`; piece `i` governs
/// `[breakpoints[i-1], breakpoints[i]]` with the obvious conventions at the
/// ends.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseQuadratic {
    breakpoints: Vec<f64>,
    pieces: Vec<QuadPiece>,
}

impl PiecewiseQuadratic {
    /// Build from raw breakpoints and `[a, c, d]` coefficients.
    ///
    /// Continuity at breakpoints is required within `1e-12` relative; the
    /// constant term of each subsequent piece is then snapped so adjacent
    /// pieces agree exactly.
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<QuadPiece>) -> Result<Self, ConvexFunError> {
        for (i, w) in breakpoints.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(ConvexFunError::BreakpointsNotIncreasing(i + 1));
            }
        }
        if pieces.len() != breakpoints.len() + 1 {
            return Err(ConvexFunError::PieceCountMismatch {
                breaks: breakpoints.len(),
                expected: breakpoints.len() + 1,
                got: pieces.len(),
            });
        }
        for (i, p) in pieces.iter().enumerate() {
            if !(p.a.is_finite() && p.c.is_finite() && p.d.is_finite()) {
                return Err(ConvexFunError::NonFiniteCoefficient(i));
            }
        }
        for (i, &b) in breakpoints.iter().enumerate() {
            if !b.is_finite() {
                return Err(ConvexFunError::BreakpointsNotIncreasing(i));
            }
            let left = pieces[i].eval(b);
            let right = pieces[i + 1].eval(b);
            let gap = (left - right).abs();
            if gap > 1e-12 * left.abs().max(1.0) {
                return Err(ConvexFunError::DiscontinuousAtBreakpoint { index: i, breakpoint: b, gap });
            }
        }
        let mut snapped = pieces;
        for (i, &b) in breakpoints.iter().enumerate() {
            let left = snapped[i].eval(b);
            let next = &mut snapped[i + 1];
            // Iterate to the floating-point fixpoint; the residual gap after
            // this is below one ulp of the shared value.
            for _ in 0..4 {
                let gap = left - next.eval(b);
                if gap == 0.0 {
                    break;
                }
                next.d += gap;
            }
        }
        Ok(Self { breakpoints, pieces: snapped })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[QuadPiece] {
        &self.pieces
    }

    /// Piece governing `(u - eps, u]`.
    fn idx_left(&self, u: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < u)
    }

    /// Piece governing `[u, u + eps)`.
    fn idx_right(&self, u: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= u)
    }

    /// Domain of piece `i` as (lo, hi) with infinite sentinels.
    fn domain(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { f64::NEG_INFINITY } else { self.breakpoints[i - 1] };
        let hi = if i == self.breakpoints.len() { f64::INFINITY } else { self.breakpoints[i] };
        (lo, hi)
    }

    fn eval(&self, u: f64) -> f64 {
        self.pieces[self.idx_left(u)].eval(u)
    }

    fn deriv(&self, u: f64, side: Side) -> f64 {
        let i = match side {
            Side::Minus => self.idx_left(u),
            Side::Plus => self.idx_right(u),
        };
        self.pieces[i].deriv(u)
    }

    /// Closed range of the derivative (infinite sentinels at open ends).
    fn slope_range(&self) -> (f64, f64) {
        let first = &self.pieces[0];
        let last = &self.pieces[self.pieces.len() - 1];
        let lo = if first.a > 0.0 { f64::NEG_INFINITY } else { first.c };
        let hi = if last.a > 0.0 { f64::INFINITY } else { last.c };
        (lo, hi)
    }
}

/// Result of inverting the (nondecreasing) derivative at a slope `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeInverse {
    /// `p` lies in `[f'(u-0), f'(u+0)]` at this point.
    At(f64),
    /// `p` is below every slope of the function.
    BelowRange,
    /// `p` is above every slope of the function.
    AboveRange,
}

/// Closed interval of linear degeneracy (endpoints may be infinite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyInterval {
    pub lo: f64,
    pub hi: f64,
    /// Set when an analytic-backend bisection could not certify a boundary.
    pub approximate: bool,
}

impl DegeneracyInterval {
    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// A single validation finding; all failures are report entries, not errors.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    NonConvexPiece { index: usize, a: f64 },
    DerivativeDecreaseAtBreakpoint { index: usize, left: f64, right: f64 },
    DiscontinuityAtBreakpoint { index: usize, gap: f64 },
    FalseStrictClaim { index: usize },
    SampledDerivativeDecrease { u_left: f64, u_right: f64 },
    SampledFlatRun { u_left: f64, u_right: f64 },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonConvexPiece { index, a } => write!(f, "non-convex piece {index} (a = {a})"),
            Self::DerivativeDecreaseAtBreakpoint { index, left, right } => {
                write!(f, "derivative decreases at breakpoint {index} ({left} -> {right})")
            }
            Self::DiscontinuityAtBreakpoint { index, gap } => {
                write!(f, "value jump at breakpoint {index} (gap {gap:e})")
            }
            Self::FalseStrictClaim { index } => {
                write!(f, "claimed strictly convex but piece {index} is affine")
            }
            Self::SampledDerivativeDecrease { u_left, u_right } => {
                write!(f, "sampled derivative decreases on [{u_left}, {u_right}]")
            }
            Self::SampledFlatRun { u_left, u_right } => {
                write!(f, "claimed strictly convex but derivative is flat on sampled [{u_left}, {u_right}]")
            }
        }
    }
}

/// Outcome of `ConvexFun::validate`.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    /// Analytic backends are only checkable on a sampling grid.
    pub sampled: bool,
}

impl ValidationReport {
    /// No convexity violations (a false strict claim alone still counts as convex).
    pub fn convex_ok(&self) -> bool {
        self.issues.iter().all(|i| {
            matches!(i, ValidationIssue::FalseStrictClaim { .. } | ValidationIssue::SampledFlatRun { .. })
        })
    }

    /// Convex and the strictness claim held up.
    pub fn strict_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Black-box value/derivative rules plus a declared asymptotic shape.
#[derive(Clone)]
pub struct AnalyticFun {
    value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv: Arc<dyn Fn(f64, Side) -> f64 + Send + Sync>,
    shape: Asymptotics,
    label: String,
}

impl fmt::Debug for AnalyticFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticFun")
            .field("label", &self.label)
            .field("shape", &self.shape)
            .finish()
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Exact(PiecewiseQuadratic),
    Analytic(AnalyticFun),
}

/// A convex, locally Lipschitz function of one variable.
///
/// Immutable after construction; all operations are pure, so values can be
/// shared freely across tasks.
#[derive(Debug, Clone)]
pub struct ConvexFun {
    backend: Backend,
    strict: bool,
}

/// Absolute tolerance (in `u`) for analytic degeneracy-boundary bisection.
const ANALYTIC_BOUNDARY_TOL: f64 = 1e-8;
/// Relative tolerance for analytic derivative-equality tests.
const ANALYTIC_DERIV_EQ_TOL: f64 = 1e-10;
/// Expansion limit for analytic searches before giving up on a finite bound.
const ANALYTIC_EXPANSION_LIMIT: f64 = 1e12;

impl ConvexFun {
    /// Exact piecewise-quadratic backend. `strict` claims a strictly
    /// increasing derivative; the claim is checked by `validate`.
    pub fn piecewise_quadratic(
        breakpoints: Vec<f64>,
        pieces: Vec<QuadPiece>,
        strict: bool,
    ) -> Result<Self, ConvexFunError> {
        Ok(Self { backend: Backend::Exact(PiecewiseQuadratic::new(breakpoints, pieces)?), strict })
    }

    /// Analytic backend from value and one-sided-derivative rules.
    pub fn analytic(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64, Side) -> f64 + Send + Sync + 'static,
        shape: Asymptotics,
        strict: bool,
        label: impl Into<String>,
    ) -> Self {
        Self {
            backend: Backend::Analytic(AnalyticFun {
                value: Arc::new(value),
                deriv: Arc::new(deriv),
                shape,
                label: label.into(),
            }),
            strict,
        }
    }

    /// `u^2 / 2`. Doubles as the standard strictly convex entropy.
    pub fn burgers() -> Self {
        Self::piecewise_quadratic(vec![], vec![QuadPiece { a: 0.5, c: 0.0, d: 0.0 }], true).unwrap()
    }

    /// `c u^2 / 2` for `c > 0` (uniformly convex with `f'' = c`).
    pub fn quadratic(curvature: f64) -> Result<Self, ConvexFunError> {
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(ConvexFunError::BadParameter("quadratic curvature must be positive"));
        }
        Self::piecewise_quadratic(vec![], vec![QuadPiece { a: 0.5 * curvature, c: 0.0, d: 0.0 }], true)
    }

    /// `|u|`: convex but nowhere strictly convex.
    pub fn absolute() -> Self {
        Self::piecewise_quadratic(
            vec![0.0],
            vec![QuadPiece { a: 0.0, c: -1.0, d: 0.0 }, QuadPiece { a: 0.0, c: 1.0, d: 0.0 }],
            false,
        )
        .unwrap()
    }

    /// The flat-shelf flux: `u^2/2` for `u <= 0`, `0` on `[0, 1]`,
    /// `(u-1)^2/2` for `u >= 1`. Linearly degenerate exactly on `[0, 1]`.
    pub fn plateau() -> Self {
        Self::piecewise_quadratic(
            vec![0.0, 1.0],
            vec![
                QuadPiece { a: 0.5, c: 0.0, d: 0.0 },
                QuadPiece { a: 0.0, c: 0.0, d: 0.0 },
                QuadPiece { a: 0.5, c: -1.0, d: 0.5 },
            ],
            false,
        )
        .unwrap()
    }

    /// Power-law function `|u|^(alpha+1) / (alpha+1)` with derivative
    /// `sgn(u)|u|^alpha`.
    pub fn power(alpha: f64) -> Result<Self, ConvexFunError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(ConvexFunError::BadParameter("power exponent must be >= 0"));
        }
        let strict = alpha > 0.0;
        Ok(Self::analytic(
            move |u: f64| u.abs().powf(alpha + 1.0) / (alpha + 1.0),
            move |u: f64, side| {
                if u == 0.0 && alpha == 0.0 {
                    return match side {
                        Side::Minus => -1.0,
                        Side::Plus => 1.0,
                    };
                }
                u.signum() * u.abs().powf(alpha)
            },
            Asymptotics::Power { exponent: alpha, sublinear: None },
            strict,
            format!("power({alpha})"),
        ))
    }

    /// Linear-growth function with a sublinear derivative correction:
    /// `g'(u) = sgn(u)(1 - (1+|u|)^-s)` for `s` in `(0, 1]`.
    pub fn power_sublinear(s: f64) -> Result<Self, ConvexFunError> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(ConvexFunError::BadParameter("sublinear exponent must be in (0, 1]"));
        }
        let value = move |u: f64| {
            let x = u.abs();
            if s == 1.0 {
                x - (1.0 + x).ln()
            } else {
                x - ((1.0 + x).powf(1.0 - s) - 1.0) / (1.0 - s)
            }
        };
        Ok(Self::analytic(
            value,
            move |u: f64, _| u.signum() * (1.0 - (1.0 + u.abs()).powf(-s)),
            Asymptotics::Power { exponent: 0.0, sublinear: Some(s) },
            true,
            format!("power_sublinear({s})"),
        ))
    }

    /// Logarithmic-derivative entropy `(1+|u|) ln(1+|u|)` with
    /// `g'(u) = sgn(u)(ln(1+|u|) + 1)`.
    pub fn log_entropy() -> Self {
        Self::analytic(
            |u: f64| {
                let x = 1.0 + u.abs();
                x * x.ln()
            },
            |u: f64, side| {
                let mag = (1.0 + u.abs()).ln() + 1.0;
                if u == 0.0 {
                    return match side {
                        Side::Minus => -1.0,
                        Side::Plus => 1.0,
                    };
                }
                u.signum() * mag
            },
            Asymptotics::Log,
            true,
            "log_entropy",
        )
    }

    /// Exponentially growing flux `cosh(u) - 1` with `f'(u) = sinh(u)`.
    pub fn exp_flux() -> Self {
        Self::analytic(
            |u: f64| u.cosh() - 1.0,
            |u: f64, _| u.sinh(),
            Asymptotics::Exp,
            true,
            "exp_flux",
        )
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.backend, Backend::Exact(_))
    }

    pub fn strict_flag(&self) -> bool {
        self.strict
    }

    pub fn exact(&self) -> Option<&PiecewiseQuadratic> {
        match &self.backend {
            Backend::Exact(pw) => Some(pw),
            Backend::Analytic(_) => None,
        }
    }

    /// Declared or derived asymptotic shape of the derivative.
    pub fn asymptotics(&self) -> Asymptotics {
        match &self.backend {
            Backend::Analytic(a) => a.shape,
            Backend::Exact(pw) => {
                let first = pw.pieces[0];
                let last = pw.pieces[pw.pieces.len() - 1];
                let exponent = if first.a > 0.0 || last.a > 0.0 { 1.0 } else { 0.0 };
                Asymptotics::Power { exponent, sublinear: None }
            }
        }
    }

    /// Point evaluation. `u` must be finite.
    pub fn eval(&self, u: f64) -> f64 {
        assert!(u.is_finite(), "eval rejects non-finite argument {u}");
        match &self.backend {
            Backend::Exact(pw) => pw.eval(u),
            Backend::Analytic(a) => (a.value)(u),
        }
    }

    /// One-sided derivative. Exact for the exact backend.
    pub fn d_onesided(&self, u: f64, side: Side) -> f64 {
        assert!(u.is_finite(), "d_onesided rejects non-finite argument {u}");
        match &self.backend {
            Backend::Exact(pw) => pw.deriv(u, side),
            Backend::Analytic(a) => (a.deriv)(u, side),
        }
    }

    /// Closed range of the derivative, with infinite sentinels.
    pub fn slope_range(&self) -> (f64, f64) {
        match &self.backend {
            Backend::Exact(pw) => pw.slope_range(),
            Backend::Analytic(a) => match a.shape {
                Asymptotics::Power { exponent, sublinear } => {
                    if exponent > 0.0 {
                        (f64::NEG_INFINITY, f64::INFINITY)
                    } else if sublinear.is_some() {
                        (-1.0, 1.0)
                    } else {
                        ((a.deriv)(-1.0, Side::Minus), (a.deriv)(1.0, Side::Plus))
                    }
                }
                Asymptotics::Log | Asymptotics::Exp => (f64::NEG_INFINITY, f64::INFINITY),
            },
        }
    }

    /// Maximal interval `I±(u)` on which the one-sided tangent at `u`
    /// coincides with the function. Always contains `u`; a singleton wherever
    /// the derivative is strictly increasing.
    pub fn degeneracy_interval(&self, u: f64, side: Side) -> DegeneracyInterval {
        assert!(u.is_finite(), "degeneracy_interval rejects non-finite argument {u}");
        match &self.backend {
            Backend::Exact(pw) => {
                let s = pw.deriv(u, side);
                // Extend right while pieces are affine with slope exactly s.
                let mut hi = u;
                let mut i = pw.idx_right(u);
                while pw.pieces[i].a == 0.0 && pw.pieces[i].c == s {
                    let (_, piece_hi) = pw.domain(i);
                    hi = piece_hi;
                    if i == pw.pieces.len() - 1 {
                        break;
                    }
                    i += 1;
                }
                let mut lo = u;
                let mut i = pw.idx_left(u);
                loop {
                    if pw.pieces[i].a == 0.0 && pw.pieces[i].c == s {
                        let (piece_lo, _) = pw.domain(i);
                        lo = piece_lo;
                        if i == 0 {
                            break;
                        }
                        i -= 1;
                    } else {
                        break;
                    }
                }
                DegeneracyInterval { lo, hi, approximate: false }
            }
            Backend::Analytic(a) => analytic_degeneracy(a, u, side),
        }
    }

    /// Legendre conjugate `f*(p) = sup_u (p u - f(u))`; `+inf` when `p` lies
    /// outside the closed range of the derivative.
    pub fn conjugate(&self, p: f64) -> f64 {
        match self.invert_derivative(p) {
            DerivativeInverse::At(u) => p * u - self.eval(u),
            DerivativeInverse::BelowRange | DerivativeInverse::AboveRange => f64::INFINITY,
        }
    }

    /// Find `u` with `p` in `[f'(u-0), f'(u+0)]` (any maximizer of the
    /// conjugate), by closed-form inversion of the piecewise-linear
    /// derivative or by bisection for the analytic backend.
    pub fn invert_derivative(&self, p: f64) -> DerivativeInverse {
        match &self.backend {
            Backend::Exact(pw) => invert_exact(pw, p),
            Backend::Analytic(a) => invert_analytic(a, p),
        }
    }

    /// Right-continuous generalized inverse of the derivative, clamped to
    /// `[vlo, vhi]`. Used to evaluate rarefaction state rules.
    pub fn derivative_inverse_clamped(&self, s: f64, vlo: f64, vhi: f64) -> f64 {
        let u = match self.invert_derivative(s) {
            DerivativeInverse::At(u) => {
                // Right-continuity: take the top of the flat stretch at s.
                let upper = self.degeneracy_interval(u, Side::Plus);
                if self.d_onesided(u, Side::Plus) == s { upper.hi.min(vhi) } else { u }
            }
            DerivativeInverse::BelowRange => vlo,
            DerivativeInverse::AboveRange => vhi,
        };
        u.clamp(vlo, vhi)
    }

    /// Check the convexity invariants; analytic backends are checked on a
    /// sampling grid and labeled accordingly.
    pub fn validate(&self) -> ValidationReport {
        match &self.backend {
            Backend::Exact(pw) => {
                let mut issues = Vec::new();
                for (i, p) in pw.pieces.iter().enumerate() {
                    if p.a < 0.0 {
                        issues.push(ValidationIssue::NonConvexPiece { index: i, a: p.a });
                    }
                    if self.strict && p.a == 0.0 {
                        issues.push(ValidationIssue::FalseStrictClaim { index: i });
                    }
                }
                for (i, &b) in pw.breakpoints.iter().enumerate() {
                    let left = pw.pieces[i].deriv(b);
                    let right = pw.pieces[i + 1].deriv(b);
                    // Ulp-scale grace: evaluating 2 a b + c rounds, so an
                    // affine shift of a convex function can encode a
                    // sub-resolution "decrease". Real violations are orders
                    // of magnitude above this.
                    let scale = (2.0 * pw.pieces[i].a * b).abs()
                        + (2.0 * pw.pieces[i + 1].a * b).abs()
                        + pw.pieces[i].c.abs()
                        + pw.pieces[i + 1].c.abs();
                    let grace = 16.0 * f64::EPSILON * scale.max(1.0);
                    if left > right + grace {
                        issues.push(ValidationIssue::DerivativeDecreaseAtBreakpoint {
                            index: i,
                            left,
                            right,
                        });
                    }
                    let gap = (pw.pieces[i].eval(b) - pw.pieces[i + 1].eval(b)).abs();
                    if gap > 1e-12 * pw.pieces[i].eval(b).abs().max(1.0) {
                        issues.push(ValidationIssue::DiscontinuityAtBreakpoint { index: i, gap });
                    }
                }
                ValidationReport { issues, sampled: false }
            }
            Backend::Analytic(a) => {
                let mut issues = Vec::new();
                let grid = sampling_grid();
                for w in grid.windows(2) {
                    let (ul, ur) = (w[0], w[1]);
                    let dl = (a.deriv)(ul, Side::Plus);
                    let dr = (a.deriv)(ur, Side::Minus);
                    let scale = dl.abs().max(dr.abs()).max(1.0);
                    if dl > dr + 1e-12 * scale {
                        issues.push(ValidationIssue::SampledDerivativeDecrease { u_left: ul, u_right: ur });
                    } else if self.strict && (dr - dl).abs() <= 1e-14 * scale {
                        issues.push(ValidationIssue::SampledFlatRun { u_left: ul, u_right: ur });
                    }
                }
                for &u in &grid {
                    if (a.deriv)(u, Side::Minus) > (a.deriv)(u, Side::Plus) {
                        issues.push(ValidationIssue::SampledDerivativeDecrease { u_left: u, u_right: u });
                    }
                }
                ValidationReport { issues, sampled: true }
            }
        }
    }

    /// Subtract the affine function `a u + b` (exact backend only). Affine
    /// shifts preserve convexity and strictness.
    pub fn minus_affine(&self, a: f64, b: f64) -> Option<ConvexFun> {
        let pw = self.exact()?;
        let pieces = pw
            .pieces()
            .iter()
            .map(|p| QuadPiece { a: p.a, c: p.c - a, d: p.d - b })
            .collect();
        ConvexFun::piecewise_quadratic(pw.breakpoints().to_vec(), pieces, self.strict).ok()
    }

    /// Exact conjugate as a piecewise quadratic. Available only when the
    /// derivative covers all of R (first/last pieces strictly convex), so the
    /// conjugate is finite everywhere.
    pub fn conjugate_function(&self) -> Option<ConvexFun> {
        let pw = self.exact()?;
        let (lo, hi) = pw.slope_range();
        if lo.is_finite() || hi.is_finite() {
            return None;
        }
        // Segments of f* in slope space, each starting where the previous
        // ended. A monotone cursor absorbs the ulp noise of slope
        // evaluations: nominally equal slopes at adjacent pieces can land a
        // couple of ulps apart in either order.
        let mut segments: Vec<(f64, QuadPiece)> = Vec::new();
        let mut cursor = f64::NEG_INFINITY;
        for (i, p) in pw.pieces.iter().enumerate() {
            let (dom_lo, dom_hi) = pw.domain(i);
            let sl = if dom_lo.is_finite() { p.deriv(dom_lo) } else { f64::NEG_INFINITY };
            let sr = if dom_hi.is_finite() { p.deriv(dom_hi) } else { f64::INFINITY };
            if sl > cursor && cursor.is_finite() && dom_lo.is_finite() {
                // Kink of f at dom_lo -> affine stretch of f* on [cursor, sl].
                segments.push((cursor, QuadPiece { a: 0.0, c: dom_lo, d: -pw.eval(dom_lo) }));
            }
            cursor = cursor.max(sl);
            if p.a > 0.0 {
                segments.push((
                    cursor,
                    QuadPiece {
                        a: 1.0 / (4.0 * p.a),
                        c: -p.c / (2.0 * p.a),
                        d: p.c * p.c / (4.0 * p.a) - p.d,
                    },
                ));
            }
            // Affine pieces of f occupy a single slope: they surface as
            // kinks between the neighboring stretches of f*.
            cursor = cursor.max(sr);
        }
        // Drop zero-width slivers: on an exact start tie the later segment
        // supersedes the earlier one (they agree to ulps there).
        let mut cleaned: Vec<(f64, QuadPiece)> = Vec::with_capacity(segments.len());
        for (start, piece) in segments {
            match cleaned.last() {
                Some(&(prev, _)) if start == prev => {
                    *cleaned.last_mut().unwrap() = (start, piece);
                }
                _ => cleaned.push((start, piece)),
            }
        }
        let breakpoints: Vec<f64> = cleaned.iter().skip(1).map(|&(s, _)| s).collect();
        let pieces: Vec<QuadPiece> = cleaned.into_iter().map(|(_, p)| p).collect();
        let strict = pieces.iter().all(|p| p.a > 0.0);
        ConvexFun::piecewise_quadratic(breakpoints, pieces, strict).ok()
    }
}

fn invert_exact(pw: &PiecewiseQuadratic, p: f64) -> DerivativeInverse {
    let (min_slope, _) = pw.slope_range();
    if p < min_slope {
        return DerivativeInverse::BelowRange;
    }
    for (i, piece) in pw.pieces.iter().enumerate() {
        let (dom_lo, dom_hi) = pw.domain(i);
        let sl = if dom_lo.is_finite() {
            piece.deriv(dom_lo)
        } else if piece.a > 0.0 {
            f64::NEG_INFINITY
        } else {
            piece.c
        };
        let sr = if dom_hi.is_finite() {
            piece.deriv(dom_hi)
        } else if piece.a > 0.0 {
            f64::INFINITY
        } else {
            piece.c
        };
        if p < sl {
            // p fell into the derivative jump at the previous breakpoint.
            return DerivativeInverse::At(dom_lo);
        }
        if p <= sr {
            if piece.a > 0.0 {
                return DerivativeInverse::At((p - piece.c) / (2.0 * piece.a));
            }
            // Affine piece with slope exactly p: any point of the domain.
            let anchor = if dom_lo.is_finite() {
                dom_lo
            } else if dom_hi.is_finite() {
                dom_hi
            } else {
                0.0
            };
            return DerivativeInverse::At(anchor);
        }
    }
    DerivativeInverse::AboveRange
}

fn invert_analytic(a: &AnalyticFun, p: f64) -> DerivativeInverse {
    let d = |u: f64| (a.deriv)(u, Side::Plus);
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    while d(lo) > p {
        lo *= 4.0;
        if lo < -ANALYTIC_EXPANSION_LIMIT {
            return DerivativeInverse::BelowRange;
        }
    }
    while d(hi) < p {
        hi *= 4.0;
        if hi > ANALYTIC_EXPANSION_LIMIT {
            return DerivativeInverse::AboveRange;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if d(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
    }
    DerivativeInverse::At(0.5 * (lo + hi))
}

fn analytic_degeneracy(a: &AnalyticFun, u: f64, side: Side) -> DegeneracyInterval {
    let s = (a.deriv)(u, side);
    let eq = |d: f64| (d - s).abs() <= ANALYTIC_DERIV_EQ_TOL * s.abs().max(1.0);

    let probe = ANALYTIC_BOUNDARY_TOL.max(1e-8 * u.abs());
    let mut approximate = false;

    // Right boundary.
    let hi = if !eq((a.deriv)(u + probe, Side::Plus)) {
        u
    } else {
        let mut inner = u + probe;
        let mut step = probe.max(1.0);
        loop {
            let outer = inner + step;
            if outer > ANALYTIC_EXPANSION_LIMIT {
                approximate = true;
                break f64::INFINITY;
            }
            if !eq((a.deriv)(outer, Side::Plus)) {
                // Bisect [inner, outer] down to the boundary tolerance.
                let mut lo_b = inner;
                let mut hi_b = outer;
                while hi_b - lo_b > ANALYTIC_BOUNDARY_TOL {
                    let mid = 0.5 * (lo_b + hi_b);
                    if eq((a.deriv)(mid, Side::Plus)) {
                        lo_b = mid;
                    } else {
                        hi_b = mid;
                    }
                }
                break 0.5 * (lo_b + hi_b);
            }
            inner = outer;
            step *= 2.0;
        }
    };

    // Left boundary, mirrored.
    let lo = if !eq((a.deriv)(u - probe, Side::Minus)) {
        u
    } else {
        let mut inner = u - probe;
        let mut step = probe.max(1.0);
        loop {
            let outer = inner - step;
            if outer < -ANALYTIC_EXPANSION_LIMIT {
                approximate = true;
                break f64::NEG_INFINITY;
            }
            if !eq((a.deriv)(outer, Side::Minus)) {
                let mut lo_b = outer;
                let mut hi_b = inner;
                while hi_b - lo_b > ANALYTIC_BOUNDARY_TOL {
                    let mid = 0.5 * (lo_b + hi_b);
                    if eq((a.deriv)(mid, Side::Minus)) {
                        hi_b = mid;
                    } else {
                        lo_b = mid;
                    }
                }
                break 0.5 * (lo_b + hi_b);
            }
            inner = outer;
            step *= 2.0;
        }
    };

    DegeneracyInterval { lo, hi, approximate }
}

fn sampling_grid() -> Vec<f64> {
    let mut grid = Vec::with_capacity(257);
    for k in -64..=64 {
        grid.push(0.1 * k as f64);
    }
    for k in 1..=32 {
        let mag = 10.0_f64.powf(1.0 + 5.0 * k as f64 / 32.0);
        grid.push(mag);
        grid.push(-mag);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}
