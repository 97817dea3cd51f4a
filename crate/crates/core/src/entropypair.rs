//! Entropy / entropy-flux pairs `(η, q)` with `q'(u) = η'(u) f'(u)`,
//! the Kruzkov comparison family, the quadratic form
//! `Q(u) = u q(u) - f(u) η(u)`, and sampled checks of the asymptotic
//! growth conditions that govern which entropies control which fluxes.

use serde::Serialize;
use thiserror::Error;

use crate::convexfn::{Asymptotics, ConvexFun, Side};
use crate::quad;

#[derive(Debug, Error)]
pub enum PairError {
    #[error("flux failed convexity validation: {0}")]
    NonConvexFlux(String),
    #[error("entropy is not strictly convex: {0}")]
    NonStrictEntropy(String),
    #[error("entropy flux vanishes at u = {0}; the ratio Q/|q| is undefined there")]
    ZeroEntropyFlux(f64),
}

/// Cubic polynomial piece `p3 u^3 + p2 u^2 + p1 u + p0`.
#[derive(Debug, Clone, Copy)]
struct CubicPiece {
    p3: f64,
    p2: f64,
    p1: f64,
    p0: f64,
}

impl CubicPiece {
    fn eval(&self, u: f64) -> f64 {
        ((self.p3 * u + self.p2) * u + self.p1) * u + self.p0
    }
}

/// Exact representation of `q` when both backends are piecewise quadratic:
/// the product of two piecewise-linear derivatives integrates to piecewise
/// cubics on the union of the breakpoints.
#[derive(Debug, Clone)]
struct PiecewiseCubic {
    breakpoints: Vec<f64>,
    pieces: Vec<CubicPiece>,
}

impl PiecewiseCubic {
    fn eval(&self, u: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b < u);
        self.pieces[i].eval(u)
    }
}

#[derive(Debug, Clone)]
enum EntropyFluxRepr {
    Exact(PiecewiseCubic),
    /// Adaptive Gauss-Kronrod from the base point on demand. `q` enters
    /// signed cancellations inside `Q`, so panels are held to a tight
    /// absolute tolerance.
    Quadrature,
}

/// A flux together with a strictly convex entropy and the induced entropy
/// flux `q(u) = ∫_base^u η'(ξ) f'(ξ) dξ`.
#[derive(Debug, Clone)]
pub struct EntropyPair {
    flux: ConvexFun,
    entropy: ConvexFun,
    repr: EntropyFluxRepr,
    base_point: f64,
}

impl EntropyPair {
    /// Build a pair, validating that the flux is convex and the entropy is
    /// strictly convex. The entropy flux is represented exactly when both
    /// backends are exact, by quadrature otherwise; `q(base_point) = 0` with
    /// the default base point 0.
    pub fn new(flux: ConvexFun, entropy: ConvexFun) -> Result<Self, PairError> {
        Self::with_base_point(flux, entropy, 0.0)
    }

    pub fn with_base_point(
        flux: ConvexFun,
        entropy: ConvexFun,
        base_point: f64,
    ) -> Result<Self, PairError> {
        let flux_report = flux.validate();
        if !flux_report.convex_ok() {
            return Err(PairError::NonConvexFlux(join_issues(&flux_report.issues)));
        }
        let entropy_report = entropy.validate();
        if !entropy.strict_flag() || !entropy_report.strict_ok() {
            let detail = if entropy.strict_flag() {
                join_issues(&entropy_report.issues)
            } else {
                "strict_flag is not set".to_string()
            };
            return Err(PairError::NonStrictEntropy(detail));
        }
        let repr = match (flux.exact(), entropy.exact()) {
            (Some(f), Some(e)) => EntropyFluxRepr::Exact(integrate_product(f, e, base_point)),
            _ => EntropyFluxRepr::Quadrature,
        };
        Ok(Self { flux, entropy, repr, base_point })
    }

    /// The Burgers model pair: `f = u^2/2`, `η = u^2/2`, `q = u^3/3`.
    pub fn burgers() -> Self {
        Self::new(ConvexFun::burgers(), ConvexFun::burgers()).unwrap()
    }

    pub fn flux(&self) -> &ConvexFun {
        &self.flux
    }

    pub fn entropy(&self) -> &ConvexFun {
        &self.entropy
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    /// Whether `q` is held in closed form (both backends exact).
    pub fn exact_repr(&self) -> bool {
        matches!(self.repr, EntropyFluxRepr::Exact(_))
    }

    pub fn f(&self, u: f64) -> f64 {
        self.flux.eval(u)
    }

    pub fn eta(&self, u: f64) -> f64 {
        self.entropy.eval(u)
    }

    /// Entropy flux `q(u)`.
    pub fn q(&self, u: f64) -> f64 {
        match &self.repr {
            EntropyFluxRepr::Exact(cubic) => cubic.eval(u),
            EntropyFluxRepr::Quadrature => quad::integrate(
                |xi| self.entropy.d_onesided(xi, Side::Plus) * self.flux.d_onesided(xi, Side::Plus),
                self.base_point,
                u,
                1e-10,
            ),
        }
    }

    /// Quadratic form `Q(u) = u q(u) - f(u) η(u)`.
    pub fn quadratic_form(&self, u: f64) -> f64 {
        u * self.q(u) - self.f(u) * self.eta(u)
    }

    /// Ratio `h(u) = Q(u) / |q(u)|`; undefined where `q` vanishes.
    pub fn q_ratio(&self, u: f64) -> Result<f64, PairError> {
        let q = self.q(u);
        if q == 0.0 {
            return Err(PairError::ZeroEntropyFlux(u));
        }
        Ok(self.quadratic_form(u) / q.abs())
    }

    /// Declared/derived asymptotic descriptor of the pair.
    pub fn growth_descriptor(&self) -> GrowthDescriptor {
        GrowthDescriptor::from_shapes(self.flux.asymptotics(), self.entropy.asymptotics())
    }
}

fn join_issues(issues: &[crate::convexfn::ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

/// Integrate the product of two piecewise-linear derivatives into piecewise
/// cubics over the union of breakpoints, anchored so `q(base) = 0`.
fn integrate_product(
    f: &crate::convexfn::PiecewiseQuadratic,
    e: &crate::convexfn::PiecewiseQuadratic,
    base: f64,
) -> PiecewiseCubic {
    let mut breakpoints: Vec<f64> =
        f.breakpoints().iter().chain(e.breakpoints().iter()).copied().collect();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();

    let n = breakpoints.len() + 1;
    let mut pieces = Vec::with_capacity(n);
    for i in 0..n {
        // A representative interior point of interval i picks the governing
        // quadratic pieces of f and eta.
        let probe = interval_probe(&breakpoints, i);
        let fp = f.pieces()[f.breakpoints().partition_point(|&b| b <= probe)];
        let ep = e.pieces()[e.breakpoints().partition_point(|&b| b <= probe)];
        // (2 a_e u + c_e)(2 a_f u + c_f) integrated in u.
        pieces.push(CubicPiece {
            p3: 4.0 * ep.a * fp.a / 3.0,
            p2: ep.a * fp.c + fp.a * ep.c,
            p1: ep.c * fp.c,
            p0: 0.0,
        });
    }

    // Fix the integration constants: continuity at breakpoints and q(base)=0.
    let base_idx = breakpoints.partition_point(|&b| b < base);
    pieces[base_idx].p0 = -pieces[base_idx].eval(base);
    for i in (base_idx + 1)..n {
        let b = breakpoints[i - 1];
        let left = pieces[i - 1].eval(b);
        pieces[i].p0 += left - pieces[i].eval(b);
    }
    for i in (0..base_idx).rev() {
        let b = breakpoints[i];
        let right = pieces[i + 1].eval(b);
        pieces[i].p0 += right - pieces[i].eval(b);
    }

    PiecewiseCubic { breakpoints, pieces }
}

fn interval_probe(breakpoints: &[f64], i: usize) -> f64 {
    let lo = if i == 0 { f64::NEG_INFINITY } else { breakpoints[i - 1] };
    let hi = if i == breakpoints.len() { f64::INFINITY } else { breakpoints[i] };
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 1.0,
        (false, false) => 0.0,
    }
}

/// The Kruzkov comparison pair `η_k(u) = |u - k|`,
/// `q_k(u) = sgn(u - k)(f(u) - f(k))`. Convex-compatible in the weak sense
/// but not strictly convex, so it lives outside `EntropyPair`.
#[derive(Debug, Clone)]
pub struct KruzkovPair {
    flux: ConvexFun,
    k: f64,
}

impl KruzkovPair {
    pub fn new(flux: ConvexFun, k: f64) -> Self {
        Self { flux, k }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eta(&self, u: f64) -> f64 {
        (u - self.k).abs()
    }

    pub fn q(&self, u: f64) -> f64 {
        sign(u - self.k) * (self.flux.eval(u) - self.flux.eval(self.k))
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Asymptotic shape data for a pair, feeding the closed-form γ table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthDescriptor {
    /// Flux derivative power exponent (`f' ~ sgn(u) |u|^alpha`).
    pub alpha: f64,
    /// Entropy derivative power exponent (`η' ~ sgn(u) |u|^beta`).
    pub beta: f64,
    /// Sublinear correction for `alpha = 0`: `f' ~ sgn(u)(1 - m |u|^-alpha_tilde)`.
    pub alpha_tilde: Option<f64>,
    /// Sublinear correction for `beta = 0`.
    pub beta_tilde: Option<f64>,
    /// Entropy derivative grows like `log|u| + 1`.
    pub log_entropy: bool,
    /// Flux derivative grows like `e^|u|`.
    pub exp_flux: bool,
    /// Optional derivative-domination exponent: `|f'| <= C |η'|^lambda`.
    pub lambda: Option<f64>,
}

impl GrowthDescriptor {
    pub fn power_power(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            alpha_tilde: None,
            beta_tilde: None,
            log_entropy: false,
            exp_flux: false,
            lambda: None,
        }
    }

    pub fn from_shapes(flux: Asymptotics, entropy: Asymptotics) -> Self {
        let (alpha, alpha_tilde, exp_flux) = match flux {
            Asymptotics::Power { exponent, sublinear } => (exponent, sublinear, false),
            Asymptotics::Exp => (f64::INFINITY, None, true),
            // A logarithmically growing derivative sits between the power
            // exponents 0 and every positive one; treat it as alpha = 0 with
            // no usable correction.
            Asymptotics::Log => (0.0, None, false),
        };
        let (beta, beta_tilde, log_entropy) = match entropy {
            Asymptotics::Power { exponent, sublinear } => (exponent, sublinear, false),
            Asymptotics::Log => (0.0, None, true),
            Asymptotics::Exp => (f64::INFINITY, None, false),
        };
        Self { alpha, beta, alpha_tilde, beta_tilde, log_entropy, exp_flux, lambda: None }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }
}

/// Outcome of the closed-form γ computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GammaResult {
    Gamma { value: f64, case: &'static str },
    Unavailable { reason: &'static str },
}

impl GammaResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            GammaResult::Gamma { value, .. } => Some(*value),
            GammaResult::Unavailable { .. } => None,
        }
    }
}

/// Closed-form γ for the asymptotic entropy-domination inequality
/// `Q/η <= C (Q/f)^γ`, matched case by case from the descriptor.
pub fn gamma_closed_form(desc: &GrowthDescriptor) -> GammaResult {
    if desc.exp_flux {
        return GammaResult::Unavailable {
            reason: "flux derivative grows exponentially: Q/η ~ e^|u| outpaces every power of Q/f, so no γ >= 1 works",
        };
    }
    if desc.log_entropy {
        if desc.alpha > 0.0 {
            return GammaResult::Gamma { value: desc.alpha + 1.0, case: "log-entropy, power flux" };
        }
        if matches!(desc.alpha_tilde, Some(t) if t > 0.0 && t < 1.0) {
            return GammaResult::Gamma {
                value: 1.0,
                case: "log-entropy, sublinear-corrected flux",
            };
        }
        return GammaResult::Unavailable {
            reason: "log-entropy with asymptotically linear flux and no sublinear correction",
        };
    }
    if desc.alpha > 0.0 && desc.beta > 0.0 {
        let value = ((desc.alpha + 1.0) / (desc.beta + 1.0)).max(1.0);
        return GammaResult::Gamma { value, case: "power flux, power entropy" };
    }
    if desc.alpha == 0.0 && desc.beta > 0.0 {
        return match desc.alpha_tilde {
            Some(t) if t > 0.0 && t <= 1.0 => GammaResult::Gamma {
                value: 1.0,
                case: "sublinear-corrected linear-growth flux, power entropy",
            },
            _ => GammaResult::Unavailable {
                reason: "flux is asymptotically linear with no sublinear correction: Q/|q| stays bounded",
            },
        };
    }
    if desc.alpha > 0.0 && desc.beta == 0.0 {
        return match desc.beta_tilde {
            Some(t) if t > 0.0 && t < 1.0 => GammaResult::Gamma {
                value: (desc.alpha + 1.0 - t) / (1.0 - t),
                case: "power flux, sublinear-corrected linear-growth entropy",
            },
            _ => GammaResult::Unavailable {
                reason: "entropy derivative approaches a constant with no declared correction",
            },
        };
    }
    if desc.alpha == 0.0 && desc.beta == 0.0 {
        if let (Some(at), Some(bt)) = (desc.alpha_tilde, desc.beta_tilde) {
            if at + bt <= 1.0 {
                return GammaResult::Gamma {
                    value: 1.0,
                    case: "both derivatives sublinearly corrected",
                };
            }
            return GammaResult::Unavailable {
                reason: "combined sublinear corrections exceed 1: Q no longer dominates q",
            };
        }
    }
    if let Some(lambda) = desc.lambda {
        return GammaResult::Gamma { value: lambda.max(1.0), case: "derivative domination bound" };
    }
    GammaResult::Unavailable { reason: "descriptor matches no closed-form case" }
}

/// Per-sample record of the growth-condition checks.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthSample {
    pub u: f64,
    pub f_over_u: f64,
    pub eta_over_u_pow: f64,
    pub h: Option<f64>,
    pub ratio_iii: f64,
}

/// Sampled evidence for the asymptotic conditions. These are limits at
/// infinity; a finite sample can support or falsify a trend, never prove it.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub label: &'static str,
    pub gamma: f64,
    pub samples: Vec<GrowthSample>,
    /// Condition (i): superlinear flux and entropy growth.
    pub min_f_over_u: f64,
    pub min_eta_over_u_pow: f64,
    /// Condition (ii): `h = Q/|q|` should diverge.
    pub h_tail_increasing: bool,
    pub h_first: f64,
    pub h_final: f64,
    /// Condition (iii): `(Q/η) / (Q/f)^γ` should stay bounded.
    pub c_estimate: f64,
    pub tail_max_over_min: f64,
    pub tail_nonincreasing: bool,
    pub bounded: bool,
    pub overflow: bool,
    /// Condition (i) tails that failed to be monotone are flagged rather
    /// than silently extrapolated.
    pub non_monotone_tail: bool,
}

/// Log-spaced magnitudes from `lo` to `hi`, `n` points.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n).map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Evaluate the three growth conditions on `± magnitudes` and report trends.
/// `gamma >= 1`; magnitudes must exclude a neighborhood of zero.
pub fn check_growth_conditions(pair: &EntropyPair, gamma: f64, magnitudes: &[f64]) -> GrowthReport {
    assert!(gamma >= 1.0, "growth checks require gamma >= 1");
    assert!(magnitudes.iter().all(|&m| m > 1e-6), "samples must stay away from 0");
    let mut mags = magnitudes.to_vec();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let beta = pair.growth_descriptor().beta;
    let pow = if beta.is_finite() { beta + 1.0 } else { 1.0 };

    let mut samples = Vec::with_capacity(2 * mags.len());
    let mut overflow = false;
    for &m in &mags {
        for u in [m, -m] {
            let f = pair.f(u);
            let eta = pair.eta(u);
            let q = pair.q(u);
            let big_q = u * q - f * eta;
            let ratio_iii = if eta != 0.0 && f != 0.0 {
                (big_q / eta) / (big_q / f).powf(gamma)
            } else {
                f64::NAN
            };
            if !(f.is_finite() && eta.is_finite() && q.is_finite() && ratio_iii.is_finite()) {
                overflow = true;
            }
            samples.push(GrowthSample {
                u,
                f_over_u: f / u.abs(),
                eta_over_u_pow: eta / u.abs().powf(pow),
                h: if q != 0.0 { Some(big_q / q.abs()) } else { None },
                ratio_iii,
            });
        }
    }

    let finite_min = |vals: &mut dyn Iterator<Item = f64>| {
        vals.filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
    };
    let min_f_over_u = finite_min(&mut samples.iter().map(|s| s.f_over_u));
    let min_eta_over_u_pow = finite_min(&mut samples.iter().map(|s| s.eta_over_u_pow));

    // Work on the positive branch ordered by |u| for trend statements; the
    // pairs shipped here are asymptotically even in |u|.
    let branch: Vec<&GrowthSample> = samples.iter().filter(|s| s.u > 0.0).collect();
    let hs: Vec<f64> = branch.iter().filter_map(|s| s.h).filter(|h| h.is_finite()).collect();
    let h_first = hs.first().copied().unwrap_or(f64::NAN);
    let h_final = hs.last().copied().unwrap_or(f64::NAN);
    let tail_start = hs.len() / 2;
    let h_tail_increasing = hs.len() >= 4
        && hs[tail_start..].windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));

    let ratios: Vec<f64> = branch.iter().map(|s| s.ratio_iii).filter(|r| r.is_finite()).collect();
    let c_estimate = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = &ratios[ratios.len() / 2..];
    let (tail_max_over_min, tail_nonincreasing) = if tail.is_empty() {
        (f64::INFINITY, false)
    } else {
        let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let noninc = tail.windows(2).all(|w| w[1] <= w[0] * 1.05);
        (if min > 0.0 { max / min } else { f64::INFINITY }, noninc)
    };
    let bounded = !overflow && (tail_max_over_min < 10.0 || tail_nonincreasing);

    let fi: Vec<f64> = branch.iter().map(|s| s.f_over_u).collect();
    let non_monotone_tail =
        fi.len() >= 4 && !fi[fi.len() / 2..].windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6));

    GrowthReport {
        label: "sampled evidence",
        gamma,
        samples,
        min_f_over_u,
        min_eta_over_u_pow,
        h_tail_increasing,
        h_first,
        h_final,
        c_estimate,
        tail_max_over_min,
        tail_nonincreasing,
        bounded,
        overflow,
        non_monotone_tail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexfn::QuadPiece;

    /// Independent quadrature oracle: Simpson with Richardson refinement,
    /// applied piecewise between the supplied cut points (the integrand
    /// jumps at derivative kinks, which plain Simpson cannot see).
    fn simpson_oracle_cut<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cuts: &[f64]) -> f64 {
        let simpson = |f: &F, a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                let x = a + i as f64 * h;
                s += if i % 2 == 0 { 2.0 } else { 4.0 } * f(x);
            }
            s * h / 3.0
        };
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut points = vec![lo];
        let mut interior: Vec<f64> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
        interior.sort_by(|x, y| x.partial_cmp(y).unwrap());
        points.extend(interior);
        points.push(hi);
        let mut total = 0.0;
        for w in points.windows(2) {
            // Open the panel a hair so one-sided kink values do not leak
            // across the cut.
            let eps = 1e-12 * (w[1] - w[0]);
            let (p, q) = (w[0] + eps, w[1] - eps);
            let coarse = simpson(&f, p, q, 512);
            let fine = simpson(&f, p, q, 1024);
            total += fine + (fine - coarse) / 15.0;
        }
        sign * total
    }

    fn simpson_oracle<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        simpson_oracle_cut(f, a, b, &[])
    }

    #[test]
    fn burgers_pair_entropy_flux() {
        let pair = EntropyPair::burgers();
        assert!((pair.q(1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((pair.q(-2.0) + 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_strict_entropy() {
        let err = EntropyPair::new(ConvexFun::burgers(), ConvexFun::absolute());
        assert!(matches!(err, Err(PairError::NonStrictEntropy(_))));
    }

    #[test]
    fn rejects_non_convex_flux() {
        let bad = ConvexFun::piecewise_quadratic(
            vec![],
            vec![QuadPiece { a: -1.0, c: 0.0, d: 0.0 }],
            false,
        )
        .unwrap();
        let err = EntropyPair::new(bad, ConvexFun::burgers());
        assert!(matches!(err, Err(PairError::NonConvexFlux(_))));
    }

    #[test]
    fn kruzkov_values() {
        let b = ConvexFun::burgers();
        let k0 = KruzkovPair::new(b.clone(), 0.0);
        assert_eq!(k0.q(2.0), 2.0);
        let k1 = KruzkovPair::new(b.clone(), 1.0);
        assert_eq!(k1.eta(1.0), 0.0);
        assert_eq!(k1.q(1.0), 0.0);
        assert_eq!(k1.q(0.0), 0.5);
    }

    #[test]
    fn quadratic_form_hand_values() {
        let pair = EntropyPair::burgers();
        assert!((pair.quadratic_form(1.0) - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(pair.quadratic_form(0.0), 0.0);
        assert!((pair.quadratic_form(2.0) - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn q_ratio_hand_values() {
        let pair = EntropyPair::burgers();
        assert!((pair.q_ratio(2.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((pair.q_ratio(-2.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(pair.q_ratio(0.0), Err(PairError::ZeroEntropyFlux(_))));
    }

    #[test]
    fn exact_q_matches_quadrature_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let pair = crate::gen::random_pair(&mut rng, 3.0);
            let mut cuts: Vec<f64> = pair.flux().exact().unwrap().breakpoints().to_vec();
            cuts.extend_from_slice(pair.entropy().exact().unwrap().breakpoints());
            for _ in 0..100 {
                let u = rng.gen_range(-6.0..6.0);
                let oracle = simpson_oracle_cut(
                    |xi| {
                        pair.entropy().d_onesided(xi, Side::Plus)
                            * pair.flux().d_onesided(xi, Side::Plus)
                    },
                    0.0,
                    u,
                    &cuts,
                );
                let got = pair.q(u);
                assert!(
                    (got - oracle).abs() <= 1e-9 * oracle.abs().max(1.0),
                    "q mismatch at u={u}: exact {got} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn analytic_q_matches_quadrature_oracle() {
        use rand::{Rng, SeedableRng};
        let pair =
            EntropyPair::new(ConvexFun::power(2.0).unwrap(), ConvexFun::burgers()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let u = rng.gen_range(-6.0..6.0);
            let oracle = simpson_oracle(|xi: f64| xi.abs().powi(2) * xi.signum() * xi, 0.0, u);
            let got = pair.q(u);
            assert!(
                (got - oracle).abs() <= 1e-6 * oracle.abs().max(1.0),
                "q mismatch at u={u}: {got} vs {oracle}"
            );
        }
        // Closed form for this pair: q(u) = sgn(u) u^4 / 4.
        assert!((pair.q(2.0) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_table_matches_remark_cases() {
        // Case (i): power/power.
        let g = gamma_closed_form(&GrowthDescriptor::power_power(2.0, 1.0));
        assert_eq!(g.value(), Some(1.5));
        // alpha <= beta collapses to 1.
        assert_eq!(gamma_closed_form(&GrowthDescriptor::power_power(1.0, 2.0)).value(), Some(1.0));
        assert_eq!(gamma_closed_form(&GrowthDescriptor::power_power(1.0, 1.0)).value(), Some(1.0));

        // Case (ii): alpha = 0 with sublinear correction.
        let mut d = GrowthDescriptor::power_power(0.0, 1.0);
        d.alpha_tilde = Some(0.5);
        assert_eq!(gamma_closed_form(&d).value(), Some(1.0));

        // Case (iii): beta = 0 with sublinear correction.
        let mut d = GrowthDescriptor::power_power(2.0, 0.0);
        d.beta_tilde = Some(0.5);
        assert_eq!(gamma_closed_form(&d).value(), Some(5.0));

        // Case (iv): both corrected, corrections summing below 1.
        let mut d = GrowthDescriptor::power_power(0.0, 0.0);
        d.alpha_tilde = Some(0.3);
        d.beta_tilde = Some(0.3);
        assert_eq!(gamma_closed_form(&d).value(), Some(1.0));

        // Log entropy with power flux.
        let d = GrowthDescriptor {
            log_entropy: true,
            ..GrowthDescriptor::power_power(1.0, 0.0)
        };
        assert_eq!(gamma_closed_form(&d).value(), Some(2.0));

        // Exponential flux: no γ works.
        let d = GrowthDescriptor { exp_flux: true, ..GrowthDescriptor::power_power(f64::INFINITY, 1.0) };
        assert!(matches!(gamma_closed_form(&d), GammaResult::Unavailable { .. }));

        // Derivative-domination fallback.
        let d = GrowthDescriptor::power_power(2.0, 1.0).with_lambda(2.5);
        assert_eq!(gamma_closed_form(&GrowthDescriptor { alpha: f64::NAN, beta: f64::NAN, ..d }).value(), Some(2.5));

        // Asymptotically linear flux without correction cannot satisfy the
        // superlinearity condition.
        let d = GrowthDescriptor::power_power(0.0, 1.0);
        assert!(matches!(gamma_closed_form(&d), GammaResult::Unavailable { .. }));
    }

    #[test]
    fn burgers_growth_ratio_is_exactly_one() {
        let pair = EntropyPair::burgers();
        let report = check_growth_conditions(&pair, 1.0, &log_spaced(1e2, 1e6, 16));
        for s in &report.samples {
            assert!((s.ratio_iii - 1.0).abs() < 1e-12);
        }
        assert!(report.bounded);
        assert!(report.h_tail_increasing);
        assert!(report.h_final > 10.0 * report.h_first);
    }

    #[test]
    fn exponential_flux_fails_condition_iii() {
        let pair = EntropyPair::new(ConvexFun::exp_flux(), ConvexFun::burgers()).unwrap();
        // Stay below cosh overflow; the trend is already unmistakable.
        let report = check_growth_conditions(&pair, 3.0, &log_spaced(1e1, 5e2, 24));
        assert!(!report.bounded);
        assert!(report.tail_max_over_min > 1e10);
    }

    #[test]
    fn descriptor_from_named_functions() {
        let pair =
            EntropyPair::new(ConvexFun::power(2.0).unwrap(), ConvexFun::burgers()).unwrap();
        let d = pair.growth_descriptor();
        assert_eq!((d.alpha, d.beta), (2.0, 1.0));
        assert!(!d.exp_flux && !d.log_entropy);

        let pair =
            EntropyPair::new(ConvexFun::power_sublinear(0.5).unwrap(), ConvexFun::burgers())
                .unwrap();
        let d = pair.growth_descriptor();
        assert_eq!(d.alpha, 0.0);
        assert_eq!(d.alpha_tilde, Some(0.5));
        assert_eq!(gamma_closed_form(&d).value(), Some(1.0));
    }
}
