//! The bilinear form
//! `B(f, η) = <u q> - <u><q> - (<η f> - <η><f>)`
//! over discrete probability measures, together with the pointwise term
//! `P(v, u)` whose average drives its nonnegativity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::FunSpec;
use crate::entropypair::EntropyPair;
use crate::gen;

#[derive(Debug, Error)]
pub enum BilinearError {
    #[error("atom weights must be positive (atom {0})")]
    NonPositiveWeight(usize),
    #[error("atom locations must be finite (atom {0})")]
    NonFiniteLocation(usize),
    #[error("weights sum to {0}, not 1 (tolerance 1e-12)")]
    WeightSumOff(f64),
    #[error("measure needs at least one atom")]
    Empty,
    #[error("integrand is not finite at atom u = {0}")]
    NonFiniteValue(f64),
    #[error("overflow while averaging (component {0})")]
    Overflow(&'static str),
}

/// Probability measure with finitely many atoms. Duplicate locations are
/// merged by weight addition at construction.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self, BilinearError> {
        if atoms.is_empty() {
            return Err(BilinearError::Empty);
        }
        for (i, &(u, w)) in atoms.iter().enumerate() {
            if !u.is_finite() {
                return Err(BilinearError::NonFiniteLocation(i));
            }
            if !(w > 0.0) {
                return Err(BilinearError::NonPositiveWeight(i));
            }
        }
        let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(BilinearError::WeightSumOff(total));
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (u, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == u => last.1 += w,
                _ => merged.push((u, w)),
            }
        }
        Ok(Self { atoms: merged })
    }

    /// Single atom at `u` (the Jensen-equality measure).
    pub fn dirac(u: f64) -> Self {
        Self::new(vec![(u, 1.0)]).unwrap()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `<h(u)> = Σ w_i h(u_i)`.
    pub fn average(&self, h: impl Fn(f64) -> f64) -> Result<f64, BilinearError> {
        let mut acc = 0.0;
        for &(u, w) in &self.atoms {
            let v = h(u);
            if !v.is_finite() {
                return Err(BilinearError::NonFiniteValue(u));
            }
            acc += w * v;
        }
        Ok(acc)
    }

    pub fn mean(&self) -> f64 {
        self.average(|u| u).expect("locations are finite")
    }
}

/// `B(f, η)` evaluated atom-exactly.
pub fn bilinear_form(m: &DiscreteMeasure, pair: &EntropyPair) -> Result<f64, BilinearError> {
    let uq = m.average(|u| u * pair.q(u))?;
    let u_mean = m.mean();
    let q_mean = m.average(|u| pair.q(u))?;
    let ef = m.average(|u| pair.eta(u) * pair.f(u))?;
    let e_mean = m.average(|u| pair.eta(u))?;
    let f_mean = m.average(|u| pair.f(u))?;
    let b = uq - u_mean * q_mean - (ef - e_mean * f_mean);
    if !b.is_finite() {
        return Err(BilinearError::Overflow("bilinear form"));
    }
    Ok(b)
}

/// Pointwise term
/// `P(v, u) = (v-u)(s(η(u)-η(v)) - (q(u)-q(v)))` with the chord slope
/// `s = (f(u)-f(v))/(u-v)`; equivalently
/// `(v-u)(q(v)-q(u)) - (f(v)-f(u))(η(v)-η(u))`. Nonnegative for convex
/// pairs; zero exactly on the degeneracy set when the entropy is strict.
pub fn p_term(pair: &EntropyPair, v: f64, u: f64) -> f64 {
    if v == u {
        return 0.0;
    }
    (v - u) * (pair.q(v) - pair.q(u)) - (pair.f(v) - pair.f(u)) * (pair.eta(v) - pair.eta(u))
}

/// Jensen gaps `(<f(u)> - f(<u>), <η(u)> - η(<u>))`; both nonnegative for
/// convex pairs.
pub fn jensen_gaps(m: &DiscreteMeasure, pair: &EntropyPair) -> Result<(f64, f64), BilinearError> {
    let u_mean = m.mean();
    let f_gap = m.average(|u| pair.f(u))? - pair.f(u_mean);
    let e_gap = m.average(|u| pair.eta(u))? - pair.eta(u_mean);
    Ok((f_gap, e_gap))
}

/// `<P(u, <u>)>`: the averaged pointwise term of the decomposition
/// `B = <P(u, <u>)> + (<η> - η(<u>))(<f> - f(<u>))`.
pub fn averaged_p_term(m: &DiscreteMeasure, pair: &EntropyPair) -> Result<f64, BilinearError> {
    let mean = m.mean();
    m.average(|u| p_term(pair, u, mean))
}

/// One failed randomized trial, with everything needed to replay it.
#[derive(Debug, Clone, Serialize)]
pub struct ReproRecord {
    pub trial: u64,
    pub check: &'static str,
    pub atoms: Vec<(f64, f64)>,
    pub flux: Option<FunSpec>,
    pub entropy: Option<FunSpec>,
    pub bilinear: f64,
    pub lower_bound: f64,
    pub detail: String,
}

/// Outcome of `run_selftest`.
#[derive(Debug, Serialize)]
pub struct SelfTestReport {
    pub trials: u64,
    pub quadratic_trials: u64,
    pub failures: Vec<ReproRecord>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Randomized verification of the bilinear-form properties: the
/// nonnegativity chain, affine invariance, the P/Q decomposition, and the
/// uniform-convexity lower bound on pure-quadratic pairs. Runs `n` general
/// trials plus `n/10` quadratic trials.
pub fn run_selftest(n: u64, seed: u64) -> SelfTestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();

    for trial in 0..n {
        let pair = gen::random_pair(&mut rng, 3.0);
        let m = gen::random_measure(&mut rng, 8, 5.0);
        if let Some(record) = check_trial(trial, &pair, &m, &mut rng) {
            failures.push(record);
        }
    }

    let quadratic_trials = n / 10;
    for trial in 0..quadratic_trials {
        let c1 = rng.gen_range(0.2..4.0);
        let c2 = rng.gen_range(0.2..4.0);
        let lin = |rng: &mut ChaCha8Rng| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (af, bf) = lin(&mut rng);
        let (ae, be) = lin(&mut rng);
        let flux = quadratic_plus_affine(c1, af, bf);
        let entropy = quadratic_plus_affine(c2, ae, be);
        let pair = EntropyPair::new(flux, entropy).expect("quadratics are strictly convex");
        let m = gen::random_measure(&mut rng, 8, 5.0);
        let b = match bilinear_form(&m, &pair) {
            Ok(b) => b,
            Err(e) => {
                failures.push(repro(trial, "quadratic-eval", &m, &pair, f64::NAN, 0.0, e.to_string()));
                continue;
            }
        };
        let m2 = m.average(|u| (u - m.mean()).powi(2)).unwrap();
        let m1 = m.average(|u| (u - m.mean()).abs()).unwrap();
        let strong = c1 * c2 / 4.0 * m2 * m2;
        let weak = c1 * c2 / 4.0 * m1.powi(4);
        if !(b >= strong - 1e-10 && strong >= weak - 1e-10) {
            failures.push(repro(
                trial,
                "uniform-convexity bound",
                &m,
                &pair,
                b,
                strong,
                format!("B = {b}, c1c2/4 <(u-<u>)^2>^2 = {strong}, c1c2/4 <|u-<u>|>^4 = {weak}"),
            ));
        }
    }

    SelfTestReport { trials: n, quadratic_trials, failures }
}

fn quadratic_plus_affine(curvature: f64, slope: f64, offset: f64) -> crate::convexfn::ConvexFun {
    crate::convexfn::ConvexFun::piecewise_quadratic(
        vec![],
        vec![crate::convexfn::QuadPiece { a: 0.5 * curvature, c: slope, d: offset }],
        true,
    )
    .unwrap()
}

fn check_trial(
    trial: u64,
    pair: &EntropyPair,
    m: &DiscreteMeasure,
    rng: &mut ChaCha8Rng,
) -> Option<ReproRecord> {
    let b = match bilinear_form(m, pair) {
        Ok(b) => b,
        Err(e) => return Some(repro(trial, "evaluation", m, pair, f64::NAN, 0.0, e.to_string())),
    };
    let (f_gap, e_gap) = jensen_gaps(m, pair).ok()?;
    let scale = 1.0 + component_scale(m, pair);

    // Nonnegativity chain.
    let product = e_gap * f_gap;
    if !(b >= product - 1e-10 * scale && product >= -1e-10 * scale) {
        return Some(repro(
            trial,
            "nonnegativity chain",
            m,
            pair,
            b,
            product,
            format!("B = {b}, Jensen product = {product}, scale = {scale}"),
        ));
    }

    // Affine invariance.
    let (a, b_shift) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
    let (c, d_shift) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
    let shifted = EntropyPair::new(
        pair.flux().minus_affine(a, b_shift).expect("exact backend"),
        pair.entropy().minus_affine(c, d_shift).expect("exact backend"),
    )
    .expect("affine shifts preserve convexity");
    let b_shifted = bilinear_form(m, &shifted).ok()?;
    if (b - b_shifted).abs() > 1e-10 * b.abs().max(1.0) {
        return Some(repro(
            trial,
            "affine invariance",
            m,
            pair,
            b,
            b_shifted,
            format!("B = {b} vs shifted {b_shifted} (a={a}, b={b_shift}, c={c}, d={d_shift})"),
        ));
    }

    // Decomposition B = <P(u, <u>)> + Jensen product.
    let avg_p = averaged_p_term(m, pair).ok()?;
    let rhs = avg_p + product;
    if (b - rhs).abs() > 1e-10 * b.abs().max(1.0) {
        return Some(repro(
            trial,
            "P/Q decomposition",
            m,
            pair,
            b,
            rhs,
            format!("B = {b}, <P> = {avg_p}, Jensen product = {product}"),
        ));
    }

    None
}

fn component_scale(m: &DiscreteMeasure, pair: &EntropyPair) -> f64 {
    let candidates = [
        m.average(|u| u * pair.q(u)),
        m.average(|u| pair.q(u)),
        m.average(|u| pair.eta(u) * pair.f(u)),
        m.average(|u| pair.eta(u)),
        m.average(|u| pair.f(u)),
    ];
    candidates.iter().filter_map(|c| c.as_ref().ok()).fold(0.0, |acc, v| acc.max(v.abs()))
}

fn repro(
    trial: u64,
    check: &'static str,
    m: &DiscreteMeasure,
    pair: &EntropyPair,
    bilinear: f64,
    lower_bound: f64,
    detail: String,
) -> ReproRecord {
    ReproRecord {
        trial,
        check,
        atoms: m.atoms().to_vec(),
        flux: FunSpec::describe(pair.flux()),
        entropy: FunSpec::describe(pair.entropy()),
        bilinear,
        lower_bound,
        detail,
    }
}
