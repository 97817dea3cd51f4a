//! Exact self-similar Riemann solutions for convex fluxes, discontinuity
//! classification, per-jump entropy production, and the under-compressive
//! shock constructor.
//!
//! Jump brackets are normalized to `[g] = g(u+) - g(u-)` throughout; with
//! that convention the production rate along a discontinuity is
//! `D_t = [q] - s [η]`, nonpositive exactly for admissible jumps.

use serde::Serialize;
use thiserror::Error;

use crate::convexfn::{ConvexFun, Side};
use crate::entropypair::EntropyPair;

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("flux failed convexity validation: {0}")]
    NonConvexFlux(String),
    #[error("states (u- = {um}, u+ = {up}) do not form an under-compressive jump: need u+ > u- with f'(u+ - 0) > f'(u- + 0)")]
    NotUnderCompressive { um: f64, up: f64 },
    #[error("production sign and Lax inequality disagree at (u- = {um}, u+ = {up}): D_t = {d}, lax = {lax}; this indicates a bug")]
    InternalEquivalenceViolation { um: f64, up: f64, d: f64, lax: bool },
    #[error("degenerate jump: u- == u+ == {0}")]
    DegenerateJump(f64),
}

/// One wave of a self-similar fan, ordered left to right by speed.
#[derive(Debug, Clone, PartialEq)]
pub enum Wave {
    Shock { speed: f64, from: f64, to: f64 },
    Contact { speed: f64, from: f64, to: f64 },
    /// States traverse `[from, to]` as `ξ` runs over `[xi_lo, xi_hi]`; the
    /// state rule is the right-continuous generalized inverse of `f'`.
    Rarefaction { xi_lo: f64, xi_hi: f64, from: f64, to: f64 },
}

impl Wave {
    pub fn span(&self) -> (f64, f64) {
        match *self {
            Wave::Shock { speed, .. } | Wave::Contact { speed, .. } => (speed, speed),
            Wave::Rarefaction { xi_lo, xi_hi, .. } => (xi_lo, xi_hi),
        }
    }

    pub fn states(&self) -> (f64, f64) {
        match *self {
            Wave::Shock { from, to, .. }
            | Wave::Contact { from, to, .. }
            | Wave::Rarefaction { from, to, .. } => (from, to),
        }
    }
}

/// A self-similar Riemann solution `u(t, x) = U((x - origin)/t)`.
#[derive(Debug, Clone)]
pub struct WaveFan {
    flux: ConvexFun,
    left: f64,
    right: f64,
    origin: f64,
    waves: Vec<Wave>,
    admissible: bool,
}

#[derive(Serialize)]
struct WaveJson {
    r#type: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    range: Option<[f64; 2]>,
    states: [f64; 2],
}

/// Wire form of a fan: `{left, right, waves: [...], admissible}`.
#[derive(Serialize)]
pub struct WaveFanJson {
    left: f64,
    right: f64,
    origin: f64,
    waves: Vec<WaveJson>,
    admissible: bool,
}

impl WaveFan {
    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn waves(&self) -> &[Wave] {
        &self.waves
    }

    pub fn admissible(&self) -> bool {
        self.admissible
    }

    pub fn flux(&self) -> &ConvexFun {
        &self.flux
    }

    /// Same fan centered at `x0` instead of 0.
    pub fn with_origin(mut self, x0: f64) -> Self {
        self.origin = x0;
        self
    }

    pub fn json(&self) -> WaveFanJson {
        WaveFanJson {
            left: self.left,
            right: self.right,
            origin: self.origin,
            waves: self
                .waves
                .iter()
                .map(|w| {
                    let (from, to) = w.states();
                    match *w {
                        Wave::Shock { speed, .. } => WaveJson {
                            r#type: "shock",
                            speed: Some(speed),
                            range: None,
                            states: [from, to],
                        },
                        Wave::Contact { speed, .. } => WaveJson {
                            r#type: "contact",
                            speed: Some(speed),
                            range: None,
                            states: [from, to],
                        },
                        Wave::Rarefaction { xi_lo, xi_hi, .. } => WaveJson {
                            r#type: "rarefaction",
                            speed: None,
                            range: Some([xi_lo, xi_hi]),
                            states: [from, to],
                        },
                    }
                })
                .collect(),
            admissible: self.admissible,
        }
    }
}

/// Entropy-admissible Riemann solution: a single jump for `u_left > u_right`
/// (shock, or contact across an affine stretch), a composite fan of
/// rarefactions and contacts for `u_left < u_right`, a constant otherwise.
pub fn solve_riemann(flux: &ConvexFun, u_left: f64, u_right: f64) -> Result<WaveFan, WaveError> {
    let report = flux.validate();
    if !report.convex_ok() {
        return Err(WaveError::NonConvexFlux(
            report.issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "),
        ));
    }

    let mut waves = Vec::new();
    if u_left > u_right {
        let s = (flux.eval(u_left) - flux.eval(u_right)) / (u_left - u_right);
        let affine_across = flux.degeneracy_interval(u_left, Side::Minus).contains(u_right);
        if affine_across {
            waves.push(Wave::Contact { speed: s, from: u_left, to: u_right });
        } else {
            waves.push(Wave::Shock { speed: s, from: u_left, to: u_right });
        }
    } else if u_left < u_right {
        let mut v = u_left;
        while v < u_right {
            let shelf = flux.degeneracy_interval(v, Side::Plus);
            if shelf.hi > v {
                let to = shelf.hi.min(u_right);
                waves.push(Wave::Contact { speed: flux.d_onesided(v, Side::Plus), from: v, to });
                v = to;
            } else {
                let end = next_flat_start(flux, v, u_right);
                waves.push(Wave::Rarefaction {
                    xi_lo: flux.d_onesided(v, Side::Plus),
                    xi_hi: flux.d_onesided(end, Side::Minus),
                    from: v,
                    to: end,
                });
                v = end;
            }
        }
    }

    Ok(WaveFan { flux: flux.clone(), left: u_left, right: u_right, origin: 0.0, waves, admissible: true })
}

/// The non-entropy alternative for upward data: a single Rankine-Hugoniot
/// jump from `u_minus` up to `u_plus`. Requires the characteristics to leave
/// the shock: `f'(u+ - 0) > f'(u- + 0)`.
pub fn undercompressive_fan(
    flux: &ConvexFun,
    u_minus: f64,
    u_plus: f64,
) -> Result<WaveFan, WaveError> {
    if !(u_plus > u_minus && flux.d_onesided(u_plus, Side::Minus) > flux.d_onesided(u_minus, Side::Plus))
    {
        return Err(WaveError::NotUnderCompressive { um: u_minus, up: u_plus });
    }
    let s = (flux.eval(u_plus) - flux.eval(u_minus)) / (u_plus - u_minus);
    Ok(WaveFan {
        flux: flux.clone(),
        left: u_minus,
        right: u_plus,
        origin: 0.0,
        waves: vec![Wave::Shock { speed: s, from: u_minus, to: u_plus }],
        admissible: false,
    })
}

/// Evaluate the fan at `(t, x)`, `t > 0`. At a jump the right trace is
/// returned (matching the right-continuity of the rarefaction state rule).
pub fn sample_fan(fan: &WaveFan, t: f64, x: f64) -> f64 {
    assert!(t > 0.0, "sample_fan requires t > 0");
    let xi = (x - fan.origin) / t;
    // Waves can share a speed (a contact flanked by rarefactions); scanning
    // left to right and letting later waves overwrite keeps the right trace.
    let mut value = fan.left;
    for wave in &fan.waves {
        let (lo, hi) = wave.span();
        if xi < lo {
            return value;
        }
        value = if xi <= hi {
            match *wave {
                Wave::Shock { to, .. } | Wave::Contact { to, .. } => to,
                Wave::Rarefaction { from, to, .. } => {
                    fan.flux.derivative_inverse_clamped(xi, from, to)
                }
            }
        } else {
            wave.states().1
        };
    }
    value
}

/// Rankine-Hugoniot speed and entropy production rate of the jump
/// `u- -> u+`: `s = [f]/[u]`, `D_t = [q] - s [η]` (production per unit time
/// along the discontinuity line). `D_t <= 0` for admissible jumps, `> 0` for
/// under-compressive ones.
pub fn production_rate(pair: &EntropyPair, u_minus: f64, u_plus: f64) -> (f64, f64) {
    assert!(u_minus != u_plus, "production_rate requires distinct states");
    let s = (pair.f(u_plus) - pair.f(u_minus)) / (u_plus - u_minus);
    let d = (pair.q(u_plus) - pair.q(u_minus)) - s * (pair.eta(u_plus) - pair.eta(u_minus));
    (s, d)
}

/// How a single discontinuity is classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    LaxShock,
    Contact,
    UnderCompressive,
    /// The flux failed a (cheap) convexity probe; no classification applies.
    NonConvexReject,
}

/// Classification of one jump, with the data that decided it.
#[derive(Debug, Clone, Serialize)]
pub struct DiscontinuityReport {
    pub speed: f64,
    pub left: f64,
    pub right: f64,
    /// `D_t = [q] - s [η]`.
    pub production_rate: f64,
    pub classification: Classification,
}

/// Classify the jump `u- -> u+` by its production sign, cross-checked
/// against the Lax inequality `f'(u- - 0) > f'(u+ + 0)`; the two tests must
/// agree off the contact set, and a disagreement is surfaced as an internal
/// error rather than patched over.
pub fn classify(
    pair: &EntropyPair,
    u_minus: f64,
    u_plus: f64,
) -> Result<DiscontinuityReport, WaveError> {
    if u_minus == u_plus {
        return Err(WaveError::DegenerateJump(u_minus));
    }
    let flux = pair.flux();
    if !quick_convex_probe(flux) {
        let (s, d) = production_rate(pair, u_minus, u_plus);
        return Ok(DiscontinuityReport {
            speed: s,
            left: u_minus,
            right: u_plus,
            production_rate: d,
            classification: Classification::NonConvexReject,
        });
    }

    let (s, d) = production_rate(pair, u_minus, u_plus);
    let tol = 1e-10 * (1.0 + u_minus.abs() + u_plus.abs());
    let in_contact_set = flux.degeneracy_interval(u_plus, Side::Minus).contains(u_minus)
        || flux.degeneracy_interval(u_plus, Side::Plus).contains(u_minus);
    let lax = flux.d_onesided(u_minus, Side::Minus) > flux.d_onesided(u_plus, Side::Plus);

    let classification = if in_contact_set {
        if d.abs() <= tol {
            Classification::Contact
        } else {
            return Err(WaveError::InternalEquivalenceViolation { um: u_minus, up: u_plus, d, lax });
        }
    } else if d < -tol {
        if lax {
            Classification::LaxShock
        } else {
            return Err(WaveError::InternalEquivalenceViolation { um: u_minus, up: u_plus, d, lax });
        }
    } else if d > tol {
        if !lax {
            Classification::UnderCompressive
        } else {
            return Err(WaveError::InternalEquivalenceViolation { um: u_minus, up: u_plus, d, lax });
        }
    } else {
        return Err(WaveError::InternalEquivalenceViolation { um: u_minus, up: u_plus, d, lax });
    };

    Ok(DiscontinuityReport {
        speed: s,
        left: u_minus,
        right: u_plus,
        production_rate: d,
        classification,
    })
}

fn quick_convex_probe(flux: &ConvexFun) -> bool {
    match flux.exact() {
        Some(pw) => {
            pw.pieces().iter().all(|p| p.a >= 0.0)
                && pw.breakpoints().iter().enumerate().all(|(i, &b)| {
                    let left = 2.0 * pw.pieces()[i].a * b + pw.pieces()[i].c;
                    let right = 2.0 * pw.pieces()[i + 1].a * b + pw.pieces()[i + 1].c;
                    left <= right
                })
        }
        None => true,
    }
}

/// Budget check for the under-compressive jump: the production
/// `D = ∫ η'(ξ)(f'(ξ) - s0) dξ` over `[u-, u+]` must satisfy
/// `0 < D <= c0/2` for the jump to fit under a measure with linear ball
/// growth `c0 r`.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetReport {
    pub s0: f64,
    pub d: f64,
    pub c0: f64,
    pub satisfies_budget: bool,
}

pub fn undercompressive_budget(
    pair: &EntropyPair,
    u_minus: f64,
    u_plus: f64,
    c0: f64,
) -> Result<BudgetReport, WaveError> {
    let flux = pair.flux();
    if !(u_plus > u_minus
        && flux.d_onesided(u_plus, Side::Minus) > flux.d_onesided(u_minus, Side::Plus))
    {
        return Err(WaveError::NotUnderCompressive { um: u_minus, up: u_plus });
    }
    let (s0, d) = if pair.exact_repr() {
        // Closed form: the integral telescopes to [q] - s0 [η].
        production_rate(pair, u_minus, u_plus)
    } else {
        let s0 = (pair.f(u_plus) - pair.f(u_minus)) / (u_plus - u_minus);
        let d = crate::quad::integrate(
            |xi| {
                pair.entropy().d_onesided(xi, Side::Plus)
                    * (pair.flux().d_onesided(xi, Side::Plus) - s0)
            },
            u_minus,
            u_plus,
            1e-10,
        );
        (s0, d)
    };
    Ok(BudgetReport { s0, d, c0, satisfies_budget: d > 0.0 && d <= 0.5 * c0 })
}

fn next_flat_start(flux: &ConvexFun, v: f64, u_right: f64) -> f64 {
    if let Some(pw) = flux.exact() {
        let mut i = pw.breakpoints().partition_point(|&b| b <= v);
        loop {
            if pw.pieces()[i].a == 0.0 {
                let lo = if i == 0 { f64::NEG_INFINITY } else { pw.breakpoints()[i - 1] };
                return lo.max(v).min(u_right);
            }
            if i == pw.breakpoints().len() {
                return u_right;
            }
            let hi = pw.breakpoints()[i];
            if hi >= u_right {
                return u_right;
            }
            i += 1;
        }
    }
    // Analytic backends: strict by validation, so no interior flat stretch.
    u_right
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::p_term;
    use rand::{Rng, SeedableRng};

    #[test]
    fn burgers_shock_and_rarefaction() {
        let b = ConvexFun::burgers();
        let shock = solve_riemann(&b, 1.0, 0.0).unwrap();
        assert_eq!(shock.waves().len(), 1);
        assert_eq!(shock.waves()[0], Wave::Shock { speed: 0.5, from: 1.0, to: 0.0 });
        assert!(shock.admissible());

        let fan = solve_riemann(&b, 0.0, 1.0).unwrap();
        assert_eq!(
            fan.waves()[0],
            Wave::Rarefaction { xi_lo: 0.0, xi_hi: 1.0, from: 0.0, to: 1.0 }
        );

        let constant = solve_riemann(&b, 0.7, 0.7).unwrap();
        assert!(constant.waves().is_empty());
    }

    #[test]
    fn plateau_composite_fan() {
        let fan = solve_riemann(&ConvexFun::plateau(), -1.0, 2.0).unwrap();
        assert_eq!(fan.waves().len(), 3);
        assert_eq!(
            fan.waves()[0],
            Wave::Rarefaction { xi_lo: -1.0, xi_hi: 0.0, from: -1.0, to: 0.0 }
        );
        assert_eq!(fan.waves()[1], Wave::Contact { speed: 0.0, from: 0.0, to: 1.0 });
        assert_eq!(
            fan.waves()[2],
            Wave::Rarefaction { xi_lo: 0.0, xi_hi: 1.0, from: 1.0, to: 2.0 }
        );
    }

    #[test]
    fn plateau_downward_contact() {
        let fan = solve_riemann(&ConvexFun::plateau(), 1.0, 0.0).unwrap();
        assert_eq!(fan.waves()[0], Wave::Contact { speed: 0.0, from: 1.0, to: 0.0 });
    }

    #[test]
    fn fan_sampling() {
        let b = ConvexFun::burgers();
        let shock = solve_riemann(&b, 1.0, 0.0).unwrap();
        assert_eq!(sample_fan(&shock, 1.0, 0.25), 1.0);
        assert_eq!(sample_fan(&shock, 1.0, 0.75), 0.0);
        // Right trace exactly on the jump.
        assert_eq!(sample_fan(&shock, 1.0, 0.5), 0.0);

        let fan = solve_riemann(&b, 0.0, 1.0).unwrap();
        assert!((sample_fan(&fan, 2.0, 1.0) - 0.5).abs() < 1e-12);

        let constant = solve_riemann(&b, 0.3, 0.3).unwrap();
        assert_eq!(sample_fan(&constant, 5.0, -7.0), 0.3);

        let composite = solve_riemann(&ConvexFun::plateau(), -1.0, 2.0).unwrap();
        // At xi = 0 the right trace of the embedded contact.
        assert_eq!(sample_fan(&composite, 1.0, 0.0), 1.0);
        assert!((sample_fan(&composite, 1.0, -0.5) + 0.5).abs() < 1e-12);
        assert!((sample_fan(&composite, 2.0, 1.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn production_rates() {
        let pair = EntropyPair::burgers();
        let (s, d) = production_rate(&pair, 1.0, 0.0);
        assert!((s - 0.5).abs() < 1e-15);
        assert!((d + 1.0 / 12.0).abs() < 1e-15);

        let (s, d) = production_rate(&pair, 0.0, 1.0);
        assert!((s - 0.5).abs() < 1e-15);
        assert!((d - 1.0 / 12.0).abs() < 1e-15);

        let flat = EntropyPair::new(ConvexFun::plateau(), ConvexFun::burgers()).unwrap();
        let (s, d) = production_rate(&flat, 1.0, 0.0);
        assert_eq!((s, d), (0.0, 0.0));
    }

    #[test]
    fn classification_matches_hand_cases() {
        let pair = EntropyPair::burgers();
        assert_eq!(classify(&pair, 1.0, 0.0).unwrap().classification, Classification::LaxShock);
        assert_eq!(
            classify(&pair, 0.0, 1.0).unwrap().classification,
            Classification::UnderCompressive
        );
        let flat = EntropyPair::new(ConvexFun::plateau(), ConvexFun::burgers()).unwrap();
        assert_eq!(classify(&flat, 1.0, 0.0).unwrap().classification, Classification::Contact);
        assert!(matches!(classify(&pair, 0.5, 0.5), Err(WaveError::DegenerateJump(_))));
    }

    #[test]
    fn budget_hand_cases() {
        let pair = EntropyPair::burgers();
        let report = undercompressive_budget(&pair, 0.0, 1.0, 1.0).unwrap();
        assert!((report.d - 1.0 / 12.0).abs() < 1e-15);
        assert!(report.satisfies_budget);

        let tight = undercompressive_budget(&pair, 0.0, 1.0, 0.1).unwrap();
        assert!(!tight.satisfies_budget);

        let flat = EntropyPair::new(ConvexFun::plateau(), ConvexFun::burgers()).unwrap();
        assert!(matches!(
            undercompressive_budget(&flat, 0.0, 1.0, 1.0),
            Err(WaveError::NotUnderCompressive { .. })
        ));
    }

    #[test]
    fn budget_quadrature_route_matches_closed_form() {
        let pair =
            EntropyPair::new(ConvexFun::power(2.0).unwrap(), ConvexFun::burgers()).unwrap();
        let report = undercompressive_budget(&pair, 0.2, 1.1, 1.0).unwrap();
        let (_, d_closed) = production_rate(&pair, 0.2, 1.1);
        assert!((report.d - d_closed).abs() < 1e-9);
    }

    #[test]
    fn rankine_hugoniot_and_speed_order_on_random_fans() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let flux = crate::gen::random_convex(&mut rng, 3.0);
            let ul = rng.gen_range(-3.0..3.0);
            let ur = rng.gen_range(-3.0..3.0);
            let fan = solve_riemann(&flux, ul, ur).unwrap();
            let mut prev_hi = f64::NEG_INFINITY;
            for w in fan.waves() {
                let (lo, hi) = w.span();
                assert!(lo >= prev_hi - 1e-12, "wave speeds must be nondecreasing");
                assert!(lo <= hi + 1e-12);
                prev_hi = hi;
                if let Wave::Shock { speed, from, to } | Wave::Contact { speed, from, to } = *w {
                    let jump_f = flux.eval(to) - flux.eval(from);
                    let jump_u = to - from;
                    assert!(
                        (speed * jump_u - jump_f).abs() <= 1e-12 * (1.0 + jump_f.abs()),
                        "Rankine-Hugoniot violated"
                    );
                }
            }
            // Strictly convex fluxes admit only downward jumps.
            if fan.flux().exact().unwrap().pieces().iter().all(|p| p.a > 0.0) {
                for w in fan.waves() {
                    if let Wave::Shock { from, to, .. } | Wave::Contact { from, to, .. } = *w {
                        assert!(to < from, "admissible jump must go down for strict flux");
                    }
                }
            }
        }
    }

    #[test]
    fn production_sign_equals_lax_condition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let pair = crate::gen::random_strict_pair(&mut rng, 3.0);
            let um: f64 = rng.gen_range(-4.0..4.0);
            let mut up: f64 = rng.gen_range(-4.0..4.0);
            if (up - um).abs() < 0.05 {
                up = um + 0.05_f64.copysign(up - um + 0.01);
            }
            let (_, d) = production_rate(&pair, um, up);
            let lax = pair.flux().d_onesided(um, Side::Minus)
                > pair.flux().d_onesided(up, Side::Plus);
            assert_eq!(d < 0.0, lax, "sign equivalence failed: um={um} up={up} d={d}");
            // P-consistency: (u+ - u-) D_t = P(u+, u-) >= 0.
            let p = p_term(&pair, up, um);
            let lhs = (up - um) * d;
            assert!((lhs - p).abs() <= 1e-10 * p.abs().max(1.0));
            assert!(p >= 0.0);
        }
    }

    #[test]
    fn undercompressive_constructor() {
        let fan = undercompressive_fan(&ConvexFun::burgers(), 0.0, 1.0).unwrap();
        assert!(!fan.admissible());
        assert_eq!(fan.waves()[0], Wave::Shock { speed: 0.5, from: 0.0, to: 1.0 });
        assert!(matches!(
            undercompressive_fan(&ConvexFun::burgers(), 1.0, 0.0),
            Err(WaveError::NotUnderCompressive { .. })
        ));
    }

    #[test]
    fn fan_json_shape() {
        let fan = solve_riemann(&ConvexFun::plateau(), -1.0, 2.0).unwrap();
        let json = serde_json::to_value(fan.json()).unwrap();
        assert_eq!(json["left"], -1.0);
        assert_eq!(json["waves"][1]["type"], "contact");
        assert_eq!(json["waves"][0]["range"][0], -1.0);
        assert_eq!(json["admissible"], true);
    }
}
