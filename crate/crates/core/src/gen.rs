//! Seeded random generators for convex functions, entropy pairs, and
//! discrete measures. Shared by the property-test suites and the
//! `bilinear --selftest` CLI entry point.

use rand::Rng;

use crate::bilinear::DiscreteMeasure;
use crate::convexfn::{ConvexFun, QuadPiece};
use crate::entropypair::EntropyPair;

/// Random convex piecewise quadratic; affine pieces appear with probability
/// about 1/4, so degeneracy intervals get exercised.
pub fn random_convex<R: Rng>(rng: &mut R, scale: f64) -> ConvexFun {
    random_piecewise(rng, scale, true)
}

/// Random strictly convex piecewise quadratic (every piece curves upward).
pub fn random_strictly_convex<R: Rng>(rng: &mut R, scale: f64) -> ConvexFun {
    random_piecewise(rng, scale, false)
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else if x.is_sign_positive() {
        f64::from_bits(x.to_bits() + 1)
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

fn random_piecewise<R: Rng>(rng: &mut R, scale: f64, allow_flat: bool) -> ConvexFun {
    let n_breaks = rng.gen_range(0..=3);
    let mut breakpoints: Vec<f64> = (0..n_breaks).map(|_| rng.gen_range(-scale..scale)).collect();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-3);

    let draw_a = |rng: &mut R| {
        if allow_flat && rng.gen_bool(0.25) {
            0.0
        } else {
            rng.gen_range(0.1..1.5)
        }
    };

    let mut pieces = Vec::with_capacity(breakpoints.len() + 1);
    let a0 = draw_a(rng);
    let c0 = rng.gen_range(-2.0..2.0);
    let d0 = rng.gen_range(-1.0..1.0);
    pieces.push(QuadPiece { a: a0, c: c0, d: d0 });

    for &b in &breakpoints {
        let prev = *pieces.last().unwrap();
        let left_slope = 2.0 * prev.a * b + prev.c;
        let kink = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..1.0) };
        let a = draw_a(rng);
        let mut c = left_slope + kink - 2.0 * a * b;
        // Rounding of c can leave the realized slope a few ulps below the
        // left slope; nudge until the derivative jump is truly nonnegative.
        while 2.0 * a * b + c < left_slope {
            let target = c + (left_slope - (2.0 * a * b + c));
            c = if target > c { target } else { next_up(c) };
        }
        let d = prev.a * b * b + prev.c * b + prev.d - (a * b * b + c * b);
        pieces.push(QuadPiece { a, c, d });
    }

    let strict = !allow_flat;
    ConvexFun::piecewise_quadratic(breakpoints, pieces, strict)
        .expect("generated function is continuous and ordered by construction")
}

/// Random pair: convex flux (flat pieces allowed) with strictly convex
/// entropy.
pub fn random_pair<R: Rng>(rng: &mut R, scale: f64) -> EntropyPair {
    let flux = random_convex(rng, scale);
    let entropy = random_strictly_convex(rng, scale);
    EntropyPair::new(flux, entropy).expect("generated pair satisfies the constructor contract")
}

/// Random pair with strictly convex flux as well (no contact sets).
pub fn random_strict_pair<R: Rng>(rng: &mut R, scale: f64) -> EntropyPair {
    let flux = random_strictly_convex(rng, scale);
    let entropy = random_strictly_convex(rng, scale);
    EntropyPair::new(flux, entropy).expect("generated pair satisfies the constructor contract")
}

/// Random discrete probability measure with up to `max_atoms` atoms in
/// `[-range, range]`.
pub fn random_measure<R: Rng>(rng: &mut R, max_atoms: usize, range: f64) -> DiscreteMeasure {
    let n = rng.gen_range(1..=max_atoms.max(1));
    let locations: Vec<f64> = (0..n).map(|_| rng.gen_range(-range..range)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms: Vec<(f64, f64)> =
        locations.into_iter().zip(raw.into_iter().map(|w| w / total)).collect();
    DiscreteMeasure::new(atoms).expect("weights normalized by construction")
}
