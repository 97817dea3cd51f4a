//! Entropy-production diagnostics: the ball statistic `μ(B_r)/r` whose
//! vanishing selects the viscosity solution, exact on wave fans and
//! estimated on grids; Kruzkov residuals; Oleinik slope checks; Hölder
//! exponents and seminorms.
//!
//! `μ` is taken as the minimal dominating non-negative measure: the positive
//! part of the production distribution. Admissibility depends only on
//! whether that positive part puts linear-in-`r` mass on small balls.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::convexfn::ConvexFun;
use crate::entropypair::{EntropyPair, KruzkovPair};
use crate::solvers::{godunov_interface_state, GridSolution};
use crate::waves::{production_rate, Wave, WaveFan};

#[derive(Debug, Error)]
pub enum MeterError {
    #[error("ball center must have t > 0, got t = {0}")]
    CenterNotPositiveTime(f64),
    #[error("need at least one radius")]
    NoRadii,
    #[error("smallest radius {radius} under-resolves the grid (need >= 4 dx = {min})")]
    ResolutionInsufficient { radius: f64, min: f64 },
    #[error("solution stores fewer than two time rows; residuals need steps")]
    TooFewRows,
    #[error("Oleinik check requires a uniformly convex bound c > 0, got {0}")]
    NonPositiveC(f64),
    #[error("solution has no potential samples; run reconstruct_potential first")]
    MissingPotential,
    #[error("Hölder claim requires beta > 0, got {0}")]
    NonPositiveBeta(f64),
    #[error("Hölder claim requires gamma >= 1, got {0}")]
    GammaBelowOne(f64),
}

/// Outcome of a ball diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    Vanishing,
    PositiveLowerBound(f64),
}

/// The sequence `μ(B_r)/r` over a decreasing radius list at one center.
#[derive(Debug, Clone, Serialize)]
pub struct BallDiagnostic {
    pub center: (f64, f64),
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Smallest-radius value: the proxy for `liminf_{r↓0} μ(B_r)/r`.
    pub liminf_estimate: f64,
    pub verdict: Verdict,
    pub rtol: f64,
}

fn sorted_radii(radii: &[f64]) -> Result<Vec<f64>, MeterError> {
    if radii.is_empty() {
        return Err(MeterError::NoRadii);
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(rs)
}

fn make_diagnostic(center: (f64, f64), radii: Vec<f64>, values: Vec<f64>, rtol: f64) -> BallDiagnostic {
    let liminf_estimate = *values.last().unwrap();
    let verdict = if liminf_estimate <= rtol {
        Verdict::Vanishing
    } else {
        let floor = values.iter().cloned().fold(f64::INFINITY, f64::min);
        Verdict::PositiveLowerBound(floor)
    };
    BallDiagnostic { center, radii, values, liminf_estimate, verdict, rtol }
}

/// Exact ball statistic for a wave fan. The production of a fan concentrates
/// on its jump lines `x = origin + s t`; a line crossing `B_r` contributes
/// its positive production rate times the t-extent of the chord
/// (Euclidean chord length divided by `sqrt(1 + s^2)`). Rarefaction regions
/// contribute nothing.
pub fn fan_measure(
    pair: &EntropyPair,
    fan: &WaveFan,
    center: (f64, f64),
    radii: &[f64],
) -> Result<BallDiagnostic, MeterError> {
    let (t_bar, x_bar) = center;
    if !(t_bar > 0.0) {
        return Err(MeterError::CenterNotPositiveTime(t_bar));
    }
    let rs = sorted_radii(radii)?;

    // Positive production rate and line geometry per jump.
    let mut lines = Vec::new();
    for wave in fan.waves() {
        if let Wave::Shock { speed, from, to } | Wave::Contact { speed, from, to } = *wave {
            let (_, d) = production_rate(pair, from, to);
            if d > 0.0 {
                lines.push((speed, d));
            }
        }
    }

    let values = rs
        .iter()
        .map(|&r| {
            let mut mu = 0.0;
            for &(s, d) in &lines {
                let slant = (1.0 + s * s).sqrt();
                let dist = (x_bar - fan.origin() - s * t_bar).abs() / slant;
                if dist < r {
                    let chord = 2.0 * (r * r - dist * dist).sqrt();
                    mu += d * chord / slant;
                }
            }
            mu / r
        })
        .collect();

    Ok(make_diagnostic(center, rs, values, 1e-9))
}

/// Ball statistic estimated from a grid solution.
///
/// The per-cell residual is
/// `R = (η(u_i^{n+1}) - η(u_i^n))/Δt + (q̂_{i+1/2} - q̂_{i-1/2})/Δx`
/// with the numerical entropy flux `q̂ = q` at the Godunov interface state.
/// Signed residual integrals are coarse-grained onto blocks of side
/// `H ~ sqrt(Δx r)` before the positive part is taken: the block scale
/// balances the `O(H/r)` localization error against the `O(Δx/H)`
/// consistency error of sampled discontinuities, matching the
/// `O((Δx/r)^{1/2})` tolerance this estimator is held to.
pub fn grid_measure(
    pair: &EntropyPair,
    sol: &GridSolution,
    center: (f64, f64),
    radii: &[f64],
) -> Result<BallDiagnostic, MeterError> {
    let (t_bar, x_bar) = center;
    if !(t_bar > 0.0) {
        return Err(MeterError::CenterNotPositiveTime(t_bar));
    }
    let rs = sorted_radii(radii)?;
    let dx = sol.grid.dx;
    let r_min = *rs.last().unwrap();
    if r_min < 4.0 * dx {
        return Err(MeterError::ResolutionInsufficient { radius: r_min, min: 4.0 * dx });
    }
    if sol.t_grid.len() < 2 {
        return Err(MeterError::TooFewRows);
    }

    let n_cells = sol.grid.n_cells;
    let n_steps = sol.t_grid.len() - 1;
    let dt_med = (sol.t_grid[n_steps] - sol.t_grid[0]) / n_steps as f64;

    let mut values = Vec::with_capacity(rs.len());
    for &r in &rs {
        let h = (dx * r).sqrt().clamp(2.0 * dx, 0.5 * r);
        let m_x = (h / dx).round().max(2.0) as usize;
        let m_t = (h / dt_med).round().max(1.0) as usize;

        // Bounding box of the disk, padded by one block.
        let t0 = t_bar - r - m_t as f64 * dt_med;
        let t1 = t_bar + r + m_t as f64 * dt_med;
        let x0 = x_bar - r - m_x as f64 * dx;
        let x1 = x_bar + r + m_x as f64 * dx;

        let i_lo = (((x0 - sol.grid.x_lo) / dx).floor().max(0.0)) as usize;
        let i_hi = (((x1 - sol.grid.x_lo) / dx).ceil().max(0.0) as usize).min(n_cells);

        // block key -> (signed sum, block rectangle)
        let mut blocks: std::collections::BTreeMap<(usize, usize), f64> =
            std::collections::BTreeMap::new();

        for n in 0..n_steps {
            let ta = sol.t_grid[n];
            let tb = sol.t_grid[n + 1];
            if tb < t0 || ta > t1 {
                continue;
            }
            let dt = tb - ta;
            if dt <= 0.0 {
                continue;
            }
            let row_now = &sol.u[n];
            let row_next = &sol.u[n + 1];
            for i in i_lo..i_hi {
                let left = if i == 0 { row_now[0] } else { row_now[i - 1] };
                let right = row_now[i];
                let up = if i + 1 == n_cells { row_now[n_cells - 1] } else { row_now[i + 1] };
                let q_left = pair.q(godunov_interface_state(pair.flux(), left, right));
                let q_right = pair.q(godunov_interface_state(pair.flux(), right, up));
                let residual = (pair.eta(row_next[i]) - pair.eta(row_now[i])) / dt
                    + (q_right - q_left) / dx;
                *blocks.entry((n / m_t, i / m_x)).or_insert(0.0) += residual * dx * dt;
            }
        }

        let mut mu = 0.0;
        for (&(bt, bx), &sum) in &blocks {
            let ta = sol.t_grid[(bt * m_t).min(n_steps)];
            let tb = sol.t_grid[((bt + 1) * m_t).min(n_steps)];
            let xa = sol.grid.node(bx * m_x);
            let xb = sol.grid.node(((bx + 1) * m_x).min(n_cells));
            let nearest_t = t_bar.clamp(ta, tb);
            let nearest_x = x_bar.clamp(xa, xb);
            let dist2 = (nearest_t - t_bar).powi(2) + (nearest_x - x_bar).powi(2);
            if dist2 <= r * r {
                mu += sum.max(0.0);
            }
        }
        values.push(mu / r);
    }

    let rtol = 1e-2 * (dx / r_min).sqrt();
    Ok(make_diagnostic(center, rs, values, rtol))
}

/// Max positive discrete Kruzkov residual over all cells, steps, and `k` in
/// `k_grid`, with the numerical entropy flux `q_k` evaluated at the Godunov
/// interface state. Intended for Godunov-sourced solutions, where the cell
/// entropy inequality keeps it at rounding level; on a sampled
/// non-entropy solution it blows up near the inadmissible jump, which is the
/// point.
pub fn kruzkov_residual(flux: &ConvexFun, sol: &GridSolution, k_grid: &[f64]) -> Result<f64, MeterError> {
    if sol.t_grid.len() < 2 {
        return Err(MeterError::TooFewRows);
    }
    let n_cells = sol.grid.n_cells;
    let dx = sol.grid.dx;
    let pairs: Vec<KruzkovPair> = k_grid.iter().map(|&k| KruzkovPair::new(flux.clone(), k)).collect();

    let mut worst: f64 = 0.0;
    let mut q_now: Vec<f64> = Vec::with_capacity(n_cells + 1);
    for n in 0..sol.t_grid.len() - 1 {
        let dt = sol.t_grid[n + 1] - sol.t_grid[n];
        if dt <= 0.0 {
            continue;
        }
        let row_now = &sol.u[n];
        let row_next = &sol.u[n + 1];
        // Interface states are k-independent.
        let states: Vec<f64> = (0..=n_cells)
            .map(|j| {
                let left = if j == 0 { row_now[0] } else { row_now[j - 1] };
                let right = if j == n_cells { row_now[n_cells - 1] } else { row_now[j] };
                godunov_interface_state(flux, left, right)
            })
            .collect();
        for kp in &pairs {
            q_now.clear();
            q_now.extend(states.iter().map(|&s| kp.q(s)));
            for i in 0..n_cells {
                let residual = (kp.eta(row_next[i]) - kp.eta(row_now[i])) / dt
                    + (q_now[i + 1] - q_now[i]) / dx;
                if residual > worst {
                    worst = residual;
                }
            }
        }
    }
    Ok(worst)
}

/// Per-time Oleinik excess report.
#[derive(Debug, Clone, Serialize)]
pub struct OleinikRow {
    pub t: f64,
    /// `max (u(x2)-u(x1))/(x2-x1) - 1/(ct)` over grid pairs.
    pub max_excess: f64,
    /// Discretization allowance `10 Δx / t`.
    pub allowance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OleinikReport {
    pub rows: Vec<OleinikRow>,
    /// `max(excess - allowance)` over all requested times; `<= 0` means the
    /// one-sided bound holds everywhere.
    pub max_violation: f64,
}

/// Check Oleinik's one-sided slope bound `(u(t,x2)-u(t,x1))/(x2-x1) <= 1/(ct)`
/// for a uniformly convex flux with `inf f'' = c > 0`, over all grid pairs at
/// the requested times, with a `10 Δx / t` discretization allowance.
pub fn oleinik_check(sol: &GridSolution, c: f64, t_list: &[f64]) -> Result<OleinikReport, MeterError> {
    if !(c > 0.0) {
        return Err(MeterError::NonPositiveC(c));
    }
    let dx = sol.grid.dx;
    let mut rows = Vec::with_capacity(t_list.len());
    let mut max_violation = f64::NEG_INFINITY;
    for &t in t_list {
        let row = sol.nearest_time_index(t).map_err(|_| MeterError::CenterNotPositiveTime(t))?;
        let t_actual = sol.t_grid[row];
        if !(t_actual > 0.0) {
            return Err(MeterError::CenterNotPositiveTime(t_actual));
        }
        let u = &sol.u[row];
        // The worst difference quotient over all pairs: for each gap length
        // it is governed by the max over pairwise slopes; scanning all pairs
        // is affordable at desk scale and exact.
        let mut max_excess = f64::NEG_INFINITY;
        for i in 0..u.len() {
            for j in (i + 1)..u.len() {
                let slope = (u[j] - u[i]) / ((j - i) as f64 * dx);
                if slope > max_excess {
                    max_excess = slope;
                }
            }
        }
        let max_excess = max_excess - 1.0 / (c * t_actual);
        let allowance = 10.0 * dx / t_actual;
        max_violation = max_violation.max(max_excess - allowance);
        rows.push(OleinikRow { t: t_actual, max_excess, allowance });
    }
    Ok(OleinikReport { rows, max_violation })
}

/// Hölder exponents of the potential `w` in space and time:
/// `γ1 = β/(β+1)`, `γ2 = β/(γ(2β+1))`, for entropy growth exponent `β > 0`
/// and domination exponent `γ >= 1`. `alpha` rides along for context (it
/// determines γ in the power-law case) but does not enter the formulas.
pub fn holder_exponents(alpha: f64, beta: f64, gamma: f64) -> Result<(f64, f64), MeterError> {
    let _ = alpha;
    if !(beta > 0.0) {
        return Err(MeterError::NonPositiveBeta(beta));
    }
    if !(gamma >= 1.0) {
        return Err(MeterError::GammaBelowOne(gamma));
    }
    Ok((beta / (beta + 1.0), beta / (gamma * (2.0 * beta + 1.0))))
}

/// γ for power-law growth `f' ~ |u|^α`, `η' ~ |u|^β`: `max{(α+1)/(β+1), 1}`.
pub fn power_law_gamma(alpha: f64, beta: f64) -> f64 {
    ((alpha + 1.0) / (beta + 1.0)).max(1.0)
}

/// A pair of `(t, x)` points for seminorm sampling.
pub type PointPair = ((f64, f64), (f64, f64));

/// Empirical Hölder seminorm
/// `max |w(t',x') - w(t,x)| / (|t'-t|^γ2 + |x'-x|^γ1)` over the sample pairs.
pub fn holder_seminorm(
    sol: &GridSolution,
    gamma1: f64,
    gamma2: f64,
    sample_pairs: &[PointPair],
) -> Result<f64, MeterError> {
    if sol.w.is_none() {
        return Err(MeterError::MissingPotential);
    }
    let mut worst: f64 = 0.0;
    for &((t, x), (tp, xp)) in sample_pairs {
        let denom = (tp - t).abs().powf(gamma2) + (xp - x).abs().powf(gamma1);
        if denom == 0.0 {
            continue;
        }
        let w0 = sol.w_at(t, x).ok_or(MeterError::MissingPotential)?;
        let w1 = sol.w_at(tp, xp).ok_or(MeterError::MissingPotential)?;
        let quotient = (w1 - w0).abs() / denom;
        if quotient > worst {
            worst = quotient;
        }
    }
    Ok(worst)
}

/// Random `(t, x)` pairs inside a compact box, for the seminorm estimate.
pub fn holder_sample_pairs<R: Rng>(
    rng: &mut R,
    t_range: (f64, f64),
    x_range: (f64, f64),
    n: usize,
) -> Vec<PointPair> {
    (0..n)
        .map(|_| {
            let p = (rng.gen_range(t_range.0..t_range.1), rng.gen_range(x_range.0..x_range.1));
            let q = (rng.gen_range(t_range.0..t_range.1), rng.gen_range(x_range.0..x_range.1));
            (p, q)
        })
        .collect()
}

/// Assembled Hölder study for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct HolderReport {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Seminorm per refinement level, coarsest first.
    pub seminorms: Vec<f64>,
    pub bounded_flag: bool,
}
