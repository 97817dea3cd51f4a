//! Two independent solution generators plus the potential bookkeeping that
//! links them: a Hopf-Lax variational solver for `w_t + f(w_x) = 0`
//! (recovering `u = w_x` from one-sided differences) and a Godunov
//! finite-volume solver for `u_t + f(u)_x = 0`, with `w` reconstructed from
//! `w_x = u`, `w_t = -f(u)`.

use std::sync::Arc;

use thiserror::Error;

use crate::convexfn::{ConvexFun, DerivativeInverse, Side};
use crate::waves::{sample_fan, Wave, WaveFan};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("feasible cone is empty at (t = {t}, x = {x}); enlarge the x-window")]
    EmptyFeasibleCone { t: f64, x: f64 },
    #[error("window [{x_lo}, {x_hi}] does not contain the domain of dependence [{needed_lo}, {needed_hi}]")]
    DomainOfDependence { x_lo: f64, x_hi: f64, needed_lo: f64, needed_hi: f64 },
    #[error("time stepping would exceed {0} steps; refine parameters instead")]
    StepLimitExceeded(usize),
    #[error("requested time {0} lies outside the stored time grid")]
    TimeOutsideGrid(f64),
    #[error("solutions live on incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("invalid parameter: {0}")]
    BadParameter(&'static str),
}

/// Which generator produced a grid solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionSource {
    HopfLax,
    Godunov,
    AnalyticFanSampling,
}

/// Uniform cell grid `[x_lo, x_lo + n_cells dx]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub x_lo: f64,
    pub dx: f64,
    pub n_cells: usize,
}

impl Grid1d {
    pub fn from_window(x_lo: f64, x_hi: f64, dx: f64) -> Result<Self, SolverError> {
        if !(dx > 0.0 && dx.is_finite() && x_hi > x_lo && x_lo.is_finite() && x_hi.is_finite()) {
            return Err(SolverError::BadParameter("window must be finite with dx > 0"));
        }
        let n_cells = ((x_hi - x_lo) / dx - 1e-9).ceil().max(2.0) as usize;
        Ok(Self { x_lo, dx, n_cells })
    }

    pub fn x_hi(&self) -> f64 {
        self.x_lo + self.n_cells as f64 * self.dx
    }

    pub fn node(&self, j: usize) -> f64 {
        self.x_lo + j as f64 * self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx
    }
}

/// Cell-averaged `u` on a `(t, x)` lattice, with optional node samples of
/// the potential `w`.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub t_grid: Vec<f64>,
    pub grid: Grid1d,
    /// `u[row][cell]`, cell averages.
    pub u: Vec<Vec<f64>>,
    /// `w[row][node]`, `n_cells + 1` nodes per row.
    pub w: Option<Vec<Vec<f64>>>,
    pub source: SolutionSource,
    /// Accumulated `(F_right - F_left) dt` for Godunov runs; conservation
    /// holds against this boundary account.
    pub boundary_flux: Option<f64>,
}

impl GridSolution {
    pub fn nearest_time_index(&self, t: f64) -> Result<usize, SolverError> {
        let first = *self.t_grid.first().ok_or(SolverError::TimeOutsideGrid(t))?;
        let last = *self.t_grid.last().unwrap();
        if t < first - 1e-9 || t > last + 1e-9 {
            return Err(SolverError::TimeOutsideGrid(t));
        }
        let mut best = 0;
        let mut gap = f64::INFINITY;
        for (i, &ti) in self.t_grid.iter().enumerate() {
            let g = (ti - t).abs();
            if g < gap {
                gap = g;
                best = i;
            }
        }
        Ok(best)
    }

    pub fn total_mass(&self, row: usize) -> f64 {
        self.u[row].iter().sum::<f64>() * self.grid.dx
    }

    /// Bilinear interpolation of `w` in `(t, x)`.
    pub fn w_at(&self, t: f64, x: f64) -> Option<f64> {
        let w = self.w.as_ref()?;
        let n_rows = self.t_grid.len();
        let (r0, r1, theta) = if n_rows == 1 {
            (0, 0, 0.0)
        } else {
            let mut r1 = self.t_grid.partition_point(|&ti| ti < t).min(n_rows - 1);
            if r1 == 0 {
                r1 = 1;
            }
            let r0 = r1 - 1;
            let span = self.t_grid[r1] - self.t_grid[r0];
            let theta = if span > 0.0 { ((t - self.t_grid[r0]) / span).clamp(0.0, 1.0) } else { 0.0 };
            (r0, r1, theta)
        };
        let interp_x = |row: &[f64]| -> f64 {
            let s = (x - self.grid.x_lo) / self.grid.dx;
            let j = (s.floor() as isize).clamp(0, self.grid.n_cells as isize - 1) as usize;
            let frac = (s - j as f64).clamp(0.0, 1.0);
            row[j] * (1.0 - frac) + row[j + 1] * frac
        };
        Some(interp_x(&w[r0]) * (1.0 - theta) + interp_x(&w[r1]) * theta)
    }
}

/// Initial data `u(0, x)`: piecewise constant or a sampled rule, on a finite
/// support window with constant far fields outside it.
#[derive(Clone)]
pub enum InitialKind {
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    Sampled(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for InitialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::PiecewiseConstant { breaks, values } => f
                .debug_struct("PiecewiseConstant")
                .field("breaks", breaks)
                .field("values", values)
                .finish(),
            Self::Sampled(_) => f.write_str("Sampled(<rule>)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub kind: InitialKind,
    pub x_lo: f64,
    pub x_hi: f64,
    pub far_left: f64,
    pub far_right: f64,
}

impl InitialData {
    pub fn riemann(left: f64, right: f64, x0: f64, window: (f64, f64)) -> Result<Self, SolverError> {
        Self::piecewise_constant(vec![x0], vec![left, right], window)
    }

    pub fn piecewise_constant(
        breaks: Vec<f64>,
        values: Vec<f64>,
        window: (f64, f64),
    ) -> Result<Self, SolverError> {
        if values.len() != breaks.len() + 1 {
            return Err(SolverError::BadParameter("need one more value than breaks"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(SolverError::BadParameter("initial values must be finite"));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SolverError::BadParameter("breaks must be strictly increasing"));
        }
        if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
            return Err(SolverError::BadParameter("window must be finite and ordered"));
        }
        let far_left = values[0];
        let far_right = *values.last().unwrap();
        Ok(Self {
            kind: InitialKind::PiecewiseConstant { breaks, values },
            x_lo: window.0,
            x_hi: window.1,
            far_left,
            far_right,
        })
    }

    pub fn sampled(
        rule: impl Fn(f64) -> f64 + Send + Sync + 'static,
        window: (f64, f64),
    ) -> Result<Self, SolverError> {
        if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
            return Err(SolverError::BadParameter("window must be finite and ordered"));
        }
        let far_left = rule(window.0);
        let far_right = rule(window.1);
        Ok(Self {
            kind: InitialKind::Sampled(Arc::new(rule)),
            x_lo: window.0,
            x_hi: window.1,
            far_left,
            far_right,
        })
    }

    /// Point value, extended by the far fields outside the window. At a break
    /// the right value applies.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.x_lo {
            return self.far_left;
        }
        if x > self.x_hi {
            return self.far_right;
        }
        match &self.kind {
            InitialKind::PiecewiseConstant { breaks, values } => {
                values[breaks.partition_point(|&b| b <= x)]
            }
            InitialKind::Sampled(rule) => rule(x),
        }
    }

    /// Data range `(min, max)`; exact for piecewise-constant data, sampled on
    /// a fine grid otherwise.
    pub fn range(&self) -> (f64, f64) {
        match &self.kind {
            InitialKind::PiecewiseConstant { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
            InitialKind::Sampled(rule) => {
                let n = 4096;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..=n {
                    let x = self.x_lo + (self.x_hi - self.x_lo) * i as f64 / n as f64;
                    let v = rule(x);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
        }
    }

    /// Cell averages on `grid`; exact for piecewise-constant data.
    pub fn cell_averages(&self, grid: Grid1d) -> Vec<f64> {
        (0..grid.n_cells)
            .map(|i| {
                let a = grid.node(i);
                let b = grid.node(i + 1);
                match &self.kind {
                    InitialKind::PiecewiseConstant { .. } => {
                        // Integrate the step function exactly over [a, b].
                        let mut cuts = vec![a];
                        if let InitialKind::PiecewiseConstant { breaks, .. } = &self.kind {
                            for &br in breaks {
                                if br > a && br < b {
                                    cuts.push(br);
                                }
                            }
                        }
                        cuts.push(b);
                        let mut acc = 0.0;
                        for w in cuts.windows(2) {
                            acc += self.eval(0.5 * (w[0] + w[1])) * (w[1] - w[0]);
                        }
                        acc / (b - a)
                    }
                    InitialKind::Sampled(_) => {
                        // Three-point Simpson per cell.
                        (self.eval(a) + 4.0 * self.eval(0.5 * (a + b)) + self.eval(b)) / 6.0
                    }
                }
            })
            .collect()
    }
}

/// Continuous piecewise-linear initial potential `w0` with constant far-field
/// slopes; built from initial data by exact integration, anchored
/// `w0(x_lo) = 0`.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearPotential {
    xs: Vec<f64>,
    ws: Vec<f64>,
    slope_left: f64,
    slope_right: f64,
}

impl PiecewiseLinearPotential {
    pub fn from_initial(data: &InitialData, dx: f64) -> Self {
        let mut xs: Vec<f64> = match &data.kind {
            InitialKind::PiecewiseConstant { breaks, .. } => {
                let mut xs = vec![data.x_lo];
                xs.extend(breaks.iter().copied().filter(|&b| b > data.x_lo && b < data.x_hi));
                xs.push(data.x_hi);
                xs
            }
            InitialKind::Sampled(_) => {
                let n = (((data.x_hi - data.x_lo) / dx).ceil() as usize).max(2);
                (0..=n).map(|i| data.x_lo + (data.x_hi - data.x_lo) * i as f64 / n as f64).collect()
            }
        };
        xs.dedup();
        let mut ws = Vec::with_capacity(xs.len());
        ws.push(0.0);
        for i in 1..xs.len() {
            let (a, b) = (xs[i - 1], xs[i]);
            let segment = match &data.kind {
                // Constant on (a, b) by construction of the kink set.
                InitialKind::PiecewiseConstant { .. } => data.eval(0.5 * (a + b)) * (b - a),
                InitialKind::Sampled(_) => {
                    (data.eval(a) + 4.0 * data.eval(0.5 * (a + b)) + data.eval(b)) / 6.0 * (b - a)
                }
            };
            ws.push(ws[i - 1] + segment);
        }
        Self { xs, ws, slope_left: data.far_left, slope_right: data.far_right }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let first = self.xs[0];
        let last = *self.xs.last().unwrap();
        if y <= first {
            return self.ws[0] + self.slope_left * (y - first);
        }
        if y >= last {
            return *self.ws.last().unwrap() + self.slope_right * (y - last);
        }
        let i = self.xs.partition_point(|&x| x <= y);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let frac = (y - x0) / (x1 - x0);
        self.ws[i - 1] * (1.0 - frac) + self.ws[i] * frac
    }

    pub fn kinks(&self) -> &[f64] {
        &self.xs
    }

    /// Range of slopes including the far-field extensions.
    pub fn slope_range(&self) -> (f64, f64) {
        let mut lo = self.slope_left.min(self.slope_right);
        let mut hi = self.slope_left.max(self.slope_right);
        for i in 1..self.xs.len() {
            let s = (self.ws[i] - self.ws[i - 1]) / (self.xs[i] - self.xs[i - 1]);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }
}

/// Hopf-Lax solution of `w_t + f(w_x) = 0`:
/// `w(t, x) = min_y { w0(y) + t f*((x - y)/t) }`, minimized by a scan over
/// candidate `y` inside the characteristic cone, refined by ternary search
/// on the bracketing cells. `u` is recovered as node difference quotients of
/// `w`, which makes each cell value an exact average of `w_x`.
pub fn hopf_lax_solve(
    flux: &ConvexFun,
    w0: &PiecewiseLinearPotential,
    t_grid: &[f64],
    grid: Grid1d,
) -> Result<GridSolution, SolverError> {
    let (m, big_m) = w0.slope_range();
    let p_lo = flux.d_onesided(m, Side::Minus);
    let p_hi = flux.d_onesided(big_m, Side::Plus);

    let mut w_rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t >= 0.0) {
            return Err(SolverError::BadParameter("t_grid entries must be >= 0"));
        }
        let mut row = Vec::with_capacity(grid.n_cells + 1);
        if t == 0.0 {
            for j in 0..=grid.n_cells {
                row.push(w0.eval(grid.node(j)));
            }
        } else {
            for j in 0..=grid.n_cells {
                row.push(hopf_lax_value(flux, w0, t, grid.node(j), p_lo, p_hi, grid.dx)?);
            }
        }
        w_rows.push(row);
    }

    let u_rows: Vec<Vec<f64>> = w_rows
        .iter()
        .map(|row| (0..grid.n_cells).map(|i| (row[i + 1] - row[i]) / grid.dx).collect())
        .collect();

    Ok(GridSolution {
        t_grid: t_grid.to_vec(),
        grid,
        u: u_rows,
        w: Some(w_rows),
        source: SolutionSource::HopfLax,
        boundary_flux: None,
    })
}

/// Convenience wrapper building `w0` from initial data.
pub fn hopf_lax_from_initial(
    flux: &ConvexFun,
    data: &InitialData,
    t_grid: &[f64],
    grid: Grid1d,
) -> Result<GridSolution, SolverError> {
    let w0 = PiecewiseLinearPotential::from_initial(data, grid.dx);
    hopf_lax_solve(flux, &w0, t_grid, grid)
}

fn hopf_lax_value(
    flux: &ConvexFun,
    w0: &PiecewiseLinearPotential,
    t: f64,
    x: f64,
    p_lo: f64,
    p_hi: f64,
    dx: f64,
) -> Result<f64, SolverError> {
    // Characteristic cone: minimizer slopes stay inside the data range, so
    // y = x - t p with p in [p_lo, p_hi]; widened by a cell on each side.
    let y_lo = x - t * p_hi - 2.0 * dx;
    let y_hi = x - t * p_lo + 2.0 * dx;
    if !(y_lo <= y_hi) || !y_lo.is_finite() || !y_hi.is_finite() {
        return Err(SolverError::EmptyFeasibleCone { t, x });
    }

    let (sr_lo, sr_hi) = flux.slope_range();
    let objective = |y: f64| {
        let p = ((x - y) / t).clamp(sr_lo, sr_hi);
        let fs = flux.conjugate(p);
        if fs.is_finite() {
            w0.eval(y) + t * fs
        } else {
            f64::INFINITY
        }
    };

    // Candidates: uniform steps across the cone merged with the w0 kinks so
    // every bracket has at most one kink, at its center candidate.
    let mut candidates = Vec::with_capacity(((y_hi - y_lo) / dx) as usize + 8);
    let mut y = y_lo;
    while y < y_hi {
        candidates.push(y);
        y += dx;
    }
    candidates.push(y_hi);
    for &k in w0.kinks() {
        if k > y_lo && k < y_hi {
            candidates.push(k);
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    for (i, &c) in candidates.iter().enumerate() {
        let v = objective(c);
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
    }

    // Refine on the two kink-free sub-brackets around the winner.
    let center = candidates[best_idx];
    let left = if best_idx > 0 { candidates[best_idx - 1] } else { center };
    let right = if best_idx + 1 < candidates.len() { candidates[best_idx + 1] } else { center };
    let refined_left = ternary_min(&objective, left, center);
    let refined_right = ternary_min(&objective, center, right);
    Ok(best_val.min(refined_left).min(refined_right))
}

/// Minimum of a convex function on `[a, b]` by ternary search.
fn ternary_min(objective: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    if !(b > a) {
        return objective(a);
    }
    for _ in 0..120 {
        let third = (b - a) / 3.0;
        let m1 = a + third;
        let m2 = b - third;
        if objective(m1) <= objective(m2) {
            b = m2;
        } else {
            a = m1;
        }
        if b - a <= 1e-14 * (a.abs().max(b.abs()).max(1.0)) {
            break;
        }
    }
    let mid = 0.5 * (a + b);
    objective(mid).min(objective(a)).min(objective(b))
}

/// Godunov numerical flux `F(a, b)`: `min f` on `[a, b]` when `a <= b`,
/// `max f` on `[b, a]` otherwise. For convex `f` the minimum sits at the
/// sonic point clamped into the interval; the maximum at an endpoint.
pub fn godunov_flux(flux: &ConvexFun, a: f64, b: f64) -> f64 {
    flux.eval(godunov_interface_state(flux, a, b))
}

/// The state whose flux value the Godunov scheme transports through the
/// interface: the exact local Riemann trace at `ξ = 0`.
pub fn godunov_interface_state(flux: &ConvexFun, a: f64, b: f64) -> f64 {
    if a <= b {
        match flux.invert_derivative(0.0) {
            DerivativeInverse::At(s) => s.clamp(a, b),
            DerivativeInverse::BelowRange => a,
            DerivativeInverse::AboveRange => b,
        }
    } else if flux.eval(a) >= flux.eval(b) {
        a
    } else {
        b
    }
}

const MAX_STEPS: usize = 10_000_000;

/// Explicit Godunov finite-volume solve with outflow (copy) boundaries.
/// Every time step is stored. When the flux derivative vanishes on the whole
/// data range the solution is constant in time and returned exactly instead
/// of stepping.
pub fn godunov_solve(
    flux: &ConvexFun,
    data: &InitialData,
    t_end: f64,
    dx: f64,
    cfl: f64,
) -> Result<GridSolution, SolverError> {
    if !(cfl > 0.0 && cfl <= 0.95) {
        return Err(SolverError::BadParameter("cfl must lie in (0, 0.95]"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SolverError::BadParameter("t_end must be positive"));
    }
    let grid = Grid1d::from_window(data.x_lo, data.x_hi, dx)?;

    // The window must contain the domain of dependence of its data features.
    let (umin, umax) = data.range();
    let speed_bound =
        flux.d_onesided(umin, Side::Minus).abs().max(flux.d_onesided(umax, Side::Plus).abs());
    if let InitialKind::PiecewiseConstant { breaks, .. } = &data.kind {
        if let (Some(&first), Some(&last)) = (breaks.first(), breaks.last()) {
            let needed_lo = first - speed_bound * t_end;
            let needed_hi = last + speed_bound * t_end;
            if needed_lo < grid.x_lo - 1e-9 || needed_hi > grid.x_hi() + 1e-9 {
                return Err(SolverError::DomainOfDependence {
                    x_lo: grid.x_lo,
                    x_hi: grid.x_hi(),
                    needed_lo,
                    needed_hi,
                });
            }
        }
    }

    let u0 = data.cell_averages(grid);
    if speed_bound == 0.0 {
        // f is affine (constant flux value) on the data range: nothing moves.
        return Ok(GridSolution {
            t_grid: vec![0.0, t_end],
            grid,
            u: vec![u0.clone(), u0],
            w: None,
            source: SolutionSource::Godunov,
            boundary_flux: Some(0.0),
        });
    }

    let n = grid.n_cells;
    let mut t_grid = vec![0.0];
    let mut rows = vec![u0];
    let mut boundary = 0.0;
    let mut t = 0.0;
    let mut fluxes = vec![0.0; n + 1];
    let mut steps = 0usize;

    while t < t_end - 1e-14 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(SolverError::StepLimitExceeded(MAX_STEPS));
        }
        let current = rows.last().unwrap().clone();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &current {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let speed =
            flux.d_onesided(lo, Side::Minus).abs().max(flux.d_onesided(hi, Side::Plus).abs());
        let mut dt = if speed > 0.0 { cfl * grid.dx / speed } else { t_end - t };
        if t + dt > t_end {
            dt = t_end - t;
        }

        for j in 0..=n {
            let left = if j == 0 { current[0] } else { current[j - 1] };
            let right = if j == n { current[n - 1] } else { current[j] };
            fluxes[j] = godunov_flux(flux, left, right);
        }
        let mut next = current.clone();
        for i in 0..n {
            next[i] -= dt / grid.dx * (fluxes[i + 1] - fluxes[i]);
        }
        boundary += dt * (fluxes[n] - fluxes[0]);
        t += dt;
        t_grid.push(t);
        rows.push(next);
    }

    Ok(GridSolution {
        t_grid,
        grid,
        u: rows,
        w: None,
        source: SolutionSource::Godunov,
        boundary_flux: Some(boundary),
    })
}

/// Fill `w` from `u`: spatial accumulation `w_x = u` on the first row
/// (anchored `w(t_0, x_lo) = 0`), then node-wise time advance by
/// `w_t = -f(u)` using the interface flux, which keeps the re-differenced
/// `∂_x w` consistent with `u`.
pub fn reconstruct_potential(sol: &GridSolution, flux: &ConvexFun) -> GridSolution {
    if sol.w.is_some() {
        return sol.clone();
    }
    let n = sol.grid.n_cells;
    let mut w_rows: Vec<Vec<f64>> = Vec::with_capacity(sol.t_grid.len());
    let mut first = Vec::with_capacity(n + 1);
    first.push(0.0);
    for i in 0..n {
        let prev = first[i];
        first.push(prev + sol.u[0][i] * sol.grid.dx);
    }
    w_rows.push(first);
    for r in 1..sol.t_grid.len() {
        let dt = sol.t_grid[r] - sol.t_grid[r - 1];
        let prev_u = &sol.u[r - 1];
        let prev_w = &w_rows[r - 1];
        let mut row = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let left = if j == 0 { prev_u[0] } else { prev_u[j - 1] };
            let right = if j == n { prev_u[n - 1] } else { prev_u[j] };
            row.push(prev_w[j] - dt * godunov_flux(flux, left, right));
        }
        w_rows.push(row);
    }
    let mut out = sol.clone();
    out.w = Some(w_rows);
    out
}

/// Exact sampling of a wave fan onto a grid: `w` at nodes from the
/// closed-form fan potential, `u` as its difference quotients, which makes
/// every cell value an exact cell average. All `t_grid` entries must be
/// positive and the window must keep the far states on its edges.
pub fn sample_fan_solution(
    fan: &WaveFan,
    t_grid: &[f64],
    grid: Grid1d,
) -> Result<GridSolution, SolverError> {
    let flux = fan.flux();
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let spans: Vec<(f64, f64)> = fan.waves().iter().map(|w| w.span()).collect();
    if let (Some(&(first_lo, _)), Some(&(_, last_hi))) = (spans.first(), spans.last()) {
        let needed_lo = fan.origin() + first_lo.min(0.0) * t_max;
        let needed_hi = fan.origin() + last_hi.max(0.0) * t_max;
        if needed_lo < grid.x_lo || needed_hi > grid.x_hi() {
            return Err(SolverError::DomainOfDependence {
                x_lo: grid.x_lo,
                x_hi: grid.x_hi(),
                needed_lo,
                needed_hi,
            });
        }
    }

    let mut w_rows = Vec::with_capacity(t_grid.len());
    let mut u_rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(SolverError::BadParameter("fan sampling requires t > 0"));
        }
        let mut row = Vec::with_capacity(grid.n_cells + 1);
        // x_lo sits left of every wave, so w(t, x_lo) follows the left state.
        let anchor = fan.left() * (grid.x_lo - fan.origin()) - flux.eval(fan.left()) * t;
        row.push(anchor);
        for j in 0..grid.n_cells {
            let prev = row[j];
            let inc = fan_slice_integral(fan, t, grid.node(j), grid.node(j + 1));
            row.push(prev + inc);
        }
        let u_row: Vec<f64> =
            (0..grid.n_cells).map(|i| (row[i + 1] - row[i]) / grid.dx).collect();
        w_rows.push(row);
        u_rows.push(u_row);
    }

    Ok(GridSolution {
        t_grid: t_grid.to_vec(),
        grid,
        u: u_rows,
        w: Some(w_rows),
        source: SolutionSource::AnalyticFanSampling,
        boundary_flux: None,
    })
}

/// Point samples of a fan at the cell centers (right traces at jumps), with
/// no potential. The plain profile-sampling counterpart of
/// `sample_fan_solution`.
pub fn sample_fan_pointwise(
    fan: &WaveFan,
    t_grid: &[f64],
    grid: Grid1d,
) -> Result<GridSolution, SolverError> {
    let mut u_rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(SolverError::BadParameter("fan sampling requires t > 0"));
        }
        u_rows.push((0..grid.n_cells).map(|i| sample_fan(fan, t, grid.center(i))).collect());
    }
    Ok(GridSolution {
        t_grid: t_grid.to_vec(),
        grid,
        u: u_rows,
        w: None,
        source: SolutionSource::AnalyticFanSampling,
        boundary_flux: None,
    })
}

/// Exact `∫_a^b u(t, x) dx` across a fan slice. Rarefaction stretches
/// integrate in closed form: with `x = origin + t f'(v)`,
/// `∫ v dx = t (v f'(v) - f(v))` evaluated between the stretch states.
fn fan_slice_integral(fan: &WaveFan, t: f64, a: f64, b: f64) -> f64 {
    let flux = fan.flux();
    let xi_a = (a - fan.origin()) / t;
    let xi_b = (b - fan.origin()) / t;
    let mut acc = 0.0;
    let mut pos = xi_a;
    let mut state = fan.left();
    for wave in fan.waves() {
        let (lo, hi) = wave.span();
        if pos < lo {
            let stretch_to = lo.min(xi_b);
            if stretch_to > pos {
                acc += state * (stretch_to - pos);
                pos = stretch_to;
            }
        }
        if pos >= xi_b {
            break;
        }
        match *wave {
            Wave::Shock { to, .. } | Wave::Contact { to, .. } => {
                if xi_b > hi {
                    state = to;
                }
            }
            Wave::Rarefaction { xi_lo, xi_hi, from, to } => {
                let c = pos.max(xi_lo);
                let d = xi_b.min(xi_hi);
                if d > c {
                    let u_c = flux.derivative_inverse_clamped(c, from, to);
                    let u_d = flux.derivative_inverse_clamped(d, from, to);
                    acc += (u_d * flux.d_onesided(u_d, Side::Minus) - flux.eval(u_d))
                        - (u_c * flux.d_onesided(u_c, Side::Minus) - flux.eval(u_c));
                    pos = d;
                }
                if xi_b > xi_hi {
                    state = to;
                }
            }
        }
        if pos >= xi_b {
            break;
        }
    }
    if xi_b > pos {
        acc += state * (xi_b - pos);
    }
    acc * t
}

/// `Σ |u_a - u_b| Δx` over the window at the nearest stored time. Solutions
/// on nested grids (integer refinement, shared `x_lo`) are compared by
/// cell-average restriction to the coarser grid.
pub fn l1_distance(
    a: &GridSolution,
    b: &GridSolution,
    t: f64,
    window: (f64, f64),
) -> Result<f64, SolverError> {
    let row_a = a.nearest_time_index(t)?;
    let row_b = b.nearest_time_index(t)?;
    let (coarse, coarse_row, fine, fine_row) =
        if a.grid.dx >= b.grid.dx { (a, row_a, b, row_b) } else { (b, row_b, a, row_a) };

    let ratio = coarse.grid.dx / fine.grid.dx;
    let k = ratio.round() as usize;
    if k == 0 || (ratio - k as f64).abs() > 1e-9 {
        return Err(SolverError::IncompatibleGrids(format!(
            "dx ratio {ratio} is not an integer refinement"
        )));
    }
    if (coarse.grid.x_lo - fine.grid.x_lo).abs() > 1e-9 * coarse.grid.dx.max(1.0) {
        return Err(SolverError::IncompatibleGrids("grids have different x_lo".into()));
    }

    let mut acc = 0.0;
    for i in 0..coarse.grid.n_cells {
        let center = coarse.grid.center(i);
        if center < window.0 || center > window.1 {
            continue;
        }
        let fine_start = i * k;
        if fine_start + k > fine.grid.n_cells {
            break;
        }
        let fine_avg: f64 =
            fine.u[fine_row][fine_start..fine_start + k].iter().sum::<f64>() / k as f64;
        acc += (coarse.u[coarse_row][i] - fine_avg).abs() * coarse.grid.dx;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waves::solve_riemann;

    fn burgers() -> ConvexFun {
        ConvexFun::burgers()
    }

    fn grid(x_lo: f64, x_hi: f64, dx: f64) -> Grid1d {
        Grid1d::from_window(x_lo, x_hi, dx).unwrap()
    }

    #[test]
    fn hopf_lax_rarefaction_center() {
        // u0 = sgn(y), w0 = |y|: at (1, 0) the minimizer is y = 0.
        let data = InitialData::riemann(-1.0, 1.0, 0.0, (-4.0, 4.0)).unwrap();
        let g = grid(-4.0, 4.0, 0.01);
        let sol = hopf_lax_from_initial(&burgers(), &data, &[1.0], g).unwrap();
        // w0 anchored at x_lo: w0(y) = |y| - 4 for this data; compare shapes.
        let j_mid = 400;
        let w_mid = sol.w.as_ref().unwrap()[0][j_mid];
        assert!((w_mid - (-4.0)).abs() < 1e-10, "w(1,0) = {w_mid}");
        // u(1, 0): rarefaction center value 0 (cell averages straddle 0).
        let u_mid = 0.5 * (sol.u[0][j_mid - 1] + sol.u[0][j_mid]);
        assert!(u_mid.abs() < 1e-9);
        // And u = x/t inside the fan.
        let u_at = sol.u[0][j_mid + 50]; // x ~ 0.505
        assert!((u_at - 0.505).abs() < 1e-9, "u = {u_at}");
    }

    #[test]
    fn hopf_lax_shock_solution() {
        // u0 = 1 for x < 0, 0 after: shock at x = t/2.
        let data = InitialData::riemann(1.0, 0.0, 0.0, (-4.0, 4.0)).unwrap();
        let g = grid(-4.0, 4.0, 0.01);
        let sol = hopf_lax_from_initial(&burgers(), &data, &[1.0], g).unwrap();
        // Left of the shock the exact solution is w = x - t/2 up to the
        // anchoring constant; w0(y) = y + 4 here, so the constant is 4.
        let j = 425; // x = 0.25
        let w = sol.w.as_ref().unwrap()[0][j];
        assert!((w - (0.25 - 0.5 + 4.0)).abs() < 1e-10, "w = {w}");
        let u = sol.u[0][j];
        assert!((u - 1.0).abs() < 1e-9);
        // Right of the shock u = 0.
        assert!(sol.u[0][500].abs() < 1e-9);
    }

    #[test]
    fn hopf_lax_constant_data() {
        let data = InitialData::riemann(0.7, 0.7, 0.0, (-2.0, 2.0)).unwrap();
        let g = grid(-2.0, 2.0, 0.05);
        let sol = hopf_lax_from_initial(&burgers(), &data, &[0.5, 1.0], g).unwrap();
        for row in &sol.u {
            for &v in row {
                assert!((v - 0.7).abs() < 1e-9);
            }
        }
        // w = c x - f(c) t + w0 anchor.
        let w = sol.w.as_ref().unwrap();
        let expect = 0.7 * 2.0 - 0.5 * 0.7 * 0.7 * 1.0 + 0.7 * 2.0;
        assert!((w[1][80] - expect).abs() < 1e-9);
    }

    #[test]
    fn hopf_lax_traces_are_ordered() {
        let data = InitialData::piecewise_constant(
            vec![-1.0, 0.0, 1.0],
            vec![0.5, -0.75, 1.0, -0.25],
            (-6.0, 6.0),
        )
        .unwrap();
        let g = grid(-6.0, 6.0, 0.02);
        let sol = hopf_lax_from_initial(&burgers(), &data, &[0.5, 1.0, 2.0], g).unwrap();
        for (r, &t) in sol.t_grid.iter().enumerate() {
            let w = &sol.w.as_ref().unwrap()[r];
            for j in 1..g.n_cells {
                let u_minus = (w[j] - w[j - 1]) / g.dx;
                let u_plus = (w[j + 1] - w[j]) / g.dx;
                assert!(
                    u_plus <= u_minus + 10.0 * g.dx / t,
                    "trace order violated at t={t}, j={j}: {u_plus} > {u_minus}"
                );
            }
        }
    }

    #[test]
    fn godunov_flux_hand_values() {
        let b = burgers();
        assert_eq!(godunov_flux(&b, 1.0, 0.0), 0.5);
        assert_eq!(godunov_flux(&b, 0.0, 1.0), 0.0);
        assert_eq!(godunov_flux(&b, -1.0, 1.0), 0.0);
        assert_eq!(godunov_flux(&b, 0.5, 0.5), 0.125);
    }

    #[test]
    fn godunov_constant_data_is_exact() {
        let data = InitialData::riemann(0.4, 0.4, 0.0, (-1.0, 1.0)).unwrap();
        let sol = godunov_solve(&burgers(), &data, 0.5, 0.05, 0.45).unwrap();
        for row in &sol.u {
            for &v in row {
                assert!((v - 0.4).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn godunov_degenerate_speed_solved_exactly() {
        // Plateau flux with data inside [0, 1]: f' = 0 on the range.
        let data = InitialData::riemann(0.2, 0.8, 0.0, (-1.0, 1.0)).unwrap();
        let sol = godunov_solve(&ConvexFun::plateau(), &data, 1.0, 0.05, 0.45).unwrap();
        assert_eq!(sol.t_grid.len(), 2);
        assert_eq!(sol.u[0], sol.u[1]);
    }

    #[test]
    fn godunov_conserves_mass() {
        let data = InitialData::riemann(1.0, -0.5, 0.0, (-3.0, 3.0)).unwrap();
        let sol = godunov_solve(&burgers(), &data, 1.0, 0.01, 0.45).unwrap();
        let drift = sol.total_mass(sol.u.len() - 1) - sol.total_mass(0)
            + sol.boundary_flux.unwrap();
        let scale = sol.total_mass(0).abs().max(1.0);
        assert!(drift.abs() <= 1e-10 * scale, "conservation drift {drift}");
    }

    #[test]
    fn godunov_is_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let flux = crate::gen::random_convex(&mut rng, 2.0);
            let breaks = vec![-0.5, 0.5];
            let lower: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let upper: Vec<f64> = lower.iter().map(|v| v + rng.gen_range(0.0..1.0)).collect();
            let window = (-4.0, 4.0);
            let d_lo =
                InitialData::piecewise_constant(breaks.clone(), lower, window).unwrap();
            let d_hi = InitialData::piecewise_constant(breaks.clone(), upper, window).unwrap();
            let s_lo = godunov_solve(&flux, &d_lo, 0.5, 0.1, 0.45).unwrap();
            let s_hi = godunov_solve(&flux, &d_hi, 0.5, 0.1, 0.45).unwrap();
            let last_lo = s_lo.u.last().unwrap();
            let last_hi = s_hi.u.last().unwrap();
            for (a, b) in last_lo.iter().zip(last_hi) {
                assert!(a <= &(b + 1e-12), "monotonicity violated: {a} > {b}");
            }
        }
    }

    #[test]
    fn reconstructed_potential_matches_u() {
        let data = InitialData::riemann(1.0, 0.0, 0.0, (-2.0, 2.0)).unwrap();
        let sol = godunov_solve(&burgers(), &data, 1.0, 0.02, 0.45).unwrap();
        let with_w = reconstruct_potential(&sol, &burgers());
        let w = with_w.w.as_ref().unwrap();
        for (r, w_row) in w.iter().enumerate() {
            for i in 0..with_w.grid.n_cells {
                let diff = (w_row[i + 1] - w_row[i]) / with_w.grid.dx;
                assert!(
                    (diff - with_w.u[r][i]).abs() <= 1e-10,
                    "w_x mismatch at row {r} cell {i}"
                );
            }
        }
    }

    #[test]
    fn fan_sampling_gives_exact_cell_averages() {
        let fan = solve_riemann(&burgers(), 1.0, 0.0).unwrap();
        let g = grid(-2.0, 2.0, 0.004);
        let sol = sample_fan_solution(&fan, &[1.0], g).unwrap();
        // Exact shock at x = 0.5: u = 1 left, 0 right; the one crossing cell
        // holds the partial-volume average.
        let mut transition_cells = 0;
        for i in 0..g.n_cells {
            let c = g.center(i);
            let v = sol.u[0][i];
            if c < 0.5 - g.dx {
                assert!((v - 1.0).abs() < 1e-11);
            } else if c > 0.5 + g.dx {
                assert!(v.abs() < 1e-11);
            } else if v > 1e-11 && v < 1.0 - 1e-11 {
                transition_cells += 1;
            }
        }
        assert!(transition_cells <= 1);

        // Rarefaction potential: w(t,x) - w(t,0) = x^2/(2t) inside the fan.
        let fan = solve_riemann(&burgers(), -1.0, 1.0).unwrap();
        let sol = sample_fan_solution(&fan, &[2.0], g).unwrap();
        let w = &sol.w.as_ref().unwrap()[0];
        let j0 = 500; // x = 0
        for (j, x) in [(550, 0.2), (600, 0.4)] {
            let got = w[j] - w[j0];
            assert!((got - x * x / 4.0).abs() < 1e-10, "x={x}: {got}");
        }
    }

    #[test]
    fn fan_and_hopf_lax_agree_on_composite_fan() {
        let flux = ConvexFun::plateau();
        let fan = solve_riemann(&flux, -1.0, 2.0).unwrap();
        let g = grid(-3.0, 4.0, 0.01);
        let fan_sol = sample_fan_solution(&fan, &[1.0], g).unwrap();
        let data = InitialData::riemann(-1.0, 2.0, 0.0, (-3.0, 4.0)).unwrap();
        let hl = hopf_lax_from_initial(&flux, &data, &[1.0], g).unwrap();
        let dist = l1_distance(&fan_sol, &hl, 1.0, (-2.5, 3.5)).unwrap();
        assert!(dist < 1e-8, "L1 distance {dist}");
    }

    #[test]
    fn l1_distance_basics() {
        let data = InitialData::riemann(1.0, 0.0, 0.0, (-2.0, 2.0)).unwrap();
        let g = grid(-2.0, 2.0, 0.01);
        let sol = hopf_lax_from_initial(&burgers(), &data, &[1.0], g).unwrap();
        assert_eq!(l1_distance(&sol, &sol, 1.0, (-2.0, 2.0)).unwrap(), 0.0);
        assert!(matches!(
            l1_distance(&sol, &sol, 7.0, (-2.0, 2.0)),
            Err(SolverError::TimeOutsideGrid(_))
        ));
        // Integer refinement restriction.
        let g2 = grid(-2.0, 2.0, 0.005);
        let sol2 = hopf_lax_from_initial(&burgers(), &data, &[1.0], g2).unwrap();
        let d = l1_distance(&sol, &sol2, 1.0, (-1.5, 1.5)).unwrap();
        assert!(d < 0.02, "refined distance {d}");
    }

    #[test]
    fn cross_solver_error_halves_under_refinement() {
        // Shock-only Burgers data with speed 2/3 (off-node at every level).
        let flux = burgers();
        let window = (-2.0, 2.0);
        let data = InitialData::riemann(1.0, 1.0 / 3.0, 0.0, window).unwrap();
        let mut errors = Vec::new();
        for &dx in &[0.02, 0.01, 0.005] {
            let g = Grid1d::from_window(window.0, window.1, dx).unwrap();
            let hl = hopf_lax_from_initial(&flux, &data, &[1.0], g).unwrap();
            let go = godunov_solve(&flux, &data, 1.0, dx, 0.45).unwrap();
            errors.push(l1_distance(&hl, &go, 1.0, (-1.5, 1.5)).unwrap());
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.5..=3.0).contains(&ratio), "ratio {ratio} from {errors:?}");
        }
    }

    #[test]
    fn oleinik_slope_bound_for_hopf_lax() {
        // Uniformly convex f'' = c = 1; slopes must stay under 1/(ct) + 10 dx/t.
        let data = InitialData::riemann(-1.0, 1.0, 0.0, (-4.0, 4.0)).unwrap();
        let g = grid(-4.0, 4.0, 0.02);
        let sol = hopf_lax_from_initial(&burgers(), &data, &[0.5, 1.0, 2.0], g).unwrap();
        for (r, &t) in sol.t_grid.iter().enumerate() {
            for i in 0..g.n_cells {
                for j in (i + 1)..g.n_cells {
                    let slope = (sol.u[r][j] - sol.u[r][i]) / ((j - i) as f64 * g.dx);
                    assert!(slope <= 1.0 / t + 10.0 * g.dx / t + 1e-9);
                }
            }
        }
    }
}
