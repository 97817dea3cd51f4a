//! Scenario configuration: TOML parsing, full-file validation (every error
//! reported, not just the first), and execution to CSV/JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use entropy_lab::config::{FunSpec, InitialSpec};
use entropy_lab::convexfn::ConvexFun;
use entropy_lab::entropypair::{check_growth_conditions, gamma_closed_form, log_spaced, EntropyPair};
use entropy_lab::meter::{
    fan_measure, grid_measure, holder_sample_pairs, holder_seminorm, kruzkov_residual,
    oleinik_check, BallDiagnostic, Verdict,
};
use entropy_lab::solvers::{
    godunov_solve, hopf_lax_from_initial, reconstruct_potential, sample_fan_solution, Grid1d,
    GridSolution, InitialData,
};
use entropy_lab::waves::{classify, solve_riemann, undercompressive_fan, WaveFan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Godunov,
    HopfLax,
    /// Exact sampling of the admissible Riemann fan.
    Fan,
    /// Exact sampling of the under-compressive alternative.
    UndercompressiveFan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSection {
    pub scheme: Scheme,
    pub dx: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    pub window: [f64; 2],
    /// Number of stored time rows for fan/Hopf-Lax solutions.
    #[serde(default = "default_t_samples")]
    pub t_samples: usize,
}

fn default_cfl() -> f64 {
    0.45
}

fn default_t_samples() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticSpec {
    Balls {
        center: [f64; 2],
        radii: Vec<f64>,
        /// `fan` measures the exact Riemann fan; `grid` the computed
        /// solution. Defaults by scheme.
        #[serde(default)]
        target: Option<String>,
    },
    Kruzkov {
        k_min: f64,
        k_max: f64,
        k_count: usize,
    },
    Oleinik {
        c: f64,
        times: Vec<f64>,
    },
    Holder {
        gamma1: f64,
        gamma2: f64,
        #[serde(default = "default_pairs")]
        pairs: usize,
        t_range: [f64; 2],
        x_range: [f64; 2],
    },
    Growth {
        gamma: Option<f64>,
    },
}

fn default_pairs() -> usize {
    512
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    /// Cap on stored time rows in the solution CSV.
    #[serde(default = "default_rows")]
    pub rows: usize,
}

fn default_rows() -> usize {
    9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub flux: FunSpec,
    #[serde(default)]
    pub entropy: Option<FunSpec>,
    pub initial: InitialSpec,
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: Vec<DiagnosticSpec>,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

/// A parsed-and-validated scenario, ready to run.
pub struct Scenario {
    pub name: String,
    pub config: ScenarioConfig,
    pub flux: ConvexFun,
    pub pair: EntropyPair,
    pub initial: InitialData,
}

/// Parse a scenario file, collecting every validation error.
pub fn parse_scenario(path: &Path, dx_override: Option<f64>) -> Result<Scenario, Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    let mut config: ScenarioConfig =
        toml::from_str(&text).map_err(|e| vec![format!("TOML parse error: {e}")])?;
    if let Some(dx) = dx_override {
        config.solver.dx = dx;
    }

    let mut errors = Vec::new();
    if !(config.solver.dx > 0.0) {
        errors.push("solver.dx must be positive".to_string());
    }
    if !(config.solver.t_end > 0.0) {
        errors.push("solver.t_end must be positive".to_string());
    }
    if !(config.solver.cfl > 0.0 && config.solver.cfl <= 0.95) {
        errors.push("solver.cfl must lie in (0, 0.95]".to_string());
    }
    let [w_lo, w_hi] = config.solver.window;
    if !(w_lo.is_finite() && w_hi.is_finite() && w_lo < w_hi) {
        errors.push("solver.window must be finite and ordered".to_string());
    }
    if config.solver.t_samples == 0 {
        errors.push("solver.t_samples must be at least 1".to_string());
    }

    let flux = match config.flux.build() {
        Ok(f) => {
            let report = f.validate();
            if !report.convex_ok() {
                for issue in &report.issues {
                    errors.push(format!("flux: {issue}"));
                }
                None
            } else {
                Some(f)
            }
        }
        Err(e) => {
            errors.push(format!("flux: {e}"));
            None
        }
    };

    let entropy_spec = config.entropy.clone().unwrap_or_else(|| FunSpec::named("square"));
    let pair = match (&flux, entropy_spec.build()) {
        (Some(f), Ok(e)) => match EntropyPair::new(f.clone(), e) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("entropy: {e}"));
                None
            }
        },
        (_, Err(e)) => {
            errors.push(format!("entropy: {e}"));
            None
        }
        _ => None,
    };

    let initial = match config.initial.build((w_lo, w_hi)) {
        Ok(d) => Some(d),
        Err(e) => {
            errors.push(format!("initial: {e}"));
            None
        }
    };

    for (i, diag) in config.diagnostics.iter().enumerate() {
        match diag {
            DiagnosticSpec::Balls { radii, center, target } => {
                if radii.is_empty() {
                    errors.push(format!("diagnostics[{i}]: balls needs at least one radius"));
                }
                if !(center[0] > 0.0) {
                    errors.push(format!("diagnostics[{i}]: ball center must have t > 0"));
                }
                if let Some(t) = target {
                    if t != "fan" && t != "grid" {
                        errors.push(format!("diagnostics[{i}]: target must be `fan` or `grid`"));
                    }
                }
            }
            DiagnosticSpec::Kruzkov { k_count, .. } => {
                if *k_count < 1 {
                    errors.push(format!("diagnostics[{i}]: kruzkov needs k_count >= 1"));
                }
            }
            DiagnosticSpec::Oleinik { c, .. } => {
                if !(*c > 0.0) {
                    errors.push(format!("diagnostics[{i}]: oleinik requires c > 0"));
                }
                // The one-sided bound is stated for uniformly convex fluxes
                // with inf f'' >= c; for exact backends that is checkable.
                if let Some(pw) = flux.as_ref().and_then(|f| f.exact()) {
                    let inf_fpp =
                        pw.pieces().iter().map(|p| 2.0 * p.a).fold(f64::INFINITY, f64::min);
                    if *c > inf_fpp {
                        errors.push(format!(
                            "diagnostics[{i}]: oleinik c = {c} exceeds the flux's inf f'' = {inf_fpp}; the bound needs a uniformly convex flux"
                        ));
                    }
                }
            }
            DiagnosticSpec::Holder { pairs, .. } => {
                if *pairs == 0 {
                    errors.push(format!("diagnostics[{i}]: holder needs pairs >= 1"));
                }
            }
            DiagnosticSpec::Growth { gamma } => {
                if let Some(g) = gamma {
                    if !(*g >= 1.0) {
                        errors.push(format!("diagnostics[{i}]: growth gamma must be >= 1"));
                    }
                }
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Scenario {
        name,
        config,
        flux: flux.unwrap(),
        pair: pair.unwrap(),
        initial: initial.unwrap(),
    })
}

/// Everything a scenario run leaves behind.
#[derive(Debug, Serialize)]
pub struct VerdictSummary {
    pub scenario: String,
    pub scheme: Scheme,
    pub admissible: Option<bool>,
    pub measure_verdicts: Vec<MeasureVerdict>,
    pub residual_max: Option<f64>,
    pub oleinik_max_violation: Option<f64>,
    pub holder_seminorm: Option<f64>,
    pub growth_bounded: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct MeasureVerdict {
    pub center: (f64, f64),
    pub target: String,
    pub verdict: Verdict,
    pub liminf_estimate: f64,
}

pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

/// Execute a scenario: solve, run its diagnostics, write artifacts under
/// `<out_dir>/<scenario name>/`. Numerical failures bubble up as errors
/// (mapped to exit code 2 by the caller).
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> anyhow::Result<VerdictSummary> {
    let dir = opts.out_dir.join(&scenario.name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let solver = &scenario.config.solver;
    let window = (solver.window[0], solver.window[1]);
    let grid = Grid1d::from_window(window.0, window.1, solver.dx)?;

    // The exact fan (available only for Riemann data).
    let riemann_states = match scenario.config.initial {
        InitialSpec::Riemann { left, right, x0 } => Some((left, right, x0)),
        _ => None,
    };
    let fan: Option<WaveFan> = match (solver.scheme, riemann_states) {
        (Scheme::UndercompressiveFan, Some((l, r, x0))) => {
            Some(undercompressive_fan(&scenario.flux, l, r)?.with_origin(x0))
        }
        (_, Some((l, r, x0))) => Some(solve_riemann(&scenario.flux, l, r)?.with_origin(x0)),
        (Scheme::Fan | Scheme::UndercompressiveFan, None) => {
            anyhow::bail!("fan schemes require riemann initial data")
        }
        _ => None,
    };

    let t_rows: Vec<f64> = (1..=solver.t_samples)
        .map(|i| solver.t_end * i as f64 / solver.t_samples as f64)
        .collect();

    let sol: GridSolution = match solver.scheme {
        Scheme::Godunov => {
            let sol = godunov_solve(&scenario.flux, &scenario.initial, solver.t_end, solver.dx, solver.cfl)?;
            reconstruct_potential(&sol, &scenario.flux)
        }
        Scheme::HopfLax => {
            hopf_lax_from_initial(&scenario.flux, &scenario.initial, &t_rows, grid)?
        }
        Scheme::Fan | Scheme::UndercompressiveFan => {
            let fan = fan.as_ref().expect("fan schemes build a fan above");
            // Dense rows so residual diagnostics see real time steps.
            let n = ((solver.t_end * 0.5) / solver.dx).ceil().max(solver.t_samples as f64) as usize;
            let dense: Vec<f64> = (1..=n).map(|i| {
                let t0 = solver.t_end * 0.5;
                t0 + (solver.t_end - t0) * i as f64 / n as f64
            }).collect();
            sample_fan_solution(fan, &dense, grid)?
        }
    };

    write_solution_csv(&dir.join("solution.csv"), &sol, scenario.config.output.as_ref().map_or(9, |o| o.rows))?;
    if let Some(fan) = &fan {
        fs::write(dir.join("fan.json"), serde_json::to_string_pretty(&fan.json())?)?;
    }

    let mut summary = VerdictSummary {
        scenario: scenario.name.clone(),
        scheme: solver.scheme,
        admissible: fan.as_ref().map(|f| f.admissible()),
        measure_verdicts: Vec::new(),
        residual_max: None,
        oleinik_max_violation: None,
        holder_seminorm: None,
        growth_bounded: None,
    };

    let mut balls_csv = String::from("t_bar,x_bar,r,mu_over_r\n");
    let mut had_balls = false;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    for diag in &scenario.config.diagnostics {
        match diag {
            DiagnosticSpec::Balls { center, radii, target } => {
                had_balls = true;
                let default_target = match solver.scheme {
                    Scheme::Godunov | Scheme::HopfLax => "grid",
                    _ => "fan",
                };
                let target = target.as_deref().unwrap_or(default_target);
                let diag: BallDiagnostic = match target {
                    "fan" => {
                        let fan = fan
                            .as_ref()
                            .ok_or_else(|| anyhow::anyhow!("fan ball diagnostic needs riemann data"))?;
                        fan_measure(&scenario.pair, fan, (center[0], center[1]), radii)?
                    }
                    _ => grid_measure(&scenario.pair, &sol, (center[0], center[1]), radii)?,
                };
                for (r, v) in diag.radii.iter().zip(&diag.values) {
                    writeln!(balls_csv, "{},{},{},{}", fmt(center[0]), fmt(center[1]), fmt(*r), fmt(*v))
                        .unwrap();
                }
                summary.measure_verdicts.push(MeasureVerdict {
                    center: diag.center,
                    target: target.to_string(),
                    verdict: diag.verdict.clone(),
                    liminf_estimate: diag.liminf_estimate,
                });
            }
            DiagnosticSpec::Kruzkov { k_min, k_max, k_count } => {
                let ks: Vec<f64> = (0..*k_count)
                    .map(|i| {
                        if *k_count == 1 {
                            *k_min
                        } else {
                            k_min + (k_max - k_min) * i as f64 / (*k_count as f64 - 1.0)
                        }
                    })
                    .collect();
                let res = kruzkov_residual(&scenario.flux, &sol, &ks)?;
                summary.residual_max = Some(summary.residual_max.map_or(res, |r: f64| r.max(res)));
            }
            DiagnosticSpec::Oleinik { c, times } => {
                let report = oleinik_check(&sol, *c, times)?;
                fs::write(dir.join("oleinik.json"), serde_json::to_string_pretty(&report)?)?;
                summary.oleinik_max_violation = Some(report.max_violation);
            }
            DiagnosticSpec::Holder { gamma1, gamma2, pairs, t_range, x_range } => {
                let with_w = reconstruct_potential(&sol, &scenario.flux);
                let sample = holder_sample_pairs(
                    &mut rng,
                    (t_range[0], t_range[1]),
                    (x_range[0], x_range[1]),
                    *pairs,
                );
                let value = holder_seminorm(&with_w, *gamma1, *gamma2, &sample)?;
                summary.holder_seminorm = Some(value);
            }
            DiagnosticSpec::Growth { gamma } => {
                let descriptor = scenario.pair.growth_descriptor();
                let closed = gamma_closed_form(&descriptor);
                let gamma = gamma.or(closed.value());
                let report = gamma.map(|g| {
                    check_growth_conditions(&scenario.pair, g, &log_spaced(1e2, 1e6, 64))
                });
                summary.growth_bounded = report.as_ref().map(|r| r.bounded);
                let doc = serde_json::json!({
                    "descriptor": descriptor,
                    "gamma_closed_form": closed,
                    "report": report,
                });
                fs::write(dir.join("growth.json"), serde_json::to_string_pretty(&doc)?)?;
            }
        }
    }

    if had_balls {
        fs::write(dir.join("balls.csv"), balls_csv)?;
        // Admissibility by measurement: every ball verdict vanishing.
        let measured = summary
            .measure_verdicts
            .iter()
            .all(|v| matches!(v.verdict, Verdict::Vanishing));
        summary.admissible = Some(summary.admissible.map_or(measured, |a| a && measured));
    }

    fs::write(dir.join("verdict.json"), serde_json::to_string_pretty(&summary)?)?;
    if !opts.quiet {
        println!(
            "{}: admissible={:?} verdicts={} residual_max={:?}",
            scenario.name,
            summary.admissible,
            summary.measure_verdicts.len(),
            summary.residual_max
        );
    }
    Ok(summary)
}

/// Classification artifact for `riemann`.
pub fn write_riemann_artifacts(
    scenario: &Scenario,
    opts: &RunOptions,
    profile_t: f64,
) -> anyhow::Result<()> {
    let (left, right, x0) = match scenario.config.initial {
        InitialSpec::Riemann { left, right, x0 } => (left, right, x0),
        _ => anyhow::bail!("riemann subcommand requires riemann initial data"),
    };
    let dir = opts.out_dir.join(&scenario.name);
    fs::create_dir_all(&dir)?;

    let fan = solve_riemann(&scenario.flux, left, right)?.with_origin(x0);
    fs::write(dir.join("fan.json"), serde_json::to_string_pretty(&fan.json())?)?;

    if left != right {
        let report = classify(&scenario.pair, left, right)?;
        fs::write(dir.join("classification.json"), serde_json::to_string_pretty(&report)?)?;
    }

    // Sampled profile of the admissible fan at the requested time.
    let solver = &scenario.config.solver;
    let grid = Grid1d::from_window(solver.window[0], solver.window[1], solver.dx)?;
    let mut csv = String::from("t,x,u\n");
    for i in 0..grid.n_cells {
        let x = grid.center(i);
        let u = entropy_lab::waves::sample_fan(&fan, profile_t, x);
        writeln!(csv, "{},{},{}", fmt(profile_t), fmt(x), fmt(u)).unwrap();
    }
    fs::write(dir.join("profile.csv"), csv)?;
    if !opts.quiet {
        println!("{}: fan with {} wave(s) written", scenario.name, fan.waves().len());
    }
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn write_solution_csv(path: &Path, sol: &GridSolution, max_rows: usize) -> anyhow::Result<()> {
    let has_w = sol.w.is_some();
    let mut csv = String::from(if has_w { "t,x,u,w\n" } else { "t,x,u\n" });
    let n_rows = sol.t_grid.len();
    let stride = (n_rows / max_rows.max(1)).max(1);
    let mut rows: Vec<usize> = (0..n_rows).step_by(stride).collect();
    if rows.last() != Some(&(n_rows - 1)) {
        rows.push(n_rows - 1);
    }
    for r in rows {
        let t = sol.t_grid[r];
        for i in 0..sol.grid.n_cells {
            let x = sol.grid.center(i);
            if let Some(w) = &sol.w {
                // Node potential averaged to the cell center for plotting.
                let wc = 0.5 * (w[r][i] + w[r][i + 1]);
                writeln!(csv, "{},{},{},{}", fmt(t), fmt(x), fmt(sol.u[r][i]), fmt(wc)).unwrap();
            } else {
                writeln!(csv, "{},{},{}", fmt(t), fmt(x), fmt(sol.u[r][i])).unwrap();
            }
        }
    }
    fs::write(path, csv)?;
    Ok(())
}
