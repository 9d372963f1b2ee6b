//! One-dimensional continuous-time linear filtering: the error-variance
//! Riccati equation, simulated signal/observation paths, the filter itself,
//! and ensemble checks that its mean squared error attains the Riccati curve.
//!
//! The filter estimate is the projection of the hidden state onto the
//! information carried by the observations; its optimality is made testable
//! by comparing ensemble error against the Riccati solution and against
//! deliberately mistuned gains. A discrete-time Kalman recursion on the same
//! noise increments serves as an independent oracle.

use rayon::prelude::*;

use crate::error::Error;
use crate::rng::Stream;
use crate::Result;

/// Paths per parallel work unit in ensemble runs; fixed so reductions fold
/// in a thread-count-independent order.
const BLOCK: usize = 64;

/// Negative-excursion tolerance for the Riccati integrator.
const RICCATI_TOL: f64 = 1e-12;

/// Maximum step halvings before the integrator gives up.
const MAX_HALVINGS: u32 = 8;

/// The 1-D filtering model: signal dX = F·X dt + C dU observed through
/// dY = G·X dt + D dV, with initial state gaussian(x0_mean, s0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanBucyModel {
    /// Signal drift coefficient (1/time).
    pub f: f64,
    /// Signal noise intensity.
    pub c: f64,
    /// Observation gain.
    pub g: f64,
    /// Observation noise intensity; must be positive.
    pub d: f64,
    /// Initial error variance (variance of the state at t = 0).
    pub s0: f64,
    /// Initial state mean.
    pub x0_mean: f64,
    /// Time horizon.
    pub t_max: f64,
    /// Grid step.
    pub dt: f64,
}

impl KalmanBucyModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        f: f64,
        c: f64,
        g: f64,
        d: f64,
        s0: f64,
        x0_mean: f64,
        t_max: f64,
        dt: f64,
    ) -> Result<KalmanBucyModel> {
        let fields = [
            ("f", f),
            ("c", c),
            ("g", g),
            ("d", d),
            ("s0", s0),
            ("x0_mean", x0_mean),
            ("t_max", t_max),
            ("dt", dt),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidField {
                    field: name.into(),
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if d <= 0.0 {
            return Err(Error::InvalidField {
                field: "d".into(),
                reason: "observation noise intensity must be positive".into(),
            });
        }
        if dt <= 0.0 {
            return Err(Error::InvalidField {
                field: "dt".into(),
                reason: "grid step must be positive".into(),
            });
        }
        if t_max < dt {
            return Err(Error::InvalidField {
                field: "t_max".into(),
                reason: "horizon must cover at least one step".into(),
            });
        }
        if s0 < 0.0 {
            return Err(Error::InvalidField {
                field: "s0".into(),
                reason: "initial variance must be nonnegative".into(),
            });
        }
        Ok(KalmanBucyModel { f, c, g, d, s0, x0_mean, t_max, dt })
    }

    /// Number of grid steps; the horizon is realized as `steps() * dt`.
    pub fn steps(&self) -> usize {
        ((self.t_max / self.dt).round() as usize).max(1)
    }

    /// Grid times 0, dt, 2·dt, …, steps·dt.
    pub fn grid(&self) -> Vec<f64> {
        (0..=self.steps()).map(|i| i as f64 * self.dt).collect()
    }

    /// The nonnegative stationary root of the error-variance equation,
    /// when the observation channel carries information (G ≠ 0).
    pub fn stationary_variance(&self) -> Option<f64> {
        if self.g == 0.0 {
            return None;
        }
        let q = self.g * self.g / (self.d * self.d);
        Some((self.f + (self.f * self.f + q * self.c * self.c).sqrt()) / q)
    }

    /// Right-hand side of the error-variance equation:
    /// S′ = 2F·S − (G²/D²)·S² + C².
    fn riccati_rhs(&self, s: f64) -> f64 {
        2.0 * self.f * s - (self.g * self.g / (self.d * self.d)) * s * s + self.c * self.c
    }
}

/// The error variance S(t) on the model grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    dt: f64,
}

impl RiccatiSolution {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("grid is nonempty")
    }

    /// Index of the grid point nearest t, if t lies within half a step of one.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        index_on_grid(&self.times, self.dt, t)
    }
}

fn index_on_grid(times: &[f64], dt: f64, t: f64) -> Option<usize> {
    let i = (t / dt).round();
    if i < 0.0 || i >= times.len() as f64 {
        return None;
    }
    let i = i as usize;
    ((times[i] - t).abs() <= dt / 2.0).then_some(i)
}

fn rk4_step(model: &KalmanBucyModel, s: f64, h: f64) -> f64 {
    let k1 = model.riccati_rhs(s);
    let k2 = model.riccati_rhs(s + 0.5 * h * k1);
    let k3 = model.riccati_rhs(s + 0.5 * h * k2);
    let k4 = model.riccati_rhs(s + h * k3);
    s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrate the error-variance equation on the model grid by 4th-order
/// one-step integration with step-halving to keep S nonnegative.
///
/// Sub-zero excursions within `RICCATI_TOL` are clamped to zero; anything
/// worse triggers halving of the offending step (up to 2⁸ pieces) before
/// the integrator reports the step as too large.
pub fn solve_riccati(model: &KalmanBucyModel) -> Result<RiccatiSolution> {
    let n = model.steps();
    let mut values = Vec::with_capacity(n + 1);
    let mut s = model.s0;
    values.push(s);
    for i in 0..n {
        let mut halvings = 0u32;
        s = loop {
            let pieces = 1usize << halvings;
            let h = model.dt / pieces as f64;
            let mut trial = s;
            let mut ok = true;
            for _ in 0..pieces {
                trial = rk4_step(model, trial, h);
                if trial < 0.0 {
                    if trial >= -RICCATI_TOL {
                        trial = 0.0;
                    } else {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && trial.is_finite() {
                break trial;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::StepTooLarge {
                    t: (i + 1) as f64 * model.dt,
                    tol: RICCATI_TOL,
                    halvings: MAX_HALVINGS,
                });
            }
        };
        values.push(s);
    }
    Ok(RiccatiSolution { times: model.grid(), values, dt: model.dt })
}

/// One simulated trajectory: the hidden state on the grid and the
/// observation increments over each step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    /// Grid times, length steps + 1.
    pub times: Vec<f64>,
    /// Hidden state Γ at each grid time, length steps + 1.
    pub state: Vec<f64>,
    /// Observation increments dY over [t_i, t_{i+1}), length steps.
    pub dy: Vec<f64>,
    dt: f64,
}

impl SimulatedPath {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The same trajectory viewed on a grid twice as coarse: states at even
    /// indices, adjacent observation increments summed. `None` when the
    /// step count is odd.
    pub fn coarsen(&self) -> Option<SimulatedPath> {
        if self.dy.len() % 2 != 0 {
            return None;
        }
        let times = self.times.iter().step_by(2).copied().collect();
        let state = self.state.iter().step_by(2).copied().collect();
        let dy = self.dy.chunks(2).map(|pair| pair[0] + pair[1]).collect();
        Some(SimulatedPath { times, state, dy, dt: 2.0 * self.dt })
    }
}

/// Simulate one state/observation trajectory by the Euler–Maruyama scheme,
/// with independent driving noises and Γ₀ ~ gaussian(x0_mean, s0).
///
/// Each path index gets its own counter-based stream, so ensembles are
/// reproducible and order-independent.
pub fn simulate_path(model: &KalmanBucyModel, seed: u64, path_index: u64) -> SimulatedPath {
    let n = model.steps();
    let mut stream = Stream::new(seed, path_index);
    let sqrt_dt = model.dt.sqrt();
    let mut state = Vec::with_capacity(n + 1);
    let mut dy = Vec::with_capacity(n);
    let mut x = model.x0_mean + model.s0.sqrt() * stream.normal();
    state.push(x);
    for _ in 0..n {
        let du = sqrt_dt * stream.normal();
        let dv = sqrt_dt * stream.normal();
        dy.push(model.g * x * model.dt + model.d * dv);
        x += model.f * x * model.dt + model.c * du;
        state.push(x);
    }
    SimulatedPath { times: model.grid(), state, dy, dt: model.dt }
}

/// A complete filter pass over one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub times: Vec<f64>,
    /// Hidden state Γ, length steps + 1.
    pub state: Vec<f64>,
    /// Observation increments, length steps.
    pub dy: Vec<f64>,
    /// Filter estimate X̂, length steps + 1.
    pub estimate: Vec<f64>,
    /// (Γ − X̂)² at each grid time.
    pub squared_error: Vec<f64>,
}

fn check_grid(model: &KalmanBucyModel, riccati: &RiccatiSolution, n_increments: usize) -> Result<()> {
    if riccati.dt != model.dt {
        return Err(Error::GridMismatch(format!(
            "error-variance grid step {} differs from model step {}",
            riccati.dt, model.dt
        )));
    }
    if riccati.values.len() != n_increments + 1 {
        return Err(Error::GridMismatch(format!(
            "error-variance grid has {} points but the observation path implies {}",
            riccati.values.len(),
            n_increments + 1
        )));
    }
    Ok(())
}

/// Integrate the filter equation dX̂ = (F − k·G)·X̂ dt + k dY with gain
/// k = scale·G·S/D², returning the estimate at every grid time.
fn filter_estimates_scaled(
    model: &KalmanBucyModel,
    riccati: &RiccatiSolution,
    dy: &[f64],
    gain_scale: f64,
) -> Result<Vec<f64>> {
    check_grid(model, riccati, dy.len())?;
    let mut estimates = Vec::with_capacity(dy.len() + 1);
    let mut x = model.x0_mean;
    estimates.push(x);
    for (i, &inc) in dy.iter().enumerate() {
        let gain = gain_scale * model.g * riccati.values[i] / (model.d * model.d);
        x += (model.f - gain * model.g) * x * model.dt + gain * inc;
        estimates.push(x);
    }
    Ok(estimates)
}

/// The filter estimate path driven by the given observation increments.
pub fn filter_estimates(
    model: &KalmanBucyModel,
    riccati: &RiccatiSolution,
    dy: &[f64],
) -> Result<Vec<f64>> {
    filter_estimates_scaled(model, riccati, dy, 1.0)
}

/// Run the filter over a simulated trajectory, recording the estimate and
/// the pathwise squared error.
pub fn run_filter(
    model: &KalmanBucyModel,
    riccati: &RiccatiSolution,
    path: &SimulatedPath,
) -> Result<FilterRun> {
    if path.dt != model.dt {
        return Err(Error::GridMismatch(format!(
            "path grid step {} differs from model step {}",
            path.dt, model.dt
        )));
    }
    let estimate = filter_estimates(model, riccati, &path.dy)?;
    let squared_error = path
        .state
        .iter()
        .zip(&estimate)
        .map(|(g, e)| (g - e) * (g - e))
        .collect();
    Ok(FilterRun {
        times: path.times.clone(),
        state: path.state.clone(),
        dy: path.dy.clone(),
        estimate,
        squared_error,
    })
}

/// Discrete-time Kalman recursion on the same increments, as an independent
/// oracle: state transition a = 1 + F·dt, process noise Q = C²·dt,
/// measurement dyₖ = (G·dt)·xₖ + noise of variance D²·dt, with its own
/// error-covariance recursion.
///
/// Returns the predicted estimate at each grid time — the estimate given
/// observations strictly before that time, matching the filter's timing.
pub fn discrete_kalman_oracle(model: &KalmanBucyModel, dy: &[f64]) -> Vec<f64> {
    let a = 1.0 + model.f * model.dt;
    let q = model.c * model.c * model.dt;
    let h = model.g * model.dt;
    let r = model.d * model.d * model.dt;
    let mut x = model.x0_mean;
    let mut p = model.s0;
    let mut estimates = Vec::with_capacity(dy.len() + 1);
    estimates.push(x);
    for &z in dy {
        // Measurement update at the current time…
        let gain = p * h / (h * p * h + r);
        x += gain * (z - h * x);
        p *= 1.0 - gain * h;
        // …then predict across the step.
        x *= a;
        p = a * a * p + q;
        estimates.push(x);
    }
    estimates
}

/// Ensemble error curve: empirical mean squared filter error across paths,
/// with its standard error, next to the error-variance solution.
#[derive(Debug, Clone, PartialEq)]
pub struct MseCurve {
    pub times: Vec<f64>,
    pub mse: Vec<f64>,
    pub stderr: Vec<f64>,
    /// S(t) on the same grid.
    pub riccati: Vec<f64>,
    dt: f64,
}

impl MseCurve {
    /// Index of the grid point nearest t, if t lies within half a step of one.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        index_on_grid(&self.times, self.dt, t)
    }
}

/// Per-block accumulation of first and second moments at each grid point.
struct MomentBlock {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

fn accumulate_blocks<F>(n_points: usize, n_paths: usize, per_path: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(usize, &mut Vec<f64>) + Sync,
{
    let blocks: Vec<MomentBlock> = (0..n_paths)
        .collect::<Vec<_>>()
        .par_chunks(BLOCK)
        .map(|chunk| {
            let mut block = MomentBlock {
                sum: vec![0.0; n_points],
                sum_sq: vec![0.0; n_points],
            };
            let mut scratch = Vec::new();
            for &p in chunk {
                per_path(p, &mut scratch);
                for (i, &v) in scratch.iter().enumerate() {
                    block.sum[i] += v;
                    block.sum_sq[i] += v * v;
                }
            }
            block
        })
        .collect();
    // Fold partial sums in block order: the result is independent of how
    // many workers ran the blocks.
    let mut sum = vec![0.0; n_points];
    let mut sum_sq = vec![0.0; n_points];
    for block in blocks {
        for i in 0..n_points {
            sum[i] += block.sum[i];
            sum_sq[i] += block.sum_sq[i];
        }
    }
    (sum, sum_sq)
}

fn moments_to_mean_stderr(sum: &[f64], sum_sq: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let stderr = sum_sq
        .iter()
        .zip(&mean)
        .map(|(&sq, &m)| {
            let var = ((sq - nf * m * m) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        })
        .collect();
    (mean, stderr)
}

/// Simulate `n_paths` trajectories, filter each, and average the squared
/// error pointwise on the grid. Deterministic for fixed (model, seed)
/// across runs and worker counts.
pub fn ensemble_mse(model: &KalmanBucyModel, n_paths: usize, seed: u64) -> Result<MseCurve> {
    if n_paths < 100 {
        return Err(Error::TooFewSamples { needed: 100, got: n_paths });
    }
    let riccati = solve_riccati(model)?;
    let n_points = model.steps() + 1;
    let (sum, sum_sq) = accumulate_blocks(n_points, n_paths, |p, out| {
        let path = simulate_path(model, seed, p as u64);
        let run = run_filter(model, &riccati, &path).expect("grids match by construction");
        *out = run.squared_error;
    });
    let (mse, stderr) = moments_to_mean_stderr(&sum, &sum_sq, n_paths);
    Ok(MseCurve { times: riccati.times.clone(), mse, stderr, riccati: riccati.values, dt: model.dt })
}

/// Paired ensemble comparison of the filter against a mistuned copy whose
/// gain is scaled by `gain_scale`, on identical noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedGainComparison {
    pub gain_scale: f64,
    /// Mean over paths of (mistuned − optimal) squared error at the horizon.
    pub mean_difference: f64,
    pub stderr: f64,
    /// mean_difference / stderr.
    pub z: f64,
}

/// Drive the optimal and gain-scaled filters over the same simulated paths
/// and compare their squared errors at the final time.
pub fn paired_gain_comparison(
    model: &KalmanBucyModel,
    n_paths: usize,
    seed: u64,
    gain_scale: f64,
) -> Result<PairedGainComparison> {
    if n_paths < 100 {
        return Err(Error::TooFewSamples { needed: 100, got: n_paths });
    }
    let riccati = solve_riccati(model)?;
    let (sum, sum_sq) = accumulate_blocks(1, n_paths, |p, out| {
        let path = simulate_path(model, seed, p as u64);
        let optimal = filter_estimates_scaled(model, &riccati, &path.dy, 1.0)
            .expect("grids match by construction");
        let mistuned = filter_estimates_scaled(model, &riccati, &path.dy, gain_scale)
            .expect("grids match by construction");
        let truth = *path.state.last().expect("nonempty");
        let e_opt = truth - optimal.last().expect("nonempty");
        let e_sub = truth - mistuned.last().expect("nonempty");
        *out = vec![e_sub * e_sub - e_opt * e_opt];
    });
    let (mean, stderr) = moments_to_mean_stderr(&sum, &sum_sq, n_paths);
    let (mean, stderr) = (mean[0], stderr[0]);
    let z = if stderr > 0.0 { mean / stderr } else { f64::INFINITY };
    Ok(PairedGainComparison { gain_scale, mean_difference: mean, stderr, z })
}
