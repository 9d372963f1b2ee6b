//! The location model y = θ + u with a flat (Lebesgue) prior on θ.
//!
//! Inverting the data relation gives the data-conditional distribution
//! θ = y − u directly: closed forms where the noise family allows them,
//! sampling otherwise. The module's centerpiece is the contrast between the
//! pointwise risk, which is finite (Var u, independent of y), and the
//! integrated risk over the flat prior, which grows without bound — made
//! observable through truncated priors on [−T, T].

use std::sync::Arc;

use crate::rng::{mean_and_stderr, Stream};

/// Noise distribution of u in y = θ + u.
#[derive(Clone)]
pub enum Noise {
    /// Standard normal.
    Normal,
    /// Uniform on (−1, 1).
    Uniform,
    /// Standard Laplace, density e^{−|x|}/2.
    Laplace,
    /// Point mass at 0 (noise-free channel).
    Degenerate,
    /// Caller-supplied density and sampler; the density must integrate to 1
    /// (validated on a wide grid at construction via [`Noise::custom`]).
    Custom {
        name: String,
        density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        sampler: Arc<dyn Fn(&mut Stream) -> f64 + Send + Sync>,
    },
}

impl std::fmt::Debug for Noise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Noise::Normal => write!(f, "Normal"),
            Noise::Uniform => write!(f, "Uniform"),
            Noise::Laplace => write!(f, "Laplace"),
            Noise::Degenerate => write!(f, "Degenerate"),
            Noise::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Noise {
    /// Wrap a caller-supplied density/sampler pair, checking the density
    /// integrates to 1 within 1e-6 on [−64, 64] (trapezoid rule, fine grid).
    pub fn custom(
        name: impl Into<String>,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sampler: impl Fn(&mut Stream) -> f64 + Send + Sync + 'static,
    ) -> crate::Result<Noise> {
        let name = name.into();
        let steps = 1 << 21;
        let (lo, hi) = (-64.0f64, 64.0f64);
        let h = (hi - lo) / steps as f64;
        let mut total = 0.5 * (density(lo) + density(hi));
        for i in 1..steps {
            total += density(lo + h * i as f64);
        }
        total *= h;
        if (total - 1.0).abs() > 1e-6 {
            return Err(crate::Error::InvalidModel(format!(
                "density '{name}' integrates to {total}, not 1"
            )));
        }
        Ok(Noise::Custom { name, density: Arc::new(density), sampler: Arc::new(sampler) })
    }

    /// Density at a point; `None` for the degenerate family.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Noise::Normal => {
                Some((-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
            }
            Noise::Uniform => Some(if (-1.0..1.0).contains(&x) { 0.5 } else { 0.0 }),
            Noise::Laplace => Some(0.5 * (-x.abs()).exp()),
            Noise::Degenerate => None,
            Noise::Custom { density, .. } => Some(density(x)),
        }
    }

    /// Cumulative distribution function; `None` when no closed form ships.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        match self {
            Noise::Normal => Some(standard_normal_cdf(x)),
            Noise::Uniform => Some(((x + 1.0) / 2.0).clamp(0.0, 1.0)),
            Noise::Laplace => Some(if x < 0.0 {
                0.5 * x.exp()
            } else {
                1.0 - 0.5 * (-x).exp()
            }),
            Noise::Degenerate => Some(if x < 0.0 { 0.0 } else { 1.0 }),
            Noise::Custom { .. } => None,
        }
    }

    /// One draw of u.
    pub fn sample(&self, stream: &mut Stream) -> f64 {
        match self {
            Noise::Normal => stream.normal(),
            Noise::Uniform => stream.uniform_in(-1.0, 1.0),
            Noise::Laplace => stream.laplace(),
            Noise::Degenerate => 0.0,
            Noise::Custom { sampler, .. } => sampler(stream),
        }
    }

    /// E(u); `None` for custom families (no declared moments).
    pub fn mean(&self) -> Option<f64> {
        match self {
            Noise::Normal | Noise::Uniform | Noise::Laplace | Noise::Degenerate => Some(0.0),
            Noise::Custom { .. } => None,
        }
    }

    /// E(u²); `None` for custom families.
    pub fn second_moment(&self) -> Option<f64> {
        match self {
            Noise::Normal => Some(1.0),
            Noise::Uniform => Some(1.0 / 3.0),
            Noise::Laplace => Some(2.0),
            Noise::Degenerate => Some(0.0),
            Noise::Custom { .. } => None,
        }
    }

    /// Var(u); `None` for custom families.
    pub fn variance(&self) -> Option<f64> {
        let (m1, m2) = (self.mean()?, self.second_moment()?);
        Some(m2 - m1 * m1)
    }
}

/// The quantity of interest ψ(θ).
#[derive(Clone)]
pub enum Focus {
    /// ψ(θ) = θ.
    Identity,
    /// ψ(θ) = c.
    Constant(f64),
    /// ψ(θ) = θ².
    Square,
    /// Arbitrary real function; estimates fall back to sampling.
    Custom { name: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl std::fmt::Debug for Focus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Focus::Identity => write!(f, "Identity"),
            Focus::Constant(c) => write!(f, "Constant({c})"),
            Focus::Square => write!(f, "Square"),
            Focus::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Focus {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Focus::Identity => theta,
            Focus::Constant(c) => *c,
            Focus::Square => theta * theta,
            Focus::Custom { f, .. } => f(theta),
        }
    }
}

/// The location channel: noise family plus the default quantity of interest.
#[derive(Debug, Clone)]
pub struct LocationModel {
    pub noise: Noise,
    pub focus: Focus,
}

impl LocationModel {
    pub fn new(noise: Noise, focus: Focus) -> LocationModel {
        LocationModel { noise, focus }
    }

    /// The default model of the theory: standard normal noise, ψ = identity.
    pub fn standard_normal() -> LocationModel {
        LocationModel::new(Noise::Normal, Focus::Identity)
    }
}

/// Closed-form posterior family, when one applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Gaussian { mean: f64, var: f64 },
}

/// Data-conditional distribution of θ given y, carried as θᵢ = y − uᵢ
/// samples plus a closed-form tag when the noise is standard normal.
#[derive(Debug, Clone)]
pub struct FiducialPosterior {
    observed: f64,
    closed_form: Option<ClosedForm>,
    samples: Vec<f64>,
    noise: Noise,
}

impl FiducialPosterior {
    /// A sample-free posterior handle at y — enough for the closed-form
    /// point estimates, without paying for draws.
    pub fn closed_form_only(observed: f64, noise: Noise) -> FiducialPosterior {
        let closed_form = match noise {
            Noise::Normal => Some(ClosedForm::Gaussian { mean: observed, var: 1.0 }),
            _ => None,
        };
        FiducialPosterior { observed, closed_form, samples: Vec::new(), noise }
    }

    pub fn observed(&self) -> f64 {
        self.observed
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn noise(&self) -> &Noise {
        &self.noise
    }

    /// Empirical mean of the samples, with its standard error.
    pub fn sample_mean(&self) -> (f64, f64) {
        mean_and_stderr(&self.samples)
    }

    /// Unbiased sample variance, with the large-sample standard error
    /// √(2/n)·s² of a variance estimate.
    pub fn sample_variance(&self) -> (f64, f64) {
        let (mean, _) = mean_and_stderr(&self.samples);
        let n = self.samples.len();
        if n < 2 {
            return (f64::NAN, f64::INFINITY);
        }
        let sq: Vec<f64> = self.samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = crate::rng::pairwise_sum(&sq) / (n as f64 - 1.0);
        (var, (2.0 / n as f64).sqrt() * var)
    }
}

/// Posterior for θ at observation y: invert the channel, θ = y − u.
///
/// Draws n noise samples from the stream keyed by `seed`; when the noise is
/// standard normal the exact posterior gaussian(y, 1) is attached as well.
pub fn fiducial_posterior(model: &LocationModel, y: f64, n: usize, seed: u64) -> FiducialPosterior {
    let mut stream = Stream::new(seed, 0);
    let samples: Vec<f64> = (0..n).map(|_| y - model.noise.sample(&mut stream)).collect();
    let closed_form = match model.noise {
        Noise::Normal => Some(ClosedForm::Gaussian { mean: y, var: 1.0 }),
        _ => None,
    };
    FiducialPosterior { observed: y, closed_form, samples, noise: model.noise.clone() }
}

/// Posterior mean of ψ(θ): the optimal action at this observation.
///
/// Closed form via noise moments for identity/constant/square foci over the
/// shipped noise families; sample mean otherwise.
pub fn posterior_point_estimate(post: &FiducialPosterior, psi: &Focus) -> f64 {
    let y = post.observed;
    match psi {
        Focus::Constant(c) => return *c,
        Focus::Identity => {
            if let Some(m1) = post.noise.mean() {
                // E(θ) = y − E(u).
                return y - m1;
            }
        }
        Focus::Square => {
            if let (Some(m1), Some(m2)) = (post.noise.mean(), post.noise.second_moment()) {
                // E(θ²) = E(y − u)² = y² − 2y·E(u) + E(u²).
                return y * y - 2.0 * y * m1 + m2;
            }
        }
        Focus::Custom { .. } => {}
    }
    let mapped: Vec<f64> = post.samples.iter().map(|&t| psi.eval(t)).collect();
    mean_and_stderr(&mapped).0
}

/// Pointwise risk at y: the posterior variance of ψ(θ).
///
/// Exact for identity (Var u) and constant (0) foci on shipped noise
/// families — notably independent of y; otherwise estimated from n fresh
/// posterior samples under `seed`.
pub fn posterior_risk_location(
    model: &LocationModel,
    y: f64,
    psi: &Focus,
    n: usize,
    seed: u64,
) -> f64 {
    match psi {
        Focus::Constant(_) => return 0.0,
        Focus::Identity => {
            if let Some(v) = model.noise.variance() {
                // Var(θ) = Var(y − u) = Var(u).
                return v;
            }
        }
        _ => {}
    }
    let post = fiducial_posterior(model, y, n, seed);
    let mapped: Vec<f64> = post.samples.iter().map(|&t| psi.eval(t)).collect();
    let (mean, _) = mean_and_stderr(&mapped);
    let sq: Vec<f64> = mapped.iter().map(|x| (x - mean) * (x - mean)).collect();
    crate::rng::pairwise_sum(&sq) / (sq.len().max(2) as f64 - 1.0)
}

/// One truncation level of the divergence curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationPoint {
    pub t: f64,
    /// Integrated risk against the unnormalized flat prior on [−T, T].
    pub risk: f64,
    pub risk_stderr: f64,
    /// Pointwise-risk probe at y = 0 from the same run (Monte Carlo).
    pub posterior_risk_probe: f64,
    pub posterior_risk_probe_stderr: f64,
}

/// The finite-pointwise / infinite-integrated contrast, made measurable.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceCurve {
    pub points: Vec<TruncationPoint>,
    pub diverged: bool,
}

/// Monte-Carlo integrated risk of the posterior-mean rule under the flat
/// prior truncated to [−T, T], reported unnormalized (prior mass 2T).
///
/// Draws θ uniform on [−T, T] and u from the noise, forms y = θ + u, applies
/// the posterior-mean estimate, and scales the mean loss by the prior mass.
pub fn location_truncated_risk(
    model: &LocationModel,
    psi: &Focus,
    t: f64,
    n: usize,
    seed: u64,
) -> (f64, f64) {
    let mut stream = Stream::new(seed, 1);
    let losses: Vec<f64> = (0..n)
        .map(|_| {
            let theta = stream.uniform_in(-t, t);
            let u = model.noise.sample(&mut stream);
            let y = theta + u;
            let post = FiducialPosterior::closed_form_only(y, model.noise.clone());
            let action = posterior_point_estimate(&post, psi);
            let diff = psi.eval(theta) - action;
            diff * diff
        })
        .collect();
    let (mean, se) = mean_and_stderr(&losses);
    (2.0 * t * mean, 2.0 * t * se)
}

/// Integrated risk across increasing truncations, with the divergence flag.
///
/// The pointwise-risk probe rides along at y = 0 so each level shows both
/// numbers side by side: the integrated risk growing with T while the
/// pointwise risk stands still.
pub fn divergence_demo(
    model: &LocationModel,
    psi: &Focus,
    truncations: &[f64],
    n_per_level: usize,
    seed: u64,
) -> DivergenceCurve {
    let mut points = Vec::with_capacity(truncations.len());
    for (k, &t) in truncations.iter().enumerate() {
        let (risk, risk_stderr) =
            location_truncated_risk(model, psi, t, n_per_level, seed.wrapping_add(k as u64));
        // Fresh posterior sample at the probe point for the same level.
        let post = fiducial_posterior(model, 0.0, n_per_level, seed ^ 0x5eed_0000 ^ k as u64);
        let mapped: Vec<f64> = post.samples.iter().map(|&x| psi.eval(x)).collect();
        let (m, _) = mean_and_stderr(&mapped);
        let sq: Vec<f64> = mapped.iter().map(|x| (x - m) * (x - m)).collect();
        let var = crate::rng::pairwise_sum(&sq) / (sq.len().max(2) as f64 - 1.0);
        let var_se = (2.0 / sq.len().max(1) as f64).sqrt() * var;
        points.push(TruncationPoint {
            t,
            risk,
            risk_stderr,
            posterior_risk_probe: var,
            posterior_risk_probe_stderr: var_se,
        });
    }
    let risks: Vec<f64> = points.iter().map(|p| p.risk).collect();
    DivergenceCurve { points, diverged: crate::risk::diverged_by_cauchy(&risks) }
}

/// Standard normal CDF via a rational erf approximation (|error| < 1.5e-7,
/// far below the resolution of every tolerance used against it).
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Kolmogorov–Smirnov statistic of samples against an exact CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1% critical value of the KS statistic for large n.
    fn ks_critical(n: usize) -> f64 {
        1.63 / (n as f64).sqrt()
    }

    #[test]
    fn degenerate_noise_posterior_is_point_mass() {
        let model = LocationModel::new(Noise::Degenerate, Focus::Identity);
        let post = fiducial_posterior(&model, 4.5, 100, 7);
        assert!(post.samples().iter().all(|&t| t == 4.5));
        assert_eq!(posterior_point_estimate(&post, &Focus::Identity), 4.5);
        assert_eq!(posterior_risk_location(&model, 4.5, &Focus::Identity, 10, 7), 0.0);
    }

    #[test]
    fn normal_noise_closed_form_and_samples_agree() {
        let model = LocationModel::standard_normal();
        let y = 2.5;
        let n = 100_000;
        let post = fiducial_posterior(&model, y, n, 42);
        assert_eq!(post.closed_form(), Some(ClosedForm::Gaussian { mean: y, var: 1.0 }));
        // Exact closed forms.
        assert_eq!(posterior_point_estimate(&post, &Focus::Identity), y);
        assert_eq!(posterior_risk_location(&model, y, &Focus::Identity, 0, 0), 1.0);
        // Sampling agrees within Monte-Carlo error.
        let (mean, _) = post.sample_mean();
        assert!((mean - y).abs() < 3.0 / (n as f64).sqrt());
        let (var, var_se) = post.sample_variance();
        assert!((var - 1.0).abs() < 3.0 * var_se);
    }

    #[test]
    fn squared_focus_closed_form_matches_samples() {
        let model = LocationModel::standard_normal();
        let y = 1.5;
        let post = fiducial_posterior(&model, y, 200_000, 11);
        // E(θ²) over gaussian(y, 1) is y² + 1.
        let exact = posterior_point_estimate(&post, &Focus::Square);
        assert_eq!(exact, y * y + 1.0);
        let mapped: Vec<f64> = post.samples().iter().map(|&t| t * t).collect();
        let (mc, se) = crate::rng::mean_and_stderr(&mapped);
        assert!((mc - exact).abs() < 3.0 * se, "mc {mc} vs exact {exact}");
    }

    #[test]
    fn posterior_histograms_match_exact_cdfs() {
        let n = 100_000;
        for (noise, task) in [(Noise::Normal, 1u64), (Noise::Uniform, 2), (Noise::Laplace, 3)] {
            let model = LocationModel::new(noise.clone(), Focus::Identity);
            let y = 0.0;
            let post = fiducial_posterior(&model, y, n, 1000 + task);
            // θ = y − u with symmetric noise has CDF F_u(θ − y) at y = 0.
            let cdf = |x: f64| noise.cdf(x).unwrap();
            let d = ks_statistic(post.samples(), cdf);
            assert!(d < ks_critical(n), "{noise:?}: KS statistic {d}");
        }
    }

    #[test]
    fn uniform_noise_risk_is_one_third() {
        let model = LocationModel::new(Noise::Uniform, Focus::Identity);
        // Closed form Var(u) = 1/3 for the identity focus.
        assert!((posterior_risk_location(&model, 0.0, &Focus::Identity, 0, 0) - 1.0 / 3.0).abs() < 1e-15);
        // Monte-Carlo route (square focus forces sampling) sanity check.
        let n = 100_000;
        let post = fiducial_posterior(&model, 0.0, n, 5);
        let (var, var_se) = post.sample_variance();
        assert!((var - 1.0 / 3.0).abs() < 3.0 * var_se);
    }

    #[test]
    fn translation_equivariance_under_shared_seed() {
        let model = LocationModel::standard_normal();
        let c = 3.25;
        let a = fiducial_posterior(&model, 1.0, 10_000, 77);
        let b = fiducial_posterior(&model, 1.0 + c, 10_000, 77);
        // Same seed → same noise draws → samples shift by exactly c up to
        // floating-point regrouping of the sums.
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x + c - y).abs() < 1e-12);
        }
        match (a.closed_form().unwrap(), b.closed_form().unwrap()) {
            (ClosedForm::Gaussian { mean: ma, var: va }, ClosedForm::Gaussian { mean: mb, var: vb }) => {
                assert_eq!(ma + c, mb);
                assert_eq!(va, vb);
            }
        }
    }

    #[test]
    fn pointwise_risk_is_constant_in_y() {
        let model = LocationModel::standard_normal();
        for y in [-10.0, 0.0, 10.0] {
            assert_eq!(posterior_risk_location(&model, y, &Focus::Identity, 0, 0), 1.0);
        }
        // The Monte-Carlo route agrees across distant observations.
        let n = 50_000;
        for (k, y) in [-10.0, 0.0, 10.0].into_iter().enumerate() {
            let r = posterior_risk_location(&model, y, &Focus::Square, n, 900 + k as u64);
            // Var(θ²) over gaussian(y,1) is 4y² + 2; the 3× inflation keeps
            // the bound above the true (heavy-tailed) estimator spread.
            let exact = 4.0 * y * y + 2.0;
            let se = (2.0 / n as f64).sqrt() * exact * 3.0;
            assert!((r - exact).abs() < 3.0 * se, "y {y}: {r} vs {exact}");
        }
    }

    #[test]
    fn divergence_curve_grows_linearly_and_flags() {
        let model = LocationModel::standard_normal();
        let curve = divergence_demo(&model, &Focus::Identity, &[1.0, 10.0, 100.0], 100_000, 2024);
        assert!(curve.diverged);
        let risks: Vec<f64> = curve.points.iter().map(|p| p.risk).collect();
        assert!(risks[0] < risks[1] && risks[1] < risks[2], "risks {risks:?}");
        // r(T) ≈ 2T: relative error at T = 100 well under 5%.
        assert!((risks[2] / 200.0 - 1.0).abs() <= 0.05, "r(100) = {}", risks[2]);
        // The pointwise risk stands still while the integrated risk grows.
        for p in &curve.points {
            assert!(
                (p.posterior_risk_probe - 1.0).abs() < 3.0 * p.posterior_risk_probe_stderr,
                "probe {} ± {}",
                p.posterior_risk_probe,
                p.posterior_risk_probe_stderr
            );
        }
    }

    #[test]
    fn degenerate_noise_never_diverges() {
        let model = LocationModel::new(Noise::Degenerate, Focus::Identity);
        let curve = divergence_demo(&model, &Focus::Identity, &[1.0, 10.0, 100.0], 1000, 3);
        assert!(!curve.diverged);
        for p in &curve.points {
            assert_eq!(p.risk, 0.0);
        }
    }

    #[test]
    fn custom_noise_density_validation() {
        // A proper density passes; a half-scaled one is rejected.
        let ok = Noise::custom(
            "tri",
            |x| if x.abs() < 1.0 { 1.0 - x.abs() } else { 0.0 },
            |s| (s.uniform_in(-1.0, 1.0) + s.uniform_in(-1.0, 1.0)) / 2.0,
        );
        assert!(ok.is_ok());
        let bad = Noise::custom("half", |x| if x.abs() < 1.0 { 0.25 } else { 0.0 }, |s| s.uniform());
        assert!(bad.is_err());
    }

    #[test]
    fn erf_based_cdf_matches_reference_points() {
        // Φ at a few tabulated points.
        for (x, expected) in [
            (0.0, 0.5),
            (1.0, 0.8413447460685429),
            (-1.0, 0.15865525393145705),
            (1.959963984540054, 0.975),
        ] {
            assert!((standard_normal_cdf(x) - expected).abs() < 2e-7, "Φ({x})");
        }
    }
}
