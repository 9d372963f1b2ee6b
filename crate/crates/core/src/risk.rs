//! Integrated, pointwise, and per-parameter risk of an estimator, the
//! decomposition identities tying the three together, and the construction
//! of the optimal (posterior-mean) rule.
//!
//! Finite models are exact: prior, likelihood, and focus are rational, so
//! the decomposition and Fubini identities are asserted with equality.
//! The flat-prior location channel is handled by Monte Carlo over truncated
//! priors, with divergence detected rather than assumed.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{Signed, Zero};

use crate::condexp::{evaluate_fit, FeatureBasis, ProjectionFit};
use crate::error::Error;
use crate::factor::FactorMap;
use crate::fiducial::{
    divergence_demo, location_truncated_risk, posterior_point_estimate, DivergenceCurve,
    FiducialPosterior, Focus, LocationModel,
};
use crate::measure::{FiniteSpace, RandomMap};
use crate::numeric::{rat_from_f64, ExtReal, Rat, Value};
use crate::rng::{mean_and_stderr, Stream};
use crate::Result;

/// A finite statistical model: rational prior over parameter atoms, a
/// rational likelihood table, and a real (rational) quantity of interest.
///
/// The prior may be unnormalized — risks are reported against the given
/// total mass, matching the truncated-flat-prior convention.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    thetas: Vec<Value>,
    prior: Vec<Rat>,
    ys: Vec<Value>,
    /// One row per θ; each row is a probability distribution over `ys`.
    likelihood: Vec<Vec<Rat>>,
    /// ψ(θ) per parameter atom.
    focus: Vec<Rat>,
}

impl FiniteModel {
    pub fn new(
        thetas: Vec<Value>,
        prior: Vec<Rat>,
        ys: Vec<Value>,
        likelihood: Vec<Vec<Rat>>,
        focus: Vec<Rat>,
    ) -> Result<FiniteModel> {
        if thetas.is_empty() || ys.is_empty() {
            return Err(Error::InvalidModel("empty parameter or data value list".into()));
        }
        let distinct: std::collections::BTreeSet<&Value> = thetas.iter().collect();
        if distinct.len() != thetas.len() {
            return Err(Error::InvalidModel("duplicate parameter values".into()));
        }
        let distinct_y: std::collections::BTreeSet<&Value> = ys.iter().collect();
        if distinct_y.len() != ys.len() {
            return Err(Error::InvalidModel("duplicate data values".into()));
        }
        if prior.len() != thetas.len() || focus.len() != thetas.len() || likelihood.len() != thetas.len() {
            return Err(Error::InvalidModel(format!(
                "prior/likelihood/focus must each have one entry per parameter ({} given)",
                thetas.len()
            )));
        }
        if prior.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidModel("negative prior weight".into()));
        }
        if prior.iter().all(|p| p.is_zero()) {
            return Err(Error::InvalidModel("prior has zero total mass".into()));
        }
        let one = Rat::from_integer(1.into());
        for (i, row) in likelihood.iter().enumerate() {
            if row.len() != ys.len() {
                return Err(Error::InvalidModel(format!(
                    "likelihood row for '{}' has {} entries, expected {}",
                    thetas[i],
                    row.len(),
                    ys.len()
                )));
            }
            if row.iter().any(|p| p.is_negative()) {
                return Err(Error::InvalidModel(format!(
                    "negative likelihood entry in row '{}'",
                    thetas[i]
                )));
            }
            let total: Rat = row.iter().sum();
            if total != one {
                return Err(Error::InvalidModel(format!(
                    "likelihood row for '{}' sums to {}, not 1",
                    thetas[i], total
                )));
            }
        }
        Ok(FiniteModel { thetas, prior, ys, likelihood, focus })
    }

    pub fn thetas(&self) -> &[Value] {
        &self.thetas
    }

    pub fn ys(&self) -> &[Value] {
        &self.ys
    }

    pub fn prior(&self) -> &[Rat] {
        &self.prior
    }

    pub fn focus(&self) -> &[Rat] {
        &self.focus
    }

    pub fn prior_mass(&self) -> Rat {
        self.prior.iter().sum()
    }

    /// Joint weight of (θ_i, y_j) under prior × likelihood.
    fn joint(&self, i: usize, j: usize) -> Rat {
        &self.prior[i] * &self.likelihood[i][j]
    }

    /// Marginal mass of y_j.
    pub fn marginal_y(&self, j: usize) -> Rat {
        (0..self.thetas.len()).map(|i| self.joint(i, j)).sum()
    }

    fn y_index(&self, y: &Value) -> Option<usize> {
        self.ys.iter().position(|v| v == y)
    }

    fn theta_index(&self, theta: &Value) -> Result<usize> {
        self.thetas
            .iter()
            .position(|v| v == theta)
            .ok_or_else(|| Error::OutsideSupport(theta.to_string()))
    }

    /// Integrated risk of an action rule: Σ_{θ,y} prior·lik·(ψ(θ) − a(y))².
    pub fn bayes_risk(&self, action: &Action) -> Result<Rat> {
        let mut acc = Rat::zero();
        for i in 0..self.thetas.len() {
            for j in 0..self.ys.len() {
                let w = self.joint(i, j);
                if w.is_zero() {
                    continue;
                }
                let a = action.get(&self.ys[j])?;
                let diff = &self.focus[i] - a;
                acc += w * (&diff * &diff);
            }
        }
        Ok(acc)
    }

    /// Pointwise risk at y: E((ψ(Θ) − a(y))² | Y = y).
    pub fn posterior_risk(&self, action: &Action, y: &Value) -> Result<Rat> {
        let j = self
            .y_index(y)
            .ok_or_else(|| Error::UndefinedFiber(y.to_string()))?;
        let mass = self.marginal_y(j);
        if mass.is_zero() {
            return Err(Error::UndefinedFiber(y.to_string()));
        }
        let a = action.get(y)?;
        let mut acc = Rat::zero();
        for i in 0..self.thetas.len() {
            let w = self.joint(i, j);
            if w.is_zero() {
                continue;
            }
            let diff = &self.focus[i] - a;
            acc += w * (&diff * &diff);
        }
        Ok(acc / mass)
    }

    /// The optimal action at y: the posterior mean of ψ(Θ).
    pub fn optimal_action(&self, y: &Value) -> Result<Rat> {
        let j = self
            .y_index(y)
            .ok_or_else(|| Error::UndefinedFiber(y.to_string()))?;
        let mass = self.marginal_y(j);
        if mass.is_zero() {
            return Err(Error::UndefinedFiber(y.to_string()));
        }
        let mut acc = Rat::zero();
        for i in 0..self.thetas.len() {
            acc += self.joint(i, j) * &self.focus[i];
        }
        Ok(acc / mass)
    }

    /// The posterior-mean rule on every positive-mass data value.
    pub fn optimal_action_table(&self) -> Action {
        let mut values = BTreeMap::new();
        for (j, y) in self.ys.iter().enumerate() {
            if !self.marginal_y(j).is_zero() {
                values.insert(y.clone(), self.optimal_action(y).expect("mass checked"));
            }
        }
        Action { values }
    }

    /// Per-parameter risk: E over y ~ likelihood(θ) of (a(y) − ψ(θ))².
    pub fn frequentist_risk(&self, action: &Action, theta: &Value) -> Result<Rat> {
        let i = self.theta_index(theta)?;
        let mut acc = Rat::zero();
        for j in 0..self.ys.len() {
            let p = &self.likelihood[i][j];
            if p.is_zero() {
                continue;
            }
            let a = action.get(&self.ys[j])?;
            let diff = a - &self.focus[i];
            acc += p * (&diff * &diff);
        }
        Ok(acc)
    }

    /// Integrated per-parameter risk: Σ_θ prior(θ)·r^θ — equal to the
    /// integrated risk by Fubini, exactly.
    pub fn integrate_frequentist(&self, action: &Action) -> Result<Rat> {
        let mut acc = Rat::zero();
        for i in 0..self.thetas.len() {
            if self.prior[i].is_zero() {
                continue;
            }
            let r_theta = self.frequentist_risk(action, &self.thetas[i])?;
            acc += &self.prior[i] * r_theta;
        }
        Ok(acc)
    }

    /// Integrated risk computed twice — directly and as Σ_y rʸ·mass(y) —
    /// with their (identically zero) discrepancy.
    pub fn decompose(&self, action: &Action) -> Result<Decomposition> {
        let bayes = self.bayes_risk(action)?;
        let mut integrated = Rat::zero();
        for (j, y) in self.ys.iter().enumerate() {
            let mass = self.marginal_y(j);
            if mass.is_zero() {
                continue;
            }
            integrated += self.posterior_risk(action, y)? * mass;
        }
        let discrepancy = (&bayes - &integrated).abs();
        Ok(Decomposition { bayes_risk: bayes, integrated_posterior_risk: integrated, discrepancy })
    }

    /// View the model as a weighted joint space with data and focus maps,
    /// bridging to the measure/conditional-expectation machinery.
    pub fn as_joint_space(&self) -> (Arc<FiniteSpace>, RandomMap, RandomMap) {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        let mut y_values = Vec::new();
        let mut g_values = Vec::new();
        for (i, theta) in self.thetas.iter().enumerate() {
            for (j, y) in self.ys.iter().enumerate() {
                atoms.push(format!("{theta}|{y}"));
                weights.push(ExtReal::Finite(self.joint(i, j)));
                y_values.push(y.clone());
                g_values.push(Value::num(self.focus[i].clone()));
            }
        }
        let space = FiniteSpace::new(atoms, weights).expect("atoms are distinct by construction");
        let y_map = RandomMap::from_values(space.clone(), "y", y_values).expect("total by construction");
        let g_map = RandomMap::from_values(space.clone(), "gamma", g_values).expect("total by construction");
        (space, y_map, g_map)
    }
}

/// An action rule: one rational action per data value.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    values: BTreeMap<Value, Rat>,
}

impl Action {
    pub fn new(values: BTreeMap<Value, Rat>) -> Action {
        Action { values }
    }

    /// The rule that plays `c` at every listed data value.
    pub fn constant(ys: &[Value], c: Rat) -> Action {
        Action { values: ys.iter().map(|y| (y.clone(), c.clone())).collect() }
    }

    /// Adopt a factor map as a rule; every assignment must be numeric.
    pub fn from_factor_map(phi: &FactorMap) -> Result<Action> {
        let mut values = BTreeMap::new();
        for (y, x) in phi.assignments() {
            let r = x.as_rat().ok_or_else(|| Error::NonRealValue {
                name: "phi".into(),
                atom: y.to_string(),
                value: x.to_string(),
            })?;
            values.insert(y.clone(), r.clone());
        }
        Ok(Action { values })
    }

    /// Adopt a fitted projection as a rule by evaluating it at each data
    /// value; the float outputs embed exactly into rationals, so downstream
    /// identities stay exact.
    pub fn from_fit(fit: &ProjectionFit, basis: &FeatureBasis<Value>, ys: &[Value]) -> Result<Action> {
        let mut values = BTreeMap::new();
        for y in ys {
            let v = evaluate_fit(fit, basis, y);
            let r = rat_from_f64(v).ok_or_else(|| Error::InvalidField {
                field: "fit".into(),
                reason: format!("non-finite fitted value at '{y}'"),
            })?;
            values.insert(y.clone(), r);
        }
        Ok(Action { values })
    }

    pub fn get(&self, y: &Value) -> Result<&Rat> {
        self.values
            .get(y)
            .ok_or_else(|| Error::MissingAction(y.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Value, &Rat)> {
        self.values.iter()
    }
}

/// The two sides of the integrated-risk decomposition, held exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub bayes_risk: Rat,
    pub integrated_posterior_risk: Rat,
    /// |bayes − integrated|; identically zero on finite rational models.
    pub discrepancy: Rat,
}

/// A statistical model: exact finite table or continuous location channel.
#[derive(Debug, Clone)]
pub enum StatisticalModel {
    Finite(FiniteModel),
    Location { model: LocationModel, psi: Focus },
}

impl StatisticalModel {
    /// Exact integrated risk; the location channel has no finite prior mass,
    /// so the exact path refuses it and points at the truncation machinery.
    pub fn bayes_risk_exact(&self, action: &Action) -> Result<Rat> {
        match self {
            StatisticalModel::Finite(m) => m.bayes_risk(action),
            StatisticalModel::Location { .. } => Err(Error::ImproperPriorNeedsTruncation),
        }
    }
}

/// Divergence check on a risk curve: not Cauchy across the last three
/// levels, i.e. some consecutive relative change there exceeds 10%.
pub fn diverged_by_cauchy(risks: &[f64]) -> bool {
    if risks.len() < 3 {
        return false;
    }
    risks[risks.len() - 3..].windows(2).any(|w| {
        let rel = (w[1] - w[0]).abs() / w[0].abs().max(1e-12);
        rel > 0.10
    })
}

/// Monte-Carlo integrated risk of the posterior-mean rule on the location
/// channel under the flat prior truncated to [−T, T] (unnormalized).
pub fn bayes_risk_location(
    model: &LocationModel,
    psi: &Focus,
    truncation: f64,
    n: usize,
    seed: u64,
) -> (f64, f64) {
    location_truncated_risk(model, psi, truncation, n, seed)
}

/// Risk curve across truncations with the divergence flag.
pub fn truncated_risk_curve(
    model: &LocationModel,
    psi: &Focus,
    truncations: &[f64],
    n_per_level: usize,
    seed: u64,
) -> DivergenceCurve {
    divergence_demo(model, psi, truncations, n_per_level, seed)
}

/// The decomposition identity estimated by two independent routes on the
/// location channel with truncated flat prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationDecomposition {
    /// (estimate, stderr) sampling the joint law directly.
    pub joint: (f64, f64),
    /// (estimate, stderr) integrating the pointwise risk over the data law.
    pub integrated: (f64, f64),
    /// √(se₁² + se₂²) — the scale on which the two must agree.
    pub combined_stderr: f64,
}

/// Estimate E(ψ(Θ) − φ(Y))² two ways under the truncated flat prior on
/// [−T, T]: once from joint (θ, y) draws, once by drawing y from its
/// marginal and then θ from the conditional given y (rejection step).
///
/// Requires a focus with a moment closed form (identity/constant/square)
/// so the posterior-mean rule φ is available pointwise.
pub fn decompose_location_mc(
    model: &LocationModel,
    psi: &Focus,
    truncation: f64,
    n: usize,
    seed: u64,
) -> Result<LocationDecomposition> {
    if matches!(psi, Focus::Custom { .. }) || model.noise.mean().is_none() {
        return Err(Error::InvalidModel(
            "two-route decomposition needs a closed-form posterior mean".into(),
        ));
    }
    let rule = |y: f64| {
        let post = FiducialPosterior::closed_form_only(y, model.noise.clone());
        posterior_point_estimate(&post, psi)
    };

    // Route 1: joint draws.
    let mut s1 = Stream::new(seed, 20);
    let joint_losses: Vec<f64> = (0..n)
        .map(|_| {
            let theta = s1.uniform_in(-truncation, truncation);
            let y = theta + model.noise.sample(&mut s1);
            let d = psi.eval(theta) - rule(y);
            d * d
        })
        .collect();
    let (m1, se1) = mean_and_stderr(&joint_losses);

    // Route 2: marginal y, then conditional θ | y by rejection against the
    // truncation window (the proposal θ = y − u has the right shape).
    let mut s2 = Stream::new(seed, 21);
    let cond_losses: Vec<f64> = (0..n)
        .map(|_| {
            let y = s2.uniform_in(-truncation, truncation) + model.noise.sample(&mut s2);
            let theta = loop {
                let candidate = y - model.noise.sample(&mut s2);
                if candidate.abs() <= truncation {
                    break candidate;
                }
            };
            let d = psi.eval(theta) - rule(y);
            d * d
        })
        .collect();
    let (m2, se2) = mean_and_stderr(&cond_losses);

    let mass = 2.0 * truncation;
    let combined = mass * (se1 * se1 + se2 * se2).sqrt();
    Ok(LocationDecomposition {
        joint: (mass * m1, mass * se1),
        integrated: (mass * m2, mass * se2),
        combined_stderr: combined,
    })
}
