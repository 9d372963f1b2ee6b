//! Conditional expectation two ways: exactly on finite carriers via the
//! fiber-average (Radon–Nikodym) formula, and approximately from samples via
//! least-squares projection onto a finite feature basis.
//!
//! The exact path keeps every quantity rational so identities — total
//! expectation, the tower property — hold with zero discrepancy. The
//! projection path is the Monte-Carlo learning engine: it minimizes the
//! empirical squared loss over the span of the features.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::Zero;

use crate::error::Error;
use crate::factor::{FactorMap, Provenance};
use crate::linalg;
use crate::measure::{pushforward, RandomMap};
use crate::numeric::{ExtReal, Rat, Value};
use crate::Result;

/// Exact conditional expectation of a numeric map given another map.
///
/// Defined exactly on the fiber values with mass in (0, ∞); zero-mass values
/// are listed in `undefined` (the function is only determined almost
/// everywhere, and those fibers are null).
#[derive(Debug, Clone, PartialEq)]
pub struct CondExpTable {
    values: BTreeMap<Value, Rat>,
    mass: BTreeMap<Value, ExtReal>,
    undefined: Vec<Value>,
}

impl CondExpTable {
    /// φ(y), when y has positive mass.
    pub fn phi(&self, y: &Value) -> Option<&Rat> {
        self.values.get(y)
    }

    /// Mass of a fiber value (zero off the codomain).
    pub fn mass(&self, y: &Value) -> ExtReal {
        self.mass.get(y).cloned().unwrap_or_else(ExtReal::zero)
    }

    /// Defined (value, φ) pairs in value order.
    pub fn defined(&self) -> impl Iterator<Item = (&Value, &Rat)> {
        self.values.iter()
    }

    /// Fiber values with zero mass, where φ is left undefined.
    pub fn undefined(&self) -> &[Value] {
        &self.undefined
    }

    /// Σ_y φ(y)·mass(y) over defined values — the expectation of the
    /// conditional expectation.
    pub fn total_expectation(&self) -> Rat {
        let mut acc = Rat::zero();
        for (y, phi) in &self.values {
            let m = self.mass.get(y).and_then(|m| m.as_rat().cloned());
            acc += phi * m.expect("defined values have finite mass");
        }
        acc
    }

    /// View as a factor map on the defined fiber values.
    pub fn as_factor_map(&self) -> FactorMap {
        let map: BTreeMap<Value, Value> = self
            .values
            .iter()
            .map(|(y, phi)| (y.clone(), Value::num(phi.clone())))
            .collect();
        let codomain: Vec<Value> = map.values().cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        FactorMap::from_table(map, codomain, true, Provenance::ClosedForm)
    }

    /// Compose with `y` into a map on the carrier, writing `default` on atoms
    /// in zero-mass fibers (those atoms carry no weight, so the choice cannot
    /// affect any expectation).
    pub fn as_map_of(&self, y: &RandomMap, name: &str, default: Rat) -> RandomMap {
        y.compose(name, |v| {
            Value::num(self.values.get(v).cloned().unwrap_or_else(|| default.clone()))
        })
    }
}

/// E(Γ | Y) on a finite carrier: the weighted fiber average.
///
/// φ(y) = Σ_{Y(ω)=y} Γ(ω)·w(ω) / mass(y) for fibers with mass in (0, ∞);
/// a fiber of infinite mass makes Y non-σ-finite and is an error.
pub fn condexp_discrete(gamma: &RandomMap, y: &RandomMap) -> Result<CondExpTable> {
    gamma.check_same_domain(y)?;
    let law = pushforward(y);

    let mut sums: BTreeMap<Value, Rat> = BTreeMap::new();
    for i in 0..y.space().len() {
        let g = gamma.real_value_at(i)?;
        let w = match y.space().weight(i) {
            ExtReal::Finite(w) => w,
            // The fiber containing this atom has infinite mass; report below.
            ExtReal::Infinite => continue,
        };
        if w.is_zero() {
            continue;
        }
        *sums.entry(y.value_at(i).clone()).or_insert_with(Rat::zero) += g * w;
    }

    let mut values = BTreeMap::new();
    let mut mass = BTreeMap::new();
    let mut undefined = Vec::new();
    for (v, m) in law.entries() {
        mass.insert(v.clone(), m.clone());
        match m {
            ExtReal::Infinite => {
                return Err(Error::NonSigmaFinite {
                    y: y.name().into(),
                    fiber: v.to_string(),
                })
            }
            ExtReal::Finite(m) if m.is_zero() => undefined.push(v.clone()),
            ExtReal::Finite(m) => {
                let s = sums.remove(v).unwrap_or_else(Rat::zero);
                values.insert(v.clone(), s / m);
            }
        }
    }
    Ok(CondExpTable { values, mass, undefined })
}

/// One named real-valued feature of the regressor.
#[derive(Clone)]
pub struct Feature<T> {
    name: String,
    f: Arc<dyn Fn(&T) -> f64 + Send + Sync>,
}

impl<T> Feature<T> {
    pub fn new(name: impl Into<String>, f: impl Fn(&T) -> f64 + Send + Sync + 'static) -> Self {
        Feature { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, y: &T) -> f64 {
        (self.f)(y)
    }
}

impl<T> fmt::Debug for Feature<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Feature({})", self.name)
    }
}

/// An ordered list of features spanning the regression subspace.
#[derive(Debug, Clone)]
pub struct FeatureBasis<T> {
    features: Vec<Feature<T>>,
}

impl<T> FeatureBasis<T> {
    pub fn new(features: Vec<Feature<T>>) -> Self {
        FeatureBasis { features }
    }

    pub fn size(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[Feature<T>] {
        &self.features
    }

    /// Evaluate all features at one point, in declaration order.
    pub fn row(&self, y: &T) -> Vec<f64> {
        self.features.iter().map(|f| f.eval(y)).collect()
    }
}

impl FeatureBasis<f64> {
    /// Monomials 1, y, …, y^degree.
    pub fn polynomial(degree: u32) -> Self {
        let features = (0..=degree)
            .map(|d| {
                Feature::new(format!("y^{d}"), move |y: &f64| y.powi(d as i32))
            })
            .collect();
        FeatureBasis::new(features)
    }
}

impl FeatureBasis<Value> {
    /// Indicator features 1{y = v}, one per listed value.
    pub fn indicators(values: &[Value]) -> Self {
        let features = values
            .iter()
            .map(|v| {
                let v = v.clone();
                Feature::new(format!("1[y={v}]"), move |y: &Value| if *y == v { 1.0 } else { 0.0 })
            })
            .collect();
        FeatureBasis::new(features)
    }
}

/// Ridge regularization policy for the normal equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge {
    /// 1e-8 × the mean diagonal of the normal matrix — numerical hygiene
    /// that scales with the data.
    Auto,
    /// Explicit coefficient; 0.0 disables regularization entirely.
    Exact(f64),
}

/// Options for [`project_l2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub ridge: Ridge,
    /// With ridge exactly 0 and a singular system, fall back to the
    /// minimal-norm eigensolution instead of failing.
    pub pseudo_inverse: bool,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions { ridge: Ridge::Auto, pseudo_inverse: false }
    }
}

/// Result of a least-squares projection onto a feature basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionFit {
    /// Coefficients aligned with the basis features.
    pub coefficients: Vec<f64>,
    /// Empirical mean squared residual at the minimizer.
    pub residual_risk: f64,
    /// Largest normalized residual–feature correlation (0 at an exact
    /// unregularized minimum; grows in proportion to the ridge).
    pub orthogonality_defect: f64,
    pub sample_count: usize,
    /// Spectral condition number of the regularized normal matrix.
    pub condition_diagnostic: f64,
    /// Ridge value actually applied.
    pub ridge_used: f64,
}

/// Condition number beyond which the normal system is treated as singular.
const CONDITION_LIMIT: f64 = 1e14;

/// Least-squares projection of γ onto span{f_j(y)}.
///
/// Minimizes (1/N)·Σ (γᵢ − Σ_j c_j f_j(yᵢ))² + ridge·‖c‖² by solving the
/// normal equations with Cholesky; a system whose condition exceeds 1e14
/// even after regularization is reported as degenerate.
pub fn project_l2<T>(
    samples: &[(T, f64)],
    basis: &FeatureBasis<T>,
    options: ProjectionOptions,
) -> Result<ProjectionFit> {
    let n = samples.len();
    let k = basis.size();
    if n < k {
        return Err(Error::TooFewSamples { needed: k, got: n });
    }

    // Feature rows, checked finite as they are produced.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, (y, _)) in samples.iter().enumerate() {
        let row = basis.row(y);
        for (j, x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteFeature {
                    feature: basis.features()[j].name().into(),
                    index: i,
                });
            }
        }
        rows.push(row);
    }

    // Normal matrix A = (1/N)FᵀF and right side b = (1/N)Fᵀγ.
    let inv_n = 1.0 / n as f64;
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (row, (_, gamma)) in rows.iter().zip(samples) {
        for i in 0..k {
            for j in i..k {
                a[i][j] += row[i] * row[j] * inv_n;
            }
            b[i] += row[i] * gamma * inv_n;
        }
    }
    for i in 0..k {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }

    let ridge = match options.ridge {
        Ridge::Exact(r) => r,
        Ridge::Auto => {
            let trace: f64 = (0..k).map(|i| a[i][i]).sum();
            1e-8 * trace / k as f64
        }
    };
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += ridge;
    }

    let (eigs, vectors) = linalg::jacobi_eigen(&a);
    let condition = linalg::spectral_condition(&eigs);

    let coefficients = match linalg::cholesky(&a) {
        Some(l) if condition <= CONDITION_LIMIT => linalg::solve_cholesky(&l, &b),
        _ if ridge == 0.0 && options.pseudo_inverse => {
            let tol = 1e-12 * eigs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            linalg::minimal_norm_solve(&eigs, &vectors, &b, tol)
        }
        _ => return Err(Error::DegenerateBasis { condition }),
    };

    // Residual risk and residual–feature correlations at the minimizer.
    let mut rss = Vec::with_capacity(n);
    let mut corr = vec![0.0; k];
    for (row, (_, gamma)) in rows.iter().zip(samples) {
        let fitted: f64 = row.iter().zip(&coefficients).map(|(f, c)| f * c).sum();
        let resid = gamma - fitted;
        rss.push(resid * resid);
        for j in 0..k {
            corr[j] += resid * row[j] * inv_n;
        }
    }
    let residual_risk = crate::rng::pairwise_sum(&rss) * inv_n;
    let gamma_scale = samples
        .iter()
        .map(|(_, g)| g * g * inv_n)
        .sum::<f64>()
        .sqrt();
    let orthogonality_defect = (0..k)
        .map(|j| {
            let feat_scale = (a[j][j] - ridge).max(0.0).sqrt();
            let denom = (feat_scale * gamma_scale).max(f64::MIN_POSITIVE);
            corr[j].abs() / denom
        })
        .fold(0.0f64, f64::max);

    Ok(ProjectionFit {
        coefficients,
        residual_risk,
        orthogonality_defect,
        sample_count: n,
        condition_diagnostic: condition,
        ridge_used: ridge,
    })
}

/// Evaluate a fitted projection at a point: Σ_j c_j f_j(y).
pub fn evaluate_fit<T>(fit: &ProjectionFit, basis: &FeatureBasis<T>, y: &T) -> f64 {
    basis
        .row(y)
        .iter()
        .zip(&fit.coefficients)
        .map(|(f, c)| f * c)
        .sum()
}
