//! Deciding whether one random map factors through another, and constructing
//! the factor φ with X = φ(Y) when it does.
//!
//! On a finite carrier the criterion is elementary: X factors through Y
//! exactly when X is constant on every Y-fiber. The constructions here return
//! φ on the image Y(Ω), optionally extended to a declared full codomain, and
//! alternatively build φ as the limit of dyadic simple-function stages.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::{One, Signed};

use crate::error::Error;
use crate::measure::RandomMap;
use crate::numeric::{Rat, Value};
use crate::Result;

/// How a factor map was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    PartitionConstruction,
    SimpleFunctionLimit,
    ClosedForm,
}

/// A map φ on values of Y with φ(Y(ω)) = X(ω).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMap {
    map: BTreeMap<Value, Value>,
    /// Full codomain of the factored map X (used to vet extension defaults).
    codomain: Vec<Value>,
    /// True when the domain is exactly the image Y(Ω).
    defined_on_image_only: bool,
    provenance: Provenance,
}

impl FactorMap {
    /// φ evaluated at `y`, if `y` is in the domain.
    pub fn apply(&self, y: &Value) -> Option<&Value> {
        self.map.get(y)
    }

    /// Domain values in sorted order.
    pub fn domain(&self) -> impl Iterator<Item = &Value> {
        self.map.keys()
    }

    /// The (value → value) assignment table.
    pub fn assignments(&self) -> &BTreeMap<Value, Value> {
        &self.map
    }

    pub fn codomain(&self) -> &[Value] {
        &self.codomain
    }

    pub fn defined_on_image_only(&self) -> bool {
        self.defined_on_image_only
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Hand-built factor map (used by closed-form constructions and tests).
    pub fn from_table(
        map: BTreeMap<Value, Value>,
        codomain: Vec<Value>,
        defined_on_image_only: bool,
        provenance: Provenance,
    ) -> FactorMap {
        FactorMap { map, codomain, defined_on_image_only, provenance }
    }
}

/// Outcome of a separation check; on failure `witness` holds a violating pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport<W> {
    pub separated: bool,
    pub witness: Option<(W, W)>,
}

impl<W> SeparationReport<W> {
    fn ok() -> Self {
        SeparationReport { separated: true, witness: None }
    }

    fn violated(a: W, b: W) -> Self {
        SeparationReport { separated: false, witness: Some((a, b)) }
    }
}

/// Is X measurable with respect to the σ-field generated by Y?
///
/// True iff X is constant on every Y-fiber; a failure reports two atoms with
/// equal Y-values and different X-values.
pub fn is_measurable_wrt(x: &RandomMap, y: &RandomMap) -> Result<SeparationReport<String>> {
    x.check_same_domain(y)?;
    let mut first_in_fiber: BTreeMap<&Value, usize> = BTreeMap::new();
    for i in 0..y.space().len() {
        match first_in_fiber.get(y.value_at(i)) {
            None => {
                first_in_fiber.insert(y.value_at(i), i);
            }
            Some(&j) => {
                if x.value_at(i) != x.value_at(j) {
                    return Ok(SeparationReport::violated(
                        y.space().atom(j).to_owned(),
                        y.space().atom(i).to_owned(),
                    ));
                }
            }
        }
    }
    Ok(SeparationReport::ok())
}

/// Construct φ with X = φ(Y), defined on the image Y(Ω).
///
/// Fails with the separation witness when X is not constant on some Y-fiber.
pub fn construct_factor(x: &RandomMap, y: &RandomMap) -> Result<FactorMap> {
    let report = is_measurable_wrt(x, y)?;
    if let Some((a, b)) = report.witness {
        return Err(Error::NotMeasurable {
            x: x.name().into(),
            y: y.name().into(),
            omega_a: a,
            omega_b: b,
        });
    }
    // Per fiber, the X-value of any representative defines φ.
    let mut map = BTreeMap::new();
    for i in 0..y.space().len() {
        map.entry(y.value_at(i).clone()).or_insert_with(|| x.value_at(i).clone());
    }
    Ok(FactorMap {
        map,
        codomain: x.codomain().to_vec(),
        defined_on_image_only: true,
        provenance: Provenance::PartitionConstruction,
    })
}

/// Extend an image-only φ to a declared full codomain of Y.
///
/// Off-image values are sent to `default`, which must lie in φ's codomain;
/// on finite codomains any total extension is measurable, so the choice is
/// free and explicit.
pub fn extend_factor(phi: &FactorMap, full_codomain_y: &[Value], default: &Value) -> Result<FactorMap> {
    if !phi.defined_on_image_only {
        return Err(Error::InvalidField {
            field: "phi".into(),
            reason: "already a total map; extension applies to image-only maps".into(),
        });
    }
    if !phi.codomain.contains(default) {
        return Err(Error::DefaultOutsideCodomain(default.to_string()));
    }
    for v in phi.map.keys() {
        if !full_codomain_y.contains(v) {
            return Err(Error::InvalidField {
                field: "full_codomain_y".into(),
                reason: format!("declared codomain omits the mapped value '{v}'"),
            });
        }
    }
    let mut map = phi.map.clone();
    for v in full_codomain_y {
        map.entry(v.clone()).or_insert_with(|| default.clone());
    }
    Ok(FactorMap {
        map,
        codomain: phi.codomain.clone(),
        defined_on_image_only: false,
        provenance: phi.provenance,
    })
}

/// Result of the staged construction: the limit map plus every stage.
#[derive(Debug, Clone)]
pub struct SimpleLimitFactorization {
    pub factor: FactorMap,
    /// φ_k for k = 1..=levels, each defined on the image of Y.
    pub per_level: Vec<FactorMap>,
}

/// Truncate a non-negative rational at dyadic level k: min(2^k, ⌊2^k·x⌋/2^k).
fn dyadic_truncate(x: &Rat, k: u32) -> Rat {
    let scale = Rat::from_integer(BigInt::one() << k);
    let truncated = (x * &scale).floor() / &scale;
    truncated.min(scale)
}

/// Factor a non-negative real-valued X through Y via monotone dyadic stages.
///
/// Stage k factors X_k = min(2^k, ⌊2^k·X⌋/2^k); the returned φ is the
/// pointwise maximum over stages. When 2^levels resolves every value of X
/// (all values dyadic with denominator dividing 2^levels and below the cap),
/// the limit reproduces the direct construction exactly.
pub fn factor_via_simple_limit(
    x: &RandomMap,
    y: &RandomMap,
    levels: u32,
) -> Result<SimpleLimitFactorization> {
    if levels == 0 {
        return Err(Error::InvalidLevels);
    }
    for i in 0..x.space().len() {
        let v = x.real_value_at(i)?;
        if v.is_negative() {
            return Err(Error::NegativeValue {
                name: x.name().into(),
                atom: x.space().atom(i).into(),
                value: v.to_string(),
            });
        }
    }
    // Early measurability check so the error carries the witness.
    let report = is_measurable_wrt(x, y)?;
    if let Some((a, b)) = report.witness {
        return Err(Error::NotMeasurable {
            x: x.name().into(),
            y: y.name().into(),
            omega_a: a,
            omega_b: b,
        });
    }

    let mut per_level = Vec::with_capacity(levels as usize);
    let mut limit: BTreeMap<Value, Value> = BTreeMap::new();
    for k in 1..=levels {
        let x_k = x.compose(&format!("{}_{k}", x.name()), |v| {
            let r = v.as_rat().expect("values checked real above");
            Value::num(dyadic_truncate(r, k))
        });
        let phi_k = construct_factor(&x_k, y)?;
        for (yv, xv) in phi_k.assignments() {
            let entry = limit.entry(yv.clone()).or_insert_with(|| xv.clone());
            // Stages are monotone, so the running maximum is the latest stage.
            if *xv > *entry {
                *entry = xv.clone();
            }
        }
        per_level.push(FactorMap {
            map: phi_k.map,
            codomain: phi_k.codomain,
            defined_on_image_only: true,
            provenance: Provenance::SimpleFunctionLimit,
        });
    }
    Ok(SimpleLimitFactorization {
        factor: FactorMap {
            map: limit,
            codomain: x.codomain().to_vec(),
            defined_on_image_only: true,
            provenance: Provenance::SimpleFunctionLimit,
        },
        per_level,
    })
}

/// T₀ separation over an explicit finite set family.
///
/// True iff for every pair of distinct points some supplied set contains
/// exactly one of them. The family is taken as given — no closure under
/// unions or complements is computed.
pub fn check_t0_separation(points: &[Value], opens: &[Vec<Value>]) -> SeparationReport<Value> {
    let mut distinct: Vec<&Value> = Vec::new();
    for p in points {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    for (i, a) in distinct.iter().enumerate() {
        for b in &distinct[i + 1..] {
            let separated = opens
                .iter()
                .any(|u| u.contains(a) != u.contains(b));
            if !separated {
                return SeparationReport::violated((*a).clone(), (*b).clone());
            }
        }
    }
    SeparationReport::ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::FiniteSpace;
    use crate::numeric::{rat, rat_int};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn space(n: usize) -> Arc<FiniteSpace> {
        FiniteSpace::counting((1..=n).map(|i| i.to_string()).collect()).unwrap()
    }

    fn map_from_labels(space: &Arc<FiniteSpace>, name: &str, labels: &[u8]) -> RandomMap {
        let values = labels.iter().map(|&l| Value::int(l as i64)).collect();
        RandomMap::from_values(space.clone(), name, values).unwrap()
    }

    /// Brute-force oracle: X factors through Y iff X is constant on Y-cells,
    /// checked by direct double loop over atoms (no fiber bookkeeping).
    fn constant_on_cells(x: &RandomMap, y: &RandomMap) -> bool {
        let n = x.space().len();
        for i in 0..n {
            for j in 0..n {
                if y.value_at(i) == y.value_at(j) && x.value_at(i) != x.value_at(j) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn constants_and_identity_are_measurable() {
        let s = space(3);
        let y = map_from_labels(&s, "y", &[0, 1, 0]);
        let c = RandomMap::constant(s.clone(), "c", Value::label("k"));
        assert!(is_measurable_wrt(&c, &y).unwrap().separated);
        assert!(is_measurable_wrt(&y, &y).unwrap().separated);
    }

    #[test]
    fn constant_y_with_nonconstant_x_is_not_measurable() {
        let s = space(2);
        let y = RandomMap::constant(s.clone(), "y", Value::label("k"));
        let x = map_from_labels(&s, "x", &[0, 1]);
        let report = is_measurable_wrt(&x, &y).unwrap();
        assert!(!report.separated);
        assert_eq!(report.witness, Some(("1".into(), "2".into())));
        let err = construct_factor(&x, &y).unwrap_err();
        assert!(matches!(err, Error::NotMeasurable { .. }));
    }

    #[test]
    fn construct_factor_two_cell_example() {
        let s = space(4);
        let y = RandomMap::from_values(
            s.clone(),
            "y",
            vec![Value::label("a"), Value::label("a"), Value::label("b"), Value::label("b")],
        )
        .unwrap();
        let x = map_from_labels(&s, "x", &[10, 10, 20, 20]);
        let phi = construct_factor(&x, &y).unwrap();
        assert_eq!(phi.apply(&Value::label("a")), Some(&Value::int(10)));
        assert_eq!(phi.apply(&Value::label("b")), Some(&Value::int(20)));
        assert!(phi.defined_on_image_only());
        assert_eq!(phi.provenance(), Provenance::PartitionConstruction);
    }

    #[test]
    fn identity_factor_is_identity_on_image() {
        let s = space(3);
        let y = map_from_labels(&s, "y", &[2, 0, 1]);
        let phi = construct_factor(&y, &y).unwrap();
        for v in y.image() {
            assert_eq!(phi.apply(&v), Some(&v));
        }
    }

    #[test]
    fn exhaustive_small_instances_match_oracle() {
        // All (X, Y) pairs with |Ω| ≤ 4 and codomain labels {0,1,2}.
        for n in 1..=4usize {
            let s = space(n);
            let total = 3usize.pow(n as u32);
            for xc in 0..total {
                for yc in 0..total {
                    let decode = |mut code: usize| -> Vec<u8> {
                        (0..n)
                            .map(|_| {
                                let d = (code % 3) as u8;
                                code /= 3;
                                d
                            })
                            .collect()
                    };
                    let x = map_from_labels(&s, "x", &decode(xc));
                    let y = map_from_labels(&s, "y", &decode(yc));
                    let oracle = constant_on_cells(&x, &y);
                    match construct_factor(&x, &y) {
                        Ok(phi) => {
                            assert!(oracle, "construction succeeded but oracle rejects");
                            for i in 0..n {
                                assert_eq!(phi.apply(y.value_at(i)), Some(x.value_at(i)));
                            }
                        }
                        Err(Error::NotMeasurable { .. }) => {
                            assert!(!oracle, "construction failed but oracle accepts")
                        }
                        Err(e) => panic!("unexpected error {e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn factor_is_invariant_under_atom_permutation() {
        let s = space(4);
        let y = map_from_labels(&s, "y", &[0, 1, 0, 2]);
        let x = map_from_labels(&s, "x", &[5, 7, 5, 9]);
        let phi = construct_factor(&x, &y).unwrap();

        // Rebuild the same maps with atoms declared in reverse order.
        let rev_space =
            FiniteSpace::counting(vec!["4".into(), "3".into(), "2".into(), "1".into()]).unwrap();
        let rev = |labels: &[u8]| -> Vec<Value> {
            labels.iter().rev().map(|&l| Value::int(l as i64)).collect()
        };
        let y2 = RandomMap::from_values(rev_space.clone(), "y", rev(&[0, 1, 0, 2])).unwrap();
        let x2 = RandomMap::from_values(rev_space, "x", rev(&[5, 7, 5, 9])).unwrap();
        let phi2 = construct_factor(&x2, &y2).unwrap();
        assert_eq!(phi.assignments(), phi2.assignments());
    }

    #[test]
    fn extend_factor_contract() {
        let s = space(2);
        let y = RandomMap::from_values(s.clone(), "y", vec![Value::label("a"); 2]).unwrap();
        let x = map_from_labels(&s, "x", &[1, 1]);
        let phi = construct_factor(&x, &y).unwrap();

        // Image equals the declared codomain: nothing changes but totality.
        let same = extend_factor(&phi, &[Value::label("a")], &Value::int(1)).unwrap();
        assert_eq!(same.assignments(), phi.assignments());
        assert!(!same.defined_on_image_only());

        // Off-image value picks up the default.
        let wider = extend_factor(&phi, &[Value::label("a"), Value::label("b")], &Value::int(1)).unwrap();
        assert_eq!(wider.apply(&Value::label("b")), Some(&Value::int(1)));
        // The extension still factors X on every atom.
        for i in 0..2 {
            assert_eq!(wider.apply(y.value_at(i)), Some(x.value_at(i)));
        }

        // Default must come from X's codomain.
        let err = extend_factor(&phi, &[Value::label("a"), Value::label("b")], &Value::int(99));
        assert!(matches!(err, Err(Error::DefaultOutsideCodomain(_))));
    }

    #[test]
    fn simple_limit_binary_values_exact_at_level_one() {
        let s = space(4);
        let y = map_from_labels(&s, "y", &[0, 0, 1, 1]);
        let x = map_from_labels(&s, "x", &[0, 0, 1, 1]);
        let out = factor_via_simple_limit(&x, &y, 1).unwrap();
        assert_eq!(out.per_level.len(), 1);
        assert_eq!(out.factor.assignments(), construct_factor(&x, &y).unwrap().assignments());
    }

    #[test]
    fn simple_limit_quarters_match_direct_construction() {
        let s = space(4);
        let y = map_from_labels(&s, "y", &[0, 0, 1, 1]);
        let x = RandomMap::from_values(
            s,
            "x",
            vec![
                Value::num(rat(1, 4)),
                Value::num(rat(1, 4)),
                Value::num(rat(3, 4)),
                Value::num(rat(3, 4)),
            ],
        )
        .unwrap();
        let out = factor_via_simple_limit(&x, &y, 2).unwrap();
        assert_eq!(out.factor.assignments(), construct_factor(&x, &y).unwrap().assignments());
        assert_eq!(out.factor.provenance(), Provenance::SimpleFunctionLimit);
    }

    #[test]
    fn simple_limit_rejects_negative_values_and_zero_levels() {
        let s = space(2);
        let y = map_from_labels(&s, "y", &[0, 1]);
        let neg = RandomMap::from_values(
            s.clone(),
            "x",
            vec![Value::num(rat_int(-1)), Value::num(rat_int(0))],
        )
        .unwrap();
        assert!(matches!(
            factor_via_simple_limit(&neg, &y, 3),
            Err(Error::NegativeValue { .. })
        ));
        let x = map_from_labels(&s, "x", &[0, 1]);
        assert!(matches!(factor_via_simple_limit(&x, &y, 0), Err(Error::InvalidLevels)));
    }

    #[test]
    fn t0_separation_cases() {
        // Vacuous on a single point.
        assert!(check_t0_separation(&[Value::int(1)], &[]).separated);

        // Trivial family cannot separate two points.
        let pts = [Value::int(1), Value::int(2)];
        let trivial = vec![vec![], vec![Value::int(1), Value::int(2)]];
        let report = check_t0_separation(&pts, &trivial);
        assert!(!report.separated);
        assert_eq!(report.witness, Some((Value::int(1), Value::int(2))));

        // Singletons always separate.
        let singles = vec![vec![Value::int(1)], vec![Value::int(2)]];
        assert!(check_t0_separation(&pts, &singles).separated);
    }

    // --- randomized properties ---

    fn labels_strategy(n: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..3, n)
    }

    proptest! {
        #[test]
        fn composition_closure(
            zs in labels_strategy(5),
            psi_tab in labels_strategy(3),
            phi_tab in labels_strategy(3),
        ) {
            // Z arbitrary; Y = ψ(Z); X = φ(Y). Then X must factor through Z
            // and the constructed map must equal φ∘ψ on the image of Z.
            let s = space(5);
            let z = map_from_labels(&s, "z", &zs);
            let y = z.compose("y", |v| {
                let i = usize::try_from(v.as_rat().unwrap().to_integer()).unwrap();
                Value::int(psi_tab[i] as i64)
            });
            let x = y.compose("x", |v| {
                let i = usize::try_from(v.as_rat().unwrap().to_integer()).unwrap();
                Value::int(phi_tab[i] as i64)
            });
            let phi_xz = construct_factor(&x, &z).unwrap();
            let phi_xy = construct_factor(&x, &y).unwrap();
            let psi_yz = construct_factor(&y, &z).unwrap();
            for v in z.image() {
                let through = phi_xy.apply(psi_yz.apply(&v).unwrap()).unwrap();
                prop_assert_eq!(phi_xz.apply(&v).unwrap(), through);
            }
        }

        #[test]
        fn simple_limit_levels_are_monotone(
            ys in labels_strategy(5),
            numerators in proptest::collection::vec(0u32..=32, 3),
        ) {
            // X takes dyadic values n/8 per Y-cell, so it factors by design.
            let s = space(5);
            let y = map_from_labels(&s, "y", &ys);
            let x = y.compose("x", |v| {
                let i = usize::try_from(v.as_rat().unwrap().to_integer()).unwrap();
                Value::num(rat(numerators[i] as i64, 8))
            });
            let out = factor_via_simple_limit(&x, &y, 6).unwrap();
            for pair in out.per_level.windows(2) {
                for (yv, lo) in pair[0].assignments() {
                    let hi = pair[1].apply(yv).unwrap();
                    prop_assert!(lo <= hi, "stage values must not decrease");
                }
            }
            // Level 6 resolves denominator 8 and magnitude ≤ 4 exactly.
            let direct = construct_factor(&x, &y).unwrap();
            prop_assert_eq!(out.factor.assignments(), direct.assignments());
        }
    }
}
