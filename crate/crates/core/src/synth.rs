//! Deterministic generators of random test instances — spaces, maps,
//! factorizable pairs, finite models — and small exhaustive enumerations.
//!
//! Property suites inside the crate and the acceptance harness outside it
//! draw from the same generators, keyed by counter-based streams, so a
//! reported failure is reproducible from its (seed, index) alone.

use std::sync::Arc;

use crate::measure::{FiniteSpace, RandomMap};
use crate::numeric::{rat, rat_int, ExtReal, Rat, Value};
use crate::risk::FiniteModel;
use crate::rng::Stream;

/// Random weighted space with `n_atoms` atoms named `w0`, `w1`, … and
/// quarter-integer weights in [0, 2].
pub fn random_space(stream: &mut Stream, n_atoms: usize) -> Arc<FiniteSpace> {
    let atoms = (0..n_atoms).map(|i| format!("w{i}")).collect();
    let weights = (0..n_atoms)
        .map(|_| ExtReal::Finite(rat(stream.below(9) as i64, 4)))
        .collect();
    FiniteSpace::new(atoms, weights).expect("generated space is valid")
}

/// Random total map into integer values 0 .. codomain_size.
pub fn random_map(
    stream: &mut Stream,
    space: Arc<FiniteSpace>,
    name: &str,
    codomain_size: u64,
) -> RandomMap {
    let values = (0..space.len())
        .map(|_| Value::int(stream.below(codomain_size) as i64))
        .collect();
    RandomMap::from_values(space, name, values).expect("generated map is total")
}

/// A pair (x, y) where x is factorizable through y by construction:
/// x = g ∘ y for a random table g on y's possible values.
pub fn measurable_pair(
    stream: &mut Stream,
    space: Arc<FiniteSpace>,
    y_codomain: u64,
    x_codomain: u64,
) -> (RandomMap, RandomMap) {
    let y = random_map(stream, space.clone(), "y", y_codomain);
    let table: Vec<Value> = (0..y_codomain)
        .map(|_| Value::int(stream.below(x_codomain) as i64))
        .collect();
    let x_values = (0..space.len())
        .map(|i| {
            let yv = y.value_at(i).as_rat().expect("integer codomain");
            let idx = usize::try_from(yv.to_integer()).expect("small nonnegative");
            table[idx].clone()
        })
        .collect();
    let x = RandomMap::from_values(space, "x", x_values).expect("generated map is total");
    (x, y)
}

/// A pair (x, y) with x = g ∘ y where g takes nonnegative dyadic rational
/// values k/2^j with j ≤ `max_denom_pow` and k/2^j ≤ `max_value` — exactly
/// representable by dyadic staircase approximations of matching depth.
pub fn dyadic_measurable_pair(
    stream: &mut Stream,
    space: Arc<FiniteSpace>,
    y_codomain: u64,
    max_denom_pow: u32,
    max_value: u64,
) -> (RandomMap, RandomMap) {
    let y = random_map(stream, space.clone(), "y", y_codomain);
    let table: Vec<Value> = (0..y_codomain)
        .map(|_| {
            let j = stream.below(max_denom_pow as u64 + 1) as u32;
            let den = 1i64 << j;
            let num = stream.below(max_value * (1 << j) + 1) as i64;
            Value::num(rat(num, den))
        })
        .collect();
    let x_values = (0..space.len())
        .map(|i| {
            let yv = y.value_at(i).as_rat().expect("integer codomain");
            let idx = usize::try_from(yv.to_integer()).expect("small nonnegative");
            table[idx].clone()
        })
        .collect();
    let x = RandomMap::from_values(space, "x", x_values).expect("generated map is total");
    (x, y)
}

/// Random finite statistical model: integer parameter/data values,
/// possibly-unnormalized small-integer prior (at least one atom positive),
/// likelihood rows that sum to one exactly, and half-integer focus values.
pub fn random_finite_model(stream: &mut Stream, n_thetas: usize, n_ys: usize) -> FiniteModel {
    let thetas: Vec<Value> = (0..n_thetas as i64).map(Value::int).collect();
    let ys: Vec<Value> = (0..n_ys as i64).map(Value::int).collect();
    let prior: Vec<Rat> = loop {
        let draw: Vec<Rat> = (0..n_thetas)
            .map(|_| rat_int(stream.below(4) as i64))
            .collect();
        if draw.iter().any(|p| p > &Rat::from_integer(0.into())) {
            break draw;
        }
    };
    let likelihood: Vec<Vec<Rat>> = (0..n_thetas)
        .map(|_| {
            let weights: Vec<i64> = (0..n_ys).map(|_| 1 + stream.below(4) as i64).collect();
            let total: i64 = weights.iter().sum();
            weights.into_iter().map(|w| rat(w, total)).collect()
        })
        .collect();
    let focus: Vec<Rat> = (0..n_thetas)
        .map(|_| rat(stream.below(17) as i64 - 8, 2))
        .collect();
    FiniteModel::new(thetas, prior, ys, likelihood, focus).expect("generated model is valid")
}

/// All value vectors of length `n_atoms` over the integer codomain
/// {0, …, codomain − 1}: the raw material for exhaustive map enumeration.
pub fn all_value_maps(n_atoms: usize, codomain: u64) -> Vec<Vec<Value>> {
    let total = (codomain as usize).pow(n_atoms as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut values = Vec::with_capacity(n_atoms);
        for _ in 0..n_atoms {
            values.push(Value::int((code % codomain as usize) as i64));
            code /= codomain as usize;
        }
        out.push(values);
    }
    out
}

/// All set partitions of {0, …, n−1}, each as a cell-label vector in
/// restricted-growth form (label[0] = 0, label[i] ≤ max(label[..i]) + 1).
pub fn all_partition_labels(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn recurse(labels: &mut Vec<usize>, i: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
        if i == labels.len() {
            out.push(labels.clone());
            return;
        }
        for label in 0..=max_used + 1 {
            labels[i] = label;
            recurse(labels, i + 1, max_used.max(label), out);
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    recurse(&mut labels, 1, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::construct_factor;

    #[test]
    fn generators_are_reproducible() {
        let mut a = Stream::new(5, 0);
        let mut b = Stream::new(5, 0);
        let sa = random_space(&mut a, 4);
        let sb = random_space(&mut b, 4);
        assert_eq!(sa.atoms(), sb.atoms());
        for i in 0..4 {
            assert_eq!(sa.weight(i), sb.weight(i));
        }
        let ma = random_map(&mut a, sa.clone(), "m", 3);
        let mb = random_map(&mut b, sb.clone(), "m", 3);
        assert_eq!(ma.values(), mb.values());
    }

    #[test]
    fn measurable_pairs_factor() {
        let mut stream = Stream::new(9, 1);
        for _ in 0..50 {
            let space = random_space(&mut stream, 5);
            let (x, y) = measurable_pair(&mut stream, space, 3, 3);
            assert!(construct_factor(&x, &y).is_ok());
        }
    }

    #[test]
    fn random_models_are_valid_and_varied() {
        let mut stream = Stream::new(11, 2);
        let a = random_finite_model(&mut stream, 3, 3);
        let b = random_finite_model(&mut stream, 3, 3);
        assert_ne!(a, b, "consecutive draws should differ");
    }

    #[test]
    fn exhaustive_enumerations_have_the_right_counts() {
        assert_eq!(all_value_maps(3, 2).len(), 8);
        assert_eq!(all_value_maps(5, 3).len(), 243);
        // Bell numbers 1, 1, 2, 5, 15, 52.
        for (n, bell) in [(0, 1), (1, 1), (2, 2), (3, 5), (4, 15), (5, 52)] {
            assert_eq!(all_partition_labels(n).len(), bell, "n = {n}");
        }
    }

    #[test]
    fn dyadic_pairs_have_bounded_dyadic_values() {
        let mut stream = Stream::new(3, 3);
        let space = random_space(&mut stream, 4);
        let (x, _) = dyadic_measurable_pair(&mut stream, space, 3, 4, 8);
        for v in x.values() {
            let r = v.as_rat().expect("numeric");
            assert!(r >= &rat_int(0) && r <= &rat_int(8));
            // Denominators divide 2^4: scaling by 16 clears them.
            assert!((r * rat_int(16)).is_integer());
        }
    }
}
