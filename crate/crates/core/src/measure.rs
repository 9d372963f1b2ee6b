//! Finite measurable spaces, σ-finite weight assignments, random maps,
//! pushforward laws, and finite σ-fields represented as partitions.
//!
//! Everything here is exact: weights are extended rationals, and the
//! operations are total functions over immutable values, so identities
//! like mass preservation can be asserted with equality.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num::Zero;

use crate::error::Error;
use crate::numeric::{ext_sum, ExtReal, Rat, Value};
use crate::Result;

/// A finite carrier with one non-negative extended-real weight per atom.
///
/// Atom identifiers are opaque labels; order is the declaration order and is
/// semantically irrelevant (constructions are checked for order invariance).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    atoms: Vec<String>,
    weights: Vec<ExtReal>,
    index: BTreeMap<String, usize>,
}

impl FiniteSpace {
    /// Build a space, checking atom uniqueness and weight non-negativity.
    pub fn new(atoms: Vec<String>, weights: Vec<ExtReal>) -> Result<Arc<FiniteSpace>> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpace("atom list is empty".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let mut index = BTreeMap::new();
        for (i, a) in atoms.iter().enumerate() {
            if index.insert(a.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!("duplicate atom id '{a}'")));
            }
        }
        for (a, w) in atoms.iter().zip(&weights) {
            if let ExtReal::Finite(r) = w {
                if r < &Rat::from_integer(0.into()) {
                    return Err(Error::InvalidSpace(format!("negative weight at atom '{a}'")));
                }
            }
        }
        Ok(Arc::new(FiniteSpace { atoms, weights, index }))
    }

    /// Uniform unit weights on the given atoms.
    pub fn counting(atoms: Vec<String>) -> Result<Arc<FiniteSpace>> {
        let n = atoms.len();
        FiniteSpace::new(atoms, vec![ExtReal::from_int(1); n])
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &str {
        &self.atoms[i]
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn weight(&self, i: usize) -> &ExtReal {
        &self.weights[i]
    }

    /// Total mass of the space (extended real).
    pub fn total_mass(&self) -> ExtReal {
        ext_sum(self.weights.iter())
    }

    /// Indices of atoms with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| match &self.weights[i] {
                ExtReal::Finite(r) => !r.is_zero(),
                ExtReal::Infinite => true,
            })
            .collect()
    }

    /// Whether any atom carries infinite weight.
    pub fn has_infinite_atom(&self) -> bool {
        self.weights.iter().any(|w| !w.is_finite())
    }

    /// Whether two spaces share the same atom set (order-insensitively).
    pub fn same_atoms(&self, other: &FiniteSpace) -> bool {
        self.index.keys().eq(other.index.keys())
    }
}

/// A map from the carrier into a finite codomain, stored pointwise on atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomMap {
    space: Arc<FiniteSpace>,
    name: String,
    codomain: Vec<Value>,
    values: Vec<Value>,
}

impl RandomMap {
    /// Build a map, checking totality and codomain membership.
    pub fn new(
        space: Arc<FiniteSpace>,
        name: &str,
        codomain: Vec<Value>,
        values: Vec<Value>,
    ) -> Result<RandomMap> {
        if values.len() != space.len() {
            return Err(Error::InvalidMap {
                name: name.into(),
                reason: format!("{} values for {} atoms", values.len(), space.len()),
            });
        }
        let codomain_set: BTreeSet<&Value> = codomain.iter().collect();
        if codomain_set.len() != codomain.len() {
            return Err(Error::InvalidMap {
                name: name.into(),
                reason: "codomain contains duplicate values".into(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !codomain_set.contains(v) {
                return Err(Error::InvalidMap {
                    name: name.into(),
                    reason: format!("value '{v}' at atom '{}' is not in the codomain", space.atom(i)),
                });
            }
        }
        Ok(RandomMap { space, name: name.into(), codomain, values })
    }

    /// Build a map whose codomain is the sorted set of distinct values.
    pub fn from_values(space: Arc<FiniteSpace>, name: &str, values: Vec<Value>) -> Result<RandomMap> {
        let mut codomain: Vec<Value> = values.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        codomain.sort();
        RandomMap::new(space, name, codomain, values)
    }

    /// The constant map with the given value.
    pub fn constant(space: Arc<FiniteSpace>, name: &str, v: Value) -> RandomMap {
        let n = space.len();
        RandomMap { space, name: name.into(), codomain: vec![v.clone()], values: vec![v; n] }
    }

    /// The identity map: each atom goes to its own label.
    pub fn identity(space: Arc<FiniteSpace>, name: &str) -> RandomMap {
        let values: Vec<Value> = space.atoms().iter().map(|a| Value::label(a.as_str())).collect();
        RandomMap::from_values(space, name, values).expect("atom labels are distinct")
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn codomain(&self) -> &[Value] {
        &self.codomain
    }

    /// Value at the atom with the given index.
    pub fn value_at(&self, i: usize) -> &Value {
        &self.values[i]
    }

    /// All values in atom order.
    pub fn values(&self) -> &[Value] {
        &self.values
    }

    /// Sorted distinct values actually attained on the carrier.
    pub fn image(&self) -> Vec<Value> {
        let set: BTreeSet<&Value> = self.values.iter().collect();
        set.into_iter().cloned().collect()
    }

    /// Atom indices mapped to `v`.
    pub fn fiber(&self, v: &Value) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| &self.values[i] == v).collect()
    }

    /// Post-compose with `g`, producing the map `g ∘ self`.
    pub fn compose(&self, name: &str, g: impl Fn(&Value) -> Value) -> RandomMap {
        let values: Vec<Value> = self.values.iter().map(&g).collect();
        RandomMap::from_values(self.space.clone(), name, values)
            .expect("pointwise images form a valid map")
    }

    /// Whether every value is numeric.
    pub fn is_real_valued(&self) -> bool {
        self.values.iter().all(|v| v.as_rat().is_some())
    }

    /// Numeric value at an atom, or an error naming the offending label.
    pub fn real_value_at(&self, i: usize) -> Result<&Rat> {
        self.values[i].as_rat().ok_or_else(|| Error::NonRealValue {
            name: self.name.clone(),
            atom: self.space.atom(i).into(),
            value: self.values[i].to_string(),
        })
    }

    /// Check that this map and `other` live on the same space.
    pub fn check_same_domain(&self, other: &RandomMap) -> Result<()> {
        if self.space.same_atoms(&other.space) {
            Ok(())
        } else {
            Err(Error::DomainMismatch(self.name.clone(), other.name.clone()))
        }
    }
}

/// A partition of the carrier: the finite σ-field it generates.
///
/// Canonical form — atoms sorted within each cell, cells sorted by their
/// smallest atom index — makes structural equality meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    space: Arc<FiniteSpace>,
    cells: Vec<Vec<usize>>,
    cell_index: Vec<usize>,
}

impl Partition {
    /// Build a partition, checking disjointness, coverage, and non-emptiness.
    pub fn new(space: Arc<FiniteSpace>, cells: Vec<Vec<usize>>) -> Result<Partition> {
        let n = space.len();
        let mut cell_index = vec![usize::MAX; n];
        let mut canonical: Vec<Vec<usize>> = Vec::with_capacity(cells.len());
        for cell in &cells {
            if cell.is_empty() {
                return Err(Error::InvalidPartition("empty cell".into()));
            }
            let mut c = cell.clone();
            c.sort_unstable();
            c.dedup();
            if c.len() != cell.len() {
                return Err(Error::InvalidPartition("repeated atom inside a cell".into()));
            }
            for &i in &c {
                if i >= n {
                    return Err(Error::InvalidPartition(format!("atom index {i} out of range")));
                }
                if cell_index[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "atom '{}' appears in two cells",
                        space.atom(i)
                    )));
                }
                cell_index[i] = canonical.len();
            }
            canonical.push(c);
        }
        if cell_index.iter().any(|&c| c == usize::MAX) {
            return Err(Error::InvalidPartition("cells do not cover the atom set".into()));
        }
        // Sort cells by smallest member and rebuild the membership table.
        canonical.sort_by_key(|c| c[0]);
        for (ci, cell) in canonical.iter().enumerate() {
            for &i in cell {
                cell_index[i] = ci;
            }
        }
        Ok(Partition { space, cells: canonical, cell_index })
    }

    /// Build from atom names instead of indices.
    pub fn from_atom_names(space: Arc<FiniteSpace>, cells: &[Vec<&str>]) -> Result<Partition> {
        let mut idx_cells = Vec::with_capacity(cells.len());
        for cell in cells {
            let mut c = Vec::with_capacity(cell.len());
            for name in cell {
                let i = space.atom_index(name).ok_or_else(|| {
                    Error::InvalidPartition(format!("unknown atom '{name}'"))
                })?;
                c.push(i);
            }
            idx_cells.push(c);
        }
        Partition::new(space, idx_cells)
    }

    /// The one-cell partition (trivial σ-field).
    pub fn trivial(space: Arc<FiniteSpace>) -> Partition {
        let n = space.len();
        Partition::new(space, vec![(0..n).collect()]).expect("one full cell is valid")
    }

    /// The all-singletons partition (discrete σ-field).
    pub fn discrete(space: Arc<FiniteSpace>) -> Partition {
        let n = space.len();
        Partition::new(space, (0..n).map(|i| vec![i]).collect()).expect("singletons are valid")
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Index of the cell containing the given atom.
    pub fn cell_of(&self, atom: usize) -> usize {
        self.cell_index[atom]
    }

    /// Common refinement: all nonempty pairwise intersections of cells.
    pub fn refine(&self, other: &Partition) -> Result<Partition> {
        if !self.space.same_atoms(&other.space) {
            return Err(Error::AtomSetMismatch);
        }
        let mut buckets: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for atom in 0..self.space.len() {
            buckets
                .entry((self.cell_of(atom), other.cell_index[atom]))
                .or_default()
                .push(atom);
        }
        Partition::new(self.space.clone(), buckets.into_values().collect())
    }

    /// Whether every cell of `self` lies inside a cell of `coarser`.
    pub fn is_refinement_of(&self, coarser: &Partition) -> bool {
        self.space.same_atoms(&coarser.space)
            && self.cells.iter().all(|cell| {
                let target = coarser.cell_of(cell[0]);
                cell.iter().all(|&a| coarser.cell_of(a) == target)
            })
    }
}

/// The distribution of a random map: total preimage weight per codomain value.
#[derive(Debug, Clone, PartialEq)]
pub struct PushforwardLaw {
    entries: BTreeMap<Value, ExtReal>,
}

impl PushforwardLaw {
    /// Mass assigned to a value (zero off the codomain).
    pub fn mass(&self, v: &Value) -> ExtReal {
        self.entries.get(v).cloned().unwrap_or_else(ExtReal::zero)
    }

    /// Codomain values with their masses, in value order.
    pub fn entries(&self) -> impl Iterator<Item = (&Value, &ExtReal)> {
        self.entries.iter()
    }

    /// Total mass over the codomain.
    pub fn total_mass(&self) -> ExtReal {
        ext_sum(self.entries.values())
    }
}

/// Law of `y` under its domain's weights: mass(v) = Σ weight(ω) over Y(ω)=v.
///
/// Total function — every codomain value gets an entry, zero off the image;
/// sums containing an infinite atom are infinite.
pub fn pushforward(y: &RandomMap) -> PushforwardLaw {
    let mut entries: BTreeMap<Value, ExtReal> =
        y.codomain().iter().map(|v| (v.clone(), ExtReal::zero())).collect();
    for i in 0..y.space().len() {
        let mass = entries.get_mut(y.value_at(i)).expect("values lie in the codomain");
        *mass = mass.add(y.space().weight(i));
    }
    PushforwardLaw { entries }
}

/// The σ-field generated by `y`, as the partition of nonempty preimages.
pub fn initial_sigma_field(y: &RandomMap) -> Partition {
    let mut fibers: BTreeMap<&Value, Vec<usize>> = BTreeMap::new();
    for i in 0..y.space().len() {
        fibers.entry(y.value_at(i)).or_default().push(i);
    }
    Partition::new(y.space().clone(), fibers.into_values().collect())
        .expect("preimages partition the carrier")
}

/// An explicit σ-finiteness witness: finite-mass pieces covering the support.
#[derive(Debug, Clone)]
pub struct SigmaFiniteWitness {
    pieces: Vec<Vec<usize>>,
    piece_mass: Vec<ExtReal>,
}

impl SigmaFiniteWitness {
    /// Build a witness over the given space; piece masses are computed here.
    pub fn new(space: &FiniteSpace, pieces: Vec<Vec<usize>>) -> Result<SigmaFiniteWitness> {
        for piece in &pieces {
            for &i in piece {
                if i >= space.len() {
                    return Err(Error::InvalidField {
                        field: "pieces".into(),
                        reason: format!("atom index {i} out of range"),
                    });
                }
            }
        }
        let piece_mass = pieces
            .iter()
            .map(|piece| ext_sum(piece.iter().map(|&i| space.weight(i))))
            .collect();
        Ok(SigmaFiniteWitness { pieces, piece_mass })
    }

    /// Build from atom names instead of indices.
    pub fn from_atom_names(space: &FiniteSpace, pieces: &[Vec<&str>]) -> Result<SigmaFiniteWitness> {
        let mut idx_pieces = Vec::with_capacity(pieces.len());
        for piece in pieces {
            let mut p = Vec::with_capacity(piece.len());
            for name in piece {
                let i = space.atom_index(name).ok_or_else(|| Error::InvalidField {
                    field: "pieces".into(),
                    reason: format!("unknown atom '{name}'"),
                })?;
                p.push(i);
            }
            idx_pieces.push(p);
        }
        SigmaFiniteWitness::new(space, idx_pieces)
    }

    /// The witness with one singleton piece per positive-weight atom.
    pub fn singletons(space: &FiniteSpace) -> SigmaFiniteWitness {
        let pieces: Vec<Vec<usize>> = space.support().into_iter().map(|i| vec![i]).collect();
        SigmaFiniteWitness::new(space, pieces).expect("indices come from the space")
    }

    pub fn pieces(&self) -> &[Vec<usize>] {
        &self.pieces
    }

    pub fn piece_mass(&self) -> &[ExtReal] {
        &self.piece_mass
    }
}

/// Verdict of a σ-finiteness check; `diagnostic` names the first violation.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaFinitenessReport {
    pub sigma_finite: bool,
    pub diagnostic: Option<String>,
}

/// Check whether `witness` demonstrates σ-finiteness of the space's weights.
///
/// A verdict, not an exception: `true` iff every piece has finite mass and
/// the pieces jointly cover the support (atoms of positive weight).
pub fn is_sigma_finite(space: &FiniteSpace, witness: &SigmaFiniteWitness) -> SigmaFinitenessReport {
    // An atom of infinite weight can never lie in a finite-mass piece, so it
    // is reported as uncovered regardless of what the pieces say.
    for i in 0..space.len() {
        if !space.weight(i).is_finite() {
            return SigmaFinitenessReport {
                sigma_finite: false,
                diagnostic: Some("infinite atom uncovered by finite piece".into()),
            };
        }
    }
    for (k, mass) in witness.piece_mass().iter().enumerate() {
        if !mass.is_finite() {
            return SigmaFinitenessReport {
                sigma_finite: false,
                diagnostic: Some(format!("piece {k} has infinite mass")),
            };
        }
    }
    let mut covered = vec![false; space.len()];
    for piece in witness.pieces() {
        for &i in piece {
            covered[i] = true;
        }
    }
    for i in space.support() {
        if !covered[i] {
            return SigmaFinitenessReport {
                sigma_finite: false,
                diagnostic: Some(format!(
                    "atom '{}' has positive weight but lies in no piece",
                    space.atom(i)
                )),
            };
        }
    }
    SigmaFinitenessReport { sigma_finite: true, diagnostic: None }
}
