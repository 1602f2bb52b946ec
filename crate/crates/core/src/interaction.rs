//! Interactions: finitely many Hermitian terms indexed by vertex subsets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::LocalObservable;
use crate::error::{Error, Result};
use crate::lattice::{FFunction, MetricLattice};
use crate::linalg::{self, from_row_major, hermitian_deviation, operator_norm, CMatrix, Pauli};
use crate::space::{embed_add, Support, Volume, DEFAULT_MAX_DIM};

/// Tolerance for `Φ(X) = Φ(X)*`, relative to `max(1, ‖Φ(X)‖_F)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// An interaction `Φ` on a lattice of `site_dims.len()` vertices.
///
/// Terms on the same support accumulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    site_dims: Vec<usize>,
    terms: BTreeMap<Support, CMatrix>,
    max_dim: usize,
}

impl Interaction {
    /// Empty interaction on `n_sites` qubits.
    pub fn new(n_sites: usize) -> Self {
        Self::with_dims(vec![2; n_sites])
    }

    pub fn with_dims(site_dims: Vec<usize>) -> Self {
        Interaction { site_dims, terms: BTreeMap::new(), max_dim: DEFAULT_MAX_DIM }
    }

    pub fn with_max_dim(mut self, max_dim: usize) -> Self {
        self.max_dim = max_dim;
        self
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn n_sites(&self) -> usize {
        self.site_dims.len()
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Support, &CMatrix)> {
        self.terms.iter()
    }

    pub fn term(&self, support: &Support) -> Option<&CMatrix> {
        self.terms.get(support)
    }

    fn term_dim(&self, support: &Support) -> Result<usize> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let mut dim = 1usize;
        for &v in support.iter() {
            let d = *self.site_dims.get(v).ok_or(Error::VertexOutOfRange { vertex: v, len: self.n_sites() })?;
            dim = dim.checked_mul(d).ok_or(Error::DimensionCap { dim: usize::MAX, cap: self.max_dim })?;
        }
        Ok(dim)
    }

    /// Adds a Hermitian term; rejects supports outside the lattice and
    /// matrices of the wrong shape.
    pub fn add_term(&mut self, support: impl Into<Support>, matrix: CMatrix) -> Result<()> {
        let support = support.into();
        let dim = self.term_dim(&support)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch { rows: matrix.nrows(), cols: matrix.ncols(), expected: dim });
        }
        let deviation = hermitian_deviation(matrix.as_ref());
        if deviation > HERMITIAN_TOL * linalg::frobenius_norm(matrix.as_ref()).max(1.0) {
            return Err(Error::NotHermitian { support: support.to_vec(), deviation });
        }
        match self.terms.get_mut(&support) {
            Some(existing) => *existing += &matrix,
            None => {
                self.terms.insert(support, matrix);
            }
        }
        Ok(())
    }

    pub fn from_terms(site_dims: Vec<usize>, terms: impl IntoIterator<Item = (Support, CMatrix)>) -> Result<Self> {
        let mut phi = Self::with_dims(site_dims);
        for (s, m) in terms {
            phi.add_term(s, m)?;
        }
        Ok(phi)
    }

    /// Transverse-field Ising: `J σ^z_i σ^z_j` on every edge, `h σ^x_i` on
    /// every site.
    pub fn tfim(lattice: &MetricLattice, j: f64, h: f64) -> Self {
        let zz = linalg::real_scale(linalg::kron(Pauli::Z.matrix().as_ref(), Pauli::Z.matrix().as_ref()).as_ref(), j);
        let x = linalg::real_scale(Pauli::X.matrix().as_ref(), h);
        let mut phi = Self::new(lattice.len());
        if j != 0.0 {
            for (u, v) in edges(lattice) {
                phi.add_term([u, v], zz.clone()).expect("valid preset term");
            }
        }
        if h != 0.0 {
            for v in lattice.vertices() {
                phi.add_term([v], x.clone()).expect("valid preset term");
            }
        }
        phi
    }

    /// Isotropic Heisenberg: `J (σ^xσ^x + σ^yσ^y + σ^zσ^z)` on every edge.
    pub fn heisenberg(lattice: &MetricLattice, j: f64) -> Self {
        let mut bond = CMatrix::zeros(4, 4);
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            bond += linalg::kron(p.matrix().as_ref(), p.matrix().as_ref());
        }
        let bond = linalg::real_scale(bond.as_ref(), j);
        let mut phi = Self::new(lattice.len());
        for (u, v) in edges(lattice) {
            phi.add_term([u, v], bond.clone()).expect("valid preset term");
        }
        phi
    }

    /// `λ Φ`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Interaction {
            site_dims: self.site_dims.clone(),
            terms: self.terms.iter().map(|(s, m)| (s.clone(), linalg::real_scale(m.as_ref(), lambda))).collect(),
            max_dim: self.max_dim,
        }
    }

    /// The volume over `sites` with this interaction's local dimensions.
    pub fn volume(&self, sites: impl Into<Support>) -> Result<Volume> {
        let sites = sites.into();
        let mut dims = Vec::with_capacity(sites.len());
        for &v in sites.iter() {
            dims.push(*self.site_dims.get(v).ok_or(Error::VertexOutOfRange { vertex: v, len: self.n_sites() })?);
        }
        Volume::new(sites, dims, self.max_dim)
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(s, m)| TermRecord { support: s.to_vec(), matrix: linalg::to_row_major(m.as_ref()) })
            .collect()
    }

    pub fn from_records(site_dims: Vec<usize>, records: &[TermRecord]) -> Result<Self> {
        let mut phi = Self::with_dims(site_dims);
        for (k, r) in records.iter().enumerate() {
            let m = from_row_major(&r.matrix).ok_or_else(|| {
                Error::Record(format!("record {k}: matrix entry count {} is not square", r.matrix.len()))
            })?;
            phi.add_term(r.support.clone(), m)?;
        }
        Ok(phi)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_records()).expect("records serialize")
    }

    pub fn from_json(site_dims: Vec<usize>, text: &str) -> Result<Self> {
        let records: Vec<TermRecord> = serde_json::from_str(text).map_err(|e| Error::Record(e.to_string()))?;
        Self::from_records(site_dims, &records)
    }
}

fn edges(lattice: &MetricLattice) -> impl Iterator<Item = (usize, usize)> + '_ {
    lattice
        .vertices()
        .flat_map(move |u| (u + 1..lattice.len()).map(move |v| (u, v)))
        .filter(move |&(u, v)| lattice.distance(u, v) == 1.0)
}

/// Interchange form of one interaction term: row-major `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub support: Vec<usize>,
    pub matrix: Vec<[f64; 2]>,
}

/// `‖Φ‖_a = sup_{x,y} Σ_{X ∋ x,y} ‖Φ(X)‖ / F_a(d(x, y))`, diagonal included.
pub fn phi_a_norm(phi: &Interaction, lattice: &MetricLattice, f: &FFunction) -> Result<f64> {
    phi_a_sup(phi, lattice, f, true)
}

/// [`phi_a_norm`] with the supremum restricted to `x ≠ y`.
pub fn phi_a_norm_off_diagonal(phi: &Interaction, lattice: &MetricLattice, f: &FFunction) -> Result<f64> {
    phi_a_sup(phi, lattice, f, false)
}

fn phi_a_sup(phi: &Interaction, lattice: &MetricLattice, f: &FFunction, diagonal: bool) -> Result<f64> {
    let n = lattice.len();
    let mut weight = vec![0.0f64; n * n];
    for (support, m) in phi.terms() {
        lattice.check_vertices(support)?;
        let norm = operator_norm(m.as_ref());
        for &x in support.iter() {
            for &y in support.iter() {
                weight[x * n + y] += norm;
            }
        }
    }
    let mut best = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let w = weight[x * n + y];
            if w == 0.0 || (!diagonal && x == y) {
                continue;
            }
            let denom = f.eval(lattice.distance(x, y));
            if denom <= 0.0 {
                return Err(Error::VanishingProfile { distance: lattice.distance(x, y) });
            }
            best = best.max(w / denom);
        }
    }
    Ok(best)
}

/// `H = Σ_{X ⊆ volume} Φ(X)` on `H_volume`.
pub fn build_hamiltonian(phi: &Interaction, volume: impl Into<Support>) -> Result<LocalObservable> {
    let volume = phi.volume(volume)?;
    let sites = volume.sites().clone();
    assemble(phi, &volume, |s| s.is_subset(&sites))
}

/// `H_Y = Σ_{Z ⊆ volume, Z ∩ Y ≠ ∅} Φ(Z)`.
pub fn partial_hamiltonian(phi: &Interaction, volume: impl Into<Support>, y: &Support) -> Result<LocalObservable> {
    let volume = phi.volume(volume)?;
    let sites = volume.sites().clone();
    assemble(phi, &volume, |s| s.is_subset(&sites) && s.intersects(y))
}

fn assemble(phi: &Interaction, volume: &Volume, keep: impl Fn(&Support) -> bool) -> Result<LocalObservable> {
    let mut h = CMatrix::zeros(volume.dim(), volume.dim());
    for (support, m) in phi.terms().filter(|(s, _)| keep(s)) {
        embed_add(&mut h, volume, support, m.as_ref())?;
    }
    LocalObservable::on_volume(volume, h)
}

/// Split `Φ = Φ₁ + Φ₂` where `Φ₂` collects the terms crossing the boundary
/// of `S = {v : d(v, X) ≤ d(X, Y)/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledSplit {
    pub phi1: Interaction,
    pub phi2: Interaction,
    pub separating_set: Support,
}

pub fn decouple(
    phi: &Interaction,
    lattice: &MetricLattice,
    x_set: &Support,
    y_set: &Support,
) -> Result<DecoupledSplit> {
    lattice.check_vertices(x_set)?;
    lattice.check_vertices(y_set)?;
    if x_set.is_empty() || y_set.is_empty() {
        return Err(Error::EmptySupport);
    }
    let separation = lattice.set_distance(x_set, y_set);
    if separation <= 0.0 {
        return Err(Error::NotSeparated { x: x_set.to_vec(), y: y_set.to_vec() });
    }
    let separating_set = Support::new(lattice.ball(x_set, separation / 2.0));
    let complement = Support::range(0..lattice.len()).difference(&separating_set);

    let empty = || Interaction { site_dims: phi.site_dims.clone(), terms: BTreeMap::new(), max_dim: phi.max_dim };
    let (mut phi1, mut phi2) = (empty(), empty());
    for (s, m) in phi.terms() {
        let crossing = s.intersects(&separating_set) && s.intersects(&complement);
        let target = if crossing { &mut phi2 } else { &mut phi1 };
        target.terms.insert(s.clone(), m.clone());
    }
    Ok(DecoupledSplit { phi1, phi2, separating_set })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, frobenius_norm, identity, kron};

    fn path(n: usize) -> MetricLattice {
        MetricLattice::path(n).unwrap()
    }

    #[test]
    fn ising_norm_is_four_j() {
        let l = path(5);
        let f = FFunction::power(2.0).unwrap();
        for j in [1.0, 0.3] {
            let phi = Interaction::tfim(&l, j, 0.0);
            assert!((phi_a_norm(&phi, &l, &f).unwrap() - 4.0 * j).abs() < 1e-12);
            let a = 0.7;
            let fa = f.with_tilt(a).unwrap();
            assert!((phi_a_norm(&phi, &l, &fa).unwrap() - 4.0 * j * a.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn on_site_norm() {
        let l = path(1);
        let phi = Interaction::tfim(&l, 1.0, 0.6);
        assert!((phi_a_norm(&phi, &l, &FFunction::power(2.0).unwrap()).unwrap() - 0.6).abs() < 1e-14);
        assert_eq!(phi_a_norm(&Interaction::new(3), &path(3), &FFunction::power(2.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn non_hermitian_term_rejected() {
        let mut phi = Interaction::new(2);
        let sp = CMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        assert!(matches!(phi.add_term([0], sp), Err(Error::NotHermitian { .. })));
        assert!(matches!(phi.add_term([0], identity(4)), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(phi.add_term([7], identity(2)), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn empty_and_single_site_hamiltonians() {
        let phi = Interaction::new(3);
        let h = build_hamiltonian(&phi, Support::range(0..3)).unwrap();
        assert_eq!(frobenius_norm(h.matrix().as_ref()), 0.0);

        let phi = Interaction::tfim(&path(1), 0.0, 0.8);
        let h = build_hamiltonian(&phi, [0]).unwrap();
        let expected = linalg::real_scale(Pauli::X.matrix().as_ref(), 0.8);
        assert!(frobenius_norm((h.matrix() - &expected).as_ref()) < 1e-15);
    }

    #[test]
    fn two_site_tfim_matches_dense_construction() {
        let phi = Interaction::tfim(&path(2), 1.0, 1.0);
        let h = build_hamiltonian(&phi, [0, 1]).unwrap();
        let (x, z, i2) = (Pauli::X.matrix(), Pauli::Z.matrix(), identity(2));
        let oracle = kron(z.as_ref(), z.as_ref()) + kron(x.as_ref(), i2.as_ref()) + kron(i2.as_ref(), x.as_ref());
        assert!(frobenius_norm((h.matrix() - &oracle).as_ref()) < 1e-14);
        // eigenvalues of ZZ + X1 + X2 are ±sqrt(5), ±1
        let mut ev = h.matrix().self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        ev.sort_by(f64::total_cmp);
        let s5 = 5f64.sqrt();
        for (got, want) in ev.iter().zip([-s5, -1.0, 1.0, s5]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn partial_hamiltonian_restricts_terms() {
        let l = path(4);
        let phi = Interaction::tfim(&l, 1.0, 0.5);
        let all = Support::range(0..4);
        let full = build_hamiltonian(&phi, all.clone()).unwrap();
        let same = partial_hamiltonian(&phi, all.clone(), &all).unwrap();
        assert!(frobenius_norm((full.matrix() - same.matrix()).as_ref()) < 1e-15);

        let none = partial_hamiltonian(&phi, Support::range(0..2), &Support::single(3)).unwrap();
        assert_eq!(frobenius_norm(none.matrix().as_ref()), 0.0);

        // Y = {0}: bond {0,1} and site {0} only
        let h0 = partial_hamiltonian(&phi, all.clone(), &Support::single(0)).unwrap();
        let mut oracle = Interaction::new(4);
        oracle.add_term([0, 1], phi.term(&Support::from([0, 1])).unwrap().clone()).unwrap();
        oracle.add_term([0], phi.term(&Support::single(0)).unwrap().clone()).unwrap();
        let expected = build_hamiltonian(&oracle, all).unwrap();
        assert!(frobenius_norm((h0.matrix() - expected.matrix()).as_ref()) < 1e-15);
    }

    #[test]
    fn decouple_path_of_eight() {
        let l = path(8);
        let phi = Interaction::tfim(&l, 1.0, 0.0);
        let split = decouple(&phi, &l, &Support::single(0), &Support::single(7)).unwrap();
        assert_eq!(split.separating_set.as_slice(), &[0, 1, 2, 3]);
        let crossing: Vec<_> = split.phi2.terms().map(|(s, _)| s.to_vec()).collect();
        assert_eq!(crossing, vec![vec![3, 4]]);
        assert_eq!(split.phi1.len() + split.phi2.len(), phi.len());
    }

    #[test]
    fn decouple_adjacent_and_errors() {
        let l = path(4);
        let phi = Interaction::tfim(&l, 1.0, 1.0);
        let split = decouple(&phi, &l, &Support::single(1), &Support::single(2)).unwrap();
        assert_eq!(split.separating_set.as_slice(), &[1]);
        assert_eq!(
            decouple(&phi, &l, &Support::single(1), &Support::single(1)).unwrap_err(),
            Error::NotSeparated { x: vec![1], y: vec![1] }
        );

        let fields_only = Interaction::tfim(&l, 0.0, 1.0);
        let split = decouple(&fields_only, &l, &Support::single(0), &Support::single(3)).unwrap();
        assert!(split.phi2.is_empty());
        assert_eq!(split.phi1, fields_only);
    }

    #[test]
    fn records_round_trip() {
        let phi = Interaction::heisenberg(&path(3), 0.5);
        let back = Interaction::from_json(vec![2; 3], &phi.to_json()).unwrap();
        assert_eq!(back, phi);
        assert!(Interaction::from_json(vec![2; 3], r#"[{"support":[0],"matrix":[[1,0],[0,0],[0,0]]}]"#).is_err());
    }
}
