//! Exact Heisenberg dynamics on small volumes.
//!
//! `τ_t(A) = e^{itH} A e^{-itH}` is evaluated through a full Hermitian
//! eigendecomposition `H = V diag(E) V*`: with `R = V* A V`,
//! `τ_t(A) = V [e^{i(E_j - E_k)t} R_jk] V*`. An [`Evolution`] caches the
//! decomposition so a whole time grid costs two matrix products per point.

use faer::{Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, Pauli};
use crate::space::{embed_matrix, partial_trace, Support, Volume};

/// Tolerance for algebraic identities of the dynamics.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for Hermiticity and trace checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A matrix on `H_support`, tensor factors in ascending site order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalObservable {
    support: Support,
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl LocalObservable {
    pub fn new(support: impl Into<Support>, dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let support = support.into();
        if support.len() != dims.len() {
            return Err(Error::InvalidShape(format!("{} sites but {} local dimensions", support.len(), dims.len())));
        }
        let expected: usize = dims.iter().product();
        if matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(Error::ShapeMismatch { rows: matrix.nrows(), cols: matrix.ncols(), expected });
        }
        Ok(LocalObservable { support, dims, matrix })
    }

    /// Observable on qubit sites.
    pub fn qubits(support: impl Into<Support>, matrix: CMatrix) -> Result<Self> {
        let support = support.into();
        let dims = vec![2; support.len()];
        Self::new(support, dims, matrix)
    }

    pub fn pauli(site: usize, p: Pauli) -> Self {
        LocalObservable { support: Support::single(site), dims: vec![2], matrix: p.matrix() }
    }

    pub fn on_volume(volume: &Volume, matrix: CMatrix) -> Result<Self> {
        Self::new(volume.sites().clone(), volume.dims().to_vec(), matrix)
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// The volume this observable lives on, without any dimension cap.
    pub fn volume(&self) -> Volume {
        Volume::new(self.support.clone(), self.dims.clone(), usize::MAX).expect("dims validated on construction")
    }

    pub fn is_hermitian(&self) -> bool {
        linalg::hermitian_deviation(self.matrix.as_ref())
            <= HERMITIAN_TOL * linalg::frobenius_norm(self.matrix.as_ref()).max(1.0)
    }

    pub fn adjoint(&self) -> Self {
        LocalObservable {
            support: self.support.clone(),
            dims: self.dims.clone(),
            matrix: self.matrix.adjoint().to_owned(),
        }
    }

    /// Product of two observables on the same support.
    pub fn mul(&self, other: &LocalObservable) -> Result<Self> {
        self.same_volume(other)?;
        Ok(LocalObservable {
            support: self.support.clone(),
            dims: self.dims.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn sub(&self, other: &LocalObservable) -> Result<Self> {
        self.same_volume(other)?;
        Ok(LocalObservable {
            support: self.support.clone(),
            dims: self.dims.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }

    fn same_volume(&self, other: &LocalObservable) -> Result<()> {
        if self.support != other.support || self.dims != other.dims {
            return Err(Error::VolumeMismatch { left: self.support.to_vec(), right: other.support.to_vec() });
        }
        Ok(())
    }
}

/// `obs ⊗ 1` on `volume ∖ supp(obs)`.
pub fn embed(obs: &LocalObservable, volume: &Volume) -> Result<LocalObservable> {
    if !obs.support.is_subset(volume.sites()) {
        return Err(Error::SupportNotContained { support: obs.support.to_vec(), volume: volume.sites().to_vec() });
    }
    if volume.dims_of(&obs.support)? != obs.dims {
        return Err(Error::InvalidShape(format!("local dimensions of {} disagree with the volume", obs.support)));
    }
    if obs.support == *volume.sites() {
        return Ok(obs.clone());
    }
    let matrix = embed_matrix(volume, &obs.support, obs.matrix.as_ref())?;
    LocalObservable::on_volume(volume, matrix)
}

/// Largest singular value.
pub fn operator_norm(obs: &LocalObservable) -> f64 {
    linalg::operator_norm(obs.matrix.as_ref())
}

/// Eigendecomposition of a Hamiltonian, reused across observables and times.
#[derive(Debug, Clone)]
pub struct Evolution {
    volume: Volume,
    energies: Vec<f64>,
    basis: CMatrix,
}

impl Evolution {
    pub fn new(h: &LocalObservable) -> Result<Self> {
        let deviation = linalg::hermitian_deviation(h.matrix.as_ref());
        if !h.is_hermitian() {
            return Err(Error::NotHermitian { support: h.support.to_vec(), deviation });
        }
        let eig = h.matrix.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let basis = eig.U().to_owned();
        let energies: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();

        let n = basis.nrows();
        let gram = basis.adjoint() * &basis - Mat::<c64>::identity(n, n);
        let unitarity = linalg::frobenius_norm(gram.as_ref());
        if unitarity > IDENTITY_TOL {
            return Err(Error::Linalg(format!("eigenbasis is not unitary (deviation {unitarity:e})")));
        }
        Ok(Evolution { volume: h.volume(), energies, basis })
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Rotates `obs` into the eigenbasis once; see [`Prepared::at`].
    pub fn prepare(&self, obs: &LocalObservable) -> Result<Prepared<'_>> {
        let obs = embed(obs, &self.volume)?;
        let rotated = self.basis.adjoint() * obs.matrix() * &self.basis;
        Ok(Prepared { evolution: self, original: obs, rotated })
    }

    pub fn evolve(&self, obs: &LocalObservable, t: f64) -> Result<LocalObservable> {
        Ok(self.prepare(obs)?.at(t))
    }

    /// `‖[τ_t(A), B]‖`.
    pub fn commutator_norm(&self, a: &Prepared<'_>, b: &LocalObservable, t: f64) -> Result<f64> {
        let b = embed(b, &self.volume)?;
        let ta = a.at(t);
        Ok(linalg::operator_norm(linalg::commutator(ta.matrix().as_ref(), b.matrix().as_ref()).as_ref()))
    }

    /// Evolves `A`, `B` and `AB` together for correlation measurements.
    pub fn correlation_probe(&self, a: &LocalObservable, b: &LocalObservable) -> Result<CorrelationProbe<'_>> {
        if a.support.intersects(&b.support) {
            return Err(Error::OverlappingSupports { x: a.support.to_vec(), y: b.support.to_vec() });
        }
        let ea = embed(a, &self.volume)?;
        let eb = embed(b, &self.volume)?;
        let ab = ea.mul(&eb)?;
        Ok(CorrelationProbe { a: self.prepare(&ea)?, b: self.prepare(&eb)?, ab: self.prepare(&ab)? })
    }
}

/// An observable expressed in the eigenbasis of the generator.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    evolution: &'a Evolution,
    original: LocalObservable,
    rotated: CMatrix,
}

impl Prepared<'_> {
    /// `τ_t(A)` on the evolution's volume; `τ_0(A)` is `A` exactly.
    pub fn at(&self, t: f64) -> LocalObservable {
        if t == 0.0 {
            return self.original.clone();
        }
        let e = &self.evolution.energies;
        let phases: Vec<c64> = e.iter().map(|&ej| c64::from_polar(1.0, ej * t)).collect();
        let r = &self.rotated;
        let m = Mat::from_fn(r.nrows(), r.ncols(), |j, k| phases[j] * r[(j, k)] * phases[k].conj());
        let v = &self.evolution.basis;
        let matrix = v * m * v.adjoint();
        LocalObservable::on_volume(&self.evolution.volume, matrix).expect("shape preserved")
    }
}

/// `τ_t(A) = e^{itH} A e^{-itH}`.
pub fn heisenberg_evolve(obs: &LocalObservable, h: &LocalObservable, t: f64) -> Result<LocalObservable> {
    Evolution::new(h)?.evolve(obs, t)
}

/// `‖[τ_t(A), B]‖` with `A`, `B` embedded into the Hamiltonian's volume.
pub fn commutator_norm(a: &LocalObservable, b: &LocalObservable, h: &LocalObservable, t: f64) -> Result<f64> {
    let evo = Evolution::new(h)?;
    let pa = evo.prepare(a)?;
    evo.commutator_norm(&pa, b, t)
}

/// `⟨A⟩_{X^c}`, the Haar average of `U* A U` over unitaries on `volume ∖ X`,
/// evaluated as `Tr_{X^c}(A) / dim H_{X^c}`. The result is supported in `X`.
pub fn haar_conditional_expectation(
    obs: &LocalObservable,
    x_set: &Support,
    volume: &Volume,
) -> Result<LocalObservable> {
    let obs = embed(obs, volume)?;
    let rest = volume.sites().difference(x_set);
    let rest_dim: usize = volume.dims_of(&rest)?.iter().product();
    let reduced = partial_trace(volume, x_set, obs.matrix().as_ref())?;
    let x_volume = volume.sub_volume(x_set)?;
    LocalObservable::on_volume(&x_volume, linalg::real_scale(reduced.as_ref(), 1.0 / rest_dim as f64))
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<c64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<c64> = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c64::new(re, im)
            })
            .collect();
        for q in &cols {
            let overlap: c64 = q.iter().zip(&v).map(|(qi, vi)| qi.conj() * vi).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= overlap * qi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    Mat::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Hermitian qubit observable on `support` with Gaussian entries, scaled to
/// unit operator norm.
pub fn random_observable<R: Rng + ?Sized>(support: impl Into<Support>, rng: &mut R) -> LocalObservable {
    let support = support.into();
    let dim = 1usize << support.len();
    let g = Mat::from_fn(dim, dim, |_, _| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let h = (&g + g.adjoint()) * faer::Scale(c64::new(0.5, 0.0));
    let norm = linalg::operator_norm(h.as_ref());
    LocalObservable::qubits(support, linalg::real_scale(h.as_ref(), 1.0 / norm)).expect("square qubit matrix")
}

/// Monte-Carlo estimate of `⟨A⟩_{X^c}` from `samples` Haar unitaries on
/// `volume ∖ X`, embedded in `volume`. Cross-check for
/// [`haar_conditional_expectation`].
pub fn monte_carlo_twirl<R: Rng + ?Sized>(
    obs: &LocalObservable,
    x_set: &Support,
    volume: &Volume,
    samples: usize,
    rng: &mut R,
) -> Result<LocalObservable> {
    let obs = embed(obs, volume)?;
    let rest = volume.sites().difference(x_set);
    let rest_dim: usize = volume.dims_of(&rest)?.iter().product();
    let mut acc = CMatrix::zeros(volume.dim(), volume.dim());
    for _ in 0..samples {
        let u = embed_matrix(volume, &rest, haar_unitary(rest_dim, rng).as_ref())?;
        acc += u.adjoint() * obs.matrix() * &u;
    }
    LocalObservable::on_volume(volume, linalg::real_scale(acc.as_ref(), 1.0 / samples.max(1) as f64))
}

/// One-site state of a product state.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteState {
    /// `|0⟩⟨0|`, the `+1` eigenvector of `σ^z`.
    Up,
    Down,
    MaximallyMixed,
    Density(CMatrix),
}

/// `Ω = ⊗_x Ω_x`, one density matrix per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    factors: Vec<CMatrix>,
}

impl ProductState {
    pub fn new(factors: Vec<CMatrix>) -> Result<Self> {
        for (site, rho) in factors.iter().enumerate() {
            validate_density(site, rho)?;
        }
        Ok(ProductState { factors })
    }

    /// Qubit product state from per-site descriptions.
    pub fn from_sites(sites: &[SiteState]) -> Result<Self> {
        let factors = sites
            .iter()
            .map(|s| match s {
                SiteState::Up => Mat::from_fn(2, 2, |i, j| c64::new((i == 0 && j == 0) as u8 as f64, 0.0)),
                SiteState::Down => Mat::from_fn(2, 2, |i, j| c64::new((i == 1 && j == 1) as u8 as f64, 0.0)),
                SiteState::MaximallyMixed => linalg::real_scale(linalg::identity(2).as_ref(), 0.5),
                SiteState::Density(m) => m.clone(),
            })
            .collect();
        Self::new(factors)
    }

    pub fn uniform(n_sites: usize, site: SiteState) -> Result<Self> {
        Self::from_sites(&vec![site; n_sites])
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    /// Reduced density matrix on `support`.
    pub fn reduced(&self, support: &Support) -> Result<CMatrix> {
        let mut rho = linalg::identity(1);
        for &v in support.iter() {
            let f = self.factors.get(v).ok_or(Error::VertexOutOfRange { vertex: v, len: self.factors.len() })?;
            rho = linalg::kron(rho.as_ref(), f.as_ref());
        }
        Ok(rho)
    }

    /// `⟨O⟩ = Tr(Ω O)`.
    pub fn expectation(&self, obs: &LocalObservable) -> Result<c64> {
        let rho = self.reduced(obs.support())?;
        if rho.nrows() != obs.matrix().nrows() {
            return Err(Error::ShapeMismatch {
                rows: obs.matrix().nrows(),
                cols: obs.matrix().ncols(),
                expected: rho.nrows(),
            });
        }
        Ok(linalg::trace_product(rho.as_ref(), obs.matrix().as_ref()))
    }
}

fn validate_density(site: usize, rho: &CMatrix) -> Result<()> {
    let bad = |reason: String| Err(Error::InvalidState { site, reason });
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return bad(format!("shape {}x{}", rho.nrows(), rho.ncols()));
    }
    if linalg::hermitian_deviation(rho.as_ref()) > HERMITIAN_TOL {
        return bad("not Hermitian".into());
    }
    let tr = linalg::trace(rho.as_ref());
    if (tr - c64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
        return bad(format!("trace {tr}"));
    }
    let min_eig = rho
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -HERMITIAN_TOL {
        return bad(format!("negative eigenvalue {min_eig:e}"));
    }
    Ok(())
}

/// `⟨τ_t(AB)⟩ - ⟨τ_t(A)⟩⟨τ_t(B)⟩` and its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
}

impl Correlation {
    pub fn value(&self) -> c64 {
        c64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationProbe<'a> {
    a: Prepared<'a>,
    b: Prepared<'a>,
    ab: Prepared<'a>,
}

impl CorrelationProbe<'_> {
    pub fn at(&self, omega: &ProductState, t: f64) -> Result<Correlation> {
        let ab = omega.expectation(&self.ab.at(t))?;
        let a = omega.expectation(&self.a.at(t))?;
        let b = omega.expectation(&self.b.at(t))?;
        let v = ab - a * b;
        Ok(Correlation { re: v.re, im: v.im, magnitude: v.norm() })
    }
}

pub fn dynamic_correlation(
    a: &LocalObservable,
    b: &LocalObservable,
    h: &LocalObservable,
    omega: &ProductState,
    t: f64,
) -> Result<Correlation> {
    let evo = Evolution::new(h)?;
    evo.correlation_probe(a, b)?.at(omega, t)
}
