//! Tensor-product layout of finite volumes.
//!
//! Tensor factors are ordered by ascending vertex id, the smallest id being
//! the most significant digit of the basis index. With qubits on sites
//! `{0, 1}` the basis is `|00⟩, |01⟩, |10⟩, |11⟩` and `σ^z` on site 0 is
//! `diag(1, 1, -1, -1)`.

use std::fmt;
use std::ops::Deref;

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};

/// Default cap on the Hilbert dimension of a volume (twelve qubits).
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Sorted, duplicate-free set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct Support(Vec<usize>);

impl Support {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        Support(sites)
    }

    pub fn single(site: usize) -> Self {
        Support(vec![site])
    }

    pub fn range(range: std::ops::Range<usize>) -> Self {
        Support(range.collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains_site(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_subset(&self, other: &Support) -> bool {
        self.0.iter().all(|&v| other.contains_site(v))
    }

    pub fn intersects(&self, other: &Support) -> bool {
        self.0.iter().any(|&v| other.contains_site(v))
    }

    pub fn difference(&self, other: &Support) -> Support {
        Support(self.0.iter().copied().filter(|&v| !other.contains_site(v)).collect())
    }

    pub fn union(&self, other: &Support) -> Support {
        Support::new(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.0.clone()
    }
}

impl Deref for Support {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Support {
    fn from(v: Vec<usize>) -> Self {
        Support::new(v)
    }
}

impl From<Support> for Vec<usize> {
    fn from(s: Support) -> Self {
        s.0
    }
}

impl<const N: usize> From<[usize; N]> for Support {
    fn from(v: [usize; N]) -> Self {
        Support::new(v.to_vec())
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A set of sites together with their local dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Volume {
    sites: Support,
    dims: Vec<usize>,
}

impl Volume {
    /// `dims[k]` is the local dimension of the `k`-th smallest site.
    pub fn new(sites: Support, dims: Vec<usize>, max_dim: usize) -> Result<Self> {
        if sites.len() != dims.len() {
            return Err(Error::InvalidShape(format!("{} sites but {} local dimensions", sites.len(), dims.len())));
        }
        let dim = checked_dim(&dims, max_dim)?;
        debug_assert!(dim <= max_dim);
        Ok(Volume { sites, dims })
    }

    pub fn qubits(sites: impl Into<Support>) -> Result<Self> {
        let sites = sites.into();
        let dims = vec![2; sites.len()];
        Self::new(sites, dims, DEFAULT_MAX_DIM)
    }

    pub fn sites(&self) -> &Support {
        &self.sites
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn local_dim(&self, site: usize) -> Option<usize> {
        self.sites.binary_search(&site).ok().map(|k| self.dims[k])
    }

    /// Local dimensions of `subset`, in ascending site order.
    pub fn dims_of(&self, subset: &Support) -> Result<Vec<usize>> {
        subset
            .iter()
            .map(|&v| self.local_dim(v))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::SupportNotContained { support: subset.to_vec(), volume: self.sites.to_vec() })
    }

    pub fn sub_volume(&self, subset: &Support) -> Result<Volume> {
        let dims = self.dims_of(subset)?;
        Ok(Volume { sites: subset.clone(), dims })
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Offsets into the volume basis of every configuration of `subset`,
    /// enumerated in `subset`'s own row-major order.
    pub fn offsets(&self, subset: &Support) -> Result<Vec<usize>> {
        let strides = self.strides();
        let mut factors = Vec::with_capacity(subset.len());
        for &v in subset.iter() {
            let k = self
                .sites
                .binary_search(&v)
                .map_err(|_| Error::SupportNotContained { support: subset.to_vec(), volume: self.sites.to_vec() })?;
            factors.push((self.dims[k], strides[k]));
        }
        let mut offsets = vec![0usize];
        for (d, stride) in factors {
            offsets = offsets.iter().flat_map(|&o| (0..d).map(move |digit| o + digit * stride)).collect();
        }
        Ok(offsets)
    }
}

fn checked_dim(dims: &[usize], max_dim: usize) -> Result<usize> {
    let mut dim = 1usize;
    for &d in dims {
        if d == 0 {
            return Err(Error::InvalidShape("local dimension must be positive".into()));
        }
        dim = dim
            .checked_mul(d)
            .filter(|&x| x <= max_dim)
            .ok_or(Error::DimensionCap { dim: dims.iter().fold(1usize, |a, &b| a.saturating_mul(b)), cap: max_dim })?;
    }
    Ok(dim)
}

/// Adds `op ⊗ 1` into `target`, where `op` acts on `support ⊆ volume`.
pub fn embed_add(target: &mut CMatrix, volume: &Volume, support: &Support, op: MatRef<'_, c64>) -> Result<()> {
    let inner = volume.offsets(support)?;
    let outer = volume.offsets(&volume.sites.difference(support))?;
    if op.nrows() != inner.len() || op.ncols() != inner.len() {
        return Err(Error::ShapeMismatch { rows: op.nrows(), cols: op.ncols(), expected: inner.len() });
    }
    for &r in &outer {
        for (i, &oi) in inner.iter().enumerate() {
            for (j, &oj) in inner.iter().enumerate() {
                target[(r + oi, r + oj)] += op[(i, j)];
            }
        }
    }
    Ok(())
}

/// `op ⊗ 1` on the whole volume.
pub fn embed_matrix(volume: &Volume, support: &Support, op: MatRef<'_, c64>) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(volume.dim(), volume.dim());
    embed_add(&mut out, volume, support, op)?;
    Ok(out)
}

/// `Tr_{volume ∖ keep}(m)` as a matrix on `keep`.
pub fn partial_trace(volume: &Volume, keep: &Support, m: MatRef<'_, c64>) -> Result<CMatrix> {
    let inner = volume.offsets(keep)?;
    let outer = volume.offsets(&volume.sites.difference(keep))?;
    if m.nrows() != volume.dim() || m.ncols() != volume.dim() {
        return Err(Error::ShapeMismatch { rows: m.nrows(), cols: m.ncols(), expected: volume.dim() });
    }
    Ok(CMatrix::from_fn(inner.len(), inner.len(), |i, j| outer.iter().map(|&r| m[(r + inner[i], r + inner[j])]).sum()))
}
