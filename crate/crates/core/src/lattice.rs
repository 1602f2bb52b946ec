//! Finite metric lattices and the decay profiles (F-functions) measured on them.
//!
//! A [`MetricLattice`] is a dense table of graph distances between vertices
//! `0..len`. An [`FFunction`] is a non-increasing profile `F` together with a
//! tilt `a`, evaluated as `F_a(r) = exp(-a r) F(r)`. The two lattice
//! constants every certificate depends on are
//!
//! * `‖F_a‖ = sup_x Σ_y F_a(d(x, y))` ([`f_norm`]), and
//! * `C_a = sup_{x,y} Σ_z F_a(d(x, z)) F_a(d(z, y)) / F_a(d(x, y))`
//!   ([`convolution_constant`]).
//!
//! Both suprema range over every vertex and every ordered pair, diagonal
//! included.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected graph description produced by the lattice builders.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub name: String,
    /// Spatial dimension used for the default profile exponent.
    pub dimension: usize,
    pub len: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn path(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidShape("path needs at least one vertex".into()));
        }
        Ok(Graph { name: format!("path{n}"), dimension: 1, len: n, edges: (1..n).map(|i| (i - 1, i)).collect() })
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidShape(format!("ring needs at least 3 vertices, got {n}")));
        }
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        Ok(Graph { name: format!("ring{n}"), dimension: 1, len: n, edges })
    }

    /// Rectangular grid graph; vertex ids are row-major in `dims`
    /// (see [`grid_index`]).
    pub fn grid(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidShape(format!("grid dims must be nonempty and positive, got {dims:?}")));
        }
        let len: usize = dims.iter().product();
        let mut edges = Vec::new();
        let mut coords = vec![0usize; dims.len()];
        for v in 0..len {
            for axis in 0..dims.len() {
                if coords[axis] + 1 < dims[axis] {
                    coords[axis] += 1;
                    edges.push((v, grid_index(dims, &coords)));
                    coords[axis] -= 1;
                }
            }
            // advance the row-major odometer
            for axis in (0..dims.len()).rev() {
                coords[axis] += 1;
                if coords[axis] < dims[axis] {
                    break;
                }
                coords[axis] = 0;
            }
        }
        let name = format!("grid{}", dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x"));
        Ok(Graph { name, dimension: dims.len(), len, edges })
    }
}

/// Row-major vertex id of a grid coordinate.
pub fn grid_index(dims: &[usize], coords: &[usize]) -> usize {
    debug_assert_eq!(dims.len(), coords.len());
    coords.iter().zip(dims).fold(0, |acc, (&c, &d)| acc * d + c)
}

/// Finite vertex set `0..len` with a symmetric distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricLattice {
    name: String,
    dimension: usize,
    len: usize,
    dist: Vec<f64>,
}

/// All-pairs shortest path lengths of a connected graph, one BFS per source.
pub fn graph_distance(graph: &Graph) -> Result<MetricLattice> {
    let n = graph.len;
    let mut adjacency = vec![Vec::new(); n];
    for &(u, v) in &graph.edges {
        if u >= n || v >= n {
            return Err(Error::EdgeOutOfRange(u, v));
        }
        adjacency[u].push(v);
        adjacency[v].push(u);
    }

    let mut dist = vec![f64::INFINITY; n * n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        let row = &mut dist[source * n..(source + 1) * n];
        row[source] = 0.0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if row[v].is_infinite() {
                    row[v] = row[u] + 1.0;
                    queue.push_back(v);
                }
            }
        }
    }

    if dist[..n].iter().any(|d| d.is_infinite()) {
        return Err(Error::Disconnected { components: components(n, &dist) });
    }
    Ok(MetricLattice { name: graph.name.clone(), dimension: graph.dimension, len: n, dist })
}

fn components(n: usize, dist: &[f64]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for v in 0..n {
        if seen[v] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&w| dist[v * n + w].is_finite()).collect();
        for &w in &comp {
            seen[w] = true;
        }
        out.push(comp);
    }
    out
}

impl MetricLattice {
    pub fn path(n: usize) -> Result<Self> {
        graph_distance(&Graph::path(n)?)
    }

    pub fn ring(n: usize) -> Result<Self> {
        graph_distance(&Graph::ring(n)?)
    }

    pub fn grid(dims: &[usize]) -> Result<Self> {
        graph_distance(&Graph::grid(dims)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn vertices(&self) -> std::ops::Range<usize> {
        0..self.len
    }

    #[inline]
    pub fn distance(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.len + y]
    }

    pub fn contains(&self, v: usize) -> bool {
        v < self.len
    }

    pub fn check_vertices(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&v| !self.contains(v)) {
            Some(&vertex) => Err(Error::VertexOutOfRange { vertex, len: self.len }),
            None => Ok(()),
        }
    }

    /// `d(v, X) = min_{x ∈ X} d(v, x)`; infinite for empty `X`.
    pub fn distance_to_set(&self, v: usize, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.distance(v, x)).fold(f64::INFINITY, f64::min)
    }

    /// `d(X, Y) = min_{x ∈ X, y ∈ Y} d(x, y)`.
    pub fn set_distance(&self, x_set: &[usize], y_set: &[usize]) -> f64 {
        x_set.iter().map(|&x| self.distance_to_set(x, y_set)).fold(f64::INFINITY, f64::min)
    }

    /// Closed ball `{v : d(v, X) ≤ radius}`, ascending.
    pub fn ball(&self, center: &[usize], radius: f64) -> Vec<usize> {
        self.vertices().filter(|&v| self.distance_to_set(v, center) <= radius).collect()
    }
}

/// Base decay profile before tilting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// `(1 + r)^(-p)`
    Power { p: f64 },
    /// `exp(-rate r)`: integrable but admits no uniform convolution constant.
    Exponential { rate: f64 },
}

impl Profile {
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Profile::Power { p } => (1.0 + r).powf(-p),
            Profile::Exponential { rate } => (-rate * r).exp(),
        }
    }
}

/// A decay profile `F` with tilt `a`, evaluated as `F_a(r) = exp(-a r) F(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FFunction {
    #[serde(flatten)]
    pub profile: Profile,
    #[serde(rename = "a", default)]
    pub tilt: f64,
}

impl FFunction {
    pub fn new(profile: Profile, tilt: f64) -> Result<Self> {
        match profile {
            Profile::Power { p } if !(p.is_finite() && p > 0.0) => {
                return Err(Error::InvalidProfile(format!("power exponent must be positive, got {p}")))
            }
            Profile::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                return Err(Error::InvalidProfile(format!("exponential rate must be positive, got {rate}")))
            }
            _ => {}
        }
        if !(tilt.is_finite() && tilt >= 0.0) {
            return Err(Error::InvalidProfile(format!("tilt must be finite and nonnegative, got {tilt}")));
        }
        Ok(FFunction { profile, tilt })
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(Profile::Power { p }, 0.0)
    }

    /// Power law with exponent `d + 1` for a `d`-dimensional lattice.
    pub fn default_for(lattice: &MetricLattice) -> Self {
        FFunction { profile: Profile::Power { p: lattice.dimension() as f64 + 1.0 }, tilt: 0.0 }
    }

    /// Same profile, different tilt.
    pub fn with_tilt(&self, tilt: f64) -> Result<Self> {
        Self::new(self.profile, tilt)
    }

    pub fn untilted(&self) -> Self {
        FFunction { profile: self.profile, tilt: 0.0 }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        (-self.tilt * r).exp() * self.profile.eval(r)
    }
}

/// `‖F_a‖ = sup_x Σ_y F_a(d(x, y))`, the term `y = x` included.
pub fn f_norm(lattice: &MetricLattice, f: &FFunction) -> f64 {
    lattice
        .vertices()
        .map(|x| lattice.vertices().map(|y| f.eval(lattice.distance(x, y))).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `Σ_z F_a(d(x, z)) F_a(d(z, y)) / F_a(d(x, y))` for one ordered pair.
pub fn convolution_ratio(lattice: &MetricLattice, f: &FFunction, x: usize, y: usize) -> Result<f64> {
    let denom = f.eval(lattice.distance(x, y));
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::VanishingProfile { distance: lattice.distance(x, y) });
    }
    let num: f64 = lattice.vertices().map(|z| f.eval(lattice.distance(x, z)) * f.eval(lattice.distance(z, y))).sum();
    Ok(num / denom)
}

/// `C_a`: the supremum of [`convolution_ratio`] over all ordered pairs,
/// diagonal included.
pub fn convolution_constant(lattice: &MetricLattice, f: &FFunction) -> Result<f64> {
    convolution_sup(lattice, f, true)
}

/// `C_a` with the supremum restricted to `x ≠ y`; reported alongside
/// [`convolution_constant`] to expose sensitivity to the diagonal.
pub fn convolution_constant_off_diagonal(lattice: &MetricLattice, f: &FFunction) -> Result<f64> {
    convolution_sup(lattice, f, false)
}

fn convolution_sup(lattice: &MetricLattice, f: &FFunction, diagonal: bool) -> Result<f64> {
    let n = lattice.len();
    let table: Vec<f64> = (0..n * n).map(|k| f.eval(lattice.distance(k / n, k % n))).collect();
    let mut best = 0.0f64;
    for x in 0..n {
        for y in (if diagonal { x } else { x + 1 })..n {
            let denom = table[x * n + y];
            if denom <= 0.0 || !denom.is_finite() {
                return Err(Error::VanishingProfile { distance: lattice.distance(x, y) });
            }
            // symmetric in (x, y), so the upper triangle suffices
            let num: f64 = (0..n).map(|z| table[x * n + z] * table[z * n + y]).sum();
            best = best.max(num / denom);
        }
    }
    Ok(best)
}

/// Convolution ratio of the purely exponential profile between the endpoints
/// of a path with `path_length` edges. Every vertex on the geodesic
/// contributes exactly one, so the ratio grows without bound.
pub fn exponential_counterexample_ratio(path_length: usize) -> f64 {
    let lattice = MetricLattice::path(path_length + 1).expect("path has at least one vertex");
    let (x, y) = (0, path_length);
    let d = lattice.distance(x, y);
    // G(r) G(s) / G(d) = e^-(r + s - d), evaluated in one exponential so
    // geodesic terms are exactly 1
    lattice.vertices().map(|z| (-(lattice.distance(x, z) + lattice.distance(z, y) - d)).exp()).sum()
}

/// Truncated evaluation of `2^(d+ε+1) Σ_{n ∈ Z^d} (1 + |n|)^(-d-ε)` with the
/// ℓ¹ norm, the reference upper bound on `C` for the power-law profile on
/// `Z^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZdReference {
    pub dimension: usize,
    pub epsilon: f64,
    pub cutoff: usize,
    /// `Σ_{|n| ≤ cutoff} (1 + |n|)^(-d-ε)`.
    pub truncated_sum: f64,
    /// Upper bound on the omitted tail `Σ_{|n| > cutoff}`.
    pub remainder_bound: f64,
    /// `2^(d+ε+1) (truncated_sum + remainder_bound)`.
    pub bound: f64,
}

pub const ZD_REFERENCE_CUTOFF: usize = 10_000;

pub fn zd_convolution_reference(dimension: usize, epsilon: f64) -> Result<ZdReference> {
    if dimension == 0 {
        return Err(Error::InvalidShape("dimension must be positive".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidProfile(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = dimension as f64;
    let cutoff = ZD_REFERENCE_CUTOFF;
    let truncated_sum: f64 = (0..=cutoff).map(|k| shell_size(dimension, k) * (1.0 + k as f64).powf(-d - epsilon)).sum();
    // shell_size(d, k) ≤ 2^d (k + 1)^(d - 1), so the tail is at most
    // 2^d ∫_N^∞ (1 + x)^(-1-ε) dx = 2^d (1 + N)^(-ε) / ε.
    let remainder_bound = 2f64.powi(dimension as i32) * (1.0 + cutoff as f64).powf(-epsilon) / epsilon;
    let bound = 2f64.powf(d + epsilon + 1.0) * (truncated_sum + remainder_bound);
    Ok(ZdReference { dimension, epsilon, cutoff, truncated_sum, remainder_bound, bound })
}

/// Number of points of `Z^d` with ℓ¹ norm exactly `k`.
fn shell_size(d: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (1..=d.min(k)).map(|i| 2f64.powi(i as i32) * binomial(d, i) * binomial(k - 1, i - 1)).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}
