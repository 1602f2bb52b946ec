//! Norm-preserving linear flows and the inhomogeneous perturbation bound.
//!
//! For a family of norm-preserving generators `A(t)` with propagator `γ_t`,
//! the solution of `Y' = A(t) Y + B(t)`, `Y(0) = y₀` satisfies
//!
//! ```text
//! Y(t) = γ_t(y₀ + ∫_0^t γ_s^{-1}(B(s)) ds),      ‖Y(t) - γ_t(y₀)‖ ≤ ∫_0^t ‖B(s)‖ ds.
//! ```
//!
//! Two matrix instances are supported: left multiplication by an
//! anti-Hermitian `A(t)` (states are vectors or matrices), and the derivation
//! `X ↦ i[H(t), X]` with `H(t)` Hermitian. Norms are operator norms, which
//! reduce to the Euclidean norm on column vectors.
//!
//! Both routes to `Y(t)` are integrated with the same embedded
//! Dormand-Prince 5(4) pair: directly, and through the unitary `U' = G U`,
//! its inverse `V' = -V G` and the accumulated forcing `W' = γ_s^{-1}(B(s))`.

use std::fmt;
use std::sync::Arc;

use faer::{Mat, Scale};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{anti_hermitian_deviation, c64, identity, kron, operator_norm, CMatrix, Pauli};

pub const DEFAULT_RTOL: f64 = 1e-9;
pub const DEFAULT_ATOL: f64 = 1e-13;
pub const QUADRATURE_TOL: f64 = 1e-10;
pub const GENERATOR_TOL: f64 = 1e-12;
/// Slack on the perturbation bound, covering integration error.
pub const BOUND_SLACK: f64 = 1e-7;
const GENERATOR_SAMPLES: usize = 65;
const MAX_STEPS: usize = 1_000_000;

pub type MatrixFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

#[derive(Clone)]
pub enum Generator {
    /// `x ↦ A(t) x`, with `A(t)` anti-Hermitian.
    Multiply(MatrixFn),
    /// `X ↦ i[H(t), X]`, with `H(t)` Hermitian.
    Derivation(MatrixFn),
}

impl Generator {
    /// The anti-Hermitian matrix whose left action generates the propagator.
    fn unitary_generator(&self, t: f64) -> CMatrix {
        match self {
            Generator::Multiply(a) => a(t),
            Generator::Derivation(h) => h(t) * Scale(c64::new(0.0, 1.0)),
        }
    }

    fn apply(&self, t: f64, x: &CMatrix) -> CMatrix {
        match self {
            Generator::Multiply(a) => a(t) * x,
            Generator::Derivation(h) => {
                let h = h(t);
                (&h * x - x * &h) * Scale(c64::new(0.0, 1.0))
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.unitary_generator(0.0).nrows()
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Multiply(_) => f.write_str("Multiply(..)"),
            Generator::Derivation(_) => f.write_str("Derivation(..)"),
        }
    }
}

#[derive(Clone)]
pub struct OdeProblem {
    pub name: String,
    generator: Generator,
    forcing: MatrixFn,
    x0: CMatrix,
    y0: CMatrix,
    horizon: f64,
    rtol: f64,
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("generator", &self.generator)
            .field("dim", &self.generator.dim())
            .field("horizon", &self.horizon)
            .field("rtol", &self.rtol)
            .finish_non_exhaustive()
    }
}

impl OdeProblem {
    /// Validates shapes and, on a uniform grid of `[0, horizon]`, that the
    /// generator is anti-Hermitian within `1e-12`.
    pub fn new(
        name: impl Into<String>,
        generator: Generator,
        forcing: MatrixFn,
        x0: CMatrix,
        y0: CMatrix,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidShape(format!("horizon must be positive and finite, got {horizon}")));
        }
        let n = generator.dim();
        let b0 = forcing(0.0);
        for (what, m) in [("x0", &x0), ("y0", &y0), ("forcing", &b0)] {
            if m.nrows() != n {
                return Err(Error::InvalidShape(format!(
                    "{what} has {} rows, generator acts on dimension {n}",
                    m.nrows()
                )));
            }
        }
        if matches!(generator, Generator::Derivation(_)) && (y0.ncols() != n || x0.ncols() != n) {
            return Err(Error::InvalidShape("derivation states must be square".into()));
        }
        if b0.ncols() != y0.ncols() {
            return Err(Error::ShapeMismatch { rows: b0.nrows(), cols: b0.ncols(), expected: y0.ncols() });
        }
        for k in 0..GENERATOR_SAMPLES {
            let t = horizon * k as f64 / (GENERATOR_SAMPLES - 1) as f64;
            let g = generator.unitary_generator(t);
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::ShapeMismatch { rows: g.nrows(), cols: g.ncols(), expected: n });
            }
            let deviation = anti_hermitian_deviation(g.as_ref());
            if deviation > GENERATOR_TOL {
                return Err(Error::NotAntiHermitian { t, deviation });
            }
        }
        Ok(OdeProblem { name: name.into(), generator, forcing, x0, y0, horizon, rtol: DEFAULT_RTOL })
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn forcing(&self, t: f64) -> CMatrix {
        (self.forcing)(t)
    }

    pub fn x0(&self) -> &CMatrix {
        &self.x0
    }

    pub fn y0(&self) -> &CMatrix {
        &self.y0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rtol(&self) -> f64 {
        self.rtol
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(Error::OutsideHorizon { t, horizon: self.horizon })
        }
    }

    fn check_grid(&self, grid: &[f64]) -> Result<()> {
        for w in grid.windows(2) {
            if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::InvalidShape(format!(
                    "time grid must be strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        grid.iter().try_for_each(|&t| self.check_time(t))
    }

    fn integrator(&self, y0: Vec<c64>) -> Dopri5 {
        Dopri5::new(0.0, y0, self.rtol, DEFAULT_ATOL, self.horizon)
    }
}

/// `γ_t(x₀)`.
pub fn propagate_homogeneous(problem: &OdeProblem, t: f64) -> Result<CMatrix> {
    Ok(homogeneous_path(problem, &problem.x0, &[t])?.remove(0))
}

fn homogeneous_path(problem: &OdeProblem, x0: &CMatrix, grid: &[f64]) -> Result<Vec<CMatrix>> {
    problem.check_grid(grid)?;
    let shape = (x0.nrows(), x0.ncols());
    let gen = &problem.generator;
    let rhs = |t: f64, y: &[c64]| flatten(&[gen.apply(t, &unflatten(y, shape, 0))]);
    let mut ode = problem.integrator(flatten(std::slice::from_ref(x0)));
    grid.iter()
        .map(|&t| {
            ode.advance(&rhs, t)?;
            Ok(unflatten(ode.state(), shape, 0))
        })
        .collect()
}

/// `Y(t)` by the direct route and by variation of constants.
#[derive(Debug, Clone)]
pub struct Inhomogeneous {
    pub t: f64,
    pub direct: CMatrix,
    pub variation_of_constants: CMatrix,
    /// `γ_t(y₀)`, from the propagator of the variation-of-constants route.
    pub homogeneous: CMatrix,
}

impl Inhomogeneous {
    pub fn cross_check(&self) -> f64 {
        operator_norm((&self.direct - &self.variation_of_constants).as_ref())
    }
}

pub fn solve_inhomogeneous(problem: &OdeProblem, t: f64) -> Result<Inhomogeneous> {
    Ok(inhomogeneous_path(problem, &[t])?.remove(0))
}

fn inhomogeneous_path(problem: &OdeProblem, grid: &[f64]) -> Result<Vec<Inhomogeneous>> {
    problem.check_grid(grid)?;
    let gen = &problem.generator;
    let y0 = &problem.y0;
    let shape = (y0.nrows(), y0.ncols());
    let n = gen.dim();
    let sq = (n, n);

    let direct_rhs = |t: f64, y: &[c64]| {
        let y = unflatten(y, shape, 0);
        flatten(&[gen.apply(t, &y) + problem.forcing(t)])
    };

    // blocks U, V, W
    let w_offset = 2 * n * n;
    let aug_rhs = |t: f64, y: &[c64]| {
        let u = unflatten(y, sq, 0);
        let v = unflatten(y, sq, n * n);
        let g = gen.unitary_generator(t);
        let b = problem.forcing(t);
        let w = match gen {
            Generator::Multiply(_) => &v * &b,
            Generator::Derivation(_) => &v * &b * &u,
        };
        flatten(&[&g * &u, -(&v * &g), w])
    };

    let mut direct = problem.integrator(flatten(std::slice::from_ref(y0)));
    let zero_w = CMatrix::zeros(shape.0, shape.1);
    let mut aug = problem.integrator(flatten(&[identity(n), identity(n), zero_w]));

    grid.iter()
        .map(|&t| {
            direct.advance(&direct_rhs, t)?;
            aug.advance(&aug_rhs, t)?;
            let u = unflatten(aug.state(), sq, 0);
            let v = unflatten(aug.state(), sq, n * n);
            let w = unflatten(aug.state(), shape, w_offset);
            let inner = y0 + &w;
            let (voc, hom) = match gen {
                Generator::Multiply(_) => (&u * &inner, &u * y0),
                Generator::Derivation(_) => (&u * &inner * &v, &u * y0 * &v),
            };
            Ok(Inhomogeneous {
                t,
                direct: unflatten(direct.state(), shape, 0),
                variation_of_constants: voc,
                homogeneous: hom,
            })
        })
        .collect()
}

/// `∫_0^t ‖B(s)‖ ds` by adaptive Simpson quadrature.
pub fn forcing_integral(problem: &OdeProblem, t: f64) -> Result<f64> {
    problem.check_time(t)?;
    Ok(adaptive_simpson(&|s| operator_norm(problem.forcing(s).as_ref()), 0.0, t, QUADRATURE_TOL))
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub t: f64,
    /// `‖Y(t) - γ_t(y₀)‖`.
    pub deviation: f64,
    /// `∫_0^t ‖B(s)‖ ds`.
    pub integral: f64,
    /// `integral - deviation`; nonnegative up to slack.
    pub margin: f64,
    /// `|‖γ_t(x₀)‖ - ‖x₀‖|`.
    pub norm_drift: f64,
    /// Distance between the direct and variation-of-constants solutions.
    pub cross_check: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub problem: String,
    pub slack: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.margin >= -self.slack)
    }

    pub fn worst_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.norm_drift).fold(0.0, f64::max)
    }

    pub fn max_cross_check(&self) -> f64 {
        self.rows.iter().map(|r| r.cross_check).fold(0.0, f64::max)
    }
}

/// Evaluates both sides of the perturbation bound on `grid`.
pub fn verify_bound(problem: &OdeProblem, grid: &[f64]) -> Result<BoundReport> {
    let solutions = inhomogeneous_path(problem, grid)?;
    let homogeneous = homogeneous_path(problem, &problem.x0, grid)?;
    let x0_norm = operator_norm(problem.x0.as_ref());
    let mut rows = Vec::with_capacity(grid.len());
    let mut integral = 0.0;
    let mut last = 0.0;
    for ((&t, sol), hom) in grid.iter().zip(&solutions).zip(&homogeneous) {
        integral += forcing_integral_between(problem, last, t);
        last = t;
        let deviation = operator_norm((&sol.direct - &sol.homogeneous).as_ref());
        rows.push(BoundRow {
            t,
            deviation,
            integral,
            margin: integral - deviation,
            norm_drift: (operator_norm(hom.as_ref()) - x0_norm).abs(),
            cross_check: sol.cross_check(),
        });
    }
    Ok(BoundReport { problem: problem.name.clone(), slack: BOUND_SLACK, rows })
}

fn forcing_integral_between(problem: &OdeProblem, a: f64, b: f64) -> f64 {
    adaptive_simpson(&|s| operator_norm(problem.forcing(s).as_ref()), a, b, QUADRATURE_TOL)
}

/// Uniform grid of `n` points on `[0, horizon]`.
pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| horizon * k as f64 / (n - 1).max(1) as f64).collect()
}

fn flatten(blocks: &[CMatrix]) -> Vec<c64> {
    let mut out = Vec::with_capacity(blocks.iter().map(|b| b.nrows() * b.ncols()).sum());
    for b in blocks {
        for j in 0..b.ncols() {
            out.extend((0..b.nrows()).map(|i| b[(i, j)]));
        }
    }
    out
}

fn unflatten(y: &[c64], (rows, cols): (usize, usize), offset: usize) -> CMatrix {
    Mat::from_fn(rows, cols, |i, j| y[offset + j * rows + i])
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Adaptive Dormand-Prince 5(4) on a flat complex state, first-same-as-last.
struct Dopri5 {
    t: f64,
    y: Vec<c64>,
    h: f64,
    rtol: f64,
    atol: f64,
    k1: Option<Vec<c64>>,
}

impl Dopri5 {
    fn new(t: f64, y: Vec<c64>, rtol: f64, atol: f64, span: f64) -> Self {
        Dopri5 { t, y, h: 1e-3 * span, rtol, atol, k1: None }
    }

    fn state(&self) -> &[c64] {
        &self.y
    }

    fn advance(&mut self, f: &dyn Fn(f64, &[c64]) -> Vec<c64>, target: f64) -> Result<()> {
        let mut steps = 0;
        while self.t < target {
            steps += 1;
            let h = self.h.min(target - self.t);
            let (t0, t1) = (self.t, self.t + h);
            if steps > MAX_STEPS || h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepControl { t0, t1 });
            }
            let k1 = self.k1.take().unwrap_or_else(|| f(self.t, &self.y));
            let mut k: Vec<Vec<c64>> = vec![k1];
            let mut stage = vec![c64::new(0.0, 0.0); self.y.len()];
            for s in 1..7 {
                for (i, slot) in stage.iter_mut().enumerate() {
                    let mut acc = self.y[i];
                    for (j, kj) in k.iter().enumerate() {
                        acc += kj[i] * (h * A[s][j]);
                    }
                    *slot = acc;
                }
                k.push(f(self.t + C[s] * h, &stage));
            }
            // stage holds the fifth-order solution; k[6] is f at it
            let mut err = 0.0;
            for i in 0..self.y.len() {
                let e: c64 = (0..7).map(|j| k[j][i] * E[j]).sum::<c64>() * h;
                let sc = self.atol + self.rtol * self.y[i].norm().max(stage[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = (err / self.y.len().max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::StepControl { t0, t1 });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.t = if h == target - self.t { target } else { t1 };
                self.y = stage;
                self.k1 = k.pop();
                // a step clipped to hit the target says nothing about the natural size
                if h == self.h || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.k1 = Some(k.swap_remove(0));
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }
}

/// The built-in problem suite, all of dimension at most 8 on `[0, 2]`.
pub fn builtin_suite() -> Vec<OdeProblem> {
    let i = c64::new(0.0, 1.0);
    let p = |q: Pauli| q.matrix();
    let k2 = |a: CMatrix, b: CMatrix| kron(a.as_ref(), b.as_ref());
    let horizon = 2.0;
    let mut suite = Vec::new();

    let sz = p(Pauli::Z);
    suite.push(
        OdeProblem::new(
            "unforced",
            Generator::Multiply(Arc::new(move |_| &sz * Scale(i))),
            Arc::new(|_| CMatrix::zeros(2, 2)),
            p(Pauli::X),
            p(Pauli::X),
            horizon,
        )
        .expect("valid problem"),
    );

    suite.push(
        OdeProblem::new(
            "saturation",
            Generator::Multiply(Arc::new(|_| CMatrix::zeros(2, 2))),
            Arc::new(move |_| Pauli::X.matrix()),
            identity(2),
            identity(2),
            horizon,
        )
        .expect("valid problem"),
    );

    let sz = p(Pauli::Z);
    suite.push(
        OdeProblem::new(
            "precession",
            Generator::Multiply(Arc::new(move |_| &sz * Scale(i))),
            Arc::new(|_| Pauli::X.matrix()),
            identity(2),
            identity(2),
            horizon,
        )
        .expect("valid problem"),
    );

    let h0 = k2(p(Pauli::Z), identity(2)) + k2(p(Pauli::X), p(Pauli::X)) * Scale(c64::new(0.5, 0.0));
    let h1 = k2(p(Pauli::Y), p(Pauli::Z));
    let drive = k2(p(Pauli::X), p(Pauli::Y));
    let offset = identity(4) * Scale(c64::new(0.3, 0.0));
    suite.push(
        OdeProblem::new(
            "driven_pair",
            Generator::Multiply(Arc::new(move |t: f64| (&h0 + &h1 * Scale(c64::new(t.cos(), 0.0))) * Scale(i))),
            Arc::new(move |t: f64| &drive * Scale(c64::new((2.0 * t).sin(), 0.0)) + &offset),
            k2(p(Pauli::X), p(Pauli::Z)),
            k2(identity(2), p(Pauli::X)),
            horizon,
        )
        .expect("valid problem"),
    );

    let tfim = k2(p(Pauli::Z), p(Pauli::Z)) + k2(p(Pauli::X), identity(2)) + k2(identity(2), p(Pauli::X));
    let zz = k2(p(Pauli::Z), p(Pauli::Z));
    suite.push(
        OdeProblem::new(
            "heisenberg_derivation",
            Generator::Derivation(Arc::new(move |_| tfim.clone())),
            Arc::new(move |t| &zz * Scale(c64::new(t.cos(), 0.0))),
            k2(p(Pauli::Z), identity(2)),
            k2(p(Pauli::X), identity(2)),
            horizon,
        )
        .expect("valid problem"),
    );

    let mut heis = CMatrix::zeros(8, 8);
    for (l, r) in [(0usize, 1usize), (1, 2)] {
        for q in [Pauli::X, Pauli::Y, Pauli::Z] {
            let ops: Vec<CMatrix> = (0..3).map(|s| if s == l || s == r { p(q) } else { identity(2) }).collect();
            heis += k2(k2(ops[0].clone(), ops[1].clone()), ops[2].clone());
        }
    }
    let v = Mat::from_fn(8, 1, |r, _| c64::new(1.0 / (1.0 + r as f64), 0.1 * r as f64));
    let v_norm = operator_norm(v.as_ref());
    let x0 = &v * Scale(c64::new(1.0 / v_norm, 0.0));
    let b_dir = Mat::from_fn(8, 1, |r, _| c64::new(if r % 2 == 0 { 1.0 } else { -0.5 }, 0.0));
    suite.push(
        OdeProblem::new(
            "chain_vector",
            Generator::Multiply(Arc::new(move |_| &heis * Scale(i))),
            Arc::new(move |t| &b_dir * Scale(c64::new((-t).exp(), 0.0))),
            x0.clone(),
            x0,
            horizon,
        )
        .expect("valid problem"),
    );

    suite
}
