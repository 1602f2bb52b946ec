//! Analytic right-hand sides of the Lieb-Robinson family of inequalities.
//!
//! Every evaluation returns a [`BoundCertificate`] carrying the value and all
//! the inputs it was computed from. With `κ = ‖Φ‖_a C_a`:
//!
//! | kind | value |
//! |------|-------|
//! | `lr` | `(2‖A‖‖B‖/C_a) g_a(t) Σ_{x∈X} Σ_{y∈Y} F_a(d(x,y))` |
//! | `lr_exp` | `(2‖A‖‖B‖/C_a) ‖F‖ min(|X|,|Y|) exp(-a d(X,Y) + 2κ|t|)` |
//! | `localization` | `(2‖A‖|X|/C_a) ‖F‖ exp(-aε)` on the ball of radius `(2κ/a)|t| + ε` |
//! | `convergence` | `2‖A‖ κ ∫g_a |Y| sup_{z∈Y} Σ_{x∈Λ_n∖Λ_m} F_a(d(x,z))` |
//! | `correlation_simple` | `4‖A‖‖B‖ ‖F‖ (|X|+|Y|) G_a(t) exp(-a d(X,Y))` |
//! | `correlation_tail` | `4‖A‖‖B‖ G_a(t) [Σ_{x∈X} Σ_{2d(x,y)≥d(X,Y)} F_a + (X↔Y)]` |
//!
//! where `g_a(t) = exp(2κ|t|) - 1` for separated supports (`exp(2κ|t|)`
//! otherwise) and `G_a(t) = ((C_a + ‖F_a‖)/C_a) ‖Φ‖_a ∫_0^{|t|} g_a(s) ds`.
//!
//! Integrals of `g_a` always use the separated branch, in closed form
//! `∫_0^{|t|} (e^{2κs} - 1) ds = (e^{2κ|t|} - 1)/(2κ) - |t|`.
//!
//! The `correlation_simple` bound is reported but not used as a gate: the
//! tail estimate behind it only yields a decay of `exp(-a d(X,Y)/2)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{phi_a_norm, Interaction};
use crate::lattice::{convolution_constant, f_norm, FFunction, MetricLattice};
use crate::space::Support;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Lr,
    LrExp,
    Localization,
    Convergence,
    CorrelationSimple,
    CorrelationTail,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertificateKind::Lr => "lr",
            CertificateKind::LrExp => "lr_exp",
            CertificateKind::Localization => "localization",
            CertificateKind::Convergence => "convergence",
            CertificateKind::CorrelationSimple => "correlation_simple",
            CertificateKind::CorrelationTail => "correlation_tail",
        }
    }
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lattice and interaction constants at one tilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Tilted profile `F_a`.
    pub f: FFunction,
    /// `‖F‖` of the untilted profile.
    pub f_norm: f64,
    pub f_a_norm: f64,
    pub c_a: f64,
    pub phi_a_norm: f64,
}

impl Constants {
    /// Evaluates the constants of `phi` on `lattice` for `profile` tilted by `a`.
    pub fn compute(phi: &Interaction, lattice: &MetricLattice, profile: &FFunction, a: f64) -> Result<Self> {
        let f = profile.with_tilt(a)?;
        Ok(Constants {
            f,
            f_norm: f_norm(lattice, &profile.untilted()),
            f_a_norm: f_norm(lattice, &f),
            c_a: convolution_constant(lattice, &f)?,
            phi_a_norm: phi_a_norm(phi, lattice, &f)?,
        })
    }

    pub fn a(&self) -> f64 {
        self.f.tilt
    }

    /// `κ = ‖Φ‖_a C_a`.
    pub fn kappa(&self) -> f64 {
        self.phi_a_norm * self.c_a
    }

    fn checked_c_a(&self) -> Result<f64> {
        if self.c_a > 0.0 && self.c_a.is_finite() {
            Ok(self.c_a)
        } else {
            Err(Error::InvalidProfile(format!("convolution constant must be positive, got {}", self.c_a)))
        }
    }
}

/// Operator norms of the two observables entering a bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub a: f64,
    pub b: f64,
}

/// Everything a certificate value was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub a: f64,
    pub t: f64,
    pub x_set: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub y_set: Vec<usize>,
    pub norm_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_b: Option<f64>,
    pub phi_a_norm: f64,
    pub c_a: f64,
    pub f_norm: f64,
    pub f_a_norm: f64,
    pub lattice: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_volume: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_volume: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub kind: CertificateKind,
    pub inputs: CertificateInputs,
    pub value: f64,
    /// The localization ball `B_t(ε)`, for `localization` certificates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<Vec<usize>>,
}

fn inputs(
    lattice: &MetricLattice,
    c: &Constants,
    t: f64,
    x_set: &Support,
    y_set: &Support,
    norm_a: f64,
    norm_b: Option<f64>,
) -> CertificateInputs {
    CertificateInputs {
        a: c.a(),
        t,
        x_set: x_set.to_vec(),
        y_set: y_set.to_vec(),
        norm_a,
        norm_b,
        phi_a_norm: c.phi_a_norm,
        c_a: c.c_a,
        f_norm: c.f_norm,
        f_a_norm: c.f_a_norm,
        lattice: lattice.name().to_string(),
        epsilon: None,
        inner_volume: None,
        outer_volume: None,
    }
}

fn check_sets(lattice: &MetricLattice, sets: &[&Support]) -> Result<()> {
    for s in sets {
        if s.is_empty() {
            return Err(Error::EmptySupport);
        }
        lattice.check_vertices(s)?;
    }
    Ok(())
}

/// `g_a(t)`: `e^{2‖Φ‖_a C_a |t|} - 1` for separated supports, the bare
/// exponential otherwise.
pub fn g_factor(phi_a_norm: f64, c_a: f64, t: f64, separated: bool) -> f64 {
    let x = 2.0 * phi_a_norm * c_a * t.abs();
    if separated {
        x.exp_m1()
    } else {
        x.exp()
    }
}

/// `∫_0^{|t|} (e^{2κs} - 1) ds`.
pub fn integrated_g(kappa: f64, t: f64) -> f64 {
    let t = t.abs();
    let x = 2.0 * kappa * t;
    if x < 1e-3 {
        // t (e^x - 1 - x)/x, by its Taylor series
        t * x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)))
    } else {
        x.exp_m1() / (2.0 * kappa) - t
    }
}

/// `G_a(t) = ((C_a + ‖F_a‖)/C_a) ‖Φ‖_a ∫_0^{|t|} g_a(s) ds`.
pub fn correlation_growth(c: &Constants, t: f64) -> Result<f64> {
    let c_a = c.checked_c_a()?;
    Ok((c_a + c.f_a_norm) / c_a * c.phi_a_norm * integrated_g(c.kappa(), t))
}

fn pair_sum(lattice: &MetricLattice, f: &FFunction, x_set: &Support, y_set: &Support) -> f64 {
    x_set.iter().flat_map(|&x| y_set.iter().map(move |&y| f.eval(lattice.distance(x, y)))).sum()
}

/// `‖[τ_t(A), B]‖ ≤ (2‖A‖‖B‖/C_a) g_a(t) Σ_{x∈X} Σ_{y∈Y} F_a(d(x,y))`.
pub fn lr_certificate(
    t: f64,
    x_set: &Support,
    y_set: &Support,
    norms: Norms,
    lattice: &MetricLattice,
    constants: &Constants,
) -> Result<BoundCertificate> {
    check_sets(lattice, &[x_set, y_set])?;
    let c_a = constants.checked_c_a()?;
    let separated = lattice.set_distance(x_set, y_set) > 0.0;
    let g = g_factor(constants.phi_a_norm, c_a, t, separated);
    let value = 2.0 * norms.a * norms.b / c_a * g * pair_sum(lattice, &constants.f, x_set, y_set);
    Ok(BoundCertificate {
        kind: CertificateKind::Lr,
        inputs: inputs(lattice, constants, t, x_set, y_set, norms.a, Some(norms.b)),
        value,
        ball: None,
    })
}

/// `(2‖A‖‖B‖/C_a) ‖F‖ min(|X|,|Y|) exp(-a [d(X,Y) - (2κ/a)|t|])`; needs `a > 0`.
pub fn lr_certificate_exponential(
    t: f64,
    x_set: &Support,
    y_set: &Support,
    norms: Norms,
    lattice: &MetricLattice,
    constants: &Constants,
) -> Result<BoundCertificate> {
    check_sets(lattice, &[x_set, y_set])?;
    let a = positive_tilt(constants)?;
    let c_a = constants.checked_c_a()?;
    let d = lattice.set_distance(x_set, y_set);
    let speed = 2.0 * constants.kappa() / a;
    let value = 2.0 * norms.a * norms.b / c_a
        * constants.f_norm
        * x_set.len().min(y_set.len()) as f64
        * (-a * (d - speed * t.abs())).exp();
    Ok(BoundCertificate {
        kind: CertificateKind::LrExp,
        inputs: inputs(lattice, constants, t, x_set, y_set, norms.a, Some(norms.b)),
        value,
        ball: None,
    })
}

fn positive_tilt(c: &Constants) -> Result<f64> {
    let a = c.a();
    if a > 0.0 {
        Ok(a)
    } else {
        Err(Error::NonPositiveTilt(a))
    }
}

/// `‖[τ_t(A), B]‖ ≤ ... e^{-a [d - v_a |t|]}` corresponds to the speed
/// `v_a = 2‖Φ‖_a C_a / a`.
pub fn velocity_objective(phi: &Interaction, lattice: &MetricLattice, profile: &FFunction, a: f64) -> Result<f64> {
    let c = Constants::compute(phi, lattice, profile, a)?;
    Ok(2.0 * c.kappa() / a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    /// `V_Φ = inf_{a>0} 2‖Φ‖_a C_a / a`.
    pub v: f64,
    pub a_star: f64,
}

pub const VELOCITY_A_MIN: f64 = 1e-3;
pub const VELOCITY_A_MAX: f64 = 10.0;
pub const VELOCITY_GRID: usize = 64;
pub const VELOCITY_REL_TOL: f64 = 1e-6;

/// Logarithmically spaced points over `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    (0..n).map(|k| (l + (h - l) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Minimizes `2‖Φ‖_a C_a / a` over `a ∈ [1e-3, 10]`: a 64-point log scan,
/// then golden-section search between the neighbours of the best sample.
pub fn velocity(phi: &Interaction, lattice: &MetricLattice, profile: &FFunction) -> Result<Velocity> {
    let objective = |a: f64| velocity_objective(phi, lattice, profile, a);
    let grid = log_grid(VELOCITY_A_MIN, VELOCITY_A_MAX, VELOCITY_GRID);
    let values = grid.iter().map(|&a| objective(a)).collect::<Result<Vec<_>>>()?;

    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .ok_or(Error::NonFiniteObjective)?;

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (a_ref, v_ref) = golden_section(|a| objective(a).unwrap_or(f64::INFINITY), lo, hi, VELOCITY_REL_TOL);

    if v_ref <= values[best] {
        Ok(Velocity { v: v_ref, a_star: a_ref })
    } else {
        Ok(Velocity { v: values[best], a_star: grid[best] })
    }
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`, stopping once
/// the bracket is narrower than `rel_tol` times its midpoint.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while (hi - lo) > rel_tol * 0.5 * (hi + lo).abs().max(f64::MIN_POSITIVE) {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `‖τ_t(A) - ⟨τ_t(A)⟩_{B_t(ε)^c}‖ ≤ (2‖A‖|X|/C_a) ‖F‖ e^{-aε}`.
pub fn localization_certificate(
    t: f64,
    epsilon: f64,
    x_set: &Support,
    norm_a: f64,
    lattice: &MetricLattice,
    constants: &Constants,
) -> Result<BoundCertificate> {
    check_sets(lattice, &[x_set])?;
    let a = positive_tilt(constants)?;
    let c_a = constants.checked_c_a()?;
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidProfile(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let radius = 2.0 * constants.kappa() / a * t.abs() + epsilon;
    let ball = lattice.ball(x_set, radius);
    let value = 2.0 * norm_a * x_set.len() as f64 / c_a * constants.f_norm * (-a * epsilon).exp();
    let mut inp = inputs(lattice, constants, t, x_set, &Support::default(), norm_a, None);
    inp.epsilon = Some(epsilon);
    Ok(BoundCertificate { kind: CertificateKind::Localization, inputs: inp, value, ball: Some(ball) })
}

/// `‖τ_t^{Λ_n}(A) - τ_t^{Λ_m}(A)‖ ≤ 2‖A‖ ‖Φ‖_a C_a ∫g_a |Y| sup_{z∈Y} Σ_{x∈Λ_n∖Λ_m} F_a(d(x,z))`.
pub fn convergence_certificate(
    t: f64,
    y_set: &Support,
    inner: &Support,
    outer: &Support,
    norm_a: f64,
    lattice: &MetricLattice,
    constants: &Constants,
) -> Result<BoundCertificate> {
    check_sets(lattice, &[y_set, inner, outer])?;
    if !y_set.is_subset(inner) {
        return Err(Error::NotNested { inner: y_set.to_vec(), outer: inner.to_vec() });
    }
    if !inner.is_subset(outer) {
        return Err(Error::NotNested { inner: inner.to_vec(), outer: outer.to_vec() });
    }
    let shell = outer.difference(inner);
    let f = &constants.f;
    let tail =
        y_set.iter().map(|&z| shell.iter().map(|&x| f.eval(lattice.distance(x, z))).sum::<f64>()).fold(0.0, f64::max);
    let value = 2.0 * norm_a * constants.kappa() * integrated_g(constants.kappa(), t) * y_set.len() as f64 * tail;
    let mut inp = inputs(lattice, constants, t, y_set, &Support::default(), norm_a, None);
    inp.inner_volume = Some(inner.to_vec());
    inp.outer_volume = Some(outer.to_vec());
    Ok(BoundCertificate { kind: CertificateKind::Convergence, inputs: inp, value, ball: None })
}

fn separated_sets(lattice: &MetricLattice, x_set: &Support, y_set: &Support) -> Result<f64> {
    check_sets(lattice, &[x_set, y_set])?;
    let d = lattice.set_distance(x_set, y_set);
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::NotSeparated { x: x_set.to_vec(), y: y_set.to_vec() })
    }
}

/// `4‖A‖‖B‖ ‖F‖ (|X|+|Y|) G_a(t) e^{-a d(X,Y)}`.
pub fn correlation_certificate_simple(
    t: f64,
    x_set: &Support,
    y_set: &Support,
    norms: Norms,
    lattice: &MetricLattice,
    constants: &Constants,
) -> Result<BoundCertificate> {
    let d = separated_sets(lattice, x_set, y_set)?;
    let value = 4.0
        * norms.a
        * norms.b
        * constants.f_norm
        * (x_set.len() + y_set.len()) as f64
        * correlation_growth(constants, t)?
        * (-constants.a() * d).exp();
    Ok(BoundCertificate {
        kind: CertificateKind::CorrelationSimple,
        inputs: inputs(lattice, constants, t, x_set, y_set, norms.a, Some(norms.b)),
        value,
        ball: None,
    })
}

/// `Σ_{o∈O} Σ_{v : 2d(v,o) ≥ d} F_a(d(v,o))`.
pub fn tail_sum(lattice: &MetricLattice, f: &FFunction, set: &Support, separation: f64) -> f64 {
    set.iter()
        .flat_map(|&o| lattice.vertices().map(move |v| lattice.distance(v, o)))
        .filter(|&r| 2.0 * r >= separation)
        .map(|r| f.eval(r))
        .sum()
}

/// `4‖A‖‖B‖ G_a(t) [Σ_{x∈X} Σ_{y : 2d(x,y) ≥ d(X,Y)} F_a(d(x,y)) + (X ↔ Y)]`.
pub fn correlation_certificate_tail(
    t: f64,
    x_set: &Support,
    y_set: &Support,
    norms: Norms,
    lattice: &MetricLattice,
    constants: &Constants,
) -> Result<BoundCertificate> {
    let d = separated_sets(lattice, x_set, y_set)?;
    let f = &constants.f;
    let tails = tail_sum(lattice, f, x_set, d) + tail_sum(lattice, f, y_set, d);
    let value = 4.0 * norms.a * norms.b * correlation_growth(constants, t)? * tails;
    Ok(BoundCertificate {
        kind: CertificateKind::CorrelationTail,
        inputs: inputs(lattice, constants, t, x_set, y_set, norms.a, Some(norms.b)),
        value,
        ball: None,
    })
}
