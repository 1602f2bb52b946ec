//! Runs one subcommand of a scenario and collects report rows.

use std::collections::BTreeMap;
use std::fmt;

use lightcone::bounds::{
    convergence_certificate, correlation_certificate_simple, correlation_certificate_tail, localization_certificate,
    lr_certificate, lr_certificate_exponential, velocity, Constants, Norms,
};
use lightcone::dynamics::{embed, haar_conditional_expectation, operator_norm, Evolution, LocalObservable};
use lightcone::interaction::{build_hamiltonian, phi_a_norm_off_diagonal, Interaction};
use lightcone::lattice::{convolution_constant, convolution_constant_off_diagonal, MetricLattice};
use lightcone::linalg;
use lightcone::ode::{builtin_suite, uniform_grid, verify_bound, BOUND_SLACK};
use lightcone::space::Support;

use crate::config::{ConfigError, ScenarioConfig};
use crate::report::Row;

/// Numerical slack on every dynamics-versus-certificate comparison.
pub const SLACK: f64 = 1e-10;
/// Allowed drift of `‖γ_t(x₀)‖` in the ODE suite.
pub const NORM_DRIFT_TOL: f64 = 1e-8;
/// Allowed disagreement between the two inhomogeneous solutions.
pub const CROSS_CHECK_TOL: f64 = 1e-7;
const ODE_GRID_POINTS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subcommand {
    Constants,
    LrCheck,
    Correlations,
    Converge,
    Velocity,
    Localize,
    OdeCheck,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Constants,
        Subcommand::LrCheck,
        Subcommand::Correlations,
        Subcommand::Converge,
        Subcommand::Velocity,
        Subcommand::Localize,
        Subcommand::OdeCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Constants => "constants",
            Subcommand::LrCheck => "lr-check",
            Subcommand::Correlations => "correlations",
            Subcommand::Converge => "converge",
            Subcommand::Velocity => "velocity",
            Subcommand::Localize => "localize",
            Subcommand::OdeCheck => "ode-check",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] lightcone::Error),
}

type Result<T> = std::result::Result<T, ScenarioError>;

pub fn run_scenario(cfg: &ScenarioConfig, cmd: Subcommand) -> Result<Vec<Row>> {
    let ctx = Context::new(cfg)?;
    match cmd {
        Subcommand::Constants => ctx.constants(),
        Subcommand::LrCheck => ctx.lr_check(),
        Subcommand::Correlations => ctx.correlations(),
        Subcommand::Converge => ctx.converge(),
        Subcommand::Velocity => ctx.velocity(),
        Subcommand::Localize => ctx.localize(),
        Subcommand::OdeCheck => ode_check(),
    }
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    lattice: MetricLattice,
    phi: Interaction,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        Ok(Context { cfg, lattice: cfg.lattice(), phi: cfg.interaction()? })
    }

    fn constants_at(&self, a: f64) -> Result<Constants> {
        Ok(Constants::compute(&self.phi, &self.lattice, &self.cfg.profile(), a)?)
    }

    fn full_evolution(&self) -> Result<Evolution> {
        let h = build_hamiltonian(&self.phi, Support::range(0..self.lattice.len()))?;
        Ok(Evolution::new(&h)?)
    }

    fn constants(&self) -> Result<Vec<Row>> {
        let f = self.cfg.profile();
        let c0 = convolution_constant(&self.lattice, &f)?;
        let mut rows = Vec::new();
        for &a in &self.cfg.a {
            let c = self.constants_at(a)?;
            rows.push(Row::value(0.0, a, "f_norm", c.f_norm));
            rows.push(Row::value(0.0, a, "c", c0));
            rows.push(Row::value(0.0, a, "f_a_norm", c.f_a_norm));
            rows.push(Row::value(0.0, a, "c_a", c.c_a));
            rows.push(Row::value(0.0, a, "phi_a_norm", c.phi_a_norm));
            // the suprema with x = y excluded, to expose sensitivity to that choice
            rows.push(Row::value(0.0, a, "c_a_off_diagonal", convolution_constant_off_diagonal(&self.lattice, &c.f)?));
            rows.push(Row::value(
                0.0,
                a,
                "phi_a_norm_off_diagonal",
                phi_a_norm_off_diagonal(&self.phi, &self.lattice, &c.f)?,
            ));
        }
        Ok(rows)
    }

    fn lr_check(&self) -> Result<Vec<Row>> {
        let (a_obs, b_obs) = (self.cfg.observable_a()?, self.cfg.observable_b()?);
        let times = self.cfg.require_times()?;
        let evo = self.full_evolution()?;
        let prepared = evo.prepare(&a_obs)?;
        let measured =
            times.iter().map(|&t| evo.commutator_norm(&prepared, &b_obs, t)).collect::<lightcone::Result<Vec<_>>>()?;
        let norms = Norms { a: operator_norm(&a_obs), b: operator_norm(&b_obs) };
        let (x, y) = (a_obs.support(), b_obs.support());

        let mut rows = Vec::new();
        for &a in &self.cfg.a {
            let c = self.constants_at(a)?;
            for (&t, &m) in times.iter().zip(&measured) {
                rows.push(Row::certified(m, lr_certificate(t, x, y, norms, &self.lattice, &c)?, SLACK, true));
                if a > 0.0 {
                    rows.push(Row::certified(
                        m,
                        lr_certificate_exponential(t, x, y, norms, &self.lattice, &c)?,
                        SLACK,
                        true,
                    ));
                }
            }
        }
        Ok(rows)
    }

    fn correlations(&self) -> Result<Vec<Row>> {
        let (a_obs, b_obs) = (self.cfg.observable_a()?, self.cfg.observable_b()?);
        let times = self.cfg.require_times()?;
        let omega = self.cfg.state.build(self.lattice.len());
        let evo = self.full_evolution()?;
        let probe = evo.correlation_probe(&a_obs, &b_obs)?;
        let measured =
            times.iter().map(|&t| probe.at(&omega, t).map(|c| c.magnitude)).collect::<lightcone::Result<Vec<_>>>()?;
        let norms = Norms { a: operator_norm(&a_obs), b: operator_norm(&b_obs) };
        let (x, y) = (a_obs.support(), b_obs.support());

        let mut rows = Vec::new();
        for &a in &self.cfg.a {
            let c = self.constants_at(a)?;
            for (&t, &m) in times.iter().zip(&measured) {
                rows.push(Row::certified(
                    m,
                    correlation_certificate_tail(t, x, y, norms, &self.lattice, &c)?,
                    SLACK,
                    true,
                ));
                rows.push(Row::certified(
                    m,
                    correlation_certificate_simple(t, x, y, norms, &self.lattice, &c)?,
                    SLACK,
                    false,
                ));
            }
        }
        Ok(rows)
    }

    fn converge(&self) -> Result<Vec<Row>> {
        let a_obs = self.cfg.observable_a()?;
        let times = self.cfg.require_times()?;
        let volumes: Vec<Support> = self.cfg.volumes.iter().map(|v| Support::new(v.clone())).collect();
        if volumes.len() < 2 {
            return Err(ConfigError::Invalid {
                path: ".volumes".into(),
                message: "at least two nested volumes are required".into(),
            }
            .into());
        }
        if !a_obs.support().is_subset(&volumes[0]) {
            return Err(ConfigError::Invalid {
                path: ".observables.A".into(),
                message: format!("support {} is not inside the innermost volume {}", a_obs.support(), volumes[0]),
            }
            .into());
        }
        let outermost = volumes.last().expect("two or more volumes").clone();
        let outer_volume = self.phi.volume(outermost)?;
        let evolutions = volumes
            .iter()
            .map(|v| Evolution::new(&build_hamiltonian(&self.phi, v.clone())?))
            .collect::<lightcone::Result<Vec<_>>>()?;
        let prepared = evolutions.iter().map(|e| e.prepare(&a_obs)).collect::<lightcone::Result<Vec<_>>>()?;
        let constants = self.cfg.a.iter().map(|&a| self.constants_at(a)).collect::<Result<Vec<_>>>()?;
        let norm_a = operator_norm(&a_obs);

        let mut rows = Vec::new();
        for &t in &times {
            let evolved =
                prepared.iter().map(|p| embed(&p.at(t), &outer_volume)).collect::<lightcone::Result<Vec<_>>>()?;
            for m in 0..volumes.len() {
                for n in m + 1..volumes.len() {
                    let diff = linalg::operator_norm((evolved[n].matrix() - evolved[m].matrix()).as_ref());
                    for c in &constants {
                        let cert = convergence_certificate(
                            t,
                            a_obs.support(),
                            &volumes[m],
                            &volumes[n],
                            norm_a,
                            &self.lattice,
                            c,
                        )?;
                        let label = format!("m={},n={}", volumes[m].len(), volumes[n].len());
                        rows.push(Row::certified(diff, cert, SLACK, true).with_label(label));
                    }
                }
            }
        }
        Ok(rows)
    }

    fn velocity(&self) -> Result<Vec<Row>> {
        let v = velocity(&self.phi, &self.lattice, &self.cfg.profile())?;
        Ok(vec![Row::value(0.0, v.a_star, "velocity", v.v)])
    }

    fn localize(&self) -> Result<Vec<Row>> {
        let a_obs = self.cfg.observable_a()?;
        let times = self.cfg.require_times()?;
        let tilts: Vec<f64> = self.cfg.a.iter().copied().filter(|&a| a > 0.0).collect();
        if tilts.is_empty() {
            return Err(ConfigError::Invalid {
                path: ".a".into(),
                message: "localization needs a positive tilt".into(),
            }
            .into());
        }
        let epsilons = if self.cfg.epsilons.is_empty() { vec![0.0] } else { self.cfg.epsilons.clone() };
        let evo = self.full_evolution()?;
        let volume = evo.volume().clone();
        let prepared = evo.prepare(&a_obs)?;
        let norm_a = operator_norm(&a_obs);
        let x = a_obs.support();

        let mut rows = Vec::new();
        for &t in &times {
            let evolved = prepared.at(t);
            let mut by_ball: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
            for &a in &tilts {
                let c = self.constants_at(a)?;
                for &eps in &epsilons {
                    let cert = localization_certificate(t, eps, x, norm_a, &self.lattice, &c)?;
                    let ball = cert.ball.clone().expect("localization certificates carry the ball");
                    let measured = match by_ball.get(&ball) {
                        Some(&m) => m,
                        None => {
                            let m = local_approximation_error(&evolved, &Support::new(ball.clone()), &volume)?;
                            by_ball.insert(ball, m);
                            m
                        }
                    };
                    rows.push(Row::certified(measured, cert, SLACK, true).with_label(format!("epsilon={eps}")));
                }
            }
        }
        Ok(rows)
    }
}

/// `‖τ_t(A) - ⟨τ_t(A)⟩_{B^c}‖`, the conditional expectation embedded back.
pub fn local_approximation_error(
    evolved: &LocalObservable,
    ball: &Support,
    volume: &lightcone::space::Volume,
) -> lightcone::Result<f64> {
    let local = embed(&haar_conditional_expectation(evolved, ball, volume)?, volume)?;
    let full = embed(evolved, volume)?;
    Ok(linalg::operator_norm((full.matrix() - local.matrix()).as_ref()))
}

fn ode_check() -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for problem in builtin_suite() {
        let report = verify_bound(&problem, &uniform_grid(problem.horizon(), ODE_GRID_POINTS))?;
        for r in &report.rows {
            let label = problem.name.clone();
            rows.push(
                Row::check(r.t, 0.0, "ode_bound", r.deviation, r.integral, BOUND_SLACK, true).with_label(label.clone()),
            );
            rows.push(
                Row::check(r.t, 0.0, "ode_norm_drift", r.norm_drift, NORM_DRIFT_TOL, 0.0, true)
                    .with_label(label.clone()),
            );
            rows.push(
                Row::check(r.t, 0.0, "ode_cross_check", r.cross_check, CROSS_CHECK_TOL, 0.0, true).with_label(label),
            );
        }
    }
    Ok(rows)
}
