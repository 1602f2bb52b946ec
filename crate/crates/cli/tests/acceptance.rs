//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lightcone::bounds::{
    convergence_certificate, correlation_certificate_simple, correlation_certificate_tail, localization_certificate,
    log_grid, lr_certificate, lr_certificate_exponential, velocity, velocity_objective, Constants, Norms,
    VELOCITY_A_MAX, VELOCITY_A_MIN,
};
use lightcone::dynamics::{
    embed, haar_conditional_expectation, monte_carlo_twirl, random_observable, Evolution, LocalObservable,
    ProductState, SiteState,
};
use lightcone::interaction::{build_hamiltonian, decouple, Interaction};
use lightcone::lattice::{convolution_constant, exponential_counterexample_ratio, f_norm, FFunction, MetricLattice};
use lightcone::linalg::{self, commutator, CMatrix, Pauli};
use lightcone::ode::{builtin_suite, uniform_grid, verify_bound, BOUND_SLACK};
use lightcone::space::{Support, Volume};
use lightcone_cli::scenario::local_approximation_error;

const SLACK: f64 = 1e-10;
const N: usize = 8;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn core<T>(r: lightcone::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn op_norm(m: &CMatrix) -> f64 {
    linalg::operator_norm(m.as_ref())
}

fn diff_norm(a: &LocalObservable, b: &LocalObservable) -> f64 {
    op_norm(&(a.matrix() - b.matrix()))
}

struct Chain {
    lattice: MetricLattice,
    phi: Interaction,
    evo: Evolution,
    f: FFunction,
}

fn chain() -> Result<Chain, String> {
    let lattice = core(MetricLattice::path(N))?;
    let phi = Interaction::tfim(&lattice, 1.0, 1.0);
    let evo = core(Evolution::new(&core(build_hamiltonian(&phi, Support::range(0..N)))?))?;
    Ok(Chain { lattice, phi, evo, f: core(FFunction::power(2.0))? })
}

fn times_0_3(n: usize) -> Vec<f64> {
    (0..n).map(|k| 3.0 * k as f64 / (n - 1) as f64).collect()
}

fn within(limit: Duration, start: Instant) -> bool {
    start.elapsed() < limit
}

fn lr_suite() -> Outcome {
    let start = Instant::now();
    let c = chain()?;
    let (a, b) = (LocalObservable::pauli(0, Pauli::Z), LocalObservable::pauli(N - 1, Pauli::Z));
    let (x, y) = (a.support().clone(), b.support().clone());
    let norms = Norms { a: 1.0, b: 1.0 };
    let prepared = core(c.evo.prepare(&a))?;
    let mut checks = 0;
    let mut worst = 0.0f64;
    for tilt in [0.0, 0.5, 1.0] {
        let k = core(Constants::compute(&c.phi, &c.lattice, &c.f, tilt))?;
        for t in times_0_3(50) {
            let m = core(c.evo.commutator_norm(&prepared, &b, t))?;
            let lr = core(lr_certificate(t, &x, &y, norms, &c.lattice, &k))?.value;
            if m > lr + SLACK {
                return Err(format!("a={tilt} t={t}: measured {m:e} > lr {lr:e}"));
            }
            checks += 1;
            if lr > 0.0 {
                worst = worst.max(m / lr);
            }
            if tilt > 0.0 {
                let ex = core(lr_certificate_exponential(t, &x, &y, norms, &c.lattice, &k))?.value;
                if m > ex + SLACK {
                    return Err(format!("a={tilt} t={t}: measured {m:e} > lr_exp {ex:e}"));
                }
                checks += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(
        within(Duration::from_secs(60), start),
        format!("{checks} comparisons hold, max measured/lr {worst:.3e}, {:.2}s (limit 60s)", elapsed.as_secs_f64()),
    )
}

fn light_cone() -> Outcome {
    let c = chain()?;
    let (a, b) = (LocalObservable::pauli(0, Pauli::Z), LocalObservable::pauli(N - 1, Pauli::Z));
    let prepared = core(c.evo.prepare(&a))?;
    let early = core(c.evo.commutator_norm(&prepared, &b, 0.1))?;
    let late = core(c.evo.commutator_norm(&prepared, &b, 3.0))?;
    let k = core(Constants::compute(&c.phi, &c.lattice, &c.f, 0.0))?;
    let norms = Norms { a: 1.0, b: 1.0 };
    let cert_early = core(lr_certificate(0.1, a.support(), b.support(), norms, &c.lattice, &k))?.value;
    let cert_late = core(lr_certificate(3.0, a.support(), b.support(), norms, &c.lattice, &k))?.value;
    ensure(
        early < 1e-3 && late > 1e-2 && early <= cert_early + SLACK && late <= cert_late + SLACK,
        format!("‖[τ_t(A),B]‖ = {early:.3e} at t=0.1 (< 1e-3), {late:.3e} at t=3 (> 1e-2)"),
    )
}

fn correlations() -> Outcome {
    let c = chain()?;
    let (a, b) = (LocalObservable::pauli(0, Pauli::Z), LocalObservable::pauli(N - 1, Pauli::Z));
    let omega = core(ProductState::uniform(N, SiteState::Up))?;
    let probe = core(c.evo.correlation_probe(&a, &b))?;
    let norms = Norms { a: 1.0, b: 1.0 };
    let (mut worst_tail, mut worst_simple, mut simple_exceeded) = (0.0f64, 0.0f64, 0);
    let mut max_measured = 0.0f64;
    for tilt in [0.5, 1.0] {
        let k = core(Constants::compute(&c.phi, &c.lattice, &c.f, tilt))?;
        for t in times_0_3(50) {
            let m = core(probe.at(&omega, t))?.magnitude;
            max_measured = max_measured.max(m);
            let tail = core(correlation_certificate_tail(t, a.support(), b.support(), norms, &c.lattice, &k))?.value;
            let simple =
                core(correlation_certificate_simple(t, a.support(), b.support(), norms, &c.lattice, &k))?.value;
            if m > tail + SLACK {
                return Err(format!("a={tilt} t={t}: measured {m:e} > tail certificate {tail:e}"));
            }
            if tail > 0.0 {
                worst_tail = worst_tail.max(m / tail);
            }
            if simple > 0.0 {
                worst_simple = worst_simple.max(m / simple);
            }
            if m > simple + SLACK {
                simple_exceeded += 1;
            }
        }
    }
    Ok(format!(
        "100 tail comparisons hold, max |corr| {max_measured:.3e}, max ratio {worst_tail:.3e}; \
         simple form (not gating): max ratio {worst_simple:.3e}, {simple_exceeded} exceedances"
    ))
}

fn factorization() -> Outcome {
    let c = chain()?;
    let (x, y) = (Support::single(0), Support::single(N - 1));
    let split = core(decouple(&c.phi, &c.lattice, &x, &y))?;
    let h1 = core(build_hamiltonian(&split.phi1, Support::range(0..N)))?;
    let evo1 = core(Evolution::new(&h1))?;
    let omega = core(ProductState::uniform(N, SiteState::Up))?;
    let probe =
        core(evo1.correlation_probe(&LocalObservable::pauli(0, Pauli::Z), &LocalObservable::pauli(N - 1, Pauli::Z)))?;
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let t = 0.3 * k as f64;
        worst = worst.max(core(probe.at(&omega, t))?.magnitude);
    }
    ensure(
        worst <= 1e-10,
        format!(
            "S = {}, {} crossing term(s) removed, max |⟨τ¹(AB)⟩ - ⟨τ¹(A)⟩⟨τ¹(B)⟩| = {worst:.3e} over 10 times",
            split.separating_set,
            split.phi2.len()
        ),
    )
}

fn convergence() -> Outcome {
    let start = Instant::now();
    let lattice = core(MetricLattice::path(10))?;
    let phi = Interaction::tfim(&lattice, 1.0, 1.0);
    let f = core(FFunction::power(2.0))?;
    let volumes = [Support::range(2..8), Support::range(1..9), Support::range(0..10)];
    let a = LocalObservable::pauli(4, Pauli::Z);
    let outer = core(phi.volume(volumes[2].clone()))?;
    let evolutions = volumes
        .iter()
        .map(|v| core(build_hamiltonian(&phi, v.clone())).and_then(|h| core(Evolution::new(&h))))
        .collect::<Result<Vec<_>, _>>()?;
    let prepared = evolutions.iter().map(|e| core(e.prepare(&a))).collect::<Result<Vec<_>, _>>()?;
    let mut notes = Vec::new();
    for t in [0.5, 1.0] {
        let evolved = prepared.iter().map(|p| core(embed(&p.at(t), &outer))).collect::<Result<Vec<_>, _>>()?;
        let d_6_10 = diff_norm(&evolved[2], &evolved[0]);
        let d_8_10 = diff_norm(&evolved[2], &evolved[1]);
        let d_6_8 = diff_norm(&evolved[1], &evolved[0]);
        for tilt in [0.0, 0.5, 1.0] {
            let k = core(Constants::compute(&phi, &lattice, &f, tilt))?;
            for (m, n, d) in [(0, 2, d_6_10), (1, 2, d_8_10), (0, 1, d_6_8)] {
                let cert =
                    core(convergence_certificate(t, a.support(), &volumes[m], &volumes[n], 1.0, &lattice, &k))?.value;
                if d > cert + SLACK {
                    return Err(format!(
                        "t={t} a={tilt} |Λm|={} |Λn|={}: {d:e} > {cert:e}",
                        volumes[m].len(),
                        volumes[n].len()
                    ));
                }
            }
        }
        if d_8_10 > d_6_10 {
            return Err(format!("t={t}: (8,10) difference {d_8_10:e} exceeds (6,10) difference {d_6_10:e}"));
        }
        notes.push(format!("t={t}: (6,10) {d_6_10:.3e}, (8,10) {d_8_10:.3e}"));
    }
    let elapsed = start.elapsed();
    ensure(
        within(Duration::from_secs(120), start),
        format!("{}; {:.2}s (limit 120s)", notes.join("; "), elapsed.as_secs_f64()),
    )
}

fn localization() -> Outcome {
    let c = chain()?;
    let a = LocalObservable::pauli(0, Pauli::Z);
    let volume = c.evo.volume().clone();
    let prepared = core(c.evo.prepare(&a))?;
    let mut checks = 0;
    let mut smallest_ball = usize::MAX;
    let mut worst = 0.0f64;
    for t in [0.5, 1.0] {
        let evolved = prepared.at(t);
        for tilt in [0.5, 1.0] {
            let k = core(Constants::compute(&c.phi, &c.lattice, &c.f, tilt))?;
            for eps in [0.0, 1.0, 2.0, 3.0] {
                let cert = core(localization_certificate(t, eps, a.support(), 1.0, &c.lattice, &k))?;
                let ball = Support::new(cert.ball.clone().unwrap_or_default());
                smallest_ball = smallest_ball.min(ball.len());
                let m = core(local_approximation_error(&evolved, &ball, &volume))?;
                if m > cert.value + SLACK {
                    return Err(format!("t={t} a={tilt} ε={eps}: {m:e} > {:e}", cert.value));
                }
                worst = worst.max(m / cert.value);
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} comparisons hold, max ratio {worst:.3e}; smallest ball has {smallest_ball} of {N} sites"))
}

fn algebraic_identities() -> Outcome {
    let c = chain()?;
    let volume = c.evo.volume().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut iso, mut auto, mut group) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let start = rng.random_range(0..N - 1);
        let len = rng.random_range(1..=2);
        let a = core(embed(&random_observable(Support::range(start..start + len), &mut rng), &volume))?;
        let site = rng.random_range(0..N);
        let b = core(embed(&random_observable(Support::single(site), &mut rng), &volume))?;
        let t: f64 = rng.random_range(-3.0..3.0);
        let s: f64 = rng.random_range(-3.0..3.0);

        let ta = core(c.evo.evolve(&a, t))?;
        let tb = core(c.evo.evolve(&b, t))?;
        iso = iso.max((linalg::operator_norm(ta.matrix().as_ref()) - linalg::operator_norm(a.matrix().as_ref())).abs());
        let tab = core(c.evo.evolve(&core(a.mul(&b))?, t))?;
        auto = auto.max(diff_norm(&tab, &core(ta.mul(&tb))?));
        let sta = core(c.evo.evolve(&ta, s))?;
        group = group.max(diff_norm(&sta, &core(c.evo.evolve(&a, s + t))?));
    }
    ensure(
        iso <= 1e-10 && auto <= 1e-10 && group <= 1e-10,
        format!("20 observables: isometry {iso:.2e}, automorphism {auto:.2e}, group law {group:.2e}"),
    )
}

fn haar_twirl() -> Outcome {
    let volume = core(Volume::qubits([0, 1]))?;
    let x = Support::single(0);
    let rest = Support::single(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut mc, mut idem, mut comm) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let obs = random_observable([0, 1], &mut rng);
        let exact = core(haar_conditional_expectation(&obs, &x, &volume))?;
        let sampled = core(monte_carlo_twirl(&obs, &x, &volume, 200, &mut rng))?;
        let exact_full = core(embed(&exact, &volume))?;
        mc = mc.max(diff_norm(&exact_full, &sampled));
        let twice = core(haar_conditional_expectation(&exact, &x, &volume))?;
        idem = idem.max(diff_norm(&exact, &twice));
        let probe = core(embed(&random_observable(rest.clone(), &mut rng), &volume))?;
        comm = comm.max(op_norm(&commutator(exact_full.matrix().as_ref(), probe.matrix().as_ref())));
    }
    ensure(
        mc <= 0.1 && idem <= 1e-10 && comm <= 1e-10,
        format!("10 observables: max Monte-Carlo gap {mc:.3} (limit 0.1), idempotence {idem:.1e}, X^c commutation {comm:.1e}"),
    )
}

fn geometry() -> Outcome {
    let lattices = [core(MetricLattice::path(16))?, core(MetricLattice::grid(&[4, 4]))?];
    let mut checks = 0;
    for l in &lattices {
        let f = FFunction::default_for(l);
        let (f0, c0) = (f_norm(l, &f), core(convolution_constant(l, &f))?);
        for k in 0..=8 {
            let fa = core(f.with_tilt(0.25 * k as f64))?;
            let (n, c) = (f_norm(l, &fa), core(convolution_constant(l, &fa))?);
            if n > f0 || c > c0 {
                return Err(format!("{} a={}: ‖F_a‖={n} vs {f0}, C_a={c} vs {c0}", l.name(), fa.tilt));
            }
            checks += 1;
        }
    }
    let mut min_excess = f64::INFINITY;
    for n in 1..=20 {
        let r = exponential_counterexample_ratio(n);
        if r < (n + 1) as f64 {
            return Err(format!("counterexample ratio {r} < {} at n={n}", n + 1));
        }
        min_excess = min_excess.min(r - (n + 1) as f64);
    }
    Ok(format!("{checks} tilts monotone on path16 and grid4x4; counterexample ratio ≥ n+1 for n=1..20 (min excess {min_excess:.3})"))
}

fn ode_lemma() -> Outcome {
    let (mut worst_margin, mut saturation, mut cross, mut drift) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    let suite = builtin_suite();
    for p in &suite {
        let r = core(verify_bound(p, &uniform_grid(p.horizon(), 21)))?;
        worst_margin = worst_margin.min(r.worst_margin());
        cross = cross.max(r.max_cross_check());
        drift = drift.max(r.max_norm_drift());
        if p.name == "saturation" {
            saturation = r.rows.iter().map(|row| (row.integral - row.deviation).abs()).fold(0.0, f64::max);
        }
    }
    ensure(
        worst_margin >= -BOUND_SLACK && saturation <= 1e-9 && cross <= 1e-7 && drift <= 1e-8,
        format!(
            "{} problems: worst margin {worst_margin:.2e}, saturation gap {saturation:.1e}, cross-check {cross:.1e}, norm drift {drift:.1e}",
            suite.len()
        ),
    )
}

fn velocity_check() -> Outcome {
    let lattice = core(MetricLattice::path(N))?;
    let phi = Interaction::tfim(&lattice, 1.0, 1.0);
    let f = core(FFunction::power(2.0))?;
    let v = core(velocity(&phi, &lattice, &f))?;
    let mut scan_min = f64::INFINITY;
    for a in log_grid(VELOCITY_A_MIN, VELOCITY_A_MAX, 10_000) {
        let value = core(velocity_objective(&phi, &lattice, &f, a))?;
        if v.v > value * (1.0 + 1e-6) {
            return Err(format!("optimizer {} exceeds scan value {value} at a={a}", v.v));
        }
        scan_min = scan_min.min(value);
    }
    let mut homogeneity = 0.0f64;
    for lambda in [0.25, 2.0, 7.3] {
        let vl = core(velocity(&phi.scaled(lambda), &lattice, &f))?;
        homogeneity = homogeneity.max((vl.v - lambda * v.v).abs() / (lambda * v.v));
    }
    ensure(
        homogeneity <= 1e-12,
        format!(
            "V = {:.9} at a* = {:.6}, dense-scan minimum {scan_min:.9}, homogeneity error {homogeneity:.1e}",
            v.v, v.a_star
        ),
    )
}

fn end_to_end() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let bin = env!("CARGO_BIN_EXE_lightcone");
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let commands = ["lr-check", "correlations", "converge", "localize", "ode-check"];
    for cmd in commands {
        let config: PathBuf = configs.join(format!("{}.json", cmd.replace('-', "_")));
        let mut csv = Vec::new();
        for dir in &dirs {
            let out = Command::new(bin)
                .arg(cmd)
                .arg("--config")
                .arg(&config)
                .arg("--out")
                .arg(dir.path())
                .arg("--format")
                .arg("both")
                .output()
                .map_err(|e| format!("{cmd}: {e}"))?;
            if !out.status.success() {
                return Err(format!(
                    "{cmd} exited with {}: {}",
                    out.status,
                    String::from_utf8_lossy(&out.stderr).trim()
                ));
            }
            csv.push(std::fs::read(dir.path().join(format!("{cmd}.csv"))).map_err(|e| format!("{cmd}: {e}"))?);
        }
        if csv[0] != csv[1] {
            return Err(format!("{cmd}: CSV differs between runs"));
        }
    }
    Ok(format!("{} subcommands exit 0; CSV byte-identical across two runs", commands.len()))
}

fn main() -> ExitCode {
    lightcone::linalg::set_sequential();
    let criteria: [Criterion; 12] = [
        ("lr inequality suite", lr_suite),
        ("light cone", light_cone),
        ("correlation suite", correlations),
        ("decoupling factorization", factorization),
        ("convergence suite", convergence),
        ("localization suite", localization),
        ("algebraic identities", algebraic_identities),
        ("haar twirl", haar_twirl),
        ("geometry", geometry),
        ("ode lemma suite", ode_lemma),
        ("velocity", velocity_check),
        ("end to end", end_to_end),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
