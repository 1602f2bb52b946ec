use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lightcone::bounds::{lr_certificate, velocity, Constants, Norms};
use lightcone::dynamics::{embed, haar_conditional_expectation, random_observable, Evolution, LocalObservable};
use lightcone::interaction::{build_hamiltonian, decouple, Interaction};
use lightcone::lattice::{convolution_constant, f_norm, FFunction, MetricLattice};
use lightcone::linalg::{commutator, frobenius_norm, operator_norm};
use lightcone::space::{Support, Volume};

const N: usize = 5;

fn chain(j: f64, h: f64) -> (MetricLattice, Interaction, Evolution) {
    let l = MetricLattice::path(N).unwrap();
    let phi = Interaction::tfim(&l, j, h);
    let evo = Evolution::new(&build_hamiltonian(&phi, Support::range(0..N)).unwrap()).unwrap();
    (l, phi, evo)
}

fn support() -> impl Strategy<Value = Support> {
    (0..N, 1..=2usize).prop_map(|(start, len)| Support::range(start..(start + len).min(N)))
}

fn observable(s: &Support, seed: u64) -> LocalObservable {
    random_observable(s.clone(), &mut ChaCha8Rng::seed_from_u64(seed))
}

fn dist(a: &LocalObservable, b: &LocalObservable) -> f64 {
    frobenius_norm((a.matrix() - b.matrix()).as_ref())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evolution_is_an_isometric_automorphism(
        sa in support(), sb in support(), seed in any::<u64>(),
        t in -3.0..3.0f64, j in 0.1..2.0f64, h in 0.1..2.0f64,
    ) {
        let (_, _, evo) = chain(j, h);
        let vol = evo.volume().clone();
        let a = embed(&observable(&sa, seed), &vol).unwrap();
        let b = embed(&observable(&sb, seed ^ 0x5a5a), &vol).unwrap();
        let ta = evo.evolve(&a, t).unwrap();
        let tb = evo.evolve(&b, t).unwrap();
        prop_assert!((operator_norm(ta.matrix().as_ref()) - operator_norm(a.matrix().as_ref())).abs() < 1e-10);
        let tab = evo.evolve(&a.mul(&b).unwrap(), t).unwrap();
        prop_assert!(dist(&tab, &ta.mul(&tb).unwrap()) < 1e-10);
    }

    #[test]
    fn evolution_is_a_group(sa in support(), seed in any::<u64>(), s in -2.0..2.0f64, t in -2.0..2.0f64) {
        let (_, _, evo) = chain(1.0, 0.7);
        let a = observable(&sa, seed);
        let st = evo.evolve(&evo.evolve(&a, t).unwrap(), s).unwrap();
        prop_assert!(dist(&st, &evo.evolve(&a, s + t).unwrap()) < 1e-10);
        let back = evo.evolve(&evo.evolve(&a, t).unwrap(), -t).unwrap();
        prop_assert!(dist(&back, &embed(&a, evo.volume()).unwrap()) < 1e-10);
    }

    #[test]
    fn measured_commutator_below_certificate(
        x in 0..N, y in 0..N, seed in any::<u64>(), t in 0.0..2.0f64, a in 0.0..1.5f64,
    ) {
        prop_assume!(x != y);
        let (l, phi, evo) = chain(1.0, 1.0);
        let (sx, sy) = (Support::single(x), Support::single(y));
        let oa = observable(&sx, seed);
        let ob = observable(&sy, seed + 1);
        let c = Constants::compute(&phi, &l, &FFunction::power(2.0).unwrap(), a).unwrap();
        let cert = lr_certificate(t, &sx, &sy, Norms { a: 1.0, b: 1.0 }, &l, &c).unwrap().value;
        let measured = evo.commutator_norm(&evo.prepare(&oa).unwrap(), &ob, t).unwrap();
        prop_assert!(measured <= cert + 1e-10, "{measured} > {cert}");
    }

    #[test]
    fn lr_certificate_grows_with_time(t in 0.0..3.0f64, dt in 0.0..1.0f64, a in 0.0..2.0f64) {
        let l = MetricLattice::path(8).unwrap();
        let phi = Interaction::tfim(&l, 1.0, 1.0);
        let c = Constants::compute(&phi, &l, &FFunction::power(2.0).unwrap(), a).unwrap();
        let (x, y) = (Support::single(0), Support::single(7));
        let n = Norms { a: 1.0, b: 1.0 };
        let v0 = lr_certificate(t, &x, &y, n, &l, &c).unwrap().value;
        let v1 = lr_certificate(t + dt, &x, &y, n, &l, &c).unwrap().value;
        prop_assert!(v0 <= v1);
    }

    #[test]
    fn twirl_is_an_idempotent_projection(sx in support(), seed in any::<u64>()) {
        let vol = Volume::qubits(Support::range(0..4)).unwrap();
        let sx = Support::new(sx.iter().copied().filter(|&v| v < 4).collect());
        prop_assume!(!sx.is_empty());
        let obs = random_observable(Support::range(0..4), &mut ChaCha8Rng::seed_from_u64(seed));
        let once = haar_conditional_expectation(&obs, &sx, &vol).unwrap();
        let twice = haar_conditional_expectation(&once, &sx, &vol).unwrap();
        prop_assert!(dist(&once, &twice) < 1e-10);
        // the embedded result commutes with everything on the complement
        let rest = vol.sites().difference(&sx);
        if !rest.is_empty() {
            let probe = embed(&random_observable(rest, &mut ChaCha8Rng::seed_from_u64(seed + 7)), &vol).unwrap();
            let e = embed(&once, &vol).unwrap();
            prop_assert!(operator_norm(commutator(e.matrix().as_ref(), probe.matrix().as_ref()).as_ref()) < 1e-10);
        }
        prop_assert!(operator_norm(once.matrix().as_ref()) <= operator_norm(obs.matrix().as_ref()) + 1e-12);
    }

    #[test]
    fn tilting_shrinks_lattice_constants(n in 2..12usize, p in 1.1..4.0f64, a in 0.0..3.0f64, grid in any::<bool>()) {
        let l = if grid { MetricLattice::grid(&[n.min(5), 3]).unwrap() } else { MetricLattice::path(n).unwrap() };
        let f = FFunction::power(p).unwrap();
        let fa = f.with_tilt(a).unwrap();
        prop_assert!(f_norm(&l, &fa) <= f_norm(&l, &f) * (1.0 + 1e-12));
        prop_assert!(convolution_constant(&l, &fa).unwrap() <= convolution_constant(&l, &f).unwrap() * (1.0 + 1e-12));
        prop_assert!(convolution_constant(&l, &fa).unwrap() >= 1.0);
    }

    #[test]
    fn decoupling_partitions_the_interaction(x in 0..6usize, y in 0..6usize) {
        prop_assume!(x != y);
        let l = MetricLattice::path(6).unwrap();
        let phi = Interaction::tfim(&l, 1.0, 0.5);
        let split = decouple(&phi, &l, &Support::single(x), &Support::single(y)).unwrap();
        prop_assert_eq!(split.phi1.len() + split.phi2.len(), phi.len());
        let s = &split.separating_set;
        prop_assert!(s.contains_site(x) && !s.contains_site(y));
        for (z, _) in split.phi2.terms() {
            prop_assert!(z.intersects(s) && !z.is_subset(s));
        }
        for (z, _) in split.phi1.terms() {
            prop_assert!(z.is_subset(s) || !z.intersects(s));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn velocity_is_homogeneous(lambda in 0.1..10.0f64) {
        let l = MetricLattice::path(6).unwrap();
        let phi = Interaction::tfim(&l, 1.0, 1.0);
        let f = FFunction::power(2.0).unwrap();
        let v = velocity(&phi, &l, &f).unwrap();
        let vl = velocity(&phi.scaled(lambda), &l, &f).unwrap();
        prop_assert!((vl.v - lambda * v.v).abs() <= 1e-12 * vl.v, "{} vs {}", vl.v, lambda * v.v);
    }
}
