use std::f64::consts::PI;

use proptest::prelude::*;
use rzbattery::analytic::{self, AnalyticModel};
use rzbattery::metrics::{self, diagonal_entropy, fluctuation, stored_energy_from_populations};
use rzbattery::model::{hamiltonian_at, BandedModel};
use rzbattery::propagator::{evolve, EvolutionConfig};
use rzbattery::spectrum::static_spectrum;
use rzbattery::spin::{commutator, hermiticity_defect, max_abs};
use rzbattery::{ModelParams, SpinSpace, C64};

fn params() -> impl Strategy<Value = ModelParams> {
    (1usize..=12, -5.0f64..5.0, 0.0f64..60.0, 0.05f64..1.0, 0.5f64..2.0).prop_map(
        |(n, lambda, v0, t, delta)| {
            ModelParams::new(n, lambda, v0, t).unwrap().with_delta(delta).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_stays_physical(p in params()) {
        let space = SpinSpace::new(p.n_atoms).unwrap();
        let cfg = EvolutionConfig { refine: false, ..EvolutionConfig::default() };
        let traj = evolve(&p, &space, &cfg).unwrap();
        prop_assert!(traj.max_norm_drift() < 1e-9);
        let n = p.n_atoms as f64;
        for s in &traj.states {
            let e = stored_energy_from_populations(s, &p);
            prop_assert!(e >= -1e-12 && e <= p.full_charge() + 1e-12);
            prop_assert!(fluctuation(s, &p).unwrap() <= p.delta * n / 2.0 + 1e-12);
            prop_assert!(diagonal_entropy(s) <= (n + 1.0).log2() + 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_and_bounded(p in params(), frac in 0.0f64..1.0) {
        let space = SpinSpace::new(p.n_atoms).unwrap();
        let t = frac * p.period;
        let snap = hamiltonian_at(&p, &space, t);
        prop_assert!(hermiticity_defect(&snap.h) < 1e-12);
        let banded = BandedModel::new(&p).unwrap().at(t);
        prop_assert!(max_abs(&(banded.to_operator() - &snap.h)) < 1e-12);
        prop_assert!(banded.norm_bound() <= BandedModel::new(&p).unwrap().max_norm_bound() + 1e-9);
    }

    #[test]
    fn algebra_closes(n in 1usize..=20) {
        let s = SpinSpace::new(n).unwrap();
        let i = C64::new(0.0, 1.0);
        prop_assert!(max_abs(&(commutator(s.jx(), s.jy()) - s.jz() * i)) < 1e-12);
        prop_assert!(max_abs(&(commutator(s.jy(), s.jz()) - s.jx() * i)) < 1e-12);
        prop_assert!(max_abs(&(commutator(s.jz(), s.jx()) - s.jy() * i)) < 1e-12);
    }

    #[test]
    fn instantaneous_power_integrates_to_energy(p in params()) {
        let space = SpinSpace::new(p.n_atoms).unwrap();
        let cfg = EvolutionConfig { store_every: 1, refine: false, ..EvolutionConfig::default() };
        let traj = evolve(&p, &space, &cfg).unwrap();
        let series = metrics::from_trajectory(&traj, &space).unwrap();
        let mut integral = 0.0;
        for k in 1..series.len() {
            let h = series.times[k] - series.times[k - 1];
            integral += 0.5 * h * (series.inst_power[k] + series.inst_power[k - 1]);
        }
        let e = *series.energy.last().unwrap();
        prop_assert!((integral - e).abs() <= 1e-4 * p.full_charge(), "{integral} vs {e}");
    }

    #[test]
    fn bessel_constants_are_finite_and_paired(area in 0.01f64..40.0, t in 0.05f64..1.0, lambda in -30.0f64..30.0) {
        let p = ModelParams::new(10, lambda, area / t, t).unwrap();
        let b = analytic::b_coeffs(&p).unwrap();
        prop_assert_eq!(b.b8, b.b9);
        for n in 1..=12 {
            prop_assert!(b.get(n).is_finite());
        }
    }

    #[test]
    fn analytic_power_identities(p in params(), frac in 0.01f64..1.0) {
        prop_assume!(p.v0 > 0.0);
        let m = AnalyticModel::new(&p).unwrap();
        let t = frac * p.period;
        prop_assert!((m.avg_power(t) - m.energy(t) / t).abs() <= 1e-14 * m.avg_power(t).abs().max(1e-300));
        prop_assert!(analytic::e_max(&p) <= p.full_charge());
        prop_assert!(analytic::t_max(&p) <= p.period);
        let mu = analytic::mu_of_t(&p, t);
        prop_assert!(mu <= PI && mu >= PI - p.pulse_area() / 2.0 - 1e-12);
    }

    #[test]
    fn spectrum_levels_are_ordered(n in 2usize..60, lambda in -3.0f64..3.0, g in 0.0f64..1.0) {
        let s = static_spectrum(n, 1.0, lambda, g).unwrap();
        prop_assert!(s.gap >= 0.0);
        prop_assert!(s.order_parameter.abs() <= 1.0 + 1e-12);
    }
}
