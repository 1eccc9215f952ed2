use std::f64::consts::PI;

use proptest::prelude::*;

use adiabat::criteria::{
    a_functionals, evaluate, evaluate_bounds, monotonicity_changes, omega_max, second_order_fixed_point,
    CriteriaOptions, Functional,
};
use adiabat::passages::{adiabatic_impulse, find_crossings, lz_single, multi_passage};
use adiabat::propagator::{adiabatic_amplitudes, propagate, schwinger_exact, PhaseChoice, SchwingerParams};
use adiabat::schedules::{build_grid, Model, RandomPair, ScheduleSpec, TimeGrid};
use adiabat::spectral::{eigenframe, frame_track, FrameTrack, SpectralOptions};
use adiabat::{CMatrix, C64};

fn random_spec(dim: usize, seed: u64, real: bool, horizon: f64) -> ScheduleSpec {
    ScheduleSpec::new(Model::RandomSmooth(RandomPair::generate(dim, seed, real, 1.0, 1.0)), 0.0, horizon).unwrap()
}

fn track(spec: &ScheduleSpec, n: usize) -> FrameTrack {
    frame_track(spec, &build_grid(spec, n).unwrap(), &SpectralOptions::default()).unwrap()
}

fn analytic_spec() -> impl Strategy<Value = ScheduleSpec> {
    prop_oneof![
        (0.2..3.0, 0.05..3.0, -2.0..2.0)
            .prop_map(|(omega0, theta, omega_l)| ScheduleSpec::new(Model::Schwinger { omega0, theta, omega_l }, 0.0, 10.0)),
        (-2.0..2.0, 0.1..2.0, 0.1..2.0).prop_map(|(delta0, rabi, omega_l)| ScheduleSpec::new(
            Model::RwaTwoLevel { delta0, rabi, omega_l },
            0.0,
            10.0
        )),
        (1.0..20.0, 0.2..2.0, 0.1..3.0, any::<bool>()).prop_map(|(alpha, omega, rabi, swapped)| ScheduleSpec::new(
            Model::Cycling { alpha, omega, rabi, swapped },
            0.0,
            10.0
        )),
        (0.1..5.0, 0.1..2.0, 2.0..8.0).prop_map(|(beta, rabi, t_center)| ScheduleSpec::new(
            Model::LinearChirp { beta, rabi, t_center },
            0.0,
            10.0
        )),
    ]
    .prop_map(Result::unwrap)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonians_are_hermitian(spec in analytic_spec(), u in 0.0..1.0f64, seed in 0u64..1000, dim in 2usize..6) {
        let t = 10.0 * u;
        for s in [spec, random_spec(dim, seed, seed % 2 == 0, 10.0)] {
            let h = s.h(t).unwrap();
            prop_assert!(max_abs(&(&h - h.adjoint())) <= 1e-13 * h.norm().max(1e-300));
        }
    }

    #[test]
    fn analytic_derivative_matches_finite_difference(spec in analytic_spec(), u in 0.05..0.95f64) {
        let t = 10.0 * u;
        let exact = spec.hdot(t).unwrap();
        let fd = spec.finite_difference(t).value;
        prop_assert!(max_abs(&(&exact - &fd)) <= 1e-6 * max_abs(&exact).max(1e-3));
    }

    #[test]
    fn schwinger_closed_form_is_unitary(omega0 in 0.1..3.0f64, theta in 0.0..PI, omega_l in -3.0..3.0f64, t in 0.0..100.0f64) {
        let u = schwinger_exact(&SchwingerParams::new(omega0, theta, omega_l), t);
        let id = CMatrix::identity(2, 2);
        prop_assert!(max_abs(&(&u * u.adjoint() - id)) <= 1e-12);
    }

    #[test]
    fn physics_is_gauge_invariant(seed in 0u64..10_000, dim in 2usize..6, phases in proptest::collection::vec(0.0..2.0 * PI, 6)) {
        let spec = random_spec(dim, seed, false, 4.0);
        let opts = SpectralOptions::default();
        let (t0, t1) = (1.0, 1.01);
        let a0 = eigenframe(&spec.h(t0).unwrap(), t0, None, &opts).unwrap();
        let mut rotated = a0.clone();
        for m in 0..dim {
            let z = C64::from_polar(1.0, phases[m]);
            let col = rotated.vectors.column(m) * z;
            rotated.vectors.set_column(m, &col);
        }
        let h1 = spec.h(t1).unwrap();
        let b = eigenframe(&h1, t1, Some(&a0), &opts).unwrap();
        let b_rot = eigenframe(&h1, t1, Some(&rotated), &opts).unwrap();
        prop_assert!((b.gap - b_rot.gap).abs() <= 1e-10);
        for m in 0..dim {
            prop_assert!((b.energies[m] - b_rot.energies[m]).abs() <= 1e-10);
        }
        let hdot = spec.hdot(t1).unwrap();
        let cb = adiabat::spectral::couplings(&b, &hdot).unwrap();
        let cr = adiabat::spectral::couplings(&b_rot, &hdot).unwrap();
        for m in 0..dim {
            for k in (0..dim).filter(|&k| k != m) {
                prop_assert!((cb.get(m, k).norm() - cr.get(m, k).norm()).abs() <= 1e-10 * (1.0 + cb.get(m, k).norm()));
            }
        }
    }

    #[test]
    fn couplings_are_anti_hermitian_and_real_for_real_schedules(seed in 0u64..10_000, dim in 2usize..6, real in any::<bool>()) {
        let spec = random_spec(dim, seed, real, 3.0);
        let tr = track(&spec, 61);
        for cm in &tr.couplings {
            prop_assert!(max_abs(&(&cm.c + cm.c.adjoint())) <= 1e-8 * (1.0 + max_abs(&cm.c)));
            if real {
                prop_assert!(cm.c.iter().all(|z| z.im.abs() <= 1e-9 * (1.0 + max_abs(&cm.c))));
            }
        }
        if real {
            for f in &tr.frames {
                prop_assert!(f.vectors.iter().all(|z| z.im.abs() <= 1e-9));
            }
        }
    }

    #[test]
    fn omega_ordering(seed in 0u64..10_000, dim in 2usize..6) {
        let spec = random_spec(dim, seed, false, 5.0);
        let tr = track(&spec, 101);
        let o = omega_max(&spec, &tr, 0).unwrap();
        prop_assert!(o.omega_n <= o.omega);
        prop_assert!(o.omega <= o.hdot_bound * (1.0 + 1e-9));
    }

    #[test]
    fn grids_are_strictly_increasing(t0 in -50.0..50.0f64, len in 1e-3..100.0f64, n in 2usize..2000) {
        let g = TimeGrid::uniform(t0, t0 + len, n).unwrap();
        prop_assert_eq!(g.start(), t0);
        prop_assert_eq!(g.end(), t0 + len);
        prop_assert!(g.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn frames_are_orthonormal_and_ascending(seed in 0u64..10_000, dim in 2usize..7, t in 0.0..10.0f64) {
        let spec = random_spec(dim, seed, seed % 3 == 0, 10.0);
        let f = eigenframe(&spec.h(t).unwrap(), t, None, &SpectralOptions::default()).unwrap();
        let overlap = f.vectors.adjoint() * &f.vectors;
        prop_assert!(max_abs(&(overlap - CMatrix::identity(dim, dim))) <= 1e-12);
        prop_assert!(f.energies.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn schwinger_rabi_dominates_its_parts(omega0 in -5.0..5.0f64, theta in -PI..PI, omega_l in -5.0..5.0f64) {
        let p = SchwingerParams::new(omega0, theta, omega_l);
        prop_assert!(p.rabi() >= p.coupling().abs());
        prop_assert!(p.rabi() >= p.detuning().abs());
        let sq = p.coupling().powi(2) + p.detuning().powi(2);
        prop_assert!((p.rabi().powi(2) - sq).abs() <= 4.0 * f64::EPSILON * sq);
    }

    #[test]
    fn crossings_are_increasing_and_lz_is_a_probability(alpha in 0.5..50.0f64, omega in 0.1..3.0f64, rabi in 0.01..5.0f64, periods in 0.5..6.0f64) {
        let spec = ScheduleSpec::new(Model::Cycling { alpha, omega, rabi, swapped: false }, 0.0, periods * 2.0 * PI / omega).unwrap();
        let x = find_crossings(&spec).unwrap();
        prop_assert!(x.windows(2).all(|w| w[1] > w[0]));
        let lz = lz_single(alpha, omega, rabi);
        prop_assert!((0.0..=1.0).contains(&lz.p1));
    }

    #[test]
    fn second_order_rates_keep_first_order_signs(
        g in proptest::collection::vec(prop_oneof![-5.0..-0.01f64, 0.01..5.0f64], 2..6),
        w in proptest::collection::vec(0.0..4.0f64, 6),
    ) {
        let n = g.len() + 1;
        let gs: Vec<f64> = std::iter::once(0.0).chain(g.iter().copied()).collect();
        let ws: Vec<f64> = std::iter::once(0.0).chain(w[..g.len()].iter().copied()).collect();
        let x = second_order_fixed_point(&gs, &ws, 0, 0.0).unwrap();
        let s: f64 = (1..n).map(|j| ws[j] / x[j]).sum();
        for j in 1..n {
            prop_assert_eq!(x[j] < 0.0, gs[j] < 0.0);
            prop_assert!((x[j] - gs[j] - s).abs() <= 1e-9 * (1.0 + x[j].abs() + s.abs()));
        }
    }

    #[test]
    fn multi_passage_is_a_probability(p1 in 0.0..=1.0f64, theta in -10.0..10.0f64, m in 1usize..=10, stokes in 0.0..(PI / 4.0)) {
        let p = multi_passage(p1, theta, m).unwrap().p;
        prop_assert!((0.0..=1.0).contains(&p));
        let q = adiabatic_impulse(p1, theta, stokes, m).unwrap();
        prop_assert!((-1e-14..=1.0 + 1e-14).contains(&q));
    }

    #[test]
    fn two_passages_reduce_to_sine_law(p1 in 0.0..0.25f64, theta in -10.0..10.0f64) {
        prop_assume!(theta.cos().abs() > 1e-3);
        let general = multi_passage(p1, theta, 2).unwrap();
        let direct = 4.0 * p1 * theta.sin().powi(2);
        prop_assert!((general.p - direct.min(1.0)).abs() <= 1e-14 * (1.0 + direct) / theta.cos().powi(2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn real_schedules_have_equal_first_and_zeroth_order(seed in 0u64..10_000, dim in 2usize..5) {
        let spec = random_spec(dim, seed, true, 5.0);
        let tr = track(&spec, 201);
        prop_assume!(tr.frames.iter().all(|f| f.gap > 0.05));
        let a0 = a_functionals(&tr, Functional::A0).unwrap();
        let a1 = a_functionals(&tr, Functional::A1).unwrap();
        for (x, y) in a0.iter().zip(&a1) {
            for (u, v) in x.series.values.iter().zip(&y.series.values) {
                prop_assert!((u.abs() - v.abs()).abs() <= 1e-9, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn second_order_series_follows_first_order_sign(seed in 0u64..10_000, dim in 2usize..5) {
        let spec = random_spec(dim, seed, seed % 2 == 0, 5.0);
        let tr = track(&spec, 201);
        prop_assume!(tr.frames.iter().all(|f| f.gap > 0.05));
        let a1 = a_functionals(&tr, Functional::A1).unwrap();
        if let Ok(a2) = a_functionals(&tr, Functional::A2) {
            for (p, q) in a2.iter().zip(&a1) {
                for (v, u) in p.series.values.iter().zip(&q.series.values) {
                    prop_assert!(v.is_finite() && *v != 0.0 || *u == 0.0);
                    prop_assert_eq!(v.is_sign_negative(), u.is_sign_negative(), "A2 {} vs A1 {}", v, u);
                }
            }
        }
    }

    #[test]
    fn zeno_short_time_law(seed in 0u64..10_000, dim in 2usize..5, horizon in 0.01..0.3f64) {
        let spec = random_spec(dim, seed, seed % 2 == 0, horizon);
        let tr = track(&spec, 41);
        let psi0 = tr.frames[0].vector(0).into_owned();
        let traj = propagate(&spec, &psi0, &tr.grid, 1e-12).unwrap();
        let traj = adiabatic_amplitudes(&traj, &tr, PhaseChoice::Theta1).unwrap();
        let o = omega_max(&spec, &tr, 0).unwrap();
        let bn = traj.adiabatic_b.as_ref().unwrap().last().unwrap()[0].norm();
        let bound = (dim as f64 - 1.0) * (o.omega_n * horizon).powi(2) / 2.0;
        prop_assert!(1.0 - bn <= bound + 1e-9, "{} > {bound}", 1.0 - bn);
        for b in traj.adiabatic_b.as_ref().unwrap() {
            prop_assert!((b.norm_squared() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn exact_bounds_hold_on_gapped_instances(seed in 0u64..10_000, dim in 2usize..5, horizon in 0.5..20.0f64, real in any::<bool>()) {
        let spec = random_spec(dim, seed, real, horizon);
        let tr = track(&spec, 401);
        prop_assume!(tr.frames.iter().all(|f| f.gap > 0.1));
        let report = evaluate(&spec, &tr, 0, &CriteriaOptions::default()).unwrap();
        let psi0 = tr.frames[0].vector(0).into_owned();
        let traj = propagate(&spec, &psi0, &tr.grid, 1e-10).unwrap();
        let traj = adiabatic_amplitudes(&traj, &tr, PhaseChoice::Theta1).unwrap();
        let b = evaluate_bounds(&report, &traj).unwrap();
        prop_assert!(b.zeno_slack >= -1e-9, "zeno slack {}", b.zeno_slack);
        if let Some(s) = b.pointfix_slack {
            prop_assert!(s >= -1e-9, "point-fix slack {s}");
        }
        if let Some(s) = b.b_minus_slack {
            prop_assert!(s >= -1e-9, "b- slack {s}");
        }
    }

    #[test]
    fn crossings_match_first_order_extrema(alpha in 5.0..40.0f64, omega in 0.3..2.0f64, rabi in 0.5..3.0f64, k in 1usize..5) {
        // Window from one detuning extremum to another. The first-order series
        // peaks at each crossing and vanishes at each interior detuning extremum.
        let spec = ScheduleSpec::new(Model::Cycling { alpha, omega, rabi, swapped: false }, 0.0, k as f64 * PI / omega).unwrap();
        let crossings = find_crossings(&spec).unwrap();
        prop_assert_eq!(crossings.len(), k);
        let tr = track(&spec, 400 * k + 1);
        let a1 = a_functionals(&tr, Functional::A1).unwrap();
        let changes = monotonicity_changes(&a1[0].series.values, 1e-6);
        prop_assert_eq!(changes, 2 * crossings.len() - 1);
    }

    #[test]
    fn first_order_ratio_at_crossing_matches_landau_zener(alpha in 5.0..40.0f64, omega in 0.3..2.0f64, rabi in 0.5..3.0f64) {
        let t1 = PI / omega;
        let spec = ScheduleSpec::new(Model::Cycling { alpha, omega, rabi, swapped: false }, 0.0, t1).unwrap();
        let grid = TimeGrid::uniform(0.0, t1, 801).unwrap();
        let tr = frame_track(&spec, &grid, &SpectralOptions::default()).unwrap();
        let tc = find_crossings(&spec).unwrap()[0];
        let i = tr.times().iter().enumerate().min_by(|a, b| (a.1 - tc).abs().total_cmp(&(b.1 - tc).abs())).unwrap().0;
        prop_assert!((tr.times()[i] - tc).abs() < 1e-9);
        let a1 = a_functionals(&tr, Functional::A1).unwrap()[0].series.values[i].abs();
        let lz = lz_single(alpha, omega, rabi);
        prop_assert!((a1 - lz.a1_inf).abs() <= 1e-6 * lz.a1_inf, "{a1} vs {}", lz.a1_inf);
        prop_assert!((lz.p1 - lz.p1_from_a1).abs() <= 1e-12);
    }
}
