use magnon::chain::{build_static_hamiltonian, field_values_into, sample_disordered_couplings};
use magnon::control::{inverse_engineer, polynomial_xc, verify_boundary_conditions};
use magnon::experiments::{summarize, EnsembleRecord, RunConfig};
use magnon::oracle::{classical_trajectory, continuum_fidelity};
use magnon::propagator::evolve;
use magnon::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn unit_state(parts: &[(f64, f64)]) -> Option<WaveState> {
    let amps: Vec<Complex64> = parts.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    WaveState::normalized(amps, 0.0).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_symmetric_tridiagonal(bonds in prop::collection::vec(0.1f64..2.0, 2..40)) {
        let n = bonds.len() + 1;
        let spec = ChainSpec::with_bonds(n, 1.0, bonds.clone()).unwrap();
        let h = build_static_hamiltonian(&spec).unwrap().to_dense();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(h[i][j], h[j][i]);
                if i.abs_diff(j) > 1 {
                    prop_assert_eq!(h[i][j], 0.0);
                }
            }
            let left = if i > 0 { bonds[i - 1] } else { 0.0 };
            let right = if i + 1 < n { bonds[i] } else { 0.0 };
            prop_assert_eq!(h[i][i], -(left + right));
        }
    }

    #[test]
    fn field_is_non_positive_and_even(
        omega in 0.05f64..1.5,
        center_site in 20usize..80,
        offset in 0usize..15,
    ) {
        let spec = ChainSpec::uniform(100, 1.0).unwrap();
        let trap = TrapConfig::new(omega, 30.0, 10.0);
        let center = center_site as f64;
        let mut field = vec![0.0; 100];
        field_values_into(omega * omega, center, &trap, &spec, &mut field);
        prop_assert!(field.iter().all(|&b| b <= 0.0));
        prop_assert_eq!(field[center_site], 0.0);
        let (l, r) = (center_site as isize - offset as isize, center_site + offset);
        if l >= 0 && r < 100 {
            prop_assert_eq!(field[l as usize], field[r]);
        }
    }

    #[test]
    fn fidelity_symmetric_and_bounded(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
    ) {
        if let (Some(a), Some(b)) = (unit_state(&a), unit_state(&b)) {
            let ab = fidelity(&a, &b).unwrap();
            let ba = fidelity(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn magnetization_bounded_with_fixed_sum(parts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..30)) {
        if let Some(psi) = unit_state(&parts) {
            let sz = local_magnetization(&psi);
            prop_assert!(sz.iter().all(|v| (-1.0..=1.0).contains(v)));
            let total: f64 = sz.iter().sum();
            prop_assert!((total - (2.0 - parts.len() as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn sta_equals_inverse_engineered(
        omega0 in 0.1f64..1.0,
        t_f in 20.0f64..600.0,
        distance in 10.0f64..200.0,
    ) {
        let trap = TrapConfig::new(omega0, 40.0, distance);
        let sta = ControlProtocol::sta_polynomial(&trap, t_f).unwrap();
        let inv = inverse_engineer(&polynomial_xc(&trap, t_f).unwrap(), &trap, t_f).unwrap();
        for i in 0..1000 {
            let t = t_f * i as f64 / 999.0;
            let (a, b) = (sta.controls(t).unwrap(), inv.controls(t).unwrap());
            prop_assert!((a.1 - b.1).abs() <= 1e-10 * distance, "t = {t}: {} vs {}", a.1, b.1);
            prop_assert!((a.0 - b.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn protocols_finite_on_dense_grid(
        omega0 in 0.05f64..1.5,
        t_f in 1.0f64..800.0,
        distance in 0.0f64..200.0,
    ) {
        let trap = TrapConfig::new(omega0, 30.0, distance);
        let protocols = [
            ControlProtocol::linear_ramp(&trap, t_f).unwrap(),
            ControlProtocol::sta_polynomial(&trap, t_f).unwrap(),
            inverse_engineer(&polynomial_xc(&trap, t_f).unwrap(), &trap, t_f).unwrap(),
        ];
        for p in &protocols {
            for i in 0..10_000 {
                let (w, x) = p.controls(t_f * i as f64 / 9_999.0).unwrap();
                prop_assert!(w.is_finite() && x.is_finite());
            }
        }
    }

    #[test]
    fn midpoint_symmetry(omega0 in 0.1f64..1.0, t_f in 10.0f64..600.0, distance in 1.0f64..200.0, s in 0.0f64..1.0) {
        let trap = TrapConfig::new(omega0, 25.0, distance);
        let t = s * t_f;
        for p in [
            ControlProtocol::linear_ramp(&trap, t_f).unwrap(),
            ControlProtocol::sta_polynomial(&trap, t_f).unwrap(),
        ] {
            let sum = p.trap_center(t).unwrap() + p.trap_center(t_f - t).unwrap();
            prop_assert!((sum - (2.0 * 25.0 + distance)).abs() < 1e-9 * (1.0 + distance), "{}", p.label);
        }
    }

    #[test]
    fn boundary_conditions_hold(omega0 in 0.1f64..1.0, omega_f in 0.1f64..1.0, t_f in 20.0f64..600.0, distance in 0.0f64..200.0) {
        let trap = TrapConfig::new(omega0, 30.0, distance).with_final_frequency(omega_f);
        let a = polynomial_xc(&trap, t_f).unwrap();
        let report = verify_boundary_conditions(&a, t_f, 1e-10 * (1.0 + distance));
        prop_assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn config_round_trips_bit_exactly(
        omega0 in 0.01f64..1.9,
        tf in 1.0f64..1000.0,
        dt in 1e-3f64..0.5,
        seed in any::<u64>(),
        deltas in prop::collection::vec(0.0f64..0.5, 1..6),
    ) {
        let mut cfg = RunConfig::default();
        cfg.trap.omega0 = omega0;
        cfg.trap.omega_f = Some(omega0 * 0.7);
        cfg.protocol.tf = tf;
        cfg.plan.dt = dt;
        cfg.disorder.master_seed = seed;
        cfg.disorder.deltas = deltas;
        let text = cfg.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(back.trap.omega0.to_bits(), omega0.to_bits());
    }

    #[test]
    fn classical_energy_conserved_in_static_trap(omega in 0.05f64..1.0, x0 in -20.0f64..20.0, v0 in -2.0f64..2.0) {
        let p = ControlProtocol::stationary(0.0, omega * omega, 100.0).unwrap();
        let traj = classical_trajectory(&p, x0, v0, 100.0, 0.01).unwrap();
        let energy = |s: &magnon::oracle::ClassicalState| 0.5 * s.velocity.powi(2) + 0.5 * omega * omega * s.position.powi(2);
        let e0 = energy(&traj[0].1);
        for (_, s) in &traj {
            prop_assert!((energy(s) - e0).abs() <= 1e-8 * e0.max(1e-3));
        }
    }

    #[test]
    fn continuum_fidelity_monotone(dx in 0.0f64..5.0, dp in 0.0f64..2.0, step in 0.01f64..1.0, sigma in 0.5f64..5.0) {
        let f = continuum_fidelity(dx, dp, sigma);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(continuum_fidelity(dx + step, dp, sigma) < f || f == 0.0);
        prop_assert!(continuum_fidelity(dx, dp + step, sigma) < f || f == 0.0);
    }

    #[test]
    fn disorder_reproducible_and_bounded(delta in 0.0f64..0.5, seed in any::<u64>(), index in 0u64..10_000) {
        let spec = ChainSpec::uniform(50, 1.0).unwrap();
        let dis = DisorderSpec::new(delta, seed, index);
        let a = sample_disordered_couplings(&spec, &dis).unwrap();
        let b = sample_disordered_couplings(&spec, &dis).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.iter().all(|j| (j - 1.0).abs() <= delta));
    }

    #[test]
    fn ensemble_summary_recomputes(values in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let records: Vec<EnsembleRecord> = values
            .iter()
            .enumerate()
            .map(|(i, &f)| EnsembleRecord { delta: 0.1, realization: i as u64, seed: 7, fidelity: f })
            .collect();
        let s = &summarize(&records)[0];
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        prop_assert!((s.mean_fidelity - mean).abs() < 1e-12);
        prop_assert!((s.std_fidelity - std).abs() < 1e-12);
        prop_assert!(s.std_fidelity >= 0.0 && (0.0..=1.0).contains(&s.mean_fidelity));
        prop_assert_eq!(s.count, values.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_conserves_norm_and_magnetization(
        bonds in prop::collection::vec(0.5f64..1.5, 39),
        omega0 in 0.2f64..1.0,
        t_f in 5.0f64..40.0,
    ) {
        let chain = ChainSpec::with_bonds(40, 1.0, bonds).unwrap();
        let trap = TrapConfig::new(omega0, 15.0, 10.0);
        let p = ControlProtocol::sta_polynomial(&trap, t_f).unwrap();
        let psi0 = gaussian_packet(15.0, &trap, &chain).unwrap();
        let traj = evolve(&psi0, &chain, &trap, &p, &PropagationPlan::new(t_f).with_stride(25)).unwrap();
        for s in &traj.states {
            prop_assert!((s.norm() - 1.0).abs() < 1e-10);
            let sum: f64 = local_magnetization(s).iter().sum();
            prop_assert!((sum - (2.0 - 40.0)).abs() < 1e-9);
        }
    }
}
