use nalgebra::Vector4;
use nvodmr::engine::{simulate_spectrum, ApparatusConfig, SweepGrid};
use nvodmr::ensemble::{nv_axes, NvFrameSet, N_BRANCHES};
use nvodmr::microwave::linewidth;
use nvodmr::noise::{NoiseConfig, RandomSource};
use nvodmr::optimize::dbm_to_watts;
use nvodmr::physics::{eigensystem, gamma_nv, ground_hamiltonian, zfs_temperature, FieldVector, D_ES, D_GS0, G_NV};
use nvodmr::reconstruct::filters::{bilateral_filter_1d, gaussian_filter_1d};
use nvodmr::reconstruct::{
    first_order_centers, lorentzian_eval, lorentzian_fit, reconstruct_field_with, reconstruct_spectrum, refine_exact,
    AxisMatrix, DetectOptions, PairAssignment,
};
use nvodmr::seven_level::{alpha_matrix_with, mixed_rates, pl_rate, steady_state, ZeroFieldRates};
use proptest::prelude::*;

fn field(max: f64) -> impl Strategy<Value = FieldVector> {
    (-max..max, -max..max, -max..max).prop_map(|(x, y, z)| FieldVector::new(x, y, z))
}

proptest! {
    #[test]
    fn hamiltonian_is_hermitian_with_fixed_trace(b in field(10e-3), d in 2.7e9..3.0e9f64) {
        let h = ground_hamiltonian(&b, d, G_NV);
        prop_assert!((h - h.adjoint()).iter().all(|z| z.norm() == 0.0));
        let tr = h.trace();
        let hd = 6.626_070_15e-34 * d;
        prop_assert!((tr.re - 2.0 * hd).abs() < 1e-9 * hd);
        prop_assert!(tr.im.abs() < 1e-40);
    }

    #[test]
    fn eigen_energies_are_ordered_and_nonnegative(b in field(5e-3)) {
        let e = eigensystem(&ground_hamiltonian(&b, D_GS0, G_NV));
        prop_assert_eq!(e.energies.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        prop_assert!(e.energies.iter().all(|v| v.is_finite() && *v >= 0.0));
        for v in &e.vectors {
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn axial_splitting_is_linear(bz in -20e-3..20e-3f64) {
        let e = eigensystem(&ground_hamiltonian(&FieldVector::new(0.0, 0.0, bz), D_GS0, G_NV));
        let split = e.nu13() - e.nu12();
        prop_assert!((split - 2.0 * gamma_nv(G_NV) * bz).abs() < 1e-3 + 1e-9 * split.abs());
    }

    #[test]
    fn zfs_decreases_with_temperature(t in 1.0..600.0f64, dt in 0.1..50.0f64) {
        prop_assert!(zfs_temperature(t + dt) <= zfs_temperature(t));
        prop_assert!(zfs_temperature(t) <= D_GS0);
        // below ~30 K the phonon shift is under one ulp of D
        if t >= 30.0 {
            prop_assert!(zfs_temperature(t + dt) < zfs_temperature(t));
        }
    }

    #[test]
    fn steady_state_is_a_distribution(
        b_par in -5e-3..5e-3f64,
        b_perp in 0.0..5e-3f64,
        beta in 1e-3..5.0f64,
        t12 in 0.0..1e7f64,
        t13 in 0.0..1e7f64,
    ) {
        let alpha = alpha_matrix_with(b_par, b_perp, G_NV, D_GS0, D_ES).unwrap();
        let k = mixed_rates(&alpha, &ZeroFieldRates::default(), beta);
        let n = steady_state(&k, t12, t13).unwrap();
        prop_assert!((n.sum() - 1.0).abs() < 1e-12);
        prop_assert!(n.0.iter().all(|v| *v >= 0.0));
        prop_assert!(pl_rate(&n, &k, 1.0) > 0.0);
    }

    #[test]
    fn mw_drive_never_brightens(beta in 1e-2..2.0f64, t in 1e3..1e7f64) {
        let alpha = alpha_matrix_with(0.0, 0.0, G_NV, D_GS0, D_ES).unwrap();
        let k = mixed_rates(&alpha, &ZeroFieldRates::default(), beta);
        let dark = pl_rate(&steady_state(&k, t, 0.0).unwrap(), &k, 1.0);
        let bright = pl_rate(&steady_state(&k, 0.0, 0.0).unwrap(), &k, 1.0);
        prop_assert!(dark <= bright);
    }

    #[test]
    fn frames_preserve_norm(b in field(1e-3), branch in 0..N_BRANCHES) {
        let f = NvFrameSet::default().branch_field(&b, branch);
        prop_assert!((f.norm() - b.norm()).abs() < 1e-15);
    }

    #[test]
    fn linewidth_grows_with_both_powers(s in 0.0..10.0f64, ds in 1e-3..5.0f64, om in 0.0..1e7f64, dom in 1e3..1e6f64) {
        let (gc, gp) = (nvodmr::microwave::GAMMA_C_INF, nvodmr::microwave::GAMMA_P_INF);
        let base = linewidth(s, om, gc, gp);
        prop_assert!(linewidth(s + ds, om, gc, gp) > base);
        prop_assert!(linewidth(s, om + dom, gc, gp) > base);
    }

    #[test]
    fn dbm_is_monotone(a in 5.0..50.0f64, d in 0.01..10.0f64) {
        prop_assert!(dbm_to_watts(a + d) > dbm_to_watts(a));
        prop_assert!(((10.0 * (dbm_to_watts(a) * 1e3).log10()) - a).abs() < 1e-9);
    }

    #[test]
    fn lorentzian_fit_recovers_parameters(a in 1e-3..0.3f64, x0 in -2.0..2.0f64, g in 0.5..3.0f64) {
        let x: Vec<f64> = (0..201).map(|i| -10.0 + 0.1 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| lorentzian_eval(*v, a, x0, g)).collect();
        let fit = lorentzian_fit(&x, &y, (a * 0.8, x0 + 0.3, g * 1.3)).unwrap();
        prop_assert!(fit.converged);
        prop_assert!((fit.center - x0).abs() < 1e-7);
        prop_assert!((fit.gamma / g - 1.0).abs() < 1e-7);
        prop_assert!((fit.amplitude / a - 1.0).abs() < 1e-7);
    }

    #[test]
    fn filters_keep_length_and_constants(c in -1.0..1.0f64, n in 1usize..200, sigma in 0.0..6.0f64) {
        let y = vec![c; n];
        let g = gaussian_filter_1d(&y, sigma);
        prop_assert_eq!(g.len(), n);
        prop_assert!(g.iter().all(|v| (v - c).abs() < 1e-12));
        if sigma > 0.0 {
            let b = bilateral_filter_1d(&y, sigma, 0.5, 10).unwrap();
            prop_assert_eq!(b.len(), n);
            prop_assert!(b.iter().all(|v| (v - c).abs() < 1e-12));
        }
    }

    #[test]
    fn gaussian_filter_is_linear(
        a in proptest::collection::vec(-1.0..1.0f64, 50),
        b in proptest::collection::vec(-1.0..1.0f64, 50),
        k in -3.0..3.0f64,
        sigma in 0.3..5.0f64,
    ) {
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| k * x + y).collect();
        let (fa, fb, fm) = (gaussian_filter_1d(&a, sigma), gaussian_filter_1d(&b, sigma), gaussian_filter_1d(&mix, sigma));
        for i in 0..50 {
            prop_assert!((fm[i] - (k * fa[i] + fb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_is_exact_in_range(b in field(1e-3)) {
        let n = AxisMatrix::printed();
        let rhs: Vector4<f64> = n.n * b;
        let (sol, resid) = n.solve(&rhs).unwrap();
        prop_assert!((sol - b).amax() < 1e-15);
        prop_assert!(resid.amax() < 1e-12 * b.amax().max(1e-300) + 1e-30);
    }

    #[test]
    fn first_order_inverse_is_exact(b in field(50e-6)) {
        let bias = FieldVector::new(0.8e-3, 0.3e-3, 0.6e-3);
        let gamma = gamma_nv(G_NV);
        let centers = first_order_centers(&(bias + b), D_GS0, gamma);
        let r = reconstruct_field_with(&centers, &PairAssignment::from_bias(&bias).unwrap(), &bias, gamma).unwrap();
        prop_assert!((r.b_actual - b).amax() < 1e-12);
    }

    #[test]
    fn sign_capture_survives_flipped_projection(b in field(50e-6), axis in 0usize..4) {
        // flip the field's projection on one axis; the bias still dominates
        let bias = FieldVector::new(0.8e-3, 0.3e-3, 0.6e-3);
        let n = nv_axes()[axis];
        let flipped = b - n * (2.0 * n.dot(&b));
        let gamma = gamma_nv(G_NV);
        let centers = first_order_centers(&(bias + flipped), D_GS0, gamma);
        let r = reconstruct_field_with(&centers, &PairAssignment::from_bias(&bias).unwrap(), &bias, gamma).unwrap();
        prop_assert!((r.b_actual - flipped).amax() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn contrast_is_bounded(b in field(2e-3), p_laser in 1e-3..0.5f64, seed in 0u64..1000) {
        let sweep = SweepGrid::new(2.80e9, 2.94e9, 141).unwrap();
        let app = ApparatusConfig { p_laser, ..Default::default() };
        for noise in [NoiseConfig::disabled(), NoiseConfig::default()] {
            let s = simulate_spectrum(&b, &app, &noise, &sweep, RandomSource::new(seed)).unwrap();
            prop_assert!(s.contrast.iter().all(|c| c.is_finite() && *c < 1.0));
        }
        let clean = simulate_spectrum(&b, &app, &NoiseConfig::disabled(), &sweep, RandomSource::new(seed)).unwrap();
        prop_assert!(clean.contrast.iter().all(|c| *c >= -1e-12));
    }

    #[test]
    fn noiseless_round_trip(b in field(50e-6).prop_filter("|B| <= 50 uT", |b| b.norm() <= 50e-6)) {
        let bias = FieldVector::new(0.8e-3, 0.3e-3, 0.6e-3);
        let app = ApparatusConfig { p_laser: 0.005, p_mw: 0.005, ..Default::default() };
        let sweep = SweepGrid::new(2.83e9, 2.91e9, 4001).unwrap();
        let s = simulate_spectrum(&(bias + b), &app, &NoiseConfig::disabled(), &sweep, RandomSource::new(0)).unwrap();
        let assignment = PairAssignment::from_bias(&bias).unwrap();
        let linear = reconstruct_spectrum(&s, &assignment, &bias, G_NV, &DetectOptions::default()).unwrap();
        prop_assert!((linear.b_actual - b).amax() < 0.5e-6);
        let exact = refine_exact(&linear, &bias, G_NV).unwrap();
        prop_assert!((exact.b_actual - b).amax() < 0.05e-6, "error {:?}", (exact.b_actual - b) * 1e6);
    }

    #[test]
    fn same_seed_same_bytes(seed in 0u64..u64::MAX) {
        let sweep = SweepGrid::new(2.85e9, 2.89e9, 41).unwrap();
        let app = ApparatusConfig::default();
        let b = FieldVector::new(1e-4, 2e-4, 3e-4);
        let a = simulate_spectrum(&b, &app, &NoiseConfig::default(), &sweep, RandomSource::new(seed)).unwrap();
        let c = simulate_spectrum(&b, &app, &NoiseConfig::default(), &sweep, RandomSource::new(seed)).unwrap();
        prop_assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&c).unwrap());
    }
}
