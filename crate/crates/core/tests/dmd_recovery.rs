//! DMD identification checked against the analytic beam oracle and against
//! constructed linear operators.

use modal_sentinel::beam::{BeamSpec, InitialCondition, ModalBasis, TimeGrid};
use modal_sentinel::dmd::{avg_distance_origin, DmdModel};
use modal_sentinel::linalg::C64;
use modal_sentinel::snapshots::{delay_embed, SnapshotMatrix};

/// Healthy default-beam snapshot matrix: 41 channels, 2.7 s at 1 kHz.
fn healthy_snapshot(mode_count: usize, spec: &BeamSpec) -> SnapshotMatrix {
    let basis = ModalBasis::assemble(spec, mode_count).unwrap();
    let ic = InitialCondition::tip_static(spec, 0.05, 2001).unwrap();
    let grid: Vec<f64> = (0..41).map(|i| spec.length * i as f64 / 40.0).collect();
    basis
        .synthesize_response(spec, &ic, &grid, &TimeGrid::new(1e-3, 2700).unwrap())
        .unwrap()
}

/// A K-mode displacement field has spatial rank K, which cannot carry K
/// oscillators; one delay doubles the state and makes rank 2K reachable.
fn embedded_healthy(mode_count: usize, spec: &BeamSpec) -> SnapshotMatrix {
    delay_embed(&healthy_snapshot(mode_count, spec), 2).unwrap()
}

#[test]
fn beam_frequencies_and_growth_rates_are_recovered() {
    let spec = BeamSpec::default();
    let basis = ModalBasis::assemble(&spec, 6).unwrap();
    let snap = embedded_healthy(6, &spec);
    let (train, _) = snap.split_train_test(0.6).unwrap();
    let model = DmdModel::fit_series(&train, 12).unwrap();
    let spectrum = model.continuous_spectrum().unwrap();
    let dominant = model.select_dominant(4).unwrap();

    // dominant modes must land on the first four analytic modes, in order
    for (k, &idx) in dominant.iter().enumerate() {
        let mode = &basis.modes()[k];
        let analytic_hz = mode.damped_frequency() / (2.0 * std::f64::consts::PI);
        let analytic_growth = -mode.damping_ratio * mode.natural_frequency;
        let got_hz = spectrum[idx].frequency_hz.abs();
        let got_growth = spectrum[idx].growth_rate;
        assert!(
            (got_hz - analytic_hz).abs() / analytic_hz < 0.005,
            "mode {}: {got_hz} Hz vs {analytic_hz} Hz",
            k + 1
        );
        assert!(
            (got_growth - analytic_growth).abs() / analytic_growth.abs() < 0.02,
            "mode {}: growth {got_growth} vs {analytic_growth}",
            k + 1
        );
    }
}

#[test]
fn prediction_error_stays_below_one_percent_of_peak() {
    let spec = BeamSpec::default();
    let snap = embedded_healthy(6, &spec);
    let (train, test) = snap.split_train_test(0.6).unwrap();
    let mut model = DmdModel::fit_series(&train, 12).unwrap();
    let errors = model
        .evaluate_reconstruction(&snap, train.samples())
        .unwrap();
    let peak = snap.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(
        errors.predict < 0.01 * peak,
        "prediction rmse {} vs peak {peak}",
        errors.predict
    );
    assert!(errors.train < errors.predict.max(1e-12) * 10.0);
    assert_eq!(test.samples(), snap.samples() - train.samples());
}

#[test]
fn eigenvalues_close_under_conjugation_on_real_data() {
    let spec = BeamSpec::default();
    let snap = embedded_healthy(4, &spec);
    let (train, _) = snap.split_train_test(0.6).unwrap();
    let model = DmdModel::fit_series(&train, 8).unwrap();
    for &lambda in model.eigenvalues() {
        let conj = lambda.conj();
        let gap = model
            .eigenvalues()
            .iter()
            .map(|&mu| (mu - conj).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(gap < 1e-8, "conjugate of {lambda} missing (gap {gap})");
    }
}

#[test]
fn training_error_is_monotone_through_the_exact_rank() {
    let spec = BeamSpec::default();
    let snap = embedded_healthy(3, &spec);
    let (train, _) = snap.split_train_test(0.6).unwrap();
    let mut previous = f64::INFINITY;
    // exact rank of a 3-mode damped field is 6
    for rank in [2usize, 4, 6] {
        let mut model = DmdModel::fit_series(&train, rank).unwrap();
        let errors = model
            .evaluate_reconstruction(&train, train.samples() - 1)
            .unwrap();
        assert!(
            errors.train <= previous * (1.0 + 1e-9),
            "train rmse grew from {previous} to {} at rank {rank}",
            errors.train
        );
        previous = errors.train;
    }
    assert!(
        previous < 1e-10,
        "exact-rank fit should be tight, got {previous}"
    );
}

#[test]
fn spectrum_is_invariant_under_channel_permutation() {
    let spec = BeamSpec::default();
    let snap = embedded_healthy(3, &spec);
    let (train, _) = snap.split_train_test(0.6).unwrap();
    let model = DmdModel::fit_series(&train, 6).unwrap();

    let n = train.channels();
    let permuted_rows: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    // the map i -> (7i + 3) mod n is a bijection when gcd(7, n) = 1
    let mut seen = vec![false; n];
    for &r in &permuted_rows {
        assert!(!seen[r]);
        seen[r] = true;
    }
    let permuted = nalgebra::DMatrix::from_fn(n, train.samples(), |i, j| {
        train.data()[(permuted_rows[i], j)]
    });
    let x = permuted.columns(0, train.samples() - 1).into_owned();
    let xp = permuted.columns(1, train.samples() - 1).into_owned();
    let model_p = DmdModel::fit(&x, &xp, 6, train.dt()).unwrap();

    for &lambda in model.eigenvalues() {
        let gap = model_p
            .eigenvalues()
            .iter()
            .map(|&mu| (mu - lambda).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(gap < 1e-10, "eigenvalue {lambda} moved by {gap}");
    }
}

#[test]
fn dominant_selection_is_scale_invariant() {
    let spec = BeamSpec::default();
    let snap = embedded_healthy(4, &spec);
    let (train, _) = snap.split_train_test(0.6).unwrap();
    let model = DmdModel::fit_series(&train, 8).unwrap();

    let scaled_data = train.data() * 3.7e2;
    let scaled = SnapshotMatrix::new(scaled_data, train.dt(), None, train.source()).unwrap();
    let model_scaled = DmdModel::fit_series(&scaled, 8).unwrap();

    let a = model.select_dominant(4).unwrap();
    let b = model_scaled.select_dominant(4).unwrap();
    // compare by eigenvalue, not index: mode ordering may differ between fits
    for (&ia, &ib) in a.iter().zip(&b) {
        let la = model.eigenvalues()[ia];
        let lb = model_scaled.eigenvalues()[ib];
        assert!(
            (la - lb).norm() < 1e-9,
            "dominant order diverged: {la} vs {lb}"
        );
    }
}

#[test]
fn doubling_distributed_damping_shrinks_the_spectrum_radius() {
    let spec = BeamSpec::default();
    let doubled = BeamSpec {
        damping_coefficient: 2.0 * spec.damping_coefficient,
        ..spec.clone()
    };
    let fit = |s: &BeamSpec| {
        let snap = embedded_healthy(4, s);
        let (train, _) = snap.split_train_test(0.6).unwrap();
        DmdModel::fit_series(&train, 8).unwrap()
    };
    let base = fit(&spec);
    let heavy = fit(&doubled);
    let d_base = avg_distance_origin(base.eigenvalues()).unwrap();
    let d_heavy = avg_distance_origin(heavy.eigenvalues()).unwrap();
    assert!(
        d_heavy < d_base,
        "avg distance should shrink: {d_heavy} vs {d_base}"
    );
}

#[test]
fn unitary_mode_matrix_amplitudes_reduce_to_projection() {
    // orthonormal real modes: b must equal Phi^T x1
    let n = 6usize;
    let mut q = nalgebra::DMatrix::<f64>::identity(n, n);
    // apply a couple of Givens rotations to make it non-trivial
    for &(i, j, theta) in &[(0usize, 3usize, 0.7_f64), (1, 4, -1.2), (2, 5, 0.4)] {
        let mut rot = nalgebra::DMatrix::<f64>::identity(n, n);
        rot[(i, i)] = theta.cos();
        rot[(j, j)] = theta.cos();
        rot[(i, j)] = -theta.sin();
        rot[(j, i)] = theta.sin();
        q *= rot;
    }
    // evolve along those directions so the fit recovers them
    let mut data = nalgebra::DMatrix::<f64>::zeros(n, 40);
    let rates: [f64; 6] = [0.95, 0.9, 0.85, 0.8, 0.75, 0.7];
    for k in 0..40 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, &rate) in rates.iter().enumerate() {
                acc += q[(i, j)] * rate.powi(k as i32);
            }
            data[(i, k)] = acc;
        }
    }
    let snap = SnapshotMatrix::new(
        data.clone(),
        1.0,
        None,
        modal_sentinel::snapshots::SnapshotSource::Csv,
    )
    .unwrap();
    let model = DmdModel::fit_series(&snap, 6).unwrap();
    let b = model.amplitudes().unwrap();
    // modes are the q columns up to scale; check the residual of Phi b = x1
    let x1 = data.column(0);
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..model.rank() {
            acc += model.modes()[(i, j)] * b[j];
        }
        residual = residual.max((acc.re - x1[i]).abs().max(acc.im.abs()));
    }
    assert!(residual < 1e-10, "Phi b != x1, residual {residual}");
}
