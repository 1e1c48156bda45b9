//! Rank-truncated dynamic mode decomposition of snapshot pairs.
//!
//! Fits the best-fit linear operator advancing one snapshot column to the
//! next through a truncated SVD, eigendecomposes the reduced operator, and
//! reconstructs full-order modes. The fitted model exposes reconstruction /
//! prediction, a continuous-time spectrum, dominant-mode selection, and the
//! eigenvalue-geometry metrics used for damage characterization.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complexify, eig_real, C64};
use crate::snapshots::SnapshotMatrix;

/// Relative singular-value floor below which directions are dropped so the
/// inverted spectrum cannot amplify noise.
pub const RANK_FLOOR: f64 = 1e-12;

/// Imaginary-part tolerance when collapsing conjugate pairs to one
/// representative.
const CONJUGATE_TOL: f64 = 1e-12;

/// Train / prediction / full-window reconstruction errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionErrors {
    pub train: f64,
    pub predict: f64,
    pub full: f64,
}

/// Per-eigenvalue temporal characterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    /// Discrete-time eigenvalue.
    pub eigenvalue: C64,
    /// Oscillation frequency arg(lambda) / (2 pi dt) (Hz).
    pub frequency_hz: f64,
    /// Exponential rate ln|lambda| / dt (1/s); -inf for a zero eigenvalue.
    pub growth_rate: f64,
    /// Mode amplitude |b_k|.
    pub amplitude: f64,
}

/// A fitted DMD model: modes, eigenvalues, and (once computed) amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct DmdModel {
    rank: usize,
    requested_rank: usize,
    modes: DMatrix<C64>,
    eigenvalues: Vec<C64>,
    amplitudes: Option<DVector<C64>>,
    dt: f64,
    singular_values: Vec<f64>,
    singular_spectrum: Vec<f64>,
    amplitude_min_norm: bool,
    reconstruction: Option<ReconstructionErrors>,
}

impl DmdModel {
    /// Fit from explicit snapshot pair matrices (X columns advance to X'
    /// columns after one step of `dt`).
    pub fn fit(x: &DMatrix<f64>, xp: &DMatrix<f64>, rank: usize, dt: f64) -> Result<Self> {
        if x.nrows() != xp.nrows() || x.ncols() != xp.ncols() {
            return Err(Error::validation(format!(
                "snapshot pair shapes disagree: {}x{} vs {}x{}",
                x.nrows(),
                x.ncols(),
                xp.nrows(),
                xp.ncols()
            )));
        }
        if rank < 1 {
            return Err(Error::validation("rank must be at least 1"));
        }
        let max_rank = x.nrows().min(x.ncols());
        if rank > max_rank {
            return Err(Error::validation(format!(
                "rank {rank} exceeds min(channels, pair count) = {max_rank}"
            )));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::validation(format!("dt must be positive, got {dt}")));
        }

        let svd = x.clone().svd(true, true);
        let u = svd.u.as_ref().expect("u requested");
        let v_t = svd.v_t.as_ref().expect("v_t requested");

        // descending order of singular values, defensive against backend order
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap()
        });
        let spectrum: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

        let s1 = spectrum[0];
        if s1 <= 0.0 {
            return Err(Error::numerical("all-zero snapshot data cannot be fitted"));
        }
        let r_eff = spectrum
            .iter()
            .take(rank)
            .filter(|&&s| s / s1 >= RANK_FLOOR)
            .count();
        debug_assert!(r_eff >= 1);

        // Xp V_r Sigma_r^{-1}, columns scaled as they are gathered
        let n = x.nrows();
        let mut projected = DMatrix::<f64>::zeros(n, r_eff);
        let mut u_r = DMatrix::<f64>::zeros(n, r_eff);
        for (col, &src) in order.iter().take(r_eff).enumerate() {
            let sigma = svd.singular_values[src];
            // v column = row `src` of V^T
            let mut xv = DVector::<f64>::zeros(n);
            for j in 0..x.ncols() {
                let vj = v_t[(src, j)];
                if vj != 0.0 {
                    for i in 0..n {
                        xv[i] += xp[(i, j)] * vj;
                    }
                }
            }
            for i in 0..n {
                projected[(i, col)] = xv[i] / sigma;
                u_r[(i, col)] = u[(i, src)];
            }
        }

        let reduced = u_r.transpose() * &projected;
        let (eigenvalues, w) = eig_real(&reduced)?;
        let modes = complexify(&projected) * &w;

        Ok(DmdModel {
            rank: r_eff,
            requested_rank: rank,
            modes,
            eigenvalues,
            amplitudes: None,
            dt,
            singular_values: spectrum[..r_eff].to_vec(),
            singular_spectrum: spectrum,
            amplitude_min_norm: false,
            reconstruction: None,
        })
    }

    /// Fit from a snapshot matrix, pairing columns 1..m-1 with 2..m, then
    /// solve amplitudes against the first column.
    pub fn fit_series(snap: &SnapshotMatrix, rank: usize) -> Result<Self> {
        let m = snap.samples();
        let x = snap.data().columns(0, m - 1).into_owned();
        let xp = snap.data().columns(1, m - 1).into_owned();
        let mut model = Self::fit(&x, &xp, rank, snap.dt())?;
        model.compute_amplitudes(&snap.data().column(0).into_owned())?;
        Ok(model)
    }

    /// Least-squares amplitudes b with Phi b = x1; falls back to the
    /// minimum-norm solution (and flags it) when Phi is rank deficient.
    pub fn compute_amplitudes(&mut self, x1: &DVector<f64>) -> Result<()> {
        if x1.len() != self.modes.nrows() {
            return Err(Error::validation(format!(
                "first snapshot length {} does not match mode length {}",
                x1.len(),
                self.modes.nrows()
            )));
        }
        let rhs = x1.map(|v| C64::new(v, 0.0));
        let svd = self.modes.clone().svd(true, true);
        let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
        if smax <= 0.0 {
            return Err(Error::numerical(
                "mode matrix is zero; cannot fit amplitudes",
            ));
        }
        let eps = RANK_FLOOR * smax;
        let deficient = svd.singular_values.iter().any(|&s| s < eps);
        let b = svd
            .solve(&rhs, eps)
            .map_err(|e| Error::numerical(format!("amplitude solve failed: {e}")))?;
        self.amplitudes = Some(DVector::from_iterator(self.rank, b.iter().cloned()));
        self.amplitude_min_norm = deficient;
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn requested_rank(&self) -> usize {
        self.requested_rank
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn modes(&self) -> &DMatrix<C64> {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Retained singular values sigma_1..sigma_r of the train matrix.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Full singular-value spectrum of the train matrix (diagnostic).
    pub fn singular_spectrum(&self) -> &[f64] {
        &self.singular_spectrum
    }

    pub fn amplitude_min_norm(&self) -> bool {
        self.amplitude_min_norm
    }

    pub fn amplitudes(&self) -> Result<&DVector<C64>> {
        self.amplitudes
            .as_ref()
            .ok_or_else(|| Error::validation("model has no amplitudes; fit them first"))
    }

    pub fn reconstruction(&self) -> Option<&ReconstructionErrors> {
        self.reconstruction.as_ref()
    }

    pub fn set_reconstruction(&mut self, errors: ReconstructionErrors) {
        self.reconstruction = Some(errors);
    }

    /// Real reconstruction x_k = Re(Phi Lambda^{k-1} b) for k = 1..=count.
    pub fn evolve(&self, count: usize) -> Result<DMatrix<f64>> {
        let b = self.amplitudes()?;
        if count == 0 {
            return Err(Error::validation("evolve needs at least one step"));
        }
        let n = self.modes.nrows();
        let mut out = DMatrix::<f64>::zeros(n, count);
        let mut coeff: Vec<C64> = b.iter().cloned().collect();
        for k in 0..count {
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (j, c) in coeff.iter().enumerate() {
                    acc += self.modes[(i, j)] * c;
                }
                out[(i, k)] = acc.re;
            }
            for (j, c) in coeff.iter_mut().enumerate() {
                *c *= self.eigenvalues[j];
            }
        }
        Ok(out)
    }

    /// Reconstruct the full window, score train/predict/full RMSE against
    /// the data, and store the triple on the model.
    pub fn evaluate_reconstruction(
        &mut self,
        full: &SnapshotMatrix,
        train_cols: usize,
    ) -> Result<ReconstructionErrors> {
        let m = full.samples();
        if train_cols < 1 || train_cols >= m {
            return Err(Error::validation(format!(
                "train column count {train_cols} out of range for {m} samples"
            )));
        }
        let recon = self.evolve(m)?;
        let actual = full.data();
        let errors = ReconstructionErrors {
            train: rmse(
                &actual.columns(0, train_cols).into_owned(),
                &recon.columns(0, train_cols).into_owned(),
            )?,
            predict: rmse(
                &actual.columns(train_cols, m - train_cols).into_owned(),
                &recon.columns(train_cols, m - train_cols).into_owned(),
            )?,
            full: rmse(&actual.clone_owned(), &recon)?,
        };
        self.reconstruction = Some(errors);
        Ok(errors)
    }

    /// Frequency, growth rate, and amplitude per eigenvalue.
    pub fn continuous_spectrum(&self) -> Result<Vec<SpectrumPoint>> {
        let b = self.amplitudes()?;
        let two_pi = 2.0 * std::f64::consts::PI;
        Ok(self
            .eigenvalues
            .iter()
            .zip(b.iter())
            .map(|(&lambda, &bk)| {
                let mag = lambda.norm();
                SpectrumPoint {
                    eigenvalue: lambda,
                    frequency_hz: lambda.arg() / (two_pi * self.dt),
                    growth_rate: if mag > 0.0 {
                        mag.ln() / self.dt
                    } else {
                        f64::NEG_INFINITY
                    },
                    amplitude: bk.norm(),
                }
            })
            .collect())
    }

    /// Number of conjugate-pair representatives available for selection.
    pub fn representative_count(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|l| l.im >= -CONJUGATE_TOL)
            .count()
    }

    /// Indices of the `count` most dominant modes, one representative per
    /// conjugate pair (non-negative imaginary part), ranked by
    /// |b_k| * ||Phi_k|| with ties broken by larger |lambda|, then lower index.
    pub fn select_dominant(&self, count: usize) -> Result<Vec<usize>> {
        let b = self.amplitudes()?;
        let mut reps: Vec<usize> = (0..self.rank)
            .filter(|&i| self.eigenvalues[i].im >= -CONJUGATE_TOL)
            .collect();
        if count > reps.len() {
            return Err(Error::validation(format!(
                "requested {count} dominant modes but only {} conjugate-pair representatives exist",
                reps.len()
            )));
        }
        let weight = |i: usize| {
            let col_norm = self
                .modes
                .column(i)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            b[i].norm() * col_norm
        };
        reps.sort_by(|&a, &c| {
            weight(c)
                .partial_cmp(&weight(a))
                .unwrap()
                .then(
                    self.eigenvalues[c]
                        .norm()
                        .partial_cmp(&self.eigenvalues[a].norm())
                        .unwrap(),
                )
                .then(a.cmp(&c))
        });
        reps.truncate(count);
        Ok(reps)
    }
}

/// Root-mean-square error between equal-shaped matrices.
pub fn rmse(actual: &DMatrix<f64>, predicted: &DMatrix<f64>) -> Result<f64> {
    if actual.nrows() != predicted.nrows() || actual.ncols() != predicted.ncols() {
        return Err(Error::validation(format!(
            "rmse shape mismatch: {}x{} vs {}x{}",
            actual.nrows(),
            actual.ncols(),
            predicted.nrows(),
            predicted.ncols()
        )));
    }
    let n = actual.len() as f64;
    let sum_sq: f64 = actual
        .iter()
        .zip(predicted.iter())
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok((sum_sq / n).sqrt())
}

/// Mean distance of eigenvalues from the origin of the complex plane.
pub fn avg_distance_origin(eigenvalues: &[C64]) -> Result<f64> {
    if eigenvalues.is_empty() {
        return Err(Error::validation("empty eigenvalue list"));
    }
    Ok(eigenvalues.iter().map(|l| l.norm()).sum::<f64>() / eigenvalues.len() as f64)
}

/// Area of the polygon formed by the points ordered by angle about their
/// centroid (shoelace formula). Collinear points give zero.
pub fn enclosed_area(points: &[C64]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::validation(format!(
            "enclosed area needs at least 3 points, got {}",
            points.len()
        )));
    }
    let cx = points.iter().map(|p| p.re).sum::<f64>() / points.len() as f64;
    let cy = points.iter().map(|p| p.im).sum::<f64>() / points.len() as f64;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let ta = (points[a].im - cy).atan2(points[a].re - cx);
        let tb = (points[b].im - cy).atan2(points[b].re - cx);
        ta.partial_cmp(&tb).unwrap().then(a.cmp(&b))
    });
    let mut twice_area = 0.0;
    for i in 0..order.len() {
        let p = points[order[i]];
        let q = points[order[(i + 1) % order.len()]];
        twice_area += p.re * q.im - q.re * p.im;
    }
    Ok(0.5 * twice_area.abs())
}

/// Serializable form of a fitted model, as written to `model.json`.
///
/// Complex scalars are `[re, im]` pairs; `modes` is row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRecord {
    pub rank: usize,
    pub requested_rank: usize,
    pub dt: f64,
    /// Hankel embedding used upstream of the fit (1 = none).
    pub embedding_dimension: usize,
    /// Channel count of the un-embedded snapshot matrix.
    pub source_channels: usize,
    pub eigenvalues: Vec<[f64; 2]>,
    pub amplitudes: Vec<[f64; 2]>,
    pub modes: Vec<Vec<[f64; 2]>>,
    pub singular_values: Vec<f64>,
    pub singular_spectrum: Vec<f64>,
    pub amplitude_min_norm: bool,
    pub rmse: Option<ReconstructionErrors>,
}

impl ModelRecord {
    /// Capture a fitted model (amplitudes required).
    pub fn from_model(
        model: &DmdModel,
        embedding_dimension: usize,
        source_channels: usize,
    ) -> Result<Self> {
        let b = model.amplitudes()?;
        let n = model.modes.nrows();
        let mut modes = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(model.rank);
            for j in 0..model.rank {
                let z = model.modes[(i, j)];
                row.push([z.re, z.im]);
            }
            modes.push(row);
        }
        Ok(ModelRecord {
            rank: model.rank,
            requested_rank: model.requested_rank,
            dt: model.dt,
            embedding_dimension,
            source_channels,
            eigenvalues: model.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            amplitudes: b.iter().map(|z| [z.re, z.im]).collect(),
            modes,
            singular_values: model.singular_values.clone(),
            singular_spectrum: model.singular_spectrum.clone(),
            amplitude_min_norm: model.amplitude_min_norm,
            rmse: model.reconstruction,
        })
    }

    /// Rebuild the in-memory model.
    pub fn to_model(&self) -> Result<DmdModel> {
        if self.eigenvalues.len() != self.rank || self.amplitudes.len() != self.rank {
            return Err(Error::validation(
                "model record eigenvalue/amplitude lengths disagree with rank",
            ));
        }
        let n = self.modes.len();
        if n == 0 {
            return Err(Error::validation("model record has no mode rows"));
        }
        let mut modes = DMatrix::<C64>::zeros(n, self.rank);
        for (i, row) in self.modes.iter().enumerate() {
            if row.len() != self.rank {
                return Err(Error::validation(format!(
                    "model record mode row {i} has {} entries, expected {}",
                    row.len(),
                    self.rank
                )));
            }
            for (j, z) in row.iter().enumerate() {
                modes[(i, j)] = C64::new(z[0], z[1]);
            }
        }
        Ok(DmdModel {
            rank: self.rank,
            requested_rank: self.requested_rank,
            modes,
            eigenvalues: self
                .eigenvalues
                .iter()
                .map(|z| C64::new(z[0], z[1]))
                .collect(),
            amplitudes: Some(DVector::from_iterator(
                self.rank,
                self.amplitudes.iter().map(|z| C64::new(z[0], z[1])),
            )),
            dt: self.dt,
            singular_values: self.singular_values.clone(),
            singular_spectrum: self.singular_spectrum.clone(),
            amplitude_min_norm: self.amplitude_min_norm,
            reconstruction: self.rmse,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

/// Write spectrum points as CSV with a header row.
pub fn write_spectrum_csv(points: &[SpectrumPoint], path: &Path) -> Result<()> {
    let mut out =
        String::from("index,eigenvalue_re,eigenvalue_im,frequency_hz,growth_rate,amplitude\n");
    for (i, p) in points.iter().enumerate() {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            i, p.eigenvalue.re, p.eigenvalue.im, p.frequency_hz, p.growth_rate, p.amplitude
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshots::SnapshotSource;

    /// Data advanced by a diagonal operator in an embedded subspace.
    fn constructed_fixture() -> (DMatrix<f64>, Vec<C64>) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let ang = std::f64::consts::PI / 8.0;
        let lambda = vec![
            C64::new(0.9, 0.0),
            C64::new(0.8 * ang.cos(), 0.8 * ang.sin()),
            C64::new(0.8 * ang.cos(), -0.8 * ang.sin()),
        ];
        // real 3x3 block form of the diagonal operator
        let a3 = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.9,
                0.0,
                0.0,
                0.0,
                0.8 * ang.cos(),
                -0.8 * ang.sin(),
                0.0,
                0.8 * ang.sin(),
                0.8 * ang.cos(),
            ],
        );
        let embed = DMatrix::from_fn(10, 3, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let mut z = DVector::from_vec(vec![1.0, 0.7, 0.3]);
        let mut data = DMatrix::<f64>::zeros(10, 50);
        for k in 0..50 {
            let xk = &embed * &z;
            data.set_column(k, &xk);
            z = &a3 * z;
        }
        (data, lambda)
    }

    fn set_distance(a: &[C64], b: &[C64]) -> f64 {
        let mut worst = 0.0_f64;
        for x in a {
            let d = b
                .iter()
                .map(|y| (x - y).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        for y in b {
            let d = a
                .iter()
                .map(|x| (x - y).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn recovers_constructed_operator_spectrum() {
        let (data, expected) = constructed_fixture();
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 3).unwrap();
        assert_eq!(model.rank(), 3);
        assert!(set_distance(model.eigenvalues(), &expected) < 1e-8);
    }

    #[test]
    fn constant_data_gives_unit_eigenvalue() {
        let data = DMatrix::from_element(4, 10, 2.5);
        let snap = SnapshotMatrix::new(data, 0.1, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 1).unwrap();
        assert_eq!(model.rank(), 1);
        assert!((model.eigenvalues()[0] - C64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn evolve_reproduces_exact_linear_data() {
        let (data, _) = constructed_fixture();
        let snap = SnapshotMatrix::new(data.clone(), 1.0, None, SnapshotSource::Csv).unwrap();
        let (train, _test) = snap.split_train_test(0.6).unwrap();
        let model = DmdModel::fit_series(&train, 3).unwrap();
        let recon = model.evolve(50).unwrap();
        let mut worst = 0.0_f64;
        for j in 0..50 {
            for i in 0..10 {
                worst = worst.max((recon[(i, j)] - data[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-8, "max abs error {worst}");
    }

    #[test]
    fn first_evolve_column_matches_first_snapshot() {
        let (data, _) = constructed_fixture();
        let snap = SnapshotMatrix::new(data.clone(), 1.0, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 3).unwrap();
        let recon = model.evolve(1).unwrap();
        for i in 0..10 {
            assert!((recon[(i, 0)] - data[(i, 0)]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_first_snapshot_gives_zero_amplitudes() {
        let (data, _) = constructed_fixture();
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        let mut model = DmdModel::fit_series(&snap, 3).unwrap();
        model.compute_amplitudes(&DVector::zeros(10)).unwrap();
        assert!(model.amplitudes().unwrap().iter().all(|b| b.norm() < 1e-14));
    }

    #[test]
    fn rank_exceeding_pair_count_is_rejected() {
        let data = DMatrix::from_fn(3, 4, |i, j| (i + j) as f64);
        let xp = data.columns(1, 3).into_owned();
        let x = data.columns(0, 3).into_owned();
        assert!(DmdModel::fit(&x, &xp, 4, 1.0).is_err());
    }

    #[test]
    fn spectrum_of_unit_eigenvalue_is_dc() {
        let data = DMatrix::from_element(3, 8, 1.0);
        let snap = SnapshotMatrix::new(data, 0.25, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 1).unwrap();
        let spec = model.continuous_spectrum().unwrap();
        assert!((spec[0].frequency_hz).abs() < 1e-12);
        assert!((spec[0].growth_rate).abs() < 1e-9);
    }

    #[test]
    fn spectrum_log_map_eighth_turn() {
        // lambda = e^{i pi/4}, dt = 1 -> frequency 1/8 Hz, growth 0
        let ang = std::f64::consts::FRAC_PI_4;
        let n = 128usize;
        let mut data = DMatrix::<f64>::zeros(2, n);
        for j in 0..n {
            data[(0, j)] = (ang * j as f64).cos();
            data[(1, j)] = (ang * j as f64).sin();
        }
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 2).unwrap();
        let spec = model.continuous_spectrum().unwrap();
        let positive = spec.iter().find(|p| p.frequency_hz > 0.0).unwrap();
        assert!((positive.frequency_hz - 0.125).abs() < 1e-10);
        assert!(positive.growth_rate.abs() < 1e-10);
    }

    #[test]
    fn dominance_ranks_by_amplitude_weight() {
        // two decoupled oscillators with 10x amplitude separation
        let w1 = 0.3_f64;
        let w2 = 1.1_f64;
        let n = 200usize;
        let mut data = DMatrix::<f64>::zeros(4, n);
        for j in 0..n {
            let t = j as f64;
            data[(0, j)] = 10.0 * (w1 * t).cos();
            data[(1, j)] = 10.0 * (w1 * t).sin();
            data[(2, j)] = (w2 * t).cos();
            data[(3, j)] = (w2 * t).sin();
        }
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 4).unwrap();
        let order = model.select_dominant(2).unwrap();
        let f0 = (model.eigenvalues()[order[0]].arg()).abs();
        let f1 = (model.eigenvalues()[order[1]].arg()).abs();
        assert!((f0 - w1).abs() < 1e-6, "strongest mode should be w1");
        assert!((f1 - w2).abs() < 1e-6);
    }

    #[test]
    fn single_mode_channel_amplitude_is_recovered() {
        // channel amplitude a splits evenly across the conjugate pair:
        // x_i(k) = 2 Re(Phi_i1 lambda^k b_1), so 2 |Phi_i1 b_1| = a
        let a = 0.73_f64;
        let w = 0.4_f64;
        let n = 160usize;
        let mut data = DMatrix::<f64>::zeros(2, n);
        for j in 0..n {
            data[(0, j)] = a * (w * j as f64).cos();
            data[(1, j)] = a * (w * j as f64).sin();
        }
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 2).unwrap();
        let b = model.amplitudes().unwrap();
        for i in 0..2 {
            let amplitude = 2.0 * (model.modes()[(i, 0)] * b[0]).norm();
            assert!(
                (amplitude - a).abs() / a < 1e-6,
                "channel {i}: {amplitude} vs {a}"
            );
        }
    }

    #[test]
    fn effective_rank_clamps_below_the_request() {
        let (data, _) = constructed_fixture();
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 5).unwrap();
        assert_eq!(model.requested_rank(), 5);
        assert_eq!(model.rank(), 3, "rank floor should drop noise directions");
    }

    #[test]
    fn zero_eigenvalue_growth_is_negative_infinity() {
        let record = ModelRecord {
            rank: 1,
            requested_rank: 1,
            dt: 0.5,
            embedding_dimension: 1,
            source_channels: 2,
            eigenvalues: vec![[0.0, 0.0]],
            amplitudes: vec![[1.0, 0.0]],
            modes: vec![vec![[1.0, 0.0]], vec![[0.5, 0.0]]],
            singular_values: vec![1.0],
            singular_spectrum: vec![1.0],
            amplitude_min_norm: false,
            rmse: None,
        };
        let model = record.to_model().unwrap();
        let spec = model.continuous_spectrum().unwrap();
        assert_eq!(spec[0].growth_rate, f64::NEG_INFINITY);
    }

    #[test]
    fn dominant_count_beyond_representatives_is_rejected() {
        let (data, _) = constructed_fixture();
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        let model = DmdModel::fit_series(&snap, 3).unwrap();
        // one real eigenvalue plus one conjugate pair = 2 representatives
        assert_eq!(model.representative_count(), 2);
        assert!(model.select_dominant(2).is_ok());
        assert!(model.select_dominant(3).is_err());
    }

    #[test]
    fn rmse_hand_values() {
        let zero = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let other = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert_eq!(rmse(&zero, &zero).unwrap(), 0.0);
        assert!((rmse(&zero, &other).unwrap() - (25.0_f64 / 2.0).sqrt()).abs() < 1e-12);
        let a = DMatrix::from_element(3, 3, 1.0);
        let b = DMatrix::from_element(3, 3, 1.5);
        assert!((rmse(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert!(rmse(&zero, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn avg_distance_hand_values() {
        let unit: Vec<C64> = (0..5).map(|k| C64::from_polar(1.0, k as f64)).collect();
        assert!((avg_distance_origin(&unit).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(avg_distance_origin(&[C64::new(0.5, 0.0)]).unwrap(), 0.5);
        assert!(avg_distance_origin(&[]).is_err());
    }

    #[test]
    fn enclosed_area_unit_square_and_degenerate() {
        let square = [
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 1.0),
            C64::new(0.0, 1.0),
        ];
        assert!((enclosed_area(&square).unwrap() - 1.0).abs() < 1e-14);
        let collinear = [C64::new(0.0, 0.0), C64::new(1.0, 1.0), C64::new(2.0, 2.0)];
        assert!(enclosed_area(&collinear).unwrap().abs() < 1e-14);
        assert!(enclosed_area(&square[..2]).is_err());
    }

    #[test]
    fn model_record_round_trip() {
        let (data, _) = constructed_fixture();
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        let mut model = DmdModel::fit_series(&snap, 3).unwrap();
        model.set_reconstruction(ReconstructionErrors {
            train: 1e-9,
            predict: 2e-9,
            full: 1.5e-9,
        });
        let record = ModelRecord::from_model(&model, 1, 10).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        record.save(&path).unwrap();
        let loaded = ModelRecord::load(&path).unwrap();
        let restored = loaded.to_model().unwrap();
        assert_eq!(model, restored);
    }
}
