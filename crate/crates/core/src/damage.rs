//! Baseline references and the Mahalanobis-type damage index Q.
//!
//! The healthy state contributes, per feature kind, a variance-weighted
//! outer-product reference matrix P. Scoring a (potentially damaged) state
//! measures the deviation of each matched mode's feature vector from its
//! healthy counterpart through the quadratic form d' (2P)^{-1} d, averaged
//! over modes into the global index Q.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dmd::{self, DmdModel, ReconstructionErrors};
use crate::error::{Error, Result};
use crate::features::{DominantProfiles, FeatureKind, FeatureSet, ModeMatch};
use crate::snapshots::{read_matrix_csv, write_matrix_csv};

/// Relative trace weight of the automatic regularization:
/// epsilon = 1e-8 * trace(P) / n'.
pub const AUTO_EPSILON_TRACE_FACTOR: f64 = 1e-8;

/// How many dominant eigenvalues span the enclosed-area polygon.
pub const ENCLOSED_AREA_COUNT: usize = 5;

/// Identity of the healthy model a baseline was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFingerprint {
    pub rank: usize,
    pub dt: f64,
    pub dominant_frequencies: Vec<f64>,
}

/// Per-kind reference: P, the healthy features, and their variances.
#[derive(Debug, Clone, PartialEq)]
pub struct KindBaseline {
    reference: DMatrix<f64>,
    features: DMatrix<f64>,
    mode_variances: Vec<f64>,
    epsilon: f64,
}

impl KindBaseline {
    /// Regularized reference matrix P.
    pub fn reference(&self) -> &DMatrix<f64> {
        &self.reference
    }

    /// Healthy feature matrix (interior points x modes).
    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn mode_variances(&self) -> &[f64] {
        &self.mode_variances
    }

    /// Regularization actually applied to this kind.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Healthy reference for all four feature kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReference {
    kinds: BTreeMap<FeatureKind, KindBaseline>,
    scaling: f64,
    interior_grid: Vec<f64>,
    spacing: f64,
    fingerprint: ModelFingerprint,
}

impl BaselineReference {
    pub fn kind(&self, kind: FeatureKind) -> &KindBaseline {
        &self.kinds[&kind]
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    pub fn interior_grid(&self) -> &[f64] {
        &self.interior_grid
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn fingerprint(&self) -> &ModelFingerprint {
        &self.fingerprint
    }

    /// Number of matched modes the baseline was built over.
    pub fn mode_count(&self) -> usize {
        self.fingerprint.dominant_frequencies.len()
    }
}

/// Population variance (divisor n) of a feature vector.
fn population_variance(values: &DVector<f64>) -> f64 {
    let n = values.len() as f64;
    let mean = values.sum() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Build the per-kind references P = (C/M) sum_k x_k x_k' / sigma_k^2 + eps I.
///
/// `epsilon = None` selects the trace-relative default per kind. The four
/// feature sets must cover each kind exactly once with consistent shapes.
pub fn build_baseline(
    feature_sets: &[FeatureSet],
    scaling: f64,
    epsilon: Option<f64>,
    interior_grid: Vec<f64>,
    spacing: f64,
    fingerprint: ModelFingerprint,
) -> Result<BaselineReference> {
    if !scaling.is_finite() || scaling <= 0.0 {
        return Err(Error::validation(format!(
            "scaling constant C must be positive, got {scaling}"
        )));
    }
    if let Some(e) = epsilon {
        if !e.is_finite() || e < 0.0 {
            return Err(Error::validation(format!(
                "regularization epsilon must be non-negative, got {e}"
            )));
        }
    }
    let mut by_kind: BTreeMap<FeatureKind, &FeatureSet> = BTreeMap::new();
    for fs in feature_sets {
        if by_kind.insert(fs.kind(), fs).is_some() {
            return Err(Error::validation(format!(
                "feature kind {} supplied more than once",
                fs.kind()
            )));
        }
    }
    for kind in FeatureKind::all() {
        if !by_kind.contains_key(&kind) {
            return Err(Error::validation(format!(
                "baseline requires all four feature kinds; {kind} is missing"
            )));
        }
    }
    let rows = by_kind[&FeatureKind::Ms].matrix().nrows();
    let modes = by_kind[&FeatureKind::Ms].matrix().ncols();
    if interior_grid.len() != rows {
        return Err(Error::validation(format!(
            "interior grid has {} points but features have {rows} rows",
            interior_grid.len()
        )));
    }
    if modes == 0 {
        return Err(Error::validation("baseline needs at least one mode"));
    }

    let mut kinds = BTreeMap::new();
    for kind in FeatureKind::all() {
        let fs = by_kind[&kind];
        let x = fs.matrix();
        if x.nrows() != rows || x.ncols() != modes {
            return Err(Error::validation(format!(
                "feature kind {kind} has shape {}x{}, expected {rows}x{modes}",
                x.nrows(),
                x.ncols()
            )));
        }
        let mut reference = DMatrix::<f64>::zeros(rows, rows);
        let mut variances = Vec::with_capacity(modes);
        for k in 0..modes {
            let column = x.column(k).into_owned();
            let variance = population_variance(&column);
            // constant to machine precision counts as degenerate: weighting
            // by 1/sigma^2 would blow the reference up by ~1/eps^2
            let mean_sq = column.norm_squared() / rows as f64;
            if variance <= 1e-24 * mean_sq {
                return Err(Error::numerical(format!(
                    "degenerate baseline: mode {} of kind {kind} has zero spatial variance",
                    k + 1
                )));
            }
            variances.push(variance);
            let weight = scaling / (modes as f64 * variance);
            // weight * (x_i * x_j) keeps the accumulation bitwise symmetric
            for i in 0..rows {
                for j in 0..rows {
                    reference[(i, j)] += weight * (column[i] * column[j]);
                }
            }
        }
        let eps =
            epsilon.unwrap_or_else(|| AUTO_EPSILON_TRACE_FACTOR * reference.trace() / rows as f64);
        for i in 0..rows {
            reference[(i, i)] += eps;
        }
        kinds.insert(
            kind,
            KindBaseline {
                reference,
                features: x.clone(),
                mode_variances: variances,
                epsilon: eps,
            },
        );
    }
    Ok(BaselineReference {
        kinds,
        scaling,
        interior_grid,
        spacing,
        fingerprint,
    })
}

/// Quadratic form d' (2P)^{-1} d through a symmetric positive-definite
/// factorization; no explicit inverse is formed.
pub fn mode_damage_index(deviation: &DVector<f64>, reference: &DMatrix<f64>) -> Result<f64> {
    if reference.nrows() != reference.ncols() {
        return Err(Error::validation("reference matrix P must be square"));
    }
    if deviation.len() != reference.nrows() {
        return Err(Error::validation(format!(
            "deviation length {} does not match P dimension {}",
            deviation.len(),
            reference.nrows()
        )));
    }
    let chol = factor_doubled(reference)?;
    Ok(quadratic_form(&chol, deviation))
}

fn factor_doubled(reference: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(2.0 * reference).ok_or_else(|| {
        Error::numerical(
            "reference matrix 2P is not positive definite; increase the regularization epsilon",
        )
    })
}

fn quadratic_form(chol: &Cholesky<f64, nalgebra::Dyn>, deviation: &DVector<f64>) -> f64 {
    let y = chol.solve(deviation);
    deviation.dot(&y).max(0.0)
}

/// Arithmetic mean of per-mode indices.
pub fn global_damage_index(per_mode: &[f64]) -> Result<f64> {
    if per_mode.is_empty() {
        return Err(Error::validation("no per-mode damage indices to average"));
    }
    Ok(per_mode.iter().sum::<f64>() / per_mode.len() as f64)
}

/// Per-kind scoring results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    /// Global index for this kind (mean of `Qk`).
    #[serde(rename = "Q")]
    pub q: f64,
    /// Per-mode indices in baseline frequency order.
    #[serde(rename = "Qk")]
    pub qk: Vec<f64>,
    /// Grid coordinate of the largest absolute deviation entry.
    pub deviation_max_location: f64,
}

/// Eigenvalue-geometry metrics of the scored model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenMetrics {
    pub avg_distance: f64,
    pub enclosed_area_top5: f64,
}

/// Full scoring output for one structural state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageReport {
    pub kinds: BTreeMap<FeatureKind, KindReport>,
    pub eigen_metrics: EigenMetrics,
    pub rmse: ReconstructionErrors,
    pub config: serde_json::Value,
}

impl DamageReport {
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

/// Score a current model against the healthy baseline over matched modes.
///
/// Deviations are taken between feature columns of the matched pairs; the
/// per-kind index is the mean quadratic form. Eigenvalue metrics and the
/// stored reconstruction errors of the current model are attached, and the
/// caller's configuration echo is embedded verbatim.
pub fn score(
    current_model: &DmdModel,
    current_profiles: &DominantProfiles,
    baseline: &BaselineReference,
    mode_match: &ModeMatch,
    config: serde_json::Value,
) -> Result<DamageReport> {
    if mode_match.pairs.is_empty() {
        return Err(Error::matching("no matched modes to score"));
    }
    let spacing_gap = (current_profiles
        .profiles()
        .first()
        .map(|p| p.spacing())
        .unwrap_or(baseline.spacing)
        - baseline.spacing)
        .abs();
    if spacing_gap > 1e-9 * baseline.spacing {
        return Err(Error::validation(
            "current profiles use a different grid spacing than the baseline",
        ));
    }
    let expected_len = baseline.interior_grid.len() + 2;
    for p in current_profiles.profiles() {
        if p.values().len() != expected_len {
            return Err(Error::validation(format!(
                "current profile has {} points but the baseline grid implies {expected_len}",
                p.values().len()
            )));
        }
    }
    let rmse = *current_model.reconstruction().ok_or_else(|| {
        Error::validation("current model carries no reconstruction errors; evaluate them first")
    })?;

    // pairs in ascending baseline frequency order for stable reporting
    let mut pairs = mode_match.pairs.clone();
    pairs.sort_by_key(|p| p.baseline_position);

    let current_sets = current_profiles.feature_sets()?;
    let mut kinds = BTreeMap::new();
    for fs in current_sets.iter() {
        let kind = fs.kind();
        let kb = baseline.kind(kind);
        if fs.matrix().nrows() != kb.features().nrows() {
            return Err(Error::validation(format!(
                "feature rows disagree with baseline for kind {kind}"
            )));
        }
        let chol = factor_doubled(kb.reference())?;
        let mut qk = Vec::with_capacity(pairs.len());
        let mut max_dev = -1.0_f64;
        let mut max_loc = baseline.interior_grid[0];
        for pair in &pairs {
            let current_col = fs.matrix().column(pair.current_position);
            let healthy_col = kb.features().column(pair.baseline_position);
            let deviation =
                DVector::from_fn(current_col.len(), |i, _| current_col[i] - healthy_col[i]);
            for (i, d) in deviation.iter().enumerate() {
                if d.abs() > max_dev {
                    max_dev = d.abs();
                    max_loc = baseline.interior_grid[i];
                }
            }
            qk.push(quadratic_form(&chol, &deviation));
        }
        let q = global_damage_index(&qk)?;
        kinds.insert(
            kind,
            KindReport {
                q,
                qk,
                deviation_max_location: max_loc,
            },
        );
    }

    let eigenvalues = current_model.eigenvalues();
    let avg_distance = dmd::avg_distance_origin(eigenvalues)?;
    let dominant = current_model
        .select_dominant(ENCLOSED_AREA_COUNT.min(max_representatives(current_model)))?;
    if dominant.len() < 3 {
        return Err(Error::numerical(
            "fewer than 3 dominant eigenvalue representatives; enclosed area is undefined",
        ));
    }
    let poly: Vec<_> = dominant.iter().map(|&i| eigenvalues[i]).collect();
    let enclosed_area_top5 = dmd::enclosed_area(&poly)?;

    Ok(DamageReport {
        kinds,
        eigen_metrics: EigenMetrics {
            avg_distance,
            enclosed_area_top5,
        },
        rmse,
        config,
    })
}

fn max_representatives(model: &DmdModel) -> usize {
    model
        .eigenvalues()
        .iter()
        .filter(|l| l.im >= -1e-12)
        .count()
}

/// On-disk form of a baseline: JSON descriptor plus per-kind CSV matrices.
#[derive(Debug, Serialize, Deserialize)]
struct BaselineDescriptor {
    scaling: f64,
    interior_grid: Vec<f64>,
    spacing: f64,
    fingerprint: ModelFingerprint,
    kinds: BTreeMap<FeatureKind, BaselineKindDescriptor>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BaselineKindDescriptor {
    epsilon: f64,
    mode_variances: Vec<f64>,
    reference_csv: String,
    features_csv: String,
}

impl BaselineReference {
    /// Persist as `baseline.json` plus CSV matrices in `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut kinds = BTreeMap::new();
        for (kind, kb) in &self.kinds {
            let reference_csv = format!("baseline_P_{kind}.csv");
            let features_csv = format!("baseline_features_{kind}.csv");
            write_matrix_csv(&kb.reference, &dir.join(&reference_csv))?;
            write_matrix_csv(&kb.features, &dir.join(&features_csv))?;
            kinds.insert(
                *kind,
                BaselineKindDescriptor {
                    epsilon: kb.epsilon,
                    mode_variances: kb.mode_variances.clone(),
                    reference_csv,
                    features_csv,
                },
            );
        }
        let descriptor = BaselineDescriptor {
            scaling: self.scaling,
            interior_grid: self.interior_grid.clone(),
            spacing: self.spacing,
            fingerprint: self.fingerprint.clone(),
            kinds,
        };
        let path = dir.join("baseline.json");
        let text = serde_json::to_string_pretty(&descriptor)
            .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Load a baseline previously written by [`BaselineReference::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("baseline.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let descriptor: BaselineDescriptor =
            serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.to_string()))?;
        let mut kinds = BTreeMap::new();
        for (kind, kd) in descriptor.kinds {
            let reference = read_matrix_csv(&dir.join(&kd.reference_csv))?;
            let features = read_matrix_csv(&dir.join(&kd.features_csv))?;
            kinds.insert(
                kind,
                KindBaseline {
                    reference,
                    features,
                    mode_variances: kd.mode_variances,
                    epsilon: kd.epsilon,
                },
            );
        }
        for kind in FeatureKind::all() {
            if !kinds.contains_key(&kind) {
                return Err(Error::parse(
                    &path,
                    format!("baseline descriptor is missing kind {kind}"),
                ));
            }
        }
        Ok(BaselineReference {
            kinds,
            scaling: descriptor.scaling,
            interior_grid: descriptor.interior_grid,
            spacing: descriptor.spacing,
            fingerprint: descriptor.fingerprint,
        })
    }
}
