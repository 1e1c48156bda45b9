//! Damage-sensitive spatial features of identified mode shapes.
//!
//! Complex DMD mode columns are reduced to real unit-norm profiles under a
//! deterministic phase/sign convention, then differentiated with central
//! differences into the four feature families: mode shape (MS), slope (MSS),
//! curvature (MSC), and curvature square (MSCS). A greedy frequency-ordered
//! matcher pairs current modes with baseline modes.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dmd::DmdModel;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Feature family identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "MSS")]
    Mss,
    #[serde(rename = "MSC")]
    Msc,
    #[serde(rename = "MSCS")]
    Mscs,
}

impl FeatureKind {
    /// All four families in canonical order.
    pub fn all() -> [FeatureKind; 4] {
        [
            FeatureKind::Ms,
            FeatureKind::Mss,
            FeatureKind::Msc,
            FeatureKind::Mscs,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::Ms => "MS",
            FeatureKind::Mss => "MSS",
            FeatureKind::Msc => "MSC",
            FeatureKind::Mscs => "MSCS",
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Real unit-norm spatial profile of one identified mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeShapeProfile {
    values: Vec<f64>,
    spacing: f64,
    frequency_hz: f64,
}

impl ModeShapeProfile {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    /// Cosine-squared similarity with another unit-norm profile.
    pub fn similarity(&self, other: &ModeShapeProfile) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::validation(format!(
                "profile lengths disagree: {} vs {}",
                self.values.len(),
                other.values.len()
            )));
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(dot * dot)
    }
}

/// Reduce a complex mode column to a real unit-norm profile.
///
/// The column is rotated by the negated phase of its maximum-magnitude
/// entry, the real part is taken and scaled to unit Euclidean norm, and the
/// sign is fixed so the entry of maximum magnitude is positive. The result
/// is invariant to the input's complex phase and positive scaling.
pub fn realify_normalize(
    column: &[C64],
    spacing: f64,
    frequency_hz: f64,
) -> Result<ModeShapeProfile> {
    if column.is_empty() {
        return Err(Error::validation("empty mode column"));
    }
    if !spacing.is_finite() || spacing <= 0.0 {
        return Err(Error::validation(format!(
            "grid spacing must be positive, got {spacing}"
        )));
    }
    let mut arg_max = 0usize;
    let mut best = 0.0_f64;
    for (i, z) in column.iter().enumerate() {
        let m = z.norm_sqr();
        if m > best {
            best = m;
            arg_max = i;
        }
    }
    if best == 0.0 {
        return Err(Error::validation("zero mode column cannot be normalized"));
    }
    let rotation = C64::from_polar(1.0, -column[arg_max].arg());
    let mut values: Vec<f64> = column.iter().map(|z| (z * rotation).re).collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::validation(
            "mode column has no real content after phase rotation",
        ));
    }
    for v in &mut values {
        *v /= norm;
    }
    let mut sign_idx = 0usize;
    let mut sign_best = 0.0_f64;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > sign_best {
            sign_best = v.abs();
            sign_idx = i;
        }
    }
    if values[sign_idx] < 0.0 {
        for v in &mut values {
            *v = -*v;
        }
    }
    Ok(ModeShapeProfile {
        values,
        spacing,
        frequency_hz,
    })
}

/// Central-difference first derivative on the interior points.
pub fn slope(values: &[f64], spacing: f64) -> Result<Vec<f64>> {
    check_difference_inputs(values, spacing)?;
    Ok((1..values.len() - 1)
        .map(|i| (values[i + 1] - values[i - 1]) / (2.0 * spacing))
        .collect())
}

/// Central-difference second derivative on the interior points.
pub fn curvature(values: &[f64], spacing: f64) -> Result<Vec<f64>> {
    check_difference_inputs(values, spacing)?;
    let h2 = spacing * spacing;
    Ok((1..values.len() - 1)
        .map(|i| (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2)
        .collect())
}

/// Elementwise square of the central-difference curvature.
pub fn curvature_square(values: &[f64], spacing: f64) -> Result<Vec<f64>> {
    Ok(curvature(values, spacing)?
        .into_iter()
        .map(|c| c * c)
        .collect())
}

fn check_difference_inputs(values: &[f64], spacing: f64) -> Result<()> {
    if values.len() < 3 {
        return Err(Error::validation(format!(
            "central differences need at least 3 points, got {}",
            values.len()
        )));
    }
    if !spacing.is_finite() || spacing <= 0.0 {
        return Err(Error::validation(format!(
            "grid spacing must be positive, got {spacing}"
        )));
    }
    Ok(())
}

/// Feature matrix of one kind: interior points by selected modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    kind: FeatureKind,
    matrix: DMatrix<f64>,
    mode_frequencies: Vec<f64>,
}

impl FeatureSet {
    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    /// Interior-points x modes matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn mode_frequencies(&self) -> &[f64] {
        &self.mode_frequencies
    }

    /// CSV export: first column the interior grid coordinate, one column per
    /// mode; header row carries the mode frequencies in Hz.
    pub fn write_csv(&self, interior_grid: &[f64], path: &Path) -> Result<()> {
        if interior_grid.len() != self.matrix.nrows() {
            return Err(Error::validation(format!(
                "interior grid length {} does not match feature rows {}",
                interior_grid.len(),
                self.matrix.nrows()
            )));
        }
        let mut out = String::from("x");
        for f in &self.mode_frequencies {
            out.push_str(&format!(",{f:.6}Hz"));
        }
        out.push('\n');
        for (i, x) in interior_grid.iter().enumerate() {
            out.push_str(&format!("{x:.16e}"));
            for j in 0..self.matrix.ncols() {
                out.push_str(&format!(",{:.16e}", self.matrix[(i, j)]));
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Assemble one feature family over M mode profiles sharing grid and
/// spacing. All kinds, MS included, are evaluated on interior points so the
/// four families share dimensions.
pub fn assemble_features(profiles: &[ModeShapeProfile], kind: FeatureKind) -> Result<FeatureSet> {
    if profiles.is_empty() {
        return Err(Error::validation("no mode profiles supplied"));
    }
    let n = profiles[0].values.len();
    let h = profiles[0].spacing;
    if n < 3 {
        return Err(Error::validation(format!(
            "profiles need at least 3 points for interior features, got {n}"
        )));
    }
    for (i, p) in profiles.iter().enumerate() {
        if p.values.len() != n {
            return Err(Error::validation(format!(
                "profile {i} has {} points, expected {n}",
                p.values.len()
            )));
        }
        if (p.spacing - h).abs() > 1e-12 * h {
            return Err(Error::validation(format!(
                "profile {i} spacing {} differs from {h}",
                p.spacing
            )));
        }
    }
    let rows = n - 2;
    let mut matrix = DMatrix::<f64>::zeros(rows, profiles.len());
    for (j, p) in profiles.iter().enumerate() {
        let column = match kind {
            FeatureKind::Ms => p.values[1..n - 1].to_vec(),
            FeatureKind::Mss => slope(&p.values, h)?,
            FeatureKind::Msc => curvature(&p.values, h)?,
            FeatureKind::Mscs => curvature_square(&p.values, h)?,
        };
        for (i, v) in column.into_iter().enumerate() {
            matrix[(i, j)] = v;
        }
    }
    Ok(FeatureSet {
        kind,
        matrix,
        mode_frequencies: profiles.iter().map(|p| p.frequency_hz).collect(),
    })
}

/// Dominant-mode profiles of a fitted model, in dominance order.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantProfiles {
    model_indices: Vec<usize>,
    profiles: Vec<ModeShapeProfile>,
}

impl DominantProfiles {
    /// Select `count` dominant modes and reduce each to a spatial profile.
    ///
    /// For delay-embedded models the zero-delay row of each channel block is
    /// taken, recovering a profile over the original channels.
    pub fn extract(
        model: &DmdModel,
        count: usize,
        spacing: f64,
        embedding_dimension: usize,
    ) -> Result<Self> {
        if embedding_dimension < 1 {
            return Err(Error::validation("embedding dimension must be >= 1"));
        }
        let n_rows = model.modes().nrows();
        if !n_rows.is_multiple_of(embedding_dimension) {
            return Err(Error::validation(format!(
                "mode length {n_rows} is not a multiple of embedding dimension {embedding_dimension}"
            )));
        }
        let indices = model.select_dominant(count)?;
        let spectrum = model.continuous_spectrum()?;
        let channels = n_rows / embedding_dimension;
        let mut profiles = Vec::with_capacity(count);
        for &idx in &indices {
            let column: Vec<C64> = (0..channels)
                .map(|c| model.modes()[(c * embedding_dimension, idx)])
                .collect();
            let freq = spectrum[idx].frequency_hz.abs();
            profiles.push(realify_normalize(&column, spacing, freq)?);
        }
        Ok(DominantProfiles {
            model_indices: indices,
            profiles,
        })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Underlying model mode indices, in dominance order.
    pub fn model_indices(&self) -> &[usize] {
        &self.model_indices
    }

    pub fn profiles(&self) -> &[ModeShapeProfile] {
        &self.profiles
    }

    pub fn profile(&self, position: usize) -> Result<&ModeShapeProfile> {
        self.profiles.get(position).ok_or_else(|| {
            Error::validation(format!(
                "profile position {position} out of range ({} profiles)",
                self.profiles.len()
            ))
        })
    }

    /// Feature sets of all four kinds over these profiles.
    pub fn feature_sets(&self) -> Result<[FeatureSet; 4]> {
        let all = FeatureKind::all();
        Ok([
            assemble_features(&self.profiles, all[0])?,
            assemble_features(&self.profiles, all[1])?,
            assemble_features(&self.profiles, all[2])?,
            assemble_features(&self.profiles, all[3])?,
        ])
    }
}

/// Acceptance thresholds for baseline-to-current mode pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchThresholds {
    /// Maximum relative frequency gap.
    pub max_frequency_gap: f64,
    /// Minimum squared normalized inner product of realified profiles.
    pub min_similarity: f64,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        MatchThresholds {
            max_frequency_gap: 0.2,
            min_similarity: 0.6,
        }
    }
}

/// One accepted pairing between a current and a baseline mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    /// Position within the current dominant set.
    pub current_position: usize,
    /// Position within the baseline dominant set.
    pub baseline_position: usize,
    /// Mode index within the current model.
    pub current_index: usize,
    /// Mode index within the baseline model.
    pub baseline_index: usize,
    /// Relative frequency gap.
    pub frequency_gap: f64,
    /// Squared normalized inner product of the profiles.
    pub similarity: f64,
}

/// Injective pairing of current modes onto baseline modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMatch {
    pub pairs: Vec<MatchedPair>,
}

/// Greedily pair baseline modes (ascending frequency) with the unused
/// current mode of smallest relative frequency gap; each candidate must
/// pass both thresholds or the whole pairing fails.
///
/// The current pool may hold more dominants than the baseline; extra modes
/// simply stay unmatched.
pub fn match_modes(
    current: &DominantProfiles,
    baseline: &DominantProfiles,
    thresholds: &MatchThresholds,
) -> Result<ModeMatch> {
    if current.len() < baseline.len() {
        return Err(Error::matching(format!(
            "current pool holds {} dominants but the baseline needs {}",
            current.len(),
            baseline.len()
        )));
    }
    if baseline.is_empty() {
        return Err(Error::matching("no modes to match"));
    }

    let mut baseline_order: Vec<usize> = (0..baseline.len()).collect();
    baseline_order.sort_by(|&a, &b| {
        baseline.profiles[a]
            .frequency_hz
            .partial_cmp(&baseline.profiles[b].frequency_hz)
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut used = vec![false; current.len()];
    let mut pairs = Vec::with_capacity(baseline.len());
    for &b_pos in &baseline_order {
        let fb = baseline.profiles[b_pos].frequency_hz;
        let gap_of =
            |c_pos: usize| (current.profiles[c_pos].frequency_hz - fb).abs() / fb.abs().max(1e-12);
        let candidate = (0..current.len())
            .filter(|&c| !used[c])
            .min_by(|&a, &b| gap_of(a).partial_cmp(&gap_of(b)).unwrap().then(a.cmp(&b)))
            .expect("pool is at least baseline-sized, so an unused candidate exists");
        let gap = gap_of(candidate);
        let similarity = current.profiles[candidate].similarity(&baseline.profiles[b_pos])?;
        if gap > thresholds.max_frequency_gap || similarity < thresholds.min_similarity {
            return Err(Error::matching(format!(
                "baseline mode at {fb:.4} Hz has no acceptable partner: best candidate at {:.4} Hz \
                 (gap {gap:.3}, similarity {similarity:.3}, need gap <= {} and similarity >= {})",
                current.profiles[candidate].frequency_hz,
                thresholds.max_frequency_gap,
                thresholds.min_similarity
            )));
        }
        used[candidate] = true;
        pairs.push(MatchedPair {
            current_position: candidate,
            baseline_position: b_pos,
            current_index: current.model_indices[candidate],
            baseline_index: baseline.model_indices[b_pos],
            frequency_gap: gap,
            similarity,
        });
    }
    Ok(ModeMatch { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(values: Vec<f64>, h: f64, f: f64) -> ModeShapeProfile {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let column: Vec<C64> = values.iter().map(|&v| C64::new(v / norm, 0.0)).collect();
        realify_normalize(&column, h, f).unwrap()
    }

    #[test]
    fn realify_is_identity_on_canonical_profiles() {
        let column = vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)];
        let p = realify_normalize(&column, 0.1, 1.0).unwrap();
        assert_eq!(p.values(), &[0.6, 0.8]);
    }

    #[test]
    fn realify_removes_global_phase() {
        let base = [0.6, -0.8, 0.0];
        let rot = C64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let column: Vec<C64> = base.iter().map(|&v| rot * C64::new(v, 0.0)).collect();
        let p = realify_normalize(&column, 0.1, 1.0).unwrap();
        // sign convention flips so the max-|.| entry is positive
        assert!((p.values()[0] + 0.6).abs() < 1e-12);
        assert!((p.values()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn realify_output_is_unit_norm() {
        let column = vec![
            C64::new(1.0, 2.0),
            C64::new(-0.5, 0.25),
            C64::new(0.0, -3.0),
        ];
        let p = realify_normalize(&column, 0.1, 1.0).unwrap();
        let norm: f64 = p.values().iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn realify_rejects_zero_column() {
        assert!(realify_normalize(&[C64::new(0.0, 0.0)], 0.1, 1.0).is_err());
    }

    #[test]
    fn slope_exact_on_quadratics() {
        let h = 0.1;
        let values: Vec<f64> = (0..7).map(|i| (i as f64 * h).powi(2)).collect();
        let s = slope(&values, h).unwrap();
        for (i, v) in s.iter().enumerate() {
            let x = (i + 1) as f64 * h;
            assert!((*v - 2.0 * x).abs() < 1e-14, "at {x}: {v}");
        }
    }

    #[test]
    fn slope_on_linear_and_constant_profiles() {
        let values = vec![3.0; 5];
        assert!(slope(&values, 0.2).unwrap().iter().all(|&v| v == 0.0));
        let linear: Vec<f64> = (0..5).map(|i| 1.0 + 2.5 * i as f64 * 0.2).collect();
        for v in slope(&linear, 0.2).unwrap() {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_exact_on_cubics() {
        let h = 0.05;
        let values: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(3)).collect();
        let c = curvature(&values, h).unwrap();
        for (i, v) in c.iter().enumerate() {
            let x = (i + 1) as f64 * h;
            assert!((*v - 6.0 * x).abs() < 1e-9, "at {x}: {v}");
        }
    }

    #[test]
    fn curvature_constant_on_quadratics_zero_on_linear() {
        let h = 0.1;
        let quad: Vec<f64> = (0..6).map(|i| (i as f64 * h).powi(2)).collect();
        for v in curvature(&quad, h).unwrap() {
            assert!((v - 2.0).abs() < 1e-10);
        }
        let lin: Vec<f64> = (0..6).map(|i| 4.0 - 0.3 * i as f64).collect();
        for v in curvature(&lin, h).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_square_is_elementwise_square() {
        let values = vec![0.1, -0.4, 0.9, 0.2, -0.7];
        let c = curvature(&values, 0.3).unwrap();
        let cs = curvature_square(&values, 0.3).unwrap();
        for (a, b) in c.iter().zip(&cs) {
            assert_eq!(a * a, *b);
        }
        // x^2 has constant curvature 2, so its square is constant 4
        let h = 0.1;
        let quad: Vec<f64> = (0..6).map(|i| (i as f64 * h).powi(2)).collect();
        for v in curvature_square(&quad, h).unwrap() {
            assert!((v - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn similarity_is_symmetric() {
        let a = profile((0..9).map(|i| (i as f64 * 0.5).sin()).collect(), 0.1, 3.0);
        let b = profile((0..9).map(|i| (i as f64 * 0.8).cos()).collect(), 0.1, 5.0);
        assert_eq!(a.similarity(&b).unwrap(), b.similarity(&a).unwrap());
    }

    #[test]
    fn differences_reject_short_profiles() {
        assert!(slope(&[1.0, 2.0], 0.1).is_err());
        assert!(curvature(&[1.0, 2.0], 0.1).is_err());
    }

    #[test]
    fn feature_dimensions_match_across_kinds() {
        let profiles: Vec<ModeShapeProfile> = (0..4)
            .map(|k| {
                let vals: Vec<f64> = (0..41)
                    .map(|i| ((k + 1) as f64 * i as f64 * 0.05).sin())
                    .collect();
                profile(vals, 0.02, (k + 1) as f64)
            })
            .collect();
        for kind in FeatureKind::all() {
            let fs = assemble_features(&profiles, kind).unwrap();
            assert_eq!(fs.matrix().nrows(), 39);
            assert_eq!(fs.matrix().ncols(), 4);
        }
    }

    #[test]
    fn single_mode_feature_column_equals_per_mode_feature() {
        let vals: Vec<f64> = (0..11).map(|i| (i as f64 * 0.3).sin()).collect();
        let p = profile(vals, 0.1, 2.0);
        let fs = assemble_features(std::slice::from_ref(&p), FeatureKind::Msc).unwrap();
        let direct = curvature(p.values(), 0.1).unwrap();
        for (i, v) in direct.iter().enumerate() {
            assert_eq!(fs.matrix()[(i, 0)], *v);
        }
    }

    #[test]
    fn mscs_column_is_square_of_msc_column() {
        let profiles: Vec<ModeShapeProfile> = (0..3)
            .map(|k| {
                let vals: Vec<f64> = (0..15)
                    .map(|i| ((k + 2) as f64 * i as f64 * 0.11).cos())
                    .collect();
                profile(vals, 0.05, k as f64 + 1.0)
            })
            .collect();
        let msc = assemble_features(&profiles, FeatureKind::Msc).unwrap();
        let mscs = assemble_features(&profiles, FeatureKind::Mscs).unwrap();
        for j in 0..3 {
            for i in 0..mscs.matrix().nrows() {
                let c = msc.matrix()[(i, j)];
                assert_eq!(mscs.matrix()[(i, j)], c * c);
            }
        }
    }

    #[test]
    fn matching_self_is_identity_with_unit_similarity() {
        let profiles: Vec<ModeShapeProfile> = (0..3)
            .map(|k| {
                let vals: Vec<f64> = (0..21)
                    .map(|i| ((k + 1) as f64 * i as f64 * 0.15).sin())
                    .collect();
                profile(vals, 0.04, 5.0 * (k + 1) as f64)
            })
            .collect();
        let set = DominantProfiles {
            model_indices: vec![0, 1, 2],
            profiles,
        };
        let m = match_modes(&set, &set, &MatchThresholds::default()).unwrap();
        for pair in &m.pairs {
            assert_eq!(pair.current_position, pair.baseline_position);
            assert!((pair.similarity - 1.0).abs() < 1e-12);
            assert_eq!(pair.frequency_gap, 0.0);
        }
    }

    #[test]
    fn matching_recovers_a_permutation() {
        let mk = |k: usize| {
            let vals: Vec<f64> = (0..21)
                .map(|i| ((k + 1) as f64 * i as f64 * 0.15).sin())
                .collect();
            profile(vals, 0.04, 5.0 * (k + 1) as f64)
        };
        let baseline = DominantProfiles {
            model_indices: vec![0, 1, 2],
            profiles: vec![mk(0), mk(1), mk(2)],
        };
        let current = DominantProfiles {
            model_indices: vec![10, 11, 12],
            profiles: vec![mk(2), mk(0), mk(1)],
        };
        let m = match_modes(&current, &baseline, &MatchThresholds::default()).unwrap();
        let mut mapping = vec![usize::MAX; 3];
        for pair in &m.pairs {
            mapping[pair.baseline_position] = pair.current_position;
        }
        assert_eq!(mapping, vec![1, 2, 0]);
    }

    #[test]
    fn matching_failure_names_the_frequency() {
        let a = DominantProfiles {
            model_indices: vec![0],
            profiles: vec![profile(
                (0..9).map(|i| (i as f64 * 0.4).sin()).collect(),
                0.1,
                10.0,
            )],
        };
        let b = DominantProfiles {
            model_indices: vec![0],
            profiles: vec![profile(
                (0..9).map(|i| (i as f64 * 0.4).sin()).collect(),
                0.1,
                50.0,
            )],
        };
        let err = match_modes(&a, &b, &MatchThresholds::default()).unwrap_err();
        assert!(err.to_string().contains("50.0000"), "{err}");
    }
}
