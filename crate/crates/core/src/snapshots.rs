//! Snapshot ingestion and preparation.
//!
//! A [`SnapshotMatrix`] holds n spatial channels by m time samples. Sources
//! are the built-in simulator, CSV files with a JSON metadata sidecar, or
//! directories of binary PGM (P5) frames. Companion operations provide
//! Hankel delay embedding, contiguous train/test splitting, and
//! cumulative-energy curves over singular-value spectra.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance of a snapshot matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotSource {
    Simulation,
    Csv,
    Frames,
}

/// Sidecar metadata accompanying a snapshot CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub dt: f64,
    pub grid: Option<Vec<f64>>,
    pub source: SnapshotSource,
}

/// Read a metadata sidecar without touching the data file.
pub fn read_metadata(path: &Path) -> Result<SnapshotMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, format!("metadata: {e}")))
}

/// Real-valued measurement matrix: one spatial channel per row, one time
/// sample per column, uniform time step.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<f64>,
    dt: f64,
    grid: Option<Vec<f64>>,
    source: SnapshotSource,
}

impl SnapshotMatrix {
    /// Validate invariants and wrap the payload.
    pub fn new(
        data: DMatrix<f64>,
        dt: f64,
        grid: Option<Vec<f64>>,
        source: SnapshotSource,
    ) -> Result<Self> {
        if data.ncols() < 2 {
            return Err(Error::validation(format!(
                "snapshot matrix needs at least 2 time samples, got {}",
                data.ncols()
            )));
        }
        if data.nrows() == 0 {
            return Err(Error::validation("snapshot matrix has no channels"));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::validation(format!(
                "snapshot time step must be positive, got {dt}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(
                "snapshot matrix contains non-finite values",
            ));
        }
        if let Some(g) = &grid {
            if g.len() != data.nrows() {
                return Err(Error::validation(format!(
                    "grid length {} does not match channel count {}",
                    g.len(),
                    data.nrows()
                )));
            }
            if g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::validation("grid must be strictly increasing"));
            }
        }
        Ok(SnapshotMatrix {
            data,
            dt,
            grid,
            source,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Number of spatial channels (rows).
    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    /// Number of time samples (columns).
    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> Option<&[f64]> {
        self.grid.as_deref()
    }

    pub fn source(&self) -> SnapshotSource {
        self.source
    }

    /// Add i.i.d. Gaussian measurement noise, reproducible from `seed`.
    pub fn with_noise(&self, std_dev: f64, seed: u64) -> Result<SnapshotMatrix> {
        if !std_dev.is_finite() || std_dev < 0.0 {
            return Err(Error::validation(format!(
                "noise standard deviation must be non-negative, got {std_dev}"
            )));
        }
        if std_dev == 0.0 {
            return Ok(self.clone());
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = rand_distr::Normal::new(0.0, std_dev)
            .map_err(|e| Error::validation(format!("invalid noise distribution: {e}")))?;
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v += normal.sample(&mut rng);
        }
        Ok(out)
    }

    /// Write the matrix as headerless CSV plus a JSON metadata sidecar.
    ///
    /// Values are printed with 17 significant digits so a read-back is
    /// bit-exact for finite doubles.
    pub fn write_csv(&self, data_path: &Path, meta_path: &Path) -> Result<()> {
        let mut body = String::with_capacity(self.data.len() * 24);
        for i in 0..self.data.nrows() {
            for j in 0..self.data.ncols() {
                if j > 0 {
                    body.push(',');
                }
                body.push_str(&format!("{:.16e}", self.data[(i, j)]));
            }
            body.push('\n');
        }
        fs::write(data_path, body).map_err(|e| Error::io(data_path, e))?;

        let meta = SnapshotMeta {
            dt: self.dt,
            grid: self.grid.clone(),
            source: self.source,
        };
        let mut file = fs::File::create(meta_path).map_err(|e| Error::io(meta_path, e))?;
        serde_json::to_writer_pretty(&mut file, &meta)
            .map_err(|e| Error::io(meta_path, std::io::Error::other(e)))?;
        file.write_all(b"\n").map_err(|e| Error::io(meta_path, e))?;
        Ok(())
    }

    /// Load a snapshot matrix from CSV (rows = channels) and its metadata.
    pub fn load_csv(data_path: &Path, meta_path: &Path) -> Result<Self> {
        let meta_text = fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
        let meta: SnapshotMeta = serde_json::from_str(&meta_text)
            .map_err(|e| Error::parse(meta_path, format!("metadata: {e}")))?;

        let text = fs::read_to_string(data_path).map_err(|e| Error::io(data_path, e))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width: Option<usize> = None;
        for (row_idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for (col_idx, cell) in line.split(',').enumerate() {
                let value: f64 = cell.trim().parse().map_err(|_| {
                    Error::parse(
                        data_path,
                        format!(
                            "non-numeric cell `{cell}` at row {}, column {}",
                            row_idx + 1,
                            col_idx + 1
                        ),
                    )
                })?;
                row.push(value);
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::parse(
                        data_path,
                        format!(
                            "ragged row {}: expected {} columns, found {}",
                            row_idx + 1,
                            w,
                            row.len()
                        ),
                    ));
                }
                _ => {}
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::parse(data_path, "no data rows"));
        }
        let n = rows.len();
        let m = width.unwrap();
        let data = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
        SnapshotMatrix::new(data, meta.dt, meta.grid, meta.source)
    }

    /// Contiguous prefix/suffix split; the train part keeps
    /// floor(fraction * m) columns.
    pub fn split_train_test(&self, fraction: f64) -> Result<(SnapshotMatrix, SnapshotMatrix)> {
        if !(0.0..1.0).contains(&fraction) || fraction <= 0.0 {
            return Err(Error::validation(format!(
                "train fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let m = self.samples();
        let train_cols = (fraction * m as f64).floor() as usize;
        if train_cols < 2 {
            return Err(Error::validation(format!(
                "degenerate split: train would hold {train_cols} columns, need >= 2"
            )));
        }
        if m - train_cols < 1 {
            return Err(Error::validation("degenerate split: empty test part"));
        }
        // constructed directly: a single held-out column is a valid test slice
        let mk = |d| SnapshotMatrix {
            data: d,
            dt: self.dt,
            grid: self.grid.clone(),
            source: self.source,
        };
        let train = mk(self.data.columns(0, train_cols).into_owned());
        let test = mk(self.data.columns(train_cols, m - train_cols).into_owned());
        Ok((train, test))
    }
}

/// Rectangular pixel region of interest within a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRoi {
    /// Left column of the region.
    pub x: usize,
    /// Top row of the region.
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl PixelRoi {
    fn validate_within(&self, frame_width: usize, frame_height: usize) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::validation("ROI must have positive width and height"));
        }
        if self.x + self.width > frame_width || self.y + self.height > frame_height {
            return Err(Error::validation(format!(
                "ROI {}x{} at ({}, {}) exceeds frame {}x{}",
                self.width, self.height, self.x, self.y, frame_width, frame_height
            )));
        }
        Ok(())
    }

    /// Number of pixels, i.e. channels after flattening.
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

struct PgmFrame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<PgmFrame> {
    let mut pos = 0usize;
    let mut read_token = || -> Result<String> {
        // skip whitespace and '#' comment lines
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(path, "truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = read_token()?;
    if magic != "P5" {
        return Err(Error::parse(
            path,
            format!("expected binary PGM magic `P5`, found `{magic}`"),
        ));
    }
    let width: usize = read_token()?
        .parse()
        .map_err(|_| Error::parse(path, "invalid PGM width"))?;
    let height: usize = read_token()?
        .parse()
        .map_err(|_| Error::parse(path, "invalid PGM height"))?;
    let maxval: usize = read_token()?
        .parse()
        .map_err(|_| Error::parse(path, "invalid PGM max value"))?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(
            path,
            format!("only 8-bit PGM supported (max value 255), found {maxval}"),
        ));
    }
    // single whitespace separates header from raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::parse(path, "missing separator before PGM raster"));
    }
    pos += 1;
    let expected = width * height;
    if bytes.len() - pos < expected {
        return Err(Error::parse(
            path,
            format!(
                "PGM raster truncated: expected {expected} bytes, found {}",
                bytes.len() - pos
            ),
        ));
    }
    Ok(PgmFrame {
        width,
        height,
        pixels: bytes[pos..pos + expected].to_vec(),
    })
}

/// Write an 8-bit binary PGM frame.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::validation(format!(
            "pixel buffer length {} does not match {width}x{height}",
            pixels.len()
        )));
    }
    let mut out = Vec::with_capacity(pixels.len() + 32);
    out.extend_from_slice(format!("P5\n{width} {height}\n255\n").as_bytes());
    out.extend_from_slice(pixels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load a lexicographically ordered PGM frame sequence as a snapshot matrix.
///
/// Each frame's ROI is flattened row-major into one column. With
/// `mean_subtract`, each channel's temporal mean is removed. Frames decode
/// on up to `threads` worker threads; the result does not depend on the
/// thread count.
pub fn load_frame_sequence(
    directory: &Path,
    roi: PixelRoi,
    dt: f64,
    mean_subtract: bool,
    threads: usize,
) -> Result<SnapshotMatrix> {
    let entries = fs::read_dir(directory).map_err(|e| Error::io(directory, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(directory, e))?;
        let path = entry.path();
        if path.extension().and_then(|s| s.to_str()) == Some("pgm") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::io(
            directory,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no .pgm frames in directory"),
        ));
    }
    if paths.len() < 2 {
        return Err(Error::validation("frame sequence needs at least 2 frames"));
    }

    // (frame width, frame height, flattened ROI column)
    type DecodedFrame = (usize, usize, Vec<f64>);
    let threads = threads.max(1).min(paths.len());
    let chunk = paths.len().div_ceil(threads);
    let mut columns: Vec<Result<Vec<DecodedFrame>>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for slice in paths.chunks(chunk) {
            handles.push(scope.spawn(move || -> Result<Vec<DecodedFrame>> {
                let mut out = Vec::with_capacity(slice.len());
                for path in slice {
                    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                    let frame = parse_pgm(path, &bytes)?;
                    roi.validate_within(frame.width, frame.height)?;
                    let mut col = Vec::with_capacity(roi.pixels());
                    for r in roi.y..roi.y + roi.height {
                        for c in roi.x..roi.x + roi.width {
                            col.push(frame.pixels[r * frame.width + c] as f64);
                        }
                    }
                    out.push((frame.width, frame.height, col));
                }
                Ok(out)
            }));
        }
        for h in handles {
            columns.push(h.join().expect("frame decode thread panicked"));
        }
    });

    let mut flat: Vec<DecodedFrame> = Vec::with_capacity(paths.len());
    for chunk_result in columns {
        flat.extend(chunk_result?);
    }
    let (w0, h0) = (flat[0].0, flat[0].1);
    for (idx, (w, h, _)) in flat.iter().enumerate() {
        if *w != w0 || *h != h0 {
            return Err(Error::validation(format!(
                "frame {} is {}x{}, expected {}x{} like the first frame",
                paths[idx].display(),
                w,
                h,
                w0,
                h0
            )));
        }
    }

    let n = roi.pixels();
    let m = flat.len();
    let mut data = DMatrix::<f64>::zeros(n, m);
    for (j, (_, _, col)) in flat.iter().enumerate() {
        for i in 0..n {
            data[(i, j)] = col[i];
        }
    }
    if mean_subtract {
        for i in 0..n {
            let mean = (0..m).map(|j| data[(i, j)]).sum::<f64>() / m as f64;
            for j in 0..m {
                data[(i, j)] -= mean;
            }
        }
    }
    SnapshotMatrix::new(data, dt, None, SnapshotSource::Frames)
}

/// Write a bare numeric matrix as headerless CSV at 17 significant digits.
pub(crate) fn write_matrix_csv(matrix: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut body = String::with_capacity(matrix.len() * 24);
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if j > 0 {
                body.push(',');
            }
            body.push_str(&format!("{:.16e}", matrix[(i, j)]));
        }
        body.push('\n');
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Read a bare numeric matrix from headerless CSV.
pub(crate) fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row_idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col_idx, cell) in line.split(',').enumerate() {
            row.push(cell.trim().parse().map_err(|_| {
                Error::parse(
                    path,
                    format!(
                        "non-numeric cell `{cell}` at row {}, column {}",
                        row_idx + 1,
                        col_idx + 1
                    ),
                )
            })?);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(path, format!("ragged row {}", row_idx + 1)));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }
    let (n, m) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Hankel matrix of a scalar series: p rows of time-shifted copies,
/// H[i][j] = x[i + j], dimensions p x (N - p + 1).
pub fn build_hankel(series: &[f64], embedding_dimension: usize) -> Result<DMatrix<f64>> {
    let n = series.len();
    if embedding_dimension < 1 || embedding_dimension + 1 > n {
        return Err(Error::validation(format!(
            "embedding dimension must satisfy 1 <= p <= N - 1 (p = {embedding_dimension}, N = {n})"
        )));
    }
    let p = embedding_dimension;
    let q = n - p + 1;
    Ok(DMatrix::from_fn(p, q, |i, j| series[i + j]))
}

/// Delay-embed every channel and stack the per-channel Hankel blocks
/// vertically in channel order. With p = 1 this is an identity copy.
pub fn delay_embed(snap: &SnapshotMatrix, embedding_dimension: usize) -> Result<SnapshotMatrix> {
    if embedding_dimension == 1 {
        return Ok(snap.clone());
    }
    let p = embedding_dimension;
    let n = snap.channels();
    let m = snap.samples();
    if p + 1 > m {
        return Err(Error::validation(format!(
            "embedding dimension {p} too large for {m} samples"
        )));
    }
    let q = m - p + 1;
    let mut data = DMatrix::<f64>::zeros(n * p, q);
    for c in 0..n {
        for i in 0..p {
            for j in 0..q {
                data[(c * p + i, j)] = snap.data()[(c, i + j)];
            }
        }
    }
    // spatial grid no longer describes rows after embedding
    SnapshotMatrix::new(data, snap.dt(), None, snap.source())
}

/// Cumulative energy fractions of a singular-value spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    fractions: Vec<f64>,
}

impl EnergyCurve {
    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    /// Smallest rank whose cumulative energy reaches `threshold`.
    pub fn rank_for(&self, threshold: f64) -> usize {
        self.fractions
            .iter()
            .position(|&c| c >= threshold)
            .map(|i| i + 1)
            .unwrap_or(self.fractions.len())
    }
}

/// Cumulative energy c_j = sum_{i<=j} sigma_i^2 / sum_i sigma_i^2 over a
/// non-increasing singular-value list.
pub fn cumulative_energy(singular_values: &[f64]) -> Result<EnergyCurve> {
    if singular_values.is_empty() {
        return Err(Error::validation("empty singular-value list"));
    }
    for (i, w) in singular_values.windows(2).enumerate() {
        if w[1] > w[0] {
            return Err(Error::validation(format!(
                "singular values must be non-increasing: sigma[{}] = {} < sigma[{}] = {}",
                i,
                w[0],
                i + 1,
                w[1]
            )));
        }
    }
    if singular_values.iter().any(|&s| s < 0.0 || !s.is_finite()) {
        return Err(Error::validation(
            "singular values must be finite and non-negative",
        ));
    }
    let mut prefix = Vec::with_capacity(singular_values.len());
    let mut acc = 0.0;
    for &s in singular_values {
        acc += s * s;
        prefix.push(acc);
    }
    if acc == 0.0 {
        return Err(Error::validation("all-zero singular-value spectrum"));
    }
    let total = acc;
    Ok(EnergyCurve {
        fractions: prefix.into_iter().map(|p| p / total).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_snap() -> SnapshotMatrix {
        let data = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        SnapshotMatrix::new(data, 1e-3, None, SnapshotSource::Csv).unwrap()
    }

    #[test]
    fn csv_parse_is_direct() {
        let dir = tempfile::tempdir().unwrap();
        let data_path = dir.path().join("snap.csv");
        let meta_path = dir.path().join("snap.meta.json");
        std::fs::write(&data_path, "0,1,2\n3,4,5\n").unwrap();
        std::fs::write(&meta_path, r#"{"dt":0.001,"grid":null,"source":"csv"}"#).unwrap();
        let snap = SnapshotMatrix::load_csv(&data_path, &meta_path).unwrap();
        assert_eq!(snap.channels(), 2);
        assert_eq!(snap.samples(), 3);
        assert_eq!(snap.data()[(1, 2)], 5.0);
        assert_eq!(snap.dt(), 0.001);
    }

    #[test]
    fn ragged_row_error_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let data_path = dir.path().join("snap.csv");
        let meta_path = dir.path().join("snap.meta.json");
        std::fs::write(&data_path, "0,1,2\n3,4\n").unwrap();
        std::fs::write(&meta_path, r#"{"dt":0.001,"grid":null,"source":"csv"}"#).unwrap();
        let err = SnapshotMatrix::load_csv(&data_path, &meta_path).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let data_path = dir.path().join("snap.csv");
        let meta_path = dir.path().join("snap.meta.json");
        std::fs::write(&data_path, "0,1\n3,oops\n").unwrap();
        std::fs::write(&meta_path, r#"{"dt":0.001,"grid":null,"source":"csv"}"#).unwrap();
        let err = SnapshotMatrix::load_csv(&data_path, &meta_path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("column 2"), "{msg}");
    }

    #[test]
    fn missing_dt_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let data_path = dir.path().join("snap.csv");
        let meta_path = dir.path().join("snap.meta.json");
        std::fs::write(&data_path, "0,1\n2,3\n").unwrap();
        std::fs::write(&meta_path, r#"{"grid":null,"source":"csv"}"#).unwrap();
        let err = SnapshotMatrix::load_csv(&data_path, &meta_path).unwrap_err();
        assert!(err.to_string().contains("dt"), "{err}");
    }

    #[test]
    fn hankel_matches_the_reference_layout() {
        let h = build_hankel(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(h.nrows(), 2);
        assert_eq!(h.ncols(), 3);
        assert_eq!(
            h,
            DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0])
        );
    }

    #[test]
    fn hankel_p1_is_the_series_itself() {
        let h = build_hankel(&[5.0, 6.0, 7.0], 1).unwrap();
        assert_eq!(h.nrows(), 1);
        assert_eq!(h.ncols(), 3);
        assert_eq!(h[(0, 1)], 6.0);
    }

    #[test]
    fn hankel_rejects_out_of_range_embedding() {
        assert!(build_hankel(&[1.0, 2.0], 2).is_err());
        assert!(build_hankel(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn split_60_40() {
        let data = DMatrix::from_fn(3, 10, |i, j| (i * 10 + j) as f64);
        let snap = SnapshotMatrix::new(data, 0.5, None, SnapshotSource::Csv).unwrap();
        let (train, test) = snap.split_train_test(0.6).unwrap();
        assert_eq!(train.samples(), 6);
        assert_eq!(test.samples(), 4);
        // partition: concatenation reproduces the input
        for i in 0..3 {
            for j in 0..10 {
                let v = if j < 6 {
                    train.data()[(i, j)]
                } else {
                    test.data()[(i, j - 6)]
                };
                assert_eq!(v, snap.data()[(i, j)]);
            }
        }
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let data = DMatrix::from_fn(1, 4, |_, j| j as f64);
        let snap = SnapshotMatrix::new(data, 1.0, None, SnapshotSource::Csv).unwrap();
        // fraction 1.0 would leave an empty test part
        assert!(snap.split_train_test(1.0).is_err());
        // fraction too small for a 2-column train part
        assert!(snap.split_train_test(0.3).is_err());
        // one held-out column is fine
        let (train, test) = snap.split_train_test(0.9).unwrap();
        assert_eq!(train.samples(), 3);
        assert_eq!(test.samples(), 1);
    }

    #[test]
    fn energy_curve_single_value() {
        let c = cumulative_energy(&[5.0]).unwrap();
        assert_eq!(c.fractions(), &[1.0]);
    }

    #[test]
    fn energy_curve_equal_values() {
        let c = cumulative_energy(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.fractions(), &[0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn energy_curve_rejects_unsorted() {
        assert!(cumulative_energy(&[3.0, 4.0]).is_err());
    }

    #[test]
    fn energy_curve_rejects_all_zero() {
        assert!(cumulative_energy(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn energy_rank_guidance_finds_the_threshold() {
        let c = cumulative_energy(&[3.0, 2.0, 1.0, 0.5]).unwrap();
        // fractions: 9/14.25, 13/14.25, 14/14.25, 1
        assert_eq!(c.rank_for(0.6), 1);
        assert_eq!(c.rank_for(0.9), 2);
        assert_eq!(c.rank_for(1.0), 4);
    }

    #[test]
    fn noise_is_reproducible() {
        let snap = small_snap();
        let a = snap.with_noise(0.1, 42).unwrap();
        let b = snap.with_noise(0.1, 42).unwrap();
        let c = snap.with_noise(0.1, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn pgm_round_trip_and_roi() {
        let dir = tempfile::tempdir().unwrap();
        for (idx, base) in [10u8, 20u8].iter().enumerate() {
            let pixels: Vec<u8> = (0..6).map(|p| base + p as u8).collect();
            write_pgm(&dir.path().join(format!("f{idx:03}.pgm")), 3, 2, &pixels).unwrap();
        }
        let roi = PixelRoi {
            x: 1,
            y: 0,
            width: 2,
            height: 2,
        };
        let snap = load_frame_sequence(dir.path(), roi, 0.01, false, 2).unwrap();
        assert_eq!(snap.channels(), 4);
        assert_eq!(snap.samples(), 2);
        // row-major flattening: (0,1),(0,2),(1,1),(1,2) of each frame
        assert_eq!(snap.data()[(0, 0)], 11.0);
        assert_eq!(snap.data()[(1, 0)], 12.0);
        assert_eq!(snap.data()[(2, 0)], 14.0);
        assert_eq!(snap.data()[(3, 1)], 25.0);
    }

    #[test]
    fn constant_frames_mean_subtract_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        for idx in 0..3 {
            write_pgm(&dir.path().join(format!("f{idx:03}.pgm")), 2, 2, &[7; 4]).unwrap();
        }
        let roi = PixelRoi {
            x: 0,
            y: 0,
            width: 2,
            height: 2,
        };
        let snap = load_frame_sequence(dir.path(), roi, 0.01, true, 1).unwrap();
        assert!(snap.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_p5_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.pgm"), b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
        std::fs::write(dir.path().join("b.pgm"), b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
        let roi = PixelRoi {
            x: 0,
            y: 0,
            width: 2,
            height: 2,
        };
        let err = load_frame_sequence(dir.path(), roi, 0.01, false, 1).unwrap_err();
        assert!(err.to_string().contains("P5"), "{err}");
    }

    #[test]
    fn empty_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let roi = PixelRoi {
            x: 0,
            y: 0,
            width: 1,
            height: 1,
        };
        let err = load_frame_sequence(dir.path(), roi, 0.01, false, 1).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn mismatched_frame_sizes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_pgm(&dir.path().join("a.pgm"), 2, 2, &[0; 4]).unwrap();
        write_pgm(&dir.path().join("b.pgm"), 3, 2, &[0; 6]).unwrap();
        let roi = PixelRoi {
            x: 0,
            y: 0,
            width: 2,
            height: 2,
        };
        let err = load_frame_sequence(dir.path(), roi, 0.01, false, 1).unwrap_err();
        assert!(err.to_string().contains("expected"), "{err}");
    }
}
