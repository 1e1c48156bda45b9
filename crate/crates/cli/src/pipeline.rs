//! Command implementations: simulate, ingest, fit, baseline, score, report.
//!
//! Every command reads one configuration document and writes canonical
//! artifact names into the output directory, so successive stages find each
//! other without extra flags:
//!
//!   simulate/ingest -> snapshot.csv, snapshot.meta.json, provenance.json
//!   fit             -> model.json, spectrum.csv, energy.csv, reconstruction.csv
//!   baseline        -> baseline.json, baseline_P_*.csv, baseline_features_*.csv,
//!                      features_*.csv
//!   score           -> report.json, features_*.csv, modes.svg,
//!                      eigenvalues.svg, damage_q.svg, energy.svg
//!   report          -> report.md

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use modal_sentinel::beam::{apply_damage, InitialCondition, ModalBasis, TimeGrid};
use modal_sentinel::damage::{
    build_baseline, score, BaselineReference, DamageReport, ModelFingerprint,
};
use modal_sentinel::dmd::{DmdModel, ModelRecord};
use modal_sentinel::error::{Error, Result};
use modal_sentinel::features::{match_modes, DominantProfiles, FeatureKind};
use modal_sentinel::snapshots::{
    cumulative_energy, delay_embed, load_frame_sequence, read_metadata, SnapshotMatrix,
    SnapshotSource,
};

use crate::config::{thread_cap, PipelineConfig, FRAME_RANK_DEFAULT};
use crate::svg::{stack_panels, Chart, PALETTE};

/// Spatial samples used when projecting the initial condition.
const IC_SAMPLES: usize = 2001;

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn snapshot_paths(config: &PipelineConfig, out: &Path) -> (PathBuf, PathBuf) {
    let csv = config
        .io
        .snapshot_csv
        .clone()
        .unwrap_or_else(|| out.join("snapshot.csv"));
    let meta = config
        .io
        .snapshot_meta
        .clone()
        .unwrap_or_else(|| out.join("snapshot.meta.json"));
    (csv, meta)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn info(quiet: bool, message: &str) {
    if !quiet {
        println!("{message}");
    }
}

/// Build the modal basis for this configuration, damaged if so configured.
fn configured_basis(config: &PipelineConfig) -> Result<ModalBasis> {
    let basis = ModalBasis::assemble(&config.beam, config.simulation.mode_count)?;
    match &config.damage {
        Some(d) => apply_damage(&basis, &d.to_spec(), d.frequency_sensitivity),
        None => Ok(basis),
    }
}

pub fn cmd_simulate(config: &PipelineConfig, out: &Path, quiet: bool) -> Result<()> {
    ensure_dir(out)?;
    let basis = configured_basis(config)?;
    let ic =
        InitialCondition::tip_static(&config.beam, config.simulation.tip_displacement, IC_SAMPLES)?;
    let grid = config.simulation_grid();
    let times = TimeGrid::new(config.simulation.dt, config.simulation.sample_count()?)?;
    let clean = basis.synthesize_response(&config.beam, &ic, &grid, &times)?;
    let snap = clean.with_noise(config.simulation.noise_std, config.simulation.seed)?;

    let (csv, meta) = (out.join("snapshot.csv"), out.join("snapshot.meta.json"));
    snap.write_csv(&csv, &meta)?;

    let two_pi = 2.0 * std::f64::consts::PI;
    let provenance = json!({
        "name": config.name,
        "wavenumbers": basis.modes().iter().map(|m| m.wavenumber).collect::<Vec<_>>(),
        "natural_frequencies_rad_s": basis.modes().iter().map(|m| m.natural_frequency).collect::<Vec<_>>(),
        "damped_frequencies_hz": basis.modes().iter().map(|m| m.damped_frequency() / two_pi).collect::<Vec<_>>(),
        "damping_ratios": basis.modes().iter().map(|m| m.damping_ratio).collect::<Vec<_>>(),
        "modal_masses": basis.modes().iter().map(|m| m.modal_mass).collect::<Vec<_>>(),
        "assumptions": [
            "distributed damping coefficient is a stand-in chosen so the first-mode damping ratio is about 1%",
            "initial condition is the static tip-load shape released from rest",
        ],
        "config": serde_json::to_value(config).map_err(|e| Error::validation(e.to_string()))?,
    });
    write_json(&out.join("provenance.json"), &provenance)?;

    info(
        quiet,
        &format!(
            "simulated {} channels x {} samples (dt = {} s) -> {}",
            snap.channels(),
            snap.samples(),
            snap.dt(),
            csv.display()
        ),
    );
    Ok(())
}

pub fn cmd_ingest(config: &PipelineConfig, out: &Path, quiet: bool) -> Result<()> {
    let frames = config.frames.as_ref().ok_or_else(|| {
        Error::validation("ingest requires a `frames` section in the configuration")
    })?;
    ensure_dir(out)?;
    let threads = thread_cap()?;
    let snap = load_frame_sequence(
        &frames.directory,
        frames.roi,
        1.0 / frames.fps,
        frames.mean_subtract,
        threads,
    )?;
    let (csv, meta) = (out.join("snapshot.csv"), out.join("snapshot.meta.json"));
    snap.write_csv(&csv, &meta)?;
    let provenance = json!({
        "name": config.name,
        "source": "frames",
        "channels": snap.channels(),
        "samples": snap.samples(),
        "dt": snap.dt(),
        "decode_threads": threads,
        "config": serde_json::to_value(config).map_err(|e| Error::validation(e.to_string()))?,
    });
    write_json(&out.join("provenance.json"), &provenance)?;
    info(
        quiet,
        &format!(
            "ingested {} frames as {} channels -> {}",
            snap.samples(),
            snap.channels(),
            csv.display()
        ),
    );
    Ok(())
}

/// Embedding dimension: configured, else 2 for simulation/CSV, 1 for frames.
fn effective_embedding(config: &PipelineConfig, source: SnapshotSource) -> usize {
    config
        .identification
        .embedding_dimension
        .unwrap_or(match source {
            SnapshotSource::Frames => 1,
            _ => 2,
        })
}

pub fn cmd_fit(config: &PipelineConfig, out: &Path, quiet: bool) -> Result<()> {
    ensure_dir(out)?;
    let (csv, meta) = snapshot_paths(config, out);
    let snap = SnapshotMatrix::load_csv(&csv, &meta)?;

    let embedding = effective_embedding(config, snap.source());
    let embedded = delay_embed(&snap, embedding)?;
    let (train, _test) = embedded.split_train_test(config.identification.train_fraction)?;

    let feasible = train.channels().min(train.samples() - 1);
    let rank = match config.identification.rank {
        Some(r) => r,
        None => {
            let auto = match snap.source() {
                SnapshotSource::Frames => FRAME_RANK_DEFAULT,
                _ => 2 * config.simulation.mode_count,
            };
            auto.min(feasible)
        }
    };

    let mut model = DmdModel::fit_series(&train, rank)?;
    let errors = model.evaluate_reconstruction(&embedded, train.samples())?;

    let record = ModelRecord::from_model(&model, embedding, snap.channels())?;
    record.save(&out.join("model.json"))?;

    let spectrum = model.continuous_spectrum()?;
    modal_sentinel::dmd::write_spectrum_csv(&spectrum, &out.join("spectrum.csv"))?;

    let energy = cumulative_energy(model.singular_spectrum())?;
    let mut energy_csv = String::from("index,singular_value,cumulative_energy\n");
    for (i, (s, c)) in model
        .singular_spectrum()
        .iter()
        .zip(energy.fractions())
        .enumerate()
    {
        energy_csv.push_str(&format!("{},{:.16e},{:.16e}\n", i + 1, s, c));
    }
    fs::write(out.join("energy.csv"), energy_csv)
        .map_err(|e| Error::io(out.join("energy.csv"), e))?;

    // tip-channel trace: actual vs reconstructed over the full window
    let recon = model.evolve(embedded.samples())?;
    let tip_row = (snap.channels() - 1) * embedding;
    let mut trace = String::from("time,actual_tip,reconstructed_tip\n");
    for j in 0..embedded.samples() {
        trace.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            j as f64 * snap.dt(),
            embedded.data()[(tip_row, j)],
            recon[(tip_row, j)]
        ));
    }
    fs::write(out.join("reconstruction.csv"), trace)
        .map_err(|e| Error::io(out.join("reconstruction.csv"), e))?;

    info(
        quiet,
        &format!(
            "fitted rank {} (requested {}), embedding {}: rmse train {:.3e} / predict {:.3e} / full {:.3e}",
            model.rank(),
            rank,
            embedding,
            errors.train,
            errors.predict,
            errors.full
        ),
    );
    Ok(())
}

/// Uniform spacing of a grid, or an error when the grid is irregular.
fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    let h = grid[1] - grid[0];
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
            return Err(Error::validation("spatial features require a uniform grid"));
        }
    }
    Ok(h)
}

/// Interior grid and spacing of the snapshot the model was fitted on.
fn feature_grid(meta_path: &Path, channels: usize) -> Result<(Vec<f64>, f64)> {
    let meta = read_metadata(meta_path)?;
    match meta.grid {
        Some(grid) => {
            if grid.len() != channels {
                return Err(Error::validation(format!(
                    "metadata grid has {} points but the model spans {channels} channels",
                    grid.len()
                )));
            }
            let h = uniform_spacing(&grid)?;
            Ok((grid[1..grid.len() - 1].to_vec(), h))
        }
        // pixel data: unit pitch, coordinates are channel indices
        None => Ok(((1..channels - 1).map(|i| i as f64).collect(), 1.0)),
    }
}

pub fn cmd_baseline(config: &PipelineConfig, out: &Path, quiet: bool) -> Result<()> {
    let record = ModelRecord::load(&out.join("model.json"))?;
    let model = record.to_model()?;
    let (_, meta_path) = snapshot_paths(config, out);
    let (interior, spacing) = feature_grid(&meta_path, record.source_channels)?;

    let m = config.identification.dominant_modes;
    let profiles = DominantProfiles::extract(&model, m, spacing, record.embedding_dimension)?;
    let sets = profiles.feature_sets()?;
    for fs in &sets {
        fs.write_csv(&interior, &out.join(format!("features_{}.csv", fs.kind())))?;
    }
    let fingerprint = ModelFingerprint {
        rank: model.rank(),
        dt: model.dt(),
        dominant_frequencies: profiles
            .profiles()
            .iter()
            .map(|p| p.frequency_hz())
            .collect(),
    };
    let baseline = build_baseline(
        &sets,
        config.scoring.scaling_constant,
        config.scoring.regularization,
        interior,
        spacing,
        fingerprint.clone(),
    )?;
    baseline.save(out)?;
    info(
        quiet,
        &format!(
            "baseline over {m} modes at {:?} Hz -> {}",
            fingerprint
                .dominant_frequencies
                .iter()
                .map(|f| (f * 100.0).round() / 100.0)
                .collect::<Vec<_>>(),
            out.join("baseline.json").display()
        ),
    );
    Ok(())
}

pub fn cmd_score(config: &PipelineConfig, out: &Path, quiet: bool) -> Result<()> {
    let baseline_dir = config
        .scoring
        .baseline_dir
        .clone()
        .unwrap_or_else(|| out.to_path_buf());
    let baseline = BaselineReference::load(&baseline_dir)?;
    let base_record = ModelRecord::load(&baseline_dir.join("model.json"))?;
    let base_model = base_record.to_model()?;
    let current_record = ModelRecord::load(&out.join("model.json"))?;
    let current_model = current_record.to_model()?;

    let dt_gap = (current_model.dt() - baseline.fingerprint().dt).abs();
    if dt_gap > 1e-12 * baseline.fingerprint().dt {
        return Err(Error::validation(format!(
            "current model dt {} differs from the baseline dt {}",
            current_model.dt(),
            baseline.fingerprint().dt
        )));
    }

    let m = baseline.mode_count();
    let base_profiles = DominantProfiles::extract(
        &base_model,
        m,
        baseline.spacing(),
        base_record.embedding_dimension,
    )?;
    let pool_size = (2 * m).min(current_model.representative_count());
    let pool = DominantProfiles::extract(
        &current_model,
        pool_size,
        baseline.spacing(),
        current_record.embedding_dimension,
    )?;
    let pairing = match_modes(&pool, &base_profiles, &config.scoring.matching)?;

    let mut epsilon_echo = serde_json::Map::new();
    for kind in FeatureKind::all() {
        epsilon_echo.insert(kind.to_string(), json!(baseline.kind(kind).epsilon()));
    }
    let echo = json!({
        "pipeline": serde_json::to_value(config).map_err(|e| Error::validation(e.to_string()))?,
        "dominance_metric": "|b_k| * ||phi_k||, one representative per conjugate pair",
        "effective_epsilon": serde_json::Value::Object(epsilon_echo),
        "baseline_dir": baseline_dir.display().to_string(),
    });

    let mut report = score(&current_model, &pool, &baseline, &pairing, echo)?;
    report
        .kinds
        .retain(|kind, _| config.scoring.feature_kinds.contains(kind));
    report.save(&out.join("report.json"))?;

    let sets = pool.feature_sets()?;
    for fs in &sets {
        fs.write_csv(
            baseline.interior_grid(),
            &out.join(format!("features_{}.csv", fs.kind())),
        )?;
    }

    write_mode_overlays(out, &baseline, &base_profiles, &pool, &pairing)?;
    write_eigenvalue_plot(out, &current_model, &base_model, &pool)?;
    write_q_bars(out, &report)?;
    write_energy_plot(out, &current_model)?;

    for (kind, entry) in &report.kinds {
        info(quiet, &format!("Q[{kind}] = {:.6e}", entry.q));
    }
    info(
        quiet,
        &format!("report -> {}", out.join("report.json").display()),
    );
    Ok(())
}

/// Full grid (interior plus the two endpoints) for profile plots.
fn full_grid(baseline: &BaselineReference) -> Vec<f64> {
    let interior = baseline.interior_grid();
    let h = baseline.spacing();
    let mut grid = Vec::with_capacity(interior.len() + 2);
    grid.push(interior[0] - h);
    grid.extend_from_slice(interior);
    grid.push(interior[interior.len() - 1] + h);
    grid
}

fn write_mode_overlays(
    out: &Path,
    baseline: &BaselineReference,
    base_profiles: &DominantProfiles,
    pool: &DominantProfiles,
    pairing: &modal_sentinel::features::ModeMatch,
) -> Result<()> {
    let grid = full_grid(baseline);
    let mut pairs = pairing.pairs.clone();
    pairs.sort_by_key(|p| p.baseline_position);
    let mut panels = Vec::new();
    for pair in &pairs {
        let healthy = base_profiles.profile(pair.baseline_position)?;
        let current = pool.profile(pair.current_position)?;
        let mut chart = Chart::new(
            &format!(
                "mode at {:.2} Hz (current {:.2} Hz, similarity {:.3})",
                healthy.frequency_hz(),
                current.frequency_hz(),
                pair.similarity
            ),
            "span position",
            "normalized shape",
            640.0,
            220.0,
        );
        let all_y: Vec<f64> = healthy
            .values()
            .iter()
            .chain(current.values())
            .cloned()
            .collect();
        chart.fit_ranges(&grid, &all_y);
        chart.polyline(&grid, healthy.values(), PALETTE[0], 1.6, false);
        chart.polyline(&grid, current.values(), PALETTE[1], 1.6, true);
        chart.legend_entry("healthy", PALETTE[0]);
        chart.legend_entry("current", PALETTE[1]);
        panels.push(chart.render());
    }
    let svg = stack_panels(&panels, 640.0, 220.0);
    fs::write(out.join("modes.svg"), svg).map_err(|e| Error::io(out.join("modes.svg"), e))
}

fn write_eigenvalue_plot(
    out: &Path,
    current: &DmdModel,
    base: &DmdModel,
    pool: &DominantProfiles,
) -> Result<()> {
    let mut chart = Chart::new("discrete-time eigenvalues", "Re", "Im", 480.0, 480.0);
    chart.set_ranges((-1.15, 1.15), (-1.15, 1.15));
    chart.equal_aspect();
    chart.outline_circle((0.0, 0.0), 1.0, "#999999");
    let xs: Vec<f64> = base.eigenvalues().iter().map(|l| l.re).collect();
    let ys: Vec<f64> = base.eigenvalues().iter().map(|l| l.im).collect();
    chart.scatter(&xs, &ys, "#b8b8b8", 3.0);
    let xs: Vec<f64> = current.eigenvalues().iter().map(|l| l.re).collect();
    let ys: Vec<f64> = current.eigenvalues().iter().map(|l| l.im).collect();
    chart.scatter(&xs, &ys, PALETTE[0], 3.0);
    let dom_x: Vec<f64> = pool
        .model_indices()
        .iter()
        .map(|&i| current.eigenvalues()[i].re)
        .collect();
    let dom_y: Vec<f64> = pool
        .model_indices()
        .iter()
        .map(|&i| current.eigenvalues()[i].im)
        .collect();
    chart.scatter(&dom_x, &dom_y, PALETTE[1], 4.5);
    chart.legend_entry("baseline", "#b8b8b8");
    chart.legend_entry("current", PALETTE[0]);
    chart.legend_entry("dominant", PALETTE[1]);
    fs::write(out.join("eigenvalues.svg"), chart.render())
        .map_err(|e| Error::io(out.join("eigenvalues.svg"), e))
}

fn write_q_bars(out: &Path, report: &DamageReport) -> Result<()> {
    let kinds: Vec<_> = report.kinds.keys().cloned().collect();
    let values: Vec<f64> = kinds.iter().map(|k| report.kinds[k].q).collect();
    let top = values.iter().cloned().fold(0.0_f64, f64::max);
    let mut chart = Chart::new("damage index Q by feature kind", "", "Q", 480.0, 320.0);
    chart.set_ranges(
        (0.5, kinds.len() as f64 + 0.5),
        (0.0, (top * 1.1).max(1e-12)),
    );
    chart.bars(&values, PALETTE[2]);
    let labels: Vec<String> = kinds.iter().map(|k| k.to_string()).collect();
    fs::write(
        out.join("damage_q.svg"),
        chart.render_with_x_labels(&labels),
    )
    .map_err(|e| Error::io(out.join("damage_q.svg"), e))
}

fn write_energy_plot(out: &Path, model: &DmdModel) -> Result<()> {
    let energy = cumulative_energy(model.singular_spectrum())?;
    let xs: Vec<f64> = (1..=energy.fractions().len()).map(|i| i as f64).collect();
    let mut chart = Chart::new(
        "cumulative singular-value energy",
        "rank",
        "energy fraction",
        480.0,
        320.0,
    );
    chart.fit_ranges(&xs, energy.fractions());
    chart.polyline(&xs, energy.fractions(), PALETTE[0], 1.6, false);
    let r = model.rank() as f64;
    let at = energy.fractions()[model.rank() - 1];
    chart.scatter(&[r], &[at], PALETTE[1], 4.0);
    chart.legend_entry("selected rank", PALETTE[1]);
    fs::write(out.join("energy.svg"), chart.render())
        .map_err(|e| Error::io(out.join("energy.svg"), e))
}

pub fn cmd_report(dir: &Path, quiet: bool) -> Result<()> {
    let mut candidates: Vec<PathBuf> = Vec::new();
    if dir.join("report.json").is_file() {
        candidates.push(dir.join("report.json"));
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("report.json").is_file())
        .collect();
    subdirs.sort();
    candidates.extend(subdirs.into_iter().map(|d| d.join("report.json")));
    if candidates.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no report.json found in the run directory or its children",
            ),
        ));
    }

    let mut rows = Vec::new();
    for path in &candidates {
        let report = DamageReport::load(path)?;
        let name = report
            .config
            .get("pipeline")
            .and_then(|p| p.get("name"))
            .and_then(|n| n.as_str())
            .map(|s| s.to_string())
            .unwrap_or_else(|| {
                path.parent()
                    .and_then(|p| p.file_name())
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "run".into())
            });
        rows.push((name, report));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));

    let kinds = FeatureKind::all();
    let mut md = String::from("# Damage summary\n\n");
    md.push_str("| run |");
    for kind in kinds {
        md.push_str(&format!(" Q({kind}) |"));
    }
    md.push_str(" avg |lambda| | area(top5) | rmse train | rmse predict |\n");
    md.push_str("|---|");
    for _ in kinds {
        md.push_str("---|");
    }
    md.push_str("---|---|---|---|\n");
    for (name, report) in &rows {
        md.push_str(&format!("| {name} |"));
        for kind in kinds {
            match report.kinds.get(&kind) {
                Some(entry) => md.push_str(&format!(" {:.4e} |", entry.q)),
                None => md.push_str(" - |"),
            }
        }
        md.push_str(&format!(
            " {:.6} | {:.6} | {:.3e} | {:.3e} |\n",
            report.eigen_metrics.avg_distance,
            report.eigen_metrics.enclosed_area_top5,
            report.rmse.train,
            report.rmse.predict
        ));
    }
    let out_path = dir.join("report.md");
    fs::write(&out_path, &md).map_err(|e| Error::io(&out_path, e))?;
    info(quiet, &md);
    info(quiet, &format!("summary -> {}", out_path.display()));
    Ok(())
}
