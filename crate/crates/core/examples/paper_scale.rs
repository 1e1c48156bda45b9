use modal_sentinel::beam::*;
use modal_sentinel::dmd::DmdModel;
use modal_sentinel::snapshots::*;
use std::time::Instant;

fn main() {
    // paper-scale: 1200 pixel channels, 2700 frames at 1 kHz, rank 150
    let spec = BeamSpec::default();
    let basis = ModalBasis::assemble(&spec, 6).unwrap();
    let ic = InitialCondition::tip_static(&spec, 0.05, 2001).unwrap();
    let grid: Vec<f64> = (0..1200).map(|i| 1e-4 + spec.length * i as f64 / 1250.0).collect();
    let t0 = Instant::now();
    let snap = basis.synthesize_response(&spec, &ic, &grid, &TimeGrid::new(1e-3, 2700).unwrap()).unwrap();
    println!("synthesis {:?}", t0.elapsed());
    // quantize to 8-bit like video
    let lo = snap.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = snap.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gain = 235.0 / (hi - lo);
    let mut q = snap.data().map(|v| (gain * (v - lo) + 10.0).round());
    // temporal mean removal per channel, as the ingest path offers
    for i in 0..q.nrows() {
        let mean = (0..q.ncols()).map(|j| q[(i, j)]).sum::<f64>() / q.ncols() as f64;
        for j in 0..q.ncols() { q[(i, j)] -= mean; }
    }
    let snap = SnapshotMatrix::new(q, 1e-3, None, SnapshotSource::Frames).unwrap();
    let snap = delay_embed(&snap, 2).unwrap();
    let t0 = Instant::now();
    let (train, _) = snap.split_train_test(0.6).unwrap();
    let mut model = DmdModel::fit_series(&train, 150).unwrap();
    println!("fit rank {} in {:?}", model.rank(), t0.elapsed());
    let t0 = Instant::now();
    let err = model.evaluate_reconstruction(&snap, train.samples()).unwrap();
    println!("evolve+rmse {:?}: train {:.3e} predict {:.3e} (intensity counts)", t0.elapsed(), err.train, err.predict);
    let spectrum = model.continuous_spectrum().unwrap();
    let dom = model.select_dominant(5).unwrap();
    for &i in &dom {
        println!("dominant f = {:.3} Hz, growth {:.3}", spectrum[i].frequency_hz, spectrum[i].growth_rate);
    }
}
