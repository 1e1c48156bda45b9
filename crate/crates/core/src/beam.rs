//! Analytic Euler-Bernoulli cantilever synthesis.
//!
//! Solves the clamped-free characteristic equation, evaluates the closed-form
//! eigenfunctions, assembles modal mass/damping/stiffness by quadrature,
//! projects initial conditions, and synthesizes damped free-vibration
//! displacement fields. A parametric damage model perturbs frequencies and
//! mode-shape curvature without any finite-element dependency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snapshots::{SnapshotMatrix, SnapshotSource};

/// Default number of retained modes.
pub const DEFAULT_MODE_COUNT: usize = 6;

/// Default number of composite-Simpson quadrature points.
pub const DEFAULT_QUADRATURE_POINTS: usize = 2001;

/// Default global sensitivity of the frequency knockdown in [`apply_damage`].
pub const DEFAULT_FREQUENCY_SENSITIVITY: f64 = 0.05;

/// Geometry, material, and distributed damping of a uniform cantilever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    /// Beam length (m).
    pub length: f64,
    /// Cross-section area (m^2).
    pub cross_section_area: f64,
    /// Second moment of area (m^4).
    pub second_moment: f64,
    /// Young's modulus (Pa).
    pub youngs_modulus: f64,
    /// Material density (kg/m^3).
    pub density: f64,
    /// Distributed viscous damping coefficient (N s / m^2).
    pub damping_coefficient: f64,
}

impl Default for BeamSpec {
    /// Polypropylene cantilever, 0.8 m span, 25.4 mm square section.
    ///
    /// The damping coefficient is chosen so the first-mode damping ratio is
    /// approximately 1%; the resulting fundamental period is about 0.128 s.
    fn default() -> Self {
        BeamSpec {
            length: 0.8,
            cross_section_area: 0.0254 * 0.0254,
            second_moment: 0.0254_f64.powi(4) / 12.0,
            youngs_modulus: 1.35e9,
            density: 905.0,
            damping_coefficient: 0.575,
        }
    }
}

impl BeamSpec {
    /// Check positivity/finiteness of every field; damping may be zero.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("cross_section_area", self.cross_section_area),
            ("second_moment", self.second_moment),
            ("youngs_modulus", self.youngs_modulus),
            ("density", self.density),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::validation(format!(
                    "beam field `{name}` must be finite and strictly positive, got {value}"
                )));
            }
        }
        if !self.damping_coefficient.is_finite() || self.damping_coefficient < 0.0 {
            return Err(Error::validation(format!(
                "beam field `damping_coefficient` must be finite and non-negative, got {}",
                self.damping_coefficient
            )));
        }
        Ok(())
    }

    /// sqrt(EI / (rho A)), the dispersion constant linking beta^2 to omega.
    fn wave_speed_constant(&self) -> f64 {
        (self.youngs_modulus * self.second_moment / (self.density * self.cross_section_area)).sqrt()
    }
}

/// Parametric damage description: notch sites along the span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageSpec {
    /// Site positions measured from the fixed end (m).
    pub locations: Vec<f64>,
    /// Dimensionless severities in [0, 1), one per site.
    pub severities: Vec<f64>,
    /// Spatial half-width of each site's curvature perturbation (m).
    pub influence_width: f64,
}

impl DamageSpec {
    /// Validate site lists against the beam length.
    pub fn validate(&self, length: f64) -> Result<()> {
        if self.locations.len() != self.severities.len() {
            return Err(Error::validation(format!(
                "damage locations ({}) and severities ({}) differ in length",
                self.locations.len(),
                self.severities.len()
            )));
        }
        for (i, &x) in self.locations.iter().enumerate() {
            if !x.is_finite() || x <= 0.0 || x >= length {
                return Err(Error::validation(format!(
                    "damage location {i} = {x} outside the open span (0, {length})"
                )));
            }
        }
        for (i, &s) in self.severities.iter().enumerate() {
            if !s.is_finite() || !(0.0..1.0).contains(&s) {
                return Err(Error::validation(format!(
                    "damage severity {i} = {s} outside [0, 1)"
                )));
            }
        }
        if !self.influence_width.is_finite() || self.influence_width <= 0.0 {
            return Err(Error::validation(format!(
                "damage influence_width must be positive, got {}",
                self.influence_width
            )));
        }
        Ok(())
    }

    fn is_null(&self) -> bool {
        self.severities.iter().all(|&s| s == 0.0)
    }
}

/// One closed-form cantilever eigenfunction.
///
/// The hyperbolic terms are evaluated in exponential form with the
/// coefficient (1 - sigma)/2 computed cancellation-free, so shapes stay
/// accurate at large wavenumbers where cosh and sigma*sinh nearly cancel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AnalyticShape {
    beta: f64,
    sigma: f64,
    coef_grow: f64,
    coef_decay: f64,
    zero_residue: f64,
}

impl AnalyticShape {
    fn new(beta: f64, length: f64) -> Self {
        let a = beta * length;
        let denom = a.sinh() + a.sin();
        let sigma = (a.cosh() + a.cos()) / denom;
        // 1 - sigma without subtracting two near-equal O(e^a) quantities
        let sigma_comp = (-(-a).exp() + a.sin() - a.cos()) / denom;
        let coef_grow = 0.5 * sigma_comp;
        let coef_decay = 0.5 * (1.0 + sigma);
        AnalyticShape {
            beta,
            sigma,
            coef_grow,
            coef_decay,
            zero_residue: coef_grow + coef_decay - 1.0,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let t = self.beta * x;
        self.coef_grow * t.exp() + self.coef_decay * (-t).exp() - t.cos() + self.sigma * t.sin()
            - self.zero_residue
    }

    fn curvature(&self, x: f64) -> f64 {
        let t = self.beta * x;
        self.beta
            * self.beta
            * (self.coef_grow * t.exp() + self.coef_decay * (-t).exp() + t.cos()
                - self.sigma * t.sin())
    }
}

/// Spatial shape of a mode: a weighted combination of analytic cantilever
/// eigenfunctions. A healthy mode is a single unit-weight component; damage
/// perturbation blends in neighbouring eigenfunctions, which keeps the
/// clamped-end conditions exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeShape {
    components: Vec<WeightedShape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeightedShape {
    weight: f64,
    shape: AnalyticShape,
}

impl ModeShape {
    /// Build the analytic shape for wavenumber `beta` on a beam of `length`.
    pub fn cantilever(beta: f64, length: f64) -> Self {
        ModeShape {
            components: vec![WeightedShape {
                weight: 1.0,
                shape: AnalyticShape::new(beta, length),
            }],
        }
    }

    /// Shape coefficient sigma_k of the leading closed-form component.
    pub fn sigma(&self) -> f64 {
        self.components[0].shape.sigma
    }

    /// Displacement value at position x.
    pub fn eval(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.shape.eval(x))
            .sum()
    }

    /// Second spatial derivative at position x.
    pub fn curvature(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.shape.curvature(x))
            .sum()
    }

    fn eval_on(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&x| self.eval(x)).collect()
    }

    /// Accumulate `factor` times another shape, merging equal-wavenumber
    /// components so repeated damage applications stay compact.
    fn add_scaled(&mut self, other: &ModeShape, factor: f64) {
        for c in &other.components {
            match self
                .components
                .iter_mut()
                .find(|mine| mine.shape.beta == c.shape.beta)
            {
                Some(mine) => mine.weight += factor * c.weight,
                None => self.components.push(WeightedShape {
                    weight: factor * c.weight,
                    shape: c.shape.clone(),
                }),
            }
        }
    }

    fn rescale(&mut self, factor: f64) {
        for c in &mut self.components {
            c.weight *= factor;
        }
    }
}

/// One vibration mode: spectral quantities plus the spatial shape.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamMode {
    /// Wavenumber beta_k (1/m).
    pub wavenumber: f64,
    /// Undamped natural frequency omega_k (rad/s).
    pub natural_frequency: f64,
    /// Damping ratio zeta_k.
    pub damping_ratio: f64,
    /// Modal mass (kg).
    pub modal_mass: f64,
    /// Modal damping (kg/s).
    pub modal_damping: f64,
    /// Modal stiffness (N/m).
    pub modal_stiffness: f64,
    /// Spatial shape phi_k.
    pub shape: ModeShape,
}

impl BeamMode {
    /// Damped natural frequency omega_k sqrt(1 - zeta_k^2) (rad/s).
    pub fn damped_frequency(&self) -> f64 {
        self.natural_frequency * (1.0 - self.damping_ratio * self.damping_ratio).sqrt()
    }
}

/// The modal decomposition of a cantilever: ordered modes over one span.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    length: f64,
    modes: Vec<BeamMode>,
}

/// Modal initial-condition coefficients: q_k(t) multiplies
/// cos(omega_dk t) by `cosine` and sin(omega_dk t) by `sine`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalAmplitude {
    pub cosine: f64,
    pub sine: f64,
}

/// Initial displacement and velocity sampled on a shared spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    grid: Vec<f64>,
    displacement: Vec<f64>,
    velocity: Vec<f64>,
}

impl InitialCondition {
    /// Validate grid/sample consistency and the clamped-end displacement.
    pub fn new(grid: Vec<f64>, displacement: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::validation(
                "initial condition needs at least 2 grid points",
            ));
        }
        if grid.len() != displacement.len() || grid.len() != velocity.len() {
            return Err(Error::validation(format!(
                "initial condition arrays disagree: grid {}, displacement {}, velocity {}",
                grid.len(),
                displacement.len(),
                velocity.len()
            )));
        }
        if grid[0].abs() > 1e-12 {
            return Err(Error::validation(format!(
                "initial-condition grid must start at the clamped end x = 0, got {}",
                grid[0]
            )));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "initial-condition grid must be strictly increasing",
            ));
        }
        let w_max = displacement.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        if displacement[0].abs() > 1e-9 * w_max.max(1e-300) {
            return Err(Error::validation(format!(
                "clamped end requires w0(0) = 0, got {}",
                displacement[0]
            )));
        }
        Ok(InitialCondition {
            grid,
            displacement,
            velocity,
        })
    }

    /// Static deflection under a tip load, scaled to `tip` metres at x = L,
    /// released from rest: w0 = tip * x^2 (3L - x) / (2 L^3), v0 = 0.
    pub fn tip_static(spec: &BeamSpec, tip: f64, samples: usize) -> Result<Self> {
        spec.validate()?;
        if samples < 2 {
            return Err(Error::validation("tip_static needs at least 2 samples"));
        }
        if !tip.is_finite() {
            return Err(Error::validation("tip displacement must be finite"));
        }
        let el = spec.length;
        let grid: Vec<f64> = (0..samples)
            .map(|i| el * i as f64 / (samples - 1) as f64)
            .collect();
        let displacement = grid
            .iter()
            .map(|&x| tip * x * x * (3.0 * el - x) / (2.0 * el * el * el))
            .collect();
        let velocity = vec![0.0; samples];
        InitialCondition::new(grid, displacement, velocity)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn displacement(&self) -> &[f64] {
        &self.displacement
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }
}

/// Uniformly spaced sample instants t_j = j dt, j = 0..count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    count: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, count: usize) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::validation(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if count < 2 {
            return Err(Error::validation("time grid needs at least 2 samples"));
        }
        Ok(TimeGrid { dt, count })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// First `mode_count` roots of cos(bL) cosh(bL) + 1 = 0, returned as beta_k.
///
/// Bisection on the scaled residual cos(x) + sech(x), which has the same
/// roots and sign but stays O(1) at large x, inside brackets of half-width 1
/// centred on the asymptotes (2k - 1) pi / 2.
pub fn solve_wavenumbers(spec: &BeamSpec, mode_count: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if mode_count == 0 {
        return Err(Error::validation("mode_count must be at least 1"));
    }
    let mut betas = Vec::with_capacity(mode_count);
    for k in 1..=mode_count {
        let x = solve_characteristic_root(k)?;
        betas.push(x / spec.length);
    }
    Ok(betas)
}

/// Scaled characteristic residual: (cos x cosh x + 1) / cosh x.
pub fn characteristic_residual(x: f64) -> f64 {
    x.cos() + 1.0 / x.cosh()
}

fn solve_characteristic_root(k: usize) -> Result<f64> {
    let center = (2.0 * k as f64 - 1.0) * std::f64::consts::FRAC_PI_2;
    let mut a = center - 1.0;
    let mut b = center + 1.0;
    let mut fa = characteristic_residual(a);
    let fb = characteristic_residual(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numerical(format!(
            "characteristic-equation bracket for mode {k} does not straddle a root"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = characteristic_residual(mid);
        if fm == 0.0 || (b - a) <= 4.0 * f64::EPSILON * center {
            break;
        }
        if fa.signum() == fm.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let x = 0.5 * (a + b);
    if characteristic_residual(x).abs() >= 1e-10 {
        return Err(Error::numerical(format!(
            "characteristic root for mode {k} did not converge within the iteration cap"
        )));
    }
    Ok(x)
}

/// Composite Simpson quadrature on [a, b] with an odd number of points.
pub(crate) fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize) -> f64 {
    debug_assert!(points >= 3 && points % 2 == 1);
    let h = (b - a) / (points - 1) as f64;
    let mut sum = f(a) + f(b);
    for i in 1..points - 1 {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * i as f64);
    }
    sum * h / 3.0
}

impl ModalBasis {
    /// Solve wavenumbers and fill modal parameters for the first
    /// `mode_count` modes with the default quadrature resolution.
    pub fn assemble(spec: &BeamSpec, mode_count: usize) -> Result<Self> {
        Self::assemble_with_quadrature(spec, mode_count, DEFAULT_QUADRATURE_POINTS)
    }

    /// As [`ModalBasis::assemble`] with an explicit Simpson point count.
    pub fn assemble_with_quadrature(
        spec: &BeamSpec,
        mode_count: usize,
        quadrature_points: usize,
    ) -> Result<Self> {
        if quadrature_points < 3 || quadrature_points.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "quadrature_points must be odd and >= 3, got {quadrature_points}"
            )));
        }
        let betas = solve_wavenumbers(spec, mode_count)?;
        let c = spec.wave_speed_constant();
        let mut modes = Vec::with_capacity(mode_count);
        for (idx, &beta) in betas.iter().enumerate() {
            let shape = ModeShape::cantilever(beta, spec.length);
            let omega = beta * beta * c;
            let mode = finish_mode(spec, shape, beta, omega, quadrature_points, idx)?;
            modes.push(mode);
        }
        Ok(ModalBasis {
            length: spec.length,
            modes,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[BeamMode] {
        &self.modes
    }

    pub fn mode(&self, index: usize) -> Result<&BeamMode> {
        self.modes.get(index).ok_or_else(|| {
            Error::validation(format!(
                "mode index {index} out of range (basis holds {})",
                self.modes.len()
            ))
        })
    }

    /// Evaluate mode `index` (0-based) on `positions`, all within [0, L].
    pub fn evaluate_mode(&self, index: usize, positions: &[f64]) -> Result<Vec<f64>> {
        let mode = self.mode(index)?;
        for &x in positions {
            if !(0.0..=self.length).contains(&x) {
                return Err(Error::validation(format!(
                    "position {x} outside the beam domain [0, {}]",
                    self.length
                )));
            }
        }
        Ok(mode.shape.eval_on(positions))
    }

    /// Project initial conditions onto the modes, yielding per-mode cosine
    /// and sine coefficients of the damped response.
    ///
    /// Quadrature runs on the supplied grid: composite Simpson when the grid
    /// is uniform with an odd point count, trapezoid otherwise. The grid must
    /// resolve every retained mode with at least 10 points per wavelength.
    pub fn project_initial_conditions(
        &self,
        spec: &BeamSpec,
        ic: &InitialCondition,
    ) -> Result<Vec<ModalAmplitude>> {
        spec.validate()?;
        let grid = ic.grid();
        let last = *grid.last().expect("validated grid");
        if (last - self.length).abs() > 1e-6 * self.length {
            return Err(Error::validation(format!(
                "initial-condition grid must span the full beam: ends at {last}, expected {}",
                self.length
            )));
        }
        let h_max = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0_f64, f64::max);
        for (idx, mode) in self.modes.iter().enumerate() {
            let wavelength = 2.0 * std::f64::consts::PI / mode.wavenumber;
            if wavelength / h_max < 10.0 {
                return Err(Error::validation(format!(
                    "initial-condition grid too coarse for mode {}: {:.2} points per wavelength, need >= 10",
                    idx + 1,
                    wavelength / h_max
                )));
            }
        }

        let rho_a = spec.density * spec.cross_section_area;
        let mut out = Vec::with_capacity(self.modes.len());
        for mode in &self.modes {
            let shape_vals = mode.shape.eval_on(grid);
            let disp: Vec<f64> = shape_vals
                .iter()
                .zip(ic.displacement())
                .map(|(p, w)| p * w)
                .collect();
            let vel: Vec<f64> = shape_vals
                .iter()
                .zip(ic.velocity())
                .map(|(p, v)| p * v)
                .collect();
            let a_k = rho_a * integrate_on_grid(grid, &disp) / mode.modal_mass;
            let v_k = rho_a * integrate_on_grid(grid, &vel) / mode.modal_mass;
            let omega_d = mode.damped_frequency();
            let b_k = (v_k + mode.damping_ratio * mode.natural_frequency * a_k) / omega_d;
            out.push(ModalAmplitude {
                cosine: a_k,
                sine: b_k,
            });
        }
        Ok(out)
    }

    /// Synthesize the damped modal sum on `grid` x `times`.
    ///
    /// w(x, t) = sum_k phi_k(x) e^{-zeta_k omega_k t}
    ///           [A_k cos(omega_dk t) + B_k sin(omega_dk t)]
    pub fn synthesize_response(
        &self,
        spec: &BeamSpec,
        ic: &InitialCondition,
        grid: &[f64],
        times: &TimeGrid,
    ) -> Result<SnapshotMatrix> {
        if grid.len() < 2 {
            return Err(Error::validation("synthesis grid needs at least 2 points"));
        }
        for &x in grid {
            if !(0.0..=self.length).contains(&x) {
                return Err(Error::validation(format!(
                    "synthesis grid point {x} outside [0, {}]",
                    self.length
                )));
            }
        }
        let amplitudes = self.project_initial_conditions(spec, ic)?;

        let n = grid.len();
        let m = times.count();
        let shapes: Vec<Vec<f64>> = self.modes.iter().map(|md| md.shape.eval_on(grid)).collect();
        let mut data = nalgebra::DMatrix::<f64>::zeros(n, m);
        for j in 0..m {
            let t = times.dt() * j as f64;
            for (k, (mode, amp)) in self.modes.iter().zip(&amplitudes).enumerate() {
                let decay = (-mode.damping_ratio * mode.natural_frequency * t).exp();
                let omega_d = mode.damped_frequency();
                let q = decay * (amp.cosine * (omega_d * t).cos() + amp.sine * (omega_d * t).sin());
                let shape = &shapes[k];
                for i in 0..n {
                    data[(i, j)] += shape[i] * q;
                }
            }
        }
        SnapshotMatrix::new(
            data,
            times.dt(),
            Some(grid.to_vec()),
            SnapshotSource::Simulation,
        )
    }
}

fn finish_mode(
    spec: &BeamSpec,
    shape: ModeShape,
    beta: f64,
    omega: f64,
    quadrature_points: usize,
    index: usize,
) -> Result<BeamMode> {
    let rho_a = spec.density * spec.cross_section_area;
    let ei = spec.youngs_modulus * spec.second_moment;
    let shape_sq = simpson(
        |x| shape.eval(x).powi(2),
        0.0,
        spec.length,
        quadrature_points,
    );
    let curv_sq = simpson(
        |x| shape.curvature(x).powi(2),
        0.0,
        spec.length,
        quadrature_points,
    );
    let modal_mass = rho_a * shape_sq;
    let modal_damping = spec.damping_coefficient * shape_sq;
    let modal_stiffness = ei * curv_sq;
    let damping_ratio = modal_damping / (2.0 * modal_mass * omega);
    if damping_ratio >= 1.0 {
        return Err(Error::validation(format!(
            "mode {} is not underdamped: zeta = {damping_ratio:.4}; reduce damping_coefficient",
            index + 1
        )));
    }
    Ok(BeamMode {
        wavenumber: beta,
        natural_frequency: omega,
        damping_ratio,
        modal_mass,
        modal_damping,
        modal_stiffness,
        shape,
    })
}

/// Trapezoid on an arbitrary ascending grid; composite Simpson when the grid
/// is uniform (relative spacing spread < 1e-9) with an odd point count.
fn integrate_on_grid(grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    let h0 = grid[1] - grid[0];
    let uniform = grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-9 * h0);
    if uniform && n % 2 == 1 && n >= 3 {
        let mut sum = values[0] + values[n - 1];
        for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
            sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        return sum * h0 / 3.0;
    }
    let mut sum = 0.0;
    for i in 0..n - 1 {
        sum += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
    }
    sum
}

/// Fraction of local stiffness loss beyond which the anomaly saturates.
const MAX_STIFFNESS_LOSS: f64 = 0.95;

/// Perturb a basis according to `damage`.
///
/// Each site contributes a Gaussian stiffness-loss profile
/// s_j exp(-(x - x_j)^2 / (2 w^2)); their sum (saturated at 95% loss) forms
/// the flexural anomaly r(x). Two effects follow:
///
/// (a) each natural frequency is multiplied by
///     prod_j (1 - sensitivity * s_j * phi_k''(x_j)^2 / max_x phi_k''(x)^2),
///     so frequencies never increase;
/// (b) each mode shape is perturbed to first order in the stiffness anomaly:
///     phi_k gains sum_{j != k} [c_jk / (M_j (w_k^2 - w_j^2))] phi_j with
///     couplings c_jk = -integral EI r(x) phi_j'' phi_k'' dx, which leaves a
///     localized severity-proportional curvature deviation near each site
///     while the global shape stays close to healthy.
///
/// The perturbed shape is rescaled to preserve its L2 norm over the span,
/// which keeps modal mass and damping unchanged; damping ratios are
/// refreshed against the knocked-down frequencies and modal stiffness stays
/// consistent via K_k = M_k omega_k^2.
pub fn apply_damage(
    basis: &ModalBasis,
    damage: &DamageSpec,
    sensitivity: f64,
) -> Result<ModalBasis> {
    damage.validate(basis.length)?;
    if !sensitivity.is_finite() || sensitivity < 0.0 {
        return Err(Error::validation(format!(
            "frequency sensitivity must be non-negative, got {sensitivity}"
        )));
    }
    if damage.is_null() {
        return Ok(basis.clone());
    }

    let el = basis.length;
    let points = DEFAULT_QUADRATURE_POINTS;
    let probe: Vec<f64> = (0..points)
        .map(|i| el * i as f64 / (points - 1) as f64)
        .collect();
    let loss = |x: f64| -> f64 {
        let total: f64 = damage
            .locations
            .iter()
            .zip(&damage.severities)
            .map(|(&c, &s)| {
                let u = (x - c) / damage.influence_width;
                s * (-0.5 * u * u).exp()
            })
            .sum();
        total.min(MAX_STIFFNESS_LOSS)
    };

    // flexural rigidity recovered from the stored modal stiffness
    let first = &basis.modes[0];
    let curv_sq = simpson(|x| first.shape.curvature(x).powi(2), 0.0, el, points);
    let ei = first.modal_stiffness / curv_sq;

    // stiffness-anomaly couplings between retained modes
    let count = basis.modes.len();
    let mut couplings = vec![vec![0.0_f64; count]; count];
    #[allow(clippy::needless_range_loop)]
    for j in 0..count {
        for k in j..count {
            let sj = &basis.modes[j].shape;
            let sk = &basis.modes[k].shape;
            let c = -ei
                * simpson(
                    |x| loss(x) * sj.curvature(x) * sk.curvature(x),
                    0.0,
                    el,
                    points,
                );
            couplings[j][k] = c;
            couplings[k][j] = c;
        }
    }

    let mut modes = Vec::with_capacity(count);
    for (k, mode) in basis.modes.iter().enumerate() {
        let max_curv_sq = probe
            .iter()
            .map(|&x| mode.shape.curvature(x).powi(2))
            .fold(0.0_f64, f64::max);
        let mut knockdown = 1.0;
        for (&x_j, &s_j) in damage.locations.iter().zip(&damage.severities) {
            let local_curv = mode.shape.curvature(x_j);
            knockdown *= 1.0 - sensitivity * s_j * local_curv * local_curv / max_curv_sq;
        }

        let mut shape = mode.shape.clone();
        let lambda_k = mode.natural_frequency * mode.natural_frequency;
        for (j, other) in basis.modes.iter().enumerate() {
            if j == k {
                continue;
            }
            let lambda_j = other.natural_frequency * other.natural_frequency;
            let coefficient = couplings[j][k] / (other.modal_mass * (lambda_k - lambda_j));
            shape.add_scaled(&other.shape, coefficient);
        }

        let base_norm_sq = simpson(|x| mode.shape.eval(x).powi(2), 0.0, el, points);
        let raw_norm_sq = simpson(|x| shape.eval(x).powi(2), 0.0, el, points);
        if raw_norm_sq <= 0.0 {
            return Err(Error::numerical(
                "damage perturbation annihilated a mode shape",
            ));
        }
        shape.rescale((base_norm_sq / raw_norm_sq).sqrt());

        let omega = mode.natural_frequency * knockdown;
        let damping_ratio = mode.modal_damping / (2.0 * mode.modal_mass * omega);
        if damping_ratio >= 1.0 {
            return Err(Error::validation(format!(
                "damage drives a mode overdamped: zeta = {damping_ratio:.4}"
            )));
        }
        modes.push(BeamMode {
            wavenumber: mode.wavenumber,
            natural_frequency: omega,
            damping_ratio,
            modal_mass: mode.modal_mass,
            modal_damping: mode.modal_damping,
            modal_stiffness: mode.modal_mass * omega * omega,
            shape,
        });
    }
    Ok(ModalBasis { length: el, modes })
}
