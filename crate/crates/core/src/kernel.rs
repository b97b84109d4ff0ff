//! Memory-kernel entries by Brillouin-zone quadrature.
//!
//! For a block offset `J` and time `t`,
//!
//! ```text
//! Θ₀,J(t) = 1/2π ∫₀^{2π} e^{iJξ} Φ̂ᴴÂΨ₀ cos(Ω̂t) Ω̂⁻² Ψ₀ᴴÂΦ̂ dξ,   Ω̂² = Ψ₀ᴴÂΨ₀
//! ```
//!
//! where `Ψ₀` has orthonormal columns spanning `Ψ̂(ξ)`. At every node the
//! Hermitian matrix `Ω̂²` is diagonalised once; the integrand is then
//! `Σⱼ cos(ωⱼt) |gⱼ|²/ωⱼ²` with `g = Xᴴ Ψ₀ᴴÂΦ̂`, so any number of times and
//! offsets reuse the same per-node spectra.
//!
//! At `t = 0` the complement can be eliminated altogether (Schur complement):
//! the integrand becomes `Φ̂ᴴÂΦ̂ - (Φ̂ᴴÂ⁻¹Φ̂)⁻¹ (Φ̂ᴴΦ̂)²`, evaluated here
//! through the closed-form eigenbasis of `Â` in `O(M log M)` per node.

use std::f64::consts::TAU;
use std::sync::Arc;

use faer::Mat;
use rustfft::{Fft, FftPlanner};

use crate::coarse::{CoarseGraining, WeightingScheme};
use crate::error::{domain, Error, Result};
use crate::lattice::{assemble_blocks, block_wavenumbers, BlockPair, ForceConstants};
use crate::linalg::{self, pairwise_sum, C64};

/// Midpoint rule on `(0, 2π)`: nodes `2π(k + ½)/K`, weights `2π/K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureGrid {
    nodes: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self {
            nodes: Self::DEFAULT_NODES,
        }
    }
}

impl QuadratureGrid {
    pub const DEFAULT_NODES: usize = 2048;

    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < 2 || !nodes.is_power_of_two() {
            return Err(domain(format!(
                "quadrature node count must be a power of two >= 2, got {nodes}"
            )));
        }
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, k: usize) -> f64 {
        TAU * (k as f64 + 0.5) / self.nodes as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nodes).map(|k| self.node(k)).collect()
    }

    pub fn weight(&self) -> f64 {
        TAU / self.nodes as f64
    }

    /// Same rule with twice the nodes.
    pub fn refined(&self) -> Self {
        Self {
            nodes: 2 * self.nodes,
        }
    }

    /// `1/2π Σₖ wₖ f(ξₖ)` from node values in index order.
    pub fn average(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes);
        pairwise_sum(values) / self.nodes as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesAxis {
    Time,
    Space,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSample {
    pub coordinate: f64,
    pub value: f64,
}

/// Sampled kernel entries along time (`Θ₀,₀(t)`) or block offset (`Θ₀,J(0)`).
#[derive(Clone, Debug)]
pub struct KernelSeries {
    pub scheme: WeightingScheme,
    pub block_size: usize,
    pub axis: SeriesAxis,
    pub samples: Vec<KernelSample>,
    pub quadrature: QuadratureGrid,
    pub max_imag_residual: f64,
}

impl KernelSeries {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.coordinate).collect()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .map(|s| (s.coordinate, s.value))
            .collect()
    }

    /// `max_imag_residual <= 1e-10 (1 + max |value|)`.
    pub fn is_real(&self) -> bool {
        let peak = self
            .samples
            .iter()
            .fold(0.0f64, |m, s| m.max(s.value.abs()));
        self.max_imag_residual <= 1e-10 * (1.0 + peak)
    }
}

/// Eigen-data of `Ω̂²(ξ)` at one quadrature node.
#[derive(Clone, Debug)]
pub struct NodeSpectrum {
    pub xi: f64,
    /// Eigenvalues of `Ψ₀ᴴÂΨ₀` (squared frequencies), ascending.
    pub eigenvalues: Vec<f64>,
    /// `|gⱼ|²`, the squared overlaps of `Ψ₀ᴴÂΦ̂` with each eigenvector.
    pub overlaps: Vec<f64>,
}

impl NodeSpectrum {
    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().map(|s| s.sqrt())
    }

    /// Integrand `Σⱼ cos(ωⱼt)|gⱼ|²/ωⱼ²` at time `t`.
    pub fn integrand(&self, t: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.overlaps)
            .map(|(&s, &g)| (s.sqrt() * t).cos() * g / s)
            .sum()
    }
}

/// A stable chain, its blocks and a coarse-graining basis for one block size.
#[derive(Clone)]
pub struct KernelModel {
    fc: ForceConstants,
    blocks: BlockPair,
    cg: CoarseGraining,
    fft: Arc<dyn Fft<f64>>,
    fft_fwd: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KernelModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelModel")
            .field("fc", &self.fc)
            .field("block_size", &self.block_size())
            .field("scheme", &self.scheme())
            .finish()
    }
}

impl KernelModel {
    pub fn new(scheme: WeightingScheme, fc: &ForceConstants, m: usize) -> Result<Self> {
        fc.require_stable()?;
        Self::from_parts(
            *fc,
            assemble_blocks(fc, m)?,
            CoarseGraining::new(scheme, m)?,
        )
    }

    /// Builds a model from explicit blocks and basis, e.g. an alternative
    /// complement or deliberately corrupted blocks.
    pub fn from_parts(fc: ForceConstants, blocks: BlockPair, cg: CoarseGraining) -> Result<Self> {
        fc.require_stable()?;
        let m = blocks.block_size();
        if cg.block_size() != m {
            return Err(domain(format!(
                "basis block size {} does not match blocks ({m})",
                cg.block_size()
            )));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_inverse(m);
        let fft_fwd = planner.plan_fft_forward(m);
        Ok(Self {
            fc,
            blocks,
            cg,
            fft,
            fft_fwd,
        })
    }

    pub fn block_size(&self) -> usize {
        self.blocks.block_size()
    }

    pub fn scheme(&self) -> WeightingScheme {
        self.cg.scheme()
    }

    pub fn force_constants(&self) -> &ForceConstants {
        &self.fc
    }

    pub fn blocks(&self) -> &BlockPair {
        &self.blocks
    }

    pub fn coarse_graining(&self) -> &CoarseGraining {
        &self.cg
    }

    fn symbol_norm(&self, xi: f64) -> f64 {
        block_wavenumbers(self.block_size(), xi)
            .map(|q| self.fc.dispersion(q))
            .fold(0.0, f64::max)
    }

    /// Diagonalises `Ψ₀ᴴÂΨ₀` at one angle.
    pub fn node_spectrum(&self, xi: f64) -> Result<NodeSpectrum> {
        let m = self.block_size();
        let psi = self.cg.psi_orthonormal(xi);
        let a_psi = self.blocks.apply_symbol(xi, psi.as_ref());
        let omega2 = psi.adjoint() * &a_psi;

        let phi = self.cg.phi_hat(xi);
        let phi = Mat::from_fn(m, 1, |i, _| phi[i]);
        let coupling = psi.adjoint() * self.blocks.apply_symbol(xi, phi.as_ref());

        let (eigenvalues, x) = linalg::hermitian_eigen(omega2.as_ref())?;
        let threshold = 1e-13 * self.symbol_norm(xi);
        if eigenvalues[0] < threshold {
            return Err(Error::Singular {
                what: "complement block of the symbol",
                xi,
                eigenvalue: eigenvalues[0],
                threshold,
            });
        }
        let g = x.adjoint() * &coupling;
        let overlaps = (0..m - 1).map(|j| g[(j, 0)].norm_sqr()).collect();
        Ok(NodeSpectrum {
            xi,
            eigenvalues,
            overlaps,
        })
    }

    pub fn spectra(&self, grid: &QuadratureGrid) -> Result<Vec<NodeSpectrum>> {
        linalg::try_map_indexed(grid.len(), |k| self.node_spectrum(grid.node(k)))
    }

    /// `vⱼᴴx` for every closed-form eigenvector `vⱼ` of `Â(ξ)`.
    fn eigenbasis_coefficients(&self, xi: f64, x: &[C64]) -> Vec<C64> {
        let m = self.block_size();
        let scale = 1.0 / (m as f64).sqrt();
        let mut buf: Vec<C64> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| v * C64::from_polar(scale, -(k as f64) * xi / m as f64))
            .collect();
        self.fft.process(&mut buf);
        buf
    }

    /// `Φ̂ᴴÂ⁻¹Φ̂` from the closed-form spectrum of `Â`.
    pub fn inverse_quadratic_form(&self, xi: f64) -> Result<f64> {
        let phi = self.cg.phi_hat(xi);
        let coeffs = self.eigenbasis_coefficients(xi, &phi);
        let mut acc = 0.0;
        for (c, q) in coeffs.iter().zip(block_wavenumbers(self.block_size(), xi)) {
            let lambda = self.fc.dispersion(q);
            if lambda <= 0.0 {
                return Err(Error::Singular {
                    what: "lattice symbol",
                    xi,
                    eigenvalue: lambda,
                    threshold: 0.0,
                });
            }
            acc += c.norm_sqr() / lambda;
        }
        Ok(acc)
    }

    /// Integrand of the complement-free `t = 0` form at one angle.
    pub fn simplified_integrand(&self, xi: f64) -> Result<f64> {
        let phi = self.cg.phi_hat(xi);
        let direct = self.blocks.quadratic_form(xi, &phi);
        let gram = self.cg.phi_gram(xi);
        Ok(direct - gram * gram / self.inverse_quadratic_form(xi)?)
    }

    /// `Θ₀,₀(0)` via the complement-free integrand.
    pub fn theta00_zero_simplified(&self, grid: &QuadratureGrid) -> Result<f64> {
        let values =
            linalg::try_map_indexed(grid.len(), |k| self.simplified_integrand(grid.node(k)))?;
        Ok(grid.average(&values))
    }

    /// First term alone, `1/2π ∫ Φ̂ᴴÂΦ̂ dξ`; the theorem bounds are exactly
    /// this integral.
    pub fn direct_term_average(&self, grid: &QuadratureGrid) -> f64 {
        let values: Vec<f64> = (0..grid.len())
            .map(|k| {
                let xi = grid.node(k);
                self.blocks.quadratic_form(xi, &self.cg.phi_hat(xi))
            })
            .collect();
        grid.average(&values)
    }

    /// The complement-free integrand continued to a complex angle `z`.
    ///
    /// `Φ̂ᴴ` is continued as `(h₁ + e^{iz}h₂)ᵀ`, and `Â(z)⁻¹` is applied
    /// through the similarity `Â(z) = D F Λ(z) Fᴴ D⁻¹` with
    /// `D = diag(e^{ikz/M})` and `F` the unitary DFT. On the real axis this
    /// reproduces [`Self::simplified_integrand`].
    pub fn simplified_integrand_complex(&self, z: C64) -> Result<C64> {
        let m = self.block_size();
        let i = C64::i();
        let (left, right): (Vec<C64>, Vec<C64>) = match &self.cg {
            CoarseGraining::Constant(b) => {
                let q: Vec<C64> = b.q1.iter().map(|&x| C64::new(x, 0.0)).collect();
                (q.clone(), q)
            }
            CoarseGraining::Linear(b) => {
                let (up, down) = ((i * z).exp(), (-i * z).exp());
                b.h1.iter()
                    .zip(&b.h2)
                    .map(|(&a, &c)| (up * c + a, down * c + a))
                    .unzip()
            }
        };
        let direct = self.blocks.bilinear_form(z, &left, &right);
        let gram: C64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();

        let scale = 1.0 / (m as f64).sqrt();
        let mf = m as f64;
        let mut u: Vec<C64> = right
            .iter()
            .enumerate()
            .map(|(k, &r)| r * (-i * z * (k as f64 / mf)).exp() * scale)
            .collect();
        let mut w: Vec<C64> = left
            .iter()
            .enumerate()
            .map(|(k, &l)| l * (i * z * (k as f64 / mf)).exp() * scale)
            .collect();
        self.fft.process(&mut u);
        self.fft_fwd.process(&mut w);
        let mut inverse = C64::new(0.0, 0.0);
        for j in 0..m {
            let lambda = self.fc.dispersion_complex((TAU * j as f64 - z) / mf);
            if lambda.norm() == 0.0 {
                return Err(domain(format!("lattice symbol singular at z = {z}")));
            }
            inverse += w[j] * u[j] / lambda;
        }
        Ok(direct - gram * gram / inverse)
    }

    /// `Θ₀,J(0)` with the midpoint rule on the shifted contour
    /// `ξ + iη`, `ξ ∈ (0, 2π)`. By periodicity and analyticity the integral
    /// is unchanged for `0 ≤ η` below the first singularity, while the
    /// factor `e^{-Jη}` comes out exactly; exponentially small entries are
    /// then resolved to full relative precision instead of drowning in
    /// cancellation. Returns `(Re, |Im|)` for each `J` in `js`.
    pub fn theta0j_zero_shifted(
        &self,
        js: &[i64],
        eta: f64,
        grid: &QuadratureGrid,
    ) -> Result<Vec<(f64, f64)>> {
        let values = linalg::try_map_indexed(grid.len(), |k| {
            self.simplified_integrand_complex(C64::new(grid.node(k), eta))
        })?;
        Ok(js
            .iter()
            .map(|&j| {
                let terms: Vec<C64> = values
                    .iter()
                    .enumerate()
                    .map(|(k, f)| f * C64::from_polar(1.0, j as f64 * grid.node(k)))
                    .collect();
                let avg = linalg::pairwise_sum_complex(&terms) / grid.len() as f64
                    * (-(j as f64) * eta).exp();
                (avg.re, avg.im.abs())
            })
            .collect())
    }

    /// `Θ₀,J(0)` via the complement-free integrand, with the imaginary part.
    pub fn theta0j_zero_simplified(&self, j: i64, grid: &QuadratureGrid) -> Result<(f64, f64)> {
        let values =
            linalg::try_map_indexed(grid.len(), |k| self.simplified_integrand(grid.node(k)))?;
        Ok(fourier_average(grid, &values, j))
    }
}

/// `(Re, Im)` of `1/2π Σₖ wₖ e^{iJξₖ} fₖ`.
fn fourier_average(grid: &QuadratureGrid, values: &[f64], j: i64) -> (f64, f64) {
    let (re, im): (Vec<f64>, Vec<f64>) = values
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let (s, c) = (j as f64 * grid.node(k)).sin_cos();
            (c * f, s * f)
        })
        .unzip();
    (grid.average(&re), grid.average(&im))
}

/// Kernel value with the imaginary residual of its quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub imag_residual: f64,
}

/// `Θ₀,J(t)` from precomputed node spectra.
pub fn integrate_spectra(
    grid: &QuadratureGrid,
    spectra: &[NodeSpectrum],
    j: i64,
    t: f64,
) -> KernelValue {
    let values: Vec<f64> = spectra.iter().map(|s| s.integrand(t)).collect();
    let (value, imag) = fourier_average(grid, &values, j);
    KernelValue {
        value,
        imag_residual: imag.abs(),
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "time must be finite and nonnegative, got {t}"
        )))
    }
}

/// Single kernel entry `Θ_{k,k+J}(t)` (Toeplitz, so only the offset matters).
pub fn theta_entry(
    scheme: WeightingScheme,
    fc: &ForceConstants,
    m: usize,
    j: i64,
    t: f64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    check_time(t)?;
    let model = KernelModel::new(scheme, fc, m)?;
    let spectra = model.spectra(grid)?;
    Ok(integrate_spectra(grid, &spectra, j, t).value)
}

/// `Θ₀,₀(0)` from the complement-free integrand.
pub fn theta00_zero_simplified(
    scheme: WeightingScheme,
    fc: &ForceConstants,
    m: usize,
    grid: &QuadratureGrid,
) -> Result<f64> {
    KernelModel::new(scheme, fc, m)?.theta00_zero_simplified(grid)
}

/// Checks that a time grid is nonnegative, finite and ascending.
pub fn check_time_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(domain("time grid is empty"));
    }
    for &t in times {
        check_time(t)?;
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("time grid must be ascending"));
    }
    Ok(())
}

/// Uniform grid `t_min + i (t_max - t_min)/(steps - 1)`, `i = 0..steps`.
pub fn uniform_times(t_min: f64, t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || t_min.is_nan() || t_max.is_nan() || t_max <= t_min || t_min < 0.0 {
        return Err(domain(format!(
            "invalid time grid: t_min={t_min}, t_max={t_max}, steps={steps}"
        )));
    }
    let dt = (t_max - t_min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| t_min + dt * i as f64).collect())
}

/// Nodes handled sequentially per task before partial sums are combined;
/// fixing it keeps the reduction independent of the thread count.
const NODE_CHUNK: usize = 64;
/// A rotating phasor is re-seeded from `cos`/`sin` this often.
const PHASOR_RESYNC: usize = 64;

fn is_uniform(times: &[f64]) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if dt <= 0.0 {
        return None;
    }
    let scale = times[times.len() - 1].abs().max(1.0);
    times
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (times[0] + dt * i as f64)).abs() <= 1e-12 * scale)
        .then_some(dt)
}

/// Adds `Σⱼ cⱼ cos(ωⱼ tᵢ)` for every time into `out`.
fn accumulate_node(spec: &NodeSpectrum, times: &[f64], uniform_dt: Option<f64>, out: &mut [f64]) {
    for (&s, &g) in spec.eigenvalues.iter().zip(&spec.overlaps) {
        let omega = s.sqrt();
        let c = g / s;
        match uniform_dt {
            Some(dt) => {
                let step = C64::from_polar(1.0, omega * dt);
                let mut phasor = C64::new(0.0, 0.0);
                for (i, o) in out.iter_mut().enumerate() {
                    if i % PHASOR_RESYNC == 0 {
                        phasor = C64::from_polar(1.0, omega * times[i]);
                    } else {
                        phasor *= step;
                    }
                    *o += c * phasor.re;
                }
            }
            None => {
                for (o, &t) in out.iter_mut().zip(times) {
                    *o += c * (omega * t).cos();
                }
            }
        }
    }
}

/// `Θ₀,₀(tᵢ)` for all times from precomputed spectra.
pub fn time_series_from_spectra(
    grid: &QuadratureGrid,
    spectra: &[NodeSpectrum],
    times: &[f64],
) -> Vec<f64> {
    let uniform_dt = is_uniform(times);
    let chunks = spectra.len().div_ceil(NODE_CHUNK);
    let partials: Vec<Vec<f64>> = linalg::map_indexed(chunks, |c| {
        let mut out = vec![0.0; times.len()];
        for spec in &spectra[c * NODE_CHUNK..((c + 1) * NODE_CHUNK).min(spectra.len())] {
            accumulate_node(spec, times, uniform_dt, &mut out);
        }
        out
    });
    (0..times.len())
        .map(|i| {
            let column: Vec<f64> = partials.iter().map(|p| p[i]).collect();
            pairwise_sum(&column) / grid.len() as f64
        })
        .collect()
}

/// Samples `Θ₀,₀(t)` on an ascending nonnegative time grid.
pub fn theta_time_series(
    scheme: WeightingScheme,
    fc: &ForceConstants,
    m: usize,
    times: &[f64],
    grid: &QuadratureGrid,
) -> Result<KernelSeries> {
    check_time_grid(times)?;
    let model = KernelModel::new(scheme, fc, m)?;
    let spectra = model.spectra(grid)?;
    Ok(time_series_with(&model, &spectra, times, grid))
}

pub fn time_series_with(
    model: &KernelModel,
    spectra: &[NodeSpectrum],
    times: &[f64],
    grid: &QuadratureGrid,
) -> KernelSeries {
    let values = time_series_from_spectra(grid, spectra, times);
    KernelSeries {
        scheme: model.scheme(),
        block_size: model.block_size(),
        axis: SeriesAxis::Time,
        samples: times
            .iter()
            .zip(values)
            .map(|(&coordinate, value)| KernelSample { coordinate, value })
            .collect(),
        quadrature: *grid,
        // J = 0: the e^{iJξ} factor is 1 and every node value is real
        max_imag_residual: 0.0,
    }
}

/// Samples `Θ₀,J(0)` for `J = 0..=j_max`.
pub fn theta_spatial_series(
    scheme: WeightingScheme,
    fc: &ForceConstants,
    m: usize,
    j_max: usize,
    grid: &QuadratureGrid,
) -> Result<KernelSeries> {
    if j_max < 1 {
        return Err(domain("J_max must be at least 1"));
    }
    let model = KernelModel::new(scheme, fc, m)?;
    let spectra = model.spectra(grid)?;
    let values: Vec<f64> = spectra.iter().map(|s| s.integrand(0.0)).collect();
    let real_axis: Vec<(f64, f64)> = (0..=j_max as i64)
        .map(|j| fourier_average(grid, &values, j))
        .collect();

    let js: Vec<i64> = (1..=j_max as i64).collect();
    let mut shifted = None;
    let mut eta = contour_shift(&real_axis);
    for _ in 0..4 {
        if eta <= 0.0 {
            break;
        }
        let candidate = model.theta0j_zero_shifted(&js, eta, grid)?;
        if shift_is_consistent(&model, &candidate, eta, grid)? {
            shifted = Some(candidate);
            break;
        }
        eta *= 0.5;
    }
    let shifted = match shifted {
        Some(v) => v,
        None => real_axis[1..]
            .iter()
            .map(|&(re, im)| (re, im.abs()))
            .collect(),
    };

    let mut samples = Vec::with_capacity(j_max + 1);
    samples.push(KernelSample {
        coordinate: 0.0,
        value: real_axis[0].0,
    });
    let mut max_imag = real_axis[0].1.abs();
    for (j, &(re, im)) in shifted.iter().enumerate() {
        max_imag = max_imag.max(im);
        samples.push(KernelSample {
            coordinate: (j + 1) as f64,
            value: re,
        });
    }
    Ok(KernelSeries {
        scheme,
        block_size: m,
        axis: SeriesAxis::Space,
        samples,
        quadrature: *grid,
        max_imag_residual: max_imag,
    })
}

/// Contour shift for the off-diagonal entries: three quarters of the decay
/// rate seen on the real axis, measured over `J ≥ 2` while the entries
/// stay well above roundoff. Zero when there is nothing to measure.
fn contour_shift(real_axis: &[(f64, f64)]) -> f64 {
    let floor = 1e-8 * real_axis[0].0.abs();
    let pts: Vec<(f64, f64)> = real_axis
        .iter()
        .enumerate()
        .skip(2)
        .take_while(|(_, v)| v.0.abs() > floor)
        .take(12)
        .map(|(j, v)| (j as f64, v.0))
        .collect();
    if pts.len() < 3 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.abs().ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.abs().ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let rate = -sxy / sxx;
    if rate > 0.0 {
        0.75 * rate
    } else {
        0.0
    }
}

/// A shift past the first singularity picks up a residue that changes the
/// leading entries at order one; half the shift must reproduce them.
fn shift_is_consistent(
    model: &KernelModel,
    candidate: &[(f64, f64)],
    eta: f64,
    grid: &QuadratureGrid,
) -> Result<bool> {
    let n = candidate.len().min(6);
    let js: Vec<i64> = (1..=n as i64).collect();
    let half = model.theta0j_zero_shifted(&js, 0.5 * eta, grid)?;
    Ok(candidate
        .iter()
        .zip(&half)
        .all(|(a, b)| (a.0 - b.0).abs() <= 1e-8 * a.0.abs().max(b.0.abs())))
}

/// `Θ₀,₀(0)` for each block size via the complement-free integrand.
pub fn blocksize_sweep(
    scheme: WeightingScheme,
    fc: &ForceConstants,
    sizes: &[usize],
    grid: &QuadratureGrid,
) -> Result<Vec<(usize, f64)>> {
    sizes
        .iter()
        .map(|&m| Ok((m, theta00_zero_simplified(scheme, fc, m, grid)?)))
        .collect()
}
