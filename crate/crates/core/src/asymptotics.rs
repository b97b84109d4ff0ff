//! Closed-form bounds, eigenvalue branches of the complement block, the
//! secular characteristic polynomial, stationary-phase envelopes and
//! decay-rate fits.

use std::f64::consts::{PI, TAU};

use faer::Mat;

use crate::coarse::{constant_basis, WeightingScheme};
use crate::error::{domain, Error, Result};
use crate::kernel::{KernelModel, KernelSeries, QuadratureGrid};
use crate::lattice::{
    analytic_eigenvalues, assemble_blocks, block_wavenumbers, check_xi, ForceConstants,
};
use crate::linalg::{self, C64};

/// Upper bound on `Θ₀,₀(0)` for piecewise-constant weights: `(2κ₁ + 4κ₂)/M`.
pub fn bound_constant(fc: &ForceConstants, m: usize) -> f64 {
    (2.0 * fc.kappa1() + 4.0 * fc.kappa2()) / m as f64
}

/// Upper bound on `Θ₀,₀(0)` for hat weights:
/// `(2Mκ₁ + 8Mκ₂ - 6κ₂) / (M(2M² + 1)/3)`.
pub fn bound_linear(fc: &ForceConstants, m: usize) -> f64 {
    let mf = m as f64;
    (2.0 * mf * fc.kappa1() + 8.0 * mf * fc.kappa2() - 6.0 * fc.kappa2())
        / (mf * (2.0 * mf * mf + 1.0) / 3.0)
}

pub fn bound(scheme: WeightingScheme, fc: &ForceConstants, m: usize) -> f64 {
    match scheme {
        WeightingScheme::PiecewiseConstant => bound_constant(fc, m),
        WeightingScheme::PiecewiseLinear => bound_linear(fc, m),
    }
}

/// Sorted eigenvalues `μⱼ(ξ)` of `Q₂ᵀÂQ₂` (piecewise-constant complement)
/// on an interior midpoint grid.
#[derive(Clone, Debug)]
pub struct EigenBranches {
    pub block_size: usize,
    pub xi_grid: Vec<f64>,
    /// `branches[j][k] = μⱼ(ξₖ)`, ascending in `j` at every node.
    pub branches: Vec<Vec<f64>>,
    /// `gaps[j] = minₖ (μⱼ₊₁ - μⱼ)(ξₖ)`.
    pub gaps: Vec<f64>,
}

impl EigenBranches {
    pub fn min_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max |μⱼ(ξ) - μⱼ(2π - ξ)|`; the midpoint grid is symmetric so node
    /// `k` pairs with node `K - 1 - k`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.xi_grid.len();
        self.branches
            .iter()
            .flat_map(|b| (0..n).map(move |k| (b[k] - b[n - 1 - k]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn values_at(&self, k: usize) -> Vec<f64> {
        self.branches.iter().map(|b| b[k]).collect()
    }
}

/// Eigenvalues of `Q₂ᵀÂ(ξ)Q₂`, ascending.
pub fn complement_eigenvalues(fc: &ForceConstants, m: usize, xi: f64) -> Result<Vec<f64>> {
    let blocks = assemble_blocks(fc, m)?;
    let q2 = linalg::to_complex(constant_basis(m)?.q2.as_ref());
    compressed_eigenvalues(&blocks, &q2, xi)
}

fn compressed_eigenvalues(
    blocks: &crate::lattice::BlockPair,
    q2: &Mat<C64>,
    xi: f64,
) -> Result<Vec<f64>> {
    let b = q2.adjoint() * blocks.apply_symbol(xi, q2.as_ref());
    linalg::hermitian_eigenvalues(b.as_ref())
}

/// Checks `λ₍₀₎ ≤ μ₀ ≤ λ₍₁₎ ≤ … ≤ μ_{M-2} ≤ λ₍M-1₎` up to `tol`.
pub fn check_interlacing(
    xi: f64,
    lambdas_sorted: &[f64],
    mus_sorted: &[f64],
    tol: f64,
) -> Result<()> {
    if lambdas_sorted.len() != mus_sorted.len() + 1 {
        return Err(domain("interlacing needs one more lambda than mu"));
    }
    for (j, &mu) in mus_sorted.iter().enumerate() {
        let (lo, hi) = (lambdas_sorted[j], lambdas_sorted[j + 1]);
        if mu < lo - tol || mu > hi + tol {
            return Err(Error::Interlacing {
                xi,
                detail: format!("mu[{j}] = {mu:e} outside [{lo:e}, {hi:e}]"),
            });
        }
    }
    Ok(())
}

/// Branches on a `grid_size`-node midpoint grid, with interlacing verified
/// at every node.
///
/// For `M <= 4` branches may touch; they are still reported sorted.
pub fn eigen_branches(fc: &ForceConstants, m: usize, grid_size: usize) -> Result<EigenBranches> {
    eigen_branches_with(&assemble_blocks(fc, m)?, fc, grid_size)
}

/// As [`eigen_branches`] but for explicit blocks (which may be corrupted on
/// purpose); the analytic spectrum still comes from `fc`.
pub fn eigen_branches_with(
    blocks: &crate::lattice::BlockPair,
    fc: &ForceConstants,
    grid_size: usize,
) -> Result<EigenBranches> {
    fc.require_stable()?;
    let m = blocks.block_size();
    let grid = QuadratureGrid::new(grid_size)?;
    let q2 = linalg::to_complex(constant_basis(m)?.q2.as_ref());
    let xi_grid = grid.nodes();
    let per_node = linalg::try_map_indexed(grid.len(), |k| {
        let xi = xi_grid[k];
        let mus = compressed_eigenvalues(blocks, &q2, xi)?;
        let mut lambdas = analytic_eigenvalues(fc, m, xi);
        lambdas.sort_by(f64::total_cmp);
        let tol = 1e-10 * lambdas[m - 1];
        check_interlacing(xi, &lambdas, &mus, tol)?;
        Ok(mus)
    })?;
    let branches: Vec<Vec<f64>> = (0..m - 1)
        .map(|j| per_node.iter().map(|mus| mus[j]).collect())
        .collect();
    let gaps = (0..m.saturating_sub(2))
        .map(|j| {
            per_node
                .iter()
                .map(|mus| mus[j + 1] - mus[j])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(EigenBranches {
        block_size: m,
        xi_grid,
        branches,
        gaps,
    })
}

/// Rank-one weights `wⱼ(ξ) = λⱼ|zⱼ|² = (2(1 - cos ξ)/M²)(κ₁ + 2κ₂(1 + cos ξ'ⱼ))`
/// in wavenumber order.
pub fn secular_weights(fc: &ForceConstants, m: usize, xi: f64) -> Vec<f64> {
    let pre = 2.0 * (1.0 - xi.cos()) / (m * m) as f64;
    block_wavenumbers(m, xi)
        .map(|q| pre * (fc.kappa1() + 2.0 * fc.kappa2() * (1.0 + q.cos())))
        .collect()
}

/// Characteristic polynomial of `(I - Q₁Q₁ᵀ)Â(I - Q₁Q₁ᵀ)` in scaled
/// (secular) form, `1 + Σⱼ wⱼ/(μ - λⱼ)`.
///
/// The unscaled polynomial is
/// `∏ⱼ(μ - λⱼ) + Σⱼ wⱼ ∏_{k≠j}(μ - λₖ)`; its roots are `0` and the
/// eigenvalues of `Q₂ᵀÂQ₂`. The scaled form never overflows but has poles at
/// the `λⱼ`.
pub fn char_poly(mu: f64, fc: &ForceConstants, m: usize, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let w = secular_weights(fc, m, xi);
    let lambdas = analytic_eigenvalues(fc, m, xi);
    Ok(1.0
        + w.iter()
            .zip(&lambdas)
            .map(|(w, l)| w / (mu - l))
            .sum::<f64>())
}

/// The unscaled product form; overflows for large `M`, meant for small
/// blocks and cross-checks.
pub fn char_poly_product(mu: f64, fc: &ForceConstants, m: usize, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let w = secular_weights(fc, m, xi);
    let lambdas = analytic_eigenvalues(fc, m, xi);
    let full: f64 = lambdas.iter().map(|l| mu - l).product();
    let rank_one: f64 = (0..m)
        .map(|j| {
            w[j] * lambdas
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, l)| mu - l)
                .product::<f64>()
        })
        .sum();
    Ok(full + rank_one)
}

/// Sign of the unscaled polynomial, evaluated stably as
/// `sign(∏(μ - λⱼ)) · sign(1 + Σ wⱼ/(μ - λⱼ))`.
fn char_poly_sign(mu: f64, w: &[f64], lambdas: &[f64]) -> f64 {
    let mut sign = 1.0;
    let mut secular = 1.0;
    for (wj, l) in w.iter().zip(lambdas) {
        let d = mu - l;
        if d == 0.0 {
            return 0.0;
        }
        if d < 0.0 {
            sign = -sign;
        }
        secular += wj / d;
    }
    sign * secular.signum()
}

/// Whether `μ` is a root of the characteristic polynomial to relative
/// tolerance `rel_tol`: the polynomial changes sign (or vanishes) across
/// `[μ(1 - rel_tol), μ(1 + rel_tol)]`.
pub fn is_char_poly_root(
    mu: f64,
    fc: &ForceConstants,
    m: usize,
    xi: f64,
    rel_tol: f64,
) -> Result<bool> {
    check_xi(xi)?;
    let w = secular_weights(fc, m, xi);
    let lambdas = analytic_eigenvalues(fc, m, xi);
    let lo = char_poly_sign(mu * (1.0 - rel_tol), &w, &lambdas);
    let hi = char_poly_sign(mu * (1.0 + rel_tol), &w, &lambdas);
    Ok(lo * hi <= 0.0)
}

/// `F(ξ) = (Q₁ᵀÂ⁻¹Q₁)⁻¹` for piecewise-constant weights.
pub fn schur_term(fc: &ForceConstants, m: usize, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let model = KernelModel::new(WeightingScheme::PiecewiseConstant, fc, m)?;
    Ok(1.0 / model.inverse_quadratic_form(xi)?)
}

/// `Q₁ᵀ adj(Â) Q₁ = det(Â) · Q₁ᵀÂ⁻¹Q₁`, from the closed-form spectrum.
///
/// `det(Â)` grows geometrically in `M`; intended for small blocks.
pub fn adjugate_form(fc: &ForceConstants, m: usize, xi: f64) -> Result<f64> {
    let det: f64 = analytic_eigenvalues(fc, m, xi).iter().product();
    Ok(det / schur_term(fc, m, xi)?)
}

/// Least-squares fit of `y ≈ C₀ - C₁cos ξ - C₂cos 2ξ`; returns
/// `([C₀, C₁, C₂], max |residual|)`.
pub fn trig_regression(xs: &[f64], ys: &[f64]) -> Result<([f64; 3], f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(domain(
            "trigonometric regression needs at least 3 paired samples",
        ));
    }
    let design = Mat::from_fn(xs.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => -xs[i].cos(),
        _ => -(2.0 * xs[i]).cos(),
    });
    let rhs = Mat::from_fn(ys.len(), 1, |i, _| ys[i]);
    let coef = faer::linalg::solvers::SolveLstsq::solve_lstsq(&design.qr(), &rhs);
    let c = [coef[(0, 0)], coef[(1, 0)], coef[(2, 0)]];
    let fitted = &design * &coef;
    let resid = (0..ys.len())
        .map(|i| (fitted[(i, 0)] - ys[i]).abs())
        .fold(0.0, f64::max);
    Ok((c, resid))
}

/// Stationary-phase data of one branch `ωⱼ(ξ) = √σⱼ(ξ)` of the kernel
/// integrand at `ξ = π`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryPoint {
    pub branch: usize,
    /// `ωⱼ(π)`, the oscillation frequency of the branch's contribution.
    pub frequency: f64,
    /// `ωⱼ''(π)` by 5-point central differences.
    pub curvature: f64,
    /// `ωⱼ'(π)`; should vanish by symmetry.
    pub slope: f64,
    /// `f(π) = |gⱼ|²/ωⱼ²`.
    pub weight: f64,
    /// Relative disagreement of the curvature between steps `h` and `2h`.
    pub richardson_defect: f64,
}

impl StationaryPoint {
    /// Whether the expansion parameter `t|ω''(π)|` has reached one, so that
    /// the stationary region is narrower than the zone around `ξ = π`.
    pub fn is_asymptotic(&self, t: f64) -> bool {
        t * self.curvature.abs() >= 1.0
    }

    /// Amplitude of the branch's contribution to `Θ₀,₀(t)`:
    /// `(1/2π) f(π) √(2π/(t|ω''(π)|))`.
    pub fn amplitude(&self, t: f64) -> f64 {
        stationary_phase_amplitude(self.weight, self.curvature, t) / TAU
    }

    /// Signed leading-order contribution
    /// `(1/2π) Re[f e^{iωt} e^{i sign(ω'')π/4}] √(2π/(t|ω''|))`.
    pub fn contribution(&self, t: f64) -> f64 {
        let phase = self.frequency * t + self.curvature.signum() * PI / 4.0;
        self.amplitude(t) * phase.cos()
    }
}

/// `|f| √(2π/(t|ω''|))`, the leading-order magnitude of
/// `∫ f(x) e^{iω(x)t} dx` from one nondegenerate stationary point.
pub fn stationary_phase_amplitude(f: f64, curvature: f64, t: f64) -> f64 {
    f.abs() * (TAU / (t * curvature.abs())).sqrt()
}

/// Finite-difference step for curvature estimates.
pub const FD_STEP: f64 = TAU / 4096.0;

fn second_difference(values: [f64; 5], h: f64) -> f64 {
    let [m2, m1, c, p1, p2] = values;
    (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h)
}

fn first_difference(values: [f64; 5], h: f64) -> f64 {
    let [m2, m1, _, p1, p2] = values;
    (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
}

/// Stationary points at `ξ = π` for every branch of the given model.
///
/// The curvature is taken with steps `h` and `2h`; their relative
/// disagreement is recorded, not enforced, since near-degenerate branches are
/// expected at the band top.
pub fn stationary_points(model: &KernelModel) -> Result<Vec<StationaryPoint>> {
    let h = FD_STEP;
    let offsets = [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0];
    let spectra = offsets
        .iter()
        .map(|o| model.node_spectrum(PI + o * h))
        .collect::<Result<Vec<_>>>()?;
    let centre = &spectra[3];
    let branches = centre.eigenvalues.len();
    let mut out = Vec::with_capacity(branches);
    for j in 0..branches {
        let w: Vec<f64> = spectra.iter().map(|s| s.eigenvalues[j].sqrt()).collect();
        let fine = [w[1], w[2], w[3], w[4], w[5]];
        let coarse = [w[0], w[1], w[3], w[5], w[6]];
        let curvature = second_difference(fine, h);
        let check = second_difference(coarse, 2.0 * h);
        out.push(StationaryPoint {
            branch: j,
            frequency: w[3],
            curvature,
            slope: first_difference(fine, h),
            weight: centre.overlaps[j] / centre.eigenvalues[j],
            richardson_defect: (curvature - check).abs() / curvature.abs(),
        });
    }
    Ok(out)
}

/// Predicted envelope amplitude of branch `j`'s contribution to `Θ₀,₀(t)`.
pub fn stationary_phase_estimate(
    branch: usize,
    scheme: WeightingScheme,
    fc: &ForceConstants,
    m: usize,
    t: f64,
) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(domain("stationary-phase estimate needs t > 0"));
    }
    let model = KernelModel::new(scheme, fc, m)?;
    let points = stationary_points(&model)?;
    let p = points
        .get(branch)
        .ok_or_else(|| domain(format!("branch {branch} out of range (M - 1 = {})", m - 1)))?;
    if p.curvature.abs() < DEGENERATE_CURVATURE {
        return Err(Error::DegenerateStationaryPoint(p.curvature.abs()));
    }
    if p.richardson_defect > 0.01 {
        return Err(domain(format!(
            "curvature of branch {branch} unresolved: step h and 2h differ by {:.2e} (relative)",
            p.richardson_defect
        )));
    }
    Ok(p.amplitude(t))
}

/// Below this `|ω''(π)|` a stationary point counts as degenerate.
pub const DEGENERATE_CURVATURE: f64 = 1e-10;

/// Predicted envelope of `|Θ₀,₀(t)|`: the summed amplitudes of the branches
/// whose stationary point is in its asymptotic regime at `t`, together with
/// the number of branches that contributed.
pub fn stationary_phase_envelope(points: &[StationaryPoint], t: f64) -> (f64, usize) {
    points
        .iter()
        .filter(|p| p.curvature.abs() >= DEGENERATE_CURVATURE && p.is_asymptotic(t))
        .fold((0.0, 0), |(sum, n), p| (sum + p.amplitude(t), n + 1))
}

/// Branches ordered by decreasing `f(π)/√|ω''(π)|`, i.e. by the size of
/// their late-time contribution.
pub fn dominant_branches(points: &[StationaryPoint]) -> Vec<StationaryPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.amplitude(1.0).total_cmp(&a.amplitude(1.0)));
    sorted
}

/// Stationary-phase prediction against a fitted envelope at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeCheck {
    pub t: f64,
    pub predicted: f64,
    pub fitted: f64,
    pub branches: usize,
}

impl EnvelopeCheck {
    pub fn ratio(&self) -> f64 {
        self.predicted / self.fitted
    }
}

pub fn envelope_comparison(
    points: &[StationaryPoint],
    fit: &DecayFit,
    times: &[f64],
) -> Vec<EnvelopeCheck> {
    times
        .iter()
        .map(|&t| {
            let (predicted, branches) = stationary_phase_envelope(points, t);
            EnvelopeCheck {
                t,
                predicted,
                fitted: fit.predict(t, FitMode::LogLogEnvelope),
                branches,
            }
        })
        .collect()
}

/// `n ≥ 2` points from `lo` to `hi` evenly spaced in `log x`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (step * i as f64).exp()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    /// `log|v|` against `log x` on every sample.
    LogLog,
    /// `log` of the upper envelope of `|v|` (see [`upper_envelope`])
    /// against `log x`.
    LogLogEnvelope,
    /// `log|v|` against `x`.
    LogLinear,
}

impl FitMode {
    pub fn min_samples(self) -> usize {
        match self {
            FitMode::LogLog => 3,
            FitMode::LogLogEnvelope | FitMode::LogLinear => 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Slope: a power-law exponent, or an exponential rate for log-linear.
    pub exponent: f64,
    /// `e^{intercept}`.
    pub prefactor: f64,
    /// RMS residual in log space.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub excluded: usize,
}

impl DecayFit {
    pub fn predict(&self, x: f64, mode: FitMode) -> f64 {
        match mode {
            FitMode::LogLinear => self.prefactor * (self.exponent * x).exp(),
            _ => self.prefactor * x.powf(self.exponent),
        }
    }
}

/// Strict local maxima of `|v|`, at least `min_sep` samples apart (the
/// larger wins on conflict). Endpoints are never maxima.
pub fn envelope_maxima(points: &[(f64, f64)], min_sep: usize) -> Vec<(f64, f64)> {
    let mut picked: Vec<(usize, f64, f64)> = Vec::new();
    for i in 1..points.len().saturating_sub(1) {
        let a = points[i].1.abs();
        if a > points[i - 1].1.abs() && a > points[i + 1].1.abs() {
            match picked.last_mut() {
                Some(last) if i - last.0 < min_sep => {
                    if a > last.2 {
                        *last = (i, points[i].0, a);
                    }
                }
                _ => picked.push((i, points[i].0, a)),
            }
        }
    }
    picked.into_iter().map(|(_, x, a)| (x, a)).collect()
}

/// Peaks of `|v|` that bound the signal from above.
///
/// A sum of many incommensurate oscillations beats, and the plain local
/// maxima then include the small peaks inside each beat, whose heights
/// depend on where the sampling grid falls. When the peak sequence itself
/// oscillates enough to supply at least eight peaks of its own, those
/// second-level peaks are returned; otherwise the first-level peaks are.
pub fn upper_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let peaks = envelope_maxima(points, 2);
    let outer = envelope_maxima(&peaks, 1);
    if outer.len() >= FitMode::LogLogEnvelope.min_samples() {
        outer
    } else {
        peaks
    }
}

/// Least-squares decay fit on samples whose coordinate lies in `window`
/// (inclusive). Nonpositive magnitudes are excluded and counted.
///
/// Without a window the envelope mode uses the last two decades of the
/// coordinate range and the other modes use everything.
pub fn fit_decay(
    points: &[(f64, f64)],
    mode: FitMode,
    window: Option<(f64, f64)>,
) -> Result<DecayFit> {
    let window = match window {
        Some(w) => w,
        None => {
            let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            match mode {
                FitMode::LogLogEnvelope => ((hi / 100.0).max(lo), hi),
                _ => (lo, hi),
            }
        }
    };
    let in_window: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.0 >= window.0 && p.0 <= window.1)
        .collect();
    let candidates = match mode {
        FitMode::LogLogEnvelope => upper_envelope(&in_window),
        _ => in_window,
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0;
    for (x, v) in candidates {
        let a = v.abs();
        let usable_x = match mode {
            FitMode::LogLinear => x.is_finite(),
            _ => x > 0.0 && x.is_finite(),
        };
        if a > 0.0 && a.is_finite() && usable_x {
            xs.push(if mode == FitMode::LogLinear {
                x
            } else {
                x.ln()
            });
            ys.push(a.ln());
        } else {
            excluded += 1;
        }
    }
    if xs.len() < mode.min_samples() {
        return Err(Error::TooFewSamples {
            usable: xs.len(),
            required: mode.min_samples(),
            excluded,
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(domain("decay fit needs at least two distinct coordinates"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(DecayFit {
        exponent: slope,
        prefactor: intercept.exp(),
        residual: (rss / n).sqrt(),
        window,
        samples: xs.len(),
        excluded,
    })
}

/// [`fit_decay`] on a kernel series.
pub fn fit_decay_rate(
    series: &KernelSeries,
    mode: FitMode,
    window: Option<(f64, f64)>,
) -> Result<DecayFit> {
    fit_decay(&series.pairs(), mode, window)
}

/// First coordinate `x ≥ start` at which `|v|·x^power` fails to decrease
/// strictly, or `None` if the damped sequence is decreasing throughout.
pub fn damped_monotonicity_violation(points: &[(f64, f64)], power: i32, start: f64) -> Option<f64> {
    let damped: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 >= start)
        .map(|&(x, v)| (x, v.abs() * x.powi(power)))
        .collect();
    damped.windows(2).find(|w| w[1].1 >= w[0].1).map(|w| w[1].0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{theta_time_series, uniform_times};
    use crate::lattice::symbol;
    use proptest::prelude::*;

    const MORSE: ForceConstants = ForceConstants::MORSE;
    const NEAR: ForceConstants = ForceConstants::NEAR_UNSTABLE;

    #[test]
    fn bound_values() {
        assert!((bound_constant(&MORSE, 16) - 2.299150).abs() < 1e-6);
        assert!((bound_constant(&MORSE, 32) * 2.0 - bound_constant(&MORSE, 16)).abs() < 1e-15);
        let nn = ForceConstants::unchecked(1.0, 0.0);
        assert!((bound_linear(&nn, 2) - 2.0 / 3.0).abs() < 1e-15);
        let r = bound_linear(&MORSE, 1 << 12) / bound_linear(&MORSE, 1 << 11);
        assert!((r - 0.25).abs() < 1e-3);
    }

    #[test]
    fn determinant_lemma_two_by_two() {
        // det(B + uvᵀ) = det B + vᵀ adj(B) u with B = diag(1, 2), u = e₁, v = e₂
        let b = [[1.0, 0.0], [0.0, 2.0]];
        let adj = [[b[1][1], -b[0][1]], [-b[1][0], b[0][0]]];
        let det_b = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let (u, v) = ([1.0, 0.0], [0.0, 1.0]);
        let vt_adj_u: f64 = (0..2)
            .map(|i| (0..2).map(|j| v[i] * adj[i][j] * u[j]).sum::<f64>())
            .sum();
        let updated = [
            [b[0][0] + u[0] * v[0], b[0][1] + u[0] * v[1]],
            [b[1][0] + u[1] * v[0], b[1][1] + u[1] * v[1]],
        ];
        let det_updated = updated[0][0] * updated[1][1] - updated[0][1] * updated[1][0];
        assert_eq!(det_updated, 2.0);
        assert_eq!(det_b + vt_adj_u, 2.0);
    }

    #[test]
    fn hand_worked_char_poly() {
        // M = 2, κ₁ = 1, κ₂ = 0, ξ = 2π/3: λ = {1, 3}, w = {3/4, 3/4}, root 5/2
        let nn = ForceConstants::unchecked(1.0, 0.0);
        let xi = TAU / 3.0;
        let w = secular_weights(&nn, 2, xi);
        assert!(w.iter().all(|w| (w - 0.75).abs() < 1e-15));
        assert!(char_poly_product(2.5, &nn, 2, xi).unwrap().abs() < 1e-14);
        assert!(char_poly_product(0.0, &nn, 2, xi).unwrap().abs() < 1e-14);
        let mus = complement_eigenvalues(&nn, 2, xi).unwrap();
        assert!((mus[0] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn char_poly_roots_are_dense_eigenvalues() {
        for fc in [MORSE, NEAR] {
            let xi = 1.0;
            let mus = complement_eigenvalues(&fc, 6, xi).unwrap();
            for &mu in &mus {
                assert!(is_char_poly_root(mu, &fc, 6, xi, 1e-9).unwrap());
                // product form relative to the size of its terms
                let scale: f64 = analytic_eigenvalues(&fc, 6, xi)
                    .iter()
                    .map(|l| mu.abs() + l)
                    .product();
                assert!(char_poly_product(mu, &fc, 6, xi).unwrap().abs() <= 1e-9 * scale);
            }
            // a point between roots is not flagged
            let mid = 0.5 * (mus[1] + mus[2]);
            assert!(!is_char_poly_root(mid, &fc, 6, xi, 1e-9).unwrap());
            // scaled and product forms agree where both are tame
            let p = char_poly_product(mid, &fc, 6, xi).unwrap();
            let lambdas = analytic_eigenvalues(&fc, 6, xi);
            let s = char_poly(mid, &fc, 6, xi).unwrap()
                * lambdas.iter().map(|l| mid - l).product::<f64>();
            assert!((p - s).abs() <= 1e-10 * p.abs());
        }
    }

    #[test]
    fn weights_match_eigenvector_overlaps() {
        let m = 7;
        let xi = 2.3;
        let w = secular_weights(&MORSE, m, xi);
        let pairs = crate::lattice::analytic_eigenpairs(&MORSE, m, xi).unwrap();
        let q1 = 1.0 / (m as f64).sqrt();
        for (p, wj) in pairs.iter().zip(&w) {
            let z: C64 = p.vector.iter().map(|v| v.conj() * q1).sum();
            assert!((p.lambda * z.norm_sqr() - wj).abs() < 1e-13);
            assert!(*wj > 0.0);
        }
    }

    #[test]
    fn branches_interlace_and_separate() {
        for fc in [MORSE, NEAR] {
            for m in [5, 9, 16] {
                let b = eigen_branches(&fc, m, 256).unwrap();
                assert_eq!(b.branches.len(), m - 1);
                assert!(b.min_gap() > 0.0, "M={m} gap {}", b.min_gap());
                assert!(b.symmetry_defect() < 1e-10);
            }
        }
        // small blocks are allowed to come close; only interlacing is enforced
        eigen_branches(&MORSE, 3, 64).unwrap();
    }

    #[test]
    fn flipped_coupling_breaks_interlacing() {
        let blocks = assemble_blocks(&MORSE, 9).unwrap().with_flipped_a1();
        assert!(matches!(
            eigen_branches_with(&blocks, &MORSE, 64),
            Err(Error::Interlacing { .. })
        ));
    }

    #[test]
    fn schur_term_even_and_trigonometric() {
        for fc in [MORSE, NEAR] {
            for m in [2, 3, 4, 5, 8] {
                let xs: Vec<f64> = QuadratureGrid::new(64).unwrap().nodes();
                let f: Vec<f64> = xs.iter().map(|&x| schur_term(&fc, m, x).unwrap()).collect();
                for k in 0..xs.len() {
                    assert!((f[k] - f[xs.len() - 1 - k]).abs() <= 1e-10 * f[k].abs().max(1.0));
                }
                let adj: Vec<f64> = xs
                    .iter()
                    .map(|&x| adjugate_form(&fc, m, x).unwrap())
                    .collect();
                let scale = adj.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let (c, resid) = trig_regression(&xs, &adj).unwrap();
                assert!(
                    resid <= 1e-8 * scale,
                    "M={m}: residual {resid:e} scale {scale:e}"
                );
                assert!(c[0] > c[1].abs() + c[2].abs());
            }
        }
    }

    #[test]
    fn schur_term_closed_form_small_chain() {
        // κ₁ = 1, κ₂ = 0, M = 2: adj form 3 + cos ξ, det = 2 - 2cos ξ
        let nn = ForceConstants::unchecked(1.0, 0.0);
        for xi in [0.3f64, 1.7, 4.0] {
            let expected = (2.0 - 2.0 * xi.cos()) / (3.0 + xi.cos());
            assert!((schur_term(&nn, 2, xi).unwrap() - expected).abs() < 1e-14);
        }
    }

    /// `∫₀^{2π} e^{it cos ξ} dξ` has stationary points at 0 and π.
    #[test]
    fn stationary_phase_reproduces_bessel_integral() {
        let n = 1 << 14;
        for t in [50.0, 80.0, 123.4, 200.0] {
            let h = TAU / n as f64;
            let quad: f64 = (0..n)
                .map(|k| (t * (k as f64 * h).cos()).cos())
                .sum::<f64>()
                * h;
            let amp = stationary_phase_amplitude(1.0, 1.0, t);
            let estimate: f64 = amp * ((t - PI / 4.0).cos() + (-t + PI / 4.0).cos());
            assert!(
                (quad - estimate).abs() <= 0.1 * 2.0 * amp,
                "t={t}: {quad} vs {estimate}"
            );
        }
        let a = stationary_phase_amplitude(2.0, 3.0, 10.0);
        let b = stationary_phase_amplitude(2.0, 3.0, 40.0);
        assert!((a / b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn branches_are_stationary_at_zone_edge() {
        let model = KernelModel::new(WeightingScheme::PiecewiseConstant, &MORSE, 20).unwrap();
        let points = stationary_points(&model).unwrap();
        assert_eq!(points.len(), 19);
        for p in &points {
            assert!(
                p.slope.abs() < 1e-6,
                "branch {} slope {}",
                p.branch,
                p.slope
            );
            assert!(p.curvature.abs() > 1e-10);
        }
    }

    #[test]
    fn leading_order_tracks_time_series() {
        // late-time kernel versus the sum of signed branch contributions
        let m = 20;
        let grid = QuadratureGrid::new(4096).unwrap();
        let times = uniform_times(150.0, 200.0, 201).unwrap();
        let series =
            theta_time_series(WeightingScheme::PiecewiseConstant, &MORSE, m, &times, &grid)
                .unwrap();
        let model = KernelModel::new(WeightingScheme::PiecewiseConstant, &MORSE, m).unwrap();
        let points = stationary_points(&model).unwrap();
        let total_amp: f64 = points.iter().map(|p| p.amplitude(150.0)).sum();
        for s in &series.samples {
            let predicted: f64 = points.iter().map(|p| p.contribution(s.coordinate)).sum();
            assert!(
                (s.value - predicted).abs() <= 0.25 * total_amp,
                "t={}",
                s.coordinate
            );
        }
    }

    #[test]
    fn fit_recovers_power_law_and_rate() {
        let pts: Vec<(f64, f64)> = (4..11)
            .map(|k| ((1u32 << k) as f64, 3.0 / (1u32 << k) as f64))
            .collect();
        let f = fit_decay(&pts, FitMode::LogLog, None).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12 && (f.prefactor - 3.0).abs() < 1e-10);
        assert!(fit_decay(&pts, FitMode::LogLinear, None).is_err());

        let exp: Vec<(f64, f64)> = (0..20)
            .map(|j| (j as f64, 2.0 * (-0.7 * j as f64).exp()))
            .collect();
        let f = fit_decay(&exp, FitMode::LogLinear, Some((2.0, 19.0))).unwrap();
        assert!((f.exponent + 0.7).abs() < 1e-12 && f.residual < 1e-12 && f.samples == 18);

        let osc: Vec<(f64, f64)> = (1..4000)
            .map(|i| {
                let t = i as f64 * 0.05;
                (t, (3.0 * t).cos() / t.sqrt())
            })
            .collect();
        let f = fit_decay(&osc, FitMode::LogLogEnvelope, Some((20.0, 200.0))).unwrap();
        assert!((f.exponent + 0.5).abs() < 0.02, "{}", f.exponent);

        let beats: Vec<(f64, f64)> = (1..8000)
            .map(|i| {
                let t = i as f64 * 0.025;
                (t, ((3.0 * t).cos() + (3.4 * t).cos()) / t.sqrt())
            })
            .collect();
        let f = fit_decay(&beats, FitMode::LogLogEnvelope, Some((20.0, 200.0))).unwrap();
        assert!((f.exponent + 0.5).abs() < 0.05, "{}", f.exponent);
    }

    #[test]
    fn fit_excludes_zeros_and_reports_shortfall() {
        let pts: Vec<(f64, f64)> = (1..10)
            .map(|j| (j as f64, if j % 2 == 0 { 0.0 } else { 1.0 / j as f64 }))
            .collect();
        match fit_decay(&pts, FitMode::LogLinear, None) {
            Err(Error::TooFewSamples {
                usable, excluded, ..
            }) => assert_eq!((usable, excluded), (5, 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn damped_sequence_check() {
        let fast: Vec<(f64, f64)> = (1..30).map(|j| (j as f64, (-(j as f64)).exp())).collect();
        assert_eq!(damped_monotonicity_violation(&fast, 4, 4.0), None);
        let slow: Vec<(f64, f64)> = (1..30).map(|j| (j as f64, (j as f64).powi(-3))).collect();
        assert_eq!(damped_monotonicity_violation(&slow, 4, 4.0), Some(5.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn interlacing_for_random_constants(
            k1 in 0.5f64..20.0,
            ratio in -0.24f64..1.0,
            m in 2usize..12,
            xi in 0.01f64..6.27,
        ) {
            let fc = ForceConstants::new(k1, ratio * k1).unwrap();
            let mus = complement_eigenvalues(&fc, m, xi).unwrap();
            let mut lambdas = analytic_eigenvalues(&fc, m, xi);
            lambdas.sort_by(f64::total_cmp);
            let norm = symbol(&fc, m, xi).unwrap().norm().unwrap();
            prop_assert!(check_interlacing(xi, &lambdas, &mus, 1e-10 * norm).is_ok());
            for &mu in &mus {
                prop_assert!(is_char_poly_root(mu, &fc, m, xi, 1e-8).unwrap());
            }
        }
    }
}
