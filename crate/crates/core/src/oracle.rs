//! Brute-force reference: a periodic chain of `N` atoms with explicit `Φ`,
//! `Ψ` and a dense eigendecomposition of `ΨᵀAΨ`.
//!
//! Everything the spectral path computes is a Brillouin-zone integral; at
//! finite `N` the same quantity is a plain matrix expression, so agreement
//! between the two checks the symbols, the complement and the quadrature at
//! once.

use std::f64::consts::TAU;

use faer::Mat;

use crate::coarse::{constant_basis, linear_basis, WeightingScheme};
use crate::error::{domain, Error, Result};
use crate::lattice::ForceConstants;
use crate::linalg;

/// Largest complement dimension the oracle will diagonalise.
pub const MAX_COMPLEMENT: usize = 12288;

#[derive(Clone, Debug)]
pub struct DenseChain {
    fc: ForceConstants,
    scheme: WeightingScheme,
    block_size: usize,
    a: Mat<f64>,
    phi: Mat<f64>,
    psi: Mat<f64>,
}

impl DenseChain {
    pub fn atoms(&self) -> usize {
        self.a.nrows()
    }

    pub fn blocks(&self) -> usize {
        self.phi.ncols()
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn scheme(&self) -> WeightingScheme {
        self.scheme
    }

    pub fn force_constants(&self) -> &ForceConstants {
        &self.fc
    }

    pub fn a(&self) -> &Mat<f64> {
        &self.a
    }

    pub fn phi(&self) -> &Mat<f64> {
        &self.phi
    }

    pub fn psi(&self) -> &Mat<f64> {
        &self.psi
    }

    /// `max |[Φ Ψ]ᵀ[Φ Ψ] - I|` for the constant scheme; for the linear scheme
    /// the `ΦᵀΦ` block is replaced by its unit diagonal only.
    pub fn orthogonality_defect(&self) -> f64 {
        let full = Mat::from_fn(self.atoms(), self.atoms(), |i, j| {
            if j < self.blocks() {
                self.phi[(i, j)]
            } else {
                self.psi[(i, j - self.blocks())]
            }
        });
        let g = full.transpose() * &full;
        let nb = self.blocks();
        let mut worst = 0.0f64;
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                let hat_overlap =
                    self.scheme == WeightingScheme::PiecewiseLinear && i < nb && j < nb && i != j;
                if hat_overlap {
                    continue;
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// `max |A·1|`.
    pub fn zero_mode_residual(&self) -> f64 {
        (0..self.atoms())
            .map(|i| (0..self.atoms()).map(|j| self.a[(i, j)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// Diagonalises `ΨᵀAΨ` once for repeated kernel evaluations.
    pub fn factorize(&self) -> Result<FactorizedChain> {
        let a_psi = &self.a * &self.psi;
        let omega2 = self.psi.transpose() * &a_psi;
        let (eigenvalues, x) = linalg::symmetric_eigen(omega2.as_ref())?;
        let norm = self.fc.kappa0().abs() + 2.0 * (self.fc.kappa1().abs() + self.fc.kappa2().abs());
        let threshold = 1e-12 * norm;
        if let Some(&lowest) = eigenvalues.first() {
            if lowest < threshold {
                return Err(Error::Singular {
                    what: "dense complement block",
                    xi: 0.0,
                    eigenvalue: lowest,
                    threshold,
                });
            }
        }
        // C = Xᵀ Ψᵀ A Φ
        let coupling = x.transpose() * (a_psi.transpose() * &self.phi);
        Ok(FactorizedChain {
            eigenvalues,
            coupling,
            horizon: recurrence_horizon(self),
        })
    }

    pub fn theta_dense(&self, j: i64, t: f64) -> Result<f64> {
        self.factorize()?.theta(j, t)
    }
}

/// Spectrum of `ΨᵀAΨ` and the projected coupling `XᵀΨᵀAΦ`.
#[derive(Clone, Debug)]
pub struct FactorizedChain {
    eigenvalues: Vec<f64>,
    coupling: Mat<f64>,
    horizon: f64,
}

impl FactorizedChain {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Entry `(0, J)` of `ΦᵀAΨ cos(Ωt) Ω⁻² ΨᵀAΦ`; offsets wrap periodically.
    pub fn theta(&self, j: i64, t: f64) -> Result<f64> {
        let nb = self.coupling.ncols();
        if !(t.is_finite() && t >= 0.0) {
            return Err(domain(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        if 2 * j.unsigned_abs() as usize >= nb {
            return Err(domain(format!(
                "|J| = {} must stay below half the block count {nb}",
                j.abs()
            )));
        }
        if t > self.horizon {
            log::warn!(
                "t = {t} is past the recurrence horizon {:.3}; finite-chain echoes contaminate the kernel",
                self.horizon
            );
        }
        let col = j.rem_euclid(nb as i64) as usize;
        let terms: Vec<f64> = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &e)| {
                self.coupling[(k, 0)] * self.coupling[(k, col)] * (e.sqrt() * t).cos() / e
            })
            .collect();
        Ok(linalg::pairwise_sum(&terms))
    }
}

/// Periodic chain of `n` atoms in blocks of `m` with the given coarse-graining.
pub fn build_dense(
    fc: &ForceConstants,
    n: usize,
    m: usize,
    scheme: WeightingScheme,
) -> Result<DenseChain> {
    fc.require_stable()?;
    if m < 2 || !n.is_multiple_of(m) {
        return Err(domain(format!(
            "atom count {n} must be a multiple of the block size {m} >= 2"
        )));
    }
    if n < 4 * m {
        return Err(domain(format!(
            "atom count {n} must be at least four blocks ({})",
            4 * m
        )));
    }
    if n - n / m > MAX_COMPLEMENT {
        return Err(domain(format!(
            "complement dimension {} exceeds the dense limit {MAX_COMPLEMENT}",
            n - n / m
        )));
    }
    let nb = n / m;
    let mut a = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] += fc.kappa0();
        for (d, k) in [(1, fc.kappa1()), (2, fc.kappa2())] {
            a[(i, (i + d) % n)] -= k;
            a[((i + d) % n, i)] -= k;
        }
    }

    let mut phi = Mat::<f64>::zeros(n, nb);
    match scheme {
        WeightingScheme::PiecewiseConstant => {
            let q1 = constant_basis(m)?.q1;
            for b in 0..nb {
                for (k, w) in q1.iter().enumerate() {
                    phi[(b * m + k, b)] = *w;
                }
            }
        }
        WeightingScheme::PiecewiseLinear => {
            let hats = linear_basis(m)?;
            for b in 0..nb {
                let next = (b + 1) % nb;
                for k in 0..m {
                    phi[(b * m + k, b)] = hats.h1[k];
                    phi[(next * m + k, b)] = hats.h2[k];
                }
            }
        }
    }
    let psi = linalg::orthonormal_complement(phi.as_ref());
    Ok(DenseChain {
        fc: *fc,
        scheme,
        block_size: m,
        a,
        phi,
        psi,
    })
}

/// Largest group velocity `|d√λ/dq|` of the dispersion, from differences on
/// a 4096-point grid.
pub fn max_group_velocity(fc: &ForceConstants) -> f64 {
    const GRID: usize = 4096;
    let h = TAU / GRID as f64;
    let omega: Vec<f64> = (0..=GRID)
        .map(|k| fc.dispersion(k as f64 * h).max(0.0).sqrt())
        .collect();
    omega
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / h)
        .fold(0.0, f64::max)
}

/// `N / (2 v_max)`: time for a sound front to travel half way round the ring.
pub fn recurrence_horizon(chain: &DenseChain) -> f64 {
    chain.atoms() as f64 / (2.0 * max_group_velocity(&chain.fc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{theta_entry, QuadratureGrid};

    #[test]
    fn small_chain_structure() {
        let fc = ForceConstants::MORSE;
        let chain = build_dense(&fc, 8, 2, WeightingScheme::PiecewiseConstant).unwrap();
        let s = 0.5f64.sqrt();
        for b in 0..4 {
            for i in 0..8 {
                let want = if i / 2 == b { s } else { 0.0 };
                assert!((chain.phi()[(i, b)] - want).abs() < 1e-15);
            }
        }
        assert!(chain.orthogonality_defect() < 1e-12);
        assert!(chain.zero_mode_residual() < 1e-12);
        let lin = build_dense(&fc, 40, 5, WeightingScheme::PiecewiseLinear).unwrap();
        assert!(lin.orthogonality_defect() < 1e-12);
        assert!(lin.zero_mode_residual() < 1e-12);
    }

    #[test]
    fn rejects_bad_sizes() {
        let fc = ForceConstants::MORSE;
        assert!(build_dense(&fc, 30, 4, WeightingScheme::PiecewiseConstant).is_err());
        assert!(build_dense(&fc, 12, 4, WeightingScheme::PiecewiseConstant).is_err());
        assert!(build_dense(
            &ForceConstants::unchecked(1.0, -1.0),
            16,
            4,
            WeightingScheme::PiecewiseConstant
        )
        .is_err());
        let chain = build_dense(&fc, 32, 4, WeightingScheme::PiecewiseConstant).unwrap();
        assert!(chain.theta_dense(4, 0.0).is_err());
    }

    #[test]
    fn unit_chain_group_velocity() {
        let v = max_group_velocity(&ForceConstants::new(1.0, 0.0).unwrap());
        assert!((v - 1.0).abs() < 1e-6, "{v}");
        let fc = ForceConstants::MORSE;
        let a = build_dense(&fc, 64, 4, WeightingScheme::PiecewiseConstant).unwrap();
        let b = build_dense(&fc, 128, 4, WeightingScheme::PiecewiseConstant).unwrap();
        assert!((recurrence_horizon(&b) - 2.0 * recurrence_horizon(&a)).abs() < 1e-9);
    }

    #[test]
    fn dense_matches_spectral_on_small_chain() {
        let grid = QuadratureGrid::default();
        for scheme in WeightingScheme::ALL {
            for fc in [ForceConstants::MORSE, ForceConstants::NEAR_UNSTABLE] {
                let f = build_dense(&fc, 256, 4, scheme)
                    .unwrap()
                    .factorize()
                    .unwrap();
                for t in [0.0, 1.0, 5.0] {
                    let dense = f.theta(0, t).unwrap();
                    let spectral = theta_entry(scheme, &fc, 4, 0, t, &grid).unwrap();
                    assert!(
                        (dense - spectral).abs() < 1e-8,
                        "{scheme} t={t}: {dense} vs {spectral}"
                    );
                }
            }
        }
    }

    #[test]
    fn dense_kernel_is_symmetric_and_bounded() {
        let fc = ForceConstants::MORSE;
        let f = build_dense(&fc, 96, 4, WeightingScheme::PiecewiseConstant)
            .unwrap()
            .factorize()
            .unwrap();
        let t0 = f.theta(0, 0.0).unwrap();
        assert!(t0 >= 0.0 && t0 <= (2.0 * fc.kappa1() + 4.0 * fc.kappa2()) / 4.0);
        for j in 1..12 {
            assert!((f.theta(j, 0.7).unwrap() - f.theta(-j, 0.7).unwrap()).abs() < 1e-12);
            assert!(f.theta(j, 0.0).unwrap().abs() <= t0);
        }
    }
}
