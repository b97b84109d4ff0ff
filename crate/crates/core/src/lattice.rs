//! The harmonic chain with first- and second-neighbour springs, cut into
//! blocks of `M` atoms.
//!
//! The lattice operator acts on a displacement field as
//! `(A u)_j = -κ₂ u_{j-2} - κ₁ u_{j-1} + κ₀ u_j - κ₁ u_{j+1} - κ₂ u_{j+2}`
//! with `κ₀ = 2(κ₁ + κ₂)`. Grouping atoms into blocks makes it a block
//! tridiagonal Toeplitz operator generated by `A₁, A₀, A₁ᵀ`, and its symbol at
//! a Brillouin-zone angle `ξ ∈ (0, 2π]` is
//!
//! ```text
//! Â(ξ) = A₀ + e^{-iξ} A₁ + e^{iξ} A₁ᵀ
//! ```
//!
//! Mass and lattice constant are both 1 throughout.

use std::f64::consts::{PI, TAU};

use faer::Mat;

use crate::error::{domain, Error, Result};
use crate::linalg::{self, C64};

/// Spring constants of the chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceConstants {
    kappa1: f64,
    kappa2: f64,
}

impl ForceConstants {
    /// Morse-potential constants used throughout the reference experiments.
    pub const MORSE: ForceConstants = ForceConstants {
        kappa1: 12.2676,
        kappa2: 3.0628,
    };

    /// Same `κ₁` with a negative `κ₂` close to the stability boundary.
    pub const NEAR_UNSTABLE: ForceConstants = ForceConstants {
        kappa1: 12.2676,
        kappa2: -3.0,
    };

    /// Builds stable force constants, rejecting anything that violates
    /// `κ₁ > 0`, `κ₁ + 4κ₂ > 0`.
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        let fc = Self::unchecked(kappa1, kappa2);
        if validate_stability(&fc) {
            Ok(fc)
        } else {
            Err(Error::Unstable { kappa1, kappa2 })
        }
    }

    /// No stability check. Operations that need a stable chain call
    /// [`ForceConstants::require_stable`] themselves.
    pub const fn unchecked(kappa1: f64, kappa2: f64) -> Self {
        Self { kappa1, kappa2 }
    }

    pub fn kappa0(&self) -> f64 {
        2.0 * (self.kappa1 + self.kappa2)
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    pub fn require_stable(&self) -> Result<()> {
        if validate_stability(self) {
            Ok(())
        } else {
            Err(Error::Unstable {
                kappa1: self.kappa1,
                kappa2: self.kappa2,
            })
        }
    }

    /// Phonon dispersion `λ(q) = 2κ₁(1 - cos q) + 2κ₂(1 - cos 2q)` for an
    /// atomic wavenumber `q`, evaluated as `4 sin²(q/2) (κ₁ + 4κ₂ cos²(q/2))`
    /// so that small values carry full relative precision.
    pub fn dispersion(&self, q: f64) -> f64 {
        let s = (0.5 * q).sin();
        let c = (0.5 * q).cos();
        4.0 * s * s * (self.kappa1 + 4.0 * self.kappa2 * c * c)
    }

    /// `λ(q)` continued to complex wavenumbers.
    pub fn dispersion_complex(&self, q: C64) -> C64 {
        let s = (0.5 * q).sin();
        let c = (0.5 * q).cos();
        4.0 * s * s * (self.kappa1 + 4.0 * self.kappa2 * c * c)
    }

    /// `dλ/dq`.
    pub fn dispersion_slope(&self, q: f64) -> f64 {
        2.0 * self.kappa1 * q.sin() + 4.0 * self.kappa2 * (2.0 * q).sin()
    }
}

/// `κ₁ > 0` and `κ₁ + 4κ₂ > 0`, both strict.
pub fn validate_stability(fc: &ForceConstants) -> bool {
    fc.kappa1 > 0.0 && fc.kappa1 + 4.0 * fc.kappa2 > 0.0
}

pub(crate) fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi <= TAU {
        Ok(())
    } else {
        Err(domain(format!("xi = {xi} lies outside (0, 2π]")))
    }
}

/// The diagonal block `A₀` and the sub-diagonal block `A₁` of the lattice
/// operator; the super-diagonal block is `A₁ᵀ`.
#[derive(Clone, Debug)]
pub struct BlockPair {
    a0: Mat<f64>,
    a1: Mat<f64>,
    // Nonzeros of A₀ and A₁ as (row, col, value), used for O(M) symbol products.
    a0_entries: Vec<(usize, usize, f64)>,
    a1_entries: Vec<(usize, usize, f64)>,
}

impl BlockPair {
    /// Wraps arbitrary blocks without checking the lattice pattern. Only
    /// meant for fault-injection checks of the validation suites.
    pub fn from_matrices(a0: Mat<f64>, a1: Mat<f64>) -> Result<Self> {
        let m = a0.nrows();
        if m < 2 || a0.ncols() != m || a1.nrows() != m || a1.ncols() != m {
            return Err(domain(
                "blocks must be square, equal-sized and at least 2x2",
            ));
        }
        let entries = |a: &Mat<f64>| {
            let mut out = Vec::new();
            for j in 0..m {
                for i in 0..m {
                    if a[(i, j)] != 0.0 {
                        out.push((i, j, a[(i, j)]));
                    }
                }
            }
            out
        };
        Ok(Self {
            a0_entries: entries(&a0),
            a1_entries: entries(&a1),
            a0,
            a1,
        })
    }

    pub fn block_size(&self) -> usize {
        self.a0.nrows()
    }

    pub fn a0(&self) -> &Mat<f64> {
        &self.a0
    }

    pub fn a1(&self) -> &Mat<f64> {
        &self.a1
    }

    /// Copy of the pair with the sign of `A₁` flipped. Breaks the lattice
    /// structure on purpose; used to show that validation catches it.
    pub fn with_flipped_a1(&self) -> Self {
        let a1 = Mat::from_fn(self.block_size(), self.block_size(), |i, j| {
            -self.a1[(i, j)]
        });
        Self::from_matrices(self.a0.clone(), a1).expect("shape unchanged")
    }

    pub fn symbol(&self, xi: f64) -> SymbolMatrix {
        let m = self.block_size();
        let back = C64::from_polar(1.0, -xi);
        let fwd = back.conj();
        let mut entries = Mat::<C64>::zeros(m, m);
        for &(i, j, v) in &self.a0_entries {
            entries[(i, j)] += C64::new(v, 0.0);
        }
        for &(i, j, v) in &self.a1_entries {
            entries[(i, j)] += back * v;
            entries[(j, i)] += fwd * v;
        }
        SymbolMatrix { xi, entries }
    }

    /// `Â(ξ) X` using only the nonzero pattern of the blocks.
    pub fn apply_symbol(&self, xi: f64, x: faer::MatRef<'_, C64>) -> Mat<C64> {
        let m = self.block_size();
        assert_eq!(x.nrows(), m, "operand has the wrong number of rows");
        let back = C64::from_polar(1.0, -xi);
        let fwd = back.conj();
        let mut out = Mat::<C64>::zeros(m, x.ncols());
        for col in 0..x.ncols() {
            for &(i, j, v) in &self.a0_entries {
                out[(i, col)] += x[(j, col)] * v;
            }
            for &(i, j, v) in &self.a1_entries {
                out[(i, col)] += back * x[(j, col)] * v;
                out[(j, col)] += fwd * x[(i, col)] * v;
            }
        }
        out
    }

    /// `vᴴ Â(ξ) v`, real for Hermitian `Â`.
    pub fn quadratic_form(&self, xi: f64, v: &[C64]) -> f64 {
        let back = C64::from_polar(1.0, -xi);
        let mut acc = C64::new(0.0, 0.0);
        for &(i, j, a) in &self.a0_entries {
            acc += v[i].conj() * v[j] * a;
        }
        for &(i, j, a) in &self.a1_entries {
            // e^{-iξ} a v̄ᵢ vⱼ plus its conjugate from the A₁ᵀ block
            acc += 2.0 * (back * v[i].conj() * v[j] * a).re;
        }
        acc.re
    }

    /// `lᵀ Â(z) r` for complex `z`, the analytic continuation of
    /// `vᴴÂ(ξ)v` when `l` continues `v̄`.
    pub fn bilinear_form(&self, z: C64, l: &[C64], r: &[C64]) -> C64 {
        let i = C64::i();
        let back = (-i * z).exp();
        let fwd = (i * z).exp();
        let mut acc = C64::new(0.0, 0.0);
        for &(a, b, v) in &self.a0_entries {
            acc += l[a] * r[b] * v;
        }
        for &(a, b, v) in &self.a1_entries {
            acc += back * l[a] * r[b] * v + fwd * l[b] * r[a] * v;
        }
        acc
    }
}

/// Assembles `A₀` (symmetric, bandwidth 5) and `A₁` (three nonzeros in the
/// top-right corner) for blocks of `m` atoms.
pub fn assemble_blocks(fc: &ForceConstants, m: usize) -> Result<BlockPair> {
    if m < 2 {
        return Err(domain(format!(
            "block too small for second-neighbor coupling (M = {m}, need M >= 2)"
        )));
    }
    let (k0, k1, k2) = (fc.kappa0(), fc.kappa1, fc.kappa2);
    let a0 = Mat::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => k0,
        1 => -k1,
        2 => -k2,
        _ => 0.0,
    });
    let mut a1 = Mat::<f64>::zeros(m, m);
    a1[(0, m - 1)] = -k1;
    a1[(0, m - 2)] = -k2;
    a1[(1, m - 1)] = -k2;
    BlockPair::from_matrices(a0, a1)
}

/// Dense `Â(ξ)` at one Brillouin-zone angle.
#[derive(Clone, Debug)]
pub struct SymbolMatrix {
    pub xi: f64,
    pub entries: Mat<C64>,
}

impl SymbolMatrix {
    pub fn block_size(&self) -> usize {
        self.entries.nrows()
    }

    /// `max |Â - Âᴴ|` entrywise.
    pub fn hermitian_defect(&self) -> f64 {
        let a = &self.entries;
        let mut worst = 0.0f64;
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Ascending eigenvalues from the generic Hermitian eigensolver.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(self.entries.as_ref())
    }

    /// Spectral norm, i.e. the largest eigenvalue magnitude.
    pub fn norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

/// `Â(ξ)` for the given chain and block size.
pub fn symbol(fc: &ForceConstants, m: usize, xi: f64) -> Result<SymbolMatrix> {
    check_xi(xi)?;
    Ok(assemble_blocks(fc, m)?.symbol(xi))
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Atomic wavenumber `ξ'ⱼ = (2jπ - ξ)/M` carried by this mode.
    pub wavenumber: f64,
    pub vector: Vec<C64>,
}

/// Atomic wavenumbers `ξ'ⱼ = (2jπ - ξ)/M`, `j = 0..M`.
pub fn block_wavenumbers(m: usize, xi: f64) -> impl Iterator<Item = f64> {
    (0..m).map(move |j| (2.0 * PI * j as f64 - xi) / m as f64)
}

/// `λⱼ(ξ) = λ(ξ'ⱼ)` for `j = 0..M`, in index order (not sorted).
pub fn analytic_eigenvalues(fc: &ForceConstants, m: usize, xi: f64) -> Vec<f64> {
    block_wavenumbers(m, xi).map(|q| fc.dispersion(q)).collect()
}

/// Closed-form eigenpairs of `Â(ξ)`.
///
/// With the `e^{-iξ}A₁` convention the eigenvector for `ξ'ⱼ` has components
/// `e^{-ikξ'ⱼ}/√M`, `k = 0..M`.
pub fn analytic_eigenpairs(fc: &ForceConstants, m: usize, xi: f64) -> Result<Vec<Eigenpair>> {
    check_xi(xi)?;
    if m < 2 {
        return Err(domain(format!("block size {m} < 2")));
    }
    let norm = 1.0 / (m as f64).sqrt();
    Ok(block_wavenumbers(m, xi)
        .map(|q| Eigenpair {
            lambda: fc.dispersion(q),
            wavenumber: q,
            vector: (0..m)
                .map(|k| C64::from_polar(norm, -(k as f64) * q))
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn stability_predicate() {
        assert!(validate_stability(&ForceConstants::MORSE));
        assert!(validate_stability(&ForceConstants::NEAR_UNSTABLE));
        assert!(!validate_stability(&ForceConstants::unchecked(0.0, 1.0)));
        assert!(!validate_stability(&ForceConstants::unchecked(1.0, -0.25)));
        assert!(ForceConstants::new(0.0, 1.0).is_err());
    }

    #[test]
    fn kappa0_is_exact() {
        let fc = ForceConstants::MORSE;
        assert_eq!(fc.kappa0(), 2.0 * (fc.kappa1() + fc.kappa2()));
    }

    #[test]
    fn nearest_neighbour_blocks_m2() {
        let b = assemble_blocks(&ForceConstants::unchecked(1.0, 0.0), 2).unwrap();
        assert_eq!(b.a0()[(0, 0)], 2.0);
        assert_eq!(b.a0()[(0, 1)], -1.0);
        assert_eq!(b.a0()[(1, 0)], -1.0);
        assert_eq!(b.a0()[(1, 1)], 2.0);
        assert_eq!(b.a1()[(0, 1)], -1.0);
        assert_eq!(b.a1()[(0, 0)], 0.0);
        assert_eq!(b.a1()[(1, 0)], 0.0);
        assert_eq!(b.a1()[(1, 1)], 0.0);
    }

    #[test]
    fn pattern_read_off_m3() {
        let b = assemble_blocks(&ForceConstants::unchecked(1.0, 0.5), 3).unwrap();
        for i in 0..3 {
            assert_eq!(b.a0()[(i, i)], 3.0);
        }
        assert_eq!(b.a0()[(0, 1)], -1.0);
        assert_eq!(b.a0()[(1, 2)], -1.0);
        assert_eq!(b.a0()[(0, 2)], -0.5);
        assert_eq!(b.a1()[(0, 2)], -1.0);
        assert_eq!(b.a1()[(0, 1)], -0.5);
        assert_eq!(b.a1()[(1, 2)], -0.5);
        let nonzeros = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|&(i, j)| b.a1()[(i, j)] != 0.0)
            .count();
        assert_eq!(nonzeros, 3);
    }

    #[test]
    fn block_too_small() {
        let err = assemble_blocks(&ForceConstants::MORSE, 1).unwrap_err();
        assert!(err.to_string().contains("block too small"));
    }

    #[test]
    fn row_sums_vanish_exactly() {
        // Integer-valued constants keep every sum exact in f64.
        for (k1, k2) in [(3.0, 5.0), (7.0, -1.0), (1.0, 0.0)] {
            let fc = ForceConstants::unchecked(k1, k2);
            for m in 2..12 {
                let b = assemble_blocks(&fc, m).unwrap();
                for i in 0..m {
                    let s: f64 = (0..m)
                        .map(|j| b.a0()[(i, j)] + b.a1()[(i, j)] + b.a1()[(j, i)])
                        .sum();
                    assert_eq!(s, 0.0, "row {i}, M={m}");
                }
            }
        }
    }

    #[test]
    fn symbol_nearest_neighbour_m2() {
        let xi = 0.7;
        let s = symbol(&ForceConstants::unchecked(1.0, 0.0), 2, xi).unwrap();
        let e = C64::from_polar(1.0, -xi);
        let expect = [
            [c(2.0, 0.0), -c(1.0, 0.0) - e],
            [-c(1.0, 0.0) - e.conj(), c(2.0, 0.0)],
        ];
        for (i, row) in expect.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert!((s.entries[(i, j)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_mode_at_zone_centre() {
        for m in [2, 3, 7, 16] {
            let s = symbol(&ForceConstants::MORSE, m, TAU).unwrap();
            let ones = vec![c(1.0 / (m as f64).sqrt(), 0.0); m];
            let x = Mat::from_fn(m, 1, |i, _| ones[i]);
            let y = &s.entries * &x;
            for i in 0..m {
                assert!(y[(i, 0)].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn xi_outside_zone_rejected() {
        assert!(symbol(&ForceConstants::MORSE, 4, 0.0).is_err());
        assert!(symbol(&ForceConstants::MORSE, 4, 7.0).is_err());
        assert!(analytic_eigenpairs(&ForceConstants::MORSE, 4, -1.0).is_err());
    }

    #[test]
    fn analytic_matches_dense_solver_morse_m8() {
        let fc = ForceConstants::MORSE;
        let s = symbol(&fc, 8, 1.0).unwrap();
        let dense = s.eigenvalues().unwrap();
        let mut analytic: Vec<f64> = analytic_eigenpairs(&fc, 8, 1.0)
            .unwrap()
            .into_iter()
            .map(|p| p.lambda)
            .collect();
        analytic.sort_by(f64::total_cmp);
        for (a, d) in analytic.iter().zip(&dense) {
            assert!((a - d).abs() < 1e-12, "{a} vs {d}");
        }
    }

    #[test]
    fn analytic_pairs_satisfy_eigen_equation() {
        let fc = ForceConstants::NEAR_UNSTABLE;
        for m in [2, 3, 5, 8, 16] {
            let xi = 2.3;
            let s = symbol(&fc, m, xi).unwrap();
            let norm = s.norm().unwrap();
            for p in analytic_eigenpairs(&fc, m, xi).unwrap() {
                let v = Mat::from_fn(m, 1, |i, _| p.vector[i]);
                let r = &s.entries * &v;
                let res: f64 = (0..m)
                    .map(|i| (r[(i, 0)] - p.vector[i] * p.lambda).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-12 * norm, "M={m} residual {res}");
            }
        }
    }

    #[test]
    fn acoustic_mode_and_zone_edge() {
        let fc = ForceConstants::MORSE;
        let pairs = analytic_eigenpairs(&fc, 6, TAU).unwrap();
        // ξ = 2π puts the zero wavenumber at j = 1
        let zero = pairs.iter().find(|p| p.lambda.abs() < 1e-14).unwrap();
        for z in &zero.vector {
            assert!((z - c(1.0 / 6f64.sqrt(), 0.0)).norm() < 1e-14);
        }
        // ξ' = π gives λ = 4κ₁
        assert!((fc.dispersion(PI) - 4.0 * fc.kappa1()).abs() < 1e-12);
        let pairs = analytic_eigenpairs(&fc, 2, TAU).unwrap();
        let edge = pairs
            .iter()
            .find(|p| (p.wavenumber.abs() - PI).abs() < 1e-12)
            .unwrap();
        assert!((edge.lambda - 4.0 * fc.kappa1()).abs() < 1e-12);
        let dense = symbol(&fc, 2, TAU).unwrap().eigenvalues().unwrap();
        assert!((dense[1] - 4.0 * fc.kappa1()).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_and_apply_agree_with_dense() {
        let fc = ForceConstants::MORSE;
        let b = assemble_blocks(&fc, 5).unwrap();
        let xi = 2.1;
        let s = b.symbol(xi);
        let v: Vec<C64> = (0..5).map(|k| c(k as f64 - 1.5, 0.3 * k as f64)).collect();
        let x = Mat::from_fn(5, 1, |i, _| v[i]);
        let dense = &s.entries * &x;
        let fast = b.apply_symbol(xi, x.as_ref());
        for i in 0..5 {
            assert!((dense[(i, 0)] - fast[(i, 0)]).norm() < 1e-13);
        }
        let q: C64 = (0..5).map(|i| v[i].conj() * dense[(i, 0)]).sum();
        assert!((q.re - b.quadratic_form(xi, &v)).abs() < 1e-12);
        assert!(q.im.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn symbol_hermitian_and_psd(
            k1 in 0.1f64..20.0,
            ratio in -0.24f64..2.0,
            m in 2usize..12,
            xi in 1e-6f64..TAU,
        ) {
            let fc = ForceConstants::new(k1, ratio * k1).unwrap();
            let s = symbol(&fc, m, xi).unwrap();
            prop_assert!(s.hermitian_defect() <= 1e-12);
            let ev = s.eigenvalues().unwrap();
            let norm = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            prop_assert!(ev[0] >= -1e-10 * norm);
        }
    }
}
