//! Coarse-graining symbols `Φ̂(ξ)` (one column) and `Ψ̂(ξ)` (its `M - 1`
//! dimensional complement) for the two weighting schemes.
//!
//! * Piecewise constant: one block-average per block. `Φ̂ = Q₁` and `Ψ̂ = Q₂`
//!   do not depend on `ξ`.
//! * Piecewise linear: overlapping hats spanning two blocks. `Φ` and `Ψ` are
//!   lower block-bidiagonal, so `Φ̂ = h₁ + e^{-iξ} h₂` and
//!   `Ψ̂ = H₁ + e^{-iξ} H₂`.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::lattice::check_xi;
use crate::linalg::{self, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WeightingScheme {
    PiecewiseConstant,
    PiecewiseLinear,
}

impl WeightingScheme {
    pub const ALL: [WeightingScheme; 2] = [Self::PiecewiseConstant, Self::PiecewiseLinear];

    pub fn name(self) -> &'static str {
        match self {
            Self::PiecewiseConstant => "constant",
            Self::PiecewiseLinear => "linear",
        }
    }
}

impl fmt::Display for WeightingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" | "piecewise-constant" => Ok(Self::PiecewiseConstant),
            "linear" | "piecewise-linear" => Ok(Self::PiecewiseLinear),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}' (expected constant or linear)"
            ))),
        }
    }
}

fn check_block_size(m: usize) -> Result<()> {
    if m < 2 {
        Err(domain(format!("block size {m} < 2")))
    } else {
        Ok(())
    }
}

/// `Q₁ = (1,…,1)ᵀ/√M` and an orthonormal complement `Q₂`.
#[derive(Clone, Debug)]
pub struct ConstantBasis {
    pub q1: Vec<f64>,
    pub q2: Mat<f64>,
}

impl ConstantBasis {
    /// Replaces `Q₂` by another orthonormal complement of `Q₁`.
    pub fn with_complement(&self, q2: Mat<f64>) -> Result<Self> {
        let m = self.q1.len();
        if q2.nrows() != m || q2.ncols() != m - 1 {
            return Err(domain("complement must be M x (M-1)"));
        }
        let basis = Self {
            q1: self.q1.clone(),
            q2,
        };
        let defect = basis.orthogonality_defect();
        if defect > 1e-12 {
            return Err(domain(format!(
                "[Q1 Q2] is not orthogonal (defect {defect:e})"
            )));
        }
        Ok(basis)
    }

    /// `max |[Q₁ Q₂]ᵀ[Q₁ Q₂] - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let m = self.q1.len();
        let full = Mat::from_fn(m, m, |i, j| {
            if j == 0 {
                self.q1[i]
            } else {
                self.q2[(i, j - 1)]
            }
        });
        let g = full.transpose() * &full;
        let mut worst = 0.0f64;
        for j in 0..m {
            for i in 0..m {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - t).abs());
            }
        }
        worst
    }
}

/// Constant-weight basis with `Q₂` taken from the Householder reflector that
/// maps `Q₁` onto `-e₁`.
pub fn constant_basis(m: usize) -> Result<ConstantBasis> {
    check_block_size(m)?;
    let s = 1.0 / (m as f64).sqrt();
    let q1 = vec![s; m];
    // v = q1 + e1 (q1[0] > 0); H = I - 2 v vᵀ / (vᵀ v)
    let mut v = q1.clone();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let q2 = Mat::from_fn(m, m - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        delta - 2.0 * v[i] * v[col] / vv
    });
    Ok(ConstantBasis { q1, q2 })
}

/// A seeded random orthonormal complement of `Q₁`; used to check that
/// kernel values do not depend on the choice of `Q₂`.
pub fn random_complement(m: usize, seed: u64) -> Result<Mat<f64>> {
    check_block_size(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Mat::from_fn(m, m - 1, |_, _| rng.gen_range(-1.0..1.0));
    let s = 1.0 / (m as f64).sqrt();
    for j in 0..m - 1 {
        let dot: f64 = (0..m).map(|i| raw[(i, j)] * s).sum();
        for i in 0..m {
            raw[(i, j)] -= dot * s;
        }
    }
    Ok(raw.qr().compute_thin_Q())
}

/// Hat-function basis: the two halves `h₁`, `h₂` of a hat and the complement
/// blocks `H₁`, `H₂` of `Ψ`.
#[derive(Clone, Debug)]
pub struct LinearBasis {
    pub c: f64,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h_diag: Mat<f64>,
    pub h_sub: Mat<f64>,
}

impl LinearBasis {
    pub fn block_size(&self) -> usize {
        self.h1.len()
    }

    /// The 3 x 2M matrix `[h₁ᵀ h₂ᵀ; h₂ᵀ 0; 0 h₁ᵀ]` whose null space holds the
    /// columns of `[H₁; H₂]`.
    pub fn constraint_matrix(&self) -> Mat<f64> {
        let m = self.block_size();
        Mat::from_fn(3, 2 * m, |r, k| {
            let (top, idx) = (k < m, k % m);
            match (r, top) {
                (0, true) => self.h1[idx],
                (0, false) => self.h2[idx],
                (1, true) => self.h2[idx],
                (2, false) => self.h1[idx],
                _ => 0.0,
            }
        })
    }

    /// Stacked `[H₁; H₂]`.
    pub fn stacked(&self) -> Mat<f64> {
        let m = self.block_size();
        Mat::from_fn(2 * m, m - 1, |i, j| {
            if i < m {
                self.h_diag[(i, j)]
            } else {
                self.h_sub[(i - m, j)]
            }
        })
    }

    /// Replaces `[H₁; H₂]` by other columns of the constraint null space.
    pub fn with_complement(&self, stacked: Mat<f64>) -> Result<Self> {
        let m = self.block_size();
        if stacked.nrows() != 2 * m || stacked.ncols() != m - 1 {
            return Err(domain("complement must be 2M x (M-1)"));
        }
        let residual = &self.constraint_matrix() * &stacked;
        let worst = linalg::max_abs(residual.as_ref(), f64::abs);
        if worst > 1e-12 {
            return Err(domain(format!(
                "columns leave the constraint null space ({worst:e})"
            )));
        }
        Ok(Self {
            c: self.c,
            h1: self.h1.clone(),
            h2: self.h2.clone(),
            h_diag: Mat::from_fn(m, m - 1, |i, j| stacked[(i, j)]),
            h_sub: Mat::from_fn(m, m - 1, |i, j| stacked[(m + i, j)]),
        })
    }
}

/// Hat-function basis for blocks of `m` atoms.
///
/// The constraint null space (dimension `2M - 3`) splits into vectors living
/// on one block and orthogonal to both `h₁` and `h₂` (`M - 2` per block) and a
/// single direction straddling two blocks inside `span{h₁, h₂}` on each. The
/// complement keeps the single-block vectors of the diagonal block plus the
/// straddling one, which gives `M - 1` orthonormal columns.
pub fn linear_basis(m: usize) -> Result<LinearBasis> {
    check_block_size(m)?;
    let mf = m as f64;
    let c = ((2.0 * mf * mf * mf + mf) / 3.0).sqrt();
    let h1: Vec<f64> = (0..m).map(|k| (k + 1) as f64 / c).collect();
    let h2: Vec<f64> = (0..m).map(|k| (m - 1 - k) as f64 / c).collect();

    let hats = Mat::from_fn(m, 2, |i, j| if j == 0 { h1[i] } else { h2[i] });
    let q = hats.qr().compute_Q();
    let e = |col: usize| -> Vec<f64> { (0..m).map(|i| q[(i, col)]).collect() };
    let (e1, e2) = (e(0), e(1));
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    // Coordinates (a₁, a₂, b₁, b₂) with y₁ = a₁e₁ + a₂e₂ and y₂ = b₁e₁ + b₂e₂.
    let small = Mat::from_fn(3, 4, |r, k| match (r, k) {
        (0, 0) => dot(&h1, &e1),
        (0, 1) => dot(&h1, &e2),
        (0, 2) => dot(&h2, &e1),
        (0, 3) => dot(&h2, &e2),
        (1, 0) => dot(&h2, &e1),
        (1, 1) => dot(&h2, &e2),
        (2, 2) => dot(&h1, &e1),
        (2, 3) => dot(&h1, &e2),
        _ => 0.0,
    });
    let svd = small
        .svd()
        .map_err(|e| Error::Linalg(format!("svd of hat constraints: {e:?}")))?;
    let s = svd.S().column_vector();
    if s[2] < 1e-12 {
        return Err(Error::Linalg(format!(
            "hat constraints lost rank for M = {m} (sigma_min = {:e})",
            s[2]
        )));
    }
    let mut u: Vec<f64> = (0..4).map(|k| svd.V()[(k, 3)]).collect();
    let pivot = u
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if pivot < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }

    let mut h_diag = Mat::<f64>::zeros(m, m - 1);
    let mut h_sub = Mat::<f64>::zeros(m, m - 1);
    for j in 0..m - 2 {
        for i in 0..m {
            h_diag[(i, j)] = q[(i, j + 2)];
        }
    }
    for i in 0..m {
        h_diag[(i, m - 2)] = u[0] * e1[i] + u[1] * e2[i];
        h_sub[(i, m - 2)] = u[2] * e1[i] + u[3] * e2[i];
    }

    let basis = LinearBasis {
        c,
        h1,
        h2,
        h_diag,
        h_sub,
    };
    let sigma = linalg::singular_values(basis.stacked().as_ref())?;
    let smallest = sigma.last().copied().unwrap_or(0.0);
    assert!(
        smallest > 1e-10,
        "hat complement is rank deficient for M = {m} (sigma_min = {smallest:e})"
    );
    Ok(basis)
}

/// Per-`ξ` coarse-graining symbols plus their orthonormalised versions.
#[derive(Clone, Debug)]
pub struct CgSymbolPair {
    pub xi: f64,
    pub phi_hat: Vec<C64>,
    pub psi_hat: Mat<C64>,
    pub phi0: Vec<C64>,
    pub psi0: Mat<C64>,
}

impl CgSymbolPair {
    /// Largest defect among `φ₀ᴴφ₀ = 1`, `Ψ₀ᴴΨ₀ = I` and `φ₀ᴴΨ₀ = 0`.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.phi0.len();
        let full = Mat::from_fn(m, m, |i, j| {
            if j == 0 {
                self.phi0[i]
            } else {
                self.psi0[(i, j - 1)]
            }
        });
        linalg::orthonormality_defect(full.as_ref())
    }

    /// Smallest singular value of `[Φ̂ Ψ̂]`.
    pub fn completeness(&self) -> Result<f64> {
        let m = self.phi_hat.len();
        let full = Mat::from_fn(m, m, |i, j| {
            if j == 0 {
                self.phi_hat[i]
            } else {
                self.psi_hat[(i, j - 1)]
            }
        });
        Ok(linalg::singular_values(full.as_ref())?
            .last()
            .copied()
            .unwrap_or(0.0))
    }
}

/// A weighting scheme together with its precomputed block basis.
#[derive(Clone, Debug)]
pub enum CoarseGraining {
    Constant(ConstantBasis),
    Linear(LinearBasis),
}

impl CoarseGraining {
    pub fn new(scheme: WeightingScheme, m: usize) -> Result<Self> {
        Ok(match scheme {
            WeightingScheme::PiecewiseConstant => Self::Constant(constant_basis(m)?),
            WeightingScheme::PiecewiseLinear => Self::Linear(linear_basis(m)?),
        })
    }

    pub fn scheme(&self) -> WeightingScheme {
        match self {
            Self::Constant(_) => WeightingScheme::PiecewiseConstant,
            Self::Linear(_) => WeightingScheme::PiecewiseLinear,
        }
    }

    pub fn block_size(&self) -> usize {
        match self {
            Self::Constant(b) => b.q1.len(),
            Self::Linear(b) => b.block_size(),
        }
    }

    /// `Φ̂(ξ)`, not normalised in the linear case.
    pub fn phi_hat(&self, xi: f64) -> Vec<C64> {
        match self {
            Self::Constant(b) => b.q1.iter().map(|&x| C64::new(x, 0.0)).collect(),
            Self::Linear(b) => {
                let e = C64::from_polar(1.0, -xi);
                b.h1.iter().zip(&b.h2).map(|(&a, &c)| e * c + a).collect()
            }
        }
    }

    /// `Φ̂ᴴΦ̂`; identically 1 for constant weights and `1 + 2 cos ξ h₁ᵀh₂`
    /// for hats.
    pub fn phi_gram(&self, xi: f64) -> f64 {
        match self {
            Self::Constant(_) => 1.0,
            Self::Linear(b) => {
                let cross: f64 = b.h1.iter().zip(&b.h2).map(|(x, y)| x * y).sum();
                1.0 + 2.0 * xi.cos() * cross
            }
        }
    }

    pub fn psi_hat(&self, xi: f64) -> Mat<C64> {
        match self {
            Self::Constant(b) => linalg::to_complex(b.q2.as_ref()),
            Self::Linear(b) => {
                let e = C64::from_polar(1.0, -xi);
                Mat::from_fn(b.block_size(), b.block_size() - 1, |i, j| {
                    e * b.h_sub[(i, j)] + b.h_diag[(i, j)]
                })
            }
        }
    }

    /// `Ψ₀`: orthonormal columns spanning the same space as `Ψ̂(ξ)`.
    pub fn psi_orthonormal(&self, xi: f64) -> Mat<C64> {
        match self {
            Self::Constant(b) => linalg::to_complex(b.q2.as_ref()),
            Self::Linear(_) => linalg::orthonormal_columns(self.psi_hat(xi).as_ref()),
        }
    }

    pub fn symbols(&self, xi: f64) -> CgSymbolPair {
        let phi_hat = self.phi_hat(xi);
        let psi_hat = self.psi_hat(xi);
        let (phi0, psi0) = match self {
            Self::Constant(_) => (phi_hat.clone(), psi_hat.clone()),
            Self::Linear(_) => {
                let scale = 1.0 / self.phi_gram(xi).sqrt();
                (
                    phi_hat.iter().map(|z| z * scale).collect(),
                    linalg::orthonormal_columns(psi_hat.as_ref()),
                )
            }
        };
        CgSymbolPair {
            xi,
            phi_hat,
            psi_hat,
            phi0,
            psi0,
        }
    }
}

/// Coarse-graining symbols for one scheme, block size and angle.
pub fn cg_symbols(scheme: WeightingScheme, m: usize, xi: f64) -> Result<CgSymbolPair> {
    check_xi(xi)?;
    let cg = CoarseGraining::new(scheme, m)?;
    if let CoarseGraining::Linear(_) = cg {
        let gram = cg.phi_gram(xi);
        assert!(gram > 0.0, "hat Gram value {gram} must stay positive");
    }
    Ok(cg.symbols(xi))
}
