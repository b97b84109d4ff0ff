//! Invariant suites behind the `validate` subcommand.

use std::time::Instant;

use faer::Mat;

use crate::asymptotics::{bound, eigen_branches_with, is_char_poly_root};
use crate::coarse::{
    cg_symbols, constant_basis, random_complement, CoarseGraining, WeightingScheme,
};
use crate::kernel::{blocksize_sweep, integrate_spectra, KernelModel, QuadratureGrid};
use crate::lattice::{analytic_eigenpairs, assemble_blocks, BlockPair, ForceConstants};
use crate::oracle::build_dense;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Halve grid sizes and drop the largest cases.
    pub fast: bool,
    /// Flip the sign of the inter-block coupling to show the suites notice.
    pub inject_fault: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    /// `None` on success, otherwise the first failing assertion.
    pub failure: Option<String>,
    pub seconds: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

type Check = std::result::Result<(), String>;
type Suite = (&'static str, fn(&Suites) -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lift<T>(r: crate::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

const TEST_CONSTANTS: [ForceConstants; 2] = [ForceConstants::MORSE, ForceConstants::NEAR_UNSTABLE];
const BRANCH_SIZES: [usize; 4] = [5, 9, 16, 32];

struct Suites {
    opts: ValidateOptions,
}

impl Suites {
    fn grid_size(&self) -> usize {
        if self.opts.fast {
            512
        } else {
            1024
        }
    }

    fn blocks(&self, fc: &ForceConstants, m: usize) -> std::result::Result<BlockPair, String> {
        let b = lift(assemble_blocks(fc, m))?;
        Ok(if self.opts.inject_fault {
            b.with_flipped_a1()
        } else {
            b
        })
    }

    fn model(
        &self,
        scheme: WeightingScheme,
        fc: &ForceConstants,
        m: usize,
    ) -> std::result::Result<KernelModel, String> {
        lift(KernelModel::from_parts(
            *fc,
            self.blocks(fc, m)?,
            lift(CoarseGraining::new(scheme, m))?,
        ))
    }

    fn hermitian_psd(&self) -> Check {
        let grid = lift(QuadratureGrid::new(self.grid_size()))?;
        for fc in TEST_CONSTANTS {
            for m in BRANCH_SIZES {
                let blocks = self.blocks(&fc, m)?;
                for xi in grid.nodes() {
                    let s = blocks.symbol(xi);
                    let eig = lift(s.eigenvalues())?;
                    let norm = eig.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    let defect = s.hermitian_defect();
                    ensure(defect <= 1e-12 * norm, || {
                        format!("M={m} xi={xi:.4}: Hermitian defect {defect:e}")
                    })?;
                    ensure(eig[0] >= -1e-12 * norm, || {
                        format!("M={m} xi={xi:.4}: eigenvalue {:e} < 0", eig[0])
                    })?;
                }
            }
        }
        Ok(())
    }

    fn analytic_eigenpairs(&self) -> Check {
        let grid = lift(QuadratureGrid::new(64))?;
        for fc in TEST_CONSTANTS {
            for m in BRANCH_SIZES {
                let blocks = self.blocks(&fc, m)?;
                for xi in grid.nodes() {
                    let pairs = lift(analytic_eigenpairs(&fc, m, xi))?;
                    let norm = pairs.iter().fold(0.0f64, |a, p| a.max(p.lambda));
                    let vs = Mat::from_fn(m, m, |i, j| pairs[j].vector[i]);
                    let av = blocks.apply_symbol(xi, vs.as_ref());
                    for (j, p) in pairs.iter().enumerate() {
                        let res = (0..m)
                            .map(|i| (av[(i, j)] - vs[(i, j)] * p.lambda).norm_sqr())
                            .sum::<f64>()
                            .sqrt();
                        ensure(res <= 1e-12 * norm, || {
                            format!("M={m} xi={xi:.4}: eigenpair {j} residual {res:e}")
                        })?;
                    }
                    let mut analytic: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
                    analytic.sort_by(f64::total_cmp);
                    let dense = lift(blocks.symbol(xi).eigenvalues())?;
                    for (a, d) in analytic.iter().zip(&dense) {
                        ensure((a - d).abs() <= 1e-12 * norm, || {
                            format!("M={m} xi={xi:.4}: analytic {a} vs dense {d}")
                        })?;
                    }
                }
            }
        }
        Ok(())
    }

    fn basis_invariance(&self) -> Check {
        let grid = lift(QuadratureGrid::new(self.grid_size()))?;
        let fc = ForceConstants::MORSE;
        for m in [8, 16] {
            let reference = self.model(WeightingScheme::PiecewiseConstant, &fc, m)?;
            let alt = lift(
                constant_basis(m)
                    .and_then(|b| b.with_complement(random_complement(m, self.opts.seed)?)),
            )?;
            let alt = lift(KernelModel::from_parts(
                fc,
                reference.blocks().clone(),
                CoarseGraining::Constant(alt),
            ))?;

            let linear = self.model(WeightingScheme::PiecewiseLinear, &fc, m)?;
            let CoarseGraining::Linear(hats) = linear.coarse_graining() else {
                unreachable!()
            };
            let rotation = lift(random_complement(m, self.opts.seed.wrapping_add(1)))?;
            // rows 1.. of a complement of (1,..,1)/√M give a random orthogonal (M-1)x(M-1)
            let q = Mat::from_fn(m - 1, m - 1, |i, j| rotation[(i + 1, j)]);
            let q = q.qr().compute_thin_Q();
            let rotated = lift(hats.with_complement(hats.stacked() * &q))?;
            let linear_alt = lift(KernelModel::from_parts(
                fc,
                linear.blocks().clone(),
                CoarseGraining::Linear(rotated),
            ))?;

            for (a, b) in [(&reference, &alt), (&linear, &linear_alt)] {
                let sa = lift(a.spectra(&grid))?;
                let sb = lift(b.spectra(&grid))?;
                let scale = integrate_spectra(&grid, &sa, 0, 0.0).value;
                for t in [0.0, 1.0, 5.0] {
                    let x = integrate_spectra(&grid, &sa, 0, t).value;
                    let y = integrate_spectra(&grid, &sb, 0, t).value;
                    ensure((x - y).abs() <= 1e-10 * scale, || {
                        format!(
                            "{} M={m} t={t}: {x} vs {y} after changing the complement",
                            a.scheme()
                        )
                    })?;
                }
            }
        }
        Ok(())
    }

    fn completeness(&self) -> Check {
        let grid = lift(QuadratureGrid::new(64))?;
        for scheme in WeightingScheme::ALL {
            for m in [2, 5, 16, 32] {
                for xi in grid.nodes() {
                    let s = lift(cg_symbols(scheme, m, xi))?;
                    let defect = s.orthonormality_defect();
                    ensure(defect <= 1e-12, || {
                        format!("{scheme} M={m} xi={xi:.4}: [phi0 psi0] defect {defect:e}")
                    })?;
                    let sigma = lift(s.completeness())?;
                    ensure(sigma > 1e-8, || {
                        format!("{scheme} M={m} xi={xi:.4}: [phi psi] singular ({sigma:e})")
                    })?;
                }
            }
        }
        Ok(())
    }

    fn oracle(&self) -> Check {
        let grid = QuadratureGrid::default();
        let pairs: &[(usize, usize)] = if self.opts.fast {
            &[(256, 4), (512, 8)]
        } else {
            &[(256, 4), (512, 8), (1024, 16)]
        };
        for &(n, m) in pairs {
            for scheme in WeightingScheme::ALL {
                for fc in TEST_CONSTANTS {
                    let dense = lift(build_dense(&fc, n, m, scheme).and_then(|c| c.factorize()))?;
                    let spectra = lift(self.model(scheme, &fc, m)?.spectra(&grid))?;
                    for t in [0.0, 1.0, 5.0] {
                        let d = lift(dense.theta(0, t))?;
                        let s = integrate_spectra(&grid, &spectra, 0, t).value;
                        ensure((d - s).abs() <= 1e-8, || {
                            format!(
                                "{scheme} kappa2={} N={n} M={m} t={t}: dense {d} vs spectral {s}",
                                fc.kappa2()
                            )
                        })?;
                    }
                }
            }
        }
        let desk = 3.0 - 2.0 * 2f64.sqrt();
        let unit = ForceConstants::unchecked(1.0, 0.0);
        let atoms = if self.opts.fast { 1 << 11 } else { 1 << 12 };
        let d = lift(
            build_dense(&unit, atoms, 2, WeightingScheme::PiecewiseConstant)
                .and_then(|c| c.theta_dense(0, 0.0)),
        )?;
        let spectra = lift(
            self.model(WeightingScheme::PiecewiseConstant, &unit, 2)?
                .spectra(&grid),
        )?;
        let s = integrate_spectra(&grid, &spectra, 0, 0.0).value;
        ensure((d - desk).abs() <= 1e-6, || {
            format!("dense desk value {d} vs {desk}")
        })?;
        ensure((s - desk).abs() <= 1e-6, || {
            format!("spectral desk value {s} vs {desk}")
        })
    }

    fn interlacing_and_simplicity(&self) -> Check {
        for fc in TEST_CONSTANTS {
            for m in BRANCH_SIZES {
                let blocks = self.blocks(&fc, m)?;
                let branches = lift(eigen_branches_with(&blocks, &fc, self.grid_size()))?;
                let gap = branches.min_gap();
                ensure(gap > 0.0, || {
                    format!("kappa2={} M={m}: branches touch (gap {gap:e})", fc.kappa2())
                })?;
                let sym = branches.symmetry_defect();
                let scale = branches
                    .branches
                    .last()
                    .map(|b| b.iter().fold(0.0f64, |a, x| a.max(*x)))
                    .unwrap_or(1.0);
                ensure(sym <= 1e-10 * scale, || {
                    format!("kappa2={} M={m}: branch asymmetry {sym:e}", fc.kappa2())
                })?;
            }
        }
        Ok(())
    }

    fn char_poly_roots(&self) -> Check {
        for fc in TEST_CONSTANTS {
            for m in BRANCH_SIZES {
                let blocks = self.blocks(&fc, m)?;
                let branches = lift(eigen_branches_with(&blocks, &fc, self.grid_size()))?;
                for (k, &xi) in branches.xi_grid.iter().enumerate().step_by(4) {
                    for mu in branches.values_at(k) {
                        ensure(lift(is_char_poly_root(mu, &fc, m, xi, 1e-8))?, || {
                            format!(
                                "kappa2={} M={m} xi={xi:.4}: {mu} is not a characteristic root",
                                fc.kappa2()
                            )
                        })?;
                    }
                }
            }
        }
        Ok(())
    }

    fn bounds(&self) -> Check {
        let grid = QuadratureGrid::default();
        let top = if self.opts.fast { 8 } else { 10 };
        let sizes: Vec<usize> = (4..=top).map(|k| 1usize << k).collect();
        for scheme in WeightingScheme::ALL {
            for fc in TEST_CONSTANTS {
                for (m, v) in lift(blocksize_sweep(scheme, &fc, &sizes, &grid))? {
                    let b = bound(scheme, &fc, m);
                    ensure((0.0..=b).contains(&v), || {
                        format!(
                            "{scheme} kappa2={} M={m}: value {v:e} outside [0, {b:e}]",
                            fc.kappa2()
                        )
                    })?;
                }
            }
        }
        Ok(())
    }
}

/// Runs every suite; each reports its first failing assertion.
pub fn run_validation(opts: ValidateOptions) -> Vec<SuiteResult> {
    let suites = Suites { opts };
    let table: [Suite; 8] = [
        ("hermitian-psd", Suites::hermitian_psd),
        ("analytic-eigenpairs", Suites::analytic_eigenpairs),
        ("basis-invariance", Suites::basis_invariance),
        ("completeness", Suites::completeness),
        ("oracle-equivalence", Suites::oracle),
        ("interlacing-simplicity", Suites::interlacing_and_simplicity),
        ("char-poly-roots", Suites::char_poly_roots),
        ("theorem-bounds", Suites::bounds),
    ];
    table
        .into_iter()
        .map(|(name, run)| {
            let start = Instant::now();
            let failure = run(&suites).err();
            SuiteResult {
                name,
                failure,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}
