//! Discretized operator assembly, spectra, refinement-stability
//! classification, resolvent-set and kernel/cokernel probes.
//!
//! The matrix acts on spectral coefficient vectors in the orthonormal
//! Fourier basis; index `i` addresses component `i % N` of frequency
//! `i / N` in row-major frequency storage order. Constant-coefficient
//! systems therefore assemble to block-diagonal matrices with one
//! `N x N` block per frequency.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{self, GridSpec, ProductRule};
use crate::symbol::{anisotropic_weight, DNSystem};

pub const DEFAULT_SIZE_CAP: usize = 8192;

#[derive(Clone, Debug)]
pub struct AssembledOperator {
    pub spec: GridSpec,
    pub nsys: usize,
    pub matrix: DMatrix<Complex64>,
}

impl AssembledOperator {
    pub fn size(&self) -> usize {
        self.nsys * self.spec.points()
    }
}

/// Assemble the dense matrix of `A(x, D)` (at `lambda = 0`): columns are
/// the operator images of the spectral basis modes.
pub fn assemble(sys: &DNSystem, spec: &GridSpec, cap: usize) -> Result<AssembledOperator> {
    let n = sys.size();
    let size = n * spec.points();
    if size > cap {
        return Err(Error::SizeCap { size, cap });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut matrix = DMatrix::from_element(size, size, zero);
    for col in 0..size {
        let flat = col / n;
        let comp = col % n;
        let mut uhat = vec![vec![zero; spec.points()]; n];
        uhat[comp][flat] = Complex64::new(1.0, 0.0);
        let fhat = fourier::apply_operator_spectral(sys, zero, &uhat, spec, ProductRule::Padded);
        for row_flat in 0..spec.points() {
            for row_comp in 0..n {
                matrix[(row_flat * n + row_comp, col)] = fhat[row_comp][row_flat];
            }
        }
    }
    Ok(AssembledOperator {
        spec: *spec,
        nsys: n,
        matrix,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub grid: GridSpec,
    pub nsys: usize,
    /// All eigenvalues, sorted by (re, im).
    pub eigenvalues: Vec<Complex64>,
}

pub fn spectrum(op: &AssembledOperator) -> Result<SpectrumReport> {
    let eigs = op
        .matrix
        .clone()
        .schur()
        .eigenvalues()
        .ok_or(Error::EigenNonConvergence)?;
    let mut eigenvalues: Vec<Complex64> = eigs.iter().cloned().collect();
    eigenvalues.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .expect("finite eigenvalues")
    });
    Ok(SpectrumReport {
        grid: op.spec,
        nsys: op.nsys,
        eigenvalues,
    })
}

#[derive(Clone, Debug)]
pub struct RefinementConfig {
    /// Movement tolerance is `tol_scale * max(1, |eigenvalue|)`.
    pub tol_scale: f64,
    /// An isolated candidate must sit off the half-line by more than
    /// `isolated_factor * tol`.
    pub isolated_factor: f64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            tol_scale: 1e-6,
            isolated_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenClassification {
    pub eigenvalue: Complex64,
    /// Distance moved to the nearest eigenvalue of the refined grid.
    pub movement: f64,
    pub distance_to_halfline: f64,
    pub stable: bool,
    pub isolated_candidate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapStats {
    /// Number of (near-real) eigenvalues inside the probed interval.
    pub count: usize,
    pub max_gap: f64,
    pub mean_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    pub halfline_start: f64,
    pub lambda_max: f64,
    pub classifications: Vec<EigenClassification>,
    pub isolated_count: usize,
    pub coarse_gaps: GapStats,
    pub fine_gaps: GapStats,
    /// Whether the half-line cluster tightened under refinement.
    pub essential_approximant: bool,
}

pub fn distance_to_halfline(lambda: Complex64, start: f64) -> f64 {
    if lambda.re >= start {
        lambda.im.abs()
    } else {
        (lambda - Complex64::new(start, 0.0)).norm()
    }
}

fn gap_stats(eigs: &[Complex64], start: f64, lambda_max: f64) -> GapStats {
    let mut reals: Vec<f64> = eigs
        .iter()
        .filter(|e| e.im.abs() <= 1e-6 * e.norm().max(1.0))
        .map(|e| e.re)
        .filter(|&re| re >= start - 1e-9 && re <= lambda_max)
        .collect();
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    reals.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if reals.len() < 2 {
        return GapStats {
            count: reals.len(),
            max_gap: f64::INFINITY,
            mean_gap: f64::INFINITY,
        };
    }
    let mut max_gap: f64 = 0.0;
    for w in reals.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    let mean_gap = (reals[reals.len() - 1] - reals[0]) / (reals.len() - 1) as f64;
    GapStats {
        count: reals.len(),
        max_gap,
        mean_gap,
    }
}

/// Classify the coarse-grid spectrum against a refined grid: eigenvalues
/// that barely move and sit well off the half-line `[start, infinity)` are
/// isolated-eigenvalue candidates; the near-real cluster is compared for
/// gap shrinkage.
pub fn compare_refinement(
    sys: &DNSystem,
    spec: &GridSpec,
    spec_refined: &GridSpec,
    halfline_start: f64,
    lambda_max: f64,
    config: &RefinementConfig,
) -> Result<RefinementReport> {
    let coarse = spectrum(&assemble(sys, spec, DEFAULT_SIZE_CAP)?)?;
    let fine = spectrum(&assemble(sys, spec_refined, DEFAULT_SIZE_CAP)?)?;
    let mut classifications = Vec::new();
    for &eig in &coarse.eigenvalues {
        let movement = fine
            .eigenvalues
            .iter()
            .map(|f| (f - eig).norm())
            .fold(f64::INFINITY, f64::min);
        let tol = config.tol_scale * eig.norm().max(1.0);
        let dist = distance_to_halfline(eig, halfline_start);
        let stable = movement < tol;
        let isolated_candidate = stable && dist > config.isolated_factor * tol;
        classifications.push(EigenClassification {
            eigenvalue: eig,
            movement,
            distance_to_halfline: dist,
            stable,
            isolated_candidate,
        });
    }
    let coarse_gaps = gap_stats(&coarse.eigenvalues, halfline_start, lambda_max);
    let fine_gaps = gap_stats(&fine.eigenvalues, halfline_start, lambda_max);
    let isolated_count = classifications
        .iter()
        .filter(|c| c.isolated_candidate)
        .count();
    Ok(RefinementReport {
        halfline_start,
        lambda_max,
        isolated_count,
        essential_approximant: fine_gaps.mean_gap <= coarse_gaps.mean_gap
            && fine_gaps.count > coarse_gaps.count,
        classifications,
        coarse_gaps,
        fine_gaps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventProbe {
    pub lambda: Complex64,
    pub sigma_min: f64,
    /// Weighted resolvent ratio in the parameter-dependent norms; absent
    /// when the shifted matrix is numerically singular.
    pub weighted_ratio: Option<f64>,
    pub resolvent_evidence: bool,
}

/// Probe resolvent-set membership: smallest singular value of the shifted
/// matrix and the weighted resolvent norm, per lambda.
pub fn resolvent_probe(
    op: &AssembledOperator,
    sys: &DNSystem,
    lambdas: &[Complex64],
    floor: f64,
) -> Vec<ResolventProbe> {
    let size = op.size();
    let n = op.nsys;
    let orders = sys.orders();
    lambdas
        .iter()
        .map(|&lambda| {
            let shifted = &op.matrix - DMatrix::from_diagonal_element(size, size, lambda);
            let svd = shifted.clone().svd(false, false);
            let sigma_min = svd.singular_values.min();
            let weighted_ratio = shifted.clone().try_inverse().map(|mut inv| {
                for row in 0..size {
                    let wj = anisotropic_weight(
                        &op.spec.xi_at(row / n),
                        lambda,
                        orders.m()[row % n],
                    )
                    .powi(orders.t()[row % n] as i32);
                    for col in 0..size {
                        let wk = anisotropic_weight(
                            &op.spec.xi_at(col / n),
                            lambda,
                            orders.m()[col % n],
                        )
                        .powi(orders.s()[col % n] as i32);
                        inv[(row, col)] *= wj * wk;
                    }
                }
                inv.svd(false, false).singular_values.max()
            });
            ResolventProbe {
                lambda,
                sigma_min,
                weighted_ratio,
                resolvent_evidence: sigma_min > floor,
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexProbe {
    pub dim_ker: usize,
    pub dim_coker: usize,
    pub index: i64,
    pub tolerance: f64,
    /// Set when a singular value sits too close to the cut.
    pub ambiguous: bool,
}

/// Count singular values below tolerance for `matrix - lambda` and its
/// conjugate transpose. Square discretizations force index 0; the counts
/// and their agreement are the meaningful output.
pub fn index_probe(
    op: &AssembledOperator,
    lambda: Complex64,
    tolerance: Option<f64>,
) -> Result<IndexProbe> {
    let size = op.size();
    let shifted = &op.matrix - DMatrix::from_diagonal_element(size, size, lambda);
    let sv = shifted.clone().svd(false, false).singular_values;
    let sv_adj = shifted.adjoint().svd(false, false).singular_values;
    let tol = tolerance.unwrap_or(1e-8 * sv.max());
    let count = |vals: &DVector<f64>| vals.iter().filter(|&&s| s < tol).count();
    let dim_ker = count(&sv);
    let dim_coker = count(&sv_adj);
    let ambiguous = sv
        .iter()
        .chain(sv_adj.iter())
        .any(|&s| s >= tol / 3.0 && s <= 3.0 * tol);
    Ok(IndexProbe {
        dim_ker,
        dim_coker,
        index: dim_ker as i64 - dim_coker as i64,
        tolerance: tol,
        ambiguous,
    })
}
