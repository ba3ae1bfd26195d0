//! Mixture parameter container, Gaussian log-densities, mixture
//! log-likelihood, posterior responsibilities, and hard assignment.
//!
//! All density work happens in log space with max-shifting so that
//! near-degenerate components cannot underflow the responsibilities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EquimixError, Result};
use crate::linalg::{pd_tolerance, sym_eig, SymMatrix};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Rows are observations; an optional ground-truth label per row (1-based)
/// rides along for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: DMatrix<f64>,
    true_labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(rows: DMatrix<f64>, true_labels: Option<Vec<usize>>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(EquimixError::DataError("empty dataset".into()));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(EquimixError::DataError(
                "dataset contains non-finite values".into(),
            ));
        }
        if let Some(labels) = &true_labels {
            if labels.len() != rows.nrows() {
                return Err(EquimixError::DataError(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    rows.nrows()
                )));
            }
            if labels.iter().any(|&l| l == 0) {
                return Err(EquimixError::DataError("labels must be 1-based".into()));
            }
        }
        Ok(Self { rows, true_labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], true_labels: Option<Vec<usize>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(EquimixError::DataError("empty dataset".into()));
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(EquimixError::DataError("ragged rows".into()));
        }
        let m = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::new(m, true_labels)
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn row_vec(&self, i: usize) -> DVector<f64> {
        self.rows.row(i).transpose()
    }

    pub fn true_labels(&self) -> Option<&[usize]> {
        self.true_labels.as_deref()
    }

    /// Subset of rows by index, keeping labels when present.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        if idx.iter().any(|&i| i >= self.n()) {
            return Err(EquimixError::InvalidInput("row index out of range".into()));
        }
        let m = DMatrix::from_fn(idx.len(), self.dim(), |r, c| self.rows[(idx[r], c)]);
        let labels = self
            .true_labels
            .as_ref()
            .map(|l| idx.iter().map(|&i| l[i]).collect());
        Self::new(m, labels)
    }

    /// Applies the affine map `x -> a x + b` to every row.
    pub fn transformed(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() || b.len() != self.dim() {
            return Err(EquimixError::InvalidInput(
                "transform shape mismatch".into(),
            ));
        }
        let mut m = &self.rows * a.transpose();
        for mut row in m.row_iter_mut() {
            row += b.transpose();
        }
        Self::new(m, self.true_labels.clone())
    }

    /// Sample mean vector.
    pub fn mean(&self) -> DVector<f64> {
        let n = self.n() as f64;
        self.rows.row_sum().transpose() / n
    }

    /// Maximum-likelihood sample covariance (divisor `n`).
    pub fn sample_covariance(&self) -> SymMatrix {
        let mean = self.mean();
        let mut centered = self.rows.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let s = centered.transpose() * &centered / self.n() as f64;
        SymMatrix::from_matrix(s).expect("finite covariance")
    }
}

/// Full Gaussian-mixture parameter set: weights on the simplex, one mean and
/// one positive-definite covariance per component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureParams {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<SymMatrix>,
}

impl MixtureParams {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covariances: Vec<SymMatrix>,
    ) -> Result<Self> {
        let g = weights.len();
        if g == 0 || means.len() != g || covariances.len() != g {
            return Err(EquimixError::InvalidInput(
                "weights, means, covariances must have equal non-zero length".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(EquimixError::InvalidInput(
                "weights must be strictly positive".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(EquimixError::InvalidInput(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        let dim = means[0].len();
        if means.iter().any(|m| m.len() != dim) || covariances.iter().any(|c| c.dim() != dim) {
            return Err(EquimixError::InvalidInput(
                "means and covariances must share one dimension".into(),
            ));
        }
        for (g, cov) in covariances.iter().enumerate() {
            let eig = sym_eig(cov)?;
            let smallest = eig.eigenvalues[dim - 1];
            if smallest <= pd_tolerance(eig.eigenvalues[0]) {
                return Err(EquimixError::NotPositiveDefinite(format!(
                    "covariance of component {} has eigenvalue {smallest:.3e}",
                    g + 1
                )));
            }
        }
        Ok(Self {
            weights,
            means,
            covariances,
        })
    }

    /// Construction path for estimator outputs whose covariances are
    /// positive definite by construction (eigenvalue clipping); skips the
    /// eigenvalue re-check that `new` performs on user input.
    pub(crate) fn from_parts_unchecked(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covariances: Vec<SymMatrix>,
    ) -> Self {
        Self {
            weights,
            means,
            covariances,
        }
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[SymMatrix] {
        &self.covariances
    }
}

/// Posterior membership probabilities, one row per observation; every row is
/// non-negative and sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityMatrix {
    values: DMatrix<f64>,
}

impl ResponsibilityMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        for (i, row) in values.row_iter().enumerate() {
            if row.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(EquimixError::InvalidInput(format!(
                    "responsibility row {i} has negative or non-finite entries"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(EquimixError::InvalidInput(format!(
                    "responsibility row {i} sums to {s}"
                )));
            }
        }
        Ok(Self { values })
    }

    pub(crate) fn from_normalized(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.values.ncols()
    }

    /// One-hot responsibilities from a 1-based hard partition.
    pub fn from_labels(labels: &[usize], g: usize) -> Result<Self> {
        if labels.iter().any(|&l| l == 0 || l > g) {
            return Err(EquimixError::InvalidInput("labels must lie in 1..=G".into()));
        }
        let mut m = DMatrix::zeros(labels.len(), g);
        for (i, &l) in labels.iter().enumerate() {
            m[(i, l - 1)] = 1.0;
        }
        Ok(Self { values: m })
    }
}

/// Precision factor of a covariance: a matrix `P` with `Σ⁻¹ = Pᵀ P`, plus
/// `½·log|Σ|`. Cholesky when it succeeds, spectral otherwise.
pub(crate) struct GaussianFactor {
    pub p: DMatrix<f64>,
    pub half_logdet: f64,
}

pub(crate) fn factor_cov(cov: &SymMatrix) -> Result<GaussianFactor> {
    if let Some(chol) = cov.as_matrix().clone().cholesky() {
        let l = chol.l();
        let half_logdet: f64 = (0..cov.dim()).map(|i| l[(i, i)].ln()).sum();
        let p = l
            .solve_lower_triangular(&DMatrix::identity(cov.dim(), cov.dim()))
            .ok_or_else(|| EquimixError::SingularMatrix("cholesky inverse".into()))?;
        return Ok(GaussianFactor { p, half_logdet });
    }
    // Spectral fallback for matrices Cholesky rejects near the PD boundary.
    let eig = sym_eig(cov)?;
    let tol = pd_tolerance(eig.eigenvalues[0]);
    if eig.eigenvalues.iter().any(|&l| l <= tol) {
        return Err(EquimixError::NotPositiveDefinite(format!(
            "smallest eigenvalue {:.3e}",
            eig.eigenvalues[cov.dim() - 1]
        )));
    }
    let half_logdet = 0.5 * eig.eigenvalues.iter().map(|l| l.ln()).sum::<f64>();
    let inv_sqrt =
        DVector::from_iterator(cov.dim(), eig.eigenvalues.iter().map(|l| l.sqrt().recip()));
    let p = DMatrix::from_diagonal(&inv_sqrt) * eig.basis.transpose();
    Ok(GaussianFactor { p, half_logdet })
}

/// Fills `out` (length n) with `log φ(x_i; mean, factor)` for every row.
pub(crate) fn log_density_column(
    rows: &DMatrix<f64>,
    mean: &DVector<f64>,
    factor: &GaussianFactor,
    out: &mut [f64],
) {
    let dim = rows.ncols();
    let base = -0.5 * dim as f64 * LN_2PI - factor.half_logdet;
    let mut centered = rows.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let proj = centered * factor.p.transpose();
    for (i, row) in proj.row_iter().enumerate() {
        out[i] = base - 0.5 * row.iter().map(|v| v * v).sum::<f64>();
    }
}

/// `n × G` matrix of `log(p_g φ(x_i; μ_g, Σ_g))`.
pub(crate) fn weighted_log_densities(
    data: &Dataset,
    params: &MixtureParams,
) -> Result<DMatrix<f64>> {
    if params.dim() != data.dim() {
        return Err(EquimixError::InvalidInput(format!(
            "data dimension {} vs parameter dimension {}",
            data.dim(),
            params.dim()
        )));
    }
    let n = data.n();
    let g = params.n_components();
    let mut out = DMatrix::zeros(n, g);
    let mut col = vec![0.0; n];
    for k in 0..g {
        let factor = factor_cov(&params.covariances()[k])?;
        log_density_column(data.rows(), &params.means()[k], &factor, &mut col);
        let logw = params.weights()[k].ln();
        for i in 0..n {
            out[(i, k)] = logw + col[i];
        }
    }
    Ok(out)
}

/// Log of the multivariate normal density `φ(x; mean, cov)`.
pub fn gaussian_logdensity(x: &DVector<f64>, mean: &DVector<f64>, cov: &SymMatrix) -> Result<f64> {
    if x.len() != mean.len() || cov.dim() != x.len() {
        return Err(EquimixError::InvalidInput("dimension mismatch".into()));
    }
    if x.iter().chain(mean.iter()).any(|v| !v.is_finite()) {
        return Err(EquimixError::InvalidInput("non-finite input".into()));
    }
    let factor = factor_cov(cov)?;
    let diff = x - mean;
    let proj = &factor.p * diff;
    Ok(-0.5 * x.len() as f64 * LN_2PI - factor.half_logdet - 0.5 * proj.norm_squared())
}

/// Log-sum-exp of a slice with max-shifting.
pub(crate) fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = vals.iter().map(|v| (v - m).exp()).sum();
    m + s.ln()
}

/// Observed-data mixture log-likelihood `Σ_i log Σ_g p_g φ(x_i; μ_g, Σ_g)`.
pub fn log_likelihood(data: &Dataset, params: &MixtureParams) -> Result<f64> {
    let wld = weighted_log_densities(data, params)?;
    let mut total = 0.0;
    let mut buf = vec![0.0; params.n_components()];
    for i in 0..data.n() {
        for k in 0..params.n_components() {
            buf[k] = wld[(i, k)];
        }
        total += log_sum_exp(&buf);
    }
    Ok(total)
}

/// Posterior membership probabilities `p(g | x_i)`, computed in log space.
pub fn posteriors(data: &Dataset, params: &MixtureParams) -> Result<ResponsibilityMatrix> {
    let wld = weighted_log_densities(data, params)?;
    Ok(ResponsibilityMatrix {
        values: normalize_log_rows(wld),
    })
}

/// Exponentiates and row-normalizes a matrix of log-weights.
pub(crate) fn normalize_log_rows(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - mx).exp();
            sum += *v;
        }
        row /= sum;
    }
    m
}

/// Hard assignment: 1-based index of the largest posterior in each row, ties
/// broken toward the lowest component index.
pub fn hard_assign(resp: &ResponsibilityMatrix) -> Vec<usize> {
    resp.values
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best + 1
        })
        .collect()
}

/// Maps parameters through the affine transform `x -> a x + b`: means become
/// `a μ + b`, covariances `a Σ aᵀ`, weights are unchanged.
pub fn transform_params(
    params: &MixtureParams,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<MixtureParams> {
    let dim = params.dim();
    if a.nrows() != dim || a.ncols() != dim || b.len() != dim {
        return Err(EquimixError::InvalidInput(
            "transform shape mismatch".into(),
        ));
    }
    let lu = a.clone().lu();
    let diag: Vec<f64> = (0..dim).map(|i| lu.u()[(i, i)].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
    if diag.iter().any(|&d| d <= 1e-12 * dmax.max(f64::MIN_POSITIVE)) {
        return Err(EquimixError::SingularMatrix(
            "transform matrix is singular".into(),
        ));
    }
    let means = params.means().iter().map(|m| a * m + b).collect();
    let covariances = params
        .covariances()
        .iter()
        .map(|c| SymMatrix::from_matrix(a * c.as_matrix() * a.transpose()))
        .collect::<Result<Vec<_>>>()?;
    MixtureParams::new(params.weights().to_vec(), means, covariances)
}
