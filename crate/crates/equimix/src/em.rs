//! Baseline EM estimators: homoscedastic normal, eigenvalue-bounded
//! heteroscedastic normal, plus shared initialization and convergence control.
//!
//! All estimators start from hard partitions (the M-step runs first on one-hot
//! responsibilities), stop on a scale-free relative log-likelihood criterion,
//! and pick the best of several random starts by final log-likelihood.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EquimixError, Result};
use crate::linalg::{sym_eig, SymMatrix};
use crate::model::{
    factor_cov, hard_assign, log_density_column, log_sum_exp, Dataset, GaussianFactor,
    MixtureParams, ResponsibilityMatrix,
};

/// Stable seed derivation for independent sub-streams (starts, folds,
/// replications). SplitMix64 over the pair, so the mapping does not depend on
/// evaluation order.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Iteration and restart control shared by every estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmControl {
    /// Hard cap on EM iterations per start.
    pub max_iters: usize,
    /// Stop when `|ℓ_t − ℓ_{t−1}| / (1 + |ℓ_t|)` falls below this.
    pub rel_tol: f64,
    /// Number of random initial partitions.
    pub n_starts: usize,
    /// Base seed; per-start seeds are derived from it.
    pub seed: u64,
}

impl Default for EmControl {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rel_tol: 1e-8,
            n_starts: 10,
            seed: 20240501,
        }
    }
}

impl EmControl {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.n_starts == 0 || !(self.rel_tol > 0.0) {
            return Err(EquimixError::ConfigError(
                "max_iters >= 1, n_starts >= 1, rel_tol > 0 required".into(),
            ));
        }
        Ok(())
    }
}

/// Counters for the numerical fallbacks taken during a fit.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Empty-component reinitializations performed.
    pub rescues: usize,
    /// Ridge regularizations applied to a pooled scatter.
    pub ridge_fallbacks: usize,
}

/// Converged parameters plus everything needed to audit the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub params: MixtureParams,
    /// Per-iteration log-likelihood of the final EM segment (non-decreasing).
    /// For constrained fits these are whitened-space values.
    pub loglik_trace: Vec<f64>,
    /// Log-likelihood of the fitted parameters on the training data, in
    /// original-space units.
    pub final_loglik: f64,
    pub responsibilities: ResponsibilityMatrix,
    /// Hard assignment of each observation (1-based).
    pub labels: Vec<usize>,
    pub converged: bool,
    /// Total E-steps performed, counting iterations discarded by rescues.
    pub iterations: usize,
    /// Which random start produced this result.
    pub start_index: usize,
    pub c_used: Option<f64>,
    pub psi_used: Option<SymMatrix>,
    pub diagnostics: FitDiagnostics,
}

/// Uniform random hard partition of `n` rows into `1..=g`, re-drawn until
/// every class has at least `min_class` members (capped at `n / g`); after a
/// retry cap the smallest classes are topped up by reassigning random rows.
pub fn random_partition_init(
    n: usize,
    g: usize,
    min_class: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if g == 0 || n < g {
        return Err(EquimixError::InvalidInput(format!(
            "cannot partition {n} rows into {g} classes"
        )));
    }
    let target = min_class.max(1).min(n / g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut counts = vec![0usize; g];
        for l in labels.iter_mut() {
            *l = rng.gen_range(1..=g);
            counts[*l - 1] += 1;
        }
        if counts.iter().all(|&c| c >= target) {
            return Ok(labels);
        }
    }
    // Top up the smallest classes from rows of classes above target.
    let mut counts = vec![0usize; g];
    for &l in &labels {
        counts[l - 1] += 1;
    }
    while let Some(small) = (0..g).find(|&k| counts[k] < target) {
        let i = rng.gen_range(0..n);
        let from = labels[i] - 1;
        if from != small && counts[from] > target {
            counts[from] -= 1;
            counts[small] += 1;
            labels[i] = small + 1;
        }
    }
    Ok(labels)
}

/// Covariance update rule of the shared Gaussian EM core.
#[derive(Debug, Clone, Copy)]
pub(crate) enum CovUpdate {
    /// One covariance pooled across components (divisor n).
    PooledWithin,
    /// Per-component scatter with eigenvalues clipped into `[lower, upper]`.
    EigenBox { lower: f64, upper: f64 },
}

struct Component {
    weight: f64,
    mean: DVector<f64>,
    cov: SymMatrix,
    factor: GaussianFactor,
}

pub(crate) struct EmRun {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<SymMatrix>,
    pub resp: DMatrix<f64>,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub rescues: usize,
    pub ridge_fallbacks: usize,
}

impl EmRun {
    pub fn final_loglik(&self) -> f64 {
        *self.trace.last().expect("trace never empty")
    }

    pub fn into_fit_result(self, start_index: usize) -> FitResult {
        let params =
            MixtureParams::from_parts_unchecked(self.weights, self.means, self.covariances);
        let resp = ResponsibilityMatrix::from_normalized(self.resp);
        let labels = hard_assign(&resp);
        let final_loglik = *self.trace.last().expect("trace never empty");
        FitResult {
            params,
            final_loglik,
            loglik_trace: self.trace,
            responsibilities: resp,
            labels,
            converged: self.converged,
            iterations: self.iterations,
            start_index,
            c_used: None,
            psi_used: None,
            diagnostics: FitDiagnostics {
                rescues: self.rescues,
                ridge_fallbacks: self.ridge_fallbacks,
            },
        }
    }
}

fn clip(v: f64, lower: f64, upper: f64) -> f64 {
    v.max(lower).min(upper)
}

/// Weighted scatter `Σ_i u_i (x_i − mean)(x_i − mean)ᵀ` (no divisor).
fn weighted_scatter(rows: &DMatrix<f64>, resp_col: &[f64], mean: &DVector<f64>) -> DMatrix<f64> {
    let mut centered = rows.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut scaled = centered.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= resp_col[i];
    }
    centered.transpose() * scaled
}

fn spectral_factor(basis: &DMatrix<f64>, eigenvalues: &DVector<f64>) -> GaussianFactor {
    let half_logdet = 0.5 * eigenvalues.iter().map(|l| l.ln()).sum::<f64>();
    let inv_sqrt =
        DVector::from_iterator(eigenvalues.len(), eigenvalues.iter().map(|l| l.sqrt().recip()));
    GaussianFactor {
        p: DMatrix::from_diagonal(&inv_sqrt) * basis.transpose(),
        half_logdet,
    }
}

/// Factors a pooled covariance, applying the ridge fallback when Cholesky
/// rejects it. Returns the (possibly ridged) covariance, its factor, and
/// whether the ridge was needed.
fn factor_pooled(pooled: DMatrix<f64>) -> Result<(SymMatrix, GaussianFactor, bool)> {
    let dim = pooled.nrows();
    let sym = SymMatrix::from_matrix(pooled)?;
    match factor_cov(&sym) {
        Ok(f) => Ok((sym, f, false)),
        Err(_) => {
            let ridge = 1e-8 * sym.trace() / dim as f64;
            let ridged = SymMatrix::from_matrix(
                sym.as_matrix() + DMatrix::identity(dim, dim) * ridge.max(f64::MIN_POSITIVE),
            )?;
            let f = factor_cov(&ridged).map_err(|_| {
                EquimixError::EstimationFailed("pooled scatter singular after ridge".into())
            })?;
            Ok((ridged, f, true))
        }
    }
}

struct EmState {
    comps: Vec<Component>,
}

/// One M-step from responsibilities. `masses[g]` must equal the column sums
/// of `resp`.
fn m_step(
    rows: &DMatrix<f64>,
    resp: &DMatrix<f64>,
    masses: &[f64],
    cov: &CovUpdate,
    ridge_fallbacks: &mut usize,
) -> Result<EmState> {
    let n = rows.nrows();
    let dim = rows.ncols();
    let g = masses.len();
    let mut weights = Vec::with_capacity(g);
    let mut means = Vec::with_capacity(g);
    for k in 0..g {
        weights.push(masses[k] / n as f64);
        let mut mean = DVector::zeros(dim);
        for i in 0..n {
            let u = resp[(i, k)];
            if u > 0.0 {
                mean += rows.row(i).transpose() * u;
            }
        }
        means.push(mean / masses[k]);
    }

    let mut comps = Vec::with_capacity(g);
    match cov {
        CovUpdate::PooledWithin => {
            let mut pooled = DMatrix::zeros(dim, dim);
            for k in 0..g {
                let col: Vec<f64> = (0..n).map(|i| resp[(i, k)]).collect();
                pooled += weighted_scatter(rows, &col, &means[k]);
            }
            pooled /= n as f64;
            let (cov, factor, ridged) = factor_pooled(pooled)?;
            if ridged {
                *ridge_fallbacks += 1;
            }
            for k in 0..g {
                comps.push(Component {
                    weight: weights[k],
                    mean: means[k].clone(),
                    cov: cov.clone(),
                    factor: GaussianFactor {
                        p: factor.p.clone(),
                        half_logdet: factor.half_logdet,
                    },
                });
            }
        }
        CovUpdate::EigenBox { lower, upper } => {
            for k in 0..g {
                let col: Vec<f64> = (0..n).map(|i| resp[(i, k)]).collect();
                let scatter = weighted_scatter(rows, &col, &means[k]) / masses[k];
                let decomp = sym_eig(&SymMatrix::from_matrix(scatter)?)?;
                let clipped = DVector::from_iterator(
                    dim,
                    decomp.eigenvalues.iter().map(|&l| clip(l, *lower, *upper)),
                );
                let cov = SymMatrix::from_matrix(
                    &decomp.basis * DMatrix::from_diagonal(&clipped) * decomp.basis.transpose(),
                )?;
                let factor = spectral_factor(&decomp.basis, &clipped);
                comps.push(Component {
                    weight: weights[k],
                    mean: means[k].clone(),
                    cov,
                    factor,
                });
            }
        }
    }
    Ok(EmState { comps })
}

/// E-step: responsibilities, total log-likelihood, and per-row mixture
/// log-density.
fn e_step(rows: &DMatrix<f64>, state: &EmState) -> (DMatrix<f64>, f64, Vec<f64>) {
    let n = rows.nrows();
    let g = state.comps.len();
    let mut wld = DMatrix::zeros(n, g);
    let mut col = vec![0.0; n];
    for (k, comp) in state.comps.iter().enumerate() {
        log_density_column(rows, &comp.mean, &comp.factor, &mut col);
        let logw = comp.weight.ln();
        for i in 0..n {
            wld[(i, k)] = logw + col[i];
        }
    }
    let mut row_ll = vec![0.0; n];
    let mut total = 0.0;
    let mut buf = vec![0.0; g];
    for i in 0..n {
        for k in 0..g {
            buf[k] = wld[(i, k)];
        }
        let lse = log_sum_exp(&buf);
        row_ll[i] = lse;
        total += lse;
        for k in 0..g {
            wld[(i, k)] = (wld[(i, k)] - lse).exp();
        }
    }
    (wld, total, row_ll)
}

const EMPTY_MASS_FACTOR: f64 = 1e-8;
const MAX_RESCUES: usize = 3;

/// Shared Gaussian EM core: runs from one hard partition to convergence.
///
/// A rescue reinitializes an emptied component at the lowest-density
/// observation and restarts the trace, so the reported trace is always the
/// monotone tail of the run.
pub(crate) fn gaussian_em(
    rows: &DMatrix<f64>,
    g: usize,
    cov: &CovUpdate,
    control: &EmControl,
    init_labels: &[usize],
) -> Result<EmRun> {
    control.validate()?;
    let n = rows.nrows();
    let dim = rows.ncols();
    if n <= g {
        return Err(EquimixError::InvalidInput(format!(
            "need more than {g} observations, got {n}"
        )));
    }
    if init_labels.len() != n || init_labels.iter().any(|&l| l == 0 || l > g) {
        return Err(EquimixError::InvalidInput(
            "initial labels must cover the rows with values in 1..=G".into(),
        ));
    }

    // Overall sample covariance, used when rescuing an emptied component.
    let grand_mean = rows.row_sum().transpose() / n as f64;
    let ones = vec![1.0; n];
    let sample_cov = weighted_scatter(rows, &ones, &grand_mean) / n as f64;

    let one_hot = ResponsibilityMatrix::from_labels(init_labels, g)?;
    let init_masses: Vec<f64> = (0..g)
        .map(|k| one_hot.values().column(k).sum().max(f64::MIN_POSITIVE))
        .collect();
    let mut ridge_fallbacks = 0usize;
    let mut state = m_step(rows, one_hot.values(), &init_masses, cov, &mut ridge_fallbacks)?;

    let mut trace: Vec<f64> = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    let mut rescues = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;
    let empty_threshold = dim as f64 * EMPTY_MASS_FACTOR;

    let mut resp;
    loop {
        let (r, ll, row_ll) = e_step(rows, &state);
        resp = r;
        iterations += 1;
        let masses: Vec<f64> = (0..g).map(|k| resp.column(k).sum()).collect();

        if let Some(bad) = masses.iter().position(|&m| m < empty_threshold) {
            if rescues >= MAX_RESCUES {
                trace.push(ll);
                break;
            }
            rescues += 1;
            rescue_component(&mut state, bad, rows, &row_ll, &sample_cov, cov)?;
            trace.clear();
            prev_ll = f64::NEG_INFINITY;
            continue;
        }

        trace.push(ll);
        if (ll - prev_ll).abs() / (1.0 + ll.abs()) < control.rel_tol {
            converged = true;
            break;
        }
        prev_ll = ll;
        if iterations >= control.max_iters {
            break;
        }
        state = m_step(rows, &resp, &masses, cov, &mut ridge_fallbacks)?;
    }

    Ok(EmRun {
        weights: state.comps.iter().map(|c| c.weight).collect(),
        means: state.comps.iter().map(|c| c.mean.clone()).collect(),
        covariances: state.comps.iter().map(|c| c.cov.clone()).collect(),
        resp,
        trace,
        converged,
        iterations,
        rescues,
        ridge_fallbacks,
    })
}

/// Reinitializes component `bad` at the observation with the lowest mixture
/// density; its covariance is reset to the (rule-consistent) sample estimate.
fn rescue_component(
    state: &mut EmState,
    bad: usize,
    rows: &DMatrix<f64>,
    row_ll: &[f64],
    sample_cov: &DMatrix<f64>,
    cov: &CovUpdate,
) -> Result<()> {
    let worst = row_ll
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("finite log-density"))
        .map(|(i, _)| i)
        .unwrap_or(0);
    state.comps[bad].mean = rows.row(worst).transpose();
    let (new_cov, factor) = match cov {
        CovUpdate::PooledWithin => {
            let sym = SymMatrix::from_matrix(sample_cov.clone())?;
            let (c, f, _) = factor_pooled(sym.into_matrix())?;
            (c, f)
        }
        CovUpdate::EigenBox { lower, upper } => {
            let decomp = sym_eig(&SymMatrix::from_matrix(sample_cov.clone())?)?;
            let clipped = DVector::from_iterator(
                rows.ncols(),
                decomp.eigenvalues.iter().map(|&l| clip(l, *lower, *upper)),
            );
            let c = SymMatrix::from_matrix(
                &decomp.basis * DMatrix::from_diagonal(&clipped) * decomp.basis.transpose(),
            )?;
            let f = spectral_factor(&decomp.basis, &clipped);
            (c, f)
        }
    };
    state.comps[bad].cov = new_cov;
    state.comps[bad].factor = factor;
    let g = state.comps.len();
    state.comps[bad].weight = 1.0 / g as f64;
    let total: f64 = state.comps.iter().map(|c| c.weight).sum();
    for comp in state.comps.iter_mut() {
        comp.weight /= total;
    }
    Ok(())
}

/// Runs the EM core from each start and keeps the best final log-likelihood.
pub(crate) fn run_multistart(
    rows: &DMatrix<f64>,
    g: usize,
    cov: &CovUpdate,
    control: &EmControl,
    starts: &[Vec<usize>],
) -> Result<(EmRun, usize)> {
    if starts.is_empty() {
        return Err(EquimixError::InvalidInput("no starting partitions".into()));
    }
    let mut best: Option<(EmRun, usize)> = None;
    for (s, labels) in starts.iter().enumerate() {
        let run = gaussian_em(rows, g, cov, control, labels)?;
        let better = match &best {
            None => true,
            Some((b, _)) => run.final_loglik() > b.final_loglik(),
        };
        if better {
            best = Some((run, s));
        }
    }
    Ok(best.expect("at least one start"))
}

/// Default random starting partitions: `n_starts` draws with per-start seeds
/// derived from the control seed, each class seeded with at least `J + 1`
/// members when the sample allows it.
pub fn default_starts(data: &Dataset, g: usize, control: &EmControl) -> Result<Vec<Vec<usize>>> {
    (0..control.n_starts)
        .map(|s| {
            random_partition_init(
                data.n(),
                g,
                data.dim() + 1,
                derive_seed(control.seed, s as u64),
            )
        })
        .collect()
}

/// Homoscedastic normal mixture: all components share the pooled within
/// covariance.
pub fn fit_homoscedastic_normal(data: &Dataset, g: usize, control: &EmControl) -> Result<FitResult> {
    let starts = default_starts(data, g, control)?;
    fit_homoscedastic_normal_from_starts(data, g, &starts, control)
}

/// Homoscedastic normal mixture from explicit starting partitions.
pub fn fit_homoscedastic_normal_from_starts(
    data: &Dataset,
    g: usize,
    starts: &[Vec<usize>],
    control: &EmControl,
) -> Result<FitResult> {
    let (run, s) = run_multistart(data.rows(), g, &CovUpdate::PooledWithin, control, starts)?;
    Ok(run.into_fit_result(s))
}

/// Heteroscedastic normal mixture with per-component covariance eigenvalues
/// clipped into `[lower, upper]` at every M-step.
pub fn fit_heteroscedastic_bounded(
    data: &Dataset,
    g: usize,
    lower: f64,
    upper: f64,
    control: &EmControl,
) -> Result<FitResult> {
    let starts = default_starts(data, g, control)?;
    fit_heteroscedastic_bounded_from_starts(data, g, lower, upper, &starts, control)
}

/// Eigenvalue-bounded heteroscedastic fit from explicit starting partitions.
pub fn fit_heteroscedastic_bounded_from_starts(
    data: &Dataset,
    g: usize,
    lower: f64,
    upper: f64,
    starts: &[Vec<usize>],
    control: &EmControl,
) -> Result<FitResult> {
    if !(lower > 0.0) || lower > upper {
        return Err(EquimixError::ConfigError(format!(
            "need 0 < lower <= upper, got [{lower}, {upper}]"
        )));
    }
    let (run, s) = run_multistart(
        data.rows(),
        g,
        &CovUpdate::EigenBox { lower, upper },
        control,
        starts,
    )?;
    Ok(run.into_fit_result(s))
}

/// Default eigenvalue bounds used by the heteroscedastic baseline.
pub const HET_DEFAULT_LOWER: f64 = 1e-7;
pub const HET_DEFAULT_UPPER: f64 = 1e7;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_cluster_data(n_per: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_per {
            rows.push(vec![
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ]);
            labels.push(1);
        }
        for _ in 0..n_per {
            rows.push(vec![
                8.0 + rng.gen_range(-0.5..0.5),
                8.0 + rng.gen_range(-0.5..0.5),
            ]);
            labels.push(2);
        }
        Dataset::from_rows(&rows, Some(labels)).unwrap()
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        use std::collections::HashMap;
        let mut map: HashMap<usize, usize> = HashMap::new();
        for (&x, &y) in a.iter().zip(b.iter()) {
            match map.get(&x) {
                Some(&m) if m != y => return false,
                None => {
                    map.insert(x, y);
                }
                _ => {}
            }
        }
        let vals: std::collections::HashSet<usize> = map.values().cloned().collect();
        vals.len() == map.len()
    }

    #[test]
    fn partition_covers_all_classes_when_n_equals_g() {
        let labels = random_partition_init(3, 3, 9, 7).unwrap();
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2, 3]);
    }

    #[test]
    fn partition_deterministic() {
        let a = random_partition_init(50, 3, 9, 42).unwrap();
        let b = random_partition_init(50, 3, 9, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partition_never_leaves_empty_class() {
        for seed in 0..1000 {
            let labels = random_partition_init(100, 3, 9, seed).unwrap();
            let mut counts = [0usize; 3];
            for &l in &labels {
                counts[l - 1] += 1;
            }
            assert!(counts.iter().all(|&c| c >= 9), "seed {seed}: {counts:?}");
        }
    }

    #[test]
    fn partition_rejects_n_below_g() {
        assert!(random_partition_init(2, 3, 1, 0).is_err());
    }

    #[test]
    fn homn_separates_two_clusters() {
        let data = two_cluster_data(20, 3);
        let control = EmControl::default();
        let fit = fit_homoscedastic_normal(&data, 2, &control).unwrap();
        assert!(same_partition(data.true_labels().unwrap(), &fit.labels));
    }

    #[test]
    fn homn_single_component_closed_form() {
        let data = two_cluster_data(10, 5);
        let control = EmControl {
            n_starts: 1,
            ..EmControl::default()
        };
        let fit = fit_homoscedastic_normal(&data, 1, &control).unwrap();
        let mean = data.mean();
        let cov = data.sample_covariance();
        assert!((fit.params.means()[0].clone() - mean).amax() < 1e-10);
        assert!((fit.params.covariances()[0].as_matrix() - cov.as_matrix()).amax() < 1e-10);
    }

    #[test]
    fn traces_non_decreasing() {
        let data = two_cluster_data(25, 11);
        let control = EmControl::default();
        for fit in [
            fit_homoscedastic_normal(&data, 2, &control).unwrap(),
            fit_heteroscedastic_bounded(&data, 2, HET_DEFAULT_LOWER, HET_DEFAULT_UPPER, &control)
                .unwrap(),
        ] {
            for w in fit.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "trace decreased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn hetn_fully_pinned_bounds_give_identity() {
        let data = two_cluster_data(15, 13);
        let control = EmControl::default();
        let fit = fit_heteroscedastic_bounded(&data, 2, 1.0, 1.0, &control).unwrap();
        for cov in fit.params.covariances() {
            assert!(
                (cov.as_matrix() - DMatrix::identity(2, 2)).amax() < 1e-10,
                "covariance not pinned to identity"
            );
        }
    }

    #[test]
    fn hetn_inactive_bounds_match_wide_bounds() {
        let data = two_cluster_data(25, 17);
        let control = EmControl {
            n_starts: 1,
            ..EmControl::default()
        };
        let starts = default_starts(&data, 2, &control).unwrap();
        let tight =
            fit_heteroscedastic_bounded_from_starts(&data, 2, 1e-4, 1e4, &starts, &control)
                .unwrap();
        let wide =
            fit_heteroscedastic_bounded_from_starts(&data, 2, 1e-12, 1e12, &starts, &control)
                .unwrap();
        for g in 0..2 {
            assert!((tight.params.means()[g].clone() - wide.params.means()[g].clone()).amax() < 1e-9);
            assert!(
                (tight.params.covariances()[g].as_matrix()
                    - wide.params.covariances()[g].as_matrix())
                .amax()
                    < 1e-9
            );
        }
    }

    #[test]
    fn labels_equal_hard_assignment() {
        let data = two_cluster_data(12, 23);
        let fit = fit_homoscedastic_normal(&data, 2, &EmControl::default()).unwrap();
        assert_eq!(fit.labels, hard_assign(&fit.responsibilities));
        assert_abs_diff_eq!(
            fit.final_loglik,
            *fit.loglik_trace.last().unwrap(),
            epsilon = 1e-12
        );
    }
}
