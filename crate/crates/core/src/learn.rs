//! Kernel consumers: kernel ridge classification in dual form and a
//! permutation two-sample test on the biased MMD statistic.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuzzy::FuzzyRecord;
use crate::gram::{compute_gram, GramMatrix};
use crate::kernels::FuzzyKernelSpec;

/// Name of the generator behind every seeded shuffle in this module.
pub const RNG_NAME: &str = "ChaCha8Rng";

/// Kernel ridge classifier: `f(x) = Σ_j c_j k(x, x_j) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualModel {
    pub coefficients: DVector<f64>,
    pub train_ids: Vec<String>,
    pub bias: f64,
    pub spec: Option<FuzzyKernelSpec>,
    pub regularization: f64,
}

fn check_labels(labels: &[i8]) -> Result<()> {
    match labels
        .iter()
        .enumerate()
        .find(|(_, l)| **l != 1 && **l != -1)
    {
        Some((i, l)) => Err(Error::domain(format!(
            "label {l} at position {i} is not +1 or -1"
        ))),
        None => Ok(()),
    }
}

/// Solves `(G + λ I) c = y`. Labels are ±1, so the bias is fixed at 0.
pub fn fit(gram: &GramMatrix, labels: &[i8], lambda: f64) -> Result<DualModel> {
    if labels.len() != gram.len() {
        return Err(Error::domain(format!(
            "{} labels for a gram matrix of {} items",
            labels.len(),
            gram.len()
        )));
    }
    if gram.is_empty() {
        return Err(Error::domain("cannot fit on an empty training set"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!(
            "regularization must be > 0, got {lambda}"
        )));
    }
    check_labels(labels)?;

    let n = gram.len();
    let system = gram.values() + DMatrix::identity(n, n) * lambda;
    let rhs = DVector::from_iterator(n, labels.iter().map(|&l| l as f64));
    let coefficients = solve_symmetric(system, &rhs)?;
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric(
            "dual solve produced non-finite coefficients".into(),
        ));
    }
    Ok(DualModel {
        coefficients,
        train_ids: gram.item_ids().to_vec(),
        bias: 0.0,
        spec: gram.spec().cloned(),
        regularization: lambda,
    })
}

/// Cholesky solve, falling back to LU for indefinite systems (drastic or
/// Łukasiewicz kernels). Pivots below `n·ε` relative to the largest pivot
/// count as singular.
fn solve_symmetric(system: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = system.nrows();
    let threshold = n as f64 * f64::EPSILON;
    let well_conditioned = |pivots: &[f64]| {
        let max = pivots.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        let min = pivots.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
        max > 0.0 && min > threshold * max
    };
    if let Some(chol) = system.clone().cholesky() {
        // squared diagonal of L tracks the eigenvalue scale
        let pivots: Vec<f64> = chol.l_dirty().diagonal().iter().map(|d| d * d).collect();
        if well_conditioned(&pivots) {
            return Ok(chol.solve(rhs));
        }
        return Err(Error::Numeric(
            "regularized gram system is numerically singular".into(),
        ));
    }
    let lu = system.lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().copied().collect();
    if !well_conditioned(&pivots) {
        return Err(Error::Numeric(
            "regularized gram system is numerically singular".into(),
        ));
    }
    lu.solve(rhs)
        .ok_or_else(|| Error::Numeric("regularized gram system is singular".into()))
}

/// Real-valued decision function `cross · c + bias`.
pub fn decision_values(model: &DualModel, cross: &DMatrix<f64>) -> Result<DVector<f64>> {
    if cross.ncols() != model.coefficients.len() {
        return Err(Error::domain(format!(
            "cross matrix has {} columns, model has {} coefficients",
            cross.ncols(),
            model.coefficients.len()
        )));
    }
    Ok(cross * &model.coefficients + DVector::from_element(cross.nrows(), model.bias))
}

/// Predicted labels; a decision value of exactly 0 maps to +1.
pub fn predict(model: &DualModel, cross: &DMatrix<f64>) -> Result<Vec<i8>> {
    Ok(decision_values(model, cross)?
        .iter()
        .map(|&v| if v >= 0.0 { 1 } else { -1 })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub k: usize,
    pub seed: u64,
    pub regularization: f64,
    pub rng: &'static str,
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Seeded k-fold cross validation of the kernel ridge classifier on a
/// precomputed Gram matrix. Items are shuffled once and dealt round-robin
/// into folds.
pub fn cross_validate(
    gram: &GramMatrix,
    labels: &[i8],
    k: usize,
    lambda: f64,
    seed: u64,
) -> Result<CvReport> {
    let n = gram.len();
    if labels.len() != n {
        return Err(Error::domain(format!(
            "{} labels for {n} items",
            labels.len()
        )));
    }
    if k < 2 || k > n {
        return Err(Error::domain(format!(
            "fold count {k} must be between 2 and {n}"
        )));
    }
    check_labels(labels)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    for (pos, &item) in order.iter().enumerate() {
        fold_of[item] = pos % k;
    }

    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let train_gram = GramMatrix::from_matrix(submatrix(gram.values(), &train, &train), None)?;
        let train_labels: Vec<i8> = train.iter().map(|&i| labels[i]).collect();
        let model = fit(&train_gram, &train_labels, lambda)?;
        let predicted = predict(&model, &submatrix(gram.values(), &test, &train))?;
        let correct = test
            .iter()
            .zip(&predicted)
            .filter(|(&i, &p)| labels[i] == p)
            .count();
        folds.push(FoldResult {
            fold,
            n_train: train.len(),
            n_test: test.len(),
            accuracy: correct as f64 / test.len() as f64,
        });
    }
    let mean_accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / k as f64;
    Ok(CvReport {
        folds,
        mean_accuracy,
        k,
        seed,
        regularization: lambda,
        rng: RNG_NAME,
    })
}

/// Biased (V-statistic) squared MMD:
/// `mean(Kxx) + mean(Kyy) − 2 mean(Kxy)`, clamped at 0.
pub fn mmd_statistic(gxx: &DMatrix<f64>, gyy: &DMatrix<f64>, gxy: &DMatrix<f64>) -> Result<f64> {
    let (n, m) = (gxx.nrows(), gyy.nrows());
    if n == 0 || m == 0 {
        return Err(Error::domain("mmd needs two non-empty samples"));
    }
    if !gxx.is_square() || !gyy.is_square() || gxy.shape() != (n, m) {
        return Err(Error::domain(format!(
            "inconsistent shapes {:?}, {:?}, {:?}",
            gxx.shape(),
            gyy.shape(),
            gxy.shape()
        )));
    }
    let all_x: Vec<usize> = (0..n).collect();
    let all_y: Vec<usize> = (0..m).collect();
    Ok(combine(
        block_mean(gxx, &all_x, &all_x),
        block_mean(gyy, &all_y, &all_y),
        block_mean(gxy, &all_x, &all_y),
    ))
}

// Row-major summation so that the same index sets always give the same bits.
fn block_mean(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &i in rows {
        for &j in cols {
            sum += m[(i, j)];
        }
    }
    sum / (rows.len() * cols.len()) as f64
}

fn combine(xx: f64, yy: f64, xy: f64) -> f64 {
    (xx + yy - 2.0 * xy).max(0.0)
}

/// MMD statistic between two index sets of a pooled Gram matrix. Both index
/// lists must be sorted ascending.
fn pooled_mmd(pooled: &DMatrix<f64>, a: &[usize], b: &[usize]) -> f64 {
    combine(
        block_mean(pooled, a, a),
        block_mean(pooled, b, b),
        block_mean(pooled, a, b),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmdResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub seed: u64,
    pub rng: &'static str,
}

/// Permutation test given the pooled Gram matrix of `[sample A; sample B]`,
/// where the first `n_a` items form sample A.
///
/// Replica `r` shuffles with its own ChaCha8 stream `r` under `seed`, so the
/// result is independent of how replicas are scheduled.
pub fn mmd_permutation_test_pooled(
    pooled: &GramMatrix,
    n_a: usize,
    n_perm: usize,
    seed: u64,
) -> Result<MmdResult> {
    let total = pooled.len();
    if n_a == 0 || n_a >= total {
        return Err(Error::domain(format!(
            "sample sizes {n_a} and {} must both be positive",
            total.saturating_sub(n_a)
        )));
    }
    if n_perm == 0 {
        return Err(Error::domain("number of permutations must be positive"));
    }
    let values = pooled.values();
    let a: Vec<usize> = (0..n_a).collect();
    let b: Vec<usize> = (n_a..total).collect();
    let observed = pooled_mmd(values, &a, &b);

    let exceed = (0..n_perm)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut perm: Vec<usize> = (0..total).collect();
            perm.shuffle(&mut rng);
            let (pa, pb) = perm.split_at_mut(n_a);
            pa.sort_unstable();
            pb.sort_unstable();
            pooled_mmd(values, pa, pb) >= observed
        })
        .count();

    Ok(MmdResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + n_perm) as f64,
        n_permutations: n_perm,
        seed,
        rng: RNG_NAME,
    })
}

/// Two-sample permutation test on the biased MMD under `spec`. The pooled
/// Gram matrix is computed once and sub-indexed for every replica.
pub fn mmd_permutation_test(
    sample_a: &[FuzzyRecord],
    sample_b: &[FuzzyRecord],
    spec: &FuzzyKernelSpec,
    n_perm: usize,
    seed: u64,
) -> Result<MmdResult> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::domain("mmd needs two non-empty samples"));
    }
    let pooled: Vec<FuzzyRecord> = sample_a.iter().chain(sample_b).cloned().collect();
    let gram = compute_gram(&pooled, spec)?;
    mmd_permutation_test_pooled(&gram, sample_a.len(), n_perm, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::GaussianFuzzySet;

    fn gram(values: &[f64], n: usize) -> GramMatrix {
        GramMatrix::from_matrix(DMatrix::from_row_slice(n, n, values), None).unwrap()
    }

    #[test]
    fn fit_identity_and_scalar() {
        let g = GramMatrix::from_matrix(DMatrix::identity(3, 3), None).unwrap();
        let m = fit(&g, &[1, -1, 1], 0.5).unwrap();
        for (c, l) in m.coefficients.iter().zip([1.0, -1.0, 1.0]) {
            assert!((c - l / 1.5).abs() < 1e-15);
        }
        assert_eq!(m.bias, 0.0);

        let m = fit(&gram(&[2.0], 1), &[1], 1.0).unwrap();
        assert!((m.coefficients[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fit_preconditions() {
        let g = GramMatrix::from_matrix(DMatrix::identity(2, 2), None).unwrap();
        assert!(fit(&g, &[1], 1.0).is_err());
        assert!(fit(&g, &[1, -1], 0.0).is_err());
        assert!(fit(&g, &[1, 0], 1.0).is_err());
    }

    #[test]
    fn fit_falls_back_for_indefinite_systems() {
        // eigenvalues 3 and -1; with λ = 0.5 the system is indefinite but regular
        let g = gram(&[1.0, 2.0, 2.0, 1.0], 2);
        let m = fit(&g, &[1, -1], 0.5).unwrap();
        let sys = g.values() + DMatrix::identity(2, 2) * 0.5;
        let back = sys * &m.coefficients;
        assert!((back[0] - 1.0).abs() < 1e-12 && (back[1] + 1.0).abs() < 1e-12);

        // eigenvalue -1 cancelled exactly by λ = 1
        assert!(matches!(fit(&g, &[1, -1], 1.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn predict_examples() {
        let g = GramMatrix::from_matrix(DMatrix::identity(2, 2), None).unwrap();
        let m = fit(&g, &[1, -1], 0.1).unwrap();
        assert_eq!(predict(&m, &DMatrix::identity(2, 2)).unwrap(), vec![1, -1]);
        assert_eq!(predict(&m, &DMatrix::zeros(1, 2)).unwrap(), vec![1]);
        assert!(predict(&m, &DMatrix::zeros(1, 3)).is_err());

        // hand evaluation: c = (1, -2), rows (0.5, 0.5) -> -0.5, (1, 0.25) -> 0.5
        let model = DualModel {
            coefficients: DVector::from_vec(vec![1.0, -2.0]),
            train_ids: vec![],
            bias: 0.0,
            spec: None,
            regularization: 1.0,
        };
        let cross = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 1.0, 0.25]);
        assert_eq!(predict(&model, &cross).unwrap(), vec![-1, 1]);
    }

    #[test]
    fn mmd_statistic_examples() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let half = DMatrix::from_element(1, 1, 0.5);
        assert_eq!(mmd_statistic(&one, &one, &half).unwrap(), 1.0);

        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        assert_eq!(mmd_statistic(&k, &k, &k).unwrap(), 0.0);

        assert!(mmd_statistic(&DMatrix::zeros(0, 0), &one, &DMatrix::zeros(0, 1)).is_err());
        assert!(mmd_statistic(&one, &one, &DMatrix::zeros(2, 1)).is_err());
    }

    fn sample(means: &[f64]) -> Vec<FuzzyRecord> {
        means
            .iter()
            .map(|&m| GaussianFuzzySet::new(vec![m], vec![0.5]).unwrap().into())
            .collect()
    }

    #[test]
    fn identical_samples_give_p_one() {
        let s = sample(&[0.1, -0.4, 1.2, 0.7]);
        let r =
            mmd_permutation_test(&s, &s, &FuzzyKernelSpec::NonsingletonGaussian, 99, 7).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.rng, RNG_NAME);
    }

    #[test]
    fn permutation_test_is_reproducible() {
        let a = sample(&[0.1, -0.4, 1.2, 0.7, 0.0]);
        let b = sample(&[0.9, 1.4, 2.2, 0.3]);
        let spec = FuzzyKernelSpec::NonsingletonGaussian;
        let r1 = mmd_permutation_test(&a, &b, &spec, 200, 42).unwrap();
        let r2 = mmd_permutation_test(&a, &b, &spec, 200, 42).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.p_value >= 1.0 / 201.0 && r1.p_value <= 1.0);

        let seq = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let r3 = seq.install(|| mmd_permutation_test(&a, &b, &spec, 200, 42).unwrap());
        assert_eq!(r1, r3);
    }

    #[test]
    fn separated_samples_are_detected() {
        let a = sample(&[0.0, 0.2, -0.1, 0.3, -0.2, 0.1, 0.05, -0.15]);
        let b = sample(&[3.0, 3.2, 2.9, 3.1, 2.8, 3.05, 3.3, 2.95]);
        let r =
            mmd_permutation_test(&a, &b, &FuzzyKernelSpec::NonsingletonGaussian, 500, 1).unwrap();
        assert!(r.p_value <= 0.05, "{r:?}");
    }

    #[test]
    fn cross_validation_on_separable_gram() {
        // block-diagonal gram: perfectly separable
        let n = 10;
        let labels: Vec<i8> = (0..n).map(|i| if i < 5 { 1 } else { -1 }).collect();
        let m = DMatrix::from_fn(n, n, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 });
        let g = GramMatrix::from_matrix(m, None).unwrap();
        let r = cross_validate(&g, &labels, 5, 0.1, 3).unwrap();
        assert_eq!(r.mean_accuracy, 1.0);
        assert_eq!(r.folds.len(), 5);
        assert_eq!(r.folds.iter().map(|f| f.n_test).sum::<usize>(), n);
        assert_eq!(r, cross_validate(&g, &labels, 5, 0.1, 3).unwrap());
        assert!(cross_validate(&g, &labels, 1, 0.1, 3).is_err());
        assert!(cross_validate(&g, &labels, 11, 0.1, 3).is_err());
    }
}
