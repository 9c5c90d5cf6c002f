//! Gram matrices over fuzzy data, PSD verification and cosine normalization.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuzzy::FuzzyRecord;
use crate::kernels::FuzzyKernelSpec;

/// Default relative tolerance for [`check_psd`].
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Symmetric matrix of pairwise kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: DMatrix<f64>,
    spec: Option<FuzzyKernelSpec>,
    item_ids: Vec<String>,
}

impl GramMatrix {
    /// Wraps an existing square matrix. The matrix must be exactly symmetric.
    pub fn from_matrix(values: DMatrix<f64>, item_ids: Option<Vec<String>>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::domain(format!(
                "gram matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let n = values.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if a != b && !(a.is_nan() && b.is_nan()) {
                    return Err(Error::domain(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let item_ids = item_ids.unwrap_or_else(|| default_ids(n));
        if item_ids.len() != n {
            return Err(Error::domain(format!(
                "{} item ids for a {n}x{n} matrix",
                item_ids.len()
            )));
        }
        Ok(GramMatrix {
            values,
            spec: None,
            item_ids,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn spec(&self) -> Option<&FuzzyKernelSpec> {
        self.spec.as_ref()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn with_item_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.len() {
            return Err(Error::domain(format!(
                "{} item ids for {} items",
                ids.len(),
                self.len()
            )));
        }
        self.item_ids = ids;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn assemble(n: usize, pairs: &[(usize, usize)], results: Vec<Result<f64>>) -> Result<DMatrix<f64>> {
    let mut values = DMatrix::zeros(n, n);
    for (&(i, j), r) in pairs.iter().zip(results) {
        let v = r.map_err(|e| Error::Pair {
            i,
            j,
            source: Box::new(e),
        })?;
        values[(i, j)] = v;
        values[(j, i)] = v;
    }
    Ok(values)
}

/// Gram matrix of `spec` over `data`. Unordered pairs are evaluated in
/// parallel; each entry depends only on its pair, so the result does not
/// depend on scheduling.
pub fn compute_gram(data: &[FuzzyRecord], spec: &FuzzyKernelSpec) -> Result<GramMatrix> {
    let n = data.len();
    let pairs = upper_pairs(n);
    let results: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| spec.eval(&data[i], &data[j]))
        .collect();
    Ok(GramMatrix {
        values: assemble(n, &pairs, results)?,
        spec: Some(spec.clone()),
        item_ids: default_ids(n),
    })
}

/// Single-threaded [`compute_gram`].
pub fn compute_gram_sequential(data: &[FuzzyRecord], spec: &FuzzyKernelSpec) -> Result<GramMatrix> {
    let n = data.len();
    let pairs = upper_pairs(n);
    let results: Vec<Result<f64>> = pairs
        .iter()
        .map(|&(i, j)| spec.eval(&data[i], &data[j]))
        .collect();
    Ok(GramMatrix {
        values: assemble(n, &pairs, results)?,
        spec: Some(spec.clone()),
        item_ids: default_ids(n),
    })
}

/// Rectangular matrix `K[i][j] = k(rows[i], cols[j])`, e.g. test × train.
pub fn compute_cross(
    rows: &[FuzzyRecord],
    cols: &[FuzzyRecord],
    spec: &FuzzyKernelSpec,
) -> Result<DMatrix<f64>> {
    let m = cols.len();
    let flat: Vec<Result<f64>> = (0..rows.len() * m)
        .into_par_iter()
        .map(|k| spec.eval(&rows[k / m], &cols[k % m]))
        .collect();
    let mut out = DMatrix::zeros(rows.len(), m);
    for (k, r) in flat.into_iter().enumerate() {
        let (i, j) = (k / m, k % m);
        out[(i, j)] = r.map_err(|e| Error::Pair {
            i,
            j,
            source: Box::new(e),
        })?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdVerdict {
    Psd,
    Indefinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub verdict: PsdVerdict,
    pub tolerance: f64,
    /// Full spectrum in ascending order.
    pub eigenvalues: Vec<f64>,
}

impl PsdReport {
    pub fn is_psd(&self) -> bool {
        self.verdict == PsdVerdict::Psd
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if let Some(v) = m.iter().find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("matrix contains non-finite entry {v}")));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// PSD check with a relative tolerance:
/// `min_eig >= -tol · max(1, |max_eig|)`.
pub fn check_psd(g: &GramMatrix, tol: f64) -> Result<PsdReport> {
    check_psd_matrix(&g.values, tol)
}

pub fn check_psd_matrix(m: &DMatrix<f64>, tol: f64) -> Result<PsdReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let eigenvalues = symmetric_spectrum(m)?;
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let max_eigenvalue = eigenvalues.last().copied().unwrap_or(0.0);
    let verdict = if min_eigenvalue >= -tol * max_eigenvalue.abs().max(1.0) {
        PsdVerdict::Psd
    } else {
        PsdVerdict::Indefinite
    };
    Ok(PsdReport {
        min_eigenvalue,
        max_eigenvalue,
        verdict,
        tolerance: tol,
        eigenvalues,
    })
}

/// Cosine normalization `k(x, y) / sqrt(k(x, x) k(y, y))`.
pub fn normalize(g: &GramMatrix) -> Result<GramMatrix> {
    let n = g.len();
    let diag: Vec<f64> = (0..n).map(|i| g.values[(i, i)]).collect();
    if let Some((i, d)) = diag
        .iter()
        .enumerate()
        .find(|(_, d)| d.is_nan() || **d <= 0.0)
    {
        return Err(Error::domain(format!(
            "diagonal entry {i} is {d}, normalization needs > 0"
        )));
    }
    let mut values = g.values.clone();
    for i in 0..n {
        values[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = g.values[(i, j)] / (diag[i] * diag[j]).sqrt();
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(GramMatrix {
        values,
        spec: g.spec.clone(),
        item_ids: g.item_ids.clone(),
    })
}

/// Dense text form: the row count on the first line, then one line per row
/// of space-separated values with 17 significant digits.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e}", m[(i, j)]))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Parses the output of [`format_matrix`] (square matrices only).
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        location: format!("matrix line {line}"),
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (first_no, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty matrix file".into()))?;
    let n: usize = first
        .trim()
        .parse()
        .map_err(|e| parse_err(first_no + 1, format!("bad dimension {first:?}: {e}")))?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(first_no + 2 + i, format!("expected {n} rows, found {i}")))?;
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != n {
            return Err(parse_err(
                no + 1,
                format!("expected {n} values, found {}", row.len()),
            ));
        }
        for (j, tok) in row.iter().enumerate() {
            m[(i, j)] = tok
                .parse()
                .map_err(|e| parse_err(no + 1, format!("bad value {tok:?}: {e}")))?;
        }
    }
    if let Some((no, _)) = lines.next() {
        return Err(parse_err(no + 1, "trailing data after matrix".into()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{DiscreteFuzzySet, GaussianFuzzySet, GroundSpace};
    use crate::kernels::BaseKernel;
    use std::sync::Arc;

    fn gaussian(m: f64, s: f64) -> FuzzyRecord {
        GaussianFuzzySet::new(vec![m], vec![s]).unwrap().into()
    }

    #[test]
    fn single_and_identical_items() {
        let spec = FuzzyKernelSpec::NonsingletonGaussian;
        let g = compute_gram(&[gaussian(0.3, 1.0)], &spec).unwrap();
        assert_eq!(g.values(), &DMatrix::from_row_slice(1, 1, &[1.0]));

        let g = compute_gram(&[gaussian(1.0, 0.5), gaussian(1.0, 0.5)], &spec).unwrap();
        assert_eq!(g.values(), &DMatrix::from_element(2, 2, 1.0));
        assert_eq!(g.item_ids(), &["0".to_string(), "1".to_string()]);
        assert_eq!(g.spec(), Some(&spec));
    }

    #[test]
    fn cross_product_gram_against_double_loop() {
        let ground = Arc::new(
            GroundSpace::new(vec![vec![1.0, 0.0], vec![0.5, 2.0], vec![-1.0, 1.0]]).unwrap(),
        );
        let sets = [
            vec![(0, 1.0), (2, 0.25)],
            vec![(1, 0.5)],
            vec![(0, 0.5), (1, 0.75), (2, 1.0)],
        ];
        let data: Vec<FuzzyRecord> = sets
            .iter()
            .map(|d| {
                DiscreteFuzzySet::new(ground.clone(), d.iter().copied())
                    .unwrap()
                    .into()
            })
            .collect();
        let spec = FuzzyKernelSpec::CrossProduct {
            k1: BaseKernel::Linear,
            k2: BaseKernel::Linear,
        };
        let g = compute_gram(&data, &spec).unwrap();

        // dense oracle: every ground pair, zero degrees included
        let dense: Vec<[f64; 3]> = sets
            .iter()
            .map(|d| {
                let mut v = [0.0; 3];
                for &(i, x) in d {
                    v[i] = x;
                }
                v
            })
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let mut expect = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        let pa = ground.point(a);
                        let pb = ground.point(b);
                        expect += (pa[0] * pb[0] + pa[1] * pb[1]) * dense[i][a] * dense[j][b];
                    }
                }
                assert!((g.get(i, j) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            }
        }
    }

    #[test]
    fn pair_errors_name_the_pair() {
        let ground = Arc::new(GroundSpace::from_scalars(&[0.0]).unwrap());
        let d = FuzzyRecord::from(DiscreteFuzzySet::new(ground, [(0, 1.0)]).unwrap());
        let data = vec![gaussian(0.0, 1.0), d];
        let err = compute_gram(&data, &FuzzyKernelSpec::NonsingletonGaussian).unwrap_err();
        assert!(matches!(err, Error::Pair { i: 0, j: 1, .. }), "{err}");
    }

    #[test]
    fn psd_examples() {
        let id = GramMatrix::from_matrix(DMatrix::identity(3, 3), None).unwrap();
        let r = check_psd(&id, DEFAULT_PSD_TOL).unwrap();
        assert!(r.is_psd());
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);

        let m = GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]), None)
            .unwrap();
        let r = check_psd(&m, DEFAULT_PSD_TOL).unwrap();
        assert_eq!(r.verdict, PsdVerdict::Indefinite);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
        assert!((r.max_eigenvalue - 3.0).abs() < 1e-12);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(check_psd_matrix(&bad, 1e-8), Err(Error::Data(_))));
        assert!(check_psd(&id, 0.0).is_err());
    }

    #[test]
    fn tolerance_is_relative_to_spectrum_scale() {
        // eigenvalues 1e6 and -1e-3: indefinite at tol 1e-10, psd at tol 1e-8
        let m = DMatrix::from_row_slice(2, 2, &[1e6, 0.0, 0.0, -1e-3]);
        assert!(!check_psd_matrix(&m, 1e-10).unwrap().is_psd());
        assert!(check_psd_matrix(&m, 1e-8).unwrap().is_psd());
    }

    #[test]
    fn normalize_examples() {
        let g = GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 1.0]), None)
            .unwrap();
        let n = normalize(&g).unwrap();
        assert_eq!(n.values(), &DMatrix::from_element(2, 2, 1.0));

        let unit =
            GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]), None)
                .unwrap();
        assert_eq!(normalize(&unit).unwrap(), unit);

        let z = GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]), None)
            .unwrap();
        assert!(normalize(&z).is_err());
    }

    #[test]
    fn rejects_asymmetric_input() {
        assert!(GramMatrix::from_matrix(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]),
            None
        )
        .is_err());
        assert!(GramMatrix::from_matrix(DMatrix::zeros(2, 3), None).is_err());
    }

    #[test]
    fn matrix_text_format() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, (-1.0f64).exp(), (-1.0f64).exp(), 0.1]);
        let text = format_matrix(&m);
        assert_eq!(
            text,
            "2\n1.0000000000000000e0 3.6787944117144233e-1\n3.6787944117144233e-1 1.0000000000000001e-1\n"
        );
        assert_eq!(parse_matrix(&text).unwrap(), m);
        assert!(parse_matrix("2\n1 2\n").is_err());
        assert!(parse_matrix("1\nx\n").is_err());
        assert!(parse_matrix("").is_err());
    }
}
