//! Kernels on fuzzy sets.
//!
//! Four families are provided:
//!
//! * **cross product**: `k×(X, Y) = Σ_{x ∈ supp X, y ∈ supp Y} k1(x, y) · k2(X(x), Y(y))`,
//!   plus a measure-weighted variant that multiplies each term by `w(x)·w(y)`;
//! * **intersection**: `k∩(X, Y) = Σ_{A ∈ C(X,Y)} (Σ_{x ∈ A} T(X(x), Y(x))) · ρ(A)` over
//!   the cells of a partition fully contained in both supports;
//! * **non-singleton**: `sup_x T(X(x), Y(x))`, with a closed form for Gaussian
//!   memberships;
//! * **distance-based**: distance substitution kernels built from a metric on
//!   fuzzy sets, by default the ratio metric `Σ|X - Y| / Σ(X + Y)`.
//!
//! All sums run in ascending index order so results are bit-reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fuzzy::{
    ensure_same_ground, DiscreteFuzzySet, FuzzyAttribute, FuzzyRecord, GaussianFuzzySet,
};
use crate::tnorm::TNorm;

/// Kernel on real vectors, used as `k1` on ground points and `k2` on degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseKernel {
    Linear,
    Rbf { gamma: f64 },
    Polynomial { alpha: f64, gamma: f64, beta: u32 },
}

impl BaseKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BaseKernel::Linear => Ok(()),
            BaseKernel::Rbf { gamma } => {
                if gamma.is_finite() && gamma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!("rbf gamma must be > 0, got {gamma}")))
                }
            }
            BaseKernel::Polynomial { alpha, gamma, beta } => {
                if !(alpha.is_finite() && alpha >= 0.0) {
                    Err(Error::config(format!(
                        "polynomial alpha must be >= 0, got {alpha}"
                    )))
                } else if !(gamma.is_finite() && gamma > 0.0) {
                    Err(Error::config(format!(
                        "polynomial gamma must be > 0, got {gamma}"
                    )))
                } else if beta == 0 {
                    Err(Error::config("polynomial beta must be a positive integer"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::domain(format!(
                "base kernel arguments have dimensions {} and {}",
                u.len(),
                v.len()
            )));
        }
        Ok(self.eval_unchecked(u, v))
    }

    #[inline]
    fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            BaseKernel::Linear => dot(u, v),
            BaseKernel::Rbf { gamma } => {
                let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * sq).exp()
            }
            BaseKernel::Polynomial { alpha, gamma, beta } => {
                (alpha + gamma * dot(u, v)).powi(beta as i32)
            }
        }
    }
}

#[inline]
fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Metric on discrete fuzzy sets used by the distance-substitution kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// `Σ|X - Y| / Σ(X + Y)`, see [`ratio_distance`].
    #[default]
    Ratio,
}

impl Metric {
    pub fn distance(&self, x: &DiscreteFuzzySet, y: &DiscreteFuzzySet) -> Result<f64> {
        match self {
            Metric::Ratio => ratio_distance(x, y),
        }
    }

    /// Whether `distance(∅, ∅)` is defined, which decides if the empty fuzzy
    /// set can serve as the default reference point.
    pub fn defined_on_empty(&self) -> bool {
        match self {
            Metric::Ratio => false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Ratio => "ratio",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ratio" => Ok(Metric::Ratio),
            other => Err(Error::config(format!(
                "unknown metric {other:?} (expected ratio)"
            ))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Cross product kernel: the sum over all support pairs of
/// `k1(point(a), point(b)) · k2(X(a), Y(b))`.
pub fn cross_product_kernel(
    x: &DiscreteFuzzySet,
    y: &DiscreteFuzzySet,
    k1: &BaseKernel,
    k2: &BaseKernel,
) -> Result<f64> {
    ensure_same_ground(x, y)?;
    let ground = x.ground();
    let mut sum = 0.0;
    for (a, xa) in x.iter() {
        let pa = ground.point(a);
        for (b, yb) in y.iter() {
            sum += k1.eval_unchecked(pa, ground.point(b)) * k2.eval_unchecked(&[xa], &[yb]);
        }
    }
    Ok(sum)
}

/// Cross product kernel integrated against a finite measure on the ground
/// space: each support pair is additionally weighted by `w(a)·w(b)`.
/// Probability weights give the fuzzy-and-random reading.
pub fn weighted_cross_product_kernel(
    x: &DiscreteFuzzySet,
    y: &DiscreteFuzzySet,
    k1: &BaseKernel,
    k2: &BaseKernel,
    weights: &[f64],
) -> Result<f64> {
    ensure_same_ground(x, y)?;
    let ground = x.ground();
    if weights.len() != ground.len() {
        return Err(Error::domain(format!(
            "{} weights given for a ground space of {} points",
            weights.len(),
            ground.len()
        )));
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
    {
        return Err(Error::domain(format!(
            "weight {w} at index {i} must be finite and >= 0"
        )));
    }
    let mut sum = 0.0;
    for (a, xa) in x.iter() {
        let pa = ground.point(a);
        for (b, yb) in y.iter() {
            sum += k1.eval_unchecked(pa, ground.point(b))
                * k2.eval_unchecked(&[xa], &[yb])
                * (weights[a] * weights[b]);
        }
    }
    Ok(sum)
}

/// Intersection kernel over the cells of `partition` contained in both
/// supports. A cell only partially covered by either support contributes
/// nothing.
pub fn intersection_kernel(
    x: &DiscreteFuzzySet,
    y: &DiscreteFuzzySet,
    t: TNorm,
    partition: &crate::fuzzy::Partition,
) -> Result<f64> {
    ensure_same_ground(x, y)?;
    if partition.universe() != x.ground().len() {
        return Err(Error::domain(format!(
            "partition covers {} points but the ground space has {}",
            partition.universe(),
            x.ground().len()
        )));
    }
    let mut sum = 0.0;
    for (c, cell) in partition.cells().iter().enumerate() {
        if !cell.iter().all(|&i| x.contains(i) && y.contains(i)) {
            continue;
        }
        let mass: f64 = cell.iter().map(|&i| t.eval(x.degree(i), y.degree(i))).sum();
        sum += mass * partition.measure(c);
    }
    Ok(sum)
}

/// Non-singleton kernel `max_i T(X(i), Y(i))`; 0 for disjoint supports.
pub fn nonsingleton_kernel(x: &DiscreteFuzzySet, y: &DiscreteFuzzySet, t: TNorm) -> Result<f64> {
    ensure_same_ground(x, y)?;
    Ok(x.iter()
        .filter_map(|(i, a)| y.degrees().get(&i).map(|&b| t.eval(a, b)))
        .fold(0.0, f64::max))
}

/// Closed form of the non-singleton kernel with the product T-norm for
/// Gaussian memberships: `Π_d exp(-½ (m_d - m'_d)² / (σ_d² + σ'_d²))`.
pub fn nonsingleton_gaussian_kernel(x: &GaussianFuzzySet, y: &GaussianFuzzySet) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::domain(format!(
            "gaussian fuzzy sets have dimensions {} and {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(x.means()
        .iter()
        .zip(x.widths())
        .zip(y.means().iter().zip(y.widths()))
        .map(|((m, s), (mp, sp))| {
            let gap = m - mp;
            (-0.5 * gap * gap / (s * s + sp * sp)).exp()
        })
        .product())
}

/// Ratio metric `Σ_i |X(i) - Y(i)| / Σ_i (X(i) + Y(i))` over the union of the
/// supports. Undefined (domain error) when both sets are empty.
pub fn ratio_distance(x: &DiscreteFuzzySet, y: &DiscreteFuzzySet) -> Result<f64> {
    ensure_same_ground(x, y)?;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut xs = x.iter().peekable();
    let mut ys = y.iter().peekable();
    loop {
        let (a, b) = match (xs.peek().copied(), ys.peek().copied()) {
            (None, None) => break,
            (Some((_, a)), None) => {
                xs.next();
                (a, 0.0)
            }
            (None, Some((_, b))) => {
                ys.next();
                (0.0, b)
            }
            (Some((i, a)), Some((j, b))) => {
                if i < j {
                    xs.next();
                    (a, 0.0)
                } else if j < i {
                    ys.next();
                    (0.0, b)
                } else {
                    xs.next();
                    ys.next();
                    (a, b)
                }
            }
        };
        num += (a - b).abs();
        den += a + b;
    }
    if den == 0.0 {
        return Err(Error::domain(
            "ratio distance is undefined for two empty fuzzy sets",
        ));
    }
    Ok(num / den)
}

/// `⟨X, Y⟩_D^{X0} = ½ (D(X, X0)² + D(Y, X0)² − D(X, Y)²)`.
pub fn distance_inner<D>(
    x: &DiscreteFuzzySet,
    y: &DiscreteFuzzySet,
    x0: &DiscreteFuzzySet,
    d: D,
) -> Result<f64>
where
    D: Fn(&DiscreteFuzzySet, &DiscreteFuzzySet) -> Result<f64>,
{
    let dx = d(x, x0)?;
    let dy = d(y, x0)?;
    let dxy = d(x, y)?;
    Ok(0.5 * (dx * dx + dy * dy - dxy * dxy))
}

/// `(α + γ ⟨X, Y⟩_D^{X0})^β`.
pub fn distance_polynomial_kernel<D>(
    x: &DiscreteFuzzySet,
    y: &DiscreteFuzzySet,
    x0: &DiscreteFuzzySet,
    d: D,
    alpha: f64,
    gamma: f64,
    beta: u32,
) -> Result<f64>
where
    D: Fn(&DiscreteFuzzySet, &DiscreteFuzzySet) -> Result<f64>,
{
    check_polynomial(alpha, gamma, beta)?;
    let inner = distance_inner(x, y, x0, d)?;
    Ok((alpha + gamma * inner).powi(beta as i32))
}

fn check_polynomial(alpha: f64, gamma: f64, beta: u32) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::domain(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::domain(format!("gamma must be > 0, got {gamma}")));
    }
    if beta == 0 {
        return Err(Error::domain("beta must be a positive integer"));
    }
    Ok(())
}

/// `exp(-λ D(X, Y)²)`.
pub fn distance_gaussian_kernel<D>(
    x: &DiscreteFuzzySet,
    y: &DiscreteFuzzySet,
    d: D,
    lambda: f64,
) -> Result<f64>
where
    D: Fn(&DiscreteFuzzySet, &DiscreteFuzzySet) -> Result<f64>,
{
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be > 0, got {lambda}")));
    }
    let dist = d(x, y)?;
    Ok((-lambda * dist * dist).exp())
}

/// Declarative kernel choice, as read from a kernel configuration file.
///
/// For multi-attribute records the kernel is applied attribute-wise and the
/// per-attribute values are multiplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FuzzyKernelSpec {
    CrossProduct {
        k1: BaseKernel,
        k2: BaseKernel,
    },
    WeightedCrossProduct {
        k1: BaseKernel,
        k2: BaseKernel,
        /// One non-negative weight per ground-space point.
        weights: Vec<f64>,
    },
    /// Uses the partition attached to the data's ground space.
    Intersection {
        tnorm: TNorm,
    },
    Nonsingleton {
        tnorm: TNorm,
    },
    NonsingletonGaussian,
    DistanceInner {
        #[serde(default)]
        metric: Metric,
        #[serde(
            default,
            skip_serializing_if = "Option::is_none",
            deserialize_with = "deserialize_reference"
        )]
        reference: Option<BTreeMap<usize, f64>>,
    },
    DistancePoly {
        #[serde(default)]
        metric: Metric,
        #[serde(
            default,
            skip_serializing_if = "Option::is_none",
            deserialize_with = "deserialize_reference"
        )]
        reference: Option<BTreeMap<usize, f64>>,
        alpha: f64,
        gamma: f64,
        beta: u32,
    },
    DistanceGaussian {
        #[serde(default)]
        metric: Metric,
        lambda: f64,
    },
}

impl FuzzyKernelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            FuzzyKernelSpec::CrossProduct { .. } => "cross_product",
            FuzzyKernelSpec::WeightedCrossProduct { .. } => "weighted_cross_product",
            FuzzyKernelSpec::Intersection { .. } => "intersection",
            FuzzyKernelSpec::Nonsingleton { .. } => "nonsingleton",
            FuzzyKernelSpec::NonsingletonGaussian => "nonsingleton_gaussian",
            FuzzyKernelSpec::DistanceInner { .. } => "distance_inner",
            FuzzyKernelSpec::DistancePoly { .. } => "distance_poly",
            FuzzyKernelSpec::DistanceGaussian { .. } => "distance_gaussian",
        }
    }

    /// Checks every nested parameter. Data-dependent checks (weights length,
    /// reference indices, partition presence) happen at evaluation time.
    pub fn validate(&self) -> Result<()> {
        match self {
            FuzzyKernelSpec::CrossProduct { k1, k2 } => {
                k1.validate()?;
                k2.validate()
            }
            FuzzyKernelSpec::WeightedCrossProduct { k1, k2, weights } => {
                k1.validate()?;
                k2.validate()?;
                match weights
                    .iter()
                    .enumerate()
                    .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
                {
                    Some((i, w)) => Err(Error::config(format!(
                        "weight {w} at index {i} must be finite and >= 0"
                    ))),
                    None => Ok(()),
                }
            }
            FuzzyKernelSpec::Intersection { .. }
            | FuzzyKernelSpec::Nonsingleton { .. }
            | FuzzyKernelSpec::NonsingletonGaussian => Ok(()),
            FuzzyKernelSpec::DistanceInner { metric, reference } => {
                check_reference(metric, reference.as_ref())
            }
            FuzzyKernelSpec::DistancePoly {
                metric,
                reference,
                alpha,
                gamma,
                beta,
            } => {
                check_reference(metric, reference.as_ref())?;
                check_polynomial(*alpha, *gamma, *beta).map_err(|e| Error::config(e.to_string()))
            }
            FuzzyKernelSpec::DistanceGaussian { lambda, .. } => {
                if lambda.is_finite() && *lambda > 0.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!("lambda must be > 0, got {lambda}")))
                }
            }
        }
    }

    /// Parses and validates a JSON kernel configuration.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FuzzyKernelSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
            // errors inside a tagged variant carry no position
            location: match e.line() {
                0 => "kernel config".to_string(),
                line => format!("kernel config line {line} column {}", e.column()),
            },
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    fn accepts_gaussian(&self) -> bool {
        matches!(self, FuzzyKernelSpec::NonsingletonGaussian)
    }

    /// Kernel value for a single pair of attributes.
    pub fn eval_attribute(&self, x: &FuzzyAttribute, y: &FuzzyAttribute) -> Result<f64> {
        match (x, y) {
            (FuzzyAttribute::Gaussian(a), FuzzyAttribute::Gaussian(b))
                if self.accepts_gaussian() =>
            {
                nonsingleton_gaussian_kernel(a, b)
            }
            (FuzzyAttribute::Discrete(a), FuzzyAttribute::Discrete(b))
                if !self.accepts_gaussian() =>
            {
                self.eval_discrete(a, b)
            }
            _ => Err(Error::config(format!(
                "kernel family {} cannot be applied to {} and {} attributes",
                self.family(),
                x.kind(),
                y.kind()
            ))),
        }
    }

    fn eval_discrete(&self, x: &DiscreteFuzzySet, y: &DiscreteFuzzySet) -> Result<f64> {
        match self {
            FuzzyKernelSpec::CrossProduct { k1, k2 } => {
                check_point_dim(k1, x)?;
                cross_product_kernel(x, y, k1, k2)
            }
            FuzzyKernelSpec::WeightedCrossProduct { k1, k2, weights } => {
                check_point_dim(k1, x)?;
                weighted_cross_product_kernel(x, y, k1, k2, weights)
                    .map_err(|e| Error::config(e.to_string()))
            }
            FuzzyKernelSpec::Intersection { tnorm } => {
                let partition = x.ground().partition().ok_or_else(|| {
                    Error::config("intersection kernel needs a partition on the ground space")
                })?;
                intersection_kernel(x, y, *tnorm, partition)
            }
            FuzzyKernelSpec::Nonsingleton { tnorm } => nonsingleton_kernel(x, y, *tnorm),
            FuzzyKernelSpec::NonsingletonGaussian => unreachable!("handled by eval_attribute"),
            FuzzyKernelSpec::DistanceInner { metric, reference } => {
                let x0 = resolve_reference(metric, reference.as_ref(), x)?;
                distance_inner(x, y, &x0, |a, b| metric.distance(a, b))
            }
            FuzzyKernelSpec::DistancePoly {
                metric,
                reference,
                alpha,
                gamma,
                beta,
            } => {
                let x0 = resolve_reference(metric, reference.as_ref(), x)?;
                distance_polynomial_kernel(
                    x,
                    y,
                    &x0,
                    |a, b| metric.distance(a, b),
                    *alpha,
                    *gamma,
                    *beta,
                )
            }
            FuzzyKernelSpec::DistanceGaussian { metric, lambda } => {
                distance_gaussian_kernel(x, y, |a, b| metric.distance(a, b), *lambda)
            }
        }
    }

    /// Kernel value for two records: the product of per-attribute values.
    pub fn eval(&self, x: &FuzzyRecord, y: &FuzzyRecord) -> Result<f64> {
        if x.arity() != y.arity() {
            return Err(Error::config(format!(
                "records have {} and {} attributes",
                x.arity(),
                y.arity()
            )));
        }
        if x.arity() == 0 {
            return Err(Error::config("records have no attributes"));
        }
        let mut value = 1.0;
        for (a, b) in x.attributes.iter().zip(&y.attributes) {
            value *= self.eval_attribute(a, b)?;
        }
        Ok(value)
    }
}

/// Free-function form of [`FuzzyKernelSpec::eval`].
pub fn eval(spec: &FuzzyKernelSpec, x: &FuzzyRecord, y: &FuzzyRecord) -> Result<f64> {
    spec.eval(x, y)
}

fn check_point_dim(k1: &BaseKernel, x: &DiscreteFuzzySet) -> Result<()> {
    // k1 consumes ground coordinates; all points share one dimension, so a
    // single check up front replaces per-pair checks.
    let ground = x.ground();
    if ground.is_empty() {
        return Ok(());
    }
    k1.eval(ground.point(0), ground.point(0)).map(|_| ())
}

/// Tagged enums buffer their content, which turns integer map keys into
/// strings, so reference indices are parsed by hand.
fn deserialize_reference<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<Option<BTreeMap<usize, f64>>, D::Error> {
    let raw: Option<BTreeMap<String, f64>> = Option::deserialize(deserializer)?;
    raw.map(|map| {
        map.into_iter()
            .map(|(k, v)| {
                k.parse::<usize>().map(|i| (i, v)).map_err(|_| {
                    serde::de::Error::custom(format!("reference key {k:?} is not a ground index"))
                })
            })
            .collect()
    })
    .transpose()
}

fn check_reference(metric: &Metric, reference: Option<&BTreeMap<usize, f64>>) -> Result<()> {
    match reference {
        None if !metric.defined_on_empty() => Err(Error::config(format!(
            "the {metric} metric is undefined on empty sets, so an explicit reference set is required"
        ))),
        Some(r) => match r.iter().find(|(_, d)| !(0.0..=1.0).contains(*d)) {
            Some((i, d)) => Err(Error::config(format!("reference degree {d} at index {i} is outside [0, 1]"))),
            None => Ok(()),
        },
        None => Ok(()),
    }
}

fn resolve_reference(
    metric: &Metric,
    reference: Option<&BTreeMap<usize, f64>>,
    like: &DiscreteFuzzySet,
) -> Result<DiscreteFuzzySet> {
    check_reference(metric, reference)?;
    match reference {
        Some(r) => DiscreteFuzzySet::new(like.ground().clone(), r.iter().map(|(&i, &d)| (i, d)))
            .map_err(|e| Error::config(format!("reference set: {e}"))),
        None => Ok(DiscreteFuzzySet::empty(like.ground().clone())),
    }
}
