//! Fuzzy sets as membership functions over a finite ground space.
//!
//! A [`GroundSpace`] enumerates the points of Ω once; discrete fuzzy sets are
//! keyed by point index so support tests and set operations never compare
//! floating-point coordinates. Parametric Gaussian fuzzy sets live on ℝ^D
//! directly and can be sampled onto a ground space when a discrete
//! representation is needed.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Pairwise-disjoint cells covering the point indices of a ground space,
/// each carrying a non-negative measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    cells: Vec<Vec<usize>>,
    measures: Vec<f64>,
    universe: usize,
}

impl Partition {
    /// Builds a partition of `0..universe`. Without explicit measures the
    /// counting measure `|A|` is used.
    pub fn new(
        cells: Vec<Vec<usize>>,
        measures: Option<Vec<f64>>,
        universe: usize,
    ) -> Result<Self> {
        let mut owner = vec![usize::MAX; universe];
        let mut sorted_cells = Vec::with_capacity(cells.len());
        for (c, cell) in cells.into_iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::domain(format!("partition cell {c} is empty")));
            }
            let mut cell = cell;
            cell.sort_unstable();
            for &idx in &cell {
                if idx >= universe {
                    return Err(Error::domain(format!(
                        "partition cell {c} references point {idx}, ground space has {universe} points"
                    )));
                }
                if owner[idx] != usize::MAX {
                    return Err(Error::domain(format!(
                        "point {idx} appears in cells {} and {c}",
                        owner[idx]
                    )));
                }
                owner[idx] = c;
            }
            sorted_cells.push(cell);
        }
        if let Some(missing) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::domain(format!(
                "point {missing} is not covered by any cell"
            )));
        }

        let measures = match measures {
            Some(m) => {
                if m.len() != sorted_cells.len() {
                    return Err(Error::domain(format!(
                        "{} measures given for {} cells",
                        m.len(),
                        sorted_cells.len()
                    )));
                }
                if let Some((c, w)) = m
                    .iter()
                    .enumerate()
                    .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
                {
                    return Err(Error::domain(format!("cell {c} has invalid measure {w}")));
                }
                m
            }
            None => sorted_cells.iter().map(|c| c.len() as f64).collect(),
        };

        Ok(Partition {
            cells: sorted_cells,
            measures,
            universe,
        })
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn measure(&self, cell: usize) -> f64 {
        self.measures[cell]
    }

    /// Number of ground points the partition covers.
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// The finite domain Ω: an indexed list of points of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSpace {
    coords: Vec<f64>,
    dim: usize,
    partition: Option<Partition>,
}

impl GroundSpace {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(1);
        if dim == 0 {
            return Err(Error::domain("ground points must have dimension >= 1"));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::domain(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
            coords.extend_from_slice(p);
        }
        Ok(GroundSpace {
            coords,
            dim,
            partition: None,
        })
    }

    /// One-dimensional ground space from scalar positions.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    /// Evenly spaced one-dimensional grid `start, start+step, ...` up to and
    /// including `end` (within half a step).
    pub fn grid_1d(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && start.is_finite() && end.is_finite() && end >= start) {
            return Err(Error::domain(format!(
                "invalid grid [{start}, {end}] step {step}"
            )));
        }
        let count = ((end - start) / step + 0.5).floor() as usize + 1;
        let coords: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
        Ok(GroundSpace {
            coords,
            dim: 1,
            partition: None,
        })
    }

    pub fn with_partition(mut self, partition: Partition) -> Result<Self> {
        if partition.universe() != self.len() {
            return Err(Error::domain(format!(
                "partition covers {} points, ground space has {}",
                partition.universe(),
                self.len()
            )));
        }
        self.partition = Some(partition);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, idx: usize) -> &[f64] {
        &self.coords[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }
}

/// Whether two ground-space handles denote the same Ω.
pub(crate) fn same_ground(a: &Arc<GroundSpace>, b: &Arc<GroundSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub(crate) fn ensure_same_ground(x: &DiscreteFuzzySet, y: &DiscreteFuzzySet) -> Result<()> {
    if same_ground(&x.ground, &y.ground) {
        Ok(())
    } else {
        Err(Error::domain("fuzzy sets live on different ground spaces"))
    }
}

/// A fuzzy set on a finite ground space, stored sparsely: indices outside
/// the map have membership exactly 0, so the key set is the support.
#[derive(Debug, Clone)]
pub struct DiscreteFuzzySet {
    ground: Arc<GroundSpace>,
    degrees: BTreeMap<usize, f64>,
}

impl PartialEq for DiscreteFuzzySet {
    fn eq(&self, other: &Self) -> bool {
        same_ground(&self.ground, &other.ground) && self.degrees == other.degrees
    }
}

impl DiscreteFuzzySet {
    /// Validates degrees into `[0, 1]`; zero degrees are dropped.
    pub fn new(
        ground: Arc<GroundSpace>,
        degrees: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let n = ground.len();
        let mut map = BTreeMap::new();
        for (idx, d) in degrees {
            if idx >= n {
                return Err(Error::domain(format!(
                    "point index {idx} out of range for ground space of {n} points"
                )));
            }
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::domain(format!(
                    "degree {d} at index {idx} is outside [0, 1]"
                )));
            }
            if d > 0.0 {
                map.insert(idx, d);
            }
        }
        Ok(DiscreteFuzzySet {
            ground,
            degrees: map,
        })
    }

    pub fn empty(ground: Arc<GroundSpace>) -> Self {
        DiscreteFuzzySet {
            ground,
            degrees: BTreeMap::new(),
        }
    }

    pub fn ground(&self) -> &Arc<GroundSpace> {
        &self.ground
    }

    /// Support entries `(index, degree)` in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.degrees.iter().map(|(&i, &d)| (i, d))
    }

    pub fn degrees(&self) -> &BTreeMap<usize, f64> {
        &self.degrees
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.degrees.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.degrees.contains_key(&idx)
    }

    /// Degree of membership of point `idx`.
    pub fn membership(&self, idx: usize) -> Result<f64> {
        if idx >= self.ground.len() {
            return Err(Error::domain(format!(
                "point index {idx} out of range for ground space of {} points",
                self.ground.len()
            )));
        }
        Ok(self.degree(idx))
    }

    /// Unchecked lookup for indices already known to be valid.
    pub(crate) fn degree(&self, idx: usize) -> f64 {
        self.degrees.get(&idx).copied().unwrap_or(0.0)
    }

    /// Maximum membership degree, 0 for the empty set.
    pub fn height(&self) -> f64 {
        self.degrees.values().copied().fold(0.0, f64::max)
    }
}

/// A product of one-dimensional Gaussian membership functions,
/// `X(x) = Π_d exp(-½ (x_d - m_d)² / σ_d²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFuzzySet {
    means: Vec<f64>,
    widths: Vec<f64>,
}

impl GaussianFuzzySet {
    pub fn new(means: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::domain(
                "gaussian fuzzy set needs at least one dimension",
            ));
        }
        if means.len() != widths.len() {
            return Err(Error::domain(format!(
                "{} means but {} widths",
                means.len(),
                widths.len()
            )));
        }
        if let Some(m) = means.iter().find(|m| !m.is_finite()) {
            return Err(Error::domain(format!("non-finite mean {m}")));
        }
        if let Some(s) = widths.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::domain(format!(
                "width {s} must be a positive finite number"
            )));
        }
        Ok(GaussianFuzzySet { means, widths })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn membership(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::domain(format!(
                "point has dimension {}, fuzzy set has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self
            .means
            .iter()
            .zip(&self.widths)
            .zip(x)
            .map(|((m, s), v)| {
                let z = (v - m) / s;
                (-0.5 * z * z).exp()
            })
            .product())
    }

    /// Samples the membership function onto every point of `ground`,
    /// keeping degrees `>= cutoff`. Degrees that underflow to zero are never
    /// stored.
    pub fn sample_onto(&self, ground: &Arc<GroundSpace>, cutoff: f64) -> Result<DiscreteFuzzySet> {
        if ground.dim() != self.dim() {
            return Err(Error::domain(format!(
                "ground space has dimension {}, fuzzy set has {}",
                ground.dim(),
                self.dim()
            )));
        }
        if !(0.0..=1.0).contains(&cutoff) {
            return Err(Error::domain(format!("cutoff {cutoff} is outside [0, 1]")));
        }
        let mut degrees = BTreeMap::new();
        for (i, p) in ground.points().enumerate() {
            let d = self.membership(p)?;
            if d > 0.0 && d >= cutoff {
                degrees.insert(i, d);
            }
        }
        Ok(DiscreteFuzzySet {
            ground: Arc::clone(ground),
            degrees,
        })
    }
}

/// Epistemic fuzzification of a crisp vector: a Gaussian fuzzy set centred
/// on `value`.
pub fn fuzzify_gaussian(value: &[f64], widths: &[f64]) -> Result<GaussianFuzzySet> {
    if value.len() != widths.len() {
        return Err(Error::domain(format!(
            "value has {} components but {} widths were given",
            value.len(),
            widths.len()
        )));
    }
    GaussianFuzzySet::new(value.to_vec(), widths.to_vec())
}

/// Fuzzy set from a histogram of `samples` over the bin centres of a
/// one-dimensional ground space. Each sample goes to its nearest centre
/// (ties to the lower index); counts are divided by the largest count so the
/// tallest bin has degree 1.
pub fn fuzzify_from_histogram(
    samples: &[f64],
    ground: &Arc<GroundSpace>,
) -> Result<DiscreteFuzzySet> {
    if samples.is_empty() {
        return Err(Error::domain("cannot build a histogram from zero samples"));
    }
    if ground.dim() != 1 || ground.is_empty() {
        return Err(Error::domain(
            "histogram bins must be a non-empty one-dimensional ground space",
        ));
    }
    let mut counts = vec![0usize; ground.len()];
    for &s in samples {
        if !s.is_finite() {
            return Err(Error::domain(format!("non-finite sample {s}")));
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, c) in ground.points().enumerate() {
            let dist = (s - c[0]).abs();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        counts[best] += 1;
    }
    let max = *counts.iter().max().expect("non-empty ground") as f64;
    let degrees = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, c as f64 / max))
        .collect();
    Ok(DiscreteFuzzySet {
        ground: Arc::clone(ground),
        degrees,
    })
}

/// Cells `A` of `partition` with `A ⊆ supp(fs)`, in ascending cell order.
pub fn support_cells(fs: &DiscreteFuzzySet, partition: &Partition) -> Result<Vec<usize>> {
    if partition.universe() != fs.ground.len() {
        return Err(Error::domain(format!(
            "partition covers {} points but the fuzzy set's ground space has {}",
            partition.universe(),
            fs.ground.len()
        )));
    }
    Ok(partition
        .cells()
        .iter()
        .enumerate()
        .filter(|(_, cell)| cell.iter().all(|idx| fs.contains(*idx)))
        .map(|(c, _)| c)
        .collect())
}

/// One attribute of a fuzzy record.
#[derive(Debug, Clone, PartialEq)]
pub enum FuzzyAttribute {
    Discrete(DiscreteFuzzySet),
    Gaussian(GaussianFuzzySet),
}

impl FuzzyAttribute {
    pub fn kind(&self) -> &'static str {
        match self {
            FuzzyAttribute::Discrete(_) => "discrete",
            FuzzyAttribute::Gaussian(_) => "gaussian",
        }
    }
}

impl From<DiscreteFuzzySet> for FuzzyAttribute {
    fn from(fs: DiscreteFuzzySet) -> Self {
        FuzzyAttribute::Discrete(fs)
    }
}

impl From<GaussianFuzzySet> for FuzzyAttribute {
    fn from(fs: GaussianFuzzySet) -> Self {
        FuzzyAttribute::Gaussian(fs)
    }
}

/// A multi-attribute fuzzy datum: a tuple of fuzzy sets.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRecord {
    pub attributes: Vec<FuzzyAttribute>,
}

impl FuzzyRecord {
    pub fn new(attributes: Vec<FuzzyAttribute>) -> Self {
        FuzzyRecord { attributes }
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }
}

impl<T: Into<FuzzyAttribute>> From<T> for FuzzyRecord {
    fn from(attr: T) -> Self {
        FuzzyRecord {
            attributes: vec![attr.into()],
        }
    }
}
