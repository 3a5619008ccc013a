//! Points, clusterings, shapes, size bounds and the site-derived objective.
//!
//! Cluster and item indices are 0-based throughout the library; the file
//! formats in [`crate::io`] convert to 1-based at the boundary.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// `n` pairwise distinct points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    dim: usize,
    coords: Vec<f64>,
}

impl DataSet {
    /// Builds a dataset, rejecting empty input, ragged rows, non-finite
    /// coordinates and duplicate points (compared exactly).
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyDataset)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                index: 0,
                expected: 1,
                found: 0,
            });
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index });
            }
            coords.extend_from_slice(p);
        }
        let ds = DataSet { dim, coords };
        ds.check_distinct()?;
        if ds.len() > ds.dim && ds.rank() < ds.dim {
            log::warn!(
                "data matrix has rank {} < dimension {}; points lie in a proper affine subspace",
                ds.rank(),
                ds.dim
            );
        }
        Ok(ds)
    }

    fn check_distinct(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)).then(a.cmp(&b)));
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::DuplicatePoint { first, second });
            }
        }
        Ok(())
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

    pub fn point(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points().map(|p| p.to_vec()).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Largest Euclidean norm among the points.
    pub fn radius(&self) -> f64 {
        self.points().map(norm).fold(0.0, f64::max)
    }

    /// Numerical rank of the `d x n` data matrix.
    pub fn rank(&self) -> usize {
        let (rows, cols) = (self.dim, self.len());
        let mut a: Vec<f64> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| self.point(c)[r])
            .collect();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let tol = 1e-10 * scale * (rows.max(cols) as f64);
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let (piv, val) = (rank..rows)
                .map(|r| (r, a[r * cols + col].abs()))
                .fold((rank, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if val <= tol {
                continue;
            }
            for c in 0..cols {
                a.swap(rank * cols + c, piv * cols + c);
            }
            for r in rank + 1..rows {
                let f = a[r * cols + col] / a[rank * cols + col];
                if f != 0.0 {
                    for c in col..cols {
                        a[r * cols + c] -= f * a[rank * cols + c];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Same points translated by `-offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::Incompatible(format!(
                "offset has dimension {}, dataset {}",
                offset.len(),
                self.dim
            )));
        }
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(offset).map(|(v, o)| v - o))
            .collect();
        let ds = DataSet {
            dim: self.dim,
            coords,
        };
        ds.check_distinct()?;
        Ok(ds)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Translates the points so their coordinate-wise sum is zero.
///
/// Fails only if rounding in the shift merges two distinct points.
pub fn center_dataset(ds: &DataSet) -> Result<DataSet> {
    ds.translated(&ds.mean())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cluster sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape(pub Vec<usize>);

impl Shape {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Total assignment of `n` items to `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clustering {
    k: usize,
    assignment: Vec<usize>,
}

impl Clustering {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidClustering("k must be positive".into()));
        }
        if let Some((j, &c)) = assignment.iter().enumerate().find(|(_, &c)| c >= k) {
            return Err(Error::InvalidClustering(format!(
                "item {j} assigned to cluster {c} but k = {k}"
            )));
        }
        Ok(Clustering { k, assignment })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_of(&self, item: usize) -> usize {
        self.assignment[item]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn shape(&self) -> Shape {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        Shape(sizes)
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(j, _)| j)
    }

    pub(crate) fn reassign(&mut self, item: usize, cluster: usize) {
        debug_assert!(cluster < self.k);
        self.assignment[item] = cluster;
    }

    /// Checks that the clustering covers exactly the items of `ds`.
    pub fn check_against(&self, ds: &DataSet) -> Result<()> {
        if self.len() != ds.len() {
            return Err(Error::Incompatible(format!(
                "clustering has {} items, dataset {}",
                self.len(),
                ds.len()
            )));
        }
        Ok(())
    }
}

/// Lower and upper cluster-size bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeBounds {
    lower: Vec<usize>,
    upper: Vec<usize>,
}

impl SizeBounds {
    /// Validates `lower <= upper <= n` entrywise and `sum(lower) <= n <= sum(upper)`.
    pub fn new(lower: Vec<usize>, upper: Vec<usize>, n: usize) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidBounds(format!(
                "lower has {} entries, upper {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo > hi || hi > n {
                return Err(Error::InvalidBounds(format!(
                    "cluster {i}: need lower {lo} <= upper {hi} <= n = {n}"
                )));
            }
        }
        let (sl, su): (usize, usize) = (lower.iter().sum(), upper.iter().sum());
        if sl > n || su < n {
            return Err(Error::InfeasibleBounds(format!(
                "sum of lower bounds {sl}, sum of upper bounds {su}, n = {n}"
            )));
        }
        Ok(SizeBounds { lower, upper })
    }

    /// Bounds `min/max(|A_i|, |B_i|)` induced by two endpoint shapes.
    pub fn from_endpoints(a: &Shape, b: &Shape) -> Result<Self> {
        if a.k() != b.k() || a.total() != b.total() {
            return Err(Error::Incompatible(format!(
                "endpoint shapes {:?} and {:?} differ in k or n",
                a.0, b.0
            )));
        }
        let lower = a.0.iter().zip(&b.0).map(|(x, y)| *x.min(y)).collect();
        let upper = a.0.iter().zip(&b.0).map(|(x, y)| *x.max(y)).collect();
        SizeBounds::new(lower, upper, a.total())
    }

    pub fn single_shape(shape: &Shape) -> Self {
        SizeBounds {
            lower: shape.0.clone(),
            upper: shape.0.clone(),
        }
    }

    pub fn all_shape(n: usize, k: usize) -> Self {
        SizeBounds {
            lower: vec![0; k],
            upper: vec![n; k],
        }
    }

    pub fn k(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[usize] {
        &self.lower
    }

    pub fn upper(&self) -> &[usize] {
        &self.upper
    }

    pub fn is_single_shape(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, shape: &Shape) -> bool {
        shape.k() == self.k()
            && shape
                .0
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(s, (lo, hi))| lo <= s && s <= hi)
    }

    pub fn check_shape(&self, shape: &Shape) -> Result<()> {
        if self.contains(shape) {
            Ok(())
        } else {
            Err(Error::ShapeOutOfBounds {
                shape: shape.0.clone(),
                lower: self.lower.clone(),
                upper: self.upper.clone(),
            })
        }
    }

    /// Number of feasible shapes summing to `n` (saturating).
    pub fn shape_count(&self, n: usize) -> u128 {
        // ways[t] = number of ways the clusters seen so far sum to t
        let mut ways = vec![0u128; n + 1];
        ways[0] = 1;
        for (&lo, &hi) in self.lower.iter().zip(&self.upper) {
            let mut next = vec![0u128; n + 1];
            for (t, &w) in ways.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                for size in lo..=hi {
                    if t + size > n {
                        break;
                    }
                    next[t + size] = next[t + size].saturating_add(w);
                }
            }
            ways = next;
        }
        ways[n]
    }
}

/// `k` sites in `R^d`, concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteVector {
    dim: usize,
    coords: Vec<f64>,
}

impl SiteVector {
    pub fn new(sites: Vec<Vec<f64>>) -> Result<Self> {
        let dim = sites.first().map(|s| s.len()).ok_or_else(|| {
            Error::Incompatible("site vector needs at least one site".into())
        })?;
        let mut coords = Vec::with_capacity(sites.len() * dim);
        for (index, s) in sites.iter().enumerate() {
            if s.len() != dim || dim == 0 {
                return Err(Error::Incompatible(format!(
                    "site {index} has {} coordinates, expected {dim}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Incompatible(format!("site {index} is not finite")));
            }
            coords.extend_from_slice(s);
        }
        Ok(SiteVector { dim, coords })
    }

    pub fn k(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn site(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.coords.chunks_exact(self.dim).map(|s| s.to_vec()).collect()
    }

    /// `(1 - lambda) * s + lambda * t`.
    pub fn interpolate(s: &SiteVector, t: &SiteVector, lambda: f64) -> SiteVector {
        assert_eq!(s.coords.len(), t.coords.len(), "site vectors differ in size");
        SiteVector {
            dim: s.dim,
            coords: s
                .coords
                .iter()
                .zip(&t.coords)
                .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
                .collect(),
        }
    }

    pub fn midpoint(a: &SiteVector, b: &SiteVector) -> SiteVector {
        SiteVector::interpolate(a, b, 0.5)
    }

    pub fn translated(&self, offset: &[f64]) -> SiteVector {
        SiteVector {
            dim: self.dim,
            coords: self
                .coords
                .chunks_exact(self.dim)
                .flat_map(|p| p.iter().zip(offset).map(|(v, o)| v - o))
                .collect(),
        }
    }

    /// First pair of coincident sites, if any.
    pub fn coincident_pair(&self) -> Option<(usize, usize)> {
        let k = self.k();
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |l| (i, l)))
            .find(|&(i, l)| self.site(i) == self.site(l))
    }

    pub fn check_compatible(&self, ds: &DataSet, k: usize) -> Result<()> {
        if self.dim != ds.dim() {
            return Err(Error::Incompatible(format!(
                "sites have dimension {}, points {}",
                self.dim,
                ds.dim()
            )));
        }
        if self.k() != k {
            return Err(Error::Incompatible(format!(
                "{} sites given for k = {k} clusters",
                self.k()
            )));
        }
        Ok(())
    }
}

/// Objective coefficients `c[i][j] = x_j . s_i` stored row-major (`k x n`).
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveMatrix {
    k: usize,
    n: usize,
    values: Vec<f64>,
}

impl ObjectiveMatrix {
    pub fn from_values(k: usize, n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), k * n);
        ObjectiveMatrix { k, n, values }
    }

    pub fn zeros(k: usize, n: usize) -> Self {
        ObjectiveMatrix::from_values(k, n, vec![0.0; k * n])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, cluster: usize, item: usize) -> f64 {
        self.values[cluster * self.n + item]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `alpha * a + beta * b`.
    pub fn combine(alpha: f64, a: &Self, beta: f64, b: &Self) -> Self {
        assert_eq!((a.k, a.n), (b.k, b.n));
        ObjectiveMatrix {
            k: a.k,
            n: a.n,
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| alpha * x + beta * y)
                .collect(),
        }
    }

    /// Largest absolute coefficient, at least 1.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }

    /// `c^T y` for the 0/1 vector of `clustering`.
    pub fn evaluate(&self, clustering: &Clustering) -> f64 {
        clustering
            .assignment()
            .iter()
            .enumerate()
            .map(|(j, &i)| self.get(i, j))
            .sum()
    }
}

pub fn objective_from_sites(ds: &DataSet, s: &SiteVector) -> Result<ObjectiveMatrix> {
    if s.dim() != ds.dim() {
        return Err(Error::Incompatible(format!(
            "sites have dimension {}, points {}",
            s.dim(),
            ds.dim()
        )));
    }
    let (k, n) = (s.k(), ds.len());
    let values = (0..k)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| dot(ds.point(j), s.site(i)))
        .collect();
    Ok(ObjectiveMatrix { k, n, values })
}

/// Per-cluster coordinate sums `w_i = sum_{x in C_i} x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringVector {
    dim: usize,
    coords: Vec<f64>,
}

impl ClusteringVector {
    pub fn cluster(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn k(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    /// Largest coordinate-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn clustering_vector(ds: &DataSet, c: &Clustering) -> Result<ClusteringVector> {
    c.check_against(ds)?;
    let dim = ds.dim();
    let mut coords = vec![0.0; c.k() * dim];
    for (j, &i) in c.assignment().iter().enumerate() {
        for (acc, v) in coords[i * dim..(i + 1) * dim].iter_mut().zip(ds.point(j)) {
            *acc += v;
        }
    }
    Ok(ClusteringVector { dim, coords })
}

/// Least-squares assignment cost `sum_i sum_{x in C_i} |x - s_i|^2`.
pub fn lsa_cost(ds: &DataSet, c: &Clustering, s: &SiteVector) -> Result<f64> {
    c.check_against(ds)?;
    s.check_compatible(ds, c.k())?;
    Ok(c.assignment()
        .iter()
        .enumerate()
        .map(|(j, &i)| {
            ds.point(j)
                .iter()
                .zip(s.site(i))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
        })
        .sum())
}
