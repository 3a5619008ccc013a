//! Brute-force enumeration of all feasible assignments for small instances.

use crate::error::{Error, Result};
use crate::model::{objective_from_sites, Clustering, DataSet, ObjectiveMatrix, SiteVector, SizeBounds};
use crate::transport::gap_tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { max: 10_000_000 }
    }
}

impl EnumerationBudget {
    pub fn new(max: u64) -> Self {
        EnumerationBudget { max }
    }

    /// Fails when `k^n` exceeds the budget.
    pub fn check(&self, n: usize, k: usize) -> Result<()> {
        let needed = (k as f64).powi(n as i32);
        if needed > self.max as f64 {
            return Err(Error::BudgetExceeded {
                needed,
                budget: self.max,
            });
        }
        Ok(())
    }
}

/// Calls `visit` with every assignment whose shape lies in `bounds`, in
/// lexicographic order.
pub fn for_each_feasible(
    n: usize,
    bounds: &SizeBounds,
    budget: &EnumerationBudget,
    mut visit: impl FnMut(&[usize]),
) -> Result<()> {
    let k = bounds.k();
    budget.check(n, k)?;
    let mut assignment = vec![0usize; n];
    let mut counts = vec![0usize; k];
    fn rec(
        j: usize,
        a: &mut [usize],
        counts: &mut [usize],
        b: &SizeBounds,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        let n = a.len();
        let deficit: usize = counts
            .iter()
            .zip(b.lower())
            .map(|(&c, &lo)| lo.saturating_sub(c))
            .sum();
        if deficit > n - j {
            return;
        }
        if j == n {
            visit(a);
            return;
        }
        for i in 0..counts.len() {
            if counts[i] < b.upper()[i] {
                a[j] = i;
                counts[i] += 1;
                rec(j + 1, a, counts, b, visit);
                counts[i] -= 1;
            }
        }
    }
    rec(0, &mut assignment, &mut counts, bounds, &mut visit);
    Ok(())
}

fn value(c: &ObjectiveMatrix, a: &[usize]) -> f64 {
    a.iter().enumerate().map(|(j, &i)| c.get(i, j)).sum()
}

/// Best feasible clustering for an arbitrary objective; ties go to the
/// lexicographically smallest assignment.
pub fn best_for_objective(
    c: &ObjectiveMatrix,
    bounds: &SizeBounds,
    budget: &EnumerationBudget,
) -> Result<(Clustering, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_feasible(c.n(), bounds, budget, |a| {
        let v = value(c, a);
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((a.to_vec(), v));
        }
    })?;
    let (a, v) = best.ok_or_else(|| Error::InfeasibleBounds("no feasible assignment".into()))?;
    Ok((Clustering::new(a, bounds.k())?, v))
}

pub fn brute_force_best(
    ds: &DataSet,
    s: &SiteVector,
    bounds: &SizeBounds,
    budget: &EnumerationBudget,
) -> Result<(Clustering, f64)> {
    s.check_compatible(ds, bounds.k())?;
    best_for_objective(&objective_from_sites(ds, s)?, bounds, budget)
}

/// Enumeration argmax at `lambda = g / grid` for `g = 0..=grid`.
pub fn brute_force_breakpoints(
    ds: &DataSet,
    s: &SiteVector,
    t: &SiteVector,
    bounds: &SizeBounds,
    grid: usize,
    budget: &EnumerationBudget,
) -> Result<Vec<(f64, Clustering)>> {
    if grid == 0 {
        return Err(Error::Precondition("grid must be positive".into()));
    }
    s.check_compatible(ds, bounds.k())?;
    t.check_compatible(ds, bounds.k())?;
    let c_s = objective_from_sites(ds, s)?;
    let c_t = objective_from_sites(ds, t)?;
    // objective at lambda is a + lambda * b
    let mut lines: Vec<(f64, f64, Vec<usize>)> = Vec::new();
    for_each_feasible(ds.len(), bounds, budget, |a| {
        let va = value(&c_s, a);
        lines.push((va, value(&c_t, a) - va, a.to_vec()));
    })?;
    if lines.is_empty() {
        return Err(Error::InfeasibleBounds("no feasible assignment".into()));
    }
    let mut out = Vec::with_capacity(grid + 1);
    for g in 0..=grid {
        let lambda = g as f64 / grid as f64;
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (idx, (a, b, _)) in lines.iter().enumerate() {
            let v = a + lambda * b;
            if v > best_v {
                best = idx;
                best_v = v;
            }
        }
        out.push((lambda, Clustering::new(lines[best].2.clone(), bounds.k())?));
    }
    Ok(out)
}

/// Grid values at which the argmax differs from the previous grid value.
pub fn change_points(scan: &[(f64, Clustering)]) -> Vec<f64> {
    scan.windows(2)
        .filter(|w| w[0].1 != w[1].1)
        .map(|w| w[1].0)
        .collect()
}

/// True iff no clustering of the same shape scores higher for `s`.
pub fn exhaustive_separability_check(
    ds: &DataSet,
    cl: &Clustering,
    s: &SiteVector,
    budget: &EnumerationBudget,
) -> Result<bool> {
    cl.check_against(ds)?;
    s.check_compatible(ds, cl.k())?;
    let c = objective_from_sites(ds, s)?;
    let (_, best) = best_for_objective(&c, &SizeBounds::single_shape(&cl.shape()), budget)?;
    Ok(c.evaluate(cl) >= best - gap_tolerance(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PivotRule, SolverConfig};
    use crate::model::Shape;
    use crate::transport::optimize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn budget() -> EnumerationBudget {
        EnumerationBudget::default()
    }

    #[test]
    fn enumeration_counts() {
        let b = SizeBounds::all_shape(5, 3);
        let mut count = 0;
        for_each_feasible(5, &b, &budget(), |_| count += 1).unwrap();
        assert_eq!(count, 243);
        let b = SizeBounds::single_shape(&Shape(vec![2, 3]));
        let mut count = 0;
        for_each_feasible(5, &b, &budget(), |_| count += 1).unwrap();
        assert_eq!(count, 10);
        let mut seen = Vec::new();
        for_each_feasible(3, &SizeBounds::new(vec![1, 1], vec![2, 2], 3).unwrap(), &budget(), |a| {
            seen.push(a.to_vec())
        })
        .unwrap();
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted);
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn budget_is_enforced() {
        let b = SizeBounds::all_shape(30, 3);
        let e = for_each_feasible(30, &b, &budget(), |_| {}).unwrap_err();
        assert!(matches!(e, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn small_examples() {
        let ds = DataSet::new(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let s = SiteVector::new(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = SizeBounds::new(vec![1, 1], vec![1, 1], 2).unwrap();
        let (c, v) = brute_force_best(&ds, &s, &b, &budget()).unwrap();
        assert_eq!(c.assignment(), &[0, 1]);
        assert_eq!(v, 2.0);

        let one = SiteVector::new(vec![vec![0.3, 0.1]]).unwrap();
        let (c, _) = brute_force_best(&ds, &one, &SizeBounds::all_shape(2, 1), &budget()).unwrap();
        assert_eq!(c.assignment(), &[0, 0]);
        assert!(exhaustive_separability_check(&ds, &c, &one, &budget()).unwrap());
    }

    #[test]
    fn swapped_pair_is_not_separable() {
        let ds = DataSet::new(vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]]).unwrap();
        let s = SiteVector::new(vec![vec![-1.0], vec![1.0]]).unwrap();
        let good = Clustering::new(vec![0, 0, 1, 1], 2).unwrap();
        let bad = Clustering::new(vec![0, 1, 0, 1], 2).unwrap();
        assert!(exhaustive_separability_check(&ds, &good, &s, &budget()).unwrap());
        assert!(!exhaustive_separability_check(&ds, &bad, &s, &budget()).unwrap());
    }

    #[test]
    fn agrees_with_simplex_under_both_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let n: usize = rng.gen_range(2..=8);
            let k = rng.gen_range(1..=3);
            let d = rng.gen_range(1..=3);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let ds = DataSet::new(pts).unwrap();
            let s = SiteVector::new((0..k).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()).unwrap();
            let upper: Vec<usize> = (0..k).map(|_| rng.gen_range(n.div_ceil(k)..=n)).collect();
            let lower: Vec<usize> = (0..k).map(|_| rng.gen_range(0..=n / k)).collect();
            let b = SizeBounds::new(lower, upper, n).unwrap();
            let (_, want) = brute_force_best(&ds, &s, &b, &budget()).unwrap();
            let c = objective_from_sites(&ds, &s).unwrap();
            for rule in [PivotRule::Dantzig, PivotRule::Bland] {
                let cfg = SolverConfig::default().with_pivot(rule);
                let (v, _) = optimize(&c, &b, None, &cfg).unwrap();
                let got = c.evaluate(&v.clustering);
                assert!((got - want).abs() <= 1e-6 * (1.0 + want.abs()), "{rule:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn breakpoint_scan() {
        let ds = DataSet::new(vec![vec![1.0, 0.0], vec![0.6, 0.8], vec![0.0, 1.0]]).unwrap();
        let s = SiteVector::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let t = SiteVector::new(vec![vec![1.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let b = SizeBounds::new(vec![1, 1], vec![2, 2], 3).unwrap();
        let scan = brute_force_breakpoints(&ds, &s, &t, &b, 100, &budget()).unwrap();
        assert_eq!(scan.len(), 101);
        let cp = change_points(&scan);
        assert_eq!(cp.len(), 1);
        // the middle item crosses at lambda = 1/2
        assert!((cp[0] - 0.5).abs() <= 0.01 + 1e-12);

        let same = brute_force_breakpoints(&ds, &s, &s, &b, 10, &budget()).unwrap();
        assert!(change_points(&same).is_empty());
    }
}
