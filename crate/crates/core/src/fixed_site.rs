//! Fixed-site transition from a constrained LSA to the radial clustering
//! for the same sites, one sequential exchange per step.

use crate::cdg::{apply_exchange, build_cdg, decompose, Exchange};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{objective_from_sites, Clustering, DataSet, ObjectiveMatrix, SiteVector, SizeBounds};
use crate::power_diagram::{DiagramSolver, PowerDiagram};
use crate::transport::{
    gap_tolerance, lsa_gap, optimize, Advance, TransportLp, TransportState,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FixedSiteResult {
    pub sites: SiteVector,
    /// `C^0, ..., C^r`.
    pub clusterings: Vec<Clustering>,
    /// `exchanges[i]` turns `C^i` into `C^{i+1}`.
    pub exchanges: Vec<Exchange>,
    /// `P^0, ..., P^r`.
    pub inducing: Vec<PowerDiagram>,
    /// `shared[i]` induces both `C^i` and `C^{i+1}`.
    pub shared: Vec<PowerDiagram>,
    pub objectives: Vec<f64>,
}

impl FixedSiteResult {
    pub fn steps(&self) -> usize {
        self.exchanges.len()
    }

    pub fn last(&self) -> &Clustering {
        self.clusterings.last().expect("sequence is never empty")
    }

    /// `P^0, Pbar^1, P^1, ..., Pbar^r, P^r`.
    pub fn diagrams(&self) -> Vec<&PowerDiagram> {
        let mut out = vec![&self.inducing[0]];
        for (sh, ind) in self.shared.iter().zip(&self.inducing[1..]) {
            out.push(sh);
            out.push(ind);
        }
        out
    }
}

/// Fails unless `cl` is optimal for `c` among clusterings of its own shape.
pub fn check_lsa(c: &ObjectiveMatrix, cl: &Clustering, cfg: &SolverConfig) -> Result<()> {
    let gap = lsa_gap(c, cl, cfg)?;
    if gap > gap_tolerance(c.evaluate(cl) + gap) {
        return Err(Error::Precondition(format!(
            "clustering is not a constrained LSA for its sites (objective gap {gap:e})"
        )));
    }
    Ok(())
}

/// One iteration: simplex step in the bounded-shape polytope, re-optimization
/// over the new shape, then the path part of the difference graph applied
/// to `prev`. Returns the next clustering and the applied exchange.
pub fn step_to_next_shape(
    prev: &Clustering,
    state: &mut TransportState,
    c: &ObjectiveMatrix,
    cfg: &SolverConfig,
) -> Result<(Clustering, Exchange)> {
    if state.is_optimal(c) {
        return Err(Error::AlreadyOptimal);
    }
    match state.advance(c)? {
        Advance::Optimal { .. } => return Err(Error::AlreadyOptimal),
        Advance::Moved { .. } => {}
    }
    let stepped = state.clustering()?;
    if stepped.shape() == prev.shape() {
        return Err(Error::Internal(
            "bounded-shape step kept the shape of a constrained LSA".into(),
        ));
    }
    let (opt, _) = optimize(c, &SizeBounds::single_shape(&stepped.shape()), Some(&stepped), cfg)?;
    let g = build_cdg(prev, &opt.clustering)?;
    let (path, _cycles) = decompose(&g).map_err(|e| match e {
        Error::Precondition(m) => Error::Internal(m),
        other => other,
    })?;
    let path = path.ok_or_else(|| Error::Internal("difference graph has no path".into()))?;
    let next = apply_exchange(prev, &path)?;
    let (got, want) = (c.evaluate(&next), c.evaluate(&opt.clustering));
    if got < want - gap_tolerance(want) {
        return Err(Error::Internal(format!(
            "path repair lost objective: {got} < {want}"
        )));
    }
    Ok((next, path))
}

/// Walks from the constrained LSA `c0` to a radial clustering for `s`
/// within `bounds`.
pub fn init_to_rad(
    ds: &DataSet,
    c0: &Clustering,
    s: &SiteVector,
    bounds: &SizeBounds,
    cfg: &SolverConfig,
) -> Result<FixedSiteResult> {
    init_to_rad_with(ds, c0, s, bounds, cfg, &mut DiagramSolver::new(cfg))
}

pub fn init_to_rad_with(
    ds: &DataSet,
    c0: &Clustering,
    s: &SiteVector,
    bounds: &SizeBounds,
    cfg: &SolverConfig,
    diagrams: &mut DiagramSolver,
) -> Result<FixedSiteResult> {
    c0.check_against(ds)?;
    s.check_compatible(ds, c0.k())?;
    if bounds.k() != c0.k() {
        return Err(Error::Incompatible(format!(
            "bounds for {} clusters, clustering has {}",
            bounds.k(),
            c0.k()
        )));
    }
    bounds.check_shape(&c0.shape())?;
    let c = objective_from_sites(ds, s)?;
    check_lsa(&c, c0, cfg)?;

    let lp = TransportLp::new(ds.len(), bounds)?;
    let limit = bounds.shape_count(ds.len());
    let mut clusterings = vec![c0.clone()];
    let mut exchanges = Vec::new();
    let mut objectives = vec![c.evaluate(c0)];
    loop {
        let prev = clusterings.last().expect("nonempty");
        let mut state = lp.state_at(prev, cfg)?;
        match step_to_next_shape(prev, &mut state, &c, cfg) {
            Ok((next, ex)) => {
                objectives.push(c.evaluate(&next));
                clusterings.push(next);
                exchanges.push(ex);
                if clusterings.len() as u128 > limit {
                    return Err(Error::Internal("more clusterings than feasible shapes".into()));
                }
            }
            Err(Error::AlreadyOptimal) => break,
            Err(e) => return Err(e),
        }
    }

    let mut inducing = Vec::with_capacity(clusterings.len());
    let mut shared = Vec::with_capacity(exchanges.len());
    inducing.push(diagrams.max_margin(ds, &clusterings[0], s)?);
    for w in clusterings.windows(2) {
        shared.push(diagrams.shared(ds, &w[0], &w[1], s)?);
        inducing.push(diagrams.max_margin(ds, &w[1], s)?);
    }
    Ok(FixedSiteResult {
        sites: s.clone(),
        clusterings,
        exchanges,
        inducing,
        shared,
        objectives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::{is_single_exchange, ExchangeKind};
    use crate::power_diagram::{induces, moved_items_off_boundary};
    use crate::transport::optimality_gap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn centered(rng: &mut ChaCha8Rng, n: usize) -> DataSet {
        let ds = DataSet::new(
            (0..n)
                .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
                .collect(),
        )
        .unwrap();
        crate::model::center_dataset(&ds).unwrap()
    }

    fn sites(rng: &mut ChaCha8Rng, k: usize) -> SiteVector {
        SiteVector::new(
            (0..k)
                .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
                .collect(),
        )
        .unwrap()
    }

    fn lsa(ds: &DataSet, s: &SiteVector, shape: &[usize]) -> Clustering {
        let c = objective_from_sites(ds, s).unwrap();
        let b = SizeBounds::single_shape(&crate::model::Shape(shape.to_vec()));
        optimize(&c, &b, None, &cfg()).unwrap().0.clustering
    }

    #[test]
    fn tight_bounds_give_no_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = centered(&mut rng, 8);
        let s = sites(&mut rng, 2);
        let c0 = lsa(&ds, &s, &[4, 4]);
        let res = init_to_rad(&ds, &c0, &s, &SizeBounds::single_shape(&c0.shape()), &cfg()).unwrap();
        assert_eq!(res.steps(), 0);
        assert_eq!(res.clusterings, vec![c0]);
        assert_eq!(res.diagrams().len(), 1);
    }

    #[test]
    fn radial_input_gives_no_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = centered(&mut rng, 8);
        let s = sites(&mut rng, 2);
        let bounds = SizeBounds::new(vec![2, 2], vec![6, 6], 8).unwrap();
        let c = objective_from_sites(&ds, &s).unwrap();
        let (rad, _) = optimize(&c, &bounds, None, &cfg()).unwrap();
        let res = init_to_rad(&ds, &rad.clustering, &s, &bounds, &cfg()).unwrap();
        assert_eq!(res.steps(), 0);
    }

    #[test]
    fn rejects_non_lsa() {
        let ds = DataSet::new(vec![vec![-1.0], vec![1.0]]).unwrap();
        let s = SiteVector::new(vec![vec![-1.0], vec![1.0]]).unwrap();
        let crossed = Clustering::new(vec![1, 0], 2).unwrap();
        let bounds = SizeBounds::all_shape(2, 2);
        assert!(matches!(
            init_to_rad(&ds, &crossed, &s, &bounds, &cfg()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn walks_satisfy_the_fixed_site_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let bounds = SizeBounds::new(vec![2, 2], vec![6, 6], 8).unwrap();
        let mut nontrivial = 0;
        for _ in 0..40 {
            let ds = centered(&mut rng, 8);
            let s = sites(&mut rng, 2);
            let c0 = lsa(&ds, &s, &[4, 4]);
            let c = objective_from_sites(&ds, &s).unwrap();
            let res = init_to_rad(&ds, &c0, &s, &bounds, &cfg()).unwrap();
            if res.steps() > 0 {
                nontrivial += 1;
            }
            assert_eq!(res.clusterings[0], c0);
            assert!(optimality_gap(&c, res.last(), &bounds, &cfg()).unwrap() <= 1e-9);
            let mut shapes = Vec::new();
            for (i, cl) in res.clusterings.iter().enumerate() {
                assert!(bounds.contains(&cl.shape()));
                assert!(lsa_gap(&c, cl, &cfg()).unwrap() <= 1e-9);
                assert!(induces(&ds, &res.inducing[i], cl, false));
                shapes.push(cl.shape());
            }
            shapes.sort();
            shapes.dedup();
            assert_eq!(shapes.len(), res.clusterings.len());
            assert!(res.clusterings.len() <= 5);
            for (i, w) in res.clusterings.windows(2).enumerate() {
                assert!(is_single_exchange(&w[0], &w[1]));
                assert_eq!(res.exchanges[i].kind, ExchangeKind::Path);
                assert!(induces(&ds, &res.shared[i], &w[0], false));
                assert!(induces(&ds, &res.shared[i], &w[1], false));
                assert!(moved_items_off_boundary(&ds, &res.shared[i], &w[0], &w[1]).is_empty());
                assert!(res.objectives[i + 1] > res.objectives[i] + 1e-9 * c.scale());
            }
        }
        assert!(nontrivial > 5, "only {nontrivial} walks moved");
    }

    #[test]
    fn repaired_step_matches_reoptimized_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bounds = SizeBounds::new(vec![1, 1, 1], vec![5, 5, 5], 9).unwrap();
        let lp = TransportLp::new(9, &bounds).unwrap();
        let mut seen = 0;
        for _ in 0..30 {
            let ds = centered(&mut rng, 9);
            let s = sites(&mut rng, 3);
            let c = objective_from_sites(&ds, &s).unwrap();
            let prev = lsa(&ds, &s, &[3, 3, 3]);
            let mut state = lp.state_at(&prev, &cfg()).unwrap();
            let Ok((next, path)) = step_to_next_shape(&prev, &mut state, &c, &cfg()) else {
                continue;
            };
            let (opt, _) = optimize(&c, &SizeBounds::single_shape(&next.shape()), None, &cfg()).unwrap();
            assert!((c.evaluate(&next) - c.evaluate(&opt.clustering)).abs() < 1e-9);
            let diff: usize = prev
                .shape()
                .0
                .iter()
                .zip(&next.shape().0)
                .map(|(a, b)| a.abs_diff(*b))
                .sum();
            assert_eq!(diff, 2);
            assert_eq!(path.kind, ExchangeKind::Path);
            seen += 1;
        }
        assert!(seen > 5);
    }
}
