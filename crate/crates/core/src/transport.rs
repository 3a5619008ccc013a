//! The bounded-shape transportation polytope in equality form.
//!
//! Variables are `y[i][j]` at index `i * n + j`, then one surplus `u_i` per
//! lower-bound row and one slack `v_i` per upper-bound row. Rows are the `n`
//! partition constraints, the `k` lower-bound rows and the `k` upper-bound
//! rows, in that order.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{Clustering, ObjectiveMatrix, Shape, SizeBounds};
use crate::simplex::{Engine, PivotInfo, SimplexOptions, StandardForm};

#[derive(Debug, Clone, PartialEq)]
pub struct TransportLp {
    n: usize,
    k: usize,
    bounds: SizeBounds,
    sf: StandardForm,
}

impl TransportLp {
    pub fn new(n: usize, bounds: &SizeBounds) -> Result<Self> {
        let k = bounds.k();
        // re-validate against this n
        SizeBounds::new(bounds.lower().to_vec(), bounds.upper().to_vec(), n)?;
        let mut b = vec![1.0; n];
        b.extend(bounds.lower().iter().map(|&v| v as f64));
        b.extend(bounds.upper().iter().map(|&v| v as f64));
        let mut sf = StandardForm::new(b);
        for i in 0..k {
            for j in 0..n {
                sf.add_column(vec![(j, 1.0), (n + i, 1.0), (n + k + i, 1.0)]);
            }
        }
        for i in 0..k {
            sf.add_column(vec![(n + i, -1.0)]);
        }
        for i in 0..k {
            sf.add_column(vec![(n + k + i, 1.0)]);
        }
        Ok(TransportLp {
            n,
            k,
            bounds: bounds.clone(),
            sf,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bounds(&self) -> &SizeBounds {
        &self.bounds
    }

    pub fn num_vars(&self) -> usize {
        self.n * self.k + 2 * self.k
    }

    pub fn rows(&self) -> usize {
        self.n + 2 * self.k
    }

    pub fn y_index(&self, cluster: usize, item: usize) -> usize {
        cluster * self.n + item
    }

    pub fn surplus_index(&self, cluster: usize) -> usize {
        self.n * self.k + cluster
    }

    pub fn slack_index(&self, cluster: usize) -> usize {
        self.n * self.k + self.k + cluster
    }

    pub fn standard_form(&self) -> &StandardForm {
        &self.sf
    }

    /// Objective over all variables (zero on slacks).
    pub fn cost_vector(&self, c: &ObjectiveMatrix) -> Vec<f64> {
        assert_eq!((c.k(), c.n()), (self.k, self.n), "objective has wrong size");
        let mut v = c.values().to_vec();
        v.resize(self.num_vars(), 0.0);
        v
    }

    pub fn vertex_from_clustering(&self, c: &Clustering) -> Result<TransportVertex> {
        self.check_clustering(c)?;
        let shape = c.shape();
        Ok(TransportVertex {
            surplus: (0..self.k).map(|i| shape.0[i] - self.bounds.lower()[i]).collect(),
            slack: (0..self.k).map(|i| self.bounds.upper()[i] - shape.0[i]).collect(),
            clustering: c.clone(),
        })
    }

    fn check_clustering(&self, c: &Clustering) -> Result<()> {
        if c.len() != self.n || c.k() != self.k {
            return Err(Error::Incompatible(format!(
                "clustering has n = {}, k = {}; polytope has n = {}, k = {}",
                c.len(),
                c.k(),
                self.n,
                self.k
            )));
        }
        self.bounds.check_shape(&c.shape())
    }

    /// Basis of the vertex of `c`: every `y[C(j)][j]` plus all surpluses and slacks.
    pub fn state_at(&self, c: &Clustering, cfg: &SolverConfig) -> Result<TransportState> {
        self.check_clustering(c)?;
        let mut basic: Vec<usize> = (0..self.n).map(|j| self.y_index(c.cluster_of(j), j)).collect();
        basic.extend((0..self.k).map(|i| self.surplus_index(i)));
        basic.extend((0..self.k).map(|i| self.slack_index(i)));
        let engine = Engine::new(self.sf.clone(), basic, SimplexOptions::from_config(cfg, 1.0))?;
        Ok(TransportState {
            lp: self.clone(),
            cfg: *cfg,
            engine,
        })
    }

    /// A feasible clustering that prefers high objective items first.
    pub fn initial_clustering(&self, c: &ObjectiveMatrix) -> Clustering {
        let (lower, upper) = (self.bounds.lower(), self.bounds.upper());
        let mut count = vec![0usize; self.k];
        let mut deficit: usize = lower.iter().sum();
        let mut assignment = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let remaining = self.n - j;
            let forced = remaining == deficit;
            let best = (0..self.k)
                .filter(|&i| count[i] < upper[i] && (!forced || count[i] < lower[i]))
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if c.get(b, j) >= c.get(i, j) => Some(b),
                    _ => Some(i),
                })
                .expect("bounds were validated as feasible");
            if count[best] < lower[best] {
                deficit -= 1;
            }
            count[best] += 1;
            assignment.push(best);
        }
        Clustering::new(assignment, self.k).expect("cluster indices in range")
    }
}

/// A 0/1 vertex of the polytope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportVertex {
    pub clustering: Clustering,
    pub surplus: Vec<usize>,
    pub slack: Vec<usize>,
}

impl TransportVertex {
    /// Full variable vector in the layout of [`TransportLp`].
    pub fn values(&self) -> Vec<f64> {
        let (n, k) = (self.clustering.len(), self.clustering.k());
        let mut x = vec![0.0; n * k + 2 * k];
        for (j, &i) in self.clustering.assignment().iter().enumerate() {
            x[i * n + j] = 1.0;
        }
        for i in 0..k {
            x[n * k + i] = self.surplus[i] as f64;
            x[n * k + k + i] = self.slack[i] as f64;
        }
        x
    }
}

/// Outcome of [`TransportState::advance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    /// An edge step reached a new vertex.
    Moved { pivots: usize },
    /// The basis became dual feasible without leaving the vertex.
    Optimal { pivots: usize },
}

/// A basis of the polytope; single owner, mutated by pivots.
#[derive(Debug, Clone)]
pub struct TransportState {
    lp: TransportLp,
    cfg: SolverConfig,
    engine: Engine,
}

impl TransportState {
    pub fn lp(&self) -> &TransportLp {
        &self.lp
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn pivots(&self) -> usize {
        self.engine.pivots
    }

    fn tune(&mut self, c: &ObjectiveMatrix) {
        self.engine.opts = SimplexOptions::from_config(&self.cfg, c.scale());
    }

    pub fn is_basic(&self, var: usize) -> bool {
        self.engine.basis.is_basic(var)
    }

    pub fn nonbasic(&self) -> Vec<usize> {
        (0..self.lp.num_vars()).filter(|&j| !self.is_basic(j)).collect()
    }

    /// Current clustering; fails if the basic solution is not integral.
    pub fn clustering(&self) -> Result<Clustering> {
        let (n, k) = (self.lp.n, self.lp.k);
        let x = self.engine.basis.primal(self.lp.num_vars());
        let tol = 1e-7;
        let mut assignment = vec![usize::MAX; n];
        for i in 0..k {
            for (j, slot) in assignment.iter_mut().enumerate() {
                let v = x[i * n + j];
                if (v - 1.0).abs() <= tol {
                    if *slot != usize::MAX {
                        return Err(Error::Internal(format!("item {j} assigned twice")));
                    }
                    *slot = i;
                } else if v.abs() > tol {
                    return Err(Error::Internal(format!(
                        "fractional value {v} for item {j} in cluster {i}"
                    )));
                }
            }
        }
        if let Some(j) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(Error::Internal(format!("item {j} unassigned at vertex")));
        }
        let c = Clustering::new(assignment, k)?;
        let shape: Shape = c.shape();
        // exact integer residual of the bound rows
        for i in 0..k {
            let u = x[self.lp.surplus_index(i)].round();
            let v = x[self.lp.slack_index(i)].round();
            if u < 0.0
                || v < 0.0
                || shape.0[i] as f64 - u != self.lp.bounds.lower()[i] as f64
                || shape.0[i] as f64 + v != self.lp.bounds.upper()[i] as f64
            {
                return Err(Error::Internal(format!("bound row {i} violated at vertex")));
            }
        }
        Ok(c)
    }

    pub fn vertex(&self) -> Result<TransportVertex> {
        let c = self.clustering()?;
        self.lp.vertex_from_clustering(&c)
    }

    pub fn objective(&self, c: &ObjectiveMatrix) -> f64 {
        self.engine.objective(&self.lp.cost_vector(c))
    }

    /// `z = (B^-1 N)^T c_B - c_N` over all variables, zero on basic ones.
    pub fn reduced_costs(&self, c: &ObjectiveMatrix) -> Vec<f64> {
        self.engine.reduced_costs(&self.lp.cost_vector(c))
    }

    pub fn reduced_costs_raw(&self, cost: &[f64]) -> Vec<f64> {
        self.engine.reduced_costs(cost)
    }

    /// Change of the reduced costs per unit change `dc` of the objective.
    pub fn delta_z(&self, dc: &ObjectiveMatrix) -> Vec<f64> {
        self.reduced_costs(dc)
    }

    pub fn optimality_tolerance(&self, c: &ObjectiveMatrix) -> f64 {
        self.cfg.tol_opt * c.scale()
    }

    pub fn is_optimal(&self, c: &ObjectiveMatrix) -> bool {
        let tol = self.optimality_tolerance(c);
        self.reduced_costs(c).iter().all(|&z| z >= -tol)
    }

    /// Runs the simplex method to a dual feasible basis.
    pub fn optimize(&mut self, c: &ObjectiveMatrix) -> Result<()> {
        self.tune(c);
        let cost = self.lp.cost_vector(c);
        self.engine.run_primal(&cost, &|_| true)
    }

    /// Pivots until the vertex changes or the basis turns dual feasible.
    pub fn advance(&mut self, c: &ObjectiveMatrix) -> Result<Advance> {
        self.tune(c);
        let cost = self.lp.cost_vector(c);
        let cap = 1000 + 50 * self.lp.num_vars();
        for pivots in 0..cap {
            match self.engine.primal_iteration(&cost, &|_| true)? {
                None => return Ok(Advance::Optimal { pivots }),
                Some(info) if !info.degenerate(self.cfg.tol_feas) => {
                    return Ok(Advance::Moved { pivots: pivots + 1 })
                }
                Some(_) => {}
            }
        }
        Err(Error::Internal("no vertex change within iteration limit".into()))
    }

    /// Moves to an adjacent vertex with strictly larger objective.
    pub fn simplex_step(&mut self, c: &ObjectiveMatrix) -> Result<TransportVertex> {
        if self.is_optimal(c) {
            return Err(Error::AlreadyOptimal);
        }
        match self.advance(c)? {
            Advance::Moved { .. } => self.vertex(),
            Advance::Optimal { .. } => Err(Error::AlreadyOptimal),
        }
    }

    /// Pivots a chosen nonbasic variable in with the primal ratio test.
    pub fn pivot(&mut self, entering: usize) -> Result<PivotInfo> {
        if self.is_basic(entering) {
            return Err(Error::Internal(format!("variable {entering} already basic")));
        }
        self.engine.primal_pivot(entering)
    }

    pub fn step_is_degenerate(&self, info: &PivotInfo) -> bool {
        info.degenerate(self.cfg.tol_feas)
    }

    /// Largest `mu >= 0` such that the basis stays optimal for `c + mu dc`;
    /// `f64::INFINITY` if it stays optimal for every `mu >= 0`.
    pub fn ranging_breakpoint(&self, c: &ObjectiveMatrix, dc: &ObjectiveMatrix) -> Result<f64> {
        if !self.is_optimal(c) {
            return Err(Error::Precondition("basis is not optimal for c".into()));
        }
        let z = self.reduced_costs(c);
        let dz = self.delta_z(dc);
        let tol_dz = dz_tolerance(dc);
        Ok(self
            .nonbasic()
            .into_iter()
            .filter(|&j| dz[j] < -tol_dz)
            .map(|j| z[j].max(0.0) / -dz[j])
            .fold(f64::INFINITY, f64::min))
    }
}

/// Magnitude below which a reduced-cost derivative counts as zero.
pub(crate) fn dz_tolerance(dc: &ObjectiveMatrix) -> f64 {
    1e-9 * dc.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Maximizes `c` over the polytope, starting from `warm_start` if given.
pub fn optimize(
    c: &ObjectiveMatrix,
    bounds: &SizeBounds,
    warm_start: Option<&Clustering>,
    cfg: &SolverConfig,
) -> Result<(TransportVertex, TransportState)> {
    let lp = TransportLp::new(c.n(), bounds)?;
    let start = match warm_start {
        Some(w) => w.clone(),
        None => lp.initial_clustering(c),
    };
    let mut state = lp.state_at(&start, cfg)?;
    state.optimize(c)?;
    let vertex = state.vertex()?;
    Ok((vertex, state))
}

/// Tolerance on objective gaps when comparing against re-optimization.
pub fn gap_tolerance(best: f64) -> f64 {
    1e-6 * (1.0 + best.abs())
}

/// `max over T^=(shape(cl)) of c` minus `c(cl)`, warm-started from `cl`.
pub fn lsa_gap(c: &ObjectiveMatrix, cl: &Clustering, cfg: &SolverConfig) -> Result<f64> {
    let bounds = SizeBounds::single_shape(&cl.shape());
    optimality_gap(c, cl, &bounds, cfg)
}

/// `max over T(bounds) of c` minus `c(cl)`, warm-started from `cl`.
pub fn optimality_gap(
    c: &ObjectiveMatrix,
    cl: &Clustering,
    bounds: &SizeBounds,
    cfg: &SolverConfig,
) -> Result<f64> {
    let (v, _) = optimize(c, bounds, Some(cl), cfg)?;
    Ok(c.evaluate(&v.clustering) - c.evaluate(cl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::is_single_exchange;
    use crate::model::{objective_from_sites, DataSet, SiteVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, d: usize) -> (DataSet, SiteVector) {
        let pts = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let sites = (0..k)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        (DataSet::new(pts).unwrap(), SiteVector::new(sites).unwrap())
    }

    /// Exhaustive maximum over all assignments respecting the bounds.
    fn enumerate_max(c: &ObjectiveMatrix, bounds: &SizeBounds) -> f64 {
        let (k, n) = (c.k(), c.n());
        let mut best = f64::NEG_INFINITY;
        for code in 0..k.pow(n as u32) {
            let mut a = Vec::with_capacity(n);
            let mut x = code;
            for _ in 0..n {
                a.push(x % k);
                x /= k;
            }
            let cl = Clustering::new(a, k).unwrap();
            if bounds.contains(&cl.shape()) {
                best = best.max(c.evaluate(&cl));
            }
        }
        best
    }

    #[test]
    fn vertex_examples() {
        let bounds = SizeBounds::new(vec![0, 0], vec![4, 4], 4).unwrap();
        let lp = TransportLp::new(4, &bounds).unwrap();
        let all_first = Clustering::new(vec![0; 4], 2).unwrap();
        let v = lp.vertex_from_clustering(&all_first).unwrap();
        assert_eq!(&v.values()[..4], &[1.0; 4]);
        let state = lp.state_at(&all_first, &cfg()).unwrap();
        assert_eq!(state.clustering().unwrap(), all_first);

        let tight = SizeBounds::new(vec![2, 2], vec![2, 2], 4).unwrap();
        let lp = TransportLp::new(4, &tight).unwrap();
        assert!(matches!(
            lp.vertex_from_clustering(&all_first),
            Err(Error::ShapeOutOfBounds { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bounds = SizeBounds::new(vec![1, 1, 1], vec![5, 5, 5], 7).unwrap();
        let lp = TransportLp::new(7, &bounds).unwrap();
        for _ in 0..20 {
            let a: Vec<usize> = (0..7).map(|_| rng.gen_range(0..3)).collect();
            let c = Clustering::new(a, 3).unwrap();
            if !bounds.contains(&c.shape()) {
                continue;
            }
            let v = lp.vertex_from_clustering(&c).unwrap();
            assert!(lp.standard_form().residual(&v.values()).iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn zero_objective_and_single_cluster() {
        let bounds = SizeBounds::all_shape(3, 2);
        let (v, state) = optimize(&ObjectiveMatrix::zeros(2, 3), &bounds, None, &cfg()).unwrap();
        assert_eq!(state.objective(&ObjectiveMatrix::zeros(2, 3)), 0.0);
        assert_eq!(v.clustering.len(), 3);

        let one = SizeBounds::all_shape(3, 1);
        let c = ObjectiveMatrix::from_values(1, 3, vec![1.0, -2.0, 0.5]);
        let lp = TransportLp::new(3, &one).unwrap();
        let state = lp.state_at(&Clustering::new(vec![0; 3], 1).unwrap(), &cfg()).unwrap();
        assert!(state.is_optimal(&c));
    }

    #[test]
    fn single_shape_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let bounds = SizeBounds::new(vec![3, 3], vec![3, 3], 6).unwrap();
        for _ in 0..20 {
            let (ds, s) = random_instance(&mut rng, 6, 2, 2);
            let c = objective_from_sites(&ds, &s).unwrap();
            let (v, _) = optimize(&c, &bounds, None, &cfg()).unwrap();
            assert_eq!(v.clustering.shape().0, vec![3, 3]);
            assert!((c.evaluate(&v.clustering) - enumerate_max(&c, &bounds)).abs() < 1e-9);
        }
    }

    #[test]
    fn all_shape_is_per_item_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (ds, s) = random_instance(&mut rng, 7, 3, 2);
            let c = objective_from_sites(&ds, &s).unwrap();
            let (v, _) = optimize(&c, &SizeBounds::all_shape(7, 3), None, &cfg()).unwrap();
            for j in 0..7 {
                let best = (0..3).map(|i| c.get(i, j)).fold(f64::NEG_INFINITY, f64::max);
                assert!((c.get(v.clustering.cluster_of(j), j) - best).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simplex_step_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bounds = SizeBounds::new(vec![1, 1, 1], vec![4, 4, 4], 7).unwrap();
        let lp = TransportLp::new(7, &bounds).unwrap();
        let mut checked = 0;
        for _ in 0..40 {
            let (ds, s) = random_instance(&mut rng, 7, 3, 2);
            let c = objective_from_sites(&ds, &s).unwrap();
            let start = lp.initial_clustering(&ObjectiveMatrix::zeros(3, 7));
            let mut state = lp.state_at(&start, &cfg()).unwrap();
            if state.is_optimal(&c) {
                continue;
            }
            let before = state.objective(&c);
            match state.simplex_step(&c) {
                Ok(v) => {
                    assert!(state.objective(&c) > before);
                    assert!(is_single_exchange(&start, &v.clustering));
                    checked += 1;
                }
                Err(Error::AlreadyOptimal) => {}
                Err(e) => panic!("{e}"),
            }
            state.optimize(&c).unwrap();
            assert_eq!(state.simplex_step(&c), Err(Error::AlreadyOptimal));
        }
        assert!(checked > 10);
    }

    #[test]
    fn optimality_against_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let bounds = SizeBounds::new(vec![2, 2], vec![4, 4], 6).unwrap();
        let lp = TransportLp::new(6, &bounds).unwrap();
        let (ds, s) = random_instance(&mut rng, 6, 2, 2);
        let c = objective_from_sites(&ds, &s).unwrap();
        let (v, _) = optimize(&c, &bounds, None, &cfg()).unwrap();
        let mut state = lp.state_at(&v.clustering, &cfg()).unwrap();
        // a fresh basis at an optimal vertex may need degenerate pivots only
        assert!(matches!(state.advance(&c), Ok(Advance::Optimal { .. })));
        assert!(state.is_optimal(&c));
        assert!((state.objective(&c) - enumerate_max(&c, &bounds)).abs() < 1e-9);

        // a strictly dominated vertex
        let worst = (0..6).map(|j| if c.get(0, j) < c.get(1, j) { 0 } else { 1 }).collect();
        let worst = Clustering::new(worst, 2).unwrap();
        if bounds.contains(&worst.shape()) && c.evaluate(&worst) < enumerate_max(&c, &bounds) - 1e-6 {
            let state = lp.state_at(&worst, &cfg()).unwrap();
            assert!(!state.is_optimal(&c));
        }
    }

    #[test]
    fn delta_z_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bounds = SizeBounds::new(vec![1, 1], vec![5, 5], 6).unwrap();
        let (ds, s) = random_instance(&mut rng, 6, 2, 2);
        let (_, t) = random_instance(&mut rng, 6, 2, 2);
        let c = objective_from_sites(&ds, &s).unwrap();
        let ct = objective_from_sites(&ds, &t).unwrap();
        let (_, state) = optimize(&c, &bounds, None, &cfg()).unwrap();

        assert!(state.delta_z(&ObjectiveMatrix::zeros(2, 6)).iter().all(|&v| v == 0.0));
        let z = state.reduced_costs(&c);
        for (a, b) in state.delta_z(&c).iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
        let dc = ObjectiveMatrix::combine(1.0, &ct, -1.0, &c);
        let h = 1e-4;
        let shifted = state.reduced_costs(&ObjectiveMatrix::combine(1.0, &c, h, &dc));
        let dz = state.delta_z(&dc);
        for j in state.nonbasic() {
            let fd = (shifted[j] - z[j]) / h;
            assert!((fd - dz[j]).abs() <= 1e-5 * (1.0 + dz[j].abs()));
        }
    }

    #[test]
    fn ranging_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bounds = SizeBounds::new(vec![1, 1], vec![5, 5], 6).unwrap();
        let (ds, s) = random_instance(&mut rng, 6, 2, 2);
        let c = objective_from_sites(&ds, &s).unwrap();
        let (_, state) = optimize(&c, &bounds, None, &cfg()).unwrap();
        let zero = ObjectiveMatrix::zeros(2, 6);
        assert_eq!(state.ranging_breakpoint(&c, &zero).unwrap(), f64::INFINITY);
        assert_eq!(state.ranging_breakpoint(&c, &c).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ranging_matches_resolve_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let bounds = SizeBounds::new(vec![1, 1], vec![5, 5], 6).unwrap();
        let mut checked = 0;
        for _ in 0..30 {
            let (ds, s) = random_instance(&mut rng, 6, 2, 2);
            let (_, t) = random_instance(&mut rng, 6, 2, 2);
            let cs = objective_from_sites(&ds, &s).unwrap();
            let ct = objective_from_sites(&ds, &t).unwrap();
            let dc = ObjectiveMatrix::combine(1.0, &ct, -1.0, &cs);
            let (v, state) = optimize(&cs, &bounds, None, &cfg()).unwrap();
            let mu = state.ranging_breakpoint(&cs, &dc).unwrap();
            if !(1e-3..=1.0).contains(&mu) {
                continue;
            }
            // before the breakpoint the vertex is still optimal, after it is beaten
            let at = |l: f64| ObjectiveMatrix::combine(1.0, &cs, l, &dc);
            let before = at(mu - 1e-6);
            let after = at(mu + 1e-6);
            let best_before = enumerate_max(&before, &bounds);
            let best_after = enumerate_max(&after, &bounds);
            let here = v.clustering.clone();
            assert!((before.evaluate(&here) - best_before).abs() < 1e-9);
            // the vertex may stay optimal only through a degenerate basis change
            if after.evaluate(&here) < best_after - 1e-12 {
                checked += 1;
            }
        }
        assert!(checked > 5);
    }

    proptest! {
        #[test]
        fn warm_and_cold_agree(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bounds = SizeBounds::new(vec![1, 1, 0], vec![4, 4, 4], 7).unwrap();
            let (ds, s) = random_instance(&mut rng, 7, 3, 2);
            let c = objective_from_sites(&ds, &s).unwrap();
            let (cold, _) = optimize(&c, &bounds, None, &cfg()).unwrap();
            let start = Clustering::new(vec![0, 0, 0, 1, 1, 1, 2], 3).unwrap();
            let (warm, _) = optimize(&c, &bounds, Some(&start), &cfg()).unwrap();
            prop_assert!((c.evaluate(&cold.clustering) - c.evaluate(&warm.clustering)).abs() < 1e-9);
            prop_assert!((c.evaluate(&cold.clustering) - enumerate_max(&c, &bounds)).abs() < 1e-9);
        }
    }
}
