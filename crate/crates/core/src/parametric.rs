//! Edge walk between radial clusterings following the objective
//! `(1 - lambda) c(s) + lambda c(t)`.

use crate::cdg::{single_exchange, Exchange};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{objective_from_sites, Clustering, DataSet, ObjectiveMatrix, SiteVector, SizeBounds};
use crate::power_diagram::{DiagramSolver, PowerDiagram};
use crate::transport::{dz_tolerance, Advance, TransportLp, TransportState};

/// Breakpoints closer than this are one event.
pub const COALESCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionStep {
    pub lambda: f64,
    pub clustering: Clustering,
    /// Exchange from the previous clustering to this one.
    pub exchange: Exchange,
    /// Induces the previous clustering and this one at `s^lambda`.
    pub shared: PowerDiagram,
    /// Induces this clustering at the midpoint of its own and the next
    /// step's sites; absent on the last step.
    pub inducing: Option<PowerDiagram>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialWalk {
    pub start: Clustering,
    pub steps: Vec<TransitionStep>,
}

impl RadialWalk {
    pub fn last(&self) -> &Clustering {
        self.steps.last().map_or(&self.start, |s| &s.clustering)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.lambda).collect()
    }

    /// `Pbar^1, P^1, ..., P^{m-1}, Pbar^m`.
    pub fn diagrams(&self) -> Vec<&PowerDiagram> {
        let mut out = Vec::new();
        for st in &self.steps {
            out.push(&st.shared);
            if let Some(p) = &st.inducing {
                out.push(p);
            }
        }
        out
    }
}

/// Result of [`advance_to_breakpoint`].
#[derive(Debug, Clone, PartialEq)]
pub enum Breakpoint {
    /// The current vertex is optimal up to `lambda = 1`.
    Done,
    Moved { lambda: f64, clustering: Clustering },
}

/// Objective at `lambda` in the form `c_s + lambda (c_t - c_s)`.
pub fn objective_at(c_s: &ObjectiveMatrix, dc: &ObjectiveMatrix, lambda: f64) -> ObjectiveMatrix {
    ObjectiveMatrix::combine(1.0, c_s, lambda, dc)
}

/// From a basis optimal at `lambda_cur`, raises `lambda` to the next
/// breakpoint and pivots there until the vertex changes.
pub fn advance_to_breakpoint(
    state: &mut TransportState,
    c_s: &ObjectiveMatrix,
    c_t: &ObjectiveMatrix,
    lambda_cur: f64,
) -> Result<Breakpoint> {
    let dc = ObjectiveMatrix::combine(1.0, c_t, -1.0, c_s);
    let tol_dz = dz_tolerance(&dc);
    let mut lambda = lambda_cur;
    let cap = 1000 + 50 * state.lp().num_vars();
    for _ in 0..cap {
        let c = objective_at(c_s, &dc, lambda);
        let z = state.reduced_costs(&c);
        let dz = state.delta_z(&dc);
        let ratios: Vec<(usize, f64)> = state
            .nonbasic()
            .into_iter()
            .filter(|&j| dz[j] < -tol_dz)
            .map(|j| (j, z[j].max(0.0) / -dz[j]))
            .collect();
        let Some(mu) = ratios.iter().map(|r| r.1).reduce(f64::min) else {
            return Ok(Breakpoint::Done);
        };
        if lambda + mu > 1.0 + COALESCE {
            return Ok(Breakpoint::Done);
        }
        let entering = ratios
            .iter()
            .filter(|r| r.1 <= mu + COALESCE)
            .map(|r| r.0)
            .min()
            .expect("the minimizer qualifies");
        lambda = (lambda + mu).min(1.0);
        let info = state.pivot(entering)?;
        if !state.step_is_degenerate(&info) {
            return Ok(Breakpoint::Moved {
                lambda,
                clustering: state.clustering()?,
            });
        }
    }
    Err(Error::Internal("no vertex change at breakpoint within iteration limit".into()))
}

/// Fails unless `cl` is optimal for `c` over `lp`; returns a dual feasible
/// basis at the vertex of `cl`.
pub fn radial_basis(
    lp: &TransportLp,
    cl: &Clustering,
    c: &ObjectiveMatrix,
    cfg: &SolverConfig,
    what: &str,
) -> Result<TransportState> {
    let mut state = lp.state_at(cl, cfg)?;
    let before = state.objective(c);
    match state.advance(c)? {
        Advance::Optimal { .. } => Ok(state),
        Advance::Moved { .. } => {
            state.optimize(c)?;
            Err(Error::Precondition(format!(
                "{what} is not radial for its sites (objective gap {:e})",
                state.objective(c) - before
            )))
        }
    }
}

/// Pivots along the optimal face of `c_t` until the vertex of `target` is
/// reached, recording every vertex passed.
fn walk_terminal_face(
    state: &mut TransportState,
    c_t: &ObjectiveMatrix,
    target: &Clustering,
) -> Result<Vec<Clustering>> {
    let lp = state.lp().clone();
    let mut h = vec![0.0; lp.num_vars()];
    for (j, &i) in target.assignment().iter().enumerate() {
        h[lp.y_index(i, j)] = 1.0;
    }
    let tol = state.optimality_tolerance(c_t);
    let mut visited = Vec::new();
    let cap = 1000 + 50 * lp.num_vars();
    for _ in 0..cap {
        if state.clustering()? == *target {
            return Ok(visited);
        }
        let z = state.reduced_costs(c_t);
        let zh = state.reduced_costs_raw(&h);
        let entering = state
            .nonbasic()
            .into_iter()
            .find(|&j| z[j] <= tol && zh[j] < -1e-9)
            .ok_or_else(|| {
                Error::Internal("walk ended at lambda = 1 away from the target clustering".into())
            })?;
        let info = state.pivot(entering)?;
        if !state.step_is_degenerate(&info) {
            visited.push(state.clustering()?);
        }
    }
    Err(Error::Internal("terminal tie walk did not reach the target".into()))
}

/// Walks from `cs_rad` (radial for `s`) to `ct_rad` (radial for `t`).
pub fn rad_to_rad(
    ds: &DataSet,
    cs_rad: &Clustering,
    ct_rad: &Clustering,
    s: &SiteVector,
    t: &SiteVector,
    bounds: &SizeBounds,
    cfg: &SolverConfig,
) -> Result<RadialWalk> {
    rad_to_rad_with(ds, cs_rad, ct_rad, s, t, bounds, cfg, &mut DiagramSolver::new(cfg))
}

#[allow(clippy::too_many_arguments)]
pub fn rad_to_rad_with(
    ds: &DataSet,
    cs_rad: &Clustering,
    ct_rad: &Clustering,
    s: &SiteVector,
    t: &SiteVector,
    bounds: &SizeBounds,
    cfg: &SolverConfig,
    diagrams: &mut DiagramSolver,
) -> Result<RadialWalk> {
    cs_rad.check_against(ds)?;
    ct_rad.check_against(ds)?;
    s.check_compatible(ds, cs_rad.k())?;
    t.check_compatible(ds, ct_rad.k())?;
    let c_s = objective_from_sites(ds, s)?;
    let c_t = objective_from_sites(ds, t)?;
    let lp = TransportLp::new(ds.len(), bounds)?;
    radial_basis(&lp, ct_rad, &c_t, cfg, "target clustering")?;
    let mut state = radial_basis(&lp, cs_rad, &c_s, cfg, "source clustering")?;

    let mut events: Vec<(f64, Clustering)> = Vec::new();
    let mut lambda = 0.0;
    if cs_rad != ct_rad {
        loop {
            match advance_to_breakpoint(&mut state, &c_s, &c_t, lambda)? {
                Breakpoint::Done => break,
                Breakpoint::Moved { lambda: l, clustering } => {
                    lambda = l;
                    let done = clustering == *ct_rad;
                    events.push((l, clustering));
                    if done {
                        break;
                    }
                }
            }
        }
        let reached = events.last().is_some_and(|e| e.1 == *ct_rad);
        if !reached {
            for cl in walk_terminal_face(&mut state, &c_t, ct_rad)? {
                events.push((1.0, cl));
            }
        }
    }

    let mut steps = Vec::with_capacity(events.len());
    let mut prev = cs_rad.clone();
    for (r, (lambda, cl)) in events.iter().enumerate() {
        let exchange = single_exchange(&prev, cl).ok_or_else(|| {
            Error::Internal(format!("step {} is not a single exchange", r + 1))
        })?;
        let here = SiteVector::interpolate(s, t, *lambda);
        let shared = diagrams.shared(ds, &prev, cl, &here)?;
        let inducing = match events.get(r + 1) {
            Some((next_lambda, _)) => {
                let mid = SiteVector::midpoint(&here, &SiteVector::interpolate(s, t, *next_lambda));
                Some(diagrams.max_margin(ds, cl, &mid)?)
            }
            None => None,
        };
        steps.push(TransitionStep {
            lambda: *lambda,
            clustering: cl.clone(),
            exchange,
            shared,
            inducing,
        });
        prev = cl.clone();
    }
    Ok(RadialWalk {
        start: cs_rad.clone(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{center_dataset, clustering_vector};
    use crate::power_diagram::induces;
    use crate::transport::{optimality_gap, optimize};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
            .collect()
    }

    fn radial(ds: &DataSet, s: &SiteVector, b: &SizeBounds) -> Clustering {
        let c = objective_from_sites(ds, s).unwrap();
        optimize(&c, b, None, &cfg()).unwrap().0.clustering
    }

    #[test]
    fn same_sites_give_no_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = center_dataset(&DataSet::new(random(&mut rng, 6)).unwrap()).unwrap();
        let s = SiteVector::new(random(&mut rng, 2)).unwrap();
        let b = SizeBounds::new(vec![1, 1], vec![5, 5], 6).unwrap();
        let cs = radial(&ds, &s, &b);
        let walk = rad_to_rad(&ds, &cs, &cs, &s, &s, &b, &cfg()).unwrap();
        assert!(walk.steps.is_empty());
        // a nearby target site vector with the same radial clustering
        let t = SiteVector::new(
            s.to_vecs().iter().map(|p| p.iter().map(|v| v * 1.001).collect()).collect(),
        )
        .unwrap();
        if radial(&ds, &t, &b) == cs {
            let walk = rad_to_rad(&ds, &cs, &cs, &s, &t, &b, &cfg()).unwrap();
            assert!(walk.steps.is_empty());
        }
    }

    #[test]
    fn single_crossing_matches_analytic_lambda() {
        // only the middle item changes sides
        let ds = DataSet::new(vec![vec![1.0, 0.0], vec![0.6, 0.8], vec![0.0, 1.0]]).unwrap();
        let s = SiteVector::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let t = SiteVector::new(vec![vec![1.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let b = SizeBounds::new(vec![1, 1], vec![2, 2], 3).unwrap();
        let cs = radial(&ds, &s, &b);
        let ct = radial(&ds, &t, &b);
        assert_ne!(cs, ct);
        let walk = rad_to_rad(&ds, &cs, &ct, &s, &t, &b, &cfg()).unwrap();
        assert_eq!(walk.steps.len(), 1);
        // crossing: c(s^l)^T (y - y') = 0 linear in l
        let c_s = objective_from_sites(&ds, &s).unwrap();
        let c_t = objective_from_sites(&ds, &t).unwrap();
        let a0 = c_s.evaluate(&cs) - c_s.evaluate(&ct);
        let a1 = c_t.evaluate(&cs) - c_t.evaluate(&ct);
        let analytic = a0 / (a0 - a1);
        assert!((walk.steps[0].lambda - analytic).abs() < 1e-12);
    }

    #[test]
    fn degenerate_vertex_needs_basis_changes() {
        // collinear points and fixed sizes: every item ties at lambda = 1/2
        let ds = DataSet::new((0..6).map(|j| vec![j as f64 - 2.5, 0.0]).collect()).unwrap();
        let s = SiteVector::new(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let t = SiteVector::new(vec![vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let b = SizeBounds::new(vec![3, 3], vec![3, 3], 6).unwrap();
        let cs = radial(&ds, &s, &b);
        let ct = radial(&ds, &t, &b);
        let lp = TransportLp::new(6, &b).unwrap();
        let c_s = objective_from_sites(&ds, &s).unwrap();
        let c_t = objective_from_sites(&ds, &t).unwrap();
        let mut state = radial_basis(&lp, &cs, &c_s, &cfg(), "source").unwrap();
        let pivots_before = state.pivots();
        match advance_to_breakpoint(&mut state, &c_s, &c_t, 0.0).unwrap() {
            Breakpoint::Moved { clustering, .. } => {
                assert_ne!(clustering, cs);
                assert!(state.pivots() - pivots_before >= 2);
            }
            Breakpoint::Done => panic!("expected a move"),
        }
        let walk = rad_to_rad(&ds, &cs, &ct, &s, &t, &b, &cfg()).unwrap();
        assert_eq!(walk.last(), &ct);
    }

    #[test]
    fn random_walks_satisfy_the_radial_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut total = 0;
        for _ in 0..30 {
            let ds = center_dataset(&DataSet::new(random(&mut rng, 7)).unwrap()).unwrap();
            let s = SiteVector::new(random(&mut rng, 3)).unwrap();
            let t = SiteVector::new(random(&mut rng, 3)).unwrap();
            let b = SizeBounds::new(vec![1, 1, 1], vec![4, 4, 4], 7).unwrap();
            let cs = radial(&ds, &s, &b);
            let ct = radial(&ds, &t, &b);
            let walk = rad_to_rad(&ds, &cs, &ct, &s, &t, &b, &cfg()).unwrap();
            assert_eq!(walk.steps.is_empty(), cs == ct);
            assert_eq!(walk.last(), &ct);
            let mut prev = cs.clone();
            let mut prev_lambda = 0.0;
            for (r, st) in walk.steps.iter().enumerate() {
                total += 1;
                assert!(st.lambda > prev_lambda && st.lambda <= 1.0);
                let here = SiteVector::interpolate(&s, &t, st.lambda);
                let c = objective_from_sites(&ds, &here).unwrap();
                assert!(optimality_gap(&c, &st.clustering, &b, &cfg()).unwrap() <= 1e-9);
                assert!(optimality_gap(&c, &prev, &b, &cfg()).unwrap() <= 1e-9);
                assert!(induces(&ds, &st.shared, &prev, false));
                assert!(induces(&ds, &st.shared, &st.clustering, false));
                let w0 = clustering_vector(&ds, &prev).unwrap();
                let w1 = clustering_vector(&ds, &st.clustering).unwrap();
                assert!(w0.max_abs_diff(&w1) > 1e-9);
                if let Some(p) = &st.inducing {
                    assert!(induces(&ds, p, &st.clustering, false));
                    assert!(r + 1 < walk.steps.len());
                }
                prev = st.clustering.clone();
                prev_lambda = st.lambda;
            }
        }
        assert!(total > 10);
    }
}
