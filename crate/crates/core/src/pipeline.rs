//! Full transition: fixed-site leg at `s`, parametric leg from `s` to `t`,
//! fixed-site leg at `t` reversed.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::cdg::{single_exchange, Exchange};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::fixed_site::{init_to_rad_with, FixedSiteResult};
use crate::model::{Clustering, DataSet, SiteVector, SizeBounds};
use crate::parametric::rad_to_rad_with;
use crate::power_diagram::{DiagramSolver, PowerDiagram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagramRole {
    /// Induces one clustering.
    Inducing,
    /// Induces two consecutive clusterings.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Source,
    Parametric,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramEntry {
    pub role: DiagramRole,
    /// Indices into the clustering list: one for inducing, two for shared.
    pub refs: Vec<usize>,
    pub leg: Leg,
    /// The diagram sites are `(1 - lambda) s + lambda t`.
    pub lambda: f64,
    pub diagram: PowerDiagram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSequence {
    pub source: Clustering,
    pub target: Clustering,
    pub s: SiteVector,
    pub t: SiteVector,
    pub bounds: SizeBounds,
    /// Steps in the source leg.
    pub p: usize,
    /// Steps in the target leg.
    pub q: usize,
    /// Breakpoints of the parametric leg, one per step.
    pub lambdas: Vec<f64>,
    pub clusterings: Vec<Clustering>,
    /// `exchanges[i]` turns `clusterings[i]` into `clusterings[i + 1]`.
    pub exchanges: Vec<Exchange>,
    pub diagrams: Vec<DiagramEntry>,
}

impl TransitionSequence {
    pub fn len(&self) -> usize {
        self.clusterings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusterings.is_empty()
    }

    /// Steps in the parametric leg.
    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn leg_of(&self, index: usize) -> Leg {
        if index <= self.p {
            Leg::Source
        } else if index <= self.p + self.m() {
            Leg::Parametric
        } else {
            Leg::Target
        }
    }

    /// Sites at which clustering `index` is radial or a constrained LSA.
    pub fn sites_of(&self, index: usize) -> SiteVector {
        match self.leg_of(index) {
            Leg::Source => self.s.clone(),
            Leg::Target => self.t.clone(),
            Leg::Parametric => SiteVector::interpolate(&self.s, &self.t, self.lambdas[index - self.p - 1]),
        }
    }
}

fn inducing(refs: usize, leg: Leg, lambda: f64, diagram: &PowerDiagram) -> DiagramEntry {
    DiagramEntry {
        role: DiagramRole::Inducing,
        refs: vec![refs],
        leg,
        lambda,
        diagram: diagram.clone(),
    }
}

fn shared(first: usize, leg: Leg, lambda: f64, diagram: &PowerDiagram) -> DiagramEntry {
    DiagramEntry {
        role: DiagramRole::Shared,
        refs: vec![first, first + 1],
        leg,
        lambda,
        diagram: diagram.clone(),
    }
}

fn endpoint_error(which: &str, e: Error) -> Error {
    match e {
        Error::Precondition(m) => Error::Precondition(format!("{which} endpoint: {m}")),
        other => other,
    }
}

/// Transition from the constrained LSA `c_s` (sites `s`) to the constrained
/// LSA `c_t` (sites `t`).
pub fn full_transition(
    ds: &DataSet,
    c_s: &Clustering,
    c_t: &Clustering,
    s: &SiteVector,
    t: &SiteVector,
    cfg: &SolverConfig,
) -> Result<TransitionSequence> {
    cfg.validate()?;
    c_s.check_against(ds)?;
    c_t.check_against(ds)?;
    if c_s.k() != c_t.k() {
        return Err(Error::Incompatible(format!(
            "endpoints have {} and {} clusters",
            c_s.k(),
            c_t.k()
        )));
    }
    s.check_compatible(ds, c_s.k())?;
    t.check_compatible(ds, c_t.k())?;
    let bounds = SizeBounds::from_endpoints(&c_s.shape(), &c_t.shape())?;

    let (src, tgt) = thread::scope(|scope| {
        let b = &bounds;
        let h = scope.spawn(move || {
            init_to_rad_with(ds, c_t, t, b, cfg, &mut DiagramSolver::new(cfg))
        });
        let src = init_to_rad_with(ds, c_s, s, b, cfg, &mut DiagramSolver::new(cfg));
        let tgt = h
            .join()
            .unwrap_or_else(|_| Err(Error::Internal("target leg panicked".into())));
        (src, tgt)
    });
    let src = src.map_err(|e| endpoint_error("source", e))?;
    let tgt = tgt.map_err(|e| endpoint_error("target", e))?;
    let walk = rad_to_rad_with(ds, src.last(), tgt.last(), s, t, &bounds, cfg, &mut DiagramSolver::new(cfg))?;

    assemble(c_s, c_t, s, t, bounds, &src, &tgt, walk)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    c_s: &Clustering,
    c_t: &Clustering,
    s: &SiteVector,
    t: &SiteVector,
    bounds: SizeBounds,
    src: &FixedSiteResult,
    tgt: &FixedSiteResult,
    walk: crate::parametric::RadialWalk,
) -> Result<TransitionSequence> {
    let (p, q, m) = (src.steps(), tgt.steps(), walk.steps.len());
    let mut clusterings: Vec<Clustering> = src.clusterings.clone();
    clusterings.extend(walk.steps.iter().map(|st| st.clustering.clone()));
    clusterings.extend(tgt.clusterings[..q].iter().rev().cloned());

    let mut exchanges = Vec::with_capacity(clusterings.len().saturating_sub(1));
    for (i, w) in clusterings.windows(2).enumerate() {
        exchanges.push(single_exchange(&w[0], &w[1]).ok_or_else(|| {
            Error::Internal(format!("steps {i} and {} differ by more than one exchange", i + 1))
        })?);
    }

    let mut diagrams = Vec::new();
    diagrams.push(inducing(0, Leg::Source, 0.0, &src.inducing[0]));
    for i in 0..p {
        diagrams.push(shared(i, Leg::Source, 0.0, &src.shared[i]));
        diagrams.push(inducing(i + 1, Leg::Source, 0.0, &src.inducing[i + 1]));
    }
    for (r, st) in walk.steps.iter().enumerate() {
        diagrams.push(shared(p + r, Leg::Parametric, st.lambda, &st.shared));
        if let Some(pd) = &st.inducing {
            let mid = 0.5 * (st.lambda + walk.steps[r + 1].lambda);
            diagrams.push(inducing(p + r + 1, Leg::Parametric, mid, pd));
        }
    }
    let last = clusterings.len() - 1;
    // target leg index i sits at position last - i
    let skip_top = m == 0 && s == t;
    if !skip_top {
        diagrams.push(inducing(last - q, Leg::Target, 1.0, &tgt.inducing[q]));
    }
    for i in (0..q).rev() {
        diagrams.push(shared(last - i - 1, Leg::Target, 1.0, &tgt.shared[i]));
        diagrams.push(inducing(last - i, Leg::Target, 1.0, &tgt.inducing[i]));
    }

    Ok(TransitionSequence {
        source: c_s.clone(),
        target: c_t.clone(),
        s: s.clone(),
        t: t.clone(),
        bounds,
        p,
        q,
        lambdas: walk.lambdas(),
        clusterings,
        exchanges,
        diagrams,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdg::ExchangeKind;
    use crate::model::{center_dataset, objective_from_sites};
    use crate::power_diagram::induces;
    use crate::transport::optimize;
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

    fn lsa(ds: &DataSet, s: &SiteVector, shape: &[usize]) -> Clustering {
        let c = objective_from_sites(ds, s).unwrap();
        let b = SizeBounds::single_shape(&crate::model::Shape(shape.to_vec()));
        optimize(&c, &b, None, &cfg()).unwrap().0.clustering
    }

    #[test]
    fn identical_endpoints_give_one_clustering() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = center_dataset(&DataSet::new(random(&mut rng, 9)).unwrap()).unwrap();
        let s = SiteVector::new(random(&mut rng, 3)).unwrap();
        let c = lsa(&ds, &s, &[3, 3, 3]);
        let seq = full_transition(&ds, &c, &c, &s, &s, &cfg()).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.diagrams.len(), 1);
        assert_eq!(seq.diagrams[0].role, DiagramRole::Inducing);
        assert!(seq.exchanges.is_empty());
    }

    #[test]
    fn equal_shapes_skip_fixed_legs() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let ds = center_dataset(&DataSet::new(random(&mut rng, 10)).unwrap()).unwrap();
            let s = SiteVector::new(random(&mut rng, 3)).unwrap();
            let t = SiteVector::new(random(&mut rng, 3)).unwrap();
            let cs = lsa(&ds, &s, &[4, 3, 3]);
            let ct = lsa(&ds, &t, &[4, 3, 3]);
            let seq = full_transition(&ds, &cs, &ct, &s, &t, &cfg()).unwrap();
            assert_eq!((seq.p, seq.q), (0, 0));
            assert_eq!(seq.clusterings.first(), Some(&cs));
            assert_eq!(seq.clusterings.last(), Some(&ct));
            assert!(seq.exchanges.iter().all(|e| e.kind == ExchangeKind::Cycle));
        }
    }

    #[test]
    fn diagrams_alternate_and_induce_their_refs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let ds = center_dataset(&DataSet::new(random(&mut rng, 12)).unwrap()).unwrap();
            let s = SiteVector::new(random(&mut rng, 3)).unwrap();
            let t = SiteVector::new(random(&mut rng, 3)).unwrap();
            let cs = lsa(&ds, &s, &[6, 4, 2]);
            let ct = lsa(&ds, &t, &[2, 4, 6]);
            let seq = full_transition(&ds, &cs, &ct, &s, &t, &cfg()).unwrap();
            assert_eq!(seq.len(), seq.p + seq.m() + seq.q + 1);
            assert_eq!(seq.exchanges.len(), seq.len() - 1);
            if seq.m() > 0 {
                assert_eq!(seq.diagrams.len(), 2 * seq.len() - 1);
            }
            for (i, d) in seq.diagrams.iter().enumerate() {
                let expected = SiteVector::interpolate(&s, &t, d.lambda);
                for (a, b) in d.diagram.sites.to_vecs().iter().flatten().zip(expected.to_vecs().iter().flatten()) {
                    assert!((a - b).abs() < 1e-12);
                }
                for &r in &d.refs {
                    assert!(induces(&ds, &d.diagram, &seq.clusterings[r], false), "diagram {i}");
                }
            }
        }
    }

    #[test]
    fn non_lsa_endpoint_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ds = center_dataset(&DataSet::new(random(&mut rng, 8)).unwrap()).unwrap();
        let s = SiteVector::new(random(&mut rng, 2)).unwrap();
        let good = lsa(&ds, &s, &[4, 4]);
        let mut bad = good.assignment().to_vec();
        let a = bad.iter().position(|&c| c == 0).unwrap();
        let b = bad.iter().position(|&c| c == 1).unwrap();
        bad.swap(a, b);
        let bad = Clustering::new(bad, 2).unwrap();
        match full_transition(&ds, &good, &bad, &s, &s, &cfg()) {
            Err(Error::Precondition(m)) => assert!(m.starts_with("target")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
