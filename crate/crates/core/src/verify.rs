//! Independent re-check of a transition sequence.

use serde::Serialize;

use crate::cdg::{apply_exchange, is_single_exchange, ExchangeKind};
use crate::config::SolverConfig;
use crate::model::{clustering_vector, objective_from_sites, Clustering, DataSet, SiteVector, SizeBounds};
use crate::pipeline::{DiagramRole, Leg, TransitionSequence};
use crate::power_diagram::{induces, moved_items_off_boundary, PowerDiagram};
use crate::transport::{gap_tolerance, optimality_gap};

/// Breakpoints may repeat up to this much.
pub const LAMBDA_TOL: f64 = 1e-10;
/// Consecutive clustering vectors in the parametric leg differ by more.
pub const VECTOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub property: String,
    pub description: String,
    pub passed: bool,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn check(&self, property: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.property == property)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "ok  " } else { "FAIL" };
            out.push_str(&format!("{status} {:<28} {}\n", c.property, c.description));
            for f in c.failures.iter().take(5) {
                out.push_str(&format!("       at {}: {}\n", f.index, f.message));
            }
            if c.failures.len() > 5 {
                out.push_str(&format!("       ... {} more\n", c.failures.len() - 5));
            }
        }
        out
    }
}

struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn add(&mut self, property: &str, description: &str, failures: Vec<Failure>) {
        self.checks.push(Check {
            property: property.into(),
            description: description.into(),
            passed: failures.is_empty(),
            failures,
        });
    }

    fn finish(self) -> Report {
        let passed = self.checks.iter().all(|c| c.passed);
        Report {
            checks: self.checks,
            passed,
        }
    }
}

fn fail(index: usize, message: impl Into<String>) -> Failure {
    Failure {
        index,
        message: message.into(),
    }
}

/// `(role, refs, leg)` in the order the diagrams must appear.
fn expected_layout(seq: &TransitionSequence) -> Vec<(DiagramRole, Vec<usize>, Leg)> {
    let (p, q, m) = (seq.p, seq.q, seq.m());
    let last = p + m + q;
    let mut out = vec![(DiagramRole::Inducing, vec![0], Leg::Source)];
    for i in 0..p {
        out.push((DiagramRole::Shared, vec![i, i + 1], Leg::Source));
        out.push((DiagramRole::Inducing, vec![i + 1], Leg::Source));
    }
    for r in 0..m {
        out.push((DiagramRole::Shared, vec![p + r, p + r + 1], Leg::Parametric));
        if r + 1 < m {
            out.push((DiagramRole::Inducing, vec![p + r + 1], Leg::Parametric));
        }
    }
    if !(m == 0 && seq.s == seq.t) {
        out.push((DiagramRole::Inducing, vec![last - q], Leg::Target));
    }
    for i in (0..q).rev() {
        out.push((DiagramRole::Shared, vec![last - i - 1, last - i], Leg::Target));
        out.push((DiagramRole::Inducing, vec![last - i], Leg::Target));
    }
    out
}

fn expected_lambda(seq: &TransitionSequence, leg: Leg, refs: &[usize], role: DiagramRole) -> f64 {
    match leg {
        Leg::Source => 0.0,
        Leg::Target => 1.0,
        Leg::Parametric => {
            let r = refs[refs.len() - 1] - seq.p - 1;
            match role {
                DiagramRole::Shared => seq.lambdas[r],
                DiagramRole::Inducing => 0.5 * (seq.lambdas[r] + seq.lambdas[r + 1]),
            }
        }
    }
}

fn structure_failures(ds: &DataSet, seq: &TransitionSequence) -> Vec<Failure> {
    let mut f = Vec::new();
    let (n, k) = (ds.len(), seq.source.k());
    if seq.is_empty() {
        f.push(fail(0, "sequence has no clusterings"));
        return f;
    }
    if seq.len() != seq.p + seq.m() + seq.q + 1 {
        f.push(fail(0, format!(
            "{} clusterings, expected p + m + q + 1 = {}",
            seq.len(),
            seq.p + seq.m() + seq.q + 1
        )));
    }
    if seq.exchanges.len() + 1 != seq.len() {
        f.push(fail(0, format!("{} exchanges for {} clusterings", seq.exchanges.len(), seq.len())));
    }
    for (name, c) in [("source", &seq.source), ("target", &seq.target)] {
        if c.len() != n || c.k() != k {
            f.push(fail(0, format!("{name} clustering does not match the data")));
        }
    }
    for (i, c) in seq.clusterings.iter().enumerate() {
        if c.len() != n || c.k() != k {
            f.push(fail(i, format!("clustering has {} items in {} clusters", c.len(), c.k())));
        }
    }
    for (name, s) in [("s", &seq.s), ("t", &seq.t)] {
        if s.check_compatible(ds, k).is_err() {
            f.push(fail(0, format!("site vector {name} does not match the data")));
        }
    }
    if seq.bounds.k() != k {
        f.push(fail(0, "bounds have the wrong number of clusters"));
    }
    if !f.is_empty() {
        return f;
    }
    let layout = expected_layout(seq);
    if layout.len() != seq.diagrams.len() {
        f.push(fail(0, format!("{} diagrams, expected {}", seq.diagrams.len(), layout.len())));
    }
    for (i, (d, (role, refs, leg))) in seq.diagrams.iter().zip(&layout).enumerate() {
        if d.role != *role || d.refs != *refs || d.leg != *leg {
            f.push(fail(i, format!("diagram is {:?} {:?} {:?}, expected {role:?} {refs:?} {leg:?}", d.role, d.refs, d.leg)));
        }
        if d.diagram.k() != k || d.diagram.sites.dim() != ds.dim() || d.diagram.weights.len() != k {
            f.push(fail(i, "diagram does not match the data"));
        }
    }
    f
}

fn sites_close(a: &SiteVector, b: &SiteVector) -> bool {
    a.to_vecs()
        .iter()
        .flatten()
        .zip(b.to_vecs().iter().flatten())
        .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())))
}

fn gap_failure(
    ds: &DataSet,
    cl: &Clustering,
    sites: &SiteVector,
    bounds: &SizeBounds,
    index: usize,
    what: &str,
    cfg: &SolverConfig,
) -> Option<Failure> {
    if !bounds.contains(&cl.shape()) {
        return Some(fail(index, format!("shape {:?} outside the bounds", cl.shape().0)));
    }
    let c = match objective_from_sites(ds, sites) {
        Ok(c) => c,
        Err(e) => return Some(fail(index, e.to_string())),
    };
    match optimality_gap(&c, cl, bounds, cfg) {
        Ok(gap) if gap <= gap_tolerance(c.evaluate(cl) + gap) => None,
        Ok(gap) => Some(fail(index, format!("not {what}: objective gap {gap:e}"))),
        Err(e) => Some(fail(index, format!("re-optimization failed: {e}"))),
    }
}

fn lsa_failure(ds: &DataSet, cl: &Clustering, sites: &SiteVector, index: usize, cfg: &SolverConfig) -> Option<Failure> {
    let b = SizeBounds::single_shape(&cl.shape());
    gap_failure(ds, cl, sites, &b, index, "a constrained LSA", cfg)
}

fn distinct_shapes(cls: &[Clustering], offset: usize, bounds: &SizeBounds, n: usize) -> Vec<Failure> {
    let mut f = Vec::new();
    for (a, ca) in cls.iter().enumerate() {
        if let Some(b) = cls[..a].iter().position(|cb| cb.shape() == ca.shape()) {
            f.push(fail(offset + a, format!("repeats the shape of clustering {}", offset + b)));
        }
    }
    if cls.len() as u128 > bounds.shape_count(n) {
        f.push(fail(offset, format!("{} clusterings but only {} shapes", cls.len(), bounds.shape_count(n))));
    }
    f
}

/// Re-checks every property of a transition sequence.
pub fn verify_sequence(ds: &DataSet, seq: &TransitionSequence, cfg: &SolverConfig) -> Report {
    let mut rep = Builder { checks: Vec::new() };
    let structure = structure_failures(ds, seq);
    let ok = structure.is_empty();
    rep.add("structure", "lengths, indices and diagram layout", structure);
    if !ok {
        return rep.finish();
    }

    let (p, m) = (seq.p, seq.m());
    let last = seq.len() - 1;
    let cls = &seq.clusterings;

    let mut f = Vec::new();
    if cls[0] != seq.source {
        f.push(fail(0, "first clustering is not the source"));
    }
    if cls[last] != seq.target {
        f.push(fail(last, "last clustering is not the target"));
    }
    rep.add("1", "sequence starts at the source and ends at the target", f);

    let f = (0..seq.len())
        .filter_map(|i| lsa_failure(ds, &cls[i], &seq.sites_of(i), i, cfg))
        .collect();
    rep.add("2", "every clustering is a constrained LSA", f);

    let mut f = Vec::new();
    match SizeBounds::from_endpoints(&seq.source.shape(), &seq.target.shape()) {
        Ok(b) if b == seq.bounds => {}
        _ => f.push(fail(0, "bounds are not the endpoint min/max sizes")),
    }
    for (i, c) in cls.iter().enumerate() {
        if !seq.bounds.contains(&c.shape()) {
            f.push(fail(i, format!("shape {:?} outside the bounds", c.shape().0)));
        }
    }
    rep.add("3", "cluster sizes lie between the endpoint sizes", f);

    let mut f = Vec::new();
    for (i, e) in seq.exchanges.iter().enumerate() {
        if let Err(err) = e.validate() {
            f.push(fail(i, format!("malformed exchange: {err}")));
            continue;
        }
        match apply_exchange(&cls[i], e) {
            Ok(next) if next == cls[i + 1] => {}
            Ok(_) => f.push(fail(i, "exchange does not produce the next clustering")),
            Err(err) => f.push(fail(i, format!("exchange does not apply: {err}"))),
        }
        if !is_single_exchange(&cls[i], &cls[i + 1]) {
            f.push(fail(i, "consecutive clusterings do not differ by one exchange"));
        }
    }
    rep.add("4", "consecutive clusterings differ by one exchange", f);

    let mut inducing_f = Vec::new();
    let mut shared_f = Vec::new();
    for (i, d) in seq.diagrams.iter().enumerate() {
        let out = match d.role {
            DiagramRole::Inducing => &mut inducing_f,
            DiagramRole::Shared => &mut shared_f,
        };
        let want = expected_lambda(seq, d.leg, &d.refs, d.role);
        if (d.lambda - want).abs() > LAMBDA_TOL {
            out.push(fail(i, format!("diagram parameter {} instead of {want}", d.lambda)));
        }
        if !sites_close(&d.diagram.sites, &SiteVector::interpolate(&seq.s, &seq.t, want)) {
            out.push(fail(i, "diagram sites are not the expected sites"));
        }
        for &r in &d.refs {
            if !induces(ds, &d.diagram, &cls[r], false) {
                out.push(fail(i, format!("diagram does not induce clustering {r}")));
            }
        }
        if d.role == DiagramRole::Shared {
            let moved = moved_items_off_boundary(ds, &d.diagram, &cls[d.refs[0]], &cls[d.refs[1]]);
            if !moved.is_empty() {
                out.push(fail(i, format!("moved items {moved:?} not on a cell boundary")));
            }
        }
    }
    rep.add("5", "inducing diagrams at the stated sites", inducing_f);
    rep.add("6", "shared diagrams at the stated sites", shared_f);

    let radial = |i: usize, sites: &SiteVector| {
        gap_failure(ds, &cls[i], sites, &seq.bounds, i, "radial", cfg)
    };
    let mut f: Vec<Failure> = Vec::new();
    f.extend(radial(p, &seq.s));
    for r in 0..m {
        let here = SiteVector::interpolate(&seq.s, &seq.t, seq.lambdas[r]);
        f.extend(radial(p + r, &here));
        f.extend(radial(p + r + 1, &here));
    }
    f.extend(radial(p + m, &seq.t));
    rep.add("7", "radial leg is optimal over the bounded-shape polytope", f);

    let f = (0..=p).filter_map(|i| lsa_failure(ds, &cls[i], &seq.s, i, cfg)).collect();
    rep.add("8", "source leg clusterings are constrained LSAs for s", f);
    let f = (p + m..=last).filter_map(|i| lsa_failure(ds, &cls[i], &seq.t, i, cfg)).collect();
    rep.add("9", "target leg clusterings are constrained LSAs for t", f);

    rep.add(
        "10",
        "source leg shapes are distinct",
        distinct_shapes(&cls[..=p], 0, &seq.bounds, ds.len()),
    );
    rep.add(
        "11",
        "target leg shapes are distinct",
        distinct_shapes(&cls[p + m..], p + m, &seq.bounds, ds.len()),
    );

    let mut f = Vec::new();
    let mut prev = 0.0;
    for (r, &l) in seq.lambdas.iter().enumerate() {
        if !(l > 0.0 && l <= 1.0) || l < prev - LAMBDA_TOL {
            f.push(fail(r, format!("breakpoint {l} after {prev}")));
        }
        prev = l;
    }
    rep.add("lambda_monotone", "breakpoints are nondecreasing in (0, 1]", f);

    let mut f = Vec::new();
    for i in p..p + m {
        match (clustering_vector(ds, &cls[i]), clustering_vector(ds, &cls[i + 1])) {
            (Ok(a), Ok(b)) if a.max_abs_diff(&b) > VECTOR_TOL => {}
            (Ok(a), Ok(b)) => f.push(fail(i, format!("clustering vectors differ by {:e}", a.max_abs_diff(&b)))),
            _ => f.push(fail(i, "clustering vector failed")),
        }
    }
    rep.add("clustering_vectors_distinct", "parametric steps change the clustering vector", f);

    let mut f = Vec::new();
    if let (Ok(cs), Ok(ct)) = (objective_from_sites(ds, &seq.s), objective_from_sites(ds, &seq.t)) {
        for i in 0..p {
            if cs.evaluate(&cls[i + 1]) <= cs.evaluate(&cls[i]) {
                f.push(fail(i, "objective for s does not increase"));
            }
        }
        for i in p + m..last {
            if ct.evaluate(&cls[i]) <= ct.evaluate(&cls[i + 1]) {
                f.push(fail(i, "objective for t does not increase towards the radial clustering"));
            }
        }
    }
    rep.add("fixed_objective_increasing", "fixed-site legs strictly improve towards the radial clustering", f);

    let f = (0..seq.exchanges.len())
        .filter(|&i| i < p || i >= p + m)
        .filter(|&i| seq.exchanges[i].kind != ExchangeKind::Path)
        .map(|i| fail(i, "fixed-site step is not a sequential exchange"))
        .collect();
    rep.add("fixed_leg_paths", "fixed-site steps are sequential exchanges", f);

    rep.finish()
}

/// The diagram a renderer should show for clustering `index`.
pub fn diagram_for(seq: &TransitionSequence, index: usize) -> Option<&PowerDiagram> {
    seq.diagrams
        .iter()
        .find(|d| d.role == DiagramRole::Inducing && d.refs == [index])
        .map(|d| &d.diagram)
}
