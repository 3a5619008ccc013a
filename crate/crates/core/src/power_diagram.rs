//! Power diagrams: margin-maximizing diagrams for one clustering and shared
//! diagrams inducing two clusterings at once.
//!
//! Cell `i` is `{x : (s_l - s_i)^T x <= gamma_l - gamma_i for all l != i}`
//! with `gamma_1 = 0`. Both LPs are posed over the precomputed maxima
//! `M_il = max_{x in C_i} (s_l - s_i)^T x` as
//! `gamma_i - gamma_l + |s_l - s_i| eps <= -M_il`, maximizing `eps`. For a
//! single clustering `eps` is the margin; for a pair it is zero whenever the
//! pair shares a diagram and the optimal `gamma` is a feasible point of the
//! shared system.

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{dot, Clustering, DataSet, SiteVector};
use crate::simplex::{DualStart, InequalityLp, LpSolution};

/// Margin attached to a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Margin {
    /// Smallest Euclidean distance of an item to its cell boundary.
    Finite(f64),
    /// No item constrains the diagram (at most one nonempty cluster).
    Unbounded,
    /// Shared diagrams carry no margin.
    None,
}

impl Margin {
    pub fn value(&self) -> Option<f64> {
        match self {
            Margin::Finite(v) => Some(*v),
            Margin::Unbounded => Some(f64::INFINITY),
            Margin::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDiagram {
    pub sites: SiteVector,
    pub gammas: Vec<f64>,
    pub weights: Vec<f64>,
    pub margin: Margin,
}

impl PowerDiagram {
    /// Builds the diagram from offsets, shifting so that `gamma_1 = 0`.
    pub fn from_gammas(sites: SiteVector, gammas: Vec<f64>, margin: Margin) -> Self {
        let g0 = gammas[0];
        let gammas: Vec<f64> = gammas.iter().map(|g| g - g0).collect();
        let n0 = dot(sites.site(0), sites.site(0));
        let weights = (0..sites.k())
            .map(|i| dot(sites.site(i), sites.site(i)) - 2.0 * gammas[i] - n0)
            .collect();
        PowerDiagram {
            sites,
            gammas,
            weights,
            margin,
        }
    }

    /// Builds the diagram from weights, shifting so that `w_1 = 0`.
    pub fn from_weights(sites: SiteVector, weights: Vec<f64>) -> Self {
        let gammas = (0..sites.k())
            .map(|i| 0.5 * (dot(sites.site(i), sites.site(i)) - weights[i]))
            .collect();
        PowerDiagram::from_gammas(sites, gammas, Margin::None)
    }

    pub fn k(&self) -> usize {
        self.gammas.len()
    }

    /// `(gamma_l - gamma_i) - (s_l - s_i)^T x`; nonnegative inside cell `i`
    /// with respect to neighbor `l`.
    pub fn slack(&self, x: &[f64], i: usize, l: usize) -> f64 {
        let (si, sl) = (self.sites.site(i), self.sites.site(l));
        let proj: f64 = x.iter().zip(si.iter().zip(sl)).map(|(v, (a, b))| (b - a) * v).sum();
        (self.gammas[l] - self.gammas[i]) - proj
    }

    pub fn site_distance(&self, i: usize, l: usize) -> f64 {
        let (si, sl) = (self.sites.site(i), self.sites.site(l));
        si.iter().zip(sl).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Scale-aware tolerance for the hyperplane between cells `i` and `l`.
    pub fn boundary_tolerance(&self, i: usize, l: usize) -> f64 {
        1e-6 * (1.0 + self.site_distance(i, l))
    }

    pub fn in_cell(&self, x: &[f64], i: usize, strict: bool) -> bool {
        (0..self.k()).filter(|&l| l != i).all(|l| {
            let s = self.slack(x, i, l);
            let tol = self.boundary_tolerance(i, l);
            if strict {
                s > tol
            } else {
                s >= -tol
            }
        })
    }

    /// Cells containing `x` under the hyperplane form.
    pub fn cells_containing(&self, x: &[f64]) -> Vec<usize> {
        (0..self.k()).filter(|&i| self.in_cell(x, i, false)).collect()
    }

    /// Cells containing `x` under the weighted-distance form.
    pub fn cells_by_weights(&self, x: &[f64]) -> Vec<usize> {
        let power: Vec<f64> = (0..self.k())
            .map(|i| {
                let s = self.sites.site(i);
                x.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() - self.weights[i]
            })
            .collect();
        let best = power.iter().copied().fold(f64::INFINITY, f64::min);
        (0..self.k())
            .filter(|&i| {
                let l = (0..self.k())
                    .filter(|&l| l != i)
                    .map(|l| self.boundary_tolerance(i, l))
                    .fold(1e-6, f64::max);
                power[i] <= best + 2.0 * l
            })
            .collect()
    }

    /// Whether `x` lies on the hyperplane between cells `i` and `l`.
    pub fn on_boundary(&self, x: &[f64], i: usize, l: usize) -> bool {
        self.slack(x, i, l).abs() <= self.boundary_tolerance(i, l)
    }
}

/// Whether every item of cluster `i` lies in cell `i`.
pub fn induces(ds: &DataSet, pd: &PowerDiagram, c: &Clustering, strict: bool) -> bool {
    c.len() == ds.len()
        && c.k() == pd.k()
        && pd.sites.dim() == ds.dim()
        && (0..ds.len()).all(|j| pd.in_cell(ds.point(j), c.cluster_of(j), strict))
}

/// Items moved between `prev` and `next` that are not on the boundary of
/// their two cells in `pd`.
pub fn moved_items_off_boundary(
    ds: &DataSet,
    pd: &PowerDiagram,
    prev: &Clustering,
    next: &Clustering,
) -> Vec<usize> {
    (0..ds.len())
        .filter(|&j| {
            let (a, b) = (prev.cluster_of(j), next.cluster_of(j));
            a != b && !pd.on_boundary(ds.point(j), a, b)
        })
        .collect()
}

/// Starting basis for the next diagram LP of the same row pattern.
pub fn warm_start_duals(prev: &LpSolution) -> DualStart {
    DualStart {
        basis: prev.basis.clone(),
    }
}

/// Ordered cluster pairs that receive a constraint row.
type RowPattern = Vec<(usize, usize)>;

struct MarginLp {
    pattern: RowPattern,
    lp: InequalityLp,
    cap: f64,
}

fn check_sites(ds: &DataSet, s: &SiteVector, k: usize) -> Result<()> {
    s.check_compatible(ds, k)?;
    if let Some((first, second)) = s.coincident_pair() {
        return Err(Error::CoincidentSites { first, second });
    }
    Ok(())
}

fn build_lp(ds: &DataSet, clusterings: &[&Clustering], s: &SiteVector) -> MarginLp {
    let k = s.k();
    let gamma = |i: usize| 2 * (i - 1);
    let eps = 2 * (k - 1);
    let num_vars = eps + 2;
    let mut c = vec![0.0; num_vars];
    c[eps] = 1.0;
    c[eps + 1] = -1.0;
    let mut lp = InequalityLp::new(num_vars, c);

    // max over members of (s_l - s_i)^T x, across all given clusterings
    let mut maxima = vec![f64::NEG_INFINITY; k * k];
    for cl in clusterings {
        for j in 0..ds.len() {
            let i = cl.cluster_of(j);
            let x = ds.point(j);
            for l in (0..k).filter(|&l| l != i) {
                let v: f64 = x
                    .iter()
                    .zip(s.site(i).iter().zip(s.site(l)))
                    .map(|(xv, (a, b))| (b - a) * xv)
                    .sum();
                maxima[i * k + l] = maxima[i * k + l].max(v);
            }
        }
    }
    let mut pattern = Vec::new();
    for i in 0..k {
        for l in (0..k).filter(|&l| l != i) {
            let m = maxima[i * k + l];
            if m == f64::NEG_INFINITY {
                continue;
            }
            let dist = s
                .site(i)
                .iter()
                .zip(s.site(l))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let mut row = Vec::with_capacity(6);
            if i > 0 {
                row.push((gamma(i), 1.0));
                row.push((gamma(i) + 1, -1.0));
            }
            if l > 0 {
                row.push((gamma(l), -1.0));
                row.push((gamma(l) + 1, 1.0));
            }
            row.push((eps, dist));
            row.push((eps + 1, -dist));
            lp.add_row(row, -m);
            pattern.push((i, l));
        }
    }
    let x0 = ds.point(0);
    let spread = ds
        .points()
        .map(|p| p.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let cap = 1.0 + 2.0 * spread;
    lp.add_row(vec![(eps, 1.0), (eps + 1, -1.0)], cap);
    MarginLp { pattern, lp, cap }
}

fn gammas_from(sol: &LpSolution, k: usize) -> Vec<f64> {
    let mut g = vec![0.0; k];
    for (i, gi) in g.iter_mut().enumerate().skip(1) {
        *gi = sol.x[2 * (i - 1)] - sol.x[2 * (i - 1) + 1];
    }
    g
}

fn margin_tolerance(ds: &DataSet) -> f64 {
    1e-7 * (1.0 + ds.radius())
}

/// Counts of warm and cold diagram solves and their pivots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub warm_solves: usize,
    pub cold_solves: usize,
    pub pivots: usize,
}

/// Diagram LP solver that reuses the previous basis when the row pattern
/// repeats.
#[derive(Debug, Clone)]
pub struct DiagramSolver {
    cfg: SolverConfig,
    warm: bool,
    last: Option<(RowPattern, usize, LpSolution)>,
    pub stats: SolveStats,
}

impl DiagramSolver {
    pub fn new(cfg: &SolverConfig) -> Self {
        DiagramSolver {
            cfg: *cfg,
            warm: true,
            last: None,
            stats: SolveStats::default(),
        }
    }

    /// A solver that always starts from scratch.
    pub fn cold(cfg: &SolverConfig) -> Self {
        DiagramSolver {
            warm: false,
            ..DiagramSolver::new(cfg)
        }
    }

    fn solve(&mut self, margin: &MarginLp, k: usize) -> Result<LpSolution> {
        let start = match &self.last {
            Some((pattern, rows, sol))
                if self.warm && *pattern == margin.pattern && *rows == margin.lp.rows.len() =>
            {
                Some(warm_start_duals(sol))
            }
            _ => None,
        };
        let sol = match start {
            Some(st) => margin.lp.solve_warm(&self.cfg, &st)?,
            None => margin.lp.solve(&self.cfg)?,
        };
        if sol.warm_started {
            self.stats.warm_solves += 1;
        } else {
            self.stats.cold_solves += 1;
        }
        self.stats.pivots += sol.pivots;
        debug_assert_eq!(gammas_from(&sol, k).len(), k);
        self.last = Some((margin.pattern.clone(), margin.lp.rows.len(), sol.clone()));
        Ok(sol)
    }

    /// Separating diagram of `c` for sites `s` with maximal margin.
    pub fn max_margin(&mut self, ds: &DataSet, c: &Clustering, s: &SiteVector) -> Result<PowerDiagram> {
        c.check_against(ds)?;
        check_sites(ds, s, c.k())?;
        let k = c.k();
        if k == 1 {
            return Ok(PowerDiagram::from_gammas(s.clone(), vec![0.0], Margin::Unbounded));
        }
        let margin_lp = build_lp(ds, &[c], s);
        let sol = self.solve(&margin_lp, k)?;
        let eps = sol.objective;
        if eps < -margin_tolerance(ds) {
            return Err(Error::Infeasible(format!(
                "no power diagram with these sites induces the clustering (margin {eps:e})"
            )));
        }
        let margin = if eps >= margin_lp.cap * (1.0 - 1e-9) {
            Margin::Unbounded
        } else {
            Margin::Finite(eps.max(0.0))
        };
        Ok(PowerDiagram::from_gammas(s.clone(), gammas_from(&sol, k), margin))
    }

    /// Diagram for sites `s` inducing both `prev` and `next`.
    pub fn shared(
        &mut self,
        ds: &DataSet,
        prev: &Clustering,
        next: &Clustering,
        s: &SiteVector,
    ) -> Result<PowerDiagram> {
        prev.check_against(ds)?;
        next.check_against(ds)?;
        if prev.k() != next.k() {
            return Err(Error::Incompatible("clusterings differ in k".into()));
        }
        check_sites(ds, s, prev.k())?;
        let k = prev.k();
        if k == 1 {
            return Ok(PowerDiagram::from_gammas(s.clone(), vec![0.0], Margin::None));
        }
        let margin_lp = build_lp(ds, &[prev, next], s);
        let sol = self.solve(&margin_lp, k)?;
        if sol.objective < -margin_tolerance(ds) {
            return Err(Error::Infeasible(format!(
                "no shared power diagram for these sites (violation {:e})",
                -sol.objective
            )));
        }
        Ok(PowerDiagram::from_gammas(s.clone(), gammas_from(&sol, k), Margin::None))
    }
}

pub fn max_margin_diagram(
    ds: &DataSet,
    c: &Clustering,
    s: &SiteVector,
    cfg: &SolverConfig,
) -> Result<PowerDiagram> {
    DiagramSolver::cold(cfg).max_margin(ds, c, s)
}

pub fn shared_diagram(
    ds: &DataSet,
    prev: &Clustering,
    next: &Clustering,
    s: &SiteVector,
    cfg: &SolverConfig,
) -> Result<PowerDiagram> {
    DiagramSolver::cold(cfg).shared(ds, prev, next, s)
}

/// Euclidean distance from `x` to the hyperplane between cells `i` and `l`.
pub fn hyperplane_distance(pd: &PowerDiagram, x: &[f64], i: usize, l: usize) -> f64 {
    pd.slack(x, i, l).abs() / pd.site_distance(i, l)
}
