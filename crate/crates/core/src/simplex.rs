//! Revised simplex over sparse equality-form programs, maximizing.
//!
//! The basis inverse is kept dense and updated by row operations after each
//! pivot, with a fresh factorization every `refactor_interval` pivots.

use crate::config::{PivotRule, SolverConfig};
use crate::error::{Error, Result};

/// `A x = b, x >= 0` with `A` stored by sparse columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
}

impl StandardForm {
    pub fn new(b: Vec<f64>) -> Self {
        StandardForm {
            rows: b.len(),
            cols: Vec::new(),
            b,
        }
    }

    pub fn add_column(&mut self, entries: Vec<(usize, f64)>) -> usize {
        debug_assert!(entries.iter().all(|&(r, _)| r < self.rows));
        self.cols.push(entries);
        self.cols.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn set_b(&mut self, b: Vec<f64>) {
        assert_eq!(b.len(), self.rows);
        self.b = b;
    }

    /// `A x - b` for a full primal vector.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.b.iter().map(|v| -v).collect();
        for (j, col) in self.cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(row, v) in col {
                    r[row] += v * x[j];
                }
            }
        }
        r
    }
}

/// Absolute tolerances and pivoting policy for one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub tol_feas: f64,
    pub tol_opt: f64,
    pub tol_piv: f64,
    pub rule: PivotRule,
    pub refactor_interval: usize,
}

impl SimplexOptions {
    /// Scales the optimality tolerance by the objective magnitude.
    pub fn from_config(cfg: &SolverConfig, objective_scale: f64) -> Self {
        SimplexOptions {
            tol_feas: cfg.tol_feas,
            tol_opt: cfg.tol_opt * objective_scale.max(1.0),
            tol_piv: 1e-9,
            rule: cfg.pivot,
            refactor_interval: cfg.refactor_interval,
        }
    }
}

/// A basis with its explicit inverse and basic primal values.
#[derive(Debug, Clone)]
pub struct Basis {
    m: usize,
    basic: Vec<usize>,
    position: Vec<Option<usize>>,
    inv: Vec<f64>,
    x: Vec<f64>,
    since_refactor: usize,
}

impl Basis {
    /// Factorizes the columns `basic` of `sf`; `basic[r]` becomes the
    /// variable basic in position `r`.
    pub fn factor(sf: &StandardForm, basic: Vec<usize>) -> Result<Self> {
        let m = sf.rows();
        if basic.len() != m {
            return Err(Error::Internal(format!(
                "basis has {} columns for {m} rows",
                basic.len()
            )));
        }
        let mut position = vec![None; sf.num_cols()];
        for (r, &j) in basic.iter().enumerate() {
            if j >= sf.num_cols() || position[j].is_some() {
                return Err(Error::Internal(format!("invalid basic variable {j}")));
            }
            position[j] = Some(r);
        }
        let inv = invert(sf, &basic)?;
        let mut basis = Basis {
            m,
            basic,
            position,
            inv,
            x: vec![0.0; m],
            since_refactor: 0,
        };
        basis.recompute_values(sf);
        Ok(basis)
    }

    fn recompute_values(&mut self, sf: &StandardForm) {
        let m = self.m;
        for i in 0..m {
            self.x[i] = (0..m).map(|r| self.inv[i * m + r] * sf.b[r]).sum();
        }
    }

    pub fn refactor(&mut self, sf: &StandardForm) -> Result<()> {
        self.inv = invert(sf, &self.basic)?;
        self.recompute_values(sf);
        self.since_refactor = 0;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn basic(&self) -> &[usize] {
        &self.basic
    }

    pub fn position(&self, j: usize) -> Option<usize> {
        self.position[j]
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.position[j].is_some()
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    /// Full primal vector of length `num_cols`.
    pub fn primal(&self, num_cols: usize) -> Vec<f64> {
        let mut x = vec![0.0; num_cols];
        for (r, &j) in self.basic.iter().enumerate() {
            x[j] = self.x[r];
        }
        x
    }

    /// `B^-1 a_j`.
    pub fn ftran(&self, sf: &StandardForm, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut d = vec![0.0; m];
        for &(r, v) in sf.column(j) {
            for (i, di) in d.iter_mut().enumerate() {
                *di += self.inv[i * m + r] * v;
            }
        }
        d
    }

    /// Row `pos` of `B^-1`.
    pub fn inverse_row(&self, pos: usize) -> &[f64] {
        &self.inv[pos * self.m..(pos + 1) * self.m]
    }

    /// `c_B^T B^-1`.
    pub fn duals(&self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (i, &j) in self.basic.iter().enumerate() {
            let cb = c[j];
            if cb != 0.0 {
                for (r, p) in pi.iter_mut().enumerate() {
                    *p += cb * self.inv[i * m + r];
                }
            }
        }
        pi
    }

    /// Reduced costs `z_j = pi . a_j - c_j` for every column; zero for basic ones.
    pub fn reduced_costs(&self, sf: &StandardForm, c: &[f64]) -> Vec<f64> {
        let pi = self.duals(c);
        (0..sf.num_cols())
            .map(|j| {
                if self.is_basic(j) {
                    0.0
                } else {
                    sf.column(j).iter().map(|&(r, v)| pi[r] * v).sum::<f64>() - c[j]
                }
            })
            .collect()
    }

    /// Replaces the variable at `pos` by `entering`, given `d = B^-1 a_entering`.
    pub fn pivot(
        &mut self,
        sf: &StandardForm,
        entering: usize,
        pos: usize,
        d: &[f64],
        refactor_interval: usize,
    ) -> Result<()> {
        let m = self.m;
        let piv = d[pos];
        if piv.abs() < 1e-12 {
            return Err(Error::Internal(format!("pivot element {piv:e} too small")));
        }
        let theta = self.x[pos] / piv;
        for i in 0..m {
            if i != pos {
                self.x[i] -= theta * d[i];
            }
        }
        self.x[pos] = theta;

        let prow: Vec<f64> = self.inverse_row(pos).iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i != pos && d[i] != 0.0 {
                let f = d[i];
                for (dst, p) in self.inv[i * m..(i + 1) * m].iter_mut().zip(&prow) {
                    *dst -= f * p;
                }
            }
        }
        self.inv[pos * m..(pos + 1) * m].copy_from_slice(&prow);

        let leaving = self.basic[pos];
        self.position[leaving] = None;
        self.position[entering] = Some(pos);
        self.basic[pos] = entering;
        self.since_refactor += 1;
        if self.since_refactor >= refactor_interval {
            self.refactor(sf)?;
        }
        Ok(())
    }
}

fn invert(sf: &StandardForm, basic: &[usize]) -> Result<Vec<f64>> {
    let m = sf.rows();
    let w = 2 * m;
    let mut a = vec![0.0; m * w];
    for (c, &j) in basic.iter().enumerate() {
        for &(r, v) in sf.column(j) {
            a[r * w + c] = v;
        }
    }
    for r in 0..m {
        a[r * w + m + r] = 1.0;
    }
    for col in 0..m {
        let (piv, best) = (col..m)
            .map(|r| (r, a[r * w + col].abs()))
            .fold((col, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best < 1e-11 {
            return Err(Error::Internal("singular basis".into()));
        }
        if piv != col {
            for c in 0..w {
                a.swap(piv * w + c, col * w + c);
            }
        }
        let p = a[col * w + col];
        for c in 0..w {
            a[col * w + c] /= p;
        }
        for r in 0..m {
            if r != col {
                let f = a[r * w + col];
                if f != 0.0 {
                    for c in 0..w {
                        a[r * w + c] -= f * a[col * w + c];
                    }
                }
            }
        }
    }
    // rows of [I | B^-1] now hold B^-1 with basis positions as rows
    let mut inv = vec![0.0; m * m];
    for r in 0..m {
        inv[r * m..(r + 1) * m].copy_from_slice(&a[r * w + m..(r + 1) * w]);
    }
    Ok(inv)
}

/// Primal movement performed by one pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotInfo {
    pub entering: usize,
    pub leaving: usize,
    pub step: f64,
}

impl PivotInfo {
    pub fn degenerate(&self, tol: f64) -> bool {
        self.step.abs() <= tol
    }
}

/// A basis over a fixed program plus pivoting state.
#[derive(Debug, Clone)]
pub struct Engine {
    pub sf: StandardForm,
    pub basis: Basis,
    pub opts: SimplexOptions,
    degenerate_run: usize,
    bland: bool,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualOutcome {
    Optimal,
    Infeasible,
}

impl Engine {
    pub fn new(sf: StandardForm, basic: Vec<usize>, opts: SimplexOptions) -> Result<Self> {
        let basis = Basis::factor(&sf, basic)?;
        Ok(Engine {
            sf,
            basis,
            opts,
            degenerate_run: 0,
            bland: opts.rule == PivotRule::Bland,
            pivots: 0,
        })
    }

    fn iteration_cap(&self) -> usize {
        1000 + 50 * (self.sf.rows() + self.sf.num_cols())
    }

    pub fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        self.basis.reduced_costs(&self.sf, c)
    }

    pub fn primal_feasible(&self) -> bool {
        self.basis.values().iter().all(|&v| v >= -self.opts.tol_feas)
    }

    /// Entering column under the current pricing mode.
    pub fn choose_entering(&self, z: &[f64], allowed: &dyn Fn(usize) -> bool) -> Option<usize> {
        let tol = self.opts.tol_opt;
        let mut candidates = (0..z.len()).filter(|&j| !self.basis.is_basic(j) && allowed(j) && z[j] < -tol);
        if self.bland {
            candidates.next()
        } else {
            candidates.fold(None, |best: Option<usize>, j| match best {
                Some(b) if z[b] <= z[j] => Some(b),
                _ => Some(j),
            })
        }
    }

    /// Leaving position for entering direction `d`; ties go to the lowest
    /// basic variable index.
    pub fn ratio_test(&self, d: &[f64]) -> Option<usize> {
        let x = self.basis.values();
        let mut best: Option<(usize, f64)> = None;
        for (i, &di) in d.iter().enumerate() {
            if di <= self.opts.tol_piv {
                continue;
            }
            let ratio = x[i].max(0.0) / di;
            best = match best {
                None => Some((i, ratio)),
                Some((b, br)) => {
                    if ratio < br - self.opts.tol_feas
                        || (ratio <= br + self.opts.tol_feas
                            && self.basis.basic()[i] < self.basis.basic()[b])
                    {
                        Some((i, ratio.min(br)))
                    } else {
                        Some((b, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    /// Pivots `entering` into the basis using the primal ratio test.
    pub fn primal_pivot(&mut self, entering: usize) -> Result<PivotInfo> {
        let d = self.basis.ftran(&self.sf, entering);
        let pos = self
            .ratio_test(&d)
            .ok_or_else(|| Error::Internal(format!("unbounded direction at column {entering}")))?;
        let step = self.basis.values()[pos].max(0.0) / d[pos];
        let leaving = self.basis.basic()[pos];
        self.basis
            .pivot(&self.sf, entering, pos, &d, self.opts.refactor_interval)?;
        self.pivots += 1;
        let info = PivotInfo {
            entering,
            leaving,
            step,
        };
        self.track_degeneracy(&info);
        Ok(info)
    }

    fn track_degeneracy(&mut self, info: &PivotInfo) {
        if info.degenerate(self.opts.tol_feas) {
            self.degenerate_run += 1;
            if self.degenerate_run >= 2 * self.sf.rows() {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = self.opts.rule == PivotRule::Bland;
        }
    }

    /// One pricing + pivot; `None` when the basis is dual feasible.
    pub fn primal_iteration(
        &mut self,
        c: &[f64],
        allowed: &dyn Fn(usize) -> bool,
    ) -> Result<Option<PivotInfo>> {
        let z = self.reduced_costs(c);
        match self.choose_entering(&z, allowed) {
            None => Ok(None),
            Some(j) => self.primal_pivot(j).map(Some),
        }
    }

    /// Primal simplex to optimality from a primal feasible basis.
    pub fn run_primal(&mut self, c: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<()> {
        for _ in 0..self.iteration_cap() {
            if self.primal_iteration(c, allowed)?.is_none() {
                return Ok(());
            }
        }
        Err(Error::Internal("primal simplex iteration limit reached".into()))
    }

    /// Dual simplex from a dual feasible basis.
    pub fn run_dual(&mut self, c: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<DualOutcome> {
        for _ in 0..self.iteration_cap() {
            let x = self.basis.values();
            let leave = (0..self.basis.rows())
                .filter(|&i| x[i] < -self.opts.tol_feas)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if self.bland && self.basis.basic()[b] < self.basis.basic()[i] => Some(b),
                    Some(b) if !self.bland && x[b] <= x[i] => Some(b),
                    _ => Some(i),
                });
            let Some(pos) = leave else {
                return Ok(DualOutcome::Optimal);
            };
            let z = self.reduced_costs(c);
            let rho = self.basis.inverse_row(pos).to_vec();
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.sf.num_cols() {
                if self.basis.is_basic(j) || !allowed(j) {
                    continue;
                }
                let alpha: f64 = self.sf.column(j).iter().map(|&(r, v)| rho[r] * v).sum();
                if alpha >= -self.opts.tol_piv {
                    continue;
                }
                let ratio = z[j].max(0.0) / -alpha;
                if entering.is_none_or(|(_, br)| ratio < br - 1e-12) {
                    entering = Some((j, ratio));
                }
            }
            let Some((j, _)) = entering else {
                return Ok(DualOutcome::Infeasible);
            };
            let d = self.basis.ftran(&self.sf, j);
            let leaving = self.basis.basic()[pos];
            let step = self.basis.values()[pos] / d[pos];
            self.basis.pivot(&self.sf, j, pos, &d, self.opts.refactor_interval)?;
            self.pivots += 1;
            self.track_degeneracy(&PivotInfo {
                entering: j,
                leaving,
                step,
            });
        }
        Err(Error::Internal("dual simplex iteration limit reached".into()))
    }

    pub fn objective(&self, c: &[f64]) -> f64 {
        self.basis
            .basic()
            .iter()
            .zip(self.basis.values())
            .map(|(&j, &v)| c[j] * v)
            .sum()
    }
}

/// Starting basis carried over from a previous solve of the same program shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualStart {
    pub basis: Vec<usize>,
}

/// Solution of an [`InequalityLp`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Final basis over structural and slack columns.
    pub basis: Vec<usize>,
    pub pivots: usize,
    pub warm_started: bool,
}

/// `max c^T x  s.t.  A x <= b, x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityLp {
    pub num_vars: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl InequalityLp {
    pub fn new(num_vars: usize, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), num_vars);
        InequalityLp {
            num_vars,
            rows: Vec::new(),
            b: Vec::new(),
            c,
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(coeffs);
        self.b.push(rhs);
    }

    /// Columns: structural, one slack per row, then one artificial (with
    /// coefficient -1) per row whose right-hand side is negative.
    fn standard_form(&self) -> (StandardForm, Vec<Option<usize>>) {
        let m = self.rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_vars];
        for (r, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                if v != 0.0 {
                    cols[j].push((r, v));
                }
            }
        }
        let mut sf = StandardForm::new(self.b.clone());
        for col in cols {
            sf.add_column(col);
        }
        for r in 0..m {
            sf.add_column(vec![(r, 1.0)]);
        }
        let artificial = (0..m)
            .map(|r| (self.b[r] < 0.0).then(|| sf.add_column(vec![(r, -1.0)])))
            .collect();
        (sf, artificial)
    }

    fn extended_cost(&self, sf: &StandardForm) -> Vec<f64> {
        let mut c = self.c.clone();
        c.resize(sf.num_cols(), 0.0);
        c
    }

    fn objective_scale(&self) -> f64 {
        self.c.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }

    pub fn solve(&self, cfg: &SolverConfig) -> Result<LpSolution> {
        self.solve_cold(cfg)
    }

    /// Solves from `start` when it is usable, otherwise from scratch.
    pub fn solve_warm(&self, cfg: &SolverConfig, start: &DualStart) -> Result<LpSolution> {
        match self.try_warm(cfg, start) {
            Some(Ok(sol)) => Ok(sol),
            Some(Err(e)) => Err(e),
            None => self.solve_cold(cfg),
        }
    }

    fn try_warm(&self, cfg: &SolverConfig, start: &DualStart) -> Option<Result<LpSolution>> {
        let m = self.rows.len();
        let limit = self.num_vars + m;
        if start.basis.len() != m || start.basis.iter().any(|&j| j >= limit) {
            return None;
        }
        let (sf, _) = self.standard_form();
        let c = self.extended_cost(&sf);
        let opts = SimplexOptions::from_config(cfg, self.objective_scale());
        let mut engine = Engine::new(sf, start.basis.clone(), opts).ok()?;
        let allowed = |j: usize| j < limit;
        if engine.primal_feasible() {
            if let Err(e) = engine.run_primal(&c, &allowed) {
                return Some(Err(e));
            }
        } else {
            let z = engine.reduced_costs(&c);
            let dual_feasible = (0..limit)
                .all(|j| engine.basis.is_basic(j) || z[j] >= -engine.opts.tol_opt);
            if !dual_feasible {
                return None;
            }
            match engine.run_dual(&c, &allowed) {
                Ok(DualOutcome::Optimal) => {
                    if let Err(e) = engine.run_primal(&c, &allowed) {
                        return Some(Err(e));
                    }
                }
                Ok(DualOutcome::Infeasible) => return None,
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(self.extract(&engine, &c, true)))
    }

    fn solve_cold(&self, cfg: &SolverConfig) -> Result<LpSolution> {
        let m = self.rows.len();
        let (sf, artificial) = self.standard_form();
        let c = self.extended_cost(&sf);
        let basic: Vec<usize> = (0..m)
            .map(|r| artificial[r].unwrap_or(self.num_vars + r))
            .collect();
        let structural_and_slack = self.num_vars + m;
        let has_artificial = artificial.iter().any(Option::is_some);
        let mut opts = SimplexOptions::from_config(cfg, 1.0);
        let mut engine = Engine::new(sf, basic, opts)?;

        if has_artificial {
            let mut c1 = vec![0.0; engine.sf.num_cols()];
            for a in artificial.iter().flatten() {
                c1[*a] = -1.0;
            }
            engine.run_primal(&c1, &|_| true)?;
            let bscale = self.b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let infeasibility = -engine.objective(&c1);
            if infeasibility > cfg.tol_feas * bscale * (m as f64).max(1.0) {
                return Err(Error::Infeasible(format!(
                    "phase 1 ends with infeasibility {infeasibility:e}"
                )));
            }
            drive_out_artificials(&mut engine, structural_and_slack)?;
        }

        opts.tol_opt = cfg.tol_opt * self.objective_scale();
        engine.opts = opts;
        engine.run_primal(&c, &|j| j < structural_and_slack)?;
        Ok(self.extract(&engine, &c, false))
    }

    fn extract(&self, engine: &Engine, c: &[f64], warm: bool) -> LpSolution {
        let full = engine.basis.primal(engine.sf.num_cols());
        LpSolution {
            x: full[..self.num_vars].to_vec(),
            objective: engine.objective(c),
            basis: engine.basis.basic().to_vec(),
            pivots: engine.pivots,
            warm_started: warm,
        }
    }
}

/// Pivots basic artificials (at zero level) out of the basis where a
/// nonartificial column has a nonzero entry in their row.
fn drive_out_artificials(engine: &mut Engine, limit: usize) -> Result<()> {
    for pos in 0..engine.basis.rows() {
        if engine.basis.basic()[pos] < limit {
            continue;
        }
        let rho = engine.basis.inverse_row(pos).to_vec();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..limit {
            if engine.basis.is_basic(j) {
                continue;
            }
            let alpha: f64 = engine.sf.column(j).iter().map(|&(r, v)| rho[r] * v).sum();
            if alpha.abs() > 1e-9 && best.is_none_or(|(_, a)| alpha.abs() > a) {
                best = Some((j, alpha.abs()));
            }
        }
        if let Some((j, _)) = best {
            let d = engine.basis.ftran(&engine.sf, j);
            engine
                .basis
                .pivot(&engine.sf, j, pos, &d, engine.opts.refactor_interval)?;
            engine.pivots += 1;
        }
    }
    Ok(())
}
