//! Dense revised simplex for small-to-medium linear programs.
//!
//! Maximizes `c·x` subject to sparse rows `a·x {<=,=,>=} b` and `x >= 0`.
//! The basis inverse is kept explicitly and updated in product form, with a
//! full refactorization every few hundred pivots and before returning.
//!
//! Rows flagged `lazy` start outside the model. After each optimum, lazy
//! rows violated by the current point are appended and primal feasibility is
//! restored with the dual simplex. This keeps the working basis small when a
//! model has one row per variable (as bottleneck linearizations do) and most
//! of those rows are slack at the optimum. Lazy rows must be `<=` rows.
//!
//! Pivoting is fully deterministic: Dantzig pricing with lowest-index ties,
//! switching to Bland's rule after a run of degenerate pivots.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T: Scalar = f64> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
    pub lazy: bool,
}

/// `maximize objective·x` over `x >= 0` and the constraint rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T: Scalar = f64> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![T::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) -> usize {
        self.push(coeffs, relation, rhs, false)
    }

    pub fn add_lazy(&mut self, coeffs: Vec<(usize, T)>, rhs: T) -> usize {
        self.push(coeffs, Relation::Le, rhs, true)
    }

    fn push(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T, lazy: bool) -> usize {
        debug_assert!(coeffs.iter().all(|&(v, _)| v < self.num_vars()));
        debug_assert!(!lazy || relation == Relation::Le);
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
            lazy,
        });
        self.constraints.len() - 1
    }

    /// Row activity `a·x`.
    pub fn activity(&self, row: usize, x: &[T]) -> T {
        self.constraints[row]
            .coeffs
            .iter()
            .fold(T::zero(), |acc, &(v, a)| acc + a * x[v])
    }

    /// Signed violation of a row at `x` (zero when satisfied).
    pub fn violation(&self, row: usize, x: &[T]) -> T {
        let c = &self.constraints[row];
        let act = self.activity(row, x);
        match c.relation {
            Relation::Le => (act - c.rhs).max(T::zero()),
            Relation::Ge => (c.rhs - act).max(T::zero()),
            Relation::Eq => (act - c.rhs).abs(),
        }
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&c, &v)| acc + c * v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Phase-one infeasibility threshold and lazy-row violation threshold.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub refactor_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 500_000,
            refactor_every: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T: Scalar = f64> {
    pub values: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    /// Number of lazy rows that had to be activated.
    pub activated_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau<T: Scalar> {
    m: usize,
    cols: Vec<Vec<(usize, T)>>,
    kind: Vec<Kind>,
    cost: Vec<T>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<T>,
    xb: Vec<T>,
    iterations: usize,
    since_refactor: usize,
    eps: T,
    options: SolverOptions,
}

enum Step {
    Optimal,
    Continue,
}

impl<T: Scalar> Tableau<T> {
    fn new(lp: &LinearProgram<T>, options: SolverOptions) -> Self {
        let n = lp.num_vars();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        let mut kind = vec![Kind::Structural; n];
        let mut cost = lp.objective.clone();
        let mut rhs = Vec::new();
        let mut basis = Vec::new();

        for c in lp.constraints.iter().filter(|c| !c.lazy) {
            let row = rhs.len();
            let flip = c.rhs < T::zero();
            let sign = if flip { -T::one() } else { T::one() };
            let relation = match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            for &(v, a) in &c.coeffs {
                if a != T::zero() {
                    cols[v].push((row, a * sign));
                }
            }
            rhs.push(c.rhs * sign);
            let mut add_col = |entries: Vec<(usize, T)>, k: Kind| {
                cols.push(entries);
                kind.push(k);
                cost.push(T::zero());
                cols.len() - 1
            };
            match relation {
                Relation::Le => basis.push(add_col(vec![(row, T::one())], Kind::Slack)),
                Relation::Ge => {
                    add_col(vec![(row, -T::one())], Kind::Slack);
                    basis.push(add_col(vec![(row, T::one())], Kind::Artificial));
                }
                Relation::Eq => basis.push(add_col(vec![(row, T::one())], Kind::Artificial)),
            }
        }

        let m = rhs.len();
        let mut binv = vec![T::zero(); m * m];
        for i in 0..m {
            binv[i * m + i] = T::one();
        }
        let mut in_basis = vec![false; cols.len()];
        for &b in &basis {
            in_basis[b] = true;
        }
        Self {
            m,
            cols,
            kind,
            cost,
            xb: rhs.clone(),
            rhs,
            basis,
            in_basis,
            binv,
            iterations: 0,
            since_refactor: 0,
            eps: T::pivot_tolerance(),
            options,
        }
    }

    fn binv_row(&self, r: usize) -> &[T] {
        &self.binv[r * self.m..(r + 1) * self.m]
    }

    fn dot_col(&self, dense: &[T], j: usize) -> T {
        self.cols[j]
            .iter()
            .fold(T::zero(), |acc, &(i, a)| acc + dense[i] * a)
    }

    /// Simplex multipliers `c_B B^-1` for the given cost vector.
    fn duals(&self, cost: &[T]) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for k in 0..m {
            let ck = cost[self.basis[k]];
            if ck != T::zero() {
                for (yi, &b) in y.iter_mut().zip(self.binv_row(k)) {
                    *yi += ck * b;
                }
            }
        }
        y
    }

    fn entering_allowed(&self, j: usize, phase_one: bool) -> bool {
        !self.in_basis[j] && (phase_one || self.kind[j] != Kind::Artificial)
    }

    /// `B^-1 A_j`.
    fn column(&self, j: usize) -> Vec<T> {
        let m = self.m;
        let mut alpha = vec![T::zero(); m];
        for &(i, a) in &self.cols[j] {
            for (k, ak) in alpha.iter_mut().enumerate() {
                let b = self.binv[k * m + i];
                if b != T::zero() {
                    *ak += b * a;
                }
            }
        }
        alpha
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[T]) {
        let m = self.m;
        let p = alpha[r];
        {
            let row = &mut self.binv[r * m..(r + 1) * m];
            row.iter_mut().for_each(|x| *x /= p);
        }
        self.xb[r] /= p;
        let pivot_row: Vec<T> = self.binv_row(r).to_vec();
        let xr = self.xb[r];
        for k in 0..m {
            if k == r || alpha[k] == T::zero() {
                continue;
            }
            let f = alpha[k];
            let row = &mut self.binv[k * m..(k + 1) * m];
            for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            self.xb[k] -= f * xr;
        }
        self.in_basis[self.basis[r]] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    fn tick(&mut self) -> Result<(), LpError> {
        if self.iterations >= self.options.max_iterations {
            return Err(LpError::IterationLimit);
        }
        if self.since_refactor >= self.options.refactor_every {
            self.refactor();
        }
        Ok(())
    }

    /// Rebuilds `B^-1` from scratch by Gauss-Jordan elimination with partial
    /// pivoting and recomputes the basic values.
    fn refactor(&mut self) {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return;
        }
        let mut b = vec![T::zero(); m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[j] {
                b[i * m + k] = a;
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        for col in 0..m {
            let mut best = col;
            for r in col + 1..m {
                if b[r * m + col].abs() > b[best * m + col].abs() {
                    best = r;
                }
            }
            if b[best * m + col].abs() <= T::epsilon() {
                // singular basis; keep the product-form inverse
                return;
            }
            if best != col {
                for c in 0..m {
                    b.swap(best * m + c, col * m + c);
                    inv.swap(best * m + c, col * m + c);
                }
            }
            let p = b[col * m + col];
            for c in 0..m {
                b[col * m + c] /= p;
                inv[col * m + c] /= p;
            }
            let prow_b: Vec<T> = b[col * m..(col + 1) * m].to_vec();
            let prow_i: Vec<T> = inv[col * m..(col + 1) * m].to_vec();
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = b[r * m + col];
                if f == T::zero() {
                    continue;
                }
                for c in 0..m {
                    b[r * m + c] -= f * prow_b[c];
                    inv[r * m + c] -= f * prow_i[c];
                }
            }
        }
        // inv = B^-1 with rows indexed by basis position
        self.binv = inv;
        self.xb = (0..m)
            .map(|k| {
                self.binv_row(k)
                    .iter()
                    .zip(&self.rhs)
                    .fold(T::zero(), |acc, (&b, &r)| acc + b * r)
            })
            .collect();
    }

    /// One primal simplex iteration for the given cost vector.
    fn primal_step(&mut self, cost: &[T], phase_one: bool, bland: bool) -> Result<(Step, bool), LpError> {
        let y = self.duals(cost);
        let mut entering: Option<(usize, T)> = None;
        for j in 0..self.cols.len() {
            if !self.entering_allowed(j, phase_one) {
                continue;
            }
            let d = cost[j] - self.dot_col(&y, j);
            if d > self.eps {
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.is_none_or(|(_, best)| d > best) {
                    entering = Some((j, d));
                }
            }
        }
        let Some((q, _)) = entering else {
            return Ok((Step::Optimal, false));
        };
        let alpha = self.column(q);
        let mut leave: Option<(usize, T)> = None;
        for k in 0..self.m {
            if alpha[k] > self.eps {
                let ratio = self.xb[k].max(T::zero()) / alpha[k];
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < best || (ratio == best && self.basis[k] < self.basis[r])
                    }
                };
                if better {
                    leave = Some((k, ratio));
                }
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(LpError::Unbounded);
        };
        self.pivot(r, q, &alpha);
        Ok((Step::Continue, ratio <= self.eps))
    }

    fn primal(&mut self, cost: &[T], phase_one: bool) -> Result<(), LpError> {
        let mut degenerate_run = 0usize;
        loop {
            self.tick()?;
            let bland = degenerate_run > 50;
            match self.primal_step(cost, phase_one, bland)? {
                (Step::Optimal, _) => return Ok(()),
                (Step::Continue, true) => degenerate_run += 1,
                (Step::Continue, false) => degenerate_run = 0,
            }
        }
    }

    /// Dual simplex from a dual-feasible basis until primal feasibility.
    fn dual(&mut self, cost: &[T]) -> Result<(), LpError> {
        loop {
            self.tick()?;
            let mut leave: Option<usize> = None;
            for k in 0..self.m {
                if self.xb[k] < -self.eps && leave.is_none_or(|r| self.xb[k] < self.xb[r]) {
                    leave = Some(k);
                }
            }
            let Some(r) = leave else {
                return Ok(());
            };
            let rho: Vec<T> = self.binv_row(r).to_vec();
            let y = self.duals(cost);
            let mut entering: Option<(usize, T)> = None;
            for j in 0..self.cols.len() {
                if !self.entering_allowed(j, false) {
                    continue;
                }
                let t = self.dot_col(&rho, j);
                if t < -self.eps {
                    let d = (cost[j] - self.dot_col(&y, j)).min(T::zero());
                    let ratio = d / t;
                    if entering.is_none_or(|(_, best)| ratio < best) {
                        entering = Some((j, ratio));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Err(LpError::Infeasible);
            };
            let alpha = self.column(q);
            self.pivot(r, q, &alpha);
        }
    }

    fn structural_values(&self, n: usize) -> Vec<T> {
        let mut x = vec![T::zero(); n];
        for (k, &j) in self.basis.iter().enumerate() {
            if j < n {
                x[j] = self.xb[k];
            }
        }
        x
    }

    /// Appends `a·x <= b` rows with fresh basic slacks.
    fn add_rows(&mut self, rows: &[&Constraint<T>]) {
        let old = self.m;
        let m = old + rows.len();
        let mut binv = vec![T::zero(); m * m];
        for k in 0..old {
            binv[k * m..k * m + old].copy_from_slice(&self.binv[k * old..(k + 1) * old]);
        }
        let n_cols_before = self.cols.len();
        let x_basic: Vec<T> = self.xb.clone();
        for (offset, c) in rows.iter().enumerate() {
            let row = old + offset;
            // new inverse row: -a_B B^-1, plus 1 on the diagonal
            let mut activity = T::zero();
            for (k, &j) in self.basis.iter().enumerate() {
                let a_j = c
                    .coeffs
                    .iter()
                    .filter(|&&(v, _)| v == j)
                    .fold(T::zero(), |acc, &(_, a)| acc + a);
                if a_j != T::zero() && j < n_cols_before {
                    activity += a_j * x_basic[k];
                    for i in 0..old {
                        binv[row * m + i] -= a_j * self.binv[k * old + i];
                    }
                }
            }
            binv[row * m + row] = T::one();
            for &(v, a) in &c.coeffs {
                if a != T::zero() {
                    self.cols[v].push((row, a));
                }
            }
            self.cols.push(vec![(row, T::one())]);
            self.kind.push(Kind::Slack);
            self.cost.push(T::zero());
            self.in_basis.push(true);
            self.basis.push(self.cols.len() - 1);
            self.rhs.push(c.rhs);
            self.xb.push(c.rhs - activity);
        }
        self.binv = binv;
        self.m = m;
    }
}

/// Solves `lp`, activating lazy rows on demand.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>, options: SolverOptions) -> Result<LpSolution<T>, LpError> {
    let n = lp.num_vars();
    let mut tab = Tableau::new(lp, options);
    let tol = T::of(options.tolerance);

    if tab.kind.contains(&Kind::Artificial) {
        let phase_one: Vec<T> = tab
            .kind
            .iter()
            .map(|k| if *k == Kind::Artificial { -T::one() } else { T::zero() })
            .collect();
        tab.primal(&phase_one, true)?;
        tab.refactor();
        let infeasibility = tab
            .basis
            .iter()
            .zip(&tab.xb)
            .filter(|(&j, _)| tab.kind[j] == Kind::Artificial)
            .fold(T::zero(), |acc, (_, &v)| acc + v.abs());
        if infeasibility > tol {
            return Err(LpError::Infeasible);
        }
        // drive zero-valued artificials out where a real column can replace them
        for r in 0..tab.m {
            if tab.kind[tab.basis[r]] != Kind::Artificial {
                continue;
            }
            let rho: Vec<T> = tab.binv_row(r).to_vec();
            let replacement = (0..tab.cols.len()).find(|&j| {
                !tab.in_basis[j] && tab.kind[j] != Kind::Artificial && tab.dot_col(&rho, j).abs() > tab.eps
            });
            if let Some(q) = replacement {
                let alpha = tab.column(q);
                tab.pivot(r, q, &alpha);
            }
        }
    }

    let cost = tab.cost.clone();
    tab.primal(&cost, false)?;

    let mut active = vec![false; lp.constraints.len()];
    let mut activated_rows = 0;
    loop {
        tab.refactor();
        if tab.xb.iter().any(|&v| v < -tab.eps) {
            let cost = extend_cost(&cost, tab.cols.len());
            tab.dual(&cost)?;
            tab.primal(&cost, false)?;
            continue;
        }
        let x = tab.structural_values(n);
        let violated: Vec<usize> = lp
            .constraints
            .iter()
            .enumerate()
            .filter(|(i, c)| c.lazy && !active[*i])
            .filter(|(i, _)| lp.violation(*i, &x) > tab.eps)
            .map(|(i, _)| i)
            .collect();
        if violated.is_empty() {
            let cost_full = extend_cost(&cost, tab.cols.len());
            // refactorization can expose small positive reduced costs
            let before = tab.iterations;
            tab.primal(&cost_full, false)?;
            if tab.iterations != before {
                continue;
            }
            let values: Vec<T> = x
                .into_iter()
                .map(|v| if v < T::zero() && v > -tol { T::zero() } else { v })
                .collect();
            return Ok(LpSolution {
                objective: lp.objective_value(&values),
                values,
                iterations: tab.iterations,
                activated_rows,
            });
        }
        activated_rows += violated.len();
        for &i in &violated {
            active[i] = true;
        }
        let rows: Vec<&Constraint<T>> = violated.iter().map(|&i| &lp.constraints[i]).collect();
        tab.add_rows(&rows);
        let cost_full = extend_cost(&cost, tab.cols.len());
        tab.dual(&cost_full)?;
    }
}

fn extend_cost<T: Scalar>(cost: &[T], len: usize) -> Vec<T> {
    let mut c = cost.to_vec();
    c.resize(len, T::zero());
    c
}
