//! Primal-dual interior point method for convex quadratic programs
//!
//! ```text
//! minimize  1/2 z'Hz + q'z   subject to  Az = b,  Gz <= h
//! ```
//!
//! with a block-diagonal Hessian and sparse constraint rows. Hessian blocks
//! that no equality touches, and that share no inequality row with another
//! such block, are eliminated by a Schur complement before the dense
//! Cholesky factorization of the remaining variables.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Sparse row `terms . z (= or <=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
struct HessianBlock {
    vars: Vec<usize>,
    matrix: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvexQp {
    n: usize,
    blocks: Vec<HessianBlock>,
    block_of: Vec<Option<usize>>,
    linear: Vec<f64>,
    equalities: Vec<LinearRow>,
    inequalities: Vec<LinearRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest of the scaled primal, dual and complementarity residuals.
    pub residual: f64,
}

impl ConvexQp {
    pub fn new(n: usize) -> Self {
        ConvexQp {
            n,
            blocks: Vec::new(),
            block_of: vec![None; n],
            linear: vec![0.0; n],
            equalities: Vec::new(),
            inequalities: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `1/2 v' M v` over the variables `vars`. Blocks may not overlap.
    pub fn add_hessian_block(&mut self, vars: &[usize], matrix: DMatrix<f64>) -> Result<()> {
        if matrix.nrows() != vars.len() || matrix.ncols() != vars.len() {
            return Err(Error::invalid("hessian block", "matrix size does not match variables"));
        }
        if vars.iter().any(|&v| v >= self.n || self.block_of[v].is_some()) {
            return Err(Error::invalid("hessian block", "variable out of range or already in a block"));
        }
        let mut sorted = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != vars.len() {
            return Err(Error::invalid("hessian block", "repeated variable"));
        }
        if (&matrix - matrix.transpose()).amax() > 1e-12 * matrix.amax().max(1.0) {
            return Err(Error::invalid("hessian block", "matrix is not symmetric"));
        }
        let id = self.blocks.len();
        for &v in vars {
            self.block_of[v] = Some(id);
        }
        self.blocks.push(HessianBlock {
            vars: vars.to_vec(),
            matrix,
        });
        Ok(())
    }

    pub fn add_linear(&mut self, var: usize, coeff: f64) {
        self.linear[var] += coeff;
    }

    pub fn add_equality(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.n));
        self.equalities.push(LinearRow { terms, rhs });
    }

    pub fn add_inequality(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.n));
        self.inequalities.push(LinearRow { terms, rhs });
    }

    /// `lower <= z[var] <= upper`; infinite bounds are skipped.
    pub fn add_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        if lower.is_finite() {
            self.add_inequality(vec![(var, -1.0)], -lower);
        }
        if upper.is_finite() {
            self.add_inequality(vec![(var, 1.0)], upper);
        }
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let mut value: f64 = self.linear.iter().zip(z).map(|(q, z)| q * z).sum();
        for b in &self.blocks {
            let v = DVector::from_iterator(b.vars.len(), b.vars.iter().map(|&i| z[i]));
            value += 0.5 * v.dot(&(&b.matrix * &v));
        }
        value
    }

    /// Largest violation of the equality and inequality rows at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let dot = |row: &LinearRow| row.terms.iter().map(|&(i, c)| c * z[i]).sum::<f64>();
        let eq = self.equalities.iter().map(|r| (dot(r) - r.rhs).abs());
        let ineq = self.inequalities.iter().map(|r| (dot(r) - r.rhs).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    pub fn solve(&self, tol: f64, max_iters: usize) -> QpSolution {
        Solver::new(self).run(tol, max_iters)
    }
}

/// Rows scaled to unit infinity norm.
fn normalized(rows: &[LinearRow]) -> Vec<LinearRow> {
    rows.iter()
        .map(|r| {
            let scale = r.terms.iter().fold(0.0f64, |m, &(_, c)| m.max(c.abs()));
            let scale = if scale > 0.0 { scale } else { 1.0 };
            LinearRow {
                terms: r.terms.iter().filter(|t| t.1 != 0.0).map(|&(i, c)| (i, c / scale)).collect(),
                rhs: r.rhs / scale,
            }
        })
        .collect()
}

struct ElimBlock {
    block: usize,
    /// `(row, local terms on the block, terms on core indices touched)`.
    rows: Vec<(usize, Vec<(usize, f64)>, Vec<(usize, f64)>)>,
    /// Core indices touched by any row of this block, sorted.
    touch: Vec<usize>,
}

struct Solver<'a> {
    qp: &'a ConvexQp,
    eq: Vec<LinearRow>,
    ineq: Vec<LinearRow>,
    /// Variable to core index.
    core_of: Vec<Option<usize>>,
    core_count: usize,
    core_blocks: Vec<usize>,
    elim: Vec<ElimBlock>,
    elim_of: Vec<Option<(usize, usize)>>,
    /// Core terms of each inequality row.
    row_core: Vec<Vec<(usize, f64)>>,
    a_core: DMatrix<f64>,
}

struct Factor {
    schur: Cholesky<f64, Dyn>,
    blocks: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    eq: Option<Cholesky<f64, Dyn>>,
}

impl<'a> Solver<'a> {
    fn new(qp: &'a ConvexQp) -> Self {
        let eq = normalized(&qp.equalities);
        let ineq = normalized(&qp.inequalities);

        let mut eliminable = vec![true; qp.blocks.len()];
        for row in &eq {
            for &(i, _) in &row.terms {
                if let Some(b) = qp.block_of[i] {
                    eliminable[b] = false;
                }
            }
        }
        for row in &ineq {
            let mut touched: Vec<usize> = row
                .terms
                .iter()
                .filter_map(|&(i, _)| qp.block_of[i])
                .filter(|&b| eliminable[b])
                .collect();
            touched.sort_unstable();
            touched.dedup();
            if touched.len() > 1 {
                for b in touched {
                    eliminable[b] = false;
                }
            }
        }

        let mut core_of = vec![None; qp.n];
        let mut elim_of = vec![None; qp.n];
        let mut core_count = 0;
        let mut elim_index = vec![usize::MAX; qp.blocks.len()];
        let mut elim = Vec::new();
        for (b, block) in qp.blocks.iter().enumerate() {
            if eliminable[b] {
                elim_index[b] = elim.len();
                for (local, &v) in block.vars.iter().enumerate() {
                    elim_of[v] = Some((elim.len(), local));
                }
                elim.push(ElimBlock {
                    block: b,
                    rows: Vec::new(),
                    touch: Vec::new(),
                });
            }
        }
        for v in 0..qp.n {
            if elim_of[v].is_none() {
                core_of[v] = Some(core_count);
                core_count += 1;
            }
        }
        let core_blocks = (0..qp.blocks.len()).filter(|&b| !eliminable[b]).collect();

        let mut row_core = Vec::with_capacity(ineq.len());
        for (r, row) in ineq.iter().enumerate() {
            let core: Vec<(usize, f64)> =
                row.terms.iter().filter_map(|&(i, c)| core_of[i].map(|ci| (ci, c))).collect();
            let local: Vec<(usize, usize, f64)> = row
                .terms
                .iter()
                .filter_map(|&(i, c)| elim_of[i].map(|(e, l)| (e, l, c)))
                .collect();
            if let Some(&(e, _, _)) = local.first() {
                let terms = local.iter().map(|&(_, l, c)| (l, c)).collect();
                elim[e].rows.push((r, terms, core.clone()));
            }
            row_core.push(core);
        }
        for e in &mut elim {
            let mut touch: Vec<usize> = e.rows.iter().flat_map(|(_, _, c)| c.iter().map(|t| t.0)).collect();
            touch.sort_unstable();
            touch.dedup();
            for (_, _, core) in &mut e.rows {
                for t in core.iter_mut() {
                    t.0 = touch.binary_search(&t.0).unwrap();
                }
            }
            e.touch = touch;
        }

        let mut a_core = DMatrix::zeros(eq.len(), core_count);
        for (r, row) in eq.iter().enumerate() {
            for &(i, c) in &row.terms {
                a_core[(r, core_of[i].unwrap())] += c;
            }
        }

        Solver {
            qp,
            eq,
            ineq,
            core_of,
            core_count,
            core_blocks,
            elim,
            elim_of,
            row_core,
            a_core,
        }
    }

    fn g_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.ineq.len(),
            self.ineq.iter().map(|r| r.terms.iter().map(|&(i, c)| c * z[i]).sum::<f64>()),
        )
    }

    fn gt_mul(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.qp.n);
        for (r, row) in self.ineq.iter().enumerate() {
            for &(i, c) in &row.terms {
                out[i] += c * w[r];
            }
        }
        out
    }

    fn a_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.eq.len(),
            self.eq.iter().map(|r| r.terms.iter().map(|&(i, c)| c * z[i]).sum::<f64>()),
        )
    }

    fn at_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.qp.n);
        for (r, row) in self.eq.iter().enumerate() {
            for &(i, c) in &row.terms {
                out[i] += c * y[r];
            }
        }
        out
    }

    fn h_mul(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.qp.n);
        for b in &self.qp.blocks {
            for (a, &i) in b.vars.iter().enumerate() {
                out[i] += b.vars.iter().enumerate().map(|(c, &j)| b.matrix[(a, c)] * z[j]).sum::<f64>();
            }
        }
        out
    }

    fn factor(&self, d: &DVector<f64>, reg: f64) -> Option<Factor> {
        let nc = self.core_count;
        let mut m = DMatrix::<f64>::zeros(nc, nc);
        for &b in &self.core_blocks {
            let block = &self.qp.blocks[b];
            for (a, &i) in block.vars.iter().enumerate() {
                for (c, &j) in block.vars.iter().enumerate() {
                    m[(self.core_of[i].unwrap(), self.core_of[j].unwrap())] += block.matrix[(a, c)];
                }
            }
        }
        for (r, core) in self.row_core.iter().enumerate() {
            for &(i, ci) in core {
                for &(j, cj) in core {
                    m[(i, j)] += d[r] * ci * cj;
                }
            }
        }

        let mut blocks = Vec::with_capacity(self.elim.len());
        for e in &self.elim {
            let size = self.qp.blocks[e.block].vars.len();
            let mut mbb = self.qp.blocks[e.block].matrix.clone();
            let mut mcb = DMatrix::zeros(e.touch.len(), size);
            for (r, local, core) in &e.rows {
                for &(a, ca) in local {
                    for &(b, cb) in local {
                        mbb[(a, b)] += d[*r] * ca * cb;
                    }
                    for &(c, cc) in core {
                        mcb[(c, a)] += d[*r] * cc * ca;
                    }
                }
            }
            for a in 0..size {
                mbb[(a, a)] += reg;
            }
            let inv = mbb.try_inverse()?;
            let update = &mcb * &inv * mcb.transpose();
            for (a, &i) in e.touch.iter().enumerate() {
                for (b, &j) in e.touch.iter().enumerate() {
                    m[(i, j)] -= update[(a, b)];
                }
            }
            blocks.push((inv, mcb));
        }

        let scale = (0..nc).fold(1.0f64, |s, i| s.max(m[(i, i)].abs()));
        for i in 0..nc {
            m[(i, i)] += reg * scale;
        }
        let schur = Cholesky::new(m)?;
        let eq = if self.eq.is_empty() {
            None
        } else {
            let w = schur.l().solve_lower_triangular(&self.a_core.transpose())?;
            let mut k = w.transpose() * w;
            let ks = (0..k.nrows()).fold(1.0f64, |s, i| s.max(k[(i, i)]));
            for i in 0..k.nrows() {
                k[(i, i)] += reg * ks;
            }
            Some(Cholesky::new(k)?)
        };
        Some(Factor { schur, blocks, eq })
    }

    /// Solves `(H + G'DG) x = r` with the factorization.
    fn solve_m(&self, f: &Factor, r: &DVector<f64>) -> DVector<f64> {
        let mut rc = DVector::from_iterator(
            self.core_count,
            (0..self.qp.n).filter(|&v| self.core_of[v].is_some()).map(|v| r[v]),
        );
        let local_rhs: Vec<DVector<f64>> = self
            .elim
            .iter()
            .map(|e| {
                let vars = &self.qp.blocks[e.block].vars;
                DVector::from_iterator(vars.len(), vars.iter().map(|&v| r[v]))
            })
            .collect();
        for ((e, (inv, mcb)), rb) in self.elim.iter().zip(&f.blocks).zip(&local_rhs) {
            let t = mcb * (inv * rb);
            for (a, &i) in e.touch.iter().enumerate() {
                rc[i] -= t[a];
            }
        }
        let dc = f.schur.solve(&rc);
        let mut out = DVector::zeros(self.qp.n);
        for v in 0..self.qp.n {
            if let Some(c) = self.core_of[v] {
                out[v] = dc[c];
            }
        }
        for ((e, (inv, mcb)), rb) in self.elim.iter().zip(&f.blocks).zip(local_rhs) {
            let touched = DVector::from_iterator(e.touch.len(), e.touch.iter().map(|&i| dc[i]));
            let x = inv * (rb - mcb.transpose() * touched);
            for (a, &v) in self.qp.blocks[e.block].vars.iter().enumerate() {
                out[v] = x[a];
            }
        }
        out
    }

    /// Newton direction for the residuals `(rd, rp, ri, rc)`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        f: &Factor,
        s: &DVector<f64>,
        lambda: &DVector<f64>,
        rd: &DVector<f64>,
        rp: &DVector<f64>,
        ri: &DVector<f64>,
        rc: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
        let w = (lambda.component_mul(ri) - rc).component_div(s);
        let rhs = -rd - self.gt_mul(&w);
        let (dz, dy) = match &f.eq {
            None => (self.solve_m(f, &rhs), DVector::zeros(0)),
            Some(k) => {
                let u = self.solve_m(f, &rhs);
                let dy = k.solve(&(self.a_mul(&u) + rp));
                (self.solve_m(f, &(rhs - self.at_mul(&dy))), dy)
            }
        };
        let gdz = self.g_mul(&dz);
        let dl = w + lambda.component_div(s).component_mul(&gdz);
        let ds = -ri - gdz;
        (dz, dy, dl, ds)
    }

    fn run(&self, tol: f64, max_iters: usize) -> QpSolution {
        let n = self.qp.n;
        let m = self.ineq.len();
        let q = DVector::from_column_slice(&self.qp.linear);
        let b = DVector::from_iterator(self.eq.len(), self.eq.iter().map(|r| r.rhs));
        let h = DVector::from_iterator(m, self.ineq.iter().map(|r| r.rhs));
        let q_norm = 1.0 + q.amax();
        let b_norm = 1.0 + b.amax();
        let h_norm = 1.0 + h.amax();
        debug_assert!(self.elim_of.len() == n);

        let mut z = DVector::zeros(n);
        let mut y = DVector::zeros(self.eq.len());
        let mut s = h.map(|v| v.max(1.0));
        let mut lambda = DVector::from_element(m, 1.0);

        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iters {
            let rd = self.h_mul(&z) + &q + self.at_mul(&y) + self.gt_mul(&lambda);
            let rp = self.a_mul(&z) - &b;
            let ri = self.g_mul(&z) + &s - &h;
            let mu = if m > 0 { s.dot(&lambda) / m as f64 } else { 0.0 };
            residual = (rd.amax() / q_norm)
                .max(if rp.is_empty() { 0.0 } else { rp.amax() / b_norm })
                .max(if ri.is_empty() { 0.0 } else { ri.amax() / h_norm })
                .max(mu);
            if residual <= tol {
                converged = true;
                break;
            }
            iterations += 1;

            let d = lambda.component_div(&s);
            let factor = [1e-13, 1e-10, 1e-7, 1e-4].iter().find_map(|&reg| self.factor(&d, reg));
            let Some(factor) = factor else { break };

            let rc_aff = s.component_mul(&lambda);
            let (_, _, dl_aff, ds_aff) = self.direction(&factor, &s, &lambda, &rd, &rp, &ri, &rc_aff);
            let alpha_aff = step_to_boundary(&s, &ds_aff).min(step_to_boundary(&lambda, &dl_aff));
            let sigma = if m > 0 {
                let mu_aff = (&s + alpha_aff * &ds_aff).dot(&(&lambda + alpha_aff * &dl_aff)) / m as f64;
                (mu_aff / mu).clamp(0.0, 1.0).powi(3)
            } else {
                0.0
            };
            let rc = rc_aff + ds_aff.component_mul(&dl_aff) - DVector::from_element(m, sigma * mu);
            let (dz, dy, dl, ds) = self.direction(&factor, &s, &lambda, &rd, &rp, &ri, &rc);
            let alpha = (0.99 * step_to_boundary(&s, &ds).min(step_to_boundary(&lambda, &dl))).min(1.0);
            if !alpha.is_finite() || alpha < 1e-14 {
                break;
            }
            z += alpha * dz;
            y += alpha * dy;
            s += alpha * ds;
            lambda += alpha * dl;
        }
        QpSolution {
            z: z.iter().copied().collect(),
            converged,
            iterations,
            residual,
        }
    }
}

/// Largest step in `[0, inf)` keeping `v + t dv >= 0`.
fn step_to_boundary(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}
