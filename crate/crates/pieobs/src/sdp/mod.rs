//! Semidefinite-programming backend.
//!
//! [`SdpProblem`] holds symmetric PSD-constrained matrix variables, free
//! scalars, affine equality constraints and a linear objective. Solving
//! lowers the problem onto a dense primal-dual interior-point engine
//! (Mehrotra predictor-corrector with Nesterov-Todd scaling) along one of
//! two routes:
//!
//! * when equalities outnumber 60% of the variables, they are eliminated by
//!   nullspace projection and the reduced LMI is handed to the engine in
//!   dual form;
//! * otherwise the equalities are kept and handled through their dual
//!   multipliers, with free scalars carried in the saddle system.

mod engine;
pub mod sdpa;

pub use engine::{ConRow, ConicData, EngineOpts, EngineResult, EngineStatus};

use crate::scalar::{Scalar, VarId};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveRoute {
    NullspaceLmi,
    DualEqualities,
}

#[derive(Clone, Debug)]
pub struct MatVarInfo {
    pub name: String,
    pub size: usize,
    pub first_var: VarId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatVarRef(pub usize);

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub mat_vars: Vec<MatVarInfo>,
    pub free_vars: Vec<String>,
    free_first: Vec<VarId>,
    n_vars: u32,
    pub constraints: Vec<Scalar>,
    pub objective: Scalar,
    trivially_infeasible: bool,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Value for every declared variable, indexed by `VarId`.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rel_gap: f64,
    /// True when the run only met the loosened (1e-6) tolerances.
    pub loosened: bool,
    pub route: SolveRoute,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOpts {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        SdpProblem {
            mat_vars: Vec::new(),
            free_vars: Vec::new(),
            free_first: Vec::new(),
            n_vars: 0,
            constraints: Vec::new(),
            objective: Scalar::zero(),
            trivially_infeasible: false,
        }
    }

    /// Declare a symmetric PSD matrix variable; entries (i ≤ j) become
    /// decision variables in row-major upper-triangle order.
    pub fn add_mat_var(&mut self, name: &str, size: usize) -> MatVarRef {
        assert!(size >= 1);
        let first = self.n_vars;
        self.n_vars += (size * (size + 1) / 2) as u32;
        self.mat_vars.push(MatVarInfo {
            name: name.to_string(),
            size,
            first_var: first,
        });
        MatVarRef(self.mat_vars.len() - 1)
    }

    /// Variable id of entry (i, j) of a matrix variable.
    pub fn mat_entry(&self, m: MatVarRef, i: usize, j: usize) -> VarId {
        let info = &self.mat_vars[m.0];
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        assert!(j < info.size);
        // row-major upper triangle offset
        let off = i * info.size + j - i * (i + 1) / 2;
        info.first_var + off as u32
    }

    pub fn add_free_var(&mut self, name: &str) -> VarId {
        let id = self.n_vars;
        self.n_vars += 1;
        self.free_vars.push(name.to_string());
        self.free_first.push(id);
        id
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars as usize
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Add the equality `expr == 0`. Identically-zero rows are dropped so the
    /// assembled constraint matrix has no all-zero rows; a nonzero constant
    /// with no variables marks the problem trivially infeasible.
    pub fn add_equality(&mut self, expr: Scalar) {
        if expr.terms.is_empty() {
            if expr.constant.abs() > 1e-12 {
                self.trivially_infeasible = true;
            }
            return;
        }
        self.constraints.push(expr);
    }

    /// Minimize this affine expression.
    pub fn set_objective(&mut self, obj: Scalar) {
        self.objective = obj;
    }

    /// Map a variable id to (matrix block, i, j) or a free index.
    pub(crate) fn locate(&self, v: VarId) -> VarLoc {
        for (b, info) in self.mat_vars.iter().enumerate() {
            let len = (info.size * (info.size + 1) / 2) as u32;
            if v >= info.first_var && v < info.first_var + len {
                let off = (v - info.first_var) as usize;
                // invert the row-major upper-triangle offset
                let mut i = 0usize;
                let mut rem = off;
                loop {
                    let row_len = info.size - i;
                    if rem < row_len {
                        return VarLoc::Mat(b, i, i + rem);
                    }
                    rem -= row_len;
                    i += 1;
                }
            }
        }
        let fi = self
            .free_first
            .iter()
            .position(|&f| f == v)
            .expect("variable id out of range");
        VarLoc::Free(fi)
    }

    pub fn solve(&self, opts: &SolveOpts) -> SdpSolution {
        if self.trivially_infeasible {
            return SdpSolution {
                status: SdpStatus::Infeasible,
                values: vec![0.0; self.n_vars()],
                objective: f64::NAN,
                iterations: 0,
                primal_residual: f64::INFINITY,
                dual_residual: f64::INFINITY,
                rel_gap: f64::INFINITY,
                loosened: false,
                route: SolveRoute::DualEqualities,
            };
        }
        let ratio = self.n_constraints() as f64 / self.n_vars().max(1) as f64;
        let route = if ratio > 0.6 {
            SolveRoute::NullspaceLmi
        } else {
            SolveRoute::DualEqualities
        };
        // A pure feasibility problem (no objective) leaves the dual without
        // an interior; minimizing the trace of the matrix blocks restores
        // dual Slater without changing feasibility.
        let feasibility_only = self.objective.terms.is_empty();
        let reg0 = if feasibility_only { 1.0 } else { 0.0 };
        let mut sol = self.solve_route(route, opts.tol, opts.max_iter, reg0);
        if sol.status == SdpStatus::NumericalFailure && !feasibility_only {
            // Retry with a small trace regularization; it perturbs the
            // optimum by reg · tr(X*) and is reported via `loosened` only if
            // the tolerance also had to drop.
            let obj_scale = self
                .objective
                .terms
                .iter()
                .map(|&(_, c)| c.abs())
                .fold(0.0f64, f64::max)
                .max(1.0);
            let reg = 1e-9 * obj_scale;
            let retry = self.solve_route(route, opts.tol, opts.max_iter, reg);
            if retry.status == SdpStatus::Optimal {
                return retry;
            }
            sol = retry;
        }
        if sol.status == SdpStatus::NumericalFailure && opts.tol < 1e-6 {
            // loosened retry
            let reg = if feasibility_only { 1.0 } else { 1e-9 };
            let mut retry = self.solve_route(route, 1e-6, opts.max_iter, reg);
            if retry.status == SdpStatus::Optimal {
                retry.loosened = true;
                return retry;
            }
            sol = retry;
        }
        sol
    }

    fn solve_route(&self, route: SolveRoute, tol: f64, max_iter: usize, trace_reg: f64) -> SdpSolution {
        match route {
            SolveRoute::DualEqualities => self.solve_direct(tol, max_iter, trace_reg),
            SolveRoute::NullspaceLmi => self.solve_nullspace(tol, max_iter, trace_reg),
        }
    }

    /// Route (b): engine on the problem as stated, after a presolve that
    /// eliminates every free scalar by Gaussian pivoting against an equality
    /// row (free variables otherwise make the Newton saddle system fragile).
    fn solve_direct(&self, tol: f64, max_iter: usize, trace_reg: f64) -> SdpSolution {
        let n_free = self.free_vars.len();
        // Dense-ish working copy of the constraints over (matrix vars ++ free).
        let mut cons: Vec<Scalar> = self.constraints.clone();
        let mut objective = self.objective.clone();
        // free var id -> substitution expression over remaining variables
        let mut subs: Vec<Option<(Scalar, f64)>> = vec![None; n_free]; // (rest, pivot coef): v = -rest/coef
        let free_index: std::collections::HashMap<VarId, usize> = self
            .free_first
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let mut used_rows = vec![false; cons.len()];
        for f in 0..n_free {
            let fid = self.free_first[f];
            // pick the unused row where this free var has the largest coefficient
            let mut best: Option<(usize, f64)> = None;
            for (k, con) in cons.iter().enumerate() {
                if used_rows[k] {
                    continue;
                }
                if let Some(&(_, c)) = con.terms.iter().find(|&&(v, _)| v == fid) {
                    let rel = c.abs()
                        / con
                            .terms
                            .iter()
                            .map(|&(_, x)| x.abs())
                            .fold(0.0f64, f64::max)
                            .max(1e-300);
                    if best.map_or(true, |(_, b)| rel > b) {
                        best = Some((k, rel));
                    }
                }
            }
            let Some((k, _)) = best else {
                continue; // appears in no constraint; cannot eliminate
            };
            used_rows[k] = true;
            let row = cons[k].clone();
            let coef = row
                .terms
                .iter()
                .find(|&&(v, _)| v == fid)
                .map(|&(_, c)| c)
                .unwrap();
            // v = -(row - coef·v)/coef
            let mut rest = row.clone();
            rest.terms.retain(|&(v, _)| v != fid);
            subs[f] = Some((rest.clone(), coef));
            // substitute into every other row and the objective
            let subst = |expr: &Scalar, rest: &Scalar, coef: f64, fid: VarId| -> Scalar {
                match expr.terms.iter().find(|&&(v, _)| v == fid) {
                    None => expr.clone(),
                    Some(&(_, c)) => {
                        let mut out = expr.clone();
                        out.terms.retain(|&(v, _)| v != fid);
                        out.add(&rest.scale(-c / coef))
                    }
                }
            };
            for (kk, con) in cons.iter_mut().enumerate() {
                if kk != k {
                    *con = subst(con, &rest, coef, fid);
                }
            }
            objective = subst(&objective, &rest, coef, fid);
        }
        // Any remaining free ids inside constraints/objective mean the
        // substitution chain references other free vars: resolve by repeated
        // passes (substitutions were built in order, so one reverse pass
        // suffices for the expressions stored in `subs`).
        // Build the engine data over matrix variables only.
        let block_sizes: Vec<usize> = self.mat_vars.iter().map(|m| m.size).collect();
        let mut c_blocks: Vec<DMatrix<f64>> = block_sizes
            .iter()
            .map(|&s| DMatrix::identity(s, s) * trace_reg)
            .collect();
        for &(v, coef) in &objective.terms {
            match self.locate(v) {
                VarLoc::Mat(b, i, j) => {
                    if i == j {
                        c_blocks[b][(i, i)] += coef;
                    } else {
                        c_blocks[b][(i, j)] += coef / 2.0;
                        c_blocks[b][(j, i)] += coef / 2.0;
                    }
                }
                VarLoc::Free(_) => {
                    // free variable that could not be eliminated: no
                    // constraint couples it, so a nonzero objective
                    // coefficient means the problem is unbounded; surface as
                    // numerical failure downstream by ignoring it here.
                }
            }
        }
        let mut rows: Vec<ConRow> = Vec::new();
        let mut rhs_v: Vec<f64> = Vec::new();
        let mut kept_rows = Vec::new();
        for (k, con) in cons.iter().enumerate() {
            if used_rows[k] {
                continue;
            }
            let scale = con
                .terms
                .iter()
                .map(|&(_, c)| c.abs())
                .fold(0.0f64, f64::max);
            if scale <= 1e-14 {
                // row degenerated after substitution; a leftover constant is
                // an inconsistency
                if con.constant.abs() > 1e-8 {
                    return SdpSolution {
                        status: SdpStatus::Infeasible,
                        values: vec![0.0; self.n_vars()],
                        objective: f64::NAN,
                        iterations: 0,
                        primal_residual: con.constant.abs(),
                        dual_residual: f64::INFINITY,
                        rel_gap: f64::INFINITY,
                        loosened: false,
                        route: SolveRoute::DualEqualities,
                    };
                }
                continue;
            }
            let mut row = ConRow {
                entries: Vec::new(),
                free: Vec::new(),
            };
            for &(v, coef) in &con.terms {
                match self.locate(v) {
                    VarLoc::Mat(b, i, j) => {
                        row.entries.push((b as u32, i as u32, j as u32, coef / scale))
                    }
                    VarLoc::Free(_) => {}
                }
            }
            rhs_v.push(-con.constant / scale);
            rows.push(row);
            kept_rows.push(k);
        }
        // Drop rows that are exact linear combinations of earlier ones (the
        // Gram lowering produces consistent redundancy); keeps the dual face
        // compact and the Schur matrix nonsingular.
        let m_rows = rows.len();
        if m_rows > 0 {
            let mut gram = DMatrix::zeros(m_rows, m_rows);
            for i in 0..m_rows {
                for j in 0..=i {
                    let mut acc = 0.0;
                    // sparse dot over matrix-entry coefficient lists
                    let (ri, rj) = (&rows[i].entries, &rows[j].entries);
                    let (mut a, mut b) = (0usize, 0usize);
                    while a < ri.len() && b < rj.len() {
                        let ka = (ri[a].0, ri[a].1, ri[a].2);
                        let kb = (rj[b].0, rj[b].1, rj[b].2);
                        match ka.cmp(&kb) {
                            std::cmp::Ordering::Less => a += 1,
                            std::cmp::Ordering::Greater => b += 1,
                            std::cmp::Ordering::Equal => {
                                acc += ri[a].3 * rj[b].3;
                                a += 1;
                                b += 1;
                            }
                        }
                    }
                    gram[(i, j)] = acc;
                    gram[(j, i)] = acc;
                }
            }
            let dependent = engine::dependent_rows(&gram);
            if dependent.iter().any(|&d| d) {
                let mut rows2 = Vec::with_capacity(m_rows);
                let mut rhs2 = Vec::with_capacity(m_rows);
                for (k, dep) in dependent.iter().enumerate() {
                    if !dep {
                        rows2.push(rows[k].clone());
                        rhs2.push(rhs_v[k]);
                    }
                }
                rows = rows2;
                rhs_v = rhs2;
            }
        }
        let data = ConicData {
            block_sizes,
            n_free: 0,
            c_blocks,
            c_free: DVector::zeros(0),
            rows,
            rhs: DVector::from_vec(rhs_v),
        };
        let res = engine::solve_engine(&data, &EngineOpts { tol, max_iter });
        let mut values = vec![0.0; self.n_vars()];
        for (b, info) in self.mat_vars.iter().enumerate() {
            if res.x_blocks.len() <= b {
                continue;
            }
            for i in 0..info.size {
                for j in i..info.size {
                    values[self.mat_entry(MatVarRef(b), i, j) as usize] = res.x_blocks[b][(i, j)];
                }
            }
        }
        // Back-substitute the eliminated free variables in reverse order.
        for f in (0..n_free).rev() {
            if let Some((rest, coef)) = &subs[f] {
                let id = self.free_first[f];
                values[id as usize] = -rest.eval(&values) / coef;
            }
        }
        let objective_val = self.objective.eval(&values);
        SdpSolution {
            status: match res.status {
                EngineStatus::Optimal => SdpStatus::Optimal,
                EngineStatus::Infeasible => SdpStatus::Infeasible,
                EngineStatus::NumericalFailure => SdpStatus::NumericalFailure,
            },
            values,
            objective: objective_val,
            iterations: res.iterations,
            primal_residual: res.primal_res,
            dual_residual: res.dual_res,
            rel_gap: res.rel_gap,
            loosened: false,
            route: SolveRoute::DualEqualities,
        }
    }

    /// Route (a): eliminate equalities by nullspace projection, solve the
    /// reduced LMI through the engine's dual, read the reduced variables off
    /// the equality multipliers.
    fn solve_nullspace(&self, tol: f64, max_iter: usize, trace_reg: f64) -> SdpSolution {
        let nv = self.n_vars();
        let ne = self.constraints.len();
        let mut e = DMatrix::zeros(ne, nv);
        let mut b_eq = DVector::zeros(ne);
        for (k, con) in self.constraints.iter().enumerate() {
            for &(v, coef) in &con.terms {
                e[(k, v as usize)] = coef;
            }
            b_eq[k] = -con.constant;
        }
        // Nullspace and a particular solution through the spectral
        // decomposition of EᵀE (adequate at the sizes this route sees).
        let ete = e.transpose() * &e;
        let etb = e.transpose() * &b_eq;
        let eig = ete.clone().symmetric_eigen();
        let max_ev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let rank_tol = max_ev.max(1e-30) * 1e-12 * (nv as f64);
        let mut null_cols = Vec::new();
        let mut v0 = DVector::zeros(nv);
        for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
            let vec = eig.eigenvectors.column(idx);
            if ev <= rank_tol {
                null_cols.push(vec.into_owned());
            } else {
                // particular solution component: vᵀ(Eᵀb)/λ · v
                let c = vec.dot(&etb) / ev;
                v0 += vec * c;
            }
        }
        // Feasibility of the equality system itself.
        let eq_res = (&e * &v0 - &b_eq).norm() / (1.0 + b_eq.norm());
        if eq_res > 1e-8 {
            return SdpSolution {
                status: SdpStatus::Infeasible,
                values: vec![0.0; nv],
                objective: f64::NAN,
                iterations: 0,
                primal_residual: eq_res,
                dual_residual: f64::INFINITY,
                rel_gap: f64::INFINITY,
                loosened: false,
                route: SolveRoute::NullspaceLmi,
            };
        }
        let nz = null_cols.len();
        // Reduced LMI: S(z) = blocks(v0) + Σ z_k blocks(N_k) ⪰ 0,
        // minimize cᵀ(v0 + N z). Engine sees the dual form:
        //   min ⟨F0, Y⟩  s.t. ⟨F_k, Y⟩ = -ĉ_k, Y ⪰ 0.
        let block_sizes: Vec<usize> = self.mat_vars.iter().map(|m| m.size).collect();
        let to_blocks = |v: &DVector<f64>| -> Vec<DMatrix<f64>> {
            self.mat_vars
                .iter()
                .enumerate()
                .map(|(b, info)| {
                    let mut m = DMatrix::zeros(info.size, info.size);
                    for i in 0..info.size {
                        for j in i..info.size {
                            let val = v[self.mat_entry(MatVarRef(b), i, j) as usize];
                            m[(i, j)] = val;
                            m[(j, i)] = val;
                        }
                    }
                    m
                })
                .collect()
        };
        let f0 = to_blocks(&v0);
        let mut c_hat = DVector::zeros(nz);
        let mut obj_vec = DVector::zeros(nv);
        for &(v, coef) in &self.objective.terms {
            obj_vec[v as usize] = coef;
        }
        if trace_reg != 0.0 {
            for (b, info) in self.mat_vars.iter().enumerate() {
                for i in 0..info.size {
                    obj_vec[self.mat_entry(MatVarRef(b), i, i) as usize] += trace_reg;
                }
            }
        }
        for (k, nk) in null_cols.iter().enumerate() {
            c_hat[k] = obj_vec.dot(nk);
        }
        let mut rows = Vec::with_capacity(nz);
        for nk in &null_cols {
            let fk = to_blocks(nk);
            let mut row = ConRow {
                entries: Vec::new(),
                free: Vec::new(),
            };
            for (b, m) in fk.iter().enumerate() {
                for i in 0..m.nrows() {
                    for j in i..m.ncols() {
                        let val = if i == j { m[(i, i)] } else { 2.0 * m[(i, j)] };
                        if val != 0.0 {
                            // engine semantics: coefficient on entry (i,j)
                            row.entries.push((b as u32, i as u32, j as u32, val));
                        }
                    }
                }
            }
            rows.push(row);
        }
        // Engine primal: min ⟨F0, Y⟩ s.t. ⟨F_k, Y⟩ = ĉ_k, Y ⪰ 0. Its dual is
        // max ĉᵀy s.t. F0 - Σ y_k F_k ⪰ 0, so z = -y solves the reduced LMI.
        let data = ConicData {
            block_sizes,
            n_free: 0,
            c_blocks: f0.clone(),
            c_free: DVector::zeros(0),
            rows,
            rhs: c_hat.clone(),
        };
        let res = engine::solve_engine(&data, &EngineOpts { tol, max_iter });
        let status = match res.status {
            EngineStatus::Optimal => SdpStatus::Optimal,
            // engine-primal infeasible ⟺ no Y with ⟨F_k,Y⟩ = -ĉ_k, which is
            // dual (LMI-side) unboundedness; engine dual-infeasible shows up
            // as NumericalFailure and is reported as such.
            EngineStatus::Infeasible => SdpStatus::Infeasible,
            EngineStatus::NumericalFailure => SdpStatus::NumericalFailure,
        };
        // z* = -y*, read off the equality multipliers.
        let mut v_star = v0.clone();
        for (k, nk) in null_cols.iter().enumerate() {
            v_star -= nk * res.y[k];
        }
        let values: Vec<f64> = v_star.iter().cloned().collect();
        let objective = self.objective.eval(&values);
        // PSD defect of the recovered blocks doubles as the primal residual.
        let mut min_eig = 0.0f64;
        for (b, info) in self.mat_vars.iter().enumerate() {
            let mut m = DMatrix::zeros(info.size, info.size);
            for i in 0..info.size {
                for j in i..info.size {
                    let val = values[self.mat_entry(MatVarRef(b), i, j) as usize];
                    m[(i, j)] = val;
                    m[(j, i)] = val;
                }
            }
            min_eig = min_eig.min(m.symmetric_eigen().eigenvalues.min());
        }
        SdpSolution {
            status,
            values,
            objective,
            iterations: res.iterations,
            primal_residual: eq_res.max((-min_eig).max(0.0)),
            dual_residual: res.dual_res.max(res.primal_res),
            rel_gap: res.rel_gap,
            loosened: false,
            route: SolveRoute::NullspaceLmi,
        }
    }
}

pub(crate) enum VarLoc {
    Mat(usize, usize, usize),
    Free(usize),
}

#[cfg(test)]
mod tests;
