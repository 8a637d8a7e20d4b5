//! Dense primal-dual interior-point engine.
//!
//! Solves
//!
//! ```text
//! min  Σ_b ⟨C_b, X_b⟩ + c_fᵀ u
//! s.t. Σ_b ⟨A_kb, X_b⟩ + f_kᵀ u = b_k      k = 1..m
//!      X_b ⪰ 0,  u free
//! ```
//!
//! with a Mehrotra predictor-corrector using Nesterov-Todd scaling. The
//! Newton systems reduce to the Schur complement M = [⟨A_i, W A_j W⟩] plus a
//! saddle block for the free variables. Everything is dense and single
//! threaded with a fixed summation order, so runs are bitwise reproducible.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct ConRow {
    /// (block, i, j, v) with i ≤ j: coefficient v on entry X_b[i,j] (= X_b[j,i]).
    pub entries: Vec<(u32, u32, u32, f64)>,
    /// (free index, v)
    pub free: Vec<(u32, f64)>,
}

#[derive(Clone, Debug)]
pub struct ConicData {
    pub block_sizes: Vec<usize>,
    pub n_free: usize,
    pub c_blocks: Vec<DMatrix<f64>>,
    pub c_free: DVector<f64>,
    pub rows: Vec<ConRow>,
    pub rhs: DVector<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct EngineOpts {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct EngineResult {
    pub status: EngineStatus,
    pub x_blocks: Vec<DMatrix<f64>>,
    pub u: DVector<f64>,
    pub y: DVector<f64>,
    pub s_blocks: Vec<DMatrix<f64>>,
    pub iterations: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub rel_gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
}

struct State {
    x: Vec<DMatrix<f64>>,
    s: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    u: DVector<f64>,
}

struct Metrics {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rf: DVector<f64>,
    mu: f64,
    pobj: f64,
    dobj: f64,
    rel_gap: f64,
    prim_res: f64,
    dual_res: f64,
}

fn metrics(data: &ConicData, st: &State, norm_b: f64, norm_c: f64, total_dim: usize) -> Metrics {
    let nb = data.block_sizes.len();
    let rp = &data.rhs - apply_a(data, &st.x, &st.u);
    let aty = apply_at(data, &st.y);
    let rd: Vec<DMatrix<f64>> = (0..nb)
        .map(|b| &data.c_blocks[b] - &st.s[b] - &aty[b])
        .collect();
    let rf = &data.c_free - apply_at_free(data, &st.y);
    let mu_num: f64 = (0..nb).map(|b| st.x[b].dot(&st.s[b])).sum();
    let mu = mu_num / total_dim as f64;
    let pobj: f64 = (0..nb).map(|b| data.c_blocks[b].dot(&st.x[b])).sum::<f64>()
        + data.c_free.dot(&st.u);
    let dobj = data.rhs.dot(&st.y);
    let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs().max(dobj.abs()));
    let prim_res = rp.norm() / norm_b;
    let dual_res = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rf.norm_squared())
        .sqrt()
        / norm_c;
    Metrics {
        rp,
        rd,
        rf,
        mu,
        pobj,
        dobj,
        rel_gap,
        prim_res,
        dual_res,
    }
}

/// Heuristic primal-infeasibility test: ŷ = y/‖y‖ approximates an improving
/// ray when -A*ŷ ⪰ 0 (up to tolerance), Fᵀŷ ≈ 0 and bᵀŷ > 0.
fn certifies_infeasibility(data: &ConicData, y: &DVector<f64>) -> bool {
    let ynorm = y.norm();
    if ynorm < 1e-8 {
        return false;
    }
    let yhat = y / ynorm;
    let b_dir = data.rhs.dot(&yhat);
    if b_dir <= 1e-8 {
        return false;
    }
    let free_part = apply_at_free(data, &yhat).norm();
    if free_part > 1e-7 {
        return false;
    }
    let aty = apply_at(data, &yhat);
    for blk in &aty {
        if blk.nrows() == 0 {
            continue;
        }
        let scale = blk.norm().max(1e-12);
        let max_eig = blk.clone().symmetric_eigen().eigenvalues.max();
        // need -A*ŷ ⪰ 0, i.e. A*ŷ ⪯ 0 up to tolerance
        if max_eig > 1e-6 * scale.max(b_dir) {
            return false;
        }
    }
    true
}

fn result_from(status: EngineStatus, st: &State, met: &Metrics, iterations: usize) -> EngineResult {
    EngineResult {
        status,
        x_blocks: st.x.clone(),
        u: st.u.clone(),
        y: st.y.clone(),
        s_blocks: st.s.clone(),
        iterations,
        primal_obj: met.pobj,
        dual_obj: met.dobj,
        rel_gap: met.rel_gap,
        primal_res: met.prim_res,
        dual_res: met.dual_res,
    }
}

/// tr(A_k X_b) over all blocks plus the free part.
fn apply_a(data: &ConicData, x: &[DMatrix<f64>], u: &DVector<f64>) -> DVector<f64> {
    let m = data.rows.len();
    let mut out = DVector::zeros(m);
    for (k, row) in data.rows.iter().enumerate() {
        let mut acc = 0.0;
        for &(b, i, j, v) in &row.entries {
            acc += v * x[b as usize][(i as usize, j as usize)];
        }
        for &(f, v) in &row.free {
            acc += v * u[f as usize];
        }
        out[k] = acc;
    }
    out
}

/// A*(y) accumulated into per-block symmetric matrices.
fn apply_at(data: &ConicData, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = data
        .block_sizes
        .iter()
        .map(|&s| DMatrix::zeros(s, s))
        .collect();
    for (k, row) in data.rows.iter().enumerate() {
        let yk = y[k];
        if yk == 0.0 {
            continue;
        }
        for &(b, i, j, v) in &row.entries {
            let (b, i, j) = (b as usize, i as usize, j as usize);
            if i == j {
                out[b][(i, i)] += v * yk;
            } else {
                out[b][(i, j)] += 0.5 * v * yk;
                out[b][(j, i)] += 0.5 * v * yk;
            }
        }
    }
    out
}

fn apply_at_free(data: &ConicData, y: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(data.n_free);
    for (k, row) in data.rows.iter().enumerate() {
        let yk = y[k];
        if yk == 0.0 {
            continue;
        }
        for &(f, v) in &row.free {
            out[f as usize] += v * yk;
        }
    }
    out
}

/// Largest α ∈ (0, 1] with X + α ΔX ⪰ 0, given the Cholesky factor of X.
fn max_step(x_chol_inv: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    // λ_min of L⁻¹ ΔX L⁻ᵀ
    let b = x_chol_inv * dx * x_chol_inv.transpose();
    let b = (&b + b.transpose()) * 0.5;
    let lmin = b.symmetric_eigen().eigenvalues.min();
    if lmin >= -1e-14 {
        1.0
    } else {
        (-1.0 / lmin).min(1.0)
    }
}

fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut acc = 0.0;
            for k in j..i {
                acc += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -acc / l[(i, i)];
        }
    }
    inv
}

/// Indices of rows of E that are linear combinations of earlier rows,
/// detected through pivot skips in a semidefinite Cholesky of the Gram
/// matrix E Eᵀ.
pub(crate) fn dependent_rows(gram: &DMatrix<f64>) -> Vec<bool> {
    let n = gram.nrows();
    let mut skipped = vec![false; n];
    let mut a = gram.clone();
    let max_diag = (0..n).map(|i| gram[(i, i)].abs()).fold(0.0f64, f64::max);
    let tol = 1e-12 * max_diag.max(1e-300) * (n as f64).max(1.0).sqrt();
    for j in 0..n {
        let mut d = a[(j, j)];
        for t in 0..j {
            let v = a[(j, t)];
            d -= v * v;
        }
        if d <= tol {
            skipped[j] = true;
            a[(j, j)] = 1.0;
            for i in (j + 1)..n {
                a[(i, j)] = 0.0;
            }
            continue;
        }
        let d = d.sqrt();
        a[(j, j)] = d;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for t in 0..j {
                v -= a[(i, t)] * a[(j, t)];
            }
            a[(i, j)] = v / d;
        }
    }
    skipped
}

/// Blocked in-place Cholesky. With `semidefinite`, pivots below the relative
/// tolerance are skipped (unit diagonal, zeroed column), which produces a
/// factor solving consistent singular systems with the redundant components
/// pinned to zero; without it, a nonpositive pivot aborts.
fn cholesky_impl(m: &DMatrix<f64>, semidefinite: bool) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mut a = m.clone();
    let max_diag = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max);
    let skip_tol = 1e-12 * max_diag.max(1e-300) * (n as f64).max(1.0).sqrt();
    const NB: usize = 64;
    let mut k = 0;
    while k < n {
        let nb = NB.min(n - k);
        // factor diagonal block; earlier panels are already applied through
        // their trailing updates, so only columns within this panel remain.
        for j in k..k + nb {
            let mut d = a[(j, j)];
            for t in k..j {
                let v = a[(j, t)];
                d -= v * v;
            }
            if semidefinite && d <= skip_tol {
                a[(j, j)] = 1.0;
                for i in (j + 1)..n {
                    a[(i, j)] = 0.0;
                }
                continue;
            }
            if d <= 0.0 {
                return None;
            }
            let d = d.sqrt();
            a[(j, j)] = d;
            for i in (j + 1)..n {
                let mut v = a[(i, j)];
                // subtract the already-formed part of row i against row j
                for t in k..j {
                    v -= a[(i, t)] * a[(j, t)];
                }
                a[(i, j)] = v / d;
            }
        }
        // trailing update: A[k+nb.., k+nb..] -= P Pᵀ with P = A[k+nb.., k..k+nb]
        let start = k + nb;
        if start < n {
            for i in start..n {
                for j in start..=i {
                    let mut acc = 0.0;
                    for t in k..k + nb {
                        acc += a[(i, t)] * a[(j, t)];
                    }
                    a[(i, j)] -= acc;
                }
            }
        }
        k += nb;
    }
    // zero the strict upper triangle
    for i in 0..n {
        for j in (i + 1)..n {
            a[(i, j)] = 0.0;
        }
    }
    Some(a)
}

fn cholesky_dense(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    cholesky_impl(m, false)
}

fn chol_solve(l: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = rhs.clone();
    for i in 0..n {
        let mut v = x[i];
        for k in 0..i {
            v -= l[(i, k)] * x[k];
        }
        x[i] = v / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut v = x[i];
        for k in (i + 1)..n {
            v -= l[(k, i)] * x[k];
        }
        x[i] = v / l[(i, i)];
    }
    x
}

struct Scaling {
    w: Vec<DMatrix<f64>>,
    r: Vec<DMatrix<f64>>,
    r_inv: Vec<DMatrix<f64>>,
    s_inv: Vec<DMatrix<f64>>,
    x_chol_inv: Vec<DMatrix<f64>>,
    s_chol_inv: Vec<DMatrix<f64>>,
}

fn nt_scaling(x: &[DMatrix<f64>], s: &[DMatrix<f64>]) -> Option<Scaling> {
    let nb = x.len();
    let mut out = Scaling {
        w: Vec::with_capacity(nb),
        r: Vec::with_capacity(nb),
        r_inv: Vec::with_capacity(nb),
        s_inv: Vec::with_capacity(nb),
        x_chol_inv: Vec::with_capacity(nb),
        s_chol_inv: Vec::with_capacity(nb),
    };
    for b in 0..nb {
        let lx = cholesky_dense(&x[b])?;
        let ls = cholesky_dense(&s[b])?;
        let lx_inv = lower_triangular_inverse(&lx);
        let ls_inv = lower_triangular_inverse(&ls);
        // A2 = Lxᵀ S Lx, eig A2 = Q Λ Qᵀ, R = Lx Q Λ^{-1/4}; W = R Rᵀ
        let a2 = lx.transpose() * &s[b] * &lx;
        let a2 = (&a2 + a2.transpose()) * 0.5;
        let eig = a2.symmetric_eigen();
        if eig.eigenvalues.min() <= 0.0 {
            return None;
        }
        let q = &eig.eigenvectors;
        let lam_mq: DVector<f64> = eig.eigenvalues.map(|v| v.powf(-0.25));
        let lam_pq: DVector<f64> = eig.eigenvalues.map(|v| v.powf(0.25));
        let mut r = &lx * q;
        for (c, &d) in lam_mq.iter().enumerate() {
            r.column_mut(c).scale_mut(d);
        }
        // R⁻¹ = Λ^{1/4} Qᵀ Lx⁻¹
        let mut r_inv = q.transpose() * &lx_inv;
        for (rw, &d) in lam_pq.iter().enumerate() {
            r_inv.row_mut(rw).scale_mut(d);
        }
        let w = &r * r.transpose();
        let s_inv = ls_inv.transpose() * &ls_inv;
        out.w.push((&w + w.transpose()) * 0.5);
        out.r.push(r);
        out.r_inv.push(r_inv);
        out.s_inv.push((&s_inv + s_inv.transpose()) * 0.5);
        out.x_chol_inv.push(lx_inv);
        out.s_chol_inv.push(ls_inv);
    }
    Some(out)
}

/// W A_k W for a sparse constraint, via symmetric outer products.
fn waw(w: &DMatrix<f64>, row: &ConRow, block: usize) -> DMatrix<f64> {
    let n = w.nrows();
    let mut u = DMatrix::zeros(n, n);
    for &(b, i, j, v) in &row.entries {
        if b as usize != block {
            continue;
        }
        let (i, j) = (i as usize, j as usize);
        if i == j {
            // v · w_i w_iᵀ
            for r in 0..n {
                let wri = w[(r, i)] * v;
                if wri == 0.0 {
                    continue;
                }
                for c in 0..n {
                    u[(r, c)] += wri * w[(i, c)];
                }
            }
        } else {
            let half = 0.5 * v;
            for r in 0..n {
                let a = w[(r, i)] * half;
                let b2 = w[(r, j)] * half;
                if a == 0.0 && b2 == 0.0 {
                    continue;
                }
                for c in 0..n {
                    u[(r, c)] += a * w[(j, c)] + b2 * w[(i, c)];
                }
            }
        }
    }
    u
}

fn trace_dot(row: &ConRow, block: usize, u: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for &(b, i, j, v) in &row.entries {
        if b as usize == block {
            acc += v * u[(i as usize, j as usize)];
        }
    }
    acc
}

pub fn solve_engine(data: &ConicData, opts: &EngineOpts) -> EngineResult {
    let m = data.rows.len();
    let nb = data.block_sizes.len();
    let n_free = data.n_free;
    let total_dim: usize = data.block_sizes.iter().sum::<usize>().max(1);

    // Data norms for scaled residuals and the starting point.
    let norm_b = data.rhs.norm().max(1.0);
    let norm_c = data
        .c_blocks
        .iter()
        .map(|c| c.norm())
        .sum::<f64>()
        .max(data.c_free.norm())
        .max(1.0);
    // Initial-point scale in the spirit of SDPT3: let X start near the
    // feasibility scale implied by the right-hand sides, and S near the
    // objective/constraint scale.
    let row_norms: Vec<f64> = data
        .rows
        .iter()
        .map(|r| {
            r.entries
                .iter()
                .map(|e| e.3 * e.3)
                .chain(r.free.iter().map(|e| e.1 * e.1))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let max_row_norm = row_norms.iter().cloned().fold(1.0f64, f64::max);
    let feas_scale = data
        .rhs
        .iter()
        .zip(&row_norms)
        .map(|(&b, &a)| (1.0 + b.abs()) / (1.0 + a))
        .fold(0.0f64, f64::max);
    let nd = total_dim as f64;
    let xi_p = nd.sqrt().max(10.0).max(nd.sqrt() * feas_scale);
    let xi_d = nd
        .sqrt()
        .max(10.0)
        .max((1.0 + norm_c.max(max_row_norm)) / nd.sqrt());

    let mut st = State {
        x: data
            .block_sizes
            .iter()
            .map(|&s| DMatrix::identity(s, s) * xi_p)
            .collect(),
        s: data
            .block_sizes
            .iter()
            .map(|&s| DMatrix::identity(s, s) * xi_d)
            .collect(),
        y: DVector::zeros(m),
        u: DVector::zeros(n_free),
    };

    let mut best: Option<(f64, EngineResult)> = None;
    let mut bad_steps = 0usize;
    let trace = std::env::var("PIEOBS_SDP_TRACE").is_ok();

    for iter in 0..=opts.max_iter {
        let met = metrics(data, &st, norm_b, norm_c, total_dim);
        let (rp, rf, mu) = (met.rp.clone(), met.rf.clone(), met.mu);
        let rd = met.rd.clone();

        if met.prim_res <= opts.tol && met.dual_res <= opts.tol && met.rel_gap <= opts.tol {
            return result_from(EngineStatus::Optimal, &st, &met, iter);
        }
        // Track the best iterate by total merit.
        let merit = met.prim_res + met.dual_res + met.rel_gap;
        if best.as_ref().map_or(true, |(bm, _)| merit < *bm) {
            best = Some((
                merit,
                result_from(EngineStatus::NumericalFailure, &st, &met, iter),
            ));
        }

        // Infeasibility heuristics: an explicit improving-ray certificate in
        // y, or a diverging dual, or complementarity collapsing while the
        // primal residual stays.
        let ynorm = st.y.norm();
        if (ynorm > 10.0 * (1.0 + norm_b) || met.prim_res > 1e-2 && iter > 10)
            && certifies_infeasibility(data, &st.y)
        {
            return result_from(EngineStatus::Infeasible, &st, &met, iter);
        }
        if ynorm > 1e8 * norm_b && met.dobj > 0.0 && met.dual_res < 1e-6 {
            return result_from(EngineStatus::Infeasible, &st, &met, iter);
        }
        if mu < 1e-13 && met.prim_res > 1e-5 {
            return result_from(EngineStatus::Infeasible, &st, &met, iter);
        }
        if iter == opts.max_iter {
            break;
        }

        let scaling = match nt_scaling(&st.x, &st.s) {
            Some(sc) => sc,
            None => break,
        };

        // Schur complement M and free-variable coupling F.
        let mut schur = DMatrix::zeros(m, m);
        for b in 0..nb {
            // constraints touching this block
            let touching: Vec<usize> = (0..m)
                .filter(|&k| data.rows[k].entries.iter().any(|e| e.0 as usize == b))
                .collect();
            for &j in &touching {
                let u = waw(&scaling.w[b], &data.rows[j], b);
                for &k in &touching {
                    if k > j {
                        continue;
                    }
                    schur[(k, j)] += trace_dot(&data.rows[k], b, &u);
                }
            }
        }
        for j in 0..m {
            for k in (j + 1)..m {
                schur[(k, j)] = schur[(j, k)];
            }
        }
        let mut fmat = DMatrix::zeros(m, n_free);
        for (k, row) in data.rows.iter().enumerate() {
            for &(f, v) in &row.free {
                fmat[(k, f as usize)] = v;
            }
        }

        // Factor the Schur matrix after diagonal equilibration. Exactly
        // redundant constraint rows make it singular but consistent; the
        // semidefinite factorization pins those multiplier directions to
        // zero.
        let equil: DVector<f64> = schur
            .diagonal()
            .map(|d: f64| if d > 1e-300 { 1.0 / d.sqrt() } else { 1.0 });
        let mut schur_s = schur.clone();
        for i in 0..m {
            for j in 0..m {
                schur_s[(i, j)] *= equil[i] * equil[j];
            }
        }
        let schur_l = match cholesky_impl(&schur_s, true) {
            Some(l) => l,
            None => break,
        };
        // Iterative refinement keeps the saddle solve accurate once the
        // Schur matrix turns ill-conditioned near the optimum. Solves go
        // through the equilibrated factor.
        let schur_solve_refined = |h: &DVector<f64>| -> DVector<f64> {
            let solve_scaled = |r: &DVector<f64>| -> DVector<f64> {
                let rs = r.component_mul(&equil);
                chol_solve(&schur_l, &rs).component_mul(&equil)
            };
            let mut x = solve_scaled(h);
            for _ in 0..4 {
                let res = h - &schur * &x;
                if res.norm() <= 1e-13 * h.norm().max(1.0) {
                    break;
                }
                x += solve_scaled(&res);
            }
            x
        };

        // Saddle pieces for free variables: (Fᵀ M⁻¹ F) Δu = Fᵀ M⁻¹ h1 - rf.
        let g = if n_free > 0 {
            let mut g = DMatrix::zeros(m, n_free);
            for f in 0..n_free {
                let col = fmat.column(f).into_owned();
                g.set_column(f, &schur_solve_refined(&col));
            }
            Some(g)
        } else {
            None
        };
        let ff_lu = g.as_ref().map(|g| (fmat.transpose() * g).lu());
        let solve_kkt = |h1: &DVector<f64>, rfv: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
            match (&g, &ff_lu) {
                (Some(g), Some(lu)) => {
                    let t = schur_solve_refined(h1);
                    let rhs_u = g.transpose() * h1 - rfv;
                    let du = lu.solve(&rhs_u).unwrap_or_else(|| DVector::zeros(n_free));
                    let dy = t - g * &du;
                    (dy, du)
                }
                _ => (schur_solve_refined(h1), DVector::zeros(0)),
            }
        };

        // Direction for a given complementarity target Rc.
        let direction = |rc: &[DMatrix<f64>],
                         solve: &dyn Fn(&DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>)|
         -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>, DVector<f64>, DVector<f64>) {
            // h1 = rp - A(Rc - W Rd W)
            let mut h1 = rp.clone();
            let mut t_blocks = Vec::with_capacity(nb);
            for b in 0..nb {
                let wrdw = &scaling.w[b] * &rd[b] * &scaling.w[b];
                let t = &rc[b] - (&wrdw + wrdw.transpose()) * 0.5;
                t_blocks.push(t);
            }
            for (k, row) in data.rows.iter().enumerate() {
                let mut acc = 0.0;
                for b in 0..nb {
                    acc += trace_dot(row, b, &t_blocks[b]);
                }
                h1[k] -= acc;
            }
            let (dy, du) = solve(&h1, &rf);
            let aty_d = apply_at(data, &dy);
            let mut ds = Vec::with_capacity(nb);
            let mut dx = Vec::with_capacity(nb);
            for b in 0..nb {
                let dsb = &rd[b] - &aty_d[b];
                let wdsw = &scaling.w[b] * &dsb * &scaling.w[b];
                let dxb = &rc[b] - (&wdsw + wdsw.transpose()) * 0.5;
                let dxb = (&dxb + dxb.transpose()) * 0.5;
                ds.push((&dsb + dsb.transpose()) * 0.5);
                dx.push(dxb);
            }
            (dx, ds, dy, du)
        };

        // Predictor (affine scaling).
        let rc_aff: Vec<DMatrix<f64>> = (0..nb).map(|b| -&st.x[b]).collect();
        let (dxa, dsa, _dya, _dua) = direction(&rc_aff, &solve_kkt);
        let mut alpha_p = 1.0f64;
        let mut alpha_d = 1.0f64;
        for b in 0..nb {
            alpha_p = alpha_p.min(max_step(&scaling.x_chol_inv[b], &dxa[b]));
            alpha_d = alpha_d.min(max_step(&scaling.s_chol_inv[b], &dsa[b]));
        }
        let mut mu_aff = 0.0;
        for b in 0..nb {
            mu_aff += (&st.x[b] + &dxa[b] * alpha_p).dot(&(&st.s[b] + &dsa[b] * alpha_d));
        }
        mu_aff /= total_dim as f64;
        let mut sigma = (mu_aff / mu).max(0.0).powi(3).clamp(1e-10, 1.0);
        // Recentering safeguard: when the affine step collapses, spend the
        // iteration pulling back toward the central path.
        if alpha_p.min(alpha_d) < 0.05 {
            sigma = sigma.max(0.8);
        }

        // Corrector with the NT second-order term.
        let mut rc: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        for b in 0..nb {
            let t1 = &scaling.r_inv[b] * (&dxa[b] * &dsa[b]) * &scaling.r[b];
            let d2 = &scaling.r[b] * (&t1 + t1.transpose()) * 0.5 * scaling.r[b].transpose();
            let rcb = &scaling.s_inv[b] * (sigma * mu) - &st.x[b] - (&d2 + d2.transpose()) * 0.5;
            rc.push((&rcb + rcb.transpose()) * 0.5);
        }
        let (dx, ds, dy, du) = direction(&rc, &solve_kkt);
        let mut ap = 1.0f64;
        let mut ad = 1.0f64;
        for b in 0..nb {
            ap = ap.min(max_step(&scaling.x_chol_inv[b], &dx[b]));
            ad = ad.min(max_step(&scaling.s_chol_inv[b], &ds[b]));
        }
        let tau = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);

        if trace {
            eprintln!(
                "it {iter:3} mu {:9.2e} pres {:9.2e} dres {:9.2e} gap {:9.2e} sig {:7.1e} ap {:6.3} ad {:6.3} pobj {:12.5e}",
                mu, met.prim_res, met.dual_res, met.rel_gap, sigma, ap, ad, met.pobj
            );
        }
        for b in 0..nb {
            st.x[b] += &dx[b] * ap;
            st.s[b] += &ds[b] * ad;
            st.x[b] = (&st.x[b] + st.x[b].transpose()) * 0.5;
            st.s[b] = (&st.s[b] + st.s[b].transpose()) * 0.5;
        }
        st.y += &dy * ad;
        st.u += &du * ad;

        // progress safeguard
        let mu_new: f64 = (0..nb).map(|b| st.x[b].dot(&st.s[b])).sum::<f64>() / total_dim as f64;
        if mu_new > 0.999 * mu && iter > 5 {
            bad_steps += 1;
            if bad_steps >= 15 {
                break;
            }
        } else {
            bad_steps = 0;
        }
    }

    // Ran out of iterations or stalled: certify infeasibility if the dual
    // iterate carries a ray, otherwise report the best iterate seen.
    if certifies_infeasibility(data, &st.y) {
        let met = metrics(data, &st, norm_b, norm_c, total_dim);
        return result_from(EngineStatus::Infeasible, &st, &met, opts.max_iter);
    }
    match best {
        Some((merit, mut res)) => {
            if merit <= opts.tol {
                res.status = EngineStatus::Optimal;
            }
            res
        }
        None => EngineResult {
            status: EngineStatus::NumericalFailure,
            x_blocks: Vec::new(),
            u: DVector::zeros(0),
            y: DVector::zeros(0),
            s_blocks: Vec::new(),
            iterations: 0,
            primal_obj: f64::NAN,
            dual_obj: f64::NAN,
            rel_gap: f64::INFINITY,
            primal_res: f64::INFINITY,
            dual_res: f64::INFINITY,
        },
    }
}
