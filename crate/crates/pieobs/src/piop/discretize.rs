//! Dense discretization of a 4-PI operator on Gauss-Legendre collocation
//! coordinates [x; √w_j φ(s_j)].
//!
//! Multipliers act diagonally on node values. Full-range and one-sided
//! integrals are applied to the degree-(N-1) interpolant of the node values
//! and integrated exactly, via moment matrices of the Lagrange cardinal
//! functions in the shifted-Legendre basis. For polynomial kernels this makes
//! the matrix the exact representation of the operator restricted to
//! polynomials of degree < N, so discretized compositions reproduce symbolic
//! compositions to roundoff whenever the left factor has matching one-sided
//! kernels (R1 = R2), and to quadrature accuracy otherwise.

use super::PiOp;
use crate::quad::{gauss_legendre, shifted_legendre, shifted_legendre_lower_integral};
use nalgebra::DMatrix;

/// Moment matrices m_b[i][j] = ∫_{-1}^{s_i} θ^b ℓ_j(θ) dθ for b = 0..=max_b,
/// plus full moments f_b[j] = ∫_{-1}^{0} θ^b ℓ_j(θ) dθ = w_j s_j^b.
struct Moments {
    lower: Vec<DMatrix<f64>>,
    full: Vec<Vec<f64>>,
}

fn cardinal_moments(nodes: &[f64], weights: &[f64], max_b: usize) -> Moments {
    let n = nodes.len();
    // Shifted-Legendre coefficients of ℓ_j: c[j][k] = (2k+1) w_j P̃_k(s_j).
    let mut coef: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| (2.0 * k as f64 + 1.0) * weights[j] * shifted_legendre(k, nodes[j]))
                .collect()
        })
        .collect();
    // Antiderivative values L_k(s_i) = ∫_{-1}^{s_i} P̃_k.
    let max_len = n + max_b;
    let lk: Vec<Vec<f64>> = (0..max_len)
        .map(|k| {
            nodes
                .iter()
                .map(|&s| shifted_legendre_lower_integral(k, s))
                .collect()
        })
        .collect();
    let mut lower = Vec::with_capacity(max_b + 1);
    let mut full = Vec::with_capacity(max_b + 1);
    for b in 0..=max_b {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for (k, &c) in coef[j].iter().enumerate() {
                if c != 0.0 {
                    for i in 0..n {
                        m[(i, j)] += c * lk[k][i];
                    }
                }
            }
        }
        lower.push(m);
        full.push((0..n).map(|j| weights[j] * nodes[j].powi(b as i32)).collect());
        if b < max_b {
            // Multiply every ℓ_j expansion by θ in the shifted basis:
            // θ P̃_k = ((k+1) P̃_{k+1} + k P̃_{k-1}) / (2(2k+1)) - P̃_k / 2.
            for cj in coef.iter_mut() {
                let old = cj.clone();
                cj.resize(old.len() + 1, 0.0);
                for v in cj.iter_mut() {
                    *v = 0.0;
                }
                for (k, &c) in old.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let kf = k as f64;
                    cj[k + 1] += c * (kf + 1.0) / (2.0 * (2.0 * kf + 1.0));
                    if k > 0 {
                        cj[k - 1] += c * kf / (2.0 * (2.0 * kf + 1.0));
                    }
                    cj[k] -= c * 0.5;
                }
            }
        }
    }
    Moments { lower, full }
}

pub(super) fn discretize(op: &PiOp, n_nodes: usize) -> DMatrix<f64> {
    assert!(op.is_numeric(), "operator carries decision variables");
    let d = op.dims;
    let (nodes, weights) = gauss_legendre(n_nodes);
    let sqw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let rows = d.m_out + n_nodes * d.n_out;
    let cols = d.m_in + n_nodes * d.n_in;
    let mut out = DMatrix::zeros(rows, cols);

    out.view_mut((0, 0), (d.m_out, d.m_in)).copy_from(&op.p.to_dense());

    if d.n_in > 0 && d.m_out > 0 {
        for j in 0..n_nodes {
            let q1 = op.q1.eval(nodes[j]) * sqw[j];
            out.view_mut((0, d.m_in + j * d.n_in), (d.m_out, d.n_in)).copy_from(&q1);
        }
    }
    if d.n_out > 0 && d.m_in > 0 {
        for i in 0..n_nodes {
            let ql = op.q_low.eval(nodes[i]) * sqw[i];
            out.view_mut((d.m_out + i * d.n_out, 0), (d.n_out, d.m_in)).copy_from(&ql);
        }
    }
    if d.n_out > 0 && d.n_in > 0 {
        let (r1s, r1t) = op.r1.degrees();
        let (r2s, r2t) = op.r2.degrees();
        let max_b = r1t.max(r2t);
        let need_moments = !op.r1.is_zero() || !op.r2.is_zero();
        let moments = if need_moments {
            Some(cardinal_moments(&nodes, &weights, max_b))
        } else {
            None
        };
        // θ-coefficient rows of the kernels, evaluated in s at each node:
        // R(s_i, θ) = Σ_b ρ_b(s_i) θ^b.
        let rho = |k: &crate::poly::PolyMat2, s: f64, b: usize, ds: usize| -> DMatrix<f64> {
            let mut m = DMatrix::zeros(d.n_out, d.n_in);
            if b > k.deg_t {
                return m;
            }
            for a in 0..=ds.min(k.deg_s) {
                let c = k.coeff(a, b);
                if !c.is_zero() {
                    m += c.to_dense() * s.powi(a as i32);
                }
            }
            m
        };
        for i in 0..n_nodes {
            let s = nodes[i];
            let r0 = op.r0.eval(s);
            let row0 = d.m_out + i * d.n_out;
            for j in 0..n_nodes {
                let mut blk = DMatrix::zeros(d.n_out, d.n_in);
                if let Some(m) = &moments {
                    for b in 0..=max_b {
                        let lo = m.lower[b][(i, j)];
                        if b <= r1t && lo != 0.0 {
                            blk += rho(&op.r1, s, b, r1s) * lo;
                        }
                        if b <= r2t {
                            let up = m.full[b][j] - lo;
                            if up != 0.0 {
                                blk += rho(&op.r2, s, b, r2s) * up;
                            }
                        }
                    }
                    blk *= sqw[i] / sqw[j];
                }
                if i == j {
                    blk += &r0;
                }
                out.view_mut((row0, d.m_in + j * d.n_in), (d.n_out, d.n_in)).copy_from(&blk);
            }
        }
    }
    out
}
