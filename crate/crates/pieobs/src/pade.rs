//! Padé reduction of the delay system to a delay-free ODE.
//!
//! Every delayed scalar signal path x_j(t-τ_i) or w_j(t-τ_i) that actually
//! feeds a dynamics or output matrix is routed through a diagonal Padé(m,m)
//! approximation of e^{-τ_i s}, realized as a cascade of first/second-order
//! sections built from the poles of the denominator Q_m(τ s). The diagonal
//! approximant is all-pass, so every section pairs a pole with its mirrored
//! zero, and the DC gain of every path is exactly one.

use crate::dde::DdeModel;
use nalgebra::{Complex, DMatrix, DVector};

/// State-space section cascade realizing P_m(τs)/Q_m(τs) with unit DC gain.
#[derive(Clone, Debug)]
struct Cascade {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
}

/// Delay-free LTI approximation of a [`DdeModel`].
#[derive(Clone, Debug)]
pub struct PadeOde {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub order: usize,
    /// n + order · (number of delayed scalar channels routed through blocks)
    pub dim: usize,
    pub n: usize,
    pub r: usize,
    pub p: usize,
    pub q: usize,
}

/// Coefficients of Q_m(x) for the diagonal Padé of e^{-x}; P_m(x) = Q_m(-x).
fn pade_denominator(m: usize) -> Vec<f64> {
    // c_k = (2m-k)! m! / ((2m)! k! (m-k)!)
    let mut c = vec![0.0; m + 1];
    c[0] = 1.0;
    for k in 1..=m {
        // ratio c_k / c_{k-1} = (m - k + 1) / ((2m - k + 1) k)
        c[k] = c[k - 1] * (m - k + 1) as f64 / (((2 * m - k + 1) * k) as f64);
    }
    c
}

/// Roots of a real polynomial via the companion matrix.
fn poly_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let deg = coeffs.len() - 1;
    assert!(deg >= 1);
    let lead = coeffs[deg];
    let mut comp = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    comp.complex_eigenvalues().iter().cloned().collect()
}

/// All-pass cascade for e^{-τ s} ≈ Q_m(-τs)/Q_m(τs).
fn pade_cascade(tau: f64, m: usize) -> Cascade {
    let q = pade_denominator(m);
    // Q_m(τ s) as a polynomial in s: coefficient of s^k is q[k] τ^k.
    let coeffs: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(k, &c)| c * tau.powi(k as i32))
        .collect();
    let mut roots = poly_roots(&coeffs);
    // deterministic ordering: by real part, then imaginary magnitude
    roots.sort_by(|a, b| {
        (a.re, a.im.abs(), a.im)
            .partial_cmp(&(b.re, b.im.abs(), b.im))
            .unwrap()
    });
    // Pair conjugates into second-order sections, keep real roots first-order.
    let mut used = vec![false; roots.len()];
    let mut sections: Vec<(Vec<f64>, Vec<f64>)> = Vec::new(); // (den, num) monic dens
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let root = roots[i];
        if root.im.abs() < 1e-9 * root.re.abs().max(1.0) {
            used[i] = true;
            // (s - p) denominator, numerator (-s - p) = -(s + p): all-pass pair
            sections.push((vec![-root.re, 1.0], vec![-root.re, -1.0]));
        } else {
            used[i] = true;
            let j = (i + 1..roots.len())
                .find(|&j| !used[j] && (roots[j] - root.conj()).norm() < 1e-6 * root.norm())
                .expect("conjugate root pairing");
            used[j] = true;
            // (s² - 2 Re p s + |p|²), numerator with mirrored zeros
            let re2 = 2.0 * root.re;
            let mag2 = root.norm_sqr();
            sections.push((vec![mag2, -re2, 1.0], vec![mag2, re2, 1.0]));
        }
    }
    // Realize each section in controllable canonical form and chain them.
    let total: usize = sections.iter().map(|(d, _)| d.len() - 1).sum();
    let mut a = DMatrix::zeros(total, total);
    let mut b = DVector::zeros(total);
    let mut c = DVector::zeros(total);
    let mut d_term = 1.0f64;
    let mut off = 0usize;
    // chain: input -> sec1 -> sec2 -> ... -> output
    // Running (c, d) of the cascade so far feeds the next section's input.
    let mut c_sofar: DVector<f64> = DVector::zeros(total);
    for (den, num) in &sections {
        let k = den.len() - 1;
        // monic denominator; numerator may have degree k with leading coef ±1
        let lead = den[k];
        let den: Vec<f64> = den.iter().map(|v| v / lead).collect();
        let num: Vec<f64> = num.iter().map(|v| v / lead).collect();
        // controllable canonical
        let mut a_s = DMatrix::zeros(k, k);
        for i in 0..k - 1 {
            a_s[(i, i + 1)] = 1.0;
        }
        for j in 0..k {
            a_s[(k - 1, j)] = -den[j];
        }
        let mut b_s = DVector::zeros(k);
        b_s[k - 1] = 1.0;
        // y = (num - d·den) acting on states + d·u with d = num[k]
        let d_s = num.get(k).copied().unwrap_or(0.0);
        let mut c_s = DVector::zeros(k);
        for j in 0..k {
            c_s[j] = num[j] - d_s * den[j];
        }
        // Diagonal balancing of the section: equalize the controllability
        // and observability gramian diagonals (exact same transfer function,
        // keeps the cascade's state scales near one another).
        let (a_s, b_s, c_s) = balance_section(a_s, b_s, c_s);
        // chain into the global realization
        a.view_mut((off, off), (k, k)).copy_from(&a_s);
        // input of this section = output of the cascade so far
        for i in 0..k {
            if b_s[i] != 0.0 {
                for t in 0..off {
                    a[(off + i, t)] += b_s[i] * c_sofar[t];
                }
                b[off + i] += b_s[i] * d_term;
            }
        }
        // new cascade output
        let mut c_new = DVector::zeros(total);
        for t in 0..off {
            c_new[t] = d_s * c_sofar[t];
        }
        for i in 0..k {
            c_new[off + i] = c_s[i];
        }
        d_term *= d_s;
        c_sofar = c_new;
        off += k;
    }
    c.copy_from(&c_sofar);
    Cascade { a, b, c, d: d_term }
}

/// Diagonal state rescaling equalizing the gramian diagonals of a small
/// stable section. Solves the two Lyapunov equations densely (k ≤ 2).
fn balance_section(
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let k = a.nrows();
    // vec-form Lyapunov: (I⊗A + A⊗I) vec(W) = -vec(RHS)
    let solve_lyap = |rhs: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        let mut m = DMatrix::zeros(k * k, k * k);
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    m[(i * k + j, l * k + j)] += a[(i, l)];
                    m[(i * k + j, i * k + l)] += a[(j, l)];
                }
            }
        }
        let v = DVector::from_fn(k * k, |idx, _| -rhs[(idx / k, idx % k)]);
        let w = m.lu().solve(&v)?;
        Some(DMatrix::from_fn(k, k, |i, j| w[i * k + j]))
    };
    let wc = solve_lyap(&(&b * b.transpose()));
    let wo = solve_lyap(&(&c * c.transpose()));
    let (Some(wc), Some(wo)) = (wc, wo) else {
        return (a, b, c);
    };
    let mut d = DVector::from_element(k, 1.0);
    for i in 0..k {
        let (ci, oi) = (wc[(i, i)].abs(), wo[(i, i)].abs());
        if ci > 1e-300 && oi > 1e-300 {
            d[i] = (ci / oi).powf(0.25).clamp(1e-6, 1e6);
        }
    }
    // x̃ = D⁻¹ x: Ã = D⁻¹AD, b̃ = D⁻¹b, c̃ = Dc
    let mut a2 = a;
    for i in 0..k {
        for j in 0..k {
            a2[(i, j)] = a2[(i, j)] * d[j] / d[i];
        }
    }
    let b2 = DVector::from_fn(k, |i, _| b[i] / d[i]);
    let c2 = DVector::from_fn(k, |i, _| c[i] * d[i]);
    (a2, b2, c2)
}

/// Frequency response of the cascade at s = jω.
fn cascade_freq(cas: &Cascade, omega: f64) -> Complex<f64> {
    let n = cas.a.nrows();
    let jw = Complex::new(0.0, omega);
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = Complex::new(-cas.a[(i, j)], 0.0);
        }
        m[(i, i)] += jw;
    }
    let rhs = DVector::from_fn(n, |i, _| Complex::new(cas.b[i], 0.0));
    let x = m.lu().solve(&rhs).expect("jwI - A invertible");
    let mut y = Complex::new(cas.d, 0.0);
    for i in 0..n {
        y += Complex::new(cas.c[i], 0.0) * x[i];
    }
    y
}

/// Build the delay-free approximation, instantiating one Padé block per
/// delayed scalar channel that is actually used.
pub fn pade_reduce(model: &DdeModel, order: usize) -> PadeOde {
    assert!(order >= 1, "Padé order must be at least 1");
    let (n, r, p, q) = (model.n, model.r, model.p, model.q);
    let k = model.n_delays();
    // Which scalar channels are used per delay: state j used if column j of
    // A_i, C1_i or C2_i is nonzero; disturbance j likewise in B_i, D1_i, D2_i.
    struct Block {
        delay: usize,
        /// source signal: state index (< n) or n + disturbance index
        source: usize,
        cas: Cascade,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for i in 0..k {
        let col_used = |mats: [&DMatrix<f64>; 3], j: usize| -> bool {
            mats.iter().any(|m| m.column(j).norm() > 0.0)
        };
        for j in 0..n {
            if col_used([&model.ai[i], &model.c1i[i], &model.c2i[i]], j) {
                blocks.push(Block {
                    delay: i,
                    source: j,
                    cas: pade_cascade(model.taus[i], order),
                });
            }
        }
        for j in 0..r {
            if col_used([&model.bi[i], &model.d1i[i], &model.d2i[i]], j) {
                blocks.push(Block {
                    delay: i,
                    source: n + j,
                    cas: pade_cascade(model.taus[i], order),
                });
            }
        }
    }
    let extra: usize = blocks.iter().map(|b| b.cas.a.nrows()).sum();
    let dim = n + extra;
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DMatrix::zeros(dim, r);
    let mut c1 = DMatrix::zeros(p, dim);
    let mut c2 = DMatrix::zeros(q, dim);
    let mut d1 = model.d1.clone();
    let mut d2 = model.d2.clone();
    a.view_mut((0, 0), (n, n)).copy_from(&model.a0);
    b.view_mut((0, 0), (n, r)).copy_from(&model.b);
    c1.view_mut((0, 0), (p, n)).copy_from(&model.c1);
    c2.view_mut((0, 0), (q, n)).copy_from(&model.c2);

    let mut off = n;
    for blk in &blocks {
        let kdim = blk.cas.a.nrows();
        a.view_mut((off, off), (kdim, kdim)).copy_from(&blk.cas.a);
        // block input = source signal
        if blk.source < n {
            for i in 0..kdim {
                a[(off + i, blk.source)] += blk.cas.b[i];
            }
        } else {
            let j = blk.source - n;
            for i in 0..kdim {
                b[(off + i, j)] += blk.cas.b[i];
            }
        }
        // delayed output = c·ξ + d·source feeds the delayed-coefficient columns
        let i = blk.delay;
        let (a_col, c1_col, c2_col) = if blk.source < n {
            let j = blk.source;
            (
                model.ai[i].column(j).into_owned(),
                model.c1i[i].column(j).into_owned(),
                model.c2i[i].column(j).into_owned(),
            )
        } else {
            let j = blk.source - n;
            (
                model.bi[i].column(j).into_owned(),
                model.d1i[i].column(j).into_owned(),
                model.d2i[i].column(j).into_owned(),
            )
        };
        for t in 0..kdim {
            let ct = blk.cas.c[t];
            if ct != 0.0 {
                for row in 0..n {
                    a[(row, off + t)] += a_col[row] * ct;
                }
                for row in 0..p {
                    c1[(row, off + t)] += c1_col[row] * ct;
                }
                for row in 0..q {
                    c2[(row, off + t)] += c2_col[row] * ct;
                }
            }
        }
        let d = blk.cas.d;
        if d != 0.0 {
            if blk.source < n {
                let j = blk.source;
                for row in 0..n {
                    a[(row, j)] += a_col[row] * d;
                }
                for row in 0..p {
                    c1[(row, j)] += c1_col[row] * d;
                }
                for row in 0..q {
                    c2[(row, j)] += c2_col[row] * d;
                }
            } else {
                let j = blk.source - n;
                for row in 0..n {
                    b[(row, j)] += a_col[row] * d;
                }
                for row in 0..p {
                    d1[(row, j)] += c1_col[row] * d;
                }
                for row in 0..q {
                    d2[(row, j)] += c2_col[row] * d;
                }
            }
        }
        off += kdim;
    }
    PadeOde {
        a,
        b,
        c1,
        c2,
        d1,
        d2,
        order,
        dim,
        n,
        r,
        p,
        q,
    }
}

impl PadeOde {
    /// View the reduced system as a delay-free plant model.
    pub fn as_model(&self) -> DdeModel {
        DdeModel {
            n: self.dim,
            r: self.r,
            p: self.p,
            q: self.q,
            taus: Vec::new(),
            a0: self.a.clone(),
            ai: Vec::new(),
            b: self.b.clone(),
            bi: Vec::new(),
            c1: self.c1.clone(),
            c1i: Vec::new(),
            d1: self.d1.clone(),
            d1i: Vec::new(),
            c2: self.c2.clone(),
            c2i: Vec::new(),
            d2: self.d2.clone(),
            d2i: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn first_order_pade_factor() {
        // order 1, τ = 1: (1 - s/2)/(1 + s/2); DC gain exactly 1.
        let cas = pade_cascade(1.0, 1);
        assert_eq!(cas.a.nrows(), 1);
        let dc = cascade_freq(&cas, 0.0);
        assert!((dc.re - 1.0).abs() < 1e-12 && dc.im.abs() < 1e-14);
        // pole at -2, zero at +2
        assert!((cas.a[(0, 0)] + 2.0).abs() < 1e-12);
        // value at ω = 2: e^{-j·2} has |·| = 1; Padé(1,1) = (1-j)/(1+j) = -j
        let v = cascade_freq(&cas, 2.0);
        assert!((v - Complex::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn tenth_order_matches_delay_on_frequency_sweep() {
        for &tau in &[0.3, 1.0, 2.5] {
            let cas = pade_cascade(tau, 10);
            assert_eq!(cas.a.nrows(), 10);
            for k in 0..=50 {
                let omega_tau = 5.0 * k as f64 / 50.0;
                let omega = omega_tau / tau;
                let approx = cascade_freq(&cas, omega);
                let exact = Complex::new(0.0, -omega * tau).exp();
                assert!(
                    (approx - exact).norm() <= 1e-6,
                    "tau {tau} ωτ {omega_tau}: err {:.2e}",
                    (approx - exact).norm()
                );
            }
        }
    }

    #[test]
    fn delay_free_model_passes_through() {
        let doc = json!({
            "n": 2, "r": 1, "p": 1, "q": 1,
            "A0": [[-1.0, 0.0], [1.0, -2.0]],
            "B": [[1.0], [0.0]],
            "C1": [[1.0, 0.0]],
            "C2": [[0.0, 1.0]]
        });
        let m = crate::dde::DdeModel::parse(&doc).unwrap();
        let red = pade_reduce(&m, 10);
        assert_eq!(red.dim, 2);
        assert_eq!(red.a, m.a0);
        assert_eq!(red.b, m.b);
    }

    #[test]
    fn example1_routes_three_channels() {
        let m = crate::dde::DdeModel::parse(&crate::dde::tests::example1_json()).unwrap();
        let red = pade_reduce(&m, 10);
        // x1, x2 delayed (A1, C11, C21 columns), w2 delayed (D21 column 2)
        assert_eq!(red.dim, 2 + 3 * 10);
    }

    #[test]
    fn dc_gain_preserved_exactly() {
        // DC of the reduced system equals DC of the DDE: G(0) uses Σ delays
        // at gain one.
        let m = crate::dde::DdeModel::parse(&crate::dde::tests::example1_json()).unwrap();
        let red = pade_reduce(&m, 6);
        // DDE DC gain of w→z: C1t (A0t)⁻¹... with A_total = A0 + A1 etc.
        let a_tot = &m.a0 + &m.ai[0];
        let b_tot = m.b.clone();
        let c1_tot = &m.c1 + &m.c1i[0];
        let dc_dde = -&c1_tot * a_tot.lu().solve(&b_tot).unwrap() + &m.d1;
        let dc_red = -&red.c1 * red.a.clone().lu().solve(&red.b).unwrap() + &red.d1;
        assert!((dc_dde - dc_red).norm() < 1e-9);
    }
}
