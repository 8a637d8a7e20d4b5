//! Assembly of the observer-synthesis operator inequality and its lowering
//! to semidefinite constraints.
//!
//! With F1 = 𝒫ℬ + 𝒵𝒟₂ and F2 = 𝒫𝒜 + 𝒵𝒞₂, the inequality is the 3×3
//! self-adjoint block operator over [w; v_e; x] ∈ Z_{r+p+n, ns}
//!
//! ```text
//! [ ℬ_T*F1 + (·)* − γI   −𝒟₁ᵀ     −ℬ_T*F2 − F1*𝒯 ]
//! [        (·)*          −γI           𝒞₁        ]  ≺ 0
//! [        (·)*          (·)*   F2*𝒯 + (·)*      ]
//! ```
//!
//! Strict negativity is enforced by matching −(operator) − ε_neg·diag(I, 0)
//! against a Gram-certificate operator ∫ F(s)ᵀ T F(s) ds with T ⪰ 0 and
//!
//! ```text
//! F(s) = [x; Z1c(s)φ(s); ∫_{-1}^s Z2c(s,θ)φ(θ)dθ; ∫_s^0 Z3c(s,θ)φ(θ)dθ]
//! ```
//!
//! expanded symbolically through the operator algebra, coefficient by
//! coefficient. The margin applies to the finite block only: the inequality
//! operator has no pointwise multiplier kernel (composition with the
//! generator annihilates it), so a uniform margin on the L₂ part would be
//! unsatisfiable by construction.

use crate::dde::PieSystem;
use crate::piop::{OpDims, PiOp};
use crate::poly::{PolyMat1, PolyMat2, SMat, Var1};
use crate::scalar::Scalar;
use crate::sdp::{MatVarRef, SdpProblem};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoweringError {
    #[error(
        "negativity certificate degrees (d1={d1}, d2={d2}) cannot match kernel {kernel} \
         coefficient {slot}; increase the certificate degrees"
    )]
    DegreeDeficiency {
        kernel: &'static str,
        slot: String,
        d1: usize,
        d2: usize,
    },
}

/// The Eq.-(9)-shaped operator, affine in every decision variable.
pub fn assemble_lpi(pie: &PieSystem, p_op: &PiOp, z_op: &PiOp, gamma: &Scalar) -> PiOp {
    let (r, p, n, ns) = (pie.r, pie.p, pie.n, pie.ns);
    let f1 = p_op.compose(&pie.b).add(&z_op.compose(&pie.d2));
    let f2 = p_op.compose(&pie.a).add(&z_op.compose(&pie.c2));
    let bt_adj = pie.bt.adjoint();
    let t_op = &pie.t;

    let neg_gamma_eye = |k: usize| -> PiOp {
        PiOp::from_matrix(SMat::identity(k).scale_scalar(&gamma.scale(-1.0)))
    };

    // (1,1) = ℬ_T* F1 + (ℬ_T* F1)* − γ I_r
    let btf1 = bt_adj.compose(&f1);
    let b11 = btf1.add(&btf1.adjoint()).add(&neg_gamma_eye(r));
    // (1,2) = −𝒟₁ᵀ
    let b12 = PiOp::from_matrix(pie.d1.p.transpose().scale(-1.0));
    // (1,3) = −ℬ_T* F2 − F1* 𝒯
    let b13 = bt_adj
        .compose(&f2)
        .scale(-1.0)
        .add(&f1.adjoint().compose(t_op).scale(-1.0));
    // (2,2) = −γ I_p, (2,3) = 𝒞₁
    let b22 = neg_gamma_eye(p);
    let b23 = pie.c1.clone();
    // (3,3) = F2* 𝒯 + (·)*
    let f2t = f2.adjoint().compose(t_op);
    let b33 = f2t.add(&f2t.adjoint());

    let b21 = b12.adjoint();
    let b31 = b13.adjoint();
    let b32 = b23.adjoint();
    let rows = vec![
        vec![b11, b12, b13],
        vec![b21, b22, b23],
        vec![b31, b32, b33],
    ];
    let out = PiOp::block_concat(&rows);
    debug_assert_eq!(
        out.dims,
        OpDims {
            m_out: r + p + n,
            n_out: ns,
            m_in: r + p + n,
            n_in: ns
        }
    );
    out
}

/// Gram-certificate lowering of `target ⪯ -eps_neg · diag(I, 0)`.
///
/// Two Gram terms are used, an unweighted one and one weighted by
/// g(s) = -s(s+1) ≥ 0 on [-1, 0]; the interval weight is what makes the
/// certificate non-conservative for inequalities that are tight toward the
/// domain boundary. The pointwise basis block is included only when the
/// target actually has a multiplier kernel; for the synthesis operator it is
/// identically zero and would be forced to zero anyway.
pub fn enforce_negativity(
    prob: &mut SdpProblem,
    target: &PiOp,
    eps_neg: f64,
    d1: usize,
    d2: usize,
) -> Result<MatVarRef, LoweringError> {
    let m_hat = target.dims.m_out;
    let n_hat = target.dims.n_out;
    assert_eq!(m_hat, target.dims.m_in, "target must be square");
    assert_eq!(n_hat, target.dims.n_in, "target must be square");

    // rhs = -target - eps_neg diag(I, 0)
    let mut rhs = target.scale(-1.0);
    for i in 0..m_hat {
        rhs.p[(i, i)] = rhs.p[(i, i)].add(&Scalar::num(-eps_neg));
    }

    if n_hat == 0 {
        let t_ref = prob.add_mat_var("T", m_hat);
        for i in 0..m_hat {
            for j in i..m_hat {
                let expr = Scalar::var(prob.mat_entry(t_ref, i, j)).sub(&sym_avg(&rhs.p, i, j));
                prob.add_equality(expr);
            }
        }
        return Ok(t_ref);
    }

    let include_pointwise = !rhs.r0.is_zero();
    let z1_rows = if include_pointwise { n_hat * (d1 + 1) } else { 0 };
    let z2_monos = (d2 + 1) * (d2 + 1);
    let z2_rows = n_hat * z2_monos;
    let n_f = z1_rows + 2 * z2_rows;

    // Lifting operator 𝒢: [x; φ] ↦ [x; stacked F-components].
    let mut g = PiOp::zero(OpDims {
        m_out: m_hat,
        n_out: n_f,
        m_in: m_hat,
        n_in: n_hat,
    });
    g.p = SMat::identity(m_hat);
    if include_pointwise {
        // R0 block: Z1c(s) = monomials ⊗ I
        let coeffs = (0..=d1)
            .map(|a| {
                let mut m = SMat::zeros(n_f, n_hat);
                for c in 0..n_hat {
                    m[(a * n_hat + c, c)] = Scalar::num(1.0);
                }
                m
            })
            .collect();
        g.r0 = PolyMat1::from_coeffs(Var1::S, coeffs);
    }
    // R1 block: Z2c(s,θ) = tensor monomials ⊗ I placed below the Z1 block.
    let mut r1 = PolyMat2::zeros(n_f, n_hat, d2, d2);
    for a in 0..=d2 {
        for b in 0..=d2 {
            let mono = a * (d2 + 1) + b;
            let m = r1.coeff_mut(a, b);
            for c in 0..n_hat {
                m[(z1_rows + mono * n_hat + c, c)] = Scalar::num(1.0);
            }
        }
    }
    g.r1 = r1;
    let mut r2 = PolyMat2::zeros(n_f, n_hat, d2, d2);
    for a in 0..=d2 {
        for b in 0..=d2 {
            let mono = a * (d2 + 1) + b;
            let m = r2.coeff_mut(a, b);
            for c in 0..n_hat {
                m[(z1_rows + z2_rows + mono * n_hat + c, c)] = Scalar::num(1.0);
            }
        }
    }
    g.r2 = r2;

    // Certificate = 𝒢* 𝕋₁ 𝒢 + 𝒢* 𝕋_g 𝒢 with constant-kernel middle
    // operators carrying the Gram matrices, the second multiplied by the
    // interval weight.
    let t_ref = prob.add_mat_var("T", m_hat + n_f);
    let tg_ref = prob.add_mat_var("Tg", m_hat + n_f);
    let middle = |prob: &SdpProblem, t: MatVarRef, weighted: bool| -> PiOp {
        let mut tt = PiOp::zero(OpDims {
            m_out: m_hat,
            n_out: n_f,
            m_in: m_hat,
            n_in: n_f,
        });
        let mut txx = SMat::zeros(m_hat, m_hat);
        for i in 0..m_hat {
            for j in 0..m_hat {
                txx[(i, j)] = Scalar::var(prob.mat_entry(t, i, j));
            }
        }
        let mut txl = SMat::zeros(m_hat, n_f);
        for i in 0..m_hat {
            for j in 0..n_f {
                txl[(i, j)] = Scalar::var(prob.mat_entry(t, i, m_hat + j));
            }
        }
        let mut tll = SMat::zeros(n_f, n_f);
        for i in 0..n_f {
            for j in 0..n_f {
                tll[(i, j)] = Scalar::var(prob.mat_entry(t, m_hat + i, m_hat + j));
            }
        }
        if !weighted {
            tt.p = txx;
            tt.q1 = PolyMat1::constant(Var1::Theta, txl.clone());
            tt.q_low = PolyMat1::constant(Var1::S, txl.transpose());
            tt.r0 = PolyMat1::constant(Var1::S, tll);
        } else {
            // weight g(s) = -s(1+s) = -s - s²; ∫ g = 1/6
            tt.p = txx.scale(1.0 / 6.0);
            let gpoly = |m: &SMat, var: Var1| -> PolyMat1 {
                PolyMat1::from_coeffs(
                    var,
                    vec![
                        SMat::zeros(m.nrows, m.ncols),
                        m.scale(-1.0),
                        m.scale(-1.0),
                    ],
                )
            };
            tt.q1 = gpoly(&txl, Var1::Theta);
            tt.q_low = gpoly(&txl.transpose(), Var1::S);
            tt.r0 = gpoly(&tll, Var1::S);
        }
        tt
    };
    let cert_a = g.adjoint().compose(&middle(prob, t_ref, false).compose(&g));
    let cert_b = g.adjoint().compose(&middle(prob, tg_ref, true).compose(&g));
    let cert = cert_a.add(&cert_b);
    let t_first = prob.mat_entry(t_ref, 0, 0);
    let t_last = prob.mat_entry(tg_ref, m_hat + n_f - 1, m_hat + n_f - 1);
    debug_assert_eq!(cert.dims, rhs.dims);

    // Equalities: cert coefficient == rhs coefficient, slot by slot.
    let lower_trace = std::env::var("PIEOBS_LOWER_TRACE").is_ok();
    let mut restriction_rows: Vec<String> = Vec::new();
    let mut check_and_add = |cert_s: &Scalar, rhs_s: &Scalar, kernel: &'static str, slot: String|
     -> Result<(), LoweringError> {
        let diff = cert_s.sub(rhs_s);
        if diff.is_zero() {
            return Ok(());
        }
        if diff.terms.is_empty() {
            // constant mismatch no variable can absorb
            return Err(LoweringError::DegreeDeficiency {
                kernel,
                slot,
                d1,
                d2,
            });
        }
        if lower_trace && !diff.terms.iter().any(|&(v, _)| v >= t_first && v <= t_last) {
            restriction_rows.push(format!("{kernel} {slot}"));
        }
        prob.add_equality(diff);
        Ok(())
    };

    for i in 0..m_hat {
        for j in i..m_hat {
            check_and_add(
                &sym_avg(&cert.p, i, j),
                &sym_avg(&rhs.p, i, j),
                "P",
                format!("({i},{j})"),
            )?;
        }
    }
    // Q1 over the union of coefficient supports.
    let q_deg = cert.q1.degree().max(rhs.q1.degree());
    let zero = Scalar::zero();
    for k in 0..=q_deg {
        for i in 0..m_hat {
            for j in 0..n_hat {
                let cs = cert.q1.coeffs.get(k).map(|m| &m[(i, j)]).unwrap_or(&zero);
                let rs = rhs.q1.coeffs.get(k).map(|m| &m[(i, j)]).unwrap_or(&zero);
                check_and_add(cs, rs, "Q1", format!("θ^{k} ({i},{j})"))?;
            }
        }
    }
    // R0 (symmetric in the matrix indices).
    let r0_deg = cert.r0.degree().max(rhs.r0.degree());
    for k in 0..=r0_deg {
        for i in 0..n_hat {
            for j in i..n_hat {
                let cs = cert.r0.coeffs.get(k).map(|m| sym_ref(m, i, j)).unwrap_or_else(Scalar::zero);
                let rs = rhs.r0.coeffs.get(k).map(|m| sym_ref(m, i, j)).unwrap_or_else(Scalar::zero);
                check_and_add(&cs, &rs, "R0", format!("s^{k} ({i},{j})"))?;
            }
        }
    }
    // R1 over the union support; R2 is implied by self-adjointness of both
    // sides (both are constructed self-adjoint).
    let (cs_s, cs_t) = cert.r1.degrees();
    let (rs_s, rs_t) = rhs.r1.degrees();
    let (ds, dt) = (cs_s.max(rs_s), cs_t.max(rs_t));
    for a in 0..=ds {
        for b in 0..=dt {
            for i in 0..n_hat {
                for j in 0..n_hat {
                    let cs = if a <= cert.r1.deg_s && b <= cert.r1.deg_t {
                        cert.r1.coeff(a, b)[(i, j)].clone()
                    } else {
                        Scalar::zero()
                    };
                    let rs = if a <= rhs.r1.deg_s && b <= rhs.r1.deg_t {
                        rhs.r1.coeff(a, b)[(i, j)].clone()
                    } else {
                        Scalar::zero()
                    };
                    check_and_add(&cs, &rs, "R1", format!("s^{a}θ^{b} ({i},{j})"))?;
                }
            }
        }
    }
    if lower_trace {
        eprintln!(
            "lowering: {} restriction rows (no certificate freedom): {:?}",
            restriction_rows.len(),
            &restriction_rows[..restriction_rows.len().min(20)]
        );
    }
    Ok(t_ref)
}

/// Symmetrized entry (the assembled operators are self-adjoint; averaging
/// guards against roundoff asymmetry in the constant parts).
fn sym_avg(m: &SMat, i: usize, j: usize) -> Scalar {
    m[(i, j)].add(&m[(j, i)]).scale(0.5)
}

fn sym_ref(m: &SMat, i: usize, j: usize) -> Scalar {
    m[(i, j)].add(&m[(j, i)]).scale(0.5)
}
