//! Closed-form composition of 4-PI operators.
//!
//! The formulas come from substituting one operator's action into the other
//! and exchanging integration order, splitting ∫_{-1}^{0} into ∫_{-1}^{s} and
//! ∫_{s}^{0} where a kernel changes branch. With C = A ∘ B:
//!
//! ```text
//! P_C      = P_A P_B + ∫_{-1}^0 Q1_A(θ) Qlow_B(θ) dθ
//! Q1_C(θ)  = P_A Q1_B(θ) + Q1_A(θ) R0_B(θ)
//!            + ∫_θ^0 Q1_A(u) R1_B(u,θ) du + ∫_{-1}^θ Q1_A(u) R2_B(u,θ) du
//! Qlow_C(s)= Qlow_A(s) P_B + R0_A(s) Qlow_B(s)
//!            + ∫_{-1}^s R1_A(s,θ) Qlow_B(θ) dθ + ∫_s^0 R2_A(s,θ) Qlow_B(θ) dθ
//! R0_C(s)  = R0_A(s) R0_B(s)
//! R1_C(s,ν)= Qlow_A(s) Q1_B(ν) + R0_A(s) R1_B(s,ν) + R1_A(s,ν) R0_B(ν)
//!            + ∫_ν^s R1_A R1_B + ∫_{-1}^ν R1_A R2_B + ∫_s^0 R2_A R1_B
//! R2_C(s,ν)= Qlow_A(s) Q1_B(ν) + R0_A(s) R2_B(s,ν) + R2_A(s,ν) R0_B(ν)
//!            + ∫_{-1}^s R1_A R2_B + ∫_ν^0 R2_A R1_B + ∫_s^ν R2_A R2_B
//! ```
//!
//! where every ∫ under R1_C/R2_C is ∫ X_A(s,θ) Y_B(θ,ν) dθ over the stated
//! bounds. Degrees grow by at most d_A + d_B + 1. The dense-discretization
//! oracle in the tests checks these formulas numerically.

use super::{OpDims, PiOp};
use crate::poly::{int_middle, Bound, Bound2, Var1};

pub(super) fn compose(a: &PiOp, b: &PiOp) -> PiOp {
    assert_eq!(
        (a.dims.m_in, a.dims.n_in),
        (b.dims.m_out, b.dims.n_out),
        "operator composition dimension mismatch"
    );
    let dims = OpDims {
        m_out: a.dims.m_out,
        n_out: a.dims.n_out,
        m_in: b.dims.m_in,
        n_in: b.dims.n_in,
    };
    let mut c = PiOp::zero(dims);

    // Shared lifts. The integration dummy of Q1_A plays the role of the
    // first kernel variable in the mixed products below.
    let q1a_as_s = a.q1.clone().retag(Var1::S);
    let qlb_as_theta = b.q_low.clone().retag(Var1::Theta);
    let r0b_as_theta = b.r0.clone().retag(Var1::Theta);

    // P
    c.p = a.p.mul(&b.p);
    if a.dims.n_in > 0 {
        let cross = a.q1.clone().retag(Var1::S).mul(&b.q_low.clone());
        c.p = c.p.add(&cross.integrate_full());
    }

    // Q1
    if dims.n_in > 0 {
        let mut q1 = b.q1.mul_smat_left(&a.p);
        if a.dims.n_in > 0 {
            q1 = q1.add(&a.q1.mul(&r0b_as_theta));
            // ∫_θ^0 Q1_A(u) R1_B(u,θ) du
            let k1 = q1a_as_s.lift(Var1::S).mul(&b.r1);
            q1 = q1.add(&k1.int_first(Bound::Var, Bound::Zero, Var1::Theta));
            // ∫_{-1}^θ Q1_A(u) R2_B(u,θ) du
            let k2 = q1a_as_s.lift(Var1::S).mul(&b.r2);
            q1 = q1.add(&k2.int_first(Bound::NegOne, Bound::Var, Var1::Theta));
        }
        c.q1 = q1;
    }

    // Qlow
    if dims.n_out > 0 {
        let mut ql = a.q_low.mul_smat_right(&b.p);
        if a.dims.n_in > 0 {
            ql = ql.add(&a.r0.mul(&b.q_low.clone()));
            let k1 = a.r1.mul(&qlb_as_theta.lift(Var1::Theta));
            ql = ql.add(&k1.int_second(Bound::NegOne, Bound::Var, Var1::S));
            let k2 = a.r2.mul(&qlb_as_theta.lift(Var1::Theta));
            ql = ql.add(&k2.int_second(Bound::Var, Bound::Zero, Var1::S));
        }
        c.q_low = ql;
    }

    if dims.n_out > 0 && dims.n_in > 0 && a.dims.n_in > 0 {
        // R0
        c.r0 = a.r0.mul(&b.r0);

        // Shared first terms of R1 and R2.
        let boundary = a.q_low.mul_cross(&b.q1);

        let mut r1 = boundary.clone();
        r1 = r1.add(&b.r1.mul_poly1_left(&a.r0));
        r1 = r1.add(&a.r1.mul_poly1_right(&r0b_as_theta));
        r1 = r1.add(&int_middle(&a.r1, &b.r1, Bound2::Nu, Bound2::S));
        r1 = r1.add(&int_middle(&a.r1, &b.r2, Bound2::NegOne, Bound2::Nu));
        r1 = r1.add(&int_middle(&a.r2, &b.r1, Bound2::S, Bound2::Zero));
        c.r1 = r1;

        let mut r2 = boundary;
        r2 = r2.add(&b.r2.mul_poly1_left(&a.r0));
        r2 = r2.add(&a.r2.mul_poly1_right(&r0b_as_theta));
        r2 = r2.add(&int_middle(&a.r1, &b.r2, Bound2::NegOne, Bound2::S));
        r2 = r2.add(&int_middle(&a.r2, &b.r1, Bound2::Nu, Bound2::Zero));
        r2 = r2.add(&int_middle(&a.r2, &b.r2, Bound2::S, Bound2::Nu));
        c.r2 = r2;
    } else if dims.n_out > 0 && dims.n_in > 0 {
        // A has no L2 input: only the boundary coupling survives.
        c.r1 = a.q_low.mul_cross(&b.q1);
        c.r2 = c.r1.clone();
    }
    c
}
