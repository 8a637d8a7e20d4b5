use super::*;
use crate::dde::DdeModel;
use crate::piop::{OpDims, PiOp};
use crate::poly::{PolyMat1, SMat, Var1};
use crate::sdp::{SdpStatus, SolveOpts};
use nalgebra::DMatrix;
use serde_json::json;

fn delay_free_model() -> DdeModel {
    DdeModel::parse(&json!({
        "n": 2, "r": 1, "p": 1, "q": 1,
        "A0": [[-1.0, 0.5], [0.0, -2.0]],
        "B": [[1.0], [0.5]],
        "C1": [[1.0, 0.0]],
        "D1": [[0.2]],
        "C2": [[0.0, 1.0]],
        "D2": [[0.1]]
    }))
    .unwrap()
}

/// Classical H∞ observer bound by direct LMI over the same structure, solved
/// with the same SDP backend but assembled as plain matrices. Serves as the
/// independent oracle for the ns = 0 degeneration.
fn classical_observer_gamma(m: &DdeModel) -> f64 {
    // variables: P (n×n, P ⪰ εI), Z1 (n×q), γ; constraint
    // [-γI, -D1ᵀ, -(PB+Z1D2)ᵀ; ·, -γI, C1; ·, ·, (PA+Z1C2)ᵀ + (PA+Z1C2)] ⪯ -εI
    let (n, r, p, q) = (m.n, m.r, m.p, m.q);
    let eps = 1e-4;
    let eps_neg = 1e-6;
    let mut prob = crate::sdp::SdpProblem::new();
    let pm = prob.add_mat_var("Pshift", n);
    let z1: Vec<_> = (0..n * q).map(|k| prob.add_free_var(&format!("z{k}"))).collect();
    let gam = prob.add_free_var("gamma");
    let t = prob.add_mat_var("T", r + p + n);
    let pv = |i: usize, j: usize| -> Scalar {
        let mut s = Scalar::var(prob.mat_entry(pm, i, j));
        if i == j {
            s = s.add(&Scalar::num(eps));
        }
        s
    };
    // helper: entries of PB + Z1 D2 (n × r) and PA + Z1 C2 (n × n)
    let pb_z1d2 = |i: usize, j: usize| -> Scalar {
        let mut s = Scalar::zero();
        for k in 0..n {
            s = s.add(&pv(i, k).scale(m.b[(k, j)]));
        }
        for k in 0..q {
            s = s.add(&Scalar::var(z1[i * q + k]).scale(m.d2[(k, j)]));
        }
        s
    };
    let pa_z1c2 = |i: usize, j: usize| -> Scalar {
        let mut s = Scalar::zero();
        for k in 0..n {
            s = s.add(&pv(i, k).scale(m.a0[(k, j)]));
        }
        for k in 0..q {
            s = s.add(&Scalar::var(z1[i * q + k]).scale(m.c2[(k, j)]));
        }
        s
    };
    // assemble the (r+p+n)² LMI entries = -T - eps_neg I
    let dim = r + p + n;
    let entry = |i: usize, j: usize| -> Scalar {
        // symmetric lower blocks mirrored
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if i < r {
            if j < r {
                if i == j {
                    Scalar::var(gam).scale(-1.0)
                } else {
                    Scalar::zero()
                }
            } else if j < r + p {
                Scalar::num(-m.d1[(j - r, i)])
            } else {
                pb_z1d2(j - r - p, i).scale(-1.0)
            }
        } else if i < r + p {
            if j < r + p {
                if i == j {
                    Scalar::var(gam).scale(-1.0)
                } else {
                    Scalar::zero()
                }
            } else {
                Scalar::num(m.c1[(i - r, j - r - p)])
            }
        } else {
            pa_z1c2(j - r - p, i - r - p).add(&pa_z1c2(i - r - p, j - r - p))
        }
    };
    let mut rows = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            let mut e = entry(i, j).scale(-1.0);
            if i == j {
                e = e.add(&Scalar::num(-eps_neg));
            }
            rows.push(Scalar::var(prob.mat_entry(t, i, j)).sub(&e));
        }
    }
    for row in rows {
        prob.add_equality(row);
    }
    prob.set_objective(Scalar::var(gam));
    let sol = prob.solve(&SolveOpts::default());
    assert_eq!(sol.status, SdpStatus::Optimal);
    sol.objective
}

#[test]
fn delay_free_lpi_is_classical_lmi() {
    // ns = 0: the assembled operator must be the finite H∞ observer LMI.
    let m = delay_free_model();
    let pie = m.to_pie();
    assert_eq!(pie.ns, 0);
    let opts = SynthOptions::default();
    let mut prob = crate::sdp::SdpProblem::new();
    let pos = PosCert::declare(&mut prob, pie.n, 0, opts.dp, opts.eps);
    let zv = ZVar::declare(&mut prob, pie.n, 0, opts.dp, pie.q);
    let gam = prob.add_free_var("gamma");
    let lpi = assemble_lpi(&pie, &pos.to_op(&prob), &zv.to_op(), &Scalar::var(gam));
    assert_eq!(lpi.dims, OpDims { m_out: 4, n_out: 0, m_in: 4, n_in: 0 });
    // Spot-check entries at a random variable assignment.
    let mut vals = vec![0.0; prob.n_vars()];
    for (k, v) in vals.iter_mut().enumerate() {
        *v = 0.1 + 0.03 * k as f64;
    }
    let num = lpi.eval_vars(&vals);
    let lmimat = num.p.to_dense();
    assert!((lmimat.clone() - lmimat.transpose()).norm() < 1e-12);
    // (1,1) = -γ
    assert!((lmimat[(0, 0)] + vals[gam as usize]).abs() < 1e-12);
    // (1,2) = -D1ᵀ
    assert!((lmimat[(0, 1)] + m.d1[(0, 0)]).abs() < 1e-12);
    // (2,3)-block = C1
    assert!((lmimat[(1, 2)] - m.c1[(0, 0)]).abs() < 1e-12);
}

#[test]
fn delay_free_synthesis_matches_classical_lmi() {
    let m = delay_free_model();
    let classical = classical_observer_gamma(&m);
    let res = synthesize(&m, &SynthOptions::default(), None).unwrap();
    assert!(
        (res.gamma - classical).abs() <= 1e-6 * (1.0 + classical),
        "pipeline {} vs classical {}",
        res.gamma,
        classical
    );
    // gains reduce to L1 = P⁻¹Z1
    let l1_expect = res.cert.p.clone().lu().solve(&res.z1).unwrap();
    assert!((&res.gains.l1 - l1_expect).norm() < 1e-10);
}

#[test]
fn negativity_cert_feasible_for_negative_identity() {
    // op = -𝕀 on Z_{1,1}, eps_neg = 0.5: feasible with diagonal T.
    let neg_id = PiOp::identity(1, 1).scale(-1.0);
    let mut prob = crate::sdp::SdpProblem::new();
    enforce_negativity(&mut prob, &neg_id, 0.5, 3, 2).unwrap();
    let sol = prob.solve(&SolveOpts::default());
    assert_eq!(sol.status, SdpStatus::Optimal, "{:?}", sol.status);
}

#[test]
fn negativity_cert_infeasible_for_positive_identity() {
    let id = PiOp::identity(1, 1);
    let mut prob = crate::sdp::SdpProblem::new();
    enforce_negativity(&mut prob, &id, 0.5, 3, 2).unwrap();
    let sol = prob.solve(&SolveOpts::default());
    assert_eq!(sol.status, SdpStatus::Infeasible, "{:?}", sol.status);
}

#[test]
fn negativity_cert_infeasible_for_sign_indefinite_multiplier() {
    // op = multiplier R0(s) = s on Z_{1,1}: s ≥ -eps_neg fails at s → 0⁻.
    let mut op = PiOp::zero(OpDims { m_out: 1, n_out: 1, m_in: 1, n_in: 1 });
    op.p = SMat::zeros(1, 1);
    op.r0 = PolyMat1::from_coeffs(Var1::S, vec![SMat::zeros(1, 1), SMat::identity(1)]);
    for eps_neg in [1e-6, 1e-3] {
        let mut prob = crate::sdp::SdpProblem::new();
        enforce_negativity(&mut prob, &op, eps_neg, 3, 2).unwrap();
        let sol = prob.solve(&SolveOpts::default());
        assert_eq!(sol.status, SdpStatus::Infeasible, "eps_neg={eps_neg}");
    }
}

#[test]
fn extract_gains_scalar_audit() {
    // P=2, H=1, Γ=1, R0=1, Z=1, Z1=1, W=1 → L1 = 1/3, L2(s) = 1/3.
    let cert = NumericCert {
        p: DMatrix::from_element(1, 1, 2.0),
        h: DMatrix::from_element(1, 1, 1.0),
        gamma: DMatrix::from_element(1, 1, 1.0),
        n_mat: Some(DMatrix::from_element(1, 1, 1.0 - 1e-4)),
        eps: 1e-4,
        dp: 0,
        n: 1,
        ns: 1,
    };
    let z1 = DMatrix::from_element(1, 1, 1.0);
    let w = DMatrix::from_element(1, 1, 1.0);
    let gains = extract_gains(&cert, &z1, &w, 1, 1, 10).unwrap();
    assert!((gains.l1[(0, 0)] - 1.0 / 3.0).abs() < 1e-10, "L1 {}", gains.l1[(0, 0)]);
    for &s in &[-1.0, -0.5, 0.0] {
        assert!((gains.l2_at(s)[(0, 0)] - 1.0 / 3.0).abs() < 1e-10);
    }
    // H = 0, W = 0 degenerate case: L1 = P⁻¹Z1, L2 = 0.
    let cert0 = NumericCert {
        h: DMatrix::zeros(1, 1),
        ..cert.clone()
    };
    let gains0 = extract_gains(&cert0, &z1, &DMatrix::zeros(1, 1), 1, 1, 10).unwrap();
    assert!((gains0.l1[(0, 0)] - 0.5).abs() < 1e-10);
    assert!(gains0.l2_at(-0.4).norm() < 1e-12);
}

#[test]
fn affine_assembly_stays_linear() {
    // Assembling the LPI with variable-carrying 𝒫 and 𝒵 must never multiply
    // two variable-carrying scalars; reaching this point is the assertion.
    let m = DdeModel::parse(&crate::dde::tests::example1_json()).unwrap();
    let pie = m.to_pie();
    let mut prob = crate::sdp::SdpProblem::new();
    let pos = PosCert::declare(&mut prob, pie.n, pie.ns, 1, 1e-4);
    let zv = ZVar::declare(&mut prob, pie.n, pie.ns, 1, pie.q);
    let gam = prob.add_free_var("gamma");
    let lpi = assemble_lpi(&pie, &pos.to_op(&prob), &zv.to_op(), &Scalar::var(gam));
    // self-adjoint by construction: evaluate at a point and check
    let vals: Vec<f64> = (0..prob.n_vars()).map(|k| 0.05 * (k as f64 % 7.0) - 0.1).collect();
    let num = lpi.eval_vars(&vals);
    assert!(num.self_adjoint_defect() < 1e-12);
    // The LPI operator has no pointwise multiplier kernel.
    assert!(lpi.r0.is_zero());
}
