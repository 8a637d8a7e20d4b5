use super::*;
use crate::poly::{PolyMat1, PolyMat2, SMat, Var1};
use nalgebra::{DMatrix, DVector};

fn scalar_op(
    p: f64,
    q1: f64,
    q_low: f64,
    r0: f64,
    r1: f64,
    r2: f64,
) -> PiOp {
    let mut op = PiOp::zero(OpDims {
        m_out: 1,
        n_out: 1,
        m_in: 1,
        n_in: 1,
    });
    op.p = SMat::from_dense(&DMatrix::from_element(1, 1, p));
    op.q1 = PolyMat1::constant(Var1::Theta, SMat::from_dense(&DMatrix::from_element(1, 1, q1)));
    op.q_low = PolyMat1::constant(Var1::S, SMat::from_dense(&DMatrix::from_element(1, 1, q_low)));
    op.r0 = PolyMat1::constant(Var1::S, SMat::from_dense(&DMatrix::from_element(1, 1, r0)));
    let mut k1 = PolyMat2::zeros(1, 1, 0, 0);
    *k1.coeff_mut(0, 0) = SMat::from_dense(&DMatrix::from_element(1, 1, r1));
    op.r1 = k1;
    let mut k2 = PolyMat2::zeros(1, 1, 0, 0);
    *k2.coeff_mut(0, 0) = SMat::from_dense(&DMatrix::from_element(1, 1, r2));
    op.r2 = k2;
    op
}

struct Lcg(u64);
impl Lcg {
    fn new(seed: u64) -> Self {
        Lcg(seed)
    }
    fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
    fn mat(&mut self, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| self.next_f64())
    }
}

/// Random operator with polynomial kernels of the given degree.
fn random_op(rng: &mut Lcg, dims: OpDims, deg: usize, separable: bool) -> PiOp {
    let mut op = PiOp::zero(dims);
    op.p = SMat::from_dense(&rng.mat(dims.m_out, dims.m_in));
    op.q1 = PolyMat1::from_coeffs(
        Var1::Theta,
        (0..=deg).map(|_| SMat::from_dense(&rng.mat(dims.m_out, dims.n_in))).collect(),
    );
    op.q_low = PolyMat1::from_coeffs(
        Var1::S,
        (0..=deg).map(|_| SMat::from_dense(&rng.mat(dims.n_out, dims.m_in))).collect(),
    );
    op.r0 = PolyMat1::from_coeffs(
        Var1::S,
        (0..=deg).map(|_| SMat::from_dense(&rng.mat(dims.n_out, dims.n_in))).collect(),
    );
    let mut r1 = PolyMat2::zeros(dims.n_out, dims.n_in, deg, deg);
    for a in 0..=deg {
        for b in 0..=deg {
            *r1.coeff_mut(a, b) = SMat::from_dense(&rng.mat(dims.n_out, dims.n_in));
        }
    }
    op.r1 = r1;
    if separable {
        op.r2 = op.r1.clone();
    } else {
        let mut r2 = PolyMat2::zeros(dims.n_out, dims.n_in, deg, deg);
        for a in 0..=deg {
            for b in 0..=deg {
                *r2.coeff_mut(a, b) = SMat::from_dense(&rng.mat(dims.n_out, dims.n_in));
            }
        }
        op.r2 = r2;
    }
    op
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn identity_apply_returns_inputs() {
    let id = PiOp::identity(2, 3);
    let x = DVector::from_vec(vec![1.0, -2.0]);
    let phi = GridFn::gauss(16, 3).from_fn(|s| DVector::from_vec(vec![s, s * s, 1.0]));
    let (y, psi) = id.apply(&x, &phi);
    assert_eq!(y, x);
    for (a, b) in psi.values.iter().zip(&phi.values) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn q1_only_adds_full_integral() {
    // op with only Q1 = 1, φ ≡ 1: top = x + ∫_{-1}^0 1 = x + 1
    let op = scalar_op(1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
    let x = DVector::from_element(1, 2.5);
    let phi = GridFn::gauss(32, 1).from_fn(|_| DVector::from_element(1, 1.0));
    let (y, _) = op.apply(&x, &phi);
    assert!((y[0] - 3.5).abs() < 1e-12);
}

#[test]
fn r1_only_gives_lower_integral() {
    // op with only R1 = 1, φ ≡ 1: bottom(s) = ∫_{-1}^s dθ = s + 1.
    // Gauss quadrature smears the moving bound across one node spacing, so
    // the check is against the node-split rule's own resolution.
    let op = scalar_op(0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let x = DVector::zeros(1);
    let phi = GridFn::gauss(64, 1).from_fn(|_| DVector::from_element(1, 1.0));
    let (_, out) = op.apply(&x, &phi);
    for (i, &s) in phi.nodes.iter().enumerate() {
        assert!(
            (out.values[i][0] - (s + 1.0)).abs() < 0.05,
            "node {s}: {} vs {}",
            out.values[i][0],
            s + 1.0
        );
    }
}

#[test]
fn compose_identity_is_neutral() {
    let mut rng = Lcg::new(7);
    let dims = OpDims {
        m_out: 2,
        n_out: 2,
        m_in: 2,
        n_in: 2,
    };
    let b = random_op(&mut rng, dims, 2, false);
    let id = PiOp::identity(2, 2);
    for (c, name) in [(id.compose(&b), "I∘B"), (b.compose(&id), "B∘I")] {
        assert!(rel_err(&c.p.to_dense(), &b.p.to_dense()) < 1e-14, "{name} P");
        for &s in &[-0.9, -0.3] {
            assert!((c.q1.eval(s) - b.q1.eval(s)).norm() < 1e-13, "{name} Q1");
            assert!((c.q_low.eval(s) - b.q_low.eval(s)).norm() < 1e-13, "{name} Qlow");
            assert!((c.r0.eval(s) - b.r0.eval(s)).norm() < 1e-13, "{name} R0");
            for &t in &[-0.8, -0.1] {
                assert!((c.r1.eval(s, t) - b.r1.eval(s, t)).norm() < 1e-13, "{name} R1");
                assert!((c.r2.eval(s, t) - b.r2.eval(s, t)).norm() < 1e-13, "{name} R2");
            }
        }
    }
}

#[test]
fn compose_hand_worked_example() {
    // A = {P=1, Q1=1}, B = {P=2, Qlow=1, R0=1}: A∘B = {P=3, Q1=1, rest 0}
    let a = scalar_op(1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
    let b = scalar_op(2.0, 0.0, 1.0, 1.0, 0.0, 0.0);
    let c = a.compose(&b);
    assert!((c.p.to_dense()[(0, 0)] - 3.0).abs() < 1e-15);
    assert_eq!(c.q1.degree(), 0);
    assert!((c.q1.eval(-0.5)[(0, 0)] - 1.0).abs() < 1e-15);
    assert!(c.q_low.is_zero());
    assert!(c.r0.is_zero());
    assert!(c.r1.is_zero());
    assert!(c.r2.is_zero());
}

#[test]
fn composition_matches_discretization_product() {
    // Oracle: discretize(A ∘ B) vs discretize(A) · discretize(B) at N = 64.
    // The left factor is drawn with matching one-sided kernels (the class the
    // synthesis pipeline composes on the left); the right factor is fully
    // general. 20 random pairs.
    let mut rng = Lcg::new(42);
    let n = 64;
    for trial in 0..20 {
        let dims_mid = OpDims {
            m_out: 2,
            n_out: 2,
            m_in: 1,
            n_in: 2,
        };
        let dims_left = OpDims {
            m_out: 1,
            n_out: 2,
            m_in: 2,
            n_in: 2,
        };
        let a = random_op(&mut rng, dims_left, 2, true);
        let b = random_op(&mut rng, dims_mid, 2, false);
        let c = a.compose(&b);
        let da = a.discretize(n);
        let db = b.discretize(n);
        let dc = c.discretize(n);
        let err = rel_err(&(da * db), &dc);
        assert!(err < 1e-6, "trial {trial}: rel err {err}");
    }
}

#[test]
fn composition_general_pairs_quadrature_accuracy() {
    // Fully general pairs compose to discretization accuracy only; the
    // matrix product then differs by interpolation aliasing, measured here
    // to stay small at N = 64.
    let mut rng = Lcg::new(99);
    let dims = OpDims {
        m_out: 2,
        n_out: 2,
        m_in: 2,
        n_in: 2,
    };
    for _ in 0..5 {
        let a = random_op(&mut rng, dims, 2, false);
        let b = random_op(&mut rng, dims, 2, false);
        let c = a.compose(&b);
        let err = rel_err(&(a.discretize(64) * b.discretize(64)), &c.discretize(64));
        assert!(err < 1e-3, "rel err {err}");
    }
}

#[test]
fn compose_degree_closure_bound() {
    // Kernels of total degree d1 and d2 compose to kernels of total degree
    // at most d1 + d2 + 1 (the +1 from the exchange-of-order antiderivative).
    let total_deg2 = |k: &PolyMat2| -> usize {
        let mut d = 0;
        for a in 0..=k.deg_s {
            for b in 0..=k.deg_t {
                if !k.coeff(a, b).is_zero() {
                    d = d.max(a + b);
                }
            }
        }
        d
    };
    let truncate_total = |k: &mut PolyMat2, d: usize| {
        for a in 0..=k.deg_s {
            for b in 0..=k.deg_t {
                if a + b > d {
                    *k.coeff_mut(a, b) = SMat::zeros(k.nrows, k.ncols);
                }
            }
        }
    };
    let mut rng = Lcg::new(3);
    let dims = OpDims {
        m_out: 2,
        n_out: 2,
        m_in: 2,
        n_in: 2,
    };
    let (d1, d2) = (2usize, 3usize);
    let mut a = random_op(&mut rng, dims, d1, false);
    truncate_total(&mut a.r1, d1);
    truncate_total(&mut a.r2, d1);
    let mut b = random_op(&mut rng, dims, d2, false);
    truncate_total(&mut b.r1, d2);
    truncate_total(&mut b.r2, d2);
    let c = a.compose(&b);
    let bound = d1 + d2 + 1;
    assert!(total_deg2(&c.r1) <= bound, "R1 total degree {}", total_deg2(&c.r1));
    assert!(total_deg2(&c.r2) <= bound, "R2 total degree {}", total_deg2(&c.r2));
    assert!(c.q1.degree() <= bound && c.q_low.degree() <= bound && c.r0.degree() <= bound);
}

#[test]
fn adjoint_of_identity_and_involution() {
    let id = PiOp::identity(2, 2);
    let adj = id.adjoint();
    assert!(adj.sub(&id).self_adjoint_defect() < 1e-15);

    let mut rng = Lcg::new(11);
    for _ in 0..10 {
        let dims = OpDims {
            m_out: 2,
            n_out: 3,
            m_in: 1,
            n_in: 2,
        };
        let a = random_op(&mut rng, dims, 2, false);
        let aa = a.adjoint().adjoint();
        assert!(rel_err(&aa.discretize(24), &a.discretize(24)) < 1e-14);
    }
}

#[test]
fn adjoint_of_q1_only_is_q_low_only() {
    // op with only Q1 = q(θ): adjoint has only Qlow = q(s)ᵀ
    let mut op = PiOp::zero(OpDims {
        m_out: 2,
        n_out: 0,
        m_in: 2,
        n_in: 1,
    });
    op.p = SMat::zeros(2, 2);
    op.q1 = PolyMat1::from_coeffs(
        Var1::Theta,
        vec![
            SMat::from_dense(&DMatrix::from_column_slice(2, 1, &[1.0, 2.0])),
            SMat::from_dense(&DMatrix::from_column_slice(2, 1, &[0.5, -1.0])),
        ],
    );
    let adj = op.adjoint();
    assert_eq!(adj.dims.n_out, 1);
    assert_eq!(adj.dims.n_in, 0);
    assert!(adj.p.is_zero());
    assert!(adj.q1.is_zero());
    for &s in &[-1.0, -0.4, 0.0] {
        assert!((adj.q_low.eval(s) - op.q1.eval(s).transpose()).norm() < 1e-15);
    }
}

#[test]
fn adjoint_inner_product_identity() {
    // |⟨A[x;φ], [y;ψ]⟩ - ⟨[x;φ], A*[y;ψ]⟩| ≤ 1e-8 · norms for 20 random ops.
    let mut rng = Lcg::new(2024);
    for trial in 0..20 {
        let dims = OpDims {
            m_out: 2,
            n_out: 2,
            m_in: 3,
            n_in: 2,
        };
        let a = random_op(&mut rng, dims, 2, false);
        let adj = a.adjoint();
        let x = DVector::from_fn(3, |_, _| rng.next_f64());
        let y = DVector::from_fn(2, |_, _| rng.next_f64());
        let mut phi = GridFn::gauss(64, 2);
        let mut psi = GridFn::gauss(64, 2);
        for v in phi.values.iter_mut() {
            *v = DVector::from_fn(2, |_, _| rng.next_f64());
        }
        for v in psi.values.iter_mut() {
            *v = DVector::from_fn(2, |_, _| rng.next_f64());
        }
        let (ax, aphi) = a.apply(&x, &phi);
        let (aty, atpsi) = adj.apply(&y, &psi);
        let lhs = z_inner(&ax, &aphi, &y, &psi);
        let rhs = z_inner(&x, &phi, &aty, &atpsi);
        let scale = (x.norm() + phi.norm()) * (y.norm() + psi.norm());
        assert!(
            (lhs - rhs).abs() <= 1e-8 * scale.max(1.0),
            "trial {trial}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn block_concat_diag_identity() {
    let a = PiOp::identity(2, 0);
    let b = PiOp::identity(0, 3);
    let z_ab = PiOp::zero(OpDims { m_out: 2, n_out: 0, m_in: 0, n_in: 3 });
    let z_ba = PiOp::zero(OpDims { m_out: 0, n_out: 3, m_in: 2, n_in: 0 });
    let blk = PiOp::block_concat(&[vec![a, z_ab], vec![z_ba, b]]);
    let id = PiOp::identity(2, 3);
    assert!(rel_err(&blk.discretize(16), &id.discretize(16)) < 1e-15);
}

#[test]
fn block_concat_applies_blockwise() {
    // [[-γI, 0], [0, A]] applied to [w; (x, φ)] gives [-γ w; A(x, φ)]
    let gamma = 1.7;
    let neg = PiOp::from_dense(&(DMatrix::identity(2, 2) * -gamma));
    let mut rng = Lcg::new(5);
    let a = random_op(
        &mut rng,
        OpDims { m_out: 1, n_out: 2, m_in: 1, n_in: 2 },
        2,
        false,
    );
    let z01 = PiOp::zero(OpDims { m_out: 2, n_out: 0, m_in: 1, n_in: 2 });
    let z10 = PiOp::zero(OpDims { m_out: 1, n_out: 2, m_in: 2, n_in: 0 });
    let blk = PiOp::block_concat(&[vec![neg, z01], vec![z10, a.clone()]]);

    let w = DVector::from_vec(vec![1.0, -2.0]);
    let x = DVector::from_vec(vec![0.5]);
    let phi = GridFn::gauss(32, 2).from_fn(|s| DVector::from_vec(vec![s, 1.0 + s]));
    let stacked = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let (top, bottom) = blk.apply(&stacked, &phi);
    let (ax, aphi) = a.apply(&x, &phi);
    assert!((top.rows(0, 2) - &w * -gamma).norm() < 1e-14);
    assert!((top.rows(2, 1) - ax).norm() < 1e-12);
    for (u, v) in bottom.values.iter().zip(&aphi.values) {
        assert!((u - v).norm() < 1e-12);
    }
}

#[test]
fn block_concat_discretization_oracle() {
    let mut rng = Lcg::new(31);
    for _ in 0..5 {
        let d11 = OpDims { m_out: 1, n_out: 1, m_in: 1, n_in: 1 };
        let d12 = OpDims { m_out: 1, n_out: 1, m_in: 2, n_in: 1 };
        let d21 = OpDims { m_out: 2, n_out: 1, m_in: 1, n_in: 1 };
        let d22 = OpDims { m_out: 2, n_out: 1, m_in: 2, n_in: 1 };
        let ops = [
            [random_op(&mut rng, d11, 1, false), random_op(&mut rng, d12, 1, false)],
            [random_op(&mut rng, d21, 1, false), random_op(&mut rng, d22, 1, false)],
        ];
        let blk = PiOp::block_concat(&[ops[0].to_vec(), ops[1].to_vec()]);
        let n = 24;
        let db = blk.discretize(n);
        // Assemble the expected matrix from the pieces' discretizations by
        // permuting into the concatenated coordinate layout.
        let m_in = [1, 2];
        let n_in = [1, 1];
        let m_out = [1, 2];
        let n_out = [1, 1];
        let col_off = |j: usize, node: Option<usize>| -> usize {
            match node {
                None => (0..j).map(|k| m_in[k]).sum::<usize>(),
                Some(nd) => {
                    m_in.iter().sum::<usize>()
                        + nd * n_in.iter().sum::<usize>()
                        + (0..j).map(|k| n_in[k]).sum::<usize>()
                }
            }
        };
        let row_off = |i: usize, node: Option<usize>| -> usize {
            match node {
                None => (0..i).map(|k| m_out[k]).sum::<usize>(),
                Some(nd) => {
                    m_out.iter().sum::<usize>()
                        + nd * n_out.iter().sum::<usize>()
                        + (0..i).map(|k| n_out[k]).sum::<usize>()
                }
            }
        };
        let mut expected = DMatrix::zeros(db.nrows(), db.ncols());
        for i in 0..2 {
            for j in 0..2 {
                let d = ops[i][j].discretize(n);
                // finite-finite
                for r in 0..m_out[i] {
                    for c in 0..m_in[j] {
                        expected[(row_off(i, None) + r, col_off(j, None) + c)] = d[(r, c)];
                    }
                }
                for nd in 0..n {
                    for r in 0..m_out[i] {
                        for c in 0..n_in[j] {
                            expected[(row_off(i, None) + r, col_off(j, Some(nd)) + c)] =
                                d[(r, m_in[j] + nd * n_in[j] + c)];
                        }
                    }
                    for r in 0..n_out[i] {
                        for c in 0..m_in[j] {
                            expected[(row_off(i, Some(nd)) + r, col_off(j, None) + c)] =
                                d[(m_out[i] + nd * n_out[i] + r, c)];
                        }
                    }
                    for nd2 in 0..n {
                        for r in 0..n_out[i] {
                            for c in 0..n_in[j] {
                                expected[(row_off(i, Some(nd)) + r, col_off(j, Some(nd2)) + c)] =
                                    d[(m_out[i] + nd * n_out[i] + r, m_in[j] + nd2 * n_in[j] + c)];
                            }
                        }
                    }
                }
            }
        }
        assert!(rel_err(&db, &expected) < 1e-14);
    }
}

#[test]
fn discretize_identity_and_multiplier() {
    let id = PiOp::identity(2, 2);
    for &n in &[8usize, 64] {
        let d = id.discretize(n);
        assert!(rel_err(&d, &DMatrix::identity(2 + 2 * n, 2 + 2 * n)) < 1e-15);
    }
    // multiplier R0(s) = s -> diagonal blocks diag(s_j) ⊗ I
    let mut op = PiOp::zero(OpDims { m_out: 0, n_out: 2, m_in: 0, n_in: 2 });
    op.r0 = PolyMat1::from_coeffs(
        Var1::S,
        vec![SMat::zeros(2, 2), SMat::identity(2)],
    );
    let n = 16;
    let d = op.discretize(n);
    let (nodes, _) = gauss_legendre(n);
    for (j, &s) in nodes.iter().enumerate() {
        for r in 0..2 {
            for c in 0..2 {
                let expect = if r == c { s } else { 0.0 };
                assert!((d[(2 * j + r, 2 * j + c)] - expect).abs() < 1e-15);
            }
        }
    }
    // off-diagonal blocks vanish
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(d.view((2 * i, 2 * j), (2, 2)).norm());
            }
        }
    }
    assert!(off < 1e-15);
}

#[test]
fn discretize_self_adjoint_is_symmetric() {
    // Separable self-adjoint operators discretize to symmetric matrices to
    // roundoff.
    let mut rng = Lcg::new(77);
    for _ in 0..5 {
        let dims = OpDims { m_out: 2, n_out: 2, m_in: 2, n_in: 2 };
        let raw = random_op(&mut rng, dims, 2, true);
        let op = raw.add(&raw.adjoint()); // symmetrize
        assert!(op.self_adjoint_defect() < 1e-14);
        let d = op.discretize(64);
        let sym_err = (&d - d.transpose()).norm() / d.norm();
        assert!(sym_err < 1e-12, "symmetry defect {sym_err}");
    }
}

#[test]
fn inverse_scalar_audit_case() {
    // P=2, H=1, Z=1, Γ=1, R0=1: K=1, Ĥ=-1/3, Γ̂=-1/3, P̂=2/3.
    let st = CoerciveStructure {
        p: DMatrix::from_element(1, 1, 2.0),
        h: DMatrix::from_element(1, 1, 1.0),
        gamma: DMatrix::from_element(1, 1, 1.0),
        z: PolyMat1::constant(Var1::S, SMat::identity(1)),
        r0: PolyMat1::constant(Var1::S, SMat::identity(1)),
    };
    let inv = inverse_structured(&st, 64).unwrap();
    assert!((inv.k[(0, 0)] - 1.0).abs() < 1e-12);
    assert!((inv.h_hat[(0, 0)] + 1.0 / 3.0).abs() < 1e-12);
    assert!((inv.gamma_hat[(0, 0)] + 1.0 / 3.0).abs() < 1e-12);
    assert!((inv.p_hat[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);

    // 𝒫⁻¹∘𝒫 returns test functions unchanged.
    let op = st.to_op();
    let x = DVector::from_element(1, 0.7);
    let phi = GridFn::gauss(64, 1).from_fn(|s| DVector::from_element(1, 1.0 - 2.0 * s * s));
    let (mx, mphi) = op.apply(&x, &phi);
    let (rx, rphi) = inv.apply(&mx, &mphi);
    assert!((rx - &x).norm() < 1e-9);
    for (u, v) in rphi.values.iter().zip(&phi.values) {
        assert!((u - v).norm() < 1e-9);
    }
}

#[test]
fn inverse_block_diagonal_case() {
    // H = 0, Γ = 0, R0 = I: inverse is {P⁻¹, 0, I, 0}.
    let p = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
    let st = CoerciveStructure {
        p: p.clone(),
        h: DMatrix::zeros(2, 3),
        gamma: DMatrix::zeros(3, 3),
        z: PolyMat1::from_coeffs(
            Var1::S,
            vec![
                SMat::from_dense(&DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0])),
                SMat::from_dense(&DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 0.0])),
                SMat::from_dense(&DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0])),
            ],
        ),
        r0: PolyMat1::constant(Var1::S, SMat::identity(1)),
    };
    let inv = inverse_structured(&st, 64).unwrap();
    assert!((inv.p_hat.clone() - p.try_inverse().unwrap()).norm() < 1e-13);
    assert!(inv.h_hat.norm() < 1e-13);
    assert!(inv.gamma_hat.norm() < 1e-13);
    assert!((inv.r0_inv_at(-0.5) - DMatrix::identity(1, 1)).norm() < 1e-13);
}

#[test]
fn inverse_gram_matrix_example() {
    // Z(s) = [1; s], R0 = I: K = [[1, -1/2], [-1/2, 1/3]]
    let st = CoerciveStructure {
        p: DMatrix::identity(1, 1),
        h: DMatrix::zeros(1, 2),
        gamma: DMatrix::zeros(2, 2),
        z: PolyMat1::from_coeffs(
            Var1::S,
            vec![
                SMat::from_dense(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0])),
                SMat::from_dense(&DMatrix::from_column_slice(2, 1, &[0.0, 1.0])),
            ],
        ),
        r0: PolyMat1::constant(Var1::S, SMat::identity(1)),
    };
    let inv = inverse_structured(&st, 64).unwrap();
    let expect = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0 / 3.0]);
    assert!((inv.k.clone() - expect).norm() < 1e-12);
}

#[test]
fn inverse_roundtrip_on_random_coercive_operators() {
    // apply(𝒫⁻¹, apply(𝒫, x, φ)) = (x, φ) within 1e-6 on 10 random coercive
    // structured operators, and 𝒫⁻¹ passes the self-adjointness test.
    let mut rng = Lcg::new(123);
    let ns = 2;
    let nz = 4; // degree-1 basis ⊗ I_2
    for trial in 0..10 {
        let n = 2;
        // M = G Gᵀ + diag(εI, small) partitioned into [P H; Hᵀ Γ].
        let g = rng.mat(n + nz, n + nz);
        let m = &g * g.transpose() + DMatrix::identity(n + nz, n + nz) * 0.3;
        let p = m.view((0, 0), (n, n)).into_owned();
        let h = m.view((0, n), (n, nz)).into_owned();
        let gamma = m.view((n, n), (nz, nz)).into_owned();
        // R0 = N-quadratic in s plus a positive shift.
        let a0 = rng.mat(ns, ns);
        let a0 = &a0 * a0.transpose() * 0.2 + DMatrix::identity(ns, ns) * 0.5;
        let a1 = rng.mat(ns, ns);
        let a1 = (&a1 + a1.transpose()) * 0.05;
        let z = PolyMat1::from_coeffs(
            Var1::S,
            vec![
                SMat::from_dense(&DMatrix::identity(nz, ns).resize(nz, ns, 0.0)),
                SMat::from_dense(&{
                    let mut m2 = DMatrix::zeros(nz, ns);
                    for i in 0..ns {
                        m2[(ns + i, i)] = 1.0;
                    }
                    m2
                }),
            ],
        );
        let st = CoerciveStructure {
            p,
            h,
            gamma,
            z,
            r0: PolyMat1::from_coeffs(
                Var1::S,
                vec![SMat::from_dense(&a0), SMat::from_dense(&a1)],
            ),
        };
        let op = st.to_op();
        assert!(op.self_adjoint_defect() < 1e-12);
        let inv = inverse_structured(&st, 64).unwrap_or_else(|e| panic!("trial {trial}: {e}"));

        let x = DVector::from_fn(n, |_, _| rng.next_f64());
        let mut phi = GridFn::gauss(64, ns);
        for v in phi.values.iter_mut() {
            *v = DVector::from_fn(ns, |_, _| rng.next_f64());
        }
        // Use a smooth φ: random polynomial values
        let c0 = rng.next_f64();
        let c1 = rng.next_f64();
        let c2 = rng.next_f64();
        let phi = phi.from_fn(|s| DVector::from_fn(ns, |i, _| c0 + c1 * s + c2 * s * s + i as f64 * 0.1));
        let (mx, mphi) = op.apply(&x, &phi);
        let (rx, rphi) = inv.apply(&mx, &mphi);
        let mut err = (rx - &x).norm() / x.norm().max(1.0);
        for (u, v) in rphi.values.iter().zip(&phi.values) {
            err = err.max((u - v).norm() / v.norm().max(1.0));
        }
        assert!(err < 1e-6, "trial {trial}: roundtrip err {err}");

        // self-adjointness of the inverse via the inner product
        let y = DVector::from_fn(n, |_, _| rng.next_f64());
        let psi = GridFn::gauss(64, ns).from_fn(|s| DVector::from_fn(ns, |i, _| 0.3 - s + 0.2 * (i as f64) * s * s));
        let (ix, iphi) = inv.apply(&x, &phi);
        let (iy, ipsi) = inv.apply(&y, &psi);
        let lhs = z_inner(&ix, &iphi, &y, &psi);
        let rhs = z_inner(&x, &phi, &iy, &ipsi);
        assert!((lhs - rhs).abs() < 1e-8 * (1.0 + lhs.abs()));
    }
}

#[test]
fn inverse_rejects_non_coercive_r0() {
    let st = CoerciveStructure {
        p: DMatrix::identity(1, 1),
        h: DMatrix::zeros(1, 1),
        gamma: DMatrix::zeros(1, 1),
        z: PolyMat1::constant(Var1::S, SMat::identity(1)),
        // R0(s) = s is nonpositive on [-1, 0]
        r0: PolyMat1::from_coeffs(Var1::S, vec![SMat::zeros(1, 1), SMat::identity(1)]),
    };
    match inverse_structured(&st, 32) {
        Err(InverseError::R0NotCoercive { .. }) => {}
        other => panic!("expected R0NotCoercive, got {other:?}"),
    }
}

#[test]
fn inverse_rejects_singular_p() {
    let st = CoerciveStructure {
        p: DMatrix::zeros(2, 2),
        h: DMatrix::zeros(2, 1),
        gamma: DMatrix::zeros(1, 1),
        z: PolyMat1::constant(Var1::S, SMat::from_dense(&DMatrix::identity(1, 1))),
        r0: PolyMat1::constant(Var1::S, SMat::identity(1)),
    };
    assert!(matches!(
        inverse_structured(&st, 32),
        Err(InverseError::PSingular(_))
    ));
}
