//! Decision-variable parameterizations of the operators entering the LPI.
//!
//! The positive operator variable is structured for analytic inversion:
//!
//! * a symmetric matrix M over [x; ∫Z(s)φ(s)ds] with blocks P = M11,
//!   H = M12, Γ = M22, constrained M ⪰ diag(εI_n, 0);
//! * a multiplier R0(s) = Y(s)ᵀ N Y(s) + εI with N ⪰ 0.
//!
//! Together these give 𝒫 = Π[P, HZ(s); Z(s)ᵀHᵀ, {R0, ZᵀΓZ, ZᵀΓZ}] with
//! ⟨v, 𝒫v⟩ ≥ ε‖v‖², self-adjoint by construction. The synthesis variable
//! 𝒵 = Π[Z1, ∅; Z(s)ᵀW, ∅] is unconstrained.

use crate::piop::{CoerciveStructure, OpDims, PiOp};
use crate::poly::{PolyMat1, PolyMat2, SMat, Var1};
use crate::scalar::Scalar;
use crate::sdp::{MatVarRef, SdpProblem};
use nalgebra::DMatrix;

/// Monomial basis Z(s) = [1, s, .., s^dp]ᵀ ⊗ I_ns as a numeric polynomial
/// matrix ((dp+1)·ns × ns).
pub fn monomial_basis(dp: usize, ns: usize) -> PolyMat1 {
    let nz = (dp + 1) * ns;
    let coeffs = (0..=dp)
        .map(|a| {
            let mut m = SMat::zeros(nz, ns);
            for c in 0..ns {
                m[(a * ns + c, c)] = Scalar::num(1.0);
            }
            m
        })
        .collect();
    PolyMat1::from_coeffs(Var1::S, coeffs)
}

/// Declared decision blocks of the structured positive operator.
#[derive(Clone, Debug)]
pub struct PosCert {
    pub m_ref: MatVarRef,
    pub n_ref: Option<MatVarRef>,
    pub n: usize,
    pub ns: usize,
    pub dp: usize,
    pub eps: f64,
}

impl PosCert {
    pub fn declare(prob: &mut SdpProblem, n: usize, ns: usize, dp: usize, eps: f64) -> PosCert {
        let nz = (dp + 1) * ns;
        let m_ref = prob.add_mat_var("M", n + nz);
        let n_ref = if ns > 0 {
            Some(prob.add_mat_var("N", nz))
        } else {
            None
        };
        PosCert {
            m_ref,
            n_ref,
            n,
            ns,
            dp,
            eps,
        }
    }

    pub fn nz(&self) -> usize {
        (self.dp + 1) * self.ns
    }

    /// The operator 𝒫 with affine-scalar kernels.
    pub fn to_op(&self, prob: &SdpProblem) -> PiOp {
        let (n, ns, dp) = (self.n, self.ns, self.dp);
        let nz = self.nz();
        let mut op = PiOp::zero(OpDims {
            m_out: n,
            n_out: ns,
            m_in: n,
            n_in: ns,
        });
        // P = M11 + εI
        let mut p = SMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Scalar::var(prob.mat_entry(self.m_ref, i, j));
                if i == j {
                    s = s.add(&Scalar::num(self.eps));
                }
                p[(i, j)] = s;
            }
        }
        op.p = p;
        if ns == 0 {
            return op;
        }
        // Q1(θ) = H Z(θ): coefficient of θ^a at (i, c) is H[i, a·ns + c].
        let q1_coeffs: Vec<SMat> = (0..=dp)
            .map(|a| {
                let mut m = SMat::zeros(n, ns);
                for i in 0..n {
                    for c in 0..ns {
                        m[(i, c)] = Scalar::var(prob.mat_entry(self.m_ref, i, n + a * ns + c));
                    }
                }
                m
            })
            .collect();
        op.q1 = PolyMat1::from_coeffs(Var1::Theta, q1_coeffs.clone());
        op.q_low = PolyMat1::from_coeffs(
            Var1::S,
            q1_coeffs.iter().map(|m| m.transpose()).collect(),
        );
        // R0(s) = Y(s)ᵀ N Y(s) + εI
        let n_ref = self.n_ref.unwrap();
        let mut r0_coeffs = vec![SMat::zeros(ns, ns); 2 * dp + 1];
        for a in 0..=dp {
            for b in 0..=dp {
                for c in 0..ns {
                    for d in 0..ns {
                        let v = Scalar::var(prob.mat_entry(n_ref, a * ns + c, b * ns + d));
                        r0_coeffs[a + b][(c, d)] = r0_coeffs[a + b][(c, d)].add(&v);
                    }
                }
            }
        }
        for c in 0..ns {
            r0_coeffs[0][(c, c)] = r0_coeffs[0][(c, c)].add(&Scalar::num(self.eps));
        }
        op.r0 = PolyMat1::from_coeffs(Var1::S, r0_coeffs);
        // R1 = R2 = Z(s)ᵀ Γ Z(θ) with Γ = M22.
        let mut r1 = PolyMat2::zeros(ns, ns, dp, dp);
        for a in 0..=dp {
            for b in 0..=dp {
                let mut m = SMat::zeros(ns, ns);
                for c in 0..ns {
                    for d in 0..ns {
                        m[(c, d)] =
                            Scalar::var(prob.mat_entry(self.m_ref, n + a * ns + c, n + b * ns + d));
                    }
                }
                *r1.coeff_mut(a, b) = m;
            }
        }
        op.r1 = r1.clone();
        op.r2 = r1;
        let _ = nz;
        op
    }

    /// PSD side constraints: M - diag(εI_n, 0) ⪰ 0 is the declared block, so
    /// the operator view above must shift the P diagonal, which it does; N is
    /// PSD as declared. Nothing further to add here.
    ///
    /// Numeric certificate blocks from a solved variable vector.
    pub fn numeric(&self, prob: &SdpProblem, values: &[f64]) -> NumericCert {
        let (n, ns, dp) = (self.n, self.ns, self.dp);
        let nz = self.nz();
        let mut m_full = DMatrix::zeros(n + nz, n + nz);
        for i in 0..(n + nz) {
            for j in i..(n + nz) {
                let v = values[prob.mat_entry(self.m_ref, i, j) as usize];
                m_full[(i, j)] = v;
                m_full[(j, i)] = v;
            }
        }
        // shift back to the operator blocks
        for i in 0..n {
            m_full[(i, i)] += self.eps;
        }
        let p = m_full.view((0, 0), (n, n)).into_owned();
        let h = m_full.view((0, n), (n, nz)).into_owned();
        let gamma = m_full.view((n, n), (nz, nz)).into_owned();
        let n_mat = self.n_ref.map(|nr| {
            let mut nm = DMatrix::zeros(nz, nz);
            for i in 0..nz {
                for j in i..nz {
                    let v = values[prob.mat_entry(nr, i, j) as usize];
                    nm[(i, j)] = v;
                    nm[(j, i)] = v;
                }
            }
            nm
        });
        NumericCert {
            p,
            h,
            gamma,
            n_mat,
            eps: self.eps,
            dp,
            n,
            ns,
        }
    }
}

/// Numeric certificate blocks (P, H, Γ, N, ε).
#[derive(Clone, Debug)]
pub struct NumericCert {
    pub p: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub n_mat: Option<DMatrix<f64>>,
    pub eps: f64,
    pub dp: usize,
    pub n: usize,
    pub ns: usize,
}

impl NumericCert {
    /// R0(s) = Y(s)ᵀ N Y(s) + εI as a numeric polynomial.
    pub fn r0_poly(&self) -> PolyMat1 {
        let (ns, dp) = (self.ns, self.dp);
        if ns == 0 {
            return PolyMat1::zeros(Var1::S, 0, 0);
        }
        let nm = self.n_mat.as_ref().expect("ns > 0 implies N present");
        let mut coeffs = vec![SMat::zeros(ns, ns); 2 * dp + 1];
        for a in 0..=dp {
            for b in 0..=dp {
                for c in 0..ns {
                    for d in 0..ns {
                        let v = nm[(a * ns + c, b * ns + d)];
                        if v != 0.0 {
                            coeffs[a + b][(c, d)] =
                                coeffs[a + b][(c, d)].add(&Scalar::num(v));
                        }
                    }
                }
            }
        }
        for c in 0..ns {
            coeffs[0][(c, c)] = coeffs[0][(c, c)].add(&Scalar::num(self.eps));
        }
        PolyMat1::from_coeffs(Var1::S, coeffs)
    }

    pub fn structure(&self) -> CoerciveStructure {
        CoerciveStructure {
            p: self.p.clone(),
            h: self.h.clone(),
            gamma: self.gamma.clone(),
            z: monomial_basis(self.dp, self.ns),
            r0: self.r0_poly(),
        }
    }

    /// The numeric operator 𝒫.
    pub fn to_op(&self) -> PiOp {
        if self.ns == 0 {
            return PiOp::from_dense(&self.p);
        }
        self.structure().to_op()
    }
}

/// The unconstrained operator variable 𝒵 = Π[Z1, ∅; Z(s)ᵀ W, ∅].
#[derive(Clone, Debug)]
pub struct ZVar {
    pub z1: Vec<crate::scalar::VarId>,
    pub w: Vec<crate::scalar::VarId>,
    pub n: usize,
    pub ns: usize,
    pub dp: usize,
    pub q: usize,
}

impl ZVar {
    pub fn declare(prob: &mut SdpProblem, n: usize, ns: usize, dp: usize, q: usize) -> ZVar {
        let nz = (dp + 1) * ns;
        let z1 = (0..n * q)
            .map(|k| prob.add_free_var(&format!("Z1_{}_{}", k / q, k % q)))
            .collect();
        let w = (0..nz * q)
            .map(|k| prob.add_free_var(&format!("W_{}_{}", k / q, k % q)))
            .collect();
        ZVar {
            z1,
            w,
            n,
            ns,
            dp,
            q,
        }
    }

    pub fn to_op(&self) -> PiOp {
        let (n, ns, dp, q) = (self.n, self.ns, self.dp, self.q);
        let mut op = PiOp::zero(OpDims {
            m_out: n,
            n_out: ns,
            m_in: q,
            n_in: 0,
        });
        let mut p = SMat::zeros(n, q);
        for i in 0..n {
            for j in 0..q {
                p[(i, j)] = Scalar::var(self.z1[i * q + j]);
            }
        }
        op.p = p;
        if ns > 0 {
            // Z(s)ᵀ W: coefficient of s^a at (c, j) is W[a·ns + c, j].
            let coeffs: Vec<SMat> = (0..=dp)
                .map(|a| {
                    let mut m = SMat::zeros(ns, q);
                    for c in 0..ns {
                        for j in 0..q {
                            m[(c, j)] = Scalar::var(self.w[(a * ns + c) * q + j]);
                        }
                    }
                    m
                })
                .collect();
            op.q_low = PolyMat1::from_coeffs(Var1::S, coeffs);
        }
        op
    }

    pub fn numeric(&self, values: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let nz = (self.dp + 1) * self.ns;
        let z1 = DMatrix::from_fn(self.n, self.q, |i, j| values[self.z1[i * self.q + j] as usize]);
        let w = DMatrix::from_fn(nz, self.q, |i, j| values[self.w[i * self.q + j] as usize]);
        (z1, w)
    }
}
