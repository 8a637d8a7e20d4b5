//! Analytic inverse of separable coercive PI operators.
//!
//! For 𝒫 = Π[P, H Z(s); Z(s)ᵀHᵀ, {R0, R1, R2}] with R1 = R2 = Z(s)ᵀ Γ Z(θ),
//! self-adjoint and coercive, the inverse is again a PI operator with
//!
//! ```text
//! K  = ∫ Z R0⁻¹ Zᵀ ds                    (quadrature)
//! Ĥ  = P⁻¹ H (K Hᵀ P⁻¹ H - I - K Γ)⁻¹
//! Γ̂  = -(Ĥᵀ H + Γ)(I + K Γ)⁻¹
//! P̂  = (I - Ĥ K Hᵀ) P⁻¹
//! Q̂(s)  = Ĥ Z(s) R0(s)⁻¹,  R̂0(s) = R0(s)⁻¹
//! R̂1 = R̂2 = R̂0(s) Z(s)ᵀ Γ̂ Z(θ) R̂0(θ)
//! ```
//!
//! R0(s)⁻¹ makes the kernels rational, so they are exposed as pointwise
//! evaluators backed by dense solves rather than as polynomial matrices.

use super::{GridFn, PiOp};
use crate::poly::{PolyMat1, SMat, Var1};
use crate::quad::gauss_legendre;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Error)]
pub enum InverseError {
    #[error("matrix part P is singular or ill-conditioned (cond {0:.3e})")]
    PSingular(f64),
    #[error("{what} is ill-conditioned (cond {cond:.3e}); certificate is not coercive")]
    IllConditioned { what: &'static str, cond: f64 },
    #[error("R0({s}) has minimum eigenvalue {min_eig:.3e} <= 0; certificate is not coercive")]
    R0NotCoercive { s: f64, min_eig: f64 },
}

/// Numeric data of a separable coercive operator in Theorem-2 form.
#[derive(Clone, Debug)]
pub struct CoerciveStructure {
    pub p: DMatrix<f64>,
    /// n × nz coupling, so that Q1(s) = H Z(s).
    pub h: DMatrix<f64>,
    /// nz × nz kernel Gram block, R1 = R2 = Z(s)ᵀ Γ Z(θ).
    pub gamma: DMatrix<f64>,
    /// nz × ns polynomial basis Z(s).
    pub z: PolyMat1,
    /// ns × ns multiplier, pointwise SPD on [-1, 0].
    pub r0: PolyMat1,
}

impl CoerciveStructure {
    pub fn nz(&self) -> usize {
        self.z.nrows
    }

    pub fn ns(&self) -> usize {
        self.z.ncols
    }

    /// The operator 𝒫 itself, as a numeric PI operator.
    pub fn to_op(&self) -> PiOp {
        let n = self.p.nrows();
        let ns = self.ns();
        let mut op = PiOp::zero(super::OpDims {
            m_out: n,
            n_out: ns,
            m_in: n,
            n_in: ns,
        });
        op.p = SMat::from_dense(&self.p);
        let h = SMat::from_dense(&self.h);
        op.q1 = self.z.mul_smat_left(&h).retag(Var1::Theta);
        op.q_low = self.z.transpose().mul_smat_right(&h.transpose()).retag(Var1::S);
        op.r0 = self.r0.clone();
        let zt_gamma = self
            .z
            .transpose()
            .mul_smat_right(&SMat::from_dense(&self.gamma));
        op.r1 = zt_gamma.retag(Var1::S).mul_cross(&self.z.clone().retag(Var1::Theta));
        op.r2 = op.r1.clone();
        op
    }
}

/// Inverse operator with rational kernels, exposed as evaluators.
#[derive(Clone, Debug)]
pub struct StructuredInverse {
    pub p_hat: DMatrix<f64>,
    pub h_hat: DMatrix<f64>,
    pub gamma_hat: DMatrix<f64>,
    pub k: DMatrix<f64>,
    z: PolyMat1,
    r0: PolyMat1,
}

fn cond_of(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn checked_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>, InverseError> {
    let cond = cond_of(m);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(InverseError::IllConditioned { what, cond });
    }
    m.clone()
        .try_inverse()
        .ok_or(InverseError::IllConditioned { what, cond })
}

/// Lemma-3 inverse of a separable coercive operator.
///
/// `quad_n` is the node count of the Gauss rule used for K (64 by default in
/// callers, exact for polynomial R0⁻¹-free integrands and accurate to
/// quadrature precision otherwise).
pub fn inverse_structured(
    st: &CoerciveStructure,
    quad_n: usize,
) -> Result<StructuredInverse, InverseError> {
    let n = st.p.nrows();
    let nz = st.nz();
    assert_eq!(st.h.nrows(), n);
    assert_eq!(st.h.ncols(), nz);
    assert_eq!(st.gamma.nrows(), nz);
    assert_eq!(st.gamma.ncols(), nz);

    let cond_p = cond_of(&st.p);
    if !cond_p.is_finite() || cond_p > COND_LIMIT {
        return Err(InverseError::PSingular(cond_p));
    }
    let p_inv = st
        .p
        .clone()
        .try_inverse()
        .ok_or(InverseError::PSingular(f64::INFINITY))?;

    // K = ∫ Z R0⁻¹ Zᵀ by quadrature, with a coercivity check at every node.
    let (nodes, weights) = gauss_legendre(quad_n);
    let mut k = DMatrix::zeros(nz, nz);
    for (&s, &w) in nodes.iter().zip(&weights) {
        let r0 = st.r0.eval(s);
        let eig = r0.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig <= 0.0 {
            return Err(InverseError::R0NotCoercive { s, min_eig });
        }
        let zs = st.z.eval(s);
        let r0_inv_zt = r0
            .clone()
            .cholesky()
            .ok_or(InverseError::R0NotCoercive { s, min_eig })?
            .solve(&zs.transpose());
        k += &zs * r0_inv_zt * w;
    }
    k = (&k + k.transpose()) * 0.5;

    let inner = &k * st.h.transpose() * &p_inv * &st.h
        - DMatrix::identity(nz, nz)
        - &k * &st.gamma;
    let inner_inv = checked_inverse(&inner, "K HᵀP⁻¹H - I - KΓ")?;
    let h_hat = &p_inv * &st.h * inner_inv;

    let ikg = DMatrix::identity(nz, nz) + &k * &st.gamma;
    let ikg_inv = checked_inverse(&ikg, "I + KΓ")?;
    let gamma_hat = -(h_hat.transpose() * &st.h + &st.gamma) * ikg_inv;

    let p_hat = (DMatrix::identity(n, n) - &h_hat * &k * st.h.transpose()) * &p_inv;

    Ok(StructuredInverse {
        p_hat,
        h_hat,
        gamma_hat,
        k,
        z: st.z.clone(),
        r0: st.r0.clone(),
    })
}

impl StructuredInverse {
    pub fn r0_inv_at(&self, s: f64) -> DMatrix<f64> {
        let r0 = self.r0.eval(s);
        r0.try_inverse().expect("R0(s) invertible by construction")
    }

    /// Top-right kernel Q̂(θ) = Ĥ Z(θ) R0(θ)⁻¹.
    pub fn q_hat_at(&self, s: f64) -> DMatrix<f64> {
        &self.h_hat * self.z.eval(s) * self.r0_inv_at(s)
    }

    /// Action on Z_{n,ns}, all integrals by the grid's quadrature rule.
    pub fn apply(&self, x: &DVector<f64>, phi: &GridFn) -> (DVector<f64>, GridFn) {
        let nn = phi.nodes.len();
        // u = ∫ Z(θ) R0(θ)⁻¹ φ(θ) dθ reused by both parts.
        let nz = self.z.nrows;
        let mut u = DVector::zeros(nz);
        let mut r0inv_phi = Vec::with_capacity(nn);
        for j in 0..nn {
            let riv = self.r0_inv_at(phi.nodes[j]);
            let v = &riv * &phi.values[j];
            u += self.z.eval(phi.nodes[j]) * &v * phi.weights[j];
            r0inv_phi.push(v);
        }
        let top = &self.p_hat * x + &self.h_hat * &u;
        let mut out = GridFn::zeros_like(phi, phi.dim);
        for i in 0..nn {
            let s = phi.nodes[i];
            let riv = self.r0_inv_at(s);
            let zs_t = self.z.eval(s).transpose();
            let mut v = &riv * &zs_t * self.h_hat.transpose() * x;
            v += &r0inv_phi[i];
            v += riv * zs_t * &self.gamma_hat * &u;
            out.values[i] = v;
        }
        (top, out)
    }
}
