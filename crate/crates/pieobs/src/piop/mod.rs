//! The 4-PI operator algebra on Z_{m,n} = ℝᵐ × L₂ⁿ[-1, 0].
//!
//! An operator maps [x; φ] to
//!
//! ```text
//! top       = P x + ∫_{-1}^{0} Q1(θ) φ(θ) dθ
//! bottom(s) = Qlow(s) x + R0(s) φ(s) + ∫_{-1}^{s} R1(s,θ) φ(θ) dθ
//!                                    + ∫_{s}^{0} R2(s,θ) φ(θ) dθ
//! ```
//!
//! `Qlow` is the lower-left kernel stored directly (it acts on x as written),
//! so a self-adjoint operator satisfies `Qlow(s) = Q1(s)ᵀ`, `R0 = R0ᵀ` and
//! `R1(s,θ) = R2(θ,s)ᵀ`. The class is closed under addition, composition and
//! adjoints, and those operations are computed in closed form on the
//! polynomial kernels.

mod compose;
mod discretize;
mod inverse;

pub use inverse::{inverse_structured, CoerciveStructure, InverseError, StructuredInverse};

use crate::poly::{PolyMat1, PolyMat2, SMat, Var1};
use crate::quad::gauss_legendre;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// Sizes of the finite (ℝᵐ) and L₂ⁿ parts of the output and input spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpDims {
    pub m_out: usize,
    pub n_out: usize,
    pub m_in: usize,
    pub n_in: usize,
}

/// A 4-PI operator with polynomial kernels and affine-scalar coefficients.
#[derive(Clone, Debug)]
pub struct PiOp {
    pub dims: OpDims,
    pub p: SMat,
    /// m_out × n_in, function of the integration variable θ.
    pub q1: PolyMat1,
    /// n_out × m_in, function of the output position s.
    pub q_low: PolyMat1,
    /// n_out × n_in multiplier kernel.
    pub r0: PolyMat1,
    /// n_out × n_in one-sided kernels in (s, θ).
    pub r1: PolyMat2,
    pub r2: PolyMat2,
}

impl PiOp {
    pub fn zero(dims: OpDims) -> Self {
        PiOp {
            dims,
            p: SMat::zeros(dims.m_out, dims.m_in),
            q1: PolyMat1::zeros(Var1::Theta, dims.m_out, dims.n_in),
            q_low: PolyMat1::zeros(Var1::S, dims.n_out, dims.m_in),
            r0: PolyMat1::zeros(Var1::S, dims.n_out, dims.n_in),
            r1: PolyMat2::zeros(dims.n_out, dims.n_in, 0, 0),
            r2: PolyMat2::zeros(dims.n_out, dims.n_in, 0, 0),
        }
    }

    /// Identity on Z_{m,n}.
    pub fn identity(m: usize, n: usize) -> Self {
        let mut op = PiOp::zero(OpDims {
            m_out: m,
            n_out: n,
            m_in: m,
            n_in: n,
        });
        op.p = SMat::identity(m);
        op.r0 = PolyMat1::constant(Var1::S, SMat::identity(n));
        op
    }

    /// A purely finite-dimensional operator (matrix on ℝ-parts).
    pub fn from_matrix(p: SMat) -> Self {
        let dims = OpDims {
            m_out: p.nrows,
            n_out: 0,
            m_in: p.ncols,
            n_in: 0,
        };
        let mut op = PiOp::zero(dims);
        op.p = p;
        op
    }

    pub fn from_dense(p: &DMatrix<f64>) -> Self {
        PiOp::from_matrix(SMat::from_dense(p))
    }

    pub fn is_numeric(&self) -> bool {
        self.p.is_numeric()
            && self.q1.coeffs.iter().all(|c| c.is_numeric())
            && self.q_low.coeffs.iter().all(|c| c.is_numeric())
            && self.r0.coeffs.iter().all(|c| c.is_numeric())
            && self.r1.coeffs.iter().all(|c| c.is_numeric())
            && self.r2.coeffs.iter().all(|c| c.is_numeric())
    }

    /// Substitute decision-variable values, yielding a numeric operator.
    pub fn eval_vars(&self, values: &[f64]) -> PiOp {
        PiOp {
            dims: self.dims,
            p: SMat::from_dense(&self.p.eval(values)),
            q1: self.q1.eval_vars(values),
            q_low: self.q_low.eval_vars(values),
            r0: self.r0.eval_vars(values),
            r1: self.r1.eval_vars(values),
            r2: self.r2.eval_vars(values),
        }
    }

    pub fn add(&self, other: &PiOp) -> PiOp {
        assert_eq!(self.dims, other.dims, "operator dimension mismatch");
        PiOp {
            dims: self.dims,
            p: self.p.add(&other.p),
            q1: self.q1.add(&other.q1),
            q_low: self.q_low.add(&other.q_low),
            r0: self.r0.add(&other.r0),
            r1: self.r1.add(&other.r1),
            r2: self.r2.add(&other.r2),
        }
    }

    pub fn sub(&self, other: &PiOp) -> PiOp {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> PiOp {
        PiOp {
            dims: self.dims,
            p: self.p.scale(k),
            q1: self.q1.scale(k),
            q_low: self.q_low.scale(k),
            r0: self.r0.scale(k),
            r1: self.r1.scale(k),
            r2: self.r2.scale(k),
        }
    }

    pub fn scale_scalar(&self, k: &Scalar) -> PiOp {
        PiOp {
            dims: self.dims,
            p: self.p.scale_scalar(k),
            q1: self.q1.scale_scalar(k),
            q_low: self.q_low.scale_scalar(k),
            r0: self.r0.scale_scalar(k),
            r1: self.r1.scale_scalar(k),
            r2: self.r2.scale_scalar(k),
        }
    }

    /// Adjoint with respect to the Z_{m,n} inner product.
    pub fn adjoint(&self) -> PiOp {
        PiOp {
            dims: OpDims {
                m_out: self.dims.m_in,
                n_out: self.dims.n_in,
                m_in: self.dims.m_out,
                n_in: self.dims.n_out,
            },
            p: self.p.transpose(),
            q1: self.q_low.transpose().retag(Var1::Theta),
            q_low: self.q1.transpose().retag(Var1::S),
            r0: self.r0.transpose(),
            r1: self.r2.transpose_swap(),
            r2: self.r1.transpose_swap(),
        }
    }

    /// Structural self-adjointness check on numeric operators.
    pub fn self_adjoint_defect(&self) -> f64 {
        let adj = self.adjoint();
        let d = self.sub(&adj);
        let mut worst: f64 = 0.0;
        for c in d
            .p
            .data
            .iter()
            .chain(d.q1.coeffs.iter().flat_map(|m| m.data.iter()))
            .chain(d.q_low.coeffs.iter().flat_map(|m| m.data.iter()))
            .chain(d.r0.coeffs.iter().flat_map(|m| m.data.iter()))
            .chain(d.r1.coeffs.iter().flat_map(|m| m.data.iter()))
            .chain(d.r2.coeffs.iter().flat_map(|m| m.data.iter()))
        {
            worst = worst.max(c.as_f64().abs());
        }
        worst
    }

    /// Composition A ∘ B in closed form; see `compose.rs` for the formulas.
    pub fn compose(&self, other: &PiOp) -> PiOp {
        compose::compose(self, other)
    }

    /// Dense matrix acting on [x; √w_j φ(s_j)] coordinates at Gauss nodes.
    pub fn discretize(&self, n_nodes: usize) -> DMatrix<f64> {
        discretize::discretize(self, n_nodes)
    }

    /// Numeric action on a vector and a grid function.
    pub fn apply(&self, x: &DVector<f64>, phi: &GridFn) -> (DVector<f64>, GridFn) {
        assert!(self.is_numeric(), "operator carries decision variables");
        assert_eq!(x.len(), self.dims.m_in, "finite part dimension mismatch");
        assert_eq!(phi.dim, self.dims.n_in, "L2 part dimension mismatch");
        let p = self.p.to_dense();
        let mut top = &p * x;
        let nn = phi.nodes.len();
        // top integral
        if self.dims.n_in > 0 && self.dims.m_out > 0 {
            for j in 0..nn {
                let q1 = self.q1.eval(phi.nodes[j]);
                top += q1 * &phi.values[j] * phi.weights[j];
            }
        }
        let mut out = GridFn::zeros_like(phi, self.dims.n_out);
        if self.dims.n_out > 0 {
            for i in 0..nn {
                let s = phi.nodes[i];
                let mut v = self.q_low.eval(s) * x;
                if self.dims.n_in > 0 {
                    v += self.r0.eval(s) * &phi.values[i];
                    // One-sided integrals by Gauss quadrature; the diagonal
                    // node carries half weight on each side so that kernels
                    // with R1 = R2 integrate as a single full-range rule.
                    for j in 0..nn {
                        let t = phi.nodes[j];
                        let w = phi.weights[j];
                        if j < i {
                            v += self.r1.eval(s, t) * &phi.values[j] * w;
                        } else if j > i {
                            v += self.r2.eval(s, t) * &phi.values[j] * w;
                        } else {
                            v += (self.r1.eval(s, t) + self.r2.eval(s, t))
                                * &phi.values[j]
                                * (0.5 * w);
                        }
                    }
                }
                out.values[i] = v;
            }
        }
        (top, out)
    }

    /// Block concatenation. Entry (i, j) maps column block j's space into row
    /// block i's space; finite parts are ordered before L2 parts globally.
    pub fn block_concat(grid: &[Vec<PiOp>]) -> PiOp {
        assert!(!grid.is_empty() && !grid[0].is_empty());
        let _nrows = grid.len();
        let ncols = grid[0].len();
        assert!(grid.iter().all(|r| r.len() == ncols), "ragged block grid");
        for (i, row) in grid.iter().enumerate() {
            for (j, op) in row.iter().enumerate() {
                assert_eq!(
                    (op.dims.m_out, op.dims.n_out),
                    (grid[i][0].dims.m_out, grid[i][0].dims.n_out),
                    "row {i} output dims inconsistent at col {j}"
                );
                assert_eq!(
                    (op.dims.m_in, op.dims.n_in),
                    (grid[0][j].dims.m_in, grid[0][j].dims.n_in),
                    "col {j} input dims inconsistent at row {i}"
                );
            }
        }
        let m_outs: Vec<usize> = grid.iter().map(|r| r[0].dims.m_out).collect();
        let n_outs: Vec<usize> = grid.iter().map(|r| r[0].dims.n_out).collect();
        let m_ins: Vec<usize> = grid[0].iter().map(|c| c.dims.m_in).collect();
        let n_ins: Vec<usize> = grid[0].iter().map(|c| c.dims.n_in).collect();
        let dims = OpDims {
            m_out: m_outs.iter().sum(),
            n_out: n_outs.iter().sum(),
            m_in: m_ins.iter().sum(),
            n_in: n_ins.iter().sum(),
        };
        let offs = |v: &[usize]| -> Vec<usize> {
            let mut o = vec![0];
            for &x in v {
                o.push(o.last().unwrap() + x);
            }
            o
        };
        let (mo, no, mi, ni) = (offs(&m_outs), offs(&n_outs), offs(&m_ins), offs(&n_ins));

        let mut out = PiOp::zero(dims);
        // Degree envelopes so the placement targets are allocated once.
        let env1 = |sel: fn(&PiOp) -> &PolyMat1| -> usize {
            grid.iter()
                .flat_map(|r| r.iter())
                .map(|op| sel(op).degree())
                .max()
                .unwrap()
        };
        let env2 = |sel: fn(&PiOp) -> &PolyMat2| -> (usize, usize) {
            grid.iter().flat_map(|r| r.iter()).fold((0, 0), |acc, op| {
                let d = sel(op).degrees();
                (acc.0.max(d.0), acc.1.max(d.1))
            })
        };
        out.q1 = PolyMat1 {
            var: Var1::Theta,
            nrows: dims.m_out,
            ncols: dims.n_in,
            coeffs: vec![SMat::zeros(dims.m_out, dims.n_in); env1(|o| &o.q1) + 1],
        };
        out.q_low = PolyMat1 {
            var: Var1::S,
            nrows: dims.n_out,
            ncols: dims.m_in,
            coeffs: vec![SMat::zeros(dims.n_out, dims.m_in); env1(|o| &o.q_low) + 1],
        };
        out.r0 = PolyMat1 {
            var: Var1::S,
            nrows: dims.n_out,
            ncols: dims.n_in,
            coeffs: vec![SMat::zeros(dims.n_out, dims.n_in); env1(|o| &o.r0) + 1],
        };
        let d1 = env2(|o| &o.r1);
        let d2 = env2(|o| &o.r2);
        out.r1 = PolyMat2::zeros(dims.n_out, dims.n_in, d1.0, d1.1);
        out.r2 = PolyMat2::zeros(dims.n_out, dims.n_in, d2.0, d2.1);

        let place = |dst: &mut SMat, src: &SMat, ro: usize, co: usize| {
            for i in 0..src.nrows {
                for j in 0..src.ncols {
                    if !src[(i, j)].is_zero() {
                        dst[(ro + i, co + j)] = src[(i, j)].clone();
                    }
                }
            }
        };
        for (i, row) in grid.iter().enumerate() {
            for (j, op) in row.iter().enumerate() {
                place(&mut out.p, &op.p, mo[i], mi[j]);
                for (k, c) in op.q1.coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        place(&mut out.q1.coeffs[k], c, mo[i], ni[j]);
                    }
                }
                for (k, c) in op.q_low.coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        place(&mut out.q_low.coeffs[k], c, no[i], mi[j]);
                    }
                }
                for (k, c) in op.r0.coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        place(&mut out.r0.coeffs[k], c, no[i], ni[j]);
                    }
                }
                for a in 0..=op.r1.deg_s {
                    for b in 0..=op.r1.deg_t {
                        let src = op.r1.coeff(a, b).clone();
                        if !src.is_zero() {
                            place(out.r1.coeff_mut(a, b), &src, no[i], ni[j]);
                        }
                    }
                }
                for a in 0..=op.r2.deg_s {
                    for b in 0..=op.r2.deg_t {
                        let src = op.r2.coeff(a, b).clone();
                        if !src.is_zero() {
                            place(out.r2.coeff_mut(a, b), &src, no[i], ni[j]);
                        }
                    }
                }
            }
        }
        out
    }
}

/// An ℝⁿ-valued function sampled on a quadrature grid over [-1, 0].
#[derive(Clone, Debug)]
pub struct GridFn {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub dim: usize,
    pub values: Vec<DVector<f64>>,
}

impl GridFn {
    pub fn gauss(n_nodes: usize, dim: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n_nodes);
        GridFn {
            values: vec![DVector::zeros(dim); nodes.len()],
            nodes,
            weights,
            dim,
        }
    }

    /// Uniform grid with trapezoid weights, nodes[0] = -1, nodes[last] = 0.
    pub fn uniform(n_nodes: usize, dim: usize) -> Self {
        assert!(n_nodes >= 2, "grid needs at least two nodes");
        let h = 1.0 / (n_nodes - 1) as f64;
        let nodes: Vec<f64> = (0..n_nodes).map(|i| -1.0 + i as f64 * h).collect();
        let mut weights = vec![h; n_nodes];
        weights[0] = h / 2.0;
        weights[n_nodes - 1] = h / 2.0;
        GridFn {
            values: vec![DVector::zeros(dim); n_nodes],
            nodes,
            weights,
            dim,
        }
    }

    pub fn from_fn(mut self, f: impl Fn(f64) -> DVector<f64>) -> Self {
        for (i, &s) in self.nodes.iter().enumerate() {
            let v = f(s);
            assert_eq!(v.len(), self.dim);
            self.values[i] = v;
        }
        self
    }

    pub fn zeros_like(other: &GridFn, dim: usize) -> Self {
        GridFn {
            nodes: other.nodes.clone(),
            weights: other.weights.clone(),
            dim,
            values: vec![DVector::zeros(dim); other.nodes.len()],
        }
    }

    /// L₂ inner product by quadrature.
    pub fn inner(&self, other: &GridFn) -> f64 {
        assert_eq!(self.nodes.len(), other.nodes.len());
        self.values
            .iter()
            .zip(&other.values)
            .zip(&self.weights)
            .map(|((a, b), &w)| w * a.dot(b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

/// Inner product on Z_{m,n} = ℝᵐ × L₂ⁿ.
pub fn z_inner(x: &DVector<f64>, phi: &GridFn, y: &DVector<f64>, psi: &GridFn) -> f64 {
    x.dot(y) + phi.inner(psi)
}

#[cfg(test)]
mod tests;
