//! Matrix-valued polynomials in one variable (s or θ) and two variables
//! (s, θ) on the interval [-1, 0], with entries that are numbers or affine
//! expressions in decision variables.
//!
//! The monomial basis with dense coefficient storage is used throughout;
//! degrees stay small in this problem class. Exact antiderivatives back all
//! integration, so there is no quadrature error inside the algebra.

use crate::scalar::Scalar;
use nalgebra::DMatrix;

/// Matrix with [`Scalar`] entries, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<Scalar>,
}

impl SMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SMat {
            nrows,
            ncols,
            data: vec![Scalar::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::num(1.0);
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut out = SMat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    out[(i, j)] = Scalar::num(m[(i, j)]);
                }
            }
        }
        out
    }

    /// Numeric contents; panics if any entry still carries variables.
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows, self.ncols, |i, j| self[(i, j)].as_f64())
    }

    pub fn eval(&self, values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows, self.ncols, |i, j| self[(i, j)].eval(values))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|s| s.is_zero())
    }

    pub fn is_numeric(&self) -> bool {
        self.data.iter().all(|s| s.is_numeric())
    }

    pub fn transpose(&self) -> SMat {
        let mut out = SMat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn add(&self, other: &SMat) -> SMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = a.add(b);
        }
        out
    }

    pub fn sub(&self, other: &SMat) -> SMat {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> SMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = a.scale(k);
        }
        out
    }

    pub fn scale_scalar(&self, k: &Scalar) -> SMat {
        let mut out = SMat::zeros(self.nrows, self.ncols);
        for (o, a) in out.data.iter_mut().zip(&self.data) {
            *o = a.mul(k);
        }
        out
    }

    pub fn mul(&self, other: &SMat) -> SMat {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in matrix product");
        let mut out = SMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.ncols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.ncols + j;
                    out.data[idx] = out.data[idx].add(&a.mul(b));
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for SMat {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.ncols + j]
    }
}

/// Variable tag for univariate polynomial matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var1 {
    S,
    Theta,
}

/// Matrix-valued polynomial in one variable on [-1, 0].
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMat1 {
    pub var: Var1,
    pub nrows: usize,
    pub ncols: usize,
    /// coeffs[k] multiplies var^k; never empty.
    pub coeffs: Vec<SMat>,
}

impl PolyMat1 {
    pub fn zeros(var: Var1, nrows: usize, ncols: usize) -> Self {
        PolyMat1 {
            var,
            nrows,
            ncols,
            coeffs: vec![SMat::zeros(nrows, ncols)],
        }
    }

    pub fn constant(var: Var1, m: SMat) -> Self {
        PolyMat1 {
            var,
            nrows: m.nrows,
            ncols: m.ncols,
            coeffs: vec![m],
        }
    }

    pub fn from_coeffs(var: Var1, coeffs: Vec<SMat>) -> Self {
        assert!(!coeffs.is_empty());
        let (nrows, ncols) = (coeffs[0].nrows, coeffs[0].ncols);
        assert!(coeffs.iter().all(|c| c.nrows == nrows && c.ncols == ncols));
        let mut p = PolyMat1 {
            var,
            nrows,
            ncols,
            coeffs,
        };
        p.trim();
        p
    }

    /// Minimal degree (trailing zero coefficients ignored).
    pub fn degree(&self) -> usize {
        let mut d = self.coeffs.len() - 1;
        while d > 0 && self.coeffs[d].is_zero() {
            d -= 1;
        }
        d
    }

    pub fn trim(&mut self) {
        let d = self.degree();
        self.coeffs.truncate(d + 1);
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn retag(mut self, var: Var1) -> Self {
        self.var = var;
        self
    }

    pub fn add(&self, other: &PolyMat1) -> PolyMat1 {
        assert_eq!(self.var, other.var, "variable tag mismatch");
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch");
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            let zero = SMat::zeros(self.nrows, self.ncols);
            let a = self.coeffs.get(k).unwrap_or(&zero);
            let b = other.coeffs.get(k).unwrap_or(&zero);
            coeffs.push(a.add(b));
        }
        PolyMat1::from_coeffs(self.var, coeffs)
    }

    pub fn sub(&self, other: &PolyMat1) -> PolyMat1 {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> PolyMat1 {
        PolyMat1::from_coeffs(self.var, self.coeffs.iter().map(|c| c.scale(k)).collect())
    }

    pub fn scale_scalar(&self, k: &Scalar) -> PolyMat1 {
        PolyMat1::from_coeffs(
            self.var,
            self.coeffs.iter().map(|c| c.scale_scalar(k)).collect(),
        )
    }

    pub fn transpose(&self) -> PolyMat1 {
        PolyMat1::from_coeffs(self.var, self.coeffs.iter().map(|c| c.transpose()).collect())
    }

    /// Product of polynomials in the same variable; degrees add.
    pub fn mul(&self, other: &PolyMat1) -> PolyMat1 {
        assert_eq!(self.var, other.var, "variable tag mismatch");
        assert_eq!(self.ncols, other.nrows, "shape mismatch in matrix product");
        let da = self.degree();
        let db = other.degree();
        let mut coeffs = vec![SMat::zeros(self.nrows, other.ncols); da + db + 1];
        for a in 0..=da {
            if self.coeffs[a].is_zero() {
                continue;
            }
            for b in 0..=db {
                if other.coeffs[b].is_zero() {
                    continue;
                }
                coeffs[a + b] = coeffs[a + b].add(&self.coeffs[a].mul(&other.coeffs[b]));
            }
        }
        PolyMat1::from_coeffs(self.var, coeffs)
    }

    pub fn mul_smat_left(&self, m: &SMat) -> PolyMat1 {
        PolyMat1::from_coeffs(self.var, self.coeffs.iter().map(|c| m.mul(c)).collect())
    }

    pub fn mul_smat_right(&self, m: &SMat) -> PolyMat1 {
        PolyMat1::from_coeffs(self.var, self.coeffs.iter().map(|c| c.mul(m)).collect())
    }

    /// Mixed-variable product: self in `s`, other in `θ` → bivariate kernel.
    pub fn mul_cross(&self, other: &PolyMat1) -> PolyMat2 {
        assert_eq!(self.var, Var1::S);
        assert_eq!(other.var, Var1::Theta);
        assert_eq!(self.ncols, other.nrows, "shape mismatch in matrix product");
        let ds = self.degree();
        let dt = other.degree();
        let mut out = PolyMat2::zeros(self.nrows, other.ncols, ds, dt);
        for a in 0..=ds {
            if self.coeffs[a].is_zero() {
                continue;
            }
            for b in 0..=dt {
                if other.coeffs[b].is_zero() {
                    continue;
                }
                let prod = self.coeffs[a].mul(&other.coeffs[b]);
                *out.coeff_mut(a, b) = out.coeff(a, b).add(&prod);
            }
        }
        out.trim();
        out
    }

    /// Exact ∫_{-1}^{0} A(s) ds.
    pub fn integrate_full(&self) -> SMat {
        let mut out = SMat::zeros(self.nrows, self.ncols);
        for (k, c) in self.coeffs.iter().enumerate() {
            // ∫_{-1}^0 s^k ds = (-1)^k / (k+1)
            let w = if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
            out = out.add(&c.scale(w));
        }
        out
    }

    /// Evaluate with Scalar entries (Horner); affine coefficients allowed.
    pub fn eval_scalar(&self, x: f64) -> SMat {
        let mut out = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            out = out.scale(x).add(c);
        }
        out
    }

    /// Numeric evaluation; panics when coefficients carry variables.
    pub fn eval(&self, x: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for c in self.coeffs.iter().rev() {
            out *= x;
            out += c.to_dense();
        }
        out
    }

    pub fn eval_vars(&self, values: &[f64]) -> PolyMat1 {
        PolyMat1::from_coeffs(
            self.var,
            self.coeffs
                .iter()
                .map(|c| SMat::from_dense(&c.eval(values)))
                .collect(),
        )
    }

    /// Lift to a bivariate kernel, placing the polynomial in the chosen slot.
    pub fn lift(&self, slot: Var1) -> PolyMat2 {
        let d = self.degree();
        let (ds, dt) = match slot {
            Var1::S => (d, 0),
            Var1::Theta => (0, d),
        };
        let mut out = PolyMat2::zeros(self.nrows, self.ncols, ds, dt);
        for k in 0..=d {
            match slot {
                Var1::S => *out.coeff_mut(k, 0) = self.coeffs[k].clone(),
                Var1::Theta => *out.coeff_mut(0, k) = self.coeffs[k].clone(),
            }
        }
        out
    }
}

/// Integration bound for reducing a bivariate kernel to one variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    NegOne,
    Zero,
    /// The surviving variable.
    Var,
}

/// Integration bound for kernel-kernel convolution ∫ A(s,θ) B(θ,ν) dθ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound2 {
    NegOne,
    Zero,
    S,
    Nu,
}

/// Matrix-valued polynomial in (s, θ) on [-1, 0]².
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMat2 {
    pub nrows: usize,
    pub ncols: usize,
    pub deg_s: usize,
    pub deg_t: usize,
    /// coeffs[a * (deg_t + 1) + b] multiplies s^a θ^b.
    pub coeffs: Vec<SMat>,
}

impl PolyMat2 {
    pub fn zeros(nrows: usize, ncols: usize, deg_s: usize, deg_t: usize) -> Self {
        PolyMat2 {
            nrows,
            ncols,
            deg_s,
            deg_t,
            coeffs: vec![SMat::zeros(nrows, ncols); (deg_s + 1) * (deg_t + 1)],
        }
    }

    pub fn coeff(&self, a: usize, b: usize) -> &SMat {
        &self.coeffs[a * (self.deg_t + 1) + b]
    }

    pub fn coeff_mut(&mut self, a: usize, b: usize) -> &mut SMat {
        &mut self.coeffs[a * (self.deg_t + 1) + b]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Minimal degrees along each variable.
    pub fn degrees(&self) -> (usize, usize) {
        let mut ds = 0;
        let mut dt = 0;
        for a in 0..=self.deg_s {
            for b in 0..=self.deg_t {
                if !self.coeff(a, b).is_zero() {
                    ds = ds.max(a);
                    dt = dt.max(b);
                }
            }
        }
        (ds, dt)
    }

    pub fn trim(&mut self) {
        let (ds, dt) = self.degrees();
        if ds == self.deg_s && dt == self.deg_t {
            return;
        }
        let mut out = PolyMat2::zeros(self.nrows, self.ncols, ds, dt);
        for a in 0..=ds {
            for b in 0..=dt {
                *out.coeff_mut(a, b) = self.coeff(a, b).clone();
            }
        }
        *self = out;
    }

    pub fn add(&self, other: &PolyMat2) -> PolyMat2 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch");
        let ds = self.deg_s.max(other.deg_s);
        let dt = self.deg_t.max(other.deg_t);
        let mut out = PolyMat2::zeros(self.nrows, self.ncols, ds, dt);
        for a in 0..=ds {
            for b in 0..=dt {
                let mut acc = SMat::zeros(self.nrows, self.ncols);
                if a <= self.deg_s && b <= self.deg_t {
                    acc = acc.add(self.coeff(a, b));
                }
                if a <= other.deg_s && b <= other.deg_t {
                    acc = acc.add(other.coeff(a, b));
                }
                *out.coeff_mut(a, b) = acc;
            }
        }
        out.trim();
        out
    }

    pub fn sub(&self, other: &PolyMat2) -> PolyMat2 {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> PolyMat2 {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = c.scale(k);
        }
        out
    }

    pub fn scale_scalar(&self, k: &Scalar) -> PolyMat2 {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = c.scale_scalar(k);
        }
        out
    }

    /// transposeSwap: A(s, θ) ↦ A(θ, s)ᵀ entrywise.
    pub fn transpose_swap(&self) -> PolyMat2 {
        let mut out = PolyMat2::zeros(self.ncols, self.nrows, self.deg_t, self.deg_s);
        for a in 0..=self.deg_s {
            for b in 0..=self.deg_t {
                *out.coeff_mut(b, a) = self.coeff(a, b).transpose();
            }
        }
        out.trim();
        out
    }

    /// Pointwise matrix product of kernels over the same (s, θ).
    pub fn mul(&self, other: &PolyMat2) -> PolyMat2 {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in matrix product");
        let mut out = PolyMat2::zeros(
            self.nrows,
            other.ncols,
            self.deg_s + other.deg_s,
            self.deg_t + other.deg_t,
        );
        for a1 in 0..=self.deg_s {
            for b1 in 0..=self.deg_t {
                let ca = self.coeff(a1, b1);
                if ca.is_zero() {
                    continue;
                }
                for a2 in 0..=other.deg_s {
                    for b2 in 0..=other.deg_t {
                        let cb = other.coeff(a2, b2);
                        if cb.is_zero() {
                            continue;
                        }
                        let prod = ca.mul(cb);
                        let c = out.coeff_mut(a1 + a2, b1 + b2);
                        *c = c.add(&prod);
                    }
                }
            }
        }
        out.trim();
        out
    }

    /// Multiply by a univariate polynomial in s on the left.
    pub fn mul_poly1_left(&self, p: &PolyMat1) -> PolyMat2 {
        assert_eq!(p.var, Var1::S);
        p.lift(Var1::S).mul(self)
    }

    /// Multiply by a univariate polynomial in θ on the right.
    pub fn mul_poly1_right(&self, p: &PolyMat1) -> PolyMat2 {
        assert_eq!(p.var, Var1::Theta);
        self.mul(&p.lift(Var1::Theta))
    }

    /// Integrate the second variable: ∫_{lo}^{hi} A(s, θ) dθ, result in s.
    pub fn int_second(&self, lo: Bound, hi: Bound, out_var: Var1) -> PolyMat1 {
        let max_deg = self.deg_s + self.deg_t + 1;
        let mut coeffs = vec![SMat::zeros(self.nrows, self.ncols); max_deg + 1];
        for a in 0..=self.deg_s {
            for b in 0..=self.deg_t {
                let c = self.coeff(a, b);
                if c.is_zero() {
                    continue;
                }
                let inv = 1.0 / (b as f64 + 1.0);
                // F(x) = x^{b+1} / (b+1), result += c s^a (F(hi) - F(lo))
                for (bound, sign) in [(hi, 1.0), (lo, -1.0)] {
                    match bound {
                        Bound::Zero => {}
                        Bound::NegOne => {
                            let v = sign * inv * if (b + 1) % 2 == 0 { 1.0 } else { -1.0 };
                            coeffs[a] = coeffs[a].add(&c.scale(v));
                        }
                        Bound::Var => {
                            coeffs[a + b + 1] = coeffs[a + b + 1].add(&c.scale(sign * inv));
                        }
                    }
                }
            }
        }
        PolyMat1::from_coeffs(out_var, coeffs)
    }

    /// Integrate the first variable: ∫_{lo}^{hi} A(s, θ) ds, result in θ.
    pub fn int_first(&self, lo: Bound, hi: Bound, out_var: Var1) -> PolyMat1 {
        self.transpose_swap()
            .int_second(lo, hi, out_var)
            .transpose()
    }

    pub fn eval(&self, s: f64, t: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for a in 0..=self.deg_s {
            for b in 0..=self.deg_t {
                let c = self.coeff(a, b);
                if c.is_zero() {
                    continue;
                }
                out += c.to_dense() * (s.powi(a as i32) * t.powi(b as i32));
            }
        }
        out
    }

    pub fn eval_vars(&self, values: &[f64]) -> PolyMat2 {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = SMat::from_dense(&c.eval(values));
        }
        out
    }
}

/// Kernel convolution ∫_{lo}^{hi} A(s, θ) B(θ, ν) dθ; the result is a kernel
/// in (s, ν). Bounds may reference the surviving variables.
pub fn int_middle(a: &PolyMat2, b: &PolyMat2, lo: Bound2, hi: Bound2) -> PolyMat2 {
    assert_eq!(a.ncols, b.nrows, "shape mismatch in kernel convolution");
    // Max power that can land on s: a-power + (θ-power sum + 1); same for ν.
    let max_s = a.deg_s + a.deg_t + b.deg_s + 1;
    let max_nu = b.deg_t + a.deg_t + b.deg_s + 1;
    let mut out = PolyMat2::zeros(a.nrows, b.ncols, max_s, max_nu);
    for a1 in 0..=a.deg_s {
        for b1 in 0..=a.deg_t {
            let ca = a.coeff(a1, b1);
            if ca.is_zero() {
                continue;
            }
            for a2 in 0..=b.deg_s {
                for b2 in 0..=b.deg_t {
                    let cb = b.coeff(a2, b2);
                    if cb.is_zero() {
                        continue;
                    }
                    // term: s^{a1} ν^{b2} ∫ θ^{b1 + a2} dθ
                    let k = b1 + a2;
                    let inv = 1.0 / (k as f64 + 1.0);
                    let prod = ca.mul(cb);
                    for (bound, sign) in [(hi, 1.0), (lo, -1.0)] {
                        match bound {
                            Bound2::Zero => {}
                            Bound2::NegOne => {
                                let v = sign * inv * if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
                                let c = out.coeff_mut(a1, b2);
                                *c = c.add(&prod.scale(v));
                            }
                            Bound2::S => {
                                let c = out.coeff_mut(a1 + k + 1, b2);
                                *c = c.add(&prod.scale(sign * inv));
                            }
                            Bound2::Nu => {
                                let c = out.coeff_mut(a1, b2 + k + 1);
                                *c = c.add(&prod.scale(sign * inv));
                            }
                        }
                    }
                }
            }
        }
    }
    out.trim();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    fn p1(var: Var1, coeffs: &[f64]) -> PolyMat1 {
        PolyMat1::from_coeffs(
            var,
            coeffs
                .iter()
                .map(|&c| SMat::from_dense(&DMatrix::from_element(1, 1, c)))
                .collect(),
        )
    }

    #[test]
    fn add_cancels_and_reports_minimal_degree() {
        // (1 + s) + (2 - s) = 3
        let a = p1(Var1::S, &[1.0, 1.0]);
        let b = p1(Var1::S, &[2.0, -1.0]);
        let c = a.add(&b);
        assert_eq!(c.degree(), 0);
        assert_eq!(c.eval(-0.3)[(0, 0)], 3.0);

        // 0 + A = A
        let z = PolyMat1::zeros(Var1::S, 1, 1);
        assert_eq!(z.add(&a).eval(-0.5), a.eval(-0.5));

        // s + s = 2s, degree 1
        let s = p1(Var1::S, &[0.0, 1.0]);
        let two_s = s.add(&s);
        assert_eq!(two_s.degree(), 1);
        assert_eq!(two_s.eval(-0.25)[(0, 0)], -0.5);
    }

    #[test]
    fn mul_row_times_column() {
        // [1, s] · [1; s] = 1 + s²
        let row = PolyMat1::from_coeffs(
            Var1::S,
            vec![
                SMat::from_dense(&DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
                SMat::from_dense(&DMatrix::from_row_slice(1, 2, &[0.0, 1.0])),
            ],
        );
        let col = PolyMat1::from_coeffs(
            Var1::S,
            vec![
                SMat::from_dense(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0])),
                SMat::from_dense(&DMatrix::from_column_slice(2, 1, &[0.0, 1.0])),
            ],
        );
        let prod = row.mul(&col);
        assert_eq!(prod.degree(), 2);
        for &s in &[-1.0, -0.5, 0.0] {
            assert!((prod.eval(s)[(0, 0)] - (1.0 + s * s)).abs() < 1e-15);
        }

        // I · A = A
        let ident = PolyMat1::constant(Var1::S, SMat::identity(1));
        let a = p1(Var1::S, &[2.0, -3.0, 0.5]);
        assert_eq!(ident.mul(&a).eval(-0.7), a.eval(-0.7));
    }

    #[test]
    fn mixed_tag_product_gives_bivariate_kernel() {
        let s = p1(Var1::S, &[0.0, 1.0]);
        let th = p1(Var1::Theta, &[0.0, 1.0]);
        let k = s.mul_cross(&th);
        assert_eq!(k.degrees(), (1, 1));
        assert!((k.eval(-0.5, -0.25)[(0, 0)] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn exact_full_integrals() {
        assert_eq!(p1(Var1::S, &[1.0]).integrate_full().to_dense()[(0, 0)], 1.0);
        assert_eq!(
            p1(Var1::S, &[0.0, 1.0]).integrate_full().to_dense()[(0, 0)],
            -0.5
        );
        // Z(s) = [1; s]: ∫ Z Zᵀ = [[1, -1/2], [-1/2, 1/3]]
        let z = PolyMat1::from_coeffs(
            Var1::S,
            vec![
                SMat::from_dense(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0])),
                SMat::from_dense(&DMatrix::from_column_slice(2, 1, &[0.0, 1.0])),
            ],
        );
        let gram = z.mul(&z.transpose()).integrate_full().to_dense();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0 / 3.0]);
        assert!((gram - expect).norm() < 1e-15);
    }

    #[test]
    fn one_sided_integrals() {
        // A = 1: ∫_{-1}^{s} dθ = s + 1, ∫_{s}^{0} dθ = -s
        let one = PolyMat2::zeros(1, 1, 0, 0);
        let mut one = one;
        *one.coeff_mut(0, 0) = SMat::identity(1);
        let lower = one.int_second(Bound::NegOne, Bound::Var, Var1::S);
        assert!((lower.eval(-0.3)[(0, 0)] - 0.7).abs() < 1e-15);
        let upper = one.int_second(Bound::Var, Bound::Zero, Var1::S);
        assert!((upper.eval(-0.3)[(0, 0)] - 0.3).abs() < 1e-15);

        // A = θ: ∫_{-1}^{s} θ dθ = (s² - 1)/2
        let mut th = PolyMat2::zeros(1, 1, 0, 1);
        *th.coeff_mut(0, 1) = SMat::identity(1);
        let lower = th.int_second(Bound::NegOne, Bound::Var, Var1::S);
        for &s in &[-1.0, -0.4, 0.0] {
            assert!((lower.eval(s)[(0, 0)] - (s * s - 1.0) / 2.0).abs() < 1e-15);
        }

        // A = s: ∫_{s}^{0} s dθ = -s²
        let mut ss = PolyMat2::zeros(1, 1, 1, 0);
        *ss.coeff_mut(1, 0) = SMat::identity(1);
        let upper = ss.int_second(Bound::Var, Bound::Zero, Var1::S);
        for &s in &[-1.0, -0.4, 0.0] {
            assert!((upper.eval(s)[(0, 0)] + s * s).abs() < 1e-15);
        }
    }

    #[test]
    fn evaluate_examples() {
        // (1 + s) at s = -1 → 0
        assert_eq!(p1(Var1::S, &[1.0, 1.0]).eval(-1.0)[(0, 0)], 0.0);
        // [1, s; s, s²] at s = -0.5
        let m = PolyMat1::from_coeffs(
            Var1::S,
            vec![
                SMat::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])),
                SMat::from_dense(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
                SMat::from_dense(&DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])),
            ],
        );
        let v = m.eval(-0.5);
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 0.25]);
        assert!((v - expect).norm() < 1e-15);
    }

    #[test]
    fn transpose_swap_is_involution() {
        let mut k = PolyMat2::zeros(2, 3, 2, 1);
        let mut val = 0.0;
        for a in 0..=2usize {
            for b in 0..=1usize {
                let m = DMatrix::from_fn(2, 3, |i, j| {
                    val += 1.0;
                    val + (i * 3 + j) as f64
                });
                *k.coeff_mut(a, b) = SMat::from_dense(&m);
            }
        }
        let back = k.transpose_swap().transpose_swap();
        for a in 0..=2usize {
            for b in 0..=1usize {
                assert_eq!(back.coeff(a, b).to_dense(), k.coeff(a, b).to_dense());
            }
        }
        // And the defining identity pointwise.
        let sw = k.transpose_swap();
        for &(s, t) in &[(-0.9, -0.1), (-0.4, -0.7)] {
            assert!((sw.eval(s, t) - k.eval(t, s).transpose()).norm() < 1e-14);
        }
    }

    #[test]
    fn exact_integrals_match_quadrature_on_random_polynomials() {
        let (x, w) = gauss_legendre(64);
        // Deterministic pseudo-random coefficients.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..10 {
            let coeffs: Vec<SMat> = (0..6)
                .map(|_| SMat::from_dense(&DMatrix::from_fn(2, 2, |_, _| rnd())))
                .collect();
            let p = PolyMat1::from_coeffs(Var1::S, coeffs);
            let exact = p.integrate_full().to_dense();
            let mut quad = DMatrix::zeros(2, 2);
            for (&xi, &wi) in x.iter().zip(&w) {
                quad += p.eval(xi) * wi;
            }
            let rel = (exact.clone() - quad).norm() / exact.norm().max(1e-12);
            assert!(rel < 1e-12, "rel error {rel}");
        }
    }

    #[test]
    fn int_middle_matches_quadrature() {
        let (x, w) = gauss_legendre(64);
        // A(s,θ) = s + θ², B(θ,ν) = 1 - θν
        let mut a = PolyMat2::zeros(1, 1, 1, 2);
        *a.coeff_mut(1, 0) = SMat::identity(1);
        *a.coeff_mut(0, 2) = SMat::identity(1);
        let mut b = PolyMat2::zeros(1, 1, 1, 1);
        *b.coeff_mut(0, 0) = SMat::identity(1);
        *b.coeff_mut(1, 1) = SMat::identity(1).scale(-1.0);
        let (s, nu) = (-0.6, -0.2);
        // ∫_{ν}^{s} A(s,θ)B(θ,ν) dθ
        let c = int_middle(&a, &b, Bound2::Nu, Bound2::S);
        let direct: f64 = x
            .iter()
            .zip(&w)
            .map(|(&t, &wt)| {
                // Map nodes from [-1,0] onto [ν, s].
                let tt = nu + (t + 1.0) * (s - nu);
                wt * (s - nu) * (s + tt * tt) * (1.0 - tt * nu)
            })
            .sum();
        assert!((c.eval(s, nu)[(0, 0)] - direct).abs() < 1e-12);
    }
}
