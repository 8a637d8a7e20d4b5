//! Delay-differential plant models and their PIE representation.
//!
//! The plant class is
//!
//! ```text
//! ẋ(t) = A0 x(t) + B w(t) + Σ_i (A_i x(t-τ_i) + B_i w(t-τ_i))
//! z(t) = C1 x(t) + D1 w(t) + Σ_i (C1_i x(t-τ_i) + D1_i w(t-τ_i))
//! y(t) = C2 x(t) + D2 w(t) + Σ_i (C2_i x(t-τ_i) + D2_i w(t-τ_i))
//! ```
//!
//! with state x ∈ ℝⁿ, disturbance w ∈ ℝʳ (w(0) = 0), regulated output
//! z ∈ ℝᵖ and measured output y ∈ ℝ^q. Every delay channel is transported
//! over the common domain [-1, 0]; the channel speed 1/τ_i enters only
//! through the multiplier block H of the PIE generator.

use crate::piop::{GridFn, OpDims, PiOp};
use crate::poly::{PolyMat1, SMat, Var1};
use nalgebra::{DMatrix, DVector};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model JSON: {0}")]
    Json(String),
    #[error("missing field \"{0}\"")]
    MissingField(&'static str),
    #[error("field \"{field}\": expected {expected} rows x {cols} cols, got {got_rows} x {got_cols}")]
    Shape {
        field: String,
        expected: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("field \"{0}\" has a non-finite entry")]
    NonFinite(String),
    #[error("delay {0} is not strictly positive")]
    NonPositiveDelay(f64),
    #[error("duplicate delay {0}")]
    DuplicateDelay(f64),
    #[error("per-delay list \"{field}\" has length {got}, expected {expected}")]
    DelayListLength {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("dimension \"{0}\" must be at least 1")]
    BadDimension(&'static str),
}

/// Plant data; per-delay lists all share length K.
#[derive(Clone, Debug)]
pub struct DdeModel {
    pub n: usize,
    pub r: usize,
    pub p: usize,
    pub q: usize,
    pub taus: Vec<f64>,
    pub a0: DMatrix<f64>,
    pub ai: Vec<DMatrix<f64>>,
    pub b: DMatrix<f64>,
    pub bi: Vec<DMatrix<f64>>,
    pub c1: DMatrix<f64>,
    pub c1i: Vec<DMatrix<f64>>,
    pub d1: DMatrix<f64>,
    pub d1i: Vec<DMatrix<f64>>,
    pub c2: DMatrix<f64>,
    pub c2i: Vec<DMatrix<f64>>,
    pub d2: DMatrix<f64>,
    pub d2i: Vec<DMatrix<f64>>,
}

/// PIE image of a [`DdeModel`] under the generator construction.
#[derive(Clone, Debug)]
pub struct PieSystem {
    pub t: PiOp,
    pub bt: PiOp,
    pub a: PiOp,
    pub b: PiOp,
    pub c1: PiOp,
    pub c2: PiOp,
    pub d1: PiOp,
    pub d2: PiOp,
    /// L2 dimension K(n + r).
    pub ns: usize,
    pub n: usize,
    pub r: usize,
    pub p: usize,
    pub q: usize,
    pub n_delays: usize,
    /// Width of a single delay channel (n + r).
    pub channel_width: usize,
}

impl DdeModel {
    pub fn n_delays(&self) -> usize {
        self.taus.len()
    }

    /// Parse and validate the model JSON document.
    pub fn parse(doc: &Value) -> Result<DdeModel, ModelError> {
        let obj = doc
            .as_object()
            .ok_or_else(|| ModelError::Json("top level must be an object".into()))?;
        let dim = |name: &'static str| -> Result<usize, ModelError> {
            let v = obj.get(name).ok_or(ModelError::MissingField(name))?;
            let d = v
                .as_u64()
                .ok_or_else(|| ModelError::Json(format!("\"{name}\" must be a nonnegative integer")))?;
            Ok(d as usize)
        };
        let n = dim("n")?;
        let r = dim("r")?;
        let p = dim("p")?;
        let q = dim("q")?;
        for (name, v) in [("n", n), ("r", r), ("p", p), ("q", q)] {
            if v == 0 {
                return Err(ModelError::BadDimension(match name {
                    "n" => "n",
                    "r" => "r",
                    "p" => "p",
                    _ => "q",
                }));
            }
        }
        let taus: Vec<f64> = match obj.get("taus") {
            None => Vec::new(),
            Some(v) => v
                .as_array()
                .ok_or_else(|| ModelError::Json("\"taus\" must be an array".into()))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| ModelError::Json("\"taus\" entries must be numbers".into()))
                })
                .collect::<Result<_, _>>()?,
        };
        for &tau in &taus {
            if !(tau > 0.0) {
                return Err(ModelError::NonPositiveDelay(tau));
            }
        }
        for i in 0..taus.len() {
            for j in (i + 1)..taus.len() {
                if taus[i] == taus[j] {
                    return Err(ModelError::DuplicateDelay(taus[i]));
                }
            }
        }
        let k = taus.len();

        let matrix = |field: &str, rows: usize, cols: usize, v: Option<&Value>| -> Result<DMatrix<f64>, ModelError> {
            let v = match v {
                None | Some(Value::Null) => return Ok(DMatrix::zeros(rows, cols)),
                Some(v) => v,
            };
            let arr = v
                .as_array()
                .ok_or_else(|| ModelError::Json(format!("\"{field}\" must be a 2D array")))?;
            if arr.is_empty() {
                return Ok(DMatrix::zeros(rows, cols));
            }
            let mut data = Vec::with_capacity(rows * cols);
            let got_rows = arr.len();
            let mut got_cols = 0;
            for row in arr {
                let row = row
                    .as_array()
                    .ok_or_else(|| ModelError::Json(format!("\"{field}\" rows must be arrays")))?;
                got_cols = row.len();
                for x in row {
                    let x = x
                        .as_f64()
                        .ok_or_else(|| ModelError::Json(format!("\"{field}\" entries must be numbers")))?;
                    if !x.is_finite() {
                        return Err(ModelError::NonFinite(field.to_string()));
                    }
                    data.push(x);
                }
            }
            if got_rows != rows || got_cols != cols {
                return Err(ModelError::Shape {
                    field: field.to_string(),
                    expected: rows,
                    cols,
                    got_rows,
                    got_cols,
                });
            }
            Ok(DMatrix::from_row_slice(rows, cols, &data))
        };
        let matrix_list = |field: &'static str, rows: usize, cols: usize| -> Result<Vec<DMatrix<f64>>, ModelError> {
            match obj.get(field) {
                None | Some(Value::Null) => Ok(vec![DMatrix::zeros(rows, cols); k]),
                Some(v) => {
                    let arr = v
                        .as_array()
                        .ok_or_else(|| ModelError::Json(format!("\"{field}\" must be an array of matrices")))?;
                    if arr.is_empty() {
                        return Ok(vec![DMatrix::zeros(rows, cols); k]);
                    }
                    if arr.len() != k {
                        return Err(ModelError::DelayListLength {
                            field,
                            got: arr.len(),
                            expected: k,
                        });
                    }
                    arr.iter()
                        .enumerate()
                        .map(|(i, m)| matrix(&format!("{field}[{i}]"), rows, cols, Some(m)))
                        .collect()
                }
            }
        };

        Ok(DdeModel {
            n,
            r,
            p,
            q,
            a0: matrix("A0", n, n, obj.get("A0"))?,
            b: matrix("B", n, r, obj.get("B"))?,
            c1: matrix("C1", p, n, obj.get("C1"))?,
            d1: matrix("D1", p, r, obj.get("D1"))?,
            c2: matrix("C2", q, n, obj.get("C2"))?,
            d2: matrix("D2", q, r, obj.get("D2"))?,
            ai: matrix_list("Ai", n, n)?,
            bi: matrix_list("Bi", n, r)?,
            c1i: matrix_list("C1i", p, n)?,
            d1i: matrix_list("D1i", p, r)?,
            c2i: matrix_list("C2i", q, n)?,
            d2i: matrix_list("D2i", q, r)?,
            taus,
        })
    }

    pub fn parse_str(text: &str) -> Result<DdeModel, ModelError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        DdeModel::parse(&doc)
    }

    /// Per-channel boundary injection C_r = [I; 0] ((n+r) × n).
    pub fn c_r(&self) -> DMatrix<f64> {
        let w = self.n + self.r;
        let mut m = DMatrix::zeros(w, self.n);
        for i in 0..self.n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Per-channel disturbance boundary injection B_r = [0; I] ((n+r) × r).
    pub fn b_r(&self) -> DMatrix<f64> {
        let w = self.n + self.r;
        let mut m = DMatrix::zeros(w, self.r);
        for i in 0..self.r {
            m[(self.n + i, i)] = 1.0;
        }
        m
    }

    /// Channel gather C_v_i = [A_i B_i; C1_i D1_i; C2_i D2_i].
    pub fn c_v(&self, i: usize) -> DMatrix<f64> {
        let w = self.n + self.r;
        let rows = self.n + self.p + self.q;
        let mut m = DMatrix::zeros(rows, w);
        m.view_mut((0, 0), (self.n, self.n)).copy_from(&self.ai[i]);
        m.view_mut((0, self.n), (self.n, self.r)).copy_from(&self.bi[i]);
        m.view_mut((self.n, 0), (self.p, self.n)).copy_from(&self.c1i[i]);
        m.view_mut((self.n, self.n), (self.p, self.r)).copy_from(&self.d1i[i]);
        m.view_mut((self.n + self.p, 0), (self.q, self.n)).copy_from(&self.c2i[i]);
        m.view_mut((self.n + self.p, self.n), (self.q, self.r)).copy_from(&self.d2i[i]);
        m
    }

    /// B_v = [I 0 0], D1v = [0 I 0], D2v = [0 0 I] against C_v's row blocks.
    pub fn b_v(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n + self.p + self.q);
        for i in 0..self.n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn d1v(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.p, self.n + self.p + self.q);
        for i in 0..self.p {
            m[(i, self.n + i)] = 1.0;
        }
        m
    }

    pub fn d2v(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.q, self.n + self.p + self.q);
        for i in 0..self.q {
            m[(i, self.n + self.p + i)] = 1.0;
        }
        m
    }

    /// Generator construction of the PIE image.
    pub fn to_pie(&self) -> PieSystem {
        let (n, r, p, q) = (self.n, self.r, self.p, self.q);
        let k = self.n_delays();
        let w = n + r;
        let ns = k * w;

        let c_r = self.c_r();
        let b_r = self.b_r();

        // T0 = [C_r; ...; C_r], T1 = [B_r; ...; B_r]
        let mut t0 = DMatrix::zeros(ns, n);
        let mut t1 = DMatrix::zeros(ns, r);
        for i in 0..k {
            t0.view_mut((i * w, 0), (w, n)).copy_from(&c_r);
            t1.view_mut((i * w, 0), (w, r)).copy_from(&b_r);
        }
        // H = diag(I/τ_1, ..., I/τ_K)
        let mut h = DMatrix::zeros(ns, ns);
        for i in 0..k {
            for j in 0..w {
                h[(i * w + j, i * w + j)] = 1.0 / self.taus[i];
            }
        }
        // Ã = -[A_k1 ... A_kK], C̃1, C̃2 likewise with A_ki = [A_i B_i].
        let mut a_tilde = DMatrix::zeros(n, ns);
        let mut c1_tilde = DMatrix::zeros(p, ns);
        let mut c2_tilde = DMatrix::zeros(q, ns);
        for i in 0..k {
            a_tilde.view_mut((0, i * w), (n, n)).copy_from(&(-&self.ai[i]));
            a_tilde.view_mut((0, i * w + n), (n, r)).copy_from(&(-&self.bi[i]));
            c1_tilde.view_mut((0, i * w), (p, n)).copy_from(&(-&self.c1i[i]));
            c1_tilde.view_mut((0, i * w + n), (p, r)).copy_from(&(-&self.d1i[i]));
            c2_tilde.view_mut((0, i * w), (q, n)).copy_from(&(-&self.c2i[i]));
            c2_tilde.view_mut((0, i * w + n), (q, r)).copy_from(&(-&self.d2i[i]));
        }
        let sum = |list: &[DMatrix<f64>], base: &DMatrix<f64>| -> DMatrix<f64> {
            let mut acc = base.clone();
            for m in list {
                acc += m;
            }
            acc
        };

        // 𝒯 = Π[I, 0; T0, {0, 0, -I}]
        let mut t_op = PiOp::zero(OpDims { m_out: n, n_out: ns, m_in: n, n_in: ns });
        t_op.p = SMat::identity(n);
        t_op.q_low = PolyMat1::constant(Var1::S, SMat::from_dense(&t0));
        if ns > 0 {
            let mut r2 = crate::poly::PolyMat2::zeros(ns, ns, 0, 0);
            *r2.coeff_mut(0, 0) = SMat::identity(ns).scale(-1.0);
            t_op.r2 = r2;
        }

        // ℬ_T = Π[0, ∅; T1, ∅]
        let mut bt_op = PiOp::zero(OpDims { m_out: n, n_out: ns, m_in: r, n_in: 0 });
        bt_op.q_low = PolyMat1::constant(Var1::S, SMat::from_dense(&t1));

        // 𝒜 = Π[A0 + ΣA_i, Ã; 0, {H, 0, 0}]
        let mut a_op = PiOp::zero(OpDims { m_out: n, n_out: ns, m_in: n, n_in: ns });
        a_op.p = SMat::from_dense(&sum(&self.ai, &self.a0));
        a_op.q1 = PolyMat1::constant(Var1::Theta, SMat::from_dense(&a_tilde));
        a_op.r0 = PolyMat1::constant(Var1::S, SMat::from_dense(&h));

        // ℬ = Π[B + ΣB_i, ∅; 0, ∅]
        let mut b_op = PiOp::zero(OpDims { m_out: n, n_out: ns, m_in: r, n_in: 0 });
        b_op.p = SMat::from_dense(&sum(&self.bi, &self.b));

        // 𝒞_j = Π[C_j + ΣC_ji, C̃_j; ∅, ∅]
        let mut c1_op = PiOp::zero(OpDims { m_out: p, n_out: 0, m_in: n, n_in: ns });
        c1_op.p = SMat::from_dense(&sum(&self.c1i, &self.c1));
        c1_op.q1 = PolyMat1::constant(Var1::Theta, SMat::from_dense(&c1_tilde));
        let mut c2_op = PiOp::zero(OpDims { m_out: q, n_out: 0, m_in: n, n_in: ns });
        c2_op.p = SMat::from_dense(&sum(&self.c2i, &self.c2));
        c2_op.q1 = PolyMat1::constant(Var1::Theta, SMat::from_dense(&c2_tilde));

        // 𝒟_j are plain matrices.
        let d1_op = PiOp::from_dense(&sum(&self.d1i, &self.d1));
        let d2_op = PiOp::from_dense(&sum(&self.d2i, &self.d2));

        PieSystem {
            t: t_op,
            bt: bt_op,
            a: a_op,
            b: b_op,
            c1: c1_op,
            c2: c2_op,
            d1: d1_op,
            d2: d2_op,
            ns,
            n,
            r,
            p,
            q,
            n_delays: k,
            channel_width: w,
        }
    }
}

impl PieSystem {
    /// Recover the plant state from the PIE state: the first n entries of
    /// 𝒯x + ℬ_T w.
    pub fn reconstruct_primal(
        &self,
        x: &DVector<f64>,
        phi: &GridFn,
        w: &DVector<f64>,
    ) -> DVector<f64> {
        let (top_t, _) = self.t.apply(x, phi);
        let empty = GridFn::zeros_like(phi, 0);
        let (top_b, _) = self.bt.apply(w, &empty);
        (top_t + top_b).rows(0, self.n).into_owned()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use serde_json::json;

    pub(crate) fn example1_json() -> Value {
        json!({
            "n": 2, "r": 2, "p": 1, "q": 1,
            "taus": [1.0],
            "A0": [[0.0, 0.0], [0.0, 1.0]],
            "Ai": [[[-1.0, -1.0], [0.0, 0.9]]],
            "B": [[1.0, 0.0], [0.0, 1.0]],
            "C1": [[1.0, 0.0]],
            "C1i": [[[1.0, 10.0]]],
            "C2i": [[[1.0, 10.0]]],
            "D2i": [[[0.0, 5.0]]]
        })
    }

    pub(crate) fn example2_json() -> Value {
        json!({
            "n": 2, "r": 2, "p": 1, "q": 1,
            "taus": [0.3, 0.5],
            "A0": [[0.0, 3.0], [-4.0, -5.0]],
            "Ai": [
                [[-0.1, 0.0], [0.2, -0.2]],
                [[0.0, 0.1], [-0.2, -0.3]]
            ],
            "B": [[-0.4545, 0.0], [0.0, 0.9090]],
            "C2": [[0.0, 100.0]],
            "C2i": [
                [[0.0, 10.0]],
                [[0.0, 2.0]]
            ],
            "D2": [[1.0, 1.0]],
            "C1": [[0.0, 100.0]]
        })
    }

    #[test]
    fn example1_parses_with_zero_defaults() {
        let m = DdeModel::parse(&example1_json()).unwrap();
        assert_eq!((m.n, m.r, m.p, m.q), (2, 2, 1, 1));
        assert_eq!(m.n_delays(), 1);
        // C2 = 0 (undelayed measured-output term absent)
        assert!(m.c2.norm() == 0.0);
        assert!(m.d1.norm() == 0.0);
        assert_eq!(m.bi[0].norm(), 0.0);
    }

    #[test]
    fn empty_delay_list_defaults_to_zero() {
        let mut doc = example1_json();
        doc["Ai"] = json!([]);
        let m = DdeModel::parse(&doc).unwrap();
        assert_eq!(m.ai.len(), 1);
        assert_eq!(m.ai[0].norm(), 0.0);
    }

    #[test]
    fn duplicate_delays_rejected() {
        let mut doc = example1_json();
        doc["taus"] = json!([0.3, 0.3]);
        doc["Ai"] = json!(null);
        doc["C1i"] = json!(null);
        doc["C2i"] = json!(null);
        doc["D2i"] = json!(null);
        assert!(matches!(
            DdeModel::parse(&doc),
            Err(ModelError::DuplicateDelay(_))
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut doc = example1_json();
        doc["A0"] = json!([[0.0, 0.0]]);
        assert!(matches!(DdeModel::parse(&doc), Err(ModelError::Shape { .. })));
    }

    #[test]
    fn non_positive_delay_rejected() {
        let mut doc = example1_json();
        doc["taus"] = json!([0.0]);
        assert!(matches!(
            DdeModel::parse(&doc),
            Err(ModelError::NonPositiveDelay(_))
        ));
    }

    #[test]
    fn example1_pie_blocks() {
        let m = DdeModel::parse(&example1_json()).unwrap();
        let pie = m.to_pie();
        assert_eq!(pie.ns, 4);
        // T0 = [I2; 0], T1 = [0; I2]
        let t0 = pie.t.q_low.eval(-0.3);
        let mut t0_expect = DMatrix::zeros(4, 2);
        t0_expect[(0, 0)] = 1.0;
        t0_expect[(1, 1)] = 1.0;
        assert_eq!(t0, t0_expect);
        let t1 = pie.bt.q_low.eval(-0.7);
        let mut t1_expect = DMatrix::zeros(4, 2);
        t1_expect[(2, 0)] = 1.0;
        t1_expect[(3, 1)] = 1.0;
        assert_eq!(t1, t1_expect);
        // H = I4 (τ = 1)
        assert_eq!(pie.a.r0.eval(-0.5), DMatrix::identity(4, 4));
        // Ã = -[A1 B1]
        let expect_a_tilde =
            DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, -0.9, 0.0, 0.0]);
        assert_eq!(pie.a.q1.eval(-0.5), expect_a_tilde);
        // C̃2 = -[1, 10, 0, 5]
        let expect_c2_tilde = DMatrix::from_row_slice(1, 4, &[-1.0, -10.0, 0.0, -5.0]);
        assert_eq!(pie.c2.q1.eval(-0.5), expect_c2_tilde);
        // 𝒟2 matrix part = [0, 5]
        assert_eq!(pie.d2.p.to_dense(), DMatrix::from_row_slice(1, 2, &[0.0, 5.0]));
        // 𝒯 kernels: P = I, R2 = -I, R0 = R1 = 0
        assert_eq!(pie.t.p.to_dense(), DMatrix::identity(2, 2));
        assert!(pie.t.r0.is_zero());
        assert!(pie.t.r1.is_zero());
        assert_eq!(pie.t.r2.eval(-0.5, -0.2), -DMatrix::identity(4, 4));
    }

    #[test]
    fn delay_free_model_reduces_to_ode() {
        let doc = json!({
            "n": 2, "r": 1, "p": 1, "q": 1,
            "A0": [[-1.0, 0.0], [0.0, -2.0]],
            "B": [[1.0], [1.0]],
            "C1": [[1.0, 0.0]],
            "C2": [[0.0, 1.0]]
        });
        let m = DdeModel::parse(&doc).unwrap();
        let pie = m.to_pie();
        assert_eq!(pie.ns, 0);
        assert_eq!(pie.t.p.to_dense(), DMatrix::identity(2, 2));
        assert_eq!(pie.a.p.to_dense(), m.a0);
    }

    #[test]
    fn example2_h_block() {
        let m = DdeModel::parse(&example2_json()).unwrap();
        let pie = m.to_pie();
        assert_eq!(pie.ns, 8);
        let h = pie.a.r0.eval(-0.1);
        for j in 0..4 {
            assert!((h[(j, j)] - 1.0 / 0.3).abs() < 1e-15);
            assert!((h[(4 + j, 4 + j)] - 1.0 / 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn pie_dimension_audit() {
        let m = DdeModel::parse(&example2_json()).unwrap();
        let pie = m.to_pie();
        let ns = pie.ns;
        assert_eq!(pie.a.dims, OpDims { m_out: 2, n_out: ns, m_in: 2, n_in: ns });
        assert_eq!(pie.c1.dims, OpDims { m_out: 1, n_out: 0, m_in: 2, n_in: ns });
        assert_eq!(pie.c2.dims, OpDims { m_out: 1, n_out: 0, m_in: 2, n_in: ns });
        assert_eq!(pie.bt.dims, OpDims { m_out: 2, n_out: ns, m_in: 2, n_in: 0 });
        assert_eq!(pie.d1.dims, OpDims { m_out: 1, n_out: 0, m_in: 2, n_in: 0 });
    }

    #[test]
    fn reconstruct_primal_zero_history_derivative() {
        let m = DdeModel::parse(&example1_json()).unwrap();
        let pie = m.to_pie();
        let x0 = DVector::from_vec(vec![1.5, -0.5]);
        let phi = GridFn::gauss(32, pie.ns);
        let w = DVector::zeros(2);
        let x = pie.reconstruct_primal(&x0, &phi, &w);
        assert!((x - x0).norm() < 1e-14);
    }
}
