//! Scalars that are either plain numbers or affine expressions
//! `c0 + Σ ck · vk` over named decision variables.
//!
//! Affine-only arithmetic is enforced at runtime: multiplying two scalars
//! that both carry variables panics, because every quantity assembled here
//! must stay linear in the decision variables. Hitting that panic means an
//! assembly bug, not a user error.

/// Index of a decision variable inside an [`crate::sdp::SdpProblem`].
pub type VarId = u32;

/// A number or an affine expression in decision variables.
///
/// `terms` is sorted by variable id and holds no zero coefficients and no
/// duplicate ids.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Scalar {
    pub constant: f64,
    pub terms: Vec<(VarId, f64)>,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::default()
    }

    pub fn num(c: f64) -> Self {
        Scalar {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        Scalar {
            constant: 0.0,
            terms: vec![(v, 1.0)],
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    /// Numeric value; panics when the scalar still carries variables.
    pub fn as_f64(&self) -> f64 {
        assert!(
            self.is_numeric(),
            "scalar carries decision variables; evaluate it first"
        );
        self.constant
    }

    /// Substitute variable values.
    pub fn eval(&self, values: &[f64]) -> f64 {
        let mut out = self.constant;
        for &(v, c) in &self.terms {
            out += c * values[v as usize];
        }
        out
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (va, ca) = self.terms[i];
            let (vb, cb) = other.terms[j];
            match va.cmp(&vb) {
                std::cmp::Ordering::Less => {
                    terms.push((va, ca));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    terms.push((vb, cb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = ca + cb;
                    if c != 0.0 {
                        terms.push((va, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        terms.extend_from_slice(&self.terms[i..]);
        terms.extend_from_slice(&other.terms[j..]);
        Scalar {
            constant: self.constant + other.constant,
            terms,
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Scalar {
        if k == 0.0 {
            return Scalar::zero();
        }
        Scalar {
            constant: self.constant * k,
            terms: self.terms.iter().map(|&(v, c)| (v, c * k)).collect(),
        }
    }

    /// Product. At most one operand may carry variables.
    pub fn mul(&self, other: &Scalar) -> Scalar {
        if !self.terms.is_empty() && !other.terms.is_empty() {
            panic!("product of two variable-carrying scalars: expression would be quadratic");
        }
        if self.is_numeric() {
            other.scale(self.constant)
        } else {
            self.scale(other.constant)
        }
    }

    /// Fused accumulate: self += a * b (same affine rules as `mul`).
    pub fn add_mul_assign(&mut self, a: &Scalar, b: &Scalar) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        let prod = a.mul(b);
        *self = self.add(&prod);
    }
}

impl From<f64> for Scalar {
    fn from(c: f64) -> Self {
        Scalar::num(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_merges_terms_and_cancels() {
        let a = Scalar {
            constant: 1.0,
            terms: vec![(0, 2.0), (3, 1.0)],
        };
        let b = Scalar {
            constant: 2.0,
            terms: vec![(0, -2.0), (1, 0.5)],
        };
        let c = a.add(&b);
        assert_eq!(c.constant, 3.0);
        assert_eq!(c.terms, vec![(1, 0.5), (3, 1.0)]);
    }

    #[test]
    fn numeric_times_affine_is_affine() {
        let a = Scalar::num(3.0);
        let b = Scalar::var(7);
        let c = a.mul(&b);
        assert_eq!(c.terms, vec![(7, 3.0)]);
        assert_eq!(c.constant, 0.0);
    }

    #[test]
    #[should_panic(expected = "quadratic")]
    fn affine_times_affine_panics() {
        let a = Scalar::var(1);
        let b = Scalar::var(2);
        let _ = a.mul(&b);
    }

    #[test]
    fn eval_substitutes() {
        let s = Scalar {
            constant: 1.5,
            terms: vec![(0, 2.0), (2, -1.0)],
        };
        let vals = [3.0, 0.0, 4.0];
        assert_eq!(s.eval(&vals), 1.5 + 6.0 - 4.0);
    }
}
