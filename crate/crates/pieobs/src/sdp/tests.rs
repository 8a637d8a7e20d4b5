use super::*;
use crate::scalar::Scalar;

fn term(v: crate::scalar::VarId, c: f64) -> Scalar {
    Scalar {
        constant: 0.0,
        terms: vec![(v, c)],
    }
}

/// minimize x s.t. [[x, 1], [1, x]] ⪰ 0 → x* = 1 (PSD boundary, det = x²-1).
fn boundary_problem() -> SdpProblem {
    let mut prob = SdpProblem::new();
    let xm = prob.add_mat_var("X", 2);
    let x = prob.add_free_var("x");
    // X11 = x, X22 = x, X12 = 1
    prob.add_equality(term(prob.mat_entry(xm, 0, 0), 1.0).sub(&term(x, 1.0)));
    prob.add_equality(term(prob.mat_entry(xm, 1, 1), 1.0).sub(&term(x, 1.0)));
    prob.add_equality(term(prob.mat_entry(xm, 0, 1), 1.0).add(&Scalar::num(-1.0)));
    prob.set_objective(term(x, 1.0));
    prob
}

#[test]
fn psd_boundary_example() {
    let prob = boundary_problem();
    // 3 equalities / 4 variables → nullspace route
    let sol = prob.solve(&SolveOpts::default());
    assert_eq!(sol.route, SolveRoute::NullspaceLmi);
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!(
        (sol.objective - 1.0).abs() < 1e-6,
        "objective {}",
        sol.objective
    );
}

#[test]
fn trace_minimization_with_pinned_entry() {
    // minimize tr(X) s.t. X ⪰ 0, X11 = 2 → objective 2, X = diag(2, 0, 0)
    let mut prob = SdpProblem::new();
    let xm = prob.add_mat_var("X", 3);
    prob.add_equality(term(prob.mat_entry(xm, 0, 0), 1.0).add(&Scalar::num(-2.0)));
    let mut obj = Scalar::zero();
    for i in 0..3 {
        obj = obj.add(&term(prob.mat_entry(xm, i, i), 1.0));
    }
    prob.set_objective(obj);
    let sol = prob.solve(&SolveOpts::default());
    assert_eq!(sol.route, SolveRoute::DualEqualities);
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.objective - 2.0).abs() < 1e-6, "objective {}", sol.objective);
    assert!((sol.values[prob.mat_entry(xm, 0, 0) as usize] - 2.0).abs() < 1e-5);
    assert!(sol.values[prob.mat_entry(xm, 1, 1) as usize].abs() < 1e-5);
}

#[test]
fn infeasible_problem_detected() {
    // X ⪰ 0, X11 = -1 → infeasible
    let mut prob = SdpProblem::new();
    let xm = prob.add_mat_var("X", 2);
    prob.add_equality(term(prob.mat_entry(xm, 0, 0), 1.0).add(&Scalar::num(1.0)));
    let mut obj = Scalar::zero();
    for i in 0..2 {
        obj = obj.add(&term(prob.mat_entry(xm, i, i), 1.0));
    }
    prob.set_objective(obj);
    let sol = prob.solve(&SolveOpts::default());
    assert_eq!(sol.status, SdpStatus::Infeasible, "got {:?}", sol.status);
}

struct Lcg(u64);
impl Lcg {
    fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Plant a primal/dual optimal pair: X* with rank deficiency, S* its
/// complement, C = Σ y*_i A_i + S*. The optimum value is ⟨C, X*⟩.
#[test]
fn planted_random_sdps_reach_known_optima() {
    let mut rng = Lcg(0xfeedbeef);
    for trial in 0..10 {
        let n = 4 + (trial % 3); // 4..6
        let m = 3 + (trial % 4); // 3..6 constraints
        // Orthonormal basis via Gram-Schmidt of a random matrix.
        let a = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.next_f64());
        let qr = a.qr();
        let q = qr.q();
        // X* = Q diag(λ, 0) Qᵀ with rank n-1; S* = Q diag(0, μ) Qᵀ.
        let mut lam = nalgebra::DVector::zeros(n);
        for i in 0..n - 1 {
            lam[i] = 0.5 + rng.next_f64().abs();
        }
        let mut mu = nalgebra::DVector::zeros(n);
        mu[n - 1] = 0.5 + rng.next_f64().abs();
        let xstar = &q * nalgebra::DMatrix::from_diagonal(&lam) * q.transpose();
        let sstar = &q * nalgebra::DMatrix::from_diagonal(&mu) * q.transpose();

        let mut prob = SdpProblem::new();
        let xm = prob.add_mat_var("X", n);
        let mut a_mats = Vec::new();
        for _ in 0..m {
            let g = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.next_f64());
            let g = (&g + g.transpose()) * 0.5;
            a_mats.push(g);
        }
        let ystar = nalgebra::DVector::from_fn(m, |_, _| rng.next_f64());
        let mut c = sstar.clone();
        for k in 0..m {
            c += &a_mats[k] * ystar[k];
        }
        // constraints tr(A_k X) = tr(A_k X*)
        for a_k in &a_mats {
            let rhs: f64 = a_k.dot(&xstar);
            let mut expr = Scalar::num(-rhs);
            for i in 0..n {
                for j in i..n {
                    let coef = if i == j { a_k[(i, i)] } else { 2.0 * a_k[(i, j)] };
                    if coef != 0.0 {
                        expr = expr.add(&term(prob.mat_entry(xm, i, j), coef));
                    }
                }
            }
            prob.add_equality(expr);
        }
        let mut obj = Scalar::zero();
        for i in 0..n {
            for j in i..n {
                let coef = if i == j { c[(i, i)] } else { 2.0 * c[(i, j)] };
                if coef != 0.0 {
                    obj = obj.add(&term(prob.mat_entry(xm, i, j), coef));
                }
            }
        }
        prob.set_objective(obj);
        let planted: f64 = c.dot(&xstar);
        let sol = prob.solve(&SolveOpts::default());
        assert_eq!(sol.status, SdpStatus::Optimal, "trial {trial}");
        let rel = (sol.objective - planted).abs() / (1.0 + planted.abs());
        assert!(rel < 1e-6, "trial {trial}: obj {} vs planted {planted}", sol.objective);
    }
}

#[test]
fn deterministic_replay() {
    let prob = boundary_problem();
    let a = prob.solve(&SolveOpts::default());
    let b = prob.solve(&SolveOpts::default());
    assert_eq!(a.iterations, b.iterations);
    assert!((a.objective - b.objective).abs() <= 1e-12 * (1.0 + a.objective.abs()));
}

#[test]
fn sdpa_export_format_and_roundtrip() {
    let prob = boundary_problem();
    let text = sdpa::export_string(&prob);
    // one 2x2 PSD block plus the free-scalar block
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1].trim(), "3"); // mDIM
    assert_eq!(lines[2].trim(), "2"); // nBLOCK
    assert_eq!(lines[3].trim(), "2 -1");
    let reimported = sdpa::import_str(&text).unwrap();
    assert_eq!(reimported.n_constraints(), prob.n_constraints());
    assert_eq!(reimported.n_vars(), prob.n_vars());
    // byte-identical re-export
    assert_eq!(sdpa::export_string(&reimported), text);
    // and the re-imported problem solves to the same optimum
    let sol = reimported.solve(&SolveOpts::default());
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-6);
}
