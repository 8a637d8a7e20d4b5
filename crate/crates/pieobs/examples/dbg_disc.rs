// Discretized-LPI oracle: minimize γ subject to D(LPI(vars)) ⪯ -δ at N
// Gauss nodes. A necessary-condition relaxation of the operator inequality:
// independent of the Gram certificate machinery.
use pieobs::dde::DdeModel;
use pieobs::scalar::Scalar;
use pieobs::sdp::{SdpProblem, SolveOpts};
use pieobs::synth::{assemble_lpi, PosCert, ZVar, SynthOptions};
use serde_json::json;
use nalgebra::DMatrix;

fn main() {
    let doc = json!({
        "n": 2, "r": 2, "p": 1, "q": 1,
        "taus": [1.0],
        "A0": [[0.0, 0.0], [0.0, 1.0]],
        "Ai": [[[-1.0, -1.0], [0.0, 0.9]]],
        "B": [[1.0, 0.0], [0.0, 1.0]],
        "C1": [[1.0, 0.0]],
                "C2i": [[[1.0, 10.0]]],
        "D2i": [[[0.0, 5.0]]]
    });
    let m = DdeModel::parse(&doc).unwrap();
    let pie = m.to_pie();
    let opts = SynthOptions::default();
    let mut prob = SdpProblem::new();
    let pos = PosCert::declare(&mut prob, pie.n, pie.ns, opts.dp, opts.eps);
    let zv = ZVar::declare(&mut prob, pie.n, pie.ns, opts.dp, pie.q);
    let gam = prob.add_free_var("gamma");
    let lpi = assemble_lpi(&pie, &pos.to_op(&prob), &zv.to_op(), &Scalar::var(gam));
    let n_model_vars = prob.n_vars();
    let nodes = 12usize;
    // affine decomposition of the discretization
    let zero_vals = vec![0.0; n_model_vars];
    let d0 = lpi.eval_vars(&zero_vals).discretize(nodes);
    let mut d_per_var: Vec<DMatrix<f64>> = Vec::with_capacity(n_model_vars);
    for v in 0..n_model_vars {
        let mut vals = zero_vals.clone();
        vals[v] = 1.0;
        d_per_var.push(lpi.eval_vars(&vals).discretize(nodes) - &d0);
    }
    let dim = d0.nrows();
    println!("discretized dim {dim}, model vars {n_model_vars}");
    // S = -D(vars) - δ I ⪰ 0
    let s_ref = prob.add_mat_var("S", dim);
    let delta = 1e-7;
    for i in 0..dim {
        for j in i..dim {
            let mut expr = Scalar::var(prob.mat_entry(s_ref, i, j));
            expr = expr.add(&Scalar::num(0.5 * (d0[(i, j)] + d0[(j, i)])));
            for v in 0..n_model_vars {
                let c = 0.5 * (d_per_var[v][(i, j)] + d_per_var[v][(j, i)]);
                if c.abs() > 1e-14 {
                    expr = expr.add(&Scalar {
                        constant: 0.0,
                        terms: vec![(v as u32, c)],
                    });
                }
            }
            if i == j {
                expr = expr.add(&Scalar::num(delta));
            }
            prob.add_equality(expr);
        }
    }
    prob.set_objective(Scalar::var(gam));
    let t0 = std::time::Instant::now();
    let sol = prob.solve(&SolveOpts { tol: 1e-8, max_iter: 100 });
    println!("disc oracle: {:?} in {:.1}s, iters {}, gamma = {:.6}",
        sol.status, t0.elapsed().as_secs_f64(), sol.iterations, sol.values[gam as usize]);
}
