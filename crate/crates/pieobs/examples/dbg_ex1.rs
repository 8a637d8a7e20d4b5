use pieobs::dde::DdeModel;
use pieobs::scalar::Scalar;
use pieobs::sdp::{SdpProblem, SolveOpts};
use pieobs::synth::{assemble_lpi, enforce_negativity, PosCert, ZVar, SynthOptions};
use serde_json::json;

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
    let t0 = std::time::Instant::now();
    let lpi = assemble_lpi(&pie, &pos.to_op(&prob), &zv.to_op(), &Scalar::var(gam));
    println!("assembled in {:.2}s; lpi dims {:?}", t0.elapsed().as_secs_f64(), lpi.dims);
    println!("lpi degrees: q1 {} qlow {} r0 {} r1 {:?} r2 {:?}",
        lpi.q1.degree(), lpi.q_low.degree(), lpi.r0.degree(), lpi.r1.degrees(), lpi.r2.degrees());
    let t0 = std::time::Instant::now();
    enforce_negativity(&mut prob, &lpi, opts.eps_neg, opts.d1, opts.d2).unwrap();
    println!("lowered in {:.2}s: vars {} cons {} (ratio {:.2})",
        t0.elapsed().as_secs_f64(), prob.n_vars(), prob.n_constraints(),
        prob.n_constraints() as f64 / prob.n_vars() as f64);
    prob.set_objective(Scalar::var(gam));
    let t0 = std::time::Instant::now();
    let sol = prob.solve(&SolveOpts { tol: 1e-8, max_iter: 100 });
    println!("solve {:.2}s: status {:?} iters {} gamma {:.6}", t0.elapsed().as_secs_f64(),
        sol.status, sol.iterations, sol.values[gam as usize]);
    println!("pres {:.2e} dres {:.2e} gap {:.2e}", sol.primal_residual, sol.dual_residual, sol.rel_gap);

    // row rank diagnostic
    let ne = prob.n_constraints();
    let nv = prob.n_vars();
    let mut e = nalgebra::DMatrix::zeros(ne, nv);
    for (k, c) in prob.constraints.iter().enumerate() {
        for &(v, coef) in &c.terms {
            e[(k, v as usize)] = coef;
        }
    }
    let sv = e.svd(false, false).singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > smax * 1e-10).count();
    println!("rows {} rank {} smin {:.3e}", ne, rank, sv.min());
}
