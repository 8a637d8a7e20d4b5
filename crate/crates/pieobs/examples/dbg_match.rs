// Verify: at any variable assignment, the cert operator built by
// enforce_negativity must equal -LPI - eps_neg*diag(I,0) IF the equalities
// hold. Conversely, solve a tiny least-squares-free check: pick random
// variable values satisfying nothing; compare the two AFFINE operators
// coefficient-by-coefficient through the discretization at the SDP solution.
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
        "C1i": [[[1.0, 10.0]]],
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
    enforce_negativity(&mut prob, &lpi, opts.eps_neg, opts.d1, opts.d2).unwrap();
    prob.set_objective(Scalar::var(gam));
    let sol = prob.solve(&SolveOpts { tol: 1e-8, max_iter: 60 });
    println!("status {:?} gamma {}", sol.status, sol.values[gam as usize]);

    // At the (approximate) solution, the assembled operator should be ⪯ 0.
    let num = lpi.eval_vars(&sol.values);
    let d = num.discretize(64);
    let dsym = (&d + d.transpose()) * 0.5;
    let eig = dsym.symmetric_eigen();
    println!("LPI discretization: max eig {:.4e} min eig {:.4e}",
        eig.eigenvalues.max(), eig.eigenvalues.min());
    // 𝒫 coercivity at solution
    let cert = pos.numeric(&prob, &sol.values);
    let p_num = cert.to_op();
    let dp = p_num.discretize(64);
    let peig = ((&dp + dp.transpose()) * 0.5).symmetric_eigen();
    println!("P discretization: min eig {:.4e} (eps = {:.1e})", peig.eigenvalues.min(), cert.eps);
    // equality residual at solution
    let mut worst = 0.0f64;
    for c in &prob.constraints {
        worst = worst.max(c.eval(&sol.values).abs());
    }
    println!("max |equality residual| {:.3e}", worst);
}
