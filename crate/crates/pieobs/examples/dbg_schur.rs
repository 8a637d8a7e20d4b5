use pieobs::dde::DdeModel;
use pieobs::scalar::Scalar;
use pieobs::sdp::{SdpProblem, SolveOpts};
use pieobs::synth::{assemble_lpi, enforce_negativity, PosCert, ZVar, SynthOptions};
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
    let _ = SolveOpts::default();

    // replicate the schur build at W = I
    let ne = prob.n_constraints();
    let nv = prob.n_vars();
    let mut e = DMatrix::zeros(ne, nv);
    for (k, c) in prob.constraints.iter().enumerate() {
        let scale = c.terms.iter().map(|&(_, x)| x.abs()).fold(1e-300, f64::max);
        for &(v, coef) in &c.terms {
            e[(k, v as usize)] = coef / scale;
        }
    }
    let nan_count = e.iter().filter(|x| !x.is_finite()).count();
    println!("E nonfinite entries: {nan_count}");
    // count rows with only free-var support (no matrix entries)
    // matrix vars come first in id space here
    let mat_len: usize = prob.mat_vars.iter().map(|m| m.size * (m.size + 1) / 2).sum();
    let mut free_only = 0;
    for k in 0..ne {
        let mut any_mat = false;
        let mut any = false;
        for v in 0..nv {
            if e[(k, v)] != 0.0 {
                any = true;
                if v < mat_len { any_mat = true; }
            }
        }
        if any && !any_mat { free_only += 1; }
    }
    println!("rows with only free-variable support: {free_only}");

    // Build M = E_mat E_matᵀ (W = I) and eig it.
    let emat = e.columns(0, mat_len).into_owned();
    // account for symmetric off-diagonal doubling: tr(A_k A_j) uses v/2 pairs;
    // equivalent Gram with entry weighting w_e = 1 for diag, 1/2 for offdiag...
    // simpler: direct small check of min eig of Gram
    let gram = &emat * emat.transpose();
    let eig = gram.symmetric_eigen();
    println!("Gram(E_mat): min {:.3e} max {:.3e}", eig.eigenvalues.min(), eig.eigenvalues.max());
}
