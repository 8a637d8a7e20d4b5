// Quadratic-form identity behind the LPI assembly, checked numerically:
// with u = 𝒯e - ℬ_T w, F1 = 𝒫ℬ + 𝒵𝒟₂, F2 = 𝒫𝒜 + 𝒵𝒞₂:
//   2⟨u, F2 e⟩ - 2⟨u, F1 w⟩ - γ|w|² - γ|v_e|² + 2⟨v_e, 𝒞₁e⟩ - 2⟨v_e, 𝒟₁w⟩
// must equal ⟨[w; v_e; e], LPI [w; v_e; e]⟩.
use pieobs::dde::DdeModel;
use pieobs::piop::{GridFn, z_inner};
use pieobs::scalar::Scalar;
use pieobs::sdp::SdpProblem;
use pieobs::synth::{assemble_lpi, PosCert, ZVar, SynthOptions};
use serde_json::json;
use nalgebra::DVector;

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
    let gam_var = prob.add_free_var("gamma");
    let lpi_affine = assemble_lpi(&pie, &pos.to_op(&prob), &zv.to_op(), &Scalar::var(gam_var));

    // random-ish numeric assignment
    let mut vals = vec![0.0; prob.n_vars()];
    let mut state = 0x1234_5678_9abc_def0u64;
    let mut rnd = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    for v in vals.iter_mut() { *v = rnd() * 0.5; }
    let gamma = 2.3;
    vals[gam_var as usize] = gamma;

    let lpi = lpi_affine.eval_vars(&vals);
    let p_num = pos.to_op(&prob).eval_vars(&vals);
    let z_num = zv.to_op().eval_vars(&vals);

    // test vectors
    let (n, r, p, q, ns) = (pie.n, pie.r, pie.p, pie.q, pie.ns);
    let _ = q;
    let w = DVector::from_fn(r, |_, _| rnd());
    let ve = DVector::from_fn(p, |_, _| rnd());
    let x = DVector::from_fn(n, |_, _| rnd());
    let c0: Vec<f64> = (0..3).map(|_| rnd()).collect();
    let phi = GridFn::gauss(64, ns).from_fn(|s| DVector::from_fn(ns, |i, _| {
        c0[0] + c0[1] * s + c0[2] * s * s + 0.3 * (i as f64) * s
    }));
    let empty_in = GridFn::zeros_like(&phi, 0);

    // u = 𝒯 e - ℬ_T w
    let (tx, tphi) = pie.t.apply(&x, &phi);
    let (bx, bphi) = pie.bt.apply(&w, &empty_in);
    let ux = &tx - &bx;
    let mut uphi = tphi.clone();
    for (a, b) in uphi.values.iter_mut().zip(&bphi.values) { *a -= b; }

    // F1 w, F2 e
    let f1 = p_num.compose(&pie.b).add(&z_num.compose(&pie.d2));
    let f2 = p_num.compose(&pie.a).add(&z_num.compose(&pie.c2));
    let (f1x, f1phi) = f1.apply(&w, &empty_in);
    let (f2x, f2phi) = f2.apply(&x, &phi);

    // 𝒞₁ e, 𝒟₁ w
    let (c1e, _) = pie.c1.apply(&x, &phi);
    let (d1w, _) = pie.d1.apply(&w, &empty_in);

    let lhs = 2.0 * z_inner(&ux, &uphi, &f2x, &f2phi)
        - 2.0 * z_inner(&ux, &uphi, &f1x, &f1phi)
        - gamma * w.dot(&w)
        - gamma * ve.dot(&ve)
        + 2.0 * ve.dot(&c1e)
        - 2.0 * ve.dot(&d1w);

    // RHS through the assembled operator
    let mut big = DVector::zeros(r + p + n);
    big.rows_mut(0, r).copy_from(&w);
    big.rows_mut(r, p).copy_from(&ve);
    big.rows_mut(r + p, n).copy_from(&x);
    let (ox, ophi) = lpi.apply(&big, &phi);
    let rhs = z_inner(&big, &phi, &ox, &ophi);

    println!("lhs = {lhs:.9}");
    println!("rhs = {rhs:.9}");
    println!("rel diff = {:.3e}", (lhs - rhs).abs() / lhs.abs().max(1.0));
}
