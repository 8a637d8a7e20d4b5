// Solver-independent lower bound on the achievable estimation gain: at each
// frequency the error output must at least contain the component of G_zw(jω)
// orthogonal to the row space of G_yw(jω) (information-theoretic bound,
// ignoring causality). Any valid γ_min must weakly exceed sup_ω of it.
use pieobs::dde::DdeModel;
use nalgebra::{Complex, DMatrix};
use serde_json::json;

type C64 = Complex<f64>;

fn cmat(m: &DMatrix<f64>) -> DMatrix<C64> { m.map(|v| C64::new(v, 0.0)) }

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
    let mut worst: (f64, f64) = (0.0, 0.0);
    for k in 0..=4000 {
        let w = 1e-3 + 30.0 * k as f64 / 4000.0;
        let e = C64::new(0.0, -w).exp();
        let jw = C64::new(0.0, w);
        let a = cmat(&m.a0) + cmat(&m.ai[0]) * e;
        let b = cmat(&m.b);
        let c1 = cmat(&m.c1) + cmat(&m.c1i[0]) * e;
        let c2 = cmat(&m.c2) + cmat(&m.c2i[0]) * e;
        let d2 = cmat(&m.d2) + cmat(&m.d2i[0]) * e;
        let n = m.n;
        let mut ji = DMatrix::<C64>::identity(n, n) * jw;
        ji -= &a;
        let x = ji.lu().solve(&b).unwrap();
        let gz = (&c1 * &x + cmat(&m.d1)).row(0).into_owned(); // 1×2
        let gy = (&c2 * &x + d2).row(0).into_owned();
        // component of gz orthogonal to gy
        let gy_norm2: f64 = gy.iter().map(|v| v.norm_sqr()).sum();
        let mut res = gz.clone();
        if gy_norm2 > 1e-18 {
            let inner: C64 = gz.iter().zip(gy.iter()).map(|(a, b)| a * b.conj()).sum();
            let coef = inner / C64::new(gy_norm2, 0.0);
            for (r, yv) in res.iter_mut().zip(gy.iter()) {
                *r -= coef * yv;
            }
        }
        let val: f64 = res.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if val > worst.1 { worst = (w, val); }
    }
    println!("sup_ω ‖G_zw P⊥(G_yw)‖ = {:.6} at ω = {:.3}", worst.1, worst.0);
}
