// Transfer-function check: the reduced LTI w→(z,y) must match the DDE's
// exact frequency response (C + Σ C_i e^{-jωτ_i})(jωI - A0 - Σ A_i e^{-jωτ_i})⁻¹(B + Σ B_i e^{-jωτ_i}) + D + Σ D_i e^{-jωτ_i}
use pieobs::dde::DdeModel;
use pieobs::pade::pade_reduce;
use nalgebra::{Complex, DMatrix};
use serde_json::json;

type C64 = Complex<f64>;

fn cmat(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

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
    let red = pade_reduce(&m, 10);
    let mut worst_z = 0.0f64;
    let mut worst_y = 0.0f64;
    for k in 0..=40 {
        let w = 0.05 + 4.0 * k as f64 / 40.0; // ωτ ≤ ~4
        let e = C64::new(0.0, -w).exp();
        let jw = C64::new(0.0, w);
        // exact DDE
        let a = cmat(&m.a0) + cmat(&m.ai[0]) * e;
        let b = cmat(&m.b);
        let c1 = cmat(&m.c1) + cmat(&m.c1i[0]) * e;
        let c2 = cmat(&m.c2) + cmat(&m.c2i[0]) * e;
        let d2 = cmat(&m.d2) + cmat(&m.d2i[0]) * e;
        let n = m.n;
        let mut ji = DMatrix::<C64>::identity(n, n) * jw;
        ji -= &a;
        let x = ji.lu().solve(&b).unwrap();
        let gz = &c1 * &x + cmat(&m.d1);
        let gy = &c2 * &x + d2;
        // reduced
        let nn = red.dim;
        let mut jir = DMatrix::<C64>::identity(nn, nn) * jw;
        jir -= &cmat(&red.a);
        let xr = jir.lu().solve(&cmat(&red.b)).unwrap();
        let gzr = cmat(&red.c1) * &xr + cmat(&red.d1);
        let gyr = cmat(&red.c2) * &xr + cmat(&red.d2);
        worst_z = worst_z.max((gz - gzr).norm());
        worst_y = worst_y.max((gy - gyr).norm());
    }
    println!("max |G_z - G_z_pade| over sweep: {worst_z:.3e}");
    println!("max |G_y - G_y_pade| over sweep: {worst_y:.3e}");
}
