use nalgebra::{Complex, DMatrix};
type C64 = Complex<f64>;

fn lower_bound(a0: &DMatrix<f64>, a1: &DMatrix<f64>, b: &DMatrix<f64>,
               c1: &DMatrix<f64>, c11: &DMatrix<f64>,
               c21: &DMatrix<f64>, d2: &DMatrix<f64>, d21: &DMatrix<f64>) -> f64 {
    let cm = |m: &DMatrix<f64>| m.map(|v| C64::new(v, 0.0));
    let mut worst = 0.0f64;
    for k in 0..=3000 {
        let w = 1e-4 + 40.0 * k as f64 / 3000.0;
        let e = C64::new(0.0, -w).exp();
        let jw = C64::new(0.0, w);
        let a = cm(a0) + cm(a1) * e;
        let n = a0.nrows();
        let mut ji = DMatrix::<C64>::identity(n, n) * jw;
        ji -= &a;
        let x = ji.lu().solve(&cm(b)).unwrap();
        let gz = (cm(c1) + cm(c11) * e) * &x;
        let gy = ((cm(c21) * e) * &x) + cm(d2) + cm(d21) * e;
        let gz = gz.row(0).into_owned();
        let gy = gy.row(0).into_owned();
        let gy_norm2: f64 = gy.iter().map(|v| v.norm_sqr()).sum();
        let mut res = gz.clone();
        if gy_norm2 > 1e-18 {
            let inner: C64 = gz.iter().zip(gy.iter()).map(|(p, q)| p * q.conj()).sum();
            let coef = inner / C64::new(gy_norm2, 0.0);
            for (r, yv) in res.iter_mut().zip(gy.iter()) { *r -= coef * yv; }
        }
        let val: f64 = res.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(val);
    }
    worst
}

fn main() {
    let m2 = |v: [[f64; 2]; 2]| DMatrix::from_row_slice(2, 2, &[v[0][0], v[0][1], v[1][0], v[1][1]]);
    let r2 = |v: [f64; 2]| DMatrix::from_row_slice(1, 2, &v);
    let base_a0 = m2([[0.0, 0.0], [0.0, 1.0]]);
    let base_a1 = m2([[-1.0, -1.0], [0.0, 0.9]]);
    let eye = m2([[1.0, 0.0], [0.0, 1.0]]);
    let c1 = r2([1.0, 0.0]);
    let c11 = r2([1.0, 10.0]);
    let c21 = r2([1.0, 10.0]);
    let zero_r = r2([0.0, 0.0]);
    let d21 = r2([0.0, 5.0]);

    // vary the z rows too: (name, c1, c11, d2, d21)
    let z_variants: Vec<(&str, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> = vec![
        ("z undelayed only", c1.clone(), zero_r.clone(), zero_r.clone(), d21.clone()),
        ("z delayed [1,0]", c1.clone(), r2([1.0, 0.0]), zero_r.clone(), d21.clone()),
        ("z delayed [0,10]", c1.clone(), r2([0.0, 10.0]), zero_r.clone(), d21.clone()),
        ("z = [1,10]x + [1,0]xd", r2([1.0, 10.0]), r2([1.0, 0.0]), zero_r.clone(), d21.clone()),
        ("as transcribed", c1.clone(), c11.clone(), zero_r.clone(), d21.clone()),
    ];
    for (name, c1v, c11v, d2, d21v) in &z_variants {
        let lb = lower_bound(&base_a0, &base_a1, &eye, c1v, c11v, &c21, d2, d21v);
        println!("{name:24} lower bound = {lb:.4}");
    }
}
