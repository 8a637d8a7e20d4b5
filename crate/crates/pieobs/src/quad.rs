//! Gauss-Legendre quadrature on the working interval [-1, 0].

/// Nodes and weights of an `n`-point Gauss-Legendre rule on [-1, 0].
///
/// Nodes are strictly increasing. The rule integrates polynomials of degree
/// up to `2n - 1` exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Standard rule on [-1, 1], then map x -> (x - 1) / 2.
    for k in 0..n {
        // Chebyshev-based initial guess, refined by Newton on P_n.
        let mut x = -(std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = (x - 1.0) / 2.0;
        weights[k] = w / 2.0;
    }
    (nodes, weights)
}

/// Legendre polynomial P_n(x) on [-1, 1] together with its derivative.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Shifted Legendre polynomial on [-1, 0]: P̃_k(s) = P_k(2s + 1).
pub fn shifted_legendre(k: usize, s: f64) -> f64 {
    legendre_value(k, 2.0 * s + 1.0)
}

/// Plain Legendre value P_k(x).
pub fn legendre_value(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for j in 1..k {
        let jf = j as f64;
        let p_next = ((2.0 * jf + 1.0) * x * p - jf * p_prev) / (jf + 1.0);
        p_prev = p;
        p = p_next;
    }
    p
}

/// ∫_{-1}^{s} P̃_k(θ) dθ on the shifted domain [-1, 0].
pub fn shifted_legendre_lower_integral(k: usize, s: f64) -> f64 {
    // With u = 2s + 1: ∫ P̃_k = (1/2) ∫_{-1}^{u} P_k(t) dt.
    let u = 2.0 * s + 1.0;
    if k == 0 {
        return 0.5 * (u + 1.0);
    }
    let pk1 = legendre_value(k + 1, u);
    let pk_1 = legendre_value(k - 1, u);
    0.5 * (pk1 - pk_1) / (2.0 * k as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_integrate_monomials() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let quad: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| wi * xi.powi(deg as i32))
                    .sum();
                // ∫_{-1}^0 s^k ds = (-1)^k / (k + 1)
                let exact = if deg % 2 == 0 { 1.0 } else { -1.0 } / (deg as f64 + 1.0);
                assert!(
                    (quad - exact).abs() < 1e-13,
                    "n={n} deg={deg}: {quad} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn nodes_increase_and_weights_sum_to_interval_length() {
        let (x, w) = gauss_legendre(64);
        for i in 1..x.len() {
            assert!(x[i] > x[i - 1]);
        }
        assert!(x.iter().all(|&s| (-1.0..=0.0).contains(&s)));
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shifted_legendre_orthogonality_via_quadrature() {
        let (x, w) = gauss_legendre(32);
        for k in 0..6 {
            for l in 0..6 {
                let dot: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&s, &wi)| wi * shifted_legendre(k, s) * shifted_legendre(l, s))
                    .sum();
                let expect = if k == l { 1.0 / (2.0 * k as f64 + 1.0) } else { 0.0 };
                assert!((dot - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn lower_integral_matches_quadrature() {
        let (x, w) = gauss_legendre(48);
        for k in 0..8 {
            for &s in &[-1.0, -0.73, -0.4, 0.0] {
                let exact = shifted_legendre_lower_integral(k, s);
                let quad: f64 = x
                    .iter()
                    .zip(&w)
                    .filter(|(&xi, _)| xi <= s)
                    .map(|(&xi, &wi)| wi * shifted_legendre(k, xi))
                    .sum();
                // The filter-based sum is only a rough check; integrate a
                // polynomial antiderivative instead for interior points.
                if s == -1.0 {
                    assert!(exact.abs() < 1e-14);
                } else if s == 0.0 {
                    let full = if k == 0 { 1.0 } else { 0.0 };
                    assert!((exact - full).abs() < 1e-14);
                } else {
                    // Loose agreement with the clipped quadrature sum.
                    assert!((exact - quad).abs() < 0.05);
                }
            }
        }
    }
}
