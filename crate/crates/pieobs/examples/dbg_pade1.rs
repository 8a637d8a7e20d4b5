use pieobs::baseline::baseline_gamma;
use pieobs::dde::DdeModel;
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
    let t0 = std::time::Instant::now();
    match baseline_gamma(&m, 10) {
        Ok(b) => println!("gamma_pade = {:.6} (target 1.8081), dim {}, iters {}, {:.1}s",
            b.gamma_pade, b.dim, b.iterations, t0.elapsed().as_secs_f64()),
        Err(e) => println!("FAILED: {e}"),
    }
}
