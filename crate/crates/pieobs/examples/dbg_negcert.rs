use pieobs::piop::{PiOp, OpDims};
use pieobs::poly::{PolyMat1, SMat, Var1};
use pieobs::sdp::{SolveOpts, SdpProblem};
use pieobs::synth::enforce_negativity;

fn main() {
    let id = PiOp::identity(1, 1);
    let mut prob = SdpProblem::new();
    enforce_negativity(&mut prob, &id, 0.5, 3, 2).unwrap();
    let sol = prob.solve(&SolveOpts::default());
    println!("+I: status {:?} iters {} pres {:.2e} dres {:.2e} gap {:.2e}",
        sol.status, sol.iterations, sol.primal_residual, sol.dual_residual, sol.rel_gap);

    let mut op = PiOp::zero(OpDims { m_out: 1, n_out: 1, m_in: 1, n_in: 1 });
    op.p = SMat::zeros(1, 1);
    op.r0 = PolyMat1::from_coeffs(Var1::S, vec![SMat::zeros(1, 1), SMat::identity(1)]);
    let mut prob = SdpProblem::new();
    enforce_negativity(&mut prob, &op, 1e-6, 3, 2).unwrap();
    let sol = prob.solve(&SolveOpts::default());
    println!("R0=s: status {:?} iters {} pres {:.2e} dres {:.2e} gap {:.2e}",
        sol.status, sol.iterations, sol.primal_residual, sol.dual_residual, sol.rel_gap);
}
