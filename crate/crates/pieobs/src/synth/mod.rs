//! Observer synthesis: minimize the closed-loop H∞ bound γ over the
//! structured certificate, extract explicit observer gains, and verify the
//! certificate numerically.

pub mod cert;
pub mod lpi;

pub use cert::{monomial_basis, NumericCert, PosCert, ZVar};
pub use lpi::{assemble_lpi, enforce_negativity, LoweringError};

use crate::dde::DdeModel;
use crate::piop::{inverse_structured, GridFn, InverseError};
use crate::scalar::Scalar;
use crate::sdp::{SdpProblem, SdpSolution, SdpStatus, SolveOpts};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("LPI infeasible at the requested certificate degrees (dP={dp}, d1={d1}, d2={d2}); try larger degrees")]
    Infeasible { dp: usize, d1: usize, d2: usize },
    #[error("SDP solver failed to converge (best residuals: primal {primal:.2e}, dual {dual:.2e}, gap {gap:.2e})")]
    SolverFailure { primal: f64, dual: f64, gap: f64 },
    #[error(transparent)]
    Lowering(#[from] LoweringError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
}

#[derive(Clone, Copy, Debug)]
pub struct SynthOptions {
    /// Basis degree of Z(s) in the positive-operator structure.
    pub dp: usize,
    /// Pointwise block degree of the negativity certificate.
    pub d1: usize,
    /// One-sided kernel degree of the negativity certificate.
    pub d2: usize,
    /// Coercivity margin ε of the positive operator.
    pub eps: f64,
    /// Strict-negativity margin on the finite block.
    pub eps_neg: f64,
    /// SDP tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Spatial samples per delay channel for the exported gain table.
    pub gain_grid: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions::with_degree(2)
    }
}

impl SynthOptions {
    pub fn with_degree(dp: usize) -> Self {
        SynthOptions {
            dp,
            d1: dp + 1,
            d2: dp,
            eps: 1e-4,
            eps_neg: 1e-6,
            tol: 1e-8,
            max_iter: 200,
            gain_grid: 100,
        }
    }
}

/// Extracted observer gains: the matrix gain L1 and the per-channel gain
/// functions L2_i(s), rational in s, carried as an evaluator plus samples on
/// the simulation grid.
#[derive(Clone, Debug)]
pub struct ObserverGains {
    pub l1: DMatrix<f64>,
    /// Uniform grid nodes on [-1, 0] where the gains were sampled.
    pub s_nodes: Vec<f64>,
    /// l2_samples[channel][node]: (n+r) × q gain block.
    pub l2_samples: Vec<Vec<DMatrix<f64>>>,
    /// Intermediates retained for audit.
    pub k: DMatrix<f64>,
    pub h_hat: DMatrix<f64>,
    pub gamma_hat: DMatrix<f64>,
    /// Combined right factor Ĥᵀ Z1 + W + Γ̂ K W of the L2 formula.
    pub l2_right: DMatrix<f64>,
    /// Certificate pieces needed to re-evaluate L2 at arbitrary s.
    pub cert: NumericCert,
    pub channel_width: usize,
    pub n_channels: usize,
}

impl ObserverGains {
    /// Stacked L2(s) = R0(s)⁻¹ Z(s)ᵀ (Ĥᵀ Z1 + W + Γ̂ K W), all channels.
    pub fn l2_at(&self, s: f64) -> DMatrix<f64> {
        let st = self.cert.structure();
        let r0 = st.r0.eval(s);
        let zt = st.z.eval(s).transpose();
        r0.lu().solve(&(zt * &self.l2_right)).expect("R0(s) invertible")
    }

    /// Per-channel block of `l2_at`.
    pub fn l2_channel_at(&self, channel: usize, s: f64) -> DMatrix<f64> {
        let full = self.l2_at(s);
        full.rows(channel * self.channel_width, self.channel_width)
            .into_owned()
    }

    /// The gain operator 𝓛 = Π[L1, ∅; L2(s), ∅] discretized on Gauss nodes.
    pub fn discretize(&self, n_nodes: usize) -> DMatrix<f64> {
        let (nodes, weights) = crate::quad::gauss_legendre(n_nodes);
        let ns = self.n_channels * self.channel_width;
        let q = self.l1.ncols();
        let mut out = DMatrix::zeros(self.l1.nrows() + n_nodes * ns, q);
        out.view_mut((0, 0), (self.l1.nrows(), q)).copy_from(&self.l1);
        for (i, (&s, &w)) in nodes.iter().zip(&weights).enumerate() {
            let block = self.l2_at(s) * w.sqrt();
            out.view_mut((self.l1.nrows() + i * ns, 0), (ns, q)).copy_from(&block);
        }
        out
    }
}

/// Solver and assembly diagnostics for the run manifest.
#[derive(Clone, Debug, Default)]
pub struct SynthDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rel_gap: f64,
    pub loosened: bool,
    pub nullspace_route: bool,
    pub n_vars: usize,
    pub n_constraints: usize,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    pub extraction_seconds: f64,
    pub bisection_used: bool,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    pub gamma: f64,
    pub cert: NumericCert,
    pub z1: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub gains: ObserverGains,
    pub diagnostics: SynthDiagnostics,
}

/// Full synthesis pipeline. `export_sdpa` optionally writes the lowered SDP
/// before solving.
pub fn synthesize(
    model: &DdeModel,
    opts: &SynthOptions,
    export_sdpa: Option<&std::path::Path>,
) -> Result<SynthesisResult, SynthError> {
    let t0 = std::time::Instant::now();
    let pie = model.to_pie();
    let (prob, pos, zv, gamma_var) = build_problem(&pie, opts, None)?;
    let assembly_seconds = t0.elapsed().as_secs_f64();
    if let Some(path) = export_sdpa {
        let _ = crate::sdp::sdpa::export(&prob, path);
    }
    let t1 = std::time::Instant::now();
    let sol = prob.solve(&SolveOpts {
        tol: opts.tol,
        max_iter: opts.max_iter,
    });
    let solve_seconds = t1.elapsed().as_secs_f64();

    let mut bisection_used = false;
    let sol: SdpSolution = match sol.status {
        SdpStatus::Optimal => sol,
        SdpStatus::Infeasible => {
            return Err(SynthError::Infeasible {
                dp: opts.dp,
                d1: opts.d1,
                d2: opts.d2,
            })
        }
        SdpStatus::NumericalFailure => {
            // γ-bisection fallback on fixed-γ feasibility problems.
            bisection_used = true;
            match bisect_gamma(&pie, opts)? {
                Some(s) => s,
                None => {
                    return Err(SynthError::SolverFailure {
                        primal: sol.primal_residual,
                        dual: sol.dual_residual,
                        gap: sol.rel_gap,
                    })
                }
            }
        }
    };

    // Cross-check the inferred column count of W against 𝒟₂ (the paper
    // leaves W's width implicit; it must equal the measured-output count).
    assert_eq!(zv.q, pie.q, "W column count must match the measured output");

    let t2 = std::time::Instant::now();
    let cert_num = pos.numeric(&prob, &sol.values);
    let (z1, w) = zv.numeric(&sol.values);
    let gamma = sol.values[gamma_var as usize];
    let gains = extract_gains(&cert_num, &z1, &w, pie.n_delays, pie.channel_width, opts.gain_grid)?;
    let extraction_seconds = t2.elapsed().as_secs_f64();

    Ok(SynthesisResult {
        gamma,
        cert: cert_num,
        z1,
        w,
        gains,
        diagnostics: SynthDiagnostics {
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            rel_gap: sol.rel_gap,
            loosened: sol.loosened,
            nullspace_route: matches!(sol.route, crate::sdp::SolveRoute::NullspaceLmi),
            n_vars: prob.n_vars(),
            n_constraints: prob.n_constraints(),
            assembly_seconds,
            solve_seconds,
            extraction_seconds,
            bisection_used,
        },
    })
}

/// Build the lowered SDP. With `fixed_gamma` the problem becomes a pure
/// feasibility check at that γ.
fn build_problem(
    pie: &crate::dde::PieSystem,
    opts: &SynthOptions,
    fixed_gamma: Option<f64>,
) -> Result<(SdpProblem, PosCert, ZVar, crate::scalar::VarId), SynthError> {
    let mut prob = SdpProblem::new();
    let pos = PosCert::declare(&mut prob, pie.n, pie.ns, opts.dp, opts.eps);
    let zv = ZVar::declare(&mut prob, pie.n, pie.ns, opts.dp, pie.q);
    let gamma_var = prob.add_free_var("gamma");
    let gamma_scalar = match fixed_gamma {
        Some(g) => Scalar::num(g),
        None => Scalar::var(gamma_var),
    };
    let p_op = pos.to_op(&prob);
    let z_op = zv.to_op();
    let target = assemble_lpi(pie, &p_op, &z_op, &gamma_scalar);
    enforce_negativity(&mut prob, &target, opts.eps_neg, opts.d1, opts.d2)?;
    if fixed_gamma.is_none() {
        prob.set_objective(Scalar::var(gamma_var));
    }
    Ok((prob, pos, zv, gamma_var))
}

/// Bisection over fixed-γ feasibility problems; returns a solution-shaped
/// record whose values come from the smallest feasible γ found.
fn bisect_gamma(
    pie: &crate::dde::PieSystem,
    opts: &SynthOptions,
) -> Result<Option<SdpSolution>, SynthError> {
    let feasible_at = |g: f64| -> Result<Option<(SdpProblem, SdpSolution)>, SynthError> {
        let (prob, _, _, gvar) = build_problem(pie, opts, Some(g))?;
        let mut sol = prob.solve(&SolveOpts {
            tol: (opts.tol * 100.0).min(1e-6),
            max_iter: opts.max_iter,
        });
        if sol.status == SdpStatus::Optimal {
            // record the γ actually used
            sol.values[gvar as usize] = g;
            Ok(Some((prob, sol)))
        } else {
            Ok(None)
        }
    };
    // expand an upper bound
    let mut hi = 1.0;
    let mut hi_sol = None;
    for _ in 0..12 {
        if let Some(s) = feasible_at(hi)? {
            hi_sol = Some(s);
            break;
        }
        hi *= 4.0;
    }
    let Some(mut best) = hi_sol else {
        return Ok(None);
    };
    let mut lo = 0.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-4 * (1.0 + hi) {
            break;
        }
        match feasible_at(mid)? {
            Some(s) => {
                hi = mid;
                best = s;
            }
            None => lo = mid,
        }
    }
    Ok(Some(best.1))
}

/// Gains per the separable-inverse composition: L1 = P̂ Z1 + Ĥ K W and
/// L2(s) = R0(s)⁻¹ Z(s)ᵀ (Ĥᵀ Z1 + W + Γ̂ K W), sampled on a uniform grid.
pub fn extract_gains(
    cert: &NumericCert,
    z1: &DMatrix<f64>,
    w: &DMatrix<f64>,
    n_channels: usize,
    channel_width: usize,
    grid: usize,
) -> Result<ObserverGains, SynthError> {
    if cert.ns == 0 {
        // Delay-free: L1 = P⁻¹ Z1, no L2.
        let l1 = cert
            .p
            .clone()
            .lu()
            .solve(z1)
            .ok_or(InverseError::PSingular(f64::INFINITY))?;
        return Ok(ObserverGains {
            l1,
            s_nodes: Vec::new(),
            l2_samples: Vec::new(),
            k: DMatrix::zeros(0, 0),
            h_hat: DMatrix::zeros(0, 0),
            gamma_hat: DMatrix::zeros(0, 0),
            l2_right: DMatrix::zeros(0, z1.ncols()),
            cert: cert.clone(),
            channel_width,
            n_channels,
        });
    }
    let st = cert.structure();
    let inv = inverse_structured(&st, 64)?;
    let l1 = &inv.p_hat * z1 + &inv.h_hat * &inv.k * w;
    let l2_right = inv.h_hat.transpose() * z1 + w + &inv.gamma_hat * &inv.k * w;
    let mut gains = ObserverGains {
        l1,
        s_nodes: Vec::new(),
        l2_samples: Vec::new(),
        k: inv.k.clone(),
        h_hat: inv.h_hat.clone(),
        gamma_hat: inv.gamma_hat.clone(),
        l2_right,
        cert: cert.clone(),
        channel_width,
        n_channels,
    };
    let nodes: Vec<f64> = (0..=grid).map(|i| -1.0 + i as f64 / grid as f64).collect();
    let mut samples = vec![Vec::with_capacity(nodes.len()); n_channels];
    for &s in &nodes {
        let full = gains.l2_at(s);
        for (ch, bucket) in samples.iter_mut().enumerate() {
            bucket.push(full.rows(ch * channel_width, channel_width).into_owned());
        }
    }
    gains.s_nodes = nodes;
    gains.l2_samples = samples;
    Ok(gains)
}

/// Residual of the gain identity 𝒫 ∘ 𝓛 = 𝒵 on a Gauss discretization.
pub fn gain_identity_residual(
    cert: &NumericCert,
    z1: &DMatrix<f64>,
    w: &DMatrix<f64>,
    gains: &ObserverGains,
    n_nodes: usize,
) -> f64 {
    let p_num = cert.to_op();
    let dl = gains.discretize(n_nodes);
    let dp = p_num.discretize(n_nodes);
    // 𝒵 discretized: matrix part Z1, L2-kernel rows √w Z(s)ᵀW.
    let st = cert.structure();
    let (nodes, weights) = crate::quad::gauss_legendre(n_nodes);
    let ns = cert.ns;
    let q = z1.ncols();
    let mut dz = DMatrix::zeros(cert.n + n_nodes * ns, q);
    dz.view_mut((0, 0), (cert.n, q)).copy_from(z1);
    for (i, (&s, &wt)) in nodes.iter().zip(&weights).enumerate() {
        let blk = st.z.eval(s).transpose() * w * wt.sqrt();
        dz.view_mut((cert.n + i * ns, 0), (ns, q)).copy_from(&blk);
    }
    let lhs = dp * dl;
    (&lhs - &dz).norm() / dz.norm().max(1e-300)
}

/// Storage-functional trace along a simulated trajectory.
#[derive(Clone, Debug)]
pub struct DissipationTrace {
    /// Snapshot times.
    pub times: Vec<f64>,
    /// State estimation error x̂ - x at snapshots.
    pub dx: Vec<DVector<f64>>,
    /// History estimation error φ̂ - φ at snapshots, one grid function each.
    pub dphi: Vec<GridFn>,
    /// Cumulative ∫‖w‖² and ∫‖z_e‖² at snapshot times.
    pub cum_w2: Vec<f64>,
    pub cum_ze2: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DissipationReport {
    /// sup_t [V(t) - V(0) - γ∫‖w‖² + (1/γ)∫‖z_e‖²]
    pub worst_violation: f64,
    /// γ ∫₀ᵀ ‖w‖² (the tolerance reference scale)
    pub budget: f64,
    pub v_start: f64,
    pub v_end: f64,
    pub holds_within: f64,
}

/// Evaluate V(t) = ⟨[Δx; Δφ], 𝒫 [Δx; Δφ]⟩ along the trajectory and check the
/// integrated dissipation inequality
/// V(t) - V(0) ≤ γ∫₀ᵗ‖w‖² - (1/γ)∫₀ᵗ‖z_e‖².
pub fn verify_dissipation(
    cert: &NumericCert,
    gamma: f64,
    trace: &DissipationTrace,
) -> DissipationReport {
    let p_op = cert.to_op();
    let mut v = Vec::with_capacity(trace.times.len());
    for k in 0..trace.times.len() {
        let (px, pphi) = p_op.apply(&trace.dx[k], &trace.dphi[k]);
        let val = trace.dx[k].dot(&px) + trace.dphi[k].inner(&pphi);
        v.push(val);
    }
    let v0 = v[0];
    let mut worst = f64::NEG_INFINITY;
    for k in 0..v.len() {
        let bound = gamma * trace.cum_w2[k] - trace.cum_ze2[k] / gamma;
        worst = worst.max(v[k] - v0 - bound);
    }
    let budget = gamma * trace.cum_w2.last().copied().unwrap_or(0.0);
    DissipationReport {
        worst_violation: worst,
        budget,
        v_start: v0,
        v_end: *v.last().unwrap(),
        holds_within: if budget > 0.0 { worst / budget } else { worst },
    }
}

#[cfg(test)]
mod tests;
