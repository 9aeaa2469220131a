use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::resources::PortRole;
use crate::spectral::PolyphaseSpectrum;

use super::problem::{decode_port_spectrum, encode_port_spectrum, HpfProblem, HpfSolution, PortSolution};
use super::{flat_init, random_init, InitStrategy, SolverConfig, SolverError};

/// Residual evaluator with per-port response caching: repeated evaluations
/// that leave a port's unknown slice untouched (finite-difference columns
/// of other ports) reuse the cached resource output.
struct Evaluator<'a> {
    problem: &'a HpfProblem,
    cache: Vec<Option<(Vec<f64>, PolyphaseSpectrum)>>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a HpfProblem) -> Self {
        Self {
            problem,
            cache: (0..problem.n_ports()).map(|_| None).collect(),
        }
    }

    fn port_output(&mut self, p: usize, slice: &[f64]) -> Result<PolyphaseSpectrum, SolverError> {
        if let Some((key, out)) = &self.cache[p] {
            if key.as_slice() == slice {
                return Ok(out.clone());
            }
        }
        let input = decode_port_spectrum(self.problem.sp, slice);
        let out = self.problem.ports[p]
            .response
            .respond(&input)
            .map_err(|e| SolverError::Resource {
                node: self.problem.ports[p].node_name.clone(),
                source: e,
            })?;
        self.cache[p] = Some((slice.to_vec(), out.clone()));
        Ok(out)
    }

    /// Residual: grid-side minus resource-side port quantities, stacked in
    /// unknown order.
    fn residual(&mut self, x: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        let problem = self.problem;
        let sp = problem.sp;
        let stride = problem.port_stride();
        let nf = problem.n_follow();

        let mut resource_out = Vec::with_capacity(problem.n_ports());
        for p in 0..problem.n_ports() {
            let slice = &x.as_slice()[p * stride..(p + 1) * stride];
            resource_out.push(self.port_output(p, slice)?);
        }

        let follow_v: Vec<PolyphaseSpectrum> = (0..nf)
            .map(|p| decode_port_spectrum(sp, &x.as_slice()[p * stride..(p + 1) * stride]))
            .collect();
        let form_i: Vec<PolyphaseSpectrum> = (nf..problem.n_ports())
            .map(|p| decode_port_spectrum(sp, &x.as_slice()[p * stride..(p + 1) * stride]))
            .collect();

        let (grid_i, grid_v) = problem.grid.grid_spectra(&follow_v, &form_i);

        let mut r = DVector::zeros(problem.n_unknowns());
        for p in 0..problem.n_ports() {
            let grid_side = if p < nf { &grid_i[p] } else { &grid_v[p - nf] };
            let mut diff = PolyphaseSpectrum::zero(sp);
            for h in 1..=sp.h_max() {
                let g = grid_side.at_order(h as i32);
                let s = resource_out[p].at_order(h as i32);
                diff.set_order_pair(h, [g[0] - s[0], g[1] - s[1], g[2] - s[2]])
                    .unwrap();
            }
            encode_port_spectrum(sp, &diff, &mut r.as_mut_slice()[p * stride..(p + 1) * stride]);
        }
        Ok(r)
    }
}

/// Write the real expansion of `m` into `j` at block `(row0, col0)`:
/// complex linear maps become 2x2 real blocks per phase pair.
fn fill_complex_block(
    j: &mut DMatrix<f64>,
    row0: usize,
    col0: usize,
    m: &DMatrix<Complex64>,
    sign: f64,
) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            j[(row0 + 2 * r, col0 + 2 * c)] += sign * v.re;
            j[(row0 + 2 * r, col0 + 2 * c + 1)] -= sign * v.im;
            j[(row0 + 2 * r + 1, col0 + 2 * c)] += sign * v.im;
            j[(row0 + 2 * r + 1, col0 + 2 * c + 1)] += sign * v.re;
        }
    }
}

/// Assemble the Jacobian: closed-form grid blocks (the grid relation is
/// affine and per-order decoupled) minus central finite differences of the
/// resource responses (dense within each port, computed in parallel over
/// ports). Voltage-forming responses are affine, so their blocks are
/// computed once and reused across iterations.
fn jacobian(
    problem: &HpfProblem,
    x: &DVector<f64>,
    fd_step: f64,
    affine_cache: &mut [Option<DMatrix<f64>>],
) -> Result<DMatrix<f64>, SolverError> {
    let sp = problem.sp;
    let stride = problem.port_stride();
    let n = problem.n_unknowns();
    let nf = problem.n_follow();
    let mut j = DMatrix::zeros(n, n);

    // Grid part: per order, per port pair.
    for h in 1..=sp.h_max() as i32 {
        let hy = problem.grid.hybrid_at(h);
        let row_at = |p: usize| p * stride + (h as usize - 1) * 6;
        for pr in 0..problem.n_ports() {
            for pc in 0..problem.n_ports() {
                let block = match (pr < nf, pc < nf) {
                    (true, true) => hy.i_from_v.view((3 * pr, 3 * pc), (3, 3)).into_owned(),
                    (true, false) => hy
                        .i_from_i
                        .view((3 * pr, 3 * (pc - nf)), (3, 3))
                        .into_owned(),
                    (false, true) => hy
                        .v_from_v
                        .view((3 * (pr - nf), 3 * pc), (3, 3))
                        .into_owned(),
                    (false, false) => hy
                        .v_from_i
                        .view((3 * (pr - nf), 3 * (pc - nf)), (3, 3))
                        .into_owned(),
                };
                fill_complex_block(&mut j, row_at(pr), row_at(pc), &block, 1.0);
            }
        }
    }

    // Resource part: central differences per port, parallel over ports.
    let blocks: Result<Vec<Option<DMatrix<f64>>>, SolverError> = (0..problem.n_ports())
        .into_par_iter()
        .map(|p| {
            let port = &problem.ports[p];
            if affine_cache[p].is_some() {
                return Ok(None);
            }
            let base = &x.as_slice()[p * stride..(p + 1) * stride];
            let input = decode_port_spectrum(sp, base);
            let block = port
                .response
                .port_jacobian_fd(&input, fd_step)
                .map_err(|e| SolverError::Resource {
                    node: port.node_name.clone(),
                    source: e,
                })?;
            Ok(Some(block))
        })
        .collect();
    for (p, block) in blocks?.into_iter().enumerate() {
        if let Some(block) = block {
            if problem.ports[p].role == PortRole::VoltageFormer {
                affine_cache[p] = Some(block.clone());
            }
            let r0 = p * stride;
            for r in 0..stride {
                for c in 0..stride {
                    j[(r0 + r, r0 + c)] -= block[(r, c)];
                }
            }
        } else if let Some(block) = &affine_cache[p] {
            let r0 = p * stride;
            for r in 0..stride {
                for c in 0..stride {
                    j[(r0 + r, r0 + c)] -= block[(r, c)];
                }
            }
        }
    }
    Ok(j)
}

fn initial_point(problem: &HpfProblem, cfg: &SolverConfig) -> DVector<f64> {
    match cfg.init {
        InitStrategy::Flat => flat_init(problem),
        InitStrategy::Random {
            seed,
            mag_range,
            phase_range,
        } => random_init(seed, problem, mag_range, phase_range),
    }
}

/// Damped Newton-Raphson iteration on the coupled port equations.
pub fn solve(problem: &HpfProblem, cfg: &SolverConfig) -> Result<HpfSolution, SolverError> {
    cfg.validate()?;
    let mut evaluator = Evaluator::new(problem);
    let mut x = initial_point(problem, cfg);
    let mut history = Vec::new();

    let mut r = evaluator.residual(&x)?;
    let mut r_norm = r.amax();
    let mut r_norm2 = r.norm();
    history.push(r_norm);

    let mut iterations = 0;
    let mut affine_cache: Vec<Option<DMatrix<f64>>> = (0..problem.n_ports()).map(|_| None).collect();
    while r_norm > cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(SolverError::NonConvergence {
                iterations,
                residual: r_norm,
                history,
            });
        }
        if x.amax() > 1e6 {
            return Err(SolverError::Diverged {
                iteration: iterations,
                norm: x.amax(),
            });
        }
        let j = jacobian(problem, &x, cfg.fd_step, &mut affine_cache)?;
        let lu = j.lu();
        let step = lu
            .solve(&r)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or(SolverError::SingularJacobian {
                iteration: iterations,
            })?;

        // Backtracking line search on the Euclidean residual norm. Far from
        // the solution the Newton direction can overshoot the nonlinear
        // reference calculation badly, so the step length is also capped.
        // Resource evaluation failures at a trial point (singular operating
        // points) count as failures to decrease.
        let step_cap = 4.0 * x.amax().max(10.0);
        let cap_scale = if step.amax() > step_cap {
            step_cap / step.amax()
        } else {
            1.0
        };
        let mut best: Option<(DVector<f64>, DVector<f64>, f64)> = None;
        let mut lambda = cap_scale;
        for _ in 0..=30 {
            let x_try = &x - &step * lambda;
            if let Ok(r_try) = evaluator.residual(&x_try) {
                let n2_try = r_try.norm();
                if n2_try.is_finite() {
                    if n2_try < (1.0 - 1e-4 * lambda) * r_norm2 {
                        best = Some((x_try, r_try, n2_try));
                        break;
                    }
                    let keep = best.as_ref().map(|(_, _, n)| n2_try < *n).unwrap_or(true);
                    if keep {
                        best = Some((x_try, r_try, n2_try));
                    }
                }
            }
            lambda *= 0.5;
        }
        let (x_new, r_new, n2_new) = best.ok_or(SolverError::NonConvergence {
            iterations,
            residual: r_norm,
            history: history.clone(),
        })?;
        x = x_new;
        r = r_new;
        r_norm = r.amax();
        r_norm2 = n2_new;
        history.push(r_norm);
        iterations += 1;
    }

    // Independent re-evaluation at the solution, bypassing the cache.
    let verified_residual = Evaluator::new(problem).residual(&x)?.amax();

    let sp = problem.sp;
    let stride = problem.port_stride();
    let mut ports = Vec::new();
    for (p, binding) in problem.ports.iter().enumerate() {
        let own = decode_port_spectrum(sp, &x.as_slice()[p * stride..(p + 1) * stride]);
        let other = evaluator.port_output(p, &x.as_slice()[p * stride..(p + 1) * stride])?;
        let (voltage, current) = match binding.role {
            PortRole::CurrentInjector => (own, other),
            PortRole::VoltageFormer => (other, own),
        };
        ports.push(PortSolution {
            node: binding.node,
            node_name: binding.node_name.clone(),
            role: binding.role,
            voltage,
            current,
        });
    }

    Ok(HpfSolution {
        ports,
        converged: true,
        iterations,
        residual_history: history,
        verified_residual,
        x,
    })
}
