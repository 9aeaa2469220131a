use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::resources::PortRole;
use crate::spectral::sequence_compose;

use super::problem::HpfProblem;

/// Nominal starting point: balanced positive-sequence fundamental voltage
/// at following ports, zero current at forming ports.
pub fn flat_init(problem: &HpfProblem) -> DVector<f64> {
    let mut x = DVector::zeros(problem.n_unknowns());
    let stride = problem.port_stride();
    let alpha = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    for (p, port) in problem.ports.iter().enumerate() {
        if port.role == PortRole::CurrentInjector {
            // Fundamental (h = 1) sits at the start of the port slice.
            let x1 = Complex64::new(1.0 / std::f64::consts::SQRT_2, 0.0);
            let phases = [x1, x1 * alpha.conj(), x1 * alpha];
            for (k, ph) in phases.iter().enumerate() {
                x[p * stride + 2 * k] = ph.re;
                x[p * stride + 2 * k + 1] = ph.im;
            }
        }
    }
    x
}

/// Random starting point: at every port and positive order, a superposition
/// of positive-, negative-, and homopolar-sequence components with
/// magnitudes and phases drawn uniformly from the given ranges.
/// Deterministic for a fixed seed.
pub fn random_init(
    seed: u64,
    problem: &HpfProblem,
    mag_range: (f64, f64),
    phase_range: (f64, f64),
) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::zeros(problem.n_unknowns());
    let stride = problem.port_stride();
    for p in 0..problem.n_ports() {
        for h in 0..problem.sp.h_max() as usize {
            let mut draw = || {
                let m = rng.gen_range(mag_range.0..=mag_range.1) / std::f64::consts::SQRT_2;
                let a = rng.gen_range(phase_range.0..=phase_range.1);
                Complex64::from_polar(m, a)
            };
            let (pos, neg, zero) = (draw(), draw(), draw());
            let phases = sequence_compose(pos, neg, zero);
            for (k, ph) in phases.iter().enumerate() {
                x[p * stride + 6 * h + 2 * k] = ph.re;
                x[p * stride + 6 * h + 2 * k + 1] = ph.im;
            }
        }
    }
    x
}
