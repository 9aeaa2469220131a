//! Scratch: batched vs naive finite-difference port Jacobian.

use hpf_core::network::benchmark_network;
use hpf_core::resources::{HarmonicResponse, ResourceRegistry};
use hpf_core::solver::{build_problem, decode_port_spectrum, encode_port_spectrum};
use hpf_core::spectral::SpectralParams;

#[test]
#[ignore]
fn batched_jacobian_matches_naive() {
    let net = benchmark_network();
    let registry = ResourceRegistry::with_builtin();
    let sp = SpectralParams::new(50.0, 25);
    let problem = build_problem(&net, sp, &registry).unwrap();
    let stride = problem.port_stride();

    // A haphazard operating point: nominal fundamental plus clutter.
    let mut slice = vec![0.0; stride];
    let mut ps = hpf_core::spectral::PolyphaseSpectrum::zero(sp);
    let mut a = hpf_core::spectral::HarmonicSpectrum::zero(sp);
    a.set_conjugate_pair(1, num_complex::Complex64::new(0.9, -0.3)).unwrap();
    a.set_conjugate_pair(7, num_complex::Complex64::new(0.2, 0.1)).unwrap();
    a.set_conjugate_pair(24, num_complex::Complex64::new(-0.05, 0.02)).unwrap();
    ps = hpf_core::spectral::PolyphaseSpectrum::balanced_positive(&a);
    encode_port_spectrum(sp, &ps, &mut slice);
    let input = decode_port_spectrum(sp, &slice);

    struct Naive<'a>(&'a dyn HarmonicResponse);
    impl<'a> HarmonicResponse for Naive<'a> {
        fn params(&self) -> SpectralParams { self.0.params() }
        fn role(&self) -> hpf_core::resources::PortRole { self.0.role() }
        fn respond(&self, input: &hpf_core::spectral::PolyphaseSpectrum)
            -> Result<hpf_core::spectral::PolyphaseSpectrum, hpf_core::resources::ResourceError> {
            self.0.respond(input)
        }
        // no override: uses the default naive FD
    }

    for p in [1usize, 4] {
        let resp = problem.ports[p].response.as_ref();
        let fast = resp.port_jacobian_fd(&input, 1e-6).unwrap();
        let naive = Naive(resp).port_jacobian_fd(&input, 1e-6).unwrap();
        let dev = (&fast - &naive).amax();
        eprintln!("port {p} ({:?}): max |batched - naive| = {dev:.3e}", problem.ports[p].role);
        assert!(dev < 1e-7, "Jacobian mismatch at port {p}");
    }
}
