use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::network::{thevenin_source_spectrum, NetworkSpec};
use crate::resources::{
    CiderKind, PortAttachment, ResourceDynamics, ResourceRegistry,
};
use crate::spectral::{fortescue_to_phase, sequence_decompose, PolyphaseSpectrum, SpectralParams};

use super::{dft_extract_polyphase, TdsError};

/// Simulation configuration. Times in seconds.
#[derive(Debug, Clone, Copy)]
pub struct TdsConfig {
    /// Integration step.
    pub dt: f64,
    /// Hard simulation-time cap.
    pub t_end: f64,
    /// Earliest time at which steady state may be declared.
    pub min_time: f64,
    /// Relative cycle-to-cycle RMS change below which a channel is steady.
    pub steady_tol: f64,
    /// Length of the DFT window in fundamental periods.
    pub window_periods: u32,
    /// Record the full state vector over the window (diagnostics/tests).
    pub record_states: bool,
    /// Print per-cycle convergence diagnostics to stderr.
    pub trace: bool,
    /// Resolve power-tracking references by exact pointwise division
    /// instead of the model's second-order reciprocal expansion
    /// (diagnostic of the expansion error).
    pub exact_reference: bool,
}

impl Default for TdsConfig {
    fn default() -> Self {
        Self {
            dt: 2e-6,
            t_end: 4.0,
            min_time: 0.5,
            steady_tol: 1e-7,
            window_periods: 5,
            record_states: false,
            trace: false,
            exact_reference: false,
        }
    }
}

impl TdsConfig {
    pub fn validate(&self, sp: SpectralParams) -> Result<usize, TdsError> {
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.steady_tol > 0.0) {
            return Err(TdsError::InvalidConfig("non-positive timing values".into()));
        }
        let dt_max = 1.0 / (20.0 * sp.f1_hz() * sp.h_max() as f64);
        if self.dt > dt_max {
            return Err(TdsError::InvalidConfig(format!(
                "dt = {:.3e} s undersamples order {} (need <= {:.3e} s)",
                self.dt,
                sp.h_max(),
                dt_max
            )));
        }
        let per_cycle = sp.period() / self.dt;
        let rounded = per_cycle.round();
        if (per_cycle - rounded).abs() > 1e-9 * per_cycle {
            return Err(TdsError::InvalidConfig(format!(
                "dt must divide the fundamental period ({per_cycle:.6} steps per cycle)"
            )));
        }
        if self.window_periods == 0 {
            return Err(TdsError::InvalidConfig("empty DFT window".into()));
        }
        Ok(rounded as usize)
    }
}

/// Recorded waveforms of one port over the final window.
#[derive(Debug, Clone)]
pub struct PortWaveforms {
    pub node: usize,
    pub node_name: String,
    pub v: [Vec<f64>; 3],
    pub i: [Vec<f64>; 3],
}

/// Result of a simulation run.
pub struct TdsResult {
    pub sp: SpectralParams,
    /// Sampling step of the recorded waveforms.
    pub dt_rec: f64,
    pub window_periods: u32,
    pub ports: Vec<PortWaveforms>,
    /// Simulated time at which steady state was declared.
    pub t_steady: f64,
    pub reached_steady: bool,
    /// Wall-clock time spent stepping the final window (the part of the
    /// simulation a perfectly initialized run would still need).
    pub window_wall: Duration,
    /// Full state trajectory over the window, when requested.
    pub states: Option<Vec<Vec<f64>>>,
}

impl TdsResult {
    /// Port voltage and current spectra extracted from the window.
    pub fn port_spectra(&self) -> Result<Vec<(String, PolyphaseSpectrum, PolyphaseSpectrum)>, TdsError> {
        self.ports
            .iter()
            .map(|p| {
                let v = dft_extract_polyphase(&p.v, self.sp, self.window_periods, self.dt_rec)?;
                let i = dft_extract_polyphase(&p.i, self.sp, self.window_periods, self.dt_rec)?;
                Ok((p.node_name.clone(), v, i))
            })
            .collect()
    }
}

/// One source phase as a sum of cosine tones.
#[derive(Clone)]
struct SourceWave {
    tones: [Vec<(f64, f64, f64)>; 3],
}

impl SourceWave {
    fn from_spectrum(ps: &PolyphaseSpectrum) -> Self {
        let sp = ps.params();
        let mut tones: [Vec<(f64, f64, f64)>; 3] = Default::default();
        for (p, tone) in tones.iter_mut().enumerate() {
            for h in 1..=sp.h_max() {
                let x = ps.phases()[p].get(h as i32);
                if x.norm() > 0.0 {
                    tone.push((h as f64 * sp.omega1(), 2.0 * x.norm(), x.arg()));
                }
            }
        }
        Self { tones }
    }

    fn at(&self, t: f64, phase: usize) -> f64 {
        self.tones[phase]
            .iter()
            .map(|&(w, a, ph)| a * (w * t + ph).cos())
            .sum()
    }
}

struct LineBranch {
    from: usize,
    to: usize,
    l_inv: Matrix3<f64>,
    r: Matrix3<f64>,
}

struct LoadBranch {
    node: usize,
    /// Per phase: (R, L) or None for an open (zero-weight) phase.
    phases: [Option<(f64, f64)>; 3],
}

struct ResourceSlot {
    node: usize,
    offset: usize,
    dynamics: Box<dyn ResourceDynamics>,
}

/// Time-domain model of a full network in per-unit: node voltages on the
/// shunt capacitances, inductive branch currents, and resource states.
struct NetworkEngine {
    n_nodes: usize,
    c_inv: Vec<Matrix3<f64>>,
    g_shunt: Vec<f64>,
    lines: Vec<LineBranch>,
    line_offset: usize,
    loads: Vec<LoadBranch>,
    load_offset: usize,
    te_node: usize,
    te_r: f64,
    te_l_inv: f64,
    te_offset: usize,
    source: SourceWave,
    resources: Vec<ResourceSlot>,
    n_states: usize,
}

fn real3(m: &Matrix3<Complex64>) -> Matrix3<f64> {
    m.map(|x| x.re)
}

impl NetworkEngine {
    fn build(
        net: &NetworkSpec,
        registry: &ResourceRegistry,
        sp: SpectralParams,
    ) -> Result<Self, TdsError> {
        net.validate()?;
        let z_b = net.base.z_base_ohm();
        let w1 = sp.omega1();
        let n_nodes = net.n_nodes();

        let mut c_node = vec![Matrix3::<f64>::zeros(); n_nodes];
        let mut g_shunt = vec![0.0; n_nodes];

        let mut lines = Vec::new();
        for l in &net.lines {
            let len_km = l.length_m / 1000.0;
            let cx = |v: f64| Complex64::new(v, 0.0);
            let r_abc = real3(&fortescue_to_phase(
                cx(l.seq.r1_ohm_per_km),
                cx(l.seq.r1_ohm_per_km),
                cx(l.seq.r0_ohm_per_km),
            )) * (len_km / z_b);
            let l_abc = real3(&fortescue_to_phase(
                cx(l.seq.l1_h_per_km),
                cx(l.seq.l1_h_per_km),
                cx(l.seq.l0_h_per_km),
            )) * (len_km / z_b);
            let c_abc = real3(&fortescue_to_phase(
                cx(l.seq.c1_f_per_km),
                cx(l.seq.c1_f_per_km),
                cx(l.seq.c0_f_per_km),
            )) * (len_km * z_b);
            let l_inv = l_abc.try_inverse().ok_or_else(|| {
                TdsError::InvalidConfig("line inductance matrix not invertible".into())
            })?;
            c_node[l.from] += c_abc * 0.5;
            c_node[l.to] += c_abc * 0.5;
            lines.push(LineBranch {
                from: l.from,
                to: l.to,
                l_inv,
                r: r_abc,
            });
        }

        let mut loads = Vec::new();
        for load in &net.loads {
            let sin_phi = (1.0 - load.pf * load.pf).sqrt();
            let mut phases = [None; 3];
            for p in 0..3 {
                let s_p = load.weights[p] * load.s_va;
                if s_p > 0.0 {
                    let v2 = net.base.v_base_v * net.base.v_base_v;
                    let z1 = Complex64::new(v2, 0.0)
                        / (Complex64::new(load.pf, sin_phi) * s_p).conj();
                    phases[p] = Some((z1.re / z_b, z1.im / (w1 * z_b)));
                }
            }
            loads.push(LoadBranch {
                node: load.node,
                phases,
            });
        }

        let (te_r_ohm, te_x_ohm) = net.thevenin.rx_ohm();
        let te_r = te_r_ohm / z_b;
        let te_l = te_x_ohm / (w1 * z_b);
        let v_te = thevenin_source_spectrum(&net.thevenin, sp, net.base.v_base_v)?;
        let source = SourceWave::from_spectrum(&v_te);

        let mut resources = Vec::new();
        let mut offset = 0usize;
        // State layout: node voltages, line currents, load currents, the
        // source branch current, then resource blocks.
        offset += 3 * n_nodes;
        let line_offset = offset;
        offset += 3 * lines.len();
        let load_offset = offset;
        offset += 3 * loads.len();
        let te_offset = offset;
        offset += 3;
        for r in &net.resources {
            let model = registry.build(&r.spec, &net.base)?;
            let dynamics = model.dynamics(sp.f1_hz(), None)?;
            if let PortAttachment::ShuntCapacitor { c, g } = dynamics.attachment() {
                c_node[r.node] += Matrix3::identity() * c;
                g_shunt[r.node] += g;
            }
            let n = dynamics.n_states();
            resources.push(ResourceSlot {
                node: r.node,
                offset,
                dynamics,
            });
            offset += n;
        }

        let mut c_inv = Vec::with_capacity(n_nodes);
        for (i, c) in c_node.iter().enumerate() {
            let inv = c.try_inverse().ok_or_else(|| {
                TdsError::InvalidConfig(format!(
                    "node {} carries no shunt capacitance; the network form of the \
                     simulator needs every node on a capacitive shunt",
                    net.node_name(i)
                ))
            })?;
            c_inv.push(inv);
        }

        Ok(Self {
            n_nodes,
            c_inv,
            g_shunt,
            lines,
            line_offset,
            loads,
            load_offset,
            te_node: net.thevenin.node,
            te_r,
            te_l_inv: 1.0 / te_l,
            te_offset,
            source,
            resources,
            n_states: offset,
        })
    }

    fn init_state(&self, x: &mut [f64]) {
        x.fill(0.0);
        // Warm-start the node voltages at the source waveform value.
        for n in 0..self.n_nodes {
            for p in 0..3 {
                x[3 * n + p] = self.source.at(0.0, p);
            }
        }
        for r in &self.resources {
            let n = r.dynamics.n_states();
            r.dynamics.init_state(&mut x[r.offset..r.offset + n]);
        }
    }

    /// Evaluate the state derivative; `dv` receives the node-voltage
    /// derivatives (reused by the caller for sampling).
    fn eval(&self, t: f64, x: &[f64], inj: &mut [f64], dv: &mut [f64], dx: &mut [f64]) {
        inj.fill(0.0);
        for (li, line) in self.lines.iter().enumerate() {
            let o = self.line_offset + 3 * li;
            for p in 0..3 {
                let i = x[o + p];
                inj[3 * line.from + p] -= i;
                inj[3 * line.to + p] += i;
            }
        }
        for (li, load) in self.loads.iter().enumerate() {
            let o = self.load_offset + 3 * li;
            for p in 0..3 {
                inj[3 * load.node + p] -= x[o + p];
            }
        }
        for p in 0..3 {
            inj[3 * self.te_node + p] += x[self.te_offset + p];
        }
        for r in &self.resources {
            let n = r.dynamics.n_states();
            let pc = r.dynamics.port_current(&x[r.offset..r.offset + n]);
            for p in 0..3 {
                inj[3 * r.node + p] += pc[p];
            }
        }

        for n in 0..self.n_nodes {
            let g = self.g_shunt[n];
            let rhs = nalgebra::Vector3::new(
                inj[3 * n] - g * x[3 * n],
                inj[3 * n + 1] - g * x[3 * n + 1],
                inj[3 * n + 2] - g * x[3 * n + 2],
            );
            let d = self.c_inv[n] * rhs;
            dv[3 * n] = d[0];
            dv[3 * n + 1] = d[1];
            dv[3 * n + 2] = d[2];
            dx[3 * n] = d[0];
            dx[3 * n + 1] = d[1];
            dx[3 * n + 2] = d[2];
        }

        for (li, line) in self.lines.iter().enumerate() {
            let o = self.line_offset + 3 * li;
            let i = nalgebra::Vector3::new(x[o], x[o + 1], x[o + 2]);
            let vf = nalgebra::Vector3::new(
                x[3 * line.from],
                x[3 * line.from + 1],
                x[3 * line.from + 2],
            );
            let vt =
                nalgebra::Vector3::new(x[3 * line.to], x[3 * line.to + 1], x[3 * line.to + 2]);
            let d = line.l_inv * (vf - vt - line.r * i);
            dx[o] = d[0];
            dx[o + 1] = d[1];
            dx[o + 2] = d[2];
        }

        for (li, load) in self.loads.iter().enumerate() {
            let o = self.load_offset + 3 * li;
            for p in 0..3 {
                dx[o + p] = match load.phases[p] {
                    Some((r, l)) => (x[3 * load.node + p] - r * x[o + p]) / l,
                    None => 0.0,
                };
            }
        }

        for p in 0..3 {
            let v_src = self.source.at(t, p);
            let i = x[self.te_offset + p];
            dx[self.te_offset + p] =
                self.te_l_inv * (v_src - x[3 * self.te_node + p] - self.te_r * i);
        }

        for r in &self.resources {
            let n = r.dynamics.n_states();
            let v_port = [x[3 * r.node], x[3 * r.node + 1], x[3 * r.node + 2]];
            let dv_port = [dv[3 * r.node], dv[3 * r.node + 1], dv[3 * r.node + 2]];
            r.dynamics.derivatives(
                t,
                &x[r.offset..r.offset + n],
                &v_port,
                &dv_port,
                &mut dx[r.offset..r.offset + n],
            );
        }
    }

    fn port_sample(&self, ri: usize, t: f64, x: &[f64], dv: &[f64]) -> ([f64; 3], [f64; 3]) {
        let r = &self.resources[ri];
        let n = r.dynamics.n_states();
        let v_port = [x[3 * r.node], x[3 * r.node + 1], x[3 * r.node + 2]];
        let dv_port = [dv[3 * r.node], dv[3 * r.node + 1], dv[3 * r.node + 2]];
        r.dynamics
            .port_records(t, &x[r.offset..r.offset + n], &v_port, &dv_port)
    }
}

/// Following resource coupled directly to the stiff source: the source
/// branch is merged into the resource's grid-side inductor, so the
/// resource states are the only states.
struct StiffSourceEngine {
    source: SourceWave,
    dynamics: Box<dyn ResourceDynamics>,
    node: usize,
    n_states: usize,
}

impl StiffSourceEngine {
    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let v_src = [
            self.source.at(t, 0),
            self.source.at(t, 1),
            self.source.at(t, 2),
        ];
        self.dynamics.derivatives(t, x, &v_src, &[0.0; 3], dx);
    }

    fn port_sample(&self, t: f64, x: &[f64]) -> ([f64; 3], [f64; 3]) {
        let v_src = [
            self.source.at(t, 0),
            self.source.at(t, 1),
            self.source.at(t, 2),
        ];
        self.dynamics.port_records(t, x, &v_src, &[0.0; 3])
    }
}

enum Engine {
    Network(NetworkEngine),
    Stiff(StiffSourceEngine),
}

impl Engine {
    fn n_states(&self) -> usize {
        match self {
            Engine::Network(e) => e.n_states,
            Engine::Stiff(e) => e.n_states,
        }
    }

    fn n_ports(&self) -> usize {
        match self {
            Engine::Network(e) => e.resources.len(),
            Engine::Stiff(_) => 1,
        }
    }

    fn port_node(&self, p: usize) -> usize {
        match self {
            Engine::Network(e) => e.resources[p].node,
            Engine::Stiff(e) => {
                debug_assert_eq!(p, 0);
                e.node
            }
        }
    }

    fn init_state(&self, x: &mut [f64]) {
        match self {
            Engine::Network(e) => e.init_state(x),
            Engine::Stiff(e) => e.dynamics.init_state(x),
        }
    }

    fn eval(&self, t: f64, x: &[f64], inj: &mut [f64], dv: &mut [f64], dx: &mut [f64]) {
        match self {
            Engine::Network(e) => e.eval(t, x, inj, dv, dx),
            Engine::Stiff(e) => e.eval(t, x, dx),
        }
    }

    fn port_sample(&self, p: usize, t: f64, x: &[f64], dv: &[f64]) -> ([f64; 3], [f64; 3]) {
        match self {
            Engine::Network(e) => e.port_sample(p, t, x, dv),
            Engine::Stiff(e) => e.port_sample(t, x),
        }
    }

    fn synchronizes(&self, p: usize) -> bool {
        match self {
            Engine::Network(e) => e.resources[p].dynamics.synchronizes(),
            Engine::Stiff(e) => e.dynamics.synchronizes(),
        }
    }

    fn update_sync(&mut self, p: usize, pos: Complex64) -> f64 {
        match self {
            Engine::Network(e) => e.resources[p].dynamics.update_sync(pos),
            Engine::Stiff(e) => e.dynamics.update_sync(pos),
        }
    }

    fn set_exact_reference(&mut self, exact: bool) {
        match self {
            Engine::Network(e) => {
                for r in &mut e.resources {
                    r.dynamics.set_exact_reference(exact);
                }
            }
            Engine::Stiff(e) => e.dynamics.set_exact_reference(exact),
        }
    }

}

/// Simulate the averaged model of the network with its resources until
/// steady state (or `t_end`), then record a trailing window of fundamental
/// periods for spectrum extraction.
///
/// Single-resource setups without lines couple the resource directly to
/// the stiff source; everything else runs through the full network model.
pub fn simulate(
    net: &NetworkSpec,
    registry: &ResourceRegistry,
    sp: SpectralParams,
    cfg: &TdsConfig,
) -> Result<TdsResult, TdsError> {
    let steps_per_cycle = cfg.validate(sp)?;
    let dt = cfg.dt;

    let stiff_single = net.lines.is_empty()
        && net.loads.is_empty()
        && net.resources.len() == 1
        && net.resources[0].node == net.thevenin.node
        && net.resources[0].spec.kind == CiderKind::Following;

    let mut engine = if stiff_single {
        let r = &net.resources[0];
        let z_b = net.base.z_base_ohm();
        let (te_r, te_x) = net.thevenin.rx_ohm();
        let ext = (te_x / (sp.omega1() * z_b), te_r / z_b);
        let model = registry.build(&r.spec, &net.base)?;
        let dynamics = model.dynamics(sp.f1_hz(), Some(ext))?;
        let v_te = thevenin_source_spectrum(&net.thevenin, sp, net.base.v_base_v)?;
        let n_states = dynamics.n_states();
        Engine::Stiff(StiffSourceEngine {
            source: SourceWave::from_spectrum(&v_te),
            dynamics,
            node: r.node,
            n_states,
        })
    } else {
        Engine::Network(NetworkEngine::build(net, registry, sp)?)
    };

    engine.set_exact_reference(cfg.exact_reference);
    let n = engine.n_states();
    let n_ports = engine.n_ports();
    let mut x = vec![0.0; n];
    engine.init_state(&mut x);

    let mut inj = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut xt = vec![0.0; n];

    // Recording stride: aim for ~2 us sampling, constrained to divide the
    // cycle exactly.
    let mut stride = ((2e-6 / dt).round() as usize).max(1);
    while steps_per_cycle % stride != 0 {
        stride -= 1;
    }
    let dt_rec = stride as f64 * dt;
    let rec_per_window = steps_per_cycle / stride * cfg.window_periods as usize;

    let n_channels = 6 * n_ports;
    let mut rms_prev: Option<Vec<f64>> = None;
    let mut rms_acc = vec![0.0; n_channels];
    let mut lock_acc = vec![[Complex64::ZERO; 3]; n_ports];
    let max_cycles = (cfg.t_end / sp.period()).ceil() as usize;

    let mut port_v: Vec<[Vec<f64>; 3]> = (0..n_ports).map(|_| Default::default()).collect();
    let mut port_i: Vec<[Vec<f64>; 3]> = (0..n_ports).map(|_| Default::default()).collect();
    let mut states_rec: Option<Vec<Vec<f64>>> = cfg.record_states.then(Vec::new);

    let mut t_steady = 0.0;
    let mut reached_steady = false;
    let mut in_window = false;
    let mut window_cycles_done = 0u32;
    let mut global_step = 0usize;
    let mut window_wall = Duration::ZERO;

    'cycles: for cycle in 0..max_cycles + cfg.window_periods as usize + 1 {
        rms_acc.fill(0.0);
        for acc in lock_acc.iter_mut() {
            *acc = [Complex64::ZERO; 3];
        }
        let cycle_wall_start = Instant::now();
        for step in 0..steps_per_cycle {
            let t = global_step as f64 * dt;
            engine.eval(t, &x, &mut inj, &mut dv, &mut k1);

            // Sampling hooks on the exact grid point.
            let e_neg = Complex64::from_polar(1.0, -sp.omega1() * t);
            for p in 0..n_ports {
                let (v_term, i_term) = engine.port_sample(p, t, &x, &dv);
                for ph in 0..3 {
                    rms_acc[6 * p + ph] += v_term[ph] * v_term[ph];
                    rms_acc[6 * p + 3 + ph] += i_term[ph] * i_term[ph];
                    lock_acc[p][ph] += e_neg * v_term[ph];
                }
                if in_window && step % stride == 0 {
                    for ph in 0..3 {
                        port_v[p][ph].push(v_term[ph]);
                        port_i[p][ph].push(i_term[ph]);
                    }
                }
            }
            if in_window && step % stride == 0 {
                if let Some(rec) = states_rec.as_mut() {
                    rec.push(x.clone());
                }
            }

            // Classic fourth-order step.
            let h2 = 0.5 * dt;
            for i in 0..n {
                xt[i] = x[i] + h2 * k1[i];
            }
            engine.eval(t + h2, &xt, &mut inj, &mut dv, &mut k2);
            for i in 0..n {
                xt[i] = x[i] + h2 * k2[i];
            }
            engine.eval(t + h2, &xt, &mut inj, &mut dv, &mut k3);
            for i in 0..n {
                xt[i] = x[i] + dt * k3[i];
            }
            engine.eval(t + dt, &xt, &mut inj, &mut dv, &mut k4);
            let h6 = dt / 6.0;
            for i in 0..n {
                x[i] += h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            global_step += 1;
        }
        if in_window {
            window_wall += cycle_wall_start.elapsed();
        }
        let t_now = global_step as f64 * dt;

        let worst = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !worst.is_finite() || worst > 1e7 {
            return Err(TdsError::Unstable {
                t: t_now,
                norm: worst,
            });
        }

        if in_window {
            window_cycles_done += 1;
            if window_cycles_done >= cfg.window_periods {
                break 'cycles;
            }
            continue;
        }

        // Synchronization update: lock each synchronized resource to the
        // fundamental positive-sequence phasor of its terminal voltage.
        let mut locks_settled = true;
        for p in 0..n_ports {
            if engine.synchronizes(p) {
                let phasors = lock_acc[p].map(|a| a / steps_per_cycle as f64);
                let (pos, _, _) = sequence_decompose(phasors);
                let change = engine.update_sync(p, pos);
                if !(change <= 1e-9) {
                    locks_settled = false;
                }
            }
        }

        // Cycle-to-cycle RMS change.
        let rms: Vec<f64> = rms_acc
            .iter()
            .map(|s| (s / steps_per_cycle as f64).sqrt())
            .collect();
        let mut rms_settled = false;
        let mut worst_change = f64::INFINITY;
        if let Some(prev) = &rms_prev {
            worst_change = rms
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).abs() / a.max(1e-6))
                .fold(0.0, f64::max);
            rms_settled = worst_change <= cfg.steady_tol;
        }
        rms_prev = Some(rms);
        if cfg.trace {
            eprintln!(
                "cycle {cycle:4}  t={t_now:.3}  rms change {worst_change:.3e}  locks settled {locks_settled}"
            );
        }

        let steady = rms_settled && locks_settled && t_now >= cfg.min_time;
        if steady || cycle + 1 >= max_cycles {
            reached_steady = steady;
            t_steady = t_now;
            in_window = true;
            for p in 0..n_ports {
                for ph in 0..3 {
                    port_v[p][ph].reserve(rec_per_window);
                    port_i[p][ph].reserve(rec_per_window);
                }
            }
        }
    }

    let ports = (0..n_ports)
        .map(|p| PortWaveforms {
            node: engine.port_node(p),
            node_name: net.node_name(engine.port_node(p)).to_string(),
            v: std::mem::take(&mut port_v[p]),
            i: std::mem::take(&mut port_i[p]),
        })
        .collect();

    Ok(TdsResult {
        sp,
        dt_rec,
        window_periods: cfg.window_periods,
        ports,
        t_steady,
        reached_steady,
        window_wall,
        states: states_rec,
    })
}
