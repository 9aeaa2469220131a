use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::resources::PortRole;
use crate::spectral::{PolyphaseSpectrum, SpectralParams};

use super::{line_pi_section, load_admittance, thevenin_source_spectrum, NetworkError, NetworkSpec};

/// Exact port-level reduction of the network at one harmonic order:
/// `V_P = Z * I_P + V_open`, with `I_P` the currents injected into the
/// ports by the resources (per-unit; ports ordered voltage-driven first).
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    pub h: i32,
    pub z: DMatrix<Complex64>,
    pub v_open: DVector<Complex64>,
}

/// Hybrid relation at one order: injected currents at voltage-driven
/// (following) ports and terminal voltages at current-driven (forming)
/// ports, as affine functions of the complementary port variables.
#[derive(Debug, Clone)]
pub struct HybridAtOrder {
    pub i_from_v: DMatrix<Complex64>,
    pub i_from_i: DMatrix<Complex64>,
    pub i_const: DVector<Complex64>,
    pub v_from_v: DMatrix<Complex64>,
    pub v_from_i: DMatrix<Complex64>,
    pub v_const: DVector<Complex64>,
}

/// Per-harmonic hybrid port model of a network, reduced by exact
/// elimination of every non-port node. Orders `1..=h_max` are stored;
/// negative orders follow by conjugation and the DC order carries no
/// source, so its solution is identically zero.
pub struct HybridPortModel {
    sp: SpectralParams,
    pub follow_nodes: Vec<usize>,
    pub form_nodes: Vec<usize>,
    reduced: Vec<ReducedNetwork>,
    hybrid: Vec<HybridAtOrder>,
}

/// Assemble the full nodal admittance matrix and source injection vector
/// at order `h`, in per-unit (3 phases per node).
pub fn assemble_nodal(
    net: &NetworkSpec,
    sp: SpectralParams,
    h: i32,
) -> Result<(DMatrix<Complex64>, DVector<Complex64>), NetworkError> {
    let n = net.n_nodes();
    let z_b = Complex64::new(net.base.z_base_ohm(), 0.0);
    let mut y = DMatrix::zeros(3 * n, 3 * n);
    let mut j = DVector::zeros(3 * n);

    let mut stamp = |a: usize, b: usize, block: &nalgebra::Matrix3<Complex64>, sign: f64| {
        for r in 0..3 {
            for c in 0..3 {
                y[(3 * a + r, 3 * b + c)] += block[(r, c)] * Complex64::new(sign, 0.0);
            }
        }
    };

    for line in &net.lines {
        let (ys, ysh) = line_pi_section(line, sp, h)?;
        let ys = ys.map(|v| v * z_b);
        let ysh = ysh.map(|v| v * z_b);
        stamp(line.from, line.from, &ys, 1.0);
        stamp(line.to, line.to, &ys, 1.0);
        stamp(line.from, line.to, &ys, -1.0);
        stamp(line.to, line.from, &ys, -1.0);
        stamp(line.from, line.from, &ysh, 1.0);
        stamp(line.to, line.to, &ysh, 1.0);
    }
    for load in &net.loads {
        let yl = load_admittance(load, net.base.v_base_v, sp, h)?;
        let yl = yl.map(|v| v * z_b);
        stamp(load.node, load.node, &yl, 1.0);
    }

    // Source: admittance of the short-circuit branch plus its current
    // injection (the stiff voltage behind it, converted to a Norton form).
    let (r_ohm, x1_ohm) = net.thevenin.rx_ohm();
    let z_h = Complex64::new(r_ohm, h as f64 * x1_ohm) / z_b;
    let y_sc = z_h.inv();
    let te_node = net.thevenin.node;
    for k in 0..3 {
        y[(3 * te_node + k, 3 * te_node + k)] += y_sc;
    }
    if h != 0 {
        let v_te = thevenin_source_spectrum(&net.thevenin, sp, net.base.v_base_v)?;
        let v_h = v_te.at_order(h);
        for k in 0..3 {
            j[3 * te_node + k] = y_sc * v_h[k];
        }
    }
    Ok((y, j))
}

/// Port node lists in model order: voltage-driven (following) ports first,
/// then current-driven (forming) ports.
pub fn port_partition(net: &NetworkSpec) -> (Vec<usize>, Vec<usize>) {
    let mut follow = Vec::new();
    let mut form = Vec::new();
    for r in &net.resources {
        match r.spec.kind {
            crate::resources::CiderKind::Following => follow.push(r.node),
            crate::resources::CiderKind::Forming => form.push(r.node),
        }
    }
    (follow, form)
}

fn reduce_at_order(
    net: &NetworkSpec,
    sp: SpectralParams,
    h: i32,
    ports: &[usize],
) -> Result<ReducedNetwork, NetworkError> {
    let (y, j) = assemble_nodal(net, sp, h)?;
    let n = net.n_nodes();
    let port_rows: Vec<usize> = ports.iter().flat_map(|&p| 3 * p..3 * p + 3).collect();
    let inner_rows: Vec<usize> = (0..n)
        .filter(|i| !ports.contains(i))
        .flat_map(|p| 3 * p..3 * p + 3)
        .collect();
    let np = port_rows.len();
    let nq = inner_rows.len();

    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| y[(rows[r], cols[c])])
    };
    let y_pp = pick(&port_rows, &port_rows);
    let j_p = DVector::from_fn(np, |r, _| j[port_rows[r]]);

    let (y_red, rhs) = if nq == 0 {
        (y_pp, j_p)
    } else {
        let y_pq = pick(&port_rows, &inner_rows);
        let y_qp = pick(&inner_rows, &port_rows);
        let y_qq = pick(&inner_rows, &inner_rows);
        let j_q = DVector::from_fn(nq, |r, _| j[inner_rows[r]]);
        let lu = y_qq.lu();
        let x = lu.solve(&y_qp).ok_or_else(|| NetworkError::Singular {
            order: h,
            detail: "interior nodal block not invertible".into(),
        })?;
        let w = lu.solve(&j_q).ok_or_else(|| NetworkError::Singular {
            order: h,
            detail: "interior nodal block not invertible".into(),
        })?;
        (&y_pp - &y_pq * x, j_p - y_pq * w)
    };

    let z = y_red.lu().try_inverse().ok_or_else(|| NetworkError::Singular {
        order: h,
        detail: "reduced port admittance not invertible".into(),
    })?;
    let v_open = &z * rhs;
    Ok(ReducedNetwork { h, z, v_open })
}

/// Build the hybrid port model over all positive orders of `sp`.
pub fn build_hybrid_port_model(
    net: &NetworkSpec,
    sp: SpectralParams,
) -> Result<HybridPortModel, NetworkError> {
    net.validate()?;
    let (follow_nodes, form_nodes) = port_partition(net);
    let ports: Vec<usize> = follow_nodes
        .iter()
        .chain(form_nodes.iter())
        .copied()
        .collect();
    if ports.is_empty() {
        return Err(NetworkError::Topology(
            "network has no resource ports".into(),
        ));
    }
    {
        let mut sorted = ports.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ports.len() {
            return Err(NetworkError::Topology(
                "multiple resources attached to one node".into(),
            ));
        }
    }

    let nf = 3 * follow_nodes.len();
    let mut reduced = Vec::new();
    let mut hybrid = Vec::new();
    for h in 1..=sp.h_max() as i32 {
        let red = reduce_at_order(net, sp, h, &ports)?;
        let np = red.z.nrows();
        let ng = np - nf;
        let z_ff = red.z.view((0, 0), (nf, nf)).into_owned();
        let z_fg = red.z.view((0, nf), (nf, ng)).into_owned();
        let z_gf = red.z.view((nf, 0), (ng, nf)).into_owned();
        let z_gg = red.z.view((nf, nf), (ng, ng)).into_owned();
        let v0_f = red.v_open.rows(0, nf).into_owned();
        let v0_g = red.v_open.rows(nf, ng).into_owned();

        let (i_from_v, i_from_i, i_const) = if nf > 0 {
            let h_ff = z_ff.lu().try_inverse().ok_or_else(|| NetworkError::Singular {
                order: h,
                detail: "voltage-driven port block not invertible".into(),
            })?;
            let i_from_i = -&h_ff * &z_fg;
            let i_const = -&h_ff * &v0_f;
            (h_ff, i_from_i, i_const)
        } else {
            (
                DMatrix::zeros(0, 0),
                DMatrix::zeros(0, ng),
                DVector::zeros(0),
            )
        };
        let v_from_v = &z_gf * &i_from_v;
        let v_from_i = &z_gg + &z_gf * &i_from_i;
        let v_const = &v0_g + &z_gf * &i_const;

        hybrid.push(HybridAtOrder {
            i_from_v,
            i_from_i,
            i_const,
            v_from_v,
            v_from_i,
            v_const,
        });
        reduced.push(red);
    }
    Ok(HybridPortModel {
        sp,
        follow_nodes,
        form_nodes,
        reduced,
        hybrid,
    })
}

impl HybridPortModel {
    pub fn params(&self) -> SpectralParams {
        self.sp
    }

    /// Port nodes in model order with their roles.
    pub fn ports(&self) -> Vec<(usize, PortRole)> {
        self.follow_nodes
            .iter()
            .map(|&n| (n, PortRole::CurrentInjector))
            .chain(self.form_nodes.iter().map(|&n| (n, PortRole::VoltageFormer)))
            .collect()
    }

    pub fn hybrid_at(&self, h: i32) -> &HybridAtOrder {
        assert!(h >= 1 && h <= self.sp.h_max() as i32);
        &self.hybrid[(h - 1) as usize]
    }

    pub fn reduced_at(&self, h: i32) -> &ReducedNetwork {
        assert!(h >= 1 && h <= self.sp.h_max() as i32);
        &self.reduced[(h - 1) as usize]
    }

    /// Grid-side response at one order: currents at the voltage-driven
    /// ports and voltages at the current-driven ports, given the stacked
    /// per-phase port variables.
    pub fn grid_side(
        &self,
        h: i32,
        v_follow: &DVector<Complex64>,
        i_form: &DVector<Complex64>,
    ) -> (DVector<Complex64>, DVector<Complex64>) {
        let hy = self.hybrid_at(h);
        let i_f = &hy.i_from_v * v_follow + &hy.i_from_i * i_form + &hy.i_const;
        let v_g = &hy.v_from_v * v_follow + &hy.v_from_i * i_form + &hy.v_const;
        (i_f, v_g)
    }

    /// Full-band grid response assembled into polyphase spectra per port
    /// (orders above zero from the stored blocks, negatives by conjugation).
    pub fn grid_spectra(
        &self,
        v_follow: &[PolyphaseSpectrum],
        i_form: &[PolyphaseSpectrum],
    ) -> (Vec<PolyphaseSpectrum>, Vec<PolyphaseSpectrum>) {
        let nf = self.follow_nodes.len();
        let ng = self.form_nodes.len();
        let mut i_out = vec![PolyphaseSpectrum::zero(self.sp); nf];
        let mut v_out = vec![PolyphaseSpectrum::zero(self.sp); ng];
        for h in 1..=self.sp.h_max() as i32 {
            let vf = stack_ports(v_follow, h);
            let ig = stack_ports(i_form, h);
            let (i_f, v_g) = self.grid_side(h, &vf, &ig);
            for (p, out) in i_out.iter_mut().enumerate() {
                out.set_order_pair(
                    h as u32,
                    [i_f[3 * p], i_f[3 * p + 1], i_f[3 * p + 2]],
                )
                .unwrap();
            }
            for (p, out) in v_out.iter_mut().enumerate() {
                out.set_order_pair(
                    h as u32,
                    [v_g[3 * p], v_g[3 * p + 1], v_g[3 * p + 2]],
                )
                .unwrap();
            }
        }
        (i_out, v_out)
    }
}

/// Node voltage spectra of the full network given the solved port-current
/// injections (one spectrum per port, model port order). Non-port nodes are
/// recovered by re-solving the unreduced nodal equations per order.
pub fn recover_node_spectra(
    net: &NetworkSpec,
    sp: SpectralParams,
    port_currents: &[PolyphaseSpectrum],
) -> Result<Vec<PolyphaseSpectrum>, NetworkError> {
    let (follow, form) = port_partition(net);
    let ports: Vec<usize> = follow.into_iter().chain(form).collect();
    assert_eq!(ports.len(), port_currents.len());
    let n = net.n_nodes();
    let mut out = vec![PolyphaseSpectrum::zero(sp); n];
    for h in 1..=sp.h_max() as i32 {
        let (y, mut j) = assemble_nodal(net, sp, h)?;
        for (pi, &node) in ports.iter().enumerate() {
            let inj = port_currents[pi].at_order(h);
            for k in 0..3 {
                j[3 * node + k] += inj[k];
            }
        }
        let v = y.lu().solve(&j).ok_or_else(|| NetworkError::Singular {
            order: h,
            detail: "full nodal solve failed".into(),
        })?;
        for (node, spec) in out.iter_mut().enumerate() {
            spec.set_order_pair(
                h as u32,
                [v[3 * node], v[3 * node + 1], v[3 * node + 2]],
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Per-load current spectra (per-unit, drawn from the node) given the node
/// voltage spectra.
pub fn load_current_spectra(
    net: &NetworkSpec,
    sp: SpectralParams,
    node_spectra: &[PolyphaseSpectrum],
) -> Result<Vec<PolyphaseSpectrum>, NetworkError> {
    let z_b = Complex64::new(net.base.z_base_ohm(), 0.0);
    net.loads
        .iter()
        .map(|load| {
            let mut out = PolyphaseSpectrum::zero(sp);
            for h in 1..=sp.h_max() as i32 {
                let y = load_admittance(load, net.base.v_base_v, sp, h)?;
                let v = node_spectra[load.node].at_order(h);
                let i = [
                    y[(0, 0)] * z_b * v[0],
                    y[(1, 1)] * z_b * v[1],
                    y[(2, 2)] * z_b * v[2],
                ];
                out.set_order_pair(h as u32, i).unwrap();
            }
            Ok(out)
        })
        .collect()
}

/// Source branch current spectrum (per-unit, injection into the source
/// node) given the node voltage spectra.
pub fn source_current_spectrum(
    net: &NetworkSpec,
    sp: SpectralParams,
    node_spectra: &[PolyphaseSpectrum],
) -> Result<PolyphaseSpectrum, NetworkError> {
    let z_b = net.base.z_base_ohm();
    let (r_ohm, x1_ohm) = net.thevenin.rx_ohm();
    let v_te = thevenin_source_spectrum(&net.thevenin, sp, net.base.v_base_v)?;
    let mut out = PolyphaseSpectrum::zero(sp);
    for h in 1..=sp.h_max() as i32 {
        let z_h = Complex64::new(r_ohm / z_b, h as f64 * x1_ohm / z_b);
        let vs = v_te.at_order(h);
        let vn = node_spectra[net.thevenin.node].at_order(h);
        let i = [
            (vs[0] - vn[0]) / z_h,
            (vs[1] - vn[1]) / z_h,
            (vs[2] - vn[2]) / z_h,
        ];
        out.set_order_pair(h as u32, i).unwrap();
    }
    Ok(out)
}

/// Stack the order-`h` coefficients of several port spectra into one vector.
pub fn stack_ports(ports: &[PolyphaseSpectrum], h: i32) -> DVector<Complex64> {
    let mut v = DVector::zeros(3 * ports.len());
    for (p, ps) in ports.iter().enumerate() {
        let x = ps.at_order(h);
        for k in 0..3 {
            v[3 * p + k] = x[k];
        }
    }
    v
}
