//! Synthesis of the embedded readout filter and its unit cells.
//!
//! The filter is a PCB patch whose fundamental drum-head mode acts as a
//! bandpass between the readout resonators and the output line. Here it is
//! reduced to a single parallel LC tank loaded by the output resistance
//! through a series stub inductance; the stub value is calibrated by root
//! finding until the simulated passband matches the requested bandwidth.
//! Builders assemble N-1 multiplexed unit cells (filter + resonator branches
//! + qubit branches), their filterless counterparts, and whole-board tilings.

use crate::analysis::{normalized_q_curve, passband_metrics};
use crate::eigen::BranchMap;
use crate::error::{Error, Result};
use crate::netlist::{FrequencyGrid, Netlist, NetlistBuilder};
use crate::scalar::{omega_from_hz, Scalar, C0};

/// Default unit-cell element values. Inductances are fixed design choices;
/// shunt capacitances are solved from the target mode frequencies and reduced
/// by the attached coupling capacitors so the loaded modes land on target.
pub mod defaults {
    /// Filter passband center, Hz.
    pub const FILTER_CENTER_HZ: f64 = 9.8e9;
    /// Filter passband width, Hz.
    pub const FILTER_BANDWIDTH_HZ: f64 = 0.9e9;
    /// Readout resonator inductance, henries.
    pub const RESONATOR_L: f64 = 1.8e-9;
    /// Qubit-mode inductance, henries.
    pub const QUBIT_L: f64 = 11.5e-9;
    /// Qubit mode frequency, Hz.
    pub const QUBIT_FREQ_HZ: f64 = 4.43e9;
    /// Resonator-to-filter coupling capacitance, farads.
    pub const RESONATOR_FILTER_C: f64 = 1.73e-15;
    /// Qubit-to-resonator coupling capacitance, farads.
    pub const QUBIT_RESONATOR_C: f64 = 3.9e-15;
    /// Direct (stray) qubit-to-filter capacitance, farads.
    pub const QUBIT_FILTER_C: f64 = 0.27e-15;
    /// Output line impedance, ohms.
    pub const OUTPUT_Z0: f64 = 50.0;
}

/// Triangular-patch sizing: outer side for a fundamental mode at `f_r`.
#[derive(Debug, Clone, Copy)]
pub struct PatchSpec<S> {
    /// Outer side of the patch, meters.
    pub side: S,
    /// Fundamental mode frequency, Hz.
    pub f_r: S,
    /// Substrate relative permittivity.
    pub eps_r: S,
    /// Dimensionless pre-factor absorbing the stub participation (~1/2).
    pub rho: S,
}

fn check_patch_inputs<S: Scalar>(f_or_a: S, eps_r: S, rho: S) -> Result<()> {
    if f_or_a <= S::zero() || eps_r <= S::zero() {
        return Err(Error::Domain("patch sizing needs positive inputs".into()));
    }
    if rho <= S::zero() || rho > S::one() {
        return Err(Error::Domain("patch pre-factor must lie in (0, 1]".into()));
    }
    Ok(())
}

/// Outer patch side (meters) resonating at `f_r_hz`: a = rho*2c/(3 f sqrt(eps)).
pub fn patch_side<S: Scalar>(f_r_hz: S, eps_r: S, rho: S) -> Result<S> {
    check_patch_inputs(f_r_hz, eps_r, rho)?;
    let c = S::of(C0);
    Ok(rho * S::of(2.0) * c / (S::of(3.0) * f_r_hz * eps_r.sqrt()))
}

/// Fundamental frequency (Hz) of a patch with outer side `a_m`; exact inverse
/// of [`patch_side`].
pub fn patch_frequency<S: Scalar>(a_m: S, eps_r: S, rho: S) -> Result<S> {
    check_patch_inputs(a_m, eps_r, rho)?;
    let c = S::of(C0);
    Ok(rho * S::of(2.0) * c / (S::of(3.0) * a_m * eps_r.sqrt()))
}

impl<S: Scalar> PatchSpec<S> {
    /// Size a patch for a given fundamental frequency.
    pub fn for_frequency(f_r_hz: S, eps_r: S, rho: S) -> Result<Self> {
        Ok(PatchSpec {
            side: patch_side(f_r_hz, eps_r, rho)?,
            f_r: f_r_hz,
            eps_r,
            rho,
        })
    }

    /// Self-consistency of the sizing relation: a*(3 f sqrt(eps)) = rho*2c.
    pub fn validate(&self) -> Result<()> {
        check_patch_inputs(self.f_r, self.eps_r, self.rho)?;
        let lhs = self.side * S::of(3.0) * self.f_r * self.eps_r.sqrt();
        let rhs = self.rho * S::of(2.0) * S::of(C0);
        if ((lhs - rhs) / rhs).abs() > S::of(1e-9) {
            return Err(Error::Domain(
                "patch spec is not self-consistent: side does not match frequency".into(),
            ));
        }
        Ok(())
    }
}

/// Lumped single-mode equivalent of the embedded filter: parallel tank
/// (`l_f`, `c_f`) loaded by the output resistance `r_f` through a series stub
/// inductance `l_stub`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams<S> {
    pub l_f: S,
    pub c_f: S,
    pub l_stub: S,
    /// Output-loading resistance (the line the stub taps into), ohms.
    pub r_f: S,
}

/// The filter tank with its stub and output termination, plus an optional
/// weakly coupled probe port for admittance measurements. The probe hangs off
/// the tank through a small capacitor — the same way the resonators do — so
/// the real part of its admittance traces the tank's resonant impedance.
pub fn build_standalone_filter<S: Scalar>(p: &FilterParams<S>, probe: bool) -> Netlist<S> {
    let mut b = Netlist::builder()
        .inductor("Lf", "filter", "gnd", p.l_f)
        .capacitor("Cf", "filter", "gnd", p.c_f)
        .inductor("Lstub", "filter", "out", p.l_stub)
        .port("readout", "out", "gnd", p.r_f);
    if probe {
        b = b
            .capacitor("Cprobe", "probe_node", "filter", S::of(1e-3) * p.c_f)
            .port("probe", "probe_node", "gnd", p.r_f);
    }
    b.build().expect("standalone filter netlist is well-formed")
}

/// Rebuild a netlist with a weakly coupled probe port hanging off `node`
/// through `c_probe` farads. Admittance seen from the probe traces the
/// resonant impedance at `node` while loading it only at O((c_probe/C)^2);
/// this is the measurement apparatus behind every passband curve here.
pub fn attach_probe<S: Scalar>(
    net: &Netlist<S>,
    node: &str,
    c_probe: S,
    z0: S,
) -> Result<Netlist<S>> {
    if net.node(node).is_none() {
        return Err(Error::UnknownNode(node.to_string()));
    }
    let ground = net.node_name(net.ground()).to_string();
    let mut b = Netlist::builder().ground(&ground);
    for name in net.nodes() {
        b = b.node(name);
    }
    for e in net.elements() {
        b = b.element(&e.label, e.kind, net.node_name(e.a), net.node_name(e.b));
    }
    for p in net.ports() {
        b = b.port(&p.label, net.node_name(p.a), net.node_name(p.b), p.z0);
    }
    b.capacitor("Cprobe", "probe_node", node, c_probe)
        .port("probe", "probe_node", &ground, z0)
        .build()
}

/// Measure the loaded passband Q of a filter candidate from its simulated
/// admittance curve.
fn measured_filter_q<S: Scalar>(p: &FilterParams<S>, f_center: S, bandwidth: S) -> Result<S> {
    let net = build_standalone_filter(p, true);
    let f_lo = (f_center - S::of(4.0) * bandwidth).max(S::of(0.05) * f_center);
    let f_hi = f_center + S::of(4.0) * bandwidth;
    let grid = FrequencyGrid::linspace_hz(f_lo, f_hi, 2001)?;
    let curve = normalized_q_curve(&net, "probe", &grid)?;
    let m = passband_metrics(&curve)?;
    m.q.ok_or_else(|| Error::NoPassband("passband edges run off the measurement grid".into()))
}

/// Calibrate the filter equivalent circuit to a target passband.
///
/// The tank impedance is fixed slightly below R/Q_target so that the bare
/// tank (stub shorted) underdamps the target; the stub inductance then raises
/// the loaded Q monotonically, and a bisection drives the simulated passband
/// Q from [`passband_metrics`] onto f_center/bandwidth. The bare tank always
/// satisfies 1/(2*pi*sqrt(L_f C_f)) = f_center exactly.
pub fn calibrate_filter<S: Scalar>(f_center_hz: S, bandwidth_hz: S) -> Result<FilterParams<S>> {
    if f_center_hz <= S::zero() || bandwidth_hz <= S::zero() || bandwidth_hz >= f_center_hz {
        return Err(Error::Domain(
            "calibration needs 0 < bandwidth < center frequency".into(),
        ));
    }
    let r0 = S::of(defaults::OUTPUT_Z0);
    let q_target = f_center_hz / bandwidth_hz;
    let omega_c = omega_from_hz(f_center_hz);
    // tank impedance margin: keeps the stub-shorted Q strictly below target
    let margin = S::of(1.01);
    let z_tank = margin * r0 / q_target;
    let c_f = S::one() / (omega_c * z_tank);
    let l_f = z_tank / omega_c;

    let q_of = |l_stub: S| -> Result<S> {
        let p = FilterParams {
            l_f,
            c_f,
            l_stub,
            r_f: r0,
        };
        measured_filter_q(&p, f_center_hz, bandwidth_hz)
    };

    let hi0 = S::of(2.0) * r0 / omega_c;
    // lower bracket: a stub so small it leaves the loading unchanged, but
    // still a representable element
    let mut lo = S::of(1e-9) * hi0;
    let mut hi = hi0;
    let fail = |message: String, achieved: Option<S>| Error::Calibration {
        message,
        achieved: achieved.map(|q| q.to_f64_lossy()),
    };
    let q_lo = q_of(lo).map_err(|e| fail(format!("passband measurement failed: {e}"), None))?;
    let q_hi = q_of(hi).map_err(|e| fail(format!("passband measurement failed: {e}"), None))?;
    if q_lo > q_target || q_hi < q_target {
        return Err(fail(
            format!(
                "target Q {:.3} outside attainable range [{:.3}, {:.3}]",
                q_target.to_f64_lossy(),
                q_lo.to_f64_lossy(),
                q_hi.to_f64_lossy()
            ),
            Some(q_lo),
        ));
    }
    let tol = S::of(1e-6) * q_target;
    let mut achieved = q_lo;
    for _ in 0..80 {
        let mid = (lo + hi) / S::of(2.0);
        achieved = q_of(mid).map_err(|e| fail(format!("passband measurement failed: {e}"), None))?;
        if (achieved - q_target).abs() <= tol {
            return Ok(FilterParams {
                l_f,
                c_f,
                l_stub: mid,
                r_f: r0,
            });
        }
        if achieved < q_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = (lo + hi) / S::of(2.0);
    if (achieved - q_target).abs() <= S::of(5e-3) * q_target {
        return Ok(FilterParams {
            l_f,
            c_f,
            l_stub: mid,
            r_f: r0,
        });
    }
    Err(fail(
        format!(
            "bisection did not converge: achieved Q {:.4} vs target {:.4}",
            achieved.to_f64_lossy(),
            q_target.to_f64_lossy()
        ),
        Some(achieved),
    ))
}

/// One readout resonator branch: shunt C and L at its node, coupled to the
/// filter node through `c_to_filter`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorBranch<S> {
    pub c: S,
    pub l: S,
    pub c_to_filter: S,
}

/// One qubit branch: shunt C and L, coupled to its resonator through
/// `c_to_resonator` and (optionally) straight to the filter node through a
/// small stray capacitance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitBranch<S> {
    pub c: S,
    pub l: S,
    pub c_to_resonator: S,
    pub c_to_filter: Option<S>,
}

/// A complete N-1 multiplexed readout unit cell.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCellSpec<S> {
    pub filter: FilterParams<S>,
    pub resonators: Vec<ResonatorBranch<S>>,
    /// Qubit k couples to resonator k; at most one per resonator.
    pub qubits: Vec<QubitBranch<S>>,
    pub output_z0: S,
}

/// Evenly staggered values across `span` centered on `center`.
fn staggered<S: Scalar>(center: S, span: S, n: usize, k: usize) -> S {
    if n <= 1 {
        center
    } else {
        let t = S::of(k as f64) / S::of((n - 1) as f64) - S::of(0.5);
        center + span * t
    }
}

/// Shunt capacitance that puts an LC branch at `f_hz` once `loading` farads
/// of attached coupling capacitance are accounted for.
fn shunt_c_for<S: Scalar>(f_hz: S, l: S, loading: S) -> Result<S> {
    let omega = omega_from_hz(f_hz);
    let total = S::one() / (omega * omega * l);
    let c = total - loading;
    if c <= S::zero() {
        return Err(Error::Domain(format!(
            "coupling capacitance {:.3e} F exceeds the total branch capacitance at {:.3e} Hz",
            loading.to_f64_lossy(),
            f_hz.to_f64_lossy()
        )));
    }
    Ok(c)
}

impl<S: Scalar> UnitCellSpec<S> {
    /// Default full-scale cell: calibrated 9.8 GHz / 0.9 GHz filter,
    /// resonators staggered across the passband, qubits near 4.43 GHz.
    pub fn calibrated(n_resonators: usize, n_qubits: usize) -> Result<Self> {
        Self::calibrated_for(
            S::of(defaults::FILTER_CENTER_HZ),
            S::of(defaults::FILTER_BANDWIDTH_HZ),
            n_resonators,
            n_qubits,
        )
    }

    /// A cell calibrated to a custom passband: the filter is tuned to the
    /// given center and bandwidth and the resonators staggered across it.
    pub fn calibrated_for(
        f_center_hz: S,
        bandwidth_hz: S,
        n_resonators: usize,
        n_qubits: usize,
    ) -> Result<Self> {
        let filter = calibrate_filter(f_center_hz, bandwidth_hz)?;
        Self::assembled(filter, f_center_hz, bandwidth_hz, n_resonators, n_qubits)
    }

    /// Default passband targets, reusing an already-calibrated filter.
    pub fn calibrated_with(
        filter: FilterParams<S>,
        n_resonators: usize,
        n_qubits: usize,
    ) -> Result<Self> {
        Self::assembled(
            filter,
            S::of(defaults::FILTER_CENTER_HZ),
            S::of(defaults::FILTER_BANDWIDTH_HZ),
            n_resonators,
            n_qubits,
        )
    }

    fn assembled(
        filter: FilterParams<S>,
        f_center_hz: S,
        bandwidth_hz: S,
        n_resonators: usize,
        n_qubits: usize,
    ) -> Result<Self> {
        let cc = S::of(defaults::RESONATOR_FILTER_C);
        let c_qr = S::of(defaults::QUBIT_RESONATOR_C);
        let c_qf = S::of(defaults::QUBIT_FILTER_C);
        let mut resonators = Vec::with_capacity(n_resonators);
        for k in 0..n_resonators {
            let f = staggered(f_center_hz, bandwidth_hz, n_resonators, k);
            let loading = if k < n_qubits { cc + c_qr } else { cc };
            resonators.push(ResonatorBranch {
                c: shunt_c_for(f, S::of(defaults::RESONATOR_L), loading)?,
                l: S::of(defaults::RESONATOR_L),
                c_to_filter: cc,
            });
        }
        let mut qubits = Vec::with_capacity(n_qubits);
        for k in 0..n_qubits {
            let f = staggered(S::of(defaults::QUBIT_FREQ_HZ), S::of(0.2e9), n_qubits, k);
            qubits.push(QubitBranch {
                c: shunt_c_for(f, S::of(defaults::QUBIT_L), c_qr + c_qf)?,
                l: S::of(defaults::QUBIT_L),
                c_to_resonator: c_qr,
                c_to_filter: Some(c_qf),
            });
        }
        let spec = UnitCellSpec {
            filter,
            resonators,
            qubits,
            output_z0: S::of(defaults::OUTPUT_Z0),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.resonators.len();
        if n == 0 || n > 9 {
            return Err(Error::Domain(format!(
                "unit cell multiplexes 1 to 9 resonators, got {n}"
            )));
        }
        if self.qubits.len() > n {
            return Err(Error::Domain(
                "at most one qubit per resonator branch".into(),
            ));
        }
        let filter_vals = [self.filter.l_f, self.filter.c_f, self.filter.r_f];
        if filter_vals.iter().any(|&v| v <= S::zero()) || self.filter.l_stub < S::zero() {
            return Err(Error::Domain("filter element values must be positive".into()));
        }
        for (k, r) in self.resonators.iter().enumerate() {
            if r.c <= S::zero() || r.l <= S::zero() || r.c_to_filter <= S::zero() {
                return Err(Error::Domain(format!(
                    "resonator branch {} has non-positive element values",
                    k + 1
                )));
            }
        }
        for (k, q) in self.qubits.iter().enumerate() {
            let bad = q.c <= S::zero()
                || q.l <= S::zero()
                || q.c_to_resonator <= S::zero()
                || q.c_to_filter.is_some_and(|c| c <= S::zero());
            if bad {
                return Err(Error::Domain(format!(
                    "qubit branch {} has non-positive element values",
                    k + 1
                )));
            }
        }
        if self.output_z0 <= S::zero() {
            return Err(Error::Domain("output impedance must be positive".into()));
        }
        Ok(())
    }
}

/// Inductance that places qubit branch `k` (0-based) at `f_hz`, accounting
/// for its fixed capacitive loading. Used to build qubit-frequency sweeps.
pub fn qubit_inductance_for<S: Scalar>(
    spec: &UnitCellSpec<S>,
    k: usize,
    f_hz: S,
) -> Result<S> {
    let q = spec
        .qubits
        .get(k)
        .ok_or_else(|| Error::Domain(format!("cell has no qubit branch {}", k + 1)))?;
    if f_hz <= S::zero() {
        return Err(Error::Domain("qubit frequency must be positive".into()));
    }
    let c_total = q.c + q.c_to_resonator + q.c_to_filter.unwrap_or_else(S::zero);
    let omega = omega_from_hz(f_hz);
    Ok(S::one() / (omega * omega * c_total))
}

fn add_qubit_branch<S: Scalar>(
    mut b: NetlistBuilder<S>,
    k: usize,
    q: &QubitBranch<S>,
    filter_node: Option<&str>,
) -> NetlistBuilder<S> {
    let i = k + 1;
    let node = format!("qb{i}");
    b = b
        .capacitor(&format!("Cqb{i}"), &node, "gnd", q.c)
        .inductor(&format!("Lqb{i}"), &node, "gnd", q.l)
        .capacitor(&format!("Cqr{i}"), &format!("res{i}"), &node, q.c_to_resonator);
    if let (Some(cqf), Some(fnode)) = (q.c_to_filter, filter_node) {
        b = b.capacitor(&format!("Cqf{i}"), &node, fnode, cqf);
    }
    b
}

/// Assemble the unit-cell netlist: filter tank at node `filter`, stub to the
/// output port `readout`, resonator branches at `res{k}` coupled to the
/// filter, qubit branches at `qb{k}` coupled to their resonators.
pub fn build_unit_cell<S: Scalar>(spec: &UnitCellSpec<S>) -> Result<Netlist<S>> {
    spec.validate()?;
    let mut b = Netlist::builder()
        .inductor("Lf", "filter", "gnd", spec.filter.l_f)
        .capacitor("Cf", "filter", "gnd", spec.filter.c_f)
        .inductor("Lstub", "filter", "out", spec.filter.l_stub)
        .port("readout", "out", "gnd", spec.output_z0);
    for (k, r) in spec.resonators.iter().enumerate() {
        let i = k + 1;
        let node = format!("res{i}");
        b = b
            .capacitor(&format!("Cres{i}"), &node, "gnd", r.c)
            .inductor(&format!("Lres{i}"), &node, "gnd", r.l)
            .capacitor(&format!("Cc{i}"), "filter", &node, r.c_to_filter);
    }
    for (k, q) in spec.qubits.iter().enumerate() {
        b = add_qubit_branch(b, k, q, Some("filter"));
    }
    b.build()
}

/// The same cell with the filter removed: every resonator's output coupler
/// runs straight into its own matched termination, as when the embedding
/// package is replaced by plain impedance boundaries. A qubit's stray filter
/// capacitance follows its resonator's boundary node.
pub fn build_no_filter_variant<S: Scalar>(spec: &UnitCellSpec<S>) -> Result<Netlist<S>> {
    spec.validate()?;
    let mut b = Netlist::builder();
    for (k, r) in spec.resonators.iter().enumerate() {
        let i = k + 1;
        let node = format!("res{i}");
        let out = format!("out{i}");
        b = b
            .capacitor(&format!("Cres{i}"), &node, "gnd", r.c)
            .inductor(&format!("Lres{i}"), &node, "gnd", r.l)
            .capacitor(&format!("Cc{i}"), &out, &node, r.c_to_filter)
            .port(&format!("readout{i}"), &out, "gnd", spec.output_z0);
    }
    for (k, q) in spec.qubits.iter().enumerate() {
        let out = format!("out{}", k + 1);
        b = add_qubit_branch(b, k, q, Some(&out));
    }
    b.build()
}

/// Subsystem assignment for the cell's element labels: coupling capacitors
/// belong to the subsystem they hang off (resonator couplers to the
/// resonator, qubit couplers to the qubit).
pub fn branch_map<S: Scalar>(spec: &UnitCellSpec<S>) -> BranchMap {
    let mut map = BranchMap::new()
        .assign("Lf", "filter")
        .assign("Cf", "filter")
        .assign("Lstub", "filter");
    for k in 1..=spec.resonators.len() {
        let name = format!("resonator_{k}");
        map = map
            .assign(&format!("Cres{k}"), &name)
            .assign(&format!("Lres{k}"), &name)
            .assign(&format!("Cc{k}"), &name);
    }
    for k in 1..=spec.qubits.len() {
        let name = format!("qubit_{k}");
        map = map
            .assign(&format!("Cqb{k}"), &name)
            .assign(&format!("Lqb{k}"), &name)
            .assign(&format!("Cqr{k}"), &name)
            .assign(&format!("Cqf{k}"), &name);
    }
    map
}

/// One filter position on the board: a unit cell plus the multiplexing
/// capacity it was designed for (how many resonator slots it offers).
#[derive(Debug, Clone)]
pub struct TiledCell<S> {
    pub spec: UnitCellSpec<S>,
    pub capacity: usize,
}

/// Board-level plan: independent unit cells, no inter-cell coupling.
#[derive(Debug, Clone)]
pub struct TilingMap<S> {
    pub cells: Vec<TiledCell<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TilingSummary {
    pub cells: usize,
    /// Total resonator slots offered by the filters.
    pub available: usize,
    /// Slots actually populated.
    pub used: usize,
    pub output_ports: usize,
}

impl<S: Scalar> TilingMap<S> {
    /// The full board layout: four 9-1 filters and two 3-1 filters (42 slots)
    /// carrying 35 resonators. The distribution fills large cells first while
    /// keeping every filter populated: 9, 9, 9, 6, 1, 1.
    pub fn multiplex_35_6() -> Result<Self> {
        let filter = calibrate_filter(
            S::of(defaults::FILTER_CENTER_HZ),
            S::of(defaults::FILTER_BANDWIDTH_HZ),
        )?;
        let capacities = [9usize, 9, 9, 9, 3, 3];
        let mut remaining = 35usize;
        let mut cells = Vec::with_capacity(capacities.len());
        for (i, &cap) in capacities.iter().enumerate() {
            let cells_after = capacities.len() - i - 1;
            let used = cap.min(remaining.saturating_sub(cells_after)).max(1);
            remaining -= used;
            cells.push(TiledCell {
                spec: UnitCellSpec::calibrated_with(filter, used, used)?,
                capacity: cap,
            });
        }
        debug_assert_eq!(remaining, 0);
        let map = TilingMap { cells };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::Domain("tiling map holds no cells".into()));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.capacity == 0 || cell.capacity > 9 {
                return Err(Error::Domain(format!(
                    "cell {i}: multiplexing capacity must be 1 to 9, got {}",
                    cell.capacity
                )));
            }
            if cell.spec.resonators.len() > cell.capacity {
                return Err(Error::Domain(format!(
                    "cell {i}: {} resonators exceed capacity {}",
                    cell.spec.resonators.len(),
                    cell.capacity
                )));
            }
            cell.spec.validate()?;
        }
        Ok(())
    }

    pub fn summary(&self) -> TilingSummary {
        TilingSummary {
            cells: self.cells.len(),
            available: self.cells.iter().map(|c| c.capacity).sum(),
            used: self.cells.iter().map(|c| c.spec.resonators.len()).sum(),
            output_ports: self.cells.len(),
        }
    }
}

/// Build every cell of the tiling as an independent netlist.
pub fn build_tiled<S: Scalar>(map: &TilingMap<S>) -> Result<Vec<Netlist<S>>> {
    map.validate()?;
    map.cells.iter().map(|c| build_unit_cell(&c.spec)).collect()
}
