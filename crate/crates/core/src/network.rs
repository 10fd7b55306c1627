//! Frequency-domain nodal analysis of the netlist.
//!
//! The nodal admittance matrix is assembled over non-ground nodes with the
//! classic stamps: 1/R, jwC, 1/(jwL), and the exact two-port admittance of an
//! ideal transmission line. Port quantities come from direct dense LU solves;
//! a singular system (a lossless resonance hit exactly on a grid point) is
//! reported as a tagged pole instead of propagating NaNs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::netlist::{ElementKind, FrequencyGrid, Netlist, NodeId, Port};
use crate::scalar::{hz_from_omega, Scalar};

/// Branch admittance of a lumped element at angular frequency `omega`.
fn lumped_admittance<S: Scalar>(kind: &ElementKind<S>, omega: S) -> Option<Complex<S>> {
    match *kind {
        ElementKind::Resistor { ohms } => Some(Complex::new(S::one() / ohms, S::zero())),
        ElementKind::Capacitor { farads } => Some(Complex::new(S::zero(), omega * farads)),
        ElementKind::Inductor { henries } => {
            Some(Complex::new(S::zero(), -S::one() / (omega * henries)))
        }
        ElementKind::TransmissionLine { .. } => None,
    }
}

fn stamp<S: Scalar>(
    m: &mut DMatrix<Complex<S>>,
    ia: Option<usize>,
    ib: Option<usize>,
    y: Complex<S>,
) {
    if let Some(i) = ia {
        m[(i, i)] += y;
    }
    if let Some(j) = ib {
        m[(j, j)] += y;
    }
    if let (Some(i), Some(j)) = (ia, ib) {
        m[(i, j)] -= y;
        m[(j, i)] -= y;
    }
}

/// Nodal admittance matrix of the netlist at one frequency, ordered by
/// [`Netlist::unknown_index`]. Ports are not terminated here.
pub fn assemble_admittance<S: Scalar>(net: &Netlist<S>, omega: S) -> Result<DMatrix<Complex<S>>> {
    if omega <= S::zero() {
        return Err(Error::Domain("angular frequency must be positive".into()));
    }
    let n = net.dim();
    let mut m = DMatrix::<Complex<S>>::zeros(n, n);
    for el in net.elements() {
        let ia = net.unknown_index(el.a);
        let ib = net.unknown_index(el.b);
        match el.kind {
            ElementKind::TransmissionLine { z0, delay } => {
                // Exact lossless-line two-port: Y11 = Y22 = -j cot(theta)/z0,
                // Y12 = Y21 = j/(z0 sin(theta)), theta = omega * delay.
                let theta = omega * delay;
                let (sin_t, cos_t) = (theta.sin(), theta.cos());
                if sin_t.abs() < S::of(1e-9) {
                    return Err(Error::Pole {
                        f_hz: hz_from_omega(omega).to_f64_lossy(),
                        detail: format!(
                            "transmission line '{}' is at a half-wave resonance (theta = {:.3e} rad)",
                            el.label,
                            theta.to_f64_lossy()
                        ),
                    });
                }
                let y_mut = Complex::new(S::zero(), S::one() / (z0 * sin_t));
                let y_self = Complex::new(S::zero(), -cos_t / (z0 * sin_t));
                if let Some(i) = ia {
                    m[(i, i)] += y_self;
                }
                if let Some(j) = ib {
                    m[(j, j)] += y_self;
                }
                if let (Some(i), Some(j)) = (ia, ib) {
                    m[(i, j)] += y_mut;
                    m[(j, i)] += y_mut;
                }
            }
            _ => {
                let y = lumped_admittance(&el.kind, omega).unwrap();
                stamp(&mut m, ia, ib, y);
            }
        }
    }
    Ok(m)
}

fn inject<S: Scalar>(rhs: &mut DVector<Complex<S>>, ia: Option<usize>, ib: Option<usize>, amount: Complex<S>) {
    if let Some(i) = ia {
        rhs[i] += amount;
    }
    if let Some(j) = ib {
        rhs[j] -= amount;
    }
}

/// Solve `m v = rhs`, treating a singular or numerically inconsistent system
/// as a pole at `omega`.
fn solve_or_pole<S: Scalar>(
    m: &DMatrix<Complex<S>>,
    rhs: &DVector<Complex<S>>,
    omega: S,
) -> Result<DVector<Complex<S>>> {
    let pole = |detail: &str| Error::Pole {
        f_hz: hz_from_omega(omega).to_f64_lossy(),
        detail: detail.to_string(),
    };
    let lu = m.clone().lu();
    let v = lu.solve(rhs).ok_or_else(|| pole("singular nodal matrix"))?;
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(pole("nodal solve overflowed"));
    }
    // Backward check: a tiny pivot can slip through LU with finite garbage.
    let resid = (m * &v - rhs).norm();
    let scale = m.norm() * v.norm() + rhs.norm();
    if resid > S::of(1e-8) * scale {
        return Err(pole("nodal solve lost all accuracy (near-singular matrix)"));
    }
    Ok(v)
}

fn differential<S: Scalar>(v: &DVector<Complex<S>>, ia: Option<usize>, ib: Option<usize>) -> Complex<S> {
    let zero = Complex::new(S::zero(), S::zero());
    let va = ia.map_or(zero, |i| v[i]);
    let vb = ib.map_or(zero, |j| v[j]);
    va - vb
}

/// Input admittance looking into `port_label` at `omega`, with every *other*
/// port terminated in its reference impedance. The measured port itself is
/// driven by an ideal current source and adds no loading.
pub fn port_admittance<S: Scalar>(
    net: &Netlist<S>,
    port_label: &str,
    omega: S,
) -> Result<Complex<S>> {
    let port = net
        .port(port_label)
        .ok_or_else(|| Error::UnknownPort(port_label.to_string()))?;
    let mut m = assemble_admittance(net, omega)?;
    for other in net.ports().iter().filter(|p| p.label != port.label) {
        let g = Complex::new(S::one() / other.z0, S::zero());
        stamp(&mut m, net.unknown_index(other.a), net.unknown_index(other.b), g);
    }
    let ia = net.unknown_index(port.a);
    let ib = net.unknown_index(port.b);
    let mut rhs = DVector::<Complex<S>>::zeros(net.dim());
    inject(&mut rhs, ia, ib, Complex::new(S::one(), S::zero()));
    let v = solve_or_pole(&m, &rhs, omega)?;
    let vd = differential(&v, ia, ib);
    if vd.re == S::zero() && vd.im == S::zero() {
        return Err(Error::Pole {
            f_hz: hz_from_omega(omega).to_f64_lossy(),
            detail: format!("port '{}' differential voltage vanished", port.label),
        });
    }
    Ok(vd.inv())
}

/// Port admittance over a grid. Tagged poles become `None`; real errors
/// propagate.
pub fn port_admittance_sweep<S: Scalar>(
    net: &Netlist<S>,
    port_label: &str,
    grid: &FrequencyGrid<S>,
) -> Result<Vec<Option<Complex<S>>>> {
    grid.omegas()
        .iter()
        .map(|&w| match port_admittance(net, port_label, w) {
            Ok(y) => Ok(Some(y)),
            Err(Error::Pole { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Scattering matrices over a frequency grid.
#[derive(Debug, Clone)]
pub struct SParameterSweep<S: Scalar> {
    pub omegas: Vec<S>,
    /// One matrix per grid point, in port declaration order; `None` marks a
    /// flagged pole at that point.
    pub matrices: Vec<Option<DMatrix<Complex<S>>>>,
}

/// Full S-parameter matrix of the netlist over `grid`, each port referenced to
/// its own real impedance.
///
/// Uses the terminated-wave formulation: with every port loaded by its
/// reference conductance, a unit incident wave at port j is a current source
/// 2/sqrt(z0_j), and S_ij = v_i/sqrt(z0_i) - delta_ij.
pub fn s_parameters<S: Scalar>(net: &Netlist<S>, grid: &FrequencyGrid<S>) -> Result<SParameterSweep<S>> {
    let ports: &[Port<S>] = net.ports();
    if ports.is_empty() {
        return Err(Error::Domain("netlist has no ports".into()));
    }
    let np = ports.len();
    let two = S::of(2.0);
    let mut matrices = Vec::with_capacity(grid.len());
    for &omega in grid.omegas() {
        let point = (|| -> Result<DMatrix<Complex<S>>> {
            let mut m = assemble_admittance(net, omega)?;
            for p in ports {
                let g = Complex::new(S::one() / p.z0, S::zero());
                stamp(&mut m, net.unknown_index(p.a), net.unknown_index(p.b), g);
            }
            let lu = m.clone().lu();
            let mut s = DMatrix::<Complex<S>>::zeros(np, np);
            for (j, pj) in ports.iter().enumerate() {
                let mut rhs = DVector::<Complex<S>>::zeros(net.dim());
                let drive = Complex::new(two / pj.z0.sqrt(), S::zero());
                inject(&mut rhs, net.unknown_index(pj.a), net.unknown_index(pj.b), drive);
                let v = lu.solve(&rhs).ok_or_else(|| Error::Pole {
                    f_hz: hz_from_omega(omega).to_f64_lossy(),
                    detail: "terminated network is singular".to_string(),
                })?;
                if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Pole {
                        f_hz: hz_from_omega(omega).to_f64_lossy(),
                        detail: "terminated solve overflowed".to_string(),
                    });
                }
                for (i, pi) in ports.iter().enumerate() {
                    let vd = differential(&v, net.unknown_index(pi.a), net.unknown_index(pi.b));
                    let mut sij = vd / Complex::new(pi.z0.sqrt(), S::zero());
                    if i == j {
                        sij -= Complex::new(S::one(), S::zero());
                    }
                    s[(i, j)] = sij;
                }
            }
            Ok(s)
        })();
        match point {
            Ok(s) => matrices.push(Some(s)),
            Err(Error::Pole { .. }) => matrices.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(SParameterSweep {
        omegas: grid.omegas().to_vec(),
        matrices,
    })
}

/// Reflection coefficient at a single port over a grid (`S11` of that port
/// with all other ports terminated).
pub fn port_reflection<S: Scalar>(
    net: &Netlist<S>,
    port_label: &str,
    grid: &FrequencyGrid<S>,
) -> Result<Vec<Option<Complex<S>>>> {
    let port = net
        .port(port_label)
        .ok_or_else(|| Error::UnknownPort(port_label.to_string()))?;
    let one = Complex::new(S::one(), S::zero());
    grid.omegas()
        .iter()
        .map(|&w| match port_admittance(net, port_label, w) {
            // Gamma = (1 - z0 Y) / (1 + z0 Y)
            Ok(y) => {
                let zy = Complex::new(port.z0, S::zero()) * y;
                Ok(Some((one - zy) / (one + zy)))
            }
            Err(Error::Pole { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

#[allow(dead_code)]
fn node_id_unused(_: NodeId) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::Netlist;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    type C64 = Complex<f64>;

    const TWO_PI: f64 = std::f64::consts::TAU;

    #[test]
    fn single_resistor_port_admittance_is_conductance() {
        let net = Netlist::builder()
            .resistor("R1", "n1", "gnd", 50.0)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let y = port_admittance(&net, "P1", TWO_PI * 1e9).unwrap();
        assert_relative_eq!(y.re, 0.02, max_relative = 1e-14);
        assert_eq!(y.im, 0.0);
    }

    #[test]
    fn shunt_capacitor_admittance_at_9p8_ghz() {
        let net = Netlist::builder()
            .capacitor("Cc", "n1", "gnd", 1.73e-15)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let w = TWO_PI * 9.8e9;
        let y = port_admittance(&net, "P1", w).unwrap();
        assert_eq!(y.re, 0.0);
        assert_relative_eq!(y.im, 1.0652512e-4, max_relative = 1e-6);
        assert_relative_eq!(y.im, w * 1.73e-15, max_relative = 1e-14);
    }

    #[test]
    fn two_element_ladder_matrix_matches_hand_stamps() {
        // series L from n1 to n2, shunt C at n2
        let net = Netlist::builder()
            .inductor("L1", "n1", "n2", 2e-9)
            .capacitor("C1", "n2", "gnd", 300e-15)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let w = TWO_PI * 5e9;
        let m = assemble_admittance(&net, w).unwrap();
        let yl = -1.0 / (w * 2e-9);
        let yc = w * 300e-15;
        let i1 = net.unknown_index(net.node("n1").unwrap()).unwrap();
        let i2 = net.unknown_index(net.node("n2").unwrap()).unwrap();
        assert_relative_eq!(m[(i1, i1)].im, yl, max_relative = 1e-15);
        assert_relative_eq!(m[(i1, i2)].im, -yl, max_relative = 1e-15);
        assert_relative_eq!(m[(i2, i2)].im, yl + yc, max_relative = 1e-15);
        assert_eq!(m[(i1, i2)], m[(i2, i1)]);
        assert_eq!(m[(i1, i1)].re, 0.0);
    }

    fn parallel_rlc(r: f64) -> Netlist<f64> {
        Netlist::builder()
            .resistor("R1", "n1", "gnd", r)
            .inductor("L1", "n1", "gnd", 1.8e-9)
            .capacitor("C1", "n1", "gnd", 146.52e-15)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap()
    }

    #[test]
    fn parallel_rlc_at_resonance_shows_pure_conductance() {
        let net = parallel_rlc(5e3);
        let w0 = 1.0 / (1.8e-9_f64 * 146.52e-15).sqrt();
        assert_relative_eq!(w0 / TWO_PI, 9.8e9, max_relative = 2e-4);
        let y = port_admittance(&net, "P1", w0).unwrap();
        assert_relative_eq!(y.re, 2.0e-4, max_relative = 1e-12);
        assert!(y.im.abs() < 1e-12 * y.re);
    }

    #[test]
    fn lossless_resonance_is_reported_as_pole() {
        let net = Netlist::builder()
            .inductor("L1", "n1", "gnd", 1.8e-9)
            .capacitor("C1", "n1", "gnd", 146.52e-15)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let w0 = 1.0 / (1.8e-9_f64 * 146.52e-15).sqrt();
        match port_admittance(&net, "P1", w0) {
            Err(Error::Pole { f_hz, .. }) => assert_relative_eq!(f_hz, w0 / TWO_PI, max_relative = 1e-9),
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn quarter_wave_line_transforms_impedance() {
        // theta = pi/2 at 5 GHz -> delay = pi/(2 w)
        let w = TWO_PI * 5e9;
        let delay = std::f64::consts::FRAC_PI_2 / w;
        let net = Netlist::builder()
            .tline("T1", "n1", "n2", 75.0, delay)
            .resistor("RL", "n2", "gnd", 100.0)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let y = port_admittance(&net, "P1", w).unwrap();
        let zin = y.inv();
        assert_relative_eq!(zin.re, 75.0 * 75.0 / 100.0, max_relative = 1e-10);
        assert!(zin.im.abs() < 1e-9);
    }

    #[test]
    fn half_wave_line_is_a_tagged_pole() {
        let w = TWO_PI * 5e9;
        let delay = std::f64::consts::PI / w;
        let net = Netlist::builder()
            .tline("T1", "n1", "gnd", 50.0, delay)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        assert!(matches!(
            port_admittance(&net, "P1", w),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn matched_load_has_zero_reflection_and_open_port_full_reflection() {
        let grid = FrequencyGrid::linspace_hz(4e9, 15e9, 5).unwrap();
        let matched = Netlist::builder()
            .resistor("R1", "n1", "gnd", 50.0)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let sw = s_parameters(&matched, &grid).unwrap();
        for m in sw.matrices.iter().map(|m| m.as_ref().unwrap()) {
            assert!(m[(0, 0)].norm() < 1e-14);
        }
        let open = Netlist::builder()
            .node("n1")
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let sw = s_parameters(&open, &grid).unwrap();
        for m in sw.matrices.iter().map(|m| m.as_ref().unwrap()) {
            let s11: C64 = m[(0, 0)];
            assert_relative_eq!(s11.re, 1.0, max_relative = 1e-12);
            assert!(s11.im.abs() < 1e-12);
        }
    }

    #[test]
    fn shunt_capacitor_reflection_matches_closed_form() {
        let net = Netlist::builder()
            .capacitor("C1", "n1", "gnd", 1e-12)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let grid = FrequencyGrid::linspace_hz(1e9, 10e9, 7).unwrap();
        let sw = s_parameters(&net, &grid).unwrap();
        let refl = port_reflection(&net, "P1", &grid).unwrap();
        for (k, &w) in sw.omegas.iter().enumerate() {
            let y = C64::new(0.0, w * 1e-12);
            let z0 = C64::new(50.0, 0.0);
            let expected = (C64::new(1.0, 0.0) - z0 * y) / (C64::new(1.0, 0.0) + z0 * y);
            let got = sw.matrices[k].as_ref().unwrap()[(0, 0)];
            assert!((got - expected).norm() < 1e-12);
            assert!((refl[k].unwrap() - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_tee_two_port_is_reciprocal() {
        let net = Netlist::builder()
            .inductor("L1", "p1", "mid", 2.3e-9)
            .capacitor("C1", "mid", "gnd", 0.4e-12)
            .resistor("R1", "mid", "p2", 17.0)
            .capacitor("C2", "p2", "gnd", 1.1e-12)
            .port("P1", "p1", "gnd", 50.0)
            .port("P2", "p2", "gnd", 75.0)
            .build()
            .unwrap();
        let grid = FrequencyGrid::linspace_hz(1e9, 12e9, 23).unwrap();
        let sw = s_parameters(&net, &grid).unwrap();
        for m in sw.matrices.iter().map(|m| m.as_ref().unwrap()) {
            assert!((m[(0, 1)] - m[(1, 0)]).norm() <= 1e-10);
            let sv = m.clone().svd(false, false).singular_values;
            assert!(sv.iter().all(|&s| s <= 1.0 + 1e-9));
        }
    }

    // --- independent ladder oracle: ABCD cascade ------------------------------

    #[derive(Debug, Clone)]
    enum Stage {
        Series(ElementKind<f64>),
        Shunt(ElementKind<f64>),
    }

    fn abcd(stage: &Stage, w: f64) -> [C64; 4] {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match stage {
            Stage::Series(ElementKind::TransmissionLine { z0, delay }) => {
                let th = w * delay;
                [
                    C64::new(th.cos(), 0.0),
                    C64::new(0.0, z0 * th.sin()),
                    C64::new(0.0, th.sin() / z0),
                    C64::new(th.cos(), 0.0),
                ]
            }
            Stage::Series(k) => {
                let z = lumped_admittance(k, w).unwrap().inv();
                [one, z, zero, one]
            }
            Stage::Shunt(k) => {
                let y = lumped_admittance(k, w).unwrap();
                [one, zero, y, one]
            }
        }
    }

    /// Input impedance of the cascade, open-circuited at the far end.
    fn oracle_input_impedance(stages: &[Stage], w: f64) -> C64 {
        let mut m = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        for s in stages {
            let t = abcd(s, w);
            m = [
                m[0] * t[0] + m[1] * t[2],
                m[0] * t[1] + m[1] * t[3],
                m[2] * t[0] + m[3] * t[2],
                m[2] * t[1] + m[3] * t[3],
            ];
        }
        m[0] / m[2] // Zin of an open-ended cascade: A/C
    }

    fn ladder_netlist(stages: &[Stage]) -> Netlist<f64> {
        let mut b = Netlist::builder().port("P1", "n0", "gnd", 50.0);
        let mut node = 0usize;
        for (k, s) in stages.iter().enumerate() {
            let label = format!("E{k}");
            let cur = format!("n{node}");
            match s {
                Stage::Series(kind) => {
                    let nxt = format!("n{}", node + 1);
                    b = b.element(&label, *kind, &cur, &nxt);
                    node += 1;
                }
                Stage::Shunt(kind) => {
                    b = b.element(&label, *kind, &cur, "gnd");
                }
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn five_element_ladder_matches_abcd_oracle() {
        let stages = vec![
            Stage::Series(ElementKind::Capacitor { farads: 120e-15 }),
            Stage::Shunt(ElementKind::Inductor { henries: 0.9e-9 }),
            Stage::Series(ElementKind::TransmissionLine { z0: 62.0, delay: 18e-12 }),
            Stage::Shunt(ElementKind::Capacitor { farads: 310e-15 }),
            Stage::Shunt(ElementKind::Resistor { ohms: 43.0 }),
        ];
        let net = ladder_netlist(&stages);
        for f_ghz in [1.3_f64, 4.4, 7.9, 9.8, 14.2] {
            let w = TWO_PI * f_ghz * 1e9;
            let y = port_admittance(&net, "P1", w).unwrap();
            let y_oracle = oracle_input_impedance(&stages, w).inv();
            assert!(
                (y - y_oracle).norm() <= 1e-10 * y_oracle.norm(),
                "mismatch at {f_ghz} GHz: {y} vs {y_oracle}"
            );
        }
    }

    fn arb_kind(lossy: bool) -> impl Strategy<Value = ElementKind<f64>> {
        let r = (5.0..500.0f64).prop_map(|ohms| ElementKind::Resistor { ohms });
        let l = (0.1e-9..10e-9f64).prop_map(|henries| ElementKind::Inductor { henries });
        let c = (1e-15..1000e-15f64).prop_map(|farads| ElementKind::Capacitor { farads });
        if lossy {
            r.boxed()
        } else {
            prop_oneof![l, c].boxed()
        }
    }

    prop_compose! {
        /// Random terminated ladder: up to 7 reactive stages plus a final
        /// shunt resistor that keeps every resonance damped.
        fn arb_ladder()(
            body in prop::collection::vec((any::<bool>(), arb_kind(false), any::<bool>()), 0..7),
            rterm in 5.0..500.0f64,
        ) -> Vec<Stage> {
            let mut stages: Vec<Stage> = body
                .into_iter()
                .map(|(series, kind, lossy_swap)| {
                    let _ = lossy_swap;
                    if series { Stage::Series(kind) } else { Stage::Shunt(kind) }
                })
                .collect();
            stages.push(Stage::Shunt(ElementKind::Resistor { ohms: rterm }));
            stages
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(192))]

        #[test]
        fn ladder_admittance_matches_series_parallel_oracle(
            stages in arb_ladder(),
            f_ghz in 0.5..18.0f64,
        ) {
            let w = TWO_PI * f_ghz * 1e9;
            let net = ladder_netlist(&stages);
            let y = port_admittance(&net, "P1", w).unwrap();
            let y_oracle = oracle_input_impedance(&stages, w).inv();
            prop_assert!((y - y_oracle).norm() <= 1e-9 * y_oracle.norm().max(1e-30));
            // passivity at the port
            prop_assert!(y.re >= -1e-12);
        }

        #[test]
        fn random_pi_networks_are_reciprocal_and_passive(
            ya in arb_kind(false), yb in arb_kind(false), zc in arb_kind(false),
            f_ghz in 0.5..18.0f64,
        ) {
            let net = Netlist::builder()
                .element("Ea", ya, "p1", "gnd")
                .element("Eb", yb, "p2", "gnd")
                .element("Ec", zc, "p1", "p2")
                .port("P1", "p1", "gnd", 50.0)
                .port("P2", "p2", "gnd", 50.0)
                .build()
                .unwrap();
            let w = TWO_PI * f_ghz * 1e9;
            let grid = FrequencyGrid::new(vec![w]).unwrap();
            let sw = s_parameters(&net, &grid).unwrap();
            let m = sw.matrices[0].as_ref().unwrap();
            prop_assert!((m[(0, 1)] - m[(1, 0)]).norm() <= 1e-10);
            let sv = m.clone().svd(false, false).singular_values;
            prop_assert!(sv.iter().all(|&s| s <= 1.0 + 1e-9));
        }
    }
}
