//! Complex eigenmodes of the terminated network.
//!
//! The lossy network is cast as a first-order state space in capacitor
//! voltages and inductor currents,
//!
//! ```text
//!   C v' = -G v - A i        L i' = A' v
//! ```
//!
//! with ports replaced by their reference-impedance resistors. Nodes without
//! capacitance contribute algebraic constraints; they are eliminated through a
//! Schur complement on the conductance block, which keeps the reduced system
//! in the same dissipative form. A final symmetric scaling by the square roots
//! of the capacitance eigenvalues and inductances produces a balanced matrix
//! that is a sum of a negative-semidefinite symmetric part and a skew part, so
//! every computed eigenvalue has Re[s] <= 0 up to roundoff.
//!
//! Each eigenvalue s = -sigma + i*omega_d with omega_d > 0 becomes a [`Mode`]
//! with Q = omega_d / (2 sigma) and per-element stored-energy participations
//! recovered from the eigenvector.

use std::collections::BTreeMap;

use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::netlist::{ElementKind, Netlist};
use crate::scalar::{hz_from_omega, Scalar};

/// Identity given to modes whose energy is spread over several subsystems.
pub const OTHER: &str = "other";

/// Assignment of element labels to named physical subsystems
/// (e.g. `Cres1 -> resonator_1`), used to aggregate participations and to
/// label modes.
#[derive(Debug, Clone, Default)]
pub struct BranchMap {
    assignments: BTreeMap<String, String>,
}

impl BranchMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(mut self, element_label: &str, subsystem: &str) -> Self {
        self.assignments
            .insert(element_label.to_string(), subsystem.to_string());
        self
    }

    pub fn subsystem_of(&self, element_label: &str) -> Option<&str> {
        self.assignments.get(element_label).map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeFlag {
    /// Eigenvalue nearly coincides with another or the eigenvector did not
    /// converge; participations may be ill-defined.
    Degenerate,
    /// Identity assigned through the lowest-Q tie-break against another mode
    /// claiming the same subsystem.
    LabelTie,
    /// Mode tracking jumped or fell back to identity matching at this sweep
    /// point.
    TrackingJump,
}

/// One oscillatory eigensolution of the network.
#[derive(Debug, Clone)]
pub struct Mode<S> {
    /// Eigenvalue s = -sigma + i*omega_d, upper-half-plane representative of
    /// the conjugate pair.
    pub eigenvalue: Complex<S>,
    /// Damped angular frequency, rad/s.
    pub omega_d: S,
    /// Decay rate, rad/s (>= 0).
    pub sigma: S,
    /// Q = omega_d / (2 sigma); `None` marks an undamped (infinite-Q) mode.
    pub q: Option<S>,
    /// Element label -> fraction of the stored energy, over energy-storing
    /// elements. Empty when the eigenvector could not be resolved.
    pub participation: BTreeMap<String, S>,
    /// Subsystem name assigned by [`identify_modes`], or [`OTHER`].
    pub identity: Option<String>,
    pub flags: Vec<ModeFlag>,
}

impl<S: Scalar> Mode<S> {
    pub fn frequency_hz(&self) -> S {
        hz_from_omega(self.omega_d)
    }

    /// Participations aggregated per subsystem of `map`; unmapped element
    /// labels aggregate under their own label.
    pub fn subsystem_participation(&self, map: &BranchMap) -> BTreeMap<String, S> {
        let mut agg: BTreeMap<String, S> = BTreeMap::new();
        for (label, &p) in &self.participation {
            let key = map.subsystem_of(label).unwrap_or(label.as_str());
            *agg.entry(key.to_string()).or_insert_with(S::zero) += p;
        }
        agg
    }

    pub fn has_flag(&self, flag: ModeFlag) -> bool {
        self.flags.contains(&flag)
    }
}

struct StorageTerm<S> {
    label: String,
    value: S,
    a: Option<usize>,
    b: Option<usize>,
}

fn stamp_real<S: Scalar>(m: &mut DMatrix<S>, a: Option<usize>, b: Option<usize>, w: S) {
    if let Some(i) = a {
        m[(i, i)] += w;
    }
    if let Some(j) = b {
        m[(j, j)] += w;
    }
    if let (Some(i), Some(j)) = (a, b) {
        m[(i, j)] -= w;
        m[(j, i)] -= w;
    }
}

fn columns_subset<S: Scalar>(m: &DMatrix<S>, idx: &[usize]) -> DMatrix<S> {
    let mut out = DMatrix::zeros(m.nrows(), idx.len());
    for (j, &c) in idx.iter().enumerate() {
        out.set_column(j, &m.column(c));
    }
    out
}

/// Inverse iteration for the eigenvector of `m` at eigenvalue `lambda`.
/// Returns the normalized vector and its residual ||m x - lambda x||.
fn inverse_iteration<S: Scalar>(
    m: &DMatrix<Complex<S>>,
    lambda: Complex<S>,
) -> Option<(DVector<Complex<S>>, S)> {
    let n = m.nrows();
    let scale = lambda.modulus().max(m.norm());
    let mut delta = S::eps().sqrt();
    for _ in 0..4 {
        let shift = lambda + Complex::new(delta * scale, delta * scale);
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] -= shift;
        }
        let lu = a.lu();
        let mut b = DVector::from_element(n, Complex::new(S::one(), S::zero()));
        b /= Complex::new(b.norm(), S::zero());
        let mut ok = true;
        for _ in 0..4 {
            match lu.solve(&b) {
                Some(z) => {
                    let norm = z.norm();
                    if !(norm.is_finite() && norm > S::zero()) {
                        ok = false;
                        break;
                    }
                    b = z / Complex::new(norm, S::zero());
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let residual = (m * &b - &b * lambda).norm();
            return Some((b, residual));
        }
        delta *= S::of(100.0);
    }
    None
}

/// Solve the network's oscillatory eigenmodes. `band`, when given, keeps only
/// modes with `omega_d` inside the window (rad/s). A network without
/// energy-storing elements yields an empty list.
pub fn eigenmodes<S: Scalar>(net: &Netlist<S>, band: Option<(S, S)>) -> Result<Vec<Mode<S>>> {
    let n = net.dim();
    let mut caps: Vec<StorageTerm<S>> = Vec::new();
    let mut inds: Vec<StorageTerm<S>> = Vec::new();
    let mut g = DMatrix::<S>::zeros(n, n);
    for e in net.elements() {
        let a = net.unknown_index(e.a);
        let b = net.unknown_index(e.b);
        match e.kind {
            ElementKind::Resistor { ohms } => stamp_real(&mut g, a, b, S::one() / ohms),
            ElementKind::Capacitor { farads } => caps.push(StorageTerm {
                label: e.label.clone(),
                value: farads,
                a,
                b,
            }),
            ElementKind::Inductor { henries } => inds.push(StorageTerm {
                label: e.label.clone(),
                value: henries,
                a,
                b,
            }),
            ElementKind::TransmissionLine { .. } => {
                return Err(Error::Domain(format!(
                    "transmission line '{}' is not supported in eigenmode analysis; \
                     replace it with a lumped equivalent",
                    e.label
                )))
            }
        }
    }
    for p in net.ports() {
        let a = net.unknown_index(p.a);
        let b = net.unknown_index(p.b);
        stamp_real(&mut g, a, b, S::one() / p.z0);
    }
    if caps.is_empty() && inds.is_empty() {
        return Ok(Vec::new());
    }

    let mut c_n = DMatrix::<S>::zeros(n, n);
    for c in &caps {
        stamp_real(&mut c_n, c.a, c.b, c.value);
    }
    let m = inds.len();
    let mut a_inc = DMatrix::<S>::zeros(n, m);
    for (k, l) in inds.iter().enumerate() {
        if let Some(i) = l.a {
            a_inc[(i, k)] += S::one();
        }
        if let Some(j) = l.b {
            a_inc[(j, k)] -= S::one();
        }
    }

    // split node coordinates into dynamic (capacitive) and algebraic parts
    let sym = SymmetricEigen::new(c_n);
    let lam = sym.eigenvalues;
    let u = sym.eigenvectors;
    let lam_max = lam.iter().fold(S::zero(), |acc, &x| acc.max(x));
    let cap_tol = lam_max * S::eps() * S::of(100.0);
    let dyn_idx: Vec<usize> = (0..n).filter(|&i| lam[i] > cap_tol).collect();
    let alg_idx: Vec<usize> = (0..n).filter(|&i| lam[i] <= cap_tol).collect();
    let d = dyn_idx.len();
    let u1 = columns_subset(&u, &dyn_idx);
    let u0 = columns_subset(&u, &alg_idx);

    let g11 = u1.tr_mul(&(&g * &u1));
    let g10 = u1.tr_mul(&(&g * &u0));
    let a1 = u1.tr_mul(&a_inc);
    let a0 = u0.tr_mul(&a_inc);
    // eliminate algebraic coordinates: x0 = -(X x1 + Y i)
    let (g_red, b_red, r_red, x_back, y_back) = if alg_idx.is_empty() {
        (g11, a1, DMatrix::zeros(m, m), None, None)
    } else {
        let g00 = u0.tr_mul(&(&g * &u0));
        let chol = Cholesky::new(g00).ok_or_else(|| {
            Error::Eigen(
                "cannot eliminate a capacitor-free node subset without resistive paths; \
                 add capacitance or resistance there"
                    .into(),
            )
        })?;
        let x = chol.solve(&g10.transpose());
        let y = chol.solve(&a0);
        let g_red = &g11 - &g10 * &x;
        let b_red = &a1 - &g10 * &y;
        let r_red = a0.tr_mul(&y);
        (g_red, b_red, r_red, Some(x), Some(y))
    };

    // balance by sqrt of capacitance eigenvalues and inductances
    let s_dyn: Vec<S> = dyn_idx.iter().map(|&i| lam[i].sqrt()).collect();
    let s_ind: Vec<S> = inds.iter().map(|l| l.value.sqrt()).collect();
    let dim = d + m;
    if dim == 0 {
        return Ok(Vec::new());
    }
    let mut m_t = DMatrix::<S>::zeros(dim, dim);
    for i in 0..d {
        for j in 0..d {
            m_t[(i, j)] = -g_red[(i, j)] / (s_dyn[i] * s_dyn[j]);
        }
    }
    for i in 0..d {
        for j in 0..m {
            let b = b_red[(i, j)] / (s_dyn[i] * s_ind[j]);
            m_t[(i, d + j)] = -b;
            m_t[(d + j, i)] = b;
        }
    }
    for i in 0..m {
        for j in 0..m {
            m_t[(d + i, d + j)] -= r_red[(i, j)] / (s_ind[i] * s_ind[j]);
        }
    }

    let eigvals = m_t.clone().complex_eigenvalues();
    let frob = m_t.norm();
    let m_c = m_t.map(|x| Complex::new(x, S::zero()));
    let x_back_c = x_back.map(|x| x.map(|v| Complex::new(v, S::zero())));
    let y_back_c = y_back.map(|y| y.map(|v| Complex::new(v, S::zero())));
    let u1_c = u1.map(|v| Complex::new(v, S::zero()));
    let u0_c = u0.map(|v| Complex::new(v, S::zero()));

    let near_tol = S::of(1e-8);
    let junk_tol = S::eps() * S::of(100.0);
    let mut modes = Vec::new();
    for (i, &ev) in eigvals.iter().enumerate() {
        let scale = ev.modulus();
        // relative to the matrix norm: drops real/overdamped eigenvalues, the
        // lower conjugate partners, and numerically-zero conserved quantities
        // such as inductor-loop fluxes
        if ev.im <= frob * junk_tol || ev.im <= scale * junk_tol {
            continue;
        }
        let omega_d = ev.im;
        if let Some((lo, hi)) = band {
            if omega_d < lo || omega_d > hi {
                continue;
            }
        }
        let mut sigma = -ev.re;
        if sigma < S::zero() {
            if -sigma > frob * S::of(1e-9) {
                return Err(Error::Eigen(format!(
                    "eigenvalue {:.3e}+{:.3e}i of a passive network has positive real part",
                    ev.re.to_f64_lossy(),
                    ev.im.to_f64_lossy()
                )));
            }
            sigma = S::zero();
        }
        let q = if sigma <= omega_d * junk_tol {
            None
        } else {
            Some(omega_d / (S::of(2.0) * sigma))
        };

        let mut flags = Vec::new();
        if eigvals
            .iter()
            .enumerate()
            .any(|(j, &o)| j != i && (ev - o).modulus() < near_tol * scale.max(o.modulus()))
        {
            flags.push(ModeFlag::Degenerate);
        }

        let mut participation = BTreeMap::new();
        match inverse_iteration(&m_c, ev) {
            Some((vec, residual)) => {
                if residual > frob * S::eps().sqrt() && !flags.contains(&ModeFlag::Degenerate) {
                    flags.push(ModeFlag::Degenerate);
                }
                // undo the balancing to get node voltages and branch currents
                let mut x1 = DVector::from_element(d, Complex::new(S::zero(), S::zero()));
                for k in 0..d {
                    x1[k] = vec[k] / Complex::new(s_dyn[k], S::zero());
                }
                let mut cur = DVector::from_element(m, Complex::new(S::zero(), S::zero()));
                for k in 0..m {
                    cur[k] = vec[d + k] / Complex::new(s_ind[k], S::zero());
                }
                let x0 = match (&x_back_c, &y_back_c) {
                    (Some(x), Some(y)) => -(x * &x1 + y * &cur),
                    _ => DVector::from_element(0, Complex::new(S::zero(), S::zero())),
                };
                let v = &u1_c * &x1 + &u0_c * &x0;
                let zero = Complex::new(S::zero(), S::zero());
                let mut energies: Vec<(String, S)> = Vec::with_capacity(caps.len() + inds.len());
                for c in &caps {
                    let va = c.a.map_or(zero, |i| v[i]);
                    let vb = c.b.map_or(zero, |i| v[i]);
                    energies.push((c.label.clone(), c.value * (va - vb).norm_sqr()));
                }
                for (k, l) in inds.iter().enumerate() {
                    energies.push((l.label.clone(), l.value * cur[k].norm_sqr()));
                }
                let total: S = energies.iter().fold(S::zero(), |acc, (_, e)| acc + *e);
                if total > S::zero() {
                    for (label, e) in energies {
                        participation.insert(label, e / total);
                    }
                }
            }
            None => {
                if !flags.contains(&ModeFlag::Degenerate) {
                    flags.push(ModeFlag::Degenerate);
                }
            }
        }

        modes.push(Mode {
            eigenvalue: ev,
            omega_d,
            sigma,
            q,
            participation,
            identity: None,
            flags,
        });
    }
    modes.sort_by(|a, b| a.omega_d.partial_cmp(&b.omega_d).unwrap());
    Ok(modes)
}

/// Label each mode by the subsystem holding the largest participation.
///
/// A mode is labeled [`OTHER`] when its top participation is below 0.4 or
/// within 0.1 of the runner-up (hybridized, e.g. near an avoided crossing).
/// When several modes claim the same subsystem, the lowest-Q claimant keeps it
/// — the same criterion the fundamental filter mode is recognized by — and all
/// contenders carry a tie flag.
pub fn identify_modes<S: Scalar>(mut modes: Vec<Mode<S>>, map: &BranchMap) -> Vec<Mode<S>> {
    let mut claims: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, mode) in modes.iter_mut().enumerate() {
        let agg = mode.subsystem_participation(map);
        let mut ranked: Vec<(&String, S)> = agg.iter().map(|(k, &v)| (k, v)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let verdict = match ranked.first() {
            None => None,
            Some(&(top, p1)) => {
                let p2 = ranked.get(1).map_or(S::zero(), |&(_, p)| p);
                if p1 < S::of(0.4) || p1 - p2 < S::of(0.1) {
                    None
                } else {
                    Some(top.clone())
                }
            }
        };
        match verdict {
            Some(subsystem) => claims.entry(subsystem).or_default().push(i),
            None => mode.identity = Some(OTHER.to_string()),
        }
    }
    for (subsystem, claimants) in claims {
        if let [only] = claimants[..] {
            modes[only].identity = Some(subsystem);
            continue;
        }
        // several modes want the same label: the most damped one keeps it
        let winner = claimants
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let qa = modes[a].q;
                let qb = modes[b].q;
                match (qa, qb) {
                    (Some(x), Some(y)) => x.partial_cmp(&y).unwrap(),
                    (Some(_), None) => std::cmp::Ordering::Less,
                    (None, Some(_)) => std::cmp::Ordering::Greater,
                    (None, None) => std::cmp::Ordering::Equal,
                }
            })
            .unwrap();
        for i in claimants {
            modes[i].flags.push(ModeFlag::LabelTie);
            modes[i].identity = Some(if i == winner {
                subsystem.clone()
            } else {
                OTHER.to_string()
            });
        }
    }
    modes
}

/// Eigenmode spectra along a sweep of one inductor value, with one mode
/// followed across sweep points.
#[derive(Debug, Clone)]
pub struct SweepTrace<S> {
    pub element: String,
    pub values: Vec<S>,
    pub points: Vec<SweepPoint<S>>,
}

#[derive(Debug, Clone)]
pub struct SweepPoint<S> {
    /// All identified in-band modes at this sweep value.
    pub modes: Vec<Mode<S>>,
    /// Index into `modes` of the tracked mode; `None` marks a gap.
    pub tracked: Option<usize>,
}

impl<S: Scalar> SweepTrace<S> {
    /// The tracked mode per sweep value (`None` at gaps).
    pub fn tracked_modes(&self) -> Vec<Option<&Mode<S>>> {
        self.points
            .iter()
            .map(|p| p.tracked.map(|i| &p.modes[i]))
            .collect()
    }
}

fn participation_distance<S: Scalar>(
    a: &BTreeMap<String, S>,
    b: &BTreeMap<String, S>,
) -> S {
    let mut dist = S::zero();
    for (k, &va) in a {
        dist += (va - b.get(k).copied().unwrap_or_else(S::zero)).abs();
    }
    for (k, &vb) in b {
        if !a.contains_key(k) {
            dist += vb.abs();
        }
    }
    dist
}

fn choose_tracked<S: Scalar>(
    modes: &mut [Mode<S>],
    prev: Option<&Mode<S>>,
    track: &str,
    map: &BranchMap,
) -> Option<usize> {
    if modes.is_empty() {
        return None;
    }
    if let Some(p) = prev {
        let nearest = (0..modes.len())
            .min_by(|&a, &b| {
                let da = (modes[a].eigenvalue - p.eigenvalue).modulus();
                let db = (modes[b].eigenvalue - p.eigenvalue).modulus();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let jump = (modes[nearest].eigenvalue - p.eigenvalue).modulus();
        let drift = participation_distance(
            &modes[nearest].subsystem_participation(map),
            &p.subsystem_participation(map),
        );
        if drift <= S::one() {
            if jump > S::of(0.3) * p.eigenvalue.modulus() {
                modes[nearest].flags.push(ModeFlag::TrackingJump);
            }
            return Some(nearest);
        }
    }
    // fall back to identity matching (sweep start, or veto above)
    let by_identity = modes
        .iter()
        .position(|m| m.identity.as_deref() == Some(track));
    if let (Some(i), Some(_)) = (by_identity, prev) {
        modes[i].flags.push(ModeFlag::TrackingJump);
    }
    by_identity
}

/// Re-solve the eigenmodes for each value of inductor `label`, following the
/// mode whose identity is `track` by nearest-eigenvalue continuation with a
/// participation-consistency veto.
pub fn sweep_element<S: Scalar>(
    net: &Netlist<S>,
    map: &BranchMap,
    label: &str,
    values: &[S],
    track: &str,
    band: Option<(S, S)>,
) -> Result<SweepTrace<S>> {
    let elem = net
        .element(label)
        .ok_or_else(|| Error::UnknownElement(label.to_string()))?;
    if !matches!(elem.kind, ElementKind::Inductor { .. }) {
        return Err(Error::Domain(format!(
            "sweep element '{label}' must be an inductor"
        )));
    }
    if values.len() < 2 {
        return Err(Error::Domain("sweep needs at least two values".into()));
    }
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    if !increasing && !decreasing {
        return Err(Error::Domain("sweep values must be strictly monotonic".into()));
    }

    let mut points = Vec::with_capacity(values.len());
    let mut prev: Option<Mode<S>> = None;
    for &v in values {
        let net_v = net.with_element_value(label, v)?;
        let mut modes = identify_modes(eigenmodes(&net_v, band)?, map);
        let tracked = choose_tracked(&mut modes, prev.as_ref(), track, map);
        prev = tracked.map(|i| modes[i].clone());
        points.push(SweepPoint { modes, tracked });
    }
    Ok(SweepTrace {
        element: label.to_string(),
        values: values.to_vec(),
        points,
    })
}

/// Paired qubit sweeps of a unit cell with and without its filter, plus the
/// resulting radiative-suppression curve.
#[derive(Debug, Clone)]
pub struct FilterComparison<S> {
    pub with_filter: SweepTrace<S>,
    pub without_filter: SweepTrace<S>,
    /// Per sweep value: qubit frequency (Hz, taken from the filterless
    /// variant) and the suppression 10*log10(Q_with/Q_without) in dB. `None`
    /// where either sweep lost the qubit mode or it came out undamped.
    pub suppression_db: Vec<Option<(S, S)>>,
}

/// Sweep the first qubit's inductance through `qubit_l_values` in both the
/// full cell and its filterless counterpart, tracking the qubit mode, and
/// report how much the filter suppresses the qubit's radiative decay at each
/// qubit frequency.
pub fn compare_with_without_filter<S: Scalar>(
    spec: &crate::synth::UnitCellSpec<S>,
    qubit_l_values: &[S],
    band: Option<(S, S)>,
) -> Result<FilterComparison<S>> {
    if spec.qubits.is_empty() {
        return Err(Error::Domain(
            "cell has no qubit branch to compare".into(),
        ));
    }
    let map = crate::synth::branch_map(spec);
    let with_net = crate::synth::build_unit_cell(spec)?;
    let without_net = crate::synth::build_no_filter_variant(spec)?;
    let with_filter = sweep_element(&with_net, &map, "Lqb1", qubit_l_values, "qubit_1", band)?;
    let without_filter =
        sweep_element(&without_net, &map, "Lqb1", qubit_l_values, "qubit_1", band)?;
    let ten = S::of(10.0);
    let suppression_db = with_filter
        .tracked_modes()
        .iter()
        .zip(without_filter.tracked_modes())
        .map(|(w, wo)| match (w, wo) {
            (Some(w), Some(wo)) => match (w.q, wo.q) {
                (Some(qw), Some(qwo)) => {
                    Some((wo.frequency_hz(), ten * (qw.log10() - qwo.log10())))
                }
                _ => None,
            },
            _ => None,
        })
        .collect();
    Ok(FilterComparison {
        with_filter,
        without_filter,
        suppression_db,
    })
}
