//! Quality-factor analysis of port admittances.
//!
//! The central quantity is Q(w) = w*C / Re[Y(w)]: the quality factor a
//! resonance of capacitance C would have if it were loaded by the admittance
//! Y seen at the probe port. Since C is a constant scale, the curve w/Re[Y]
//! normalized to its minimum captures the frequency selectivity of the
//! environment; its minimum marks the passband center and its rise the
//! stopband protection.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::netlist::{FrequencyGrid, Netlist};
use crate::network::port_admittance_sweep;
use crate::scalar::{hz_from_omega, Scalar};

/// Q = w_r * C / Re[Y(w_r)] for a mode of capacitance `c` loaded by `y`.
pub fn q_from_admittance<S: Scalar>(omega_r: S, c: S, y: Complex<S>) -> Result<S> {
    if omega_r <= S::zero() || c <= S::zero() {
        return Err(Error::Domain(
            "q_from_admittance needs positive frequency and capacitance".into(),
        ));
    }
    if y.re <= S::zero() {
        return Err(Error::UndefinedQ {
            f_hz: hz_from_omega(omega_r).to_f64_lossy(),
            re_y: y.re.to_f64_lossy(),
        });
    }
    Ok(omega_r * c / y.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Raw w/Re[Y(w)] values: quality factor per farad of mode capacitance.
    PerFarad,
    /// Divided by the grid minimum, so min(curve) is exactly 1.
    Normalized,
}

/// A sampled Q-vs-frequency curve. Grid points where the response is lossless
/// or sits on a tagged pole carry no value.
#[derive(Debug, Clone)]
pub struct QCurve<S> {
    omegas: Vec<S>,
    values: Vec<Option<S>>,
    kind: CurveKind,
}

impl<S: Scalar> QCurve<S> {
    pub fn from_parts(omegas: Vec<S>, values: Vec<Option<S>>, kind: CurveKind) -> Result<Self> {
        if omegas.len() != values.len() {
            return Err(Error::Domain("curve arrays differ in length".into()));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("curve grid must be strictly increasing".into()));
        }
        Ok(QCurve { omegas, values, kind })
    }

    pub fn omegas(&self) -> &[S] {
        &self.omegas
    }

    pub fn values(&self) -> &[Option<S>] {
        &self.values
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Index of the smallest defined value.
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for (i, v) in self.values.iter().enumerate() {
            if let Some(v) = *v {
                if best.map_or(true, |(_, b)| v < b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Linearly interpolated value at `omega`. Fails outside the grid span or
    /// when a bracketing sample is undefined.
    pub fn value_at(&self, omega: S) -> Result<S> {
        let n = self.omegas.len();
        if n == 0 || omega < self.omegas[0] || omega > self.omegas[n - 1] {
            return Err(Error::Domain(format!(
                "frequency {:.6e} Hz outside curve span",
                hz_from_omega(omega).to_f64_lossy()
            )));
        }
        let j = match self.omegas.iter().position(|&w| w >= omega) {
            Some(0) => {
                return self.values[0].ok_or(Error::AllLossless);
            }
            Some(j) => j,
            None => unreachable!(),
        };
        let (w0, w1) = (self.omegas[j - 1], self.omegas[j]);
        let undefined = || {
            Error::Domain(format!(
                "curve undefined near {:.6e} Hz",
                hz_from_omega(omega).to_f64_lossy()
            ))
        };
        let v0 = self.values[j - 1].ok_or_else(undefined)?;
        let v1 = self.values[j].ok_or_else(undefined)?;
        let t = (omega - w0) / (w1 - w0);
        Ok(v0 + (v1 - v0) * t)
    }
}

/// Raw w/Re[Y(w)] curve at `port_label` over `grid`.
pub fn raw_q_curve<S: Scalar>(
    net: &Netlist<S>,
    port_label: &str,
    grid: &FrequencyGrid<S>,
) -> Result<QCurve<S>> {
    let ys = port_admittance_sweep(net, port_label, grid)?;
    let values = grid
        .omegas()
        .iter()
        .zip(&ys)
        .map(|(&w, y)| match y {
            Some(y) if y.re > S::zero() => Some(w / y.re),
            _ => None,
        })
        .collect();
    QCurve::from_parts(grid.omegas().to_vec(), values, CurveKind::PerFarad)
}

/// Normalize a curve by its grid minimum; the argmin sample becomes exactly 1.
pub fn normalize_curve<S: Scalar>(curve: &QCurve<S>) -> Result<QCurve<S>> {
    let idx = curve.argmin().ok_or(Error::AllLossless)?;
    let min = curve.values()[idx].unwrap();
    let values = curve
        .values()
        .iter()
        .map(|v| v.map(|x| x / min))
        .collect();
    QCurve::from_parts(curve.omegas().to_vec(), values, CurveKind::Normalized)
}

/// w/Re[Y(w)] at `port_label`, normalized to its minimum over the grid.
pub fn normalized_q_curve<S: Scalar>(
    net: &Netlist<S>,
    port_label: &str,
    grid: &FrequencyGrid<S>,
) -> Result<QCurve<S>> {
    normalize_curve(&raw_q_curve(net, port_label, grid)?)
}

/// Passband descriptors extracted from a Q curve. `bandwidth` and `q` are
/// absent when a factor-of-two crossing runs off the grid on either side.
#[derive(Debug, Clone, Copy)]
pub struct PassbandMetrics<S> {
    /// Center (rad/s): grid argmin refined by a 3-point parabola.
    pub center: S,
    /// Lower/upper crossings (rad/s) of twice the minimum value.
    pub lower: Option<S>,
    pub upper: Option<S>,
    /// upper - lower, when both crossings exist.
    pub bandwidth: Option<S>,
    /// center / bandwidth.
    pub q: Option<S>,
}

/// Locate the passband of a Q curve: its minimum and the factor-of-two
/// crossings on each side.
pub fn passband_metrics<S: Scalar>(curve: &QCurve<S>) -> Result<PassbandMetrics<S>> {
    let idx = curve.argmin().ok_or(Error::AllLossless)?;
    let n = curve.len();
    if idx == 0 || idx == n - 1 {
        return Err(Error::NoPassband(
            "curve minimum sits on the grid edge".into(),
        ));
    }
    let v = curve.values();
    let w = curve.omegas();
    let y_min = v[idx].unwrap();
    let y_l = v[idx - 1].ok_or_else(|| {
        Error::NoPassband("sample left of the minimum is undefined".into())
    })?;
    let y_r = v[idx + 1].ok_or_else(|| {
        Error::NoPassband("sample right of the minimum is undefined".into())
    })?;
    if y_l == y_min && y_r == y_min {
        return Err(Error::NoPassband("curve is flat around its minimum".into()));
    }

    // vertex of the parabola through the three samples around the minimum
    let (x1, x2, x3) = (w[idx - 1], w[idx], w[idx + 1]);
    let d21 = x2 - x1;
    let d23 = x2 - x3;
    let num = d21 * d21 * (y_min - y_r) - d23 * d23 * (y_min - y_l);
    let den = d21 * (y_min - y_r) - d23 * (y_min - y_l);
    let center = if den == S::zero() {
        x2
    } else {
        x2 - num / (S::of(2.0) * den)
    };

    let threshold = S::of(2.0) * y_min;
    let cross = |from: usize, step_up: bool| -> Option<S> {
        // walk away from the minimum until the curve first reaches the
        // threshold, then place the crossing by linear interpolation
        let mut prev = idx;
        let mut k = from;
        loop {
            let yk = v[k]?;
            if yk >= threshold {
                let yp = v[prev]?;
                let t = (threshold - yp) / (yk - yp);
                return Some(w[prev] + (w[k] - w[prev]) * t);
            }
            prev = k;
            if step_up {
                k += 1;
                if k >= n {
                    return None;
                }
            } else {
                if k == 0 {
                    return None;
                }
                k -= 1;
            }
        }
    };
    let lower = cross(idx - 1, false);
    let upper = cross(idx + 1, true);
    let bandwidth = match (lower, upper) {
        (Some(lo), Some(hi)) => Some(hi - lo),
        _ => None,
    };
    let q = bandwidth.map(|bw| center / bw);
    Ok(PassbandMetrics {
        center,
        lower,
        upper,
        bandwidth,
        q,
    })
}

/// Ratio of the curve at a stop frequency to the curve at a pass frequency,
/// in dB: 10*log10(v(stop)/v(pass)). Off-grid frequencies are linearly
/// interpolated. Swapping the arguments negates the result exactly.
pub fn filtering_ratio<S: Scalar>(curve: &QCurve<S>, omega_stop: S, omega_pass: S) -> Result<S> {
    let v_stop = curve.value_at(omega_stop)?;
    let v_pass = curve.value_at(omega_pass)?;
    if v_stop <= S::zero() || v_pass <= S::zero() {
        return Err(Error::Domain("curve values must be positive".into()));
    }
    let ten = S::of(10.0);
    Ok(ten * (v_stop.log10() - v_pass.log10()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::Netlist;
    use approx::assert_relative_eq;

    const TWO_PI: f64 = std::f64::consts::TAU;

    #[test]
    fn q_from_admittance_reference_point() {
        let q = q_from_admittance(TWO_PI * 9.8e9, 400e-15, Complex::new(0.02, 0.0)).unwrap();
        assert_relative_eq!(q, 1.2315, max_relative = 1e-4);
        // linear in C
        let q2 = q_from_admittance(TWO_PI * 9.8e9, 800e-15, Complex::new(0.02, 0.0)).unwrap();
        assert_relative_eq!(q2, 2.0 * q, max_relative = 1e-14);
        // reactive part is irrelevant
        let q3 = q_from_admittance(TWO_PI * 9.8e9, 400e-15, Complex::new(0.02, 5.0)).unwrap();
        assert_eq!(q, q3);
    }

    #[test]
    fn q_undefined_for_lossless_admittance() {
        assert!(matches!(
            q_from_admittance(1e10, 1e-13, Complex::new(0.0, 1e-3)),
            Err(Error::UndefinedQ { .. })
        ));
        assert!(matches!(
            q_from_admittance(1e10, 1e-13, Complex::new(-1e-9, 0.0)),
            Err(Error::UndefinedQ { .. })
        ));
    }

    #[test]
    fn weak_coupling_qext_matches_inverse_square_law() {
        // mode capacitor probed where its inductor would sit; the environment
        // is a small series capacitor into a 50 ohm load
        let c = 400e-15;
        let cc = 1.5e-15;
        let net = Netlist::builder()
            .capacitor("C", "res", "gnd", c)
            .capacitor("Cc", "res", "load", cc)
            .resistor("Rl", "load", "gnd", 50.0)
            .port("P", "res", "gnd", 50.0)
            .build()
            .unwrap();
        for f in [4.4e9, 9.8e9, 15.0e9] {
            let w = TWO_PI * f;
            let y = crate::network::port_admittance(&net, "P", w).unwrap();
            let q = q_from_admittance(w, c, y).unwrap();
            let q_closed_form = c / (50.0 * cc * cc * w);
            assert_relative_eq!(q, q_closed_form, max_relative = 2e-2);
        }
    }

    #[test]
    fn normalized_curve_minimum_is_exactly_one() {
        let net = Netlist::builder()
            .resistor("R", "n1", "gnd", 50.0)
            .capacitor("C", "n1", "gnd", 100e-15)
            .port("P", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let grid = FrequencyGrid::linspace_hz(4e9, 15e9, 101).unwrap();
        let curve = normalized_q_curve(&net, "P", &grid).unwrap();
        // flat Re[Y] makes the curve proportional to frequency: min at start
        let idx = curve.argmin().unwrap();
        assert_eq!(idx, 0);
        assert_eq!(curve.values()[idx].unwrap(), 1.0);
        assert!(curve.values().iter().all(|v| v.unwrap() >= 1.0));
        // and the metrics refuse an edge minimum
        assert!(matches!(
            passband_metrics(&curve),
            Err(Error::NoPassband(_))
        ));
    }

    #[test]
    fn all_lossless_grid_is_an_error() {
        let net = Netlist::builder()
            .capacitor("C", "n1", "gnd", 100e-15)
            .port("P", "n1", "gnd", 50.0)
            .build()
            .unwrap();
        let grid = FrequencyGrid::linspace_hz(4e9, 15e9, 11).unwrap();
        assert!(matches!(
            normalized_q_curve(&net, "P", &grid),
            Err(Error::AllLossless)
        ));
    }

    /// Scaling every conductance by k scales the raw curve by 1/k and leaves
    /// the normalized curve and its argmin untouched. Brute-forced on a
    /// four-element shunt circuit where Re[Y] is the plain conductance sum.
    #[test]
    fn loss_scaling_shifts_raw_curve_and_preserves_argmin() {
        let build = |k: f64| {
            Netlist::builder()
                .resistor("R1", "n1", "gnd", 240.0 / k)
                .resistor("R2", "n1", "gnd", 610.0 / k)
                .inductor("L", "n1", "gnd", 1.8e-9)
                .capacitor("C", "n1", "gnd", 146.52e-15)
                .port("P", "n1", "gnd", 50.0)
                .build()
                .unwrap()
        };
        let grid = FrequencyGrid::linspace_hz(4e9, 15e9, 201).unwrap();
        let base = raw_q_curve(&build(1.0), "P", &grid).unwrap();
        let scaled = raw_q_curve(&build(3.7), "P", &grid).unwrap();
        for (a, b) in base.values().iter().zip(scaled.values()) {
            assert_relative_eq!(a.unwrap() / 3.7, b.unwrap(), max_relative = 1e-12);
        }
        assert_eq!(base.argmin(), scaled.argmin());
        let na = normalize_curve(&base).unwrap();
        let nb = normalize_curve(&scaled).unwrap();
        for (a, b) in na.values().iter().zip(nb.values()) {
            assert_relative_eq!(a.unwrap(), b.unwrap(), max_relative = 1e-12);
        }
    }

    fn lorentzian_curve(q: f64, f0: f64) -> QCurve<f64> {
        let grid = FrequencyGrid::linspace_hz(4e9, 15e9, 2001).unwrap();
        let values = grid
            .omegas()
            .iter()
            .map(|&w| {
                let x = (w / (TWO_PI * f0)) - 1.0;
                Some(1.0 + (2.0 * q * x).powi(2))
            })
            .collect();
        QCurve::from_parts(grid.omegas().to_vec(), values, CurveKind::Normalized).unwrap()
    }

    #[test]
    fn passband_metrics_recover_analytic_lorentzian_width() {
        let curve = lorentzian_curve(10.9, 9.8e9);
        let m = passband_metrics(&curve).unwrap();
        assert_relative_eq!(m.center / TWO_PI, 9.8e9, max_relative = 1e-6);
        let bw = m.bandwidth.unwrap() / TWO_PI;
        assert_relative_eq!(bw, 9.8e9 / 10.9, max_relative = 1e-2);
        assert_relative_eq!(m.q.unwrap(), 10.9, max_relative = 1e-2);
        assert!(m.lower.unwrap() < m.center && m.center < m.upper.unwrap());
    }

    #[test]
    fn narrow_span_yields_partial_metrics() {
        // span only covers the upper crossing
        let grid = FrequencyGrid::linspace_hz(9.7e9, 12e9, 801).unwrap();
        let values = grid
            .omegas()
            .iter()
            .map(|&w| {
                let x = (w / (TWO_PI * 9.8e9)) - 1.0;
                Some(1.0 + (2.0 * 10.9 * x).powi(2))
            })
            .collect();
        let curve =
            QCurve::from_parts(grid.omegas().to_vec(), values, CurveKind::Normalized).unwrap();
        let m = passband_metrics(&curve).unwrap();
        assert!(m.lower.is_none());
        assert!(m.upper.is_some());
        assert!(m.bandwidth.is_none() && m.q.is_none());
    }

    #[test]
    fn flat_curve_has_no_passband() {
        let grid = FrequencyGrid::linspace_hz(4e9, 15e9, 51).unwrap();
        let values = vec![Some(1.0); 51];
        let curve =
            QCurve::from_parts(grid.omegas().to_vec(), values, CurveKind::Normalized).unwrap();
        assert!(matches!(passband_metrics(&curve), Err(Error::NoPassband(_))));
    }

    #[test]
    fn filtering_ratio_is_exactly_antisymmetric_and_zero_on_equal_points() {
        let curve = lorentzian_curve(10.9, 9.8e9);
        let a = TWO_PI * 4.4e9;
        let b = TWO_PI * 9.8e9;
        let r_ab = filtering_ratio(&curve, a, b).unwrap();
        let r_ba = filtering_ratio(&curve, b, a).unwrap();
        assert_eq!(r_ab, -r_ba);
        assert_eq!(filtering_ratio(&curve, a, a).unwrap(), 0.0);
        assert!(r_ab > 20.0, "stopband ratio should be tens of dB, got {r_ab}");
        // out of span
        assert!(filtering_ratio(&curve, TWO_PI * 1e9, b).is_err());
    }

    #[test]
    fn filtering_ratio_matches_hand_built_values() {
        // two-point curve with a known ratio: v = 10 at stop, 1 at pass
        let curve = QCurve::from_parts(
            vec![1.0, 2.0, 3.0],
            vec![Some(10.0), Some(1.0), Some(10.0)],
            CurveKind::Normalized,
        )
        .unwrap();
        let r = filtering_ratio(&curve, 1.0, 2.0).unwrap();
        assert_relative_eq!(r, 10.0, max_relative = 1e-12);
        // interpolated midpoint: v = 5.5
        let r_mid = filtering_ratio(&curve, 1.5, 2.0).unwrap();
        assert_relative_eq!(r_mid, 10.0 * (5.5f64).log10(), max_relative = 1e-12);
    }

    #[test]
    fn ratio_is_invariant_under_normalization() {
        let net = Netlist::builder()
            .resistor("R1", "n1", "gnd", 240.0)
            .inductor("L", "n1", "gnd", 1.8e-9)
            .capacitor("C", "n1", "gnd", 146.52e-15)
            .capacitor("Cc", "in", "n1", 1.73e-15)
            .port("P", "in", "gnd", 50.0)
            .build()
            .unwrap();
        let grid = FrequencyGrid::linspace_hz(4e9, 15e9, 401).unwrap();
        let raw = raw_q_curve(&net, "P", &grid).unwrap();
        let norm = normalize_curve(&raw).unwrap();
        let (a, b) = (TWO_PI * 4.4e9, TWO_PI * 9.8e9);
        assert_relative_eq!(
            filtering_ratio(&raw, a, b).unwrap(),
            filtering_ratio(&norm, a, b).unwrap(),
            max_relative = 1e-9
        );
    }
}
