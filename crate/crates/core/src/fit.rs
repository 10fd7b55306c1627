//! Reflection-spectroscopy fitting.
//!
//! One-port traces are fit to a diameter-corrected asymmetric reflection
//! model with explicit cable delay,
//!
//! S11(f) = A e^{i a} e^{-2 pi i f tau} [1 - d e^{i phi} / (1 + 2 i Q_t (f/f0 - 1))],
//!
//! where d = 2 Q_tot / Q_ext is the dip diameter and phi absorbs impedance
//! mismatch. The fit runs complex least squares (residuals stacked as
//! re/im) with an analytic Jacobian; uncertainties come from the local
//! quadratic model at the optimum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::analysis::QCurve;
use crate::error::{Error, Result};
use crate::lm::{minimize, LeastSquares, LmOptions};
use crate::scalar::{omega_from_hz, Scalar};

/// A measured (or synthesized) one-port reflection trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionTrace<S> {
    freqs_hz: Vec<S>,
    s11: Vec<Complex<S>>,
}

impl<S: Scalar> ReflectionTrace<S> {
    pub fn new(freqs_hz: Vec<S>, s11: Vec<Complex<S>>) -> Result<Self> {
        if freqs_hz.len() != s11.len() {
            return Err(Error::Domain(
                "trace frequency and S11 lists differ in length".into(),
            ));
        }
        if freqs_hz.is_empty() {
            return Err(Error::Domain("trace holds no points".into()));
        }
        if freqs_hz[0] <= S::zero() || freqs_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "trace frequencies must be positive and strictly increasing".into(),
            ));
        }
        if s11.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("trace S11 values must be finite".into()));
        }
        Ok(ReflectionTrace { freqs_hz, s11 })
    }

    pub fn freqs_hz(&self) -> &[S] {
        &self.freqs_hz
    }

    pub fn s11(&self) -> &[Complex<S>] {
        &self.s11
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }
}

/// Non-resonant environment of a fit: overall scale, global phase, cable
/// delay, and the asymmetry (impedance-mismatch) angle of the dip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitEnvironment<S> {
    pub amplitude: S,
    pub phase_rad: S,
    pub delay_s: S,
    pub asymmetry_rad: S,
}

/// One-sigma uncertainties of the headline parameters; zero when the
/// covariance was unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitUncertainty<S> {
    pub f0: S,
    pub q_int: S,
    pub q_ext: S,
    pub q_tot: S,
}

/// Fitted reflection resonance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorFit<S> {
    pub f0: S,
    pub q_int: S,
    pub q_ext: S,
    pub environment: FitEnvironment<S>,
    pub uncertainty: FitUncertainty<S>,
    /// Euclidean norm of the stacked re/im residuals at the optimum.
    pub residual_norm: S,
    pub converged: bool,
}

impl<S: Scalar> ResonatorFit<S> {
    /// A fit record from bare parameters, e.g. to drive trace synthesis.
    pub fn from_parameters(f0: S, q_int: S, q_ext: S, environment: FitEnvironment<S>) -> Self {
        ResonatorFit {
            f0,
            q_int,
            q_ext,
            environment,
            uncertainty: FitUncertainty::default(),
            residual_norm: S::zero(),
            converged: true,
        }
    }

    /// Total (loaded) quality factor, (1/Q_int + 1/Q_ext)^-1.
    pub fn q_tot(&self) -> S {
        S::one() / (S::one() / self.q_int + S::one() / self.q_ext)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f0 <= S::zero() || self.q_int <= S::zero() || self.q_ext <= S::zero() {
            return Err(Error::Domain(
                "fit needs positive f0, Q_int, and Q_ext".into(),
            ));
        }
        if self.environment.amplitude <= S::zero() {
            return Err(Error::Domain("fit amplitude must be positive".into()));
        }
        Ok(())
    }
}

fn phasor<S: Scalar>(theta: S) -> Complex<S> {
    Complex::new(theta.cos(), theta.sin())
}

/// Model evaluation at one frequency for packed parameters
/// p = [f0, q_t, d, phi, a, alpha, tau].
fn model_point<S: Scalar>(p: &DVector<S>, f: S) -> Complex<S> {
    let (f0, q_t, d, phi) = (p[0], p[1], p[2], p[3]);
    let (a, alpha, tau) = (p[4], p[5], p[6]);
    let two_pi = S::two_pi();
    let env = phasor(alpha - two_pi * f * tau) * Complex::new(a, S::zero());
    let x = f / f0 - S::one();
    let denom = Complex::new(S::one(), S::of(2.0) * q_t * x);
    env * (Complex::new(S::one(), S::zero()) - phasor(phi) * Complex::new(d, S::zero()) / denom)
}

/// Evaluate the reflection model of `fit` on `grid_hz` and add seeded
/// complex Gaussian noise with per-quadrature standard deviation `noise`.
pub fn synthesize_trace<S: Scalar>(
    fit: &ResonatorFit<S>,
    grid_hz: &[S],
    noise: S,
    seed: u64,
) -> Result<ReflectionTrace<S>> {
    fit.validate()?;
    if noise < S::zero() {
        return Err(Error::Domain("noise level must be non-negative".into()));
    }
    let q_tot = fit.q_tot();
    let d = S::of(2.0) * q_tot / fit.q_ext;
    let p = DVector::from_vec(vec![
        fit.f0,
        q_tot,
        d,
        fit.environment.asymmetry_rad,
        fit.environment.amplitude,
        fit.environment.phase_rad,
        fit.environment.delay_s,
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.to_f64_lossy())
        .map_err(|e| Error::Domain(format!("noise distribution: {e}")))?;
    let s11 = grid_hz
        .iter()
        .map(|&f| {
            let clean = model_point(&p, f);
            clean + Complex::new(S::of(normal.sample(&mut rng)), S::of(normal.sample(&mut rng)))
        })
        .collect();
    ReflectionTrace::new(grid_hz.to_vec(), s11)
}

/// The complex reflection model as a stacked-real least-squares problem.
struct ReflectionProblem<'a, S> {
    trace: &'a ReflectionTrace<S>,
    f_lo: S,
    f_hi: S,
}

impl<S: Scalar> ReflectionProblem<'_, S> {
    fn admissible(&self, p: &DVector<S>) -> bool {
        let (f0, q_t, d, a) = (p[0], p[1], p[2], p[4]);
        f0 > self.f_lo / S::of(2.0)
            && f0 < self.f_hi * S::of(2.0)
            && q_t > S::one()
            && d > S::zero()
            && d < S::of(2.0)
            && a > S::zero()
    }
}

impl<S: Scalar> LeastSquares<S> for ReflectionProblem<'_, S> {
    fn residuals(&self, p: &DVector<S>) -> Option<DVector<S>> {
        if !self.admissible(p) {
            return None;
        }
        let n = self.trace.len();
        let mut r = DVector::zeros(2 * n);
        for (k, (&f, &z)) in self
            .trace
            .freqs_hz()
            .iter()
            .zip(self.trace.s11())
            .enumerate()
        {
            let diff = model_point(p, f) - z;
            r[k] = diff.re;
            r[n + k] = diff.im;
        }
        Some(r)
    }

    fn jacobian(&self, p: &DVector<S>) -> Option<DMatrix<S>> {
        if !self.admissible(p) {
            return None;
        }
        let (f0, q_t, d, phi) = (p[0], p[1], p[2], p[3]);
        let (a, _alpha, tau) = (p[4], p[5], p[6]);
        let two_pi = S::two_pi();
        let n = self.trace.len();
        let mut jac = DMatrix::zeros(2 * n, 7);
        let one = Complex::new(S::one(), S::zero());
        let i_unit = Complex::new(S::zero(), S::one());
        for (k, &f) in self.trace.freqs_hz().iter().enumerate() {
            let env = phasor(p[5] - two_pi * f * tau) * Complex::new(a, S::zero());
            let x = f / f0 - S::one();
            let denom = Complex::new(S::one(), S::of(2.0) * q_t * x);
            let dip = phasor(phi) * Complex::new(d, S::zero()) / denom;
            let h = env * (one - dip);
            // columns: f0, q_t, d, phi, a, alpha, tau
            let dh = [
                env * dip / denom * i_unit
                    * Complex::new(S::of(-2.0) * q_t * f / (f0 * f0), S::zero()),
                env * dip / denom * i_unit * Complex::new(S::of(2.0) * x, S::zero()),
                -env * dip / Complex::new(d, S::zero()),
                -env * dip * i_unit,
                h / Complex::new(a, S::zero()),
                h * i_unit,
                h * i_unit * Complex::new(-two_pi * f, S::zero()),
            ];
            for (j, v) in dh.iter().enumerate() {
                jac[(k, j)] = v.re;
                jac[(n + k, j)] = v.im;
            }
        }
        Some(jac)
    }
}

/// Unwrapped phases of a trace (no 2-pi jumps between neighbors).
fn unwrapped_phases<S: Scalar>(s11: &[Complex<S>]) -> Vec<S> {
    let mut out = Vec::with_capacity(s11.len());
    let two_pi = S::two_pi();
    let pi = S::pi();
    for z in s11 {
        let mut ph = z.im.atan2(z.re);
        if let Some(&prev) = out.last() {
            while ph - prev > pi {
                ph -= two_pi;
            }
            while ph - prev < -pi {
                ph += two_pi;
            }
        }
        out.push(ph);
    }
    out
}

/// Least-squares slope of y against x over the given index set.
fn slope_over<S: Scalar>(xs: &[S], ys: &[S], idx: &[usize]) -> S {
    let n = S::of(idx.len() as f64);
    let mean = |vals: &dyn Fn(usize) -> S| {
        idx.iter().fold(S::zero(), |acc, &i| acc + vals(i)) / n
    };
    let xbar = mean(&|i| xs[i]);
    let ybar = mean(&|i| ys[i]);
    let mut num = S::zero();
    let mut den = S::zero();
    for &i in idx {
        num += (xs[i] - xbar) * (ys[i] - ybar);
        den += (xs[i] - xbar) * (xs[i] - xbar);
    }
    if den > S::zero() {
        num / den
    } else {
        S::zero()
    }
}

struct InitialGuess<S> {
    f0: S,
    q_t: S,
    depth: S,
    tau: S,
    alpha: S,
    amplitude: S,
}

/// Initial parameter estimates: delay from the off-resonant phase slope,
/// f0 from the |S11| minimum, Q from the half-depth width, diameter from the
/// dip depth.
fn initial_guess<S: Scalar>(trace: &ReflectionTrace<S>) -> Result<InitialGuess<S>> {
    let n = trace.len();
    let freqs = trace.freqs_hz();
    let phases = unwrapped_phases(trace.s11());
    let wing = (n / 5).max(2).min(n / 2);
    let idx: Vec<usize> = (0..wing).chain(n - wing..n).collect();
    // fit each wing's phase slope separately: a single line across both
    // wings would absorb the resonance's phase winding into the slope
    let left: Vec<usize> = (0..wing).collect();
    let right: Vec<usize> = (n - wing..n).collect();
    let slope = (slope_over(freqs, &phases, &left) + slope_over(freqs, &phases, &right))
        / S::of(2.0);
    let tau = -slope / S::two_pi();

    // remove the delay before amplitude analysis
    let flattened: Vec<Complex<S>> = trace
        .s11()
        .iter()
        .zip(freqs)
        .map(|(&z, &f)| z * phasor(S::two_pi() * f * tau))
        .collect();
    let mags: Vec<S> = flattened.iter().map(|z| z.norm_sqr().sqrt()).collect();
    let k_min = mags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite magnitudes"))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let baseline_pts: Vec<S> = idx.iter().map(|&i| mags[i]).collect();
    let amplitude =
        baseline_pts.iter().fold(S::zero(), |a, &b| a + b) / S::of(baseline_pts.len() as f64);
    let min_mag = mags[k_min];
    if amplitude <= S::zero() || (amplitude - min_mag) < S::of(0.02) * amplitude {
        return Err(Error::NoResonance(
            "no identifiable dip above the trace baseline".into(),
        ));
    }
    let f0 = freqs[k_min];
    let depth = min_mag / amplitude;

    // half-depth crossings on each side of the dip
    let level = (amplitude + min_mag) / S::of(2.0);
    let cross = |dir: isize| -> Option<S> {
        let mut k = k_min as isize;
        loop {
            let next = k + dir;
            if next < 0 || next as usize >= n {
                return None;
            }
            if mags[next as usize] >= level {
                let (ka, kb) = (k as usize, next as usize);
                let t = (level - mags[ka]) / (mags[kb] - mags[ka]);
                return Some(freqs[ka] + (freqs[kb] - freqs[ka]) * t);
            }
            k = next;
        }
    };
    let span = freqs[n - 1] - freqs[0];
    let width = match (cross(-1), cross(1)) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => (f0 - l) * S::of(2.0),
        (None, Some(r)) => (r - f0) * S::of(2.0),
        (None, None) => span / S::of(10.0),
    };
    let q_t = (f0 / width).max(S::of(2.0));

    // global phase after delay removal, from the trace wings
    let mut anchor = Complex::new(S::zero(), S::zero());
    for &i in &idx {
        anchor += flattened[i];
    }
    let alpha = anchor.im.atan2(anchor.re);

    Ok(InitialGuess {
        f0,
        q_t,
        depth,
        tau,
        alpha,
        amplitude,
    })
}

fn wrap_angle<S: Scalar>(theta: S) -> S {
    let two_pi = S::two_pi();
    let mut t = theta;
    while t > S::pi() {
        t -= two_pi;
    }
    while t < -S::pi() {
        t += two_pi;
    }
    t
}

/// Fit the reflection model to a trace.
///
/// Both coupling branches (dip diameter above and below unity) are tried and
/// the lower-residual optimum wins. Non-convergence is reported through the
/// `converged` flag with residuals intact, never silently.
pub fn fit_reflection<S: Scalar>(trace: &ReflectionTrace<S>) -> Result<ResonatorFit<S>> {
    if trace.len() < 20 {
        return Err(Error::Domain(format!(
            "fitting needs at least 20 trace points, got {}",
            trace.len()
        )));
    }
    let guess = initial_guess(trace)?;
    let problem = ReflectionProblem {
        trace,
        f_lo: trace.freqs_hz()[0],
        f_hi: trace.freqs_hz()[trace.len() - 1],
    };
    let opts = LmOptions::default();
    let mut best: Option<crate::lm::LmReport<S>> = None;
    for d0 in [
        (S::one() - guess.depth).max(S::of(1e-3)),
        (S::one() + guess.depth).min(S::of(2.0) - S::of(1e-3)),
    ] {
        let x0 = DVector::from_vec(vec![
            guess.f0,
            guess.q_t,
            d0,
            S::zero(),
            guess.amplitude,
            guess.alpha,
            guess.tau,
        ]);
        let report = minimize(&problem, x0, &opts);
        let better = match &best {
            Some(b) => {
                report.residual_norm < b.residual_norm || (report.converged && !b.converged)
            }
            None => true,
        };
        if better {
            best = Some(report);
        }
    }
    let report = best.expect("two starts were evaluated");
    let p = &report.params;
    let (f0, q_t, d, phi) = (p[0], p[1], p[2], p[3]);
    let (a, alpha, tau) = (p[4], p[5], p[6]);
    let q_ext = S::of(2.0) * q_t / d;
    let q_int = q_t / (S::one() - d / S::of(2.0));

    // delta-method uncertainties from the parameter covariance
    let mut unc = FitUncertainty::default();
    if let Some(cov) = &report.covariance {
        let var = |g: &[(usize, S)]| -> S {
            let mut v = S::zero();
            for &(i, gi) in g {
                for &(j, gj) in g {
                    v += gi * cov[(i, j)] * gj;
                }
            }
            v.max(S::zero()).sqrt()
        };
        unc.f0 = var(&[(0, S::one())]);
        unc.q_tot = var(&[(1, S::one())]);
        unc.q_ext = var(&[(1, S::of(2.0) / d), (2, S::of(-2.0) * q_t / (d * d))]);
        let half = S::one() - d / S::of(2.0);
        unc.q_int = var(&[
            (1, S::one() / half),
            (2, q_t / (S::of(2.0) * half * half)),
        ]);
    }

    let fit = ResonatorFit {
        f0,
        q_int,
        q_ext,
        environment: FitEnvironment {
            amplitude: a,
            phase_rad: wrap_angle(alpha),
            delay_s: tau,
            asymmetry_rad: wrap_angle(phi),
        },
        uncertainty: unc,
        residual_norm: report.residual_norm,
        converged: report.converged,
    };
    fit.validate()?;
    Ok(fit)
}

/// Aggregate statistics over a set of fits (medians/stds of the Q factors).
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary<S> {
    pub n_fits: usize,
    pub n_converged: usize,
    pub median_q_int: S,
    pub std_q_int: S,
    pub median_q_ext: S,
    pub std_q_ext: S,
    /// Median of the per-fit Q_tot values.
    pub median_q_tot: S,
    pub std_q_tot: S,
    /// Q_tot composed from the median Q_int and median Q_ext.
    pub q_tot_from_medians: S,
    /// Per-resonator table sorted by f0 (includes non-converged fits,
    /// flagged; they are excluded from the statistics above).
    pub rows: Vec<SummaryRow<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow<S> {
    pub f0: S,
    pub q_int: S,
    pub q_ext: S,
    pub q_tot: S,
    pub converged: bool,
}

fn median<S: Scalar>(sorted: &[S]) -> S {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / S::of(2.0)
    }
}

fn median_and_std<S: Scalar>(values: &[S]) -> (S, S) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let med = median(&sorted);
    let n = sorted.len();
    if n < 2 {
        return (med, S::zero());
    }
    let mean = sorted.iter().fold(S::zero(), |a, &b| a + b) / S::of(n as f64);
    let var = sorted
        .iter()
        .fold(S::zero(), |a, &b| a + (b - mean) * (b - mean))
        / S::of((n - 1) as f64);
    (med, var.sqrt())
}

/// Summarize converged fits; non-converged entries are counted and listed
/// but excluded from the statistics.
pub fn aggregate_fits<S: Scalar>(fits: &[ResonatorFit<S>]) -> Result<FitSummary<S>> {
    let converged: Vec<&ResonatorFit<S>> = fits.iter().filter(|f| f.converged).collect();
    if converged.is_empty() {
        return Err(Error::Domain(
            "no converged fits to aggregate".into(),
        ));
    }
    let q_int: Vec<S> = converged.iter().map(|f| f.q_int).collect();
    let q_ext: Vec<S> = converged.iter().map(|f| f.q_ext).collect();
    let q_tot: Vec<S> = converged.iter().map(|f| f.q_tot()).collect();
    let (median_q_int, std_q_int) = median_and_std(&q_int);
    let (median_q_ext, std_q_ext) = median_and_std(&q_ext);
    let (median_q_tot, std_q_tot) = median_and_std(&q_tot);
    let q_tot_from_medians = S::one() / (S::one() / median_q_int + S::one() / median_q_ext);
    let mut rows: Vec<SummaryRow<S>> = fits
        .iter()
        .map(|f| SummaryRow {
            f0: f.f0,
            q_int: f.q_int,
            q_ext: f.q_ext,
            q_tot: f.q_tot(),
            converged: f.converged,
        })
        .collect();
    rows.sort_by(|a, b| a.f0.partial_cmp(&b.f0).expect("finite frequencies"));
    Ok(FitSummary {
        n_fits: fits.len(),
        n_converged: converged.len(),
        median_q_int,
        std_q_int,
        median_q_ext,
        std_q_ext,
        median_q_tot,
        std_q_tot,
        q_tot_from_medians,
        rows,
    })
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman_rank<S: Scalar>(xs: &[S], ys: &[S]) -> Option<S> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rank = |vals: &[S]| -> Vec<S> {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite values"));
        let mut ranks = vec![S::zero(); vals.len()];
        let mut i = 0;
        while i < order.len() {
            let mut j = i;
            while j + 1 < order.len() && vals[order[j + 1]] == vals[order[i]] {
                j += 1;
            }
            let avg = S::of((i + j) as f64 / 2.0 + 1.0);
            for &k in &order[i..=j] {
                ranks[k] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = S::of(xs.len() as f64);
    let mean = (n + S::one()) / S::of(2.0);
    let mut num = S::zero();
    let mut dx = S::zero();
    let mut dy = S::zero();
    for (a, b) in rx.iter().zip(&ry) {
        num += (*a - mean) * (*b - mean);
        dx += (*a - mean) * (*a - mean);
        dy += (*b - mean) * (*b - mean);
    }
    if dx > S::zero() && dy > S::zero() {
        Some(num / (dx * dy).sqrt())
    } else {
        None
    }
}

/// Comparison of measured external Qs against a simulated admittance curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlay<S> {
    pub offset_hz: S,
    pub rows: Vec<OverlayRow<S>>,
    /// Spearman correlation between measured Q_ext and the simulated values.
    pub rank_correlation: Option<S>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayRow<S> {
    pub f0_hz: S,
    pub q_ext: S,
    pub simulated: S,
}

/// Sample the simulated curve at each converged fit's frequency, shifted by
/// `offset_hz` (the curve is treated as sitting `offset_hz` below the
/// measurement, so lookups run at f0 - offset).
pub fn overlay_with_simulation<S: Scalar>(
    fits: &[ResonatorFit<S>],
    curve: &QCurve<S>,
    offset_hz: S,
) -> Result<Overlay<S>> {
    let mut rows = Vec::new();
    for f in fits.iter().filter(|f| f.converged) {
        let omega = omega_from_hz(f.f0 - offset_hz);
        let simulated = curve.value_at(omega)?;
        rows.push(OverlayRow {
            f0_hz: f.f0,
            q_ext: f.q_ext,
            simulated,
        });
    }
    if rows.is_empty() {
        return Err(Error::Domain(
            "no converged fits overlap the simulated curve".into(),
        ));
    }
    rows.sort_by(|a, b| a.f0_hz.partial_cmp(&b.f0_hz).expect("finite frequencies"));
    let meas: Vec<S> = rows.iter().map(|r| r.q_ext).collect();
    let sim: Vec<S> = rows.iter().map(|r| r.simulated).collect();
    Ok(Overlay {
        offset_hz,
        rows,
        rank_correlation: spearman_rank(&meas, &sim),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CurveKind;
    use crate::lm::numerical_jacobian;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn env(a: f64, alpha: f64, tau: f64, phi: f64) -> FitEnvironment<f64> {
        FitEnvironment {
            amplitude: a,
            phase_rad: alpha,
            delay_s: tau,
            asymmetry_rad: phi,
        }
    }

    fn grid(f0: f64, halfspan: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| f0 - halfspan + 2.0 * halfspan * k as f64 / (n - 1) as f64)
            .collect()
    }

    fn reference_fit() -> ResonatorFit<f64> {
        ResonatorFit::from_parameters(6.0e9, 30e3, 8e3, env(0.9, 0.7, 40e-9, 0.15))
    }

    #[test]
    fn q_tot_composition_reference() {
        let fit = reference_fit();
        assert_relative_eq!(fit.q_tot(), 6315.789473, max_relative = 1e-9);
        let identity = 1.0 / (1.0 / fit.q_int + 1.0 / fit.q_ext);
        assert_relative_eq!(fit.q_tot(), identity, max_relative = 1e-12);
    }

    #[test]
    fn on_resonance_depth_matches_closed_form() {
        // ideal environment, no noise: S11(f0) = 1 - 2 Q_tot / Q_ext
        let fit = ResonatorFit::from_parameters(6.0e9, 30e3, 8e3, env(1.0, 0.0, 0.0, 0.0));
        let trace = synthesize_trace(&fit, &[5.9e9, 6.0e9, 6.1e9], 0.0, 0).unwrap();
        let s = trace.s11()[1];
        let expected = 1.0 - 2.0 * fit.q_tot() / 8e3;
        assert_relative_eq!(s.re, expected, max_relative = 1e-9);
        assert_abs_diff_eq!(s.im, 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.norm_sqr().sqrt(), 0.579, max_relative = 1e-3);

        // deeply overcoupled limit: S11(f0) -> -1
        let over = ResonatorFit::from_parameters(6.0e9, 1e9, 1e3, env(1.0, 0.0, 0.0, 0.0));
        let trace = synthesize_trace(&over, &[6.0e9], 0.0, 0).unwrap();
        assert!(trace.s11()[0].re < -0.99);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let fit = reference_fit();
        let trace = synthesize_trace(&fit, &grid(6.0e9, 3e6, 41), 0.0, 1).unwrap();
        let problem = ReflectionProblem {
            trace: &trace,
            f_lo: trace.freqs_hz()[0],
            f_hi: trace.freqs_hz()[40],
        };
        let p = DVector::from_vec(vec![6.0e9, 6.0e3, 1.5, 0.1, 0.85, 0.6, 38e-9]);
        let analytic = problem.jacobian(&p).unwrap();
        let numeric = numerical_jacobian(&problem, &p).unwrap();
        for (a, n) in analytic.iter().zip(numeric.iter()) {
            assert_relative_eq!(a, n, max_relative = 1e-4, epsilon = 1e-12);
        }
    }

    #[test]
    fn noiseless_round_trip_recovers_all_parameters() {
        for (q_int, q_ext) in [(30e3, 8e3), (5e3, 50e3)] {
            let truth = ResonatorFit::from_parameters(6.0e9, q_int, q_ext, env(0.9, 0.7, 40e-9, 0.15));
            let lw = 6.0e9 / truth.q_tot();
            let trace = synthesize_trace(&truth, &grid(6.0e9, 4.0 * lw, 201), 0.0, 0).unwrap();
            let fit = fit_reflection(&trace).unwrap();
            assert!(fit.converged);
            assert_relative_eq!(fit.f0, truth.f0, max_relative = 1e-3);
            assert_relative_eq!(fit.q_int, truth.q_int, max_relative = 1e-3);
            assert_relative_eq!(fit.q_ext, truth.q_ext, max_relative = 1e-3);
            assert_relative_eq!(fit.environment.amplitude, 0.9, max_relative = 1e-3);
            assert_relative_eq!(fit.environment.delay_s, 40e-9, max_relative = 1e-3);
            assert_abs_diff_eq!(fit.environment.phase_rad, 0.7, epsilon = 1e-3);
            assert_abs_diff_eq!(fit.environment.asymmetry_rad, 0.15, epsilon = 1e-3);
        }
    }

    #[test]
    fn flat_or_featureless_traces_are_no_resonance() {
        let freqs = grid(6.0e9, 5e6, 51);
        let flat: Vec<Complex<f64>> =
            freqs.iter().map(|_| Complex::new(0.9, 0.0)).collect();
        let trace = ReflectionTrace::new(freqs.clone(), flat).unwrap();
        assert!(matches!(fit_reflection(&trace), Err(Error::NoResonance(_))));

        // pure delay, no dip
        let sloped: Vec<Complex<f64>> = freqs
            .iter()
            .map(|&f| Complex::from_polar(0.9, -2.0 * std::f64::consts::PI * f * 40e-9))
            .collect();
        let trace = ReflectionTrace::new(freqs, sloped).unwrap();
        assert!(matches!(fit_reflection(&trace), Err(Error::NoResonance(_))));
    }

    #[test]
    fn short_traces_are_rejected() {
        let truth = reference_fit();
        let trace = synthesize_trace(&truth, &grid(6.0e9, 3e6, 10), 0.0, 0).unwrap();
        assert!(matches!(fit_reflection(&trace), Err(Error::Domain(_))));
    }

    #[test]
    fn trace_validation_rejects_bad_axes() {
        assert!(ReflectionTrace::new(vec![1.0, 1.0], vec![Complex::new(0.0, 0.0); 2]).is_err());
        assert!(ReflectionTrace::new(vec![2.0, 1.0], vec![Complex::new(0.0, 0.0); 2]).is_err());
        assert!(ReflectionTrace::new(vec![1.0], vec![Complex::new(f64::NAN, 0.0)]).is_err());
        assert!(ReflectionTrace::<f64>::new(vec![], vec![]).is_err());
    }

    #[test]
    fn monte_carlo_q_errors_stay_within_tolerances_at_30db() {
        let truth = reference_fit();
        let lw = truth.f0 / truth.q_tot();
        let freqs = grid(truth.f0, 4.0 * lw, 201);
        let noise = 10f64.powf(-30.0 / 20.0);
        let mut ext_err = Vec::new();
        let mut int_err = Vec::new();
        for seed in 0..60 {
            let trace = synthesize_trace(&truth, &freqs, noise, seed).unwrap();
            let fit = fit_reflection(&trace).unwrap();
            if !fit.converged {
                continue;
            }
            ext_err.push((fit.q_ext / truth.q_ext - 1.0).abs());
            int_err.push((fit.q_int / truth.q_int - 1.0).abs());
        }
        assert!(ext_err.len() >= 55, "only {} fits converged", ext_err.len());
        ext_err.sort_by(|a, b| a.partial_cmp(b).unwrap());
        int_err.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med_ext = ext_err[ext_err.len() / 2];
        let med_int = int_err[int_err.len() / 2];
        assert!(med_ext <= 0.05, "median Q_ext error {med_ext}");
        assert!(med_int <= 0.20, "median Q_int error {med_int}");
    }

    #[test]
    fn global_phase_rotation_shifts_only_the_fitted_phase() {
        let truth = reference_fit();
        let lw = truth.f0 / truth.q_tot();
        let freqs = grid(truth.f0, 4.0 * lw, 201);
        let base_trace = synthesize_trace(&truth, &freqs, 0.0, 0).unwrap();
        let base = fit_reflection(&base_trace).unwrap();
        for theta in [0.5, -1.2] {
            let rot = Complex::from_polar(1.0, theta);
            let rotated: Vec<Complex<f64>> = base_trace.s11().iter().map(|&z| z * rot).collect();
            let trace = ReflectionTrace::new(freqs.clone(), rotated).unwrap();
            let fit = fit_reflection(&trace).unwrap();
            let dphase = wrap_angle(fit.environment.phase_rad - base.environment.phase_rad);
            assert_abs_diff_eq!(dphase, theta, epsilon = 1e-6);
            assert_relative_eq!(fit.f0, base.f0, max_relative = 1e-9);
            assert_relative_eq!(fit.q_int, base.q_int, max_relative = 1e-6);
            assert_relative_eq!(fit.q_ext, base.q_ext, max_relative = 1e-6);
        }
    }

    #[test]
    fn frequency_axis_shift_moves_f0_and_preserves_qs_within_uncertainty() {
        let truth = reference_fit();
        let lw = truth.f0 / truth.q_tot();
        let freqs = grid(truth.f0, 4.0 * lw, 201);
        let noise = 10f64.powf(-30.0 / 20.0);
        let trace = synthesize_trace(&truth, &freqs, noise, 11).unwrap();
        let base = fit_reflection(&trace).unwrap();
        let df = 5e6;
        let shifted_freqs: Vec<f64> = freqs.iter().map(|f| f + df).collect();
        let shifted = ReflectionTrace::new(shifted_freqs, trace.s11().to_vec()).unwrap();
        let fit = fit_reflection(&shifted).unwrap();
        let sigma_f = (base.uncertainty.f0 + fit.uncertainty.f0).max(1.0);
        assert!(
            (fit.f0 - base.f0 - df).abs() < 3.0 * sigma_f + 1e3,
            "f0 moved by {} vs shift {}",
            fit.f0 - base.f0,
            df
        );
        // an axis relabel rescales Q by (f0+df)/f0 exactly; with noise the
        // fitted Qs must agree within a few combined sigma of that
        let scale = (truth.f0 + df) / truth.f0;
        let sig_ext = (base.uncertainty.q_ext + fit.uncertainty.q_ext).max(1.0);
        assert!((fit.q_ext - base.q_ext * scale).abs() < 3.0 * sig_ext);
        let sig_int = (base.uncertainty.q_int + fit.uncertainty.q_int).max(1.0);
        assert!((fit.q_int - base.q_int * scale).abs() < 3.0 * sig_int);
    }

    #[test]
    fn aggregation_reports_medians_and_counts_nonconverged() {
        let single = aggregate_fits(&[reference_fit()]).unwrap();
        assert_eq!(single.n_fits, 1);
        assert_eq!(single.n_converged, 1);
        assert_relative_eq!(single.median_q_int, 30e3, max_relative = 1e-12);
        assert_relative_eq!(single.median_q_ext, 8e3, max_relative = 1e-12);
        assert_relative_eq!(single.q_tot_from_medians, 6.3e3, max_relative = 1e-2);
        assert_relative_eq!(single.median_q_tot, single.q_tot_from_medians, max_relative = 1e-12);

        let mut bad = reference_fit();
        bad.converged = false;
        bad.q_ext = 1e6; // junk that must not leak into the stats
        let mixed = aggregate_fits(&[reference_fit(), bad.clone()]).unwrap();
        assert_eq!(mixed.n_fits, 2);
        assert_eq!(mixed.n_converged, 1);
        assert_relative_eq!(mixed.median_q_ext, 8e3, max_relative = 1e-12);
        assert_eq!(mixed.rows.len(), 2);
        assert!(aggregate_fits(&[bad]).is_err());
        assert!(aggregate_fits::<f64>(&[]).is_err());
    }

    #[test]
    fn overlay_ranks_self_consistent_data_perfectly() {
        // a synthetic normalized curve with a dip: values 1 + |k - 10| / 5
        let omegas: Vec<f64> = (0..21)
            .map(|k| omega_from_hz(9.3e9 + 0.05e9 * k as f64))
            .collect();
        let values: Vec<Option<f64>> = (0..21)
            .map(|k| Some(1.0 + (k as i32 - 10).abs() as f64 / 5.0))
            .collect();
        let curve = QCurve::from_parts(omegas, values, CurveKind::Normalized).unwrap();
        // measured fits whose Q_ext is proportional to the curve
        let fits: Vec<ResonatorFit<f64>> = (0..7)
            .map(|k| {
                let f0 = 9.45e9 + 0.13e9 * k as f64;
                let sim = curve.value_at(omega_from_hz(f0)).unwrap();
                ResonatorFit::from_parameters(f0, 30e3, 8e3 * sim, env(1.0, 0.0, 0.0, 0.0))
            })
            .collect();
        let overlay = overlay_with_simulation(&fits, &curve, 0.0).unwrap();
        assert_eq!(overlay.rows.len(), 7);
        assert_relative_eq!(overlay.rank_correlation.unwrap(), 1.0, max_relative = 1e-12);

        // offsetting by +0.1 GHz samples the curve 0.1 GHz lower
        let shifted = overlay_with_simulation(&fits, &curve, 0.1e9).unwrap();
        let expect = curve.value_at(omega_from_hz(fits[0].f0 - 0.1e9)).unwrap();
        assert_relative_eq!(shifted.rows[0].simulated, expect, max_relative = 1e-12);

        // disjoint bands error out
        let far: Vec<ResonatorFit<f64>> = vec![ResonatorFit::from_parameters(
            2.0e9,
            30e3,
            8e3,
            env(1.0, 0.0, 0.0, 0.0),
        )];
        assert!(overlay_with_simulation(&far, &curve, 0.0).is_err());
    }

    #[test]
    fn spearman_handles_ties_and_reversals() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let down = [8.0, 6.0, 4.0, 2.0];
        assert_relative_eq!(spearman_rank(&x, &down).unwrap(), -1.0, max_relative = 1e-12);
        let tied = [1.0, 1.0, 2.0, 3.0];
        let r = spearman_rank(&x, &tied).unwrap();
        assert!(r > 0.9 && r <= 1.0);
        assert!(spearman_rank(&x, &x[..2]).is_none());
        assert!(spearman_rank(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }
}
