//! Closed-form radiative-decay accounting for the readout chain.
//!
//! A qubit dispersively coupled to a readout resonator inherits a radiative
//! decay channel through the resonator's external coupling: the decay rate is
//! bounded below by (g/Delta)^2 * kappa_ext. Everything here is a stateless
//! formula; the network modules provide the frequency-dependent kappa that a
//! filter creates, these functions do the bookkeeping around it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters of one qubit-resonator readout chain.
#[derive(Debug, Clone, Copy)]
pub struct ReadoutChainParams<S> {
    /// Qubit angular frequency, rad/s.
    pub omega_qb: S,
    /// Resonator angular frequency, rad/s.
    pub omega_res: S,
    /// Qubit-resonator coupling rate, rad/s.
    pub g: S,
    /// External quality factor of the resonator.
    pub q_ext: S,
    /// Resonator capacitance, farads.
    pub c: S,
    /// Output coupling capacitance, farads.
    pub cc: S,
    /// Feedline reference impedance, ohms.
    pub z0: S,
}

impl<S: Scalar> ReadoutChainParams<S> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega_qb,
            self.omega_res,
            self.q_ext,
            self.c,
            self.cc,
            self.z0,
        ];
        if all.iter().any(|&x| x <= S::zero()) || self.g < S::zero() {
            return Err(Error::Domain(
                "readout-chain parameters must be positive (g may be zero)".into(),
            ));
        }
        Ok(())
    }
}

/// Lower bound on the qubit decay rate, (g/Delta)^2 * kappa_ext, in 1/s.
///
/// `kappa_at_qubit` supplies the external coupling rate evaluated at the qubit
/// frequency when known (that frequency dependence is precisely what a filter
/// shapes); otherwise the flat estimate omega_res / Q_ext is used.
pub fn purcell_bound<S: Scalar>(
    p: &ReadoutChainParams<S>,
    kappa_at_qubit: Option<S>,
) -> Result<S> {
    p.validate()?;
    let delta = p.omega_qb - p.omega_res;
    if delta == S::zero() {
        return Err(Error::Domain(
            "purcell bound needs nonzero qubit-resonator detuning".into(),
        ));
    }
    let kappa = kappa_at_qubit.unwrap_or(p.omega_res / p.q_ext);
    let ratio = p.g / delta;
    Ok(ratio * ratio * kappa)
}

/// Radiatively-limited relaxation time T1 = Q/omega, seconds.
pub fn t1_radiative<S: Scalar>(q: S, omega: S) -> Result<S> {
    if q <= S::zero() || omega <= S::zero() {
        return Err(Error::Domain("t1_radiative needs positive Q and omega".into()));
    }
    Ok(q / omega)
}

/// Inverse of [`t1_radiative`]: the quality factor implied by a T1 at omega.
pub fn q_from_t1<S: Scalar>(t1: S, omega: S) -> Result<S> {
    if t1 <= S::zero() || omega <= S::zero() {
        return Err(Error::Domain("q_from_t1 needs positive T1 and omega".into()));
    }
    Ok(t1 * omega)
}

/// External Q of a resonator (capacitance `c`) coupled straight to a `z0`
/// feedline through `cc`: Q_ext = C / (Z0 * Cc^2 * omega). Weak-coupling
/// limit, valid for Cc much smaller than C.
pub fn direct_coupling_qext<S: Scalar>(c: S, cc: S, z0: S, omega: S) -> Result<S> {
    if [c, cc, z0, omega].iter().any(|&x| x <= S::zero()) {
        return Err(Error::Domain("direct_coupling_qext needs positive inputs".into()));
    }
    Ok(c / (z0 * cc * cc * omega))
}

/// External coupling rate kappa = omega / Q_ext, rad/s.
pub fn kappa_ext<S: Scalar>(omega_res: S, q_ext: S) -> Result<S> {
    if omega_res <= S::zero() || q_ext <= S::zero() {
        return Err(Error::Domain("kappa_ext needs positive inputs".into()));
    }
    Ok(omega_res / q_ext)
}

/// One qubit's measured coherence times.
#[derive(Debug, Clone)]
pub struct CoherenceSample<S> {
    pub qubit_id: String,
    /// Energy relaxation time, seconds.
    pub t1: S,
    pub t2_ramsey: Option<S>,
    pub t2_echo: Option<S>,
}

impl<S: Scalar> CoherenceSample<S> {
    pub fn new(
        qubit_id: &str,
        t1: S,
        t2_ramsey: Option<S>,
        t2_echo: Option<S>,
    ) -> Result<Self> {
        if t1 <= S::zero() {
            return Err(Error::Domain(format!("{qubit_id}: T1 must be positive")));
        }
        let cap = S::of(2.0) * t1 * (S::one() + S::of(1e-9));
        for (name, t2) in [("T2 Ramsey", t2_ramsey), ("T2 echo", t2_echo)] {
            if let Some(t2) = t2 {
                if t2 <= S::zero() || t2 > cap {
                    return Err(Error::Domain(format!(
                        "{qubit_id}: {name} must be positive and at most 2*T1"
                    )));
                }
            }
        }
        Ok(CoherenceSample {
            qubit_id: qubit_id.to_string(),
            t1,
            t2_ramsey,
            t2_echo,
        })
    }
}

/// How a measured T1 population compares to a radiative limit.
#[derive(Debug, Clone, Copy)]
pub struct T1ValidationReport<S> {
    /// Samples strictly above the limit.
    pub count_above: usize,
    /// Samples at or below the limit (boundary counts as not above).
    pub count_not_above: usize,
    /// min / median / max of T1 / limit.
    pub min_margin: S,
    pub median_margin: S,
    pub max_margin: S,
}

/// Partition coherence samples against a radiative T1 limit.
pub fn validate_t1_against_limit<S: Scalar>(
    samples: &[CoherenceSample<S>],
    limit: S,
) -> Result<T1ValidationReport<S>> {
    if samples.is_empty() {
        return Err(Error::Domain("no coherence samples to validate".into()));
    }
    if limit <= S::zero() {
        return Err(Error::Domain("radiative limit must be positive".into()));
    }
    let mut margins: Vec<S> = samples.iter().map(|s| s.t1 / limit).collect();
    margins.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count_above = margins.iter().filter(|&&m| m > S::one()).count();
    let n = margins.len();
    let median = if n % 2 == 1 {
        margins[n / 2]
    } else {
        (margins[n / 2 - 1] + margins[n / 2]) / S::of(2.0)
    };
    Ok(T1ValidationReport {
        count_above,
        count_not_above: n - count_above,
        min_margin: margins[0],
        median_margin: median,
        max_margin: margins[n - 1],
    })
}

/// Seeded Gaussian T1 population for validation exercises: `count` samples
/// with the given center and spread, truncated to positive values.
pub fn synthetic_t1_population<S: Scalar>(
    count: usize,
    center_s: f64,
    sd_s: f64,
    seed: u64,
) -> Result<Vec<CoherenceSample<S>>> {
    if count == 0 || center_s <= 0.0 || sd_s < 0.0 {
        return Err(Error::Domain(
            "population needs count > 0, positive center, nonnegative spread".into(),
        ));
    }
    let normal = Normal::new(center_s, sd_s)
        .map_err(|e| Error::Domain(format!("bad population parameters: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut t1 = normal.sample(&mut rng);
        while t1 <= 0.0 {
            t1 = normal.sample(&mut rng);
        }
        out.push(CoherenceSample::new(&format!("q{i}"), S::of(t1), None, None)?);
    }
    Ok(out)
}
