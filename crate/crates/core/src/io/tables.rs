//! CSV tables for curves, modes, sweeps, fits and coherence data. Every
//! table carries a header row with unit-suffixed column names, numbers are
//! written in round-trip-exact scientific notation, and blank cells stand
//! for absent values.

use std::io::{Read, Write};

use num_complex::Complex;

use crate::analysis::{CurveKind, QCurve};
use crate::eigen::{FilterComparison, Mode, ModeFlag, SweepTrace};
use crate::error::{Error, Result};
use crate::fit::{
    FitEnvironment, FitSummary, FitUncertainty, Overlay, ReflectionTrace, ResonatorFit,
};
use crate::purcell::CoherenceSample;
use crate::scalar::{hz_from_omega, omega_from_hz, Scalar};

fn fmt<S: Scalar>(v: S) -> String {
    format!("{:e}", v.to_f64_lossy())
}

fn fmt_opt<S: Scalar>(v: Option<S>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn parse_field<S: Scalar>(field: &str, line: usize, column: &str) -> Result<S> {
    field
        .parse::<f64>()
        .map(S::of)
        .map_err(|_| Error::Parse {
            line,
            message: format!("malformed {column} value '{field}'"),
        })
}

fn parse_opt<S: Scalar>(field: &str, line: usize, column: &str) -> Result<Option<S>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, line, column).map(Some)
    }
}

fn expect_header(got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if got.iter().ne(want.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "unexpected header [{}]; expected [{}]",
                got.iter().collect::<Vec<_>>().join(","),
                want.join(",")
            ),
        });
    }
    Ok(())
}

fn flag_names(flags: &[ModeFlag]) -> String {
    flags
        .iter()
        .map(|f| match f {
            ModeFlag::Degenerate => "degenerate",
            ModeFlag::LabelTie => "label_tie",
            ModeFlag::TrackingJump => "tracking_jump",
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// A Q curve as `freq_hz` plus one value column named after the curve kind.
pub fn write_qcurve_csv<S: Scalar, W: Write>(out: W, curve: &QCurve<S>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let value_col = match curve.kind() {
        CurveKind::PerFarad => "q_per_farad",
        CurveKind::Normalized => "q_normalized",
    };
    w.write_record(["freq_hz", value_col])?;
    for (&omega, &v) in curve.omegas().iter().zip(curve.values()) {
        w.write_record([fmt(hz_from_omega(omega)), fmt_opt(v)])?;
    }
    finish(w)
}

/// Inverse of [`write_qcurve_csv`]; the value header names the curve kind.
pub fn read_qcurve_csv<S: Scalar, R: Read>(input: R) -> Result<QCurve<S>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let kind = match header.get(1) {
        Some("q_per_farad") => CurveKind::PerFarad,
        Some("q_normalized") => CurveKind::Normalized,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected header [freq_hz,q_per_farad|q_normalized], got [{}]",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            })
        }
    };
    let mut omegas = Vec::new();
    let mut values = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i + 2;
        let record = record?;
        omegas.push(omega_from_hz(parse_field::<S>(
            record.get(0).unwrap_or(""),
            line,
            "freq_hz",
        )?));
        values.push(parse_opt(record.get(1).unwrap_or(""), line, "q")?);
    }
    QCurve::from_parts(omegas, values, kind)
}

const MODE_COLS: [&str; 5] = ["freq_hz", "q", "sigma_per_s", "identity", "flags"];

fn mode_fields<S: Scalar>(m: &Mode<S>) -> [String; 5] {
    [
        fmt(m.frequency_hz()),
        fmt_opt(m.q),
        fmt(m.sigma),
        m.identity.clone().unwrap_or_default(),
        flag_names(&m.flags),
    ]
}

/// One row per eigenmode.
pub fn write_modes_csv<S: Scalar, W: Write>(out: W, modes: &[Mode<S>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MODE_COLS)?;
    for m in modes {
        w.write_record(mode_fields(m))?;
    }
    finish(w)
}

/// One row per (sweep value, eigenmode); `tracked` marks the followed mode.
pub fn write_sweep_csv<S: Scalar, W: Write>(out: W, trace: &SweepTrace<S>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "element",
        "value_henries",
        "freq_hz",
        "q",
        "sigma_per_s",
        "identity",
        "tracked",
        "flags",
    ])?;
    for (&value, point) in trace.values.iter().zip(&trace.points) {
        for (i, m) in point.modes.iter().enumerate() {
            let fields = mode_fields(m);
            w.write_record([
                trace.element.as_str(),
                &fmt(value),
                &fields[0],
                &fields[1],
                &fields[2],
                &fields[3],
                if point.tracked == Some(i) { "true" } else { "false" },
                &fields[4],
            ])?;
        }
    }
    finish(w)
}

/// Suppression rows from a with/without-filter comparison; blank cells mark
/// sweep points where either variant lost the qubit mode.
pub fn write_suppression_csv<S: Scalar, W: Write>(
    out: W,
    comparison: &FilterComparison<S>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["value_henries", "qubit_freq_hz", "suppression_db"])?;
    for (&value, row) in comparison
        .with_filter
        .values
        .iter()
        .zip(&comparison.suppression_db)
    {
        let (f, db) = match row {
            Some((f, db)) => (fmt(*f), fmt(*db)),
            None => (String::new(), String::new()),
        };
        w.write_record([fmt(value), f, db])?;
    }
    finish(w)
}

const FIT_COLS: [&str; 15] = [
    "source",
    "f0_hz",
    "q_int",
    "q_ext",
    "q_tot",
    "sigma_f0_hz",
    "sigma_q_int",
    "sigma_q_ext",
    "sigma_q_tot",
    "amplitude",
    "phase_rad",
    "delay_s",
    "asymmetry_rad",
    "residual_norm",
    "converged",
];

/// One row per fitted trace, keyed by a caller-supplied source name.
pub fn write_fits_csv<S: Scalar, W: Write>(
    out: W,
    fits: &[(String, ResonatorFit<S>)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIT_COLS)?;
    for (source, f) in fits {
        w.write_record([
            source.as_str(),
            &fmt(f.f0),
            &fmt(f.q_int),
            &fmt(f.q_ext),
            &fmt(f.q_tot()),
            &fmt(f.uncertainty.f0),
            &fmt(f.uncertainty.q_int),
            &fmt(f.uncertainty.q_ext),
            &fmt(f.uncertainty.q_tot),
            &fmt(f.environment.amplitude),
            &fmt(f.environment.phase_rad),
            &fmt(f.environment.delay_s),
            &fmt(f.environment.asymmetry_rad),
            &fmt(f.residual_norm),
            if f.converged { "true" } else { "false" },
        ])?;
    }
    finish(w)
}

/// Inverse of [`write_fits_csv`]. The derived `q_tot` column is checked for
/// presence but re-derived from the parts, not trusted.
pub fn read_fits_csv<S: Scalar, R: Read>(input: R) -> Result<Vec<(String, ResonatorFit<S>)>> {
    let mut r = csv::Reader::from_reader(input);
    expect_header(r.headers()?, &FIT_COLS)?;
    let mut fits = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let field = |col: usize| record.get(col).unwrap_or("");
        let num = |col: usize| parse_field::<S>(field(col), line, FIT_COLS[col]);
        let fit = ResonatorFit {
            f0: num(1)?,
            q_int: num(2)?,
            q_ext: num(3)?,
            environment: FitEnvironment {
                amplitude: num(9)?,
                phase_rad: num(10)?,
                delay_s: num(11)?,
                asymmetry_rad: num(12)?,
            },
            uncertainty: FitUncertainty {
                f0: num(5)?,
                q_int: num(6)?,
                q_ext: num(7)?,
                q_tot: num(8)?,
            },
            residual_norm: num(13)?,
            converged: match field(14) {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("malformed converged flag '{other}'"),
                    })
                }
            },
        };
        fits.push((field(0).to_string(), fit));
    }
    Ok(fits)
}

/// Aggregate statistics as a single wide row (the per-resonator rows live in
/// the fits table).
pub fn write_summary_csv<S: Scalar, W: Write>(out: W, summary: &FitSummary<S>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n_fits",
        "n_converged",
        "median_q_int",
        "std_q_int",
        "median_q_ext",
        "std_q_ext",
        "median_q_tot",
        "std_q_tot",
        "q_tot_from_medians",
    ])?;
    w.write_record([
        summary.n_fits.to_string(),
        summary.n_converged.to_string(),
        fmt(summary.median_q_int),
        fmt(summary.std_q_int),
        fmt(summary.median_q_ext),
        fmt(summary.std_q_ext),
        fmt(summary.median_q_tot),
        fmt(summary.std_q_tot),
        fmt(summary.q_tot_from_medians),
    ])?;
    finish(w)
}

/// Measured-vs-simulated external Q at each converged fit frequency.
pub fn write_overlay_csv<S: Scalar, W: Write>(out: W, overlay: &Overlay<S>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["f0_hz", "q_ext", "simulated_q"])?;
    for row in &overlay.rows {
        w.write_record([fmt(row.f0_hz), fmt(row.q_ext), fmt(row.simulated)])?;
    }
    finish(w)
}

/// Reads `qubit_id,t1_s,t2_ramsey_s,t2_echo_s` rows; the T2 cells may be
/// blank. Samples are validated on construction.
pub fn read_coherence_csv<S: Scalar, R: Read>(input: R) -> Result<Vec<CoherenceSample<S>>> {
    let mut r = csv::Reader::from_reader(input);
    expect_header(r.headers()?, &["qubit_id", "t1_s", "t2_ramsey_s", "t2_echo_s"])?;
    let mut samples = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let field = |col: usize| record.get(col).unwrap_or("");
        samples.push(CoherenceSample::new(
            field(0),
            parse_field(field(1), line, "t1_s")?,
            parse_opt(field(2), line, "t2_ramsey_s")?,
            parse_opt(field(3), line, "t2_echo_s")?,
        )?);
    }
    Ok(samples)
}

/// Reads `freq_hz,re,im` rows into a reflection trace.
pub fn read_trace_csv<S: Scalar, R: Read>(input: R) -> Result<ReflectionTrace<S>> {
    let mut r = csv::Reader::from_reader(input);
    expect_header(r.headers()?, &["freq_hz", "re", "im"])?;
    let mut freqs = Vec::new();
    let mut s11 = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let field = |col: usize| record.get(col).unwrap_or("");
        freqs.push(parse_field(field(0), line, "freq_hz")?);
        s11.push(Complex::new(
            parse_field(field(1), line, "re")?,
            parse_field(field(2), line, "im")?,
        ));
    }
    ReflectionTrace::new(freqs, s11)
}
