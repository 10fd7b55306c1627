//! Touchstone v1 one-port readers.

use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fit::ReflectionTrace;
use crate::scalar::Scalar;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Ri,
    Ma,
    Db,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Touchstone {
        line,
        message: message.into(),
    }
}

/// Parse one-port Touchstone v1 text into a reflection trace. Frequencies
/// come out in Hz, ascending; RI, MA and DB encodings all land on the same
/// complex S11. Multi-port data and v2 keyword blocks are rejected.
pub fn parse_touchstone<S: Scalar>(text: &str) -> Result<ReflectionTrace<S>> {
    // Touchstone defaults when the option line is absent or partial.
    let mut unit = 1e9;
    let mut format = Format::Ma;
    let mut option_line: Option<usize> = None;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            return Err(err(
                line,
                format!("keyword blocks ('{content}') are Touchstone v2; only v1 is supported"),
            ));
        }
        if let Some(rest) = content.strip_prefix('#') {
            if let Some(first) = option_line {
                return Err(err(
                    line,
                    format!("second option line; first was at line {first}"),
                ));
            }
            if !rows.is_empty() {
                return Err(err(line, "option line after data"));
            }
            option_line = Some(line);
            let mut tokens = rest.split_whitespace();
            while let Some(tok) = tokens.next() {
                match tok.to_ascii_lowercase().as_str() {
                    "hz" => unit = 1.0,
                    "khz" => unit = 1e3,
                    "mhz" => unit = 1e6,
                    "ghz" => unit = 1e9,
                    "s" => {}
                    "y" | "z" | "g" | "h" => {
                        return Err(err(line, format!("only S-parameters are supported, got '{tok}'")))
                    }
                    "ri" => format = Format::Ri,
                    "ma" => format = Format::Ma,
                    "db" => format = Format::Db,
                    "r" => {
                        let v = tokens.next().ok_or_else(|| err(line, "'R' without a value"))?;
                        v.parse::<f64>()
                            .map_err(|_| err(line, format!("malformed reference 'R {v}'")))?;
                    }
                    other => return Err(err(line, format!("unrecognized option '{other}'"))),
                }
            }
            continue;
        }

        let nums: Vec<f64> = content
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| err(line, format!("malformed number '{t}'")))
            })
            .collect::<Result<_>>()?;
        if nums.len() != 3 {
            return Err(err(
                line,
                format!(
                    "expected 3 columns (freq + one-port S11), got {}; multi-port files are unsupported",
                    nums.len()
                ),
            ));
        }
        rows.push((nums[0], nums[1], nums[2]));
    }

    if rows.is_empty() {
        return Err(err(0, "no data lines"));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut freqs = Vec::with_capacity(rows.len());
    let mut s11 = Vec::with_capacity(rows.len());
    for (f, x, y) in rows {
        freqs.push(S::of(f * unit));
        let z = match format {
            Format::Ri => Complex::new(x, y),
            Format::Ma => Complex::from_polar(x, y.to_radians()),
            Format::Db => Complex::from_polar(10f64.powf(x / 20.0), y.to_radians()),
        };
        s11.push(Complex::new(S::of(z.re), S::of(z.im)));
    }
    ReflectionTrace::new(freqs, s11)
}

/// [`parse_touchstone`] applied to a file on disk.
pub fn read_touchstone<S: Scalar>(path: impl AsRef<Path>) -> Result<ReflectionTrace<S>> {
    parse_touchstone(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse64(text: &str) -> Result<ReflectionTrace<f64>> {
        parse_touchstone(text)
    }

    #[test]
    fn ri_and_ma_encodings_agree() {
        let data: [(f64, Complex<f64>); 3] = [
            (9.70, Complex::new(0.32, -0.11)),
            (9.80, Complex::new(-0.05, 0.41)),
            (9.90, Complex::new(0.28, 0.17)),
        ];
        let mut ri = String::from("! comment\n# GHz S RI R 50\n");
        let mut ma = String::from("# GHz S MA R 50\n");
        for (f, z) in data {
            ri.push_str(&format!("{f} {} {}\n", z.re, z.im));
            ma.push_str(&format!("{f} {} {}\n", z.norm(), z.arg().to_degrees()));
        }
        let a = parse64(&ri).unwrap();
        let b = parse64(&ma).unwrap();
        for i in 0..a.len() {
            assert_eq!(a.freqs_hz()[i], b.freqs_hz()[i]);
            assert!((a.s11()[i] - b.s11()[i]).norm() < 1e-9);
        }
        assert_eq!(a.freqs_hz()[0], 9.70e9);
    }

    #[test]
    fn db_encoding_converts_magnitude() {
        let trace = parse64("# MHz S DB\n100 -6.02 0\n200 0 90\n").unwrap();
        let mag = trace.s11()[0].norm();
        assert!((mag - 0.500).abs() < 1e-3, "{mag}");
        assert!((mag - 10f64.powf(-6.02 / 20.0)).abs() < 1e-12);
        assert!((trace.s11()[1] - Complex::new(0.0, 1.0)).norm() < 1e-12);
        assert_eq!(trace.freqs_hz()[0], 1e8);
    }

    #[test]
    fn defaults_are_ghz_and_ma() {
        let trace = parse64("9.8 0.5 10\n9.9 0.6 20\n").unwrap();
        assert_eq!(trace.freqs_hz()[0], 9.8e9);
        assert!((trace.s11()[0] - Complex::from_polar(0.5, 10f64.to_radians())).norm() < 1e-12);
    }

    #[test]
    fn rows_come_out_ascending() {
        let trace = parse64("# Hz S RI\n3e9 0.1 0\n1e9 0.2 0\n2e9 0.3 0\n").unwrap();
        assert_eq!(trace.freqs_hz(), &[1e9, 2e9, 3e9]);
        assert_eq!(trace.s11()[0].re, 0.2);
    }

    #[test]
    fn rejects_v2_multiport_and_garbage() {
        assert!(matches!(
            parse64("[Version] 2.0\n# Hz S RI R 50\n1e9 0.1 0\n"),
            Err(Error::Touchstone { line: 1, .. })
        ));
        // Two-port data lines carry 9 columns.
        let e = parse64("# GHz S RI\n1 .1 0 .2 0 .2 0 .1 0\n").unwrap_err();
        match e {
            Error::Touchstone { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("multi-port"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse64("! nothing but comments\n").is_err());
        assert!(matches!(
            parse64("# GHz S XY\n1 0.5 0\n"),
            Err(Error::Touchstone { line: 1, .. })
        ));
        assert!(parse64("# GHz S RI\n1 0.5 zero\n").is_err());
        assert!(parse64("# GHz S RI\n1 .1 0\n# Hz S RI\n2 .1 0\n").is_err());
    }

    #[test]
    fn reads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sample.s1p");
        std::fs::write(&path, "# GHz S RI R 50\n9.8 0.5 -0.1\n9.9 0.4 0.0\n").unwrap();
        let trace: ReflectionTrace<f64> = read_touchstone(&path).unwrap();
        assert_eq!(trace.len(), 2);
        assert!(read_touchstone::<f64>(dir.path().join("missing.s1p")).is_err());
    }
}
