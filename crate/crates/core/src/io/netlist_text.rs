//! Plain-text netlist documents.
//!
//! ```text
//! # anything after '#' is a comment
//! [nodes]
//! gnd filter out
//!
//! [elements]
//! Lf inductor filter gnd 188p
//! Cf capacitor filter gnd 1.4p
//! Lstub inductor filter out 120p
//!
//! [ports]
//! readout out gnd 50
//!
//! [sweeps]
//! Lf 150p 220p 41
//! ```
//!
//! The first name in `[nodes]` is the ground reference. Element lines read
//! `label kind node_a node_b value...`; `tline` takes two values (impedance,
//! one-way delay), every other kind takes one. Values accept the SI suffixes
//! f, p, n, u, m, k, M, G. `[ports]` lines read `label node_a node_b z0` and
//! `[sweeps]` lines read `element_label start stop points`; both sections may
//! be omitted. Serialization emits base units, so parse -> serialize -> parse
//! round-trips to an identical document.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::netlist::{ElementKind, Netlist};
use crate::scalar::Scalar;

/// A swept element value range attached to a netlist document.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<S> {
    pub label: String,
    pub start: S,
    pub stop: S,
    pub points: usize,
}

/// A netlist plus the sweep ranges declared alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct NetlistDocument<S> {
    pub netlist: Netlist<S>,
    pub sweeps: Vec<SweepSpec<S>>,
}

impl<S> NetlistDocument<S> {
    pub fn bare(netlist: Netlist<S>) -> Self {
        NetlistDocument {
            netlist,
            sweeps: Vec::new(),
        }
    }
}

fn si_factor(suffix: char) -> Option<f64> {
    Some(match suffix {
        'f' => 1e-15,
        'p' => 1e-12,
        'n' => 1e-9,
        'u' => 1e-6,
        'm' => 1e-3,
        'k' => 1e3,
        'M' => 1e6,
        'G' => 1e9,
        _ => return None,
    })
}

/// Parse a number with an optional SI suffix, e.g. `1.8n` -> 1.8e-9.
fn parse_value<S: Scalar>(token: &str, line: usize) -> Result<S> {
    let (digits, factor) = match token.chars().last().and_then(si_factor) {
        Some(f) if token.len() > 1 => (&token[..token.len() - 1], f),
        _ => (token, 1.0),
    };
    let v: f64 = digits.parse().map_err(|_| Error::Parse {
        line,
        message: format!("malformed value '{token}'"),
    })?;
    Ok(S::of(v * factor))
}

fn parse_count(token: &str, line: usize) -> Result<usize> {
    token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("malformed point count '{token}'"),
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Nodes,
    Elements,
    Ports,
    Sweeps,
}

impl Section {
    fn from_header(header: &str) -> Option<Section> {
        Some(match header {
            "[nodes]" => Section::Nodes,
            "[elements]" => Section::Elements,
            "[ports]" => Section::Ports,
            "[sweeps]" => Section::Sweeps,
            _ => return None,
        })
    }
}

/// Parse a netlist document, reporting problems with their 1-based line.
pub fn parse_netlist<S: Scalar>(text: &str) -> Result<NetlistDocument<S>> {
    let mut sections: [Vec<(usize, &str)>; 4] = Default::default();
    let mut seen: [Option<usize>; 4] = [None; 4];
    let mut current: Option<Section> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            let section = Section::from_header(content).ok_or_else(|| Error::Parse {
                line,
                message: format!("unknown section header '{content}'"),
            })?;
            if let Some(first) = seen[section as usize] {
                return Err(Error::Parse {
                    line,
                    message: format!("section '{content}' already opened at line {first}"),
                });
            }
            seen[section as usize] = Some(line);
            current = Some(section);
            continue;
        }
        let section = current.ok_or(Error::Parse {
            line,
            message: "content before the first section header".into(),
        })?;
        sections[section as usize].push((line, content));
    }

    // Node table: first name is ground; all names must be distinct.
    let mut node_lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut node_order: Vec<String> = Vec::new();
    for &(line, content) in &sections[Section::Nodes as usize] {
        for name in content.split_whitespace() {
            if node_lines.insert(name.to_string(), line).is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("node '{name}' declared twice"),
                });
            }
            node_order.push(name.to_string());
        }
    }
    let ground = node_order.first().cloned().ok_or(Error::Parse {
        line: 0,
        message: "document declares no nodes; [nodes] must list the ground first".into(),
    })?;

    let mut used_nodes: BTreeMap<&str, bool> = BTreeMap::new();
    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    let mut check_node = |name: &str, line: usize| -> Result<()> {
        match node_lines.get_key_value(name) {
            Some((key, _)) => {
                used_nodes.insert(key.as_str(), true);
                Ok(())
            }
            None => Err(Error::Parse {
                line,
                message: format!("node '{name}' is not declared in [nodes]"),
            }),
        }
    };
    let mut claim_label = |label: &str, line: usize| -> Result<()> {
        if let Some(first) = labels.insert(label.to_string(), line) {
            return Err(Error::Parse {
                line,
                message: format!("label '{label}' already used at line {first}"),
            });
        }
        Ok(())
    };

    let mut builder = Netlist::builder().ground(&ground);
    for name in &node_order {
        builder = builder.node(name);
    }

    for &(line, content) in &sections[Section::Elements as usize] {
        let tok: Vec<&str> = content.split_whitespace().collect();
        if tok.len() < 5 {
            return Err(Error::Parse {
                line,
                message: "element lines read: label kind node_a node_b value...".into(),
            });
        }
        let (label, kind, a, b) = (tok[0], tok[1], tok[2], tok[3]);
        claim_label(label, line)?;
        check_node(a, line)?;
        check_node(b, line)?;
        if a == b {
            return Err(Error::Parse {
                line,
                message: format!("element '{label}' connects node '{a}' to itself"),
            });
        }
        let expected = if kind == "tline" { 6 } else { 5 };
        if tok.len() != expected {
            return Err(Error::Parse {
                line,
                message: format!(
                    "'{kind}' takes {} value(s), got {}",
                    expected - 4,
                    tok.len() - 4
                ),
            });
        }
        let v = parse_value(tok[4], line)?;
        let kind = match kind {
            "resistor" => ElementKind::Resistor { ohms: v },
            "capacitor" => ElementKind::Capacitor { farads: v },
            "inductor" => ElementKind::Inductor { henries: v },
            "tline" => ElementKind::TransmissionLine {
                z0: v,
                delay: parse_value(tok[5], line)?,
            },
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown element kind '{other}'"),
                })
            }
        };
        builder = builder.element(label, kind, a, b);
    }

    for &(line, content) in &sections[Section::Ports as usize] {
        let tok: Vec<&str> = content.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(Error::Parse {
                line,
                message: "port lines read: label node_a node_b z0".into(),
            });
        }
        claim_label(tok[0], line)?;
        check_node(tok[1], line)?;
        check_node(tok[2], line)?;
        builder = builder.port(tok[0], tok[1], tok[2], parse_value(tok[3], line)?);
    }

    if let Some((name, &line)) = node_lines
        .iter()
        .find(|(name, _)| !used_nodes.contains_key(name.as_str()))
    {
        return Err(Error::Parse {
            line,
            message: format!("node '{name}' is declared but never connected"),
        });
    }

    let mut sweeps = Vec::new();
    for &(line, content) in &sections[Section::Sweeps as usize] {
        let tok: Vec<&str> = content.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(Error::Parse {
                line,
                message: "sweep lines read: element_label start stop points".into(),
            });
        }
        if !labels.contains_key(tok[0]) {
            return Err(Error::Parse {
                line,
                message: format!("sweep targets unknown element '{}'", tok[0]),
            });
        }
        sweeps.push(SweepSpec {
            label: tok[0].to_string(),
            start: parse_value(tok[1], line)?,
            stop: parse_value(tok[2], line)?,
            points: parse_count(tok[3], line)?,
        });
    }

    if sections[Section::Elements as usize].is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "document declares no elements".into(),
        });
    }

    Ok(NetlistDocument {
        netlist: builder.build()?,
        sweeps,
    })
}

fn fmt<S: Scalar>(v: S) -> String {
    format!("{:e}", v.to_f64_lossy())
}

/// Render a document in the format read by [`parse_netlist`]. Values are
/// written in base units with round-trip-exact precision; the ground node
/// leads the `[nodes]` section.
pub fn serialize_netlist<S: Scalar>(doc: &NetlistDocument<S>) -> String {
    let net = &doc.netlist;
    let mut out = String::from("[nodes]\n");
    let ground = net.node_name(net.ground());
    let mut names = vec![ground];
    names.extend(net.nodes().iter().map(String::as_str).filter(|n| *n != ground));
    for chunk in names.chunks(10) {
        out.push_str(&chunk.join(" "));
        out.push('\n');
    }

    out.push_str("\n[elements]\n");
    for e in net.elements() {
        let (a, b) = (net.node_name(e.a), net.node_name(e.b));
        let line = match &e.kind {
            ElementKind::Resistor { ohms } => {
                format!("{} resistor {a} {b} {}", e.label, fmt(*ohms))
            }
            ElementKind::Capacitor { farads } => {
                format!("{} capacitor {a} {b} {}", e.label, fmt(*farads))
            }
            ElementKind::Inductor { henries } => {
                format!("{} inductor {a} {b} {}", e.label, fmt(*henries))
            }
            ElementKind::TransmissionLine { z0, delay } => {
                format!("{} tline {a} {b} {} {}", e.label, fmt(*z0), fmt(*delay))
            }
        };
        out.push_str(&line);
        out.push('\n');
    }

    if !net.ports().is_empty() {
        out.push_str("\n[ports]\n");
        for p in net.ports() {
            let (a, b) = (net.node_name(p.a), net.node_name(p.b));
            out.push_str(&format!("{} {a} {b} {}\n", p.label, fmt(p.z0)));
        }
    }

    if !doc.sweeps.is_empty() {
        out.push_str("\n[sweeps]\n");
        for s in &doc.sweeps {
            out.push_str(&format!(
                "{} {} {} {}\n",
                s.label,
                fmt(s.start),
                fmt(s.stop),
                s.points
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigenmodes;
    use crate::synth::{build_unit_cell, UnitCellSpec};

    fn parse64(text: &str) -> Result<NetlistDocument<f64>> {
        parse_netlist(text)
    }

    #[test]
    fn minimal_resistor_doc_parses() {
        let doc = parse64("[nodes]\ngnd a\n[elements]\nR1 resistor a gnd 50\n").unwrap();
        let net = &doc.netlist;
        assert_eq!(net.node_name(net.ground()), "gnd");
        assert_eq!(net.elements().len(), 1);
        assert_eq!(
            net.element("R1").unwrap().kind,
            ElementKind::Resistor { ohms: 50.0 }
        );
        assert!(doc.sweeps.is_empty());
    }

    #[test]
    fn si_suffixes_cover_all_scales() {
        let cases = [
            ("1f", 1e-15),
            ("1p", 1e-12),
            ("2.4n", 2.4e-9),
            ("1u", 1e-6),
            ("1m", 1e-3),
            ("1k", 1e3),
            ("2.2M", 2.2e6),
            ("9.8G", 9.8e9),
            ("50", 50.0),
            ("1.5e-9", 1.5e-9),
        ];
        for (tok, want) in cases {
            let got: f64 = parse_value(tok, 1).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs(),
                "{tok}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn malformed_value_reports_its_line() {
        let text = "[nodes]\ngnd a\n[elements]\nL1 inductor a gnd 1.8nHx\n";
        match parse64(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("1.8nHx"), "{message}");
            }
            other => panic!("expected a line-numbered parse error, got {other:?}"),
        }
    }

    #[test]
    fn structural_problems_are_line_numbered() {
        let bad = [
            ("[nodes]\ngnd a\n[elements]\nX1 varactor a gnd 1p\n", 4, "kind"),
            (
                "[nodes]\ngnd a\n[elements]\nC1 capacitor a gnd 1p\nC1 capacitor a gnd 2p\n",
                5,
                "already used",
            ),
            ("[nodes]\ngnd a\n[elements]\nC1 capacitor a b 1p\n", 4, "not declared"),
            ("[nodes]\ngnd a a\n[elements]\nC1 capacitor a gnd 1p\n", 2, "twice"),
            ("[nodes]\ngnd a\n[elements]\nC1 capacitor a a 1p\n", 4, "itself"),
            ("R1 resistor a gnd 50\n", 1, "before the first section"),
            (
                "[nodes]\ngnd a extra\n[elements]\nC1 capacitor a gnd 1p\n",
                2,
                "never connected",
            ),
            (
                "[nodes]\ngnd a\n[elements]\nC1 capacitor a gnd 1p\n[sweeps]\nLx 1n 2n 5\n",
                6,
                "unknown element",
            ),
            ("[nodes]\ngnd a\n[resistors]\n", 3, "unknown section"),
            ("[nodes]\ngnd a\n[nodes]\ngnd2\n", 3, "already opened"),
        ];
        for (text, want_line, want_msg) in bad {
            match parse64(text) {
                Err(Error::Parse { line, message }) => {
                    assert_eq!(line, want_line, "{text:?}: {message}");
                    assert!(message.contains(want_msg), "{text:?}: {message}");
                }
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n[nodes]\ngnd a # trailing\n\n[elements]\n# a comment line\nC1 capacitor a gnd 1p\n";
        assert!(parse64(text).is_ok());
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "[nodes]\ngnd in out q\n[elements]\nR1 resistor in out 50\nC1 capacitor out gnd 390f\nL1 inductor out q 1.8n\nT1 tline q gnd 50 25p\n[ports]\nfeed in gnd 50\n[sweeps]\nL1 1n 3n 11\n";
        let first = parse64(text).unwrap();
        let rendered = serialize_netlist(&first);
        let second = parse64(&rendered).unwrap();
        assert_eq!(first, second);
        assert_eq!(rendered, serialize_netlist(&second));
    }

    #[test]
    fn serialized_cell_reparses_to_equal_spectra() {
        let spec: UnitCellSpec<f64> = UnitCellSpec::calibrated(1, 1).unwrap();
        let net = build_unit_cell(&spec).unwrap();
        let doc = NetlistDocument::bare(net);
        let parsed: NetlistDocument<f64> =
            parse_netlist(&serialize_netlist(&doc)).unwrap();

        let a = eigenmodes(&doc.netlist, None).unwrap();
        let b = eigenmodes(&parsed.netlist, None).unwrap();
        assert_eq!(a.len(), b.len());
        for (ma, mb) in a.iter().zip(&b) {
            assert!((ma.omega_d - mb.omega_d).abs() <= 1e-12 * ma.omega_d);
            assert!((ma.sigma - mb.sigma).abs() <= 1e-12 * ma.sigma.max(1.0));
        }
    }

    #[test]
    fn sweep_points_survive_round_trip() {
        let text = "[nodes]\ngnd a\n[elements]\nL1 inductor a gnd 2n\n[sweeps]\nL1 1n 4n 7\n";
        let doc = parse64(text).unwrap();
        assert_eq!(
            doc.sweeps,
            vec![SweepSpec {
                label: "L1".into(),
                start: 1e-9,
                stop: 4e-9,
                points: 7
            }]
        );
        let again = parse64(&serialize_netlist(&doc)).unwrap();
        assert_eq!(doc, again);
    }
}
