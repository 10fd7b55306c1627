mod svg;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use purcellkit::analysis::{filtering_ratio, normalized_q_curve, passband_metrics};
use purcellkit::eigen::{eigenmodes, identify_modes, sweep_element, BranchMap};
use purcellkit::io::{
    parse_netlist, read_fits_csv, read_coherence_csv, read_qcurve_csv, read_touchstone,
    read_trace_csv, serialize_netlist, write_fits_csv, write_modes_csv, write_overlay_csv,
    write_qcurve_csv, write_summary_csv, write_sweep_csv,
};
use purcellkit::fit::{aggregate_fits, fit_reflection, overlay_with_simulation};
use purcellkit::purcell::{t1_radiative, validate_t1_against_limit};
use purcellkit::synth::{
    attach_probe, build_no_filter_variant, build_unit_cell, defaults, patch_side,
};
use purcellkit::{hz_from_omega, omega_from_hz};
use purcellkit::{FrequencyGrid, Mode, Netlist, NetlistDocument, ResonatorFit, UnitCellSpec};

const DEFAULT_GRID: &str = "4e9:15e9:2001";

#[derive(Parser)]
#[command(name = "purcellkit", version, about = "Readout-filter circuit design and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Sample the normalized Q curve seen from a port and locate its passband.
    Simulate {
        /// Netlist document path.
        netlist: PathBuf,
        /// Port to measure from.
        #[arg(long)]
        port: String,
        /// Frequency grid in Hz as start:stop:points.
        #[arg(long, default_value = DEFAULT_GRID)]
        grid: String,
        /// CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the curve (log10) as an SVG chart.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Solve eigenmodes, or sweep one inductor and track a mode through it.
    Eigen {
        /// Netlist document path.
        netlist: PathBuf,
        /// Sweep one element: label=start:stop:points (Henries). Falls back
        /// to the document's [sweeps] section.
        #[arg(long)]
        sweep: Option<String>,
        /// Mode to follow: qubit, resonator, filter, or a full subsystem
        /// name such as qubit_2.
        #[arg(long, default_value = "qubit")]
        track: String,
        /// Keep only modes inside this band, in Hz as lo:hi.
        #[arg(long)]
        band: Option<String>,
        /// CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a calibrated multiplexed-readout unit cell as a netlist document.
    Synth {
        /// Filter passband center, Hz.
        #[arg(long, default_value_t = defaults::FILTER_CENTER_HZ)]
        f_center: f64,
        /// Filter passband width, Hz.
        #[arg(long, default_value_t = defaults::FILTER_BANDWIDTH_HZ)]
        bw: f64,
        /// Readout resonators staggered across the passband (1..=9).
        #[arg(long, default_value_t = 1)]
        n_res: usize,
        /// Qubits, at most one per resonator.
        #[arg(long, default_value_t = 1)]
        n_qubits: usize,
        /// Emit the filterless control variant instead.
        #[arg(long)]
        no_filter: bool,
        /// Also print the patch side length implementing the filter.
        #[arg(long)]
        patch: bool,
        /// Patch substrate relative permittivity.
        #[arg(long, default_value_t = 2.2)]
        eps: f64,
        /// Patch shortening ratio (0, 1].
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Netlist destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit reflection traces (Touchstone one-port or freq_hz,re,im CSV).
    Fit {
        /// Trace files; at least one.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Per-trace fit table destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Aggregate statistics CSV destination.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Look up simulated Q at each fitted resonance and tabulate both.
    Compare {
        /// Fit table produced by `fit`.
        #[arg(long)]
        fits: PathBuf,
        /// Simulated Q curve produced by `simulate`.
        #[arg(long)]
        sim: PathBuf,
        /// How far the simulated curve sits below the measured axis, Hz.
        #[arg(long, default_value_t = 0.0)]
        offset_hz: f64,
        /// CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consolidated design summary for a calibrated unit cell.
    Report {
        /// Filter passband center, Hz.
        #[arg(long, default_value_t = defaults::FILTER_CENTER_HZ)]
        f_center: f64,
        /// Filter passband width, Hz.
        #[arg(long, default_value_t = defaults::FILTER_BANDWIDTH_HZ)]
        bw: f64,
        /// Readout resonators in the cell (1..=9).
        #[arg(long, default_value_t = 1)]
        n_res: usize,
        /// Qubits, at most one per resonator.
        #[arg(long, default_value_t = 1)]
        n_qubits: usize,
        /// Patch substrate relative permittivity.
        #[arg(long, default_value_t = 2.2)]
        eps: f64,
        /// Patch shortening ratio (0, 1].
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Measured coherence table to check against the filterless T1 limit.
        #[arg(long)]
        coherence: Option<PathBuf>,
        /// Report destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Commands::Simulate {
            netlist,
            port,
            grid,
            out,
            svg,
        } => simulate(&netlist, &port, &grid, out.as_deref(), svg.as_deref()),
        Commands::Eigen {
            netlist,
            sweep,
            track,
            band,
            out,
        } => eigen(&netlist, sweep.as_deref(), &track, band.as_deref(), out.as_deref()),
        Commands::Synth {
            f_center,
            bw,
            n_res,
            n_qubits,
            no_filter,
            patch,
            eps,
            rho,
            out,
        } => synth(f_center, bw, n_res, n_qubits, no_filter, patch, eps, rho, out.as_deref()),
        Commands::Fit {
            traces,
            out,
            summary,
        } => fit(&traces, out.as_deref(), summary.as_deref()),
        Commands::Compare {
            fits,
            sim,
            offset_hz,
            out,
        } => compare(&fits, &sim, offset_hz, out.as_deref()),
        Commands::Report {
            f_center,
            bw,
            n_res,
            n_qubits,
            eps,
            rho,
            coherence,
            out,
        } => report(f_center, bw, n_res, n_qubits, eps, rho, coherence.as_deref(), out.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn load_document(path: &Path) -> Result<NetlistDocument> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_netlist(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_triple(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("expected start:stop:points, got '{s}'");
    }
    Ok((
        parts[0].parse().with_context(|| format!("bad start '{}'", parts[0]))?,
        parts[1].parse().with_context(|| format!("bad stop '{}'", parts[1]))?,
        parts[2].parse().with_context(|| format!("bad point count '{}'", parts[2]))?,
    ))
}

fn parse_grid(s: &str) -> Result<FrequencyGrid> {
    let (start, stop, points) = parse_triple(s)?;
    Ok(FrequencyGrid::linspace_hz(start, stop, points)?)
}

fn parse_band(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        bail!("expected lo:hi in Hz, got '{s}'");
    }
    Ok((
        omega_from_hz(parts[0].parse::<f64>().context("bad band low edge")?),
        omega_from_hz(parts[1].parse::<f64>().context("bad band high edge")?),
    ))
}

fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start];
    }
    (0..points)
        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Expand the shorthand subsystem names used by `--track`.
fn track_name(name: &str) -> String {
    match name {
        "qubit" => "qubit_1".to_string(),
        "resonator" => "resonator_1".to_string(),
        other => other.to_string(),
    }
}

fn split_trailing_digits(label: &str) -> (&str, Option<usize>) {
    let head = label.trim_end_matches(|c: char| c.is_ascii_digit());
    if head.len() == label.len() {
        (label, None)
    } else {
        (head, label[head.len()..].parse().ok())
    }
}

/// Recover subsystem assignments from the element naming convention used by
/// synthesized cells (Lf/Cf/Lstub, then Lres3/Cres3/Cc3, Lqb2/Cqb2/Cqr2/Cqf2).
fn infer_branch_map(net: &Netlist) -> BranchMap {
    let mut map = BranchMap::new();
    for e in net.elements() {
        let subsystem = match split_trailing_digits(&e.label) {
            ("Lf" | "Cf" | "Lstub", None) => Some("filter".to_string()),
            ("Lres" | "Cres" | "Cc", Some(k)) => Some(format!("resonator_{k}")),
            ("Lqb" | "Cqb" | "Cqr" | "Cqf", Some(k)) => Some(format!("qubit_{k}")),
            _ => None,
        };
        if let Some(s) = subsystem {
            map = map.assign(&e.label, &s);
        }
    }
    map
}

fn find_mode<'a>(modes: &'a [Mode], identity: &str) -> Option<&'a Mode> {
    modes.iter().find(|m| m.identity.as_deref() == Some(identity))
}

// ---------------------------------------------------------------------------
// Commands.

fn simulate(
    netlist: &Path,
    port: &str,
    grid: &str,
    out: Option<&Path>,
    svg_out: Option<&Path>,
) -> Result<()> {
    let doc = load_document(netlist)?;
    let grid = parse_grid(grid)?;
    let curve = normalized_q_curve(&doc.netlist, port, &grid)?;

    let mut buf = Vec::new();
    write_qcurve_csv(&mut buf, &curve)?;
    write_output(out, &buf)?;

    match passband_metrics(&curve) {
        Ok(m) => {
            let fmt_edge = |v: Option<f64>| match v {
                Some(w) => format!("{:.4} GHz", hz_from_omega(w) / 1e9),
                None => "off-grid".to_string(),
            };
            eprintln!(
                "passband: center {:.4} GHz, edges {} / {}, q {}",
                hz_from_omega(m.center) / 1e9,
                fmt_edge(m.lower),
                fmt_edge(m.upper),
                m.q.map(|q| format!("{q:.2}")).unwrap_or_else(|| "n/a".into()),
            );
        }
        Err(e) => eprintln!("passband: {e}"),
    }

    if let Some(path) = svg_out {
        let points: Vec<(f64, Option<f64>)> = curve
            .omegas()
            .iter()
            .zip(curve.values())
            .map(|(&w, v)| (hz_from_omega(w) / 1e9, v.map(f64::log10)))
            .collect();
        let chart = svg::line_chart(
            &points,
            &format!("normalized Q at port {port}"),
            "frequency (GHz)",
            "log10 normalized Q",
        );
        fs::write(path, chart).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn eigen(
    netlist: &Path,
    sweep: Option<&str>,
    track: &str,
    band: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let doc = load_document(netlist)?;
    let map = infer_branch_map(&doc.netlist);
    let band = band.map(parse_band).transpose()?;

    let sweep = match sweep {
        Some(s) => {
            let (label, range) = s
                .split_once('=')
                .ok_or_else(|| anyhow!("expected label=start:stop:points, got '{s}'"))?;
            let (start, stop, points) = parse_triple(range)?;
            Some((label.to_string(), start, stop, points))
        }
        None => doc
            .sweeps
            .first()
            .map(|s| (s.label.clone(), s.start, s.stop, s.points)),
    };

    let mut buf = Vec::new();
    match sweep {
        Some((label, start, stop, points)) => {
            let values = linspace(start, stop, points);
            let trace = sweep_element(
                &doc.netlist,
                &map,
                &label,
                &values,
                &track_name(track),
                band,
            )?;
            write_sweep_csv(&mut buf, &trace)?;
        }
        None => {
            let modes = identify_modes(eigenmodes(&doc.netlist, band)?, &map);
            write_modes_csv(&mut buf, &modes)?;
        }
    }
    write_output(out, &buf)
}

#[allow(clippy::too_many_arguments)]
fn synth(
    f_center: f64,
    bw: f64,
    n_res: usize,
    n_qubits: usize,
    no_filter: bool,
    patch: bool,
    eps: f64,
    rho: f64,
    out: Option<&Path>,
) -> Result<()> {
    let spec = UnitCellSpec::calibrated_for(f_center, bw, n_res, n_qubits)?;
    // Both variants get a weakly coupled probe port so `simulate` can see the
    // passband (filtered cell) or the direct-coupling scaling (control).
    let net = if no_filter {
        let net = build_no_filter_variant(&spec)?;
        attach_probe(&net, "res1", spec.filter.c_f * 1e-3, spec.output_z0)?
    } else {
        let net = build_unit_cell(&spec)?;
        attach_probe(&net, "filter", spec.filter.c_f * 1e-3, spec.output_z0)?
    };

    let mut text = String::new();
    if patch {
        let side = patch_side(f_center, eps, rho)?;
        text.push_str(&format!(
            "# patch side a = {:.3} mm for f_r = {:.3} GHz (eps_r = {eps}, rho = {rho})\n",
            side * 1e3,
            f_center / 1e9,
        ));
    }
    text.push_str(&serialize_netlist(&NetlistDocument::bare(net)));
    write_output(out, text.as_bytes())
}

fn load_trace(path: &Path) -> Result<purcellkit::ReflectionTrace> {
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    let trace = if is_csv {
        read_trace_csv(
            fs::read(path)
                .with_context(|| format!("reading {}", path.display()))?
                .as_slice(),
        )
    } else {
        read_touchstone(path)
    };
    trace.with_context(|| format!("loading trace {}", path.display()))
}

fn fit(traces: &[PathBuf], out: Option<&Path>, summary: Option<&Path>) -> Result<()> {
    let mut fits: Vec<(String, ResonatorFit)> = Vec::new();
    for path in traces {
        let trace = load_trace(path)?;
        let fit = fit_reflection(&trace)
            .with_context(|| format!("fitting {}", path.display()))?;
        fits.push((path.display().to_string(), fit));
    }

    let mut buf = Vec::new();
    write_fits_csv(&mut buf, &fits)?;
    write_output(out, &buf)?;

    let bare: Vec<ResonatorFit> = fits.iter().map(|(_, f)| f.clone()).collect();
    match aggregate_fits(&bare) {
        Ok(agg) => {
            eprintln!(
                "{} of {} fits converged; median q_int {:.4e}, q_ext {:.4e}, q_tot {:.4e}",
                agg.n_converged,
                agg.n_fits,
                agg.median_q_int,
                agg.median_q_ext,
                agg.median_q_tot,
            );
            if let Some(path) = summary {
                let mut buf = Vec::new();
                write_summary_csv(&mut buf, &agg)?;
                write_output(Some(path), &buf)?;
            }
        }
        Err(e) => {
            if summary.is_some() {
                return Err(e.into());
            }
            eprintln!("no aggregate statistics: {e}");
        }
    }
    Ok(())
}

fn compare(fits: &Path, sim: &Path, offset_hz: f64, out: Option<&Path>) -> Result<()> {
    let fits_bytes = fs::read(fits).with_context(|| format!("reading {}", fits.display()))?;
    let fits: Vec<ResonatorFit> = read_fits_csv(fits_bytes.as_slice())
        .with_context(|| format!("parsing {}", fits.display()))?
        .into_iter()
        .map(|(_, f)| f)
        .collect();
    let sim_bytes = fs::read(sim).with_context(|| format!("reading {}", sim.display()))?;
    let curve = read_qcurve_csv(sim_bytes.as_slice())
        .with_context(|| format!("parsing {}", sim.display()))?;

    let overlay = overlay_with_simulation(&fits, &curve, offset_hz)?;
    let mut buf = Vec::new();
    write_overlay_csv(&mut buf, &overlay)?;
    write_output(out, &buf)?;

    match overlay.rank_correlation {
        Some(r) => eprintln!(
            "{} resonators; rank correlation measured-vs-simulated {r:.3}",
            overlay.rows.len()
        ),
        None => eprintln!(
            "{} resonators; rank correlation undefined",
            overlay.rows.len()
        ),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn report(
    f_center: f64,
    bw: f64,
    n_res: usize,
    n_qubits: usize,
    eps: f64,
    rho: f64,
    coherence: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let mut text = String::new();
    let spec = UnitCellSpec::calibrated_for(f_center, bw, n_res, n_qubits)?;
    text.push_str(&format!(
        "unit cell: {n_res} resonator(s), {n_qubits} qubit(s); output {} ohm\n",
        spec.output_z0
    ));
    text.push_str(&format!(
        "filter: L_f {:.4e} H, C_f {:.4e} F, L_stub {:.4e} H\n",
        spec.filter.l_f, spec.filter.c_f, spec.filter.l_stub
    ));
    let side = patch_side(f_center, eps, rho)?;
    text.push_str(&format!(
        "patch: side a = {:.3} mm at {:.3} GHz (eps_r = {eps}, rho = {rho})\n",
        side * 1e3,
        f_center / 1e9,
    ));

    let net = build_unit_cell(&spec)?;
    let probed = attach_probe(&net, "filter", spec.filter.c_f * 1e-3, spec.output_z0)?;
    let grid = parse_grid(DEFAULT_GRID)?;
    let curve = normalized_q_curve(&probed, "probe", &grid)?;
    let metrics = passband_metrics(&curve)?;
    text.push_str(&format!(
        "passband: center {:.4} GHz, bandwidth {}, q {}\n",
        hz_from_omega(metrics.center) / 1e9,
        metrics
            .bandwidth
            .map(|b| format!("{:.4} GHz", hz_from_omega(b) / 1e9))
            .unwrap_or_else(|| "off-grid".into()),
        metrics.q.map(|q| format!("{q:.2}")).unwrap_or_else(|| "n/a".into()),
    ));

    let f_qubit = defaults::QUBIT_FREQ_HZ;
    let ratio = filtering_ratio(&curve, omega_from_hz(f_qubit), omega_from_hz(f_center))?;
    text.push_str(&format!(
        "filtering ratio: {ratio:.1} dB between {:.2} GHz and the passband center\n",
        f_qubit / 1e9
    ));

    let map = infer_branch_map(&net);
    let modes = identify_modes(eigenmodes(&net, None)?, &map);
    text.push_str("modes:\n");
    for m in &modes {
        text.push_str(&format!(
            "  {:<12} {:>8.4} GHz  Q {}\n",
            m.identity.as_deref().unwrap_or("?"),
            m.frequency_hz() / 1e9,
            m.q.map(|q| format!("{q:.3e}")).unwrap_or_else(|| "undamped".into()),
        ));
    }

    if n_qubits > 0 {
        let control = identify_modes(
            eigenmodes(&build_no_filter_variant(&spec)?, None)?,
            &map,
        );
        let with = find_mode(&modes, "qubit_1")
            .and_then(|m| m.q.map(|q| (m.omega_d, q)))
            .ok_or_else(|| anyhow!("qubit mode missing from the filtered cell"))?;
        let without = find_mode(&control, "qubit_1")
            .and_then(|m| m.q.map(|q| (m.omega_d, q)))
            .ok_or_else(|| anyhow!("qubit mode missing from the filterless cell"))?;
        let t1_with = t1_radiative(with.1, with.0)?;
        let t1_without = t1_radiative(without.1, without.0)?;
        text.push_str(&format!(
            "qubit radiative limits:\n  with filter    Q {:.3e}  T1 {:.1} us\n  without filter Q {:.3e}  T1 {:.1} us\n",
            with.1,
            t1_with * 1e6,
            without.1,
            t1_without * 1e6,
        ));
        text.push_str(&format!(
            "  protection {:.1} dB (factor {:.0})\n",
            10.0 * (with.1 / without.1).log10(),
            with.1 / without.1,
        ));

        if let Some(path) = coherence {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let samples = read_coherence_csv(bytes.as_slice())
                .with_context(|| format!("parsing {}", path.display()))?;
            let v = validate_t1_against_limit(&samples, t1_without)?;
            text.push_str(&format!(
                "coherence: {} of {} samples above the {:.1} us filterless limit; T1/limit min {:.2}, median {:.2}, max {:.2}\n",
                v.count_above,
                v.count_above + v.count_not_above,
                t1_without * 1e6,
                v.min_margin,
                v.median_margin,
                v.max_margin,
            ));
        }
    } else if coherence.is_some() {
        bail!("--coherence needs a cell with at least one qubit");
    }

    write_output(out, text.as_bytes())
}
