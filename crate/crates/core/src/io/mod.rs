//! File formats: the plain-text netlist document, Touchstone one-port
//! traces, and the CSV tables produced and consumed by the command-line
//! tools.

mod netlist_text;
mod tables;
mod touchstone;

pub use netlist_text::{parse_netlist, serialize_netlist, NetlistDocument, SweepSpec};
pub use tables::{
    read_coherence_csv, read_fits_csv, read_qcurve_csv, read_trace_csv, write_fits_csv,
    write_modes_csv, write_overlay_csv, write_qcurve_csv, write_summary_csv,
    write_suppression_csv, write_sweep_csv,
};
pub use touchstone::{parse_touchstone, read_touchstone};
