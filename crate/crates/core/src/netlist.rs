//! Circuit description: nodes, two-terminal elements, ports, frequency grids.
//!
//! A [`Netlist`] is an immutable, validated description of a lumped RLC network
//! with optional ideal transmission lines and a set of measurement ports.
//! Analysis code consumes it read-only; parameter sweeps produce modified
//! copies via [`Netlist::with_element_value`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index into the node table of the owning netlist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementKind<S> {
    Resistor { ohms: S },
    Capacitor { farads: S },
    Inductor { henries: S },
    /// Ideal lossless line characterized by its impedance and one-way delay.
    TransmissionLine { z0: S, delay: S },
}

impl<S: Scalar> ElementKind<S> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ElementKind::Resistor { .. } => "R",
            ElementKind::Capacitor { .. } => "C",
            ElementKind::Inductor { .. } => "L",
            ElementKind::TransmissionLine { .. } => "TLINE",
        }
    }

    /// True for capacitors and inductors: the elements that store energy and
    /// therefore contribute dynamic state to the eigenproblem.
    pub fn stores_energy(&self) -> bool {
        matches!(
            self,
            ElementKind::Capacitor { .. } | ElementKind::Inductor { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element<S> {
    pub label: String,
    pub kind: ElementKind<S>,
    pub a: NodeId,
    pub b: NodeId,
}

/// A measurement port across two nodes with a real reference impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct Port<S> {
    pub label: String,
    pub a: NodeId,
    pub b: NodeId,
    pub z0: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist<S> {
    nodes: Vec<String>,
    ground: NodeId,
    elements: Vec<Element<S>>,
    ports: Vec<Port<S>>,
}

impl<S: Scalar> Netlist<S> {
    pub fn builder() -> NetlistBuilder<S> {
        NetlistBuilder::new()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn ground(&self) -> NodeId {
        self.ground
    }

    pub fn elements(&self) -> &[Element<S>] {
        &self.elements
    }

    pub fn ports(&self) -> &[Port<S>] {
        &self.ports
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == name).map(NodeId)
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0]
    }

    pub fn element(&self, label: &str) -> Option<&Element<S>> {
        self.elements.iter().find(|e| e.label == label)
    }

    pub fn port(&self, label: &str) -> Option<&Port<S>> {
        self.ports.iter().find(|p| p.label == label)
    }

    /// Number of non-ground nodes, i.e. the dimension of the nodal matrix.
    pub fn dim(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Maps a node to its row in the nodal system; ground maps to `None`.
    pub fn unknown_index(&self, id: NodeId) -> Option<usize> {
        if id == self.ground {
            None
        } else if id.0 < self.ground.0 {
            Some(id.0)
        } else {
            Some(id.0 - 1)
        }
    }

    /// Copy of this netlist with the principal value of one R, L, or C
    /// replaced. Used by parameter sweeps.
    pub fn with_element_value(&self, label: &str, value: S) -> Result<Netlist<S>> {
        if value <= S::zero() {
            return Err(Error::Domain(format!(
                "replacement value for '{label}' must be positive"
            )));
        }
        let mut out = self.clone();
        let el = out
            .elements
            .iter_mut()
            .find(|e| e.label == label)
            .ok_or_else(|| Error::UnknownElement(label.to_string()))?;
        match &mut el.kind {
            ElementKind::Resistor { ohms } => *ohms = value,
            ElementKind::Capacitor { farads } => *farads = value,
            ElementKind::Inductor { henries } => *henries = value,
            ElementKind::TransmissionLine { .. } => {
                return Err(Error::Domain(format!(
                    "'{label}' is a transmission line; only R, L, C values can be replaced"
                )))
            }
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.nodes.is_empty() {
            issues.push("netlist declares no nodes".to_string());
        }
        if self.ground.0 >= self.nodes.len() {
            issues.push("ground node is not declared".to_string());
        }
        let mut seen = std::collections::HashSet::new();
        for name in &self.nodes {
            if !seen.insert(name.as_str()) {
                issues.push(format!("node '{name}' declared more than once"));
            }
        }
        let mut labels = std::collections::HashSet::new();
        for el in &self.elements {
            if !labels.insert(el.label.as_str()) {
                issues.push(format!("label '{}' is not unique", el.label));
            }
            if el.a == el.b {
                issues.push(format!(
                    "element '{}' has both terminals on node '{}'",
                    el.label,
                    self.node_name(el.a)
                ));
            }
            if el.a.0 >= self.nodes.len() || el.b.0 >= self.nodes.len() {
                issues.push(format!("element '{}' references an undeclared node", el.label));
                continue;
            }
            let positive = |v: S| v > S::zero();
            let ok = match el.kind {
                ElementKind::Resistor { ohms } => positive(ohms),
                ElementKind::Capacitor { farads } => positive(farads),
                ElementKind::Inductor { henries } => positive(henries),
                // delay = 0 is a degenerate but representable line; it shows up
                // as a pole at every frequency and is reported there.
                ElementKind::TransmissionLine { z0, delay } => positive(z0) && delay >= S::zero(),
            };
            if !ok {
                issues.push(format!(
                    "element '{}' has a non-positive value",
                    el.label
                ));
            }
        }
        for p in &self.ports {
            if !labels.insert(p.label.as_str()) {
                issues.push(format!("label '{}' is not unique", p.label));
            }
            if p.a == p.b {
                issues.push(format!("port '{}' has both terminals on one node", p.label));
            }
            if p.a.0 >= self.nodes.len() || p.b.0 >= self.nodes.len() {
                issues.push(format!("port '{}' references an undeclared node", p.label));
            }
            if p.z0 <= S::zero() {
                issues.push(format!(
                    "port '{}' has non-positive reference impedance",
                    p.label
                ));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidNetlist(issues))
        }
    }
}

/// Incrementally assembles a [`Netlist`]. Nodes are registered on first use;
/// `build` runs full validation.
pub struct NetlistBuilder<S> {
    nodes: Vec<String>,
    ground: Option<String>,
    elements: Vec<(String, ElementKind<S>, String, String)>,
    ports: Vec<(String, String, String, S)>,
}

impl<S: Scalar> Default for NetlistBuilder<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> NetlistBuilder<S> {
    pub fn new() -> Self {
        NetlistBuilder {
            nodes: Vec::new(),
            ground: None,
            elements: Vec::new(),
            ports: Vec::new(),
        }
    }

    fn intern(&mut self, name: &str) {
        if !self.nodes.iter().any(|n| n == name) {
            self.nodes.push(name.to_string());
        }
    }

    /// Declare a node explicitly (optional; terminals auto-declare).
    pub fn node(mut self, name: &str) -> Self {
        self.intern(name);
        self
    }

    /// Name the ground reference node. Defaults to `gnd`.
    pub fn ground(mut self, name: &str) -> Self {
        self.intern(name);
        self.ground = Some(name.to_string());
        self
    }

    pub fn element(mut self, label: &str, kind: ElementKind<S>, a: &str, b: &str) -> Self {
        self.intern(a);
        self.intern(b);
        self.elements
            .push((label.to_string(), kind, a.to_string(), b.to_string()));
        self
    }

    pub fn resistor(self, label: &str, a: &str, b: &str, ohms: S) -> Self {
        self.element(label, ElementKind::Resistor { ohms }, a, b)
    }

    pub fn capacitor(self, label: &str, a: &str, b: &str, farads: S) -> Self {
        self.element(label, ElementKind::Capacitor { farads }, a, b)
    }

    pub fn inductor(self, label: &str, a: &str, b: &str, henries: S) -> Self {
        self.element(label, ElementKind::Inductor { henries }, a, b)
    }

    pub fn tline(self, label: &str, a: &str, b: &str, z0: S, delay: S) -> Self {
        self.element(label, ElementKind::TransmissionLine { z0, delay }, a, b)
    }

    pub fn port(mut self, label: &str, a: &str, b: &str, z0: S) -> Self {
        self.intern(a);
        self.intern(b);
        self.ports
            .push((label.to_string(), a.to_string(), b.to_string(), z0));
        self
    }

    pub fn build(mut self) -> Result<Netlist<S>> {
        let ground_name = self.ground.clone().unwrap_or_else(|| "gnd".to_string());
        self.intern(&ground_name);
        let find = |nodes: &[String], name: &str| -> NodeId {
            NodeId(nodes.iter().position(|n| n == name).unwrap())
        };
        let nodes = self.nodes;
        let net = Netlist {
            ground: find(&nodes, &ground_name),
            elements: self
                .elements
                .into_iter()
                .map(|(label, kind, a, b)| Element {
                    label,
                    kind,
                    a: find(&nodes, &a),
                    b: find(&nodes, &b),
                })
                .collect(),
            ports: self
                .ports
                .into_iter()
                .map(|(label, a, b, z0)| Port {
                    label,
                    a: find(&nodes, &a),
                    b: find(&nodes, &b),
                    z0,
                })
                .collect(),
            nodes,
        };
        net.validate()?;
        Ok(net)
    }
}

/// Strictly increasing positive angular frequencies (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<S> {
    omegas: Vec<S>,
}

impl<S: Scalar> FrequencyGrid<S> {
    pub fn new(omegas: Vec<S>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::Domain("frequency grid is empty".into()));
        }
        if omegas[0] <= S::zero() {
            return Err(Error::Domain("frequency grid must be positive".into()));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        Ok(FrequencyGrid { omegas })
    }

    /// Uniform grid between two frequencies given in Hz, inclusive.
    pub fn linspace_hz(start_hz: S, stop_hz: S, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Domain("grid needs at least 2 points".into()));
        }
        if !(S::zero() < start_hz && start_hz < stop_hz) {
            return Err(Error::Domain(
                "grid needs 0 < start < stop frequencies".into(),
            ));
        }
        let step = (stop_hz - start_hz) / S::of((points - 1) as f64);
        let omegas = (0..points)
            .map(|i| S::two_pi() * (start_hz + step * S::of(i as f64)))
            .collect();
        FrequencyGrid::new(omegas)
    }

    pub fn omegas(&self) -> &[S] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rlc() -> Netlist<f64> {
        Netlist::builder()
            .resistor("R1", "n1", "gnd", 5e3)
            .inductor("L1", "n1", "gnd", 1.8e-9)
            .capacitor("C1", "n1", "gnd", 146.52e-15)
            .port("P1", "n1", "gnd", 50.0)
            .build()
            .unwrap()
    }

    #[test]
    fn builder_auto_declares_nodes_and_ground() {
        let net = rlc();
        assert_eq!(net.nodes().len(), 2);
        assert_eq!(net.node_name(net.ground()), "gnd");
        assert_eq!(net.dim(), 1);
        assert_eq!(net.unknown_index(net.node("n1").unwrap()), Some(0));
        assert_eq!(net.unknown_index(net.ground()), None);
    }

    #[test]
    fn duplicate_labels_are_rejected_with_both_names_listed() {
        let err = Netlist::<f64>::builder()
            .resistor("X", "a", "gnd", 1.0)
            .capacitor("X", "a", "gnd", 1e-12)
            .port("X", "a", "gnd", 50.0)
            .build()
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.matches("'X' is not unique").count() >= 2, "{msg}");
    }

    #[test]
    fn shorted_element_is_rejected_by_name() {
        let err = Netlist::<f64>::builder()
            .resistor("Rshort", "a", "a", 1.0)
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("Rshort"));
    }

    #[test]
    fn non_positive_values_are_rejected() {
        let err = Netlist::<f64>::builder()
            .capacitor("Cbad", "a", "gnd", 0.0)
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("Cbad"));
        // zero-delay line is representable; it fails later, at evaluation
        assert!(Netlist::<f64>::builder()
            .tline("T", "a", "b", 50.0, 0.0)
            .build()
            .is_ok());
    }

    #[test]
    fn with_element_value_replaces_only_the_target() {
        let net = rlc();
        let swept = net.with_element_value("L1", 2.0e-9).unwrap();
        match swept.element("L1").unwrap().kind {
            ElementKind::Inductor { henries } => assert_eq!(henries, 2.0e-9),
            _ => panic!(),
        }
        match swept.element("R1").unwrap().kind {
            ElementKind::Resistor { ohms } => assert_eq!(ohms, 5e3),
            _ => panic!(),
        }
        assert!(net.with_element_value("L9", 1e-9).is_err());
        assert!(net.with_element_value("L1", -1e-9).is_err());
    }

    #[test]
    fn grid_construction_enforces_monotonicity() {
        assert!(FrequencyGrid::new(vec![1.0, 2.0, 2.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0, 2.0]).is_err());
        let g = FrequencyGrid::linspace_hz(4e9, 15e9, 2001).unwrap();
        assert_eq!(g.len(), 2001);
        assert!((g.omegas()[0] - 2.0 * std::f64::consts::PI * 4e9).abs() < 1e-3);
        assert!((g.omegas()[2000] - 2.0 * std::f64::consts::PI * 15e9).abs() < 1e-3);
    }
}
