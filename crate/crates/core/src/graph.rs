//! Weighted category networks: nodes are category values, edges count the
//! pages that carry both endpoints.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::mca::{category_order, CategoryTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Hand,
    Language,
    Subject,
    Topic,
    Quire,
    Composite,
    Other,
}

impl Partition {
    pub fn of_variable(name: &str) -> Self {
        match name {
            "hand" => Partition::Hand,
            "language" => Partition::Language,
            "subject" => Partition::Subject,
            "topic" => Partition::Topic,
            "quire" => Partition::Quire,
            _ => Partition::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Hand => "hand",
            Partition::Language => "language",
            Partition::Subject => "subject",
            Partition::Topic => "topic",
            Partition::Quire => "quire",
            Partition::Composite => "composite",
            Partition::Other => "other",
        }
    }

    pub fn color(self) -> &'static str {
        match self {
            Partition::Hand => "yellow",
            Partition::Subject => "green",
            Partition::Topic => "red",
            Partition::Composite => "white",
            Partition::Language => "lightblue",
            Partition::Quire | Partition::Other => "lightgray",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub id: String,
    pub partition: Partition,
    pub label: String,
}

/// Undirected; `a < b` by node id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryGraph {
    pub name: String,
    /// Sorted by id.
    pub nodes: Vec<Node>,
    /// Sorted by `(a, b)`.
    pub edges: Vec<Edge>,
}

pub fn node_id(variable: &str, value: &str) -> String {
    format!("{variable}:{value}")
}

struct Builder {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<(String, String), u64>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    fn node(&mut self, id: String, partition: Partition, label: String) -> String {
        self.nodes.entry(id.clone()).or_insert(Node {
            id: id.clone(),
            partition,
            label,
        });
        id
    }

    fn edge(&mut self, x: String, y: String) {
        let key = if x < y { (x, y) } else { (y, x) };
        *self.edges.entry(key).or_insert(0) += 1;
    }

    fn finish(self, name: String) -> CategoryGraph {
        CategoryGraph {
            name,
            nodes: self.nodes.into_values().collect(),
            edges: self
                .edges
                .into_iter()
                .map(|((a, b), weight)| Edge { a, b, weight })
                .collect(),
        }
    }
}

fn variable_node(b: &mut Builder, var: &str, value: &str) -> String {
    b.node(node_id(var, value), Partition::of_variable(var), format!("{var} {value}"))
}

/// Bipartite graph between the values of two variables.
pub fn build_category_graph(table: &CategoryTable, var_a: &str, var_b: &str) -> Result<CategoryGraph> {
    if var_a == var_b {
        return Err(Error::arg(format!("a category graph needs two distinct variables, got `{var_a}` twice")));
    }
    let (ia, ib) = (table.variable_index(var_a)?, table.variable_index(var_b)?);
    let mut b = Builder::new();
    for row in &table.values {
        let x = variable_node(&mut b, var_a, &row[ia]);
        let y = variable_node(&mut b, var_b, &row[ib]);
        b.edge(x, y);
    }
    Ok(b.finish(format!("{var_a}_{var_b}")))
}

/// Hands linked to observed `subject-topic` pairs.
pub fn build_composite_graph(
    table: &CategoryTable,
    topic_var: &str,
    subject_var: &str,
    hand_var: &str,
) -> Result<CategoryGraph> {
    let it = table.variable_index(topic_var)?;
    let is = table.variable_index(subject_var)?;
    let ih = table.variable_index(hand_var)?;
    let mut b = Builder::new();
    for row in &table.values {
        let pair = format!("{}-{}", row[is], row[it]);
        let c = b.node(node_id("composite", &pair), Partition::Composite, pair);
        let h = variable_node(&mut b, hand_var, &row[ih]);
        b.edge(h, c);
    }
    Ok(b.finish(format!("{hand_var}_{subject_var}-{topic_var}")))
}

impl CategoryGraph {
    pub fn file_stem(&self) -> String {
        format!("graph_{}", self.name)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn weight(&self, x: &str, y: &str) -> u64 {
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        self.edges
            .iter()
            .find(|e| e.a == a && e.b == b)
            .map_or(0, |e| e.weight)
    }

    /// Total weight of edges touching `id`.
    pub fn degree(&self, id: &str) -> u64 {
        self.edges
            .iter()
            .filter(|e| e.a == id || e.b == id)
            .map(|e| e.weight)
            .sum()
    }

    pub fn nodes_in(&self, partition: Partition) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.partition == partition)
    }

    /// Nodes of one partition sorted by [`category_order`] on their value.
    pub fn sorted_values(&self, partition: Partition) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .nodes_in(partition)
            .map(|n| n.id.split_once(':').map_or(n.id.as_str(), |(_, v)| v))
            .collect();
        v.sort_by(|a, b| category_order(a, b));
        v
    }
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT text; byte-identical for equal graphs.
pub fn export_dot(graph: &CategoryGraph) -> String {
    let mut out = String::new();
    let max = graph.edges.iter().map(|e| e.weight).max().unwrap_or(1) as f64;
    writeln!(out, "graph {} {{", dot_quote(&graph.name)).unwrap();
    if !graph.nodes.is_empty() {
        writeln!(out, "  node [style=filled];").unwrap();
    }
    for n in &graph.nodes {
        writeln!(
            out,
            "  {} [label={}, partition={}, fillcolor={}];",
            dot_quote(&n.id),
            dot_quote(&n.label),
            dot_quote(n.partition.as_str()),
            dot_quote(n.partition.color())
        )
        .unwrap();
    }
    for e in &graph.edges {
        writeln!(
            out,
            "  {} -- {} [label=\"{}\", weight={}, penwidth=\"{:.3}\"];",
            dot_quote(&e.a),
            dot_quote(&e.b),
            e.weight,
            e.weight,
            1.0 + 4.0 * e.weight as f64 / max
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn export_graphml(graph: &CategoryGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"partition\" for=\"node\" attr.name=\"partition\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"color\" for=\"node\" attr.name=\"color\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"long\"/>\n");
    writeln!(out, "  <graph id=\"{}\" edgedefault=\"undirected\">", xml_escape(&graph.name)).unwrap();
    for n in &graph.nodes {
        writeln!(
            out,
            "    <node id=\"{}\"><data key=\"label\">{}</data><data key=\"partition\">{}</data><data key=\"color\">{}</data></node>",
            xml_escape(&n.id),
            xml_escape(&n.label),
            n.partition.as_str(),
            n.partition.color()
        )
        .unwrap();
    }
    for e in &graph.edges {
        writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{}</data></edge>",
            xml_escape(&e.a),
            xml_escape(&e.b),
            e.weight
        )
        .unwrap();
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(vars: &[&str], rows: &[&[&str]]) -> CategoryTable {
        CategoryTable::new(
            vars.iter().map(|s| s.to_string()).collect(),
            (0..rows.len()).map(|i| format!("p{i}")).collect(),
            rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_pairing_collapses_to_one_edge() {
        let row: &[&str] = &["1", "recipes"];
        let t = table(&["hand", "subject"], &[row; 3]);
        let g = build_category_graph(&t, "hand", "subject").unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].weight, 3);
        assert!(export_dot(&g).contains("label=\"3\""));
        assert_eq!(g.file_stem(), "graph_hand_subject");
    }

    #[test]
    fn weights_sum_to_pages() {
        let t = table(
            &["hand", "subject"],
            &[&["1", "botanical"], &["2", "starred"], &["1", "botanical"], &["4", "astrological"], &["2", "balneological"]],
        );
        let g = build_category_graph(&t, "hand", "subject").unwrap();
        assert_eq!(g.total_weight(), 5);
        let hand_degree: u64 = g.nodes_in(Partition::Hand).map(|n| g.degree(&n.id)).sum();
        assert_eq!(hand_degree, 5);
        assert_eq!(g.weight("subject:botanical", "hand:1"), 2);
        assert!(build_category_graph(&t, "hand", "quire").is_err());
        assert!(build_category_graph(&t, "hand", "hand").is_err());
    }

    #[test]
    fn composite_nodes_are_observed_pairs() {
        let t = table(
            &["hand", "subject", "topic"],
            &[&["3", "astrological", "4"], &["1", "botanical", "0"], &["3", "astrological", "4"]],
        );
        let g = build_composite_graph(&t, "topic", "subject", "hand").unwrap();
        let labels: Vec<&str> = g.nodes_in(Partition::Composite).map(|n| n.label.as_str()).collect();
        assert_eq!(labels, ["astrological-4", "botanical-0"]);
        assert_eq!(g.weight("hand:3", "composite:astrological-4"), 2);
    }

    #[test]
    fn dot_is_deterministic_and_handles_empty() {
        let empty = CategoryGraph {
            name: "x".into(),
            nodes: vec![],
            edges: vec![],
        };
        assert_eq!(export_dot(&empty), "graph \"x\" {\n}\n");
        let t = table(&["hand", "topic"], &[&["2", "1"], &["1", "0"]]);
        let g = build_category_graph(&t, "hand", "topic").unwrap();
        assert_eq!(export_dot(&g), export_dot(&g.clone()));
        assert!(export_dot(&g).contains("fillcolor=\"yellow\""));
        assert!(export_graphml(&g).contains("edgedefault=\"undirected\""));
    }
}
