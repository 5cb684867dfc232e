//! Graphviz rendering of narrative maps.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::corpus::FrameTaxonomy;
use crate::extraction::NarrativeMap;
use crate::scalar::Scalar;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' | '\r' => out.push(' '),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// DOT digraph with one box per event labelled `headline` over
/// `[frame name]`, edges labelled with their flow, and main-storyline edges
/// drawn bold. Nodes and edges are emitted in id order.
pub fn export_dot<T: Scalar>(map: &NarrativeMap<T>, taxonomy: &FrameTaxonomy, grouped: bool) -> String {
    let mut out = String::from("digraph narrative_map {\n  rankdir=LR;\n  node [shape=box];\n");
    let mut nodes: Vec<_> = map.nodes.iter().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    for n in nodes {
        let frame = taxonomy
            .name(n.frame, grouped)
            .map(str::to_string)
            .unwrap_or_else(|| format!("frame {}", n.frame));
        // the label escape \n is a DOT line break, so it is added after quoting
        let label = quote(&n.headline);
        let label = format!("{}\\n{}", &label[..label.len() - 1], &quote(&format!("[{frame}]"))[1..]);
        let _ = writeln!(out, "  {} [label={label}];", quote(&n.id));
    }
    let main: BTreeSet<(&str, &str)> = map
        .main_storyline
        .windows(2)
        .map(|w| (w[0].as_str(), w[1].as_str()))
        .collect();
    let mut edges: Vec<_> = map.edges.iter().collect();
    edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    for e in edges {
        let style = if main.contains(&(e.from.as_str(), e.to.as_str())) {
            ", style=bold"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  {} -> {} [label=\"{:.2}\"{style}];",
            quote(&e.from),
            quote(&e.to),
            e.flow.as_f64()
        );
    }
    out.push_str("}\n");
    out
}
