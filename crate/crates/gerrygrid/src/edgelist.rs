//! Edge-list text format for general dual graphs.
//!
//! ```text
//! 4          block count
//! 0 1        one undirected edge per line
//! 1 2
//! 2 3
//! 0 3        last line: border blocks
//! ```
//! The final line always lists the border, so a graph with an empty border
//! ends with a blank line.

use std::fmt::Write as _;

use gerrygrid_core::{BlockId, DualGraph};

use crate::error::{Error, Result};

pub fn parse_edge_list(text: &str, origin: &str) -> Result<DualGraph> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = body.split('\n').map(|l| l.trim_end_matches('\r')).collect();
    if lines.len() < 2 {
        return Err(Error::parse(origin, 1, "expected a block count line and a border line"));
    }
    let k: usize = lines[0].trim().parse().map_err(|_| Error::parse(origin, 1, "block count is not an integer"))?;
    let ints = |i: usize| -> Result<Vec<BlockId>> {
        lines[i]
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(origin, i as u64 + 1, format!("'{t}' is not a block index"))))
            .collect()
    };
    let last = lines.len() - 1;
    let mut edges = Vec::with_capacity(last.saturating_sub(1));
    for i in 1..last {
        match ints(i)?.as_slice() {
            &[a, b] => edges.push((a, b)),
            _ => return Err(Error::parse(origin, i as u64 + 1, "edge lines hold exactly two block indices")),
        }
    }
    let border = ints(last)?;
    Ok(DualGraph::from_edges(k, &edges, &border)?)
}

pub fn write_edge_list(g: &DualGraph) -> String {
    let mut out = format!("{}\n", g.k());
    for (a, b) in g.edges() {
        writeln!(out, "{a} {b}").expect("writing to a String");
    }
    let border: Vec<String> = g.border().iter().map(|b| b.to_string()).collect();
    out.push_str(&border.join(" "));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_grid() {
        let g = DualGraph::grid(2, 3).unwrap();
        let text = write_edge_list(&g);
        let back = parse_edge_list(&text, "mem").unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.border(), g.border());
        assert_eq!(write_edge_list(&back), text);
    }

    #[test]
    fn rejects_malformed_lines() {
        let err = parse_edge_list("3\n0 1\n1 2 0\n0\n", "g.txt").unwrap_err();
        assert_eq!(err.to_string(), "g.txt:3: edge lines hold exactly two block indices");
        assert!(parse_edge_list("x\n0\n", "g").is_err());
        assert!(parse_edge_list("3\n0 1\n0\n", "g").is_err(), "disconnected");
        assert!(parse_edge_list("3\n", "g").is_err());
    }
}
