use gerrygrid::edgelist::{parse_edge_list, write_edge_list};
use gerrygrid::planfile::{parse_plans, write_plans};
use gerrygrid::text::{bits_hex, decimal, parse_bits_hex};
use gerrygrid::Error;
use gerrygrid_core::{enumerate_plans, DualGraph};
use proptest::prelude::*;

/// A connected graph: a random spanning tree plus extra edges.
fn connected_graph() -> impl Strategy<Value = DualGraph> {
    (2usize..=64).prop_flat_map(|k| {
        let parents: Vec<BoxedStrategy<usize>> = (1..k).map(|i| (0..i).boxed()).collect();
        (Just(k), parents, prop::collection::vec((0..k, 0..k), 0..40), prop::collection::vec(0..k, 0..8))
            .prop_map(|(k, parents, extra, border)| {
                let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
                for (a, b) in extra {
                    let e = (a.min(b), a.max(b));
                    if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == e) {
                        edges.push(e);
                    }
                }
                DualGraph::from_edges(k, &edges, &border).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn hex_round_trip(bits: u64, k in 1usize..=64) {
        let bits = if k == 64 { bits } else { bits & ((1 << k) - 1) };
        let s = bits_hex(bits, k);
        prop_assert_eq!(s.len(), k.div_ceil(4));
        prop_assert_eq!(parse_bits_hex(&s), Some(bits));
    }

    #[test]
    fn decimal_keeps_twelve_digits(v in -1e6f64..1e6) {
        let s = decimal(v);
        prop_assert!(!s.contains('e') && !s.contains('E'));
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 1e-11 * v.abs().max(1.0), "{v} -> {s}");
    }

    #[test]
    fn edge_list_round_trip(g in connected_graph()) {
        let text = write_edge_list(&g);
        let h = parse_edge_list(&text, "mem").unwrap();
        prop_assert_eq!(h.k(), g.k());
        prop_assert_eq!(h.edges(), g.edges());
        prop_assert_eq!(h.border(), g.border());
        prop_assert_eq!(write_edge_list(&h), text);
    }
}

#[test]
fn plan_file_round_trip_is_byte_exact() {
    for n in 1..=5 {
        let plans = enumerate_plans(n).unwrap();
        let mut buf = Vec::new();
        write_plans(&mut buf, n, &plans).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = parse_plans(&text, n, "mem").unwrap();
        assert_eq!(back.plans(), plans.plans());
        let mut again = Vec::new();
        write_plans(&mut again, n, &back).unwrap();
        assert_eq!(again, text.as_bytes());
    }
}

#[test]
fn plan_file_rejects_tampering() {
    let plans = enumerate_plans(3).unwrap();
    let mut buf = Vec::new();
    write_plans(&mut buf, 3, &plans).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    // Swapping two rows breaks the strict ordering.
    let last = lines.len() - 1;
    lines.swap(1, last);
    let swapped = lines.join("\n") + "\n";
    assert!(matches!(parse_plans(&swapped, 3, "mem"), Err(Error::Parse { .. })));
    // A header for the wrong side is refused.
    assert!(matches!(parse_plans(&text, 4, "mem"), Err(Error::Validation(_))));
}

#[test]
fn edge_list_errors_carry_line_numbers() {
    match parse_edge_list("3\n0 1\n1 x\n0\n", "g.txt") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse_edge_list("3\n0 1\n\n", "g.txt"), Err(Error::Core(_))));
}
