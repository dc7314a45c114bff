//! Acceptance suite. One test per criterion; each prints a PASS line with
//! the measured numbers once its assertions hold.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use shexi_core::analysis::{
    build_dependency_graph, build_hierarchy, check_well_defined, stratify, stratify_refined,
    DepKind, WellDefinedness,
};
use shexi_core::engine::{
    brute_force_maximal_typing_bounded, is_correct_typing, maximal_typing, maximal_typing_with,
    ConformanceMode, EngineError,
};
use shexi_core::rdf::{parse_graph, Graph, NeighbourhoodSet, RdfNode, Triple};
use shexi_core::schema::{
    Facet, LabelId, LabelKind, LiteralValue, NodeConstraint, Schema, Shape, ShapeExpr, TripleExpr,
};
use shexi_core::semantics::{EvalError, Evaluator, Typing};
use shexi_core::text::parse_schema;

const BOTH_MODES: [ConformanceMode; 2] =
    [ConformanceMode::DescendantClosure, ConformanceMode::LiteralDef4];

fn fixture(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

fn p_triple(value: RdfNode) -> Triple {
    Triple::new(RdfNode::iri("n"), "p", value)
}

fn m_24() -> NeighbourhoodSet {
    NeighbourhoodSet::from_triples([p_triple(RdfNode::integer(2)), p_triple(RdfNode::integer(4))])
}

fn m_246() -> NeighbourhoodSet {
    NeighbourhoodSet::from_triples([
        p_triple(RdfNode::integer(2)),
        p_triple(RdfNode::integer(4)),
        p_triple(RdfNode::integer(6)),
    ])
}

fn m_2a() -> NeighbourhoodSet {
    NeighbourhoodSet::from_triples([p_triple(RdfNode::integer(2)), p_triple(RdfNode::string("a"))])
}

fn m_24a() -> NeighbourhoodSet {
    NeighbourhoodSet::from_triples([
        p_triple(RdfNode::integer(2)),
        p_triple(RdfNode::integer(4)),
        p_triple(RdfNode::string("a")),
    ])
}

/// The typing over 2, 4, 6 and "a" fixed by the matching examples.
fn example_typing(s: &Schema) -> Typing {
    let id = |n: &str| s.label_id(n).unwrap();
    Typing::from_pairs([
        (RdfNode::integer(2), id("T_even")),
        (RdfNode::integer(2), id("T_lt5")),
        (RdfNode::integer(4), id("T_even")),
        (RdfNode::integer(4), id("T_lt5")),
        (RdfNode::integer(6), id("T_even")),
        (RdfNode::integer(6), id("T_gt5")),
        (RdfNode::string("a"), id("T_str")),
    ])
}

#[test]
fn criterion_01_triple_expression_golden_table() {
    let s = parse_schema(&fixture("ex3.shexi")).unwrap();
    let typing = example_typing(&s);
    let g = Graph::default();
    let ev = Evaluator::new(&g, &s);
    let e = match s.definition(s.label_id("E").unwrap()).unwrap() {
        ShapeExpr::Shape(shape) => shape.expr.clone(),
        other => panic!("unexpected definition {other:?}"),
    };
    let verdicts = [
        (m_24(), true),
        (m_246(), true),
        (m_2a(), true),
        (m_24a(), false),
    ];
    for (m, expected) in &verdicts {
        assert_eq!(ev.sat_te(m, &typing, &e).unwrap(), *expected, "on {m:?}");
    }
    println!("[criterion 01] PASS triple-expression verdicts sat/sat/sat/unsat");
}

#[test]
fn criterion_02_shape_golden_table() {
    let s = parse_schema(&fixture("ex3.shexi")).unwrap();
    let typing = example_typing(&s);
    let g = Graph::default();
    let ev = Evaluator::new(&g, &s);
    let e = TripleExpr::each_of(
        TripleExpr::tc("p", s.label_id("T_even").unwrap()),
        TripleExpr::tc("p", s.label_id("T_lt5").unwrap()),
    );
    let plain = ShapeExpr::Shape(Shape::open(e.clone()));
    let extra_p = ShapeExpr::Shape(Shape {
        closed: false,
        extra: ["p".to_string()].into_iter().collect(),
        expr: e.clone(),
    });
    let closed_extra_p = ShapeExpr::Shape(Shape {
        closed: true,
        extra: ["p".to_string()].into_iter().collect(),
        expr: e,
    });
    let with_q = NeighbourhoodSet::from_triples(
        m_24a()
            .triples()
            .iter()
            .cloned()
            .chain([Triple::new(RdfNode::iri("n"), "q", RdfNode::integer(2))]),
    );

    let verdicts = [
        (m_24(), &plain, true),
        (m_2a(), &plain, false),
        (m_246(), &plain, false),
        (m_24a(), &extra_p, true),
        (m_246(), &extra_p, false),
        (with_q.clone(), &extra_p, true),
        (with_q, &closed_extra_p, false),
    ];
    for (m, se, expected) in &verdicts {
        assert_eq!(ev.sat_set(m, &typing, se).unwrap(), *expected, "on {m:?}");
    }
    println!("[criterion 02] PASS shape verdicts including extra and closed");
}

#[test]
fn criterion_03_extends_golden_table() {
    let s = parse_schema(&fixture("ex41_extends.shexi")).unwrap();
    let typing = example_typing(&s);
    let g = Graph::default();
    let ev = Evaluator::new(&g, &s);
    let def = |name: &str| s.definition(s.label_id(name).unwrap()).unwrap();

    assert!(ev.sat_set(&m_24(), &typing, def("x1")).unwrap());
    assert!(ev.sat_set(&m_246(), &typing, def("x2")).unwrap());
    assert!(!ev.sat_set(&m_24(), &typing, def("x2")).unwrap());
    assert!(!ev.sat_set(&m_24a(), &typing, def("x1")).unwrap());
    for m in [m_24(), m_246(), m_2a(), m_24a()] {
        assert!(!ev.sat_set(&m, &typing, def("x3")).unwrap(), "x3 on {m:?}");
        assert!(!ev.sat_set(&m, &typing, def("x4")).unwrap(), "x4 on {m:?}");
    }
    assert!(ev.sat_set(&m_2a(), &typing, def("x5")).unwrap());
    assert!(!ev.sat_set(&m_24a(), &typing, def("x6")).unwrap());
    println!("[criterion 03] PASS extends verdicts for x1..x6 incl. the x6 failure");
}

#[test]
fn criterion_04_static_analysis_goldens() {
    // the six hierarchy edges of the figures schema
    let s = parse_schema(&fixture("fig1.shexi")).unwrap();
    let h = build_hierarchy(&s);
    let edges: BTreeSet<(String, String)> = h
        .edges()
        .iter()
        .map(|&(c, p)| (s.name(c).to_string(), s.name(p).to_string()))
        .collect();
    let expected: BTreeSet<(String, String)> = [
        ("Colour", "Attribute"),
        ("Radius", "Attribute"),
        ("Circle", "Figure"),
        ("ColouredFigure", "Figure"),
        ("ColouredCircle", "Circle"),
        ("ColouredCircle", "ColouredFigure"),
    ]
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .into_iter()
    .collect();
    assert_eq!(edges, expected);

    // nested extends targets are not ancestors
    let s2 = parse_schema(&fixture("ex2_nested_extends.shexi")).unwrap();
    let h2 = build_hierarchy(&s2);
    let anc = h2.ancestors(s2.label_id("x").unwrap()).unwrap();
    assert!(!anc.contains(&s2.label_id("x3").unwrap()));
    assert!(!anc.contains(&s2.label_id("x4").unwrap()));
    assert_eq!(anc.len(), 3);

    // well-definedness verdicts with the named witness edges
    let s1 = parse_schema(&fixture("ex4_s1.shexi")).unwrap();
    assert_eq!(check_well_defined(&s1), WellDefinedness::Ok);

    let sb = parse_schema(&fixture("ex4_s2.shexi")).unwrap();
    let WellDefinedness::NegativeCycle { witnesses } = check_well_defined(&sb) else {
        panic!("expected negative cycles");
    };
    let id = |n: &str| sb.label_id(n).unwrap();
    assert!(witnesses
        .iter()
        .any(|w| w.contains_edge(id("y5"), id("y4"), DepKind::ShapeNeg)));
    assert!(witnesses
        .iter()
        .any(|w| w.contains_edge(id("y6"), id("y4"), DepKind::ExtraNeg)));

    let sc = parse_schema(&fixture("ex4_s3.shexi")).unwrap();
    let WellDefinedness::NegativeCycle { witnesses } = check_well_defined(&sc) else {
        panic!("expected negative cycles");
    };
    let id = |n: &str| sc.label_id(n).unwrap();
    let w = &witnesses[0];
    assert!(w.contains_edge(id("y7"), id("x2"), DepKind::ShapeNeg));
    assert!(w.contains_edge(id("x2"), id("x1"), DepKind::Extends));
    assert!(w.contains_edge(id("x1"), id("y7"), DepKind::Reference));
    println!("[criterion 04] PASS hierarchy edges, nested-extends exclusion, verdicts with witnesses");
}

#[test]
fn criterion_05_end_to_end_figures_example() {
    let s = parse_schema(&fixture("fig1.shexi")).unwrap();
    let g = parse_graph(&fixture("fig2.nt")).unwrap();
    let shape_labels: BTreeSet<LabelId> = s
        .labels()
        .filter(|&id| !s.name(id).starts_with("T_"))
        .collect();
    let id = |n: &str| s.label_id(n).unwrap();
    let pair = |n: &str, l: &str| (RdfNode::iri(n), id(l));

    let base: BTreeSet<(RdfNode, LabelId)> = [
        pair("a1", "Attribute"),
        pair("a2", "Attribute"),
        pair("a3", "Attribute"),
        pair("a2", "Colour"),
        pair("a1", "Radius"),
        pair("a3", "Radius"),
        pair("c1", "Coord"),
        pair("c2", "Coord"),
        pair("f2", "Circle"),
        pair("f2", "Figure"),
        pair("f1", "ColouredCircle"),
        pair("f1", "Figure"),
    ]
    .into_iter()
    .collect();
    let mut descendant_closure = base.clone();
    descendant_closure.insert(pair("f1", "Circle"));
    descendant_closure.insert(pair("f1", "ColouredFigure"));

    let started = Instant::now();
    let desc = maximal_typing(&g, &s, ConformanceMode::DescendantClosure).unwrap();
    let lit = maximal_typing(&g, &s, ConformanceMode::LiteralDef4).unwrap();
    let elapsed = started.elapsed();

    let restrict = |t: &Typing| -> BTreeSet<(RdfNode, LabelId)> {
        t.restrict_to_labels(&shape_labels)
            .pairs()
            .map(|(n, l)| (n.clone(), l))
            .collect()
    };
    assert_eq!(restrict(&desc), descendant_closure);
    assert_eq!(restrict(&lit), base);
    assert!(
        elapsed < Duration::from_secs(1),
        "both modes took {elapsed:?}, expected < 1s"
    );
    println!(
        "[criterion 05] PASS figures-example maximal typings in {:?} (< 1s)",
        elapsed
    );
}

#[test]
fn criterion_06_oracle_equivalence_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0006);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < 200 {
        attempts += 1;
        assert!(attempts < 4000, "generator rejects too many schemas");
        let variant = match checked % 3 {
            0 => gen::Variant::Negation,
            1 => gen::Variant::Extends,
            _ => gen::Variant::Mixed,
        };
        let Some(schema) = gen::schema(&mut rng, variant) else {
            continue;
        };
        // well-definedness and stratification succeed or fail together
        let ok = check_well_defined(&schema).is_ok();
        assert_eq!(ok, stratify(&schema).is_ok());
        if !ok {
            continue;
        }
        let stratification = stratify(&schema).unwrap();
        assert!(stratification.validate_against(&build_dependency_graph(&schema)));

        let graph = gen::graph(&mut rng, 6);
        // keep the oracle's per-stratum enumeration below 2^13 candidates
        let node_count = graph.nodes().len();
        let widest_stratum = (1..=stratification.stratum_count())
            .map(|i| stratification.labels_on(i).len() * node_count)
            .max()
            .unwrap_or(0);
        if widest_stratum > 13 {
            continue;
        }
        let mut typings = Vec::new();
        for mode in BOTH_MODES {
            let fast = maximal_typing(&graph, &schema, mode).unwrap();
            let slow = brute_force_maximal_typing_bounded(&graph, &schema, mode, 20).unwrap();
            assert_eq!(
                fast,
                slow,
                "disagreement ({mode}) on instance {checked}:\n{}",
                shexi_core::text::serialize_schema(&schema)
            );
            assert!(
                is_correct_typing(&graph, &schema, &fast, mode).unwrap(),
                "maximal typing not correct ({mode})"
            );
            typings.push(fast);
        }
        // the literal reading never accepts more than the closure reading
        assert!(typings[1].is_subset_of(&typings[0]));
        checked += 1;
    }
    println!(
        "[criterion 06] PASS {checked} random instances, both modes, zero oracle disagreements ({attempts} drawn)"
    );
}

#[test]
fn criterion_07_stratification_independence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0007);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < 20 {
        attempts += 1;
        assert!(attempts < 2000, "generator rejects too many schemas");
        let variant = if attempts.is_multiple_of(2) {
            gen::Variant::Mixed
        } else {
            gen::Variant::Negation
        };
        let Some(schema) = gen::schema(&mut rng, variant) else {
            continue;
        };
        if check_well_defined(&schema) != WellDefinedness::Ok {
            continue;
        }
        let minimal = stratify(&schema).unwrap();
        let refined = stratify_refined(&schema).unwrap();
        if minimal.assignment() == refined.assignment() {
            continue; // only one stratification available at this size
        }
        let deps = build_dependency_graph(&schema);
        assert!(minimal.validate_against(&deps));
        assert!(refined.validate_against(&deps));
        let graph = gen::graph(&mut rng, 6);
        for mode in BOTH_MODES {
            let a = maximal_typing_with(&graph, &schema, mode, &minimal).unwrap();
            let b = maximal_typing_with(&graph, &schema, mode, &refined).unwrap();
            assert_eq!(
                a,
                b,
                "stratification-dependent result ({mode}):\n{}",
                shexi_core::text::serialize_schema(&schema)
            );
        }
        checked += 1;
    }
    println!(
        "[criterion 07] PASS {checked} schemas with distinct stratifications, identical maximal typings"
    );
}

#[test]
fn criterion_08_union_of_correct_typings_is_correct() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0008);
    let mut sampled_pairs = 0usize;
    let mut instances = 0usize;
    let mut attempts = 0usize;
    while sampled_pairs < 100 {
        attempts += 1;
        assert!(attempts < 4000, "generator rejects too many instances");
        let Some(schema) = gen::schema(&mut rng, gen::Variant::PositiveOnly) else {
            continue;
        };
        if check_well_defined(&schema) != WellDefinedness::Ok {
            continue;
        }
        let graph = gen::graph(&mut rng, 4);
        let nodes: Vec<RdfNode> = graph.nodes().into_iter().collect();
        let labels: Vec<LabelId> = schema.labels().collect();
        let all_pairs: Vec<(RdfNode, LabelId)> = nodes
            .iter()
            .flat_map(|n| labels.iter().map(move |&l| (n.clone(), l)))
            .collect();
        if all_pairs.is_empty() || all_pairs.len() > 10 {
            continue;
        }
        instances += 1;
        for mode in BOTH_MODES {
            let mut correct: Vec<Typing> = Vec::new();
            for mask in 0..(1usize << all_pairs.len()) {
                let t = Typing::from_pairs(
                    all_pairs
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, (n, l))| (n.clone(), *l)),
                );
                if is_correct_typing(&graph, &schema, &t, mode).unwrap() {
                    correct.push(t);
                }
            }
            for _ in 0..4 {
                let a = correct.choose(&mut rng).unwrap();
                let b = correct.choose(&mut rng).unwrap();
                let union = a.union(b);
                assert!(
                    is_correct_typing(&graph, &schema, &union, mode).unwrap(),
                    "union of correct typings not correct ({mode}):\n{}",
                    shexi_core::text::serialize_schema(&schema)
                );
                sampled_pairs += 1;
            }
        }
    }
    println!(
        "[criterion 08] PASS {sampled_pairs} sampled unions over {instances} instances, all correct"
    );
}

#[test]
fn criterion_09_recursion_guard() {
    // silent on every well-defined fixture
    let fig2 = parse_graph(&fixture("fig2.nt")).unwrap();
    for name in [
        "fig1.shexi",
        "ex3.shexi",
        "ex41_extends.shexi",
        "ex4_s1.shexi",
        "ex2_nested_extends.shexi",
        "sec6_figure.shexi",
        "sec6_product.shexi",
        "sec6_client.shexi",
        "two_strata.shexi",
    ] {
        let s = parse_schema(&fixture(name)).unwrap();
        assert!(check_well_defined(&s).is_ok(), "{name} should be well-defined");
        for mode in BOTH_MODES {
            maximal_typing(&fig2, &s, mode)
                .unwrap_or_else(|e| panic!("guard or matcher tripped on {name}: {e}"));
        }
    }

    // trips, and is reported rather than looping, on a cyclic hierarchy
    // that check-time analysis rejects
    let cyclic = parse_schema(&fixture("cyclic_hierarchy.shexi")).unwrap();
    assert!(matches!(
        check_well_defined(&cyclic),
        WellDefinedness::CyclicHierarchy { .. }
    ));
    let g = parse_graph("<n> <p> <m> .").unwrap();
    let ev = Evaluator::new(&g, &cyclic);
    let def = cyclic.definition(cyclic.label_id("x1").unwrap()).unwrap();
    let started = Instant::now();
    let err = ev
        .sat_node(&RdfNode::iri("n"), &Typing::new(), def)
        .unwrap_err();
    assert!(matches!(err, EvalError::RecursionGuard { .. }));
    assert!(started.elapsed() < Duration::from_secs(1));

    // the engine surfaces the same guard through its error type
    let engine_err = maximal_typing(&g, &cyclic, ConformanceMode::DescendantClosure).unwrap_err();
    assert!(matches!(
        engine_err,
        EngineError::IllDefined(_) | EngineError::Eval(EvalError::RecursionGuard { .. })
    ));
    println!("[criterion 09] PASS guard silent on well-defined fixtures, trips and reports on the cyclic one");
}

#[test]
fn criterion_10_matcher_scales_to_twelve_triples() {
    // worst case is exponential by construction; these desk-scale
    // instances must stay fast
    let star_schema = parse_schema(
        "T_int -> LITERAL integer\n\
         x1 -> EXTENDS [] { <p> @T_int * }\n\
         x2 -> EXTENDS [] { <p> @T_int * }\n\
         x3 -> EXTENDS [] { <p> @T_int * }\n\
         top -> EXTENDS [x1, x2, x3] { <p> @T_int * }\n",
    )
    .unwrap();
    let restricted_schema = parse_schema(
        "T_int -> LITERAL integer\n\
         y1 -> EXTENDS [] { <p> @T_int }\n\
         y2 -> EXTENDS [] { <p> @T_int }\n\
         y3 -> EXTENDS [] { <p> @T_int } AND { <p> @T_int * }\n\
         ytop -> EXTENDS [y1, y2, y3] { <p> @T_int * }\n",
    )
    .unwrap();
    let statements: String = (0..12)
        .map(|i| format!("<n> <p> {i} .\n"))
        .collect();
    let graph = parse_graph(&statements).unwrap();

    for (schema, label) in [(&star_schema, "top"), (&restricted_schema, "ytop")] {
        let started = Instant::now();
        let typing = maximal_typing(&graph, schema, ConformanceMode::DescendantClosure).unwrap();
        let elapsed = started.elapsed();
        assert!(
            typing.contains(&RdfNode::iri("n"), schema.label_id(label).unwrap()),
            "twelve matching triples satisfy {label}"
        );
        assert!(
            elapsed < Duration::from_secs(2),
            "{label} took {elapsed:?}, expected < 2s"
        );
        println!("[criterion 10] PASS {label} with 12 triples in {elapsed:?} (< 2s)");
    }
}

/// Random instance generation for the oracle-equivalence campaigns. Kept
/// deliberately small: at most four graph nodes and four labels so the
/// brute-force oracle stays within its bound.
mod gen {
    use super::*;

    #[derive(Clone, Copy, PartialEq)]
    pub enum Variant {
        /// At least one negated shape, giving two strata.
        Negation,
        /// An extends chain of depth two with multiple inheritance.
        Extends,
        /// Anything goes.
        Mixed,
        /// No negation and no extra-negation, for union-closure sampling.
        PositiveOnly,
    }

    pub fn graph(rng: &mut ChaCha8Rng, max_triples: usize) -> Graph {
        let subjects = ["n1", "n2"];
        let objects = [
            RdfNode::iri("n1"),
            RdfNode::iri("n2"),
            RdfNode::integer(1),
            RdfNode::string("a"),
        ];
        let preds = ["p", "q"];
        let count = rng.gen_range(0..=max_triples);
        Graph::from_triples((0..count).map(|_| {
            Triple::new(
                RdfNode::iri(*subjects.choose(rng).unwrap()),
                *preds.choose(rng).unwrap(),
                objects.choose(rng).unwrap().clone(),
            )
        }))
    }

    fn constraint(rng: &mut ChaCha8Rng) -> NodeConstraint {
        let facets = match rng.gen_range(0..6) {
            0 => vec![Facet::AnyNode],
            1 => vec![
                Facet::KindIs(shexi_core::schema::NodeKind::Literal),
                Facet::DatatypeIs(shexi_core::rdf::XSD_INTEGER.to_string()),
            ],
            2 => vec![
                Facet::KindIs(shexi_core::schema::NodeKind::Literal),
                Facet::DatatypeIs(shexi_core::rdf::XSD_STRING.to_string()),
            ],
            3 => vec![Facet::ValueEq(LiteralValue::new(
                "1",
                shexi_core::rdf::XSD_INTEGER,
            ))],
            4 => vec![Facet::ValueIn(
                [
                    LiteralValue::new("1", shexi_core::rdf::XSD_INTEGER),
                    LiteralValue::new("a", shexi_core::rdf::XSD_STRING),
                ]
                .into_iter()
                .collect(),
            )],
            _ => vec![Facet::KindIs(shexi_core::schema::NodeKind::Iri)],
        };
        NodeConstraint::new(facets)
    }

    fn pred(rng: &mut ChaCha8Rng) -> &'static str {
        ["p", "q"].choose(rng).unwrap()
    }

    fn small_te(rng: &mut ChaCha8Rng, refs: &[LabelId]) -> TripleExpr {
        let tc = |rng: &mut ChaCha8Rng, refs: &[LabelId]| {
            TripleExpr::tc(pred(rng), *refs.choose(rng).unwrap())
        };
        match rng.gen_range(0..5) {
            0 => TripleExpr::Epsilon,
            1 => tc(rng, refs),
            2 => TripleExpr::star(tc(rng, refs)),
            3 => TripleExpr::each_of(tc(rng, refs), tc(rng, refs)),
            _ => TripleExpr::one_of(tc(rng, refs), tc(rng, refs)),
        }
    }

    fn simple_def(rng: &mut ChaCha8Rng, refs: &[LabelId], variant: Variant) -> ShapeExpr {
        let shape = |rng: &mut ChaCha8Rng, refs: &[LabelId]| {
            ShapeExpr::Shape(Shape {
                closed: rng.gen_bool(0.2),
                extra: if variant != Variant::PositiveOnly && rng.gen_bool(0.2) {
                    [pred(rng).to_string()].into_iter().collect()
                } else {
                    BTreeSet::new()
                },
                expr: small_te(rng, refs),
            })
        };
        let allow_not = matches!(variant, Variant::Negation | Variant::Mixed);
        match rng.gen_range(0..6) {
            0 if allow_not => ShapeExpr::not(shape(rng, refs)),
            1 => ShapeExpr::or(shape(rng, refs), shape(rng, refs)),
            2 => ShapeExpr::and(shape(rng, refs), shape(rng, refs)),
            3 => ShapeExpr::NodeConstraint(constraint(rng)),
            _ => shape(rng, refs),
        }
    }

    /// A random schema with at most four labels; `None` when the draw is
    /// not well-formed enough to use.
    pub fn schema(rng: &mut ChaCha8Rng, variant: Variant) -> Option<Schema> {
        let mut b = Schema::builder();
        let with_extends = matches!(variant, Variant::Extends | Variant::Mixed);
        let names: Vec<&str> = if with_extends {
            vec!["A", "X0", "X1", "X2"]
        } else {
            vec!["A", "B", "C"]
        };
        let ids: Vec<LabelId> = names.iter().map(|n| b.label(n)).collect();

        b.define("A", LabelKind::Simple, false, ShapeExpr::NodeConstraint(constraint(rng)))
            .unwrap();
        if with_extends {
            let (x0, x1) = (ids[1], ids[2]);
            b.define(
                "X0",
                LabelKind::Extendable,
                rng.gen_bool(0.15),
                ShapeExpr::extends(vec![], small_te(rng, &ids)),
            )
            .unwrap();
            let base = ShapeExpr::extends(vec![x0], small_te(rng, &ids));
            let def = if rng.gen_bool(0.5) {
                ShapeExpr::and(base, simple_def(rng, &ids, variant))
            } else {
                base
            };
            b.define("X1", LabelKind::Extendable, false, def).unwrap();
            // depth-two multiple inheritance: X2 reaches X0 both directly
            // and through X1
            let targets = if rng.gen_bool(0.7) { vec![x0, x1] } else { vec![x1] };
            b.define(
                "X2",
                LabelKind::Extendable,
                false,
                ShapeExpr::extends(targets, small_te(rng, &ids)),
            )
            .unwrap();
        } else {
            // force the characteristic template on B for the negation draw
            let b_def = if variant == Variant::Negation {
                ShapeExpr::not(ShapeExpr::shape(small_te(rng, &ids)))
            } else {
                simple_def(rng, &ids, variant)
            };
            b.define("B", LabelKind::Simple, false, b_def).unwrap();
            b.define("C", LabelKind::Simple, false, simple_def(rng, &ids, variant))
                .unwrap();
        }
        let schema = b.finish();
        debug_assert!(shexi_core::schema::check_schema_form(&schema).is_empty());
        Some(schema)
    }
}
