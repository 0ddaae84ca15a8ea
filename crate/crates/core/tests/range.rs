use std::sync::Arc;

use kitrobot_core::catalog::Catalog;
use kitrobot_core::diag::DiagCode;
use kitrobot_core::graph::validate_graph;
use kitrobot_core::lll::{parse, print_canonical, typecheck};
use kitrobot_core::testkit::{graph_of, GenConfig, ProgramGen};
use kitrobot_core::vm::{load_program, LoadError};

fn carrier() -> Catalog {
    Catalog::from_xml(None, include_str!("../../../assets/carrier.xml")).unwrap()
}

#[test]
fn each_out_of_range_literal_yields_one_diagnostic() {
    let catalog = carrier();
    let mut gen = ProgramGen::new(&catalog, 41, GenConfig::default());
    for _ in 0..100 {
        let p = gen.out_of_range();
        let text = print_canonical(&p);
        let reparsed = parse(&text).unwrap();
        let diags = typecheck(&reparsed, &catalog);
        assert_eq!(diags.len(), 1, "{text}: {diags:?}");
        assert_eq!(diags[0].code, DiagCode::RangeViolation);

        let from_graph = validate_graph(&graph_of(&p), &catalog);
        assert_eq!(from_graph.len(), 1);
        assert_eq!(from_graph[0].code, DiagCode::RangeViolation);

        let err = load_program(&text, Arc::new(catalog.clone()), "c1").unwrap_err();
        assert!(matches!(err, LoadError::Typecheck(ref d) if d.len() == 1));
    }
}

#[test]
fn diagnostic_points_at_the_literal() {
    let catalog = carrier();
    let text = "motor.AbsoluteTurn(90,250);";
    let diags = typecheck(&parse(text).unwrap(), &catalog);
    let span = diags[0].span.unwrap();
    assert_eq!(&text[span.start..span.end], "250");
}
