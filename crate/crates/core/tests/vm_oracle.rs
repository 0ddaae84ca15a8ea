use std::sync::Arc;

use kitrobot_core::catalog::Catalog;
use kitrobot_core::lll::{parse, print_canonical, typecheck, Program};
use kitrobot_core::testkit::{GenConfig, ProgramGen, RefMachine, ScriptedDevices};
use kitrobot_core::vm::{to_jsonl, EventKind, MachineState, Value};
use proptest::prelude::*;

fn carrier() -> Catalog {
    Catalog::from_xml(None, include_str!("../../../assets/carrier.xml")).unwrap()
}

fn both(program: &Program, catalog: &Catalog, seed: u64, faults: Option<u64>, max: u64) -> (String, String) {
    let mut devices = ScriptedDevices::new(catalog, seed);
    devices.fault_one_in = faults;
    let mut vm = MachineState::new(program.clone(), Arc::new(catalog.clone()), "r1");
    vm.run(&mut devices, max);

    let mut devices = ScriptedDevices::new(catalog, seed);
    devices.fault_one_in = faults;
    let mut reference = RefMachine::new(program, catalog, "r1");
    let expected = reference.run(&mut devices, max);
    (to_jsonl(vm.trace()), to_jsonl(&expected))
}

#[test]
fn generated_programs_typecheck() {
    let catalog = carrier();
    let mut g = ProgramGen::new(&catalog, 7, GenConfig::default());
    for _ in 0..200 {
        let p = g.program();
        assert!(typecheck(&p, &catalog).is_empty(), "{}", print_canonical(&p));
    }
}

#[test]
fn vm_matches_reference() {
    let catalog = carrier();
    let mut g = ProgramGen::new(&catalog, 11, GenConfig::default());
    let mut seen = std::collections::BTreeMap::<&str, usize>::new();
    for case in 0..300u64 {
        let p = g.program();
        let (vm, reference) = both(&p, &catalog, case, None, 200);
        assert_eq!(vm, reference, "program: {}", print_canonical(&p));
        for key in [
            "branch-aborted",
            "branch-end",
            "wait-end",
            "cond-eval",
            "tick-budget-exhausted",
            "\"completed\"",
        ] {
            if vm.contains(key) {
                *seen.entry(key).or_default() += 1;
            }
        }
    }
    assert_eq!(seen.len(), 6, "{seen:?}");
    assert!(seen.values().all(|&n| n >= 10), "{seen:?}");
}

#[test]
fn vm_matches_reference_under_faults() {
    let catalog = carrier();
    let mut g = ProgramGen::new(&catalog, 12, GenConfig::default());
    for case in 0..200u64 {
        let p = g.program();
        let (vm, reference) = both(&p, &catalog, case, Some(25), 200);
        assert_eq!(vm, reference, "program: {}", print_canonical(&p));
    }
}

#[test]
fn interrupt_example_by_hand() {
    let catalog = carrier();
    let p = parse("//(WAIT(2);, °light.LightOn()°; *[flag.IsFalse()](WAIT(1);););").unwrap();
    let (vm, reference) = both(&p, &catalog, 0, None, 50);
    assert_eq!(vm, reference);
    assert_eq!(vm.matches("branch-aborted").count(), 1);
}

fn loop_nest() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("light.LightOn()".to_string()),
        Just("BREAK".to_string()),
        Just("count.Set(3)".to_string()),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let body = prop::collection::vec(inner, 1..4).prop_map(|v| v.join(";"));
        prop_oneof![
            (0u32..4, body.clone()).prop_map(|(n, b)| format!("{n}*({b};)")),
            body.prop_map(|b| format!("*[flag.IsFalse()]({b};)")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn break_exits_only_the_innermost_loop(body in loop_nest(), seed in any::<u64>()) {
        let catalog = carrier();
        let p = parse(&format!("{body};")).unwrap();
        prop_assume!(typecheck(&p, &catalog).is_empty());
        let (vm, reference) = both(&p, &catalog, seed, None, 200);
        prop_assert_eq!(vm, reference);
    }

    #[test]
    fn variables_stay_in_bounds(seed in any::<u64>()) {
        let catalog = carrier();
        let mut g = ProgramGen::new(&catalog, seed, GenConfig::default());
        let p = g.program();
        let mut devices = ScriptedDevices::new(&catalog, seed);
        let mut vm = MachineState::new(p, Arc::new(catalog.clone()), "r1");
        while !vm.is_done() && vm.clock() < 200 {
            vm.step_tick(&mut devices);
            for v in vm.variables().values() {
                if let Value::Int(n) = v {
                    prop_assert!(*n <= 100);
                }
            }
        }
    }

    #[test]
    fn traces_are_ordered_and_terminated(seed in any::<u64>()) {
        let catalog = carrier();
        let mut g = ProgramGen::new(&catalog, seed, GenConfig::default());
        let p = g.program();
        let mut devices = ScriptedDevices::new(&catalog, seed);
        let mut vm = MachineState::new(p, Arc::new(catalog.clone()), "r1");
        vm.run(&mut devices, 200);
        let trace = vm.trace();
        let ticks: Vec<u64> = trace.iter().map(|r| r.tick).collect();
        prop_assert!(ticks.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(trace.iter().filter(|r| r.kind == EventKind::ProgramEnd).count(), 1);
    }
}
