use std::path::PathBuf;

use ots_core::grid::{
    parse_matpower_case, parse_native, parse_sidecar, write_native, Bus, Generator, GridError, Line, Network, Sidecar,
    Violation,
};
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn bus(id: u32, demand: f64, slack: bool) -> Bus {
    Bus { id, demand, slack }
}

fn line(id: u32, from: u32, to: u32, switchable: bool) -> Line {
    Line {
        id,
        from_bus: from,
        to_bus: to,
        susceptance: 10.0,
        capacity: 100.0,
        switchable,
    }
}

fn gen(bus: u32) -> Generator {
    Generator {
        bus,
        cost: 10.0,
        pmin: 0.0,
        pmax: 100.0,
    }
}

fn path3(last_switchable: bool) -> Network {
    Network::new(
        100.0,
        vec![bus(1, 0.0, true), bus(2, 0.0, false), bus(3, 20.0, false)],
        vec![gen(1)],
        vec![line(1, 1, 2, false), line(2, 2, 3, last_switchable)],
    )
}

#[test]
fn connected_path_is_valid() {
    assert!(path3(false).validate().is_empty());
}

#[test]
fn switchable_bridge_disconnects() {
    let report = path3(true).validate();
    assert_eq!(report, vec![Violation::Disconnected(vec![3])]);
    assert!(report[0].to_string().contains("non-switchable subgraph disconnected"));
}

#[test]
fn two_slack_buses_reported() {
    let mut net = path3(false);
    let mut buses = net.buses().to_vec();
    buses[1].slack = true;
    net = Network::new(100.0, buses, net.generators().to_vec(), net.lines().to_vec());
    let report = net.validate();
    assert_eq!(report, vec![Violation::MultipleSlack(vec![1, 2])]);
    assert!(report[0].to_string().contains("multiple slack buses"));
}

const TWO_BUS: &str = "\
base 100
bus 1 0 slack
bus 2 50
gen 1 10 0 100
line 7 1 2 10 30
";

#[test]
fn minimal_document_parses() {
    let net = parse_native(TWO_BUS).unwrap();
    assert_eq!(net.num_buses(), 2);
    assert_eq!(net.lines().len(), 1);
    assert_eq!(net.lines()[0].id, 7);
    assert_eq!(net.num_switchable(), 0);
}

#[test]
fn missing_slack_rejected() {
    let err = parse_native(&TWO_BUS.replace(" slack", "")).unwrap_err();
    assert!(err.to_string().contains("no slack bus declared"), "{err}");
}

#[test]
fn duplicate_line_id_rejected() {
    let text = format!("{TWO_BUS}line 7 2 1 5 30 switchable\n");
    let err = parse_native(&text).unwrap_err();
    assert!(matches!(err, GridError::DuplicateLineId { line: 6, id: 7 }));
    assert!(err.to_string().contains("duplicate line id"));
}

#[test]
fn syntax_errors_carry_position() {
    let err = parse_native("base 100\nbus 1 x slack\n").unwrap_err();
    assert_eq!(
        err,
        GridError::Syntax {
            line: 2,
            column: 7,
            message: "invalid demand 'x'".into()
        }
    );
    let err = parse_native("base 100\n  bogus 1\n").unwrap_err();
    assert!(matches!(err, GridError::Syntax { line: 2, column: 3, .. }));
    let err = parse_native("base 100\nbus 1 0 slack extra\n").unwrap_err();
    assert!(matches!(err, GridError::Syntax { line: 2, column: 15, .. }));
}

#[test]
fn unknown_bus_rejected() {
    let err = parse_native(&format!("{TWO_BUS}gen 9 1 0 1\n")).unwrap_err();
    assert_eq!(err, GridError::UnknownBus { line: 6, bus: 9 });
}

#[test]
fn comments_and_blank_lines_ignored() {
    let text = format!("# header\n\n{}", TWO_BUS.replace("bus 2 50", "bus 2 50   # load"));
    assert_eq!(parse_native(&text).unwrap(), parse_native(TWO_BUS).unwrap());
}

#[test]
fn missing_base_rejected() {
    assert_eq!(parse_native("bus 1 0 slack\n").unwrap_err(), GridError::MissingBase);
}

const CASE3: &str = "\
function mpc = case3
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1\t0\t135\t1\t1.1\t0.9;
\t2\t1\t30\t0\t0\t0\t1\t1\t0\t135\t1\t1.1\t0.9;
\t5\t1\t40\t0\t0\t0\t1\t1\t0\t135\t1\t1.1\t0.9;
];
mpc.gen = [
\t1\t0\t0\t0\t0\t1\t100\t1\t200\t0;
\t2\t0\t0\t0\t0\t1\t100\t0\t200\t0;
];
mpc.branch = [
\t1\t2\t0\t0.1\t0\t80\t80\t80\t0\t0\t1\t-360\t360;
\t2\t5\t0\t0.2\t0\t60\t60\t60\t0\t0\t1\t-360\t360;
\t1\t5\t0\t0.4\t0\t60\t60\t60\t0\t0\t1\t-360\t360;
];
mpc.gencost = [
\t2\t0\t0\t3\t0.01\t12\t0;
\t2\t0\t0\t2\t30\t0;
];
";

fn case3_sidecar() -> Sidecar {
    parse_sidecar("switchable 3\nslack 1\n").unwrap()
}

#[test]
fn matpower_reactance_becomes_susceptance() {
    let net = parse_matpower_case(CASE3, &case3_sidecar()).unwrap();
    let b: Vec<f64> = net.lines().iter().map(|l| l.susceptance).collect();
    assert_eq!(b, vec![10.0, 5.0, 2.5]);
    assert_eq!(net.switchable(), &[2]);
    assert_eq!(net.bus_index(5), Some(2));
    assert_eq!(net.buses()[2].demand, 40.0);
    assert_eq!(net.base_mva(), 100.0);
    // The out-of-service generator is skipped; the quadratic cost keeps its linear term.
    assert_eq!(net.generators().len(), 1);
    assert_eq!(net.generators()[0].cost, 12.0);
    assert_eq!(net.lines()[1].capacity, 60.0);
}

#[test]
fn matpower_zero_rating_rejected() {
    let text = CASE3.replace("0.2\t0\t60\t60", "0.2\t0\t0\t60");
    let err = parse_matpower_case(&text, &case3_sidecar()).unwrap_err();
    assert_eq!(err, GridError::ZeroCapacity { branch: 2 });
    assert!(err.to_string().contains("zero capacity line"));
}

#[test]
fn matpower_zero_reactance_rejected() {
    let text = CASE3.replace("0.2\t0\t60", "0\t0\t60");
    let err = parse_matpower_case(&text, &case3_sidecar()).unwrap_err();
    assert_eq!(err, GridError::ZeroReactance { branch: 2 });
}

#[test]
fn matpower_requires_switchable_annotation() {
    let err = parse_matpower_case(CASE3, &Sidecar::default()).unwrap_err();
    assert!(matches!(err, GridError::MissingAnnotation(_)));
}

#[test]
fn sidecar_rejects_unknown_directive() {
    assert!(matches!(
        parse_sidecar("slack 1\nopen 4\n"),
        Err(GridError::Syntax { line: 2, column: 1, .. })
    ));
}

#[test]
fn ieee118_has_69_switchable_lines() {
    let text = std::fs::read_to_string(data("case118.m")).unwrap();
    let side = parse_sidecar(&std::fs::read_to_string(data("case118.switch")).unwrap()).unwrap();
    let net = parse_matpower_case(&text, &side).unwrap();
    assert_eq!(net.num_buses(), 118);
    assert_eq!(net.lines().len(), 186);
    assert_eq!(net.num_switchable(), 69);
}

#[test]
fn shipped_fixtures_are_valid() {
    for name in ["braess3.net", "braess6.net", "mesh8.net", "mesh9.net", "grid10.net", "hard30.net"] {
        let net = parse_native(&std::fs::read_to_string(data(name)).unwrap()).unwrap();
        assert!(net.validate().is_empty(), "{name}");
    }
    let text = std::fs::read_to_string(data("case14.m")).unwrap();
    let side = parse_sidecar(&std::fs::read_to_string(data("case14.switch")).unwrap()).unwrap();
    let net = parse_matpower_case(&text, &side).unwrap();
    assert_eq!(net.num_switchable(), 7);
}

#[test]
fn content_hash_tracks_content() {
    let a = parse_native(TWO_BUS).unwrap();
    let b = parse_native(&TWO_BUS.replace("bus 2 50", "bus 2 51")).unwrap();
    assert_eq!(a.content_hash(), parse_native(TWO_BUS).unwrap().content_hash());
    assert_ne!(a.content_hash(), b.content_hash());
    assert_eq!(a.content_hash().len(), 64);
}

/// A random valid network: a spanning tree of fixed lines plus switchable chords.
fn arb_network() -> impl Strategy<Value = Network> {
    (2usize..9, 0usize..6, 1usize..4).prop_flat_map(|(n, chords, gens)| {
        let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
        (
            Just(n),
            parents,
            prop::collection::vec((0..n, 0..n), chords),
            prop::collection::vec((0..n, 0.0f64..100.0, 0.0f64..50.0, 0.0f64..200.0), gens),
            prop::collection::vec(0.0f64..80.0, n),
            prop::collection::vec((1e-3f64..50.0, 1.0f64..500.0), n - 1 + chords),
            0..n,
            prop::sample::subsequence((1u32..1000).collect::<Vec<_>>(), n),
        )
            .prop_map(|(n, parents, chords, gens, demand, params, slack, ids)| {
                let buses = (0..n).map(|i| bus(ids[i], demand[i], i == slack)).collect();
                let generators = gens
                    .into_iter()
                    .map(|(b, cost, pmin, extra)| Generator {
                        bus: ids[b],
                        cost,
                        pmin,
                        pmax: pmin + extra,
                    })
                    .collect();
                let mut ends: Vec<(usize, usize, bool)> =
                    parents.iter().enumerate().map(|(i, &p)| (p, i + 1, false)).collect();
                ends.extend(chords.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a, b, true)));
                let lines = ends
                    .into_iter()
                    .zip(params)
                    .enumerate()
                    .map(|(k, ((a, b, sw), (s, cap)))| Line {
                        id: 3 * k as u32 + 1,
                        from_bus: ids[a],
                        to_bus: ids[b],
                        susceptance: s,
                        capacity: cap,
                        switchable: sw,
                    })
                    .collect();
                Network::new(100.0, buses, generators, lines)
            })
    })
}

#[derive(Clone, Debug)]
enum Mutation {
    DropSlack,
    ExtraSlack,
    NegativeDemand,
    InvertGenerator,
    ZeroSusceptance,
    NegativeCapacity,
    SelfLoop,
    DanglingLine,
    DanglingGenerator,
    DuplicateLine,
    OpenTreeLeaf,
}

fn rebuild(net: &Network, f: impl FnOnce(&mut Vec<Bus>, &mut Vec<Generator>, &mut Vec<Line>)) -> Network {
    let (mut b, mut g, mut l) = (net.buses().to_vec(), net.generators().to_vec(), net.lines().to_vec());
    f(&mut b, &mut g, &mut l);
    Network::new(net.base_mva(), b, g, l)
}

fn apply(net: &Network, m: &Mutation) -> (Network, Violation) {
    let slack = net.slack_index().unwrap();
    let other = (slack + 1) % net.num_buses();
    let first_line = net.lines()[0].clone();
    match m {
        Mutation::DropSlack => (rebuild(net, |b, _, _| b[slack].slack = false), Violation::NoSlack),
        Mutation::ExtraSlack => {
            let mut ids = vec![net.buses()[slack].id, net.buses()[other].id];
            ids.sort_by_key(|id| net.bus_index(*id));
            (rebuild(net, |b, _, _| b[other].slack = true), Violation::MultipleSlack(ids))
        }
        Mutation::NegativeDemand => {
            let id = net.buses()[other].id;
            (rebuild(net, |b, _, _| b[other].demand = -1.0), Violation::NegativeDemand(id))
        }
        Mutation::InvertGenerator => {
            let g = &net.generators()[0];
            let (pmin, pmax) = (g.pmax + 1.0, g.pmax);
            (
                rebuild(net, |_, g, _| g[0].pmin = pmin),
                Violation::GeneratorLimits { index: 0, pmin, pmax },
            )
        }
        Mutation::ZeroSusceptance => (
            rebuild(net, |_, _, l| l[0].susceptance = 0.0),
            Violation::NonPositiveSusceptance(first_line.id),
        ),
        Mutation::NegativeCapacity => (
            rebuild(net, |_, _, l| l[0].capacity = -5.0),
            Violation::NonPositiveCapacity(first_line.id),
        ),
        Mutation::SelfLoop => {
            let mut l = first_line.clone();
            l.id = 0;
            l.to_bus = l.from_bus;
            l.switchable = true;
            (rebuild(net, |_, _, ls| ls.push(l)), Violation::SelfLoop(0))
        }
        Mutation::DanglingLine => {
            let mut l = first_line.clone();
            l.id = 0;
            l.to_bus = 5000;
            l.switchable = true;
            (
                rebuild(net, |_, _, ls| ls.push(l)),
                Violation::UnknownLineBus { line: 0, bus: 5000 },
            )
        }
        Mutation::DanglingGenerator => {
            let index = net.generators().len();
            (
                rebuild(net, |_, g, _| g.push(Generator { bus: 5000, ..gen(0) })),
                Violation::UnknownGeneratorBus { index, bus: 5000 },
            )
        }
        Mutation::DuplicateLine => {
            let mut l = first_line.clone();
            l.switchable = true;
            (rebuild(net, |_, _, ls| ls.push(l)), Violation::DuplicateLine(first_line.id))
        }
        Mutation::OpenTreeLeaf => {
            // The last tree line attaches the highest-index bus, which no later
            // tree line uses, so opening it strands exactly that bus.
            let n = net.num_buses();
            let pos = n - 2;
            let leaf = net.buses()[n - 1].id;
            (rebuild(net, |_, _, l| l[pos].switchable = true), Violation::Disconnected(vec![leaf]))
        }
    }
}

fn arb_mutation() -> impl Strategy<Value = Mutation> {
    prop_oneof![
        Just(Mutation::DropSlack),
        Just(Mutation::ExtraSlack),
        Just(Mutation::NegativeDemand),
        Just(Mutation::InvertGenerator),
        Just(Mutation::ZeroSusceptance),
        Just(Mutation::NegativeCapacity),
        Just(Mutation::SelfLoop),
        Just(Mutation::DanglingLine),
        Just(Mutation::DanglingGenerator),
        Just(Mutation::DuplicateLine),
        Just(Mutation::OpenTreeLeaf),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn native_round_trip(net in arb_network()) {
        prop_assert!(net.validate().is_empty(), "{:?}", net.validate());
        let back = parse_native(&write_native(&net)).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(back.content_hash(), net.content_hash());
    }

    #[test]
    fn single_mutation_yields_matching_violation(net in arb_network(), m in arb_mutation()) {
        let (mutated, expected) = apply(&net, &m);
        prop_assert_eq!(mutated.validate(), vec![expected]);
    }

    #[test]
    fn bus_index_is_a_bijection(net in arb_network()) {
        let n = net.num_buses();
        let mut seen = vec![false; n];
        for b in net.buses() {
            let i = net.bus_index(b.id).unwrap();
            prop_assert!(i < n && !seen[i]);
            seen[i] = true;
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }
}
