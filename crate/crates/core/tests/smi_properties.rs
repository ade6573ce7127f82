use marf_core::smi::{
    link_modules, parse_mib, resolve_augments, Access, Import, MibModule, ModuleIdentity, NotificationDef,
    ObjectTypeDef, OidAssignment, OidRef, Range, SequenceDef, Strictness, Syntax, TextualConvention,
};
use proptest::prelude::*;

fn arb_text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 .,()\n-]{0,40}"
}

fn arb_range(lo: i64) -> impl Strategy<Value = Option<Range>> {
    prop::option::of((lo..1000i64, 0..1000i64).prop_map(|(a, d)| Range { min: a, max: a + d }))
}

fn arb_simple_syntax(tcs: usize) -> impl Strategy<Value = Syntax> {
    prop_oneof![
        arb_range(-1000).prop_map(Syntax::Integer),
        prop::collection::btree_map("[a-z][a-zA-Z0-9]{0,6}", -5i64..50, 1..5)
            .prop_map(|m| Syntax::Enum(m.into_iter().collect())),
        Just(Syntax::Counter32),
        Just(Syntax::TimeTicks),
        arb_range(0).prop_map(Syntax::OctetString),
        arb_range(0).prop_map(Syntax::DisplayString),
        Just(Syntax::ObjectIdentifier),
        (0..tcs.max(1)).prop_map(move |i| if tcs == 0 { Syntax::Counter32 } else { Syntax::TypeRef(format!("Tc{i}")) }),
    ]
}

fn arb_access() -> impl Strategy<Value = Access> {
    prop::sample::select(vec![Access::NotAccessible, Access::ReadOnly, Access::ReadWrite])
}

fn arb_module() -> impl Strategy<Value = MibModule> {
    (0usize..4, 0usize..4, 0usize..6, 0usize..3, any::<bool>())
        .prop_flat_map(|(n_tc, n_assign, n_obj, n_tables, has_identity)| {
            (
                prop::collection::vec((arb_text(), arb_simple_syntax(0)), n_tc),
                prop::collection::vec(prop::collection::vec(0u32..100, 1..3), n_assign),
                prop::collection::vec((arb_simple_syntax(n_tc), arb_access(), arb_text()), n_obj),
                prop::collection::vec(prop::collection::vec(arb_simple_syntax(n_tc), 1..4), n_tables),
                (arb_text(), 0usize..3).prop_map(move |x| has_identity.then_some(x)),
                prop::collection::vec(0usize..6, 0..3),
            )
        })
        .prop_map(|(tcs, assigns, objs, tables, identity, notif_objs)| {
            let mut m = MibModule { name: "GEN-MIB".into(), ..Default::default() };
            m.imports = vec![
                Import { symbol: "enterprises".into(), module: "SNMPv2-SMI".into() },
                Import { symbol: "OBJECT-TYPE".into(), module: "SNMPv2-SMI".into() },
                Import { symbol: "TEXTUAL-CONVENTION".into(), module: "SNMPv2-TC".into() },
            ];
            if let Some((text, revs)) = identity {
                m.identity = Some(ModuleIdentity {
                    name: "genMIB".into(),
                    last_updated: "202601010000Z".into(),
                    organization: text.clone(),
                    contact_info: "nobody".into(),
                    description: text,
                    revisions: (0..revs).map(|i| (format!("20260{}010000Z", i + 1), format!("rev {i}"))).collect(),
                    oid: OidRef::child_of("enterprises", 99),
                });
            }
            for (i, (desc, syntax)) in tcs.into_iter().enumerate() {
                m.textual_conventions.push(TextualConvention {
                    name: format!("Tc{i}"),
                    display_hint: (i % 2 == 0).then(|| "d".to_string()),
                    status: "current".into(),
                    description: desc,
                    syntax,
                });
            }
            m.assignments.push(OidAssignment { name: "root".into(), oid: OidRef::child_of("enterprises", 4242) });
            for (i, subs) in assigns.into_iter().enumerate() {
                let mut sub_ids = vec![100 + i as u32];
                sub_ids.extend(subs);
                m.assignments.push(OidAssignment {
                    name: format!("node{i}"),
                    oid: OidRef { parent: Some("root".into()), sub_ids },
                });
            }
            for (i, (syntax, access, desc)) in objs.into_iter().enumerate() {
                m.object_types.push(ObjectTypeDef {
                    name: format!("scalar{i}"),
                    syntax,
                    max_access: access,
                    status: "current".into(),
                    description: desc,
                    index: vec![],
                    augments: None,
                    oid: Some(OidRef::child_of("root", 1 + i as u32)),
                });
            }
            for (t, cols) in tables.into_iter().enumerate() {
                let seq = format!("GenRow{t}");
                let entry = format!("gen{t}Entry");
                let plain = |name: String, syntax: Syntax, oid: OidRef, index: Vec<String>| ObjectTypeDef {
                    name,
                    syntax,
                    max_access: Access::NotAccessible,
                    status: "current".into(),
                    description: String::new(),
                    index,
                    augments: None,
                    oid: Some(oid),
                };
                m.object_types.push(plain(
                    format!("gen{t}Table"),
                    Syntax::SequenceOf(seq.clone()),
                    OidRef::child_of("root", 50 + t as u32),
                    vec![],
                ));
                m.object_types.push(plain(
                    entry.clone(),
                    Syntax::Entry(seq.clone()),
                    OidRef::child_of(format!("gen{t}Table"), 1),
                    vec![format!("gen{t}c0")],
                ));
                let mut fields = Vec::new();
                for (c, syntax) in cols.into_iter().enumerate() {
                    let name = format!("gen{t}c{c}");
                    fields.push((name.clone(), syntax.clone()));
                    m.object_types.push(ObjectTypeDef {
                        max_access: Access::ReadOnly,
                        ..plain(name, syntax, OidRef::child_of(entry.clone(), 1 + c as u32), vec![])
                    });
                }
                m.sequences.push(SequenceDef { name: seq, fields });
            }
            let names: Vec<String> = m.object_types.iter().map(|o| o.name.clone()).collect();
            if !names.is_empty() {
                m.notifications.push(NotificationDef {
                    name: "genEvent".into(),
                    objects: notif_objs.into_iter().map(|i| names[i % names.len()].clone()).collect(),
                    status: "current".into(),
                    description: "event".into(),
                    oid: OidRef { parent: Some("root".into()), sub_ids: vec![0, 1] },
                });
            }
            m
        })
}

/// A chain of `depth` tables, each augmenting the previous one's row.
fn chain_module(cols: &[usize]) -> String {
    let mut s = String::from(
        "CHAIN DEFINITIONS ::= BEGIN\nIMPORTS enterprises FROM SNMPv2-SMI;\nr OBJECT IDENTIFIER ::= { enterprises 7 }\n",
    );
    for (t, &n) in cols.iter().enumerate() {
        let clause = if t == 0 { "INDEX { t0c0 }".to_string() } else { format!("AUGMENTS {{ t{}Entry }}", t - 1) };
        s += &format!(
            "t{t}Table OBJECT-TYPE SYNTAX SEQUENCE OF T{t}Row MAX-ACCESS not-accessible STATUS current DESCRIPTION \"\" ::= {{ r {} }}\n\
             t{t}Entry OBJECT-TYPE SYNTAX T{t}Row MAX-ACCESS not-accessible STATUS current DESCRIPTION \"\" {clause} ::= {{ t{t}Table 1 }}\n",
            t + 1
        );
        let fields: Vec<String> = (0..n).map(|c| format!("t{t}c{c} Integer32")).collect();
        s += &format!("T{t}Row ::= SEQUENCE {{ {} }}\n", fields.join(", "));
        for c in 0..n {
            s += &format!(
                "t{t}c{c} OBJECT-TYPE SYNTAX Integer32 MAX-ACCESS read-only STATUS current DESCRIPTION \"\" ::= {{ t{t}Entry {} }}\n",
                c + 1
            );
        }
    }
    s + "END\n"
}

proptest! {
    #[test]
    fn print_then_parse_is_a_fixpoint(m in arb_module()) {
        let printed = m.to_string();
        let reparsed = parse_mib(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
        prop_assert_eq!(&reparsed, &m);
        prop_assert_eq!(reparsed.to_string(), printed);
        // generated modules are also linkable
        link_modules(vec![m]).map_err(|e| TestCaseError::fail(e.to_string()))?;
    }

    /// Resolving a prefix of a chain and then extending it by one link gives
    /// the same columns as resolving the whole chain at once.
    #[test]
    fn flattening_is_associative(cols in prop::collection::vec(1usize..4, 1..7)) {
        let reg = link_modules(vec![parse_mib(&chain_module(&cols)).unwrap()]).unwrap();
        let full = resolve_augments(&reg, Strictness::Lenient).unwrap();
        for k in 1..cols.len() {
            let prefix_reg = link_modules(vec![parse_mib(&chain_module(&cols[..k])).unwrap()]).unwrap();
            let prefix = resolve_augments(&prefix_reg, Strictness::Lenient).unwrap();
            let head = prefix.tables.iter().find(|t| t.name == format!("t{}Table", k - 1)).unwrap();
            let next = full.tables.iter().find(|t| t.name == format!("t{k}Table")).unwrap();
            let mut joined = head.effective_columns.clone();
            joined.extend(next.own_columns.clone());
            prop_assert_eq!(&next.effective_columns, &joined);
            prop_assert_eq!(&next.index_columns, &head.index_columns);
        }
        let last = full.tables.iter().find(|t| t.name == format!("t{}Table", cols.len() - 1)).unwrap();
        prop_assert_eq!(last.effective_columns.len(), cols.iter().sum::<usize>());
        let strict = resolve_augments(&reg, Strictness::Strict);
        prop_assert_eq!(strict.is_ok(), cols.len() <= 2);
    }
}
