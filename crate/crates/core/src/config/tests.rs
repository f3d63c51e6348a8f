use super::*;
use crate::env::EnvKind;

const RULE_DST: &str = include_str!("../../examples/configs/swap_rule_dst.json");
const WORD_DST: &str = include_str!("../../examples/configs/swap_word_dst.json");

fn agent_with(slots: &str) -> String {
    format!(
        r#"{{"x": {{"agent": [{{"name": "A", {slots}}}], "env": [{{"name": "e", "nlu": {{"name": "PatternNLU"}}, "nlg": {{"name": "TemplateNLG"}}}}]}}}}"#
    )
}

fn n_by_m(agents: usize, envs: usize, product: &str) -> String {
    let a = vec![r#"{"dst": {"name": "RuleDST"}, "policy": {"name": "RulePolicy"}}"#; agents].join(",");
    let e = vec![r#"{"policy": {"name": "UserPolicyAgenda"}}"#; envs].join(",");
    format!(r#"{{"x": {{"agent": [{a}], "env": [{e}], "body": {{"product": "{product}"}}}}}}"#)
}

#[test]
fn rule_dst_config_is_a_text_pipeline() {
    let c = parse_config(RULE_DST).unwrap();
    assert_eq!(c.name, "multiwoz");
    let AgentLayoutSpec::Pipeline { nlu, dst, policy, nlg } = &c.agents[0].layout else { panic!("not a pipeline") };
    assert_eq!(nlu.as_ref().unwrap().name, "PatternNLU");
    assert_eq!(dst.name, "RuleDST");
    assert_eq!(policy.name, "RulePolicy");
    assert_eq!(nlg.as_ref().unwrap().params["is_user"], Value::Bool(false));
    let env = &c.envs[0];
    assert_eq!(env.spec.kind, EnvKind::SimulatedText);
    assert_eq!((env.spec.max_t, env.spec.max_tick), (40, 20000));
    assert_eq!(c.body.product, Product::Outer);
}

#[test]
fn word_dst_config_accepts_the_hyphenated_slot() {
    let c = parse_config(WORD_DST).unwrap();
    assert!(matches!(&c.agents[0].layout, AgentLayoutSpec::WordDst { word_dst, .. } if word_dst.name == "WordDST"));
    let norm = normalize(&c);
    let agent = &norm["multiwoz"]["agent"][0];
    assert!(agent.get("word_dst").is_some());
    assert!(agent.get("word-dst").is_none());
}

#[test]
fn slot_exclusivity() {
    let both = agent_with(r#""nlu": {"name": "PatternNLU"}, "word-dst": {"name": "WordDST"}, "policy": {"name": "RulePolicy"}"#);
    assert!(matches!(parse_config(&both), Err(Error::SlotConflict(_))));
    let e2e = agent_with(r#""end_to_end": {"name": "RuleEndToEnd"}, "policy": {"name": "RulePolicy"}"#);
    assert!(matches!(parse_config(&e2e), Err(Error::SlotConflict(_))));
    let wp = agent_with(r#""dst": {"name": "RuleDST"}, "word_policy": {"name": "WordPolicy"}, "nlg": {"name": "TemplateNLG"}"#);
    assert!(matches!(parse_config(&wp), Err(Error::SlotConflict(_))));
}

#[test]
fn missing_policy() {
    let c = agent_with(r#""nlu": {"name": "PatternNLU"}, "dst": {"name": "RuleDST"}"#);
    assert!(matches!(parse_config(&c), Err(Error::MissingSlot(_))));
}

#[test]
fn unknown_component_and_syntax() {
    let c = agent_with(r#""nlu": {"name": "OneNet"}, "dst": {"name": "RuleDST"}, "policy": {"name": "RulePolicy"}"#);
    assert!(matches!(parse_config(&c), Err(Error::UnknownComponent(n)) if n == "OneNet"));
    assert!(matches!(parse_config("{\"x\": "), Err(Error::Parse { .. })));
}

#[test]
fn slot_kind_is_checked() {
    let c = agent_with(r#""dst": {"name": "RulePolicy"}, "policy": {"name": "RulePolicy"}"#);
    assert!(matches!(parse_config(&c), Err(Error::Incompatible(_))));
}

#[test]
fn text_env_needs_agent_text_layers() {
    let c = agent_with(r#""dst": {"name": "RuleDST"}, "policy": {"name": "RulePolicy"}"#);
    assert!(matches!(parse_config(&c), Err(Error::Incompatible(_))));
}

#[test]
fn word_dst_needs_text_env() {
    let c = r#"{"x": {"agent": [{"word_dst": {"name": "WordDST"}, "policy": {"name": "RulePolicy"}, "nlg": {"name": "TemplateNLG"}}],
                "env": [{"policy": {"name": "UserPolicyAgenda"}}]}}"#;
    assert!(matches!(parse_config(c), Err(Error::Incompatible(_))));
}

#[test]
fn outer_inner_custom() {
    let c = parse_config(&n_by_m(2, 3, "outer")).unwrap();
    let comp = compose(&c, 1).unwrap();
    assert_eq!(comp.bodies.len(), 6);
    assert_eq!(comp.wiring(), vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);

    let c = parse_config(&n_by_m(2, 2, "inner")).unwrap();
    assert_eq!(compose(&c, 1).unwrap().wiring(), vec![(0, 0), (1, 1)]);

    let c = parse_config(&n_by_m(2, 3, "inner")).unwrap();
    assert!(matches!(compose(&c, 1), Err(Error::ShapeMismatch { agents: 2, envs: 3 })));

    let mut c = parse_config(&n_by_m(2, 3, "outer")).unwrap();
    c.body.product = Product::Custom;
    assert!(compose(&c, 1).is_err());
    c.body.adjacency = vec![[1, 2], [0, 0]];
    assert_eq!(compose(&c, 1).unwrap().wiring(), vec![(1, 2), (0, 0)]);
}

#[test]
fn num_copies_every_pairing() {
    let mut c = parse_config(&n_by_m(1, 2, "outer")).unwrap();
    c.body.num = 3;
    let comp = compose(&c, 0).unwrap();
    assert_eq!(comp.bodies.len(), 6);
    assert_eq!(comp.bodies[5].copy, 2);
}

#[test]
fn compose_is_pure() {
    let c = parse_config(RULE_DST).unwrap();
    let a = compose(&c, 3).unwrap();
    let b = compose(&c, 3).unwrap();
    assert_eq!(a.wiring(), b.wiring());
    let kinds = |x: &Composition| x.bodies.iter().map(|b| b.agent.layout().kind()).collect::<Vec<_>>();
    assert_eq!(kinds(&a), kinds(&b));
}

#[test]
fn normalization_fills_defaults_and_is_idempotent() {
    for text in [RULE_DST, WORD_DST, include_str!("../../examples/configs/rl_qlearning.json")] {
        let c = parse_config(text).unwrap();
        let n1 = normalize(&c);
        let c2 = parse_config(&n1.to_string()).unwrap();
        assert_eq!(normalize(&c2), n1);
        assert_eq!(c2, c);
    }
    let n = normalize(&parse_config(include_str!("../../examples/configs/rl_qlearning.json")).unwrap());
    let params = &n["rl_qlearning"]["agent"][0]["policy"]["params"];
    assert_eq!(params["algorithm"], "q_learning");
    assert_eq!(params["baseline_rate"], 0.05);
}

#[test]
fn every_shipped_config_parses_and_composes() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let c = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            compose(&c, 0).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 8);
}

#[test]
fn objective_must_be_a_metric() {
    let text = RULE_DST.replace(r#""episodes": 200"#, r#""episodes": 200, "objective": "happiness""#);
    assert!(matches!(parse_config(&text), Err(Error::Validation { .. })));
    let text = RULE_DST.replace(r#""episodes": 200"#, r#""episodes": 200, "objective": "avg_return""#);
    assert_eq!(parse_config(&text).unwrap().meta.objective, "avg_return");
}

#[test]
fn schema_file_tracks_the_metric_list() {
    let schema: Value = serde_json::from_str(include_str!("../../schema/experiment.schema.json")).unwrap();
    let listed = &schema["$defs"]["meta"]["properties"]["objective"]["enum"];
    assert_eq!(listed, &serde_json::json!(crate::harness::METRICS));
    let env = &schema["$defs"]["env"]["properties"];
    assert_eq!(env["max_t"]["default"], 40);
    assert_eq!(env["max_tick"]["default"], 20000);
    assert_eq!(schema["$defs"]["body"]["properties"]["product"]["default"], "outer");
}
