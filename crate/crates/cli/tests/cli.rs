use cbc_forcing::generate::exhaustive_protocols;
use cbc_forcing_cli::spec::{parse_spec, to_json, Mode, ProtocolSpec, SpecError};
use cbc_forcing_cli::{run, EXIT_COUNTEREXAMPLE, EXIT_PARSE, EXIT_PASS, EXIT_VALIDATION};
use std::io::Write;
use std::process::Command;

fn spec_path(name: &str) -> String {
    format!("{}/../../specs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn read(name: &str) -> String {
    std::fs::read_to_string(spec_path(name)).unwrap()
}

fn temp_spec(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn args(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn p0_round_trips() {
    let spec = parse_spec(&read("p0.json")).unwrap();
    assert_eq!(spec.states.len(), 3);
    assert_eq!(spec.executions.len(), 2);
    assert_eq!(parse_spec(&to_json(&spec)).unwrap(), spec);
}

#[test]
fn every_sample_spec_round_trips() {
    for name in [
        "p0.json",
        "p1.json",
        "refining.json",
        "loop.json",
        "bottom.json",
    ] {
        let spec = parse_spec(&read(name)).unwrap();
        let again = parse_spec(&to_json(&spec)).unwrap();
        assert_eq!(again, spec, "{name}");
        assert_eq!(again.build().unwrap(), spec.build().unwrap(), "{name}");
    }
}

#[test]
fn generated_protocols_serialize_and_rebuild() {
    for p in exhaustive_protocols(2, 3) {
        let spec = ProtocolSpec::from_protocol(&p);
        assert_eq!(spec.mode, Mode::Dag);
        let back = parse_spec(&to_json(&spec)).unwrap();
        assert_eq!(back.build().unwrap(), p);
    }
}

#[test]
fn category_mode_round_trips_through_from_protocol() {
    let spec = parse_spec(&read("loop.json")).unwrap();
    let p = spec.build().unwrap();
    let dumped = ProtocolSpec::from_protocol(&p);
    assert_eq!(dumped.mode, Mode::Category);
    assert_eq!(dumped.compose, vec![["t", "t", "t"].map(String::from)]);
    assert_eq!(parse_spec(&to_json(&dumped)).unwrap().build().unwrap(), p);
}

#[test]
fn spec_errors() {
    let unknown_value = r#"{"consensus":["a"],"states":["w1"],"estimates":{"w1":["c"]}}"#;
    assert!(matches!(
        parse_spec(unknown_value),
        Err(SpecError::UnresolvedReference(_))
    ));
    let cycle = read("cyclic.json");
    assert_eq!(
        parse_spec(&cycle),
        Err(SpecError::CyclicQuiver(vec!["w1".into(), "w2".into()]))
    );
    let unknown_field = r#"{"consensus":["a"],"states":["w1"],"estimates":{"w1":["a"]},"extra":1}"#;
    match parse_spec(unknown_field) {
        Err(SpecError::Parse { line, message, .. }) => {
            assert_eq!(line, 1);
            assert!(message.contains("extra"));
        }
        other => panic!("{other:?}"),
    }
    let missing = r#"{"consensus":["a"],"states":["w1","w2"],"estimates":{"w1":["a"]}}"#;
    assert!(matches!(
        parse_spec(missing),
        Err(SpecError::UnresolvedReference(_))
    ));
    let bad_edge = r#"{"consensus":["a"],"states":["w1"],"executions":[{"name":"x","from":"w1","to":"w9"}],"estimates":{"w1":["a"]}}"#;
    assert!(matches!(
        parse_spec(bad_edge),
        Err(SpecError::UnresolvedReference(_))
    ));
    let compose_in_dag =
        r#"{"consensus":["a"],"states":["w1"],"compose":[["x","x","x"]],"estimates":{"w1":["a"]}}"#;
    assert!(matches!(
        parse_spec(compose_in_dag),
        Err(SpecError::Invalid(_))
    ));
    let bad_property = r#"{"consensus":["a"],"states":["w1"],"estimates":{"w1":["a"]},"properties":{"q":{"w2":true}}}"#;
    assert!(matches!(
        parse_spec(bad_property),
        Err(SpecError::UnresolvedReference(_))
    ));
}

#[test]
fn documented_examples() {
    let p0 = spec_path("p0.json");
    let out = run(args(&[
        "safety",
        &p0,
        "--prop",
        "a",
        "--state",
        "w1",
        "--method",
        "direct,forcing",
    ]));
    assert_eq!(out.exit_code, EXIT_PASS);
    assert!(out
        .stdout
        .contains("result safety direct=true forcing=true prop={a} state=w1"));

    let out = run(args(&["verify", &p0, "--suite", "theorem"]));
    assert_eq!(out.exit_code, EXIT_PASS);
    assert!(out
        .stdout
        .contains("PASS safety-theorem cases=81 violations=0"));

    let out = run(args(&["safety", &p0, "--method", "modal"]));
    assert_eq!(out.exit_code, EXIT_VALIDATION);
    assert!(out.stdout.contains("not retracts"));
    assert!(out.stdout.contains("{b}"));
}

#[test]
fn exit_code_matrix() {
    let p0 = spec_path("p0.json");
    let p1 = spec_path("p1.json");
    let refining = spec_path("refining.json");
    let matrix: Vec<(Vec<String>, i32)> = vec![
        (args(&["validate", &p0]), EXIT_PASS),
        (args(&["compatible", &p0]), EXIT_PASS),
        (args(&["decided", &p1, "--prop", "late"]), EXIT_PASS),
        (
            args(&["decided", &p1, "--prop", "early", "--method", "modal"]),
            EXIT_VALIDATION,
        ),
        (args(&["verify", &p0]), EXIT_PASS),
        (args(&["verify", &spec_path("loop.json")]), EXIT_PASS),
        (args(&["report", &p1]), EXIT_PASS),
        (
            args(&["safety", &refining, "--method", "all"]),
            EXIT_VALIDATION,
        ),
        (
            args(&[
                "safety",
                &refining,
                "--method",
                "all",
                "--waive-estimator-condition",
            ]),
            EXIT_PASS,
        ),
        (
            args(&["validate", &p1, "--strict-functorial"]),
            EXIT_VALIDATION,
        ),
        (args(&["semantics", &p1]), EXIT_VALIDATION),
        (
            args(&["validate", &spec_path("bottom.json")]),
            EXIT_VALIDATION,
        ),
        (
            args(&[
                "validate",
                &spec_path("bottom.json"),
                "--waive-estimator-condition",
            ]),
            EXIT_PASS,
        ),
        (
            args(&[
                "verify",
                &spec_path("bottom.json"),
                "--suite",
                "lemmas",
                "--waive-estimator-condition",
            ]),
            EXIT_COUNTEREXAMPLE,
        ),
        (
            args(&["sweep", "--consensus", "2", "--states", "2"]),
            EXIT_PASS,
        ),
        (
            args(&[
                "sweep",
                "--consensus",
                "1",
                "--states",
                "1",
                "--waive-estimator-condition",
            ]),
            EXIT_COUNTEREXAMPLE,
        ),
        (
            args(&["sweep", "--consensus", "3", "--states", "5"]),
            EXIT_PARSE,
        ),
        (args(&["validate", &spec_path("cyclic.json")]), EXIT_PARSE),
        (args(&["validate", "/nonexistent/spec.json"]), EXIT_PARSE),
        (args(&["safety", &p0, "--prop", "z"]), EXIT_PARSE),
        (args(&["safety", &p0, "--method", "psychic"]), EXIT_PARSE),
        (args(&["compatible", &p0, "--state", "w1"]), EXIT_PARSE),
        (args(&["verify", &p0, "--suite", "vibes"]), EXIT_PARSE),
        (args(&["decided", &p1, "--prop", "missing"]), EXIT_PARSE),
        (args(&[]), EXIT_PARSE),
    ];
    for (a, want) in matrix {
        let out = run(a.clone());
        assert_eq!(out.exit_code, want, "{a:?}\n{}", out.stdout);
        assert!(out.stdout.ends_with(&format!("(exit {want})\n")), "{a:?}");
    }
}

#[test]
fn waived_sweep_dumps_a_counterexample() {
    let out = run(args(&[
        "sweep",
        "--consensus",
        "1",
        "--states",
        "1",
        "--waive-estimator-condition",
        "--format",
        "json",
    ]));
    assert_eq!(out.exit_code, EXIT_COUNTEREXAMPLE);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["status"], "counterexample");
    let dump = serde_json::to_string(&v["counterexample"]).unwrap();
    let spec = parse_spec(&dump).unwrap();
    assert_eq!(spec.estimates["s0"], Vec::<String>::new());
    let cur = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "current-consistency")
        .unwrap();
    assert!(cur["violations"].as_u64().unwrap() > 0);
}

#[test]
fn reports_are_deterministic() {
    let p0 = spec_path("p0.json");
    for a in [
        args(&["report", &p0, "--format", "json"]),
        args(&[
            "report",
            &spec_path("refining.json"),
            "--waive-estimator-condition",
        ]),
        args(&[
            "sweep", "--suite", "random", "--count", "30", "--seed", "11", "--format", "json",
        ]),
    ] {
        assert_eq!(run(a.clone()), run(a));
    }
    let seeded = run(args(&[
        "sweep", "--suite", "random", "--count", "5", "--seed", "11",
    ]));
    assert!(seeded.stdout.contains("seed: 11\n"));
}

#[test]
fn json_reports_parse_and_count() {
    let out = run(args(&[
        "compatible",
        &spec_path("p0.json"),
        "--format",
        "json",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 6);
    assert_eq!(v["counts"]["results"], 6);
    let w1w2 = results
        .iter()
        .find(|r| r["states"] == serde_json::json!(["w1", "w2"]))
        .unwrap();
    assert_eq!(w1w2["common_future"], "w3");
    let w1w1 = results
        .iter()
        .find(|r| r["states"] == serde_json::json!(["w1", "w1"]))
        .unwrap();
    assert_eq!(w1w1["common_future"], "w1");
}

#[test]
fn usage_errors_honour_json() {
    let out = run(args(&["safety", "--format", "json"]));
    assert_eq!(out.exit_code, EXIT_PARSE);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["status"], "parse-error");
}

#[test]
fn binary_exit_codes_match_the_library() {
    let bin = env!("CARGO_BIN_EXE_cbc-forcing");
    let p0 = spec_path("p0.json");
    let status = |a: &[&str]| Command::new(bin).args(a).output().unwrap();
    let ok = status(&["validate", &p0]);
    assert_eq!(ok.status.code(), Some(EXIT_PASS));
    assert_eq!(
        String::from_utf8(ok.stdout).unwrap(),
        run(args(&["validate", &p0])).stdout
    );
    assert_eq!(
        status(&["safety", &p0, "--method", "modal"]).status.code(),
        Some(EXIT_VALIDATION)
    );
    assert_eq!(
        status(&["validate", &spec_path("cyclic.json")])
            .status
            .code(),
        Some(EXIT_PARSE)
    );
    assert_eq!(status(&["--version"]).status.code(), Some(EXIT_PASS));
}

#[test]
fn strict_flag_and_category_validation() {
    // composite of the two executions left undefined
    let text = r#"{
        "consensus": ["a"],
        "states": ["x", "y", "z"],
        "executions": [
            {"name": "f", "from": "x", "to": "y"},
            {"name": "g", "from": "y", "to": "z"}
        ],
        "mode": "category",
        "estimates": {"x": ["a"], "y": ["a"], "z": ["a"]}
    }"#;
    let file = temp_spec(text);
    let path = file.path().to_str().unwrap();
    let out = run(args(&["validate", path]));
    assert_eq!(out.exit_code, EXIT_VALIDATION);
    assert!(out.stdout.contains("FAIL sigma-composition-total"));

    let stray = text.replace(
        r#""mode": "category","#,
        r#""mode": "category", "executions_note": 1,"#,
    );
    assert_eq!(
        run(args(&[
            "validate",
            temp_spec(&stray).path().to_str().unwrap()
        ]))
        .exit_code,
        EXIT_PARSE
    );

    let strict = run(args(&[
        "validate",
        &spec_path("p1.json"),
        "--strict-functorial",
    ]));
    assert!(strict.stdout.contains("FAIL estimator-functorial"));
}
