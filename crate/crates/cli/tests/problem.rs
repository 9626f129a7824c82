use oedkit_cli::problem::{parse_problem, Grid, Method, ModelKind, TaskSpec};
use serde_json::{json, Value};

fn parse(v: Value) -> oedkit_cli::problem::ProblemSpec {
    parse_problem(v.to_string().as_bytes()).unwrap_or_else(|e| panic!("{e:?}"))
}

fn errors(v: Value) -> Vec<(String, String)> {
    parse_problem(v.to_string().as_bytes()).unwrap_err().into_iter().map(|e| (e.path, e.message)).collect()
}

#[test]
fn minimal_spec_gets_defaults() {
    let spec = parse(json!({
        "model": {"kind": "polynomial", "degree": 1, "space": {"lower": [-1], "upper": [1]}},
        "task": {"kind": "design"}
    }));
    assert_eq!(spec.options.epsilon, 1e-4);
    assert_eq!(spec.options.seed, 0);
    assert_eq!(spec.options.grid, Grid::Levels(101));
    assert_eq!(spec.options.criterion, "D");
    assert_eq!(spec.model.as_ref().unwrap().theta, vec![0.0, 0.0]);
    assert!(matches!(spec.task, TaskSpec::Design { method: Method::Fedorov, n: None, restarts: 20, robust: None }));
}

#[test]
fn unknown_model_kind_names_the_field() {
    let errs = errors(json!({
        "model": {"kind": "spline", "theta": [1.0], "space": {"lower": [0], "upper": [1]}},
        "task": {"kind": "design"}
    }));
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert_eq!(errs[0].0, "$.model.kind");
    assert!(errs[0].1.contains("spline"));
}

#[test]
fn all_errors_are_collected() {
    let errs = errors(json!({
        "model": {"kind": "exponential", "theta": [1.0, "x"], "space": {"lower": [0, 1], "upper": [1]}},
        "task": {"kind": "design", "method": "simplex", "restarts": -3},
        "options": {"epsilon": 0, "seed": 1.5, "colour": "red"}
    }));
    let paths: Vec<&str> = errs.iter().map(|e| e.0.as_str()).collect();
    for p in [
        "$.model.theta[1]",
        "$.model.space.upper",
        "$.task.method",
        "$.task.restarts",
        "$.options.epsilon",
        "$.options.seed",
        "$.options.colour",
    ] {
        assert!(paths.contains(&p), "missing {p} in {errs:?}");
    }
}

#[test]
fn type_errors_name_the_expected_type() {
    let errs = errors(json!({
        "model": {"kind": "polynomial", "degree": "two", "space": {"lower": [0], "upper": [1]}},
        "task": {"kind": "design"},
        "options": {"plot": 1}
    }));
    let find = |p: &str| errs.iter().find(|e| e.0 == p).unwrap_or_else(|| panic!("{p}: {errs:?}")).1.clone();
    assert!(find("$.model.degree").contains("nonnegative integer"));
    assert!(find("$.options.plot").contains("boolean"));
}

#[test]
fn parameter_count_is_checked() {
    let errs = errors(json!({
        "model": {"kind": "compartment", "theta": [1.0, 2.0], "space": {"lower": [1], "upper": [720]}},
        "task": {"kind": "design"}
    }));
    assert_eq!(errs[0].0, "$.model.theta");
    assert!(errs[0].1.contains("expected 4"));
}

#[test]
fn task_needs_a_compatible_model() {
    let errs = errors(json!({
        "model": {"kind": "kriging", "lengthscale": 0.2, "space": {"lower": [0], "upper": [1]}},
        "task": {"kind": "certify", "measure": {"support": [[0.0]], "weights": [1.0]}}
    }));
    assert_eq!(errs[0].0, "$.model.kind");
    let errs = errors(json!({"task": {"kind": "design"}}));
    assert_eq!(errs[0].0, "$.model");
    let errs = errors(json!({"model": {"kind": "polynomial", "degree": 1}, "task": {"kind": "design"}}));
    assert_eq!(errs[0].0, "$.model.space");
}

#[test]
fn invalid_json_is_reported_at_the_root() {
    let errs = parse_problem(b"{\"model\": ").unwrap_err();
    assert_eq!(errs[0].path, "$");
    assert!(errs[0].message.starts_with("invalid JSON"));
}

#[test]
fn exchange_needs_a_size() {
    let errs = errors(json!({
        "model": {"kind": "weighing", "factors": 2, "space": {"candidates": [[-1, -1], [1, 1]]}},
        "task": {"kind": "design", "method": "exchange"}
    }));
    assert_eq!(errs[0].0, "$.task.n");
}

#[test]
fn robust_weights_must_be_a_distribution() {
    let errs = errors(json!({
        "model": {"kind": "exponential", "theta": [1.0], "space": {"lower": [0], "upper": [10]}},
        "task": {"kind": "design", "robust": {"thetas": [[0.5], [2.0]], "weights": [0.5, 0.6]}}
    }));
    assert_eq!(errs[0].0, "$.task.robust.weights");
    let spec = parse(json!({
        "model": {"kind": "exponential", "theta": [1.0], "space": {"lower": [0], "upper": [10]}},
        "task": {"kind": "design", "robust": {"thetas": [[0.5], [2.0]]}}
    }));
    let out = serde_json::to_value(&spec).unwrap();
    assert_eq!(out["task"]["robust"], json!({"mode": "average", "thetas": [[0.5], [2.0]], "weights": [0.5, 0.5]}));
}

fn pk_input() -> Value {
    json!({
        "model": {
            "kind": "compartment",
            "theta": [0.066, 0.038, 0.0242, 30.0],
            "space": {"lower": [1.0], "upper": [720.0]}
        },
        "task": {"kind": "design", "n": 8},
        "options": {"grid": {"step": 1.0}, "epsilon": 0.02, "out": "pk"}
    })
}

fn pk_normalized() -> Value {
    json!({
        "model": {
            "kind": "compartment",
            "input": [[0.0, 1.0, 75.0], [1.0, 720.0, 1.45]],
            "step": 0.05,
            "theta": [0.066, 0.038, 0.0242, 30.0],
            "space": {"lower": [1.0], "upper": [720.0]}
        },
        "task": {"kind": "design", "method": "fedorov", "n": 8, "restarts": 20},
        "options": {
            "criterion": "D",
            "grid": {"step": 1.0},
            "epsilon": 0.02,
            "max_iter": 200000,
            "seed": 0,
            "out": "pk",
            "merge_tol": 0.001,
            "plot": true
        }
    })
}

#[test]
fn pk_spec_round_trips() {
    let spec = parse(pk_input());
    let text = spec.to_json();
    let value: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value, pk_normalized());
    // Parsing the normalized form is a fixed point.
    let again = parse_problem(text.as_bytes()).unwrap();
    assert_eq!(again, spec);
    assert_eq!(again.to_json(), text);
    assert!(matches!(spec.model.unwrap().kind, ModelKind::Compartment { .. }));
}

#[test]
fn every_task_kind_round_trips() {
    let box1 = json!({"lower": [0.0], "upper": [1.0]});
    let kriging = json!({"kind": "kriging", "lengthscale": 0.2, "space": box1});
    let line = json!({"kind": "polynomial", "degree": 1, "space": {"lower": [-1.0], "upper": [1.0]}});
    let cases = [
        json!({"model": line, "task": {"kind": "certify", "measure": {"support": [[-1.0], [1.0]], "weights": [0.5, 0.5]}}}),
        json!({"model": line, "task": {"kind": "round", "measure": "measure.json", "n": 5}}),
        json!({"model": {"kind": "fir", "taps": 2}, "task": {"kind": "input-spectrum", "total_power": 2.0}}),
        json!({"task": {"kind": "synthesize", "spectrum": {"omega": [1.0], "power": [1.0]}, "samples": 64}}),
        json!({"model": kriging, "task": {"kind": "krige", "data": "data.csv", "lengthscales": [0.1, 0.2]}}),
        json!({"model": kriging, "task": {"kind": "spacefill", "n": 5, "method": "lhs"}}),
        json!({"model": kriging, "task": {"kind": "ego", "objective": {"kind": "sine"}, "budget": 20}}),
        json!({"model": line, "task": {"kind": "simulate", "theta_true": [0.1, 1.0], "n": 20, "sigma": 0.1}}),
        json!({"model": line, "task": {"kind": "discriminate", "rival": {"kind": "polynomial", "degree": 0}, "theta_true": [0.0, 1.0], "n": 20}}),
        json!({"model": {"kind": "transfer", "nb": 1, "na": 1, "theta": [1.0, -0.5], "noise": {"num": [1.0], "den": [1.0, -0.3]}}, "task": {"kind": "input-spectrum"}}),
    ];
    for case in cases {
        let spec = parse(case.clone());
        let text = spec.to_json();
        let again = parse_problem(text.as_bytes()).unwrap_or_else(|e| panic!("{case}: {e:?}"));
        assert_eq!(again, spec, "{case}");
        assert_eq!(again.to_json(), text);
    }
}

#[test]
fn measure_dimension_must_match_the_space() {
    let errs = errors(json!({
        "model": {"kind": "polynomial", "degree": 1, "space": {"lower": [-1], "upper": [1]}},
        "task": {"kind": "certify", "measure": {"support": [[0.0, 1.0]], "weights": [1.0]}}
    }));
    assert_eq!(errs[0].0, "$.task.measure.support");
}

#[test]
fn unsupported_criterion_is_rejected() {
    let errs = errors(json!({
        "model": {"kind": "polynomial", "degree": 1, "space": {"lower": [-1], "upper": [1]}},
        "task": {"kind": "design"},
        "options": {"criterion": "A"}
    }));
    assert_eq!(errs[0].0, "$.options.criterion");
}
