use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use revbrew::evo::{nsga2_run, NsgaConfig};
use revbrew::io::{RunRecord, Workspace};
use revbrew_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    app: Router,
    state: AppState,
    _results: tempfile::TempDir,
}

fn harness_with(f: impl FnOnce(&mut ServiceConfig)) -> Harness {
    let results = tempfile::tempdir().unwrap();
    let mut cfg = ServiceConfig::new(Workspace::builtin(), results.path());
    f(&mut cfg);
    let state = AppState::start(cfg);
    Harness {
        app: router(state.clone()),
        state,
        _results: results,
    }
}

fn harness() -> Harness {
    harness_with(|_| {})
}

impl Harness {
    async fn raw(&self, method: &str, uri: &str, body: Option<(&str, String)>) -> (StatusCode, String) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some((ct, b)) => {
                req = req.header("content-type", ct);
                Body::from(b)
            }
            None => Body::empty(),
        };
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let body = body.map(|b| ("application/json", b.to_string()));
        let (status, text) = self.raw(method, uri, body).await;
        let value = serde_json::from_str(&text).unwrap_or(Value::Null);
        (status, value)
    }

    async fn submit(&self, spec: Value) -> String {
        let (status, body) = self.call("POST", "/api/jobs", Some(spec)).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{body}");
        body["id"].as_str().unwrap().to_string()
    }

    /// Reads the whole event stream, which ends with the terminal event.
    async fn events(&self, id: &str) -> Vec<(String, Value)> {
        let (status, text) = self.raw("GET", &format!("/api/jobs/{id}/events"), None).await;
        assert_eq!(status, StatusCode::OK);
        let mut out = Vec::new();
        for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
            let mut name = String::new();
            let mut data = String::new();
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("event:") {
                    name = v.trim().to_string();
                } else if let Some(v) = line.strip_prefix("data:") {
                    data.push_str(v.trim());
                }
            }
            if !name.is_empty() {
                out.push((name, serde_json::from_str(&data).unwrap()));
            }
        }
        out
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn job_lifecycle_matches_a_direct_run() {
    let h = harness();
    let id = h
        .submit(json!({ "product": "Guinness Extra Stout", "seed": 5, "generations": 40 }))
        .await;
    let (status, snap) = h.call("GET", &format!("/api/jobs/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(["queued", "running", "done"].contains(&snap["state"].as_str().unwrap()));

    let events = h.events(&id).await;
    let (last, body) = events.last().unwrap();
    assert_eq!(last, "done");
    assert!(body["summary"]["nondominated_count"].as_u64().unwrap() > 0);
    let gens: Vec<u64> = events
        .iter()
        .filter(|(n, _)| n == "progress")
        .map(|(_, v)| v["generation"].as_u64().unwrap())
        .collect();
    assert_eq!(gens, vec![10, 20, 30, 40]);

    let (_, snap) = h.call("GET", &format!("/api/jobs/{id}"), None).await;
    assert_eq!(snap["state"], "done");
    assert_eq!(snap["spec"]["product"], 2);
    assert_eq!(snap["progress"]["generation"], 40);
    let summary = &snap["summary"];
    for key in ["nondominated_count", "successful_count", "best_e"] {
        assert!(!summary[key].is_null(), "{key}");
    }

    let path = snap["result_file"].as_str().unwrap();
    let record = RunRecord::read(std::path::Path::new(path)).unwrap();
    let ws = Workspace::builtin();
    let cfg = NsgaConfig {
        generations: 40,
        ..ws.nsga2_config(5)
    };
    let direct = nsga2_run(&ws.targets[1], &ws.inventory, &ws.brew, &cfg).unwrap();
    assert_eq!(record.result, direct);

    let (status, sols) = h.call("GET", &format!("/api/jobs/{id}/solutions"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        sols["front0"].as_array().unwrap().len() as u64,
        summary["nondominated_count"].as_u64().unwrap()
    );
    assert_eq!(
        sols["successful"].as_array().unwrap().len() as u64,
        summary["successful_count"].as_u64().unwrap()
    );
    assert_eq!(sols["ingredients"].as_array().unwrap().len(), 16);
    assert_eq!(sols["front0"][0]["genome"].as_array().unwrap().len(), 16);

    let (status, m) = h
        .call(
            "POST",
            "/api/analysis/distance-matrix",
            Some(json!({ "job": id, "which": "front0", "normalize": true })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let n = sols["front0"].as_array().unwrap().len();
    assert_eq!(m["values"].as_array().unwrap().len(), n);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn final_event_is_emitted_off_stride() {
    let h = harness_with(|c| c.progress_stride = 7);
    let id = h.submit(json!({ "product": "1", "generations": 15, "population_size": 20 })).await;
    let gens: Vec<u64> = h
        .events(&id)
        .await
        .iter()
        .filter(|(n, _)| n == "progress")
        .map(|(_, v)| v["generation"].as_u64().unwrap())
        .collect();
    assert_eq!(gens, vec![7, 14, 15]);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn validation_errors_name_the_field() {
    let h = harness();
    let cases = [
        (json!({ "product": "No Such Beer" }), "product"),
        (json!({ "product": "Atlantic IPA Ale" }), "product"),
        (json!({}), "product"),
        (json!({ "product": "2", "algorithm": "ga" }), "algorithm"),
        (json!({ "product": "2", "population_size": 1 }), "config"),
        (
            json!({ "target": { "name": "x", "og": 1.01, "fg": 1.05, "abv": 1.0, "ibu": 1.0, "srm": 1.0 } }),
            "target",
        ),
    ];
    for (spec, field) in cases {
        let (status, body) = h.call("POST", "/api/jobs", Some(spec.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{spec}");
        assert_eq!(body["field"], field, "{spec}: {body}");
    }
    let (status, _) = h.call("POST", "/api/jobs", Some(json!({ "bogus": 1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn same_spec_gives_distinct_jobs() {
    let h = harness();
    let spec = json!({ "product": "3", "generations": 5, "population_size": 10 });
    let a = h.submit(spec.clone()).await;
    let b = h.submit(spec).await;
    assert_ne!(a, b);
    h.events(&a).await;
    h.events(&b).await;
    let (_, list) = h.call("GET", "/api/jobs", None).await;
    assert_eq!(list.as_array().unwrap().len(), 2);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unknown_job_is_not_found() {
    let h = harness();
    for suffix in ["", "/solutions", "/events"] {
        let (status, _) = h.call("GET", &format!("/api/jobs/nope{suffix}"), None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{suffix}");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn failing_run_ends_with_failure_event() {
    let h = harness();
    let mut inventory = Workspace::builtin().inventory;
    // so much malt that random recipes overshoot any physical gravity
    inventory.fermentables[0].max_weight = 1000.0;
    let id = h
        .submit(json!({ "product": "2", "inventory": inventory, "generations": 5 }))
        .await;
    let events = h.events(&id).await;
    let (name, body) = events.last().unwrap();
    assert_eq!(name, "failed");
    assert!(body["error"].as_str().unwrap().contains("gravity"), "{body}");
    let (_, snap) = h.call("GET", &format!("/api/jobs/{id}"), None).await;
    assert_eq!(snap["state"], "failed");
    let (status, _) = h.call("GET", &format!("/api/jobs/{id}/solutions"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn full_queue_is_unavailable() {
    let h = harness_with(|c| c.queue_capacity = 1);
    let spec = json!({ "product": "1", "generations": 200 });
    let mut statuses = Vec::new();
    let mut ids = Vec::new();
    for _ in 0..4 {
        let (status, body) = h.call("POST", "/api/jobs", Some(spec.clone())).await;
        statuses.push(status);
        if status == StatusCode::ACCEPTED {
            ids.push(body["id"].as_str().unwrap().to_string());
        }
    }
    assert!(statuses.contains(&StatusCode::SERVICE_UNAVAILABLE), "{statuses:?}");
    assert_eq!(h.state.registry().list().len(), ids.len());
    for id in ids {
        h.events(&id).await;
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn workspace_views_and_inventory_edits() {
    let dir = tempfile::tempdir().unwrap();
    Workspace::builtin().save(dir.path()).unwrap();
    let ws_dir = dir.path().to_path_buf();
    let h = harness_with(|c| c.workspace_dir = Some(ws_dir));

    let (status, ws) = h.call("GET", "/api/workspace", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ws["targets"].as_array().unwrap().len(), 20);
    assert_eq!(ws["targets"][1]["og"], 1.070);
    assert_eq!(ws["ingredients"].as_array().unwrap().len(), 16);

    let (_, files) = h.call("GET", "/api/workspace?format=toml", None).await;
    assert!(files["inventory.toml"].as_str().unwrap().contains("[[hop]]"));

    let mut inv = Workspace::builtin().inventory;
    *inv.stock_mut("Roasted Barley").unwrap() = 5.0;
    let (status, _) = h
        .call("PUT", "/api/workspace/inventory", Some(serde_json::to_value(&inv).unwrap()))
        .await;
    assert_eq!(status, StatusCode::OK);
    let (_, ws) = h.call("GET", "/api/workspace", None).await;
    assert_eq!(ws["inventory"]["fermentable"][8]["max_weight"], 5.0);
    assert_eq!(Workspace::load(dir.path()).unwrap().inventory, inv);

    let toml_body = revbrew::io::inventory_to_toml(&Workspace::builtin().inventory);
    let (status, _) = h
        .raw("PUT", "/api/workspace/inventory", Some(("application/toml", toml_body)))
        .await;
    assert_eq!(status, StatusCode::OK);

    let mut bad = Workspace::builtin().inventory;
    bad.hops[0].max_weight = -1.0;
    let (status, body) = h
        .call("PUT", "/api/workspace/inventory", Some(serde_json::to_value(&bad).unwrap()))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("hop[0].max_weight"), "{body}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn distance_matrix_over_explicit_genomes() {
    let h = harness();
    let (status, m) = h
        .call(
            "POST",
            "/api/analysis/distance-matrix",
            Some(json!({ "genomes": [[0.0, 0.0], [3.0, 4.0]], "labels": ["a", "b"] })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(m["values"], json!([[0.0, 5.0], [5.0, 0.0]]));
    assert_eq!(m["labels"], json!(["a", "b"]));

    let (status, _) = h
        .call(
            "POST",
            "/api/analysis/distance-matrix",
            Some(json!({ "genomes": [[0.0], [1.0, 2.0]] })),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn roasted_barley_top_up_flips_product_seven() {
    let h = harness();
    let before = h.submit(json!({ "product": "Sunmaid Stout", "seed": 3 })).await;
    let mut inv = Workspace::builtin().inventory;
    *inv.stock_mut("Roasted Barley").unwrap() = 5.0;
    let (status, _) = h
        .call("PUT", "/api/workspace/inventory", Some(serde_json::to_value(&inv).unwrap()))
        .await;
    assert_eq!(status, StatusCode::OK);
    let after = h.submit(json!({ "product": "Sunmaid Stout", "seed": 3 })).await;

    let ok = |events: &[(String, Value)]| events.last().unwrap().1["summary"]["successful_count"].as_u64().unwrap();
    assert_eq!(ok(&h.events(&before).await), 0);
    assert!(ok(&h.events(&after).await) > 0);
}
