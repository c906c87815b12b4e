use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use inkgram::glyphs;
use inkgram::grammar::Grammar;
use inkgram::model::Model;
use inkgram::session::SessionManager;
use inkgram::synth::{synth_corpus, GlyphSet, SynthConfig};
use inkgram::train::{train, TrainConfig};
use inkgram_cli::server::router;
use serde_json::{json, Value};
use tower::ServiceExt;

const GRAMMAR: &str = "start EXPR
terminals + - a x p P 2
EXPR -> ADD | TERM
ADD -> (right) TERM + EXPR
TERM -> MULT | LEAD-TERM
LEAD-TERM -> SUP | FRAC | SYM
MULT -> (right) LEAD-TERM TERM
FRAC -> (below) EXPR - EXPR
SUP -> (super) SYM EXPR
SYM -> a | x | p | P | 2
";

fn model() -> &'static Model {
    static M: OnceLock<Model> = OnceLock::new();
    M.get_or_init(|| {
        let g = Grammar::parse(GRAMMAR).unwrap();
        let cfg = SynthConfig { count: 300, noise: 0.03, seed: 3, ..Default::default() };
        let corpus = synth_corpus(&g, &GlyphSet::builtin(), &cfg).unwrap();
        train(&g, &corpus, &TrainConfig::default()).unwrap().0
    })
}

fn app_with(m: Model) -> Router {
    let mut manager = SessionManager::new();
    manager.add_model("fig3", m);
    router(Arc::new(manager), None)
}

fn app() -> Router {
    app_with(model().clone())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

/// Strokes of a `p` followed by a smaller `x+a` on its baseline.
fn fixture() -> Vec<(&'static str, Vec<Value>)> {
    let place = |name: &str, dx: f64, dy: f64, s: f64| -> Vec<Value> {
        glyphs::glyph(name)
            .unwrap()
            .into_iter()
            .map(|st| json!(st.iter().map(|p| [dx + s * p.x, dy + s * p.y]).collect::<Vec<_>>()))
            .collect()
    };
    let s = 0.7;
    let mut out = vec![("p", place("p", 0.0, 0.0, 1.0))];
    for (i, n) in ["x", "+", "a"].into_iter().enumerate() {
        out.push((n, place(n, 0.5 + 0.65 * s * i as f64, 1.0 - s, s)));
    }
    out
}

async fn new_session(app: &Router) -> u64 {
    let (st, v) = call(app, Method::POST, "/api/sessions", Some(json!({"model": "fig3"}))).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    v["session"].as_u64().unwrap()
}

/// Writes the fixture; returns the ids per glyph and the last update.
async fn write(app: &Router, id: u64) -> (Vec<Vec<u64>>, Value) {
    let mut ids = Vec::new();
    let mut last = Value::Null;
    for (_, strokes) in fixture() {
        let mut glyph = Vec::new();
        for points in strokes {
            let (st, v) = call(app, Method::POST, &format!("/api/sessions/{id}/strokes"), Some(json!({"points": points}))).await;
            assert_eq!(st, StatusCode::OK, "{v}");
            glyph.push(v["stroke"].as_u64().unwrap());
            last = v;
        }
        ids.push(glyph);
    }
    (ids, last)
}

#[tokio::test]
async fn sessions_are_created_and_deleted() {
    let app = app();
    let (st, v) = call(&app, Method::GET, "/api/models", None).await;
    assert_eq!((st, v), (StatusCode::OK, json!({"models": ["fig3"]})));

    let a = new_session(&app).await;
    let b = new_session(&app).await;
    assert_ne!(a, b);
    // no body picks the first model
    let (st, _) = call(&app, Method::POST, "/api/sessions", None).await;
    assert_eq!(st, StatusCode::CREATED);

    let (st, v) = call(&app, Method::GET, &format!("/api/sessions/{a}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v, json!({"session": a, "revision": 0, "strokes": [], "tree": null, "locks": []}));

    let (st, v) = call(&app, Method::POST, "/api/sessions", Some(json!({"model": "nope"}))).await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown-model")));

    let (st, _) = call(&app, Method::DELETE, &format!("/api/sessions/{a}"), None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    let (st, v) = call(&app, Method::GET, &format!("/api/sessions/{a}"), None).await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown-session")));
}

#[tokio::test]
async fn correction_workflow() {
    let app = app();
    let id = new_session(&app).await;
    let (ids, last) = write(&app, id).await;
    let all: Vec<u64> = ids.concat();
    assert_eq!(last["tree"]["latex"], "px+a");
    assert_eq!(last["revision"], all.len());

    let alt_uri = format!("/api/sessions/{id}/alternates");
    let (st, alts) = call(&app, Method::POST, &alt_uri, Some(json!({"strokes": all, "k": 10}))).await;
    assert_eq!(st, StatusCode::OK, "{alts}");
    let list = alts["alternates"].as_array().unwrap();
    assert_eq!(list[0]["latex"], "px+a");
    let index = list.iter().position(|t| t["latex"] == "P^{x+a}").expect("P^{x+a} offered");
    assert!(list[index]["expression"].is_object());

    let lock_uri = format!("/api/sessions/{id}/lock");
    let req = json!({"revision": alts["revision"], "strokes": all, "index": index});
    let (st, v) = call(&app, Method::POST, &lock_uri, Some(req.clone())).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["tree"]["latex"], "P^{x+a}");
    assert_eq!(v["locks"][0]["strokes"], json!(all));

    // the list is now stale
    let (st, v) = call(&app, Method::POST, &lock_uri, Some(req)).await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::CONFLICT, Some("stale-alternates")));

    let (st, v) = call(&app, Method::GET, &format!("/api/sessions/{id}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["tree"]["latex"], "P^{x+a}");

    let a_stroke = ids[3][0];
    let (st, v) = call(&app, Method::DELETE, &format!("/api/sessions/{id}/strokes/{a_stroke}"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["dropped_locks"].as_array().unwrap().len(), 1);
    assert_eq!(v["locks"], json!([]));
    let (st, v) = call(&app, Method::DELETE, &format!("/api/sessions/{id}/strokes/{a_stroke}"), None).await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown-stroke")));
}

#[tokio::test]
async fn bad_requests_get_error_bodies() {
    let app = app();
    let id = new_session(&app).await;
    let uri = format!("/api/sessions/{id}/strokes");
    let (st, v) = call(&app, Method::POST, &uri, Some(json!({"pts": []}))).await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("bad-request")));
    let (st, v) = call(&app, Method::POST, &uri, Some(json!({"points": []}))).await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("ink-parse")));
    let (st, v) = call(&app, Method::POST, &format!("/api/sessions/{id}/alternates"), Some(json!({"strokes": []}))).await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("empty-subset")));
    let (st, v) = call(&app, Method::POST, "/api/sessions/999/strokes", Some(json!({"points": [[0.0, 0.0]]}))).await;
    assert_eq!((st, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown-session")));
}

#[tokio::test]
async fn complexity_limit_is_reported() {
    let mut m = model().clone();
    m.config.forest.max_entries = 40;
    let app = app_with(m);
    let id = new_session(&app).await;
    let mut saw = false;
    'outer: for (_, strokes) in fixture() {
        for points in strokes {
            let (st, v) = call(&app, Method::POST, &format!("/api/sessions/{id}/strokes"), Some(json!({"points": points}))).await;
            if st != StatusCode::OK {
                assert_eq!((st, v["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("complexity-limit")));
                saw = true;
                break 'outer;
            }
        }
    }
    assert!(saw);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn sessions_run_concurrently_and_deterministically() {
    let app = app();
    let mut tasks = Vec::new();
    for _ in 0..4 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let id = new_session(&app).await;
            let (ids, last) = write(&app, id).await;
            let (_, alts) =
                call(&app, Method::POST, &format!("/api/sessions/{id}/alternates"), Some(json!({"strokes": ids.concat()}))).await;
            (last["tree"].clone(), alts["alternates"].clone())
        }));
    }
    let mut results = Vec::new();
    for t in tasks {
        results.push(t.await.unwrap());
    }
    assert!(results.windows(2).all(|w| w[0] == w[1]));
    // default k is the model's
    assert_eq!(results[0].1.as_array().unwrap().len(), model().config.k_max);
}
