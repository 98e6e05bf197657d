mod common;

use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};
use vpi_core::scene::{Point, Scene};

fn client() -> Client {
    Client::builder().timeout(Duration::from_secs(30)).build().unwrap()
}

fn create(c: &Client, base: &str, body: Value) -> (String, Scene, u64) {
    let resp = c.post(format!("{base}/sessions")).json(&body).send().unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    let v: Value = resp.json().unwrap();
    let scene: Scene = serde_json::from_value(v["scene"].clone()).unwrap();
    (v["id"].as_str().unwrap().to_string(), scene, v["revision"].as_u64().unwrap())
}

fn post_move(c: &Client, base: &str, id: &str, object_id: u32, p: Point) -> (StatusCode, Value) {
    let resp = c
        .post(format!("{base}/sessions/{id}/moves"))
        .json(&json!({"object_id": object_id, "target_position": p}))
        .send()
        .unwrap();
    (resp.status(), resp.json().unwrap())
}

/// Three moves that put each star next to the triangle of its color.
fn color_grouping_moves(scene: &Scene) -> Vec<(u32, Point)> {
    let mut current = scene.clone();
    let mut out = Vec::new();
    for color in ["red", "green", "blue"] {
        let tri = current.object_by_name(&format!("{color} triangle")).unwrap().clone();
        let star = current.object_by_name(&format!("{color} star")).unwrap().id;
        let offsets = [(0.06, 0.0), (-0.06, 0.0), (0.0, 0.06), (0.0, -0.06), (0.05, 0.05), (-0.05, -0.05)];
        let (mv, next) = offsets
            .iter()
            .find_map(|(dx, dy)| {
                let p = Point::new(tri.position.x + dx, tri.position.y + dy);
                let mv = vpi_core::scene::Move::new(star, p);
                current.apply(&mv).ok().map(|s| (mv, s))
            })
            .expect("some offset is free");
        out.push((mv.object_id, mv.target_position));
        current = next;
    }
    out
}

#[test]
fn mdpe_session_reads_color_grouping() {
    let base = common::spawn_app(None);
    let c = client();
    let (id, scene, rev) = create(&c, &base, json!({"task": "polygon", "method": "mdpe", "seed": 11}));
    assert_eq!(rev, 0);
    for (i, (obj, p)) in color_grouping_moves(&scene).into_iter().enumerate() {
        let (status, v) = post_move(&c, &base, &id, obj, p);
        assert_eq!(status, StatusCode::OK, "{v}");
        assert_eq!(v["revision"], json!(i + 1));
    }

    let a = c.get(format!("{base}/sessions/{id}")).send().unwrap().text().unwrap();
    let b = c.get(format!("{base}/sessions/{id}")).send().unwrap().text().unwrap();
    assert_eq!(a, b);
    let state: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(state["scenes"].as_array().unwrap().len(), 4);
    assert_eq!(state["moves"].as_array().unwrap().len(), 3);

    let resp = c.post(format!("{base}/sessions/{id}/infer")).send().unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let result: Value = resp.json().unwrap();
    assert_eq!(result["preference"], "group_by_color");
    assert_eq!(result["ranked"][0][0], "group_by_color");
    assert_eq!(result["ranked"].as_array().unwrap().len(), 9);

    let after: Value = c.get(format!("{base}/sessions/{id}")).send().unwrap().json().unwrap();
    assert_eq!(after["scenes"], state["scenes"], "inference never touches the history");
    assert_eq!(after["revision"], 4);
    assert_eq!(after["last_inference"]["steps"], 4);

    for step in 0..4 {
        let resp = c.get(format!("{base}/sessions/{id}/render/{step}.png")).send().unwrap();
        assert_eq!(resp.status(), StatusCode::OK);
        assert_eq!(resp.headers()["content-type"], "image/png");
        assert_eq!(&resp.bytes().unwrap()[..4], b"\x89PNG");
    }
    let missing = c.get(format!("{base}/sessions/{id}/render/4.png")).send().unwrap();
    assert_eq!(missing.status(), StatusCode::NOT_FOUND);
}

#[test]
fn error_statuses() {
    let base = common::spawn_app(None);
    let c = client();
    let (id, scene, _) = create(&c, &base, json!({"task": "block", "method": "covr"}));

    let (status, v) = post_move(&c, &base, &id, 99, Point::new(0.5, 0.5));
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "UnknownObject");

    let before: Value = c.get(format!("{base}/sessions/{id}")).send().unwrap().json().unwrap();
    let (status, v) = post_move(&c, &base, &id, scene.objects[0].id, scene.objects[1].position);
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "InvalidMove");
    let after: Value = c.get(format!("{base}/sessions/{id}")).send().unwrap().json().unwrap();
    assert_eq!(before, after);

    let resp = c
        .post(format!("{base}/sessions/{id}/moves"))
        .body("{\"object_id\": \"zero\"}")
        .send()
        .unwrap();
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let resp = c
        .post(format!("{base}/sessions"))
        .json(&json!({"task": "block", "method": "covr", "backend": "oracle:p=7"}))
        .send()
        .unwrap();
    assert_eq!(resp.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let resp = c.get(format!("{base}/sessions/nope")).send().unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);

    let resp = c.post(format!("{base}/sessions/{id}/infer")).send().unwrap();
    assert_eq!(resp.status(), StatusCode::CONFLICT);
    let v: Value = resp.json().unwrap();
    assert_eq!(v["error"], "TooFewImages");
}

#[test]
fn oracle_covr_session_follows_requested_label() {
    let base = common::spawn_app(None);
    let c = client();
    let (id, scene, _) = create(
        &c,
        &base,
        json!({"task": "polygon", "method": "covr", "backend": "oracle:p=0,seed=1,label=group_by_shape", "seed": 11}),
    );
    for (obj, p) in color_grouping_moves(&scene) {
        assert_eq!(post_move(&c, &base, &id, obj, p).0, StatusCode::OK);
    }
    let result: Value = c.post(format!("{base}/sessions/{id}/infer")).send().unwrap().json().unwrap();
    assert_eq!(result["preference"], "group_by_shape");
    assert_eq!(result["residuals"].as_array().unwrap().len(), 3);
    assert_eq!(result["transcript"].as_array().unwrap().len(), 4);
    assert_eq!(result["ranked"], json!([["group_by_shape", 1.0]]));
    for r in result["residuals"].as_array().unwrap() {
        assert_eq!(r["status"], "parsed");
    }
}

#[test]
fn changes_long_poll_wakes_on_move() {
    let base = common::spawn_app(None);
    let c = client();
    let (id, scene, rev) = create(&c, &base, json!({"task": "block", "method": "mdpe", "seed": 2}));

    let quick = c
        .get(format!("{base}/sessions/{id}/changes?since={rev}&timeout_ms=100"))
        .send()
        .unwrap();
    assert_eq!(quick.status(), StatusCode::NO_CONTENT);

    let url = format!("{base}/sessions/{id}/changes?since={rev}");
    let waiter = std::thread::spawn(move || {
        let start = Instant::now();
        let resp = client().get(url).send().unwrap();
        (resp.status(), resp.json::<Value>().unwrap(), start.elapsed())
    });
    std::thread::sleep(Duration::from_millis(300));
    assert!(!waiter.is_finished(), "long-poll returned before any change");

    let obj = &scene.objects[0];
    let target = [(0.5, 0.5), (0.3, 0.7), (0.7, 0.3), (0.12, 0.9)]
        .into_iter()
        .map(|(x, y)| Point::new(x, y))
        .find(|p| scene.apply(&vpi_core::scene::Move::new(obj.id, *p)).is_ok())
        .unwrap();
    assert_eq!(post_move(&c, &base, &id, obj.id, target).0, StatusCode::OK);
    let (status, state, waited) = waiter.join().unwrap();
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["revision"], rev + 1);
    assert!(waited >= Duration::from_millis(250));

    let stale = c.get(format!("{base}/sessions/{id}/changes?since=0")).send().unwrap();
    assert_eq!(stale.status(), StatusCode::OK, "an older revision answers at once");
}

#[test]
fn static_assets_are_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<!doctype html><title>vpi</title>").unwrap();
    let base = common::spawn_app(Some(dir.path().to_path_buf()));
    let c = client();
    let resp = c.get(format!("{base}/index.html")).send().unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert!(resp.text().unwrap().contains("<title>vpi</title>"));
    let root = c.get(format!("{base}/")).send().unwrap();
    assert_eq!(root.status(), StatusCode::OK);
    let resp = c.post(format!("{base}/sessions")).json(&json!({"task": "block", "method": "mdpe"})).send().unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
}
