//! Sessions against a chat-completions endpoint. One test per binary: it
//! sets `VPI_API_BASE` for the whole process.

mod common;

use std::sync::atomic::Ordering;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};
use vpi_core::scene::{Move, Point, Scene};

fn demo_session(c: &Client, base: &str, task: &str, method: &str) -> String {
    let v: Value = c
        .post(format!("{base}/sessions"))
        .json(&json!({"task": task, "method": method, "backend": "http", "seed": 5}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    let id = v["id"].as_str().unwrap().to_string();
    let mut scene: Scene = serde_json::from_value(v["scene"].clone()).unwrap();
    let mut moved = 0;
    'outer: for obj in scene.objects.clone() {
        for (x, y) in [(0.1, 0.1), (0.9, 0.9), (0.5, 0.5), (0.1, 0.9), (0.9, 0.1)] {
            let mv = Move::new(obj.id, Point::new(x, y));
            if let Ok(next) = scene.apply(&mv) {
                let resp = c.post(format!("{base}/sessions/{id}/moves")).json(&mv).send().unwrap();
                assert_eq!(resp.status(), StatusCode::OK);
                scene = next;
                moved += 1;
                if moved == 2 {
                    break 'outer;
                }
                break;
            }
        }
    }
    id
}

#[test]
fn http_backend_sessions() {
    let mock = common::spawn_mock();
    let app = common::spawn_app(None);
    let c = Client::builder().timeout(Duration::from_secs(30)).build().unwrap();

    // SAFETY: the only test in this binary, set before any backend reads it
    unsafe { std::env::set_var("VPI_API_BASE", format!("{}/ok", mock.base)) };
    let id = demo_session(&c, &app, "block", "covr");
    let resp = c.post(format!("{app}/sessions/{id}/infer")).send().unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let result: Value = resp.json().unwrap();
    assert_eq!(result["preference"], "group_by_color");
    assert_eq!(result["transcript"].as_array().unwrap().len(), 3, "2 VRD calls + 1 PRD call");
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);

    let id = demo_session(&c, &app, "polygon", "l2r");
    let result: Value = c.post(format!("{app}/sessions/{id}/infer")).send().unwrap().json().unwrap();
    assert_eq!(result["preference"], "group_by_color");

    unsafe { std::env::set_var("VPI_API_BASE", format!("{}/fail", mock.base)) };
    let id = demo_session(&c, &app, "block", "naive");
    let resp = c.post(format!("{app}/sessions/{id}/infer")).send().unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_GATEWAY);
    let v: Value = resp.json().unwrap();
    assert_eq!(v["error"], "BackendFailure");
    assert!(v["message"].as_str().unwrap().contains("500"), "{v}");

    unsafe { std::env::set_var("VPI_API_BASE", format!("{}/slow", mock.base)) };
    let id = demo_session(&c, &app, "block", "naive");
    let url = format!("{app}/sessions/{id}/infer");
    let first = std::thread::spawn({
        let url = url.clone();
        move || Client::new().post(url).send().unwrap().status()
    });
    std::thread::sleep(Duration::from_millis(150));
    let second = c.post(&url).send().unwrap();
    assert_eq!(second.status(), StatusCode::CONFLICT);
    assert_eq!(second.json::<Value>().unwrap()["error"], "InferenceInProgress");
    assert_eq!(first.join().unwrap(), StatusCode::OK);
    let again = c.post(&url).send().unwrap();
    assert_eq!(again.status(), StatusCode::OK, "the in-flight flag clears after completion");
}
