mod common;

use common::{http, Running};
use spark_core::dialog::FunctionStore;
use spark_core::{Program, Statement};
use spark_gateway::GatewayConfig;

fn program(name: &str, stmts: Vec<Statement>) -> Program {
    Program::new(name.parse().unwrap(), stmts)
}

#[tokio::test(flavor = "multi_thread")]
async fn fresh_install() {
    let gw = Running::start(GatewayConfig::default()).await;
    let r = http("GET", gw.url("/functions")).await;
    assert_eq!(r.status, 200);
    assert_eq!(r.json(), serde_json::json!({ "functions": [] }));

    let r = http("GET", gw.url("/healthz")).await;
    assert_eq!((r.status, r.json()["status"].as_str()), (200, Some("ok")));

    let r = http("POST", gw.url("/sessions")).await;
    assert_eq!(r.status, 201);
    let id = r.json()["id"].as_str().unwrap().to_owned();
    assert!(gw.gateway.state().sessions.get(&id).is_some());
    gw.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn world_snapshot() {
    let gw = Running::start(GatewayConfig::default()).await;
    let mut r = http("GET", gw.url("/world")).await;
    for _ in 0..20 {
        if r.status == 200 {
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
        r = http("GET", gw.url("/world")).await;
    }
    assert_eq!(r.status, 200, "{}", r.body);
    let t = r.json();
    assert_eq!(t["x"], -2.5);
    assert_eq!(t["y"], -1.0);
    assert_eq!(t["ambient"], 0.7);
    gw.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn delete_functions() {
    let gw = Running::start(GatewayConfig::default()).await;
    {
        let mut store = gw.gateway.state().store();
        let dance = program(
            "MY_DANCE",
            vec![Statement::action("FIRST_DANCE"), Statement::action("SECOND_DANCE")],
        );
        store.register(dance.name.clone(), "my dance", dance).unwrap();
        let party = program(
            "PARTY",
            vec![Statement::call("MY_DANCE"), Statement::action("SPIN_JUMP")],
        );
        store.register(party.name.clone(), "party", party).unwrap();
    }

    let r = http("DELETE", gw.url("/functions/MY_DANCE")).await;
    assert_eq!(r.status, 409);
    assert_eq!(r.json()["error"]["code"], "REFERENCED");
    assert_eq!(r.json()["error"]["by"], serde_json::json!(["PARTY"]));

    let r = http("DELETE", gw.url("/functions/NOPE")).await;
    assert_eq!(r.status, 404);
    assert_eq!(r.json()["error"]["code"], "NOT_FOUND");

    assert_eq!(http("DELETE", gw.url("/functions/PARTY")).await.status, 204);
    assert_eq!(http("DELETE", gw.url("/functions/MY_DANCE")).await.status, 204);
    let r = http("GET", gw.url("/functions")).await;
    assert_eq!(r.json(), serde_json::json!({ "functions": [] }));
    gw.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn listing_carries_spl_lines() {
    let gw = Running::start(GatewayConfig::default()).await;
    {
        let mut store = gw.gateway.state().store();
        let p = program(
            "TURN_AROUND",
            vec![Statement::repeat(6, vec![Statement::action("TURN_LEFT")])],
        );
        store.register(p.name.clone(), "turn around", p).unwrap();
    }
    let r = http("GET", gw.url("/functions")).await;
    let f = &r.json()["functions"][0];
    assert_eq!(f["name"], "TURN_AROUND");
    assert_eq!(f["instruction"], "turn around");
    assert_eq!(
        f["spl"],
        serde_json::json!(["REPEAT 6 TIMES", "    TURN_LEFT", "END REPEAT"])
    );
    assert!(f["created_at"].is_string());
    gw.stop().await;
}
