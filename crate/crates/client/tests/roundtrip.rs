use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kitrobot_client::{Client, ClientError, NewSession, SessionStatus};
use kitrobot_core::vm::{EventKind, Outcome, TraceValue};
use kitrobot_service::Config;
use tokio::net::TcpListener;

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

async fn start() -> Client {
    let mut config = Config::new(assets().join("carrier.xml"));
    config.world = Some(assets().join("demo-world.xml"));
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { kitrobot_service::serve(listener, &config).await });
    Client::new(&format!("http://{addr}/"))
}

fn programs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, p)| (a.to_string(), p.to_string())).collect()
}

#[tokio::test]
async fn catalog_and_compile() {
    let client = start().await;
    let catalog = client.catalog().await.unwrap();
    assert_eq!(catalog["constructors"].as_array().unwrap().len(), 12);

    let krt = r#"<krt version="1"><program><start id="s"/><wait id="w" ticks="5"/><stop id="e"/></program></krt>"#;
    assert_eq!(client.compile(krt).await.unwrap(), "WAIT(5);");

    let bad = r#"<krt version="1"><program><start id="s"/><action id="a" object="wheel" method="Advance"><arg int="500"/></action><stop id="e"/></program></krt>"#;
    match client.compile(bad).await {
        Err(ClientError::Invalid { diagnostics, .. }) => assert_eq!(diagnostics.len(), 1),
        other => panic!("{other:?}"),
    }
    let err = client.compile("not xml").await.unwrap_err();
    assert_eq!(err.status().map(|s| s.as_u16()), Some(400));
}

#[tokio::test]
async fn sessions_step_to_the_end() {
    let client = start().await;
    let req = NewSession {
        world: None,
        programs: programs(&[("c1", "WAIT(3);")]),
        max_ticks: Some(100),
    };
    let created = client.create_session(&req).await.unwrap();
    assert_eq!(created.status, SessionStatus::Ready);
    let stepped = client.step(&created.id, 2).await.unwrap();
    assert_eq!(stepped.snapshot.clock, 2);
    assert_eq!(stepped.snapshot.status, SessionStatus::Running);
    let stepped = client.step(&created.id, 10).await.unwrap();
    assert_eq!(stepped.snapshot.status, SessionStatus::Done);
    let end = stepped.records.last().unwrap();
    assert_eq!(end.kind, EventKind::ProgramEnd);
    assert_eq!(end.value, Some(TraceValue::Outcome(Outcome::Completed)));
    let state = client.state(&created.id).await.unwrap();
    assert_eq!(state.clock, stepped.snapshot.clock);
    client.delete(&created.id).await.unwrap();
    let err = client.state(&created.id).await.unwrap_err();
    assert_eq!(err.status().map(|s| s.as_u16()), Some(404));
}

#[tokio::test]
async fn run_session_collects_every_record() {
    let client = start().await;
    let req = NewSession {
        world: None,
        programs: programs(&[("c1", ""), ("c2", "WAIT(2);")]),
        max_ticks: Some(50),
    };
    let trace = client.run_session(&req, 1).await.unwrap();
    let ends: Vec<_> = trace
        .iter()
        .filter(|r| r.kind == EventKind::ProgramEnd)
        .map(|r| (r.agent.as_str(), r.tick))
        .collect();
    assert_eq!(ends, [("c1", 0), ("c2", 2)]);
}

#[tokio::test]
async fn invalid_programs_carry_diagnostics() {
    let client = start().await;
    let req = NewSession {
        world: None,
        programs: programs(&[("c2", "wheel.Advance(101);")]),
        max_ticks: None,
    };
    match client.create_session(&req).await {
        Err(ClientError::Invalid { agent, diagnostics, .. }) => {
            assert_eq!(agent.as_deref(), Some("c2"));
            assert_eq!(diagnostics.len(), 1);
        }
        other => panic!("{other:?}"),
    }
}
