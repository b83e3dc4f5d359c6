#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use spark_gateway::{Gateway, GatewayConfig, Outbound};
use tokio::net::TcpStream;
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

pub struct Running {
    pub addr: SocketAddr,
    pub gateway: Gateway,
    stop: Option<oneshot::Sender<()>>,
    task: Option<tokio::task::JoinHandle<()>>,
}

impl Running {
    pub async fn start(config: GatewayConfig) -> Self {
        let gateway = tokio::task::spawn_blocking(move || Gateway::new(&config).unwrap())
            .await
            .unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (stop, stopped) = oneshot::channel::<()>();
        let g = gateway.clone();
        let task = tokio::spawn(async move {
            g.serve(listener, async {
                let _ = stopped.await;
            })
            .await
            .unwrap();
        });
        Running {
            addr,
            gateway,
            stop: Some(stop),
            task: Some(task),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}/v1{path}", self.addr)
    }

    pub async fn stop(mut self) {
        let _ = self.stop.take().unwrap().send(());
        let _ = self.task.take().unwrap().await;
    }
}

pub struct Http {
    pub status: u16,
    pub body: String,
}

impl Http {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).unwrap()
    }
}

pub async fn http(method: &'static str, url: String) -> Http {
    tokio::task::spawn_blocking(move || {
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        let mut resp = match method {
            "GET" => agent.get(&url).call(),
            "DELETE" => agent.delete(&url).call(),
            "POST" => agent.post(&url).send_empty(),
            other => panic!("unsupported method {other}"),
        }
        .unwrap();
        Http {
            status: resp.status().as_u16(),
            body: resp.body_mut().read_to_string().unwrap_or_default(),
        }
    })
    .await
    .unwrap()
}

pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    pub id: String,
}

impl Client {
    pub async fn connect(running: &Running, id: Option<&str>) -> Self {
        let url = match id {
            Some(id) => format!("ws://{}/v1/session?id={id}", running.addr),
            None => format!("ws://{}/v1/session", running.addr),
        };
        let (ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
        let mut client = Client { ws, id: String::new() };
        match client.next().await {
            Outbound::Session { id } => client.id = id,
            other => panic!("expected session frame, got {other:?}"),
        }
        client
    }

    pub async fn send_raw(&mut self, msg: Message) {
        self.ws.send(msg).await.unwrap();
    }

    pub async fn say(&mut self, text: &str) {
        let frame = serde_json::json!({ "type": "utterance", "text": text }).to_string();
        self.send_raw(Message::Text(frame.into())).await;
    }

    pub async fn next(&mut self) -> Outbound {
        loop {
            let msg = tokio::time::timeout(Duration::from_secs(10), self.ws.next())
                .await
                .expect("frame within 10 s")
                .expect("stream open")
                .unwrap();
            if let Message::Text(t) = msg {
                return serde_json::from_str(&t).unwrap();
            }
        }
    }

    /// Next frame that is not a world snapshot or execution event.
    pub async fn next_dialog(&mut self) -> Outbound {
        loop {
            match self.next().await {
                Outbound::World { .. } | Outbound::ExecEvent { .. } => continue,
                other => return other,
            }
        }
    }

    pub async fn next_reply(&mut self) -> String {
        loop {
            if let Outbound::Reply { text } = self.next_dialog().await {
                return text;
            }
        }
    }
}
