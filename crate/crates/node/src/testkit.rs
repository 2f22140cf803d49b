//! A local HTTP server serving canned responses, for transport tests.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{header, StatusCode, Uri};
use axum::response::Response;
use axum::Router;
use tokio::net::TcpListener;
use url::Url;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
    pub location: Option<String>,
}

impl Fixture {
    pub fn text(body: impl Into<Vec<u8>>) -> Self {
        Fixture {
            status: 200,
            content_type: Some("text/plain; charset=utf-8".into()),
            body: body.into(),
            location: None,
        }
    }

    pub fn with_content_type(mut self, ct: &str) -> Self {
        self.content_type = Some(ct.into());
        self
    }

    pub fn bytes(body: impl Into<Vec<u8>>) -> Self {
        Fixture {
            content_type: Some("application/pdf".into()),
            ..Fixture::text(body)
        }
    }

    pub fn status(status: u16) -> Self {
        Fixture {
            status,
            content_type: None,
            body: Vec::new(),
            location: None,
        }
    }

    pub fn redirect(to: impl Into<String>) -> Self {
        Fixture {
            location: Some(to.into()),
            ..Fixture::status(302)
        }
    }
}

type Routes = Arc<Mutex<HashMap<String, Fixture>>>;

pub struct FixtureServer {
    pub addr: SocketAddr,
    routes: Routes,
    hits: Arc<Mutex<Vec<String>>>,
}

impl FixtureServer {
    pub async fn start() -> Self {
        let routes: Routes = Arc::default();
        let hits: Arc<Mutex<Vec<String>>> = Arc::default();
        let (r, h) = (Arc::clone(&routes), Arc::clone(&hits));
        let app = Router::new().fallback(move |uri: Uri| {
            let (r, h) = (Arc::clone(&r), Arc::clone(&h));
            async move {
                let path = uri.path().to_owned();
                h.lock().unwrap().push(path.clone());
                let fixture = r.lock().unwrap().get(&path).cloned();
                respond(fixture)
            }
        });
        let listener = TcpListener::bind("127.0.0.1:0")
            .await
            .expect("bind loopback");
        let addr = listener.local_addr().expect("bound");
        tokio::spawn(async move { axum::serve(listener, app).await });
        FixtureServer { addr, routes, hits }
    }

    pub fn base(&self) -> Url {
        Url::parse(&format!("http://{}", self.addr)).expect("valid")
    }

    pub fn set(&self, path: &str, fixture: Fixture) {
        self.routes.lock().unwrap().insert(path.to_owned(), fixture);
    }

    pub fn hits(&self) -> Vec<String> {
        self.hits.lock().unwrap().clone()
    }
}

fn respond(fixture: Option<Fixture>) -> Response {
    let Some(f) = fixture else {
        return Response::builder()
            .status(StatusCode::NOT_FOUND)
            .body(Body::empty())
            .expect("static response");
    };
    let mut b = Response::builder().status(f.status);
    if let Some(ct) = &f.content_type {
        b = b.header(header::CONTENT_TYPE, ct);
    }
    if let Some(loc) = &f.location {
        b = b.header(header::LOCATION, loc);
    }
    b.body(Body::from(f.body)).expect("valid fixture")
}
