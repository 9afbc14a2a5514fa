#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mlion_core::clock::ManualClock;
use mlion_core::config::ApiConfig;
use mlion_core::market_data::Resolution;
use mlion_core::service::{Engine, FeedKind};

pub const NOW: i64 = 1_714_348_800;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn config(dir: &Path) -> ApiConfig {
    ApiConfig { data_dir: dir.to_path_buf(), ..ApiConfig::default() }
}

/// Engine at `NOW` with the fixture candles, news and feeds loaded.
pub fn loaded(config: ApiConfig) -> Engine {
    let fx = fixtures();
    let engine = Engine::open(config, Arc::new(ManualClock::new(NOW))).unwrap();
    for (sym, res, file) in [
        ("BTC", Resolution::OneDay, "BTC_1d.csv"),
        ("BTC", Resolution::OneHour, "BTC_1h.csv"),
        ("ETH", Resolution::OneDay, "ETH_1d.csv"),
        ("ETH", Resolution::OneHour, "ETH_1h.csv"),
    ] {
        engine.ingest_candles(&fx.join("market").join(file), None, sym, res, false).unwrap();
    }
    engine.ingest_news(&fx.join("news/news.jsonl")).unwrap();
    engine.ingest_news(&fx.join("news/news_feed.xml")).unwrap();
    engine.ingest_feed(FeedKind::Flows, &fx.join("feeds/flows.jsonl")).unwrap();
    engine.ingest_feed(FeedKind::Social, &fx.join("feeds/social.jsonl")).unwrap();
    engine
}

/// A router served on an ephemeral port from a background runtime; stops
/// when dropped.
pub struct Server {
    pub base: String,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Server {
    pub fn start(router: axum::Router) -> Server {
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, router)
                    .with_graceful_shutdown(async {
                        let _ = stopped.await;
                    })
                    .await
                    .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        Server { base: format!("http://{addr}"), stop: Some(stop), thread: Some(thread) }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder().no_proxy().build().unwrap()
}
