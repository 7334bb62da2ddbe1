use std::net::SocketAddr;

use clap::Parser;
use hybridpower_service::{router, ServiceConfig};

/// Serves the hybridpower JSON API.
#[derive(Debug, Parser)]
#[command(name = "hybridpower-serve", version)]
struct Args {
    /// Address to bind.
    #[arg(long, env = "HYBRIDPOWER_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Origin allowed to call the API from a browser; any origin when unset.
    #[arg(long, env = "HYBRIDPOWER_CORS_ORIGIN")]
    cors_origin: Option<String>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let app = router(&ServiceConfig {
        cors_origin: args.cors_origin,
    });
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
