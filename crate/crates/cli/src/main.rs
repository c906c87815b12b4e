use std::sync::Arc;

use anyhow::Result;
use clap::Parser;
use inkgram::model::Model;
use inkgram::session::SessionManager;
use inkgram_cli::commands::{self, Cli, Command, ServeArgs};

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let out = match &cli.command {
        Command::Train(a) => commands::run_train(a)?,
        Command::SynthCorpus(a) => commands::run_synth(a)?,
        Command::Recognize(a) => commands::run_recognize(a)?,
        Command::Evaluate(a) => commands::run_evaluate(a)?,
        Command::Serve(a) => return serve(a),
    };
    print!("{out}");
    Ok(())
}

#[tokio::main]
async fn serve(a: &ServeArgs) -> Result<()> {
    let mut manager = SessionManager::new();
    for arg in &a.model {
        let (name, dir) = commands::parse_model_arg(arg);
        log::info!("loading model {name} from {}", dir.display());
        manager.add_model(name, Model::load(&dir)?);
    }
    let app = inkgram_cli::server::router(Arc::new(manager), a.static_dir.clone());
    let listener = tokio::net::TcpListener::bind(&a.addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
