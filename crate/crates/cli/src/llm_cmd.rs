use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::time::Duration;

use anyhow::{bail, Context, Result};

use lof_core::dataset::{load_manifest, DatasetManifest};
use lof_core::llm::mock::load_script;
use lof_core::llm::retrieve::load_chunk_store;
use lof_core::llm::{
    default_chunk_store, retrieve_chunks, run_batch, BatchConfig, BatchItem, EndpointConfig,
    MockServer, PromptOptions, PromptTemplate,
};
use lof_core::LofError;

use crate::args::{LlmRunArgs, MockServeArgs};
use crate::run_config::{write_echo, OutputKind};

pub fn run(a: LlmRunArgs) -> Result<()> {
    let template = PromptTemplate::builtin(a.template);
    let chunks = match (&a.chunks, template.requires_chunks()) {
        (None, true) => bail!(LofError::Config(format!(
            "template `{}` needs --chunks (a JSONL store or `builtin`)",
            a.template
        ))),
        (Some(_), false) => bail!(LofError::Config(format!(
            "--chunks given but template `{}` has no guideline slot",
            a.template
        ))),
        (None, false) => Vec::new(),
        (Some(src), true) => {
            let store = if src == "builtin" {
                default_chunk_store()
            } else {
                load_chunk_store(src.as_ref())?
            };
            if a.rag_k == 0 {
                bail!(LofError::Config("--rag-k must be at least 1".into()));
            }
            retrieve_chunks(&a.rag_query, &store, a.rag_k.min(template.rag_slots))
        }
    };
    let manifest = load_manifest(&a.manifest)?;
    let items: Vec<BatchItem> = manifest
        .records
        .iter()
        .map(|r| BatchItem {
            id: r.id.clone(),
            image: DatasetManifest::resolve(&a.manifest, &r.path),
        })
        .collect();
    let cfg = BatchConfig {
        template,
        chunks,
        prompt: PromptOptions {
            model_id: a.model.clone(),
            temperature: a.temperature,
            max_tokens: a.max_tokens,
            timeout: Duration::from_secs(a.timeout_secs),
            ..PromptOptions::default()
        },
        endpoint: EndpointConfig {
            max_attempts: a.max_attempts,
            initial_backoff: Duration::from_millis(a.backoff_ms),
            ..EndpointConfig::from_env(a.endpoint.clone())
        },
        concurrency: a.concurrency,
        journal: Some(a.journal.clone()),
    };
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    let results = runtime.block_on(run_batch(&items, &cfg))?;

    if let Some(out) = &a.out {
        let mut text = String::new();
        for r in &results {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    }
    write_echo("llm run", &a, &a.journal, OutputKind::File)?;
    let classified = results.iter().filter(|r| r.assessment.rank().is_some()).count();
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{classified}/{} classified, {failed} request failure(s) -> {}",
        results.len(),
        a.journal.display()
    );
    Ok(())
}

pub fn mock_serve(a: MockServeArgs) -> Result<()> {
    let script = load_script(&a.script)?;
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| LofError::Config(format!("bad listen address: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    runtime.block_on(async {
        let n = script.len();
        let server = MockServer::start(addr, script).await?;
        println!("listening on {} ({n} scripted response(s))", server.base_url());
        std::io::stdout().flush()?;
        tokio::signal::ctrl_c().await.context("waiting for ctrl-c")?;
        log::info!("served {} request(s)", server.served());
        server.shutdown().await;
        Ok(())
    })
}
