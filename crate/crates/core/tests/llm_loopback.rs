use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use lof_core::llm::batch::read_journal;
use lof_core::llm::encode::encode_image;
use lof_core::llm::{
    build_prompt, request_hash, run_batch, submit, BatchConfig, BatchItem, EndpointConfig,
    MockServer, PromptOptions, PromptTemplate, ScriptEntry, TemplateName,
};
use lof_core::{LofError, LofRank};

fn local() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

fn fast(base: String) -> EndpointConfig {
    EndpointConfig {
        initial_backoff: Duration::from_millis(5),
        ..EndpointConfig::new(base)
    }
}

fn write_images(dir: &Path, n: usize) -> Vec<BatchItem> {
    (0..n)
        .map(|i| {
            let path = dir.join(format!("img{i}.png"));
            image::RgbImage::from_pixel(2, 2, image::Rgb([i as u8, 7, 9]))
                .save(&path)
                .unwrap();
            BatchItem {
                id: format!("img{i:02}"),
                image: path,
            }
        })
        .collect()
}

fn key_for(item: &BatchItem, template: &PromptTemplate) -> String {
    let img = encode_image(&item.image).unwrap();
    let req = build_prompt(template, &img, &[], &PromptOptions::default()).unwrap();
    request_hash(&req.body())
}

fn config(base: String, journal: Option<PathBuf>, concurrency: usize) -> BatchConfig {
    BatchConfig {
        template: PromptTemplate::builtin(TemplateName::Expert),
        chunks: vec![],
        prompt: PromptOptions::default(),
        endpoint: fast(base),
        concurrency,
        journal,
    }
}

fn one_request() -> lof_core::llm::LlmRequest {
    let dir = tempfile::tempdir().unwrap();
    let item = &write_images(dir.path(), 1)[0];
    let img = encode_image(&item.image).unwrap();
    build_prompt(
        &PromptTemplate::builtin(TemplateName::Expert),
        &img,
        &[],
        &PromptOptions::default(),
    )
    .unwrap()
}

#[tokio::test]
async fn retries_through_rate_limits() {
    let script = vec![
        ScriptEntry::status(429),
        ScriptEntry::status(429),
        ScriptEntry::completion("**LoF Rating:** 2 - Light fouling"),
    ];
    let server = MockServer::start(local(), script).await.unwrap();
    let out = submit(&reqwest::Client::new(), &one_request(), &fast(server.base_url()))
        .await
        .unwrap();
    assert_eq!(out.attempts, 3);
    assert_eq!(
        out.backoff_delays,
        vec![Duration::from_millis(5), Duration::from_millis(10)]
    );
    assert_eq!(server.served(), 3);
    server.shutdown().await;
}

#[tokio::test]
async fn persistent_server_errors_exhaust_attempts() {
    let script = vec![ScriptEntry::status(500); 4];
    let server = MockServer::start(local(), script).await.unwrap();
    let err = submit(&reqwest::Client::new(), &one_request(), &fast(server.base_url()))
        .await
        .unwrap_err();
    assert!(matches!(err, LofError::RequestFailed { attempts: 3, .. }));
    assert_eq!(server.served(), 3);
    server.shutdown().await;
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let server = MockServer::start(local(), vec![ScriptEntry::status(400)]).await.unwrap();
    let err = submit(&reqwest::Client::new(), &one_request(), &fast(server.base_url()))
        .await
        .unwrap_err();
    assert!(matches!(err, LofError::RequestFailed { attempts: 1, .. }));
    assert_eq!(server.served(), 1);
}

#[tokio::test]
async fn batch_results_follow_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let items = write_images(dir.path(), 24);
    let template = PromptTemplate::builtin(TemplateName::Expert);
    let script = items
        .iter()
        .enumerate()
        .map(|(i, it)| {
            let mut e = ScriptEntry::completion(format!("**LoF Rating:** {}", i % 6));
            e.delay_ms = Some(((24 - i) * 2) as u64);
            e.keyed(key_for(it, &template))
        })
        .collect();
    let server = MockServer::start(local(), script).await.unwrap();
    let results = run_batch(&items, &config(server.base_url(), None, 8)).await.unwrap();
    assert_eq!(results.len(), 24);
    for (i, (r, it)) in results.iter().zip(&items).enumerate() {
        assert_eq!(r.id, it.id);
        assert_eq!(r.assessment.rank(), Some(LofRank::new((i % 6) as u8).unwrap()));
    }
}

#[tokio::test]
async fn one_bad_image_does_not_sink_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    let mut items = write_images(dir.path(), 4);
    items[2].image = dir.path().join("missing.png");
    let script = vec![ScriptEntry::completion("**LoF Rating:** 1"); 3];
    let server = MockServer::start(local(), script).await.unwrap();
    let results = run_batch(&items, &config(server.base_url(), None, 1)).await.unwrap();
    assert!(results[2].error.is_some());
    assert_eq!(results[2].assessment.rank(), None);
    for i in [0, 1, 3] {
        assert_eq!(results[i].assessment.rank(), Some(LofRank::new(1).unwrap()));
    }
}

#[tokio::test]
async fn zero_concurrency_is_a_config_error() {
    let cfg = config("http://127.0.0.1:9".into(), None, 0);
    assert!(matches!(run_batch(&[], &cfg).await, Err(LofError::Config(_))));
    let mut cfg = config("http://127.0.0.1:9".into(), None, 1);
    cfg.template = PromptTemplate::builtin(TemplateName::ExpertRag);
    assert!(matches!(run_batch(&[], &cfg).await, Err(LofError::Config(_))));
}

#[tokio::test]
async fn journal_resumes_without_resubmitting() {
    let dir = tempfile::tempdir().unwrap();
    let items = write_images(dir.path(), 10);
    let template = PromptTemplate::builtin(TemplateName::Expert);
    let journal = dir.path().join("journal.jsonl");
    let answer = |it: &BatchItem| ScriptEntry::completion("**LoF Rating:** 4").keyed(key_for(it, &template));

    // First run only has answers for the first six images.
    let server = MockServer::start(local(), items[..6].iter().map(answer).collect()).await.unwrap();
    let first = run_batch(&items, &config(server.base_url(), Some(journal.clone()), 3)).await.unwrap();
    assert_eq!(first.iter().filter(|r| r.error.is_none()).count(), 6);
    assert_eq!(read_journal(&journal).unwrap().len(), 6);
    server.shutdown().await;

    let server = MockServer::start(local(), items[6..].iter().map(answer).collect()).await.unwrap();
    let second = run_batch(&items, &config(server.base_url(), Some(journal.clone()), 3)).await.unwrap();
    assert_eq!(server.served(), 4);
    assert!(second.iter().all(|r| r.error.is_none()));
    assert_eq!(read_journal(&journal).unwrap().len(), 10);

    // A third run touches nothing.
    let third = run_batch(&items, &config(server.base_url(), Some(journal.clone()), 3)).await.unwrap();
    assert_eq!(server.served(), 4);
    assert_eq!(third, second);
}
