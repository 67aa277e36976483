use std::sync::Mutex;
use std::time::Duration;

use lof_core::llm::encode::encode_image_bytes;
use lof_core::llm::{
    build_prompt, submit, EndpointConfig, MockServer, PromptOptions, PromptTemplate, ScriptEntry,
    TemplateName,
};

struct Capture(Mutex<Vec<String>>);

impl log::Log for Capture {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }
    fn log(&self, record: &log::Record) {
        self.0.lock().unwrap().push(format!("{}", record.args()));
    }
    fn flush(&self) {}
}

static LOGS: Capture = Capture(Mutex::new(Vec::new()));

#[tokio::test]
async fn credential_never_reaches_logs() {
    log::set_logger(&LOGS).unwrap();
    log::set_max_level(log::LevelFilter::Trace);
    let secret = "sk-test-5f2c9a0e1d";
    let script = vec![
        ScriptEntry::status(503),
        ScriptEntry::completion("**LoF Rating:** 0"),
    ];
    let server = MockServer::start("127.0.0.1:0".parse().unwrap(), script).await.unwrap();
    let endpoint = EndpointConfig {
        api_key: Some(secret.into()),
        initial_backoff: Duration::from_millis(1),
        ..EndpointConfig::new(server.base_url())
    };
    assert!(!format!("{endpoint:?}").contains(secret));
    let mut png = Vec::new();
    image::RgbImage::new(1, 1)
        .write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
        .unwrap();
    let req = build_prompt(
        &PromptTemplate::builtin(TemplateName::Baseline),
        &encode_image_bytes(&png).unwrap(),
        &[],
        &PromptOptions::default(),
    )
    .unwrap();
    submit(&reqwest::Client::new(), &req, &endpoint).await.unwrap();
    let logs = LOGS.0.lock().unwrap();
    assert!(!logs.is_empty());
    assert!(logs.iter().any(|l| l.contains("Bearer ***")));
    assert!(logs.iter().all(|l| !l.contains(secret)));
}
