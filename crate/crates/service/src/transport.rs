//! Blocking HTTP transport for remote model adapters.

use std::time::Duration;

use indigo_core::participants::{AdapterConfig, Transport};
use indigo_core::{Error, Result};

/// Posts the prompt as a plain-text body and returns the response body.
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn send(&self, config: &AdapterConfig, body: &str) -> Result<String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_seconds.max(1))))
            .http_status_as_error(true)
            .build()
            .into();
        let mut req = agent.post(&config.endpoint_url).header("Content-Type", "text/plain; charset=utf-8");
        if let Some(auth) = &config.auth_header {
            req = req.header("Authorization", auth);
        }
        if !config.model_name.is_empty() {
            req = req.header("X-Indigo-Model", &config.model_name);
        }
        let mut resp = req.send(body).map_err(|e| Error::Upstream(format!("{}: {}", config.endpoint_url, e)))?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| Error::Upstream(format!("{}: unreadable body: {}", config.endpoint_url, e)))
    }
}
