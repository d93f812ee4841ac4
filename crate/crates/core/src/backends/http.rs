use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::Value;

use super::{BackendEndpoint, BackendError, CancelToken};

fn retryable(status: StatusCode) -> bool {
    status.is_server_error()
        || status == StatusCode::TOO_MANY_REQUESTS
        || status == StatusCode::REQUEST_TIMEOUT
}

fn sleep_cancellable(total: Duration, cancel: Option<&CancelToken>) -> Result<(), BackendError> {
    let step = Duration::from_millis(20);
    let mut left = total;
    while !left.is_zero() {
        if cancel.is_some_and(|c| c.is_cancelled()) {
            return Err(BackendError::Cancelled);
        }
        let d = left.min(step);
        thread::sleep(d);
        left -= d;
    }
    Ok(())
}

/// POSTs `body` and parses the JSON reply.
///
/// Transport errors, 5xx, 408 and 429 are retried up to `endpoint.retries`
/// times, so a backend that always fails is attempted `retries + 1` times
/// before [`BackendError::Unavailable`]. Other non-success statuses fail
/// immediately. A success reply that is not JSON is
/// [`BackendError::Malformed`] and is not retried.
pub fn post_json(
    endpoint: &BackendEndpoint,
    body: &Value,
    cancel: Option<&CancelToken>,
) -> Result<Value, BackendError> {
    endpoint.validate()?;
    let kind = endpoint.kind;
    let client = Client::builder()
        .timeout(endpoint.timeout())
        .build()
        .map_err(|e| BackendError::InvalidEndpoint(e.to_string()))?;
    let token = endpoint.token();

    let mut attempts = 0;
    let mut last_error = String::new();
    while attempts <= endpoint.retries {
        if cancel.is_some_and(|c| c.is_cancelled()) {
            return Err(BackendError::Cancelled);
        }
        if attempts > 0 {
            sleep_cancellable(
                Duration::from_millis(endpoint.backoff_ms * attempts as u64),
                cancel,
            )?;
        }
        attempts += 1;

        let mut req = client.post(&endpoint.url).json(body);
        if let Some(t) = &token {
            req = req.bearer_auth(t);
        }
        match req.send() {
            Ok(resp) => {
                let status = resp.status();
                if status.is_success() {
                    let text = resp.text().map_err(|e| BackendError::Malformed {
                        kind,
                        message: e.to_string(),
                    })?;
                    return serde_json::from_str(&text).map_err(|e| BackendError::Malformed {
                        kind,
                        message: format!("response is not JSON: {e}"),
                    });
                }
                last_error = format!("HTTP {status}");
                if !retryable(status) {
                    break;
                }
                log::warn!("{kind} attempt {attempts} failed: {last_error}");
            }
            Err(e) => {
                last_error = e.to_string();
                log::warn!("{kind} attempt {attempts} failed: {last_error}");
            }
        }
    }
    Err(BackendError::Unavailable {
        kind,
        attempts,
        message: last_error,
    })
}

/// Pulls a required string field out of a reply object.
pub(crate) fn field_str<'a>(
    v: &'a Value,
    key: &str,
    endpoint: &BackendEndpoint,
) -> Result<&'a str, BackendError> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::Malformed {
            kind: endpoint.kind,
            message: format!("missing string field {key:?}"),
        })
}
