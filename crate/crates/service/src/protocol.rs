//! Wire messages. One JSON object per line in each direction; every
//! request carries a client-chosen `request_id` that its response echoes.

use ghostkey_core::generator::Action;
use serde::{Deserialize, Serialize};

/// `request_id` used when a request is too malformed to carry one.
pub const UNKNOWN_REQUEST_ID: &str = "?";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Register {
        user: String,
        password: String,
    },
    SessionStart {
        user: String,
    },
    SessionKey {
        session: String,
        #[serde(rename = "char")]
        key: String,
    },
    SessionFinalize {
        session: String,
    },
    Login {
        user: String,
        password: String,
        #[serde(default)]
        session: Option<String>,
        /// Ghost string typed for this login, for clients that ran the
        /// session elsewhere. A finished session on the connection wins.
        #[serde(default)]
        ghost: Option<String>,
    },
    AdminAlarms {},
    AdminRebuild {
        expected_n: u64,
        target_fpr: f64,
    },
    /// The keyboard layout document the server generates against.
    Layout {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmRecord {
    pub timestamp: u64,
    pub user: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub request_id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    /// `await_real`, `require_ghost` or `done`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ghost_char: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<AlarmRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<String>,
}

impl Response {
    pub fn ok(request_id: &str) -> Self {
        Self { request_id: request_id.to_string(), ok: true, ..Default::default() }
    }

    /// The one failure shape for logins, whatever the cause.
    pub fn login_failed(request_id: &str) -> Self {
        Self { request_id: request_id.to_string(), ok: false, ..Default::default() }
    }

    pub fn error(request_id: &str, code: &str, message: impl Into<String>) -> Self {
        Self {
            request_id: request_id.to_string(),
            ok: false,
            error: Some(code.to_string()),
            message: Some(message.into()),
            ..Default::default()
        }
    }

    pub fn with_action(mut self, action: Action) -> Self {
        let (name, ghost) = match action {
            Action::AwaitReal => ("await_real", None),
            Action::RequireGhost(g) => ("require_ghost", Some(g.to_string())),
            Action::Done => ("done", None),
        };
        self.action = Some(name.to_string());
        self.ghost_char = ghost;
        self
    }

    /// The action carried by this response, if any.
    pub fn parsed_action(&self) -> Option<Action> {
        match self.action.as_deref()? {
            "await_real" => Some(Action::AwaitReal),
            "require_ghost" => self.ghost_char.as_deref()?.chars().next().map(Action::RequireGhost),
            "done" => Some(Action::Done),
            _ => None,
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("response serializes");
        s.push('\n');
        s
    }
}

/// Splits a raw line into its request id and parsed request.
pub fn parse_request(line: &[u8]) -> (String, Result<Request, String>) {
    let value: serde_json::Value = match serde_json::from_slice(line) {
        Ok(v) => v,
        Err(e) => return (UNKNOWN_REQUEST_ID.to_string(), Err(format!("malformed JSON: {e}"))),
    };
    let Some(id) = value.get("request_id").and_then(|v| v.as_str()) else {
        return (UNKNOWN_REQUEST_ID.to_string(), Err("missing string request_id".to_string()));
    };
    let id = id.to_string();
    let request = serde_json::from_value(value).map_err(|e| format!("bad request: {e}"));
    (id, request)
}
