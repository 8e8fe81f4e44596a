use std::io::Read;
use std::path::Path;

use semicross::json::DecodeError;
use semicross::Error;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

/// What `main` prints and returns.
pub struct Outcome {
    pub stdout: String,
    pub prose: String,
    pub code: u8,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: unreadable file, malformed JSON, violated invariant.
    Input { pointer: String, message: String },
    /// A search or check that did not succeed.
    Failure(String),
}

impl From<DecodeError> for CliError {
    fn from(e: DecodeError) -> Self {
        CliError::Input {
            pointer: e.pointer,
            message: e.message,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SearchExhausted { .. } | Error::DegenerateEigenproblem(_) => {
                CliError::Failure(e.to_string())
            }
            other => CliError::Input {
                pointer: String::new(),
                message: other.to_string(),
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Raw inputs in order, hashed together for the report.
#[derive(Default)]
pub struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    pub fn load(&mut self, path: &Path) -> CliResult<Value> {
        let bytes = if path.as_os_str() == "-" {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| CliError::Input {
                    pointer: String::new(),
                    message: format!("cannot read standard input: {e}"),
                })?;
            buf
        } else {
            std::fs::read(path).map_err(|e| CliError::Input {
                pointer: String::new(),
                message: format!("cannot read {}: {e}", path.display()),
            })?
        };
        self.hasher.update((bytes.len() as u64).to_le_bytes());
        self.hasher.update(&bytes);
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Input {
            pointer: String::new(),
            message: format!("{} is not UTF-8", path.display()),
        })?;
        serde_json::from_str(text).map_err(|e| CliError::Input {
            pointer: String::new(),
            message: format!("invalid JSON in {}: {e}", path.display()),
        })
    }

    pub fn digest(self) -> String {
        format!("sha256:{}", hex::encode(self.hasher.finalize()))
    }
}

/// Status of a command: plain answer, or a check that passed or failed.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Pass,
    Fail,
}

impl Status {
    pub fn from_check(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Pass => "pass",
            Status::Fail => "fail",
        }
    }
}

pub struct Success {
    pub result: Value,
    pub tolerances: Vec<(&'static str, f64)>,
    pub status: Status,
    pub prose: String,
}

impl Success {
    pub fn ok(result: Value, prose: impl Into<String>) -> Self {
        Self {
            result,
            tolerances: Vec::new(),
            status: Status::Ok,
            prose: prose.into(),
        }
    }

    pub fn tol(mut self, name: &'static str, value: f64) -> Self {
        self.tolerances.push((name, value));
        self
    }

    pub fn status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

fn envelope(command: &str, digest: String, seed: u64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("input_digest".into(), json!(digest));
    m.insert("seed".into(), json!(seed));
    m
}

fn render(v: Map<String, Value>) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(v)).expect("finite values");
    s.push('\n');
    s
}

pub fn finish(command: &str, digest: String, seed: u64, outcome: CliResult<Success>) -> Outcome {
    let mut m = envelope(command, digest, seed);
    match outcome {
        Ok(s) => {
            let tolerances: Map<String, Value> = s
                .tolerances
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            m.insert("tolerances".into(), Value::Object(tolerances));
            m.insert("result".into(), s.result);
            m.insert("status".into(), json!(s.status.as_str()));
            let code = if s.status == Status::Fail {
                EXIT_FAIL
            } else {
                EXIT_OK
            };
            Outcome {
                stdout: render(m),
                prose: s.prose,
                code,
            }
        }
        Err(CliError::Input { pointer, message }) => {
            let shown = if pointer.is_empty() {
                "/".to_string()
            } else {
                pointer.clone()
            };
            m.insert("status".into(), json!("error"));
            m.insert(
                "error".into(),
                json!({"kind": "input", "pointer": pointer, "message": message}),
            );
            Outcome {
                stdout: render(m),
                prose: format!("input error at {shown}: {message}"),
                code: EXIT_INPUT,
            }
        }
        Err(CliError::Failure(message)) => {
            m.insert("status".into(), json!("fail"));
            m.insert(
                "error".into(),
                json!({"kind": "failure", "message": message}),
            );
            Outcome {
                stdout: render(m),
                prose: format!("failed: {message}"),
                code: EXIT_FAIL,
            }
        }
    }
}
