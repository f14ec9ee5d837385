//! Host side of the external policy bridge.
//!
//! Frames are newline-delimited JSON objects tagged by `type`. The host sends
//! `handshake`, then one `step` per manager turn, then `shutdown`; the client
//! echoes the handshake and answers each step with one `reply`.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::actions::{ManagerAction, ManagerObservation};
use crate::engine::Decision;

use super::ManagerPolicy;

pub const BRIDGE_PROTOCOL: &str = "magym-bridge/1";
pub const DEFAULT_BRIDGE_TIMEOUT: Duration = Duration::from_secs(5);
const RAW_EXCERPT: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HostFrame {
    Handshake {
        protocol_version: String,
        scenario_id: String,
        role: String,
    },
    Step {
        seq: u64,
        timestep: u64,
        observation: Box<ManagerObservation>,
    },
    Shutdown {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientFrame {
    Handshake {
        protocol_version: String,
    },
    Reply {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
        action: Value,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        rationale: String,
    },
    Shutdown {
        #[serde(default)]
        reason: String,
    },
}

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("failed to start bridge command `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: io::Error,
    },
    #[error("bridge i/o: {0}")]
    Io(#[from] io::Error),
    #[error("bridge handshake failed: {0}")]
    Handshake(String),
}

pub struct BridgeHost {
    writer: Box<dyn Write + Send>,
    lines: Receiver<String>,
    child: Option<Child>,
    timeout: Duration,
    seq: u64,
    closed: bool,
}

fn pump(reader: impl Read + Send + 'static) -> Receiver<String> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    rx
}

fn excerpt(raw: &str) -> String {
    raw.chars().take(RAW_EXCERPT).collect()
}

fn failed(error: String, raw: &str) -> ManagerAction {
    ManagerAction::FailedAction {
        metadata: BTreeMap::from([
            ("error".to_string(), error),
            ("raw".to_string(), excerpt(raw)),
            ("source".to_string(), "bridge".to_string()),
        ]),
    }
}

impl BridgeHost {
    /// Launch `command` through the shell and perform the handshake.
    pub fn spawn(command: &str, scenario_id: &str, timeout: Duration) -> Result<Self, BridgeError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| BridgeError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut host = Self::from_streams(Box::new(stdin), stdout, timeout);
        host.child = Some(child);
        host.handshake(scenario_id)?;
        Ok(host)
    }

    /// Wrap an existing transport. No handshake is performed.
    pub fn from_streams(writer: Box<dyn Write + Send>, reader: impl Read + Send + 'static, timeout: Duration) -> Self {
        Self {
            writer,
            lines: pump(reader),
            child: None,
            timeout,
            seq: 0,
            closed: false,
        }
    }

    /// Run `client` on a thread behind in-process pipes and perform the
    /// handshake. `client` sees each host frame and returns the reply line,
    /// or `None` to stay silent.
    pub fn in_process<F>(scenario_id: &str, timeout: Duration, mut client: F) -> Result<Self, BridgeError>
    where
        F: FnMut(&HostFrame) -> Option<String> + Send + 'static,
    {
        let (host_reader, mut client_writer) = io::pipe()?;
        let (client_reader, host_writer) = io::pipe()?;
        thread::spawn(move || {
            for line in BufReader::new(client_reader).lines() {
                let Ok(line) = line else { break };
                let Ok(frame) = serde_json::from_str::<HostFrame>(&line) else {
                    continue;
                };
                let stop = matches!(frame, HostFrame::Shutdown { .. });
                if let Some(reply) = client(&frame) {
                    if writeln!(client_writer, "{reply}").and_then(|_| client_writer.flush()).is_err() {
                        break;
                    }
                }
                if stop {
                    break;
                }
            }
        });
        let mut host = Self::from_streams(Box::new(host_writer), host_reader, timeout);
        host.handshake(scenario_id)?;
        Ok(host)
    }

    fn send(&mut self, frame: &HostFrame) -> io::Result<()> {
        let mut line = serde_json::to_string(frame).expect("frames serialize");
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()
    }

    pub fn handshake(&mut self, scenario_id: &str) -> Result<(), BridgeError> {
        self.send(&HostFrame::Handshake {
            protocol_version: BRIDGE_PROTOCOL.to_string(),
            scenario_id: scenario_id.to_string(),
            role: "manager".to_string(),
        })?;
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(line) => line,
            Err(RecvTimeoutError::Timeout) => return Err(BridgeError::Handshake("no reply before timeout".into())),
            Err(RecvTimeoutError::Disconnected) => return Err(BridgeError::Handshake("client closed its output".into())),
        };
        match serde_json::from_str::<ClientFrame>(&line) {
            Ok(ClientFrame::Handshake { protocol_version }) if protocol_version == BRIDGE_PROTOCOL => Ok(()),
            Ok(ClientFrame::Handshake { protocol_version }) => {
                Err(BridgeError::Handshake(format!("unsupported protocol `{protocol_version}`")))
            }
            _ => Err(BridgeError::Handshake(format!("unexpected frame: {}", excerpt(&line)))),
        }
    }

    /// One request/response round. Never blocks longer than the timeout.
    pub fn call(&mut self, obs: &ManagerObservation) -> Decision<ManagerAction> {
        if self.closed {
            return Decision::new(ManagerAction::Noop {}, "bridge closed");
        }
        self.seq += 1;
        let seq = self.seq;
        let frame = HostFrame::Step {
            seq,
            timestep: obs.timestep,
            observation: Box::new(obs.clone()),
        };
        if let Err(e) = self.send(&frame) {
            self.closed = true;
            return Decision::new(ManagerAction::Noop {}, format!("bridge write failed: {e}"));
        }
        let deadline = Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = match self.lines.recv_timeout(left) {
                Ok(line) => line,
                Err(RecvTimeoutError::Timeout) => {
                    tracing::warn!(seq, "bridge reply timed out");
                    return Decision::new(
                        ManagerAction::Noop {},
                        format!("bridge timeout after {} ms", self.timeout.as_millis()),
                    );
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.closed = true;
                    return Decision::new(ManagerAction::Noop {}, "bridge closed");
                }
            };
            match serde_json::from_str::<ClientFrame>(&line) {
                Ok(ClientFrame::Reply { seq: Some(s), .. }) if s != seq => {
                    tracing::debug!(stale = s, current = seq, "discarding stale bridge reply");
                    continue;
                }
                Ok(ClientFrame::Reply { action, rationale, .. }) => {
                    let action = ManagerAction::decode(&action).unwrap_or_else(|e| failed(e.to_string(), &line));
                    return Decision::new(action, rationale);
                }
                Ok(other) => {
                    return Decision::new(failed(format!("expected a reply frame, got {other:?}"), &line), "");
                }
                Err(e) => return Decision::new(failed(format!("malformed reply: {e}"), &line), ""),
            }
        }
    }

    pub fn shutdown(&mut self, reason: &str) {
        if !self.closed {
            let _ = self.send(&HostFrame::Shutdown {
                reason: reason.to_string(),
            });
            self.closed = true;
        }
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_millis(500);
            loop {
                match child.try_wait() {
                    Ok(Some(_)) => break,
                    Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                    _ => {
                        let _ = child.kill();
                        let _ = child.wait();
                        break;
                    }
                }
            }
        }
    }
}

impl Drop for BridgeHost {
    fn drop(&mut self) {
        self.shutdown("host dropped");
    }
}

/// A manager whose decisions come from a bridge client.
pub struct ExternalPolicy {
    host: BridgeHost,
}

impl ExternalPolicy {
    pub fn new(host: BridgeHost) -> Self {
        Self { host }
    }
}

impl ManagerPolicy for ExternalPolicy {
    fn name(&self) -> &str {
        "external"
    }

    fn decide(&mut self, obs: &ManagerObservation) -> Decision<ManagerAction> {
        self.host.call(obs)
    }

    fn finish(&mut self, reason: &str) {
        self.host.shutdown(reason);
    }
}
