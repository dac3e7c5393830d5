//! Line-delimited JSON wire protocol for external scanner and repair
//! models, spoken over a child process's standard streams or HTTP POST.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("cannot start `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("endpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("http: {0}")]
    Http(String),
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("no response for request `{0}`")]
    MissingResponse(String),
    #[error("invalid endpoint `{0}`")]
    InvalidEndpoint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireIdentifier {
    pub name: String,
    pub byte_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireScore {
    pub name: String,
    pub byte_offset: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRequest {
    pub id: String,
    pub prefix: String,
    pub scan: String,
    pub identifiers: Vec<WireIdentifier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResponse {
    pub id: String,
    pub scores: Vec<WireScore>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRequest {
    pub id: String,
    pub text: String,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairResponse {
    pub id: String,
    pub candidates: Vec<String>,
}

/// Messages carrying a request id.
pub trait Keyed {
    fn key(&self) -> &str;
}

impl Keyed for ScanRequest {
    fn key(&self) -> &str {
        &self.id
    }
}

impl Keyed for ScanResponse {
    fn key(&self) -> &str {
        &self.id
    }
}

impl Keyed for RepairRequest {
    fn key(&self) -> &str {
        &self.id
    }
}

impl Keyed for RepairResponse {
    fn key(&self) -> &str {
        &self.id
    }
}

/// Where a model lives: `http(s)://...` URLs are POSTed to, anything else
/// is a shell-quoted command line run as a child process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Command(Vec<String>),
    Http(String),
}

impl std::str::FromStr for Endpoint {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(Endpoint::Http(s.to_string()));
        }
        match shlex::split(s) {
            Some(argv) if !argv.is_empty() => Ok(Endpoint::Command(argv)),
            _ => Err(ProtocolError::InvalidEndpoint(s.to_string())),
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Http(url) => f.write_str(url),
            Endpoint::Command(argv) => f.write_str(&shlex::try_join(argv.iter().map(String::as_str)).unwrap_or_default()),
        }
    }
}

struct ChildIo {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl Drop for ChildIo {
    fn drop(&mut self) {
        drop(self.stdin.take());
        if self.child.wait().is_err() {
            let _ = self.child.kill();
        }
    }
}

/// A connection to one endpoint. Requests are pipelined with at most
/// `in_flight` outstanding; responses are matched by id, so the endpoint
/// may answer in any order.
pub struct Client {
    endpoint: Endpoint,
    in_flight: usize,
    child: Mutex<Option<ChildIo>>,
    agent: ureq::Agent,
}

impl Client {
    pub fn new(endpoint: Endpoint, in_flight: usize) -> Self {
        Self {
            endpoint,
            in_flight: in_flight.max(1),
            child: Mutex::new(None),
            agent: ureq::AgentBuilder::new().build(),
        }
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    /// Sends every request and returns the responses in request order.
    pub fn call<Req, Resp>(&self, requests: &[Req]) -> Result<Vec<Resp>, ProtocolError>
    where
        Req: Serialize + Keyed + Sync,
        Resp: DeserializeOwned + Keyed + Send,
    {
        let mut by_id: HashMap<String, Resp> = match &self.endpoint {
            Endpoint::Command(argv) => self.call_stdio(argv, requests)?,
            Endpoint::Http(url) => self.call_http(url, requests)?,
        };
        requests
            .iter()
            .map(|r| by_id.remove(r.key()).ok_or_else(|| ProtocolError::MissingResponse(r.key().to_string())))
            .collect()
    }

    fn spawn(argv: &[String]) -> Result<ChildIo, ProtocolError> {
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ProtocolError::Spawn {
                command: argv.join(" "),
                source,
            })?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ChildIo { child, stdin, stdout })
    }

    fn call_stdio<Req, Resp>(&self, argv: &[String], requests: &[Req]) -> Result<HashMap<String, Resp>, ProtocolError>
    where
        Req: Serialize + Keyed,
        Resp: DeserializeOwned + Keyed,
    {
        let mut guard = self.child.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(Self::spawn(argv)?);
        }
        let io = guard.as_mut().expect("child spawned");
        let result = Self::exchange(io, requests, self.in_flight);
        if result.is_err() {
            // a broken child is restarted on the next call
            *guard = None;
        }
        result
    }

    fn exchange<Req, Resp>(io: &mut ChildIo, requests: &[Req], in_flight: usize) -> Result<HashMap<String, Resp>, ProtocolError>
    where
        Req: Serialize + Keyed,
        Resp: DeserializeOwned + Keyed,
    {
        let mut out = HashMap::with_capacity(requests.len());
        let mut sent = 0;
        let mut line = String::new();
        while out.len() < requests.len() {
            while sent < requests.len() && sent - out.len() < in_flight {
                let stdin = io.stdin.as_mut().ok_or_else(|| ProtocolError::BadResponse("stdin closed".into()))?;
                let mut msg = serde_json::to_string(&requests[sent]).map_err(|e| ProtocolError::BadResponse(e.to_string()))?;
                msg.push('\n');
                stdin.write_all(msg.as_bytes())?;
                sent += 1;
            }
            io.stdin.as_mut().map(|s| s.flush()).transpose()?;
            line.clear();
            if io.stdout.read_line(&mut line)? == 0 {
                let missing = requests.iter().find(|r| !out.contains_key(r.key())).expect("pending request");
                return Err(ProtocolError::MissingResponse(missing.key().to_string()));
            }
            if line.trim().is_empty() {
                continue;
            }
            let resp: Resp = serde_json::from_str(&line).map_err(|e| ProtocolError::BadResponse(format!("{e}: {}", line.trim())))?;
            out.insert(resp.key().to_string(), resp);
        }
        Ok(out)
    }

    fn call_http<Req, Resp>(&self, url: &str, requests: &[Req]) -> Result<HashMap<String, Resp>, ProtocolError>
    where
        Req: Serialize + Sync,
        Resp: DeserializeOwned + Keyed + Send,
    {
        let mut out = HashMap::with_capacity(requests.len());
        for batch in requests.chunks(self.in_flight) {
            let results: Vec<Result<Resp, ProtocolError>> = std::thread::scope(|s| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|req| s.spawn(move || self.post(url, req)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or_else(|_| Err(ProtocolError::Http("request thread panicked".into()))))
                    .collect()
            });
            for resp in results {
                let resp = resp?;
                out.insert(resp.key().to_string(), resp);
            }
        }
        Ok(out)
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, url: &str, req: &Req) -> Result<Resp, ProtocolError> {
        let body = serde_json::to_value(req).map_err(|e| ProtocolError::BadResponse(e.to_string()))?;
        let resp = self.agent.post(url).send_json(body).map_err(|e| ProtocolError::Http(e.to_string()))?;
        resp.into_json().map_err(|e| ProtocolError::BadResponse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_parsing() {
        assert_eq!("http://localhost:8000/scan".parse::<Endpoint>().unwrap(), Endpoint::Http("http://localhost:8000/scan".into()));
        assert_eq!(
            "python3 -u 'my model.py'".parse::<Endpoint>().unwrap(),
            Endpoint::Command(vec!["python3".into(), "-u".into(), "my model.py".into()])
        );
        assert!("".parse::<Endpoint>().is_err());
        assert!("'unclosed".parse::<Endpoint>().is_err());
    }

    #[test]
    fn wire_shapes() {
        let req = ScanRequest {
            id: "b#0".into(),
            prefix: "p".into(),
            scan: "x = y".into(),
            identifiers: vec![WireIdentifier { name: "x".into(), byte_offset: 0 }],
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":"b#0","prefix":"p","scan":"x = y","identifiers":[{"name":"x","byte_offset":0}]}"#
        );
        let resp: RepairResponse = serde_json::from_str(r#"{"id":"b","candidates":["a","b"]}"#).unwrap();
        assert_eq!(resp.candidates.len(), 2);
    }

    #[cfg(unix)]
    #[test]
    fn stdio_round_trip_through_cat() {
        // `cat` echoes each request, which parses as a response with the same id
        let client = Client::new(Endpoint::Command(vec!["cat".into()]), 2);
        let reqs: Vec<RepairRequest> = (0..5)
            .map(|i| RepairRequest { id: format!("r{i}"), text: "t".into(), k: 1 })
            .collect();
        #[derive(Deserialize)]
        struct Echo {
            id: String,
        }
        impl Keyed for Echo {
            fn key(&self) -> &str {
                &self.id
            }
        }
        let got: Vec<Echo> = client.call(&reqs).unwrap();
        assert_eq!(got.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["r0", "r1", "r2", "r3", "r4"]);
    }

    #[test]
    fn missing_program_is_spawn_error() {
        let client = Client::new(Endpoint::Command(vec!["/nonexistent/model-binary".into()]), 1);
        let reqs = vec![RepairRequest { id: "a".into(), text: String::new(), k: 1 }];
        let err = client.call::<_, RepairResponse>(&reqs).unwrap_err();
        assert!(matches!(err, ProtocolError::Spawn { .. }));
    }
}
