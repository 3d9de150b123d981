//! Provenance block embedded at the top of every output file.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use trimix::certify::sha256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<(String, String)>,
    pub params: Vec<(String, String)>,
    /// Hash over the names and hashes of the data files a run read.
    pub data_hash: Option<String>,
    pub workers: usize,
    pub elapsed_ms: Option<u128>,
}

impl RunManifest {
    pub fn new(command: &str, workers: usize) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: Vec::new(),
            params: Vec::new(),
            data_hash: None,
            workers,
            elapsed_ms: None,
        }
    }

    pub fn input(&mut self, path: &Path, text: &str) {
        self.inputs.push((path.display().to_string(), sha256(text)));
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    pub fn data(&mut self, hashes: &[(String, String)]) {
        let joined: String = hashes.iter().map(|(n, h)| format!("{h}  {n}\n")).collect();
        self.data_hash = Some(sha256(&joined));
    }

    pub fn finish(&mut self, started: Instant) {
        self.elapsed_ms = Some(started.elapsed().as_millis());
    }

    /// One `<prefix> manifest ...` line per field.
    pub fn to_text(&self, prefix: &str) -> String {
        let mut s = String::new();
        let mut line = |body: String| {
            let _ = writeln!(s, "{prefix} manifest {body}");
        };
        line(format!("command {}", self.command));
        for (p, h) in &self.inputs {
            line(format!("input {p} sha256={h}"));
        }
        for (k, v) in &self.params {
            line(format!("param {k}={v}"));
        }
        if let Some(h) = &self.data_hash {
            line(format!("data sha256={h}"));
        }
        line(format!("workers {}", self.workers));
        if let Some(ms) = self.elapsed_ms {
            line(format!("elapsed_ms {ms}"));
        }
        s
    }

    /// Reads the manifest back out of a file written with [`to_text`].
    ///
    /// [`to_text`]: RunManifest::to_text
    pub fn parse(text: &str) -> Option<Self> {
        let mut m = RunManifest::new("", 0);
        let mut found = false;
        for line in text.lines() {
            let Some((_, body)) = line.split_once(" manifest ") else { continue };
            found = true;
            let (key, rest) = body.split_once(' ').unwrap_or((body, ""));
            match key {
                "command" => m.command = rest.to_string(),
                "input" => {
                    let (p, h) = rest.rsplit_once(" sha256=")?;
                    m.inputs.push((p.to_string(), h.to_string()));
                }
                "param" => {
                    let (k, v) = rest.split_once('=')?;
                    m.params.push((k.to_string(), v.to_string()));
                }
                "data" => m.data_hash = Some(rest.strip_prefix("sha256=")?.to_string()),
                "workers" => m.workers = rest.parse().ok()?,
                "elapsed_ms" => m.elapsed_ms = Some(rest.parse().ok()?),
                _ => return None,
            }
        }
        found.then_some(m)
    }

    /// Everything but the timing, which is all two runs on identical
    /// inputs may differ in.
    pub fn key(&self) -> RunManifest {
        RunManifest { elapsed_ms: None, ..self.clone() }
    }
}
