//! JSON envelope shared by every report: tool version, resolved configuration
//! and payload. Serialization is deterministic (struct field order, shortest
//! round-trip floats).

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, C: Serialize, P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub result: &'a P,
}

pub fn to_json<C: Serialize, P: Serialize>(command: &str, config: &C, result: &P) -> String {
    let env = Envelope {
        tool: "stepmap",
        version: crate::VERSION,
        command,
        config,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report types serialize");
    s.push('\n');
    s
}
