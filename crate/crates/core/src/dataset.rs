//! Datasets of transitions and their JSON-lines wire format.
//!
//! One transition per line, integers exact, floats in shortest round-trip
//! decimal form (well above 15 significant digits of fidelity). The file holds
//! exactly the transitions; provenance (seed, environment hash) travels in a
//! sidecar written by the CLI.

use crate::error::{Error, Result};
use crate::mdp::Transition;
use std::io::{BufRead, Write};
use std::path::Path;

/// Ordered collection of transitions from a single environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    env_signature: String,
    transitions: Vec<Transition>,
}

impl Dataset {
    pub fn new(env_signature: String, transitions: Vec<Transition>) -> Self {
        Self { env_signature, transitions }
    }

    pub fn env_signature(&self) -> &str {
        &self.env_signature
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    /// Serialize to JSON lines.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.transitions {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_jsonl(std::io::BufWriter::new(file))
    }

    /// Parse JSON lines produced by [`write_jsonl`](Self::write_jsonl).
    ///
    /// The caller supplies the signature recorded in the sidecar; transitions
    /// themselves carry no environment identity.
    pub fn read_jsonl<R: BufRead>(r: R, env_signature: String) -> Result<Self> {
        let mut transitions = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let t: Transition = serde_json::from_str(&line).map_err(|e| {
                Error::InvalidConfig(format!("dataset line {}: {e}", i + 1))
            })?;
            transitions.push(t);
        }
        Ok(Self::new(env_signature, transitions))
    }

    pub fn load_jsonl(path: &Path, env_signature: String) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_jsonl(std::io::BufReader::new(file), env_signature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{Action, PseudoState, StochasticState};

    fn sample_transition() -> Transition {
        Transition {
            s: StochasticState { code: 3, payload: vec![3, 4, 5, 1, 2, 0] },
            x: PseudoState::new(vec![4, 6, 6]),
            a: Action::new(0),
            r: 16.0,
            s_next: StochasticState { code: 1, payload: vec![2, 3, 4, 2, 2, 0] },
            x_next: PseudoState::new(vec![6, 10, 11]),
            virtual_flag: false,
            parent: None,
        }
    }

    #[test]
    fn jsonl_roundtrip() {
        let d = Dataset::new("test".into(), vec![sample_transition()]);
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains("\"virtual_flag\":false"));
        let back = Dataset::read_jsonl(buf.as_slice(), "test".into()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn parent_index_not_serialized() {
        let mut t = sample_transition();
        t.virtual_flag = true;
        t.parent = Some(42);
        let line = serde_json::to_string(&t).unwrap();
        assert!(!line.contains("parent"));
        let back: Transition = serde_json::from_str(&line).unwrap();
        assert_eq!(back.parent, None);
        assert_eq!(back, t); // parent excluded from equality
    }

    #[test]
    fn fractional_costs_roundtrip_exactly() {
        let mut t = sample_transition();
        t.r = 16.123456789012345;
        let line = serde_json::to_string(&t).unwrap();
        let back: Transition = serde_json::from_str(&line).unwrap();
        assert_eq!(back.r.to_bits(), t.r.to_bits());
    }
}
