//! Versioned agent checkpoints: structured-text documents carrying a config
//! fingerprint, the noise schedule, and every network's parameters. Loads
//! refuse documents whose fingerprint does not match the present experiment.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::gdm::GdmAgent;
use crate::ppo::PpoAgent;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint<A> {
    version: u32,
    kind: String,
    fingerprint: String,
    agent: A,
}

fn save<A: Serialize>(path: &Path, kind: &str, fingerprint: &str, agent: &A) -> Result<()> {
    let doc = Checkpoint {
        version: CHECKPOINT_VERSION,
        kind: kind.to_string(),
        fingerprint: fingerprint.to_string(),
        agent,
    };
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, &doc)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writer.flush()?;
    Ok(())
}

fn load<A: for<'de> Deserialize<'de>>(
    path: &Path,
    kind: &str,
    expected_fingerprint: &str,
) -> Result<A> {
    let file = File::open(path)?;
    // Parse the envelope first so kind/fingerprint mismatches are reported
    // as refusals rather than shape errors.
    let doc: Checkpoint<serde_json::Value> = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if doc.version != CHECKPOINT_VERSION {
        return Err(config(format!(
            "{}: checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
            path.display(),
            doc.version
        )));
    }
    if doc.kind != kind {
        return Err(config(format!(
            "{}: checkpoint holds a {} agent, expected {kind}",
            path.display(),
            doc.kind
        )));
    }
    if doc.fingerprint != expected_fingerprint {
        return Err(config(format!(
            "{}: checkpoint fingerprint {} does not match this experiment's {}; \
             refusing to load",
            path.display(),
            doc.fingerprint,
            expected_fingerprint
        )));
    }
    serde_json::from_value(doc.agent)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn save_gdm_checkpoint(path: &Path, agent: &GdmAgent, fingerprint: &str) -> Result<()> {
    save(path, "gdm", fingerprint, agent)
}

pub fn load_gdm_checkpoint(path: &Path, expected_fingerprint: &str) -> Result<GdmAgent> {
    load(path, "gdm", expected_fingerprint)
}

pub fn save_ppo_checkpoint(path: &Path, agent: &PpoAgent, fingerprint: &str) -> Result<()> {
    save(path, "ppo", fingerprint, agent)
}

pub fn load_ppo_checkpoint(path: &Path, expected_fingerprint: &str) -> Result<PpoAgent> {
    load(path, "ppo", expected_fingerprint)
}
