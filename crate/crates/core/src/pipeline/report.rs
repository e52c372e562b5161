// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run reports: a payload plus the configuration and input digests that
//! produced it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::json::{read_versioned, write_document};
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u64 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Content hash of one consumed file. Paths are deliberately left out so
/// the same inputs at different locations give the same report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDigest {
    pub role: String,
    pub sha256: String,
    pub bytes: u64,
}

impl InputDigest {
    pub fn of_bytes(role: &str, bytes: &[u8]) -> Self {
        Self {
            role: role.to_owned(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        }
    }

    pub fn of_file(role: &str, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::of_bytes(role, &bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u64,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub config: Value,
    pub payload: Value,
}

impl RunReport {
    pub fn new<C: Serialize, P: Serialize>(
        command: &str,
        inputs: Vec<InputDigest>,
        config: &C,
        payload: &P,
    ) -> Result<Self> {
        let to_value = |v: std::result::Result<Value, serde_json::Error>| {
            v.map_err(|e| Error::invalid(format!("cannot serialize report: {e}")))
        };
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            tool: TOOL_NAME.to_owned(),
            tool_version: TOOL_VERSION.to_owned(),
            command: command.to_owned(),
            inputs,
            config: to_value(serde_json::to_value(config))?,
            payload: to_value(serde_json::to_value(payload))?,
        })
    }

    /// Decodes the payload into a typed report.
    pub fn payload_as<D: serde::de::DeserializeOwned>(&self) -> Result<D> {
        serde_json::from_value(self.payload.clone())
            .map_err(|e| Error::format(format!("{} report payload", self.command), e.to_string()))
    }
}

pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    write_document(path, report)
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    read_versioned(path, REPORT_SCHEMA_VERSION)
}
