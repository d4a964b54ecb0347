//! CSV and JSON emission. Every artifact starts with the tool version and the
//! resolved configuration: `#` comment lines in CSV, `version` and `config`
//! fields in JSON. Floats are written in shortest round-trip decimal form.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::classify::{ContourPoint, PhasePoint};
use crate::correlation::GammaVector;
use crate::error::Result;
use crate::simulate::TriangleCounts;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered `key=value` configuration of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConfigEcho {
    pub command: String,
    pub entries: Vec<(String, String)>,
}

impl ConfigEcho {
    pub fn new(command: &str) -> Self {
        ConfigEcho { command: command.to_string(), entries: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn write_comment<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# cantor {VERSION}")?;
        writeln!(w, "# command={}", self.command)?;
        for (k, v) in &self.entries {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut config = Map::new();
        config.insert("command".into(), Value::String(self.command.clone()));
        for (k, v) in &self.entries {
            config.insert(k.clone(), Value::String(v.clone()));
        }
        Value::Object(config)
    }
}

/// `{"version", "config", ..body}`; `body` must serialize to an object.
pub fn json_document<T: Serialize>(echo: &ConfigEcho, body: &T) -> Result<Value> {
    let mut doc = Map::new();
    doc.insert("version".into(), json!(VERSION));
    doc.insert("config".into(), echo.to_json());
    match serde_json::to_value(body)? {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    Ok(Value::Object(doc))
}

fn csv_writer<W: Write>(mut w: W, echo: &ConfigEcho, header: &[&str]) -> Result<csv::Writer<W>> {
    echo.write_comment(&mut w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

/// Rows `n,k,gamma` for `k` in `[-M^n, M^n)`.
pub fn write_gamma_csv<W: Write>(w: W, echo: &ConfigEcho, g: &GammaVector) -> Result<()> {
    let mut out = csv_writer(w, echo, &["n", "k", "gamma"])?;
    let period = g.period() as i64;
    let n = g.order().to_string();
    for k in -period..period {
        out.write_record([n.clone(), k.to_string(), g.get(k).to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_phase_csv<W: Write>(w: W, echo: &ConfigEcho, points: &[PhasePoint]) -> Result<()> {
    let mut out = csv_writer(w, echo, &["p0", "p1", "norm1", "gamma0", "gamma1", "C", "region"])?;
    for p in points {
        out.write_record([
            p.p0.to_string(),
            p.p1.to_string(),
            p.norm1.to_string(),
            p.gamma0.to_string(),
            p.gamma1.to_string(),
            p.c.to_string(),
            p.region.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_contours_csv<W: Write>(w: W, echo: &ConfigEcho, points: &[ContourPoint]) -> Result<()> {
    let mut out = csv_writer(w, echo, &["curve", "p0", "p1", "residual"])?;
    for p in points {
        out.write_record([p.curve.to_string(), p.p0.to_string(), p.p1.to_string(), p.residual.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Streaming writer of per-replication rows `replication,column,ZL,ZR`.
pub struct CountsWriter<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> CountsWriter<W> {
    pub fn new(w: W, echo: &ConfigEcho) -> Result<Self> {
        Ok(CountsWriter { out: csv_writer(w, echo, &["replication", "column", "ZL", "ZR"])? })
    }

    pub fn write(&mut self, replication: u64, counts: &TriangleCounts) -> Result<()> {
        let r = replication.to_string();
        for d in counts.columns() {
            self.out.write_record([r.clone(), d.to_string(), counts.zl(d).to_string(), counts.zr(d).to_string()])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
