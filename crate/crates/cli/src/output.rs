//! Deterministic output plumbing: 17-significant-digit number formatting,
//! CSV writing, run manifests. All floating-point values are emitted as
//! strings so that two runs with identical inputs are byte-identical and
//! round-trip without precision loss.

use anyhow::{Context, Result};
use dde_ssm::histfn::ExpSum;
use dde_ssm::{C64, CVec, Tolerances};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn c17(z: C64) -> Value {
    json!({ "re": f17(z.re), "im": f17(z.im) })
}

pub fn cvec17(v: &CVec) -> Value {
    Value::Array(v.iter().map(|&z| c17(z)).collect())
}

/// An exponential sum Σ e^{μθ}c as a list of (μ, c) terms.
pub fn expsum17(e: &ExpSum) -> Value {
    Value::Array(
        e.terms
            .iter()
            .map(|(mu, c)| json!({ "mu": c17(*mu), "coeff": cvec17(c) }))
            .collect(),
    )
}

pub fn parse_complex(s: &str) -> Result<C64> {
    let (re, im) = s
        .split_once(',')
        .with_context(|| format!("expected re,im — got {s:?}"))?;
    Ok(C64::new(re.trim().parse()?, im.trim().parse()?))
}

/// A CSV artifact: fixed column order, one formatted string per cell.
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "CSV row width mismatch");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Every invocation is summarized by a manifest: the subcommand, the hash of
/// the system file, every flag affecting numerics, the tool version, and the
/// outputs written. Identical manifests imply byte-identical outputs.
pub struct Manifest {
    subcommand: String,
    system: Option<(String, String)>,
    flags: Map<String, Value>,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str) -> Self {
        Manifest {
            subcommand: subcommand.into(),
            system: None,
            flags: Map::new(),
            outputs: Vec::new(),
        }
    }

    pub fn system_file(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)
            .with_context(|| format!("reading system file {}", path.display()))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.system = Some((path.display().to_string(), hex));
        Ok(())
    }

    pub fn flag(&mut self, key: &str, value: impl Into<Value>) {
        self.flags.insert(key.into(), value.into());
    }

    pub fn tolerances(&mut self, tols: &Tolerances) {
        self.flags.insert("tol_root".into(), f17(tols.tol_root).into());
        self.flags.insert("tol_sep".into(), f17(tols.tol_sep).into());
        self.flags.insert("tol_res".into(), f17(tols.tol_res).into());
        self.flags.insert("tol_boundary".into(), f17(tols.tol_boundary).into());
        self.flags.insert("tol_deriv".into(), f17(tols.tol_deriv).into());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("subcommand".into(), self.subcommand.clone().into());
        if let Some((path, hash)) = &self.system {
            m.insert("system_file".into(), path.clone().into());
            m.insert("system_sha256".into(), hash.clone().into());
        }
        m.insert("flags".into(), Value::Object(self.flags.clone()));
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert(
            "outputs".into(),
            Value::Array(self.outputs.iter().map(|s| s.clone().into()).collect()),
        );
        Value::Object(m)
    }
}

/// Writer that records each artifact in the manifest as it lands on disk.
pub struct OutDir {
    pub dir: PathBuf,
}

impl OutDir {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn write(&self, manifest: &mut Manifest, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))?;
        manifest.output(&path);
        Ok(())
    }

    pub fn finish(&self, manifest: &Manifest) -> Result<()> {
        let path = self.dir.join("manifest.json");
        fs::write(&path, render_json(&manifest.to_value()))
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// serde_json's default map is sorted; pretty-print with a trailing newline
/// for stable diffs.
pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serialization");
    s.push('\n');
    s
}

/// Print a JSON document (with its manifest attached) to stdout.
pub fn emit(manifest: &Manifest, mut body: Value) -> Result<()> {
    let obj = body
        .as_object_mut()
        .expect("top-level JSON output must be an object");
    obj.insert("manifest".into(), manifest.to_value());
    print!("{}", render_json(&body));
    Ok(())
}
