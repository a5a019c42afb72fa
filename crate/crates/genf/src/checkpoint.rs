//! Text checkpoints with bit-exact parameter values.
//!
//! ```text
//! genf-checkpoint v1
//! kind predictor
//! meta k 3
//! config {"enc_layers":2,...}
//! param main pred.embed.w 3 12 3fb9...
//! end
//! ```
//!
//! Every value is the 16-digit hex of its IEEE-754 bits, so a load gives back
//! exactly the saved numbers.

use crate::error::{CliError, Result};
use genf_core::cwgan::{Cwgan, GenConfig};
use genf_core::nn::ParamStore;
use genf_core::predictor::{PredConfig, Transformer};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const MAGIC: &str = "genf-checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRecord {
    pub store: String,
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    /// Model configuration as one line of JSON.
    pub config: String,
    pub params: Vec<ParamRecord>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn push_store(&mut self, store: &str, ps: &ParamStore) {
        for p in ps.params() {
            self.params.push(ParamRecord {
                store: store.to_string(),
                name: p.name.clone(),
                rows: p.rows,
                cols: p.cols,
                values: p.value.clone(),
            });
        }
    }

    /// Overwrite every parameter of `ps` from the records of `store`.
    pub fn fill_store(&self, store: &str, ps: &mut ParamStore) -> Result<()> {
        let records: Vec<&ParamRecord> = self.params.iter().filter(|r| r.store == store).collect();
        if records.len() != ps.params().len() {
            return Err(bad(format!(
                "store {store}: checkpoint has {} arrays, model expects {}",
                records.len(),
                ps.params().len()
            )));
        }
        for r in records {
            ps.load(&r.name, r.rows, r.cols, r.values.clone())
                .map_err(|e| bad(format!("store {store}: {e}")))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "kind {}", self.kind).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").unwrap();
        }
        writeln!(out, "config {}", self.config).unwrap();
        for p in &self.params {
            write!(out, "param {} {} {} {}", p.store, p.name, p.rows, p.cols).unwrap();
            for v in &p.values {
                write!(out, " {:016x}", v.to_bits()).unwrap();
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim_end() == MAGIC => {}
            Some((_, l)) => return Err(bad(format!("not a {MAGIC} file (header `{l}`)"))),
            None => return Err(bad("empty checkpoint")),
        }
        let mut ck = Checkpoint::default();
        let mut ended = false;
        for (i, line) in lines {
            let n = i + 1;
            let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
            match tag {
                "kind" => ck.kind = rest.to_string(),
                "meta" => {
                    let (k, v) = rest.split_once(' ').ok_or_else(|| bad(format!("line {n}: meta needs key and value")))?;
                    ck.meta.insert(k.to_string(), v.to_string());
                }
                "config" => ck.config = rest.to_string(),
                "param" => ck.params.push(parse_param(rest).map_err(|m| bad(format!("line {n}: {m}")))?),
                "end" => {
                    ended = true;
                    break;
                }
                "" => {}
                other => return Err(bad(format!("line {n}: unknown record `{other}`"))),
            }
        }
        if !ended {
            return Err(bad("truncated checkpoint (no `end`)"));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(CliError::MissingCheckpoint(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn meta_usize(&self, key: &str) -> Result<usize> {
        self.meta
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("missing or bad meta `{key}`")))
    }

    fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(bad(format!("expected a {kind} checkpoint, found `{}`", self.kind)));
        }
        Ok(())
    }
}

fn parse_param(rest: &str) -> std::result::Result<ParamRecord, String> {
    let mut it = rest.split_ascii_whitespace();
    let store = it.next().ok_or("missing store")?.to_string();
    let name = it.next().ok_or("missing name")?.to_string();
    let rows: usize = it.next().and_then(|v| v.parse().ok()).ok_or("bad rows")?;
    let cols: usize = it.next().and_then(|v| v.parse().ok()).ok_or("bad cols")?;
    let values = it
        .map(|h| u64::from_str_radix(h, 16).map(f64::from_bits).map_err(|_| format!("bad value `{h}`")))
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    if values.len() != rows * cols {
        return Err(format!("{name}: {rows}x{cols} needs {} values, found {}", rows * cols, values.len()));
    }
    Ok(ParamRecord {
        store,
        name,
        rows,
        cols,
        values,
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("config serialises")
}

fn from_json<T: serde::de::DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| bad(format!("bad config record: {e}")))
}

pub fn predictor_checkpoint(model: &Transformer) -> Checkpoint {
    let mut ck = Checkpoint {
        kind: String::from("predictor"),
        config: to_json(&model.cfg),
        ..Checkpoint::default()
    };
    ck.meta.insert(String::from("k"), model.k.to_string());
    ck.meta.insert(String::from("out_dim"), model.out_dim.to_string());
    ck.push_store("main", &model.ps);
    ck
}

pub fn predictor_from(ck: &Checkpoint) -> Result<Transformer> {
    ck.expect_kind("predictor")?;
    let cfg: PredConfig = from_json(&ck.config)?;
    let mut model = Transformer::new(ck.meta_usize("k")?, ck.meta_usize("out_dim")?, &cfg, 0)?;
    ck.fill_store("main", &mut model.ps)?;
    Ok(model)
}

pub fn gan_checkpoint(gan: &Cwgan) -> Checkpoint {
    let mut ck = Checkpoint {
        kind: String::from("cwgan"),
        config: to_json(&gan.cfg),
        ..Checkpoint::default()
    };
    ck.meta.insert(String::from("k"), gan.generator.k.to_string());
    ck.push_store("generator", &gan.generator.ps);
    ck.push_store("critic", &gan.critic.ps);
    ck
}

pub fn gan_from(ck: &Checkpoint) -> Result<Cwgan> {
    ck.expect_kind("cwgan")?;
    let cfg: GenConfig = from_json(&ck.config)?;
    let mut gan = Cwgan::new(ck.meta_usize("k")?, &cfg, 0);
    ck.fill_store("generator", &mut gan.generator.ps)?;
    ck.fill_store("critic", &mut gan.critic.ps)?;
    Ok(gan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_values_are_bit_exact() {
        let mut ps = ParamStore::new(1);
        let id = ps.add_uniform("w", 2, 3, 2);
        ps.value_mut(id).copy_from_slice(&[0.1, -0.0, f64::MIN_POSITIVE, 1e300, -3.5, f64::EPSILON]);
        let mut ck = Checkpoint {
            kind: String::from("test"),
            config: String::from("{}"),
            ..Checkpoint::default()
        };
        ck.push_store("s", &ps);
        let back = Checkpoint::parse(&ck.to_text()).unwrap();
        assert_eq!(back, ck);
        let bits: Vec<u64> = back.params[0].values.iter().map(|v| v.to_bits()).collect();
        let orig: Vec<u64> = ps.value(id).iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, orig);
    }

    #[test]
    fn models_roundtrip() {
        let model = Transformer::new(3, 1, &PredConfig::default(), 7).unwrap();
        let back = predictor_from(&Checkpoint::parse(&predictor_checkpoint(&model).to_text()).unwrap()).unwrap();
        assert_eq!(back.ps, model.ps);
        assert_eq!(back.cfg, model.cfg);

        let gan = Cwgan::new(3, &GenConfig::default(), 9);
        let back = gan_from(&Checkpoint::parse(&gan_checkpoint(&gan).to_text()).unwrap()).unwrap();
        assert_eq!(back.generator.ps, gan.generator.ps);
        assert_eq!(back.critic.ps, gan.critic.ps);
    }

    #[test]
    fn malformed_input() {
        assert!(Checkpoint::parse("nope\n").is_err());
        assert!(Checkpoint::parse(&format!("{MAGIC}\nkind x\n")).is_err());
        assert!(Checkpoint::parse(&format!("{MAGIC}\nparam s w 1 2 0000000000000000\nend\n")).is_err());
        let ck = predictor_checkpoint(&Transformer::new(3, 1, &PredConfig::default(), 7).unwrap());
        assert!(gan_from(&ck).is_err());
        assert!(matches!(
            Checkpoint::load(Path::new("/nonexistent/genf.ckpt")),
            Err(CliError::MissingCheckpoint(_))
        ));
    }
}
