use std::io::{BufRead, Write};

use super::{Model, ModelConfig, ModelError};

pub const CHECKPOINT_MAGIC: &str = "RDDL-SIAMESE-CHECKPOINT 1";

/// Text header (magic, config, tensor table), a `data` line, then every
/// parameter as a little-endian `f64` in layout order.
pub fn write_checkpoint<W: Write>(mut w: W, model: &Model) -> std::io::Result<()> {
    let c = &model.cfg;
    writeln!(w, "{CHECKPOINT_MAGIC}")?;
    writeln!(w, "vocab_size={}", c.vocab_size)?;
    writeln!(w, "relations={}", c.relations)?;
    writeln!(w, "num_paths={}", c.num_paths)?;
    writeln!(w, "embed_dim={}", c.embed_dim)?;
    writeln!(w, "hidden_dim={}", c.hidden_dim)?;
    writeln!(w, "layers={}", c.layers)?;
    writeln!(w, "fusion_dim={}", c.fusion_dim)?;
    writeln!(w, "learning_rate={:e}", c.learning_rate)?;
    writeln!(w, "batch_size={}", c.batch_size)?;
    writeln!(w, "epochs={}", c.epochs)?;
    writeln!(w, "seed={}", c.seed)?;
    for t in &model.layout.tensors {
        writeln!(w, "tensor {} {} {}", t.name, t.rows, t.cols)?;
    }
    writeln!(w, "data {}", model.params.len())?;
    for p in &model.params {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(mut r: R) -> Result<Model, ModelError> {
    let bad = |m: String| ModelError::Checkpoint(m);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != CHECKPOINT_MAGIC {
        return Err(bad(format!("bad magic {:?}", line.trim_end())));
    }
    let mut cfg = ModelConfig::new(1, 1);
    let mut tensors = Vec::new();
    let count = loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("missing data section".into()));
        }
        let l = line.trim_end();
        if let Some(n) = l.strip_prefix("data ") {
            break n.parse::<usize>().map_err(|e| bad(e.to_string()))?;
        }
        if let Some(t) = l.strip_prefix("tensor ") {
            tensors.push(t.to_string());
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| bad(format!("bad header line {l:?}")))?;
        let int = || v.parse::<usize>().map_err(|e| bad(format!("{k}: {e}")));
        match k {
            "vocab_size" => cfg.vocab_size = int()?,
            "relations" => cfg.relations = int()?,
            "num_paths" => cfg.num_paths = int()?,
            "embed_dim" => cfg.embed_dim = int()?,
            "hidden_dim" => cfg.hidden_dim = int()?,
            "layers" => cfg.layers = int()?,
            "fusion_dim" => cfg.fusion_dim = int()?,
            "batch_size" => cfg.batch_size = int()?,
            "epochs" => cfg.epochs = int()?,
            "learning_rate" => {
                cfg.learning_rate = v.parse().map_err(|_| bad(format!("{k}: {v:?}")))?
            }
            "seed" => cfg.seed = v.parse().map_err(|_| bad(format!("{k}: {v:?}")))?,
            _ => return Err(bad(format!("unknown key {k:?}"))),
        }
    };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(bad(format!(
            "expected {} data bytes, found {}",
            count * 8,
            bytes.len()
        )));
    }
    let params = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    let model = Model::from_params(cfg, params)?;
    let expected: Vec<String> = model
        .layout
        .tensors
        .iter()
        .map(|t| format!("{} {} {}", t.name, t.rows, t.cols))
        .collect();
    if tensors != expected {
        return Err(bad("tensor table does not match config".into()));
    }
    Ok(model)
}
