//! Versioned binary checkpoints: every tensor in declared order as
//! little-endian f64, the training configuration, and the optimizer
//! moments so an interrupted training run resumes bit-exactly.

use super::ppo::{Adam, PpoConfig};
use super::{AgentError, NetworkParams, Tensor, TENSOR_NAMES};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DASC";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: NetworkParams,
    pub cfg: PpoConfig,
    pub adam: Option<Adam>,
    /// Epochs completed when the checkpoint was written.
    pub epoch: u32,
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<(), AgentError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(ck.params.dim as u16).to_le_bytes())?;
    w.write_all(&(ck.params.n_actions as u16).to_le_bytes())?;
    w.write_all(&ck.cfg.clip.to_le_bytes())?;
    w.write_all(&ck.cfg.gamma.to_le_bytes())?;
    w.write_all(&ck.cfg.k_factor.to_le_bytes())?;
    w.write_all(&ck.cfg.lr.to_le_bytes())?;
    w.write_all(&(ck.cfg.batch_size as u32).to_le_bytes())?;
    w.write_all(&(ck.cfg.epochs as u32).to_le_bytes())?;
    w.write_all(&ck.epoch.to_le_bytes())?;

    let tensors = ck.params.tensors();
    w.write_all(&(tensors.len() as u16).to_le_bytes())?;
    for (name, t) in &tensors {
        let bytes = name.as_bytes();
        w.write_all(&[bytes.len() as u8])?;
        w.write_all(bytes)?;
        w.write_all(&(t.rows as u32).to_le_bytes())?;
        w.write_all(&(t.cols as u32).to_le_bytes())?;
        for v in &t.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    match &ck.adam {
        Some(adam) => {
            w.write_all(&[1u8])?;
            w.write_all(&adam.t.to_le_bytes())?;
            for part in [&adam.m, &adam.v] {
                for arr in part {
                    for v in arr {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
            }
        }
        None => w.write_all(&[0u8])?,
    }
    w.flush()?;
    Ok(())
}

struct Rd<R: Read> {
    inp: R,
    offset: usize,
}

impl<R: Read> Rd<R> {
    fn take(&mut self, buf: &mut [u8], what: &str) -> Result<(), AgentError> {
        self.inp.read_exact(buf).map_err(|_| AgentError::Parse {
            offset: self.offset,
            what: format!("truncated while reading {what}"),
        })?;
        self.offset += buf.len();
        Ok(())
    }
    fn u8(&mut self, what: &str) -> Result<u8, AgentError> {
        let mut b = [0u8; 1];
        self.take(&mut b, what)?;
        Ok(b[0])
    }
    fn u16(&mut self, what: &str) -> Result<u16, AgentError> {
        let mut b = [0u8; 2];
        self.take(&mut b, what)?;
        Ok(u16::from_le_bytes(b))
    }
    fn u32(&mut self, what: &str) -> Result<u32, AgentError> {
        let mut b = [0u8; 4];
        self.take(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self, what: &str) -> Result<u64, AgentError> {
        let mut b = [0u8; 8];
        self.take(&mut b, what)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self, what: &str) -> Result<f64, AgentError> {
        let mut b = [0u8; 8];
        self.take(&mut b, what)?;
        Ok(f64::from_le_bytes(b))
    }
    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, AgentError> {
        (0..n).map(|_| self.f64(what)).collect()
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, AgentError> {
    let file = File::open(path)?;
    let mut r = Rd {
        inp: BufReader::new(file),
        offset: 0,
    };
    let mut magic = [0u8; 4];
    r.take(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(AgentError::Parse {
            offset: 0,
            what: "bad magic".into(),
        });
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(AgentError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let dim = r.u16("dim")? as usize;
    let n_actions = r.u16("n_actions")? as usize;
    let cfg = PpoConfig {
        clip: r.f64("clip")?,
        gamma: r.f64("gamma")?,
        k_factor: r.f64("k_factor")?,
        lr: r.f64("lr")?,
        batch_size: r.u32("batch_size")? as usize,
        epochs: r.u32("epochs")? as usize,
    };
    let epoch = r.u32("epoch")?;

    let count = r.u16("tensor count")? as usize;
    if count != TENSOR_NAMES.len() {
        return Err(AgentError::Parse {
            offset: r.offset,
            what: format!("expected {} tensors, found {count}", TENSOR_NAMES.len()),
        });
    }
    let mut loaded: Vec<Tensor> = Vec::with_capacity(count);
    for name in TENSOR_NAMES {
        let len = r.u8("tensor name length")? as usize;
        let mut buf = vec![0u8; len];
        r.take(&mut buf, "tensor name")?;
        let found = String::from_utf8_lossy(&buf).to_string();
        if found != name {
            return Err(AgentError::Parse {
                offset: r.offset,
                what: format!("tensor order mismatch: expected {name}, found {found}"),
            });
        }
        let rows = r.u32("rows")? as usize;
        let cols = r.u32("cols")? as usize;
        let data = r.f64s(rows * cols, "tensor data")?;
        loaded.push(Tensor { rows, cols, data });
    }
    let mut params = NetworkParams::new(dim, n_actions, 0);
    for ((_, slot), tensor) in params.tensors_mut().into_iter().zip(loaded) {
        *slot = tensor;
    }
    let adam = if r.u8("optimizer flag")? == 1 {
        let t = r.u64("optimizer step")?;
        let shapes: Vec<usize> = params.tensors().iter().map(|(_, t)| t.data.len()).collect();
        let mut m = Vec::with_capacity(shapes.len());
        for &n in &shapes {
            m.push(r.f64s(n, "optimizer m")?);
        }
        let mut v = Vec::with_capacity(shapes.len());
        for &n in &shapes {
            v.push(r.f64s(n, "optimizer v")?);
        }
        Some(Adam { m, v, t })
    } else {
        None
    };
    Ok(Checkpoint {
        params,
        cfg,
        adam,
        epoch,
    })
}
