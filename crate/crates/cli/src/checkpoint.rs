//! Binary checkpoint: magic `TDF1`, format version, one block per network,
//! then the training state. All integers and floats are little-endian.
//!
//! ```text
//! "TDF1" u32:version u32:networks
//!   per network: u8:kind u32:entries
//!     per entry: u32:name_len name u32:rank u64*rank:shape f64*numel:data
//! u64:epoch [u8;32]:rng_seed u64:rng_stream u128:rng_word_pos
//! u32:config_len config_text
//! ```

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdfusion::networks::NetworkKind;
use tdfusion::{ParamSet, Tensor};

use crate::CliError;

pub const MAGIC: &[u8; 4] = b"TDF1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub fusion: ParamSet,
    pub task: ParamSet,
    pub lossgen: ParamSet,
    pub epoch: u64,
    pub rng: ChaCha8Rng,
    /// Rendered run configuration the parameters were trained with.
    pub config: String,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let nets = [&self.fusion, &self.task, &self.lossgen];
        out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
        for net in nets {
            out.push(net.kind().code());
            out.extend_from_slice(&(net.len() as u32).to_le_bytes());
            for (name, t) in net.entries() {
                out.extend_from_slice(&(name.len() as u32).to_le_bytes());
                out.extend_from_slice(name.as_bytes());
                out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
                for &d in t.shape() {
                    out.extend_from_slice(&(d as u64).to_le_bytes());
                }
                for &v in t.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out.extend_from_slice(&self.epoch.to_le_bytes());
        out.extend_from_slice(&self.rng.get_seed());
        out.extend_from_slice(&self.rng.get_stream().to_le_bytes());
        out.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        out.extend_from_slice(&(self.config.len() as u32).to_le_bytes());
        out.extend_from_slice(self.config.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(bad("not a checkpoint (bad magic)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(bad(&format!("unsupported checkpoint version {version}")));
        }
        let count = r.u32()?;
        if count != 3 {
            return Err(bad(&format!("expected 3 networks, found {count}")));
        }
        let mut nets = Vec::with_capacity(3);
        for expected in [NetworkKind::Fusion, NetworkKind::Task, NetworkKind::LossGen] {
            let code = r.take(1)?[0];
            let kind = NetworkKind::from_code(code).ok_or_else(|| bad(&format!("unknown network kind {code}")))?;
            if kind != expected {
                return Err(bad(&format!("network block {} out of order", kind.as_str())));
            }
            let n = r.u32()?;
            let mut entries = Vec::new();
            for _ in 0..n {
                let len = r.u32()? as usize;
                let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| bad("entry name is not UTF-8"))?;
                let rank = r.u32()? as usize;
                let shape = (0..rank)
                    .map(|_| r.u64().map(|d| d as usize))
                    .collect::<Result<Vec<_>, _>>()?;
                let numel = shape
                    .iter()
                    .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                    .ok_or_else(|| bad("tensor too large"))?;
                let raw = r.take(numel.checked_mul(8).ok_or_else(|| bad("tensor too large"))?)?;
                let data = raw
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                let t = Tensor::new(shape, data).map_err(|e| bad(&e.to_string()))?;
                entries.push((name, t));
            }
            nets.push(ParamSet::new(kind, entries).map_err(|e| bad(&e.to_string()))?);
        }
        let epoch = r.u64()?;
        let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
        let len = r.u32()? as usize;
        let config = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| bad("config echo is not UTF-8"))?;
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes after the training state"));
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        let lossgen = nets.pop().unwrap();
        let task = nets.pop().unwrap();
        let fusion = nets.pop().unwrap();
        Ok(Self {
            fusion,
            task,
            lossgen,
            epoch,
            rng,
            config,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

fn bad(msg: &str) -> CliError {
    CliError::Checkpoint(msg.to_string())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| bad("truncated checkpoint"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
