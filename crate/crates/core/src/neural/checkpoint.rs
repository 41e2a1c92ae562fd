//! Parameter checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PDAW"
//! 4       1     version (1)
//! 5       4     C (input_dim), u32 LE
//! 9       4     hidden_size, u32 LE
//! 13      4     num_linear_layers, u32 LE
//! 17      4     N (output_dim), u32 LE
//! 21      8*P   parameters as f64 LE, canonical tensor order
//! ```
//!
//! The canonical order is documented on [`NetworkParams`].

use super::{NetworkConfig, NetworkParams};
use crate::error::{Error, Result};
use crate::io::format::{check_header, Reader};

pub const MAGIC: [u8; 4] = *b"PDAW";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 21;

pub fn write_checkpoint(cfg: &NetworkConfig, params: &NetworkParams) -> Result<Vec<u8>> {
    cfg.validate()?;
    if !params.shape_matches(cfg) {
        return Err(Error::dims("parameters for the network config", "mismatched tensors"));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * cfg.num_parameters());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    for v in [cfg.input_dim, cfg.hidden_size, cfg.num_linear_layers, cfg.output_dim] {
        let v = u32::try_from(v).map_err(|_| Error::InvalidConfig(format!("{v} does not fit in u32")))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    for t in params.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<(NetworkConfig, NetworkParams)> {
    let mut r = Reader::new(bytes);
    check_header(&mut r, MAGIC, VERSION)?;
    let mut dims = [0usize; 4];
    for d in dims.iter_mut() {
        *d = r.u32()? as usize;
    }
    let cfg = NetworkConfig::new(dims[0], dims[1], dims[2], dims[3]);
    cfg.validate()?;
    let count = cfg.num_parameters();
    let mut flat = Vec::with_capacity(count);
    for _ in 0..count {
        flat.push(r.f64()?);
    }
    r.finish()?;
    let params = NetworkParams::from_flat(&cfg, &flat)?;
    Ok((cfg, params))
}
