//! Self-describing binary network format.
//!
//! Layout (all integers little-endian):
//! `magic "HTNET\0"`, `u32 version`, `u32 depth L`, `L + 2` widths as
//! `u64`, then `T` coefficients as raw `f64` bit patterns in the frozen
//! order. Raw bit patterns make the round trip loss-free, including
//! negative zero and subnormals.

use std::fs;
use std::path::Path;

use super::{Architecture, NetError, Network};

const MAGIC: &[u8; 6] = b"HTNET\0";
const VERSION: u32 = 1;

pub fn to_bytes(net: &Network) -> Vec<u8> {
    let widths = net.arch().widths();
    let t = net.coefficient_count();
    let mut buf = Vec::with_capacity(6 + 4 + 4 + 8 * widths.len() + 8 * t);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(net.arch().depth() as u32).to_le_bytes());
    for &w in widths {
        buf.extend_from_slice(&(w as u64).to_le_bytes());
    }
    for c in net.coefficients() {
        buf.extend_from_slice(&c.to_bits().to_le_bytes());
    }
    buf
}

pub fn from_bytes(bytes: &[u8]) -> Result<Network, NetError> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], NetError> {
        if *pos + n > bytes.len() {
            return Err(NetError::Format("truncated".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 6)? != MAGIC {
        return Err(NetError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(NetError::Format(format!("unsupported version {version}")));
    }
    let depth = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let mut widths = Vec::with_capacity(depth + 2);
    for _ in 0..depth + 2 {
        widths.push(u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize);
    }
    let arch = Architecture::new(widths)?;
    let t = super::param_count(&arch).t;
    let mut coeffs = Vec::with_capacity(t);
    for _ in 0..t {
        let bits = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        coeffs.push(f64::from_bits(bits));
    }
    if pos != bytes.len() {
        return Err(NetError::Format("trailing bytes".into()));
    }
    Network::from_coefficients(&arch, &coeffs)
}

pub fn write(net: &Network, path: &Path) -> Result<(), NetError> {
    fs::write(path, to_bytes(net))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Network, NetError> {
    from_bytes(&fs::read(path)?)
}
