//! Binary checkpoint: magic `SYNB1`, then input, hidden and output sizes as
//! little-endian u64, then every parameter as a little-endian f64 in
//! [`Layout`](crate::lstm::Layout) order.

use alloc::format;
use alloc::vec::Vec;

use crate::lstm::{ModelParams, NetworkDims};
use crate::{Error, Result};

pub const MAGIC: &[u8; 5] = b"SYNB1";
const HEADER: usize = MAGIC.len() + 3 * 8;

pub fn encode(params: &ModelParams) -> Vec<u8> {
    let dims = params.dims();
    let mut out = Vec::with_capacity(HEADER + 8 * params.len());
    out.extend_from_slice(MAGIC);
    for n in [dims.input, dims.hidden, NetworkDims::OUTPUT] {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for v in params.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ModelParams> {
    if bytes.len() < HEADER || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("missing SYNB1 magic".into()));
    }
    let word = |i: usize| {
        let at = MAGIC.len() + 8 * i;
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[at..at + 8]);
        u64::from_le_bytes(b)
    };
    let (input, hidden, output) = (word(0), word(1), word(2));
    if output != NetworkDims::OUTPUT as u64 {
        return Err(Error::Checkpoint(format!("output size {output}, expected 1")));
    }
    let to_usize = |v: u64| usize::try_from(v).map_err(|_| Error::Checkpoint(format!("size {v} too large")));
    let dims = NetworkDims::new(to_usize(input)?, to_usize(hidden)?).map_err(|e| Error::Checkpoint(format!("{e}")))?;
    let expected = dims
        .input
        .checked_mul(dims.hidden)
        .and_then(|_| dims.hidden.checked_mul(dims.hidden))
        .map(|_| dims.layout().len)
        .ok_or_else(|| Error::Checkpoint("dims overflow".into()))?;
    let body = &bytes[HEADER..];
    if body.len() != expected * 8 {
        return Err(Error::Checkpoint(format!(
            "{} payload bytes, dims {input}x{hidden} need {}",
            body.len(),
            expected * 8
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| {
            let mut b = [0u8; 8];
            b.copy_from_slice(c);
            f64::from_le_bytes(b)
        })
        .collect();
    ModelParams::from_values(dims, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::init_params;
    use crate::rng;

    #[test]
    fn round_trip_and_header() {
        let dims = NetworkDims::new(5, 3).unwrap();
        let p = init_params(dims, &mut rng::stream(2));
        let bytes = encode(&p);
        assert_eq!(&bytes[..5], b"SYNB1");
        assert_eq!(bytes[5], 5);
        assert_eq!(bytes[13], 3);
        assert_eq!(bytes[21], 1);
        assert_eq!(bytes.len(), 29 + 8 * p.len());
        assert_eq!(decode(&bytes).unwrap(), p);
    }

    #[test]
    fn rejects_corruption() {
        let p = ModelParams::zeros(NetworkDims::new(2, 2).unwrap());
        let bytes = encode(&p);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong = bytes.clone();
        wrong[13] = 3;
        assert!(decode(&wrong).is_err());
        assert!(decode(&bytes[..10]).is_err());
    }
}
