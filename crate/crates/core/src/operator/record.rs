//! Versioned binary record for an [`EigenSystem`].
//!
//! Layout, all integers and floats little-endian:
//! magic (8) | format version u32 | solver version u32 | key (32) | lo i64 |
//! hi i64 | energies f64 x n | vectors f64 x n^2 | sha-256 of everything before (32).

use sha2::{Digest, Sha256};

use super::{EigenSystem, ModelParams, Window, SOLVER_VERSION};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"AMOLABES";
pub const RECORD_FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 32 + 8 + 8;

/// Content key for an eigensystem: coupling, frequency, phase, window and
/// solver version.
pub fn record_key(params: &ModelParams, window: Window) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"amolab-eigensystem");
    h.update(params.lambda.to_bits().to_le_bytes());
    let a = params.alpha.value_dd();
    h.update(a.hi.to_bits().to_le_bytes());
    h.update(a.lo.to_bits().to_le_bytes());
    h.update(params.theta.to_bits().to_le_bytes());
    h.update(window.lo().to_le_bytes());
    h.update(window.hi().to_le_bytes());
    h.update(SOLVER_VERSION.to_le_bytes());
    h.finalize().into()
}

pub fn encode_record(key: &[u8; 32], es: &EigenSystem) -> Vec<u8> {
    let n = es.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (n + n * n) + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&RECORD_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&SOLVER_VERSION.to_le_bytes());
    out.extend_from_slice(key);
    out.extend_from_slice(&es.window().lo().to_le_bytes());
    out.extend_from_slice(&es.window().hi().to_le_bytes());
    for x in es.energies().iter().chain(es.vectors_flat()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let digest: [u8; 32] = Sha256::digest(&out).into();
    out.extend_from_slice(&digest);
    out
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn read_i64(b: &[u8], at: usize) -> i64 {
    i64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

/// Decodes and validates a record. Any mismatch (magic, versions, key,
/// length, checksum) is an error.
pub fn decode_record(bytes: &[u8], expected_key: &[u8; 32]) -> Result<EigenSystem> {
    let fail = |why: &str| Err(Error::Record(why.to_string()));
    if bytes.len() < HEADER_LEN + 32 {
        return fail("truncated header");
    }
    if &bytes[..8] != MAGIC {
        return fail("bad magic");
    }
    if read_u32(bytes, 8) != RECORD_FORMAT_VERSION {
        return fail("format version mismatch");
    }
    if read_u32(bytes, 12) != SOLVER_VERSION {
        return fail("solver version mismatch");
    }
    if &bytes[16..48] != expected_key {
        return fail("key mismatch");
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    let actual: [u8; 32] = Sha256::digest(body).into();
    if actual != digest {
        return fail("checksum mismatch");
    }
    let window = Window::new(read_i64(bytes, 48), read_i64(bytes, 56))?;
    let n = window.len();
    if body.len() != HEADER_LEN + 8 * (n + n * n) {
        return fail("payload length mismatch");
    }
    let floats: Vec<f64> = body[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (energies, vectors) = floats.split_at(n);
    EigenSystem::from_parts(window, energies.to_vec(), vectors.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Frequency;
    use crate::operator::{build_hamiltonian, eigensystem};

    fn sample() -> (ModelParams, Window, EigenSystem) {
        let p = ModelParams::new(2.5, Frequency::golden(), 0.17).unwrap();
        let w = Window::new(-6, 5).unwrap();
        let es = eigensystem(&build_hamiltonian(&p, w)).unwrap();
        (p, w, es)
    }

    #[test]
    fn round_trip() {
        let (p, w, es) = sample();
        let key = record_key(&p, w);
        let bytes = encode_record(&key, &es);
        assert_eq!(decode_record(&bytes, &key).unwrap(), es);
    }

    #[test]
    fn corruption_detected() {
        let (p, w, es) = sample();
        let key = record_key(&p, w);
        let mut bytes = encode_record(&key, &es);
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x01;
        assert!(decode_record(&bytes, &key).is_err());
    }

    #[test]
    fn key_depends_on_every_parameter() {
        let (p, w, _) = sample();
        let k = record_key(&p, w);
        assert_ne!(k, record_key(&p.with_theta(0.18), w));
        assert_ne!(k, record_key(&p, w.shifted(1)));
        let q = ModelParams::new(2.6, Frequency::golden(), 0.17).unwrap();
        assert_ne!(k, record_key(&q, w));
        let r = ModelParams::new(2.5, Frequency::silver(), 0.17).unwrap();
        assert_ne!(k, record_key(&r, w));
    }
}
