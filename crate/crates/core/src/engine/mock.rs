//! Keyed-hash stand-ins for the map and reduce functions.
//!
//! Both are SHA-256 in counter mode, so outputs of any length are pure
//! functions of their inputs and any wrong input bit changes the output.

use sha2::{Digest, Sha256};

fn keyed_stream(domain: &[u8], ids: &[u64], data: &[u8], out_bytes: usize) -> Vec<u8> {
    let mut prefix = Sha256::new();
    prefix.update((domain.len() as u64).to_le_bytes());
    prefix.update(domain);
    for id in ids {
        prefix.update(id.to_le_bytes());
    }
    prefix.update((data.len() as u64).to_le_bytes());
    prefix.update(data);

    let mut out = Vec::with_capacity(out_bytes + 32);
    let mut counter = 0u64;
    while out.len() < out_bytes {
        let mut h = prefix.clone();
        h.update(counter.to_le_bytes());
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(out_bytes);
    out
}

/// Content of file `w_n`, `bits / 8` bytes.
pub fn file_content(seed: u64, n: usize, bits: usize) -> Vec<u8> {
    keyed_stream(b"madc/file", &[seed, n as u64], &[], bits / 8)
}

/// `v_{q,n} = g_{q,n}(w_n)`, `beta / 8` bytes.
pub fn mock_map(seed: u64, q: usize, n: usize, file: &[u8], beta: usize) -> Vec<u8> {
    keyed_stream(b"madc/map", &[seed, q as u64, n as u64], file, beta / 8)
}

/// `φ_q` evaluated on the ordered intermediate values `v_{q,1}, ..., v_{q,N}`.
pub fn mock_reduce<I, B>(q: usize, ivs: I, output_bits: usize) -> Vec<u8>
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut concat = Vec::new();
    let mut count = 0u64;
    for iv in ivs {
        let iv = iv.as_ref();
        concat.extend_from_slice(&(iv.len() as u64).to_le_bytes());
        concat.extend_from_slice(iv);
        count += 1;
    }
    keyed_stream(b"madc/reduce", &[q as u64, count], &concat, output_bits / 8)
}
