//! Stable hashing and the provenance comment written at the top of every
//! artifact file, so that any output can be tied back to the exact config
//! and seed that produced it.

/// 64-bit FNV-1a. Stable across platforms and versions, unlike the std
/// hasher, so artifact headers never drift.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// First line of every written artifact. Contains no timestamps or paths,
/// so identical runs stay byte-identical.
pub fn header(config_hash: u64, seed: u64, stage: &str) -> String {
    format!("# provenance config={config_hash:016x} seed={seed} stage={stage}\n")
}
