use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// A generator determined only by `seed` and the key parts, so draws do
/// not depend on processing order.
pub fn keyed_rng(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn keys_separate_streams() {
        let a: u64 = keyed_rng(1, &["d1", "postcode"]).gen();
        let b: u64 = keyed_rng(1, &["d1", "postcode"]).gen();
        let c: u64 = keyed_rng(1, &["d1p", "ostcode"]).gen();
        let d: u64 = keyed_rng(2, &["d1", "postcode"]).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
