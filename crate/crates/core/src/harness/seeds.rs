/// What a derived seed is used for; keeps child streams independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPurpose {
    Folds = 1,
    Init = 2,
    Shuffle = 3,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed for `(master, fold, purpose)`: three chained SplitMix64 rounds,
/// each folding in one component.
pub fn derive_seed(master: u64, fold: u64, purpose: SeedPurpose) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ fold);
    splitmix64(h ^ purpose as u64)
}
