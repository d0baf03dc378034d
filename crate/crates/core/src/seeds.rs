//! Deterministic seed fan-out.
//!
//! All randomness in a run flows from one root seed. Independent consumers
//! (optimizer, bootstrap members, drive-cycle generator) draw their own seed
//! through [`subseed`] with a fixed stream number, so adding a consumer never
//! perturbs the streams of existing ones.

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for stream `stream` from `root`.
pub fn subseed(root: u64, stream: u64) -> u64 {
    splitmix64(root ^ splitmix64(stream))
}

/// Well-known stream numbers used across the workbench.
pub mod streams {
    pub const OPTIMIZER: u64 = 1;
    pub const BOOTSTRAP: u64 = 2;
    pub const DRIVE_CYCLE: u64 = 3;
    pub const FOREST: u64 = 4;
    pub const SPLITS: u64 = 5;
    pub const SYNTHETIC_DATA: u64 = 6;
}
