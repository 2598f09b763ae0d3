//! Phoenix parser fuzzing, shared by the data tests and the acceptance run.

use std::panic::{catch_unwind, AssertUnwindSafe};

use sar_attention::data::phoenix::{encode_phoenix, parse_mstar_phoenix};
use sar_attention::rng::SplitMix64;

#[derive(Debug, Default, PartialEq, Eq)]
pub struct FuzzStats {
    pub total: usize,
    pub parsed: usize,
    pub errors: usize,
    pub panics: usize,
}

fn valid_file(rng: &mut SplitMix64) -> Vec<u8> {
    let (rows, cols) = (1 + rng.below(6), 1 + rng.below(6));
    let mag: Vec<f32> = (0..rows * cols).map(|_| rng.uniform(0.0, 5.0) as f32).collect();
    let phase: Vec<f32> = (0..rows * cols).map(|_| rng.uniform(-3.2, 3.2) as f32).collect();
    encode_phoenix(rows, cols, &mag, &phase, &[("TargetType", "bmp2_tank")])
}

fn random_bytes(rng: &mut SplitMix64, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.below(256) as u8).collect()
}

const NASTY: [&str; 8] = ["0", "-1", "18446744073709551615", "99999999999999999999999", "", "abc", "4294967296", "1e3"];

/// One fuzz buffer; the strategy cycles with `i`.
pub fn fuzz_buffer(i: usize, rng: &mut SplitMix64) -> Vec<u8> {
    match i % 6 {
        0 => {
            let len = rng.below(300);
            random_bytes(rng, len)
        }
        1 => {
            let mut b = b"[PhoenixHeaderVer".to_vec();
            let len = rng.below(300);
            b.extend(random_bytes(rng, len));
            b
        }
        2 => {
            let f = valid_file(rng);
            let cut = rng.below(f.len());
            f[..cut].to_vec()
        }
        3 => {
            let mut f = valid_file(rng);
            for _ in 0..1 + rng.below(8) {
                let at = rng.below(f.len());
                f[at] = rng.below(256) as u8;
            }
            f
        }
        4 => {
            let key = ["NumberOfRows", "NumberOfColumns", "PhoenixHeaderLength", "NativeHeaderLength"][rng.below(4)];
            let value = NASTY[rng.below(NASTY.len())];
            let mut text = String::from("[PhoenixHeaderVer01.5]\n");
            for k in ["NumberOfRows", "NumberOfColumns", "PhoenixHeaderLength"] {
                let v = if k == key { value.to_string() } else { (1 + rng.below(80)).to_string() };
                text.push_str(&format!("{k}= {v}\n"));
            }
            if key == "NativeHeaderLength" {
                text.push_str(&format!("NativeHeaderLength= {value}\n"));
            }
            text.push_str("[EndofPhoenixHeader]\n");
            let mut b = text.into_bytes();
            let len = rng.below(400);
            b.extend(random_bytes(rng, len));
            b
        }
        _ => {
            // valid header, non-finite payload
            let mut f = valid_file(rng);
            let end = f.len() - 4 * rng.below(4).max(1);
            let special = [f32::NAN, f32::INFINITY, f32::NEG_INFINITY][rng.below(3)];
            let start = f.len() / 2;
            if start + 4 <= end {
                f[start..start + 4].copy_from_slice(&special.to_be_bytes());
            }
            f
        }
    }
}

pub fn fuzz_phoenix(n: usize, seed: u64) -> FuzzStats {
    let mut rng = SplitMix64::new(seed);
    let mut stats = FuzzStats::default();
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for i in 0..n {
        let buf = fuzz_buffer(i, &mut rng);
        stats.total += 1;
        match catch_unwind(AssertUnwindSafe(|| parse_mstar_phoenix(&buf, 8))) {
            Ok(Ok(_)) => stats.parsed += 1,
            Ok(Err(_)) => stats.errors += 1,
            Err(_) => stats.panics += 1,
        }
    }
    std::panic::set_hook(hook);
    stats
}

/// Worst deviation of a parsed 4×4 chip from the min-max normalized
/// original magnitudes over `trials` random chips.
pub fn round_trip_error(trials: usize, seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let original: Vec<f64> = (0..16).map(|_| rng.uniform(0.01, 40.0)).collect();
        let mag: Vec<f32> = original.iter().map(|&v| v as f32).collect();
        let bytes = encode_phoenix(4, 4, &mag, &[0.0; 16], &[]);
        let parsed = parse_mstar_phoenix(&bytes, 4).unwrap();
        let lo = original.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = original.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (p, o) in parsed.image.values.iter().zip(&original) {
            worst = worst.max((p - (o - lo) / (hi - lo)).abs());
        }
    }
    worst
}
