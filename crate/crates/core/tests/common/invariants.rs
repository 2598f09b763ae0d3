//! Per-input attention-block invariants, shared by the property tests and
//! the acceptance run.

use sar_attention::attention::{AttentionKind, CbamBlock, EcaBlock, SeBlock};
use sar_attention::rng::SplitMix64;
use sar_attention::{Tape, Tensor, Var};

fn in_open_unit(t: &Tensor) -> bool {
    t.data().iter().all(|&g| g > 0.0 && g < 1.0)
}

/// Builds a random block and input from `seed` (input magnitude spans
/// 1e-3..1e3 so gates reach saturation) and checks shape preservation,
/// gates strictly inside (0, 1) and `max|out| <= max|in|`.
pub fn check_block(kind: AttentionKind, seed: u64) -> Result<(), String> {
    let mut rng = SplitMix64::new(seed);
    let (n, c, h, w) = (1 + rng.below(3), 1 + rng.below(24), 1 + rng.below(8), 1 + rng.below(8));
    let magnitude = 10f64.powf(rng.uniform(-3.0, 3.0));
    let x = Tensor::from_fn([n, c, h, w], |_| magnitude * rng.normal());
    let mut tape = Tape::new();
    let u = tape.constant(x.clone());
    let (out, gates): (Var, Vec<Var>) = match kind {
        AttentionKind::Se => {
            let b = SeBlock::new("se", c, 1 + rng.below(16), &mut rng);
            (b.forward(&mut tape, u).unwrap(), vec![b.excitation(&mut tape, u).unwrap()])
        }
        AttentionKind::Eca => {
            let b = EcaBlock::new("eca", c, 1 + rng.below(16), &mut rng).unwrap();
            (b.forward(&mut tape, u).unwrap(), vec![b.gates(&mut tape, u).unwrap()])
        }
        AttentionKind::Cbam => {
            let k = [1, 3, 5, 7][rng.below(4)];
            let b = CbamBlock::new("cbam", c, 1 + rng.below(16), k, &mut rng).unwrap();
            let (mc, fc) = b.channel_attention(&mut tape, u).unwrap();
            let (ms, _) = b.spatial_attention(&mut tape, fc).unwrap();
            (b.forward(&mut tape, u).unwrap(), vec![mc, ms])
        }
        AttentionKind::None => return Ok(()),
    };
    let y = tape.value(out);
    if y.shape() != x.shape() {
        return Err(format!("seed {seed}: shape {:?} -> {:?}", x.shape(), y.shape()));
    }
    for g in gates {
        if !in_open_unit(tape.value(g)) {
            return Err(format!("seed {seed}: gate outside (0, 1)"));
        }
    }
    if y.max_abs() > x.max_abs() {
        return Err(format!("seed {seed}: max|out| {} > max|in| {}", y.max_abs(), x.max_abs()));
    }
    Ok(())
}

/// Largest deviation from the zero-weight closed forms: SE and ECA give
/// 0.5·x, CBAM gives 0.25·x.
pub fn zero_weight_errors(seed: u64) -> [f64; 3] {
    let mut rng = SplitMix64::new(seed);
    let x = Tensor::from_fn([2, 16, 5, 7], |_| rng.normal() * 3.0);
    let run = |f: &dyn Fn(&mut Tape, Var) -> Var, factor: f64| {
        let mut tape = Tape::new();
        let u = tape.constant(x.clone());
        let y = f(&mut tape, u);
        tape.value(y).max_abs_diff(&x.map(|v| factor * v))
    };
    let mut se = SeBlock::new("se", 16, 4, &mut rng);
    se.w1.value = se.w1.value.map(|_| 0.0);
    se.w2.value = se.w2.value.map(|_| 0.0);
    let mut eca = EcaBlock::new("eca", 16, 4, &mut rng).unwrap();
    eca.conv.weight.value = eca.conv.weight.value.map(|_| 0.0);
    let mut cbam = CbamBlock::new("cbam", 16, 4, 7, &mut rng).unwrap();
    for p in [&mut cbam.w1, &mut cbam.w2, &mut cbam.spatial] {
        p.value = p.value.map(|_| 0.0);
    }
    [
        run(&|t, u| se.forward(t, u).unwrap(), 0.5),
        run(&|t, u| eca.forward(t, u).unwrap(), 0.5),
        run(&|t, u| cbam.forward(t, u).unwrap(), 0.25),
    ]
}
