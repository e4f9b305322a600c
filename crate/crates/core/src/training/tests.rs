use super::*;
use crate::channel::bpsk_map;
use crate::codes::{polar_build, PolarSpec};
use crate::estimator::forward_batch;
use crate::rng::seeded;
use rand::Rng;

fn polar(n: usize, k: usize) -> LinearCode {
    polar_build(&PolarSpec::new(n, k)).unwrap()
}

fn small_cfg(steps: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 64,
        steps,
        scale: 1,
        time_steps: 2,
        depth: 2,
        log_every: 10,
        ..TrainConfig::default()
    }
}

#[test]
fn defaults() {
    let c = TrainConfig::default();
    assert_eq!(c.batch_size, 4096);
    assert_eq!((c.scale, c.time_steps, c.depth), (6, 5, 5));
    assert_eq!(c.steps, 20_000);
    assert_eq!(c.learning_rate, 1e-3);
    assert_eq!(c.train_ebn0_db, 3.0);
    assert!(c.validate().is_ok());
    assert!(TrainConfig { batch_size: 0, ..c.clone() }.validate().is_err());
    assert!(TrainConfig { learning_rate: 0.0, ..c.clone() }.validate().is_err());
    assert!(TrainConfig { loss_epsilon: 0.0, ..c }.validate().is_err());
}

#[test]
fn loss_examples() {
    let l = loss(&[1.0, -1.0], &[0.0, 0.0], 1e-7).unwrap();
    assert!((l - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    // â = 0.999 against a = 0.
    let l = loss(&[1.0], &[-0.998], 1e-7).unwrap();
    assert!((l - 6.907755278982137).abs() < 1e-9, "{l}");
    // Perfect prediction is clamped rather than infinite.
    let l = loss(&[-1.0], &[1.0], 1e-7).unwrap();
    assert!((l + (1e-7f64).ln()).abs() < 1e-9);
    assert!(loss(&[1.0], &[1.0, 1.0], 1e-7).is_err());
}

#[test]
fn batch_loss_gradient_matches_finite_differences() {
    let mut rng = seeded(5);
    let size = 3;
    let targets: Vec<f64> = (0..size * 4).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let soft: Vec<f64> = (0..size * 4).map(|_| rng.random_range(-0.9..0.9)).collect();
    let (l, g) = batch_loss(&targets, &soft, size, 1e-7).unwrap();
    let direct: f64 = (0..size)
        .map(|i| loss(&targets[i * 4..(i + 1) * 4], &soft[i * 4..(i + 1) * 4], 1e-7).unwrap())
        .sum::<f64>()
        / size as f64;
    assert!((l - direct).abs() < 1e-12);
    let h = 1e-6;
    for j in 0..soft.len() {
        let mut p = soft.clone();
        p[j] += h;
        let mut m = soft.clone();
        m[j] -= h;
        let fd = (batch_loss(&targets, &p, size, 1e-7).unwrap().0 - batch_loss(&targets, &m, size, 1e-7).unwrap().0)
            / (2.0 * h);
        assert!((fd - g[j]).abs() < 1e-6, "coord {j}: {fd} vs {}", g[j]);
    }
}

#[test]
fn clamped_outputs_have_zero_gradient() {
    let (_, g) = batch_loss(&[1.0, 1.0], &[-1.0, 1.0], 1, 1e-7).unwrap();
    assert_eq!(g, vec![0.0, 0.0]);
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let c = EstimatorConfig::new(4, 2, 1, 1, 1).unwrap();
    let mut p = EstimatorParams::<f64>::init(c, &mut seeded(1));
    let before = p.clone();
    let mut g = EstimatorParams::<f64>::zeros(c);
    let mut rng = seeded(2);
    for b in g.blocks_mut() {
        for v in b.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let mut st = AdamState::new(&p);
    adam_step(&mut p, &g, &mut st, 1e-3).unwrap();
    for ((a, b), gg) in before.blocks().concat().iter().zip(p.blocks().concat()).zip(g.blocks().concat()) {
        let delta = b - a;
        // m̂ = g and v̂ = g² after one step, so the move is lr·g/(|g| + ε).
        let expect = -1e-3 * gg / (gg.abs() + 1e-8);
        assert!((delta - expect).abs() < 1e-12, "{delta} vs {expect}");
    }
    assert_eq!(st.step_count, 1);
}

#[test]
fn adam_zero_gradient_keeps_parameters() {
    let c = EstimatorConfig::new(4, 2, 1, 1, 1).unwrap();
    let mut p = EstimatorParams::<f32>::init(c, &mut seeded(1));
    let before = p.clone();
    let g = EstimatorParams::<f32>::zeros(c);
    let mut st = AdamState::new(&p);
    for _ in 0..3 {
        adam_step(&mut p, &g, &mut st, 1e-3).unwrap();
    }
    assert_eq!(p, before);
}

#[test]
fn adam_matches_textbook_update_over_several_steps() {
    let c = EstimatorConfig::new(4, 2, 1, 1, 1).unwrap();
    let mut p = EstimatorParams::<f64>::init(c, &mut seeded(4));
    let mut reference = p.blocks().concat();
    let mut m = vec![0.0; reference.len()];
    let mut v = vec![0.0; reference.len()];
    let mut st = AdamState::new(&p);
    let mut rng = seeded(8);
    for t in 1..=5 {
        let mut g = EstimatorParams::<f64>::zeros(c);
        for b in g.blocks_mut() {
            for x in b.iter_mut() {
                *x = rng.random_range(-2.0..2.0);
            }
        }
        adam_step(&mut p, &g, &mut st, 0.01).unwrap();
        for (i, gi) in g.blocks().concat().into_iter().enumerate() {
            m[i] = 0.9 * m[i] + 0.1 * gi;
            v[i] = 0.999 * v[i] + 0.001 * gi * gi;
            let mh = m[i] / (1.0 - 0.9f64.powi(t));
            let vh = v[i] / (1.0 - 0.999f64.powi(t));
            reference[i] -= 0.01 * mh / (vh.sqrt() + 1e-8);
        }
    }
    for (a, b) in p.blocks().concat().iter().zip(&reference) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn noiseless_batch_has_no_flips() {
    let code = polar(8, 4);
    let noise = vec![vec![1.0; 8]; 2];
    let msgs = vec![BitVector::ones(4), BitVector::from_bits(&[1, 0, 0, 1])];
    let b = batch_from_noise(&code, &msgs, &noise).unwrap();
    assert_eq!(b.size, 2);
    assert_eq!(b.input_dim, 12);
    assert!(b.targets.iter().all(|&t| t == 1.0));
    for i in 0..2 {
        assert!(b.input(i)[..8].iter().all(|&v| v == 1.0));
        assert!(b.input(i)[8..].iter().all(|&v| v == 1.0));
    }
}

#[test]
fn batch_targets_match_independent_decoding() {
    let code = polar(16, 8);
    let mut rng = seeded(11);
    let noise = draw_noise(16, 0.9, 50, &mut rng).unwrap();
    let msgs = vec![BitVector::ones(8); 50];
    let b = batch_from_noise(&code, &msgs, &noise).unwrap();
    for (i, z) in noise.iter().enumerate() {
        // Recompute via the additive-form channel: y = x_s · z.
        let x_s = bpsk_map(&code.encode(&msgs[i]).unwrap());
        let y: Vec<f64> = x_s.iter().zip(z).map(|(a, b)| a * b).collect();
        let bits: Vec<u8> = y.iter().map(|&v| u8::from(v <= 0.0)).collect();
        let u_noisy = code.pseudo_inverse(&BitVector::from_bits(&bits)).unwrap();
        for j in 0..8 {
            let flip = u_noisy.get(j) != msgs[i].get(j);
            assert_eq!(b.target(i)[j], if flip { -1.0 } else { 1.0 });
        }
        for (a, v) in b.input(i)[..16].iter().zip(y) {
            assert!((a - v.abs()).abs() < 1e-15);
        }
    }
}

#[test]
fn batch_errors() {
    let code = polar(8, 4);
    assert!(batch_from_noise(&code, &[BitVector::ones(4)], &[]).is_err());
    assert!(batch_from_noise(&code, &[BitVector::ones(4)], &[vec![1.0; 7]]).is_err());
    assert!(draw_noise(8, 0.0, 1, &mut seeded(0)).is_err());
}

#[test]
fn zero_steps_returns_initial_parameters() {
    let code = polar(8, 4);
    let cfg = small_cfg(0);
    let out = train::<f32>(&code, &cfg, |_| {}).unwrap();
    let init = EstimatorParams::<f32>::init(cfg.estimator_config(&code).unwrap(), &mut rng::stream(cfg.seed, &[0]));
    assert_eq!(out.params, init);
    assert!(out.losses.is_empty());
}

#[test]
fn training_is_deterministic() {
    let code = polar(8, 4);
    let cfg = small_cfg(15);
    let a = train::<f32>(&code, &cfg, |_| {}).unwrap();
    let b = train::<f32>(&code, &cfg, |_| {}).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.losses, b.losses);
    let c = train::<f32>(&code, &TrainConfig { seed: 1, ..cfg }, |_| {}).unwrap();
    assert_ne!(a.losses, c.losses);
}

#[test]
fn observer_sees_windowed_means() {
    let code = polar(8, 4);
    let cfg = small_cfg(25);
    let mut seen = Vec::new();
    let out = train::<f32>(&code, &cfg, |p| seen.push(p.step)).unwrap();
    assert_eq!(seen, vec![10, 20, 25]);
    let first: f64 = out.losses[..10].iter().sum::<f64>() / 10.0;
    assert!((out.log[0].loss - first).abs() < 1e-12);
    let csv = log_csv(&out.log);
    assert!(csv.starts_with("step,loss\n10,"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn loss_decreases_on_small_polar_code() {
    let code = polar(16, 8);
    let cfg = TrainConfig {
        batch_size: 128,
        steps: 400,
        scale: 2,
        time_steps: 2,
        depth: 2,
        learning_rate: 3e-3,
        log_every: 50,
        ..TrainConfig::default()
    };
    let out = train::<f32>(&code, &cfg, |_| {}).unwrap();
    let head: f64 = out.losses[..50].iter().sum::<f64>() / 50.0;
    let tail: f64 = out.losses[350..].iter().sum::<f64>() / 50.0;
    assert!(tail < 0.9 * head, "head {head}, tail {tail}");
}

#[test]
fn end_to_end_loss_gradient_matches_finite_differences() {
    let code = polar(8, 4);
    let c = EstimatorConfig::new(8, 4, 1, 2, 2).unwrap();
    let mut p = EstimatorParams::<f64>::init(c, &mut seeded(3));
    let snr = SnrPoint::new(1.0, code.rate()).unwrap();
    let batch = make_batch(&code, &snr, 4, &mut seeded(4)).unwrap();
    let objective = |p: &EstimatorParams<f64>| {
        let (out, _) = forward_batch(p, &batch.inputs, batch.size).unwrap();
        batch_loss(&batch.targets, &out, batch.size, 1e-7).unwrap().0
    };
    let (out, tape) = forward_batch(&p, &batch.inputs, batch.size).unwrap();
    let (_, g) = batch_loss(&batch.targets, &out, batch.size, 1e-7).unwrap();
    let analytic = backward(&p, &tape, &g).unwrap().blocks().concat();
    let nblocks = p.blocks().len();
    let mut idx = 0;
    let mut worst = 0.0f64;
    for bi in 0..nblocks {
        let len = p.blocks()[bi].len();
        // A stride keeps the test fast while touching every block.
        for j in (0..len).step_by(7) {
            let orig = p.blocks()[bi][j];
            p.blocks_mut()[bi][j] = orig + 1e-5;
            let plus = objective(&p);
            p.blocks_mut()[bi][j] = orig - 1e-5;
            let minus = objective(&p);
            p.blocks_mut()[bi][j] = orig;
            let fd = (plus - minus) / 2e-5;
            let a = analytic[idx + j];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6));
        }
        idx += len;
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn random_messages_give_the_same_batch_as_all_ones() {
    let code = polar(16, 8);
    let mut rng = seeded(13);
    let noise = draw_noise(16, 1.0, 40, &mut rng).unwrap();
    let ones = vec![BitVector::ones(8); 40];
    let random: Vec<BitVector> = (0..40).map(|_| crate::channel::random_message(8, &mut rng)).collect();
    let a = batch_from_noise(&code, &ones, &noise).unwrap();
    let b = batch_from_noise(&code, &random, &noise).unwrap();
    assert_eq!(a, b);
    // Each target is the sign form of A·z_b, with z_b the hard-decided noise sign.
    for (i, z) in noise.iter().enumerate() {
        let z_b = BitVector::from_bools(&z.iter().map(|&v| v <= 0.0).collect::<Vec<_>>());
        let w = code.pseudo_inverse(&z_b).unwrap();
        let sign: Vec<f64> = w.iter().map(|f| if f { -1.0 } else { 1.0 }).collect();
        assert_eq!(a.target(i), &sign[..]);
    }
}

#[test]
fn default_batch_shape() {
    let code = polar(64, 32);
    let snr = SnrPoint::new(3.0, code.rate()).unwrap();
    let b = make_batch(&code, &snr, 4096, &mut seeded(0)).unwrap();
    assert_eq!(b.inputs.len(), 4096 * 96);
    assert_eq!(b.targets.len(), 4096 * 32);
    assert!(b.targets.iter().all(|&t| t == 1.0 || t == -1.0));
}
