use super::*;
use crate::codec::{embed_sequence, flatten};
use crate::catalog::tests::small_catalog;
use crate::design::{DesignNode, NodeKind};

fn tiny(norm: NormPlacement, input_dim: usize) -> ModelConfig {
    ModelConfig {
        d_model: 8,
        n_layers: 2,
        n_heads: 2,
        d_ff: 12,
        input_dim,
        max_seq_len: 32,
        norm_placement: norm,
        ..Default::default()
    }
}

fn random_seq(rng: &mut Stream, width: usize, len: usize) -> SparseSequence {
    SparseSequence {
        width,
        positions: (0..len).collect(),
        rows: (0..len)
            .map(|_| {
                let mut cols: Vec<usize> = (0..3).map(|_| rng.below(width)).collect();
                cols.sort_unstable();
                cols.dedup();
                cols.into_iter().map(|c| (c, rng.uniform(-1.0, 1.0))).collect()
            })
            .collect(),
    }
}

fn model(norm: NormPlacement, seed: u64) -> SurrogateModel {
    let mut m = SurrogateModel::init(tiny(norm, 10), FloatNormalizer::identity(), [0; 32], seed).unwrap();
    // break the symmetry of the zero biases and unit gains
    let mut rng = Stream::new(seed, Purpose::Init, 99);
    for w in m.params_mut() {
        *w += rng.uniform(-0.1, 0.1);
    }
    m
}

fn max_rel_err(m: &SurrogateModel, batch: &[SparseSequence], labels: &[f64]) -> f64 {
    let (_, analytic) = m.loss_and_gradients(batch, labels).unwrap();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = m.clone();
    for (i, &g) in analytic.iter().enumerate() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + eps;
        let up = probe.loss_and_gradients(batch, labels).unwrap().0;
        probe.params_mut()[i] = orig - eps;
        let down = probe.loss_and_gradients(batch, labels).unwrap().0;
        probe.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let scale = g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((g - numeric).abs() / scale);
    }
    worst
}

#[test]
fn gradient_check_post_norm() {
    let mut rng = Stream::new(5, Purpose::Design, 0);
    let batch: Vec<_> = (0..3).map(|i| random_seq(&mut rng, 10, 3 + i)).collect();
    let err = max_rel_err(&model(NormPlacement::Post, 1), &batch, &[1.0, 0.0, 1.0]);
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradient_check_pre_norm() {
    let mut rng = Stream::new(6, Purpose::Design, 0);
    let batch: Vec<_> = (0..3).map(|i| random_seq(&mut rng, 10, 2 + i)).collect();
    let err = max_rel_err(&model(NormPlacement::Pre, 2), &batch, &[0.0, 1.0, 1.0]);
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn batch_and_permutation_independence() {
    let m = model(NormPlacement::Post, 3);
    let mut rng = Stream::new(7, Purpose::Design, 0);
    let batch: Vec<_> = (0..32).map(|i| random_seq(&mut rng, 10, 1 + i % 9)).collect();
    let all = m.forward_sparse(&batch).unwrap();
    let single = m.forward_sparse(&batch[5..6]).unwrap();
    assert!((all[5] - single[0]).abs() <= 1e-10);
    let reversed: Vec<_> = batch.iter().rev().cloned().collect();
    let mut back = m.forward_sparse(&reversed).unwrap();
    back.reverse();
    assert_eq!(all, back);
}

#[test]
fn padding_does_not_change_logit() {
    let cat = small_catalog();
    let tree = DesignNode::new(NodeKind::hub(4, true))
        .with_child(DesignNode::prop_arm(200.0, "motor_a", "prop_10x5", "esc_30", [1.0, -1.0], 0.0, 2.0, 3.0))
        .with_battery("bat_3s");
    let seq = flatten(&tree).unwrap();
    let norm = FloatNormalizer::identity();
    let m = SurrogateModel::for_catalog(tiny(NormPlacement::Post, 0), &cat, norm.clone(), 4).unwrap();
    let short = embed_sequence(&seq, &cat, &norm, 12).unwrap();
    let long = embed_sequence(&seq, &cat, &norm, 32).unwrap();
    let a = m.forward(&[short]).unwrap()[0];
    let b = m.forward(&[long]).unwrap()[0];
    assert!((a - b).abs() <= 1e-10);
    assert_eq!(m.embed(&seq, &cat).unwrap().len(), 12);
}

#[test]
fn zero_readout_gives_bias() {
    let mut m = model(NormPlacement::Post, 8);
    let l = m.layout().clone();
    l.readout_w.of_mut(m.params_mut()).fill(0.0);
    l.readout_b.of_mut(m.params_mut())[0] = 0.375;
    let mut rng = Stream::new(1, Purpose::Design, 0);
    let batch: Vec<_> = (0..4).map(|_| random_seq(&mut rng, 10, 5)).collect();
    assert!(m.forward_sparse(&batch).unwrap().iter().all(|z| *z == 0.375));
}

#[test]
fn sigmoid_and_loss_values() {
    assert_eq!(sigmoid(0.0), 0.5);
    assert!((bce_with_logits(0.0, 1.0) - core::f64::consts::LN_2).abs() < 1e-15);
    for z in [-1e4, -40.0, 40.0, 1e4] {
        let p = sigmoid(z);
        assert!(p > 0.0 && p < 1.0);
    }
    assert!(bce_with_logits(1e4, 1.0).is_finite());
    // large positive logits with label 1: loss shrinks towards 0
    let losses: Vec<f64> = [1.0, 5.0, 10.0, 30.0].iter().map(|z| bce_with_logits(*z, 1.0)).collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn attention_rows_normalized_and_padding_zero() {
    let cat = small_catalog();
    let tree = DesignNode::new(NodeKind::Fuselage).with_child(DesignNode::wing(500.0, 100.0, 0.0, 0.0));
    let seq = flatten(&tree).unwrap();
    let m = SurrogateModel::for_catalog(tiny(NormPlacement::Post, 0), &cat, FloatNormalizer::identity(), 9).unwrap();
    let emb = embed_sequence(&seq, &cat, m.normalizer(), 10).unwrap();
    let maps = m.attention_weights(&emb).unwrap();
    assert_eq!(maps.len(), 4);
    let real = seq.len();
    for a in &maps {
        for i in 0..real {
            let row = &a[i * 10..(i + 1) * 10];
            assert!((row[..real].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row[real..].iter().all(|w| *w == 0.0));
        }
    }
}

#[test]
fn input_errors() {
    let m = model(NormPlacement::Post, 1);
    let mut rng = Stream::new(1, Purpose::Design, 0);
    let wrong = random_seq(&mut rng, 11, 3);
    assert!(matches!(m.forward_sparse(&[wrong]), Err(SurrogateError::DimensionMismatch { .. })));
    let empty = SparseSequence {
        width: 10,
        positions: vec![],
        rows: vec![],
    };
    assert!(matches!(m.forward_sparse(&[empty]), Err(SurrogateError::EmptyMask)));
    let long = random_seq(&mut rng, 10, 33);
    assert!(matches!(m.forward_sparse(&[long]), Err(SurrogateError::TooLong { .. })));
    let ok = random_seq(&mut rng, 10, 3);
    assert!(matches!(m.loss_and_gradients(core::slice::from_ref(&ok), &[0.5]), Err(SurrogateError::BadLabel(_))));
    assert!(matches!(m.loss_and_gradients(&[ok], &[]), Err(SurrogateError::LabelCount { .. })));
}

#[test]
fn config_validation() {
    assert!(ModelConfig { n_heads: 3, ..Default::default() }.validate().is_err());
    assert!(ModelConfig { dropout: 0.1, ..Default::default() }.validate().is_err());
    assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
    assert!(TrainConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
    let l = ParamLayout::new(&ModelConfig::default());
    assert_eq!(l.input_w.len, 741 * 200);
    assert_eq!(l.readout_b.start + 1, l.total);
}

#[test]
fn training_history_and_determinism() {
    let mut rng = Stream::new(11, Purpose::Design, 0);
    let xs: Vec<_> = (0..12).map(|i| random_seq(&mut rng, 10, 2 + i % 4)).collect();
    let ys: Vec<u8> = (0..12).map(|i| (i % 3 == 0) as u8).collect();
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 5,
        ..Default::default()
    };
    let (a, h) = train(model(NormPlacement::Post, 1), &xs, &ys, &cfg).unwrap();
    assert_eq!(h.len(), 1);
    assert_eq!(h[0].epoch, 1);
    let (b, _) = train(model(NormPlacement::Post, 1), &xs, &ys, &cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, model(NormPlacement::Post, 1));

    let all_zero = vec![0u8; 12];
    assert!(matches!(
        train(model(NormPlacement::Post, 1), &xs, &all_zero, &cfg),
        Err(SurrogateError::DegenerateDataset)
    ));
    let bad = TrainConfig { epochs: 0, ..cfg };
    assert!(train(model(NormPlacement::Post, 1), &xs, &ys, &bad).is_err());
}

#[test]
fn huge_learning_rate_diverges() {
    let mut rng = Stream::new(12, Purpose::Design, 0);
    let xs: Vec<_> = (0..8).map(|_| random_seq(&mut rng, 10, 3)).collect();
    let ys: Vec<u8> = (0..8).map(|i| (i % 2) as u8).collect();
    let cfg = TrainConfig {
        learning_rate: 1e300,
        epochs: 5,
        batch_size: 8,
        ..Default::default()
    };
    assert!(matches!(
        train(model(NormPlacement::Post, 1), &xs, &ys, &cfg),
        Err(SurrogateError::Divergence { .. })
    ));
}
