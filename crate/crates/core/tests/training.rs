use meshdn_core::losses::LossWeights;
use meshdn_core::noise::{NoiseGrid, NoiseKind};
use meshdn_core::trainer::{TrainConfig, Trainer};
use meshdn_core::{canonicalize, shapes, NetConfig, NetParams};

fn overfit_config(weights: LossWeights, steps: usize) -> TrainConfig {
    TrainConfig {
        steps,
        seed: 4,
        weights,
        net: NetConfig::with_widths(8, 6),
        noise_grid: NoiseGrid::single(NoiseKind::Gaussian, 0.02),
        augment_rotation: false,
        fixed_noise: true,
        ..TrainConfig::default()
    }
}

fn losses(config: TrainConfig, pick: impl Fn(&meshdn_core::trainer::StepReport) -> f64) -> Vec<f64> {
    let (mesh, _) = canonicalize(&shapes::icosphere(2, 1.0)).unwrap();
    let params = NetParams::init(&config.net, 1);
    let mut trainer = Trainer::new(config, params, vec![mesh]).unwrap();
    let mut out = Vec::new();
    trainer
        .run(|_, r| {
            out.push(pick(r));
            Ok(())
        })
        .unwrap();
    assert_eq!(trainer.faults, 0);
    out
}

#[test]
fn feature_extractor_loss_decreases_monotonically() {
    let weights = LossWeights {
        lambda_fe: 1.0,
        ..LossWeights::zero()
    };
    let fe = losses(overfit_config(weights, 100), |r| r.components.fe);
    for (i, w) in fe.windows(2).enumerate() {
        assert!(w[1] < w[0], "step {}: {} -> {}", i + 1, w[0], w[1]);
    }
}

#[test]
fn overfit_window_averages_decrease() {
    let loss = losses(overfit_config(LossWeights::default(), 2000), |r| r.loss);
    let means: Vec<f64> = loss.chunks(200).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    for (i, w) in means.windows(2).enumerate() {
        assert!(w[1] < w[0], "window {}: {} -> {}", i + 1, w[0], w[1]);
    }
}

#[test]
fn same_seed_same_trajectory() {
    let config = TrainConfig {
        steps: 30,
        net: NetConfig::with_widths(6, 4),
        ..TrainConfig::default()
    };
    let a = losses(config.clone(), |r| r.loss);
    let b = losses(config, |r| r.loss);
    assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
}

#[test]
fn zero_weights_leave_parameters_untouched() {
    let config = TrainConfig {
        steps: 5,
        weights: LossWeights::zero(),
        net: NetConfig::with_widths(4, 3),
        ..TrainConfig::default()
    };
    let (mesh, _) = canonicalize(&shapes::octahedron()).unwrap();
    let params = NetParams::init(&config.net, 2);
    let mut trainer = Trainer::new(config, params.clone(), vec![mesh.clone()]).unwrap();
    trainer
        .run(|_, r| {
            assert_eq!(r.loss, 0.0);
            Ok(())
        })
        .unwrap();
    assert_eq!(trainer.params, params);
    assert_eq!(trainer.meshes().next().unwrap(), &mesh);
}
