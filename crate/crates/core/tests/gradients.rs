mod support;

use std::collections::BTreeMap;

use rand::Rng;

use meshdn_core::losses::{self, LossWeights, Target};
use meshdn_core::network::{self, MeshGraph};
use meshdn_core::{canonicalize, shapes, Backend, Eval, NetConfig, NetParams, Tape, Tensor};
use support::{loss_gradient_cases, op_gradient_cases, GradCase, GRAD_INSTANCES, GRAD_TOLERANCE};

fn assert_cases(cases: &[GradCase]) {
    for c in cases {
        assert_eq!(c.instances, GRAD_INSTANCES);
        assert!(c.worst < GRAD_TOLERANCE, "{}: relative error {:e}", c.name, c.worst);
    }
}

#[test]
fn every_op_matches_central_differences() {
    let cases = op_gradient_cases();
    assert!(cases.len() >= 28);
    assert_cases(&cases);
}

#[test]
fn every_loss_matches_central_differences() {
    let cases = loss_gradient_cases();
    assert_eq!(cases.len(), 5);
    assert_cases(&cases);
}

fn toy_problem(seed: u64) -> (MeshGraph, Target, Tensor, NetParams, NetConfig) {
    let mut rng = support::rng(seed);
    let (gt, _) = canonicalize(&shapes::octahedron()).unwrap();
    let noisy = support::random_mesh_like(&mut rng, &gt, 0.05);
    let config = NetConfig::with_widths(3, 2);
    let mut params = NetParams::init(&config, seed);
    for (_, t) in params.iter_mut() {
        for x in t.data_mut() {
            *x = rng.random_range(-0.6..0.6);
        }
    }
    let graph = MeshGraph::new(&noisy).unwrap();
    (graph, Target::new(&gt).unwrap(), network::positions_tensor(&noisy), params, config)
}

fn network_loss(
    graph: &MeshGraph,
    target: &Target,
    x: &Tensor,
    params: &NetParams,
    config: &NetConfig,
    weights: &LossWeights,
) -> f64 {
    let mut b = Eval::new();
    let x = b.constant(x.clone());
    let out = network::dmdnet_forward(&mut b, graph, params, config, &x).unwrap();
    let (total, _) = losses::total_loss(&mut b, &out.denoised, &out.features, target, weights).unwrap();
    b.value(&total).data()[0]
}

fn network_gradients(
    graph: &MeshGraph,
    target: &Target,
    x: &Tensor,
    params: &NetParams,
    config: &NetConfig,
    weights: &LossWeights,
) -> BTreeMap<String, Tensor> {
    let mut tape = Tape::new();
    let x = tape.constant(x.clone());
    let out = network::dmdnet_forward(&mut tape, graph, params, config, &x).unwrap();
    let (total, _) = losses::total_loss(&mut tape, &out.denoised, &out.features, target, weights).unwrap();
    tape.backward(total).unwrap().params()
}

#[test]
fn full_network_loss_matches_central_differences() {
    let (graph, target, x, params, config) = toy_problem(3);
    let weights = LossWeights::default();
    let grads = network_gradients(&graph, &target, &x, &params, &config, &weights);
    assert_eq!(grads.len(), params.len());
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (name, t) in params.iter() {
        let g = &grads[name];
        let scale = g.data().iter().fold(1e-6f64, |m, v| m.max(v.abs()));
        for i in 0..t.len() {
            let mut p = params.clone();
            p.get_mut(name).unwrap().data_mut()[i] += h;
            let up = network_loss(&graph, &target, &x, &p, &config, &weights);
            p.get_mut(name).unwrap().data_mut()[i] -= 2.0 * h;
            let down = network_loss(&graph, &target, &x, &p, &config, &weights);
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max((numeric - g.data()[i]).abs() / scale.max(numeric.abs()));
        }
    }
    assert!(worst < 1e-3, "relative error {worst:e}");
}

#[test]
fn total_gradient_is_weighted_sum_of_components() {
    let (graph, target, x, params, config) = toy_problem(8);
    let w = LossWeights::default();
    let total = network_gradients(&graph, &target, &x, &params, &config, &w);
    let zero = LossWeights::zero();
    let parts = [
        LossWeights { lambda_v: w.lambda_v, ..zero },
        LossWeights { lambda_n: w.lambda_n, ..zero },
        LossWeights { lambda_kappa: w.lambda_kappa, gamma_h: w.gamma_h, gamma_g: w.gamma_g, ..zero },
        LossWeights { lambda_c: w.lambda_c, ..zero },
        LossWeights { lambda_fe: w.lambda_fe, ..zero },
    ];
    let part_grads: Vec<_> = parts
        .iter()
        .map(|p| network_gradients(&graph, &target, &x, &params, &config, p))
        .collect();
    for (name, g) in &total {
        for (i, &v) in g.data().iter().enumerate() {
            let sum: f64 = part_grads.iter().map(|pg| pg[name].data()[i]).sum();
            assert!((v - sum).abs() <= 1e-9 * (1.0 + v.abs()), "{name}[{i}]: {v} vs {sum}");
        }
    }
}
