use ndarray::Array2;
use neuralkit::{
    grad_check, softmax_cross_entropy_batch, DenseNet, GradCheckConfig, GruMasks, GruNet,
    Parameterized,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

fn mlp_fixture() -> (DenseNet<f64>, Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let net = DenseNet::new(&[4, 64, 64, 32], &mut rng);
    let x = random_batch(&mut rng, 8, 4);
    let y = (0..8).map(|_| rng.random_range(0..32)).collect();
    (net, x, y)
}

fn mlp_loss(net: &DenseNet<f64>, x: &Array2<f64>, y: &[usize]) -> f64 {
    let (logits, _) = net.forward(&x.view()).unwrap();
    softmax_cross_entropy_batch(&logits, y).unwrap().0
}

fn mlp_grad(net: &DenseNet<f64>, x: &Array2<f64>, y: &[usize]) -> Vec<ndarray::ArrayD<f64>> {
    let (logits, cache) = net.forward(&x.view()).unwrap();
    let (_, d) = softmax_cross_entropy_batch(&logits, y).unwrap();
    net.backward(&cache, &d)
}

#[test]
fn dense_gradients_match_central_differences() {
    let (mut net, x, y) = mlp_fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let report = grad_check(
        &mut net,
        |n| mlp_loss(n, &x, &y),
        |n| mlp_grad(n, &x, &y),
        GradCheckConfig::default(),
        &mut rng,
    );
    println!("{report:?}");
    assert!(report.checked >= 200);
    assert!(report.within(1e-4), "{report:?}");
}

#[test]
fn planted_gradient_fault_is_detected() {
    let (mut net, x, y) = mlp_fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let report = grad_check(
        &mut net,
        |n| mlp_loss(n, &x, &y),
        |n| mlp_grad(n, &x, &y).into_iter().map(|g| g * 2.0).collect(),
        GradCheckConfig::default(),
        &mut rng,
    );
    assert!(report.max_rel_error > 0.3, "{report:?}");
}

struct GruFixture {
    seq: Vec<Array2<f64>>,
    labels: Vec<Vec<usize>>,
    masks: GruMasks<f64>,
}

fn gru_loss_and_grad(
    net: &GruNet<f64>,
    f: &GruFixture,
    want_grad: bool,
) -> (f64, Option<Vec<ndarray::ArrayD<f64>>>) {
    let (logits, cache) = net.forward(&f.seq, Some(f.masks.clone())).unwrap();
    let mut total = 0.0;
    let mut dl = Vec::new();
    for (l, y) in logits.iter().zip(&f.labels) {
        let (loss, d) = softmax_cross_entropy_batch(l, y).unwrap();
        total += loss;
        dl.push(d);
    }
    let grads = want_grad.then(|| net.backward(&cache, &dl).unwrap());
    (total, grads)
}

#[test]
fn gru_gradients_match_central_differences_over_eight_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut net = GruNet::<f64>::new(5, 24, 2, 3, 10, 0.5, &mut rng);
    let batch = 4;
    let fixture = GruFixture {
        seq: (0..8).map(|_| random_batch(&mut rng, batch, 5)).collect(),
        labels: (0..3)
            .map(|_| (0..batch).map(|_| rng.random_range(0..10)).collect())
            .collect(),
        masks: GruMasks::sample(&net, 8, batch, &mut rng),
    };
    let report = grad_check(
        &mut net,
        |n| gru_loss_and_grad(n, &fixture, false).0,
        |n| gru_loss_and_grad(n, &fixture, true).1.unwrap(),
        GradCheckConfig {
            samples: 400,
            ..Default::default()
        },
        &mut rng,
    );
    println!("{report:?}");
    assert!(report.checked >= 200);
    assert!(report.within(1e-4), "{report:?}");
}

#[test]
fn gru_gradients_cover_every_parameter_tensor() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = GruNet::<f64>::new(3, 6, 2, 3, 4, 0.0, &mut rng);
    let fixture = GruFixture {
        seq: (0..8).map(|_| random_batch(&mut rng, 2, 3)).collect(),
        labels: vec![vec![0, 1], vec![2, 3], vec![1, 1]],
        masks: GruMasks::sample(&net, 8, 2, &mut rng),
    };
    let grads = gru_loss_and_grad(&net, &fixture, true).1.unwrap();
    let shapes: Vec<Vec<usize>> = grads.iter().map(|g| g.shape().to_vec()).collect();
    assert_eq!(shapes, net.param_shapes());
    assert!(grads.iter().all(|g| g.iter().any(|&v| v != 0.0)));
}
