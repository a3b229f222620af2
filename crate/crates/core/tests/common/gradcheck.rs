//! Central finite differences against analytic backward rules.

use tweetnet::layers::{
    dropout, gaussian_noise, global_average_pool, global_average_pool_backward, max_over_time, max_over_time_backward,
    Bidirectional, ConvBranch, Dense, Embedding, GruCell, LstmCell, Parameterized, Phase, RecurrentCell,
};
use tweetnet::numeric::{Activation, Init, RngStream, Tensor};
use tweetnet::optim::{l2_penalty, loss, LossKind};

use super::{between, random_tensor, random_vec};

pub const STEP: f64 = 1e-5;
pub const LAYER_TOL: f64 = 1e-4;
pub const LOSS_TOL: f64 = 1e-6;
pub const CONFIGS: u64 = 20;

/// Relative error with a floor on the denominator, so entries whose true
/// gradient is zero are compared absolutely.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).map(|(&a, &n)| rel_err(a, n)).fold(0.0, f64::max)
}

/// Central difference of `f(i, delta)`, which evaluates the objective with
/// entry `i` shifted by `delta`.
pub fn numeric_grad(len: usize, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    (0..len).map(|i| (f(i, STEP) - f(i, -STEP)) / (2.0 * STEP)).collect()
}

pub fn flat_params<T: Parameterized>(p: &T) -> Vec<f64> {
    p.named_params().iter().flat_map(|n| n.tensor.data().to_vec()).collect()
}

pub fn nudge<T: Parameterized + Clone>(p: &T, i: usize, delta: f64) -> T {
    let mut q = p.clone();
    let mut i = i;
    for t in q.params_mut() {
        if i < t.len() {
            t.data_mut()[i] += delta;
            return q;
        }
        i -= t.len();
    }
    panic!("parameter index out of range");
}

pub fn nudge_tensor(t: &Tensor, i: usize, delta: f64) -> Tensor {
    let mut t = t.clone();
    t.data_mut()[i] += delta;
    t
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gives every parameter, biases included, a random value.
fn scramble<T: Parameterized>(p: &mut T, scale: f64, rng: &mut RngStream) {
    for t in p.params_mut() {
        for v in t.data_mut() {
            *v = rng.uniform(-scale, scale);
        }
    }
}

/// Worst relative error over parameters and inputs of one recurrent layer
/// driven through `run`/`back`.
fn check_seq_layer<L: Parameterized + Clone>(
    layer: &L,
    xs: &Tensor,
    run: impl Fn(&L, &Tensor) -> Tensor,
    back: impl Fn(&L, &Tensor, &Tensor) -> (L, Tensor),
    rng: &mut RngStream,
) -> f64 {
    let out = run(layer, xs);
    let c = random_tensor(out.shape(), 1.0, rng);
    let (g_params, g_x) = back(layer, xs, &c);
    let n = flat_params(layer).len();
    let num_p = numeric_grad(n, |i, d| dot(run(&nudge(layer, i, d), xs).data(), c.data()));
    let num_x = numeric_grad(xs.len(), |i, d| dot(run(layer, &nudge_tensor(xs, i, d)).data(), c.data()));
    max_rel_err(&flat_params(&g_params), &num_p).max(max_rel_err(g_x.data(), &num_x))
}

fn recurrent_check<C: RecurrentCell>(make: impl Fn(usize, usize, &mut RngStream) -> C, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(seed, &[k]);
        let (input, hidden, len) = (between(1, 4, &mut rng), between(1, 4, &mut rng), between(1, 5, &mut rng));
        let mut cell = make(input, hidden, &mut rng);
        scramble(&mut cell, 0.8, &mut rng);
        let xs = random_tensor(&[len, input], 1.0, &mut rng);
        worst = worst.max(check_seq_layer(
            &cell,
            &xs,
            |c, x| c.forward_seq(x).unwrap().0,
            |c, x, g| {
                let (_, trace) = c.forward_seq(x).unwrap();
                let mut grads = c.zeros_like();
                let dx = c.backward_seq(&trace, g, &mut grads).unwrap();
                (grads, dx)
            },
            &mut rng,
        ));
    }
    worst
}

pub fn gru() -> f64 {
    recurrent_check(|i, h, r| GruCell::new(i, h, r).unwrap(), 101)
}

pub fn lstm() -> f64 {
    recurrent_check(|i, h, r| LstmCell::new(i, h, r).unwrap(), 102)
}

fn bidirectional_check<C: RecurrentCell>(make: impl Fn(usize, usize, &mut RngStream) -> C, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(seed, &[k]);
        let (input, hidden, len) = (between(1, 3, &mut rng), between(1, 3, &mut rng), between(1, 5, &mut rng));
        let fwd = make(input, hidden, &mut rng);
        let bwd = make(input, hidden, &mut rng);
        let mut layer = Bidirectional::new(fwd, bwd).unwrap();
        scramble(&mut layer, 0.8, &mut rng);
        let xs = random_tensor(&[len, input], 1.0, &mut rng);
        worst = worst.max(check_seq_layer(
            &layer,
            &xs,
            |l, x| l.run(x).unwrap().0,
            |l, x, g| {
                let (_, trace) = l.run(x).unwrap();
                let mut grads = l.zeros_like();
                let dx = l.backward(&trace, g, &mut grads).unwrap();
                (grads, dx)
            },
            &mut rng,
        ));
    }
    worst
}

pub fn bi_gru() -> f64 {
    bidirectional_check(|i, h, r| GruCell::new(i, h, r).unwrap(), 103)
}

pub fn bi_lstm() -> f64 {
    bidirectional_check(|i, h, r| LstmCell::new(i, h, r).unwrap(), 104)
}

/// One convolution branch with max-over-time pooling, at the given height.
pub fn conv_branch(height: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(105, &[height as u64, k]);
        let (dim, filters) = (between(1, 3, &mut rng), between(1, 3, &mut rng));
        let len = height + between(0, 3, &mut rng);
        let mut branch = ConvBranch::new(height, dim, filters, &mut rng).unwrap();
        scramble(&mut branch, 0.8, &mut rng);
        let xs = random_tensor(&[len, dim], 1.0, &mut rng);
        worst = worst.max(check_seq_layer(
            &branch,
            &xs,
            |b, x| Tensor::vector(b.forward(x).unwrap().0),
            |b, x, g| {
                let (_, trace) = b.forward(x).unwrap();
                let mut grads = b.zeros_like();
                let dx = b.backward(&trace, g.data(), &mut grads).unwrap();
                (grads, dx)
            },
            &mut rng,
        ));
    }
    worst
}

pub fn max_pool() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(106, &[k]);
        let (len, ch) = (between(1, 6, &mut rng), between(1, 4, &mut rng));
        let map = random_tensor(&[len, ch], 1.0, &mut rng);
        let c = random_vec(ch, 1.0, &mut rng);
        let (_, argmax) = max_over_time(&map);
        let analytic = max_over_time_backward(&argmax, &c, len).unwrap();
        let num = numeric_grad(map.len(), |i, d| dot(&max_over_time(&nudge_tensor(&map, i, d)).0, &c));
        worst = worst.max(max_rel_err(analytic.data(), &num));
    }
    worst
}

pub fn average_pool() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(107, &[k]);
        let (len, dim) = (between(1, 6, &mut rng), between(1, 4, &mut rng));
        let real = between(1, len, &mut rng);
        let mask: Vec<u8> = (0..len).map(|t| u8::from(t < real)).collect();
        let seq = random_tensor(&[len, dim], 1.0, &mut rng);
        let c = random_vec(dim, 1.0, &mut rng);
        let analytic = global_average_pool_backward(seq.shape(), &mask, &c).unwrap();
        let num = numeric_grad(seq.len(), |i, d| {
            dot(&global_average_pool(&nudge_tensor(&seq, i, d), &mask).unwrap(), &c)
        });
        worst = worst.max(max_rel_err(analytic.data(), &num));
    }
    worst
}

pub fn dense() -> f64 {
    let acts = [None, Some(Activation::Sigmoid), Some(Activation::Tanh), Some(Activation::Softmax)];
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(108, &[k]);
        let act = acts[k as usize % acts.len()];
        let (input, output) = (between(1, 5, &mut rng), between(1, 4, &mut rng));
        let mut layer = Dense::new(input, output, act, Init::GlorotUniform, &mut rng).unwrap();
        scramble(&mut layer, 0.8, &mut rng);
        let xs = Tensor::vector(random_vec(input, 1.0, &mut rng));
        worst = worst.max(check_seq_layer(
            &layer,
            &xs,
            |l, x| Tensor::vector(l.forward(x.data()).unwrap().0),
            |l, x, g| {
                let (_, trace) = l.forward(x.data()).unwrap();
                let mut grads = l.zeros_like();
                let dx = l.backward(&trace, g.data(), &mut grads).unwrap();
                (grads, Tensor::vector(dx))
            },
            &mut rng,
        ));
    }
    worst
}

pub fn embedding() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(109, &[k]);
        let (vocab, dim, len) = (between(2, 6, &mut rng), between(1, 4, &mut rng), between(1, 6, &mut rng));
        let layer = Embedding::new(random_tensor(&[vocab, dim], 1.0, &mut rng), true).unwrap();
        let ids: Vec<usize> = (0..len).map(|_| rng.below(vocab)).collect();
        let c = random_tensor(&[len, dim], 1.0, &mut rng);
        let mut grads = layer.zeros_like();
        layer.backward(&ids, &c, &mut grads).unwrap();
        let num = numeric_grad(vocab * dim, |i, d| dot(nudge(&layer, i, d).lookup(&ids).unwrap().data(), c.data()));
        worst = worst.max(max_rel_err(&flat_params(&grads), &num));
    }
    worst
}

/// Dropout and noise with their realized masks frozen.
pub fn stochastic() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(110, &[k]);
        let n = between(1, 8, &mut rng);
        let x = random_vec(n, 1.0, &mut rng);
        let c = random_vec(n, 1.0, &mut rng);
        let (_, mask) = dropout(&x, 0.3, Phase::Train, &mut rng).unwrap();
        let num = numeric_grad(n, |i, d| {
            let mut y = x.clone();
            y[i] += d;
            dot(&mask.apply(&y), &c)
        });
        worst = worst.max(max_rel_err(&mask.backward(&c), &num));

        let xt = Tensor::vector(x.clone());
        let (_, draw) = gaussian_noise(&xt, 0.1, Phase::Train, &mut rng).unwrap();
        let num = numeric_grad(n, |i, d| dot(draw.apply(&nudge_tensor(&xt, i, d)).data(), &c));
        worst = worst.max(max_rel_err(&c, &num));
    }
    worst
}

pub fn losses() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(111, &[k]);
        let p = vec![rng.uniform(0.05, 0.95)];
        let gold = rng.below(2);
        let (_, g) = loss(LossKind::BinaryCrossEntropy, &p, gold).unwrap();
        let num = numeric_grad(1, |_, d| loss(LossKind::BinaryCrossEntropy, &[p[0] + d], gold).unwrap().0);
        worst = worst.max(max_rel_err(&g, &num));

        let n = between(2, 4, &mut rng);
        let raw: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let gold = rng.below(n);
        let (_, g) = loss(LossKind::CategoricalCrossEntropy, &probs, gold).unwrap();
        let num = numeric_grad(n, |i, d| {
            let mut q = probs.clone();
            q[i] += d;
            loss(LossKind::CategoricalCrossEntropy, &q, gold).unwrap().0
        });
        worst = worst.max(max_rel_err(&g, &num));
    }
    worst
}

pub fn l2() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..CONFIGS {
        let mut rng = RngStream::derived(112, &[k]);
        let shapes = [vec![between(1, 3, &mut rng), between(1, 3, &mut rng)], vec![between(1, 4, &mut rng)]];
        let kernels: Vec<Tensor> = shapes.iter().map(|s| random_tensor(s, 1.0, &mut rng)).collect();
        let lambda = rng.uniform(0.001, 0.1);
        let mut grads: Vec<Tensor> = kernels.iter().map(Tensor::zeros_like).collect();
        {
            let refs: Vec<&Tensor> = kernels.iter().collect();
            let mut g: Vec<&mut Tensor> = grads.iter_mut().collect();
            l2_penalty(&refs, lambda, &mut g).unwrap();
        }
        let analytic: Vec<f64> = grads.iter().flat_map(|g| g.data().to_vec()).collect();
        let penalty = |ks: &[Tensor]| {
            let refs: Vec<&Tensor> = ks.iter().collect();
            let mut scratch: Vec<Tensor> = ks.iter().map(Tensor::zeros_like).collect();
            let mut g: Vec<&mut Tensor> = scratch.iter_mut().collect();
            l2_penalty(&refs, lambda, &mut g).unwrap()
        };
        let num = numeric_grad(analytic.len(), |i, d| {
            let mut ks = kernels.clone();
            let first = ks[0].len();
            if i < first {
                ks[0].data_mut()[i] += d;
            } else {
                ks[1].data_mut()[i - first] += d;
            }
            penalty(&ks)
        });
        worst = worst.max(max_rel_err(&analytic, &num));
    }
    worst
}

/// Every check as `(name, worst relative error, tolerance)`.
pub fn all() -> Vec<(String, f64, f64)> {
    let mut out = vec![
        ("embedding".to_string(), embedding(), LAYER_TOL),
        ("gru".into(), gru(), LAYER_TOL),
        ("lstm".into(), lstm(), LAYER_TOL),
        ("bidirectional gru".into(), bi_gru(), LAYER_TOL),
        ("bidirectional lstm".into(), bi_lstm(), LAYER_TOL),
    ];
    for h in [1, 3, 5, 7] {
        out.push((format!("conv branch h={h}"), conv_branch(h), LAYER_TOL));
    }
    out.extend([
        ("max pool".to_string(), max_pool(), LAYER_TOL),
        ("average pool".into(), average_pool(), LAYER_TOL),
        ("dense".into(), dense(), LAYER_TOL),
        ("dropout and noise".into(), stochastic(), LAYER_TOL),
        ("losses".into(), losses(), LOSS_TOL),
        ("l2".into(), l2(), LOSS_TOL),
    ]);
    out
}
