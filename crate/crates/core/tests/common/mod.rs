//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use occdyn::linalg::Matrix;
use occdyn::nn::{Autoencoder, Gradients, Mlp};
use occdyn::svdd::{anomaly_scores, oc_batch_gradients, sb_batch_gradients, soft_boundary_sample_loss};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random 1-based permutation.
pub fn permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (1..=n).collect();
    p.shuffle(rng);
    p
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix<f64> {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Samples whose normal/anomalous side of `delta` differs between epochs,
/// a sample being normal when its rank is below `delta`.
pub fn brute_crossings(prev: &[usize], cur: &[usize], delta: usize) -> (u64, u64) {
    let mut n_to_a = 0;
    let mut a_to_n = 0;
    for (&a, &b) in prev.iter().zip(cur) {
        if a < delta && b >= delta {
            n_to_a += 1;
        }
        if a >= delta && b < delta {
            a_to_n += 1;
        }
    }
    (n_to_a, a_to_n)
}

/// All minimizers of `count / (delta (n - delta))` by exact cross-multiplication.
pub fn brute_argmin_set(n: usize, counts: &[(usize, u64)]) -> Vec<usize> {
    let area = |d: usize| (d * (n - d)) as u128;
    counts
        .iter()
        .filter(|&&(d, c)| {
            counts
                .iter()
                .all(|&(e, k)| c as u128 * area(e) <= k as u128 * area(d))
        })
        .map(|&(d, _)| d)
        .collect()
}

/// Fraction of (positive, negative) pairs ordered correctly, ties counting half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Average precision from scratch: for every distinct score `t`, the
/// precision of `{score >= t}` weighted by the positives sitting exactly at `t`.
pub fn brute_average_precision(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let mut ap = 0.0;
    for &t in &distinct {
        let at = (0..scores.len()).filter(|&i| scores[i] == t && labels[i]).count() as f64;
        if at == 0.0 {
            continue;
        }
        let selected = (0..scores.len()).filter(|&i| scores[i] >= t);
        let (tp, total) = selected.fold((0.0, 0.0), |(tp, tot), i| {
            (tp + if labels[i] { 1.0 } else { 0.0 }, tot + 1.0)
        });
        ap += tp / total * at / pos;
    }
    ap
}

/// Exhaustive Otsu over integer-valued scores. Every split of the sorted
/// values into a nonempty low and high group is scored exactly in `i128`;
/// returns the smallest low-group size minimizing the within-class sum of
/// squares.
pub fn exhaustive_otsu_split(values: &[i64]) -> usize {
    let mut v = values.to_vec();
    v.sort();
    let n = v.len() as i128;
    // within = total_sq - (S_low^2 / t + S_high^2 / (n - t)); maximize the
    // bracket, i.e. (S_low^2 (n - t) + S_high^2 t) / (t (n - t)).
    let total: i128 = v.iter().map(|&x| x as i128).sum();
    let mut best: Option<(usize, i128, i128)> = None;
    let mut low = 0i128;
    for t in 1..v.len() {
        low += v[t - 1] as i128;
        let high = total - low;
        let ti = t as i128;
        let num = low * low * (n - ti) + high * high * ti;
        let den = ti * (n - ti);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.unwrap().0
}

/// Max relative error `|a - f| / max(|a|, |f|, floor)` over every parameter.
pub fn max_relative_error(analytic: &Gradients<f64>, numeric: &Gradients<f64>, floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, f) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), f.shape());
        for (&x, &y) in a.as_slice().iter().zip(f.as_slice()) {
            worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(floor));
        }
    }
    worst
}

/// Central differences of `loss` with respect to every weight of `net`.
pub fn finite_difference(net: &Mlp<f64>, h: f64, loss: impl Fn(&Mlp<f64>) -> f64) -> Gradients<f64> {
    let mut work = net.clone();
    let mut grads = Vec::new();
    for l in 0..net.num_layers() {
        let (r, c) = net.layers()[l].shape();
        let mut g = Matrix::zeros(r, c);
        for k in 0..r * c {
            let orig = work.layers()[l].as_slice()[k];
            work.layers_mut()[l].as_mut_slice()[k] = orig + h;
            let up = loss(&work);
            work.layers_mut()[l].as_mut_slice()[k] = orig - h;
            let down = loss(&work);
            work.layers_mut()[l].as_mut_slice()[k] = orig;
            g.as_mut_slice()[k] = (up - down) / (2.0 * h);
        }
        grads.push(g);
    }
    grads
}

/// Smallest |pre-activation| over the hidden layers, where the leaky ReLU kinks.
pub fn min_hidden_preactivation(net: &Mlp<f64>, x: &Matrix<f64>) -> f64 {
    let trace = net.forward(x).unwrap();
    let mut m = f64::INFINITY;
    for l in 0..trace.depth().saturating_sub(1) {
        for &z in trace.pre_activation(l).as_slice() {
            m = m.min(z.abs());
        }
    }
    m
}

/// One randomized gradient case: a network with dims <= 16 and a batch <= 8.
pub struct GradientCase {
    pub encoder: Mlp<f64>,
    pub ae: Autoencoder<f64>,
    pub batch: Matrix<f64>,
    pub center: Vec<f64>,
}

pub fn gradient_case(seed: u64) -> GradientCase {
    let mut r = rng(seed);
    loop {
        let depth = r.gen_range(1..=3);
        let mut dims = vec![r.gen_range(2..=16)];
        for _ in 0..depth {
            dims.push(r.gen_range(1..=16));
        }
        let rows = r.gen_range(1..=8);
        let batch = gaussian_matrix(rows, dims[0], &mut r);
        let encoder = Mlp::<f64>::init(&dims, r.gen()).unwrap();
        let ae = Autoencoder::<f64>::init(&dims, r.gen(), r.gen()).unwrap();
        let center: Vec<f64> = (0..*dims.last().unwrap()).map(|_| r.sample(StandardNormal)).collect();
        let hidden = ae.encoder.embed(&batch).unwrap();
        let safe = min_hidden_preactivation(&encoder, &batch) > 1e-3
            && min_hidden_preactivation(&ae.encoder, &batch) > 1e-3
            && min_hidden_preactivation(&ae.decoder, &hidden) > 1e-3;
        if safe {
            return GradientCase { encoder, ae, batch, center };
        }
    }
}

pub fn oc_gradient_error(case: &GradientCase) -> f64 {
    let (_, analytic) = oc_batch_gradients(&case.encoder, &case.center, &case.batch).unwrap();
    let numeric = finite_difference(&case.encoder, 1e-5, |net| {
        let s = anomaly_scores(net, &case.center, &case.batch).unwrap();
        s.iter().sum::<f64>() / s.len() as f64
    });
    max_relative_error(&analytic, &numeric, 1e-4)
}

/// Soft-boundary check with `R^2` placed between two scores, away from the hinge.
pub fn sb_gradient_error(case: &GradientCase, nu: f64) -> f64 {
    let mut s = anomaly_scores(&case.encoder, &case.center, &case.batch).unwrap();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r2 = if s.len() == 1 { s[0] * 0.5 } else { 0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2]) };
    let (_, analytic) = sb_batch_gradients(&case.encoder, &case.center, r2, nu, &case.batch).unwrap();
    let numeric = finite_difference(&case.encoder, 1e-5, |net| {
        let s = anomaly_scores(net, &case.center, &case.batch).unwrap();
        s.iter().map(|&x| soft_boundary_sample_loss(x, r2, nu)).sum::<f64>() / s.len() as f64
    });
    max_relative_error(&analytic, &numeric, 1e-4)
}

pub fn reconstruction_gradient_error(case: &GradientCase) -> f64 {
    let (_, enc, dec) = occdyn::nn::reconstruction_gradients(&case.ae, &case.batch).unwrap();
    let num_enc = finite_difference(&case.ae.encoder, 1e-5, |net| {
        Autoencoder::new(net.clone(), case.ae.decoder.clone())
            .unwrap()
            .reconstruction_loss(&case.batch)
            .unwrap()
    });
    let num_dec = finite_difference(&case.ae.decoder, 1e-5, |net| {
        Autoencoder::new(case.ae.encoder.clone(), net.clone())
            .unwrap()
            .reconstruction_loss(&case.batch)
            .unwrap()
    });
    max_relative_error(&enc, &num_enc, 1e-4).max(max_relative_error(&dec, &num_dec, 1e-4))
}
