//! Forward-pass oracles for whole sequences and the composed model.

use esd_core::dataio::SegmentedExample;
use esd_core::matrix::Matrix;
use esd_core::nn::{lstm_forward, lstm_step, model_forward, LstmParams, ModelDims, ModelParams};
use esd_core::rng::Gaussian;

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn fill(p: &mut ModelParams, seed: u64) {
    let mut g = Gaussian::new(seed);
    for t in p.tensors_mut() {
        t.iter_mut().for_each(|v| *v = 0.6 * g.sample());
    }
}

/// Unrolled scalar evaluation of the peephole recurrence from a zero state.
fn oracle_sequence(p: &LstmParams, x: &Matrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let b = p.b_z.len();
    let (mut y, mut c) = (vec![0.0; b], vec![0.0; b]);
    let (mut ys, mut cs) = (Vec::new(), Vec::new());
    for t in 0..x.rows() {
        let xt = x.row(t);
        let gate = |w: &Matrix, r: &Matrix, bias: &[f64], k: usize| -> f64 {
            let mut s = bias[k];
            for j in 0..xt.len() {
                s += w[(k, j)] * xt[j];
            }
            for j in 0..b {
                s += r[(k, j)] * y[j];
            }
            s
        };
        let mut c_new = vec![0.0; b];
        let mut y_new = vec![0.0; b];
        for k in 0..b {
            let z = gate(&p.w_z, &p.r_z, &p.b_z, k).tanh();
            let i = sig(gate(&p.w_i, &p.r_i, &p.b_i, k) + p.p_i[k] * c[k]);
            let f = sig(gate(&p.w_f, &p.r_f, &p.b_f, k) + p.p_f[k] * c[k]);
            c_new[k] = z * i + c[k] * f;
            let o = sig(gate(&p.w_o, &p.r_o, &p.b_o, k) + p.p_o[k] * c_new[k]);
            y_new[k] = c_new[k].tanh() * o;
        }
        y = y_new;
        c = c_new;
        ys.push(y.clone());
        cs.push(c.clone());
    }
    (ys, cs)
}

#[test]
fn single_unit_step_matches_hand_evaluation() {
    let dims = ModelDims {
        input_size: 1,
        lstm_units: 1,
        dense_units: 1,
        classes: 2,
    };
    let mut p = ModelParams::zeros(dims);
    fill(&mut p, 8);
    let l = &p.lstm;
    let (x, y, c0) = (0.37, -0.21, 0.55);
    let z = (l.w_z[(0, 0)] * x + l.r_z[(0, 0)] * y + l.b_z[0]).tanh();
    let i = sig(l.w_i[(0, 0)] * x + l.r_i[(0, 0)] * y + l.p_i[0] * c0 + l.b_i[0]);
    let f = sig(l.w_f[(0, 0)] * x + l.r_f[(0, 0)] * y + l.p_f[0] * c0 + l.b_f[0]);
    let c = z * i + c0 * f;
    let o = sig(l.w_o[(0, 0)] * x + l.r_o[(0, 0)] * y + l.p_o[0] * c + l.b_o[0]);
    let u = c.tanh() * o;
    let s = lstm_step(l, &[x], &[y], &[c0]).unwrap();
    assert!((s.c[0] - c).abs() < 1e-12);
    assert!((s.u[0] - u).abs() < 1e-12);
    // stored activations are exactly the nonlinearities of the stored pre-activations
    assert_eq!(s.z[0], s.z_bar[0].tanh());
    assert_eq!(s.u[0], s.c[0].tanh() * s.o[0]);
}

#[test]
fn two_unit_three_step_sequence_matches_unrolled_oracle() {
    let dims = ModelDims {
        input_size: 2,
        lstm_units: 2,
        dense_units: 2,
        classes: 2,
    };
    let mut p = ModelParams::zeros(dims);
    fill(&mut p, 21);
    let x = Matrix::from_rows(&[vec![0.5, -1.0], vec![1.5, 0.25], vec![-0.75, 0.1]]).unwrap();
    let fwd = lstm_forward(&p.lstm, &x).unwrap();
    let (ys, cs) = oracle_sequence(&p.lstm, &x);
    for t in 0..3 {
        for k in 0..2 {
            assert!((fwd.outputs[(t, k)] - ys[t][k]).abs() < 1e-12);
            assert!((fwd.steps[t].c[k] - cs[t][k]).abs() < 1e-12);
        }
    }
}

#[test]
fn composed_model_matches_stage_oracles() {
    let dims = ModelDims {
        input_size: 4,
        lstm_units: 3,
        dense_units: 5,
        classes: 3,
    };
    let mut p = ModelParams::zeros(dims);
    fill(&mut p, 5);
    let mut g = Gaussian::new(55);
    let x = Matrix::from_vec(6, 4, g.fill(24)).unwrap();
    let (ys, _) = oracle_sequence(&p.lstm, &x);
    let mut pooled = vec![0.0; 5];
    for y in &ys {
        for k in 0..5 {
            let mut s = p.dense.b[k];
            for j in 0..3 {
                s += p.dense.w[(k, j)] * y[j];
            }
            pooled[k] += s.tanh() / ys.len() as f64;
        }
    }
    let scores: Vec<f64> = (0..3)
        .map(|c| {
            let mut s = p.softmax.bias[c];
            for k in 0..5 {
                s += p.softmax.theta[(c, k)] * pooled[k];
            }
            s.exp()
        })
        .collect();
    let total: f64 = scores.iter().sum();
    let ex = SegmentedExample { segments: x, label: 2 };
    let trace = model_forward(&p, &ex).unwrap();
    for c in 0..3 {
        assert!((trace.posterior[c] - scores[c] / total).abs() < 1e-12);
    }
    assert!((trace.loss(2) + (scores[2] / total).ln()).abs() < 1e-12);
}

#[test]
fn posteriors_of_random_models_sum_to_one() {
    for seed in 0..1000u64 {
        let classes = [2, 3, 5][seed as usize % 3];
        let dims = ModelDims {
            input_size: 2,
            lstm_units: 3,
            dense_units: 2,
            classes,
        };
        let mut p = ModelParams::zeros(dims);
        fill(&mut p, seed);
        let mut g = Gaussian::new(seed + 7);
        let ex = SegmentedExample {
            segments: Matrix::from_vec(3, 2, g.fill(6)).unwrap(),
            label: 0,
        };
        let post = model_forward(&p, &ex).unwrap().posterior;
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
