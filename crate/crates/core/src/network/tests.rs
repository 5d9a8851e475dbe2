use super::*;

fn small(input_dim: usize, m: usize) -> NetworkModel {
    let (lo, hi) = if input_dim == 3 {
        (vec![0.0, -1.0, 0.0], vec![2.0, 1.0, 3.0])
    } else {
        (vec![-1.0, 0.0], vec![1.0, 3.0])
    };
    let mut cfg = NetworkConfig::new(lo, hi, vec![OutputVar::U, OutputVar::V, OutputVar::P]);
    cfg.shared_widths = vec![7, 6];
    cfg.head_widths = vec![5];
    cfg.embedding = EmbeddingConfig {
        num_frequencies: m,
        sigma: 1.3,
        anneal_steps: 0,
    };
    NetworkModel::new(cfg, 11).unwrap()
}

fn value(model: &NetworkModel, p: &[f64], o: usize) -> f64 {
    model.forward(p).unwrap()[o]
}

#[test]
fn same_seed_same_parameters() {
    let a = small(2, 4);
    let b = small(2, 4);
    assert_eq!(a, b);
    let c = NetworkModel::new(a.config().clone(), 12).unwrap();
    assert_ne!(a.params(), c.params());
}

#[test]
fn biases_start_at_zero() {
    let mut m = small(2, 3);
    let (_, b) = m.shared_layer_mut(0);
    assert!(b.iter().all(|&x| x == 0.0));
    let (w, b) = m.head_layer_mut(2, 1);
    assert_eq!(w.len(), 5);
    assert_eq!(b.len(), 1);
}

#[test]
fn parameter_count_matches_layout() {
    let m = small(3, 4);
    let f = 3 + 2 * 4;
    let expected = (f * 7 + 7) + (7 * 6 + 6) + 3 * ((6 * 5 + 5) + (5 + 1));
    assert_eq!(m.parameter_count(), expected);
}

#[test]
fn hand_set_linear_network() {
    // Bypass embedding, one shared layer; head output = w . silu(x~) with
    // x~ the normalised input.
    let mut cfg = NetworkConfig::new(vec![0.0, 0.0], vec![2.0, 2.0], vec![OutputVar::U]);
    cfg.shared_widths = vec![2];
    cfg.head_widths = vec![];
    cfg.embedding = EmbeddingConfig::bypass();
    let mut m = NetworkModel::new(cfg, 0).unwrap();
    {
        let (w, b) = m.shared_layer_mut(0);
        w.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        b.fill(0.0);
    }
    {
        let (w, b) = m.head_layer_mut(0, 0);
        w.copy_from_slice(&[2.0, -1.0]);
        b[0] = 0.5;
    }
    let silu = |a: f64| a / (1.0 + (-a).exp());
    let p = [1.5, 0.25];
    let (a, b) = (0.5, -0.75);
    let expect = 2.0 * silu(a) - silu(b) + 0.5;
    assert!((value(&m, &p, 0) - expect).abs() < 1e-14);
}

#[test]
fn jets_match_finite_differences() {
    for dim in [2, 3] {
        let m = small(dim, 3);
        let p: Vec<f64> = if dim == 3 { vec![0.7, 0.2, 1.1] } else { vec![0.3, 1.7] };
        let spec = DerivSpec::new((0..dim).collect(), (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect()).unwrap();
        let jets = m.evaluate(&p, &spec).unwrap();
        let h = 1e-4;
        for o in 0..3 {
            assert!((jets.value(0, o) - value(&m, &p, o)).abs() < 1e-13);
            for i in 0..dim {
                let mut a = p.clone();
                let mut b = p.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (value(&m, &a, o) - value(&m, &b, o)) / (2.0 * h);
                assert!((jets.d1(0, o, i) - fd).abs() < 1e-7, "d1 {dim} {o} {i}");
                for j in i..dim {
                    let at = |di: f64, dj: f64| {
                        let mut q = p.clone();
                        q[i] += di;
                        q[j] += dj;
                        value(&m, &q, o)
                    };
                    let fd2 = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
                    assert!((jets.d2(0, o, i, j) - fd2).abs() < 1e-5, "d2 {dim} {o} {i} {j}");
                }
            }
        }
    }
}

#[test]
fn spatial_derivatives_skip_time() {
    let m = small(3, 2);
    let p = [0.4, -0.2, 2.0];
    let d = m.spatial_derivatives(&p, 2).unwrap();
    let spec = DerivSpec::new(vec![0, 1, 2], vec![(1, 1), (1, 2), (2, 2)]).unwrap();
    let j = m.evaluate(&p, &spec).unwrap();
    for o in 0..3 {
        assert_eq!(d.first[o], [j.d1(0, o, 1), j.d1(0, o, 2)]);
        assert_eq!(d.time[o], j.d1(0, o, 0));
        assert_eq!(d.second[o], [j.d2(0, o, 1, 1), j.d2(0, o, 1, 2), j.d2(0, o, 2, 2)]);
    }
    assert!(matches!(m.spatial_derivatives(&p, 3), Err(Error::UnsupportedOrder(3))));
}

fn jet_loss(model: &NetworkModel, pts: &[f64], spec: &DerivSpec, weights: &Jets) -> (f64, Jets) {
    let jets = model.evaluate(pts, spec).unwrap();
    let mut adj = jets.zeros_like();
    let mut loss = 0.0;
    for ((x, w), a) in jets.data().iter().zip(weights.data()).zip(adj.data_mut()) {
        loss += w * x * x;
        *a = 2.0 * w * x;
    }
    (loss, adj)
}

#[test]
fn parameter_gradient_matches_finite_differences() {
    for dim in [2, 3] {
        let mut m = small(dim, 2);
        let pts: Vec<f64> = (0..4 * dim).map(|k| 0.1 + 0.37 * (k as f64 * 1.3).sin()).collect();
        let spec = DerivSpec::spatial(&m.config().spatial_inputs(), m.config().time_input(), 2).unwrap();
        let mut weights = m.evaluate(&pts, &spec).unwrap();
        for (k, w) in weights.data_mut().iter_mut().enumerate() {
            *w = 1.0 + 0.5 * (k as f64).cos();
        }
        let (_, tape) = m.evaluate_with_tape(&pts, &spec).unwrap();
        let (_, adj) = jet_loss(&m, &pts, &spec, &weights);
        let mut grad = vec![0.0; m.parameter_count()];
        m.backward(&tape, &adj, &mut grad).unwrap();
        let base = m.flatten();
        let h = 1e-6;
        for k in (0..base.len()).step_by(3) {
            let mut q = base.clone();
            q[k] += h;
            m.unflatten(&q).unwrap();
            let up = jet_loss(&m, &pts, &spec, &weights).0;
            q[k] -= 2.0 * h;
            m.unflatten(&q).unwrap();
            let dn = jet_loss(&m, &pts, &spec, &weights).0;
            let fd = (up - dn) / (2.0 * h);
            assert!((grad[k] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "dim {dim} param {k}: {} vs {fd}", grad[k]);
        }
        m.unflatten(&base).unwrap();
    }
}

#[test]
fn loss_gradient_rejects_nan() {
    let m = small(2, 0);
    let pts = [0.0, 1.0];
    let r = loss_gradient(&m, &[(&pts[..], DerivSpec::values())], "test", |j| (f64::NAN, vec![j[0].zeros_like()]));
    assert!(matches!(r, Err(Error::NonFinite { .. })));
}

#[test]
fn config_validation() {
    let mut cfg = small(2, 1).config().clone();
    cfg.input_upper[0] = cfg.input_lower[0];
    assert!(NetworkModel::new(cfg.clone(), 0).is_err());
    cfg.input_dim = 4;
    assert!(NetworkModel::new(cfg, 0).is_err());
}
