//! Structural properties of the forward/backward passes: residual
//! telescoping, basis span membership, topology identities, weight sharing
//! and gradient correctness against finite differences.

use nbeats_core::gradcheck::grad_check;
use nbeats_core::model::{
    forward_batch, generic_config, interpretable_config, model_backward, model_forward,
    tensor_key, topology_forward, BasisKind, ModelConfig, Topology,
};
use nbeats_core::model::{init_params, ParamStore};
use nbeats_core::{Matrix, Rng, Vector};

fn random_input(len: usize, rng: &mut Rng) -> Vector {
    Vector {
        data: (0..len).map(|_| rng.uniform(-1.0, 1.0)).collect(),
    }
}

/// Dense least-squares / linear solve by Gaussian elimination on the normal
/// equations; independent of the library's linear algebra.
fn solve_normal_equations(a: &Matrix, y: &[f64]) -> Vec<f64> {
    let n = a.cols;
    let mut ata = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for r in 0..a.rows {
                s += a.at(r, i) * a.at(r, j);
            }
            ata[i][j] = s;
        }
        let mut s = 0.0;
        for r in 0..a.rows {
            s += a.at(r, i) * y[r];
        }
        ata[i][n] = s;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| ata[p][col].abs().partial_cmp(&ata[q][col].abs()).unwrap())
            .unwrap();
        ata.swap(col, pivot);
        let d = ata[col][col];
        assert!(d.abs() > 1e-12, "singular system in test solver");
        for j in col..=n {
            ata[col][j] /= d;
        }
        for row in 0..n {
            if row != col {
                let f = ata[row][col];
                for j in col..=n {
                    ata[row][j] -= f * ata[col][j];
                }
            }
        }
    }
    (0..n).map(|i| ata[i][n]).collect()
}

#[test]
fn dress_telescoping_residuals() {
    let cfg = generic_config(4, 3, 3, 2, 8, 2, false);
    let mut rng = Rng::new(7);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = model_forward(&x, &cfg, &params).unwrap();

    // x_{l+1} = x − Σ_{k≤l} x̂_k, checked through the stored block inputs.
    let mut cumulative = vec![0.0; cfg.input_len()];
    for l in 0..trace.blocks.len() {
        for (c, &b) in cumulative.iter_mut().zip(trace.blocks[l].backcast.row(0)) {
            *c += b;
        }
        if l + 1 < trace.blocks.len() {
            let next_input = trace.blocks[l + 1].input.row(0);
            for k in 0..cfg.input_len() {
                assert!(
                    (next_input[k] - (x.data[k] - cumulative[k])).abs() <= 1e-12,
                    "telescoping violated at block {l}, position {k}"
                );
            }
        }
    }

    // ŷ = Σ ŷ_l with a fixed accumulation order: blocks within each stack,
    // then stacks. Re-summing in that order is bitwise identical.
    let mut sum = Matrix::zeros(1, cfg.horizon);
    for (si, stack) in cfg.stacks.iter().enumerate() {
        let first = cfg.stacks[..si].iter().map(|s| s.blocks).sum::<usize>();
        let mut partial = Matrix::zeros(1, cfg.horizon);
        for b in &trace.blocks[first..first + stack.blocks] {
            partial.add_assign(&b.forecast);
        }
        assert_eq!(partial.data, trace.stack_partials[si].data);
        sum.add_assign(&partial);
    }
    assert_eq!(sum.data, trace.forecast.data);
}

#[test]
fn single_block_trace_identities() {
    let cfg = generic_config(5, 2, 1, 1, 8, 2, false);
    let mut rng = Rng::new(8);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = model_forward(&x, &cfg, &params).unwrap();
    assert_eq!(trace.blocks.len(), 1);
    assert_eq!(trace.forecast.data, trace.blocks[0].forecast.data);
}

#[test]
fn trend_stack_output_is_a_low_degree_polynomial() {
    // The (p+1)-th finite difference of a degree-p polynomial sample is 0.
    let cfg = interpretable_config(6, 2, 2, 8, 2, 2, 0, 8, 2);
    assert!(matches!(
        cfg.stacks[0].block.basis.kind,
        BasisKind::Trend { degree: 2 }
    ));
    let mut rng = Rng::new(9);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = model_forward(&x, &cfg, &params).unwrap();
    let mut d: Vec<f64> = trace.forecast.row(0).to_vec();
    for _ in 0..3 {
        d = d.windows(2).map(|w| w[1] - w[0]).collect();
    }
    for v in d {
        assert!(v.abs() <= 1e-8, "third difference {v}");
    }
}

#[test]
fn seasonality_stack_output_lies_in_the_harmonic_span() {
    let cfg = interpretable_config(8, 2, 0, 8, 2, 2, 2, 8, 2);
    assert!(matches!(
        cfg.stacks[0].block.basis.kind,
        BasisKind::Seasonality
    ));
    let mut rng = Rng::new(10);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = model_forward(&x, &cfg, &params).unwrap();
    let y = trace.forecast.row(0);

    // Independent harmonic design matrix on t = [0..H-1]/H.
    let h = cfg.horizon;
    let harmonics = h / 2 - 1;
    let cols = 2 * harmonics + 1;
    let mut basis = Matrix::zeros(h, cols);
    for t in 0..h {
        let u = t as f64 / h as f64;
        *basis.at_mut(t, 0) = 1.0;
        for k in 1..=harmonics {
            let a = 2.0 * std::f64::consts::PI * k as f64 * u;
            *basis.at_mut(t, k) = a.cos();
            *basis.at_mut(t, harmonics + k) = a.sin();
        }
    }
    let theta = solve_normal_equations(&basis, y);
    let mut res = 0.0;
    let mut norm = 0.0;
    for t in 0..h {
        let fit: f64 = (0..cols).map(|c| basis.at(t, c) * theta[c]).sum();
        res += (y[t] - fit) * (y[t] - fit);
        norm += y[t] * y[t];
    }
    assert!(res.sqrt() <= 1e-8 * norm.sqrt().max(1e-8), "residual {res}");
}

#[test]
fn generic_block_output_lies_in_its_affine_span() {
    let cfg = generic_config(4, 2, 1, 1, 8, 2, false);
    let mut rng = Rng::new(11);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = model_forward(&x, &cfg, &params).unwrap();
    let y = trace.forecast.row(0);
    let vf = params.get(&tensor_key(0, 0, "basis.vf")).unwrap();
    let bf = params.get(&tensor_key(0, 0, "basis.bf")).unwrap();
    let shifted: Vec<f64> = (0..y.len()).map(|i| y[i] - bf.data[i]).collect();
    let theta = solve_normal_equations(vf, &shifted);
    for i in 0..y.len() {
        let fit: f64 = (0..vf.cols).map(|c| vf.at(i, c) * theta[c]).sum::<f64>() + bf.data[i];
        assert!((fit - y[i]).abs() <= 1e-8);
    }
}

#[test]
fn zero_network_generic_block_returns_biases() {
    let cfg = generic_config(3, 2, 1, 1, 4, 2, false);
    let mut rng = Rng::new(12);
    let mut params = init_params(&cfg, &mut rng);
    for (_, t) in params.iter_mut() {
        t.data.fill(0.0);
    }
    params
        .get_mut(&tensor_key(0, 0, "basis.bf"))
        .unwrap()
        .data
        .copy_from_slice(&[1.5, 2.5, 3.5]);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = model_forward(&x, &cfg, &params).unwrap();
    assert_eq!(trace.forecast.data, vec![1.5, 2.5, 3.5]);
}

fn all_topology_configs(base: &ModelConfig) -> Vec<ModelConfig> {
    Topology::ALL
        .iter()
        .map(|&t| {
            let mut c = base.clone();
            c.topology = t;
            c
        })
        .collect()
}

#[test]
fn all_topologies_coincide_with_one_block() {
    let base = generic_config(4, 2, 1, 1, 8, 2, false);
    let mut rng = Rng::new(13);
    let params = init_params(&base, &mut rng);
    let x = random_input(base.input_len(), &mut rng);
    let reference = model_forward(&x, &base, &params).unwrap();
    for cfg in all_topology_configs(&base) {
        let trace = if cfg.topology == Topology::Dress {
            model_forward(&x, &cfg, &params).unwrap()
        } else {
            topology_forward(&x, &cfg, &params).unwrap()
        };
        assert_eq!(
            trace.forecast.data, reference.forecast.data,
            "topology {} differs at one block",
            cfg.topology.name()
        );
    }
}

#[test]
fn parallel_with_shared_blocks_scales_the_single_forecast() {
    let blocks = 4;
    let mut cfg = generic_config(4, 2, 1, blocks, 8, 2, true);
    cfg.topology = Topology::Parallel;
    let mut rng = Rng::new(14);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = topology_forward(&x, &cfg, &params).unwrap();
    let single = trace.blocks[0].forecast.row(0);
    for k in 0..cfg.horizon {
        assert!((trace.forecast.at(0, k) - blocks as f64 * single[k]).abs() <= 1e-12);
    }
}

#[test]
fn last_forward_excludes_earlier_partials() {
    let mut cfg = generic_config(4, 2, 1, 3, 8, 2, false);
    cfg.topology = Topology::LastForward;
    let mut rng = Rng::new(15);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = topology_forward(&x, &cfg, &params).unwrap();
    // Earlier blocks still compute forecasts, but only the last one counts.
    assert!(trace.blocks[0].forecast.data.iter().any(|&v| v != 0.0));
    assert_eq!(trace.forecast.data, trace.blocks[2].forecast.data);
}

#[test]
fn partial_sums_match_forecast_for_summing_topologies() {
    let base = generic_config(4, 2, 2, 2, 8, 2, false);
    let mut rng = Rng::new(16);
    let params = init_params(&base, &mut rng);
    let x = random_input(base.input_len(), &mut rng);
    for cfg in all_topology_configs(&base) {
        if !cfg.topology.sums_partials() {
            continue;
        }
        let trace = forward_batch(
            &Matrix {
                rows: 1,
                cols: x.len(),
                data: x.data.clone(),
            },
            &cfg,
            &params,
        )
        .unwrap();
        let mut sum = Matrix::zeros(1, cfg.horizon);
        for p in &trace.stack_partials {
            sum.add_assign(p);
        }
        assert_eq!(sum.data, trace.forecast.data, "{}", cfg.topology.name());
    }
}

#[test]
fn shared_stack_mutation_affects_every_block() {
    let cfg = generic_config(4, 2, 1, 3, 8, 2, true);
    let mut rng = Rng::new(17);
    let mut params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let before = model_forward(&x, &cfg, &params).unwrap();
    params
        .get_mut(&tensor_key(0, 0, "fc0.w"))
        .unwrap()
        .data[0] += 0.5;
    let after = model_forward(&x, &cfg, &params).unwrap();
    for l in 0..3 {
        assert_ne!(
            before.blocks[l].forecast.data, after.blocks[l].forecast.data,
            "block {l} unaffected by the shared mutation"
        );
    }
}

#[test]
fn batched_forward_matches_single_sample_calls() {
    let cfg = generic_config(5, 2, 2, 1, 8, 2, false);
    let mut rng = Rng::new(18);
    let params = init_params(&cfg, &mut rng);
    let rows: Vec<Vector> = (0..3).map(|_| random_input(cfg.input_len(), &mut rng)).collect();
    let mut batch = Matrix::zeros(3, cfg.input_len());
    for (i, r) in rows.iter().enumerate() {
        batch.row_mut(i).copy_from_slice(&r.data);
    }
    let bt = forward_batch(&batch, &cfg, &params).unwrap();
    for (i, r) in rows.iter().enumerate() {
        let single = model_forward(r, &cfg, &params).unwrap();
        assert_eq!(bt.forecast.row(i), single.forecast.row(0));
    }
}

#[test]
fn zero_output_gradient_gives_zero_parameter_gradients() {
    let cfg = generic_config(4, 2, 2, 1, 8, 2, false);
    let mut rng = Rng::new(19);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = model_forward(&x, &cfg, &params).unwrap();
    let grads = model_backward(&trace, &Matrix::zeros(1, cfg.horizon), &cfg, &params).unwrap();
    for (k, g) in grads.iter() {
        assert!(g.data.iter().all(|&v| v == 0.0), "nonzero gradient in {k}");
    }
}

fn finite_difference_probe(cfg: &ModelConfig, seed: u64, tolerance: f64) {
    let mut rng = Rng::new(seed);
    let mut params = init_params(cfg, &mut rng);
    // Shift FC biases so pre-activations sit away from the relu kink:
    // topologies that feed tiny backcasts forward would otherwise park
    // units exactly at 0, where the subgradient convention and a central
    // difference legitimately disagree.
    for (key, t) in params.iter_mut() {
        if key.contains(".fc") && key.ends_with(".b") {
            for v in t.data.iter_mut() {
                *v += 0.1;
            }
        }
    }
    let x = random_input(cfg.input_len(), &mut rng);
    let weights: Vec<f64> = (0..cfg.horizon).map(|_| rng.uniform(-1.0, 1.0)).collect();

    let trace = forward_batch(
        &Matrix {
            rows: 1,
            cols: x.len(),
            data: x.data.clone(),
        },
        cfg,
        &params,
    )
    .unwrap();
    let grad_out = Matrix {
        rows: 1,
        cols: cfg.horizon,
        data: weights.clone(),
    };
    let analytic = model_backward(&trace, &grad_out, cfg, &params).unwrap().flatten();
    let flat = params.flatten();

    let mut probe = params.clone();
    let f = |p: &[f64]| -> f64 {
        probe.assign_flat(p).unwrap();
        let t = forward_batch(
            &Matrix {
                rows: 1,
                cols: x.len(),
                data: x.data.clone(),
            },
            cfg,
            &probe,
        )
        .unwrap();
        t.forecast.row(0).iter().zip(&weights).map(|(a, w)| a * w).sum()
    };
    // Probe a deterministic subsample of coordinates to bound runtime.
    let coords: Vec<usize> = {
        let mut c: Vec<usize> = (0..flat.len()).collect();
        if c.len() > 400 {
            let mut pick_rng = Rng::new(seed ^ 0x9e37);
            let mut picked = std::collections::BTreeSet::new();
            while picked.len() < 400 {
                picked.insert(pick_rng.index(c.len()));
            }
            c = picked.into_iter().collect();
        }
        c
    };
    let report = grad_check(f, &flat, &analytic, 1e-5, tolerance, Some(&coords));
    assert!(
        report.passed(),
        "{}: max rel err {} at coordinate {:?}",
        cfg.topology.name(),
        report.max_rel_err,
        report.worst_coord
    );
    params.assign_flat(&flat).unwrap();
}

#[test]
fn dress_gradients_match_finite_differences() {
    let cfg = generic_config(4, 2, 2, 2, 8, 2, false);
    finite_difference_probe(&cfg, 23, 1e-5);
}

#[test]
fn interpretable_gradients_match_finite_differences() {
    let cfg = interpretable_config(6, 2, 2, 8, 2, 2, 2, 8, 2);
    finite_difference_probe(&cfg, 24, 1e-5);
}

#[test]
fn all_topology_gradients_match_finite_differences() {
    let base = generic_config(4, 2, 2, 2, 8, 2, false);
    for cfg in all_topology_configs(&base) {
        finite_difference_probe(&cfg, 25, 1e-5);
    }
}

#[test]
fn shared_gradients_equal_summed_unshared_gradients() {
    let shared_cfg = generic_config(4, 2, 1, 3, 8, 2, true);
    let unshared_cfg = generic_config(4, 2, 1, 3, 8, 2, false);
    let mut rng = Rng::new(26);
    let shared = init_params(&shared_cfg, &mut rng);

    // Tie the unshared model to the shared physical tensors.
    let mut unshared = init_params(&unshared_cfg, &mut rng);
    let names: Vec<String> = shared.iter().map(|(k, _)| k.clone()).collect();
    for name in &names {
        let suffix = name.split('.').skip(2).collect::<Vec<_>>().join(".");
        for b in 0..3 {
            let key = tensor_key(0, b, &suffix);
            *unshared.get_mut(&key).unwrap() = shared.get(name).unwrap().clone();
        }
    }

    let x = random_input(shared_cfg.input_len(), &mut rng);
    let ts = model_forward(&x, &shared_cfg, &shared).unwrap();
    let tu = model_forward(&x, &unshared_cfg, &unshared).unwrap();
    assert_eq!(ts.forecast.data, tu.forecast.data);

    let grad_out = Matrix {
        rows: 1,
        cols: 4,
        data: vec![0.3, -1.1, 0.7, 0.2],
    };
    let gs = model_backward(&ts, &grad_out, &shared_cfg, &shared).unwrap();
    let gu = model_backward(&tu, &grad_out, &unshared_cfg, &unshared).unwrap();
    for name in &names {
        let suffix = name.split('.').skip(2).collect::<Vec<_>>().join(".");
        let shared_grad = gs.get(name).unwrap();
        let mut summed = Matrix::zeros(shared_grad.rows, shared_grad.cols);
        for b in 0..3 {
            summed.add_assign(gu.get(&tensor_key(0, b, &suffix)).unwrap());
        }
        for (a, b) in shared_grad.data.iter().zip(&summed.data) {
            assert!((a - b).abs() <= 1e-10, "{name}: {a} vs {b}");
        }
    }
}

#[test]
fn one_layer_block_matches_straight_line_recomputation() {
    // Independent scalar-loop oracle for a single generic block.
    let cfg = generic_config(3, 2, 1, 1, 4, 1, false);
    let mut rng = Rng::new(27);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    let trace = model_forward(&x, &cfg, &params).unwrap();

    let get = |name: &str| params.get(&tensor_key(0, 0, name)).unwrap();
    let w0 = get("fc0.w");
    let b0 = get("fc0.b");
    let mut h = vec![0.0; w0.rows];
    for (r, hv) in h.iter_mut().enumerate() {
        let mut s = b0.data[r];
        for c in 0..w0.cols {
            s += w0.at(r, c) * x.data[c];
        }
        *hv = s.max(0.0);
    }
    let wf = get("theta_f.w");
    let mut theta = vec![0.0; wf.rows];
    for (r, tv) in theta.iter_mut().enumerate() {
        *tv = (0..wf.cols).map(|c| wf.at(r, c) * h[c]).sum();
    }
    let vf = get("basis.vf");
    let bf = get("basis.bf");
    for i in 0..cfg.horizon {
        let y: f64 =
            (0..vf.cols).map(|c| vf.at(i, c) * theta[c]).sum::<f64>() + bf.data[i];
        assert!((y - trace.forecast.at(0, i)).abs() <= 1e-12);
    }
}

#[test]
fn forward_entry_points_enforce_their_topologies() {
    let mut cfg = generic_config(4, 2, 1, 1, 8, 2, false);
    let mut rng = Rng::new(28);
    let params = init_params(&cfg, &mut rng);
    let x = random_input(cfg.input_len(), &mut rng);
    assert!(topology_forward(&x, &cfg, &params).is_err());
    cfg.topology = Topology::Parallel;
    assert!(model_forward(&x, &cfg, &params).is_err());
    let short = Vector::zeros(3);
    assert!(forward_batch(
        &Matrix {
            rows: 1,
            cols: 3,
            data: short.data
        },
        &cfg,
        &params
    )
    .is_err());
}
