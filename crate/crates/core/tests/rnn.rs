use proptest::prelude::*;
use tomita_core::grammars::{build_dataset, encode, DatasetConfig};
use tomita_core::rnn::{
    accuracy, budget_hidden_size, grammar_param_budget, initial_hidden, loss, param_count, train, Activation,
    Architecture, ModelConfig, RnnModel, TrainConfig,
};
use tomita_core::Grammar;

fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6)
}

fn max_fd_error(model: &RnnModel, string: &[u8], label: bool, h0: &[f64]) -> f64 {
    let seq = encode(string).unwrap();
    let (_, grad) = model.gradient(&seq, label, h0).unwrap();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..model.params().len() {
        let mut p = model.clone();
        p.params_mut()[i] += eps;
        let mut m = model.clone();
        m.params_mut()[i] -= eps;
        let lp = loss(p.response(&seq, h0).unwrap(), label);
        let lm = loss(m.response(&seq, h0).unwrap(), label);
        worst = worst.max(relative_error((lp - lm) / (2.0 * eps), grad[i]));
    }
    worst
}

fn arb_config() -> impl Strategy<Value = ModelConfig> {
    (0usize..7, 2usize..5, any::<u64>()).prop_map(|(which, n, seed)| {
        let (arch, act) = [
            (Architecture::Elman, Activation::Sigmoid),
            (Architecture::Elman, Activation::Tanh),
            (Architecture::SecondOrder, Activation::Sigmoid),
            (Architecture::SecondOrder, Activation::Tanh),
            (Architecture::MiRnn, Activation::Tanh),
            (Architecture::Lstm, Activation::Tanh),
            (Architecture::Gru, Activation::Tanh),
        ][which];
        ModelConfig::new(arch, Some(act), n, seed).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradients_match_central_differences(
        cfg in arb_config(),
        string in proptest::collection::vec(0u8..2, 1..=5),
        label in any::<bool>(),
        scale in 1.0f64..10.0,
    ) {
        let mut model = RnnModel::init(cfg.clone()).unwrap();
        model.params_mut().iter_mut().for_each(|w| *w *= scale);
        let h0 = initial_hidden(&cfg, cfg.seed ^ 1);
        prop_assert!(max_fd_error(&model, &string, label, &h0) < 1e-4);
    }

    #[test]
    fn responses_stay_in_unit_interval(cfg in arb_config(), string in proptest::collection::vec(0u8..2, 1..12)) {
        let model = RnnModel::init(cfg.clone()).unwrap();
        let h0 = initial_hidden(&cfg, 3);
        let trace = model.forward(&encode(&string).unwrap(), &h0).unwrap();
        prop_assert_eq!(trace.hidden.len(), string.len() + 2);
        prop_assert!(trace.response > 0.0 && trace.response < 1.0);
    }
}

#[test]
fn perfect_prediction_has_zero_gradient() {
    // every hidden unit sits at 0.5 before the stop step, and the stop
    // column drives the response unit into exact saturation
    let cfg = ModelConfig::new(Architecture::SecondOrder, Some(Activation::Sigmoid), 3, 0).unwrap();
    let mut w = vec![0.0; cfg.param_count()];
    for j in 0..3 {
        w[j * 3 + 2] = 100.0;
    }
    let model = RnnModel::from_params(cfg, w).unwrap();
    let seq = encode(&[1, 0, 1]).unwrap();
    let (l, grad) = model.gradient(&seq, true, &[0.5; 3]).unwrap();
    assert_eq!(model.response(&seq, &[0.5; 3]).unwrap(), 1.0);
    assert_eq!(l, 0.0);
    assert!(grad.iter().all(|&g| g == 0.0));
}

#[test]
fn unused_input_column_gets_no_gradient() {
    let cfg = ModelConfig::new(Architecture::SecondOrder, Some(Activation::Sigmoid), 4, 7).unwrap();
    let model = RnnModel::init(cfg).unwrap();
    let seq = encode(&[1, 1, 1]).unwrap();
    let (_, grad) = model.gradient(&seq, false, &[0.2, 0.4, 0.6, 0.8]).unwrap();
    for (idx, g) in grad.iter().enumerate() {
        if idx % 3 == 0 {
            assert_eq!(*g, 0.0, "weight {idx} reads symbol 0");
        }
    }
    assert!(grad.iter().any(|&g| g != 0.0));

    let cfg = ModelConfig::new(Architecture::Lstm, None, 3, 7).unwrap();
    let model = RnnModel::init(cfg).unwrap();
    let (_, grad) = model.gradient(&seq, true, &[0.1, -0.3, 0.5]).unwrap();
    for spec in model.specs().iter().filter(|s| s.name.starts_with('U')) {
        for row in 0..3 {
            assert_eq!(grad[spec.offset + row * 3], 0.0, "{} row {row}", spec.name);
        }
    }
}

#[test]
fn budgets_for_every_grammar() {
    assert_eq!(budget_hidden_size(Architecture::SecondOrder, 10502, 3), 59);
    for g in Grammar::all() {
        let target = grammar_param_budget(g);
        for arch in Architecture::ALL {
            let n = budget_hidden_size(arch, target, 3);
            let count = param_count(arch, n, 3);
            assert!(count.abs_diff(target) as f64 <= 0.05 * target as f64);
            // no other width is closer
            for m in 2..n + 5 {
                assert!(param_count(arch, m, 3).abs_diff(target) >= count.abs_diff(target));
            }
        }
    }
}

#[test]
fn second_order_learns_grammar_one_quickly() {
    let g = Grammar::new(1).unwrap();
    let data = build_dataset(&DatasetConfig::table_defaults(g, 0)).unwrap();
    let n = budget_hidden_size(Architecture::SecondOrder, grammar_param_budget(g), 3);
    let mut fast = 0;
    for seed in 0..10 {
        let cfg = ModelConfig::new(Architecture::SecondOrder, Some(Activation::Sigmoid), n, seed).unwrap();
        let h0 = initial_hidden(&cfg, seed + 100);
        let tc = TrainConfig { max_epochs: 200, shuffle_seed: seed, ..TrainConfig::default() };
        let out = train(RnnModel::init(cfg).unwrap(), &data.train, &tc, &h0).unwrap();
        if out.converged {
            fast += 1;
            assert_eq!(accuracy(&out.model, &data.train, &h0).unwrap(), 1.0);
        }
    }
    assert!(fast >= 8, "{fast}/10 seeds converged within 200 epochs");
}
