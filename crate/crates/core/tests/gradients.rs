mod support;

#[test]
fn toy_network_gradients_match_finite_differences() {
    for seed in 0..5 {
        let err = support::gradcheck::max_relative_error(4, seed);
        assert!(err < 1e-3, "seed {seed}: relative error {err}");
    }
}
