mod common;

use common::{max_grad_error, ARCHS};

#[test]
fn analytic_gradients_match_central_differences() {
    for arch in ARCHS {
        let err = (0..20).find_map(|seed| max_grad_error(arch, seed)).expect("kink-free instance");
        assert!(err < 1e-5, "{arch}: {err}");
    }
}
