//! Print the analytic-versus-FD summary for the default 10^4 random triples.

use ewd_core::grad::{edwd_grad, gradcheck_suite, GradCheckOptions};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let opts = GradCheckOptions { seed, ..Default::default() };
    let report = gradcheck_suite(&opts, edwd_grad).expect("valid options");
    for l in &report.per_loss {
        println!(
            "{}: checked {} skipped {} max rel err {:.3e} failures {}",
            l.loss, l.checked, l.skipped, l.max_rel_err, l.failures
        );
        if let Some(c) = &l.first_failure {
            println!("  first failure: {c:?}");
        }
    }
}
