//! Paired significance test between two systems' per-pair scores.

use paratype::scoring::wilcoxon_signed_rank;

fn main() {
    let system_a = [0.61, 0.72, 0.55, 0.80, 0.66, 0.74, 0.59, 0.70];
    let system_b = [0.58, 0.65, 0.56, 0.71, 0.60, 0.69, 0.52, 0.70];
    let r = wilcoxon_signed_rank(&system_a, &system_b).expect("some non-zero differences");
    println!(
        "W+={} W-={} n={} p={:.4} ({})",
        r.w_plus,
        r.w_minus,
        r.n,
        r.p_value,
        if r.exact { "exact" } else { "normal approximation" }
    );
}
