use sp2q::detection::ChannelNoise;
use sp2q::qkd::{expected_qber_phase_jitter, run_qkd, sigma_sweep, QkdParams};

#[test]
fn qber_grows_with_phase_jitter() {
    let n = 100_000;
    let rows = sigma_sweep(&QkdParams::ideal(n, 31), &[0.0, 0.2, 0.5, 1.0, 2.0]).unwrap();
    assert_eq!(rows[0].qber, 0.0);
    for r in &rows {
        assert_eq!(r.qber_b, 0.0, "B rounds must ignore phase noise (σ = {})", r.sigma);
        // bits within a symbol share one S/A swap, so errors per symbol are 0 or 1
        let p = 2.0 * r.analytic_qber;
        let tol = 4.0 * (p * (1.0 - p) / r.sifted as f64).sqrt() / 2.0;
        assert!((r.qber - r.analytic_qber).abs() <= tol + 1e-12, "σ={}: {} vs {}", r.sigma, r.qber, r.analytic_qber);
    }
    for pair in rows.windows(2) {
        let p = 2.0 * pair[1].analytic_qber;
        let slack = 4.0 * (p * (1.0 - p) / pair[1].sifted as f64).sqrt() / 2.0;
        assert!(pair[1].qber + slack >= pair[0].qber, "{} then {}", pair[0].qber, pair[1].qber);
    }
}

#[test]
fn misalignment_hits_b_rounds() {
    let params = QkdParams {
        noise: ChannelNoise { pol_misalign_a: 10.0, pol_misalign_b: -10.0, ..Default::default() },
        ..QkdParams::ideal(50_000, 32)
    };
    let r = run_qkd(&params).unwrap();
    assert!(r.per_basis_b.bit_errors > 0);
    // sin²(10°) of B symbols have their polarization bit flipped
    let p = 10f64.to_radians().sin().powi(2);
    let s = r.per_basis_b.sifted as f64;
    let flips = r.per_basis_b.bit_errors as f64 / s;
    assert!((flips - p).abs() < 4.0 * (p * (1.0 - p) / s).sqrt(), "{flips} vs {p}");
}

#[test]
fn same_seed_same_report() {
    let params = QkdParams { eve_active: true, ..QkdParams::ideal(10_000, 33) };
    assert_eq!(run_qkd(&params).unwrap(), run_qkd(&params).unwrap());
    assert!(expected_qber_phase_jitter(0.0) == 0.0);
}
