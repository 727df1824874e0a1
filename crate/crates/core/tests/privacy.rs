use fedpdmc::privacy::{
    achieved_delta, constant_rate_density_ratio, density_ratio_bound, indistinguishability_window, min_refreshment_rate,
};

const EPS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
const DELTA: [f64; 3] = [1e-1, 1e-3, 1e-6];
const K: [f64; 3] = [0.5, 1.0, 5.0];

#[test]
fn round_trip_on_grid() {
    for e in EPS {
        for d in DELTA {
            for k in K {
                let rho = min_refreshment_rate(e, d, k).unwrap();
                assert!((k / rho).ln_1p() < e, "feasibility at ({e}, {d}, {k})");
                let got = achieved_delta(rho, k, e).unwrap();
                assert!(got <= d * (1.0 + 1e-12), "({e}, {d}, {k}): {got} > {d}");
            }
        }
    }
}

#[test]
fn worked_value() {
    let d = achieved_delta(1.0, 1.0, 2.0).unwrap();
    assert!((d - 0.2707).abs() < 1e-4);
    assert!(d <= (-1.0f64).exp());
}

#[test]
fn density_ratio_within_window() {
    for e in EPS {
        for k in K {
            let rho = min_refreshment_rate(e, 1e-3, k).unwrap();
            let t0 = indistinguishability_window(rho, k, e);
            assert!(t0 > 0.0);
            for i in 0..=200 {
                let t = t0 * i as f64 / 200.0;
                let r = constant_rate_density_ratio(rho, k, t);
                assert!(r <= density_ratio_bound(rho, k, t) * (1.0 + 1e-12));
                assert!(r <= e.exp() * (1.0 + 1e-12), "ratio {r} at t={t}");
            }
        }
    }
}
