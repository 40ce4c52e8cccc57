//! Moment checks of the noise generators over many realizations.

use lyapunov_lab::processes::{sample_path, telegraph_finite_time_cgf, Envelope, IsotropicKernel, ProcessSpec, SamplePath};

const M: usize = 20_000;

/// Mean and standard error of `f` over realizations.
fn mean_se(paths: &[SamplePath], f: impl Fn(&SamplePath) -> f64) -> (f64, f64) {
    let xs: Vec<f64> = paths.iter().map(f).collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn paths(spec: &ProcessSpec, dt: f64, steps: usize) -> Vec<SamplePath> {
    (0..M as u64).map(|r| sample_path(spec, dt, steps, r).unwrap()).collect()
}

/// `O A Oᵀ` for a fixed rotation about a generic axis.
fn rotate(a: &[f64]) -> Vec<f64> {
    let (c1, s1) = (0.6f64, 0.8f64);
    let (c2, s2) = (0.28f64, 0.96f64);
    let r1 = [c1, -s1, 0.0, s1, c1, 0.0, 0.0, 0.0, 1.0];
    let r2 = [1.0, 0.0, 0.0, 0.0, c2, -s2, 0.0, s2, c2];
    let mut o = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            o[i * 3 + j] = (0..3).map(|k| r1[i * 3 + k] * r2[k * 3 + j]).sum();
        }
    }
    let mut out = vec![0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[i * 3 + j] = (0..3)
                .flat_map(|k| (0..3).map(move |p| (k, p)))
                .map(|(k, p)| o[i * 3 + k] * a[k * 3 + p] * o[j * 3 + p])
                .sum();
        }
    }
    out
}

#[test]
fn gaussian_equal_time_covariance_matches_kernel() {
    let eps = 0.1;
    let k = IsotropicKernel::new(0.2, 0.7, 0.3);
    let spec = ProcessSpec::gaussian(3, k, eps, 17);
    let ps = paths(&spec, 0.01, 30);
    let cov = k.covariance(3);
    for n in [0, 30] {
        for (x, y) in [(0, 0), (0, 4), (1, 1), (1, 3), (5, 7), (2, 6), (0, 1)] {
            let (m, se) = mean_se(&ps, |p| 2.0 * eps * p.at(n)[x] * p.at(n)[y]);
            let expect = cov[x * 9 + y];
            assert!((m - expect).abs() < 5.0 * se, "step {n} ({x},{y}): {m} ± {se} vs {expect}");
        }
    }
}

#[test]
fn gaussian_correlation_decays_exponentially() {
    let eps = 0.1;
    let dt = 0.01;
    let k = IsotropicKernel::iid(1.0);
    let spec = ProcessSpec::gaussian(2, k, eps, 3);
    let ps = paths(&spec, dt, 20);
    for lag in [5, 10, 20] {
        let (m, se) = mean_se(&ps, |p| 2.0 * eps * p.at(0)[1] * p.at(lag)[1]);
        let expect = (-(lag as f64) * dt / eps).exp();
        assert!((m - expect).abs() < 5.0 * se, "lag {lag}: {m} ± {se} vs {expect}");
    }
}

#[test]
fn modulated_law_is_rotation_invariant() {
    let spec = ProcessSpec::modulated(
        3,
        IsotropicKernel::traceless(0.5, 0.5, 3),
        0.1,
        Envelope {
            amplitude: 0.8,
            correlation_time: 0.2,
        },
        23,
    );
    let ps = paths(&spec, 0.01, 1);
    let moments = |f: &dyn Fn(&[f64]) -> f64| {
        let raw = mean_se(&ps, |p| f(p.at(0)));
        let rot = mean_se(&ps, |p| f(&rotate(p.at(0))));
        (raw, rot)
    };
    let fs: [(&str, Box<dyn Fn(&[f64]) -> f64>); 4] = [
        ("A11^2", Box::new(|a| a[0] * a[0])),
        ("A11^4", Box::new(|a| a[0].powi(4))),
        ("A12^4", Box::new(|a| a[1].powi(4))),
        ("A11^2 A22^2", Box::new(|a| a[0] * a[0] * a[4] * a[4])),
    ];
    for (name, f) in fs.iter() {
        let ((m1, s1), (m2, s2)) = moments(f.as_ref());
        assert!((m1 - m2).abs() < 5.0 * s1.hypot(s2), "{name}: {m1} ± {s1} vs rotated {m2} ± {s2}");
    }
    // the envelope makes the entries leptokurtic
    let (m2, _) = mean_se(&ps, |p| p.at(0)[1].powi(2));
    let (m4, _) = mean_se(&ps, |p| p.at(0)[1].powi(4));
    assert!(m4 / (m2 * m2) > 3.3, "kurtosis {}", m4 / (m2 * m2));
}

#[test]
fn telegraph_finite_time_cgf_matches_simulation() {
    let (sigma, nu, dt, t) = (1.0, 1.0, 0.01, 2.0);
    let spec = ProcessSpec::telegraph(sigma, nu, 5);
    let steps = (t / dt) as usize;
    let ps = paths(&spec, dt, steps);
    for eta in [-1.0, 0.5, 1.0] {
        let (m, se) = mean_se(&ps, |p| {
            let integral: f64 = (0..steps).map(|n| 0.5 * (p.at(n)[0] + p.at(n + 1)[0]) * dt).sum();
            (eta * integral).exp()
        });
        let expect = (t * telegraph_finite_time_cgf(sigma, nu, eta, t)).exp();
        // the trapezoid integral of a jump path is exact up to the flip steps
        assert!((m - expect).abs() < 5.0 * se + 0.01 * expect, "η={eta}: {m} ± {se} vs {expect}");
    }
}

#[test]
fn ou_mean_and_variance() {
    let eps = 0.05;
    let spec = ProcessSpec::scalar_ou(eps, 8);
    let ps = paths(&spec, 0.005, 40);
    let (m, se) = mean_se(&ps, |p| p.at(40)[0]);
    assert!(m.abs() < 5.0 * se);
    let (v, se) = mean_se(&ps, |p| 2.0 * eps * p.at(40)[0].powi(2));
    assert!((v - 1.0).abs() < 5.0 * se, "{v} ± {se}");
}
