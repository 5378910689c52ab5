use condana::linalg::norm2;
use condana::problems::{
    evaluate, fd_jacobian, jacobian, list_problems, problem_by_name, JacobianKind, Problem,
};
use condana::rand_geom::SampleStream;

fn corpus() -> Vec<Box<dyn Problem<f64>>> {
    list_problems()
        .into_iter()
        .map(|d| problem_by_name(d.name, d.input_dim.or(Some(3))).unwrap())
        .collect()
}

fn random_point(s: &mut SampleStream, m: usize) -> Vec<f64> {
    (0..m).map(|_| 2.0 * s.next_symmetric()).collect()
}

#[test]
fn analytic_matches_finite_differences() {
    let mut s = SampleStream::new(31);
    for p in corpus() {
        for _ in 0..20 {
            let x = random_point(&mut s, p.input_dim());
            let an = jacobian(p.as_ref(), &x).unwrap();
            let fd = fd_jacobian(p.as_ref(), &x, 1e-5).unwrap();
            // Relative to the larger of the entry and the largest Jacobian entry, so
            // entries that vanish at x are compared against the truncation floor.
            let scale = an
                .matrix
                .as_slice()
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, f) in an.matrix.as_slice().iter().zip(fd.matrix.as_slice()) {
                let tol = 1e-6 * a.abs().max(scale);
                assert!((a - f).abs() <= tol, "{} at {x:?}: {a} vs {f}", p.name());
            }
        }
    }
}

/// Least-squares slope of `ln r` on `ln δ`.
fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn residuals(p: &dyn Problem<f64>, x: &[f64], u: &[f64]) -> Vec<(f64, f64)> {
    let fx = evaluate(p, x).unwrap();
    let g = jacobian(p, x).unwrap().matrix;
    (0..7)
        .map(|k| {
            let d = 0.1 / f64::from(1 << k);
            let xp: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + d * b).collect();
            let step: Vec<f64> = u.iter().map(|b| d * b).collect();
            let lin = g.mul_vec(&step);
            let fp = evaluate(p, &xp).unwrap();
            let r: Vec<f64> = fp
                .iter()
                .zip(&fx)
                .zip(&lin)
                .map(|((a, b), c)| a - b - c)
                .collect();
            (d, norm2(&r))
        })
        .collect()
}

#[test]
fn linearization_residual_is_second_order() {
    let mut s = SampleStream::new(32);
    for p in corpus() {
        if p.jacobian_kind() != JacobianKind::Analytic {
            continue;
        }
        for _ in 0..5 {
            let x = random_point(&mut s, p.input_dim());
            let u = random_point(&mut s, p.input_dim());
            let r = residuals(p.as_ref(), &x, &u);
            if p.is_linear() {
                let fx = norm2(&evaluate(p.as_ref(), &x).unwrap());
                for (_, res) in r {
                    assert!(res <= 1e-12 * fx.max(1.0) * 1e4, "{}: {res}", p.name());
                }
            } else {
                let k = slope(&r);
                assert!(k >= 1.9, "{} at {x:?}: slope {k}", p.name());
            }
        }
    }
}

#[test]
fn numeric_fallback_is_close_to_analytic() {
    let analytic = problem_by_name::<f64>("polar", None).unwrap();
    let numeric = problem_by_name::<f64>("polar_fd", None).unwrap();
    let x = [1.7, -0.4];
    let a = jacobian(analytic.as_ref(), &x).unwrap();
    let n = jacobian(numeric.as_ref(), &x).unwrap();
    for (p, q) in a.matrix.as_slice().iter().zip(n.matrix.as_slice()) {
        assert!((p - q).abs() < 1e-9);
    }
}
