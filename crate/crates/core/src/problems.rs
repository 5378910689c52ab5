//! Corpus of differentiable maps `f: R^m -> R^n` with Jacobian access.
//!
//! All corpus parameters are fixed constants so that every downstream number
//! is reproducible. Dimension-free problems (identity, scale, sum, dot,
//! product, horner, cube) take `m` at construction; the rest have fixed
//! shapes.

use std::fmt::Debug;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const DEFAULT_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianKind {
    Analytic,
    FiniteDifference,
}

impl JacobianKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JacobianKind::Analytic => "analytic",
            JacobianKind::FiniteDifference => "finite-difference",
        }
    }
}

/// A differentiable map. Implementations may assume `x.len() == input_dim()`
/// and `out.len() == output_dim()`; the free functions check this.
pub trait Problem<T: Real>: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval_into(&self, x: &[T], out: &mut [T]);

    /// `n × m` matrix whose row `j` is `∇f_j(x)ᵀ`, when known in closed form.
    fn analytic_jacobian(&self, _x: &[T]) -> Option<Matrix<T>> {
        None
    }

    fn jacobian_kind(&self) -> JacobianKind {
        JacobianKind::Analytic
    }

    /// True when `f` is affine, so finite differences are exact up to rounding.
    fn is_linear(&self) -> bool {
        false
    }
}

/// Jacobian `Gᵀ` at a point: `n × m`, row `j` is the gradient of `f_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian<T> {
    pub matrix: Matrix<T>,
    pub point: Vec<T>,
    pub kind: JacobianKind,
}

impl<T: Real> Jacobian<T> {
    pub fn gradient(&self, j: usize) -> &[T] {
        self.matrix.row(j)
    }
}

fn check_input<T: Real>(p: &dyn Problem<T>, x: &[T]) -> Result<()> {
    if x.len() != p.input_dim() {
        return Err(Error::Dimension {
            expected: p.input_dim(),
            got: x.len(),
        });
    }
    Ok(())
}

pub fn evaluate<T: Real>(p: &dyn Problem<T>, x: &[T]) -> Result<Vec<T>> {
    check_input(p, x)?;
    let mut out = vec![T::zero(); p.output_dim()];
    p.eval_into(x, &mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("{} at {:?}", p.name(), x),
        });
    }
    Ok(out)
}

/// Analytic Jacobian when the problem has one, central differences otherwise.
pub fn jacobian<T: Real>(p: &dyn Problem<T>, x: &[T]) -> Result<Jacobian<T>> {
    check_input(p, x)?;
    match p.analytic_jacobian(x) {
        Some(matrix) => Ok(Jacobian {
            matrix,
            point: x.to_vec(),
            kind: JacobianKind::Analytic,
        }),
        None => fd_jacobian(p, x, T::lit(DEFAULT_FD_STEP)),
    }
}

/// Central differences with per-coordinate step `h_scale · max(|x_i|, 1)`.
pub fn fd_jacobian<T: Real>(p: &dyn Problem<T>, x: &[T], h_scale: T) -> Result<Jacobian<T>> {
    check_input(p, x)?;
    if !(h_scale > T::zero()) {
        return Err(crate::error::domain(
            "finite-difference step",
            format!("{h_scale}"),
        ));
    }
    let (m, n) = (p.input_dim(), p.output_dim());
    let mut matrix = Matrix::zeros(n, m);
    let mut probe = x.to_vec();
    let mut plus = vec![T::zero(); n];
    let mut minus = vec![T::zero(); n];
    for i in 0..m {
        let h = h_scale * x[i].abs().max(T::one());
        probe[i] = x[i] + h;
        let hi = probe[i];
        p.eval_into(&probe, &mut plus);
        probe[i] = x[i] - h;
        let lo = probe[i];
        p.eval_into(&probe, &mut minus);
        probe[i] = x[i];
        let width = hi - lo;
        for j in 0..n {
            let d = (plus[j] - minus[j]) / width;
            if !d.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("{} finite-difference stencil in coordinate {i}", p.name()),
                });
            }
            matrix[(j, i)] = d;
        }
    }
    Ok(Jacobian {
        matrix,
        point: x.to_vec(),
        kind: JacobianKind::FiniteDifference,
    })
}

/// Indices `j` with `f_j(x) = 0`, where componentwise condition numbers are infinite.
pub fn zero_outputs<T: Real>(fx: &[T]) -> Vec<usize> {
    fx.iter()
        .enumerate()
        .filter(|(_, v)| **v == T::zero())
        .map(|(j, _)| j)
        .collect()
}

// ---------------------------------------------------------------------------
// Corpus

#[derive(Debug, Clone)]
pub struct Identity {
    m: usize,
}

impl Identity {
    pub fn new(m: usize) -> Self {
        Self { m }
    }
}

impl<T: Real> Problem<T> for Identity {
    fn name(&self) -> &str {
        "identity"
    }
    fn input_dim(&self) -> usize {
        self.m
    }
    fn output_dim(&self) -> usize {
        self.m
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(x);
    }
    fn analytic_jacobian(&self, _x: &[T]) -> Option<Matrix<T>> {
        Some(Matrix::identity(self.m))
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `f(x) = c x`.
#[derive(Debug, Clone)]
pub struct Scale<T> {
    m: usize,
    c: T,
}

impl<T: Real> Scale<T> {
    pub fn new(m: usize, c: T) -> Self {
        Self { m, c }
    }
}

impl<T: Real> Problem<T> for Scale<T> {
    fn name(&self) -> &str {
        "scale"
    }
    fn input_dim(&self) -> usize {
        self.m
    }
    fn output_dim(&self) -> usize {
        self.m
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.c * v;
        }
    }
    fn analytic_jacobian(&self, _x: &[T]) -> Option<Matrix<T>> {
        Some(Matrix::identity(self.m).scaled(self.c))
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `f(x) = x_1 + … + x_m`.
#[derive(Debug, Clone)]
pub struct Sum {
    m: usize,
}

impl Sum {
    pub fn new(m: usize) -> Self {
        Self { m }
    }
}

impl<T: Real> Problem<T> for Sum {
    fn name(&self) -> &str {
        "sum"
    }
    fn input_dim(&self) -> usize {
        self.m
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        out[0] = x.iter().copied().sum();
    }
    fn analytic_jacobian(&self, _x: &[T]) -> Option<Matrix<T>> {
        Matrix::from_row_major(1, self.m, vec![T::one(); self.m]).ok()
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `f(x) = wᵀx` with the fixed weights `w_i = i + 1`.
#[derive(Debug, Clone)]
pub struct Dot<T> {
    w: Vec<T>,
}

impl<T: Real> Dot<T> {
    pub fn new(m: usize) -> Self {
        Self {
            w: (1..=m).map(T::count).collect(),
        }
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }
}

impl<T: Real> Problem<T> for Dot<T> {
    fn name(&self) -> &str {
        "dot"
    }
    fn input_dim(&self) -> usize {
        self.w.len()
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        out[0] = crate::linalg::dot(&self.w, x);
    }
    fn analytic_jacobian(&self, _x: &[T]) -> Option<Matrix<T>> {
        Matrix::from_row_major(1, self.w.len(), self.w.clone()).ok()
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `f(x) = x_1 x_2 ⋯ x_m`.
#[derive(Debug, Clone)]
pub struct Product {
    m: usize,
}

impl Product {
    pub fn new(m: usize) -> Self {
        Self { m }
    }
}

impl<T: Real> Problem<T> for Product {
    fn name(&self) -> &str {
        "product"
    }
    fn input_dim(&self) -> usize {
        self.m
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        out[0] = x.iter().fold(T::one(), |acc, &v| acc * v);
    }
    fn analytic_jacobian(&self, x: &[T]) -> Option<Matrix<T>> {
        // ∂/∂x_i = prefix_i · suffix_i, exact even when some x_j = 0.
        let m = x.len();
        let mut grad = vec![T::one(); m];
        let mut prefix = T::one();
        for i in 0..m {
            grad[i] = prefix;
            prefix *= x[i];
        }
        let mut suffix = T::one();
        for i in (0..m).rev() {
            grad[i] *= suffix;
            suffix *= x[i];
        }
        Matrix::from_row_major(1, m, grad).ok()
    }
}

/// Polynomial `Σ x_i t^i` in its coefficients `x`, evaluated by Horner's rule
/// at the fixed abscissa `t = 1.1`.
#[derive(Debug, Clone)]
pub struct Horner<T> {
    m: usize,
    t: T,
}

impl<T: Real> Horner<T> {
    pub const ABSCISSA: f64 = 1.1;

    pub fn new(m: usize) -> Self {
        Self {
            m,
            t: T::lit(Self::ABSCISSA),
        }
    }
}

impl<T: Real> Problem<T> for Horner<T> {
    fn name(&self) -> &str {
        "horner"
    }
    fn input_dim(&self) -> usize {
        self.m
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        out[0] = x.iter().rev().fold(T::zero(), |acc, &c| acc * self.t + c);
    }
    fn analytic_jacobian(&self, _x: &[T]) -> Option<Matrix<T>> {
        let mut powers = Vec::with_capacity(self.m);
        let mut p = T::one();
        for _ in 0..self.m {
            powers.push(p);
            p *= self.t;
        }
        Matrix::from_row_major(1, self.m, powers).ok()
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// Componentwise cube `f_i(x) = x_i³`.
#[derive(Debug, Clone)]
pub struct Cube {
    m: usize,
}

impl Cube {
    pub fn new(m: usize) -> Self {
        Self { m }
    }
}

impl<T: Real> Problem<T> for Cube {
    fn name(&self) -> &str {
        "cube"
    }
    fn input_dim(&self) -> usize {
        self.m
    }
    fn output_dim(&self) -> usize {
        self.m
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = v * v * v;
        }
    }
    fn analytic_jacobian(&self, x: &[T]) -> Option<Matrix<T>> {
        let d: Vec<T> = x.iter().map(|&v| T::lit(3.0) * v * v).collect();
        Some(Matrix::diagonal(&d))
    }
}

/// Polar to Cartesian, `(r, θ) ↦ (r cos θ, r sin θ)`.
#[derive(Debug, Clone, Default)]
pub struct Polar;

impl<T: Real> Problem<T> for Polar {
    fn name(&self) -> &str {
        "polar"
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        2
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        out[0] = x[0] * x[1].cos();
        out[1] = x[0] * x[1].sin();
    }
    fn analytic_jacobian(&self, x: &[T]) -> Option<Matrix<T>> {
        let (s, c) = x[1].sin_cos();
        Matrix::from_rows(&[vec![c, -x[0] * s], vec![s, x[0] * c]]).ok()
    }
}

/// Same map as [`Polar`] but exposing no analytic Jacobian, so callers fall
/// back to central differences.
#[derive(Debug, Clone, Default)]
pub struct PolarNumeric;

impl<T: Real> Problem<T> for PolarNumeric {
    fn name(&self) -> &str {
        "polar_fd"
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        2
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        Problem::<T>::eval_into(&Polar, x, out)
    }
    fn jacobian_kind(&self) -> JacobianKind {
        JacobianKind::FiniteDifference
    }
}

/// `f(x) = A x` for a fixed matrix.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    name: String,
    a: Matrix<T>,
}

impl<T: Real> Linear<T> {
    pub fn new(name: impl Into<String>, a: Matrix<T>) -> Self {
        Self {
            name: name.into(),
            a,
        }
    }

    /// `diag(2, 1)`.
    pub fn matvec() -> Self {
        Self::new("matvec", Matrix::diagonal(&[T::lit(2.0), T::one()]))
    }

    /// A fixed 3×2 matrix, so `n > m`.
    pub fn matvec_tall() -> Self {
        let a = Matrix::from_rows(&[
            vec![T::one(), T::lit(2.0)],
            vec![T::zero(), T::one()],
            vec![-T::one(), T::one()],
        ])
        .expect("static shape");
        Self::new("matvec_tall", a)
    }

    /// Reads a matrix file: first line `n m`, then `n` rows of `m`
    /// whitespace-separated decimals.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MatrixFile(format!("{}: {e}", path.display())))?;
        Ok(Self::new(path.display().to_string(), parse_matrix(&text)?))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.a
    }
}

impl<T: Real> Problem<T> for Linear<T> {
    fn name(&self) -> &str {
        &self.name
    }
    fn input_dim(&self) -> usize {
        self.a.cols()
    }
    fn output_dim(&self) -> usize {
        self.a.rows()
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        self.a.mul_vec_into(x, out);
    }
    fn analytic_jacobian(&self, _x: &[T]) -> Option<Matrix<T>> {
        Some(self.a.clone())
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `f(b) = A⁻¹ b`, evaluated by Gaussian elimination.
#[derive(Debug, Clone)]
pub struct LinearSolve<T> {
    name: &'static str,
    a: Matrix<T>,
    inverse: Matrix<T>,
}

impl<T: Real> LinearSolve<T> {
    pub fn new(name: &'static str, a: Matrix<T>) -> Result<Self> {
        let inverse = a.inverse()?;
        Ok(Self { name, a, inverse })
    }

    /// `A = [[4, 1], [1, 3]]`, condition number about 1.94.
    pub fn well_conditioned() -> Self {
        let a = Matrix::from_rows(&[vec![T::lit(4.0), T::one()], vec![T::one(), T::lit(3.0)]])
            .expect("static shape");
        Self::new("solve_well", a).expect("nonsingular")
    }

    /// `A = Q diag(1, 1e-4) Qᵀ` with `Q` the 45° rotation:
    /// `[[0.50005, 0.49995], [0.49995, 0.50005]]`, condition number 1e4.
    /// At the documented test point `b = (1, 1)` the norm-wise condition
    /// number equals 1e4.
    pub fn ill_conditioned() -> Self {
        let a = Matrix::from_rows(&[
            vec![T::lit(0.50005), T::lit(0.49995)],
            vec![T::lit(0.49995), T::lit(0.50005)],
        ])
        .expect("static shape");
        Self::new("solve_ill", a).expect("nonsingular")
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.a
    }
}

impl<T: Real> Problem<T> for LinearSolve<T> {
    fn name(&self) -> &str {
        self.name
    }
    fn input_dim(&self) -> usize {
        self.a.cols()
    }
    fn output_dim(&self) -> usize {
        self.a.rows()
    }
    fn eval_into(&self, x: &[T], out: &mut [T]) {
        match self.a.solve(x) {
            Ok(v) => out.copy_from_slice(&v),
            Err(_) => out.iter_mut().for_each(|o| *o = T::nan()),
        }
    }
    fn analytic_jacobian(&self, _x: &[T]) -> Option<Matrix<T>> {
        Some(self.inverse.clone())
    }
    fn is_linear(&self) -> bool {
        true
    }
}

pub fn parse_matrix<T: Real>(text: &str) -> Result<Matrix<T>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixFile("empty file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::MatrixFile(format!("bad header `{header}`: {e}")))?;
    let [n, m] = dims[..] else {
        return Err(Error::MatrixFile(format!(
            "header must be `n m`, got `{header}`"
        )));
    };
    if n == 0 || m == 0 {
        return Err(Error::MatrixFile("empty dimensions".into()));
    }
    let mut rows = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        if i >= n {
            return Err(Error::MatrixFile(format!("more than {n} rows")));
        }
        let row: Vec<T> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map(T::lit))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MatrixFile(format!("row {}: {e}", i + 1)))?;
        if row.len() != m {
            return Err(Error::MatrixFile(format!(
                "row {} has {} entries, expected {m}",
                i + 1,
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::MatrixFile(format!(
                "row {}: non-finite entry",
                i + 1
            )));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::MatrixFile(format!(
            "expected {n} rows, found {}",
            rows.len()
        )));
    }
    Matrix::from_rows(&rows)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDescriptor {
    pub name: &'static str,
    /// `None` for dimension-free problems.
    pub input_dim: Option<usize>,
    pub output_dim: Option<usize>,
    pub summary: &'static str,
}

pub fn list_problems() -> Vec<ProblemDescriptor> {
    let d = |name, input_dim, output_dim, summary| ProblemDescriptor {
        name,
        input_dim,
        output_dim,
        summary,
    };
    vec![
        d("identity", None, None, "f(x) = x"),
        d("scale", None, None, "f(x) = 3x"),
        d("sum", None, Some(1), "f(x) = x_1 + ... + x_m"),
        d("dot", None, Some(1), "f(x) = w'x, w_i = i"),
        d("product", None, Some(1), "f(x) = x_1 x_2 ... x_m"),
        d(
            "horner",
            None,
            Some(1),
            "polynomial with coefficients x at t = 1.1",
        ),
        d("cube", None, None, "f_i(x) = x_i^3"),
        d("polar", Some(2), Some(2), "(r, t) -> (r cos t, r sin t)"),
        d(
            "polar_fd",
            Some(2),
            Some(2),
            "polar map, finite-difference Jacobian",
        ),
        d("matvec", Some(2), Some(2), "f(x) = diag(2, 1) x"),
        d("matvec_tall", Some(2), Some(3), "f(x) = A x, A fixed 3x2"),
        d(
            "solve_well",
            Some(2),
            Some(2),
            "f(b) = A^-1 b, A = [[4,1],[1,3]]",
        ),
        d(
            "solve_ill",
            Some(2),
            Some(2),
            "f(b) = A^-1 b, cond(A) = 1e4",
        ),
    ]
}

/// Builds a corpus problem; `dim` sets `m` for dimension-free problems
/// (default 2) and must match the fixed shape otherwise.
pub fn problem_by_name<T: Real>(name: &str, dim: Option<usize>) -> Result<Box<dyn Problem<T>>> {
    let m = dim.unwrap_or(DEFAULT_DIM);
    if m == 0 {
        return Err(crate::error::domain("input dimension", "0"));
    }
    let p: Box<dyn Problem<T>> = match name {
        "identity" => Box::new(Identity::new(m)),
        "scale" => Box::new(Scale::new(m, T::lit(3.0))),
        "sum" => Box::new(Sum::new(m)),
        "dot" => Box::new(Dot::<T>::new(m)),
        "product" => Box::new(Product::new(m)),
        "horner" => Box::new(Horner::<T>::new(m)),
        "cube" => Box::new(Cube::new(m)),
        "polar" => Box::new(Polar),
        "polar_fd" => Box::new(PolarNumeric),
        "matvec" => Box::new(Linear::<T>::matvec()),
        "matvec_tall" => Box::new(Linear::<T>::matvec_tall()),
        "solve_well" => Box::new(LinearSolve::<T>::well_conditioned()),
        "solve_ill" => Box::new(LinearSolve::<T>::ill_conditioned()),
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    if let Some(d) = dim {
        if p.input_dim() != d {
            return Err(Error::Dimension {
                expected: p.input_dim(),
                got: d,
            });
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn get(name: &str, m: Option<usize>) -> Box<dyn Problem<f64>> {
        problem_by_name(name, m).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(
            evaluate(get("identity", Some(2)).as_ref(), &[3.0, 4.0]).unwrap(),
            vec![3.0, 4.0]
        );
        assert_eq!(
            evaluate(get("product", Some(2)).as_ref(), &[2.0, 5.0]).unwrap(),
            vec![10.0]
        );
        assert_eq!(
            evaluate(get("matvec", None).as_ref(), &[1.0, 1.0]).unwrap(),
            vec![2.0, 1.0]
        );
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let p = get("identity", Some(3));
        assert_eq!(
            evaluate(p.as_ref(), &[1.0, 2.0]),
            Err(Error::Dimension {
                expected: 3,
                got: 2
            })
        );
        assert!(jacobian(p.as_ref(), &[1.0]).is_err());
    }

    #[test]
    fn evaluate_flags_non_finite() {
        let p = get("cube", Some(1));
        assert!(matches!(
            evaluate(p.as_ref(), &[1e200]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn jacobian_examples() {
        let j = jacobian(get("identity", Some(3)).as_ref(), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(j.matrix, Matrix::identity(3));
        let j = jacobian(get("product", Some(2)).as_ref(), &[2.0, 5.0]).unwrap();
        assert_eq!(j.gradient(0), &[5.0, 2.0]);
        // A⁻¹ for A = [[4,1],[1,3]] is [[3,-1],[-1,4]] / 11.
        let j = jacobian(get("solve_well", None).as_ref(), &[0.3, -7.0]).unwrap();
        let expect = [3.0 / 11.0, -1.0 / 11.0, -1.0 / 11.0, 4.0 / 11.0];
        for (a, b) in j.matrix.as_slice().iter().zip(expect) {
            assert_relative_eq!(*a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn ill_conditioned_inverse_entries() {
        let j = jacobian(get("solve_ill", None).as_ref(), &[1.0, 1.0]).unwrap();
        let expect = [5000.5, -4999.5, -4999.5, 5000.5];
        for (a, b) in j.matrix.as_slice().iter().zip(expect) {
            assert_relative_eq!(*a, b, max_relative = 1e-9);
        }
    }

    #[test]
    fn fd_examples() {
        let lin = get("matvec_tall", None);
        let x = [0.7, -1.3];
        let fd = fd_jacobian(lin.as_ref(), &x, 0.37).unwrap();
        let an = jacobian(lin.as_ref(), &x).unwrap();
        for (a, b) in fd.matrix.as_slice().iter().zip(an.matrix.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
        let fd = fd_jacobian(get("product", Some(2)).as_ref(), &[2.0, 5.0], 1e-5).unwrap();
        assert!((fd.matrix[(0, 0)] - 5.0).abs() < 1e-8);
        assert!((fd.matrix[(0, 1)] - 2.0).abs() < 1e-8);
        let fd = fd_jacobian(get("cube", Some(1)).as_ref(), &[1.0], 1e-5).unwrap();
        assert!((fd.matrix[(0, 0)] - 3.0).abs() < 1e-8);
        assert_eq!(fd.kind, JacobianKind::FiniteDifference);
    }

    #[test]
    fn fd_rejects_bad_step_and_nonfinite_stencil() {
        let p = get("cube", Some(1));
        assert!(fd_jacobian(p.as_ref(), &[1.0], 0.0).is_err());
        assert!(matches!(
            fd_jacobian(p.as_ref(), &[1e103], 1e-5),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn numeric_polar_falls_back() {
        let p = get("polar_fd", None);
        let j = jacobian(p.as_ref(), &[2.0, 0.5]).unwrap();
        assert_eq!(j.kind, JacobianKind::FiniteDifference);
        assert!((j.matrix[(1, 1)] - 2.0 * 0.5_f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn product_gradient_with_zero_entry() {
        let j = jacobian(get("product", Some(3)).as_ref(), &[0.0, 2.0, 3.0]).unwrap();
        assert_eq!(j.gradient(0), &[6.0, 0.0, 0.0]);
    }

    #[test]
    fn every_listed_problem_round_trips() {
        let list = list_problems();
        assert!(list.iter().any(|d| d.name == "identity"));
        for d in list {
            let p = problem_by_name::<f64>(d.name, d.input_dim).unwrap();
            assert_eq!(p.name(), d.name);
            if let Some(n) = d.output_dim {
                assert_eq!(p.output_dim(), n);
            }
        }
        assert!(matches!(
            problem_by_name::<f64>("nope", None),
            Err(Error::UnknownProblem(_))
        ));
        assert!(problem_by_name::<f64>("polar", Some(3)).is_err());
    }

    #[test]
    fn zero_outputs_listed() {
        assert_eq!(zero_outputs(&[1.0, 0.0, -0.0, 2.0]), vec![1, 2]);
    }

    #[test]
    fn matrix_file_parsing() {
        let a: Matrix<f64> = parse_matrix("2 3\n1 2 3\n4.5 -1e-3 0\n\n").unwrap();
        assert_eq!((a.rows(), a.cols()), (2, 3));
        assert_eq!(a[(1, 1)], -1e-3);
        assert!(parse_matrix::<f64>("").is_err());
        assert!(parse_matrix::<f64>("2 2\n1 2\n").is_err());
        assert!(parse_matrix::<f64>("1 2\n1 2 3\n").is_err());
        assert!(parse_matrix::<f64>("1 2\n1 x\n").is_err());
        assert!(parse_matrix::<f64>("1\n1\n").is_err());
        assert!(parse_matrix::<f64>("1 1\n1\n2\n").is_err());
    }

    #[test]
    fn horner_matches_direct_sum() {
        let p = get("horner", Some(4));
        let x = [1.0, -2.0, 0.5, 3.0];
        let t: f64 = 1.1;
        let direct: f64 = x
            .iter()
            .enumerate()
            .map(|(i, c)| c * t.powi(i as i32))
            .sum();
        assert_relative_eq!(
            evaluate(p.as_ref(), &x).unwrap()[0],
            direct,
            max_relative = 1e-15
        );
    }
}
