//! Vector-field algebra: evaluation, Jacobians, Lie brackets, divergence
//! and linear combinations.
//!
//! Fields are immutable value objects; evaluation closures are shared
//! behind `Arc` and safe to call concurrently. Jacobians are analytic when
//! the constructor supplies one and central finite differences otherwise.
//! Brackets are evaluated lazily: no symbolic manipulation happens, the
//! bracket of two fields is just a new closure.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, CMat, Mat};

pub type EvalFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
pub type JacFn = dyn Fn(&[f64]) -> Result<Mat> + Send + Sync;
pub type CEvalFn = dyn Fn(&[f64]) -> Result<Vec<Complex64>> + Send + Sync;
pub type CJacFn = dyn Fn(&[f64]) -> Result<CMat> + Send + Sync;
pub type ScalarFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
pub type GradFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;

/// Real vector field on R^dim.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    label: Arc<str>,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jac.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(label: &str, dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        VectorField { dim, label: label.into(), eval: Arc::new(eval), jac: None }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64]) -> Result<Mat> + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(jac));
        self
    }

    /// Linear field y -> M y with its exact Jacobian.
    pub fn linear(label: &str, m: Mat) -> Self {
        assert_eq!(m.rows(), m.cols());
        let dim = m.rows();
        let m2 = m.clone();
        VectorField::new(label, dim, move |y| Ok(m.mul_vec(y)))
            .with_jacobian(move |_| Ok(m2.clone()))
    }

    /// Constant field with zero Jacobian.
    pub fn constant(label: &str, v: Vec<f64>) -> Self {
        let dim = v.len();
        let z = Mat::zeros(dim, dim);
        VectorField::new(label, dim, move |_| Ok(v.clone())).with_jacobian(move |_| Ok(z.clone()))
    }

    pub fn zero(dim: usize) -> Self {
        VectorField::constant("0", vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    /// Evaluate at a point. Output is checked finite.
    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(&self.label, self.dim, y.len())?;
        let v = (self.eval)(y)?;
        debug_assert_eq!(v.len(), self.dim);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::numeric(format!(
                "field '{}' returned a non-finite value at {y:?}",
                self.label
            )));
        }
        Ok(v)
    }

    /// Jacobian at a point: analytic when supplied, central differences
    /// with step h_i = eps^(1/3) max(1, |y_i|) otherwise.
    pub fn jacobian(&self, y: &[f64]) -> Result<Mat> {
        check_dim(&self.label, self.dim, y.len())?;
        match &self.jac {
            Some(j) => j(y),
            None => linalg::fd_jacobian(|p| (self.eval)(p), y, self.dim),
        }
    }

    /// Trace of the Jacobian.
    pub fn divergence(&self, y: &[f64]) -> Result<f64> {
        Ok(self.jacobian(y)?.trace())
    }

    /// Lie bracket [self, other](y) = dself(y) other(y) - dother(y) self(y).
    pub fn lie_bracket(&self, other: &VectorField) -> Result<VectorField> {
        check_dim("lie_bracket", self.dim, other.dim)?;
        let f1 = self.clone();
        let f2 = other.clone();
        let label = format!("[{},{}]", self.label, other.label);
        Ok(VectorField::new(&label, self.dim, move |y| {
            let j1 = f1.jacobian(y)?;
            let j2 = f2.jacobian(y)?;
            let v1 = f1.eval(y)?;
            let v2 = f2.eval(y)?;
            let a = j1.mul_vec(&v2);
            let b = j2.mul_vec(&v1);
            Ok(linalg::sub(&a, &b))
        }))
    }

    /// Pointwise linear combination sum_i coeffs[i] * fields[i].
    ///
    /// The result carries an analytic Jacobian when every operand does.
    pub fn combine(coeffs: &[f64], fields: &[VectorField]) -> Result<VectorField> {
        if coeffs.len() != fields.len() || fields.is_empty() {
            return Err(Error::usage("combine: need matching, nonempty coeffs and fields"));
        }
        let dim = fields[0].dim;
        for f in fields {
            check_dim("combine", dim, f.dim)?;
        }
        let cs = coeffs.to_vec();
        let fs: Vec<VectorField> = fields.to_vec();
        let label = format!(
            "lincomb({})",
            fs.iter().map(|f| f.label()).collect::<Vec<_>>().join(",")
        );
        let mut out = {
            let cs = cs.clone();
            let fs = fs.clone();
            VectorField::new(&label, dim, move |y| {
                let mut acc = vec![0.0; y.len()];
                for (c, f) in cs.iter().zip(&fs) {
                    if *c == 0.0 {
                        continue;
                    }
                    linalg::axpy(*c, &(f.eval)(y)?, &mut acc);
                }
                Ok(acc)
            })
        };
        if fs.iter().all(|f| f.jac.is_some()) {
            let fs2 = fs.clone();
            out = out.with_jacobian(move |y| {
                let mut acc = Mat::zeros(dim, dim);
                for (c, f) in cs.iter().zip(&fs2) {
                    if *c == 0.0 {
                        continue;
                    }
                    acc = acc.add(&f.jacobian(y)?.scale(*c));
                }
                Ok(acc)
            });
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> VectorField {
        VectorField::combine(&[c], std::slice::from_ref(self)).expect("single-field combine")
    }

    /// Agreement between the analytic Jacobian and central differences.
    pub fn jacobian_defect(&self, y: &[f64]) -> Result<f64> {
        let fd = linalg::fd_jacobian(|p| (self.eval)(p), y, self.dim)?;
        let an = self.jacobian(y)?;
        let scale = an.norm_inf().max(1.0);
        Ok(an.sub(&fd).norm_inf() / scale)
    }
}

/// Complex-valued vector field of a real point.
#[derive(Clone)]
pub struct ComplexVectorField {
    dim: usize,
    label: Arc<str>,
    eval: Arc<CEvalFn>,
    jac: Option<Arc<CJacFn>>,
}

impl std::fmt::Debug for ComplexVectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComplexVectorField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jac.is_some())
            .finish()
    }
}

impl ComplexVectorField {
    pub fn new<F>(label: &str, dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<Complex64>> + Send + Sync + 'static,
    {
        ComplexVectorField { dim, label: label.into(), eval: Arc::new(eval), jac: None }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64]) -> Result<CMat> + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn zero(dim: usize) -> Self {
        ComplexVectorField::new("0", dim, move |_| Ok(vec![Complex64::ZERO; dim]))
            .with_jacobian(move |_| Ok(CMat::zeros(dim, dim)))
    }

    pub fn from_real(f: &VectorField) -> Self {
        let label = f.label().to_string();
        let dim = f.dim();
        let g = f.clone();
        let mut out = ComplexVectorField::new(&label, dim, move |y| {
            Ok(g.eval(y)?.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
        });
        if f.has_analytic_jacobian() {
            let g = f.clone();
            out = out.with_jacobian(move |y| {
                let j = g.jacobian(y)?;
                Ok(CMat::from_fn(dim, dim, |i, k| Complex64::new(j.get(i, k), 0.0)))
            });
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    pub fn eval(&self, y: &[f64]) -> Result<Vec<Complex64>> {
        check_dim(&self.label, self.dim, y.len())?;
        let v = (self.eval)(y)?;
        if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::numeric(format!(
                "field '{}' returned a non-finite value at {y:?}",
                self.label
            )));
        }
        Ok(v)
    }

    pub fn jacobian(&self, y: &[f64]) -> Result<CMat> {
        check_dim(&self.label, self.dim, y.len())?;
        match &self.jac {
            Some(j) => j(y),
            None => linalg::fd_jacobian_c(|p| (self.eval)(p), y, self.dim),
        }
    }

    pub fn conj(&self) -> ComplexVectorField {
        let f = self.clone();
        let mut out =
            ComplexVectorField::new(&format!("conj({})", self.label), self.dim, move |y| {
                Ok(f.eval(y)?.into_iter().map(|x| x.conj()).collect())
            });
        if let Some(jac) = &self.jac {
            let jac = Arc::clone(jac);
            let dim = self.dim;
            out = out.with_jacobian(move |y| {
                let j = jac(y)?;
                Ok(CMat::from_fn(dim, dim, |i, k| j.get(i, k).conj()))
            });
        }
        out
    }

    pub fn lie_bracket(&self, other: &ComplexVectorField) -> Result<ComplexVectorField> {
        check_dim("lie_bracket", self.dim, other.dim)?;
        let f1 = self.clone();
        let f2 = other.clone();
        let label = format!("[{},{}]", self.label, other.label);
        Ok(ComplexVectorField::new(&label, self.dim, move |y| {
            let j1 = f1.jacobian(y)?;
            let j2 = f2.jacobian(y)?;
            let v1 = f1.eval(y)?;
            let v2 = f2.eval(y)?;
            let a = j1.mul_vec(&v2);
            let b = j2.mul_vec(&v1);
            Ok(a.into_iter().zip(b).map(|(x, z)| x - z).collect())
        }))
    }

    /// Pointwise complex linear combination. The result carries an
    /// analytic Jacobian when every operand does.
    pub fn combine(
        coeffs: &[Complex64],
        fields: &[ComplexVectorField],
    ) -> Result<ComplexVectorField> {
        if coeffs.len() != fields.len() || fields.is_empty() {
            return Err(Error::usage("combine: need matching, nonempty coeffs and fields"));
        }
        let dim = fields[0].dim;
        for f in fields {
            check_dim("combine", dim, f.dim)?;
        }
        let cs = coeffs.to_vec();
        let fs = fields.to_vec();
        let mut out = {
            let cs = cs.clone();
            let fs = fs.clone();
            ComplexVectorField::new("lincomb", dim, move |y| {
                let mut acc = vec![Complex64::ZERO; y.len()];
                for (c, f) in cs.iter().zip(&fs) {
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (a, v) in acc.iter_mut().zip(f.eval(y)?) {
                        *a += c * v;
                    }
                }
                Ok(acc)
            })
        };
        if fs.iter().all(|f| f.jac.is_some()) {
            out = out.with_jacobian(move |y| {
                let mut acc = CMat::zeros(dim, dim);
                for (c, f) in cs.iter().zip(&fs) {
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    let j = f.jacobian(y)?;
                    for i in 0..dim {
                        for k in 0..dim {
                            acc.set(i, k, acc.get(i, k) + c * j.get(i, k));
                        }
                    }
                }
                Ok(acc)
            });
        }
        Ok(out)
    }

    /// Project onto the real part, failing when the imaginary residue
    /// exceeds `tol * max(1, |real part|)`. An analytic Jacobian carries
    /// over as its real part.
    pub fn real_part_checked(&self, tol: f64) -> VectorField {
        let f = self.clone();
        let label = format!("Re({})", self.label);
        let mut out = VectorField::new(&label, self.dim, move |y| {
            let v = f.eval(y)?;
            let re: Vec<f64> = v.iter().map(|x| x.re).collect();
            let im_max = v.iter().fold(0.0_f64, |m, x| m.max(x.im.abs()));
            let scale = linalg::norm_inf(&re).max(1.0);
            if im_max > tol * scale {
                return Err(Error::numeric(format!(
                    "field '{}': imaginary residue {im_max:.3e} exceeds {tol:.1e} * {scale:.3e}; \
                     conjugate symmetry of the modes is broken",
                    f.label
                )));
            }
            Ok(re)
        });
        if let Some(jac) = &self.jac {
            let jac = Arc::clone(jac);
            let dim = self.dim;
            out = out.with_jacobian(move |y| {
                let j = jac(y)?;
                Ok(Mat::from_fn(dim, dim, |i, k| j.get(i, k).re))
            });
        }
        out
    }
}

/// Scalar field with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    label: Arc<str>,
    eval: Arc<ScalarFn>,
    grad: Option<Arc<GradFn>>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(label: &str, dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        ScalarField { dim, label: label.into(), eval: Arc::new(eval), grad: None }
    }

    pub fn with_gradient<G>(mut self, grad: G) -> Self
    where
        G: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        ScalarField::new(&format!("{value}"), dim, move |_| Ok(value))
            .with_gradient(move |y| Ok(vec![0.0; y.len()]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        check_dim(&self.label, self.dim, y.len())?;
        let v = (self.eval)(y)?;
        if !v.is_finite() {
            return Err(Error::numeric(format!(
                "scalar field '{}' returned a non-finite value at {y:?}",
                self.label
            )));
        }
        Ok(v)
    }

    pub fn gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(&self.label, self.dim, y.len())?;
        match &self.grad {
            Some(g) => g(y),
            None => linalg::fd_gradient(|p| (self.eval)(p), y),
        }
    }

    /// Lie derivative along a field: grad(self) . f(y).
    pub fn lie_derivative(&self, f: &VectorField, y: &[f64]) -> Result<f64> {
        let g = self.gradient(y)?;
        let v = f.eval(y)?;
        Ok(g.iter().zip(&v).map(|(a, b)| a * b).sum())
    }
}
