//! Datasets, ball domains and finite-sum problem descriptors.
//!
//! A problem couples a [`SampleSet`] with a per-sample loss oracle, a
//! Euclidean ball domain and caller-certified constants (Lipschitz bound `L`,
//! smoothness `ell`, strong-convexity moduli). The canonical constructors
//! compute the constants in closed form from bounds on the data.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{axpy, dist, dist_sq, dot, mat_t_vec, mat_vec, norm, norm_sq};

/// Ordered collection of equal-length sample vectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    dim: usize,
}

impl SampleSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("sample dimension must be positive".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "flat sample buffer of length {} does not hold a positive number of {dim}-vectors",
                data.len()
            )));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("sample set must hold at least one sample".into()))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            check_dim(dim, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// Parse the plain-text matrix format: one sample per line,
    /// whitespace-separated decimals. Blank lines and `#` comments are skipped.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut data = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut count = 0;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    Error::InvalidArgument(format!("line {}: cannot parse `{tok}` as a number", lineno + 1))
                })?;
                data.push(v);
                count += 1;
            }
            match dim {
                None => dim = Some(count),
                Some(d) if d != count => {
                    return Err(Error::InvalidArgument(format!(
                        "line {}: expected {d} values, found {count}",
                        lineno + 1
                    )))
                }
                _ => {}
            }
        }
        let dim = dim.ok_or_else(|| Error::InvalidArgument("sample file contains no samples".into()))?;
        Self::new(dim, data)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Contiguous sub-block of samples.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "invalid sample range {range:?} for {} samples",
                self.len()
            )));
        }
        Self::new(self.dim, self.data[range.start * self.dim..range.end * self.dim].to_vec())
    }

    /// Neighboring dataset: sample `i` replaced by `sample`.
    pub fn with_replaced(&self, i: usize, sample: &[f64]) -> Result<Self> {
        check_dim(self.dim, sample.len())?;
        if i >= self.len() {
            return Err(Error::InvalidArgument(format!("index {i} out of range")));
        }
        let mut data = self.data.clone();
        data[i * self.dim..(i + 1) * self.dim].copy_from_slice(sample);
        Ok(Self { data, dim: self.dim })
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in self.iter() {
            axpy(1.0, row, &mut m);
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    pub fn max_row_norm(&self) -> f64 {
        self.iter().map(norm).fold(0.0, f64::max)
    }
}

const BOUNDARY_TOLERANCE: f64 = 1e-14;

/// Closed Euclidean ball `{x : ||x - center|| <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallDomain {
    center: Vec<f64>,
    radius: f64,
}

impl BallDomain {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidArgument("domain dimension must be positive".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], radius)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Largest norm of any point of the ball.
    pub fn max_norm(&self) -> f64 {
        norm(&self.center) + self.radius
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        dist(point, &self.center) <= self.radius * (1.0 + BOUNDARY_TOLERANCE)
    }

    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), point.len())?;
        let mut p = point.to_vec();
        self.project_in_place(&mut p);
        Ok(p)
    }

    /// Radial projection; points already in the ball are left untouched.
    /// Points within a few ulps outside the sphere count as inside, which
    /// makes projection exactly idempotent.
    pub fn project_in_place(&self, point: &mut [f64]) {
        let r = dist(point, &self.center);
        if r > self.radius * (1.0 + BOUNDARY_TOLERANCE) {
            let s = self.radius / r;
            for (p, c) in point.iter_mut().zip(&self.center) {
                *p = c + s * (*p - c);
            }
        }
    }

    /// Point drawn uniformly from the ball.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&dir);
        let u: f64 = rng.random();
        let r = self.radius * u.powf(1.0 / d as f64);
        for (v, c) in dir.iter_mut().zip(&self.center) {
            *v = c + r * *v / len;
        }
        dir
    }
}

/// Certified constants of a minimization loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinConstants {
    pub lipschitz: f64,
    pub smoothness: f64,
    /// Zero for merely convex losses.
    pub strong_convexity: f64,
}

/// Families with closed-form structure known to the oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinLossKind {
    Quadratic { mu: f64 },
    Logistic { ridge: f64 },
    Custom,
}

/// Per-sample loss oracle `f(x; xi)`.
pub trait MinLoss: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64], xi: &[f64]) -> f64;
    /// Writes the gradient at `x` into `out`.
    fn grad(&self, x: &[f64], xi: &[f64], out: &mut [f64]);
    /// Dimension of the decision variable for samples of width `sample_dim`.
    fn decision_dim(&self, sample_dim: usize) -> usize;
    fn kind(&self) -> MinLossKind {
        MinLossKind::Custom
    }
}

/// `(mu/2) ||x - xi||^2`
#[derive(Debug, Clone, Copy)]
pub struct QuadraticLoss {
    pub mu: f64,
}

impl MinLoss for QuadraticLoss {
    fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        0.5 * self.mu * dist_sq(x, xi)
    }

    fn grad(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(x).zip(xi) {
            *o = self.mu * (a - b);
        }
    }

    fn decision_dim(&self, sample_dim: usize) -> usize {
        sample_dim
    }

    fn kind(&self) -> MinLossKind {
        MinLossKind::Quadratic { mu: self.mu }
    }
}

/// `log(1 + exp(-b <a, x>)) + (ridge/2) ||x||^2` with sample layout `(a, b)`.
#[derive(Debug, Clone, Copy)]
pub struct LogisticLoss {
    pub ridge: f64,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl MinLoss for LogisticLoss {
    fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        let (a, b) = xi.split_at(x.len());
        softplus(-b[0] * dot(a, x)) + 0.5 * self.ridge * norm_sq(x)
    }

    fn grad(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        let (a, b) = xi.split_at(x.len());
        let label = b[0];
        // d/dx log(1 + e^{-b<a,x>}) = -b * sigmoid(-b<a,x>) * a
        let w = -label * sigmoid(-label * dot(a, x));
        for ((o, ai), xv) in out.iter_mut().zip(a).zip(x) {
            *o = w * ai + self.ridge * xv;
        }
    }

    fn decision_dim(&self, sample_dim: usize) -> usize {
        sample_dim - 1
    }

    fn kind(&self) -> MinLossKind {
        MinLossKind::Logistic { ridge: self.ridge }
    }
}

/// Finite-sum minimization problem `min_{x in domain} (1/n) sum_i f(x; xi_i)`.
#[derive(Debug, Clone)]
pub struct MinProblem {
    samples: SampleSet,
    loss: Arc<dyn MinLoss>,
    domain: BallDomain,
    constants: MinConstants,
}

impl MinProblem {
    pub fn new(samples: SampleSet, loss: Arc<dyn MinLoss>, domain: BallDomain, constants: MinConstants) -> Result<Self> {
        check_dim(loss.decision_dim(samples.dim()), domain.dim())?;
        let MinConstants { lipschitz, smoothness, strong_convexity } = constants;
        if !(lipschitz >= 0.0 && smoothness >= 0.0 && strong_convexity >= 0.0) {
            return Err(Error::InvalidArgument("certified constants must be non-negative".into()));
        }
        Ok(Self { samples, loss, domain, constants })
    }

    /// Same loss, domain and constants over a different sample set.
    pub fn with_samples(&self, samples: SampleSet) -> Result<Self> {
        check_dim(self.samples.dim(), samples.dim())?;
        Ok(Self { samples, ..self.clone() })
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn loss(&self) -> &dyn MinLoss {
        self.loss.as_ref()
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn constants(&self) -> MinConstants {
        self.constants
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn empirical_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let total: f64 = self.samples.iter().map(|xi| self.loss.value(x, xi)).sum();
        Ok(total / self.n() as f64)
    }

    pub fn empirical_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut g = vec![0.0; self.dim()];
        self.empirical_grad_into(x, &mut g);
        Ok(g)
    }

    pub(crate) fn empirical_grad_into(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; self.dim()];
        out.iter_mut().for_each(|o| *o = 0.0);
        for xi in self.samples.iter() {
            self.loss.grad(x, xi, &mut tmp);
            axpy(1.0, &tmp, out);
        }
        let n = self.n() as f64;
        out.iter_mut().for_each(|o| *o /= n);
    }
}

/// Quadratic anchor regularizer `(mu/2) ||x - anchor||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorRegularizer {
    pub mu: f64,
    pub anchor: Vec<f64>,
}

impl AnchorRegularizer {
    pub fn new(mu: f64, anchor: Vec<f64>) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("regularizer modulus must be non-negative, got {mu}")));
        }
        Ok(Self { mu, anchor })
    }
}

/// Quadratic loss `(mu/2)||x - xi||^2`. The sample radius bound `R` is taken
/// from the data.
pub fn make_quadratic_min_problem(samples: SampleSet, mu: f64, domain: BallDomain) -> Result<MinProblem> {
    let r = samples.max_row_norm();
    make_quadratic_min_problem_bounded(samples, mu, domain, r)
}

/// Quadratic loss with an a-priori bound `||xi|| <= sample_radius` on every
/// sample the distribution can produce. The certified Lipschitz constant is
/// `mu * (max_{x in domain} ||x|| + sample_radius)`.
pub fn make_quadratic_min_problem_bounded(
    samples: SampleSet,
    mu: f64,
    domain: BallDomain,
    sample_radius: f64,
) -> Result<MinProblem> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("quadratic modulus must be positive, got {mu}")));
    }
    if samples.max_row_norm() > sample_radius * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument("samples exceed the declared sample radius".into()));
    }
    let constants = MinConstants {
        lipschitz: mu * (domain.max_norm() + sample_radius),
        smoothness: mu,
        strong_convexity: mu,
    };
    MinProblem::new(samples, Arc::new(QuadraticLoss { mu }), domain, constants)
}

/// Logistic regression. Samples are `(a_1..a_d, b)` with `b` in `{-1, +1}`.
pub fn make_logistic_min_problem(samples: SampleSet, domain: BallDomain, ridge: f64) -> Result<MinProblem> {
    let d = samples.dim().saturating_sub(1);
    let r = samples.iter().map(|s| norm(&s[..d])).fold(0.0, f64::max);
    make_logistic_min_problem_bounded(samples, domain, ridge, r)
}

/// Logistic regression with an a-priori feature-norm bound `R`:
/// `L = R + ridge * D` and `ell = R^2/4 + ridge`.
pub fn make_logistic_min_problem_bounded(
    samples: SampleSet,
    domain: BallDomain,
    ridge: f64,
    feature_radius: f64,
) -> Result<MinProblem> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge must be non-negative, got {ridge}")));
    }
    if samples.dim() < 2 {
        return Err(Error::InvalidArgument("logistic samples need at least one feature and a label".into()));
    }
    let d = samples.dim() - 1;
    for (i, s) in samples.iter().enumerate() {
        let label = s[d];
        if label != 1.0 && label != -1.0 {
            return Err(Error::InvalidArgument(format!("sample {i}: label must be -1 or +1, got {label}")));
        }
        if norm(&s[..d]) > feature_radius * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("sample {i}: feature norm exceeds declared bound")));
        }
    }
    let constants = MinConstants {
        lipschitz: feature_radius + ridge * domain.max_norm(),
        smoothness: feature_radius * feature_radius / 4.0 + ridge,
        strong_convexity: ridge,
    };
    MinProblem::new(samples, Arc::new(LogisticLoss { ridge }), domain, constants)
}

/// Certified constants of a minimax loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxConstants {
    pub lipschitz: f64,
    pub smoothness: f64,
    pub mu_x: f64,
    pub mu_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SaddleLossKind {
    BilinearQuadratic { dx: usize, dy: usize, mu_x: f64, mu_y: f64 },
    Custom,
}

/// Per-sample saddle oracle `f(x, y; xi)`, convex in `x` and concave in `y`.
pub trait SaddleLoss: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64], y: &[f64], xi: &[f64]) -> f64;
    /// Writes both partial gradients.
    fn grad(&self, x: &[f64], y: &[f64], xi: &[f64], gx: &mut [f64], gy: &mut [f64]);
    fn dims(&self) -> (usize, usize);
    fn sample_dim(&self) -> usize;
    fn kind(&self) -> SaddleLossKind {
        SaddleLossKind::Custom
    }
}

/// `(mu_x/2)||x||^2 + y^T (A x - b) - (mu_y/2)||y||^2` with sample layout
/// `(A row-major [dy x dx], b [dy])`.
#[derive(Debug, Clone, Copy)]
pub struct BilinearQuadraticLoss {
    pub dx: usize,
    pub dy: usize,
    pub mu_x: f64,
    pub mu_y: f64,
}

impl BilinearQuadraticLoss {
    pub fn split<'a>(&self, xi: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        xi.split_at(self.dx * self.dy)
    }
}

impl SaddleLoss for BilinearQuadraticLoss {
    fn value(&self, x: &[f64], y: &[f64], xi: &[f64]) -> f64 {
        let (a, b) = self.split(xi);
        let mut ax = vec![0.0; self.dy];
        mat_vec(a, self.dy, self.dx, x, &mut ax);
        0.5 * self.mu_x * norm_sq(x) + dot(y, &ax) - dot(y, b) - 0.5 * self.mu_y * norm_sq(y)
    }

    fn grad(&self, x: &[f64], y: &[f64], xi: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        let (a, b) = self.split(xi);
        mat_t_vec(a, self.dy, self.dx, y, gx);
        axpy(self.mu_x, x, gx);
        mat_vec(a, self.dy, self.dx, x, gy);
        for ((g, bi), yi) in gy.iter_mut().zip(b).zip(y) {
            *g -= bi + self.mu_y * yi;
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.dx, self.dy)
    }

    fn sample_dim(&self) -> usize {
        self.dx * self.dy + self.dy
    }

    fn kind(&self) -> SaddleLossKind {
        SaddleLossKind::BilinearQuadratic { dx: self.dx, dy: self.dy, mu_x: self.mu_x, mu_y: self.mu_y }
    }
}

/// Finite-sum saddle problem `min_x max_y (1/n) sum_i f(x, y; xi_i)`.
#[derive(Debug, Clone)]
pub struct MinimaxProblem {
    samples: SampleSet,
    loss: Arc<dyn SaddleLoss>,
    domain_x: BallDomain,
    domain_y: BallDomain,
    constants: MinimaxConstants,
}

impl MinimaxProblem {
    pub fn new(
        samples: SampleSet,
        loss: Arc<dyn SaddleLoss>,
        domain_x: BallDomain,
        domain_y: BallDomain,
        constants: MinimaxConstants,
    ) -> Result<Self> {
        let (dx, dy) = loss.dims();
        check_dim(loss.sample_dim(), samples.dim())?;
        check_dim(dx, domain_x.dim())?;
        check_dim(dy, domain_y.dim())?;
        let MinimaxConstants { lipschitz, smoothness, mu_x, mu_y } = constants;
        if !(lipschitz >= 0.0 && smoothness >= 0.0 && mu_x >= 0.0 && mu_y >= 0.0) {
            return Err(Error::InvalidArgument("certified constants must be non-negative".into()));
        }
        Ok(Self { samples, loss, domain_x, domain_y, constants })
    }

    pub fn with_samples(&self, samples: SampleSet) -> Result<Self> {
        check_dim(self.samples.dim(), samples.dim())?;
        Ok(Self { samples, ..self.clone() })
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn loss(&self) -> &dyn SaddleLoss {
        self.loss.as_ref()
    }

    pub fn domain_x(&self) -> &BallDomain {
        &self.domain_x
    }

    pub fn domain_y(&self) -> &BallDomain {
        &self.domain_y
    }

    pub fn constants(&self) -> MinimaxConstants {
        self.constants
    }

    pub fn dims(&self) -> (usize, usize) {
        self.loss.dims()
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn empirical_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (dx, dy) = self.dims();
        check_dim(dx, x.len())?;
        check_dim(dy, y.len())?;
        let total: f64 = self.samples.iter().map(|xi| self.loss.value(x, y, xi)).sum();
        Ok(total / self.n() as f64)
    }

    pub fn empirical_grad(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (dx, dy) = self.dims();
        check_dim(dx, x.len())?;
        check_dim(dy, y.len())?;
        let mut gx = vec![0.0; dx];
        let mut gy = vec![0.0; dy];
        self.empirical_grad_into(x, y, &mut gx, &mut gy);
        Ok((gx, gy))
    }

    pub(crate) fn empirical_grad_into(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        let (dx, dy) = self.dims();
        let mut tx = vec![0.0; dx];
        let mut ty = vec![0.0; dy];
        gx.iter_mut().for_each(|v| *v = 0.0);
        gy.iter_mut().for_each(|v| *v = 0.0);
        for xi in self.samples.iter() {
            self.loss.grad(x, y, xi, &mut tx, &mut ty);
            axpy(1.0, &tx, gx);
            axpy(1.0, &ty, gy);
        }
        let n = self.n() as f64;
        gx.iter_mut().chain(gy.iter_mut()).for_each(|v| *v /= n);
    }
}

/// Spectral norm of a row-major `rows x cols` matrix.
pub fn spectral_norm(m: &[f64], rows: usize, cols: usize) -> f64 {
    let mat = DMatrix::from_row_slice(rows, cols, m);
    mat.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Bounds on the matrix and offset parts of every bilinear sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearBounds {
    /// Upper bound on the spectral norm of any `A_i`.
    pub matrix_norm: f64,
    /// Upper bound on `||b_i||`.
    pub offset_norm: f64,
}

/// Bilinear-quadratic saddle problem from per-sample matrices `A_i` (each
/// `dy x dx`, row-major) and offsets `b_i`. Constants are computed from the
/// data.
#[allow(clippy::too_many_arguments)]
pub fn make_bilinear_saddle_problem(
    matrices: &[Vec<f64>],
    offsets: &[Vec<f64>],
    dx: usize,
    dy: usize,
    mu_x: f64,
    mu_y: f64,
    domain_x: BallDomain,
    domain_y: BallDomain,
) -> Result<MinimaxProblem> {
    if matrices.len() != offsets.len() || matrices.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "need matching non-empty lists of matrices and offsets, got {} and {}",
            matrices.len(),
            offsets.len()
        )));
    }
    let mut rows = Vec::with_capacity(matrices.len());
    for (a, b) in matrices.iter().zip(offsets) {
        if a.len() != dx * dy {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} entries, expected {dy}x{dx}",
                a.len()
            )));
        }
        check_dim(dy, b.len())?;
        let mut row = a.clone();
        row.extend_from_slice(b);
        rows.push(row);
    }
    let samples = SampleSet::from_rows(&rows)?;
    bilinear_problem_from_samples(samples, dx, dy, mu_x, mu_y, domain_x, domain_y, None)
}

/// Bilinear-quadratic problem over already-encoded samples. With `bounds`
/// the constants hold for every sample of the generating family, not only
/// the ones present.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_problem_from_samples(
    samples: SampleSet,
    dx: usize,
    dy: usize,
    mu_x: f64,
    mu_y: f64,
    domain_x: BallDomain,
    domain_y: BallDomain,
    bounds: Option<BilinearBounds>,
) -> Result<MinimaxProblem> {
    if !(mu_x >= 0.0 && mu_y >= 0.0) {
        return Err(Error::InvalidArgument("moduli must be non-negative".into()));
    }
    let loss = BilinearQuadraticLoss { dx, dy, mu_x, mu_y };
    check_dim(loss.sample_dim(), samples.dim())?;
    let observed = || {
        let mut a_max: f64 = 0.0;
        let mut b_max: f64 = 0.0;
        for s in samples.iter() {
            let (a, b) = loss.split(s);
            a_max = a_max.max(spectral_norm(a, dy, dx));
            b_max = b_max.max(norm(b));
        }
        BilinearBounds { matrix_norm: a_max, offset_norm: b_max }
    };
    let bounds = match bounds {
        Some(b) => {
            let seen = observed();
            if seen.matrix_norm > b.matrix_norm * (1.0 + 1e-9) || seen.offset_norm > b.offset_norm * (1.0 + 1e-9) {
                return Err(Error::InvalidArgument("samples exceed the declared bilinear bounds".into()));
            }
            b
        }
        None => observed(),
    };
    let constants = bilinear_constants(&loss, bounds, &domain_x, &domain_y);
    MinimaxProblem::new(samples, Arc::new(loss), domain_x, domain_y, constants)
}

/// Closed-form certified constants of the bilinear-quadratic family.
///
/// Over the domains, `||grad_x|| <= mu_x Rx + a Ry` and
/// `||grad_y|| <= a Rx + b + mu_y Ry`. The Jacobian of the gradient field
/// `[[mu_x I, A^T], [A, -mu_y I]]` has norm at most
/// `sqrt(max(mu_x, mu_y)^2 + a^2 + |mu_x - mu_y| a)`.
fn bilinear_constants(
    loss: &BilinearQuadraticLoss,
    bounds: BilinearBounds,
    domain_x: &BallDomain,
    domain_y: &BallDomain,
) -> MinimaxConstants {
    let (rx, ry) = (domain_x.max_norm(), domain_y.max_norm());
    let a = bounds.matrix_norm;
    let gx = loss.mu_x * rx + a * ry;
    let gy = a * rx + bounds.offset_norm + loss.mu_y * ry;
    let m = loss.mu_x.max(loss.mu_y);
    MinimaxConstants {
        lipschitz: (gx * gx + gy * gy).sqrt(),
        smoothness: (m * m + a * a + (loss.mu_x - loss.mu_y).abs() * a).sqrt(),
        mu_x: loss.mu_x,
        mu_y: loss.mu_y,
    }
}

/// Contiguous disjoint blocks of size `floor(n/k)`; the remainder is folded
/// into the final block.
pub fn partition_ranges(n: usize, k: usize) -> Result<Vec<Range<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot split {n} samples into {k} blocks")));
    }
    let size = n / k;
    Ok((0..k)
        .map(|i| {
            let start = i * size;
            let end = if i + 1 == k { n } else { start + size };
            start..end
        })
        .collect())
}

pub fn partition_disjoint(samples: &SampleSet, k: usize) -> Result<Vec<SampleSet>> {
    partition_ranges(samples.len(), k)?
        .into_iter()
        .map(|r| samples.slice(r))
        .collect()
}

/// Outcome of probabilistic spot checks of certified constants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConstantCheck {
    pub probes: usize,
    pub lipschitz_violations: usize,
    pub smoothness_violations: usize,
    pub convexity_violations: usize,
}

impl ConstantCheck {
    pub fn is_clean(&self) -> bool {
        self.lipschitz_violations == 0 && self.smoothness_violations == 0 && self.convexity_violations == 0
    }
}

const CHECK_SLACK: f64 = 1e-9;

/// Checks `L`, `ell` and `mu` on random probe pairs inside the domain, each
/// against a randomly chosen sample of the problem.
pub fn spot_check_min_constants<R: Rng + ?Sized>(problem: &MinProblem, probes: usize, rng: &mut R) -> ConstantCheck {
    let c = problem.constants();
    let d = problem.dim();
    let loss = problem.loss();
    let mut report = ConstantCheck { probes, ..Default::default() };
    let (mut g1, mut g2) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..probes {
        let xi = problem.samples().row(rng.random_range(0..problem.n()));
        let x1 = problem.domain().sample(rng);
        let x2 = problem.domain().sample(rng);
        let gap = dist(&x1, &x2);
        let (f1, f2) = (loss.value(&x1, xi), loss.value(&x2, xi));
        let scale = 1.0 + f1.abs().max(f2.abs());
        if (f1 - f2).abs() > c.lipschitz * gap + CHECK_SLACK * scale {
            report.lipschitz_violations += 1;
        }
        loss.grad(&x1, xi, &mut g1);
        loss.grad(&x2, xi, &mut g2);
        if dist(&g1, &g2) > c.smoothness * gap + CHECK_SLACK * (1.0 + norm(&g1)) {
            report.smoothness_violations += 1;
        }
        // midpoint convexity of f - (mu/2)||x||^2
        let mid: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 0.5 * (a + b)).collect();
        let h = |x: &[f64], v: f64| v - 0.5 * c.strong_convexity * norm_sq(x);
        let lhs = h(&mid, loss.value(&mid, xi));
        let rhs = 0.5 * (h(&x1, f1) + h(&x2, f2));
        if lhs > rhs + CHECK_SLACK * scale {
            report.convexity_violations += 1;
        }
    }
    report
}

/// Joint Lipschitz/smoothness and convex-concave (with moduli) midpoint tests.
pub fn spot_check_minimax_constants<R: Rng + ?Sized>(
    problem: &MinimaxProblem,
    probes: usize,
    rng: &mut R,
) -> ConstantCheck {
    let c = problem.constants();
    let (dx, dy) = problem.dims();
    let loss = problem.loss();
    let mut report = ConstantCheck { probes, ..Default::default() };
    let (mut gx1, mut gy1, mut gx2, mut gy2) = (vec![0.0; dx], vec![0.0; dy], vec![0.0; dx], vec![0.0; dy]);
    let mid = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect() };
    for _ in 0..probes {
        let xi = problem.samples().row(rng.random_range(0..problem.n()));
        let (x1, x2) = (problem.domain_x().sample(rng), problem.domain_x().sample(rng));
        let (y1, y2) = (problem.domain_y().sample(rng), problem.domain_y().sample(rng));
        let gap = (dist_sq(&x1, &x2) + dist_sq(&y1, &y2)).sqrt();
        let (f1, f2) = (loss.value(&x1, &y1, xi), loss.value(&x2, &y2, xi));
        let scale = 1.0 + f1.abs().max(f2.abs());
        if (f1 - f2).abs() > c.lipschitz * gap + CHECK_SLACK * scale {
            report.lipschitz_violations += 1;
        }
        loss.grad(&x1, &y1, xi, &mut gx1, &mut gy1);
        loss.grad(&x2, &y2, xi, &mut gx2, &mut gy2);
        let gdist = (dist_sq(&gx1, &gx2) + dist_sq(&gy1, &gy2)).sqrt();
        if gdist > c.smoothness * gap + CHECK_SLACK * (1.0 + norm(&gx1) + norm(&gy1)) {
            report.smoothness_violations += 1;
        }
        // strong convexity in x at fixed y1
        let xm = mid(&x1, &x2);
        let hx = |x: &[f64]| loss.value(x, &y1, xi) - 0.5 * c.mu_x * norm_sq(x);
        let convex_ok = hx(&xm) <= 0.5 * (hx(&x1) + hx(&x2)) + CHECK_SLACK * scale;
        // strong concavity in y at fixed x1
        let ym = mid(&y1, &y2);
        let hy = |y: &[f64]| loss.value(&x1, y, xi) + 0.5 * c.mu_y * norm_sq(y);
        let concave_ok = hy(&ym) >= 0.5 * (hy(&y1) + hy(&y2)) - CHECK_SLACK * scale;
        if !(convex_ok && concave_ok) {
            report.convexity_violations += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use proptest::prelude::*;
    use rand::Rng;

    fn unit_ball(d: usize) -> BallDomain {
        BallDomain::centered(d, 1.0).unwrap()
    }

    #[test]
    fn projection_examples() {
        let dom = unit_ball(2);
        assert_eq!(dom.project(&[0.5, 0.0]).unwrap(), vec![0.5, 0.0]);
        let p = dom.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let off = BallDomain::new(vec![1.0, 1.0], 2.0).unwrap();
        assert_eq!(off.project(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(dom.project(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn domain_rejects_bad_radius() {
        assert!(BallDomain::centered(2, 0.0).is_err());
        assert!(BallDomain::centered(2, -1.0).is_err());
    }

    #[test]
    fn sampling_stays_inside() {
        let dom = BallDomain::new(vec![0.3, -2.0, 1.0], 0.7).unwrap();
        let mut rng = SeedStream::new(3).rng();
        for _ in 0..1000 {
            assert!(dom.contains(&dom.sample(&mut rng)));
        }
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_nonexpansive(
            p in prop::collection::vec(-10.0f64..10.0, 3),
            q in prop::collection::vec(-10.0f64..10.0, 3),
            r in 0.1f64..5.0,
        ) {
            let dom = BallDomain::new(vec![0.5, -0.25, 1.0], r).unwrap();
            let pp = dom.project(&p).unwrap();
            prop_assert!(dist(&pp, dom.center()) <= r * (1.0 + 1e-12));
            prop_assert_eq!(dom.project(&pp).unwrap(), pp.clone());
            let qq = dom.project(&q).unwrap();
            prop_assert!(dist(&pp, &qq) <= dist(&p, &q) + 1e-12);
        }

        #[test]
        fn partition_is_lawful(n in 1usize..300, k_seed in 0usize..1000) {
            let k = 1 + k_seed % n;
            let blocks = partition_ranges(n, k).unwrap();
            prop_assert_eq!(blocks.len(), k);
            let mut next = 0;
            for b in &blocks {
                prop_assert_eq!(b.start, next);
                next = b.end;
            }
            prop_assert_eq!(next, n);
            let base = n / k;
            for b in &blocks[..k - 1] {
                prop_assert_eq!(b.len(), base);
            }
            prop_assert!(blocks[k - 1].len() - base < k);
        }
    }

    #[test]
    fn partition_examples() {
        let sizes = |n, k| partition_ranges(n, k).unwrap().iter().map(|r| r.len()).collect::<Vec<_>>();
        assert_eq!(sizes(8, 4), vec![2, 2, 2, 2]);
        assert_eq!(sizes(10, 3), vec![3, 3, 4]);
        assert_eq!(sizes(5, 5), vec![1; 5]);
        assert!(partition_ranges(3, 4).is_err());
        let s = SampleSet::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let blocks = partition_disjoint(&s, 3).unwrap();
        assert_eq!(blocks[2].as_flat(), &[6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn text_format_parses_and_rejects_ragged_rows() {
        let s = SampleSet::parse_text("1 2\n# comment\n\n3.5   -4e-1\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), &[3.5, -0.4]);
        assert!(SampleSet::parse_text("1 2\n3\n").is_err());
        assert!(SampleSet::parse_text("1 x\n").is_err());
        assert!(SampleSet::parse_text("").is_err());
        let again = SampleSet::parse_text(&s.to_text()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn quadratic_empirical_quantities() {
        let s = SampleSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = make_quadratic_min_problem(s, 1.0, BallDomain::centered(2, 10.0).unwrap()).unwrap();
        let g = p.empirical_grad(&[0.5, 0.5]).unwrap();
        assert!(norm(&g) < 1e-15);
        assert!(make_quadratic_min_problem(p.samples().clone(), 0.0, unit_ball(2)).is_err());

        // hand-summed value on four samples at x = (1, 1) with mu = 2:
        // (||(0,1)||^2 + ||(1,0)||^2 + ||(2,2)||^2 + ||(1,-1)||^2) / 4 = (1 + 1 + 8 + 2) / 4
        let s4 = SampleSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0], vec![0.0, 2.0]]).unwrap();
        let p4 = make_quadratic_min_problem(s4, 2.0, BallDomain::centered(2, 5.0).unwrap()).unwrap();
        assert!((p4.empirical_value(&[1.0, 1.0]).unwrap() - 3.0).abs() < 1e-15);

        let single = SampleSet::from_rows(&[vec![0.3, -0.2]]).unwrap();
        let p1 = make_quadratic_min_problem(single.clone(), 1.5, unit_ball(2)).unwrap();
        let x = [0.1, 0.4];
        assert_eq!(p1.empirical_value(&x).unwrap(), p1.loss().value(&x, single.row(0)));
    }

    #[test]
    fn logistic_at_origin() {
        let s = SampleSet::from_rows(&[vec![0.5, -1.0, 1.0], vec![0.2, 0.3, -1.0]]).unwrap();
        let p = make_logistic_min_problem(s.clone(), unit_ball(2), 0.0).unwrap();
        for xi in s.iter() {
            assert!((p.loss().value(&[0.0, 0.0], xi) - 2f64.ln()).abs() < 1e-15);
        }
        let mut g = [0.0; 2];
        p.loss().grad(&[0.0, 0.0], s.row(0), &mut g);
        assert_eq!(g, [-0.25, 0.5]);
        let bad = SampleSet::from_rows(&[vec![0.5, 0.5, 0.3]]).unwrap();
        assert!(make_logistic_min_problem(bad, unit_ball(2), 0.1).is_err());
    }

    #[test]
    fn bilinear_shape_errors() {
        let dom = unit_ball(2);
        let err = make_bilinear_saddle_problem(&[vec![1.0; 3]], &[vec![0.0; 2]], 2, 2, 1.0, 1.0, dom.clone(), dom.clone());
        assert!(err.is_err());
        let err = make_bilinear_saddle_problem(&[vec![1.0; 4]], &[vec![0.0; 3]], 2, 2, 1.0, 1.0, dom.clone(), dom);
        assert!(err.is_err());
    }

    #[test]
    fn certified_constants_hold_on_random_probes() {
        let mut rng = SeedStream::new(11).rng();
        let dom = BallDomain::new(vec![0.2, -0.1, 0.0], 1.5).unwrap();
        let rows: Vec<Vec<f64>> = (0..40).map(|_| BallDomain::centered(3, 2.0).unwrap().sample(&mut rng)).collect();
        let quad = make_quadratic_min_problem(SampleSet::from_rows(&rows).unwrap(), 0.7, dom.clone()).unwrap();
        let report = spot_check_min_constants(&quad, 10_000, &mut rng);
        assert!(report.is_clean(), "{report:?}");

        let feat = BallDomain::centered(3, 1.3).unwrap();
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let mut a = feat.sample(&mut rng);
                a.push(if i % 3 == 0 { -1.0 } else { 1.0 });
                a
            })
            .collect();
        let logit = make_logistic_min_problem(SampleSet::from_rows(&rows).unwrap(), dom, 0.05).unwrap();
        let report = spot_check_min_constants(&logit, 10_000, &mut rng);
        assert!(report.is_clean(), "{report:?}");

        let (dx, dy) = (2, 3);
        let mats: Vec<Vec<f64>> = (0..20).map(|_| (0..dx * dy).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let offs: Vec<Vec<f64>> = (0..20).map(|_| (0..dy).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        for (mx, my) in [(0.5, 2.0), (0.0, 0.0), (1.0, 1.0), (3.0, 0.1)] {
            let prob = make_bilinear_saddle_problem(
                &mats,
                &offs,
                dx,
                dy,
                mx,
                my,
                BallDomain::new(vec![0.3, 0.1], 1.0).unwrap(),
                BallDomain::centered(dy, 2.0).unwrap(),
            )
            .unwrap();
            let report = spot_check_minimax_constants(&prob, 10_000, &mut rng);
            assert!(report.is_clean(), "moduli ({mx}, {my}): {report:?}");
        }
    }
}
