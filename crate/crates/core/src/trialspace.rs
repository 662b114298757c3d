//! The trial space spanned by scaled kernel translates at a set of centers,
//! Gram assembly, interpolation and evaluation of trial functions.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, PointSet, Role};
use crate::kernel::{Jet, Point, ScaledKernel};
use crate::spatial::SpatialBins;

/// Coefficients of a trial function, aligned with the centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
    pub fn zeros(n: usize) -> Self {
        Coefficients(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,c")?;
        for (i, c) in self.0.iter().enumerate() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrialSpace {
    centers: Vec<Point>,
    n_interior: usize,
    kernel: ScaledKernel,
    bins: SpatialBins,
}

impl TrialSpace {
    /// Centers are ordered interior first, then boundary.
    pub fn new(centers: &PointSet, kernel: ScaledKernel) -> Result<Self> {
        if centers.role != Role::Trial {
            return Err(Error::Domain(
                "trial space needs a trial-role point set".into(),
            ));
        }
        let all = centers.to_vec();
        if all.is_empty() {
            return Err(Error::EmptySet("trial space needs at least one center"));
        }
        if all.len() >= 2 && geometry::separation(&all)? <= 0.0 {
            return Err(Error::Domain(
                "trial centers must be pairwise distinct".into(),
            ));
        }
        Ok(Self::from_points(all, centers.interior.len(), kernel))
    }

    fn from_points(centers: Vec<Point>, n_interior: usize, kernel: ScaledKernel) -> Self {
        let bins = SpatialBins::new(&centers, kernel.delta());
        TrialSpace {
            centers,
            n_interior,
            kernel,
            bins,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn kernel(&self) -> &ScaledKernel {
        &self.kernel
    }

    /// Indices of centers within the kernel support of `x`, in bin order.
    pub fn support(&self, x: &Point) -> impl Iterator<Item = usize> + '_ {
        let delta = self.kernel.delta();
        let x = *x;
        self.bins
            .candidates(&x, delta)
            .filter(move |&j| (x - self.centers[j]).norm() < delta)
    }

    /// Jets of every basis function that is nonzero at `x`.
    pub fn basis_jets(&self, x: &Point) -> Vec<(usize, Jet)> {
        self.support(x)
            .map(|j| (j, self.kernel.jet(x, &self.centers[j])))
            .collect()
    }

    /// Value, gradient and Hessian of `Σ c_j Φ_δ(x, y_j)`.
    pub fn eval_jet(&self, c: &Coefficients, x: &Point) -> Jet {
        debug_assert_eq!(c.len(), self.len());
        let mut out = Jet::ZERO;
        for j in self.support(x) {
            out.scaled_add(c.0[j], &self.kernel.jet(x, &self.centers[j]));
        }
        out
    }

    pub fn eval(&self, c: &Coefficients, x: &Point) -> f64 {
        self.support(x)
            .map(|j| c.0[j] * self.kernel.eval(x, &self.centers[j]))
            .sum()
    }

    pub fn eval_many(&self, c: &Coefficients, xs: &[Point]) -> Vec<f64> {
        xs.par_iter().map(|x| self.eval(c, x)).collect()
    }

    /// Dense Gram matrix `A[k][j] = Φ_δ(y_k, y_j)`; entries outside the
    /// support are exact zeros.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let rows: Vec<Vec<(usize, f64)>> = self
            .centers
            .par_iter()
            .map(|y| {
                self.support(y)
                    .map(|j| (j, self.kernel.eval(y, &self.centers[j])))
                    .collect()
            })
            .collect();
        let mut a = DMatrix::zeros(n, n);
        for (k, row) in rows.into_iter().enumerate() {
            for (j, v) in row {
                a[(k, j)] = v;
            }
        }
        a
    }

    pub fn factor_gram(&self) -> Result<GramFactor> {
        GramFactor::new(self.gram_matrix())
    }

    /// Coefficients whose trial function matches `values` at the centers.
    pub fn interpolate(&self, values: &[f64]) -> Result<Coefficients> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        let factor = self.factor_gram()?;
        Ok(Coefficients(factor.solve_refined(values)))
    }

    /// Interpolate a scalar field sampled at the centers.
    pub fn interpolate_fn(&self, u: impl Fn(&Point) -> f64 + Sync) -> Result<Coefficients> {
        let values: Vec<f64> = self.centers.par_iter().map(&u).collect();
        self.interpolate(&values)
    }
}

/// Cholesky factor `L Lᵀ = A + jitter·I` of a Gram matrix.
#[derive(Debug, Clone)]
pub struct GramFactor {
    matrix: DMatrix<f64>,
    lower: DMatrix<f64>,
    /// Diagonal shift that was needed; 0 when the plain factorization succeeded.
    pub jitter: f64,
    pub min_pivot: f64,
}

impl GramFactor {
    /// Factors `a`; on breakdown retries once with a diagonal shift of
    /// `1e-12·trace(A)/N`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        match cholesky(&a, 0.0) {
            Ok((lower, min_pivot)) => Ok(GramFactor {
                matrix: a,
                lower,
                jitter: 0.0,
                min_pivot,
            }),
            Err(first) => {
                let n = a.nrows().max(1) as f64;
                let jitter = 1e-12 * a.trace() / n;
                match cholesky(&a, jitter) {
                    Ok((lower, min_pivot)) => Ok(GramFactor {
                        matrix: a,
                        lower,
                        jitter,
                        min_pivot,
                    }),
                    Err(_) => Err(first),
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let l = &self.lower;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[(i, k)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        x
    }

    /// Solve followed by up to two steps of iterative refinement against the
    /// unshifted matrix.
    pub fn solve_refined(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..2 {
            let r = self.residual(&x, b);
            if r.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-13 * scale {
                break;
            }
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        x
    }

    /// `b − A x`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let row = self.matrix.row(i);
                b[i] - (0..n).map(|j| row[j] * x[j]).sum::<f64>()
            })
            .collect()
    }
}

/// Left-looking dense Cholesky of `a + shift·I`. Returns the lower factor
/// and the smallest pivot, or the failing row and the smallest pivot seen.
fn cholesky(a: &DMatrix<f64>, shift: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    let mut l = a.lower_triangle();
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let mut d = l[(j, j)] + shift;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        min_pivot = min_pivot.min(d);
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Factorization {
                index: j,
                pivot: min_pivot,
            });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        // column j below the diagonal
        let (head, mut tail) = l.columns_range_pair_mut(0..j, j..j + 1);
        for i in j + 1..n {
            let mut s = tail[(i, 0)];
            for k in 0..j {
                s -= head[(i, k)] * head[(j, k)];
            }
            tail[(i, 0)] = s / d;
        }
    }
    Ok((l, min_pivot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_points, Domain};
    use crate::kernel::KernelFamily;
    use approx::assert_relative_eq;

    fn space(points: Vec<Point>, family: KernelFamily, delta: f64) -> TrialSpace {
        let set = PointSet::new(points, vec![], Role::Trial);
        TrialSpace::new(&set, ScaledKernel::new(family, delta).unwrap()).unwrap()
    }

    #[test]
    fn gram_examples() {
        let one = space(vec![Point::new(0.1, 0.2)], KernelFamily::C2, 1.0);
        assert_eq!(one.gram_matrix(), DMatrix::from_element(1, 1, 1.0));

        let far = space(
            vec![Point::new(0.0, 0.0), Point::new(0.5, 0.0)],
            KernelFamily::C4,
            0.5,
        );
        assert_eq!(
            far.gram_matrix(),
            DMatrix::from_diagonal_element(2, 2, 3.0 / 0.25)
        );

        let near = space(
            vec![Point::new(0.0, 0.0), Point::new(0.5, 0.0)],
            KernelFamily::C2,
            1.0,
        );
        let a = near.gram_matrix();
        assert_relative_eq!(a[(0, 1)], 0.1875, epsilon = 1e-15);
        assert_eq!(a[(0, 1)], a[(1, 0)]);
    }

    #[test]
    fn interpolate_examples() {
        let pts = generate_points(&Domain::UnitSquare, 0.2, Role::Trial, 0).unwrap();
        let ts = TrialSpace::new(&pts, ScaledKernel::new(KernelFamily::C4, 0.6).unwrap()).unwrap();
        let c = ts.interpolate(&vec![0.0; ts.len()]).unwrap();
        assert!(c.0.iter().all(|&v| v == 0.0));

        let one = space(vec![Point::new(0.3, 0.3)], KernelFamily::C2, 1.0);
        assert_eq!(one.interpolate(&[2.5]).unwrap().0, vec![2.5]);

        let c = ts.interpolate_fn(|p| p.x + p.y).unwrap();
        for y in ts.centers() {
            assert!((ts.eval(&c, y) - (y.x + y.y)).abs() <= 1e-9);
        }
        assert!(matches!(
            ts.interpolate(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn factorization_failure_reports_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match GramFactor::new(a) {
            Err(Error::Factorization { index, pivot }) => {
                assert_eq!(index, 1);
                assert_relative_eq!(pivot, -3.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn jitter_rescues_semidefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = GramFactor::new(a).unwrap();
        assert!(f.jitter > 0.0);
    }

    #[test]
    fn eval_jet_examples() {
        let one = space(vec![Point::new(0.0, 0.0)], KernelFamily::C2, 1.0);
        let j = one.eval_jet(&Coefficients(vec![1.0]), &Point::new(0.0, 0.0));
        assert_eq!(j.value, 1.0);
        assert_eq!((j.hess.uxx, j.hess.uxy, j.hess.uyy), (-20.0, 0.0, -20.0));
        assert_eq!(
            one.eval_jet(&Coefficients(vec![0.0]), &Point::new(0.1, 0.0)),
            Jet::ZERO
        );
        assert_eq!(
            one.eval_jet(&Coefficients(vec![1.0]), &Point::new(1.0, 0.5)),
            Jet::ZERO
        );
    }

    #[test]
    fn coefficient_csv() {
        let mut buf = Vec::new();
        Coefficients(vec![1.5, -0.25]).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,c\n0,1.5\n1,-0.25\n");
    }

    #[test]
    fn rejects_duplicates() {
        let set = PointSet::new(
            vec![Point::new(0.1, 0.1), Point::new(0.1, 0.1)],
            vec![],
            Role::Trial,
        );
        assert!(TrialSpace::new(&set, ScaledKernel::new(KernelFamily::C4, 0.5).unwrap()).is_err());
    }
}
