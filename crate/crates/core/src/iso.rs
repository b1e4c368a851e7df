//! Real-valued isomorphic representation of complex vectors and matrices.
//!
//! A `d x d` complex matrix `A` is represented by the `2d x 2d` real matrix
//! `[[Re A, -Im A], [Im A, Re A]]`, and a complex vector by the stacked
//! `(Re psi, Im psi)`. The map is a ring homomorphism, so products and
//! matrix exponentials carry over unchanged.
//!
//! Unitaries used as optimizer state are flattened into a real vector of
//! length `2d^2`: all real parts row-major, then all imaginary parts
//! row-major. Under this layout left-multiplication of the unitary by `P`
//! is the linear map `iso(P) ⊗ I_d`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance for accepting a real matrix as an embedded complex matrix.
pub const BLOCK_TOLERANCE: f64 = 1e-12;

/// Real `2d x 2d` embedding of a complex `d x d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct IsoMatrix {
    dim: usize,
    entries: DMatrix<f64>,
}

impl IsoMatrix {
    /// Wraps a real matrix after checking the block structure.
    pub fn from_real(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows % 2 != 0 {
            return Err(Error::dims("IsoMatrix::from_real", rows, cols));
        }
        let deviation = block_deviation(&entries);
        if deviation > BLOCK_TOLERANCE {
            return Err(Error::BlockStructureViolation { deviation });
        }
        Ok(Self {
            dim: rows / 2,
            entries,
        })
    }

    /// Structure is guaranteed by construction (sums and products of embeddings).
    pub(crate) fn from_real_unchecked(entries: DMatrix<f64>) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        Self {
            dim: entries.nrows() / 2,
            entries,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: DMatrix::identity(2 * dim, 2 * dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: DMatrix::zeros(2 * dim, 2 * dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_real(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_real(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn transpose(&self) -> Self {
        Self::from_real_unchecked(self.entries.transpose())
    }

    /// Product of two embeddings; equals `embed(A B)`.
    pub fn mul(&self, rhs: &IsoMatrix) -> Self {
        Self::from_real_unchecked(&self.entries * &rhs.entries)
    }

    /// `max |M^T M - I|`, zero for embeddings of unitaries.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.entries.nrows();
        let gram = self.entries.transpose() * &self.entries;
        (gram - DMatrix::<f64>::identity(n, n)).amax()
    }
}

fn block_deviation(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows() / 2;
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            worst = worst
                .max((m[(i, j)] - m[(i + d, j + d)]).abs())
                .max((m[(i, j + d)] + m[(i + d, j)]).abs());
        }
    }
    worst
}

/// Real `2d` embedding `(Re psi, Im psi)` of a complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct IsoVector {
    dim: usize,
    entries: DVector<f64>,
}

impl IsoVector {
    pub fn embed(psi: &CVector) -> Self {
        let d = psi.len();
        let entries = DVector::from_fn(2 * d, |i, _| {
            if i < d {
                psi[i].re
            } else {
                psi[i - d].im
            }
        });
        Self { dim: d, entries }
    }

    pub fn extract(&self) -> CVector {
        let d = self.dim;
        CVector::from_fn(d, |i, _| {
            Complex64::new(self.entries[i], self.entries[i + d])
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_real(&self) -> &DVector<f64> {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// Flattened unitary used as optimizer state: `2d^2` reals, real parts
/// row-major followed by imaginary parts row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVectorization {
    dim: usize,
    entries: DVector<f64>,
}

impl StateVectorization {
    pub fn from_real(dim: usize, entries: DVector<f64>) -> Result<Self> {
        if entries.len() != 2 * dim * dim {
            return Err(Error::dims(
                "StateVectorization::from_real",
                2 * dim * dim,
                entries.len(),
            ));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_real(&self) -> &DVector<f64> {
        &self.entries
    }

    pub fn into_real(self) -> DVector<f64> {
        self.entries
    }

    pub fn devectorize(&self) -> CMatrix {
        devectorize_slice(self.dim, self.entries.as_slice())
    }
}

pub fn embed_matrix(a: &CMatrix) -> IsoMatrix {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "embed_matrix expects a square matrix");
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    for j in 0..d {
        for i in 0..d {
            let z = a[(i, j)];
            m[(i, j)] = z.re;
            m[(i + d, j + d)] = z.re;
            m[(i + d, j)] = z.im;
            m[(i, j + d)] = -z.im;
        }
    }
    IsoMatrix { dim: d, entries: m }
}

/// Inverse of [`embed_matrix`]; re-checks the block structure first.
pub fn extract_matrix(m: &IsoMatrix) -> Result<CMatrix> {
    let deviation = block_deviation(&m.entries);
    if deviation > BLOCK_TOLERANCE {
        return Err(Error::BlockStructureViolation { deviation });
    }
    let d = m.dim;
    Ok(CMatrix::from_fn(d, d, |i, j| {
        Complex64::new(m.entries[(i, j)], m.entries[(i + d, j)])
    }))
}

pub fn vectorize_unitary(u: &CMatrix) -> StateVectorization {
    let d = u.nrows();
    assert_eq!(d, u.ncols(), "vectorize_unitary expects a square matrix");
    let mut x = DVector::zeros(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            x[i * d + j] = u[(i, j)].re;
            x[d * d + i * d + j] = u[(i, j)].im;
        }
    }
    StateVectorization { dim: d, entries: x }
}

pub(crate) fn devectorize_slice(d: usize, x: &[f64]) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| {
        Complex64::new(x[i * d + j], x[d * d + i * d + j])
    })
}

/// `vectorize(extract(p) * devectorize(x))`, computed column by column in
/// the real representation.
pub fn apply_propagator_to_state(
    p: &IsoMatrix,
    x: &StateVectorization,
) -> Result<StateVectorization> {
    if p.dim != x.dim {
        return Err(Error::dims("apply_propagator_to_state", p.dim, x.dim));
    }
    let entries = apply_left(&p.entries, x.dim, x.entries.as_slice());
    Ok(StateVectorization {
        dim: x.dim,
        entries,
    })
}

/// Applies a real `2d x 2d` matrix to every column of the flattened unitary,
/// i.e. multiplies `x` by `p ⊗ I_d`.
pub(crate) fn apply_left(p: &DMatrix<f64>, d: usize, x: &[f64]) -> DVector<f64> {
    let two_d = 2 * d;
    debug_assert_eq!(p.nrows(), two_d);
    debug_assert_eq!(x.len(), two_d * d);
    let mut out = DVector::zeros(two_d * d);
    // row index a of the iso matrix addresses x[a * d + j] for column j
    for a in 0..two_d {
        for b in 0..two_d {
            let pab = p[(a, b)];
            if pab == 0.0 {
                continue;
            }
            let src = &x[b * d..(b + 1) * d];
            let dst = &mut out.as_mut_slice()[a * d..(a + 1) * d];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += pab * s;
            }
        }
    }
    out
}

/// Computes `m * (p ⊗ I_d)` where `m` has `2d^2` columns.
pub(crate) fn mul_kron_right(m: &DMatrix<f64>, p: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let rows = m.nrows();
    debug_assert_eq!(m.ncols(), 2 * d * d);
    let mut out = DMatrix::zeros(rows, 2 * d * d);
    mul_kron_right_into(m.as_slice(), rows, p, d, out.as_mut_slice());
    out
}

/// [`mul_kron_right`] on column-major storage: `m` and `out` hold `rows x 2d^2`.
pub(crate) fn mul_kron_right_into(m: &[f64], rows: usize, p: &DMatrix<f64>, d: usize, out: &mut [f64]) {
    let two_d = 2 * d;
    // column a*d + j of the result is sum_b p[b, a] * column b*d + j of m
    for a in 0..two_d {
        for b in 0..two_d {
            let pba = p[(b, a)];
            if pba == 0.0 {
                continue;
            }
            for j in 0..d {
                let src = &m[(b * d + j) * rows..(b * d + j + 1) * rows];
                let dst = &mut out[(a * d + j) * rows..(a * d + j + 1) * rows];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += pba * s;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn i_sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 1.), c(0., 1.), c(0., 0.)])
    }

    fn arb_cmatrix(d: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d)
            .prop_map(move |v| CMatrix::from_iterator(d, d, v.into_iter().map(|(r, i)| c(r, i))))
    }

    fn complex_matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
        // naive triple loop as an oracle independent of nalgebra's gemm
        let d = a.nrows();
        CMatrix::from_fn(d, d, |i, j| {
            (0..d).fold(c(0., 0.), |acc, l| acc + a[(i, l)] * b[(l, j)])
        })
    }

    #[test]
    fn embed_identity() {
        let m = embed_matrix(&CMatrix::identity(2, 2));
        assert_eq!(m.as_real(), &DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn embed_i_sigma_x() {
        let m = embed_matrix(&i_sigma_x());
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0., 0., 0., -1., //
                0., 0., -1., 0., //
                0., 1., 0., 0., //
                1., 0., 0., 0.,
            ],
        );
        assert_eq!(m.as_real(), &expected);
    }

    #[test]
    fn extract_identity() {
        let m = IsoMatrix::identity(2);
        assert_eq!(extract_matrix(&m).unwrap(), CMatrix::identity(2, 2));
    }

    #[test]
    fn extract_rejects_broken_blocks() {
        let mut raw = embed_matrix(&i_sigma_x()).into_real();
        raw[(0, 0)] += 1e-3;
        let m = IsoMatrix::from_real_unchecked(raw.clone());
        assert!(matches!(
            extract_matrix(&m),
            Err(Error::BlockStructureViolation { .. })
        ));
        assert!(IsoMatrix::from_real(raw).is_err());
    }

    #[test]
    fn vectorize_identity_and_i_sigma_x() {
        let x = vectorize_unitary(&CMatrix::identity(2, 2));
        assert_eq!(x.as_real().as_slice(), &[1., 0., 0., 1., 0., 0., 0., 0.]);
        let x = vectorize_unitary(&i_sigma_x());
        assert_eq!(x.as_real().as_slice(), &[0., 0., 0., 0., 0., 1., 1., 0.]);
    }

    #[test]
    fn apply_identity_leaves_state() {
        let x = vectorize_unitary(&i_sigma_x());
        let y = apply_propagator_to_state(&IsoMatrix::identity(2), &x).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn apply_i_sigma_x_to_identity() {
        let p = embed_matrix(&i_sigma_x());
        let x = vectorize_unitary(&CMatrix::identity(2, 2));
        let y = apply_propagator_to_state(&p, &x).unwrap();
        assert_eq!(y, vectorize_unitary(&i_sigma_x()));
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let x = vectorize_unitary(&CMatrix::identity(3, 3));
        assert!(matches!(
            apply_propagator_to_state(&IsoMatrix::identity(2), &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn homomorphism(d in prop::sample::select(vec![2usize, 3, 4, 9]), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || CMatrix::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let a = draw();
            let b = draw();
            let lhs = embed_matrix(&complex_matmul(&a, &b));
            let rhs = embed_matrix(&a).mul(&embed_matrix(&b));
            prop_assert!((lhs.as_real() - rhs.as_real()).amax() <= 1e-12);
        }

        #[test]
        fn embed_extract_round_trip(a in arb_cmatrix(3)) {
            prop_assert_eq!(extract_matrix(&embed_matrix(&a)).unwrap(), a);
        }

        #[test]
        fn vectorize_round_trip(a in arb_cmatrix(4)) {
            prop_assert_eq!(vectorize_unitary(&a).devectorize(), a);
        }

        #[test]
        fn iso_vector_norm(v in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..10)) {
            let psi = CVector::from_iterator(v.len(), v.into_iter().map(|(r, i)| c(r, i)));
            let iso = IsoVector::embed(&psi);
            prop_assert!((iso.norm() - psi.norm()).abs() <= 1e-14);
            prop_assert_eq!(iso.extract(), psi);
        }

        #[test]
        fn apply_matches_complex_product(p in arb_cmatrix(3), u in arb_cmatrix(3)) {
            let x = vectorize_unitary(&u);
            let y = apply_propagator_to_state(&embed_matrix(&p), &x).unwrap();
            let oracle = vectorize_unitary(&complex_matmul(&p, &u));
            prop_assert!((y.as_real() - oracle.as_real()).amax() <= 1e-13);
        }

        #[test]
        fn kron_right_product_matches_dense(p in arb_cmatrix(2), seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = 2;
            let n = 2 * d * d;
            let m = DMatrix::from_fn(5, n, |_, _| rng.gen_range(-1.0..1.0));
            let piso = embed_matrix(&p).into_real();
            // dense P ⊗ I_d built from the action on unit vectors
            let dense = DMatrix::from_fn(n, n, |r, col| {
                let mut e = vec![0.0; n];
                e[col] = 1.0;
                apply_left(&piso, d, &e)[r]
            });
            let fast = mul_kron_right(&m, &piso, d);
            prop_assert!((fast - &m * dense).amax() <= 1e-13);
        }
    }
}
