use std::collections::BTreeSet;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default clustering tolerance for floating eigenvalues.
pub const CLUSTER_TOL: f64 = 1e-9;

/// A unitary matrix. When `labels` is set its eigenvalues are known to be
/// exp(2πi·ℓ/modulus), one per label; `diagonal` records whether the
/// matrix is itself diag(labels).
#[derive(Clone, Debug)]
pub struct FiniteUnitary {
    matrix: DMatrix<Complex64>,
    labels: Option<Vec<u64>>,
    modulus: u64,
    diagonal: bool,
}

pub fn root_of_unity(label: u64, modulus: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (label % modulus) as f64 / modulus as f64)
}

impl FiniteUnitary {
    pub fn diagonal(labels: Vec<u64>, modulus: u64) -> FiniteUnitary {
        let diag: Vec<Complex64> = labels.iter().map(|&l| root_of_unity(l, modulus)).collect();
        let matrix = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
        FiniteUnitary { matrix, labels: Some(labels), modulus, diagonal: true }
    }

    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<FiniteUnitary> {
        if !matrix.is_square() {
            return Err(Error::Invalid("matrix is not square".into()));
        }
        let d = matrix.nrows();
        let defect = (&matrix * matrix.adjoint() - DMatrix::<Complex64>::identity(d, d)).norm();
        if defect > 1e-12 * (d.max(1) as f64) {
            return Err(Error::Invalid(format!("matrix is not unitary (defect {defect:e})")));
        }
        Ok(FiniteUnitary { matrix, labels: None, modulus: 1, diagonal: false })
    }

    pub(crate) fn with_labels(
        matrix: DMatrix<Complex64>,
        labels: Vec<u64>,
        modulus: u64,
        diagonal: bool,
    ) -> FiniteUnitary {
        FiniteUnitary { matrix, labels: Some(labels), modulus, diagonal }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn labels(&self) -> Option<&[u64]> {
        self.labels.as_deref()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// W U W* for a Haar-random W; the spectrum labels are kept.
    pub fn conjugated<R: Rng>(&self, rng: &mut R) -> FiniteUnitary {
        let w = random_unitary(self.dim(), rng);
        let matrix = &w * &self.matrix * w.adjoint();
        FiniteUnitary { matrix, labels: self.labels.clone(), modulus: self.modulus, diagonal: false }
    }
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases =
        DMatrix::from_diagonal(
            &r.diagonal().map(|x| if x.norm() > 0.0 { x / x.norm() } else { Complex64::new(1.0, 0.0) }),
        );
    q * phases
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let (_, t) = m.clone().schur().unpack();
    t.diagonal().iter().copied().collect()
}

/// Groups eigenvalues lying within `tol` of a neighbour (single linkage).
pub fn cluster(eigs: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut parent: Vec<usize> = (0..eigs.len()).collect();
    fn find(p: &mut Vec<usize>, i: usize) -> usize {
        if p[i] != i {
            let r = find(p, p[i]);
            p[i] = r;
        }
        p[i]
    }
    for i in 0..eigs.len() {
        for j in i + 1..eigs.len() {
            if (eigs[i] - eigs[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
    for (i, e) in eigs.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(*e);
    }
    let mut out: Vec<(Complex64, usize)> =
        groups.into_values().map(|g| (g.iter().sum::<Complex64>() / g.len() as f64, g.len())).collect();
    out.sort_by(|a, b| a.0.arg().partial_cmp(&b.0.arg()).expect("finite"));
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub value: Complex64,
    pub label: Option<u64>,
    pub multiplicity: usize,
}

/// Eigenvalue multiplicities; exact when the input is diagonal with labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicityFunction {
    pub clusters: Vec<Cluster>,
    pub exact: bool,
    /// Floating mode: halving the tolerance leaves the clusters unchanged.
    pub stable: bool,
}

impl MultiplicityFunction {
    pub fn values(&self) -> BTreeSet<usize> {
        self.clusters.iter().map(|c| c.multiplicity).collect()
    }

    pub fn total(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }

    pub fn is_simple(&self) -> bool {
        self.clusters.iter().all(|c| c.multiplicity == 1)
    }

    pub fn multiplicity_of(&self, label: u64) -> Option<usize> {
        self.clusters.iter().find(|c| c.label == Some(label)).map(|c| c.multiplicity)
    }
}

pub fn multiplicity_function(u: &FiniteUnitary) -> Result<MultiplicityFunction> {
    multiplicity_function_tol(u, CLUSTER_TOL)
}

pub fn multiplicity_function_tol(u: &FiniteUnitary, tol: f64) -> Result<MultiplicityFunction> {
    let d = u.dim();
    let defect = (u.matrix() * u.matrix().adjoint() - DMatrix::<Complex64>::identity(d, d)).norm();
    if defect > 1e-9 * (d.max(1) as f64) {
        return Err(Error::Invalid(format!("matrix is not unitary (defect {defect:e})")));
    }
    if let (true, Some(labels)) = (u.is_diagonal(), u.labels()) {
        let mut counts: std::collections::BTreeMap<u64, usize> = Default::default();
        for &l in labels {
            *counts.entry(l % u.modulus()).or_default() += 1;
        }
        let clusters = counts
            .into_iter()
            .map(|(l, m)| Cluster { value: root_of_unity(l, u.modulus()), label: Some(l), multiplicity: m })
            .collect();
        return Ok(MultiplicityFunction { clusters, exact: true, stable: true });
    }
    let eigs = eigenvalues(u.matrix());
    let coarse = cluster(&eigs, tol);
    let fine = cluster(&eigs, tol / 2.0);
    let stable = coarse.iter().map(|c| c.1).collect::<Vec<_>>() == fine.iter().map(|c| c.1).collect::<Vec<_>>();
    let known: BTreeSet<u64> = u.labels().map(|ls| ls.iter().map(|l| l % u.modulus()).collect()).unwrap_or_default();
    let clusters = coarse
        .into_iter()
        .map(|(value, multiplicity)| {
            let label = known.iter().copied().find(|&l| (root_of_unity(l, u.modulus()) - value).norm() < tol.max(1e-7));
            Cluster { value, label, multiplicity }
        })
        .collect();
    Ok(MultiplicityFunction { clusters, exact: false, stable })
}

/// dim span{U^j v : j ≥ 0} by Arnoldi with reorthogonalization.
pub fn cyclic_dimension(u: &DMatrix<Complex64>, v: &nalgebra::DVector<Complex64>, tol: f64) -> usize {
    let mut basis: Vec<nalgebra::DVector<Complex64>> = vec![];
    let n = v.norm();
    if n < tol {
        return 0;
    }
    let mut w = v / Complex64::new(n, 0.0);
    for _ in 0..u.nrows() {
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let n = w.norm();
        if n < tol {
            break;
        }
        w /= Complex64::new(n, 0.0);
        basis.push(w.clone());
        w = u * &w;
    }
    basis.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CyclicReport {
    pub dim: usize,
    pub max_cyclic_dim: usize,
    pub simple_by_cyclic: bool,
    pub simple_by_eigenvalues: bool,
}

impl CyclicReport {
    pub fn agrees(&self) -> bool {
        self.simple_by_cyclic == self.simple_by_eigenvalues
    }
}

/// Simple spectrum via cyclic vectors, cross-checked with the eigenvalues.
pub fn simple_spectrum_via_cyclic<R: Rng>(u: &FiniteUnitary, trials: usize, rng: &mut R) -> Result<CyclicReport> {
    let d = u.dim();
    let mut best = 0;
    for _ in 0..trials.max(1) {
        let v = nalgebra::DVector::from_fn(d, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        best = best.max(cyclic_dimension(u.matrix(), &v, 1e-8));
    }
    let mf = multiplicity_function_tol(u, 1e-6)?;
    Ok(CyclicReport {
        dim: d,
        max_cyclic_dim: best,
        simple_by_cyclic: best == d,
        simple_by_eigenvalues: mf.is_simple(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn multiplicity_examples() {
        let id = FiniteUnitary::diagonal(vec![0, 0, 0], 7);
        assert_eq!(multiplicity_function(&id).unwrap().clusters[0].multiplicity, 3);
        let distinct = FiniteUnitary::diagonal(vec![1, 2, 3], 7);
        assert!(multiplicity_function(&distinct).unwrap().is_simple());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = FiniteUnitary::diagonal(vec![1, 1, 4], 7).conjugated(&mut rng);
        let mf = multiplicity_function(&rep).unwrap();
        assert!(!mf.exact && mf.stable);
        assert_eq!(mf.values(), [1, 2].into());
        assert_eq!(mf.multiplicity_of(1), Some(2));
        let bad = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(FiniteUnitary::from_matrix(bad).is_err());
    }

    #[test]
    fn cyclic_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let id = FiniteUnitary::diagonal(vec![0, 0, 0], 5);
        let r = simple_spectrum_via_cyclic(&id, 3, &mut rng).unwrap();
        assert_eq!(r.max_cyclic_dim, 1);
        assert!(r.agrees());
        let u = FiniteUnitary::diagonal(vec![0, 1, 2, 3], 5).conjugated(&mut rng);
        let r = simple_spectrum_via_cyclic(&u, 3, &mut rng).unwrap();
        assert_eq!(r.max_cyclic_dim, 4);
        assert!(r.agrees());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_unitary(6, &mut rng);
        assert!(FiniteUnitary::from_matrix(w).is_ok());
    }
}
