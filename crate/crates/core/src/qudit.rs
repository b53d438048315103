//! Mixed-radix pure states and density matrices for a register of qudits.
//!
//! Flat indexing is row-major mixed-radix with qudit 0 most significant:
//! for `dims = [d0, d1, ...]` the basis state `|l0, l1, ...⟩` sits at
//! `l0·d1·d2·... + l1·d2·... + ...`. All operations return new values; states
//! are never mutated in place.

use crate::error::{Error, Result};
use crate::linalg;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Validation tolerance for norms, traces and Hermiticity.
pub const VALIDATION_TOL: f64 = 1e-10;
/// Density-matrix eigenvalues may dip this far below zero before the state
/// is rejected as unphysical.
pub const PSD_TOL: f64 = -1e-9;

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Dimension("register needs at least one qudit".into()));
    }
    for (i, &d) in dims.iter().enumerate() {
        if !(2..=6).contains(&d) {
            return Err(Error::Dimension(format!(
                "qudit {i} has dimension {d}, supported range is 2..=6"
            )));
        }
    }
    Ok(())
}

fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Strides of the row-major mixed-radix layout.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Gather/scatter offsets for a unitary acting on `targets`, in target order
/// (the first target is the most significant index of the operator).
fn target_offsets(dims: &[usize], targets: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let tdims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let m: usize = tdims.iter().product();
    let mut offsets = vec![0usize; m];
    for (j, off) in offsets.iter_mut().enumerate() {
        let mut rest = j;
        for (axis, &t) in targets.iter().enumerate().rev() {
            let digit = rest % tdims[axis];
            rest /= tdims[axis];
            *off += digit * st[t];
            let _ = axis;
        }
    }
    offsets
}

fn validate_targets(dims: &[usize], targets: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Argument("no target qudits given".into()));
    }
    for &t in targets {
        if t >= dims.len() {
            return Err(Error::Dimension(format!(
                "target qudit {t} out of range for a {}-qudit register",
                dims.len()
            )));
        }
    }
    let mut seen = targets.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != targets.len() {
        return Err(Error::Argument("duplicate target qudits".into()));
    }
    Ok(())
}

/// Flat indices whose target digits are all zero, i.e. the base index of
/// every gathered block.
fn block_bases(dims: &[usize], targets: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let d = total_dim(dims);
    let mut bases = Vec::with_capacity(d / targets.iter().map(|&t| dims[t]).product::<usize>());
    'outer: for f in 0..d {
        for &t in targets {
            if !(f / st[t]).is_multiple_of(dims[t]) {
                continue 'outer;
            }
        }
        bases.push(f);
    }
    bases
}

/// Pure state of a mixed-radix qudit register.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    dims: Vec<usize>,
    amplitudes: Array1<C64>,
}

impl QuditState {
    /// Build a state from raw amplitudes; the vector must have length
    /// `∏ dims` and unit 2-norm within [`VALIDATION_TOL`].
    pub fn new(dims: Vec<usize>, amplitudes: Array1<C64>) -> Result<Self> {
        check_dims(&dims)?;
        if amplitudes.len() != total_dim(&dims) {
            return Err(Error::Dimension(format!(
                "amplitude vector has length {}, expected {}",
                amplitudes.len(),
                total_dim(&dims)
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::Validation(format!(
                "state norm {norm} deviates from 1 by more than {VALIDATION_TOL:e}"
            )));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Computational basis state `|levels⟩`.
    pub fn basis_state(dims: &[usize], levels: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        if levels.len() != dims.len() {
            return Err(Error::Dimension(format!(
                "{} levels given for a {}-qudit register",
                levels.len(),
                dims.len()
            )));
        }
        for (i, (&l, &d)) in levels.iter().zip(dims.iter()).enumerate() {
            if l >= d {
                return Err(Error::Dimension(format!(
                    "level {l} out of range for qudit {i} of dimension {d}"
                )));
            }
        }
        let st = strides(dims);
        let flat: usize = levels.iter().zip(st.iter()).map(|(&l, &s)| l * s).sum();
        let mut amplitudes = Array1::zeros(total_dim(dims));
        amplitudes[flat] = C64::new(1.0, 0.0);
        Ok(Self { dims: dims.to_vec(), amplitudes })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension `∏ dims`.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    /// `|amplitude|²` for every basis state; sums to 1.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Apply a unitary on the given target qudits (identity elsewhere).
    /// The operator's index order follows `targets`.
    pub fn apply_unitary(&self, u: &Array2<C64>, targets: &[usize]) -> Result<Self> {
        validate_targets(&self.dims, targets)?;
        let m: usize = targets.iter().map(|&t| self.dims[t]).product();
        if u.dim() != (m, m) {
            return Err(Error::Dimension(format!(
                "operator is {:?}, expected {m}x{m} for these targets",
                u.dim()
            )));
        }
        if !linalg::is_unitary(u, VALIDATION_TOL) {
            return Err(Error::Validation("operator is not unitary within 1e-10".into()));
        }
        let offsets = target_offsets(&self.dims, targets);
        let mut out = self.amplitudes.clone();
        let mut gathered = vec![C64::new(0.0, 0.0); m];
        for base in block_bases(&self.dims, targets) {
            for (g, &off) in gathered.iter_mut().zip(offsets.iter()) {
                *g = self.amplitudes[base + off];
            }
            for (j, &off) in offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (l, &g) in gathered.iter().enumerate() {
                    acc += u[[j, l]] * g;
                }
                out[base + off] = acc;
            }
        }
        debug_assert!(
            (out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs() < VALIDATION_TOL
        );
        Ok(Self { dims: self.dims.clone(), amplitudes: out })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²` — pure-state fidelity, insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Outer product `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        let d = self.dim();
        let mut elements = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                elements[[i, j]] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { dims: self.dims.clone(), elements }
    }

    /// Tensor product of two registers.
    pub fn tensor(a: &Self, b: &Self) -> Self {
        let mut dims = a.dims.clone();
        dims.extend_from_slice(&b.dims);
        let mut amplitudes = Array1::zeros(a.dim() * b.dim());
        for i in 0..a.dim() {
            for j in 0..b.dim() {
                amplitudes[i * b.dim() + j] = a.amplitudes[i] * b.amplitudes[j];
            }
        }
        Self { dims, amplitudes }
    }
}

/// Density matrix of a mixed-radix qudit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    elements: Array2<C64>,
}

impl DensityMatrix {
    /// Build from raw elements, validating Hermiticity and trace within
    /// [`VALIDATION_TOL`] and positivity down to [`PSD_TOL`].
    pub fn new(dims: Vec<usize>, elements: Array2<C64>) -> Result<Self> {
        check_dims(&dims)?;
        let d = total_dim(&dims);
        if elements.dim() != (d, d) {
            return Err(Error::Dimension(format!(
                "matrix is {:?}, expected {d}x{d}",
                elements.dim()
            )));
        }
        let herm_defect = linalg::max_abs_diff(&elements, &linalg::dagger(&elements));
        if herm_defect > VALIDATION_TOL {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian (defect {herm_defect:.3e})"
            )));
        }
        let trace: C64 = elements.diag().iter().sum();
        if (trace.re - 1.0).abs() > VALIDATION_TOL || trace.im.abs() > VALIDATION_TOL {
            return Err(Error::Validation(format!("trace {trace} deviates from 1")));
        }
        let (evals, _) = linalg::hermitian_eigen(&elements);
        if let Some(min) = evals.first() {
            if *min < PSD_TOL {
                return Err(Error::Validation(format!(
                    "matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { dims, elements })
    }

    /// Construction for internal paths that preserve physicality by
    /// construction; validated only in debug builds.
    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, elements: Array2<C64>) -> Self {
        debug_assert!(Self::new(dims.clone(), elements.clone()).is_ok());
        Self { dims, elements }
    }

    /// Maximally mixed state `I/D`.
    pub fn maximally_mixed(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let d = total_dim(dims);
        let elements = linalg::eye(d).mapv(|x| x / d as f64);
        Ok(Self { dims: dims.to_vec(), elements })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &Array2<C64> {
        &self.elements
    }

    /// Diagonal of ρ; sums to 1.
    pub fn populations(&self) -> Vec<f64> {
        self.elements.diag().iter().map(|x| x.re).collect()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.elements
            .iter()
            .zip(linalg::dagger(&self.elements).t().iter())
            .map(|(a, b)| (a * b).re)
            .sum::<f64>()
            .clamp(0.0, 1.0 + 1e-9)
    }

    /// `ρ → U ρ U†` on the target qudits.
    pub fn apply_unitary(&self, u: &Array2<C64>, targets: &[usize]) -> Result<Self> {
        validate_targets(&self.dims, targets)?;
        let m: usize = targets.iter().map(|&t| self.dims[t]).product();
        if u.dim() != (m, m) {
            return Err(Error::Dimension(format!(
                "operator is {:?}, expected {m}x{m} for these targets",
                u.dim()
            )));
        }
        if !linalg::is_unitary(u, VALIDATION_TOL) {
            return Err(Error::Validation("operator is not unitary within 1e-10".into()));
        }
        let offsets = target_offsets(&self.dims, targets);
        let bases = block_bases(&self.dims, targets);
        let d = self.dim();
        let mut out = self.elements.clone();
        let mut gathered = vec![C64::new(0.0, 0.0); m];
        // rows: out = U_emb · rho
        for col in 0..d {
            for &base in &bases {
                for (g, &off) in gathered.iter_mut().zip(offsets.iter()) {
                    *g = out[[base + off, col]];
                }
                for (j, &off) in offsets.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (l, &g) in gathered.iter().enumerate() {
                        acc += u[[j, l]] * g;
                    }
                    out[[base + off, col]] = acc;
                }
            }
        }
        // columns: out = (U_emb · rho) · U_emb†
        for row in 0..d {
            for &base in &bases {
                for (g, &off) in gathered.iter_mut().zip(offsets.iter()) {
                    *g = out[[row, base + off]];
                }
                for (j, &off) in offsets.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (l, &g) in gathered.iter().enumerate() {
                        acc += g * u[[j, l]].conj();
                    }
                    out[[row, base + off]] = acc;
                }
            }
        }
        Ok(Self { dims: self.dims.clone(), elements: out })
    }

    /// Reduced density matrix over the subsystems in `keep` (strictly
    /// increasing indices); everything else is traced out.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Argument("keep list must not be empty".into()));
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("keep indices must be strictly increasing".into()));
        }
        if *keep.last().unwrap() >= self.dims.len() {
            return Err(Error::Dimension(format!(
                "keep index {} out of range for a {}-qudit register",
                keep.last().unwrap(),
                self.dims.len()
            )));
        }
        let st = strides(&self.dims);
        let traced: Vec<usize> =
            (0..self.dims.len()).filter(|i| !keep.contains(i)).collect();
        let kept_dims: Vec<usize> = keep.iter().map(|&i| self.dims[i]).collect();
        let dk: usize = kept_dims.iter().product();
        let dt: usize = traced.iter().map(|&i| self.dims[i]).product();

        // flat-index contribution of every kept (resp. traced) multi-index
        let contrib = |axes: &[usize], count: usize| -> Vec<usize> {
            let adims: Vec<usize> = axes.iter().map(|&i| self.dims[i]).collect();
            (0..count)
                .map(|mut j| {
                    let mut f = 0;
                    for (pos, &ax) in axes.iter().enumerate().rev() {
                        f += (j % adims[pos]) * st[ax];
                        j /= adims[pos];
                    }
                    f
                })
                .collect()
        };
        let kc = contrib(keep, dk);
        let tc = contrib(&traced, dt);

        let mut out = Array2::zeros((dk, dk));
        for i in 0..dk {
            for j in 0..dk {
                let mut acc = C64::new(0.0, 0.0);
                for &t in &tc {
                    acc += self.elements[[kc[i] + t, kc[j] + t]];
                }
                out[[i, j]] = acc;
            }
        }
        Ok(Self { dims: kept_dims, elements: out })
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure reference state.
    pub fn fidelity_with_pure(&self, psi: &QuditState) -> f64 {
        let d = self.dim();
        assert_eq!(d, psi.dim(), "fidelity_with_pure: dimension mismatch");
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += psi.amplitudes()[i].conj() * self.elements[[i, j]] * psi.amplitudes()[j];
            }
        }
        acc.re.clamp(0.0, 1.0 + 1e-9)
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²` between two mixed states.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let s = linalg::sqrtm_psd(&self.elements);
        let m = s.dot(&other.elements).dot(&s);
        let (evals, _) = linalg::hermitian_eigen(&m);
        let f: f64 = evals.iter().map(|&l| l.max(0.0).sqrt()).sum();
        (f * f).clamp(0.0, 1.0 + 1e-9)
    }

    /// Tensor product of two registers.
    pub fn tensor(a: &Self, b: &Self) -> Self {
        let mut dims = a.dims.clone();
        dims.extend_from_slice(&b.dims);
        Self { dims, elements: linalg::kron(&a.elements, &b.elements) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn basis_state_single_ququart() {
        let s = QuditState::basis_state(&[4], &[0]).unwrap();
        assert_eq!(s.populations(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn basis_state_two_ququarts_origin() {
        let s = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        assert!(s.amplitudes().iter().skip(1).all(|a| *a == c(0.0, 0.0)));
    }

    #[test]
    fn basis_state_mixed_radix_index() {
        // enumeration oracle: walk all (l0, l1) in row-major order and find
        // the position of (3, 5)
        let dims = [4usize, 6usize];
        let mut expected = None;
        let mut flat = 0;
        for l0 in 0..dims[0] {
            for l1 in 0..dims[1] {
                if (l0, l1) == (3, 5) {
                    expected = Some(flat);
                }
                flat += 1;
            }
        }
        assert_eq!(expected, Some(23));
        let s = QuditState::basis_state(&dims, &[3, 5]).unwrap();
        assert_eq!(s.amplitudes()[23], c(1.0, 0.0));
    }

    #[test]
    fn basis_state_rejects_out_of_range_level() {
        assert!(matches!(
            QuditState::basis_state(&[4], &[4]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn apply_identity_is_noop() {
        let s = QuditState::basis_state(&[4, 4], &[1, 2]).unwrap();
        let out = s.apply_unitary(&linalg::eye(4), &[0]).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn apply_permutation_swaps_levels() {
        let mut p = linalg::eye(4);
        p[[0, 0]] = c(0.0, 0.0);
        p[[1, 1]] = c(0.0, 0.0);
        p[[0, 1]] = c(1.0, 0.0);
        p[[1, 0]] = c(1.0, 0.0);
        let s = QuditState::basis_state(&[4], &[0]).unwrap();
        let out = s.apply_unitary(&p, &[0]).unwrap();
        assert_eq!(out.populations(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn apply_unitary_matches_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for target in 0..2usize {
            let u = linalg::haar_unitary(4, &mut rng);
            let psi0 = random_state(&[4, 4], &mut rng);
            let full = if target == 0 {
                linalg::kron(&u, &linalg::eye(4))
            } else {
                linalg::kron(&linalg::eye(4), &u)
            };
            let fast = psi0.apply_unitary(&u, &[target]).unwrap();
            let slow = psi0.apply_unitary(&full, &[0, 1]).unwrap();
            for (a, b) in fast.amplitudes().iter().zip(slow.amplitudes().iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_unitary_rejects_non_unitary_and_duplicates() {
        let s = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let bad = Array2::from_elem((4, 4), c(0.5, 0.0));
        assert!(matches!(s.apply_unitary(&bad, &[0]), Err(Error::Validation(_))));
        let u = linalg::eye(16);
        assert!(matches!(s.apply_unitary(&u, &[0, 0]), Err(Error::Argument(_))));
    }

    #[test]
    fn disjoint_target_unitaries_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = linalg::haar_unitary(4, &mut rng);
        let v = linalg::haar_unitary(4, &mut rng);
        let psi = random_state(&[4, 4], &mut rng);
        let uv = psi.apply_unitary(&u, &[0]).unwrap().apply_unitary(&v, &[1]).unwrap();
        let vu = psi.apply_unitary(&v, &[1]).unwrap().apply_unitary(&u, &[0]).unwrap();
        for (a, b) in uv.amplitudes().iter().zip(vu.amplitudes().iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn populations_of_superposition() {
        let inv = 1.0 / 2f64.sqrt();
        let amps = Array1::from(vec![c(inv, 0.0), c(0.0, 0.0), c(inv, 0.0), c(0.0, 0.0)]);
        let s = QuditState::new(vec![4], amps).unwrap();
        let p = s.populations();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
    }

    /// (|00⟩ - i|11⟩)/√2 on two ququarts.
    pub(crate) fn bell_state() -> QuditState {
        let inv = 1.0 / 2f64.sqrt();
        let mut amps = Array1::zeros(16);
        amps[0] = c(inv, 0.0);
        amps[5] = c(0.0, -inv);
        QuditState::new(vec![4, 4], amps).unwrap()
    }

    #[test]
    fn bell_populations() {
        let p = bell_state().populations();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[5], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_state(&[4], &mut rng).to_density();
        let b = random_state(&[4], &mut rng).to_density();
        let joint = DensityMatrix::tensor(&a, &b);
        let ra = joint.partial_trace(&[0]).unwrap();
        assert!(linalg::max_abs_diff(ra.elements(), a.elements()) < 1e-12);
        let rb = joint.partial_trace(&[1]).unwrap();
        assert!(linalg::max_abs_diff(rb.elements(), b.elements()) < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let rho = bell_state().to_density();
        let r = rho.partial_trace(&[0]).unwrap();
        let expect = Array2::from_diag(&Array1::from(vec![
            c(0.5, 0.0),
            c(0.5, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ]));
        assert!(linalg::max_abs_diff(r.elements(), &expect) < 1e-12);
    }

    #[test]
    fn partial_trace_of_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(&[4, 4]).unwrap();
        let r = rho.partial_trace(&[1]).unwrap();
        let expect = DensityMatrix::maximally_mixed(&[4]).unwrap();
        assert!(linalg::max_abs_diff(r.elements(), expect.elements()) < 1e-12);
    }

    #[test]
    fn partial_trace_inverts_tensor_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_state(&[4], &mut rng).to_density();
        let env = DensityMatrix::maximally_mixed(&[4]).unwrap();
        let joint = DensityMatrix::tensor(&a, &env);
        let back = joint.partial_trace(&[0]).unwrap();
        assert!(linalg::max_abs_diff(back.elements(), a.elements()) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_empty_keep() {
        let rho = DensityMatrix::maximally_mixed(&[4, 4]).unwrap();
        assert!(matches!(rho.partial_trace(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn density_matrix_validation_rejects_bad_trace() {
        let elements = linalg::eye(4);
        assert!(matches!(
            DensityMatrix::new(vec![4], elements),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn purity_of_pure_and_mixed() {
        assert_abs_diff_eq!(bell_state().to_density().purity(), 1.0, epsilon = 1e-12);
        let mixed = DensityMatrix::maximally_mixed(&[4]).unwrap();
        assert_abs_diff_eq!(mixed.purity(), 0.25, epsilon = 1e-12);
    }

    pub(crate) fn random_state<R: rand::Rng>(dims: &[usize], rng: &mut R) -> QuditState {
        let d: usize = dims.iter().product();
        let u = linalg::haar_unitary(d, rng);
        let amps = Array1::from_iter((0..d).map(|i| u[[i, 0]]));
        QuditState::new(dims.to_vec(), amps).unwrap()
    }
}
