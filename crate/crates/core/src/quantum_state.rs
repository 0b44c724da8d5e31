//! Two-qubit OAM states, analyzer-induced measurement vectors, conservation
//! checks, and entanglement measures.
//!
//! The computational basis is fixed throughout the crate as
//!
//! ```text
//! |0>_S |0>_AS,  |0>_S |-1>_AS,  |1>_S |0>_AS,  |1>_S |-1>_AS
//! ```
//!
//! i.e. the Stokes qubit lives on OAM indices {0, +1} and the anti-Stokes
//! qubit on {0, -1}, and the pair index is `2 * stokes + antistokes`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cplx, Matrix4, Vector4};
use crate::oam_optics::HologramSetting;
use crate::oam_optics::{projection_amplitude, LgMode, TransverseField};
use crate::quadrature::QuadratureSpec;
use crate::scalar::{real, Real};

/// Hermiticity / trace / positivity tolerance for state validation: 1e-9 in
/// f64, widened to a safe multiple of the machine epsilon for narrower types.
fn state_tol<T: Real>() -> T {
    real::<T>(1e-9).max(T::epsilon() * real(100.0))
}

/// Which photon of the pair an analyzer acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Stokes,
    AntiStokes,
}

impl Side {
    /// OAM index of the qubit basis state `|b>` on this side, b in {0, 1}.
    pub fn basis_oam(self, b: usize) -> i32 {
        match (self, b) {
            (_, 0) => 0,
            (Side::Stokes, _) => 1,
            (Side::AntiStokes, _) => -1,
        }
    }
}

/// A hologram + single-mode-fiber analyzer on one side of the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSetting<T> {
    pub hologram: HologramSetting<T>,
    pub collected_mode: LgMode<T>,
    pub side: Side,
}

impl<T: Real> AnalyzerSetting<T> {
    pub fn new(
        hologram: HologramSetting<T>,
        collected_mode: LgMode<T>,
        side: Side,
    ) -> Result<Self> {
        if collected_mode.l() != 0 {
            return Err(Error::invalid(format!(
                "collected fiber mode must be LG00, got l = {}",
                collected_mode.l()
            )));
        }
        Ok(Self {
            hologram,
            collected_mode,
            side,
        })
    }

    /// The same analyzer with a different hologram displacement.
    pub fn with_displacement(&self, x0: T) -> Self {
        let mut s = *self;
        s.hologram.displacement = x0;
        s
    }
}

/// Pure two-qubit state in the fixed basis, unit norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KetVector4<T>(Vector4<T>);

impl<T: Real> KetVector4<T> {
    /// Validate an already-normalized amplitude vector.
    pub fn new(amplitudes: [Cplx<T>; 4]) -> Result<Self> {
        let v = Vector4(amplitudes);
        let n = v.norm();
        if (n - T::one()).abs() > state_tol() {
            return Err(Error::invalid(format!("ket norm {n} is not 1")));
        }
        Ok(Self(v))
    }

    /// Normalize an arbitrary nonzero amplitude vector.
    pub fn normalized(amplitudes: [Cplx<T>; 4]) -> Result<Self> {
        let v = Vector4(amplitudes);
        let n = v.norm();
        if !(n > T::zero()) {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        Ok(Self(v.scale(Cplx::new(T::one() / n, T::zero()))))
    }

    pub fn amplitudes(&self) -> &[Cplx<T>; 4] {
        &self.0 .0
    }

    pub fn vector(&self) -> &Vector4<T> {
        &self.0
    }
}

/// The two-photon pair state `C (|0,0> + alpha1 |1,-1>)`.
pub fn make_pair_state<T: Real>(alpha1: Cplx<T>) -> KetVector4<T> {
    let zero = Cplx::new(T::zero(), T::zero());
    let one = Cplx::new(T::one(), T::zero());
    KetVector4::normalized([one, zero, zero, alpha1]).expect("nonzero by construction")
}

/// The maximally entangled target state `(|0,0> + |1,-1>)/sqrt(2)`.
pub fn bell_state<T: Real>() -> KetVector4<T> {
    make_pair_state(Cplx::new(T::one(), T::zero()))
}

/// Truncated OAM-correlated state `C Σ_i α_i |i>_S |-i>_AS`, i in [-L, L].
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOamState<T> {
    amplitudes: Vec<Cplx<T>>,
    l_max: i32,
    norm_constant: T,
}

impl<T: Real> TruncatedOamState<T> {
    /// `amps[k]` is the raw amplitude of OAM index `k - l_max`.
    pub fn new(amps: &[Cplx<T>], l_max: u32) -> Result<Self> {
        let expect = 2 * l_max as usize + 1;
        if amps.len() != expect {
            return Err(Error::invalid(format!(
                "amplitude list has {} entries, expected {expect} for L_max = {l_max}",
                amps.len()
            )));
        }
        let norm_sqr: T = amps.iter().map(|a| a.norm_sqr()).sum();
        if !(norm_sqr > T::zero()) {
            return Err(Error::invalid("all amplitudes are zero"));
        }
        Ok(Self {
            amplitudes: amps.to_vec(),
            l_max: l_max as i32,
            norm_constant: T::one() / norm_sqr.sqrt(),
        })
    }

    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    /// Normalization constant C.
    pub fn norm_constant(&self) -> T {
        self.norm_constant
    }

    /// Normalized amplitude of `|i>_S |-i>_AS`, zero outside the truncation.
    pub fn amplitude(&self, i: i32) -> Cplx<T> {
        if i.abs() > self.l_max {
            return Cplx::new(T::zero(), T::zero());
        }
        self.amplitudes[(i + self.l_max) as usize] * Cplx::new(self.norm_constant, T::zero())
    }

    /// Restriction to the {0, 1} OAM pair subspace as a two-qubit ket, if the
    /// state has no weight outside it.
    pub fn two_level_projection(&self) -> Option<KetVector4<T>> {
        let outside: T = (-self.l_max..=self.l_max)
            .filter(|&i| i != 0 && i != 1)
            .map(|i| self.amplitude(i).norm_sqr())
            .sum();
        if outside > state_tol() {
            return None;
        }
        let zero = Cplx::new(T::zero(), T::zero());
        KetVector4::normalized([self.amplitude(0), zero, zero, self.amplitude(1)]).ok()
    }
}

/// One scalar per field of the pair-generation process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonQuadruple<T> {
    pub stokes: T,
    pub anti_stokes: T,
    pub pump: T,
    pub coupling: T,
}

/// One wavevector per photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavevectorQuadruple<T> {
    pub stokes: [T; 3],
    pub anti_stokes: [T; 3],
    pub pump: [T; 3],
    pub coupling: [T; 3],
}

/// Pass/fail per conservation law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub energy: bool,
    pub momentum: bool,
    pub oam: bool,
}

impl ConservationReport {
    pub fn all_pass(&self) -> bool {
        self.energy && self.momentum && self.oam
    }
}

/// Check that the generated pair conserves energy, momentum, and OAM against
/// the pump and coupling fields: S + AS = P + C per quantity, within `tol`
/// (momentum via the Euclidean norm of the vector mismatch).
pub fn conservation_check<T: Real>(
    frequencies: &PhotonQuadruple<T>,
    wavevectors: &WavevectorQuadruple<T>,
    oams: &PhotonQuadruple<T>,
    tol: T,
) -> ConservationReport {
    let energy =
        (frequencies.stokes + frequencies.anti_stokes - frequencies.pump - frequencies.coupling)
            .abs()
            <= tol;
    let mut k2 = T::zero();
    for i in 0..3 {
        let d = wavevectors.stokes[i] + wavevectors.anti_stokes[i]
            - wavevectors.pump[i]
            - wavevectors.coupling[i];
        k2 += d * d;
    }
    let momentum = k2.sqrt() <= tol;
    let oam = (oams.stokes + oams.anti_stokes - oams.pump - oams.coupling).abs() <= tol;
    ConservationReport {
        energy,
        momentum,
        oam,
    }
}

/// Two-qubit density matrix: Hermitian, unit trace, positive semidefinite
/// (all within 1e-9).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4<T> {
    m: Matrix4<T>,
}

impl<T: Real> DensityMatrix4<T> {
    pub fn new(m: Matrix4<T>) -> Result<Self> {
        let tol = state_tol::<T>();
        if !m.is_hermitian(tol) {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let tr = m.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::invalid(format!(
                "density matrix trace {} + {}i is not 1",
                tr.re, tr.im
            )));
        }
        let (w, _) = m.eigh();
        if w[0] < -tol {
            return Err(Error::invalid(format!(
                "density matrix has negative eigenvalue {}",
                w[0]
            )));
        }
        Ok(Self { m })
    }

    pub fn from_pure(psi: &KetVector4<T>) -> Self {
        Self {
            m: Matrix4::outer(psi.vector()),
        }
    }

    /// Werner mixture `p |Φ><Φ| + (1-p) I/4` of the target Bell state with
    /// white noise.
    pub fn werner(p: T) -> Result<Self> {
        if p < T::zero() || p > T::one() {
            return Err(Error::invalid(format!(
                "Werner weight p = {p} not in [0, 1]"
            )));
        }
        let bell = Self::from_pure(&bell_state());
        let mixed = Matrix4::identity().scale_re(real::<T>(0.25) * (T::one() - p));
        Self::new(bell.m.scale_re(p).add(&mixed))
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Matrix4::identity().scale_re(real(0.25)),
        }
    }

    /// Rank-4 diagonal-plus-Bell family hitting prescribed measures: the
    /// returned state has fidelity `f` to the Bell state and concurrence `c`.
    ///
    /// Construction: `c |Φ><Φ| + (f - c)(|0,0><0,0| + |1,-1><1,-1|)
    /// + (1 + c - 2f) |0,-1><0,-1|`; requires `0 <= c <= f <= (1 + c)/2`.
    pub fn with_measures(f: T, c: T) -> Result<Self> {
        let two = real::<T>(2.0);
        if c < T::zero() || c > f || f > (T::one() + c) / two {
            return Err(Error::invalid(format!(
                "no state in this family has fidelity {f} and concurrence {c}"
            )));
        }
        let bell = Self::from_pure(&bell_state()).m.scale_re(c);
        let mut diag = Matrix4::zeros();
        diag.m[0][0] = Cplx::new(f - c, T::zero());
        diag.m[3][3] = Cplx::new(f - c, T::zero());
        diag.m[1][1] = Cplx::new(T::one() + c - two * f, T::zero());
        Self::new(bell.add(&diag))
    }

    pub fn matrix(&self) -> &Matrix4<T> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Cplx<T> {
        self.m.m[i][j]
    }

    /// Row-major real parts (JSON wire format).
    pub fn real_parts(&self) -> [[T; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.m.m[i][j].re))
    }

    /// Row-major imaginary parts (JSON wire format).
    pub fn imag_parts(&self) -> [[T; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.m.m[i][j].im))
    }

    pub fn from_parts(real_parts: [[T; 4]; 4], imag_parts: [[T; 4]; 4]) -> Result<Self> {
        Self::new(Matrix4::from_fn(|i, j| {
            Cplx::new(real_parts[i][j], imag_parts[i][j])
        }))
    }
}

/// JSON wire form of a density matrix: row-major real and imaginary arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrixJson<T> {
    pub real: [[T; 4]; 4],
    pub imag: [[T; 4]; 4],
}

impl<T: Real> Serialize for DensityMatrix4<T> {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        DensityMatrixJson {
            real: self.real_parts(),
            imag: self.imag_parts(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for DensityMatrix4<T> {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let parts = DensityMatrixJson::<T>::deserialize(deserializer)?;
        DensityMatrix4::from_parts(parts.real, parts.imag).map_err(serde::de::Error::custom)
    }
}

/// `<psi| rho |psi>`.
pub fn fidelity<T: Real>(rho: &DensityMatrix4<T>, psi: &KetVector4<T>) -> T {
    let v = psi.vector();
    let rv = rho.matrix().mul_vec(v);
    v.dot(&rv).re
}

/// The spin-flip matrix `sigma_y ⊗ sigma_y` (antidiagonal -1, 1, 1, -1).
fn spin_flip<T: Real>() -> Matrix4<T> {
    let mut m = Matrix4::zeros();
    m.m[0][3] = Cplx::new(-T::one(), T::zero());
    m.m[1][2] = Cplx::new(T::one(), T::zero());
    m.m[2][1] = Cplx::new(T::one(), T::zero());
    m.m[3][0] = Cplx::new(-T::one(), T::zero());
    m
}

/// Wootters concurrence `max(0, λ1 - λ2 - λ3 - λ4)`, the λi being the
/// descending square roots of the eigenvalues of `ρ ρ~` with
/// `ρ~ = (σy⊗σy) ρ* (σy⊗σy)`.
pub fn concurrence<T: Real>(rho: &DensityMatrix4<T>) -> T {
    let f = spin_flip::<T>();
    let rho_tilde = f.matmul(&rho.matrix().conj()).matmul(&f);
    // Same nonzero spectrum as ρ ρ~, but via the Hermitian PSD product
    // sqrt(ρ~) ρ sqrt(ρ~).
    let b = rho_tilde.sqrt_psd();
    let h = b.matmul(rho.matrix()).matmul(&b);
    let (w, _) = h.eigh();
    let mut lambda: Vec<T> = w.iter().map(|&x| x.max(T::zero()).sqrt()).collect();
    lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(T::zero())
}

/// Binary entropy in bits, with the 0·log 0 = 0 convention.
fn binary_entropy<T: Real>(x: T) -> T {
    let mut h = T::zero();
    for p in [x, T::one() - x] {
        if p > T::zero() {
            h -= p * p.log2();
        }
    }
    h
}

/// Entanglement of formation from the concurrence:
/// `h((1 + sqrt(1 - C^2)) / 2)`.
pub fn eof_from_concurrence<T: Real>(c: T) -> T {
    let c = c.min(T::one()).max(T::zero());
    binary_entropy((T::one() + (T::one() - c * c).sqrt()) / real(2.0))
}

/// Entanglement of formation of a two-qubit state.
pub fn entanglement_of_formation<T: Real>(rho: &DensityMatrix4<T>) -> T {
    eof_from_concurrence(concurrence(rho))
}

/// Trace distance `(1/2) Σ |eig(a - b)|`.
pub fn trace_distance<T: Real>(a: &DensityMatrix4<T>, b: &DensityMatrix4<T>) -> T {
    let (w, _) = a.matrix().sub(b.matrix()).eigh();
    w.iter().map(|&x| x.abs()).sum::<T>() / real(2.0)
}

/// Measurement vector `(c_0, c_1)` an analyzer induces on its side: per basis
/// mode `b`, the projection amplitude of `LG_{0,basis_oam(b)}` through the
/// hologram onto the collected fiber mode. The vector norm is generally below
/// one (mode-overlap loss); the global phase is fixed so the dominant
/// component is real and non-negative.
pub fn analyzer_vector<T: Real>(
    setting: &AnalyzerSetting<T>,
    quad: &QuadratureSpec<T>,
) -> Result<[Cplx<T>; 2]> {
    let collected = TransverseField::from_mode(setting.collected_mode);
    let waist = setting.collected_mode.waist();
    let mut c = [Cplx::new(T::zero(), T::zero()); 2];
    for (b, slot) in c.iter_mut().enumerate() {
        let mode = LgMode::lg0(setting.side.basis_oam(b), waist)?;
        let input = TransverseField::from_mode(mode);
        *slot = projection_amplitude(&collected, &input, &setting.hologram, quad)?;
    }
    // Global-phase convention: dominant component real >= 0.
    let k = if c[0].norm() >= c[1].norm() { 0 } else { 1 };
    let mag = c[k].norm();
    if mag > real(1e-15) {
        let rot = c[k].conj() / Cplx::new(mag, T::zero());
        c[0] *= rot;
        c[1] *= rot;
    }
    Ok(c)
}

/// Displacement at which the analyzer projects onto a balanced superposition
/// (`|c_0| = |c_1|`), found by bisection on `[0, 5w]`.
pub fn balanced_displacement<T: Real>(
    setting: &AnalyzerSetting<T>,
    quad: &QuadratureSpec<T>,
) -> Result<T> {
    let imbalance = |x0: T| -> Result<T> {
        let c = analyzer_vector(&setting.with_displacement(x0), quad)?;
        Ok(c[1].norm() - c[0].norm())
    };
    let mut lo = T::zero();
    let mut hi = setting.collected_mode.waist() * real(5.0);
    let f_lo = imbalance(lo)?;
    let f_hi = imbalance(hi)?;
    if f_lo <= T::zero() || f_hi >= T::zero() {
        return Err(Error::numerical(
            "balanced displacement not bracketed on [0, 5w]",
        ));
    }
    for _ in 0..80 {
        let mid = (lo + hi) / real(2.0);
        if imbalance(mid)? > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * real(8.0) * hi.max(T::one()) {
            break;
        }
    }
    Ok((lo + hi) / real(2.0))
}

/// Coincidence detection probability `v† ρ v` with
/// `v = s-vector ⊗ as-vector`; includes the analyzers' mode-overlap loss.
pub fn coincidence_probability<T: Real>(
    rho: &DensityMatrix4<T>,
    stokes: &AnalyzerSetting<T>,
    antistokes: &AnalyzerSetting<T>,
    quad: &QuadratureSpec<T>,
) -> Result<T> {
    if stokes.side != Side::Stokes || antistokes.side != Side::AntiStokes {
        return Err(Error::invalid(
            "coincidence_probability needs one Stokes and one anti-Stokes analyzer",
        ));
    }
    let vs = analyzer_vector(stokes, quad)?;
    let vas = analyzer_vector(antistokes, quad)?;
    let v = Vector4::kron2(&vs, &vas);
    let p = v.dot(&rho.matrix().mul_vec(&v)).re;
    Ok(p.max(T::zero()).min(T::one()))
}
