//! Spin-1 physics of the NV ground and excited triplets: constants, spin
//! operators, Zeeman + zero-field-splitting Hamiltonians, labeled
//! eigensystems and the phonon-driven temperature shift of the splitting.
//!
//! Everything is SI internally. Hamiltonians are in joules, eigen-energies
//! are reported in hertz.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Static magnetic field (tesla), lab frame or NV frame depending on context.
pub type FieldVector = Vector3<f64>;

/// 3x3 complex operator on the spin-1 manifold.
pub type SpinMatrix = Matrix3<Complex64>;

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Bohr magneton (J/T).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Elementary charge, used for meV conversions (J/eV).
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
/// Mean NV Lande g-factor.
pub const G_NV: f64 = 2.0028;
/// Ground-state zero-field splitting at T = 0 (Hz).
pub const D_GS0: f64 = 2.87e9;
/// Excited-state zero-field splitting (Hz).
pub const D_ES: f64 = 1.42e9;
/// Excitation laser wavelength (m).
pub const LASER_WAVELENGTH: f64 = 532e-9;

/// Bundle of the physical constants used throughout the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub h: f64,
    pub mu_b: f64,
    pub k_b: f64,
    pub c: f64,
    pub g0: f64,
    pub d_gs0: f64,
    pub d_es: f64,
    pub lambda_laser: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            h: PLANCK,
            mu_b: BOHR_MAGNETON,
            k_b: BOLTZMANN,
            c: SPEED_OF_LIGHT,
            g0: G_NV,
            d_gs0: D_GS0,
            d_es: D_ES,
            lambda_laser: LASER_WAVELENGTH,
        }
    }
}

/// Spin-1 operators in the S_z eigenbasis, ordered (m_s = +1, 0, -1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub sx: SpinMatrix,
    pub sy: SpinMatrix,
    pub sz: SpinMatrix,
}

/// Basis index of each m_s projection in [`SpinOperators`] matrices.
pub const IDX_PLUS: usize = 0;
pub const IDX_ZERO: usize = 1;
pub const IDX_MINUS: usize = 2;

pub fn spin_operators() -> SpinOperators {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    SpinOperators {
        sx: Matrix3::new(z, re(r), z, re(r), z, re(r), z, re(r), z),
        sy: Matrix3::new(z, im(-r), z, im(r), z, im(-r), z, im(r), z),
        sz: Matrix3::new(re(1.0), z, z, z, z, z, z, z, re(-1.0)),
    }
}

/// Zeeman coupling `mu_B g (Bx Sx + By Sy + Bz Sz)` in joules.
pub fn zeeman_term(b: &FieldVector, g: f64) -> SpinMatrix {
    let s = spin_operators();
    let k = BOHR_MAGNETON * g;
    (s.sx * Complex64::from(b.x) + s.sy * Complex64::from(b.y) + s.sz * Complex64::from(b.z))
        * Complex64::from(k)
}

/// `h D Sz^2 + mu_B g B.S` in joules. Pass [`D_ES`] for the excited triplet.
pub fn ground_hamiltonian(b: &FieldVector, d_eff: f64, g: f64) -> SpinMatrix {
    let s = spin_operators();
    let sz2 = s.sz * s.sz;
    sz2 * Complex64::from(PLANCK * d_eff) + zeeman_term(b, g)
}

/// Eigen-decomposition of a spin-1 Hamiltonian with states labeled as in the
/// seven-level model: label 1 <-> m_s = 0, label 2 <-> m_s = -1,
/// label 3 <-> m_s = +1.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// Energies in Hz, in label order, shifted so the minimum is exactly 0.
    pub energies: [f64; 3],
    /// Unit eigenvectors in label order, largest component real-positive.
    pub vectors: [Vector3<Complex64>; 3],
    /// Set when two labelings explained the zero-field basis equally well
    /// and the eigenvalue order decided.
    pub tie: bool,
}

impl EigenSystem {
    /// Transition frequency |1> -> |2| (m_s = 0 -> -1 branch), Hz.
    pub fn nu12(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    /// Transition frequency |1> -> |3> (m_s = 0 -> +1 branch), Hz.
    pub fn nu13(&self) -> f64 {
        self.energies[2] - self.energies[0]
    }
}

// basis index (in S_z order) that each label should overlap most with
const LABEL_BASIS: [usize; 3] = [IDX_ZERO, IDX_MINUS, IDX_PLUS];

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

pub fn eigensystem(h: &SpinMatrix) -> EigenSystem {
    let eig = SymmetricEigen::new(*h);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: [f64; 3] = order.map(|i| eig.eigenvalues[i]);
    let vectors: [Vector3<Complex64>; 3] = order.map(|i| fix_phase(eig.eigenvectors.column(i).into()));

    // squared overlap of sorted eigenvector j with the basis state of label l
    let overlap = |l: usize, j: usize| vectors[j][LABEL_BASIS[l]].norm_sqr();

    let mut best = PERMUTATIONS[0];
    let mut best_score = f64::NEG_INFINITY;
    let mut scores = [0.0; 6];
    for (k, perm) in PERMUTATIONS.iter().enumerate() {
        let score: f64 = (0..3).map(|l| overlap(l, perm[l])).sum();
        scores[k] = score;
        if score > best_score + 1e-12 {
            best_score = score;
            best = *perm;
        }
    }
    let ties = scores.iter().filter(|&&s| (s - best_score).abs() <= 1e-9).count();

    let e_min = values[0];
    EigenSystem {
        energies: best.map(|j| (values[j] - e_min) / PLANCK),
        vectors: best.map(|j| vectors[j]),
        tie: ties > 1,
    }
}

fn fix_phase(v: Vector3<Complex64>) -> Vector3<Complex64> {
    let mut k = 0;
    for i in 1..3 {
        if v[i].norm() > v[k].norm() + 1e-14 {
            k = i;
        }
    }
    let a = v[k];
    if a.norm() == 0.0 {
        return v;
    }
    let phase = a.conj() / a.norm();
    let mut out = v * phase;
    // remove round-off imaginary part on the pivot
    out[k] = Complex64::new(out[k].re, 0.0);
    out
}

/// Phonon coupling model for the temperature dependence of D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononModel {
    /// Coupling constants (Hz).
    pub c1: f64,
    pub c2: f64,
    /// Phonon mode energies (eV).
    pub delta1_ev: f64,
    pub delta2_ev: f64,
}

impl Default for PhononModel {
    fn default() -> Self {
        Self {
            c1: -54.91e6,
            c2: -249.6e6,
            delta1_ev: 58.73e-3,
            delta2_ev: 145.5e-3,
        }
    }
}

/// Bose-Einstein occupation of a mode of energy `delta_ev` at `t` kelvin,
/// defined as 0 at T = 0.
pub fn bose_einstein(delta_ev: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 / ((delta_ev * ELECTRON_VOLT / (BOLTZMANN * t)).exp() - 1.0)
}

impl PhononModel {
    pub fn zfs(&self, d0: f64, t: f64) -> f64 {
        d0 + self.c1 * bose_einstein(self.delta1_ev, t) + self.c2 * bose_einstein(self.delta2_ev, t)
    }
}

/// Ground-state zero-field splitting D(T) in Hz.
pub fn zfs_temperature(t: f64) -> f64 {
    PhononModel::default().zfs(D_GS0, t)
}

/// NV gyromagnetic ratio g mu_B / h in Hz/T.
pub fn gamma_nv(g: f64) -> f64 {
    g * BOHR_MAGNETON / PLANCK
}
