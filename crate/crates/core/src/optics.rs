//! Linear-optical elements as 4×4 unitaries on the `(aH, aV, bH, bV)` space.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{PhotonState, SpatialMode};

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalElement {
    matrix: Matrix4<Complex64>,
    label: String,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl OpticalElement {
    /// Wraps an arbitrary matrix. Callers are responsible for unitarity;
    /// see [`OpticalElement::is_unitary`].
    pub fn from_matrix(matrix: Matrix4<Complex64>, label: impl Into<String>) -> Self {
        OpticalElement { matrix, label: label.into() }
    }

    pub fn identity() -> Self {
        Self::from_matrix(Matrix4::identity(), "I")
    }

    /// Embeds a 2×2 polarization operator on one path, identity on the other.
    pub fn on_mode(mode: SpatialMode, jones: Matrix2<Complex64>, label: impl Into<String>) -> Self {
        let mut m = Matrix4::identity();
        let o = mode.offset();
        m.fixed_view_mut::<2, 2>(o, o).copy_from(&jones);
        Self::from_matrix(m, label)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Returns `next ∘ self`: `self` acts first.
    pub fn then(&self, next: &OpticalElement) -> OpticalElement {
        OpticalElement { matrix: next.matrix * self.matrix, label: format!("{} ; {}", self.label, next.label) }
    }

    pub fn apply(&self, state: &PhotonState) -> PhotonState {
        PhotonState::from_vector_unchecked(self.matrix * state.as_vector())
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.adjoint() * self.matrix - Matrix4::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }
}

/// Half-wave plate with fast axis at `theta_deg` on one path:
/// Jones matrix `[[cos2θ, sin2θ], [sin2θ, −cos2θ]]`.
pub fn hwp(mode: SpatialMode, theta_deg: f64) -> OpticalElement {
    let two = 2.0 * theta_deg.to_radians();
    let (s, co) = two.sin_cos();
    let jones = Matrix2::new(c(co), c(s), c(s), c(-co));
    OpticalElement::on_mode(mode, jones, format!("HWP[{mode:?}]@{theta_deg}°"))
}

/// Polarization rotation by `alpha_deg` on one path (proper rotation, det = 1).
pub fn rotator(mode: SpatialMode, alpha_deg: f64) -> OpticalElement {
    let (s, co) = alpha_deg.to_radians().sin_cos();
    let jones = Matrix2::new(c(co), c(-s), c(s), c(co));
    OpticalElement::on_mode(mode, jones, format!("R[{mode:?}]@{alpha_deg}°"))
}

/// Multiplies both polarization amplitudes of `mode` by `e^{iφ}`.
pub fn phase_shifter(mode: SpatialMode, phi: f64) -> OpticalElement {
    let p = Complex64::from_polar(1.0, phi);
    let zero = c(0.0);
    let jones = Matrix2::new(p, zero, zero, p);
    OpticalElement::on_mode(mode, jones, format!("φ[{mode:?}]={phi}"))
}

/// Phase-free polarizing beamsplitter: `H` keeps its path, `V` swaps path.
pub fn pbs() -> OpticalElement {
    let mut m = Matrix4::zeros();
    // aH -> aH, aV -> bV, bH -> bH, bV -> aV
    m[(0, 0)] = c(1.0);
    m[(3, 1)] = c(1.0);
    m[(2, 2)] = c(1.0);
    m[(1, 3)] = c(1.0);
    OpticalElement::from_matrix(m, "PBS")
}

/// Composes elements so that the first listed acts first.
pub fn compose(elements: &[OpticalElement]) -> Result<OpticalElement> {
    let (first, rest) = elements.split_first().ok_or(Error::EmptyComposition)?;
    Ok(rest.iter().fold(first.clone(), |acc, e| acc.then(e)))
}

pub fn apply(element: &OpticalElement, state: &PhotonState) -> PhotonState {
    element.apply(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bell_state, make_basis_state, BellLabel, Polarization};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    const TIGHT: f64 = 1e-12;

    fn close(a: &PhotonState, b: [Complex64; 4]) -> bool {
        a.amplitudes().iter().zip(b).all(|(x, y)| (x - y).norm() < TIGHT)
    }

    fn mat_close(a: &OpticalElement, b: &OpticalElement) -> bool {
        (a.matrix() - b.matrix()).iter().all(|z| z.norm() < TIGHT)
    }

    #[test]
    fn hwp_22_5_makes_plus_45() {
        let out = hwp(SpatialMode::A, 22.5).apply(&make_basis_state(SpatialMode::A, Polarization::H));
        let r = c(FRAC_1_SQRT_2);
        assert!(close(&out, [r, r, c(0.0), c(0.0)]), "{out}");
    }

    #[test]
    fn hwp_45_flips() {
        let out = hwp(SpatialMode::B, 45.0).apply(&make_basis_state(SpatialMode::B, Polarization::H));
        assert!((out.fidelity(&make_basis_state(SpatialMode::B, Polarization::V)) - 1.0).abs() < TIGHT);
        assert!(close(&out, [c(0.0), c(0.0), c(0.0), c(1.0)]));
    }

    #[test]
    fn hwp_zero_is_diag_one_minus_one() {
        let m = hwp(SpatialMode::A, 0.0);
        let mut want = Matrix4::identity();
        want[(1, 1)] = c(-1.0);
        assert!(mat_close(&m, &OpticalElement::from_matrix(want, "")));
    }

    #[test]
    fn phase_shifter_examples() {
        assert!(mat_close(&phase_shifter(SpatialMode::A, 0.0), &OpticalElement::identity()));
        let out = phase_shifter(SpatialMode::A, PI).apply(&bell_state(BellLabel::PsiPlus));
        assert!((out.fidelity(&bell_state(BellLabel::PsiMinus)) - 1.0).abs() < TIGHT);
        let out = phase_shifter(SpatialMode::A, FRAC_PI_2).apply(&make_basis_state(SpatialMode::A, Polarization::H));
        assert!((out.amplitudes()[0] - Complex64::new(0.0, 1.0)).norm() < TIGHT);
    }

    #[test]
    fn pbs_mapping() {
        let p = pbs();
        let ah = make_basis_state(SpatialMode::A, Polarization::H);
        assert_eq!(p.apply(&ah), ah);
        let bv = make_basis_state(SpatialMode::B, Polarization::V);
        assert_eq!(p.apply(&bv), make_basis_state(SpatialMode::A, Polarization::V));
        let av = make_basis_state(SpatialMode::A, Polarization::V);
        assert_eq!(p.apply(&av), bv);
        let bh = make_basis_state(SpatialMode::B, Polarization::H);
        assert_eq!(p.apply(&bh), bh);
        assert!(mat_close(&p.then(&p), &OpticalElement::identity()));
    }

    #[test]
    fn compose_order_and_errors() {
        assert!(matches!(compose(&[]), Err(Error::EmptyComposition)));
        let id = compose(&[OpticalElement::identity(), OpticalElement::identity()]).unwrap();
        assert!(mat_close(&id, &OpticalElement::identity()));

        let prep = compose(&[hwp(SpatialMode::A, 22.5), pbs()]).unwrap();
        let out = apply(&prep, &make_basis_state(SpatialMode::A, Polarization::H));
        assert!((out.fidelity(&bell_state(BellLabel::PsiPlus)) - 1.0).abs() < TIGHT);

        // reversed order differs: PBS first leaves aH in path a, HWP then makes a,+45
        let rev = compose(&[pbs(), hwp(SpatialMode::A, 22.5)]).unwrap();
        let out = apply(&rev, &make_basis_state(SpatialMode::A, Polarization::H));
        assert!(out.fidelity(&bell_state(BellLabel::PsiPlus)) < 0.6);
    }

    fn arb_element() -> impl Strategy<Value = OpticalElement> {
        let mode = prop_oneof![Just(SpatialMode::A), Just(SpatialMode::B)];
        (0usize..4, mode, -720.0f64..720.0).prop_map(|(kind, mode, x)| match kind {
            0 => hwp(mode, x),
            1 => phase_shifter(mode, x.to_radians()),
            2 => rotator(mode, x),
            _ => pbs(),
        })
    }

    fn arb_state() -> impl Strategy<Value = PhotonState> {
        proptest::array::uniform8(-1.0f64..1.0)
            .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|v| {
                PhotonState::normalized([
                    Complex64::new(v[0], v[1]),
                    Complex64::new(v[2], v[3]),
                    Complex64::new(v[4], v[5]),
                    Complex64::new(v[6], v[7]),
                ])
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn elements_are_unitary(chain in proptest::collection::vec(arb_element(), 1..6)) {
            for e in &chain {
                prop_assert!(e.is_unitary(TIGHT), "{}: {}", e.label(), e.unitarity_defect());
            }
            prop_assert!(compose(&chain).unwrap().is_unitary(TIGHT));
        }

        #[test]
        fn apply_preserves_norm(e in arb_element(), s in arb_state()) {
            prop_assert!((e.apply(&s).norm_sqr() - 1.0).abs() < TIGHT);
        }

        #[test]
        fn hwp_has_180_degree_period(theta in -360.0f64..360.0) {
            for mode in SpatialMode::ALL {
                prop_assert!(mat_close(&hwp(mode, theta), &hwp(mode, theta + 180.0)));
            }
        }

        #[test]
        fn pbs_commutes_with_common_phase(phi in -10.0f64..10.0) {
            let common = phase_shifter(SpatialMode::A, phi).then(&phase_shifter(SpatialMode::B, phi));
            prop_assert!(mat_close(&pbs().then(&common), &common.then(&pbs())));
        }

        #[test]
        fn composition_matches_sequential_application(x in arb_element(), y in arb_element(), s in arb_state()) {
            let composed = compose(&[x.clone(), y.clone()]).unwrap().apply(&s);
            let sequential = y.apply(&x.apply(&s));
            for (a, b) in composed.amplitudes().iter().zip(sequential.amplitudes()) {
                prop_assert!((a - b).norm() < TIGHT);
            }
        }
    }
}
