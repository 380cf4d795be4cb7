//! Algebraic invariants checked on random inputs.

use bdi_core::ensembles::{FieldRealization, MatrixField};
use bdi_core::kernels::{bilinear_symplectic, inner, kernel1, xi1, KernelContext};
use bdi_core::linalg::{det, CMatrix};
use bdi_core::pfassembly::{berezinian_identity_check, cauchy_berezinian, pfaffian, SkewMatrix};
use bdi_core::quad::QuadConfig;
use bdi_core::specfun::Vector2C;
use bdi_core::C64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn vector() -> impl Strategy<Value = Vector2C> {
    (complex(), complex()).prop_map(|(a, b)| Vector2C::new(a, b))
}

/// Random skew matrix of even dimension 2..=12 plus a random square matrix of the same size.
fn skew_and_square() -> impl Strategy<Value = (SkewMatrix, CMatrix)> {
    (1usize..=6).prop_flat_map(|h| {
        let d = 2 * h;
        (prop::collection::vec(complex(), d * d), prop::collection::vec(complex(), d * d)).prop_map(move |(u, b)| {
            let a = SkewMatrix::from_upper(d, |i, j| u[i * d + j]);
            (a, CMatrix::from_row_slice(d, d, &b))
        })
    })
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfaffian_squares_to_determinant((a, _) in skew_and_square()) {
        let pf = pfaffian(&a).unwrap();
        let d = det(a.entries());
        prop_assume!(d.norm() > 1e-8);
        prop_assert!(rel(pf * pf, d) < 1e-9, "Pf² = {}, det = {}", pf * pf, d);
    }

    #[test]
    fn pfaffian_congruence((a, b) in skew_and_square()) {
        let c = SkewMatrix::new(&b * a.entries() * b.transpose()).unwrap();
        let lhs = pfaffian(&c).unwrap();
        let rhs = det(&b) * pfaffian(&a).unwrap();
        prop_assume!(rhs.norm() > 1e-8);
        prop_assert!(rel(lhs, rhs) < 1e-8);
    }

    #[test]
    fn pfaffian_is_linear_in_a_row_pair((a, _) in skew_and_square(), s in complex()) {
        // scaling row and column 0 scales Pf by s
        let d = a.dim();
        let mut m = a.entries().clone();
        for j in 0..d {
            m[(0, j)] *= s;
            m[(j, 0)] *= s;
        }
        let lhs = pfaffian(&SkewMatrix::new(m).unwrap()).unwrap();
        let rhs = s * pfaffian(&a).unwrap();
        prop_assume!(rhs.norm() > 1e-10);
        prop_assert!(rel(lhs, rhs) < 1e-9);
    }

    #[test]
    fn pairing_is_antisymmetric_and_rotation_invariant(v in vector(), w in vector(), t in 0.0..6.3f64) {
        prop_assert!((bilinear_symplectic(&v, &w) + bilinear_symplectic(&w, &v)).norm() < 1e-14);
        let (vr, wr) = (v.rotated(t), w.rotated(t));
        prop_assert!((bilinear_symplectic(&vr, &wr) - bilinear_symplectic(&v, &w)).norm() < 1e-12);
        prop_assert!((inner(&vr, &wr) - inner(&v, &w)).norm() < 1e-12);
    }

    #[test]
    fn kernel1_is_antisymmetric(v in vector(), w in vector(), h in 1usize..5) {
        let ctx = KernelContext::new(2 * h, QuadConfig::default()).unwrap();
        let k = kernel1(&v, &w, &ctx) + kernel1(&w, &v, &ctx);
        prop_assert!(k.norm() <= 1e-12 * (1.0 + kernel1(&v, &w, &ctx).norm()));
    }

    #[test]
    fn xi1_is_symmetric_and_homogeneous(v in vector(), w in vector(), s in complex(), n in 2usize..9) {
        let x = xi1(v.a, v.b, w.a, w.b, n);
        prop_assert!(rel(xi1(w.a, w.b, v.a, v.b, n), x) < 1e-12 || x.norm() < 1e-12);
        let scaled = xi1(s * v.a, s * v.b, w.a, w.b, n);
        let expected = s.powi(n as i32 - 2) * x;
        prop_assert!((scaled - expected).norm() <= 1e-10 * (1.0 + expected.norm()));
    }

    #[test]
    fn berezinian_identity_holds(z in prop::collection::vec(complex(), 1..=3), kh in complex()) {
        let z: Vec<C64> = z.iter().flat_map(|&x| [x, x * 0.5 + 0.3]).collect();
        prop_assert!(berezinian_identity_check(&z, kh).unwrap() < 1e-9);
    }

    #[test]
    fn cauchy_determinant_closed_form(q in prop::collection::vec(0.05..3.1f64, 2), p in prop::collection::vec(0.05..3.1f64, 2)) {
        // k = 2 Cauchy formula: pair(q₀,q₁)·pair(p₁,p₀) / Π pair(q_m,p_n)
        let vq: Vec<Vector2C> = q.iter().map(|&t| Vector2C::direction(t)).collect();
        let vp: Vec<Vector2C> = p.iter().map(|&t| Vector2C::direction(t)).collect();
        let pr = |v: &Vector2C, w: &Vector2C| bilinear_symplectic(v, w);
        prop_assume!(vq.iter().all(|a| vp.iter().all(|b| pr(a, b).norm() > 1e-3)));
        let num = pr(&vq[0], &vq[1]) * pr(&vp[1], &vp[0]);
        let den = pr(&vq[0], &vp[0]) * pr(&vq[0], &vp[1]) * pr(&vq[1], &vp[0]) * pr(&vq[1], &vp[1]);
        let c = cauchy_berezinian(&vq, &vp).unwrap();
        prop_assert!((c - num / den).norm() <= 1e-9 * (1.0 + c.norm()));
    }

    #[test]
    fn field_determinant_has_the_o2_covariance(t in 0.0..6.3f64, p in 0.0..6.3f64, seed in 0u64..1000) {
        // rotating the realization by t is the same as rotating the coefficient vector by −t
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let real = FieldRealization::sample(4, &mut rng).unwrap();
        let field = MatrixField::trig(4).unwrap();
        let v = field.v(p);
        let lhs = det(&real.rotated(t).combine(&v));
        let rhs = det(&real.combine(&v.rotated(-t)));
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
    }
}
