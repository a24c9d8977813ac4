//! Ready-made example systems used throughout the test suite and the CLI.
//!
//! All systems are scalar and written relative to the origin fixed point;
//! the stored nonlinearity is the 3-jet of R at 0, which is what every
//! downstream computation (and the simulator) consumes.

use crate::model::{Atom, DDESystem, DelayKernel, Density, NonlinearityJet, SymTensor3};
use nalgebra::DMatrix;

/// Cushing-type distributed-delay equation
/// ẋ(t) = b ∫₀¹ x(t−s) ds + a(x(t) − sin x(t)).
/// The nonlinearity has global Lipschitz constant 2a and cubic jet a.
pub fn cushing(b: f64, a: f64) -> DDESystem {
    let kernel = DelayKernel::new(
        1,
        1.0,
        vec![],
        vec![Density { a: 0.0, b: 1.0, coeffs: vec![DMatrix::from_element(1, 1, b)] }],
    )
    .unwrap();
    let jet = if a == 0.0 {
        NonlinearityJet::zero(1)
    } else {
        NonlinearityJet {
            n: 1,
            lags: vec![0.0],
            quadratic: None,
            cubic: Some(SymTensor3::from_dense(1, 1, vec![a]).unwrap()),
            lip_global: Some(2.0 * a.abs()),
            lip_ball_coeffs: None,
        }
    };
    DDESystem::new(kernel, jet, "cushing").unwrap()
}

/// Globally Lipschitz delayed feedback ẋ(t) = −x(t−h) + x(t) − sin x(t):
/// Lip(R) = 2, cubic jet +1. The small-delay and F-form certification
/// examples use this system.
pub fn delayed_sine(h: f64) -> DDESystem {
    let kernel = DelayKernel::new(
        1,
        h,
        vec![Atom { tau: h, weight: DMatrix::from_element(1, 1, -1.0) }],
        vec![],
    )
    .unwrap();
    let jet = NonlinearityJet {
        n: 1,
        lags: vec![0.0],
        quadratic: None,
        cubic: Some(SymTensor3::from_dense(1, 1, vec![1.0]).unwrap()),
        lip_global: Some(2.0),
        lip_ball_coeffs: None,
    };
    DDESystem::new(kernel, jet, "delayed-sine").unwrap()
}

/// Cubic delayed feedback ẋ(t) = −x(t−h) − x(t)³: the Hopf / limit-cycle
/// example. Only locally Lipschitz (Lip_ρ(R) = 3ρ²), so certification goes
/// through the cutoff route.
pub fn delayed_cubic(h: f64) -> DDESystem {
    let kernel = DelayKernel::new(
        1,
        h,
        vec![Atom { tau: h, weight: DMatrix::from_element(1, 1, -1.0) }],
        vec![],
    )
    .unwrap();
    let jet = NonlinearityJet {
        n: 1,
        lags: vec![0.0],
        quadratic: None,
        cubic: Some(SymTensor3::from_dense(1, 1, vec![-6.0]).unwrap()),
        lip_global: None,
        lip_ball_coeffs: Some(vec![0.0, 3.0]),
    };
    DDESystem::new(kernel, jet, "delayed-cubic").unwrap()
}
