use nalgebra::Matrix3;

/// Conductor configuration of the power converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegConfig {
    /// Three phase legs plus a neutral leg: all sequence components pass.
    FourLeg,
    /// Three phase legs only: homopolar components are blocked both ways.
    ThreeLeg,
}

/// Coupling matrix between the four-wire grid frame and the converter
/// frame. Four-leg converters couple through the identity; three-leg
/// converters through the homopolar-blocking projector `I - (1/3) 1 1^T`,
/// which is idempotent and annihilates `(1, 1, 1)^T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCoupling {
    pub legs: LegConfig,
    pub matrix: Matrix3<f64>,
}

impl FrameCoupling {
    pub fn new(legs: LegConfig) -> Self {
        let matrix = match legs {
            LegConfig::FourLeg => Matrix3::identity(),
            LegConfig::ThreeLeg => Matrix3::identity() - Matrix3::from_element(1.0 / 3.0),
        };
        Self { legs, matrix }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn four_leg_is_identity() {
        let f = FrameCoupling::new(LegConfig::FourLeg);
        assert_eq!(f.matrix, Matrix3::identity());
    }

    #[test]
    fn three_leg_blocks_homopolar_and_is_idempotent() {
        let f = FrameCoupling::new(LegConfig::ThreeLeg);
        let ones = Vector3::new(1.0, 1.0, 1.0);
        assert!((f.matrix * ones).norm() < 1e-15);
        assert!((f.matrix * f.matrix - f.matrix).norm() < 1e-15);
        // Non-homopolar vectors pass unchanged.
        let v = Vector3::new(1.0, -0.25, -0.75);
        assert!((f.matrix * v - v).norm() < 1e-15);
    }

    #[test]
    fn scalar_identity_gains_commute_with_coupling() {
        let f = FrameCoupling::new(LegConfig::ThreeLeg);
        let k = Matrix3::identity() * 4.2;
        assert!((f.matrix * k - k * f.matrix).norm() < 1e-15);
    }
}
