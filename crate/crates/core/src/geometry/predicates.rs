//! Invariant predicates that survive rigid motions.

use super::vector::Vec2;
use super::GeometryError;

/// Absolute tolerance for exact synthetic geometry.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// True iff every point lies within `tolerance` of the total-least-squares line.
pub fn collinear(points: &[Vec2], tolerance: f64) -> Result<bool, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::Precondition("collinear needs at least two points"));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(GeometryError::Precondition("tolerance must be positive"));
    }
    let n = points.len() as f64;
    let c = points.iter().fold(Vec2::ZERO, |acc, &p| acc + p) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    if sxx + syy == 0.0 {
        return Ok(true);
    }
    let dir = Vec2::from_angle(0.5 * (2.0 * sxy).atan2(sxx - syy));
    let worst = points
        .iter()
        .map(|&p| dir.cross(p - c).abs())
        .fold(0.0f64, f64::max);
    Ok(worst <= tolerance)
}

/// Unsigned angle in `[0, pi/2]` between two lines (directions taken mod pi).
pub fn line_angle(a: (Vec2, Vec2), b: (Vec2, Vec2)) -> Result<f64, GeometryError> {
    let da = a.1 - a.0;
    let db = b.1 - b.0;
    if da.norm() < EXACT_TOLERANCE || db.norm() < EXACT_TOLERANCE {
        return Err(GeometryError::Precondition("zero-length segment"));
    }
    let angle = da.cross(db).abs().atan2(da.dot(db));
    Ok(angle.min(std::f64::consts::PI - angle))
}

pub fn parallel(a: (Vec2, Vec2), b: (Vec2, Vec2), angular_tolerance: f64) -> Result<bool, GeometryError> {
    Ok(line_angle(a, b)? <= angular_tolerance)
}
