//! Planar geometry for the simulator. Angles are degrees, counter-clockwise
//! from +x.

use super::{Bounds, WorldObject};

pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Signed angle in (-180, 180].
pub fn signed_angle(deg: f64) -> f64 {
    let a = normalize_heading(deg);
    if a > 180.0 {
        a - 360.0
    } else {
        a
    }
}

pub fn unit(deg: f64) -> (f64, f64) {
    let r = deg.to_radians();
    (r.cos(), r.sin())
}

/// Distance from `(x, y)` to the nearest wall or object surface. Negative
/// when the point lies inside an object.
pub fn clearance(bounds: &Bounds, objects: &[WorldObject], x: f64, y: f64) -> f64 {
    let (x0, x1, y0, y1) = bounds.extent();
    let walls = (x - x0).min(x1 - x).min(y - y0).min(y1 - y);
    objects
        .iter()
        .map(|o| ((x - o.x).powi(2) + (y - o.y).powi(2)).sqrt() - o.radius)
        .fold(walls, f64::min)
}

/// Distance along a ray to the boundary from inside the rectangle.
fn ray_to_walls(bounds: &Bounds, x: f64, y: f64, dx: f64, dy: f64) -> f64 {
    let (x0, x1, y0, y1) = bounds.extent();
    let mut best = f64::INFINITY;
    if dx > 1e-12 {
        best = best.min((x1 - x) / dx);
    } else if dx < -1e-12 {
        best = best.min((x0 - x) / dx);
    }
    if dy > 1e-12 {
        best = best.min((y1 - y) / dy);
    } else if dy < -1e-12 {
        best = best.min((y0 - y) / dy);
    }
    best.max(0.0)
}

/// Smallest t >= 0 with |p + t·d - c| = r, for unit d. Zero when p is inside
/// the circle.
fn ray_to_circle(x: f64, y: f64, dx: f64, dy: f64, o: &WorldObject) -> Option<f64> {
    let fx = x - o.x;
    let fy = y - o.y;
    let b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - o.radius * o.radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    (t >= 0.0).then_some(t)
}

pub fn ray_cast(bounds: &Bounds, objects: &[WorldObject], x: f64, y: f64, heading: f64, cap: f64) -> f64 {
    let (dx, dy) = unit(heading);
    objects
        .iter()
        .filter_map(|o| ray_to_circle(x, y, dx, dy, o))
        .fold(ray_to_walls(bounds, x, y, dx, dy), f64::min)
        .min(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spl::ObjectLabel;

    fn room() -> Bounds {
        Bounds { w: 10.0, h: 10.0 }
    }

    #[test]
    fn angles() {
        assert_eq!(normalize_heading(-30.0), 330.0);
        assert_eq!(normalize_heading(720.0), 0.0);
        assert_eq!(signed_angle(270.0), -90.0);
        assert_eq!(signed_angle(180.0), 180.0);
        assert_eq!(signed_angle(-180.0), 180.0);
    }

    #[test]
    fn rays_hit_walls() {
        for heading in [0.0, 90.0, 180.0, 270.0] {
            let d = ray_cast(&room(), &[], 0.0, 0.0, heading, 10.0);
            assert!((d - 5.0).abs() < 1e-9, "{heading}: {d}");
        }
        let diagonal = ray_cast(&room(), &[], 0.0, 0.0, 45.0, 10.0);
        assert!((diagonal - 5.0 * 2f64.sqrt()).abs() < 1e-9);
        let capped = ray_cast(&Bounds { w: 40.0, h: 40.0 }, &[], 0.0, 0.0, 0.0, 10.0);
        assert_eq!(capped, 10.0);
    }

    #[test]
    fn rays_hit_circles() {
        let chair = WorldObject {
            label: ObjectLabel::new("chair"),
            x: 2.0,
            y: 0.0,
            radius: 0.5,
        };
        let d = ray_cast(&room(), std::slice::from_ref(&chair), 0.0, 0.0, 0.0, 10.0);
        assert!((d - 1.5).abs() < 1e-9);
        let miss = ray_cast(&room(), std::slice::from_ref(&chair), 0.0, 0.0, 90.0, 10.0);
        assert!((miss - 5.0).abs() < 1e-9);
        let behind = ray_cast(&room(), std::slice::from_ref(&chair), 0.0, 0.0, 180.0, 10.0);
        assert!((behind - 5.0).abs() < 1e-9);
        assert_eq!(clearance(&room(), std::slice::from_ref(&chair), 0.0, 0.0), 1.5);
    }
}
