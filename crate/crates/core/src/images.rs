//! Image-charge construction for a point charge above a grounded plane.
//!
//! The charge `q` sits at `(0, 0, d)` above the conductor `z = 0`. The
//! half-space Green function adds to the free-space fundamental solution the
//! field of a mirrored unit source of opposite sign, so that it vanishes on the
//! plane; the potential of the charge is `-q G`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageProblem {
    charge: f64,
    height: f64,
}

impl ImageProblem {
    pub fn new(charge: f64, height: f64) -> Result<Self> {
        if !charge.is_finite() {
            return Err(Error::InvalidInput(format!("charge must be finite, got {charge}")));
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::InvalidInput(format!("height must be > 0, got {height}")));
        }
        Ok(Self { charge, height })
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn source(&self) -> Point3 {
        [0.0, 0.0, self.height]
    }

    /// Position of the image charge `-q`.
    pub fn image(&self) -> Point3 {
        [0.0, 0.0, -self.height]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenEval {
    pub fundamental: f64,
    pub harmonic_correction: f64,
    pub green: f64,
}

fn distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

fn mirrored(p: &Point3) -> Point3 {
    [p[0], p[1], -p[2]]
}

/// `-1 / (4 pi |x - source|)`, the fundamental solution of the 3-D Laplacian.
pub fn fundamental_solution_3d(x: &Point3, source: &Point3) -> Result<f64> {
    let r = distance(x, source);
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(-1.0 / (4.0 * PI * r))
}

/// Dirichlet Green function of the half-space `z > 0`. The evaluation point
/// may lie on the plane itself, where the result is exactly zero.
pub fn green_halfspace(x: &Point3, source: &Point3) -> Result<GreenEval> {
    if !(x[2] >= 0.0) {
        return Err(Error::OutOfDomain(format!("evaluation point z = {} < 0", x[2])));
    }
    if !(source[2] > 0.0) {
        return Err(Error::OutOfDomain(format!("source z = {} must be > 0", source[2])));
    }
    let fundamental = fundamental_solution_3d(x, source)?;
    let harmonic_correction = 1.0 / (4.0 * PI * distance(x, &mirrored(source)));
    Ok(GreenEval { fundamental, harmonic_correction, green: fundamental + harmonic_correction })
}

/// Direct two-charge sum `(q / 4 pi) (1/r_charge - 1/r_image)`.
pub fn potential_charge_above_plane(problem: &ImageProblem, x: &Point3) -> Result<f64> {
    let r1 = distance(x, &problem.source());
    if r1 == 0.0 {
        return Err(Error::SingularPoint);
    }
    let r2 = distance(x, &problem.image());
    Ok(problem.charge / (4.0 * PI) * (1.0 / r1 - 1.0 / r2))
}

/// The same potential obtained through the Green function, `-q G(x, source)`.
pub fn potential_via_green(problem: &ImageProblem, x: &Point3) -> Result<f64> {
    Ok(-problem.charge * green_halfspace(x, &problem.source())?.green)
}

/// Uniform `grid_points x grid_points` samples of the plane `z = 0` covering
/// `[-extent, extent]^2`.
pub fn plane_grid(extent: f64, grid_points: usize) -> Vec<Point3> {
    let n = grid_points.max(1);
    let coord = |i: usize| {
        if n == 1 {
            0.0
        } else {
            extent * (2.0 * i as f64 - (n - 1) as f64) / (n - 1) as f64
        }
    };
    (0..n * n).map(|k| [coord(k / n), coord(k % n), 0.0]).collect()
}

/// Largest `|V|` over the plane grid; the construction makes it vanish.
pub fn boundary_residual(problem: &ImageProblem, extent: f64, grid_points: usize) -> f64 {
    boundary_residual_with(problem, extent, grid_points, Execution::default())
}

pub fn boundary_residual_with(
    problem: &ImageProblem,
    extent: f64,
    grid_points: usize,
    execution: Execution,
) -> f64 {
    let points = plane_grid(extent, grid_points);
    map_ordered(execution, &points, |p| {
        // the charge is strictly above the plane, so no point can be singular
        potential_charge_above_plane(problem, p).map(f64::abs).unwrap_or(f64::NAN)
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// Seven-point finite-difference Laplacian of the potential with spacing `h`.
pub fn fd_laplacian(problem: &ImageProblem, x: &Point3, h: f64) -> Result<f64> {
    let centre = potential_charge_above_plane(problem, x)?;
    let mut sum = -6.0 * centre;
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut p = *x;
            p[axis] += sign * h;
            sum += potential_charge_above_plane(problem, &p)?;
        }
    }
    Ok(sum / (h * h))
}
