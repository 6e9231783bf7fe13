//! Workspace, regions of interest and sphere-decomposed bodies.
//!
//! Every body in the system (agent links, objects) is approximated by a union
//! of spheres. Containment and clearance predicates operate on the world-frame
//! sphere lists that [`crate::dynamics::AgentModel`] and
//! [`crate::dynamics::ObjectModel`] produce.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Default Def.-style containment margin (m).
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Signed surface distance; negative when the spheres overlap.
    pub fn clearance(&self, other: &Sphere) -> f64 {
        (self.center - other.center).norm() - self.radius - other.radius
    }
}

/// A sphere expressed in a body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSphere {
    pub offset: Vec3,
    pub radius: f64,
}

impl LocalSphere {
    pub fn new(offset: Vec3, radius: f64) -> Self {
        Self { offset, radius }
    }
}

/// Collision volume of one rigid body as a union of spheres.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BodyGeometry {
    pub spheres: Vec<LocalSphere>,
}

impl BodyGeometry {
    pub fn new(spheres: Vec<LocalSphere>) -> Result<Self> {
        if let Some(bad) = spheres.iter().find(|s| !(s.radius > 0.0)) {
            return Err(Error::InvalidInput(format!("sphere radius must be positive, got {}", bad.radius)));
        }
        Ok(Self { spheres })
    }

    /// Single sphere enclosing an axis-aligned box centred at the body origin.
    pub fn enclosing_box(extent: Vec3) -> Self {
        Self { spheres: vec![LocalSphere::new(Vec3::zeros(), 0.5 * extent.norm())] }
    }

    pub fn transformed(&self, origin: &Vec3, rotation: &Rotation3<f64>) -> Vec<Sphere> {
        self.spheres.iter().map(|s| Sphere::new(origin + rotation * s.offset, s.radius)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    pub name: String,
    pub center: Vec3,
    pub radius: f64,
}

impl Region {
    pub fn ball(&self) -> Sphere {
        Sphere::new(self.center, self.radius)
    }
}

/// Why a workspace failed validation.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkspaceViolation {
    NonPositiveRadius { region: String },
    TooCloseToBoundary { region: String, distance: f64, limit: f64 },
    TooCloseToRegion { first: String, second: String, distance: f64, limit: f64 },
}

impl std::fmt::Display for WorkspaceViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorkspaceViolation::NonPositiveRadius { region } => {
                write!(f, "region {region}: radius must be positive")
            }
            WorkspaceViolation::TooCloseToBoundary { region, distance, limit } => write!(
                f,
                "region {region}: centre is {distance:.3} m from the workspace centre, must be < {limit:.3} m"
            ),
            WorkspaceViolation::TooCloseToRegion { first, second, distance, limit } => {
                write!(f, "regions {first} and {second}: centres {distance:.3} m apart, must be > {limit:.3} m")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub center: Vec3,
    pub radius: f64,
    pub regions: Vec<Region>,
    /// region centres must lie within `radius - boundary_factor * r_k` of the centre
    pub boundary_factor: f64,
}

pub const DEFAULT_BOUNDARY_FACTOR: f64 = 3.0;

impl Workspace {
    /// Builds a workspace and rejects region layouts that violate the
    /// boundary margin or the pairwise separation.
    pub fn new(center: Vec3, radius: f64, regions: Vec<Region>) -> Result<Self> {
        Self::with_boundary_factor(center, radius, regions, DEFAULT_BOUNDARY_FACTOR)
    }

    pub fn with_boundary_factor(center: Vec3, radius: f64, regions: Vec<Region>, boundary_factor: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput("workspace radius must be positive".into()));
        }
        if !(boundary_factor >= 1.0) {
            return Err(Error::InvalidInput("boundary factor must be at least 1".into()));
        }
        let ws = Self { center, radius, regions, boundary_factor };
        let violations = ws.violations();
        if let Some(v) = violations.first() {
            return Err(Error::InvalidInput(v.to_string()));
        }
        Ok(ws)
    }

    pub fn violations(&self) -> Vec<WorkspaceViolation> {
        let mut out = Vec::new();
        let max_r = self.regions.iter().map(|r| r.radius).fold(0.0, f64::max);
        for r in &self.regions {
            if !(r.radius > 0.0) {
                out.push(WorkspaceViolation::NonPositiveRadius { region: r.name.clone() });
                continue;
            }
            let distance = (r.center - self.center).norm();
            let limit = self.radius - self.boundary_factor * r.radius;
            if distance >= limit {
                out.push(WorkspaceViolation::TooCloseToBoundary { region: r.name.clone(), distance, limit });
            }
        }
        for (i, a) in self.regions.iter().enumerate() {
            for b in &self.regions[i + 1..] {
                let distance = (a.center - b.center).norm();
                let limit = 4.0 * max_r;
                if distance <= limit {
                    out.push(WorkspaceViolation::TooCloseToRegion {
                        first: a.name.clone(),
                        second: b.name.clone(),
                        distance,
                        limit,
                    });
                }
            }
        }
        out
    }

    pub fn region(&self, id: usize) -> Result<&Region> {
        self.regions.get(id).ok_or_else(|| Error::InvalidInput(format!("no region with index {id}")))
    }

    pub fn region_by_name(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }
}

/// Position plus Z-Y-X intrinsic Euler angles `[yaw, pitch, roll]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Vec3,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Vec3) -> Self {
        Self { position, orientation: orientation.map(wrap_angle) }
    }

    pub fn from_position(position: Vec3) -> Self {
        Self::new(position, Vec3::zeros())
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        let [yaw, pitch, roll] = [self.orientation.x, self.orientation.y, self.orientation.z];
        Rotation3::from_euler_angles(roll, pitch, yaw)
    }

    pub fn from_rotation(position: Vec3, rotation: &Rotation3<f64>) -> Self {
        let (roll, pitch, yaw) = rotation.euler_angles();
        Self::new(position, Vec3::new(yaw, pitch, roll))
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.position.x, self.position.y, self.position.z, self.orientation.x, self.orientation.y, self.orientation.z]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 6 {
            return Err(Error::InvalidInput(format!("pose needs 6 components, got {}", v.len())));
        }
        Ok(Self::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5])))
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    // rem_euclid maps -pi to pi, which is already in range
    w
}

/// Anything with a sphere decomposition parameterised by a flat configuration.
pub trait SphereBody {
    fn config_dim(&self) -> usize;
    fn spheres_at(&self, config: &[f64]) -> Result<Vec<Sphere>>;
}

/// World-frame collision spheres of `body` at `config`.
pub fn world_spheres<B: SphereBody + ?Sized>(body: &B, config: &[f64]) -> Result<Vec<Sphere>> {
    if config.len() != body.config_dim() {
        return Err(Error::InvalidInput(format!(
            "configuration has {} entries, body expects {}",
            config.len(),
            body.config_dim()
        )));
    }
    body.spheres_at(config)
}

/// True iff every sphere lies within `r_k - eps` of the region centre.
pub fn in_region(spheres: &[Sphere], region: &Region, eps: f64) -> bool {
    spheres.iter().all(|s| (s.center - region.center).norm() + s.radius <= region.radius - eps)
}

/// Minimum surface distance over all cross pairs; negative means penetration.
pub fn min_clearance(a: &[Sphere], b: &[Sphere]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("clearance needs non-empty sphere lists".into()));
    }
    Ok(a.iter().flat_map(|sa| b.iter().map(move |sb| sa.clearance(sb))).fold(f64::INFINITY, f64::min))
}

/// True iff no sphere intersects the ball (surface or interior).
pub fn outside_ball(spheres: &[Sphere], ball: &Sphere) -> bool {
    spheres.iter().all(|s| s.clearance(ball) > 0.0)
}

/// Radius of the smallest ball centred at the sphere centroid containing all spheres.
pub fn bounding_radius(spheres: &[Sphere]) -> f64 {
    if spheres.is_empty() {
        return 0.0;
    }
    let centroid = spheres.iter().map(|s| s.center).sum::<Vec3>() / spheres.len() as f64;
    spheres.iter().map(|s| (s.center - centroid).norm() + s.radius).fold(0.0, f64::max)
}
