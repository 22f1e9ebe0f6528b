//! Deterministic synthetic street scenes with labelled scan pairs.
//!
//! A world of simple primitives (rolling ground, buildings, walls, trees,
//! poles, signs, cars, trucks) is sampled twice, once per scan. Each scan
//! keeps the points within sensor range that face the sensor, drops a
//! fraction of them, adds gaussian noise and is expressed in its own sensor
//! frame.

use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{KeypointSet, LabelId, LabeledPointCloud, Point3, RigidTransform};
use crate::semantic::LabelAlphabet;

pub const GROUND: LabelId = 0;
pub const BUILDING: LabelId = 1;
pub const VEGETATION: LabelId = 2;
pub const CAR: LabelId = 3;
pub const TRUCK: LabelId = 4;
pub const POLE: LabelId = 5;
pub const TRUNK: LabelId = 6;
pub const TRAFFIC_SIGN: LabelId = 7;

const TERRAIN_WAVES: usize = 6;

/// Height of the sensor above its pose origin, meters.
pub const SENSOR_HEIGHT: f64 = 1.7;

/// Scene layout and scanning parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    /// Side of the square world, meters.
    pub extent: f64,
    pub poles: usize,
    pub signs: usize,
    pub trees: usize,
    pub cars: usize,
    pub trucks: usize,
    pub buildings: usize,
    pub walls: usize,
    /// Objects per category that share one template shape and heading.
    pub repeated: usize,
    /// Surface sampling density, points per square meter.
    pub density: f64,
    /// Gaussian sensor noise per coordinate, meters.
    pub noise_sigma: f64,
    /// Distance between the two scan positions, meters.
    pub overlap_offset: f64,
    /// Fraction of points each scan drops independently.
    pub dropout: f64,
    /// Horizontal range of each scan, meters.
    pub sensor_range: f64,
    /// Drop surface samples that face away from the sensor.
    pub self_occlusion: bool,
    /// RMS height of the rolling ground, meters.
    pub terrain_relief: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            extent: 50.0,
            poles: 10,
            signs: 4,
            trees: 8,
            cars: 8,
            trucks: 2,
            buildings: 3,
            walls: 2,
            repeated: 0,
            density: 20.0,
            noise_sigma: 0.02,
            overlap_offset: 5.0,
            dropout: 0.1,
            sensor_range: 25.0,
            self_occlusion: true,
            terrain_relief: 0.1,
        }
    }
}

impl SceneSpec {
    /// High-overlap pair.
    pub fn easy(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Scene whose landmark objects come in identical copies.
    pub fn repeated_structure(seed: u64) -> Self {
        Self {
            seed,
            poles: 12,
            trees: 10,
            cars: 10,
            repeated: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("extent", self.extent)?;
        positive("density", self.density)?;
        positive("sensor_range", self.sensor_range)?;
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise sigma must be non-negative"));
        }
        if !(self.overlap_offset >= 0.0 && self.overlap_offset.is_finite()) {
            return Err(Error::invalid("overlap offset must be non-negative"));
        }
        if !(self.terrain_relief >= 0.0 && self.terrain_relief.is_finite()) {
            return Err(Error::invalid("terrain relief must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }
}

/// A labelled surface in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// Heightfield over `[x0, x1] × [y0, y1]`: `z` plus a sum of
    /// `a·sin(kx·x + ky·y + phase)` waves given as `[a, kx, ky, phase]`.
    Ground { x0: f64, x1: f64, y0: f64, y1: f64, z: f64, waves: Vec<[f64; 4]> },
    /// Lateral surface of a vertical cylinder.
    Cylinder { cx: f64, cy: f64, radius: f64, z0: f64, z1: f64 },
    /// Sphere surface.
    Sphere { center: [f64; 3], radius: f64 },
    /// Box standing on `z0`, rotated by `yaw` about its vertical axis; the
    /// bottom face is open.
    Box { cx: f64, cy: f64, yaw: f64, length: f64, width: f64, z0: f64, height: f64 },
    /// Vertical rectangle centred at `(cx, cy)`, spanning `length` along
    /// heading `yaw`, from `z0` to `z1`.
    Panel { cx: f64, cy: f64, yaw: f64, length: f64, z0: f64, z1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub label: LabelId,
    pub shape: Shape,
}

/// A rectangle `origin + s·u + t·v`, `s ∈ [0, a]`, `t ∈ [0, b]`, `u ⊥ v` unit.
struct Rect {
    origin: Vector3<f64>,
    u: Vector3<f64>,
    v: Vector3<f64>,
    a: f64,
    b: f64,
}

impl Rect {
    fn area(&self) -> f64 {
        self.a * self.b
    }

    fn sample(&self, rng: &mut impl Rng) -> Point3 {
        Point3::from(self.origin + self.u * rng.random_range(0.0..=self.a) + self.v * rng.random_range(0.0..=self.b))
    }

    fn distance(&self, p: &Point3) -> f64 {
        let d = p.coords - self.origin;
        let s = d.dot(&self.u).clamp(0.0, self.a);
        let t = d.dot(&self.v).clamp(0.0, self.b);
        (d - self.u * s - self.v * t).norm()
    }
}

fn box_faces(cx: f64, cy: f64, yaw: f64, length: f64, width: f64, z0: f64, height: f64) -> Vec<Rect> {
    let ex = Vector3::new(yaw.cos(), yaw.sin(), 0.0);
    let ey = Vector3::new(-yaw.sin(), yaw.cos(), 0.0);
    let ez = Vector3::z();
    let c = Vector3::new(cx, cy, z0);
    let corner = c - ex * (length / 2.0) - ey * (width / 2.0);
    vec![
        Rect { origin: corner, u: ex, v: ez, a: length, b: height },
        Rect { origin: corner + ey * width, u: ex, v: ez, a: length, b: height },
        Rect { origin: corner, u: ey, v: ez, a: width, b: height },
        Rect { origin: corner + ex * length, u: ey, v: ez, a: width, b: height },
        Rect { origin: corner + ez * height, u: ex, v: ey, a: length, b: width },
    ]
}

fn panel_rect(cx: f64, cy: f64, yaw: f64, length: f64, z0: f64, z1: f64) -> Rect {
    let ex = Vector3::new(yaw.cos(), yaw.sin(), 0.0);
    Rect {
        origin: Vector3::new(cx, cy, z0) - ex * (length / 2.0),
        u: ex,
        v: Vector3::z(),
        a: length,
        b: z1 - z0,
    }
}

impl Primitive {
    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Ground { x0, x1, y0, y1, .. } => (x1 - x0) * (y1 - y0),
            Shape::Cylinder { radius, z0, z1, .. } => std::f64::consts::TAU * radius * (z1 - z0),
            Shape::Sphere { radius, .. } => 2.0 * std::f64::consts::TAU * radius * radius,
            Shape::Box { cx, cy, yaw, length, width, z0, height } => {
                box_faces(*cx, *cy, *yaw, *length, *width, *z0, *height).iter().map(Rect::area).sum()
            }
            Shape::Panel { length, z0, z1, .. } => length * (z1 - z0),
        }
    }

    /// A point drawn uniformly over the surface.
    pub fn sample(&self, rng: &mut impl Rng) -> Point3 {
        match &self.shape {
            Shape::Ground { x0, x1, y0, y1, z, waves } => {
                let (x, y) = (rng.random_range(*x0..=*x1), rng.random_range(*y0..=*y1));
                Point3::new(x, y, terrain_height(*z, waves, x, y))
            }
            Shape::Cylinder { cx, cy, radius, z0, z1 } => {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                Point3::new(cx + radius * a.cos(), cy + radius * a.sin(), rng.random_range(*z0..=*z1))
            }
            Shape::Sphere { center, radius } => {
                let z: f64 = rng.random_range(-1.0..=1.0);
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).max(0.0).sqrt();
                Point3::new(
                    center[0] + radius * s * a.cos(),
                    center[1] + radius * s * a.sin(),
                    center[2] + radius * z,
                )
            }
            Shape::Box { cx, cy, yaw, length, width, z0, height } => {
                let faces = box_faces(*cx, *cy, *yaw, *length, *width, *z0, *height);
                let total: f64 = faces.iter().map(Rect::area).sum();
                let mut pick = rng.random_range(0.0..total);
                for f in &faces {
                    if pick < f.area() {
                        return f.sample(rng);
                    }
                    pick -= f.area();
                }
                faces[faces.len() - 1].sample(rng)
            }
            Shape::Panel { cx, cy, yaw, length, z0, z1 } => panel_rect(*cx, *cy, *yaw, *length, *z0, *z1).sample(rng),
        }
    }

    /// Outward unit normal at a surface point, `None` for two-sided shapes.
    pub fn outward_normal(&self, p: &Point3) -> Option<Vector3<f64>> {
        match &self.shape {
            Shape::Ground { waves, .. } => {
                let (gx, gy) = waves.iter().fold((0.0, 0.0), |(gx, gy), [a, kx, ky, ph]| {
                    let c = a * (kx * p.x + ky * p.y + ph).cos();
                    (gx + c * kx, gy + c * ky)
                });
                Some(Vector3::new(-gx, -gy, 1.0).normalize())
            }
            Shape::Cylinder { cx, cy, .. } => Some(Vector3::new(p.x - cx, p.y - cy, 0.0).normalize()),
            Shape::Sphere { center, .. } => Some((p - Point3::new(center[0], center[1], center[2])).normalize()),
            Shape::Box { cx, cy, yaw, length, width, z0, height } => {
                let faces = box_faces(*cx, *cy, *yaw, *length, *width, *z0, *height);
                let face = faces
                    .iter()
                    .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
                    .expect("box has faces");
                let n = face.u.cross(&face.v);
                let mid = Vector3::new(*cx, *cy, z0 + height / 2.0);
                Some(if n.dot(&(p.coords - mid)) < 0.0 { -n } else { n })
            }
            Shape::Panel { .. } => None,
        }
    }

    /// Euclidean distance from `p` to the surface.
    pub fn surface_distance(&self, p: &Point3) -> f64 {
        match &self.shape {
            // Vertical offset to the heightfield, exact for flat ground.
            Shape::Ground { x0, x1, y0, y1, z, waves } => {
                let (x, y) = (p.x.clamp(*x0, *x1), p.y.clamp(*y0, *y1));
                let h = terrain_height(*z, waves, x, y);
                ((p.x - x).powi(2) + (p.y - y).powi(2) + (p.z - h).powi(2)).sqrt()
            }
            Shape::Cylinder { cx, cy, radius, z0, z1 } => {
                let radial = ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt() - radius;
                let vertical = (z0 - p.z).max(p.z - z1).max(0.0);
                (radial * radial + vertical * vertical).sqrt()
            }
            Shape::Sphere { center, radius } => {
                ((p - Point3::new(center[0], center[1], center[2])).norm() - radius).abs()
            }
            Shape::Box { cx, cy, yaw, length, width, z0, height } => box_faces(*cx, *cy, *yaw, *length, *width, *z0, *height)
                .iter()
                .map(|f| f.distance(p))
                .fold(f64::INFINITY, f64::min),
            Shape::Panel { cx, cy, yaw, length, z0, z1 } => panel_rect(*cx, *cy, *yaw, *length, *z0, *z1).distance(p),
        }
    }
}

/// Two scans of one world plus the exact transform between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePair {
    pub src: LabeledPointCloud,
    pub dst: LabeledPointCloud,
    /// Maps target-frame points into the source frame.
    pub t_gt: RigidTransform,
    /// Sensor-to-world pose of the source scan.
    pub src_pose: RigidTransform,
    /// Sensor-to-world pose of the target scan.
    pub dst_pose: RigidTransform,
    pub world: Vec<Primitive>,
    /// Index into `world` of the primitive behind each source point.
    pub src_origin: Vec<usize>,
    /// Index into `world` of the primitive behind each target point.
    pub dst_origin: Vec<usize>,
    pub spec: SceneSpec,
}

/// Object footprints already placed, as `(x, y, radius)`.
struct Layout {
    taken: Vec<(f64, f64, f64)>,
    half: f64,
}

impl Layout {
    fn place(&mut self, rng: &mut impl Rng, radius: f64) -> Option<(f64, f64)> {
        let lim = (self.half - radius).max(0.0);
        for _ in 0..200 {
            let x = rng.random_range(-lim..=lim);
            let y = rng.random_range(-lim..=lim);
            if self
                .taken
                .iter()
                .all(|&(tx, ty, tr)| ((tx - x).powi(2) + (ty - y).powi(2)).sqrt() > tr + radius + 0.5)
            {
                self.taken.push((x, y, radius));
                return Some((x, y));
            }
        }
        None
    }
}

fn terrain_height(z: f64, waves: &[[f64; 4]], x: f64, y: f64) -> f64 {
    z + waves.iter().map(|[a, kx, ky, ph]| a * (kx * x + ky * y + ph).sin()).sum::<f64>()
}

fn build_world(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Vec<Primitive> {
    let half = spec.extent / 2.0;
    let tau = std::f64::consts::TAU;
    let waves: Vec<[f64; 4]> = if spec.terrain_relief > 0.0 {
        (0..TERRAIN_WAVES)
            .map(|_| {
                let dir: f64 = rng.random_range(0.0..tau);
                let k = tau / rng.random_range(1.5..6.0);
                let a = spec.terrain_relief / (TERRAIN_WAVES as f64).sqrt();
                [a, k * dir.cos(), k * dir.sin(), rng.random_range(0.0..tau)]
            })
            .collect()
    } else {
        Vec::new()
    };
    let base = |x: f64, y: f64| terrain_height(0.0, &waves, x, y);
    let mut world = vec![Primitive {
        label: GROUND,
        shape: Shape::Ground { x0: -half, x1: half, y0: -half, y1: half, z: 0.0, waves: waves.clone() },
    }];
    let mut layout = Layout { taken: Vec::new(), half };
    let template = |i: usize| i < spec.repeated;

    for _ in 0..spec.buildings {
        let (l, w, h): (f64, f64, f64) = (rng.random_range(8.0..15.0), rng.random_range(6.0..12.0), rng.random_range(5.0..12.0));
        let yaw = rng.random_range(0.0..tau);
        if let Some((cx, cy)) = layout.place(rng, (l * l + w * w).sqrt() / 2.0) {
            world.push(Primitive {
                label: BUILDING,
                shape: Shape::Box { cx, cy, yaw, length: l, width: w, z0: base(cx, cy), height: h },
            });
        }
    }
    for _ in 0..spec.walls {
        let (l, h) = (rng.random_range(5.0..15.0), rng.random_range(1.5..3.0));
        let yaw = rng.random_range(0.0..tau);
        if let Some((cx, cy)) = layout.place(rng, l / 2.0) {
            world.push(Primitive {
                label: BUILDING,
                shape: Shape::Panel { cx, cy, yaw, length: l, z0: base(cx, cy), z1: base(cx, cy) + h },
            });
        }
    }
    for i in 0..spec.trucks {
        let (l, w, h, yaw): (f64, f64, f64, f64) = if template(i) {
            (8.5, 2.5, 3.2, 0.0)
        } else {
            (rng.random_range(7.0..10.0), rng.random_range(2.3..2.6), rng.random_range(2.8..3.6), rng.random_range(0.0..tau))
        };
        if let Some((cx, cy)) = layout.place(rng, (l * l + w * w).sqrt() / 2.0) {
            world.push(Primitive {
                label: TRUCK,
                shape: Shape::Box { cx, cy, yaw, length: l, width: w, z0: base(cx, cy) + 0.3, height: h },
            });
        }
    }
    for i in 0..spec.cars {
        let (l, w, h, yaw): (f64, f64, f64, f64) = if template(i) {
            (4.4, 1.8, 1.5, 0.0)
        } else {
            (rng.random_range(3.8..4.9), rng.random_range(1.6..1.95), rng.random_range(1.3..1.7), rng.random_range(0.0..tau))
        };
        if let Some((cx, cy)) = layout.place(rng, (l * l + w * w).sqrt() / 2.0) {
            world.push(Primitive {
                label: CAR,
                shape: Shape::Box { cx, cy, yaw, length: l, width: w, z0: base(cx, cy) + 0.2, height: h },
            });
        }
    }
    for i in 0..spec.trees {
        let (r, h, crown) = if template(i) {
            (0.25, 2.8, 1.8)
        } else {
            (rng.random_range(0.15..0.4), rng.random_range(2.0..3.5), rng.random_range(1.2..2.6))
        };
        if let Some((cx, cy)) = layout.place(rng, crown) {
            world.push(Primitive {
                label: TRUNK,
                shape: Shape::Cylinder { cx, cy, radius: r, z0: base(cx, cy), z1: base(cx, cy) + h },
            });
            world.push(Primitive {
                label: VEGETATION,
                shape: Shape::Sphere { center: [cx, cy, base(cx, cy) + h + crown * 0.8], radius: crown },
            });
        }
    }
    for i in 0..spec.poles {
        let (r, h) = if template(i) {
            (0.1, 5.0)
        } else {
            (rng.random_range(0.07..0.16), rng.random_range(3.0..7.0))
        };
        if let Some((cx, cy)) = layout.place(rng, 0.3) {
            world.push(Primitive {
                label: POLE,
                shape: Shape::Cylinder { cx, cy, radius: r, z0: base(cx, cy), z1: base(cx, cy) + h },
            });
        }
    }
    for i in 0..spec.signs {
        let (h, size, yaw) = if template(i) {
            (2.2, 0.8, 0.0)
        } else {
            (rng.random_range(1.8..2.8), rng.random_range(0.6..1.0), rng.random_range(0.0..tau))
        };
        if let Some((cx, cy)) = layout.place(rng, size / 2.0 + 0.2) {
            world.push(Primitive {
                label: POLE,
                shape: Shape::Cylinder { cx, cy, radius: 0.05, z0: base(cx, cy), z1: base(cx, cy) + h },
            });
            // Panel sits just in front of its post.
            let (ox, oy) = (-yaw.sin() * 0.08, yaw.cos() * 0.08);
            world.push(Primitive {
                label: TRAFFIC_SIGN,
                shape: Shape::Panel { cx: cx + ox, cy: cy + oy, yaw, length: size, z0: base(cx, cy) + h, z1: base(cx, cy) + h + size },
            });
        }
    }
    world
}

struct Scan {
    cloud: LabeledPointCloud,
    origin: Vec<usize>,
}

fn render_scan(world: &[Primitive], pose: &RigidTransform, spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<Scan> {
    let center = pose.translation;
    let eye = center + Vector3::new(0.0, 0.0, SENSOR_HEIGHT);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let to_sensor = pose.inverse();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut origin = Vec::new();
    for (pi, prim) in world.iter().enumerate() {
        let expected = prim.area() * spec.density;
        let count = expected.floor() as usize + usize::from(rng.random::<f64>() < expected.fract());
        for _ in 0..count {
            let p = prim.sample(rng);
            let keep = rng.random::<f64>() >= spec.dropout;
            let offset = if spec.noise_sigma > 0.0 {
                Vector3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng))
            } else {
                Vector3::zeros()
            };
            let in_range = ((p.x - center.x).powi(2) + (p.y - center.y).powi(2)).sqrt() <= spec.sensor_range;
            let facing = !spec.self_occlusion
                || prim.outward_normal(&p).is_none_or(|n| n.dot(&(eye - p.coords)) > 0.0);
            if keep && in_range && facing {
                points.push(to_sensor.apply(&(p + offset)));
                labels.push(prim.label);
                origin.push(pi);
            }
        }
    }
    Ok(Scan {
        cloud: LabeledPointCloud::new(points, labels, LabelAlphabet::outdoor_default())?,
        origin,
    })
}

/// Builds a world from `spec.seed` and renders two scans of it.
pub fn generate_scene_pair(spec: &SceneSpec) -> Result<ScenePair> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let world = build_world(spec, &mut rng);
    let tau = std::f64::consts::TAU;
    let heading: f64 = rng.random_range(0.0..tau);
    let dir = Vector3::new(heading.cos(), heading.sin(), 0.0);
    let src_pose = RigidTransform::from_yaw(rng.random_range(0.0..tau), -dir * (spec.overlap_offset / 2.0));
    let dst_pose = RigidTransform::from_yaw(rng.random_range(0.0..tau), dir * (spec.overlap_offset / 2.0));
    let src = render_scan(&world, &src_pose, spec, &mut rng)?;
    let dst = render_scan(&world, &dst_pose, spec, &mut rng)?;
    if src.cloud.is_empty() || dst.cloud.is_empty() {
        return Err(Error::invalid("scene spec yields an empty scan"));
    }
    Ok(ScenePair {
        t_gt: src_pose.inverse().compose(&dst_pose),
        src: src.cloud,
        dst: dst.cloud,
        src_pose,
        dst_pose,
        world,
        src_origin: src.origin,
        dst_origin: dst.origin,
        spec: spec.clone(),
    })
}

/// `count` distinct point indices drawn uniformly, in ascending order.
pub fn keypoint_sample(cloud: &LabeledPointCloud, count: usize, seed: u64) -> Result<KeypointSet> {
    if count > cloud.len() {
        return Err(Error::invalid(format!(
            "cannot sample {count} keypoints from {} points",
            cloud.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, cloud.len(), count).into_vec();
    idx.sort_unstable();
    KeypointSet::new(idx, cloud.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SceneSpec {
        SceneSpec {
            seed,
            extent: 20.0,
            sensor_range: 12.0,
            density: 5.0,
            poles: 3,
            signs: 1,
            trees: 2,
            cars: 2,
            trucks: 1,
            buildings: 1,
            walls: 1,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let a = generate_scene_pair(&small(3)).unwrap();
        let b = generate_scene_pair(&small(3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.src, generate_scene_pair(&small(4)).unwrap().src);
    }

    #[test]
    fn noiseless_points_lie_on_the_world() {
        let spec = SceneSpec {
            noise_sigma: 0.0,
            ..small(5)
        };
        let pair = generate_scene_pair(&spec).unwrap();
        for (cloud, origin, pose) in [
            (&pair.src, &pair.src_origin, pair.src_pose),
            (&pair.dst, &pair.dst_origin, pair.src_pose.compose(&pair.t_gt)),
        ] {
            for (i, p) in cloud.points().iter().enumerate() {
                let w = pose.apply(p);
                let d = pair.world.iter().map(|prim| prim.surface_distance(&w)).fold(f64::INFINITY, f64::min);
                assert!(d < 1e-9, "point {i} is {d} m off the world");
                assert!(pair.world[origin[i]].surface_distance(&w) < 1e-9);
            }
        }
    }

    #[test]
    fn labels_match_generating_primitive() {
        let pair = generate_scene_pair(&small(6)).unwrap();
        for (i, &o) in pair.src_origin.iter().enumerate() {
            assert_eq!(pair.src.label(i), pair.world[o].label);
        }
        for (i, &o) in pair.dst_origin.iter().enumerate() {
            assert_eq!(pair.dst.label(i), pair.world[o].label);
        }
    }

    #[test]
    fn ground_truth_is_the_pose_difference() {
        let pair = generate_scene_pair(&small(7)).unwrap();
        let expected = pair.src_pose.inverse().compose(&pair.dst_pose);
        assert!(pair.t_gt.is_valid());
        assert!((pair.t_gt.rotation - expected.rotation).abs().max() < 1e-12);
        let d = (pair.src_pose.translation - pair.dst_pose.translation).norm();
        assert!((d - pair.spec.overlap_offset).abs() < 1e-9);
    }

    #[test]
    fn far_offset_does_not_crash() {
        let spec = SceneSpec {
            overlap_offset: 22.0,
            ..small(8)
        };
        let pair = generate_scene_pair(&spec).unwrap();
        assert!(!pair.src.is_empty() && !pair.dst.is_empty());
        let spec = SceneSpec {
            density: -1.0,
            ..small(8)
        };
        assert!(generate_scene_pair(&spec).is_err());
    }

    #[test]
    fn keypoint_sampling() {
        let pair = generate_scene_pair(&small(9)).unwrap();
        let n = pair.src.len();
        assert_eq!(keypoint_sample(&pair.src, n, 1).unwrap().indices(), (0..n).collect::<Vec<_>>().as_slice());
        assert!(keypoint_sample(&pair.src, 0, 1).unwrap().is_empty());
        assert_eq!(keypoint_sample(&pair.src, 50, 2).unwrap(), keypoint_sample(&pair.src, 50, 2).unwrap());
        assert!(keypoint_sample(&pair.src, n + 1, 1).is_err());
    }

    #[test]
    fn surface_distance_of_primitives() {
        let c = Primitive {
            label: POLE,
            shape: Shape::Cylinder { cx: 0.0, cy: 0.0, radius: 1.0, z0: 0.0, z1: 2.0 },
        };
        assert!((c.surface_distance(&Point3::new(3.0, 0.0, 1.0)) - 2.0).abs() < 1e-12);
        assert!((c.surface_distance(&Point3::new(1.0, 0.0, 5.0)) - 3.0).abs() < 1e-12);
        let b = Primitive {
            label: CAR,
            shape: Shape::Box { cx: 0.0, cy: 0.0, yaw: 0.0, length: 2.0, width: 2.0, z0: 0.0, height: 2.0 },
        };
        assert!((b.surface_distance(&Point3::new(0.0, 0.0, 3.0)) - 1.0).abs() < 1e-12);
        assert!((b.surface_distance(&Point3::new(0.0, 0.0, 1.0)) - 1.0).abs() < 1e-12);
    }
    #[test]
    fn occluded_scans_only_see_front_faces() {
        let spec = SceneSpec {
            noise_sigma: 0.0,
            ..small(8)
        };
        let pair = generate_scene_pair(&spec).unwrap();
        let eye = pair.src_pose.translation + Vector3::new(0.0, 0.0, SENSOR_HEIGHT);
        for (i, p) in pair.src.points().iter().enumerate() {
            let w = pair.src_pose.apply(p);
            if let Some(n) = pair.world[pair.src_origin[i]].outward_normal(&w) {
                assert!(n.dot(&(eye - w.coords)) > 0.0, "point {i} faces away from the sensor");
            }
        }
        let open = generate_scene_pair(&SceneSpec { self_occlusion: false, ..spec }).unwrap();
        assert!(open.src.len() > pair.src.len());
    }

    #[test]
    fn terrain_normal_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let world = build_world(&SceneSpec { terrain_relief: 0.3, ..small(9) }, &mut rng);
        let ground = &world[0];
        let Shape::Ground { z, waves, .. } = &ground.shape else { panic!("first primitive is the ground") };
        assert!(!waves.is_empty());
        let h = 1e-6;
        for _ in 0..50 {
            let (x, y) = (rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0));
            let p = Point3::new(x, y, terrain_height(*z, waves, x, y));
            let dx = (terrain_height(*z, waves, x + h, y) - terrain_height(*z, waves, x - h, y)) / (2.0 * h);
            let dy = (terrain_height(*z, waves, x, y + h) - terrain_height(*z, waves, x, y - h)) / (2.0 * h);
            let expected = Vector3::new(-dx, -dy, 1.0).normalize();
            assert!((ground.outward_normal(&p).unwrap() - expected).norm() < 1e-6);
            assert!(ground.surface_distance(&p) < 1e-12);
        }
    }
}
