//! Synthetic scene oracle.
//!
//! A scene is a set of axis-aligned 3D boxes seen through an analytic pinhole
//! camera that sits at a fixed height and moves on the floor plane. Projected
//! boxes, synthetic detections and visibility answers are exact functions of
//! `(scene, pose)`, which makes them usable as ground truth.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::{NormBox, IMAGE_EXTENT};
use crate::geometry::{apply_sequence, Action, Pose};
use crate::math::{self, Fnv};

/// Corners closer than this (meters along the view axis) are dropped.
pub const NEAR_PLANE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("duplicate object id `{0}`")]
    DuplicateId(String),
    #[error("unknown object id `{0}`")]
    UnknownObject(String),
    #[error("object `{0}` has a non-positive or non-finite size")]
    BadSize(String),
    #[error("camera height must be positive and finite")]
    BadCameraHeight,
    #[error("horizontal field of view must lie in (0, 180) degrees")]
    BadFov,
    #[error("ids and labels must be non-empty and free of whitespace: `{0}`")]
    BadToken(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    /// Box center (x, y, z) in meters; z is height above the floor.
    pub center: [f64; 3],
    /// Extent along (x, y, z) in meters.
    pub size: [f64; 3],
}

impl SceneObject {
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let [cx, cy, cz] = self.center;
        let [hx, hy, hz] = [self.size[0] / 2.0, self.size[1] / 2.0, self.size[2] / 2.0];
        let mut out = [[0.0; 3]; 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -hx } else { hx };
            let sy = if i & 2 == 0 { -hy } else { hy };
            let sz = if i & 4 == 0 { -hz } else { hz };
            *c = [cx + sx, cy + sy, cz + sz];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Horizontal field of view in degrees. The image is square, so the
    /// vertical field of view follows from the same focal length.
    pub horizontal_fov: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics {
            horizontal_fov: 90.0,
        }
    }
}

impl CameraIntrinsics {
    /// Focal length in normalized image units.
    pub fn focal(&self) -> f64 {
        let half = self.horizontal_fov / 2.0 * (core::f64::consts::PI / 180.0);
        (IMAGE_EXTENT as f64 / 2.0) / math::tan(half)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub camera_height: f64,
    pub intrinsics: CameraIntrinsics,
    pub seed: u64,
}

impl Scene {
    pub fn new(
        objects: Vec<SceneObject>,
        camera_height: f64,
        intrinsics: CameraIntrinsics,
        seed: u64,
    ) -> Result<Self, SceneError> {
        let scene = Scene {
            objects,
            camera_height,
            intrinsics,
            seed,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.camera_height.is_finite() && self.camera_height > 0.0) {
            return Err(SceneError::BadCameraHeight);
        }
        let fov = self.intrinsics.horizontal_fov;
        if !(fov > 0.0 && fov < 180.0) {
            return Err(SceneError::BadFov);
        }
        for (i, o) in self.objects.iter().enumerate() {
            for token in [&o.id, &o.label] {
                if token.is_empty() || token.chars().any(char::is_whitespace) {
                    return Err(SceneError::BadToken(token.clone()));
                }
            }
            if o.size.iter().any(|s| !(s.is_finite() && *s > 0.0))
                || o.center.iter().any(|c| !c.is_finite())
            {
                return Err(SceneError::BadSize(o.id.clone()));
            }
            if self.objects[..i].iter().any(|p| p.id == o.id) {
                return Err(SceneError::DuplicateId(o.id.clone()));
            }
        }
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedBox {
    pub object_id: String,
    /// Clipped to the image; the near edge and the extent are rounded.
    pub bbox: NormBox,
    /// Distance from the camera to the object center along the view axis.
    pub depth: f64,
    /// Every corner lies in front of the near plane.
    pub in_front: bool,
    /// Clipped hull area over unclipped hull area, in [0, 1].
    pub visible_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub object_id: String,
    pub label: String,
    pub bbox: NormBox,
    pub confidence: f64,
}

fn camera_coords(scene: &Scene, pose: &Pose, p: [f64; 3]) -> (f64, f64, f64) {
    let (s, c) = pose.heading();
    let (dx, dy, dz) = (p[0] - pose.x, p[1] - pose.y, p[2] - scene.camera_height);
    let depth = dx * s + dy * c;
    let lateral = dx * c - dy * s;
    (depth, lateral, dz)
}

/// Project an object's 3D box into the view at `pose`.
///
/// Returns `None` for unknown ids and when fewer than two corners are in front
/// of the near plane.
pub fn project_box(scene: &Scene, pose: &Pose, object_id: &str) -> Option<ProjectedBox> {
    let obj = scene.object(object_id)?;
    project_object(scene, pose, obj)
}

fn project_object(scene: &Scene, pose: &Pose, obj: &SceneObject) -> Option<ProjectedBox> {
    let f = scene.intrinsics.focal();
    let half = IMAGE_EXTENT as f64 / 2.0;
    let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut kept = 0;
    for corner in obj.corners() {
        let (depth, lateral, up) = camera_coords(scene, pose, corner);
        if depth < NEAR_PLANE {
            continue;
        }
        kept += 1;
        let u = half + f * lateral / depth;
        let v = half - f * up / depth;
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    if kept < 2 {
        return None;
    }
    let extent = IMAGE_EXTENT as f64;
    let clip = |v: f64| v.clamp(0.0, extent);
    let (cu1, cu2, cv1, cv2) = (clip(umin), clip(umax), clip(vmin), clip(vmax));
    let raw_area = (umax - umin) * (vmax - vmin);
    let clipped_area = (cu2 - cu1) * (cv2 - cv1);
    let visible_fraction = if raw_area > 0.0 {
        (clipped_area / raw_area).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (depth, _, _) = camera_coords(scene, pose, obj.center);
    // round the near edge and the extent, so sizes are off by at most half a
    // unit and scale with depth the way the continuous box does
    let quantize = |lo: f64, hi: f64| {
        let a = math::round(lo) as i32;
        (a, (a + math::round(hi - lo) as i32).min(IMAGE_EXTENT))
    };
    let (x1, x2) = quantize(cu1, cu2);
    let (y1, y2) = quantize(cv1, cv2);
    Some(ProjectedBox {
        object_id: obj.id.clone(),
        bbox: NormBox::new(x1, y1, x2, y2),
        depth,
        in_front: kept == 8,
        visible_fraction,
    })
}

/// Seeded noise in [-0.1, 0.1] for one (scene, object, pose) triple.
fn confidence_noise(seed: u64, object_id: &str, pose: &Pose) -> f64 {
    let bits = Fnv::new()
        .u64(seed)
        .str(object_id)
        .u64(pose.x.to_bits())
        .u64(pose.y.to_bits())
        .u64(pose.yaw.to_bits())
        .finish();
    -0.1 + 0.2 * math::unit_f64(bits)
}

/// Synthetic detector confidence.
///
/// `clamp(0.5 + 0.5 * area^0.25 - truncation + noise, 0, 1)`, where `area` is
/// the box area over the image area and `truncation` is
/// `0.6 * (1 - visible_fraction)` plus 0.2 when the near plane cuts the object.
pub fn confidence(pb: &ProjectedBox, noise: f64) -> f64 {
    let mut truncation = 0.6 * (1.0 - pb.visible_fraction);
    if !pb.in_front {
        truncation += 0.2;
    }
    (0.5 + 0.5 * math::powf(pb.bbox.area_ratio(), 0.25) - truncation + noise).clamp(0.0, 1.0)
}

/// One candidate detection per object whose projection has positive area.
pub fn synth_detections(scene: &Scene, pose: &Pose) -> Vec<Detection> {
    scene
        .objects
        .iter()
        .filter_map(|obj| {
            let pb = project_object(scene, pose, obj)?;
            if pb.bbox.area() <= 0.0 {
                return None;
            }
            let noise = confidence_noise(scene.seed, &obj.id, pose);
            Some(Detection {
                object_id: obj.id.clone(),
                label: obj.label.clone(),
                bbox: pb.bbox,
                confidence: confidence(&pb, noise),
            })
        })
        .collect()
}

/// Detection filter thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionFilter {
    pub min_confidence: f64,
    pub nms_iou: f64,
    pub min_area_ratio: f64,
    pub max_area_ratio: f64,
    /// Minimum distance from every image border, in normalized units.
    pub min_border_margin: i32,
}

impl Default for DetectionFilter {
    fn default() -> Self {
        DetectionFilter {
            min_confidence: 0.3,
            nms_iou: 0.5,
            min_area_ratio: 0.01,
            max_area_ratio: 0.6,
            min_border_margin: IMAGE_EXTENT / 100,
        }
    }
}

impl DetectionFilter {
    /// Area and border checks; these also decide post-motion visibility.
    pub fn passes_geometry(&self, b: &NormBox) -> bool {
        let ratio = b.area_ratio();
        ratio >= self.min_area_ratio
            && ratio <= self.max_area_ratio
            && b.border_margin() >= self.min_border_margin
    }

    pub fn passes(&self, d: &Detection) -> bool {
        d.confidence >= self.min_confidence && self.passes_geometry(&d.bbox)
    }

    /// Threshold filters, then per-label greedy NMS in descending confidence,
    /// then one detection per object instance (highest confidence wins).
    ///
    /// Output is sorted by descending confidence, ties broken by object id.
    pub fn apply(&self, dets: &[Detection]) -> Vec<Detection> {
        let mut cands: Vec<&Detection> = dets.iter().filter(|d| self.passes(d)).collect();
        cands.sort_by(|a, b| {
            b.confidence
                .total_cmp(&a.confidence)
                .then_with(|| a.object_id.cmp(&b.object_id))
        });
        let mut kept: Vec<Detection> = Vec::new();
        for d in cands {
            let suppressed = kept.iter().any(|k| {
                k.object_id == d.object_id
                    || (k.label == d.label && k.bbox.iou(&d.bbox) >= self.nms_iou)
            });
            if !suppressed {
                kept.push(d.clone());
            }
        }
        kept
    }
}

pub fn filter_detections(dets: &[Detection]) -> Vec<Detection> {
    DetectionFilter::default().apply(dets)
}

/// Whether the object is still framed after executing `steps` from `pose`:
/// its projection must pass the area and border checks of the detection filter.
pub fn visibility_after(
    scene: &Scene,
    pose: &Pose,
    steps: &[Action],
    object_id: &str,
) -> Result<bool, SceneError> {
    let obj = scene
        .object(object_id)
        .ok_or_else(|| SceneError::UnknownObject(object_id.into()))?;
    let after = apply_sequence(*pose, steps);
    Ok(is_visible(scene, &after, obj))
}

pub(crate) fn is_visible(scene: &Scene, pose: &Pose, obj: &SceneObject) -> bool {
    project_object(scene, pose, obj)
        .map(|pb| DetectionFilter::default().passes_geometry(&pb.bbox))
        .unwrap_or(false)
}

/// Pair detections that refer to the same object instance, in source order.
pub fn match_instances<'a>(
    src: &'a [Detection],
    tgt: &'a [Detection],
) -> Vec<(&'a Detection, &'a Detection)> {
    src.iter()
        .filter_map(|s| tgt.iter().find(|t| t.object_id == s.object_id).map(|t| (s, t)))
        .collect()
}
