use std::f64::consts::TAU;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::analysis::RgbImage;
use crate::data::{ClickPoint, Events, FixationPoint, ObjectMask, Rect, SubjectRecord};
use crate::gtgen::SubjectCounts;
use crate::raster::Mask;

// independent ChaCha streams drawn from one scene seed
const STREAM_TEXTURE: u64 = 1;
const STREAM_SUBJECTS: u64 = 2;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Rectangle,
    Ellipse,
    /// Star-shaped outline `r(θ) = 1 + 0.25·sin(lobes·θ + phase)` scaled to
    /// the bounding box.
    Blob { lobes: u32, phase: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    /// Bounding box of the shape.
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub color: [u8; 3],
    pub saliency: f64,
}

impl ObjectSpec {
    pub fn bounds(&self) -> Rect {
        Rect::new(self.x, self.y, self.x + self.width, self.y + self.height)
    }

    fn covers(&self, x: usize, y: usize) -> bool {
        let (w, h) = (self.width as f64, self.height as f64);
        let dx = (x - self.x) as f64 + 0.5 - w / 2.0;
        let dy = (y - self.y) as f64 + 0.5 - h / 2.0;
        let (u, v) = (dx / (w / 2.0), dy / (h / 2.0));
        match self.shape {
            Shape::Rectangle => true,
            Shape::Ellipse => u * u + v * v <= 1.0,
            Shape::Blob { lobes, phase } => {
                let r = (u * u + v * v).sqrt();
                let limit = (1.0 + 0.25 * (f64::from(lobes) * v.atan2(u) + phase).sin()) / 1.25;
                r <= limit
            }
        }
    }

    /// Binary mask of the shape; the bounding-box center pixel is always
    /// included so tiny shapes are never empty.
    pub fn rasterize(&self, width: usize, height: usize) -> Mask {
        let b = self.bounds();
        let mut m = Mask::filled(width, height, false);
        for y in b.y0..b.y1 {
            for x in b.x0..b.x1 {
                if self.covers(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m.set(self.x + self.width / 2, self.y + self.height / 2, true);
        m
    }
}

/// Subject behavior noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Gaussian scatter of clicks around the chosen object pixel.
    pub click_scatter_px: f64,
    /// Each rectangle edge moves by up to this fraction of the object size.
    pub rect_jitter: f64,
    /// Gaussian scatter of fixations around the object anchor.
    pub fixation_scatter_px: f64,
    /// Samples recorded per fixation.
    pub fixation_count: u32,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            click_scatter_px: 0.0,
            rect_jitter: 0.0,
            fixation_scatter_px: 0.0,
            fixation_count: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub image_id: String,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub background: [u8; 3],
    /// Amplitude of the per-pixel color noise.
    pub texture: u8,
    pub objects: Vec<ObjectSpec>,
    pub subjects: SubjectCounts,
    pub noise: NoiseSpec,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.width == 0 || self.height == 0 {
            return bad("image dimensions must be positive".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.width == 0 || o.height == 0 || !o.bounds().fits_within(self.width, self.height) {
                return bad(format!("object {i} does not fit the image"));
            }
            if !(0.0..=1.0).contains(&o.saliency) {
                return bad(format!("object {i} saliency {} outside [0, 1]", o.saliency));
            }
        }
        let n = &self.noise;
        if !(n.click_scatter_px >= 0.0 && n.fixation_scatter_px >= 0.0) {
            return bad("scatter must be non-negative".into());
        }
        if !(0.0..1.0).contains(&n.rect_jitter) {
            return bad("rect jitter must lie in [0, 1)".into());
        }
        if n.fixation_count == 0 {
            return bad("fixation count must be at least 1".into());
        }
        Ok(())
    }

    pub fn object_id(&self, index: usize) -> String {
        format!("{}_o{index}", self.image_id)
    }
}

/// A rendered scene with its true per-object saliencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub spec: SceneSpec,
    pub image: RgbImage,
    pub masks: Vec<ObjectMask>,
    pub saliencies: Vec<f64>,
}

fn jitter(rng: &mut ChaCha8Rng, c: u8, amp: u8) -> u8 {
    if amp == 0 {
        return c;
    }
    let a = i32::from(amp);
    (i32::from(c) + rng.random_range(-a..=a)).clamp(0, 255) as u8
}

/// Renders `spec`: textured background, objects painted in order.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, SynthError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut masks = Vec::with_capacity(spec.objects.len());
    let mut owner: Vec<Option<usize>> = vec![None; w * h];
    for (i, o) in spec.objects.iter().enumerate() {
        let raster = o.rasterize(w, h);
        for (slot, &on) in owner.iter_mut().zip(raster.as_slice()) {
            if on {
                *slot = Some(i);
            }
        }
        masks.push(ObjectMask::new(spec.object_id(i), spec.image_id.clone(), raster).expect("center pixel set"));
    }
    let mut rng = rng_for(spec.seed, STREAM_TEXTURE);
    let data = owner
        .iter()
        .map(|o| {
            let base = o.map_or(spec.background, |i| spec.objects[i].color);
            base.map(|c| jitter(&mut rng, c, spec.texture))
        })
        .collect();
    Ok(Scene {
        spec: spec.clone(),
        image: RgbImage::from_vec(w, h, data).expect("sized"),
        saliencies: spec.objects.iter().map(|o| o.saliency).collect(),
        masks,
    })
}

/// Foreground pixel nearest the mask centroid, first in scan order on ties.
fn anchor(mask: &ObjectMask) -> (usize, usize) {
    let pts: Vec<_> = mask.mask.foreground().collect();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let mut best = pts[0];
    let mut best_d = f64::INFINITY;
    for &(x, y) in &pts {
        let d = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        if d < best_d {
            best_d = d;
            best = (x, y);
        }
    }
    best
}

fn scatter(rng: &mut ChaCha8Rng, p: (usize, usize), sigma: f64, w: usize, h: usize) -> (usize, usize) {
    if sigma <= 0.0 {
        return p;
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    let x = (p.0 as f64 + n.sample(rng)).round().clamp(0.0, (w - 1) as f64);
    let y = (p.1 as f64 + n.sample(rng)).round().clamp(0.0, (h - 1) as f64);
    (x as usize, y as usize)
}

fn jitter_rect(rng: &mut ChaCha8Rng, r: Rect, frac: f64, w: usize, h: usize) -> Rect {
    if frac <= 0.0 {
        return r;
    }
    let dx = frac * r.width() as f64;
    let dy = frac * r.height() as f64;
    let mut edge = |v: usize, d: f64, max: usize| -> usize {
        let off = if d > 0.0 { rng.random_range(-d..=d) } else { 0.0 };
        (v as f64 + off).round().clamp(0.0, max as f64) as usize
    };
    let (x0, x1) = (edge(r.x0, dx, w), edge(r.x1, dx, w));
    let (y0, y1) = (edge(r.y0, dy, h), edge(r.y1, dy, h));
    let (x0, x1) = (x0.min(x1), x0.max(x1));
    let (y0, y1) = (y0.min(y1), y0.max(y1));
    let x1 = if x1 == x0 { (x0 + 1).min(w) } else { x1 };
    let x0 = x0.min(x1 - 1);
    let y1 = if y1 == y0 { (y0 + 1).min(h) } else { y1 };
    let y0 = y0.min(y1 - 1);
    Rect::new(x0, y0, x1, y1)
}

/// Simulated records for every subject of every modality.
///
/// Each subject responds to object `o` independently with probability
/// `saliency[o]`: a click on a random object pixel, a (jittered) tight
/// rectangle, or a fixation of `fixation_count` samples at the object's
/// anchor pixel. Subjects that respond to nothing still get an empty record.
pub fn simulate_subjects(
    saliencies: &[f64],
    masks: &[ObjectMask],
    spec: &SceneSpec,
) -> Vec<SubjectRecord> {
    let mut rng = rng_for(spec.seed, STREAM_SUBJECTS);
    let (w, h) = (spec.width, spec.height);
    let noise = spec.noise;
    let anchors: Vec<_> = masks.iter().map(anchor).collect();
    let pixels: Vec<Vec<(usize, usize)>> = masks.iter().map(|m| m.mask.foreground().collect()).collect();
    let mut out = Vec::new();
    let record = |tag: &str, s: usize, events: Events| SubjectRecord {
        subject_id: format!("{tag}{s:05}"),
        image_id: spec.image_id.clone(),
        events,
    };
    for s in 0..spec.subjects.et {
        let mut fix = Vec::new();
        for (o, &p) in saliencies.iter().enumerate() {
            if rng.random_bool(p) {
                let (x, y) = scatter(&mut rng, anchors[o], noise.fixation_scatter_px, w, h);
                fix.push(FixationPoint {
                    x,
                    y,
                    count: noise.fixation_count,
                });
            }
        }
        out.push(record("et", s, Events::Fixations(fix)));
    }
    for s in 0..spec.subjects.pc {
        let mut clicks = Vec::new();
        for (o, &p) in saliencies.iter().enumerate() {
            if rng.random_bool(p) {
                let px = pixels[o][rng.random_range(0..pixels[o].len())];
                let (x, y) = scatter(&mut rng, px, noise.click_scatter_px, w, h);
                clicks.push(ClickPoint { x, y });
            }
        }
        out.push(record("pc", s, Events::Clicks(clicks)));
    }
    for s in 0..spec.subjects.rd {
        let mut rects = Vec::new();
        for (o, &p) in saliencies.iter().enumerate() {
            if rng.random_bool(p) {
                rects.push(jitter_rect(&mut rng, masks[o].tight_rect, noise.rect_jitter, w, h));
            }
        }
        out.push(record("rd", s, Events::Rects(rects)));
    }
    out
}

/// Ranges for randomly drawn scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub objects_min: usize,
    pub objects_max: usize,
    /// Object bounding-box side as a fraction of the shorter image side.
    pub size_min_frac: f64,
    pub size_max_frac: f64,
    /// Free pixels kept between object bounding boxes.
    pub margin: usize,
    /// Minimum pairwise difference between true saliencies.
    pub min_saliency_gap: f64,
    pub saliency_min: f64,
    pub saliency_max: f64,
    pub texture: u8,
    pub subjects: SubjectCounts,
    pub noise: NoiseSpec,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width: 256,
            height: 192,
            objects_min: 2,
            objects_max: 5,
            size_min_frac: 0.1,
            size_max_frac: 0.3,
            margin: 4,
            min_saliency_gap: 0.0,
            saliency_min: 0.0,
            saliency_max: 1.0,
            texture: 12,
            subjects: SubjectCounts { et: 20, pc: 30, rd: 35 },
            noise: NoiseSpec::default(),
        }
    }
}

const PLACEMENT_TRIES: usize = 2000;

/// Draws a scene layout: object count, disjoint placements, shapes,
/// colors and saliencies, all from `seed`.
pub fn random_scene_spec(image_id: &str, seed: u64, params: &SceneParams) -> Result<SceneSpec, SynthError> {
    let p = params;
    if p.objects_min > p.objects_max || p.width == 0 || p.height == 0 {
        return Err(SynthError::InvalidSpec("empty object-count range or image".into()));
    }
    if !(0.0 < p.size_min_frac && p.size_min_frac <= p.size_max_frac && p.size_max_frac <= 1.0) {
        return Err(SynthError::InvalidSpec("size fractions must satisfy 0 < min <= max <= 1".into()));
    }
    if !(0.0 <= p.saliency_min && p.saliency_min <= p.saliency_max && p.saliency_max <= 1.0) {
        return Err(SynthError::InvalidSpec("saliency range must lie in [0, 1]".into()));
    }
    let mut rng = rng_for(seed, 0);
    let n = rng.random_range(p.objects_min..=p.objects_max);
    let short = p.width.min(p.height) as f64;
    let side = |rng: &mut ChaCha8Rng| -> usize {
        let f = rng.random_range(p.size_min_frac..=p.size_max_frac);
        ((f * short).round() as usize).max(1)
    };

    let mut placed: Vec<Rect> = Vec::with_capacity(n);
    let mut objects = Vec::with_capacity(n);
    for i in 0..n {
        let mut done = false;
        for _ in 0..PLACEMENT_TRIES {
            let (bw, bh) = (side(&mut rng).min(p.width), side(&mut rng).min(p.height));
            let x = rng.random_range(0..=p.width - bw);
            let y = rng.random_range(0..=p.height - bh);
            let r = Rect::new(x, y, x + bw, y + bh);
            let grown = Rect::new(
                r.x0.saturating_sub(p.margin),
                r.y0.saturating_sub(p.margin),
                r.x1 + p.margin,
                r.y1 + p.margin,
            );
            if placed.iter().any(|q| grown.intersection(q).is_some()) {
                continue;
            }
            let shape = match rng.random_range(0..3) {
                0 => Shape::Rectangle,
                1 => Shape::Ellipse,
                _ => Shape::Blob {
                    lobes: rng.random_range(2..=5),
                    phase: rng.random_range(0.0..TAU),
                },
            };
            let color = [rng.random(), rng.random(), rng.random()];
            placed.push(r);
            objects.push(ObjectSpec {
                shape,
                x,
                y,
                width: bw,
                height: bh,
                color,
                saliency: 0.0,
            });
            done = true;
            break;
        }
        if !done {
            return Err(SynthError::Unplaceable { image_id: image_id.to_string(), object: i });
        }
    }

    let mut drawn: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let mut ok = false;
        for _ in 0..PLACEMENT_TRIES {
            let s = rng.random_range(p.saliency_min..=p.saliency_max);
            if drawn.iter().all(|d| (d - s).abs() >= p.min_saliency_gap) {
                drawn.push(s);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(SynthError::SaliencyGap { image_id: image_id.to_string(), object: i });
        }
    }
    for (o, s) in objects.iter_mut().zip(drawn) {
        o.saliency = s;
    }

    let background = [rng.random(), rng.random(), rng.random()];
    Ok(SceneSpec {
        image_id: image_id.to_string(),
        seed: rng.next_u64(),
        width: p.width,
        height: p.height,
        background,
        texture: p.texture,
        objects,
        subjects: p.subjects,
        noise: p.noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtgen::{point_click_saliency, rect_draw_saliency};

    fn three_rects() -> SceneSpec {
        let obj = |x, s| ObjectSpec {
            shape: Shape::Rectangle,
            x,
            y: 10,
            width: 12,
            height: 8,
            color: [200, 40, 40],
            saliency: s,
        };
        SceneSpec {
            image_id: "img".into(),
            seed: 7,
            width: 80,
            height: 40,
            background: [20, 20, 20],
            texture: 10,
            objects: vec![obj(2, 0.3), obj(30, 0.6), obj(60, 0.9)],
            subjects: SubjectCounts { et: 5, pc: 5, rd: 5 },
            noise: NoiseSpec::default(),
        }
    }

    #[test]
    fn rectangles_have_exact_areas() {
        let scene = generate_scene(&three_rects()).unwrap();
        assert_eq!(scene.saliencies, vec![0.3, 0.6, 0.9]);
        for m in &scene.masks {
            assert_eq!(m.area(), 96);
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_scene(&three_rects()).unwrap();
        let b = generate_scene(&three_rects()).unwrap();
        assert_eq!(a, b);
        let ra = simulate_subjects(&a.saliencies, &a.masks, &a.spec);
        let rb = simulate_subjects(&b.saliencies, &b.masks, &b.spec);
        assert_eq!(ra, rb);
        let p = SceneParams::default();
        assert_eq!(random_scene_spec("x", 3, &p).unwrap(), random_scene_spec("x", 3, &p).unwrap());
        assert_ne!(random_scene_spec("x", 3, &p).unwrap(), random_scene_spec("x", 4, &p).unwrap());
    }

    #[test]
    fn random_scenes_are_disjoint_and_in_range() {
        let p = SceneParams {
            min_saliency_gap: 0.1,
            ..SceneParams::default()
        };
        for seed in 0..30 {
            let spec = random_scene_spec("x", seed, &p).unwrap();
            assert!((p.objects_min..=p.objects_max).contains(&spec.objects.len()));
            let scene = generate_scene(&spec).unwrap();
            for (i, a) in scene.masks.iter().enumerate() {
                for b in &scene.masks[i + 1..] {
                    assert!(a.mask.as_slice().iter().zip(b.mask.as_slice()).all(|(x, y)| !(x & y)));
                }
            }
            for (i, a) in spec.objects.iter().enumerate() {
                for b in &spec.objects[i + 1..] {
                    assert!((a.saliency - b.saliency).abs() >= 0.1);
                }
            }
        }
    }

    #[test]
    fn certain_objects_are_always_hit() {
        let mut spec = three_rects();
        spec.objects[0].saliency = 1.0;
        spec.objects[1].saliency = 0.0;
        spec.subjects = SubjectCounts { et: 0, pc: 40, rd: 40 };
        let scene = generate_scene(&spec).unwrap();
        let recs = simulate_subjects(&scene.saliencies, &scene.masks, &spec);
        let pc: Vec<_> = recs.iter().filter(|r| r.subject_id.starts_with("pc")).collect();
        let rd: Vec<_> = recs.iter().filter(|r| r.subject_id.starts_with("rd")).collect();
        assert_eq!(point_click_saliency(&pc, &scene.masks[0]).unwrap(), 1.0);
        assert_eq!(point_click_saliency(&pc, &scene.masks[1]).unwrap(), 0.0);
        assert_eq!(rect_draw_saliency(&rd, &scene.masks[0].tight_rect, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn exact_rectangles_match_click_model() {
        // with zero jitter every drawn rectangle has IoU 1, so the rectangle
        // estimate is the empirical response rate
        let mut spec = three_rects();
        spec.subjects = SubjectCounts { et: 0, pc: 0, rd: 200 };
        let scene = generate_scene(&spec).unwrap();
        let recs = simulate_subjects(&scene.saliencies, &scene.masks, &spec);
        let rd: Vec<_> = recs.iter().collect();
        for (o, m) in scene.masks.iter().enumerate() {
            let drew = recs
                .iter()
                .filter(|r| match &r.events {
                    Events::Rects(v) => v.contains(&m.tight_rect),
                    _ => false,
                })
                .count();
            let got = rect_draw_saliency(&rd, &m.tight_rect, 0.3).unwrap();
            assert_eq!(got, drew as f64 / 200.0, "object {o}");
        }
    }

    #[test]
    fn jittered_rects_stay_valid() {
        let mut rng = rng_for(1, 9);
        for _ in 0..500 {
            let r = jitter_rect(&mut rng, Rect::new(0, 0, 2, 1), 0.9, 3, 2);
            assert!(r.is_valid() && r.fits_within(3, 2));
        }
    }
}
