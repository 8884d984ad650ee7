//! Synthetic validation lab.
//!
//! Renders nucleus scenes whose phenotype is known by construction and
//! corrupts them in controlled ways (missing nuclei, missing nuclear area,
//! introduced saturated artefacts) so the metric's response can be checked
//! without real micrographs or trained inpainting models.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::draw::disc_pixels;
use crate::error::{Error, Result};
use crate::imgcore::GrayImage;
use crate::metric::PhenotypeSummary;
use crate::rng::Rng;

/// Minimum component area the default metric configuration keeps.
pub const MIN_NUCLEUS_AREA: usize = 50;
/// Largest single-nucleus area under the default configuration (exclusive).
pub const MAX_NUCLEUS_AREA: usize = 2200;
/// Pixel gap kept between nuclei (and artefacts) so they never touch.
pub const CLEARANCE: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Uniform intensity `peak` over the footprint.
    FlatDisc,
    /// Dome from `peak` at the center down to a rim at 60% of the way from
    /// background to peak.
    RadialFalloff,
}

const RIM_LEVEL: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NucleusSpec {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub peak: u8,
    pub profile: Profile,
}

impl NucleusSpec {
    /// Pixels of the nucleus, in raster order.
    pub fn footprint(&self, width: usize, height: usize) -> Vec<(usize, usize)> {
        disc_pixels(self.cx, self.cy, self.radius, width, height)
    }

    fn intensity(&self, x: usize, y: usize, background: u8) -> u8 {
        match self.profile {
            Profile::FlatDisc => self.peak,
            Profile::RadialFalloff => {
                let (dx, dy) = (x as f64 - self.cx, y as f64 - self.cy);
                let t = ((dx * dx + dy * dy) / (self.radius * self.radius)).min(1.0);
                let bg = f64::from(background);
                let level = RIM_LEVEL + (1.0 - RIM_LEVEL) * (1.0 - t);
                (bg + (f64::from(self.peak) - bg) * level).round() as u8
            }
        }
    }

    fn clears(&self, cx: f64, cy: f64, radius: f64) -> bool {
        let d = ((self.cx - cx).powi(2) + (self.cy - cy).powi(2)).sqrt();
        d >= self.radius + radius + CLEARANCE
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub seed: u64,
    pub nucleus_count: usize,
    pub image_side: usize,
    pub background_level: u8,
    pub min_radius: f64,
    pub max_radius: f64,
    pub peak: u8,
    pub profile: Profile,
    /// Standard deviation of additive Gaussian noise; 0 disables it.
    pub noise_sigma: f64,
    pub max_attempts: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            seed: 0,
            nucleus_count: 5,
            image_side: 256,
            background_level: 10,
            min_radius: 9.0,
            max_radius: 18.0,
            peak: 200,
            profile: Profile::RadialFalloff,
            noise_sigma: 0.0,
            max_attempts: 10_000,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.peak == 255 {
            return bad("nucleus peak must stay below 255 so nuclei never read as saturated".into());
        }
        if self.background_level >= self.peak {
            return bad(format!(
                "background {} must be darker than peak {}",
                self.background_level, self.peak
            ));
        }
        if !(self.min_radius > 0.0 && self.min_radius <= self.max_radius) {
            return bad(format!(
                "invalid radius range [{}, {}]",
                self.min_radius, self.max_radius
            ));
        }
        let min_area = disc_pixels(0.0, 0.0, self.min_radius, usize::MAX, usize::MAX).len();
        if min_area < MIN_NUCLEUS_AREA {
            return bad(format!(
                "radius {} gives {min_area} px, below {MIN_NUCLEUS_AREA}",
                self.min_radius
            ));
        }
        let centered = disc_pixels(1e6, 1e6, self.max_radius, usize::MAX, usize::MAX).len();
        if centered >= MAX_NUCLEUS_AREA {
            return bad(format!(
                "radius {} gives {centered} px, not a single nucleus",
                self.max_radius
            ));
        }
        if !(0.0..=5.0).contains(&self.noise_sigma) {
            return bad(format!("noise sigma must lie in [0, 5], got {}", self.noise_sigma));
        }
        Ok(())
    }
}

/// A rendered scene and the ground truth it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub image: GrayImage,
    pub nuclei: Vec<NucleusSpec>,
    pub background_level: u8,
}

impl Scene {
    /// Renders `nuclei` on a flat background. Nuclei must keep the clearance
    /// gap from each other and have an unsaturated peak.
    pub fn from_nuclei(image_side: usize, background_level: u8, nuclei: Vec<NucleusSpec>) -> Result<Self> {
        for (i, n) in nuclei.iter().enumerate() {
            if n.peak == 255 || n.peak <= background_level {
                return Err(Error::InvalidParameter(format!(
                    "nucleus {i} peak {} out of range",
                    n.peak
                )));
            }
            if nuclei[..i].iter().any(|m| !m.clears(n.cx, n.cy, n.radius)) {
                return Err(Error::InvalidParameter(format!(
                    "nucleus {i} overlaps an earlier nucleus"
                )));
            }
        }
        let mut image = GrayImage::filled(image_side, image_side, background_level)?;
        for n in &nuclei {
            for (x, y) in n.footprint(image_side, image_side) {
                image.set(x, y, n.intensity(x, y, background_level));
            }
        }
        Ok(Self {
            image,
            nuclei,
            background_level,
        })
    }

    /// Phenotype implied by construction.
    pub fn expected_summary(&self) -> PhenotypeSummary {
        let (w, h) = self.image.dims();
        PhenotypeSummary {
            nucleus_count: self.nuclei.len() as u64,
            nucleus_area: self.nuclei.iter().map(|n| n.footprint(w, h).len() as u64).sum(),
            artefact_area: 0,
        }
    }

    fn nucleus(&self, index: usize) -> Result<&NucleusSpec> {
        self.nuclei.get(index).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "nucleus index {index} out of range (scene has {})",
                self.nuclei.len()
            ))
        })
    }
}

/// Places nuclei by rejection sampling and renders them.
pub fn gen_scene_with(params: &SceneParams) -> Result<Scene> {
    params.validate()?;
    let side = params.image_side as f64;
    let mut rng = Rng::new(params.seed);
    let mut nuclei: Vec<NucleusSpec> = Vec::with_capacity(params.nucleus_count);
    let mut attempts = 0;
    while nuclei.len() < params.nucleus_count {
        attempts += 1;
        if attempts > params.max_attempts {
            return Err(Error::Infeasible(format!(
                "placed only {} of {} nuclei in a {}x{} image",
                nuclei.len(),
                params.nucleus_count,
                params.image_side,
                params.image_side
            )));
        }
        let radius = rng.uniform(params.min_radius, params.max_radius);
        let margin = radius + 2.0;
        if side - 1.0 - margin <= margin {
            continue;
        }
        let cx = rng.uniform(margin, side - 1.0 - margin);
        let cy = rng.uniform(margin, side - 1.0 - margin);
        if nuclei.iter().all(|n| n.clears(cx, cy, radius)) {
            nuclei.push(NucleusSpec {
                cx,
                cy,
                radius,
                peak: params.peak,
                profile: params.profile,
            });
        }
    }
    let mut scene = Scene::from_nuclei(params.image_side, params.background_level, nuclei)?;
    if params.noise_sigma > 0.0 {
        for p in scene.image.pixels_mut() {
            let noisy = f64::from(*p) + params.noise_sigma * rng.normal();
            *p = noisy.round().clamp(0.0, 254.0) as u8;
        }
    }
    Ok(scene)
}

pub fn gen_scene(seed: u64, nucleus_count: usize, image_side: usize, background_level: u8) -> Result<Scene> {
    gen_scene_with(&SceneParams {
        seed,
        nucleus_count,
        image_side,
        background_level,
        ..Default::default()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Manipulation {
    /// Paints the nucleus footprint with background.
    RemoveNucleus { index: usize },
    /// Paints the outermost `fraction` of the nucleus's pixels with background.
    ErodeNucleusArea { index: usize, fraction: f64 },
    /// Paints a saturated (255) disc that keeps clear of every nucleus.
    AddArtefact { cx: f64, cy: f64, radius: f64 },
}

impl std::fmt::Display for Manipulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Manipulation::RemoveNucleus { index } => write!(f, "remove({index})"),
            Manipulation::ErodeNucleusArea { index, fraction } => write!(f, "erode({index},{fraction})"),
            Manipulation::AddArtefact { cx, cy, radius } => write!(f, "artefact({cx:.1},{cy:.1},{radius})"),
        }
    }
}

/// Footprint pixels of nucleus `index` that an erosion by `fraction` removes:
/// farthest from the center first, ties in raster order.
fn eroded_pixels(scene: &Scene, index: usize, fraction: f64) -> Result<Vec<(usize, usize)>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "erosion fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = scene.nucleus(index)?;
    let (w, h) = scene.image.dims();
    let mut pixels = n.footprint(w, h);
    let area = pixels.len();
    let k = (fraction * area as f64).round() as usize;
    if area - k < MIN_NUCLEUS_AREA {
        return Err(Error::InvalidParameter(format!(
            "eroding {fraction} of nucleus {index} leaves {} px, below {MIN_NUCLEUS_AREA}",
            area - k
        )));
    }
    let d2 = |&(x, y): &(usize, usize)| (x as f64 - n.cx).powi(2) + (y as f64 - n.cy).powi(2);
    // stable sort keeps raster order among equal distances
    pixels.sort_by(|a, b| d2(b).total_cmp(&d2(a)));
    pixels.truncate(k);
    Ok(pixels)
}

fn artefact_pixels(scene: &Scene, cx: f64, cy: f64, radius: f64) -> Result<Vec<(usize, usize)>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "artefact radius must be > 0, got {radius}"
        )));
    }
    if let Some(i) = scene.nuclei.iter().position(|n| !n.clears(cx, cy, radius)) {
        return Err(Error::InvalidParameter(format!(
            "artefact at ({cx}, {cy}) overlaps nucleus {i}"
        )));
    }
    let (w, h) = scene.image.dims();
    Ok(disc_pixels(cx, cy, radius, w, h))
}

/// Applies one manipulation to `img`, which must be `scene.image` or an image
/// already derived from it. Pixels outside the manipulation footprint are
/// left untouched.
pub fn apply_manipulation(img: &GrayImage, scene: &Scene, m: &Manipulation) -> Result<GrayImage> {
    img.ensure_same_dims(&scene.image)?;
    let mut out = img.clone();
    let (w, h) = img.dims();
    match *m {
        Manipulation::RemoveNucleus { index } => {
            for (x, y) in scene.nucleus(index)?.footprint(w, h) {
                out.set(x, y, scene.background_level);
            }
        }
        Manipulation::ErodeNucleusArea { index, fraction } => {
            for (x, y) in eroded_pixels(scene, index, fraction)? {
                out.set(x, y, scene.background_level);
            }
        }
        Manipulation::AddArtefact { cx, cy, radius } => {
            for (x, y) in artefact_pixels(scene, cx, cy, radius)? {
                out.set(x, y, 255);
            }
        }
    }
    Ok(out)
}

/// Applies manipulations in order and returns the image together with the
/// phenotype it has by construction.
pub fn apply_all(scene: &Scene, manipulations: &[Manipulation]) -> Result<(GrayImage, PhenotypeSummary)> {
    let (w, h) = scene.image.dims();
    let mut image = scene.image.clone();
    let mut nucleus_pixels: Vec<HashSet<(usize, usize)>> = scene
        .nuclei
        .iter()
        .map(|n| n.footprint(w, h).into_iter().collect())
        .collect();
    let mut artefact: HashSet<(usize, usize)> = HashSet::new();
    for m in manipulations {
        image = apply_manipulation(&image, scene, m)?;
        match *m {
            Manipulation::RemoveNucleus { index } => nucleus_pixels[index].clear(),
            Manipulation::ErodeNucleusArea { index, fraction } => {
                for p in eroded_pixels(scene, index, fraction)? {
                    nucleus_pixels[index].remove(&p);
                }
            }
            Manipulation::AddArtefact { cx, cy, radius } => artefact.extend(artefact_pixels(scene, cx, cy, radius)?),
        }
    }
    let summary = PhenotypeSummary {
        nucleus_count: nucleus_pixels.iter().filter(|p| !p.is_empty()).count() as u64,
        nucleus_area: nucleus_pixels.iter().map(|p| p.len() as u64).sum(),
        artefact_area: artefact.len() as u64,
    };
    Ok((image, summary))
}

/// Nucleus count of the ladder scenes.
pub const LADDER_NUCLEI: usize = 8;
/// Radius of the saturated artefact disc used on the ladder.
pub const LADDER_ARTEFACT_RADIUS: f64 = 10.0;

/// One rung of the severity ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderRung {
    pub rank: usize,
    pub label: &'static str,
    pub manipulations: Vec<Manipulation>,
    pub original: GrayImage,
    pub manipulated: GrayImage,
    pub expected_original: PhenotypeSummary,
    pub expected_manipulated: PhenotypeSummary,
}

fn place_artefact(scene: &Scene, rng: &mut Rng, radius: f64) -> Result<(f64, f64)> {
    let side = scene.image.width() as f64;
    let margin = radius + 2.0;
    for _ in 0..10_000 {
        let cx = rng.uniform(margin, side - 1.0 - margin);
        let cy = rng.uniform(margin, side - 1.0 - margin);
        if scene.nuclei.iter().all(|n| n.clears(cx, cy, radius)) {
            return Ok((cx, cy));
        }
    }
    Err(Error::Infeasible("no free spot for the artefact".into()))
}

/// Six pairs of increasing phenotypic damage on one scene:
///
/// 0. untouched
/// 1. largest nucleus loses 10% of its area
/// 2. largest nucleus loses 40% of its area
/// 3. smallest nucleus removed
/// 4. smallest nucleus removed, saturated artefact added
/// 5. three smallest nuclei removed, saturated artefact added
///
/// Shrinking the largest nucleus touches more pixels than deleting the
/// smallest one, so pixel-fidelity damage and phenotypic damage are ordered
/// differently on purpose.
pub fn severity_ladder(seed: u64) -> Result<Vec<LadderRung>> {
    let scene = gen_scene_with(&SceneParams {
        seed,
        nucleus_count: LADDER_NUCLEI,
        ..Default::default()
    })?;
    let mut by_size: Vec<usize> = (0..scene.nuclei.len()).collect();
    by_size.sort_by(|&a, &b| scene.nuclei[a].radius.total_cmp(&scene.nuclei[b].radius));
    let largest = by_size[by_size.len() - 1];
    let smallest = &by_size[..3];

    let mut rng = Rng::new(seed ^ 0xA47E_FAC7);
    let (cx, cy) = place_artefact(&scene, &mut rng, LADDER_ARTEFACT_RADIUS)?;
    let artefact = Manipulation::AddArtefact {
        cx,
        cy,
        radius: LADDER_ARTEFACT_RADIUS,
    };
    let remove = |i: usize| Manipulation::RemoveNucleus { index: i };

    let steps: Vec<(&'static str, Vec<Manipulation>)> = vec![
        ("identical", vec![]),
        (
            "erode-10",
            vec![Manipulation::ErodeNucleusArea {
                index: largest,
                fraction: 0.1,
            }],
        ),
        (
            "erode-40",
            vec![Manipulation::ErodeNucleusArea {
                index: largest,
                fraction: 0.4,
            }],
        ),
        ("remove-1", vec![remove(smallest[0])]),
        ("remove-1-artefact", vec![remove(smallest[0]), artefact.clone()]),
        (
            "remove-3-artefact",
            vec![remove(smallest[0]), remove(smallest[1]), remove(smallest[2]), artefact],
        ),
    ];
    let expected_original = scene.expected_summary();
    steps
        .into_iter()
        .enumerate()
        .map(|(rank, (label, manipulations))| {
            let (manipulated, expected_manipulated) = apply_all(&scene, &manipulations)?;
            Ok(LadderRung {
                rank,
                label,
                manipulations,
                original: scene.image.clone(),
                manipulated,
                expected_original,
                expected_manipulated,
            })
        })
        .collect()
}
