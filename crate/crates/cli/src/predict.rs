//! Inference from a checkpoint and decoding of the predicted images.

use std::path::Path;

use anyhow::{bail, Context, Result};
use qdgm_core::colormap::{Decoder, EncodedImage};
use qdgm_core::dataset::Manifest;
use qdgm_core::verification::{gt_deficient_verify, verify_with_label, MetricReport};
use qdgm_core::{JointGrid, MarginalTriple};
use qdgm_model::checkpoint::Checkpoint;
use qdgm_model::Generator;

/// A trained model with the dataset conventions it was trained under.
pub struct Predictor {
    pub model: Generator<f32>,
    pub manifest: Manifest,
    decoder: Decoder,
}

/// A decoded prediction checked against ground-truth marginals.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub image: EncodedImage,
    pub report: MetricReport,
    pub marginals: MarginalTriple,
    pub joint: JointGrid,
}

impl Predictor {
    pub fn new(ck: &Checkpoint) -> Result<Self> {
        let manifest = Manifest::from_toml(&ck.dataset_manifest, Path::new("checkpoint manifest"))?;
        if manifest.image_size != ck.model.output_size {
            bail!("checkpoint manifest describes {0}x{0} images, model emits {1}x{1}", manifest.image_size, ck.model.output_size);
        }
        let decoder = Decoder::new(manifest.colormap);
        Ok(Self { model: ck.generator()?, manifest, decoder })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
        Self::new(&ck)
    }

    /// Images for unscaled `N x 3 x 721` features.
    pub fn images(&self, features: &[f32]) -> Result<Vec<EncodedImage>> {
        let scaling = self.manifest.feature_scaling.context("manifest lacks feature scaling")?;
        let mut scaled = features.to_vec();
        for row in scaled.chunks_mut(self.model.config.input_len) {
            scaling.apply(row);
        }
        let out = self.model.forward(&scaled)?;
        let size = self.model.config.output_size;
        out.chunks(self.model.config.output_len()).map(|img| Ok(EncodedImage::from_f32(size, img)?)).collect()
    }

    /// The marginal grids must be the ones the model was trained on.
    pub fn check_grids(&self, triple: &MarginalTriple) -> Result<()> {
        for (k, m) in triple.iter().enumerate() {
            if !m.grid.same_as(&self.manifest.marginal_grids[k]) || m.axis != self.manifest.axes[k] {
                bail!("marginal {k} ({:?} on {:?}) does not match the training grid {:?}", m.axis, m.grid, self.manifest.marginal_grids[k]);
            }
        }
        Ok(())
    }

    /// Decode `image` and compare its marginals with `gt`, adding the image
    /// metric when a label exists.
    pub fn verify(&self, image: EncodedImage, gt: &MarginalTriple, label: Option<&EncodedImage>) -> Result<Prediction> {
        let axis = &self.manifest.joint_axis;
        let (report, marginals, joint) = match label {
            Some(label) => verify_with_label(&image, label, gt, &self.decoder, axis)?,
            None => gt_deficient_verify(&image, gt, &self.decoder, axis)?,
        };
        Ok(Prediction { image, report, marginals, joint })
    }

    pub fn predict(&self, triple: &MarginalTriple) -> Result<Prediction> {
        self.check_grids(triple)?;
        let image = self.images(&triple.to_feature())?.pop().expect("one image per feature");
        self.verify(image, triple, None)
    }
}
