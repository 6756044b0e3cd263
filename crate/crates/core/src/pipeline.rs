//! End-to-end recognition of single pages and batches.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dots::{connected_components, filter_braille_points, Component, DotDetection};
use crate::error::{Error, Result};
use crate::geometry::{estimate_structure_detailed, BrailleStructure, StructureEstimate};
use crate::image::{load_gray, GrayImage};
use crate::preprocess::{preprocess_stages, PreprocessConfig, PreprocessStages};
use crate::translate::{build_grid, read_codes, translate_page, BrailleCode, CellGrid, MappingTable, Translation, UnknownCode, DEFAULT_FILL_THRESHOLD};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub fill_threshold: f64,
    /// Worker threads for batches; 0 picks the number of CPUs.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            preprocess: PreprocessConfig::default(),
            fill_threshold: DEFAULT_FILL_THRESHOLD,
            jobs: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        if !(self.fill_threshold > 0.0 && self.fill_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "fill threshold {} outside (0, 1]",
                self.fill_threshold
            )));
        }
        Ok(())
    }
}

/// Every intermediate product of one page. Later fields stay `None` once a
/// stage fails; the failure is kept in `failure`.
#[derive(Debug)]
pub struct PageStages {
    pub preprocess: PreprocessStages,
    pub components: Vec<Component>,
    pub detection: Option<DotDetection>,
    pub estimate: Option<StructureEstimate>,
    pub grid: Option<CellGrid>,
    pub codes: Option<Vec<Vec<BrailleCode>>>,
    pub translation: Option<Translation>,
    /// Nothing survived binarization: the page holds no writing.
    pub blank: bool,
    pub failure: Option<Error>,
}

/// Runs every stage it can. Only configuration errors are returned as `Err`.
pub fn run_page_stages(img: &GrayImage, cfg: &PipelineConfig, table: &MappingTable) -> Result<PageStages> {
    cfg.validate()?;
    let preprocess = preprocess_stages(img, &cfg.preprocess)?;
    let components = connected_components(&preprocess.closed);
    let mut stages = PageStages {
        preprocess,
        components,
        detection: None,
        estimate: None,
        grid: None,
        codes: None,
        translation: None,
        blank: false,
        failure: None,
    };
    if stages.components.is_empty() {
        stages.blank = true;
        return Ok(stages);
    }
    let detection = match filter_braille_points(&stages.components) {
        Ok(d) => d,
        Err(e) => {
            stages.failure = Some(e);
            return Ok(stages);
        }
    };
    let estimate = match estimate_structure_detailed(&detection.points, detection.standard_diameter) {
        Ok(e) => e,
        Err(e) => {
            stages.detection = Some(detection);
            stages.failure = Some(e);
            return Ok(stages);
        }
    };
    let grid = build_grid(&estimate.structure);
    let codes = read_codes(&stages.preprocess.closed, &grid, cfg.fill_threshold);
    stages.translation = Some(translate_page(&codes, table));
    stages.detection = Some(detection);
    stages.estimate = Some(estimate);
    stages.grid = Some(grid);
    stages.codes = Some(codes);
    Ok(stages)
}

/// What a successfully read page yields.
#[derive(Clone, Debug, PartialEq)]
pub struct PageResult {
    pub text: String,
    /// `None` for a blank page.
    pub structure: Option<BrailleStructure>,
    pub unknown: Vec<UnknownCode>,
    pub warnings: Vec<String>,
}

impl PageResult {
    pub fn is_blank(&self) -> bool {
        self.structure.is_none()
    }
}

/// Translates one page; structural failures are errors, a blank page is
/// an empty result.
pub fn run_page(img: &GrayImage, cfg: &PipelineConfig, table: &MappingTable) -> Result<PageResult> {
    let stages = run_page_stages(img, cfg, table)?;
    if let Some(e) = stages.failure {
        return Err(e);
    }
    if stages.blank {
        return Ok(PageResult {
            text: String::new(),
            structure: None,
            unknown: Vec::new(),
            warnings: Vec::new(),
        });
    }
    let estimate = stages.estimate.expect("structure present on success");
    let translation = stages.translation.expect("translation present on success");
    Ok(PageResult {
        text: translation.text,
        structure: Some(estimate.structure),
        unknown: translation.unknown,
        warnings: estimate.warnings,
    })
}

pub fn run_file(path: &Path, cfg: &PipelineConfig, table: &MappingTable) -> Result<PageResult> {
    run_page(&load_gray(path)?, cfg, table)
}

/// Translates `paths` on a pool of `cfg.jobs` workers. Results come back in
/// input order whatever the thread count.
pub fn translate_batch(
    paths: &[PathBuf],
    cfg: &PipelineConfig,
    table: &MappingTable,
) -> Result<Vec<(PathBuf, Result<PageResult>)>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        paths
            .par_iter()
            .map(|p| (p.clone(), run_file(p, cfg, table)))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{render, SynthSpec};

    #[test]
    fn blank_page_is_empty_result() {
        let img = GrayImage::filled(60, 50, 240);
        let r = run_page(&img, &PipelineConfig::default(), &MappingTable::bengali()).unwrap();
        assert!(r.is_blank());
        assert_eq!(r.text, "");
    }

    #[test]
    fn single_character_page() {
        let (img, _) = render(&SynthSpec::with_text("\u{986}")).unwrap();
        let r = run_page(&img, &PipelineConfig::default(), &MappingTable::bengali()).unwrap();
        assert_eq!(r.text, "\u{986}");
    }

    #[test]
    fn bad_fill_threshold_rejected() {
        let cfg = PipelineConfig {
            fill_threshold: 0.0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
